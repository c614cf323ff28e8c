use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HarnessError, Trace};
use crate::interp::TraceEvent;

pub const MAX_MUTATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    /// Insert a task drawn from the alphabet.
    Add,
    /// Drop one event.
    Remove,
    /// Exchange two events.
    Swap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorWeights {
    pub add: u32,
    pub remove: u32,
    pub swap: u32,
}

impl Default for OperatorWeights {
    fn default() -> OperatorWeights {
        OperatorWeights { add: 1, remove: 1, swap: 1 }
    }
}

impl OperatorWeights {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.add == 0 && self.remove == 0 && self.swap == 0 {
            return Err(HarnessError::InvalidConfig("operator weights are all zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutation {
    pub trace: Trace,
    pub operator: Operator,
}

/// Seeded convenience over [`mutate_with_rng`].
pub fn mutate(t: &Trace, seed: u64, weights: OperatorWeights, alphabet: &[String], bases: &[Trace]) -> Result<Mutation, HarnessError> {
    mutate_with_rng(t, &mut ChaCha8Rng::seed_from_u64(seed), weights, alphabet, bases)
}

/// Applies one operator to `t`, resampling until the result differs from
/// every trace in `bases`.
pub fn mutate_with_rng(
    t: &Trace,
    rng: &mut ChaCha8Rng,
    weights: OperatorWeights,
    alphabet: &[String],
    bases: &[Trace],
) -> Result<Mutation, HarnessError> {
    weights.validate()?;
    for _ in 0..MAX_MUTATION_ATTEMPTS {
        let applicable = [
            (Operator::Add, if alphabet.is_empty() { 0 } else { weights.add }),
            (Operator::Remove, if t.is_empty() { 0 } else { weights.remove }),
            (Operator::Swap, if t.len() < 2 { 0 } else { weights.swap }),
        ];
        let Ok(dist) = WeightedIndex::new(applicable.iter().map(|(_, w)| *w)) else {
            continue;
        };
        let operator = applicable[dist.sample(rng)].0;
        let mut out = t.clone();
        match operator {
            Operator::Add => {
                let task = &alphabet[rng.gen_range(0..alphabet.len())];
                let at = rng.gen_range(0..=out.len());
                out.insert(at, TraceEvent::task(task));
            }
            Operator::Remove => {
                out.remove(rng.gen_range(0..out.len()));
            }
            Operator::Swap => {
                let i = rng.gen_range(0..out.len());
                let mut j = rng.gen_range(0..out.len() - 1);
                if j >= i {
                    j += 1;
                }
                out.swap(i, j);
            }
        }
        if !bases.contains(&out) {
            return Ok(Mutation { trace: out, operator });
        }
    }
    Err(HarnessError::MutationExhausted(MAX_MUTATION_ATTEMPTS))
}
