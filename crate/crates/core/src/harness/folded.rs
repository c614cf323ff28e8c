use std::collections::BTreeSet;

use super::{walk, Mode, Trace, Verdict};
use crate::ir::VarEnv;
use crate::marking::{eager_closure, ClosureError, ClosureMode, Marking, MarkingAutomaton};

/// Acceptor over the compiled automaton: external tasks fire by mask, and
/// the eager closure explores every exclusive-branch outcome.
#[derive(Debug, Clone)]
pub struct FoldedRunner<'a> {
    a: &'a MarkingAutomaton,
    initial: BTreeSet<Marking>,
}

impl<'a> FoldedRunner<'a> {
    pub fn new(a: &'a MarkingAutomaton) -> Result<FoldedRunner<'a>, ClosureError> {
        let initial = close(a, a.initial_marking)?;
        Ok(FoldedRunner { a, initial })
    }

    pub fn initial(&self) -> BTreeSet<Marking> {
        self.initial.clone()
    }

    /// Markings reachable by firing `task` from any of `states`. Firing
    /// follows the interpreter: the lowest enabled alternative is used.
    pub fn step(&self, states: &BTreeSet<Marking>, task: &str) -> BTreeSet<Marking> {
        let Some(ti) = self.a.external_index(task) else {
            return BTreeSet::new();
        };
        let t = &self.a.external[ti];
        let mut out = BTreeSet::new();
        for &m in states {
            if let Some(alt) = t.alternatives.iter().find(|alt| m.contains(alt.pre)) {
                if let Ok(next) = close(self.a, m.without(alt.pre) | alt.post) {
                    out.extend(next);
                }
            }
        }
        out
    }

    pub fn is_final(&self, states: &BTreeSet<Marking>) -> bool {
        states.iter().any(|m| m.is_empty())
    }

    pub fn classify(&self, trace: &Trace, mode: Mode) -> Verdict {
        walk(self.initial(), trace, mode, |s, t| self.step(s, t), |s| self.is_final(s))
    }
}

fn close(a: &MarkingAutomaton, m: Marking) -> Result<BTreeSet<Marking>, ClosureError> {
    Ok(eager_closure(a, m, &VarEnv::new(), ClosureMode::NonDeterministic)?.into_iter().map(|(m, _)| m).collect())
}
