//! Trace generation, noise injection, and conformance classification.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{Deployment, Scenario, TraceEvent};
use crate::ir::ProcessModel;
use crate::marking::MarkingAutomaton;

mod enumerate;
mod experiment;
mod folded;
mod mutate;
mod oracle;
pub mod synth;

pub use enumerate::{enumerate_conforming, select_bases, DEFAULT_STATE_BUDGET};
pub use experiment::{run_experiment, Disagreement, ExperimentConfig, Report, Totals, TraceReport};
pub use folded::FoldedRunner;
pub use mutate::{mutate, mutate_with_rng, Mutation, Operator, OperatorWeights, MAX_MUTATION_ATTEMPTS};
pub use oracle::TokenGame;

pub type Trace = Vec<TraceEvent>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("trace line {line}: {message}")]
    TraceSyntax { line: usize, message: String },
    #[error("search exceeded the state budget of {0}")]
    BudgetExceeded(usize),
    #[error("no mutant different from the base traces after {0} attempts")]
    MutationExhausted(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial automatic steps failed: {0}")]
    InitialClosure(String),
}

/// Parses a JSON-lines trace; blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<Trace, HarnessError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::TraceSyntax { line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn render_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
        out.push('\n');
    }
    out
}

pub fn task_names(trace: &Trace) -> Vec<String> {
    trace.iter().map(|e| e.task.clone()).collect()
}

pub fn trace_of(tasks: &[&str]) -> Trace {
    tasks.iter().map(|t| TraceEvent::task(t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The trace must also complete the process.
    Strict,
    /// Every event must be accepted; completion is not required.
    Prefix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// Index of the first event that could not be accepted.
    At(usize),
    EndNotReached,
    /// The instance could not be set up for a data-bearing trace.
    Setup(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Conforming,
    NonConforming(Failure),
}

impl Verdict {
    pub fn is_conforming(&self) -> bool {
        *self == Verdict::Conforming
    }

    pub fn first_bad_index(&self) -> Option<usize> {
        match self {
            Verdict::NonConforming(Failure::At(i)) => Some(*i),
            _ => None,
        }
    }
}

/// Registries and setup used when a trace carries arguments.
#[derive(Debug, Clone)]
pub struct World {
    pub deployment: Deployment,
    pub scenario: Scenario,
}

/// Classifies a trace with the interpreter. Traces with arguments run in
/// data mode against a fork of `world` (or an empty deployment); the rest
/// use a search over every exclusive-branch outcome.
pub fn classify(model: &ProcessModel, a: &MarkingAutomaton, trace: &Trace, mode: Mode, world: Option<&World>) -> Verdict {
    if trace.iter().any(|e| e.args.is_some()) {
        classify_data(model, a, trace, mode, world)
    } else {
        let runner = match FoldedRunner::new(a) {
            Ok(r) => r,
            Err(e) => return Verdict::NonConforming(Failure::Setup(e.to_string())),
        };
        runner.classify(trace, mode)
    }
}

fn classify_data(model: &ProcessModel, a: &MarkingAutomaton, trace: &Trace, mode: Mode, world: Option<&World>) -> Verdict {
    let owned;
    let world = match world {
        Some(w) => w,
        None => {
            let deployment = match Deployment::deploy(model, &[], crate::interp::default_deployer()) {
                Ok(d) => d,
                Err(e) => return Verdict::NonConforming(Failure::Setup(e.to_string())),
            };
            owned = World { deployment, scenario: Scenario::default() };
            &owned
        }
    };
    let deployment = world.deployment.fork();
    let mut instance = match deployment.instantiate(model, a, &world.scenario, 0) {
        Ok(i) => i,
        Err(e) => return Verdict::NonConforming(Failure::Setup(e.to_string())),
    };
    for (i, event) in trace.iter().enumerate() {
        if !instance.invoke_event(event).is_accepted() {
            return Verdict::NonConforming(Failure::At(i));
        }
    }
    if mode == Mode::Strict && !instance.is_completed() {
        return Verdict::NonConforming(Failure::EndNotReached);
    }
    Verdict::Conforming
}

/// Classifies a trace with the unfolded token game; arguments are ignored.
pub fn oracle_classify(model: &ProcessModel, trace: &Trace, mode: Mode) -> Verdict {
    TokenGame::new(model).classify(trace, mode)
}

/// Shared acceptor walk used by both classifiers.
pub(crate) fn walk<S: Ord + Clone>(
    init: BTreeSet<S>,
    trace: &Trace,
    mode: Mode,
    step: impl Fn(&BTreeSet<S>, &str) -> BTreeSet<S>,
    is_final: impl Fn(&BTreeSet<S>) -> bool,
) -> Verdict {
    let mut states = init;
    for (i, e) in trace.iter().enumerate() {
        states = step(&states, &e.task);
        if states.is_empty() {
            return Verdict::NonConforming(Failure::At(i));
        }
    }
    if mode == Mode::Strict && !is_final(&states) {
        return Verdict::NonConforming(Failure::EndNotReached);
    }
    Verdict::Conforming
}

#[cfg(test)]
mod tests;
