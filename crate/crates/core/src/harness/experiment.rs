use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    classify, enumerate_conforming, mutate_with_rng, select_bases, task_names, Failure, HarnessError, Mode, Operator,
    OperatorWeights, TokenGame, Trace, Verdict, World, DEFAULT_STATE_BUDGET,
};
use crate::ir::ProcessModel;
use crate::marking::MarkingAutomaton;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub base_traces: usize,
    pub mutants_per_base: usize,
    pub seed: u64,
    pub weights: OperatorWeights,
    pub mode: Mode,
    /// Longest base trace searched for; defaults to the number of
    /// external tasks.
    pub max_len: Option<usize>,
    pub state_budget: usize,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            base_traces: 2,
            mutants_per_base: 250,
            seed: 42,
            weights: OperatorWeights::default(),
            mode: Mode::Strict,
            max_len: None,
            state_budget: DEFAULT_STATE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Totals {
    pub conforming: usize,
    pub non_conforming: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Disagreement {
    pub index: usize,
    pub tasks: Vec<String>,
    pub interpreter: String,
    pub oracle: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceReport {
    pub index: usize,
    /// Index of the base trace this one is, or was derived from.
    pub base: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<Operator>,
    pub tasks: Vec<String>,
    pub conforming: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_bad_index: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub end_not_reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub seed: u64,
    pub model: String,
    pub tasks: usize,
    pub gateways: usize,
    pub mode: Mode,
    pub base_traces: usize,
    pub mutants_per_base: usize,
    pub operator_weights: OperatorWeights,
    pub trace_count: usize,
    pub totals: Totals,
    pub correctness_pct: f64,
    pub disagreements: Vec<Disagreement>,
    /// Wall-clock time; the only field that varies between identical runs.
    pub elapsed_ms: u64,
    pub traces: Vec<TraceReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn describe(v: &Verdict) -> String {
    match v {
        Verdict::Conforming => "conforming".into(),
        Verdict::NonConforming(Failure::At(i)) => format!("nonConforming at {i}"),
        Verdict::NonConforming(Failure::EndNotReached) => "nonConforming (end not reached)".into(),
        Verdict::NonConforming(Failure::Setup(m)) => format!("nonConforming (setup: {m})"),
    }
}

/// Builds base traces and mutants, classifies each with the interpreter
/// and with the token-game oracle, and reports agreement.
pub fn run_experiment(model: &ProcessModel, a: &MarkingAutomaton, cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let started = Instant::now();
    cfg.weights.validate()?;
    let max_len = cfg.max_len.unwrap_or(a.external.len());
    let conforming = enumerate_conforming(a, max_len, cfg.mode, cfg.state_budget)?;
    let bases = select_bases(&conforming, cfg.base_traces);
    if bases.is_empty() {
        return Err(HarnessError::InvalidConfig("the model has no conforming trace within the length bound".into()));
    }
    let alphabet: Vec<String> = a.external.iter().map(|t| t.name.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut all: Vec<(usize, Option<Operator>, Trace)> = bases.iter().enumerate().map(|(i, t)| (i, None, t.clone())).collect();
    for (bi, base) in bases.iter().enumerate() {
        for _ in 0..cfg.mutants_per_base {
            let m = mutate_with_rng(base, &mut rng, cfg.weights, &alphabet, &bases)?;
            all.push((bi, Some(m.operator), m.trace));
        }
    }

    let oracle = TokenGame::new(model);
    let mut traces = Vec::with_capacity(all.len());
    let mut disagreements = Vec::new();
    let mut totals = Totals { conforming: 0, non_conforming: 0 };
    for (index, (base, operator, trace)) in all.into_iter().enumerate() {
        let verdict = classify(model, a, &trace, cfg.mode, None::<&World>);
        let reference = oracle.classify(&trace, cfg.mode);
        let tasks = task_names(&trace);
        if verdict.is_conforming() != reference.is_conforming() {
            disagreements.push(Disagreement {
                index,
                tasks: tasks.clone(),
                interpreter: describe(&verdict),
                oracle: describe(&reference),
            });
        }
        if verdict.is_conforming() {
            totals.conforming += 1;
        } else {
            totals.non_conforming += 1;
        }
        traces.push(TraceReport {
            index,
            base,
            operator,
            tasks,
            conforming: verdict.is_conforming(),
            first_bad_index: verdict.first_bad_index(),
            end_not_reached: verdict == Verdict::NonConforming(Failure::EndNotReached),
        });
    }
    let n = traces.len();
    let agreed = n - disagreements.len();
    Ok(Report {
        seed: cfg.seed,
        model: model.id.clone(),
        tasks: model.task_count(),
        gateways: model.gateway_count(),
        mode: cfg.mode,
        base_traces: bases.len(),
        mutants_per_base: cfg.mutants_per_base,
        operator_weights: cfg.weights,
        trace_count: n,
        totals,
        correctness_pct: 100.0 * agreed as f64 / n as f64,
        disagreements,
        elapsed_ms: started.elapsed().as_millis() as u64,
        traces,
    })
}
