use std::collections::BTreeSet;

use super::{FoldedRunner, HarnessError, Mode, Trace};
use crate::interp::TraceEvent;
use crate::marking::{Marking, MarkingAutomaton};

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

/// Every task sequence of length at most `max_len` accepted from the
/// initial marking, in depth-first order with tasks tried in model order.
/// Strict mode keeps only sequences that complete the process.
pub fn enumerate_conforming(a: &MarkingAutomaton, max_len: usize, mode: Mode, budget: usize) -> Result<Vec<Trace>, HarnessError> {
    let runner = FoldedRunner::new(a).map_err(|e| HarnessError::InitialClosure(e.to_string()))?;
    let mut search = Search { runner: &runner, a, max_len, mode, budget, visited: 0, out: Vec::new(), prefix: Vec::new() };
    search.dfs(runner.initial())?;
    Ok(search.out)
}

struct Search<'r, 'a> {
    runner: &'r FoldedRunner<'a>,
    a: &'a MarkingAutomaton,
    max_len: usize,
    mode: Mode,
    budget: usize,
    visited: usize,
    out: Vec<Trace>,
    prefix: Vec<usize>,
}

impl Search<'_, '_> {
    fn dfs(&mut self, states: BTreeSet<Marking>) -> Result<(), HarnessError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(HarnessError::BudgetExceeded(self.budget));
        }
        if self.mode == Mode::Prefix || self.runner.is_final(&states) {
            self.out.push(self.prefix.iter().map(|&t| TraceEvent::task(&self.a.external[t].name)).collect());
        }
        if self.prefix.len() == self.max_len {
            return Ok(());
        }
        for t in 0..self.a.external.len() {
            let next = self.runner.step(&states, &self.a.external[t].name);
            if next.is_empty() {
                continue;
            }
            self.prefix.push(t);
            self.dfs(next)?;
            self.prefix.pop();
        }
        Ok(())
    }
}

/// Picks `n` base traces: first one per distinct multiset of tasks (so
/// interleavings of the same run collapse), then further traces in order.
pub fn select_bases(traces: &[Trace], n: usize) -> Vec<Trace> {
    let mut seen = BTreeSet::new();
    let mut chosen: Vec<usize> = Vec::new();
    for (i, t) in traces.iter().enumerate() {
        let mut key: Vec<&str> = t.iter().map(|e| e.task.as_str()).collect();
        key.sort_unstable();
        if seen.insert(key) {
            chosen.push(i);
        }
    }
    for i in 0..traces.len() {
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    chosen.into_iter().take(n).map(|i| traces[i].clone()).collect()
}
