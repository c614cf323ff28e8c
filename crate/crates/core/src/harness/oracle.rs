use std::collections::{BTreeSet, VecDeque};

use super::{walk, Mode, Trace, Verdict};
use crate::ir::{NodeKind, ProcessModel};

/// Set of flow indices holding a token.
type Tokens = BTreeSet<usize>;

/// Brute-force token game played directly on the model graph. Nothing is
/// folded: gateways, script tasks and end events are silent moves that
/// may fire in any order, and an external task is accepted when some
/// silently reachable state enables it.
#[derive(Debug, Clone)]
pub struct TokenGame<'m> {
    model: &'m ProcessModel,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    silent: Vec<usize>,
}

impl<'m> TokenGame<'m> {
    pub fn new(model: &'m ProcessModel) -> TokenGame<'m> {
        let mut incoming = vec![Vec::new(); model.nodes.len()];
        let mut outgoing = vec![Vec::new(); model.nodes.len()];
        for (i, f) in model.flows.iter().enumerate() {
            if let Some(n) = model.node_index(&f.target) {
                incoming[n].push(i);
            }
            if let Some(n) = model.node_index(&f.source) {
                outgoing[n].push(i);
            }
        }
        let silent = (0..model.nodes.len())
            .filter(|&n| !model.nodes[n].kind.is_external() && model.nodes[n].kind != NodeKind::StartEvent)
            .collect();
        TokenGame { model, incoming, outgoing, silent }
    }

    pub fn initial(&self) -> BTreeSet<Tokens> {
        let mut s = Tokens::new();
        for (n, node) in self.model.nodes.iter().enumerate() {
            if node.kind == NodeKind::StartEvent {
                s.extend(self.outgoing[n].iter().copied());
            }
        }
        self.saturate(BTreeSet::from([s]))
    }

    fn resolve(&self, task: &str) -> Option<usize> {
        let ext = |n: &usize| self.model.nodes[*n].kind.is_external();
        let all = 0..self.model.nodes.len();
        all.clone().filter(ext).find(|&n| self.model.nodes[n].name == task).or_else(|| all.filter(ext).find(|&n| self.model.nodes[n].id == task))
    }

    /// Every successor of `s` when node `n` fires once.
    fn fire(&self, n: usize, s: &Tokens) -> Vec<Tokens> {
        let inc = &self.incoming[n];
        let out = &self.outgoing[n];
        match self.model.nodes[n].kind {
            NodeKind::StartEvent => Vec::new(),
            NodeKind::AndGateway => {
                if inc.is_empty() || !inc.iter().all(|f| s.contains(f)) {
                    return Vec::new();
                }
                let mut next: Tokens = s.difference(&inc.iter().copied().collect()).copied().collect();
                next.extend(out.iter().copied());
                vec![next]
            }
            NodeKind::XorGateway => {
                let mut v = Vec::new();
                for f in inc.iter().filter(|f| s.contains(f)) {
                    for g in out {
                        let mut next = s.clone();
                        next.remove(f);
                        next.insert(*g);
                        v.push(next);
                    }
                }
                v
            }
            NodeKind::EndEvent | NodeKind::DefaultTask | NodeKind::UserTask | NodeKind::ScriptTask => inc
                .iter()
                .filter(|f| s.contains(f))
                .map(|f| {
                    let mut next = s.clone();
                    next.remove(f);
                    next.extend(out.iter().copied());
                    next
                })
                .collect(),
        }
    }

    /// All states reachable through silent moves, the inputs included.
    fn saturate(&self, states: BTreeSet<Tokens>) -> BTreeSet<Tokens> {
        let mut seen = states.clone();
        let mut queue: VecDeque<Tokens> = states.into_iter().collect();
        while let Some(s) = queue.pop_front() {
            for &n in &self.silent {
                for next in self.fire(n, &s) {
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
        seen
    }

    pub fn step(&self, states: &BTreeSet<Tokens>, task: &str) -> BTreeSet<Tokens> {
        let Some(n) = self.resolve(task) else {
            return BTreeSet::new();
        };
        let fired: BTreeSet<Tokens> = states.iter().flat_map(|s| self.fire(n, s)).collect();
        if fired.is_empty() {
            return fired;
        }
        self.saturate(fired)
    }

    pub fn is_final(&self, states: &BTreeSet<Tokens>) -> bool {
        states.iter().any(|s| s.is_empty())
    }

    pub fn classify(&self, trace: &Trace, mode: Mode) -> Verdict {
        walk(self.initial(), trace, mode, |s, t| self.step(s, t), |s| self.is_final(s))
    }
}
