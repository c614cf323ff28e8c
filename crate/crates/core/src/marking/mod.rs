//! Compilation of a validated process model into a bitmask automaton.
//!
//! Each sequence flow owns one bit of a 256-bit marking, in document order.
//! Externally invoked tasks become guarded transitions; script tasks,
//! unfolded gateways, and end events become auto-transitions that fire to a
//! fixpoint after every external step.

mod closure;
mod dump;

use std::collections::BTreeMap;
use std::fmt;

use ethnum::U256;
use thiserror::Error;

pub use closure::{eager_closure, eager_closure_with, ClosureError, ClosureMode, InvocationHook, NoInvocations};

use crate::ir::{validate_model, Expr, NodeKind, ProcessModel, Statement, TaskInput, Value, VarEnv};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Marking(pub U256);

impl Marking {
    pub const EMPTY: Marking = Marking(U256::ZERO);

    pub fn bit(i: usize) -> Marking {
        assert!(i < 256, "bit index {i} out of range");
        Marking(U256::ONE << (i as u32))
    }

    pub fn from_bits(bits: impl IntoIterator<Item = usize>) -> Marking {
        bits.into_iter().fold(Marking::EMPTY, |m, b| m | Marking::bit(b))
    }

    pub fn is_empty(self) -> bool {
        self.0 == U256::ZERO
    }

    pub fn contains(self, mask: Marking) -> bool {
        self.0 & mask.0 == mask.0
    }

    pub fn intersects(self, other: Marking) -> bool {
        self.0 & other.0 != U256::ZERO
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn without(self, mask: Marking) -> Marking {
        Marking(self.0 & !mask.0)
    }

    pub fn bits(self) -> impl Iterator<Item = usize> {
        (0..256usize).filter(move |&i| (self.0 >> (i as u32)) & U256::ONE == U256::ONE)
    }

    /// `0x`-prefixed lowercase hex, as emitted into generated contracts.
    pub fn hex(self) -> String {
        format!("{:#x}", self.0)
    }
}

impl std::ops::BitOr for Marking {
    type Output = Marking;
    fn bitor(self, rhs: Marking) -> Marking {
        Marking(self.0 | rhs.0)
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Marking({})", self.hex())
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

/// One way a task can fire: consume `pre`, produce `post`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alternative {
    pub pre: Marking,
    pub post: Marking,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalTransition {
    pub task_id: String,
    pub name: String,
    pub kind: NodeKind,
    pub inputs: Vec<TaskInput>,
    pub alternatives: Vec<Alternative>,
    /// Gateways absorbed into this transition's masks.
    pub folded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    Always,
    Condition(Expr),
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub guard: Guard,
    pub post: Marking,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutoTransition {
    pub node_id: String,
    pub name: String,
    pub kind: NodeKind,
    /// Alternative preconditions; the lowest enabled one is consumed.
    pub pre: Vec<Marking>,
    /// One entry for unconditional nodes; one per outgoing flow (document
    /// order) for an exclusive split.
    pub outcomes: Vec<Outcome>,
    pub script: Vec<Statement>,
    pub folded: Vec<String>,
}

impl AutoTransition {
    pub fn is_branching(&self) -> bool {
        self.outcomes.iter().any(|o| o.guard != Guard::Always)
    }

    /// Lowest-index precondition contained in `m`.
    pub fn enabled_alternative(&self, m: Marking) -> Option<usize> {
        self.pre.iter().position(|p| m.contains(*p))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkingAutomaton {
    pub model_id: String,
    /// Bit index → flow id.
    pub flow_ids: Vec<String>,
    /// Outgoing flows of the start event, before closure.
    pub initial_marking: Marking,
    pub external: Vec<ExternalTransition>,
    pub autos: Vec<AutoTransition>,
    /// Bits consumed by end events.
    pub end_mask: Marking,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("model is not valid: {0}")]
    InvalidModel(String),
    #[error("internal invariant violated: {0}")]
    InternalInvariantError(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("task `{0}` is not enabled")]
    NotEnabled(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
}

impl MarkingAutomaton {
    pub fn bit_of(&self, flow_id: &str) -> Option<usize> {
        self.flow_ids.iter().position(|f| f == flow_id)
    }

    pub fn universe(&self) -> Marking {
        Marking::from_bits(0..self.flow_ids.len())
    }

    pub fn external_index(&self, task: &str) -> Option<usize> {
        self.external
            .iter()
            .position(|t| t.name == task)
            .or_else(|| self.external.iter().position(|t| t.task_id == task))
    }

    pub fn dump(&self) -> String {
        dump::render(self)
    }
}

/// Compiles a model. The model must validate without errors.
pub fn compile_marking(model: &ProcessModel) -> Result<MarkingAutomaton, CompileError> {
    let report = validate_model(model);
    if let Some(e) = report.errors().next() {
        return Err(CompileError::InvalidModel(e.to_string()));
    }
    Compiler::new(model).run()
}

struct Compiler<'m> {
    model: &'m ProcessModel,
    bit: BTreeMap<&'m str, usize>,
}

/// A gateway that can be merged into the single successor task.
fn is_pure_join(model: &ProcessModel, gw: &str) -> bool {
    let node = model.node(gw).expect("validated");
    if !node.kind.is_gateway() {
        return false;
    }
    let outs = model.outgoing(gw);
    let ins = model.incoming(gw);
    outs.len() == 1
        && model.flows[outs[0]].condition.is_none()
        && !ins.iter().any(|&i| model.flows[i].source == gw)
}

/// A parallel split that can be merged into its single predecessor task.
fn is_pure_split(model: &ProcessModel, gw: &str) -> bool {
    let node = model.node(gw).expect("validated");
    node.kind == NodeKind::AndGateway && model.incoming(gw).len() == 1 && model.outgoing(gw).len() > 1
}

impl<'m> Compiler<'m> {
    fn new(model: &'m ProcessModel) -> Self {
        let bit = model.flows.iter().enumerate().map(|(i, f)| (f.id.as_str(), i)).collect();
        Compiler { model, bit }
    }

    fn mask(&self, flows: &[usize]) -> Marking {
        Marking::from_bits(flows.iter().map(|&i| self.bit[self.model.flows[i].id.as_str()]))
    }

    /// Folds a task's neighbouring gateways. Returns the alternatives and
    /// the absorbed gateway ids.
    fn task_masks(&self, task: &str) -> (Vec<Alternative>, Vec<String>) {
        let m = self.model;
        let mut folded = Vec::new();
        let ins = m.incoming(task);
        let outs = m.outgoing(task);

        let mut pres = Vec::new();
        match ins.first().map(|&i| &m.flows[i]) {
            Some(f) if self.is_folded_join(&f.source, task) => {
                let gw = m.node(&f.source).expect("validated");
                folded.push(gw.id.clone());
                let gw_ins = m.incoming(&gw.id);
                if gw.kind == NodeKind::AndGateway {
                    pres.push(self.mask(&gw_ins));
                } else {
                    pres.extend(gw_ins.iter().map(|&i| self.mask(&[i])));
                }
            }
            _ => pres.push(self.mask(&ins)),
        }

        let post = match outs.first().map(|&i| &m.flows[i]) {
            Some(f) if self.is_folded_split(&f.target) => {
                folded.push(f.target.clone());
                self.mask(&m.outgoing(&f.target))
            }
            _ => self.mask(&outs),
        };
        (pres.into_iter().map(|pre| Alternative { pre, post }).collect(), folded)
    }

    fn is_folded_join(&self, gw: &str, task: &str) -> bool {
        let m = self.model;
        is_pure_join(m, gw) && m.node(task).is_some_and(|n| n.kind.is_task())
    }

    fn is_folded_split(&self, gw: &str) -> bool {
        let m = self.model;
        if !is_pure_split(m, gw) {
            return false;
        }
        let src = &m.flows[m.incoming(gw)[0]].source;
        m.node(src).is_some_and(|n| n.kind.is_task())
    }

    fn gateway_is_folded(&self, gw: &str) -> bool {
        let m = self.model;
        let outs = m.outgoing(gw);
        (outs.len() == 1 && self.is_folded_join(gw, &m.flows[outs[0]].target)) || self.is_folded_split(gw)
    }

    fn run(self) -> Result<MarkingAutomaton, CompileError> {
        let m = self.model;
        let start = m.start_event().expect("validated");
        let initial_marking = self.mask(&m.outgoing(&start.id));
        let mut external = Vec::new();
        let mut autos = Vec::new();
        let mut end_mask = Marking::EMPTY;

        for n in &m.nodes {
            match n.kind {
                NodeKind::StartEvent => {}
                k if k.is_external() => {
                    let (alternatives, folded) = self.task_masks(&n.id);
                    external.push(ExternalTransition {
                        task_id: n.id.clone(),
                        name: n.label().to_string(),
                        kind: k,
                        inputs: n.inputs.clone(),
                        alternatives,
                        folded,
                    });
                }
                NodeKind::ScriptTask => {
                    let (alts, folded) = self.task_masks(&n.id);
                    let post = alts[0].post;
                    autos.push(AutoTransition {
                        node_id: n.id.clone(),
                        name: n.label().to_string(),
                        kind: n.kind,
                        pre: alts.iter().map(|a| a.pre).collect(),
                        outcomes: vec![Outcome { guard: Guard::Always, post }],
                        script: n.script.clone(),
                        folded,
                    });
                }
                NodeKind::EndEvent => {
                    let ins = m.incoming(&n.id);
                    let pre: Vec<_> = ins.iter().map(|&i| self.mask(&[i])).collect();
                    end_mask = end_mask | self.mask(&ins);
                    autos.push(AutoTransition {
                        node_id: n.id.clone(),
                        name: n.label().to_string(),
                        kind: n.kind,
                        pre,
                        outcomes: vec![Outcome { guard: Guard::Always, post: Marking::EMPTY }],
                        script: vec![],
                        folded: vec![],
                    });
                }
                NodeKind::XorGateway | NodeKind::AndGateway => {
                    if self.gateway_is_folded(&n.id) {
                        continue;
                    }
                    let ins = m.incoming(&n.id);
                    let outs = m.outgoing(&n.id);
                    let pre = if n.kind == NodeKind::AndGateway {
                        vec![self.mask(&ins)]
                    } else {
                        ins.iter().map(|&i| self.mask(&[i])).collect()
                    };
                    let outcomes = if n.kind == NodeKind::AndGateway {
                        vec![Outcome { guard: Guard::Always, post: self.mask(&outs) }]
                    } else if outs.len() == 1 && m.flows[outs[0]].condition.is_none() {
                        vec![Outcome { guard: Guard::Always, post: self.mask(&outs) }]
                    } else {
                        outs.iter()
                            .map(|&i| {
                                let f = &m.flows[i];
                                let guard = match (&f.condition, f.is_default) {
                                    (_, true) => Guard::Default,
                                    (Some(c), false) => Guard::Condition(c.clone()),
                                    (None, false) => Guard::Always,
                                };
                                Outcome { guard, post: self.mask(&[i]) }
                            })
                            .collect()
                    };
                    autos.push(AutoTransition {
                        node_id: n.id.clone(),
                        name: n.label().to_string(),
                        kind: n.kind,
                        pre,
                        outcomes,
                        script: vec![],
                        folded: vec![],
                    });
                }
                _ => unreachable!(),
            }
        }

        let a = MarkingAutomaton {
            model_id: m.id.clone(),
            flow_ids: m.flows.iter().map(|f| f.id.clone()).collect(),
            initial_marking,
            external,
            autos,
            end_mask,
        };
        check_invariants(&a)?;
        Ok(a)
    }
}

/// Structural invariants every compiled automaton satisfies.
pub fn check_invariants(a: &MarkingAutomaton) -> Result<(), CompileError> {
    let fail = |msg: String| Err(CompileError::InternalInvariantError(msg));
    let universe = a.universe();
    if a.initial_marking.is_empty() {
        return fail("empty initial marking".into());
    }
    for t in &a.external {
        if t.alternatives.is_empty() {
            return fail(format!("task `{}` has no alternatives", t.task_id));
        }
        for alt in &t.alternatives {
            if alt.pre.is_empty() || alt.post.is_empty() {
                return fail(format!("task `{}` has an empty mask", t.task_id));
            }
            if !universe.contains(alt.pre) || !universe.contains(alt.post) {
                return fail(format!("task `{}` mask outside the flow universe", t.task_id));
            }
        }
    }
    for t in &a.autos {
        if t.pre.is_empty() || t.pre.iter().any(|p| p.is_empty() || !universe.contains(*p)) {
            return fail(format!("auto-transition `{}` has a bad precondition", t.node_id));
        }
        for o in &t.outcomes {
            if o.post.is_empty() != (t.kind == NodeKind::EndEvent) {
                return fail(format!("auto-transition `{}` has a bad postcondition", t.node_id));
            }
        }
    }
    Ok(())
}

pub fn enabled_external(a: &MarkingAutomaton, m: Marking) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (ti, t) in a.external.iter().enumerate() {
        for (ai, alt) in t.alternatives.iter().enumerate() {
            if m.contains(alt.pre) {
                out.push((ti, ai));
            }
        }
    }
    out
}

/// Fires an external task by name or id. Task inputs in `args` are merged
/// into the environment.
pub fn fire_external(
    a: &MarkingAutomaton,
    m: Marking,
    env: &VarEnv,
    task: &str,
    args: &BTreeMap<String, Value>,
) -> Result<(Marking, VarEnv, usize), FireError> {
    let ti = a.external_index(task).ok_or_else(|| FireError::UnknownTask(task.to_string()))?;
    let t = &a.external[ti];
    let ai = t.alternatives.iter().position(|alt| m.contains(alt.pre)).ok_or_else(|| FireError::NotEnabled(t.name.clone()))?;
    let alt = t.alternatives[ai];
    let mut env = env.clone();
    for (k, v) in args {
        env.insert(k.clone(), v.clone());
    }
    Ok((m.without(alt.pre) | alt.post, env, ai))
}

#[cfg(test)]
mod tests;
