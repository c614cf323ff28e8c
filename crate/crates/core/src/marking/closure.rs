use std::collections::BTreeSet;

use thiserror::Error;

use super::{Guard, Marking, MarkingAutomaton};
use crate::ir::{eval_expr, exec_statements, EvalError, Value, VarEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClosureMode {
    /// Guards and scripts are evaluated against the environment.
    Data,
    /// Every exclusive branch is explored; scripts and invocations are
    /// skipped and the environment is left unchanged.
    NonDeterministic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClosureError {
    #[error("no outgoing branch of `{0}` can be taken")]
    NoBranchTaken(String),
    #[error("automatic steps did not settle within {0} firings")]
    NonTerminatingClosure(usize),
    #[error("script `{node}` failed: {source}")]
    Script {
        node: String,
        #[source]
        source: EvalError,
    },
    #[error("condition on a branch of `{node}` failed: {message}")]
    Guard { node: String, message: String },
    #[error("contract call from `{node}` failed: {message}")]
    Invocation { node: String, message: String },
}

/// Runs the contract invocations bound to an automatically fired node.
pub trait InvocationHook {
    fn invoke(&mut self, node_id: &str, env: &mut VarEnv) -> Result<(), String>;
}

pub struct NoInvocations;

impl InvocationHook for NoInvocations {
    fn invoke(&mut self, _: &str, _: &mut VarEnv) -> Result<(), String> {
        Ok(())
    }
}

/// Fires enabled auto-transitions to a fixpoint. Data mode yields exactly
/// one outcome; non-deterministic mode yields every reachable fixpoint,
/// sorted by marking.
pub fn eager_closure(
    a: &MarkingAutomaton,
    m: Marking,
    env: &VarEnv,
    mode: ClosureMode,
) -> Result<Vec<(Marking, VarEnv)>, ClosureError> {
    match mode {
        ClosureMode::Data => eager_closure_with(a, m, env, &mut NoInvocations).map(|(m, e, _)| vec![(m, e)]),
        ClosureMode::NonDeterministic => {
            Ok(nondeterministic(a, m)?.into_iter().map(|m| (m, env.clone())).collect())
        }
    }
}

/// Data-mode closure with contract invocations. Also returns the ids of
/// the fired auto-transitions in firing order.
pub fn eager_closure_with(
    a: &MarkingAutomaton,
    mut m: Marking,
    env: &VarEnv,
    hook: &mut dyn InvocationHook,
) -> Result<(Marking, VarEnv, Vec<String>), ClosureError> {
    let mut env = env.clone();
    let budget = 4 * a.flow_ids.len();
    let mut fired = Vec::new();
    loop {
        let Some((t, alt)) = a.autos.iter().find_map(|t| t.enabled_alternative(m).map(|i| (t, i))) else {
            return Ok((m, env, fired));
        };
        if fired.len() >= budget {
            return Err(ClosureError::NonTerminatingClosure(budget));
        }
        m = m.without(t.pre[alt]);
        exec_statements(&t.script, &mut env)
            .map_err(|source| ClosureError::Script { node: t.node_id.clone(), source })?;
        hook.invoke(&t.node_id, &mut env)
            .map_err(|message| ClosureError::Invocation { node: t.node_id.clone(), message })?;
        let post = choose(t, &env)?;
        m = m | post;
        fired.push(t.node_id.clone());
    }
}

fn choose(t: &super::AutoTransition, env: &VarEnv) -> Result<Marking, ClosureError> {
    let mut default = None;
    for o in &t.outcomes {
        match &o.guard {
            Guard::Always => return Ok(o.post),
            Guard::Default => default = Some(o.post),
            Guard::Condition(c) => match eval_expr(c, env) {
                Ok(Value::Bool(true)) => return Ok(o.post),
                Ok(Value::Bool(false)) => {}
                Ok(v) => {
                    return Err(ClosureError::Guard {
                        node: t.node_id.clone(),
                        message: format!("condition `{c}` produced {}", v.ty()),
                    })
                }
                Err(e) => return Err(ClosureError::Guard { node: t.node_id.clone(), message: e.to_string() }),
            },
        }
    }
    default.ok_or_else(|| ClosureError::NoBranchTaken(t.node_id.clone()))
}

fn nondeterministic(a: &MarkingAutomaton, m: Marking) -> Result<BTreeSet<Marking>, ClosureError> {
    let mut seen = BTreeSet::from([m]);
    let mut stack = vec![m];
    let mut out = BTreeSet::new();
    while let Some(cur) = stack.pop() {
        let Some((t, alt)) = a.autos.iter().find_map(|t| t.enabled_alternative(cur).map(|i| (t, i))) else {
            out.insert(cur);
            continue;
        };
        let base = cur.without(t.pre[alt]);
        for o in &t.outcomes {
            let next = base | o.post;
            if seen.insert(next) {
                stack.push(next);
            }
        }
    }
    if out.is_empty() {
        return Err(ClosureError::NonTerminatingClosure(seen.len()));
    }
    Ok(out)
}
