//! In-memory execution of process instances against simulated registries.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{
    eval_expr_as, Address, BindingSource, EvalError, NodeKind, ProcessModel, Value, VarEnv,
};
use crate::marking::{eager_closure_with, fire_external, ClosureError, FireError, InvocationHook, Marking, MarkingAutomaton};

pub mod ledger;
pub mod records;
pub mod registry;
pub mod scenario;

pub use ledger::{FungibleLedger, LedgerError};
pub use records::{create_address, HistoryEntry, NonFungibleStore, Record, RecordError};
pub use registry::{fungible_functions, nonfungible_functions, FnSig, Registry, RegistryError};
pub use scenario::{default_deployer, Deployment, DeploymentError, Scenario, SetupCall};

pub type SharedRegistry = Arc<Mutex<Registry>>;

fn lock(r: &SharedRegistry) -> MutexGuard<'_, Registry> {
    r.lock().unwrap_or_else(|e| e.into_inner())
}

/// Simulated registries keyed by their account address. Clones share the
/// underlying registries.
#[derive(Debug, Clone, Default)]
pub struct RegistrySet {
    map: BTreeMap<Address, SharedRegistry>,
}

impl RegistrySet {
    pub fn new() -> RegistrySet {
        RegistrySet::default()
    }

    pub fn insert(&mut self, address: Address, registry: Registry) {
        self.map.insert(address, Arc::new(Mutex::new(registry)));
    }

    pub fn get(&self, address: Address) -> Option<&SharedRegistry> {
        self.map.get(&address)
    }

    pub fn addresses(&self) -> impl Iterator<Item = Address> + '_ {
        self.map.keys().copied()
    }

    /// Runs `f` with exclusive access to one registry.
    pub fn with<R>(&self, address: Address, f: impl FnOnce(&mut Registry) -> R) -> Option<R> {
        self.map.get(&address).map(|r| f(&mut lock(r)))
    }

    pub fn call(&self, address: Address, caller: Address, function: &str, args: &[Value]) -> Result<Vec<Value>, RegistryError> {
        self.with(address, |r| r.call(caller, function, args))
            .unwrap_or_else(|| Err(RegistryError::UnknownFunction(format!("{function} (no registry at {address})"))))
    }

    /// Deep copy of every registry state, ordered by address.
    pub fn snapshot(&self) -> Vec<(Address, Registry)> {
        self.map.iter().map(|(a, r)| (*a, lock(r).clone())).collect()
    }
}

/// One task invocation: the unit of a trace and of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caller: Option<Address>,
}

impl TraceEvent {
    pub fn task(name: &str) -> TraceEvent {
        TraceEvent { task: name.to_string(), args: None, caller: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub node: String,
    pub registry: Address,
    pub function: String,
    pub args: Vec<Value>,
    pub outputs: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("task `{0}` is not enabled")]
    NotEnabled(String),
    #[error("no external task `{0}`")]
    UnknownTask(String),
    #[error("bad arguments: {0}")]
    BadArguments(String),
    #[error("`{function}` called from `{node}` failed: {error}")]
    RegistryError { node: String, function: String, error: RegistryError },
    #[error("cannot bind call from `{node}`: {message}")]
    BindingError { node: String, message: String },
    #[error("script `{node}` failed: {source}")]
    ScriptError {
        node: String,
        #[source]
        source: EvalError,
    },
    #[error("no outgoing branch of `{0}` can be taken")]
    NoBranchTaken(String),
    #[error("automatic steps did not settle within {0} firings")]
    NonTerminatingClosure(usize),
    #[error("condition on a branch of `{node}` failed: {message}")]
    GuardError { node: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Accepted { auto_fired: Vec<String>, calls: Vec<CallRecord> },
    Rejected(RejectReason),
}

impl Outcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Accepted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub event: TraceEvent,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Running,
    RunningWithRejections,
    /// Holds the id of the last end event reached.
    Completed(String),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Running => f.write_str("running"),
            Status::RunningWithRejections => f.write_str("running (with rejected invocations)"),
            Status::Completed(e) => write!(f, "completed at {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("interface `{0}` has no contract address and no binding was supplied")]
    MissingAddressBinding(String),
    #[error("interface `{interface}` is bound to {address}, where no registry is deployed")]
    UnknownRegistryAddress { interface: String, address: Address },
    #[error("interface `{interface}` function `{function}` does not match the registry: {message}")]
    SignatureMismatch { interface: String, function: String, message: String },
    #[error("initial automatic steps failed: {0}")]
    InitialClosure(RejectReason),
}

/// A running process instance.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub model: &'a ProcessModel,
    pub automaton: &'a MarkingAutomaton,
    pub marking: Marking,
    pub env: VarEnv,
    pub status: Status,
    pub event_log: Vec<LogEntry>,
    pub process_address: Address,
    /// Interface id to registry address.
    pub bindings: BTreeMap<String, Address>,
    pub registries: RegistrySet,
    last_end: Option<String>,
    fault_after: Option<usize>,
}

/// Deterministic account identity of the `nonce`-th instance of a model.
pub fn instance_address(model_id: &str, nonce: u64) -> Address {
    Address::derive(&[b"process-instance:", model_id.as_bytes(), &nonce.to_be_bytes()])
}

/// Creates an instance and runs the initial automatic steps.
pub fn new_instance<'a>(
    model: &'a ProcessModel,
    automaton: &'a MarkingAutomaton,
    address_bindings: &BTreeMap<String, Address>,
    registries: RegistrySet,
    process_address: Address,
) -> Result<Instance<'a>, InstanceError> {
    let mut bindings = BTreeMap::new();
    for iface in &model.interfaces {
        let address = match iface.contract_address {
            Some(a) => a,
            None => *address_bindings
                .get(&iface.id)
                .ok_or_else(|| InstanceError::MissingAddressBinding(iface.id.clone()))?,
        };
        let Some(shared) = registries.get(address) else {
            return Err(InstanceError::UnknownRegistryAddress { interface: iface.id.clone(), address });
        };
        let reg = lock(shared);
        for inv in model.invocations.iter().filter(|i| i.target_interface == iface.id) {
            let decl = iface.function(&inv.fn_name).expect("validated model");
            let mismatch = |message: String| InstanceError::SignatureMismatch {
                interface: iface.id.clone(),
                function: inv.fn_name.clone(),
                message,
            };
            let actual = reg.function(&inv.fn_name).ok_or_else(|| mismatch(format!("{} has no such function", reg.contract_name())))?;
            let want_in: Vec<_> = decl.inputs.iter().map(|p| p.ty).collect();
            let have_in: Vec<_> = actual.inputs.iter().map(|p| p.1).collect();
            if want_in != have_in {
                return Err(mismatch(format!("inputs {} vs {}", types(&want_in), types(&have_in))));
            }
            let want_out: Vec<_> = decl.outputs.iter().map(|p| p.ty).collect();
            let have_out: Vec<_> = actual.outputs.iter().map(|p| p.1).collect();
            if !have_out.starts_with(&want_out) {
                return Err(mismatch(format!("outputs {} vs {}", types(&want_out), types(&have_out))));
            }
        }
        bindings.insert(iface.id.clone(), address);
    }
    let mut inst = Instance {
        model,
        automaton,
        marking: automaton.initial_marking,
        env: model.initial_env(),
        status: Status::Running,
        event_log: Vec::new(),
        process_address,
        bindings,
        registries,
        last_end: None,
        fault_after: None,
    };
    inst.run_transaction(None).map_err(InstanceError::InitialClosure)?;
    Ok(inst)
}

fn types(v: &[crate::ir::ValueType]) -> String {
    let names: Vec<_> = v.iter().map(|t| t.name()).collect();
    format!("({})", names.join(", "))
}

struct CallContext<'s, 'g> {
    inst: &'s Instance<'s>,
    guards: &'s mut BTreeMap<Address, MutexGuard<'g, Registry>>,
    calls: Vec<CallRecord>,
    fault_after: Option<usize>,
    failure: Option<RejectReason>,
}

impl CallContext<'_, '_> {
    fn run_node(&mut self, node_id: &str, env: &mut VarEnv) -> Result<(), RejectReason> {
        let model = self.inst.model;
        for inv in model.invocations_of(node_id) {
            let iface = model.interface(&inv.target_interface).expect("validated model");
            let decl = iface.function(&inv.fn_name).expect("validated model");
            let bind_err = |message: String| RejectReason::BindingError { node: node_id.to_string(), message };
            let mut args = Vec::with_capacity(decl.inputs.len());
            for p in &decl.inputs {
                let b = inv.input_bindings.iter().find(|b| b.param == p.name).expect("validated model");
                let v = match &b.source {
                    BindingSource::ProcessAddress => Value::Address(self.inst.process_address),
                    BindingSource::Variable(name) => env
                        .get(name)
                        .cloned()
                        .ok_or_else(|| bind_err(format!("`{name}` has no value")))?,
                    BindingSource::Constant(e) => {
                        eval_expr_as(e, &VarEnv::new(), p.ty).map_err(|e| bind_err(e.to_string()))?
                    }
                };
                if v.ty() != p.ty {
                    return Err(bind_err(format!("`{}` expects {}, got {}", p.name, p.ty, v.ty())));
                }
                args.push(v);
            }
            let address = self.inst.bindings[&iface.id];
            if self.fault_after == Some(self.calls.len()) {
                return Err(RejectReason::RegistryError {
                    node: node_id.to_string(),
                    function: inv.fn_name.clone(),
                    error: RegistryError::BadArguments { function: inv.fn_name.clone(), message: "injected fault".into() },
                });
            }
            let reg = self.guards.get_mut(&address).expect("bound registries are locked");
            let outputs = reg.call(self.inst.process_address, &inv.fn_name, &args).map_err(|error| {
                RejectReason::RegistryError { node: node_id.to_string(), function: inv.fn_name.clone(), error }
            })?;
            for rb in &inv.output_bindings {
                let pos = decl.outputs.iter().position(|o| o.name == rb.output).expect("validated model");
                env.insert(rb.target.clone(), outputs[pos].clone());
            }
            self.calls.push(CallRecord {
                node: node_id.to_string(),
                registry: address,
                function: inv.fn_name.clone(),
                args,
                outputs,
            });
        }
        Ok(())
    }
}

impl InvocationHook for CallContext<'_, '_> {
    fn invoke(&mut self, node_id: &str, env: &mut VarEnv) -> Result<(), String> {
        self.run_node(node_id, env).map_err(|e| {
            let msg = e.to_string();
            self.failure = Some(e);
            msg
        })
    }
}

fn closure_reason(e: ClosureError) -> RejectReason {
    match e {
        ClosureError::NoBranchTaken(n) => RejectReason::NoBranchTaken(n),
        ClosureError::NonTerminatingClosure(n) => RejectReason::NonTerminatingClosure(n),
        ClosureError::Script { node, source } => RejectReason::ScriptError { node, source },
        ClosureError::Guard { node, message } => RejectReason::GuardError { node, message },
        ClosureError::Invocation { node, message } => RejectReason::BindingError { node, message },
    }
}

impl<'a> Instance<'a> {
    pub fn is_completed(&self) -> bool {
        matches!(self.status, Status::Completed(_))
    }

    /// Makes the next invocation fail after `calls` successful registry
    /// calls. Used to exercise rollback.
    #[doc(hidden)]
    pub fn inject_fault(&mut self, calls: usize) {
        self.fault_after = Some(calls);
    }

    /// Names of the external tasks enabled at the current marking.
    pub fn enabled_tasks(&self) -> Vec<&str> {
        let mut names: Vec<&str> = crate::marking::enabled_external(self.automaton, self.marking)
            .into_iter()
            .map(|(t, _)| self.automaton.external[t].name.as_str())
            .collect();
        names.dedup();
        names
    }

    /// Invokes a trace event, converting JSON arguments by the task's
    /// declared input types.
    pub fn invoke_event(&mut self, event: &TraceEvent) -> Outcome {
        let args = match self.typed_args(event) {
            Ok(a) => a,
            Err(reason) => return self.log(event.clone(), Outcome::Rejected(reason)),
        };
        self.invoke_typed(event.clone(), &args)
    }

    /// Invokes an external task with typed arguments.
    pub fn invoke(&mut self, task: &str, args: &BTreeMap<String, Value>, caller: Option<Address>) -> Outcome {
        let event = TraceEvent {
            task: task.to_string(),
            args: if args.is_empty() { None } else { Some(args.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()) },
            caller,
        };
        self.invoke_typed(event, args)
    }

    fn typed_args(&self, event: &TraceEvent) -> Result<BTreeMap<String, Value>, RejectReason> {
        let Some(ti) = self.automaton.external_index(&event.task) else {
            return Err(RejectReason::UnknownTask(event.task.clone()));
        };
        let t = &self.automaton.external[ti];
        let mut out = BTreeMap::new();
        for (k, json) in event.args.iter().flatten() {
            let input = t
                .inputs
                .iter()
                .find(|i| &i.name == k)
                .ok_or_else(|| RejectReason::BadArguments(format!("`{}` takes no input `{k}`", t.name)))?;
            let v = Value::from_json(input.ty, json)
                .ok_or_else(|| RejectReason::BadArguments(format!("`{k}` expects {}, got {json}", input.ty)))?;
            out.insert(k.clone(), v);
        }
        Ok(out)
    }

    fn log(&mut self, event: TraceEvent, outcome: Outcome) -> Outcome {
        if !outcome.is_accepted() && self.status == Status::Running {
            self.status = Status::RunningWithRejections;
        }
        self.event_log.push(LogEntry { event, outcome: outcome.clone() });
        outcome
    }

    fn invoke_typed(&mut self, event: TraceEvent, args: &BTreeMap<String, Value>) -> Outcome {
        let Some(ti) = self.automaton.external_index(&event.task) else {
            let reason = RejectReason::UnknownTask(event.task.clone());
            return self.log(event, Outcome::Rejected(reason));
        };
        let t = &self.automaton.external[ti];
        for i in &t.inputs {
            match args.get(&i.name) {
                None if !args.is_empty() => {
                    let reason = RejectReason::BadArguments(format!("missing input `{}`", i.name));
                    return self.log(event, Outcome::Rejected(reason));
                }
                Some(v) if v.ty() != i.ty => {
                    let reason = RejectReason::BadArguments(format!("`{}` expects {}, got {}", i.name, i.ty, v.ty()));
                    return self.log(event, Outcome::Rejected(reason));
                }
                _ => {}
            }
        }
        if let Some(k) = args.keys().find(|k| !t.inputs.iter().any(|i| &i.name == *k)) {
            let reason = RejectReason::BadArguments(format!("`{}` takes no input `{k}`", t.name));
            return self.log(event, Outcome::Rejected(reason));
        }
        let outcome = match self.run_transaction(Some((&event.task, args))) {
            Ok((auto_fired, calls)) => Outcome::Accepted { auto_fired, calls },
            Err(reason) => Outcome::Rejected(reason),
        };
        self.log(event, outcome)
    }

    /// Fires an external task (or only the initial closure when `task` is
    /// `None`) as one all-or-nothing step.
    fn run_transaction(&mut self, task: Option<(&str, &BTreeMap<String, Value>)>) -> Result<(Vec<String>, Vec<CallRecord>), RejectReason> {
        let (marking, env, node) = match task {
            Some((name, args)) => {
                let (m, env, _) = fire_external(self.automaton, self.marking, &self.env, name, args).map_err(|e| match e {
                    FireError::NotEnabled(n) => RejectReason::NotEnabled(n),
                    FireError::UnknownTask(n) => RejectReason::UnknownTask(n),
                })?;
                let node = self.automaton.external[self.automaton.external_index(name).expect("fired")].task_id.clone();
                (m, env, Some(node))
            }
            None => (self.marking, self.env.clone(), None),
        };
        let fault_after = self.fault_after.take();

        let regs = self.registries.clone();
        let mut guards: BTreeMap<Address, MutexGuard<'_, Registry>> = BTreeMap::new();
        for addr in self.bindings.values() {
            if !guards.contains_key(addr) {
                guards.insert(*addr, lock(regs.get(*addr).expect("checked at instantiation")));
            }
        }
        let snapshot: Vec<(Address, Registry)> = guards.iter().map(|(a, g)| (*a, (**g).clone())).collect();

        let result = {
            let mut ctx = CallContext { inst: self, guards: &mut guards, calls: Vec::new(), fault_after, failure: None };
            let mut env = env;
            let res = match &node {
                Some(n) => ctx.run_node(n, &mut env),
                None => Ok(()),
            };
            res.and_then(|()| {
                eager_closure_with(self.automaton, marking, &env, &mut ctx).map_err(|e| match ctx.failure.take() {
                    Some(r) => r,
                    None => closure_reason(e),
                })
            })
            .map(|(m, env, fired)| (m, env, fired, ctx.calls))
        };

        match result {
            Ok((m, env, fired, calls)) => {
                for id in &fired {
                    if self.model.node(id).map(|n| n.kind) == Some(NodeKind::EndEvent) {
                        self.last_end = Some(id.clone());
                    }
                }
                self.marking = m;
                self.env = env;
                if m.is_empty() {
                    self.status = Status::Completed(self.last_end.clone().unwrap_or_default());
                }
                Ok((fired, calls))
            }
            Err(reason) => {
                for (a, state) in snapshot {
                    **guards.get_mut(&a).expect("locked") = state;
                }
                Err(reason)
            }
        }
    }
}

#[cfg(test)]
mod tests;
