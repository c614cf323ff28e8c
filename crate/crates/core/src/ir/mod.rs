//! Shared intermediate representation for process models and their
//! blockchain extensions.

pub mod expr;
mod validate;
pub mod value;

pub use expr::{eval_expr, eval_expr_as, exec_statements, type_of, BinaryOp, EvalError, Expr, Statement, UnaryOp, VarEnv};
pub use validate::{validate_model, Diagnostic, Severity, ValidationReport};
pub use value::{keccak256, Address, MalformedAddress, Value, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    StartEvent,
    EndEvent,
    DefaultTask,
    UserTask,
    ScriptTask,
    XorGateway,
    AndGateway,
}

impl NodeKind {
    pub fn is_task(self) -> bool {
        matches!(self, NodeKind::DefaultTask | NodeKind::UserTask | NodeKind::ScriptTask)
    }

    /// Tasks fired by an outside invocation rather than automatically.
    pub fn is_external(self) -> bool {
        matches!(self, NodeKind::DefaultTask | NodeKind::UserTask)
    }

    pub fn is_gateway(self) -> bool {
        matches!(self, NodeKind::XorGateway | NodeKind::AndGateway)
    }

    pub fn label(self) -> &'static str {
        match self {
            NodeKind::StartEvent => "start event",
            NodeKind::EndEvent => "end event",
            NodeKind::DefaultTask => "task",
            NodeKind::UserTask => "user task",
            NodeKind::ScriptTask => "script task",
            NodeKind::XorGateway => "exclusive gateway",
            NodeKind::AndGateway => "parallel gateway",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskInput {
    pub name: String,
    pub ty: ValueType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub name: String,
    /// User-task input parameters, merged into the variable environment
    /// when the task fires.
    pub inputs: Vec<TaskInput>,
    /// Script-task body.
    pub script: Vec<Statement>,
}

impl Node {
    pub fn new(id: &str, kind: NodeKind, name: &str) -> Node {
        Node { id: id.to_string(), kind, name: name.to_string(), inputs: Vec::new(), script: Vec::new() }
    }

    /// Name used in traces and invocation requests; falls back to the id.
    pub fn label(&self) -> &str {
        if self.name.is_empty() {
            &self.id
        } else {
            &self.name
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceFlow {
    pub id: String,
    pub source: String,
    pub target: String,
    pub condition: Option<Expr>,
    pub is_default: bool,
}

impl SequenceFlow {
    pub fn new(id: &str, source: &str, target: &str) -> SequenceFlow {
        SequenceFlow {
            id: id.to_string(),
            source: source.to_string(),
            target: target.to_string(),
            condition: None,
            is_default: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessVariableDecl {
    pub name: String,
    pub ty: ValueType,
    pub initial: Option<Value>,
}

impl ProcessVariableDecl {
    pub fn initial_value(&self) -> Value {
        self.initial.clone().unwrap_or_else(|| self.ty.zero())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionParameter {
    pub name: String,
    pub ty: ValueType,
}

impl FunctionParameter {
    pub fn new(name: &str, ty: ValueType) -> FunctionParameter {
        FunctionParameter { name: name.to_string(), ty }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmartContractFunctionDecl {
    pub name: String,
    pub inputs: Vec<FunctionParameter>,
    pub outputs: Vec<FunctionParameter>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmartContractInterfaceDecl {
    pub id: String,
    /// Contract name; also used to match a simulated registry.
    pub name: String,
    pub contract_address: Option<Address>,
    pub functions: Vec<SmartContractFunctionDecl>,
}

impl SmartContractInterfaceDecl {
    pub fn function(&self, name: &str) -> Option<&SmartContractFunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }
}

/// Where an input parameter of an invoked contract function gets its value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BindingSource {
    /// A process variable or an input of the source task.
    Variable(String),
    /// The process instance's own account (`address(this)`).
    ProcessAddress,
    /// A literal constant; integer literals take the parameter's type.
    Constant(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterBinding {
    pub param: String,
    pub source: BindingSource,
}

/// Stores one named return value of the call into a process variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnBinding {
    pub output: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvocationBinding {
    pub source_task: String,
    pub target_interface: String,
    pub fn_name: String,
    pub input_bindings: Vec<ParameterBinding>,
    pub output_bindings: Vec<ReturnBinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProcessModel {
    pub id: String,
    pub name: String,
    pub nodes: Vec<Node>,
    pub flows: Vec<SequenceFlow>,
    pub variables: Vec<ProcessVariableDecl>,
    pub interfaces: Vec<SmartContractInterfaceDecl>,
    pub invocations: Vec<InvocationBinding>,
    pub participants: Vec<String>,
}

impl ProcessModel {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn variable(&self, name: &str) -> Option<&ProcessVariableDecl> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn interface(&self, id: &str) -> Option<&SmartContractInterfaceDecl> {
        self.interfaces.iter().find(|i| i.id == id)
    }

    /// Indices of flows entering the node, in document order.
    pub fn incoming(&self, node_id: &str) -> Vec<usize> {
        (0..self.flows.len()).filter(|&i| self.flows[i].target == node_id).collect()
    }

    /// Indices of flows leaving the node, in document order.
    pub fn outgoing(&self, node_id: &str) -> Vec<usize> {
        (0..self.flows.len()).filter(|&i| self.flows[i].source == node_id).collect()
    }

    pub fn start_event(&self) -> Option<&Node> {
        self.nodes.iter().find(|n| n.kind == NodeKind::StartEvent)
    }

    pub fn external_tasks(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind.is_external())
    }

    pub fn task_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind.is_task()).count()
    }

    pub fn gateway_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind.is_gateway()).count()
    }

    /// Resolves a trace/invocation task reference: display name first,
    /// then node id.
    pub fn find_task(&self, reference: &str) -> Option<&Node> {
        self.nodes
            .iter()
            .find(|n| n.kind.is_task() && n.name == reference)
            .or_else(|| self.nodes.iter().find(|n| n.kind.is_task() && n.id == reference))
    }

    pub fn invocations_of<'a>(&'a self, task_id: &'a str) -> impl Iterator<Item = &'a InvocationBinding> + 'a {
        self.invocations.iter().filter(move |b| b.source_task == task_id)
    }

    /// Type of a name visible to expressions: declared variables first, then
    /// any user-task input of that name.
    pub fn scope_type(&self, name: &str) -> Option<ValueType> {
        if let Some(v) = self.variable(name) {
            return Some(v.ty);
        }
        self.nodes
            .iter()
            .flat_map(|n| n.inputs.iter())
            .find(|i| i.name == name)
            .map(|i| i.ty)
    }

    /// Task-input names that have no declared variable of their own; these
    /// become implicit process state once the task fires.
    pub fn implicit_variables(&self) -> Vec<TaskInput> {
        let mut out: Vec<TaskInput> = Vec::new();
        for input in self.nodes.iter().flat_map(|n| n.inputs.iter()) {
            if self.variable(&input.name).is_none() && !out.iter().any(|o| o.name == input.name) {
                out.push(input.clone());
            }
        }
        out
    }

    /// Variable environment a fresh instance starts with.
    pub fn initial_env(&self) -> VarEnv {
        self.variables.iter().map(|v| (v.name.clone(), v.initial_value())).collect()
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
