use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::expr::type_of;
use super::{is_identifier, BindingSource, NodeKind, ProcessModel, ValueType};

pub const MAX_FLOWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Id of the offending node, flow, variable, interface, or binding.
    pub element: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.element {
            Some(el) => write!(f, "{sev} [{el}]: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Warning)
    }

    fn error(&mut self, element: Option<&str>, message: impl Into<String>) {
        self.push(Severity::Error, element, message.into());
    }

    fn warning(&mut self, element: Option<&str>, message: impl Into<String>) {
        self.push(Severity::Warning, element, message.into());
    }

    fn push(&mut self, severity: Severity, element: Option<&str>, message: String) {
        self.diagnostics.push(Diagnostic { severity, element: element.map(str::to_string), message });
    }
}

/// Checks every structural and typing rule a model must satisfy before it
/// can be compiled. Never fails; all findings are diagnostics.
pub fn validate_model(model: &ProcessModel) -> ValidationReport {
    let mut r = ValidationReport::default();
    let refs_ok = check_structure(model, &mut r);
    if refs_ok {
        check_graph(model, &mut r);
    }
    check_variables(model, &mut r);
    check_expressions(model, &mut r);
    check_interfaces(model, &mut r);
    check_invocations(model, &mut r);
    r
}

/// Ids, flow endpoints, event counts, and the marking width. Returns whether
/// the graph is sound enough for degree and reachability checks.
fn check_structure(model: &ProcessModel, r: &mut ValidationReport) -> bool {
    let mut ok = true;
    let mut seen = BTreeSet::new();
    let ids = model
        .nodes
        .iter()
        .map(|n| &n.id)
        .chain(model.flows.iter().map(|f| &f.id))
        .chain(model.interfaces.iter().map(|i| &i.id));
    for id in ids {
        if id.is_empty() {
            r.error(None, "element with empty id");
            ok = false;
        } else if !seen.insert(id.as_str()) {
            r.error(Some(id), format!("duplicate id `{id}`"));
            ok = false;
        }
    }

    if model.flows.len() > MAX_FLOWS {
        r.error(
            None,
            format!("marking exceeds 256 bits ({} sequence flows, at most {MAX_FLOWS} allowed)", model.flows.len()),
        );
    }

    for f in &model.flows {
        if model.node(&f.source).is_none() {
            r.error(Some(&f.id), format!("dangling flow source `{}`", f.source));
            ok = false;
        }
        if model.node(&f.target).is_none() {
            r.error(Some(&f.id), format!("dangling flow target `{}`", f.target));
            ok = false;
        }
    }

    let starts = model.nodes.iter().filter(|n| n.kind == NodeKind::StartEvent).count();
    if starts != 1 {
        r.error(None, format!("expected exactly one start event, found {starts}"));
        ok = false;
    }
    if !model.nodes.iter().any(|n| n.kind == NodeKind::EndEvent) {
        r.error(None, "process has no end event");
        ok = false;
    }

    let mut names: BTreeMap<&str, &str> = BTreeMap::new();
    for n in model.nodes.iter().filter(|n| n.kind.is_task()) {
        if let Some(first) = names.insert(n.label(), &n.id) {
            r.error(Some(&n.id), format!("task name `{}` already used by `{first}`", n.label()));
        }
    }
    ok
}

fn check_graph(model: &ProcessModel, r: &mut ValidationReport) {
    for n in &model.nodes {
        let ins = model.incoming(&n.id).len();
        let outs = model.outgoing(&n.id).len();
        let id = Some(n.id.as_str());
        match n.kind {
            NodeKind::StartEvent => {
                if ins > 0 {
                    r.error(id, "start event has incoming sequence flows");
                }
                if outs == 0 {
                    r.error(id, "start event has no outgoing sequence flow");
                }
            }
            NodeKind::EndEvent => {
                if outs > 0 {
                    r.error(id, "end event has outgoing sequence flows");
                }
            }
            k if k.is_task() => {
                if ins > 1 {
                    r.error(id, format!("task has {ins} incoming flows; merge them with a gateway"));
                }
                if outs > 1 {
                    r.error(id, format!("task has {outs} outgoing flows; split them with a gateway"));
                }
            }
            _ => {
                if ins == 0 || outs == 0 {
                    r.error(id, "gateway needs at least one incoming and one outgoing flow");
                }
            }
        }
    }

    for f in &model.flows {
        let src = model.node(&f.source).expect("checked");
        if src.kind != NodeKind::XorGateway {
            if f.condition.is_some() {
                r.error(Some(&f.id), format!("condition on flow leaving {} `{}`", src.kind.label(), src.id));
            }
            if f.is_default {
                r.error(Some(&f.id), format!("default flow leaving {} `{}`", src.kind.label(), src.id));
            }
        }
    }
    for g in model.nodes.iter().filter(|n| n.kind == NodeKind::XorGateway) {
        let outs = model.outgoing(&g.id);
        let defaults = outs.iter().filter(|&&i| model.flows[i].is_default).count();
        if defaults > 1 {
            r.error(Some(&g.id), format!("{defaults} default flows on one exclusive gateway"));
        }
        if outs.len() > 1 {
            for &i in &outs {
                let f = &model.flows[i];
                if f.is_default && f.condition.is_some() {
                    r.warning(Some(&f.id), "condition on default flow is ignored");
                }
                if !f.is_default && f.condition.is_none() {
                    r.error(Some(&f.id), "branch of exclusive split has neither condition nor default marker");
                }
            }
        }
    }

    let start = model.start_event().expect("checked");
    let forward = reach(model, &start.id, true);
    for n in &model.nodes {
        if !forward.contains(n.id.as_str()) {
            r.error(Some(&n.id), "node is unreachable from the start event");
        }
    }
    let mut backward = BTreeSet::new();
    for e in model.nodes.iter().filter(|n| n.kind == NodeKind::EndEvent) {
        backward.extend(reach(model, &e.id, false));
    }
    for n in &model.nodes {
        if forward.contains(n.id.as_str()) && !backward.contains(n.id.as_str()) {
            r.error(Some(&n.id), "node cannot reach any end event");
        }
    }
}

fn reach<'a>(model: &'a ProcessModel, from: &'a str, forward: bool) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(cur) = queue.pop_front() {
        for f in &model.flows {
            let (a, b) = if forward { (&f.source, &f.target) } else { (&f.target, &f.source) };
            if a == cur && seen.insert(b.as_str()) {
                queue.push_back(b);
            }
        }
    }
    seen
}

fn check_variables(model: &ProcessModel, r: &mut ValidationReport) {
    let mut names = BTreeSet::new();
    for v in &model.variables {
        if !is_identifier(&v.name) {
            r.error(Some(&v.name), format!("`{}` is not a valid variable name", v.name));
        }
        if v.name == "processAddress" {
            r.error(Some(&v.name), "`processAddress` is reserved");
        }
        if !names.insert(v.name.as_str()) {
            r.error(Some(&v.name), format!("duplicate variable `{}`", v.name));
        }
        if let Some(init) = &v.initial {
            if init.ty() != v.ty {
                r.error(Some(&v.name), format!("initial value of type {} for variable of type {}", init.ty(), v.ty));
            }
        }
    }

    let mut input_types: BTreeMap<&str, (ValueType, &str)> = BTreeMap::new();
    for n in &model.nodes {
        if !n.inputs.is_empty() && n.kind != NodeKind::UserTask {
            r.error(Some(&n.id), format!("{} cannot declare task inputs", n.kind.label()));
        }
        if !n.script.is_empty() && n.kind != NodeKind::ScriptTask {
            r.error(Some(&n.id), format!("{} cannot carry a script", n.kind.label()));
        }
        if n.kind == NodeKind::ScriptTask && n.script.is_empty() && model.invocations_of(&n.id).next().is_none() {
            r.warning(Some(&n.id), "script task does nothing");
        }
        let mut local = BTreeSet::new();
        for i in &n.inputs {
            if !is_identifier(&i.name) || i.name == "processAddress" {
                r.error(Some(&n.id), format!("`{}` is not a valid task input name", i.name));
            }
            if !local.insert(i.name.as_str()) {
                r.error(Some(&n.id), format!("duplicate task input `{}`", i.name));
            }
            if let Some(var) = model.variable(&i.name) {
                if var.ty != i.ty {
                    r.error(
                        Some(&n.id),
                        format!("task input `{}` is {} but the variable of that name is {}", i.name, i.ty, var.ty),
                    );
                }
            } else if let Some((ty, other)) = input_types.get(i.name.as_str()) {
                if *ty != i.ty {
                    r.error(
                        Some(&n.id),
                        format!("task input `{}` is {} here but {} on `{other}`", i.name, i.ty, ty),
                    );
                }
            } else {
                input_types.insert(&i.name, (i.ty, &n.id));
            }
        }
    }
}

fn check_expressions(model: &ProcessModel, r: &mut ValidationReport) {
    let scope = |n: &str| model.scope_type(n);
    for f in &model.flows {
        if let Some(c) = &f.condition {
            match type_of(c, &scope) {
                Ok(ValueType::Bool) => {}
                Ok(t) => r.error(Some(&f.id), format!("condition has type {t}, expected bool")),
                Err(e) => r.error(Some(&f.id), format!("condition does not type-check: {e}")),
            }
        }
    }
    for n in &model.nodes {
        for s in &n.script {
            let Some(var) = model.variable(&s.target) else {
                r.error(Some(&n.id), format!("script assigns undeclared variable `{}`", s.target));
                continue;
            };
            match s.value.check_assignable(var.ty, &scope) {
                Ok(()) => {}
                Err(e) => r.error(Some(&n.id), format!("assignment to `{}`: {e}", s.target)),
            }
        }
    }
}

fn check_interfaces(model: &ProcessModel, r: &mut ValidationReport) {
    for iface in &model.interfaces {
        if !is_identifier(&iface.name) {
            r.error(Some(&iface.id), format!("`{}` is not a valid contract name", iface.name));
        }
        let mut fns = BTreeSet::new();
        for f in &iface.functions {
            if !is_identifier(&f.name) {
                r.error(Some(&iface.id), format!("`{}` is not a valid function name", f.name));
            }
            if !fns.insert(f.name.as_str()) {
                r.error(Some(&iface.id), format!("duplicate function `{}`", f.name));
            }
            for (dir, params) in [("input", &f.inputs), ("output", &f.outputs)] {
                let mut seen = BTreeSet::new();
                for p in params.iter() {
                    if !is_identifier(&p.name) {
                        r.error(Some(&iface.id), format!("`{}` is not a valid parameter name", p.name));
                    }
                    if !seen.insert(p.name.as_str()) {
                        r.error(
                            Some(&iface.id),
                            format!("duplicate {dir} parameter `{}` on `{}`", p.name, f.name),
                        );
                    }
                }
            }
        }
    }
    let mut names = BTreeSet::new();
    for iface in &model.interfaces {
        if !names.insert(iface.name.as_str()) {
            r.error(Some(&iface.id), format!("two interfaces named `{}`", iface.name));
        }
    }
}

fn check_invocations(model: &ProcessModel, r: &mut ValidationReport) {
    for (k, b) in model.invocations.iter().enumerate() {
        let tag = format!("invocation#{k}");
        let el = Some(tag.as_str());
        let Some(task) = model.node(&b.source_task) else {
            r.error(el, format!("source task `{}` does not exist", b.source_task));
            continue;
        };
        if !task.kind.is_task() {
            r.error(el, format!("source `{}` is a {}, not a task", task.id, task.kind.label()));
        }
        let Some(iface) = model.interface(&b.target_interface) else {
            r.error(el, format!("target interface `{}` does not exist", b.target_interface));
            continue;
        };
        let Some(func) = iface.function(&b.fn_name) else {
            r.error(el, format!("interface `{}` has no function `{}`", iface.name, b.fn_name));
            continue;
        };

        let mut bound = BTreeSet::new();
        for pb in &b.input_bindings {
            let Some(param) = func.inputs.iter().find(|p| p.name == pb.param) else {
                r.error(el, format!("`{}` has no input parameter `{}`", func.name, pb.param));
                continue;
            };
            if !bound.insert(pb.param.as_str()) {
                r.error(el, format!("input parameter `{}` bound twice", pb.param));
            }
            let source_ty = match &pb.source {
                BindingSource::ProcessAddress => Some(ValueType::Address),
                BindingSource::Variable(name) => {
                    let own_input = task.inputs.iter().find(|i| &i.name == name).map(|i| i.ty);
                    match own_input.or_else(|| model.variable(name).map(|v| v.ty)) {
                        Some(t) => Some(t),
                        None => {
                            r.error(
                                el,
                                format!("`{name}` is neither a process variable nor an input of `{}`", task.id),
                            );
                            None
                        }
                    }
                }
                BindingSource::Constant(e) => match e.check_assignable(param.ty, &|_| None) {
                    Ok(()) => Some(param.ty),
                    Err(msg) => {
                        r.error(el, format!("constant for `{}`: {msg}", pb.param));
                        None
                    }
                },
            };
            if let Some(t) = source_ty {
                if t != param.ty {
                    r.error(el, format!("parameter `{}` is {} but its binding is {t}", pb.param, param.ty));
                }
            }
        }
        for p in &func.inputs {
            if !bound.contains(p.name.as_str()) {
                r.error(el, format!("input parameter `{}` of `{}` is not bound", p.name, func.name));
            }
        }

        let mut outs = BTreeSet::new();
        for ob in &b.output_bindings {
            let Some(out) = func.outputs.iter().find(|p| p.name == ob.output) else {
                r.error(el, format!("`{}` has no return value `{}`", func.name, ob.output));
                continue;
            };
            if !outs.insert(ob.output.as_str()) {
                r.error(el, format!("return value `{}` bound twice", ob.output));
            }
            match model.variable(&ob.target) {
                Some(v) if v.ty == out.ty => {}
                Some(v) => r.error(
                    el,
                    format!("return value `{}` is {} but variable `{}` is {}", ob.output, out.ty, v.name, v.ty),
                ),
                None => r.error(el, format!("return target `{}` is not a declared process variable", ob.target)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Node, SequenceFlow};

    fn linear(n_tasks: usize) -> ProcessModel {
        let mut m = ProcessModel { id: "p".into(), ..Default::default() };
        m.nodes.push(Node::new("s", NodeKind::StartEvent, "start"));
        for i in 0..n_tasks {
            m.nodes.push(Node::new(&format!("t{i}"), NodeKind::UserTask, &format!("T{i}")));
        }
        m.nodes.push(Node::new("e", NodeKind::EndEvent, "end"));
        for i in 0..=n_tasks {
            let src = if i == 0 { "s".to_string() } else { format!("t{}", i - 1) };
            let dst = if i == n_tasks { "e".to_string() } else { format!("t{i}") };
            m.flows.push(SequenceFlow::new(&format!("f{i}"), &src, &dst));
        }
        m
    }

    #[test]
    fn linear_model_is_valid() {
        let rep = validate_model(&linear(3));
        assert!(rep.is_valid(), "{:?}", rep.diagnostics);
    }

    #[test]
    fn dangling_flow_target_is_one_error() {
        let mut m = linear(1);
        m.flows[1].target = "ghost".into();
        let rep = validate_model(&m);
        let errs: Vec<_> = rep.errors().collect();
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert!(errs[0].message.contains("dangling flow target"));
    }

    #[test]
    fn too_many_flows_is_one_error() {
        let m = linear(256);
        assert_eq!(m.flows.len(), 257);
        let rep = validate_model(&m);
        let errs: Vec<_> = rep.errors().collect();
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert!(errs[0].message.contains("marking exceeds 256 bits"));
        assert!(validate_model(&linear(255)).is_valid());
    }

    #[test]
    fn unreachable_and_dead_end_nodes() {
        let mut m = linear(1);
        m.nodes.push(Node::new("orphan", NodeKind::UserTask, "Orphan"));
        m.nodes.push(Node::new("x", NodeKind::XorGateway, ""));
        m.flows.push(SequenceFlow::new("fo", "orphan", "e"));
        let rep = validate_model(&m);
        let msgs: Vec<_> = rep.errors().map(|d| (d.element.clone().unwrap(), d.message.clone())).collect();
        assert!(msgs.iter().any(|(el, msg)| el == "orphan" && msg.contains("unreachable")));
        assert!(msgs.iter().any(|(el, msg)| el == "x" && msg.contains("gateway needs")));
    }

    #[test]
    fn task_with_two_outgoing_flows_is_rejected() {
        let mut m = linear(2);
        m.flows.push(SequenceFlow::new("extra", "t0", "e"));
        let rep = validate_model(&m);
        assert!(rep.errors().any(|d| d.message.contains("outgoing flows")));
    }

    #[test]
    fn condition_outside_xor_is_rejected() {
        let mut m = linear(1);
        m.flows[1].condition = Some(crate::ir::Expr::Bool(true));
        assert!(validate_model(&m).errors().any(|d| d.message.contains("condition on flow")));
    }

    #[test]
    fn duplicate_ids() {
        let mut m = linear(2);
        m.nodes[2].id = "t0".into();
        assert!(validate_model(&m).errors().any(|d| d.message.contains("duplicate id")));
    }

    #[test]
    fn idempotent() {
        let mut m = linear(2);
        m.flows[0].target = "nowhere".into();
        assert_eq!(validate_model(&m), validate_model(&m));
    }
}
