use std::collections::BTreeSet;

use super::expr::{var_name, ExprRenderer};
use super::{address_literal, sol_ident, sol_type, string_literal, value_literal, Loc, SourceUnit, Writer, PROCESS_FILE_NAME};
use crate::ir::{BindingSource, ProcessModel, SmartContractInterfaceDecl, ValueType};
use crate::marking::{Guard, Marking, MarkingAutomaton};

/// Solidity function name for a task: first letter upper case, the rest
/// lower case, other characters replaced by `_`.
pub fn task_function_name(name: &str) -> String {
    let mut o = String::new();
    for (i, c) in name.trim().chars().enumerate() {
        let c = if c.is_ascii_alphanumeric() { c } else { '_' };
        if i == 0 {
            o.push(c.to_ascii_uppercase());
        } else {
            o.push(c.to_ascii_lowercase());
        }
    }
    if o.is_empty() || o.starts_with(|c: char| c.is_ascii_digit() || c == '_') {
        o.insert_str(0, "Task_");
    }
    o
}

pub fn interface_contract_name(iface: &SmartContractInterfaceDecl) -> String {
    sol_ident(&iface.name)
}

fn task_function_names(a: &MarkingAutomaton) -> Vec<String> {
    let mut seen = BTreeSet::new();
    a.external
        .iter()
        .map(|t| {
            let base = task_function_name(&t.name);
            let mut name = base.clone();
            let mut n = 2;
            while !seen.insert(name.clone()) {
                name = format!("{base}_{n}");
                n += 1;
            }
            name
        })
        .collect()
}

fn mask(m: Marking) -> String {
    m.hex()
}

struct Ctx<'m> {
    model: &'m ProcessModel,
}

impl Ctx<'_> {
    fn iface(&self, id: &str) -> &SmartContractInterfaceDecl {
        self.model.interface(id).expect("validated model")
    }

    fn instance_var(&self, iface: &SmartContractInterfaceDecl) -> String {
        format!("instanceOf{}", interface_contract_name(iface))
    }

    fn address_var(&self, iface: &SmartContractInterfaceDecl) -> String {
        format!("addressOf{}", interface_contract_name(iface))
    }

    fn invocations(&self, node_id: &str, w: &mut Writer, r: &mut ExprRenderer<'_>) {
        for inv in self.model.invocations_of(node_id) {
            let iface = self.iface(&inv.target_interface);
            let decl = iface.function(&inv.fn_name).expect("validated model");
            let args: Vec<String> = decl
                .inputs
                .iter()
                .map(|p| {
                    let b = inv.input_bindings.iter().find(|b| b.param == p.name).expect("validated model");
                    match &b.source {
                        BindingSource::ProcessAddress => "address(this)".to_string(),
                        BindingSource::Variable(v) => var_name(v),
                        BindingSource::Constant(e) => r.render_as(e, p.ty),
                    }
                })
                .collect();
            let call = format!("{}.{}({})", self.instance_var(iface), inv.fn_name, args.join(", "));
            let targets: Vec<Option<String>> = decl
                .outputs
                .iter()
                .map(|o| inv.output_bindings.iter().find(|b| b.output == o.name).map(|b| var_name(&b.target)))
                .collect();
            if targets.iter().all(Option::is_none) {
                w.line(format!("{call};"));
            } else if targets.len() == 1 {
                w.line(format!("{} = {call};", targets[0].as_ref().expect("bound")));
            } else {
                let parts: Vec<&str> = targets.iter().map(|t| t.as_deref().unwrap_or("")).collect();
                w.line(format!("({}) = {call};", parts.join(", ")));
            }
        }
    }
}

pub fn gen_process(model: &ProcessModel, a: &MarkingAutomaton) -> SourceUnit {
    let ctx = Ctx { model };
    let scope = |n: &str| model.scope_type(n);
    let mut r = ExprRenderer::new(&scope);
    let mut contracts = Vec::new();

    for iface in &model.interfaces {
        let mut w = Writer::new();
        w.open(format!("contract {} {{", interface_contract_name(iface)));
        for f in &iface.functions {
            let ins: Vec<String> = f.inputs.iter().map(|p| format!("{} {}", sol_type(p.ty, Loc::Calldata), p.name)).collect();
            let outs: Vec<String> = f.outputs.iter().map(|p| format!("{} {}", sol_type(p.ty, Loc::Memory), p.name)).collect();
            let ret = if outs.is_empty() { String::new() } else { format!(" returns ({})", outs.join(", ")) };
            w.line(format!("function {}({}) external{ret};", f.name, ins.join(", ")));
        }
        w.close("}");
        contracts.push(w.finish());
    }

    let params: Vec<&SmartContractInterfaceDecl> = model.interfaces.iter().filter(|i| i.contract_address.is_none()).collect();
    let ctor_params: Vec<String> = std::iter::once("address[] memory _participants".to_string())
        .chain(params.iter().map(|i| format!("address _{}", ctx.address_var(i))))
        .collect();
    let ctor_args: Vec<String> =
        std::iter::once("_participants".to_string()).chain(params.iter().map(|i| format!("_{}", ctx.address_var(i)))).collect();

    // factory
    let mut w = Writer::new();
    w.open("contract ProcessFactory {");
    w.line("address[] public createdInstances;");
    w.blank();
    w.line("event instanceCreated(address instance);");
    w.blank();
    w.open(format!("function createInstance({}) public returns (address) {{", ctor_params.join(", ")));
    w.line(format!("ProcessMonitor instance = new ProcessMonitor({});", ctor_args.join(", ")));
    w.line("createdInstances.push(address(instance));");
    w.line("emit instanceCreated(address(instance));");
    w.line("return address(instance);");
    w.close("}");
    w.close("}");
    contracts.push(w.finish());

    // monitor body first, so the helper set is known before the header
    let names = task_function_names(a);
    let mut body = Writer::new();
    body.depth_hint(1);
    for (t, fname) in a.external.iter().zip(&names) {
        let typed = |loc| -> Vec<String> { t.inputs.iter().map(|i| format!("{} in_{}", sol_type(i.ty, loc), i.name)).collect() };
        let arg_names: Vec<String> = t.inputs.iter().map(|i| format!("in_{}", i.name)).collect();
        body.blank();
        body.open(format!("function execute_{fname}({}) public {{", typed(Loc::Memory).join(", ")));
        body.line("uint before = marking;");
        let call_args: Vec<String> = std::iter::once("before".to_string()).chain(arg_names.iter().cloned()).collect();
        body.line(format!("uint next = {fname}({});", call_args.join(", ")));
        body.open("if (next == before) {");
        body.line(format!("emit TaskRejected({}, before);", string_literal(&t.name)));
        body.line("return;");
        body.close("}");
        body.line("marking = step(next);");
        body.line(format!("emit TaskExecuted({}, marking);", string_literal(&t.name)));
        body.close("}");
        body.blank();
        let params: Vec<String> = std::iter::once("uint preconditionsp".to_string()).chain(typed(Loc::Memory)).collect();
        body.open(format!("function {fname}({}) internal returns (uint) {{", params.join(", ")));
        for (i, alt) in t.alternatives.iter().enumerate() {
            let kw = if i == 0 { "if" } else { "} else if" };
            let pre = mask(alt.pre);
            if i == 0 {
                body.open(format!("{kw} ((preconditionsp & {pre} == {pre})) {{"));
            } else {
                body.close_open(format!("{kw} ((preconditionsp & {pre} == {pre})) {{"));
            }
            for inp in &t.inputs {
                body.line(format!("{} = in_{};", var_name(&inp.name), inp.name));
            }
            ctx.invocations(&t.task_id, &mut body, &mut r);
            body.line(format!("return preconditionsp & uint(~{pre}) | {};", mask(alt.post)));
        }
        body.close("} else return preconditionsp;");
        body.close("}");
    }

    // automatic steps
    let budget = 4 * a.flow_ids.len();
    body.blank();
    body.open("function step(uint m) internal returns (uint) {");
    body.open(format!("for (uint fired = 0; fired <= {budget}; fired++) {{"));
    let mut first = true;
    for t in &a.autos {
        for pre in &t.pre {
            let p = mask(*pre);
            let head = format!("if (m & {p} == {p}) {{");
            if first {
                body.open(head);
                first = false;
            } else {
                body.close_open(format!("}} else {head}"));
            }
            body.line(format!("// {}", t.name));
            body.line(format!("m = m & uint(~{p});"));
            for s in &t.script {
                let ty = model.scope_type(&s.target).unwrap_or(ValueType::Uint256);
                let rhs = r.render_as(&s.value, ty);
                body.line(format!("{} = {};", var_name(&s.target), strip_outer(&rhs)));
            }
            ctx.invocations(&t.node_id, &mut body, &mut r);
            if t.outcomes.len() == 1 && t.outcomes[0].guard == Guard::Always {
                body.line(format!("m = m | {};", mask(t.outcomes[0].post)));
            } else {
                let mut default = None;
                let mut conds = 0;
                for o in &t.outcomes {
                    match &o.guard {
                        Guard::Default => default = Some(o.post),
                        Guard::Always => default = Some(o.post),
                        Guard::Condition(c) => {
                            let kw = if conds == 0 { "if" } else { "else if" };
                            body.line(format!("{kw} ({}) m = m | {};", r.render_bool(c), mask(o.post)));
                            conds += 1;
                        }
                    }
                }
                match default {
                    Some(d) if conds == 0 => body.line(format!("m = m | {};", mask(d))),
                    Some(d) => body.line(format!("else m = m | {};", mask(d))),
                    None => body.line(format!("else revert({});", string_literal(&format!("no outgoing branch of {} can be taken", t.node_id)))),
                }
            }
        }
    }
    if first {
        body.line("return m;");
    } else {
        body.close_open("} else {");
        body.line("return m;");
        body.close("}");
    }
    body.close("}");
    body.line("revert(\"automatic steps did not settle\");");
    body.close("}");

    let helpers = r.helpers.clone();
    for h in &helpers {
        body.blank();
        for l in h.source() {
            body.line(*l);
        }
    }

    // monitor header
    let mut w = Writer::new();
    w.open("contract ProcessMonitor {");
    w.line("uint public marking;");
    w.line("address[] public participants;");
    w.blank();
    for iface in &model.interfaces {
        match iface.contract_address {
            Some(addr) => w.line(format!("address constant {} = {};", ctx.address_var(iface), address_literal(addr))),
            None => w.line(format!("address public {};", ctx.address_var(iface))),
        }
        w.line(format!("{} {};", interface_contract_name(iface), ctx.instance_var(iface)));
    }
    if !model.interfaces.is_empty() {
        w.blank();
    }
    for v in &model.variables {
        let init = match &v.initial {
            Some(val) => format!(" = {}", value_literal(val)),
            None => String::new(),
        };
        w.line(format!("{} public {}{init};", sol_type(v.ty, Loc::Stack), var_name(&v.name)));
    }
    for v in model.implicit_variables() {
        w.line(format!("{} public {};", sol_type(v.ty, Loc::Stack), var_name(&v.name)));
    }
    if helpers.iter().any(|h| h.needs_int_min()) {
        w.line("int256 constant INT256_MIN = -2**255;");
    }
    w.blank();
    w.line("event TaskExecuted(string task, uint newMarking);");
    w.line("event TaskRejected(string task, uint currentMarking);");
    w.blank();
    w.open(format!("constructor({}) public {{", ctor_params.join(", ")));
    w.line("participants = _participants;");
    for iface in &params {
        let v = ctx.address_var(iface);
        w.line(format!("{v} = _{v};"));
    }
    for iface in &model.interfaces {
        w.line(format!(
            "{} = {}({});",
            ctx.instance_var(iface),
            interface_contract_name(iface),
            ctx.address_var(iface)
        ));
    }
    w.line(format!("marking = step({});", mask(a.initial_marking)));
    w.close("}");
    let mut text = w.finish();
    text.push_str(&body.finish());
    text.push_str("}\n");
    contracts.push(text);

    SourceUnit::new(PROCESS_FILE_NAME.to_string(), contracts)
}

fn strip_outer(s: &str) -> &str {
    if s.starts_with('(') && s.ends_with(')') {
        let inner = &s[1..s.len() - 1];
        let mut depth = 0i32;
        for c in inner.chars() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth < 0 {
                        return s;
                    }
                }
                _ => {}
            }
        }
        if depth == 0 {
            return inner;
        }
    }
    s
}
