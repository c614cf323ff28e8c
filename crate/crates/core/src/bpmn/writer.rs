use std::fmt::Write;

use super::{render_binding_source, BCEXT_NS, BPMN_NS};
use crate::ir::{NodeKind, ProcessModel};

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            c => out.push(c),
        }
    }
    out
}

fn element_name(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::StartEvent => "startEvent",
        NodeKind::EndEvent => "endEvent",
        NodeKind::DefaultTask => "task",
        NodeKind::UserTask => "userTask",
        NodeKind::ScriptTask => "scriptTask",
        NodeKind::XorGateway => "exclusiveGateway",
        NodeKind::AndGateway => "parallelGateway",
    }
}

/// Serializes a model to BPMN XML that [`super::parse_bpmn`] reads back to
/// an equal model.
pub fn write_bpmn(m: &ProcessModel) -> String {
    let mut o = String::new();
    let w = &mut o;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<bpmn:definitions xmlns:bpmn="{BPMN_NS}" xmlns:bcext="{BCEXT_NS}" id="Definitions_{}">"#,
        esc(&m.id)
    );
    let _ = writeln!(w, r#"  <bpmn:process id="{}" name="{}" isExecutable="true">"#, esc(&m.id), esc(&m.name));

    let has_ext = !(m.participants.is_empty()
        && m.variables.is_empty()
        && m.interfaces.is_empty()
        && m.invocations.is_empty());
    if has_ext {
        let _ = writeln!(w, "    <bpmn:extensionElements>");
        for p in &m.participants {
            let _ = writeln!(w, r#"      <bcext:participant name="{}"/>"#, esc(p));
        }
        if !m.variables.is_empty() {
            let _ = writeln!(w, "      <bcext:variables>");
            for v in &m.variables {
                let init = match &v.initial {
                    Some(val) => {
                        let text = match val {
                            crate::ir::Value::Str(s) => s.clone(),
                            other => other.to_string(),
                        };
                        format!(r#" initial="{}""#, esc(&text))
                    }
                    None => String::new(),
                };
                let _ = writeln!(w, r#"        <bcext:variable name="{}" type="{}"{init}/>"#, esc(&v.name), v.ty);
            }
            let _ = writeln!(w, "      </bcext:variables>");
        }
        for i in &m.interfaces {
            let addr = i.contract_address.map(|a| format!(r#" contractAddress="{a}""#)).unwrap_or_default();
            let _ = writeln!(
                w,
                r#"      <bcext:smartContractInterface id="{}" name="{}"{addr}>"#,
                esc(&i.id),
                esc(&i.name)
            );
            for f in &i.functions {
                if f.inputs.is_empty() && f.outputs.is_empty() {
                    let _ = writeln!(w, r#"        <bcext:function name="{}"/>"#, esc(&f.name));
                    continue;
                }
                let _ = writeln!(w, r#"        <bcext:function name="{}">"#, esc(&f.name));
                for p in &f.inputs {
                    let _ = writeln!(w, r#"          <bcext:input name="{}" type="{}"/>"#, esc(&p.name), p.ty);
                }
                for p in &f.outputs {
                    let _ = writeln!(w, r#"          <bcext:output name="{}" type="{}"/>"#, esc(&p.name), p.ty);
                }
                let _ = writeln!(w, "        </bcext:function>");
            }
            let _ = writeln!(w, "      </bcext:smartContractInterface>");
        }
        for b in &m.invocations {
            let _ = writeln!(
                w,
                r#"      <bcext:invocation sourceTask="{}" targetInterface="{}" fnName="{}">"#,
                esc(&b.source_task),
                esc(&b.target_interface),
                esc(&b.fn_name)
            );
            for p in &b.input_bindings {
                let _ = writeln!(
                    w,
                    r#"        <bcext:bindIn param="{}" source="{}"/>"#,
                    esc(&p.param),
                    esc(&render_binding_source(&p.source))
                );
            }
            for r in &b.output_bindings {
                let _ = writeln!(
                    w,
                    r#"        <bcext:bindOut return="{}" target="{}"/>"#,
                    esc(&r.output),
                    esc(&r.target)
                );
            }
            let _ = writeln!(w, "      </bcext:invocation>");
        }
        let _ = writeln!(w, "    </bpmn:extensionElements>");
    }

    for n in &m.nodes {
        let el = element_name(n.kind);
        let mut attrs = format!(r#"id="{}" name="{}""#, esc(&n.id), esc(&n.name));
        if n.kind == NodeKind::XorGateway {
            if let Some(d) = m.outgoing(&n.id).into_iter().find(|&i| m.flows[i].is_default) {
                let _ = write!(attrs, r#" default="{}""#, esc(&m.flows[d].id));
            }
        }
        if n.kind == NodeKind::ScriptTask {
            attrs.push_str(r#" scriptFormat="procforge""#);
        }
        if n.inputs.is_empty() && n.kind != NodeKind::ScriptTask {
            let _ = writeln!(w, "    <bpmn:{el} {attrs}/>");
            continue;
        }
        let _ = writeln!(w, "    <bpmn:{el} {attrs}>");
        if !n.inputs.is_empty() {
            let _ = writeln!(w, "      <bpmn:extensionElements>");
            for i in &n.inputs {
                let _ = writeln!(w, r#"        <bcext:input name="{}" type="{}"/>"#, esc(&i.name), i.ty);
            }
            let _ = writeln!(w, "      </bpmn:extensionElements>");
        }
        if n.kind == NodeKind::ScriptTask {
            let body: Vec<String> = n.script.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(w, "      <bpmn:script>{}</bpmn:script>", esc(&body.join("; ")));
        }
        let _ = writeln!(w, "    </bpmn:{el}>");
    }

    for f in &m.flows {
        let attrs = format!(r#"id="{}" sourceRef="{}" targetRef="{}""#, esc(&f.id), esc(&f.source), esc(&f.target));
        match &f.condition {
            None => {
                let _ = writeln!(w, "    <bpmn:sequenceFlow {attrs}/>");
            }
            Some(c) => {
                let _ = writeln!(w, "    <bpmn:sequenceFlow {attrs}>");
                let _ = writeln!(w, "      <bpmn:conditionExpression>{}</bpmn:conditionExpression>", esc(&c.to_string()));
                let _ = writeln!(w, "    </bpmn:sequenceFlow>");
            }
        }
    }
    let _ = writeln!(w, "  </bpmn:process>");
    let _ = writeln!(w, "</bpmn:definitions>");
    o
}
