//! BPMN 2.0 XML reader (with the `bcext` extension vocabulary) and a
//! matching writer for fixtures and round-trip tests.

mod condition;
mod writer;

use std::collections::BTreeSet;

use roxmltree::{Document, Node as XmlNode};
use thiserror::Error;

pub use condition::{parse_binding_source, parse_condition, parse_script, render_binding_source, ConditionParseError};
pub use writer::write_bpmn;

use crate::ir::{
    Address, FunctionParameter, InvocationBinding, MalformedAddress, Node, NodeKind, ParameterBinding, ProcessModel,
    ProcessVariableDecl, ReturnBinding, SequenceFlow, SmartContractFunctionDecl, SmartContractInterfaceDecl, TaskInput,
    Value, ValueType,
};

pub const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
pub const BCEXT_NS: &str = "urn:procforge:bcext:1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BpmnError {
    #[error("XML syntax error at {line}:{column}: {message}")]
    XmlSyntaxError { line: u32, column: u32, message: String },
    #[error("unknown element `{name}` at line {line}")]
    UnknownElement { name: String, line: u32 },
    #[error("unsupported BPMN element `{name}` at line {line}")]
    UnsupportedElement { name: String, line: u32 },
    #[error("`{element}` references unknown {kind} `{reference}`")]
    DanglingReference { element: String, kind: &'static str, reference: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error(transparent)]
    MalformedAddress(#[from] MalformedAddress),
    #[error("in `{element}`: {source}")]
    ConditionParseError {
        element: String,
        #[source]
        source: ConditionParseError,
    },
    #[error("`{element}` at line {line} is missing attribute `{attribute}`")]
    MissingAttribute { element: String, attribute: &'static str, line: u32 },
    #[error("invalid value at line {line}: {message}")]
    InvalidValue { message: String, line: u32 },
    #[error("document has {0} process elements, expected exactly one")]
    ProcessCount(usize),
    #[error("root element is not a BPMN 2.0 `definitions`")]
    NotBpmn,
}

/// A parsed model plus non-fatal findings (unknown attributes).
#[derive(Debug, Clone)]
pub struct ParsedBpmn {
    pub model: ProcessModel,
    pub warnings: Vec<String>,
}

pub fn parse_bpmn(xml: &str) -> Result<ProcessModel, BpmnError> {
    parse_bpmn_with_warnings(xml).map(|p| p.model)
}

pub fn parse_bpmn_with_warnings(xml: &str) -> Result<ParsedBpmn, BpmnError> {
    let doc = Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        BpmnError::XmlSyntaxError { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let root = doc.root_element();
    if root.tag_name().namespace() != Some(BPMN_NS) || root.tag_name().name() != "definitions" {
        return Err(BpmnError::NotBpmn);
    }
    let processes: Vec<_> = root.children().filter(|c| is_bpmn(c, "process")).collect();
    if processes.len() != 1 {
        return Err(BpmnError::ProcessCount(processes.len()));
    }
    let mut r = Reader { doc: &doc, warnings: Vec::new(), model: ProcessModel::default(), default_refs: Vec::new() };
    r.process(processes[0])?;
    r.resolve()?;
    Ok(ParsedBpmn { model: r.model, warnings: r.warnings })
}

fn is_bpmn(n: &XmlNode, name: &str) -> bool {
    n.is_element() && n.tag_name().namespace() == Some(BPMN_NS) && n.tag_name().name() == name
}

fn is_bcext(n: &XmlNode, name: &str) -> bool {
    n.is_element() && n.tag_name().namespace() == Some(BCEXT_NS) && n.tag_name().name() == name
}

struct Reader<'d, 'i> {
    doc: &'d Document<'i>,
    warnings: Vec<String>,
    model: ProcessModel,
    /// (gateway id, default flow id) pairs resolved after all flows are read.
    default_refs: Vec<(String, String)>,
}

impl<'d, 'i> Reader<'d, 'i> {
    fn line(&self, n: XmlNode) -> u32 {
        self.doc.text_pos_at(n.range().start).row
    }

    fn qname(n: XmlNode) -> String {
        match n.tag_name().namespace() {
            Some(BPMN_NS) => format!("bpmn:{}", n.tag_name().name()),
            Some(BCEXT_NS) => format!("bcext:{}", n.tag_name().name()),
            _ => n.tag_name().name().to_string(),
        }
    }

    fn unknown(&self, n: XmlNode) -> BpmnError {
        BpmnError::UnknownElement { name: Self::qname(n), line: self.line(n) }
    }

    /// Warns about plain or `bcext:` attributes outside the known set.
    fn check_attrs(&mut self, n: XmlNode, known: &[&str]) {
        for a in n.attributes() {
            let ns = a.namespace();
            if (ns.is_none() || ns == Some(BCEXT_NS)) && !known.contains(&a.name()) {
                let line = self.line(n);
                self.warnings.push(format!(
                    "line {line}: ignoring unknown attribute `{}` on `{}`",
                    a.name(),
                    Self::qname(n)
                ));
            }
        }
    }

    fn req(&self, n: XmlNode, attr: &'static str) -> Result<String, BpmnError> {
        n.attribute(attr).map(str::to_string).ok_or_else(|| BpmnError::MissingAttribute {
            element: Self::qname(n),
            attribute: attr,
            line: self.line(n),
        })
    }

    fn ty(&self, n: XmlNode) -> Result<ValueType, BpmnError> {
        let t = self.req(n, "type")?;
        ValueType::parse(&t)
            .ok_or_else(|| BpmnError::InvalidValue { message: format!("unknown type `{t}`"), line: self.line(n) })
    }

    fn process(&mut self, p: XmlNode) -> Result<(), BpmnError> {
        self.check_attrs(p, &["id", "name", "isExecutable"]);
        self.model.id = self.req(p, "id")?;
        self.model.name = p.attribute("name").unwrap_or_default().to_string();
        for c in p.children().filter(XmlNode::is_element) {
            if c.tag_name().namespace() != Some(BPMN_NS) {
                return Err(self.unknown(c));
            }
            let kind = match c.tag_name().name() {
                "startEvent" => Some(NodeKind::StartEvent),
                "endEvent" => Some(NodeKind::EndEvent),
                "task" => Some(NodeKind::DefaultTask),
                "userTask" => Some(NodeKind::UserTask),
                "scriptTask" => Some(NodeKind::ScriptTask),
                "exclusiveGateway" => Some(NodeKind::XorGateway),
                "parallelGateway" => Some(NodeKind::AndGateway),
                _ => None,
            };
            match (kind, c.tag_name().name()) {
                (Some(k), _) => self.node(c, k)?,
                (None, "sequenceFlow") => self.flow(c)?,
                (None, "extensionElements") => self.process_extensions(c)?,
                (None, "documentation" | "laneSet" | "textAnnotation" | "association") => {}
                (None, name) if is_known_bpmn_flow_element(name) => {
                    return Err(BpmnError::UnsupportedElement { name: Self::qname(c), line: self.line(c) })
                }
                _ => return Err(self.unknown(c)),
            }
        }
        Ok(())
    }

    fn node(&mut self, c: XmlNode, kind: NodeKind) -> Result<(), BpmnError> {
        let mut known = vec!["id", "name"];
        if kind == NodeKind::XorGateway {
            known.push("default");
        }
        if kind == NodeKind::ScriptTask {
            known.push("scriptFormat");
        }
        if kind.is_gateway() {
            known.push("gatewayDirection");
        }
        self.check_attrs(c, &known);
        let id = self.req(c, "id")?;
        let mut node = Node::new(&id, kind, c.attribute("name").unwrap_or_default());
        if let Some(d) = c.attribute("default") {
            self.default_refs.push((id.clone(), d.to_string()));
        }
        for ch in c.children().filter(XmlNode::is_element) {
            if is_bpmn(&ch, "incoming") || is_bpmn(&ch, "outgoing") || is_bpmn(&ch, "documentation") {
                continue;
            }
            if is_bpmn(&ch, "script") && kind == NodeKind::ScriptTask {
                let body = ch.text().unwrap_or_default();
                node.script = parse_script(body)
                    .map_err(|source| BpmnError::ConditionParseError { element: id.clone(), source })?;
                continue;
            }
            if is_bpmn(&ch, "extensionElements") {
                for ext in ch.children().filter(XmlNode::is_element) {
                    if is_bcext(&ext, "input") {
                        self.check_attrs(ext, &["name", "type"]);
                        node.inputs.push(TaskInput { name: self.req(ext, "name")?, ty: self.ty(ext)? });
                    } else {
                        return Err(self.unknown(ext));
                    }
                }
                continue;
            }
            return Err(self.unknown(ch));
        }
        self.model.nodes.push(node);
        Ok(())
    }

    fn flow(&mut self, c: XmlNode) -> Result<(), BpmnError> {
        self.check_attrs(c, &["id", "name", "sourceRef", "targetRef"]);
        let id = self.req(c, "id")?;
        let mut f = SequenceFlow::new(&id, &self.req(c, "sourceRef")?, &self.req(c, "targetRef")?);
        for ch in c.children().filter(XmlNode::is_element) {
            if is_bpmn(&ch, "conditionExpression") {
                let text = ch.text().unwrap_or_default();
                f.condition = Some(
                    parse_condition(text)
                        .map_err(|source| BpmnError::ConditionParseError { element: id.clone(), source })?,
                );
            } else if !is_bpmn(&ch, "documentation") && !is_bpmn(&ch, "extensionElements") {
                return Err(self.unknown(ch));
            }
        }
        self.model.flows.push(f);
        Ok(())
    }

    fn process_extensions(&mut self, ext: XmlNode) -> Result<(), BpmnError> {
        for c in ext.children().filter(XmlNode::is_element) {
            if is_bcext(&c, "variables") {
                for v in c.children().filter(XmlNode::is_element) {
                    if !is_bcext(&v, "variable") {
                        return Err(self.unknown(v));
                    }
                    self.variable(v)?;
                }
            } else if is_bcext(&c, "participant") {
                self.check_attrs(c, &["name"]);
                self.model.participants.push(self.req(c, "name")?);
            } else if is_bcext(&c, "smartContractInterface") {
                self.interface(c)?;
            } else if is_bcext(&c, "invocation") {
                self.invocation(c)?;
            } else {
                return Err(self.unknown(c));
            }
        }
        Ok(())
    }

    fn variable(&mut self, v: XmlNode) -> Result<(), BpmnError> {
        self.check_attrs(v, &["name", "type", "initial"]);
        let ty = self.ty(v)?;
        let initial = match v.attribute("initial") {
            None => None,
            Some(text) => Some(Value::parse_as(ty, text).ok_or_else(|| BpmnError::InvalidValue {
                message: format!("`{text}` is not a valid {ty} literal"),
                line: self.line(v),
            })?),
        };
        self.model.variables.push(ProcessVariableDecl { name: self.req(v, "name")?, ty, initial });
        Ok(())
    }

    fn interface(&mut self, c: XmlNode) -> Result<(), BpmnError> {
        self.check_attrs(c, &["id", "name", "contractAddress"]);
        let contract_address = match c.attribute("contractAddress") {
            Some(a) => Some(a.parse::<Address>()?),
            None => None,
        };
        let mut decl = SmartContractInterfaceDecl {
            id: self.req(c, "id")?,
            name: self.req(c, "name")?,
            contract_address,
            functions: Vec::new(),
        };
        for f in c.children().filter(XmlNode::is_element) {
            if !is_bcext(&f, "function") {
                return Err(self.unknown(f));
            }
            self.check_attrs(f, &["name"]);
            let mut func = SmartContractFunctionDecl { name: self.req(f, "name")?, inputs: vec![], outputs: vec![] };
            for p in f.children().filter(XmlNode::is_element) {
                let list = if is_bcext(&p, "input") {
                    &mut func.inputs
                } else if is_bcext(&p, "output") {
                    &mut func.outputs
                } else {
                    return Err(self.unknown(p));
                };
                self.check_attrs(p, &["name", "type"]);
                list.push(FunctionParameter { name: self.req(p, "name")?, ty: self.ty(p)? });
            }
            decl.functions.push(func);
        }
        self.model.interfaces.push(decl);
        Ok(())
    }

    fn invocation(&mut self, c: XmlNode) -> Result<(), BpmnError> {
        self.check_attrs(c, &["sourceTask", "targetInterface", "fnName"]);
        let mut b = InvocationBinding {
            source_task: self.req(c, "sourceTask")?,
            target_interface: self.req(c, "targetInterface")?,
            fn_name: self.req(c, "fnName")?,
            input_bindings: vec![],
            output_bindings: vec![],
        };
        for p in c.children().filter(XmlNode::is_element) {
            if is_bcext(&p, "bindIn") {
                self.check_attrs(p, &["param", "source"]);
                let src_text = self.req(p, "source")?;
                let source = parse_binding_source(&src_text).map_err(|source| BpmnError::ConditionParseError {
                    element: format!("{}.{}", b.source_task, b.fn_name),
                    source,
                })?;
                b.input_bindings.push(ParameterBinding { param: self.req(p, "param")?, source });
            } else if is_bcext(&p, "bindOut") {
                self.check_attrs(p, &["return", "target"]);
                b.output_bindings.push(ReturnBinding { output: self.req(p, "return")?, target: self.req(p, "target")? });
            } else {
                return Err(self.unknown(p));
            }
        }
        self.model.invocations.push(b);
        Ok(())
    }

    /// Cross-reference checks that need the whole process.
    fn resolve(&mut self) -> Result<(), BpmnError> {
        let m = &mut self.model;
        let mut ids = BTreeSet::new();
        let all = m.nodes.iter().map(|n| &n.id).chain(m.flows.iter().map(|f| &f.id)).chain(m.interfaces.iter().map(|i| &i.id));
        for id in all {
            if !ids.insert(id.clone()) {
                return Err(BpmnError::DuplicateId(id.clone()));
            }
        }
        for f in &m.flows {
            for (end, kind) in [(&f.source, "source node"), (&f.target, "target node")] {
                if m.node(end).is_none() {
                    return Err(BpmnError::DanglingReference { element: f.id.clone(), kind, reference: end.clone() });
                }
            }
        }
        for (gw, flow) in std::mem::take(&mut self.default_refs) {
            let Some(f) = m.flows.iter_mut().find(|f| f.id == flow) else {
                return Err(BpmnError::DanglingReference { element: gw, kind: "default flow", reference: flow });
            };
            f.is_default = true;
        }
        for b in &m.invocations {
            let el = format!("invocation {}.{}", b.source_task, b.fn_name);
            if m.node(&b.source_task).is_none() {
                return Err(BpmnError::DanglingReference { element: el, kind: "task", reference: b.source_task.clone() });
            }
            if m.interface(&b.target_interface).is_none() {
                return Err(BpmnError::DanglingReference {
                    element: el,
                    kind: "interface",
                    reference: b.target_interface.clone(),
                });
            }
        }
        Ok(())
    }
}

fn is_known_bpmn_flow_element(name: &str) -> bool {
    matches!(
        name,
        "inclusiveGateway"
            | "eventBasedGateway"
            | "complexGateway"
            | "subProcess"
            | "callActivity"
            | "serviceTask"
            | "sendTask"
            | "receiveTask"
            | "manualTask"
            | "businessRuleTask"
            | "intermediateCatchEvent"
            | "intermediateThrowEvent"
            | "boundaryEvent"
            | "dataObject"
            | "dataObjectReference"
            | "dataStoreReference"
            | "transaction"
    )
}

#[cfg(test)]
mod tests;
