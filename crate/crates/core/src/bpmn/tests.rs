use super::*;
use crate::ir::{validate_model, BindingSource, Expr};

fn wrap(body: &str) -> String {
    format!(
        r#"<?xml version="1.0"?>
<bpmn:definitions xmlns:bpmn="{BPMN_NS}" xmlns:bcext="{BCEXT_NS}">
  <bpmn:process id="p">{body}</bpmn:process>
</bpmn:definitions>"#
    )
}

const MINIMAL: &str = r#"
    <bpmn:startEvent id="s"/>
    <bpmn:userTask id="a" name="A"/>
    <bpmn:endEvent id="e"/>
    <bpmn:sequenceFlow id="f1" sourceRef="s" targetRef="a"/>
    <bpmn:sequenceFlow id="f2" sourceRef="a" targetRef="e"/>"#;

fn grain() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/grain-title/process.bpmn")).unwrap()
}

#[test]
fn minimal_document() {
    let m = parse_bpmn(&wrap(MINIMAL)).unwrap();
    assert_eq!(m.nodes.iter().filter(|n| n.kind == NodeKind::UserTask).count(), 1);
    assert_eq!(m.flows.len(), 2);
    assert!(validate_model(&m).is_valid());
}

#[test]
fn grain_interfaces() {
    let m = parse_bpmn(&grain()).unwrap();
    let reg = m.interfaces.iter().find(|i| i.name == "GrainTitleRegistry").unwrap();
    assert!(reg.functions.len() >= 3);
    for f in ["record_get_owner", "record_get_attrs", "record_create"] {
        assert!(reg.function(f).is_some(), "{f}");
    }
    let attrs = reg.function("record_get_attrs").unwrap();
    let outs: Vec<_> = attrs.outputs.iter().map(|p| (p.name.as_str(), p.ty)).collect();
    assert_eq!(outs, [("weight", ValueType::Uint256), ("quality", ValueType::Uint256)]);
    assert_eq!(
        reg.contract_address.unwrap().to_checksum(),
        "0xA9998dBe75D795556eA821E37cD2DE1F373BFd91"
    );
    let create = m.invocations.iter().find(|b| b.fn_name == "record_create").unwrap();
    assert_eq!(create.input_bindings[0].source, BindingSource::ProcessAddress);
    assert_eq!(m.task_count(), 12);
    assert_eq!(m.gateway_count(), 3);
    let report = validate_model(&m);
    assert_eq!(report.errors().count(), 0, "{:?}", report.diagnostics);
}

#[test]
fn malformed_contract_address() {
    let xml = wrap(&format!(
        r#"<bpmn:extensionElements><bcext:smartContractInterface id="i" name="X" contractAddress="0x123"/></bpmn:extensionElements>{MINIMAL}"#
    ));
    assert!(matches!(parse_bpmn(&xml), Err(BpmnError::MalformedAddress(_))));
}

#[test]
fn xml_syntax_error_has_position() {
    match parse_bpmn("<bpmn:definitions") {
        Err(BpmnError::XmlSyntaxError { line, .. }) => assert_eq!(line, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_element_is_error_unknown_attribute_is_warning() {
    let xml = wrap(&format!(r#"{MINIMAL}<foo:bar xmlns:foo="urn:x"/>"#));
    assert!(matches!(parse_bpmn(&xml), Err(BpmnError::UnknownElement { .. })));
    let xml = wrap(&MINIMAL.replace(r#"name="A""#, r#"name="A" colour="red""#));
    let parsed = parse_bpmn_with_warnings(&xml).unwrap();
    assert_eq!(parsed.warnings.len(), 1);
    assert!(parsed.warnings[0].contains("colour"));
    let xml = wrap(&format!(r#"{MINIMAL}<bpmn:inclusiveGateway id="g"/>"#));
    assert!(matches!(parse_bpmn(&xml), Err(BpmnError::UnsupportedElement { .. })));
}

#[test]
fn dangling_and_duplicate() {
    let xml = wrap(&MINIMAL.replace(r#"targetRef="e""#, r#"targetRef="nowhere""#));
    assert!(matches!(parse_bpmn(&xml), Err(BpmnError::DanglingReference { .. })));
    let xml = wrap(&MINIMAL.replace(r#"id="f2""#, r#"id="f1""#));
    assert_eq!(parse_bpmn(&xml).unwrap_err(), BpmnError::DuplicateId("f1".into()));
    let xml = wrap(&format!(
        r#"<bpmn:extensionElements><bcext:invocation sourceTask="a" targetInterface="ghost" fnName="f"/></bpmn:extensionElements>{MINIMAL}"#
    ));
    assert!(matches!(parse_bpmn(&xml), Err(BpmnError::DanglingReference { kind: "interface", .. })));
}

#[test]
fn condition_errors_are_reported() {
    let body = r#"
    <bpmn:startEvent id="s"/>
    <bpmn:exclusiveGateway id="g" default="f3"/>
    <bpmn:endEvent id="e"/>
    <bpmn:sequenceFlow id="f1" sourceRef="s" targetRef="g"/>
    <bpmn:sequenceFlow id="f2" sourceRef="g" targetRef="e"><bpmn:conditionExpression>a + * b</bpmn:conditionExpression></bpmn:sequenceFlow>
    <bpmn:sequenceFlow id="f3" sourceRef="g" targetRef="e"/>"#;
    match parse_bpmn(&wrap(body)) {
        Err(BpmnError::ConditionParseError { element, source }) => {
            assert_eq!(element, "f2");
            assert_eq!(source.offset, 4);
        }
        other => panic!("{other:?}"),
    }
    let m = parse_bpmn(&wrap(&body.replace("a + * b", "x &gt; 3"))).unwrap();
    assert_eq!(m.flows[1].condition, Some(Expr::bin(crate::ir::BinaryOp::Gt, Expr::var("x"), Expr::int(3))));
    assert!(m.flows[2].is_default);
}

#[test]
fn document_order_is_preserved() {
    let m = parse_bpmn(&grain()).unwrap();
    let ids: Vec<_> = m.flows.iter().map(|f| f.id.as_str()).collect();
    assert_eq!(ids[..3], ["Flow_1", "Flow_2", "Flow_3"]);
    assert_eq!(ids[14..16], ["Flow_swap", "Flow_refund"]);
}

#[test]
fn writer_round_trip() {
    let m = parse_bpmn(&grain()).unwrap();
    let again = parse_bpmn(&write_bpmn(&m)).unwrap();
    assert_eq!(again, m);
}
