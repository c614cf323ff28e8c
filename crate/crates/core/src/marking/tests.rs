use super::*;
use crate::bpmn::{parse_bpmn, parse_condition, parse_script};
use crate::ir::{Node, ProcessModel, SequenceFlow, ValueType};
use ethnum::U256;

fn model(nodes: &[(&str, NodeKind)], flows: &[(&str, &str)]) -> ProcessModel {
    let mut m = ProcessModel { id: "m".into(), ..Default::default() };
    for (id, k) in nodes {
        m.nodes.push(Node::new(id, *k, &id.to_uppercase()));
    }
    for (i, (s, t)) in flows.iter().enumerate() {
        m.flows.push(SequenceFlow::new(&format!("f{i}"), s, t));
    }
    m
}

fn grain() -> ProcessModel {
    let xml = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/grain-title/process.bpmn"))
        .unwrap();
    parse_bpmn(&xml).unwrap()
}

fn u(v: u64) -> Value {
    Value::Uint(U256::from(v))
}

fn closed(a: &MarkingAutomaton, m: Marking) -> Marking {
    eager_closure(a, m, &VarEnv::new(), ClosureMode::NonDeterministic).unwrap()[0].0
}

#[test]
fn linear_masks() {
    use NodeKind::*;
    let m = model(&[("s", StartEvent), ("a", UserTask), ("b", UserTask), ("e", EndEvent)], &[("s", "a"), ("a", "b"), ("b", "e")]);
    let a = compile_marking(&m).unwrap();
    assert_eq!(a.initial_marking, Marking::bit(0));
    assert_eq!(a.external[0].alternatives, vec![Alternative { pre: Marking::bit(0), post: Marking::bit(1) }]);
    assert_eq!(a.external[1].alternatives, vec![Alternative { pre: Marking::bit(1), post: Marking::bit(2) }]);
    assert_eq!(a.end_mask, Marking::bit(2));
}

fn diamond() -> ProcessModel {
    use NodeKind::*;
    model(
        &[
            ("s", StartEvent),
            ("a", UserTask),
            ("split", AndGateway),
            ("b", UserTask),
            ("c", UserTask),
            ("join", AndGateway),
            ("d", UserTask),
            ("e", EndEvent),
        ],
        &[("s", "a"), ("a", "split"), ("split", "b"), ("split", "c"), ("b", "join"), ("c", "join"), ("join", "d"), ("d", "e")],
    )
}

#[test]
fn and_split_and_join_fold() {
    let a = compile_marking(&diamond()).unwrap();
    let by_name = |n: &str| a.external.iter().find(|t| t.task_id == n).unwrap();
    assert_eq!(by_name("a").alternatives[0].post, Marking::from_bits([2, 3]));
    assert_eq!(by_name("a").folded, vec!["split".to_string()]);
    let d = by_name("d");
    assert_eq!(d.alternatives.len(), 1);
    assert_eq!(d.alternatives[0].pre.count(), 2);
    assert!(a.autos.iter().all(|t| t.kind == NodeKind::EndEvent));

    for order in [["A", "B", "C", "D"], ["A", "C", "B", "D"]] {
        let mut m = closed(&a, a.initial_marking);
        let env = VarEnv::new();
        for t in order {
            let (next, _, _) = fire_external(&a, m, &env, t, &BTreeMap::new()).unwrap();
            m = closed(&a, next);
        }
        assert!(m.is_empty(), "{order:?}");
    }
}

#[test]
fn xor_join_gives_one_alternative_per_incoming_flow() {
    use NodeKind::*;
    let mut m = model(
        &[("s", StartEvent), ("x", XorGateway), ("b", UserTask), ("c", UserTask), ("j", XorGateway), ("d", UserTask), ("e", EndEvent)],
        &[("s", "x"), ("x", "b"), ("x", "c"), ("b", "j"), ("c", "j"), ("j", "d"), ("d", "e")],
    );
    m.flows[1].condition = Some(parse_condition("true").unwrap());
    m.flows[2].is_default = true;
    let a = compile_marking(&m).unwrap();
    let d = &a.external[a.external_index("D").unwrap()];
    assert_eq!(d.alternatives.len(), 2);
    assert_eq!(d.alternatives[0].pre, Marking::bit(3));
    assert_eq!(d.alternatives[1].pre, Marking::bit(4));
    // both enabled: lowest alternative fires
    let (_, _, alt) = fire_external(&a, Marking::from_bits([3, 4]), &VarEnv::new(), "D", &BTreeMap::new()).unwrap();
    assert_eq!(alt, 0);
}

#[test]
fn grain_create_title_masks() {
    let a = compile_marking(&grain()).unwrap();
    let t = &a.external[a.external_index("Create Grain Title").unwrap()];
    assert_eq!(t.alternatives.len(), 1);
    assert_eq!(t.alternatives[0].pre.count(), 2);
    assert_eq!(t.alternatives[0].post.count(), 1);
    assert_eq!(a.external.len(), 10);
}

#[test]
fn grain_initial_enabled_set() {
    let a = compile_marking(&grain()).unwrap();
    let m = closed(&a, a.initial_marking);
    let enabled: Vec<_> = enabled_external(&a, m).iter().map(|&(t, _)| a.external[t].name.as_str()).collect();
    assert_eq!(enabled, ["Registration Request Submitted"]);
    assert!(enabled_external(&a, Marking::EMPTY).is_empty());
    let pre = a.external[3].alternatives[0].pre;
    let only: Vec<_> = enabled_external(&a, pre).into_iter().map(|(t, _)| t).collect();
    assert_eq!(only, [3]);
}

#[test]
fn script_closure_computes_weight() {
    let g = grain();
    let a = compile_marking(&g).unwrap();
    let script = a.autos.iter().find(|t| t.name == "Calculate Grain Weight").unwrap();
    let mut env = g.initial_env();
    env.insert("truckWeightWithConsignment".into(), u(40));
    env.insert("truckWeightWithoutConsignment".into(), u(15));
    let (m, env, fired) = eager_closure_with(&a, script.pre[0], &env, &mut NoInvocations).unwrap();
    assert_eq!(env["consignmentWeight"], u(25));
    assert_eq!(fired, ["Script_weight"]);
    assert_eq!(m, script.outcomes[0].post);
}

#[test]
fn closure_of_quiet_marking_is_identity() {
    let a = compile_marking(&grain()).unwrap();
    let m = a.external[0].alternatives[0].pre;
    let out = eager_closure(&a, m, &VarEnv::new(), ClosureMode::Data).unwrap();
    assert_eq!(out, vec![(m, VarEnv::new())]);
}

#[test]
fn xor_nondeterministic_explores_both_branches() {
    let g = grain();
    let a = compile_marking(&g).unwrap();
    let check = a.autos.iter().find(|t| t.name == "Check Escrow Balance").unwrap();
    let outs = eager_closure(&a, check.pre[0], &VarEnv::new(), ClosureMode::NonDeterministic).unwrap();
    assert_eq!(outs.len(), 2);
    let names: Vec<Vec<&str>> = outs
        .iter()
        .map(|(m, _)| enabled_external(&a, *m).iter().map(|&(t, _)| a.external[t].name.as_str()).collect())
        .collect();
    assert!(names.contains(&vec!["Asset Swap"]));
    assert!(names.contains(&vec!["Refund"]));

    let mut env = g.initial_env();
    env.insert("escrowBalance".into(), u(5));
    env.insert("price".into(), u(5));
    let (m, _, _) = eager_closure_with(&a, check.pre[0], &env, &mut NoInvocations).unwrap();
    let swap = a.external_index("Asset Swap").unwrap();
    assert_eq!(enabled_external(&a, m), vec![(swap, 0)]);
    env.insert("price".into(), u(6));
    let (m, _, _) = eager_closure_with(&a, check.pre[0], &env, &mut NoInvocations).unwrap();
    let refund = a.external_index("Refund").unwrap();
    assert_eq!(enabled_external(&a, m), vec![(refund, 0)]);
}

#[test]
fn no_branch_taken() {
    use NodeKind::*;
    let mut m = model(
        &[("s", StartEvent), ("x", XorGateway), ("b", UserTask), ("c", UserTask), ("e1", EndEvent), ("e2", EndEvent)],
        &[("s", "x"), ("x", "b"), ("x", "c"), ("b", "e1"), ("c", "e2")],
    );
    m.flows[1].condition = Some(parse_condition("false").unwrap());
    m.flows[2].condition = Some(parse_condition("1 > 2").unwrap());
    let a = compile_marking(&m).unwrap();
    assert_eq!(
        eager_closure(&a, a.initial_marking, &VarEnv::new(), ClosureMode::Data),
        Err(ClosureError::NoBranchTaken("x".into()))
    );
    assert_eq!(eager_closure(&a, a.initial_marking, &VarEnv::new(), ClosureMode::NonDeterministic).unwrap().len(), 2);
}

#[test]
fn condition_free_cycle_hits_budget() {
    use NodeKind::*;
    let m = model(
        &[("s", StartEvent), ("x", XorGateway), ("y", AndGateway), ("e", EndEvent)],
        &[("s", "x"), ("x", "y"), ("y", "x"), ("y", "e")],
    );
    let a = compile_marking(&m).unwrap();
    assert_eq!(
        eager_closure(&a, a.initial_marking, &VarEnv::new(), ClosureMode::Data),
        Err(ClosureError::NonTerminatingClosure(16))
    );
    assert!(matches!(
        eager_closure(&a, a.initial_marking, &VarEnv::new(), ClosureMode::NonDeterministic),
        Err(ClosureError::NonTerminatingClosure(_))
    ));
}

#[test]
fn fire_external_contract() {
    use NodeKind::*;
    let mut m = model(&[("s", StartEvent), ("a", UserTask), ("e", EndEvent)], &[("s", "a"), ("a", "e")]);
    m.nodes[1].inputs.push(TaskInput { name: "weight".into(), ty: ValueType::Uint256 });
    let a = compile_marking(&m).unwrap();
    assert_eq!(
        fire_external(&a, Marking::EMPTY, &VarEnv::new(), "A", &BTreeMap::new()),
        Err(FireError::NotEnabled("A".into()))
    );
    let args = BTreeMap::from([("weight".to_string(), u(25))]);
    let (next, env, _) = fire_external(&a, a.initial_marking, &VarEnv::new(), "A", &args).unwrap();
    assert_eq!(env["weight"], u(25));
    assert_eq!(next, Marking::bit(1));
    assert_eq!(
        fire_external(&a, a.initial_marking, &VarEnv::new(), "Z", &args),
        Err(FireError::UnknownTask("Z".into()))
    );
}

#[test]
fn script_errors_surface() {
    use NodeKind::*;
    let mut m = model(&[("s", StartEvent), ("x", ScriptTask), ("e", EndEvent)], &[("s", "x"), ("x", "e")]);
    m.variables.push(crate::ir::ProcessVariableDecl { name: "v".into(), ty: ValueType::Uint256, initial: None });
    m.nodes[1].script = parse_script("v = v - 1").unwrap();
    let a = compile_marking(&m).unwrap();
    let err = eager_closure(&a, a.initial_marking, &m.initial_env(), ClosureMode::Data).unwrap_err();
    assert!(matches!(err, ClosureError::Script { source: crate::ir::EvalError::ArithmeticUnderflow, .. }));
}

#[test]
fn compile_is_deterministic_and_rejects_invalid() {
    let g = grain();
    assert_eq!(compile_marking(&g).unwrap().dump(), compile_marking(&g).unwrap().dump());
    let mut bad = g.clone();
    bad.flows[0].target = "ghost".into();
    assert!(matches!(compile_marking(&bad), Err(CompileError::InvalidModel(_))));
}
