use super::*;
use crate::bpmn::parse_bpmn;
use crate::marking::compile_marking;
use crate::registry::parse_registry;
use ethnum::U256;

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/grain-title");

fn read(name: &str) -> String {
    std::fs::read_to_string(format!("{DIR}/{name}")).unwrap()
}

struct Fx {
    model: ProcessModel,
    automaton: MarkingAutomaton,
    deployment: Deployment,
    scenario: Scenario,
}

fn fixture(bpmn: &str) -> Fx {
    let model = parse_bpmn(&read(bpmn)).unwrap();
    let automaton = compile_marking(&model).unwrap();
    let specs = vec![parse_registry(&read("lorikeet-coin.json")).unwrap(), parse_registry(&read("grain-title.json")).unwrap()];
    let scenario = Scenario::parse(&read("scenario.json")).unwrap();
    let deployment = Deployment::deploy(&model, &specs, scenario.deployer()).unwrap();
    Fx { model, automaton, deployment, scenario }
}

fn trace(name: &str) -> Vec<TraceEvent> {
    read(&format!("traces/{name}")).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn farmer() -> Address {
    "0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed".parse().unwrap()
}

fn buyer() -> Address {
    "0xfB6916095ca1df60bB79Ce92cE3Ea74c37c5d359".parse().unwrap()
}

fn lrk(d: &Deployment) -> Address {
    d.address_of("LorikeetCoin").unwrap()
}

fn titles(d: &Deployment) -> Address {
    d.address_of("GrainTitleRegistry").unwrap()
}

fn balance(d: &Deployment, a: Address) -> U256 {
    d.registries.with(lrk(d), |r| r.as_ledger().unwrap().balance_of(a)).unwrap()
}

fn u(v: u64) -> Value {
    Value::Uint(U256::from(v))
}

#[test]
fn hard_coded_addresses_are_used() {
    let fx = fixture("process.bpmn");
    assert_eq!(lrk(&fx.deployment), "0xD3E4EBe81b55EA73b559da31ADf2CAc3b254ea11".parse().unwrap());
    assert_eq!(titles(&fx.deployment), "0xA9998dBe75D795556eA821E37cD2DE1F373BFd91".parse().unwrap());
    assert!(fx.deployment.bindings(&fx.model).is_empty());
}

#[test]
fn fresh_instance_has_one_enabled_task() {
    let fx = fixture("process.bpmn");
    let inst = fx.deployment.instantiate(&fx.model, &fx.automaton, &fx.scenario, 0).unwrap();
    assert_eq!(inst.enabled_tasks(), ["Registration Request Submitted"]);
    assert_eq!(inst.status, Status::Running);
}

#[test]
fn swap_run_moves_title_and_payment() {
    let fx = fixture("process.bpmn");
    let d = &fx.deployment;
    let farmer_before = balance(d, farmer());
    let buyer_before = balance(d, buyer());
    let mut inst = d.instantiate(&fx.model, &fx.automaton, &fx.scenario, 0).unwrap();
    for ev in trace("swap.jsonl") {
        let out = inst.invoke_event(&ev);
        assert!(out.is_accepted(), "{}: {out:?}", ev.task);
    }
    assert_eq!(inst.status, Status::Completed("End_sold".into()));
    let title = inst.env["titleId"].as_address().unwrap();
    let owner = d.registries.with(titles(d), |r| r.as_store().unwrap().record_get_owner(title).unwrap()).unwrap();
    assert_eq!(owner, buyer());
    assert_eq!(balance(d, farmer()), farmer_before + 2500);
    assert_eq!(balance(d, buyer()), buyer_before - 2500);
    assert_eq!(balance(d, inst.process_address), U256::ZERO);
}

#[test]
fn refund_run_restores_buyer_and_returns_title() {
    let fx = fixture("process.bpmn");
    let d = &fx.deployment;
    let buyer_before = balance(d, buyer());
    let farmer_before = balance(d, farmer());
    let mut inst = d.instantiate(&fx.model, &fx.automaton, &fx.scenario, 0).unwrap();
    for ev in trace("refund.jsonl") {
        assert!(inst.invoke_event(&ev).is_accepted(), "{}", ev.task);
    }
    assert_eq!(inst.status, Status::Completed("End_refunded".into()));
    assert_eq!(balance(d, buyer()), buyer_before);
    assert_eq!(balance(d, farmer()), farmer_before);
    let title = inst.env["titleId"].as_address().unwrap();
    let owner = d.registries.with(titles(d), |r| r.as_store().unwrap().record_get_owner(title).unwrap()).unwrap();
    assert_eq!(owner, farmer());
}

#[test]
fn create_title_records_process_ownership() {
    let fx = fixture("process.bpmn");
    let d = &fx.deployment;
    let mut inst = d.instantiate(&fx.model, &fx.automaton, &fx.scenario, 0).unwrap();
    let events = trace("swap.jsonl");
    for ev in &events[..6] {
        assert!(inst.invoke_event(ev).is_accepted());
    }
    assert!(inst.invoke_event(&events[6]).is_accepted());
    let title = inst.env["titleId"].as_address().unwrap();
    let rec = d.registries.with(titles(d), |r| r.as_store().unwrap().record(title).unwrap().clone()).unwrap();
    assert_eq!(rec.owner, inst.process_address);
    assert_eq!(rec.attrs, vec![u(25000), u(3)]);
}

#[test]
fn early_create_title_is_rejected_without_side_effects() {
    let fx = fixture("process.bpmn");
    let mut inst = fx.deployment.instantiate(&fx.model, &fx.automaton, &fx.scenario, 0).unwrap();
    let events = trace("shuffled.jsonl");
    for ev in &events[..3] {
        assert!(inst.invoke_event(ev).is_accepted());
    }
    let (m, env) = (inst.marking, inst.env.clone());
    let out = inst.invoke_event(&events[3]);
    assert_eq!(out, Outcome::Rejected(RejectReason::NotEnabled("Create Grain Title".into())));
    assert_eq!((inst.marking, &inst.env), (m, &env));
    assert_eq!(inst.event_log.len(), 4);
    assert_eq!(inst.status, Status::RunningWithRejections);
}

#[test]
fn missing_allowance_rejects_deposit_atomically() {
    let fx = fixture("process.bpmn");
    let d = &fx.deployment;
    let scenario = Scenario { setup: fx.scenario.setup[..1].to_vec(), ..fx.scenario.clone() };
    let mut inst = d.instantiate(&fx.model, &fx.automaton, &scenario, 0).unwrap();
    let events = trace("swap.jsonl");
    for ev in &events[..7] {
        assert!(inst.invoke_event(ev).is_accepted());
    }
    let before = d.registries.snapshot();
    let (m, env) = (inst.marking, inst.env.clone());
    let out = inst.invoke_event(&events[7]);
    assert!(
        matches!(&out, Outcome::Rejected(RejectReason::RegistryError { error: RegistryError::Ledger(LedgerError::InsufficientAllowance { .. }), .. })),
        "{out:?}"
    );
    assert_eq!(d.registries.snapshot(), before);
    assert_eq!((inst.marking, &inst.env), (m, &env));
}

#[test]
fn injected_fault_mid_swap_rolls_back() {
    let fx = fixture("process.bpmn");
    let d = &fx.deployment;
    let mut inst = d.instantiate(&fx.model, &fx.automaton, &fx.scenario, 0).unwrap();
    let events = trace("swap.jsonl");
    for ev in &events[..8] {
        assert!(inst.invoke_event(ev).is_accepted());
    }
    let before = d.registries.snapshot();
    let (m, env) = (inst.marking, inst.env.clone());
    inst.inject_fault(1);
    assert!(!inst.invoke_event(&events[8]).is_accepted());
    assert_eq!(d.registries.snapshot(), before);
    assert_eq!((inst.marking, &inst.env), (m, &env));
    assert!(inst.invoke_event(&events[8]).is_accepted());
    assert!(inst.is_completed());
}

#[test]
fn bad_arguments_are_rejected() {
    let fx = fixture("process.bpmn");
    let mut inst = fx.deployment.instantiate(&fx.model, &fx.automaton, &fx.scenario, 0).unwrap();
    let mut ev = trace("swap.jsonl").remove(0);
    ev.args.as_mut().unwrap().insert("price".into(), serde_json::json!("lots"));
    assert!(matches!(inst.invoke_event(&ev), Outcome::Rejected(RejectReason::BadArguments(_))));
    assert!(matches!(inst.invoke_event(&TraceEvent::task("Nope")), Outcome::Rejected(RejectReason::UnknownTask(_))));
}

#[test]
fn address_binding_rules() {
    let fx = fixture("process-noaddr.bpmn");
    let d = &fx.deployment;
    let bindings = d.bindings(&fx.model);
    assert_eq!(bindings.len(), 1);
    let err = new_instance(&fx.model, &fx.automaton, &BTreeMap::new(), d.registries.clone(), Address::ZERO).unwrap_err();
    assert_eq!(err, InstanceError::MissingAddressBinding("GrainTitleRegistry_iface".into()));
    let wrong = BTreeMap::from([("GrainTitleRegistry_iface".to_string(), Address([7; 20]))]);
    let err = new_instance(&fx.model, &fx.automaton, &wrong, d.registries.clone(), Address::ZERO).unwrap_err();
    assert!(matches!(err, InstanceError::UnknownRegistryAddress { .. }));
    let swapped = BTreeMap::from([("GrainTitleRegistry_iface".to_string(), lrk(d))]);
    let err = new_instance(&fx.model, &fx.automaton, &swapped, d.registries.clone(), Address::ZERO).unwrap_err();
    assert!(matches!(err, InstanceError::SignatureMismatch { .. }));
    assert!(new_instance(&fx.model, &fx.automaton, &bindings, d.registries.clone(), Address::ZERO).is_ok());
}

#[test]
fn fork_is_independent() {
    let fx = fixture("process.bpmn");
    let fork = fx.deployment.fork();
    let mut inst = fork.instantiate(&fx.model, &fx.automaton, &fx.scenario, 0).unwrap();
    for ev in trace("swap.jsonl") {
        inst.invoke_event(&ev);
    }
    assert_eq!(balance(&fx.deployment, farmer()), U256::new(1000));
    assert_eq!(balance(&fork, farmer()), U256::new(3500));
}
