use std::path::PathBuf;

use super::*;
use crate::fixture::Fixture;
use crate::ir::{Node, NodeKind, ProcessModel, SequenceFlow};
use crate::marking::compile_marking;

fn fixtures() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

fn grain() -> Fixture {
    Fixture::load(fixtures().join("grain-title")).unwrap()
}

fn model(nodes: &[(&str, NodeKind)], flows: &[(&str, &str)]) -> ProcessModel {
    ProcessModel {
        id: "m".into(),
        nodes: nodes.iter().map(|(id, k)| Node::new(id, *k, id)).collect(),
        flows: flows.iter().enumerate().map(|(i, (s, t))| SequenceFlow::new(&format!("f{i}"), s, t)).collect(),
        ..ProcessModel::default()
    }
}

fn linear() -> ProcessModel {
    use NodeKind::*;
    model(
        &[("s", StartEvent), ("A", UserTask), ("B", UserTask), ("C", UserTask), ("e", EndEvent)],
        &[("s", "A"), ("A", "B"), ("B", "C"), ("C", "e")],
    )
}

fn parallel() -> ProcessModel {
    use NodeKind::*;
    model(
        &[("s", StartEvent), ("A", UserTask), ("g1", AndGateway), ("B", UserTask), ("C", UserTask), ("g2", AndGateway), ("e", EndEvent)],
        &[("s", "A"), ("A", "g1"), ("g1", "B"), ("g1", "C"), ("B", "g2"), ("C", "g2"), ("g2", "e")],
    )
}

fn names(traces: &[Trace]) -> Vec<Vec<String>> {
    traces.iter().map(task_names).collect()
}

/// Counts every word over the external alphabet up to `len` that the
/// token game accepts in strict mode.
fn brute_force_count(m: &ProcessModel, len: usize) -> usize {
    let alphabet: Vec<String> = m.external_tasks().map(|n| n.name.clone()).collect();
    let game = TokenGame::new(m);
    let mut count = 0;
    let mut words: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..=len {
        let mut next = Vec::new();
        for w in &words {
            let t: Trace = w.iter().map(|s| TraceEvent::task(s)).collect();
            if game.classify(&t, Mode::Strict).is_conforming() {
                count += 1;
            }
            for a in &alphabet {
                let mut w2 = w.clone();
                w2.push(a.clone());
                next.push(w2);
            }
        }
        words = next;
    }
    count
}

#[test]
fn linear_model_has_one_strict_trace() {
    let a = compile_marking(&linear()).unwrap();
    let t = enumerate_conforming(&a, 5, Mode::Strict, DEFAULT_STATE_BUDGET).unwrap();
    assert_eq!(names(&t), vec![vec!["A", "B", "C"]]);
}

#[test]
fn parallel_branches_interleave() {
    let m = parallel();
    let a = compile_marking(&m).unwrap();
    let t = enumerate_conforming(&a, 5, Mode::Strict, DEFAULT_STATE_BUDGET).unwrap();
    assert_eq!(t.len(), brute_force_count(&m, 4));
    assert_eq!(names(&t), vec![vec!["A", "B", "C"], vec!["A", "C", "B"]]);
    let prefixes = enumerate_conforming(&a, 5, Mode::Prefix, DEFAULT_STATE_BUDGET).unwrap();
    assert_eq!(prefixes.len(), 6);
}

#[test]
fn budget_is_enforced() {
    let a = compile_marking(&parallel()).unwrap();
    assert_eq!(enumerate_conforming(&a, 5, Mode::Strict, 3), Err(HarnessError::BudgetExceeded(3)));
}

#[test]
fn grain_has_swap_and_refund_bases() {
    let f = grain();
    let all = enumerate_conforming(&f.automaton, f.automaton.external.len(), Mode::Strict, DEFAULT_STATE_BUDGET).unwrap();
    // two outcomes times the interleavings of the two 2-task parallel branches
    assert_eq!(all.len(), 2 * 6);
    let bases = select_bases(&all, 2);
    let swap = task_names(&bases[0]);
    let refund = task_names(&bases[1]);
    assert_eq!(swap.last().unwrap(), "Asset Swap");
    assert_eq!(refund.last().unwrap(), "Refund");
    assert_eq!(
        swap,
        [
            "Registration Request Submitted",
            "Truck Carrying Grain Is Weighed",
            "Grain Sample Taken",
            "Grain Quality Evaluated",
            "Grain Dropped At Silo",
            "Truck Is Weighed Again",
            "Create Grain Title",
            "Interest To Buy Title Expressed",
            "Asset Swap"
        ]
    );
    for b in &bases {
        assert!(classify(&f.model, &f.automaton, b, Mode::Strict, None).is_conforming());
        assert!(oracle_classify(&f.model, b, Mode::Strict).is_conforming());
    }
}

#[test]
fn classification_examples() {
    let f = grain();
    let (m, a) = (&f.model, &f.automaton);
    assert_eq!(classify(m, a, &Trace::new(), Mode::Strict, None), Verdict::NonConforming(Failure::EndNotReached));
    assert_eq!(classify(m, a, &Trace::new(), Mode::Prefix, None), Verdict::Conforming);
    let early = trace_of(&["Registration Request Submitted", "Truck Carrying Grain Is Weighed", "Create Grain Title"]);
    assert_eq!(classify(m, a, &early, Mode::Prefix, None).first_bad_index(), Some(2));
    assert_eq!(oracle_classify(m, &early, Mode::Prefix).first_bad_index(), Some(2));
    let unknown = trace_of(&["Registration Request Submitted", "Bribe Inspector"]);
    assert_eq!(classify(m, a, &unknown, Mode::Prefix, None).first_bad_index(), Some(1));
}

#[test]
fn shuffled_fixture_trace_is_rejected_at_the_moved_event() {
    let f = grain();
    let trace = parse_trace(&std::fs::read_to_string(f.trace_path("shuffled")).unwrap()).unwrap();
    let world = World {
        deployment: crate::interp::Deployment::deploy(&f.model, &f.specs, f.scenario.deployer()).unwrap(),
        scenario: f.scenario.clone(),
    };
    let v = classify(&f.model, &f.automaton, &trace, Mode::Strict, Some(&world));
    assert_eq!(v.first_bad_index(), Some(3));
    let bare: Trace = trace.iter().map(|e| TraceEvent::task(&e.task)).collect();
    assert_eq!(classify(&f.model, &f.automaton, &bare, Mode::Strict, None).first_bad_index(), Some(3));
    assert_eq!(oracle_classify(&f.model, &bare, Mode::Strict).first_bad_index(), Some(3));
}

#[test]
fn data_traces_follow_the_guards() {
    let f = grain();
    let world = World {
        deployment: crate::interp::Deployment::deploy(&f.model, &f.specs, f.scenario.deployer()).unwrap(),
        scenario: f.scenario.clone(),
    };
    let swap = parse_trace(&std::fs::read_to_string(f.trace_path("swap")).unwrap()).unwrap();
    assert!(classify(&f.model, &f.automaton, &swap, Mode::Strict, Some(&world)).is_conforming());
    // deposit 2000 takes the refund branch, so Asset Swap is not enabled
    let mut wrong = swap.clone();
    wrong[7].args.as_mut().unwrap().insert("deposit".into(), serde_json::json!("2000"));
    assert_eq!(classify(&f.model, &f.automaton, &wrong, Mode::Strict, Some(&world)).first_bad_index(), Some(8));
    // the world itself is untouched by classification
    assert!(classify(&f.model, &f.automaton, &swap, Mode::Strict, Some(&world)).is_conforming());
}

#[test]
fn trace_files_round_trip() {
    let text = std::fs::read_to_string(grain().trace_path("swap")).unwrap();
    let t = parse_trace(&text).unwrap();
    assert_eq!(t.len(), 9);
    assert_eq!(parse_trace(&render_trace(&t)).unwrap(), t);
    assert!(matches!(parse_trace("{\"task\": 1}"), Err(HarnessError::TraceSyntax { line: 1, .. })));
}

#[test]
fn mutation_operators() {
    let ab = trace_of(&["a", "b"]);
    let swap_only = OperatorWeights { add: 0, remove: 0, swap: 1 };
    let m = mutate(&ab, 7, swap_only, &[], &[]).unwrap();
    assert_eq!(m.trace, trace_of(&["b", "a"]));
    assert_eq!(m.operator, Operator::Swap);

    let remove_only = OperatorWeights { add: 0, remove: 1, swap: 0 };
    assert_eq!(mutate(&trace_of(&["a"]), 1, remove_only, &[], &[]).unwrap().trace, Trace::new());
    // the only remove result equals a base trace
    assert_eq!(
        mutate(&trace_of(&["a"]), 1, remove_only, &[], &[Trace::new()]),
        Err(HarnessError::MutationExhausted(MAX_MUTATION_ATTEMPTS))
    );
    // swap on a single event is never applicable
    assert!(mutate(&trace_of(&["a"]), 1, swap_only, &[], &[]).is_err());
    let zero = OperatorWeights { add: 0, remove: 0, swap: 0 };
    assert!(matches!(mutate(&ab, 1, zero, &[], &[]), Err(HarnessError::InvalidConfig(_))));

    let add_only = OperatorWeights { add: 1, remove: 0, swap: 0 };
    let alphabet = vec!["x".to_string()];
    let m = mutate(&ab, 3, add_only, &alphabet, &[]).unwrap();
    assert_eq!(m.trace.len(), 3);
    assert_eq!(m.trace.iter().filter(|e| e.task == "x").count(), 1);
}

#[test]
fn seeded_mutant_is_pinned() {
    let f = grain();
    let all = enumerate_conforming(&f.automaton, 12, Mode::Strict, DEFAULT_STATE_BUDGET).unwrap();
    let bases = select_bases(&all, 2);
    let alphabet: Vec<String> = f.automaton.external.iter().map(|t| t.name.clone()).collect();
    let m = mutate(&bases[0], 42, OperatorWeights::default(), &alphabet, &bases).unwrap();
    assert_eq!(m, mutate(&bases[0], 42, OperatorWeights::default(), &alphabet, &bases).unwrap());
    assert_eq!(m.operator, PINNED_OPERATOR);
    assert_eq!(task_names(&m.trace), PINNED_TASKS);
}

const PINNED_OPERATOR: Operator = Operator::Add;
const PINNED_TASKS: [&str; 10] = [
    "Registration Request Submitted",
    "Truck Carrying Grain Is Weighed",
    "Grain Sample Taken",
    "Truck Carrying Grain Is Weighed",
    "Grain Quality Evaluated",
    "Grain Dropped At Silo",
    "Truck Is Weighed Again",
    "Create Grain Title",
    "Interest To Buy Title Expressed",
    "Asset Swap",
];

#[test]
fn experiment_without_mutants_reports_bases_only() {
    let f = grain();
    let cfg = ExperimentConfig { mutants_per_base: 0, ..ExperimentConfig::default() };
    let r = run_experiment(&f.model, &f.automaton, &cfg).unwrap();
    assert_eq!(r.trace_count, 2);
    assert_eq!(r.totals, Totals { conforming: 2, non_conforming: 0 });
    assert_eq!(r.correctness_pct, 100.0);
    assert!(r.disagreements.is_empty());
}

#[test]
fn experiment_is_seed_deterministic() {
    let f = grain();
    let cfg = ExperimentConfig { mutants_per_base: 40, seed: 9, ..ExperimentConfig::default() };
    let mut a = run_experiment(&f.model, &f.automaton, &cfg).unwrap();
    let mut b = run_experiment(&f.model, &f.automaton, &cfg).unwrap();
    a.elapsed_ms = 0;
    b.elapsed_ms = 0;
    assert_eq!(a.to_json(), b.to_json());
    let c = run_experiment(&f.model, &f.automaton, &ExperimentConfig { seed: 10, ..cfg }).unwrap();
    let tasks = |r: &Report| r.traces.iter().map(|t| t.tasks.clone()).collect::<Vec<_>>();
    assert_ne!(tasks(&a), tasks(&c));
}

#[test]
fn synthetic_models_stay_small_and_compile() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let m = synth::random_model(&mut rng, 10);
        assert!(m.flows.len() <= 10);
        assert!(compile_marking(&m).is_ok());
        assert!(m.external_tasks().count() >= 1);
    }
}
