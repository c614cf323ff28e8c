//! Serialization round trips, element order and validation stability.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use procforge_core::bpmn::{parse_bpmn, write_bpmn};
use procforge_core::harness::synth::random_model;
use procforge_core::ir::validate_model;
use procforge_core::marking::compile_marking;

const FIXTURES: [&str; 4] = ["grain-title", "ico", "quality-tracing", "task-outsourcing"];

fn fixture_xml(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/{name}/process.bpmn", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Ids of `tag` elements in document order, found by plain text scanning.
fn ids_in_text(xml: &str, tags: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = xml;
    while let Some(i) = rest.find('<') {
        rest = &rest[i + 1..];
        let tag: String = rest.chars().take_while(|c| !c.is_whitespace() && *c != '>' && *c != '/').collect();
        let local = tag.rsplit(':').next().unwrap_or("");
        let head = &rest[..rest.find('>').unwrap_or(rest.len())];
        if tags.contains(&local) {
            if let Some(at) = head.find(" id=\"") {
                let v = &head[at + 5..];
                out.push(v[..v.find('"').unwrap()].to_string());
            }
        }
    }
    out
}

#[test]
fn fixtures_keep_document_order() {
    for name in FIXTURES {
        let xml = fixture_xml(name);
        let m = parse_bpmn(&xml).unwrap();
        let flows: Vec<String> = m.flows.iter().map(|f| f.id.clone()).collect();
        assert_eq!(flows, ids_in_text(&xml, &["sequenceFlow"]), "{name}");
        let a = compile_marking(&m).unwrap();
        assert_eq!(a.flow_ids, flows, "{name}: flow bits follow document order");
    }
}

#[test]
fn fixtures_round_trip_through_the_writer() {
    for name in FIXTURES {
        let m = parse_bpmn(&fixture_xml(name)).unwrap();
        let again = parse_bpmn(&write_bpmn(&m)).unwrap();
        assert_eq!(again, m, "{name}");
        assert_eq!(write_bpmn(&again), write_bpmn(&m), "{name}");
    }
}

#[test]
fn validation_is_repeatable() {
    for name in FIXTURES {
        let m = parse_bpmn(&fixture_xml(name)).unwrap();
        let first = validate_model(&m);
        assert!(first.is_valid(), "{name}: {:?}", first.errors().collect::<Vec<_>>());
        assert_eq!(validate_model(&m), first);
        assert_eq!(validate_model(&m.clone()), first);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_models_round_trip(seed in any::<u64>(), max_flows in 6usize..24) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), max_flows);
        let xml = write_bpmn(&m);
        let back = parse_bpmn(&xml).unwrap();
        prop_assert_eq!(&back, &m);
        let flows: Vec<String> = m.flows.iter().map(|f| f.id.clone()).collect();
        prop_assert_eq!(ids_in_text(&xml, &["sequenceFlow"]), flows);
        let report = validate_model(&back);
        prop_assert!(report.is_valid(), "{:?}", report.errors().collect::<Vec<_>>());
        prop_assert_eq!(validate_model(&back), report);
    }
}
