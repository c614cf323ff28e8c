//! Emitted Solidity is byte-stable and matches the committed files under
//! each fixture's `expected/` directory. Set `PROCFORGE_BLESS=1` to rewrite
//! them after an intentional codegen change.

use std::path::{Path, PathBuf};

use procforge_core::codegen::{gen_all, gen_registry, SourceUnit};
use procforge_core::fixture::{load_spec, Fixture};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// (golden directory, units) for every fixture variant.
fn all_units() -> Vec<(PathBuf, Vec<SourceUnit>)> {
    let root = fixtures();
    let mut out = Vec::new();
    for name in ["grain-title", "ico", "quality-tracing", "task-outsourcing"] {
        let f = Fixture::load(root.join(name)).unwrap();
        out.push((f.dir.join("expected"), gen_all(&f.model, &f.automaton, &f.specs)));
    }
    let noaddr = Fixture::load_with(root.join("grain-title"), "process-noaddr.bpmn").unwrap();
    let units = gen_all(&noaddr.model, &noaddr.automaton, &[]);
    out.push((noaddr.dir.join("expected/noaddr"), units));
    let dist = load_spec(&root.join("quality-tracing/distributed/certificate-of-origin.json")).unwrap();
    out.push((root.join("quality-tracing/expected/distributed"), vec![gen_registry(&dist)]));
    out
}

#[test]
fn generation_is_byte_identical_across_runs() {
    let a = all_units();
    let b = all_units();
    assert_eq!(a.len(), b.len());
    for ((_, x), (_, y)) in a.iter().zip(&b) {
        assert_eq!(x, y);
    }
}

#[test]
fn generated_sources_match_goldens() {
    let bless = std::env::var_os("PROCFORGE_BLESS").is_some();
    for (dir, units) in all_units() {
        for u in units {
            let path = dir.join(&u.file_name);
            if bless {
                std::fs::create_dir_all(&dir).unwrap();
                std::fs::write(&path, &u.rendered_text).unwrap();
                continue;
            }
            let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(expected == u.rendered_text, "{} differs from the generated source", path.display());
        }
    }
}

#[test]
fn file_sets_per_fixture() {
    let units = all_units();
    let names = |i: usize| units[i].1.iter().map(|u| u.file_name.clone()).collect::<Vec<_>>();
    assert_eq!(names(0), ["GrainTitleRegistry.sol", "LorikeetCoin.sol", "ProcessFactory.sol"]);
    assert_eq!(names(1), ["LorikeetCoin.sol", "ProcessFactory.sol"]);
    assert_eq!(names(2), ["CertificateOfOriginRegistry.sol", "ProcessFactory.sol"]);
    assert_eq!(names(3), ["LorikeetCoin.sol", "ProcessFactory.sol"]);
}
