//! The folded marking automaton and the unfolded token game accept the
//! same traces on random block-structured models.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use procforge_core::harness::synth::random_model;
use procforge_core::harness::{oracle_classify, trace_of, FoldedRunner, Mode, TokenGame, Verdict};
use procforge_core::ir::{BinaryOp, Expr, NodeKind};
use procforge_core::marking::{compile_marking, Marking};

const MODELS: usize = 200;
const MAX_FLOWS: usize = 10;
const MAX_LEN: usize = 8;

#[derive(Default)]
struct Tally {
    nodes: usize,
    rejected_prefixes: usize,
    complete: usize,
    disagreements: Vec<String>,
}

struct Search<'a> {
    folded: &'a FoldedRunner<'a>,
    game: &'a TokenGame<'a>,
    alphabet: Vec<String>,
}

impl Search<'_> {
    /// Walks every trace up to `MAX_LEN`. A trace both sides reject
    /// cannot be extended into an accepted one, so its subtree is cut.
    fn walk(&self, trace: &mut Vec<String>, f: &BTreeSet<Marking>, g: &BTreeSet<BTreeSet<usize>>, tally: &mut Tally) {
        tally.nodes += 1;
        let (ff, gf) = (self.folded.is_final(f), self.game.is_final(g));
        if ff != gf {
            tally.disagreements.push(format!("{trace:?}: folded final {ff}, unfolded final {gf}"));
        }
        if ff {
            tally.complete += 1;
        }
        if trace.len() == MAX_LEN {
            return;
        }
        for t in &self.alphabet {
            let (f2, g2) = (self.folded.step(f, t), self.game.step(g, t));
            trace.push(t.clone());
            match (f2.is_empty(), g2.is_empty()) {
                (true, true) => tally.rejected_prefixes += 1,
                (false, false) => self.walk(trace, &f2, &g2, tally),
                (fe, ge) => tally.disagreements.push(format!("{trace:?}: folded rejects {fe}, unfolded rejects {ge}")),
            }
            trace.pop();
        }
    }
}

#[test]
fn folded_and_unfolded_semantics_agree() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut total = Tally::default();
    let (mut parallel, mut looping) = (0, 0);
    let loop_back = Expr::bin(BinaryOp::Eq, Expr::var("x"), Expr::int(1));
    for i in 0..MODELS {
        let model = random_model(&mut rng, MAX_FLOWS);
        assert!(model.flows.len() <= MAX_FLOWS);
        parallel += model.nodes.iter().any(|n| n.kind == NodeKind::AndGateway) as usize;
        looping += model.flows.iter().any(|f| f.condition == Some(loop_back.clone())) as usize;
        let a = compile_marking(&model).unwrap();
        let folded = FoldedRunner::new(&a).unwrap();
        let game = TokenGame::new(&model);
        let search = Search { folded: &folded, game: &game, alphabet: a.external.iter().map(|t| t.name.clone()).collect() };
        let mut tally = Tally::default();
        search.walk(&mut Vec::new(), &folded.initial(), &game.initial(), &mut tally);
        for d in &tally.disagreements {
            eprintln!("model {i}: {d}");
        }
        total.nodes += tally.nodes;
        total.rejected_prefixes += tally.rejected_prefixes;
        total.complete += tally.complete;
        total.disagreements.extend(tally.disagreements);
    }
    let elapsed = started.elapsed();
    eprintln!(
        "{MODELS} models: {} prefixes explored, {} rejected prefixes, {} complete traces, {} disagreements, {:?}",
        total.nodes,
        total.rejected_prefixes,
        total.complete,
        total.disagreements.len(),
        elapsed
    );
    eprintln!("{parallel} models with parallel blocks, {looping} with loops");
    assert!(parallel > 0 && looping > 0, "the corpus lacks parallel or looping models");
    assert!(total.disagreements.is_empty());
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
}

#[test]
fn whole_trace_verdicts_agree_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let model = random_model(&mut rng, MAX_FLOWS);
        let a = compile_marking(&model).unwrap();
        let folded = FoldedRunner::new(&a).unwrap();
        let names: Vec<&str> = a.external.iter().map(|t| t.name.as_str()).collect();
        for len in 0..=4 {
            for pick in 0..names.len().pow(len as u32).min(64) {
                let mut k = pick;
                let tasks: Vec<&str> = (0..len)
                    .map(|_| {
                        let t = names[k % names.len()];
                        k /= names.len();
                        t
                    })
                    .collect();
                let trace = trace_of(&tasks);
                for mode in [Mode::Strict, Mode::Prefix] {
                    let x: Verdict = folded.classify(&trace, mode);
                    let y = oracle_classify(&model, &trace, mode);
                    assert_eq!(x, y, "{tasks:?} in {mode:?}");
                }
            }
        }
    }
}
