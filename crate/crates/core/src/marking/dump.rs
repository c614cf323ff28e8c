use std::fmt::Write;

use super::{Guard, MarkingAutomaton};

pub(super) fn render(a: &MarkingAutomaton) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "automaton {}", a.model_id);
    let _ = writeln!(o, "initial  {}", a.initial_marking);
    let _ = writeln!(o, "end mask {}", a.end_mask);
    let _ = writeln!(o, "\nbits");
    for (i, f) in a.flow_ids.iter().enumerate() {
        let _ = writeln!(o, "  {i:>3}  {f}");
    }
    let _ = writeln!(o, "\nexternal tasks");
    for t in &a.external {
        let folded = if t.folded.is_empty() { String::new() } else { format!("  folds {}", t.folded.join(", ")) };
        let _ = writeln!(o, "  {} ({}){folded}", t.name, t.task_id);
        for (i, alt) in t.alternatives.iter().enumerate() {
            let _ = writeln!(o, "    alt {i}: pre {} post {}", alt.pre, alt.post);
        }
    }
    let _ = writeln!(o, "\nauto-transitions");
    for t in &a.autos {
        let pres: Vec<_> = t.pre.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(o, "  {} ({}, {}) pre {}", t.name, t.node_id, t.kind.label(), pres.join(" | "));
        for s in &t.script {
            let _ = writeln!(o, "    run {s}");
        }
        for out in &t.outcomes {
            let guard = match &out.guard {
                Guard::Always => "always".to_string(),
                Guard::Default => "default".to_string(),
                Guard::Condition(c) => format!("if {c}"),
            };
            let _ = writeln!(o, "    {guard} -> {}", out.post);
        }
    }
    o
}
