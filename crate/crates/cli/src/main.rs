//! `procforge` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use procforge_core::bpmn::parse_bpmn_with_warnings;
use procforge_core::codegen::{gen_all, SourceUnit};
use procforge_core::fixture::{load_scenario, read, FixtureError};
use procforge_core::harness::{
    classify, parse_trace, run_experiment, ExperimentConfig, Failure, Mode, OperatorWeights, Verdict, World,
};
use procforge_core::interp::{Deployment, Instance, Outcome, Scenario};
use procforge_core::ir::{validate_model, ProcessModel};
use procforge_core::marking::{compile_marking, MarkingAutomaton};
use procforge_core::registry::{parse_registry, RegistrySpec};

/// `println!` that tolerates a closed stdout.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

const EXIT_INVALID: u8 = 1;
const EXIT_NONCONFORMING: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_NOINPUT: u8 = 66;

#[derive(Debug, Parser)]
#[command(name = "procforge", version, about = "Compile, simulate and conformance-check BPMN process models with asset registries")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Print extra detail.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Inputs {
    /// BPMN 2.0 model with blockchain extension elements.
    model: PathBuf,
    /// Registry spec (JSON); repeat for several.
    #[arg(long = "registry", value_name = "SPEC", num_args = 1..)]
    registries: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model (and registry specs) for errors.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Emit Solidity sources for the registries and the process.
    Compile {
        #[command(flatten)]
        inputs: Inputs,
        /// Output directory, created if absent.
        #[arg(short, long, default_value = "out")]
        output: PathBuf,
        /// Also write the marking table to `automaton.txt`.
        #[arg(long)]
        dump_automaton: bool,
    },
    /// Replay a trace through the interpreter.
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        /// JSON-lines trace.
        #[arg(long)]
        trace: PathBuf,
        /// Scenario with setup calls; defaults to `scenario.json` beside the model.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Require the trace to complete the process (default).
        #[arg(long, conflicts_with = "prefix")]
        strict: bool,
        /// Accept traces that stop before completion.
        #[arg(long)]
        prefix: bool,
    },
    /// Run the noise-injection conformance experiment.
    Conformance {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, env = "PROCFORGE_SEED", default_value_t = 42)]
        seed: u64,
        /// Mutants generated per base trace.
        #[arg(long, default_value_t = 250)]
        mutants: usize,
        /// Number of base traces.
        #[arg(long, default_value_t = 2)]
        bases: usize,
        /// Operator weights as `add,remove,swap`.
        #[arg(long, default_value = "1,1,1", value_parser = parse_weights)]
        weights: OperatorWeights,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Classify in prefix mode instead of strict.
        #[arg(long)]
        prefix: bool,
    },
}

fn parse_weights(s: &str) -> Result<OperatorWeights, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [add, remove, swap] = parts.as_slice() else {
        return Err("expected three comma-separated weights".into());
    };
    let n = |p: &str| p.parse::<u32>().map_err(|e| format!("`{p}`: {e}"));
    let w = OperatorWeights { add: n(add)?, remove: n(remove)?, swap: n(swap)? };
    w.validate().map_err(|e| e.to_string())?;
    Ok(w)
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Unreadable(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Unreadable(_) => EXIT_NOINPUT,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> CliError {
        match e {
            FixtureError::Io { .. } => CliError::Unreadable(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if cli.json {
                out!("{}", json!({"error": e.to_string(), "exitCode": e.code()}));
            }
            eprintln!("procforge: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Validate { inputs } => validate(cli, inputs),
        Command::Compile { inputs, output, dump_automaton } => compile(cli, inputs, output, *dump_automaton),
        Command::Simulate { inputs, trace, scenario, prefix, .. } => {
            simulate(cli, inputs, trace, scenario.as_deref(), if *prefix { Mode::Prefix } else { Mode::Strict })
        }
        Command::Conformance { inputs, seed, mutants, bases, weights, report, prefix } => {
            let cfg = ExperimentConfig {
                base_traces: *bases,
                mutants_per_base: *mutants,
                seed: *seed,
                weights: *weights,
                mode: if *prefix { Mode::Prefix } else { Mode::Strict },
                ..ExperimentConfig::default()
            };
            conformance(cli, inputs, &cfg, report.as_deref())
        }
    }
}

struct Loaded {
    model: ProcessModel,
    warnings: Vec<String>,
    specs: Vec<RegistrySpec>,
}

/// Reads and parses every input; reports each unreadable file as 66 and
/// each malformed one as 1.
fn load(inputs: &Inputs) -> Result<Loaded, CliError> {
    let xml = read(&inputs.model)?;
    let parsed = parse_bpmn_with_warnings(&xml).map_err(|e| CliError::Invalid(format!("{}: {e}", inputs.model.display())))?;
    let mut specs = Vec::new();
    for p in &inputs.registries {
        let text = read(p)?;
        specs.push(parse_registry(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?);
    }
    Ok(Loaded { model: parsed.model, warnings: parsed.warnings, specs })
}

/// Loads and validates, failing with exit 1 on any error diagnostic.
fn load_valid(inputs: &Inputs) -> Result<(Loaded, MarkingAutomaton), CliError> {
    let loaded = load(inputs)?;
    let report = validate_model(&loaded.model);
    if let Some(first) = report.errors().next() {
        let count = report.errors().count();
        return Err(CliError::Invalid(format!("{}: {count} validation error(s), first: {first}", inputs.model.display())));
    }
    let a = compile_marking(&loaded.model).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok((loaded, a))
}

fn validate(cli: &Cli, inputs: &Inputs) -> Result<u8, CliError> {
    let loaded = load(inputs)?;
    let report = validate_model(&loaded.model);
    let errors: Vec<String> = report.errors().map(|d| d.to_string()).collect();
    let mut warnings: Vec<String> = loaded.warnings.clone();
    warnings.extend(report.warnings().map(|d| d.to_string()));
    if cli.json {
        out!(
            "{}",
            json!({
                "model": loaded.model.id,
                "valid": errors.is_empty(),
                "errors": errors,
                "warnings": warnings,
                "tasks": loaded.model.task_count(),
                "gateways": loaded.model.gateway_count(),
                "registries": loaded.specs.iter().map(|s| s.contract_name()).collect::<Vec<_>>(),
            })
        );
    } else {
        for d in errors.iter().chain(&warnings) {
            out!("{d}");
        }
        out!(
            "{}: {} task(s), {} gateway(s), {} flow(s); {} error(s), {} warning(s)",
            loaded.model.id,
            loaded.model.task_count(),
            loaded.model.gateway_count(),
            loaded.model.flows.len(),
            errors.len(),
            warnings.len()
        );
        for s in &loaded.specs {
            out!("registry {} ok", s.contract_name());
        }
    }
    Ok(if errors.is_empty() { 0 } else { EXIT_INVALID })
}

fn compile(cli: &Cli, inputs: &Inputs, output: &Path, dump_automaton: bool) -> Result<u8, CliError> {
    let (loaded, a) = load_valid(inputs)?;
    let units: Vec<SourceUnit> = gen_all(&loaded.model, &a, &loaded.specs);
    std::fs::create_dir_all(output).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", output.display())))?;
    let mut written = Vec::new();
    for u in &units {
        let path = output.join(&u.file_name);
        std::fs::write(&path, &u.rendered_text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    if dump_automaton {
        let path = output.join("automaton.txt");
        std::fs::write(&path, a.dump()).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    if cli.json {
        out!("{}", json!({ "files": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>() }));
    } else {
        for p in &written {
            out!("{}", p.display());
        }
    }
    Ok(0)
}

fn verdict_json(v: &Verdict) -> serde_json::Value {
    match v {
        Verdict::Conforming => json!({"conforming": true}),
        Verdict::NonConforming(Failure::At(i)) => json!({"conforming": false, "firstBadIndex": i}),
        Verdict::NonConforming(Failure::EndNotReached) => json!({"conforming": false, "endNotReached": true}),
        Verdict::NonConforming(Failure::Setup(m)) => json!({"conforming": false, "setupError": m}),
    }
}

fn simulate(cli: &Cli, inputs: &Inputs, trace_path: &Path, scenario: Option<&Path>, mode: Mode) -> Result<u8, CliError> {
    let (loaded, a) = load_valid(inputs)?;
    let trace_text = read(trace_path)?;
    let trace = parse_trace(&trace_text).map_err(|e| CliError::Invalid(format!("{}: {e}", trace_path.display())))?;
    let scenario = match scenario {
        Some(p) => load_scenario(p)?,
        None => {
            let beside = inputs.model.parent().unwrap_or(Path::new(".")).join("scenario.json");
            if beside.exists() { load_scenario(&beside)? } else { Scenario::default() }
        }
    };
    let deployment = Deployment::deploy(&loaded.model, &loaded.specs, scenario.deployer()).map_err(|e| CliError::Invalid(e.to_string()))?;
    let world = World { deployment: deployment.fork(), scenario: scenario.clone() };
    let verdict = classify(&loaded.model, &a, &trace, mode, Some(&world));

    let mut instance = deployment.instantiate(&loaded.model, &a, &scenario, 0).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut events = Vec::new();
    let mut stopped = false;
    for (i, e) in trace.iter().enumerate() {
        if stopped {
            break;
        }
        let outcome = instance.invoke_event(e);
        let (ok, detail) = match &outcome {
            Outcome::Accepted { auto_fired, .. } => (true, auto_fired.join(", ")),
            Outcome::Rejected(r) => (false, r.to_string()),
        };
        stopped = !ok;
        events.push((i, e.task.clone(), ok, detail));
    }

    let code = if verdict.is_conforming() { 0 } else { EXIT_NONCONFORMING };
    if cli.json {
        out!("{}", simulate_json(&instance, &events, &verdict));
        return Ok(code);
    }
    for (i, task, ok, detail) in &events {
        if *ok {
            if detail.is_empty() {
                out!("[{i}] {task}: accepted");
            } else {
                out!("[{i}] {task}: accepted (then {detail})");
            }
        } else {
            out!("[{i}] {task}: rejected: {detail}");
        }
    }
    print_state(&instance, cli.verbose);
    match &verdict {
        Verdict::Conforming => out!("verdict: conforming"),
        Verdict::NonConforming(Failure::At(i)) => out!("verdict: non-conforming (firstBadIndex {i})"),
        Verdict::NonConforming(Failure::EndNotReached) => out!("verdict: non-conforming (end not reached)"),
        Verdict::NonConforming(Failure::Setup(m)) => out!("verdict: non-conforming (setup failed: {m})"),
    }
    Ok(code)
}

fn active_flows(instance: &Instance<'_>) -> Vec<String> {
    instance.marking.bits().map(|b| instance.automaton.flow_ids[b].clone()).collect()
}

fn print_state(instance: &Instance<'_>, verbose: bool) {
    out!("status: {}", instance.status);
    out!("marking: {} {:?}", instance.marking.hex(), active_flows(instance));
    out!("variables:");
    for (k, v) in &instance.env {
        out!("  {k} = {v}");
    }
    for addr in instance.registries.addresses() {
        instance.registries.with(addr, |r| {
            out!("registry {} at {addr}:", r.contract_name());
            if let Some(l) = r.as_ledger() {
                out!("  totalSupply = {}", l.total_supply());
                for (a, b) in l.balances().filter(|(_, b)| verbose || *b != 0) {
                    out!("  {a}: {b}");
                }
            }
            if let Some(s) = r.as_store() {
                for (id, rec) in s.records() {
                    let attrs: Vec<String> = rec.attrs.iter().map(|v| v.to_string()).collect();
                    out!("  record {id}: owner {} attrs ({})", rec.owner, attrs.join(", "));
                }
            }
        });
    }
}

fn simulate_json(instance: &Instance<'_>, events: &[(usize, String, bool, String)], verdict: &Verdict) -> serde_json::Value {
    let mut registries = Vec::new();
    for addr in instance.registries.addresses() {
        if let Some(v) = instance.registries.with(addr, |r| {
            let mut o = json!({"name": r.contract_name(), "address": addr.to_string()});
            if let Some(l) = r.as_ledger() {
                o["totalSupply"] = json!(l.total_supply().to_string());
                o["balances"] = l.balances().map(|(a, b)| (a.to_string(), json!(b.to_string()))).collect::<serde_json::Map<_, _>>().into();
            }
            if let Some(s) = r.as_store() {
                o["records"] = s
                    .records()
                    .map(|(id, rec)| {
                        json!({
                            "id": id.to_string(),
                            "owner": rec.owner.to_string(),
                            "attrs": rec.attrs.iter().map(|v| v.to_json()).collect::<Vec<_>>(),
                        })
                    })
                    .collect::<Vec<_>>()
                    .into();
            }
            o
        }) {
            registries.push(v);
        }
    }
    json!({
        "verdict": verdict_json(verdict),
        "events": events.iter().map(|(i, t, ok, d)| json!({"index": i, "task": t, "accepted": ok, "detail": d})).collect::<Vec<_>>(),
        "status": instance.status.to_string(),
        "completed": instance.is_completed(),
        "marking": instance.marking.hex(),
        "activeFlows": active_flows(instance),
        "variables": instance.env.iter().map(|(k, v)| (k.clone(), v.to_json())).collect::<serde_json::Map<_, _>>(),
        "registries": registries,
    })
}

fn conformance(cli: &Cli, inputs: &Inputs, cfg: &ExperimentConfig, report_path: Option<&Path>) -> Result<u8, CliError> {
    let (loaded, a) = load_valid(inputs)?;
    let report = run_experiment(&loaded.model, &a, cfg).map_err(|e| CliError::Invalid(e.to_string()))?;
    let text = report.to_json();
    if let Some(p) = report_path {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
        }
        std::fs::write(p, &text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    if cli.json {
        out!("{}", text.trim_end());
        return Ok(0);
    }
    out!("process model     {}", report.model);
    out!("tasks             {}", report.tasks);
    out!("gateways          {}", report.gateways);
    out!("traces            {}", report.trace_count);
    out!("  conforming      {}", report.totals.conforming);
    out!("  not conforming  {}", report.totals.non_conforming);
    out!("correctness       {}%", format_pct(report.correctness_pct));
    out!("seed              {}", report.seed);
    out!("elapsed           {} ms", report.elapsed_ms);
    for d in &report.disagreements {
        out!("disagreement at trace {}: interpreter {}, oracle {}", d.index, d.interpreter, d.oracle);
    }
    Ok(0)
}

fn format_pct(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{p:.0}")
    } else {
        format!("{p:.2}")
    }
}
