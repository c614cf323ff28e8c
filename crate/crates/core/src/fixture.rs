//! Loading of model directories: `process.bpmn`, registry specs
//! (`*.json` other than `scenario.json`), an optional `scenario.json`, and
//! `traces/*.jsonl`.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bpmn::{parse_bpmn, BpmnError};
use crate::interp::{DeploymentError, Scenario};
use crate::ir::ProcessModel;
use crate::marking::{compile_marking, CompileError, MarkingAutomaton};
use crate::registry::{parse_registry, RegistrySpec, SpecError};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Bpmn {
        path: PathBuf,
        #[source]
        source: BpmnError,
    },
    #[error("{path}: {source}")]
    Spec {
        path: PathBuf,
        #[source]
        source: SpecError,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        #[source]
        source: DeploymentError,
    },
    #[error(transparent)]
    Compile(#[from] CompileError),
}

pub fn read(path: &Path) -> Result<String, FixtureError> {
    fs::read_to_string(path).map_err(|source| FixtureError::Io { path: path.to_path_buf(), source })
}

pub fn load_model(path: &Path) -> Result<ProcessModel, FixtureError> {
    parse_bpmn(&read(path)?).map_err(|source| FixtureError::Bpmn { path: path.to_path_buf(), source })
}

pub fn load_spec(path: &Path) -> Result<RegistrySpec, FixtureError> {
    parse_registry(&read(path)?).map_err(|source| FixtureError::Spec { path: path.to_path_buf(), source })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, FixtureError> {
    Scenario::parse(&read(path)?).map_err(|source| FixtureError::Scenario { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub dir: PathBuf,
    pub model: ProcessModel,
    pub automaton: MarkingAutomaton,
    pub specs: Vec<RegistrySpec>,
    pub scenario: Scenario,
}

impl Fixture {
    /// Loads `dir` using `process.bpmn` as the model.
    pub fn load(dir: impl AsRef<Path>) -> Result<Fixture, FixtureError> {
        Fixture::load_with(dir, "process.bpmn")
    }

    pub fn load_with(dir: impl AsRef<Path>, model_file: &str) -> Result<Fixture, FixtureError> {
        let dir = dir.as_ref().to_path_buf();
        let model = load_model(&dir.join(model_file))?;
        let automaton = compile_marking(&model)?;
        let specs = spec_files(&dir)?.iter().map(|p| load_spec(p)).collect::<Result<Vec<_>, _>>()?;
        let scenario_path = dir.join("scenario.json");
        let scenario = if scenario_path.exists() { load_scenario(&scenario_path)? } else { Scenario::default() };
        Ok(Fixture { dir, model, automaton, specs, scenario })
    }

    pub fn trace_path(&self, name: &str) -> PathBuf {
        self.dir.join("traces").join(format!("{name}.jsonl"))
    }
}

/// Registry spec files of a directory, sorted by name.
pub fn spec_files(dir: &Path) -> Result<Vec<PathBuf>, FixtureError> {
    let entries = fs::read_dir(dir).map_err(|source| FixtureError::Io { path: dir.to_path_buf(), source })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "scenario.json"))
        .collect();
    out.sort();
    Ok(out)
}
