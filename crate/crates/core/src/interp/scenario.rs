//! Registry deployment and per-instance setup calls.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use super::{instance_address, new_instance, FungibleLedger, Instance, InstanceError, NonFungibleStore, Registry, RegistrySet};
use crate::ir::{Address, ProcessModel, Value, ValueType};
use crate::marking::MarkingAutomaton;
use crate::registry::RegistrySpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeploymentError {
    #[error("two registries share the contract name `{0}`")]
    DuplicateRegistry(String),
    #[error("no deployed registry named `{0}`")]
    UnknownRegistry(String),
    #[error("scenario is not valid JSON: {0}")]
    ScenarioSyntax(String),
    #[error("setup call {index} ({function}) failed: {message}")]
    Setup { index: usize, function: String, message: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// A registry call made before the first task, e.g. an allowance the
/// depositing party grants to the process account. The string
/// `"processAddress"` in an address argument stands for the new instance.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupCall {
    pub registry: String,
    pub caller: Address,
    pub function: String,
    #[serde(default)]
    pub args: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub deployer: Option<Address>,
    /// Human-readable names for accounts; informational.
    #[serde(default)]
    pub accounts: BTreeMap<String, Address>,
    #[serde(default)]
    pub setup: Vec<SetupCall>,
}

impl Scenario {
    pub fn parse(doc: &str) -> Result<Scenario, DeploymentError> {
        serde_json::from_str(doc).map_err(|e| DeploymentError::ScenarioSyntax(e.to_string()))
    }

    pub fn deployer(&self) -> Address {
        self.deployer.unwrap_or_else(default_deployer)
    }
}

pub fn default_deployer() -> Address {
    Address::derive(&[b"deployer"])
}

/// Simulated registries deployed for one model.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub registries: RegistrySet,
    /// Contract name to address.
    pub names: BTreeMap<String, Address>,
    pub deployer: Address,
}

impl Deployment {
    /// Deploys each spec at the address a model interface of the same
    /// name hard-codes, or at a name-derived pseudo-address.
    pub fn deploy(model: &ProcessModel, specs: &[RegistrySpec], deployer: Address) -> Result<Deployment, DeploymentError> {
        let mut names = BTreeMap::new();
        let mut registries = RegistrySet::new();
        for spec in specs {
            let name = spec.contract_name();
            let address = model
                .interfaces
                .iter()
                .find(|i| i.name == name && i.contract_address.is_some())
                .and_then(|i| i.contract_address)
                .unwrap_or_else(|| Address::derive(&[b"registry:", name.as_bytes()]));
            if names.insert(name.clone(), address).is_some() {
                return Err(DeploymentError::DuplicateRegistry(name));
            }
            let reg = match spec {
                RegistrySpec::Fungible(f) => Registry::Fungible(FungibleLedger::new(f.clone())),
                RegistrySpec::NonFungible(n) => Registry::NonFungible(NonFungibleStore::new(n.clone(), address, deployer)),
            };
            registries.insert(address, reg);
        }
        Ok(Deployment { registries, names, deployer })
    }

    /// Independent copy with its own registry state.
    pub fn fork(&self) -> Deployment {
        let mut registries = RegistrySet::new();
        for (a, r) in self.registries.snapshot() {
            registries.insert(a, r);
        }
        Deployment { registries, names: self.names.clone(), deployer: self.deployer }
    }

    pub fn address_of(&self, name: &str) -> Option<Address> {
        self.names.get(name).copied()
    }

    fn resolve(&self, name: &str) -> Result<Address, DeploymentError> {
        if let Some(a) = self.address_of(name) {
            return Ok(a);
        }
        let pascal = crate::registry::pascal_case(name);
        [pascal.clone(), format!("{pascal}Registry")]
            .iter()
            .find_map(|n| self.address_of(n))
            .ok_or_else(|| DeploymentError::UnknownRegistry(name.to_string()))
    }

    /// Address bindings for interfaces without a hard-coded address,
    /// matched by contract name.
    pub fn bindings(&self, model: &ProcessModel) -> BTreeMap<String, Address> {
        model
            .interfaces
            .iter()
            .filter(|i| i.contract_address.is_none())
            .filter_map(|i| self.address_of(&i.name).map(|a| (i.id.clone(), a)))
            .collect()
    }

    /// Runs the scenario setup for the `nonce`-th instance, then creates it.
    pub fn instantiate<'a>(
        &self,
        model: &'a ProcessModel,
        automaton: &'a MarkingAutomaton,
        scenario: &Scenario,
        nonce: u64,
    ) -> Result<Instance<'a>, DeploymentError> {
        let process = instance_address(&model.id, nonce);
        for (index, call) in scenario.setup.iter().enumerate() {
            let fail = |message: String| DeploymentError::Setup { index, function: call.function.clone(), message };
            let address = self.resolve(&call.registry)?;
            let sig = self
                .registries
                .with(address, |r| r.function(&call.function))
                .flatten()
                .ok_or_else(|| fail("no such function".into()))?;
            if sig.inputs.len() != call.args.len() {
                return Err(fail(format!("expected {} arguments, got {}", sig.inputs.len(), call.args.len())));
            }
            let mut args = Vec::new();
            for ((name, ty), json) in sig.inputs.iter().zip(&call.args) {
                let v = if *ty == ValueType::Address && json.as_str() == Some("processAddress") {
                    Value::Address(process)
                } else {
                    Value::from_json(*ty, json).ok_or_else(|| fail(format!("`{name}` expects {ty}, got {json}")))?
                };
                args.push(v);
            }
            self.registries.call(address, call.caller, &call.function, &args).map_err(|e| fail(e.to_string()))?;
        }
        Ok(new_instance(model, automaton, &self.bindings(model), self.registries.clone(), process)?)
    }
}
