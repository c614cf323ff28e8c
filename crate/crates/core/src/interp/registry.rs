//! Function tables and call dispatch for simulated registries.

use ethnum::U256;
use thiserror::Error;

use super::ledger::{FungibleLedger, LedgerError};
use super::records::{NonFungibleStore, RecordError};
use crate::ir::{Address, Value, ValueType};
use crate::registry::{FungibleRegistrySpec, NonFungibleRegistrySpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("registry has no function `{0}`")]
    UnknownFunction(String),
    #[error("bad arguments to `{function}`: {message}")]
    BadArguments { function: String, message: String },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// A callable registry function: named, typed inputs and outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnSig {
    pub name: String,
    pub inputs: Vec<(String, ValueType)>,
    pub outputs: Vec<(String, ValueType)>,
    /// Read-only in the generated contract.
    pub view: bool,
}

fn sig(name: &str, inputs: &[(&str, ValueType)], outputs: &[(&str, ValueType)], view: bool) -> FnSig {
    let own = |v: &[(&str, ValueType)]| v.iter().map(|(n, t)| (n.to_string(), *t)).collect();
    FnSig { name: name.to_string(), inputs: own(inputs), outputs: own(outputs), view }
}

use ValueType::{Address as A, Bool as B, String as S, Uint256 as U};

pub fn fungible_functions(spec: &FungibleRegistrySpec) -> Vec<FnSig> {
    let mut v = vec![
        sig("name", &[], &[("tokenName", S)], true),
        sig("symbol", &[], &[("tokenSymbol", S)], true),
        sig("decimals", &[], &[("tokenDecimals", U)], true),
        sig("totalSupply", &[], &[("supply", U)], true),
        sig("balanceOf", &[("account", A)], &[("balance", U)], true),
        sig("transfer", &[("recipient", A), ("amount", U)], &[("success", B)], false),
        sig("transferFrom", &[("sender", A), ("recipient", A), ("amount", U)], &[("success", B)], false),
        sig("approve", &[("spender", A), ("amount", U)], &[("success", B)], false),
        sig("allowance", &[("owner", A), ("spender", A)], &[("remaining", U)], true),
    ];
    if spec.is_mintable {
        v.push(sig("mint", &[("account", A), ("amount", U)], &[("success", B)], false));
    }
    if spec.is_burnable {
        v.push(sig("burn", &[("amount", U)], &[("success", B)], false));
    }
    v
}

pub fn nonfungible_functions(spec: &NonFungibleRegistrySpec) -> Vec<FnSig> {
    let attrs: Vec<(String, ValueType)> = spec.attributes.iter().map(|a| (a.name.clone(), a.ty)).collect();
    let mut create_in = vec![("owner".to_string(), A)];
    create_in.extend(attrs.iter().cloned());
    let mut v = vec![
        FnSig { name: "record_create".into(), inputs: create_in, outputs: vec![("record_id".into(), A)], view: false },
        sig("record_get_owner", &[("record_id", A)], &[("record_owner", A)], true),
        FnSig { name: "record_get_attrs".into(), inputs: vec![("record_id".into(), A)], outputs: attrs, view: true },
    ];
    for a in spec.attributes.iter().filter(|a| a.updatable) {
        v.push(FnSig {
            name: format!("record_update_{}", a.name),
            inputs: vec![("record_id".into(), A), (a.name.clone(), a.ty)],
            outputs: vec![],
            view: false,
        });
    }
    if spec.is_ownership_transfer_enabled {
        v.push(sig("record_ownership_transfer", &[("record_id", A), ("new_owner", A)], &[], false));
    }
    v.extend([
        sig("balanceOf", &[("owner", A)], &[("balance", U)], true),
        sig("ownerOf", &[("tokenId", U)], &[("tokenOwner", A)], true),
        sig("transferFrom", &[("from", A), ("to", A), ("tokenId", U)], &[], false),
        sig("approve", &[("to", A), ("tokenId", U)], &[], false),
        sig("getApproved", &[("tokenId", U)], &[("operator", A)], true),
        sig("setApprovalForAll", &[("operator", A), ("approved", B)], &[], false),
        sig("isApprovedForAll", &[("owner", A), ("operator", A)], &[("approved", B)], true),
        sig("authorizeProcess", &[("process", A)], &[], false),
    ]);
    if spec.is_registry_function_access_control_enabled {
        v.push(sig("grantAccess", &[("account", A)], &[], false));
        v.push(sig("revokeAccess", &[("account", A)], &[], false));
    }
    if spec.is_access_control_by_smart_contract_enabled {
        v.push(sig("setAccessController", &[("controller", A)], &[], false));
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Registry {
    Fungible(FungibleLedger),
    NonFungible(NonFungibleStore),
}

impl Registry {
    pub fn contract_name(&self) -> String {
        match self {
            Registry::Fungible(l) => l.spec.contract_name(),
            Registry::NonFungible(s) => s.spec.contract_name(),
        }
    }

    pub fn functions(&self) -> Vec<FnSig> {
        match self {
            Registry::Fungible(l) => fungible_functions(&l.spec),
            Registry::NonFungible(s) => nonfungible_functions(&s.spec),
        }
    }

    pub fn function(&self, name: &str) -> Option<FnSig> {
        self.functions().into_iter().find(|f| f.name == name)
    }

    pub fn as_ledger(&self) -> Option<&FungibleLedger> {
        match self {
            Registry::Fungible(l) => Some(l),
            Registry::NonFungible(_) => None,
        }
    }

    pub fn as_store(&self) -> Option<&NonFungibleStore> {
        match self {
            Registry::NonFungible(s) => Some(s),
            Registry::Fungible(_) => None,
        }
    }

    /// Calls `function` as `caller` with positional arguments.
    pub fn call(&mut self, caller: Address, function: &str, args: &[Value]) -> Result<Vec<Value>, RegistryError> {
        let f = self.function(function).ok_or_else(|| RegistryError::UnknownFunction(function.to_string()))?;
        if args.len() != f.inputs.len() {
            return Err(RegistryError::BadArguments {
                function: function.to_string(),
                message: format!("expected {} arguments, got {}", f.inputs.len(), args.len()),
            });
        }
        for ((name, ty), v) in f.inputs.iter().zip(args) {
            if v.ty() != *ty {
                return Err(RegistryError::BadArguments {
                    function: function.to_string(),
                    message: format!("`{name}` expects {ty}, got {}", v.ty()),
                });
            }
        }
        match self {
            Registry::Fungible(l) => call_fungible(l, caller, function, args),
            Registry::NonFungible(s) => call_nonfungible(s, caller, function, args),
        }
    }
}

fn addr(v: &Value) -> Address {
    v.as_address().expect("argument types checked")
}

fn uint(v: &Value) -> U256 {
    v.as_uint().expect("argument types checked")
}

fn call_fungible(l: &mut FungibleLedger, caller: Address, f: &str, a: &[Value]) -> Result<Vec<Value>, RegistryError> {
    let ok = || Ok(vec![Value::Bool(true)]);
    match f {
        "name" => Ok(vec![Value::Str(l.spec.name.clone())]),
        "symbol" => Ok(vec![Value::Str(l.spec.symbol.clone())]),
        "decimals" => Ok(vec![Value::Uint(U256::from(l.spec.decimals))]),
        "totalSupply" => Ok(vec![Value::Uint(l.total_supply())]),
        "balanceOf" => Ok(vec![Value::Uint(l.balance_of(addr(&a[0])))]),
        "allowance" => Ok(vec![Value::Uint(l.allowance(addr(&a[0]), addr(&a[1])))]),
        "transfer" => {
            l.transfer(caller, addr(&a[0]), uint(&a[1]))?;
            ok()
        }
        "transferFrom" => {
            l.transfer_from(caller, addr(&a[0]), addr(&a[1]), uint(&a[2]))?;
            ok()
        }
        "approve" => {
            l.approve(caller, addr(&a[0]), uint(&a[1]));
            ok()
        }
        "mint" => {
            l.mint(caller, addr(&a[0]), uint(&a[1]))?;
            ok()
        }
        "burn" => {
            l.burn(caller, uint(&a[0]))?;
            ok()
        }
        _ => Err(RegistryError::UnknownFunction(f.to_string())),
    }
}

fn call_nonfungible(s: &mut NonFungibleStore, caller: Address, f: &str, a: &[Value]) -> Result<Vec<Value>, RegistryError> {
    let none = Ok(Vec::new());
    if let Some(attr) = f.strip_prefix("record_update_") {
        s.record_update(caller, addr(&a[0]), attr, a[1].clone())?;
        return none;
    }
    match f {
        "record_create" => Ok(vec![Value::Address(s.record_create(caller, addr(&a[0]), a[1..].to_vec())?)]),
        "record_get_owner" => Ok(vec![Value::Address(s.record_get_owner(addr(&a[0]))?)]),
        "record_get_attrs" => Ok(s.record_get_attrs(addr(&a[0]))?),
        "record_ownership_transfer" => {
            s.record_ownership_transfer(caller, addr(&a[0]), addr(&a[1]))?;
            none
        }
        "balanceOf" => Ok(vec![Value::Uint(s.balance_of(addr(&a[0])))]),
        "ownerOf" => Ok(vec![Value::Address(s.owner_of(uint(&a[0]))?)]),
        "transferFrom" => {
            s.transfer_from(caller, addr(&a[0]), addr(&a[1]), uint(&a[2]))?;
            none
        }
        "approve" => {
            s.approve(caller, addr(&a[0]), uint(&a[1]))?;
            none
        }
        "getApproved" => Ok(vec![Value::Address(s.get_approved(uint(&a[0]))?)]),
        "setApprovalForAll" => {
            s.set_approval_for_all(caller, addr(&a[0]), a[1].as_bool().expect("argument types checked"));
            none
        }
        "isApprovedForAll" => Ok(vec![Value::Bool(s.is_approved_for_all(addr(&a[0]), addr(&a[1])))]),
        "authorizeProcess" => {
            s.authorize_process(caller, addr(&a[0]))?;
            none
        }
        "grantAccess" => {
            s.grant_access(caller, addr(&a[0]))?;
            none
        }
        "revokeAccess" => {
            s.revoke_access(caller, addr(&a[0]))?;
            none
        }
        "setAccessController" => {
            s.set_access_controller(caller, addr(&a[0]))?;
            none
        }
        _ => Err(RegistryError::UnknownFunction(f.to_string())),
    }
}
