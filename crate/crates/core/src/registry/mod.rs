//! Fungible and non-fungible asset registry specifications.
//!
//! Documents are JSON objects with camelCase keys; amounts are decimal
//! strings (JSON integers are accepted on input) and addresses are `0x`
//! strings.

use std::collections::BTreeSet;
use std::fmt;

use ethnum::U256;
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::ir::value::parse_u256;
use crate::ir::{is_identifier, Address, ValueType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("syntax error: {0}")]
    SpecSyntaxError(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("`{path}`: {message}")]
    InvariantViolation { path: String, message: String },
    #[error("`{path}`: malformed address `{value}`")]
    MalformedAddress { path: String, value: String },
    #[error("`{path}`: unknown attribute type `{ty}`")]
    UnknownAttributeType { path: String, ty: String },
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError::InvariantViolation { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FungibleRegistrySpec {
    pub name: String,
    pub symbol: String,
    pub decimals: u8,
    pub is_mintable: bool,
    pub minter_addresses: Vec<Address>,
    pub is_burnable: bool,
    pub burner_addresses: Vec<Address>,
    pub total_supply: U256,
    pub initially_distributed_accounts: Vec<(Address, U256)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegistryType {
    Single,
    Distributed,
}

impl RegistryType {
    pub fn as_str(self) -> &'static str {
        match self {
            RegistryType::Single => "single",
            RegistryType::Distributed => "distributed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDecl {
    pub name: String,
    pub ty: ValueType,
    pub updatable: bool,
    pub history_tracked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonFungibleRegistrySpec {
    pub name: String,
    pub registry_type: RegistryType,
    pub attributes: Vec<AttributeDecl>,
    pub is_ownership_transfer_enabled: bool,
    pub is_record_creation_restricted_to_bpmn: bool,
    pub is_ownership_transfer_enabled_to_bpmn: bool,
    pub is_registry_function_access_control_enabled: bool,
    pub is_registry_record_access_control_enabled: bool,
    pub is_access_control_by_smart_contract_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegistrySpec {
    Fungible(FungibleRegistrySpec),
    NonFungible(NonFungibleRegistrySpec),
}

impl RegistrySpec {
    pub fn name(&self) -> &str {
        match self {
            RegistrySpec::Fungible(s) => &s.name,
            RegistrySpec::NonFungible(s) => &s.name,
        }
    }

    /// Solidity contract name, also the name process interfaces use to refer
    /// to the registry.
    pub fn contract_name(&self) -> String {
        match self {
            RegistrySpec::Fungible(s) => s.contract_name(),
            RegistrySpec::NonFungible(s) => s.contract_name(),
        }
    }

    pub fn to_json_string(&self) -> String {
        match self {
            RegistrySpec::Fungible(s) => s.to_json_string(),
            RegistrySpec::NonFungible(s) => s.to_json_string(),
        }
    }
}

/// `"Lorikeet Coin"` → `LorikeetCoin`.
pub fn pascal_case(name: &str) -> String {
    name.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut cs = w.chars();
            let first = cs.next().unwrap().to_ascii_uppercase();
            std::iter::once(first).chain(cs).collect::<String>()
        })
        .collect()
}

impl FungibleRegistrySpec {
    pub fn contract_name(&self) -> String {
        pascal_case(&self.name)
    }
}

impl NonFungibleRegistrySpec {
    pub fn contract_name(&self) -> String {
        format!("{}Registry", pascal_case(&self.name))
    }

    /// Per-record contract name for distributed registries.
    pub fn record_contract_name(&self) -> String {
        format!("{}Record", pascal_case(&self.name))
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeDecl> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn create_policy(&self) -> CreatePolicy {
        if self.is_record_creation_restricted_to_bpmn {
            CreatePolicy::ProcessOnly
        } else if self.is_registry_function_access_control_enabled {
            CreatePolicy::Granted
        } else {
            CreatePolicy::Anyone
        }
    }

    /// Who may update an updatable attribute of an existing record.
    pub fn update_policy(&self) -> RecordPolicy {
        if self.is_record_creation_restricted_to_bpmn {
            RecordPolicy::ProcessOnly
        } else {
            self.record_holder_policy()
        }
    }

    pub fn transfer_policy(&self) -> Option<RecordPolicy> {
        if !self.is_ownership_transfer_enabled {
            None
        } else if self.is_ownership_transfer_enabled_to_bpmn {
            Some(RecordPolicy::ProcessOnly)
        } else {
            Some(self.record_holder_policy())
        }
    }

    fn record_holder_policy(&self) -> RecordPolicy {
        if self.is_registry_record_access_control_enabled {
            RecordPolicy::OwnerOrRegistryOwner
        } else {
            RecordPolicy::Owner
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreatePolicy {
    /// Only process instances authorized by the registry owner.
    ProcessOnly,
    /// Only accounts granted access by the registry owner (or the external
    /// access controller, when one is configured).
    Granted,
    Anyone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordPolicy {
    ProcessOnly,
    Owner,
    OwnerOrRegistryOwner,
}

impl fmt::Display for RecordPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordPolicy::ProcessOnly => "authorized process",
            RecordPolicy::Owner => "record owner",
            RecordPolicy::OwnerOrRegistryOwner => "record owner or registry owner",
        })
    }
}

const SOLIDITY_RESERVED: &[&str] = &[
    "address", "bool", "string", "uint", "int", "uint256", "int256", "bytes", "mapping", "contract", "function",
    "returns", "return", "event", "emit", "modifier", "public", "private", "internal", "external", "memory",
    "storage", "calldata", "if", "else", "while", "for", "do", "break", "continue", "new", "delete", "this", "true",
    "false", "msg", "tx", "block", "now", "owner", "record_id", "exists", "history",
];

// ---------------------------------------------------------------------------
// JSON access helpers

struct Obj<'a> {
    map: &'a Map<String, Json>,
    path: String,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Json, path: &str, allowed: &[&str]) -> Result<Obj<'a>, SpecError> {
        let map = v.as_object().ok_or_else(|| violation(path_or_root(path), "expected an object"))?;
        for k in map.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(SpecError::UnknownField(join(path, k)));
            }
        }
        Ok(Obj { map, path: path.to_string() })
    }

    fn path(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn get(&self, key: &str) -> Option<&'a Json> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn req(&self, key: &str) -> Result<&'a Json, SpecError> {
        self.get(key).ok_or_else(|| SpecError::MissingField(self.path(key)))
    }

    fn string(&self, key: &str) -> Result<String, SpecError> {
        self.req(key)?.as_str().map(str::to_string).ok_or_else(|| violation(self.path(key), "expected a string"))
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, SpecError> {
        match self.get(key) {
            None => Ok(None),
            Some(Json::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(violation(self.path(key), "expected true or false")),
        }
    }

    fn array(&self, key: &str) -> Result<&'a [Json], SpecError> {
        match self.get(key) {
            None => Ok(&[]),
            Some(Json::Array(a)) => Ok(a),
            Some(_) => Err(violation(self.path(key), "expected an array")),
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn path_or_root(path: &str) -> String {
    if path.is_empty() {
        "$".into()
    } else {
        path.into()
    }
}

fn amount(v: &Json, path: &str) -> Result<U256, SpecError> {
    let parsed = match v {
        Json::String(s) if !s.starts_with("0x") => parse_u256(s),
        Json::Number(n) => n.as_u64().map(U256::from),
        _ => None,
    };
    parsed.ok_or_else(|| violation(path, "expected a non-negative integer amount (decimal string)"))
}

fn address(v: &Json, path: &str) -> Result<Address, SpecError> {
    let s = v.as_str().ok_or_else(|| violation(path, "expected an address string"))?;
    s.parse().map_err(|_| SpecError::MalformedAddress { path: path.into(), value: s.into() })
}

fn address_list(o: &Obj, key: &str) -> Result<Vec<Address>, SpecError> {
    let mut out = Vec::new();
    for (i, v) in o.array(key)?.iter().enumerate() {
        let path = format!("{}[{i}]", o.path(key));
        let a = address(v, &path)?;
        if out.contains(&a) {
            return Err(violation(path, format!("duplicate address {a}")));
        }
        out.push(a);
    }
    Ok(out)
}

fn check_name(name: &str, path: &str) -> Result<(), SpecError> {
    let pc = pascal_case(name);
    if pc.is_empty() || !pc.starts_with(|c: char| c.is_ascii_alphabetic()) {
        return Err(violation(path, "name must contain letters and start with one"));
    }
    Ok(())
}

fn parse_json(doc: &str) -> Result<Json, SpecError> {
    serde_json::from_str(doc).map_err(|e| SpecError::SpecSyntaxError(e.to_string()))
}

// ---------------------------------------------------------------------------
// Fungible

const FUNGIBLE_FIELDS: &[&str] = &[
    "name",
    "symbol",
    "decimals",
    "isMintable",
    "minterAddresses",
    "isBurnable",
    "burnerAddresses",
    "totalSupply",
    "initiallyDistributedAccounts",
];

pub fn parse_fungible(doc: &str) -> Result<FungibleRegistrySpec, SpecError> {
    fungible_from_json(&parse_json(doc)?)
}

fn fungible_from_json(v: &Json) -> Result<FungibleRegistrySpec, SpecError> {
    let o = Obj::new(v, "", FUNGIBLE_FIELDS)?;
    let name = o.string("name")?;
    check_name(&name, "name")?;
    let symbol = o.string("symbol")?;
    let n = symbol.chars().count();
    if !(1..=11).contains(&n) || symbol.chars().any(|c| c.is_control() || c == '"' || c == '\\') {
        return Err(violation("symbol", "symbol must be 1 to 11 printable characters"));
    }
    let decimals = match o.req("decimals")?.as_u64() {
        Some(d) if d <= 18 => d as u8,
        _ => return Err(violation("decimals", "decimals must be an integer from 0 to 18")),
    };
    let is_mintable = o.flag("isMintable")?.unwrap_or(false);
    let minter_addresses = address_list(&o, "minterAddresses")?;
    let is_burnable = o.flag("isBurnable")?.unwrap_or(false);
    let burner_addresses = address_list(&o, "burnerAddresses")?;
    if is_mintable == minter_addresses.is_empty() {
        return Err(violation("minterAddresses", "must be non-empty exactly when isMintable is true"));
    }
    if is_burnable == burner_addresses.is_empty() {
        return Err(violation("burnerAddresses", "must be non-empty exactly when isBurnable is true"));
    }
    let total_supply = amount(o.req("totalSupply")?, "totalSupply")?;

    let mut dist = Vec::new();
    let mut sum = U256::ZERO;
    for (i, entry) in o.array("initiallyDistributedAccounts")?.iter().enumerate() {
        let path = format!("initiallyDistributedAccounts[{i}]");
        let e = Obj::new(entry, &path, &["address", "amount"])?;
        let a = address(e.req("address")?, &e.path("address"))?;
        let amt = amount(e.req("amount")?, &e.path("amount"))?;
        if dist.iter().any(|(d, _)| *d == a) {
            return Err(violation(path, format!("duplicate address {a}")));
        }
        sum = sum.checked_add(amt).ok_or_else(|| violation(&path, "distribution overflows 256 bits"))?;
        dist.push((a, amt));
    }
    if sum != total_supply {
        return Err(violation(
            "initiallyDistributedAccounts",
            format!("distribution ≠ totalSupply ({sum} distributed, totalSupply {total_supply})"),
        ));
    }
    Ok(FungibleRegistrySpec {
        name,
        symbol,
        decimals,
        is_mintable,
        minter_addresses,
        is_burnable,
        burner_addresses,
        total_supply,
        initially_distributed_accounts: dist,
    })
}

impl FungibleRegistrySpec {
    /// Canonical JSON form; every field present, amounts as strings.
    pub fn to_json(&self) -> Json {
        json!({
            "name": self.name,
            "symbol": self.symbol,
            "decimals": self.decimals,
            "isMintable": self.is_mintable,
            "minterAddresses": self.minter_addresses.iter().map(Address::to_checksum).collect::<Vec<_>>(),
            "isBurnable": self.is_burnable,
            "burnerAddresses": self.burner_addresses.iter().map(Address::to_checksum).collect::<Vec<_>>(),
            "totalSupply": self.total_supply.to_string(),
            "initiallyDistributedAccounts": self.initially_distributed_accounts.iter()
                .map(|(a, v)| json!({"address": a.to_checksum(), "amount": v.to_string()}))
                .collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        canonical_string(&self.to_json(), FUNGIBLE_FIELDS)
    }
}

// ---------------------------------------------------------------------------
// Non-fungible

const NONFUNGIBLE_FIELDS: &[&str] = &[
    "name",
    "registryType",
    "attributes",
    "isOwnershipTransferEnabled",
    "isRecordCreationRestrictedToBPMN",
    "isOwnershipTransferEnabledToBPMN",
    "isRegistryFunctionAccessControlEnabled",
    "isRegistryRecordAccessControlEnabled",
    "isAccessControlBySmartContractEnabled",
];

pub fn parse_nonfungible(doc: &str) -> Result<NonFungibleRegistrySpec, SpecError> {
    nonfungible_from_json(&parse_json(doc)?)
}

fn nonfungible_from_json(v: &Json) -> Result<NonFungibleRegistrySpec, SpecError> {
    let o = Obj::new(v, "", NONFUNGIBLE_FIELDS)?;
    let name = o.string("name")?;
    check_name(&name, "name")?;
    let registry_type = match o.string("registryType")?.as_str() {
        "single" => RegistryType::Single,
        "distributed" => RegistryType::Distributed,
        other => return Err(violation("registryType", format!("`{other}` is neither `single` nor `distributed`"))),
    };
    if !matches!(o.get("attributes"), Some(Json::Array(_))) {
        return Err(match o.get("attributes") {
            None => SpecError::MissingField("attributes".into()),
            Some(_) => violation("attributes", "expected an array"),
        });
    }
    let mut attributes: Vec<AttributeDecl> = Vec::new();
    for (i, entry) in o.array("attributes")?.iter().enumerate() {
        let path = format!("attributes[{i}]");
        let a = Obj::new(entry, &path, &["name", "type", "updatable", "historyTracked"])?;
        let aname = a.string("name")?;
        if !is_identifier(&aname) || SOLIDITY_RESERVED.contains(&aname.as_str()) {
            return Err(violation(a.path("name"), format!("`{aname}` is not a usable attribute name")));
        }
        if attributes.iter().any(|x| x.name == aname) {
            return Err(violation(a.path("name"), format!("duplicate attribute `{aname}`")));
        }
        let tname = a.string("type")?;
        let ty = ValueType::parse(&tname)
            .ok_or_else(|| SpecError::UnknownAttributeType { path: a.path("type"), ty: tname.clone() })?;
        attributes.push(AttributeDecl {
            name: aname,
            ty,
            updatable: a.flag("updatable")?.unwrap_or(false),
            history_tracked: a.flag("historyTracked")?.unwrap_or(false),
        });
    }
    if attributes.is_empty() {
        return Err(violation("attributes", "at least one attribute is required"));
    }
    let to_bpmn = o.flag("isOwnershipTransferEnabledToBPMN")?.unwrap_or(false);
    let transfer = o.flag("isOwnershipTransferEnabled")?.unwrap_or(to_bpmn);
    if to_bpmn && !transfer {
        return Err(violation(
            "isOwnershipTransferEnabled",
            "must be true when isOwnershipTransferEnabledToBPMN is true",
        ));
    }
    let fn_ac = o.flag("isRegistryFunctionAccessControlEnabled")?.unwrap_or(false);
    let rec_ac = o.flag("isRegistryRecordAccessControlEnabled")?.unwrap_or(false);
    let by_sc = o.flag("isAccessControlBySmartContractEnabled")?.unwrap_or(false);
    if by_sc && !(fn_ac || rec_ac) {
        return Err(violation(
            "isAccessControlBySmartContractEnabled",
            "requires function or record access control to be enabled",
        ));
    }
    Ok(NonFungibleRegistrySpec {
        name,
        registry_type,
        attributes,
        is_ownership_transfer_enabled: transfer,
        is_record_creation_restricted_to_bpmn: o.flag("isRecordCreationRestrictedToBPMN")?.unwrap_or(false),
        is_ownership_transfer_enabled_to_bpmn: to_bpmn,
        is_registry_function_access_control_enabled: fn_ac,
        is_registry_record_access_control_enabled: rec_ac,
        is_access_control_by_smart_contract_enabled: by_sc,
    })
}

impl NonFungibleRegistrySpec {
    pub fn to_json(&self) -> Json {
        json!({
            "name": self.name,
            "registryType": self.registry_type.as_str(),
            "attributes": self.attributes.iter().map(|a| json!({
                "name": a.name,
                "type": a.ty.name(),
                "updatable": a.updatable,
                "historyTracked": a.history_tracked,
            })).collect::<Vec<_>>(),
            "isOwnershipTransferEnabled": self.is_ownership_transfer_enabled,
            "isRecordCreationRestrictedToBPMN": self.is_record_creation_restricted_to_bpmn,
            "isOwnershipTransferEnabledToBPMN": self.is_ownership_transfer_enabled_to_bpmn,
            "isRegistryFunctionAccessControlEnabled": self.is_registry_function_access_control_enabled,
            "isRegistryRecordAccessControlEnabled": self.is_registry_record_access_control_enabled,
            "isAccessControlBySmartContractEnabled": self.is_access_control_by_smart_contract_enabled,
        })
    }

    pub fn to_json_string(&self) -> String {
        canonical_string(&self.to_json(), NONFUNGIBLE_FIELDS)
    }
}

/// Pretty JSON with top-level keys in declaration order.
fn canonical_string(v: &Json, order: &[&str]) -> String {
    let map = v.as_object().expect("object");
    let mut out = String::from("{\n");
    let mut first = true;
    for k in order {
        let Some(val) = map.get(*k) else { continue };
        if !first {
            out.push_str(",\n");
        }
        first = false;
        let rendered = serde_json::to_string_pretty(val).expect("serializable");
        let indented = rendered.replace('\n', "\n  ");
        out.push_str(&format!("  {}: {indented}", Json::String(k.to_string())));
    }
    out.push_str("\n}\n");
    out
}

/// Parses either kind; the presence of `registryType` selects non-fungible.
pub fn parse_registry(doc: &str) -> Result<RegistrySpec, SpecError> {
    let v = parse_json(doc)?;
    if v.get("registryType").is_some() {
        nonfungible_from_json(&v).map(RegistrySpec::NonFungible)
    } else {
        fungible_from_json(&v).map(RegistrySpec::Fungible)
    }
}

/// Names in a spec set must map to distinct contracts.
pub fn check_distinct_names(specs: &[RegistrySpec]) -> Result<(), SpecError> {
    let mut seen = BTreeSet::new();
    for s in specs {
        if !seen.insert(s.contract_name()) {
            return Err(violation("name", format!("two registries compile to contract `{}`", s.contract_name())));
        }
    }
    Ok(())
}
