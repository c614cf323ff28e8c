//! ERC-721 style record registry.

use std::collections::{BTreeMap, BTreeSet};

use ethnum::U256;
use thiserror::Error;

use crate::ir::{keccak256, Address, Value};
use crate::registry::{CreatePolicy, NonFungibleRegistrySpec, RecordPolicy, RegistryType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("record {0} already exists")]
    DuplicateRecord(Address),
    #[error("no record {0}")]
    UnknownRecord(Address),
    #[error("{caller} is not allowed to {action}")]
    Unauthorized { caller: Address, action: String },
    #[error("ownership transfer is disabled for this registry")]
    TransferDisabled,
    #[error("attribute `{0}` is not updatable")]
    AttributeNotUpdatable(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("expected {expected} attribute values, got {got}")]
    AttributeCount { expected: usize, got: usize },
    #[error("attribute `{name}` expects {expected}, got {got}")]
    AttributeType { name: String, expected: String, got: String },
    #[error("record owner cannot be the zero address")]
    ZeroOwner,
    #[error("{from} does not own record {record}")]
    NotOwner { from: Address, record: Address },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry {
    pub attribute: String,
    pub old: Value,
    pub new: Value,
    pub by: Address,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub owner: Address,
    /// One value per declared attribute, in declaration order.
    pub attrs: Vec<Value>,
    pub history: Vec<HistoryEntry>,
    pub approved: Option<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonFungibleStore {
    pub spec: NonFungibleRegistrySpec,
    pub address: Address,
    /// The deploying account.
    pub registry_owner: Address,
    records: BTreeMap<Address, Record>,
    order: Vec<Address>,
    counter: u64,
    processes: BTreeSet<Address>,
    granted: BTreeSet<Address>,
    operators: BTreeSet<(Address, Address)>,
    access_controller: Option<Address>,
}

/// Address of a contract created by `deployer` with account nonce `nonce`.
pub fn create_address(deployer: Address, nonce: u64) -> Address {
    let nonce_rlp: Vec<u8> = if nonce == 0 {
        vec![0x80]
    } else if nonce < 0x80 {
        vec![nonce as u8]
    } else {
        let bytes = nonce.to_be_bytes();
        let skip = bytes.iter().take_while(|b| **b == 0).count();
        let mut v = vec![0x80 + (8 - skip) as u8];
        v.extend_from_slice(&bytes[skip..]);
        v
    };
    let mut payload = vec![0x94];
    payload.extend_from_slice(&deployer.0);
    payload.extend_from_slice(&nonce_rlp);
    let mut buf = vec![0xc0 + payload.len() as u8];
    buf.extend_from_slice(&payload);
    Address::from_word(&keccak256(&buf))
}

impl NonFungibleStore {
    pub fn new(spec: NonFungibleRegistrySpec, address: Address, registry_owner: Address) -> NonFungibleStore {
        NonFungibleStore {
            spec,
            address,
            registry_owner,
            records: BTreeMap::new(),
            order: Vec::new(),
            counter: 0,
            processes: BTreeSet::new(),
            granted: BTreeSet::new(),
            operators: BTreeSet::new(),
            access_controller: None,
        }
    }

    /// The id the next `record_create` will assign.
    pub fn next_record_id(&self) -> Address {
        match self.spec.registry_type {
            RegistryType::Single => {
                let mut buf = self.address.0.to_vec();
                buf.extend_from_slice(&U256::from(self.counter).to_be_bytes());
                Address::from_word(&keccak256(&buf))
            }
            // contract nonces start at 1
            RegistryType::Distributed => create_address(self.address, self.counter + 1),
        }
    }

    pub fn records(&self) -> impl Iterator<Item = (Address, &Record)> + '_ {
        self.order.iter().map(move |id| (*id, &self.records[id]))
    }

    pub fn record(&self, id: Address) -> Result<&Record, RecordError> {
        self.records.get(&id).ok_or(RecordError::UnknownRecord(id))
    }

    pub fn is_process(&self, a: Address) -> bool {
        self.processes.contains(&a)
    }

    fn unauthorized(caller: Address, action: &str) -> RecordError {
        RecordError::Unauthorized { caller, action: action.to_string() }
    }

    pub fn authorize_process(&mut self, caller: Address, process: Address) -> Result<(), RecordError> {
        if caller != self.registry_owner {
            return Err(Self::unauthorized(caller, "authorize processes"));
        }
        self.processes.insert(process);
        Ok(())
    }

    fn may_administer_access(&self, caller: Address) -> bool {
        caller == self.registry_owner || (self.access_controller == Some(caller))
    }

    pub fn set_access_controller(&mut self, caller: Address, controller: Address) -> Result<(), RecordError> {
        if !self.spec.is_access_control_by_smart_contract_enabled || caller != self.registry_owner {
            return Err(Self::unauthorized(caller, "set the access controller"));
        }
        self.access_controller = if controller.is_zero() { None } else { Some(controller) };
        Ok(())
    }

    pub fn grant_access(&mut self, caller: Address, account: Address) -> Result<(), RecordError> {
        if !self.may_administer_access(caller) {
            return Err(Self::unauthorized(caller, "grant access"));
        }
        self.granted.insert(account);
        Ok(())
    }

    pub fn revoke_access(&mut self, caller: Address, account: Address) -> Result<(), RecordError> {
        if !self.may_administer_access(caller) {
            return Err(Self::unauthorized(caller, "revoke access"));
        }
        self.granted.remove(&account);
        Ok(())
    }

    fn check_attrs(&self, attrs: &[Value]) -> Result<(), RecordError> {
        if attrs.len() != self.spec.attributes.len() {
            return Err(RecordError::AttributeCount { expected: self.spec.attributes.len(), got: attrs.len() });
        }
        for (decl, v) in self.spec.attributes.iter().zip(attrs) {
            if v.ty() != decl.ty {
                return Err(RecordError::AttributeType {
                    name: decl.name.clone(),
                    expected: decl.ty.to_string(),
                    got: v.ty().to_string(),
                });
            }
        }
        Ok(())
    }

    /// Creates a record under an explicit id.
    pub fn insert_record(
        &mut self,
        caller: Address,
        id: Address,
        owner: Address,
        attrs: Vec<Value>,
    ) -> Result<(), RecordError> {
        let allowed = match self.spec.create_policy() {
            CreatePolicy::ProcessOnly => self.is_process(caller),
            CreatePolicy::Granted => self.granted.contains(&caller) || caller == self.registry_owner,
            CreatePolicy::Anyone => true,
        };
        if !allowed {
            return Err(Self::unauthorized(caller, "create records"));
        }
        if self.records.contains_key(&id) {
            return Err(RecordError::DuplicateRecord(id));
        }
        if owner.is_zero() {
            return Err(RecordError::ZeroOwner);
        }
        self.check_attrs(&attrs)?;
        self.records.insert(id, Record { owner, attrs, history: Vec::new(), approved: None });
        self.order.push(id);
        Ok(())
    }

    /// Creates a record under the next generated id and returns it.
    pub fn record_create(&mut self, caller: Address, owner: Address, attrs: Vec<Value>) -> Result<Address, RecordError> {
        let id = self.next_record_id();
        self.insert_record(caller, id, owner, attrs)?;
        self.counter += 1;
        Ok(id)
    }

    pub fn record_get_owner(&self, id: Address) -> Result<Address, RecordError> {
        Ok(self.record(id)?.owner)
    }

    pub fn record_get_attrs(&self, id: Address) -> Result<Vec<Value>, RecordError> {
        Ok(self.record(id)?.attrs.clone())
    }

    fn record_policy_allows(&self, policy: RecordPolicy, caller: Address, rec: &Record) -> bool {
        match policy {
            RecordPolicy::ProcessOnly => self.is_process(caller),
            RecordPolicy::Owner => caller == rec.owner,
            RecordPolicy::OwnerOrRegistryOwner => caller == rec.owner || caller == self.registry_owner,
        }
    }

    pub fn record_update(&mut self, caller: Address, id: Address, attribute: &str, value: Value) -> Result<(), RecordError> {
        let idx = self
            .spec
            .attributes
            .iter()
            .position(|a| a.name == attribute)
            .ok_or_else(|| RecordError::UnknownAttribute(attribute.to_string()))?;
        let decl = self.spec.attributes[idx].clone();
        if !decl.updatable {
            return Err(RecordError::AttributeNotUpdatable(attribute.to_string()));
        }
        if value.ty() != decl.ty {
            return Err(RecordError::AttributeType {
                name: decl.name,
                expected: decl.ty.to_string(),
                got: value.ty().to_string(),
            });
        }
        let rec = self.record(id)?;
        if !self.record_policy_allows(self.spec.update_policy(), caller, rec) {
            return Err(Self::unauthorized(caller, &format!("update record {id}")));
        }
        let rec = self.records.get_mut(&id).expect("checked above");
        let old = std::mem::replace(&mut rec.attrs[idx], value.clone());
        if decl.history_tracked {
            rec.history.push(HistoryEntry { attribute: decl.name, old, new: value, by: caller });
        }
        Ok(())
    }

    pub fn record_ownership_transfer(&mut self, caller: Address, id: Address, new_owner: Address) -> Result<(), RecordError> {
        let policy = self.spec.transfer_policy().ok_or(RecordError::TransferDisabled)?;
        let rec = self.record(id)?;
        if !self.record_policy_allows(policy, caller, rec) {
            return Err(Self::unauthorized(caller, &format!("transfer record {id}")));
        }
        self.move_record(id, new_owner)
    }

    fn move_record(&mut self, id: Address, new_owner: Address) -> Result<(), RecordError> {
        if new_owner.is_zero() {
            return Err(RecordError::ZeroOwner);
        }
        let rec = self.records.get_mut(&id).ok_or(RecordError::UnknownRecord(id))?;
        rec.owner = new_owner;
        rec.approved = None;
        Ok(())
    }

    pub fn balance_of(&self, owner: Address) -> U256 {
        U256::from(self.records.values().filter(|r| r.owner == owner).count() as u64)
    }

    pub fn owner_of(&self, token: U256) -> Result<Address, RecordError> {
        self.record_get_owner(Address::from_u256(token))
    }

    pub fn get_approved(&self, token: U256) -> Result<Address, RecordError> {
        Ok(self.record(Address::from_u256(token))?.approved.unwrap_or(Address::ZERO))
    }

    pub fn is_approved_for_all(&self, owner: Address, operator: Address) -> bool {
        self.operators.contains(&(owner, operator))
    }

    pub fn approve(&mut self, caller: Address, to: Address, token: U256) -> Result<(), RecordError> {
        let id = Address::from_u256(token);
        let rec = self.record(id)?;
        if caller != rec.owner && !self.is_approved_for_all(rec.owner, caller) {
            return Err(Self::unauthorized(caller, &format!("approve record {id}")));
        }
        let rec = self.records.get_mut(&id).expect("checked above");
        rec.approved = if to.is_zero() { None } else { Some(to) };
        Ok(())
    }

    pub fn set_approval_for_all(&mut self, caller: Address, operator: Address, approved: bool) {
        if approved {
            self.operators.insert((caller, operator));
        } else {
            self.operators.remove(&(caller, operator));
        }
    }

    /// ERC-721 transfer. Holder-side policies also admit approved accounts
    /// and operators.
    pub fn transfer_from(&mut self, caller: Address, from: Address, to: Address, token: U256) -> Result<(), RecordError> {
        let id = Address::from_u256(token);
        let policy = self.spec.transfer_policy().ok_or(RecordError::TransferDisabled)?;
        let rec = self.record(id)?;
        if rec.owner != from {
            return Err(RecordError::NotOwner { from, record: id });
        }
        let delegated = rec.approved == Some(caller) || self.is_approved_for_all(rec.owner, caller);
        let allowed = match policy {
            RecordPolicy::ProcessOnly => self.is_process(caller),
            _ => delegated || self.record_policy_allows(policy, caller, rec),
        };
        if !allowed {
            return Err(Self::unauthorized(caller, &format!("transfer record {id}")));
        }
        self.move_record(id, to)
    }
}
