//! ERC-20 style balance ledger.

use std::collections::BTreeMap;

use ethnum::U256;
use thiserror::Error;

use crate::ir::Address;
use crate::registry::FungibleRegistrySpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("insufficient balance: {account} holds {balance}, needs {needed}")]
    InsufficientBalance { account: Address, balance: U256, needed: U256 },
    #[error("insufficient allowance: {spender} may spend {allowance} of {owner}'s tokens, needs {needed}")]
    InsufficientAllowance { owner: Address, spender: Address, allowance: U256, needed: U256 },
    #[error("{caller} is not allowed to {action}")]
    Unauthorized { caller: Address, action: &'static str },
    #[error("{0} is disabled for this token")]
    FeatureDisabled(&'static str),
    #[error("total supply would overflow")]
    SupplyOverflow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FungibleLedger {
    pub spec: FungibleRegistrySpec,
    balances: BTreeMap<Address, U256>,
    allowances: BTreeMap<(Address, Address), U256>,
    total_supply: U256,
}

impl FungibleLedger {
    pub fn new(spec: FungibleRegistrySpec) -> FungibleLedger {
        let balances = spec.initially_distributed_accounts.iter().filter(|(_, v)| *v != U256::ZERO).cloned().collect();
        FungibleLedger { total_supply: spec.total_supply, spec, balances, allowances: BTreeMap::new() }
    }

    pub fn total_supply(&self) -> U256 {
        self.total_supply
    }

    pub fn balance_of(&self, a: Address) -> U256 {
        self.balances.get(&a).copied().unwrap_or(U256::ZERO)
    }

    pub fn allowance(&self, owner: Address, spender: Address) -> U256 {
        self.allowances.get(&(owner, spender)).copied().unwrap_or(U256::ZERO)
    }

    /// Nonzero balances, ordered by address.
    pub fn balances(&self) -> impl Iterator<Item = (Address, U256)> + '_ {
        self.balances.iter().map(|(a, v)| (*a, *v))
    }

    pub fn sum_of_balances(&self) -> Option<U256> {
        self.balances.values().try_fold(U256::ZERO, |acc, v| acc.checked_add(*v))
    }

    fn set_balance(&mut self, a: Address, v: U256) {
        if v == U256::ZERO {
            self.balances.remove(&a);
        } else {
            self.balances.insert(a, v);
        }
    }

    fn move_tokens(&mut self, from: Address, to: Address, amount: U256) -> Result<(), LedgerError> {
        let bal = self.balance_of(from);
        if bal < amount {
            return Err(LedgerError::InsufficientBalance { account: from, balance: bal, needed: amount });
        }
        self.set_balance(from, bal - amount);
        // cannot overflow: the sum of all balances equals total supply
        let to_bal = self.balance_of(to);
        self.set_balance(to, to_bal + amount);
        Ok(())
    }

    pub fn transfer(&mut self, caller: Address, to: Address, amount: U256) -> Result<(), LedgerError> {
        self.move_tokens(caller, to, amount)
    }

    pub fn approve(&mut self, caller: Address, spender: Address, amount: U256) {
        if amount == U256::ZERO {
            self.allowances.remove(&(caller, spender));
        } else {
            self.allowances.insert((caller, spender), amount);
        }
    }

    pub fn transfer_from(&mut self, caller: Address, from: Address, to: Address, amount: U256) -> Result<(), LedgerError> {
        let allowed = self.allowance(from, caller);
        if allowed < amount {
            return Err(LedgerError::InsufficientAllowance { owner: from, spender: caller, allowance: allowed, needed: amount });
        }
        self.move_tokens(from, to, amount)?;
        self.approve(from, caller, allowed - amount);
        Ok(())
    }

    pub fn mint(&mut self, caller: Address, to: Address, amount: U256) -> Result<(), LedgerError> {
        if !self.spec.is_mintable {
            return Err(LedgerError::FeatureDisabled("minting"));
        }
        if !self.spec.minter_addresses.contains(&caller) {
            return Err(LedgerError::Unauthorized { caller, action: "mint" });
        }
        let supply = self.total_supply.checked_add(amount).ok_or(LedgerError::SupplyOverflow)?;
        self.total_supply = supply;
        let bal = self.balance_of(to);
        self.set_balance(to, bal + amount);
        Ok(())
    }

    /// Burns from the caller's own balance.
    pub fn burn(&mut self, caller: Address, amount: U256) -> Result<(), LedgerError> {
        if !self.spec.is_burnable {
            return Err(LedgerError::FeatureDisabled("burning"));
        }
        if !self.spec.burner_addresses.contains(&caller) {
            return Err(LedgerError::Unauthorized { caller, action: "burn" });
        }
        let bal = self.balance_of(caller);
        if bal < amount {
            return Err(LedgerError::InsufficientBalance { account: caller, balance: bal, needed: amount });
        }
        self.set_balance(caller, bal - amount);
        self.total_supply -= amount;
        Ok(())
    }
}
