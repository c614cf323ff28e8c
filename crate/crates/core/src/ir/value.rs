//! Runtime values, their types, and 20-byte account addresses.

use std::fmt;
use std::str::FromStr;

use ethnum::{I256, U256};
use sha3::{Digest, Keccak256};
use thiserror::Error;

pub fn keccak256(data: &[u8]) -> [u8; 32] {
    let mut hasher = Keccak256::new();
    hasher.update(data);
    hasher.finalize().into()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed address `{0}`: expected 0x followed by 40 hex digits")]
pub struct MalformedAddress(pub String);

/// A 20-byte account identity, displayed with the mixed-case checksum
/// encoding Solidity requires for address literals.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0u8; 20]);

    /// Deterministic pseudo-address: the low 20 bytes of keccak256 over the
    /// concatenated parts. Used for process instances and simulated
    /// registries that have no configured address.
    pub fn derive(parts: &[&[u8]]) -> Address {
        let mut buf = Vec::new();
        for p in parts {
            buf.extend_from_slice(p);
        }
        Address::from_word(&keccak256(&buf))
    }

    /// Low 20 bytes of a 32-byte word, as `address(uint160(uint256(word)))`.
    pub fn from_word(word: &[u8; 32]) -> Address {
        let mut out = [0u8; 20];
        out.copy_from_slice(&word[12..]);
        Address(out)
    }

    pub fn to_u256(self) -> U256 {
        let mut word = [0u8; 32];
        word[12..].copy_from_slice(&self.0);
        U256::from_be_bytes(word)
    }

    pub fn from_u256(v: U256) -> Address {
        Address::from_word(&v.to_be_bytes())
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0u8; 20]
    }

    pub fn to_checksum(&self) -> String {
        let lower: String = self.0.iter().map(|b| format!("{b:02x}")).collect();
        let hash = keccak256(lower.as_bytes());
        let mut out = String::with_capacity(42);
        out.push_str("0x");
        for (i, c) in lower.chars().enumerate() {
            let nibble = (hash[i / 2] >> if i % 2 == 0 { 4 } else { 0 }) & 0x0f;
            if c.is_ascii_alphabetic() && nibble >= 8 {
                out.push(c.to_ascii_uppercase());
            } else {
                out.push(c);
            }
        }
        out
    }
}

impl FromStr for Address {
    type Err = MalformedAddress;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MalformedAddress(s.to_string());
        let hex = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).ok_or_else(bad)?;
        if hex.len() != 40 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let mut out = [0u8; 20];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        Ok(Address(out))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_checksum())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.to_checksum())
    }
}

impl serde::Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_checksum())
    }
}

impl<'de> serde::Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueType {
    Uint256,
    Int256,
    Bool,
    Address,
    String,
}

impl ValueType {
    pub const ALL: [ValueType; 5] = [
        ValueType::Uint256,
        ValueType::Int256,
        ValueType::Bool,
        ValueType::Address,
        ValueType::String,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ValueType::Uint256 => "uint256",
            ValueType::Int256 => "int256",
            ValueType::Bool => "bool",
            ValueType::Address => "address",
            ValueType::String => "string",
        }
    }

    pub fn parse(s: &str) -> Option<ValueType> {
        Some(match s {
            "uint256" | "uint" => ValueType::Uint256,
            "int256" | "int" => ValueType::Int256,
            "bool" => ValueType::Bool,
            "address" => ValueType::Address,
            "string" => ValueType::String,
            _ => return None,
        })
    }

    pub fn is_integer(self) -> bool {
        matches!(self, ValueType::Uint256 | ValueType::Int256)
    }

    pub fn zero(self) -> Value {
        match self {
            ValueType::Uint256 => Value::Uint(U256::ZERO),
            ValueType::Int256 => Value::Int(I256::ZERO),
            ValueType::Bool => Value::Bool(false),
            ValueType::Address => Value::Address(Address::ZERO),
            ValueType::String => Value::Str(String::new()),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Uint(U256),
    Int(I256),
    Bool(bool),
    Address(Address),
    Str(String),
}

impl Value {
    pub fn ty(&self) -> ValueType {
        match self {
            Value::Uint(_) => ValueType::Uint256,
            Value::Int(_) => ValueType::Int256,
            Value::Bool(_) => ValueType::Bool,
            Value::Address(_) => ValueType::Address,
            Value::Str(_) => ValueType::String,
        }
    }

    pub fn as_uint(&self) -> Option<U256> {
        match self {
            Value::Uint(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_address(&self) -> Option<Address> {
        match self {
            Value::Address(a) => Some(*a),
            _ => None,
        }
    }

    /// Parses the textual form of a value of a known type. Integers are
    /// decimal (or `0x` hex for uint256), strings are taken verbatim.
    pub fn parse_as(ty: ValueType, text: &str) -> Option<Value> {
        let t = text.trim();
        match ty {
            ValueType::Uint256 => parse_u256(t).map(Value::Uint),
            ValueType::Int256 => I256::from_str_radix(t, 10).ok().map(Value::Int),
            ValueType::Bool => match t {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => None,
            },
            ValueType::Address => t.parse().ok().map(Value::Address),
            ValueType::String => Some(Value::Str(text.to_string())),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Uint(v) => serde_json::Value::String(v.to_string()),
            Value::Int(v) => serde_json::Value::String(v.to_string()),
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Address(a) => serde_json::Value::String(a.to_checksum()),
            Value::Str(s) => serde_json::Value::String(s.clone()),
        }
    }

    /// Converts a JSON argument to a value of the declared type. Integers may
    /// be given as JSON numbers or as decimal strings.
    pub fn from_json(ty: ValueType, json: &serde_json::Value) -> Option<Value> {
        match (ty, json) {
            (ValueType::Uint256, serde_json::Value::Number(n)) => {
                n.as_u64().map(|v| Value::Uint(U256::from(v)))
            }
            (ValueType::Int256, serde_json::Value::Number(n)) => {
                n.as_i64().map(|v| Value::Int(I256::from(v)))
            }
            (ValueType::Bool, serde_json::Value::Bool(b)) => Some(Value::Bool(*b)),
            (ValueType::String, serde_json::Value::String(s)) => Some(Value::Str(s.clone())),
            (_, serde_json::Value::String(s)) if ty != ValueType::String => Value::parse_as(ty, s),
            _ => None,
        }
    }
}

pub fn parse_u256(t: &str) -> Option<U256> {
    if let Some(hex) = t.strip_prefix("0x") {
        if hex.is_empty() {
            return None;
        }
        U256::from_str_radix(hex, 16).ok()
    } else {
        if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        U256::from_str_radix(t, 10).ok()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Uint(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Address(a) => write!(f, "{a}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}
