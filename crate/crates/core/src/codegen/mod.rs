//! Solidity source generation.

use std::fmt::Write as _;

use crate::ir::{Address, ProcessModel, Value};
use crate::marking::MarkingAutomaton;
use crate::registry::RegistrySpec;

mod expr;
mod process;
mod records;
mod token;

pub use process::{gen_process, interface_contract_name, task_function_name};
pub use records::gen_nonfungible;
pub use token::gen_fungible;

pub const PRAGMA_VERSION: &str = "^0.5.8";
pub const PROCESS_FILE_NAME: &str = "ProcessFactory.sol";

/// One emitted `.sol` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub file_name: String,
    pub pragma_version: String,
    pub contracts: Vec<String>,
    pub rendered_text: String,
}

impl SourceUnit {
    pub(crate) fn new(file_name: String, contracts: Vec<String>) -> SourceUnit {
        let mut text = format!("pragma solidity {PRAGMA_VERSION};\n");
        for c in &contracts {
            text.push('\n');
            text.push_str(c);
        }
        SourceUnit { file_name, pragma_version: PRAGMA_VERSION.to_string(), contracts, rendered_text: text }
    }
}

pub fn gen_registry(spec: &RegistrySpec) -> SourceUnit {
    match spec {
        RegistrySpec::Fungible(f) => gen_fungible(f),
        RegistrySpec::NonFungible(n) => gen_nonfungible(n),
    }
}

/// Every unit for a model: one per registry spec, then the process file.
pub fn gen_all(model: &ProcessModel, a: &MarkingAutomaton, specs: &[RegistrySpec]) -> Vec<SourceUnit> {
    let mut out: Vec<SourceUnit> = specs.iter().map(gen_registry).collect();
    out.push(gen_process(model, a));
    out
}

/// Indented line writer.
pub(crate) struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    pub(crate) fn new() -> Writer {
        Writer { out: String::new(), depth: 0 }
    }

    pub(crate) fn line(&mut self, s: impl AsRef<str>) {
        let s = s.as_ref();
        if s.is_empty() {
            self.out.push('\n');
            return;
        }
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        let _ = writeln!(self.out, "{s}");
    }

    pub(crate) fn open(&mut self, s: impl AsRef<str>) {
        self.line(s);
        self.depth += 1;
    }

    pub(crate) fn close(&mut self, s: impl AsRef<str>) {
        self.depth -= 1;
        self.line(s);
    }

    pub(crate) fn close_open(&mut self, s: impl AsRef<str>) {
        self.depth -= 1;
        self.line(s);
        self.depth += 1;
    }

    pub(crate) fn depth_hint(&mut self, depth: usize) {
        self.depth = depth;
    }

    pub(crate) fn blank(&mut self) {
        if !self.out.ends_with("{\n") && !self.out.ends_with("\n\n") {
            self.out.push('\n');
        }
    }

    pub(crate) fn finish(self) -> String {
        self.out
    }
}

pub(crate) fn string_literal(s: &str) -> String {
    let mut o = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => o.push_str("\\\""),
            '\\' => o.push_str("\\\\"),
            '\n' => o.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(o, "\\x{:02x}", c as u32);
            }
            c if c.is_ascii() => o.push(c),
            c => {
                let mut buf = [0u8; 4];
                for b in c.encode_utf8(&mut buf).bytes() {
                    let _ = write!(o, "\\x{b:02x}");
                }
            }
        }
    }
    o.push('"');
    o
}

pub(crate) fn address_literal(a: Address) -> String {
    if a.is_zero() {
        "address(0)".to_string()
    } else {
        a.to_checksum()
    }
}

pub(crate) fn value_literal(v: &Value) -> String {
    match v {
        Value::Uint(u) => u.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Address(a) => address_literal(*a),
        Value::Str(s) => string_literal(s),
    }
}

/// Identifier safe for Solidity: non-alphanumerics become `_`, and a
/// leading digit gets a `_` prefix.
pub(crate) fn sol_ident(s: &str) -> String {
    let mut o: String = s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    if o.is_empty() || o.starts_with(|c: char| c.is_ascii_digit()) {
        o.insert(0, '_');
    }
    o
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Loc {
    Stack,
    Memory,
    Calldata,
}

/// Type name with the data location a string needs in that position.
pub(crate) fn sol_type(t: crate::ir::ValueType, loc: Loc) -> String {
    let base = t.name();
    match (t, loc) {
        (crate::ir::ValueType::String, Loc::Memory) => format!("{base} memory"),
        (crate::ir::ValueType::String, Loc::Calldata) => format!("{base} calldata"),
        _ => base.to_string(),
    }
}

#[cfg(test)]
mod tests;
