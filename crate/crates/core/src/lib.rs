//! Compiler, interpreter, and conformance harness for blockchain-backed
//! business process models.

pub mod ir;
pub mod bpmn;
pub mod registry;
pub mod marking;
pub mod interp;
pub mod codegen;
pub mod fixture;
pub mod harness;
