//! Deterministic simulator and security calculators for a reputation-driven
//! sharded ledger.

pub mod adversary;
pub mod codec;
pub mod committee;
pub mod complexity;
pub mod consensus;
pub mod crypto;
pub mod ledger;
pub mod net;
pub mod prob;
pub mod reputation;
pub mod sim;
pub mod witness;
