//! Bounded symbolic verification of V2X pseudonym-revocation protocols.

pub mod adversary;
pub mod cli;
pub mod explorer;
pub mod formula;
pub mod goals;
pub mod msc;
pub mod protocols;
pub mod report;
pub mod state;
pub mod term;
