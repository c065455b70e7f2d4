//! Executable models of five smart-card password authentication protocols,
//! the attacks against them, and a requirement verdict matrix.

pub mod cli;
pub mod crypto;
pub mod evaluation;
pub mod fixtures;
pub mod guessing;
pub mod proto;
pub mod runner;
pub mod simnet;
pub mod wire;
