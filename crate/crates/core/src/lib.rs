//! Equilibria of reputation games in which the long-run player can erase bad
//! records at a cost: the best-reply chain, the equilibrium path, belief
//! recursions, disclosure bounds, a population simulator and an independent
//! verifier.

pub mod belief;
pub mod cli;
pub mod disclosure;
pub mod error;
pub mod game;
pub mod oracle;
pub mod report;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
