//! Composition operators with affine symbols on reproducing-kernel spaces of
//! entire functions: closed-form verdicts, operator-class tests, symbol
//! calculus and brute-force truncation oracles.

pub mod combinatorics;
pub mod engine;
pub mod error;
pub mod fock_basis;
pub mod matrix_core;
pub mod phi_model;
pub mod sample;
pub mod suite;
pub mod verify_oracle;

pub use error::{Error, Result};
