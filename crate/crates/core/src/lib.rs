//! Numerical toolkit for no-cloning fidelity bounds: designs, remote state
//! preparation, no-signalling checks and reference cloning maps.

pub mod bounds;
pub mod cloners;
pub mod ensembles;
pub mod error;
pub mod numerics;
pub mod par;
pub mod protocol;
pub mod schurweyl;
pub mod symspace;

pub use error::{NclError, Result};
