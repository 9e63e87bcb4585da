//! Spectral laboratory for the fourth-order singular equation
//! `P_{g,ψ} u = A/u^p ± B u^q` driven by the Paneitz-Branson operator on an
//! Einstein background.

pub mod cli;
pub mod conditions;
pub mod error;
pub mod geometry;
pub mod operator;
pub mod solvers;
pub mod spectral_analysis;

pub use error::{Error, Result};
