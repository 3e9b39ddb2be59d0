//! Exact discrete engine for sequential decision strategies evaluated across
//! observational and interventional regimes.

pub mod ci;
pub mod cli;
pub mod conditions;
pub mod diagram;
pub mod dsl;
pub mod error;
pub mod fixtures;
pub mod grecursion;
pub mod joint;
pub mod model;
pub mod random;
pub mod rational;
pub mod strategy;

pub use error::{Error, Result, Span};
