//! Text formats: `.model`, `.strategy`, `.dag`, loss tables and CI statements.

pub mod ci;
pub mod diagram;
pub mod lex;
pub mod loss;
pub mod model;
pub mod strategy;

pub use ci::{parse_ci, parse_premises};
pub use diagram::{diagram_to_source, parse_diagram};
pub use loss::parse_loss;
pub use model::{model_to_source, parse_model};
pub use strategy::{parse_strategy, strategy_to_source};
