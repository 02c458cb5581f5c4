pub mod action;
pub mod apartment;
pub mod dichotomy;
pub mod error;
pub mod exact;
pub mod field;
pub mod forge;
pub mod lattice;
pub mod laurent;
pub mod polygon;
