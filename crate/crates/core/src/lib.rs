pub mod cli;
pub mod diagram;
pub mod engine;
pub mod error;
pub mod invariants;
pub mod io;
pub mod lattice;
pub mod series;
pub mod tropical;
