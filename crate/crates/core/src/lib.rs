//! Lower bounds, exact search and integer-programming models for the
//! unrestricted block relocation problem with distinct priorities.
//!
//! Stacks are zero-based in memory and one-based in every text format.

pub mod bench;
pub mod bounds;
pub mod config;
pub mod fixtures;
pub mod heuristics;
pub mod io;
pub mod iterate;
pub mod mip;
pub mod moves;
pub mod oracle;

pub use config::{Block, ConfigError, Configuration, HeightMode, EMPTY_STACK_PRIORITY};
pub use moves::{classify_relocation, validate_sequence, Move, MoveSequence, MoveType};
