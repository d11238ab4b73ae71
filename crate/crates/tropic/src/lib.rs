//! Exact superabundancy, obstruction and well-spacedness analysis for
//! parametrized tropical curves.

pub mod curve_model;
pub mod enumeration_index;
pub mod kuranishi_leading;
pub mod exact_linalg;
pub mod moduli_space;
pub mod obstruction_space;
pub mod cli_io;
pub mod well_spacedness;
