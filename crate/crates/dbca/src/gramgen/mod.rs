//! Unification grammar engine: feature structures, logical forms, and the
//! generation pipeline (derivation, inference closure, resolution).

pub mod engine;
pub mod features;
pub mod logic;
pub mod sparql;
