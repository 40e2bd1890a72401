//! Khovanov complexes over `Z[s,t]`, local Reidemeister maps, and a checker
//! that evaluates every identity between them on all planar closures.

pub mod cli;
pub mod coeffs;
pub mod complex;
pub mod diagram;
pub mod homology;
pub mod moves;
pub mod verify;
