//! Delay-coordinate embeddings of dynamical systems, nearest-neighbour
//! predictability estimates and information-dimension estimators.

pub mod cli;
pub mod dimension;
pub mod dynamics;
pub mod embedding;
pub mod manifold;
pub mod neighbors;
pub mod observables;
pub mod predictability;
