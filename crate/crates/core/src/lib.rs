//! Piecewise-linear representation theory of finite groups.
//!
//! Decomposes permutation representations of finite abelian groups into
//! simple real representations, measures how piecewise-linear activations
//! couple the simples, and trains small equivariant networks whose weights
//! live in the orbit basis.

pub mod linalg;
pub mod groups;
pub mod reps;
pub mod plmaps;
pub mod graphs;
pub mod eqnn;
pub mod verify;
