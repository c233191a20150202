//! Exact-arithmetic graph complexes decorated by cyclic operads.
//!
//! The library builds the directed, truncated directed, and undirected
//! graph complexes over the rationals, computes their homology per genus
//! and homological degree, and provides an independent Chevalley-Eilenberg
//! oracle (convolution Lie algebras over a graded symplectic space with a
//! general-linear coinvariant quotient) against which the graph side can
//! be verified.
//!
//! All arithmetic is exact; no floating point is used anywhere.

pub mod cechains;
pub mod complexes;
pub mod graphs;
pub mod linalg;
pub mod operad;

pub use linalg::{Rat, SparseMatrix};
