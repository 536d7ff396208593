//! Combinatorial and numerical rigidity of bi-coloured frameworks.
//!
//! Graphs carry two edge colours, each colour class a simple graph. The crate
//! certifies `(2,l)`-sparsity with a pebble game, builds and reduces class
//! members with labelled construction moves, assembles rigidity matrices for
//! several double-distance contexts and decides minimal rigidity numerically.

pub mod contexts;
pub mod error;
pub mod graph;
pub mod harness;
pub mod moves;
pub mod numeric;
pub mod sparsity;

pub use contexts::{assemble, random_placement, trivial_flex_basis, ContextSpec, Placement, RigidityMatrix, RowLabel};
pub use error::{Error, Result};
pub use graph::{BiColouredGraph, Colour, ColouredEdge, Subgraph};
pub use moves::{find_reduction, random_construct, reduce_fully, ConstructionMove, ConstructionTrace, Reduction};
pub use numeric::{
    decide_rigidity, fd_check, maxwell_audit, nullspace_basis, numerical_rank, RankResult, RigidityStatus,
    RigidityVerdict,
};
pub use sparsity::{class_check, is_sparse, is_tight, SparsityClass, SparsityReport};
