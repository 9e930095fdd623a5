//! Derivation spaces of finite-dimensional tracial *-algebras, their von
//! Neumann dimensions, and the behaviour of both under crossed products by
//! finite groups.
//!
//! Algebras are stored on a basis through structure constants
//! ([`FDAlgebra`]); every construction (opposites, tensor products, crossed
//! products, group algebras, multi-matrix algebras) returns another
//! `FDAlgebra`. Derivations into the coarse bimodule `L²(A ⊗ A°)` are found
//! by solving the Leibniz system on all basis pairs, and dimensions over
//! `A ⊗ A°` are read off from the trace of the projection onto the image of
//! the evaluation map.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod constructions;
pub mod derivations;
pub mod error;
pub mod group;
pub mod linalg;
pub mod report;
pub mod vndim;

pub use algebra::{AlgebraRef, AntilinearOp, Axiom, FDAlgebra, GnsSpace, ValidationReport};
pub use constructions::{
    group_algebra, multimatrix, opposite, tensor, Block, CrossedProduct, GroupAction, MatrixUnits,
};
pub use error::{Error, Result};
pub use group::{characters, Character, FiniteGroup, Subgroup};
pub use linalg::{CMat, CVec, C64};
