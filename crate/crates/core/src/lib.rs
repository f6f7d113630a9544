//! Certified numerics for entanglement under non-entangling operations:
//! tensor algebra on multipartite states, PPT/product-state brackets on the
//! separable set, entanglement measures, singlet-fraction and Stein-type
//! hypothesis-testing functionals, and measure-and-prepare protocols.

pub mod error;
pub mod hypotest;
pub mod measures;
pub mod protocols;
pub mod sep_geometry;
pub mod states;
pub mod tensor_core;

pub use error::{Error, Result, StateCheck};
pub use measures::{Bracket, Exactness};
pub use sep_geometry::{SeparableDecomposition, SepWitness, SolveOptions};
pub use tensor_core::{DimProfile, HermitianOp, MultiState, Parties};
