//! Finite models of spaces of homogeneous type.
//!
//! A [`space::FiniteSpace`] carries a quasi-metric and point masses. On top
//! of it the crate builds dyadic systems and adjacent systems, Muckenhoupt
//! weights, weighted oscillation functionals, a Haar layer, sparse families
//! and their Bloom-type operators, maximal operators with a constructive
//! sparse domination of the maximal commutator, and weighted operator norms
//! with a finite-rank plus small-tail splitting of sparse commutators.

pub mod dyadic;
pub mod error;
pub mod haar;
pub mod linalg;
pub mod maximal;
pub mod norms;
pub mod oscillation;
pub mod space;
pub mod sparse;
pub mod weights;

pub use error::{Error, Result};
