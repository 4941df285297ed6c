//! Numerical toolkit for the q-middle convolution of linear q-difference systems,
//! built around the 2x2 Jimbo–Sakai linear problem of q-Painlevé VI.
//!
//! The crate provides:
//! - [`numerics`]: q-Pochhammer symbols and the integral kernel `P_lambda(x, s)`
//! - [`qpvi`]: the Jimbo–Sakai parameter tuple, the quadratic matrix `A(x)`, its
//!   partial-fraction form `B(x)`, kernel vectors, and scalar three-term reduction
//! - [`qmc`]: the q-convolution and q-middle convolution (generic quotient and the
//!   closed 2x2 forms on both eigenvalue branches), plus the induced parameter maps
//! - [`jackson`]: lattice solutions of q-difference systems, truncated Jackson
//!   integrals, and the integral transforms with residual reporting
//! - [`weyl`]: the affine Weyl group W(D5^(1)) acting on the Kajiwara–Noumi–Yamada
//!   parameters, the dictionary to Jimbo–Sakai coordinates, and the verification
//!   that the q-middle convolution equals an explicit Weyl word
//! - [`qheun`]: the q-Heun equation, its embedding as a specialized scalar
//!   reduction, and the induced integral transformation
//! - [`verify`]: seeded randomized verification campaigns with JSON reports
//! - [`sampling`]: reproducible random draws of constrained parameter tuples

pub mod jackson;
pub mod linalg;
pub mod numerics;
pub mod qheun;
pub mod qmc;
pub mod qpvi;
pub mod sampling;
pub mod scalar;
pub mod verify;
pub mod weyl;

pub use jackson::{LatticeFunction, TransformReport};
pub use numerics::{p_lambda, q_pochhammer, PochhammerOrder, Truncation};
pub use qheun::{QHeunEquation, QHeunParams};
pub use qmc::{Branch, ConvolutionTuple, ReducedSystem, SubspacePair};
pub use qpvi::{MatrixPolynomial, PartialFractionSystem, QPVIParams, ScalarThreeTerm};
pub use scalar::{Real, C, ZETA};
pub use verify::{CampaignConfig, CampaignReport};
pub use weyl::{KNYParams, WeylWord};
