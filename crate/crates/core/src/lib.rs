//! Workbench for deformation quantization over the dual of a finite-dimensional
//! Lie algebra.
//!
//! Everything is organized around a [`liealg::LieAlgebra`] given by structure
//! constants. On top of it the crate provides
//!
//! * exact arithmetic in the free Lie algebra on two generators, including the
//!   Baker-Campbell-Hausdorff series ([`freelie`]),
//! * the symmetric algebra, the enveloping algebra with PBW normal ordering,
//!   and the star product obtained by transporting the enveloping product
//!   through the Duflo isomorphism ([`envelope`]),
//! * admissible graphs, their bidifferential operators for a linear Poisson
//!   bivector, and Monte-Carlo estimates of the corresponding configuration
//!   space weights ([`graphs`], [`weights`]),
//! * an order-by-order solver and checker for the Kashiwara-Vergne equations
//!   together with the homotopy formula relating the star product to the
//!   commutative product ([`kv`]).
//!
//! All symbolic computations use exact rational coefficients; floating point
//! only appears inside the Monte-Carlo integrators.

pub mod envelope;
pub mod freelie;
pub mod graphs;
pub mod kv;
pub mod liealg;
pub mod poly;
pub mod rat;
pub mod weights;

pub use poly::{Monomial, SymPoly};
pub use rat::Rat;
