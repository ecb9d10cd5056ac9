//! Flat hyper-Kähler geometry on semidirect products `ℝ^s × (ℝ^k ⋉ ℍ^q)`.
//!
//! The crate builds the metric Lie algebra and group for a twist matrix θ,
//! checks the hyper-Kähler axioms numerically, evaluates the torus moment
//! map, and assembles the induced metric on the hyper-Kähler quotient in
//! monopole-type coordinates. A finite-difference tensor calculus verifies
//! flatness upstairs and Ricci-flatness of the quotient, and a classifier
//! decides monomial equivalence of twist matrices.
//!
//! Modules mirror the pipeline:
//! * [`quat`]: quaternion arithmetic, the right-multiplication complex
//!   structures, and monopole coordinates on ℍ.
//! * [`spec`]: group data (`s`, `k`, fiber size, θ) plus serialization.
//! * [`liealg`]: brackets, Levi-Civita data, curvature, Nijenhuis tensors,
//!   Kähler forms, and the axiom report for a spec.
//! * [`group`]: group operations, the isotropic subgroup action, and the
//!   torus action.
//! * [`moment`]: the moment map in its abstract, quaternionic, and
//!   real-coordinate forms, with zero-level-set parameterization.
//! * [`quotient`]: Dirac potentials, the quotient metric in monopole-type
//!   block form, the reduction oracle, and the named presets.
//! * [`curvature`]: finite-difference Christoffel/Riemann/Ricci/sectional
//!   machinery over arbitrary metric fields.
//! * [`classify`]: equivalence invariants and the monomial-equivalence
//!   search.

pub mod classify;
pub mod curvature;
pub mod error;
pub mod group;
pub mod liealg;
pub mod moment;
pub mod parallel;
pub mod quat;
pub mod quotient;
pub mod spec;

pub use error::HkError;
pub type Result<T> = std::result::Result<T, HkError>;
