//! Finite-dimensional Grassmann algebra, single-scale fermionic RG maps,
//! and decay-norm verification suites on desk-scale lattices.
//!
//! The crate builds an exactly testable model of the first integration
//! step of a many-fermion system: anticommuting fields on a small
//! spacetime lattice, Gaussian integration through Pfaffians, smooth
//! momentum shells around the Fermi surface with a counterterm-adjusted
//! first-scale covariance, and the saturating formal-power-series
//! bookkeeping in which all the decay norms live.
//!
//! Structural identities (Gaussian translation formulae, the source-shift
//! decomposition of the map, the semigroup law, the transform identities,
//! symmetry preservation) hold to rounding error on the lattice; analytic
//! bounds (splice, contraction, external-improving, convolution estimates)
//! are checked componentwise in the decay semiring on seeded instances.
//!
//! Start with the runnable examples:
//!
//! - `berezin_moments`: algebra, Pfaffians, moments, ordered products;
//! - `scale_partition`: the smooth shell partition and first-scale
//!   covariance;
//! - `rg_step`: one map application, its decomposition, Green's functions;
//! - `symmetry_audit`: the five symmetry predicates and preservation;
//! - `norm_bounds`: decay series, kernel norms and the product bounds;
//! - `counterterm_response`: counterterm validation and map response.
//!
//! The `verify` binary runs the full registry of verification suites and
//! writes deterministic JSON/CSV reports; see `verify --list`.

pub mod cmatrix;
pub mod decay;
pub mod error;
pub mod fourier;
pub mod grassmann;
pub mod kernel;
pub mod lattice;
pub mod model;
pub mod norms;
pub mod rg;
pub mod rng;
pub mod scales;
pub mod suites;
pub mod symmetry;

pub use error::{Error, Result};
