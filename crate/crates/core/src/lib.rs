//! Numerical toolkit for Steklov spectra, relative capacities and
//! isocapacitary constants on triangulated two-dimensional Riemannian
//! manifolds with boundary.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] builds and validates triangulations carrying a metric;
//! * [`fem`] assembles P1 stiffness and boundary-mass operators and solves
//!   harmonic-extension problems;
//! * [`spectral`] reduces to the boundary through a discrete
//!   Dirichlet-to-Neumann map and solves the Steklov and mixed
//!   Steklov-Dirichlet eigenproblems;
//! * [`capacity`] computes relative capacities, searches for the
//!   isocapacitary constant and checks the level-set capacity inequality;
//! * [`hyperbolic`] holds the closed-form and quadrature computations for
//!   hyperbolic collars and the hyperbolic half-disk;
//! * [`verify`] runs scenario files end to end and writes JSON reports.
//!
//! With the default `parallel` feature the data-parallel loops (candidate
//! sweeps, Schur-complement column solves, level sweeps, kernel sums) run on
//! rayon. Building with `--no-default-features` gives the sequential path;
//! results are identical either way because every reduction happens after an
//! order-preserving collect.

pub mod capacity;
pub mod error;
pub mod fem;
pub mod hyperbolic;
pub mod linalg;
pub mod mesh;
pub mod par;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
