//! Exact structure and parameter learning for Gaussian Bayesian networks
//! with equal noise variances.
//!
//! The pipeline estimates a sparse precision matrix by constrained ℓ1
//! minimization ([`clime`]), identifies terminal vertices one at a time from
//! precision/regression ratios and peels them off with rank-1 updates
//! ([`learn`]), then recovers parents and weights by least squares
//! ([`regression`]). [`model`] holds the population-level identities the
//! learner relies on and [`synth`] generates seeded random networks and data.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod clime;
pub mod error;
pub mod learn;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod regression;
pub mod rsaf;
pub mod synth;

pub use error::{Error, Result, Stage};
pub use learn::{learn_gbn, CausalOrder, LearnedGbn, LearnerConfig, Param};
pub use linalg::Matrix;
pub use model::{Dag, Gbn, PopulationMoments};
