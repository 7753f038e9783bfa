//! Desk-scale framework for training neural routing policies (TSP/CVRP) on
//! mixtures of node distributions with group distributionally robust
//! optimization.
//!
//! The crate is organized around six subsystems:
//!
//! - [`instances`]: spatial instance generators (uniform, explosion,
//!   implosion, expansion, cluster, grid), unit-square normalization, CVRP
//!   attributes, grouped datasets, and the x8 dihedral augmentation.
//! - [`autodiff`]: a minimal dense-tensor engine with tape-based
//!   reverse-mode differentiation (f64 everywhere, finite-difference
//!   checked).
//! - [`policy`]: the routing policy: CNN-over-KNN node embedding, a compact
//!   attention encoder, and an autoregressive masked decoder with POMO-style
//!   multi-start rollouts.
//! - [`trainer`]: interleaved SGD on policy parameters and exponentiated
//!   gradient ascent on group weights, plus ERM and supervised modes.
//! - [`solvers`]: classical references: exact Held-Karp for tiny TSP,
//!   nearest-neighbor + 2-opt, and a savings-style CVRP construction.
//! - [`bench`]: TSPLIB/CVRPLIB ingestion, the evaluation harness
//!   (overall / worst-group / atypical-group metrics), and report emission.

pub mod autodiff;
pub mod bench;
pub mod checkpoint;
pub mod error;
pub mod instances;
pub mod policy;
pub mod rng;
pub mod solvers;
pub mod tour;
pub mod trainer;

pub use error::{Error, Result};
