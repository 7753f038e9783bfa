//! Minimal dense-tensor engine with tape-based reverse-mode differentiation.
//!
//! Everything is 64-bit: desk scale makes speed secondary to testability,
//! and the finite-difference oracle needs double precision. Tapes are
//! single-writer; distinct rollouts use distinct tapes and may run
//! concurrently.

mod tape;
mod tensor;

pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;

use crate::rng;
use rand::Rng as _;

/// Result of a finite-difference gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub coords_checked: usize,
    pub max_rel_err: f64,
    /// (parameter index, flat coordinate) of the worst coordinate.
    pub worst_coord: Option<(usize, usize)>,
}

/// Compares analytic gradients against central finite differences on a
/// random subsample of parameter coordinates.
///
/// `f` evaluates the model at the given parameters and returns the scalar
/// loss together with its analytic gradient per parameter tensor. The
/// relative error of a coordinate is
/// `|analytic - fd| / (|analytic| + 1e-8)` with `fd` the central difference
/// at step `h`.
pub fn check_gradients<F>(
    mut f: F,
    params: &mut [Tensor],
    min_coords: usize,
    h: f64,
    seed: u64,
) -> GradCheckReport
where
    F: FnMut(&[Tensor]) -> (f64, Vec<Tensor>),
{
    let total: usize = params.iter().map(|p| p.numel()).sum();
    let n_checks = min_coords.min(total);
    let (_, analytic) = f(params);
    assert_eq!(analytic.len(), params.len(), "gradient count mismatch");

    let mut rng = rng::seeded(seed);
    let mut picked = std::collections::HashSet::new();
    let mut max_rel_err = 0.0f64;
    let mut worst = None;
    while picked.len() < n_checks {
        let flat = rng.random_range(0..total);
        if !picked.insert(flat) {
            continue;
        }
        // Locate (tensor, coordinate) for the flat index.
        let mut rem = flat;
        let mut pi = 0;
        while rem >= params[pi].numel() {
            rem -= params[pi].numel();
            pi += 1;
        }
        let orig = params[pi].data()[rem];
        params[pi].data_mut()[rem] = orig + h;
        let (loss_plus, _) = f(params);
        params[pi].data_mut()[rem] = orig - h;
        let (loss_minus, _) = f(params);
        params[pi].data_mut()[rem] = orig;

        let fd = (loss_plus - loss_minus) / (2.0 * h);
        let a = analytic[pi].data()[rem];
        let rel = (a - fd).abs() / (a.abs() + 1e-8);
        if rel > max_rel_err {
            max_rel_err = rel;
            worst = Some((pi, rem));
        }
    }
    GradCheckReport {
        coords_checked: n_checks,
        max_rel_err,
        worst_coord: worst,
    }
}
