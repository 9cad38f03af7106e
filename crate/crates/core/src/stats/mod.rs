//! Numerical kernel: special functions, polynomial fits and nested tests, PCA,
//! percentiles.

pub mod pca;
pub mod regression;
pub mod special;

pub use pca::{pca_top, pca_top_with, spectrum, Pca};
pub use regression::{aic, eval_poly, nested_f_test, polyfit, t_test_one_sided, FTestResult, PolyFit, PERFECT_FIT_SS};
pub use special::{f_sf, inc_beta, ln_gamma, t_sf};

use crate::error::{GeomError, Result};

/// Linear-interpolation percentile: position `q/100 · (n-1)` in the sorted values.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

/// [`percentile`] on input already sorted ascending.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(GeomError::InsufficientData("percentile of an empty sample".into()));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(GeomError::DegenerateInput(format!("percentile {q} outside [0, 100]")));
    }
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}
