//! Radial information gradient λ_r.
//!
//! Token norms are split into equal-width bins; bins with too few members are
//! dropped, and mean self-information per bin is fitted against mean norm per
//! bin with polynomials of degree 1, 2 and 3. λ_r is the quadratic
//! coefficient; a nested F-test on `(1, n - 3)` degrees of freedom, with `n` the
//! number of surviving bins, decides whether the curvature is significant.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::stats::{aic, nested_f_test, polyfit, FTestResult, PolyFit, PERFECT_FIT_SS};
use crate::store::EmbeddingStore;
use crate::util::{fmt_f64, serde_f64, write_atomic};

pub const DEFAULT_BINS: usize = 40;
pub const DEFAULT_MIN_BIN_COUNT: usize = 10;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
pub const CURVE_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialBin {
    pub lower: f64,
    pub upper: f64,
    pub mean_norm: f64,
    pub mean_info: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialResult {
    pub bins: Vec<RadialBin>,
    pub fit_lin: PolyFit,
    pub fit_quad: PolyFit,
    /// Diagnostic only; never used for significance.
    pub fit_cubic: PolyFit,
    pub lambda_r: f64,
    pub f_test: FTestResult,
    #[serde(with = "serde_f64")]
    pub aic_lin: f64,
    #[serde(with = "serde_f64")]
    pub aic_quad: f64,
    pub significant: bool,
}

/// Equal-width binning of `(norm, info)` pairs over `[min(norm), max(norm)]`.
pub fn bin_profile(norms: &[f64], infos: &[f64], n_bins: usize, min_count: usize) -> Result<Vec<RadialBin>> {
    if norms.len() != infos.len() {
        return Err(GeomError::Consistency(format!(
            "{} norms but {} information values",
            norms.len(),
            infos.len()
        )));
    }
    if n_bins == 0 || norms.len() < n_bins {
        return Err(GeomError::InsufficientData(format!(
            "{} tokens cannot fill {n_bins} bins",
            norms.len()
        )));
    }
    if norms.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(GeomError::Data("norms must be finite and positive".into()));
    }
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    if !(width > 0.0) {
        return Err(GeomError::InsufficientData("all norms are equal; nothing to bin".into()));
    }

    let mut sum_norm = vec![0.0; n_bins];
    let mut sum_info = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for (&r, &info) in norms.iter().zip(infos) {
        let b = (((r - lo) / width) as usize).min(n_bins - 1);
        sum_norm[b] += r;
        sum_info[b] += info;
        count[b] += 1;
    }
    let bins: Vec<RadialBin> = (0..n_bins)
        .filter(|&b| count[b] >= min_count.max(1))
        .map(|b| RadialBin {
            lower: lo + b as f64 * width,
            upper: if b + 1 == n_bins { hi } else { lo + (b + 1) as f64 * width },
            mean_norm: sum_norm[b] / count[b] as f64,
            mean_info: sum_info[b] / count[b] as f64,
            count: count[b],
        })
        .collect();
    if bins.len() < 4 {
        return Err(GeomError::InsufficientData(format!(
            "only {} bins hold at least {min_count} tokens; the F-test needs 4",
            bins.len()
        )));
    }
    Ok(bins)
}

/// Fits and tests the radial profile of raw `(norm, info)` pairs.
pub fn radial_profile(norms: &[f64], infos: &[f64], n_bins: usize, min_count: usize) -> Result<RadialResult> {
    let bins = bin_profile(norms, infos, n_bins, min_count)?;
    fit_bins(bins)
}

/// λ_r for a store with the default 40 bins and 10-token minimum.
pub fn compute_lambda_r(store: &EmbeddingStore) -> Result<RadialResult> {
    compute_lambda_r_with(store, DEFAULT_BINS, DEFAULT_MIN_BIN_COUNT)
}

pub fn compute_lambda_r_with(store: &EmbeddingStore, n_bins: usize, min_count: usize) -> Result<RadialResult> {
    radial_profile(&store.norms(), &store.self_information(), n_bins, min_count)
}

fn fit_bins(bins: Vec<RadialBin>) -> Result<RadialResult> {
    let xs: Vec<f64> = bins.iter().map(|b| b.mean_norm).collect();
    let ys: Vec<f64> = bins.iter().map(|b| b.mean_info).collect();
    let n = bins.len();
    let fit_lin = polyfit(&xs, &ys, 1)?;
    let fit_quad = polyfit(&xs, &ys, 2)?;
    // a cubic needs 5 points; with exactly 4 bins fall back to an exact fit
    let fit_cubic = if n >= 5 {
        polyfit(&xs, &ys, 3)?
    } else {
        PolyFit {
            degree: 3,
            coefficients: {
                let mut c = fit_quad.coefficients.clone();
                c.push(0.0);
                c
            },
            ss_res: fit_quad.ss_res,
            r_squared: fit_quad.r_squared,
        }
    };
    // the nested models can differ by rounding only; never let the quadratic look worse
    let ss_quad = fit_quad.ss_res.min(fit_lin.ss_res);
    let f_test = nested_f_test(fit_lin.ss_res, ss_quad, n)?;
    let aic_or_sentinel = |ss: f64, k: usize| {
        if ss < PERFECT_FIT_SS {
            Ok(f64::NEG_INFINITY)
        } else {
            aic(ss, n, k)
        }
    };
    let aic_lin = aic_or_sentinel(fit_lin.ss_res, 2)?;
    let aic_quad = aic_or_sentinel(fit_quad.ss_res, 3)?;
    let lambda_r = fit_quad.coefficients[2];
    Ok(RadialResult {
        significant: f_test.p_value < SIGNIFICANCE_LEVEL,
        bins,
        fit_lin,
        fit_quad,
        fit_cubic,
        lambda_r,
        f_test,
        aic_lin,
        aic_quad,
    })
}

/// Writes the per-bin scatter with fitted values and residuals to `bins_path`,
/// and the three fitted curves sampled at 200 evenly spaced norms (from the
/// first to the last bin mean) to `curve_path`.
pub fn emit_radial_plotdata(result: &RadialResult, bins_path: &Path, curve_path: &Path) -> Result<()> {
    let mut bins_csv = String::from("bin_mean_norm,bin_mean_info,count,fit_lin,fit_quad,fit_cubic,resid_lin,resid_quad\n");
    for b in &result.bins {
        let lin = result.fit_lin.eval(b.mean_norm);
        let quad = result.fit_quad.eval(b.mean_norm);
        let cubic = result.fit_cubic.eval(b.mean_norm);
        bins_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_f64(b.mean_norm),
            fmt_f64(b.mean_info),
            b.count,
            fmt_f64(lin),
            fmt_f64(quad),
            fmt_f64(cubic),
            fmt_f64(b.mean_info - lin),
            fmt_f64(b.mean_info - quad),
        ));
    }
    let first = result.bins.first().map_or(0.0, |b| b.mean_norm);
    let last = result.bins.last().map_or(0.0, |b| b.mean_norm);
    let mut curve_csv = String::from("norm,fit_lin,fit_quad,fit_cubic\n");
    for i in 0..CURVE_SAMPLES {
        let x = if i + 1 == CURVE_SAMPLES {
            last
        } else {
            first + (last - first) * i as f64 / (CURVE_SAMPLES - 1) as f64
        };
        curve_csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(x),
            fmt_f64(result.fit_lin.eval(x)),
            fmt_f64(result.fit_quad.eval(x)),
            fmt_f64(result.fit_cubic.eval(x)),
        ));
    }
    write_atomic(bins_path, bins_csv.as_bytes())?;
    write_atomic(curve_path, curve_csv.as_bytes())
}
