//! Polynomial least squares and the nested-model tests built on it.

use serde::{Deserialize, Serialize};

use super::special::{f_sf, t_sf};
use crate::error::{GeomError, Result};
use crate::util::serde_f64;

/// Residual sum of squares below which a fit is treated as exact.
pub const PERFECT_FIT_SS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub degree: usize,
    /// Ascending order: `a0, a1, a2, ...`.
    pub coefficients: Vec<f64>,
    pub ss_res: f64,
    pub r_squared: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        eval_poly(&self.coefficients, x)
    }
}

/// Horner evaluation of ascending-order coefficients.
pub fn eval_poly(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Least-squares polynomial of the given degree (1–3).
///
/// The abscissa is standardized before forming the normal equations, which are
/// solved by Gaussian elimination with partial pivoting; the coefficients are
/// then expanded back into powers of the raw `x`.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if !(1..=3).contains(&degree) {
        return Err(GeomError::DegenerateInput(format!(
            "polynomial degree {degree} outside 1..=3"
        )));
    }
    if xs.len() != ys.len() {
        return Err(GeomError::Consistency(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < degree + 2 {
        return Err(GeomError::InsufficientData(format!(
            "degree-{degree} fit needs at least {} points, got {n}",
            degree + 2
        )));
    }
    let shift = xs.iter().sum::<f64>() / n as f64;
    let scale = (xs.iter().map(|x| (x - shift).powi(2)).sum::<f64>() / n as f64).sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(GeomError::DegenerateInput(
            "all abscissae are identical".into(),
        ));
    }
    let zs: Vec<f64> = xs.iter().map(|x| (x - shift) / scale).collect();

    let p = degree + 1;
    let mut ata = vec![vec![0.0; p]; p];
    let mut aty = vec![0.0; p];
    for (&z, &y) in zs.iter().zip(ys) {
        let mut powers = [1.0; 4];
        for k in 1..p {
            powers[k] = powers[k - 1] * z;
        }
        for r in 0..p {
            aty[r] += powers[r] * y;
            for c in 0..p {
                ata[r][c] += powers[r] * powers[c];
            }
        }
    }
    let beta = solve_dense(ata, aty).ok_or_else(|| {
        GeomError::DegenerateInput(format!(
            "rank-deficient design for degree {degree} (fewer distinct abscissae than coefficients)"
        ))
    })?;

    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&z, &y) in zs.iter().zip(ys) {
        let r = y - eval_poly(&beta, z);
        ss_res += r * r;
        ss_tot += (y - mean_y).powi(2);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };

    Ok(PolyFit {
        degree,
        coefficients: unstandardize(&beta, shift, scale),
        ss_res,
        r_squared,
    })
}

/// Expands `Σ b_k ((x - shift)/scale)^k` into ascending powers of `x`.
fn unstandardize(beta: &[f64], shift: f64, scale: f64) -> Vec<f64> {
    let p = beta.len();
    let mut out = vec![0.0; p];
    for (k, &b) in beta.iter().enumerate() {
        let bk = b / scale.powi(k as i32);
        // (x - shift)^k = Σ_j C(k,j) x^j (-shift)^(k-j)
        let mut binom = 1.0;
        for j in 0..=k {
            if j > 0 {
                binom = binom * (k - j + 1) as f64 / j as f64;
            }
            out[j] += bk * binom * (-shift).powi((k - j) as i32);
        }
    }
    out
}

/// Gaussian elimination with partial pivoting. Returns `None` for a singular system.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..n {
                    a[row][c] -= factor * a[col][c];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTestResult {
    #[serde(with = "serde_f64")]
    pub f_stat: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
    /// Set when the richer model's residual vanished; `f_stat` is then `+inf`.
    pub perfect_fit: bool,
}

/// Nested F-test of a linear against a quadratic fit on `n` points,
/// with `(1, n - 3)` degrees of freedom.
pub fn nested_f_test(ss_lin: f64, ss_quad: f64, n: usize) -> Result<FTestResult> {
    if n < 4 {
        return Err(GeomError::InsufficientData(format!(
            "nested F-test needs n >= 4, got {n}"
        )));
    }
    if !(ss_lin >= 0.0 && ss_quad >= 0.0) {
        return Err(GeomError::DegenerateInput(format!(
            "residual sums must be non-negative (lin {ss_lin}, quad {ss_quad})"
        )));
    }
    let eps = 1e-9 * ss_lin.max(ss_quad).max(1e-300);
    if ss_quad > ss_lin + eps {
        return Err(GeomError::DegenerateInput(format!(
            "nested quadratic residual {ss_quad} exceeds linear residual {ss_lin}"
        )));
    }
    let df_den = n - 3;
    let numerator = (ss_lin - ss_quad).max(0.0);
    if ss_quad < PERFECT_FIT_SS && numerator > 0.0 {
        return Ok(FTestResult {
            f_stat: f64::INFINITY,
            p_value: 0.0,
            df_num: 1,
            df_den,
            perfect_fit: true,
        });
    }
    if numerator == 0.0 {
        return Ok(FTestResult {
            f_stat: 0.0,
            p_value: 1.0,
            df_num: 1,
            df_den,
            perfect_fit: false,
        });
    }
    let f_stat = numerator / (ss_quad / df_den as f64);
    Ok(FTestResult {
        f_stat,
        p_value: f_sf(f_stat, 1.0, df_den as f64),
        df_num: 1,
        df_den,
        perfect_fit: false,
    })
}

/// One-sided one-sample t-test of `H0: mean <= 0`. Returns `(t, p)`.
pub fn t_test_one_sided(values: &[f64]) -> Result<(f64, f64)> {
    let m = values.len();
    if m < 2 {
        return Err(GeomError::InsufficientData(format!(
            "t-test needs at least 2 values, got {m}"
        )));
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    if !(var > 0.0) {
        return Err(GeomError::DegenerateInput(
            "t-test sample has zero variance".into(),
        ));
    }
    let t = mean / (var.sqrt() / (m as f64).sqrt());
    Ok((t, t_sf(t, (m - 1) as f64)))
}

/// Gaussian-likelihood AIC: `n ln(ss/n) + 2k`.
pub fn aic(ss_res: f64, n: usize, n_params: usize) -> Result<f64> {
    if n == 0 {
        return Err(GeomError::InsufficientData("AIC needs n > 0".into()));
    }
    if !(ss_res > 0.0) {
        return Err(GeomError::DegenerateInput(format!(
            "AIC undefined for residual sum {ss_res}"
        )));
    }
    let n = n as f64;
    Ok(n * (ss_res / n).ln() + 2.0 * n_params as f64)
}
