//! Principal components of a row matrix.
//!
//! When there are at least as many rows as columns the `d × d` covariance is
//! diagonalized; otherwise the `m × m` Gram matrix of the centered rows is, and
//! the axes are mapped back through the data. Both routes give the same axes
//! up to sign; the sign is then fixed so each axis's largest-magnitude entry is
//! positive.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{GeomError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// `n_components` unit axes, each of length `d`.
    pub axes: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
    /// Variance along each axis (eigenvalues of the covariance, `1/(m-1)` scaling).
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

/// Top principal axes of `rows` after column-mean centering.
pub fn pca_top(rows: &[Vec<f64>], n_components: usize) -> Result<Pca> {
    pca_top_with(rows, n_components, true)
}

/// As [`pca_top`], optionally skipping the centering step.
pub fn pca_top_with(rows: &[Vec<f64>], n_components: usize, center: bool) -> Result<Pca> {
    let m = rows.len();
    if m < 2 {
        return Err(GeomError::InsufficientData(format!(
            "PCA needs at least 2 rows, got {m}"
        )));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(GeomError::Consistency("PCA rows have differing lengths".into()));
    }
    if n_components == 0 || n_components > m.min(d) {
        return Err(GeomError::InsufficientData(format!(
            "cannot extract {n_components} components from a {m}×{d} matrix"
        )));
    }

    let means: Vec<f64> = if center {
        let mut acc = vec![0.0; d];
        for r in rows {
            for (a, x) in acc.iter_mut().zip(r) {
                *a += x;
            }
        }
        acc.iter().map(|s| s / m as f64).collect()
    } else {
        vec![0.0; d]
    };
    let x = DMatrix::from_fn(m, d, |i, j| rows[i][j] - means[j]);
    let denom = (m - 1) as f64;

    let (mut values, mut axes) = if m >= d {
        let cov = covariance(&x) / denom;
        let eig = SymmetricEigen::new(cov);
        let order = descending(&eig.eigenvalues);
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let axes: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (values, axes)
    } else {
        let gram = &x * x.transpose() / denom;
        let eig = SymmetricEigen::new(gram);
        let order = descending(&eig.eigenvalues);
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let top = values.first().copied().unwrap_or(0.0);
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n_components);
        for (&i, &lambda) in order.iter().zip(&values).take(n_components) {
            if lambda <= top * 1e-12 || lambda == 0.0 {
                break;
            }
            let u = eig.eigenvectors.column(i);
            let v = x.transpose() * u;
            let nv = v.norm();
            axes.push(v.iter().map(|a| a / nv).collect());
        }
        complete_basis(&mut axes, d, n_components);
        (values, axes)
    };

    let total: f64 = values.iter().sum();
    values.truncate(n_components);
    axes.truncate(n_components);
    for axis in &mut axes {
        fix_sign(axis);
    }
    let ratio = values
        .iter()
        .map(|v| if total > 0.0 { (v / total).clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    Ok(Pca {
        axes,
        explained_variance_ratio: ratio,
        explained_variance: values,
        total_variance: total,
    })
}

/// Full covariance spectrum (descending eigenvalues) of the rows, used for
/// cumulative explained-variance curves.
pub fn spectrum(rows: &[Vec<f64>], center: bool) -> Result<Vec<f64>> {
    let m = rows.len();
    if m < 2 {
        return Err(GeomError::InsufficientData(format!(
            "spectrum needs at least 2 rows, got {m}"
        )));
    }
    let d = rows[0].len();
    let means: Vec<f64> = if center {
        (0..d)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / m as f64)
            .collect()
    } else {
        vec![0.0; d]
    };
    let x = DMatrix::from_fn(m, d, |i, j| rows[i][j] - means[j]);
    let denom = (m - 1) as f64;
    let eig = if m >= d {
        SymmetricEigen::new(covariance(&x) / denom).eigenvalues
    } else {
        SymmetricEigen::new(&x * x.transpose() / denom).eigenvalues
    };
    let mut values: Vec<f64> = eig.iter().map(|v| v.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.resize(d, 0.0);
    Ok(values)
}

/// `Xᵀ X`, computed in row blocks in parallel and summed in block order.
fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    const BLOCK: usize = 2048;
    let m = x.nrows();
    let d = x.ncols();
    if m <= BLOCK {
        return x.transpose() * x;
    }
    let starts: Vec<usize> = (0..m).step_by(BLOCK).collect();
    let partials: Vec<DMatrix<f64>> = starts
        .par_iter()
        .map(|&s| {
            let rows = BLOCK.min(m - s);
            let block = x.rows(s, rows);
            block.transpose() * block
        })
        .collect();
    partials
        .into_iter()
        .fold(DMatrix::zeros(d, d), |acc, p| acc + p)
}

fn descending(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Extends `axes` with unit vectors orthogonal to all previous ones until it holds `target` entries.
fn complete_basis(axes: &mut Vec<Vec<f64>>, d: usize, target: usize) {
    let mut e = 0;
    while axes.len() < target && e < d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        e += 1;
        for a in axes.iter() {
            let p: f64 = a.iter().zip(&v).map(|(x, y)| x * y).sum();
            for (vi, ai) in v.iter_mut().zip(a) {
                *vi -= p * ai;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            axes.push(v.iter().map(|x| x / n).collect());
        }
    }
}

/// Makes the entry of largest magnitude positive (first such entry on ties).
pub fn fix_sign(axis: &mut [f64]) {
    let mut best = 0;
    for (i, x) in axis.iter().enumerate() {
        if x.abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis.get(best).is_some_and(|&x| x < 0.0) {
        for x in axis.iter_mut() {
            *x = -*x;
        }
    }
}
