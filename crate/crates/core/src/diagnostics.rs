//! Whole-space diagnostics: effective dimensionality, norm spread, isotropy.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::stats::spectrum;
use crate::store::EmbeddingStore;
use crate::util::{cosine, derive_seed, fmt_f64, mix64, write_atomic};

pub const DEFAULT_PAIR_SAMPLE: usize = 100_000;
pub const VARIANCE_TARGET: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDiagnostics {
    pub nominal_dim: usize,
    pub effective_dim_95: usize,
    pub utilization: f64,
    pub norm_cov: f64,
    pub mean_pairwise_cos: f64,
    /// Cumulative explained-variance fraction after each component.
    pub pca_cumulative: Vec<f64>,
    pub centered: bool,
    pub pair_sample: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOptions {
    pub pair_sample: usize,
    pub seed: u64,
    pub center: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            pair_sample: DEFAULT_PAIR_SAMPLE,
            seed: crate::clustering::DEFAULT_SEED,
            center: true,
        }
    }
}

pub fn diagnose_space(store: &EmbeddingStore, pair_sample: usize, seed: u64) -> Result<SpaceDiagnostics> {
    diagnose_space_with(
        store,
        &DiagnoseOptions {
            pair_sample,
            seed,
            center: true,
        },
    )
}

pub fn diagnose_space_with(store: &EmbeddingStore, opts: &DiagnoseOptions) -> Result<SpaceDiagnostics> {
    let rows = store.rows_f64();
    let eigen = spectrum(&rows, opts.center)?;
    let pca_cumulative = cumulative(&eigen);
    let effective_dim_95 = effective_dim(&pca_cumulative, VARIANCE_TARGET);

    let norms = store.norms();
    let n = norms.len() as f64;
    let mean_norm = norms.iter().sum::<f64>() / n;
    let var = norms.iter().map(|r| (r - mean_norm).powi(2)).sum::<f64>() / n;
    let norm_cov = var.sqrt() / mean_norm;

    let mean_pairwise_cos = sampled_pair_cosine(store, opts.pair_sample, opts.seed)?;
    Ok(SpaceDiagnostics {
        nominal_dim: store.dim(),
        effective_dim_95,
        utilization: effective_dim_95 as f64 / store.dim() as f64,
        norm_cov,
        mean_pairwise_cos,
        pca_cumulative,
        centered: opts.center,
        pair_sample: opts.pair_sample,
    })
}

fn cumulative(eigen: &[f64]) -> Vec<f64> {
    let total: f64 = eigen.iter().sum();
    let mut acc = 0.0;
    eigen
        .iter()
        .map(|v| {
            acc += v;
            if total > 0.0 {
                (acc / total).min(1.0)
            } else {
                1.0
            }
        })
        .collect()
}

/// Smallest component count whose cumulative fraction reaches `target`.
pub fn effective_dim(cumulative: &[f64], target: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| c >= target - 1e-12)
        .map_or(cumulative.len(), |i| i + 1)
}

/// Mean cosine over `pairs` unordered token pairs; pair `t` is derived from
/// `(seed, t)` alone, so the draw does not depend on evaluation order.
pub fn sampled_pair_cosine(store: &EmbeddingStore, pairs: usize, seed: u64) -> Result<f64> {
    let n = store.vocab_size() as u64;
    if n < 2 {
        return Err(GeomError::InsufficientData("pairwise cosine needs 2+ tokens".into()));
    }
    if pairs == 0 {
        return Err(GeomError::InsufficientData("pair sample size is zero".into()));
    }
    let sims: Vec<f64> = (0..pairs as u64)
        .into_par_iter()
        .map(|t| {
            let h = derive_seed(seed, t);
            let i = h % n;
            let mut j = mix64(h) % (n - 1);
            if j >= i {
                j += 1;
            }
            cosine(&store.row_f64(i as usize), &store.row_f64(j as usize))
        })
        .collect();
    Ok(sims.iter().sum::<f64>() / sims.len() as f64)
}

/// CSV of component index (1-based) against cumulative explained variance.
pub fn emit_pca_plotdata(diag: &SpaceDiagnostics, path: &Path) -> Result<()> {
    let mut csv = String::from("component,cumulative_variance\n");
    for (i, c) in diag.pca_cumulative.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, fmt_f64(*c)));
    }
    write_atomic(path, csv.as_bytes())
}
