//! Cluster cohesion β in two variants.
//!
//! The centroid variant scores each sampled member by its cosine to its own
//! centroid minus its mean cosine to the other `k - 1` centroids, averages per
//! cluster, and t-tests the per-cluster values against zero. The pairwise
//! variant compares mean within-cluster pairwise cosine to a background of
//! random cross-cluster pairs.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterModel;
use crate::error::{GeomError, Result};
use crate::stats::t_test_one_sided;
use crate::store::EmbeddingStore;
use crate::util::{derive_seed, dot, mean, normalized};

pub const DEFAULT_SAMPLE_CAP: usize = 300;
pub const BACKGROUND_PAIRS: usize = 10_000;

/// Stream id for the background pair sampler, kept apart from cluster ids.
const BACKGROUND_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaVariant {
    CentroidDiff,
    Pairwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub variant: BetaVariant,
    /// β per cluster; `None` for clusters the variant skips.
    pub per_cluster: Vec<Option<f64>>,
    pub mean_beta: f64,
    #[serde(with = "crate::util::serde_f64")]
    pub t_stat: f64,
    pub p_value: f64,
    pub sample_cap: usize,
    pub seed: u64,
    /// Centroid variant: mean own-centroid cosine. Pairwise: mean within-cluster cosine.
    pub mean_own_sim: f64,
    /// Centroid variant: mean other-centroid cosine. Pairwise: background cosine.
    pub mean_other_sim: f64,
}

impl BetaResult {
    pub fn values(&self) -> Vec<f64> {
        self.per_cluster.iter().flatten().copied().collect()
    }
}

/// One-sided t-test over per-cluster values. A sample with no spread is
/// resolved by its sign: positive → `(+inf, 0)`, negative → `(-inf, 1)`,
/// zero → `(0, 0.5)`.
fn significance(values: &[f64]) -> Result<(f64, f64)> {
    match t_test_one_sided(values) {
        Err(GeomError::DegenerateInput(_)) => {
            let m = mean(values);
            Ok(if m > 0.0 {
                (f64::INFINITY, 0.0)
            } else if m < 0.0 {
                (f64::NEG_INFINITY, 1.0)
            } else {
                (0.0, 0.5)
            })
        }
        other => other,
    }
}

/// Seeded sample of at most `cap` members, without replacement, in ascending order.
fn sample_members(members: &[usize], cap: usize, seed: u64, cluster: usize) -> Vec<usize> {
    if members.len() <= cap {
        return members.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, cluster as u64));
    let mut picked: Vec<usize> = index::sample(&mut rng, members.len(), cap)
        .into_iter()
        .map(|i| members[i])
        .collect();
    picked.sort_unstable();
    picked
}

fn check_model(store: &EmbeddingStore, model: &ClusterModel) -> Result<Vec<Vec<usize>>> {
    if model.assignments.len() != store.vocab_size() {
        return Err(GeomError::Consistency(format!(
            "model assigns {} tokens but store has {}",
            model.assignments.len(),
            store.vocab_size()
        )));
    }
    if model.dim() != store.dim() {
        return Err(GeomError::Consistency(format!(
            "model dim {} differs from store dim {}",
            model.dim(),
            store.dim()
        )));
    }
    Ok(model.members())
}

/// Centroid-difference β.
pub fn compute_beta_centroid(
    store: &EmbeddingStore,
    model: &ClusterModel,
    sample_cap: usize,
    seed: u64,
) -> Result<BetaResult> {
    let members = check_model(store, model)?;
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(GeomError::Consistency(format!("cluster {c} has no members")));
    }
    let k = model.k;
    let centroids = model.unit_centroids();

    // (β_c, own_c, other_c) per cluster
    let per: Vec<(f64, f64, f64)> = members
        .par_iter()
        .enumerate()
        .map(|(c, m)| {
            let sample = sample_members(m, sample_cap, seed, c);
            let mut beta = 0.0;
            let mut own = 0.0;
            let mut other = 0.0;
            for &i in &sample {
                let v = normalized(&store.row_f64(i));
                let sims: Vec<f64> = centroids.iter().map(|u| dot(&v, u)).collect();
                let own_sim = sims[c];
                let other_sim = if k > 1 {
                    (sims.iter().sum::<f64>() - own_sim) / (k - 1) as f64
                } else {
                    0.0
                };
                beta += own_sim - other_sim;
                own += own_sim;
                other += other_sim;
            }
            let n = sample.len() as f64;
            (beta / n, own / n, other / n)
        })
        .collect();

    let betas: Vec<f64> = per.iter().map(|p| p.0).collect();
    let (t_stat, p_value) = significance(&betas)?;
    Ok(BetaResult {
        variant: BetaVariant::CentroidDiff,
        per_cluster: betas.iter().copied().map(Some).collect(),
        mean_beta: mean(&betas),
        t_stat,
        p_value,
        sample_cap,
        seed,
        mean_own_sim: mean(&per.iter().map(|p| p.1).collect::<Vec<_>>()),
        mean_other_sim: mean(&per.iter().map(|p| p.2).collect::<Vec<_>>()),
    })
}

/// Pairwise β: mean within-cluster pairwise cosine minus the mean cosine of
/// [`BACKGROUND_PAIRS`] random cross-cluster token pairs.
pub fn compute_beta_pairwise(
    store: &EmbeddingStore,
    model: &ClusterModel,
    sample_cap: usize,
    seed: u64,
) -> Result<BetaResult> {
    let members = check_model(store, model)?;
    let eligible = members.iter().filter(|m| m.len() >= 2).count();
    if eligible < 2 {
        return Err(GeomError::InsufficientData(format!(
            "pairwise β needs at least 2 clusters with 2+ members, found {eligible}"
        )));
    }

    let within: Vec<Option<f64>> = members
        .par_iter()
        .enumerate()
        .map(|(c, m)| {
            let sample = sample_members(m, sample_cap, seed, c);
            if sample.len() < 2 {
                return None;
            }
            let units: Vec<Vec<f64>> = sample.iter().map(|&i| normalized(&store.row_f64(i))).collect();
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for a in 0..units.len() {
                for b in a + 1..units.len() {
                    sum += dot(&units[a], &units[b]);
                    pairs += 1;
                }
            }
            Some(sum / pairs as f64)
        })
        .collect();

    let background = background_cosine(store, &model.assignments, seed);
    let per_cluster: Vec<Option<f64>> = within.iter().map(|w| w.map(|w| w - background)).collect();
    let values: Vec<f64> = per_cluster.iter().flatten().copied().collect();
    let (t_stat, p_value) = significance(&values)?;
    let within_values: Vec<f64> = within.iter().flatten().copied().collect();
    Ok(BetaResult {
        variant: BetaVariant::Pairwise,
        per_cluster,
        mean_beta: mean(&values),
        t_stat,
        p_value,
        sample_cap,
        seed,
        mean_own_sim: mean(&within_values),
        mean_other_sim: background,
    })
}

fn background_cosine(store: &EmbeddingStore, assignments: &[usize], seed: u64) -> f64 {
    let n = assignments.len();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, BACKGROUND_STREAM));
    let mut pairs = Vec::with_capacity(BACKGROUND_PAIRS);
    while pairs.len() < BACKGROUND_PAIRS {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if assignments[i] != assignments[j] {
            pairs.push((i, j));
        }
    }
    let sims: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| crate::util::cosine(&store.row_f64(i), &store.row_f64(j)))
        .collect();
    mean(&sims)
}
