//! Three-tier token classifier.
//!
//! * Tier 1 (center-drift): low soft membership `H` and a small norm.
//! * Tier 2 (wrong-well): along a sequence, a confident token whose nearest
//!   centroid sits far (in cosine) from the previous confident token's.
//! * Tier 3 (coverage gap): low best-centroid similarity and a sparse
//!   neighbourhood; the kNN density is only evaluated once the similarity
//!   screen has failed.
//!
//! Every threshold is a percentile of the model's own distribution, so a
//! calibration is tied to one store and one cluster model.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{centroid_cosine_matrix, soft_membership, ClusterModel, MembershipScore};
use crate::error::{GeomError, Result};
use crate::stats::percentile;
use crate::store::EmbeddingStore;
use crate::util::{derive_seed, mean, norm, sq_dist};

/// Stream id for the density reference sample.
const DENSITY_STREAM: u64 = 0xD5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPercentiles {
    pub h: f64,
    pub norm: f64,
    pub max_sim: f64,
    pub jump: f64,
    pub density: f64,
    pub confidence: f64,
}

impl Default for CalibrationPercentiles {
    fn default() -> Self {
        CalibrationPercentiles {
            h: 15.0,
            norm: 40.0,
            max_sim: 10.0,
            jump: 25.0,
            density: 90.0,
            confidence: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub top_m: usize,
    pub k_neighbors: usize,
    pub density_sample: usize,
    pub seed: u64,
    pub percentiles: CalibrationPercentiles,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            top_m: 5,
            k_neighbors: 10,
            density_sample: 10_000,
            seed: crate::clustering::DEFAULT_SEED,
            percentiles: CalibrationPercentiles::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionThresholds {
    pub theta_h: f64,
    pub theta_norm: f64,
    pub theta_maxsim: f64,
    pub theta_jump: f64,
    pub theta_density: f64,
    /// Tier-2 confidence gate on max centroid similarity.
    pub theta_confidence: f64,
    pub top_m: usize,
    pub k_neighbors: usize,
    pub density_sample: usize,
    pub seed: u64,
    pub calibration_percentiles: CalibrationPercentiles,
    /// Mean `H` over the calibration population.
    pub mean_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HallucinationType {
    Type1,
    Type2,
    Type3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenVerdict {
    pub position: usize,
    pub h: f64,
    pub norm: f64,
    pub max_sim: f64,
    pub cluster: usize,
    /// Only computed for tokens that fail the max-similarity screen.
    pub density: Option<f64>,
    pub flags: Vec<HallucinationType>,
}

impl TokenVerdict {
    pub fn has(&self, t: HallucinationType) -> bool {
        self.flags.contains(&t)
    }
}

/// Mean Euclidean distance from `v` to its `k_neighbors` nearest reference rows.
pub fn knn_density(v: &[f64], reference: &[Vec<f64>], k_neighbors: usize) -> Result<f64> {
    knn_density_excluding(v, reference, k_neighbors, None)
}

fn knn_density_excluding(v: &[f64], reference: &[Vec<f64>], k: usize, skip: Option<usize>) -> Result<f64> {
    let available = reference.len() - usize::from(skip.is_some_and(|s| s < reference.len()));
    if k == 0 || available < k {
        return Err(GeomError::InsufficientData(format!(
            "{available} reference rows cannot supply {k} neighbours"
        )));
    }
    // bounded max-heap of the k smallest squared distances, kept as a sorted vec
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for (i, r) in reference.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let d = sq_dist(v, r);
        if best.len() < k || d < best[k - 1] {
            let pos = best.partition_point(|&x| x <= d);
            best.insert(pos, d);
            best.truncate(k);
        }
    }
    Ok(best.iter().map(|d| d.sqrt()).sum::<f64>() / k as f64)
}

/// Exhaustive-scan density index over a seeded subsample of store rows.
#[derive(Debug)]
pub struct DensityIndex {
    rows: Vec<Vec<f64>>,
    /// Store row of each reference entry.
    source_rows: Vec<usize>,
    k_neighbors: usize,
    evaluations: AtomicUsize,
}

impl DensityIndex {
    pub fn build(store: &EmbeddingStore, sample: usize, k_neighbors: usize, seed: u64) -> Result<Self> {
        let n = store.vocab_size();
        let size = sample.min(n);
        let mut source_rows: Vec<usize> = if size == n {
            (0..n).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, DENSITY_STREAM));
            index::sample(&mut rng, n, size).into_vec()
        };
        source_rows.sort_unstable();
        if source_rows.len() <= k_neighbors {
            return Err(GeomError::InsufficientData(format!(
                "density reference of {} rows is too small for k = {k_neighbors}",
                source_rows.len()
            )));
        }
        Ok(DensityIndex {
            rows: source_rows.iter().map(|&i| store.row_f64(i)).collect(),
            source_rows,
            k_neighbors,
            evaluations: AtomicUsize::new(0),
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, k_neighbors: usize) -> Self {
        DensityIndex {
            source_rows: (0..rows.len()).collect(),
            rows,
            k_neighbors,
            evaluations: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of density evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    /// Density of `v`; when `store_row` is given, that row's own reference
    /// entry (if sampled) is left out.
    pub fn density(&self, v: &[f64], store_row: Option<usize>) -> Result<f64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let skip = store_row.and_then(|r| self.source_rows.binary_search(&r).ok());
        knn_density_excluding(v, &self.rows, self.k_neighbors, skip)
    }
}

/// Calibrates thresholds on every stored token and builds the density index.
pub fn calibrate(store: &EmbeddingStore, model: &ClusterModel) -> Result<(DetectionThresholds, DensityIndex)> {
    calibrate_with(store, model, &DetectorConfig::default())
}

pub fn calibrate_with(
    store: &EmbeddingStore,
    model: &ClusterModel,
    cfg: &DetectorConfig,
) -> Result<(DetectionThresholds, DensityIndex)> {
    let scores: Vec<MembershipScore> = (0..store.vocab_size())
        .into_par_iter()
        .map(|i| soft_membership(&store.row_f64(i), model, cfg.top_m))
        .collect::<Result<_>>()?;
    let hs: Vec<f64> = scores.iter().map(|s| s.h).collect();
    let max_sims: Vec<f64> = scores.iter().map(|s| s.max_sim).collect();
    let norms = store.norms();

    let cos = centroid_cosine_matrix(model);
    let mut off_diag = Vec::with_capacity(model.k * (model.k - 1) / 2);
    for i in 0..model.k {
        for j in i + 1..model.k {
            off_diag.push(cos[i][j]);
        }
    }
    if off_diag.is_empty() {
        return Err(GeomError::InsufficientData("jump threshold needs at least 2 centroids".into()));
    }

    let index = DensityIndex::build(store, cfg.density_sample, cfg.k_neighbors, cfg.seed)?;
    let densities: Vec<f64> = (0..index.len())
        .into_par_iter()
        .map(|r| knn_density_excluding(&index.rows[r], &index.rows, cfg.k_neighbors, Some(r)))
        .collect::<Result<_>>()?;

    let q = &cfg.percentiles;
    let thresholds = DetectionThresholds {
        theta_h: percentile(&hs, q.h)?,
        theta_norm: percentile(&norms, q.norm)?,
        theta_maxsim: percentile(&max_sims, q.max_sim)?,
        theta_jump: percentile(&off_diag, q.jump)?,
        theta_density: percentile(&densities, q.density)?,
        theta_confidence: percentile(&max_sims, q.confidence)?,
        top_m: cfg.top_m,
        k_neighbors: cfg.k_neighbors,
        density_sample: cfg.density_sample,
        seed: cfg.seed,
        calibration_percentiles: q.clone(),
        mean_h: mean(&hs),
    };
    Ok((thresholds, index))
}

fn tier1(score: &MembershipScore, v_norm: f64, t: &DetectionThresholds) -> bool {
    score.h < t.theta_h && v_norm < t.theta_norm
}

fn classify_inner(
    v: &[f64],
    model: &ClusterModel,
    t: &DetectionThresholds,
    index: &DensityIndex,
    store_row: Option<usize>,
    position: usize,
) -> Result<TokenVerdict> {
    let score = soft_membership(v, model, t.top_m)?;
    let v_norm = norm(v);
    let mut flags = Vec::new();
    if tier1(&score, v_norm, t) {
        flags.push(HallucinationType::Type1);
    }
    let mut density = None;
    if score.max_sim < t.theta_maxsim {
        let d = index.density(v, store_row)?;
        if d > t.theta_density {
            flags.push(HallucinationType::Type3);
        }
        density = Some(d);
    }
    Ok(TokenVerdict {
        position,
        h: score.h,
        norm: v_norm,
        max_sim: score.max_sim,
        cluster: score.argmax_cluster,
        density,
        flags,
    })
}

/// Classifies a free-standing vector.
pub fn classify_token(
    v: &[f64],
    model: &ClusterModel,
    thresholds: &DetectionThresholds,
    index: &DensityIndex,
) -> Result<TokenVerdict> {
    classify_inner(v, model, thresholds, index, None, 0)
}

/// Classifies stored token `row`, leaving it out of its own density neighbourhood.
pub fn classify_stored_token(
    store: &EmbeddingStore,
    row: usize,
    model: &ClusterModel,
    thresholds: &DetectionThresholds,
    index: &DensityIndex,
) -> Result<TokenVerdict> {
    classify_inner(&store.row_f64(row), model, thresholds, index, Some(row), row)
}

/// Classifies every stored token (in row order).
pub fn classify_store(
    store: &EmbeddingStore,
    model: &ClusterModel,
    thresholds: &DetectionThresholds,
    index: &DensityIndex,
) -> Result<Vec<TokenVerdict>> {
    (0..store.vocab_size())
        .into_par_iter()
        .map(|i| classify_stored_token(store, i, model, thresholds, index))
        .collect()
}

/// Tier-1 and Tier-2 verdicts along a sequence of vectors.
pub fn analyze_trajectory(
    sequence: &[Vec<f64>],
    model: &ClusterModel,
    thresholds: &DetectionThresholds,
) -> Result<Vec<TokenVerdict>> {
    if sequence.is_empty() {
        return Err(GeomError::InsufficientData("empty sequence".into()));
    }
    let cos = centroid_cosine_matrix(model);
    let scores: Vec<MembershipScore> = sequence
        .iter()
        .map(|v| soft_membership(v, model, thresholds.top_m))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(sequence.len());
    for (t, (v, score)) in sequence.iter().zip(&scores).enumerate() {
        let v_norm = norm(v);
        let mut flags = Vec::new();
        if tier1(score, v_norm, thresholds) {
            flags.push(HallucinationType::Type1);
        }
        if t > 0 {
            let prev = &scores[t - 1];
            let confident = prev.max_sim > thresholds.theta_confidence && score.max_sim > thresholds.theta_confidence;
            if confident && cos[prev.argmax_cluster][score.argmax_cluster] < thresholds.theta_jump {
                flags.push(HallucinationType::Type2);
            }
        }
        out.push(TokenVerdict {
            position: t,
            h: score.h,
            norm: v_norm,
            max_sim: score.max_sim,
            cluster: score.argmax_cluster,
            density: None,
            flags,
        });
    }
    Ok(out)
}

/// Flag counts over a classified population, with the mean self-information
/// of Type-1 tokens as a corroborating frequency signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSummary {
    pub n_tokens: usize,
    pub type1: usize,
    pub type2: usize,
    pub type3: usize,
    pub density_evaluations: usize,
    pub mean_info_type1: Option<f64>,
    pub mean_info_all: f64,
}

pub fn summarize(store: &EmbeddingStore, verdicts: &[TokenVerdict], index: &DensityIndex) -> ZoneSummary {
    let count = |t| verdicts.iter().filter(|v| v.has(t)).count();
    let info = store.self_information();
    let t1: Vec<f64> = verdicts
        .iter()
        .filter(|v| v.has(HallucinationType::Type1))
        .map(|v| info[v.position])
        .collect();
    ZoneSummary {
        n_tokens: verdicts.len(),
        type1: count(HallucinationType::Type1),
        type2: count(HallucinationType::Type2),
        type3: count(HallucinationType::Type3),
        density_evaluations: index.evaluations(),
        mean_info_type1: (!t1.is_empty()).then(|| mean(&t1)),
        mean_info_all: mean(&info),
    }
}
