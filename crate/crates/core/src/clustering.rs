//! Mini-batch k-means with k-means++ seeding, and cosine membership against
//! the fitted centroids.
//!
//! Each of the `n_init` runs draws its own stream from the run seed, seeds
//! centroids with k-means++, then sweeps the data in shuffled mini-batches with
//! per-centroid `1/count` learning rates. Full-data inertia is measured at every
//! epoch boundary; a run stops after `max_epochs` or once the relative
//! improvement drops below `tolerance`, and an epoch that would raise inertia is
//! rolled back. Centroids are rounded to `f32` precision and final assignments
//! come from one full nearest-centroid pass, so a saved model reloads exactly.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::store::EmbeddingStore;
use crate::util::{cosine, derive_seed, dot, normalized, sq_dist, write_atomic, write_json, read_json};

pub const DEFAULT_K: usize = 40;
pub const DEFAULT_BATCH_SIZE: usize = 1024;
pub const DEFAULT_N_INIT: usize = 5;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MAX_EPOCHS: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub batch_size: usize,
    pub n_init: usize,
    pub seed: u64,
    pub max_epochs: usize,
    /// Minimum relative full-data inertia improvement per epoch.
    pub tolerance: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: DEFAULT_K,
            batch_size: DEFAULT_BATCH_SIZE,
            n_init: DEFAULT_N_INIT,
            seed: DEFAULT_SEED,
            max_epochs: DEFAULT_MAX_EPOCHS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Full-data inertia at each epoch boundary of the selected run.
    pub inertia_history: Vec<f64>,
    unit_centroids: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipScore {
    /// Mean of the `top_m` largest centroid cosines.
    pub h: f64,
    pub max_sim: f64,
    pub argmax_cluster: usize,
}

impl ClusterModel {
    /// Assembles a model from explicit centroids and assignments.
    pub fn from_parts(
        centroids: Vec<Vec<f64>>,
        assignments: Vec<usize>,
        inertia: f64,
        seed: u64,
    ) -> Result<Self> {
        let k = centroids.len();
        if k == 0 {
            return Err(GeomError::Consistency("model has no centroids".into()));
        }
        let d = centroids[0].len();
        if centroids.iter().any(|c| c.len() != d) {
            return Err(GeomError::Consistency("centroids have differing lengths".into()));
        }
        if let Some(bad) = assignments.iter().find(|&&a| a >= k) {
            return Err(GeomError::Consistency(format!("assignment {bad} outside 0..{k}")));
        }
        let unit_centroids = centroids.iter().map(|c| normalized(c)).collect();
        Ok(ClusterModel {
            k,
            seed,
            centroids,
            assignments,
            inertia,
            inertia_history: Vec::new(),
            unit_centroids,
        })
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    /// Member row indices of every cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &a) in self.assignments.iter().enumerate() {
            out[a].push(i);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn unit_centroids(&self) -> &[Vec<f64>] {
        &self.unit_centroids
    }

    /// Cosine of `v` to every centroid.
    pub fn centroid_cosines(&self, v: &[f64]) -> Vec<f64> {
        let unit = normalized(v);
        self.unit_centroids.iter().map(|c| dot(&unit, c).clamp(-1.0, 1.0)).collect()
    }

    /// Copy with assignments replaced (centroids kept).
    pub fn with_assignments(&self, assignments: Vec<usize>) -> Result<Self> {
        let mut m = Self::from_parts(self.centroids.clone(), assignments, self.inertia, self.seed)?;
        m.inertia_history = self.inertia_history.clone();
        Ok(m)
    }
}

/// Index of the nearest centroid (ties toward the lower index) and its squared distance.
pub fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(x, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Nearest-centroid assignment of every row, with per-row squared distances.
pub fn assign_nearest(rows: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    rows.par_iter().map(|r| nearest(r, centroids)).unzip()
}

fn total(dists: &[f64]) -> f64 {
    dists.iter().sum()
}

/// Fits mini-batch k-means on the rows of `store`.
pub fn fit_minibatch_kmeans(store: &EmbeddingStore, params: &KMeansParams) -> Result<ClusterModel> {
    fit_rows(&store.rows_f64(), params)
}

/// [`fit_minibatch_kmeans`] on raw `f64` rows.
pub fn fit_rows(rows: &[Vec<f64>], params: &KMeansParams) -> Result<ClusterModel> {
    let n = rows.len();
    let k = params.k;
    if k < 2 {
        return Err(GeomError::InsufficientData(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(GeomError::InsufficientData(format!(
            "{n} points cannot form {k} clusters"
        )));
    }
    if params.batch_size == 0 || params.n_init == 0 {
        return Err(GeomError::DegenerateInput("batch_size and n_init must be positive".into()));
    }

    let mut best: Option<ClusterModel> = None;
    for run in 0..params.n_init {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, run as u64));
        let model = single_run(rows, params, &mut rng)?;
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    let mut model = best.expect("n_init >= 1");
    model.seed = params.seed;
    Ok(model)
}

fn single_run(rows: &[Vec<f64>], params: &KMeansParams, rng: &mut ChaCha8Rng) -> Result<ClusterModel> {
    let n = rows.len();
    let k = params.k;
    let mut centroids = kmeans_plus_plus(rows, k, rng);
    let mut counts = vec![0u64; k];

    let (mut assign, mut dists) = assign_nearest(rows, &centroids);
    reseed_empty(rows, &mut centroids, &mut counts, &mut assign, &mut dists);
    let mut inertia = total(&dists);
    let mut history = vec![inertia];

    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..params.max_epochs {
        if inertia == 0.0 {
            break;
        }
        let previous = (centroids.clone(), counts.clone());
        order.shuffle(rng);
        for batch in order.chunks(params.batch_size) {
            let labels: Vec<usize> = batch.par_iter().map(|&i| nearest(&rows[i], &centroids).0).collect();
            for (&i, &c) in batch.iter().zip(&labels) {
                counts[c] += 1;
                let eta = 1.0 / counts[c] as f64;
                for (cj, xj) in centroids[c].iter_mut().zip(&rows[i]) {
                    *cj += eta * (xj - *cj);
                }
            }
        }
        let (a, d) = assign_nearest(rows, &centroids);
        assign = a;
        dists = d;
        reseed_empty(rows, &mut centroids, &mut counts, &mut assign, &mut dists);
        let next = total(&dists);
        if next > inertia {
            centroids = previous.0;
            counts = previous.1;
            break;
        }
        let improvement = (inertia - next) / inertia;
        inertia = next;
        history.push(inertia);
        if improvement < params.tolerance {
            break;
        }
    }

    // Round to storage precision so a saved model reproduces these numbers exactly.
    for c in &mut centroids {
        for x in c.iter_mut() {
            *x = *x as f32 as f64;
        }
    }
    let (mut assign, mut dists) = assign_nearest(rows, &centroids);
    for _ in 0..=k {
        if !reseed_empty(rows, &mut centroids, &mut counts, &mut assign, &mut dists) {
            break;
        }
    }
    let sizes = {
        let mut s = vec![0usize; k];
        for &a in &assign {
            s[a] += 1;
        }
        s
    };
    if sizes.contains(&0) {
        return Err(GeomError::DegenerateInput(format!(
            "could not populate all {k} clusters (too few distinct points)"
        )));
    }
    let mut model = ClusterModel::from_parts(centroids, assign, total(&dists), 0)?;
    model.inertia_history = history;
    Ok(model)
}

/// Moves every empty centroid onto the point currently farthest from its own
/// centroid, then refreshes assignments. Returns whether anything changed.
fn reseed_empty(
    rows: &[Vec<f64>],
    centroids: &mut [Vec<f64>],
    counts: &mut [u64],
    assign: &mut Vec<usize>,
    dists: &mut Vec<f64>,
) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assign.iter() {
        sizes[a] += 1;
    }
    let empty: Vec<usize> = (0..k).filter(|&c| sizes[c] == 0).collect();
    if empty.is_empty() {
        return false;
    }
    let mut by_distance: Vec<usize> = (0..rows.len()).collect();
    by_distance.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
    for (c, &i) in empty.iter().zip(&by_distance) {
        centroids[*c] = rows[i].clone();
        counts[*c] = 1;
    }
    let (a, d) = assign_nearest(rows, centroids);
    *assign = a;
    *dists = d;
    true
}

/// k-means++ seeding by D² sampling.
fn kmeans_plus_plus(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(rows[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = rows.par_iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let sum: f64 = d2.iter().sum();
        let pick = if sum > 0.0 {
            let target = rng.random::<f64>() * sum;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = rows[pick].clone();
        d2.par_iter_mut()
            .zip(rows.par_iter())
            .for_each(|(d, r)| *d = d.min(sq_dist(r, &c)));
        centroids.push(c);
    }
    centroids
}

/// Cosine membership of `v`: mean of the `top_m` largest centroid cosines,
/// plus the single best centroid.
pub fn soft_membership(v: &[f64], model: &ClusterModel, top_m: usize) -> Result<MembershipScore> {
    if top_m == 0 || top_m > model.k {
        return Err(GeomError::DegenerateInput(format!(
            "top_m {top_m} outside 1..={}",
            model.k
        )));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(GeomError::DegenerateInput("zero query vector".into()));
    }
    let sims = model.centroid_cosines(v);
    let mut argmax = 0;
    for (c, &s) in sims.iter().enumerate() {
        if s > sims[argmax] {
            argmax = c;
        }
    }
    let mut sorted = sims.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let h = sorted[..top_m].iter().sum::<f64>() / top_m as f64;
    Ok(MembershipScore {
        h,
        max_sim: sims[argmax],
        argmax_cluster: argmax,
    })
}

/// Symmetric `k × k` matrix of centroid cosines with unit diagonal.
pub fn centroid_cosine_matrix(model: &ClusterModel) -> Vec<Vec<f64>> {
    let k = model.k;
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        m[i][i] = 1.0;
        for j in i + 1..k {
            let c = cosine(&model.centroids[i], &model.centroids[j]);
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    m
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterHeader {
    k: usize,
    seed: u64,
    inertia: f64,
    dim: usize,
    n_tokens: usize,
    inertia_history: Vec<f64>,
}

fn cluster_files(prefix: &Path) -> [PathBuf; 3] {
    let base = prefix.as_os_str().to_owned();
    let with = |s: &str| {
        let mut p = base.clone();
        p.push(s);
        PathBuf::from(p)
    };
    [with(".clusters.json"), with(".centroids.bin"), with(".assign.bin")]
}

/// Writes `<prefix>.clusters.json`, `<prefix>.centroids.bin` (f32le) and
/// `<prefix>.assign.bin` (u32le).
pub fn save_model(model: &ClusterModel, prefix: &Path) -> Result<()> {
    let [header, cent, assign] = cluster_files(prefix);
    let mut cbytes = Vec::with_capacity(model.k * model.dim() * 4);
    for c in &model.centroids {
        for &x in c {
            cbytes.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    let mut abytes = Vec::with_capacity(model.assignments.len() * 4);
    for &a in &model.assignments {
        abytes.extend_from_slice(&(a as u32).to_le_bytes());
    }
    write_atomic(&cent, &cbytes)?;
    write_atomic(&assign, &abytes)?;
    write_json(
        &header,
        &ClusterHeader {
            k: model.k,
            seed: model.seed,
            inertia: model.inertia,
            dim: model.dim(),
            n_tokens: model.assignments.len(),
            inertia_history: model.inertia_history.clone(),
        },
    )
}

pub fn load_model(prefix: &Path) -> Result<ClusterModel> {
    let [header_path, cent, assign] = cluster_files(prefix);
    let header: ClusterHeader = read_json(&header_path)?;
    let cbytes = fs::read(&cent).map_err(|e| GeomError::io(&cent, e))?;
    if cbytes.len() != header.k * header.dim * 4 {
        return Err(GeomError::Consistency(format!(
            "{} holds {} bytes, expected {}",
            cent.display(),
            cbytes.len(),
            header.k * header.dim * 4
        )));
    }
    let flat: Vec<f64> = cbytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    let centroids: Vec<Vec<f64>> = flat.chunks(header.dim).map(<[f64]>::to_vec).collect();
    let abytes = fs::read(&assign).map_err(|e| GeomError::io(&assign, e))?;
    if abytes.len() != header.n_tokens * 4 {
        return Err(GeomError::Consistency(format!(
            "{} holds {} bytes, expected {}",
            assign.display(),
            abytes.len(),
            header.n_tokens * 4
        )));
    }
    let assignments = abytes
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
        .collect();
    let mut model = ClusterModel::from_parts(centroids, assignments, header.inertia, header.seed)?;
    model.inertia_history = header.inertia_history;
    Ok(model)
}
