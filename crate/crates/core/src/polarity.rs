//! Polarity coupling α.
//!
//! Antonym pairs whose two words share a cluster define that cluster's
//! polarity axis: the first principal direction of the pair difference
//! vectors, taken in both orientations. α for the cluster is the span of
//! centered projections onto the axis divided by the mean member distance to
//! the centroid.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterModel;
use crate::error::{GeomError, Result};
use crate::stats::pca_top;
use crate::store::EmbeddingStore;
use crate::util::{cosine, dot, mean, norm};

pub const MIN_PAIRS_PER_CLUSTER: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AntonymPair {
    pub word_a: String,
    pub word_b: String,
}

impl AntonymPair {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Result<Self> {
        let (word_a, word_b) = (a.into(), b.into());
        if word_a == word_b {
            return Err(GeomError::Data(format!("antonym pair repeats {word_a:?}")));
        }
        Ok(AntonymPair { word_a, word_b })
    }

    fn key(&self) -> (&str, &str) {
        if self.word_a <= self.word_b {
            (&self.word_a, &self.word_b)
        } else {
            (&self.word_b, &self.word_a)
        }
    }
}

/// Drops repeated pairs, treating `(a, b)` and `(b, a)` as the same; first occurrence wins.
pub fn dedup_pairs(pairs: Vec<AntonymPair>) -> Vec<AntonymPair> {
    let mut seen = HashSet::new();
    pairs
        .into_iter()
        .filter(|p| {
            let (a, b) = p.key();
            seen.insert((a.to_string(), b.to_string()))
        })
        .collect()
}

/// Parses the two-column antonym TSV; `#` starts a comment line.
pub fn parse_antonyms(text: &str) -> Result<Vec<AntonymPair>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(GeomError::Format(format!(
                "antonym list line {}: expected word_a<TAB>word_b",
                i + 1
            )));
        }
        pairs.push(AntonymPair::new(fields[0], fields[1])?);
    }
    Ok(dedup_pairs(pairs))
}

pub fn load_antonyms(path: &Path) -> Result<Vec<AntonymPair>> {
    let text = fs::read_to_string(path).map_err(|e| GeomError::io(path, e))?;
    parse_antonyms(&text)
}

/// How the antonym list matched the vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCoverage {
    pub total: usize,
    /// At least one word absent from the store.
    pub missing_word: usize,
    pub same_cluster: usize,
    pub cross_cluster: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoClustered {
    pub by_cluster: BTreeMap<usize, Vec<AntonymPair>>,
    pub coverage: PairCoverage,
}

fn locate(pair: &AntonymPair, store: &EmbeddingStore) -> Option<(usize, usize)> {
    Some((store.find_token(&pair.word_a)?, store.find_token(&pair.word_b)?))
}

/// Groups pairs whose two words are both present and share a cluster.
pub fn co_clustered_pairs(pairs: &[AntonymPair], store: &EmbeddingStore, model: &ClusterModel) -> CoClustered {
    let mut by_cluster: BTreeMap<usize, Vec<AntonymPair>> = BTreeMap::new();
    let mut coverage = PairCoverage {
        total: pairs.len(),
        ..PairCoverage::default()
    };
    for p in pairs {
        match locate(p, store) {
            None => coverage.missing_word += 1,
            Some((a, b)) => {
                let (ca, cb) = (model.assignments[a], model.assignments[b]);
                if ca == cb {
                    coverage.same_cluster += 1;
                    by_cluster.entry(ca).or_default().push(p.clone());
                } else {
                    coverage.cross_cluster += 1;
                }
            }
        }
    }
    CoClustered { by_cluster, coverage }
}

/// First principal axis of `{±(v(a) - v(b))}` over the given pairs.
pub fn polarity_axis(pairs: &[AntonymPair], store: &EmbeddingStore) -> Result<Vec<f64>> {
    let mut diffs = Vec::with_capacity(2 * pairs.len());
    for p in pairs {
        let (a, b) = locate(p, store).ok_or_else(|| {
            GeomError::Data(format!("pair ({}, {}) not in vocabulary", p.word_a, p.word_b))
        })?;
        let d: Vec<f64> = store
            .row_f64(a)
            .iter()
            .zip(store.row_f64(b))
            .map(|(x, y)| x - y)
            .collect();
        diffs.push(d.iter().map(|x| -x).collect());
        diffs.push(d);
    }
    if diffs.len() < 2 * MIN_PAIRS_PER_CLUSTER {
        return Err(GeomError::InsufficientData(format!(
            "polarity axis needs at least {MIN_PAIRS_PER_CLUSTER} pairs, got {}",
            pairs.len()
        )));
    }
    if diffs.iter().all(|d| d.iter().all(|&x| x == 0.0)) {
        return Err(GeomError::DegenerateInput("all antonym difference vectors are zero".into()));
    }
    let pca = pca_top(&diffs, 1)?;
    Ok(pca.axes.into_iter().next().expect("one component"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanScope {
    /// Projections of every cluster member.
    #[default]
    Members,
    /// Projections of the antonym-pair words only.
    Pair,
}

impl std::str::FromStr for SpanScope {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "members" => Ok(SpanScope::Members),
            "pair" => Ok(SpanScope::Pair),
            other => Err(GeomError::Format(format!("unknown span scope {other:?} (members|pair)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPolarity {
    pub cluster_id: usize,
    pub n_pairs: usize,
    pub axis: Vec<f64>,
    pub span: f64,
    pub radius: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityResult {
    pub per_cluster: Vec<ClusterPolarity>,
    pub mean_alpha: f64,
    pub n_alpha: usize,
    pub span_scope: SpanScope,
    /// Mean cosine of antonym pairs sharing a cluster; `None` without such pairs.
    pub same_cluster_pair_cos: Option<f64>,
    /// Mean cosine of antonym pairs split across clusters.
    pub cross_cluster_pair_cos: Option<f64>,
    pub coverage: PairCoverage,
}

pub fn compute_alpha(store: &EmbeddingStore, model: &ClusterModel, pairs: &[AntonymPair]) -> Result<PolarityResult> {
    compute_alpha_with(store, model, pairs, SpanScope::Members)
}

pub fn compute_alpha_with(
    store: &EmbeddingStore,
    model: &ClusterModel,
    pairs: &[AntonymPair],
    scope: SpanScope,
) -> Result<PolarityResult> {
    if model.assignments.len() != store.vocab_size() {
        return Err(GeomError::Consistency(format!(
            "model assigns {} tokens but store has {}",
            model.assignments.len(),
            store.vocab_size()
        )));
    }
    let co = co_clustered_pairs(pairs, store, model);
    let members = model.members();

    let mut per_cluster = Vec::new();
    for (&cluster, cluster_pairs) in &co.by_cluster {
        if cluster_pairs.len() < MIN_PAIRS_PER_CLUSTER {
            continue;
        }
        let axis = polarity_axis(cluster_pairs, store)?;
        let centroid = &model.centroids[cluster];
        let span_rows: Vec<usize> = match scope {
            SpanScope::Members => members[cluster].clone(),
            SpanScope::Pair => {
                let mut rows: Vec<usize> = cluster_pairs
                    .iter()
                    .filter_map(|p| locate(p, store))
                    .flat_map(|(a, b)| [a, b])
                    .collect();
                rows.sort_unstable();
                rows.dedup();
                rows
            }
        };
        let centered = |i: usize| -> Vec<f64> {
            store.row_f64(i).iter().zip(centroid).map(|(x, c)| x - c).collect()
        };
        let projections: Vec<f64> = span_rows.iter().map(|&i| dot(&centered(i), &axis)).collect();
        let span = projections.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - projections.iter().copied().fold(f64::INFINITY, f64::min);
        let radius = mean(&members[cluster].iter().map(|&i| norm(&centered(i))).collect::<Vec<_>>());
        if !(radius > 0.0) {
            return Err(GeomError::DegenerateInput(format!(
                "cluster {cluster} has zero radius"
            )));
        }
        per_cluster.push(ClusterPolarity {
            cluster_id: cluster,
            n_pairs: cluster_pairs.len(),
            axis,
            span,
            radius,
            alpha: span / radius,
        });
    }
    if per_cluster.is_empty() {
        return Err(GeomError::InsufficientData(format!(
            "no cluster holds {MIN_PAIRS_PER_CLUSTER}+ co-clustered antonym pairs ({} of {} pairs co-clustered)",
            co.coverage.same_cluster, co.coverage.total
        )));
    }

    let (mut same, mut cross) = (Vec::new(), Vec::new());
    for p in pairs {
        if let Some((a, b)) = locate(p, store) {
            let c = cosine(&store.row_f64(a), &store.row_f64(b));
            if model.assignments[a] == model.assignments[b] {
                same.push(c);
            } else {
                cross.push(c);
            }
        }
    }
    let alphas: Vec<f64> = per_cluster.iter().map(|c| c.alpha).collect();
    Ok(PolarityResult {
        mean_alpha: mean(&alphas),
        n_alpha: per_cluster.len(),
        per_cluster,
        span_scope: scope,
        same_cluster_pair_cos: (!same.is_empty()).then(|| mean(&same)),
        cross_cluster_pair_cos: (!cross.is_empty()).then(|| mean(&cross)),
        coverage: co.coverage,
    })
}
