//! Seeded generators for stores with planted structure. They double as the
//! reference construction for tests: each generator returns the ground truth
//! it planted alongside the store.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GeomError, Result};
use crate::store::{EmbeddingStore, TokenRecord};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize, sigma: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
        .collect()
}

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, dim, 1.0);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Store whose token `i` has norm `norms[i]` (random direction) and
/// self-information `infos[i]`.
pub fn store_with_profile(name: &str, norms: &[f64], infos: &[f64], dim: usize, seed: u64) -> Result<EmbeddingStore> {
    if norms.len() != infos.len() {
        return Err(GeomError::Consistency("norms and infos differ in length".into()));
    }
    let mut rng = rng(seed);
    let mut matrix = Vec::with_capacity(norms.len() * dim);
    let mut tokens = Vec::with_capacity(norms.len());
    for (i, (&r, &info)) in norms.iter().zip(infos).enumerate() {
        if info < 0.0 {
            return Err(GeomError::Data(format!("token {i}: negative self-information {info}")));
        }
        let u = random_unit(&mut rng, dim);
        matrix.extend(u.iter().map(|x| (x * r) as f32));
        tokens.push(TokenRecord::new(format!("tok{i}"), (-info).exp2(), i)?);
    }
    EmbeddingStore::new(name, dim, matrix, tokens)
}

/// `n` tokens with norms uniform on `[lo, hi]` and self-information
/// `profile(r) + N(0, noise_sigma²)`.
pub fn radial_store(
    n: usize,
    lo: f64,
    hi: f64,
    profile: impl Fn(f64) -> f64,
    noise_sigma: f64,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingStore> {
    let mut rng = rng(seed ^ 0x5EED);
    let norms: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let infos: Vec<f64> = norms
        .iter()
        .map(|&r| {
            let z: f64 = StandardNormal.sample(&mut rng);
            profile(r) + noise_sigma * z
        })
        .collect();
    store_with_profile("radial", &norms, &infos, dim, seed)
}

/// Random self-information in `[6, 20]` bits for fixture tokens.
fn fixture_frequency(rng: &mut ChaCha8Rng) -> f64 {
    (-rng.random_range(6.0..20.0f64)).exp2()
}

#[derive(Debug, Clone)]
pub struct Blobs {
    pub store: EmbeddingStore,
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
}

/// `n_blobs` isotropic Gaussian blobs of width `sigma`. Centers sit at
/// `separation/√2 · e_b`, so every pair of centers is `separation` apart.
pub fn gaussian_blobs(n_blobs: usize, per_blob: usize, dim: usize, separation: f64, sigma: f64, seed: u64) -> Result<Blobs> {
    if dim < n_blobs {
        return Err(GeomError::DegenerateInput(format!(
            "{n_blobs} orthogonal blob centers need dim >= {n_blobs}"
        )));
    }
    let mut rng = rng(seed);
    let offset = separation / 2f64.sqrt();
    let centers: Vec<Vec<f64>> = (0..n_blobs)
        .map(|b| {
            let mut c = vec![0.0; dim];
            c[b] = offset;
            c
        })
        .collect();
    let mut rows = Vec::with_capacity(n_blobs * per_blob);
    let mut labels = Vec::with_capacity(n_blobs * per_blob);
    let mut freqs = Vec::with_capacity(n_blobs * per_blob);
    for (b, c) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            let noise = gaussian_vec(&mut rng, dim, sigma);
            rows.push(c.iter().zip(noise).map(|(a, z)| a + z).collect());
            labels.push(b);
            freqs.push(fixture_frequency(&mut rng));
        }
    }
    let store = EmbeddingStore::from_rows("blobs", &rows, &freqs)?;
    Ok(Blobs { store, labels, centers })
}

/// A fixture for the full analysis pipeline: Gaussian blobs whose norms carry a
/// curved self-information profile, plus named antonym pairs that straddle
/// several clusters along a planted per-cluster axis.
#[derive(Debug, Clone)]
pub struct PipelineFixture {
    pub store: EmbeddingStore,
    pub antonyms_tsv: String,
}

pub fn pipeline_fixture(n_clusters: usize, per_cluster: usize, dim: usize, seed: u64) -> Result<PipelineFixture> {
    if dim < 2 * n_clusters {
        return Err(GeomError::DegenerateInput("dim must be at least 2 × clusters".into()));
    }
    let mut rng = rng(seed);
    let mut matrix = Vec::new();
    let mut tokens = Vec::new();
    let mut antonyms = String::from("# planted fixture pairs\n");
    let mut push = |name: String, v: &[f64], tokens: &mut Vec<TokenRecord>| -> Result<()> {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // curved radial profile: information rises with norm and saturates
        let info = (2.0 + 3.0 * r - 0.12 * r * r).max(0.5);
        let i = tokens.len();
        matrix.extend(v.iter().map(|&x| x as f32));
        tokens.push(TokenRecord::new(name, (-info).exp2(), i)?);
        Ok(())
    };
    for c in 0..n_clusters {
        let scale = 4.0 + 4.0 * c as f64 / n_clusters as f64;
        for m in 0..per_cluster {
            let mut v = gaussian_vec(&mut rng, dim, 0.6);
            v[c] += scale;
            // polarity axis for this cluster lives in dimension n_clusters + c
            let pole = if m % 2 == 0 { 1.0 } else { -1.0 };
            v[n_clusters + c] += pole * 1.5;
            let name = if m < 6 {
                format!("{}{}_{}", if pole > 0.0 { "pos" } else { "neg" }, c, m / 2)
            } else {
                format!("w{c}_{m}")
            };
            push(name, &v, &mut tokens)?;
        }
        for j in 0..3 {
            antonyms.push_str(&format!("pos{c}_{j}\tneg{c}_{j}\n"));
        }
    }
    antonyms.push_str("absent\tmissing\n");
    let store = EmbeddingStore::new("fixture", dim, matrix, tokens)?;
    Ok(PipelineFixture {
        store,
        antonyms_tsv: antonyms,
    })
}

/// A store with planted anomalies for the detector. Clusters sit at `±R·e_a`
/// on the first `n_axes` axes, so the global mean is near the origin.
#[derive(Debug, Clone)]
pub struct DetectorFixture {
    pub store: EmbeddingStore,
    /// Center-drift tokens: tiny norm around the global mean.
    pub drift: Vec<usize>,
    /// Coverage-gap tokens: norm `2R`, orthogonal to every cluster axis.
    pub gap: Vec<usize>,
    pub n_clusters: usize,
}

pub fn detector_fixture(
    n_axes: usize,
    per_cluster: usize,
    n_drift: usize,
    n_gap: usize,
    dim: usize,
    seed: u64,
) -> Result<DetectorFixture> {
    const RADIUS: f64 = 10.0;
    if dim <= n_axes + 1 {
        return Err(GeomError::DegenerateInput("dim must exceed the number of cluster axes".into()));
    }
    let mut rng = rng(seed);
    let mut rows = Vec::new();
    for a in 0..n_axes {
        for sign in [1.0, -1.0] {
            for _ in 0..per_cluster {
                let mut v = gaussian_vec(&mut rng, dim, 1.0);
                v[a] += sign * RADIUS;
                rows.push(v);
            }
        }
    }
    let global: Vec<f64> = (0..dim).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / rows.len() as f64).collect();
    let drift: Vec<usize> = (rows.len()..rows.len() + n_drift).collect();
    for _ in 0..n_drift {
        let noise = gaussian_vec(&mut rng, dim, 0.05);
        rows.push(global.iter().zip(noise).map(|(g, z)| g + z).collect());
    }
    let gap: Vec<usize> = (rows.len()..rows.len() + n_gap).collect();
    for _ in 0..n_gap {
        let u = random_unit(&mut rng, dim - n_axes);
        let mut v = vec![0.0; n_axes];
        v.extend(u.iter().map(|x| x * 2.0 * RADIUS));
        rows.push(v);
    }
    let freqs: Vec<f64> = (0..rows.len()).map(|_| fixture_frequency(&mut rng)).collect();
    Ok(DetectorFixture {
        store: EmbeddingStore::from_rows("detector", &rows, &freqs)?,
        drift,
        gap,
        n_clusters: 2 * n_axes,
    })
}
