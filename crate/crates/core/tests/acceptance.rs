//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::fs;
use std::time::Instant;

use common::{f_sf_oracle, lloyd, lloyd_best, sq_dist, t_sf_oracle};
use embedgeom::clustering::{centroid_cosine_matrix, fit_minibatch_kmeans, ClusterModel, KMeansParams};
use embedgeom::cohesion::compute_beta_centroid;
use embedgeom::detector::{analyze_trajectory, calibrate, classify_store, HallucinationType};
use embedgeom::polarity::{compute_alpha, AntonymPair};
use embedgeom::radial::radial_profile;
use embedgeom::report::{run_analyze, RunConfig};
use embedgeom::stats::{f_sf, t_sf};
use embedgeom::store::{store_files, TokenRecord};
use embedgeom::synthetic::{detector_fixture, gaussian_blobs, gaussian_vec, pipeline_fixture, rng};
use embedgeom::{load_store, save_store, EmbeddingStore, GeomError};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

struct Gate {
    failures: usize,
}

impl Gate {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn kmeans(k: usize) -> KMeansParams {
    KMeansParams {
        k,
        ..KMeansParams::default()
    }
}

/// `n` (norm, info) pairs, norms uniform on [5, 15], info = profile(r) + N(0, σ²).
fn radial_sample(n: usize, profile: impl Fn(f64) -> f64, sigma: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let norms: Vec<f64> = (0..n).map(|_| r.random_range(5.0..=15.0)).collect();
    let infos = norms
        .iter()
        .map(|&x| {
            let z: f64 = StandardNormal.sample(&mut r);
            profile(x) + sigma * z
        })
        .collect();
    (norms, infos)
}

fn radial_recovery(gate: &mut Gate) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let res = pool.install(|| {
        let (norms, infos) = radial_sample(20_000, |r| -10.0 * r * r + 5.0 * r + 300.0, 0.5, 1);
        radial_profile(&norms, &infos, 40, 10).unwrap()
    });
    let secs = start.elapsed().as_secs_f64();
    let rel = (res.lambda_r + 10.0).abs() / 10.0;
    gate.check(
        "radial recovery",
        rel < 0.05 && res.f_test.p_value < 0.001 && secs < 10.0,
        format!("lambda_r {:.4} (rel err {rel:.2e}), p {:.2e}, {secs:.3} s single-threaded", res.lambda_r, res.f_test.p_value),
    );
}

fn radial_null(gate: &mut Gate) {
    let quiet = (0..100)
        .filter(|&t| {
            let (norms, infos) = radial_sample(20_000, |r| 5.0 * r + 300.0, 0.5, 100 + t);
            radial_profile(&norms, &infos, 40, 10).unwrap().f_test.p_value > 0.05
        })
        .count();
    gate.check("radial null", quiet >= 90, format!("{quiet}/100 linear trials with p > 0.05"));
}

fn cohesion(gate: &mut Gate) {
    let blobs = gaussian_blobs(10, 1000, 16, 10.0, 1.0, 3).unwrap();
    let model = fit_minibatch_kmeans(&blobs.store, &kmeans(10)).unwrap();
    let beta = compute_beta_centroid(&blobs.store, &model, 300, 42).unwrap();
    gate.check(
        "cohesion planted blobs",
        beta.mean_beta > 0.2 && beta.p_value < 0.001,
        format!("mean beta_diff {:.4}, p {:.2e}", beta.mean_beta, beta.p_value),
    );
    let quiet = (0..20)
        .filter(|&t| {
            let mut assign = model.assignments.clone();
            assign.shuffle(&mut rng(900 + t));
            let shuffled = model.with_assignments(assign).unwrap();
            compute_beta_centroid(&blobs.store, &shuffled, 300, 42).unwrap().p_value > 0.05
        })
        .count();
    gate.check("cohesion shuffled null", quiet >= 18, format!("{quiet}/20 shuffles with p > 0.05"));
}

fn polarity(gate: &mut Gate) {
    let (k, pairs_per, dim, r_pole) = (4, 40, 16, 1.5);
    let mut r = rng(5);
    let mut matrix = Vec::new();
    let mut tokens = Vec::new();
    let mut pairs = Vec::new();
    let mut axes = Vec::new();
    for c in 0..k {
        // planted axis: a random unit vector in the dimensions no center uses
        let mut u = vec![0.0; dim];
        let tail = embedgeom::synthetic::random_unit(&mut r, dim - k);
        u[k..].copy_from_slice(&tail);
        for j in 0..pairs_per {
            for (sign, tag) in [(1.0, "a"), (-1.0, "b")] {
                let noise = gaussian_vec(&mut r, dim, 0.005);
                let v: Vec<f64> = (0..dim)
                    .map(|d| if d == c { 10.0 } else { 0.0 } + sign * r_pole * u[d] + noise[d])
                    .collect();
                let i = tokens.len();
                matrix.extend(v.iter().map(|&x| x as f32));
                tokens.push(TokenRecord::new(format!("{tag}{c}_{j}"), 1e-4, i).unwrap());
            }
            pairs.push(AntonymPair::new(format!("a{c}_{j}"), format!("b{c}_{j}")).unwrap());
        }
        axes.push(u);
    }
    let store = EmbeddingStore::new("dipoles", dim, matrix, tokens).unwrap();
    let model = fit_minibatch_kmeans(&store, &kmeans(k)).unwrap();
    let res = compute_alpha(&store, &model, &pairs).unwrap();
    let worst_cos = res
        .per_cluster
        .iter()
        .map(|c| axes.iter().map(|u| common::cos(&c.axis, u).abs()).fold(0.0, f64::max))
        .fold(1.0, f64::min);
    let worst_alpha = res.per_cluster.iter().map(|c| (c.alpha - 2.0).abs() / 2.0).fold(0.0, f64::max);
    gate.check(
        "polarity planted dipoles",
        res.n_alpha == k && worst_cos > 0.99 && worst_alpha < 0.05,
        format!("{} clusters, min |cos| {worst_cos:.6}, max alpha rel err {worst_alpha:.2e}", res.n_alpha),
    );
}

fn special_functions(gate: &mut Gate) {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for &(d1, d2) in &[(1.0, 40.0), (2.0, 10.0), (3.0, 30.0), (5.0, 5.0), (1.0, 3.0)] {
        for &f in &[0.5, 1.0, 2.0, 4.08, 10.0] {
            worst = worst.max((f_sf(f, d1, d2) - f_sf_oracle(f, d1, d2)).abs());
            cases += 1;
        }
    }
    for &df in &[1.0, 3.0, 10.0, 37.0, 120.0] {
        for &t in &[-1.5, 0.3, 1.0, 2.0, 6.0] {
            worst = worst.max((t_sf(t, df) - t_sf_oracle(t, df)).abs());
            cases += 1;
        }
    }
    let reference = f_sf(4.08, 1.0, 40.0);
    gate.check(
        "special functions",
        cases == 50 && worst < 1e-6 && (reference - 0.050).abs() < 2e-3,
        format!("{cases} grid points, max abs err {worst:.2e}; F(4.08; 1, 40) tail {reference:.5}"),
    );
}

fn clustering(gate: &mut Gate) {
    let two = gaussian_blobs(2, 200, 8, 20.0, 1.0, 4).unwrap();
    let model = fit_minibatch_kmeans(&two.store, &kmeans(2)).unwrap();
    let pure = (0..2).all(|c| {
        let labels: Vec<usize> = model.assignments.iter().zip(&two.labels).filter(|(a, _)| **a == c).map(|(_, l)| *l).collect();
        labels.windows(2).all(|w| w[0] == w[1])
    });
    let (oracle, _, _) = lloyd(&two.store.rows_f64(), &model.centroids);
    let drift = model.centroids.iter().zip(&oracle).map(|(a, b)| sq_dist(a, b).sqrt()).fold(0.0, f64::max);
    gate.check("clustering two-blob purity", pure && drift < 0.1, format!("purity 100%: {pure}, centroid offset from Lloyd {drift:.2e}"));

    let blobs = gaussian_blobs(5, 400, 12, 6.0, 1.0, 8).unwrap();
    let a = fit_minibatch_kmeans(&blobs.store, &kmeans(5)).unwrap();
    let b = fit_minibatch_kmeans(&blobs.store, &kmeans(5)).unwrap();
    let bits = |m: &ClusterModel| m.centroids.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    gate.check(
        "clustering reproducibility",
        a.assignments == b.assignments && bits(&a) == bits(&b),
        "two fits with seed 42 compared bit-for-bit".into(),
    );

    let mut worst: f64 = 0.0;
    for &(n, dim, sep, seed) in &[(3, 6, 5.0, 1), (5, 8, 4.0, 2), (8, 16, 6.0, 3), (10, 16, 10.0, 4)] {
        let blobs = gaussian_blobs(n, 300, dim, sep, 1.0, seed).unwrap();
        let model = fit_minibatch_kmeans(&blobs.store, &kmeans(n)).unwrap();
        let oracle = lloyd_best(&blobs.store.rows_f64(), n, 10);
        worst = worst.max(model.inertia / oracle - 1.0);
    }
    gate.check("clustering vs Lloyd", worst <= 0.02, format!("worst inertia excess {:.3}%", 100.0 * worst));
}

fn detector(gate: &mut Gate) {
    let fx = detector_fixture(5, 1000, 200, 200, 64, 11).unwrap();
    let model = fit_minibatch_kmeans(&fx.store, &kmeans(fx.n_clusters)).unwrap();
    let (t, index) = calibrate(&fx.store, &model).unwrap();
    let verdicts = classify_store(&fx.store, &model, &t, &index).unwrap();
    let rate = |rows: &[usize], flag| rows.iter().filter(|&&i| verdicts[i].has(flag)).count() as f64 / rows.len() as f64;
    let planted: std::collections::HashSet<usize> = fx.drift.iter().chain(&fx.gap).copied().collect();
    let clean: Vec<usize> = (0..fx.store.vocab_size()).filter(|i| !planted.contains(i)).collect();
    let (r1, r3, fp1) = (
        rate(&fx.drift, HallucinationType::Type1),
        rate(&fx.gap, HallucinationType::Type3),
        rate(&clean, HallucinationType::Type1),
    );
    gate.check(
        "detector planted anomalies",
        r1 >= 0.9 && r3 >= 0.9 && fp1 <= 0.15,
        format!("type1 recall {r1:.3}, type3 recall {r3:.3}, type1 rate on unplanted {fp1:.3}"),
    );

    let cos = centroid_cosine_matrix(&model);
    let mut r = rng(12);
    let mut all_transitions = true;
    let mut pairs_tested = 0;
    for i in 0..model.k {
        for j in i + 1..model.k {
            if cos[i][j] >= t.theta_jump {
                continue;
            }
            pairs_tested += 1;
            let seq: Vec<Vec<f64>> = (0..10)
                .map(|s| {
                    let c = &model.centroids[if s % 2 == 0 { i } else { j }];
                    c.iter().zip(gaussian_vec(&mut r, c.len(), 0.1)).map(|(x, z)| x + z).collect()
                })
                .collect();
            let v = analyze_trajectory(&seq, &model, &t).unwrap();
            all_transitions &= v[1..].iter().all(|v| v.has(HallucinationType::Type2));
        }
    }
    let members = model.members();
    let mut quiet_walks = true;
    for m in &members {
        let walk: Vec<Vec<f64>> = (0..25).map(|_| fx.store.row_f64(m[r.random_range(0..m.len())])).collect();
        quiet_walks &= analyze_trajectory(&walk, &model, &t).unwrap().iter().all(|v| !v.has(HallucinationType::Type2));
    }
    gate.check(
        "detector trajectories",
        pairs_tested > 0 && all_transitions && quiet_walks,
        format!("{pairs_tested} alternating centroid pairs all flagged: {all_transitions}; {} within-cluster walks quiet: {quiet_walks}", members.len()),
    );
}

fn format(gate: &mut Gate) {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(13);
    let rows: Vec<Vec<f64>> = (0..1000).map(|_| gaussian_vec(&mut r, 64, 1.0)).collect();
    let freqs: Vec<f64> = (0..1000).map(|_| r.random_range(1e-9..1.0)).collect();
    let store = EmbeddingStore::from_rows("roundtrip", &rows, &freqs).unwrap();
    let path = dir.path().join("rt");
    save_store(&store, &path).unwrap();
    let back = load_store(&path).unwrap();
    let exact = back == store && back.matrix().iter().zip(store.matrix()).all(|(a, b)| a.to_bits() == b.to_bits());

    let [_, payload, _] = store_files(&path);
    let good = fs::read(&payload).unwrap();
    fs::write(&payload, &good[..good.len() - 64 * 4]).unwrap();
    let short = matches!(load_store(&path), Err(GeomError::Consistency(_)));
    let mut bad = good.clone();
    bad[400..404].copy_from_slice(&f32::INFINITY.to_le_bytes());
    fs::write(&payload, &bad).unwrap();
    let nonfinite = matches!(load_store(&path), Err(GeomError::Data(_)));
    gate.check(
        "format round-trip",
        exact && short && nonfinite,
        format!("1000x64 bit-exact: {exact}; truncated payload -> ConsistencyError: {short}; non-finite entry -> DataError: {nonfinite}"),
    );
}

fn determinism(gate: &mut Gate) {
    let dir = tempfile::tempdir().unwrap();
    let fx = pipeline_fixture(8, 200, 20, 21).unwrap();
    let path = dir.path().join("fx.egem.json");
    save_store(&fx.store, &path).unwrap();
    let antonyms = dir.path().join("antonyms.tsv");
    fs::write(&antonyms, &fx.antonyms_tsv).unwrap();
    let config = RunConfig {
        k: 8,
        antonym_list_path: Some(antonyms),
        ..RunConfig::default()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_analyze(&path, &config, &a).unwrap();
    run_analyze(&path, &config, &b).unwrap();
    let same = ["fx.report.json", "fx.report.csv"].iter().all(|f| fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap());
    gate.check("end-to-end determinism", same, "report JSON and CSV byte-identical across two runs".into());
}

fn main() {
    let mut gate = Gate { failures: 0 };
    radial_recovery(&mut gate);
    radial_null(&mut gate);
    cohesion(&mut gate);
    polarity(&mut gate);
    special_functions(&mut gate);
    clustering(&mut gate);
    detector(&mut gate);
    format(&mut gate);
    determinism(&mut gate);
    println!("acceptance: {} failing", gate.failures);
    if gate.failures > 0 {
        std::process::exit(1);
    }
}
