mod common;

use common::cos;
use embedgeom::clustering::ClusterModel;
use embedgeom::polarity::{co_clustered_pairs, compute_alpha, compute_alpha_with, polarity_axis, AntonymPair, SpanScope};
use embedgeom::store::TokenRecord;
use embedgeom::synthetic::{random_unit, rng};
use embedgeom::{EmbeddingStore, GeomError};
use proptest::prelude::*;
use rand::Rng;

fn named(rows: &[(String, Vec<f64>)]) -> EmbeddingStore {
    let dim = rows[0].1.len();
    let matrix = rows.iter().flat_map(|(_, v)| v.iter().map(|&x| x as f32)).collect();
    let tokens = rows
        .iter()
        .enumerate()
        .map(|(i, (t, _))| TokenRecord::new(t.clone(), 1e-3, i).unwrap())
        .collect();
    EmbeddingStore::new("named", dim, matrix, tokens).unwrap()
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

fn add(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Random unit vector orthogonal to the given orthonormal vectors.
fn orthogonal_to(basis: &[&[f64]], r: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let mut w = random_unit(r, basis[0].len());
    for b in basis {
        let d: f64 = w.iter().zip(*b).map(|(x, y)| x * y).sum();
        w = add(&w, b, -d);
    }
    let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter().map(|x| x / n).collect()
}

/// One cluster around μ = 5·e0 whose members sit on the unit sphere around μ,
/// including μ ± u, with antonym pairs straddling μ close to the axis u.
fn planted_sphere(seed: u64) -> (EmbeddingStore, ClusterModel, Vec<AntonymPair>, Vec<f64>) {
    let dim = 12;
    let mut r = rng(seed);
    let mu: Vec<f64> = unit(dim, 0).iter().map(|x| 5.0 * x).collect();
    let e0 = unit(dim, 0);
    let u = orthogonal_to(&[&e0], &mut r);
    let mut rows = vec![("top".to_string(), add(&mu, &u, 1.0)), ("bottom".to_string(), add(&mu, &u, -1.0))];
    let mut pairs = Vec::new();
    for j in 0..8 {
        let v = orthogonal_to(&[&e0, &u], &mut r);
        let w = add(&u.iter().map(|x| 0.99 * x).collect::<Vec<_>>(), &v, (1.0f64 - 0.99 * 0.99).sqrt());
        rows.push((format!("hi{j}"), add(&mu, &w, 1.0)));
        rows.push((format!("lo{j}"), add(&mu, &w, -1.0)));
        pairs.push(AntonymPair::new(format!("hi{j}"), format!("lo{j}")).unwrap());
    }
    for j in 0..30 {
        let theta = r.random_range(0.0..std::f64::consts::PI);
        let v = orthogonal_to(&[&e0, &u], &mut r);
        let dir = add(&u.iter().map(|x| theta.cos() * x).collect::<Vec<_>>(), &v, theta.sin());
        rows.push((format!("m{j}"), add(&mu, &dir, 1.0)));
    }
    let store = named(&rows);
    let model = ClusterModel::from_parts(vec![mu], vec![0; rows.len()], 0.0, 0).unwrap();
    (store, model, pairs, u)
}

#[test]
fn planted_axis_and_alpha() {
    let (store, model, pairs, u) = planted_sphere(1);
    let res = compute_alpha(&store, &model, &pairs).unwrap();
    assert_eq!(res.n_alpha, 1);
    let c = &res.per_cluster[0];
    assert!(cos(&c.axis, &u).abs() > 0.99);
    assert!((c.radius - 1.0).abs() < 1e-5);
    assert!((c.alpha - 2.0).abs() < 0.1, "alpha {}", c.alpha);
    assert!((c.alpha - c.span / c.radius).abs() < 1e-12);
}

#[test]
fn symmetric_dipole_is_exactly_two() {
    let mu = vec![3.0, 0.0, 0.0, 0.0];
    let u = [0.0, 0.0, 0.6, 0.8];
    let r = 0.5;
    let mut rows = Vec::new();
    for j in 0..3 {
        rows.push((format!("a{j}"), add(&mu, &u, r)));
        rows.push((format!("b{j}"), add(&mu, &u, -r)));
    }
    let store = named(&rows);
    let pairs: Vec<AntonymPair> = (0..3).map(|j| AntonymPair::new(format!("a{j}"), format!("b{j}")).unwrap()).collect();
    let model = ClusterModel::from_parts(vec![mu], vec![0; 6], 0.0, 0).unwrap();
    for scope in [SpanScope::Members, SpanScope::Pair] {
        let c = &compute_alpha_with(&store, &model, &pairs, scope).unwrap().per_cluster[0];
        assert!((c.span - 2.0 * r).abs() < 1e-6);
        assert!((c.radius - r).abs() < 1e-6);
        assert!((c.alpha - 2.0).abs() < 1e-5);
    }
}

#[test]
fn axis_follows_larger_difference() {
    // differences 3·e1 and 1·e2: the 2×2 scatter diag(9, 1) has leading eigenvector e1
    let rows = vec![
        ("p".to_string(), vec![5.0, 1.5, 0.0]),
        ("q".to_string(), vec![5.0, -1.5, 0.0]),
        ("s".to_string(), vec![5.0, 0.0, 0.5]),
        ("t".to_string(), vec![5.0, 0.0, -0.5]),
    ];
    let store = named(&rows);
    let pairs = vec![AntonymPair::new("p", "q").unwrap(), AntonymPair::new("s", "t").unwrap()];
    let axis = polarity_axis(&pairs, &store).unwrap();
    assert!(axis[1].abs() > 1.0 - 1e-9);
    let swapped = vec![AntonymPair::new("q", "p").unwrap(), AntonymPair::new("t", "s").unwrap()];
    let again = polarity_axis(&swapped, &store).unwrap();
    assert!(cos(&axis, &again).abs() > 1.0 - 1e-12);
}

#[test]
fn coverage_and_straddling() {
    let rows = vec![
        ("hot".to_string(), vec![1.0, 0.1]),
        ("cold".to_string(), vec![1.0, -0.1]),
        ("up".to_string(), vec![0.1, 1.0]),
        ("down".to_string(), vec![1.0, 0.2]),
    ];
    let store = named(&rows);
    let model = ClusterModel::from_parts(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1, 1, 0, 1], 0.0, 0).unwrap();
    let pairs = vec![
        AntonymPair::new("hot", "cold").unwrap(),
        AntonymPair::new("up", "down").unwrap(),
        AntonymPair::new("big", "small").unwrap(),
    ];
    let co = co_clustered_pairs(&pairs, &store, &model);
    assert_eq!(co.by_cluster.get(&1).map(Vec::len), Some(1));
    assert_eq!(co.coverage.missing_word, 1);
    assert_eq!(co.coverage.cross_cluster, 1);

    let straddle = co_clustered_pairs(&pairs[1..2], &store, &model);
    assert!(straddle.by_cluster.is_empty());
    // one co-clustered pair is below the two-pair minimum
    assert!(matches!(compute_alpha(&store, &model, &pairs), Err(GeomError::InsufficientData(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn alpha_invariant_under_scale(seed in 0u64..500, scale in 0.2f64..20.0) {
        let (store, model, pairs, _) = planted_sphere(seed);
        let scaled = store.map_rows(|v| v.iter().map(|x| x * scale).collect()).unwrap();
        let smodel = ClusterModel::from_parts(
            model.centroids.iter().map(|c| c.iter().map(|x| x * scale).collect()).collect(),
            model.assignments.clone(),
            0.0,
            0,
        ).unwrap();
        let a = compute_alpha(&store, &model, &pairs).unwrap();
        let b = compute_alpha(&scaled, &smodel, &pairs).unwrap();
        prop_assert!((a.mean_alpha - b.mean_alpha).abs() < 1e-4);
    }
}
