mod common;

use common::parse_csv;
use embedgeom::diagnostics::{diagnose_space, diagnose_space_with, emit_pca_plotdata, DiagnoseOptions};
use embedgeom::synthetic::{gaussian_vec, random_unit, rng};
use embedgeom::EmbeddingStore;
use rand::Rng;

fn store(rows: &[Vec<f64>]) -> EmbeddingStore {
    EmbeddingStore::from_rows("diag", rows, &vec![0.01; rows.len()]).unwrap()
}

#[test]
fn rank_one_data() {
    let mut r = rng(2);
    let dir = random_unit(&mut r, 10);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let t = r.random_range(0.5..4.0);
            dir.iter().map(|x| x * t).collect()
        })
        .collect();
    let d = diagnose_space(&store(&rows), 5000, 1).unwrap();
    assert_eq!(d.effective_dim_95, 1);
    assert!((d.pca_cumulative[0] - 1.0).abs() < 1e-6);
    assert!((d.utilization - 0.1).abs() < 1e-12);
    assert!(d.mean_pairwise_cos > 0.999);
}

#[test]
fn equal_norms_have_zero_spread() {
    let mut r = rng(3);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| random_unit(&mut r, 8).iter().map(|x| 2.0 * x).collect()).collect();
    let d = diagnose_space(&store(&rows), 1000, 1).unwrap();
    assert!(d.norm_cov < 1e-6);
}

#[test]
fn isotropic_cloud_has_linear_spectrum() {
    let mut r = rng(4);
    let dim = 16;
    let rows: Vec<Vec<f64>> = (0..4000).map(|_| gaussian_vec(&mut r, dim, 1.0)).collect();
    let d = diagnose_space(&store(&rows), 20_000, 1).unwrap();
    for (m, c) in d.pca_cumulative.iter().enumerate() {
        let line = (m + 1) as f64 / dim as f64;
        assert!((c - line).abs() < 0.05, "component {}: {c} vs {line}", m + 1);
    }
    assert!(d.mean_pairwise_cos.abs() < 0.01);
    assert!((d.pca_cumulative.last().unwrap() - 1.0).abs() < 1e-6);
    assert!(d.pca_cumulative.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(d.utilization, d.effective_dim_95 as f64 / dim as f64);
}

#[test]
fn centering_changes_offset_clouds() {
    let mut r = rng(5);
    let rows: Vec<Vec<f64>> = (0..1000)
        .map(|_| gaussian_vec(&mut r, 6, 1.0).into_iter().enumerate().map(|(i, x)| x + if i == 0 { 20.0 } else { 0.0 }).collect())
        .collect();
    let s = store(&rows);
    let raw = diagnose_space_with(&s, &DiagnoseOptions { center: false, ..DiagnoseOptions::default() }).unwrap();
    let centered = diagnose_space_with(&s, &DiagnoseOptions::default()).unwrap();
    assert!(raw.pca_cumulative[0] > 0.9);
    assert!(centered.pca_cumulative[0] < 0.4);
}

#[test]
fn pca_csv_parses_back_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(6);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| gaussian_vec(&mut r, 5, 1.0)).collect();
    let d = diagnose_space(&store(&rows), 1000, 1).unwrap();
    let path = dir.path().join("pca.csv");
    emit_pca_plotdata(&d, &path).unwrap();
    let (header, parsed) = parse_csv(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(header, vec!["component", "cumulative_variance"]);
    assert_eq!(parsed.len(), 5);
    assert!(parsed.windows(2).all(|w| w[1][1] >= w[0][1]));
    for (row, c) in parsed.iter().zip(&d.pca_cumulative) {
        assert!((row[1] - c).abs() < 1e-9);
    }
}
