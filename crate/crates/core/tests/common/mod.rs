//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    // split into panels so sharply peaked integrands are not missed
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (flo, fhi) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(f, lo, flo, hi, fhi);
            recurse(f, lo, flo, hi, fhi, m, fm, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// Regularized incomplete beta by quadrature after substituting t = sin²θ,
/// which removes the endpoint singularities for a, b ≥ 1/2. Normalized by the
/// full integral, so no gamma function is involved.
pub fn inc_beta_quadrature(x: f64, a: f64, b: f64) -> f64 {
    let g = |th: f64| 2.0 * th.sin().powf(2.0 * a - 1.0) * th.cos().powf(2.0 * b - 1.0);
    let upper = x.sqrt().asin();
    let part = integrate(&g, 0.0, upper, 1e-13);
    let rest = integrate(&g, upper, FRAC_PI_2, 1e-13);
    part / (part + rest)
}

pub fn f_sf_oracle(f: f64, d1: f64, d2: f64) -> f64 {
    inc_beta_quadrature(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)
}

pub fn t_sf_oracle(t: f64, df: f64) -> f64 {
    let tail = 0.5 * inc_beta_quadrature(df / (df + t * t), df / 2.0, 0.5);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Least-squares polynomial via the normal equations, solved by explicit
/// Gaussian elimination with partial pivoting on the raw (unstandardized) basis.
pub fn normal_equations_fit(xs: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    let p = degree + 1;
    let mut a = vec![vec![0.0; p + 1]; p];
    for (&x, &y) in xs.iter().zip(ys) {
        let pow: Vec<f64> = (0..p).map(|j| x.powi(j as i32)).collect();
        for i in 0..p {
            for j in 0..p {
                a[i][j] += pow[i] * pow[j];
            }
            a[i][p] += pow[i] * y;
        }
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for row in col + 1..p {
            let factor = a[row][col] / a[col][col];
            for c in col..=p {
                a[row][c] -= factor * a[col][c];
            }
        }
    }
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| a[i][j] * coef[j]).sum();
        coef[i] = (a[i][p] - s) / a[i][i];
    }
    coef
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / (na * nb)
}

/// Full-batch Lloyd iterations from the given starting centroids until the
/// assignment stops changing. Returns (centroids, assignments, inertia).
pub fn lloyd(rows: &[Vec<f64>], init: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>, f64) {
    let mut centroids = init.to_vec();
    let mut assign = vec![usize::MAX; rows.len()];
    for _ in 0..1000 {
        let next: Vec<usize> = rows
            .iter()
            .map(|r| {
                (0..centroids.len())
                    .min_by(|&i, &j| sq_dist(r, &centroids[i]).total_cmp(&sq_dist(r, &centroids[j])))
                    .unwrap()
            })
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = rows.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(r, _)| r).collect();
            if members.is_empty() {
                continue;
            }
            for (d, slot) in centroid.iter_mut().enumerate() {
                *slot = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    let inertia = rows.iter().zip(&assign).map(|(r, &a)| sq_dist(r, &centroids[a])).sum();
    (centroids, assign, inertia)
}

/// Best Lloyd solution over several seeded random-point starts.
pub fn lloyd_best(rows: &[Vec<f64>], k: usize, starts: u64) -> f64 {
    use rand::seq::index::sample;
    use rand::SeedableRng;
    let mut best = f64::INFINITY;
    for s in 0..starts {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + s);
        let init: Vec<Vec<f64>> = sample(&mut rng, rows.len(), k).into_iter().map(|i| rows[i].clone()).collect();
        best = best.min(lloyd(rows, &init).2);
    }
    best
}

/// Mean distance to the k nearest references by sorting every distance.
pub fn brute_knn(v: &[f64], reference: &[Vec<f64>], k: usize, skip: Option<usize>) -> f64 {
    let mut d: Vec<f64> = reference
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, r)| sq_dist(v, r).sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    d[..k].iter().sum::<f64>() / k as f64
}

/// Minimal CSV reader: header names and rows of parsed floats (empty → NaN).
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|f| f.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}
