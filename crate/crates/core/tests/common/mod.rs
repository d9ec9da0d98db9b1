#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use pbinfer::frame::{AnalysisFrame, OutcomeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gaussian elimination with full pivoting on a dense copy of `a`.
pub fn gauss_full_pivot(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, v)| {
            let mut row = r.clone();
            row.push(*v);
            row
        })
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                if m[i][j].abs() > best {
                    best = m[i][j].abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        assert!(best > 0.0, "singular oracle system");
        m.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        perm.swap(k, pj);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = m[k][n];
        for j in k + 1..n {
            s -= m[k][j] * x[j];
        }
        x[k] = s / m[k][k];
    }
    let mut out = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        out[p] = x[k];
    }
    out
}

/// Solves `Σ w_i g_i (y_i − g_iᵀ β) = 0` over the given rows.
pub fn normal_equations(g: &[Vec<f64>], y: &[f64], w: &[f64]) -> Vec<f64> {
    let d = g[0].len();
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for i in 0..g.len() {
        for j in 0..d {
            b[j] += w[i] * g[i][j] * y[i];
            for k in 0..d {
                a[j][k] += w[i] * g[i][j] * g[i][k];
            }
        }
    }
    gauss_full_pivot(&a, &b)
}

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Small linear frame with two covariates and one confounder. `mask`
/// decides which outcomes are hidden.
pub fn toy_linear(n: usize, seed: u64, mask: impl Fn(usize, f64) -> bool) -> (AnalysisFrame, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let z = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>());
    let truth: Vec<f64> = (0..n)
        .map(|i| 0.3 + 0.8 * x[(i, 0)] - 0.4 * x[(i, 1)] + 0.5 * z[(i, 0)] + (rng.random::<f64>() - 0.5))
        .collect();
    let y = truth
        .iter()
        .enumerate()
        .map(|(i, v)| if mask(i, *v) { None } else { Some(*v) })
        .collect();
    let frame = AnalysisFrame::new(OutcomeKind::Continuous, x, z, y).unwrap();
    (frame, truth)
}

pub fn noisy_surrogate(truth: &[f64], seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    truth
        .iter()
        .map(|v| v + scale * (rng.random::<f64>() - 0.5) + 0.1)
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
