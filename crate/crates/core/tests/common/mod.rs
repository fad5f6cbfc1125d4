//! Test-only oracles and random instance generators.
//!
//! The oracles work from the full symmetric matrix and enumerate group
//! members explicitly. They share no code with the library kernels.

#![allow(dead_code)]

use permanova::DistanceMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `s_W = Σ_g (1/n_g) Σ_{i<j in g} d_ij²`, enumerating groups one at a time.
pub fn oracle_sw(mat: &DistanceMatrix, labels: &[u32]) -> f64 {
    let n = mat.n_dims();
    let n_groups = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut total = 0.0;
    for g in 0..n_groups {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] as usize == g).collect();
        if members.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let d = mat.get(i, j) as f64;
                sum += d * d;
            }
        }
        total += sum / members.len() as f64;
    }
    total
}

/// `SS_T = (1/2N) Σ_{i≠j} d_ij²` over the full matrix.
pub fn oracle_ss_total(mat: &DistanceMatrix) -> f64 {
    let n = mat.n_dims();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = mat.get(i, j) as f64;
                sum += d * d;
            }
        }
    }
    sum / (2.0 * n as f64)
}

pub fn oracle_f(mat: &DistanceMatrix, labels: &[u32]) -> f64 {
    let n = mat.n_dims() as f64;
    let a = labels.iter().map(|&l| l as usize + 1).max().unwrap() as f64;
    let sst = oracle_ss_total(mat);
    let ssw = oracle_sw(mat, labels);
    ((sst - ssw) / (a - 1.0)) / (ssw / (n - a))
}

/// Reciprocal group sizes for arbitrary labels; empty groups get 1.0.
pub fn inv_sizes(labels: &[u32], n_groups: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_groups];
    for &l in labels {
        counts[l as usize] += 1;
    }
    counts.iter().map(|&c| 1.0 / c.max(1) as f64).collect()
}

/// The 4-object fixture: d01 = d23 = 1, every cross pair 2.
pub fn m4() -> DistanceMatrix {
    DistanceMatrix::from_rows(&[
        [0.0, 1.0, 2.0, 2.0],
        [1.0, 0.0, 2.0, 2.0],
        [2.0, 2.0, 0.0, 1.0],
        [2.0, 2.0, 1.0, 0.0],
    ])
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric matrix with zero diagonal and entries uniform in `[0, max)`.
pub fn random_matrix(rng: &mut impl Rng, n: usize, max: f32) -> DistanceMatrix {
    let mut data = vec![0f32; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen_range(0.0..max);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    permanova::validate_matrix(n, data).unwrap()
}

/// Like [`random_matrix`] but every entry is `k / 1024` with `k < 10240`,
/// so multiplying by 0.5, 2 or 10 is exact in `f32`.
pub fn dyadic_matrix(rng: &mut impl Rng, n: usize) -> DistanceMatrix {
    let mut data = vec![0f32; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen_range(0u32..10240) as f32 / 1024.0;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    permanova::validate_matrix(n, data).unwrap()
}

/// Labels in `0..n_groups` with every group present (requires `n >= n_groups`).
pub fn random_labels(rng: &mut impl Rng, n: usize, n_groups: usize) -> Vec<u32> {
    let mut labels: Vec<u32> = (0..n).map(|i| if i < n_groups { i as u32 } else { rng.gen_range(0..n_groups as u32) }).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Pure relative comparison; exact zeros compare equal only to zero.
pub fn rel_eq(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}
