//! Within-group sum of squares (`s_W`) kernels and the permutation driver.
//!
//! All three kernels compute
//!
//! ```text
//! s_W = sum over row < col with labels[row] == labels[col] of
//!       d(row, col)^2 / size(labels[row])
//! ```
//!
//! reading only the strict upper triangle of the matrix. They differ in the
//! traversal order and in how the work is spread across threads:
//!
//! * [`sw_brute_force`] walks the triangle row by row.
//! * [`sw_tiled`] walks it in `tile`×`tile` blocks and applies the group
//!   reciprocal once per (row, block) instead of once per element.
//! * [`sw_two_level`] splits the flattened pair space into contiguous chunks
//!   reduced in parallel; [`sw_batch`] additionally runs permutations
//!   concurrently, giving parallelism at both levels.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grouping::Grouping;
use crate::matrix::DistanceMatrix;
use crate::permute::PermutationBatch;

pub const DEFAULT_TILE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Brute,
    Tiled,
    TwoLevel,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Brute, KernelKind::Tiled, KernelKind::TwoLevel];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Brute => "brute",
            KernelKind::Tiled => "tiled",
            KernelKind::TwoLevel => "two-level",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "brute" => Ok(KernelKind::Brute),
            "tiled" => Ok(KernelKind::Tiled),
            "two-level" | "two_level" => Ok(KernelKind::TwoLevel),
            other => Err(format!("unknown kernel '{other}' (valid: brute, tiled, two-level)")),
        }
    }
}

/// Edge length, in objects, of the square blocks used by [`sw_tiled`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileConfig {
    tile: usize,
}

impl TileConfig {
    pub fn new(tile: usize) -> Result<Self> {
        if tile == 0 {
            return Err(Error::TileZero);
        }
        Ok(Self { tile })
    }

    pub fn tile(self) -> usize {
        self.tile
    }
}

impl Default for TileConfig {
    fn default() -> Self {
        Self { tile: DEFAULT_TILE }
    }
}

/// One `s_W` value per permutation, in batch order.
#[derive(Debug, Clone, PartialEq)]
pub struct SwResults {
    pub values: Vec<f64>,
}

impl SwResults {
    /// Sum of all values, accumulated in batch order.
    pub fn checksum(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[inline]
fn debug_check(mat: &DistanceMatrix, labels: &[u32], inv_group_sizes: &[f64]) {
    debug_assert_eq!(labels.len(), mat.n_dims(), "label row length must equal n_dims");
    debug_assert!(
        labels.iter().all(|&l| (l as usize) < inv_group_sizes.len()),
        "label outside of inv_group_sizes"
    );
}

/// Adds `val² · inv` for every column whose label matches `group`.
#[inline(always)]
fn accumulate_row(mut s_w: f64, values: &[f32], labels: &[u32], group: u32, inv: f64) -> f64 {
    for (&val, &label) in values.iter().zip(labels) {
        // adding +0.0 for non-matching columns leaves the sum unchanged
        let keep = (label == group) as u32 as f64;
        let val = val as f64;
        s_w += val * val * inv * keep;
    }
    s_w
}

/// Row-by-row traversal of the strict upper triangle.
pub fn sw_brute_force(mat: &DistanceMatrix, labels: &[u32], inv_group_sizes: &[f64]) -> f64 {
    debug_check(mat, labels, inv_group_sizes);
    let n = mat.n_dims();
    let mut s_w = 0.0f64;
    // no columns in the last row
    for row in 0..n - 1 {
        let group = labels[row];
        let inv = inv_group_sizes[group as usize];
        s_w = accumulate_row(s_w, &mat.row(row)[row + 1..], &labels[row + 1..], group, inv);
    }
    s_w
}

/// Blocked traversal of the strict upper triangle.
///
/// Row tiles start at `0, tile, 2·tile, ..` and, for each, column tiles
/// start at `trow + 1, trow + 1 + tile, ..`; blocks straddling the diagonal
/// are clipped with `max(tcol, row + 1)`.
pub fn sw_tiled(mat: &DistanceMatrix, labels: &[u32], inv_group_sizes: &[f64], cfg: TileConfig) -> f64 {
    debug_check(mat, labels, inv_group_sizes);
    let n = mat.n_dims();
    let tile = cfg.tile();
    let mut s_w = 0.0f64;
    for trow in (0..n - 1).step_by(tile) {
        let row_end = (trow + tile).min(n - 1);
        for tcol in (trow + 1..n).step_by(tile) {
            let max_col = (tcol + tile).min(n);
            for row in trow..row_end {
                let min_col = tcol.max(row + 1);
                if min_col >= max_col {
                    continue;
                }
                let group = labels[row];
                let values = &mat.row(row)[min_col..max_col];
                let mut local = 0.0f64;
                for (&val, &label) in values.iter().zip(&labels[min_col..max_col]) {
                    if label == group {
                        let val = val as f64;
                        local += val * val;
                    }
                }
                s_w += local * inv_group_sizes[group as usize];
            }
        }
    }
    s_w
}

/// Number of strict-upper-triangle pairs in rows `0..row`.
#[inline]
fn pairs_before_row(n: u64, row: u64) -> u64 {
    row * (2 * n - row - 1) / 2
}

/// Row containing flattened pair index `k` (`k < n(n-1)/2`).
fn row_of_pair(n: u64, k: u64) -> u64 {
    let (mut lo, mut hi) = (0u64, n - 1);
    // largest row with pairs_before_row(row) <= k
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pairs_before_row(n, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Brute-force accumulation over flattened pair indices `start..end`.
fn sw_pair_range(mat: &DistanceMatrix, labels: &[u32], inv_group_sizes: &[f64], start: u64, end: u64) -> f64 {
    if start >= end {
        return 0.0;
    }
    let n = mat.n_dims() as u64;
    let mut row = row_of_pair(n, start);
    let mut col = row + 1 + (start - pairs_before_row(n, row));
    let mut remaining = end - start;
    let mut s_w = 0.0f64;
    while remaining > 0 {
        let take = remaining.min(n - col);
        let (r, c0, c1) = (row as usize, col as usize, (col + take) as usize);
        let group = labels[r];
        let inv = inv_group_sizes[group as usize];
        s_w = accumulate_row(s_w, &mat.row(r)[c0..c1], &labels[c0..c1], group, inv);
        remaining -= take;
        row += 1;
        col = row + 1;
    }
    s_w
}

/// Brute-force pair coverage with the flattened `(row, col)` space split
/// into `parts` contiguous chunks evaluated concurrently.
///
/// Each chunk keeps a private partial sum; partials are added in chunk
/// order, so the result depends on `parts` but never on thread scheduling.
pub fn sw_two_level(mat: &DistanceMatrix, labels: &[u32], inv_group_sizes: &[f64], parts: usize) -> f64 {
    debug_check(mat, labels, inv_group_sizes);
    let parts = parts.max(1) as u64;
    let n = mat.n_dims() as u64;
    let total = n * (n - 1) / 2;
    let bound = |i: u64| ((total as u128 * i as u128) / parts as u128) as u64;
    let partials: Vec<f64> = (0..parts)
        .into_par_iter()
        .map(|i| sw_pair_range(mat, labels, inv_group_sizes, bound(i), bound(i + 1)))
        .collect();
    partials.iter().sum()
}

/// Evaluates one kernel on a single label row.
pub fn sw_one(
    mat: &DistanceMatrix,
    labels: &[u32],
    inv_group_sizes: &[f64],
    kernel: KernelKind,
    cfg: TileConfig,
    parts: usize,
) -> f64 {
    match kernel {
        KernelKind::Brute => sw_brute_force(mat, labels, inv_group_sizes),
        KernelKind::Tiled => sw_tiled(mat, labels, inv_group_sizes, cfg),
        KernelKind::TwoLevel => sw_two_level(mat, labels, inv_group_sizes, parts),
    }
}

/// Computes `s_W` for every row of `batch` on a pool of `workers` threads.
///
/// Brute and tiled results are bit-identical for any worker count. The
/// two-level kernel splits each matrix into `workers` chunks, so its values
/// are reproducible for a fixed worker count and agree across worker counts
/// up to summation order.
pub fn sw_batch(
    mat: &DistanceMatrix,
    batch: &PermutationBatch,
    grouping: &Grouping,
    kernel: KernelKind,
    cfg: TileConfig,
    workers: usize,
) -> Result<SwResults> {
    if workers == 0 {
        return Err(Error::WorkerCountZero);
    }
    if batch.n_dims() != mat.n_dims() {
        return Err(Error::GroupingSizeMismatch { labels: batch.n_dims(), n_dims: mat.n_dims() });
    }
    let inv = grouping.inv_group_sizes();
    let mut values = vec![0.0f64; batch.n_perms()];
    if workers == 1 {
        for (p, out) in values.iter_mut().enumerate() {
            *out = sw_one(mat, batch.row(p), inv, kernel, cfg, 1);
        }
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        pool.install(|| {
            values.par_iter_mut().enumerate().for_each(|(p, out)| {
                *out = sw_one(mat, batch.row(p), inv, kernel, cfg, workers);
            })
        });
    }
    Ok(SwResults { values })
}
