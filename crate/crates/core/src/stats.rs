//! Full PERMANOVA test assembled around the `s_W` kernels.

use crate::error::{Error, Result};
use crate::grouping::Grouping;
use crate::kernels::{sw_batch, KernelKind, TileConfig};
use crate::matrix::DistanceMatrix;
use crate::permute::generate_batch;

/// Relative slack when counting permuted statistics that reach the observed
/// one. Permutations that reproduce the observed partition sum the same terms
/// in a different order and can land a few ulps below it.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PermanovaResult {
    pub f_observed: f64,
    pub p_value: f64,
    /// Total permutation rows, the observed grouping included.
    pub n_perms: usize,
    pub n_dims: usize,
    pub n_groups: usize,
    pub ss_total: f64,
    pub ss_within_observed: f64,
}

/// Total sum of squares: `(1/N) · Σ_{row<col} d²`.
pub fn ss_total(mat: &DistanceMatrix) -> f64 {
    let n = mat.n_dims();
    let mut sum = 0.0f64;
    for row in 0..n - 1 {
        for &val in &mat.row(row)[row + 1..] {
            let val = val as f64;
            sum += val * val;
        }
    }
    sum / n as f64
}

/// Pseudo-F ratio `(SS_A / (a-1)) / (SS_W / (N-a))` with `SS_A = SS_T - SS_W`.
///
/// Returns `+inf` when `s_w` is exactly zero.
pub fn pseudo_f(ss_total: f64, s_w: f64, n_dims: usize, n_groups: usize) -> Result<f64> {
    if n_groups < 2 || n_dims <= n_groups {
        return Err(Error::DegenerateDesign { n_dims, n_groups });
    }
    if s_w == 0.0 {
        return Ok(f64::INFINITY);
    }
    let between = (ss_total - s_w) / (n_groups - 1) as f64;
    let within = s_w / (n_dims - n_groups) as f64;
    Ok(between / within)
}

/// Runs the permutation test with `n_perms` rows in total: the observed
/// grouping plus `n_perms - 1` seeded shuffles.
///
/// The p-value is the fraction of rows whose pseudo-F is `>=` the observed
/// one, within [`TIE_TOLERANCE`]; the observed row always counts itself.
pub fn permanova(
    mat: &DistanceMatrix,
    grouping: &Grouping,
    n_perms: usize,
    seed: u64,
    kernel: KernelKind,
    cfg: TileConfig,
    workers: usize,
) -> Result<PermanovaResult> {
    if n_perms == 0 {
        return Err(Error::NoPermutations);
    }
    let n_dims = mat.n_dims();
    if grouping.n_dims() != n_dims {
        return Err(Error::GroupingSizeMismatch { labels: grouping.n_dims(), n_dims });
    }
    let n_groups = grouping.n_groups();
    let total = ss_total(mat);
    let batch = generate_batch(grouping, n_perms - 1, seed);
    let sw = sw_batch(mat, &batch, grouping, kernel, cfg, workers)?;

    let f_stats = sw
        .values
        .iter()
        .map(|&s_w| pseudo_f(total, s_w, n_dims, n_groups))
        .collect::<Result<Vec<f64>>>()?;
    let f_observed = f_stats[0];
    let at_least = f_stats.iter().filter(|&&f| reaches(f, f_observed)).count();

    Ok(PermanovaResult {
        f_observed,
        p_value: at_least as f64 / n_perms as f64,
        n_perms,
        n_dims,
        n_groups,
        ss_total: total,
        ss_within_observed: sw.values[0],
    })
}

/// `f >= observed` with relative slack; infinities only reach infinity.
fn reaches(f: f64, observed: f64) -> bool {
    if observed.is_infinite() {
        return f >= observed;
    }
    f >= observed - TIE_TOLERANCE * observed.abs()
}
