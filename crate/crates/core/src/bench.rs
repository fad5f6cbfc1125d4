//! Timing harness for the `s_W` kernels.
//!
//! A suite sweeps a grid of kernels × matrix sizes × permutation counts ×
//! worker counts × tile sizes. Only the [`sw_batch`] call is timed; the
//! workload and its permutations are built once per (n_dims, n_perms) and
//! shared by every kernel at that point, so checksums are comparable.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grouping::{build_grouping, Grouping};
use crate::kernels::{sw_batch, KernelKind, TileConfig};
use crate::matrix::DistanceMatrix;
use crate::permute::{fisher_yates, generate_batch, mix64, stream_rng};

/// Relative tolerance for cross-kernel checksum agreement.
pub const CHECKSUM_TOLERANCE: f64 = 1e-9;

/// Stream id used to shuffle synthetic labels; permutation rows use small ids.
const LABEL_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub kernel: KernelKind,
    pub n_dims: usize,
    pub n_perms: usize,
    pub workers: usize,
    /// Tile edge for the tiled kernel; 0 for kernels that do not tile.
    pub tile: usize,
    pub repetition: usize,
    pub seconds: f64,
    pub checksum: f64,
}

/// Builds a deterministic random workload: a symmetric matrix with entries
/// in `[0, 1)` and `n_groups` near-equal groups in shuffled order.
///
/// Each entry is a hash of `(seed, row, col)`, so rows are filled
/// independently and in parallel.
pub fn synthesize_workload(n_dims: usize, n_groups: usize, seed: u64) -> Result<(DistanceMatrix, Grouping)> {
    if n_dims < 2 {
        return Err(Error::TooSmall(n_dims));
    }
    if n_groups < 2 || n_groups >= n_dims {
        return Err(Error::DegenerateDesign { n_dims, n_groups });
    }
    let len = n_dims.checked_mul(n_dims).ok_or(Error::AllocationFailure { bytes: usize::MAX })?;
    let mut data: Vec<f32> = Vec::new();
    data.try_reserve_exact(len).map_err(|_| Error::AllocationFailure { bytes: len.saturating_mul(4) })?;
    data.resize(len, 0.0);

    let key = mix64(seed);
    let n = n_dims as u64;
    data.par_chunks_mut(n_dims).enumerate().for_each(|(row, out)| {
        let row = row as u64;
        for (col, v) in out.iter_mut().enumerate() {
            let col = col as u64;
            if col != row {
                let (lo, hi) = if row < col { (row, col) } else { (col, row) };
                let h = mix64(key ^ (lo * n + hi));
                *v = (h >> 40) as f32 * (1.0 / (1u64 << 24) as f32);
            }
        }
    });

    let mut labels: Vec<usize> = (0..n_dims).map(|i| i % n_groups).collect();
    fisher_yates(&mut labels, &mut stream_rng(seed, LABEL_STREAM));
    let grouping = build_grouping(&labels)?;
    Ok((DistanceMatrix::new_unchecked(n_dims, data), grouping))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub kernels: Vec<KernelKind>,
    pub dims: Vec<usize>,
    pub perms: Vec<usize>,
    pub workers: Vec<usize>,
    pub tiles: Vec<usize>,
}

impl BenchGrid {
    /// Desk-scale default: 1k and 4k objects, 64 and 256 permutations,
    /// one worker and every logical core.
    pub fn desk_default(all_workers: usize) -> Self {
        let mut workers = vec![1, all_workers.max(1)];
        workers.dedup();
        Self {
            kernels: KernelKind::ALL.to_vec(),
            dims: vec![1024, 4096],
            perms: vec![64, 256],
            workers,
            tiles: vec![32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub grid: BenchGrid,
    pub reps: usize,
    pub warmups: usize,
    pub seed: u64,
    pub n_groups: usize,
}

impl BenchConfig {
    pub fn new(grid: BenchGrid) -> Self {
        Self { grid, reps: 3, warmups: 1, seed: 0, n_groups: 4 }
    }

    fn check(&self) -> Result<()> {
        let g = &self.grid;
        let empty = [
            ("kernels", g.kernels.is_empty()),
            ("dims", g.dims.is_empty()),
            ("perms", g.perms.is_empty()),
            ("workers", g.workers.is_empty()),
            ("tiles", g.tiles.is_empty() && g.kernels.contains(&KernelKind::Tiled)),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidConfig(format!("grid list '{name}' is empty")));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if g.perms.contains(&0) {
            return Err(Error::NoPermutations);
        }
        if g.workers.contains(&0) {
            return Err(Error::WorkerCountZero);
        }
        if g.tiles.contains(&0) {
            return Err(Error::TileZero);
        }
        Ok(())
    }
}

pub fn run_suite(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    run_suite_with(config, |_| {})
}

/// Runs the suite, calling `on_point` with the records of each grid point as
/// soon as it finishes.
pub fn run_suite_with(config: &BenchConfig, mut on_point: impl FnMut(&[BenchRecord])) -> Result<Vec<BenchRecord>> {
    config.check()?;
    let grid = &config.grid;
    let mut records = Vec::new();
    for &n_dims in &grid.dims {
        let (mat, grouping) = synthesize_workload(n_dims, config.n_groups, config.seed)?;
        for &n_perms in &grid.perms {
            let batch = generate_batch(&grouping, n_perms - 1, config.seed);
            for &kernel in &grid.kernels {
                let tiles = if kernel == KernelKind::Tiled { grid.tiles.clone() } else { vec![0] };
                for &workers in &grid.workers {
                    for &tile in &tiles {
                        let cfg = if tile == 0 { TileConfig::default() } else { TileConfig::new(tile)? };
                        for _ in 0..config.warmups {
                            sw_batch(&mat, &batch, &grouping, kernel, cfg, workers)?;
                        }
                        let start = records.len();
                        for repetition in 0..config.reps {
                            let t0 = Instant::now();
                            let sw = sw_batch(&mat, &batch, &grouping, kernel, cfg, workers)?;
                            let seconds = t0.elapsed().as_secs_f64().max(1e-9);
                            records.push(BenchRecord {
                                kernel,
                                n_dims,
                                n_perms,
                                workers,
                                tile,
                                repetition,
                                seconds,
                                checksum: sw.checksum(),
                            });
                        }
                        on_point(&records[start..]);
                    }
                }
            }
        }
    }
    Ok(records)
}

pub const CSV_HEADER: &str = "kernel,n_dims,n_perms,workers,tile,rep,seconds,checksum";

pub fn emit_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6e},{:.16e}\n",
            r.kernel, r.n_dims, r.n_perms, r.workers, r.tile, r.repetition, r.seconds, r.checksum
        ));
    }
    out
}

/// Statistics for one (workload, kernel, workers, tile) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n_dims: usize,
    pub n_perms: usize,
    pub kernel: KernelKind,
    pub workers: usize,
    pub tile: usize,
    pub reps: usize,
    pub min_seconds: f64,
    pub median_seconds: f64,
    /// Baseline min time over this row's min time.
    pub speedup: f64,
    /// Checksums agree with the first record of the same workload.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn all_valid(&self) -> bool {
        self.rows.iter().all(|r| r.valid)
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn checksums_agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= CHECKSUM_TOLERANCE * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Groups records by (workload, kernel, workers, tile), in first-appearance
/// order, and reports min/median seconds with the speedup over the
/// single-worker brute-force row of the same workload. Without such a row
/// the workload's first group is the baseline.
pub fn summarize(records: &[BenchRecord]) -> Summary {
    type Key = (usize, usize, KernelKind, usize, usize);
    let mut keys: Vec<Key> = Vec::new();
    let mut members: Vec<Vec<&BenchRecord>> = Vec::new();
    for r in records {
        let key = (r.n_dims, r.n_perms, r.kernel, r.workers, r.tile);
        match keys.iter().position(|k| *k == key) {
            Some(i) => members[i].push(r),
            None => {
                keys.push(key);
                members.push(vec![r]);
            }
        }
    }

    let mut rows: Vec<SummaryRow> = keys
        .iter()
        .zip(&members)
        .map(|(&(n_dims, n_perms, kernel, workers, tile), group)| {
            let mut secs: Vec<f64> = group.iter().map(|r| r.seconds).collect();
            secs.sort_by(f64::total_cmp);
            let reference = records
                .iter()
                .find(|r| r.n_dims == n_dims && r.n_perms == n_perms)
                .map(|r| r.checksum)
                .unwrap_or(f64::NAN);
            SummaryRow {
                n_dims,
                n_perms,
                kernel,
                workers,
                tile,
                reps: group.len(),
                min_seconds: secs[0],
                median_seconds: median(&secs),
                speedup: f64::NAN,
                valid: group.iter().all(|r| checksums_agree(r.checksum, reference)),
            }
        })
        .collect();

    let baselines: Vec<f64> = rows
        .iter()
        .map(|row| {
            let same = |r: &&SummaryRow| r.n_dims == row.n_dims && r.n_perms == row.n_perms;
            rows.iter()
                .filter(same)
                .find(|r| r.kernel == KernelKind::Brute && r.workers == 1)
                .or_else(|| rows.iter().find(same))
                .map(|r| r.min_seconds)
                .unwrap()
        })
        .collect();
    for (row, base) in rows.iter_mut().zip(baselines) {
        row.speedup = base / row.min_seconds;
    }
    Summary { rows }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8} {:>8} {:<10} {:>7} {:>5} {:>4} {:>12} {:>12} {:>8}  status",
            "n_dims", "n_perms", "kernel", "workers", "tile", "reps", "min_s", "median_s", "speedup"
        )?;
        for r in &self.rows {
            let tile = if r.tile == 0 { "-".to_owned() } else { r.tile.to_string() };
            writeln!(
                f,
                "{:>8} {:>8} {:<10} {:>7} {:>5} {:>4} {:>12.6} {:>12.6} {:>8.2}  {}",
                r.n_dims,
                r.n_perms,
                r.kernel.name(),
                r.workers,
                tile,
                r.reps,
                r.min_seconds,
                r.median_seconds,
                r.speedup,
                if r.valid { "ok" } else { "INVALID" }
            )?;
        }
        Ok(())
    }
}
