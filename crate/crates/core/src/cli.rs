//! Command-line front end: `test`, `bench` and `membench` subcommands.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad user input,
//! 3 benchmark checksum verification failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{emit_csv, run_suite_with, summarize, BenchConfig, BenchGrid, BenchRecord};
use crate::error::{Error, Result};
use crate::io::{read_binary_matrix, read_grouping, read_lsmat, write_result, ResultFormat};
use crate::kernels::{KernelKind, TileConfig, DEFAULT_TILE};
use crate::membench::stream_run;
use crate::stats::permanova;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "permanova", version, about = "PERMANOVA permutation test and s_W kernel benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a PERMANOVA test on a distance matrix and sample metadata
    Test(TestArgs),
    /// Time the s_W kernels over a grid of synthetic workloads
    Bench(BenchArgs),
    /// STREAM-style memory bandwidth benchmark
    Membench(MembenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Brute,
    Tiled,
    TwoLevel,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Brute => KernelKind::Brute,
            KernelArg::Tiled => KernelKind::Tiled,
            KernelArg::TwoLevel => KernelKind::TwoLevel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Tsv,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Distance matrix in lsmat (tab-separated, labeled) format
    #[arg(long, value_name = "PATH", required_unless_present = "matrix_bin", conflicts_with = "matrix_bin")]
    pub matrix: Option<PathBuf>,
    /// Distance matrix as raw little-endian f32 values, row-major (needs --n-dims)
    #[arg(long, value_name = "PATH", requires = "n_dims")]
    pub matrix_bin: Option<PathBuf>,
    /// Number of objects in the --matrix-bin file; samples are named 0..N-1 in metadata
    #[arg(long, value_name = "N")]
    pub n_dims: Option<usize>,
    /// Sample metadata, tab-separated with a header row
    #[arg(long, value_name = "PATH")]
    pub metadata: PathBuf,
    /// Metadata column holding sample ids
    #[arg(long, value_name = "NAME")]
    pub id_column: String,
    /// Metadata column holding group categories
    #[arg(long, value_name = "NAME")]
    pub group_column: String,
    /// Total permutation rows, the observed grouping included
    #[arg(long, default_value_t = 999, value_parser = clap::value_parser!(u64).range(1..))]
    pub permutations: u64,
    /// Seed for the permutation generator
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// s_W kernel
    #[arg(long, value_enum, default_value_t = KernelArg::Tiled)]
    pub kernel: KernelArg,
    /// Tile edge for the tiled kernel
    #[arg(long, default_value_t = DEFAULT_TILE as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub tile: u64,
    /// Worker threads [default: all logical cores]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Kernels to time, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "brute,tiled,two-level")]
    pub kernels: Vec<KernelArg>,
    /// Matrix sizes (objects), comma separated
    #[arg(long, value_delimiter = ',', default_value = "1024,4096")]
    pub dims: Vec<usize>,
    /// Permutation rows per batch, comma separated
    #[arg(long, value_delimiter = ',', default_value = "64,256")]
    pub perms: Vec<usize>,
    /// Worker counts, comma separated; `all` means every logical core
    #[arg(long, value_delimiter = ',', default_value = "1,all")]
    pub workers_list: Vec<String>,
    /// Tile edges for the tiled kernel, comma separated
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    pub tiles: Vec<usize>,
    /// Timed repetitions per grid point
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Untimed warmup runs per grid point
    #[arg(long, default_value_t = 1)]
    pub warmups: usize,
    /// Seed for the synthetic workloads and permutations
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Groups in the synthetic workloads
    #[arg(long, default_value_t = 4)]
    pub groups: usize,
    /// Write CSV records here instead of standard output
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MembenchArgs {
    /// Elements per array
    #[arg(long, default_value_t = 100_000_000, value_parser = clap::value_parser!(u64).range(1000..))]
    pub stream_n: u64,
    /// Iterations per kernel; the first is excluded from the statistics
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub stream_reps: u64,
    /// Worker threads [default: all logical cores]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

pub fn logical_cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn parse_workers(list: &[String]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in list {
        let w = match item.trim() {
            "all" => logical_cores(),
            s => s
                .parse::<usize>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| Error::InvalidConfig(format!("--workers-list: '{s}' is not a positive count or 'all'")))?,
        };
        if !out.contains(&w) {
            out.push(w);
        }
    }
    Ok(out)
}

/// Runs the parsed command and returns the process exit code. Results go to
/// `out`, diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Test(args) => cmd_test(&args, out),
        Command::Bench(args) => cmd_bench(&args, out, err),
        Command::Membench(args) => cmd_membench(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_test(args: &TestArgs, out: &mut dyn Write) -> Result<i32> {
    let (ids, mat) = match (&args.matrix, &args.matrix_bin) {
        (Some(path), _) => read_lsmat(path)?,
        (None, Some(path)) => {
            let n = args.n_dims.unwrap_or(0);
            let mat = read_binary_matrix(path, n)?;
            ((0..n).map(|i| i.to_string()).collect(), mat)
        }
        (None, None) => return Err(Error::InvalidConfig("one of --matrix or --matrix-bin is required".into())),
    };
    let grouping = read_grouping(&args.metadata, &args.id_column, &args.group_column, &ids)?;
    let workers = args.workers.map_or_else(logical_cores, |w| w as usize);
    let result = permanova(
        &mat,
        &grouping,
        args.permutations as usize,
        args.seed,
        args.kernel.into(),
        TileConfig::new(args.tile as usize)?,
        workers,
    )?;
    let format = match args.format {
        FormatArg::Json => ResultFormat::Json,
        FormatArg::Tsv => ResultFormat::Tsv,
    };
    out.write_all(write_result(&result, format).as_bytes())?;
    Ok(EXIT_OK)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut kernels: Vec<KernelKind> = Vec::new();
    for k in &args.kernels {
        let k = KernelKind::from(*k);
        if !kernels.contains(&k) {
            kernels.push(k);
        }
    }
    let grid = BenchGrid {
        kernels,
        dims: args.dims.clone(),
        perms: args.perms.clone(),
        workers: parse_workers(&args.workers_list)?,
        tiles: args.tiles.clone(),
    };
    let config = BenchConfig { grid, reps: args.reps, warmups: args.warmups, seed: args.seed, n_groups: args.groups };
    let records = run_suite_with(&config, |point| {
        let r = &point[0];
        let best = point.iter().map(|r| r.seconds).fold(f64::INFINITY, f64::min);
        let _ = writeln!(
            err,
            "{} n_dims={} n_perms={} workers={} tile={} best={best:.6}s",
            r.kernel, r.n_dims, r.n_perms, r.workers, r.tile
        );
    })?;
    finish_bench(&records, args.csv.as_deref(), out)
}

/// Writes the CSV and the summary table; returns [`EXIT_VERIFY`] when any
/// checksum disagrees across kernels.
pub fn finish_bench(records: &[BenchRecord], csv: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let text = emit_csv(records);
    match csv {
        Some(path) => std::fs::write(path, &text).map_err(|e| Error::from(e).in_file(path))?,
        None => writeln!(out, "{text}")?,
    }
    let summary = summarize(records);
    write!(out, "{summary}")?;
    if summary.all_valid() {
        Ok(EXIT_OK)
    } else {
        writeln!(out, "checksum verification failed: kernels disagree on identical workloads")?;
        Ok(EXIT_VERIFY)
    }
}

pub fn cmd_membench(args: &MembenchArgs, out: &mut dyn Write) -> Result<i32> {
    let workers = args.workers.map_or_else(logical_cores, |w| w as usize);
    let report = stream_run(args.stream_n as usize, args.stream_reps as usize, workers)?;
    write!(out, "{report}")?;
    Ok(if report.validation.passed { EXIT_OK } else { EXIT_VERIFY })
}
