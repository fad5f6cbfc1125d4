//! STREAM-style memory bandwidth microbenchmark.
//!
//! Follows the STREAM 5.10 schedule: `a = 1, b = 2, c = 0`, one untimed
//! `a = 2a` pass, then `reps` timed iterations of Copy, Scale, Add and
//! Triad. The first iteration is dropped from the statistics and the final
//! arrays are checked against values recomputed on scalars.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const STREAM_SCALAR: f64 = 3.0;
/// Largest accepted average relative error per array.
pub const STREAM_EPSILON: f64 = 1e-13;
pub const BYTES_PER_WORD: usize = std::mem::size_of::<f64>();
pub const MIN_ELEMENTS: usize = 1000;
pub const MIN_REPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKernel {
    Copy,
    Scale,
    Add,
    Triad,
}

impl StreamKernel {
    pub const ALL: [StreamKernel; 4] = [StreamKernel::Copy, StreamKernel::Scale, StreamKernel::Add, StreamKernel::Triad];

    pub fn name(self) -> &'static str {
        match self {
            StreamKernel::Copy => "Copy",
            StreamKernel::Scale => "Scale",
            StreamKernel::Add => "Add",
            StreamKernel::Triad => "Triad",
        }
    }

    /// Bytes read plus written by one pass over `n` elements.
    pub fn bytes_per_iteration(self, n: usize) -> u64 {
        let arrays = match self {
            StreamKernel::Copy | StreamKernel::Scale => 2,
            StreamKernel::Add | StreamKernel::Triad => 3,
        };
        arrays * (BYTES_PER_WORD * n) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamArrays {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

fn alloc_filled(n: usize, value: f64) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    v.try_reserve_exact(n).map_err(|_| Error::AllocationFailure { bytes: n.saturating_mul(BYTES_PER_WORD) })?;
    v.resize(n, value);
    Ok(v)
}

impl StreamArrays {
    /// Allocates and touches `a = 1, b = 2, c = 0`.
    pub fn allocate(n: usize) -> Result<Self> {
        Ok(Self { a: alloc_filled(n, 1.0)?, b: alloc_filled(n, 2.0)?, c: alloc_filled(n, 0.0)? })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// One pass of `kernel`, split into `chunk`-sized static blocks.
    fn run(&mut self, kernel: StreamKernel, chunk: usize) {
        let q = STREAM_SCALAR;
        let Self { a, b, c } = self;
        match kernel {
            StreamKernel::Copy => c.par_chunks_mut(chunk).zip(a.par_chunks(chunk)).for_each(|(c, a)| {
                c.copy_from_slice(a);
            }),
            StreamKernel::Scale => b.par_chunks_mut(chunk).zip(c.par_chunks(chunk)).for_each(|(b, c)| {
                for (b, &c) in b.iter_mut().zip(c) {
                    *b = q * c;
                }
            }),
            StreamKernel::Add => c
                .par_chunks_mut(chunk)
                .zip(a.par_chunks(chunk).zip(b.par_chunks(chunk)))
                .for_each(|(c, (a, b))| {
                    for ((c, &a), &b) in c.iter_mut().zip(a).zip(b) {
                        *c = a + b;
                    }
                }),
            StreamKernel::Triad => a
                .par_chunks_mut(chunk)
                .zip(b.par_chunks(chunk).zip(c.par_chunks(chunk)))
                .for_each(|(a, (b, c))| {
                    for ((a, &b), &c) in a.iter_mut().zip(b).zip(c) {
                        *a = b + q * c;
                    }
                }),
        }
    }
}

/// Per-kernel timing over iterations `2..=reps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTiming {
    pub kernel: StreamKernel,
    pub best_rate_mb_s: f64,
    pub avg_time_s: f64,
    pub min_time_s: f64,
    pub max_time_s: f64,
}

impl KernelTiming {
    /// `samples` holds every timed iteration; the first one is skipped.
    pub fn from_samples(kernel: StreamKernel, n: usize, samples: &[f64]) -> Self {
        assert!(samples.len() >= MIN_REPS);
        let kept = &samples[1..];
        let min = kept.iter().copied().fold(f64::INFINITY, f64::min);
        let max = kept.iter().copied().fold(0.0, f64::max);
        let avg = kept.iter().sum::<f64>() / kept.len() as f64;
        Self {
            kernel,
            best_rate_mb_s: 1.0e-6 * kernel.bytes_per_iteration(n) as f64 / min,
            avg_time_s: avg,
            min_time_s: min,
            max_time_s: max,
        }
    }
}

/// Raw outcome of a run: final arrays and per-iteration seconds for each
/// kernel in [`StreamKernel::ALL`] order.
#[derive(Debug, Clone)]
pub struct StreamRun {
    pub arrays: StreamArrays,
    pub samples: [Vec<f64>; 4],
    pub reps: usize,
    pub workers: usize,
}

fn check_params(n_elements: usize, reps: usize, workers: usize) -> Result<()> {
    if n_elements < MIN_ELEMENTS {
        return Err(Error::InvalidConfig(format!("stream array size must be at least {MIN_ELEMENTS}, got {n_elements}")));
    }
    if reps < MIN_REPS {
        return Err(Error::InvalidConfig(format!(
            "stream reps must be at least {MIN_REPS} (the first iteration is discarded), got {reps}"
        )));
    }
    if workers == 0 {
        return Err(Error::WorkerCountZero);
    }
    Ok(())
}

/// Allocates the arrays and runs the timed schedule.
pub fn stream_execute(n_elements: usize, reps: usize, workers: usize) -> Result<StreamRun> {
    check_params(n_elements, reps, workers)?;
    let mut arrays = StreamArrays::allocate(n_elements)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let chunk = n_elements.div_ceil(workers);
    let mut samples: [Vec<f64>; 4] = Default::default();
    pool.install(|| {
        arrays.a.par_chunks_mut(chunk).for_each(|a| a.iter_mut().for_each(|x| *x *= 2.0));
        for _ in 0..reps {
            for (kernel, times) in StreamKernel::ALL.into_iter().zip(samples.iter_mut()) {
                let t0 = Instant::now();
                arrays.run(kernel, chunk);
                times.push(t0.elapsed().as_secs_f64().max(1e-9));
            }
        }
    });
    Ok(StreamRun { arrays, samples, reps, workers })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamValidation {
    /// Average absolute error divided by the expected value, for a, b, c.
    pub avg_rel_err: [f64; 3],
    pub passed: bool,
}

/// Expected scalar values of `(a, b, c)` after `reps` timed iterations.
pub fn expected_values(reps: usize) -> (f64, f64, f64) {
    let (mut a, mut b, mut c) = (1.0f64, 2.0f64, 0.0f64);
    a *= 2.0;
    for _ in 0..reps {
        c = a;
        b = STREAM_SCALAR * c;
        c = a + b;
        a = b + STREAM_SCALAR * c;
    }
    (a, b, c)
}

pub fn stream_validate(arrays: &StreamArrays, reps: usize) -> StreamValidation {
    let (ea, eb, ec) = expected_values(reps);
    let n = arrays.len() as f64;
    let rel = |v: &[f64], expected: f64| {
        let avg = v.iter().map(|&x| (x - expected).abs()).sum::<f64>() / n;
        (avg / expected).abs()
    };
    let avg_rel_err = [rel(&arrays.a, ea), rel(&arrays.b, eb), rel(&arrays.c, ec)];
    let passed = avg_rel_err.iter().all(|&e| e <= STREAM_EPSILON);
    StreamValidation { avg_rel_err, passed }
}

#[derive(Debug, Clone)]
pub struct StreamReport {
    pub n_elements: usize,
    pub reps: usize,
    pub workers: usize,
    pub timings: [KernelTiming; 4],
    pub validation: StreamValidation,
}

impl StreamReport {
    pub fn from_run(run: &StreamRun) -> Self {
        let n = run.arrays.len();
        let timings = std::array::from_fn(|i| KernelTiming::from_samples(StreamKernel::ALL[i], n, &run.samples[i]));
        Self {
            n_elements: n,
            reps: run.reps,
            workers: run.workers,
            timings,
            validation: stream_validate(&run.arrays, run.reps),
        }
    }
}

pub fn stream_run(n_elements: usize, reps: usize, workers: usize) -> Result<StreamReport> {
    Ok(StreamReport::from_run(&stream_execute(n_elements, reps, workers)?))
}

const RULE: &str = "-------------------------------------------------------------";

/// Header block with array sizes and the iteration schedule.
pub fn banner(n_elements: usize, reps: usize, workers: usize) -> String {
    let mib = BYTES_PER_WORD as f64 * (n_elements as f64 / 1024.0 / 1024.0);
    let gib = BYTES_PER_WORD as f64 * (n_elements as f64 / 1024.0 / 1024.0 / 1024.0);
    let mut s = String::new();
    s.push_str(&format!("{RULE}\nSTREAM-style memory bandwidth benchmark (permanova membench)\n{RULE}\n"));
    s.push_str(&format!("This system uses {BYTES_PER_WORD} bytes per array element.\n{RULE}\n"));
    s.push_str(&format!("Array size = {n_elements} (elements), Offset = 0 (elements)\n"));
    s.push_str(&format!("Memory per array = {mib:.1} MiB (= {gib:.1} GiB).\n"));
    s.push_str(&format!("Total memory required = {:.1} MiB (= {:.1} GiB).\n", 3.0 * mib, 3.0 * gib));
    s.push_str(&format!("Each kernel will be executed {reps} times.\n"));
    s.push_str(" The *best* time for each kernel (excluding the first iteration)\n");
    s.push_str(" will be used to compute the reported bandwidth.\n");
    s.push_str(&format!("{RULE}\nNumber of Threads requested = {workers}\n{RULE}\n"));
    s
}

impl fmt::Display for StreamReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&banner(self.n_elements, self.reps, self.workers))?;
        writeln!(f, "Function    Best Rate MB/s  Avg time     Min time     Max time")?;
        for t in &self.timings {
            writeln!(
                f,
                "{:<11}{:12.1}  {:11.6}  {:11.6}  {:11.6}",
                format!("{}:", t.kernel.name()),
                t.best_rate_mb_s,
                t.avg_time_s,
                t.min_time_s,
                t.max_time_s
            )?;
        }
        writeln!(f, "{RULE}")?;
        if self.validation.passed {
            writeln!(f, "Solution Validates: avg error less than {STREAM_EPSILON:.6e} on all three arrays")?;
        } else {
            for (name, err) in ["a", "b", "c"].iter().zip(self.validation.avg_rel_err) {
                if err > STREAM_EPSILON {
                    writeln!(
                        f,
                        "Failed Validation on array {name}[], AvgRelAbsErr > epsilon ({STREAM_EPSILON:e})\n     AvgRelAbsErr = {err:e}"
                    )?;
                }
            }
        }
        writeln!(f, "{RULE}")
    }
}
