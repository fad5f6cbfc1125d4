//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines stay readable.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use permanova::bench::{emit_csv, run_suite, summarize, BenchConfig, BenchGrid, BenchRecord, CSV_HEADER};
use permanova::cli::logical_cores;
use permanova::kernels::sw_one;
use permanova::membench::{banner, stream_run, StreamKernel, STREAM_EPSILON};
use permanova::{
    build_grouping, permanova, ss_total, sw_brute_force, sw_tiled, sw_two_level, DistanceMatrix, KernelKind,
    PermanovaResult, TileConfig,
};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn run_test(mat: &DistanceMatrix, labels: &[u32], perms: usize, seed: u64, k: KernelKind, workers: usize) -> PermanovaResult {
    let g = build_grouping(labels).unwrap();
    permanova(mat, &g, perms, seed, k, TileConfig::new(5).unwrap(), workers).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(0xacce);
    let mut worst: f64 = 0.0;
    let instances = 300;
    for i in 0..instances {
        let n = r.gen_range(2..=64);
        let groups = r.gen_range(2..=5).min(n);
        let tile = r.gen_range(1..=n + 8);
        let mat = random_matrix(&mut r, n, 10.0);
        let labels = random_labels(&mut r, n, groups);
        let inv = inv_sizes(&labels, groups);
        let brute = sw_brute_force(&mat, &labels, &inv);
        let tiled = sw_tiled(&mat, &labels, &inv, TileConfig::new(tile).unwrap());
        let two = sw_two_level(&mat, &labels, &inv, r.gen_range(1..=8));
        for (name, v) in [("tiled", tiled), ("two-level", two)] {
            let e = rel_err(v, brute);
            ensure!(e <= 1e-9, "instance {i} (n={n}, tile={tile}): {name} {v} vs brute {brute}");
            worst = worst.max(e);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.2} s (limit 10 s)");
    Ok(format!("{instances} instances, worst rel err {worst:.1e}, {secs:.2} s"))
}

fn definitional_oracle() -> Outcome {
    let mat = m4();
    let labels = [0u32, 0, 1, 1];
    let inv = inv_sizes(&labels, 2);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;

    let sw = oracle_sw(&mat, &labels);
    let sst = oracle_ss_total(&mat);
    let f = oracle_f(&mat, &labels);
    ensure!(close(sw, 1.0) && close(sst, 4.5) && close(f, 7.0), "oracle gives s_W={sw} SS_T={sst} F={f}");
    for k in KernelKind::ALL {
        for tile in [1, 2, 3, 4, 64] {
            let v = sw_one(&mat, &labels, &inv, k, TileConfig::new(tile).unwrap(), tile);
            ensure!(close(v, 1.0), "{k} (tile/parts {tile}) gives s_W={v}");
        }
        let res = run_test(&mat, &labels, 100, 1, k, 2);
        ensure!(close(res.f_observed, 7.0), "{k}: f_observed={}", res.f_observed);
        ensure!(close(res.ss_total, 4.5) && close(res.ss_within_observed, 1.0), "{k}: {res:?}");
    }
    ensure!(close(ss_total(&mat), 4.5), "ss_total={}", ss_total(&mat));
    Ok("s_W = 1, SS_T = 4.5, F = 7 from oracle, all kernels and permanova".into())
}

fn algebraic_invariants() -> Outcome {
    let mut r = rng(0x1a7);
    let instances = 60;
    for i in 0..instances {
        let n = r.gen_range(6..=48);
        let groups = r.gen_range(2..=4);
        let tile = r.gen_range(1..=n + 8);
        let cfg = TileConfig::new(tile).unwrap();
        let kernels = |m: &DistanceMatrix, l: &[u32], inv: &[f64]| KernelKind::ALL.map(|k| sw_one(m, l, inv, k, cfg, 3));

        // scale law on exactly scalable entries
        let mat = dyadic_matrix(&mut r, n);
        let labels = random_labels(&mut r, n, groups);
        let inv = inv_sizes(&labels, groups);
        let base = kernels(&mat, &labels, &inv);
        let base_test = run_test(&mat, &labels, 99, i, KernelKind::Tiled, 1);
        for c in [0.5f32, 2.0, 10.0] {
            let scaled_mat = mat.scaled(c);
            let c2 = (c as f64).powi(2);
            for (b, s) in base.iter().zip(kernels(&scaled_mat, &labels, &inv)) {
                ensure!(rel_eq(s, b * c2, 1e-9), "instance {i}: scale {c}: {s} vs {}", b * c2);
            }
            let t = run_test(&scaled_mat, &labels, 99, i, KernelKind::Tiled, 1);
            ensure!(rel_eq(t.f_observed, base_test.f_observed, 1e-9), "instance {i}: F changed under scale {c}");
            ensure!(t.p_value == base_test.p_value, "instance {i}: p changed under scale {c}");
        }

        // lower triangle is never read
        let mat = random_matrix(&mut r, n, 10.0);
        let mut data = mat.data().to_vec();
        for row in 0..n {
            for col in 0..row {
                data[row * n + col] = r.gen_range(-1e6..1e6);
            }
        }
        let dirty = DistanceMatrix::new_unchecked(n, data);
        let clean = kernels(&mat, &labels, &inv);
        ensure!(
            clean.map(f64::to_bits) == kernels(&dirty, &labels, &inv).map(f64::to_bits),
            "instance {i}: lower triangle changed a result"
        );

        // a singleton object contributes nothing
        let victim = r.gen_range(0..n);
        let mut single = labels.clone();
        single[victim] = groups as u32;
        let single_inv = inv_sizes(&single, groups + 1);
        let keep: Vec<usize> = (0..n).filter(|&j| j != victim).collect();
        let mut reduced = Vec::new();
        for &a in &keep {
            reduced.extend(keep.iter().map(|&b| mat.get(a, b)));
        }
        let reduced = DistanceMatrix::new_unchecked(n - 1, reduced);
        let reduced_labels: Vec<u32> = keep.iter().map(|&j| single[j]).collect();
        let full = kernels(&mat, &single, &single_inv);
        for (f, s) in full.iter().zip(kernels(&reduced, &reduced_labels, &single_inv)) {
            ensure!(rel_eq(s, *f, 1e-12), "instance {i}: singleton removal {f} -> {s}");
        }

        // simultaneous reordering of objects and labels
        let mut order: Vec<usize> = (0..n).collect();
        permanova::permute::fisher_yates(&mut order, &mut r);
        let moved_labels: Vec<u32> = order.iter().map(|&j| labels[j]).collect();
        for (b, a) in clean.iter().zip(kernels(&mat.reordered(&order), &moved_labels, &inv)) {
            ensure!(rel_close(a, *b, 1e-9), "instance {i}: reordering {b} -> {a}");
        }

        // bijective renaming of categories
        let names = ["alpha", "beta", "gamma", "delta"];
        let shift = r.gen_range(1..4);
        let renamed: Vec<&str> = labels.iter().map(|&l| names[(l as usize + shift) % 4]).collect();
        let g = build_grouping(&renamed).unwrap();
        let g_plain = build_grouping(&labels).unwrap();
        let cfg5 = TileConfig::new(5).unwrap();
        let a = permanova(&mat, &g_plain, 99, i, KernelKind::TwoLevel, cfg5, 2).unwrap();
        let b = permanova(&mat, &g, 99, i, KernelKind::TwoLevel, cfg5, 2).unwrap();
        ensure!(a == b, "instance {i}: renaming changed the result");
    }
    Ok(format!("scale, lower triangle, singleton, reordering, renaming over {instances} instances"))
}

fn determinism() -> Outcome {
    let max_workers = logical_cores().max(4);
    let mut r = rng(0xde7);
    let instances = 20;
    for i in 0..instances {
        let n = r.gen_range(8..=80);
        let mat = random_matrix(&mut r, n, 5.0);
        let groups = r.gen_range(2..=4);
        let labels = random_labels(&mut r, n, groups);
        for k in KernelKind::ALL {
            let first = run_test(&mat, &labels, 199, i, k, 2);
            for _ in 0..2 {
                ensure!(run_test(&mat, &labels, 199, i, k, 2) == first, "instance {i}: {k} not reproducible");
            }
        }
        for k in [KernelKind::Brute, KernelKind::Tiled] {
            let base = run_test(&mat, &labels, 199, i, k, 1);
            for w in [2, max_workers] {
                let other = run_test(&mat, &labels, 199, i, k, w);
                ensure!(
                    other.f_observed.to_bits() == base.f_observed.to_bits() && other.p_value == base.p_value,
                    "instance {i}: {k} differs between 1 and {w} workers"
                );
            }
        }
    }
    Ok(format!("{instances} instances, 3 runs each, workers 1/2/{max_workers} agree bit-exactly"))
}

fn csv_is_valid(text: &str, expected_rows: usize) -> Result<(), String> {
    let mut lines = text.lines();
    ensure!(lines.next() == Some(CSV_HEADER), "missing CSV header");
    let width = CSV_HEADER.split(',').count();
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        ensure!(fields.len() == width, "bad CSV row: {line}");
        ensure!(fields[0].parse::<KernelKind>().is_ok(), "bad kernel in: {line}");
        for f in &fields[1..6] {
            ensure!(f.parse::<usize>().is_ok(), "bad integer in: {line}");
        }
        for f in &fields[6..] {
            ensure!(f.parse::<f64>().is_ok_and(f64::is_finite), "bad float in: {line}");
        }
        rows += 1;
    }
    ensure!(rows == expected_rows, "CSV has {rows} rows, expected {expected_rows}");
    Ok(())
}

fn bench_protocol() -> Outcome {
    let t0 = Instant::now();
    let default = BenchConfig::new(BenchGrid::desk_default(logical_cores()));
    let mut large = default.clone();
    large.grid.dims = vec![8192];
    large.grid.perms = vec![64];
    let mut records: Vec<BenchRecord> = run_suite(&default).map_err(|e| e.to_string())?;
    records.extend(run_suite(&large).map_err(|e| e.to_string())?);
    let secs = t0.elapsed().as_secs_f64();

    for (dims, perms) in [(1024, 64), (1024, 256), (4096, 64), (4096, 256), (8192, 64)] {
        let same: Vec<&BenchRecord> = records.iter().filter(|r| r.n_dims == dims && r.n_perms == perms).collect();
        ensure!(!same.is_empty(), "no records for n_dims={dims} n_perms={perms}");
        for k in KernelKind::ALL {
            ensure!(same.iter().any(|r| r.kernel == k), "{k} missing at n_dims={dims} n_perms={perms}");
        }
        let reference = same[0].checksum;
        for r in &same {
            ensure!(
                (r.checksum - reference).abs() <= 1e-9 * reference.abs(),
                "checksum {} vs {reference} ({} n_dims={dims})",
                r.checksum,
                r.kernel
            );
        }
    }
    csv_is_valid(&emit_csv(&records), records.len())?;
    let summary = summarize(&records);
    ensure!(summary.all_valid(), "summary flags a checksum mismatch");
    let table = summary.to_string();
    ensure!(table.lines().count() == summary.rows.len() + 1 && table.contains("speedup"), "summary table malformed");
    print!("{table}");
    ensure!(secs <= 300.0, "bench took {secs:.1} s (limit 300 s)");
    Ok(format!("{} records, checksums agree, {secs:.1} s", records.len()))
}

fn membench() -> Outcome {
    let n = 2_000_000;
    let report = stream_run(n, 10, logical_cores()).map_err(|e| e.to_string())?;
    ensure!(report.validation.passed, "validation failed: {:?}", report.validation.avg_rel_err);
    ensure!(report.validation.avg_rel_err.iter().all(|&e| e < STREAM_EPSILON), "avg error not below {STREAM_EPSILON:e}");

    let text = report.to_string();
    let lines: Vec<&str> = text.lines().collect();
    let header = lines.iter().position(|l| *l == "Function    Best Rate MB/s  Avg time     Min time     Max time");
    let header = header.ok_or("report header missing")?;
    for (offset, kernel) in StreamKernel::ALL.iter().enumerate() {
        let line = lines.get(header + 1 + offset).ok_or("report truncated")?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        ensure!(fields.len() == 5 && fields[0] == format!("{}:", kernel.name()), "bad row: {line}");
        let nums: Vec<f64> = fields[1..].iter().map(|f| f.parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let (rate, avg, min, max) = (nums[0], nums[1], nums[2], nums[3]);
        ensure!(min <= avg && avg <= max, "times out of order: {line}");
        // the printed rate must equal bytes / min-time up to the printed precision
        let bytes = kernel.bytes_per_iteration(n) as f64;
        let t = report.timings[offset];
        ensure!((rate - 1e-6 * bytes / t.min_time_s).abs() <= 0.05 + 1e-9, "rate {rate} vs bytes/min-time in {line}");
        let lo = 1e-6 * bytes / (min + 5e-7) - 0.05;
        let hi = if min > 5e-7 { 1e-6 * bytes / (min - 5e-7) + 0.05 } else { f64::INFINITY };
        ensure!((lo..=hi).contains(&rate), "printed rate {rate} inconsistent with printed min time {min}");
    }
    ensure!(text.contains("Solution Validates: avg error less than 1.000000e-13 on all three arrays"), "validation line missing");

    let big = banner(1_000_000_000, 10, 1);
    for expected in ["Memory per array = 7629.4 MiB", "Total memory required = 22888.2 MiB"] {
        ensure!(big.lines().any(|l| l.starts_with(expected)), "banner lacks '{expected}'");
    }
    Ok(format!("n={n}: validates, 4 rows consistent, 10^9 banner exact"))
}

fn p_value_contract() -> Outcome {
    let mut r = rng(0x9a1);
    let mut checked = 0;
    for i in 0..60u64 {
        let n = r.gen_range(4..=40);
        let mat = random_matrix(&mut r, n, 2.0);
        let groups = r.gen_range(2..=3usize.min(n - 1));
        let labels = random_labels(&mut r, n, groups);
        let perms = r.gen_range(1..=500);
        for k in KernelKind::ALL {
            let res = run_test(&mat, &labels, perms, i, k, 2);
            let count = res.p_value * perms as f64;
            ensure!((count - count.round()).abs() < 1e-9, "p*n = {count} is not an integer");
            ensure!((1.0..=perms as f64).contains(&count.round()), "count {count} outside [1, {perms}]");
            checked += 1;
        }
        let one = run_test(&mat, &labels, 1, i, KernelKind::Tiled, 1);
        ensure!(one.p_value == 1.0, "n_perms=1 gave p={}", one.p_value);

        let flat = DistanceMatrix::new_unchecked(n, (0..n * n).map(|j| if j % (n + 1) == 0 { 0.0 } else { 0.7 }).collect());
        let flat_res = run_test(&flat, &labels, 99, i, KernelKind::TwoLevel, 2);
        ensure!(flat_res.p_value == 1.0, "equal distances gave p={}", flat_res.p_value);
    }
    Ok(format!("{checked} results, n_perms=1 and equal-distance cases give p = 1"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("kernel-oracle equivalence", oracle_equivalence),
        ("definitional oracle on the 4-object fixture", definitional_oracle),
        ("algebraic invariants", algebraic_invariants),
        ("determinism", determinism),
        ("benchmark protocol at desk scale", bench_protocol),
        ("memory bandwidth benchmark", membench),
        ("p-value contract", p_value_contract),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                failures += 1;
                println!("[FAIL] {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
