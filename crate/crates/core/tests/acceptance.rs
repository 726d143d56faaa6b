// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs every criterion, prints one line per criterion
//! and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use memcam::array::{AcamArray, CellAddress, Side};
use memcam::config::{ExperimentConfig, GridSpec, Job};
use memcam::controller::Outcome;
use memcam::experiments::{self, array_lut, run_job, SweepRow};
use memcam::fit::best_range;
use memcam::lut::{
    build_lut, default_grid, g_of_vdlp, interior_max_rel_error, TripFormVariant, SimulatedSource,
};
use memcam::Bench;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:?}, limit {limit:?}"))
}

fn boundary_round_trip() -> Verdict {
    let start = Instant::now();
    let bench = Bench::default();
    let c = bench.comparator();
    let mem = bench.memristor();
    let (beta, v_t, v_read) = (c.beta(), c.v_t(), c.rails().v_read);
    let mut worst: f64 = 0.0;
    for g in linspace(mem.g_off, mem.g_on, 20) {
        let v_dlp = c.boundary_program_mode(g).map_err(|e| e.to_string())?;
        let via_program = c.vdls_from_vdlp(v_dlp).map_err(|e| e.to_string())?;
        let direct = c.boundary_search_mode(g).map_err(|e| e.to_string())?;
        // Saturated square law at v_mid = V_read/2.
        let oracle = v_t + (g * v_read / beta).sqrt();
        ensure(
            (direct - oracle).abs() < 1e-9,
            format!("boundary {direct} vs oracle {oracle} at {g:e} S"),
        )?;
        worst = worst.max((via_program - direct).abs());
    }
    within(Duration::from_secs(1), start)?;
    ensure(worst <= 2e-3, format!("max mismatch {:.3e} V", worst))?;
    Ok(format!("20 conductances, max mismatch {worst:.2e} V (limit 2 mV)"))
}

fn algorithm_correctness() -> Verdict {
    let start = Instant::now();
    let bench = Bench::default();
    let fine = bench.with_dt(5e-9).map_err(|e| e.to_string())?;
    let mem = *bench.memristor();
    let c = bench.comparator();
    let (mut worst_err, mut worst_dt): (f64, f64) = (0.0, 0.0);
    for k in 1..=10 {
        let target = mem.g_off + (mem.g_on - mem.g_off) * k as f64 / 11.0;
        let v = c.boundary_program_mode(target).map_err(|e| e.to_string())?;
        let mut cell = bench.fresh_cell();
        let r = bench
            .controller()
            .run_set(&mut cell, v)
            .map_err(|e| e.to_string())?;
        ensure(
            r.outcome == Outcome::StoppedOnThreshold,
            format!("target {target:e} S ended {}", r.outcome),
        )?;
        let mut cell = fine.fresh_cell();
        let half = fine
            .controller()
            .run_set(&mut cell, v)
            .map_err(|e| e.to_string())?;
        worst_err = worst_err.max((r.final_g - target).abs() / target);
        worst_dt = worst_dt.max((half.final_g - r.final_g).abs() / r.final_g);
    }
    within(Duration::from_secs(10), start)?;
    ensure(worst_err <= 0.02, format!("final_g error {:.3}%", 100.0 * worst_err))?;
    ensure(worst_dt < 0.005, format!("dt sensitivity {:.3}%", 100.0 * worst_dt))?;
    Ok(format!(
        "10 targets stopped on threshold, max error {:.3}% (limit 2%), halving dt moves final_g {:.3}% (limit 0.5%)",
        100.0 * worst_err,
        100.0 * worst_dt
    ))
}

/// Sweep config over the default LUT grid, written under `out`.
fn sweep_config(out: &Path, law: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.transistor.law = law.to_string();
    let bench = cfg.bench().expect("valid");
    let grid = default_grid(bench.comparator());
    cfg.sweep.grid = GridSpec::with_points(grid[0], grid[grid.len() - 1], grid.len());
    cfg.experiment.out_dir = out.to_path_buf();
    cfg
}

fn read_sweep(path: &Path) -> Result<Vec<SweepRow>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let outcome = match &rec[3] {
            "stopped_on_threshold" => Outcome::StoppedOnThreshold,
            "timed_out" => Outcome::TimedOut,
            "no_drive" => Outcome::NoDrive,
            other => return Err(format!("unexpected outcome {other}")),
        };
        rows.push(SweepRow {
            v_dl: rec[0].parse().map_err(|_| "bad v_dl".to_string())?,
            final_g: rec[1].parse().map_err(|_| "bad final_g".to_string())?,
            stop_time: rec[2].parse().ok(),
            outcome,
        });
    }
    Ok(rows)
}

fn swept_rows(law: &str) -> Result<Vec<SweepRow>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = sweep_config(dir.path(), law);
    let report = experiments::cmd_cell_sweep(&cfg).map_err(|e| e.to_string())?;
    ensure(report.passed(), report.render())?;
    read_sweep(&dir.path().join("cell_sweep.csv"))
}

fn usable_xy(rows: &[SweepRow]) -> (Vec<f64>, Vec<f64>) {
    rows.iter()
        .filter(|r| r.outcome == Outcome::StoppedOnThreshold)
        .map(|r| (r.v_dl, r.final_g))
        .unzip()
}

fn linearity_range() -> Verdict {
    let span = memcam::MemristorParams::default().g_range();

    let rows = swept_rows("square-law")?;
    let (x, y) = usable_xy(&rows);
    let quad = best_range(&x, &y, 2, 0.98, span)
        .map_err(|e| e.to_string())?
        .ok_or("no degree-2 range under the square law")?;
    let lin = best_range(&x, &y, 1, 0.98, span).map_err(|e| e.to_string())?;
    ensure(
        quad.coverage >= 0.5,
        format!("degree-2 coverage {:.1}%", 100.0 * quad.coverage),
    )?;
    ensure(
        lin.as_ref().is_none_or(|l| l.coverage < quad.coverage),
        "degree 1 does not lose to degree 2 under the square law".into(),
    )?;

    let rows = swept_rows("linear-saturation")?;
    let (x, y) = usable_xy(&rows);
    let lin_sat = best_range(&x, &y, 1, 0.98, span)
        .map_err(|e| e.to_string())?
        .ok_or("no degree-1 range under the linear-saturation law")?;
    ensure(
        lin_sat.coverage >= 0.5,
        format!("degree-1 coverage {:.1}%", 100.0 * lin_sat.coverage),
    )?;
    Ok(format!(
        "square law: degree 2 R^2 {:.4} over {:.1}% of the range (degree 1 best {:.1}%); linear-saturation: degree 1 R^2 {:.4} over {:.1}%",
        quad.fit.r_squared,
        100.0 * quad.coverage,
        lin.map_or(0.0, |l| 100.0 * l.coverage),
        lin_sat.fit.r_squared,
        100.0 * lin_sat.coverage
    ))
}

fn programming_time_shape() -> Verdict {
    let rows = swept_rows("square-law")?;
    let changes = experiments::stop_time_sign_changes(&rows);
    let times: Vec<f64> = rows.iter().filter_map(|r| r.stop_time).collect();
    ensure(times.len() >= 3, format!("only {} stopped rows", times.len()))?;
    ensure(changes <= 2, format!("{changes} sign changes"))?;
    let monotone = times.windows(2).all(|w| w[1] >= w[0]);
    Ok(format!(
        "{changes} sign changes over {} stopped rows (limit 2); stop time {} from {:.3} us to {:.3} us",
        times.len(),
        if monotone { "rises monotonically" } else { "is unimodal" },
        1e6 * times[0],
        1e6 * times[times.len() - 1]
    ))
}

fn array_isolation() -> Verdict {
    let cfg = ExperimentConfig::default();
    let bench = cfg.bench().map_err(|e| e.to_string())?;
    let lut = array_lut(&cfg, &bench).map_err(|e| e.to_string())?;
    let mut array = AcamArray::standard(bench);
    let records = run_job(&mut array, &Job::four_words().op, &lut).map_err(|e| e.to_string())?;
    ensure(records.len() == 16, format!("{} writes", records.len()))?;
    let disturbed: usize = records.iter().map(|r| r.disturbed.len()).sum();
    ensure(disturbed == 0, format!("{disturbed} non-addressed states changed"))?;

    // Resets interleaved with verify reads, snapshot by snapshot.
    for addr in [
        CellAddress::new(2, 1, Side::Hb),
        CellAddress::new(0, 0, Side::Lb),
    ] {
        let before = array.snapshot();
        array.reset_cell(addr).map_err(|e| e.to_string())?;
        let after = array.snapshot();
        let own = array.flat_index(addr);
        let changed = before
            .iter()
            .zip(&after)
            .enumerate()
            .filter(|&(i, (a, b))| i != own && a.to_bits() != b.to_bits())
            .count();
        ensure(changed == 0, format!("reset of {addr} changed {changed} others"))?;
    }
    Ok("16 writes and 2 resets, every non-addressed state bit-identical".into())
}

fn four_windows() -> Verdict {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.out_dir = dir.path().to_path_buf();
    let report = experiments::cmd_array_demo(&cfg).map_err(|e| e.to_string())?;
    within(Duration::from_secs(30), start)?;
    for name in [
        "windows_disjoint_per_column",
        "center_probe_one_hot",
        "window_edges_vs_closed_form",
    ] {
        let c = report.get(name).ok_or(format!("missing check {name}"))?;
        ensure(c.passed, format!("{name}: {}", c.detail))?;
    }

    // Independent read of the window CSV against the closed form.
    let bench = cfg.bench().map_err(|e| e.to_string())?;
    let lut = array_lut(&cfg, &bench).map_err(|e| e.to_string())?;
    let mut array = AcamArray::standard(bench);
    run_job(&mut array, &Job::four_words().op, &lut).map_err(|e| e.to_string())?;
    let step = 0.6 / 128.0;
    let mut r = csv::Reader::from_path(dir.path().join("windows.csv")).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let (row, col): (usize, usize) = (rec[0].parse().unwrap(), rec[1].parse().unwrap());
        let (lo, hi): (f64, f64) = (rec[2].parse().unwrap(), rec[3].parse().unwrap());
        let w = array.window(row, col).map_err(|e| e.to_string())?;
        worst = worst.max((lo - w.lo).abs()).max((hi - w.hi).abs());
        n += 1;
    }
    ensure(n == 8, format!("{n} windows"))?;
    ensure(worst <= step, format!("edge error {:.3} mV", 1e3 * worst))?;
    Ok(format!(
        "8 windows disjoint per column, 4 center probes one-hot, max edge error {:.3} mV (limit {:.3} mV), {:?}",
        1e3 * worst,
        1e3 * step,
        start.elapsed()
    ))
}

fn equation_ledger() -> Verdict {
    let bench = Bench::default();
    let c = bench.comparator();
    let grid = default_grid(c);
    let gap = 2e-3 * 0.75 * 0.6;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for &v in &grid {
        if !c.program_saturated_at_trip(v) {
            continue;
        }
        let d = g_of_vdlp(c, v, TripFormVariant::Consistent).map_err(|e| e.to_string())?
            - g_of_vdlp(c, v, TripFormVariant::Literal).map_err(|e| e.to_string())?;
        worst = worst.max((d - gap).abs() / gap);
        checked += 1;
    }
    ensure(worst < 1e-12, format!("gap deviation {worst:e}"))?;

    let sim = build_lut(&bench, &grid, &SimulatedSource).map_err(|e| e.to_string())?;
    let mem = bench.memristor();
    let consistent = interior_max_rel_error(&sim, mem, |v| {
        g_of_vdlp(c, v, TripFormVariant::Consistent).unwrap()
    })
    .ok_or("no interior knots")?;
    let literal = interior_max_rel_error(&sim, mem, |v| {
        g_of_vdlp(c, v, TripFormVariant::Literal).unwrap()
    })
    .ok_or("no interior knots")?;
    ensure(consistent <= 0.02, format!("consistent off by {:.3}%", 100.0 * consistent))?;
    ensure(literal > 0.02, format!("literal agrees to {:.3}%", 100.0 * literal))?;
    Ok(format!(
        "offset exactly 0.9 mS at {checked}/{} grid points (transistor saturated at the trip; the rest clip at g_on); consistent vs simulated {:.3}%, literal vs simulated {:.1}%",
        grid.len(),
        100.0 * consistent,
        100.0 * literal
    ))
}

fn reset_completeness() -> Verdict {
    let bench = Bench::default();
    let g_off = bench.memristor().g_off;
    let t_max = bench.controller().config().t_max;
    let mut array = AcamArray::new(1, 1, bench).map_err(|e| e.to_string())?;
    let addr = CellAddress::new(0, 0, Side::Lb);
    array.preset(addr, 1.0).map_err(|e| e.to_string())?;
    let r = array.reset_cell(addr).map_err(|e| e.to_string())?;
    let t_end = r.trace.samples.last().map_or(f64::INFINITY, |s| s.t);
    ensure(
        r.outcome == Outcome::ResetComplete && r.final_g == g_off && t_end < t_max,
        format!("{} at {t_end:e} s, g {:e}", r.outcome, r.final_g),
    )?;
    let read = array.verify_cell(addr).map_err(|e| e.to_string())?;
    let err = (read - g_off).abs() / g_off;
    ensure(err <= 0.01, format!("verify read off by {:.3}%", 100.0 * err))?;
    Ok(format!(
        "g_off reached at {:.2} us (limit 35 us), verify read error {:.4}% (limit 1%)",
        1e6 * t_end,
        100.0 * err
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("boundary round trip", boundary_round_trip),
        ("algorithm correctness", algorithm_correctness),
        ("linearity range", linearity_range),
        ("programming-time shape", programming_time_shape),
        ("array isolation", array_isolation),
        ("four windows", four_windows),
        ("equation variants", equation_ledger),
        ("reset completeness", reset_completeness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match verdict {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
