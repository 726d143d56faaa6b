// SPDX-License-Identifier: Apache-2.0

//! Experiment orchestration: each command writes CSV data files and a run
//! report with named checks into an output directory.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::array::{AcamArray, CellAddress, SearchWindow, Side};
use crate::bench::Bench;
use crate::config::{ExperimentConfig, JobOp};
use crate::controller::{Outcome, ProgramResult};
use crate::devices::{MemristorParams, SquareLaw};
use crate::error::{Error, Result};
use crate::fit::{best_low_degree_range, best_range, RangeFit};
use crate::lut::{
    build_lut, g_of_vdlp, interior_max_rel_error, uniform_grid, TripFormVariant, LutTable,
    LiteralSource, SimulatedSource,
};
use crate::registry::lut_sources;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Run report: echoed configuration, informational lines and named checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config: String,
    pub info: Vec<String>,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            config: cfg.to_toml(),
            info: Vec::new(),
            checks: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn info(&mut self, line: impl Into<String>) {
        self.info.push(line.into());
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = format!("# {} report\n\n[config]\n", self.command);
        for line in self.config.lines() {
            let _ = writeln!(s, "  {line}");
        }
        s.push_str("\n[info]\n");
        for line in &self.info {
            let _ = writeln!(s, "  {line}");
        }
        s.push_str("\n[checks]\n");
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "  {verdict} {}: {}", c.name, c.detail);
        }
        let _ = writeln!(
            s,
            "\nstatus: {}",
            if self.passed() { "ok" } else { "failed" }
        );
        s
    }

    fn finish(mut self, out: &Path) -> Result<Self> {
        let path = out.join(format!("{}_report.txt", self.command.replace('-', "_")));
        fs::write(&path, self.render()).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(self)
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn flush<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

// ---------------------------------------------------------------- cell sweep

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub v_dl: f64,
    pub final_g: f64,
    pub stop_time: Option<f64>,
    pub outcome: Outcome,
}

/// One set episode from a freshly reset device per grid voltage.
pub fn cell_sweep(bench: &Bench, grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid.par_iter()
        .map(|&v| {
            let mut cell = bench.fresh_cell();
            let r = bench.controller().run_set(&mut cell, v)?;
            Ok(SweepRow {
                v_dl: v,
                final_g: r.final_g,
                stop_time: r.stop_time,
                outcome: r.outcome,
            })
        })
        .collect()
}

/// Rows that stopped on threshold: the dynamic range of the sweep.
pub fn dynamic_range(rows: &[SweepRow]) -> Vec<SweepRow> {
    rows.iter()
        .copied()
        .filter(|r| r.outcome == Outcome::StoppedOnThreshold)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFits {
    pub linear: Option<RangeFit>,
    pub quadratic: Option<RangeFit>,
    pub best: Option<RangeFit>,
}

pub fn sweep_fits(rows: &[SweepRow], mem: &MemristorParams, r2_min: f64) -> Result<SweepFits> {
    let usable = dynamic_range(rows);
    let x: Vec<f64> = usable.iter().map(|r| r.v_dl).collect();
    let y: Vec<f64> = usable.iter().map(|r| r.final_g).collect();
    let span = mem.g_range();
    Ok(SweepFits {
        linear: best_range(&x, &y, 1, r2_min, span)?,
        quadratic: best_range(&x, &y, 2, r2_min, span)?,
        best: best_low_degree_range(&x, &y, r2_min, span)?,
    })
}

/// Sign changes between successive stop-time differences in the dynamic
/// range.
pub fn stop_time_sign_changes(rows: &[SweepRow]) -> usize {
    let t: Vec<f64> = dynamic_range(rows)
        .iter()
        .filter_map(|r| r.stop_time)
        .collect();
    let signs: Vec<f64> = t
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    signs.windows(2).filter(|s| s[0] != s[1]).count()
}

fn describe_fit(label: &str, rows: &[SweepRow], fit: &Option<RangeFit>) -> String {
    let usable = dynamic_range(rows);
    match fit {
        Some(f) => format!(
            "{label}: degree {} over v_dl [{}, {}] V ({} points), R^2 = {:.5}, coverage {:.1}% of [g_off, g_on]",
            f.degree,
            usable[f.start].v_dl,
            usable[f.end].v_dl,
            f.end - f.start + 1,
            f.fit.r_squared,
            100.0 * f.coverage
        ),
        None => format!("{label}: none"),
    }
}

pub fn cmd_cell_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    let out = &cfg.experiment.out_dir;
    prepare_out(out)?;
    let bench = cfg.bench()?;
    let grid = cfg.sweep.grid.values()?;
    let rows = cell_sweep(&bench, &grid)?;
    let mut report = Report::new("cell-sweep", cfg);

    let path = out.join("cell_sweep.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["v_dl", "final_g", "stop_time", "outcome"])?;
    for r in &rows {
        w.write_record([
            format!("{}", r.v_dl),
            format!("{:e}", r.final_g),
            opt(r.stop_time),
            r.outcome.to_string(),
        ])?;
    }
    flush(w, &path)?;
    report.files.push(path);

    let mem = bench.memristor();
    let usable = dynamic_range(&rows);
    report.info(format!(
        "{} grid points, {} stopped on threshold",
        rows.len(),
        usable.len()
    ));
    let fits = sweep_fits(&rows, mem, cfg.sweep.r2_min)?;
    report.info(describe_fit("degree-1 range", &rows, &fits.linear));
    report.info(describe_fit("degree-2 range", &rows, &fits.quadratic));
    report.info(describe_fit("fitted range", &rows, &fits.best));

    let out_of_range = usable
        .iter()
        .filter(|r| r.final_g < mem.g_off || r.final_g > mem.g_on)
        .count();
    report.check(
        "final_g_within_device_range",
        out_of_range == 0,
        format!("{out_of_range} stopped rows outside [g_off, g_on]"),
    );
    let changes = stop_time_sign_changes(&rows);
    report.check(
        "stop_time_shape",
        changes <= 2,
        format!("{changes} sign changes of successive stop-time differences"),
    );
    report.finish(out)
}

// ----------------------------------------------------------------- LUT build

pub fn cmd_build_lut(cfg: &ExperimentConfig, literal: bool) -> Result<Report> {
    let out = &cfg.experiment.out_dir;
    prepare_out(out)?;
    let bench = cfg.bench()?;
    let grid = cfg.lut_grid(&bench)?;
    let mut report = Report::new("build-lut", cfg);
    let registry = lut_sources();

    let mut names: Vec<String> = cfg.lut.sources.clone();
    if (literal || cfg.lut.literal) && !names.iter().any(|n| n == LiteralSource::NAME) {
        names.push(LiteralSource::NAME.to_string());
    }

    let mut tables = Vec::new();
    for name in &names {
        let source = registry.get(name)?();
        let table = build_lut(&bench, &grid, source.as_ref())?;
        let path = out.join(format!("lut_{}.csv", name.replace('-', "_")));
        table.save(&path)?;
        report.files.push(path);
        let (lo, hi) = table.g_range();
        report.info(format!(
            "{name}: {} knots, g in [{lo:e}, {hi:e}] S, {} grid points trimmed",
            table.entries().len(),
            table.trimmed().len()
        ));
        tables.push((name.clone(), table));
    }

    let comparator = bench.comparator();
    let consistent = |v: f64| g_of_vdlp(comparator, v, TripFormVariant::Consistent).unwrap_or(f64::NAN);
    if let Some((_, sim)) = tables.iter().find(|(n, _)| n == SimulatedSource::NAME) {
        match interior_max_rel_error(sim, bench.memristor(), consistent) {
            Some(err) => report.check(
                "analytic_vs_simulated_divergence",
                err <= cfg.lut.max_divergence,
                format!(
                    "max interior relative error {:.4}% (limit {:.2}%)",
                    100.0 * err,
                    100.0 * cfg.lut.max_divergence
                ),
            ),
            None => report.check(
                "analytic_vs_simulated_divergence",
                false,
                "simulated table has no interior knots",
            ),
        }
        if names.iter().any(|n| n == LiteralSource::NAME) {
            let literal =
                |v: f64| g_of_vdlp(comparator, v, TripFormVariant::Literal).unwrap_or(f64::NAN);
            let detail = match interior_max_rel_error(sim, bench.memristor(), literal) {
                Some(e) => format!("literal vs simulated: max interior relative error {:.1}%", 100.0 * e),
                None => "literal vs simulated: no interior knots".into(),
            };
            report.info(detail);
        }
    }

    if names.iter().any(|n| n == LiteralSource::NAME) {
        if comparator.law().name() == SquareLaw::NAME {
            let gap = comparator.beta() * 0.75 * comparator.rails().v_read;
            let points: Vec<f64> = grid
                .iter()
                .copied()
                .filter(|&v| comparator.program_saturated_at_trip(v))
                .collect();
            let worst = points
                .iter()
                .map(|&v| {
                    let d = g_of_vdlp(comparator, v, TripFormVariant::Consistent)?
                        - g_of_vdlp(comparator, v, TripFormVariant::Literal)?;
                    Ok((d - gap).abs() / gap)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            report.check(
                "literal_constant_offset",
                worst <= 1e-9,
                format!(
                    "offset {gap:e} S at {} of {} grid points (program transistor saturated at the trip), worst relative deviation {worst:e}",
                    points.len(),
                    grid.len()
                ),
            );
        } else {
            report.info("literal offset is a square-law identity; not checked for this law");
        }
    }
    report.finish(out)
}

// ---------------------------------------------------------------- array demo

/// Writes performed for a job, with the data needed for the staircase.
#[derive(Debug, Clone)]
pub struct WriteRecord {
    pub addr: CellAddress,
    pub target: f64,
    pub v_dlp: f64,
    pub reset: ProgramResult,
    pub set: ProgramResult,
    /// Flat indices of other memristors whose state changed.
    pub disturbed: Vec<usize>,
}

/// Resolves a job into per-memristor conductance targets and don't-care
/// flags, then runs every write through the shared circuit.
pub fn run_job(
    array: &mut AcamArray,
    ops: &[JobOp],
    lut: &LutTable,
) -> Result<Vec<WriteRecord>> {
    let comparator = array.bench().comparator().clone();
    let mut writes = Vec::new();
    for op in ops {
        match *op {
            JobOp::Target {
                row,
                col,
                side,
                target_siemens,
            } => writes.push((CellAddress::new(row, col, side), target_siemens)),
            JobOp::Window { row, col, window } => {
                let [lo, hi] = window;
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(Error::InvalidParameter {
                        name: "window",
                        reason: format!("lo {lo} above hi {hi} at row {row} col {col}"),
                    });
                }
                writes.push((
                    CellAddress::new(row, col, Side::Lb),
                    comparator.conductance_for_search_boundary(lo)?,
                ));
                writes.push((
                    CellAddress::new(row, col, Side::Hb),
                    comparator.conductance_for_search_boundary(hi)?,
                ));
            }
            JobOp::DontCare {
                row,
                col,
                dont_care,
            } => array.set_dont_care(row, col, dont_care)?,
        }
    }

    let mut records = Vec::with_capacity(writes.len());
    for (addr, target) in writes {
        let before = array.snapshot();
        let w = array.write_cell(addr, target, lut)?;
        let after = array.snapshot();
        let own = array.flat_index(addr);
        let disturbed = before
            .iter()
            .zip(&after)
            .enumerate()
            .filter(|&(i, (a, b))| i != own && a.to_bits() != b.to_bits())
            .map(|(i, _)| i)
            .collect();
        records.push(WriteRecord {
            addr,
            target,
            v_dlp: w.v_dlp,
            reset: w.reset,
            set: w.set,
            disturbed,
        });
    }
    Ok(records)
}

fn write_staircase(
    path: &Path,
    array: &AcamArray,
    records: &[WriteRecord],
    stride: usize,
) -> Result<()> {
    let stride = stride.max(1);
    let g_off = array.bench().memristor().g_off;
    let labels: Vec<String> = array.addresses().map(|a| a.to_string()).collect();
    let mut g = vec![g_off; labels.len()];
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(labels);
    w.write_record(&header)?;
    let mut t0 = 0.0;
    for rec in records {
        let idx = array.flat_index(rec.addr);
        for result in [&rec.reset, &rec.set] {
            let samples = &result.trace.samples;
            for (k, s) in samples.iter().enumerate() {
                if k % stride != 0 && k + 1 != samples.len() {
                    continue;
                }
                g[idx] = s.g_mem;
                let mut row = vec![format!("{:e}", t0 + s.t)];
                row.extend(g.iter().map(|v| format!("{v:e}")));
                w.write_record(&row)?;
            }
            t0 += samples.last().map_or(0.0, |s| s.t) + result.trace.dt;
        }
    }
    flush(w, path)
}

fn write_ops(path: &Path, records: &[WriteRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "op",
        "row",
        "col",
        "side",
        "phase",
        "target_siemens",
        "v_dlp",
        "final_g",
        "stop_time",
        "outcome",
    ])?;
    for (i, r) in records.iter().enumerate() {
        for (phase, res, target, v) in [
            ("reset", &r.reset, String::new(), String::new()),
            ("set", &r.set, format!("{:e}", r.target), format!("{}", r.v_dlp)),
        ] {
            w.write_record([
                i.to_string(),
                r.addr.row.to_string(),
                r.addr.col.to_string(),
                r.addr.side.to_string(),
                phase.to_string(),
                target,
                v,
                format!("{:e}", res.final_g),
                opt(res.stop_time),
                res.outcome.to_string(),
            ])?;
        }
    }
    flush(w, path)
}

fn write_windows(path: &Path, windows: &[SearchWindow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["row", "col", "lo_volts", "hi_volts"])?;
    for win in windows {
        w.write_record([
            win.row.to_string(),
            win.col.to_string(),
            format!("{}", win.lo),
            format!("{}", win.hi),
        ])?;
    }
    flush(w, path)
}

/// Search inputs and the one-hot match vector of each.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRecord {
    pub inputs: Vec<f64>,
    pub matches: Vec<bool>,
}

fn write_search(path: &Path, rows: usize, records: &[SearchRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let cols = records.first().map_or(0, |r| r.inputs.len());
    let mut header = vec!["probe".to_string()];
    header.extend((0..cols).map(|c| format!("v{c}")));
    header.extend((0..rows).map(|r| format!("row{r}")));
    w.write_record(&header)?;
    for (i, r) in records.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(r.inputs.iter().map(|v| format!("{v}")));
        row.extend(r.matches.iter().map(|&m| u8::from(m).to_string()));
        w.write_record(&row)?;
    }
    flush(w, path)
}

/// Independent point-in-window evaluation of a search.
fn expected_matches(windows: &[SearchWindow], rows: usize, cols: usize, inputs: &[f64]) -> Vec<bool> {
    (0..rows)
        .map(|r| {
            (0..cols).all(|c| {
                let w = &windows[r * cols + c];
                w.dont_care || (w.lo <= inputs[c] && inputs[c] <= w.hi)
            })
        })
        .collect()
}

fn random_inputs(rng: &mut ChaCha8Rng, n: usize, cols: usize, v_read: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..cols).map(|_| rng.gen_range(0.0..=v_read)).collect())
        .collect()
}

/// Builds the simulated LUT the array writes with.
pub fn array_lut(cfg: &ExperimentConfig, bench: &Bench) -> Result<LutTable> {
    build_lut(bench, &cfg.lut_grid(bench)?, &SimulatedSource)
}

fn programmed_array(
    cfg: &ExperimentConfig,
    report: &mut Report,
    out: &Path,
) -> Result<(AcamArray, Vec<WriteRecord>)> {
    let bench = cfg.bench()?;
    let lut = array_lut(cfg, &bench)?;
    let lut_path = out.join("array_lut.csv");
    lut.save(&lut_path)?;
    report.files.push(lut_path);

    let mut array = AcamArray::new(cfg.array.rows, cfg.array.cols, bench)?;
    let job = cfg.job()?;
    let records = run_job(&mut array, &job.op, &lut)?;

    let disturbed: usize = records.iter().map(|r| r.disturbed.len()).sum();
    report.check(
        "isolation",
        disturbed == 0,
        format!(
            "{} writes, {disturbed} non-addressed memristor states changed",
            records.len()
        ),
    );
    let worst = records
        .iter()
        .map(|r| (r.set.final_g - r.target).abs() / r.target)
        .fold(0.0, f64::max);
    report.info(format!(
        "worst programmed conductance error {:.3}%",
        100.0 * worst
    ));
    Ok((array, records))
}

pub fn cmd_array_demo(cfg: &ExperimentConfig) -> Result<Report> {
    let out = cfg.experiment.out_dir.clone();
    prepare_out(&out)?;
    let mut report = Report::new("array-demo", cfg);
    let (mut array, records) = programmed_array(cfg, &mut report, &out)?;
    let (rows, cols) = (array.rows(), array.cols());

    let path = out.join("array_ops.csv");
    write_ops(&path, &records)?;
    report.files.push(path);
    let path = out.join("staircase.csv");
    write_staircase(&path, &array, &records, cfg.array.staircase_stride)?;
    report.files.push(path);
    if cfg.array.write_traces {
        let dir = out.join("traces");
        prepare_out(&dir)?;
        for (i, r) in records.iter().enumerate() {
            for (phase, res) in [("reset", &r.reset), ("set", &r.set)] {
                let path = dir.join(format!("op{i:02}_{}_{phase}.csv", r.addr));
                let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
                res.trace.write_csv(BufWriter::new(file))?;
                report.files.push(path);
            }
        }
    }

    let v_read = array.bench().comparator().rails().v_read;
    let grid = uniform_grid(0.0, v_read, cfg.array.sweep_points);
    let step = if grid.len() > 1 { grid[1] - grid[0] } else { v_read };
    let closed = array.windows()?;
    let swept = match array.sweep_row_windows(&grid) {
        Ok(s) => s,
        Err(e) => {
            report.check("sweep", false, e.to_string());
            return report.finish(&out);
        }
    };
    let path = out.join("windows.csv");
    write_windows(&path, &swept)?;
    report.files.push(path);

    let edge_err = swept
        .iter()
        .zip(&closed)
        .filter(|(s, _)| !s.dont_care)
        .map(|(s, c)| (s.lo - c.lo).abs().max((s.hi - c.hi).abs()))
        .fold(0.0, f64::max);
    report.check(
        "window_edges_vs_closed_form",
        edge_err <= step + 1e-12,
        format!(
            "max edge error {:.3} mV, sweep step {:.3} mV",
            1e3 * edge_err,
            1e3 * step
        ),
    );
    for w in &closed {
        report.info(format!(
            "window r{}c{}: [{:.4}, {:.4}] V{}",
            w.row,
            w.col,
            w.lo,
            w.hi,
            if w.dont_care { " (don't care)" } else { "" }
        ));
    }

    let mut overlaps = 0;
    for col in 0..cols {
        let ws: Vec<&SearchWindow> = swept
            .iter()
            .filter(|w| w.col == col && !w.dont_care)
            .collect();
        for (i, a) in ws.iter().enumerate() {
            overlaps += ws[i + 1..].iter().filter(|b| !a.disjoint(b)).count();
        }
    }
    report.check(
        "windows_disjoint_per_column",
        overlaps == 0,
        format!("{overlaps} overlapping window pairs"),
    );

    let mut searches = Vec::new();
    let any_dont_care = closed.iter().any(|w| w.dont_care);
    let mut one_hot_failures = 0;
    for row in 0..rows {
        let inputs: Vec<f64> = (0..cols)
            .map(|c| {
                let w = &closed[row * cols + c];
                if w.dont_care {
                    0.5 * v_read
                } else {
                    0.5 * (w.lo + w.hi)
                }
            })
            .collect();
        let matches = array.search(&inputs)?;
        let hits: Vec<usize> = (0..rows).filter(|&r| matches[r]).collect();
        if !any_dont_care && hits != [row] {
            one_hot_failures += 1;
        }
        searches.push(SearchRecord { inputs, matches });
    }
    if any_dont_care {
        report.info("center probes not required one-hot: array has don't-care cells");
    } else {
        report.check(
            "center_probe_one_hot",
            one_hot_failures == 0,
            format!("{one_hot_failures} of {rows} center probes not one-hot"),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
    for inputs in random_inputs(&mut rng, cfg.array.random_probes, cols, v_read) {
        let matches = array.search(&inputs)?;
        searches.push(SearchRecord { inputs, matches });
    }
    let disagree = searches
        .iter()
        .filter(|s| expected_matches(&swept, rows, cols, &s.inputs) != s.matches)
        .filter(|s| !near_edge(&swept, &s.inputs, step))
        .count();
    report.check(
        "search_agrees_with_swept_windows",
        disagree == 0,
        format!(
            "{disagree} of {} probes disagree (probes within one sweep step of an edge excluded)",
            searches.len()
        ),
    );
    let path = out.join("search.csv");
    write_search(&path, rows, &searches)?;
    report.files.push(path);
    report.finish(&out)
}

fn near_edge(windows: &[SearchWindow], inputs: &[f64], step: f64) -> bool {
    let cols = inputs.len();
    windows.iter().any(|w| {
        let v = inputs[w.col % cols];
        !w.dont_care && ((v - w.lo).abs() <= step || (v - w.hi).abs() <= step)
    })
}

// --------------------------------------------------------------- search demo

/// Programs the job, then searches `inputs` (or seeded random inputs when
/// none are given) and checks each result against point-in-window
/// evaluation.
pub fn cmd_search(cfg: &ExperimentConfig, inputs: Option<Vec<Vec<f64>>>) -> Result<Report> {
    let out = cfg.experiment.out_dir.clone();
    prepare_out(&out)?;
    let mut report = Report::new("search", cfg);
    let (mut array, _) = programmed_array(cfg, &mut report, &out)?;
    let (rows, cols) = (array.rows(), array.cols());
    let v_read = array.bench().comparator().rails().v_read;
    let inputs = match inputs {
        Some(v) => v,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
            random_inputs(&mut rng, 1000, cols, v_read)
        }
    };
    let windows = array.windows()?;
    let path = out.join("windows.csv");
    write_windows(&path, &windows)?;
    report.files.push(path);

    let mut records = Vec::with_capacity(inputs.len());
    let mut disagree = 0;
    for input in inputs {
        let matches = array.search(&input)?;
        if expected_matches(&windows, rows, cols, &input) != matches {
            disagree += 1;
        }
        records.push(SearchRecord {
            inputs: input,
            matches,
        });
    }
    report.check(
        "search_agrees_with_windows",
        disagree == 0,
        format!("{disagree} of {} searches disagree", records.len()),
    );
    let path = out.join("search.csv");
    write_search(&path, rows, &records)?;
    report.files.push(path);
    report.finish(&out)
}

// ------------------------------------------------------------ single device

/// What `cmd_set` programs toward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetTarget {
    Voltage(f64),
    /// Conductance (S); the voltage comes from the closed-form
    /// programming boundary.
    Conductance(f64),
}

pub fn cmd_set(cfg: &ExperimentConfig, target: SetTarget, w0: f64) -> Result<Report> {
    let out = &cfg.experiment.out_dir;
    prepare_out(out)?;
    let bench = cfg.bench()?;
    let mut report = Report::new("set", cfg);
    let v_dlp = match target {
        SetTarget::Voltage(v) => v,
        SetTarget::Conductance(g) => bench.comparator().boundary_program_mode(g)?,
    };
    let mut cell = crate::devices::MemristorState::new(*bench.memristor(), w0)?;
    let result = bench.controller().run_set(&mut cell, v_dlp)?;
    let path = out.join("set_trace.csv");
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    result.trace.write_csv(BufWriter::new(file))?;
    report.files.push(path);
    report.info(format!(
        "v_dlp {v_dlp} V, outcome {}, stop_time {}, final_g {:e} S",
        result.outcome,
        opt(result.stop_time),
        result.final_g
    ));
    if let SetTarget::Conductance(g) = target {
        let err = (result.final_g - g).abs() / g;
        report.check(
            "final_g_near_target",
            err <= 0.02,
            format!("relative error {:.3}%", 100.0 * err),
        );
    }
    report.finish(out)
}

/// Resets one device from state `w0` and reads it back in verify mode.
pub fn cmd_reset(cfg: &ExperimentConfig, w0: f64) -> Result<Report> {
    let out = &cfg.experiment.out_dir;
    prepare_out(out)?;
    let bench = cfg.bench()?;
    let g_off = bench.memristor().g_off;
    let mut report = Report::new("reset", cfg);
    let mut array = AcamArray::new(1, 1, bench)?;
    let addr = CellAddress::new(0, 0, Side::Lb);
    array.preset(addr, w0)?;
    let result = array.reset_cell(addr)?;
    let path = out.join("reset_trace.csv");
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    result.trace.write_csv(BufWriter::new(file))?;
    report.files.push(path);
    let t_end = result.trace.samples.last().map_or(0.0, |s| s.t);
    report.check(
        "reset_complete",
        result.outcome == Outcome::ResetComplete,
        format!("outcome {} after {t_end:e} s", result.outcome),
    );
    let read = array.verify_cell(addr)?;
    let err = (read - g_off).abs() / g_off;
    report.check(
        "verify_reads_g_off",
        err <= 0.01,
        format!("verify read {read:e} S, relative error {:.4}%", 100.0 * err),
    );
    report.finish(out)
}

/// Runs the experiment named in the config.
pub fn run_experiment(cfg: &ExperimentConfig, literal: bool) -> Result<Report> {
    use crate::config::ExperimentKind::*;
    match cfg.experiment.kind {
        CellSweep => cmd_cell_sweep(cfg),
        BuildLut => cmd_build_lut(cfg, literal),
        ArrayDemo => cmd_array_demo(cfg),
        SearchDemo => cmd_search(cfg, None),
    }
}
