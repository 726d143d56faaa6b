// SPDX-License-Identifier: Apache-2.0

//! Lookup table between the programming data-line voltage and the
//! conductance a set episode stops at.
//!
//! Tables come from interchangeable [`LutSource`] strategies: the
//! closed-form trip conductance, the uncorrected literal form kept
//! for comparison, and full controller transients.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::Bench;
use crate::comparator::Comparator;
use crate::controller::Outcome;
use crate::devices::MemristorParams;
use crate::error::{ensure_finite, Error, Result};

pub const CSV_HEADER: [&str; 2] = ["v_dlp_volts", "g_mem_siemens"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TripFormVariant {
    /// Trip conductance of the program branch, `I_T(V_DLP, V_dth) / (V_set − V_dth)`.
    Consistent,
    /// `K′·W/L·[(V_DLP − V_T)²/(2(V_set − V_dth)) − ¾·V_read]`, the
    /// uncorrected form with a constant offset.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AnalyticConsistent,
    AnalyticLiteral,
    Simulated,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::AnalyticConsistent => "analytic-consistent",
            Provenance::AnalyticLiteral => "analytic-literal",
            Provenance::Simulated => "simulated",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "analytic-consistent" => Ok(Provenance::AnalyticConsistent),
            "analytic-literal" => Ok(Provenance::AnalyticLiteral),
            "simulated" => Ok(Provenance::Simulated),
            other => Err(Error::Format(format!("unknown LUT provenance `{other}`"))),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeFlag {
    Below,
    Within,
    Above,
}

pub fn classify(g: f64, mem: &MemristorParams) -> RangeFlag {
    if g < mem.g_off {
        RangeFlag::Below
    } else if g > mem.g_on {
        RangeFlag::Above
    } else {
        RangeFlag::Within
    }
}

/// Closed-form programmed conductance for `v_dlp`. The result is not
/// clamped; use [`classify`] to check it against the device range. The
/// literal variant goes negative for small `v_dlp`.
pub fn g_of_vdlp(comparator: &Comparator, v_dlp: f64, variant: TripFormVariant) -> Result<f64> {
    ensure_finite("v_dlp", v_dlp)?;
    let rails = comparator.rails();
    if v_dlp < comparator.v_t() || v_dlp > rails.v_set {
        return Err(Error::RejectedInput {
            name: "v_dlp",
            value: v_dlp,
            reason: "programming voltage outside [V_T, V_set]",
        });
    }
    Ok(match variant {
        TripFormVariant::Consistent => comparator.programmed_conductance(v_dlp),
        TripFormVariant::Literal => {
            let ov = v_dlp - comparator.v_t();
            comparator.beta() * (ov * ov / (2.0 * comparator.stop_drop()) - 0.75 * rails.v_read)
        }
    })
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutSample {
    pub v_dlp: f64,
    pub g_mem: f64,
    /// False when the point cannot be part of a table (outside the device
    /// range, or a transient that did not stop on threshold).
    pub usable: bool,
}

/// A strategy producing the conductance reached for a programming voltage.
pub trait LutSource: Send + Sync {
    fn name(&self) -> &'static str;
    fn provenance(&self) -> Provenance;
    fn sample(&self, bench: &Bench, v_dlp: f64) -> Result<LutSample>;
}

fn analytic_sample(bench: &Bench, v_dlp: f64, variant: TripFormVariant) -> Result<LutSample> {
    let g = g_of_vdlp(bench.comparator(), v_dlp, variant)?;
    Ok(LutSample {
        v_dlp,
        g_mem: g,
        usable: classify(g, bench.memristor()) == RangeFlag::Within,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyticSource;

impl AnalyticSource {
    pub const NAME: &'static str = "analytic";
}

impl LutSource for AnalyticSource {
    fn name(&self) -> &'static str {
        Self::NAME
    }
    fn provenance(&self) -> Provenance {
        Provenance::AnalyticConsistent
    }
    fn sample(&self, bench: &Bench, v_dlp: f64) -> Result<LutSample> {
        analytic_sample(bench, v_dlp, TripFormVariant::Consistent)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LiteralSource;

impl LiteralSource {
    pub const NAME: &'static str = "literal";
}

impl LutSource for LiteralSource {
    fn name(&self) -> &'static str {
        Self::NAME
    }
    fn provenance(&self) -> Provenance {
        Provenance::AnalyticLiteral
    }
    fn sample(&self, bench: &Bench, v_dlp: f64) -> Result<LutSample> {
        analytic_sample(bench, v_dlp, TripFormVariant::Literal)
    }
}

/// Runs a set episode on a freshly reset device for every grid point.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimulatedSource;

impl SimulatedSource {
    pub const NAME: &'static str = "simulated";
}

impl LutSource for SimulatedSource {
    fn name(&self) -> &'static str {
        Self::NAME
    }
    fn provenance(&self) -> Provenance {
        Provenance::Simulated
    }
    fn sample(&self, bench: &Bench, v_dlp: f64) -> Result<LutSample> {
        let mut cell = bench.fresh_cell();
        let result = bench.controller().run_set(&mut cell, v_dlp)?;
        Ok(LutSample {
            v_dlp,
            g_mem: result.final_g,
            usable: result.outcome == Outcome::StoppedOnThreshold,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutEntry {
    pub v_dlp: f64,
    pub g_mem: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LutTable {
    entries: Vec<LutEntry>,
    provenance: Provenance,
    fingerprint: String,
    trimmed: Vec<LutSample>,
}

/// `n` uniform points over `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// 64 points over `[V_T + 50 mV, V_set − 50 mV]`.
pub fn default_grid(comparator: &Comparator) -> Vec<f64> {
    uniform_grid(comparator.v_t() + 0.05, comparator.rails().v_set - 0.05, 64)
}

pub fn build_lut(bench: &Bench, grid: &[f64], source: &dyn LutSource) -> Result<LutTable> {
    let comparator = bench.comparator();
    let (lo, hi) = (comparator.v_t(), comparator.rails().v_set);
    let grid_ok = !grid.is_empty()
        && grid.iter().all(|v| v.is_finite() && (lo..=hi).contains(v))
        && grid.windows(2).all(|w| w[1] > w[0]);
    if !grid_ok {
        return Err(Error::BadGrid { lo, hi });
    }

    let samples = grid
        .par_iter()
        .map(|&v| source.sample(bench, v))
        .collect::<Result<Vec<_>>>()?;

    // Longest run of usable samples with strictly increasing conductance.
    let (mut best, mut start) = ((0, 0), 0);
    for i in 0..samples.len() {
        let continues = i > start
            && samples[i].usable
            && samples[i - 1].usable
            && samples[i].g_mem > samples[i - 1].g_mem;
        if !continues {
            start = i;
        }
        if samples[i].usable && i + 1 - start > best.1 - best.0 {
            best = (start, i + 1);
        }
    }
    if best.1 == best.0 {
        return Err(Error::EmptyLut {
            trimmed: samples.len(),
        });
    }
    let entries = samples[best.0..best.1]
        .iter()
        .map(|s| LutEntry {
            v_dlp: s.v_dlp,
            g_mem: s.g_mem,
        })
        .collect();
    let trimmed = samples[..best.0]
        .iter()
        .chain(&samples[best.1..])
        .copied()
        .collect();
    Ok(LutTable {
        entries,
        provenance: source.provenance(),
        fingerprint: bench.fingerprint(),
        trimmed,
    })
}

impl LutTable {
    /// Builds a table from explicit entries, validating monotonicity.
    pub fn from_entries(
        entries: Vec<LutEntry>,
        provenance: Provenance,
        fingerprint: impl Into<String>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyLut { trimmed: 0 });
        }
        let monotone = entries
            .windows(2)
            .all(|w| w[1].v_dlp > w[0].v_dlp && w[1].g_mem > w[0].g_mem);
        let finite = entries
            .iter()
            .all(|e| e.v_dlp.is_finite() && e.g_mem.is_finite());
        if !monotone || !finite {
            return Err(Error::Format(
                "LUT entries must be finite and strictly increasing in both columns".into(),
            ));
        }
        Ok(Self {
            entries,
            provenance,
            fingerprint: fingerprint.into(),
            trimmed: Vec::new(),
        })
    }

    pub fn entries(&self) -> &[LutEntry] {
        &self.entries
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Grid points dropped while building (clipped or non-monotone ends).
    pub fn trimmed(&self) -> &[LutSample] {
        &self.trimmed
    }

    pub fn g_range(&self) -> (f64, f64) {
        (
            self.entries[0].g_mem,
            self.entries[self.entries.len() - 1].g_mem,
        )
    }

    pub fn check_fingerprint(&self, live: &str) -> Result<()> {
        if self.fingerprint != live {
            return Err(Error::FingerprintMismatch {
                table: self.fingerprint.clone(),
                live: live.to_string(),
            });
        }
        Ok(())
    }

    /// Programming voltage for `g_target`, piecewise-linear in `g → v_dlp`.
    pub fn vdlp_for_target(&self, g_target: f64) -> Result<f64> {
        ensure_finite("g_target", g_target)?;
        let (g_min, g_max) = self.g_range();
        if g_target < g_min || g_target > g_max {
            return Err(Error::TargetOutOfRange {
                target: g_target,
                g_min,
                g_max,
            });
        }
        let i = self.entries.partition_point(|e| e.g_mem < g_target);
        let hi = self.entries[i];
        if hi.g_mem == g_target || i == 0 {
            return Ok(hi.v_dlp);
        }
        let lo = self.entries[i - 1];
        let t = (g_target - lo.g_mem) / (hi.g_mem - lo.g_mem);
        Ok(lo.v_dlp + t * (hi.v_dlp - lo.v_dlp))
    }

    /// Forward interpolation `v_dlp → g`, `None` outside the table.
    pub fn g_at(&self, v_dlp: f64) -> Option<f64> {
        let first = self.entries.first()?;
        let last = self.entries.last()?;
        if !(first.v_dlp..=last.v_dlp).contains(&v_dlp) {
            return None;
        }
        let i = self.entries.partition_point(|e| e.v_dlp < v_dlp);
        let hi = self.entries[i];
        if hi.v_dlp == v_dlp || i == 0 {
            return Some(hi.g_mem);
        }
        let lo = self.entries[i - 1];
        let t = (v_dlp - lo.v_dlp) / (hi.v_dlp - lo.v_dlp);
        Some(lo.g_mem + t * (hi.g_mem - lo.g_mem))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# fingerprint={} provenance={}",
            self.fingerprint, self.provenance
        )
        .map_err(|e| Error::io("<lut>", e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for e in &self.entries {
            w.write_record([format!("{}", e.v_dlp), format!("{:e}", e.g_mem)])?;
        }
        w.flush().map_err(|e| Error::io("<lut>", e))?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input
            .read_line(&mut first)
            .map_err(|e| Error::io("<lut>", e))?;
        let meta = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Format("LUT CSV must start with a `#` fingerprint line".into()))?;
        let (mut fingerprint, mut provenance) = (None, None);
        for field in meta.split_whitespace() {
            match field.split_once('=') {
                Some(("fingerprint", v)) => fingerprint = Some(v.to_string()),
                Some(("provenance", v)) => provenance = Some(Provenance::parse(v)?),
                _ => {}
            }
        }
        let fingerprint =
            fingerprint.ok_or_else(|| Error::Format("missing fingerprint=".into()))?;
        let provenance = provenance.ok_or_else(|| Error::Format("missing provenance=".into()))?;

        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Format(format!(
                "LUT header must be `{}`",
                CSV_HEADER.join(",")
            )));
        }
        let mut entries = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad LUT row {:?}", record)))
            };
            entries.push(LutEntry {
                v_dlp: parse(0)?,
                g_mem: parse(1)?,
            });
        }
        Self::from_entries(entries, provenance, fingerprint)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// Largest relative deviation of `table` from `reference` over the knots
/// whose conductance lies in the interior of the device range (5 % margin
/// at each end).
pub fn interior_max_rel_error(
    table: &LutTable,
    mem: &MemristorParams,
    reference: impl Fn(f64) -> f64,
) -> Option<f64> {
    let margin = 0.05 * mem.g_range();
    table
        .entries()
        .iter()
        .filter(|e| e.g_mem >= mem.g_off + margin && e.g_mem <= mem.g_on - margin)
        .map(|e| {
            let g_ref = reference(e.v_dlp);
            (e.g_mem - g_ref).abs() / g_ref.abs()
        })
        .reduce(f64::max)
}
