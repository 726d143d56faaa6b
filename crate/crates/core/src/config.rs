// SPDX-License-Identifier: Apache-2.0

//! TOML experiment configuration and array job files.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::Side;
use crate::bench::Bench;
use crate::comparator::{ComparatorParams, Rails};
use crate::controller::ControllerConfig;
use crate::devices::{MemristorParams, TransistorParams};
use crate::error::{Error, Result};
use crate::lut::{default_grid, uniform_grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    CellSweep,
    BuildLut,
    ArrayDemo,
    SearchDemo,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::CellSweep => "cell_sweep",
            ExperimentKind::BuildLut => "build_lut",
            ExperimentKind::ArrayDemo => "array_demo",
            ExperimentKind::SearchDemo => "search_demo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::CellSweep,
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// A uniform grid, either by step or by point count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: 0.75,
            hi: 1.8,
            step: Some(0.05),
            points: None,
        }
    }
}

impl GridSpec {
    pub fn with_points(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            lo,
            hi,
            step: None,
            points: Some(points),
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi >= self.lo) {
            return Err(Error::BadGrid {
                lo: self.lo,
                hi: self.hi,
            });
        }
        match (self.step, self.points) {
            (Some(step), None) if step > 0.0 => {
                // Rounded so that a hi that is a whole number of steps away
                // is included despite float error.
                let n = ((self.hi - self.lo) / step + 1e-9).floor() as usize + 1;
                Ok((0..n).map(|k| self.lo + step * k as f64).collect())
            }
            (None, Some(n)) if n > 0 => Ok(uniform_grid(self.lo, self.hi, n)),
            _ => Err(Error::InvalidParameter {
                name: "grid",
                reason: "give exactly one of a positive step or a positive point count".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LutSection {
    /// Programming-voltage grid; the built-in default grid when absent.
    pub grid: Option<GridSpec>,
    /// Registered LUT source names to build.
    pub sources: Vec<String>,
    /// Also build the uncorrected literal analytic table.
    pub literal: bool,
    /// Largest accepted interior divergence between analytic and simulated.
    pub max_divergence: f64,
}

impl Default for LutSection {
    fn default() -> Self {
        Self {
            grid: None,
            sources: vec!["analytic".into(), "simulated".into()],
            literal: false,
            max_divergence: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid: GridSpec,
    /// R² a fitted range has to reach.
    pub r2_min: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            r2_min: 0.98,
        }
    }
}

/// One array operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum JobOp {
    /// Program one memristor to a conductance (S).
    Target {
        row: usize,
        col: usize,
        side: Side,
        target_siemens: f64,
    },
    /// Program both halves of a cell so its window is `[lo, hi]` (V).
    Window {
        row: usize,
        col: usize,
        window: [f64; 2],
    },
    DontCare {
        row: usize,
        col: usize,
        dont_care: bool,
    },
}

/// A list of array operations, as found under `[[op]]` in a job file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Job {
    pub op: Vec<JobOp>,
}

impl Job {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(toml::from_str(&text)?)
    }

    /// Four disjoint words of length two, spread over the search range
    /// reachable with the default devices.
    pub fn four_words() -> Self {
        const COL0: [[f64; 2]; 4] = [[0.35, 0.39], [0.40, 0.44], [0.45, 0.49], [0.50, 0.53]];
        let mut op = Vec::new();
        for row in 0..4 {
            op.push(JobOp::Window {
                row,
                col: 0,
                window: COL0[row],
            });
            op.push(JobOp::Window {
                row,
                col: 1,
                window: COL0[3 - row],
            });
        }
        Self { op }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub rows: usize,
    pub cols: usize,
    /// Job file with the operations; the built-in four-word job when absent.
    pub job: Option<PathBuf>,
    /// Points in the verification sweep over `[0, V_read]`.
    pub sweep_points: usize,
    /// Random in-window probes per row for the search check.
    pub random_probes: usize,
    /// Keep every n-th trace sample in the staircase CSV.
    pub staircase_stride: usize,
    /// Also write the full transient of every operation.
    pub write_traces: bool,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 2,
            job: None,
            sweep_points: 129,
            random_probes: 16,
            staircase_stride: 10,
            write_traces: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub memristor: MemristorParams,
    pub transistor: TransistorParams,
    pub comparator: Rails,
    pub controller: ControllerConfig,
    pub lut: LutSection,
    pub sweep: SweepSection,
    pub array: ArraySection,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.bench()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn comparator_params(&self) -> ComparatorParams {
        ComparatorParams {
            transistor: self.transistor.clone(),
            rails: self.comparator,
        }
    }

    pub fn bench(&self) -> Result<Bench> {
        Bench::new(
            self.memristor,
            self.comparator_params(),
            self.controller.clone(),
        )
    }

    pub fn lut_grid(&self, bench: &Bench) -> Result<Vec<f64>> {
        match &self.lut.grid {
            Some(g) => g.values(),
            None => Ok(default_grid(bench.comparator())),
        }
    }

    pub fn job(&self) -> Result<Job> {
        match &self.array.job {
            Some(path) => Job::load(path),
            None => Ok(Job::four_words()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_default() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.controller.dt = 5e-9;
        cfg.transistor.law = "linear-saturation".into();
        cfg.experiment.kind = ExperimentKind::ArrayDemo;
        cfg.lut.grid = Some(GridSpec::with_points(0.4, 1.0, 10));
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "[memristor]\ng_on = 1.5e-4\n[comparator]\nv_dth = 1.1\n[experiment]\nkind = \"build_lut\"\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.memristor.g_on, 1.5e-4);
        assert_eq!(cfg.memristor.g_off, 2e-6);
        assert_eq!(cfg.comparator.v_dth, 1.1);
        assert_eq!(cfg.experiment.kind, ExperimentKind::BuildLut);
        assert_eq!(cfg.experiment.seed, 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("[memristor]\ng_onn = 1.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[nonsense]\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml("[memristor]\ng_on = 1e-6\n").is_err());
        assert!(ExperimentConfig::from_toml("[transistor]\nlaw = \"bsim\"\n").is_err());
    }

    #[test]
    fn default_sweep_grid_has_22_points() {
        let g = GridSpec::default().values().unwrap();
        assert_eq!(g.len(), 22);
        assert_eq!(g[0], 0.75);
        assert!((g[21] - 1.8).abs() < 1e-12);
    }

    #[test]
    fn grid_needs_one_spacing() {
        let both = GridSpec {
            lo: 0.0,
            hi: 1.0,
            step: Some(0.1),
            points: Some(3),
        };
        assert!(both.values().is_err());
        assert!(GridSpec::with_points(1.0, 0.0, 3).values().is_err());
    }

    #[test]
    fn job_file_parses_all_op_kinds() {
        let job: Job = toml::from_str(
            r#"
            [[op]]
            row = 0
            col = 1
            side = "hb"
            target_siemens = 5e-5

            [[op]]
            row = 2
            col = 0
            window = [0.35, 0.4]

            [[op]]
            row = 3
            col = 1
            dont_care = true
            "#,
        )
        .unwrap();
        assert_eq!(
            job.op,
            vec![
                JobOp::Target {
                    row: 0,
                    col: 1,
                    side: Side::Hb,
                    target_siemens: 5e-5
                },
                JobOp::Window {
                    row: 2,
                    col: 0,
                    window: [0.35, 0.4]
                },
                JobOp::DontCare {
                    row: 3,
                    col: 1,
                    dont_care: true
                },
            ]
        );
    }

    #[test]
    fn four_words_are_disjoint_per_column() {
        let job = Job::four_words();
        assert_eq!(job.op.len(), 8);
        for col in 0..2 {
            let mut w: Vec<[f64; 2]> = job
                .op
                .iter()
                .filter_map(|op| match op {
                    JobOp::Window { col: c, window, .. } if *c == col => Some(*window),
                    _ => None,
                })
                .collect();
            w.sort_by(|a, b| a[0].total_cmp(&b[0]));
            assert!(w.windows(2).all(|p| p[0][1] < p[1][0]));
        }
    }
}
