// SPDX-License-Identifier: Apache-2.0

//! The analog feedback programming engine.
//!
//! A set episode arms the set-reset periphery (φ1), drives the program
//! branch with a fixed data-line voltage while the device conductance
//! grows (φ2), and flips the periphery once the comparator trips (φ3).
//! The positive-feedback race on the match line is a single discrete
//! switchover after `stop_latency`.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::comparator::Comparator;
use crate::devices::MemristorState;
use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Maximum episode length (s).
    pub t_max: f64,
    /// V_STOP after the trip; small enough to freeze the device (V).
    pub v_stop: f64,
    /// Delay between the trip and the periphery flip (s).
    pub stop_latency: f64,
    /// V_STOP during a reset, applied on the AE side (V).
    pub v_stop_reset: f64,
    /// Data-line gate voltage during a reset (V).
    pub v_dl_reset: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            dt: 10e-9,
            t_max: 35e-6,
            v_stop: 0.4,
            stop_latency: 0.0,
            v_stop_reset: 1.8,
            v_dl_reset: 1.8,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        for (name, v) in [
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("v_stop", self.v_stop),
            ("stop_latency", self.stop_latency),
            ("v_stop_reset", self.v_stop_reset),
            ("v_dl_reset", self.v_dl_reset),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(name, "must be finite and non-negative");
            }
        }
        if !(self.t_max > 0.0 && self.dt > 0.0 && self.dt <= self.t_max) {
            return bad("dt", "require 0 < dt <= t_max");
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Logic {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeripheryMode {
    Setting,
    Resetting,
    Idle,
}

impl fmt::Display for PeripheryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeripheryMode::Setting => "setting",
            PeripheryMode::Resetting => "resetting",
            PeripheryMode::Idle => "idle",
        })
    }
}

/// Source-line drive of the 1T1R set-reset periphery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeripheryState {
    pub mode: PeripheryMode,
    pub v_sl_ae: f64,
    pub v_sl_oe: f64,
}

impl PeripheryState {
    pub fn setting(v_high: f64) -> Self {
        Self {
            mode: PeripheryMode::Setting,
            v_sl_ae: 0.0,
            v_sl_oe: v_high,
        }
    }

    pub fn resetting(v_high: f64) -> Self {
        Self {
            mode: PeripheryMode::Resetting,
            v_sl_ae: v_high,
            v_sl_oe: 0.0,
        }
    }

    pub fn idle() -> Self {
        Self {
            mode: PeripheryMode::Idle,
            v_sl_ae: 0.0,
            v_sl_oe: 0.0,
        }
    }
}

/// CTRL0 high selects setting, CTRL1 high selects resetting.
pub fn periphery_from_ctrl(ctrl0: Logic, ctrl1: Logic, v_high: f64) -> Result<PeripheryState> {
    match (ctrl0, ctrl1) {
        (Logic::High, Logic::Low) => Ok(PeripheryState::setting(v_high)),
        (Logic::Low, Logic::High) => Ok(PeripheryState::resetting(v_high)),
        (Logic::Low, Logic::Low) => Ok(PeripheryState::idle()),
        (Logic::High, Logic::High) => Err(Error::InvalidControl),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Prepare,
    Set,
    Stop,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    StoppedOnThreshold,
    TimedOut,
    ResetComplete,
    /// Data line below V_T: the transistor never conducts.
    NoDrive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::StoppedOnThreshold => "stopped_on_threshold",
            Outcome::TimedOut => "timed_out",
            Outcome::ResetComplete => "reset_complete",
            Outcome::NoDrive => "no_drive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub v_out: f64,
    pub v_mid: f64,
    pub g_mem: f64,
    pub mode: PeripheryMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientTrace {
    pub dt: f64,
    pub samples: Vec<TraceSample>,
}

impl TransientTrace {
    pub const CSV_HEADER: [&'static str; 5] = ["t", "v_out", "v_mid", "g_mem", "mode"];

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for s in &self.samples {
            w.write_record([
                format!("{:e}", s.t),
                format!("{}", s.v_out),
                format!("{}", s.v_mid),
                format!("{:e}", s.g_mem),
                s.mode.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramResult {
    pub trace: TransientTrace,
    pub stop_time: Option<f64>,
    pub final_g: f64,
    pub phases: Vec<(Phase, f64)>,
    pub outcome: Outcome,
}

impl ProgramResult {
    /// Index of the first sample recorded in the stop phase.
    pub fn stop_index(&self) -> Option<usize> {
        let t_stop = self.stop_time?;
        self.trace.samples.iter().position(|s| s.t >= t_stop)
    }
}

#[derive(Debug, Clone)]
pub struct Controller {
    comparator: Comparator,
    config: ControllerConfig,
}

impl Controller {
    pub fn new(comparator: Comparator, config: ControllerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { comparator, config })
    }

    pub fn comparator(&self) -> &Comparator {
        &self.comparator
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Programs `cell` upward with data-line voltage `v_dlp` until the
    /// comparator trips or `t_max` elapses.
    ///
    /// The trip fires on the first sample where the program-branch mid node
    /// rises to `V_dth` (equivalently the inverted output falls to
    /// `V_set − V_dth`) after having been below it. A node already above
    /// `V_dth` when φ2 starts never arms the comparator.
    pub fn run_set(&self, cell: &mut MemristorState, v_dlp: f64) -> Result<ProgramResult> {
        ensure_finite("v_dlp", v_dlp)?;
        let rails = self.comparator.rails();
        if v_dlp > rails.v_set || v_dlp < 0.0 {
            return Err(Error::RejectedInput {
                name: "v_dlp",
                value: v_dlp,
                reason: "programming voltage outside [0, V_set]",
            });
        }
        let dt = self.config.dt;
        let mut phases = vec![(Phase::Prepare, 0.0), (Phase::Set, 0.0)];
        let mut sol = self.comparator.solve_program_branch(cell.conductance(), v_dlp)?;
        let mut samples = vec![TraceSample {
            t: 0.0,
            v_out: sol.v_out,
            v_mid: sol.v_mid,
            g_mem: cell.conductance(),
            mode: PeripheryMode::Setting,
        }];

        if v_dlp < self.comparator.v_t() {
            return Ok(ProgramResult {
                trace: TransientTrace { dt, samples },
                stop_time: None,
                final_g: cell.conductance(),
                phases,
                outcome: Outcome::NoDrive,
            });
        }

        let mut armed = sol.v_mid < rails.v_dth;
        let mut stop_time = None;
        let mut flipped = false;
        for k in 1..=self.config.steps() {
            let t = k as f64 * dt;
            if flipped {
                cell.step(-self.config.v_stop, dt)?;
                samples.push(TraceSample {
                    t,
                    v_out: 0.0,
                    v_mid: self.config.v_stop,
                    g_mem: cell.conductance(),
                    mode: PeripheryMode::Resetting,
                });
                continue;
            }

            cell.step(rails.v_set - sol.v_mid, dt)?;
            let prev = sol;
            sol = self.comparator.solve_program_branch(cell.conductance(), v_dlp)?;
            samples.push(TraceSample {
                t,
                v_out: sol.v_out,
                v_mid: sol.v_mid,
                g_mem: cell.conductance(),
                mode: PeripheryMode::Setting,
            });

            match stop_time {
                None if armed && sol.v_mid >= rails.v_dth => {
                    let frac = (rails.v_dth - prev.v_mid) / (sol.v_mid - prev.v_mid);
                    let t_stop = t - dt + dt * frac.clamp(0.0, 1.0);
                    stop_time = Some(t_stop);
                    phases.push((Phase::Stop, t_stop));
                }
                None if sol.v_mid < rails.v_dth => armed = true,
                _ => {}
            }
            if let Some(t_stop) = stop_time {
                flipped = t >= t_stop + self.config.stop_latency;
            }
        }

        let outcome = if stop_time.is_some() {
            Outcome::StoppedOnThreshold
        } else {
            Outcome::TimedOut
        };
        Ok(ProgramResult {
            trace: TransientTrace { dt, samples },
            stop_time,
            final_g: cell.conductance(),
            phases,
            outcome,
        })
    }

    /// Drives `cell` to its lowest conductance with the periphery in the
    /// resetting state.
    pub fn run_reset(&self, cell: &mut MemristorState) -> Result<ProgramResult> {
        let dt = self.config.dt;
        let rail = self.config.v_stop_reset;
        let gate = self.config.v_dl_reset;
        let phases = vec![(Phase::Reset, 0.0)];
        let mut sol = self.comparator.solve_branch(rail, cell.conductance(), gate)?;
        let mut samples = vec![TraceSample {
            t: 0.0,
            v_out: sol.v_out,
            v_mid: sol.v_mid,
            g_mem: cell.conductance(),
            mode: PeripheryMode::Resetting,
        }];
        let mut done = cell.w() == 0.0;
        let mut k = 0;
        while !done && k < self.config.steps() {
            k += 1;
            cell.step(-(rail - sol.v_mid), dt)?;
            sol = self.comparator.solve_branch(rail, cell.conductance(), gate)?;
            samples.push(TraceSample {
                t: k as f64 * dt,
                v_out: sol.v_out,
                v_mid: sol.v_mid,
                g_mem: cell.conductance(),
                mode: PeripheryMode::Resetting,
            });
            done = cell.w() == 0.0;
        }
        Ok(ProgramResult {
            trace: TransientTrace { dt, samples },
            stop_time: None,
            final_g: cell.conductance(),
            phases,
            outcome: if done {
                Outcome::ResetComplete
            } else {
                Outcome::TimedOut
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Bench;
    use crate::devices::MemristorParams;

    fn bench() -> Bench {
        Bench::default()
    }

    #[test]
    fn periphery_truth_table() {
        let s = periphery_from_ctrl(Logic::High, Logic::Low, 1.8).unwrap();
        assert_eq!(s.mode, PeripheryMode::Setting);
        assert_eq!((s.v_sl_oe, s.v_sl_ae), (1.8, 0.0));
        let r = periphery_from_ctrl(Logic::Low, Logic::High, 1.8).unwrap();
        assert_eq!(r.mode, PeripheryMode::Resetting);
        assert!(r.v_sl_ae > r.v_sl_oe);
        assert_eq!(
            periphery_from_ctrl(Logic::Low, Logic::Low, 1.8).unwrap().mode,
            PeripheryMode::Idle
        );
        assert!(matches!(
            periphery_from_ctrl(Logic::High, Logic::High, 1.8),
            Err(Error::InvalidControl)
        ));
    }

    #[test]
    fn config_validation() {
        let c = ControllerConfig {
            dt: 1e-3,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ControllerConfig {
            stop_latency: -1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert!(ControllerConfig::default().validate().is_ok());
    }

    #[test]
    fn set_stops_at_target_and_freezes() {
        let b = bench();
        let c = b.comparator();
        let g_star = 80e-6;
        let v = c.boundary_program_mode(g_star).unwrap();
        let mut cell = b.fresh_cell();
        let r = b.controller().run_set(&mut cell, v).unwrap();
        assert_eq!(r.outcome, Outcome::StoppedOnThreshold);
        assert!((r.final_g - g_star).abs() / g_star < 0.02, "{}", r.final_g);
        assert_eq!(cell.conductance(), r.final_g);

        let i = r.stop_index().unwrap();
        let frozen = r.trace.samples[i].g_mem;
        assert!(r.trace.samples[i..].iter().all(|s| s.g_mem == frozen));
        assert!(r.trace.samples[i].v_mid >= 1.2 && r.trace.samples[i - 1].v_mid < 1.2);
        // inverted output falls through V_set - V_dth at the trip
        assert!(r.trace.samples[i].v_out <= 0.6 + 1e-12 && r.trace.samples[i - 1].v_out > 0.6);

        let phases: Vec<Phase> = r.phases.iter().map(|p| p.0).collect();
        assert_eq!(phases, vec![Phase::Prepare, Phase::Set, Phase::Stop]);
    }

    #[test]
    fn v_out_descends_during_set() {
        let b = bench();
        let v = b.comparator().boundary_program_mode(120e-6).unwrap();
        let r = b.controller().run_set(&mut b.fresh_cell(), v).unwrap();
        let i = r.stop_index().unwrap();
        for w in r.trace.samples[..=i].windows(2) {
            assert!(w[1].v_out <= w[0].v_out);
        }
    }

    #[test]
    fn trace_is_uniform() {
        let b = bench();
        let r = b.controller().run_set(&mut b.fresh_cell(), 0.5).unwrap();
        assert_eq!(r.trace.samples.len(), 3501);
        for (k, s) in r.trace.samples.iter().enumerate() {
            assert_eq!(s.t, k as f64 * 10e-9);
        }
    }

    #[test]
    fn threshold_gate_times_out_unchanged() {
        let b = bench();
        let mut cell = b.fresh_cell();
        let r = b.controller().run_set(&mut cell, 0.3).unwrap();
        assert_eq!(r.outcome, Outcome::TimedOut);
        assert_eq!(r.final_g, 2e-6);
        assert_eq!(r.stop_time, None);
    }

    #[test]
    fn below_threshold_is_no_drive() {
        let b = bench();
        let r = b.controller().run_set(&mut b.fresh_cell(), 0.2).unwrap();
        assert_eq!(r.outcome, Outcome::NoDrive);
        assert!(b.controller().run_set(&mut b.fresh_cell(), 1.9).is_err());
    }

    #[test]
    fn above_range_clips_at_g_on() {
        let b = bench();
        let r = b.controller().run_set(&mut b.fresh_cell(), 0.9).unwrap();
        assert_eq!(r.outcome, Outcome::TimedOut);
        assert_eq!(r.final_g, 200e-6);
    }

    #[test]
    fn latency_lets_conductance_overshoot() {
        let b = bench();
        let v = b.comparator().boundary_program_mode(60e-6).unwrap();
        let base = b.controller().run_set(&mut b.fresh_cell(), v).unwrap();
        let mut config = b.controller().config().clone();
        config.stop_latency = 200e-9;
        let slow = Controller::new(b.comparator().clone(), config).unwrap();
        let late = slow.run_set(&mut b.fresh_cell(), v).unwrap();
        assert_eq!(late.stop_time, base.stop_time);
        assert!(late.final_g > base.final_g);
    }

    #[test]
    fn deterministic() {
        let b = bench();
        let a = b.controller().run_set(&mut b.fresh_cell(), 0.55).unwrap();
        let c = b.controller().run_set(&mut b.fresh_cell(), 0.55).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn reset_from_full_set() {
        let b = bench();
        let mut cell = MemristorState::new(*b.memristor(), 1.0).unwrap();
        let r = b.controller().run_reset(&mut cell).unwrap();
        assert_eq!(r.outcome, Outcome::ResetComplete);
        assert_eq!(r.final_g, 2e-6);
        assert!(r.trace.samples.last().unwrap().t < 35e-6);
    }

    #[test]
    fn reset_is_idempotent() {
        let b = bench();
        let mut cell = b.fresh_cell();
        let r = b.controller().run_reset(&mut cell).unwrap();
        assert_eq!(r.outcome, Outcome::ResetComplete);
        assert_eq!(r.trace.samples.len(), 1);
    }

    #[test]
    fn reset_times_out_when_short() {
        let b = bench();
        let mut config = b.controller().config().clone();
        config.t_max = 2e-6;
        let c = Controller::new(b.comparator().clone(), config).unwrap();
        let mut cell = MemristorState::new(MemristorParams::default(), 1.0).unwrap();
        let r = c.run_reset(&mut cell).unwrap();
        assert_eq!(r.outcome, Outcome::TimedOut);
        assert!(r.final_g > 2e-6 && r.final_g < 200e-6);
    }

    #[test]
    fn final_g_independent_of_initial_state() {
        let b = bench();
        let v = b.comparator().boundary_program_mode(150e-6).unwrap();
        let results: Vec<f64> = [0.0, 0.3, 0.6]
            .iter()
            .map(|&w| {
                let mut cell = MemristorState::new(*b.memristor(), w).unwrap();
                b.controller().run_reset(&mut cell).unwrap();
                b.controller().run_set(&mut cell, v).unwrap().final_g
            })
            .collect();
        for g in &results {
            assert!((g - results[0]).abs() / results[0] < 0.02);
        }
    }

    #[test]
    fn trace_csv_header() {
        let b = bench();
        let r = b.controller().run_set(&mut b.fresh_cell(), 0.5).unwrap();
        let mut buf = Vec::new();
        r.trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,v_out,v_mid,g_mem,mode\n0e0,"));
        assert_eq!(text.lines().count(), 3502);
    }
}
