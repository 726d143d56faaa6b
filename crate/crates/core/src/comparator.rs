// SPDX-License-Identifier: Apache-2.0

//! Quasi-static solution of the memristor-comparator branch: a memristor
//! from a rail down to the mid node, and the data-line NMOS from the mid
//! node to ground. The same branch serves search mode (rail `v_read`),
//! program mode (rail `v_set`) and verify mode.
//!
//! Boundary voltages are available two ways: closed forms obtained by
//! inverting the transistor law at the defining operating point, and
//! numeric roots found by nested bisection on the branch solver.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::devices::{inverter_out, TransistorLaw, TransistorParams};
use crate::error::{ensure_finite, Error, Result};
use crate::registry::build_law;

/// KCL residual bound of the branch solver (A).
pub const CURRENT_TOL: f64 = 1e-12;
/// Voltage resolution of the branch solver (V).
pub const VOLTAGE_RES: f64 = 1e-4;

const MAX_BISECTIONS: usize = 200;
const BOUNDARY_BISECTIONS: usize = 56;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rails {
    /// Search rail (V).
    pub v_read: f64,
    /// Program rail (V).
    pub v_set: f64,
    /// Comparator stop threshold (V).
    pub v_dth: f64,
}

impl Default for Rails {
    fn default() -> Self {
        Self {
            v_read: 0.6,
            v_set: 1.8,
            v_dth: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparatorParams {
    pub transistor: TransistorParams,
    #[serde(flatten)]
    pub rails: Rails,
}

impl ComparatorParams {
    pub fn validate(&self) -> Result<()> {
        self.transistor.validate()?;
        let Rails {
            v_read,
            v_set,
            v_dth,
        } = self.rails;
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(v_read.is_finite() && v_set.is_finite() && v_dth.is_finite()) {
            return bad("rails", "must be finite");
        }
        if !(0.0 < v_read && v_read < v_set) {
            return bad("v_read", "require 0 < v_read < v_set");
        }
        if !(0.0 < v_dth && v_dth < v_set) {
            return bad("v_dth", "require 0 < v_dth < v_set");
        }
        Ok(())
    }

    /// α = V_dth / V_set.
    pub fn alpha(&self) -> f64 {
        self.rails.v_dth / self.rails.v_set
    }
}

/// Operating point of one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSolution {
    /// Mid-node voltage (transistor drain, memristor AE side).
    pub v_mid: f64,
    /// Memristor current (A).
    pub i_branch: f64,
    /// Ideal-inverter output of the mid node on the same rail.
    pub v_out: f64,
    /// Transistor current minus memristor current at `v_mid` (A).
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Comparator {
    params: ComparatorParams,
    law: Arc<dyn TransistorLaw>,
}

impl Comparator {
    pub fn new(params: ComparatorParams) -> Result<Self> {
        params.validate()?;
        let law = build_law(&params.transistor)?;
        Ok(Self { params, law })
    }

    pub fn params(&self) -> &ComparatorParams {
        &self.params
    }

    pub fn rails(&self) -> Rails {
        self.params.rails
    }

    pub fn law(&self) -> &dyn TransistorLaw {
        self.law.as_ref()
    }

    pub fn v_t(&self) -> f64 {
        self.params.transistor.v_t
    }

    pub fn beta(&self) -> f64 {
        self.params.transistor.beta()
    }

    /// Memristor drop at which program mode trips, `V_set − V_dth`.
    pub fn stop_drop(&self) -> f64 {
        self.params.rails.v_set - self.params.rails.v_dth
    }

    /// Solves `I_T(v_gate, v_mid) = g·(rail − v_mid)` for `v_mid ∈ [0, rail]`.
    pub fn solve_branch(&self, rail: f64, g: f64, v_gate: f64) -> Result<BranchSolution> {
        ensure_finite("rail", rail)?;
        ensure_finite("v_gate", v_gate)?;
        ensure_finite("g_mem", g)?;
        if g < 0.0 {
            return Err(Error::RejectedInput {
                name: "g_mem",
                value: g,
                reason: "conductance must be non-negative",
            });
        }
        let residual = |v: f64| self.law.drain_current(v_gate, v) - g * (rail - v);
        let (mut lo, mut hi) = (0.0, rail);
        let (f_lo, f_hi) = (residual(lo), residual(hi));
        let v_mid = if f_lo >= 0.0 && f_lo.abs() <= CURRENT_TOL {
            lo
        } else if f_hi <= 0.0 && f_hi.abs() <= CURRENT_TOL {
            hi
        } else if f_lo > 0.0 || f_hi < 0.0 {
            return Err(Error::NoBracket {
                lo,
                hi,
                f_lo,
                f_hi,
            });
        } else {
            let mut mid = 0.5 * (lo + hi);
            for _ in 0..MAX_BISECTIONS {
                mid = 0.5 * (lo + hi);
                let f = residual(mid);
                if f.abs() <= CURRENT_TOL && hi - lo <= VOLTAGE_RES {
                    break;
                }
                if f > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            mid
        };
        Ok(BranchSolution {
            v_mid,
            i_branch: g * (rail - v_mid),
            v_out: inverter_out(rail, v_mid)?,
            residual: residual(v_mid),
        })
    }

    /// Search-mode branch on the `v_read` rail.
    pub fn solve_search_branch(&self, g: f64, v_dl: f64) -> Result<BranchSolution> {
        let v_read = self.params.rails.v_read;
        check_range("v_dl", v_dl, 0.0, v_read)?;
        self.solve_branch(v_read, g, v_dl)
    }

    /// Program-mode branch on the `v_set` rail.
    pub fn solve_program_branch(&self, g: f64, v_dl: f64) -> Result<BranchSolution> {
        let v_set = self.params.rails.v_set;
        check_range("v_dl", v_dl, 0.0, v_set)?;
        self.solve_branch(v_set, g, v_dl)
    }

    /// V_DLS: data-line voltage at which the search-mode mid node sits at
    /// `v_read / 2`. Closed form through the transistor law.
    pub fn boundary_search_mode(&self, g: f64) -> Result<f64> {
        check_conductance(g)?;
        let half = 0.5 * self.params.rails.v_read;
        let v = self.v_t() + self.law.overdrive_for_current(g * half, half);
        self.in_search_window(v)
    }

    /// V_DLS by bisection over the data line, using the branch solver.
    pub fn boundary_search_mode_numeric(&self, g: f64) -> Result<f64> {
        check_conductance(g)?;
        let v_read = self.params.rails.v_read;
        let target = 0.5 * v_read;
        self.bisect_gate(v_read, g, target, "V_DLS")
    }

    /// Search boundary assuming the transistor is in triode there:
    /// `G·L/(W·K′) + V_read/4 + V_T`. Exact only when that assumption holds.
    pub fn search_boundary_triode_form(&self, g: f64) -> f64 {
        g / self.beta() + 0.25 * self.params.rails.v_read + self.v_t()
    }

    /// Uncorrected form `G·L/(W·K′) + V_read + V_T`.
    pub fn search_boundary_literal(&self, g: f64) -> f64 {
        g / self.beta() + self.params.rails.v_read + self.v_t()
    }

    /// Inverse of [`Self::boundary_search_mode`].
    pub fn conductance_for_search_boundary(&self, v_dls: f64) -> Result<f64> {
        let v_read = self.params.rails.v_read;
        check_range("v_dls", v_dls, 0.0, v_read)?;
        let half = 0.5 * v_read;
        Ok(self.law.drain_current(v_dls, half) / half)
    }

    /// V_DLP: gate voltage that holds the program-mode branch, with a fixed
    /// conductance `g`, exactly at the trip point `v_mid = V_dth`.
    pub fn boundary_program_mode(&self, g: f64) -> Result<f64> {
        check_conductance(g)?;
        let Rails { v_set, v_dth, .. } = self.params.rails;
        let v = self.v_t() + self.law.overdrive_for_current(g * self.stop_drop(), v_dth);
        if v > v_set {
            return Err(Error::OutOfDynamicRange {
                quantity: "V_DLP",
                value: v,
                lo: 0.0,
                hi: v_set,
            });
        }
        Ok(v)
    }

    /// V_DLP by sweeping the data line on the fixed-resistor program branch.
    pub fn boundary_program_mode_numeric(&self, g: f64) -> Result<f64> {
        check_conductance(g)?;
        let Rails { v_set, v_dth, .. } = self.params.rails;
        self.bisect_gate(v_set, g, v_dth, "V_DLP")
    }

    /// Conductance at which a set driven by `v_dlp` trips the comparator.
    pub fn programmed_conductance(&self, v_dlp: f64) -> f64 {
        self.law.drain_current(v_dlp, self.params.rails.v_dth) / self.stop_drop()
    }

    /// Whether the program transistor is saturated at the trip point, the
    /// region the square-law closed forms assume.
    pub fn program_saturated_at_trip(&self, v_dlp: f64) -> bool {
        let ov = v_dlp - self.v_t();
        ov <= 0.0 || self.params.rails.v_dth >= self.law.v_dsat(ov)
    }

    /// Search boundary reached by programming with `v_dlp`.
    pub fn vdls_from_vdlp(&self, v_dlp: f64) -> Result<f64> {
        check_range("v_dlp", v_dlp, self.v_t(), self.params.rails.v_set)?;
        let half = 0.5 * self.params.rails.v_read;
        let i_trip = self.law.drain_current(v_dlp, self.params.rails.v_dth);
        let i_search = i_trip * half / self.stop_drop();
        Ok(self.v_t() + self.law.overdrive_for_current(i_search, half))
    }

    /// Uncorrected relation `(V_DLP − V_T)²/(2(V_set − V_dth)) + V_read/4 + V_T`.
    pub fn vdls_from_vdlp_literal(&self, v_dlp: f64) -> f64 {
        let ov = v_dlp - self.v_t();
        ov * ov / (2.0 * self.stop_drop()) + 0.25 * self.params.rails.v_read + self.v_t()
    }

    fn in_search_window(&self, v: f64) -> Result<f64> {
        let v_read = self.params.rails.v_read;
        if !(0.0..=v_read).contains(&v) {
            return Err(Error::OutOfDynamicRange {
                quantity: "V_DLS",
                value: v,
                lo: 0.0,
                hi: v_read,
            });
        }
        Ok(v)
    }

    /// Gate voltage in `[0, rail]` where the mid node equals `target`.
    /// The mid node falls monotonically as the gate rises.
    fn bisect_gate(&self, rail: f64, g: f64, target: f64, quantity: &'static str) -> Result<f64> {
        let above = |v_gate: f64| -> Result<bool> {
            Ok(self.solve_branch(rail, g, v_gate)?.v_mid > target)
        };
        if above(rail)? {
            return Err(Error::OutOfDynamicRange {
                quantity,
                value: f64::INFINITY,
                lo: 0.0,
                hi: rail,
            });
        }
        let (mut lo, mut hi) = (0.0, rail);
        for _ in 0..BOUNDARY_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if above(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value < lo || value > hi {
        return Err(Error::RejectedInput {
            name,
            value,
            reason: "outside the allowed voltage range",
        });
    }
    Ok(())
}

fn check_conductance(g: f64) -> Result<()> {
    ensure_finite("g_mem", g)?;
    if g < 0.0 {
        return Err(Error::RejectedInput {
            name: "g_mem",
            value: g,
            reason: "conductance must be non-negative",
        });
    }
    Ok(())
}
