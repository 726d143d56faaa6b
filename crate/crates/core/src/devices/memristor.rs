// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Threshold-driven linear-drift memristor parameters.
///
/// Voltages are measured across the device from OE to AE. A positive
/// voltage beyond `v_th_set` raises the state, a negative voltage beyond
/// `v_th_reset` lowers it, and anything in between leaves it untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemristorParams {
    /// Fully set conductance (S).
    pub g_on: f64,
    /// Fully reset conductance (S).
    pub g_off: f64,
    /// Set threshold (V), positive.
    pub v_th_set: f64,
    /// Reset threshold (V), negative.
    pub v_th_reset: f64,
    /// Set drift rate, 1/(V·s).
    pub k_set: f64,
    /// Reset drift rate, 1/(V·s).
    pub k_reset: f64,
}

impl Default for MemristorParams {
    fn default() -> Self {
        Self {
            g_on: 200e-6,
            g_off: 2e-6,
            v_th_set: 0.45,
            v_th_reset: -0.9,
            k_set: 1e5,
            k_reset: 1e5,
        }
    }
}

impl MemristorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        for (name, v) in [
            ("g_on", self.g_on),
            ("g_off", self.g_off),
            ("v_th_set", self.v_th_set),
            ("v_th_reset", self.v_th_reset),
            ("k_set", self.k_set),
            ("k_reset", self.k_reset),
        ] {
            if !v.is_finite() {
                return bad(name, "must be finite");
            }
        }
        if !(self.g_off > 0.0 && self.g_on > self.g_off) {
            return bad("g_on", "require g_on > g_off > 0");
        }
        if self.v_th_set <= 0.0 {
            return bad("v_th_set", "must be positive");
        }
        if self.v_th_reset >= 0.0 {
            return bad("v_th_reset", "must be negative");
        }
        if self.k_set <= 0.0 || self.k_reset <= 0.0 {
            return bad("k_set", "drift rates must be positive");
        }
        Ok(())
    }

    pub fn g_range(&self) -> f64 {
        self.g_on - self.g_off
    }

    /// State rate dw/dt at device voltage `v`.
    pub fn drift(&self, v: f64) -> f64 {
        if v > self.v_th_set {
            self.k_set * (v - self.v_th_set)
        } else if v < self.v_th_reset {
            self.k_reset * (v - self.v_th_reset)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorState {
    w: f64,
    params: MemristorParams,
}

impl MemristorState {
    pub fn new(params: MemristorParams, w: f64) -> Result<Self> {
        params.validate()?;
        ensure_finite("w", w)?;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::RejectedInput {
                name: "w",
                value: w,
                reason: "state must lie in [0, 1]",
            });
        }
        Ok(Self { w, params })
    }

    /// Fully reset device (w = 0).
    pub fn reset(params: MemristorParams) -> Result<Self> {
        Self::new(params, 0.0)
    }

    /// Device whose conductance is `g`, which must lie in `[g_off, g_on]`.
    pub fn with_conductance(params: MemristorParams, g: f64) -> Result<Self> {
        params.validate()?;
        ensure_finite("g", g)?;
        if g < params.g_off || g > params.g_on {
            return Err(Error::TargetOutOfRange {
                target: g,
                g_min: params.g_off,
                g_max: params.g_on,
            });
        }
        Self::new(params, (g - params.g_off) / params.g_range())
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn params(&self) -> &MemristorParams {
        &self.params
    }

    pub fn conductance(&self) -> f64 {
        self.params.g_off + self.w * self.params.g_range()
    }

    /// One explicit Euler step under `v_applied` (OE→AE) for `dt` seconds.
    pub fn step(&mut self, v_applied: f64, dt: f64) -> Result<()> {
        ensure_finite("v_applied", v_applied)?;
        ensure_finite("dt", dt)?;
        if dt <= 0.0 {
            return Err(Error::RejectedInput {
                name: "dt",
                value: dt,
                reason: "time step must be positive",
            });
        }
        let rate = self.params.drift(v_applied);
        if rate != 0.0 {
            self.w = (self.w + rate * dt).clamp(0.0, 1.0);
        }
        Ok(())
    }
}
