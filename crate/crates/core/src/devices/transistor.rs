// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Long-channel NMOS constants plus the name of the I–V law to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransistorParams {
    /// Process transconductance K′ (A/V²).
    pub k_prime: f64,
    /// Aspect ratio W/L.
    pub w_over_l: f64,
    /// Threshold voltage (V).
    pub v_t: f64,
    /// Registered law name, see [`crate::registry::transistor_laws`].
    pub law: String,
    /// Critical drain voltage of the linear-saturation law (V).
    pub v_crit: f64,
}

impl Default for TransistorParams {
    fn default() -> Self {
        Self {
            k_prime: 500e-6,
            w_over_l: 4.0,
            v_t: 0.3,
            law: SquareLaw::NAME.to_string(),
            v_crit: 0.05,
        }
    }
}

impl TransistorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.k_prime.is_finite() && self.k_prime > 0.0) {
            return bad("k_prime", "must be positive");
        }
        if !(self.w_over_l.is_finite() && self.w_over_l > 0.0) {
            return bad("w_over_l", "must be positive");
        }
        if !(self.v_t.is_finite() && self.v_t >= 0.0) {
            return bad("v_t", "must be non-negative");
        }
        if !(self.v_crit.is_finite() && self.v_crit > 0.0) {
            return bad("v_crit", "must be positive");
        }
        Ok(())
    }

    /// β = K′·W/L.
    pub fn beta(&self) -> f64 {
        self.k_prime * self.w_over_l
    }
}

/// A drain-current law for the NMOS in the comparator branch.
///
/// Every law shares the triode expression `β·[v_ov·v_ds − v_ds²/2]` and
/// differs only in where the channel saturates (`v_dsat`). Implementations
/// also provide closed-form inverses so boundary voltages can be computed
/// without iteration.
pub trait TransistorLaw: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn params(&self) -> &TransistorParams;

    /// Drain-source voltage at which the channel saturates for overdrive `ov > 0`.
    fn v_dsat(&self, ov: f64) -> f64;

    /// Overdrive that yields saturation current `i`.
    fn overdrive_for_saturation_current(&self, i: f64) -> f64;

    /// Overdrive that yields current `i` at drain voltage `v_ds`.
    /// Infinite when `v_ds` is zero and `i` positive.
    fn overdrive_for_current(&self, i: f64, v_ds: f64) -> f64;

    fn beta(&self) -> f64 {
        self.params().beta()
    }

    fn v_t(&self) -> f64 {
        self.params().v_t
    }

    /// Drain current (A). `v_ds` below zero is treated as zero.
    fn drain_current(&self, v_gs: f64, v_ds: f64) -> f64 {
        let ov = v_gs - self.v_t();
        if ov <= 0.0 {
            return 0.0;
        }
        let v_ds = v_ds.max(0.0);
        let v = v_ds.min(self.v_dsat(ov));
        self.beta() * (ov * v - 0.5 * v * v)
    }

    fn saturation_current(&self, ov: f64) -> f64 {
        if ov <= 0.0 {
            return 0.0;
        }
        let d = self.v_dsat(ov);
        self.beta() * (ov * d - 0.5 * d * d)
    }
}

/// Long-channel square law: saturates at `v_ds = v_ov`.
#[derive(Debug, Clone)]
pub struct SquareLaw {
    params: TransistorParams,
}

impl SquareLaw {
    pub const NAME: &'static str = "square-law";

    pub fn new(params: TransistorParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl TransistorLaw for SquareLaw {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn params(&self) -> &TransistorParams {
        &self.params
    }

    fn v_dsat(&self, ov: f64) -> f64 {
        ov
    }

    fn overdrive_for_saturation_current(&self, i: f64) -> f64 {
        (2.0 * i.max(0.0) / self.beta()).sqrt()
    }

    fn overdrive_for_current(&self, i: f64, v_ds: f64) -> f64 {
        let i = i.max(0.0);
        if i == 0.0 {
            return 0.0;
        }
        if v_ds <= 0.0 {
            return f64::INFINITY;
        }
        let beta = self.beta();
        if i >= 0.5 * beta * v_ds * v_ds {
            i / (beta * v_ds) + 0.5 * v_ds
        } else {
            (2.0 * i / beta).sqrt()
        }
    }
}

/// Velocity-saturated variant: square law up to `v_crit` of overdrive,
/// then saturation current grows linearly with overdrive.
#[derive(Debug, Clone)]
pub struct LinearSaturationLaw {
    params: TransistorParams,
}

impl LinearSaturationLaw {
    pub const NAME: &'static str = "linear-saturation";

    pub fn new(params: TransistorParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    fn v_crit(&self) -> f64 {
        self.params.v_crit
    }
}

impl TransistorLaw for LinearSaturationLaw {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn params(&self) -> &TransistorParams {
        &self.params
    }

    fn v_dsat(&self, ov: f64) -> f64 {
        ov.min(self.v_crit())
    }

    fn overdrive_for_saturation_current(&self, i: f64) -> f64 {
        let i = i.max(0.0);
        let (beta, vc) = (self.beta(), self.v_crit());
        if i <= 0.5 * beta * vc * vc {
            (2.0 * i / beta).sqrt()
        } else {
            i / (beta * vc) + 0.5 * vc
        }
    }

    fn overdrive_for_current(&self, i: f64, v_ds: f64) -> f64 {
        let i = i.max(0.0);
        if i == 0.0 {
            return 0.0;
        }
        if v_ds <= 0.0 {
            return f64::INFINITY;
        }
        if v_ds >= self.v_crit() {
            return self.overdrive_for_saturation_current(i);
        }
        let beta = self.beta();
        if i <= 0.5 * beta * v_ds * v_ds {
            (2.0 * i / beta).sqrt()
        } else {
            i / (beta * v_ds) + 0.5 * v_ds
        }
    }
}
