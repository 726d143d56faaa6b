// SPDX-License-Identifier: Apache-2.0

//! Behavioral device models: a threshold-driven memristor, the MOSFET
//! current laws, and the ideal inverter used by every comparator.

mod memristor;
mod transistor;

pub use memristor::{MemristorParams, MemristorState};
pub use transistor::{LinearSaturationLaw, SquareLaw, TransistorLaw, TransistorParams};

use crate::error::{ensure_finite, Error, Result};

/// Ideal inverter, `VDD - V_in`.
pub fn inverter_out(vdd: f64, v_in: f64) -> Result<f64> {
    ensure_finite("vdd", vdd)?;
    ensure_finite("v_in", v_in)?;
    if !(0.0..=vdd).contains(&v_in) {
        return Err(Error::RejectedInput {
            name: "v_in",
            value: v_in,
            reason: "inverter input outside [0, VDD]",
        });
    }
    Ok(vdd - v_in)
}
