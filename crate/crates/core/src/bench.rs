// SPDX-License-Identifier: Apache-2.0

use sha2::{Digest, Sha256};

use crate::comparator::{Comparator, ComparatorParams};
use crate::controller::{Controller, ControllerConfig};
use crate::devices::{MemristorParams, MemristorState};
use crate::error::Result;

/// The live parameter set: device model plus the single programming circuit.
#[derive(Debug, Clone)]
pub struct Bench {
    memristor: MemristorParams,
    controller: Controller,
}

impl Bench {
    pub fn new(
        memristor: MemristorParams,
        comparator: ComparatorParams,
        controller: ControllerConfig,
    ) -> Result<Self> {
        memristor.validate()?;
        let comparator = Comparator::new(comparator)?;
        let controller = Controller::new(comparator, controller)?;
        Ok(Self {
            memristor,
            controller,
        })
    }

    pub fn memristor(&self) -> &MemristorParams {
        &self.memristor
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn comparator(&self) -> &Comparator {
        self.controller.comparator()
    }

    pub fn fresh_cell(&self) -> MemristorState {
        MemristorState::reset(self.memristor).expect("validated in Bench::new")
    }

    /// Same bench with a different controller time step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let mut config = self.controller.config().clone();
        config.dt = dt;
        Ok(Self {
            memristor: self.memristor,
            controller: Controller::new(self.comparator().clone(), config)?,
        })
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(self.comparator().params(), &self.memristor)
    }
}

impl Default for Bench {
    fn default() -> Self {
        Self::new(
            MemristorParams::default(),
            ComparatorParams::default(),
            ControllerConfig::default(),
        )
        .expect("default parameters are valid")
    }
}

/// Short hash of the comparator and device parameters a LUT was built with.
pub fn fingerprint(comparator: &ComparatorParams, memristor: &MemristorParams) -> String {
    let json = serde_json::to_string(&(comparator, memristor)).expect("plain data serializes");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(&digest[..8])
}
