// SPDX-License-Identifier: Apache-2.0

//! Behavioral simulator of LUT-driven analog feedback programming for
//! memristor-based analog CAM arrays.

pub mod array;
pub mod bench;
pub mod comparator;
pub mod config;
pub mod controller;
pub mod devices;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod lut;
pub mod registry;

pub use array::{AcamArray, CellAddress, SearchWindow, Side, WorkingMode};
pub use bench::Bench;
pub use comparator::{Comparator, ComparatorParams, Rails};
pub use controller::{Controller, ControllerConfig, Outcome, ProgramResult};
pub use devices::{MemristorParams, MemristorState, TransistorLaw, TransistorParams};
pub use error::{Error, Result};
pub use lut::{build_lut, LutSource, LutTable};
