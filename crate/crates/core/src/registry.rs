// SPDX-License-Identifier: Apache-2.0

//! Name-keyed registries for the interchangeable strategies: transistor
//! I–V laws and LUT sources. Config files and CLI flags refer to
//! strategies by the names registered here.

use std::sync::Arc;

use crate::devices::{LinearSaturationLaw, SquareLaw, TransistorLaw, TransistorParams};
use crate::error::{Error, Result};
use crate::lut::{AnalyticSource, LutSource, LiteralSource, SimulatedSource};

pub struct Registry<F> {
    kind: &'static str,
    entries: Vec<(&'static str, F)>,
}

impl<F: Copy> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: F) -> &mut Self {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = factory,
            None => self.entries.push((name, factory)),
        }
        self
    }

    pub fn get(&self, name: &str) -> Result<F> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| *f)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }
}

pub type LawFactory = fn(TransistorParams) -> Result<Arc<dyn TransistorLaw>>;

pub fn transistor_laws() -> Registry<LawFactory> {
    let mut r = Registry::<LawFactory>::new("transistor law");
    r.register(SquareLaw::NAME, |p| Ok(Arc::new(SquareLaw::new(p)?)))
        .register(LinearSaturationLaw::NAME, |p| {
            Ok(Arc::new(LinearSaturationLaw::new(p)?))
        });
    r
}

/// Builds the law named in `params.law`.
pub fn build_law(params: &TransistorParams) -> Result<Arc<dyn TransistorLaw>> {
    transistor_laws().get(&params.law)?(params.clone())
}

pub type LutSourceFactory = fn() -> Box<dyn LutSource>;

pub fn lut_sources() -> Registry<LutSourceFactory> {
    let mut r = Registry::<LutSourceFactory>::new("LUT source");
    r.register(AnalyticSource::NAME, || Box::new(AnalyticSource))
        .register(LiteralSource::NAME, || Box::new(LiteralSource))
        .register(SimulatedSource::NAME, || Box::new(SimulatedSource));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_registered_laws_by_name() {
        for name in transistor_laws().names() {
            let p = TransistorParams {
                law: name.to_string(),
                ..Default::default()
            };
            assert_eq!(build_law(&p).unwrap().name(), name);
        }
    }

    #[test]
    fn unknown_name_lists_known() {
        let p = TransistorParams {
            law: "bsim4".into(),
            ..Default::default()
        };
        let err = build_law(&p).unwrap_err().to_string();
        assert!(err.contains("square-law") && err.contains("linear-saturation"), "{err}");
    }

    #[test]
    fn register_replaces_existing() {
        let mut r = Registry::<u8>::new("thing");
        r.register("a", 1).register("b", 2).register("a", 3);
        assert_eq!(r.names(), vec!["a", "b"]);
        assert_eq!(r.get("a").unwrap(), 3);
    }

    #[test]
    fn lut_sources_registered() {
        let r = lut_sources();
        for name in r.names() {
            assert_eq!(r.get(name).unwrap()().name(), name);
        }
    }
}
