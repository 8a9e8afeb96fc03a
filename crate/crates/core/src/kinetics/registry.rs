use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use super::{KineticsError, MassAction, RateLaw, RatioForm, SeparableTheta, Theta, ThetaProduct};
use crate::network::Network;

/// Kinetics as declared in a network document: an optional family name and
/// optional per-species θ functions (species without one get `Linear`).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KineticsDecl {
    pub family: Option<String>,
    pub thetas: Vec<Option<Theta>>,
}

impl KineticsDecl {
    pub fn has_thetas(&self) -> bool {
        self.thetas.iter().any(Option::is_some)
    }

    /// Declared family, else `theta-product` when any θ is given, else
    /// `mass-action`.
    pub fn resolved_family(&self) -> &str {
        match &self.family {
            Some(f) => f,
            None if self.has_thetas() => "theta-product",
            None => "mass-action",
        }
    }

    fn thetas_for(&self, net: &Network) -> Vec<Theta> {
        (0..net.n_species())
            .map(|i| self.thetas.get(i).cloned().flatten().unwrap_or(Theta::Linear))
            .collect()
    }
}

pub type LawFactory = fn(&Network, &KineticsDecl) -> Result<Arc<dyn RateLaw>, KineticsError>;

/// Name → constructor table for kinetics families.
#[derive(Clone)]
pub struct KineticsRegistry {
    factories: BTreeMap<String, LawFactory>,
}

impl Default for KineticsRegistry {
    fn default() -> Self {
        let mut reg = Self {
            factories: BTreeMap::new(),
        };
        reg.register("mass-action", |_, decl| {
            if decl.has_thetas() {
                return Err(KineticsError::InvalidSpec(
                    "mass-action kinetics takes no @theta declarations".into(),
                ));
            }
            Ok(Arc::new(MassAction))
        });
        reg.register("theta-product", |net, decl| {
            Ok(Arc::new(ThetaProduct::new(decl.thetas_for(net))?))
        });
        reg.register("ratio-form", |net, decl| {
            let thetas = decl.thetas_for(net);
            for t in &thetas {
                t.validate()?;
            }
            Ok(Arc::new(RatioForm::new(Arc::new(SeparableTheta(thetas)))))
        });
        reg
    }
}

impl KineticsRegistry {
    pub fn register(&mut self, name: &str, factory: LawFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn build(&self, net: &Network, decl: &KineticsDecl) -> Result<Arc<dyn RateLaw>, KineticsError> {
        let name = decl.resolved_family();
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| KineticsError::UnknownFamily(name.to_string()))?;
        factory(net, decl)
    }
}
