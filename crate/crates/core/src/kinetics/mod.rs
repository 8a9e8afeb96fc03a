//! Reaction intensities λ_k(x).
//!
//! Each kinetics family is a [`RateLaw`]: it supplies the state-dependent
//! factor multiplying κ_k and the log of the lattice function θ(x) whose
//! reciprocal appears in the product-form stationary weight `c^x / θ(x)`.
//! Families are looked up by name through [`KineticsRegistry`].

mod registry;
mod theta;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::network::{Complex, Network};
use crate::special::ln_factorial;

pub use registry::{KineticsDecl, KineticsRegistry, LawFactory};
pub use theta::Theta;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KineticsError {
    #[error("invalid kinetics: {0}")]
    InvalidSpec(String),
    #[error("expected {expected} rate constants, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("rate constant {value} of reaction {reaction} is not positive")]
    NonPositiveRate { reaction: usize, value: f64 },
    #[error("tabulated theta has {len} entries, lookup at {x}")]
    OutOfTable { x: i64, len: usize },
    #[error("unknown kinetics family `{0}`")]
    UnknownFamily(String),
}

/// A kinetics family. `propensity` is λ_k(x)/κ_k for a reaction with the
/// given source complex.
pub trait RateLaw: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn propensity(&self, source: &Complex, x: &[i64]) -> Result<f64, KineticsError>;

    /// `ln θ(x)` for the lattice function of the product-form weight.
    fn ln_theta(&self, x: &[i64]) -> Result<f64, KineticsError>;

    /// Per-species θᵢ when the law factorizes by species.
    fn species_thetas(&self) -> Option<&[Theta]> {
        None
    }

    /// The θᵢ of all `m` species when the law factorizes.
    fn separable(&self, m: usize) -> Option<Vec<Theta>> {
        self.species_thetas().filter(|t| t.len() == m).map(<[Theta]>::to_vec)
    }

    /// Propensity of a reaction depends only on the species in its source
    /// complex.
    fn is_local(&self) -> bool {
        true
    }
}

/// Stochastic mass action: `∏ᵢ xᵢ!/(xᵢ − νᵢ)!`, zero unless `x ≥ ν`.
#[derive(Debug, Clone, Default)]
pub struct MassAction;

impl RateLaw for MassAction {
    fn name(&self) -> &'static str {
        "mass-action"
    }

    fn propensity(&self, source: &Complex, x: &[i64]) -> Result<f64, KineticsError> {
        let mut p = 1.0;
        for (&n, &xi) in source.coeffs().iter().zip(x) {
            let n = i64::from(n);
            if xi < n {
                return Ok(0.0);
            }
            for j in 0..n {
                p *= (xi - j) as f64;
            }
        }
        Ok(p)
    }

    fn ln_theta(&self, x: &[i64]) -> Result<f64, KineticsError> {
        Ok(x.iter().map(|&xi| ln_factorial(xi.max(0) as u64)).sum())
    }

    fn separable(&self, m: usize) -> Option<Vec<Theta>> {
        Some(vec![Theta::Linear; m])
    }
}

/// `∏ᵢ ∏_{j=0}^{νᵢ−1} θᵢ(xᵢ − j)` with a per-species θᵢ.
#[derive(Debug, Clone)]
pub struct ThetaProduct {
    thetas: Vec<Theta>,
}

impl ThetaProduct {
    pub fn new(thetas: Vec<Theta>) -> Result<Self, KineticsError> {
        for t in &thetas {
            t.validate()?;
        }
        Ok(Self { thetas })
    }
}

impl RateLaw for ThetaProduct {
    fn name(&self) -> &'static str {
        "theta-product"
    }

    fn propensity(&self, source: &Complex, x: &[i64]) -> Result<f64, KineticsError> {
        let mut p = 1.0;
        for ((&n, &xi), theta) in source.coeffs().iter().zip(x).zip(&self.thetas) {
            for j in 0..i64::from(n) {
                p *= theta.eval(xi - j)?;
            }
        }
        Ok(p)
    }

    fn ln_theta(&self, x: &[i64]) -> Result<f64, KineticsError> {
        let mut acc = 0.0;
        for (theta, &xi) in self.thetas.iter().zip(x) {
            acc += theta.ln_cumulative(xi)?;
        }
        Ok(acc)
    }

    fn species_thetas(&self) -> Option<&[Theta]> {
        Some(&self.thetas)
    }
}

/// A strictly positive function on the lattice, given through its log.
pub trait LatticeTheta: fmt::Debug + Send + Sync {
    fn ln_theta(&self, x: &[i64]) -> Result<f64, KineticsError>;

    fn species_thetas(&self) -> Option<&[Theta]> {
        None
    }
}

/// `θ(x) = ∏ᵢ ∏_{j=1}^{xᵢ} θᵢ(j)`.
#[derive(Debug, Clone)]
pub struct SeparableTheta(pub Vec<Theta>);

impl LatticeTheta for SeparableTheta {
    fn ln_theta(&self, x: &[i64]) -> Result<f64, KineticsError> {
        let mut acc = 0.0;
        for (t, &xi) in self.0.iter().zip(x) {
            acc += t.ln_cumulative(xi)?;
        }
        Ok(acc)
    }

    fn species_thetas(&self) -> Option<&[Theta]> {
        Some(&self.0)
    }
}

/// A lattice θ given by an arbitrary closure returning `ln θ(x)`.
pub struct FnTheta<F>(pub F);

impl<F> fmt::Debug for FnTheta<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnTheta")
    }
}

impl<F> LatticeTheta for FnTheta<F>
where
    F: Fn(&[i64]) -> f64 + Send + Sync,
{
    fn ln_theta(&self, x: &[i64]) -> Result<f64, KineticsError> {
        let v = (self.0)(x);
        if v.is_nan() || v == f64::INFINITY {
            return Err(KineticsError::InvalidSpec(format!("ln theta({x:?}) = {v}")));
        }
        Ok(v)
    }
}

/// Ratio-form kinetics `θ(x)/θ(x − ν)` with the indicator `x ≥ ν`.
#[derive(Debug, Clone)]
pub struct RatioForm {
    theta: Arc<dyn LatticeTheta>,
}

impl RatioForm {
    pub fn new(theta: Arc<dyn LatticeTheta>) -> Self {
        Self { theta }
    }
}

impl RateLaw for RatioForm {
    fn name(&self) -> &'static str {
        "ratio-form"
    }

    fn propensity(&self, source: &Complex, x: &[i64]) -> Result<f64, KineticsError> {
        if !source.fits_in(x) {
            return Ok(0.0);
        }
        let below: Vec<i64> = x
            .iter()
            .zip(source.coeffs())
            .map(|(&xi, &n)| xi - i64::from(n))
            .collect();
        Ok((self.theta.ln_theta(x)? - self.theta.ln_theta(&below)?).exp())
    }

    fn ln_theta(&self, x: &[i64]) -> Result<f64, KineticsError> {
        self.theta.ln_theta(x)
    }

    fn species_thetas(&self) -> Option<&[Theta]> {
        self.theta.species_thetas()
    }

    fn is_local(&self) -> bool {
        false
    }
}

/// Rate constants paired with a kinetics family.
#[derive(Debug, Clone)]
pub struct Kinetics {
    rates: Vec<f64>,
    law: Arc<dyn RateLaw>,
}

impl Kinetics {
    pub fn new(net: &Network, rates: Vec<f64>, law: Arc<dyn RateLaw>) -> Result<Self, KineticsError> {
        if rates.len() != net.n_reactions() {
            return Err(KineticsError::RateCount {
                expected: net.n_reactions(),
                got: rates.len(),
            });
        }
        if let Some((reaction, &value)) = rates
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v.is_finite() && v > 0.0))
        {
            return Err(KineticsError::NonPositiveRate { reaction, value });
        }
        if let Some(thetas) = law.species_thetas() {
            if thetas.len() != net.n_species() {
                return Err(KineticsError::InvalidSpec(format!(
                    "{} theta functions for {} species",
                    thetas.len(),
                    net.n_species()
                )));
            }
        }
        Ok(Self { rates, law })
    }

    pub fn mass_action(net: &Network, rates: Vec<f64>) -> Result<Self, KineticsError> {
        Self::new(net, rates, Arc::new(MassAction))
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn law(&self) -> &Arc<dyn RateLaw> {
        &self.law
    }

    pub fn family(&self) -> &'static str {
        self.law.name()
    }

    /// Same family, different rate constants.
    pub fn with_rates(&self, net: &Network, rates: Vec<f64>) -> Result<Self, KineticsError> {
        Self::new(net, rates, Arc::clone(&self.law))
    }

    pub fn intensity(&self, net: &Network, k: usize, x: &[i64]) -> Result<f64, KineticsError> {
        let p = self.law.propensity(net.source(k), x)?;
        Ok(self.rates[k] * p)
    }

    pub fn intensities(&self, net: &Network, x: &[i64], out: &mut Vec<f64>) -> Result<(), KineticsError> {
        out.clear();
        for k in 0..net.n_reactions() {
            out.push(self.intensity(net, k, x)?);
        }
        Ok(())
    }
}

/// Deterministic mass-action rate `κ_k x^{ν_k}` with `0⁰ = 1`.
pub fn deterministic_rate(rates: &[f64], net: &Network, k: usize, x: &[f64]) -> f64 {
    rates[k] * monomial(net.source(k), x)
}

/// `x^ν` with `0⁰ = 1`.
pub fn monomial(nu: &Complex, x: &[f64]) -> f64 {
    nu.coeffs()
        .iter()
        .zip(x)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &xi)| xi.powi(n))
        .product()
}

/// Classical volume scaling `κ_k = κ̂_k · V^{1 − |ν_k|}`.
pub fn scale_rate_constants(rate_hat: &[f64], net: &Network, volume: f64) -> Vec<f64> {
    rate_hat
        .iter()
        .enumerate()
        .map(|(k, &r)| r * volume.powi((1 - net.source(k).order()) as i32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;

    fn dimer() -> Network {
        build_network(&["A", "B"], &[(vec![2, 0], vec![0, 1])]).unwrap()
    }

    #[test]
    fn mass_action_falling_factorial() {
        let net = dimer();
        let kin = Kinetics::mass_action(&net, vec![1.0]).unwrap();
        assert_eq!(kin.intensity(&net, 0, &[3, 0]).unwrap(), 6.0);
        assert_eq!(kin.intensity(&net, 0, &[1, 5]).unwrap(), 0.0);
    }

    #[test]
    fn michaelis_menten_counterexample_intensity() {
        let net = build_network(&["S1", "S2"], &[(vec![1, 1], vec![0, 0])]).unwrap();
        let law = ThetaProduct::new(vec![
            Theta::MichaelisMenten { v: 3.0, k: 1.0 },
            Theta::MichaelisMenten { v: 0.5, k: 1.0 },
        ])
        .unwrap();
        let kin = Kinetics::new(&net, vec![1.0], Arc::new(law)).unwrap();
        let v = kin.intensity(&net, 0, &[1, 1]).unwrap();
        assert!((v - 3.0 / 8.0).abs() < 1e-15);
        assert_eq!(kin.intensity(&net, 0, &[0, 4]).unwrap(), 0.0);
    }

    #[test]
    fn theta_product_multi_molecular_uses_full_product() {
        // 3A -> 0 with MM theta: θ(x)θ(x−1)θ(x−2)
        let net = build_network(&["A"], &[(vec![3], vec![0])]).unwrap();
        let th = Theta::MichaelisMenten { v: 2.0, k: 1.5 };
        let law = ThetaProduct::new(vec![th.clone()]).unwrap();
        let kin = Kinetics::new(&net, vec![1.0], Arc::new(law)).unwrap();
        let expect = th.eval(5).unwrap() * th.eval(4).unwrap() * th.eval(3).unwrap();
        assert!((kin.intensity(&net, 0, &[5]).unwrap() - expect).abs() < 1e-15);
        assert_eq!(kin.intensity(&net, 0, &[2]).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_rates() {
        let net = build_network(
            &["S1", "S2"],
            &[(vec![0, 0], vec![1, 0]), (vec![1, 1], vec![0, 0]), (vec![2, 0], vec![0, 0])],
        )
        .unwrap();
        assert_eq!(deterministic_rate(&[5.0, 1.0, 2.0], &net, 0, &[0.0, 0.0]), 5.0);
        assert_eq!(deterministic_rate(&[5.0, 1.0, 2.0], &net, 1, &[2.0, 3.0]), 6.0);
        assert_eq!(deterministic_rate(&[5.0, 1.0, 2.0], &net, 2, &[0.5, 0.0]), 0.5);
    }

    #[test]
    fn volume_scaling() {
        let net = build_network(
            &["A", "B"],
            &[(vec![1, 0], vec![0, 1]), (vec![1, 1], vec![0, 0]), (vec![0, 0], vec![1, 0])],
        )
        .unwrap();
        let k = scale_rate_constants(&[3.0, 3.0, 3.0], &net, 10.0);
        assert_eq!(k[0], 3.0);
        assert!((k[1] - 0.3).abs() < 1e-15);
        assert!((k[2] - 30.0).abs() < 1e-12);
    }

    #[test]
    fn rate_validation() {
        let net = dimer();
        assert!(matches!(
            Kinetics::mass_action(&net, vec![0.0]),
            Err(KineticsError::NonPositiveRate { .. })
        ));
        assert!(matches!(
            Kinetics::mass_action(&net, vec![1.0, 2.0]),
            Err(KineticsError::RateCount { .. })
        ));
        let law = ThetaProduct::new(vec![Theta::Linear]).unwrap();
        assert!(Kinetics::new(&net, vec![1.0], Arc::new(law)).is_err());
    }
}
