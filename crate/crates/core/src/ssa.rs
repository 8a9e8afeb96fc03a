//! Exact simulation of the counting process by the direct method.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`). A run with seed `s`
//! uses `ChaCha8Rng::seed_from_u64(s)`; replica `i` of an ensemble uses the
//! same key with `set_stream(i)`, so replicas are independent streams and do
//! not depend on thread scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kinetics::{Kinetics, KineticsError};
use crate::network::Network;
use crate::statespace::State;

pub const DEFAULT_MAX_JUMPS: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SsaError {
    #[error("initial state must be nonnegative with {expected} coordinates")]
    InvalidState { expected: usize },
    #[error("final time must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("explosion: {jumps} jumps before t = {time}")]
    Explosion { jumps: u64, time: f64 },
    #[error("burn-in {burn_in} is not below the final time {t_final}")]
    BurnInTooLong { burn_in: f64, t_final: f64 },
    #[error("intensity of reaction {reaction} is {value}")]
    InvalidIntensity { reaction: usize, value: f64 },
    #[error("ensemble needs at least one replica")]
    NoReplicas,
    #[error("{} of the replicas failed, first: {}", failures.len(), failures[0].1)]
    Replicas { failures: Vec<(u64, SsaError)> },
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// Generator for a run: `seed` selects the key, `stream` the replica.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// `times[0] = 0`, then one entry per jump.
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Reaction fired at each jump; one shorter than `states`.
    pub reactions: Vec<usize>,
    pub seed: u64,
    pub stream: u64,
    pub t_final: f64,
    /// Total intensity hit zero; the path is constant from the last jump.
    pub absorbed: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &[i64] {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn n_jumps(&self) -> usize {
        self.reactions.len()
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> &[i64] {
        let i = self.times.partition_point(|&s| s <= t);
        &self.states[i.saturating_sub(1)]
    }

    /// `t, species..., reaction`; the initial row has an empty reaction.
    pub fn to_csv(&self, species: &[&str]) -> String {
        let mut s = String::from("t,");
        s.push_str(&species.join(","));
        s.push_str(",reaction\n");
        for (i, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let _ = write!(s, "{t:?}");
            for v in x {
                let _ = write!(s, ",{v}");
            }
            match i.checked_sub(1) {
                Some(j) => {
                    let _ = writeln!(s, ",{}", self.reactions[j]);
                }
                None => s.push_str(",\n"),
            }
        }
        s
    }
}

/// How an empirical distribution was collected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weighting {
    TimeAveraged { burn_in: f64 },
    EndpointEnsemble { n: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    /// Serialized as `[state, weight]` pairs; JSON keys must be strings.
    #[serde(serialize_with = "as_pairs")]
    pub weights: BTreeMap<State, f64>,
    pub weighting: Weighting,
}

fn as_pairs<S: serde::Serializer>(w: &BTreeMap<State, f64>, ser: S) -> Result<S::Ok, S::Error> {
    ser.collect_seq(w.iter())
}

impl EmpiricalDistribution {
    fn normalized(mut weights: BTreeMap<State, f64>, weighting: Weighting) -> Self {
        let total: f64 = weights.values().sum();
        if total > 0.0 {
            for w in weights.values_mut() {
                *w /= total;
            }
        }
        Self { weights, weighting }
    }

    pub fn prob(&self, x: &[i64]) -> f64 {
        self.weights.get(x).copied().unwrap_or(0.0)
    }

    pub fn mean(&self, species: usize) -> f64 {
        self.weights.iter().map(|(x, w)| w * x[species] as f64).sum()
    }

    pub fn to_csv(&self, species: &[&str]) -> String {
        let mut s = species.join(",");
        s.push_str(",weight\n");
        for (x, w) in &self.weights {
            for v in x {
                let _ = write!(s, "{v},");
            }
            let _ = writeln!(s, "{w:e}");
        }
        s
    }
}

struct Engine<'a> {
    net: &'a Network,
    kin: &'a Kinetics,
    deltas: Vec<Vec<i64>>,
    /// Reactions whose intensity may change after reaction `k` fires.
    deps: Vec<Vec<usize>>,
}

struct Outcome {
    state: State,
    absorbed: bool,
}

impl<'a> Engine<'a> {
    fn new(net: &'a Network, kin: &'a Kinetics) -> Self {
        let r = net.n_reactions();
        let deltas: Vec<Vec<i64>> = (0..r).map(|k| net.reaction_vector(k)).collect();
        let deps = if kin.law().is_local() {
            deltas
                .iter()
                .map(|d| {
                    (0..r)
                        .filter(|&j| {
                            net.source(j)
                                .coeffs()
                                .iter()
                                .zip(d)
                                .any(|(&nu, &di)| nu > 0 && di != 0)
                        })
                        .collect()
                })
                .collect()
        } else {
            vec![(0..r).collect(); r]
        };
        Self { net, kin, deltas, deps }
    }

    fn intensity(&self, k: usize, x: &[i64]) -> Result<f64, SsaError> {
        let v = self.kin.intensity(self.net, k, x)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(SsaError::InvalidIntensity { reaction: k, value: v });
        }
        Ok(v)
    }

    /// Runs to `t_final`, calling `on_jump(t, new_state, k)` after each jump.
    fn run(
        &self,
        x0: &[i64],
        t_final: f64,
        rng: &mut ChaCha8Rng,
        max_jumps: u64,
        mut on_jump: impl FnMut(f64, &[i64], usize),
    ) -> Result<Outcome, SsaError> {
        let r = self.net.n_reactions();
        let mut x = x0.to_vec();
        let mut lambda = (0..r).map(|k| self.intensity(k, &x)).collect::<Result<Vec<_>, _>>()?;
        let mut t = 0.0;
        let mut jumps = 0u64;
        loop {
            let total: f64 = lambda.iter().sum();
            if total <= 0.0 {
                return Ok(Outcome { state: x, absorbed: true });
            }
            let u: f64 = rng.random();
            let dt = -(1.0 - u).ln() / total;
            if t + dt > t_final {
                return Ok(Outcome { state: x, absorbed: false });
            }
            t += dt;
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut k = usize::MAX;
            for (j, &l) in lambda.iter().enumerate() {
                if l > 0.0 {
                    k = j;
                    acc += l;
                    if target < acc {
                        break;
                    }
                }
            }
            for (xi, d) in x.iter_mut().zip(&self.deltas[k]) {
                *xi += d;
            }
            jumps += 1;
            if jumps > max_jumps {
                return Err(SsaError::Explosion { jumps, time: t });
            }
            on_jump(t, &x, k);
            for &j in &self.deps[k] {
                lambda[j] = self.intensity(j, &x)?;
            }
        }
    }
}

fn check_inputs(net: &Network, x0: &[i64], t_final: f64) -> Result<(), SsaError> {
    if x0.len() != net.n_species() || x0.iter().any(|&v| v < 0) {
        return Err(SsaError::InvalidState {
            expected: net.n_species(),
        });
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(SsaError::InvalidTime(t_final));
    }
    Ok(())
}

/// One recorded sample path on `[0, t_final]`.
pub fn simulate(
    net: &Network,
    kin: &Kinetics,
    x0: &[i64],
    t_final: f64,
    seed: u64,
    max_jumps: u64,
) -> Result<Trajectory, SsaError> {
    simulate_stream(net, kin, x0, t_final, seed, 0, max_jumps)
}

pub fn simulate_stream(
    net: &Network,
    kin: &Kinetics,
    x0: &[i64],
    t_final: f64,
    seed: u64,
    stream: u64,
    max_jumps: u64,
) -> Result<Trajectory, SsaError> {
    check_inputs(net, x0, t_final)?;
    let engine = Engine::new(net, kin);
    let mut rng = rng_for(seed, stream);
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut reactions = Vec::new();
    let out = engine.run(x0, t_final, &mut rng, max_jumps, |t, x, k| {
        times.push(t);
        states.push(x.to_vec());
        reactions.push(k);
    })?;
    Ok(Trajectory {
        times,
        states,
        reactions,
        seed,
        stream,
        t_final,
        absorbed: out.absorbed,
    })
}

/// Time-weighted state frequencies over `(burn_in, T]`.
pub fn occupation_measure(traj: &Trajectory, burn_in: f64) -> Result<EmpiricalDistribution, SsaError> {
    if !(burn_in >= 0.0 && burn_in < traj.t_final) {
        return Err(SsaError::BurnInTooLong {
            burn_in,
            t_final: traj.t_final,
        });
    }
    let mut w: BTreeMap<State, f64> = BTreeMap::new();
    for (i, x) in traj.states.iter().enumerate() {
        let start = traj.times[i].max(burn_in);
        let end = traj.times.get(i + 1).copied().unwrap_or(traj.t_final).min(traj.t_final);
        if end > start {
            *w.entry(x.clone()).or_insert(0.0) += end - start;
        }
    }
    Ok(EmpiricalDistribution::normalized(w, Weighting::TimeAveraged { burn_in }))
}

/// Same as [`occupation_measure`] of [`simulate`] but without storing the
/// path.
pub fn time_average(
    net: &Network,
    kin: &Kinetics,
    x0: &[i64],
    t_final: f64,
    burn_in: f64,
    seed: u64,
    max_jumps: u64,
) -> Result<EmpiricalDistribution, SsaError> {
    check_inputs(net, x0, t_final)?;
    if !(burn_in >= 0.0 && burn_in < t_final) {
        return Err(SsaError::BurnInTooLong { burn_in, t_final });
    }
    let engine = Engine::new(net, kin);
    let mut rng = rng_for(seed, 0);
    let mut w: BTreeMap<State, f64> = BTreeMap::new();
    let mut last_t = 0.0;
    let mut last_x = x0.to_vec();
    let credit = |from: f64, to: f64, x: &[i64], w: &mut BTreeMap<State, f64>| {
        let start = from.max(burn_in);
        if to > start {
            *w.entry(x.to_vec()).or_insert(0.0) += to - start;
        }
    };
    let out = engine.run(x0, t_final, &mut rng, max_jumps, |t, x, _| {
        credit(last_t, t, &last_x, &mut w);
        last_t = t;
        last_x.clear();
        last_x.extend_from_slice(x);
    })?;
    credit(last_t, t_final, &out.state, &mut w);
    Ok(EmpiricalDistribution::normalized(w, Weighting::TimeAveraged { burn_in }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub distribution: EmpiricalDistribution,
    /// Endpoint of replica `i` at index `i`.
    pub endpoints: Vec<State>,
    pub n_absorbed: u64,
}

/// Endpoints at `t_final` of `n` replicas; replica `i` runs on stream `i` of
/// `base_seed`.
pub fn ensemble(
    net: &Network,
    kin: &Kinetics,
    x0: &[i64],
    t_final: f64,
    n: u64,
    base_seed: u64,
    max_jumps: u64,
) -> Result<Ensemble, SsaError> {
    check_inputs(net, x0, t_final)?;
    if n == 0 {
        return Err(SsaError::NoReplicas);
    }
    let engine = Engine::new(net, kin);
    let results: Vec<Result<Outcome, SsaError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(base_seed, i);
            engine.run(x0, t_final, &mut rng, max_jumps, |_, _, _| {})
        })
        .collect();
    let mut endpoints = Vec::with_capacity(n as usize);
    let mut failures = Vec::new();
    let mut n_absorbed = 0;
    let mut w: BTreeMap<State, f64> = BTreeMap::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => {
                n_absorbed += u64::from(o.absorbed);
                *w.entry(o.state.clone()).or_insert(0.0) += 1.0;
                endpoints.push(o.state);
            }
            Err(e) => failures.push((i as u64, e)),
        }
    }
    if !failures.is_empty() {
        return Err(SsaError::Replicas { failures });
    }
    Ok(Ensemble {
        distribution: EmpiricalDistribution::normalized(w, Weighting::EndpointEnsemble { n }),
        endpoints,
        n_absorbed,
    })
}
