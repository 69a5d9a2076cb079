//! Preconditioned Crank–Nicolson Metropolis sampling and Bayesian-mean
//! estimation.
//!
//! The proposal is `w* = √(1−β²)·w + β·ξ` with `ξ` standard normal. It leaves
//! the Gaussian reference measure invariant, so the acceptance probability is
//! `min(1, L(w*)/L(w))` and the prior only enters through the map `w ↦ ρ(w)`.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, DensityMatrix};
use crate::measurement::{CompiledLikelihood, MeasurementDataset};
use crate::priors::{ParamVector, PriorModel};
use crate::rng::{RngSeed, RngStream};

pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_TARGET_ACCEPTANCE: f64 = 0.25;
pub const DEFAULT_ADAPT_WINDOW: usize = 50;
pub const MIN_BETA: f64 = 1e-4;
pub const MAX_BETA: f64 = 1.0;

/// Step-size adaptation. Only active during burn-in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Adaptation {
    Off,
    TargetRate { target: f64, window: usize },
}

impl Default for Adaptation {
    fn default() -> Self {
        Adaptation::TargetRate {
            target: DEFAULT_TARGET_ACCEPTANCE,
            window: DEFAULT_ADAPT_WINDOW,
        }
    }
}

/// Chain settings.
///
/// Burn-in is `round(burn_in · length)` extra steps run before the `length`
/// retained samples; checkpoints count retained samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub length: usize,
    pub beta: f64,
    pub adaptation: Adaptation,
    pub burn_in: f64,
    pub checkpoints: Vec<usize>,
    pub seed: RngSeed,
    /// Keep every `trace_every`-th retained state (0 keeps none).
    pub trace_every: usize,
}

impl ChainConfig {
    /// Defaults: `β = 0.1`, adaptation toward 25 % acceptance, no burn-in,
    /// checkpoints at the powers of two from `2⁵` up to `length`.
    pub fn new(length: usize, seed: RngSeed) -> Self {
        let mut checkpoints = powers_of_two(5, usize::BITS - 1)
            .into_iter()
            .filter(|&c| c <= length)
            .collect::<Vec<_>>();
        if checkpoints.last() != Some(&length) {
            checkpoints.push(length);
        }
        Self {
            length,
            beta: DEFAULT_BETA,
            adaptation: Adaptation::default(),
            burn_in: 0.0,
            checkpoints,
            seed,
            trace_every: 0,
        }
    }

    pub fn burn_in_steps(&self) -> usize {
        libm::round(self.burn_in * self.length as f64) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidParameter("chain length must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter("beta must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidParameter("burn-in fraction must lie in [0, 1)"));
        }
        if self.checkpoints.iter().any(|&c| c == 0 || c > self.length) {
            return Err(Error::InvalidParameter("checkpoints must lie in [1, length]"));
        }
        if let Adaptation::TargetRate { target, window } = self.adaptation {
            if !(target > 0.0 && target < 1.0) || window == 0 {
                return Err(Error::InvalidParameter("adaptation target must lie in (0, 1) with a positive window"));
            }
        }
        Ok(())
    }
}

/// `[2^lo, …, 2^hi]`
pub fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|e| 1usize << e).collect()
}

/// Source of elapsed wall time in seconds. The origin is chosen by the
/// caller, e.g. before the point estimate feeding an estimate-biased prior.
pub trait Clock {
    fn elapsed_s(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_s(&self) -> f64 {
        0.0
    }
}

impl<F: Fn() -> f64> Clock for F {
    fn elapsed_s(&self) -> f64 {
        self()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    /// Retained samples averaged into `rho_b`.
    pub length: usize,
    pub wall_s: f64,
    pub rho_b: DensityMatrix,
    /// Acceptance rate over retained steps so far.
    pub acceptance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainResult {
    pub checkpoints: Vec<Checkpoint>,
    pub acceptance_rate: f64,
    pub final_beta: f64,
    pub burn_in_steps: usize,
    pub trace: Vec<DensityMatrix>,
}

impl ChainResult {
    pub fn final_estimate(&self) -> &DensityMatrix {
        &self.checkpoints.last().expect("at least one checkpoint").rho_b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcnStep {
    pub w: ParamVector,
    pub loglik: f64,
    pub accepted: bool,
}

fn propose<R: Rng + ?Sized>(w: &ParamVector, beta: f64, rng: &mut R) -> ParamVector {
    let keep = libm::sqrt(1.0 - beta * beta);
    let mut next = w.clone();
    for x in next.as_mut_slice() {
        let xi: f64 = StandardNormal.sample(rng);
        *x = keep * *x + beta * xi;
    }
    next
}

/// Metropolis test on a log-likelihood difference. Non-finite proposals are
/// always rejected.
fn accept<R: Rng + ?Sized>(current: f64, proposed: f64, rng: &mut R) -> bool {
    if !proposed.is_finite() {
        return false;
    }
    let log_ratio = proposed - current;
    // draw unconditionally so the stream does not depend on the outcome
    let u: f64 = rng.random::<f64>();
    log_ratio >= 0.0 || libm::log(1.0 - u) < log_ratio
}

/// One pCN transition. `current_loglik` must be `loglik(w)`.
pub fn pcn_step<R: Rng + ?Sized>(
    w: &ParamVector,
    current_loglik: f64,
    beta: f64,
    mut loglik: impl FnMut(&ParamVector) -> f64,
    rng: &mut R,
) -> PcnStep {
    let proposal = propose(w, beta, rng);
    let ll = loglik(&proposal);
    if accept(current_loglik, ll, rng) {
        PcnStep {
            w: proposal,
            loglik: ll,
            accepted: true,
        }
    } else {
        PcnStep {
            w: w.clone(),
            loglik: current_loglik,
            accepted: false,
        }
    }
}

/// Multiplicative step-size update `β·exp(rate − target)`, clamped to
/// `[1e-4, 1]`.
pub fn adapt_beta(acceptance_rate: f64, beta: f64, target: f64) -> f64 {
    (beta * libm::exp(acceptance_rate - target)).clamp(MIN_BETA, MAX_BETA)
}

/// Arithmetic mean of density matrices.
pub fn bayes_mean(samples: &[DensityMatrix]) -> Result<DensityMatrix> {
    crate::linalg::mean_state(samples)
}

struct State {
    w: ParamVector,
    loglik: f64,
    rho: DensityMatrix,
}

fn evaluate(model: &PriorModel, like: &CompiledLikelihood, w: ParamVector) -> Option<State> {
    let rho = model.map(&w).ok()?;
    let loglik = like.eval(rho.matrix());
    loglik.is_finite().then_some(State { w, loglik, rho })
}

/// Runs one chain targeting `posterior ∝ L_𝒟(ρ(w)) · N(w; 0, I)` and reports
/// the running posterior mean of `ρ(w)` at each checkpoint.
pub fn run_chain(
    model: &PriorModel,
    data: &MeasurementDataset,
    cfg: &ChainConfig,
    clock: &dyn Clock,
) -> Result<ChainResult> {
    cfg.validate()?;
    if data.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: data.dim(),
        });
    }
    let like = CompiledLikelihood::new(data);
    let mut rng = RngStream::new(cfg.seed);

    let mut state = None;
    for _ in 0..1000 {
        state = evaluate(model, &like, model.sample_reference(&mut rng));
        if state.is_some() {
            break;
        }
    }
    let mut state = state.ok_or(Error::Degenerate)?;

    let mut checkpoints: Vec<usize> = cfg.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints.is_empty() {
        checkpoints.push(cfg.length);
    }

    let burn_in = cfg.burn_in_steps();
    let mut beta = cfg.beta;
    let mut window_accepts = 0usize;
    let mut window_steps = 0usize;
    let step = |state: &mut State, beta: f64, rng: &mut RngStream| -> bool {
        let proposal = propose(&state.w, beta, rng);
        let candidate = evaluate(model, &like, proposal);
        let ll = candidate.as_ref().map_or(f64::NEG_INFINITY, |c| c.loglik);
        if accept(state.loglik, ll, rng) {
            *state = candidate.expect("finite log-likelihood implies a state");
            true
        } else {
            false
        }
    };

    for _ in 0..burn_in {
        let ok = step(&mut state, beta, &mut rng);
        if let Adaptation::TargetRate { target, window } = cfg.adaptation {
            window_accepts += ok as usize;
            window_steps += 1;
            if window_steps == window {
                beta = adapt_beta(window_accepts as f64 / window as f64, beta, target);
                window_accepts = 0;
                window_steps = 0;
            }
        }
    }

    let dim = model.dim();
    let mut sum = CMatrix::zeros(dim);
    let mut accepted = 0usize;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut trace = Vec::new();
    let mut next_cp = checkpoints.iter().copied().peekable();
    let max_len = *checkpoints.last().expect("non-empty");
    for n in 1..=max_len {
        // the chain's first retained sample is the state after one transition
        accepted += step(&mut state, beta, &mut rng) as usize;
        sum.add_scaled(state.rho.matrix(), 1.0);
        if cfg.trace_every > 0 && n % cfg.trace_every == 0 {
            trace.push(state.rho.clone());
        }
        if next_cp.peek() == Some(&n) {
            next_cp.next();
            out.push(Checkpoint {
                length: n,
                wall_s: clock.elapsed_s(),
                rho_b: DensityMatrix::new_unchecked(sum.scale(1.0 / n as f64)),
                acceptance: accepted as f64 / n as f64,
            });
        }
    }

    Ok(ChainResult {
        acceptance_rate: accepted as f64 / max_len as f64,
        checkpoints: out,
        final_beta: beta,
        burn_in_steps: burn_in,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::DatasetMode;

    #[test]
    fn adapt_beta_direction() {
        assert!(adapt_beta(1.0, 0.1, 0.25) > 0.1);
        assert!(adapt_beta(0.0, 0.1, 0.25) < 0.1);
        assert_eq!(adapt_beta(0.25, 0.1, 0.25), 0.1);
        assert_eq!(adapt_beta(0.0, 1e-4, 0.25), 1e-4);
        assert_eq!(adapt_beta(1.0, 1.0, 0.25), 1.0);
    }

    #[test]
    fn flat_likelihood_always_accepts() {
        let mut rng = RngStream::new(RngSeed::new(1, 0));
        let mut w = ParamVector::standard_normal(3, &mut rng);
        for beta in [0.01, 0.3, 1.0] {
            for _ in 0..200 {
                let s = pcn_step(&w, 0.0, beta, |_| 0.0, &mut rng);
                assert!(s.accepted);
                w = s.w;
            }
        }
    }

    #[test]
    fn non_finite_proposals_are_rejected() {
        let mut rng = RngStream::new(RngSeed::new(2, 0));
        let w = ParamVector::standard_normal(2, &mut rng);
        let s = pcn_step(&w, -1.0, 0.5, |_| f64::NAN, &mut rng);
        assert!(!s.accepted);
        assert_eq!(s.w, w);
        let s = pcn_step(&w, -1.0, 0.5, |_| f64::NEG_INFINITY, &mut rng);
        assert!(!s.accepted);
    }

    #[test]
    fn config_validation() {
        let seed = RngSeed::default();
        assert!(ChainConfig::new(0, seed).validate().is_err());
        let mut c = ChainConfig::new(64, seed);
        assert_eq!(c.checkpoints, [32, 64]);
        c.beta = 0.0;
        assert!(c.validate().is_err());
        let mut c = ChainConfig::new(100, seed);
        assert_eq!(c.checkpoints, [32, 64, 100]);
        c.burn_in = 1.0;
        assert!(c.validate().is_err());
        let mut c = ChainConfig::new(100, seed);
        c.checkpoints = alloc::vec![200];
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_length_chain_is_an_error() {
        let model = PriorModel::bures(2).unwrap();
        let data = MeasurementDataset::empty(1, DatasetMode::SingleShot);
        let mut cfg = ChainConfig::new(1, RngSeed::default());
        cfg.length = 0;
        cfg.checkpoints.clear();
        assert!(run_chain(&model, &data, &cfg, &NoClock).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let model = PriorModel::bures(4).unwrap();
        let data = MeasurementDataset::empty(1, DatasetMode::SingleShot);
        let cfg = ChainConfig::new(32, RngSeed::default());
        assert!(matches!(run_chain(&model, &data, &cfg, &NoClock), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bayes_mean_examples() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let m = bayes_mean(&[rho.clone(), rho.clone()]).unwrap();
        assert!(m.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let p0 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let p1 = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        let m = bayes_mean(&[p0, p1]).unwrap();
        assert!(m.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
        assert!(bayes_mean(&[]).is_err());
    }

    #[test]
    fn checkpoints_are_physical_and_ordered() {
        let model = PriorModel::bures(2).unwrap();
        let data = MeasurementDataset::empty(1, DatasetMode::SingleShot);
        let cfg = ChainConfig::new(256, RngSeed::new(3, 0));
        let res = run_chain(&model, &data, &cfg, &NoClock).unwrap();
        let lengths: Vec<_> = res.checkpoints.iter().map(|c| c.length).collect();
        assert_eq!(lengths, [32, 64, 128, 256]);
        for cp in &res.checkpoints {
            DensityMatrix::new(cp.rho_b.matrix().clone()).unwrap();
            assert!((0.0..=1.0).contains(&cp.acceptance));
        }
    }
}
