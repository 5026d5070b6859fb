//! MCMC transition kernels over `theta = (f, tau)`.
//!
//! Every kernel works on a [`ChainState`] whose cached log density and
//! gradient always describe its current position, and reports one
//! [`StepInfo`] per transition. [`run_chain`] drives a kernel, tunes its step
//! size during burn-in and collects a [`Trace`].

mod amala;
mod chain;
mod ess2;
mod hmc;
mod split_hmc;

pub use amala::{fisher_metric, Amala, AmalaProposal};
pub use chain::{
    run_chain, run_chains, ChainOptions, Clock, ThreadCpuClock, TickClock, Trace, TraceRow,
};
pub use ess2::{EllipticalSlice, STALL_WIDTH};
pub use hmc::{leapfrog, Hmc};
pub use split_hmc::{rotate_spectral, SplitHmc};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
pub use crate::par::{stream_rng, StreamRng};
use crate::model::{DifferentiableTarget, LatentGaussianModel, Posterior};

/// Random stream owned by one chain.
pub type ChainRng = StreamRng;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub log_density: f64,
    pub grad: Vec<f64>,
}

impl ChainState {
    pub fn new<T: DifferentiableTarget + ?Sized>(target: &T, theta: Vec<f64>) -> Self {
        let mut grad = vec![0.0; theta.len()];
        let log_density = target.log_density_and_grad(&theta, &mut grad);
        Self {
            theta,
            log_density,
            grad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub accepted: bool,
    /// Energy error of the proposal, or log acceptance ratio for aMALA; NaN
    /// when the kernel has none.
    pub delta_h: f64,
    /// The proposal had non-finite energy and was rejected.
    pub divergent: bool,
    /// The slice bracket collapsed and the state was kept.
    pub stalled: bool,
}

impl StepInfo {
    pub(crate) fn accept(accepted: bool, delta_h: f64) -> Self {
        Self {
            accepted,
            delta_h,
            divergent: false,
            stalled: false,
        }
    }

    pub(crate) fn divergent() -> Self {
        Self {
            accepted: false,
            delta_h: f64::INFINITY,
            divergent: true,
            stalled: false,
        }
    }
}

pub trait Kernel: Send {
    fn name(&self) -> &'static str;

    /// Length of `theta`.
    fn dim(&self) -> usize;

    fn init_state(&self, theta: Vec<f64>) -> ChainState;

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> Result<StepInfo>;

    /// Log-likelihood (with constant) reported in traces.
    fn reported_log_likelihood(&self, theta: &[f64]) -> f64;

    fn step_size(&self) -> Option<f64> {
        None
    }

    fn set_step_size(&mut self, _epsilon: f64) {}

    /// aMALA's bound on the multiplicative `kappa` move.
    fn kappa_step(&self) -> Option<f64> {
        None
    }

    /// Multiply the proposal scale by `factor`. Used by burn-in tuning.
    fn scale_step(&mut self, factor: f64) {
        if let Some(eps) = self.step_size() {
            self.set_step_size(eps * factor);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Hmc,
    SplitHmc,
    Mala,
    Amala,
    Ess2,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 5] = [
        SamplerKind::Ess2,
        SamplerKind::Mala,
        SamplerKind::Amala,
        SamplerKind::Hmc,
        SamplerKind::SplitHmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Hmc => "hmc",
            SamplerKind::SplitHmc => "splithmc",
            SamplerKind::Mala => "mala",
            SamplerKind::Amala => "amala",
            SamplerKind::Ess2 => "ess2",
        }
    }

    pub fn default_config(self) -> SamplerConfig {
        let (epsilon, steps) = match self {
            SamplerKind::Hmc => (0.05, 20),
            SamplerKind::SplitHmc => (0.1, 15),
            SamplerKind::Mala => (0.02, 1),
            SamplerKind::Amala => (0.5, 1),
            SamplerKind::Ess2 => (1.0, 1),
        };
        SamplerConfig {
            epsilon,
            steps,
            c: DEFAULT_KAPPA_STEP,
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "hmc" => SamplerKind::Hmc,
            "splithmc" | "split-hmc" => SamplerKind::SplitHmc,
            "mala" => SamplerKind::Mala,
            "amala" => SamplerKind::Amala,
            "ess2" | "es2" => SamplerKind::Ess2,
            other => return Err(Error::Config(format!("unknown sampler '{other}'"))),
        })
    }
}

pub const DEFAULT_KAPPA_STEP: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Leapfrog step size.
    pub epsilon: f64,
    /// Leapfrog steps per proposal (HMC and split HMC only).
    pub steps: usize,
    /// aMALA multiplicative bound on the `kappa` move.
    pub c: f64,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.steps == 0 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("c must exceed 1, got {}", self.c)));
        }
        Ok(())
    }
}

/// Build the named kernel on the posterior of `model`.
pub fn build_kernel<'m, M: LatentGaussianModel>(
    kind: SamplerKind,
    model: &'m M,
    cfg: &SamplerConfig,
) -> Result<Box<dyn Kernel + 'm>> {
    cfg.validate()?;
    let post = Posterior::new(model);
    Ok(match kind {
        SamplerKind::Hmc => Box::new(Hmc::new(post, cfg.epsilon, cfg.steps)),
        SamplerKind::Mala => Box::new(Hmc::mala(post, cfg.epsilon)),
        SamplerKind::SplitHmc => Box::new(SplitHmc::new(post, cfg.epsilon, cfg.steps)),
        SamplerKind::Amala => Box::new(Amala::new(post, cfg.epsilon, cfg.c)),
        SamplerKind::Ess2 => Box::new(EllipticalSlice::new(post)),
    })
}
