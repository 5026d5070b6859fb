//! Elliptical slice sampling of `f | kappa` alternated with a Gibbs draw of
//! `kappa | f`.

use std::f64::consts::TAU;

use rand::Rng;

use super::{ChainRng, ChainState, Kernel, StepInfo};
use crate::error::Result;
use crate::gmrf::sample_kappa_conditional;
use crate::model::{DifferentiableTarget, LatentGaussianModel, Posterior};

/// Bracket width below which the slice search is abandoned.
pub const STALL_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EllipticalSlice<'m, M: ?Sized> {
    post: Posterior<'m, M>,
    stalls: usize,
}

impl<'m, M: LatentGaussianModel + ?Sized> EllipticalSlice<'m, M> {
    pub fn new(post: Posterior<'m, M>) -> Self {
        Self { post, stalls: 0 }
    }

    pub fn stalls(&self) -> usize {
        self.stalls
    }

    /// Slice update of `f` with prior draw `nu`; returns `None` on a stall.
    pub fn slice_update<R: Rng + ?Sized>(&self, f: &[f64], nu: &[f64], rng: &mut R) -> Option<Vec<f64>> {
        let model = self.post.model;
        let log_y = model.log_likelihood(f) + rng.random::<f64>().ln();
        let mut phi = TAU * rng.random::<f64>();
        let (mut lo, mut hi) = (phi - TAU, phi);
        let mut cand = vec![0.0; f.len()];
        loop {
            let (s, c) = phi.sin_cos();
            for ((x, &a), &b) in cand.iter_mut().zip(f).zip(nu) {
                *x = a * c + b * s;
            }
            if model.log_likelihood(&cand) > log_y {
                return Some(cand);
            }
            if phi < 0.0 {
                lo = phi;
            } else {
                hi = phi;
            }
            if hi - lo < STALL_WIDTH {
                return None;
            }
            phi = lo + (hi - lo) * rng.random::<f64>();
        }
    }
}

impl<'m, M: LatentGaussianModel + ?Sized> Kernel for EllipticalSlice<'m, M> {
    fn name(&self) -> &'static str {
        "ess2"
    }

    fn dim(&self) -> usize {
        self.post.dim()
    }

    fn init_state(&self, theta: Vec<f64>) -> ChainState {
        ChainState::new(&self.post, theta)
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> Result<StepInfo> {
        let model = self.post.model;
        let n = model.dim();
        let kappa = state.theta[n].exp();
        let nu = model.precision().sample_prior_f(kappa, rng);
        let stalled = match self.slice_update(&state.theta[..n], &nu, rng) {
            Some(f) => {
                state.theta[..n].copy_from_slice(&f);
                false
            }
            None => {
                self.stalls += 1;
                true
            }
        };
        let kappa = sample_kappa_conditional(model.precision(), model.prior(), &state.theta[..n], rng);
        state.theta[n] = kappa.ln();
        state.log_density = self.post.log_density_and_grad(&state.theta, &mut state.grad);
        Ok(StepInfo {
            accepted: true,
            delta_h: f64::NAN,
            divergent: false,
            stalled,
        })
    }

    fn reported_log_likelihood(&self, theta: &[f64]) -> f64 {
        self.post.reported_log_likelihood(theta)
    }
}
