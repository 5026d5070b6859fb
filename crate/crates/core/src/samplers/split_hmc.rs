//! Split HMC for latent-Gaussian posteriors.
//!
//! The Hamiltonian is split into half of the residual potential
//! `-l - c tau + beta e^tau`, the Gaussian core `(q e^tau + |p_f|^2 + p_tau^2)/2`,
//! and the other half of the residual. The `f`-part of the core is a
//! harmonic oscillator with frequencies `sqrt(lambda_k e^tau)` in the
//! eigenbasis of the prior precision and is integrated exactly; the
//! `tau`-part is handled by kick/drift substeps wrapped symmetrically
//! around it.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{ChainRng, ChainState, Kernel, StepInfo};
use crate::error::Result;
use crate::model::{DifferentiableTarget, LatentGaussianModel, Posterior};

/// Exact flow of `(sum_k lambda_k e^tau g_k^2 + |r|^2)/2` for time `epsilon`
/// in spectral coordinates `g = Q^T f`, `r = Q^T p_f`.
///
/// Each mode rotates the pair `(omega_k g_k, r_k)` by the angle
/// `omega_k epsilon`; a zero-frequency mode drifts freely.
pub fn rotate_spectral(g: &mut [f64], r: &mut [f64], eigenvalues: &[f64], tau: f64, epsilon: f64) {
    let roots: Vec<f64> = eigenvalues.iter().map(|l| l.sqrt()).collect();
    rotate_modes(g, r, &roots, tau, epsilon);
}

/// As [`rotate_spectral`], given the square roots of the eigenvalues.
fn rotate_modes(g: &mut [f64], r: &mut [f64], roots: &[f64], tau: f64, epsilon: f64) {
    let scale = (0.5 * tau).exp();
    for ((gk, rk), &rt) in g.iter_mut().zip(r.iter_mut()).zip(roots) {
        let omega = rt * scale;
        let angle = omega * epsilon;
        if angle < 1e-12 {
            *gk += epsilon * *rk;
            continue;
        }
        let (s, c) = angle.sin_cos();
        let g0 = *gk;
        *gk = c * g0 + s / omega * *rk;
        *rk = -omega * s * g0 + c * *rk;
    }
}

#[derive(Debug, Clone)]
pub struct SplitHmc<'m, M: ?Sized> {
    post: Posterior<'m, M>,
    epsilon: f64,
    steps: usize,
    g: Vec<f64>,
    r: Vec<f64>,
    f: Vec<f64>,
    score: Vec<f64>,
    score_spec: Vec<f64>,
    roots: Vec<f64>,
}

impl<'m, M: LatentGaussianModel + ?Sized> SplitHmc<'m, M> {
    pub fn new(post: Posterior<'m, M>, epsilon: f64, steps: usize) -> Self {
        let n = post.model.dim();
        Self {
            post,
            epsilon,
            steps,
            g: vec![0.0; n],
            r: vec![0.0; n],
            f: vec![0.0; n],
            score: vec![0.0; n],
            score_spec: vec![0.0; n],
            roots: post.model.precision().eigenvalues().iter().map(|l| l.sqrt()).collect(),
        }
    }

    /// Apply the exact `f | tau` flow in the original coordinates.
    pub fn rotate(&self, f: &mut [f64], p: &mut [f64], tau: f64, epsilon: f64) {
        let prec = self.post.model.precision();
        let n = prec.dim();
        let mut g = vec![0.0; n];
        let mut r = vec![0.0; n];
        prec.to_spectral(f, &mut g);
        prec.to_spectral(p, &mut r);
        rotate_spectral(&mut g, &mut r, prec.eigenvalues(), tau, epsilon);
        prec.from_spectral(&g, f);
        prec.from_spectral(&r, p);
    }

    /// One trajectory from `(theta, p)`; returns the final log density.
    /// `p` is in the original coordinates; on return it holds the final momentum.
    pub fn integrate(&mut self, theta: &mut [f64], p: &mut [f64]) -> f64 {
        let model = self.post.model;
        let prec = model.precision();
        let lambda = prec.eigenvalues();
        let n = prec.dim();
        let eps = self.epsilon;
        let half = 0.5 * eps;
        let shape = self.post.tau_shape();
        let beta = model.prior().beta;
        let quad = |g: &[f64]| -> f64 { g.iter().zip(lambda).map(|(x, l)| l * x * x).sum() };

        let mut tau = theta[n];
        let mut p_tau = p[n];
        prec.to_spectral(&theta[..n], &mut self.g);
        prec.to_spectral(&p[..n], &mut self.r);
        let mut l = model.log_likelihood_and_score(&theta[..n], &mut self.score);
        prec.to_spectral(&self.score, &mut self.score_spec);

        for _ in 0..self.steps {
            for (rk, sk) in self.r.iter_mut().zip(&self.score_spec) {
                *rk += half * sk;
            }
            p_tau += half * (shape - beta * tau.exp());

            p_tau -= half * 0.5 * quad(&self.g) * tau.exp();
            tau += half * p_tau;
            rotate_modes(&mut self.g, &mut self.r, &self.roots, tau, eps);
            tau += half * p_tau;
            p_tau -= half * 0.5 * quad(&self.g) * tau.exp();

            prec.from_spectral(&self.g, &mut self.f);
            l = model.log_likelihood_and_score(&self.f, &mut self.score);
            prec.to_spectral(&self.score, &mut self.score_spec);
            for (rk, sk) in self.r.iter_mut().zip(&self.score_spec) {
                *rk += half * sk;
            }
            p_tau += half * (shape - beta * tau.exp());
        }
        if self.steps == 0 {
            self.f.copy_from_slice(&theta[..n]);
        }
        theta[..n].copy_from_slice(&self.f);
        theta[n] = tau;
        prec.from_spectral(&self.r, &mut p[..n]);
        p[n] = p_tau;
        l + self.post.log_prior(&theta[..n], tau)
    }
}

impl<'m, M: LatentGaussianModel + ?Sized> Kernel for SplitHmc<'m, M> {
    fn name(&self) -> &'static str {
        "splithmc"
    }

    fn dim(&self) -> usize {
        self.post.dim()
    }

    fn init_state(&self, theta: Vec<f64>) -> ChainState {
        ChainState::new(&self.post, theta)
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> Result<StepInfo> {
        let dim = state.theta.len();
        let mut p: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let u: f64 = rng.random();
        let h0 = -state.log_density + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        let mut theta = state.theta.clone();
        let lp = self.integrate(&mut theta, &mut p);
        let h1 = -lp + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        let delta = h1 - h0;
        if !delta.is_finite() || theta.iter().any(|v| !v.is_finite()) {
            return Ok(StepInfo::divergent());
        }
        let accepted = u.ln() < -delta;
        if accepted {
            let lp = self.post.log_density_and_grad(&theta, &mut state.grad);
            state.theta = theta;
            state.log_density = lp;
        }
        Ok(StepInfo::accept(accepted, delta))
    }

    fn reported_log_likelihood(&self, theta: &[f64]) -> f64 {
        self.post.reported_log_likelihood(theta)
    }

    fn step_size(&self) -> Option<f64> {
        Some(self.epsilon)
    }

    fn set_step_size(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }
}
