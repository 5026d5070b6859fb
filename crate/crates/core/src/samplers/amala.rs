//! Adaptive Riemannian MALA in `(f, kappa)`.
//!
//! `kappa` moves by a multiplicative factor `z` in `[1/c, c]` with density
//! proportional to `1 + 1/z`, which is a symmetric proposal in `kappa`.
//! Given `kappa*`, `f` takes one semi-implicit Riemannian leapfrog step with
//! metric `G(f, kappa) = kappa C + diag(w e^{-f})`; forward and reverse
//! momentum densities enter the acceptance ratio.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{ChainRng, ChainState, Kernel, StepInfo};
use crate::error::{Error, Result};
use crate::gmrf::{SymTridiag, TridiagCholesky};
use crate::model::{DifferentiableTarget, LatentGaussianModel, Posterior};

/// `G(f, kappa) = kappa C + diag(w e^{-f})`, the observed Fisher information.
pub fn fisher_metric<M: LatentGaussianModel + ?Sized>(model: &M, f: &[f64], kappa: f64) -> SymTridiag {
    let mut info = vec![0.0; f.len()];
    model.information_diag(f, &mut info);
    model.precision().matrix().scaled_plus_diag(kappa, &info)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmalaProposal {
    pub f: Vec<f64>,
    pub kappa: f64,
    /// Log Metropolis-Hastings ratio of the joint move.
    pub log_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Amala<'m, M: ?Sized> {
    post: Posterior<'m, M>,
    epsilon: f64,
    c: f64,
}

impl<'m, M: LatentGaussianModel + ?Sized> Amala<'m, M> {
    pub fn new(post: Posterior<'m, M>, epsilon: f64, c: f64) -> Self {
        Self { post, epsilon, c }
    }

    /// Draw the multiplicative `kappa` factor.
    pub fn draw_z<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = self.c;
        let lo = 1.0 / c;
        loop {
            let z = lo + (c - lo) * rng.random::<f64>();
            let u: f64 = rng.random();
            if u * (1.0 + c) < 1.0 + 1.0 / z {
                return z;
            }
        }
    }

    fn gradient_u(&self, f: &[f64], kappa: f64, out: &mut [f64]) {
        let model = self.post.model;
        model.log_likelihood_and_score(f, out);
        let mut cf = vec![0.0; f.len()];
        model.precision().apply(f, &mut cf);
        for (o, c) in out.iter_mut().zip(&cf) {
            *o = -*o + kappa * c;
        }
    }

    fn metric(&self, f: &[f64], kappa: f64) -> Result<(SymTridiag, TridiagCholesky)> {
        let g = fisher_metric(self.post.model, f, kappa);
        let l = g.cholesky()?;
        Ok((g, l))
    }

    /// Deterministic proposal from `(f, kappa)` given `kappa*` and the
    /// standard-normal draw `xi` that generates the initial momentum.
    pub fn propose(&self, f: &[f64], kappa: f64, kappa_star: f64, xi: &[f64]) -> Result<AmalaProposal> {
        let n = f.len();
        let half = 0.5 * self.epsilon;
        let mut tmp = vec![0.0; n];

        let (_, l1) = self.metric(f, kappa_star)?;
        let mut p = xi.to_vec();
        l1.solve_upper(&mut p);
        let log_fwd = -0.5 * xi.iter().map(|v| v * v).sum::<f64>() + 0.5 * l1.log_det();

        self.gradient_u(f, kappa_star, &mut tmp);
        l1.solve(&mut tmp);
        for (pi, t) in p.iter_mut().zip(&tmp) {
            *pi -= half * t;
        }
        let f_star: Vec<f64> = f.iter().zip(&p).map(|(x, pi)| x + self.epsilon * pi).collect();

        let (g2, l2) = self.metric(&f_star, kappa)?;
        self.gradient_u(&f_star, kappa, &mut tmp);
        l2.solve(&mut tmp);
        for (pi, t) in p.iter_mut().zip(&tmp) {
            *pi -= half * t;
        }
        g2.matvec(&p, &mut tmp);
        let quad: f64 = p.iter().zip(&tmp).map(|(a, b)| a * b).sum();
        let log_rev = -0.5 * quad + 0.5 * l2.log_det();

        let u_cur = -self.post.log_density_kappa(f, kappa);
        let u_new = -self.post.log_density_kappa(&f_star, kappa_star);
        Ok(AmalaProposal {
            f: f_star,
            kappa: kappa_star,
            log_ratio: -u_new + u_cur - log_fwd + log_rev,
        })
    }
}

impl<'m, M: LatentGaussianModel + ?Sized> Kernel for Amala<'m, M> {
    fn name(&self) -> &'static str {
        "amala"
    }

    fn dim(&self) -> usize {
        self.post.dim()
    }

    fn init_state(&self, theta: Vec<f64>) -> ChainState {
        ChainState::new(&self.post, theta)
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> Result<StepInfo> {
        let n = self.post.model.dim();
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let z = self.draw_z(rng);
        let u: f64 = rng.random();
        let (f, tau) = (&state.theta[..n], state.theta[n]);
        let kappa = tau.exp();
        let prop = match self.propose(f, kappa, z * kappa, &xi) {
            Ok(p) => p,
            Err(Error::CholeskyFailure(_)) => return Ok(StepInfo::divergent()),
            Err(e) => return Err(e),
        };
        if !prop.log_ratio.is_finite() || prop.f.iter().any(|v| !v.is_finite()) {
            return Ok(StepInfo::divergent());
        }
        let accepted = u.ln() < prop.log_ratio;
        if accepted {
            state.theta[..n].copy_from_slice(&prop.f);
            state.theta[n] = prop.kappa.ln();
            state.log_density = self.post.log_density_and_grad(&state.theta, &mut state.grad);
        }
        Ok(StepInfo::accept(accepted, -prop.log_ratio))
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

    fn kappa_step(&self) -> Option<f64> {
        Some(self.c)
    }

    /// Scales `epsilon` and `ln c` together.
    fn scale_step(&mut self, factor: f64) {
        self.epsilon *= factor;
        self.c = self.c.powf(factor);
    }
}
