use rand::Rng;
use rand_distr::StandardNormal;

use super::{ChainRng, ChainState, Kernel, StepInfo};
use crate::error::Result;
use crate::model::DifferentiableTarget;

/// Run `steps` leapfrog steps with identity mass. `grad` must hold the
/// gradient at `theta` on entry; on exit it holds the gradient at the new
/// position. Returns the log density there.
pub fn leapfrog<T: DifferentiableTarget + ?Sized>(
    target: &T,
    theta: &mut [f64],
    p: &mut [f64],
    grad: &mut [f64],
    epsilon: f64,
    steps: usize,
) -> f64 {
    let half = 0.5 * epsilon;
    for (pi, gi) in p.iter_mut().zip(grad.iter()) {
        *pi += half * gi;
    }
    let mut lp = f64::NAN;
    for s in 0..steps {
        for (x, pi) in theta.iter_mut().zip(p.iter()) {
            *x += epsilon * pi;
        }
        lp = target.log_density_and_grad(theta, grad);
        let kick = if s + 1 == steps { half } else { epsilon };
        for (pi, gi) in p.iter_mut().zip(grad.iter()) {
            *pi += kick * gi;
        }
    }
    lp
}

/// Hamiltonian Monte Carlo with identity mass; MALA is the one-step case.
#[derive(Debug, Clone)]
pub struct Hmc<T> {
    target: T,
    epsilon: f64,
    steps: usize,
    name: &'static str,
    p: Vec<f64>,
    theta: Vec<f64>,
    grad: Vec<f64>,
}

impl<T: DifferentiableTarget> Hmc<T> {
    pub fn new(target: T, epsilon: f64, steps: usize) -> Self {
        let n = target.dim();
        Self {
            target,
            epsilon,
            steps,
            name: "hmc",
            p: vec![0.0; n],
            theta: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn mala(target: T, epsilon: f64) -> Self {
        let mut k = Self::new(target, epsilon, 1);
        k.name = "mala";
        k
    }

    pub fn target(&self) -> &T {
        &self.target
    }
}

impl<T: DifferentiableTarget + Send> Kernel for Hmc<T> {
    fn name(&self) -> &'static str {
        self.name
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn init_state(&self, theta: Vec<f64>) -> ChainState {
        ChainState::new(&self.target, theta)
    }

    fn step(&mut self, state: &mut ChainState, rng: &mut ChainRng) -> Result<StepInfo> {
        for p in self.p.iter_mut() {
            *p = rng.sample(StandardNormal);
        }
        let u: f64 = rng.random();
        let kinetic0 = 0.5 * self.p.iter().map(|v| v * v).sum::<f64>();
        let h0 = -state.log_density + kinetic0;
        self.theta.copy_from_slice(&state.theta);
        self.grad.copy_from_slice(&state.grad);
        let lp = leapfrog(
            &self.target,
            &mut self.theta,
            &mut self.p,
            &mut self.grad,
            self.epsilon,
            self.steps,
        );
        let h1 = -lp + 0.5 * self.p.iter().map(|v| v * v).sum::<f64>();
        let delta = h1 - h0;
        if !delta.is_finite() || self.theta.iter().any(|v| !v.is_finite()) {
            return Ok(StepInfo::divergent());
        }
        let accepted = u.ln() < -delta;
        if accepted {
            state.theta.copy_from_slice(&self.theta);
            state.grad.copy_from_slice(&self.grad);
            state.log_density = lp;
        }
        Ok(StepInfo::accept(accepted, delta))
    }

    fn reported_log_likelihood(&self, theta: &[f64]) -> f64 {
        self.target.reported_log_likelihood(theta)
    }

    fn step_size(&self) -> Option<f64> {
        Some(self.epsilon)
    }

    fn set_step_size(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }
}
