//! Posterior over `theta = (f, tau)` for latent-Gaussian models.

use crate::error::Result;
use crate::genealogy::ValidatedGenealogy;
use crate::gmrf::{log_prior_theta_unchecked, PrecisionOperator, PriorConfig};
use crate::gridlik::{sufficient_stats, Grid, SuffStats};

/// A likelihood over `f` paired with the intrinsic GMRF prior.
pub trait LatentGaussianModel: Sync {
    fn precision(&self) -> &PrecisionOperator;
    fn prior(&self) -> &PriorConfig;

    /// Log-likelihood without f-independent constants.
    fn log_likelihood(&self, f: &[f64]) -> f64;

    /// Writes the score into `out` and returns the log-likelihood.
    fn log_likelihood_and_score(&self, f: &[f64], out: &mut [f64]) -> f64;

    /// Diagonal of the observed information, `-d^2 l / df_d^2`.
    fn information_diag(&self, f: &[f64], out: &mut [f64]);

    /// Constant added when reporting the log-likelihood.
    fn log_constant(&self) -> f64 {
        0.0
    }

    fn dim(&self) -> usize {
        self.precision().dim()
    }
}

/// The grid-discretized coalescent model.
#[derive(Debug, Clone)]
pub struct CoalescentModel {
    grid: Grid,
    stats: SuffStats,
    precision: PrecisionOperator,
    prior: PriorConfig,
}

impl CoalescentModel {
    pub fn new(
        g: &ValidatedGenealogy,
        num_points: usize,
        prior: PriorConfig,
        jitter: f64,
    ) -> Result<Self> {
        let grid = Grid::new(g, num_points)?;
        let stats = sufficient_stats(g, &grid);
        let precision = PrecisionOperator::with_jitter(grid.midpoints(), jitter)?;
        Ok(Self {
            grid,
            stats,
            precision,
            prior,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stats(&self) -> &SuffStats {
        &self.stats
    }

    /// Constant log population size maximizing the likelihood.
    pub fn constant_mle(&self) -> f64 {
        let y: f64 = self.stats.per_cell_y.iter().sum();
        let w: f64 = self.stats.per_cell_w.iter().sum();
        (w / y).ln()
    }
}

impl LatentGaussianModel for CoalescentModel {
    fn precision(&self) -> &PrecisionOperator {
        &self.precision
    }

    fn prior(&self) -> &PriorConfig {
        &self.prior
    }

    fn log_likelihood(&self, f: &[f64]) -> f64 {
        self.stats.log_likelihood_unchecked(f)
    }

    fn log_likelihood_and_score(&self, f: &[f64], out: &mut [f64]) -> f64 {
        self.stats.score_into(f, out)
    }

    fn information_diag(&self, f: &[f64], out: &mut [f64]) {
        for ((o, &fd), &w) in out.iter_mut().zip(f).zip(&self.stats.per_cell_w) {
            *o = w * (-fd).exp();
        }
    }

    fn log_constant(&self) -> f64 {
        self.stats.log_constant()
    }
}

/// Likelihood identically zero: the posterior is the prior.
#[derive(Debug, Clone)]
pub struct FlatLikelihood {
    pub precision: PrecisionOperator,
    pub prior: PriorConfig,
}

impl LatentGaussianModel for FlatLikelihood {
    fn precision(&self) -> &PrecisionOperator {
        &self.precision
    }

    fn prior(&self) -> &PriorConfig {
        &self.prior
    }

    fn log_likelihood(&self, _f: &[f64]) -> f64 {
        0.0
    }

    fn log_likelihood_and_score(&self, _f: &[f64], out: &mut [f64]) -> f64 {
        out.iter_mut().for_each(|o| *o = 0.0);
        0.0
    }

    fn information_diag(&self, _f: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}

/// A log density with gradient on `R^n`.
pub trait DifferentiableTarget: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, theta: &[f64]) -> f64;
    fn log_density_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    /// Log-likelihood reported alongside samples; zero when not meaningful.
    fn reported_log_likelihood(&self, _theta: &[f64]) -> f64 {
        0.0
    }
}

/// Joint posterior of `theta = (f, tau)` with `tau = log kappa` last.
///
/// The log density is `l(f) + ((D-1)/2 + alpha - 1) tau - (q/2 + beta) e^tau`
/// plus, when `jacobian` is set, the `+tau` change-of-variables term that
/// makes the `tau`-marginal agree with the Gamma conditional of `kappa`.
#[derive(Debug)]
pub struct Posterior<'m, M: ?Sized> {
    pub model: &'m M,
    pub jacobian: bool,
}

impl<M: ?Sized> Clone for Posterior<'_, M> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<M: ?Sized> Copy for Posterior<'_, M> {}

impl<'m, M: LatentGaussianModel + ?Sized> Posterior<'m, M> {
    pub fn new(model: &'m M) -> Self {
        Self {
            model,
            jacobian: true,
        }
    }

    pub fn without_jacobian(model: &'m M) -> Self {
        Self {
            model,
            jacobian: false,
        }
    }

    /// Coefficient of `tau` in the log density.
    pub fn tau_shape(&self) -> f64 {
        let p = self.model.prior();
        0.5 * self.model.dim() as f64 + p.alpha - 1.0 + if self.jacobian { 1.0 } else { 0.0 }
    }

    /// Log prior of `theta` (including the Jacobian term when enabled).
    pub fn log_prior(&self, f: &[f64], tau: f64) -> f64 {
        let q = self.model.precision().quadratic_form_unchecked(f);
        let base = log_prior_theta_unchecked(self.model.dim(), self.model.prior(), q, tau);
        if self.jacobian {
            base + tau
        } else {
            base
        }
    }

    /// Log density of `(f, kappa)` at `kappa = e^tau`, i.e. the `tau`
    /// density minus `tau`.
    pub fn log_density_kappa(&self, f: &[f64], kappa: f64) -> f64 {
        let tau = kappa.ln();
        self.model.log_likelihood(f) + self.log_prior(f, tau) - tau
    }
}

impl<'m, M: LatentGaussianModel + ?Sized> DifferentiableTarget for Posterior<'m, M> {
    fn dim(&self) -> usize {
        self.model.dim() + 1
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let (f, tau) = theta.split_at(self.model.dim());
        self.model.log_likelihood(f) + self.log_prior(f, tau[0])
    }

    fn log_density_and_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.model.dim();
        let (f, tau) = (&theta[..n], theta[n]);
        let (gf, gt) = grad.split_at_mut(n);
        let l = self.model.log_likelihood_and_score(f, gf);
        let prec = self.model.precision();
        let kappa = tau.exp();
        // gf += -kappa C f, computed row by row from the tridiagonal entries
        let m = prec.matrix();
        for i in 0..n {
            let mut cf = m.diag[i] * f[i];
            if i > 0 {
                cf += m.off[i - 1] * f[i - 1];
            }
            if i + 1 < n {
                cf += m.off[i] * f[i + 1];
            }
            gf[i] -= kappa * cf;
        }
        let q = prec.quadratic_form_unchecked(f);
        let beta = self.model.prior().beta;
        let shape = self.tau_shape();
        gt[0] = shape - (0.5 * q + beta) * kappa;
        l + shape * tau - (0.5 * q + beta) * kappa
    }

    fn reported_log_likelihood(&self, theta: &[f64]) -> f64 {
        self.model.log_likelihood(&theta[..self.model.dim()]) + self.model.log_constant()
    }
}
