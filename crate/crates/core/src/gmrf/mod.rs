//! Intrinsic first-order random-walk prior on the log population sizes.
//!
//! The precision is the Brownian-motion precision on the grid midpoints
//! with its `(1,1)` entry reduced to `1/(x_2 - x_1)`, which makes every row
//! sum to zero. Its spectral pair is computed once and cached for the split
//! integrator; a jittered Cholesky factor is cached for prior draws.

mod tridiag;

pub use tridiag::{SymTridiag, TridiagCholesky};

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};

pub const DEFAULT_JITTER: f64 = 1e-6;

/// Gamma(shape, rate) hyperprior on the precision `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl PriorConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Config(format!(
                "alpha and beta must be positive, got {alpha}, {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrecisionOperator {
    index_times: Vec<f64>,
    matrix: SymTridiag,
    jitter: f64,
    /// Ascending; the first is the intrinsic zero.
    eigenvalues: Vec<f64>,
    /// Eigenvectors stored as rows: `eigvecs[k * dim + i] = Q[i][k]`.
    eigvecs: Vec<f64>,
    jittered_factor: TridiagCholesky,
    /// Fast transform for the cosine basis of a uniform grid.
    dct: Option<Dct>,
}

#[derive(Clone)]
struct Dct(Arc<dyn TransformType2And3<f64>>);

impl std::fmt::Debug for Dct {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Dct({})", self.0.len())
    }
}

fn spacing_is_uniform(x: &[f64]) -> bool {
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    x.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs())
}

impl PrecisionOperator {
    pub fn build(midpoints: &[f64]) -> Result<Self> {
        Self::with_jitter(midpoints, DEFAULT_JITTER)
    }

    pub fn with_jitter(midpoints: &[f64], jitter: f64) -> Result<Self> {
        let matrix = Self::intrinsic_matrix(midpoints)?;
        if !(jitter > 0.0) {
            return Err(Error::Config(format!("jitter must be positive, got {jitter}")));
        }
        let uniform = spacing_is_uniform(midpoints);
        let (eigenvalues, eigvecs) = if uniform {
            uniform_spectrum(midpoints)
        } else {
            dense_spectrum(&matrix)
        };
        let dct = uniform.then(|| Dct(DctPlanner::new().plan_dct2(midpoints.len())));
        let dim = matrix.dim();
        let jittered_factor = matrix.scaled_plus_diag(1.0, &vec![jitter; dim]).cholesky()?;
        Ok(Self {
            index_times: midpoints.to_vec(),
            matrix,
            jitter,
            eigenvalues,
            eigvecs,
            jittered_factor,
            dct,
        })
    }

    /// Same operator, but with the spectral pair from the general dense
    /// symmetric eigensolver even when the spacing is uniform.
    pub fn build_dense(midpoints: &[f64], jitter: f64) -> Result<Self> {
        let mut op = Self::with_jitter(midpoints, jitter)?;
        let (vals, vecs) = dense_spectrum(&op.matrix);
        op.eigenvalues = vals;
        op.eigvecs = vecs;
        op.dct = None;
        Ok(op)
    }

    fn intrinsic_matrix(x: &[f64]) -> Result<SymTridiag> {
        if x.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: x.len(),
            });
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonAscending);
        }
        let n = x.len();
        let inv_h: Vec<f64> = x.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
        let diag = (0..n)
            .map(|i| {
                let right = if i + 1 < n { inv_h[i] } else { 0.0 };
                let left = if i > 0 { inv_h[i - 1] } else { 0.0 };
                right + left
            })
            .collect();
        let off = inv_h.iter().map(|v| -v).collect();
        Ok(SymTridiag::new(diag, off))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn index_times(&self) -> &[f64] {
        &self.index_times
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// The unjittered intrinsic precision.
    pub fn matrix(&self) -> &SymTridiag {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Row `k` is the `k`-th eigenvector.
    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.eigvecs[k * n..(k + 1) * n]
    }

    /// `out = Q^T v`.
    pub fn to_spectral(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        if let Some(Dct(plan)) = &self.dct {
            out.copy_from_slice(v);
            plan.process_dct2(out);
            let nf = n as f64;
            out[0] *= (1.0 / nf).sqrt();
            let s = (2.0 / nf).sqrt();
            out[1..].iter_mut().for_each(|o| *o *= s);
            return;
        }
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.eigvecs[k * n..(k + 1) * n];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `out = Q v`.
    pub fn from_spectral(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        if let Some(Dct(plan)) = &self.dct {
            let nf = n as f64;
            out[0] = v[0] * (4.0 / nf).sqrt();
            let s = (2.0 / nf).sqrt();
            for (o, x) in out[1..].iter_mut().zip(&v[1..]) {
                *o = x * s;
            }
            plan.process_dct3(out);
            return;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, &c) in v.iter().enumerate() {
            let row = &self.eigvecs[k * n..(k + 1) * n];
            for (o, &q) in out.iter_mut().zip(row) {
                *o += c * q;
            }
        }
    }

    /// `out = C_in^{-1} f` (unjittered).
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        self.matrix.matvec(f, out);
    }

    pub fn quadratic_form(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(self.quadratic_form_unchecked(f))
    }

    /// `f^T C_in^{-1} f` as a sum of squared increments over spacings.
    #[inline]
    pub fn quadratic_form_unchecked(&self, f: &[f64]) -> f64 {
        f.windows(2)
            .zip(&self.matrix.off)
            .map(|(w, &o)| {
                let d = w[1] - w[0];
                -o * d * d
            })
            .sum()
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Draw `f ~ N(0, (kappa (C_in^{-1} + e I))^{-1})`.
    pub fn sample_prior_f<R: Rng + ?Sized>(&self, kappa: f64, rng: &mut R) -> Vec<f64> {
        let mut f: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        self.jittered_factor.solve_upper(&mut f);
        let s = kappa.sqrt().recip();
        f.iter_mut().for_each(|v| *v *= s);
        f
    }

    pub fn dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let m = &self.matrix;
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                m.diag[i]
            } else if i + 1 == j {
                m.off[i]
            } else if j + 1 == i {
                m.off[j]
            } else {
                0.0
            }
        })
    }
}

/// Closed-form eigenpairs of a path-graph Laplacian scaled by `1/h`
/// (the DCT-II basis).
fn uniform_spectrum(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    let nf = n as f64;
    let pi = std::f64::consts::PI;
    let vals = (0..n)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                let s = (0.5 * pi * k as f64 / nf).sin();
                4.0 * s * s / h
            }
        })
        .collect();
    let mut vecs = vec![0.0; n * n];
    for k in 0..n {
        let norm = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for j in 0..n {
            vecs[k * n + j] = norm * (pi * k as f64 * (j as f64 + 0.5) / nf).cos();
        }
    }
    (vals, vecs)
}

fn dense_spectrum(m: &SymTridiag) -> (Vec<f64>, Vec<f64>) {
    let n = m.dim();
    let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            m.diag[i]
        } else if i + 1 == j {
            m.off[i]
        } else if j + 1 == i {
            m.off[j]
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(dense);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = vec![0.0; n * n];
    for (k, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvalues[src];
        if k == 0 || v.abs() <= 1e-12 * scale {
            // intrinsic null direction
            v = v.max(0.0);
            if k == 0 {
                v = 0.0;
            }
        }
        vals.push(v);
        for i in 0..n {
            vecs[k * n + i] = eig.eigenvectors[(i, src)];
        }
    }
    (vals, vecs)
}

pub fn log_prior_theta(p: &PrecisionOperator, cfg: &PriorConfig, f: &[f64], tau: f64) -> Result<f64> {
    p.check(f)?;
    Ok(log_prior_theta_unchecked(p.dim(), cfg, p.quadratic_form_unchecked(f), tau))
}

/// `((D-1)/2 + alpha - 1) tau - (q/2 + beta) e^tau` given `q = f^T C f`.
#[inline]
pub fn log_prior_theta_unchecked(dim: usize, cfg: &PriorConfig, q: f64, tau: f64) -> f64 {
    (0.5 * dim as f64 + cfg.alpha - 1.0) * tau - (0.5 * q + cfg.beta) * tau.exp()
}

/// Gradient of [`log_prior_theta`]; the last entry is the `tau` component.
pub fn grad_log_prior_theta(
    p: &PrecisionOperator,
    cfg: &PriorConfig,
    f: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    p.check(f)?;
    let n = p.dim();
    let mut g = vec![0.0; n + 1];
    p.apply(f, &mut g[..n]);
    let k = tau.exp();
    g[..n].iter_mut().for_each(|v| *v *= -k);
    let q = p.quadratic_form_unchecked(f);
    g[n] = (0.5 * n as f64 + cfg.alpha - 1.0) - (0.5 * q + cfg.beta) * k;
    Ok(g)
}

/// Shape and rate of the conjugate conditional `kappa | f`.
pub fn kappa_conditional(p: &PrecisionOperator, cfg: &PriorConfig, f: &[f64]) -> (f64, f64) {
    (
        cfg.alpha + 0.5 * p.dim() as f64,
        cfg.beta + 0.5 * p.quadratic_form_unchecked(f),
    )
}

pub fn sample_kappa_conditional<R: Rng + ?Sized>(
    p: &PrecisionOperator,
    cfg: &PriorConfig,
    f: &[f64],
    rng: &mut R,
) -> f64 {
    let (shape, rate) = kappa_conditional(p, cfg, f);
    Gamma::new(shape, 1.0 / rate)
        .expect("positive shape and rate")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three() -> PrecisionOperator {
        PrecisionOperator::build(&[0.5, 1.5, 2.5]).unwrap()
    }

    #[test]
    fn three_point_matrix() {
        let p = three();
        assert_eq!(p.matrix().diag, vec![1.0, 2.0, 1.0]);
        assert_eq!(p.matrix().off, vec![-1.0, -1.0]);
        let mut out = [0.0; 3];
        p.apply(&[1.0, 1.0, 1.0], &mut out);
        assert_eq!(out, [0.0; 3]);
    }

    #[test]
    fn three_point_spectrum() {
        for p in [three(), PrecisionOperator::build_dense(&[0.5, 1.5, 2.5], 1e-6).unwrap()] {
            let ev = p.eigenvalues();
            assert!(ev[0].abs() < 1e-12);
            assert!((ev[1] - 1.0).abs() < 1e-12);
            assert!((ev[2] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_transform_matches_basis() {
        let x: Vec<f64> = (0..37).map(|i| 0.2 + 0.3 * i as f64).collect();
        let p = PrecisionOperator::build(&x).unwrap();
        assert!(p.dct.is_some());
        let v: Vec<f64> = (0..37).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect();
        let mut g = vec![0.0; 37];
        p.to_spectral(&v, &mut g);
        for (k, gk) in g.iter().enumerate() {
            let dot: f64 = p.eigenvector(k).iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((gk - dot).abs() < 1e-12);
        }
        let mut back = vec![0.0; 37];
        p.from_spectral(&g, &mut back);
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_uniform_rows_sum_to_zero() {
        let p = PrecisionOperator::build(&[0.1, 0.4, 1.0, 1.2, 3.0]).unwrap();
        let mut out = [0.0; 5];
        p.apply(&[1.0; 5], &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-12));
        assert!((p.matrix().diag[0] - 1.0 / 0.3).abs() < 1e-12);
        let ev = p.eigenvalues();
        assert_eq!(ev[0], 0.0);
        assert!(ev[1] > 1e-6);
    }

    #[test]
    fn quadratic_forms() {
        let p = three();
        assert_eq!(p.quadratic_form(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(p.quadratic_form(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(p.quadratic_form(&[1.0, 2.0, 4.0]).unwrap(), 5.0);
        assert!(p.quadratic_form(&[1.0]).is_err());
    }

    #[test]
    fn rejects_unsorted() {
        assert!(matches!(
            PrecisionOperator::build(&[0.0, 2.0, 1.0]),
            Err(Error::NonAscending)
        ));
    }

    #[test]
    fn prior_values() {
        let p = three();
        let cfg = PriorConfig::new(1.0, 1.0).unwrap();
        assert_eq!(log_prior_theta(&p, &cfg, &[0.0; 3], 0.0).unwrap(), -1.0);
        assert_eq!(
            grad_log_prior_theta(&p, &cfg, &[0.0; 3], 0.0).unwrap(),
            vec![0.0, 0.0, 0.0, 0.5]
        );
        assert_eq!(log_prior_theta(&p, &cfg, &[1.0; 3], 0.0).unwrap(), -1.0);
        assert!(PriorConfig::new(0.0, 1.0).is_err());
    }

    #[test]
    fn kappa_conditional_shape_rate() {
        let p = three();
        let cfg = PriorConfig::new(1.0, 1.0).unwrap();
        assert_eq!(kappa_conditional(&p, &cfg, &[0.0; 3]), (2.5, 1.0));
        assert_eq!(kappa_conditional(&p, &cfg, &[1.0, 0.0, 0.0]), (2.5, 1.5));
        assert_eq!(
            kappa_conditional(&p, &cfg, &[1.0; 3]),
            kappa_conditional(&p, &cfg, &[0.0; 3])
        );
    }

    #[test]
    fn kappa_draw_mean() {
        let p = three();
        let cfg = PriorConfig::new(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_kappa_conditional(&p, &cfg, &[1.0, 0.0, 0.0], &mut rng))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 2.5 / 1.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn prior_draw_scales_with_kappa() {
        let p = three();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let f1 = p.sample_prior_f(1.0, &mut a);
        let f4 = p.sample_prior_f(4.0, &mut b);
        for (x, y) in f1.iter().zip(&f4) {
            assert!((x - 2.0 * y).abs() < 1e-9 * x.abs().max(1.0));
        }
    }
}
