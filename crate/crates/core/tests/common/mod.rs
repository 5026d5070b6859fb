#![allow(dead_code)]

use phylocoal::diagnostics::ess;
use phylocoal::genealogy::ValidatedGenealogy;
use phylocoal::gmrf::{PriorConfig, DEFAULT_JITTER};
use phylocoal::model::{CoalescentModel, DifferentiableTarget};
use phylocoal::par::stream_rng;
use phylocoal::simulate::{simulate_genealogy, Resolution, SamplingDesign, Trajectory};

pub fn simulated(traj: &Trajectory, n: usize, seed: u64) -> ValidatedGenealogy {
    let design = SamplingDesign::isochronous(n).unwrap();
    simulate_genealogy(traj, &design, &mut stream_rng(seed, 0), Resolution::Auto).unwrap()
}

pub fn model(g: &ValidatedGenealogy, num_points: usize) -> CoalescentModel {
    CoalescentModel::new(g, num_points, PriorConfig::default(), DEFAULT_JITTER).unwrap()
}

/// Flat `f` at the constant-size MLE with `tau = 0`.
pub fn cold_start(m: &CoalescentModel) -> Vec<f64> {
    let mut theta = vec![m.constant_mle(); m.grid().num_cells()];
    theta.push(0.0);
    theta
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Monte-Carlo standard error of the mean using the ESS.
pub fn mcse(x: &[f64]) -> f64 {
    let e = ess(x).unwrap_or(x.len() as f64);
    (variance(x) / e).sqrt()
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Central finite-difference gradient.
pub fn fd_grad<T: DifferentiableTarget + ?Sized>(t: &T, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let a = t.log_density(&y);
            y[i] = x[i] - h;
            let b = t.log_density(&y);
            y[i] = x[i];
            (a - b) / (2.0 * h)
        })
        .collect()
}

/// Standard normal target in `dim` dimensions.
pub struct StdNormal(pub usize);

impl DifferentiableTarget for StdNormal {
    fn dim(&self) -> usize {
        self.0
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn log_density_and_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = -xi;
        }
        self.log_density(x)
    }
}
