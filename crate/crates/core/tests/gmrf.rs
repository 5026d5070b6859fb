mod common;

use common::*;
use nalgebra::DMatrix;
use phylocoal::gmrf::{kappa_conditional, sample_kappa_conditional, PrecisionOperator, PriorConfig};
use phylocoal::par::stream_rng;
use statrs::distribution::{ContinuousCDF, Gamma};

fn unit_three(jitter: f64) -> PrecisionOperator {
    PrecisionOperator::with_jitter(&[0.5, 1.5, 2.5], jitter).unwrap()
}

#[test]
fn prior_draw_covariance_matches_inverse_precision() {
    let p = unit_three(0.1);
    let mut rng = stream_rng(21, 0);
    let draws: Vec<Vec<f64>> = (0..100_000).map(|_| p.sample_prior_f(1.0, &mut rng)).collect();
    let cov = (p.dense() + DMatrix::identity(3, 3) * 0.1).try_inverse().unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let prod: Vec<f64> = draws.iter().map(|d| d[i] * d[j]).collect();
            let se = (variance(&prod) / prod.len() as f64).sqrt();
            assert!((mean(&prod) - cov[(i, j)]).abs() < 3.0 * se, "entry ({i},{j})");
        }
    }
}

#[test]
fn constant_direction_variance_scales_inversely_with_jitter() {
    let proj = |jitter: f64| {
        let p = unit_three(jitter);
        let mut rng = stream_rng(22, 0);
        let s: Vec<f64> = (0..50_000)
            .map(|_| p.sample_prior_f(1.0, &mut rng).iter().sum::<f64>() / 3f64.sqrt())
            .collect();
        variance(&s)
    };
    let ratio = proj(0.01) / proj(0.04);
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn kappa_conditional_matches_gamma_law() {
    let p = unit_three(1e-6);
    let cfg = PriorConfig::new(1.0, 1.0).unwrap();
    assert_eq!(kappa_conditional(&p, &cfg, &[1.0, 0.0, 0.0]), (2.5, 1.5));
    assert_eq!(kappa_conditional(&p, &cfg, &[1.0, 1.0, 1.0]), kappa_conditional(&p, &cfg, &[0.0; 3]));

    let law = Gamma::new(2.5, 1.5).unwrap();
    let mut rng = stream_rng(23, 0);
    let mut draws: Vec<f64> = (0..20_000)
        .map(|_| sample_kappa_conditional(&p, &cfg, &[1.0, 0.0, 0.0], &mut rng))
        .collect();
    let d = ks_statistic(&mut draws, |x| law.cdf(x));
    assert!(d < ks_critical_01(draws.len()), "KS {d}");
}
