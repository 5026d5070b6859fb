//! Posterior means on the logistic simulation (n=50, D=100) agree across
//! kernels within three combined Monte-Carlo standard errors.

mod common;

use common::*;
use phylocoal::model::LatentGaussianModel;
use phylocoal::par::{map_indexed, Execution};
use phylocoal::samplers::{build_kernel, run_chain, stream_rng, ChainOptions, SamplerKind, TickClock, Trace};
use phylocoal::simulate::Trajectory;

fn runs() -> (usize, Vec<Trace>) {
    let g = simulated(&Trajectory::Logistic, 50, 1);
    let m = model(&g, 100);
    let plan = [
        (SamplerKind::SplitHmc, 15_000),
        (SamplerKind::Hmc, 60_000),
        (SamplerKind::Ess2, 600_000),
    ];
    let traces = map_indexed(plan.len(), Execution::Parallel, |i| {
        let (kind, iters) = plan[i];
        let mut k = build_kernel(kind, &m, &kind.default_config()).unwrap();
        let opts = ChainOptions {
            thin: if iters > 100_000 { 5 } else { 1 },
            ..ChainOptions::new(iters, 5000)
        };
        run_chain(&mut *k, cold_start(&m), &opts, &mut stream_rng(51, i as u64), &mut TickClock::new(1.0)).unwrap()
    });
    (m.dim(), traces)
}

fn worst_z(a: &Trace, b: &Trace, dim: usize) -> (f64, usize) {
    (0..dim)
        .map(|j| {
            let (x, y) = (a.column(j), b.column(j));
            let z = (mean(&x) - mean(&y)).abs() / (mcse(&x).powi(2) + mcse(&y).powi(2)).sqrt();
            (z, j)
        })
        .fold((0.0, 0), |acc, v| if v.0 > acc.0 { v } else { acc })
}

#[test]
fn split_hmc_and_ess2_agree_with_long_hmc() {
    let (dim, t) = runs();
    let (z, j) = worst_z(&t[0], &t[1], dim);
    assert!(z <= 3.0, "splithmc vs hmc: {z:.2} SE at f_{}", j + 1);
    let (z, j) = worst_z(&t[2], &t[0], dim);
    assert!(z <= 3.0, "ess2 vs splithmc: {z:.2} SE at f_{}", j + 1);
}
