//! Effective sample size, time-normalized efficiency and posterior
//! trajectory summaries.

use std::fmt::Write as _;
use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::samplers::Trace;

pub const MIN_ESS_LENGTH: usize = 10;
pub const MIN_REPORT_LENGTH: usize = 100;

/// Sample autocorrelations at lags `0..n`, normalized so lag 0 is 1.
pub fn autocorrelation(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    buf[..n].iter().map(|c| c.re / c0).collect()
}

/// Effective sample size by Geyer's initial monotone sequence over pair
/// sums of autocorrelations, with lags capped at half the series length.
pub fn ess(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < MIN_ESS_LENGTH {
        return Err(Error::TraceTooShort {
            got: n,
            need: MIN_ESS_LENGTH,
        });
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::DegenerateSeries);
    }
    let rho = autocorrelation(x);
    let max_lag = n / 2;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 <= max_lag {
        let pair = rho[2 * m] + rho[2 * m + 1];
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    let tau = 2.0 * sum - 1.0;
    let ess = n as f64 / tau;
    Ok(if ess.is_finite() && ess > 0.0 { ess.min(n as f64) } else { n as f64 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub method: String,
    pub acceptance: f64,
    pub seconds_per_iteration: f64,
    /// Post-burn-in samples used for ESS.
    pub samples: usize,
    /// CPU seconds spent producing the post-burn-in samples.
    pub seconds: f64,
    /// ESS of each `f` coordinate; `None` when the series is degenerate.
    pub ess_f: Vec<Option<f64>>,
    pub ess_tau: Option<f64>,
    pub min_ess_f: f64,
    pub min_ess_f_per_s: f64,
    pub ess_tau_per_s: f64,
}

impl EfficiencyReport {
    /// `(minESS(f)/s, ESS(tau)/s)` relative to `baseline`.
    pub fn speedup(&self, baseline: &EfficiencyReport) -> (f64, f64) {
        (
            self.min_ess_f_per_s / baseline.min_ess_f_per_s,
            self.ess_tau_per_s / baseline.ess_tau_per_s,
        )
    }
}

pub fn efficiency_report(trace: &Trace, exec: Execution) -> Result<EfficiencyReport> {
    let samples = trace.post_burnin().count();
    if samples < MIN_REPORT_LENGTH {
        return Err(Error::TraceTooShort {
            got: samples,
            need: MIN_REPORT_LENGTH,
        });
    }
    let dim = trace.dim();
    let per_coord = map_indexed(dim, exec, |j| match ess(&trace.column(j)) {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateSeries) => Ok(None),
        Err(e) => Err(e),
    });
    let mut per_coord = per_coord.into_iter().collect::<Result<Vec<_>>>()?;
    let ess_tau = per_coord.pop().flatten();
    let min_ess_f = per_coord
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let spi = trace.seconds_per_iteration();
    let seconds = spi * trace.post_burnin_iterations() as f64;
    let rate = |e: f64| if e.is_finite() { e / seconds } else { f64::NAN };
    Ok(EfficiencyReport {
        method: trace.sampler.clone(),
        acceptance: trace.acceptance_rate(),
        seconds_per_iteration: spi,
        samples,
        seconds,
        min_ess_f_per_s: rate(min_ess_f),
        ess_tau_per_s: rate(ess_tau.unwrap_or(f64::NAN)),
        ess_f: per_coord,
        ess_tau,
        min_ess_f,
    })
}

pub const EFFICIENCY_HEADER: [&str; 7] = [
    "method",
    "AP",
    "s_iter",
    "minESS_f_per_s",
    "spdup_f",
    "ESS_tau_per_s",
    "spdup_tau",
];

fn efficiency_rows(reports: &[EfficiencyReport]) -> Vec<[String; 7]> {
    let Some(base) = reports.first() else {
        return Vec::new();
    };
    reports
        .iter()
        .map(|r| {
            let (sf, st) = r.speedup(base);
            [
                r.method.clone(),
                format!("{:.2}", r.acceptance),
                format!("{:.3e}", r.seconds_per_iteration),
                format!("{:.4}", r.min_ess_f_per_s),
                format!("{sf:.2}"),
                format!("{:.4}", r.ess_tau_per_s),
                format!("{st:.2}"),
            ]
        })
        .collect()
}

/// CSV with one row per report; speedups are relative to the first.
pub fn write_efficiency_csv<W: Write>(reports: &[EfficiencyReport], mut w: W) -> Result<()> {
    writeln!(w, "{}", EFFICIENCY_HEADER.join(","))?;
    for row in efficiency_rows(reports) {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Column-aligned text table; speedups are relative to the first report.
pub fn format_efficiency_table(reports: &[EfficiencyReport]) -> String {
    let rows = efficiency_rows(reports);
    let mut widths = EFFICIENCY_HEADER.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&EFFICIENCY_HEADER.map(String::from));
    for row in &rows {
        line(row);
    }
    out
}

/// Nearest-rank quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub times: Vec<f64>,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub truth: Option<Vec<f64>>,
}

impl TrajectorySummary {
    /// Fraction of times where the truth lies inside the band.
    pub fn coverage(&self) -> Option<f64> {
        let truth = self.truth.as_ref()?;
        let hits = truth
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(t, (lo, hi))| *lo <= *t && *t <= *hi)
            .count();
        Some(hits as f64 / truth.len() as f64)
    }

    /// CSV `t,med,lo,hi[,truth]`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.truth {
            Some(_) => writeln!(w, "t,med,lo,hi,truth")?,
            None => writeln!(w, "t,med,lo,hi")?,
        }
        for i in 0..self.times.len() {
            write!(w, "{},{},{},{}", self.times[i], self.median[i], self.lower[i], self.upper[i])?;
            if let Some(t) = &self.truth {
                write!(w, ",{}", t[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Pointwise median and 95% band of `N_e = exp(f_d)` at `times`.
pub fn trajectory_summary(
    trace: &Trace,
    times: &[f64],
    truth: Option<&dyn Fn(f64) -> f64>,
) -> Result<TrajectorySummary> {
    let rows: Vec<_> = trace.post_burnin().collect();
    if rows.is_empty() {
        return Err(Error::TraceTooShort { got: 0, need: 1 });
    }
    if trace.dim() != times.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: times.len() + 1,
            got: trace.dim(),
        });
    }
    let d = times.len();
    let (mut median, mut lower, mut upper) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut col = vec![0.0; rows.len()];
    for j in 0..d {
        for (c, r) in col.iter_mut().zip(&rows) {
            *c = r.theta[j];
        }
        col.sort_by(f64::total_cmp);
        median[j] = quantile_sorted(&col, 0.5).exp();
        lower[j] = quantile_sorted(&col, 0.025).exp();
        upper[j] = quantile_sorted(&col, 0.975).exp();
    }
    Ok(TrajectorySummary {
        times: times.to_vec(),
        median,
        lower,
        upper,
        truth: truth.map(|f| times.iter().map(|&t| f(t)).collect()),
    })
}
