//! Genealogy simulation under time-varying effective population size.
//!
//! Waiting times are drawn by time-rescaling: with `l` lineages the next
//! coalescence is the time at which `int binom(l,2)/N_e(u) du` reaches an
//! `Exp(1)` draw. The integral is accumulated by the trapezoid rule and the
//! crossing point located by bisection.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::genealogy::{Genealogy, SamplingEvent, ValidatedGenealogy};
use crate::par::{map_indexed, stream_rng, Execution};

/// Integration steps allowed per waiting time.
pub const MAX_STEPS: usize = 1_000_000;

/// Fraction of the local mean waiting time used as the step when no fixed
/// resolution is given.
pub const AUTO_STEP_FRACTION: f64 = 1e-3;

pub type NeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Trajectory {
    /// Period-12 logistic cycle between 10 and 100.
    Logistic,
    /// `1000 e^{-t}`.
    ExpGrowth,
    /// `1000 e^{-|t-2|}`.
    BoomBust,
    /// `values[i]` on `[change_times[i-1], change_times[i])`; the last value
    /// extends to infinity.
    PiecewiseConstant {
        change_times: Vec<f64>,
        values: Vec<f64>,
    },
    Custom(NeFn),
}

impl Trajectory {
    pub fn constant(ne: f64) -> Self {
        Trajectory::PiecewiseConstant {
            change_times: Vec::new(),
            values: vec![ne],
        }
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Trajectory::Custom(Arc::new(f))
    }

    pub fn piecewise_constant(change_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != change_times.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: change_times.len() + 1,
                got: values.len(),
            });
        }
        if change_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonAscending);
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("population sizes must be positive".into()));
        }
        Ok(Trajectory::PiecewiseConstant {
            change_times,
            values,
        })
    }

    /// `N_e(t)` for `t >= 0`.
    pub fn evaluate(&self, t: f64) -> f64 {
        match self {
            Trajectory::Logistic => {
                let r = t.rem_euclid(12.0);
                if r <= 6.0 {
                    10.0 + 90.0 / (1.0 + (2.0 * (3.0 - r)).exp())
                } else {
                    10.0 + 90.0 / (1.0 + (2.0 * (r - 9.0)).exp())
                }
            }
            Trajectory::ExpGrowth => 1000.0 * (-t).exp(),
            Trajectory::BoomBust => {
                if t <= 2.0 {
                    1000.0 * (t - 2.0).exp()
                } else {
                    1000.0 * (2.0 - t).exp()
                }
            }
            Trajectory::PiecewiseConstant {
                change_times,
                values,
            } => values[change_times.partition_point(|&c| c <= t)],
            Trajectory::Custom(f) => f(t),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Trajectory::Logistic => "logistic",
            Trajectory::ExpGrowth => "expgrowth",
            Trajectory::BoomBust => "boombust",
            Trajectory::PiecewiseConstant { .. } => "piecewise",
            Trajectory::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trajectory::PiecewiseConstant {
                change_times,
                values,
            } => f
                .debug_struct("PiecewiseConstant")
                .field("change_times", change_times)
                .field("values", values)
                .finish(),
            other => f.write_str(other.name()),
        }
    }
}

/// Parses `logistic`, `expgrowth`, `boombust`, `constant:N` and
/// `piecewise:t1,t2,...:N0,N1,...`.
impl FromStr for Trajectory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let parts: Vec<&str> = lower.split(':').collect();
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{v}' in trajectory '{s}'")))
        };
        let list = |v: &str| -> Result<Vec<f64>> {
            v.split(',').filter(|x| !x.trim().is_empty()).map(num).collect()
        };
        match parts.as_slice() {
            ["logistic"] => Ok(Trajectory::Logistic),
            ["expgrowth"] | ["exp"] => Ok(Trajectory::ExpGrowth),
            ["boombust"] => Ok(Trajectory::BoomBust),
            ["constant", v] => Trajectory::piecewise_constant(Vec::new(), vec![num(v)?]),
            ["piecewise", t, v] => Trajectory::piecewise_constant(list(t)?, list(v)?),
            _ => Err(Error::Config(format!("unknown trajectory '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDesign {
    events: Vec<SamplingEvent>,
}

impl SamplingDesign {
    pub fn new(events: Vec<SamplingEvent>) -> Result<Self> {
        match events.first() {
            None => return Err(Error::Config("empty sampling design".into())),
            Some(e) if e.time != 0.0 => {
                return Err(Error::Config("first sampling time must be 0".into()))
            }
            _ => {}
        }
        if events.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::NonAscendingTimes("sampling".into()));
        }
        if events.iter().any(|e| e.count == 0 || !e.time.is_finite()) {
            return Err(Error::Config("sampling counts must be positive".into()));
        }
        let design = Self { events };
        if design.total() < 2 {
            return Err(Error::Config("need at least two samples".into()));
        }
        Ok(design)
    }

    pub fn isochronous(n: usize) -> Result<Self> {
        Self::new(vec![SamplingEvent::new(0.0, n)])
    }

    pub fn events(&self) -> &[SamplingEvent] {
        &self.events
    }

    pub fn total(&self) -> usize {
        self.events.iter().map(|e| e.count).sum()
    }
}

/// Parses `s1:n1,s2:n2,...`.
impl FromStr for SamplingDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let events = s
            .split(',')
            .filter(|x| !x.trim().is_empty())
            .map(|tok| {
                let (t, n) = tok
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("bad sampling entry '{tok}'")))?;
                let time = t
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad sampling time '{t}'")))?;
                let count = n
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad sampling count '{n}'")))?;
                Ok(SamplingEvent::new(time, count))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(events)
    }
}

/// Integration step for the cumulative hazard.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Resolution {
    /// A fixed step in time units.
    Fixed(f64),
    /// [`AUTO_STEP_FRACTION`] of the mean waiting time at the start of each search.
    #[default]
    Auto,
}

/// Advance from `t0` with `pairs` coalescing pairs until the accumulated
/// hazard reaches `*budget` or `t_limit` is hit. Returns the crossing time,
/// or `None` after subtracting the hazard spent on `[t0, t_limit]`.
fn waiting_time(
    traj: &Trajectory,
    pairs: f64,
    t0: f64,
    t_limit: f64,
    budget: &mut f64,
    res: Resolution,
) -> Result<Option<f64>> {
    let rate = |t: f64| pairs / traj.evaluate(t);
    let h = match res {
        Resolution::Fixed(h) => h,
        Resolution::Auto => AUTO_STEP_FRACTION / rate(t0),
    };
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Config(format!("invalid simulation step {h}")));
    }
    let mut t = t0;
    let mut r0 = rate(t0);
    let mut acc = 0.0;
    for _ in 0..MAX_STEPS {
        let t1 = (t + h).min(t_limit);
        let r1 = rate(t1);
        let inc = 0.5 * (t1 - t) * (r0 + r1);
        if acc + inc >= *budget {
            let (mut lo, mut hi) = (t, t1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if acc + 0.5 * (mid - t) * (r0 + rate(mid)) >= *budget {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        acc += inc;
        t = t1;
        r0 = r1;
        if t >= t_limit {
            *budget -= acc;
            return Ok(None);
        }
    }
    Err(Error::NonterminatingCoalescent)
}

pub fn simulate_genealogy<R: Rng + ?Sized>(
    traj: &Trajectory,
    design: &SamplingDesign,
    rng: &mut R,
    res: Resolution,
) -> Result<ValidatedGenealogy> {
    let events = design.events();
    let total = design.total();
    let mut coal = Vec::with_capacity(total - 1);
    let mut lineages = events[0].count;
    let mut next = 1;
    let mut t = 0.0;
    while coal.len() + 1 < total {
        let t_limit = events.get(next).map_or(f64::INFINITY, |e| e.time);
        if lineages < 2 {
            t = t_limit;
            lineages += events[next].count;
            next += 1;
            continue;
        }
        let mut budget: f64 = rng.sample(Exp1);
        loop {
            let t_limit = events.get(next).map_or(f64::INFINITY, |e| e.time);
            let pairs = (lineages * (lineages - 1) / 2) as f64;
            match waiting_time(traj, pairs, t, t_limit, &mut budget, res)? {
                Some(tc) => {
                    coal.push(tc);
                    lineages -= 1;
                    t = tc;
                    break;
                }
                None => {
                    t = t_limit;
                    lineages += events[next].count;
                    next += 1;
                }
            }
        }
    }
    Genealogy::new(coal, events.to_vec()).validate()
}

/// `count` independent genealogies; replicate `i` uses stream `i` of `seed`.
pub fn simulate_replicates(
    traj: &Trajectory,
    design: &SamplingDesign,
    res: Resolution,
    count: usize,
    seed: u64,
    exec: Execution,
) -> Vec<Result<ValidatedGenealogy>> {
    map_indexed(count, exec, |i| {
        let mut rng = stream_rng(seed, i as u64);
        simulate_genealogy(traj, design, &mut rng, res)
    })
}

/// Writes `t,Ne` at `points` equally spaced times on `[0, t_max]`.
pub fn write_truth_csv<W: Write>(traj: &Trajectory, t_max: f64, points: usize, mut w: W) -> Result<()> {
    writeln!(w, "t,Ne")?;
    let points = points.max(2);
    for i in 0..points {
        let t = t_max * i as f64 / (points - 1) as f64;
        writeln!(w, "{},{}", t, traj.evaluate(t))?;
    }
    Ok(())
}
