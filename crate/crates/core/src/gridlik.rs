//! Grid discretization of the coalescent likelihood.
//!
//! Superimposing a regular grid on `(0, t_1]` and holding `N_e = exp(f_d)`
//! constant on each cell turns the coalescent density into a product of
//! Poisson terms, one per piece of the genealogy's lineage-count intervals
//! that falls in a cell.

use std::io::Write;

use crate::error::{Error, Result};
use crate::genealogy::{EndEvent, ValidatedGenealogy};

/// Regular grid `0 = x_1 < ... < x_D = t_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    midpoints: Vec<f64>,
    width: f64,
}

impl Grid {
    pub fn new(g: &ValidatedGenealogy, num_points: usize) -> Result<Self> {
        Self::uniform(g.root_time(), num_points)
    }

    pub fn uniform(span: f64, num_points: usize) -> Result<Self> {
        if num_points < 3 {
            return Err(Error::GridTooSmall(num_points));
        }
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::DegenerateSpan(span));
        }
        let width = span / (num_points - 1) as f64;
        let mut points: Vec<f64> = (0..num_points).map(|i| i as f64 * width).collect();
        points[num_points - 1] = span;
        let midpoints = points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            points,
            midpoints,
            width,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// `D`, the number of grid points.
    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// `D - 1`, the number of cells (and the length of `f`).
    pub fn num_cells(&self) -> usize {
        self.midpoints.len()
    }

    pub fn span(&self) -> f64 {
        *self.points.last().unwrap()
    }
}

/// One intersection of a lineage-count interval with a grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatRecord {
    /// Zero-based cell index.
    pub cell: usize,
    /// 1 when the piece ends with a coalescence.
    pub y: u8,
    pub coal_factor: u64,
    pub width: f64,
}

/// Poisson-form sufficient statistics of a genealogy on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    pub records: Vec<StatRecord>,
    /// `y_d`: coalescences per cell.
    pub per_cell_y: Vec<f64>,
    /// `w_d = sum C |I*|` per cell.
    pub per_cell_w: Vec<f64>,
    log_constant: f64,
}

pub fn sufficient_stats(g: &ValidatedGenealogy, grid: &Grid) -> SuffStats {
    let x = grid.points();
    let cells = grid.num_cells();
    let mut records = Vec::with_capacity(cells + g.n() + g.m());
    for rec in g.interval_decomposition() {
        let (a, b) = (rec.start, rec.end);
        let mut d = x.partition_point(|&p| p <= a).saturating_sub(1).min(cells - 1);
        while d < cells && x[d] < b {
            let lo = a.max(x[d]);
            let hi = b.min(x[d + 1]);
            if hi > lo {
                let closes = hi == b;
                records.push(StatRecord {
                    cell: d,
                    y: u8::from(closes && rec.end_event == EndEvent::Coalescent),
                    coal_factor: rec.coal_factor,
                    width: hi - lo,
                });
            }
            d += 1;
        }
    }
    let mut per_cell_y = vec![0.0; cells];
    let mut per_cell_w = vec![0.0; cells];
    for r in &records {
        per_cell_y[r.cell] += r.y as f64;
        per_cell_w[r.cell] += r.coal_factor as f64 * r.width;
    }
    SuffStats {
        records,
        per_cell_y,
        per_cell_w,
        log_constant: g.log_coalescent_constant(),
    }
}

impl SuffStats {
    pub fn num_cells(&self) -> usize {
        self.per_cell_y.len()
    }

    pub fn num_coalescences(&self) -> usize {
        self.records.iter().map(|r| r.y as usize).sum()
    }

    /// `sum log C` over coalescences, the f-independent term.
    pub fn log_constant(&self) -> f64 {
        self.log_constant
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.num_cells() {
            return Err(Error::DimensionMismatch {
                expected: self.num_cells(),
                got: f.len(),
            });
        }
        Ok(())
    }

    pub fn log_likelihood(&self, f: &[f64], include_constant: bool) -> Result<f64> {
        self.check(f)?;
        let l = self.log_likelihood_unchecked(f);
        Ok(if include_constant {
            l + self.log_constant
        } else {
            l
        })
    }

    /// `-sum_d (y_d f_d + w_d exp(-f_d))`; `f` must have one entry per cell.
    #[inline]
    pub fn log_likelihood_unchecked(&self, f: &[f64]) -> f64 {
        -f.iter()
            .zip(&self.per_cell_y)
            .zip(&self.per_cell_w)
            .map(|((&fd, &y), &w)| y * fd + w * (-fd).exp())
            .sum::<f64>()
    }

    pub fn score(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        let mut out = vec![0.0; f.len()];
        self.score_into(f, &mut out);
        Ok(out)
    }

    /// Writes `s_d = -y_d + w_d exp(-f_d)` and returns the log-likelihood.
    #[inline]
    pub fn score_into(&self, f: &[f64], out: &mut [f64]) -> f64 {
        let mut l = 0.0;
        for (((o, &fd), &y), &w) in out
            .iter_mut()
            .zip(f)
            .zip(&self.per_cell_y)
            .zip(&self.per_cell_w)
        {
            let e = w * (-fd).exp();
            *o = e - y;
            l -= y * fd + e;
        }
        l
    }

    /// Per-record debugging dump: `cell,y,coal_factor,width` (1-based cells).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cell,y,coal_factor,width")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{}", r.cell + 1, r.y, r.coal_factor, r.width)?;
        }
        Ok(())
    }
}

/// Exact coalescent log density for a piecewise-constant `N_e`.
///
/// `breakpoints` has one more entry than `values`; `values[j]` holds on
/// `(breakpoints[j], breakpoints[j + 1]]`.
pub fn exact_log_likelihood_pc(
    g: &ValidatedGenealogy,
    breakpoints: &[f64],
    values: &[f64],
) -> Result<f64> {
    let t1 = g.root_time();
    if breakpoints.len() != values.len() + 1 || values.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: values.len() + 1,
            got: breakpoints.len(),
        });
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonAscending);
    }
    if breakpoints[0] > 0.0 || *breakpoints.last().unwrap() < t1 {
        return Err(Error::Coverage { t1 });
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Config("population sizes must be positive".into()));
    }
    // segment holding t in the half-open (b_j, b_{j+1}] sense
    let segment = |t: f64| {
        breakpoints
            .partition_point(|&b| b < t)
            .saturating_sub(1)
            .min(values.len() - 1)
    };

    let mut total = g.log_coalescent_constant();
    for rec in g.interval_decomposition() {
        if rec.end_event == EndEvent::Coalescent {
            total -= values[segment(rec.end)].ln();
        }
        if rec.coal_factor == 0 {
            continue;
        }
        let mut integral = 0.0;
        let mut j = breakpoints[1..].partition_point(|&b| b <= rec.start);
        while j < values.len() && breakpoints[j] < rec.end {
            let lo = rec.start.max(breakpoints[j]);
            let hi = rec.end.min(breakpoints[j + 1]);
            if hi > lo {
                integral += (hi - lo) / values[j];
            }
            j += 1;
        }
        total -= rec.coal_factor as f64 * integral;
    }
    Ok(total)
}

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

/// `int_a^b g(t) dt` by composite 5-point Gauss-Legendre with panels no
/// wider than `max_panel`.
pub fn integrate<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, max_panel: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            s += w * g(mid + 0.5 * h * x);
        }
    }
    0.5 * h * s
}

/// Coalescent log density for an arbitrary smooth `N_e`, with the exposure
/// integrals evaluated by quadrature.
pub fn exact_log_likelihood_smooth<F: Fn(f64) -> f64>(
    g: &ValidatedGenealogy,
    ne: F,
    max_panel: f64,
) -> f64 {
    let mut total = g.log_coalescent_constant();
    for rec in g.interval_decomposition() {
        if rec.end_event == EndEvent::Coalescent {
            total -= ne(rec.end).ln();
        }
        if rec.coal_factor > 0 {
            total -=
                rec.coal_factor as f64 * integrate(|t| 1.0 / ne(t), rec.start, rec.end, max_panel);
        }
    }
    total
}
