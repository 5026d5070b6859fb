//! Timed genealogies reduced to coalescent times and sampling events.
//!
//! Time runs backward from the most recent sample, which sits at time 0.
//! Only event times and per-time sample counts are kept; the coalescent
//! density does not depend on topology.

mod format;
mod newick;

pub use format::{read_genealogy, write_genealogy, FORMAT_HEADER};
pub use newick::{parse_newick, parse_newick_with_tolerance, to_newick, DEFAULT_TIE_TOLERANCE};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingEvent {
    pub time: f64,
    pub count: usize,
}

impl SamplingEvent {
    pub fn new(time: f64, count: usize) -> Self {
        Self { time, count }
    }
}

/// Raw, unvalidated genealogy.
#[derive(Debug, Clone, PartialEq)]
pub struct Genealogy {
    /// Ascending coalescent times; the last entry is the root.
    pub coalescent_times: Vec<f64>,
    /// Ascending sampling events; the first must sit at time 0.
    pub sampling: Vec<SamplingEvent>,
}

impl Genealogy {
    pub fn new(coalescent_times: Vec<f64>, sampling: Vec<SamplingEvent>) -> Self {
        Self {
            coalescent_times,
            sampling,
        }
    }

    /// All `n` sequences sampled at time 0.
    pub fn isochronous(coalescent_times: Vec<f64>) -> Self {
        let n = coalescent_times.len() + 1;
        Self::new(coalescent_times, vec![SamplingEvent::new(0.0, n)])
    }

    pub fn validate(self) -> Result<ValidatedGenealogy> {
        ValidatedGenealogy::new(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndEvent {
    Coalescent,
    Sampling,
}

/// Half-open interval `(start, end]` with a constant number of lineages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalRecord {
    pub start: f64,
    pub end: f64,
    pub lineages: usize,
    /// `lineages choose 2`.
    pub coal_factor: u64,
    pub end_event: EndEvent,
}

impl IntervalRecord {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

pub(crate) fn choose2(l: usize) -> u64 {
    let l = l as u64;
    l * l.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Sample(usize),
    Coalesce,
}

/// Merged event stream. Samples precede a coalescence at the same instant.
fn events(g: &Genealogy) -> Vec<(f64, Event)> {
    let mut out = Vec::with_capacity(g.sampling.len() + g.coalescent_times.len());
    let (mut i, mut j) = (0, 0);
    while i < g.sampling.len() || j < g.coalescent_times.len() {
        let take_sample = match (g.sampling.get(i), g.coalescent_times.get(j)) {
            (Some(s), Some(&t)) => s.time <= t,
            (Some(_), None) => true,
            _ => false,
        };
        if take_sample {
            out.push((g.sampling[i].time, Event::Sample(g.sampling[i].count)));
            i += 1;
        } else {
            out.push((g.coalescent_times[j], Event::Coalesce));
            j += 1;
        }
    }
    out
}

/// A genealogy whose lineage bookkeeping has been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedGenealogy {
    inner: Genealogy,
    /// Lineages present at each coalescence, in ascending time order.
    coalescing_lineages: Vec<usize>,
}

impl ValidatedGenealogy {
    pub fn new(g: Genealogy) -> Result<Self> {
        if g.sampling.is_empty() {
            return Err(Error::InvalidGenealogy("no sampling events".into()));
        }
        if g.coalescent_times.is_empty() {
            return Err(Error::InvalidGenealogy("need at least two sequences".into()));
        }
        if g.sampling[0].time != 0.0 {
            return Err(Error::InvalidGenealogy(format!(
                "most recent sampling time must be 0, got {}",
                g.sampling[0].time
            )));
        }
        for s in &g.sampling {
            if s.count == 0 {
                return Err(Error::InvalidGenealogy(format!(
                    "sampling event at {} has zero sequences",
                    s.time
                )));
            }
            if !s.time.is_finite() {
                return Err(Error::InvalidGenealogy("non-finite sampling time".into()));
            }
        }
        for w in g.sampling.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::NonAscendingTimes(format!(
                    "sampling times {} and {}",
                    w[0].time, w[1].time
                )));
            }
        }
        if !(g.coalescent_times[0] > 0.0) || !g.coalescent_times.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidGenealogy(
                "coalescent times must be finite and positive".into(),
            ));
        }
        for w in g.coalescent_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::NonAscendingTimes(format!(
                    "coalescent times {} and {}",
                    w[0], w[1]
                )));
            }
        }
        let samples: usize = g.sampling.iter().map(|s| s.count).sum();
        if samples != g.coalescent_times.len() + 1 {
            return Err(Error::CountMismatch {
                samples,
                coalescences: g.coalescent_times.len(),
            });
        }

        let mut lineages = 0usize;
        let mut coalescing_lineages = Vec::with_capacity(g.coalescent_times.len());
        for (time, ev) in events(&g) {
            match ev {
                Event::Sample(c) => lineages += c,
                Event::Coalesce => {
                    if lineages < 2 {
                        return Err(Error::LineageDeficit { time, lineages });
                    }
                    coalescing_lineages.push(lineages);
                    lineages -= 1;
                }
            }
        }
        debug_assert_eq!(lineages, 1);
        Ok(Self {
            inner: g,
            coalescing_lineages,
        })
    }

    pub fn genealogy(&self) -> &Genealogy {
        &self.inner
    }

    pub fn into_inner(self) -> Genealogy {
        self.inner
    }

    pub fn coalescent_times(&self) -> &[f64] {
        &self.inner.coalescent_times
    }

    pub fn sampling(&self) -> &[SamplingEvent] {
        &self.inner.sampling
    }

    /// Number of sampled sequences.
    pub fn n(&self) -> usize {
        self.inner.coalescent_times.len() + 1
    }

    /// Number of distinct sampling times.
    pub fn m(&self) -> usize {
        self.inner.sampling.len()
    }

    pub fn is_isochronous(&self) -> bool {
        self.m() == 1
    }

    /// Time of the most recent common ancestor.
    pub fn root_time(&self) -> f64 {
        *self.inner.coalescent_times.last().unwrap()
    }

    /// Lineage count at each coalescence (ascending time).
    pub fn coalescing_lineages(&self) -> &[usize] {
        &self.coalescing_lineages
    }

    /// `sum_k log binom(l_k, 2)` over coalescences: the f-independent part
    /// of the coalescent log density.
    pub fn log_coalescent_constant(&self) -> f64 {
        self.coalescing_lineages
            .iter()
            .map(|&l| (choose2(l) as f64).ln())
            .sum()
    }

    /// Split `(0, t_1]` into maximal intervals of constant lineage count.
    pub fn interval_decomposition(&self) -> Vec<IntervalRecord> {
        let evs = events(&self.inner);
        let mut out = Vec::with_capacity(evs.len());
        let mut lineages = 0usize;
        let mut prev = 0.0;
        let mut i = 0;
        while i < evs.len() {
            let time = evs[i].0;
            let mut j = i;
            let mut coalesces = false;
            while j < evs.len() && evs[j].0 == time {
                coalesces |= matches!(evs[j].1, Event::Coalesce);
                j += 1;
            }
            if time > prev {
                out.push(IntervalRecord {
                    start: prev,
                    end: time,
                    lineages,
                    coal_factor: choose2(lineages),
                    end_event: if coalesces {
                        EndEvent::Coalescent
                    } else {
                        EndEvent::Sampling
                    },
                });
                prev = time;
            }
            for (_, ev) in &evs[i..j] {
                match ev {
                    Event::Sample(c) => lineages += c,
                    Event::Coalesce => lineages -= 1,
                }
            }
            i = j;
        }
        out
    }
}
