use std::sync::OnceLock;
use std::time::Instant;

use super::{ChainRng, Kernel, SamplerConfig};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

/// Monotone time source in seconds.
pub trait Clock {
    fn now(&mut self) -> f64;
}

/// CPU time consumed by the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThreadCpuClock;

impl Clock for ThreadCpuClock {
    fn now(&mut self) -> f64 {
        let mut ts = libc::timespec {
            tv_sec: 0,
            tv_nsec: 0,
        };
        // SAFETY: `ts` is a valid out-pointer and the clock id is supported on Linux.
        let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
        if rc != 0 {
            static START: OnceLock<Instant> = OnceLock::new();
            return START.get_or_init(Instant::now).elapsed().as_secs_f64();
        }
        ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
    }
}

/// Deterministic clock advancing by `tick` seconds on every reading.
#[derive(Debug, Clone, Copy)]
pub struct TickClock {
    tick: f64,
    calls: u64,
}

impl TickClock {
    pub fn new(tick: f64) -> Self {
        Self { tick, calls: 0 }
    }
}

impl Clock for TickClock {
    fn now(&mut self) -> f64 {
        self.calls += 1;
        self.calls as f64 * self.tick
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    /// Adapt the step size during burn-in. The value frozen afterwards is
    /// the geometric mean over the second half of burn-in.
    pub tune: bool,
    pub tune_window: usize,
    pub target_accept: f64,
    /// Also record burn-in iterations.
    pub record_burnin: bool,
    /// Abort after this many consecutive divergent proposals.
    pub max_divergences: usize,
}

impl ChainOptions {
    pub fn new(iterations: usize, burnin: usize) -> Self {
        Self {
            iterations,
            burnin,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.burnin > self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} exceeds iterations {}",
                self.burnin, self.iterations
            )));
        }
        if self.tune_window == 0 {
            return Err(Error::Config("tuning window must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            iterations: 1000,
            burnin: 0,
            thin: 1,
            tune: true,
            tune_window: 25,
            target_accept: 0.7,
            record_burnin: false,
            max_divergences: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub accepted: bool,
    pub log_likelihood: f64,
    pub log_posterior: f64,
    /// Cumulative CPU seconds spent in transitions up to this iteration.
    pub cpu_seconds: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub sampler: String,
    pub burnin: usize,
    pub thin: usize,
    pub rows: Vec<TraceRow>,
    pub divergences: usize,
    pub stalls: usize,
    /// Step size after tuning, for kernels that have one.
    pub step_size: Option<f64>,
    pub config: Option<SamplerConfig>,
    pub seed: Option<u64>,
}

impl Trace {
    pub fn with_config(mut self, config: SamplerConfig) -> Self {
        self.config = Some(config);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.theta.len())
    }

    /// Rows at or after the end of burn-in.
    pub fn post_burnin(&self) -> impl Iterator<Item = &TraceRow> {
        let b = self.burnin;
        self.rows.iter().filter(move |r| r.iter >= b)
    }

    /// Post-burn-in values of coordinate `j` of `theta`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.post_burnin().map(|r| r.theta[j]).collect()
    }

    pub fn tau(&self) -> Vec<f64> {
        self.column(self.dim() - 1)
    }

    pub fn acceptance_rate(&self) -> f64 {
        let (a, n) = self
            .post_burnin()
            .fold((0usize, 0usize), |(a, n), r| (a + r.accepted as usize, n + 1));
        if n == 0 {
            f64::NAN
        } else {
            a as f64 / n as f64
        }
    }

    /// CPU seconds per iteration over the recorded post-burn-in span.
    pub fn seconds_per_iteration(&self) -> f64 {
        match (self.post_burnin().next(), self.post_burnin().last()) {
            (Some(a), Some(b)) if b.iter > a.iter => {
                (b.cpu_seconds - a.cpu_seconds) / (b.iter - a.iter) as f64
            }
            _ => f64::NAN,
        }
    }

    /// Post-burn-in iterations represented by the recorded rows.
    pub fn post_burnin_iterations(&self) -> usize {
        match (self.post_burnin().next(), self.post_burnin().last()) {
            (Some(a), Some(b)) => b.iter - a.iter + 1,
            _ => 0,
        }
    }
}

/// Run one chain from `init`.
pub fn run_chain<K: Kernel + ?Sized, C: Clock + ?Sized>(
    kernel: &mut K,
    init: Vec<f64>,
    opts: &ChainOptions,
    rng: &mut ChainRng,
    clock: &mut C,
) -> Result<Trace> {
    opts.validate()?;
    if init.len() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: init.len(),
        });
    }
    let mut state = kernel.init_state(init);
    if !state.log_density.is_finite() {
        return Err(Error::NonFiniteEnergy);
    }
    let mut rows = Vec::new();
    let mut cpu = 0.0;
    let (mut divergences, mut streak, mut stalls) = (0usize, 0usize, 0usize);
    let (mut win_acc, mut win_n) = (0usize, 0usize);
    let tune = opts.tune && kernel.step_size().is_some();
    // cumulative log scale, and its values over the second half of burn-in
    let (mut log_scale, mut late) = (0.0f64, Vec::new());

    for iter in 0..opts.iterations {
        let t0 = clock.now();
        let info = kernel.step(&mut state, rng)?;
        cpu += clock.now() - t0;

        if info.divergent {
            divergences += 1;
            streak += 1;
            if streak >= opts.max_divergences {
                return Err(Error::Diverged(streak));
            }
        } else {
            streak = 0;
        }
        stalls += info.stalled as usize;

        if tune && iter < opts.burnin {
            win_acc += info.accepted as usize;
            win_n += 1;
            if win_n == opts.tune_window {
                let rate = win_acc as f64 / win_n as f64;
                let factor: f64 = if rate > opts.target_accept { 1.1 } else { 0.9 };
                kernel.scale_step(factor);
                log_scale += factor.ln();
                if 2 * (iter + 1) > opts.burnin {
                    late.push(log_scale);
                }
                win_acc = 0;
                win_n = 0;
            }
            if iter + 1 == opts.burnin && !late.is_empty() {
                let target = late.iter().sum::<f64>() / late.len() as f64;
                kernel.scale_step((target - log_scale).exp());
            }
        }

        let keep = if iter >= opts.burnin {
            (iter - opts.burnin) % opts.thin == 0
        } else {
            opts.record_burnin
        };
        if keep {
            rows.push(TraceRow {
                iter,
                accepted: info.accepted,
                log_likelihood: kernel.reported_log_likelihood(&state.theta),
                log_posterior: state.log_density,
                cpu_seconds: cpu,
                theta: state.theta.clone(),
            });
        }
    }

    Ok(Trace {
        sampler: kernel.name().to_string(),
        burnin: opts.burnin,
        thin: opts.thin,
        rows,
        divergences,
        stalls,
        step_size: kernel.step_size(),
        config: None,
        seed: None,
    })
}

/// Run `chains` independent chains, each on its own random stream of `seed`.
/// `run` receives the chain index and its stream.
pub fn run_chains<F>(chains: usize, seed: u64, exec: Execution, run: F) -> Vec<Result<Trace>>
where
    F: Fn(usize, &mut ChainRng) -> Result<Trace> + Sync + Send,
{
    map_indexed(chains, exec, |i| {
        let mut rng = super::stream_rng(seed, i as u64);
        run(i, &mut rng)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{stream_rng, ChainState, StepInfo};

    struct Identity;

    impl Kernel for Identity {
        fn name(&self) -> &'static str {
            "identity"
        }
        fn dim(&self) -> usize {
            2
        }
        fn init_state(&self, theta: Vec<f64>) -> ChainState {
            ChainState {
                theta,
                log_density: 0.0,
                grad: vec![0.0; 2],
            }
        }
        fn step(&mut self, _s: &mut ChainState, _r: &mut ChainRng) -> Result<StepInfo> {
            Ok(StepInfo::accept(true, 0.0))
        }
        fn reported_log_likelihood(&self, _t: &[f64]) -> f64 {
            -1.0
        }
    }

    struct AlwaysDivergent;

    impl Kernel for AlwaysDivergent {
        fn name(&self) -> &'static str {
            "bad"
        }
        fn dim(&self) -> usize {
            1
        }
        fn init_state(&self, theta: Vec<f64>) -> ChainState {
            ChainState {
                theta,
                log_density: 0.0,
                grad: vec![0.0],
            }
        }
        fn step(&mut self, _s: &mut ChainState, _r: &mut ChainRng) -> Result<StepInfo> {
            Ok(StepInfo::divergent())
        }
        fn reported_log_likelihood(&self, _t: &[f64]) -> f64 {
            0.0
        }
    }

    #[test]
    fn identity_kernel_gives_constant_trace() {
        let opts = ChainOptions {
            thin: 3,
            ..ChainOptions::new(100, 10)
        };
        let t = run_chain(
            &mut Identity,
            vec![1.0, 2.0],
            &opts,
            &mut stream_rng(1, 0),
            &mut TickClock::new(0.5),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 30);
        assert!(t.rows.iter().all(|r| r.theta == vec![1.0, 2.0]));
        assert_eq!(t.acceptance_rate(), 1.0);
        assert_eq!(t.rows[0].iter, 10);
        assert_eq!(t.rows[1].iter, 13);
        assert!((t.seconds_per_iteration() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aborts_after_consecutive_divergences() {
        let opts = ChainOptions::new(1000, 0);
        let err = run_chain(
            &mut AlwaysDivergent,
            vec![0.0],
            &opts,
            &mut stream_rng(1, 0),
            &mut TickClock::new(1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Diverged(100)));
    }

    #[test]
    fn options_validated() {
        assert!(ChainOptions::new(10, 20).validate().is_err());
        let o = ChainOptions {
            thin: 0,
            ..ChainOptions::new(10, 0)
        };
        assert!(o.validate().is_err());
    }

    #[test]
    fn cpu_clock_is_monotone() {
        let mut c = ThreadCpuClock;
        let a = c.now();
        let mut x = 0.0f64;
        for i in 0..100_000 {
            x += (i as f64).sqrt();
        }
        assert!(x > 0.0);
        assert!(c.now() >= a);
    }
}
