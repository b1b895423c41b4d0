//! Replicated simulation of CuSum and SPRT runs.
//!
//! Replication `i` always draws from stream `(seed, lane, i)` and results are
//! reduced in index order with compensated summation, so an estimate depends
//! on `(seed, replications, cap)` only, never on the number of workers.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::detectors::{run_cusum, run_sprt, Boundary, CusumState, SprtConfig, SprtOutcome};
use crate::error::{Error, Result};
use crate::models::{Hypothesis, LlrSource};
use crate::rng::{Lane, StreamFactory};

/// Conditioning events with fewer hits than this are flagged.
pub const MIN_CONDITIONAL_HITS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub replications: u64,
    pub seed: u64,
    /// Per-run step limit.
    pub cap: u64,
    pub workers: usize,
    /// Print completed-replication counts to stderr.
    pub progress: bool,
}

impl McConfig {
    pub fn new(replications: u64, seed: u64, cap: u64, workers: usize) -> Result<Self> {
        let cfg = Self {
            replications,
            seed,
            cap,
            workers,
            progress: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidParameter(format!(
                "replications must be >= 2, got {}",
                self.replications
            )));
        }
        if self.cap == 0 {
            return Err(Error::InvalidParameter("cap must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_replications(self, replications: u64) -> Self {
        Self {
            replications,
            ..self
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }
}

/// Sample mean with its standard error.
///
/// `n_effective` counts the values that entered the mean and `n_truncated`
/// the runs dropped for hitting the cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_effective: u64,
    pub n_truncated: u64,
}

impl McEstimate {
    /// Mean and `sd / sqrt(n)` of `values`, summed in order with Kahan
    /// compensation. Fewer than two values give an infinite standard error.
    pub fn from_values<I>(values: I, n_truncated: u64) -> Self
    where
        I: IntoIterator<Item = f64>,
        I::IntoIter: Clone,
    {
        let it = values.into_iter();
        let mut sum = Kahan::default();
        let mut n = 0u64;
        for v in it.clone() {
            sum.add(v);
            n += 1;
        }
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::INFINITY,
                n_effective: 0,
                n_truncated,
            };
        }
        let mean = sum.total() / n as f64;
        let mut ss = Kahan::default();
        for v in it {
            ss.add((v - mean) * (v - mean));
        }
        let std_error = if n < 2 {
            f64::INFINITY
        } else {
            (ss.total() / (n - 1) as f64 / n as f64).sqrt()
        };
        Self {
            mean,
            std_error,
            n_effective: n,
            n_truncated,
        }
    }

    /// A proportion `k / n` with the binomial standard error.
    pub fn proportion(successes: u64, n: u64, n_truncated: u64) -> Self {
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::INFINITY,
                n_effective: 0,
                n_truncated,
            };
        }
        let p = successes as f64 / n as f64;
        Self {
            mean: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n_effective: n,
            n_truncated,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum
    }
}

/// Run `task(i)` for every replication index on a pool of `cfg.workers`
/// threads and return the results in index order.
pub fn run_replications<T, F>(cfg: &McConfig, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let done = AtomicU64::new(0);
    let total = cfg.replications;
    let step = (total / 10).max(1);
    let out = pool.install(|| {
        (0..total)
            .into_par_iter()
            .map(|i| {
                let r = task(i);
                if cfg.progress {
                    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                    if n % step == 0 || n == total {
                        eprintln!("  {n}/{total} replications");
                    }
                }
                r
            })
            .collect()
    });
    Ok(out)
}

fn cusum_estimate<S>(
    source: &S,
    hyp: Hypothesis,
    lane: Lane,
    h: f64,
    cfg: &McConfig,
) -> Result<McEstimate>
where
    S: LlrSource + ?Sized,
{
    CusumState::new(h)?;
    let streams = StreamFactory::new(cfg.seed);
    let taus = run_replications(cfg, |i| {
        let mut rng = streams.stream(lane, i);
        run_cusum(source, hyp, h, &mut rng, cfg.cap)
            .expect("threshold and cap validated")
            .alarm()
            .map(|a| a.tau as f64)
    })?;
    let truncated = taus.iter().filter(|t| t.is_none()).count() as u64;
    if truncated == cfg.replications {
        return Err(Error::AllTruncated {
            replications: cfg.replications,
            cap: cfg.cap,
        });
    }
    if truncated > 0 {
        log::warn!(
            "{truncated} of {} CuSum runs hit the cap of {} steps",
            cfg.replications,
            cfg.cap
        );
    }
    Ok(McEstimate::from_values(
        taus.iter().flatten().copied(),
        truncated,
    ))
}

/// Average time to false alarm: CuSum run length with no change.
///
/// Truncated runs are excluded, which biases the mean downwards.
pub fn estimate_at2fa<S: LlrSource + ?Sized>(
    source: &S,
    h: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cusum_estimate(source, Hypothesis::Pre, Lane::Pre, h, cfg)
}

/// Average detection delay: CuSum run length with the change at time 1.
pub fn estimate_add<S: LlrSource + ?Sized>(
    source: &S,
    h: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cusum_estimate(source, Hypothesis::Post, Lane::Post, h, cfg)
}

/// Every SPRT run of one batch, in replication order; `None` marks a
/// truncated run.
#[derive(Debug, Clone)]
pub struct SprtBatch {
    pub hyp: Hypothesis,
    pub config: SprtConfig,
    pub outcomes: Vec<Option<SprtOutcome>>,
}

/// Conditional mean over one class of boundary hits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalEstimate {
    /// `n_effective` is the number of hits.
    pub estimate: McEstimate,
    /// Fewer than [`MIN_CONDITIONAL_HITS`] hits.
    pub insufficient: bool,
}

impl SprtBatch {
    fn stopped(&self) -> impl Iterator<Item = &SprtOutcome> + Clone {
        self.outcomes.iter().flatten()
    }

    pub fn n_truncated(&self) -> u64 {
        self.outcomes.iter().filter(|o| o.is_none()).count() as u64
    }

    pub fn hits(&self, boundary: Boundary) -> u64 {
        self.stopped().filter(|o| o.hit == boundary).count() as u64
    }

    pub fn stopping_time(&self) -> McEstimate {
        McEstimate::from_values(
            self.stopped().map(|o| o.stopping_time as f64),
            self.n_truncated(),
        )
    }

    /// Fraction of completed runs that exit through `boundary`.
    pub fn exit_rate(&self, boundary: Boundary) -> McEstimate {
        let n = self.outcomes.len() as u64 - self.n_truncated();
        McEstimate::proportion(self.hits(boundary), n, self.n_truncated())
    }

    pub fn terminal_sum(&self) -> McEstimate {
        McEstimate::from_values(self.stopped().map(|o| o.terminal_sum), self.n_truncated())
    }

    /// Mean overshoot among runs exiting through `boundary`.
    pub fn overshoot(&self, boundary: Boundary) -> ConditionalEstimate {
        let values = self
            .stopped()
            .filter(move |o| o.hit == boundary)
            .map(|o| o.overshoot);
        let estimate = McEstimate::from_values(values, self.n_truncated());
        let insufficient = estimate.n_effective < MIN_CONDITIONAL_HITS;
        if insufficient {
            log::warn!(
                "only {} {:?} exits under {}; conditional overshoot is unreliable",
                estimate.n_effective,
                boundary,
                self.hyp.as_str()
            );
        }
        ConditionalEstimate {
            estimate,
            insufficient,
        }
    }

    /// Per-run `S_T - E[Y] T`, whose mean is zero by Wald's identity.
    pub fn wald_residual(&self, llr_mean: f64) -> McEstimate {
        McEstimate::from_values(
            self.stopped()
                .map(move |o| o.terminal_sum - llr_mean * o.stopping_time as f64),
            self.n_truncated(),
        )
    }

    /// `E[T] / P(upper exit)` with a delta-method standard error. With
    /// `a -> 0-` this is the expected CuSum run length at threshold `b`.
    pub fn cycle_ratio(&self) -> (f64, f64) {
        let n = (self.outcomes.len() as u64 - self.n_truncated()) as f64;
        let mut st = Kahan::default();
        let mut si = Kahan::default();
        for o in self.stopped() {
            st.add(o.stopping_time as f64);
            si.add(if o.hit == Boundary::Upper { 1.0 } else { 0.0 });
        }
        let (mt, mi) = (st.total() / n, si.total() / n);
        let (mut vt, mut vi, mut cov) = (Kahan::default(), Kahan::default(), Kahan::default());
        for o in self.stopped() {
            let dt = o.stopping_time as f64 - mt;
            let di = if o.hit == Boundary::Upper { 1.0 } else { 0.0 } - mi;
            vt.add(dt * dt);
            vi.add(di * di);
            cov.add(dt * di);
        }
        let scale = 1.0 / ((n - 1.0) * n);
        let (vt, vi, cov) = (vt.total() * scale, vi.total() * scale, cov.total() * scale);
        let ratio = mt / mi;
        let var = vt / (mi * mi) + mt * mt * vi / mi.powi(4) - 2.0 * mt * cov / mi.powi(3);
        (ratio, var.max(0.0).sqrt())
    }
}

/// Run the SPRT `cfg.replications` times under `hyp`.
pub fn simulate_sprt<S: LlrSource + ?Sized>(
    source: &S,
    hyp: Hypothesis,
    config: SprtConfig,
    cfg: &McConfig,
) -> Result<SprtBatch> {
    let lane = match hyp {
        Hypothesis::Pre => Lane::Pre,
        Hypothesis::Post => Lane::Post,
    };
    let streams = StreamFactory::new(cfg.seed);
    let outcomes = run_replications(cfg, |i| {
        let mut rng = streams.stream(lane, i);
        run_sprt(source, hyp, config, &mut rng, cfg.cap)
            .expect("cap validated")
            .outcome()
    })?;
    let batch = SprtBatch {
        hyp,
        config,
        outcomes,
    };
    if batch.n_truncated() == cfg.replications {
        return Err(Error::AllTruncated {
            replications: cfg.replications,
            cap: cfg.cap,
        });
    }
    Ok(batch)
}

/// `(alpha_hat, beta_hat)`: upper exits under the pre-change law and lower
/// exits under the post-change law.
pub fn estimate_sprt_errors<S: LlrSource + ?Sized>(
    source: &S,
    config: SprtConfig,
    cfg: &McConfig,
) -> Result<(McEstimate, McEstimate)> {
    let pre = simulate_sprt(source, Hypothesis::Pre, config, cfg)?;
    let post = simulate_sprt(source, Hypothesis::Post, config, cfg)?;
    Ok((
        pre.exit_rate(Boundary::Upper),
        post.exit_rate(Boundary::Lower),
    ))
}

/// Mean overshoot over upper exits and over lower exits under `hyp`.
pub fn estimate_conditional_overshoots<S: LlrSource + ?Sized>(
    source: &S,
    hyp: Hypothesis,
    config: SprtConfig,
    cfg: &McConfig,
) -> Result<(ConditionalEstimate, ConditionalEstimate)> {
    let batch = simulate_sprt(source, hyp, config, cfg)?;
    Ok((
        batch.overshoot(Boundary::Upper),
        batch.overshoot(Boundary::Lower),
    ))
}
