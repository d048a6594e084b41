//! SIC decode chains, orthogonal-access events and Monte Carlo aggregation.
//!
//! Decisions are made by comparing gains against pre-solved thresholds from
//! [`crate::allocation`]; a gain equal to its threshold counts as outage.
//! The log-capacity functions are kept for reporting and for cross-checking
//! the threshold decisions.

use std::fmt;

use rayon::prelude::*;

use crate::allocation::{decode_thresholds, oma_threshold, DecodeThresholds, PowerAllocation};
use crate::channel::{ChannelRealization, GainSampler, RngSpec, SamplerKind};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::stats::wilson_halfwidth;

/// Capacity of user `n` decoding its own message, treating users above it as noise.
pub fn noma_capacity(
    gains: &ChannelRealization,
    alloc: &PowerAllocation,
    cfg: &SystemConfig,
    n: usize,
) -> f64 {
    step_capacity(gains.gain(n), alloc, cfg.snr, n)
}

/// Capacity of user `n` decoding the message of a weaker user `m < n`.
pub fn sic_capacity(
    gains: &ChannelRealization,
    alloc: &PowerAllocation,
    cfg: &SystemConfig,
    n: usize,
    m: usize,
) -> f64 {
    debug_assert!(m < n, "SIC target {m} must be weaker than decoder {n}");
    step_capacity(gains.gain(n), alloc, cfg.snr, m)
}

/// `log2(1 + a_m snr g / (1 + snr g A_m))`.
fn step_capacity(gain: f64, alloc: &PowerAllocation, snr: f64, m: usize) -> f64 {
    let received = snr * gain;
    let sinr = alloc.coeffs()[m] * received / (1.0 + received * alloc.tails()[m]);
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Capacity of one user in a 1/K orthogonal slot.
pub fn oma_capacity(gain: f64, cfg: &SystemConfig) -> f64 {
    (cfg.snr * gain).ln_1p() / std::f64::consts::LN_2 / cfg.users as f64
}

/// Outage outcomes of one trial; `true` means outage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutageMatrix {
    users: usize,
    own: Vec<bool>,
    // row-major K x K, only m <= n is meaningful
    steps: Vec<bool>,
    oma: Vec<bool>,
}

impl OutageMatrix {
    pub fn users(&self) -> usize {
        self.users
    }

    /// Outage of user `n` on its own message, SIC chain included.
    pub fn own_signal(&self, n: usize) -> bool {
        self.own[n]
    }

    /// Outage of user `n` on the message of user `m <= n`. The diagonal `m == n`
    /// is the last step of the chain: user `n`'s own message with every weaker
    /// message already cancelled.
    pub fn sic_step(&self, n: usize, m: usize) -> bool {
        assert!(m <= n, "step ({n}, {m}) is above the diagonal");
        self.steps[n * self.users + m]
    }

    pub fn oma(&self, n: usize) -> bool {
        self.oma[n]
    }
}

/// A threshold decision that disagrees with the direct capacity comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckMismatch {
    pub trial: u64,
    pub decoder: usize,
    pub target: Option<usize>,
    pub gain: f64,
    pub capacity: f64,
}

impl fmt::Display for CrossCheckMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.target {
            Some(m) => write!(
                f,
                "trial {}: user {} decoding user {} at gain {} has capacity {}",
                self.trial,
                self.decoder + 1,
                m + 1,
                self.gain,
                self.capacity
            ),
            None => write!(
                f,
                "trial {}: OMA user {} at gain {} has capacity {}",
                self.trial,
                self.decoder + 1,
                self.gain,
                self.capacity
            ),
        }
    }
}

/// Relative distance from a threshold inside which capacity rounding may
/// legitimately flip a decision.
const CROSS_CHECK_BAND: f64 = 1e-9;

/// Evaluates trials against one allocation; thresholds are computed once.
#[derive(Debug, Clone)]
pub struct TrialEvaluator {
    alloc: PowerAllocation,
    cfg: SystemConfig,
    thresholds: DecodeThresholds,
    oma_threshold: f64,
}

impl TrialEvaluator {
    pub fn new(cfg: &SystemConfig, alloc: &PowerAllocation) -> Result<Self> {
        cfg.validate()?;
        if alloc.users() != cfg.users {
            return Err(Error::invalid(format!(
                "allocation has {} users but config has K = {}",
                alloc.users(),
                cfg.users
            )));
        }
        Ok(TrialEvaluator {
            alloc: alloc.clone(),
            cfg: *cfg,
            thresholds: decode_thresholds(alloc, cfg.rate, cfg.snr),
            oma_threshold: oma_threshold(cfg.users, cfg.rate, cfg.snr),
        })
    }

    pub fn thresholds(&self) -> &DecodeThresholds {
        &self.thresholds
    }

    pub fn oma_threshold(&self) -> f64 {
        self.oma_threshold
    }

    pub fn evaluate(&self, gains: &ChannelRealization) -> OutageMatrix {
        let k = self.cfg.users;
        let mut steps = vec![false; k * k];
        let mut own = vec![false; k];
        let mut oma = vec![false; k];
        for n in 0..k {
            let g = gains.gain(n);
            for m in 0..=n {
                steps[n * k + m] = g <= self.thresholds.get(m);
            }
            // g <= max_{m<=n} t_m is the same as any step failing
            own[n] = g <= self.thresholds.own(n);
            oma[n] = g <= self.oma_threshold;
        }
        let matrix = OutageMatrix {
            users: k,
            own,
            steps,
            oma,
        };
        #[cfg(debug_assertions)]
        if let Err(e) = self.cross_check(gains, &matrix) {
            panic!("threshold and capacity decisions disagree: {e}");
        }
        matrix
    }

    /// Recomputes every decision from log capacities (`C > R0` means success)
    /// and reports the first disagreement away from the threshold boundary.
    pub fn cross_check(
        &self,
        gains: &ChannelRealization,
        matrix: &OutageMatrix,
    ) -> std::result::Result<(), CrossCheckMismatch> {
        let rate = self.cfg.rate;
        let near = |g: f64, t: f64| t.is_finite() && (g - t).abs() <= CROSS_CHECK_BAND * t;
        for n in 0..self.cfg.users {
            let g = gains.gain(n);
            for m in 0..=n {
                let capacity = step_capacity(g, &self.alloc, self.cfg.snr, m);
                if (capacity <= rate) != matrix.sic_step(n, m) && !near(g, self.thresholds.get(m)) {
                    return Err(CrossCheckMismatch {
                        trial: gains.trial_index(),
                        decoder: n,
                        target: Some(m),
                        gain: g,
                        capacity,
                    });
                }
            }
            let capacity = oma_capacity(g, &self.cfg);
            if (capacity <= rate) != matrix.oma(n) && !near(g, self.oma_threshold) {
                return Err(CrossCheckMismatch {
                    trial: gains.trial_index(),
                    decoder: n,
                    target: None,
                    gain: g,
                    capacity,
                });
            }
        }
        Ok(())
    }
}

pub fn evaluate_trial(
    gains: &ChannelRealization,
    alloc: &PowerAllocation,
    cfg: &SystemConfig,
) -> Result<OutageMatrix> {
    Ok(TrialEvaluator::new(cfg, alloc)?.evaluate(gains))
}

/// Integer outage tallies; merging is order independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutageCounts {
    pub users: usize,
    pub trials: u64,
    pub own: Vec<u64>,
    pub oma: Vec<u64>,
    /// Row-major K x K tallies of [`OutageMatrix::sic_step`].
    pub steps: Vec<u64>,
    /// Trials on which a user's NOMA and OMA outcomes differ.
    pub noma_oma_mismatch: Vec<u64>,
}

impl OutageCounts {
    pub fn new(users: usize) -> Self {
        OutageCounts {
            users,
            trials: 0,
            own: vec![0; users],
            oma: vec![0; users],
            steps: vec![0; users * users],
            noma_oma_mismatch: vec![0; users],
        }
    }

    pub fn record(&mut self, m: &OutageMatrix) {
        let k = self.users;
        self.trials += 1;
        for n in 0..k {
            self.own[n] += m.own_signal(n) as u64;
            self.oma[n] += m.oma(n) as u64;
            self.noma_oma_mismatch[n] += (m.own_signal(n) != m.oma(n)) as u64;
            for j in 0..=n {
                self.steps[n * k + j] += m.sic_step(n, j) as u64;
            }
        }
    }

    pub fn merge(mut self, other: OutageCounts) -> Self {
        self.trials += other.trials;
        let add = |a: &mut Vec<u64>, b: Vec<u64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.own, other.own);
        add(&mut self.oma, other.oma);
        add(&mut self.steps, other.steps);
        add(&mut self.noma_oma_mismatch, other.noma_oma_mismatch);
        self
    }

    pub fn step(&self, n: usize, m: usize) -> u64 {
        self.steps[n * self.users + m]
    }
}

/// How a Monte Carlo estimate is run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Simulation {
    pub trials: u64,
    pub rng: RngSpec,
    /// Worker threads; 1 runs on the calling thread.
    pub workers: usize,
    pub sampler: SamplerKind,
}

impl Simulation {
    pub fn new(trials: u64, seed: u64) -> Self {
        Simulation {
            trials,
            rng: RngSpec::new(seed),
            workers: 1,
            sampler: SamplerKind::DirectGamma,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_sampler(mut self, sampler: SamplerKind) -> Self {
        self.sampler = sampler;
        self
    }
}

/// Trials per work item. Fixed so batches never depend on the worker count.
const BATCH: u64 = 4096;

fn validate_run(trials: u64, workers: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trial count must be at least 1"));
    }
    if workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    Ok(())
}

/// Maps `job` over batch start offsets on `workers` threads and folds the
/// results with `merge`, which must be associative.
fn run_batched<T, J, M>(trials: u64, workers: usize, identity: T, job: J, merge: M) -> Result<T>
where
    T: Clone + Send + Sync,
    J: Fn(u64, u64) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    let starts: Vec<u64> = (0..trials).step_by(BATCH as usize).collect();
    let batch = |start: u64| job(start, (start + BATCH).min(trials));
    if workers == 1 {
        return Ok(starts.into_iter().map(batch).fold(identity, merge));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| {
        starts
            .into_par_iter()
            .map(batch)
            .reduce(|| identity.clone(), &merge)
    }))
}

/// Tallies outage events over `sim.trials` freshly sampled trials.
pub fn count_outages(
    cfg: &SystemConfig,
    alloc: &PowerAllocation,
    sim: &Simulation,
) -> Result<OutageCounts> {
    validate_run(sim.trials, sim.workers)?;
    let eval = TrialEvaluator::new(cfg, alloc)?;
    let sampler = GainSampler::new(cfg, sim.sampler);
    run_batched(
        sim.trials,
        sim.workers,
        OutageCounts::new(cfg.users),
        |start, end| {
            let mut counts = OutageCounts::new(cfg.users);
            for trial in start..end {
                counts.record(&eval.evaluate(&sampler.sample(&sim.rng, trial)));
            }
            counts
        },
        OutageCounts::merge,
    )
}

/// Samples the realizations of `sim` once so several allocations can be
/// evaluated on identical channels.
pub fn sample_bank(cfg: &SystemConfig, sim: &Simulation) -> Result<Vec<ChannelRealization>> {
    validate_run(sim.trials, sim.workers)?;
    cfg.validate()?;
    let sampler = GainSampler::new(cfg, sim.sampler);
    run_batched(
        sim.trials,
        sim.workers,
        Vec::new(),
        |start, end| (start..end).map(|t| sampler.sample(&sim.rng, t)).collect(),
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

/// Tallies outage events of `alloc` over a pre-sampled bank.
pub fn count_outages_on(
    cfg: &SystemConfig,
    alloc: &PowerAllocation,
    bank: &[ChannelRealization],
    workers: usize,
) -> Result<OutageCounts> {
    validate_run(bank.len() as u64, workers)?;
    let eval = TrialEvaluator::new(cfg, alloc)?;
    run_batched(
        bank.len() as u64,
        workers,
        OutageCounts::new(cfg.users),
        |start, end| {
            let mut counts = OutageCounts::new(cfg.users);
            for real in &bank[start as usize..end as usize] {
                counts.record(&eval.evaluate(real));
            }
            counts
        },
        OutageCounts::merge,
    )
}

/// Per-user Monte Carlo outage estimates with 95% Wilson half-widths.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageReport {
    pub per_user_noma: Vec<f64>,
    pub per_user_oma: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub oma_ci_halfwidth: Vec<f64>,
    pub trials: u64,
    pub counts: OutageCounts,
    pub config: SystemConfig,
    pub allocation: PowerAllocation,
    pub rng: RngSpec,
}

impl OutageReport {
    pub fn from_counts(
        counts: OutageCounts,
        cfg: &SystemConfig,
        alloc: &PowerAllocation,
        rng: RngSpec,
    ) -> Self {
        let t = counts.trials;
        let freq = |c: &[u64]| c.iter().map(|&x| x as f64 / t as f64).collect::<Vec<_>>();
        let ci = |c: &[u64]| c.iter().map(|&x| wilson_halfwidth(x, t)).collect::<Vec<_>>();
        OutageReport {
            per_user_noma: freq(&counts.own),
            per_user_oma: freq(&counts.oma),
            ci_halfwidth: ci(&counts.own),
            oma_ci_halfwidth: ci(&counts.oma),
            trials: t,
            counts,
            config: *cfg,
            allocation: alloc.clone(),
            rng,
        }
    }

    /// Frequency of [`OutageMatrix::sic_step`] `(n, m)`.
    pub fn step_outage(&self, n: usize, m: usize) -> f64 {
        self.counts.step(n, m) as f64 / self.trials as f64
    }

    pub fn step_ci_halfwidth(&self, n: usize, m: usize) -> f64 {
        wilson_halfwidth(self.counts.step(n, m), self.trials)
    }
}

pub fn estimate_outage(
    cfg: &SystemConfig,
    alloc: &PowerAllocation,
    sim: &Simulation,
) -> Result<OutageReport> {
    let counts = count_outages(cfg, alloc, sim)?;
    Ok(OutageReport::from_counts(counts, cfg, alloc, sim.rng))
}

/// [`estimate_outage`] over a bank drawn from `rng` by [`sample_bank`].
pub fn estimate_outage_on(
    cfg: &SystemConfig,
    alloc: &PowerAllocation,
    bank: &[ChannelRealization],
    rng: RngSpec,
    workers: usize,
) -> Result<OutageReport> {
    let counts = count_outages_on(cfg, alloc, bank, workers)?;
    Ok(OutageReport::from_counts(counts, cfg, alloc, rng))
}
