//! Per-trial effective channel gains for K users.
//!
//! Every user sees an N x M Rayleigh matrix `H` with i.i.d. CN(0, beta)
//! entries. The base station sends all signals along one isotropic unit vector
//! `v` and each receiver combines with `u = H v / |H v|`, so the effective gain
//! is `|u^H H v|^2 = |H v|^2`, which is Gamma(N, beta) distributed for any M.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::config::SystemConfig;

/// Seed of a simulation. Trial `i` draws from its own ChaCha8 stream `i` under
/// this seed, so a trial's channel never depends on which worker evaluates it
/// or in which order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed }
    }

    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// Ordered effective gains of one trial, weakest user first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gains: Vec<f64>,
    trial: u64,
}

impl ChannelRealization {
    /// Sorts raw per-user draws ascending. The sort is stable, so ties keep draw order.
    pub fn from_draws(mut draws: Vec<f64>, trial: u64) -> Self {
        draws.sort_by(f64::total_cmp);
        ChannelRealization {
            gains: draws,
            trial,
        }
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn gain(&self, n: usize) -> f64 {
        self.gains[n]
    }

    pub fn users(&self) -> usize {
        self.gains.len()
    }

    pub fn trial_index(&self) -> u64 {
        self.trial
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerKind {
    /// Draw each gain straight from Gamma(N, beta).
    #[default]
    DirectGamma,
    /// Build H and v, apply MRC and take `|u^H H v|^2`.
    ExplicitMatrix,
}

/// Draws the effective gains of a configuration.
#[derive(Debug, Clone)]
pub struct GainSampler {
    kind: SamplerKind,
    users: usize,
    tx_antennas: usize,
    rx_antennas: usize,
    gamma: Gamma<f64>,
    entry_std: f64,
}

impl GainSampler {
    pub fn new(cfg: &SystemConfig, kind: SamplerKind) -> Self {
        let gamma = Gamma::new(cfg.rx_antennas as f64, cfg.beta)
            .expect("validated config has positive shape and scale");
        GainSampler {
            kind,
            users: cfg.users,
            tx_antennas: cfg.tx_antennas,
            rx_antennas: cfg.rx_antennas,
            gamma,
            // real and imaginary parts each carry half the entry variance
            entry_std: (cfg.beta / 2.0).sqrt(),
        }
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    /// One gain drawn from the marginal law, using the direct path.
    pub fn sample_gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.gamma.sample(rng)
    }

    /// The K unsorted per-user gains of `trial`.
    pub fn draw_trial(&self, rng: &RngSpec, trial: u64) -> Vec<f64> {
        let mut rng = rng.trial_rng(trial);
        match self.kind {
            SamplerKind::DirectGamma => (0..self.users).map(|_| self.gamma.sample(&mut rng)).collect(),
            SamplerKind::ExplicitMatrix => {
                let v = self.isotropic_beam(&mut rng);
                (0..self.users).map(|_| self.mrc_gain(&v, &mut rng)).collect()
            }
        }
    }

    pub fn sample(&self, rng: &RngSpec, trial: u64) -> ChannelRealization {
        ChannelRealization::from_draws(self.draw_trial(rng, trial), trial)
    }

    fn complex_normal<R: Rng + ?Sized>(rng: &mut R, std: f64) -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * std, im * std)
    }

    fn isotropic_beam<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        loop {
            let v: Vec<Complex64> = (0..self.tx_antennas)
                .map(|_| Self::complex_normal(rng, 1.0))
                .collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                return v.into_iter().map(|z| z / norm).collect();
            }
        }
    }

    fn mrc_gain<R: Rng + ?Sized>(&self, v: &[Complex64], rng: &mut R) -> f64 {
        // y = H v, one row of H at a time
        let y: Vec<Complex64> = (0..self.rx_antennas)
            .map(|_| {
                v.iter()
                    .map(|vj| Self::complex_normal(rng, self.entry_std) * vj)
                    .sum()
            })
            .collect();
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let g: Complex64 = y.iter().map(|yi| (yi / norm).conj() * yi).sum();
        g.norm_sqr()
    }
}

/// Sampler for the default simulation path.
pub fn gain_distribution_sampler(cfg: &SystemConfig) -> GainSampler {
    GainSampler::new(cfg, SamplerKind::DirectGamma)
}

pub fn sample_realization(cfg: &SystemConfig, rng: &RngSpec, trial: u64) -> ChannelRealization {
    gain_distribution_sampler(cfg).sample(rng, trial)
}
