//! Closed-form outage probabilities from Gamma order statistics.
//!
//! With integer shape the Gamma CDF is the finite Erlang series, and the CDF of
//! the n-th smallest of K i.i.d. gains is a binomial tail of that CDF. Under
//! orthogonal access, user n is in outage exactly when its ordered gain is
//! below the OMA threshold, so these formulas give exact outage probabilities.

use crate::config::{check_positive, SystemConfig};
use crate::error::{Error, Result};

/// Largest user count accepted by the binomial recurrence.
pub const MAX_USERS: usize = 64;

/// Survival function `e^(-x) * sum_{k<N} x^k / k!` of Gamma(N, 1) at `x`.
fn erlang_survival(x: f64, shape: usize) -> f64 {
    let mut term = (-x).exp();
    let mut sum = term;
    for k in 1..shape {
        term *= x / k as f64;
        sum += term;
    }
    sum.clamp(0.0, 1.0)
}

fn check_gain(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!("gain value must be non-negative, got {t}")));
    }
    Ok(())
}

/// CDF of Gamma(shape, beta) at `t` for integer `shape`.
pub fn gamma_cdf(t: f64, shape: usize, beta: f64) -> Result<f64> {
    check_gain(t)?;
    if shape == 0 {
        return Err(Error::invalid("Gamma shape must be at least 1"));
    }
    check_positive("beta", beta)?;
    if t.is_infinite() {
        return Ok(1.0);
    }
    Ok((1.0 - erlang_survival(t / beta, shape)).clamp(0.0, 1.0))
}

/// `C(n, k)` in floating point via the multiplicative recurrence.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Law of the K ordered gains of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedGainModel {
    pub users: usize,
    pub shape: usize,
    pub beta: f64,
}

impl OrderedGainModel {
    pub fn new(users: usize, shape: usize, beta: f64) -> Result<Self> {
        if users == 0 || users > MAX_USERS {
            return Err(Error::invalid(format!(
                "user count must be in 1..={MAX_USERS}, got {users}"
            )));
        }
        if shape == 0 {
            return Err(Error::invalid("Gamma shape must be at least 1"));
        }
        check_positive("beta", beta)?;
        Ok(OrderedGainModel { users, shape, beta })
    }

    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        OrderedGainModel::new(cfg.users, cfg.rx_antennas, cfg.beta)
    }

    /// `P(G_(n) <= t)` for the 0-based rank `n` (0 is the weakest user).
    pub fn ordered_cdf(&self, n: usize, t: f64) -> Result<f64> {
        ordered_outage_probability(self, n, t)
    }
}

/// Probability that the gain of rank `n` (0-based, ascending) is at most `t`:
/// `sum_{j=n+1..K} C(K,j) F^j (1-F)^(K-j)`.
pub fn ordered_outage_probability(model: &OrderedGainModel, n: usize, t: f64) -> Result<f64> {
    if n >= model.users {
        return Err(Error::invalid(format!(
            "rank {} out of range for {} users",
            n + 1,
            model.users
        )));
    }
    check_gain(t)?;
    if t.is_infinite() {
        return Ok(1.0);
    }
    let k = model.users;
    let survival = erlang_survival(t / model.beta, model.shape);
    let cdf = (1.0 - survival).clamp(0.0, 1.0);
    let p: f64 = (n + 1..=k)
        .map(|j| binomial(k, j) * cdf.powi(j as i32) * survival.powi((k - j) as i32))
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Exact per-user outage probabilities under orthogonal access, which also
/// equal the NOMA outage under the fixed QoS allocation.
pub fn oma_outage_probabilities(cfg: &SystemConfig) -> Result<Vec<f64>> {
    let model = OrderedGainModel::from_config(cfg)?;
    let t = crate::allocation::oma_threshold(cfg.users, cfg.rate, cfg.snr);
    (0..cfg.users).map(|n| model.ordered_cdf(n, t)).collect()
}
