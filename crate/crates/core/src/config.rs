//! Experiment parameterization shared by every module.

use crate::error::{Error, Result};

/// Full parameter set of one downlink experiment.
///
/// `users` is K, `tx_antennas` is M, `rx_antennas` is N (per user), `rate` is the
/// QoS minimum rate R0 in bits/s/Hz, `snr` is the linear transmit SNR and `beta`
/// the per-entry variance of the Rayleigh channel matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub users: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub rate: f64,
    pub snr: f64,
    pub beta: f64,
}

impl SystemConfig {
    pub fn new(
        users: usize,
        tx_antennas: usize,
        rx_antennas: usize,
        rate: f64,
        snr: f64,
        beta: f64,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            users,
            tx_antennas,
            rx_antennas,
            rate,
            snr,
            beta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The simulation setup used for the reference figures: K=4, M=1, N=4, beta=1, snr=3.
    pub fn reference(rate: f64) -> Result<Self> {
        SystemConfig::new(4, 1, 4, rate, 3.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::invalid("user count K must be at least 1"));
        }
        if self.tx_antennas == 0 {
            return Err(Error::invalid("transmit antennas M must be at least 1"));
        }
        if self.rx_antennas == 0 {
            return Err(Error::invalid("receive antennas N must be at least 1"));
        }
        check_positive("rate R0", self.rate)?;
        check_positive("snr xi", self.snr)?;
        check_positive("beta", self.beta)?;
        Ok(())
    }
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be a positive finite number, got {value}")))
    }
}
