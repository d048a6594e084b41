//! Flat `key = value` configuration files.
//!
//! ```text
//! # reference setup
//! K = 4
//! M = 1
//! N = 4
//! R0 = 1
//! xi = 3
//! beta = 1
//! trials = 100000
//! seed = 7
//! sweep = interference
//! target_user = 2
//! ```
//!
//! Blank lines and `#` comments are ignored; keys are case-insensitive.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Everything a config file may set. Unset keys stay `None` so command-line
/// flags and defaults can fill them in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub users: Option<usize>,
    pub tx_antennas: Option<usize>,
    pub rx_antennas: Option<usize>,
    pub rate: Option<f64>,
    pub snr: Option<f64>,
    pub beta: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub sweep: Option<String>,
    pub target_user: Option<usize>,
    pub grid_start: Option<f64>,
    pub grid_stop: Option<f64>,
    pub grid_step: Option<f64>,
    pub out: Option<String>,
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::ConfigParse {
        line,
        message: format!("cannot parse value {raw:?} for key {key}"),
    })
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (i, raw_line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim();
            let raw = raw.trim();
            match key.to_ascii_lowercase().as_str() {
                "k" | "users" => s.users = Some(value(line_no, key, raw)?),
                "m" | "tx_antennas" => s.tx_antennas = Some(value(line_no, key, raw)?),
                "n" | "rx_antennas" => s.rx_antennas = Some(value(line_no, key, raw)?),
                "r0" | "rate" => s.rate = Some(value(line_no, key, raw)?),
                "xi" | "snr" => s.snr = Some(value(line_no, key, raw)?),
                "beta" => s.beta = Some(value(line_no, key, raw)?),
                "trials" => s.trials = Some(value(line_no, key, raw)?),
                "seed" => s.seed = Some(value(line_no, key, raw)?),
                "workers" => s.workers = Some(value(line_no, key, raw)?),
                "sweep" => s.sweep = Some(raw.to_string()),
                "target_user" => s.target_user = Some(value(line_no, key, raw)?),
                "grid_start" => s.grid_start = Some(value(line_no, key, raw)?),
                "grid_stop" => s.grid_stop = Some(value(line_no, key, raw)?),
                "grid_step" => s.grid_step = Some(value(line_no, key, raw)?),
                "out" => s.out = Some(raw.to_string()),
                _ => {
                    return Err(Error::ConfigParse {
                        line: line_no,
                        message: format!("unknown key {key}"),
                    })
                }
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Settings::parse(&std::fs::read_to_string(path)?)
    }

    /// Values set in `other` replace those in `self`.
    pub fn overridden_by(self, other: Settings) -> Settings {
        Settings {
            users: other.users.or(self.users),
            tx_antennas: other.tx_antennas.or(self.tx_antennas),
            rx_antennas: other.rx_antennas.or(self.rx_antennas),
            rate: other.rate.or(self.rate),
            snr: other.snr.or(self.snr),
            beta: other.beta.or(self.beta),
            trials: other.trials.or(self.trials),
            seed: other.seed.or(self.seed),
            workers: other.workers.or(self.workers),
            sweep: other.sweep.or(self.sweep),
            target_user: other.target_user.or(self.target_user),
            grid_start: other.grid_start.or(self.grid_start),
            grid_stop: other.grid_stop.or(self.grid_stop),
            grid_step: other.grid_step.or(self.grid_step),
            out: other.out.or(self.out),
        }
    }
}
