//! Figure-reproduction sweeps and their CSV tables.
//!
//! Two sweeps are provided. The a1 sweep moves the power of the weakest user
//! and shares the rest among the others in the fixed-allocation ratios, so
//! the curve passes through the fixed allocation. The interference sweep
//! moves the tail power seen by one target user while the power available to
//! users `n..K` sits just under its limit.
//!
//! Every point of a sweep is evaluated on the same bank of channel
//! realizations (common random numbers), so curves are paired.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::allocation::{pow2, qos_fixed_allocation, PowerAllocation};
use crate::channel::RngSpec;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::outage::{estimate_outage_on, sample_bank, Simulation};

pub const A1_HEADER: [&str; 13] = [
    "a1", "user", "noma_outage", "oma_outage", "ci", "K", "M", "N", "R0", "xi", "beta", "seed",
    "trials",
];

pub const INTERFERENCE_HEADER: [&str; 13] = [
    "A_n",
    "target_user",
    "own_outage",
    "sic_K_to_n_outage",
    "boundary",
    "K",
    "M",
    "N",
    "R0",
    "xi",
    "beta",
    "seed",
    "trials",
];

/// Fraction of the limit `2^(-(n-1) R0)` withheld from users `n..K` in the
/// interference sweep.
pub const BUDGET_SLACK: f64 = 1e-3;

pub const DEFAULT_TRIALS: u64 = 100_000;

/// Evenly spaced values `start, start + step, ...` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let grid = Grid { start, stop, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.start) || !in_unit(self.stop) || self.start > self.stop {
            return Err(Error::invalid(format!(
                "grid [{}, {}] must satisfy 0 <= start <= stop <= 1",
                self.start, self.stop
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid(format!("grid step must be positive, got {}", self.step)));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        // indices rather than accumulation so every point is start + i * step
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| (self.start + i as f64 * self.step).min(self.stop))
            .collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            start: 0.0,
            stop: 1.0,
            step: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    A1,
    /// Interference sweep on the 1-based target user.
    Interference { target_user: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Grid,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SweepSpec {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        cfg.validate()?;
        self.grid.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials per point must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        match self.kind {
            SweepKind::A1 if cfg.users < 2 => {
                Err(Error::invalid("the a1 sweep needs at least two users"))
            }
            SweepKind::Interference { target_user }
                if target_user == 0 || target_user >= cfg.users =>
            {
                Err(Error::invalid(format!(
                    "target user must be in 1..{} for K = {}, got {target_user}",
                    cfg.users, cfg.users
                )))
            }
            _ => Ok(()),
        }
    }

    fn simulation(&self) -> Simulation {
        Simulation::new(self.trials, self.seed).with_workers(self.workers)
    }
}

/// A CSV table kept as strings, exactly as written to disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SweepTable {
    fn new(header: &[&str]) -> Self {
        SweepTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("table cells are UTF-8")
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        self.write_to(File::create(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read_from(File::open(path)?)
    }

    fn read_from<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(Error::MalformedCsv("missing header row".into()));
        }
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(SweepTable { header, rows })
    }

    /// Parses column `name` of every row as `f64`.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .column(name)
            .ok_or_else(|| Error::MalformedCsv(format!("missing column {name}")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.get(idx)
                    .and_then(|cell| cell.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::MalformedCsv(format!("row {}: bad value in column {name}", i + 1))
                    })
            })
            .collect()
    }
}

/// Probabilities keep 6 significant digits.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 || !p.is_finite() {
        return format!("{p}");
    }
    let decimals = (5 - p.abs().log10().floor() as i32).max(0) as usize;
    format!("{p:.decimals$}")
}

/// Coefficients use the shortest representation that parses back to the same `f64`.
pub fn format_coefficient(x: f64) -> String {
    format!("{x}")
}

fn config_echo(cfg: &SystemConfig, spec: &SweepSpec) -> [String; 8] {
    [
        cfg.users.to_string(),
        cfg.tx_antennas.to_string(),
        cfg.rx_antennas.to_string(),
        format_coefficient(cfg.rate),
        format_coefficient(cfg.snr),
        format_coefficient(cfg.beta),
        spec.seed.to_string(),
        spec.trials.to_string(),
    ]
}

/// Power of the weakest user in the fixed QoS allocation.
pub fn fixed_a1(users: usize, rate: f64) -> Result<f64> {
    Ok(qos_fixed_allocation(users, rate)?.coeffs()[0])
}

/// Gives `a1` to the weakest user and splits `1 - a1` over users 2..K in the
/// fixed-allocation ratios `2^((K-n) R0)`.
pub fn a1_allocation(users: usize, rate: f64, a1: f64) -> Result<PowerAllocation> {
    if !(0.0..=1.0).contains(&a1) {
        return Err(Error::invalid(format!("a1 must lie in [0, 1], got {a1}")));
    }
    let weights: Vec<f64> = (2..=users)
        .map(|n| pow2((users - n) as f64 * rate))
        .collect();
    let total: f64 = weights.iter().sum();
    let rest = 1.0 - a1;
    let mut coeffs = Vec::with_capacity(users);
    coeffs.push(a1);
    coeffs.extend(weights.iter().map(|w| rest * w / total));
    PowerAllocation::normalized(coeffs)
}

/// Grid of the a1 sweep with the fixed-allocation a1 inserted (or substituted
/// for a grid value within 1e-9 of it).
pub fn a1_points(grid: &Grid, users: usize, rate: f64) -> Result<Vec<f64>> {
    let special = fixed_a1(users, rate)?;
    Ok(with_marked_point(grid.points(), special))
}

fn with_marked_point(mut points: Vec<f64>, special: f64) -> Vec<f64> {
    match points.iter().position(|p| (p - special).abs() <= 1e-9) {
        Some(i) => points[i] = special,
        None => points.push(special),
    }
    points.sort_by(f64::total_cmp);
    points
}

pub fn run_a1_sweep(cfg: &SystemConfig, spec: &SweepSpec) -> Result<SweepTable> {
    if spec.kind != SweepKind::A1 {
        return Err(Error::invalid("run_a1_sweep needs an a1 sweep spec"));
    }
    spec.validate(cfg)?;
    let sim = spec.simulation();
    let bank = sample_bank(cfg, &sim)?;
    let echo = config_echo(cfg, spec);
    let mut table = SweepTable::new(&A1_HEADER);
    for a1 in a1_points(&spec.grid, cfg.users, cfg.rate)? {
        let alloc = a1_allocation(cfg.users, cfg.rate, a1)?;
        let report = estimate_outage_on(cfg, &alloc, &bank, RngSpec::new(spec.seed), spec.workers)?;
        for n in 0..cfg.users {
            let mut row = vec![
                format_coefficient(a1),
                (n + 1).to_string(),
                format_probability(report.per_user_noma[n]),
                format_probability(report.per_user_oma[n]),
                format_probability(report.ci_halfwidth[n]),
            ];
            row.extend(echo.iter().cloned());
            table.rows.push(row);
        }
    }
    Ok(table)
}

/// Power available to users `n..K` (1-based `n`) in the interference sweep:
/// 1 for the first user, otherwise `(1 - slack) 2^(-(n-1) R0)`.
pub fn interference_budget(target_user: usize, rate: f64) -> f64 {
    if target_user <= 1 {
        1.0
    } else {
        (1.0 - BUDGET_SLACK) * pow2(-((target_user - 1) as f64) * rate)
    }
}

/// Allocation of one interference-sweep point for the 1-based target `n`:
/// `a_n = budget - tail`, the tail goes to user K and every other user gets 0.
/// Users below `n` hold the withheld power outside the vector.
pub fn interference_allocation(
    users: usize,
    rate: f64,
    target_user: usize,
    tail: f64,
) -> Result<PowerAllocation> {
    if target_user == 0 || target_user >= users {
        return Err(Error::invalid(format!(
            "target user must be in 1..{users}, got {target_user}"
        )));
    }
    let budget = interference_budget(target_user, rate);
    if !(0.0..=budget).contains(&tail) {
        return Err(Error::invalid(format!(
            "tail {tail} outside the available budget [0, {budget}]"
        )));
    }
    let mut coeffs = vec![0.0; users];
    coeffs[target_user - 1] = budget - tail;
    coeffs[users - 1] = tail;
    if target_user == 1 {
        PowerAllocation::normalized(coeffs)
    } else {
        PowerAllocation::partial(coeffs)
    }
}

/// Tail values of the interference sweep: grid values the budget can pay
/// for, plus the limit `2^(-n R0)` itself.
pub fn interference_points(grid: &Grid, rate: f64, target_user: usize) -> Vec<f64> {
    let budget = interference_budget(target_user, rate);
    let boundary = pow2(-(target_user as f64) * rate);
    let mut points: Vec<f64> = grid.points().into_iter().filter(|&x| x <= budget).collect();
    if boundary <= budget {
        points = with_marked_point(points, boundary);
    }
    points
}

pub fn run_interference_sweep(cfg: &SystemConfig, spec: &SweepSpec) -> Result<SweepTable> {
    let SweepKind::Interference { target_user } = spec.kind else {
        return Err(Error::invalid("run_interference_sweep needs an interference sweep spec"));
    };
    spec.validate(cfg)?;
    let sim = spec.simulation();
    let bank = sample_bank(cfg, &sim)?;
    let echo = config_echo(cfg, spec);
    let boundary = pow2(-(target_user as f64) * cfg.rate);
    let n = target_user - 1;
    let k = cfg.users - 1;
    let mut table = SweepTable::new(&INTERFERENCE_HEADER);
    for tail in interference_points(&spec.grid, cfg.rate, target_user) {
        let alloc = interference_allocation(cfg.users, cfg.rate, target_user, tail)?;
        let report = estimate_outage_on(cfg, &alloc, &bank, RngSpec::new(spec.seed), spec.workers)?;
        let mut row = vec![
            format_coefficient(tail),
            target_user.to_string(),
            format_probability(report.step_outage(n, n)),
            format_probability(report.step_outage(k, n)),
            format_coefficient(boundary),
        ];
        row.extend(echo.iter().cloned());
        table.rows.push(row);
    }
    Ok(table)
}

pub fn run_sweep(cfg: &SystemConfig, spec: &SweepSpec) -> Result<SweepTable> {
    match spec.kind {
        SweepKind::A1 => run_a1_sweep(cfg, spec),
        SweepKind::Interference { .. } => run_interference_sweep(cfg, spec),
    }
}
