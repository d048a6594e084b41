use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use noma_core::allocation::{
    decode_thresholds, feasibility_check, oma_threshold, qos_fixed_allocation, tail_limits,
    PowerAllocation,
};
use noma_core::analytic::OrderedGainModel;
use noma_core::outage::{estimate_outage, Simulation};
use noma_core::plot::{emit_plot_script, FigureKind};
use noma_core::settings::Settings;
use noma_core::sweep::{run_sweep, Grid, SweepKind, SweepSpec, DEFAULT_TRIALS};
use noma_core::{Error, Result, SystemConfig};

#[derive(Parser, Debug)]
#[command(name = "noma", version, about = "NOMA power allocation and outage toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the fixed QoS power allocation.
    Alloc(Common),
    /// Print the interference limits 2^(-n R0).
    Limits(Common),
    /// Print the per-user decode thresholds and the OMA threshold.
    Thresholds(Common),
    /// Print exact per-rank outage probabilities at the OMA threshold.
    Analytic {
        #[command(flatten)]
        common: Common,
        /// Only print this 1-based rank.
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Monte Carlo outage estimate for one allocation.
    Simulate(Common),
    /// Run a figure sweep, write its CSV and a gnuplot script next to it.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Option<SweepArg>,
        #[arg(long)]
        target_user: Option<usize>,
        #[arg(long)]
        grid_start: Option<f64>,
        #[arg(long)]
        grid_stop: Option<f64>,
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Write a gnuplot script for an existing sweep CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<SweepArg>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepArg {
    A1,
    Interference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of users K.
    #[arg(long)]
    users: Option<usize>,
    /// Transmit antennas M.
    #[arg(long)]
    tx_antennas: Option<usize>,
    /// Receive antennas per user N.
    #[arg(long)]
    rx_antennas: Option<usize>,
    /// QoS minimum rate R0 in bits/s/Hz.
    #[arg(long)]
    rate: Option<f64>,
    /// Linear transmit SNR xi.
    #[arg(long)]
    snr: Option<f64>,
    /// Channel entry variance beta.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Explicit comma-separated power coefficients instead of the fixed allocation.
    #[arg(long, value_delimiter = ',')]
    coeffs: Option<Vec<f64>>,
    /// Output file (sweeps).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let flags = Settings {
            users: self.users,
            tx_antennas: self.tx_antennas,
            rx_antennas: self.rx_antennas,
            rate: self.rate,
            snr: self.snr,
            beta: self.beta,
            trials: self.trials,
            seed: self.seed,
            workers: self.workers,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            ..Settings::default()
        };
        Ok(file.overridden_by(flags))
    }
}

/// Missing values default to the reference setup (K=4, M=1, N=4, xi=3,
/// beta=1); R0 has no default.
fn system_config(s: &Settings) -> Result<SystemConfig> {
    let rate = s
        .rate
        .ok_or_else(|| Error::InvalidParameter("the QoS rate R0 is required (--rate)".into()))?;
    SystemConfig::new(
        s.users.unwrap_or(4),
        s.tx_antennas.unwrap_or(1),
        s.rx_antennas.unwrap_or(4),
        rate,
        s.snr.unwrap_or(3.0),
        s.beta.unwrap_or(1.0),
    )
}

fn allocation(common: &Common, cfg: &SystemConfig) -> Result<PowerAllocation> {
    match &common.coeffs {
        Some(c) if c.len() != cfg.users => Err(Error::InvalidParameter(format!(
            "{} coefficients given for K = {}",
            c.len(),
            cfg.users
        ))),
        Some(c) => PowerAllocation::partial(c.clone()),
        None => qos_fixed_allocation(cfg.users, cfg.rate),
    }
}

/// Six decimals with trailing zeros removed.
fn short(x: f64) -> String {
    if x.is_infinite() {
        return "inf".into();
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn print_values(format: Format, column: &str, values: &[f64]) {
    match format {
        Format::Text => {
            let parts: Vec<String> = values.iter().map(|v| short(*v)).collect();
            println!("{}", parts.join(", "));
        }
        Format::Csv => {
            println!("user,{column}");
            for (n, v) in values.iter().enumerate() {
                println!("{},{}", n + 1, v);
            }
        }
    }
}

fn sweep_kind(arg: Option<SweepArg>, s: &Settings, target: Option<usize>) -> Result<SweepKind> {
    let arg = match arg {
        Some(a) => a,
        None => match s.sweep.as_deref() {
            Some("a1") | None => SweepArg::A1,
            Some("interference") => SweepArg::Interference,
            Some(other) => {
                return Err(Error::InvalidParameter(format!("unknown sweep kind {other}")))
            }
        },
    };
    Ok(match arg {
        SweepArg::A1 => SweepKind::A1,
        SweepArg::Interference => SweepKind::Interference {
            target_user: target.or(s.target_user).ok_or_else(|| {
                Error::InvalidParameter("interference sweep needs --target-user".into())
            })?,
        },
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Alloc(common) => {
            let cfg = system_config(&common.settings()?)?;
            let alloc = qos_fixed_allocation(cfg.users, cfg.rate)?;
            print_values(common.format, "coefficient", alloc.coeffs());
        }
        Command::Limits(common) => {
            let cfg = system_config(&common.settings()?)?;
            print_values(common.format, "limit", &tail_limits(cfg.users, cfg.rate));
        }
        Command::Thresholds(common) => {
            let cfg = system_config(&common.settings()?)?;
            let alloc = allocation(&common, &cfg)?;
            let t = decode_thresholds(&alloc, cfg.rate, cfg.snr);
            print_values(common.format, "threshold", t.as_slice());
            let verdict = feasibility_check(&alloc, cfg.rate);
            if common.format == Format::Text {
                println!("oma threshold: {}", short(oma_threshold(cfg.users, cfg.rate, cfg.snr)));
                if !verdict.is_feasible() {
                    let users: Vec<String> =
                        verdict.violating_users.iter().map(|n| (n + 1).to_string()).collect();
                    println!("certain outage for users: {}", users.join(", "));
                }
            }
        }
        Command::Analytic { common, rank } => {
            let cfg = system_config(&common.settings()?)?;
            let model = OrderedGainModel::from_config(&cfg)?;
            let t = oma_threshold(cfg.users, cfg.rate, cfg.snr);
            let probs = (0..cfg.users)
                .map(|n| model.ordered_cdf(n, t))
                .collect::<Result<Vec<_>>>()?;
            match rank {
                Some(r) if r == 0 || r > cfg.users => {
                    return Err(Error::InvalidParameter(format!(
                        "rank must be in 1..={}, got {r}",
                        cfg.users
                    )))
                }
                Some(r) => println!("{}", short(probs[r - 1])),
                None => print_values(common.format, "outage", &probs),
            }
        }
        Command::Simulate(common) => {
            let s = common.settings()?;
            let cfg = system_config(&s)?;
            let alloc = allocation(&common, &cfg)?;
            let sim = Simulation::new(s.trials.unwrap_or(DEFAULT_TRIALS), s.seed.unwrap_or(1))
                .with_workers(s.workers.unwrap_or(1));
            let report = estimate_outage(&cfg, &alloc, &sim)?;
            println!("user,noma_outage,oma_outage,ci");
            for n in 0..cfg.users {
                println!(
                    "{},{},{},{}",
                    n + 1,
                    report.per_user_noma[n],
                    report.per_user_oma[n],
                    report.ci_halfwidth[n]
                );
            }
        }
        Command::Sweep {
            common,
            kind,
            target_user,
            grid_start,
            grid_stop,
            grid_step,
        } => {
            let s = common.settings()?;
            let cfg = system_config(&s)?;
            let grid = Grid::new(
                grid_start.or(s.grid_start).unwrap_or(0.0),
                grid_stop.or(s.grid_stop).unwrap_or(1.0),
                grid_step.or(s.grid_step).unwrap_or(0.01),
            )?;
            let spec = SweepSpec {
                kind: sweep_kind(kind, &s, target_user)?,
                grid,
                trials: s.trials.unwrap_or(DEFAULT_TRIALS),
                seed: s.seed.unwrap_or(1),
                workers: s.workers.unwrap_or(1),
            };
            let out = s
                .out
                .clone()
                .ok_or_else(|| Error::InvalidParameter("sweep needs --out <file.csv>".into()))?;
            let out = PathBuf::from(out);
            let table = run_sweep(&cfg, &spec)?;
            table.write_file(&out)?;
            let figure = match spec.kind {
                SweepKind::A1 => FigureKind::A1Sweep,
                SweepKind::Interference { .. } => FigureKind::InterferenceSweep,
            };
            let script = emit_plot_script(&out, figure)?;
            eprintln!("wrote {} and {}", out.display(), script.display());
        }
        Command::Plot { csv, kind } => {
            let figure = match kind {
                Some(SweepArg::A1) => FigureKind::A1Sweep,
                Some(SweepArg::Interference) => FigureKind::InterferenceSweep,
                None => detect(&csv)?,
            };
            let script = emit_plot_script(&csv, figure)?;
            println!("{}", script.display());
        }
    }
    Ok(())
}

fn detect(csv: &Path) -> Result<FigureKind> {
    FigureKind::detect(&noma_core::sweep::SweepTable::read_file(csv)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
