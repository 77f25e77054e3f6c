use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use swipt_ia::allocation::PaOptions;
use swipt_ia::experiments::{
    alpha_grid, run_bounds_experiment, run_calibration, run_pa_profile, run_power_rate_region,
    run_pso_alpha_sweep, run_selection_sweep, ExperimentSpec, PsoRows, Sweep, PA_PROFILE_ALPHA,
    PSO_PROFILE_ALPHA,
};
use swipt_ia::metrics::PowerMode;
use swipt_ia::report::{write_csv, CsvRecord};
use swipt_ia::{Error, IaOptions, NetworkConfig};

/// Monte Carlo experiments for wireless information and power transfer in
/// interference-alignment networks. Every subcommand writes CSV.
#[derive(Parser, Debug)]
#[command(name = "swipt-ia", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transmit power reaching the target mean received SNR.
    Calibrate(Common),
    /// Harvested power against its upper bound, per slot.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// One-based users to report.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        user: Vec<usize>,
    },
    /// Round-robin and PRR-ranked selection of harvesting users.
    Selection {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        counts: Counts,
    },
    /// Closed-form power splitting over a weight sweep.
    Pso {
        #[command(flatten)]
        common: Common,
        /// Weight values; a uniform sweep by default, one per user with --per-user.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alpha: Option<Vec<f64>>,
        /// Treat --alpha as one weight per user.
        #[arg(long)]
        per_user: bool,
    },
    /// Joint power splitting and power allocation, per-user averages.
    PsoPa {
        #[command(flatten)]
        common: Common,
        /// One weight per user, or a single weight for every user.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alpha: Option<Vec<f64>>,
    },
    /// Power-rate curves of all four methods.
    Region {
        #[command(flatten)]
        common: Common,
        /// Uniform weight grid of the splitting curves.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alpha: Option<Vec<f64>>,
        /// Number of evenly spaced weights when --alpha is absent.
        #[arg(long, default_value_t = 21)]
        alpha_points: usize,
        #[command(flatten)]
        counts: Counts,
    },
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct Counts {
    /// Numbers of information-decoding users (default 0..K).
    #[arg(long, value_delimiter = ',')]
    id_users: Option<Vec<usize>>,
    /// Numbers of dedicated harvesting users.
    #[arg(long, value_delimiter = ',')]
    eh_users: Option<Vec<usize>>,
}

impl Counts {
    fn id_counts(&self, users: usize) -> Result<Vec<usize>, Error> {
        if let Some(ids) = &self.id_users {
            return Ok(ids.clone());
        }
        if let Some(eh) = &self.eh_users {
            return eh
                .iter()
                .map(|&l| {
                    users.checked_sub(l).ok_or_else(|| {
                        Error::Selection(format!("{l} EH users with only {users} users"))
                    })
                })
                .collect();
        }
        Ok((0..=users).collect())
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Inst,
    Expected,
}

#[derive(Args, Debug)]
struct Common {
    /// Key=value file with defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    users: usize,
    #[arg(long, default_value_t = 3)]
    tx_antennas: usize,
    #[arg(long, default_value_t = 3)]
    rx_antennas: usize,
    /// Target mean received SNR in dB.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    snr_db: f64,
    /// Slots drawn (default 10000 for bounds, 5000 otherwise).
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Inst)]
    mode: Mode,
    /// Random restarts of the allocation solver.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Alignment leakage tolerance.
    #[arg(long, default_value_t = 1e-8)]
    leak_tol: f64,
    /// Alignment iteration cap.
    #[arg(long, default_value_t = 5000)]
    ia_iters: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn spec(&self, name: &str, sweep: Sweep, default_slots: usize) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(
            name,
            NetworkConfig::new(self.users, self.tx_antennas, self.rx_antennas),
            sweep,
        );
        spec.slots = self.slots.unwrap_or(default_slots);
        spec.seed = self.seed;
        spec.snr_db = self.snr_db;
        spec.mode = match self.mode {
            Mode::Inst => PowerMode::Instantaneous,
            Mode::Expected => PowerMode::Expected,
        };
        spec.ia = IaOptions {
            max_iters: self.ia_iters,
            leak_tol: self.leak_tol,
            seed: self.seed,
            record_history: false,
        };
        spec.pa = PaOptions {
            restarts: self.restarts,
            seed: self.seed,
            ..PaOptions::default()
        };
        spec
    }
}

fn emit<R: CsvRecord>(out: Option<&Path>, rows: &[R]) -> Result<(), Error> {
    let io_err = |e: io::Error| Error::Io(e.to_string());
    match out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write_csv(&mut w, rows)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_csv(&mut w, rows)?;
            w.flush().map_err(io_err)
        }
    }
}

fn one_based(users: &[usize]) -> Result<Vec<usize>, Error> {
    users
        .iter()
        .map(|&k| {
            k.checked_sub(1)
                .ok_or_else(|| Error::Config("users are numbered from 1".into()))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Calibrate(common) => {
            let spec = common.spec("calibrate", Sweep::Users(vec![0]), 5000);
            emit(common.out.as_deref(), &[run_calibration(&spec)?])
        }
        Command::Bounds { common, user } => {
            let spec = common.spec("bounds", Sweep::Users(one_based(&user)?), 10_000);
            emit(common.out.as_deref(), &run_bounds_experiment(&spec)?)
        }
        Command::Selection { common, counts } => {
            let ids = counts.id_counts(common.users)?;
            let spec = common.spec("selection", Sweep::IdUsers(ids), 5000);
            emit(common.out.as_deref(), &run_selection_sweep(&spec)?)
        }
        Command::Pso {
            common,
            alpha,
            per_user,
        } => {
            let sweep = if per_user {
                let alpha = alpha.unwrap_or_else(|| PSO_PROFILE_ALPHA.to_vec());
                Sweep::AlphaProfile(alpha)
            } else {
                Sweep::Alpha(alpha.unwrap_or_else(|| alpha_grid(21)))
            };
            let spec = common.spec("pso", sweep, 5000);
            match run_pso_alpha_sweep(&spec)? {
                PsoRows::Uniform(rows) => emit(common.out.as_deref(), &rows),
                PsoRows::PerUser(rows) => emit(common.out.as_deref(), &rows),
            }
        }
        Command::PsoPa { common, alpha } => {
            let alpha = match alpha {
                Some(a) if a.len() == 1 => vec![a[0]; common.users],
                Some(a) => a,
                None => PA_PROFILE_ALPHA.to_vec(),
            };
            let spec = common.spec("pso-pa", Sweep::AlphaProfile(alpha), 5000);
            emit(common.out.as_deref(), &run_pa_profile(&spec)?)
        }
        Command::Region {
            common,
            alpha,
            alpha_points,
            counts,
        } => {
            let sweep = Sweep::Region {
                alpha: alpha.unwrap_or_else(|| alpha_grid(alpha_points)),
                id_users: counts.id_counts(common.users)?,
            };
            let spec = common.spec("region", sweep, 5000);
            emit(common.out.as_deref(), &run_power_rate_region(&spec)?)
        }
    }
}

/// Turns `key = value` lines into `--key value` arguments. `#` starts a
/// comment; `true`/`false` toggle switches.
fn config_args(path: &Path) -> Result<Vec<String>, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut args = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected key=value",
                path.display(),
                n + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if key == "config" {
            return Err(Error::Config(
                "config files cannot include other config files".into(),
            ));
        }
        match value.trim() {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            value => {
                args.push(format!("--{key}"));
                args.push(value.to_string());
            }
        }
    }
    Ok(args)
}

/// Splices the config file's arguments in front of the command-line flags so
/// that later flags win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, Error> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let (Some(path), true) = (path, args.len() > 1) else {
        return Ok(args);
    };
    let mut out = args[..2].to_vec();
    out.extend(config_args(Path::new(&path))?);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("swipt-ia: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swipt-ia: {e}");
            ExitCode::FAILURE
        }
    }
}
