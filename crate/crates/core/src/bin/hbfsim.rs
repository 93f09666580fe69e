use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use hbfsim::channel::SystemConfig;
use hbfsim::error::{HbfError, Result};
use hbfsim::harness::{monte_carlo_with_threads, write_csv, ExperimentOutput, ExperimentSpec, PowerModel, Scheme};
use hbfsim::solvers::SolverParams;
use hbfsim::squint::{
    bsr_closed, bsr_exact, eag_ps_approx, eag_ps_exact, eag_sw_approx, eag_sw_exact, SquintParams, SwitchVector,
};

#[derive(Parser)]
#[command(name = "hbfsim", version, about = "Wideband switch-based hybrid beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Beam squint ratio.
    Bsr {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        fc: f64,
        #[arg(long)]
        bw: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 128)]
        k: usize,
        /// Evaluate the finite-K sum instead of the closed form.
        #[arg(long)]
        exact: bool,
    },
    /// Expected array gain of a phase-shifter or switch array.
    Eag {
        #[arg(long, value_enum)]
        array: ArrayKind,
        /// `all-ones` or a file of 0/1 entries.
        #[arg(long, default_value = "all-ones")]
        w: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        fc: f64,
        #[arg(long)]
        bw: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 128)]
        k: usize,
    },
    /// Monte Carlo run at one operating point.
    Run {
        #[command(flatten)]
        common: Common,
        /// Override the SNR implied by the configuration.
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Monte Carlo sweep over SNR or bandwidth.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// `start:stop:step`, stop included.
        #[arg(long)]
        grid: String,
    },
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    solver: String,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock runtimes (makes the CSV run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArrayKind {
    Ps,
    Sw,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    Snr,
    Bandwidth,
}

/// Config file: either a bare system configuration or a wrapper with
/// optional solver and power-model sections.
#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Full {
        system: SystemConfig,
        #[serde(default)]
        solver: Option<SolverParams>,
        #[serde(default)]
        power: Option<PowerModel>,
    },
    System(SystemConfig),
}

fn load_config(path: &Path) -> Result<(SystemConfig, SolverParams, PowerModel)> {
    let text = fs::read_to_string(path)
        .map_err(|e| HbfError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let parsed: ConfigFile =
        serde_json::from_str(&text).map_err(|e| HbfError::InvalidConfig(format!("{}: {e}", path.display())))?;
    let (system, solver, power) = match parsed {
        ConfigFile::Full { system, solver, power } => (system, solver.unwrap_or_default(), power.unwrap_or_default()),
        ConfigFile::System(system) => (system, SolverParams::default(), PowerModel::default()),
    };
    system.validate()?;
    Ok((system, solver, power))
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || HbfError::InvalidConfig(format!("grid '{text}' is not start:stop:step"));
    let parts: Vec<f64> = text.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn load_switches(spec: &str, n: usize) -> Result<SwitchVector> {
    if spec == "all-ones" {
        return Ok(SwitchVector::all_ones(n));
    }
    let text = fs::read_to_string(spec).map_err(|e| HbfError::InvalidConfig(format!("cannot read {spec}: {e}")))?;
    let entries = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u8>().map_err(|_| HbfError::InvalidConfig(format!("bad switch entry '{s}'"))))
        .collect::<Result<Vec<_>>>()?;
    SwitchVector::new(entries).map_err(|e| HbfError::InvalidConfig(e.to_string()))
}

fn squint_params(n: usize, fc: f64, bw: f64, delta: f64, k: usize) -> Result<SquintParams> {
    SquintParams::from_frequencies(n, fc, bw, delta, k).map_err(|e| HbfError::InvalidConfig(e.to_string()))
}

fn run_experiment(common: &Common, snr: Vec<f64>, bandwidth: Vec<f64>) -> Result<()> {
    let (config, params, power) = load_config(&common.config)?;
    let scheme: Scheme = common.solver.parse()?;
    let spec = ExperimentSpec {
        config,
        scheme,
        snr_db: snr,
        bandwidth_hz: bandwidth,
        trials: common.trials,
        master_seed: common.seed,
        params,
        power,
        timing: common.timing,
    };
    spec.validate()?;
    let threads = common.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(HbfError::InvalidConfig("--threads must be at least 1".into()));
    }
    let out = monte_carlo_with_threads(&spec, threads)?;
    let file = File::create(&common.out)
        .map_err(|e| HbfError::InvalidConfig(format!("cannot create {}: {e}", common.out.display())))?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, &out.trials)?;
    w.flush()?;
    report(&out)
}

fn report(out: &ExperimentOutput) -> Result<()> {
    let mut err = io::stderr().lock();
    for a in &out.aggregates {
        writeln!(
            err,
            "snr_db={} bandwidth_hz={} ok={} failed={} mean_se={:.6} std_se={:.6} mean_ee={:.6}",
            a.cell.snr_db, a.cell.bandwidth_hz, a.successes, a.failures, a.mean_se, a.std_se, a.mean_ee
        )?;
    }
    if out.trials.iter().all(|t| !t.succeeded()) {
        let infeasible = out.trials.iter().any(|t| t.termination.contains("infeasible"));
        let first = out.trials.first().map(|t| t.termination.clone()).unwrap_or_default();
        return Err(if infeasible { HbfError::Infeasible(first) } else { HbfError::Numeric(first) });
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bsr { n, fc, bw, delta, k, exact } => {
            let p = squint_params(n, fc, bw, delta, k)?;
            let v = if exact { bsr_exact(&p) } else { bsr_closed(n, p.frac_bw, delta) };
            println!("{v}");
        }
        Command::Eag { array, w, n, fc, bw, delta, k } => {
            let p = squint_params(n, fc, bw, delta, k)?;
            let (exact, approx) = match array {
                ArrayKind::Ps => (eag_ps_exact(&p), eag_ps_approx(n, p.frac_bw, delta)),
                ArrayKind::Sw => {
                    let sw = load_switches(&w, n)?;
                    let exact = eag_sw_exact(&sw, &p).map_err(|e| HbfError::InvalidConfig(e.to_string()))?;
                    (exact, eag_sw_approx(&sw)?)
                }
            };
            println!("exact\t{exact}");
            println!("approx\t{approx}");
        }
        Command::Run { common, snr_db } => run_experiment(&common, snr_db.into_iter().collect(), Vec::new())?,
        Command::Sweep { common, param, grid } => {
            let values = parse_grid(&grid)?;
            match param {
                SweepParam::Snr => run_experiment(&common, values, Vec::new())?,
                SweepParam::Bandwidth => run_experiment(&common, Vec::new(), values)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                HbfError::Numeric(_) | HbfError::Io(_) => 1,
                other => other.exit_code(),
            };
            ExitCode::from(code as u8)
        }
    }
}
