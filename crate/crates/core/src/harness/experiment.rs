use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{dbf_baseline, pshbf_baseline, run_swhbf_detailed};
use super::power::{energy_efficiency, power_total, Architecture, PowerModel, PsBits};
use crate::channel::{generate_channel, SystemConfig};
use crate::error::{HbfError, Result};
use crate::rng::derive_seed;
use crate::solvers::{SolverKind, SolverParams};
use crate::squint::bsr_closed;

pub const CSV_HEADER: [&str; 12] = [
    "trial",
    "seed",
    "solver",
    "snr_db",
    "bandwidth_hz",
    "bsr",
    "avg_se_bps_hz",
    "power_w",
    "ee",
    "runtime_ms",
    "iterations",
    "termination",
];

/// Beamforming pipeline evaluated by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Sw(SolverKind),
    Dbf,
    PsHbf(PsBits),
}

impl Scheme {
    pub fn architecture(&self) -> Architecture {
        match self {
            Scheme::Sw(_) => Architecture::SwHbf,
            Scheme::Dbf => Architecture::Dbf,
            Scheme::PsHbf(bits) => Architecture::PsHbf(*bits),
        }
    }

    /// Tag written to the `solver` column.
    pub fn tag(&self) -> String {
        match self {
            Scheme::Sw(kind) => kind.name().to_string(),
            Scheme::Dbf => "dbf".into(),
            Scheme::PsHbf(bits) => format!("ps-hbf-simple:{bits}"),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for Scheme {
    type Err = HbfError;

    /// Accepts solver names, `dbf`, and `ps-hbf[:bits]` (default 4 bits).
    fn from_str(s: &str) -> Result<Self> {
        if s == "dbf" {
            return Ok(Scheme::Dbf);
        }
        if let Some(rest) = s.strip_prefix("ps-hbf") {
            let rest = rest.strip_prefix("-simple").unwrap_or(rest);
            return match rest.strip_prefix(':') {
                Some(bits) => Ok(Scheme::PsHbf(bits.parse()?)),
                None if rest.is_empty() => Ok(Scheme::PsHbf(PsBits::Finite(4))),
                None => Err(HbfError::InvalidConfig(format!("unknown solver '{s}'"))),
            };
        }
        Ok(Scheme::Sw(s.parse()?))
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub snr_db: f64,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub config: SystemConfig,
    pub scheme: Scheme,
    /// Empty means the SNR implied by the configuration.
    pub snr_db: Vec<f64>,
    /// Empty means the configured bandwidth.
    pub bandwidth_hz: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub params: SolverParams,
    pub power: PowerModel,
    /// Record wall-clock runtimes; off by default so output files are reproducible.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(config: SystemConfig, scheme: Scheme, trials: usize, master_seed: u64) -> Self {
        Self {
            config,
            scheme,
            snr_db: Vec::new(),
            bandwidth_hz: Vec::new(),
            trials,
            master_seed,
            params: SolverParams::default(),
            power: PowerModel::default(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.params.validate()?;
        self.power.validate()?;
        if self.trials == 0 {
            return Err(HbfError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.snr_db.iter().any(|x| !x.is_finite()) {
            return Err(HbfError::InvalidConfig("SNR grid has a non-finite value".into()));
        }
        for cell in self.cells() {
            self.config.clone().with_bandwidth(cell.bandwidth_hz).validate()?;
        }
        Ok(())
    }

    /// Sweep cells, SNR-major.
    pub fn cells(&self) -> Vec<Cell> {
        let snrs = if self.snr_db.is_empty() { vec![self.config.snr_db()] } else { self.snr_db.clone() };
        let bws = if self.bandwidth_hz.is_empty() { vec![self.config.bandwidth_hz] } else { self.bandwidth_hz.clone() };
        snrs.iter()
            .flat_map(|&snr_db| bws.iter().map(move |&bandwidth_hz| Cell { snr_db, bandwidth_hz }))
            .collect()
    }

    fn cell_config(&self, cell: Cell) -> SystemConfig {
        let cfg = self.config.clone().with_bandwidth(cell.bandwidth_hz);
        if self.snr_db.is_empty() {
            cfg
        } else {
            cfg.with_snr_db(cell.snr_db)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub solver: String,
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub bsr: f64,
    /// `None` when the trial failed.
    pub avg_se: Option<f64>,
    pub power_w: f64,
    pub ee: Option<f64>,
    /// `avg_se * B / power_w`, bits per joule.
    pub ee_bits_per_joule: Option<f64>,
    pub runtime_ms: f64,
    pub iterations: usize,
    pub termination: String,
}

impl TrialResult {
    pub fn succeeded(&self) -> bool {
        self.avg_se.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub cell: Cell,
    pub successes: usize,
    pub failures: usize,
    pub mean_se: f64,
    pub std_se: f64,
    pub mean_ee: f64,
    pub std_ee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
}

/// Per-trial seed: a splitmix64 mix of the master seed and the trial index.
/// The same seed is used in every sweep cell so cells share channel draws.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, trial as u64)
}

fn run_trial(spec: &ExperimentSpec, cell_idx: usize, cell: Cell, trial: usize) -> TrialResult {
    let seed = trial_seed(spec.master_seed, trial);
    let cfg = spec.cell_config(cell);
    let started = Instant::now();
    let power_w = power_total(spec.scheme.architecture(), &cfg, &spec.power).unwrap_or(f64::NAN);
    let outcome: Result<(f64, usize, String)> = generate_channel(&cfg, seed).and_then(|h| match spec.scheme {
        Scheme::Sw(kind) => {
            let params = SolverParams { seed: derive_seed(seed, 0), ..spec.params.clone() };
            run_swhbf_detailed(&cfg, &h, kind, &params)
                .map(|(sol, stats)| (sol.avg_se(), stats.iterations(), stats.precoder.termination.to_string()))
        }
        Scheme::Dbf => dbf_baseline(&cfg, &h).map(|se| (se, 0, "closed-form".into())),
        Scheme::PsHbf(bits) => pshbf_baseline(&cfg, &h, bits).map(|se| (se, 0, "closed-form".into())),
    });
    let runtime_ms = if spec.timing { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let (avg_se, iterations, termination) = match outcome {
        Ok((se, it, term)) => (Some(se), it, term),
        Err(e) => (None, 0, format!("failed: {e}")),
    };
    let ee = avg_se.and_then(|se| energy_efficiency(se, power_w).ok());
    TrialResult {
        cell: cell_idx,
        trial,
        seed,
        solver: spec.scheme.tag(),
        snr_db: cell.snr_db,
        bandwidth_hz: cell.bandwidth_hz,
        bsr: bsr_closed(cfg.n_tx, cfg.frac_bw(), cfg.spacing),
        avg_se,
        power_w,
        ee,
        ee_bits_per_joule: avg_se.map(|se| se * cfg.bandwidth_hz / power_w),
        runtime_ms,
        iterations,
        termination,
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate(cells: &[Cell], trials: &[TrialResult]) -> Vec<Aggregate> {
    cells
        .iter()
        .enumerate()
        .map(|(i, &cell)| {
            let rows: Vec<&TrialResult> = trials.iter().filter(|t| t.cell == i).collect();
            let se: Vec<f64> = rows.iter().filter_map(|t| t.avg_se).collect();
            let ee: Vec<f64> = rows.iter().filter_map(|t| t.ee).collect();
            let (mean_se, std_se) = mean_std(&se);
            let (mean_ee, std_ee) = mean_std(&ee);
            Aggregate { cell, successes: se.len(), failures: rows.len() - se.len(), mean_se, std_se, mean_ee, std_ee }
        })
        .collect()
}

/// Runs every (cell, trial) pair on the current rayon pool. Output order is
/// (cell, trial) regardless of scheduling.
pub fn monte_carlo(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, Cell, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| (0..spec.trials).map(move |t| (i, c, t)))
        .collect();
    let trials: Vec<TrialResult> = jobs.par_iter().map(|&(i, c, t)| run_trial(spec, i, c, t)).collect();
    let aggregates = aggregate(&cells, &trials);
    Ok(ExperimentOutput { trials, aggregates })
}

/// Same as [`monte_carlo`] on a dedicated pool of `threads` workers.
pub fn monte_carlo_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HbfError::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| monte_carlo(spec))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(out: W, trials: &[TrialResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for t in trials {
        w.write_record([
            t.trial.to_string(),
            t.seed.to_string(),
            t.solver.clone(),
            t.snr_db.to_string(),
            t.bandwidth_hz.to_string(),
            t.bsr.to_string(),
            opt(t.avg_se),
            t.power_w.to_string(),
            opt(t.ee),
            t.runtime_ms.to_string(),
            t.iterations.to_string(),
            t.termination.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        SystemConfig { n_tx: 8, n_rx: 8, n_rf: 2, n_streams: 2, n_subcarriers: 8, ..SystemConfig::default() }
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("dbf".parse::<Scheme>().unwrap(), Scheme::Dbf);
        assert_eq!("ps-hbf".parse::<Scheme>().unwrap(), Scheme::PsHbf(PsBits::Finite(4)));
        assert_eq!("ps-hbf:inf".parse::<Scheme>().unwrap(), Scheme::PsHbf(PsBits::Infinite));
        assert_eq!("ps-hbf:1".parse::<Scheme>().unwrap(), Scheme::PsHbf(PsBits::Finite(1)));
        assert_eq!("pga-ts".parse::<Scheme>().unwrap(), Scheme::Sw(SolverKind::PgaTs));
        assert_eq!(Scheme::PsHbf(PsBits::Finite(2)).tag(), "ps-hbf-simple:2");
        assert!("ps-hbf:3".parse::<Scheme>().is_err());
        assert!("ps-hbfx".parse::<Scheme>().is_err());
        assert!("nope".parse::<Scheme>().is_err());
    }

    #[test]
    fn stats() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_trial_aggregate() {
        let spec = ExperimentSpec::new(small(), Scheme::Dbf, 1, 3);
        let out = monte_carlo(&spec).unwrap();
        assert_eq!(out.trials.len(), 1);
        assert_eq!(out.aggregates[0].mean_se, out.trials[0].avg_se.unwrap());
        assert_eq!(out.aggregates[0].std_se, 0.0);
    }

    #[test]
    fn csv_header_and_order() {
        let mut spec = ExperimentSpec::new(small(), Scheme::Dbf, 3, 1);
        spec.snr_db = vec![0.0, 10.0];
        let out = monte_carlo(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &out.trials).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let trials: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(trials, ["0", "1", "2", "0", "1", "2"]);
        assert_eq!(out.trials[0].seed, out.trials[3].seed);
    }

    #[test]
    fn failures_are_recorded() {
        let mut spec = ExperimentSpec::new(small(), Scheme::Sw(SolverKind::Es), 2, 1);
        spec.config = SystemConfig { n_tx: 16, n_rx: 16, ..small() };
        let out = monte_carlo(&spec).unwrap();
        assert!(out.trials.iter().all(|t| !t.succeeded() && t.termination.starts_with("failed")));
        assert_eq!(out.aggregates[0].failures, 2);
        assert_eq!(out.aggregates[0].successes, 0);
    }
}
