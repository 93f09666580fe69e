//! Search algorithms for the binary analog beamformer.
//!
//! Candidates are handled as row-major bit vectors; a candidate is feasible
//! when its `N x N_RF` matrix has full column rank over the reals.

mod baseline;
mod hybrid;
mod pga;
mod tabu;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamform::{f0_qr_value, f1_value, gradient_f0, AnalogBeamformer, EffectiveChannelSet, Side};
use crate::error::{HbfError, Result};
use crate::linalg::{self, RMat};

pub use baseline::{exhaustive_search, random_analog, EXHAUSTIVE_LIMIT, RANDOM_ATTEMPTS};
pub use hybrid::{npga_ts, pga_tbrs, pga_ts, ROUNDING_ATTEMPTS};
pub use pga::{pga, refine, stochastic_round, PgaOutcome, PGA_RETRIES};
pub use tabu::{neighbor_set, tabu_search};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    #[default]
    F0,
    F1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// `None` selects four times the size of the search space.
    pub tabu_len: Option<usize>,
    pub max_iter: usize,
    pub patience: usize,
    pub refine_eps: f64,
    pub pga_step_c: f64,
    pub pga_max_iter: usize,
    pub objective_kind: ObjectiveKind,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tabu_len: None,
            max_iter: 300,
            patience: 10,
            refine_eps: 0.1,
            pga_step_c: 3.0,
            pga_max_iter: 500,
            objective_kind: ObjectiveKind::F0,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tabu_len == Some(0) {
            return Err(HbfError::InvalidConfig("tabu_len must be at least 1".into()));
        }
        if self.max_iter == 0 || self.pga_max_iter == 0 {
            return Err(HbfError::InvalidConfig("iteration limits must be at least 1".into()));
        }
        if !(self.refine_eps > 0.0 && self.refine_eps < 0.5) {
            return Err(HbfError::InvalidConfig(format!("refine_eps {} outside (0, 0.5)", self.refine_eps)));
        }
        if !(self.pga_step_c > 0.0) {
            return Err(HbfError::InvalidConfig(format!("pga_step_c must be positive, got {}", self.pga_step_c)));
        }
        Ok(())
    }

    fn tabu_len_for(&self, space: usize) -> usize {
        self.tabu_len.unwrap_or(4 * space).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Patience,
    MaxIter,
    /// No admissible candidate was left to move to or sample.
    Exhausted,
    /// The rounded relaxed solution was already binary and feasible.
    Immediate,
    Enumerated,
    Sampled,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Termination::Patience => "patience",
            Termination::MaxIter => "max-iter",
            Termination::Exhausted => "exhausted",
            Termination::Immediate => "immediate",
            Termination::Enumerated => "enumerated",
            Termination::Sampled => "sampled",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub best: f64,
    pub candidate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
    /// Objective evaluations on binary candidates.
    pub evaluations: usize,
    /// Bits of the candidate moved to (or sampled) at each iteration.
    pub moves: Vec<Vec<u8>>,
    /// Size of the non-integer index set when a relaxed stage ran.
    pub reduced_size: Option<usize>,
    /// A hybrid method could not seed its reduced search and ran plain tabu search.
    pub fell_back: bool,
}

impl SearchTrace {
    pub(crate) fn new(termination: Termination) -> Self {
        Self { records: Vec::new(), termination, evaluations: 0, moves: Vec::new(), reduced_size: None, fell_back: false }
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn best_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.best)
    }
}

/// Candidate over the non-integer positions of a refined relaxed solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedCandidate {
    pub bits: Vec<u8>,
    pub index_set: Vec<usize>,
}

impl ReducedCandidate {
    pub fn new(bits: Vec<u8>, index_set: Vec<usize>) -> Result<Self> {
        if bits.len() != index_set.len() {
            return Err(HbfError::InvalidArgument(format!(
                "{} bits for an index set of size {}",
                bits.len(),
                index_set.len()
            )));
        }
        Ok(Self { bits, index_set })
    }

    /// Writes the bits into a copy of `base` at the (row-major) index set.
    pub fn recover(&self, base: &RMat) -> RMat {
        fill(base, &self.index_set, &self.bits)
    }
}

pub(crate) fn fill(base: &RMat, index_set: &[usize], bits: &[u8]) -> RMat {
    let mut out = base.clone();
    let cols = base.ncols();
    for (&idx, &b) in index_set.iter().zip(bits) {
        out[(idx / cols, idx % cols)] = f64::from(b);
    }
    out
}

/// Objective over real `N x N_RF` matrices.
pub trait Objective: Sync {
    fn shape(&self) -> (usize, usize);

    fn value(&self, f: &RMat) -> f64;

    fn gradient(&self, _f: &RMat) -> Result<RMat> {
        Err(HbfError::InvalidArgument("objective has no gradient".into()))
    }

    fn side(&self) -> Side {
        Side::Precoder
    }
}

/// The analog design objective on one side of the link.
#[derive(Debug, Clone)]
pub struct AnalogObjective<'a> {
    pub eff: &'a EffectiveChannelSet,
    /// `gamma / sigma^2`.
    pub scale: f64,
    pub n_rf: usize,
    pub n_streams: usize,
    pub kind: ObjectiveKind,
    pub side: Side,
}

impl Objective for AnalogObjective<'_> {
    fn shape(&self) -> (usize, usize) {
        (self.eff.dim(), self.n_rf)
    }

    fn value(&self, f: &RMat) -> f64 {
        match self.kind {
            ObjectiveKind::F0 => f0_qr_value(f, self.eff, self.scale, self.n_streams),
            ObjectiveKind::F1 => f1_value(f, self.eff, self.scale, self.n_streams),
        }
    }

    fn gradient(&self, f: &RMat) -> Result<RMat> {
        gradient_f0(f, self.eff, self.scale)
    }

    fn side(&self) -> Side {
        self.side
    }
}

pub(crate) fn check_shape(shape: (usize, usize)) -> Result<()> {
    let (n, n_rf) = shape;
    if n_rf == 0 || n < n_rf {
        return Err(HbfError::Infeasible(format!("no full-rank binary {n}x{n_rf} matrix exists")));
    }
    Ok(())
}

pub(crate) fn is_full_rank(f: &RMat) -> bool {
    linalg::numerical_rank_real(f) == f.ncols()
}

pub(crate) fn bits_to_matrix(rows: usize, cols: usize, bits: &[u8]) -> RMat {
    RMat::from_row_iterator(rows, cols, bits.iter().map(|&b| f64::from(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Ts,
    NpgaTs,
    PgaTs,
    PgaTbrs,
    Es,
    Random,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Ts => "ts",
            SolverKind::NpgaTs => "npga-ts",
            SolverKind::PgaTs => "pga-ts",
            SolverKind::PgaTbrs => "pga-tbrs",
            SolverKind::Es => "es",
            SolverKind::Random => "random",
        }
    }
}

impl FromStr for SolverKind {
    type Err = HbfError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ts" => SolverKind::Ts,
            "npga-ts" => SolverKind::NpgaTs,
            "pga-ts" => SolverKind::PgaTs,
            "pga-tbrs" => SolverKind::PgaTbrs,
            "es" => SolverKind::Es,
            "random" => SolverKind::Random,
            other => return Err(HbfError::InvalidConfig(format!("unknown solver '{other}'"))),
        })
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs the selected solver.
pub fn solve(kind: SolverKind, obj: &dyn Objective, params: &SolverParams) -> Result<(AnalogBeamformer, SearchTrace)> {
    params.validate()?;
    match kind {
        SolverKind::Ts => tabu_search(obj, obj.shape(), params, None),
        SolverKind::NpgaTs => npga_ts(obj, obj.shape(), params),
        SolverKind::PgaTs => pga_ts(obj, obj.shape(), params),
        SolverKind::PgaTbrs => pga_tbrs(obj, obj.shape(), params),
        SolverKind::Es => {
            let f = exhaustive_search(obj, obj.shape())?;
            let mut trace = SearchTrace::new(Termination::Enumerated);
            let v = obj.value(f.entries());
            trace.records.push(TraceRecord { iteration: 1, best: v, candidate: v });
            Ok((f, trace))
        }
        SolverKind::Random => {
            let mut rng = crate::rng::rng_from_seed(params.seed);
            let f = random_analog(obj.shape(), &mut rng)?.with_side(obj.side());
            let mut trace = SearchTrace::new(Termination::Sampled);
            let v = obj.value(f.entries());
            trace.evaluations = 1;
            trace.records.push(TraceRecord { iteration: 1, best: v, candidate: v });
            Ok((f, trace))
        }
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::channel::{generate_channel, SystemConfig};

    pub fn desk_set(n: usize, k: usize, seed: u64) -> EffectiveChannelSet {
        let cfg = SystemConfig { n_tx: n, n_rx: n, n_rf: n.min(2), n_streams: n.min(2), n_subcarriers: k, ..SystemConfig::default() };
        let h = generate_channel(&cfg, seed).unwrap();
        EffectiveChannelSet::identity_projectors(&h).unwrap()
    }

    pub fn objective(eff: &EffectiveChannelSet, n_rf: usize) -> AnalogObjective<'_> {
        AnalogObjective { eff, scale: 10.0, n_rf, n_streams: n_rf, kind: ObjectiveKind::F0, side: Side::Precoder }
    }
}
