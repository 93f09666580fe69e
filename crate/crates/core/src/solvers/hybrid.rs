use rand::Rng;

use super::pga::fractional_indices;
use super::tabu::{tabu_core, TabuList};
use super::{
    fill, is_full_rank, pga, refine, stochastic_round, tabu_search, Objective, SearchTrace,
    SolverParams, Termination, TraceRecord,
};
use crate::beamform::AnalogBeamformer;
use crate::error::{HbfError, Result};
use crate::linalg::RMat;
use crate::rng::{rng_from_seed, SimRng};

/// Bound on rounding draws when looking for a feasible or non-tabu sample.
pub const ROUNDING_ATTEMPTS: usize = 1000;

struct Relaxed {
    refined: RMat,
    index_set: Vec<usize>,
}

fn relaxed_stage(obj: &dyn Objective, shape: (usize, usize), params: &SolverParams, rng: &mut SimRng) -> Result<Option<Relaxed>> {
    match pga(obj, shape, params, rng) {
        Ok(out) => {
            let refined = refine(&out.matrix, params.refine_eps);
            let index_set = fractional_indices(&refined);
            Ok(Some(Relaxed { refined, index_set }))
        }
        Err(HbfError::IllConditioned(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn fallback(obj: &dyn Objective, shape: (usize, usize), params: &SolverParams, reduced: Option<usize>) -> Result<(AnalogBeamformer, SearchTrace)> {
    let (f, mut trace) = tabu_search(obj, shape, params, None)?;
    trace.fell_back = true;
    trace.reduced_size = reduced;
    Ok((f, trace))
}

fn immediate(obj: &dyn Objective, m: RMat) -> (AnalogBeamformer, SearchTrace) {
    let mut trace = SearchTrace::new(Termination::Immediate);
    trace.reduced_size = Some(0);
    (AnalogBeamformer::from_trusted(m, obj.side()), trace)
}

fn round_reduced(relaxed: &Relaxed, rng: &mut SimRng) -> Vec<u8> {
    let cols = relaxed.refined.ncols();
    relaxed
        .index_set
        .iter()
        .map(|&idx| u8::from(rng.random::<f64>() < relaxed.refined[(idx / cols, idx % cols)]))
        .collect()
}

/// PGA relaxation followed by tabu search over the non-integer entries.
pub fn pga_ts(obj: &dyn Objective, shape: (usize, usize), params: &SolverParams) -> Result<(AnalogBeamformer, SearchTrace)> {
    super::check_shape(shape)?;
    let mut rng = rng_from_seed(params.seed);
    let Some(relaxed) = relaxed_stage(obj, shape, params, &mut rng)? else {
        return fallback(obj, shape, params, None);
    };
    let size = relaxed.index_set.len();
    if size == 0 {
        return if is_full_rank(&relaxed.refined) {
            Ok(immediate(obj, relaxed.refined))
        } else {
            fallback(obj, shape, params, Some(0))
        };
    }
    let recover = |bits: &[u8]| {
        let m = fill(&relaxed.refined, &relaxed.index_set, bits);
        is_full_rank(&m).then_some(m)
    };
    let Some(init) = (0..ROUNDING_ATTEMPTS)
        .map(|_| round_reduced(&relaxed, &mut rng))
        .find(|q| recover(q).is_some())
    else {
        return fallback(obj, shape, params, Some(size));
    };
    let run = tabu_core(obj, init, recover, params.tabu_len_for(size), params);
    let mut trace = run.trace;
    trace.reduced_size = Some(size);
    Ok((AnalogBeamformer::from_trusted(run.matrix, obj.side()), trace))
}

/// Full-space tabu search started from a rounded PGA solution.
pub fn npga_ts(obj: &dyn Objective, shape: (usize, usize), params: &SolverParams) -> Result<(AnalogBeamformer, SearchTrace)> {
    super::check_shape(shape)?;
    let mut rng = rng_from_seed(params.seed);
    let Some(relaxed) = relaxed_stage(obj, shape, params, &mut rng)? else {
        return fallback(obj, shape, params, None);
    };
    let size = relaxed.index_set.len();
    let init = (0..ROUNDING_ATTEMPTS)
        .map(|_| stochastic_round(&relaxed.refined, &mut rng))
        .find(is_full_rank);
    let Some(init) = init else {
        return fallback(obj, shape, params, Some(size));
    };
    let start = AnalogBeamformer::from_trusted(init, obj.side());
    let (f, mut trace) = tabu_search(obj, shape, params, Some(start))?;
    trace.reduced_size = Some(size);
    Ok((f, trace))
}

/// PGA relaxation followed by tabu-filtered random sampling of the rounding.
pub fn pga_tbrs(obj: &dyn Objective, shape: (usize, usize), params: &SolverParams) -> Result<(AnalogBeamformer, SearchTrace)> {
    super::check_shape(shape)?;
    let mut rng = rng_from_seed(params.seed);
    let Some(relaxed) = relaxed_stage(obj, shape, params, &mut rng)? else {
        return fallback(obj, shape, params, None);
    };
    let size = relaxed.index_set.len();
    if size == 0 {
        return if is_full_rank(&relaxed.refined) {
            Ok(immediate(obj, relaxed.refined))
        } else {
            fallback(obj, shape, params, Some(0))
        };
    }
    let space = (size < 64).then(|| 1u64 << size);
    let mut tabu = TabuList::new(params.tabu_len_for(size));
    let mut trace = SearchTrace::new(Termination::MaxIter);
    trace.reduced_size = Some(size);
    let mut best: Option<(RMat, f64)> = None;
    let mut stall = 0;

    for iteration in 1..=params.max_iter {
        if space.is_some_and(|s| tabu.len() as u64 >= s) {
            trace.termination = Termination::Exhausted;
            break;
        }
        let Some(q) = (0..ROUNDING_ATTEMPTS)
            .map(|_| round_reduced(&relaxed, &mut rng))
            .find(|q| !tabu.contains(q))
        else {
            trace.termination = Termination::Exhausted;
            break;
        };
        tabu.push(q.clone());
        trace.moves.push(q.clone());
        let m = fill(&relaxed.refined, &relaxed.index_set, &q);
        if !is_full_rank(&m) {
            stall += 1;
        } else {
            let value = obj.value(&m);
            trace.evaluations += 1;
            if best.as_ref().is_none_or(|(_, b)| value > *b) {
                best = Some((m, value));
                stall = 0;
            } else {
                stall += 1;
            }
            let best_value = best.as_ref().map_or(value, |b| b.1);
            trace.records.push(TraceRecord { iteration, best: best_value, candidate: value });
        }
        if stall >= params.patience {
            trace.termination = Termination::Patience;
            break;
        }
    }
    match best {
        Some((m, _)) => Ok((AnalogBeamformer::from_trusted(m, obj.side()), trace)),
        None => fallback(obj, shape, params, Some(size)),
    }
}
