use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;

use super::{
    bits_to_matrix, check_shape, is_full_rank, random_analog, Objective, SearchTrace, SolverParams, Termination,
    TraceRecord,
};
use crate::beamform::AnalogBeamformer;
use crate::error::{HbfError, Result};
use crate::linalg::RMat;
use crate::rng::rng_from_seed;

/// Neighbourhoods at least this large are evaluated on the rayon pool.
const PAR_THRESHOLD: usize = 32;

/// FIFO-bounded set of visited bit vectors.
pub(crate) struct TabuList {
    cap: usize,
    queue: VecDeque<Vec<u8>>,
    set: HashSet<Vec<u8>>,
}

impl TabuList {
    pub(crate) fn new(cap: usize) -> Self {
        Self { cap: cap.max(1), queue: VecDeque::new(), set: HashSet::new() }
    }

    pub(crate) fn contains(&self, bits: &[u8]) -> bool {
        self.set.contains(bits)
    }

    pub(crate) fn push(&mut self, bits: Vec<u8>) {
        if self.set.contains(&bits) {
            return;
        }
        if self.queue.len() == self.cap {
            if let Some(old) = self.queue.pop_front() {
                self.set.remove(&old);
            }
        }
        self.set.insert(bits.clone());
        self.queue.push_back(bits);
    }

    pub(crate) fn len(&self) -> usize {
        self.queue.len()
    }
}

pub(crate) struct TabuRun {
    pub matrix: RMat,
    pub trace: SearchTrace,
}

/// Tabu search over bit vectors; `recover` maps bits to a feasible matrix or `None`.
pub(crate) fn tabu_core<R>(obj: &dyn Objective, init: Vec<u8>, recover: R, tabu_len: usize, params: &SolverParams) -> TabuRun
where
    R: Fn(&[u8]) -> Option<RMat> + Sync,
{
    let init_matrix = recover(&init).expect("initial candidate must be feasible");
    let mut best_value = obj.value(&init_matrix);
    let mut best_matrix = init_matrix;
    let mut trace = SearchTrace::new(Termination::MaxIter);
    trace.evaluations = 1;
    let mut tabu = TabuList::new(tabu_len);
    tabu.push(init.clone());
    let mut current = init;
    let mut stall = 0;

    for iteration in 1..=params.max_iter {
        let evaluate = |j: usize| -> Option<(usize, f64, RMat)> {
            let mut cand = current.clone();
            cand[j] ^= 1;
            if tabu.contains(&cand) {
                return None;
            }
            let m = recover(&cand)?;
            Some((j, obj.value(&m), m))
        };
        let scored: Vec<(usize, f64, RMat)> = if current.len() >= PAR_THRESHOLD {
            (0..current.len()).into_par_iter().filter_map(evaluate).collect()
        } else {
            (0..current.len()).filter_map(evaluate).collect()
        };
        trace.evaluations += scored.len();
        // Ties go to the lowest flipped index.
        let Some((j, value, matrix)) = scored.into_iter().fold(None, |acc: Option<(usize, f64, RMat)>, item| match acc {
            Some(a) if a.1 >= item.1 => Some(a),
            _ => Some(item),
        }) else {
            trace.termination = Termination::Exhausted;
            break;
        };
        current[j] ^= 1;
        tabu.push(current.clone());
        trace.moves.push(current.clone());
        if value > best_value {
            best_value = value;
            best_matrix = matrix;
            stall = 0;
        } else {
            stall += 1;
        }
        trace.records.push(TraceRecord { iteration, best: best_value, candidate: value });
        if stall >= params.patience {
            trace.termination = Termination::Patience;
            break;
        }
    }
    TabuRun { matrix: best_matrix, trace }
}

/// Feasible single-entry flips of `f` in row-major order.
pub fn neighbor_set(f: &AnalogBeamformer) -> Vec<AnalogBeamformer> {
    let (rows, cols) = f.entries().shape();
    let bits = f.bits();
    (0..bits.len())
        .filter_map(|j| {
            let mut cand = bits.clone();
            cand[j] ^= 1;
            let m = bits_to_matrix(rows, cols, &cand);
            is_full_rank(&m).then(|| AnalogBeamformer::from_trusted(m, f.side()))
        })
        .collect()
}

pub fn tabu_search(
    obj: &dyn Objective,
    shape: (usize, usize),
    params: &SolverParams,
    init: Option<AnalogBeamformer>,
) -> Result<(AnalogBeamformer, SearchTrace)> {
    check_shape(shape)?;
    let (rows, cols) = shape;
    let init = match init {
        Some(f) => {
            if f.entries().shape() != shape {
                return Err(HbfError::InvalidArgument("initial point has the wrong shape".into()));
            }
            f
        }
        None => random_analog(shape, &mut rng_from_seed(params.seed))?,
    };
    let recover = |bits: &[u8]| {
        let m = bits_to_matrix(rows, cols, bits);
        is_full_rank(&m).then_some(m)
    };
    let run = tabu_core(obj, init.bits(), recover, params.tabu_len_for(rows * cols), params);
    Ok((AnalogBeamformer::from_trusted(run.matrix, obj.side()), run.trace))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{desk_set, objective};
    use super::*;
    use crate::beamform::Side;

    #[test]
    fn neighbors_of_small_matrices() {
        let one = AnalogBeamformer::from_bits(1, 1, &[1], Side::Precoder).unwrap();
        assert!(neighbor_set(&one).is_empty());
        let col = AnalogBeamformer::from_bits(2, 1, &[1, 0], Side::Precoder).unwrap();
        let n: Vec<Vec<u8>> = neighbor_set(&col).iter().map(|f| f.bits()).collect();
        assert_eq!(n, vec![vec![1, 1]]);
        let f = AnalogBeamformer::from_bits(4, 2, &[1, 0, 0, 1, 1, 1, 0, 1], Side::Precoder).unwrap();
        assert!(neighbor_set(&f).len() <= 8);
    }

    #[test]
    fn unique_feasible_point() {
        let eff = desk_set(1, 2, 1);
        let obj = objective(&eff, 1);
        let (f, trace) = tabu_search(&obj, (1, 1), &SolverParams::default(), None).unwrap();
        assert_eq!(f.bits(), vec![1]);
        assert_eq!(trace.termination, Termination::Exhausted);
    }

    #[test]
    fn trace_is_monotone_and_respects_tabu() {
        let eff = desk_set(8, 8, 4);
        let obj = objective(&eff, 2);
        let params = SolverParams { seed: 3, tabu_len: Some(6), ..Default::default() };
        let (_, trace) = tabu_search(&obj, (8, 2), &params, None).unwrap();
        assert!(trace.best_values().collect::<Vec<_>>().windows(2).all(|w| w[1] >= w[0]));
        for (i, m) in trace.moves.iter().enumerate() {
            let lo = i.saturating_sub(5);
            assert!(!trace.moves[lo..i].contains(m));
        }
    }

    #[test]
    fn tabu_list_is_fifo() {
        let mut t = TabuList::new(2);
        t.push(vec![0]);
        t.push(vec![1]);
        t.push(vec![2]);
        assert_eq!(t.len(), 2);
        assert!(!t.contains(&[0]));
        assert!(t.contains(&[2]));
    }

    #[test]
    fn infeasible_shape() {
        let eff = desk_set(2, 2, 1);
        let obj = objective(&eff, 3);
        assert!(matches!(tabu_search(&obj, (2, 3), &SolverParams::default(), None), Err(HbfError::Infeasible(_))));
    }
}
