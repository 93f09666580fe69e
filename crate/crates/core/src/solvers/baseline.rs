use rand::Rng;
use rayon::prelude::*;

use super::{bits_to_matrix, check_shape, is_full_rank, Objective};
use crate::beamform::{AnalogBeamformer, Side};
use crate::error::{HbfError, Result};
use crate::rng::SimRng;

/// Largest `N * N_RF` accepted by [`exhaustive_search`].
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Bound on rejection-sampling draws in [`random_analog`].
pub const RANDOM_ATTEMPTS: usize = 1000;

/// Enumeration index `idx` sets row-major entry `j` to bit `j` of `idx`.
fn bits_of(idx: u64, len: usize) -> Vec<u8> {
    (0..len).map(|j| ((idx >> j) & 1) as u8).collect()
}

/// Global maximizer over all feasible binary matrices; ties go to the
/// smallest enumeration index.
pub fn exhaustive_search(obj: &dyn Objective, shape: (usize, usize)) -> Result<AnalogBeamformer> {
    check_shape(shape)?;
    let (rows, cols) = shape;
    let len = rows * cols;
    if len > EXHAUSTIVE_LIMIT {
        return Err(HbfError::ShapeTooLarge { bits: len, limit: EXHAUSTIVE_LIMIT });
    }
    let best = (1..1u64 << len)
        .into_par_iter()
        .filter_map(|idx| {
            let m = bits_to_matrix(rows, cols, &bits_of(idx, len));
            is_full_rank(&m).then(|| (idx, obj.value(&m)))
        })
        .reduce_with(|a, b| {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        })
        .ok_or_else(|| HbfError::Infeasible("no feasible matrix".into()))?;
    Ok(AnalogBeamformer::from_trusted(bits_to_matrix(rows, cols, &bits_of(best.0, len)), obj.side()))
}

/// Uniform binary matrix, redrawn until it has full column rank.
pub fn random_analog(shape: (usize, usize), rng: &mut SimRng) -> Result<AnalogBeamformer> {
    check_shape(shape)?;
    let (rows, cols) = shape;
    for _ in 0..RANDOM_ATTEMPTS {
        let bits: Vec<u8> = (0..rows * cols).map(|_| u8::from(rng.random::<bool>())).collect();
        let m = bits_to_matrix(rows, cols, &bits);
        if is_full_rank(&m) {
            return Ok(AnalogBeamformer::from_trusted(m, Side::Precoder));
        }
    }
    Err(HbfError::Infeasible(format!("no full-rank {rows}x{cols} draw in {RANDOM_ATTEMPTS} attempts")))
}
