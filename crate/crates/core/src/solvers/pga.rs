use rand::Rng;

use super::{check_shape, Objective, SolverParams};
use crate::error::{HbfError, Result};
use crate::linalg::RMat;
use crate::rng::SimRng;

/// Fresh random starts tried when the gradient is ill-conditioned at the start.
pub const PGA_RETRIES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PgaOutcome {
    /// Iterate with the highest observed objective.
    pub matrix: RMat,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
}

/// Projected gradient ascent on the box-relaxed problem.
pub fn pga(obj: &dyn Objective, shape: (usize, usize), params: &SolverParams, rng: &mut SimRng) -> Result<PgaOutcome> {
    check_shape(shape)?;
    let (rows, cols) = shape;
    let mut last_err = None;
    for _ in 0..PGA_RETRIES {
        let start = RMat::from_fn(rows, cols, |_, _| rng.random::<f64>());
        match obj.gradient(&start) {
            Ok(grad) => return Ok(ascend(obj, start, grad, params)),
            Err(e @ HbfError::IllConditioned(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(HbfError::IllConditioned(f64::INFINITY)))
}

fn ascend(obj: &dyn Objective, start: RMat, mut grad: RMat, params: &SolverParams) -> PgaOutcome {
    let initial_value = obj.value(&start);
    let mut best = start.clone();
    let mut best_value = initial_value;
    let mut prev_value = initial_value;
    let mut current = start;
    let mut iterations = 0;
    for i in 0..params.pga_max_iter {
        iterations = i + 1;
        let mu = params.pga_step_c / ((i + 1) as f64).sqrt();
        let next = (&current + &grad * mu).map(|x| x.clamp(0.0, 1.0));
        let value = obj.value(&next);
        if value > best_value {
            best_value = value;
            best = next.clone();
        }
        if value < prev_value || next == current {
            break;
        }
        match obj.gradient(&next) {
            Ok(g) => grad = g,
            Err(_) => break,
        }
        current = next;
        prev_value = value;
    }
    PgaOutcome { matrix: best, value: best_value, initial_value, iterations }
}

/// Snaps entries within `eps` of 0 or 1 to that integer.
pub fn refine(f: &RMat, eps: f64) -> RMat {
    f.map(|x| {
        if x <= eps {
            0.0
        } else if x >= 1.0 - eps {
            1.0
        } else {
            x
        }
    })
}

/// Rounds every fractional entry to 1 with probability equal to its value.
/// Draws happen in row-major order, one per fractional entry.
pub fn stochastic_round(f: &RMat, rng: &mut SimRng) -> RMat {
    let (rows, cols) = f.shape();
    let mut out = f.clone();
    for i in 0..rows {
        for j in 0..cols {
            let x = f[(i, j)];
            if x != 0.0 && x != 1.0 {
                out[(i, j)] = if rng.random::<f64>() < x { 1.0 } else { 0.0 };
            }
        }
    }
    out
}

/// Row-major positions of entries that are neither 0 nor 1.
pub(crate) fn fractional_indices(f: &RMat) -> Vec<usize> {
    let (rows, cols) = f.shape();
    (0..rows * cols).filter(|&idx| {
        let x = f[(idx / cols, idx % cols)];
        x != 0.0 && x != 1.0
    })
    .collect()
}
