use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::types::{AnalogBeamformer, EffectiveChannelSet};
use crate::channel::ChannelRealization;
use crate::error::{HbfError, Result};
use crate::linalg::{self, CMat, RMat};

/// Gram matrices with a larger eigenvalue ratio are treated as singular.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveForm {
    Pinv,
    Qr,
}

/// Per-subcarrier SE `log2 |I + W^+ H F F^H H^H W / sigma^2|`.
pub fn spectral_efficiency(h: &ChannelRealization, f: &[CMat], w: &[CMat], noise_var: f64) -> Result<Vec<f64>> {
    if f.len() != h.matrices.len() || w.len() != h.matrices.len() {
        return Err(HbfError::InvalidArgument(format!(
            "{} precoders and {} combiners for {} subcarriers",
            f.len(),
            w.len(),
            h.matrices.len()
        )));
    }
    if !(noise_var > 0.0) {
        return Err(HbfError::InvalidArgument(format!("noise variance must be positive, got {noise_var}")));
    }
    h.matrices
        .iter()
        .zip(f.iter().zip(w))
        .map(|(hk, (fk, wk))| {
            if hk.ncols() != fk.nrows() || hk.nrows() != wk.nrows() || fk.ncols() != wk.ncols() {
                return Err(HbfError::InvalidArgument("SE dimension mismatch".into()));
            }
            let hf = hk * fk;
            // The quadratic form vanishes for any combiner.
            if linalg::frobenius_sq(&hf) == 0.0 {
                return Ok(0.0);
            }
            if linalg::numerical_rank(wk) < wk.ncols() {
                return Err(HbfError::SingularCombiner);
            }
            let pinv = linalg::left_pinv(wk).map_err(|_| HbfError::SingularCombiner)?;
            let n = wk.ncols();
            let m = CMat::identity(n, n) + (pinv * &hf * hf.adjoint() * wk).unscale(noise_var);
            Ok(linalg::log2_abs_det(&m)?.max(0.0))
        })
        .collect()
}

/// `sum_i log2(1 + scale * lambda_i)` over the `top` largest eigenvalues.
fn log_gain(m: &CMat, scale: f64, top: usize) -> f64 {
    if top >= m.nrows() {
        // All eigenvalues: log det(I + scale M).
        if let Some(v) = ln_det_shifted(m, scale) {
            return v / LN_2;
        }
    }
    linalg::hermitian_eigvals(m).iter().take(top).map(|&l| (scale * l.max(0.0)).ln_1p()).sum::<f64>() / LN_2
}

/// `(G V)^H (G V)` from the real and imaginary parts `a = Re(G) V`, `b = Im(G) V`.
fn gram_from_parts(a: nalgebra::DMatrixView<'_, f64>, b: nalgebra::DMatrixView<'_, f64>) -> CMat {
    let n = a.ncols();
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for r in 0..a.nrows() {
                re += a[(r, i)] * a[(r, j)] + b[(r, i)] * b[(r, j)];
                im += a[(r, i)] * b[(r, j)] - b[(r, i)] * a[(r, j)];
            }
            m[(i, j)] = Complex64::new(re, im);
            m[(j, i)] = Complex64::new(re, -im);
        }
    }
    m
}

/// `ln det(I + scale M)` for Hermitian PSD `M` by an in-place Cholesky sweep.
fn ln_det_shifted(m: &CMat, scale: f64) -> Option<f64> {
    let n = m.nrows();
    let mut a = m.scale(scale);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let mut total = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= a[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let l = d.sqrt();
        total += d.ln();
        a[(j, j)] = Complex64::new(l, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)].conj();
            }
            a[(i, j)] = s / l;
        }
    }
    Some(total)
}

/// QR-form objective for any real `N x N_RF` matrix, using the low-rank factors.
pub fn f0_qr_value(f: &RMat, eff: &EffectiveChannelSet, scale: f64, n_streams: usize) -> f64 {
    let v = f.clone().qr().q();
    let top = n_streams.min(f.ncols());
    let (stacked, blocks) = eff.stacked_factors();
    let p = stacked * &v;
    let total: f64 = blocks
        .iter()
        .map(|&(start, r)| {
            let m = gram_from_parts(p.rows(start, r), p.rows(start + r, r));
            log_gain(&m, scale, top)
        })
        .sum();
    total / eff.len() as f64
}

/// Pseudo-inverse form on the full quadratic forms.
pub fn f0_pinv_value(f: &RMat, eff: &EffectiveChannelSet, scale: f64) -> Result<f64> {
    let fc = linalg::to_complex(f);
    let pinv = linalg::left_pinv(&fc)?;
    let n = f.ncols();
    let mut total = 0.0;
    for form in &eff.forms {
        let m = CMat::identity(n, n) + (&pinv * form * &fc).scale(scale);
        total += linalg::log2_abs_det(&m)?;
    }
    Ok(total / eff.len() as f64)
}

/// Jensen upper bound evaluated on the averaged form.
pub fn f1_value(f: &RMat, eff: &EffectiveChannelSet, scale: f64, n_streams: usize) -> f64 {
    let v = linalg::to_complex(&f.clone().qr().q());
    let gv = eff.averaged_factor() * v;
    log_gain(&(gv.adjoint() * gv), scale, n_streams.min(f.ncols()))
}

fn check_shape(f: &AnalogBeamformer, eff: &EffectiveChannelSet) -> Result<()> {
    if f.n_antennas() != eff.dim() {
        return Err(HbfError::InvalidArgument(format!(
            "analog matrix has {} rows, channel forms are {}x{}",
            f.n_antennas(),
            eff.dim(),
            eff.dim()
        )));
    }
    if linalg::numerical_rank_real(f.entries()) < f.n_rf() {
        return Err(HbfError::Infeasible("analog matrix is rank deficient".into()));
    }
    Ok(())
}

pub fn analog_objective_f0(
    f_rf: &AnalogBeamformer,
    eff: &EffectiveChannelSet,
    gamma: f64,
    noise_var: f64,
    n_streams: usize,
    form: ObjectiveForm,
) -> Result<f64> {
    check_shape(f_rf, eff)?;
    let scale = gamma / noise_var;
    match form {
        ObjectiveForm::Qr => Ok(f0_qr_value(f_rf.entries(), eff, scale, n_streams)),
        ObjectiveForm::Pinv => f0_pinv_value(f_rf.entries(), eff, scale),
    }
}

pub fn analog_objective_f1(
    f_rf: &AnalogBeamformer,
    eff: &EffectiveChannelSet,
    gamma: f64,
    noise_var: f64,
    n_streams: usize,
) -> Result<f64> {
    check_shape(f_rf, eff)?;
    Ok(f1_value(f_rf.entries(), eff, gamma / noise_var, n_streams))
}

/// Real gradient (in bits) of the log-det objective
/// `(1/K) sum_k log2 det(F^T A_k F) - log2 det(F^T F)`, `A_k = I + scale * forms[k]`.
pub fn gradient_f0(f: &RMat, eff: &EffectiveChannelSet, scale: f64) -> Result<RMat> {
    let ftf = f.transpose() * f;
    let cond = real_condition(&ftf);
    if cond > COND_LIMIT {
        return Err(HbfError::IllConditioned(cond));
    }
    let ftf_inv = ftf.clone().try_inverse().ok_or(HbfError::IllConditioned(f64::INFINITY))?;
    let fc = linalg::to_complex(f);
    let ftf_c = linalg::to_complex(&ftf);
    let mut acc = RMat::zeros(f.nrows(), f.ncols());
    for g in eff.factors() {
        let gf = g * &fc;
        let m = &ftf_c + (gf.adjoint() * &gf).scale(scale);
        let cond = linalg::hermitian_condition(&m);
        if cond > COND_LIMIT {
            return Err(HbfError::IllConditioned(cond));
        }
        let m_inv = m.try_inverse().ok_or(HbfError::IllConditioned(f64::INFINITY))?;
        let af = &fc + (g.adjoint() * gf).scale(scale);
        acc += (af * m_inv).map(|z| z.re);
    }
    acc /= eff.len() as f64;
    acc -= f * ftf_inv;
    Ok(acc * (2.0 / LN_2))
}

/// Literal gradient from the dense `A_k` matrices, used as a cross-check.
pub fn gradient_f0_dense(f: &RMat, a_set: &[CMat]) -> Result<RMat> {
    if a_set.is_empty() {
        return Err(HbfError::InvalidArgument("empty A set".into()));
    }
    let fc = linalg::to_complex(f);
    let ftf = fc.adjoint() * &fc;
    let cond = linalg::hermitian_condition(&ftf);
    if cond > COND_LIMIT {
        return Err(HbfError::IllConditioned(cond));
    }
    let mut acc = CMat::zeros(f.nrows(), f.ncols());
    for a in a_set {
        let m = fc.adjoint() * a * &fc;
        let inv = m.try_inverse().ok_or(HbfError::IllConditioned(f64::INFINITY))?;
        acc += a * &fc * inv;
    }
    acc /= Complex64::new(a_set.len() as f64, 0.0);
    let inv = ftf.try_inverse().ok_or(HbfError::IllConditioned(f64::INFINITY))?;
    acc -= &fc * inv;
    Ok(acc.map(|z| z.re * 2.0 / LN_2))
}

fn real_condition(m: &RMat) -> f64 {
    let v = m.clone().symmetric_eigenvalues();
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}
