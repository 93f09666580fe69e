use num_complex::Complex64;

use super::types::{AnalogBeamformer, DigitalBeamformerSet};
use crate::channel::ChannelRealization;
use crate::error::{HbfError, Result};
use crate::linalg::{self, CMat};

/// Orthogonal projector `W (W^H W)^{-1} W^H` onto the column space of `W`.
pub fn projector(w: &CMat) -> Result<CMat> {
    if w.ncols() == 0 || linalg::numerical_rank(w) < w.ncols() {
        return Err(HbfError::InvalidArgument("projector needs a full-column-rank matrix".into()));
    }
    let gram_inv = (w.adjoint() * w)
        .try_inverse()
        .ok_or_else(|| HbfError::Numeric("Gram matrix is singular".into()))?;
    Ok(linalg::hermitian_part(&(w * gram_inv * w.adjoint())))
}

/// Closed-form precoders for any complex analog matrix (binary or constant-modulus).
pub fn digital_precoder_complex(
    f_rf: &CMat,
    h: &ChannelRealization,
    proj: &[CMat],
    p_b: f64,
    n_streams: usize,
) -> Result<DigitalBeamformerSet> {
    let n_rf = f_rf.ncols();
    if n_streams == 0 || n_streams > n_rf {
        return Err(HbfError::InvalidArgument(format!("{n_streams} streams with {n_rf} RF chains")));
    }
    if proj.len() != h.matrices.len() {
        return Err(HbfError::InvalidArgument("projector count does not match subcarriers".into()));
    }
    if linalg::numerical_rank(f_rf) < n_rf {
        return Err(HbfError::Infeasible("analog precoder is rank deficient".into()));
    }
    let whiten = linalg::inv_sqrt_hermitian(&(f_rf.adjoint() * f_rf));
    let f_white = f_rf * &whiten;
    let amp = Complex64::new((p_b / n_streams as f64).sqrt(), 0.0);
    let matrices = h
        .matrices
        .iter()
        .zip(proj)
        .map(|(hk, p)| {
            let heff = p * hk * &f_white;
            let (_, vecs) = linalg::hermitian_eigh(&(heff.adjoint() * heff));
            &whiten * vecs.columns(0, n_streams) * amp
        })
        .collect();
    Ok(DigitalBeamformerSet { matrices })
}

pub fn digital_precoder(
    f_rf: &AnalogBeamformer,
    h: &ChannelRealization,
    proj: &[CMat],
    p_b: f64,
    n_streams: usize,
) -> Result<DigitalBeamformerSet> {
    digital_precoder_complex(&f_rf.to_complex(), h, proj, p_b, n_streams)
}

/// MMSE baseband combiner `(J J^H + sigma^2 W^H W)^{-1} J`, `J = W^H H F`.
pub fn mmse_combiner(w_rf: &CMat, h_k: &CMat, f_k: &CMat, noise_var: f64) -> Result<CMat> {
    if linalg::numerical_rank(w_rf) < w_rf.ncols() {
        return Err(HbfError::Infeasible("analog combiner is rank deficient".into()));
    }
    let j = w_rf.adjoint() * h_k * f_k;
    let system = &j * j.adjoint() + (w_rf.adjoint() * w_rf).scale(noise_var);
    let inv = system.try_inverse().ok_or_else(|| HbfError::Numeric("MMSE system matrix is singular".into()))?;
    Ok(inv * j)
}

/// MMSE combiners for every subcarrier given full precoders `F_k`.
pub fn mmse_combiners(w_rf: &CMat, h: &ChannelRealization, precoders: &[CMat], noise_var: f64) -> Result<DigitalBeamformerSet> {
    let matrices = h
        .matrices
        .iter()
        .zip(precoders)
        .map(|(hk, fk)| mmse_combiner(w_rf, hk, fk, noise_var))
        .collect::<Result<Vec<_>>>()?;
    Ok(DigitalBeamformerSet { matrices })
}
