use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{HbfError, Result};
use crate::linalg::{self, CMat, RMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Precoder,
    Combiner,
}

/// Binary, full-column-rank analog beamformer (`F_RF` or `W_RF`).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBeamformer {
    entries: RMat,
    side: Side,
}

impl AnalogBeamformer {
    pub fn new(entries: RMat, side: Side) -> Result<Self> {
        if entries.ncols() == 0 || entries.nrows() < entries.ncols() {
            return Err(HbfError::InvalidArgument(format!(
                "analog beamformer shape {}x{} needs rows >= cols >= 1",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|&x| x != 0.0 && x != 1.0) {
            return Err(HbfError::InvalidArgument("analog beamformer entries must be 0 or 1".into()));
        }
        let rank = linalg::numerical_rank_real(&entries);
        if rank != entries.ncols() {
            return Err(HbfError::Infeasible(format!("analog beamformer rank {rank} < {}", entries.ncols())));
        }
        Ok(Self { entries, side })
    }

    /// Row-major bit vector of length `rows * cols`.
    pub fn from_bits(rows: usize, cols: usize, bits: &[u8], side: Side) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(HbfError::InvalidArgument(format!("expected {} bits, got {}", rows * cols, bits.len())));
        }
        Self::new(RMat::from_row_iterator(rows, cols, bits.iter().map(|&b| f64::from(b))), side)
    }

    pub(crate) fn from_trusted(entries: RMat, side: Side) -> Self {
        Self { entries, side }
    }

    pub fn entries(&self) -> &RMat {
        &self.entries
    }

    pub fn into_entries(self) -> RMat {
        self.entries
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn n_antennas(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_rf(&self) -> usize {
        self.entries.ncols()
    }

    pub fn to_complex(&self) -> CMat {
        linalg::to_complex(&self.entries)
    }

    /// Row-major bits.
    pub fn bits(&self) -> Vec<u8> {
        let (r, c) = self.entries.shape();
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| self.entries[(i, j)] as u8).collect()
    }
}

/// Per-subcarrier digital matrices (`N_RF x N_S` each).
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalBeamformerSet {
    pub matrices: Vec<CMat>,
}

impl DigitalBeamformerSet {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// `A * D_k` for every subcarrier.
    pub fn cascade(&self, analog: &CMat) -> Vec<CMat> {
        self.matrices.iter().map(|d| analog * d).collect()
    }
}

/// Quadratic forms seen by the analog design problem on one side of the link.
///
/// On the precoder side `forms[k] = H_k^H P_t[k] H_k`; on the combiner side
/// `forms[k] = T_k = H_k F_k F_k^H H_k^H` and `projectors` is empty.
#[derive(Debug, Clone)]
pub struct EffectiveChannelSet {
    pub projectors: Vec<CMat>,
    pub forms: Vec<CMat>,
    pub averaged: CMat,
    /// `factors[k]^H factors[k] = forms[k]`, with as few rows as the rank allows.
    factors: Vec<CMat>,
    avg_factor: CMat,
    /// Real and imaginary parts of every factor stacked row-wise, for one
    /// real product per evaluation.
    stacked: RMat,
    blocks: Vec<(usize, usize)>,
}

impl EffectiveChannelSet {
    /// Precoder-side set from per-subcarrier projectors `P_t[k]`.
    pub fn precoder_side(h: &ChannelRealization, projectors: Vec<CMat>) -> Result<Self> {
        if projectors.len() != h.matrices.len() {
            return Err(HbfError::InvalidArgument(format!(
                "{} projectors for {} subcarriers",
                projectors.len(),
                h.matrices.len()
            )));
        }
        let mut forms = Vec::with_capacity(projectors.len());
        let mut factors = Vec::with_capacity(projectors.len());
        for (hk, p) in h.matrices.iter().zip(&projectors) {
            if p.nrows() != hk.nrows() || p.ncols() != hk.nrows() {
                return Err(HbfError::InvalidArgument("projector dimension mismatch".into()));
            }
            // H^H P H = (P H)^H (P H) for a Hermitian idempotent P.
            let g = p * hk;
            let form = linalg::hermitian_part(&(hk.adjoint() * &g));
            factors.push(linalg::psd_factor(&form));
            forms.push(form);
        }
        Ok(Self::assemble(projectors, forms, factors))
    }

    /// Precoder-side set with `P_t[k] = I`.
    pub fn identity_projectors(h: &ChannelRealization) -> Result<Self> {
        let n_r = h.matrices.first().map_or(0, |m| m.nrows());
        Self::precoder_side(h, vec![CMat::identity(n_r, n_r); h.matrices.len()])
    }

    /// Combiner-side set `T_k = H_k F_k F_k^H H_k^H` from full precoders `F_k`.
    pub fn combiner_side(h: &ChannelRealization, precoders: &[CMat]) -> Result<Self> {
        if precoders.len() != h.matrices.len() {
            return Err(HbfError::InvalidArgument("precoder count does not match subcarriers".into()));
        }
        let mut forms = Vec::with_capacity(precoders.len());
        let mut factors = Vec::with_capacity(precoders.len());
        for (hk, fk) in h.matrices.iter().zip(precoders) {
            if fk.nrows() != hk.ncols() {
                return Err(HbfError::InvalidArgument("precoder dimension mismatch".into()));
            }
            let g = (hk * fk).adjoint();
            let form = linalg::hermitian_part(&(g.adjoint() * &g));
            factors.push(linalg::psd_factor(&form));
            forms.push(form);
        }
        Ok(Self::assemble(Vec::new(), forms, factors))
    }

    /// Set built directly from Hermitian PSD forms.
    pub fn from_forms(forms: Vec<CMat>) -> Result<Self> {
        if forms.is_empty() {
            return Err(HbfError::InvalidArgument("no forms given".into()));
        }
        let n = forms[0].nrows();
        if forms.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(HbfError::InvalidArgument("forms must be square and equally sized".into()));
        }
        let forms: Vec<CMat> = forms.iter().map(linalg::hermitian_part).collect();
        let factors = forms.iter().map(linalg::psd_factor).collect();
        Ok(Self::assemble(Vec::new(), forms, factors))
    }

    fn assemble(projectors: Vec<CMat>, forms: Vec<CMat>, factors: Vec<CMat>) -> Self {
        let n = forms[0].nrows();
        let mut averaged = CMat::zeros(n, n);
        for f in &forms {
            averaged += f;
        }
        averaged /= num_complex::Complex64::new(forms.len() as f64, 0.0);
        let avg_factor = linalg::psd_factor(&averaged);
        let (stacked, blocks) = stack_real(&factors);
        Self { projectors, forms, averaged, factors, avg_factor, stacked, blocks }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.forms[0].nrows()
    }

    pub fn factors(&self) -> &[CMat] {
        &self.factors
    }

    pub fn averaged_factor(&self) -> &CMat {
        &self.avg_factor
    }

    /// Stacked real factor and the `(start, rows)` block of each subcarrier;
    /// the real part occupies `start..start + rows`, the imaginary part the
    /// following `rows` rows.
    pub fn stacked_factors(&self) -> (&RMat, &[(usize, usize)]) {
        (&self.stacked, &self.blocks)
    }
}

fn stack_real(factors: &[CMat]) -> (RMat, Vec<(usize, usize)>) {
    let n = factors.first().map_or(0, |g| g.ncols());
    let total: usize = factors.iter().map(|g| 2 * g.nrows()).sum();
    let mut out = RMat::zeros(total, n);
    let mut blocks = Vec::with_capacity(factors.len());
    let mut start = 0;
    for g in factors {
        let r = g.nrows();
        for i in 0..r {
            for j in 0..n {
                out[(start + i, j)] = g[(i, j)].re;
                out[(start + r + i, j)] = g[(i, j)].im;
            }
        }
        blocks.push((start, r));
        start += 2 * r;
    }
    (out, blocks)
}

#[derive(Debug, Clone)]
pub struct HbfSolution {
    pub f_rf: AnalogBeamformer,
    pub f_bb: DigitalBeamformerSet,
    pub w_rf: AnalogBeamformer,
    pub w_bb: DigitalBeamformerSet,
    pub se_per_subcarrier: Vec<f64>,
}

impl HbfSolution {
    pub fn avg_se(&self) -> f64 {
        crate::beamform::mean(&self.se_per_subcarrier)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channel, SystemConfig};

    #[test]
    fn analog_validation() {
        let ok = AnalogBeamformer::from_bits(3, 2, &[1, 0, 0, 1, 1, 1], Side::Precoder).unwrap();
        assert_eq!(ok.bits(), vec![1, 0, 0, 1, 1, 1]);
        assert!(AnalogBeamformer::from_bits(2, 2, &[1, 1, 1, 1], Side::Precoder).is_err());
        assert!(AnalogBeamformer::from_bits(1, 2, &[1, 1], Side::Precoder).is_err());
        assert!(AnalogBeamformer::new(RMat::from_element(2, 1, 0.5), Side::Combiner).is_err());
    }

    #[test]
    fn effective_set_invariants() {
        let cfg = SystemConfig { n_tx: 8, n_rx: 6, n_subcarriers: 4, n_paths: 3, ..SystemConfig::default() };
        let h = generate_channel(&cfg, 3).unwrap();
        let w = CMat::from_fn(6, 2, |i, j| num_complex::Complex64::new((i + 2 * j) as f64 * 0.3, (i * j) as f64 * 0.1 - 0.2));
        let p = crate::beamform::projector(&w).unwrap();
        let eff = EffectiveChannelSet::precoder_side(&h, vec![p; 4]).unwrap();
        for (k, form) in eff.forms.iter().enumerate() {
            assert!((form - form.adjoint()).norm() <= 1e-10 * form.norm().max(1.0));
            let tr: f64 = (0..8).map(|i| form[(i, i)].re).sum();
            assert!(linalg::hermitian_eigvals(form).iter().all(|&l| l >= -1e-9 * tr));
            let g = &eff.factors()[k];
            assert!((g.adjoint() * g - form).norm() <= 1e-10 * form.norm());
            assert!(g.nrows() <= 2);
        }
    }
}
