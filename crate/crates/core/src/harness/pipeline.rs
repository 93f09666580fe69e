use std::f64::consts::PI;

use num_complex::Complex64;

use super::power::PsBits;
use crate::beamform::{
    digital_precoder, digital_precoder_complex, mean, mmse_combiners, spectral_efficiency, DigitalBeamformerSet,
    EffectiveChannelSet, HbfSolution, Side,
};
use crate::channel::{ChannelRealization, SystemConfig};
use crate::error::{HbfError, Result};
use crate::linalg::{self, CMat};
use crate::rng::derive_seed;
use crate::solvers::{solve, AnalogObjective, SearchTrace, SolverKind, SolverParams};

/// Search statistics of both analog stages.
#[derive(Debug, Clone)]
pub struct SwhbfStats {
    pub precoder: SearchTrace,
    pub combiner: SearchTrace,
}

impl SwhbfStats {
    pub fn iterations(&self) -> usize {
        self.precoder.iterations() + self.combiner.iterations()
    }
}

fn check_channel(cfg: &SystemConfig, h: &ChannelRealization) -> Result<()> {
    cfg.validate()?;
    if h.matrices.len() != cfg.n_subcarriers
        || h.matrices.iter().any(|m| m.nrows() != cfg.n_rx || m.ncols() != cfg.n_tx)
    {
        return Err(HbfError::InvalidArgument("channel does not match the configuration".into()));
    }
    Ok(())
}

/// Switch-based hybrid design: analog precoder, digital precoder, analog
/// combiner and MMSE combiner, in that order.
pub fn run_swhbf_detailed(
    cfg: &SystemConfig,
    h: &ChannelRealization,
    solver: SolverKind,
    params: &SolverParams,
) -> Result<(HbfSolution, SwhbfStats)> {
    check_channel(cfg, h)?;
    let proj = vec![CMat::identity(cfg.n_rx, cfg.n_rx); cfg.n_subcarriers];
    let eff = EffectiveChannelSet::precoder_side(h, proj.clone())?;
    let gamma = cfg.power_budget / cfg.n_streams as f64;
    let tx = AnalogObjective {
        eff: &eff,
        scale: gamma / cfg.noise_var,
        n_rf: cfg.n_rf,
        n_streams: cfg.n_streams,
        kind: params.objective_kind,
        side: Side::Precoder,
    };
    let (f_rf, precoder) = solve(solver, &tx, params)?;
    let f_bb = digital_precoder(&f_rf, h, &proj, cfg.power_budget, cfg.n_streams)?;
    let f_full = f_bb.cascade(&f_rf.to_complex());

    let eff_rx = EffectiveChannelSet::combiner_side(h, &f_full)?;
    let rx = AnalogObjective {
        eff: &eff_rx,
        scale: 1.0 / cfg.noise_var,
        n_rf: cfg.n_rf,
        n_streams: cfg.n_streams,
        kind: params.objective_kind,
        side: Side::Combiner,
    };
    let rx_params = SolverParams { seed: derive_seed(params.seed, 1), ..params.clone() };
    let (w_rf, combiner) = solve(solver, &rx, &rx_params)?;
    let w_rf_c = w_rf.to_complex();
    let w_bb = mmse_combiners(&w_rf_c, h, &f_full, cfg.noise_var)?;
    let w_full = w_bb.cascade(&w_rf_c);
    let se = spectral_efficiency(h, &f_full, &w_full, cfg.noise_var)?;
    Ok((HbfSolution { f_rf, f_bb, w_rf, w_bb, se_per_subcarrier: se }, SwhbfStats { precoder, combiner }))
}

pub fn run_swhbf(cfg: &SystemConfig, h: &ChannelRealization, solver: SolverKind, params: &SolverParams) -> Result<HbfSolution> {
    run_swhbf_detailed(cfg, h, solver, params).map(|(s, _)| s)
}

/// Fully digital link with equal power on the strongest `N_S` modes.
pub fn dbf_baseline(cfg: &SystemConfig, h: &ChannelRealization) -> Result<f64> {
    check_channel(cfg, h)?;
    let snr = cfg.power_budget / (cfg.n_streams as f64 * cfg.noise_var);
    let rates: Vec<f64> = h
        .matrices
        .iter()
        .map(|hk| {
            let gains = linalg::hermitian_eigvals(&(hk.adjoint() * hk));
            gains.iter().take(cfg.n_streams).map(|&l| (snr * l.max(0.0)).log2_1p()).sum()
        })
        .collect();
    Ok(mean(&rates))
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

fn quantize_phase(phase: f64, bits: PsBits) -> f64 {
    match bits {
        PsBits::Infinite => phase,
        PsBits::Finite(b) => {
            let levels = (1u64 << b) as f64;
            let step = 2.0 * PI / levels;
            ((phase / step).round().rem_euclid(levels)) * step
        }
    }
}

/// Constant-modulus analog matrix from the phases of the top eigenvectors of `m`.
fn phase_matrix(m: &CMat, n_rf: usize, bits: PsBits) -> CMat {
    let n = m.nrows();
    let (_, vecs) = linalg::hermitian_eigh(m);
    let amp = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n_rf, |i, j| Complex64::from_polar(amp, quantize_phase(vecs[(i, j)].arg(), bits)))
}

/// Phase-shifter hybrid reference: quantized eigenvector phases on both sides.
pub fn pshbf_baseline(cfg: &SystemConfig, h: &ChannelRealization, bits: PsBits) -> Result<f64> {
    check_channel(cfg, h)?;
    if h.matrices.iter().all(|m| linalg::frobenius_sq(m) == 0.0) {
        return Ok(0.0);
    }
    let k = cfg.n_subcarriers as f64;
    let mut h_e = CMat::zeros(cfg.n_tx, cfg.n_tx);
    for hk in &h.matrices {
        h_e += hk.adjoint() * hk;
    }
    let f_rf = phase_matrix(&(h_e / Complex64::new(k, 0.0)), cfg.n_rf, bits);
    let proj = vec![CMat::identity(cfg.n_rx, cfg.n_rx); cfg.n_subcarriers];
    let f_bb = digital_precoder_complex(&f_rf, h, &proj, cfg.power_budget, cfg.n_streams)?;
    let f_full = f_bb.cascade(&f_rf);
    let mut t_avg = CMat::zeros(cfg.n_rx, cfg.n_rx);
    for (hk, fk) in h.matrices.iter().zip(&f_full) {
        let g = hk * fk;
        t_avg += &g * g.adjoint();
    }
    let w_rf = phase_matrix(&(t_avg / Complex64::new(k, 0.0)), cfg.n_rf, bits);
    let w_bb: DigitalBeamformerSet = mmse_combiners(&w_rf, h, &f_full, cfg.noise_var)?;
    let se = spectral_efficiency(h, &f_full, &w_bb.cascade(&w_rf), cfg.noise_var)?;
    Ok(mean(&se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channel;

    fn cfg() -> SystemConfig {
        SystemConfig { n_tx: 8, n_rx: 8, n_rf: 2, n_streams: 2, n_subcarriers: 8, ..SystemConfig::default() }
    }

    #[test]
    fn zero_channel() {
        let c = cfg();
        let h = ChannelRealization::zero(&c);
        assert_eq!(run_swhbf(&c, &h, SolverKind::Ts, &SolverParams::default()).unwrap().avg_se(), 0.0);
        assert_eq!(dbf_baseline(&c, &h).unwrap(), 0.0);
        assert_eq!(pshbf_baseline(&c, &h, PsBits::Finite(2)).unwrap(), 0.0);
    }

    #[test]
    fn dbf_dominates_and_power_holds() {
        let c = cfg();
        for seed in 0..4 {
            let h = generate_channel(&c, seed).unwrap();
            let (sol, stats) = run_swhbf_detailed(&c, &h, SolverKind::PgaTs, &SolverParams::default().with_seed(seed)).unwrap();
            assert!(dbf_baseline(&c, &h).unwrap() >= sol.avg_se() - 1e-9);
            assert!(sol.se_per_subcarrier.iter().all(|&r| r >= 0.0));
            assert_eq!(sol.f_rf.side(), Side::Precoder);
            assert_eq!(sol.w_rf.side(), Side::Combiner);
            for fk in sol.f_bb.cascade(&sol.f_rf.to_complex()) {
                assert!((linalg::frobenius_sq(&fk) - c.power_budget).abs() <= 1e-9 * c.power_budget);
            }
            assert!(stats.iterations() <= 2 * 300);
        }
    }

    #[test]
    fn rank_one_dbf() {
        let c = SystemConfig { n_paths: 1, n_rf: 1, n_streams: 1, ..cfg() };
        let h = generate_channel(&c, 2).unwrap();
        let expect = mean(
            &h.matrices
                .iter()
                .map(|m| (c.power_budget * m.norm_squared() / c.noise_var).log2_1p())
                .collect::<Vec<_>>(),
        );
        assert!((dbf_baseline(&c, &h).unwrap() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn phase_matrix_constant_modulus() {
        let c = cfg();
        let h = generate_channel(&c, 1).unwrap();
        let m = h.matrices[0].adjoint() * &h.matrices[0];
        for bits in [PsBits::Finite(1), PsBits::Finite(4), PsBits::Infinite] {
            let f = phase_matrix(&m, 2, bits);
            assert!(f.iter().all(|z| (z.norm() - 1.0 / 8f64.sqrt()).abs() < 1e-15));
        }
        assert_eq!(quantize_phase(0.8, PsBits::Finite(1)), 0.0);
        assert!((quantize_phase(-3.0, PsBits::Finite(1)) - PI).abs() < 1e-15);
        assert!((quantize_phase(1.0, PsBits::Finite(2)) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn determinism() {
        let c = cfg();
        let h = generate_channel(&c, 8).unwrap();
        let p = SolverParams::default().with_seed(5);
        let a = run_swhbf(&c, &h, SolverKind::Ts, &p).unwrap();
        let b = run_swhbf(&c, &h, SolverKind::Ts, &p).unwrap();
        assert_eq!(a.f_rf, b.f_rf);
        assert_eq!(a.w_rf, b.w_rf);
        assert_eq!(a.se_per_subcarrier, b.se_per_subcarrier);
    }
}
