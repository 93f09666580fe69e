//! Wideband geometric MIMO-OFDM channel.
//!
//! Each realization is a sum of `L_p` planar-wave paths observed through a
//! uniform linear array at both ends. Path draws come from a [`SimRng`] in a
//! fixed order: for each path, the complex gain (real then imaginary part),
//! the delay, the angle of arrival and the angle of departure.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{HbfError, Result};
use crate::linalg::{CMat, CVec};
use crate::rng::{rng_from_seed, SimRng};

/// Physical and system parameters of one point-to-point link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_rf: usize,
    pub n_streams: usize,
    pub n_subcarriers: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// Antenna spacing in wavelengths.
    pub spacing: f64,
    pub n_paths: usize,
    /// Transmit power budget per subcarrier, watts.
    pub power_budget: f64,
    pub noise_var: f64,
    #[serde(default = "default_rolloff")]
    pub rolloff: f64,
    /// Cyclic prefix length in samples; `K / 4` when absent.
    #[serde(default)]
    pub cp_len: Option<usize>,
    /// Sampling period in seconds; `1 / B` when absent.
    #[serde(default)]
    pub sample_period: Option<f64>,
    /// Scale taps by `sqrt(N_T N_R / L_p)`.
    #[serde(default)]
    pub channel_norm: bool,
}

fn default_rolloff() -> f64 {
    1.0
}

impl Default for SystemConfig {
    fn default() -> Self {
        let k = 64;
        Self {
            n_tx: 64,
            n_rx: 64,
            n_rf: 4,
            n_streams: 4,
            n_subcarriers: k,
            carrier_hz: 140e9,
            bandwidth_hz: 10e9,
            spacing: 0.5,
            n_paths: 4,
            power_budget: 10.0 * k as f64,
            noise_var: 1.0,
            rolloff: 1.0,
            cp_len: None,
            sample_period: None,
            channel_norm: false,
        }
    }
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len.unwrap_or((self.n_subcarriers / 4).max(1))
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period.unwrap_or(1.0 / self.bandwidth_hz)
    }

    /// Fractional bandwidth `B / f_c`.
    pub fn frac_bw(&self) -> f64 {
        self.bandwidth_hz / self.carrier_hz
    }

    /// SNR as `P_b / (K sigma^2)`, linear.
    pub fn snr_linear(&self) -> f64 {
        self.power_budget / (self.n_subcarriers as f64 * self.noise_var)
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr_linear().log10()
    }

    /// Sets the power budget so that `P_b / (K sigma^2)` equals `snr_db`.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.power_budget = 10f64.powf(snr_db / 10.0) * self.n_subcarriers as f64 * self.noise_var;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth_hz: f64) -> Self {
        self.bandwidth_hz = bandwidth_hz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HbfError::InvalidConfig(msg));
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("antenna counts must be at least 1".into());
        }
        if self.n_streams == 0 || self.n_streams > self.n_rf {
            return bad(format!("need 1 <= n_streams ({}) <= n_rf ({})", self.n_streams, self.n_rf));
        }
        if self.n_rf > self.n_tx.min(self.n_rx) {
            return Err(HbfError::Infeasible(format!("n_rf ({}) exceeds min(n_tx, n_rx)", self.n_rf)));
        }
        if self.n_subcarriers == 0 || self.n_paths == 0 {
            return bad("n_subcarriers and n_paths must be at least 1".into());
        }
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("spacing", self.spacing),
            ("power_budget", self.power_budget),
            ("noise_var", self.noise_var),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.frac_bw() >= 2.0 {
            return bad(format!("fractional bandwidth {} must be below 2", self.frac_bw()));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return bad(format!("rolloff must lie in (0, 1], got {}", self.rolloff));
        }
        if self.cp_len() == 0 {
            return bad("cp_len must be at least 1".into());
        }
        if let Some(ts) = self.sample_period {
            if !(ts.is_finite() && ts > 0.0) {
                return bad(format!("sample_period must be positive, got {ts}"));
            }
        }
        Ok(())
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain: Complex64,
    pub delay: f64,
    pub aoa: f64,
    pub aod: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `H_k`, one `N_R x N_T` matrix per subcarrier.
    pub matrices: Vec<CMat>,
    pub paths: PathSet,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn n_subcarriers(&self) -> usize {
        self.matrices.len()
    }

    /// A realization with every path gain forced to zero.
    pub fn zero(cfg: &SystemConfig) -> Self {
        let paths = PathSet {
            paths: vec![Path { gain: Complex64::new(0.0, 0.0), delay: 0.0, aoa: 0.0, aod: 0.0 }; cfg.n_paths],
        };
        let matrices = vec![CMat::zeros(cfg.n_rx, cfg.n_tx); cfg.n_subcarriers];
        Self { matrices, paths, seed: 0 }
    }
}

/// ULA response `a(theta, f)`; entry `m` is `exp(-j 2 pi m spacing (f/f_c) sin theta) / sqrt(n)`.
pub fn array_response(theta: f64, freq: f64, n: usize, spacing: f64, carrier: f64) -> Result<CVec> {
    if n == 0 {
        return Err(HbfError::InvalidArgument("antenna count must be positive".into()));
    }
    if !(freq > 0.0 && carrier > 0.0) {
        return Err(HbfError::InvalidArgument(format!(
            "frequencies must be positive (f = {freq}, f_c = {carrier})"
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let phase_step = -2.0 * PI * spacing * (freq / carrier) * theta.sin();
    Ok(CVec::from_iterator(
        n,
        (0..n).map(|m| Complex64::from_polar(scale, phase_step * m as f64)),
    ))
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Raised-cosine pulse with period `ts` and roll-off `beta`.
pub fn raised_cosine(t: f64, ts: f64, beta: f64) -> f64 {
    let edge = ts / (2.0 * beta);
    if (t.abs() - edge).abs() <= 1e-12 * ts {
        return PI / 4.0 * sinc(1.0 / (2.0 * beta));
    }
    let r = t / ts;
    sinc(r) * (PI * beta * r).cos() / (1.0 - (2.0 * beta * r).powi(2))
}

/// Subcarrier frequencies `f_k = f_c + (k - (K+1)/2) B / K`, `k = 1..K`.
pub fn subcarrier_frequencies(cfg: &SystemConfig) -> Vec<f64> {
    let k_total = cfg.n_subcarriers as f64;
    (1..=cfg.n_subcarriers)
        .map(|k| cfg.carrier_hz + (k as f64 - (k_total + 1.0) / 2.0) * cfg.bandwidth_hz / k_total)
        .collect()
}

/// Draws `L_p` paths in the documented order.
pub fn generate_paths(cfg: &SystemConfig, rng: &mut SimRng) -> PathSet {
    let max_delay = (cfg.cp_len() as f64 - 1.0) * cfg.sample_period();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let paths = (0..cfg.n_paths)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let delay = rng.random::<f64>() * max_delay;
            let aoa = -PI / 2.0 + PI * rng.random::<f64>();
            let aod = -PI / 2.0 + PI * rng.random::<f64>();
            Path { gain: Complex64::new(re * half, im * half), delay, aoa, aod }
        })
        .collect();
    PathSet { paths }
}

fn norm_factor(cfg: &SystemConfig) -> f64 {
    if cfg.channel_norm {
        ((cfg.n_tx * cfg.n_rx) as f64 / cfg.n_paths as f64).sqrt()
    } else {
        1.0
    }
}

/// Delay-domain tap `H_f[d]` at frequency `freq`.
pub fn tap_channel(d: usize, freq: f64, paths: &PathSet, cfg: &SystemConfig) -> Result<CMat> {
    let taps = cfg.cp_len();
    if d >= taps {
        return Err(HbfError::InvalidArgument(format!("tap index {d} outside 0..{taps}")));
    }
    let responses = path_responses(freq, paths, cfg)?;
    Ok(tap_from_responses(d, paths, &responses, cfg))
}

type Responses = Vec<(CVec, CVec)>;

fn path_responses(freq: f64, paths: &PathSet, cfg: &SystemConfig) -> Result<Responses> {
    paths
        .paths
        .iter()
        .map(|p| {
            Ok((
                array_response(p.aoa, freq, cfg.n_rx, cfg.spacing, cfg.carrier_hz)?,
                array_response(p.aod, freq, cfg.n_tx, cfg.spacing, cfg.carrier_hz)?,
            ))
        })
        .collect()
}

fn tap_from_responses(d: usize, paths: &PathSet, responses: &Responses, cfg: &SystemConfig) -> CMat {
    let ts = cfg.sample_period();
    let scale = norm_factor(cfg);
    let mut h = CMat::zeros(cfg.n_rx, cfg.n_tx);
    for (p, (ar, at)) in paths.paths.iter().zip(responses) {
        let coeff = p.gain * raised_cosine(d as f64 * ts - p.delay, ts, cfg.rolloff) * scale;
        if coeff == Complex64::new(0.0, 0.0) {
            continue;
        }
        h += (ar * at.adjoint()) * coeff;
    }
    h
}

/// Frequency-domain channel of every subcarrier for the given paths.
pub fn channel_from_paths(cfg: &SystemConfig, paths: PathSet, seed: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    let k_total = cfg.n_subcarriers;
    let ts = cfg.sample_period();
    let scale = norm_factor(cfg);
    let freqs = subcarrier_frequencies(cfg);
    let mut matrices = Vec::with_capacity(k_total);
    for (idx, &fk) in freqs.iter().enumerate() {
        let k = (idx + 1) as f64;
        let responses = path_responses(fk, &paths, cfg)?;
        // The array responses do not depend on the tap, so the tap sum
        // collapses into one complex coefficient per path.
        let mut h = CMat::zeros(cfg.n_rx, cfg.n_tx);
        for (p, (ar, at)) in paths.paths.iter().zip(&responses) {
            let mut coeff = Complex64::new(0.0, 0.0);
            for d in 0..cfg.cp_len() {
                let pulse = raised_cosine(d as f64 * ts - p.delay, ts, cfg.rolloff);
                let phase = -2.0 * PI * k * d as f64 / k_total as f64;
                coeff += Complex64::from_polar(pulse, phase);
            }
            let coeff = coeff * p.gain * scale;
            h += (ar * at.adjoint()) * coeff;
        }
        matrices.push(h);
    }
    Ok(ChannelRealization { matrices, paths, seed })
}

/// Draws paths from `seed` and builds every subcarrier channel.
pub fn generate_channel(cfg: &SystemConfig, seed: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    let mut rng = rng_from_seed(seed);
    let paths = generate_paths(cfg, &mut rng);
    channel_from_paths(cfg, paths, seed)
}

/// Reference tap-by-tap evaluation of `H_k = sum_d H_{f_k}[d] exp(-j 2 pi k d / K)`.
pub fn channel_by_taps(cfg: &SystemConfig, paths: &PathSet, k: usize) -> Result<CMat> {
    let freqs = subcarrier_frequencies(cfg);
    let fk = *freqs
        .get(k.wrapping_sub(1))
        .ok_or_else(|| HbfError::InvalidArgument(format!("subcarrier {k} outside 1..={}", freqs.len())))?;
    let responses = path_responses(fk, paths, cfg)?;
    let mut h = CMat::zeros(cfg.n_rx, cfg.n_tx);
    for d in 0..cfg.cp_len() {
        let phase = -2.0 * PI * (k * d) as f64 / cfg.n_subcarriers as f64;
        h += tap_from_responses(d, paths, &responses, cfg) * Complex64::from_polar(1.0, phase);
    }
    Ok(h)
}
