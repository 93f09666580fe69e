use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::SystemConfig;
use crate::error::{HbfError, Result};

/// Phase-shifter resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PsBits {
    Finite(u32),
    Infinite,
}

impl fmt::Display for PsBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsBits::Finite(b) => write!(f, "{b}"),
            PsBits::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for PsBits {
    type Err = HbfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinite" => Ok(PsBits::Infinite),
            _ => s
                .parse::<u32>()
                .ok()
                .filter(|b| matches!(b, 1 | 2 | 4))
                .map(PsBits::Finite)
                .ok_or_else(|| HbfError::InvalidConfig(format!("phase-shifter bits must be 1, 2, 4 or inf, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    Dbf,
    PsHbf(PsBits),
    SwHbf,
}

/// Device powers in milliwatts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    pub p_lna: f64,
    pub p_sp: f64,
    pub p_c: f64,
    pub p_sw: f64,
    pub p_m: f64,
    pub p_lo: f64,
    pub p_lpf: f64,
    pub p_bbamp: f64,
    pub p_adc: f64,
    pub p_ps_by_bits: BTreeMap<u32, f64>,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_lna: 39.0,
            p_sp: 19.5,
            p_c: 19.5,
            p_sw: 5.0,
            p_m: 19.0,
            p_lo: 5.0,
            p_lpf: 14.0,
            p_bbamp: 5.0,
            p_adc: 240.0,
            p_ps_by_bits: BTreeMap::from([(1, 10.0), (2, 20.0), (4, 40.0)]),
        }
    }
}

impl PowerModel {
    /// Power of one RF chain: mixer, LO, low-pass filter and baseband amplifier.
    pub fn p_rf(&self) -> f64 {
        self.p_m + self.p_lo + self.p_lpf + self.p_bbamp
    }

    /// Phase-shifter power; unquantized shifters use the finest tabulated entry.
    pub fn p_ps(&self, bits: PsBits) -> Result<f64> {
        match bits {
            PsBits::Finite(b) => self
                .p_ps_by_bits
                .get(&b)
                .copied()
                .ok_or_else(|| HbfError::InvalidConfig(format!("no phase-shifter power for {b} bits"))),
            PsBits::Infinite => self
                .p_ps_by_bits
                .values()
                .next_back()
                .copied()
                .ok_or_else(|| HbfError::InvalidConfig("phase-shifter power table is empty".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p_lna, self.p_sp, self.p_c, self.p_sw, self.p_m, self.p_lo, self.p_lpf, self.p_bbamp, self.p_adc];
        if all.iter().chain(self.p_ps_by_bits.values()).any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(HbfError::InvalidConfig("device powers must be positive".into()));
        }
        Ok(())
    }
}

/// Total transceiver power in watts.
pub fn power_total(arch: Architecture, cfg: &SystemConfig, model: &PowerModel) -> Result<f64> {
    model.validate()?;
    let antennas = (cfg.n_tx + cfg.n_rx) as f64;
    let n_rf = cfg.n_rf as f64;
    let chains = 2.0 * n_rf * (model.p_rf() + model.p_c + 2.0 * model.p_adc);
    let mw = match arch {
        Architecture::Dbf => antennas * (model.p_lna + model.p_rf() + 2.0 * model.p_adc),
        Architecture::PsHbf(bits) => antennas * (model.p_lna + model.p_sp + n_rf * model.p_ps(bits)?) + chains,
        Architecture::SwHbf => antennas * (model.p_lna + model.p_sp + n_rf * model.p_sw) + chains,
    };
    Ok(mw / 1000.0)
}

/// Spectral efficiency per watt.
pub fn energy_efficiency(avg_se: f64, power_w: f64) -> Result<f64> {
    if !(power_w > 0.0) {
        return Err(HbfError::InvalidArgument(format!("power must be positive, got {power_w}")));
    }
    Ok(avg_se / power_w)
}
