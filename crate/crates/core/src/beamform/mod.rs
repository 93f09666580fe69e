//! Spectral efficiency, analog objectives and closed-form digital stages.

mod digital;
mod objective;
mod types;

pub use digital::{digital_precoder, digital_precoder_complex, mmse_combiner, mmse_combiners, projector};
pub use objective::{
    analog_objective_f0, analog_objective_f1, f0_pinv_value, f0_qr_value, f1_value, gradient_f0, gradient_f0_dense,
    spectral_efficiency, ObjectiveForm, COND_LIMIT,
};
pub use types::{AnalogBeamformer, DigitalBeamformerSet, EffectiveChannelSet, HbfSolution, Side};

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
