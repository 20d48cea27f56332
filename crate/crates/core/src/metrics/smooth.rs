use crate::error::Result;
use crate::mesh::VectorField;
use crate::spectral::GhdBasis;
use crate::surrogates::{project_coefficients, reconstruct_field, WssSeries};

/// Project each axis of `field` onto the first `k` modes.
pub fn lowpass_smooth(basis: &GhdBasis, k: usize, field: &VectorField) -> Result<VectorField> {
    reconstruct_field(basis, &project_coefficients(basis, k, field)?)
}

pub fn lowpass_series(basis: &GhdBasis, k: usize, series: &WssSeries) -> Result<WssSeries> {
    let frames = series
        .frames()
        .iter()
        .map(|f| lowpass_smooth(basis, k, f))
        .collect::<Result<Vec<_>>>()?;
    WssSeries::new(frames, series.times().to_vec())
}

/// Squared norm of the part of `field` outside the span of the first `k` modes.
pub fn highfreq_energy(basis: &GhdBasis, k: usize, field: &VectorField) -> Result<f64> {
    let total = field.l2_norm().powi(2);
    let kept: f64 = project_coefficients(basis, k, field)?
        .iter()
        .flatten()
        .map(|c| c * c)
        .sum();
    Ok((total - kept).max(0.0))
}

pub fn highfreq_energy_series(basis: &GhdBasis, k: usize, series: &WssSeries) -> Result<f64> {
    series.frames().iter().map(|f| highfreq_energy(basis, k, f)).sum()
}
