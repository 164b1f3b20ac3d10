use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::forward::{ReflectionSignal, SPEED_OF_LIGHT};

pub const ZERO_PAD_FACTOR: usize = 16;

/// Peak must exceed this multiple of the median profile level.
pub const NOISE_FLOOR_FACTOR: f64 = 3.0;

/// Magnitude of the Hann-windowed, zero-padded inverse DFT of
/// `signal - reference`, with the bin spacing in seconds.
pub fn time_profile(signal: &ReflectionSignal, reference: &ReflectionSignal) -> Result<(Vec<f64>, f64)> {
    if signal.grid != reference.grid {
        return Err(Error::DimensionMismatch { expected: reference.len(), got: signal.len() });
    }
    let n = signal.len();
    let m = n * ZERO_PAD_FACTOR;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, (s, r)) in signal.values.iter().zip(&reference.values).enumerate() {
        let w = if n > 1 { 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos() } else { 1.0 };
        buf[k] = (s - r) * w;
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let dt = 1.0 / (m as f64 * signal.grid.step_ghz() * 1e9);
    Ok((buf.iter().map(|c| c.norm()).collect(), dt))
}

/// Round-trip delay of the strongest scatterer, seconds.
pub fn peak_delay(signal: &ReflectionSignal, reference: &ReflectionSignal) -> Result<f64> {
    let (p, dt) = time_profile(signal, reference)?;
    let m = p.len();
    let (k, &peak) = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(Error::NoPeak)?;
    let mut sorted = p.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[m / 2];
    if !(peak > NOISE_FLOOR_FACTOR * median) || peak == 0.0 {
        return Err(Error::NoPeak);
    }
    // Neighbours wrap: a delay near zero puts half the lobe at the end.
    let (a, c) = (p[(k + m - 1) % m], p[(k + 1) % m]);
    let denom = a - 2.0 * peak + c;
    let offset = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let mut bin = k as f64 + offset;
    if bin > m as f64 / 2.0 {
        bin -= m as f64;
    }
    Ok(bin * dt)
}

/// Distance from the aperture implied by the peak delay, mm.
pub fn matched_filter_estimate(
    signal: &ReflectionSignal,
    reference: &ReflectionSignal,
    medium_rel_permittivity: f64,
    internal_offset_mm: f64,
) -> Result<f64> {
    if !(medium_rel_permittivity > 0.0) {
        return Err(Error::InvalidArgument("permittivity must be positive".into()));
    }
    let tau = peak_delay(signal, reference)?;
    Ok(delay_to_distance(tau, medium_rel_permittivity, internal_offset_mm))
}

pub fn delay_to_distance(tau_s: f64, medium_rel_permittivity: f64, internal_offset_mm: f64) -> f64 {
    tau_s * SPEED_OF_LIGHT * 1e3 / (2.0 * medium_rel_permittivity.sqrt()) - internal_offset_mm
}
