use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{resonance_calibration, ForwardParams, ReflectionSignal, MAX_DISTANCE_MM};

/// Default matching tolerance between a measured resonance and the table.
pub const MATCH_TOLERANCE_GHZ: f64 = 0.002;

/// Distance to resonance lookup, split into monotone regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCalibration {
    /// `(distance mm, resonance GHz)` rows in increasing distance.
    pub table: Vec<(f64, f64)>,
    /// Distances where the trend reverses.
    pub regime_bounds: Vec<f64>,
    pub tolerance_ghz: f64,
}

impl ResonanceCalibration {
    /// Table for the forward model's resonance curve.
    pub fn from_params(params: &ForwardParams) -> Self {
        Self {
            table: resonance_calibration(params),
            regime_bounds: params.resonance.turning_points().to_vec(),
            tolerance_ghz: MATCH_TOLERANCE_GHZ,
        }
    }

    /// Same table shifted by a constant offset, for an antenna whose
    /// resonance is biased.
    pub fn shifted(&self, offset_ghz: f64) -> Self {
        let mut c = self.clone();
        c.table.iter_mut().for_each(|r| r.1 += offset_ghz);
        c
    }

    /// Index ranges `[lo, hi]` of the table rows in each regime.
    fn regimes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut lo = 0;
        for &b in &self.regime_bounds {
            let hi = self.table.iter().rposition(|r| r.0 <= b + 1e-9).unwrap_or(lo);
            if hi > lo {
                out.push((lo, hi));
            }
            lo = hi;
        }
        if self.table.len() > lo + 1 {
            out.push((lo, self.table.len() - 1));
        }
        out
    }
}

/// Up to one distance per regime that explains a resonance frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub resonance_ghz: f64,
    /// Ascending distances, mm.
    pub distances: Vec<f64>,
    /// Regime (0-based) of each distance.
    pub regimes: Vec<usize>,
    pub selected: usize,
}

impl CandidateSet {
    pub fn default_distance(&self) -> f64 {
        self.distances[self.selected]
    }
}

/// Sub-bin location of the `|S|` minimum, GHz.
pub fn resonance_frequency(signal: &ReflectionSignal) -> Result<f64> {
    let mag = signal.magnitude();
    let n = mag.len();
    let k = mag.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).ok_or(Error::NoResonance)?;
    if k == 0 || k + 1 == n {
        return Err(Error::NoResonance);
    }
    let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let g = &signal.grid;
    Ok(g.freq_ghz(k) + offset.clamp(-0.5, 0.5) * g.step_ghz())
}

/// Candidate distances for a measured resonance. Within each monotone
/// regime the table is inverted by linear interpolation; a resonance just
/// outside a regime's span (within the tolerance) maps to its nearer end.
pub fn candidates_for(resonance_ghz: f64, calib: &ResonanceCalibration) -> Result<CandidateSet> {
    let tol = calib.tolerance_ghz;
    let mut distances = Vec::new();
    let mut regimes = Vec::new();
    for (r, (lo, hi)) in calib.regimes().into_iter().enumerate() {
        let rows = &calib.table[lo..=hi];
        let (fmin, fmax) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.1), b.max(r.1)));
        if resonance_ghz < fmin - tol || resonance_ghz > fmax + tol {
            continue;
        }
        let f = resonance_ghz.clamp(fmin, fmax);
        let d = rows
            .windows(2)
            .find_map(|w| {
                let ((d0, f0), (d1, f1)) = (w[0], w[1]);
                let between = (f0 <= f && f <= f1) || (f1 <= f && f <= f0);
                between.then(|| if f1 == f0 { d0 } else { d0 + (f - f0) / (f1 - f0) * (d1 - d0) })
            })
            .unwrap_or(rows[0].0);
        distances.push(d);
        regimes.push(r);
    }
    if distances.is_empty() {
        return Err(Error::NoResonance);
    }
    let selected = regimes.iter().position(|&r| r == 0).unwrap_or(0);
    Ok(CandidateSet { resonance_ghz, distances, regimes, selected })
}

pub fn resonance_shift_estimate(signal: &ReflectionSignal, calib: &ResonanceCalibration) -> Result<CandidateSet> {
    candidates_for(resonance_frequency(signal)?, calib)
}

/// Keeps every `factor`-th sample on the matching coarse grid.
pub fn coarsen(signal: &ReflectionSignal, factor: usize) -> ReflectionSignal {
    let factor = factor.max(1);
    let grid = signal.grid.coarsened(factor);
    ReflectionSignal {
        values: signal.values.iter().step_by(factor).take(grid.n_points).copied().collect(),
        grid,
        antenna_index: signal.antenna_index,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub factor: usize,
    pub step_mhz: u32,
    pub estimate_mm: Option<f64>,
    pub abs_error_mm: Option<f64>,
}

/// Default-selected estimate on grids coarsened by each factor.
pub fn resonance_resolution_study(
    signal: &ReflectionSignal,
    calib: &ResonanceCalibration,
    truth_mm: f64,
    factors: &[usize],
) -> Result<Vec<ResolutionRow>> {
    if factors.contains(&0) {
        return Err(Error::InvalidArgument("factors must be >= 1".into()));
    }
    Ok(factors
        .iter()
        .map(|&factor| {
            let coarse = coarsen(signal, factor);
            let est = resonance_shift_estimate(&coarse, calib).ok().map(|c| c.default_distance());
            ResolutionRow {
                factor,
                step_mhz: coarse.grid.step_mhz,
                estimate_mm: est,
                abs_error_mm: est.map(|e| (e - truth_mm).abs()),
            }
        })
        .collect())
}

/// Whether `d` is a usable distance estimate.
pub fn in_modelled_range(d: f64) -> bool {
    (0.0..=MAX_DISTANCE_MM).contains(&d)
}
