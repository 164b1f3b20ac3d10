//! Comparison estimators: resonance-shift lookup with its regime ambiguity,
//! and time-delay estimation by matched filtering.

mod matched;
mod resonance;

pub use matched::{
    delay_to_distance, matched_filter_estimate, peak_delay, time_profile, NOISE_FLOOR_FACTOR, ZERO_PAD_FACTOR,
};
pub use resonance::{
    candidates_for, coarsen, in_modelled_range, resonance_frequency, resonance_resolution_study,
    resonance_shift_estimate, CandidateSet, ResolutionRow, ResonanceCalibration, MATCH_TOLERANCE_GHZ,
};

use crate::error::{Error, Result};
use crate::geometry::{spline_close, AntennaArray, Boundary, BoundarySource, Point2};

/// Closed boundary through the landing points of the antennas that have an
/// estimate; missing antennas are skipped.
pub fn baseline_boundary(estimates: &[Option<f64>], array: &AntennaArray<f64>) -> Result<Boundary<f64>> {
    if estimates.len() != array.apertures().len() {
        return Err(Error::DimensionMismatch { expected: array.apertures().len(), got: estimates.len() });
    }
    let pts: Vec<Point2<f64>> = estimates
        .iter()
        .zip(array.apertures().iter().zip(array.inward_normals()))
        .filter_map(|(e, (&p, &n))| e.map(|d| p + n * d))
        .collect();
    Ok(spline_close(&pts)?.with_source(BoundarySource::Baseline))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cast_normals, point_ring_distance};

    #[test]
    fn equal_estimates_give_a_circle() {
        let array = AntennaArray::circular(115.0);
        let b = baseline_boundary(&[Some(15.0); 16], &array).unwrap();
        assert_eq!(b.source(), BoundarySource::Baseline);
        assert!(b.points().iter().all(|p| (p.norm() - 100.0).abs() < 0.3));
    }

    #[test]
    fn missing_antenna_is_skipped() {
        let array = AntennaArray::circular(115.0);
        let mut est = vec![Some(15.0); 16];
        est[4] = None;
        let full = baseline_boundary(&[Some(15.0); 16], &array).unwrap();
        let b = baseline_boundary(&est, &array).unwrap();
        assert!(b.area() < full.area());
        assert!((b.area() / full.area() - 1.0).abs() < 0.02);
        assert!(baseline_boundary(&[None; 16], &array).is_err());
    }

    #[test]
    fn perfect_estimates_recover_shape() {
        let array = AntennaArray::circular(115.0);
        let truth = Boundary::ellipse(104.0, 96.0, Point2::new(2.0, -1.0), 20.0, 720).unwrap();
        let est: Vec<Option<f64>> = cast_normals(&array, &truth).unwrap().values().iter().map(|&v| Some(v)).collect();
        let b = baseline_boundary(&est, &array).unwrap();
        let worst = b.points().iter().map(|&p| point_ring_distance(p, truth.points())).fold(0.0, f64::max);
        assert!(worst < 1.0, "{worst}");
    }
}
