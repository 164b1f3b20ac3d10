//! Baselines against forward-model signals.

use embound::baselines::{baseline_boundary, matched_filter_estimate, resonance_shift_estimate, ResonanceCalibration};
use embound::forward::{empty_domain_signal, synth_signal, ForwardParams};
use embound::geometry::{AntennaArray, ANTENNA_COUNT};

#[test]
fn resonance_shift_recovers_first_regime_distances() {
    let p = ForwardParams::phantom().noiseless();
    let calib = ResonanceCalibration::from_params(&p);
    for (a, d) in [(0, 5.0), (5, 9.0), (10, 13.0), (15, 16.0)] {
        let s = synth_signal(d, a, &p, 0).unwrap();
        let c = resonance_shift_estimate(&s, &calib).unwrap();
        // The nominal table ignores the few-MHz antenna offsets.
        assert!((c.default_distance() - d).abs() < 0.5, "antenna {a} d {d}: {:?}", c.distances);
    }
}

#[test]
fn resonance_scaling_invariance() {
    let p = ForwardParams::phantom();
    let calib = ResonanceCalibration::from_params(&p);
    let s = synth_signal(11.0, 3, &p, 5).unwrap();
    let mut scaled = s.clone();
    for v in &mut scaled.values {
        *v *= 2.5;
    }
    assert_eq!(resonance_shift_estimate(&s, &calib).unwrap(), resonance_shift_estimate(&scaled, &calib).unwrap());
}

#[test]
fn matched_filter_reference_invariance() {
    let p = ForwardParams::phantom();
    let r = empty_domain_signal(2, &p).unwrap();
    let s = synth_signal(12.0, 2, &p, 1).unwrap();
    let base = matched_filter_estimate(&s, &r, 1.0, 5.0).unwrap();
    // Adding the same component to signal and reference leaves the
    // difference, and so the delay, unchanged.
    let (mut s2, mut r2) = (s.clone(), r.clone());
    for (k, (a, b)) in s2.values.iter_mut().zip(r2.values.iter_mut()).enumerate() {
        let extra = num_complex::Complex64::from_polar(0.1, 0.01 * k as f64);
        *a += extra;
        *b += extra;
    }
    let shifted = matched_filter_estimate(&s2, &r2, 1.0, 5.0).unwrap();
    assert!((shifted - base).abs() < 1e-9, "{base} vs {shifted}");
    assert!(matched_filter_estimate(&r, &r, 1.0, 5.0).is_err());
}

#[test]
fn baseline_boundary_from_resonance_estimates() {
    let p = ForwardParams::phantom().noiseless();
    let calib = ResonanceCalibration::from_params(&p);
    let array = AntennaArray::<f64>::circular(115.0);
    let est: Vec<Option<f64>> = (0..ANTENNA_COUNT)
        .map(|a| {
            resonance_shift_estimate(&synth_signal(10.0, a, &p, 0).unwrap(), &calib).ok().map(|c| c.default_distance())
        })
        .collect();
    let b = baseline_boundary(&est, &array).unwrap();
    let r = 105.0;
    let worst = b.points().iter().map(|q| (q.norm() - r).abs()).fold(0.0, f64::max);
    assert!(worst < 0.6, "{worst}");
    let mut gappy = est.clone();
    gappy[4] = None;
    assert!(baseline_boundary(&gappy, &array).is_ok());
}
