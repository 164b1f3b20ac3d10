//! Synthetic surrogate for the phantom measurement campaign: per-antenna
//! complex reflection coefficients as a function of the antenna-to-boundary
//! distance.
//!
//! A signal is modelled as
//!
//! ```text
//! S(f) = B(f) * (1 - dip(f)) + G(d) * exp(-j 2 pi f tau(d)) + noise
//! tau(d) = 2 (d + d0) sqrt(eps_med) / c
//! ```
//!
//! where `B` is a smooth antenna baseline, `dip` a Lorentzian notch centred on
//! the load-dependent resonance, and the delayed term is the echo from the
//! skin. The resonance curve is a C1 piecewise cubic whose three monotone
//! regimes overlap, so a single resonance frequency maps back to as many as
//! three distances.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{cast_normals, AntennaArray, Boundary, NormalLengths, Point2, RigidTransform, ANTENNA_COUNT};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Longest distance the forward model describes, mm.
pub const MAX_DISTANCE_MM: f64 = 40.0;

/// Label range of the phantom training campaign, mm.
pub const TRAINING_ENVELOPE_MM: (f64, f64) = (3.8, 17.5);

const MAX_POSE_ATTEMPTS: usize = 1000;

/// Uniform frequency lattice, stored in integer MHz so the end point is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start_mhz: u32,
    pub step_mhz: u32,
    pub n_points: usize,
}

impl Default for FrequencyGrid {
    /// 0.7 to 1.6 GHz in 451 points, 2 MHz apart.
    fn default() -> Self {
        Self { start_mhz: 700, step_mhz: 2, n_points: 451 }
    }
}

impl FrequencyGrid {
    pub fn freq_ghz(&self, k: usize) -> f64 {
        (self.start_mhz as f64 + (self.step_mhz as usize * k) as f64) / 1000.0
    }

    pub fn freqs_ghz(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.freq_ghz(k)).collect()
    }

    pub fn start_ghz(&self) -> f64 {
        self.freq_ghz(0)
    }

    pub fn stop_ghz(&self) -> f64 {
        self.freq_ghz(self.n_points - 1)
    }

    pub fn step_ghz(&self) -> f64 {
        self.step_mhz as f64 / 1000.0
    }

    pub fn bandwidth_ghz(&self) -> f64 {
        self.stop_ghz() - self.start_ghz()
    }

    /// Every `factor`-th point starting at the first; the coarse grid used
    /// when frequency resolution is reduced without interpolation.
    pub fn coarsened(&self, factor: usize) -> Self {
        Self {
            start_mhz: self.start_mhz,
            step_mhz: self.step_mhz * factor as u32,
            n_points: (self.n_points - 1) / factor + 1,
        }
    }
}

/// Antenna resonance frequency against distance: cubic Hermite pieces with
/// zero slope at the interior knots (the regime turning points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCurve {
    /// Regime boundaries, mm; first is 0 and last is [`MAX_DISTANCE_MM`].
    pub knots_mm: Vec<f64>,
    /// Resonance at each knot, GHz.
    pub values_ghz: Vec<f64>,
    /// Slopes at the first and last knot, GHz/mm.
    pub end_slopes: (f64, f64),
}

impl Default for ResonanceCurve {
    fn default() -> Self {
        Self {
            knots_mm: vec![0.0, 18.0, 30.0, 40.0],
            values_ghz: vec![1.36, 0.96, 1.26, 1.06],
            end_slopes: (-0.03, -0.02),
        }
    }
}

impl ResonanceCurve {
    pub fn eval(&self, d: f64) -> f64 {
        let k = &self.knots_mm;
        let n = k.len();
        let d = d.clamp(k[0], k[n - 1]);
        let i = (0..n - 1).find(|&i| d <= k[i + 1]).unwrap_or(n - 2);
        let slope = |j: usize| {
            if j == 0 {
                self.end_slopes.0
            } else if j == n - 1 {
                self.end_slopes.1
            } else {
                0.0
            }
        };
        let h = k[i + 1] - k[i];
        let t = (d - k[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values_ghz[i] + h10 * h * slope(i) + h01 * self.values_ghz[i + 1] + h11 * h * slope(i + 1)
    }

    /// Interior knots, where the trend reverses.
    pub fn turning_points(&self) -> &[f64] {
        &self.knots_mm[1..self.knots_mm.len() - 1]
    }
}

/// Smooth real antenna baseline `B(f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineShape {
    pub level: f64,
    /// Relative linear change across the band, -1 at the low edge to +1 at the top.
    pub tilt: f64,
    pub ripple: f64,
    /// Ripple periods across the band.
    pub ripple_periods: f64,
}

impl BaselineShape {
    fn eval(&self, f_ghz: f64, grid: &FrequencyGrid) -> f64 {
        let x = (f_ghz - grid.start_ghz()) / grid.bandwidth_ghz();
        self.level * (1.0 + self.tilt * (2.0 * x - 1.0) + self.ripple * (2.0 * PI * self.ripple_periods * x).cos())
    }
}

/// All knobs of the forward model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardParams {
    pub grid: FrequencyGrid,
    pub resonance: ResonanceCurve,
    pub baseline: BaselineShape,
    /// Notch depth in dB at distance 0 and at [`MAX_DISTANCE_MM`]; linear in between.
    pub dip_depth_db: (f64, f64),
    /// Quality factor at distance 0 and at [`MAX_DISTANCE_MM`]; linear in between.
    pub dip_q: (f64, f64),
    /// Echo magnitude at distance 0.
    pub echo_gain: f64,
    /// e-folding distance of the echo magnitude, mm; infinite means constant.
    pub echo_decay_mm: f64,
    pub medium_rel_permittivity: f64,
    /// Path inside the antenna before the aperture, mm.
    pub internal_offset_mm: f64,
    /// Standard deviation of each of the real and imaginary noise parts.
    pub noise_sigma: f64,
    /// Per-antenna resonance offsets, MHz.
    pub per_antenna_bias_mhz: Vec<f64>,
}

impl Default for ForwardParams {
    fn default() -> Self {
        Self::phantom()
    }
}

impl ForwardParams {
    /// Laboratory phantom campaign.
    pub fn phantom() -> Self {
        Self {
            grid: FrequencyGrid::default(),
            resonance: ResonanceCurve::default(),
            baseline: BaselineShape { level: 0.6, tilt: 0.1, ripple: 0.03, ripple_periods: 1.0 },
            dip_depth_db: (-18.0, -8.0),
            dip_q: (40.0, 60.0),
            echo_gain: 0.25,
            echo_decay_mm: 60.0,
            medium_rel_permittivity: 1.0,
            internal_offset_mm: 5.0,
            noise_sigma: 0.005,
            per_antenna_bias_mhz: (0..ANTENNA_COUNT).map(|i| 3.0 * (1.3 * i as f64 + 0.4).sin()).collect(),
        }
    }

    /// Shifted domain standing in for clinical scans: different baseline,
    /// more noise, and distances spanning 1 to 20 mm.
    pub fn clinical_like() -> Self {
        Self {
            baseline: BaselineShape { level: 0.55, tilt: -0.12, ripple: 0.06, ripple_periods: 1.5 },
            noise_sigma: 0.01,
            ..Self::phantom()
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.medium_rel_permittivity >= 1.0) {
            return Err(Error::InvalidArgument("medium permittivity must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise sigma must be >= 0".into()));
        }
        if self.per_antenna_bias_mhz.len() != ANTENNA_COUNT {
            return Err(Error::InvalidArgument(format!(
                "need {ANTENNA_COUNT} antenna biases, got {}",
                self.per_antenna_bias_mhz.len()
            )));
        }
        let rc = &self.resonance;
        if rc.knots_mm.len() < 2 || rc.knots_mm.len() != rc.values_ghz.len() {
            return Err(Error::InvalidArgument("resonance curve knots and values disagree".into()));
        }
        Ok(())
    }

    pub fn dip_depth_db_at(&self, d: f64) -> f64 {
        lerp(self.dip_depth_db, d / MAX_DISTANCE_MM)
    }

    pub fn dip_q_at(&self, d: f64) -> f64 {
        lerp(self.dip_q, d / MAX_DISTANCE_MM)
    }

    pub fn echo_gain_at(&self, d: f64) -> f64 {
        self.echo_gain * (-d / self.echo_decay_mm).exp()
    }

    /// Round-trip delay to a scatterer at `d` mm, seconds.
    pub fn delay_s(&self, d: f64) -> f64 {
        2.0 * (d + self.internal_offset_mm) * 1e-3 * self.medium_rel_permittivity.sqrt() / SPEED_OF_LIGHT
    }

    /// Resonance of antenna `antenna_index` at distance `d`, GHz.
    pub fn resonance_ghz(&self, d: f64, antenna_index: usize) -> f64 {
        self.resonance.eval(d) + self.per_antenna_bias_mhz[antenna_index] * 1e-3
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("params serialize");
        hex::encode(Sha256::digest(&json))
    }
}

fn lerp((a, b): (f64, f64), t: f64) -> f64 {
    a + (b - a) * t
}

/// One antenna's reflection coefficient across the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSignal {
    pub values: Vec<Complex64>,
    pub grid: FrequencyGrid,
    pub antenna_index: usize,
}

impl ReflectionSignal {
    pub fn new(values: Vec<Complex64>, grid: FrequencyGrid, antenna_index: usize) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::DimensionMismatch { expected: grid.n_points, got: values.len() });
        }
        Ok(Self { values, grid, antenna_index })
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm()).collect()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    pub fn imag(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.im).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rigid placement of the phantom inside the array.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub dx: f64,
    pub dy: f64,
    pub rotation_deg: f64,
}

impl Pose {
    pub fn transform(&self) -> RigidTransform<f64> {
        RigidTransform::new(self.rotation_deg, self.dx, self.dy)
    }
}

/// The 16 reflection signals of one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub id: usize,
    pub phantom_id: String,
    pub pose: Pose,
    pub labels: Option<NormalLengths<f64>>,
    pub signals: Vec<ReflectionSignal>,
}

/// Sampling ranges for phantom poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRanges {
    pub dx_mm: (f64, f64),
    pub dy_mm: (f64, f64),
    pub rotation_deg: (f64, f64),
    /// Poses whose labels fall outside this range are resampled; `None`
    /// accepts any pose that fits inside the array.
    pub label_envelope_mm: Option<(f64, f64)>,
}

impl Default for PoseRanges {
    fn default() -> Self {
        Self {
            dx_mm: (-4.0, 4.0),
            dy_mm: (-4.0, 4.0),
            rotation_deg: (-90.0, 90.0),
            label_envelope_mm: Some(TRAINING_ENVELOPE_MM),
        }
    }
}

/// Default training phantom: a 212 x 200 mm ellipse, sized for the default
/// 115 mm array.
pub fn default_phantom() -> Boundary<f64> {
    Boundary::ellipse(106.0, 100.0, Point2::zero(), 0.0, 720).expect("valid ellipse")
}

/// Head-like test shape absent from training: squarer than an ellipse and
/// narrower at the front.
pub fn head_phantom() -> Boundary<f64> {
    let n = 720;
    let pts = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let (s, c) = t.sin_cos();
            let e = 2.0 / 2.6;
            let x = 103.0 * c.signum() * c.abs().powf(e);
            // Taper the +x half so front and back differ.
            let taper = if x > 0.0 { 1.0 - 0.04 * (x / 103.0) } else { 1.0 };
            let y = 97.0 * s.signum() * s.abs().powf(e) * taper;
            Point2::new(x, y)
        })
        .collect();
    Boundary::new(pts, crate::geometry::BoundarySource::GroundTruth).expect("valid head phantom")
}

pub const ELLIPSE_PHANTOM_ID: &str = "ellipse";
pub const HEAD_PHANTOM_ID: &str = "head";

/// Built-in phantom shapes by id.
pub fn builtin_phantom(id: &str) -> Option<Boundary<f64>> {
    match id {
        ELLIPSE_PHANTOM_ID => Some(default_phantom()),
        HEAD_PHANTOM_ID => Some(head_phantom()),
        _ => None,
    }
}

/// SplitMix64 mixing of a base seed with a stream index.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reflection coefficient of antenna `antenna_index` facing a boundary
/// `distance` mm away. Deterministic for a given seed.
pub fn synth_signal(
    distance: f64,
    antenna_index: usize,
    params: &ForwardParams,
    seed: u64,
) -> Result<ReflectionSignal> {
    if !(0.0..=MAX_DISTANCE_MM).contains(&distance) {
        return Err(Error::OutOfRange(distance));
    }
    if antenna_index >= ANTENNA_COUNT {
        return Err(Error::InvalidArgument(format!("antenna index {antenna_index}")));
    }
    let values = noiseless_values(distance, antenna_index, params);
    let values = if params.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, params.noise_sigma).expect("finite sigma");
        values
            .into_iter()
            .map(|v| {
                let re = normal.sample(&mut rng);
                let im = normal.sample(&mut rng);
                v + Complex64::new(re, im)
            })
            .collect()
    } else {
        values
    };
    ReflectionSignal::new(values, params.grid, antenna_index)
}

fn noiseless_values(distance: f64, antenna_index: usize, params: &ForwardParams) -> Vec<Complex64> {
    let grid = &params.grid;
    let fr = params.resonance_ghz(distance, antenna_index);
    let depth = 1.0 - 10f64.powf(params.dip_depth_db_at(distance) / 20.0);
    let q = params.dip_q_at(distance);
    let gain = params.echo_gain_at(distance);
    let tau_ns = params.delay_s(distance) * 1e9;
    (0..grid.n_points)
        .map(|k| {
            let f = grid.freq_ghz(k);
            let x = 2.0 * q * (f - fr) / fr;
            let dip = depth / (1.0 + x * x);
            let base = params.baseline.eval(f, grid) * (1.0 - dip);
            Complex64::new(base, 0.0) + Complex64::from_polar(gain, -2.0 * PI * f * tau_ns)
        })
        .collect()
}

/// Signal an antenna sees with nothing in the imaging domain: unloaded
/// resonance (the curve's far end) and no echo.
pub fn empty_domain_signal(antenna_index: usize, params: &ForwardParams) -> Result<ReflectionSignal> {
    let mut p = params.clone();
    p.echo_gain = 0.0;
    p.noise_sigma = 0.0;
    synth_signal(MAX_DISTANCE_MM, antenna_index, &p, 0)
}

/// Dense `(distance mm, resonance GHz)` table over [0, 40] mm in 0.1 mm steps.
pub fn resonance_calibration(params: &ForwardParams) -> Vec<(f64, f64)> {
    (0..=400)
        .map(|i| {
            let d = i as f64 / 10.0;
            (d, params.resonance.eval(d))
        })
        .collect()
}

fn inside_ring(p: Point2<f64>, ring: &[Point2<f64>]) -> bool {
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn sample_pose(
    array: &AntennaArray<f64>,
    phantom: &Boundary<f64>,
    ranges: &PoseRanges,
    seed: u64,
) -> Result<(Pose, NormalLengths<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uni = |(lo, hi): (f64, f64)| Uniform::new_inclusive(lo, hi).expect("valid range");
    let (ux, uy, ur) = (uni(ranges.dx_mm), uni(ranges.dy_mm), uni(ranges.rotation_deg));
    for _ in 0..MAX_POSE_ATTEMPTS {
        let pose = Pose { dx: ux.sample(&mut rng), dy: uy.sample(&mut rng), rotation_deg: ur.sample(&mut rng) };
        let placed = phantom.transformed(&pose.transform());
        if !placed.points().iter().all(|&p| inside_ring(p, array.apertures())) {
            continue;
        }
        let Ok(labels) = cast_normals(array, &placed) else { continue };
        let ok = match ranges.label_envelope_mm {
            Some((lo, hi)) => labels.values().iter().all(|&v| v >= lo && v <= hi),
            None => labels.values().iter().all(|&v| v <= MAX_DISTANCE_MM),
        };
        if ok {
            return Ok((pose, labels));
        }
    }
    Err(Error::PoseRejected(MAX_POSE_ATTEMPTS))
}

/// Places the phantom at `n_poses` random poses, casts the ground-truth
/// normals and synthesizes the 16 signals of each scan. Measurement `i`
/// draws only from `derive_seed(seed, i)`, so the parallel generation is
/// bit-identical to a serial one.
pub fn synth_dataset(
    array: &AntennaArray<f64>,
    phantom: &Boundary<f64>,
    phantom_id: &str,
    n_poses: usize,
    ranges: &PoseRanges,
    params: &ForwardParams,
    seed: u64,
) -> Result<Vec<Measurement>> {
    params.validate()?;
    (0..n_poses)
        .into_par_iter()
        .map(|i| {
            let pose_seed = derive_seed(seed, i as u64);
            let (pose, labels) = sample_pose(array, phantom, ranges, pose_seed)?;
            let signals = labels
                .values()
                .iter()
                .enumerate()
                .map(|(a, &d)| synth_signal(d, a, params, derive_seed(pose_seed, 1 + a as u64)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Measurement { id: i, phantom_id: phantom_id.to_string(), pose, labels: Some(labels), signals })
        })
        .collect()
}

/// Scans whose 16 antennas see independent random distances in `range_mm`;
/// no geometry involved. Used for envelope-extrapolation studies.
pub fn synth_distance_scans(
    range_mm: (f64, f64),
    n_scans: usize,
    params: &ForwardParams,
    seed: u64,
) -> Result<Vec<Measurement>> {
    params.validate()?;
    let uni = Uniform::new_inclusive(range_mm.0, range_mm.1).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    (0..n_scans)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let d: Vec<f64> = (0..ANTENNA_COUNT).map(|_| uni.sample(&mut rng)).collect();
            let signals = d
                .iter()
                .enumerate()
                .map(|(a, &di)| synth_signal(di, a, params, derive_seed(s, 1 + a as u64)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Measurement {
                id: i,
                phantom_id: format!("distance-scan-{:.1}-{:.1}", range_mm.0, range_mm.1),
                pose: Pose::default(),
                labels: Some(NormalLengths::new(d)?),
                signals,
            })
        })
        .collect()
}
