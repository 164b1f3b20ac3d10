//! End-to-end evaluation shared by the command line and the test suites:
//! boundary reconstruction per method, per-case shape reports with summary
//! rows, and the resolution robustness study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    baseline_boundary, coarsen, in_modelled_range, matched_filter_estimate, resonance_shift_estimate,
    ResonanceCalibration,
};
use crate::dataset::subsample_interp;
use crate::error::{Error, Result};
use crate::forward::{builtin_phantom, empty_domain_signal, ForwardParams, Measurement, ReflectionSignal};
use crate::geometry::{landing_points, spline_close, AntennaArray, Boundary, BoundarySource};
use crate::metrics::{shape_report, RasterConfig, ShapeReport};
use crate::regressor::TrainedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Network,
    ResonanceShift,
    MatchedFilter,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Network => "nn",
            Method::ResonanceShift => "resh",
            Method::MatchedFilter => "mf",
        }
    }
}

/// Ground-truth outline of a labelled measurement: the built-in phantom at
/// its pose, or the spline through the true landing points otherwise.
pub fn truth_boundary(m: &Measurement, array: &AntennaArray<f64>) -> Result<Boundary<f64>> {
    if let Some(shape) = builtin_phantom(&m.phantom_id) {
        return Ok(shape.transformed(&m.pose.transform()).with_source(BoundarySource::GroundTruth));
    }
    let labels = m.labels.as_ref().ok_or_else(|| Error::UnlabeledMeasurement(format!("{}#{}", m.phantom_id, m.id)))?;
    Ok(spline_close(&landing_points(array, labels))?.with_source(BoundarySource::GroundTruth))
}

/// Per-antenna estimators of the two comparison methods.
#[derive(Debug, Clone)]
pub struct Baselines {
    calibration: ResonanceCalibration,
    references: Vec<ReflectionSignal>,
    permittivity: f64,
    internal_offset_mm: f64,
}

impl Baselines {
    /// Calibrates against the forward model: one nominal resonance table
    /// shared by all antennas, and each antenna's empty-domain reference.
    pub fn calibrate(params: &ForwardParams) -> Result<Self> {
        let calibration = ResonanceCalibration::from_params(params);
        let references = (0..params.per_antenna_bias_mhz.len())
            .map(|a| empty_domain_signal(a, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            calibration,
            references,
            permittivity: params.medium_rel_permittivity,
            internal_offset_mm: params.internal_offset_mm,
        })
    }

    pub fn resonance(&self, s: &ReflectionSignal) -> Option<f64> {
        resonance_shift_estimate(s, &self.calibration).ok().map(|c| c.default_distance())
    }

    pub fn matched(&self, s: &ReflectionSignal) -> Option<f64> {
        let r = self.references.get(s.antenna_index)?;
        matched_filter_estimate(s, r, self.permittivity, self.internal_offset_mm).ok().filter(|&d| in_modelled_range(d))
    }

    pub fn estimate(&self, method: Method, s: &ReflectionSignal) -> Option<f64> {
        match method {
            Method::ResonanceShift => self.resonance(s),
            Method::MatchedFilter => self.matched(s),
            Method::Network => None,
        }
    }
}

/// One method's result on one case; `None` fields are blank cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub shape: Option<ShapeReport>,
    /// Mean absolute normal-length error over the antennas with an estimate.
    pub normal_mae_mm: Option<f64>,
    pub missing_antennas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: usize,
    pub phantom_id: String,
    pub methods: Vec<MethodResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub resonance: bool,
    pub matched: bool,
    pub raster: RasterConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { resonance: true, matched: true, raster: RasterConfig::default() }
    }
}

fn method_result(
    method: Method,
    estimates: &[Option<f64>],
    truth_lengths: &[f64],
    truth: &Boundary<f64>,
    array: &AntennaArray<f64>,
    raster: &RasterConfig,
) -> MethodResult {
    let errs: Vec<f64> = estimates.iter().zip(truth_lengths).filter_map(|(e, t)| e.map(|e| (e - t).abs())).collect();
    let missing = estimates.len() - errs.len();
    let shape = match method {
        Method::Network => {
            let values: Vec<f64> = estimates.iter().map(|e| e.unwrap_or(0.0)).collect();
            crate::geometry::NormalLengths::with_bound(values, f64::MAX)
                .and_then(|l| spline_close(&landing_points(array, &l)))
                .ok()
        }
        _ => baseline_boundary(estimates, array).ok(),
    }
    .and_then(|b| shape_report(truth, &b, raster).ok());
    MethodResult {
        method,
        shape,
        normal_mae_mm: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
        missing_antennas: missing,
    }
}

/// Reconstructs every labelled measurement with the network and the enabled
/// baselines and scores each outline against the ground truth.
pub fn evaluate(
    model: &TrainedModel<f64>,
    measurements: &[Measurement],
    array: &AntennaArray<f64>,
    params: &ForwardParams,
    opts: &EvalOptions,
) -> Result<Vec<CaseResult>> {
    if measurements.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    let baselines = Baselines::calibrate(params)?;
    measurements
        .par_iter()
        .map(|m| {
            let labels =
                m.labels.as_ref().ok_or_else(|| Error::UnlabeledMeasurement(format!("{}#{}", m.phantom_id, m.id)))?;
            let truth = truth_boundary(m, array)?;
            let pred = model.predict_measurement(m)?;
            let nn: Vec<Option<f64>> = pred.lengths.values().iter().map(|&v| Some(v)).collect();
            let mut methods = vec![method_result(Method::Network, &nn, labels.values(), &truth, array, &opts.raster)];
            for (on, method) in [(opts.resonance, Method::ResonanceShift), (opts.matched, Method::MatchedFilter)] {
                if on {
                    let est: Vec<Option<f64>> = m.signals.iter().map(|s| baselines.estimate(method, s)).collect();
                    methods.push(method_result(method, &est, labels.values(), &truth, array, &opts.raster));
                }
            }
            Ok(CaseResult { case: m.id, phantom_id: m.phantom_id.clone(), methods })
        })
        .collect()
}

const METRICS: [&str; 6] = ["hu", "hu_x100", "area_pct", "length_pct", "max_dev_mm", "normal_mae_mm"];

fn metric_values(r: &MethodResult) -> [Option<f64>; 6] {
    let s = r.shape.as_ref();
    [
        s.map(|s| s.hu.raw),
        s.map(|s| s.hu.scaled),
        s.map(|s| s.area_change_pct),
        s.map(|s| s.length_change_pct),
        s.map(|s| s.max_deviation_mm),
        r.normal_mae_mm,
    ]
}

/// Mean of one metric over the cases where the method produced it.
pub fn metric_mean(cases: &[CaseResult], method: Method, metric: &str) -> Option<f64> {
    let idx = METRICS.iter().position(|&m| m == metric)?;
    let vals: Vec<f64> = cases
        .iter()
        .filter_map(|c| c.methods.iter().find(|r| r.method == method))
        .filter_map(|r| metric_values(r)[idx])
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Cases where the method produced a full shape report.
pub fn shape_count(cases: &[CaseResult], method: Method) -> usize {
    cases.iter().filter_map(|c| c.methods.iter().find(|r| r.method == method)).filter(|r| r.shape.is_some()).count()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// One row per case with `metric_method` columns, followed by min, max and
/// mean rows. Missing values are empty cells and are left out of the
/// summary rows.
pub fn report_csv(cases: &[CaseResult]) -> String {
    let methods: Vec<Method> = cases.first().map(|c| c.methods.iter().map(|r| r.method).collect()).unwrap_or_default();
    let mut header = vec!["case".to_string(), "phantom".to_string()];
    for metric in METRICS {
        for m in &methods {
            header.push(format!("{metric}_{}", m.tag()));
        }
    }
    let mut out = header.join(",") + "\n";
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); METRICS.len() * methods.len()];
    for c in cases {
        let mut row = vec![c.case.to_string(), c.phantom_id.clone()];
        for (mi, _) in METRICS.iter().enumerate() {
            for (k, m) in methods.iter().enumerate() {
                let v = c.methods.iter().find(|r| r.method == *m).and_then(|r| metric_values(r)[mi]);
                if let Some(x) = v {
                    columns[mi * methods.len() + k].push(x);
                }
                row.push(cell(v));
            }
        }
        out += &(row.join(",") + "\n");
    }
    type Summary = fn(&[f64]) -> f64;
    let summaries: [(&str, Summary); 3] = [
        ("min", |v| v.iter().copied().fold(f64::INFINITY, f64::min)),
        ("max", |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        ("mean", |v| v.iter().sum::<f64>() / v.len() as f64),
    ];
    for (name, f) in summaries {
        let mut row = vec![name.to_string(), String::new()];
        row.extend(columns.iter().map(|col| cell((!col.is_empty()).then(|| f(col)))));
        out += &(row.join(",") + "\n");
    }
    out
}

/// Error of each method at full and at reduced frequency resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub factor: usize,
    pub nn_mae_mm: f64,
    pub nn_mae_reduced_mm: f64,
    pub resonance_mae_mm: f64,
    pub resonance_mae_reduced_mm: f64,
    /// Antennas left out of the resonance figures because either estimate
    /// was missing.
    pub resonance_missing: usize,
    pub antennas: usize,
}

impl RobustnessReport {
    pub fn nn_increase_pct(&self) -> f64 {
        100.0 * (self.nn_mae_reduced_mm - self.nn_mae_mm) / self.nn_mae_mm
    }

    pub fn resonance_increase_pct(&self) -> f64 {
        100.0 * (self.resonance_mae_reduced_mm - self.resonance_mae_mm) / self.resonance_mae_mm
    }

    pub fn to_csv(&self) -> String {
        format!(
            "method,factor,mae_mm,mae_reduced_mm,increase_pct,missing\nnn,{f},{:.6},{:.6},{:.6},0\nresh,{f},{:.6},{:.6},{:.6},{}\n",
            self.nn_mae_mm,
            self.nn_mae_reduced_mm,
            self.nn_increase_pct(),
            self.resonance_mae_mm,
            self.resonance_mae_reduced_mm,
            self.resonance_increase_pct(),
            self.resonance_missing,
            f = self.factor,
        )
    }
}

/// Absolute errors of one antenna: network at full and reduced resolution,
/// then the resonance pair when both estimates exist.
type AntennaErrors = (f64, f64, Option<(f64, f64)>);

/// The network sees each signal sub-sampled by `factor` and linearly
/// re-interpolated to the full grid; the resonance method reads the
/// coarse grid directly.
pub fn robustness(
    model: &TrainedModel<f64>,
    measurements: &[Measurement],
    params: &ForwardParams,
    factor: usize,
) -> Result<RobustnessReport> {
    if factor == 0 {
        return Err(Error::InvalidArgument("factor must be >= 1".into()));
    }
    let baselines = Baselines::calibrate(params)?;
    let rows: Vec<AntennaErrors> = measurements
        .par_iter()
        .map(|m| {
            let labels =
                m.labels.as_ref().ok_or_else(|| Error::UnlabeledMeasurement(format!("{}#{}", m.phantom_id, m.id)))?;
            m.signals
                .iter()
                .zip(labels.values())
                .map(|(s, &y)| {
                    let full = model.predict_signal(s)?.max(0.0);
                    let reduced = model.predict_signal(&subsample_interp(s, factor))?.max(0.0);
                    let resh = baselines.resonance(s).zip(baselines.resonance(&coarsen(s, factor)));
                    Ok(((full - y).abs(), (reduced - y).abs(), resh.map(|(a, b)| ((a - y).abs(), (b - y).abs()))))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no labelled antennas".into()));
    }
    let n = rows.len() as f64;
    let resh: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.2).collect();
    let nr = resh.len().max(1) as f64;
    Ok(RobustnessReport {
        factor,
        nn_mae_mm: rows.iter().map(|r| r.0).sum::<f64>() / n,
        nn_mae_reduced_mm: rows.iter().map(|r| r.1).sum::<f64>() / n,
        resonance_mae_mm: resh.iter().map(|r| r.0).sum::<f64>() / nr,
        resonance_mae_reduced_mm: resh.iter().map(|r| r.1).sum::<f64>() / nr,
        resonance_missing: rows.len() - resh.len(),
        antennas: rows.len(),
    })
}
