use std::fs;
use std::path::{Path, PathBuf};

use embound::dataset::{dataset_header, read_dataset, split_ids, write_dataset, DatasetHeader};
use embound::forward::{
    builtin_phantom, synth_dataset, synth_distance_scans, ForwardParams, Measurement, PoseRanges, ReflectionSignal,
};
use embound::geometry::{boundary_to_csv, boundary_to_svg, landing_points, spline_close, SvgLayer};
use embound::pipeline::{
    evaluate, metric_mean, report_csv, robustness, shape_count, truth_boundary, EvalOptions, Method,
};
use embound::regressor::{grid_to_csv, LossHistory, TrainedModel};

use crate::cli::GridSpec;
use crate::config::{Mode, Settings};
use crate::error::{CliError, CliResult};
use crate::plot::{loss_svg, Series};

fn write(path: &Path, contents: &str) -> CliResult<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(path.to_path_buf())
}

fn stamped_csv(s: &Settings, body: &str) -> String {
    format!("{}\n{body}", s.stamp())
}

fn load_dataset(path: &Path) -> CliResult<(DatasetHeader, Vec<Measurement>)> {
    let (h, m) = read_dataset(path)?;
    if m.is_empty() {
        return Err(embound::Error::InvalidArgument(format!("{} holds no measurements", path.display())).into());
    }
    Ok((h, m))
}

fn load_model(path: &Path) -> CliResult<TrainedModel<f64>> {
    Ok(TrainedModel::load(path)?)
}

/// Parameters the data were synthesized with, else the configured ones.
fn data_params(header: &DatasetHeader, s: &Settings) -> ForwardParams {
    match &header.params {
        Some(p) => p.clone(),
        None => {
            log::warn!("dataset header carries no forward parameters; calibrating baselines from the config");
            s.forward_params()
        }
    }
}

pub fn generate(s: &Settings, out: &Path) -> CliResult<DatasetHeader> {
    let params = s.forward_params();
    let n = s.generate.n_poses;
    let data = match s.generate.distance_range_mm {
        Some([lo, hi]) => synth_distance_scans((lo, hi), n, &params, s.seed)?,
        None => {
            let id = s.generate.phantom.as_str();
            let phantom = builtin_phantom(id).ok_or_else(|| CliError::Usage(format!("unknown phantom {id:?}")))?;
            synth_dataset(&s.antenna_array()?, &phantom, id, n, &PoseRanges::default(), &params, s.seed)?
        }
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    Ok(write_dataset(out, &data, dataset_header(&params, &s.hash(), s.seed, data.len()))?)
}

/// Train/test partition by measurement, so no scan feeds both sides.
fn split(data: &[Measurement], s: &Settings) -> CliResult<(Vec<Measurement>, Vec<Measurement>)> {
    let ids: Vec<usize> = (0..data.len()).collect();
    let (tr, te) = split_ids(&ids, s.train.test_fraction, s.seed)?;
    Ok((tr.iter().map(|&i| data[i].clone()).collect(), te.iter().map(|&i| data[i].clone()).collect()))
}

fn aux_signals(aux: Option<&Path>) -> CliResult<Option<Vec<ReflectionSignal>>> {
    aux.map(|p| Ok(load_dataset(p)?.1.into_iter().flat_map(|m| m.signals).collect())).transpose()
}

pub struct TrainOutput {
    pub files: Vec<PathBuf>,
    pub histories: Vec<(Mode, LossHistory)>,
}

pub fn train(
    s: &Settings,
    dataset: &Path,
    aux: Option<&Path>,
    out_dir: &Path,
    compare: bool,
    grid: Option<&GridSpec>,
) -> CliResult<TrainOutput> {
    let (header, data) = load_dataset(dataset)?;
    let (train_set, test_set) = split(&data, s)?;
    let aux = aux_signals(aux)?;
    let modes = if compare { vec![s.mode, s.mode.other()] } else { vec![s.mode] };
    let mut files = Vec::new();
    let mut histories = Vec::new();
    for (i, &mode) in modes.iter().enumerate() {
        let (mut model, history) =
            TrainedModel::<f64>::fit(&train_set, &test_set, aux.as_deref(), &s.fit_options(mode))?;
        model.config_hash = s.hash();
        model.dataset_hash = header.data_hash.clone();
        let suffix = if i == 0 { String::new() } else { format!("-{}", mode.name()) };
        let path = out_dir.join(format!("model{suffix}.json"));
        files.push(write(&path, &model.to_json()?)?);
        files.push(write(&out_dir.join(format!("loss{suffix}.csv")), &stamped_csv(s, &history.to_csv()))?);
        histories.push((mode, history));
    }
    let colors = [("#1f5fbf", "#7fa8e8"), ("#c0392b", "#e8998f")];
    let labels: Vec<(String, String)> =
        histories.iter().map(|(m, _)| (format!("{} train", m.name()), format!("{} test", m.name()))).collect();
    let mut series = Vec::new();
    for (((_, h), (lt, le)), (ct, ce)) in histories.iter().zip(&labels).zip(colors) {
        series.push(Series { label: lt, color: ct, values: &h.train });
        series.push(Series { label: le, color: ce, values: &h.test });
    }
    files.push(write(&out_dir.join("loss.svg"), &loss_svg(&series, "mean squared error (scaled labels)", &s.stamp()))?);
    if let Some(g) = grid {
        let cells = TrainedModel::<f64>::grid_search(
            &train_set,
            &test_set,
            aux.as_deref(),
            &g.widths,
            &g.depths,
            &s.fit_options(s.mode),
        )?;
        files.push(write(&out_dir.join("grid.csv"), &stamped_csv(s, &grid_to_csv(&cells)))?);
    }
    Ok(TrainOutput { files, histories })
}

pub fn grid(s: &Settings, dataset: &Path, aux: Option<&Path>, spec: &GridSpec, out: &Path) -> CliResult<PathBuf> {
    let (_, data) = load_dataset(dataset)?;
    let (train_set, test_set) = split(&data, s)?;
    let aux = aux_signals(aux)?;
    let cells = TrainedModel::<f64>::grid_search(
        &train_set,
        &test_set,
        aux.as_deref(),
        &spec.widths,
        &spec.depths,
        &s.fit_options(s.mode),
    )?;
    write(out, &stamped_csv(s, &grid_to_csv(&cells)))
}

/// Per-antenna predictions plus a boundary CSV and overlay SVG for each
/// measurement. Error columns appear only for labelled data.
pub fn infer(s: &Settings, checkpoint: &Path, dataset: &Path, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let model = load_model(checkpoint)?;
    let (_, data) = load_dataset(dataset)?;
    let array = s.antenna_array()?;
    let labelled = data.iter().all(|m| m.labels.is_some());
    let mut table = String::from(if labelled {
        "measurement,antenna,predicted_mm,label_mm,error_mm\n"
    } else {
        "measurement,antenna,predicted_mm\n"
    });
    let mut files = Vec::new();
    for m in &data {
        let pred = model.predict_measurement(m)?;
        for (a, p) in pred.lengths.values().iter().enumerate() {
            match m.labels.as_ref().filter(|_| labelled) {
                Some(l) => {
                    let y = l.values()[a];
                    table += &format!("{},{a},{p:.6},{y:.6},{:.6}\n", m.id, p - y);
                }
                None => table += &format!("{},{a},{p:.6}\n", m.id),
            }
        }
        let landing = landing_points(&array, &pred.lengths);
        let boundary = spline_close(&landing)?;
        files.push(write(
            &out_dir.join(format!("boundary-{}.csv", m.id)),
            &stamped_csv(s, &boundary_to_csv(&boundary)),
        )?);
        let truth = if m.labels.is_some() { Some(truth_boundary(m, &array)?) } else { None };
        let mut layers = Vec::new();
        if let Some(t) = &truth {
            layers.push(SvgLayer { label: "truth", color: "black", points: t.points(), markers: false });
        }
        layers.push(SvgLayer { label: "prediction", color: "#1f5fbf", points: boundary.points(), markers: false });
        layers.push(SvgLayer { label: "landing", color: "#c0392b", points: &landing, markers: true });
        layers.push(SvgLayer { label: "antennas", color: "gray", points: array.apertures(), markers: true });
        let svg = boundary_to_svg(&layers, &format!("{} #{}", m.phantom_id, m.id));
        let svg = svg.replacen('\n', &format!("\n<!-- {} -->\n", s.stamp().trim_start_matches("# ")), 1);
        files.push(write(&out_dir.join(format!("overlay-{}.svg", m.id)), &svg)?);
    }
    files.insert(0, write(&out_dir.join("predictions.csv"), &stamped_csv(s, &table))?);
    Ok(files)
}

pub struct EvaluateOutput {
    pub path: PathBuf,
    /// `(method, metric, mean)` for the summary printout.
    pub means: Vec<(Method, &'static str, Option<f64>)>,
    pub shapes: Vec<(Method, usize)>,
    pub cases: usize,
}

pub fn evaluate_cmd(s: &Settings, checkpoint: &Path, dataset: &Path, out: &Path) -> CliResult<EvaluateOutput> {
    let model = load_model(checkpoint)?;
    let (header, data) = load_dataset(dataset)?;
    let params = data_params(&header, s);
    let opts = EvalOptions { resonance: s.baselines.resonance, matched: s.baselines.matched, raster: s.raster };
    let cases = evaluate(&model, &data, &s.antenna_array()?, &params, &opts)?;
    let mut methods = vec![Method::Network];
    if opts.resonance {
        methods.push(Method::ResonanceShift);
    }
    if opts.matched {
        methods.push(Method::MatchedFilter);
    }
    let metrics = ["hu", "hu_x100", "area_pct", "length_pct", "max_dev_mm", "normal_mae_mm"];
    let means = methods
        .iter()
        .flat_map(|&m| metrics.iter().map(move |&k| (m, k)))
        .map(|(m, k)| (m, k, metric_mean(&cases, m, k)))
        .collect();
    let shapes = methods.iter().map(|&m| (m, shape_count(&cases, m))).collect();
    let path = write(out, &stamped_csv(s, &report_csv(&cases)))?;
    Ok(EvaluateOutput { path, means, shapes, cases: cases.len() })
}

pub fn robustness_cmd(
    s: &Settings,
    checkpoint: &Path,
    dataset: &Path,
    out: &Path,
) -> CliResult<(PathBuf, embound::pipeline::RobustnessReport)> {
    let model = load_model(checkpoint)?;
    let (header, data) = load_dataset(dataset)?;
    let report = robustness(&model, &data, &data_params(&header, s), s.baselines.factor)?;
    Ok((write(out, &stamped_csv(s, &report.to_csv()))?, report))
}
