use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    ArrayLayer, BaselineLayer, ConfigLayer, ForwardLayer, GenerateLayer, Mode, Preset, RasterLayer, TrainLayer,
};

#[derive(Debug, Parser)]
#[command(name = "embound", version, about = "Boundary estimation from antenna reflection coefficients")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed (falls back to the config file, then EMBOUND_SEED, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a labelled dataset.
    Generate(GenerateArgs),
    /// Fit projection and network; writes checkpoint and loss curves.
    Train(TrainArgs),
    /// Predict boundaries for every measurement of a dataset.
    Infer(InferArgs),
    /// Score the network and the baselines against ground truth.
    Evaluate(EvaluateArgs),
    /// Error growth under reduced frequency resolution.
    Robustness(RobustnessArgs),
    /// Train over a width x depth grid and report final losses.
    Grid(GridArgs),
}

#[derive(Debug, Args, Default)]
pub struct ForwardArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct ArrayArgs {
    /// Radius of the default circular array, mm.
    #[arg(long)]
    pub array_radius: Option<f64>,
    /// CSV layout `x, y, nx, ny` replacing the circular array.
    #[arg(long)]
    pub array_layout: Option<PathBuf>,
}

impl ArrayArgs {
    fn layer(&self) -> ArrayLayer {
        ArrayLayer { radius_mm: self.array_radius, layout: self.array_layout.clone() }
    }
}

#[derive(Debug, Args, Default)]
pub struct TrainingArgs {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Principal components per projection.
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Layer count including the output layer.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Dataset whose signals are pooled into the projection fit.
    #[arg(long)]
    pub aux: Option<PathBuf>,
}

impl TrainingArgs {
    fn layer(&self) -> TrainLayer {
        TrainLayer {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            components: self.components,
            width: self.width,
            depth: self.depth,
            test_fraction: self.test_fraction,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output dataset; the header goes to `<out>.header.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n_poses: Option<usize>,
    /// Built-in phantom: `ellipse` or `head`.
    #[arg(long)]
    pub phantom: Option<String>,
    /// Geometry-free scans with uniform distances in `LO,HI` mm.
    #[arg(long, value_parser = parse_range)]
    pub distance_range: Option<[f64; 2]>,
    #[command(flatten)]
    pub forward: ForwardArgs,
    #[command(flatten)]
    pub array: ArrayArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also train the other input mode and plot both.
    #[arg(long)]
    pub compare_dtype: bool,
    /// Hyperparameter grid, e.g. `widths=5,10,20 depths=2,4`.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub array: ArrayArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_resonance: bool,
    #[arg(long)]
    pub no_matched: bool,
    #[arg(long)]
    pub resolution_mm: Option<f64>,
    #[command(flatten)]
    pub forward: ForwardArgs,
    #[command(flatten)]
    pub array: ArrayArgs,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep one frequency sample in `factor`.
    #[arg(long)]
    pub factor: Option<usize>,
    #[command(flatten)]
    pub forward: ForwardArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    pub widths: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    pub depths: Vec<usize>,
    #[command(flatten)]
    pub training: TrainingArgs,
}

/// `widths=5,10,20 depths=2,4`
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
}

impl FromStr for GridSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (mut widths, mut depths) = (None, None);
        for part in s.split_whitespace() {
            let (key, list) = part.split_once('=').ok_or_else(|| format!("expected key=list, got {part:?}"))?;
            let vals = list
                .split(',')
                .map(|v| v.trim().parse::<usize>().map_err(|e| format!("{key}: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            match key {
                "widths" => widths = Some(vals),
                "depths" => depths = Some(vals),
                other => return Err(format!("unknown grid key {other:?}")),
            }
        }
        match (widths, depths) {
            (Some(widths), Some(depths)) if !widths.is_empty() && !depths.is_empty() => Ok(GridSpec { widths, depths }),
            _ => Err("grid needs both widths= and depths=".into()),
        }
    }
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok([lo, hi])
}

impl Cli {
    /// The flags of this invocation as a configuration layer.
    pub fn layer(&self) -> ConfigLayer {
        let mut l = ConfigLayer { seed: self.seed, ..Default::default() };
        let fwd = |f: &ForwardArgs| ForwardLayer { preset: f.preset, noise_sigma: f.noise_sigma };
        match &self.command {
            Command::Generate(a) => {
                l.generate = GenerateLayer {
                    n_poses: a.n_poses,
                    phantom: a.phantom.clone(),
                    distance_range_mm: a.distance_range,
                };
                l.forward = fwd(&a.forward);
                l.array = a.array.layer();
            }
            Command::Train(a) => {
                l.mode = a.training.mode;
                l.train = a.training.layer();
            }
            Command::Grid(a) => {
                l.mode = a.training.mode;
                l.train = a.training.layer();
            }
            Command::Infer(a) => l.array = a.array.layer(),
            Command::Evaluate(a) => {
                l.forward = fwd(&a.forward);
                l.array = a.array.layer();
                l.raster = RasterLayer { resolution_mm: a.resolution_mm, margin_mm: None };
                l.baselines = BaselineLayer {
                    resonance: a.no_resonance.then_some(false),
                    matched: a.no_matched.then_some(false),
                    factor: None,
                };
            }
            Command::Robustness(a) => {
                l.forward = fwd(&a.forward);
                l.baselines.factor = a.factor;
            }
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_spec_parsing() {
        let g: GridSpec = "widths=5,10,20 depths=2,4".parse().unwrap();
        assert_eq!(g, GridSpec { widths: vec![5, 10, 20], depths: vec![2, 4] });
        assert!("widths=5".parse::<GridSpec>().is_err());
        assert!("widths=a depths=2".parse::<GridSpec>().is_err());
        assert!("sizes=1 depths=2".parse::<GridSpec>().is_err());
    }

    #[test]
    fn flags_become_a_layer() {
        let cli = Cli::parse_from([
            "embound",
            "--seed",
            "9",
            "evaluate",
            "--checkpoint",
            "m",
            "--dataset",
            "d",
            "--out",
            "r",
            "--no-matched",
        ]);
        let l = cli.layer();
        assert_eq!(l.seed, Some(9));
        assert_eq!(l.baselines.matched, Some(false));
        assert_eq!(l.baselines.resonance, None);
        let cli = Cli::parse_from([
            "embound",
            "generate",
            "--out",
            "x",
            "--distance-range",
            "1,20",
            "--preset",
            "clinical-like",
        ]);
        let l = cli.layer();
        assert_eq!(l.generate.distance_range_mm, Some([1.0, 20.0]));
        assert_eq!(l.forward.preset, Some(Preset::ClinicalLike));
    }
}
