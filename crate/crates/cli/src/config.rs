//! Run configuration. A TOML file supplies defaults for any flag; flags win
//! over the file, the file wins over built-in defaults. The seed falls back
//! to `EMBOUND_SEED` when neither flag nor file sets it.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use embound::dataset::InputMode;
use embound::forward::ForwardParams;
use embound::geometry::{parse_array_layout, AntennaArray};
use embound::metrics::RasterConfig;
use embound::regressor::{architecture, FitOptions, TrainConfig};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "EMBOUND_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Phantom,
    ClinicalLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Magnitude,
    Complex,
}

impl Mode {
    pub fn input_mode(self) -> InputMode {
        match self {
            Mode::Magnitude => InputMode::Magnitude,
            Mode::Complex => InputMode::Complex,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Mode::Magnitude => Mode::Complex,
            Mode::Complex => Mode::Magnitude,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Magnitude => "magnitude",
            Mode::Complex => "complex",
        }
    }
}

/// Declares a section whose fields are all optional, plus the
/// field-by-field precedence merge.
macro_rules! layer {
    ($(#[$m:meta])* $name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Default, PartialEq, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $(pub $field: Option<$ty>,)*
        }

        impl $name {
            fn over(self, lower: Self) -> Self {
                Self { $($field: self.$field.or(lower.$field),)* }
            }
        }
    };
}

layer!(ForwardLayer { preset: Preset, noise_sigma: f64 });
layer!(ArrayLayer { radius_mm: f64, layout: PathBuf });
layer!(GenerateLayer { n_poses: usize, phantom: String, distance_range_mm: [f64; 2] });
layer!(TrainLayer {
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    components: usize,
    width: usize,
    depth: usize,
    test_fraction: f64,
});
layer!(RasterLayer { resolution_mm: f64, margin_mm: f64 });
layer!(BaselineLayer { resonance: bool, matched: bool, factor: usize });

/// One configuration source: the file, or the flags of one invocation.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub forward: ForwardLayer,
    pub array: ArrayLayer,
    pub generate: GenerateLayer,
    pub train: TrainLayer,
    pub raster: RasterLayer,
    pub baselines: BaselineLayer,
}

impl ConfigLayer {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// `self` takes precedence over `lower`.
    pub fn over(self, lower: Self) -> Self {
        Self {
            seed: self.seed.or(lower.seed),
            mode: self.mode.or(lower.mode),
            forward: self.forward.over(lower.forward),
            array: self.array.over(lower.array),
            generate: self.generate.over(lower.generate),
            train: self.train.over(lower.train),
            raster: self.raster.over(lower.raster),
            baselines: self.baselines.over(lower.baselines),
        }
    }

    /// Fills the gaps with defaults; `env_seed` is the raw `EMBOUND_SEED`.
    pub fn resolve(self, env_seed: Option<&str>) -> CliResult<Settings> {
        let seed = match (self.seed, env_seed) {
            (Some(s), _) => s,
            (None, Some(v)) => {
                v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?
            }
            (None, None) => 0,
        };
        let d = TrainConfig::default();
        let raster = RasterConfig::default();
        let preset = self.forward.preset.unwrap_or_default();
        let s = Settings {
            seed,
            mode: self.mode.unwrap_or_default(),
            forward: ForwardSettings {
                preset,
                noise_sigma: self.forward.noise_sigma.unwrap_or_else(|| preset.params().noise_sigma),
            },
            array: ArraySettings { radius_mm: self.array.radius_mm.unwrap_or(115.0), layout: self.array.layout },
            generate: GenerateSettings {
                n_poses: self.generate.n_poses.unwrap_or(444),
                phantom: self.generate.phantom.unwrap_or_else(|| embound::forward::ELLIPSE_PHANTOM_ID.into()),
                distance_range_mm: self.generate.distance_range_mm,
            },
            train: TrainSettings {
                epochs: self.train.epochs.unwrap_or(d.epochs),
                batch_size: self.train.batch_size.unwrap_or(d.batch_size),
                learning_rate: self.train.learning_rate.unwrap_or(d.learning_rate),
                components: self.train.components.unwrap_or(10),
                width: self.train.width.unwrap_or(10),
                depth: self.train.depth.unwrap_or(4),
                test_fraction: self.train.test_fraction.unwrap_or(0.2),
            },
            raster: RasterConfig {
                resolution_mm: self.raster.resolution_mm.unwrap_or(raster.resolution_mm),
                margin_mm: self.raster.margin_mm.unwrap_or(raster.margin_mm),
            },
            baselines: BaselineSettings {
                resonance: self.baselines.resonance.unwrap_or(true),
                matched: self.baselines.matched.unwrap_or(true),
                factor: self.baselines.factor.unwrap_or(8),
            },
        };
        s.validate()?;
        Ok(s)
    }
}

impl Preset {
    pub fn params(self) -> ForwardParams {
        match self {
            Preset::Phantom => ForwardParams::phantom(),
            Preset::ClinicalLike => ForwardParams::clinical_like(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardSettings {
    pub preset: Preset,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArraySettings {
    pub radius_mm: f64,
    pub layout: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateSettings {
    pub n_poses: usize,
    pub phantom: String,
    pub distance_range_mm: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub components: usize,
    pub width: usize,
    pub depth: usize,
    pub test_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineSettings {
    pub resonance: bool,
    pub matched: bool,
    pub factor: usize,
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    pub mode: Mode,
    pub forward: ForwardSettings,
    pub array: ArraySettings,
    pub generate: GenerateSettings,
    pub train: TrainSettings,
    pub raster: RasterConfig,
    pub baselines: BaselineSettings,
}

impl Settings {
    fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Usage(m.into()));
        if !(self.forward.noise_sigma >= 0.0) {
            return bad("noise_sigma must be >= 0");
        }
        if !(self.array.radius_mm > 0.0) {
            return bad("array radius must be positive");
        }
        if self.generate.n_poses == 0 {
            return bad("n_poses must be >= 1");
        }
        if let Some([lo, hi]) = self.generate.distance_range_mm {
            if !(0.0 <= lo && lo < hi) {
                return bad("distance range must satisfy 0 <= lo < hi");
            }
        }
        let t = &self.train;
        if t.components == 0 || t.width == 0 || t.depth < 2 {
            return bad("components and width must be >= 1, depth >= 2");
        }
        if !(0.0..1.0).contains(&t.test_fraction) {
            return bad("test_fraction must lie in [0, 1)");
        }
        if !(self.raster.resolution_mm > 0.0 && self.raster.margin_mm >= 0.0) {
            return bad("raster resolution must be positive and margin non-negative");
        }
        if self.baselines.factor == 0 {
            return bad("sub-sampling factor must be >= 1");
        }
        self.train_config().validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    /// SHA-256 of the settings, paths excluded, so that reruns in another
    /// directory stamp the same hash.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("settings serialize");
        v["array"]["layout"] = serde_json::Value::Null;
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn forward_params(&self) -> ForwardParams {
        ForwardParams { noise_sigma: self.forward.noise_sigma, ..self.forward.preset.params() }
    }

    pub fn antenna_array(&self) -> CliResult<AntennaArray<f64>> {
        match &self.array.layout {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
                let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Ok(parse_array_layout(&text, &id)?)
            }
            None => Ok(AntennaArray::circular(self.array.radius_mm)),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }

    pub fn fit_options(&self, mode: Mode) -> FitOptions {
        let m = mode.input_mode();
        FitOptions {
            mode: m,
            components: self.train.components,
            hidden: architecture(m, self.train.width, self.train.depth),
            train: self.train_config(),
        }
    }

    /// First line of every CSV artifact.
    pub fn stamp(&self) -> String {
        format!("# embound {} config={} seed={}", env!("CARGO_PKG_VERSION"), self.hash(), self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = ConfigLayer::parse("seed = 3\n[train]\nepochs = 7\nwidth = 20\n").unwrap();
        let flags = ConfigLayer { train: TrainLayer { epochs: Some(2), ..Default::default() }, ..Default::default() };
        let s = flags.over(file).resolve(None).unwrap();
        assert_eq!((s.seed, s.train.epochs, s.train.width, s.train.depth), (3, 2, 20, 4));
    }

    #[test]
    fn env_seed_is_the_last_resort() {
        assert_eq!(ConfigLayer::default().resolve(Some("42")).unwrap().seed, 42);
        let file = ConfigLayer::parse("seed = 5").unwrap();
        assert_eq!(file.resolve(Some("42")).unwrap().seed, 5);
        assert_eq!(ConfigLayer::default().resolve(None).unwrap().seed, 0);
        assert!(matches!(ConfigLayer::default().resolve(Some("x")), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        assert!(matches!(ConfigLayer::parse("[train]\nepoch = 3"), Err(CliError::Usage(_))));
        let bad = ConfigLayer::parse("[train]\ntest_fraction = 1.5").unwrap();
        assert!(matches!(bad.resolve(None), Err(CliError::Usage(_))));
    }

    #[test]
    fn hash_ignores_paths_but_not_values() {
        let a = ConfigLayer::default().resolve(None).unwrap();
        let mut b = a.clone();
        b.array.layout = Some("somewhere/layout.csv".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn presets_and_noise_override() {
        let s = ConfigLayer::parse("[forward]\npreset = \"clinical_like\"").unwrap().resolve(None).unwrap();
        assert_eq!(s.forward_params(), ForwardParams::clinical_like());
        let s = ConfigLayer::parse("[forward]\nnoise_sigma = 0.0").unwrap().resolve(None).unwrap();
        assert_eq!(s.forward_params(), ForwardParams::phantom().noiseless());
    }
}
