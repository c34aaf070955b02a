//! Pipeline configuration: one TOML file, with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vtalarm::features::AnalysisWindow;
use vtalarm::imbalance::{ResampleConfig, ResampleMethod};
use vtalarm::io::Provenance;
use vtalarm::nn::ModelHyperparams;
use vtalarm::synth::SynthConfig;
use vtalarm::{Architecture, FeatureConfig, TrainConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Raw records plus `alarms.csv`; defaults to `<out>/raw`.
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Seeds the split, resampling, initialization, dropout and synthesis.
    pub seed: u64,
    pub architecture: Architecture,
    pub threshold: f64,
    pub split: SplitSection,
    pub features: FeatureConfig,
    pub sequence: SequenceSection,
    pub resample: ResampleSection,
    pub train: TrainConfig,
    pub model: ModelHyperparams,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data_dir: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            architecture: Architecture::Fcnn,
            threshold: vtalarm::eval::DEFAULT_THRESHOLD,
            split: SplitSection::default(),
            features: FeatureConfig::default(),
            sequence: SequenceSection::default(),
            resample: ResampleSection::default(),
            train: TrainConfig::default(),
            model: ModelHyperparams::default(),
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    /// `record_id,split` file to use instead of the stratified 80/10/10 split.
    pub file: Option<PathBuf>,
}

/// Waveform input for the convolutional model: block-mean decimated to `fs`
/// and cut to `window` around the onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSection {
    pub fs: f64,
    pub window: AnalysisWindow,
}

impl Default for SequenceSection {
    fn default() -> Self {
        SequenceSection { fs: 10.0, window: AnalysisWindow { start_s: -30.0, end_s: 30.0 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResampleSection {
    pub method: ResampleMethod,
    pub ratio: f64,
    pub k_neighbors: usize,
    /// Balanced `N/(2·N_c)` loss weights from the training labels.
    pub class_weights: bool,
}

impl Default for ResampleSection {
    fn default() -> Self {
        let d = ResampleConfig::default();
        ResampleSection { method: d.method, ratio: d.ratio, k_neighbors: d.k_neighbors, class_weights: false }
    }
}

/// Flags that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub architecture: Option<Architecture>,
    pub threshold: Option<f64>,
    pub resample: Option<ResampleMethod>,
    pub ratio: Option<f64>,
    pub k_neighbors: Option<usize>,
    pub class_weights: bool,
    pub max_epochs: Option<usize>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::missing(p, e))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => PipelineConfig::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = &o.data_dir {
            self.data_dir = Some(v.clone());
        }
        if let Some(v) = o.architecture {
            self.architecture = v;
        }
        if let Some(v) = o.threshold {
            self.threshold = v;
        }
        if let Some(v) = o.resample {
            self.resample.method = v;
        }
        if let Some(v) = o.ratio {
            self.resample.ratio = v;
        }
        if let Some(v) = o.k_neighbors {
            self.resample.k_neighbors = v;
        }
        if o.class_weights {
            self.resample.class_weights = true;
        }
        if let Some(v) = o.max_epochs {
            self.train.max_epochs = v;
        }
        self.train.seed = self.seed;
        self.synth.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |e: vtalarm::Error| CliError::Config(e.to_string());
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        self.resample_config().validate().map_err(bad)?;
        if self.resample.class_weights && self.resample.method != ResampleMethod::None {
            return Err(CliError::Config("class weights cannot be combined with oversampling".into()));
        }
        self.train.validate().map_err(bad)?;
        self.synth.validate().map_err(bad)?;
        if !(self.sequence.fs.is_finite() && self.sequence.fs > 0.0) {
            return Err(CliError::Config(format!("sequence.fs {} must be positive", self.sequence.fs)));
        }
        if self.sequence.window.start_s >= self.sequence.window.end_s {
            return Err(CliError::Config("sequence.window must have start_s < end_s".into()));
        }
        if !(self.features.segment_seconds > 0.0 && (0.0..1.0).contains(&self.features.overlap)) {
            return Err(CliError::Config("features need segment_seconds > 0 and overlap in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn resample_config(&self) -> ResampleConfig {
        ResampleConfig {
            method: self.resample.method,
            ratio: self.resample.ratio,
            k_neighbors: self.resample.k_neighbors,
            seed: self.seed,
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| self.out_dir.join("raw"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the effective configuration,
    /// with the data and output directories left out so relocated runs match.
    pub fn hash(&self) -> String {
        let portable = PipelineConfig { data_dir: None, out_dir: PathBuf::new(), ..self.clone() };
        let digest = Sha256::digest(portable.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance { config_hash: self.hash(), seed: self.seed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = PipelineConfig::default();
        let back: PipelineConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 3\narchitecture = \"cnn\"\n[resample]\nmethod = \"adasyn\"\nratio = 0.5\n").unwrap();
        let c = PipelineConfig::load(Some(&path), &Overrides::default()).unwrap();
        assert_eq!((c.seed, c.architecture, c.resample.method), (3, Architecture::Cnn1dAttention, ResampleMethod::Adasyn));
        let o = Overrides { seed: Some(9), ratio: Some(0.75), architecture: Some(Architecture::Fcnn), ..Default::default() };
        let c = PipelineConfig::load(Some(&path), &o).unwrap();
        assert_eq!((c.seed, c.train.seed, c.resample.ratio, c.architecture), (9, 9, 0.75, Architecture::Fcnn));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "sede = 3\n").unwrap();
        assert!(matches!(PipelineConfig::load(Some(&path), &Overrides::default()), Err(CliError::Config(_))));
        let o = Overrides { threshold: Some(1.5), ..Default::default() };
        assert!(matches!(PipelineConfig::load(None, &o), Err(CliError::Config(_))));
        let o = Overrides { ratio: Some(0.0), ..Default::default() };
        assert!(matches!(PipelineConfig::load(None, &o), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = PipelineConfig::default();
        let b = PipelineConfig { seed: 1, ..a.clone() };
        assert_eq!(a.hash().len(), 16);
        assert_eq!(a.hash(), PipelineConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        let moved = PipelineConfig { out_dir: "elsewhere".into(), ..a.clone() };
        assert_eq!(moved.hash(), a.hash());
    }
}
