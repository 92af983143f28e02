//! Self-describing JSON checkpoints with bit-exact round trips.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ScalerKind;
use crate::error::{CoreError, Result};
use crate::kernel::Matrix;
use crate::scalar::Scalar;

use super::config::ModelConfig;
use super::params::ModelParams;

/// How the training data was prepared; evaluation refuses checkpoints
/// whose manifest disagrees with the requested configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessManifest {
    pub scaler: ScalerKind,
    pub scale_width: usize,
    pub resample: String,
    pub dataset_checksum: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor<T> {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

/// One file carrying config, named parameter tensors, the training seed
/// and the preprocessing manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub format: String,
    pub config: ModelConfig,
    pub seed: u64,
    pub preprocess: PreprocessManifest,
    pub tensors: Vec<NamedTensor<T>>,
}

const FORMAT_TAG: &str = "augcast-checkpoint-v1";

impl<T: Scalar> Checkpoint<T> {
    pub fn from_params(
        params: &ModelParams<T>,
        config: &ModelConfig,
        seed: u64,
        preprocess: PreprocessManifest,
    ) -> Self {
        let tensors = params
            .tensors()
            .into_iter()
            .map(|(name, m)| NamedTensor {
                name,
                rows: m.rows(),
                cols: m.cols(),
                data: m.data().to_vec(),
            })
            .collect();
        Checkpoint {
            format: FORMAT_TAG.into(),
            config: config.clone(),
            seed,
            preprocess,
            tensors,
        }
    }

    /// Rebuilds parameters, validating every tensor name and shape.
    pub fn to_params(&self) -> Result<ModelParams<T>> {
        if self.format != FORMAT_TAG {
            return Err(CoreError::InvalidInput(format!(
                "unsupported checkpoint format '{}'",
                self.format
            )));
        }
        let mut params = ModelParams::init(&self.config, self.seed)?;
        let expected: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
        if expected.len() != self.tensors.len() {
            return Err(CoreError::InvalidInput(format!(
                "checkpoint has {} tensors, config implies {}",
                self.tensors.len(),
                expected.len()
            )));
        }
        for ((name, dst), src) in params.tensors_mut().into_iter().zip(&self.tensors) {
            if name != src.name {
                return Err(CoreError::InvalidInput(format!(
                    "tensor order mismatch: expected {name}, found {}",
                    src.name
                )));
            }
            if (dst.rows(), dst.cols()) != (src.rows, src.cols) {
                return Err(CoreError::Shape {
                    op: "checkpoint_load",
                    expected: format!("{}x{} for {name}", dst.rows(), dst.cols()),
                    got: format!("{}x{}", src.rows, src.cols),
                });
            }
            *dst = Matrix::from_vec(src.rows, src.cols, src.data.clone())?;
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = BufReader::new(File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> PreprocessManifest {
        PreprocessManifest {
            scaler: ScalerKind::OnePlusMean,
            scale_width: 192,
            resample: "mean".into(),
            dataset_checksum: Some("abc".into()),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let cfg = ModelConfig {
            num_instances: 3,
            ..ModelConfig::default()
        };
        let mut params = ModelParams::<f64>::init(&cfg, 77).unwrap();
        // make values non-trivial, including awkward decimals
        for (i, (_, t)) in params.tensors_mut().into_iter().enumerate() {
            for (j, v) in t.data_mut().iter_mut().enumerate() {
                *v += 0.1 * (i as f64) + 1e-13 * (j as f64) + std::f64::consts::PI * 1e-3;
            }
        }
        let ck = Checkpoint::from_params(&params, &cfg, 77, manifest());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        ck.save(&path).unwrap();
        let loaded = Checkpoint::<f64>::load(&path).unwrap();
        assert_eq!(ck, loaded);
        let rebuilt = loaded.to_params().unwrap();
        for ((_, a), (_, b)) in params.tensors().into_iter().zip(rebuilt.tensors()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // and the file itself is stable under re-save
        let path2 = dir.path().join("model2.json");
        loaded.save(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let cfg = ModelConfig::default();
        let params = ModelParams::<f64>::init(&cfg, 1).unwrap();
        let mut ck = Checkpoint::from_params(&params, &cfg, 1, manifest());
        ck.tensors[0].rows += 1;
        let cols = ck.tensors[0].cols;
        ck.tensors[0].data.extend(vec![0.0; cols]);
        assert!(ck.to_params().is_err());
    }
}
