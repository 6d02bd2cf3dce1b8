use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::readout::DEFAULT_RIDGE_LAMBDA;
use crate::reservoir::{MaskKind, ReservoirParams};
use crate::tasks::{CsvSource, NarmaSum, DEFAULT_TRAIN_FRACTION};

/// Version of the spec-file and results-file layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_WASHOUT: usize = 50;
pub const DEFAULT_TRAIN_LEN: usize = 2250;
pub const DEFAULT_TEST_LEN: usize = 600;
pub const DEFAULT_REPLICATIONS: usize = 10;

/// Where the input/target pairs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskSpec {
    Narma {
        order: usize,
        #[serde(default = "default_input_low")]
        input_low: f64,
        #[serde(default = "default_input_high")]
        input_high: f64,
        #[serde(default)]
        sum: NarmaSum,
    },
    Csv {
        input: CsvSource,
        target: CsvSource,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
    Surrogate,
}

fn default_input_low() -> f64 {
    0.0
}
fn default_input_high() -> f64 {
    0.5
}
fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

impl TaskSpec {
    pub fn label(&self) -> &'static str {
        match self {
            TaskSpec::Narma { .. } => "narma",
            TaskSpec::Csv { .. } => "csv",
            TaskSpec::Surrogate => "surrogate",
        }
    }

    pub fn narma_order(&self) -> Option<usize> {
        match self {
            TaskSpec::Narma { order, .. } => Some(*order),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MaskSpec {
    pub kind: MaskKind,
}

/// Fixed ridge parameter, or a grid searched on the tail of the training
/// split when `lambda_grid` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeSpec {
    pub lambda: f64,
    pub lambda_grid: Option<Vec<f64>>,
}

impl Default for RidgeSpec {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_RIDGE_LAMBDA,
            lambda_grid: None,
        }
    }
}

/// A complete experiment description.
///
/// `train_len` and `test_len` count samples after the washout. For CSV
/// tasks they may be left out and are then derived from the file length and
/// `train_fraction`, with the washout taken from the front of the training
/// rows. Per-replication seeds for the task, the mask and the noise stream
/// are all derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_washout")]
    pub washout: usize,
    #[serde(default)]
    pub train_len: Option<usize>,
    #[serde(default)]
    pub test_len: Option<usize>,
    /// Standardise inputs on the training split before masking.
    #[serde(default)]
    pub standardize_inputs: bool,
    #[serde(default)]
    pub ridge: RidgeSpec,
    pub task: TaskSpec,
    #[serde(default)]
    pub reservoir: ReservoirParams,
    #[serde(default)]
    pub mask: MaskSpec,
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}
fn default_washout() -> usize {
    DEFAULT_WASHOUT
}

impl ExperimentSpec {
    /// NARMA-N with the benchmark defaults (V=35, alpha=0.7, beta=1,
    /// 2250 train / 600 test after a 50-step washout).
    pub fn narma(order: usize) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            seed: 0,
            replications: DEFAULT_REPLICATIONS,
            washout: DEFAULT_WASHOUT,
            train_len: Some(DEFAULT_TRAIN_LEN),
            test_len: Some(DEFAULT_TEST_LEN),
            standardize_inputs: false,
            ridge: RidgeSpec::default(),
            task: TaskSpec::Narma {
                order,
                input_low: 0.0,
                input_high: 0.5,
                sum: NarmaSum::Inclusive,
            },
            reservoir: ReservoirParams::default(),
            mask: MaskSpec::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file; relative CSV paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Spec(format!("cannot read {}: {e}", path.display())))?;
        let mut spec = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Spec(msg) => Error::Spec(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let (TaskSpec::Csv { input, target, .. }, Some(dir)) = (&mut spec.task, path.parent()) {
            for src in [input, target] {
                if src.path.is_relative() {
                    src.path = dir.join(&src.path);
                }
            }
        }
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(msg));
        if self.schema != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema {}; this build reads schema {SCHEMA_VERSION}",
                self.schema
            ));
        }
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        self.reservoir
            .validate()
            .map_err(|e| Error::Spec(e.to_string()))?;
        let lambdas = std::iter::once(self.ridge.lambda)
            .chain(self.ridge.lambda_grid.iter().flatten().copied());
        for l in lambdas {
            if !(l.is_finite() && l >= 0.0) {
                return bad(format!("ridge lambda {l} must be finite and >= 0"));
            }
        }
        if self.ridge.lambda_grid.as_ref().is_some_and(Vec::is_empty) {
            return bad("lambda_grid is empty".into());
        }
        match &self.task {
            TaskSpec::Narma {
                order,
                input_low,
                input_high,
                ..
            } => {
                if *order == 0 {
                    return bad("NARMA order must be >= 1".into());
                }
                if input_low.is_nan() || input_high.is_nan() || input_low > input_high {
                    return bad(format!(
                        "NARMA input range [{input_low}, {input_high}] is empty"
                    ));
                }
            }
            TaskSpec::Csv { train_fraction, .. } => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return bad(format!(
                        "train_fraction {train_fraction} must lie in (0, 1)"
                    ));
                }
            }
            TaskSpec::Surrogate => {}
        }
        match (&self.task, self.train_len, self.test_len) {
            (TaskSpec::Csv { .. }, None, None) => {}
            (_, Some(train), Some(test)) => {
                if train == 0 || test == 0 {
                    return bad("train_len and test_len must be >= 1".into());
                }
            }
            (TaskSpec::Csv { .. }, _, _) => {
                return bad("give both train_len and test_len, or neither".into());
            }
            _ => return bad("train_len and test_len are required for generated tasks".into()),
        }
        Ok(())
    }

    /// Length of a generated task: washout + train + test.
    pub fn generated_length(&self) -> Option<usize> {
        Some(self.washout + self.train_len? + self.test_len?)
    }

    /// Short content hash, independent of field order in the source file.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Derives an independent seed for `(replication, stream)` from a master
/// seed (SplitMix64 finaliser).
pub fn derive_seed(master: u64, replication: usize, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add((replication as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const STREAM_TASK: u64 = 1;
pub(crate) const STREAM_MASK: u64 = 2;
pub(crate) const STREAM_NOISE: u64 = 3;

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
schema = 1
seed = 4
replications = 3
train_len = 400
test_len = 100

[task]
kind = "narma"
order = 3

[reservoir]
num_nodes = 20
alpha = 0.5

[ridge]
lambda_grid = [1e-8, 1e-4]
"#;

    const SPEC_REORDERED: &str = r#"
replications = 3
test_len = 100
seed = 4
train_len = 400
schema = 1

[ridge]
lambda_grid = [1e-8, 1e-4]

[reservoir]
alpha = 0.5
num_nodes = 20

[task]
order = 3
kind = "narma"
"#;

    #[test]
    fn parses_with_defaults() {
        let s = ExperimentSpec::from_toml_str(SPEC).unwrap();
        assert_eq!(s.reservoir.num_nodes, 20);
        assert_eq!(s.reservoir.beta, 1.0);
        assert_eq!(s.washout, DEFAULT_WASHOUT);
        assert_eq!(s.task.narma_order(), Some(3));
        assert!(!s.standardize_inputs);
        assert_eq!(s.generated_length(), Some(550));
    }

    #[test]
    fn hash_ignores_field_order() {
        let a = ExperimentSpec::from_toml_str(SPEC).unwrap();
        let b = ExperimentSpec::from_toml_str(SPEC_REORDERED).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentSpec {
            seed: 5,
            ..a.clone()
        };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn round_trips_through_toml() {
        let a = ExperimentSpec::from_toml_str(SPEC).unwrap();
        let b = ExperimentSpec::from_toml_str(&a.to_toml_string().unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_specs() {
        let cases = [
            SPEC.replace("schema = 1", "schema = 2"),
            SPEC.replace("replications = 3", "replications = 0"),
            SPEC.replace("order = 3", "order = 0"),
            SPEC.replace("num_nodes = 20", "num_nodes = 0"),
            SPEC.replace("test_len = 100\n", ""),
            SPEC.replace("alpha = 0.5", "alpha = 0.5\ncolour = 1"),
            SPEC.replace("kind = \"narma\"", "kind = \"lorenz\""),
            SPEC.replace("[1e-8, 1e-4]", "[]"),
        ];
        for text in cases {
            assert!(
                matches!(ExperimentSpec::from_toml_str(&text), Err(Error::Spec(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn csv_spec_may_omit_lengths() {
        let text = r#"
schema = 1
[task]
kind = "csv"
input = "pump.csv"
target = "laser.csv#power"
"#;
        let s = ExperimentSpec::from_toml_str(text).unwrap();
        match &s.task {
            TaskSpec::Csv {
                target,
                train_fraction,
                ..
            } => {
                assert_eq!(target.column.as_deref(), Some("power"));
                assert_eq!(*train_fraction, 0.8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..50 {
            for stream in [STREAM_TASK, STREAM_MASK, STREAM_NOISE] {
                assert!(seen.insert(derive_seed(7, r, stream)));
            }
        }
        assert_eq!(
            derive_seed(7, 3, STREAM_MASK),
            derive_seed(7, 3, STREAM_MASK)
        );
    }
}
