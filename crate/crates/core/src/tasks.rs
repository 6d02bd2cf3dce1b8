//! Benchmark datasets: NARMA-N, paired series loaded from CSV, and a
//! synthetic pump-noise surrogate.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of rows used for training when a split is derived from a length.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Affine map applied to the inputs by [`standardize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub mean: f64,
    pub std: f64,
}

/// Paired input/target series with a train/test split.
///
/// Rows `0..train_len` form the training split and the `test_len` rows
/// immediately after it form the test split.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub name: String,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub train_len: usize,
    pub test_len: usize,
    /// Generator seed; `None` for file-loaded data.
    pub seed: Option<u64>,
    /// Set once the inputs have been standardised.
    pub input_scaling: Option<InputScaling>,
}

impl TaskDataset {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<f64>,
        targets: Vec<f64>,
        train_len: usize,
        test_len: usize,
        seed: Option<u64>,
    ) -> Result<Self> {
        let ds = Self {
            name: name.into(),
            inputs,
            targets,
            train_len,
            test_len,
            seed,
            input_scaling: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.targets.len() {
            return Err(Error::LengthMismatch {
                input_len: self.inputs.len(),
                target_len: self.targets.len(),
            });
        }
        if self.train_len == 0 || self.test_len == 0 {
            return Err(Error::InvalidParameter(
                "train and test splits must both be non-empty".into(),
            ));
        }
        if self.train_len + self.test_len > self.len() {
            return Err(Error::InvalidParameter(format!(
                "train {} + test {} exceeds dataset length {}",
                self.train_len,
                self.test_len,
                self.len()
            )));
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if !finite(&self.inputs) || !finite(&self.targets) {
            return Err(Error::InvalidInput(format!(
                "dataset {} contains non-finite values",
                self.name
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Replaces the split, checking it fits.
    pub fn with_split(mut self, train_len: usize, test_len: usize) -> Result<Self> {
        self.train_len = train_len;
        self.test_len = test_len;
        self.validate()?;
        Ok(self)
    }

    pub fn test_range(&self) -> std::ops::Range<usize> {
        self.train_len..self.train_len + self.test_len
    }
}

fn fraction_split(len: usize, train_fraction: f64) -> Result<(usize, usize)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let train = (train_fraction * len as f64).floor() as usize;
    Ok((train, len - train))
}

/// Which window the NARMA feedback sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NarmaSum {
    /// N+1 most recent outputs, `y(t-N-1) .. y(t-1)`.
    #[default]
    Inclusive,
    /// N most recent outputs, `y(t-N) .. y(t-1)`, the form common in the
    /// reservoir-computing literature.
    Compat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NarmaConfig {
    pub order: usize,
    pub length: usize,
    pub seed: u64,
    pub input_low: f64,
    pub input_high: f64,
    pub sum: NarmaSum,
}

impl Default for NarmaConfig {
    fn default() -> Self {
        Self {
            order: 2,
            length: 2900,
            seed: 0,
            input_low: 0.0,
            input_high: 0.5,
            sum: NarmaSum::Inclusive,
        }
    }
}

impl NarmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidParameter("NARMA order must be >= 1".into()));
        }
        if self.length <= self.order + 1 {
            return Err(Error::InvalidParameter(format!(
                "NARMA length {} too short for order {}",
                self.length, self.order
            )));
        }
        if !(self.input_low.is_finite() && self.input_high.is_finite())
            || self.input_low > self.input_high
        {
            return Err(Error::InvalidParameter(format!(
                "invalid NARMA input range [{}, {}]",
                self.input_low, self.input_high
            )));
        }
        Ok(())
    }
}

/// Outputs beyond this magnitude mark a divergent draw.
pub const NARMA_DIVERGENCE_BOUND: f64 = 10.0;
const NARMA_MAX_ATTEMPTS: u64 = 100;

/// NARMA-N target for a given input sequence, or `None` if it diverges.
///
/// ```text
/// y(t) = 0.3 y(t-1) + 0.05 y(t-1) S(t) + 1.5 u(t-1) u(t-N) + 0.1
/// ```
///
/// with `y = 0` for the first N+1 samples.
pub fn narma_response(u: &[f64], order: usize, sum: NarmaSum) -> Option<Vec<f64>> {
    let n = order;
    let mut y = vec![0.0; u.len()];
    let window = match sum {
        NarmaSum::Inclusive => n + 1,
        NarmaSum::Compat => n,
    };
    for t in (n + 1)..u.len() {
        let s: f64 = y[t - window..t].iter().sum();
        let yt = 0.3 * y[t - 1] + 0.05 * y[t - 1] * s + 1.5 * u[t - 1] * u[t - n] + 0.1;
        if !(yt.is_finite() && yt.abs() <= NARMA_DIVERGENCE_BOUND) {
            return None;
        }
        y[t] = yt;
    }
    Some(y)
}

/// Draws a NARMA-N dataset. A divergent draw is retried from `seed + 1`,
/// up to 100 seeds in total. The split defaults to 80/20.
pub fn gen_narma(cfg: &NarmaConfig) -> Result<TaskDataset> {
    cfg.validate()?;
    for attempt in 0..NARMA_MAX_ATTEMPTS {
        let seed = cfg.seed.wrapping_add(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..cfg.length)
            .map(|_| {
                if cfg.input_low == cfg.input_high {
                    cfg.input_low
                } else {
                    rng.gen_range(cfg.input_low..cfg.input_high)
                }
            })
            .collect();
        if let Some(y) = narma_response(&u, cfg.order, cfg.sum) {
            let (train, test) = fraction_split(cfg.length, DEFAULT_TRAIN_FRACTION)?;
            return TaskDataset::new(
                format!("narma-{}", cfg.order),
                u,
                y,
                train,
                test,
                Some(seed),
            );
        }
    }
    Err(Error::TaskDivergence {
        order: cfg.order,
        first_seed: cfg.seed,
        last_seed: cfg.seed.wrapping_add(NARMA_MAX_ATTEMPTS - 1),
    })
}

/// One numeric column of a CSV file: `path` or `path#column`, where the
/// column is a header name or a zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CsvSource {
    pub path: PathBuf,
    pub column: Option<String>,
}

impl CsvSource {
    pub fn new(path: impl Into<PathBuf>, column: Option<&str>) -> Self {
        Self {
            path: path.into(),
            column: column.map(str::to_owned),
        }
    }
}

impl FromStr for CsvSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (path, column) = match s.rsplit_once('#') {
            Some((p, c)) => (p, Some(c)),
            None => (s, None),
        };
        if path.is_empty() || column.is_some_and(str::is_empty) {
            return Err(Error::Spec(format!(
                "bad CSV source {s:?}; expected path or path#column"
            )));
        }
        Ok(Self::new(path, column))
    }
}

impl TryFrom<String> for CsvSource {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CsvSource> for String {
    fn from(src: CsvSource) -> String {
        match src.column {
            Some(c) => format!("{}#{c}", src.path.display()),
            None => src.path.display().to_string(),
        }
    }
}

/// Reads one numeric column. Lines starting with `#` are ignored; a first
/// row that does not parse as numbers is taken as a header.
pub fn read_csv_column(src: &CsvSource) -> Result<Vec<f64>> {
    let file = File::open(&src.path).map_err(|e| Error::io(&src.path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);

    let parse_err = |line: usize, msg: String| Error::Parse {
        path: src.path.clone(),
        line,
        msg,
    };

    let mut width: Option<usize> = None;
    let mut col_idx: Option<usize> = None;
    let mut values = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let numeric: Option<Vec<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();

        if width.is_none() {
            width = Some(record.len());
            if numeric.is_none() {
                let header: Vec<String> = record.iter().map(str::to_owned).collect();
                col_idx = Some(resolve_column(src, Some(&header), record.len(), line)?);
                continue;
            }
            col_idx = Some(resolve_column(src, None, record.len(), line)?);
        }
        let w = width.unwrap_or_default();
        if record.len() != w {
            return Err(parse_err(
                line,
                format!("expected {w} fields, found {}", record.len()),
            ));
        }
        let idx = col_idx.unwrap_or_default();
        let field = &record[idx];
        let v: f64 = field
            .parse()
            .map_err(|_| parse_err(line, format!("non-numeric value {field:?}")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value {field:?}")));
        }
        values.push(v);
    }
    Ok(values)
}

fn resolve_column(
    src: &CsvSource,
    header: Option<&[String]>,
    width: usize,
    line: usize,
) -> Result<usize> {
    let err = |msg: String| Error::Parse {
        path: src.path.clone(),
        line,
        msg,
    };
    match &src.column {
        None if width == 1 => Ok(0),
        None => Err(err(format!(
            "file has {width} columns; name one with path#column"
        ))),
        Some(name) => {
            if let Some(h) = header {
                if let Some(i) = h.iter().position(|c| c == name) {
                    return Ok(i);
                }
            }
            match name.parse::<usize>() {
                Ok(i) if i < width => Ok(i),
                _ => Err(err(match header {
                    Some(h) => format!("missing column {name:?}; available: {}", h.join(", ")),
                    None => format!("missing column {name:?}; file has {width} unnamed columns"),
                })),
            }
        }
    }
}

/// Minimum rows accepted from CSV.
pub const CSV_MIN_ROWS: usize = 10;

/// Loads a paired input/target task. `train_len = floor(train_fraction * L)`
/// and the test split is the remainder.
pub fn load_csv_task(
    input: &CsvSource,
    target: &CsvSource,
    train_fraction: f64,
) -> Result<TaskDataset> {
    let inputs = read_csv_column(input)?;
    let targets = read_csv_column(target)?;
    if inputs.len() != targets.len() {
        return Err(Error::LengthMismatch {
            input_len: inputs.len(),
            target_len: targets.len(),
        });
    }
    if inputs.len() < CSV_MIN_ROWS {
        return Err(Error::InvalidInput(format!(
            "{} has {} rows; at least {CSV_MIN_ROWS} are required",
            input.path.display(),
            inputs.len()
        )));
    }
    let (train, test) = fraction_split(inputs.len(), train_fraction)?;
    let name = input
        .path
        .file_stem()
        .map_or_else(|| "csv".to_owned(), |s| s.to_string_lossy().into_owned());
    TaskDataset::new(name, inputs, targets, train, test, None)
}

/// Writes `u,y` columns with a header.
pub fn write_csv(ds: &TaskDataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Output(e.to_string()))?;
    let out = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(["u", "y"]).map_err(out)?;
    for (u, y) in ds.inputs.iter().zip(&ds.targets) {
        w.write_record([u.to_string(), y.to_string()])
            .map_err(out)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

// Surrogate pump/laser constants.
const PUMP_MEMORY: f64 = 0.9;
const RESPONSE_MEMORY: f64 = 0.8;
const RESPONSE_GAIN: f64 = 0.2;
const SATURATION_GAIN: f64 = 1.0;
const MEASUREMENT_NOISE: f64 = 0.05;
const SURROGATE_BURN_IN: usize = 500;

/// Synthetic stand-in for pump-driven laser fluctuations.
///
/// The input is unit-variance AR(1) noise `p(t) = 0.9 p(t-1) + sqrt(1 - 0.81) xi(t)`.
/// The target follows the pump through a slower first-order response
/// `g(t) = 0.8 g(t-1) + 0.2 p(t-1)`, a `tanh` saturation and additive
/// measurement noise of standard deviation 0.05.
pub fn gen_surrogate_laser(length: usize, seed: u64) -> Result<TaskDataset> {
    if length < 100 {
        return Err(Error::InvalidParameter(format!(
            "surrogate length must be >= 100, got {length}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let drive = (1.0 - PUMP_MEMORY * PUMP_MEMORY).sqrt();
    let (mut p, mut g) = (0.0f64, 0.0f64);
    let mut inputs = Vec::with_capacity(length);
    let mut targets = Vec::with_capacity(length);
    for t in 0..SURROGATE_BURN_IN + length {
        g = RESPONSE_MEMORY * g + RESPONSE_GAIN * p;
        p = PUMP_MEMORY * p + drive * normal();
        let y = (SATURATION_GAIN * g).tanh() + MEASUREMENT_NOISE * normal();
        if t >= SURROGATE_BURN_IN {
            inputs.push(p);
            targets.push(y);
        }
    }
    let (train, test) = fraction_split(length, DEFAULT_TRAIN_FRACTION)?;
    TaskDataset::new("surrogate-laser", inputs, targets, train, test, Some(seed))
}

/// Maps inputs to zero mean and unit variance using statistics of the
/// training split only. Targets are left alone. Applying it to data that
/// is already standardised is a no-op up to rounding.
pub fn standardize(ds: &TaskDataset) -> Result<TaskDataset> {
    let train = &ds.inputs[..ds.train_len];
    if train.is_empty() {
        return Err(Error::InvalidParameter("empty training split".into()));
    }
    let n = train.len() as f64;
    let mean = train.iter().sum::<f64>() / n;
    let var = train.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::DegenerateVariance("input"));
    }
    let std = var.sqrt();
    let mut out = ds.clone();
    for x in &mut out.inputs {
        *x = (*x - mean) / std;
    }
    let prior = ds.input_scaling.unwrap_or(InputScaling {
        mean: 0.0,
        std: 1.0,
    });
    out.input_scaling = Some(InputScaling {
        mean: prior.mean + prior.std * mean,
        std: prior.std * std,
    });
    Ok(out)
}
