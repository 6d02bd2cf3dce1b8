use std::time::Instant;

use super::experiment::{run_experiment, ResultRecord};
use super::spec::{ExperimentSpec, TaskSpec};
use crate::error::{Error, Result};

/// One sweep axis: a field name and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub field: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(field: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            field: field.into(),
            values,
        }
    }

    /// Parses `field=v1,v2,...`; integer ranges `a..b` (inclusive) are
    /// accepted as values too, e.g. `order=2..6`.
    pub fn parse(text: &str) -> Result<Self> {
        let (field, rest) = text
            .split_once('=')
            .ok_or_else(|| Error::Spec(format!("axis {text:?} must look like field=v1,v2")))?;
        let mut values = Vec::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let a: i64 = a
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad range {part:?}")))?;
                let b: i64 = b
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad range {part:?}")))?;
                values.extend((a..=b).map(|v| v as f64));
            } else {
                values.push(
                    part.parse()
                        .map_err(|_| Error::Spec(format!("bad axis value {part:?}")))?,
                );
            }
        }
        if values.is_empty() {
            return Err(Error::Spec(format!("axis {field:?} has no values")));
        }
        Ok(Self::new(field.trim(), values))
    }
}

/// Field names accepted on a sweep axis. `N` and `V` are aliases of
/// `order` and `num_nodes`.
pub const SWEEPABLE_FIELDS: &[&str] = &[
    "order",
    "num_nodes",
    "alpha",
    "beta",
    "gain_c",
    "pulse_period",
    "bandwidth_time",
    "noise_sigma",
    "ridge_lambda",
    "washout",
    "train_len",
    "test_len",
    "seed",
    "replications",
];

fn as_count(field: &str, v: f64) -> Result<usize> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::Spec(format!(
            "{field} needs a non-negative integer, got {v}"
        )))
    }
}

/// Sets one sweepable field of `spec`.
pub fn apply_axis(spec: &mut ExperimentSpec, field: &str, value: f64) -> Result<()> {
    let r = &mut spec.reservoir;
    match field {
        "order" | "N" => match &mut spec.task {
            TaskSpec::Narma { order, .. } => *order = as_count(field, value)?,
            other => {
                return Err(Error::Spec(format!(
                    "axis order needs a narma task, spec has {}",
                    other.label()
                )))
            }
        },
        "num_nodes" | "V" => r.num_nodes = as_count(field, value)?,
        "alpha" => r.alpha = value,
        "beta" => r.beta = value,
        "gain_c" => r.gain_c = value,
        "pulse_period" => r.pulse_period = value,
        "bandwidth_time" => r.bandwidth_time = value,
        "noise_sigma" => r.noise_sigma = value,
        "ridge_lambda" => {
            spec.ridge.lambda = value;
            spec.ridge.lambda_grid = None;
        }
        "washout" => spec.washout = as_count(field, value)?,
        "train_len" => spec.train_len = Some(as_count(field, value)?),
        "test_len" => spec.test_len = Some(as_count(field, value)?),
        "seed" => spec.seed = as_count(field, value)? as u64,
        "replications" => spec.replications = as_count(field, value)?,
        other => {
            return Err(Error::Spec(format!(
                "unknown sweep field {other:?}; sweepable: {}",
                SWEEPABLE_FIELDS.join(", ")
            )))
        }
    }
    Ok(())
}

/// Expands the Cartesian product of `axes` over `base`. The first axis
/// varies slowest. Every point is validated before anything runs.
pub fn expand(base: &ExperimentSpec, axes: &[Axis]) -> Result<Vec<ExperimentSpec>> {
    let mut points = vec![base.clone()];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for &v in &axis.values {
                let mut spec = p.clone();
                apply_axis(&mut spec, &axis.field, v)?;
                next.push(spec);
            }
        }
        points = next;
    }
    for p in &points {
        p.validate()?;
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// When false, `duration_ms` is written as 0 so reruns are byte-identical.
    pub include_timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            threads: None,
            include_timing: true,
        }
    }
}

/// Runs `f` on a pool of the requested size.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Spec("threads must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Output(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every sweep point in order, handing each record to `sink` as soon
/// as it completes.
pub fn run_sweep(
    base: &ExperimentSpec,
    axes: &[Axis],
    opts: RunOptions,
    mut sink: impl FnMut(&ResultRecord) -> Result<()> + Send,
) -> Result<Vec<ResultRecord>> {
    let points = expand(base, axes)?;
    with_threads(opts.threads, move || {
        let mut out = Vec::with_capacity(points.len());
        for (i, spec) in points.iter().enumerate() {
            let start = Instant::now();
            let mut rec = run_experiment(spec)?;
            rec.record = i;
            rec.duration_ms = if opts.include_timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            sink(&rec)?;
            out.push(rec);
        }
        Ok(out)
    })?
}
