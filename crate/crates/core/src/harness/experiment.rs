use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{derive_seed, ExperimentSpec, TaskSpec, STREAM_MASK, STREAM_NOISE, STREAM_TASK};
use crate::error::{Error, Result};
use crate::readout::{evaluate, fit_ridge, predict, select_lambda, EvalReport, ReadoutWeights};
use crate::reservoir::{generate_mask, run, CouplingMode, MaskKind, ReservoirParams};
use crate::tasks::{
    gen_narma, gen_surrogate_laser, load_csv_task, standardize, NarmaConfig, TaskDataset,
};

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub eval: EvalReport,
    pub weights: ReadoutWeights,
    /// Rows the readout was fitted on (after washout).
    pub train_rows: usize,
    /// Test-split targets.
    pub targets: Vec<f64>,
    /// Test-split predictions.
    pub predictions: Vec<f64>,
}

/// Target and prediction over the test split of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace {
    pub targets: Vec<f64>,
    pub predictions: Vec<f64>,
}

/// One line of a results file: the experiment flattened, per-replication
/// metrics, and their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub record: usize,
    pub spec_hash: String,
    pub task: String,
    pub order: Option<usize>,
    pub num_nodes: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gain_c: f64,
    pub pulse_period: f64,
    pub bandwidth_time: f64,
    pub noise_sigma: f64,
    pub coupling: String,
    pub mask_kind: String,
    pub washout: usize,
    pub train_len: usize,
    pub test_len: usize,
    pub standardize_inputs: bool,
    pub seed: u64,
    pub replications: usize,
    pub pearson_mean: f64,
    pub pearson_std: f64,
    pub nrmse_mean: f64,
    pub nrmse_std: f64,
    #[serde(with = "list")]
    pub pearson: Vec<f64>,
    #[serde(with = "list")]
    pub nrmse: Vec<f64>,
    #[serde(with = "list")]
    pub lambda: Vec<f64>,
    pub duration_ms: u64,
    /// First replication's test trace; not written to results files.
    #[serde(skip)]
    pub trace: Option<PredictionTrace>,
}

/// `;`-joined float lists inside a single tabular cell.
mod list {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<String> = v.iter().map(f64::to_string).collect();
        s.serialize_str(&text.join(";"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let text = String::deserialize(d)?;
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split(';')
            .map(|x| x.parse().map_err(D::Error::custom))
            .collect()
    }
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Builds the dataset for replication `replication`. Its training split
/// covers the washout rows followed by the training rows.
pub fn build_dataset(spec: &ExperimentSpec, replication: usize) -> Result<TaskDataset> {
    let task_seed = derive_seed(spec.seed, replication, STREAM_TASK);
    let ds = match &spec.task {
        TaskSpec::Narma {
            order,
            input_low,
            input_high,
            sum,
        } => gen_narma(&NarmaConfig {
            order: *order,
            length: spec.generated_length().unwrap_or_default(),
            seed: task_seed,
            input_low: *input_low,
            input_high: *input_high,
            sum: *sum,
        })?,
        TaskSpec::Surrogate => {
            gen_surrogate_laser(spec.generated_length().unwrap_or_default(), task_seed)?
        }
        TaskSpec::Csv {
            input,
            target,
            train_fraction,
        } => {
            let ds = load_csv_task(input, target, *train_fraction)?;
            return match (spec.train_len, spec.test_len) {
                (Some(train), Some(test)) => ds.with_split(spec.washout + train, test),
                _ => Ok(ds),
            };
        }
    };
    let (train, test) = (
        spec.train_len.unwrap_or_default(),
        spec.test_len.unwrap_or_default(),
    );
    ds.with_split(spec.washout + train, test)
}

/// Reservoir parameters of one replication, with its own noise seed.
pub fn replication_params(spec: &ExperimentSpec, replication: usize) -> ReservoirParams {
    ReservoirParams {
        seed: derive_seed(spec.seed, replication, STREAM_NOISE),
        ..spec.reservoir.clone()
    }
}

/// Trains and tests on a prepared dataset. Only the training split feeds
/// the input scaling, the lambda search and the fit.
pub fn run_on_dataset(
    spec: &ExperimentSpec,
    ds: &TaskDataset,
    replication: usize,
) -> Result<ReplicationResult> {
    ds.validate()?;
    if ds.train_len <= spec.washout + 1 {
        return Err(Error::InvalidParameter(format!(
            "training split of {} rows leaves nothing after a washout of {}",
            ds.train_len, spec.washout
        )));
    }
    let ds = if spec.standardize_inputs {
        standardize(ds)?
    } else {
        ds.clone()
    };
    let params = replication_params(spec, replication);
    let mask = generate_mask(
        params.num_nodes,
        derive_seed(spec.seed, replication, STREAM_MASK),
        spec.mask.kind,
    )?;
    let end = ds.train_len + ds.test_len;
    let states = run(&ds.inputs[..end], &mask, &params, spec.washout)?;

    let train_rows = ds.train_len - spec.washout;
    let train_states = states.rows(0..train_rows);
    let train_targets = &ds.targets[spec.washout..ds.train_len];
    let lambda = match &spec.ridge.lambda_grid {
        Some(grid) => select_lambda(&train_states, train_targets, grid)?,
        None => spec.ridge.lambda,
    };
    let weights = fit_ridge(&train_states, train_targets, lambda)?;

    let test_states = states.rows(train_rows..states.nrows());
    let predictions = predict(&test_states, &weights)?;
    let targets = ds.targets[ds.test_range()].to_vec();
    let eval = evaluate(&targets, &predictions)?;
    Ok(ReplicationResult {
        eval,
        weights,
        train_rows,
        targets,
        predictions,
    })
}

pub fn run_replication(spec: &ExperimentSpec, replication: usize) -> Result<ReplicationResult> {
    let ds = build_dataset(spec, replication)?;
    run_on_dataset(spec, &ds, replication)
}

/// Runs every replication of `spec`. Replications run in parallel on the
/// current rayon pool; results do not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultRecord> {
    spec.validate()?;
    let start = Instant::now();
    let results: Vec<ReplicationResult> = (0..spec.replications)
        .into_par_iter()
        .map(|r| {
            run_replication(spec, r).map_err(|e| Error::Replication {
                index: r,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let elapsed = start.elapsed().as_millis() as u64;
    Ok(make_record(spec, &results, elapsed))
}

fn make_record(
    spec: &ExperimentSpec,
    results: &[ReplicationResult],
    duration_ms: u64,
) -> ResultRecord {
    let pearson: Vec<f64> = results.iter().map(|r| r.eval.pearson).collect();
    let nrmse: Vec<f64> = results.iter().map(|r| r.eval.nrmse).collect();
    let lambda: Vec<f64> = results.iter().map(|r| r.weights.ridge_lambda).collect();
    let (pearson_mean, pearson_std) = mean_std(&pearson);
    let (nrmse_mean, nrmse_std) = mean_std(&nrmse);
    let first = &results[0];
    let p = &spec.reservoir;
    ResultRecord {
        record: 0,
        spec_hash: spec.hash(),
        task: spec.task.label().to_owned(),
        order: spec.task.narma_order(),
        num_nodes: p.num_nodes,
        alpha: p.alpha,
        beta: p.beta,
        gain_c: p.gain_c,
        pulse_period: p.pulse_period,
        bandwidth_time: p.bandwidth_time,
        noise_sigma: p.noise_sigma,
        coupling: match p.coupling {
            CouplingMode::TwoTerm => "two-term",
            CouplingMode::FullFilter => "full-filter",
        }
        .to_owned(),
        mask_kind: match spec.mask.kind {
            MaskKind::Uniform => "uniform",
            MaskKind::Binary => "binary",
        }
        .to_owned(),
        washout: spec.washout,
        train_len: first.train_rows,
        test_len: first.targets.len(),
        standardize_inputs: spec.standardize_inputs,
        seed: spec.seed,
        replications: spec.replications,
        pearson_mean,
        pearson_std,
        nrmse_mean,
        nrmse_std,
        pearson,
        nrmse,
        lambda,
        duration_ms,
        trace: Some(PredictionTrace {
            targets: first.targets.clone(),
            predictions: first.predictions.clone(),
        }),
    }
}
