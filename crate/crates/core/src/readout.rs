//! Linear readout: ridge-regression training, prediction and the two
//! evaluation metrics (Pearson correlation and NRMSE).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::StateMatrix;

/// Ridge parameter used when none is given.
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;

/// Log-spaced grid `1e-10, 1e-9, ..., 1`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| 10f64.powi(i - 10)).collect()
}

/// Trained output weights, bias weight last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights {
    pub weights: Vec<f64>,
    pub ridge_lambda: f64,
}

impl ReadoutWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pearson: f64,
    pub nrmse: f64,
    pub n_samples: usize,
}

/// Minimises `|R w - y|^2 + lambda |w|^2` through the regularised normal
/// equations and a Cholesky factorisation. The bias column is penalised
/// like every other column.
pub fn fit_ridge(
    states: &StateMatrix,
    targets: &[f64],
    ridge_lambda: f64,
) -> Result<ReadoutWeights> {
    if states.nrows() != targets.len() {
        return Err(Error::Dimension {
            what: "targets",
            expected: states.nrows(),
            got: targets.len(),
        });
    }
    if !(ridge_lambda.is_finite() && ridge_lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge_lambda must be finite and >= 0, got {ridge_lambda}"
        )));
    }
    let r = states.as_matrix();
    let n = r.ncols();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "state matrix has no columns".into(),
        ));
    }
    if ridge_lambda == 0.0 && r.nrows() < n {
        return Err(Error::SingularSystem);
    }
    let y = DVector::from_column_slice(targets);
    let mut gram = r.tr_mul(r);
    for i in 0..n {
        gram[(i, i)] += ridge_lambda;
    }
    let rhs = r.tr_mul(&y);
    let chol = gram.cholesky().ok_or(Error::SingularSystem)?;
    let w = chol.solve(&rhs);
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(ReadoutWeights {
        weights: w.iter().copied().collect(),
        ridge_lambda,
    })
}

/// `y_k = w . r_k` for every row.
pub fn predict(states: &StateMatrix, w: &ReadoutWeights) -> Result<Vec<f64>> {
    if states.ncols() != w.len() {
        return Err(Error::Dimension {
            what: "readout weights",
            expected: states.ncols(),
            got: w.len(),
        });
    }
    let wv = DVector::from_column_slice(&w.weights);
    let out: DVector<f64> = states.as_matrix() * wv;
    Ok(out.iter().copied().collect())
}

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::Dimension {
            what: "prediction",
            expected: y.len(),
            got: yhat.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {}",
            y.len()
        )));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sum of squared deviations from the mean.
fn centered_ss(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum()
}

/// Sample Pearson correlation coefficient, clamped to [-1, 1].
pub fn pearson(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let (my, mp) = (mean(y), mean(yhat));
    let syy = centered_ss(y, my);
    let spp = centered_ss(yhat, mp);
    if syy == 0.0 {
        return Err(Error::DegenerateVariance("target"));
    }
    if spp == 0.0 {
        return Err(Error::DegenerateVariance("prediction"));
    }
    let cov: f64 = y.iter().zip(yhat).map(|(a, b)| (a - my) * (b - mp)).sum();
    Ok((cov / (syy.sqrt() * spp.sqrt())).clamp(-1.0, 1.0))
}

/// Root-mean-squared error divided by the population standard deviation of
/// the target, so that predicting the target mean scores exactly 1.
pub fn nrmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let my = mean(y);
    let var = centered_ss(y, my) / y.len() as f64;
    if var == 0.0 {
        return Err(Error::DegenerateVariance("target"));
    }
    let mse = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64;
    Ok((mse / var).sqrt())
}

pub fn evaluate(y: &[f64], yhat: &[f64]) -> Result<EvalReport> {
    Ok(EvalReport {
        pearson: pearson(y, yhat)?,
        nrmse: nrmse(y, yhat)?,
        n_samples: y.len(),
    })
}

/// Picks the ridge parameter by fitting on the first 80% of the given rows
/// and scoring NRMSE on the remaining 20%. Ties go to the larger lambda.
pub fn select_lambda(states: &StateMatrix, targets: &[f64], grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    let n = states.nrows();
    let fit_rows = n * 4 / 5;
    if fit_rows < 2 || n - fit_rows < 2 {
        return Err(Error::InvalidParameter(format!(
            "{n} training rows are too few for lambda selection"
        )));
    }
    let fit_states = states.rows(0..fit_rows);
    let val_states = states.rows(fit_rows..n);
    let (fit_y, val_y) = targets.split_at(fit_rows);

    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let score = match fit_ridge(&fit_states, fit_y, lambda) {
            Ok(w) => nrmse(val_y, &predict(&val_states, &w)?)?,
            Err(Error::SingularSystem) => continue,
            Err(e) => return Err(e),
        };
        if !score.is_finite() {
            continue;
        }
        match best {
            Some((_, s)) if score > s => {}
            Some((l, s)) if score == s && lambda < l => {}
            _ => best = Some((lambda, score)),
        }
    }
    best.map(|(l, _)| l).ok_or(Error::SingularSystem)
}
