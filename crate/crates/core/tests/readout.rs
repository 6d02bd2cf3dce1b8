mod common;

use common::{max_rel_diff, ridge_oracle, Lcg};
use proptest::prelude::*;
use pulsed_rc::readout::{fit_ridge, nrmse, pearson, predict};
use pulsed_rc::reservoir::StateMatrix;

fn random_problem(rng: &mut Lcg, rows: usize, cols: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let r: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.range(-1.0, 1.0)).collect())
        .collect();
    let y = (0..rows).map(|_| rng.range(-1.0, 1.0)).collect();
    (r, y)
}

fn optimality_residual(rows: &[Vec<f64>], y: &[f64], w: &[f64], lambda: f64) -> f64 {
    let resid: Vec<f64> = rows
        .iter()
        .zip(y)
        .map(|(r, t)| r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - t)
        .collect();
    (0..w.len())
        .map(|i| {
            let g: f64 = rows.iter().zip(&resid).map(|(r, e)| r[i] * e).sum();
            (2.0 * g + 2.0 * lambda * w[i]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn matches_normal_equation_oracle_200x36() {
    let mut rng = Lcg(2024);
    let (rows, y) = random_problem(&mut rng, 200, 36);
    let states = StateMatrix::from_rows(&rows).unwrap();
    let w = fit_ridge(&states, &y, 1e-6).unwrap();
    let oracle = ridge_oracle(&rows, &y, 1e-6);
    assert!(max_rel_diff(&w.weights, &oracle) < 1e-8);
    assert!(optimality_residual(&rows, &y, &w.weights, 1e-6) < 1e-8);
}

#[test]
fn matches_oracle_on_many_small_instances() {
    let mut rng = Lcg(77);
    for _ in 0..60 {
        let cols = 1 + (rng.next_f64() * 10.0) as usize;
        let rows_n = cols + (rng.next_f64() * (50 - cols) as f64) as usize;
        let lambda = 10f64.powf(rng.range(-8.0, 0.0));
        let (rows, y) = random_problem(&mut rng, rows_n.max(cols), cols);
        let w = fit_ridge(&StateMatrix::from_rows(&rows).unwrap(), &y, lambda).unwrap();
        let oracle = ridge_oracle(&rows, &y, lambda);
        assert!(max_rel_diff(&w.weights, &oracle) < 1e-8);
    }
}

#[test]
fn training_error_grows_with_lambda() {
    let mut rng = Lcg(5);
    let (rows, y) = random_problem(&mut rng, 80, 12);
    let states = StateMatrix::from_rows(&rows).unwrap();
    let mut last = 0.0;
    for exp in -10..=4 {
        let w = fit_ridge(&states, &y, 10f64.powi(exp)).unwrap();
        let p = predict(&states, &w).unwrap();
        let sse: f64 = p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!(sse >= last - 1e-12, "lambda 1e{exp}: {sse} < {last}");
        last = sse;
    }
}

proptest! {
    #[test]
    fn pearson_is_affine_invariant(
        y in proptest::collection::vec(-5.0f64..5.0, 3..40),
        noise in proptest::collection::vec(-1.0f64..1.0, 40),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let yhat: Vec<f64> = y.iter().zip(&noise).map(|(v, n)| v + n).collect();
        let base = match pearson(&y, &yhat) { Ok(r) => r, Err(_) => return Ok(()) };
        let pos: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let neg: Vec<f64> = y.iter().map(|v| -a * v + b).collect();
        prop_assert!((pearson(&pos, &yhat).unwrap() - base).abs() < 1e-9);
        prop_assert!((pearson(&neg, &yhat).unwrap() + base).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&base));
        prop_assert!(nrmse(&y, &yhat).map_or(true, |e| e >= 0.0));
    }
}
