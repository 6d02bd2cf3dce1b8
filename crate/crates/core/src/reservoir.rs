//! Time-multiplexed delay reservoir with phase-encoded input.
//!
//! A single nonlinear node is shared by `V` virtual nodes, one per pulse
//! slot of duration `T_r` in the delay loop. Node `j` at input step `k`
//! sees the phase
//!
//! ```text
//! phi[k][j] = beta * m[j] * u[k] + alpha * M[k-1][j]
//! ```
//!
//! and the detector, whose response time `T_BW` is slower than the pulse
//! period, reports
//!
//! ```text
//! M[k][j] = C sin(phi[k][j-1]) eps + C sin(phi[k][j]) (1 - eps),   eps = exp(-T_r / T_BW)
//! ```
//!
//! The predecessor of node 0 is the last node of the previous input step:
//! the pulse train is continuous and the filter is never reset.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pulse period of the source laser, seconds.
pub const REFERENCE_PULSE_PERIOD: f64 = 6.4e-9;
/// Effective low-pass time constant of the detection chain, seconds.
pub const REFERENCE_BANDWIDTH_TIME: f64 = 21e-9;

/// How neighbouring pulses are mixed by the finite detection bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// Only the immediately preceding pulse leaks into the measurement.
    #[default]
    TwoTerm,
    /// Untruncated first-order low-pass: `s[j] = eps s[j-1] + (1 - eps) C sin(phi[j])`.
    FullFilter,
}

/// Model constants of the reservoir.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirParams {
    /// Number of virtual nodes `V`.
    pub num_nodes: usize,
    /// Feedback gain.
    pub alpha: f64,
    /// Input gain.
    pub beta: f64,
    /// Detector constant `C`.
    pub gain_c: f64,
    /// Node separation `T_r`, seconds.
    pub pulse_period: f64,
    /// Effective detection time constant `T_BW`, seconds.
    pub bandwidth_time: f64,
    /// Standard deviation of additive Gaussian detection noise; 0 disables it.
    pub noise_sigma: f64,
    /// Seed of the detection-noise stream. Not read from spec files; the
    /// harness derives it per replication.
    #[serde(skip)]
    pub seed: u64,
    pub coupling: CouplingMode,
}

impl Default for ReservoirParams {
    fn default() -> Self {
        Self {
            num_nodes: 35,
            alpha: 0.7,
            beta: 1.0,
            gain_c: 1.0,
            pulse_period: REFERENCE_PULSE_PERIOD,
            bandwidth_time: REFERENCE_BANDWIDTH_TIME,
            noise_sigma: 0.0,
            seed: 0,
            coupling: CouplingMode::TwoTerm,
        }
    }
}

impl ReservoirParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 {
            return Err(Error::InvalidParameter(
                "num_nodes must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gain_c", self.gain_c),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        coupling_factor(self.pulse_period, self.bandwidth_time).map(|_| ())
    }

    /// `exp(-pulse_period / bandwidth_time)`.
    pub fn coupling_factor(&self) -> Result<f64> {
        coupling_factor(self.pulse_period, self.bandwidth_time)
    }

    /// Duration of one full loop, `V * T_r`.
    pub fn time_span(&self) -> f64 {
        self.num_nodes as f64 * self.pulse_period
    }
}

/// Fraction of a measurement contributed by the preceding pulse.
///
/// Lies in (0, 1) for finite positive arguments; underflows to exactly 0
/// once `pulse_period / bandwidth_time` exceeds roughly 745, which recovers
/// the uncoupled sine readout.
pub fn coupling_factor(pulse_period: f64, bandwidth_time: f64) -> Result<f64> {
    for (name, v) in [
        ("pulse_period", pulse_period),
        ("bandwidth_time", bandwidth_time),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and > 0, got {v}"
            )));
        }
    }
    Ok((-pulse_period / bandwidth_time).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    /// i.i.d. uniform on [-1, 1].
    #[default]
    Uniform,
    /// i.i.d. uniform on {-1, +1}.
    Binary,
}

/// Per-node input weights `m_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    weights: Vec<f64>,
}

impl Mask {
    /// Builds a mask from explicit weights. Entries must be finite and, for
    /// more than one node, not all equal.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter(
                "mask must have at least one entry".into(),
            ));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mask entry {bad} is not finite"
            )));
        }
        if weights.len() > 1 && weights.iter().all(|&w| w == weights[0]) {
            return Err(Error::InvalidParameter(
                "mask entries are all equal; nodes would be indistinguishable".into(),
            ));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Draws a mask deterministically from `(num_nodes, seed, kind)`.
///
/// A draw with all entries equal is rejected and redrawn from the same
/// stream, which only matters for tiny binary masks.
pub fn generate_mask(num_nodes: usize, seed: u64, kind: MaskKind) -> Result<Mask> {
    if num_nodes == 0 {
        return Err(Error::InvalidParameter(
            "num_nodes must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let weights: Vec<f64> = (0..num_nodes)
            .map(|_| match kind {
                MaskKind::Uniform => rng.gen_range(-1.0..=1.0),
                MaskKind::Binary => {
                    if rng.gen::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            })
            .collect();
        if let Ok(mask) = Mask::new(weights) {
            return Ok(mask);
        }
    }
}

/// Memory carried from one input step to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    /// Measured node values of the previous step, `M[k-1][j]`.
    pub measurements: Vec<f64>,
    /// `sin(phi)` of the most recently processed node.
    pub last_sine: f64,
    // Noise-free low-pass output of the last node; only read in full-filter mode.
    filter_output: f64,
}

impl ReservoirState {
    pub fn zeros(num_nodes: usize) -> Self {
        Self {
            measurements: vec![0.0; num_nodes],
            last_sine: 0.0,
            filter_output: 0.0,
        }
    }

    /// A state with explicit measurements. In full-filter mode the carried
    /// filter output is taken to be the last measurement.
    pub fn new(measurements: Vec<f64>, last_sine: f64) -> Result<Self> {
        if measurements.iter().any(|m| !m.is_finite()) || !last_sine.is_finite() {
            return Err(Error::InvalidInput("reservoir state must be finite".into()));
        }
        let filter_output = measurements.last().copied().unwrap_or(0.0);
        Ok(Self {
            measurements,
            last_sine,
            filter_output,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.measurements.len()
    }
}

/// Seeded source of detection noise; a no-op when sigma is zero.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    sigma: f64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(sigma: f64, seed: u64) -> Self {
        Self {
            sigma,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_params(params: &ReservoirParams) -> Self {
        Self::new(params.noise_sigma, params.seed)
    }

    #[inline]
    fn sample(&mut self) -> f64 {
        if self.sigma > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.sigma * z
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Dynamics {
    alpha: f64,
    beta: f64,
    gain_c: f64,
    eps: f64,
    coupling: CouplingMode,
}

impl Dynamics {
    fn new(params: &ReservoirParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            alpha: params.alpha,
            beta: params.beta,
            gain_c: params.gain_c,
            eps: params.coupling_factor()?,
            coupling: params.coupling,
        })
    }

    /// Processes one input sample over all nodes in place.
    fn advance(&self, state: &mut ReservoirState, u: f64, mask: &[f64], noise: &mut NoiseSource) {
        let c = self.gain_c;
        let eps = self.eps;
        for (m_j, prev) in mask.iter().zip(state.measurements.iter_mut()) {
            let phi = self.beta * m_j * u + self.alpha * *prev;
            let sine = phi.sin();
            let clean = match self.coupling {
                CouplingMode::TwoTerm => c * state.last_sine * eps + c * sine * (1.0 - eps),
                CouplingMode::FullFilter => eps * state.filter_output + (1.0 - eps) * c * sine,
            };
            state.last_sine = sine;
            state.filter_output = clean;
            *prev = clean + noise.sample();
        }
    }
}

fn check_dims(mask: &Mask, params: &ReservoirParams) -> Result<()> {
    if mask.len() != params.num_nodes {
        return Err(Error::Dimension {
            what: "mask",
            expected: params.num_nodes,
            got: mask.len(),
        });
    }
    Ok(())
}

fn check_input(u: f64) -> Result<()> {
    if u.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "input value {u} is not finite"
        )))
    }
}

/// Processes one input sample. Returns the successor state and the row of
/// measured node values, which are the same numbers.
pub fn step(
    state: &ReservoirState,
    input_value: f64,
    mask: &Mask,
    params: &ReservoirParams,
    noise: &mut NoiseSource,
) -> Result<(ReservoirState, Vec<f64>)> {
    check_dims(mask, params)?;
    if state.num_nodes() != params.num_nodes {
        return Err(Error::Dimension {
            what: "reservoir state",
            expected: params.num_nodes,
            got: state.num_nodes(),
        });
    }
    check_input(input_value)?;
    let dynamics = Dynamics::new(params)?;
    let mut next = state.clone();
    dynamics.advance(&mut next, input_value, mask.weights(), noise);
    let row = next.measurements.clone();
    Ok((next, row))
}

/// A reservoir instance owning its state and noise stream.
#[derive(Debug, Clone)]
pub struct Reservoir {
    mask: Mask,
    dynamics: Dynamics,
    state: ReservoirState,
    noise: NoiseSource,
}

impl Reservoir {
    /// Starts from the all-zero state.
    pub fn new(params: &ReservoirParams, mask: Mask) -> Result<Self> {
        check_dims(&mask, params)?;
        Ok(Self {
            dynamics: Dynamics::new(params)?,
            state: ReservoirState::zeros(params.num_nodes),
            noise: NoiseSource::for_params(params),
            mask,
        })
    }

    pub fn with_state(mut self, state: ReservoirState) -> Result<Self> {
        if state.num_nodes() != self.mask.len() {
            return Err(Error::Dimension {
                what: "reservoir state",
                expected: self.mask.len(),
                got: state.num_nodes(),
            });
        }
        self.state = state;
        Ok(self)
    }

    pub fn state(&self) -> &ReservoirState {
        &self.state
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    /// Feeds one sample and returns the new node measurements.
    pub fn advance(&mut self, input_value: f64) -> Result<&[f64]> {
        check_input(input_value)?;
        self.dynamics.advance(
            &mut self.state,
            input_value,
            self.mask.weights(),
            &mut self.noise,
        );
        Ok(&self.state.measurements)
    }

    /// Drives the reservoir over `inputs`, dropping the first `washout`
    /// rows, and appends a constant bias column.
    pub fn drive(&mut self, inputs: &[f64], washout: usize) -> Result<StateMatrix> {
        if inputs.len() <= washout {
            return Err(Error::InvalidParameter(format!(
                "input length {} must exceed washout {washout}",
                inputs.len()
            )));
        }
        if let Some(bad) = inputs.iter().find(|u| !u.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "input value {bad} is not finite"
            )));
        }
        let v = self.mask.len();
        let rows = inputs.len() - washout;
        let mut data = Vec::with_capacity(rows * (v + 1));
        for (k, &u) in inputs.iter().enumerate() {
            self.dynamics
                .advance(&mut self.state, u, self.mask.weights(), &mut self.noise);
            if k >= washout {
                data.extend_from_slice(&self.state.measurements);
                data.push(1.0);
            }
        }
        Ok(StateMatrix(DMatrix::from_row_slice(rows, v + 1, &data)))
    }
}

/// Runs a fresh reservoir from the zero state over `inputs`.
pub fn run(
    inputs: &[f64],
    mask: &Mask,
    params: &ReservoirParams,
    washout: usize,
) -> Result<StateMatrix> {
    Reservoir::new(params, mask.clone())?.drive(inputs, washout)
}

/// Collected node measurements, one row per input step, with a trailing
/// constant-1 bias column.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix(DMatrix<f64>);

impl StateMatrix {
    /// Wraps an arbitrary design matrix. No bias column is added.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    /// Builds a design matrix from row vectors of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::Dimension {
                    what: "state row",
                    expected: ncols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self(DMatrix::from_row_slice(rows.len(), ncols, &data)))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Contiguous block of rows.
    pub fn rows(&self, range: Range<usize>) -> StateMatrix {
        StateMatrix(self.0.rows(range.start, range.len()).into_owned())
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(v: usize) -> ReservoirParams {
        ReservoirParams {
            num_nodes: v,
            ..ReservoirParams::default()
        }
    }

    #[test]
    fn coupling_factor_reference_values() {
        let eps = coupling_factor(6.4e-9, 21e-9).unwrap();
        assert!((eps - 0.7373).abs() < 1e-4, "{eps}");
        assert_relative_eq!(coupling_factor(3e-9, 3e-9).unwrap(), (-1.0f64).exp());
        assert_eq!(coupling_factor(1.0, 1e-9).unwrap(), 0.0);
        assert!(coupling_factor(1.0, 1e3).unwrap() < 1.0);
    }

    #[test]
    fn coupling_factor_rejects_bad_times() {
        for (a, b) in [
            (0.0, 1.0),
            (1.0, 0.0),
            (-1.0, 1.0),
            (f64::NAN, 1.0),
            (1.0, f64::INFINITY),
        ] {
            assert!(matches!(
                coupling_factor(a, b),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn time_span_is_nodes_times_period() {
        let p = params(35);
        assert_relative_eq!(p.time_span(), 35.0 * 6.4e-9);
    }

    #[test]
    fn mask_generation() {
        let a = generate_mask(50, 9, MaskKind::Uniform).unwrap();
        let b = generate_mask(50, 9, MaskKind::Uniform).unwrap();
        assert_eq!(a, b);
        assert!(a.weights().iter().all(|w| (-1.0..=1.0).contains(w)));
        assert_ne!(a, generate_mask(50, 10, MaskKind::Uniform).unwrap());

        let bin = generate_mask(35, 4, MaskKind::Binary).unwrap();
        assert!(bin.weights().iter().all(|&w| w == 1.0 || w == -1.0));
        for seed in 0..64 {
            let tiny = generate_mask(2, seed, MaskKind::Binary).unwrap();
            assert_ne!(tiny.weights()[0], tiny.weights()[1]);
        }
        assert!(generate_mask(0, 0, MaskKind::Uniform).is_err());
    }

    #[test]
    fn mask_rejects_constant_and_non_finite() {
        assert!(Mask::new(vec![0.5, 0.5, 0.5]).is_err());
        assert!(Mask::new(vec![0.5, f64::NAN]).is_err());
        assert!(Mask::new(vec![]).is_err());
        assert!(Mask::new(vec![0.3]).is_ok());
    }

    #[test]
    fn zero_input_zero_state_stays_zero() {
        let p = params(4);
        let mask = generate_mask(4, 1, MaskKind::Uniform).unwrap();
        let mut noise = NoiseSource::for_params(&p);
        let (s, row) = step(&ReservoirState::zeros(4), 0.0, &mask, &p, &mut noise).unwrap();
        assert!(row.iter().all(|&x| x == 0.0));
        assert_eq!(s.last_sine, 0.0);
    }

    #[test]
    fn step_errors() {
        let p = params(3);
        let mask = generate_mask(4, 1, MaskKind::Uniform).unwrap();
        let mut noise = NoiseSource::for_params(&p);
        let zero = ReservoirState::zeros(3);
        assert!(matches!(
            step(&zero, 0.1, &mask, &p, &mut noise),
            Err(Error::Dimension { .. })
        ));
        let mask = generate_mask(3, 1, MaskKind::Uniform).unwrap();
        assert!(matches!(
            step(&zero, f64::NAN, &mask, &p, &mut noise),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn two_node_hand_evaluation() {
        let p = ReservoirParams {
            num_nodes: 2,
            alpha: 0.7,
            beta: 1.0,
            gain_c: 1.0,
            ..ReservoirParams::default()
        };
        let eps = p.coupling_factor().unwrap();
        let mask = Mask::new(vec![1.0, -1.0]).unwrap();
        let mut noise = NoiseSource::for_params(&p);
        let (s1, r1) = step(&ReservoirState::zeros(2), 0.3, &mask, &p, &mut noise).unwrap();
        let a = 0.3f64.sin();
        let b = (-0.3f64).sin();
        assert!((r1[0] - (1.0 - eps) * a).abs() < 1e-12);
        assert!((r1[1] - (eps * a + (1.0 - eps) * b)).abs() < 1e-12);
        assert!((s1.last_sine - b).abs() < 1e-15);

        // second step: node 0 couples to node 1 of the first step
        let (_, r2) = step(&s1, 0.3, &mask, &p, &mut noise).unwrap();
        let c = (0.3 + 0.7 * r1[0]).sin();
        let d = (-0.3 + 0.7 * r1[1]).sin();
        assert!((r2[0] - (eps * b + (1.0 - eps) * c)).abs() < 1e-12);
        assert!((r2[1] - (eps * c + (1.0 - eps) * d)).abs() < 1e-12);
    }

    #[test]
    fn full_filter_accumulates_history() {
        let p = ReservoirParams {
            num_nodes: 3,
            coupling: CouplingMode::FullFilter,
            ..ReservoirParams::default()
        };
        let eps = p.coupling_factor().unwrap();
        let mask = Mask::new(vec![1.0, 0.0, 0.0]).unwrap();
        let mut noise = NoiseSource::for_params(&p);
        let (_, row) = step(&ReservoirState::zeros(3), 0.5, &mask, &p, &mut noise).unwrap();
        let s0 = (1.0 - eps) * 0.5f64.sin();
        assert!((row[0] - s0).abs() < 1e-15);
        assert!((row[1] - eps * s0).abs() < 1e-15);
        assert!((row[2] - eps * eps * s0).abs() < 1e-15);
    }

    #[test]
    fn run_shape_bias_and_washout_suffix() {
        let p = params(5);
        let mask = generate_mask(5, 3, MaskKind::Uniform).unwrap();
        let inputs: Vec<f64> = (0..120)
            .map(|k| (k as f64 * 0.37).sin() * 0.25 + 0.25)
            .collect();
        let full = run(&inputs, &mask, &p, 0).unwrap();
        let cut = run(&inputs, &mask, &p, 50).unwrap();
        assert_eq!((full.nrows(), full.ncols()), (120, 6));
        assert_eq!(cut, full.rows(50..120));
        assert!((0..120).all(|i| full.get(i, 5) == 1.0));
        assert!(run(&inputs[..50], &mask, &p, 50).is_err());
    }

    #[test]
    fn zero_inputs_give_zero_states() {
        let p = params(7);
        let mask = generate_mask(7, 3, MaskKind::Binary).unwrap();
        let states = run(&[0.0; 30], &mask, &p, 0).unwrap();
        for i in 0..30 {
            assert!((0..7).all(|j| states.get(i, j) == 0.0));
            assert_eq!(states.get(i, 7), 1.0);
        }
    }

    #[test]
    fn noise_is_seeded() {
        let p = ReservoirParams {
            num_nodes: 6,
            noise_sigma: 0.05,
            seed: 11,
            ..ReservoirParams::default()
        };
        let mask = generate_mask(6, 3, MaskKind::Uniform).unwrap();
        let inputs = vec![0.2; 40];
        let a = run(&inputs, &mask, &p, 0).unwrap();
        assert_eq!(a, run(&inputs, &mask, &p, 0).unwrap());
        let other = ReservoirParams {
            seed: 12,
            ..p.clone()
        };
        assert_ne!(a, run(&inputs, &mask, &other, 0).unwrap());
    }

    #[test]
    fn params_validation() {
        assert!(params(0).validate().is_err());
        assert!(ReservoirParams {
            noise_sigma: -1.0,
            ..params(3)
        }
        .validate()
        .is_err());
        assert!(ReservoirParams {
            alpha: f64::NAN,
            ..params(3)
        }
        .validate()
        .is_err());
        assert!(ReservoirParams {
            bandwidth_time: 0.0,
            ..params(3)
        }
        .validate()
        .is_err());
        assert!(params(3).validate().is_ok());
    }
}
