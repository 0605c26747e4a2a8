//! Physics-informed training of the spline model.
//!
//! The composite objective is
//!
//! ```text
//! L = w_data * MSE(predict, targets)
//!   + w_mono * mean_j relu(-slope_j)^2
//!   + w_limit * mean_i relu(c_i - bound)^2
//!   + w_flat * mean_{j in tail} slope_j^2
//! ```
//!
//! where the tail holds the segments whose left knot exceeds
//! `flat_threshold_fraction * tau_max`. Gradients are assembled
//! analytically from the hat-function basis weights, and optimization is
//! full-batch adaptive-moment descent, so a fixed seed and config give a
//! bit-identical trajectory.

use crate::error::{Result, SlekanError};
use crate::sle::{self, SleParams};
use crate::spline::{basis_weights, SplineMode, SplineModel};

/// Loading path of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeformationMode {
    Uniaxial,
    Biaxial,
    Planar,
    Synthetic,
}

impl DeformationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeformationMode::Uniaxial => "uniaxial",
            DeformationMode::Biaxial => "biaxial",
            DeformationMode::Planar => "planar",
            DeformationMode::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniaxial" => Some(DeformationMode::Uniaxial),
            "biaxial" => Some(DeformationMode::Biaxial),
            "planar" => Some(DeformationMode::Planar),
            "synthetic" => Some(DeformationMode::Synthetic),
            _ => None,
        }
    }
}

/// Paired samples: stress/strain in synthetic mode, stretch/stress in
/// experimental mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    mode_tag: DeformationMode,
}

impl Dataset {
    pub fn new(inputs: Vec<f64>, targets: Vec<f64>, mode_tag: DeformationMode) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(SlekanError::domain(format!(
                "inputs ({}) and targets ({}) differ in length",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.len() < 2 {
            return Err(SlekanError::domain(format!(
                "dataset needs at least 2 samples, got {}",
                inputs.len()
            )));
        }
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(SlekanError::domain("dataset contains non-finite entries"));
        }
        Ok(Dataset {
            inputs,
            targets,
            mode_tag,
        })
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn mode_tag(&self) -> DeformationMode {
        self.mode_tag
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Weights of the four objective terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w_data: f64,
    pub w_mono: f64,
    pub w_limit: f64,
    pub w_flat: f64,
    pub flat_threshold_fraction: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_data: 1.0,
            w_mono: 10.0,
            w_limit: 10.0,
            w_flat: 0.01,
            flat_threshold_fraction: 0.7,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("w_data", self.w_data),
            ("w_mono", self.w_mono),
            ("w_limit", self.w_limit),
            ("w_flat", self.w_flat),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(SlekanError::domain(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.w_data <= 0.0 {
            return Err(SlekanError::domain("w_data must be positive"));
        }
        if !(0.0..1.0).contains(&self.flat_threshold_fraction)
            || self.flat_threshold_fraction <= 0.0
        {
            return Err(SlekanError::domain(format!(
                "flat_threshold_fraction must lie in (0, 1), got {}",
                self.flat_threshold_fraction
            )));
        }
        Ok(())
    }
}

/// Optimizer settings; identical config and data give a bit-identical
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub weights: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            iterations: 5000,
            seed: 0,
            weights: LossWeights::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(SlekanError::domain(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        self.weights.validate()
    }
}

/// Fit quality summary. `r_squared` is `-inf` when the targets are
/// constant and the predictions are not ("undefined" in reports).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMetrics {
    pub mae: f64,
    pub rmse: f64,
    pub r_squared: f64,
}

/// Noise-free synthetic samples: a uniform stress grid on `[lo, hi]` with
/// strains from the analytic law.
pub fn generate_synthetic(
    params: &SleParams,
    n_samples: usize,
    lo: f64,
    hi: f64,
) -> Result<Dataset> {
    if n_samples < 2 {
        return Err(SlekanError::domain(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(SlekanError::domain(format!(
            "invalid stress range [{lo}, {hi}]"
        )));
    }
    let mut inputs = Vec::with_capacity(n_samples);
    let mut targets = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let tau = lo + (hi - lo) * i as f64 / (n_samples - 1) as f64;
        inputs.push(tau);
        targets.push(sle::strain_from_stress(params, tau)?);
    }
    Dataset::new(inputs, targets, DeformationMode::Synthetic)
}

/// Composite loss and its exact gradient with respect to the coefficients.
pub fn composite_loss(
    model: &SplineModel,
    data: &Dataset,
    strain_bound: f64,
    weights: &LossWeights,
) -> Result<(f64, Vec<f64>)> {
    weights.validate()?;
    if data.is_empty() {
        return Err(SlekanError::domain("empty dataset"));
    }
    let grid = model.grid();
    let coeffs = model.coefficients();
    let n_knots = coeffs.len();
    let n_seg = n_knots - 1;
    let h = grid.spacing();
    let n = data.len() as f64;

    let mut loss = 0.0;
    let mut grad = vec![0.0; n_knots];

    // Data fidelity.
    let mut sse = 0.0;
    for (&tau, &target) in data.inputs().iter().zip(data.targets()) {
        let pred = model.predict(tau)?;
        let err = pred - target;
        sse += err * err;
        let sign = tau.signum();
        for (i, w) in basis_weights(grid, tau.abs()) {
            grad[i] += weights.w_data * 2.0 / n * err * sign * w;
        }
    }
    loss += weights.w_data * sse / n;

    // Segment penalties.
    let threshold = weights.flat_threshold_fraction * grid.tau_max();
    let mut mono = 0.0;
    let mut flat = 0.0;
    let mut flat_grad = vec![0.0; n_knots];
    let mut n_flat = 0usize;
    for j in 0..n_seg {
        let slope = (coeffs[j + 1] - coeffs[j]) / h;
        let neg = (-slope).max(0.0);
        mono += neg * neg;
        if neg > 0.0 {
            let d = weights.w_mono * 2.0 * neg / (n_seg as f64 * h);
            grad[j] += d;
            grad[j + 1] -= d;
        }
        if grid.knot(j) > threshold {
            n_flat += 1;
            flat += slope * slope;
            let d = 2.0 * slope / h;
            flat_grad[j] -= d;
            flat_grad[j + 1] += d;
        }
    }
    loss += weights.w_mono * mono / n_seg as f64;
    if n_flat > 0 {
        loss += weights.w_flat * flat / n_flat as f64;
        for (g, fg) in grad.iter_mut().zip(&flat_grad) {
            *g += weights.w_flat * fg / n_flat as f64;
        }
    }

    // Strain-limit violation.
    let mut limit = 0.0;
    for (i, &c) in coeffs.iter().enumerate() {
        let over = (c - strain_bound).max(0.0);
        limit += over * over;
        if over > 0.0 {
            grad[i] += weights.w_limit * 2.0 * over / n_knots as f64;
        }
    }
    loss += weights.w_limit * limit / n_knots as f64;

    Ok((loss, grad))
}

/// Adaptive-moment optimizer state (decay 0.9 / 0.999, stabilizer 1e-8).
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// One bias-corrected update; returns the parameter delta.
    pub fn step(&mut self, gradient: &[f64], lr: f64) -> Result<Vec<f64>> {
        if gradient.len() != self.m.len() {
            return Err(SlekanError::domain(format!(
                "gradient length {} does not match state dimension {}",
                gradient.len(),
                self.m.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        let mut delta = Vec::with_capacity(gradient.len());
        for ((m, v), &g) in self.m.iter_mut().zip(self.v.iter_mut()).zip(gradient) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            delta.push(-lr * m_hat / (v_hat.sqrt() + ADAM_EPS));
        }
        Ok(delta)
    }
}

/// Runs full-batch training and returns the final model plus the loss
/// history (one pre-step value per iteration).
///
/// Constitutive models keep their origin coefficient pinned to zero every
/// step and are projected onto the feasible set after the final step;
/// residual models are returned unprojected.
pub fn train(
    initial: &SplineModel,
    data: &Dataset,
    strain_bound: f64,
    config: &TrainConfig,
) -> Result<(SplineModel, Vec<f64>)> {
    config.validate()?;
    let mut model = initial.clone();
    let constitutive = model.mode() == SplineMode::Constitutive;
    let mut history = Vec::with_capacity(config.iterations);
    let mut adam = AdamState::new(model.coefficients().len());

    for _ in 0..config.iterations {
        let (loss, mut grad) = composite_loss(&model, data, strain_bound, &config.weights)?;
        history.push(loss);
        if constitutive {
            grad[0] = 0.0;
        }
        let delta = adam.step(&grad, config.learning_rate)?;
        let coeffs = model.coefficients_mut();
        for (c, d) in coeffs.iter_mut().zip(&delta) {
            *c += d;
        }
        if constitutive {
            coeffs[0] = 0.0;
        }
    }

    let model = if constitutive {
        model.project_constraints(strain_bound)?
    } else {
        model
    };
    Ok((model, history))
}

/// MAE, RMSE, and the coefficient of determination.
pub fn metrics(predictions: &[f64], targets: &[f64]) -> Result<FitMetrics> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(SlekanError::domain(format!(
            "metrics need equal nonzero lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    let n = predictions.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        let e = p - t;
        abs_sum += e.abs();
        sq_sum += e * e;
    }
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean) * (t - mean)).sum();
    let r_squared = if ss_tot == 0.0 {
        if sq_sum == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - sq_sum / ss_tot
    };
    Ok(FitMetrics {
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        r_squared,
    })
}

/// The linear-elastic ramp used to initialize constitutive training:
/// `c_i = min(knot_i / E, 0.9 * strain_bound)` with `E = 1`, feasible
/// under both penalty terms.
pub fn initial_constitutive_model(
    grid: crate::spline::KnotGrid,
    strain_bound: f64,
) -> Result<SplineModel> {
    let coeffs: Vec<f64> = (0..grid.n_knots())
        .map(|i| grid.knot(i).min(0.9 * strain_bound))
        .collect();
    SplineModel::new(grid, coeffs, SplineMode::Constitutive)
}
