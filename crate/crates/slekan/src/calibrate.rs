//! Calibration of the strain-limiting parameters from stretch-stress data.
//!
//! The fit minimizes the mean Huber loss of the stress residuals
//! `tau_exp - tau_model(lambda)` over `(alpha, E, beta)`, searched in
//! log-parameter space by a multi-start Nelder-Mead simplex. Candidates
//! whose strain limit is reached by the data are charged a large finite
//! penalty proportional to the violation, which keeps the simplex moving
//! near the feasibility boundary while guaranteeing the returned optimum
//! is feasible.

use crate::error::{Result, SlekanError};
use crate::sle::{self, SleParams};
use crate::train::{self, Dataset, FitMetrics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Logarithmic strain of a stretch.
pub fn log_strain(lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(SlekanError::domain(format!(
            "stretch must be finite and positive, got {lambda}"
        )));
    }
    Ok(lambda.ln())
}

/// Model stress at a stretch: the constitutive law inverted at `ln(lambda)`.
pub fn sle_stress_prediction(params: &SleParams, lambda: f64, tol: f64) -> Result<f64> {
    sle::stress_from_strain(params, log_strain(lambda)?, tol)
}

/// Per-parameter search box, `[lo, hi]` with `0 < lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && 0.0 < self.lo && self.lo < self.hi) {
            return Err(SlekanError::domain(format!(
                "{name} bounds must satisfy 0 < lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub alpha_bounds: Bounds,
    pub modulus_bounds: Bounds,
    pub beta_bounds: Bounds,
    /// Huber transition scale in stress units; `None` picks 10% of the
    /// data's maximum stress. `f64::INFINITY` disables robustification
    /// (plain squared loss).
    pub robust_scale: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub bisection_tol: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            alpha_bounds: Bounds { lo: 0.2, hi: 10.0 },
            modulus_bounds: Bounds {
                lo: 0.01,
                hi: 100.0,
            },
            beta_bounds: Bounds { lo: 0.01, hi: 10.0 },
            robust_scale: None,
            restarts: 8,
            seed: 0,
            bisection_tol: 1e-10,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        self.alpha_bounds.validate("alpha")?;
        self.modulus_bounds.validate("modulus")?;
        self.beta_bounds.validate("beta")?;
        if let Some(s) = self.robust_scale {
            if s.is_nan() || s <= 0.0 {
                return Err(SlekanError::domain(format!(
                    "robust_scale must be positive, got {s}"
                )));
            }
        }
        if self.restarts == 0 {
            return Err(SlekanError::domain("restarts must be at least 1"));
        }
        if !self.bisection_tol.is_finite() || self.bisection_tol <= 0.0 {
            return Err(SlekanError::domain(format!(
                "bisection_tol must be positive, got {}",
                self.bisection_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub params: SleParams,
    pub objective: f64,
    pub metrics: FitMetrics,
    pub feasible: bool,
}

/// Huber loss: quadratic inside `scale`, linear outside.
pub fn huber(residual: f64, scale: f64) -> f64 {
    let a = residual.abs();
    if a <= scale {
        0.5 * a * a
    } else {
        scale * (a - 0.5 * scale)
    }
}

/// Penalty floor charged to infeasible candidates; far above any
/// attainable feasible objective on laboratory-scale stresses.
const INFEASIBLE_PENALTY: f64 = 1e8;

struct Objective<'a> {
    strains: &'a [f64],
    stresses: &'a [f64],
    max_strain: f64,
    scale: f64,
    tol: f64,
}

impl Objective<'_> {
    /// `x` lives in (ln alpha, ln E, ln beta) space.
    fn eval(&self, x: [f64; 3]) -> f64 {
        let params = match SleParams::new(x[0].exp(), x[2].exp(), x[1].exp()) {
            Ok(p) => p,
            Err(_) => return INFEASIBLE_PENALTY,
        };
        let limit = params.strain_limit();
        let margin = (1.0 - 1e-9) * limit;
        if self.max_strain >= margin {
            // Large but finite, growing with the violation so the simplex
            // still sees a downhill direction back into feasibility.
            return INFEASIBLE_PENALTY * (1.0 + (self.max_strain - margin) / limit);
        }
        let mut total = 0.0;
        for (&eps, &tau_exp) in self.strains.iter().zip(self.stresses) {
            match sle::stress_from_strain(&params, eps, self.tol) {
                Ok(tau) => total += huber(tau_exp - tau, self.scale),
                Err(_) => return INFEASIBLE_PENALTY,
            }
        }
        total / self.strains.len() as f64
    }
}

/// Nelder-Mead simplex with box clamping in log-parameter space.
fn nelder_mead(
    objective: &Objective,
    start: [f64; 3],
    log_bounds: &[(f64, f64); 3],
    max_iters: usize,
) -> ([f64; 3], f64) {
    let clamp = |mut x: [f64; 3]| {
        for (v, &(lo, hi)) in x.iter_mut().zip(log_bounds) {
            *v = v.clamp(lo, hi);
        }
        x
    };

    // Offset initial simplex: vertex i+1 steps 5% of the box along axis i.
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    let base = clamp(start);
    simplex.push((base, objective.eval(base)));
    for d in 0..3 {
        let (lo, hi) = log_bounds[d];
        let mut v = base;
        let step = 0.05 * (hi - lo);
        v[d] = if v[d] + step <= hi {
            v[d] + step
        } else {
            v[d] - step
        };
        let v = clamp(v);
        simplex.push((v, objective.eval(v)));
    }

    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[3].1 - simplex[0].1;
        let diameter: f64 = (0..3)
            .map(|d| {
                simplex
                    .iter()
                    .map(|(v, _)| v[d])
                    .fold(f64::NEG_INFINITY, f64::max)
                    - simplex
                        .iter()
                        .map(|(v, _)| v[d])
                        .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        if spread < 1e-14 * (1.0 + simplex[0].1.abs()) && diameter < 1e-10 {
            break;
        }

        let centroid = {
            let mut c = [0.0; 3];
            for (v, _) in &simplex[..3] {
                for d in 0..3 {
                    c[d] += v[d] / 3.0;
                }
            }
            c
        };
        let worst = simplex[3];
        let reflect = clamp([
            centroid[0] + (centroid[0] - worst.0[0]),
            centroid[1] + (centroid[1] - worst.0[1]),
            centroid[2] + (centroid[2] - worst.0[2]),
        ]);
        let f_reflect = objective.eval(reflect);

        if f_reflect < simplex[0].1 {
            let expand = clamp([
                centroid[0] + 2.0 * (centroid[0] - worst.0[0]),
                centroid[1] + 2.0 * (centroid[1] - worst.0[1]),
                centroid[2] + 2.0 * (centroid[2] - worst.0[2]),
            ]);
            let f_expand = objective.eval(expand);
            simplex[3] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
        } else if f_reflect < simplex[2].1 {
            simplex[3] = (reflect, f_reflect);
        } else {
            let outside = f_reflect < worst.1;
            let towards = if outside { reflect } else { worst.0 };
            let contract = clamp([
                centroid[0] + 0.5 * (towards[0] - centroid[0]),
                centroid[1] + 0.5 * (towards[1] - centroid[1]),
                centroid[2] + 0.5 * (towards[2] - centroid[2]),
            ]);
            let f_contract = objective.eval(contract);
            if f_contract < worst.1.min(f_reflect) {
                simplex[3] = (contract, f_contract);
            } else {
                // Shrink towards the best vertex.
                let best = simplex[0].0;
                for entry in &mut simplex[1..] {
                    for (coord, b) in entry.0.iter_mut().zip(best) {
                        *coord = b + 0.5 * (*coord - b);
                    }
                    entry.1 = objective.eval(entry.0);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Fits `(alpha, E, beta)` to stretch-stress data.
pub fn calibrate_sle(data: &Dataset, config: &CalibrationConfig) -> Result<CalibrationResult> {
    config.validate()?;
    if data.len() < 4 {
        return Err(SlekanError::domain(format!(
            "calibration needs at least 4 data points (3 parameters), got {}",
            data.len()
        )));
    }
    let mut strains = Vec::with_capacity(data.len());
    for &lambda in data.inputs() {
        strains.push(log_strain(lambda)?);
    }
    let stresses = data.targets();
    let max_stress = stresses.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if max_stress == 0.0 {
        return Err(SlekanError::domain("all data stresses are zero"));
    }
    let scale = config.robust_scale.unwrap_or(0.1 * max_stress);
    let max_strain = strains.iter().fold(0.0f64, |m, e| m.max(e.abs()));

    let objective = Objective {
        strains: &strains,
        stresses,
        max_strain,
        scale,
        tol: config.bisection_tol,
    };

    let log_bounds = [
        (config.alpha_bounds.lo.ln(), config.alpha_bounds.hi.ln()),
        (config.modulus_bounds.lo.ln(), config.modulus_bounds.hi.ln()),
        (config.beta_bounds.lo.ln(), config.beta_bounds.hi.ln()),
    ];

    // Latin-hypercube starts: each restart draws one point from a distinct
    // stratum per dimension, with per-dimension stratum permutations.
    let n = config.restarts;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut strata: Vec<Vec<usize>> = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        strata.push(perm);
    }
    let mut starts = Vec::with_capacity(n);
    #[allow(clippy::needless_range_loop)] // `r` indexes three parallel permutations
    for r in 0..n {
        let mut x = [0.0; 3];
        for (d, coord) in x.iter_mut().enumerate() {
            let (lo, hi) = log_bounds[d];
            let u = (strata[d][r] as f64 + rng.random_range(0.0..1.0)) / n as f64;
            *coord = lo + u * (hi - lo);
        }
        starts.push(x);
    }

    let mut best: Option<([f64; 3], f64)> = None;
    let mut diagnostics = String::new();
    for (r, &start) in starts.iter().enumerate() {
        let (x, f) = nelder_mead(&objective, start, &log_bounds, 500);
        if f >= INFEASIBLE_PENALTY {
            diagnostics.push_str(&format!(
                "restart {r}: infeasible optimum at alpha={:.4e} E={:.4e} beta={:.4e} (objective {f:.4e})\n",
                x[0].exp(),
                x[1].exp(),
                x[2].exp()
            ));
            continue;
        }
        // Strict comparison: ties go to the earlier restart.
        if best.is_none_or(|(_, fb)| f < fb) {
            best = Some((x, f));
        }
    }

    let (x, objective_value) = best.ok_or(SlekanError::CalibrationFailed { diagnostics })?;
    let params = SleParams::new(x[0].exp(), x[2].exp(), x[1].exp())?;
    let mut predictions = Vec::with_capacity(strains.len());
    for &eps in &strains {
        predictions.push(sle::stress_from_strain(&params, eps, config.bisection_tol)?);
    }
    let metrics = train::metrics(&predictions, stresses)?;
    Ok(CalibrationResult {
        params,
        objective: objective_value,
        metrics,
        feasible: true,
    })
}
