//! Piecewise-linear spline on a uniform stress-magnitude grid, with the
//! sign-magnitude decomposition `eps(tau) = sign(tau) * g(|tau|)`.
//!
//! Coefficients are the function values at the knots; evaluation is linear
//! interpolation between the bracketing knots and clamps to the last
//! coefficient beyond the grid, so predictions stay bounded under
//! arbitrary extrapolation. Constitutive-mode models can be projected onto
//! the feasible set (zero at the origin, monotone, bounded by the strain
//! limit) with a cumulative-max repair.

use std::fmt::Write as _;

use crate::error::{Result, SlekanError};

/// Uniform knot grid over `[0, tau_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnotGrid {
    tau_max: f64,
    n_knots: usize,
}

impl KnotGrid {
    pub fn new(tau_max: f64, n_knots: usize) -> Result<Self> {
        if !tau_max.is_finite() || tau_max <= 0.0 {
            return Err(SlekanError::domain(format!(
                "tau_max must be finite and positive, got {tau_max}"
            )));
        }
        if n_knots < 2 {
            return Err(SlekanError::domain(format!(
                "grid needs at least 2 knots, got {n_knots}"
            )));
        }
        Ok(KnotGrid { tau_max, n_knots })
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn n_knots(&self) -> usize {
        self.n_knots
    }

    /// Location of knot `i`; `knot(0) == 0` and `knot(n-1) == tau_max` exactly.
    pub fn knot(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_knots);
        self.tau_max * (i as f64 / (self.n_knots - 1) as f64)
    }

    /// Uniform knot spacing.
    pub fn spacing(&self) -> f64 {
        self.tau_max / (self.n_knots - 1) as f64
    }

    /// Index of the segment containing `s`, clamped to the last segment.
    fn segment_of(&self, s: f64) -> usize {
        let idx = (s / self.spacing()).floor() as usize;
        idx.min(self.n_knots - 2)
    }
}

/// Which constraint set applies to a spline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplineMode {
    /// Strain envelope g(|tau|): zero at the origin, monotone, bounded.
    Constitutive,
    /// Stress residual correction: coefficients are unconstrained.
    Residual,
}

impl SplineMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplineMode::Constitutive => "constitutive",
            SplineMode::Residual => "residual",
        }
    }
}

/// A spline model: grid, per-knot coefficients, and constraint mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    grid: KnotGrid,
    coefficients: Vec<f64>,
    mode: SplineMode,
}

impl SplineModel {
    pub fn new(grid: KnotGrid, coefficients: Vec<f64>, mode: SplineMode) -> Result<Self> {
        if coefficients.len() != grid.n_knots() {
            return Err(SlekanError::domain(format!(
                "coefficient count {} does not match knot count {}",
                coefficients.len(),
                grid.n_knots()
            )));
        }
        if let Some(c) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(SlekanError::domain(format!("non-finite coefficient {c}")));
        }
        if mode == SplineMode::Constitutive && coefficients[0] != 0.0 {
            return Err(SlekanError::domain(format!(
                "constitutive splines must have zero strain at zero stress, got c[0] = {}",
                coefficients[0]
            )));
        }
        Ok(SplineModel {
            grid,
            coefficients,
            mode,
        })
    }

    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn mode(&self) -> SplineMode {
        self.mode
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    /// Evaluates the magnitude function at `s >= 0`; constant `c[n-1]`
    /// beyond `tau_max`.
    pub fn eval_magnitude(&self, s: f64) -> Result<f64> {
        // Negated form so NaN is rejected along with negative inputs.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(s >= 0.0) {
            return Err(SlekanError::domain(format!(
                "magnitude evaluation needs s >= 0, got {s}"
            )));
        }
        if s >= self.grid.tau_max() {
            return Ok(*self.coefficients.last().unwrap());
        }
        let i = self.grid.segment_of(s);
        let t = (s - self.grid.knot(i)) / self.grid.spacing();
        Ok((1.0 - t) * self.coefficients[i] + t * self.coefficients[i + 1])
    }

    /// Signed prediction `sign(tau) * g(|tau|)`; exactly odd in `tau`.
    pub fn predict(&self, tau: f64) -> Result<f64> {
        if !tau.is_finite() {
            return Err(SlekanError::domain(format!(
                "stress must be finite, got {tau}"
            )));
        }
        // signum is +1 for +0.0 and -1 for -0.0, which keeps the
        // prediction exactly odd at the origin as well.
        Ok(tau.signum() * self.eval_magnitude(tau.abs())?)
    }

    /// Piecewise-constant slope of the segment containing `|tau|`; zero
    /// beyond `tau_max`. At an interior knot the right segment wins.
    pub fn local_slope(&self, tau: f64) -> f64 {
        let s = tau.abs();
        if s >= self.grid.tau_max() {
            return 0.0;
        }
        let i = self.grid.segment_of(s);
        (self.coefficients[i + 1] - self.coefficients[i]) / self.grid.spacing()
    }

    /// Projects a constitutive spline onto its feasible set: pins the
    /// origin to zero, clamps every coefficient into `[0, strain_bound]`,
    /// and repairs monotonicity with a running maximum. Idempotent.
    pub fn project_constraints(&self, strain_bound: f64) -> Result<SplineModel> {
        if self.mode != SplineMode::Constitutive {
            return Err(SlekanError::Mode(
                "constraint projection applies only to constitutive splines".into(),
            ));
        }
        if !strain_bound.is_finite() || strain_bound <= 0.0 {
            return Err(SlekanError::domain(format!(
                "strain bound must be finite and positive, got {strain_bound}"
            )));
        }
        let mut coeffs = self.coefficients.clone();
        coeffs[0] = 0.0;
        let mut running = 0.0_f64;
        for c in coeffs.iter_mut() {
            let clamped = c.clamp(0.0, strain_bound);
            running = running.max(clamped);
            *c = running;
        }
        SplineModel::new(self.grid, coeffs, SplineMode::Constitutive)
    }

    /// Serializes to the persistence format: ordered `key: value` lines
    /// (mode, tau_max, n_knots) followed by the comma-separated
    /// coefficients. Numbers are written with the shortest representation
    /// that parses back to the same bits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "mode: {}", self.mode.as_str()).unwrap();
        writeln!(out, "tau_max: {}", self.grid.tau_max()).unwrap();
        writeln!(out, "n_knots: {}", self.grid.n_knots()).unwrap();
        let coeffs: Vec<String> = self.coefficients.iter().map(|c| c.to_string()).collect();
        writeln!(out, "coefficients: {}", coeffs.join(",")).unwrap();
        out
    }

    /// Parses the persistence format written by [`SplineModel::to_text`].
    pub fn from_text(text: &str) -> Result<SplineModel> {
        let parse = |line: usize, key: &str, got: Option<&str>| -> Result<String> {
            let got = got.ok_or_else(|| SlekanError::Parse {
                path: "<spline>".into(),
                line,
                column: 1,
                message: format!("missing `{key}` line"),
            })?;
            let prefix = format!("{key}: ");
            got.strip_prefix(&prefix)
                .map(str::to_owned)
                .ok_or_else(|| SlekanError::Parse {
                    path: "<spline>".into(),
                    line,
                    column: 1,
                    message: format!("expected `{key}: ...`, got `{got}`"),
                })
        };
        let mut lines = text.lines();
        let mode = match parse(1, "mode", lines.next())?.as_str() {
            "constitutive" => SplineMode::Constitutive,
            "residual" => SplineMode::Residual,
            other => {
                return Err(SlekanError::Parse {
                    path: "<spline>".into(),
                    line: 1,
                    column: 7,
                    message: format!("unknown mode `{other}`"),
                })
            }
        };
        let tau_max: f64 =
            parse(2, "tau_max", lines.next())?
                .parse()
                .map_err(|e| SlekanError::Parse {
                    path: "<spline>".into(),
                    line: 2,
                    column: 10,
                    message: format!("bad tau_max: {e}"),
                })?;
        let n_knots: usize =
            parse(3, "n_knots", lines.next())?
                .parse()
                .map_err(|e| SlekanError::Parse {
                    path: "<spline>".into(),
                    line: 3,
                    column: 10,
                    message: format!("bad n_knots: {e}"),
                })?;
        let coeff_text = parse(4, "coefficients", lines.next())?;
        let mut coefficients = Vec::with_capacity(n_knots);
        for (k, field) in coeff_text.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| SlekanError::Parse {
                path: "<spline>".into(),
                line: 4,
                column: k + 1,
                message: format!("bad coefficient `{field}`: {e}"),
            })?;
            coefficients.push(v);
        }
        SplineModel::new(KnotGrid::new(tau_max, n_knots)?, coefficients, mode)
    }
}

/// Hat-function weights of the (at most two) knots bracketing `s`.
///
/// The weights sum to one and reproduce [`SplineModel::eval_magnitude`] as
/// `sum(weight * c[index])`; they are the gradient of the evaluation with
/// respect to the coefficients. `s` past `tau_max` attributes entirely to
/// the last knot.
pub fn basis_weights(grid: &KnotGrid, s: f64) -> Vec<(usize, f64)> {
    debug_assert!(s >= 0.0);
    if s >= grid.tau_max() {
        return vec![(grid.n_knots() - 1, 1.0)];
    }
    let i = grid.segment_of(s);
    let t = (s - grid.knot(i)) / grid.spacing();
    if t == 0.0 {
        vec![(i, 1.0)]
    } else {
        vec![(i, 1.0 - t), (i + 1, t)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(coeffs: &[f64], mode: SplineMode) -> SplineModel {
        let grid = KnotGrid::new((coeffs.len() - 1) as f64, coeffs.len()).unwrap();
        SplineModel::new(grid, coeffs.to_vec(), mode).unwrap()
    }

    #[test]
    fn eval_examples() {
        let m = model(&[0.0, 0.5, 0.8], SplineMode::Constitutive);
        assert_eq!(m.eval_magnitude(0.5).unwrap(), 0.25);
        assert!((m.eval_magnitude(1.5).unwrap() - 0.65).abs() < 1e-15);
        assert_eq!(m.eval_magnitude(3.0).unwrap(), 0.8);
        assert!(m.eval_magnitude(-0.1).is_err());
    }

    #[test]
    fn predict_examples() {
        let m = model(&[0.0, 0.5, 0.8], SplineMode::Constitutive);
        assert_eq!(m.predict(-0.5).unwrap(), -0.25);
        assert_eq!(m.predict(0.0).unwrap(), 0.0);
        assert!((m.predict(1.5).unwrap() - 0.65).abs() < 1e-15);
        assert!(m.predict(f64::NAN).is_err());
    }

    #[test]
    fn local_slope_examples() {
        let m = model(&[0.0, 0.5, 0.8], SplineMode::Constitutive);
        assert_eq!(m.local_slope(0.5), 0.5);
        assert!((m.local_slope(1.5) - 0.3).abs() < 1e-15);
        assert_eq!(m.local_slope(5.0), 0.0);
        // Interior knot takes the right segment; tau_max reports zero.
        assert!((m.local_slope(1.0) - 0.3).abs() < 1e-15);
        assert_eq!(m.local_slope(2.0), 0.0);
    }

    #[test]
    fn basis_weight_examples() {
        let grid = KnotGrid::new(2.0, 3).unwrap();
        assert_eq!(basis_weights(&grid, 0.5), vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(basis_weights(&grid, 0.0), vec![(0, 1.0)]);
        assert_eq!(basis_weights(&grid, 3.0), vec![(2, 1.0)]);
    }

    #[test]
    fn projection_examples() {
        let m = model(&[0.0, 0.6, 0.4], SplineMode::Constitutive);
        assert_eq!(
            m.project_constraints(1.0).unwrap().coefficients(),
            &[0.0, 0.6, 0.6]
        );
        let m = model(&[0.0, 0.5, 1.5], SplineMode::Constitutive);
        assert_eq!(
            m.project_constraints(1.0).unwrap().coefficients(),
            &[0.0, 0.5, 1.0]
        );
        let m = model(&[0.0, 0.2, 0.4], SplineMode::Constitutive);
        assert_eq!(
            m.project_constraints(1.0).unwrap().coefficients(),
            &[0.0, 0.2, 0.4]
        );
        let m = model(&[0.1, 0.2], SplineMode::Residual);
        assert!(matches!(
            m.project_constraints(1.0),
            Err(SlekanError::Mode(_))
        ));
    }

    #[test]
    fn constitutive_requires_zero_origin() {
        let grid = KnotGrid::new(1.0, 2).unwrap();
        assert!(SplineModel::new(grid, vec![0.1, 0.2], SplineMode::Constitutive).is_err());
        assert!(SplineModel::new(grid, vec![0.1, 0.2], SplineMode::Residual).is_ok());
    }

    #[test]
    fn continuity_at_knots() {
        let m = model(&[0.0, 0.3, 0.45, 0.5], SplineMode::Constitutive);
        for i in 1..3 {
            let knot = m.grid().knot(i);
            let left = m.eval_magnitude(knot - 1e-12).unwrap();
            let right = m.eval_magnitude(knot).unwrap();
            assert!((left - right).abs() < 1e-11);
        }
    }

    #[test]
    fn basis_weights_reproduce_eval_and_gradient() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let grid = KnotGrid::new(3.0, 7).unwrap();
        for _ in 0..200 {
            let coeffs: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = SplineModel::new(grid, coeffs.clone(), SplineMode::Residual).unwrap();
            let s = rng.random_range(0.0..4.0);
            let weights = basis_weights(&grid, s);
            let recon: f64 = weights.iter().map(|&(i, w)| w * coeffs[i]).sum();
            assert!((recon - m.eval_magnitude(s).unwrap()).abs() < 1e-12);
            let wsum: f64 = weights.iter().map(|&(_, w)| w).sum();
            assert!((wsum - 1.0).abs() < 1e-12);

            // Directional derivative against central finite differences.
            let dir: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = 1e-6;
            let shift = |sign: f64| {
                let shifted: Vec<f64> = coeffs
                    .iter()
                    .zip(&dir)
                    .map(|(c, d)| c + sign * h * d)
                    .collect();
                SplineModel::new(grid, shifted, SplineMode::Residual)
                    .unwrap()
                    .eval_magnitude(s)
                    .unwrap()
            };
            let fd = (shift(1.0) - shift(-1.0)) / (2.0 * h);
            let analytic: f64 = weights.iter().map(|&(i, w)| w * dir[i]).sum();
            let denom = analytic.abs().max(1e-9);
            assert!((fd - analytic).abs() / denom < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn predict_is_exactly_odd(
            tau in -100.0f64..100.0,
            coeffs in proptest::collection::vec(-2.0f64..2.0, 5),
        ) {
            let grid = KnotGrid::new(2.5, 5).unwrap();
            let m = SplineModel::new(grid, coeffs, SplineMode::Residual).unwrap();
            let plus = m.predict(tau).unwrap();
            let minus = m.predict(-tau).unwrap();
            prop_assert_eq!(minus.to_bits(), (-plus).to_bits());
        }

        #[test]
        fn projection_is_idempotent_and_feasible(
            mut coeffs in proptest::collection::vec(-3.0f64..3.0, 6),
            bound in 0.1f64..2.0,
        ) {
            coeffs[0] = 0.0;
            let grid = KnotGrid::new(5.0, 6).unwrap();
            let m = SplineModel::new(grid, coeffs, SplineMode::Constitutive).unwrap();
            let once = m.project_constraints(bound).unwrap();
            let twice = once.project_constraints(bound).unwrap();
            prop_assert_eq!(once.coefficients(), twice.coefficients());
            for w in once.coefficients().windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            prop_assert!(once.coefficients().iter().all(|&c| (0.0..=bound).contains(&c)));
            for i in 0..5 {
                let mid = once.grid().knot(i) + 0.5 * once.grid().spacing();
                prop_assert!(once.local_slope(mid) >= 0.0);
            }
        }

        #[test]
        fn text_round_trip_is_lossless(
            coeffs in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 4),
            tau_max in 0.1f64..1e6,
        ) {
            let grid = KnotGrid::new(tau_max, 4).unwrap();
            let m = SplineModel::new(grid, coeffs, SplineMode::Residual).unwrap();
            let back = SplineModel::from_text(&m.to_text()).unwrap();
            prop_assert_eq!(&m, &back);
        }
    }
}
