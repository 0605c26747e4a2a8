//! Strain-limiting elasticity in one dimension.
//!
//! The constitutive law maps stress to strain as
//!
//! ```text
//! eps(tau) = (tau / E) / (1 + (beta*|tau|)^alpha)^(1/alpha)
//! ```
//!
//! Strain is odd in the stress, bounded by `1/(E*beta)` for every finite
//! stress, and the tangent compliance `d eps / d tau` decays to zero as
//! the stress grows. The law is strictly monotone, so the stress belonging
//! to an admissible strain can be recovered by bisection.

use crate::error::{Result, SlekanError};

/// Exponent threshold above which `(beta*s)^alpha` would overflow an f64
/// and the saturation branch of the law is evaluated instead.
const LOG_OVERFLOW: f64 = 700.0;

/// Strains with magnitude at or beyond this fraction of the strain limit
/// are rejected by the inversion; the exact limit is reached only at
/// infinite stress.
const FEASIBILITY_MARGIN: f64 = 1.0 - 1e-12;

/// Material parameters of the strain-limiting law.
///
/// `gamma = E*beta` and the strain limit `1/gamma` are derived on demand
/// and never stored, so they cannot drift out of sync.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SleParams {
    alpha: f64,
    beta: f64,
    youngs_modulus: f64,
}

impl SleParams {
    /// Validates and builds a parameter triple. All three must be finite
    /// and strictly positive.
    pub fn new(alpha: f64, beta: f64, youngs_modulus: f64) -> Result<Self> {
        for (name, v) in [
            ("alpha", alpha),
            ("beta", beta),
            ("youngs_modulus", youngs_modulus),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(SlekanError::domain(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !(youngs_modulus * beta).is_finite() || (youngs_modulus * beta) <= 0.0 {
            return Err(SlekanError::domain(format!(
                "gamma = E*beta = {} is not finite and positive",
                youngs_modulus * beta
            )));
        }
        Ok(SleParams {
            alpha,
            beta,
            youngs_modulus,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn youngs_modulus(&self) -> f64 {
        self.youngs_modulus
    }

    /// Compound strain-limiting strength `gamma = E*beta`.
    pub fn gamma(&self) -> f64 {
        self.youngs_modulus * self.beta
    }

    /// Supremum of attainable strain magnitude, `1/(E*beta)`.
    pub fn strain_limit(&self) -> f64 {
        1.0 / self.gamma()
    }
}

fn check_finite_stress(tau: f64) -> Result<()> {
    if tau.is_finite() {
        Ok(())
    } else {
        Err(SlekanError::domain(format!(
            "stress must be finite, got {tau}"
        )))
    }
}

/// Strain magnitude for a nonnegative stress magnitude `s`.
///
/// For `beta*s <= 1` the law is evaluated directly with the denominator
/// written as `exp(log1p((beta*s)^alpha) / alpha)`. For `beta*s > 1` it is
/// rearranged around the saturation value,
/// `1/(E*beta) * exp(-log1p((beta*s)^(-alpha)) / alpha)`, which keeps the
/// evaluation accurate to a few ulps near the strain limit and cannot
/// overflow no matter how large the exponent `alpha * ln(beta*s)` gets.
fn strain_magnitude(params: &SleParams, s: f64) -> f64 {
    debug_assert!(s >= 0.0);
    if s == 0.0 {
        return 0.0;
    }
    let t = params.alpha * (params.beta * s).ln();
    if t > 0.0 {
        // (beta*s)^(-alpha) = exp(-t) stays representable for any t > 0.
        let inv = (-t).exp();
        let shape = (-inv.ln_1p() / params.alpha).exp();
        // Keep the bound strict even when exp(-t) underflows to zero.
        let shape = shape.min(1.0 - f64::EPSILON);
        params.strain_limit() * shape
    } else {
        let pow = t.exp();
        let denom = (pow.ln_1p() / params.alpha).exp();
        s / (params.youngs_modulus * denom)
    }
}

/// Evaluates the constitutive law: signed strain for a finite stress.
pub fn strain_from_stress(params: &SleParams, tau: f64) -> Result<f64> {
    check_finite_stress(tau)?;
    if tau == 0.0 {
        return Ok(0.0);
    }
    // Sign applied after the magnitude evaluation so tension/compression
    // results are bit-for-bit symmetric.
    Ok(tau.signum() * strain_magnitude(params, tau.abs()))
}

/// The strain bound `1/(E*beta)`.
pub fn strain_limit(params: &SleParams) -> f64 {
    params.strain_limit()
}

/// Tangent compliance `d eps / d tau = (1/E) * (1 + (beta*|tau|)^alpha)^(-1/alpha - 1)`.
///
/// Strictly positive for finite stress and strictly decreasing in `|tau|`.
pub fn tangent_compliance(params: &SleParams, tau: f64) -> Result<f64> {
    check_finite_stress(tau)?;
    let s = tau.abs();
    if s == 0.0 {
        return Ok(1.0 / params.youngs_modulus);
    }
    let exponent = -(1.0 + params.alpha) / params.alpha;
    let t = params.alpha * (params.beta * s).ln();
    let value = if t > LOG_OVERFLOW {
        // log1p((beta*s)^alpha) ~= t once the power overflows.
        (exponent * t).exp()
    } else {
        (exponent * t.exp().ln_1p()).exp()
    };
    Ok(value / params.youngs_modulus)
}

/// Inverts the law by bisection: finds `tau` whose strain matches `eps`.
///
/// `tol` bounds the width of the final stress bracket. Strains at or
/// beyond the feasibility margin of the strain limit are rejected because
/// the bracket would grow without bound.
pub fn stress_from_strain(params: &SleParams, eps: f64, tol: f64) -> Result<f64> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(SlekanError::domain(format!(
            "bisection tolerance must be positive, got {tol}"
        )));
    }
    if !eps.is_finite() {
        return Err(SlekanError::domain(format!(
            "strain must be finite, got {eps}"
        )));
    }
    let limit = params.strain_limit();
    let target = eps.abs();
    if target >= FEASIBILITY_MARGIN * limit {
        return Err(SlekanError::InfeasibleStrain { strain: eps, limit });
    }
    if target == 0.0 {
        return Ok(0.0);
    }

    // Grow the bracket from the characteristic stress 1/beta until it
    // encloses the target strain; monotonicity guarantees validity.
    let mut hi = 1.0 / params.beta;
    while strain_magnitude(params, hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Bracket already at float resolution; for very large stresses
            // the spacing of adjacent floats exceeds any absolute tol.
            break;
        }
        if strain_magnitude(params, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(eps.signum() * 0.5 * (lo + hi))
}
