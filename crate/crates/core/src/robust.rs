//! Robust signature kernel: every feature vector is rescaled degree-wise by a
//! per-sequence factor `θ` so that its squared norm becomes `ψ(‖Φ‖²)`, which
//! is bounded by `C (1 + 1/α)`.

use serde::{Deserialize, Serialize};

use crate::dp::{neumaier_sum, sig_kernel_levels, LevelValues};
use crate::error::{Error, Result};
use crate::sequence::Sequence;
use crate::static_kernel::StaticKernelSpec;

const ROOT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    /// Threshold below which norms are left untouched.
    pub c: f64,
    /// Decay exponent of the tail of `ψ`.
    pub alpha: f64,
}

impl Default for NormalizationParams {
    fn default() -> Self {
        NormalizationParams { c: 4.0, alpha: 1.0 }
    }
}

impl NormalizationParams {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        let p = NormalizationParams { c, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        // level 0 of every diagonal equals 1, so ψ must not drop below it
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(Error::invalid(
                "norm_c",
                format!("must be at least 1, got {}", self.c),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(
                "norm_alpha",
                format!("must be positive, got {}", self.alpha),
            ));
        }
        Ok(())
    }

    /// `sup ψ = C (1 + 1/α)`.
    pub fn bound(&self) -> f64 {
        self.c * (1.0 + 1.0 / self.alpha)
    }
}

/// `ψ(a) = a` for `a ≤ C`, else `C + C^{1+α} (C^{-α} - a^{-α}) / α`.
pub fn psi(a: f64, params: &NormalizationParams) -> f64 {
    let NormalizationParams { c, alpha } = *params;
    if a <= c {
        a
    } else {
        (c + c.powf(1.0 + alpha) * (c.powf(-alpha) - a.powf(-alpha)) / alpha).min(params.bound())
    }
}

/// Solves `Σ_m θ^{2m} a_m = ψ(Σ_m a_m)` for `θ ∈ [0, 1]` by bisection, where
/// `a_m` are the diagonal levels `k_m(x, x)`.
///
/// The left side is increasing in `θ`, equals `a_0 = 1 ≤ ψ` at 0 and
/// `Σ a_m ≥ ψ` at 1, so the bracket always holds a root. Bisection runs until
/// the interval stops shrinking in floating point.
pub fn normalization_root(diag: &LevelValues, params: &NormalizationParams) -> Result<f64> {
    params.validate()?;
    let a = diag.values();
    if let Some((level, &value)) = a.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
        return Err(Error::NegativeLevel { level, value });
    }
    let total = neumaier_sum(a.iter().copied());
    let target = psi(total, params);
    if a[1..].iter().all(|&v| v == 0.0) || target >= total {
        return Ok(1.0);
    }

    // same arithmetic as `robust_from_levels` with θ_x = θ_y
    let poly = |theta: f64| weighted_sum(a, theta * theta);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = poly(mid) - target;
        if f == 0.0 {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `lo` keeps the diagonal at or below ψ
    Ok(lo)
}

/// `Σ_m levels[m] · ratio^m` with compensated summation.
pub(crate) fn weighted_sum(levels: &[f64], ratio: f64) -> f64 {
    let mut scale = 1.0;
    neumaier_sum(levels.iter().map(|v| {
        let term = v * scale;
        scale *= ratio;
        term
    }))
}

/// Robust kernel built from precomputed cross and diagonal levels:
/// `Σ_m θ_x^m θ_y^m k_m(x, y)`.
pub fn robust_from_levels(
    cross: &LevelValues,
    diag_x: &LevelValues,
    diag_y: &LevelValues,
    params: &NormalizationParams,
) -> Result<f64> {
    let tx = normalization_root(diag_x, params)?;
    let ty = normalization_root(diag_y, params)?;
    Ok(weighted_sum(cross.values(), tx * ty))
}

pub fn robust_sig_kernel(
    x: &Sequence,
    y: &Sequence,
    spec: &StaticKernelSpec,
    level: usize,
    params: &NormalizationParams,
) -> Result<f64> {
    let cross = sig_kernel_levels(x, y, spec, level)?;
    let dx = sig_kernel_levels(x, x, spec, level)?;
    let dy = sig_kernel_levels(y, y, spec, level)?;
    robust_from_levels(&cross, &dx, &dy, params)
}
