//! A fully specified signature kernel: static kernel, evaluation method,
//! optional level weights and optional robust normalization.

use serde::{Deserialize, Serialize};

use crate::dp::{check_weights, sig_kernel_levels, LevelValues};
use crate::error::{Error, Result};
use crate::pde::sig_kernel_pde;
use crate::robust::{normalization_root, weighted_sum, NormalizationParams};
use crate::sequence::Sequence;
use crate::static_kernel::StaticKernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    /// Exact truncated kernel up to `level`.
    Dp { level: usize },
    /// Untruncated kernel from the PDE solver.
    Pde { dyadic_order: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigKernelConfig {
    pub static_kernel: StaticKernelSpec,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<NormalizationParams>,
}

impl SigKernelConfig {
    pub fn dp(static_kernel: StaticKernelSpec, level: usize) -> Self {
        SigKernelConfig {
            static_kernel,
            method: Method::Dp { level },
            level_weights: None,
            normalization: None,
        }
    }

    pub fn pde(static_kernel: StaticKernelSpec, dyadic_order: u32) -> Self {
        SigKernelConfig {
            static_kernel,
            method: Method::Pde { dyadic_order },
            level_weights: None,
            normalization: None,
        }
    }

    pub fn with_normalization(mut self, params: NormalizationParams) -> Self {
        self.normalization = Some(params);
        self
    }

    pub fn with_level_weights(mut self, weights: Vec<f64>) -> Self {
        self.level_weights = Some(weights);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.static_kernel.validate()?;
        match self.method {
            Method::Dp { level } => {
                if let Some(w) = &self.level_weights {
                    check_weights(w, level)?;
                }
            }
            Method::Pde { dyadic_order } => {
                if dyadic_order > 30 {
                    return Err(Error::invalid("dyadic_order", "must be at most 30"));
                }
                if self.level_weights.is_some() {
                    return Err(Error::invalid(
                        "level_weights",
                        "only available with the dp method",
                    ));
                }
                if self.normalization.is_some() {
                    return Err(Error::invalid(
                        "normalize",
                        "only available with the dp method",
                    ));
                }
            }
        }
        if let Some(p) = &self.normalization {
            p.validate()?;
        }
        Ok(())
    }

    /// Level values with the level weights applied; `None` for the PDE method.
    pub fn weighted_levels(&self, x: &Sequence, y: &Sequence) -> Result<Option<LevelValues>> {
        let Method::Dp { level } = self.method else {
            return Ok(None);
        };
        let levels = sig_kernel_levels(x, y, &self.static_kernel, level)?;
        Ok(Some(match &self.level_weights {
            Some(w) => {
                LevelValues::new(levels.values().iter().zip(w).map(|(v, w)| v * w).collect())
            }
            None => levels,
        }))
    }

    /// Per-sequence normalization factor `θ` (1 when normalization is off).
    pub fn theta(&self, x: &Sequence) -> Result<f64> {
        match &self.normalization {
            None => Ok(1.0),
            Some(params) => {
                let diag = self
                    .weighted_levels(x, x)?
                    .expect("normalization requires dp");
                normalization_root(&diag, params)
            }
        }
    }

    /// Kernel value given precomputed normalization factors for both arguments.
    pub fn evaluate_with_thetas(
        &self,
        x: &Sequence,
        y: &Sequence,
        theta_x: f64,
        theta_y: f64,
    ) -> Result<f64> {
        match self.method {
            Method::Pde { dyadic_order } => sig_kernel_pde(x, y, &self.static_kernel, dyadic_order),
            Method::Dp { .. } => {
                let levels = self.weighted_levels(x, y)?.expect("dp method");
                if self.normalization.is_none() {
                    return Ok(levels.total());
                }
                Ok(weighted_sum(levels.values(), theta_x * theta_y))
            }
        }
    }

    pub fn evaluate(&self, x: &Sequence, y: &Sequence) -> Result<f64> {
        self.validate()?;
        let (tx, ty) = (self.theta(x)?, self.theta(y)?);
        self.evaluate_with_thetas(x, y, tx, ty)
    }
}
