//! Static kernels on ℝ^d and the increment matrix they induce on pairs of sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{check_dim, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Linear,
    Rbf,
    Exponential,
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelFamily::Linear),
            "rbf" => Ok(KernelFamily::Rbf),
            "exponential" | "exp" => Ok(KernelFamily::Exponential),
            other => Err(Error::invalid(
                "kernel",
                format!("unknown family `{other}` (expected linear, rbf or exponential)"),
            )),
        }
    }
}

/// A static kernel `k: ℝ^d × ℝ^d → ℝ` with its hyperparameters.
///
/// The RBF family is `scale · exp(-‖u - v‖² / (2 bandwidth²))`; a kernel
/// written as `exp(-γ‖u - v‖²)` corresponds to `γ = 1 / (2 bandwidth²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticKernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
    pub scale: f64,
}

impl StaticKernelSpec {
    pub fn linear() -> Self {
        StaticKernelSpec {
            family: KernelFamily::Linear,
            bandwidth: 1.0,
            scale: 1.0,
        }
    }

    pub fn rbf(bandwidth: f64) -> Self {
        StaticKernelSpec {
            family: KernelFamily::Rbf,
            bandwidth,
            scale: 1.0,
        }
    }

    pub fn exponential(bandwidth: f64) -> Self {
        StaticKernelSpec {
            family: KernelFamily::Exponential,
            bandwidth,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(
                "scale",
                format!("must be positive, got {}", self.scale),
            ));
        }
        if self.family != KernelFamily::Linear
            && !(self.bandwidth > 0.0 && self.bandwidth.is_finite())
        {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be positive, got {}", self.bandwidth),
            ));
        }
        Ok(())
    }

    /// Evaluates the kernel without validating inputs. Both slices must have equal length.
    #[inline]
    pub(crate) fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        let raw = match self.family {
            KernelFamily::Linear => u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>(),
            KernelFamily::Rbf => {
                let sq = sq_dist(u, v);
                (-sq / (2.0 * self.bandwidth * self.bandwidth)).exp()
            }
            KernelFamily::Exponential => (-sq_dist(u, v).sqrt() / self.bandwidth).exp(),
        };
        self.scale * raw
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.validate()?;
        check_dim(u.len(), v.len())?;
        for (coord, value) in u.iter().chain(v).enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    point: coord / u.len(),
                    coord: coord % u.len(),
                });
            }
        }
        Ok(self.eval_unchecked(u, v))
    }
}

#[inline]
fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// The `L_x × L_y` grid `∇_{i,j} = ⟨δ_i k_x, δ_j k_y⟩` of second-order
/// differences of the static Gram grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl IncrementMatrix {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols);
        IncrementMatrix { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry for segments `i` and `j`, both zero-based (segment `i` joins points `i` and `i + 1`).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            values.extend((0..self.rows).map(|i| self.get(i, j)));
        }
        IncrementMatrix {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Computes `∇` from the `(L_x + 1) × (L_y + 1)` static Gram grid, evaluating
/// each `k(x_i, y_j)` exactly once.
///
/// A single-point sequence has no segments and yields a `0 × n` or `n × 0` matrix.
pub fn increment_matrix(
    spec: &StaticKernelSpec,
    x: &Sequence,
    y: &Sequence,
) -> Result<IncrementMatrix> {
    spec.validate()?;
    check_dim(x.dim(), y.dim())?;
    let (nx, ny) = (x.n_points(), y.n_points());
    let (rows, cols) = (nx - 1, ny - 1);
    if rows == 0 || cols == 0 {
        return Ok(IncrementMatrix {
            rows,
            cols,
            values: Vec::new(),
        });
    }

    let mut values = Vec::with_capacity(rows * cols);
    let mut prev: Vec<f64> = y
        .points()
        .map(|q| spec.eval_unchecked(x.point(0), q))
        .collect();
    let mut cur = vec![0.0; ny];
    for i in 1..nx {
        let p = x.point(i);
        for (c, q) in cur.iter_mut().zip(y.points()) {
            *c = spec.eval_unchecked(p, q);
        }
        for j in 1..ny {
            // grouped so that the (y, x) matrix is the exact transpose
            values.push((prev[j - 1] + cur[j]) - (cur[j - 1] + prev[j]));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(IncrementMatrix { rows, cols, values })
}
