//! Discrete sequences in ℝ^d, viewed as piecewise-linear paths.

use crate::error::{Error, Result};

/// An ordered list of `L + 1` points in ℝ^d, stored row-major.
///
/// A sequence with `L + 1` points has `L` linear segments once interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    dim: usize,
    data: Vec<f64>,
}

impl Sequence {
    /// Builds a sequence from a flat row-major buffer of `n_points * dim` values.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if data.is_empty() {
            return Err(Error::EmptySequence);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                point: pos / dim,
                coord: pos % dim,
            });
        }
        Ok(Sequence { dim, data })
    }

    /// Builds a sequence from a list of points; all points must share one dimension.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySequence)?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Sequence::from_flat(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points, `L + 1`.
    pub fn n_points(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Number of linear segments, `L`.
    pub fn n_segments(&self) -> usize {
        self.n_points() - 1
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Increment `x_i - x_{i-1}` for segment `i` in `1..=L`.
    pub fn increment(&self, i: usize) -> Vec<f64> {
        self.point(i)
            .iter()
            .zip(self.point(i - 1))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Euclidean 1-variation `Σ_i |x_i - x_{i-1}|` of the interpolated path.
    pub fn one_variation(&self) -> f64 {
        (1..self.n_points())
            .map(|i| self.increment(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum()
    }

    /// Applies `f` to every coordinate, keeping the shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Sequence::from_flat(self.dim, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Adds `offset` to every point.
    pub fn translate(&self, offset: &[f64]) -> Result<Self> {
        check_dim(self.dim, offset.len())?;
        let data = self
            .data
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b))
            .collect();
        Sequence::from_flat(self.dim, data)
    }

    /// Appends `other` after `self`, dropping `other`'s first point.
    ///
    /// Callers translate `other` so that it starts at `self`'s endpoint when
    /// they want the concatenated path to stay continuous.
    pub fn concat(&self, other: &Sequence) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data[other.dim..]);
        Sequence::from_flat(self.dim, data)
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
