//! Untruncated signature kernel as the solution of the Goursat problem
//! `∂²K/∂s∂t = ∇·K`, `K(s, 0) = K(0, t) = 1`.
//!
//! Each sequence cell is split into `2^λ` sub-cells per axis (λ is the dyadic
//! order). The lifted path is linear inside a cell, so every sub-cell carries
//! `∇_{ij} / 4^λ`. The grid is marched row by row with
//!
//! ```text
//! K[i+1][j+1] = K[i+1][j] + K[i][j+1] - K[i][j] + ∇̂ (K[i+1][j] + K[i][j+1]) / 2
//! ```

use crate::error::{Error, Result};
use crate::sequence::Sequence;
use crate::static_kernel::{increment_matrix, IncrementMatrix, StaticKernelSpec};

/// Default cap on the number of grid nodes visited by one solve.
pub const DEFAULT_MAX_NODES: f64 = 1e10;
/// Default cap on nodes stored by [`pde_grid`].
pub const DEFAULT_MAX_STORED_NODES: f64 = 1e8;

/// Full solution grid of size `(2^λ L_x + 1) × (2^λ L_y + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeGrid {
    pub dyadic_order: u32,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl PdeGrid {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// The kernel value `K(L_x, L_y)`.
    pub fn corner(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

fn fine_shape(nabla: &IncrementMatrix, dyadic_order: u32, cap: f64) -> Result<(usize, usize)> {
    if dyadic_order > 30 {
        return Err(Error::invalid("dyadic_order", "must be at most 30"));
    }
    let factor = 1usize << dyadic_order;
    let nodes = ((nabla.rows() * factor + 1) as f64) * ((nabla.cols() * factor + 1) as f64);
    if nodes > cap {
        return Err(Error::GuardExceeded {
            what: "PDE grid nodes",
            needed: nodes,
            cap,
        });
    }
    Ok((nabla.rows() * factor, nabla.cols() * factor))
}

/// Marches the scheme, handing every completed row (including the boundary row) to `sink`.
fn march(
    nabla: &IncrementMatrix,
    dyadic_order: u32,
    fine: (usize, usize),
    mut sink: impl FnMut(&[f64]),
) {
    let (fine_rows, fine_cols) = fine;
    let inv = 1.0 / (1u64 << (2 * dyadic_order)) as f64;
    let mut prev = vec![1.0; fine_cols + 1];
    let mut cur = vec![1.0; fine_cols + 1];
    sink(&prev);
    for i in 0..fine_rows {
        let nab_row = nabla.row(i >> dyadic_order);
        cur[0] = 1.0;
        for j in 0..fine_cols {
            let h = nab_row[j >> dyadic_order] * inv;
            let s = cur[j] + prev[j + 1];
            cur[j + 1] = s - prev[j] + h * s * 0.5;
        }
        sink(&cur);
        std::mem::swap(&mut prev, &mut cur);
    }
}

/// Solves on the increment matrix and returns the corner value.
pub fn pde_from_increments(
    nabla: &IncrementMatrix,
    dyadic_order: u32,
    max_nodes: f64,
) -> Result<f64> {
    let fine = fine_shape(nabla, dyadic_order, max_nodes)?;
    let mut last = 1.0;
    march(nabla, dyadic_order, fine, |row| last = row[row.len() - 1]);
    Ok(last)
}

/// `k_{Sig,:∞}(x, y)` approximated on a grid of dyadic order `dyadic_order`.
pub fn sig_kernel_pde(
    x: &Sequence,
    y: &Sequence,
    spec: &StaticKernelSpec,
    dyadic_order: u32,
) -> Result<f64> {
    let nabla = increment_matrix(spec, x, y)?;
    pde_from_increments(&nabla, dyadic_order, DEFAULT_MAX_NODES)
}

/// Like [`sig_kernel_pde`] but keeps the whole grid.
pub fn pde_grid(
    x: &Sequence,
    y: &Sequence,
    spec: &StaticKernelSpec,
    dyadic_order: u32,
) -> Result<PdeGrid> {
    let nabla = increment_matrix(spec, x, y)?;
    let fine = fine_shape(&nabla, dyadic_order, DEFAULT_MAX_STORED_NODES)?;
    let mut values = Vec::with_capacity((fine.0 + 1) * (fine.1 + 1));
    march(&nabla, dyadic_order, fine, |row| {
        values.extend_from_slice(row)
    });
    Ok(PdeGrid {
        dyadic_order,
        rows: fine.0 + 1,
        cols: fine.1 + 1,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub value: f64,
    pub dyadic_order: u32,
    pub converged: bool,
}

/// Raises the dyadic order one step at a time (doubling the resolution) until
/// two successive values differ by less than `tol`, or `max_order` is reached.
///
/// A zero increment matrix makes the scheme exact at order 0. When the loop
/// runs out of orders the last value is returned with `converged == false`.
pub fn refine_until(
    x: &Sequence,
    y: &Sequence,
    spec: &StaticKernelSpec,
    tol: f64,
    max_order: u32,
) -> Result<Refinement> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let nabla = increment_matrix(spec, x, y)?;
    let mut value = pde_from_increments(&nabla, 0, DEFAULT_MAX_NODES)?;
    if nabla.is_zero() {
        return Ok(Refinement {
            value,
            dyadic_order: 0,
            converged: true,
        });
    }
    for order in 1..=max_order {
        let next = pde_from_increments(&nabla, order, DEFAULT_MAX_NODES)?;
        let done = (next - value).abs() < tol;
        value = next;
        if done {
            return Ok(Refinement {
                value,
                dyadic_order: order,
                converged: true,
            });
        }
    }
    Ok(Refinement {
        value,
        dyadic_order: max_order,
        converged: false,
    })
}
