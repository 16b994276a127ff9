//! Exact truncated signature kernel by dynamic programming over the increment matrix.
//!
//! Level `m` of the kernel is the sum over non-decreasing index pairs
//! `(i_1 ≤ … ≤ i_m, j_1 ≤ … ≤ j_m)` of `Π_r ∇_{i_r, j_r} / (i! · j!)`. The
//! program walks the pairs one step at a time, keeping for every cell `(i, j)`
//! the partial sums split by the length `p` of the trailing run of equal `i`
//! indices and the length `q` of the trailing run of equal `j` indices.
//! Extending a run from `p` to `p + 1` divides by `p + 1`, so the divisors of
//! one multi-index multiply up to exactly `i! · j!`. Level `r` has `r²` run
//! states per cell, giving `O(M³ L²)` work; only running row and column
//! accumulators are stored, so memory is `O(M² L_y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::Sequence;
use crate::static_kernel::{increment_matrix, IncrementMatrix, StaticKernelSpec};

/// Per-level kernel contributions `(k_0, …, k_M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelValues {
    values: Vec<f64>,
}

impl LevelValues {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "level values need the degree-0 entry");
        LevelValues { values }
    }

    /// Truncation level `M`.
    pub fn level(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The truncated kernel `Σ_m k_m`.
    pub fn total(&self) -> f64 {
        neumaier_sum(self.values.iter().copied())
    }

    /// `Σ_m w_m · k_m`.
    pub fn weighted_total(&self, weights: &[f64]) -> Result<f64> {
        check_weights(weights, self.level())?;
        Ok(neumaier_sum(
            self.values.iter().zip(weights).map(|(v, w)| v * w),
        ))
    }
}

pub(crate) fn check_weights(weights: &[f64], level: usize) -> Result<()> {
    if weights.len() != level + 1 {
        return Err(Error::invalid(
            "level_weights",
            format!("expected {} weights, got {}", level + 1, weights.len()),
        ));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid(
            "level_weights",
            "weights must be finite and non-negative",
        ));
    }
    Ok(())
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum(iter: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    iter.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

/// Per-level truncated signature kernel `k_m(x, y)` for `m = 0..=level`.
pub fn sig_kernel_levels(
    x: &Sequence,
    y: &Sequence,
    spec: &StaticKernelSpec,
    level: usize,
) -> Result<LevelValues> {
    let nabla = increment_matrix(spec, x, y)?;
    Ok(levels_from_increments(&nabla, level))
}

/// Truncated signature kernel `k_{Sig,:M}(x, y)`.
pub fn sig_kernel(
    x: &Sequence,
    y: &Sequence,
    spec: &StaticKernelSpec,
    level: usize,
) -> Result<f64> {
    Ok(sig_kernel_levels(x, y, spec, level)?.total())
}

/// Runs the dynamic program on a precomputed increment matrix.
///
/// Cells are visited once in row-major order and every level is advanced at
/// each cell. Level `r + 1` at `(i, j)` needs level `r` at the same cell and
/// sums of level `r` over cells strictly above and/or strictly left, which are
/// kept as running row and column accumulators.
pub fn levels_from_increments(nabla: &IncrementMatrix, level: usize) -> LevelValues {
    let mut values = vec![0.0; level + 1];
    values[0] = 1.0;
    let (rows, cols) = (nabla.rows(), nabla.cols());
    if level == 0 || rows == 0 || cols == 0 {
        return LevelValues::new(values);
    }

    // Level r owns r² cell states (p, q) at state_off[r] + (p-1)·r + (q-1), and
    // r run accumulators at run_off[r] + (k-1).
    let state_off: Vec<usize> = (0..=level)
        .scan(0, |acc, r| {
            let o = *acc;
            *acc += r * r;
            Some(o)
        })
        .collect();
    let run_off: Vec<usize> = (0..=level)
        .scan(0, |acc, r| {
            let o = *acc;
            *acc += r;
            Some(o)
        })
        .collect();
    let n_states = state_off[level] + level * level;
    let run_width = run_off[level] + level;

    let mut cell = vec![0.0; n_states];
    // Σ_{i' < i} Σ_p A_r[p][q](i', j), per column j and q.
    let mut col_runs = vec![0.0; cols * run_width];
    // Σ_{i' < i} S_r(i', j), per column j and level r.
    let mut col_totals = vec![0.0; cols * (level + 1)];
    // Σ_{j' < j} Σ_q A_r[p][q](i, j'), per p; reset every row.
    let mut row_runs = vec![0.0; run_width];
    // Σ_{i' < i, j' < j} S_r(i', j'); reset every row.
    let mut corner = vec![0.0; level + 1];
    let mut sums: Vec<Neumaier> = vec![Neumaier::default(); level + 1];
    let inv: Vec<f64> = (0..=level + 1)
        .map(|k| if k == 0 { 0.0 } else { 1.0 / k as f64 })
        .collect();

    for i in 0..rows {
        row_runs.iter_mut().for_each(|v| *v = 0.0);
        corner.iter_mut().for_each(|v| *v = 0.0);
        let nab_row = nabla.row(i);
        for (j, &h) in nab_row.iter().enumerate() {
            let col_run = &mut col_runs[j * run_width..(j + 1) * run_width];
            let col_total = &mut col_totals[j * (level + 1)..(j + 1) * (level + 1)];

            cell[state_off[1]] = h;
            for r in 1..level {
                let (lo, hi) = cell.split_at_mut(state_off[r + 1]);
                let cur = &lo[state_off[r]..];
                let next = &mut hi[..(r + 1) * (r + 1)];
                let nr = r + 1;
                next[0] = h * corner[r];
                let rows_in = &row_runs[run_off[r]..run_off[r] + r];
                let cols_in = &col_run[run_off[r]..run_off[r] + r];
                for p in 1..=r {
                    next[p * nr] = h * inv[p + 1] * rows_in[p - 1];
                }
                for q in 1..=r {
                    next[q] = h * inv[q + 1] * cols_in[q - 1];
                }
                for p in 1..=r {
                    let f = h * inv[p + 1];
                    let src = &cur[(p - 1) * r..p * r];
                    let dst = &mut next[p * nr + 1..p * nr + 1 + r];
                    for ((d, s), w) in dst.iter_mut().zip(src).zip(&inv[2..]) {
                        *d = f * w * s;
                    }
                }
            }

            for r in 1..=level {
                let st = &cell[state_off[r]..state_off[r] + r * r];
                let mut total = 0.0;
                for p in 1..=r {
                    let row = &st[(p - 1) * r..p * r];
                    let row_sum: f64 = row.iter().sum();
                    total += row_sum;
                    if r < level {
                        row_runs[run_off[r] + p - 1] += row_sum;
                    }
                }
                if r < level {
                    for q in 1..=r {
                        let col_sum: f64 = (1..=r).map(|p| st[(p - 1) * r + (q - 1)]).sum();
                        col_run[run_off[r] + q - 1] += col_sum;
                    }
                    corner[r] += col_total[r];
                    col_total[r] += total;
                }
                sums[r].add(total);
            }
        }
    }
    for r in 1..=level {
        values[r] = sums[r].value();
    }
    LevelValues::new(values)
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Horner evaluation of `Σ_{m ≤ M} κ^m / (m!)²` with `κ = k(u, v)`:
/// `1 + κ(1 + κ/2²(1 + … (1 + κ/M²)))`.
pub fn mon_kernel_horner(
    spec: &StaticKernelSpec,
    u: &[f64],
    v: &[f64],
    level: usize,
) -> Result<f64> {
    let kappa = spec.eval(u, v)?;
    Ok(horner(kappa, level))
}

pub(crate) fn horner(kappa: f64, level: usize) -> f64 {
    (1..=level)
        .rev()
        .fold(1.0, |acc, m| 1.0 + kappa / (m * m) as f64 * acc)
}
