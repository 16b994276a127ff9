//! Brute-force truncated tensor algebra over ℝ^d.
//!
//! Everything here materializes tensors explicitly and is only meant for small
//! `d`, `L` and `M`. The fast kernel algorithms are validated against it.

use crate::error::{Error, Result};
use crate::sequence::{check_dim, Sequence};
use crate::static_kernel::{increment_matrix, StaticKernelSpec};
use crate::LevelValues;

/// Default guard on `(L_x · L_y)^M` for [`enumerate_sigkernel`].
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e7;

/// Graded sequence of dense tensors of degree `0..=M` over ℝ^d.
///
/// The degree-`m` tensor has `d^m` coefficients in row-major multi-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTensorSeq {
    dim: usize,
    tensors: Vec<Vec<f64>>,
}

impl TruncatedTensorSeq {
    /// The unit `(1, 0, …, 0)`.
    pub fn identity(dim: usize, level: usize) -> Self {
        let tensors = (0..=level)
            .map(|m| {
                let mut t = vec![0.0; dim.pow(m as u32)];
                if m == 0 {
                    t[0] = 1.0;
                }
                t
            })
            .collect();
        TruncatedTensorSeq { dim, tensors }
    }

    pub fn from_tensors(dim: usize, tensors: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if tensors.is_empty() {
            return Err(Error::invalid(
                "tensors",
                "need at least the degree-0 entry",
            ));
        }
        for (m, t) in tensors.iter().enumerate() {
            check_dim(dim.pow(m as u32), t.len())?;
        }
        Ok(TruncatedTensorSeq { dim, tensors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.tensors.len() - 1
    }

    pub fn degree(&self, m: usize) -> &[f64] {
        &self.tensors[m]
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        if self.level() != other.level() {
            return Err(Error::LevelMismatch {
                left: self.level(),
                right: other.level(),
            });
        }
        Ok(())
    }
}

/// `(1, x, x^{⊗2}/2!, …, x^{⊗M}/M!)`.
pub fn mon_features(x: &[f64], level: usize) -> Result<TruncatedTensorSeq> {
    if x.is_empty() {
        return Err(Error::invalid(
            "x",
            "point must have at least one coordinate",
        ));
    }
    if let Some(coord) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { point: 0, coord });
    }
    let mut tensors = Vec::with_capacity(level + 1);
    tensors.push(vec![1.0]);
    for m in 1..=level {
        let prev: &Vec<f64> = &tensors[m - 1];
        let next: Vec<f64> = prev
            .iter()
            .flat_map(|&a| x.iter().map(move |&b| a * b / m as f64))
            .collect();
        tensors.push(next);
    }
    Ok(TruncatedTensorSeq {
        dim: x.len(),
        tensors,
    })
}

/// Truncated product `(s ⊗ t)_m = Σ_{a+b=m} s_a ⊗ t_b`.
pub fn tensor_product(
    s: &TruncatedTensorSeq,
    t: &TruncatedTensorSeq,
) -> Result<TruncatedTensorSeq> {
    s.check_compatible(t)?;
    let level = s.level();
    let mut out = TruncatedTensorSeq::identity(s.dim, level);
    out.tensors[0][0] = 0.0;
    for m in 0..=level {
        let target = &mut out.tensors[m];
        for a in 0..=m {
            let (sa, tb) = (&s.tensors[a], &t.tensors[m - a]);
            // row-major: index(sa_i ⊗ tb_j) = i * len(tb) + j
            for (i, &u) in sa.iter().enumerate() {
                if u == 0.0 {
                    continue;
                }
                let base = i * tb.len();
                for (j, &v) in tb.iter().enumerate() {
                    target[base + j] += u * v;
                }
            }
        }
    }
    Ok(out)
}

/// `Σ_m ⟨s_m, t_m⟩` with the coefficient-wise dot product on each degree.
pub fn tensor_inner(s: &TruncatedTensorSeq, t: &TruncatedTensorSeq) -> Result<f64> {
    Ok(tensor_inner_levels(s, t)?.iter().sum())
}

/// Degree-wise inner products `⟨s_m, t_m⟩`.
pub fn tensor_inner_levels(s: &TruncatedTensorSeq, t: &TruncatedTensorSeq) -> Result<Vec<f64>> {
    s.check_compatible(t)?;
    Ok(s.tensors
        .iter()
        .zip(&t.tensors)
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u * v).sum())
        .collect())
}

/// Truncated signature of the piecewise-linear interpolation of `x`, as the
/// product of the segment exponentials `mon_features(x_i - x_{i-1})`.
pub fn signature_oracle(x: &Sequence, level: usize) -> Result<TruncatedTensorSeq> {
    let mut sig = TruncatedTensorSeq::identity(x.dim(), level);
    for i in 1..x.n_points() {
        let seg = mon_features(&x.increment(i), level)?;
        sig = tensor_product(&sig, &seg)?;
    }
    Ok(sig)
}

/// Literal evaluation of the nested-sum formula: for every level `m`, sums over
/// all non-decreasing multi-indices `i`, `j` of length `m` the product
/// `Π_r ∇_{i_r, j_r}` weighted by `1 / (i! · j!)`, where `i!` is the product of
/// the factorials of the multiplicities of the distinct entries of `i`.
///
/// Works for any static kernel. Refuses instances with `(L_x · L_y)^M > cap`.
pub fn enumerate_sigkernel(
    x: &Sequence,
    y: &Sequence,
    spec: &StaticKernelSpec,
    level: usize,
    cap: f64,
) -> Result<LevelValues> {
    let nabla = increment_matrix(spec, x, y)?;
    let (lx, ly) = (nabla.rows(), nabla.cols());
    let work = ((lx * ly) as f64).powi(level as i32);
    if work > cap {
        return Err(Error::GuardExceeded {
            what: "enumeration (L_x·L_y)^M",
            needed: work,
            cap,
        });
    }

    let mut values = vec![0.0; level + 1];
    values[0] = 1.0;
    for (m, slot) in values.iter_mut().enumerate().skip(1) {
        let left = non_decreasing(lx, m);
        let right = non_decreasing(ly, m);
        let mut total = 0.0;
        for (i, wi) in &left {
            for (j, wj) in &right {
                let prod: f64 = i.iter().zip(j).map(|(&a, &b)| nabla.get(a, b)).product();
                total += prod / (wi * wj);
            }
        }
        *slot = total;
    }
    Ok(LevelValues::new(values))
}

/// All non-decreasing tuples of length `m` over `0..n`, each paired with its
/// multiplicity factorial `i!`.
fn non_decreasing(n: usize, m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(
        n: usize,
        m: usize,
        start: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if cur.len() == m {
            out.push((cur.clone(), multiplicity_factorial(cur)));
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(n, m, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m, 0, &mut Vec::with_capacity(m), &mut out);
    out
}

fn multiplicity_factorial(idx: &[usize]) -> f64 {
    let mut acc = 1.0;
    let mut run = 0usize;
    for (k, v) in idx.iter().enumerate() {
        run = if k > 0 && idx[k - 1] == *v {
            run + 1
        } else {
            1
        };
        acc *= run as f64;
    }
    acc
}
