//! Gram matrices over sequence datasets, Nyström low-rank approximation and
//! the eigenvalue check used to verify positive semi-definiteness.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::SigKernelConfig;
use crate::sequence::{check_dim, Sequence};

/// Relative eigenvalue cutoff for the pseudo-inverse of the landmark block.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Dense symmetric Gram matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
    pub config: SigKernelConfig,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.values)
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n)
            .map(|i| self.get(i, i))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))
}

fn check_dataset(dataset: &[Sequence]) -> Result<()> {
    let first = dataset.first().ok_or(Error::EmptySampleSet)?;
    for s in dataset {
        check_dim(first.dim(), s.dim())?;
    }
    Ok(())
}

/// Evaluates a kernel on a fixed dataset, caching per-sequence normalization
/// factors. Entries are always computed as `k(x_min(i,j), x_max(i,j))`, so
/// every code path reading entry `(i, j)` sees the same bits.
pub(crate) struct PairEvaluator<'a> {
    config: &'a SigKernelConfig,
    dataset: &'a [Sequence],
    thetas: Vec<f64>,
}

impl<'a> PairEvaluator<'a> {
    pub(crate) fn new(
        config: &'a SigKernelConfig,
        dataset: &'a [Sequence],
        pool: &rayon::ThreadPool,
    ) -> Result<Self> {
        config.validate()?;
        check_dataset(dataset)?;
        let thetas = pool.install(|| {
            dataset
                .par_iter()
                .map(|x| config.theta(x))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(PairEvaluator {
            config,
            dataset,
            thetas,
        })
    }

    pub(crate) fn entry(&self, i: usize, j: usize) -> Result<f64> {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.config.evaluate_with_thetas(
            &self.dataset[a],
            &self.dataset[b],
            self.thetas[a],
            self.thetas[b],
        )
    }
}

/// Computes the full Gram matrix on `workers` threads. Only the upper triangle
/// is evaluated; each entry is an independent kernel call, so the result does
/// not depend on `workers`.
pub fn gram(dataset: &[Sequence], config: &SigKernelConfig, workers: usize) -> Result<GramMatrix> {
    let pool = thread_pool(workers)?;
    let eval = PairEvaluator::new(config, dataset, &pool)?;
    let n = dataset.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let upper = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(i, j)| eval.entry(i, j))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut values = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(upper) {
        values[i * n + j] = v;
        values[j * n + i] = v;
    }
    Ok(GramMatrix {
        n,
        values,
        config: config.clone(),
    })
}

/// Landmark factorization `G̃ = C W⁺ Cᵀ`.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    /// `n × r` cross-kernel block `G[:, J]`.
    pub c: DMatrix<f64>,
    /// `r × r` landmark block `G[J, J]`.
    pub w: DMatrix<f64>,
    /// Landmark indices `J`, sorted ascending.
    pub landmarks: Vec<usize>,
}

impl LowRankFactor {
    pub fn rank(&self) -> usize {
        self.landmarks.len()
    }

    /// Pseudo-inverse of `W` from its eigendecomposition, dropping eigenvalues
    /// below `PINV_RELATIVE_CUTOFF` times the largest one.
    pub fn w_pinv(&self) -> DMatrix<f64> {
        pinv_symmetric(&self.w, PINV_RELATIVE_CUTOFF)
    }

    /// The dense `n × n` reconstruction `C W⁺ Cᵀ`, symmetrized.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let g = &self.c * self.w_pinv() * self.c.transpose();
        (&g + g.transpose()) * 0.5
    }
}

pub(crate) fn pinv_symmetric(w: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = rel_cutoff * max;
    let inv = eig.eigenvalues.map(|v| {
        if v.abs() > cutoff && v.abs() > 0.0 {
            1.0 / v
        } else {
            0.0
        }
    });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Samples `rank` landmarks uniformly without replacement and fills the `C`
/// and `W` blocks by kernel evaluation.
pub fn nystrom(
    dataset: &[Sequence],
    config: &SigKernelConfig,
    rank: usize,
    seed: u64,
    workers: usize,
) -> Result<LowRankFactor> {
    let n = dataset.len();
    if rank == 0 || rank > n {
        return Err(Error::invalid(
            "rank",
            format!("must be in 1..={n}, got {rank}"),
        ));
    }
    let pool = thread_pool(workers)?;
    let eval = PairEvaluator::new(config, dataset, &pool)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut landmarks = sample(&mut rng, n, rank).into_vec();
    landmarks.sort_unstable();

    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..rank).map(move |k| (i, k)))
        .collect();
    let vals = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, k)| eval.entry(i, landmarks[k]))
            .collect::<Result<Vec<f64>>>()
    })?;
    let c = DMatrix::from_row_slice(n, rank, &vals);
    let w = DMatrix::from_fn(rank, rank, |a, b| c[(landmarks[a], b)]);
    Ok(LowRankFactor { c, w, landmarks })
}

/// Smallest eigenvalue of a symmetric matrix.
///
/// Rejects matrices whose asymmetry exceeds `1e-12` times the largest
/// absolute entry (or `1e-12` for matrices with entries below one).
pub fn min_eigenvalue(g: &DMatrix<f64>) -> Result<f64> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch {
            expected: g.nrows(),
            got: g.ncols(),
        });
    }
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let n = g.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (g[(i, j)] - g[(j, i)]).abs();
            if gap > 1e-12 * scale {
                return Err(Error::Asymmetric { i, j, gap });
            }
        }
    }
    let sym = (g + g.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Relative Frobenius distance `‖a - b‖_F / ‖b‖_F`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
