//! Signature MMD, permutation two-sample tests and the sup-over-grid metric.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::neumaier_sum;
use crate::error::{Error, Result};
use crate::gram::{gram, thread_pool, GramMatrix};
use crate::kernel::SigKernelConfig;
use crate::sequence::{check_dim, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// V-statistic: plain block means.
    #[default]
    Biased,
    /// U-statistic: within-sample means exclude the diagonal.
    Unbiased,
}

/// An iid sample of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub sequences: Vec<Sequence>,
    pub label: String,
}

impl SampleSet {
    pub fn new(sequences: Vec<Sequence>, label: impl Into<String>) -> Result<Self> {
        let first = sequences.first().ok_or(Error::EmptySampleSet)?;
        for s in &sequences {
            check_dim(first.dim(), s.dim())?;
        }
        Ok(SampleSet {
            sequences,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.sequences[0].dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub mmd2: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub permutations: usize,
    pub seed: u64,
    pub estimator: Estimator,
    /// Index into the hyperparameter grid attaining the observed statistic.
    pub argmax: usize,
}

fn block_mean(g: &DMatrix<f64>, skip_diagonal: bool) -> f64 {
    let (r, c) = g.shape();
    let sum = neumaier_sum((0..r).flat_map(|i| {
        (0..c)
            .filter(move |&j| !(skip_diagonal && i == j))
            .map(move |j| g[(i, j)])
    }));
    let count = if skip_diagonal { r * (r - 1) } else { r * c };
    sum / count as f64
}

/// `MMD²` from the three Gram blocks.
pub fn mmd2(
    gxx: &DMatrix<f64>,
    gyy: &DMatrix<f64>,
    gxy: &DMatrix<f64>,
    estimator: Estimator,
) -> Result<f64> {
    let (m, n) = (gxx.nrows(), gyy.nrows());
    if !gxx.is_square() || !gyy.is_square() || gxy.shape() != (m, n) {
        return Err(Error::invalid("gram", "blocks must be m×m, n×n and m×n"));
    }
    if m == 0 || n == 0 {
        return Err(Error::EmptySampleSet);
    }
    let unbiased = estimator == Estimator::Unbiased;
    if unbiased && (m < 2 || n < 2) {
        return Err(Error::invalid(
            "estimator",
            "unbiased MMD needs at least two samples per side",
        ));
    }
    Ok(block_mean(gxx, unbiased) - 2.0 * block_mean(gxy, false) + block_mean(gyy, unbiased))
}

/// `MMD²` for the split `(xs, ys)` of a pooled Gram matrix. Same arithmetic
/// as [`mmd2`] on the extracted blocks.
pub fn mmd2_pooled(pooled: &GramMatrix, xs: &[usize], ys: &[usize], estimator: Estimator) -> f64 {
    let mean = |a: &[usize], b: &[usize], skip: bool| {
        let sum = neumaier_sum(a.iter().enumerate().flat_map(|(p, &i)| {
            b.iter()
                .enumerate()
                .filter(move |(q, _)| !(skip && p == *q))
                .map(move |(_, &j)| pooled.get(i, j))
        }));
        let count = if skip {
            a.len() * (a.len() - 1)
        } else {
            a.len() * b.len()
        };
        sum / count as f64
    };
    let unbiased = estimator == Estimator::Unbiased;
    mean(xs, xs, unbiased) - 2.0 * mean(xs, ys, false) + mean(ys, ys, unbiased)
}

fn pooled(x: &SampleSet, y: &SampleSet) -> Result<Vec<Sequence>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    check_dim(x.dim(), y.dim())?;
    Ok(x.sequences.iter().chain(&y.sequences).cloned().collect())
}

fn sup_statistic(
    grams: &[GramMatrix],
    xs: &[usize],
    ys: &[usize],
    estimator: Estimator,
) -> (f64, usize) {
    grams
        .iter()
        .enumerate()
        .map(|(k, g)| (mmd2_pooled(g, xs, ys, estimator), k))
        .fold((f64::NEG_INFINITY, 0), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        })
}

/// `sup_θ MMD²_θ` over a grid of kernel configurations with the biased
/// estimator. Returns the maximum and the index of the first config attaining it.
pub fn sup_mmd(
    x: &SampleSet,
    y: &SampleSet,
    grid: &[SigKernelConfig],
    workers: usize,
) -> Result<(f64, usize)> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must contain at least one config"));
    }
    let data = pooled(x, y)?;
    let grams = grid
        .iter()
        .map(|cfg| gram(&data, cfg, workers))
        .collect::<Result<Vec<_>>>()?;
    let (xs, ys) = split_indices(x.len(), y.len());
    Ok(sup_statistic(&grams, &xs, &ys, Estimator::Biased))
}

fn split_indices(m: usize, n: usize) -> (Vec<usize>, Vec<usize>) {
    ((0..m).collect(), (m..m + n).collect())
}

#[derive(Debug, Clone)]
pub struct PermutationTest {
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
    pub estimator: Estimator,
    pub workers: usize,
}

impl PermutationTest {
    pub fn new(permutations: usize, alpha: f64, seed: u64) -> Self {
        PermutationTest {
            permutations,
            alpha,
            seed,
            estimator: Estimator::Biased,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.permutations == 0 {
            return Err(Error::invalid("permutations", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        Ok(())
    }

    /// Runs the test with a single kernel configuration.
    pub fn run(
        &self,
        x: &SampleSet,
        y: &SampleSet,
        config: &SigKernelConfig,
    ) -> Result<TestResult> {
        self.run_grid(x, y, std::slice::from_ref(config))
    }

    /// Runs the test with the sup-over-grid statistic, recomputing the sup
    /// for every permutation. One pooled Gram is computed per grid entry.
    pub fn run_grid(
        &self,
        x: &SampleSet,
        y: &SampleSet,
        grid: &[SigKernelConfig],
    ) -> Result<TestResult> {
        self.validate()?;
        if grid.is_empty() {
            return Err(Error::invalid("grid", "must contain at least one config"));
        }
        let data = pooled(x, y)?;
        let (m, n) = (x.len(), y.len());
        if self.estimator == Estimator::Unbiased && (m < 2 || n < 2) {
            return Err(Error::invalid(
                "estimator",
                "unbiased MMD needs at least two samples per side",
            ));
        }
        let grams = grid
            .iter()
            .map(|cfg| gram(&data, cfg, self.workers))
            .collect::<Result<Vec<_>>>()?;
        self.calibrate(&grams, m, n)
    }

    /// Permutation calibration on precomputed pooled Gram matrices whose first
    /// `m` rows belong to the first sample.
    pub fn calibrate(&self, grams: &[GramMatrix], m: usize, n: usize) -> Result<TestResult> {
        self.validate()?;
        let (xs, ys) = split_indices(m, n);
        let (observed, argmax) = sup_statistic(grams, &xs, &ys, self.estimator);

        let pool = thread_pool(self.workers)?;
        let exceed = pool.install(|| {
            (0..self.permutations)
                .into_par_iter()
                .map(|b| {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                    rng.set_stream(b as u64 + 1);
                    let mut idx: Vec<usize> = (0..m + n).collect();
                    idx.shuffle(&mut rng);
                    let (px, py) = idx.split_at(m);
                    let (stat, _) = sup_statistic(grams, px, py, self.estimator);
                    usize::from(stat >= observed)
                })
                .sum::<usize>()
        });
        let p_value = (1 + exceed) as f64 / (self.permutations + 1) as f64;
        Ok(TestResult {
            mmd2: observed,
            p_value,
            reject: p_value <= self.alpha,
            alpha: self.alpha,
            permutations: self.permutations,
            seed: self.seed,
            estimator: self.estimator,
            argmax,
        })
    }
}

/// Convenience wrapper over [`PermutationTest::run`].
pub fn permutation_test(
    x: &SampleSet,
    y: &SampleSet,
    config: &SigKernelConfig,
    permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    PermutationTest::new(permutations, alpha, seed).run(x, y, config)
}
