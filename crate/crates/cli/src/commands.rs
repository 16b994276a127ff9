use std::path::{Path, PathBuf};

use serde::Serialize;
use sigkern::io::{load_dataset, write_gram_binary, write_gram_csv};
use sigkern::mmd::mmd2_pooled;
use sigkern::preprocess::apply_pipeline;
use sigkern::{gram, nystrom, Dataset, PermutationTest, SampleSet, Sequence, TestResult};

use crate::config::{load_grid, MethodName, RunConfig};
use crate::error::CliError;

#[derive(Serialize)]
pub struct KernelReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub fingerprint: String,
    pub x_id: String,
    pub y_id: String,
    pub method: MethodName,
    pub value: f64,
    /// Per-level values before normalization (dp only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<[f64; 2]>,
    /// `e^C C^{M+1} / (M+1)!` for the unweighted linear dp kernel.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
}

#[derive(Serialize)]
pub struct GramReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub fingerprint: String,
    pub n: usize,
    pub output: PathBuf,
    pub format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nystrom_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<Vec<usize>>,
}

#[derive(Serialize)]
pub struct GridEntry {
    pub index: usize,
    pub fingerprint: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mmd2: Option<f64>,
}

#[derive(Serialize)]
pub struct TestReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub fingerprint: String,
    pub n_x: usize,
    pub n_y: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<GridEntry>,
    pub result: TestResult,
}

#[derive(Serialize)]
pub struct SweepReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub fingerprint: String,
    pub n_x: usize,
    pub n_y: usize,
    pub grid: Vec<GridEntry>,
    pub sup_mmd2: f64,
    pub argmax: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn load_preprocessed(cfg: &RunConfig, paths: &[&Path]) -> Result<Vec<Dataset>, CliError> {
    let raw = paths
        .iter()
        .map(|p| load_dataset(p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(apply_pipeline(&raw, &cfg.steps()?)?)
}

fn pick(ds: &Dataset, id: Option<&str>, path: &Path) -> Result<(Sequence, String), CliError> {
    let idx = match id {
        Some(id) => ds.ids().iter().position(|s| s == id).ok_or_else(|| {
            CliError::Data(format!("{}: no sequence with id `{id}`", path.display()))
        })?,
        None if ds.len() == 1 => 0,
        None => {
            return Err(CliError::Data(format!(
                "{}: holds {} sequences; select one with an id flag",
                path.display(),
                ds.len()
            )))
        }
    };
    Ok((ds.sequences()[idx].clone(), ds.ids()[idx].clone()))
}

pub fn kernel(
    cfg: RunConfig,
    x: &Path,
    y: &Path,
    x_id: Option<&str>,
    y_id: Option<&str>,
) -> Result<KernelReport, CliError> {
    let kc = cfg.kernel_config()?;
    let ds = load_preprocessed(&cfg, &[x, y])?;
    let (xs, xid) = pick(&ds[0], x_id, x)?;
    let (ys, yid) = pick(&ds[1], y_id, y)?;
    let levels = kc.weighted_levels(&xs, &ys)?.map(|l| l.values().to_vec());
    let theta = match kc.normalization {
        Some(_) => Some([kc.theta(&xs)?, kc.theta(&ys)?]),
        None => None,
    };
    let value = match theta {
        Some([tx, ty]) => kc.evaluate_with_thetas(&xs, &ys, tx, ty)?,
        None => kc.evaluate(&xs, &ys)?,
    };
    let tail_bound = match (
        cfg.method.name,
        cfg.kernel.family,
        &cfg.level_weights,
        theta,
    ) {
        (MethodName::Dp, sigkern::KernelFamily::Linear, None, None) if cfg.kernel.scale == 1.0 => {
            let c = xs.one_variation().max(ys.one_variation());
            let m = cfg.method.level as i32;
            Some(c.exp() * c.powi(m + 1) / factorial(cfg.method.level + 1))
        }
        _ => None,
    };
    Ok(KernelReport {
        command: "kernel",
        fingerprint: cfg.fingerprint(),
        method: cfg.method.name,
        config: cfg,
        x_id: xid,
        y_id: yid,
        value,
        levels,
        theta,
        tail_bound,
    })
}

pub fn gram_cmd(
    cfg: RunConfig,
    data: &Path,
    out: &Path,
    rank: Option<usize>,
) -> Result<GramReport, CliError> {
    let kc = cfg.kernel_config()?;
    let format = match out.extension().and_then(|e| e.to_str()) {
        Some("csv") => "csv",
        Some("bin") => "binary",
        _ => {
            return Err(CliError::Config(format!(
                "{}: output must end in .csv or .bin",
                out.display()
            )))
        }
    };
    let ds = load_preprocessed(&cfg, &[data])?.remove(0);
    let n = ds.len();
    let (values, landmarks) = match rank {
        None => (
            gram(ds.sequences(), &kc, cfg.workers)?.values().to_vec(),
            None,
        ),
        Some(r) => {
            let f = nystrom(ds.sequences(), &kc, r, cfg.seed, cfg.workers)?;
            let g = f.reconstruct();
            let row_major: Vec<f64> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| g[(i, j)])
                .collect();
            (row_major, Some(f.landmarks))
        }
    };
    let mut buf = Vec::new();
    let written = if format == "csv" {
        write_gram_csv(&mut buf, ds.ids(), &values)
    } else {
        write_gram_binary(&mut buf, &values)
    };
    written
        .and_then(|_| std::fs::write(out, &buf))
        .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    Ok(GramReport {
        command: "gram",
        fingerprint: cfg.fingerprint(),
        config: cfg,
        n,
        output: out.to_path_buf(),
        format,
        nystrom_rank: rank,
        landmarks,
    })
}

fn samples(cfg: &RunConfig, x: &Path, y: &Path) -> Result<(SampleSet, SampleSet), CliError> {
    let mut ds = load_preprocessed(cfg, &[x, y])?;
    let (ys, _) = ds.pop().expect("two datasets").into_parts();
    let (xs, _) = ds.pop().expect("two datasets").into_parts();
    Ok((SampleSet::new(xs, "x")?, SampleSet::new(ys, "y")?))
}

fn entries(grid: &[RunConfig], mmd2: Option<&[f64]>) -> Vec<GridEntry> {
    grid.iter()
        .enumerate()
        .map(|(index, c)| GridEntry {
            index,
            fingerprint: c.fingerprint(),
            config: c.clone(),
            mmd2: mmd2.map(|v| v[index]),
        })
        .collect()
}

pub fn test2(
    cfg: RunConfig,
    x: &Path,
    y: &Path,
    grid: Option<&Path>,
) -> Result<TestReport, CliError> {
    let grid_cfgs = match grid {
        Some(p) => load_grid(p, &cfg)?,
        None => Vec::new(),
    };
    let kernels = if grid_cfgs.is_empty() {
        vec![cfg.kernel_config()?]
    } else {
        grid_cfgs
            .iter()
            .map(RunConfig::kernel_config)
            .collect::<Result<Vec<_>, _>>()?
    };
    let (xs, ys) = samples(&cfg, x, y)?;
    let test = PermutationTest::new(cfg.test.permutations, cfg.test.alpha, cfg.seed)
        .with_estimator(cfg.test.estimator)
        .with_workers(cfg.workers);
    let result = test.run_grid(&xs, &ys, &kernels)?;
    Ok(TestReport {
        command: "test2",
        fingerprint: cfg.fingerprint(),
        n_x: xs.len(),
        n_y: ys.len(),
        grid: entries(&grid_cfgs, None),
        config: cfg,
        result,
    })
}

pub fn sweep(cfg: RunConfig, x: &Path, y: &Path, grid: &Path) -> Result<SweepReport, CliError> {
    let grid_cfgs = load_grid(grid, &cfg)?;
    let kernels = grid_cfgs
        .iter()
        .map(RunConfig::kernel_config)
        .collect::<Result<Vec<_>, _>>()?;
    let (xs, ys) = samples(&cfg, x, y)?;
    let (m, n) = (xs.len(), ys.len());
    if cfg.test.estimator == sigkern::Estimator::Unbiased && (m < 2 || n < 2) {
        return Err(CliError::Config(
            "unbiased MMD needs at least two samples per side".into(),
        ));
    }
    let pooled: Vec<Sequence> = xs.sequences.iter().chain(&ys.sequences).cloned().collect();
    let (ix, iy): (Vec<usize>, Vec<usize>) = ((0..m).collect(), (m..m + n).collect());
    let values = kernels
        .iter()
        .map(|k| {
            Ok(mmd2_pooled(
                &gram(&pooled, k, cfg.workers)?,
                &ix,
                &iy,
                cfg.test.estimator,
            ))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    let (argmax, sup) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
    Ok(SweepReport {
        command: "sweep",
        fingerprint: cfg.fingerprint(),
        config: cfg,
        n_x: m,
        n_y: n,
        grid: entries(&grid_cfgs, Some(&values)),
        sup_mmd2: sup,
        argmax,
    })
}
