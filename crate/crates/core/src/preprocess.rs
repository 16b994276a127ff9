//! Sequence preprocessing: time augmentation, lead-lag, subsampling and
//! per-coordinate standardization.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::sequence::{check_dim, Sequence};

/// A named collection of sequences sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sequences: Vec<Sequence>,
    ids: Vec<String>,
}

impl Dataset {
    pub fn new(sequences: Vec<Sequence>, ids: Vec<String>) -> Result<Self> {
        if sequences.len() != ids.len() {
            return Err(Error::invalid("ids", "one id per sequence is required"));
        }
        let first = sequences.first().ok_or(Error::EmptySampleSet)?;
        for s in &sequences {
            check_dim(first.dim(), s.dim())?;
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Dataset { sequences, ids })
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

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn into_parts(self) -> (Vec<Sequence>, Vec<String>) {
        (self.sequences, self.ids)
    }

    /// Applies `f` to every sequence, keeping ids.
    pub fn map(&self, f: impl Fn(&Sequence) -> Result<Sequence>) -> Result<Self> {
        let sequences = self.sequences.iter().map(f).collect::<Result<Vec<_>>>()?;
        Dataset::new(sequences, self.ids.clone())
    }
}

/// Prepends a time coordinate `scale · i / L` to point `i`.
pub fn add_time(x: &Sequence, scale: f64) -> Result<Sequence> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(
            "time_scale",
            format!("must be positive, got {scale}"),
        ));
    }
    let len = x.n_segments();
    let mut data = Vec::with_capacity(x.n_points() * (x.dim() + 1));
    for (i, p) in x.points().enumerate() {
        let t = if len == 0 {
            0.0
        } else {
            scale * i as f64 / len as f64
        };
        data.push(t);
        data.extend_from_slice(p);
    }
    Sequence::from_flat(x.dim() + 1, data)
}

/// Lead-lag transform: `(x_i, x_i) → (x_{i+1}, x_i) → (x_{i+1}, x_{i+1})`,
/// giving `2L + 1` points in dimension `2d`. Lead coordinates come first.
pub fn lead_lag(x: &Sequence) -> Result<Sequence> {
    let d = x.dim();
    let mut data = Vec::with_capacity((2 * x.n_points() - 1) * 2 * d);
    let mut push = |lead: &[f64], lag: &[f64]| {
        data.extend_from_slice(lead);
        data.extend_from_slice(lag);
    };
    push(x.point(0), x.point(0));
    for i in 1..x.n_points() {
        push(x.point(i), x.point(i - 1));
        push(x.point(i), x.point(i));
    }
    Sequence::from_flat(2 * d, data)
}

/// Keeps points `0, stride, 2·stride, …` and always the last point.
pub fn subsample(x: &Sequence, stride: usize) -> Result<Sequence> {
    if stride == 0 {
        return Err(Error::invalid("stride", "must be at least 1"));
    }
    let last = x.n_points() - 1;
    let mut keep: Vec<usize> = (0..=last).step_by(stride).collect();
    if *keep.last().expect("non-empty") != last {
        keep.push(last);
    }
    let data = keep
        .iter()
        .flat_map(|&i| x.point(i).iter().copied())
        .collect();
    Sequence::from_flat(x.dim(), data)
}

/// Per-coordinate mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Statistics pooled over every point of every sequence. Zero-variance
    /// coordinates get `std = 1`.
    pub fn fit<'a>(sequences: impl IntoIterator<Item = &'a Sequence>) -> Result<Self> {
        let mut iter = sequences.into_iter().peekable();
        let dim = iter.peek().ok_or(Error::EmptySampleSet)?.dim();
        let mut count = 0usize;
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for s in iter {
            check_dim(dim, s.dim())?;
            for p in s.points() {
                count += 1;
                for k in 0..dim {
                    let delta = p[k] - mean[k];
                    mean[k] += delta / count as f64;
                    m2[k] += delta * (p[k] - mean[k]);
                }
            }
        }
        let std = m2
            .iter()
            .map(|v| {
                let s = (v / count as f64).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardization { mean, std })
    }

    pub fn apply(&self, x: &Sequence) -> Result<Sequence> {
        check_dim(self.mean.len(), x.dim())?;
        let data = x
            .points()
            .flat_map(|p| {
                p.iter()
                    .zip(&self.mean)
                    .zip(&self.std)
                    .map(|((v, m), s)| (v - m) / s)
            })
            .collect();
        Sequence::from_flat(x.dim(), data)
    }
}

/// Standardizes every coordinate to mean 0 and standard deviation 1 over the
/// whole dataset.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Standardization)> {
    let stats = Standardization::fit(ds.sequences())?;
    let out = ds.map(|s| stats.apply(s))?;
    Ok((out, stats))
}

/// One preprocessing step. Pipelines apply steps in order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Standardize,
    AddTime { scale: f64 },
    LeadLag,
    Subsample { stride: usize },
}

impl std::str::FromStr for Step {
    type Err = Error;

    /// Parses `standardize`, `add_time[:scale]`, `lead_lag`, `subsample:stride`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let bad = |reason: String| Error::invalid("preprocess", reason);
        match (name, arg) {
            ("standardize", None) => Ok(Step::Standardize),
            ("lead_lag", None) => Ok(Step::LeadLag),
            ("add_time", None) => Ok(Step::AddTime { scale: 1.0 }),
            ("add_time", Some(a)) => a
                .parse()
                .map(|scale| Step::AddTime { scale })
                .map_err(|_| bad(format!("bad time scale `{a}`"))),
            ("subsample", Some(a)) => a
                .parse()
                .map(|stride| Step::Subsample { stride })
                .map_err(|_| bad(format!("bad stride `{a}`"))),
            _ => Err(bad(format!("unknown step `{s}`"))),
        }
    }
}

impl std::fmt::Display for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Step::Standardize => write!(f, "standardize"),
            Step::AddTime { scale } => write!(f, "add_time:{scale}"),
            Step::LeadLag => write!(f, "lead_lag"),
            Step::Subsample { stride } => write!(f, "subsample:{stride}"),
        }
    }
}

/// Applies `steps` jointly to several datasets. `standardize` fits its
/// statistics on the union of all of them.
pub fn apply_pipeline(datasets: &[Dataset], steps: &[Step]) -> Result<Vec<Dataset>> {
    let mut out = datasets.to_vec();
    for step in steps {
        out = match step {
            Step::Standardize => {
                let stats = Standardization::fit(out.iter().flat_map(|d| d.sequences()))?;
                out.iter()
                    .map(|d| d.map(|s| stats.apply(s)))
                    .collect::<Result<_>>()?
            }
            Step::AddTime { scale } => out
                .iter()
                .map(|d| d.map(|s| add_time(s, *scale)))
                .collect::<Result<_>>()?,
            Step::LeadLag => out.iter().map(|d| d.map(lead_lag)).collect::<Result<_>>()?,
            Step::Subsample { stride } => out
                .iter()
                .map(|d| d.map(|s| subsample(s, *stride)))
                .collect::<Result<_>>()?,
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seq1(v: &[f64]) -> Sequence {
        Sequence::from_flat(1, v.to_vec()).unwrap()
    }

    #[test]
    fn add_time_examples() {
        assert_eq!(add_time(&seq1(&[5.0]), 1.0).unwrap().as_flat(), &[0.0, 5.0]);
        assert_eq!(
            add_time(&seq1(&[3.0, 7.0]), 1.0).unwrap().as_flat(),
            &[0.0, 3.0, 1.0, 7.0]
        );
        let t = add_time(&seq1(&[0.0; 5]), 2.0).unwrap();
        let times: Vec<f64> = t.points().map(|p| p[0]).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(add_time(&seq1(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn lead_lag_examples() {
        let out = lead_lag(&seq1(&[1.0, 2.0])).unwrap();
        assert_eq!(out.dim(), 2);
        assert_eq!(out.as_flat(), &[1.0, 1.0, 2.0, 1.0, 2.0, 2.0]);

        let c = lead_lag(&seq1(&[4.0, 4.0, 4.0])).unwrap();
        assert!(c.as_flat().iter().all(|&v| v == 4.0));

        for n in 1..12 {
            let x = Sequence::from_flat(2, (0..2 * n).map(|v| v as f64).collect()).unwrap();
            let ll = lead_lag(&x).unwrap();
            assert_eq!(ll.n_points(), 2 * (n - 1) + 1);
            assert_eq!(ll.dim(), 4);
        }
    }

    #[test]
    fn subsample_examples() {
        let x = seq1(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(subsample(&x, 1).unwrap(), x);
        assert_eq!(subsample(&x, 2).unwrap().as_flat(), &[0.0, 2.0, 4.0]);
        let y = seq1(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(subsample(&y, 4).unwrap().as_flat(), &[0.0, 4.0, 5.0]);
        assert!(subsample(&y, 0).is_err());
    }

    #[test]
    fn standardize_by_hand() {
        let ds = Dataset::new(
            vec![
                Sequence::from_points(&[[1.0, 5.0], [3.0, 5.0]]).unwrap(),
                Sequence::from_points(&[[5.0, 5.0], [7.0, 5.0]]).unwrap(),
            ],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let (out, stats) = standardize(&ds).unwrap();
        assert_eq!(stats.mean, vec![4.0, 5.0]);
        assert_relative_eq!(stats.std[0], 5.0f64.sqrt(), max_relative = 1e-15);
        assert_eq!(stats.std[1], 1.0);
        assert!(out
            .sequences()
            .iter()
            .flat_map(|s| s.points())
            .all(|p| p[1] == 0.0));

        let (again, _) = standardize(&out).unwrap();
        for (a, b) in again.sequences().iter().zip(out.sequences()) {
            for (u, v) in a.as_flat().iter().zip(b.as_flat()) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dataset_rejects_duplicates() {
        let s = seq1(&[1.0]);
        assert!(matches!(
            Dataset::new(vec![s.clone(), s], vec!["a".into(), "a".into()]),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn step_parsing_round_trips() {
        for text in ["standardize", "add_time:2.5", "lead_lag", "subsample:3"] {
            let step: Step = text.parse().unwrap();
            assert_eq!(step.to_string(), text);
        }
        assert_eq!(
            "add_time".parse::<Step>().unwrap(),
            Step::AddTime { scale: 1.0 }
        );
        assert!("subsample".parse::<Step>().is_err());
        assert!("smooth".parse::<Step>().is_err());
    }
}
