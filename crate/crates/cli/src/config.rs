//! Run configuration: defaults, then a TOML (or report JSON) file, then flags,
//! then optional per-line grid overlays.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use sigkern::{
    Estimator, KernelFamily, NormalizationParams, SigKernelConfig, StaticKernelSpec, Step,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Dp,
    Pde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub family: KernelFamily,
    pub bandwidth: f64,
    pub scale: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            family: KernelFamily::Linear,
            bandwidth: 1.0,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodSection {
    pub name: MethodName,
    pub level: usize,
    pub dyadic_order: u32,
}

impl Default for MethodSection {
    fn default() -> Self {
        MethodSection {
            name: MethodName::Dp,
            level: 4,
            dyadic_order: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationSection {
    pub enabled: bool,
    pub c: f64,
    pub alpha: f64,
}

impl Default for NormalizationSection {
    fn default() -> Self {
        let p = NormalizationParams::default();
        NormalizationSection {
            enabled: false,
            c: p.c,
            alpha: p.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSection {
    pub permutations: usize,
    pub alpha: f64,
    pub estimator: Estimator,
}

impl Default for TestSection {
    fn default() -> Self {
        TestSection {
            permutations: 200,
            alpha: 0.05,
            estimator: Estimator::Biased,
        }
    }
}

/// Fully resolved settings of one run. Field order is the key order of every
/// JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSection,
    pub method: MethodSection,
    pub normalization: NormalizationSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_weights: Option<Vec<f64>>,
    pub preprocess: Vec<String>,
    pub test: TestSection,
    pub workers: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kernel: KernelSection::default(),
            method: MethodSection::default(),
            normalization: NormalizationSection::default(),
            level_weights: None,
            preprocess: Vec::new(),
            test: TestSection::default(),
            workers: 1,
            seed: 0,
        }
    }
}

/// Command-line mirror of [`RunConfig`]; every flag overrides the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigArgs {
    /// TOML config file, or a JSON report whose embedded config is reused.
    #[arg(long, value_name = "FILE")]
    pub config: Option<std::path::PathBuf>,
    /// Static kernel: linear, rbf or exponential.
    #[arg(long, value_name = "FAMILY")]
    pub kernel: Option<KernelFamily>,
    #[arg(long, allow_negative_numbers = true)]
    pub bandwidth: Option<f64>,
    #[arg(
        long = "kernel-scale",
        allow_negative_numbers = true,
        value_name = "SCALE"
    )]
    pub kernel_scale: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodName>,
    /// Truncation level for the dp method.
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long = "dyadic-order")]
    pub dyadic_order: Option<u32>,
    /// Turn on robust normalization (dp only).
    #[arg(long)]
    pub normalize: bool,
    #[arg(long = "norm-C", allow_negative_numbers = true, value_name = "C")]
    pub norm_c: Option<f64>,
    #[arg(
        long = "norm-alpha",
        allow_negative_numbers = true,
        value_name = "ALPHA"
    )]
    pub norm_alpha: Option<f64>,
    /// Comma-separated weights for levels 0..=M (dp only).
    #[arg(
        long = "level-weights",
        allow_negative_numbers = true,
        value_delimiter = ',',
        value_name = "W"
    )]
    pub level_weights: Option<Vec<f64>>,
    /// Preprocessing steps in order: standardize, add_time[:scale], lead_lag, subsample:stride.
    #[arg(long, value_delimiter = ',', value_name = "STEPS")]
    pub preprocess: Option<Vec<String>>,
    #[arg(short = 'B', long)]
    pub permutations: Option<usize>,
    /// Significance level of the two-sample test.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = parse_estimator)]
    pub estimator: Option<Estimator>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    match s {
        "biased" => Ok(Estimator::Biased),
        "unbiased" => Ok(Estimator::Unbiased),
        _ => Err(format!("expected `biased` or `unbiased`, got `{s}`")),
    }
}

fn load_file(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let bad = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        let mut value: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(|e| bad(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| bad(e.to_string()))
    }
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => load_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.kernel {
            cfg.kernel.family = v;
        }
        if let Some(v) = self.bandwidth {
            cfg.kernel.bandwidth = v;
        }
        if let Some(v) = self.kernel_scale {
            cfg.kernel.scale = v;
        }
        if let Some(v) = self.method {
            cfg.method.name = v;
        }
        if let Some(v) = self.level {
            cfg.method.level = v;
        }
        if let Some(v) = self.dyadic_order {
            cfg.method.dyadic_order = v;
        }
        if self.normalize {
            cfg.normalization.enabled = true;
        }
        if let Some(v) = self.norm_c {
            cfg.normalization.c = v;
        }
        if let Some(v) = self.norm_alpha {
            cfg.normalization.alpha = v;
        }
        if let Some(v) = &self.level_weights {
            cfg.level_weights = Some(v.clone());
        }
        if let Some(v) = &self.preprocess {
            cfg.preprocess = v.clone();
        }
        if let Some(v) = self.permutations {
            cfg.test.permutations = v;
        }
        if let Some(v) = self.alpha {
            cfg.test.alpha = v;
        }
        if let Some(v) = self.estimator {
            cfg.test.estimator = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.canonicalize()?;
        Ok(cfg)
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    /// Validates everything and rewrites preprocessing steps in canonical form.
    pub fn canonicalize(&mut self) -> Result<(), CliError> {
        self.preprocess = self.steps()?.iter().map(ToString::to_string).collect();
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.test.permutations == 0 {
            return Err(CliError::Config("permutations must be at least 1".into()));
        }
        if !(self.test.alpha > 0.0 && self.test.alpha < 1.0) {
            return Err(CliError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.test.alpha
            )));
        }
        self.kernel_config()?;
        Ok(())
    }

    pub fn steps(&self) -> Result<Vec<Step>, CliError> {
        self.preprocess
            .iter()
            .map(|s| s.parse::<Step>().map_err(CliError::from))
            .collect()
    }

    pub fn kernel_config(&self) -> Result<SigKernelConfig, CliError> {
        let spec = StaticKernelSpec {
            family: self.kernel.family,
            bandwidth: self.kernel.bandwidth,
            scale: self.kernel.scale,
        };
        let mut cfg = match self.method.name {
            MethodName::Dp => SigKernelConfig::dp(spec, self.method.level),
            MethodName::Pde => SigKernelConfig::pde(spec, self.method.dyadic_order),
        };
        if let Some(w) = &self.level_weights {
            cfg = cfg.with_level_weights(w.clone());
        }
        if self.normalization.enabled {
            cfg = cfg.with_normalization(NormalizationParams {
                c: self.normalization.c,
                alpha: self.normalization.alpha,
            });
        }
        cfg.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Applies a JSON overlay such as `{"kernel": {"bandwidth": 0.5}}`.
    pub fn overlay(&self, overlay: Value) -> Result<RunConfig, CliError> {
        let mut value = serde_json::to_value(self).expect("config serializes");
        merge(&mut value, overlay);
        let mut out: RunConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        out.canonicalize()?;
        Ok(out)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Reads a grid file: one JSON overlay object per non-blank line.
/// Overlays may only change kernel, method, normalization and level weights.
pub fn load_grid(path: &Path, base: &RunConfig) -> Result<Vec<RunConfig>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |m: String| CliError::Config(format!("{}: line {}: {m}", path.display(), i + 1));
        let value: Value = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        if !value.is_object() {
            return Err(at("overlay must be a JSON object".into()));
        }
        let cfg = base.overlay(value).map_err(|e| at(e.to_string()))?;
        if cfg.preprocess != base.preprocess
            || cfg.test != base.test
            || cfg.workers != base.workers
            || cfg.seed != base.seed
        {
            return Err(at(
                "overlays may only change kernel, method, normalization and level_weights".into(),
            ));
        }
        out.push(cfg);
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{}: empty grid", path.display())));
    }
    Ok(out)
}
