use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::corrmodels::ModelKind;
use crate::forecast::{McsStatistic, RollingScheme};

/// A date written either as a bare TOML date or as a `YYYY-MM-DD` string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DateField {
    Bare(toml::value::Datetime),
    Text(String),
}

impl DateField {
    pub fn parse(&self) -> Result<NaiveDate, String> {
        let s = match self {
            DateField::Bare(d) => d.to_string(),
            DateField::Text(s) => s.clone(),
        };
        NaiveDate::parse_from_str(&s, "%Y-%m-%d").map_err(|_| format!("invalid date {s:?}"))
    }
}

/// Declarative run description. Relative paths are resolved against the
/// directory of the config file. Command-line flags override the matching
/// fields.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    /// Model names; defaults to all nine.
    pub models: Vec<String>,
    pub estimation: EstimationConfig,
    pub rolling: RollingConfig,
    pub mcs: McsConfig,
    pub tests: TestsConfig,
    pub plots: PlotsConfig,
    pub simulate: SimulateConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            models: ModelKind::ALL.iter().map(|k| k.label().to_string()).collect(),
            estimation: EstimationConfig::default(),
            rolling: RollingConfig::default(),
            mcs: McsConfig::default(),
            tests: TestsConfig::default(),
            plots: PlotsConfig::default(),
            simulate: SimulateConfig::default(),
            seed: 1,
            out: PathBuf::from("out"),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Wide CSV with a date column and one column per asset.
    pub returns: Option<PathBuf>,
    /// Treat the `returns` file as prices and convert to percent log returns.
    pub prices: bool,
    /// Optional asset columns to keep, in order.
    pub assets: Option<Vec<String>>,
    /// CSV with a date column and the exogenous index.
    pub exogenous: Option<PathBuf>,
    pub exogenous_column: Option<String>,
    /// TOML regime calendar.
    pub calendar: Option<PathBuf>,
    pub delimiter: char,
    pub date_column: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            returns: None,
            prices: false,
            assets: None,
            exogenous: None,
            exogenous_column: None,
            calendar: None,
            delimiter: ',',
            date_column: "date".into(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    pub start: Option<DateField>,
    pub end: Option<DateField>,
    pub robust_se: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RollingConfig {
    pub window: usize,
    pub block: usize,
    pub blocks: usize,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig { window: 2049, block: 60, blocks: 10 }
    }
}

impl RollingConfig {
    pub fn scheme(&self) -> Result<RollingScheme, String> {
        RollingScheme::new(self.window, self.block, self.blocks).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McsConfig {
    pub alpha: f64,
    pub statistics: Vec<String>,
    pub n_boot: usize,
    pub block_len: usize,
    /// Defaults to the global seed.
    pub seed: Option<u64>,
}

impl Default for McsConfig {
    fn default() -> Self {
        McsConfig { alpha: 0.10, statistics: vec!["T_R".into(), "T_SQ".into()], n_boot: 5000, block_len: 12, seed: None }
    }
}

impl McsConfig {
    pub fn statistics(&self) -> Result<Vec<McsStatistic>, String> {
        self.statistics.iter().map(|s| s.parse().map_err(|e: crate::Error| e.to_string())).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestsConfig {
    pub ljung_box_lags: usize,
    /// Asset index pairs (0-based) for the Wald test; defaults to every pair
    /// involving the last asset.
    pub wald_pairs: Option<Vec<[usize; 2]>>,
    /// `[restricted, unrestricted]` model pairs for LR tests; defaults to the
    /// standard nested comparisons among the requested models.
    pub lr_pairs: Option<Vec<[String; 2]>>,
}

impl Default for TestsConfig {
    fn default() -> Self {
        TestsConfig { ljung_box_lags: 20, wald_pairs: None, lr_pairs: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotsConfig {
    /// Window of the rolling sample correlations.
    pub rolling_window: usize,
    /// Grid points of the transition-function curves.
    pub grid_points: usize,
}

impl Default for PlotsConfig {
    fn default() -> Self {
        PlotsConfig { rolling_window: 60, grid_points: 200 }
    }
}

/// Data-generating process for the `simulate` command. Correlation
/// matrices are given as `[within-group, with-last-asset]` pairs: every
/// pair among the first `n - 1` assets gets the first value and every pair
/// with the last asset the second.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: String,
    pub n_assets: usize,
    pub length: usize,
    pub start: Option<DateField>,
    pub correlations: Vec<[f64; 2]>,
    pub slope: [f64; 2],
    pub location: [f64; 2],
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub psi: [f64; 2],
    /// `[omega, alpha, beta, gamma]` shared by all assets.
    pub garch: [f64; 4],
    /// Median, AR coefficient and innovation s.d. of the log exogenous index.
    pub exogenous: [f64; 3],
    /// Observation indices at which the regime toggles, starting in regime 1.
    pub switch_at: Vec<usize>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            model: "DCC-TUPE".into(),
            n_assets: 5,
            length: 2650,
            start: None,
            correlations: vec![[0.8, -0.3], [0.6, 0.2], [0.7, -0.1], [0.5, 0.3]],
            slope: [5.0, 5.0],
            location: [1.0, 1.0],
            a: [0.03, 0.07],
            b: [0.92, 0.80],
            psi: [0.02, 0.06],
            garch: [0.03, 0.05, 0.88, 0.10],
            exogenous: [1.0, 0.98, 0.12],
            switch_at: vec![550, 1560, 2400],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve(&base);
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.data.returns);
        fix(&mut self.data.exogenous);
        fix(&mut self.data.calendar);
        if self.out.is_relative() {
            self.out = base.join(&self.out);
        }
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>, String> {
        if self.models.is_empty() {
            return Err("no models requested".into());
        }
        self.models.iter().map(|m| m.parse::<ModelKind>().map_err(|e| e.to_string())).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        self.model_kinds()?;
        for (what, p) in
            [("returns", &self.data.returns), ("exogenous", &self.data.exogenous), ("calendar", &self.data.calendar)]
        {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(format!("{what} file {} does not exist", p.display()));
                }
            }
        }
        if !self.data.delimiter.is_ascii() {
            return Err("delimiter must be an ASCII character".into());
        }
        if !(self.mcs.alpha > 0.0 && self.mcs.alpha < 1.0) {
            return Err("mcs.alpha must lie in (0, 1)".into());
        }
        self.mcs.statistics()?;
        Ok(())
    }
}
