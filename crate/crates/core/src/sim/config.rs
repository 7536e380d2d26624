use serde::{Deserialize, Deserializer, Serialize};

use crate::stable::DEFAULT_SERIES_TERMS;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Table1,
    Table2,
    Table3,
    Table4,
    Fig1,
    Fig2Density,
    Fig3Ellipse,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Table3 => "table3",
            Experiment::Table4 => "table4",
            Experiment::Fig1 => "fig1",
            Experiment::Fig2Density => "fig2-density",
            Experiment::Fig3Ellipse => "fig3-ellipse",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Error::invalid(format!("unknown experiment {name:?}")))
    }
}

/// Replication presets: `paper` matches the published study, `desk` is a
/// reduced run that finishes in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(Error::invalid(format!("unknown scale {s:?}, expected desk or paper"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub scale: Scale,
    /// Sample sizes; only `table4` uses more than the first.
    pub n: Vec<usize>,
    pub replications: usize,
    #[serde(rename = "B")]
    pub bootstrap: usize,
    /// Tail-index grid; each entry has one index per coordinate.
    pub alphas: Vec<Vec<f64>>,
    pub c_grid: Vec<f64>,
    pub levels: Vec<f64>,
    pub mu: Vec<f64>,
    pub seed: u64,
    pub series_terms: usize,
    /// Grid points per axis for the density figure.
    pub grid_points: usize,
    /// Boundary points for the ellipse figure.
    pub ellipse_points: usize,
}

/// Partial configuration read from `--config`; present fields replace the
/// preset values.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<Experiment>,
    pub scale: Option<Scale>,
    #[serde(default, deserialize_with = "one_or_many_usize")]
    pub n: Option<Vec<usize>>,
    pub replications: Option<usize>,
    #[serde(rename = "B", alias = "bootstrap")]
    pub bootstrap: Option<usize>,
    #[serde(default, deserialize_with = "alpha_grid")]
    pub alphas: Option<Vec<Vec<f64>>>,
    pub c_grid: Option<Vec<f64>>,
    pub levels: Option<Vec<f64>>,
    #[serde(default, deserialize_with = "one_or_many_f64")]
    pub mu: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub series_terms: Option<usize>,
    pub grid_points: Option<usize>,
    pub ellipse_points: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> From<OneOrMany<T>> for Vec<T> {
    fn from(v: OneOrMany<T>) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

fn one_or_many_usize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<usize>>, D::Error> {
    Ok(Option::<OneOrMany<usize>>::deserialize(d)?.map(Into::into))
}

fn one_or_many_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<f64>>, D::Error> {
    Ok(Option::<OneOrMany<f64>>::deserialize(d)?.map(Into::into))
}

// `[1.1, 1.3]` is a univariate grid; `[[1.2, 1.1], [1.5, 1.5]]` a bivariate one.
fn alpha_grid<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Vec<f64>>>, D::Error> {
    Ok(Option::<Vec<OneOrMany<f64>>>::deserialize(d)?.map(|v| v.into_iter().map(Into::into).collect()))
}

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    // Rounded to tenths/halves so labels print cleanly.
    (0..count).map(|k| ((start + step * k as f64) * 100.0).round() / 100.0).collect()
}

impl ExperimentConfig {
    pub fn preset(experiment: Experiment, scale: Scale) -> Self {
        let paper = scale == Scale::Paper;
        let mut cfg = ExperimentConfig {
            experiment,
            scale,
            n: vec![100],
            replications: if paper { 1_000 } else { 200 },
            bootstrap: if paper { 2_000 } else { 500 },
            alphas: vec![],
            c_grid: vec![],
            levels: vec![0.90, 0.95, 0.99],
            mu: vec![1.0],
            seed: 20_240_601,
            series_terms: DEFAULT_SERIES_TERMS,
            grid_points: 100,
            ellipse_points: 200,
        };
        match experiment {
            Experiment::Table1 | Experiment::Fig1 => {
                cfg.replications = if paper { 10_000 } else { 1_000 };
                cfg.alphas = grid(1.1, 0.1, 10).into_iter().map(|a| vec![a]).collect();
                cfg.c_grid = grid(0.5, 0.5, 9);
                cfg.mu = vec![3.0];
                cfg.levels = vec![];
            }
            Experiment::Table2 | Experiment::Table3 => {
                cfg.alphas = [1.1, 1.3, 1.5, 1.8, 2.0].iter().map(|&a| vec![a]).collect();
            }
            Experiment::Table4 => {
                cfg.n = vec![100, 200, 500];
                cfg.bootstrap = if paper { 3_000 } else { 500 };
                cfg.alphas = vec![vec![1.2, 1.1], vec![1.5, 1.5], vec![1.5, 1.9], vec![1.3, 1.8], vec![2.0, 1.2]];
                cfg.mu = vec![1.0, 14.0];
            }
            Experiment::Fig2Density => {
                cfg.n = vec![1_000];
                cfg.replications = 1;
                cfg.alphas = vec![vec![1.3, 1.8], vec![1.5, 1.5]];
                cfg.mu = vec![1.0, 14.0];
                cfg.levels = vec![];
            }
            Experiment::Fig3Ellipse => {
                cfg.replications = 1;
                cfg.bootstrap = if paper { 3_000 } else { 500 };
                cfg.alphas = vec![vec![1.5, 1.5]];
                cfg.mu = vec![1.0, 14.0];
                cfg.levels = vec![0.95];
            }
        }
        cfg
    }

    /// Preset for the experiment named in `overrides` (or `fallback`) at the
    /// requested scale, with the overrides applied.
    pub fn resolve(fallback: Experiment, scale: Option<Scale>, overrides: ConfigOverrides) -> Result<Self> {
        let experiment = overrides.experiment.unwrap_or(fallback);
        let scale = scale.or(overrides.scale).unwrap_or_default();
        let mut cfg = Self::preset(experiment, scale);
        let o = overrides;
        if let Some(v) = o.n {
            cfg.n = v;
        }
        if let Some(v) = o.replications {
            cfg.replications = v;
        }
        if let Some(v) = o.bootstrap {
            cfg.bootstrap = v;
        }
        if let Some(v) = o.alphas {
            cfg.alphas = v;
        }
        if let Some(v) = o.c_grid {
            cfg.c_grid = v;
        }
        if let Some(v) = o.levels {
            cfg.levels = v;
        }
        if let Some(v) = o.mu {
            cfg.mu = v;
        }
        if let Some(v) = o.seed {
            cfg.seed = v;
        }
        if let Some(v) = o.series_terms {
            cfg.series_terms = v;
        }
        if let Some(v) = o.grid_points {
            cfg.grid_points = v;
        }
        if let Some(v) = o.ellipse_points {
            cfg.ellipse_points = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str, fallback: Experiment, scale: Option<Scale>) -> Result<Self> {
        let overrides: ConfigOverrides =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad config: {e}")))?;
        Self::resolve(fallback, scale, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return bad("every sample size must be at least 2".into());
        }
        if self.alphas.is_empty() {
            return bad("tail-index grid is empty".into());
        }
        let dim = self.mu.len();
        if dim == 0 {
            return bad("mu must have at least one coordinate".into());
        }
        for a in &self.alphas {
            if a.len() != dim {
                return bad(format!("tail-index entry {a:?} does not match mu of dimension {dim}"));
            }
            if a.iter().any(|&x| !(x > 1.0 && x <= 2.0)) {
                return bad(format!("tail indices must lie in (1, 2], got {a:?}"));
            }
        }
        if self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return bad("levels must lie in (0, 1)".into());
        }
        if self.series_terms == 0 {
            return bad("series_terms must be positive".into());
        }
        match self.experiment {
            Experiment::Table1 | Experiment::Fig1 => {
                if self.c_grid.is_empty() || self.c_grid.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
                    return bad("c_grid must be non-empty and positive".into());
                }
                if dim != 1 {
                    return bad("table1 is univariate".into());
                }
            }
            Experiment::Table2 | Experiment::Table3 => {
                if dim != 1 {
                    return bad("table2/table3 are univariate".into());
                }
                if self.levels.is_empty() || self.bootstrap == 0 {
                    return bad("table2 needs levels and B >= 1".into());
                }
            }
            Experiment::Table4 | Experiment::Fig3Ellipse => {
                if dim != 2 {
                    return bad("table4 and fig3-ellipse are bivariate".into());
                }
                if self.levels.is_empty() || self.bootstrap == 0 {
                    return bad("bootstrap experiments need levels and B >= 1".into());
                }
                if self.ellipse_points < 3 {
                    return bad("ellipse_points must be at least 3".into());
                }
            }
            Experiment::Fig2Density => {
                if dim != 2 {
                    return bad("fig2-density is bivariate".into());
                }
                if self.grid_points < 2 {
                    return bad("grid_points must be at least 2".into());
                }
            }
        }
        Ok(())
    }
}
