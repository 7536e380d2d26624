//! Monte Carlo studies: Huber tuning (Table 1), univariate coverage and
//! accuracy (Tables 2 and 3), and bivariate region coverage (Table 4).

use rayon::prelude::*;

use super::report::{Cell, CellKind, ExperimentReport, ReportRow};
use super::ExperimentConfig;
use crate::bootstrap::{self, Centering, ResampleRule};
use crate::inference::{region_contains, RegionSpec};
use crate::loss::tuning_from_alpha;
use crate::mestimator::{fit, solve_location};
use crate::rng::{stream_rng, StreamRng};
use crate::stable::{sample_model, sample_univariate_stable, StableSpec};
use crate::{sandwich, Error, LossDescriptor, LossSpec, Result};

pub(crate) fn fmt_alpha(a: f64) -> String {
    if (a * 10.0 - (a * 10.0).round()).abs() < 1e-9 {
        format!("{a:.1}")
    } else {
        a.to_string()
    }
}

pub(crate) fn fmt_pair(a: &[f64]) -> String {
    format!("({})", a.iter().map(|&x| fmt_alpha(x)).collect::<Vec<_>>().join(","))
}

fn fmt_level(l: f64) -> String {
    format!("{l:.2}")
}

/// Univariate sample for Monte Carlo repeat `rep`, together with the stream
/// it was drawn from (later draws continue on the same stream).
pub fn univariate_draw(seed: u64, tag: &str, alpha: f64, mu: f64, n: usize, rep: usize) -> Result<(Vec<f64>, StreamRng)> {
    let mut rng = stream_rng(seed, &format!("{tag}/alpha={}", fmt_alpha(alpha)), rep as u64);
    let xs = sample_univariate_stable(alpha, n, &mut rng)?.into_iter().map(|e| mu + e).collect();
    Ok((xs, rng))
}

/// Average `|mu_hat - mu|` over repeats for every `(alpha, c)` pair; all
/// constants for one tail index share the same samples.
pub fn run_table1(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let n = config.n[0];
    let mu = config.mu[0];
    let descs: Vec<LossDescriptor<f64>> = config.c_grid.iter().map(|&c| LossDescriptor::huber(c)).collect();
    let mut rows = Vec::with_capacity(config.alphas.len());
    for alpha in config.alphas.iter().map(|a| a[0]) {
        let devs = (0..config.replications)
            .into_par_iter()
            .map(|rep| {
                let (xs, _) = univariate_draw(config.seed, "table1", alpha, mu, n, rep)?;
                descs
                    .iter()
                    .map(|d| Ok((solve_location(&xs, d)?.location - mu).abs()))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let cells = (0..descs.len())
            .map(|k| Cell::mean_of(&devs.iter().map(|d| d[k]).collect::<Vec<_>>()))
            .collect();
        rows.push(ReportRow { labels: vec![fmt_alpha(alpha)], cells });
    }
    Ok(ExperimentReport {
        name: "table1".into(),
        kind: CellKind::Deviation,
        row_header: vec!["alpha".into()],
        columns: config.c_grid.iter().map(|c| c.to_string()).collect(),
        rows,
        config: config.clone(),
        notes: vec![format!("average |mu_hat_M - mu| with n={n}, mu={mu}")],
    })
}

pub struct Table23 {
    pub table2: ExperimentReport,
    pub table3: ExperimentReport,
}

const TABLE2_RULES: [ResampleRule; 3] = [ResampleRule::LogLog, ResampleRule::Power(0.9), ResampleRule::Power(0.95)];

struct Table2Repeat {
    mest: Vec<bool>,
    mean: Vec<Vec<bool>>,
    dev_mest: f64,
    dev_mean: f64,
}

fn covers((lo, hi): (f64, f64), mu: f64) -> bool {
    lo <= mu && mu <= hi
}

/// Coverage of percentile bootstrap intervals (M-estimate with `m = n`,
/// sample mean with `m < n`) and mean absolute deviations of both
/// estimators.
pub fn run_table2_table3(config: &ExperimentConfig) -> Result<Table23> {
    config.validate()?;
    let n = config.n[0];
    let mu = config.mu[0];
    let b = config.bootstrap;
    let levels = &config.levels;
    let sizes: Vec<usize> = TABLE2_RULES.iter().map(|r| r.size(n)).collect();

    let mut cov_rows = Vec::new();
    let mut mad_mest = Vec::new();
    let mut mad_mean = Vec::new();
    let mut notes = vec![format!("n={n}, mu={mu}, B={b}, replications={}", config.replications)];
    for alpha in config.alphas.iter().map(|a| a[0]) {
        let c = tuning_from_alpha(alpha)?;
        notes.push(format!("alpha={}: Huber c={c}", fmt_alpha(alpha)));
        let desc = LossDescriptor::huber(c);
        let repeats = (0..config.replications)
            .into_par_iter()
            .map(|rep| -> Result<Table2Repeat> {
                let (xs, mut rng) = univariate_draw(config.seed, "table2", alpha, mu, n, rep)?;
                let mu_hat = solve_location(&xs, &desc)?.location;
                let mean = xs.iter().sum::<f64>() / n as f64;
                let mest_draws = bootstrap::mest_bootstrap_estimates(&xs, &desc, b, &mut rng)?;
                let mest = levels
                    .iter()
                    .map(|&l| Ok(covers(bootstrap::percentile_interval(&mest_draws, l)?, mu)))
                    .collect::<Result<_>>()?;
                let mean_cov = sizes
                    .iter()
                    .map(|&m| {
                        let draws = bootstrap::mean_bootstrap_estimates(&xs, m, b, &mut rng)?;
                        levels
                            .iter()
                            .map(|&l| Ok(covers(bootstrap::percentile_interval(&draws, l)?, mu)))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?;
                Ok(Table2Repeat { mest, mean: mean_cov, dev_mest: (mu_hat - mu).abs(), dev_mean: (mean - mu).abs() })
            })
            .collect::<Result<Vec<_>>>()?;

        let total = repeats.len();
        for (li, &level) in levels.iter().enumerate() {
            let mut cells = vec![Cell::proportion(repeats.iter().filter(|r| r.mest[li]).count(), total)];
            for k in 0..sizes.len() {
                cells.push(Cell::proportion(repeats.iter().filter(|r| r.mean[k][li]).count(), total));
            }
            cov_rows.push(ReportRow { labels: vec![fmt_alpha(alpha), fmt_level(level)], cells });
        }
        mad_mest.push(Cell::mean_of(&repeats.iter().map(|r| r.dev_mest).collect::<Vec<_>>()));
        mad_mean.push(Cell::mean_of(&repeats.iter().map(|r| r.dev_mean).collect::<Vec<_>>()));
    }
    let mut columns = vec!["M-estimation".to_string()];
    columns.extend(TABLE2_RULES.iter().zip(&sizes).map(|(r, m)| format!("{} ({m})", r.label())));

    let table2 = ExperimentReport {
        name: "table2".into(),
        kind: CellKind::Coverage,
        row_header: vec!["alpha".into(), "level".into()],
        columns,
        rows: cov_rows,
        config: config.clone(),
        notes: notes.clone(),
    };
    let table3 = ExperimentReport {
        name: "table3".into(),
        kind: CellKind::Deviation,
        row_header: vec!["estimator".into()],
        columns: config.alphas.iter().map(|a| fmt_alpha(a[0])).collect(),
        rows: vec![
            ReportRow { labels: vec!["|mu_M - mu|".into()], cells: mad_mest },
            ReportRow { labels: vec!["|xbar - mu|".into()], cells: mad_mean },
        ],
        config: config.clone(),
        notes,
    };
    Ok(Table23 { table2, table3 })
}

/// Coverage indicators of the bootstrap-calibrated region at each level for
/// one bivariate Monte Carlo repeat.
pub fn table4_repeat(config: &ExperimentConfig, alphas: &[f64], n: usize, rep: usize) -> Result<Vec<bool>> {
    let tag = format!("table4/alpha={}/n={n}", fmt_pair(alphas));
    let mut rng = stream_rng(config.seed, &tag, rep as u64);
    let spec = StableSpec::new(alphas.to_vec(), config.mu.clone())?.with_series_terms(config.series_terms)?;
    let sample = sample_model(&spec, n, &mut rng)?;
    let loss = LossSpec::huber_for_alphas(alphas)?;
    let est = fit(&sample, &loss)?;
    let cov = sandwich::estimate(&est.residuals, &loss)?;
    let run = bootstrap::residual_bootstrap(&sample, &loss, config.bootstrap, &config.levels, &mut rng, Centering::Raw)?;
    run.tau_hat
        .iter()
        .map(|t| {
            if !(t.tau > 0.0) {
                return Err(Error::DegenerateBootstrap { discarded: run.discarded, requested: run.b });
            }
            let region = RegionSpec::with_inverse(est.mu_hat.clone(), cov.sigma_hat.clone(), cov.sigma_inv.clone(), n, t.tau)?;
            region_contains(&region, &config.mu)
        })
        .collect()
}

/// Coverage of the bootstrap-calibrated confidence region for bivariate
/// LePage errors over the `(alpha pair) x n x level` grid.
pub fn run_table4(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut columns = Vec::new();
    for &n in &config.n {
        for &l in &config.levels {
            columns.push(format!("n={n} I{}", fmt_level(l)));
        }
    }
    let mut rows = Vec::new();
    let mut notes = vec![format!(
        "mu={:?}, B={}, replications={}, K={}",
        config.mu, config.bootstrap, config.replications, config.series_terms
    )];
    for alphas in &config.alphas {
        let cs: Vec<f64> = alphas.iter().map(|&a| tuning_from_alpha(a)).collect::<Result<_>>()?;
        notes.push(format!("alpha={}: Huber c={cs:?}", fmt_pair(alphas)));
        let mut cells = Vec::new();
        for &n in &config.n {
            let outcomes: Vec<Result<Vec<bool>>> = (0..config.replications)
                .into_par_iter()
                .map(|rep| table4_repeat(config, alphas, n, rep))
                .collect();
            let mut ok = Vec::with_capacity(outcomes.len());
            let mut failed = 0;
            for o in outcomes {
                match o {
                    Ok(v) => ok.push(v),
                    Err(e) if e.is_numerical() => failed += 1,
                    Err(e) => return Err(e),
                }
            }
            if failed > 0 {
                notes.push(format!("alpha={}, n={n}: {failed} repeats failed numerically and were excluded", fmt_pair(alphas)));
            }
            if ok.is_empty() {
                return Err(Error::Internal(format!("every repeat failed for alpha={}, n={n}", fmt_pair(alphas))));
            }
            for li in 0..config.levels.len() {
                cells.push(Cell::proportion(ok.iter().filter(|v| v[li]).count(), ok.len()));
            }
        }
        rows.push(ReportRow { labels: vec![fmt_pair(alphas)], cells });
    }
    Ok(ExperimentReport {
        name: "table4".into(),
        kind: CellKind::Coverage,
        row_header: vec!["alphas".into()],
        columns,
        rows,
        config: config.clone(),
        notes,
    })
}
