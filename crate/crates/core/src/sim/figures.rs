//! Data behind the figures: the tuning curves, bivariate density surfaces,
//! and a fitted confidence ellipse. Rendering is left to external tools.

use std::f64::consts::PI;

use super::report::ExperimentReport;
use super::tables::fmt_pair;
use super::ExperimentConfig;
use crate::bootstrap::{percentile, residual_bootstrap, Centering};
use crate::inference::{ellipse_boundary, RegionSpec};
use crate::io::{write_ellipse, write_sample};
use crate::mestimator::fit;
use crate::rng::stream_rng;
use crate::stable::{sample_model, StableSpec};
use crate::{sandwich, Error, LossSpec, Matrix, Result};

/// Table 1 in long form: `alpha,c,avg_dev,se`.
pub fn emit_fig1(table1: &ExperimentReport) -> Result<(String, String)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "c", "avg_dev", "se"])?;
    for row in &table1.rows {
        for (c, cell) in table1.columns.iter().zip(&row.cells) {
            w.write_record([row.labels[0].clone(), c.clone(), cell.value.to_string(), cell.se.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(("fig1.csv".into(), String::from_utf8(bytes).expect("utf-8")))
}

/// Product-Gaussian kernel density on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub bandwidth: [f64; 2],
    /// `density[i * x2.len() + k]` is the estimate at `(x1[i], x2[k])`.
    pub density: Vec<f64>,
}

fn spread(v: &[f64]) -> Result<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = percentile(v, 0.75)? - percentile(v, 0.25)?;
    let robust = iqr / 1.349;
    Ok(if robust > 0.0 { sd.min(robust) } else { sd })
}

/// Density of a bivariate sample over the box spanned by the 1% and 99%
/// quantiles of each coordinate, with Scott's bandwidth `s_j n^(-1/6)`
/// computed from a robust spread.
pub fn density_grid(points: &Matrix<f64>, grid_points: usize) -> Result<DensityGrid> {
    if points.cols() != 2 || points.rows() < 2 {
        return Err(Error::invalid("density grid needs a bivariate sample with at least 2 rows"));
    }
    if grid_points < 2 {
        return Err(Error::invalid("density grid needs at least 2 points per axis"));
    }
    let n = points.rows();
    let cols = [points.column(0), points.column(1)];
    let mut axes = Vec::with_capacity(2);
    let mut h = [0.0; 2];
    for j in 0..2 {
        let lo = percentile(&cols[j], 0.01)?;
        let hi = percentile(&cols[j], 0.99)?;
        let s = spread(&cols[j])?;
        h[j] = if s > 0.0 { s * (n as f64).powf(-1.0 / 6.0) } else { 1.0 };
        let step = (hi - lo) / (grid_points - 1) as f64;
        axes.push((0..grid_points).map(|k| lo + step * k as f64).collect::<Vec<_>>());
    }
    let norm = 1.0 / (2.0 * PI * h[0] * h[1] * n as f64);
    let mut density = Vec::with_capacity(grid_points * grid_points);
    for &g1 in &axes[0] {
        let k1: Vec<f64> = cols[0].iter().map(|&x| (-0.5 * ((g1 - x) / h[0]).powi(2)).exp()).collect();
        for &g2 in &axes[1] {
            let s: f64 = k1
                .iter()
                .zip(&cols[1])
                .map(|(&a, &y)| a * (-0.5 * ((g2 - y) / h[1]).powi(2)).exp())
                .sum();
            density.push(s * norm);
        }
    }
    let x2 = axes.pop().expect("two axes");
    let x1 = axes.pop().expect("two axes");
    Ok(DensityGrid { x1, x2, bandwidth: h, density })
}

fn to_string(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("utf-8")
}

/// For each tail-index pair: the raw sample and its density grid.
pub fn emit_fig2(config: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    config.validate()?;
    let n = config.n[0];
    let mut files = Vec::new();
    for alphas in &config.alphas {
        let label = fmt_pair(alphas);
        let mut rng = stream_rng(config.seed, &format!("fig2/alpha={label}"), 0);
        let spec = StableSpec::new(alphas.clone(), config.mu.clone())?.with_series_terms(config.series_terms)?;
        let sample = sample_model(&spec, n, &mut rng)?;
        let stem = format!("fig2_{}_{}", alphas[0], alphas[1]);

        let mut buf = Vec::new();
        write_sample(&sample, &mut buf)?;
        files.push((format!("{stem}_sample.csv"), to_string(buf)));

        let grid = density_grid(sample.data(), config.grid_points)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x1", "x2", "density"])?;
        for (i, &a) in grid.x1.iter().enumerate() {
            for (k, &b) in grid.x2.iter().enumerate() {
                w.write_record([a.to_string(), b.to_string(), grid.density[i * grid.x2.len() + k].to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        files.push((format!("{stem}_density.csv"), to_string(bytes)));
    }
    Ok(files)
}

/// One fitted sample, its bootstrap-calibrated region, and the boundary.
pub fn emit_fig3(config: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    config.validate()?;
    let n = config.n[0];
    let alphas = &config.alphas[0];
    let level = config.levels[0];
    let mut rng = stream_rng(config.seed, &format!("fig3/alpha={}", fmt_pair(alphas)), 0);
    let spec = StableSpec::new(alphas.clone(), config.mu.clone())?.with_series_terms(config.series_terms)?;
    let sample = sample_model(&spec, n, &mut rng)?;
    let loss = LossSpec::huber_for_alphas(alphas)?;
    let est = fit(&sample, &loss)?;
    let cov = sandwich::estimate(&est.residuals, &loss)?;
    let run = residual_bootstrap(&sample, &loss, config.bootstrap, &[level], &mut rng, Centering::Raw)?;
    let region = RegionSpec::with_inverse(est.mu_hat, cov.sigma_hat, cov.sigma_inv, n, run.tau_hat[0].tau)?;
    let points = ellipse_boundary(&region, config.ellipse_points)?;

    let mut files = Vec::new();
    let mut buf = Vec::new();
    write_sample(&sample, &mut buf)?;
    files.push(("fig3_sample.csv".to_string(), to_string(buf)));
    let mut buf = Vec::new();
    write_ellipse(&points, &mut buf)?;
    files.push(("fig3_ellipse.csv".to_string(), to_string(buf)));
    files.push(("fig3_region.json".to_string(), serde_json::to_string_pretty(&region.summary()?)? + "\n"));
    Ok(files)
}
