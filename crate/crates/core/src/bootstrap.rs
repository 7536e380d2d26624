//! Residual bootstrap for the M-estimate and the univariate resampling
//! baselines.
//!
//! Each replicate draws from its own stream derived from a master seed taken
//! from the caller's generator, so serial and parallel runs agree bit for bit.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::inference::RegionSpec;
use crate::mestimator::{fit, residuals, solve_location};
use crate::rng::{stream_rng, StreamRng};
use crate::{sandwich, Error, LossDescriptor, LossSpec, Matrix, Result, Sample, Scalar};

/// Largest tolerated fraction of discarded replicates.
pub const MAX_DISCARD_FRACTION: f64 = 0.01;

/// Order statistic at 1-based rank `ceil(q * len)`.
pub fn percentile<T: Scalar>(values: &[T], q: T) -> Result<T> {
    if values.is_empty() {
        return Err(Error::invalid("percentile of an empty set"));
    }
    if !(q > T::zero() && q <= T::one()) {
        return Err(Error::invalid(format!("percentile level must lie in (0, 1], got {q}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("percentile input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(sorted[percentile_rank(sorted.len(), q)])
}

// Zero-based index of rank ceil(q * len); the product is nudged down so that
// e.g. 0.95 * 100 lands on 95 rather than 96.
fn percentile_rank<T: Scalar>(len: usize, q: T) -> usize {
    let prod = q.to_f64().unwrap_or(1.0) * len as f64;
    let rank = (prod - 1e-9 * prod.max(1.0)).ceil().max(1.0) as usize;
    rank.min(len) - 1
}

/// Equal-tailed percentile interval at confidence `level`.
pub fn percentile_interval<T: Scalar>(values: &[T], level: T) -> Result<(T, T)> {
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let tail = (T::one() - level) * T::c(0.5);
    Ok((percentile(values, tail)?, percentile(values, T::one() - tail)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// Resample `e_i - mean(e)`. The pool then has a nonzero mean score, so
    /// bootstrap estimates are off-centre by roughly `mean(e)`.
    Mean,
    /// Resample `e_i = X_i - mu_hat` as they are; their scores sum to zero.
    #[default]
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelThreshold<T> {
    pub level: T,
    pub tau: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapRun<T: Scalar> {
    #[serde(rename = "B")]
    pub b: usize,
    pub centering: Centering,
    pub mu_hat: Vec<T>,
    pub c_star: Vec<T>,
    /// Percentiles of `c_star`, in the order the levels were requested.
    pub tau_hat: Vec<LevelThreshold<T>>,
    /// Replicates regenerated because `S*` was singular or degenerate.
    pub discarded: usize,
    /// Mean score of the resampled residual pool; zero only approximately.
    pub pool_mean_score: Vec<T>,
    /// `B x p` bootstrap estimates.
    #[serde(skip)]
    pub mu_star: Matrix<T>,
}

impl<T: Scalar> BootstrapRun<T> {
    pub fn tau(&self, level: T) -> Option<T> {
        self.tau_hat.iter().find(|t| t.level == level).map(|t| t.tau)
    }

    pub fn discard_fraction(&self) -> f64 {
        self.discarded as f64 / self.b as f64
    }
}

fn centered_pool<T: Scalar>(e: &Matrix<T>, centering: Centering) -> Matrix<T> {
    match centering {
        Centering::Raw => e.clone(),
        Centering::Mean => {
            let n = T::from_count(e.rows());
            let means: Vec<T> = (0..e.cols()).map(|j| e.column(j).into_iter().sum::<T>() / n).collect();
            residuals(e, &means).expect("matching dimensions")
        }
    }
}

fn check_levels<T: Scalar>(levels: &[T]) -> Result<()> {
    if let Some(l) = levels.iter().find(|&&l| !(l > T::zero() && l < T::one())) {
        return Err(Error::invalid(format!("levels must lie in (0, 1), got {l}")));
    }
    Ok(())
}

fn master_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.random()
}

fn retry_stream(master: u64, index: usize, attempt: usize) -> StreamRng {
    if attempt == 0 {
        stream_rng(master, "residual-bootstrap", index as u64)
    } else {
        stream_rng(master, &format!("residual-bootstrap/retry-{attempt}"), index as u64)
    }
}

struct Replicate<T> {
    c_star: T,
    mu_star: Vec<T>,
    discarded: usize,
}

/// Residual bootstrap of `C* = n (mu* - mu_hat)ᵀ S*⁻¹ (mu* - mu_hat)`.
pub fn residual_bootstrap<T: Scalar, R: Rng + ?Sized>(
    sample: &Sample<T>,
    loss: &LossSpec<T>,
    b: usize,
    levels: &[T],
    rng: &mut R,
    centering: Centering,
) -> Result<BootstrapRun<T>> {
    if b == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    check_levels(levels)?;
    let est = fit(sample, loss)?;
    let pool = centered_pool(&est.residuals, centering);
    let n = sample.n();
    let p = sample.p();
    let nf = T::from_count(n);
    let master = master_seed(rng);
    let max_discards = (MAX_DISCARD_FRACTION * b as f64).floor() as usize;

    let pool_mean_score = {
        let scores = sandwich::score_table(&pool, loss)?;
        (0..p).map(|j| scores.column(j).into_iter().sum::<T>() / nf).collect()
    };

    let run_one = |index: usize| -> Result<Replicate<T>> {
        let mut discarded = 0;
        for attempt in 0.. {
            if discarded > max_discards {
                return Err(Error::DegenerateBootstrap { discarded, requested: b });
            }
            let mut rng = retry_stream(master, index, attempt);
            let mut data = Vec::with_capacity(n * p);
            for _ in 0..n {
                let row = pool.row(rng.random_range(0..n));
                data.extend(row.iter().zip(&est.mu_hat).map(|(&e, &m)| m + e));
            }
            let star = Sample::new(Matrix::from_row_major(n, p, data)?)?;
            let est_star = fit(&star, loss)?;
            match sandwich::estimate(&est_star.residuals, loss) {
                Ok(cov) => {
                    let d: Vec<T> = est_star.mu_hat.iter().zip(&est.mu_hat).map(|(&a, &m)| a - m).collect();
                    let c_star = nf * cov.sigma_inv.quad_form(&d)?;
                    return Ok(Replicate { c_star: c_star.max(T::zero()), mu_star: est_star.mu_hat, discarded });
                }
                Err(e) if e.is_numerical() => discarded += 1,
                Err(e) => return Err(e),
            }
        }
        unreachable!("attempt loop only exits by return")
    };

    let replicates = (0..b).into_par_iter().map(run_one).collect::<Result<Vec<_>>>()?;
    let discarded = replicates.iter().map(|r| r.discarded).sum();
    if discarded > max_discards {
        return Err(Error::DegenerateBootstrap { discarded, requested: b });
    }
    let c_star: Vec<T> = replicates.iter().map(|r| r.c_star).collect();
    let mu_star = Matrix::from_row_major(b, p, replicates.into_iter().flat_map(|r| r.mu_star).collect())?;
    let tau_hat = levels
        .iter()
        .map(|&level| Ok(LevelThreshold { level, tau: percentile(&c_star, level)? }))
        .collect::<Result<_>>()?;
    Ok(BootstrapRun { b, centering, mu_hat: est.mu_hat, c_star, tau_hat, discarded, pool_mean_score, mu_star })
}

/// Ellipsoid centred at the M-estimate, shaped by the original-sample
/// sandwich covariance, with threshold calibrated by the bootstrap.
pub fn bootstrap_region<T: Scalar, R: Rng + ?Sized>(
    sample: &Sample<T>,
    loss: &LossSpec<T>,
    b: usize,
    level: T,
    rng: &mut R,
) -> Result<RegionSpec<T>> {
    let est = fit(sample, loss)?;
    let cov = sandwich::estimate(&est.residuals, loss)?;
    let run = residual_bootstrap(sample, loss, b, &[level], rng, Centering::Raw)?;
    let tau = run.tau_hat[0].tau;
    if !(tau > T::zero()) {
        return Err(Error::DegenerateBootstrap { discarded: run.discarded, requested: b });
    }
    RegionSpec::with_inverse(est.mu_hat, cov.sigma_hat, cov.sigma_inv, sample.n(), tau)
}

/// How the resample size `m` of the sample-mean bootstrap is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleRule {
    /// `m = floor(n / ln ln n)`.
    LogLog,
    /// `m = floor(n^e)`.
    Power(f64),
    Fixed(usize),
}

impl ResampleRule {
    pub fn size(&self, n: usize) -> usize {
        let nf = n as f64;
        let m = match *self {
            ResampleRule::LogLog => (nf / nf.ln().ln()).floor() as usize,
            ResampleRule::Power(e) => nf.powf(e).floor() as usize,
            ResampleRule::Fixed(m) => m,
        };
        m.clamp(1, n.max(1))
    }

    pub fn label(&self) -> String {
        match *self {
            ResampleRule::LogLog => "m=n/ln(ln(n))".to_string(),
            ResampleRule::Power(e) => format!("m=n^{e}"),
            ResampleRule::Fixed(m) => format!("m={m}"),
        }
    }
}

fn check_univariate<T: Scalar>(values: &[T]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("observations must be finite"));
    }
    Ok(())
}

/// Bootstrap means of `m` centred residuals added back to the sample mean.
pub fn mean_bootstrap_estimates<T: Scalar, R: Rng + ?Sized>(values: &[T], m: usize, b: usize, rng: &mut R) -> Result<Vec<T>> {
    check_univariate(values)?;
    let n = values.len();
    if m == 0 || m > n {
        return Err(Error::invalid(format!("resample size must lie in [1, {n}], got {m}")));
    }
    if b == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    let mean = values.iter().copied().sum::<T>() / T::from_count(n);
    let pool: Vec<T> = values.iter().map(|&x| x - mean).collect();
    let mf = T::from_count(m);
    let master = master_seed(rng);
    Ok((0..b)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream_rng(master, "mean-bootstrap", index as u64);
            let s = (0..m).map(|_| mean + pool[rng.random_range(0..n)]).sum::<T>();
            s / mf
        })
        .collect())
}

/// Percentile interval for the mean from an `m`-out-of-`n` bootstrap of the
/// sample mean.
pub fn mean_bootstrap_ci_mn<T: Scalar, R: Rng + ?Sized>(values: &[T], m: usize, b: usize, level: T, rng: &mut R) -> Result<(T, T)> {
    percentile_interval(&mean_bootstrap_estimates(values, m, b, rng)?, level)
}

/// Bootstrap M-estimates from full-size resamples of the residuals about
/// the M-estimate.
pub fn mest_bootstrap_estimates<T: Scalar, R: Rng + ?Sized>(values: &[T], loss: &LossDescriptor<T>, b: usize, rng: &mut R) -> Result<Vec<T>> {
    check_univariate(values)?;
    loss.validate()?;
    if b == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    let n = values.len();
    let mu_hat = solve_location(values, loss)?.location;
    let pool: Vec<T> = values.iter().map(|&x| x - mu_hat).collect();
    let master = master_seed(rng);
    (0..b)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream_rng(master, "mest-bootstrap", index as u64);
            let star: Vec<T> = (0..n).map(|_| mu_hat + pool[rng.random_range(0..n)]).collect();
            Ok(solve_location(&star, loss)?.location)
        })
        .collect()
}

pub fn mest_bootstrap_ci<T: Scalar, R: Rng + ?Sized>(values: &[T], loss: &LossDescriptor<T>, b: usize, level: T, rng: &mut R) -> Result<(T, T)> {
    percentile_interval(&mest_bootstrap_estimates(values, loss, b, rng)?, level)
}
