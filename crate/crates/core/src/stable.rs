//! Heavy-tailed error generators.
//!
//! Univariate errors are exact symmetric alpha-stable variates (unit scale,
//! Chambers-Mallows-Stuck). Vector errors use the truncated LePage series
//!
//! ```text
//! eps_j = sum_{i=1..K} sign(g_ij) |g_ij|^(1/alpha_j) Gamma_i^(-1/alpha_j)
//! ```
//!
//! where `Gamma_i` are unit-rate Poisson arrival times and `g_i` are points on
//! the unit sphere, so each coordinate carries its own tail index.

use std::f64::consts::{PI, TAU};

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::{Error, Matrix, Result, Sample, Scalar};

pub const DEFAULT_SERIES_TERMS: usize = 10_000;

/// Unit-rate Poisson arrival times `Gamma_1 < ... < Gamma_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalTimes<T> {
    pub gammas: Vec<T>,
}

impl<T: Scalar> ArrivalTimes<T> {
    /// Cumulative sums of the given exponential draws.
    pub fn from_exponentials(draws: &[T]) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::invalid("need at least one arrival"));
        }
        if draws.iter().any(|&e| !(e > T::zero() && e.is_finite())) {
            return Err(Error::invalid("exponential draws must be positive and finite"));
        }
        let mut acc = T::zero();
        let gammas = draws
            .iter()
            .map(|&e| {
                acc = acc + e;
                acc
            })
            .collect();
        Ok(Self { gammas })
    }
}

pub fn arrival_times<T: Scalar, R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<ArrivalTimes<T>> {
    if k == 0 {
        return Err(Error::invalid("number of arrivals must be positive"));
    }
    let mut acc = 0.0f64;
    let gammas = (0..k)
        .map(|_| {
            // Exp1 can return exactly 0 only with negligible probability;
            // keep the sequence strictly increasing regardless.
            let e: f64 = Exp1.sample(rng);
            acc += e.max(f64::MIN_POSITIVE);
            T::c(acc)
        })
        .collect();
    Ok(ArrivalTimes { gammas })
}

/// Points on the unit sphere in `p` dimensions, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample<T> {
    points: Matrix<T>,
}

impl<T: Scalar> SpectralSample<T> {
    /// Wraps user-supplied directions; rows must have unit norm within 1e-12.
    pub fn new(points: Matrix<T>) -> Result<Self> {
        if points.rows() == 0 || points.cols() == 0 {
            return Err(Error::invalid("spectral sample must be non-empty"));
        }
        for (i, r) in points.row_iter().enumerate() {
            let norm = r.iter().map(|&x| x * x).sum::<T>().sqrt();
            if !((norm - T::one()).abs() <= T::c(1e-12).max(T::epsilon() * T::c(4.0))) {
                return Err(Error::invalid(format!("spectral point {i} has norm {norm}")));
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn point(&self, i: usize) -> &[T] {
        self.points.row(i)
    }

    pub fn points(&self) -> &Matrix<T> {
        &self.points
    }
}

fn draw_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    match out.len() {
        1 => out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 },
        2 => {
            let theta = TAU * rng.random::<f64>();
            let (s, c) = theta.sin_cos();
            out[0] = c;
            out[1] = s;
        }
        _ => loop {
            out.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
            let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-150 {
                out.iter_mut().for_each(|v| *v /= norm);
                break;
            }
        },
    }
}

/// I.i.d. uniform points on the unit sphere. For `p = 2` these are
/// `(cos theta, sin theta)` with `theta` uniform on `[0, 2 pi)`; for `p = 1`
/// they are `±1` with equal probability.
pub fn sample_spectral_uniform<T: Scalar, R: Rng + ?Sized>(p: usize, count: usize, rng: &mut R) -> Result<SpectralSample<T>> {
    if p == 0 || count == 0 {
        return Err(Error::invalid("spectral sample needs p >= 1 and count >= 1"));
    }
    let mut data = Vec::with_capacity(p * count);
    let mut dir = vec![0.0f64; p];
    for _ in 0..count {
        draw_direction(rng, &mut dir);
        data.extend(dir.iter().map(|&v| T::c(v)));
    }
    Ok(SpectralSample { points: Matrix::from_row_major(count, p, data)? })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("tail index must lie in (0, 2], got {alpha}")))
    }
}

/// One symmetric alpha-stable draw with unit scale.
fn cms_draw<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let v = PI * (u - 0.5);
    let w: f64 = loop {
        let w: f64 = Exp1.sample(rng);
        if w > 0.0 {
            break w;
        }
    };
    if alpha == 1.0 {
        return v.tan();
    }
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `n` i.i.d. symmetric alpha-stable variates with unit scale. At
/// `alpha = 2` this is a normal law with variance 2.
pub fn sample_univariate_stable<T: Scalar, R: Rng + ?Sized>(alpha: T, n: usize, rng: &mut R) -> Result<Vec<T>> {
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    check_alpha(a)?;
    Ok((0..n).map(|_| T::c(cms_draw(a, rng))).collect())
}

/// Where the spectral points of each LePage vector come from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SpectralMode<T> {
    /// A fresh uniform sample of `series_terms` points for every vector.
    #[default]
    Fresh,
    /// One set shared by all vectors, reused cyclically when shorter than
    /// the series.
    Fixed(SpectralSample<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableSpec<T> {
    pub alphas: Vec<T>,
    pub mu: Vec<T>,
    pub series_terms: usize,
    pub spectral: SpectralMode<T>,
}

impl<T: Scalar> StableSpec<T> {
    pub fn new(alphas: Vec<T>, mu: Vec<T>) -> Result<Self> {
        let spec = Self { alphas, mu, series_terms: DEFAULT_SERIES_TERMS, spectral: SpectralMode::Fresh };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_series_terms(mut self, k: usize) -> Result<Self> {
        self.series_terms = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_spectral(mut self, spectral: SpectralMode<T>) -> Result<Self> {
        self.spectral = spectral;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn spectral_points(&self) -> usize {
        match &self.spectral {
            SpectralMode::Fresh => self.series_terms,
            SpectralMode::Fixed(s) => s.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::invalid("need at least one tail index"));
        }
        if self.alphas.len() != self.mu.len() {
            return Err(Error::invalid(format!(
                "{} tail indices but {} location values",
                self.alphas.len(),
                self.mu.len()
            )));
        }
        for &a in &self.alphas {
            check_alpha(a.to_f64().unwrap_or(f64::NAN))?;
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("location must be finite"));
        }
        if self.series_terms == 0 {
            return Err(Error::invalid("series needs at least one term"));
        }
        if let SpectralMode::Fixed(s) = &self.spectral {
            if s.dim() != self.dim() {
                return Err(Error::invalid("spectral sample dimension differs from the tail indices"));
            }
        }
        Ok(())
    }
}

// sign(d) |d|^e g^-e, with ln g supplied when e != 1/2.
#[inline]
fn series_term(d: f64, g: f64, ln_g: f64, e: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if e == 0.5 {
        d.signum() * (d.abs() / g).sqrt()
    } else {
        d.signum() * ((d.abs().ln() - ln_g) * e).exp()
    }
}

fn inverse_alphas<T: Scalar>(alphas: &[T]) -> Result<Vec<f64>> {
    alphas
        .iter()
        .map(|&a| {
            let a = a.to_f64().unwrap_or(f64::NAN);
            check_alpha(a).map(|_| 1.0 / a)
        })
        .collect()
}

/// Evaluates the LePage series for given arrivals and directions; direction
/// `i mod m` pairs with arrival `i`.
pub fn lepage_from_parts<T: Scalar>(alphas: &[T], arrivals: &[T], spectral: &SpectralSample<T>) -> Result<Vec<T>> {
    if spectral.dim() != alphas.len() {
        return Err(Error::invalid("spectral dimension differs from the tail indices"));
    }
    if arrivals.is_empty() {
        return Err(Error::invalid("need at least one arrival"));
    }
    let inv = inverse_alphas(alphas)?;
    let need_log = inv.iter().any(|&e| e != 0.5);
    let m = spectral.len();
    let mut acc = vec![0.0f64; alphas.len()];
    for (i, &g) in arrivals.iter().enumerate() {
        let g = g.to_f64().unwrap_or(f64::NAN);
        let ln_g = if need_log { g.ln() } else { 0.0 };
        let dir = spectral.point(i % m);
        for ((sum, &d), &e) in acc.iter_mut().zip(dir).zip(&inv) {
            *sum += series_term(d.to_f64().unwrap_or(0.0), g, ln_g, e);
        }
    }
    Ok(acc.into_iter().map(T::c).collect())
}

/// One error vector from the truncated LePage series with fresh arrivals.
///
/// In [`SpectralMode::Fresh`] the arrival increments and directions are
/// drawn interleaved, one `(E_i, g_i)` pair per term, without materialising
/// either sequence.
pub fn sample_lepage_vector<T: Scalar, R: Rng + ?Sized>(spec: &StableSpec<T>, rng: &mut R) -> Result<Vec<T>> {
    spec.validate()?;
    match &spec.spectral {
        SpectralMode::Fresh => {
            let inv = inverse_alphas(&spec.alphas)?;
            let need_log = inv.iter().any(|&e| e != 0.5);
            let mut acc = vec![0.0f64; spec.dim()];
            let mut dir = vec![0.0f64; spec.dim()];
            let mut g = 0.0f64;
            for _ in 0..spec.series_terms {
                let e: f64 = Exp1.sample(rng);
                g += e.max(f64::MIN_POSITIVE);
                draw_direction(rng, &mut dir);
                let ln_g = if need_log { g.ln() } else { 0.0 };
                for ((sum, &d), &e) in acc.iter_mut().zip(&dir).zip(&inv) {
                    *sum += series_term(d, g, ln_g, e);
                }
            }
            Ok(acc.into_iter().map(T::c).collect())
        }
        SpectralMode::Fixed(dirs) => {
            let arrivals = arrival_times::<T, _>(spec.series_terms, rng)?;
            lepage_from_parts(&spec.alphas, &arrivals.gammas, dirs)
        }
    }
}

/// `n` error rows: stable variates for `p = 1`, LePage vectors otherwise.
pub fn sample_errors<T: Scalar, R: Rng + ?Sized>(spec: &StableSpec<T>, n: usize, rng: &mut R) -> Result<Matrix<T>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let p = spec.dim();
    let data = if p == 1 {
        sample_univariate_stable(spec.alphas[0], n, rng)?
    } else {
        let mut data = Vec::with_capacity(n * p);
        for _ in 0..n {
            data.extend(sample_lepage_vector(spec, rng)?);
        }
        data
    };
    Matrix::from_row_major(n, p, data)
}

/// Observations `X_i = mu + eps_i`.
pub fn sample_model<T: Scalar, R: Rng + ?Sized>(spec: &StableSpec<T>, n: usize, rng: &mut R) -> Result<Sample<T>> {
    let mut x = sample_errors(spec, n, rng)?;
    for i in 0..n {
        for (v, &m) in x.row_mut(i).iter_mut().zip(&spec.mu) {
            *v = m + *v;
        }
    }
    Sample::new(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn arrivals_from_draws() {
        assert_eq!(ArrivalTimes::from_exponentials(&[0.7]).unwrap().gammas, vec![0.7]);
        assert_eq!(ArrivalTimes::from_exponentials(&[1.0, 1.0, 1.0]).unwrap().gammas, vec![1.0, 2.0, 3.0]);
        assert!(ArrivalTimes::<f64>::from_exponentials(&[]).is_err());
        assert!(arrival_times::<f64, _>(0, &mut stream_rng(0, "t", 0)).is_err());
    }

    #[test]
    fn arrivals_strictly_increasing() {
        for seed in 0..1000 {
            let a = arrival_times::<f64, _>(50, &mut stream_rng(seed, "arrivals", 0)).unwrap();
            assert!(a.gammas[0] > 0.0);
            assert!(a.gammas.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn single_term_series() {
        let dirs = SpectralSample::new(Matrix::from_rows(&[[1.0, 0.0]]).unwrap()).unwrap();
        let eps = lepage_from_parts(&[2.0, 2.0], &[4.0], &dirs).unwrap();
        assert_eq!(eps, vec![0.5, 0.0]);
    }

    #[test]
    fn spectral_points_have_unit_norm() {
        for p in 1..5 {
            let s = sample_spectral_uniform::<f64, _>(p, 200, &mut stream_rng(3, "sphere", p as u64)).unwrap();
            for i in 0..s.len() {
                let n: f64 = s.point(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        let mut rng = stream_rng(0, "bad", 0);
        assert!(sample_univariate_stable(0.0, 5, &mut rng).is_err());
        assert!(sample_univariate_stable(2.1, 5, &mut rng).is_err());
        assert!(StableSpec::new(vec![1.5, 2.5], vec![0.0, 0.0]).is_err());
        assert!(StableSpec::new(vec![1.5], vec![0.0, 0.0]).is_err());
        assert!(StableSpec::new(vec![1.5], vec![0.0]).unwrap().with_series_terms(0).is_err());
    }

    #[test]
    fn cauchy_branch_is_finite() {
        let xs = sample_univariate_stable(1.0, 1000, &mut stream_rng(1, "cauchy", 0)).unwrap();
        assert!(xs.iter().all(|x: &f64| x.is_finite()));
    }

    #[test]
    fn fixed_spectral_mode_is_used() {
        let dirs = SpectralSample::new(Matrix::from_rows(&[[1.0, 0.0]]).unwrap()).unwrap();
        let spec = StableSpec::new(vec![1.5, 1.5], vec![0.0, 0.0])
            .unwrap()
            .with_series_terms(20)
            .unwrap()
            .with_spectral(SpectralMode::Fixed(dirs))
            .unwrap();
        let v = sample_lepage_vector(&spec, &mut stream_rng(0, "fixed", 0)).unwrap();
        assert!(v[0] > 0.0);
        assert_eq!(v[1], 0.0);
        assert_eq!(spec.spectral_points(), 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = StableSpec::new(vec![1.3, 1.8], vec![1.0, 14.0]).unwrap().with_series_terms(500).unwrap();
        let a = sample_model(&spec, 20, &mut stream_rng(9, "det", 0)).unwrap();
        let b = sample_model(&spec, 20, &mut stream_rng(9, "det", 0)).unwrap();
        assert_eq!(a, b);
    }
}
