//! Coordinate-wise M-estimation of the location vector.
//!
//! With an additive loss the objective `sum_i rho(X_i - beta)` separates
//! across coordinates, so each `mu_j` is the root of the nonincreasing score
//! `g_j(beta) = sum_i psi_j(X_ij - beta)`. The root is bracketed by the column
//! range and found by Newton steps safeguarded by bisection.

use serde::Serialize;

use crate::{Error, LossDescriptor, LossSpec, Matrix, Result, Scalar};

/// Tolerance on the mean score `|g_j| / n`.
pub const SCORE_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;

/// `n x p` table of finite observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    data: Matrix<T>,
}

impl<T: Scalar> Sample<T> {
    pub fn new(data: Matrix<T>) -> Result<Self> {
        if data.rows() < 2 {
            return Err(Error::invalid(format!("sample needs at least 2 rows, got {}", data.rows())));
        }
        if data.cols() == 0 {
            return Err(Error::invalid("sample needs at least one column"));
        }
        if !data.is_finite() {
            return Err(Error::invalid("sample contains non-finite values"));
        }
        Ok(Self { data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// One-column sample.
    pub fn univariate(values: Vec<T>) -> Result<Self> {
        let n = values.len();
        Self::new(Matrix::from_row_major(n, 1, values)?)
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn p(&self) -> usize {
        self.data.cols()
    }

    pub fn data(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn into_data(self) -> Matrix<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.data.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.data.column(j)
    }

    /// Column means.
    pub fn mean(&self) -> Vec<T> {
        let n = T::from_count(self.n());
        (0..self.p()).map(|j| self.column(j).into_iter().sum::<T>() / n).collect()
    }
}

/// A fitted location vector with its residuals and solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MEstimate<T: Scalar> {
    pub mu_hat: Vec<T>,
    pub score_norm: Vec<T>,
    pub iterations: Vec<usize>,
    #[serde(skip)]
    pub residuals: Matrix<T>,
}

impl<T: Scalar> MEstimate<T> {
    pub fn n(&self) -> usize {
        self.residuals.rows()
    }

    pub fn p(&self) -> usize {
        self.mu_hat.len()
    }
}

/// Minimises `sum_i rho(X_i - beta)` for the additive loss `loss`.
pub fn fit<T: Scalar>(sample: &Sample<T>, loss: &LossSpec<T>) -> Result<MEstimate<T>> {
    loss.validate()?;
    if loss.dim() != sample.p() {
        return Err(Error::invalid(format!(
            "loss has {} coordinates but the sample has {}",
            loss.dim(),
            sample.p()
        )));
    }
    let p = sample.p();
    let mut mu_hat = Vec::with_capacity(p);
    let mut score_norm = Vec::with_capacity(p);
    let mut iterations = Vec::with_capacity(p);
    for (j, desc) in loss.losses.iter().enumerate() {
        let root = solve_location(&sample.column(j), desc)?;
        mu_hat.push(root.location);
        score_norm.push(root.score.abs());
        iterations.push(root.iterations);
    }
    let residuals = residuals(sample.data(), &mu_hat)?;
    Ok(MEstimate { mu_hat, score_norm, iterations, residuals })
}

/// `e_i = X_i - mu_hat`, entry by entry.
pub fn residuals<T: Scalar>(data: &Matrix<T>, mu_hat: &[T]) -> Result<Matrix<T>> {
    if mu_hat.len() != data.cols() {
        return Err(Error::invalid(format!(
            "location has {} coordinates but the table has {}",
            mu_hat.len(),
            data.cols()
        )));
    }
    let mut out = data.clone();
    for i in 0..out.rows() {
        for (e, &m) in out.row_mut(i).iter_mut().zip(mu_hat) {
            *e = *e - m;
        }
    }
    Ok(out)
}

/// Objective value `sum_i rho(X_i - beta)`.
pub fn objective<T: Scalar>(sample: &Sample<T>, loss: &LossSpec<T>, beta: &[T]) -> Result<T> {
    let e = residuals(sample.data(), beta)?;
    Ok(e.row_iter().map(|r| loss.rho(r)).sum())
}

/// Solution of one univariate estimating equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationRoot<T> {
    pub location: T,
    /// `g(location)`.
    pub score: T,
    pub iterations: usize,
}

fn score_and_slope<T: Scalar>(xs: &[T], desc: &LossDescriptor<T>, beta: T) -> (T, T) {
    xs.iter().fold((T::zero(), T::zero()), |(g, d), &x| {
        let r = x - beta;
        (g + desc.psi(r), d + desc.psi_prime(r))
    })
}

fn median<T: Scalar>(xs: &[T]) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) * T::c(0.5)
    }
}

/// Root of `sum_i psi(x_i - beta)` within `[min x, max x]`.
pub fn solve_location<T: Scalar>(xs: &[T], desc: &LossDescriptor<T>) -> Result<LocationRoot<T>> {
    if xs.is_empty() {
        return Err(Error::invalid("cannot locate an empty column"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("column contains non-finite values"));
    }
    let (mut lo, mut hi) = xs
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if lo == hi {
        return Ok(LocationRoot { location: lo, score: T::zero(), iterations: 0 });
    }
    let tol = T::c(SCORE_TOL) * T::from_count(xs.len());
    let (g_lo, _) = score_and_slope(xs, desc, lo);
    let (g_hi, _) = score_and_slope(xs, desc, hi);
    if g_lo < -tol || g_hi > tol {
        return Err(Error::Internal(format!("score does not change sign on [{lo}, {hi}]")));
    }

    let half = T::c(0.5);
    let mut beta = median(xs);
    let mut best = (beta, T::infinity());
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (g, slope) = score_and_slope(xs, desc, beta);
        if g.abs() < best.1.abs() {
            best = (beta, g);
        }
        if g.abs() <= tol {
            break;
        }
        if g > T::zero() {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = if slope > T::zero() { beta + g / slope } else { T::nan() };
        let next = if newton > lo && newton < hi { newton } else { lo + (hi - lo) * half };
        if next == beta || hi <= lo {
            break;
        }
        beta = next;
    }
    let (mut location, mut score) = best;

    // A zero score on a whole interval happens when no observation lies
    // strictly inside the Huber band; report the middle of that interval.
    if let Some(c) = desc.clip() {
        if score.abs() <= tol && xs.iter().all(|&x| (x - location).abs() >= c) {
            let left = xs
                .iter()
                .filter(|&&x| x < location)
                .map(|&x| x + c)
                .fold(T::neg_infinity(), T::max);
            let right = xs
                .iter()
                .filter(|&&x| x > location)
                .map(|&x| x - c)
                .fold(T::infinity(), T::min);
            if left.is_finite() && right.is_finite() && left <= right {
                let mid = left + (right - left) * half;
                let (g_mid, _) = score_and_slope(xs, desc, mid);
                if g_mid.abs() <= tol {
                    location = mid;
                    score = g_mid;
                }
            }
        }
    }
    Ok(LocationRoot { location, score, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Grid scan followed by plain bisection on the sign change; shares
    // nothing with the Newton path above.
    fn grid_bisection_root(xs: &[f64], c: f64) -> f64 {
        let g = |b: f64| xs.iter().map(|&x| (x - b).clamp(-c, c)).sum::<f64>();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let steps = 10_000;
        let mut a = lo;
        for k in 1..=steps {
            let b = lo + (hi - lo) * k as f64 / steps as f64;
            if g(b) <= 0.0 {
                let (mut l, mut r) = (a, b);
                while r - l > 1e-13 {
                    let m = 0.5 * (l + r);
                    if g(m) > 0.0 {
                        l = m
                    } else {
                        r = m
                    }
                }
                return 0.5 * (l + r);
            }
            a = b;
        }
        hi
    }

    #[test]
    fn constant_column() {
        let r = solve_location(&[2.5, 2.5, 2.5], &LossDescriptor::huber(1.0)).unwrap();
        assert_eq!(r.location, 2.5);
    }

    #[test]
    fn wide_huber_gives_mean() {
        let r = solve_location(&[-1.0f64, 0.0, 10.0], &LossDescriptor::huber(10.0)).unwrap();
        assert!((r.location - 3.0).abs() < 1e-12);
    }

    #[test]
    fn huber_root_matches_grid_oracle() {
        let xs = [-1.0, 0.0, 10.0];
        let oracle = grid_bisection_root(&xs, 1.0);
        // psi(-1-b) + psi(-b) + 1 = 0 with both interior: -1 - 2b + 1 = 0
        assert!((oracle - 0.0).abs() < 1e-8);
        let r = solve_location(&xs, &LossDescriptor::huber(1.0)).unwrap();
        assert!((r.location - oracle).abs() < 1e-8, "{} vs {oracle}", r.location);
    }

    #[test]
    fn matches_oracle_on_random_columns() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0f64).powi(3)).collect();
            let c = rng.random_range(0.2..3.0);
            let r = solve_location(&xs, &LossDescriptor::huber(c)).unwrap();
            let oracle = grid_bisection_root(&xs, c);
            let g = |b: f64| xs.iter().map(|&x| (x - b).clamp(-c, c)).sum::<f64>();
            // On a flat zero-score interval the two may differ; both must be roots.
            assert!(g(r.location).abs() <= 1e-10 * n as f64);
            assert!((r.location - oracle).abs() < 1e-8 || g(oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn flat_score_returns_midpoint() {
        // Points at -5 and 5 with c = 1: score is zero on [-4, 4].
        let r = solve_location(&[-5.0, 5.0], &LossDescriptor::huber(1.0)).unwrap();
        assert_eq!(r.location, 0.0);
        let r = solve_location(&[-5.0, -5.0, 5.0, 5.0, 9.0, -9.0], &LossDescriptor::huber(1.0)).unwrap();
        assert_eq!(r.location, 0.0);
    }

    #[test]
    fn quadratic_gives_mean() {
        let xs = [1.0f64, 2.0, 4.0, 100.0];
        let r = solve_location(&xs, &LossDescriptor::Quadratic).unwrap();
        assert!((r.location - 26.75).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let s = Sample::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let l = LossSpec::huber(&[1.0]).unwrap();
        assert!(matches!(fit(&s, &l), Err(Error::InvalidArgument(_))));
        assert!(residuals(s.data(), &[0.0]).is_err());
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(Sample::from_rows(&[[1.0, f64::NAN], [0.0, 0.0]]).is_err());
        assert!(Sample::from_rows(&[[1.0, 2.0]]).is_err());
        assert!(solve_location(&[1.0, f64::INFINITY], &LossDescriptor::huber(1.0)).is_err());
    }

    #[test]
    fn residual_edge_cases() {
        let m = Matrix::from_rows(&[[1.0, -2.0], [3.5, 4.0]]).unwrap();
        assert_eq!(residuals(&m, &[0.0, 0.0]).unwrap(), m);
        let single = Matrix::from_rows(&[[1.5, -2.0]]).unwrap();
        assert_eq!(residuals(&single, &[1.5, -2.0]).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn robust_to_single_outlier() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut ys = xs.clone();
        ys[0] = 1e9;
        let d = LossDescriptor::huber(1.345);
        let before = solve_location(&xs, &d).unwrap().location;
        let after = solve_location(&ys, &d).unwrap().location;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((after - before).abs() < (mean(&ys) - mean(&xs)).abs());
        assert!((after - before).abs() < 0.1);
    }

    #[test]
    fn works_in_f32() {
        let s = Sample::<f32>::from_rows(&[[1.0f32], [2.0], [30.0]]).unwrap();
        let est = fit(&s, &LossSpec::huber(&[1.0f32]).unwrap()).unwrap();
        assert!(est.mu_hat[0] > 1.0 && est.mu_hat[0] < 30.0 / 3.0 + 1.0);
    }
}
