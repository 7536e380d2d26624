//! Chi-square confidence ellipsoids for the location vector, their
//! coordinate projections, and boundary points for the planar case.

use serde::Serialize;

use crate::linalg::invert_spd;
use crate::special::{chi2_cdf, chi2_pdf};
use crate::{Error, MEstimate, Matrix, Result, SandwichCov, Scalar};

/// Quantile of the chi-square distribution: Newton on the regularised
/// incomplete gamma function, falling back to bisection.
pub fn chi2_quantile<T: Scalar>(dof: usize, level: T) -> Result<T> {
    if dof == 0 {
        return Err(Error::invalid("chi-square needs at least one degree of freedom"));
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::invalid(format!("level must lie in (0, 1), got {level}")));
    }
    let mut lo = T::zero();
    let mut hi = T::from_count(dof).max(T::one());
    while chi2_cdf(dof, hi)? < level {
        lo = hi;
        hi = hi * T::c(2.0);
    }
    let tol = T::c(1e-10);
    let mut x = (lo + hi) * T::c(0.5);
    for _ in 0..200 {
        let f = chi2_cdf(dof, x)? - level;
        if f == T::zero() {
            return Ok(x);
        }
        if f > T::zero() {
            hi = x;
        } else {
            lo = x;
        }
        let slope = chi2_pdf(dof, x);
        let newton = x - f / slope;
        let next = if slope > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::c(0.5)
        };
        let step = (next - x).abs();
        x = next;
        if step <= tol * x.max(T::one()) || hi - lo <= tol * x.max(T::one()) {
            break;
        }
    }
    Ok(x)
}

/// The ellipsoid `{ m : n (center - m)ᵀ S⁻¹ (center - m) <= tau }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSpec<T: Scalar> {
    pub center: Vec<T>,
    /// `S`, the estimated covariance of `sqrt(n) (mu_hat - mu)`.
    pub sigma: Matrix<T>,
    pub shape_inv: Matrix<T>,
    pub n: usize,
    pub tau: T,
}

impl<T: Scalar> RegionSpec<T> {
    /// Region with shape `sigma`; its inverse is computed here.
    pub fn new(center: Vec<T>, sigma: Matrix<T>, n: usize, tau: T) -> Result<Self> {
        let shape_inv = invert_spd(&sigma)?;
        Self::with_inverse(center, sigma, shape_inv, n, tau)
    }

    pub fn with_inverse(center: Vec<T>, sigma: Matrix<T>, shape_inv: Matrix<T>, n: usize, tau: T) -> Result<Self> {
        let p = center.len();
        if p == 0 || sigma.rows() != p || !sigma.is_square() || shape_inv.rows() != p || !shape_inv.is_square() {
            return Err(Error::invalid("region center and shape dimensions disagree"));
        }
        if !shape_inv.is_symmetric(T::c(1e-10)) {
            return Err(Error::invalid("region shape is not symmetric"));
        }
        if !(tau > T::zero() && tau.is_finite()) {
            return Err(Error::invalid(format!("threshold must be positive, got {tau}")));
        }
        if n == 0 {
            return Err(Error::invalid("region needs n >= 1"));
        }
        Ok(Self { center, sigma, shape_inv, n, tau })
    }

    pub fn p(&self) -> usize {
        self.center.len()
    }

    /// `n (center - mu0)ᵀ S⁻¹ (center - mu0)`.
    pub fn statistic(&self, mu0: &[T]) -> Result<T> {
        if mu0.len() != self.p() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, region has {}",
                mu0.len(),
                self.p()
            )));
        }
        let d: Vec<T> = self.center.iter().zip(mu0).map(|(&c, &m)| c - m).collect();
        Ok(T::from_count(self.n) * self.shape_inv.quad_form(&d)?)
    }
}

/// JSON view of a region: center, threshold, covariance and the
/// coordinate intervals it implies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSummary<T: Scalar> {
    pub center: Vec<T>,
    pub tau: T,
    pub n: usize,
    pub sigma: Matrix<T>,
    pub intervals: Vec<(T, T)>,
}

impl<T: Scalar> RegionSpec<T> {
    pub fn summary(&self) -> Result<RegionSummary<T>> {
        let intervals = coordinate_intervals(&self.center, &self.sigma, self.n, self.tau)?.bounds;
        Ok(RegionSummary { center: self.center.clone(), tau: self.tau, n: self.n, sigma: self.sigma.clone(), intervals })
    }
}

pub fn build_region<T: Scalar>(est: &MEstimate<T>, cov: &SandwichCov<T>, tau: T) -> Result<RegionSpec<T>> {
    if est.p() != cov.p() {
        return Err(Error::invalid("estimate and covariance dimensions disagree"));
    }
    RegionSpec::with_inverse(est.mu_hat.clone(), cov.sigma_hat.clone(), cov.sigma_inv.clone(), est.n(), tau)
}

pub fn region_contains<T: Scalar>(region: &RegionSpec<T>, mu0: &[T]) -> Result<bool> {
    Ok(region.statistic(mu0)? <= region.tau)
}

/// Per-coordinate intervals `mu_j ± sqrt(tau s_jj / n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct IntervalSet<T: Scalar> {
    pub bounds: Vec<(T, T)>,
}

impl<T: Scalar> IntervalSet<T> {
    pub fn contains(&self, mu0: &[T]) -> bool {
        self.bounds.len() == mu0.len() && self.bounds.iter().zip(mu0).all(|(&(lo, hi), &m)| lo <= m && m <= hi)
    }
}

/// `aᵀ center ± sqrt(tau aᵀ S a / n)` for an arbitrary direction `a`.
pub fn linear_combination_interval<T: Scalar>(center: &[T], sigma: &Matrix<T>, n: usize, tau: T, a: &[T]) -> Result<(T, T)> {
    if a.len() != center.len() || sigma.rows() != a.len() {
        return Err(Error::invalid("direction dimension disagrees with the region"));
    }
    let var = sigma.quad_form(a)?;
    if !(var > T::zero()) {
        return Err(Error::SingularCovariance(format!("non-positive variance {var} along direction")));
    }
    let mid: T = a.iter().zip(center).map(|(&x, &c)| x * c).sum();
    let half = (tau * var / T::from_count(n)).sqrt();
    Ok((mid - half, mid + half))
}

pub fn simultaneous_intervals<T: Scalar>(est: &MEstimate<T>, cov: &SandwichCov<T>, n: usize, tau: T) -> Result<IntervalSet<T>> {
    coordinate_intervals(&est.mu_hat, &cov.sigma_hat, n, tau)
}

pub fn coordinate_intervals<T: Scalar>(center: &[T], sigma: &Matrix<T>, n: usize, tau: T) -> Result<IntervalSet<T>> {
    if !(tau > T::zero()) {
        return Err(Error::invalid("threshold must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if sigma.rows() != center.len() || !sigma.is_square() {
        return Err(Error::invalid("covariance dimension disagrees with the center"));
    }
    let bounds = (0..center.len())
        .map(|j| {
            let s = sigma[(j, j)];
            if !(s > T::zero() && s.is_finite()) {
                return Err(Error::SingularCovariance(format!("diagonal entry {j} is {s}")));
            }
            let half = (tau * s / T::from_count(n)).sqrt();
            Ok((center[j] - half, center[j] + half))
        })
        .collect::<Result<_>>()?;
    Ok(IntervalSet { bounds })
}

/// Symmetric square root of a 2x2 positive-definite matrix in closed form.
pub fn sqrt_spd_2x2<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::invalid("expected a 2x2 matrix"));
    }
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let det = a * d - b * b;
    if !(det > T::zero() && a > T::zero()) {
        return Err(Error::SingularCovariance(format!("2x2 matrix with determinant {det} is not positive definite")));
    }
    let s = det.sqrt();
    let t = (a + d + T::c(2.0) * s).sqrt();
    Matrix::from_rows(&[[(a + s) / t, b / t], [b / t, (d + s) / t]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipsePoint<T> {
    pub t: T,
    pub x: [T; 2],
}

/// `num_points` points `center + sqrt(tau/n) A (cos t, sin t)` with
/// `A Aᵀ = S`, `t` equally spaced on `[0, 2 pi)`.
pub fn ellipse_boundary<T: Scalar>(region: &RegionSpec<T>, num_points: usize) -> Result<Vec<EllipsePoint<T>>> {
    if region.p() != 2 {
        return Err(Error::invalid(format!("ellipse boundary needs p = 2, got {}", region.p())));
    }
    if num_points < 3 {
        return Err(Error::invalid("ellipse boundary needs at least 3 points"));
    }
    let root = sqrt_spd_2x2(&region.sigma)?;
    let radius = (region.tau / T::from_count(region.n)).sqrt();
    let step = T::TAU() / T::from_count(num_points);
    Ok((0..num_points)
        .map(|k| {
            let t = step * T::from_count(k);
            let (s, c) = t.sin_cos();
            let u = [root[(0, 0)] * c + root[(0, 1)] * s, root[(1, 0)] * c + root[(1, 1)] * s];
            EllipsePoint { t, x: [region.center[0] + radius * u[0], region.center[1] + radius * u[1]] }
        })
        .collect())
}
