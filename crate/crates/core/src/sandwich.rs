//! Plug-in estimate of the asymptotic covariance `F^-1 Gamma F^-1` of
//! `sqrt(n) (mu_hat - mu)`.

use serde::Serialize;

use crate::linalg::{condition_number, invert_spd};
use crate::{Error, LossSpec, Matrix, Result, Scalar};

pub use crate::linalg::invert_spd as invert;

/// F entries at or below this are treated as zero.
pub const MIN_F_DIAGONAL: f64 = 1e-12;
/// One-norm condition number above which `Sigma_hat` counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichCov<T: Scalar> {
    /// Diagonal of `F_hat`: `(1/n) sum_i psi'_j(e_ij)`.
    pub f_diag: Vec<T>,
    /// `(1/n) sum_i psi_j(e_ij) psi_k(e_ik)`.
    pub gamma_hat: Matrix<T>,
    pub sigma_hat: Matrix<T>,
    pub sigma_inv: Matrix<T>,
    /// `(1/n) sum_i psi_j(e_ij)`, which is zero only approximately for
    /// mean-centred residuals.
    pub mean_score: Vec<T>,
}

impl<T: Scalar> SandwichCov<T> {
    pub fn f_hat(&self) -> Matrix<T> {
        Matrix::from_diagonal(&self.f_diag)
    }

    pub fn p(&self) -> usize {
        self.f_diag.len()
    }
}

/// `n x p` table of scores `psi_j(e_ij)`.
pub fn score_table<T: Scalar>(residuals: &Matrix<T>, loss: &LossSpec<T>) -> Result<Matrix<T>> {
    if residuals.cols() != loss.dim() {
        return Err(Error::invalid(format!(
            "residuals have {} columns but the loss has {}",
            residuals.cols(),
            loss.dim()
        )));
    }
    let mut out = residuals.clone();
    for i in 0..out.rows() {
        for (e, l) in out.row_mut(i).iter_mut().zip(&loss.losses) {
            *e = l.psi(*e);
        }
    }
    Ok(out)
}

/// Sandwich covariance from residuals, dividing every moment by `n`.
pub fn estimate<T: Scalar>(residuals: &Matrix<T>, loss: &LossSpec<T>) -> Result<SandwichCov<T>> {
    let n = residuals.rows();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 residual rows, got {n}")));
    }
    let scores = score_table(residuals, loss)?;
    let p = loss.dim();
    let nf = T::from_count(n);

    let mut f_diag = vec![T::zero(); p];
    let mut mean_score = vec![T::zero(); p];
    let mut gamma = Matrix::zeros(p, p);
    for (e, s) in residuals.row_iter().zip(scores.row_iter()) {
        for j in 0..p {
            f_diag[j] = f_diag[j] + loss.losses[j].psi_prime(e[j]);
            mean_score[j] = mean_score[j] + s[j];
            for k in 0..=j {
                gamma[(j, k)] = gamma[(j, k)] + s[j] * s[k];
            }
        }
    }
    for j in 0..p {
        f_diag[j] = f_diag[j] / nf;
        mean_score[j] = mean_score[j] / nf;
        for k in 0..=j {
            let v = gamma[(j, k)] / nf;
            gamma[(j, k)] = v;
            gamma[(k, j)] = v;
        }
    }
    if let Some(j) = f_diag.iter().position(|&f| f <= T::c(MIN_F_DIAGONAL)) {
        return Err(Error::DegenerateDesign(format!(
            "coordinate {j}: every residual lies outside the Huber band"
        )));
    }

    let mut sigma = Matrix::zeros(p, p);
    for j in 0..p {
        for k in 0..p {
            sigma[(j, k)] = gamma[(j, k)] / (f_diag[j] * f_diag[k]);
        }
    }
    let sigma_inv = invert_spd(&sigma)?;
    let cond = condition_number(&sigma, &sigma_inv);
    if !(cond <= T::c(MAX_CONDITION)) {
        return Err(Error::SingularCovariance(format!("condition number {cond} exceeds 1e12")));
    }
    Ok(SandwichCov { f_diag, gamma_hat: gamma, sigma_hat: sigma, sigma_inv, mean_score })
}
