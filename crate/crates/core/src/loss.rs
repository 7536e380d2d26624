//! Per-coordinate convex losses `rho_j` and the additive multivariate loss
//! `rho(x) = rho_1(x_1) + ... + rho_p(x_p)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Conventional Huber constant when the tail index is unknown.
pub const DEFAULT_HUBER_C: f64 = 1.345;

/// One univariate loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
#[serde(bound(deserialize = "T: Scalar"))]
pub enum LossDescriptor<T> {
    /// Quadratic inside `[-c, c]`, linear outside.
    Huber { c: T },
    /// `x^2 / 2`; the M-estimate is the sample mean.
    Quadratic,
}

impl<T: Scalar> LossDescriptor<T> {
    pub fn huber(c: T) -> Self {
        LossDescriptor::Huber { c }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossDescriptor::Huber { c } if !(c > T::zero() && c.is_finite()) => {
                Err(Error::invalid(format!("Huber constant must be positive and finite, got {c}")))
            }
            _ => Ok(()),
        }
    }

    pub fn rho(&self, x: T) -> T {
        let half = T::c(0.5);
        match *self {
            LossDescriptor::Huber { c } => {
                if x.abs() <= c {
                    half * x * x
                } else {
                    c * x.abs() - half * c * c
                }
            }
            LossDescriptor::Quadratic => half * x * x,
        }
    }

    /// Score `psi = rho'`: the identity clipped to `[-c, c]`.
    pub fn psi(&self, x: T) -> T {
        match *self {
            LossDescriptor::Huber { c } => x.min(c).max(-c),
            LossDescriptor::Quadratic => x,
        }
    }

    /// `psi'`; the Huber kink `|x| = c` belongs to the quadratic branch.
    pub fn psi_prime(&self, x: T) -> T {
        match *self {
            LossDescriptor::Huber { c } => {
                if x.abs() <= c {
                    T::one()
                } else {
                    T::zero()
                }
            }
            LossDescriptor::Quadratic => T::one(),
        }
    }

    /// Clipping constant, `None` for the quadratic loss.
    pub fn clip(&self) -> Option<T> {
        match *self {
            LossDescriptor::Huber { c } => Some(c),
            LossDescriptor::Quadratic => None,
        }
    }
}

/// The additive loss: one descriptor per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LossSpec<T> {
    pub losses: Vec<LossDescriptor<T>>,
}

impl<T: Scalar> LossSpec<T> {
    pub fn new(losses: Vec<LossDescriptor<T>>) -> Result<Self> {
        let spec = Self { losses };
        spec.validate()?;
        Ok(spec)
    }

    pub fn huber(cs: &[T]) -> Result<Self> {
        Self::new(cs.iter().map(|&c| LossDescriptor::huber(c)).collect())
    }

    pub fn quadratic(p: usize) -> Result<Self> {
        Self::new(vec![LossDescriptor::Quadratic; p])
    }

    /// Huber losses with constants chosen by [`tuning_from_alpha`].
    pub fn huber_for_alphas(alphas: &[T]) -> Result<Self> {
        let cs = alphas.iter().map(|&a| tuning_from_alpha(a)).collect::<Result<Vec<_>>>()?;
        Self::huber(&cs)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.losses.is_empty() {
            return Err(Error::invalid("loss specification needs at least one coordinate"));
        }
        self.losses.iter().try_for_each(LossDescriptor::validate)
    }

    pub fn dim(&self) -> usize {
        self.losses.len()
    }

    /// `sum_j rho_j(x_j)`.
    pub fn rho(&self, x: &[T]) -> T {
        self.losses.iter().zip(x).map(|(l, &v)| l.rho(v)).sum()
    }
}

/// Huber constant for a known tail index in `(1, 2]`.
///
/// Tail indices on the tenth grid map to a representative of the band of
/// near-optimal constants for absolute-error loss at `n = 100`; values between
/// grid points use the nearest lower grid point.
pub fn tuning_from_alpha<T: Scalar>(alpha: T) -> Result<T> {
    let a = alpha
        .to_f64()
        .ok_or_else(|| Error::invalid("tail index not representable"))?;
    if !(a > 1.0 && a <= 2.0) {
        return Err(Error::invalid(format!("tail index must lie in (1, 2], got {a}")));
    }
    // Tenths, rounded down with slack for values like 1.4999999999.
    let tenths = ((a + 1e-9) * 10.0).floor() as i64;
    let c = match tenths {
        ..=14 => 1.0,
        15 => 1.25,
        16 | 17 => 1.5,
        18 | 19 => 2.0,
        _ => 2.5,
    };
    Ok(T::c(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H1: LossDescriptor<f64> = LossDescriptor::Huber { c: 1.0 };

    #[test]
    fn rho_values() {
        assert_eq!(H1.rho(0.0), 0.0);
        assert_eq!(H1.rho(2.0), 1.5);
        assert_eq!(H1.rho(0.5), 0.125);
        assert_eq!(LossDescriptor::<f64>::Quadratic.rho(3.0), 4.5);
    }

    #[test]
    fn psi_values() {
        assert_eq!(H1.psi(0.0), 0.0);
        assert_eq!(LossDescriptor::huber(1.5).psi(5.0), 1.5);
        assert_eq!(H1.psi(-0.3), -0.3);
        assert_eq!(H1.psi(-7.0), -1.0);
    }

    #[test]
    fn psi_prime_values() {
        assert_eq!(H1.psi_prime(0.0), 1.0);
        assert_eq!(H1.psi_prime(2.0), 0.0);
        assert_eq!(H1.psi_prime(1.0), 1.0);
        assert_eq!(H1.psi_prime(-1.0), 1.0);
    }

    #[test]
    fn kink_convention_is_a_subgradient_choice() {
        // At the kink psi has one-sided slopes 1 (inside) and 0 (outside);
        // the chosen value must lie in that set and match the closed branch.
        let c = 1.0;
        let h = 1e-7;
        let left = (H1.psi(c) - H1.psi(c - h)) / h;
        let right = (H1.psi(c + h) - H1.psi(c)) / h;
        let v = H1.psi_prime(c);
        assert!(v >= right.min(left) - 1e-9 && v <= right.max(left) + 1e-9);
        assert!((v - left).abs() < 1e-9);
    }

    #[test]
    fn tuning_table() {
        for (a, c) in [
            (1.1, 1.0),
            (1.2, 1.0),
            (1.3, 1.0),
            (1.4, 1.0),
            (1.45, 1.0),
            (1.5, 1.25),
            (1.6, 1.5),
            (1.7, 1.5),
            (1.8, 2.0),
            (1.9, 2.0),
            (1.95, 2.0),
            (2.0, 2.5),
            (1.05, 1.0),
        ] {
            assert_eq!(tuning_from_alpha(a).unwrap(), c, "alpha {a}");
        }
        assert!(tuning_from_alpha(1.0).is_err());
        assert!(tuning_from_alpha(2.01).is_err());
        assert!(tuning_from_alpha(f64::NAN).is_err());
    }

    #[test]
    fn json_format() {
        let spec = LossSpec::new(vec![LossDescriptor::huber(1.0), LossDescriptor::Quadratic]).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"losses":[{"family":"huber","c":1.0},{"family":"quadratic"}]}"#);
        assert_eq!(LossSpec::<f64>::from_json(&text).unwrap(), spec);
        assert!(LossSpec::<f64>::from_json(r#"{"losses":[{"family":"huber","c":-1.0}]}"#).is_err());
        assert!(LossSpec::<f64>::from_json(r#"{"losses":[]}"#).is_err());
    }

    fn huber() -> impl Strategy<Value = LossDescriptor<f64>> {
        (0.05f64..5.0).prop_map(LossDescriptor::huber)
    }

    proptest! {
        #[test]
        fn rho_is_convex(l in huber(), x in -20.0f64..20.0, y in -20.0f64..20.0, t in 0.0f64..1.0) {
            let lhs = l.rho(t * x + (1.0 - t) * y);
            let rhs = t * l.rho(x) + (1.0 - t) * l.rho(y);
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn psi_is_derivative_of_rho(l in huber(), x in -20.0f64..20.0) {
            let c = l.clip().unwrap();
            prop_assume!((x.abs() - c).abs() > 1e-3);
            let h = 1e-5;
            let fd = (l.rho(x + h) - l.rho(x - h)) / (2.0 * h);
            prop_assert!((fd - l.psi(x)).abs() < 1e-6);
        }

        #[test]
        fn psi_bounded_and_monotone(l in huber(), x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let c = l.clip().unwrap();
            prop_assert!(l.psi(x).abs() <= c);
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(l.psi(lo) <= l.psi(hi));
        }

        #[test]
        fn wide_huber_is_quadratic(xs in proptest::collection::vec(-30.0f64..30.0, 1..40)) {
            let c = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let h = LossDescriptor::huber(c.max(1e-9));
            let q = LossDescriptor::<f64>::Quadratic;
            for &x in &xs {
                prop_assert_eq!(h.rho(x), q.rho(x));
                prop_assert_eq!(h.psi(x), q.psi(x));
            }
        }
    }
}
