//! Power weights `d_M^mu`, their Muckenhoupt classification and the weight
//! exponents that survive the cusp-straightening map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{dist_to_cusp, CuspDomain, Point};

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("Lebesgue exponent must be > 1, got {p}")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("gamma must be >= 1, got {gamma}")))
    }
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    if n > m {
        Ok(())
    } else {
        Err(Error::Parameter(format!("need n > m, got n = {n}, m = {m}")))
    }
}

/// Conjugate exponent `p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `d_M^mu` is in `A_p(R^n)` exactly when `-(n-m) < mu < (n-m)(p-1)`.
pub fn is_muckenhoupt_ap(mu: f64, p: f64, n: usize, m: usize) -> Result<bool> {
    check_p(p)?;
    check_dims(n, m)?;
    let codim = (n - m) as f64;
    Ok(-codim < mu && mu < codim * (p - 1.0))
}

/// Open interval of weight exponents `beta` for which the divergence problem is solvable in
/// `L^p(d_M^(p beta))` on a cusp of order `gamma`.
pub fn admissible_beta_interval(gamma: f64, p: f64, n: usize, m: usize) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    check_p(p)?;
    check_dims(n, m)?;
    let codim = (n - m) as f64;
    let pp = conjugate(p);
    let shift = (gamma - 1.0) / pp;
    Ok((-gamma * codim / p - shift, gamma * codim / pp - shift))
}

/// Strict membership in [`admissible_beta_interval`].
pub fn beta_is_admissible(beta: f64, gamma: f64, p: f64, n: usize, m: usize) -> Result<bool> {
    let (lo, hi) = admissible_beta_interval(gamma, p, n, m)?;
    Ok(lo < beta && beta < hi)
}

/// Weight exponent on the reference domain: `alpha (beta + (gamma - 1) / p')`, `alpha = 1/gamma`.
pub fn beta_hat(beta: f64, gamma: f64, p: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_p(p)?;
    Ok((beta + (gamma - 1.0) / conjugate(p)) / gamma)
}

/// `d_M^mu` tagged with the Lebesgue exponent and dimensions it is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerWeight {
    mu: f64,
    p: f64,
    n: usize,
    m: usize,
    is_ap: bool,
}

impl PowerWeight {
    pub fn new(mu: f64, p: f64, n: usize, m: usize) -> Result<Self> {
        let is_ap = is_muckenhoupt_ap(mu, p, n, m)?;
        Ok(Self { mu, p, n, m, is_ap })
    }

    /// Weight `d_M^(p beta)` on `domain`.
    pub fn for_beta(domain: &CuspDomain, beta: f64, p: f64) -> Result<Self> {
        Self::new(p * beta, p, domain.n(), domain.m())
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_ap(&self) -> bool {
        self.is_ap
    }

    pub fn eval(&self, pt: &Point) -> f64 {
        dist_to_cusp(pt).powf(self.mu)
    }
}

/// `(1 - log x)^(-1) x^(gamma - 1 - gamma (n - m))`. It lies in `L^p(d_M^(p beta))` for every
/// `beta` at or above the upper admissible endpoint but is not integrable, so mean-zero data
/// makes no sense there.
pub fn mean_zero_witness(domain: &CuspDomain) -> ScalarField {
    let g = domain.gamma();
    let e = g - 1.0 - g * (domain.n() - domain.m()) as f64;
    ScalarField::new(move |p| {
        let x = p.x();
        x.powf(e) / (1.0 - x.ln())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ap_examples() {
        assert!(is_muckenhoupt_ap(1.0, 2.0, 2, 0).unwrap());
        assert!(!is_muckenhoupt_ap(2.0, 2.0, 2, 0).unwrap());
        assert!(!is_muckenhoupt_ap(-2.0, 2.0, 2, 0).unwrap());
        assert!(!is_muckenhoupt_ap(-2.5, 3.0, 3, 1).unwrap());
        assert!(matches!(is_muckenhoupt_ap(0.0, 1.0, 2, 0), Err(Error::Parameter(_))));
        assert!(is_muckenhoupt_ap(0.0, 2.0, 2, 2).is_err());
    }

    #[test]
    fn interval_examples() {
        let (lo, hi) = admissible_beta_interval(2.0, 2.0, 2, 0).unwrap();
        assert_relative_eq!(lo, -2.5);
        assert_relative_eq!(hi, 1.5);
        assert!(!beta_is_admissible(lo, 2.0, 2.0, 2, 0).unwrap());
        assert!(!beta_is_admissible(hi, 2.0, 2.0, 2, 0).unwrap());
        for p in [1.5, 3.0] {
            let (lo, hi) = admissible_beta_interval(1.0, p, 3, 1).unwrap();
            assert_relative_eq!(lo, -2.0 / p);
            assert_relative_eq!(hi, 2.0 / conjugate(p));
        }
        for gamma in [1.0, 1.3, 2.0, 5.0] {
            for codim in 2..5 {
                assert!(beta_is_admissible(1.0 - gamma, gamma, 2.0, codim, 0).unwrap());
            }
        }
        assert!(admissible_beta_interval(0.5, 2.0, 2, 0).is_err());
    }

    #[test]
    fn beta_hat_examples() {
        let b = beta_hat(-1.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(b, -0.25);
        assert!(is_muckenhoupt_ap(2.0 * b, 2.0, 2, 0).unwrap());
        assert_eq!(beta_hat(0.7, 1.0, 3.0).unwrap(), 0.7);
        for (gamma, p, n, m) in [(2.0, 2.0, 2, 0), (1.5, 3.0, 3, 1), (3.0, 1.5, 3, 0)] {
            let (lo, hi) = admissible_beta_interval(gamma, p, n, m).unwrap();
            let codim = (n - m) as f64;
            assert_relative_eq!(p * beta_hat(hi, gamma, p).unwrap(), codim * (p - 1.0), epsilon = 1e-12);
            assert_relative_eq!(p * beta_hat(lo, gamma, p).unwrap(), -codim, epsilon = 1e-12);
        }
    }

    #[test]
    fn power_weight_tracks_classification() {
        let d = CuspDomain::planar(2.0).unwrap();
        let w = PowerWeight::for_beta(&d, -1.0, 2.0).unwrap();
        assert_eq!(w.mu(), -2.0);
        assert!(!w.is_ap());
        let pt = Point::xy(0.6, 0.0);
        assert_relative_eq!(w.eval(&pt), 0.6f64.powi(-2));
        let w2 = PowerWeight::new(0.5, 2.0, 2, 0).unwrap();
        assert!(w2.is_ap());
    }

    #[test]
    fn witness_field_shape() {
        let d = CuspDomain::planar(2.0).unwrap();
        let w = mean_zero_witness(&d);
        // exponent 2 - 1 - 4 = -3
        assert_relative_eq!(w.eval(&Point::xy(1.0, 0.0)), 1.0);
        let x: f64 = 0.1;
        assert_relative_eq!(w.eval(&Point::xy(x, 0.0)), x.powi(-3) / (1.0 - x.ln()), max_relative = 1e-14);
    }
}
