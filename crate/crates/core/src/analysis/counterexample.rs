//! The pressure `p = 1/x^2 - c` on the quadratic cusp: mean-zero, outside `L^2`, inside
//! `L^2(|x|^2)`, with `dp/dx` the `y`-derivative of an `L^2` function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bogovskii::BumpFunction;
use crate::error::{Error, Result};
use crate::geometry::{CuspDomain, Point};
use crate::quadrature::{self, QuadratureRule};

/// Constant printed alongside the numerically normalized one.
pub const C_LITERATURE: f64 = 6.0;

/// Lebesgue exponent below which `p` is integrable: `2 - 4 (gamma - 1) / (gamma (k + 2) - 1)`.
pub fn critical_exponent(gamma: f64, k: usize) -> f64 {
    2.0 - 4.0 * (gamma - 1.0) / (gamma * (k as f64 + 2.0) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleParams {
    pub order: usize,
    pub grading: f64,
    /// Rule order on each test bump's disk.
    pub ball_order: usize,
    pub bumps: usize,
    pub seed: u64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self {
            order: 64,
            grading: 3.0,
            ball_order: 48,
            bumps: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub area: f64,
    /// `int 1/x^2`.
    pub integral_inv_x2: f64,
    /// `c` making `p` mean-zero, from the quadrature.
    pub c_star: f64,
    pub c_literature: f64,
    /// `int (1/x^2 - c_literature)`.
    pub mean_with_c_literature: f64,
    /// `int_{x > eps} p^2` for `eps = 1e-1, 1e-2, 1e-3`.
    pub truncated_l2_1e1: f64,
    pub truncated_l2_1e2: f64,
    pub truncated_l2_1e3: f64,
    /// `truncated_l2_1e3 / truncated_l2_1e2`.
    pub truncated_growth: f64,
    /// `int p^2 |x|^2`.
    pub weighted_l2_sq: f64,
    /// `int (2 y / x^3)^2`.
    pub flux_l2_sq: f64,
    /// Largest relative defect of `int p dphi/dx = int (-2y/x^3) dphi/dy` over the test bumps.
    pub weak_identity_max_rel: f64,
    pub r0: f64,
    /// `0.9 r0`.
    pub r: f64,
    /// `int |p|^r` at rule orders `order/2`, `order`, `2 order`.
    pub lr_coarse: f64,
    pub lr_mid: f64,
    pub lr_fine: f64,
    /// `|lr_fine - lr_mid| / lr_fine`.
    pub lr_rel_change: f64,
}

fn random_bumps(domain: &CuspDomain, count: usize, seed: u64) -> Result<Vec<BumpFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: f64 = rng.gen_range(0.5..0.85);
            let y = rng.gen_range(-0.4..0.4) * domain.cross_radius(x);
            let center = Point::xy(x, y);
            let radius = rng.gen_range(0.5..0.9) * domain.boundary_clearance(&center);
            BumpFunction::new(center, radius)
        })
        .collect()
}

/// Runs the full set of checks on the `gamma = 2` planar profile.
pub fn counterexample_report(domain: &CuspDomain, params: &CounterexampleParams) -> Result<CounterexampleReport> {
    if domain.gamma() != 2.0 || domain.k() != 1 || domain.m() != 0 {
        return Err(Error::Parameter(format!(
            "the counterexample lives on gamma = 2, k = 1, m = 0; got gamma = {}, k = {}, m = {}",
            domain.gamma(),
            domain.k(),
            domain.m()
        )));
    }
    let rule = QuadratureRule::new(domain, params.order, params.grading)?;
    let area = rule.total_weight();
    let integral_inv_x2 = quadrature::integrate_fn(&rule, 0.0, |q| Ok(q.x().powi(-2)))?;
    let c_star = integral_inv_x2 / area;
    let p = move |q: &Point| q.x().powi(-2) - c_star;

    let truncated = |eps: f64| -> Result<f64> {
        let t = QuadratureRule::truncated(domain, params.order, eps)?;
        quadrature::integrate_fn(&t, 0.0, |q| Ok(p(q).powi(2)))
    };
    let (t1, t2, t3) = (truncated(1e-1)?, truncated(1e-2)?, truncated(1e-3)?);

    let weighted_l2_sq = quadrature::integrate_fn(&rule, 2.0, |q| Ok(p(q).powi(2)))?;
    let flux_l2_sq = quadrature::integrate_fn(&rule, 0.0, |q| Ok((2.0 * q.y()[0] / q.x().powi(3)).powi(2)))?;

    let mut weak_identity_max_rel: f64 = 0.0;
    for b in random_bumps(domain, params.bumps, params.seed)? {
        let ball = QuadratureRule::ball(domain, b.center(), b.radius(), params.ball_order)?;
        let lhs = quadrature::integrate_fn(&ball, 0.0, |q| Ok(p(q) * b.gradient(q)[0]))?;
        let rhs = quadrature::integrate_fn(&ball, 0.0, |q| Ok(-2.0 * q.y()[0] / q.x().powi(3) * b.gradient(q)[1]))?;
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        weak_identity_max_rel = weak_identity_max_rel.max(rel);
    }

    let r0 = critical_exponent(domain.gamma(), domain.k());
    let r = 0.9 * r0;
    let lr = |order: usize| -> Result<f64> {
        let rl = QuadratureRule::new(domain, order, params.grading)?;
        quadrature::integrate_fn(&rl, 0.0, |q| Ok(p(q).abs().powf(r)))
    };
    let (lr_coarse, lr_mid, lr_fine) = (lr(params.order / 2)?, lr(params.order)?, lr(2 * params.order)?);

    Ok(CounterexampleReport {
        area,
        integral_inv_x2,
        c_star,
        c_literature: C_LITERATURE,
        mean_with_c_literature: integral_inv_x2 - C_LITERATURE * area,
        truncated_l2_1e1: t1,
        truncated_l2_1e2: t2,
        truncated_l2_1e3: t3,
        truncated_growth: t3 / t2,
        weighted_l2_sq,
        flux_l2_sq,
        weak_identity_max_rel,
        r0,
        r,
        lr_coarse,
        lr_mid,
        lr_fine,
        lr_rel_change: (lr_fine - lr_mid).abs() / lr_fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_values() {
        let d = CuspDomain::planar(2.0).unwrap();
        let r = counterexample_report(&d, &CounterexampleParams::default()).unwrap();
        assert!((r.c_star - 3.0).abs() < 3e-3, "{r:?}");
        assert!((r.mean_with_c_literature + 2.0).abs() < 1e-2);
        // exact truncated values: 2/eps - 8 + 12 eps - 6 eps^3
        for (eps, v) in [(1e-1f64, r.truncated_l2_1e1), (1e-2, r.truncated_l2_1e2), (1e-3, r.truncated_l2_1e3)] {
            let exact = 2.0 / eps - 8.0 + 12.0 * eps - 6.0 * eps.powi(3);
            assert!((v - exact).abs() < 1e-2 * exact, "{eps}: {v} vs {exact}");
        }
        assert!((r.weighted_l2_sq - 592.0 / 315.0).abs() < 1e-2);
        assert!((r.flux_l2_sq - 8.0 / 3.0).abs() < 1e-2);
        assert!(r.weak_identity_max_rel < 1e-3, "{}", r.weak_identity_max_rel);
        assert!((r.r0 - 1.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_other_domains() {
        let d = CuspDomain::planar(1.5).unwrap();
        assert!(counterexample_report(&d, &CounterexampleParams::default()).is_err());
    }
}
