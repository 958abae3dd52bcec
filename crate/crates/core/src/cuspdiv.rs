//! Weighted divergence solutions on cusp domains: pull the density back to the
//! reference domain, invert the divergence there and push the field forward
//! with the Piola transform. Also the fiber-wise Hardy inequality used to
//! trade zero-order weights for gradient weights.

use serde::{Deserialize, Serialize};

use crate::bogovskii::{div_residual, BogovskiiOperator, StarDomain, MEAN_ZERO_TOL};
use crate::error::{Error, Result};
use crate::field::{ScalarField, Support, VectorField};
use crate::geometry::{piola_pushforward, CuspDomain, Point};
use crate::quadrature::{self, QuadratureRule};
use crate::weights::{admissible_beta_interval, beta_hat, is_muckenhoupt_ap};

/// `g(x, y, z) = alpha x^(alpha - 1) f(x^alpha, y, z)` on the reference domain, so that
/// `int g = int f`.
pub fn pullback_density(domain: &CuspDomain, f: &ScalarField) -> ScalarField {
    if domain.is_reference() {
        return f.clone();
    }
    let a = domain.alpha();
    let f = f.clone();
    ScalarField::new(move |p| {
        let xh = p.x();
        a * xh.powf(a - 1.0) * f.eval(&p.with_x(xh.powf(a)))
    })
}

/// Discretization knobs for [`solve_divergence_cusp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveParams {
    /// Rule order on the cusp domain; also the node count per direction of the polar
    /// Bogovskii evaluation.
    pub order: usize,
    /// Grading exponent on the cusp domain.
    pub grading: f64,
    /// Grading exponent on the reference domain.
    pub ref_grading: f64,
    /// Rule order for the weighted Sobolev norms of `u` (each node costs a finite-difference
    /// Jacobian of `u`).
    pub norm_order: usize,
    pub probes: usize,
    pub seed: u64,
    /// Finite-difference step for the residual check.
    pub h_fd: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            order: 48,
            grading: 3.0,
            ref_grading: 2.0,
            norm_order: 32,
            probes: 20,
            seed: 0,
            h_fd: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivSolveReport {
    pub gamma: f64,
    pub k: usize,
    pub m: usize,
    pub p: f64,
    pub beta: f64,
    pub eta: f64,
    pub beta_hat: f64,
    pub mean_of_f: f64,
    pub residual_max: f64,
    /// `||f||` in `L^p(d_M^(p beta))`.
    pub norm_f: f64,
    /// Zero-order part of `u` with weight `d_M^(p (eta - 1))`.
    pub norm_u_low: f64,
    /// Gradient part of `u` with weight `d_M^(p eta)`.
    pub norm_u_grad: f64,
    pub ratio: f64,
    pub order: usize,
    pub grading: f64,
    pub ref_grading: f64,
    pub norm_order: usize,
    pub probes: usize,
    pub seed: u64,
    pub h_fd: f64,
}

const CSV_COLUMNS: [&str; 20] = [
    "gamma", "k", "m", "p", "beta", "eta", "beta_hat", "mean_of_f", "residual_max", "norm_f",
    "norm_u_low", "norm_u_grad", "ratio", "order", "grading", "ref_grading", "norm_order",
    "probes", "seed", "h_fd",
];

impl DivSolveReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report fields are plain numbers")
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    /// One CSV row in the column order of [`Self::csv_header`].
    pub fn csv_row(&self) -> String {
        let json = self.to_json();
        CSV_COLUMNS
            .iter()
            .map(|c| json[*c].to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Output of [`solve_divergence_cusp`]: the field `u` with `div u = f` and its report.
#[derive(Debug, Clone)]
pub struct DivSolution {
    pub u: VectorField,
    pub v_hat: BogovskiiOperator,
    pub report: DivSolveReport,
}

/// Validates `beta` and `eta` against the solvability conditions.
pub fn check_exponents(domain: &CuspDomain, beta: f64, eta: f64, p: f64) -> Result<()> {
    let (lo, hi) = admissible_beta_interval(domain.gamma(), p, domain.n(), domain.m())?;
    if !(lo < beta && beta < hi) {
        return Err(Error::BetaOutOfRange { beta, lo, hi });
    }
    let min = beta + domain.gamma() - 1.0;
    if eta < min - 1e-12 * min.abs().max(1.0) {
        return Err(Error::EtaTooSmall { eta, min });
    }
    Ok(())
}

/// Solves `div u = f` on the cusp domain with `u` estimated in
/// `W^{1,p}(d_M^(p (eta - 1)), d_M^(p eta))` by `||f||` in `L^p(d_M^(p beta))`.
/// The construction is independent of `eta`; the requested `eta` only enters the reported norms.
pub fn solve_divergence_cusp(
    domain: &CuspDomain,
    f: &ScalarField,
    beta: f64,
    eta: f64,
    p: f64,
    params: &SolveParams,
) -> Result<DivSolution> {
    check_exponents(domain, beta, eta, p)?;
    let rule = QuadratureRule::new(domain, params.order, params.grading)?;
    let mean = quadrature::integrate(&rule, f, 0.0)?;
    let l1 = quadrature::integrate_fn(&rule, 0.0, |x| Ok(f.eval(x).abs()))?;
    if mean.abs() > MEAN_ZERO_TOL * l1 {
        return Err(Error::NotMeanZero {
            mean,
            tol: MEAN_ZERO_TOL * l1,
        });
    }

    let reference = domain.reference();
    let g_hat = pullback_density(domain, f);
    let bh = beta_hat(beta, domain.gamma(), p)?;
    if !is_muckenhoupt_ap(p * bh, p, domain.n(), domain.m())? {
        return Err(Error::ApViolation { mu: p * bh, p });
    }
    let star = StarDomain::new(&reference)?;
    let ref_rule = QuadratureRule::new(&reference, params.order, params.ref_grading)?;
    let v_hat = BogovskiiOperator::new(&star, &g_hat, &ref_rule)?;
    let u = piola_pushforward(domain, &v_hat.to_field());

    let probes = domain.interior_probes(params.probes, params.seed);
    let (residual_max, _) = div_residual(domain, f, &u, &probes, params.h_fd)?;

    let norm_f = quadrature::weighted_lp_norm(&rule, f, p, p * beta)?;
    let norm_rule = QuadratureRule::new(domain, params.norm_order, params.grading)?;
    let parts = quadrature::weighted_sobolev_parts(&norm_rule, &u, p, p * (eta - 1.0), p * eta, params.h_fd)?;
    let ratio = if norm_f > 0.0 { parts.combined(p) / norm_f } else { 0.0 };
    if !(residual_max.is_finite() && ratio.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite diagnostics: residual {residual_max}, ratio {ratio}"
        )));
    }

    let report = DivSolveReport {
        gamma: domain.gamma(),
        k: domain.k(),
        m: domain.m(),
        p,
        beta,
        eta,
        beta_hat: bh,
        mean_of_f: mean,
        residual_max,
        norm_f,
        norm_u_low: parts.low,
        norm_u_grad: parts.grad,
        ratio,
        order: params.order,
        grading: params.grading,
        ref_grading: params.ref_grading,
        norm_order: params.norm_order,
        probes: params.probes,
        seed: params.seed,
        h_fd: params.h_fd,
    };
    Ok(DivSolution { u, v_hat, report })
}

/// `alpha p eta + alpha - 1 - p beta_hat` at `eta = beta + gamma - 1`; zero in exact arithmetic.
pub fn exponent_identity_defect(beta: f64, gamma: f64, p: f64) -> Result<f64> {
    let alpha = 1.0 / gamma;
    let eta = beta + gamma - 1.0;
    Ok(alpha * p * eta + alpha - 1.0 - p * beta_hat(beta, gamma, p)?)
}

/// Both sides of the Hardy inequality and its constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub kappa: f64,
    pub p: f64,
    /// `||v / x||` with weight `x^(p kappa)`.
    pub lhs: f64,
    /// `||dv/dx||` with weight `x^(p kappa)`.
    pub rhs: f64,
    /// `p / |p kappa - p + 1|`.
    pub bound: f64,
    /// `lhs / rhs`, or 0 when both vanish.
    pub ratio: f64,
    /// Same two norms with the weight `d_M^(p kappa)`; they differ from the above by at most
    /// `2^(|p kappa| / 2)` since `x <= d_M <= sqrt(2) x` on the planar profile.
    pub lhs_dm: f64,
    pub rhs_dm: f64,
}

pub fn hardy_constant(kappa: f64, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("Lebesgue exponent must be > 1, got {p}")));
    }
    let denom = p * kappa - p + 1.0;
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateConstant { p, kappa });
    }
    Ok(p / denom.abs())
}

/// Checks `||v/x|| <= p/|p kappa - p + 1| ||dv/dx||` in `L^p` with weight `x^(p kappa)`,
/// which is the inequality proved along each `x`-fiber. `v` must be declared compactly supported;
/// vanishing is spot-checked at 100 points close to the boundary.
pub fn hardy_check(
    domain: &CuspDomain,
    v: &ScalarField,
    kappa: f64,
    p: f64,
    rule: &QuadratureRule,
) -> Result<HardyReport> {
    let bound = hardy_constant(kappa, p)?;
    if v.support() != Support::CompactInterior {
        return Err(Error::Precondition(
            "Hardy check needs a field declared compactly supported in the interior".into(),
        ));
    }
    let vmax = rule
        .nodes()
        .iter()
        .map(|q| v.eval(q).abs())
        .fold(0.0, f64::max);
    for q in domain.near_boundary_probes(100, 0x4a7d, 1e-3) {
        let val = v.eval(&q).abs();
        if val > 1e-10 * vmax.max(1e-300) {
            return Err(Error::Precondition(format!(
                "field declared compactly supported is {val} near the boundary at {:?}",
                q.coords()
            )));
        }
    }

    let dx = |q: &Point| -> Result<f64> {
        match v.gradient(q) {
            Some(g) => Ok(g[0]),
            None => {
                let h = quadrature::adaptive_step(domain, q, 1e-3)?;
                Ok(quadrature::fd_gradient(v, q, h, domain)?[0])
            }
        }
    };
    let pk = p * kappa;
    let lhs_x = quadrature::integrate_fn(rule, 0.0, |q| Ok((v.eval(q) / q.x()).abs().powf(p) * q.x().powf(pk)))?;
    let rhs_x = quadrature::integrate_fn(rule, 0.0, |q| Ok(dx(q)?.abs().powf(p) * q.x().powf(pk)))?;
    let lhs_d = quadrature::integrate_fn(rule, pk, |q| Ok((v.eval(q) / q.x()).abs().powf(p)))?;
    let rhs_d = quadrature::integrate_fn(rule, pk, |q| Ok(dx(q)?.abs().powf(p)))?;
    let (lhs, rhs) = (lhs_x.powf(1.0 / p), rhs_x.powf(1.0 / p));
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(HardyReport {
        kappa,
        p,
        lhs,
        rhs,
        bound,
        ratio,
        lhs_dm: lhs_d.powf(1.0 / p),
        rhs_dm: rhs_d.powf(1.0 / p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogovskii::BumpFunction;
    use approx::assert_relative_eq;

    fn cusp2() -> CuspDomain {
        CuspDomain::planar(2.0).unwrap()
    }

    #[test]
    fn pullback_examples() {
        let f = ScalarField::new(|p| p.x() + p.y()[0]);
        let tri = CuspDomain::planar(1.0).unwrap();
        let g = pullback_density(&tri, &f);
        let q = Point::xy(0.4, 0.1);
        assert_eq!(g.eval(&q), f.eval(&q));

        let d = cusp2();
        let rule_hat = QuadratureRule::new(&d.reference(), 48, 2.0).unwrap();
        let one = pullback_density(&d, &ScalarField::constant(1.0));
        let mass = quadrature::integrate(&rule_hat, &one, 0.0).unwrap();
        assert_relative_eq!(mass, 2.0 / 3.0, max_relative = 1e-5);

        let rule = QuadratureRule::new(&d, 48, 3.0).unwrap();
        let f0 = quadrature::project_mean_zero(&rule, &ScalarField::new(|p| p.x()), 0.0).unwrap();
        let g0 = pullback_density(&d, &f0);
        assert!(quadrature::integrate(&rule_hat, &g0, 0.0).unwrap().abs() <= 1e-6);
    }

    #[test]
    fn exponent_checks() {
        let d = cusp2();
        assert!(matches!(check_exponents(&d, 1.5, 5.0, 2.0), Err(Error::BetaOutOfRange { .. })));
        assert!(matches!(check_exponents(&d, -2.5, 5.0, 2.0), Err(Error::BetaOutOfRange { .. })));
        assert!(matches!(check_exponents(&d, -1.0, -0.5, 2.0), Err(Error::EtaTooSmall { .. })));
        assert!(check_exponents(&d, -1.0, 0.0, 2.0).is_ok());
        let f = ScalarField::constant(1.0);
        let small = SolveParams { order: 8, ..SolveParams::default() };
        assert!(matches!(
            solve_divergence_cusp(&d, &f, 1.5, 2.0, 2.0, &small),
            Err(Error::BetaOutOfRange { .. })
        ));
        assert!(matches!(
            solve_divergence_cusp(&d, &f, -1.0, 0.0, 2.0, &small),
            Err(Error::NotMeanZero { .. })
        ));
    }

    #[test]
    fn exponent_identity_examples() {
        for (b, g, p) in [(-1.0, 2.0, 2.0), (0.3, 1.7, 3.5), (-0.2, 1.0, 1.2)] {
            assert!(exponent_identity_defect(b, g, p).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn reference_pipeline_matches_plain_bogovskii() {
        let d = CuspDomain::planar(1.0).unwrap();
        let params = SolveParams { order: 32, norm_order: 6, probes: 8, ..SolveParams::default() };
        let rule = QuadratureRule::new(&d, params.order, params.grading).unwrap();
        let f = quadrature::project_mean_zero(&rule, &ScalarField::new(|p| p.x() * p.x()), 0.0).unwrap();
        let sol = solve_divergence_cusp(&d, &f, 0.0, 0.0, 2.0, &params).unwrap();
        let star = StarDomain::new(&d).unwrap();
        let ref_rule = QuadratureRule::new(&d, params.order, params.ref_grading).unwrap();
        let op = BogovskiiOperator::new(&star, &f, &ref_rule).unwrap();
        let probes = d.interior_probes(params.probes, params.seed);
        let (direct, _) = div_residual(&d, &f, &op.to_field(), &probes, params.h_fd).unwrap();
        assert_relative_eq!(sol.report.residual_max, direct, max_relative = 1e-12);
        assert!(sol.report.ratio.is_finite() && sol.report.ratio > 0.0);
    }

    #[test]
    fn report_serializes_flat() {
        let d = CuspDomain::planar(1.0).unwrap();
        let params = SolveParams { order: 16, norm_order: 4, probes: 3, ..SolveParams::default() };
        let rule = QuadratureRule::new(&d, 16, params.grading).unwrap();
        let f = quadrature::project_mean_zero(&rule, &ScalarField::new(|p| p.x()), 0.0).unwrap();
        let r = solve_divergence_cusp(&d, &f, 0.0, 0.0, 2.0, &params).unwrap().report;
        let json = r.to_json();
        assert!(json.as_object().unwrap().values().all(|v| v.is_number()));
        assert_eq!(DivSolveReport::csv_header().split(',').count(), r.csv_row().split(',').count());
    }

    #[test]
    fn hardy_examples() {
        assert_relative_eq!(hardy_constant(0.0, 2.0).unwrap(), 2.0);
        assert!(matches!(hardy_constant(0.5, 2.0), Err(Error::DegenerateConstant { .. })));
        let d = cusp2();
        let rule = QuadratureRule::new(&d, 48, 3.0).unwrap();
        let zero = ScalarField::zero().with_support(Support::CompactInterior);
        let r0 = hardy_check(&d, &zero, 0.0, 2.0, &rule).unwrap();
        assert_eq!((r0.lhs, r0.rhs), (0.0, 0.0));

        let b = BumpFunction::new(Point::xy(0.6, 0.0), 0.2).unwrap();
        let r = hardy_check(&d, &b.to_field(), 0.0, 2.0, &rule).unwrap();
        assert!(r.lhs <= 2.0 * 1.05 * r.rhs, "{r:?}");

        let plain = ScalarField::new(|p| p.x());
        assert!(matches!(hardy_check(&d, &plain, 0.0, 2.0, &rule), Err(Error::Precondition(_))));
        let lying = ScalarField::new(|p| p.x()).with_support(Support::CompactInterior);
        assert!(matches!(hardy_check(&d, &lying, 0.0, 2.0, &rule), Err(Error::Precondition(_))));
    }
}
