//! Graded product quadrature on cusp domains, weighted Lebesgue norms and
//! finite-difference derivatives.
//!
//! A rule maps the box `(0,1) x B_1^k x (0,1)^m` onto the domain through
//! `x = t^q`, `y = x^gamma u`, `z = z`; the weights carry the full Jacobian
//! `q t^(q-1) x^(gamma k)` so integrands that blow up algebraically at the
//! cusp are resolved without touching `x = 0`.

use std::f64::consts::PI;
use std::io::Write;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::geometry::{dist_to_cusp, CuspDomain, Point};

/// Gauss-Legendre nodes and weights on `(0, 1)`, nodes ascending.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n.max(1)).unwrap();
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Gauss-Legendre on `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    gauss_legendre_unit(n)
        .into_iter()
        .map(|(t, w)| (a + (b - a) * t, (b - a) * w))
        .collect()
}

/// Product rule on the unit ball of `R^d` for `d <= 2`: Gauss on `(-1, 1)` for `d = 1`, Gauss in
/// the radius times equispaced angles for `d = 2`.
pub fn unit_ball_rule(d: usize, n: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match d {
        0 => Ok(vec![(Vec::new(), 1.0)]),
        1 => Ok(gauss_legendre_unit(n)
            .into_iter()
            .map(|(t, w)| (vec![2.0 * t - 1.0], 2.0 * w))
            .collect()),
        2 => {
            let radial = gauss_legendre_unit(n);
            let n_ang = n.max(3);
            let dth = 2.0 * PI / n_ang as f64;
            let mut out = Vec::with_capacity(radial.len() * n_ang);
            for &(r, wr) in &radial {
                for j in 0..n_ang {
                    let th = (j as f64 + 0.5) * dth;
                    out.push((vec![r * th.cos(), r * th.sin()], wr * r * dth));
                }
            }
            Ok(out)
        }
        _ => Err(Error::Parameter(format!(
            "cross-sections of dimension {d} > 2 are not supported"
        ))),
    }
}

/// Nodes, weights and cached `d_M` values of a product rule on a cusp domain.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    domain: CuspDomain,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    dist: Vec<f64>,
    order: usize,
    grading: f64,
}

impl QuadratureRule {
    /// Graded product rule with `order` points per axis.
    pub fn new(domain: &CuspDomain, order: usize, grading: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::Parameter(format!("rule order must be >= 2, got {order}")));
        }
        if !(grading >= 1.0) {
            return Err(Error::Parameter(format!("grading must be >= 1, got {grading}")));
        }
        let xs: Vec<(f64, f64)> = gauss_legendre_unit(order)
            .into_iter()
            .map(|(t, w)| (t.powf(grading), w * grading * t.powf(grading - 1.0)))
            .collect();
        Self::from_x_rule(domain, &xs, order, grading)
    }

    /// Rule on the truncated domain `x > x_min`, with `x = x_min^(1-t)` so that nodes cluster
    /// geometrically toward the truncation.
    pub fn truncated(domain: &CuspDomain, order: usize, x_min: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::Parameter(format!("rule order must be >= 2, got {order}")));
        }
        if !(x_min > 0.0 && x_min < 1.0) {
            return Err(Error::Parameter(format!("truncation must lie in (0, 1), got {x_min}")));
        }
        let log = -x_min.ln();
        let xs: Vec<(f64, f64)> = gauss_legendre_unit(order)
            .into_iter()
            .map(|(t, w)| {
                let x = x_min.powf(1.0 - t);
                (x, w * log * x)
            })
            .collect();
        Self::from_x_rule(domain, &xs, order, 1.0)
    }

    fn from_x_rule(domain: &CuspDomain, xs: &[(f64, f64)], order: usize, grading: f64) -> Result<Self> {
        let (k, m) = (domain.k(), domain.m());
        let cross = unit_ball_rule(k, order)?;
        let zs = gauss_legendre_unit(order);
        let z_count = zs.len().pow(m as u32);

        let mut nodes = Vec::with_capacity(xs.len() * cross.len() * z_count);
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut z = vec![0.0; m];
        let mut y = vec![0.0; k];
        for &(x, wx) in xs {
            let r = domain.cross_radius(x);
            let jac = wx * r.powi(k as i32);
            for (u, wu) in &cross {
                for (yi, ui) in y.iter_mut().zip(u) {
                    *yi = r * ui;
                }
                for zi in 0..z_count {
                    let mut idx = zi;
                    let mut wz = 1.0;
                    for zc in z.iter_mut() {
                        let (node, w) = zs[idx % zs.len()];
                        *zc = node;
                        wz *= w;
                        idx /= zs.len();
                    }
                    nodes.push(Point::new(x, &y, &z));
                    weights.push(jac * wu * wz);
                }
            }
        }
        let dist = nodes.iter().map(dist_to_cusp).collect();
        Ok(Self {
            domain: *domain,
            nodes,
            weights,
            dist,
            order,
            grading,
        })
    }

    /// Polar (n = 2) or spherical (n = 3) rule on a ball that must lie inside `domain`.
    pub fn ball(domain: &CuspDomain, center: &Point, radius: f64, order: usize) -> Result<Self> {
        domain.check_shape(center)?;
        let n = domain.n();
        let radial = gauss_legendre_unit(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let c = center.coords();
        let mut push = |offset: &[f64], w: f64| -> Result<()> {
            let coords: Vec<f64> = c.iter().zip(offset).map(|(a, b)| a + b).collect();
            let p = Point::from_coords(&coords, domain.k());
            if !domain.contains_unchecked(&p) {
                return Err(Error::Parameter(format!(
                    "ball of radius {radius} around {c:?} leaves the domain"
                )));
            }
            nodes.push(p);
            weights.push(w);
            Ok(())
        };
        match n {
            2 => {
                let n_ang = 2 * order;
                let dth = 2.0 * PI / n_ang as f64;
                for &(t, wr) in &radial {
                    let r = radius * t;
                    for j in 0..n_ang {
                        let th = (j as f64 + 0.5) * dth;
                        push(&[r * th.cos(), r * th.sin()], wr * radius * r * dth)?;
                    }
                }
            }
            3 => {
                let polar = gauss_legendre_interval(order, -1.0, 1.0);
                let n_az = 2 * order;
                let dph = 2.0 * PI / n_az as f64;
                for &(t, wr) in &radial {
                    let r = radius * t;
                    for &(ct, wc) in &polar {
                        let st = (1.0 - ct * ct).max(0.0).sqrt();
                        for j in 0..n_az {
                            let ph = (j as f64 + 0.5) * dph;
                            push(
                                &[r * ct, r * st * ph.cos(), r * st * ph.sin()],
                                wr * radius * r * r * wc * dph,
                            )?;
                        }
                    }
                }
            }
            _ => {
                return Err(Error::Parameter(format!("ball rules need n <= 3, got {n}")));
            }
        }
        let dist = nodes.iter().map(dist_to_cusp).collect();
        Ok(Self {
            domain: *domain,
            nodes,
            weights,
            dist,
            order,
            grading: 1.0,
        })
    }

    pub fn domain(&self) -> &CuspDomain {
        &self.domain
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Cached `d_M` at each node.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Debug dump: one row `x, y..., z..., weight` per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["x".to_string()];
        header.extend((1..=self.domain.k()).map(|i| format!("y{i}")));
        header.extend((1..=self.domain.m()).map(|i| format!("z{i}")));
        header.push("weight".into());
        writeln!(out, "{}", header.join(","))?;
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            let mut row: Vec<String> = p.coords().iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{w:e}"));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn power_weight(d: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        d.powf(exponent)
    }
}

/// `sum_i w_i d_M(p_i)^weight_exponent f(p_i)`. Nodes are evaluated in parallel; the reduction
/// runs in node order so results are reproducible bit for bit.
pub fn integrate_fn<F>(rule: &QuadratureRule, weight_exponent: f64, f: F) -> Result<f64>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    let values: Vec<Result<f64>> = rule.nodes.par_iter().map(&f).collect();
    let mut acc = 0.0;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if !v.is_finite() {
            return Err(Error::Evaluation {
                index: i,
                coords: rule.nodes[i].coords().to_vec(),
                value: v,
            });
        }
        acc += rule.weights[i] * power_weight(rule.dist[i], weight_exponent) * v;
    }
    Ok(acc)
}

/// Approximates `int_Omega f d_M^weight_exponent`.
pub fn integrate(rule: &QuadratureRule, f: &ScalarField, weight_exponent: f64) -> Result<f64> {
    integrate_fn(rule, weight_exponent, |p| Ok(f.eval(p)))
}

/// `(int |f|^p d_M^weight_exponent)^(1/p)`.
pub fn weighted_lp_norm(rule: &QuadratureRule, f: &ScalarField, p: f64, weight_exponent: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    let s = integrate_fn(rule, weight_exponent, |x| Ok(f.eval(x).abs().powf(p)))?;
    Ok(s.powf(1.0 / p))
}

/// `f - (int f w) / (int w)` for `w = d_M^weight_exponent`.
pub fn project_mean_zero(rule: &QuadratureRule, f: &ScalarField, weight_exponent: f64) -> Result<ScalarField> {
    let mass = integrate_fn(rule, weight_exponent, |_| Ok(1.0))?;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Weight(format!(
            "weight d_M^{weight_exponent} has integral {mass}"
        )));
    }
    let mean = integrate(rule, f, weight_exponent)? / mass;
    Ok(f.shifted(mean))
}

fn check_stencil(domain: &CuspDomain, pt: &Point, h: f64) -> Result<()> {
    for i in 0..pt.dim() {
        for step in [h, -h, 0.5 * h, -0.5 * h] {
            let q = pt.shifted(i, step);
            if !domain.contains_unchecked(&q) {
                return Err(Error::Stencil {
                    coords: pt.coords().to_vec(),
                    h,
                });
            }
        }
    }
    Ok(())
}

/// Central differences with one Richardson step: `(4 D(h/2) - D(h)) / 3`, `O(h^4)`.
/// Returns `jac[component][axis]`.
fn fd_core<F>(eval: F, pt: &Point, h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&Point) -> Result<Vec<f64>>,
{
    let n = pt.dim();
    let mut jac: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let fp = eval(&pt.shifted(i, h))?;
        let fm = eval(&pt.shifted(i, -h))?;
        let hp = eval(&pt.shifted(i, 0.5 * h))?;
        let hm = eval(&pt.shifted(i, -0.5 * h))?;
        if jac.is_empty() {
            jac = vec![vec![0.0; n]; fp.len()];
        }
        for c in 0..fp.len() {
            let d_full = (fp[c] - fm[c]) / (2.0 * h);
            let d_half = (hp[c] - hm[c]) / h;
            jac[c][i] = (4.0 * d_half - d_full) / 3.0;
        }
    }
    Ok(jac)
}

/// Richardson-extrapolated central-difference gradient. The whole stencil must lie inside
/// `domain`.
pub fn fd_gradient(f: &ScalarField, pt: &Point, h: f64, domain: &CuspDomain) -> Result<Vec<f64>> {
    domain.check_shape(pt)?;
    check_stencil(domain, pt, h)?;
    let jac = fd_core(|q| Ok(vec![f.eval(q)]), pt, h)?;
    Ok(jac.into_iter().next().unwrap_or_default())
}

/// Jacobian `[component][axis]` of a vector field by the same scheme as [`fd_gradient`].
pub fn fd_jacobian(v: &VectorField, pt: &Point, h: f64, domain: &CuspDomain) -> Result<Vec<Vec<f64>>> {
    domain.check_shape(pt)?;
    check_stencil(domain, pt, h)?;
    fd_core(|q| v.eval(q), pt, h)
}

/// Picks the largest step `<= h_max` whose stencil stays in the domain (halving from a
/// clearance-based guess).
pub fn adaptive_step(domain: &CuspDomain, pt: &Point, h_max: f64) -> Result<f64> {
    domain.check_shape(pt)?;
    let clearance = domain.boundary_clearance(pt);
    let mut h = h_max.min(0.9 * clearance);
    for _ in 0..60 {
        if h > 0.0 && check_stencil(domain, pt, h).is_ok() {
            return Ok(h);
        }
        h *= 0.5;
    }
    Err(Error::Stencil {
        coords: pt.coords().to_vec(),
        h,
    })
}

/// [`fd_jacobian`] with the step chosen by [`adaptive_step`].
pub fn fd_jacobian_adaptive(v: &VectorField, pt: &Point, h_max: f64, domain: &CuspDomain) -> Result<Vec<Vec<f64>>> {
    let h = adaptive_step(domain, pt, h_max)?;
    fd_core(|q| v.eval(q), pt, h)
}

/// Zero-order and first-order parts of a weighted vector Sobolev norm,
/// `(int sum_j |u_j|^p d^low_exp)^(1/p)` and `(int sum_ij |d_i u_j|^p d^grad_exp)^(1/p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevParts {
    pub low: f64,
    pub grad: f64,
}

impl SobolevParts {
    pub fn combined(&self, p: f64) -> f64 {
        (self.low.powf(p) + self.grad.powf(p)).powf(1.0 / p)
    }
}

pub fn weighted_sobolev_parts(
    rule: &QuadratureRule,
    v: &VectorField,
    p: f64,
    low_exponent: f64,
    grad_exponent: f64,
    h_max: f64,
) -> Result<SobolevParts> {
    let domain = *rule.domain();
    let per_node: Vec<Result<(f64, f64)>> = rule
        .nodes
        .par_iter()
        .map(|pt| {
            let u = v.eval(pt)?;
            let jac = fd_jacobian_adaptive(v, pt, h_max, &domain)?;
            let low: f64 = u.iter().map(|c| c.abs().powf(p)).sum();
            let grad: f64 = jac.iter().flatten().map(|c| c.abs().powf(p)).sum();
            Ok((low, grad))
        })
        .collect();
    let (mut low, mut grad) = (0.0, 0.0);
    for (i, r) in per_node.into_iter().enumerate() {
        let (l, g) = r?;
        if !(l.is_finite() && g.is_finite()) {
            return Err(Error::Evaluation {
                index: i,
                coords: rule.nodes[i].coords().to_vec(),
                value: if l.is_finite() { g } else { l },
            });
        }
        let w = rule.weights[i];
        low += w * power_weight(rule.dist[i], low_exponent) * l;
        grad += w * power_weight(rule.dist[i], grad_exponent) * g;
    }
    Ok(SobolevParts {
        low: low.powf(1.0 / p),
        grad: grad.powf(1.0 / p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cusp2() -> CuspDomain {
        CuspDomain::planar(2.0).unwrap()
    }

    #[test]
    fn rule_rejects_bad_parameters() {
        assert!(matches!(QuadratureRule::new(&cusp2(), 1, 3.0), Err(Error::Parameter(_))));
        assert!(matches!(QuadratureRule::new(&cusp2(), 8, 0.5), Err(Error::Parameter(_))));
        let d3 = CuspDomain::new(2.0, 3, 0).unwrap();
        assert!(QuadratureRule::new(&d3, 4, 3.0).is_err());
    }

    #[test]
    fn node_count_and_interior() {
        let d = CuspDomain::new(2.0, 1, 1).unwrap();
        let r = QuadratureRule::new(&d, 6, 3.0).unwrap();
        assert_eq!(r.len(), 6 * 6 * 6);
        assert!(r.nodes().iter().all(|p| d.contains(p).unwrap()));
        assert!(r.weights().iter().all(|&w| w > 0.0));
        let d2 = CuspDomain::new(1.5, 2, 0).unwrap();
        let r2 = QuadratureRule::new(&d2, 5, 2.0).unwrap();
        assert_eq!(r2.len(), 5 * 5 * 5);
        assert!(r2.nodes().iter().all(|p| d2.contains(p).unwrap()));
    }

    #[test]
    fn volumes() {
        let r = QuadratureRule::new(&cusp2(), 64, 3.0).unwrap();
        assert_relative_eq!(r.total_weight(), 2.0 / 3.0, max_relative = 1e-6);
        let r1 = QuadratureRule::new(&CuspDomain::planar(1.0).unwrap(), 64, 1.0).unwrap();
        assert_relative_eq!(r1.total_weight(), 1.0, max_relative = 1e-12);
        // |y| < x^1.5, y in R^2: pi / (2 * 1.5 + 1)
        let d = CuspDomain::new(1.5, 2, 0).unwrap();
        let r2 = QuadratureRule::new(&d, 24, 2.0).unwrap();
        assert_relative_eq!(r2.total_weight(), PI / 4.0, max_relative = 1e-8);
    }

    #[test]
    fn integrate_examples() {
        let r = QuadratureRule::new(&cusp2(), 64, 3.0).unwrap();
        let inv2 = ScalarField::new(|p| p.x().powi(-2));
        assert_relative_eq!(integrate(&r, &inv2, 0.0).unwrap(), 2.0, max_relative = 1e-10);
        let one = ScalarField::constant(1.0);
        assert_relative_eq!(integrate(&r, &one, 2.0).unwrap(), 52.0 / 105.0, max_relative = 1e-10);
    }

    #[test]
    fn non_finite_values_name_the_node() {
        let r = QuadratureRule::new(&cusp2(), 4, 3.0).unwrap();
        let bad = ScalarField::new(|p| if p.x() > 0.5 { f64::NAN } else { 1.0 });
        match integrate(&r, &bad, 0.0) {
            Err(Error::Evaluation { index, coords, .. }) => {
                assert!(coords[0] > 0.5);
                assert_eq!(r.nodes()[index].coords(), coords.as_slice());
            }
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn lp_norm_examples() {
        let r = QuadratureRule::new(&cusp2(), 64, 3.0).unwrap();
        let one = ScalarField::constant(1.0);
        assert_relative_eq!(
            weighted_lp_norm(&r, &one, 2.0, 0.0).unwrap(),
            (2.0f64 / 3.0).sqrt(),
            max_relative = 1e-10
        );
        assert_eq!(weighted_lp_norm(&r, &ScalarField::zero(), 2.0, 0.0).unwrap(), 0.0);
        let f = ScalarField::new(|p| p.x().sin() + p.y()[0]);
        let a = weighted_lp_norm(&r, &f, 3.0, -1.0).unwrap();
        let b = weighted_lp_norm(&r, &f.scaled(-3.0), 3.0, -1.0).unwrap();
        assert_relative_eq!(b, 3.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let r = QuadratureRule::new(&cusp2(), 64, 3.0).unwrap();
        let c = project_mean_zero(&r, &ScalarField::constant(2.5), 0.0).unwrap();
        assert!(c.eval(&Point::xy(0.5, 0.0)).abs() < 1e-12);

        let inv2 = ScalarField::new(|p| p.x().powi(-2));
        let p = project_mean_zero(&r, &inv2, 0.0).unwrap();
        let at = Point::xy(0.5, 0.1);
        assert_relative_eq!(inv2.eval(&at) - p.eval(&at), 3.0, max_relative = 1e-10);

        let f = ScalarField::new(|p| p.x().exp() * p.y()[0] + p.x());
        let once = project_mean_zero(&r, &f, 2.0).unwrap();
        let twice = project_mean_zero(&r, &once, 2.0).unwrap();
        for q in r.nodes().iter().step_by(97) {
            assert!((once.eval(q) - twice.eval(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_examples() {
        let d = CuspDomain::planar(1.0).unwrap();
        let sq = ScalarField::new(|p| p.x() * p.x());
        let g = fd_gradient(&sq, &Point::xy(0.5, 0.0), 1e-2, &d).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8 && g[1].abs() < 1e-12);
        let c = fd_gradient(&ScalarField::constant(4.0), &Point::xy(0.5, 0.1), 1e-2, &d).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
        let xy = ScalarField::new(|p| p.x() * p.y()[0]);
        let g = fd_gradient(&xy, &Point::xy(0.5, 0.1), 1e-2, &d).unwrap();
        assert!((g[0] - 0.1).abs() < 1e-10 && (g[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn fd_rejects_stencil_outside() {
        let d = cusp2();
        let f = ScalarField::new(|p| p.x());
        let near = Point::xy(0.5, 0.24);
        assert!(matches!(fd_gradient(&f, &near, 0.05, &d), Err(Error::Stencil { .. })));
        let h = adaptive_step(&d, &near, 0.05).unwrap();
        assert!(h < 0.01 && h > 0.0);
    }

    #[test]
    fn truncated_rule_integrates_inverse_square() {
        let r = QuadratureRule::truncated(&cusp2(), 48, 1e-3).unwrap();
        // int_eps^1 2 x^2 x^-4 dx = 2 (1/eps - 1)
        let f = ScalarField::new(|p| p.x().powi(-4));
        assert_relative_eq!(integrate(&r, &f, 0.0).unwrap(), 2.0 * (1e3 - 1.0), max_relative = 1e-10);
    }

    #[test]
    fn ball_rule_measures_the_ball() {
        let d = CuspDomain::planar(1.0).unwrap();
        let r = QuadratureRule::ball(&d, &Point::xy(0.75, 0.0), 0.125, 16).unwrap();
        assert_relative_eq!(r.total_weight(), PI / 64.0, max_relative = 1e-12);
        assert!(QuadratureRule::ball(&d, &Point::xy(0.2, 0.0), 0.3, 8).is_err());
        let d3 = CuspDomain::new(1.0, 1, 1).unwrap();
        let r3 = QuadratureRule::ball(&d3, &Point::new(0.75, &[0.0], &[0.5]), 0.125, 12).unwrap();
        assert_relative_eq!(r3.total_weight(), 4.0 / 3.0 * PI * 0.125f64.powi(3), max_relative = 1e-12);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let r = QuadratureRule::new(&CuspDomain::new(2.0, 1, 1).unwrap(), 2, 3.0).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y1,z1,weight"));
        assert_eq!(lines.count(), 8);
    }
}
