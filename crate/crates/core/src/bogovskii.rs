//! Bogovskii's right inverse of the divergence on the convex reference domain.
//!
//! With `y = x - rho theta` and `tau = (r - 1) rho` the kernel integral becomes
//!
//! ```text
//! u(x) = int_{S^{n-1}} theta sum_j C(n-1, j) F_j(x, theta) Phi_{n-1-j}(x, theta) dtheta
//! F_j  = int_0^{R(theta)} f(x - rho theta) rho^j drho
//! Phi_i = int_0^inf phi(x + tau theta) tau^i dtau
//! ```
//!
//! which has no singularity at `y = x`. `R(theta)` is the exit distance of the backward ray from
//! the domain and `Phi_i` vanishes unless the forward ray meets the bump's ball, so only a cone
//! of directions contributes. The discrete field is smooth in `x`, so finite differences of it
//! are meaningful.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, Support, VectorField};
use crate::geometry::{unit_ball_volume, CuspDomain, Point};
use crate::quadrature::{self, gauss_legendre_interval, gauss_legendre_unit, QuadratureRule};

/// Relative mean-zero tolerance `|int f| <= tol * ||f||_1`.
pub const MEAN_ZERO_TOL: f64 = 1e-6;

/// `c exp(-1 / (1 - |p - center|^2 / rho^2))` on the ball, zero outside, with `int = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFunction {
    center: Point,
    radius: f64,
    scale: f64,
}

impl BumpFunction {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!("bump radius must be positive, got {radius}")));
        }
        let n = center.dim();
        // int_{B_1} exp(-1/(1-|u|^2)) du = |S^{n-1}| int_0^1 exp(-1/(1-t^2)) t^(n-1) dt
        let panels = 64;
        let mut radial = 0.0;
        for i in 0..panels {
            let a = i as f64 / panels as f64;
            let b = (i + 1) as f64 / panels as f64;
            for (t, w) in gauss_legendre_interval(16, a, b) {
                radial += w * (-1.0 / (1.0 - t * t)).exp() * t.powi(n as i32 - 1);
            }
        }
        let sphere = n as f64 * unit_ball_volume(n);
        let scale = 1.0 / (radius.powi(n as i32) * sphere * radial);
        Ok(Self {
            center,
            radius,
            scale,
        })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Normalization constant `c`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Value at the center, `c / e`.
    pub fn max_value(&self) -> f64 {
        self.scale * (-1.0f64).exp()
    }

    #[inline]
    fn ratio(&self, pt: &[f64]) -> f64 {
        let mut s = 0.0;
        for (a, b) in pt.iter().zip(self.center.coords()) {
            s += (a - b) * (a - b);
        }
        s / (self.radius * self.radius)
    }

    #[inline]
    pub(crate) fn eval_coords(&self, pt: &[f64]) -> f64 {
        let s = self.ratio(pt);
        if s < 1.0 {
            self.scale * (-1.0 / (1.0 - s)).exp()
        } else {
            0.0
        }
    }

    pub fn eval(&self, pt: &Point) -> f64 {
        self.eval_coords(pt.coords())
    }

    pub fn gradient(&self, pt: &Point) -> Vec<f64> {
        let s = self.ratio(pt.coords());
        if s >= 1.0 {
            return vec![0.0; pt.dim()];
        }
        let phi = self.scale * (-1.0 / (1.0 - s)).exp();
        let f = -2.0 * phi / (self.radius * self.radius * (1.0 - s) * (1.0 - s));
        pt.coords()
            .iter()
            .zip(self.center.coords())
            .map(|(a, b)| f * (a - b))
            .collect()
    }

    /// The bump as a field with analytic gradient and compact support.
    pub fn to_field(&self) -> ScalarField {
        let (a, b) = (self.clone(), self.clone());
        ScalarField::new(move |p| a.eval(p))
            .with_gradient(move |p| b.gradient(p))
            .with_support(Support::CompactInterior)
    }
}

/// The reference domain together with a ball it is star-shaped with respect to.
#[derive(Debug, Clone, PartialEq)]
pub struct StarDomain {
    domain: CuspDomain,
    bump: BumpFunction,
}

impl StarDomain {
    /// Ball of radius `1/8` centered at `(3/4, 0, 1/2, ..., 1/2)`.
    pub fn new(domain: &CuspDomain) -> Result<Self> {
        let y = vec![0.0; domain.k()];
        let z = vec![0.5; domain.m()];
        Self::with_ball(domain, Point::new(0.75, &y, &z), 0.125)
    }

    pub fn with_ball(domain: &CuspDomain, center: Point, radius: f64) -> Result<Self> {
        if !domain.is_reference() {
            return Err(Error::Domain(format!(
                "the Bogovskii operator needs the convex reference domain, got gamma = {}",
                domain.gamma()
            )));
        }
        domain.check_shape(&center)?;
        let (cx, r) = (center.x(), radius);
        // |y| <= |y_c| + r < x_c - r <= x holds on the whole ball
        let inside = cx - r > 0.0
            && cx + r < 1.0
            && center.y_norm() + r < cx - r
            && center.z().iter().all(|&z| z - r > 0.0 && z + r < 1.0);
        if !inside {
            return Err(Error::Parameter(format!(
                "ball of radius {radius} at {:?} is not compactly inside the domain",
                center.coords()
            )));
        }
        Ok(Self {
            domain: *domain,
            bump: BumpFunction::new(center, radius)?,
        })
    }

    pub fn domain(&self) -> &CuspDomain {
        &self.domain
    }

    pub fn bump(&self) -> &BumpFunction {
        &self.bump
    }

    /// Distance from `x` to the boundary along `dir` (first exit of `x + rho dir`).
    fn exit_distance(&self, x: &[f64], dir: &[f64]) -> f64 {
        let k = self.domain.k();
        let mut r = f64::INFINITY;
        let mut linear = |a: f64, b: f64| {
            // a + b rho > 0 with a > 0
            if b < 0.0 {
                r = r.min(-a / b);
            }
        };
        linear(x[0], dir[0]);
        linear(1.0 - x[0], -dir[0]);
        for i in (1 + k)..x.len() {
            linear(x[i], dir[i]);
            linear(1.0 - x[i], -dir[i]);
        }
        if k == 1 {
            linear(x[0] - x[1], dir[0] - dir[1]);
            linear(x[0] + x[1], dir[0] + dir[1]);
        } else {
            // (x0 + rho d0)^2 - |y + rho dy|^2 > 0
            let (mut yy, mut yd, mut dd) = (0.0, 0.0, 0.0);
            for i in 1..=k {
                yy += x[i] * x[i];
                yd += x[i] * dir[i];
                dd += dir[i] * dir[i];
            }
            let a = dir[0] * dir[0] - dd;
            let b = 2.0 * (x[0] * dir[0] - yd);
            let c = x[0] * x[0] - yy;
            r = r.min(smallest_positive_root(a, b, c));
        }
        r
    }
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= 1e-14 * scale {
        return if b < 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut best = f64::INFINITY;
    for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if root > 0.0 && root < best {
            best = root;
        }
    }
    best
}

/// Parameter interval `{t >= t_min : |p + t d - center| <= radius}`, if non-empty.
fn ray_ball_interval(p: &[f64], d: &[f64], bump: &BumpFunction, t_min: f64) -> Option<(f64, f64)> {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for ((pi, di), ci) in p.iter().zip(d).zip(bump.center.coords()) {
        let w = pi - ci;
        a += di * di;
        b += 2.0 * w * di;
        c += w * w;
    }
    c -= bump.radius * bump.radius;
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 || a == 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (mut r1, mut r2) = (q / a, c / q);
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let lo = r1.max(t_min);
    (r2 > lo).then_some((lo, r2))
}

/// `{r >= 1 : |y + r (x - y) - center| <= radius}`, `None` when the ray misses the ball.
pub fn kernel_r_interval(x: &Point, y: &Point, bump: &BumpFunction) -> Result<Option<(f64, f64)>> {
    if x.coords() == y.coords() {
        return Err(Error::SingularPoint);
    }
    let d: Vec<f64> = x.coords().iter().zip(y.coords()).map(|(a, b)| a - b).collect();
    Ok(ray_ball_interval(y.coords(), &d, bump, 1.0))
}

/// `G(x, y) = (x - y) int_1^inf phi(y + r (x - y)) r^(n-1) dr`, Gauss rule with `order` nodes.
pub fn kernel(x: &Point, y: &Point, bump: &BumpFunction, order: usize) -> Result<Vec<f64>> {
    let n = x.dim();
    let d: Vec<f64> = x.coords().iter().zip(y.coords()).map(|(a, b)| a - b).collect();
    let Some((lo, hi)) = kernel_r_interval(x, y, bump)? else {
        return Ok(vec![0.0; n]);
    };
    let mut s = 0.0;
    let mut q = vec![0.0; n];
    for (r, w) in gauss_legendre_interval(order, lo, hi) {
        for i in 0..n {
            q[i] = y.coords()[i] + r * d[i];
        }
        s += w * bump.eval_coords(&q) * r.powi(n as i32 - 1);
    }
    Ok(d.into_iter().map(|v| v * s).collect())
}

/// `u = B f` for a fixed mean-zero density on a [`StarDomain`].
#[derive(Debug, Clone)]
pub struct BogovskiiOperator {
    star: Arc<StarDomain>,
    f: ScalarField,
    order: usize,
    gauss: Arc<Vec<(f64, f64)>>,
}

impl BogovskiiOperator {
    /// Checks `|int f| <= MEAN_ZERO_TOL * ||f||_1` with `rule`, whose order also sets the number
    /// of nodes per direction in the polar evaluation.
    pub fn new(star: &StarDomain, f: &ScalarField, rule: &QuadratureRule) -> Result<Self> {
        if rule.domain() != star.domain() {
            return Err(Error::Domain("quadrature rule lives on a different domain".into()));
        }
        let n = star.domain.n();
        if n > 3 {
            return Err(Error::Parameter(format!(
                "polar Bogovskii evaluation supports n <= 3, got n = {n}"
            )));
        }
        let mean = quadrature::integrate(rule, f, 0.0)?;
        let l1 = quadrature::integrate_fn(rule, 0.0, |p| Ok(f.eval(p).abs()))?;
        if mean.abs() > MEAN_ZERO_TOL * l1 {
            return Err(Error::NotMeanZero {
                mean,
                tol: MEAN_ZERO_TOL * l1,
            });
        }
        Ok(Self {
            star: Arc::new(star.clone()),
            f: f.clone(),
            order: rule.order(),
            gauss: Arc::new(gauss_legendre_unit(rule.order())),
        })
    }

    /// Overrides the number of nodes per direction used by [`Self::eval`].
    pub fn with_order(mut self, order: usize) -> Self {
        let order = order.max(2);
        self.order = order;
        self.gauss = Arc::new(gauss_legendre_unit(order));
        self
    }

    pub fn star(&self) -> &StarDomain {
        &self.star
    }

    pub fn density(&self) -> &ScalarField {
        &self.f
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `u(x)` by the polar formula.
    pub fn eval(&self, x: &Point) -> Result<Vec<f64>> {
        let dom = &self.star.domain;
        if !dom.contains(x)? {
            return Err(Error::Domain(format!(
                "Bogovskii field evaluated off the open domain at {:?}",
                x.coords()
            )));
        }
        match dom.n() {
            2 => self.eval_planar(x),
            3 => self.eval_spatial(x),
            n => Err(Error::Parameter(format!("unsupported dimension n = {n}"))),
        }
    }

    /// `sum_j C(n-1, j) F_j Phi_{n-1-j}` along direction `theta`.
    fn ray_sum(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        let n = x.len();
        let bump = &self.star.bump;
        let Some((t0, t1)) = ray_ball_interval(x, theta, bump, 0.0) else {
            return Ok(0.0);
        };
        let mut phi = [0.0f64; 3];
        let mut q = [0.0f64; 3];
        for &(t, w) in self.gauss.iter() {
            let tau = t0 + (t1 - t0) * t;
            for i in 0..n {
                q[i] = x[i] + tau * theta[i];
            }
            let v = w * (t1 - t0) * bump.eval_coords(&q[..n]);
            let mut pw = 1.0;
            for ph in phi.iter_mut().take(n) {
                *ph += v * pw;
                pw *= tau;
            }
        }
        let back: Vec<f64> = theta.iter().map(|v| -v).collect();
        let big_r = self.star.exit_distance(x, &back);
        let mut fj = [0.0f64; 3];
        // rho = R (1 - (1 - t)^2) clusters nodes at the exit point
        for (idx, &(t, w)) in self.gauss.iter().enumerate() {
            let s = 1.0 - t;
            let rho = big_r * (1.0 - s * s);
            let jac = 2.0 * big_r * s;
            for i in 0..n {
                q[i] = x[i] - rho * theta[i];
            }
            let pt = Point::from_coords(&q[..n], self.star.domain.k());
            let fv = self.f.eval(&pt);
            if !fv.is_finite() {
                return Err(Error::Evaluation {
                    index: idx,
                    coords: pt.coords().to_vec(),
                    value: fv,
                });
            }
            let v = w * jac * fv;
            let mut pw = 1.0;
            for fjj in fj.iter_mut().take(n) {
                *fjj += v * pw;
                pw *= rho;
            }
        }
        Ok(match n {
            2 => fj[0] * phi[1] + fj[1] * phi[0],
            _ => fj[0] * phi[2] + 2.0 * fj[1] * phi[1] + fj[2] * phi[0],
        })
    }

    fn eval_planar(&self, x: &Point) -> Result<Vec<f64>> {
        let xc = x.coords();
        let c = self.star.bump.center.coords();
        let (ax, ay) = (c[0] - xc[0], c[1] - xc[1]);
        let dist = ax.hypot(ay);
        let axis = ay.atan2(ax);
        let (lo, hi) = if dist <= self.star.bump.radius {
            (axis - PI, axis + PI)
        } else {
            let half = (self.star.bump.radius / dist).asin();
            (axis - half, axis + half)
        };
        // R(theta) has kinks where the backward ray passes through a vertex
        let mut cuts = vec![lo, hi];
        for v in [[0.0, 0.0], [1.0, 1.0], [1.0, -1.0]] {
            let tv = (xc[1] - v[1]).atan2(xc[0] - v[0]);
            for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
                let t = tv + shift;
                if t > lo && t < hi {
                    cuts.push(t);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut u = [0.0, 0.0];
        for piece in cuts.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            if b - a <= 0.0 {
                continue;
            }
            for &(t, w) in self.gauss.iter() {
                let th = a + (b - a) * t;
                let theta = [th.cos(), th.sin()];
                let s = self.ray_sum(xc, &theta)? * w * (b - a);
                u[0] += theta[0] * s;
                u[1] += theta[1] * s;
            }
        }
        Ok(u.to_vec())
    }

    fn eval_spatial(&self, x: &Point) -> Result<Vec<f64>> {
        let xc = x.coords();
        let c = self.star.bump.center.coords();
        let mut axis = [c[0] - xc[0], c[1] - xc[1], c[2] - xc[2]];
        let dist = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let psi_max = if dist <= self.star.bump.radius {
            axis = [1.0, 0.0, 0.0];
            PI
        } else {
            for a in axis.iter_mut() {
                *a /= dist;
            }
            (self.star.bump.radius / dist).asin()
        };
        let (e1, e2) = orthonormal_complement(&axis);
        let n_az = 2 * self.order;
        let dchi = 2.0 * PI / n_az as f64;
        let mut u = [0.0; 3];
        for &(t, w) in self.gauss.iter() {
            let psi = psi_max * t;
            let (sp, cp) = psi.sin_cos();
            for j in 0..n_az {
                let chi = (j as f64 + 0.5) * dchi;
                let (sc, cc) = chi.sin_cos();
                let theta: [f64; 3] =
                    std::array::from_fn(|i| cp * axis[i] + sp * (cc * e1[i] + sc * e2[i]));
                let s = self.ray_sum(xc, &theta)? * w * psi_max * sp * dchi;
                for i in 0..3 {
                    u[i] += theta[i] * s;
                }
            }
        }
        Ok(u.to_vec())
    }

    /// `sum_i w_i G(x, y_i) f(y_i)` over `rule`, dropping the node nearest to `x`.
    /// Converges slowly; kept as an independent check on [`Self::eval`].
    pub fn eval_direct(&self, x: &Point, rule: &QuadratureRule) -> Result<Vec<f64>> {
        if !self.star.domain.contains(x)? {
            return Err(Error::Domain(format!(
                "Bogovskii field evaluated off the open domain at {:?}",
                x.coords()
            )));
        }
        let nearest = rule
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.distance(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
        let terms: Vec<Result<Vec<f64>>> = rule
            .nodes()
            .par_iter()
            .enumerate()
            .map(|(i, y)| {
                if Some(i) == nearest {
                    return Ok(Vec::new());
                }
                let g = kernel(x, y, &self.star.bump, self.order)?;
                let fv = self.f.eval(y);
                Ok(g.into_iter().map(|v| v * fv).collect())
            })
            .collect();
        let mut u = vec![0.0; x.dim()];
        for (t, w) in terms.into_iter().zip(rule.weights()) {
            for (ui, ti) in u.iter_mut().zip(t?) {
                *ui += w * ti;
            }
        }
        Ok(u)
    }

    /// Evaluates at many points in parallel.
    pub fn eval_many(&self, points: &[Point]) -> Result<Vec<Vec<f64>>> {
        points.par_iter().map(|p| self.eval(p)).collect()
    }

    pub fn to_field(&self) -> VectorField {
        let op = self.clone();
        VectorField::new(self.star.domain.n(), move |p| op.eval(p))
    }
}

fn orthonormal_complement(a: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = helper[0] * a[0] + helper[1] * a[1] + helper[2] * a[2];
    let mut e1: [f64; 3] = std::array::from_fn(|i| helper[i] - dot * a[i]);
    let norm = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    for v in e1.iter_mut() {
        *v /= norm;
    }
    let e2 = [
        a[1] * e1[2] - a[2] * e1[1],
        a[2] * e1[0] - a[0] * e1[2],
        a[0] * e1[1] - a[1] * e1[0],
    ];
    (e1, e2)
}

/// Divergence residual `|div u(x) - f(x)| / max_probes |f|` at each probe, by
/// Richardson-extrapolated central differences with step `h`. Returns the maximum and the
/// per-probe values.
pub fn div_residual(
    domain: &CuspDomain,
    f: &ScalarField,
    u: &VectorField,
    probes: &[Point],
    h: f64,
) -> Result<(f64, Vec<f64>)> {
    let raw: Vec<Result<(f64, f64)>> = probes
        .par_iter()
        .map(|p| {
            let jac = quadrature::fd_jacobian(u, p, h, domain)?;
            let div: f64 = (0..p.dim()).map(|i| jac[i][i]).sum();
            let fv = f.eval(p);
            Ok(((div - fv).abs(), fv.abs()))
        })
        .collect();
    let mut abs = Vec::with_capacity(probes.len());
    let mut f_max: f64 = 0.0;
    for r in raw {
        let (res, fv) = r?;
        abs.push(res);
        f_max = f_max.max(fv);
    }
    let scale = if f_max > 0.0 { f_max } else { 1.0 };
    let per: Vec<f64> = abs.into_iter().map(|r| r / scale).collect();
    let max = per.iter().copied().fold(0.0, f64::max);
    Ok((max, per))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn triangle() -> CuspDomain {
        CuspDomain::planar(1.0).unwrap()
    }

    /// `f = div w` for `w = (0, b1 - 2 b2, 0...)` with bumps centered on `y = 0`; `f` is odd in
    /// `y`, so symmetric rules see a mean of exactly zero.
    pub(crate) fn divergence_density(domain: &CuspDomain) -> (ScalarField, VectorField) {
        let n = domain.n();
        let y = vec![0.0; domain.k()];
        let z = vec![0.5; domain.m()];
        let b1 = BumpFunction::new(Point::new(0.55, &y, &z), 0.2).unwrap();
        let b2 = BumpFunction::new(Point::new(0.7, &y, &z), 0.15).unwrap();
        let (c1, c2) = (b1.clone(), b2.clone());
        let f = ScalarField::new(move |p| c1.gradient(p)[1] - 2.0 * c2.gradient(p)[1]);
        let w = VectorField::from_fn(n, move |p| {
            let mut v = vec![0.0; n];
            v[1] = b1.eval(p) - 2.0 * b2.eval(p);
            v
        });
        (f, w)
    }

    #[test]
    fn bump_examples() {
        let b = BumpFunction::new(Point::xy(0.75, 0.0), 0.125).unwrap();
        assert_eq!(b.eval(&Point::xy(0.9, 0.0)), 0.0);
        assert_relative_eq!(b.eval(&Point::xy(0.75, 0.0)), b.scale() * (-1.0f64).exp());
        let rule = QuadratureRule::ball(&triangle(), b.center(), 0.125, 40).unwrap();
        let mass = quadrature::integrate(&rule, &b.to_field(), 0.0).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "mass {mass}");

        let d3 = CuspDomain::new(1.0, 1, 1).unwrap();
        let b3 = BumpFunction::new(Point::new(0.75, &[0.0], &[0.5]), 0.125).unwrap();
        let rule3 = QuadratureRule::ball(&d3, b3.center(), 0.125, 40).unwrap();
        let mass3 = quadrature::integrate(&rule3, &b3.to_field(), 0.0).unwrap();
        assert!((mass3 - 1.0).abs() < 1e-8, "mass {mass3}");
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let b = BumpFunction::new(Point::xy(0.75, 0.0), 0.125).unwrap();
        let field = b.to_field();
        for p in [Point::xy(0.7, 0.03), Point::xy(0.8, -0.05), Point::xy(0.75, 0.1)] {
            let fd = quadrature::fd_gradient(&field, &p, 1e-3, &triangle()).unwrap();
            let an = b.gradient(&p);
            for (a, d) in an.iter().zip(&fd) {
                assert!((a - d).abs() < 1e-6 * b.max_value() / 0.125, "{a} vs {d}");
            }
        }
    }

    #[test]
    fn star_domain_validation() {
        assert!(StarDomain::new(&triangle()).is_ok());
        assert!(StarDomain::new(&CuspDomain::new(1.0, 2, 0).unwrap()).is_ok());
        assert!(matches!(StarDomain::new(&CuspDomain::planar(2.0).unwrap()), Err(Error::Domain(_))));
        assert!(StarDomain::with_ball(&triangle(), Point::xy(0.3, 0.0), 0.2).is_err());
    }

    #[test]
    fn r_interval_examples() {
        let b = BumpFunction::new(Point::xy(0.75, 0.0), 0.125).unwrap();
        let y = Point::xy(0.75, 0.0);
        let x = Point::xy(0.75 + 0.0625, 0.0);
        let (lo, hi) = kernel_r_interval(&x, &y, &b).unwrap().unwrap();
        assert_relative_eq!(lo, 1.0);
        assert_relative_eq!(hi, 2.0, max_relative = 1e-14);
        // pointing away from the ball
        let away = kernel_r_interval(&Point::xy(0.3, 0.0), &Point::xy(0.4, 0.0), &b).unwrap();
        assert!(away.is_none());
        assert!(matches!(kernel_r_interval(&y, &y, &b), Err(Error::SingularPoint)));
    }

    #[test]
    fn r_interval_matches_bisection() {
        let b = BumpFunction::new(Point::xy(0.75, 0.0), 0.125).unwrap();
        let y = Point::xy(0.2, 0.05);
        let x = Point::xy(0.3, 0.04);
        let (lo, hi) = kernel_r_interval(&x, &y, &b).unwrap().unwrap();
        let g = |r: f64| {
            let px = 0.2 + r * 0.1 - 0.75;
            let py = 0.05 - r * 0.01;
            px * px + py * py - 0.125 * 0.125
        };
        let bisect = |mut a: f64, mut c: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + c);
                if (g(a) > 0.0) == (g(m) > 0.0) {
                    a = m;
                } else {
                    c = m;
                }
            }
            0.5 * (a + c)
        };
        assert_relative_eq!(lo, bisect(1.0, 5.5), max_relative = 1e-12);
        assert_relative_eq!(hi, bisect(5.5, 20.0), max_relative = 1e-12);
    }

    #[test]
    fn exit_distance_on_triangle() {
        let s = StarDomain::new(&triangle()).unwrap();
        assert_relative_eq!(s.exit_distance(&[0.5, 0.0], &[1.0, 0.0]), 0.5);
        assert_relative_eq!(s.exit_distance(&[0.5, 0.0], &[-1.0, 0.0]), 0.5);
        assert_relative_eq!(s.exit_distance(&[0.5, 0.0], &[0.0, 1.0]), 0.5);
        let s2 = StarDomain::new(&CuspDomain::new(1.0, 2, 0).unwrap()).unwrap();
        assert_relative_eq!(s2.exit_distance(&[0.5, 0.0, 0.0], &[0.0, 0.0, 1.0]), 0.5);
        assert_relative_eq!(s2.exit_distance(&[0.5, 0.1, 0.0], &[-1.0, 0.0, 0.0]), 0.4, max_relative = 1e-12);
    }

    #[test]
    fn rejects_non_mean_zero_and_boundary_points() {
        let s = StarDomain::new(&triangle()).unwrap();
        let rule = QuadratureRule::new(&triangle(), 16, 1.0).unwrap();
        let err = BogovskiiOperator::new(&s, &ScalarField::constant(1.0), &rule).unwrap_err();
        match err {
            Error::NotMeanZero { mean, .. } => assert_relative_eq!(mean, 1.0, max_relative = 1e-12),
            e => panic!("{e:?}"),
        }
        let op = BogovskiiOperator::new(&s, &ScalarField::zero(), &rule).unwrap();
        assert_eq!(op.eval(&Point::xy(0.5, 0.2)).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(op.eval(&Point::xy(0.5, 0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn linearity() {
        let d = triangle();
        let s = StarDomain::new(&d).unwrap();
        let rule = QuadratureRule::new(&d, 48, 1.0).unwrap();
        let (f1, _) = divergence_density(&d);
        let f2 = quadrature::project_mean_zero(&rule, &ScalarField::new(|p| p.x() * p.x()), 0.0).unwrap();
        let sum = f1.add(&f2);
        let x = Point::xy(0.6, -0.2);
        let u1 = BogovskiiOperator::new(&s, &f1, &rule).unwrap().eval(&x).unwrap();
        let u2 = BogovskiiOperator::new(&s, &f2, &rule).unwrap().eval(&x).unwrap();
        let us = BogovskiiOperator::new(&s, &sum, &rule).unwrap().eval(&x).unwrap();
        for i in 0..2 {
            assert!((us[i] - u1[i] - u2[i]).abs() < 1e-10, "{us:?} vs {u1:?} + {u2:?}");
        }
    }

    #[test]
    fn analytic_field_has_zero_residual() {
        let d = triangle();
        let u = VectorField::from_fn(2, |p| vec![p.x() * p.x(), p.x() * p.y()[0]]);
        let f = ScalarField::new(|p| 3.0 * p.x());
        let probes = d.interior_probes(10, 3);
        let (max, _) = div_residual(&d, &f, &u, &probes, 1e-3).unwrap();
        assert!(max < 1e-9, "{max}");
        let zero = VectorField::from_fn(2, |_| vec![0.0, 0.0]);
        let (max0, _) = div_residual(&d, &ScalarField::zero(), &zero, &probes, 1e-3).unwrap();
        assert_eq!(max0, 0.0);
    }

    #[test]
    fn inverts_divergence_of_compact_field() {
        let d = triangle();
        let s = StarDomain::new(&d).unwrap();
        let rule = QuadratureRule::new(&d, 48, 1.0).unwrap();
        let (f, _) = divergence_density(&d);
        let op = BogovskiiOperator::new(&s, &f, &rule).unwrap();
        let probes = d.interior_probes(12, 7);
        let (max, _) = div_residual(&d, &f, &op.to_field(), &probes, 2e-3).unwrap();
        assert!(max < 1e-2, "residual {max}");
    }

    #[test]
    fn inverts_divergence_in_three_dimensions() {
        for d in [CuspDomain::new(1.0, 1, 1).unwrap(), CuspDomain::new(1.0, 2, 0).unwrap()] {
            let s = StarDomain::new(&d).unwrap();
            let rule = QuadratureRule::new(&d, 32, 1.0).unwrap();
            let (f, _) = divergence_density(&d);
            let op = BogovskiiOperator::new(&s, &f, &rule).unwrap();
            let probes = d.interior_probes(4, 11);
            let (max, _) = div_residual(&d, &f, &op.to_field(), &probes, 2e-3).unwrap();
            assert!(max < 5e-2, "residual {max} on {d:?}");
        }
    }

    #[test]
    fn direct_route_agrees_with_polar() {
        let d = triangle();
        let s = StarDomain::new(&d).unwrap();
        let (f, _) = divergence_density(&d);
        let rule = QuadratureRule::new(&d, 256, 1.0).unwrap();
        let op = BogovskiiOperator::new(&s, &f, &rule).unwrap().with_order(48);
        let x = Point::xy(0.55, 0.1);
        let polar = op.eval(&x).unwrap();
        let direct = op.eval_direct(&x, &rule).unwrap();
        let scale = polar.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..2 {
            assert!((polar[i] - direct[i]).abs() < 0.05 * scale, "{polar:?} vs {direct:?}");
        }
    }
}
