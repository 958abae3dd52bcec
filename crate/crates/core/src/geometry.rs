//! Cusp domains `{(x, y, z) : 0 < x < 1, |y| < x^gamma, z in (0,1)^m}`, the
//! distance to the cusp set, the power change of variables onto the
//! convex reference domain and the Piola push-forward.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::quadrature::{self, QuadratureRule};

pub type Coords = SmallVec<[f64; 4]>;

/// A point of `R^n` split as `(x, y, z)` with `y` in `R^k` and `z` in `R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Coords,
    k: usize,
}

impl Point {
    pub fn new(x: f64, y: &[f64], z: &[f64]) -> Self {
        let mut coords = Coords::with_capacity(1 + y.len() + z.len());
        coords.push(x);
        coords.extend_from_slice(y);
        coords.extend_from_slice(z);
        Self { coords, k: y.len() }
    }

    /// Builds a point from flat coordinates `[x, y_1..y_k, z_1..z_m]`.
    pub fn from_coords(coords: &[f64], k: usize) -> Self {
        debug_assert!(coords.len() > k);
        Self {
            coords: Coords::from_slice(coords),
            k,
        }
    }

    /// 2D convenience constructor `(x, y)`.
    pub fn xy(x: f64, y: f64) -> Self {
        Self::new(x, &[y], &[])
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.coords[1..=self.k]
    }

    #[inline]
    pub fn z(&self) -> &[f64] {
        &self.coords[1 + self.k..]
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.coords.len() - 1 - self.k
    }

    /// Euclidean norm of the `y` block.
    #[inline]
    pub fn y_norm(&self) -> f64 {
        self.y().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Copy with coordinate `i` displaced by `delta`.
    pub fn shifted(&self, i: usize, delta: f64) -> Self {
        let mut p = self.clone();
        p.coords[i] += delta;
        p
    }

    /// Copy with the `x` coordinate replaced.
    pub fn with_x(&self, x: f64) -> Self {
        let mut p = self.clone();
        p.coords[0] = x;
        p
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// `Omega = {(x, y, z) in I x R^k x I^m : |y| < x^gamma}` with `I = (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspDomain {
    gamma: f64,
    k: usize,
    m: usize,
}

impl CuspDomain {
    pub fn new(gamma: f64, k: usize, m: usize) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::Parameter(format!("gamma must be >= 1, got {gamma}")));
        }
        if k < 1 {
            return Err(Error::Parameter("cross-section dimension k must be >= 1".into()));
        }
        Ok(Self { gamma, k, m })
    }

    /// The planar profile `|y| < x^gamma` (k = 1, m = 0).
    pub fn planar(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1, 0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Ambient dimension `n = m + k + 1`.
    pub fn n(&self) -> usize {
        self.m + self.k + 1
    }

    /// `alpha = 1 / gamma`.
    pub fn alpha(&self) -> f64 {
        1.0 / self.gamma
    }

    /// The convex domain `|y| < x` with the same `k` and `m`.
    pub fn reference(&self) -> CuspDomain {
        CuspDomain {
            gamma: 1.0,
            k: self.k,
            m: self.m,
        }
    }

    pub fn is_reference(&self) -> bool {
        self.gamma == 1.0
    }

    pub fn check_shape(&self, pt: &Point) -> Result<()> {
        if pt.k() != self.k || pt.m() != self.m {
            return Err(Error::Shape(format!(
                "point has (k, m) = ({}, {}), domain expects ({}, {})",
                pt.k(),
                pt.m(),
                self.k,
                self.m
            )));
        }
        Ok(())
    }

    /// Strict interior test; boundary points are outside.
    pub fn contains(&self, pt: &Point) -> Result<bool> {
        self.check_shape(pt)?;
        Ok(self.contains_unchecked(pt))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, pt: &Point) -> bool {
        let x = pt.x();
        if !(x > 0.0 && x < 1.0) {
            return false;
        }
        if pt.z().iter().any(|&z| !(z > 0.0 && z < 1.0)) {
            return false;
        }
        pt.y_norm() < self.cross_radius(x)
    }

    /// Cross-section radius `x^gamma`.
    #[inline]
    pub fn cross_radius(&self, x: f64) -> f64 {
        if self.gamma == 1.0 {
            x
        } else {
            x.powf(self.gamma)
        }
    }

    /// Euclidean distance to `M = {0} x [0,1]^m`, with `z` clamped onto the unit cube.
    pub fn dist_to_cusp(&self, pt: &Point) -> f64 {
        dist_to_cusp(pt)
    }

    /// `F(x_hat, y_hat, z_hat) = (x_hat^alpha, y_hat, z_hat)` and `det DF = alpha * x_hat^(alpha - 1)`.
    pub fn cusp_map(&self, pt_hat: &Point) -> Result<(Point, f64)> {
        self.check_shape(pt_hat)?;
        let xh = pt_hat.x();
        if !(xh > 0.0) {
            return Err(Error::Domain(format!("cusp map needs x_hat > 0, got {xh}")));
        }
        let a = self.alpha();
        let x = xh.powf(a);
        Ok((pt_hat.with_x(x), a * xh.powf(a - 1.0)))
    }

    /// `F^{-1}(x, y, z) = (x^gamma, y, z)` and `det DF^{-1} = gamma * x^(gamma - 1)`.
    pub fn inverse_cusp_map(&self, pt: &Point) -> Result<(Point, f64)> {
        self.check_shape(pt)?;
        let x = pt.x();
        if !(x > 0.0) {
            return Err(Error::Domain(format!("inverse cusp map needs x > 0, got {x}")));
        }
        let g = self.gamma;
        Ok((pt.with_x(x.powf(g)), g * x.powf(g - 1.0)))
    }

    /// Lower bound on the distance to the boundary, used to size stencils.
    /// Exact for the reference domain with k = 1; conservative otherwise.
    pub fn boundary_clearance(&self, pt: &Point) -> f64 {
        let x = pt.x();
        let mut d = (1.0 - x).min(x);
        for &z in pt.z() {
            d = d.min(z).min(1.0 - z);
        }
        let g = self.gamma;
        // |y| = x^g has slope g x^(g-1) <= g on (0, 1)
        let gap = self.cross_radius(x) - pt.y_norm();
        let slope = g * x.powf(g - 1.0);
        d.min(gap / (1.0 + slope * slope).sqrt()).max(0.0)
    }
}

impl CuspDomain {
    /// Deterministic interior probe points: `x` in `[0.2, 0.9]`, `|y| <= 0.8 x^gamma`,
    /// `z` in `[0.2, 0.8]^m`.
    pub fn interior_probes(&self, count: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let x = rng.gen_range(0.2..=0.9);
                let r = 0.8 * self.cross_radius(x);
                let y: Vec<f64> = loop {
                    let u: Vec<f64> = (0..self.k).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    if u.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                        break u.into_iter().map(|v| r * v).collect();
                    }
                };
                let z: Vec<f64> = (0..self.m).map(|_| rng.gen_range(0.2..=0.8)).collect();
                Point::new(x, &y, &z)
            })
            .collect()
    }
}

impl CuspDomain {
    /// Deterministic points at relative distance `offset` from the boundary, cycling through
    /// the lateral surface, the end face `x = 1`, the tip and (for `m > 0`) the `z` faces.
    pub fn near_boundary_probes(&self, count: usize, seed: u64, offset: f64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let faces = if self.m > 0 { 4 } else { 3 };
        (0..count)
            .map(|i| {
                let mut x = rng.gen_range(0.05..0.95);
                let mut dir: Vec<f64> = (0..self.k).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                dir.iter_mut().for_each(|v| *v /= norm);
                let mut frac = rng.gen_range(0.0..0.9);
                let mut z: Vec<f64> = (0..self.m).map(|_| rng.gen_range(0.1..0.9)).collect();
                match i % faces {
                    0 => frac = 1.0 - offset,
                    1 => x = 1.0 - offset,
                    2 => x = offset,
                    _ => {
                        let j = rng.gen_range(0..self.m);
                        z[j] = if rng.gen_bool(0.5) { offset } else { 1.0 - offset };
                    }
                }
                let r = frac * self.cross_radius(x);
                let y: Vec<f64> = dir.iter().map(|v| r * v).collect();
                Point::new(x, &y, &z)
            })
            .collect()
    }
}

/// Free-function form of [`CuspDomain::dist_to_cusp`]; only the point's own
/// `(x, y, z)` split matters.
pub fn dist_to_cusp(pt: &Point) -> f64 {
    let mut s = pt.x() * pt.x();
    for &y in pt.y() {
        s += y * y;
    }
    for &z in pt.z() {
        let c = z.clamp(0.0, 1.0);
        s += (z - c) * (z - c);
    }
    s.sqrt()
}

/// Lebesgue measure of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Piola push-forward of a field on the reference domain:
/// `u_1(x,y,z) = v_1(x^gamma, y, z)`, `u_j(x,y,z) = gamma x^(gamma-1) v_j(x^gamma, y, z)`.
pub fn piola_pushforward(domain: &CuspDomain, v_hat: &VectorField) -> VectorField {
    let dom = *domain;
    let v = v_hat.clone();
    VectorField::new(v_hat.dim(), move |pt| {
        if !dom.contains(pt)? {
            return Err(Error::Domain(format!(
                "Piola field evaluated outside the cusp domain at {:?}",
                pt.coords()
            )));
        }
        let g = dom.gamma;
        let x = pt.x();
        let xg = x.powf(g);
        let scale = g * xg / x;
        let mut out = v.eval(&pt.with_x(xg))?;
        for c in out.iter_mut().skip(1) {
            *c *= scale;
        }
        Ok(out)
    })
}

/// `Omega^{n', s} = {(x, y, z') : (x, y) in Omega, |z'| < x^s}` for a base domain with `m = 0`
/// conventions extended to any `m` (the lift is appended after `z`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedDomain {
    base: CuspDomain,
    n_prime: usize,
    s: f64,
}

impl LiftedDomain {
    pub fn new(base: CuspDomain, n_prime: usize, s: f64) -> Result<Self> {
        if n_prime > 2 {
            return Err(Error::Parameter(format!(
                "lifted cross-sections of dimension {n_prime} > 2 are not supported"
            )));
        }
        if n_prime > 0 && !(s > 0.0 && s <= base.gamma()) {
            return Err(Error::Parameter(format!(
                "lift exponent s must lie in (0, gamma] = (0, {}], got {s}",
                base.gamma()
            )));
        }
        Ok(Self { base, n_prime, s })
    }

    /// The lift serving `(p, beta)`: `s = p * beta / n'`.
    pub fn for_weight(base: CuspDomain, n_prime: usize, p: f64, beta: f64) -> Result<Self> {
        if n_prime == 0 {
            if beta != 0.0 {
                return Err(Error::Parameter("n' = 0 only serves beta = 0".into()));
            }
            return Self::new(base, 0, 1.0);
        }
        Self::new(base, n_prime, p * beta / n_prime as f64)
    }

    pub fn base(&self) -> &CuspDomain {
        &self.base
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Both sides of `int_{Omega^{n',s}} g = |B_1^{n'}| int_Omega g x^{s n'}` for `g` depending on
/// base coordinates only.
///
/// The left side is a genuine quadrature over the lifted domain (base rule of order `order + 3`
/// times a rule on the scaled `n'`-ball); the right side integrates against the base rule of
/// order `order`.
pub fn lifted_integral_identity(
    lifted: &LiftedDomain,
    g: &ScalarField,
    order: usize,
    grading: f64,
) -> Result<(f64, f64)> {
    let base = lifted.base;
    let sn = lifted.s * lifted.n_prime as f64;

    let rhs_rule = QuadratureRule::new(&base, order, grading)?;
    let rhs = unit_ball_volume(lifted.n_prime)
        * quadrature::integrate_fn(&rhs_rule, 0.0, |p| Ok(g.eval(p) * p.x().powf(sn)))?;

    let lhs_rule = QuadratureRule::new(&base, order + 3, grading)?;
    let cross = quadrature::unit_ball_rule(lifted.n_prime, order + 3)?;
    let lhs = quadrature::integrate_fn(&lhs_rule, 0.0, |p| {
        let r = p.x().powf(lifted.s);
        let jac = r.powi(lifted.n_prime as i32);
        let gv = g.eval(p);
        let mut acc = 0.0;
        for (_, w) in &cross {
            acc += w * jac * gv;
        }
        Ok(acc)
    })?;
    Ok((lhs, rhs))
}
