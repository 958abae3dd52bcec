//! Linear-plus-bubble velocities and linear pressures on [`GradedMesh`]: element integrals and
//! global assembly of the Stokes and Korn forms.

use nalgebra_sparse::{CooMatrix, CscMatrix};
use rayon::prelude::*;

use super::mesh::GradedMesh;
use crate::error::{Error, Result};
use crate::geometry::{dist_to_cusp, Point};
use crate::quadrature::gauss_legendre_unit;

/// Collapsed tensor Gauss rule on the reference triangle: `(lambda_1, lambda_2, weight)`, weights
/// summing to `1/2`.
fn reference_rule(n: usize) -> Vec<(f64, f64, f64)> {
    let g = gauss_legendre_unit(n);
    let mut out = Vec::with_capacity(n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            out.push((u, v * (1.0 - u), wu * wv * (1.0 - u)));
        }
    }
    out
}

/// Quadrature points of one cell with the values and gradients of the four local velocity basis
/// functions `lambda_0, lambda_1, lambda_2, 27 lambda_0 lambda_1 lambda_2`.
struct CellQuad {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    /// `[qp][basis]`
    values: Vec<[f64; 4]>,
    grads: Vec<[[f64; 2]; 4]>,
    /// Barycentric coordinates at each point (the pressure basis).
    lambdas: Vec<[f64; 3]>,
}

fn cell_quad(p: [[f64; 2]; 3], rule: &[(f64, f64, f64)]) -> CellQuad {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    // gradients of barycentric coordinates
    let g1 = [(p[2][1] - p[0][1]) / det, -(p[2][0] - p[0][0]) / det];
    let g2 = [-(p[1][1] - p[0][1]) / det, (p[1][0] - p[0][0]) / det];
    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
    let gl = [g0, g1, g2];
    let mut q = CellQuad {
        points: Vec::with_capacity(rule.len()),
        weights: Vec::with_capacity(rule.len()),
        values: Vec::with_capacity(rule.len()),
        grads: Vec::with_capacity(rule.len()),
        lambdas: Vec::with_capacity(rule.len()),
    };
    for &(l1, l2, w) in rule {
        let l0 = 1.0 - l1 - l2;
        let x = l0 * p[0][0] + l1 * p[1][0] + l2 * p[2][0];
        let y = l0 * p[0][1] + l1 * p[1][1] + l2 * p[2][1];
        let bub = 27.0 * l0 * l1 * l2;
        let gb: [f64; 2] =
            std::array::from_fn(|d| 27.0 * (l1 * l2 * gl[0][d] + l0 * l2 * gl[1][d] + l0 * l1 * gl[2][d]));
        q.points.push([x, y]);
        q.weights.push(w * det.abs());
        q.values.push([l0, l1, l2, bub]);
        q.grads.push([gl[0], gl[1], gl[2], gb]);
        q.lambdas.push([l0, l1, l2]);
    }
    q
}

fn rule_points() -> Vec<(f64, f64, f64)> {
    reference_rule(5)
}

#[inline]
fn weight(pt: [f64; 2], exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        dist_to_cusp(&Point::xy(pt[0], pt[1])).powf(exponent)
    }
}

fn coo_to_csc(n: usize, m: usize, entries: &[(usize, usize, f64)]) -> CscMatrix<f64> {
    let mut coo = CooMatrix::new(n, m);
    for &(i, j, v) in entries {
        coo.push(i, j, v);
    }
    CscMatrix::from(&coo)
}

/// Discrete Stokes operators. The velocity space is vector-valued; since the `H^1` inner product
/// acts component-wise, `A = diag(A_s, A_s)` and only the scalar block `A_s` is stored.
#[derive(Debug, Clone)]
pub struct DiscreteSaddle {
    /// `int grad u . grad v + u v` on bubbles and interior vertex hats.
    pub a_scalar: CscMatrix<f64>,
    /// `int q d(v)/dx`, pressures by velocities.
    pub bx: CscMatrix<f64>,
    /// `int q d(v)/dy`.
    pub by: CscMatrix<f64>,
    /// `int p q d_M^weight_exponent`.
    pub m_omega: CscMatrix<f64>,
    /// `int p q`.
    pub m: CscMatrix<f64>,
    pub weight_exponent: f64,
    pub n_bubbles: usize,
    pub n_interior: usize,
}

impl DiscreteSaddle {
    /// Scalar velocity unknowns (one component).
    pub fn velocity_dofs(&self) -> usize {
        self.a_scalar.nrows()
    }

    pub fn pressure_dofs(&self) -> usize {
        self.m.nrows()
    }
}

/// Velocity numbering: cell bubbles first, then interior vertices in layer order; this keeps
/// the Cholesky factor banded.
fn interior_numbering(mesh: &GradedMesh) -> (Vec<Option<usize>>, usize) {
    let nc = mesh.cells().len();
    let mut map = vec![None; mesh.vertices().len()];
    let mut next = nc;
    for (v, slot) in map.iter_mut().enumerate() {
        if !mesh.is_boundary(v) {
            *slot = Some(next);
            next += 1;
        }
    }
    (map, next - nc)
}

/// Assembles the linear-plus-bubble / linear pair with weighted pressure mass
/// `d_M^pressure_weight_exponent`.
pub fn assemble_stokes(mesh: &GradedMesh, pressure_weight_exponent: f64) -> Result<DiscreteSaddle> {
    let nc = mesh.cells().len();
    let nv = mesh.vertices().len();
    let (vmap, n_interior) = interior_numbering(mesh);
    let nvel = nc + n_interior;
    let rule = rule_points();

    type Local = (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>);
    let locals: Vec<Local> = mesh
        .cells()
        .par_iter()
        .enumerate()
        .map(|(c, t)| {
            let p = t.map(|i| mesh.vertices()[i]);
            let q = cell_quad(p, &rule);
            let dofs: [Option<usize>; 4] = [vmap[t[0]], vmap[t[1]], vmap[t[2]], Some(c)];
            let (mut a, mut bx, mut by, mut mw, mut mm) = (vec![], vec![], vec![], vec![], vec![]);
            let mut ka = [[0.0; 4]; 4];
            let mut kbx = [[0.0; 4]; 3];
            let mut kby = [[0.0; 4]; 3];
            let mut km = [[0.0; 3]; 3];
            let mut kw = [[0.0; 3]; 3];
            for k in 0..q.weights.len() {
                let w = q.weights[k];
                let (val, gr, lam) = (&q.values[k], &q.grads[k], &q.lambdas[k]);
                for i in 0..4 {
                    for j in 0..4 {
                        ka[i][j] += w * (gr[i][0] * gr[j][0] + gr[i][1] * gr[j][1] + val[i] * val[j]);
                    }
                }
                let ww = w * weight(q.points[k], pressure_weight_exponent);
                for i in 0..3 {
                    for j in 0..4 {
                        kbx[i][j] += w * lam[i] * gr[j][0];
                        kby[i][j] += w * lam[i] * gr[j][1];
                    }
                    for j in 0..3 {
                        km[i][j] += w * lam[i] * lam[j];
                        kw[i][j] += ww * lam[i] * lam[j];
                    }
                }
            }
            for i in 0..4 {
                let Some(di) = dofs[i] else { continue };
                for j in 0..4 {
                    if let Some(dj) = dofs[j] {
                        a.push((di, dj, ka[i][j]));
                    }
                }
            }
            for i in 0..3 {
                for j in 0..4 {
                    if let Some(dj) = dofs[j] {
                        bx.push((t[i], dj, kbx[i][j]));
                        by.push((t[i], dj, kby[i][j]));
                    }
                }
                for j in 0..3 {
                    mm.push((t[i], t[j], km[i][j]));
                    mw.push((t[i], t[j], kw[i][j]));
                }
            }
            (a, bx, by, mw, mm)
        })
        .collect();

    let (mut a, mut bx, mut by, mut mw, mut mm) = (vec![], vec![], vec![], vec![], vec![]);
    for (la, lbx, lby, lmw, lmm) in locals {
        a.extend(la);
        bx.extend(lbx);
        by.extend(lby);
        mw.extend(lmw);
        mm.extend(lmm);
    }
    let saddle = DiscreteSaddle {
        a_scalar: coo_to_csc(nvel, nvel, &a),
        bx: coo_to_csc(nv, nvel, &bx),
        by: coo_to_csc(nv, nvel, &by),
        m_omega: coo_to_csc(nv, nv, &mw),
        m: coo_to_csc(nv, nv, &mm),
        weight_exponent: pressure_weight_exponent,
        n_bubbles: nc,
        n_interior,
    };
    if saddle.a_scalar.values().iter().any(|v| !v.is_finite())
        || saddle.m_omega.values().iter().any(|v| !v.is_finite())
    {
        return Err(Error::Assembly("non-finite entries in assembled operators".into()));
    }
    Ok(saddle)
}

/// Operators of the Korn eigenproblem on the full (unconstrained) vector velocity space.
#[derive(Debug, Clone)]
pub struct KornSystem {
    /// `int Du : Dv d_M^lhs_exponent`.
    pub lhs: CscMatrix<f64>,
    /// `int_B u . v + int eps(u) : eps(v) d_M^rhs_exponent`.
    pub rhs: CscMatrix<f64>,
}

/// Disk used for the zero-order term of Korn's inequality.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Default for Disk {
    fn default() -> Self {
        Self {
            center: [0.75, 0.0],
            radius: 0.125,
        }
    }
}

impl Disk {
    fn contains(&self, p: [f64; 2]) -> bool {
        (p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2) < self.radius * self.radius
    }

    /// Distance from the center to the closed triangle.
    fn distance_to_triangle(&self, t: [[f64; 2]; 3]) -> f64 {
        let c = self.center;
        let cross = |a: [f64; 2], b: [f64; 2], p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let s = [cross(t[0], t[1], c), cross(t[1], t[2], c), cross(t[2], t[0], c)];
        if s.iter().all(|&v| v >= 0.0) || s.iter().all(|&v| v <= 0.0) {
            return 0.0;
        }
        let seg = |a: [f64; 2], b: [f64; 2]| {
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let u = (((c[0] - a[0]) * d[0] + (c[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
            ((a[0] + u * d[0] - c[0]).powi(2) + (a[1] + u * d[1] - c[1]).powi(2)).sqrt()
        };
        seg(t[0], t[1]).min(seg(t[1], t[2])).min(seg(t[2], t[0]))
    }
}

/// Splits the reference triangle `levels` times into 4 and places the collapsed rule on each
/// piece, for cells cut by the disk boundary.
fn refined_rule(levels: usize) -> Vec<(f64, f64, f64)> {
    let base = reference_rule(4);
    let mut tris = vec![[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(4 * tris.len());
        for t in tris {
            let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let (m01, m12, m20) = (mid(t[0], t[1]), mid(t[1], t[2]), mid(t[2], t[0]));
            next.push([t[0], m01, m20]);
            next.push([m01, t[1], m12]);
            next.push([m20, m12, t[2]]);
            next.push([m12, m20, m01]);
        }
        tris = next;
    }
    let mut out = Vec::new();
    for t in tris {
        let det = ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1])).abs();
        for &(a, b, w) in &base {
            let l0 = 1.0 - a - b;
            out.push((
                l0 * t[0][0] + a * t[1][0] + b * t[2][0],
                l0 * t[0][1] + a * t[1][1] + b * t[2][1],
                w * det,
            ));
        }
    }
    out
}

/// Assembles the Korn pair on all vertices and bubbles (no boundary conditions). Unknown
/// `2 d + c` is component `c` of velocity dof `d`, bubbles first.
pub fn assemble_korn(mesh: &GradedMesh, lhs_exponent: f64, rhs_exponent: f64, disk: &Disk) -> Result<KornSystem> {
    let dom = mesh.domain();
    let [cx, cy] = disk.center;
    let r = disk.radius;
    let inside = cx - r > mesh.eps_mesh() && cx + r < 1.0 && cy.abs() + r < dom.cross_radius(cx - r);
    if !(r > 0.0 && inside) {
        return Err(Error::Parameter(format!(
            "disk at {:?} with radius {r} is not inside the meshed domain",
            disk.center
        )));
    }
    let nc = mesh.cells().len();
    let ndof = 2 * (nc + mesh.vertices().len());
    let rule = rule_points();
    let fine = refined_rule(5);

    let locals: Vec<(Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>)> = mesh
        .cells()
        .par_iter()
        .enumerate()
        .map(|(c, t)| {
            let p = t.map(|i| mesh.vertices()[i]);
            let q = cell_quad(p, &rule);
            let dofs = [nc + t[0], nc + t[1], nc + t[2], c];
            let mut kl = [[0.0; 8]; 8];
            let mut kr = [[0.0; 8]; 8];
            for k in 0..q.weights.len() {
                let (w, gr) = (q.weights[k], &q.grads[k]);
                let wl = w * weight(q.points[k], lhs_exponent);
                let wr = w * weight(q.points[k], rhs_exponent);
                for a in 0..4 {
                    for b in 0..4 {
                        let dot = gr[a][0] * gr[b][0] + gr[a][1] * gr[b][1];
                        for ca in 0..2 {
                            for cb in 0..2 {
                                let (i, j) = (2 * a + ca, 2 * b + cb);
                                if ca == cb {
                                    kl[i][j] += wl * dot;
                                }
                                // eps(phi_a e_ca) : eps(phi_b e_cb)
                                let delta = if ca == cb { dot } else { 0.0 };
                                kr[i][j] += wr * 0.5 * (delta + gr[a][cb] * gr[b][ca]);
                            }
                        }
                    }
                }
            }
            // zero-order term on the disk
            let dist = disk.distance_to_triangle(p);
            if dist < r {
                let all_in = p.iter().all(|&v| disk.contains(v));
                let (pts, vals): (Vec<([f64; 2], f64)>, Vec<[f64; 4]>) = if all_in {
                    (
                        q.points.iter().copied().zip(q.weights.iter().copied()).collect(),
                        q.values.clone(),
                    )
                } else {
                    let det = (q.weights.iter().sum::<f64>() * 2.0).abs();
                    fine.iter()
                        .map(|&(l1, l2, w)| {
                            let l0 = 1.0 - l1 - l2;
                            let x = l0 * p[0][0] + l1 * p[1][0] + l2 * p[2][0];
                            let y = l0 * p[0][1] + l1 * p[1][1] + l2 * p[2][1];
                            (([x, y], w * det), [l0, l1, l2, 27.0 * l0 * l1 * l2])
                        })
                        .unzip()
                };
                for ((pt, w), v) in pts.iter().zip(&vals) {
                    if !disk.contains(*pt) {
                        continue;
                    }
                    for a in 0..4 {
                        for b in 0..4 {
                            for comp in 0..2 {
                                kr[2 * a + comp][2 * b + comp] += w * v[a] * v[b];
                            }
                        }
                    }
                }
            }
            let mut l = Vec::with_capacity(64);
            let mut rr = Vec::with_capacity(64);
            for a in 0..4 {
                for b in 0..4 {
                    for ca in 0..2 {
                        for cb in 0..2 {
                            let (i, j) = (2 * dofs[a] + ca, 2 * dofs[b] + cb);
                            l.push((i, j, kl[2 * a + ca][2 * b + cb]));
                            rr.push((i, j, kr[2 * a + ca][2 * b + cb]));
                        }
                    }
                }
            }
            (l, rr)
        })
        .collect();
    let (mut l, mut rr) = (vec![], vec![]);
    for (a, b) in locals {
        l.extend(a);
        rr.extend(b);
    }
    Ok(KornSystem {
        lhs: coo_to_csc(ndof, ndof, &l),
        rhs: coo_to_csc(ndof, ndof, &rr),
    })
}
