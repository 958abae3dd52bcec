//! Discrete stability constants on meshed planar profiles (`k = 1`, `m = 0`): weighted inf-sup
//! and Korn constants under refinement, the `1/x^2` pressure counterexample, and the lifted
//! norm transfer behind the weighted Korn inequality.

pub mod counterexample;
pub mod eigen;
pub mod fem;
pub mod mesh;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{lifted_integral_identity, CuspDomain, LiftedDomain};

pub use counterexample::{counterexample_report, CounterexampleParams, CounterexampleReport};
pub use fem::{assemble_korn, assemble_stokes, DiscreteSaddle, Disk, KornSystem};
pub use mesh::{build_graded_mesh, GradedMesh, MeshParams};

/// Pressure columns per Schur-complement batch.
const SCHUR_BATCH: usize = 64;

/// One row of a constant-versus-level table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelConstant {
    pub level: usize,
    pub cells: usize,
    pub eps_mesh: f64,
    pub constant: f64,
}

/// CSV with columns `level,cells,eps_mesh,constant`.
pub fn levels_csv(rows: &[LevelConstant]) -> String {
    let mut out = String::from("level,cells,eps_mesh,constant\n");
    for r in rows {
        out.push_str(&format!("{},{},{:?},{:?}\n", r.level, r.cells, r.eps_mesh, r.constant));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSupReport {
    pub gamma: f64,
    /// Pressure weight `d_M^weight_exponent`.
    pub weight_exponent: f64,
    pub mesh: MeshParams,
    pub levels: Vec<LevelConstant>,
}

/// `B A^-1 B^T` for one component.
fn schur_block(chol: &CscCholesky<f64>, b: &CscMatrix<f64>) -> DMatrix<f64> {
    let np = b.nrows();
    let nvel = b.ncols();
    let bt = b.transpose();
    let starts: Vec<usize> = (0..np).step_by(SCHUR_BATCH).collect();
    let blocks: Vec<DMatrix<f64>> = starts
        .par_iter()
        .map(|&j0| {
            let j1 = (j0 + SCHUR_BATCH).min(np);
            let mut rhs = DMatrix::zeros(nvel, j1 - j0);
            for j in j0..j1 {
                let col = bt.col(j);
                for (&i, &v) in col.row_indices().iter().zip(col.values()) {
                    rhs[(i, j - j0)] = v;
                }
            }
            let x = chol.solve(&rhs);
            b * &x
        })
        .collect();
    let mut s = DMatrix::zeros(np, np);
    for (&j0, blk) in starts.iter().zip(&blocks) {
        s.columns_mut(j0, blk.ncols()).copy_from(blk);
    }
    s
}

/// Discrete inf-sup constant: square root of the smallest eigenvalue of
/// `(B A^-1 B^T) q = lambda M_w q` over pressures with `int q w = 0`. Constants span the kernel
/// of `B^T` and are `M_w`-orthogonal to that constraint space, so the constrained minimum is the
/// second generalized eigenvalue.
pub fn inf_sup_constant(saddle: &DiscreteSaddle) -> Result<f64> {
    let chol = CscCholesky::factor(&saddle.a_scalar)
        .map_err(|e| Error::Assembly(format!("velocity form is not positive definite: {e}")))?;
    let s = schur_block(&chol, &saddle.bx) + schur_block(&chol, &saddle.by);
    let s = (&s + s.transpose()) * 0.5;
    let ev = eigen::generalized_eigenvalues(&s, &DMatrix::from(&saddle.m_omega))?;
    if ev.len() < 2 {
        return Err(Error::Assembly("pressure space has fewer than two unknowns".into()));
    }
    let scale = ev[ev.len() - 1].abs().max(f64::MIN_POSITIVE);
    if ev[0].abs() > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "constant pressures are not in the kernel of the divergence (eigenvalue {:e})",
            ev[0]
        )));
    }
    let lambda = ev[1];
    if !(lambda > 0.0) {
        return Err(Error::Numerical(format!("non-positive inf-sup eigenvalue {lambda:e}")));
    }
    Ok(lambda.sqrt())
}

/// Inf-sup constants on levels `0..levels`.
pub fn inf_sup_study(domain: &CuspDomain, levels: usize, weight_exponent: f64, params: &MeshParams) -> Result<InfSupReport> {
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        let mesh = GradedMesh::at_level(domain, level, params)?;
        let saddle = assemble_stokes(&mesh, weight_exponent)?;
        rows.push(LevelConstant {
            level,
            cells: mesh.cells().len(),
            eps_mesh: mesh.eps_mesh(),
            constant: inf_sup_constant(&saddle)?,
        });
    }
    Ok(InfSupReport {
        gamma: domain.gamma(),
        weight_exponent,
        mesh: *params,
        levels: rows,
    })
}

/// Weights of the Korn eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KornWeighting {
    /// Both weights `1`.
    Unweighted,
    /// `d_M^(2 beta)` on `Du` and `d_M^(2 (beta + 1 - gamma))` on `eps(u)`.
    Weighted,
}

impl KornWeighting {
    /// `(lhs, rhs)` exponents.
    pub fn exponents(self, beta: f64, gamma: f64) -> (f64, f64) {
        match self {
            Self::Unweighted => (0.0, 0.0),
            Self::Weighted => (2.0 * beta, 2.0 * (beta + 1.0 - gamma)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KornReport {
    pub gamma: f64,
    pub beta: f64,
    pub weighting: KornWeighting,
    pub lhs_exponent: f64,
    pub rhs_exponent: f64,
    pub disk: Disk,
    pub mesh: MeshParams,
    pub levels: Vec<LevelConstant>,
}

/// Lanczos steps allowed per Korn eigenvalue.
const KORN_MAX_ITER: usize = 400;

/// Smallest `C` with `||Du||_{d^lhs} <= C (||u||_{L^2(B)} + ||eps(u)||_{d^rhs})` on the discrete
/// space without boundary conditions, in the squared form
/// `C^2 = max ||Du||^2 / (||u||_B^2 + ||eps(u)||^2)`.
pub fn korn_constant(mesh: &GradedMesh, beta: f64, disk: &Disk, weighting: KornWeighting) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Parameter(format!("Korn weights need beta >= 0, got {beta}")));
    }
    let (le, re) = weighting.exponents(beta, mesh.domain().gamma());
    let sys = assemble_korn(mesh, le, re, disk)?;
    let out = eigen::largest_generalized_eigenvalue(&sys.lhs, &sys.rhs, KORN_MAX_ITER, 1e-10)?;
    if !(out.value > 0.0) {
        return Err(Error::Numerical(format!("non-positive Korn eigenvalue {:e}", out.value)));
    }
    Ok(out.value.sqrt())
}

/// Korn constants on levels `0..levels`.
pub fn korn_study(
    domain: &CuspDomain,
    levels: usize,
    beta: f64,
    disk: &Disk,
    weighting: KornWeighting,
    params: &MeshParams,
) -> Result<KornReport> {
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        let mesh = GradedMesh::at_level(domain, level, params)?;
        rows.push(LevelConstant {
            level,
            cells: mesh.cells().len(),
            eps_mesh: mesh.eps_mesh(),
            constant: korn_constant(&mesh, beta, disk, weighting)?,
        });
    }
    let (lhs_exponent, rhs_exponent) = weighting.exponents(beta, domain.gamma());
    Ok(KornReport {
        gamma: domain.gamma(),
        beta,
        weighting,
        lhs_exponent,
        rhs_exponent,
        disk: *disk,
        mesh: *params,
        levels: rows,
    })
}

/// Both sides of `int_{Omega^{n',s}} |g|^p = |B_1^{n'}| int_Omega |g|^p x^{s n'}`, the norm
/// transfer that turns the lifted unweighted inequality into the weighted one when `s n' = p beta`.
pub fn lifted_korn_transfer_check(
    domain: &CuspDomain,
    n_prime: usize,
    s: f64,
    p: f64,
    g: &ScalarField,
    order: usize,
    grading: f64,
) -> Result<(f64, f64)> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    let lifted = LiftedDomain::new(*domain, n_prime, s)?;
    let g = g.clone();
    let gp = ScalarField::new(move |q| g.eval(q).abs().powf(p));
    lifted_integral_identity(&lifted, &gp, order, grading)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MeshParams {
        MeshParams::default()
    }

    #[test]
    fn inf_sup_positive_on_triangle() {
        let d = CuspDomain::planar(1.0).unwrap();
        let r = inf_sup_study(&d, 1, 0.0, &small()).unwrap();
        let c = r.levels[0].constant;
        assert!(c > 0.05 && c < 1.0, "{c}");
        let csv = levels_csv(&r.levels);
        assert!(csv.starts_with("level,cells,eps_mesh,constant\n") && csv.lines().count() == 2);
    }

    #[test]
    fn korn_positive_and_validated() {
        let d = CuspDomain::planar(1.0).unwrap();
        let mesh = GradedMesh::at_level(&d, 0, &small()).unwrap();
        let c = korn_constant(&mesh, 0.0, &Disk::default(), KornWeighting::Unweighted).unwrap();
        // Du = eps(u) for gradients, so the constant is at least 1
        assert!(c >= 1.0 && c.is_finite(), "{c}");
        assert!(matches!(
            korn_constant(&mesh, -0.5, &Disk::default(), KornWeighting::Weighted),
            Err(Error::Parameter(_))
        ));
        assert_eq!(KornWeighting::Weighted.exponents(0.0, 2.0), (0.0, -2.0));
    }

    #[test]
    fn lifted_transfer_trivial_and_weighted() {
        let d = CuspDomain::planar(2.0).unwrap();
        let g = ScalarField::new(|q| 1.0 + q.x() * q.y()[0]);
        let (l, r) = lifted_korn_transfer_check(&d, 0, 1.0, 2.0, &g, 24, 2.0).unwrap();
        assert!((l - r).abs() <= 1e-12 * r.abs());
        let (l, r) = lifted_korn_transfer_check(&d, 1, 1.0, 2.0, &g, 32, 2.0).unwrap();
        assert!((l - r).abs() <= 1e-6 * r.abs(), "{l} {r}");
    }
}
