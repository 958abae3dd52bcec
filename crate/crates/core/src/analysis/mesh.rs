//! Layered triangulations of the truncated planar profile `{eps < x < 1, |y| < x^gamma}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CuspDomain;

/// Layer layout shared by all refinement levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshParams {
    /// Cells across each cross-section.
    pub cross_cells: usize,
    /// Largest layer width, the same on every level.
    pub max_width: f64,
    /// Truncation at level 0; divided by 4 per level.
    pub eps0: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self {
            cross_cells: 4,
            max_width: 0.125,
            eps0: 0.1,
        }
    }
}

impl MeshParams {
    pub fn eps_at(&self, level: usize) -> f64 {
        self.eps0 * 0.25f64.powi(level as i32)
    }

}

/// Structured triangulation: vertex `(i, j)` sits on layer `x_i` at height
/// `x_i^gamma (2 j / M - 1)`, with layers ordered from `x = 1` toward the tip.
#[derive(Debug, Clone)]
pub struct GradedMesh {
    domain: CuspDomain,
    level: usize,
    eps_mesh: f64,
    cross_cells: usize,
    layers: Vec<f64>,
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

/// Triangulates `{eps_mesh < x < 1, |y| < x^gamma}`. Layer widths are `min(2 x^gamma / M,
/// max_width)`, so cells are shape-regular down to the truncation; a final sliver thinner than
/// half a layer is merged into its neighbour.
pub fn build_graded_mesh(
    domain: &CuspDomain,
    level: usize,
    cross_cells: usize,
    max_width: f64,
    eps_mesh: f64,
) -> Result<GradedMesh> {
    if domain.k() != 1 || domain.m() != 0 {
        return Err(Error::Parameter("meshes exist only for the planar profile (k = 1, m = 0)".into()));
    }
    if !(eps_mesh > 0.0 && eps_mesh < 1.0) {
        return Err(Error::Parameter(format!("eps_mesh must lie in (0, 1), got {eps_mesh}")));
    }
    if cross_cells < 2 || cross_cells % 2 != 0 {
        return Err(Error::Parameter(format!("cross_cells must be even and >= 2, got {cross_cells}")));
    }
    if !(max_width > 0.0) {
        return Err(Error::Parameter(format!("max_width must be positive, got {max_width}")));
    }
    let m = cross_cells;
    let mut layers = vec![1.0];
    loop {
        let x = *layers.last().unwrap();
        let dx = (2.0 * domain.cross_radius(x) / m as f64).min(max_width);
        let next = x - dx;
        if next <= eps_mesh + 0.5 * dx {
            if x - eps_mesh < 0.5 * dx && layers.len() > 1 {
                *layers.last_mut().unwrap() = eps_mesh;
            } else {
                layers.push(eps_mesh);
            }
            break;
        }
        layers.push(next);
    }

    let mut vertices = Vec::with_capacity(layers.len() * (m + 1));
    let mut boundary = Vec::with_capacity(vertices.capacity());
    let last = layers.len() - 1;
    for (i, &x) in layers.iter().enumerate() {
        let r = domain.cross_radius(x);
        for j in 0..=m {
            vertices.push([x, r * (2.0 * j as f64 / m as f64 - 1.0)]);
            boundary.push(i == 0 || i == last || j == 0 || j == m);
        }
    }
    let id = |i: usize, j: usize| i * (m + 1) + j;
    let mut cells = Vec::with_capacity(2 * m * last);
    for i in 0..last {
        for j in 0..m {
            let (a, b, c, d) = (id(i, j), id(i, j + 1), id(i + 1, j), id(i + 1, j + 1));
            // diagonals mirrored about y = 0
            let pair = if j < m / 2 { [[a, d, b], [a, c, d]] } else { [[a, c, b], [b, c, d]] };
            for t in pair {
                cells.push(orient(&vertices, t));
            }
        }
    }
    Ok(GradedMesh {
        domain: *domain,
        level,
        eps_mesh,
        cross_cells: m,
        layers,
        vertices,
        cells,
        boundary,
    })
}

fn signed_area(v: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let (p, q, r) = (v[t[0]], v[t[1]], v[t[2]]);
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn orient(v: &[[f64; 2]], t: [usize; 3]) -> [usize; 3] {
    if signed_area(v, t) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

impl GradedMesh {
    /// Mesh for `level` under `params`.
    pub fn at_level(domain: &CuspDomain, level: usize, params: &MeshParams) -> Result<Self> {
        build_graded_mesh(
            domain,
            level,
            params.cross_cells,
            params.max_width,
            params.eps_at(level),
        )
    }

    pub fn domain(&self) -> &CuspDomain {
        &self.domain
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn eps_mesh(&self) -> f64 {
        self.eps_mesh
    }

    pub fn cross_cells(&self) -> usize {
        self.cross_cells
    }

    /// Layer abscissae, decreasing from 1 to `eps_mesh`.
    pub fn layers(&self) -> &[f64] {
        &self.layers
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        signed_area(&self.vertices, self.cells[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_area(c)).sum()
    }

    /// Largest ratio of longest edge to inscribed-circle diameter.
    pub fn max_aspect_ratio(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, t) in self.cells.iter().enumerate() {
            let p = t.map(|i| self.vertices[i]);
            let e = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            let (l0, l1, l2) = (e(p[1], p[2]), e(p[0], p[2]), e(p[0], p[1]));
            let inradius = 2.0 * self.cell_area(c) / (l0 + l1 + l2);
            worst = worst.max(l0.max(l1).max(l2) / (2.0 * inradius));
        }
        worst
    }
}
