//! Dirichlet-to-Neumann closure of the truncated plate.
//!
//! The scattered field on each virtual boundary is expanded in the
//! propagating modes. Projecting the nodal trace onto the mode shapes (with
//! the mu weight that makes the shapes orthogonal) recovers the modal
//! amplitudes, and the modal tractions turn them back into nodal forces:
//!
//! ```text
//! alpha(+/-) = R^-1 Ghat(+/-) U
//! F_sca      = Fg(+) alpha(+) + Fg(-) alpha(-)
//! ```
//!
//! Boundary `Gamma1` is x1 = -a (outward normal -x1, left-going modes) and
//! `Gamma2` is x1 = +a (outward normal +x1, right-going modes).

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::Layer;
use crate::dispersion::{gram_matrix, GuidedMode};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;

/// Gauss points per boundary edge.
pub const EDGE_QUADRATURE_POINTS: usize = 3;

/// Largest accepted off-diagonal / diagonal ratio of the projection matrix.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// x1 = -a
    Gamma1,
    /// x1 = +a
    Gamma2,
}

impl Side {
    /// x1 component of the outward unit normal.
    pub fn normal(self) -> f64 {
        match self {
            Side::Gamma1 => -1.0,
            Side::Gamma2 => 1.0,
        }
    }

    pub fn nodes(self, mesh: &Mesh) -> &[usize] {
        match self {
            Side::Gamma1 => &mesh.gamma1,
            Side::Gamma2 => &mesh.gamma2,
        }
    }
}

/// One Gauss point on a boundary edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgePoint {
    pub layer: Layer,
    pub x2: f64,
    /// Quadrature weight times edge Jacobian.
    pub weight: f64,
    /// Edge nodes bottom, middle, top.
    pub nodes: [usize; 3],
    pub shape: [f64; 3],
}

/// Quadrature points on every element edge of `side`.
pub fn boundary_points(mesh: &Mesh, side: Side) -> Vec<EdgePoint> {
    let (gx, gw) = gauss_legendre(EDGE_QUADRATURE_POINTS);
    let column = match side {
        Side::Gamma1 => 0,
        Side::Gamma2 => mesh.elems_x() - 1,
    };
    // local ids of (bottom, middle, top) on the left and right element edges
    let local = match side {
        Side::Gamma1 => [0, 7, 3],
        Side::Gamma2 => [1, 5, 2],
    };
    let mut points = Vec::with_capacity(mesh.elems_y() * gx.len());
    for j in 0..mesh.elems_y() {
        let elem = &mesh.elements[mesh.element_at(column, j)];
        let nodes = local.map(|l| elem.node_ids[l]);
        let (y0, y1) = (mesh.nodes[nodes[0]].x2, mesh.nodes[nodes[2]].x2);
        let jac = 0.5 * (y1 - y0);
        for (t, w) in gx.iter().zip(&gw) {
            points.push(EdgePoint {
                layer: elem.layer,
                x2: 0.5 * (y0 + y1) + jac * t,
                weight: w * jac,
                nodes,
                shape: [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)],
            });
        }
    }
    points
}

/// An N x P (or transposed P x N) matrix whose nonzero columns are the nodes
/// of one virtual boundary. `values[(n, j)]` belongs to mode `n` and node
/// `nodes[j]`.
#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    pub nodes: Vec<usize>,
    pub total_nodes: usize,
    pub values: DMatrix<Complex64>,
}

impl BoundaryMatrix {
    fn zeros(mesh: &Mesh, side: Side, n_modes: usize) -> Self {
        let nodes = side.nodes(mesh).to_vec();
        let len = nodes.len();
        Self {
            nodes,
            total_nodes: mesh.node_count(),
            values: DMatrix::zeros(n_modes, len),
        }
    }

    fn local_index(&self) -> HashMap<usize, usize> {
        self.nodes.iter().enumerate().map(|(j, &id)| (id, j)).collect()
    }

    pub fn n_modes(&self) -> usize {
        self.values.nrows()
    }

    /// Row action: `out[n] = sum_j values[(n, j)] * u[nodes[j]]`.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        (0..self.n_modes())
            .map(|n| {
                self.nodes
                    .iter()
                    .enumerate()
                    .map(|(j, &id)| self.values[(n, j)] * u[id])
                    .sum()
            })
            .collect()
    }

    /// Column action: `out[nodes[j]] += sum_n values[(n, j)] * coeffs[n]`.
    pub fn scatter(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        for (j, &id) in self.nodes.iter().enumerate() {
            out[id] += (0..self.n_modes())
                .map(|n| self.values[(n, j)] * coeffs[n])
                .sum::<Complex64>();
        }
    }

    /// Dense N x P form.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut d = DMatrix::zeros(self.n_modes(), self.total_nodes);
        for (j, &id) in self.nodes.iter().enumerate() {
            for n in 0..self.n_modes() {
                d[(n, id)] = self.values[(n, j)];
            }
        }
        d
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.values *= Complex64::new(factor, 0.0);
        self
    }
}

/// Full projection matrix `R[m][n] = integral(mu u_n u_m) e^{i k_n a}`.
pub fn projection_matrix(modes: &[GuidedMode], a: f64) -> DMatrix<Complex64> {
    let g = gram_matrix(modes);
    DMatrix::from_fn(modes.len(), modes.len(), |m, n| {
        g[(m, n)] * Complex64::from_polar(1.0, modes[n].k * a)
    })
}

/// Diagonal of the projection matrix, `R_nn = integral(mu u_n^2) e^{i k_n a}`.
pub fn projection_diagonal(modes: &[GuidedMode], a: f64) -> Result<Vec<Complex64>> {
    let r: Vec<Complex64> = modes
        .iter()
        .map(|m| m.weighted_norm_sq() * Complex64::from_polar(1.0, m.k * a))
        .collect();
    let largest = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (mode, v) in modes.iter().zip(&r) {
        if !(v.norm() >= 1e-12 * largest) || largest == 0.0 {
            return Err(Error::DegenerateMode { index: mode.index });
        }
    }
    Ok(r)
}

/// `Ghat` of one boundary: row m holds `integral(N_J mu u_m dx2)` per node.
pub fn assemble_projection(mesh: &Mesh, modes: &[GuidedMode], side: Side) -> BoundaryMatrix {
    let mut out = BoundaryMatrix::zeros(mesh, side, modes.len());
    let index = out.local_index();
    for p in boundary_points(mesh, side) {
        for (m, mode) in modes.iter().enumerate() {
            let f = mode.mu(p.layer) * mode.shape_in_layer(p.layer, p.x2) * p.weight;
            for (node, n) in p.nodes.iter().zip(p.shape) {
                out.values[(m, index[node])] += Complex64::new(n * f, 0.0);
            }
        }
    }
    out
}

/// Equivalent nodal forces of the modal stresses on one boundary, column n
/// stored as row n of `values`: `±integral(N_J mu i k_n u_n e^{i k_n a})`,
/// `+` on Gamma2 (right-going sigma_31), `-` on Gamma1 (left-going sigma_31).
pub fn modal_force_columns(mesh: &Mesh, modes: &[GuidedMode], side: Side) -> BoundaryMatrix {
    let a = mesh.a_virtual();
    let sign = side.normal();
    let mut out = BoundaryMatrix::zeros(mesh, side, modes.len());
    let index = out.local_index();
    for p in boundary_points(mesh, side) {
        for (m, mode) in modes.iter().enumerate() {
            let f = sign
                * mode.mu(p.layer)
                * mode.k
                * mode.shape_in_layer(p.layer, p.x2)
                * p.weight;
            let phase = I * Complex64::from_polar(1.0, mode.k * a);
            for (node, n) in p.nodes.iter().zip(p.shape) {
                out.values[(m, index[node])] += phase * (n * f);
            }
        }
    }
    out
}

/// Low-rank DtN operator `F_sca = fg+ R^-1 Ghat+ + fg- R^-1 Ghat-`.
///
/// `fg_plus` / `fg_minus` hold traction forces (`sigma_31 * n1`), i.e. the
/// modal force columns multiplied by the outward normal of their boundary.
#[derive(Debug, Clone)]
pub struct DtnOperator {
    pub r_diag: Vec<Complex64>,
    pub ghat_plus: BoundaryMatrix,
    pub ghat_minus: BoundaryMatrix,
    pub fg_plus: BoundaryMatrix,
    pub fg_minus: BoundaryMatrix,
    pub n_modes: usize,
    pub wavenumbers: Vec<f64>,
    pub a_virtual: f64,
}

impl DtnOperator {
    /// Modal amplitudes of a nodal field: (alpha+, alpha-).
    pub fn modal_amplitudes(&self, u: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let solve = |g: Vec<Complex64>| -> Vec<Complex64> {
            g.iter().zip(&self.r_diag).map(|(g, r)| g / r).collect()
        };
        (
            solve(self.ghat_plus.apply(u)),
            solve(self.ghat_minus.apply(u)),
        )
    }

    /// `F_sca U` without forming the P x P product.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let (ap, am) = self.modal_amplitudes(u);
        let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
        self.fg_plus.scatter(&ap, &mut out);
        self.fg_minus.scatter(&am, &mut out);
        out
    }

    pub fn total_nodes(&self) -> usize {
        self.ghat_plus.total_nodes
    }
}

/// Builds the DtN operator for `modes` on the mesh's virtual boundaries.
pub fn build_dtn(mesh: &Mesh, modes: &[GuidedMode]) -> Result<DtnOperator> {
    let a = mesh.a_virtual();
    let full = projection_matrix(modes, a);
    let n = modes.len();
    let min_diag = (0..n).map(|i| full[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    let mut max_off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_off = max_off.max(full[(i, j)].norm());
            }
        }
    }
    if max_off > ORTHOGONALITY_TOL * min_diag {
        return Err(Error::NonOrthogonal {
            ratio: max_off / min_diag,
        });
    }
    let r_diag = projection_diagonal(modes, a)?;
    Ok(DtnOperator {
        r_diag,
        ghat_plus: assemble_projection(mesh, modes, Side::Gamma2),
        ghat_minus: assemble_projection(mesh, modes, Side::Gamma1),
        fg_plus: modal_force_columns(mesh, modes, Side::Gamma2).scaled(Side::Gamma2.normal()),
        fg_minus: modal_force_columns(mesh, modes, Side::Gamma1).scaled(Side::Gamma1.normal()),
        n_modes: n,
        wavenumbers: modes.iter().map(|m| m.k).collect(),
        a_virtual: a,
    })
}
