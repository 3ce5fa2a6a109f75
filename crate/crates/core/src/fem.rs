//! Q8 element matrices and global assembly for antiplane shear.
//!
//! With a single displacement u3 per node the constitutive matrix is mu * I on
//! the gradient, so `ke = integral(mu * grad N^T grad N)` and
//! `me = integral(rho * N^T N)`.

use std::sync::Arc;

use nalgebra::{Matrix2, SMatrix, Vector2};
use num_complex::Complex64;

use crate::config::BilayerPlate;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Q8Element};
use crate::quadrature::gauss_legendre;

pub type Matrix8 = SMatrix<f64, 8, 8>;

/// Reference coordinates of the eight nodes, in element node order.
pub const NODE_REF: [[f64; 2]; 8] = [
    [-1.0, -1.0],
    [1.0, -1.0],
    [1.0, 1.0],
    [-1.0, 1.0],
    [0.0, -1.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [-1.0, 0.0],
];

/// Serendipity shape functions and their (d/dxi, d/deta) derivatives.
pub fn shape_functions(xi: f64, eta: f64) -> ([f64; 8], [[f64; 2]; 8]) {
    let mut n = [0.0; 8];
    let mut d = [[0.0; 2]; 8];
    for (i, &[xi_i, eta_i]) in NODE_REF.iter().enumerate() {
        if i < 4 {
            let (a, b) = (1.0 + xi_i * xi, 1.0 + eta_i * eta);
            let c = xi_i * xi + eta_i * eta - 1.0;
            n[i] = 0.25 * a * b * c;
            d[i][0] = 0.25 * xi_i * b * (c + a);
            d[i][1] = 0.25 * eta_i * a * (c + b);
        } else if xi_i == 0.0 {
            n[i] = 0.5 * (1.0 - xi * xi) * (1.0 + eta_i * eta);
            d[i][0] = -xi * (1.0 + eta_i * eta);
            d[i][1] = 0.5 * eta_i * (1.0 - xi * xi);
        } else {
            n[i] = 0.5 * (1.0 + xi_i * xi) * (1.0 - eta * eta);
            d[i][0] = 0.5 * xi_i * (1.0 - eta * eta);
            d[i][1] = -eta * (1.0 + xi_i * xi);
        }
    }
    (n, d)
}

/// Jacobian d(x1, x2)/d(xi, eta) at a reference point.
pub fn jacobian(coords: &[[f64; 2]; 8], deriv: &[[f64; 2]; 8]) -> Matrix2<f64> {
    let mut j = Matrix2::zeros();
    for (c, d) in coords.iter().zip(deriv) {
        for r in 0..2 {
            for s in 0..2 {
                // J[r][s] = d x_s / d xi_r
                j[(r, s)] += d[r] * c[s];
            }
        }
    }
    j
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub ke: Matrix8,
    pub me: Matrix8,
}

/// Stiffness and consistent mass of one element with an `order x order`
/// Gauss rule.
pub fn element_matrices_from_coords(
    coords: &[[f64; 2]; 8],
    mu: f64,
    rho: f64,
    order: usize,
) -> std::result::Result<ElementMatrices, ()> {
    let (gx, gw) = gauss_legendre(order);
    let mut ke = Matrix8::zeros();
    let mut me = Matrix8::zeros();
    for (xi, wx) in gx.iter().zip(&gw) {
        for (eta, wy) in gx.iter().zip(&gw) {
            let (n, d) = shape_functions(*xi, *eta);
            let j = jacobian(coords, &d);
            let det = j.determinant();
            if !(det > 0.0) {
                return Err(());
            }
            let jinv = j.try_inverse().ok_or(())?;
            let mut grad = [[0.0; 2]; 8];
            for a in 0..8 {
                let g = jinv * Vector2::new(d[a][0], d[a][1]);
                grad[a] = [g[0], g[1]];
            }
            let w = wx * wy * det;
            for a in 0..8 {
                for b in a..8 {
                    let k = mu * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]) * w;
                    let m = rho * n[a] * n[b] * w;
                    ke[(a, b)] += k;
                    me[(a, b)] += m;
                    if a != b {
                        ke[(b, a)] += k;
                        me[(b, a)] += m;
                    }
                }
            }
        }
    }
    Ok(ElementMatrices { ke, me })
}

/// Element matrices for element `index` of `mesh`, material from its layer.
pub fn element_matrices(
    index: usize,
    elem: &Q8Element,
    mesh: &Mesh,
    plate: &BilayerPlate,
    order: usize,
) -> Result<ElementMatrices> {
    let mat = plate.material(elem.layer);
    element_matrices_from_coords(&mesh.element_coords(elem), mat.mu, mat.rho, order)
        .map_err(|_| Error::SingularJacobian { element: index })
}

/// Global stiffness and mass sharing one symmetric CSR pattern.
#[derive(Debug, Clone)]
pub struct StiffnessMass {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    k_vals: Vec<f64>,
    m_vals: Vec<f64>,
}

impl StiffnessMass {
    pub fn size(&self) -> usize {
        self.n
    }

    fn find(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    pub fn stiffness(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |p| self.k_vals[p])
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |p| self.m_vals[p])
    }

    /// Nonzero pattern and values of row `i`: (column, k, m).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        r.map(move |p| (self.cols[p], self.k_vals[p], self.m_vals[p]))
    }

    /// (K - omega^2 M) u.
    pub fn apply(&self, omega: f64, u: &[Complex64]) -> Vec<Complex64> {
        let w2 = omega * omega;
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .map(|(j, k, m)| u[j] * (k - w2 * m))
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn apply_mass(&self, u: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, _, m)| u[j] * m).sum::<Complex64>())
            .collect()
    }
}

/// Frequency-independent assembly of K and M.
pub fn assemble_matrices(mesh: &Mesh, plate: &BilayerPlate, order: usize) -> Result<StiffnessMass> {
    let n = mesh.node_count();
    let mut triplets: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n];
    for (e, elem) in mesh.elements.iter().enumerate() {
        let em = element_matrices(e, elem, mesh, plate, order)?;
        for a in 0..8 {
            let row = &mut triplets[elem.node_ids[a]];
            for b in 0..8 {
                row.push((elem.node_ids[b], em.ke[(a, b)], em.me[(a, b)]));
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut k_vals = Vec::new();
    let mut m_vals = Vec::new();
    row_ptr.push(0);
    for mut row in triplets {
        row.sort_by_key(|t| t.0);
        for (j, k, m) in row {
            if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == j {
                *k_vals.last_mut().unwrap() += k;
                *m_vals.last_mut().unwrap() += m;
            } else {
                cols.push(j);
                k_vals.push(k);
                m_vals.push(m);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(StiffnessMass {
        n,
        row_ptr,
        cols,
        k_vals,
        m_vals,
    })
}

/// Dynamic stiffness `S = K - omega^2 M` of one frequency. K and M stay real
/// and shared; complex entries are formed on demand.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub matrices: Arc<StiffnessMass>,
    pub omega: f64,
}

impl GlobalSystem {
    pub fn new(matrices: Arc<StiffnessMass>, omega: f64) -> Self {
        Self { matrices, omega }
    }

    pub fn size(&self) -> usize {
        self.matrices.size()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.matrices.stiffness(i, j) - self.omega * self.omega * self.matrices.mass(i, j),
            0.0,
        )
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.matrices.apply(self.omega, u)
    }
}

/// Assembles `S = K - omega^2 M` for the mesh.
pub fn assemble_global(
    mesh: &Mesh,
    plate: &BilayerPlate,
    omega: f64,
    order: usize,
) -> Result<GlobalSystem> {
    Ok(GlobalSystem::new(
        Arc::new(assemble_matrices(mesh, plate, order)?),
        omega,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn rect(x0: f64, y0: f64, w: f64, h: f64) -> [[f64; 2]; 8] {
        NODE_REF.map(|[xi, eta]| [x0 + 0.5 * w * (xi + 1.0), y0 + 0.5 * h * (eta + 1.0)])
    }

    #[test]
    fn interpolation_property() {
        for (i, &[xi, eta]) in NODE_REF.iter().enumerate() {
            let (n, _) = shape_functions(xi, eta);
            for (j, v) in n.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-15, "N{j} at node {i}");
            }
        }
    }

    #[test]
    fn centre_values() {
        let (n, _) = shape_functions(0.0, 0.0);
        for v in &n[..4] {
            assert!((v + 0.25).abs() < 1e-15);
        }
        for v in &n[4..] {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (xi, eta, h) = (0.3, -0.7, 1e-6);
        let (_, d) = shape_functions(xi, eta);
        let (np, _) = shape_functions(xi + h, eta);
        let (nm, _) = shape_functions(xi - h, eta);
        let (ep, _) = shape_functions(xi, eta + h);
        let (em, _) = shape_functions(xi, eta - h);
        for a in 0..8 {
            assert!((d[a][0] - (np[a] - nm[a]) / (2.0 * h)).abs() < 1e-8);
            assert!((d[a][1] - (ep[a] - em[a]) / (2.0 * h)).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(xi in -1.0f64..1.0, eta in -1.0f64..1.0) {
            let (n, d) = shape_functions(xi, eta);
            prop_assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            prop_assert!(d.iter().map(|g| g[0]).sum::<f64>().abs() < 1e-14);
            prop_assert!(d.iter().map(|g| g[1]).sum::<f64>().abs() < 1e-14);
        }

        #[test]
        fn element_matrix_invariants(
            x0 in -1e-3f64..1e-3, y0 in -1e-3f64..1e-3,
            w in 1e-5f64..1e-3, h in 1e-5f64..1e-3,
            mu in 1e9f64..1e11, rho in 1e3f64..1e4,
        ) {
            let em = element_matrices_from_coords(&rect(x0, y0, w, h), mu, rho, 3).unwrap();
            let kscale = em.ke.abs().max();
            prop_assert!((em.ke - em.ke.transpose()).abs().max() <= 1e-14 * kscale);
            prop_assert!((em.me - em.me.transpose()).abs().max() <= 1e-14 * em.me.abs().max());
            let ones = SMatrix::<f64, 8, 1>::repeat(1.0);
            prop_assert!((em.ke * ones).abs().max() <= 1e-9 * kscale);
            prop_assert!((em.me.sum() - rho * w * h).abs() <= 1e-12 * rho * w * h);
            let ke_eig = SymmetricEigen::new(em.ke).eigenvalues;
            let zeros = ke_eig.iter().filter(|v| v.abs() < 1e-9 * kscale).count();
            prop_assert_eq!(zeros, 1);
            prop_assert!(ke_eig.iter().all(|v| *v > -1e-9 * kscale));
            let me_eig = SymmetricEigen::new(em.me).eigenvalues;
            prop_assert!(me_eig.iter().all(|v| *v > 0.0));
        }
    }

    /// Independent 10x10-point evaluation of the unit-square stiffness written
    /// directly in physical coordinates (J = I/2 everywhere).
    #[test]
    fn unit_square_stiffness_matches_high_order_oracle() {
        let coords = rect(0.0, 0.0, 1.0, 1.0);
        let em = element_matrices_from_coords(&coords, 1.0, 1.0, 3).unwrap();
        let (gx, gw) = gauss_legendre(10);
        let mut oracle = Matrix8::zeros();
        for (xi, wx) in gx.iter().zip(&gw) {
            for (eta, wy) in gx.iter().zip(&gw) {
                let (_, d) = shape_functions(*xi, *eta);
                for a in 0..8 {
                    for b in 0..8 {
                        // d/dx = 2 d/dxi on the unit square, dA = dxi deta / 4
                        let g = 4.0 * (d[a][0] * d[b][0] + d[a][1] * d[b][1]);
                        oracle[(a, b)] += wx * wy * 0.25 * g;
                    }
                }
            }
        }
        assert!((em.ke - oracle).abs().max() < 1e-12 * oracle.abs().max());
    }

    #[test]
    fn inverted_element_is_rejected() {
        let mut coords = rect(0.0, 0.0, 1.0, 1.0);
        coords.swap(0, 1);
        coords.swap(2, 3);
        assert!(element_matrices_from_coords(&coords, 1.0, 1.0, 3).is_err());
    }
}
