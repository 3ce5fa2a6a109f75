//! Scattered-field solve for one incident mode at one frequency.
//!
//! The truncated problem is
//!
//! ```text
//! (S - F_sca) U_sca = F_inc - S U_inc,   S = K - omega^2 M
//! ```
//!
//! with the low-rank DtN term `F_sca = fg+ R^-1 Ghat+ + fg- R^-1 Ghat-`.
//! Instead of a Woodbury update (which needs `S` alone to be invertible, and
//! it is not at the plate's interior resonances) the modal amplitudes are
//! kept as extra unknowns:
//!
//! ```text
//! [ R     -Ghat-   0     ] [beta-]   [ 0   ]
//! [ -fg-   S      -fg+   ] [ U   ] = [ rhs ]
//! [ 0     -Ghat+   R     ] [beta+]   [ 0   ]
//! ```
//!
//! Ordering `beta-` before the first node column (Gamma1) and `beta+` after
//! the last (Gamma2) keeps the bordered matrix banded.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::banded::{BandLu, BandMatrix};
use crate::config::{BilayerPlate, Scenario};
use crate::dispersion::{find_propagating_modes, GuidedMode, DEFAULT_ROOT_TOL};
use crate::dtn::{boundary_points, build_dtn, DtnOperator, Side};
use crate::error::{Error, Result};
use crate::fem::{assemble_matrices, GlobalSystem, StiffnessMass};
use crate::mesh::{build_mesh, Mesh};

/// Relative residual accepted from the bordered solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

const REFINEMENT_STEPS: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Incident guided wave `A u(x2) e^{i k x1}` sampled at the nodes.
#[derive(Debug, Clone)]
pub struct IncidentField {
    pub mode: GuidedMode,
    pub amplitude: Complex64,
    pub u_inc: Vec<Complex64>,
}

/// Nodal sample of a right-going incident mode. Crack twins share coordinates
/// and therefore values.
pub fn incident_nodal_field(mode: &GuidedMode, mesh: &Mesh, amplitude: Complex64) -> IncidentField {
    let u_inc = mesh
        .nodes
        .iter()
        .map(|n| {
            let x2 = n.x2.clamp(-mode.h_b(), mode.h_a());
            let shape = mode.shape(x2).expect("node inside plate thickness");
            amplitude * shape * Complex64::from_polar(1.0, mode.k * n.x1)
        })
        .collect();
    IncidentField {
        mode: mode.clone(),
        amplitude,
        u_inc,
    }
}

/// Equivalent nodal forces of the incident traction `sigma_31 n1` on both
/// virtual boundaries.
pub fn incident_boundary_forces(mesh: &Mesh, inc: &IncidentField) -> Vec<Complex64> {
    let mode = &inc.mode;
    let a = mesh.a_virtual();
    let mut f = vec![ZERO; mesh.node_count()];
    for side in [Side::Gamma1, Side::Gamma2] {
        let x1 = side.normal() * a;
        let phase = inc.amplitude * I * Complex64::from_polar(1.0, mode.k * x1);
        for p in boundary_points(mesh, side) {
            let t = side.normal() * mode.mu(p.layer) * mode.k * mode.shape_in_layer(p.layer, p.x2);
            for (node, n) in p.nodes.iter().zip(p.shape) {
                f[*node] += phase * (t * n * p.weight);
            }
        }
    }
    f
}

/// Right-hand side `F_inc - S U_inc`.
pub fn build_rhs(system: &GlobalSystem, mesh: &Mesh, inc: &IncidentField) -> Result<Vec<Complex64>> {
    if inc.u_inc.len() != system.size() {
        return Err(Error::Dimension {
            expected: system.size(),
            got: inc.u_inc.len(),
        });
    }
    if mesh.node_count() != system.size() {
        return Err(Error::Dimension {
            expected: system.size(),
            got: mesh.node_count(),
        });
    }
    let su = system.apply(&inc.u_inc);
    let mut rhs = incident_boundary_forces(mesh, inc);
    for (r, s) in rhs.iter_mut().zip(su) {
        *r -= s;
    }
    Ok(rhs)
}

/// `(S - F_sca) u`.
pub fn apply_operator(system: &GlobalSystem, dtn: &DtnOperator, u: &[Complex64]) -> Vec<Complex64> {
    let mut out = system.apply(u);
    for (o, d) in out.iter_mut().zip(dtn.apply(u)) {
        *o -= d;
    }
    out
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Factorized bordered system of one frequency, reusable for several
/// right-hand sides.
pub struct BorderedSolver<'a> {
    system: &'a GlobalSystem,
    dtn: &'a DtnOperator,
    /// Position of each node id in the bordered unknown vector.
    position: Vec<usize>,
    /// Row scaling of the modal equations.
    modal_scale: f64,
    lu: BandLu,
}

impl<'a> BorderedSolver<'a> {
    pub fn new(system: &'a GlobalSystem, dtn: &'a DtnOperator, mesh: &Mesh) -> Result<Self> {
        let p = system.size();
        let n = dtn.n_modes;
        if mesh.node_count() != p || dtn.total_nodes() != p {
            return Err(Error::Dimension {
                expected: p,
                got: mesh.node_count(),
            });
        }
        let mut position = vec![0usize; p];
        for (k, &id) in mesh.band_order().iter().enumerate() {
            position[id] = n + k;
        }
        let plus = |m: usize| n + p + m;

        let mats = &system.matrices;
        let mut bw = 0usize;
        for i in 0..p {
            for (j, _, _) in mats.row(i) {
                bw = bw.max(position[i].abs_diff(position[j]));
            }
        }
        for &id in &dtn.ghat_minus.nodes {
            bw = bw.max(position[id]);
        }
        for &id in &dtn.ghat_plus.nodes {
            bw = bw.max(plus(0).abs_diff(position[id]) + n);
        }

        let diag_s = (0..p)
            .map(|i| system.entry(i, i).norm())
            .fold(0.0, f64::max);
        let diag_r = dtn.r_diag.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let modal_scale = if diag_r > 0.0 { diag_s / diag_r } else { 1.0 };

        let w2 = system.omega * system.omega;
        let mut band = BandMatrix::zeros(p + 2 * n, bw, bw);
        for i in 0..p {
            for (j, k, m) in mats.row(i) {
                band.add(position[i], position[j], Complex64::new(k - w2 * m, 0.0));
            }
        }
        for m in 0..n {
            let r = dtn.r_diag[m] * modal_scale;
            band.add(m, m, r);
            band.add(plus(m), plus(m), r);
            for (j, &id) in dtn.ghat_minus.nodes.iter().enumerate() {
                band.add(m, position[id], -dtn.ghat_minus.values[(m, j)] * modal_scale);
                band.add(position[id], m, -dtn.fg_minus.values[(m, j)]);
            }
            for (j, &id) in dtn.ghat_plus.nodes.iter().enumerate() {
                band.add(plus(m), position[id], -dtn.ghat_plus.values[(m, j)] * modal_scale);
                band.add(position[id], plus(m), -dtn.fg_plus.values[(m, j)]);
            }
        }
        let lu = band.factorize().map_err(|_| Error::Singular {
            omega: system.omega,
        })?;
        Ok(Self {
            system,
            dtn,
            position,
            modal_scale,
            lu,
        })
    }

    /// Residual of the bordered equations for (beta-, U, beta+) in bordered order.
    fn bordered_residual(&self, x: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
        let (p, n) = (self.system.size(), self.dtn.n_modes);
        let u: Vec<Complex64> = (0..p).map(|id| x[self.position[id]]).collect();
        let beta_minus = &x[..n];
        let beta_plus = &x[n + p..];
        let mut r = vec![ZERO; p + 2 * n];
        let su = self.system.apply(&u);
        let mut f = vec![ZERO; p];
        self.dtn.fg_plus.scatter(beta_plus, &mut f);
        self.dtn.fg_minus.scatter(beta_minus, &mut f);
        for id in 0..p {
            r[self.position[id]] = rhs[id] - (su[id] - f[id]);
        }
        let gm = self.dtn.ghat_minus.apply(&u);
        let gp = self.dtn.ghat_plus.apply(&u);
        for m in 0..n {
            r[m] = -(self.dtn.r_diag[m] * beta_minus[m] - gm[m]) * self.modal_scale;
            r[n + p + m] = -(self.dtn.r_diag[m] * beta_plus[m] - gp[m]) * self.modal_scale;
        }
        r
    }

    /// Solves `(S - F_sca) U = rhs` with iterative refinement and an a
    /// posteriori residual check.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let (p, n) = (self.system.size(), self.dtn.n_modes);
        if rhs.len() != p {
            return Err(Error::Dimension {
                expected: p,
                got: rhs.len(),
            });
        }
        let rhs_norm = norm(rhs);
        if rhs_norm == 0.0 {
            return Ok(vec![ZERO; p]);
        }
        let mut x = vec![ZERO; p + 2 * n];
        for id in 0..p {
            x[self.position[id]] = rhs[id];
        }
        self.lu.solve_in_place(&mut x);
        let unpack = |x: &[Complex64]| -> Vec<Complex64> {
            (0..p).map(|id| x[self.position[id]]).collect()
        };
        let mut u = unpack(&x);
        let mut res = norm(&self.residual(&u, rhs));
        for _ in 0..REFINEMENT_STEPS {
            if res <= RESIDUAL_TOL * rhs_norm {
                break;
            }
            let mut dx = self.bordered_residual(&x, rhs);
            self.lu.solve_in_place(&mut dx);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            u = unpack(&x);
            res = norm(&self.residual(&u, rhs));
        }
        if !(res <= RESIDUAL_TOL * rhs_norm) {
            log::warn!(
                "relative residual {:.3e} above {RESIDUAL_TOL:e} at omega = {}",
                res / rhs_norm,
                self.system.omega
            );
            return Err(Error::Singular {
                omega: self.system.omega,
            });
        }
        Ok(u)
    }

    /// `(S - F_sca) u - rhs`.
    pub fn residual(&self, u: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
        let mut r = apply_operator(self.system, self.dtn, u);
        for (ri, b) in r.iter_mut().zip(rhs) {
            *ri -= b;
        }
        r
    }
}

/// One-shot solve of `(S - F_sca) U = rhs`.
pub fn solve_scattered(
    system: &GlobalSystem,
    dtn: &DtnOperator,
    mesh: &Mesh,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    BorderedSolver::new(system, dtn, mesh)?.solve(rhs)
}

/// Modal amplitudes of a scattered field on the virtual boundaries:
/// `(alpha+, alpha-) = (R^-1 Ghat+ u, R^-1 Ghat- u)`.
pub fn extract_alpha(u_sca: &[Complex64], dtn: &DtnOperator) -> (Vec<Complex64>, Vec<Complex64>) {
    dtn.modal_amplitudes(u_sca)
}

/// Scattered field and modal coefficients of one solve.
#[derive(Debug, Clone)]
pub struct ScatterSolution {
    pub u_sca: Vec<Complex64>,
    pub alpha_plus: Vec<Complex64>,
    pub alpha_minus: Vec<Complex64>,
    pub omega: f64,
    pub incident: IncidentField,
    /// All propagating modes at `omega`, in the order of the alpha vectors.
    pub modes: Vec<GuidedMode>,
}

impl ScatterSolution {
    pub fn frequency(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// 0-based position of the incident mode in `modes`.
    pub fn incident_position(&self) -> usize {
        self.incident.mode.index - 1
    }

    /// Total nodal field `U_inc + U_sca`.
    pub fn total_field(&self) -> Vec<Complex64> {
        self.u_sca
            .iter()
            .zip(&self.incident.u_inc)
            .map(|(s, i)| s + i)
            .collect()
    }
}

/// Checks that the virtual boundaries sit at least two fundamental-mode
/// wavelengths away from the debond.
pub fn check_clearance(plate: &BilayerPlate, modes: &[GuidedMode]) -> Result<()> {
    let required = 2.0 * modes[0].wavelength();
    let clearance = plate.clearance();
    if clearance < required {
        return Err(Error::Clearance {
            clearance,
            required,
        });
    }
    Ok(())
}

/// Mesh and frequency-independent matrices of a scenario, shared by all
/// frequency solves.
#[derive(Debug, Clone)]
pub struct ScatterProblem {
    pub plate: BilayerPlate,
    pub mesh: Mesh,
    pub matrices: Arc<StiffnessMass>,
}

impl ScatterProblem {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let d = scenario.mesh;
        d.check_resolution(&scenario.plate, scenario.max_frequency());
        let mesh = build_mesh(&scenario.plate, d.elems_x, d.elems_y_a, d.elems_y_b)?;
        let matrices = assemble_matrices(&mesh, &scenario.plate, d.quadrature_order)?;
        log::debug!(
            "mesh: {} nodes, {} elements",
            mesh.node_count(),
            mesh.elements.len()
        );
        Ok(Self {
            plate: scenario.plate.clone(),
            mesh,
            matrices: Arc::new(matrices),
        })
    }

    /// Propagating modes of the intact plate at `freq_hz`.
    pub fn modes(&self, freq_hz: f64) -> Result<Vec<GuidedMode>> {
        find_propagating_modes(2.0 * PI * freq_hz, &self.plate, DEFAULT_ROOT_TOL)
    }

    /// Full pipeline: dispersion, mode and clearance checks, DtN, right-hand side,
    /// bordered solve, modal extraction.
    pub fn solve(&self, freq_hz: f64, incident_mode: usize, amplitude: Complex64) -> Result<ScatterSolution> {
        if amplitude == ZERO {
            return Err(Error::ZeroAmplitude);
        }
        let omega = 2.0 * PI * freq_hz;
        let modes = self.modes(freq_hz)?;
        if incident_mode < 1 || incident_mode > modes.len() {
            return Err(Error::ModeUnavailable {
                requested: incident_mode,
                available: modes.len(),
            });
        }
        check_clearance(&self.plate, &modes)?;
        let dtn = build_dtn(&self.mesh, &modes)?;
        let system = GlobalSystem::new(Arc::clone(&self.matrices), omega);
        let incident = incident_nodal_field(&modes[incident_mode - 1], &self.mesh, amplitude);
        let rhs = build_rhs(&system, &self.mesh, &incident)?;
        let u_sca = solve_scattered(&system, &dtn, &self.mesh, &rhs)?;
        let (alpha_plus, alpha_minus) = extract_alpha(&u_sca, &dtn);
        Ok(ScatterSolution {
            u_sca,
            alpha_plus,
            alpha_minus,
            omega,
            incident,
            modes,
        })
    }
}
