//! Reflection/transmission coefficients, energy balance, far-field
//! normalization and field sampling.
//!
//! The incident wave is mode `n0` with amplitude `A`. Scattered amplitudes
//! `alpha+` (right-going, measured on x1 = +a) and `alpha-` (left-going, on
//! x1 = -a) share the incident mode's normalization, so
//!
//! ```text
//! R_n = |alpha-_n| / |A|
//! T_n = |alpha+_n + delta(n, n0) A| / |A|
//! eps = 1 - sum_n P_n (|alpha-_n|^2 + |alpha+_n + delta(n, n0) A|^2) / (P_n0 |A|^2)
//! ```

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::GuidedMode;
use crate::error::{Error, Result};
use crate::fem::shape_functions;
use crate::mesh::Mesh;
use crate::solver::ScatterSolution;

/// Per-mode coefficient magnitudes and energy fractions of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoefficients {
    pub reflection: Vec<f64>,
    pub transmission: Vec<f64>,
    pub energy_reflected: Vec<f64>,
    pub energy_transmitted: Vec<f64>,
    pub energy_error: f64,
}

fn transmitted(alpha_plus: &[Complex64], amplitude: Complex64, n0: usize) -> Vec<Complex64> {
    alpha_plus
        .iter()
        .enumerate()
        .map(|(n, a)| if n == n0 { a + amplitude } else { *a })
        .collect()
}

/// Coefficients from raw modal amplitudes. `powers` are the modal energy
/// fluxes in the normalization of the alphas.
pub fn modal_coefficients(
    alpha_plus: &[Complex64],
    alpha_minus: &[Complex64],
    amplitude: Complex64,
    n0: usize,
    powers: &[f64],
) -> Result<ModalCoefficients> {
    if amplitude.norm() == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    let n = powers.len();
    for len in [alpha_plus.len(), alpha_minus.len()] {
        if len != n {
            return Err(Error::Dimension { expected: n, got: len });
        }
    }
    let a = amplitude.norm();
    let incident_power = powers[n0] * a * a;
    let total = transmitted(alpha_plus, amplitude, n0);
    let energy_reflected: Vec<f64> = (0..n)
        .map(|m| powers[m] * alpha_minus[m].norm_sqr() / incident_power)
        .collect();
    let energy_transmitted: Vec<f64> = (0..n)
        .map(|m| powers[m] * total[m].norm_sqr() / incident_power)
        .collect();
    let balance: f64 = energy_reflected.iter().chain(&energy_transmitted).sum();
    Ok(ModalCoefficients {
        reflection: alpha_minus.iter().map(|v| v.norm() / a).collect(),
        transmission: total.iter().map(|v| v.norm() / a).collect(),
        energy_reflected,
        energy_transmitted,
        energy_error: 1.0 - balance,
    })
}

/// R/T magnitudes and energy partition of a solution.
pub fn rt_coefficients(sol: &ScatterSolution) -> Result<ModalCoefficients> {
    let powers: Vec<f64> = sol.modes.iter().map(|m| m.power).collect();
    modal_coefficients(
        &sol.alpha_plus,
        &sol.alpha_minus,
        sol.incident.amplitude,
        sol.incident_position(),
        &powers,
    )
}

/// Energy-balance error of a solution against the given modes.
pub fn energy_balance(sol: &ScatterSolution, modes: &[GuidedMode]) -> Result<f64> {
    let powers: Vec<f64> = modes.iter().map(|m| m.power).collect();
    Ok(modal_coefficients(
        &sol.alpha_plus,
        &sol.alpha_minus,
        sol.incident.amplitude,
        sol.incident_position(),
        &powers,
    )?
    .energy_error)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Top,
    Bottom,
}

impl Surface {
    pub fn name(self) -> &'static str {
        match self {
            Surface::Top => "top",
            Surface::Bottom => "bottom",
        }
    }
}

/// One surface sample of the normalized scattered displacement. `value` is
/// `None` where the modal reconstruction vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPoint {
    pub x1: f64,
    pub value: Option<f64>,
}

/// Scattered surface displacement divided by its propagating-mode
/// reconstruction (`alpha+` right of the debond, `alpha-` left of it).
/// Points within one element of the debond are skipped.
pub fn normalized_boundary_displacement(
    sol: &ScatterSolution,
    mesh: &Mesh,
    surface: Surface,
) -> Vec<NormalizedPoint> {
    let ids = match surface {
        Surface::Top => &mesh.top,
        Surface::Bottom => &mesh.bottom,
    };
    let element = mesh
        .x_lines
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let half_crack = mesh
        .crack_upper
        .iter()
        .map(|&id| mesh.nodes[id].x1.abs())
        .fold(0.0, f64::max);
    let exclusion = half_crack + element;
    let reconstruct = |x1: f64, x2: f64| -> Complex64 {
        let (alpha, sign) = if x1 >= 0.0 {
            (&sol.alpha_plus, 1.0)
        } else {
            (&sol.alpha_minus, -1.0)
        };
        sol.modes
            .iter()
            .zip(alpha)
            .map(|(m, a)| {
                let x2 = x2.clamp(-m.h_b(), m.h_a());
                a * m.shape(x2).unwrap_or(0.0) * Complex64::from_polar(1.0, sign * m.k * x1)
            })
            .sum()
    };
    let samples: Vec<(f64, f64, f64)> = ids
        .iter()
        .map(|&id| {
            let node = mesh.nodes[id];
            (node.x1, sol.u_sca[id].norm(), reconstruct(node.x1, node.x2).norm())
        })
        .filter(|(x1, _, _)| x1.abs() >= exclusion)
        .collect();
    let largest = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    samples
        .into_iter()
        .map(|(x1, u, r)| NormalizedPoint {
            x1,
            value: (r > 1e-12 * largest && r > 0.0).then(|| u / r),
        })
        .collect()
}

/// Interpolates a nodal field at (x1, x2) with the element shape functions.
/// Points on the debond take the upper-face (layer A) value.
pub fn interpolate(mesh: &Mesh, u: &[Complex64], x1: f64, x2: f64) -> Option<Complex64> {
    let (e, xi, eta) = mesh.locate(x1, x2)?;
    let (n, _) = shape_functions(xi, eta);
    Some(
        mesh.elements[e]
            .node_ids
            .iter()
            .zip(n)
            .map(|(id, w)| u[*id] * w)
            .sum(),
    )
}

/// Regular sampling of a complex field; `values[j * x1.len() + i]` belongs
/// to (x1[i], x2[j]).
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl FieldGrid {
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.x1.len() + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (j, &x2) in self.x2.iter().enumerate() {
            for (i, &x1) in self.x1.iter().enumerate() {
                let v = self.at(i, j);
                w.serialize(FieldRow {
                    x1_m: x1,
                    x2_m: x2,
                    re_u3: v.re,
                    im_u3: v.im,
                    abs_u3: v.norm(),
                })?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct FieldRow {
    x1_m: f64,
    x2_m: f64,
    re_u3: f64,
    im_u3: f64,
    abs_u3: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Samples `field` on an `nx` x `ny` grid spanning the meshed region.
pub fn field_grid(mesh: &Mesh, field: &[Complex64], nx: usize, ny: usize) -> Result<FieldGrid> {
    if nx < 2 || ny < 2 {
        return Err(Error::Validation("field grid needs at least 2 x 2 points".into()));
    }
    let a = mesh.a_virtual();
    let (lo, hi) = (mesh.y_lines[0], *mesh.y_lines.last().unwrap());
    let x1 = linspace(-a, a, nx);
    let x2 = linspace(lo, hi, ny);
    let mut values = Vec::with_capacity(nx * ny);
    for &y in &x2 {
        for &x in &x1 {
            values.push(interpolate(mesh, field, x, y).expect("grid inside mesh"));
        }
    }
    Ok(FieldGrid { x1, x2, values })
}

/// Total displacement `u_inc + u_sca` on a regular grid.
pub fn total_field_grid(sol: &ScatterSolution, mesh: &Mesh, nx: usize, ny: usize) -> Result<FieldGrid> {
    field_grid(mesh, &sol.total_field(), nx, ny)
}

#[derive(Serialize)]
struct NormalizedRow<'a> {
    surface: &'a str,
    x1_m: f64,
    normalized_abs: Option<f64>,
}

/// Writes `surface,x1_m,normalized_abs` rows; absent values stay empty.
pub fn write_normalized_csv(
    rows: &[(Surface, Vec<NormalizedPoint>)],
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (surface, points) in rows {
        for p in points {
            w.serialize(NormalizedRow {
                surface: surface.name(),
                x1_m: p.x1,
                normalized_abs: p.value,
            })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Machine-readable summary of one frequency solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub freq_hz: f64,
    pub n_modes: usize,
    pub alpha_plus: Vec<[f64; 2]>,
    pub alpha_minus: Vec<[f64; 2]>,
    pub reflection: Vec<f64>,
    pub transmission: Vec<f64>,
    pub energy_error: f64,
}

impl SolveReport {
    pub fn new(sol: &ScatterSolution) -> Result<Self> {
        let c = rt_coefficients(sol)?;
        let pairs = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect();
        Ok(Self {
            freq_hz: sol.frequency(),
            n_modes: sol.n_modes(),
            alpha_plus: pairs(&sol.alpha_plus),
            alpha_minus: pairs(&sol.alpha_minus),
            reflection: c.reflection,
            transmission: c.transmission,
            energy_error: c.energy_error,
        })
    }
}
