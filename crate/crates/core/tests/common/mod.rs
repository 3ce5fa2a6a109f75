#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use shdtn::config::{builtin_material, BilayerPlate, MeshDensity, Scenario};
use shdtn::dispersion::{find_propagating_modes, GuidedMode, DEFAULT_ROOT_TOL};
use shdtn::solver::{ScatterProblem, ScatterSolution};

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Reference 1 mm plate with equal layers.
pub fn plate(a: &str, b: &str, crack: f64) -> BilayerPlate {
    BilayerPlate::reference(
        builtin_material(a).unwrap(),
        builtin_material(b).unwrap(),
        0.5e-3,
        crack,
    )
    .unwrap()
}

/// Reference plate with custom virtual boundary position.
pub fn plate_with_boundary(a: &str, b: &str, crack: f64, a_virtual: f64) -> BilayerPlate {
    let mut p = plate(a, b, crack);
    p.a_virtual = a_virtual;
    p.plate_half_length = p.plate_half_length.max(a_virtual + 0.5e-3);
    p.validate().unwrap();
    p
}

pub fn modes(plate: &BilayerPlate, f: f64) -> Vec<GuidedMode> {
    find_propagating_modes(2.0 * PI * f, plate, DEFAULT_ROOT_TOL).unwrap()
}

/// Problem meshed with the automatic density for `f_max`.
pub fn problem(plate: &BilayerPlate, f_max: f64, mesh: Option<MeshDensity>) -> ScatterProblem {
    let s = Scenario::new(plate.clone(), vec![f_max], 1, mesh).unwrap();
    ScatterProblem::new(&s).unwrap()
}

pub fn solve(pb: &ScatterProblem, f: f64, mode: usize) -> ScatterSolution {
    pb.solve(f, mode, ONE).unwrap()
}

pub fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
