mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use shdtn::config::MeshDensity;
use shdtn::dtn::{build_dtn, Side};
use shdtn::fem::GlobalSystem;
use shdtn::solver::{
    build_rhs, extract_alpha, incident_nodal_field, BorderedSolver, ScatterProblem,
};
use shdtn::Error;

use common::ONE;

fn system(pb: &ScatterProblem, f: f64) -> GlobalSystem {
    GlobalSystem::new(Arc::clone(&pb.matrices), 2.0 * PI * f)
}

#[test]
fn intact_plate_rhs_is_discretization_error() {
    let plate = common::plate("aluminum", "steel", 0.0);
    let pb = common::problem(&plate, 5e6, None);
    for f in [1e6, 2e6] {
        let sys = system(&pb, f);
        for mode in common::modes(&plate, f) {
            let inc = incident_nodal_field(&mode, &pb.mesh, ONE);
            let rhs = build_rhs(&sys, &pb.mesh, &inc).unwrap();
            let ratio = common::norm2(&rhs) / common::norm2(&sys.apply(&inc.u_inc));
            assert!(ratio < 1e-3, "{f} Hz mode {}: {ratio:.3e}", mode.index);
        }
    }
}

#[test]
fn rhs_is_supported_on_crack_faces() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 5e6, None);
    let f = 2e6;
    let sys = system(&pb, f);
    let mut faces: Vec<usize> = pb.mesh.crack_upper.iter().chain(&pb.mesh.crack_lower).copied().collect();
    faces.sort_unstable();
    let mut boundary: Vec<usize> = [Side::Gamma1, Side::Gamma2]
        .iter()
        .flat_map(|s| s.nodes(&pb.mesh).to_vec())
        .collect();
    boundary.sort_unstable();
    for mode in common::modes(&plate, f) {
        let inc = incident_nodal_field(&mode, &pb.mesh, ONE);
        let rhs = build_rhs(&sys, &pb.mesh, &inc).unwrap();
        let face_max = faces.iter().map(|&j| rhs[j].norm()).fold(0.0, f64::max);
        let welded_max = (0..rhs.len())
            .filter(|j| faces.binary_search(j).is_err() && boundary.binary_search(j).is_err())
            .map(|j| rhs[j].norm())
            .fold(0.0, f64::max);
        assert!(welded_max < 1e-3 * face_max, "mode {}: {welded_max:.3e} vs {face_max:.3e}", mode.index);
    }
}

#[test]
fn rhs_scales_with_amplitude() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 2e6, None);
    let sys = system(&pb, 2e6);
    let mode = &common::modes(&plate, 2e6)[0];
    let one = build_rhs(&sys, &pb.mesh, &incident_nodal_field(mode, &pb.mesh, ONE)).unwrap();
    let two = build_rhs(&sys, &pb.mesh, &incident_nodal_field(mode, &pb.mesh, 2.0 * ONE)).unwrap();
    for (a, b) in one.iter().zip(&two) {
        assert_eq!(2.0 * a, *b);
    }
    let zero = incident_nodal_field(mode, &pb.mesh, Complex64::new(0.0, 0.0));
    assert!(zero.u_inc.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn pure_right_going_mode_projects_to_unit_coefficient() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 5e6, None);
    let f = 5e6;
    let modes = common::modes(&plate, f);
    let dtn = build_dtn(&pb.mesh, &modes).unwrap();
    let c = Complex64::new(0.3, -1.7);
    for (n, mode) in modes.iter().enumerate() {
        let u = incident_nodal_field(mode, &pb.mesh, c).u_inc;
        let (plus, _) = extract_alpha(&u, &dtn);
        for (m, a) in plus.iter().enumerate() {
            let expect = if m == n { c } else { Complex64::new(0.0, 0.0) };
            assert!((a - expect).norm() < 1e-3 * c.norm(), "mode {} -> {m}: {a}", n + 1);
        }
    }
    let (p, m) = extract_alpha(&vec![Complex64::new(0.0, 0.0); pb.mesh.node_count()], &dtn);
    assert!(p.iter().chain(&m).all(|z| z.norm() == 0.0));
}

#[test]
fn extraction_is_linear() {
    let plate = common::plate("titanium", "steel", 0.5e-3);
    let pb = common::problem(&plate, 3e6, None);
    let modes = common::modes(&plate, 3e6);
    let dtn = build_dtn(&pb.mesh, &modes).unwrap();
    let u1 = incident_nodal_field(&modes[0], &pb.mesh, ONE).u_inc;
    let u2: Vec<Complex64> = pb.mesh.nodes.iter().map(|n| Complex64::new(n.x2 * 1e3, n.x1 * 1e2)).collect();
    let w = Complex64::new(-0.4, 2.5);
    let sum: Vec<Complex64> = u1.iter().zip(&u2).map(|(a, b)| a + w * b).collect();
    let (p1, m1) = extract_alpha(&u1, &dtn);
    let (p2, m2) = extract_alpha(&u2, &dtn);
    let (ps, ms) = extract_alpha(&sum, &dtn);
    for i in 0..modes.len() {
        assert!((ps[i] - p1[i] - w * p2[i]).norm() < 1e-12 * (1.0 + ps[i].norm()));
        assert!((ms[i] - m1[i] - w * m2[i]).norm() < 1e-12 * (1.0 + ms[i].norm()));
    }
}

#[test]
fn bordered_solve_meets_residual_bound() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 2e6, None);
    let f = 2e6;
    let modes = common::modes(&plate, f);
    let dtn = build_dtn(&pb.mesh, &modes).unwrap();
    let sys = system(&pb, f);
    let solver = BorderedSolver::new(&sys, &dtn, &pb.mesh).unwrap();
    for mode in &modes {
        let rhs = build_rhs(&sys, &pb.mesh, &incident_nodal_field(mode, &pb.mesh, ONE)).unwrap();
        let u = solver.solve(&rhs).unwrap();
        let res = common::norm2(&solver.residual(&u, &rhs)) / common::norm2(&rhs);
        assert!(res <= 1e-10, "mode {}: {res:.3e}", mode.index);
    }
    let zero = vec![Complex64::new(0.0, 0.0); pb.mesh.node_count()];
    assert!(solver.solve(&zero).unwrap().iter().all(|z| z.norm() == 0.0));
}

#[test]
fn solution_scales_with_complex_amplitude() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 2e6, None);
    let a = Complex64::new(-1.3, 0.6);
    let one = pb.solve(2e6, 1, ONE).unwrap();
    let scaled = pb.solve(2e6, 1, a).unwrap();
    let scale = common::max_abs(&one.u_sca);
    for (u, v) in one.u_sca.iter().zip(&scaled.u_sca) {
        assert!((a * u - v).norm() < 1e-9 * scale * a.norm());
    }
    for (u, v) in one.alpha_plus.iter().chain(&one.alpha_minus).zip(scaled.alpha_plus.iter().chain(&scaled.alpha_minus)) {
        assert!((a * u - v).norm() < 1e-9 * a.norm());
    }
}

#[test]
fn far_field_is_propagating_modes_only() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 5e6, None);
    for f in [2e6, 5e6] {
        for mode in [1, 2] {
            let sol = pb.solve(f, mode, ONE).unwrap();
            for (side, alpha, dir) in [
                (Side::Gamma2, &sol.alpha_plus, 1.0),
                (Side::Gamma1, &sol.alpha_minus, -1.0),
            ] {
                let (mut num, mut den) = (0.0, 0.0);
                for &j in side.nodes(&pb.mesh) {
                    let n = &pb.mesh.nodes[j];
                    let recon: Complex64 = sol
                        .modes
                        .iter()
                        .zip(alpha)
                        .map(|(m, a)| a * m.shape(n.x2).unwrap() * Complex64::from_polar(1.0, dir * m.k * n.x1))
                        .sum();
                    num += (sol.u_sca[j] - recon).norm_sqr();
                    den += sol.u_sca[j].norm_sqr();
                }
                let rel = (num / den).sqrt();
                assert!(rel < 0.02, "{f} Hz mode {mode} {side:?}: {rel:.3e}");
            }
        }
    }
}

#[test]
fn intact_plate_scatters_nothing() {
    let plate = common::plate_with_boundary("aluminum", "steel", 0.0, 7e-3);
    let pb = common::problem(&plate, 5e6, None);
    for f in [2e6, 5e6] {
        for mode in 1..=common::modes(&plate, f).len() {
            let sol = pb.solve(f, mode, ONE).unwrap();
            let ratio = common::max_abs(&sol.u_sca) / common::max_abs(&sol.incident.u_inc);
            assert!(ratio < 1e-3, "{f} Hz mode {mode}: {ratio:.3e}");
        }
    }
}

#[test]
fn intact_plate_phase_error_converges_at_fourth_order() {
    let plate = common::plate_with_boundary("aluminum", "steel", 0.0, 7e-3);
    let f = 5e6;
    let errs: Vec<f64> = [16.0, 24.0]
        .iter()
        .map(|&epw| {
            let d = MeshDensity::with_elements_per_wavelength(&plate, f, epw);
            let sol = common::solve(&common::problem(&plate, f, Some(d)), f, 1);
            common::max_abs(&sol.u_sca)
        })
        .collect();
    let order = (errs[0] / errs[1]).ln() / 1.5f64.ln();
    assert!(order > 3.5, "order {order:.2} from {errs:?}");
}

#[test]
fn invalid_requests_are_rejected() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 2e6, None);
    let n = common::modes(&plate, 2e6).len();
    match pb.solve(2e6, n + 1, ONE) {
        Err(Error::ModeUnavailable { requested, available }) => {
            assert_eq!((requested, available), (n + 1, n));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(pb.solve(2e6, 0, ONE), Err(Error::ModeUnavailable { .. })));
    assert!(matches!(pb.solve(2e6, 1, Complex64::new(0.0, 0.0)), Err(Error::ZeroAmplitude)));
    // 0.2 MHz: two fundamental wavelengths exceed the boundary clearance.
    assert!(matches!(pb.solve(0.2e6, 1, ONE), Err(Error::Clearance { .. })));
}
