mod common;

use num_complex::Complex64;
use shdtn::config::Scenario;
use shdtn::postprocess::{
    energy_balance, field_grid, modal_coefficients, normalized_boundary_displacement, rt_coefficients,
    total_field_grid, write_normalized_csv, SolveReport, Surface,
};
use shdtn::sweep::frequency_sweep;
use shdtn::Error;

use common::ONE;

fn header(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).lines().next().unwrap_or("").to_string()
}

#[test]
fn pure_modal_field_normalizes_to_one() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 5e6, None);
    let mut sol = common::solve(&pb, 5e6, 1);
    let plus = [Complex64::new(0.2, 0.1), Complex64::new(-0.05, 0.3), Complex64::new(0.0, 0.07)];
    let minus = [Complex64::new(0.01, 0.0), Complex64::new(0.1, -0.2), Complex64::new(0.3, 0.3)];
    for (i, a) in sol.alpha_plus.iter_mut().enumerate() {
        *a = plus[i % 3];
    }
    for (i, a) in sol.alpha_minus.iter_mut().enumerate() {
        *a = minus[i % 3];
    }
    sol.u_sca = pb
        .mesh
        .nodes
        .iter()
        .map(|n| {
            let (alpha, dir) = if n.x1 > 0.0 { (&sol.alpha_plus, 1.0) } else { (&sol.alpha_minus, -1.0) };
            sol.modes
                .iter()
                .zip(alpha)
                .map(|(m, a)| a * m.shape(n.x2).unwrap() * Complex64::from_polar(1.0, dir * m.k * n.x1))
                .sum()
        })
        .collect();
    for surface in [Surface::Top, Surface::Bottom] {
        let pts = normalized_boundary_displacement(&sol, &pb.mesh, surface);
        assert!(!pts.is_empty());
        let present: Vec<f64> = pts.iter().filter_map(|p| p.value).collect();
        assert!(present.len() * 10 >= pts.len() * 9);
        for v in present {
            assert!((v - 1.0).abs() < 1e-10, "{surface:?}: {v}");
        }
        let half = plate.crack_length / 2.0;
        assert!(pts.iter().all(|p| p.x1.abs() > half));
    }
}

#[test]
fn intact_plate_field_equals_incident() {
    let plate = common::plate_with_boundary("aluminum", "steel", 0.0, 7e-3);
    let pb = common::problem(&plate, 5e6, None);
    for (f, mode) in [(2e6, 2), (5e6, 1)] {
        let sol = common::solve(&pb, f, mode);
        let total = total_field_grid(&sol, &pb.mesh, 201, 21).unwrap();
        let inc = field_grid(&pb.mesh, &sol.incident.u_inc, 201, 21).unwrap();
        let diff = total
            .values
            .iter()
            .zip(&inc.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-3 * inc.max_abs(), "{f} Hz: {diff:.3e}");

        let c = rt_coefficients(&sol).unwrap();
        let n0 = mode - 1;
        for n in 0..sol.n_modes() {
            assert!(c.reflection[n] < 1e-3);
            if n == n0 {
                assert!((c.transmission[n] - 1.0).abs() < 1e-3);
            } else {
                assert!(c.transmission[n] < 1e-3);
            }
        }
        assert!(c.energy_error.abs() < 1e-3);
    }
}

#[test]
fn coefficients_are_invariant_under_incident_scaling() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 2e6, None);
    let base = rt_coefficients(&common::solve(&pb, 2e6, 2)).unwrap();
    for amp in [Complex64::new(3.0, 0.0), Complex64::from_polar(0.25, 2.1)] {
        let c = rt_coefficients(&pb.solve(2e6, 2, amp).unwrap()).unwrap();
        for (a, b) in base
            .reflection
            .iter()
            .chain(&base.transmission)
            .zip(c.reflection.iter().chain(&c.transmission))
        {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
    // exact homogeneity at the coefficient level
    let sol = common::solve(&pb, 2e6, 2);
    let powers: Vec<f64> = sol.modes.iter().map(|m| m.power).collect();
    let s = Complex64::from_polar(7.0, -0.8);
    let scale = |v: &[Complex64]| v.iter().map(|a| a * s).collect::<Vec<_>>();
    let c = modal_coefficients(&scale(&sol.alpha_plus), &scale(&sol.alpha_minus), s, 1, &powers).unwrap();
    for (a, b) in base.reflection.iter().zip(&c.reflection) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in base.transmission.iter().zip(&c.transmission) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn manufactured_power_partition_balances() {
    let powers = [2.0, 0.5, 8.0];
    // incident mode 2 with amplitude 1 carries 0.5; split it 0.1 / 0.15 / 0.25
    let alpha_minus = [
        Complex64::from_polar((0.1 / 2.0f64).sqrt(), 0.4),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let alpha_plus = [
        Complex64::new(0.0, 0.0),
        Complex64::from_polar((0.15 / 0.5f64).sqrt(), 1.2) - ONE,
        Complex64::from_polar((0.25 / 8.0f64).sqrt(), -2.0),
    ];
    let c = modal_coefficients(&alpha_plus, &alpha_minus, ONE, 1, &powers).unwrap();
    assert!(c.energy_error.abs() < 1e-15);
    assert!((c.energy_reflected[0] - 0.2).abs() < 1e-15);
    assert!((c.energy_transmitted[1] - 0.3).abs() < 1e-15);
    assert!((c.energy_transmitted[2] - 0.5).abs() < 1e-15);
    assert!(matches!(
        modal_coefficients(&alpha_plus, &alpha_minus, Complex64::new(0.0, 0.0), 1, &powers),
        Err(Error::ZeroAmplitude)
    ));
}

#[test]
fn energy_values_share_one_source() {
    let plate = common::plate("titanium", "steel", 0.5e-3);
    let pb = common::problem(&plate, 3e6, None);
    let sol = common::solve(&pb, 3e6, 1);
    let c = rt_coefficients(&sol).unwrap();
    let report = SolveReport::new(&sol).unwrap();
    assert_eq!(c.energy_error.to_bits(), energy_balance(&sol, &sol.modes).unwrap().to_bits());
    assert_eq!(c.energy_error.to_bits(), report.energy_error.to_bits());
    assert_eq!(c.reflection, report.reflection);
    assert_eq!(c.transmission, report.transmission);
    assert!(c.energy_error.abs() < 1e-6);
}

#[test]
fn mode_one_mostly_transmits_at_two_megahertz() {
    let plate = common::plate("aluminum", "steel", 1e-3);
    let pb = common::problem(&plate, 2e6, None);
    let c = rt_coefficients(&common::solve(&pb, 2e6, 1)).unwrap();
    assert!(c.reflection[0] < 0.1 * c.transmission[0]);
    assert!(c.transmission[0] > 0.9);
}

#[test]
fn sweep_rows_respect_energy_bounds() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let freqs = vec![2.0e6, 2.6e6, 3.3e6, 4.0e6];
    let s = Scenario::new(plate.clone(), freqs.clone(), 1, None).unwrap();
    let sweep = frequency_sweep(&s).unwrap();
    assert_eq!(sweep.points.len(), freqs.len());
    for (p, f) in sweep.points.iter().zip(&freqs) {
        assert_eq!(p.freq_hz, *f);
        let v = p.outcome.as_ref().unwrap();
        let c = &v.coefficients;
        let sum: f64 = c.energy_reflected.iter().chain(&c.energy_transmitted).sum();
        assert!(sum >= 0.0 && sum <= 1.0 + c.energy_error.abs() + 1e-12);
        assert!(c.energy_error.abs() < 1e-6);
    }
    let rows = sweep.rows();
    let expected: usize = sweep.points.iter().map(|p| p.n_modes).sum();
    assert_eq!(rows.len(), expected);
    assert!(rows.iter().all(|r| r.status == "ok"));
    let mut buf = Vec::new();
    sweep.write_csv(&mut buf).unwrap();
    assert_eq!(
        header(&buf),
        "freq_hz,n_modes,incident_mode,mode_index,k_rad_per_m,refl_abs,trans_abs,\
         energy_refl_frac,energy_trans_frac,energy_error,status"
    );
}

#[test]
fn sweep_reproduces_intact_identity_and_records_failures() {
    let plate = common::plate_with_boundary("aluminum", "steel", 0.0, 7e-3);
    // 1 MHz has a single propagating mode: mode 2 is unavailable there.
    let s = Scenario::new(plate, vec![1e6, 2.5e6, 4e6], 2, None).unwrap();
    let sweep = frequency_sweep(&s).unwrap();
    assert!(sweep.points[0].outcome.as_ref().unwrap_err().contains("not available"));
    for p in &sweep.points[1..] {
        let c = &p.outcome.as_ref().unwrap().coefficients;
        assert!((c.transmission[1] - 1.0).abs() < 1e-3);
        assert!(c.energy_error.abs() < 1e-3);
    }
    let rows = sweep.rows();
    assert!(rows[0].status.starts_with("error: "));
    assert!(rows[0].mode_index.is_none());
}

#[test]
fn csv_outputs_have_documented_columns() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 2e6, None);
    let sol = common::solve(&pb, 2e6, 1);
    let grid = total_field_grid(&sol, &pb.mesh, 5, 3).unwrap();
    let mut buf = Vec::new();
    grid.write_csv(&mut buf).unwrap();
    assert_eq!(header(&buf), "x1_m,x2_m,re_u3,im_u3,abs_u3");
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 15);

    let rows: Vec<_> = [Surface::Top, Surface::Bottom]
        .into_iter()
        .map(|s| (s, normalized_boundary_displacement(&sol, &pb.mesh, s)))
        .collect();
    let mut buf = Vec::new();
    write_normalized_csv(&rows, &mut buf).unwrap();
    assert_eq!(header(&buf), "surface,x1_m,normalized_abs");
    assert!(matches!(total_field_grid(&sol, &pb.mesh, 1, 3), Err(Error::Validation(_))));
}

#[test]
fn grid_refinement_changes_field_little() {
    let plate = common::plate("aluminum", "steel", 0.5e-3);
    let pb = common::problem(&plate, 2e6, None);
    let sol = common::solve(&pb, 2e6, 1);
    let coarse = total_field_grid(&sol, &pb.mesh, 101, 11).unwrap();
    let fine = total_field_grid(&sol, &pb.mesh, 201, 21).unwrap();
    // shared points coincide exactly; midpoints differ by the local field variation
    let mut shared = 0.0f64;
    for j in 0..11 {
        for i in 0..101 {
            shared = shared.max((coarse.at(i, j) - fine.at(2 * i, 2 * j)).norm());
        }
    }
    assert!(shared < 1e-12 * coarse.max_abs());
    log::info!("refined grid max {:.4e} vs {:.4e}", fine.max_abs(), coarse.max_abs());
    assert!((fine.max_abs() - coarse.max_abs()).abs() < 0.05 * coarse.max_abs());
}
