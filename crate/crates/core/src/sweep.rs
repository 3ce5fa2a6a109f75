//! Frequency sweeps and tabular outputs.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BilayerPlate, Scenario};
use crate::dispersion::{find_propagating_modes, DEFAULT_ROOT_TOL};
use crate::error::{Error, Result};
use crate::postprocess::{rt_coefficients, ModalCoefficients};
use crate::solver::ScatterProblem;

/// Result of one sweep frequency.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub freq_hz: f64,
    /// Propagating mode count (0 if the dispersion solve itself failed).
    pub n_modes: usize,
    pub outcome: std::result::Result<SweepValues, String>,
}

#[derive(Debug, Clone)]
pub struct SweepValues {
    pub wavenumbers: Vec<f64>,
    pub coefficients: ModalCoefficients,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub incident_mode: usize,
    /// In scenario frequency order.
    pub points: Vec<SweepPoint>,
}

fn sweep_point(problem: &ScatterProblem, freq_hz: f64, incident_mode: usize) -> SweepPoint {
    let n_modes = problem.modes(freq_hz).map(|m| m.len()).unwrap_or(0);
    let outcome = problem
        .solve(freq_hz, incident_mode, Complex64::new(1.0, 0.0))
        .and_then(|sol| {
            Ok(SweepValues {
                wavenumbers: sol.modes.iter().map(|m| m.k).collect(),
                coefficients: rt_coefficients(&sol)?,
            })
        })
        .map_err(|e| e.to_string());
    if let Err(msg) = &outcome {
        log::warn!("{:.6e} Hz: {msg}", freq_hz);
    }
    SweepPoint {
        freq_hz,
        n_modes,
        outcome,
    }
}

/// Solves every scenario frequency on one shared mesh. Frequencies run in
/// parallel; failures are kept per point and never abort the sweep.
pub fn frequency_sweep(scenario: &Scenario) -> Result<Sweep> {
    let problem = ScatterProblem::new(scenario)?;
    Ok(sweep_with(&problem, &scenario.frequencies, scenario.incident_mode))
}

/// Sweep over `frequencies` with an already assembled problem.
pub fn sweep_with(problem: &ScatterProblem, frequencies: &[f64], incident_mode: usize) -> Sweep {
    let points: Vec<SweepPoint> = frequencies
        .par_iter()
        .map(|&f| sweep_point(problem, f, incident_mode))
        .collect();
    for w in points.windows(2) {
        if w[0].n_modes != w[1].n_modes {
            log::warn!(
                "propagating mode count changes from {} to {} between {:.6e} and {:.6e} Hz; \
                 incident mode stays at sorted position {incident_mode}",
                w[0].n_modes,
                w[1].n_modes,
                w[0].freq_hz,
                w[1].freq_hz
            );
        }
    }
    Sweep {
        incident_mode,
        points,
    }
}

/// One long-format sweep record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub freq_hz: f64,
    pub n_modes: usize,
    pub incident_mode: usize,
    pub mode_index: Option<usize>,
    pub k_rad_per_m: Option<f64>,
    pub refl_abs: Option<f64>,
    pub trans_abs: Option<f64>,
    pub energy_refl_frac: Option<f64>,
    pub energy_trans_frac: Option<f64>,
    pub energy_error: Option<f64>,
    pub status: String,
}

impl Sweep {
    /// One row per (frequency, mode); a single status row for failed points.
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for p in &self.points {
            match &p.outcome {
                Ok(v) => {
                    let c = &v.coefficients;
                    for (n, k) in v.wavenumbers.iter().enumerate() {
                        rows.push(SweepRow {
                            freq_hz: p.freq_hz,
                            n_modes: p.n_modes,
                            incident_mode: self.incident_mode,
                            mode_index: Some(n + 1),
                            k_rad_per_m: Some(*k),
                            refl_abs: Some(c.reflection[n]),
                            trans_abs: Some(c.transmission[n]),
                            energy_refl_frac: Some(c.energy_reflected[n]),
                            energy_trans_frac: Some(c.energy_transmitted[n]),
                            energy_error: Some(c.energy_error),
                            status: "ok".into(),
                        });
                    }
                }
                Err(msg) => rows.push(SweepRow {
                    freq_hz: p.freq_hz,
                    n_modes: p.n_modes,
                    incident_mode: self.incident_mode,
                    mode_index: None,
                    k_rad_per_m: None,
                    refl_abs: None,
                    trans_abs: None,
                    energy_refl_frac: None,
                    energy_trans_frac: None,
                    energy_error: None,
                    status: format!("error: {msg}"),
                }),
            }
        }
        rows
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        write_rows(&self.rows(), out)
    }

    /// Energy errors of the successful points.
    pub fn energy_errors(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok())
            .map(|v| v.coefficients.energy_error)
            .collect()
    }
}

fn write_rows<T: Serialize>(rows: &[T], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One point of a dispersion curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionRow {
    pub freq_hz: f64,
    pub mode_index: usize,
    pub k_rad_per_m: f64,
    pub phase_velocity_m_per_s: f64,
    pub power_w_per_m: f64,
}

/// Propagating modes of the intact plate at each frequency.
pub fn dispersion_table(plate: &BilayerPlate, frequencies: &[f64]) -> Result<Vec<DispersionRow>> {
    let per_freq: Vec<Result<Vec<DispersionRow>>> = frequencies
        .par_iter()
        .map(|&f| {
            let modes = find_propagating_modes(2.0 * PI * f, plate, DEFAULT_ROOT_TOL)?;
            Ok(modes
                .iter()
                .map(|m| DispersionRow {
                    freq_hz: f,
                    mode_index: m.index,
                    k_rad_per_m: m.k,
                    phase_velocity_m_per_s: m.phase_velocity(),
                    power_w_per_m: m.power,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_freq {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_dispersion_csv(rows: &[DispersionRow], out: impl Write) -> Result<()> {
    write_rows(rows, out)
}

/// Frequencies where the propagating mode count grows, estimated by
/// bisection between consecutive grid points of `frequencies`.
pub fn cutoff_frequencies(plate: &BilayerPlate, frequencies: &[f64]) -> Result<Vec<f64>> {
    let count = |f: f64| -> Result<usize> {
        Ok(find_propagating_modes(2.0 * PI * f, plate, DEFAULT_ROOT_TOL)?.len())
    };
    let mut cutoffs = Vec::new();
    for w in frequencies.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (n_lo, n_hi) = (count(lo)?, count(hi)?);
        if n_hi <= n_lo {
            continue;
        }
        if n_hi > n_lo + 1 {
            return Err(Error::Validation(format!(
                "more than one cutoff between {lo:.6e} and {hi:.6e} Hz; refine the grid"
            )));
        }
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if count(mid)? > n_lo {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        cutoffs.push(0.5 * (lo + hi));
    }
    Ok(cutoffs)
}
