use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use shdtn::config::{load_scenario, Scenario};
use shdtn::postprocess::{
    normalized_boundary_displacement, total_field_grid, write_normalized_csv, SolveReport, Surface,
};
use shdtn::solver::ScatterProblem;
use shdtn::sweep::{dispersion_table, frequency_sweep, write_dispersion_csv};
use shdtn::{Error, Result};

/// SH guided-wave scattering by interface debonds in bilayer plates.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagating modes of the intact plate at every scenario frequency.
    Dispersion {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scattering solve at one frequency.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        freq_mhz: f64,
        /// Result JSON.
        #[arg(long)]
        out: PathBuf,
        /// Total-field grid CSV.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Grid points along x1 and x2 for --field.
        #[arg(long, num_args = 2, value_names = ["NX", "NY"], default_values_t = [401, 41])]
        field_size: Vec<usize>,
        /// Node and element tables of the mesh.
        #[arg(long)]
        mesh_dump: Option<PathBuf>,
        /// Normalized surface displacement CSV.
        #[arg(long)]
        normalized: Option<PathBuf>,
    },
    /// R/T coefficients and energy balance over all scenario frequencies.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn solve(
    scenario: &Scenario,
    freq_mhz: f64,
    out: &Path,
    field: Option<&Path>,
    field_size: &[usize],
    mesh_dump: Option<&Path>,
    normalized: Option<&Path>,
) -> Result<()> {
    let problem = ScatterProblem::new(scenario)?;
    if let Some(path) = mesh_dump {
        let mut w = create(path)?;
        problem.mesh.write_csv(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    let sol = problem.solve(freq_mhz * 1e6, scenario.incident_mode, Complex64::new(1.0, 0.0))?;
    let report = SolveReport::new(&sol)?;
    log::info!(
        "{} modes, energy error {:.3e}",
        report.n_modes,
        report.energy_error
    );
    let mut w = create(out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.flush().map_err(io_err(out))?;
    if let Some(path) = field {
        let grid = total_field_grid(&sol, &problem.mesh, field_size[0], field_size[1])?;
        grid.write_csv(create(path)?)?;
    }
    if let Some(path) = normalized {
        let rows: Vec<_> = [Surface::Top, Surface::Bottom]
            .into_iter()
            .map(|s| (s, normalized_boundary_displacement(&sol, &problem.mesh, s)))
            .collect();
        write_normalized_csv(&rows, create(path)?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dispersion { scenario, out } => {
            let s = load_scenario(&scenario)?;
            let rows = dispersion_table(&s.plate, &s.frequencies)?;
            write_dispersion_csv(&rows, create(&out)?)
        }
        Command::Solve {
            scenario,
            freq_mhz,
            out,
            field,
            field_size,
            mesh_dump,
            normalized,
        } => {
            if !(freq_mhz > 0.0) {
                return Err(Error::Validation("--freq-mhz must be positive".into()));
            }
            let s = load_scenario(&scenario)?;
            solve(
                &s,
                freq_mhz,
                &out,
                field.as_deref(),
                &field_size,
                mesh_dump.as_deref(),
                normalized.as_deref(),
            )
        }
        Command::Sweep { scenario, out } => {
            let s = load_scenario(&scenario)?;
            let sweep = frequency_sweep(&s)?;
            let failed = sweep.points.iter().filter(|p| p.outcome.is_err()).count();
            if failed > 0 {
                log::warn!("{failed} of {} frequencies failed", sweep.points.len());
            }
            sweep.write_csv(create(&out)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
