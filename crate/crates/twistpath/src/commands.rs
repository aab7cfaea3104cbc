//! The four subcommands. Each writes its files under the output directory
//! and returns a [`Status`]; reports carry the config hash and tolerances.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use twistpath_core::continuation::{kernel_basis, Continuation, TrackedPath};
use twistpath_core::functionals::{cumulative, path_densities, FunctionalKind, PotentialPath};
use twistpath_core::geometry::{Geometry, ToricGeometry, TorusGeometry};
use twistpath_core::lattice::Field;
use twistpath_core::toric::{orbit_action, ToricPotential, ToricTwist};

use crate::checks::{resolution_factor, verify_suite, Criterion};
use crate::config::{Backend, RunConfig, SolverConfig};
use crate::error::{CliError, Result};
use crate::formats::{self, EnergyRow, PotentialFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Passed,
    Failed,
    Truncated,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Passed => 0,
            Status::Failed => 1,
            Status::Truncated => 3,
        }
    }
}

/// Exit code for an error that stopped a command.
pub fn error_exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Config(_) | CliError::Read { .. } | CliError::Format { .. } => 2,
        CliError::Write { .. } | CliError::Numerics(_) => 1,
    }
}

/// A loaded configuration and where its outputs go.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl Run {
    pub fn new(mut config: RunConfig, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self> {
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.validate()?;
        let out_dir = out
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("twistpath-out"));
        Ok(Self { config, out_dir })
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::create_dir_all(&self.out_dir)
            .and_then(|_| fs::write(&path, bytes))
            .map_err(|source| CliError::Write { path, source })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn header(&self, command: &'static str) -> Header {
        let c = &self.config;
        Header {
            command,
            config_hash: c.hash(),
            backend: c.backend,
            seed: c.seed,
            tolerances: Tolerances {
                solver: c.solver,
                resolution_factor: match c.backend {
                    Backend::Torus => resolution_factor(c.torus.dim, c.torus.points),
                    Backend::Cp1 => 1.0,
                },
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct Tolerances {
    solver: SolverConfig,
    /// Multiplier on torus identity tolerances below nominal resolution.
    resolution_factor: f64,
}

#[derive(Debug, Serialize)]
struct Header {
    command: &'static str,
    config_hash: String,
    backend: Backend,
    seed: u64,
    tolerances: Tolerances,
}

// ---------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct VerifyReport<'a> {
    #[serde(flatten)]
    header: Header,
    passed: bool,
    criteria: &'a [Criterion],
}

/// Runs the identity suite of the configured backend and writes
/// `verify.json`. Returns the criteria for printing.
pub fn verify(run: &Run) -> Result<(Status, Vec<Criterion>)> {
    let criteria = verify_suite(&run.config)?;
    let passed = criteria.iter().all(Criterion::passed);
    run.write_json(
        "verify.json",
        &VerifyReport {
            header: run.header("verify"),
            passed,
            criteria: &criteria,
        },
    )?;
    Ok((
        if passed {
            Status::Passed
        } else {
            Status::Failed
        },
        criteria,
    ))
}

// ---------------------------------------------------------------------
// path

#[derive(Serialize)]
struct PathReport {
    #[serde(flatten)]
    header: Header,
    t_end: f64,
    steps: usize,
    twist: [f64; 2],
    anchor_error: Option<String>,
    kernel_dim: Option<usize>,
    orthogonality_defect: Option<f64>,
    records: usize,
    truncated_at: Option<f64>,
}

/// Anchor, tracked records, and whatever stopped it.
struct PathRun<P> {
    anchor: Option<(P, usize, f64)>,
    tracked: Option<TrackedPath<P>>,
    anchor_error: Option<String>,
}

fn track<G: Geometry>(
    geo: &G,
    config: &RunConfig,
    twist: ToricTwist,
) -> Result<PathRun<G::Potential>> {
    let cont = match Continuation::anchor(geo, twist, config.solver.options(), None) {
        Ok(c) => c,
        Err(e) => {
            return Ok(PathRun {
                anchor: None,
                tracked: None,
                anchor_error: Some(e.to_string()),
            })
        }
    };
    let tracked = cont.track_path(config.path.t_end, config.path.steps)?;
    Ok(PathRun {
        anchor: Some((
            cont.anchor_potential().clone(),
            cont.basis().dim(),
            cont.orthogonality_defect(),
        )),
        tracked: Some(tracked),
        anchor_error: None,
    })
}

/// Solves at `t = 1`, tracks to `t_end` and writes `path.jsonl`,
/// `summary.csv`, `path.json` and the anchor.
pub fn path(run: &Run) -> Result<Status> {
    let config = &run.config;
    match config.backend {
        Backend::Torus => {
            let geo = config.torus_geometry()?;
            let result = track(&geo, config, ToricTwist::default())?;
            if let Some((anchor, _, _)) = &result.anchor {
                let state = geo.assemble(anchor)?;
                run.write(
                    "anchor.json",
                    formats::metric_state_to_json(&state).as_bytes(),
                )?;
            }
            write_path(run, result)
        }
        Backend::Cp1 => {
            let geo = config.cp1_geometry()?;
            let result = track(&geo, config, config.twist.spec())?;
            if let Some((anchor, _, _)) = &result.anchor {
                run.write("anchor.json", formats::toric_to_json(anchor).as_bytes())?;
                let mut csv = Vec::new();
                formats::write_profile_csv(&mut csv, &anchor.h_profile())?;
                run.write("anchor_profile.csv", &csv)?;
            }
            write_path(run, result)
        }
    }
}

fn write_path<P: PotentialFormat>(run: &Run, result: PathRun<P>) -> Result<Status> {
    let records = result.tracked.as_ref().map_or(&[][..], |t| &t.records[..]);
    let mut log = Vec::new();
    formats::write_records_jsonl(&mut log, records)?;
    run.write("path.jsonl", &log)?;
    let mut summary = Vec::new();
    formats::write_summary_csv(&mut summary, records)?;
    run.write("summary.csv", &summary)?;

    let truncated_at = result.tracked.as_ref().and_then(|t| t.truncated_at);
    let c = &run.config;
    run.write_json(
        "path.json",
        &PathReport {
            header: run.header("path"),
            t_end: c.path.t_end,
            steps: c.path.steps,
            twist: [c.twist.a, c.twist.b],
            anchor_error: result.anchor_error.clone(),
            kernel_dim: result.anchor.as_ref().map(|a| a.1),
            orthogonality_defect: result.anchor.as_ref().map(|a| a.2),
            records: records.len(),
            truncated_at,
        },
    )?;
    Ok(if result.anchor_error.is_some() || truncated_at.is_some() {
        Status::Truncated
    } else {
        Status::Passed
    })
}

// ---------------------------------------------------------------------
// energy

/// Functional values along `potentials` relative to the first sample, with
/// the second difference of `E_K + (1 − t)ι` at interior samples.
pub fn energy_rows<G: Geometry>(
    geo: &G,
    potentials: Vec<G::Potential>,
    t: f64,
    twist: ToricTwist,
) -> Result<Vec<EnergyRow>> {
    let kinds = [
        FunctionalKind::Aubin,
        FunctionalKind::Chi,
        FunctionalKind::Iota,
        FunctionalKind::KEnergy,
        FunctionalKind::Twisted { t },
        FunctionalKind::Modified { twist },
    ];
    let path = PotentialPath::new(potentials)?;
    let densities = path_densities(geo, &kinds, &path)?;
    let columns: Vec<Vec<f64>> = (0..kinds.len())
        .map(|k| cumulative(&densities.iter().map(|row| row[k]).collect::<Vec<_>>()))
        .collect::<twistpath_core::Result<_>>()?;
    let n = path.len();
    let h = path.step();
    let convex: Vec<f64> = (0..n)
        .map(|i| columns[5][i] + (1.0 - t) * columns[2][i])
        .collect();
    Ok((0..n)
        .map(|i| EnergyRow {
            s: path.parameter(i),
            aubin: columns[0][i],
            chi: columns[1][i],
            iota: columns[2][i],
            k_energy: columns[3][i],
            twisted: columns[4][i],
            modified: columns[5][i],
            convexity: (i > 0 && i + 1 < n)
                .then(|| (convex[i + 1] - 2.0 * convex[i] + convex[i - 1]) / (h * h)),
        })
        .collect())
}

#[derive(Serialize)]
struct EnergyReport {
    #[serde(flatten)]
    header: Header,
    source: String,
    samples: usize,
    t: f64,
    twist: [f64; 2],
}

fn read_path_file<P: PotentialFormat>(file: &Path) -> Result<Vec<P>> {
    let text = fs::read_to_string(file).map_err(|source| CliError::Read {
        path: file.into(),
        source,
    })?;
    let potentials = formats::read_potentials_jsonl(&text)?;
    if potentials.len() < 5 {
        return Err(CliError::format("path file", "need at least 5 potentials"));
    }
    Ok(potentials)
}

/// Straight segment from the reference to the flat metric `−ψ_ref`.
fn torus_scan(geo: &TorusGeometry, samples: usize) -> Vec<Field> {
    let reference = geo.reference();
    let flat = geo.background().reference_potential().scale(-1.0);
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|i| geo.combine(&reference, 1.0 - i as f64 / last, &flat, i as f64 / last))
        .collect()
}

/// Orbit `c ↦ u₁ − c·x`, `c ∈ [−0.5, 0.5]`, of the cscK anchor.
fn sphere_scan(geo: &ToricGeometry, config: &RunConfig) -> Result<Vec<ToricPotential>> {
    let cont = Continuation::anchor(geo, ToricTwist::default(), config.solver.options(), None)?;
    let samples = config.energy.path_samples;
    let last = (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| orbit_action(cont.anchor_potential(), i as f64 / last - 0.5))
        .collect())
}

fn check_grid<P>(potentials: &[P], same: impl Fn(&P) -> bool) -> Result<()> {
    if potentials.iter().all(same) {
        Ok(())
    } else {
        Err(CliError::format(
            "path file",
            "potentials do not live on the configured grid",
        ))
    }
}

/// Writes `energy.csv` and `energy.json` for the built-in scan or the
/// potentials of a JSON-lines path file.
pub fn energy(run: &Run, path_file: Option<&Path>) -> Result<Status> {
    let config = &run.config;
    let (t, twist) = (config.energy.t, config.twist.spec());
    let rows = match config.backend {
        Backend::Torus => {
            let geo = config.torus_geometry()?;
            let potentials = match path_file {
                Some(file) => {
                    let p: Vec<Field> = read_path_file(file)?;
                    check_grid(&p, |f| f.grid() == geo.background().grid())?;
                    p
                }
                None => torus_scan(&geo, config.energy.path_samples),
            };
            energy_rows(&geo, potentials, t, twist)?
        }
        Backend::Cp1 => {
            let geo = config.cp1_geometry()?;
            let potentials = match path_file {
                Some(file) => {
                    let p: Vec<ToricPotential> = read_path_file(file)?;
                    check_grid(&p, |u| u.grid().len() == geo.grid().len())?;
                    p
                }
                None => sphere_scan(&geo, config)?,
            };
            energy_rows(&geo, potentials, t, twist)?
        }
    };
    let mut csv = Vec::new();
    formats::write_energy_csv(&mut csv, &rows)?;
    run.write("energy.csv", &csv)?;
    let source = path_file.map_or_else(
        || match config.backend {
            Backend::Torus => "segment to the flat metric".to_string(),
            Backend::Cp1 => "orbit of the cscK metric".to_string(),
        },
        |p| p.display().to_string(),
    );
    run.write_json(
        "energy.json",
        &EnergyReport {
            header: run.header("energy"),
            source,
            samples: rows.len(),
            t,
            twist: [twist.a, twist.b],
        },
    )?;
    Ok(Status::Passed)
}

// ---------------------------------------------------------------------
// spectrum

#[derive(Serialize)]
struct SpectrumReport {
    #[serde(flatten)]
    header: Header,
    state: &'static str,
    modes: usize,
    kernel_threshold: f64,
    kernel_dim: usize,
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    eigenvalue: f64,
    kernel: bool,
}

fn spectrum_of<G: Geometry>(run: &Run, geo: &G, at_anchor: bool) -> Result<Status> {
    let options = run.config.solver.options();
    let potential = if at_anchor {
        Continuation::anchor(geo, ToricTwist::default(), options, None)?
            .anchor_potential()
            .clone()
    } else {
        geo.reference()
    };
    let basis = kernel_basis(geo, &potential, &options)?;
    let threshold = basis.threshold();
    let mut w = csv::Writer::from_writer(Vec::new());
    for (index, &eigenvalue) in basis.eigenvalues().iter().enumerate() {
        w.serialize(SpectrumRow {
            index,
            eigenvalue,
            kernel: eigenvalue.abs() <= threshold,
        })
        .map_err(|e| CliError::format("spectrum csv", e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::format("spectrum csv", e))?;
    run.write("spectrum.csv", &bytes)?;
    run.write_json(
        "spectrum.json",
        &SpectrumReport {
            header: run.header("spectrum"),
            state: if at_anchor { "anchor" } else { "reference" },
            modes: basis.eigenvalues().len(),
            kernel_threshold: threshold,
            kernel_dim: basis.dim(),
        },
    )?;
    Ok(Status::Passed)
}

/// Eigenvalues of `D` in the `ω_φⁿ` pairing on the resolved Galerkin
/// space, at the reference potential or at the `t = 1` solution.
pub fn spectrum(run: &Run, at_anchor: bool) -> Result<Status> {
    match run.config.backend {
        Backend::Torus => spectrum_of(run, &run.config.torus_geometry()?, at_anchor),
        Backend::Cp1 => spectrum_of(run, &run.config.cp1_geometry()?, at_anchor),
    }
}
