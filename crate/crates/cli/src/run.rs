//! Scenario execution and output layout.
//!
//! ```text
//! <out>/<name>/timings.json
//! <out>/<name>/<point>/matrix.csv                  (--dump-matrix)
//! <out>/<name>/<point>/<l>/{spectrum.csv, weightings.csv, trace.csv,
//!                           farfield.csv, symmetry.json, manifest.json}
//! ```
//!
//! `<point>` is `base` without a sweep, otherwise `<axis>_<value>`.
//! Everything except `timings.json` is byte-reproducible.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use ringrad::dynamics::write_weightings_csv;
use ringrad::{
    build_matrix, eigendecompose, evolve, hpi_state, project, propagate_oracle, symmetry_report,
    weightings, AtomArray, CouplingMatrix, DipoleField, EigenSystem, FarField, SphereQuadrature,
    TimeGrid,
};
use serde::Serialize;

use crate::config::{validate, Diagnostic, Output, ScenarioConfig, SweepPoint};
use crate::error::CliError;

/// Arrays up to this size get the integrator cross-check in the manifest.
pub const ORACLE_CHECK_MAX_ATOMS: usize = 40;
pub const TRACE_TOLERANCE: f64 = 1e-9;
pub const SUM_RULE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    pub dump_matrix: bool,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub scenario_dir: PathBuf,
    pub diagnostics: Vec<Diagnostic>,
    pub jobs: Vec<JobSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JobSummary {
    pub point: String,
    pub l: i64,
    pub dir: PathBuf,
    pub fallback: bool,
    pub checks_pass: bool,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Serialize)]
struct Check {
    value: f64,
    expected: f64,
    error: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn new(value: f64, expected: f64, error: f64, tolerance: f64) -> Self {
        Self {
            value,
            expected,
            error,
            tolerance,
            pass: error <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct Checks {
    /// Re tr M against −N Γ/2.
    trace: Check,
    /// Σ_m Γ_m against N Γ, relative.
    sum_rule: Check,
    /// Smallest eigenvalue of the decay matrix, ≥ 0 up to rounding.
    decay_psd: Check,
}

#[derive(Serialize)]
struct Conditioning {
    condition_number: f64,
    ill_conditioned: bool,
    eigen_residual: f64,
    inverse_defect: f64,
}

#[derive(Serialize)]
struct ArrayInfo {
    n_atoms: usize,
    n_rings: usize,
    n_phi: usize,
    closest_separation: Option<f64>,
}

#[derive(Serialize)]
struct DynamicsInfo {
    method: &'static str,
    fallback: bool,
    /// |Σ_m v_m w_m − ⟨φ|φ⟩|
    completeness_error: Option<f64>,
    oracle_max_abs_diff: Option<f64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    scenario: &'a str,
    point: &'a SweepPoint,
    l: i64,
    l_reduced: usize,
    array: ArrayInfo,
    checks: &'a Checks,
    conditioning: &'a Conditioning,
    dynamics: DynamicsInfo,
    files: Vec<&'static str>,
    diagnostics: &'a [Diagnostic],
    config: &'a ScenarioConfig,
}

#[derive(Serialize)]
struct Timings {
    total_seconds: f64,
    points: Vec<PointTiming>,
    jobs: Vec<JobTiming>,
}

#[derive(Serialize)]
struct PointTiming {
    point: String,
    setup_seconds: f64,
}

#[derive(Serialize)]
struct JobTiming {
    point: String,
    l: i64,
    seconds: f64,
}

struct PointData {
    point: SweepPoint,
    array: AtomArray,
    field: DipoleField,
    coupling: CouplingMatrix,
    eig: EigenSystem,
    checks: Checks,
    conditioning: Conditioning,
    dir: PathBuf,
    seconds: f64,
}

fn write_with<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(CliError::io(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}

/// Validates `config` and writes every requested output under
/// `options.out/<name>`.
pub fn run(config: &ScenarioConfig, options: &RunOptions) -> Result<RunSummary, CliError> {
    let diagnostics = validate(config);
    let errors: Vec<String> = diagnostics
        .iter()
        .filter(|d| d.is_error())
        .map(|d| d.to_string())
        .collect();
    if !errors.is_empty() {
        return Err(CliError::Invalid(errors.join("\n")));
    }
    for d in &diagnostics {
        log::warn!("{}", d.message);
    }

    // Bitwise reproducibility needs a fixed reduction order in the eigensolver.
    faer::set_global_parallelism(faer::Par::Seq);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Parse(format!("cannot start worker pool: {e}")))?;

    let start = Instant::now();
    let scenario_dir = options.out.join(&config.name);
    create_dir(&scenario_dir)?;

    let (points, jobs) = pool.install(|| execute(config, options, &scenario_dir, &diagnostics))?;

    let timings = Timings {
        total_seconds: start.elapsed().as_secs_f64(),
        points: points
            .iter()
            .map(|(label, s)| PointTiming {
                point: label.clone(),
                setup_seconds: *s,
            })
            .collect(),
        jobs: jobs
            .iter()
            .map(|j| JobTiming {
                point: j.point.clone(),
                l: j.l,
                seconds: j.seconds,
            })
            .collect(),
    };
    write_json(&scenario_dir.join("timings.json"), &timings)?;

    Ok(RunSummary {
        scenario_dir,
        diagnostics,
        jobs,
    })
}

type Executed = (Vec<(String, f64)>, Vec<JobSummary>);

fn execute(
    config: &ScenarioConfig,
    options: &RunOptions,
    scenario_dir: &Path,
    diagnostics: &[Diagnostic],
) -> Result<Executed, CliError> {
    let times = TimeGrid::log_spaced(config.time.n_points, config.time.t_min, config.time.t_max)
        .map_err(CliError::physics("time grid"))?;
    let quad = SphereQuadrature::new(config.quadrature.n_theta, config.quadrature.n_phi)
        .map_err(CliError::physics("quadrature"))?;

    let points: Vec<Result<PointData, CliError>> = config
        .sweep_points()
        .into_par_iter()
        .map(|point| prepare_point(config, options, scenario_dir, point))
        .collect();
    let points: Vec<PointData> = points.into_iter().collect::<Result<_, _>>()?;

    let tasks: Vec<(usize, i64)> = (0..points.len())
        .flat_map(|p| config.oam.iter().map(move |&l| (p, l)))
        .collect();
    let jobs: Vec<Result<JobSummary, CliError>> = tasks
        .par_iter()
        .map(|&(p, l)| run_job(config, &points[p], l, &times, &quad, diagnostics))
        .collect();
    let jobs = jobs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let point_times = points
        .iter()
        .map(|p| (p.point.label.clone(), p.seconds))
        .collect();
    Ok((point_times, jobs))
}

fn prepare_point(
    config: &ScenarioConfig,
    options: &RunOptions,
    scenario_dir: &Path,
    point: SweepPoint,
) -> Result<PointData, CliError> {
    let start = Instant::now();
    let label = point.label.clone();
    let array = point
        .spec
        .build_with_min_separation(config.min_separation)
        .map_err(CliError::physics(format!("{label}: geometry")))?;
    let field = DipoleField::new(&array, config.polarization);
    let coupling = build_matrix(&array, &field).map_err(CliError::physics(format!("{label}: coupling")))?;
    let eig = eigendecompose(&coupling).map_err(CliError::physics(format!("{label}: spectrum")))?;

    let n = array.len() as f64;
    let trace = coupling.trace();
    let trace_error = (trace.re + 0.5 * n).abs().max(trace.im.abs());
    let min_decay = coupling.min_decay_eigenvalue();
    let checks = Checks {
        trace: Check::new(trace.re, -0.5 * n, trace_error, TRACE_TOLERANCE * n),
        sum_rule: Check::new(eig.decay_sum(), n, eig.sum_rule_error(), SUM_RULE_TOLERANCE),
        decay_psd: Check::new(
            min_decay,
            0.0,
            (-min_decay).max(0.0),
            ringrad::coupling::DECAY_PSD_TOLERANCE,
        ),
    };
    if !(checks.trace.pass && checks.sum_rule.pass && checks.decay_psd.pass) {
        log::warn!("{label}: consistency checks failed, see manifest");
    }
    let conditioning = Conditioning {
        condition_number: eig.condition_number(),
        ill_conditioned: eig.is_ill_conditioned(),
        eigen_residual: eig.residual(),
        inverse_defect: eig.inverse_defect(),
    };

    let dir = scenario_dir.join(&label);
    create_dir(&dir)?;
    if options.dump_matrix {
        let path = dir.join("matrix.csv");
        write_with(&path, |w| coupling.write_csv(w))?;
    }
    Ok(PointData {
        point,
        array,
        field,
        coupling,
        eig,
        checks,
        conditioning,
        dir,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_job(
    config: &ScenarioConfig,
    data: &PointData,
    l: i64,
    times: &TimeGrid,
    quad: &SphereQuadrature,
    diagnostics: &[Diagnostic],
) -> Result<JobSummary, CliError> {
    let start = Instant::now();
    let label = &data.point.label;
    let context = |what: &str| format!("{label}, l = {l}: {what}");
    let dir = data.dir.join(l.to_string());
    create_dir(&dir)?;
    let mut files = Vec::new();

    if config.wants(Output::Spectrum) {
        write_with(&dir.join("spectrum.csv"), |w| data.eig.write_csv(w))?;
        files.push("spectrum.csv");
    }

    let state = hpi_state(&data.array, l);
    let projected = match project(&state, &data.eig) {
        Ok(s) => Some(s),
        Err(ringrad::Error::IllConditioned(cond)) => {
            log::warn!("{}", context(&format!("eigenbasis ill-conditioned ({cond:e}), using the integrator")));
            None
        }
        Err(e) => return Err(CliError::physics(context("projection"))(e)),
    };
    let fallback = projected.is_none();
    let completeness_error = projected
        .as_ref()
        .and_then(|s| s.completeness())
        .map(|c| (c - state.norm_sqr()).norm());

    if config.wants(Output::Weightings) {
        match &projected {
            Some(s) => {
                let weights = weightings(s).map_err(CliError::physics(context("weightings")))?;
                write_with(&dir.join("weightings.csv"), |w| write_weightings_csv(&weights, w))?;
                files.push("weightings.csv");
            }
            None => log::warn!("{}", context("weightings skipped without an eigenbasis")),
        }
    }

    let mut oracle_max_abs_diff = None;
    if config.wants(Output::Trace) {
        let trace = match &projected {
            Some(s) => {
                let trace = evolve(s, &data.eig, times).map_err(CliError::physics(context("evolve")))?;
                if data.array.len() <= ORACLE_CHECK_MAX_ATOMS {
                    let oracle = propagate_oracle(&data.coupling, &state, times)
                        .map_err(CliError::physics(context("propagator")))?;
                    oracle_max_abs_diff = Some(trace.max_abs_diff(&oracle));
                }
                trace
            }
            None => propagate_oracle(&data.coupling, &state, times)
                .map_err(CliError::physics(context("propagator")))?,
        };
        write_with(&dir.join("trace.csv"), |w| trace.write_csv(w))?;
        files.push("trace.csv");
    }

    if config.wants(Output::Farfield) || config.wants(Output::Symmetry) {
        let ff = FarField::new(&data.array, &data.field, l).map_err(CliError::physics(context("far field")))?;
        let map = ff
            .map(config.grid.n_theta, config.grid.n_phi)
            .map_err(CliError::physics(context("far-field map")))?;
        if config.wants(Output::Farfield) {
            write_with(&dir.join("farfield.csv"), |w| map.write_csv(w))?;
            files.push("farfield.csv");
        }
        if config.wants(Output::Symmetry) {
            let report = symmetry_report(&data.array, &data.field, l, &map, quad)
                .map_err(CliError::physics(context("symmetry")))?;
            write_json(&dir.join("symmetry.json"), &report)?;
            files.push("symmetry.json");
        }
    }

    files.push("manifest.json");
    let manifest = Manifest {
        schema_version: crate::config::SCHEMA_VERSION,
        scenario: &config.name,
        point: &data.point,
        l,
        l_reduced: state.l_reduced(),
        array: ArrayInfo {
            n_atoms: data.array.len(),
            n_rings: data.array.n_rings(),
            n_phi: data.array.n_phi(),
            closest_separation: data.array.closest_pair().map(|(_, _, d)| d),
        },
        checks: &data.checks,
        conditioning: &data.conditioning,
        dynamics: DynamicsInfo {
            method: if fallback { "propagator" } else { "eigen" },
            fallback,
            completeness_error,
            oracle_max_abs_diff,
        },
        files,
        diagnostics,
        config,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;

    Ok(JobSummary {
        point: label.clone(),
        l,
        dir,
        fallback,
        checks_pass: data.checks.trace.pass && data.checks.sum_rule.pass && data.checks.decay_psd.pass,
        seconds: start.elapsed().as_secs_f64(),
    })
}
