//! Batch orchestration of a scenario: solves, declared studies, artifact
//! emission and the reproducibility manifest.
//!
//! A run always solves the incompressible problem, solves the compressible
//! problem when `epsilon > 0`, applies the built-in health checks
//! (conservation, Bernoulli residual, subsonicity) to every converged
//! state, then runs the declared studies against their predicted-rate
//! acceptance rules. Solver failures are recorded in the manifest and the
//! run reports failure while keeping partial artifacts.

use crate::analysis::{
    self, far_field_rate, low_mach_study, truncation_study, uniqueness_probe, ProbeInit,
    RateModel, Reference, Scenario,
};
use crate::config::{ReferenceKind, ScenarioConfig, StudyKind};
use crate::error::{Error, Result};
use crate::geometry::ProfileKind;
use crate::io;
use crate::solvers::{
    solve_compressible, solve_cylinder_reference, solve_incompressible, uniform_cylinder_state,
    FlowState,
};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub passed: bool,
    pub manifest_path: PathBuf,
    pub checks: Vec<CheckLine>,
    pub errors: Vec<String>,
}

struct Manifest {
    text: String,
    checks: Vec<CheckLine>,
    errors: Vec<String>,
}

impl Manifest {
    fn new(config: &ScenarioConfig) -> Self {
        let mut text = String::new();
        writeln!(text, "nozzleflow-manifest v1").unwrap();
        let mut hasher = Sha256::new();
        hasher.update(config.echo.as_bytes());
        writeln!(text, "scenario_hash {:x}", hasher.finalize()).unwrap();
        writeln!(text, "code_version {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(text, "[config]").unwrap();
        text.push_str(&config.echo);
        writeln!(text, "[runs]").unwrap();
        Manifest {
            text,
            checks: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn run_line(&mut self, name: &str, state: &FlowState<f64>) {
        writeln!(
            self.text,
            "run {name} cells={} picard_iterations={} max_mach={:?} achieved_flux={:?} truncated_cells={}",
            state.mesh.cell_count(),
            state.diagnostics.picard_updates.len(),
            state.diagnostics.max_mach,
            state.achieved_flux,
            state.diagnostics.truncated_cells
        )
        .unwrap();
    }

    fn note(&mut self, line: &str) {
        writeln!(self.text, "{line}").unwrap();
    }

    fn error(&mut self, stage: &str, err: &Error) {
        let line = format!("error {stage}: {err}");
        writeln!(self.text, "{line}").unwrap();
        self.errors.push(line);
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckLine {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn finish(mut self, directory: &PathBuf, elapsed_ms: u128) -> Result<RunOutcome> {
        writeln!(self.text, "[checks]").unwrap();
        for c in &self.checks {
            writeln!(
                self.text,
                "check {} {} {}",
                c.name,
                if c.passed { "pass" } else { "fail" },
                c.detail
            )
            .unwrap();
        }
        writeln!(self.text, "[result]").unwrap();
        let passed = self.errors.is_empty() && self.checks.iter().all(|c| c.passed);
        writeln!(self.text, "status {}", if passed { "pass" } else { "fail" }).unwrap();
        writeln!(self.text, "elapsed_ms {elapsed_ms}").unwrap();
        let manifest_path = directory.join("manifest.txt");
        std::fs::write(&manifest_path, &self.text)?;
        Ok(RunOutcome {
            passed,
            manifest_path,
            checks: self.checks,
            errors: self.errors,
        })
    }
}

/// Relative station-flux deviation over interior stations.
fn conservation_deviation(state: &FlowState<f64>) -> Result<f64> {
    let mesh = &state.mesh;
    let reference = state.achieved_flux;
    let mut worst: f64 = 0.0;
    let stations = 10.min(mesh.n_z);
    for k in 0..stations {
        let jc = (k * (mesh.n_z - 1)) / (stations - 1).max(1);
        let flux = state.flux_at_column(jc)?;
        worst = worst.max(((flux - reference) / reference).abs());
    }
    Ok(worst)
}

fn health_checks(manifest: &mut Manifest, name: &str, state: &FlowState<f64>) {
    match conservation_deviation(state) {
        Ok(dev) => manifest.check(
            &format!("{name}_conservation"),
            dev < 1e-6,
            format!("max_station_flux_deviation={dev:e} tolerance=1e-6"),
        ),
        Err(e) => manifest.check(&format!("{name}_conservation"), false, format!("error: {e}")),
    }
    if !state.gas.is_incompressible() {
        match state.max_bernoulli_residual() {
            Ok(res) => manifest.check(
                &format!("{name}_bernoulli_residual"),
                res < 1e-10,
                format!("max_residual={res:e} tolerance=1e-10"),
            ),
            Err(e) => manifest.check(
                &format!("{name}_bernoulli_residual"),
                false,
                format!("error: {e}"),
            ),
        }
        manifest.check(
            &format!("{name}_subsonic"),
            state.diagnostics.max_mach < 1.0 && state.diagnostics.truncated_cells == 0,
            format!(
                "max_mach={:?} truncated_cells={}",
                state.diagnostics.max_mach, state.diagnostics.truncated_cells
            ),
        );
    }
}

/// Executes a validated scenario; artifacts land in the configured output
/// directory. Returns the outcome (pass/fail plus the check lines); `Err`
/// is reserved for environment problems such as unwritable output paths.
pub fn run(config: &ScenarioConfig, workers: usize) -> Result<RunOutcome> {
    let start = Instant::now();
    let directory = config.output.directory.clone();
    std::fs::create_dir_all(&directory)?;
    let mut manifest = Manifest::new(config);

    let scenario = match build_scenario(config) {
        Ok(s) => s,
        Err(e) => {
            manifest.error("setup", &e);
            return manifest.finish(&directory, start.elapsed().as_millis());
        }
    };

    // incompressible pass
    let incompressible = match solve_incompressible(
        &scenario.mesh,
        &scenario.force,
        scenario.m0,
        &scenario.config,
    ) {
        Ok(state) => state,
        Err(e) => {
            manifest.error("incompressible solve", &e);
            return manifest.finish(&directory, start.elapsed().as_millis());
        }
    };
    manifest.run_line("incompressible", &incompressible);
    health_checks(&mut manifest, "incompressible", &incompressible);
    if config.output.fields {
        io::write_field(&incompressible, &directory.join("incompressible.field"))?;
    }

    // compressible pass
    let compressible = if config.gas.epsilon > 0.0 {
        match solve_compressible(
            &scenario.mesh,
            &scenario.gas,
            &scenario.force,
            scenario.m0,
            &incompressible,
            &scenario.config,
        ) {
            Ok(state) => {
                manifest.run_line("compressible", &state);
                health_checks(&mut manifest, "compressible", &state);
                if config.output.fields {
                    io::write_field(&state, &directory.join("compressible.field"))?;
                }
                Some(state)
            }
            Err(e) => {
                manifest.error("compressible solve", &e);
                None
            }
        }
    } else {
        None
    };

    if manifest.errors.is_empty() {
        for kind in config.study.kinds.clone() {
            let result = match kind {
                StudyKind::FarField => run_far_field(
                    config,
                    &scenario,
                    &incompressible,
                    compressible.as_ref(),
                    &mut manifest,
                    &directory,
                ),
                StudyKind::LowMach => run_low_mach(config, &scenario, &mut manifest, &directory, workers),
                StudyKind::Truncation => {
                    run_truncation(config, &scenario, &mut manifest, &directory, workers)
                }
                StudyKind::Uniqueness => run_uniqueness(config, &scenario, &mut manifest),
            };
            if let Err(e) = result {
                manifest.error("study", &e);
            }
        }
    }

    manifest.finish(&directory, start.elapsed().as_millis())
}

fn build_scenario(config: &ScenarioConfig) -> Result<Scenario<f64>> {
    let mesh = config.build_mesh()?;
    let gas = config.build_gas()?;
    let force = Arc::new(config.build_force(&mesh)?);
    Ok(Scenario {
        mesh,
        gas,
        force,
        m0: config.mass_flux,
        config: config.solver,
    })
}

/// Predicted decay floor for the algebraic model, derived from the profile
/// and force decay classes and the reference in use.
fn predicted_exponent(config: &ScenarioConfig, compressible: bool) -> Option<f64> {
    let a1 = match config.geometry.profile {
        ProfileKind::Algebraic { a1, .. } => Some(a1),
        _ => None,
    }?;
    if !compressible {
        return Some(a1);
    }
    match config.study.reference {
        ReferenceKind::CylinderSolve => Some(a1 - 1.0),
        ReferenceKind::ConstantQbar | ReferenceKind::ConstantQ0 => {
            let b1 = match &config.force {
                crate::config::ForceConfig::Decaying { b1, .. } => *b1,
                _ => f64::INFINITY,
            };
            Some(a1.min(b1))
        }
    }
}

fn run_far_field(
    config: &ScenarioConfig,
    scenario: &Scenario<f64>,
    incompressible: &FlowState<f64>,
    compressible: Option<&FlowState<f64>>,
    manifest: &mut Manifest,
    directory: &PathBuf,
) -> Result<()> {
    let state = compressible.unwrap_or(incompressible);
    let is_compressible = compressible.is_some();
    let area = scenario.mesh.section_area(scenario.mesh.half_length)?;

    let reference_state;
    let reference = match config.study.reference {
        // the far field carries the outlet velocity datum m0 / |Sigma_L|
        ReferenceKind::ConstantQ0 => Reference::Constant(scenario.m0 / area),
        ReferenceKind::ConstantQbar => {
            let radial = Arc::new(scenario.force.radial_part());
            let uniform = uniform_cylinder_state(
                &state.gas,
                &radial,
                state.achieved_flux,
                scenario.mesh.symmetry,
            )?;
            Reference::Constant(uniform.q_bar)
        }
        ReferenceKind::CylinderSolve => {
            reference_state = solve_cylinder_reference(
                &state.gas,
                &scenario.force,
                scenario.m0,
                &scenario.mesh,
                &scenario.config,
            )?;
            manifest.run_line("cylinder_reference", &reference_state);
            Reference::State(&reference_state)
        }
    };

    let fit = far_field_rate(state, &reference, &config.study.t_list, config.study.model)?;
    io::write_rates_csv(&fit, &directory.join("rates.csv"))?;
    let used = fit.windows.iter().filter(|w| w.used).count();
    manifest.note(&format!(
        "far_field windows_used={used}/{} rate={:?} prefactor={:?} r2={:?}",
        fit.windows.len(),
        fit.rate,
        fit.prefactor,
        fit.r_squared
    ));

    match config.study.model {
        RateModel::Exponential => {
            manifest.check(
                "far_field_exponential",
                fit.rate > 0.0 && fit.r_squared > 0.99,
                format!(
                    "rate={:?} r2={:?} require rate>0 and r2>0.99",
                    fit.rate, fit.r_squared
                ),
            );
        }
        RateModel::Algebraic => {
            let predicted = predicted_exponent(config, is_compressible);
            match predicted {
                Some(p) => {
                    let floor = p - config.study.exponent_tolerance;
                    manifest.check(
                        "far_field_exponent",
                        fit.rate >= floor && fit.r_squared > 0.95,
                        format!(
                            "exponent={:?} predicted={p:?} floor={floor:?} r2={:?} require r2>0.95",
                            fit.rate, fit.r_squared
                        ),
                    );
                }
                None => {
                    manifest.check(
                        "far_field_exponent",
                        false,
                        "algebraic model declared but the profile has no decay exponent"
                            .to_string(),
                    );
                }
            }
        }
    }
    Ok(())
}

fn run_low_mach(
    config: &ScenarioConfig,
    scenario: &Scenario<f64>,
    manifest: &mut Manifest,
    directory: &PathBuf,
    workers: usize,
) -> Result<()> {
    let eps_list = crate::config::study_eps(config);
    let report = low_mach_study(
        scenario,
        &eps_list,
        config.study.window,
        config.study.slope_tolerance,
        workers,
    )?;
    io::write_study_csv(&report, &directory.join("low_mach.csv"))?;
    for r in &report.records {
        if r.excluded {
            manifest.note(&format!("low_mach epsilon={:?} excluded: {}", r.parameter, r.note));
        }
    }
    let v = report.velocity_slope.unwrap();
    let d = report.density_slope.unwrap();
    manifest.note(&format!(
        "low_mach velocity_slope={:?}±{:?} r2={:?} density_slope={:?}±{:?} r2={:?}",
        v.slope, v.half_width, v.r_squared, d.slope, d.half_width, d.r_squared
    ));
    if let Some(largest) = report
        .records
        .iter()
        .filter(|r| !r.excluded)
        .map(|r| r.parameter)
        .fold(None::<f64>, |acc, e| Some(acc.map_or(e, |a| a.max(e))))
    {
        manifest.note(&format!(
            "low_mach largest_epsilon_with_truncation_inactive={largest:?}"
        ));
    }
    manifest.check(
        "low_mach_velocity_slope",
        (v.slope - 2.0).abs() <= config.study.slope_tolerance,
        format!(
            "slope={:?} expected=2.0 tolerance={:?}",
            v.slope, config.study.slope_tolerance
        ),
    );
    manifest.check(
        "low_mach_density_slope",
        (d.slope - 2.0).abs() <= config.study.slope_tolerance,
        format!(
            "slope={:?} expected=2.0 tolerance={:?}",
            d.slope, config.study.slope_tolerance
        ),
    );
    Ok(())
}

fn run_truncation(
    config: &ScenarioConfig,
    scenario: &Scenario<f64>,
    manifest: &mut Manifest,
    directory: &PathBuf,
    workers: usize,
) -> Result<()> {
    let report = truncation_study(scenario, &config.study.l_list, config.study.window, workers)?;
    io::write_study_csv(&report, &directory.join("truncation.csv"))?;
    for r in &report.records {
        manifest.note(&format!(
            "truncation L={:?} interior_deviation={:?}",
            r.parameter, r.velocity_deviation
        ));
    }
    if let Some(fit) = report.velocity_slope {
        manifest.note(&format!(
            "truncation exponential_fit rate={:?} r2={:?}",
            fit.slope, fit.r_squared
        ));
    }
    let final_dev = report
        .records
        .last()
        .map(|r| r.velocity_deviation)
        .unwrap_or(f64::NAN);
    manifest.check(
        "truncation_stability",
        report.passed,
        format!("strictly_decreasing_and_above_floor final_deviation={final_dev:?}"),
    );
    Ok(())
}

fn run_uniqueness(
    config: &ScenarioConfig,
    scenario: &Scenario<f64>,
    manifest: &mut Manifest,
) -> Result<()> {
    let pairs = [
        ("uniform_flow", ProbeInit::UniformFlow),
        ("scaled_potential", ProbeInit::ScaledPotential(1.5)),
    ];
    let _ = config;
    for (name, init) in pairs {
        let dev = uniqueness_probe(scenario, ProbeInit::Incompressible, init)?;
        manifest.check(
            &format!("uniqueness_{name}"),
            dev < 1e-7,
            format!("max_velocity_disagreement={dev:e} tolerance=1e-7"),
        );
    }
    Ok(())
}

/// Worker count from the environment (`NOZZLEFLOW_WORKERS`), defaulting to
/// the available parallelism.
pub fn workers_from_env() -> usize {
    std::env::var("NOZZLEFLOW_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Offline rate fit between two field dumps (the second is the reference).
pub fn rates_between(
    field_a: &std::path::Path,
    field_b: &std::path::Path,
    t_list: &[f64],
    model: RateModel,
    out: Option<&std::path::Path>,
) -> Result<analysis::RateFit<f64>> {
    let a = io::read_field(field_a)?;
    let b = io::read_field(field_b)?;
    let fit = far_field_rate(&a, &Reference::State(&b), t_list, model)?;
    if let Some(path) = out {
        io::write_rates_csv(&fit, path)?;
    }
    Ok(fit)
}
