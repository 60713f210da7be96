//! Scenario files: a flat, sectioned key-value format (INI style), chosen
//! so committed regression scenarios diff cleanly. Loading validates every
//! constraint and reports the full list of violations, not just the first.
//!
//! The exact grammar and all defaults are documented in `docs/formats.md`.

use crate::error::{Error, Result};
use crate::force::ForceField;
use crate::gas::GasModel;
use crate::geometry::{
    build_mesh, build_profile, MeridianMesh, NozzleProfile, Obstacle, ProfileKind, Symmetry,
};
use crate::solvers::SolverConfig;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    FarField,
    LowMach,
    Truncation,
    Uniqueness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Constant `(0, q0)` with `q0 = m_h / |Sigma|`.
    ConstantQ0,
    /// Constant `(0, q_bar)` from the uniform cylinder state at the
    /// achieved flux.
    ConstantQbar,
    /// Full solve on the reference cylinder with the same resolution.
    CylinderSolve,
}

#[derive(Debug, Clone)]
pub struct GeometryConfig {
    pub profile: ProfileKind<f64>,
    pub obstacle: Option<Obstacle<f64>>,
    pub k: f64,
    pub half_length: f64,
    pub transverse_cells: usize,
    pub axial_spacing: f64,
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone)]
pub struct GasConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_list: Vec<f64>,
    pub theta: f64,
    pub epsilon0: f64,
}

#[derive(Debug, Clone)]
pub enum ForceConfig {
    Zero,
    RadialStatic { amplitude: f64 },
    Decaying { amplitude: f64, perturbation: f64, b1: f64, k: f64 },
    Tabulated { table: PathBuf },
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub kinds: Vec<StudyKind>,
    pub model: crate::analysis::RateModel,
    pub reference: ReferenceKind,
    pub t_list: Vec<f64>,
    pub window: (f64, f64),
    pub l_list: Vec<f64>,
    pub slope_tolerance: f64,
    pub exponent_tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub fields: bool,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub geometry: GeometryConfig,
    pub gas: GasConfig,
    pub force: ForceConfig,
    pub mass_flux: f64,
    pub solver: SolverConfig<f64>,
    pub study: StudyConfig,
    pub output: OutputConfig,
    /// Canonical echo of the parsed configuration (defaults filled in),
    /// hashed into the manifest.
    pub echo: String,
}

impl ScenarioConfig {
    pub fn build_profile(&self) -> Result<NozzleProfile<f64>> {
        build_profile(self.geometry.profile, self.geometry.obstacle, self.geometry.k)
    }

    pub fn build_mesh(&self) -> Result<Arc<MeridianMesh<f64>>> {
        let profile = self.build_profile()?;
        Ok(Arc::new(build_mesh(
            &profile,
            self.geometry.half_length,
            self.geometry.transverse_cells,
            self.geometry.axial_spacing,
            self.geometry.symmetry,
        )?))
    }

    pub fn build_gas(&self) -> Result<GasModel<f64>> {
        GasModel::new(
            self.gas.gamma,
            self.gas.epsilon,
            self.gas.theta,
            self.gas.epsilon0,
        )
    }

    pub fn build_force(&self, mesh: &MeridianMesh<f64>) -> Result<ForceField<f64>> {
        match &self.force {
            ForceConfig::Zero => Ok(ForceField::zero()),
            ForceConfig::RadialStatic { amplitude } => Ok(ForceField::radial_static(*amplitude)),
            ForceConfig::Decaying {
                amplitude,
                perturbation,
                b1,
                k,
            } => ForceField::decaying_perturbation(*amplitude, *perturbation, *b1, *k),
            ForceConfig::Tabulated { table } => crate::io::read_tabulated_force(table, mesh),
        }
    }
}

const SECTIONS: [&str; 7] = [
    "geometry", "gas", "force", "flow", "solver", "study", "output",
];

const KEYS: [(&str, &[&str]); 7] = [
    (
        "geometry",
        &[
            "profile",
            "a1",
            "amplitude",
            "wall_amplitude",
            "wall_center",
            "wall_width",
            "k",
            "obstacle",
            "bump_height",
            "bump_l1",
            "bump_l2",
            "half_length",
            "transverse_cells",
            "axial_spacing",
            "symmetry",
        ],
    ),
    ("gas", &["gamma", "epsilon", "epsilon_list", "theta", "epsilon0"]),
    ("force", &["kind", "amplitude", "perturbation", "b1", "k", "table"]),
    ("flow", &["mass_flux"]),
    (
        "solver",
        &[
            "linear_tol",
            "picard_tol",
            "max_picard",
            "max_linear",
            "damping",
            "inlet_datum",
        ],
    ),
    (
        "study",
        &[
            "kind",
            "model",
            "reference",
            "t_list",
            "window",
            "l_list",
            "slope_tolerance",
            "exponent_tolerance",
        ],
    ),
    ("output", &["directory", "fields"]),
];

struct RawConfig {
    // (section, key) -> (line, value)
    values: BTreeMap<(String, String), (usize, String)>,
}

impl RawConfig {
    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(|(_, v)| v.as_str())
    }
}

fn parse_raw(text: &str, violations: &mut Vec<String>) -> RawConfig {
    let mut values = BTreeMap::new();
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                violations.push(format!("line {line_no}: unterminated section header '{line}'"));
                continue;
            }
            let name = line[1..line.len() - 1].trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                violations.push(format!("line {line_no}: unknown section '[{name}]'"));
                section = None;
                continue;
            }
            section = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            violations.push(format!("line {line_no}: expected 'key = value', found '{line}'"));
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let Some(section_name) = section.clone() else {
            violations.push(format!("line {line_no}: key '{key}' outside any section"));
            continue;
        };
        let allowed = KEYS
            .iter()
            .find(|(s, _)| *s == section_name)
            .map(|(_, keys)| keys.contains(&key.as_str()))
            .unwrap_or(false);
        if !allowed {
            violations.push(format!(
                "line {line_no}: unknown key '{key}' in section [{section_name}]"
            ));
            continue;
        }
        if values
            .insert((section_name.clone(), key.clone()), (line_no, value))
            .is_some()
        {
            violations.push(format!(
                "line {line_no}: duplicate key '{key}' in section [{section_name}]"
            ));
        }
    }
    RawConfig { values }
}

fn get_f64(
    raw: &RawConfig,
    section: &str,
    key: &str,
    default: f64,
    violations: &mut Vec<String>,
) -> f64 {
    match raw.get(section, key) {
        None => default,
        Some(v) => match v.parse::<f64>() {
            Ok(x) => x,
            Err(_) => {
                violations.push(format!("[{section}] {key}: '{v}' is not a number"));
                default
            }
        },
    }
}

fn get_usize(
    raw: &RawConfig,
    section: &str,
    key: &str,
    default: usize,
    violations: &mut Vec<String>,
) -> usize {
    match raw.get(section, key) {
        None => default,
        Some(v) => match v.parse::<usize>() {
            Ok(x) => x,
            Err(_) => {
                violations.push(format!("[{section}] {key}: '{v}' is not a non-negative integer"));
                default
            }
        },
    }
}

fn get_bool(
    raw: &RawConfig,
    section: &str,
    key: &str,
    default: bool,
    violations: &mut Vec<String>,
) -> bool {
    match raw.get(section, key) {
        None => default,
        Some("true") => true,
        Some("false") => false,
        Some(v) => {
            violations.push(format!("[{section}] {key}: '{v}' is not 'true' or 'false'"));
            default
        }
    }
}

fn get_list(
    raw: &RawConfig,
    section: &str,
    key: &str,
    violations: &mut Vec<String>,
) -> Vec<f64> {
    match raw.get(section, key) {
        None => Vec::new(),
        Some(v) => {
            let mut out = Vec::new();
            for token in v.split_whitespace() {
                match token.parse::<f64>() {
                    Ok(x) => out.push(x),
                    Err(_) => {
                        violations.push(format!(
                            "[{section}] {key}: '{token}' is not a number"
                        ));
                    }
                }
            }
            out
        }
    }
}

/// Loads and fully validates a scenario file. On failure the error carries
/// every violation found.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut violations = Vec::new();
    let raw = parse_raw(text, &mut violations);

    // geometry
    let symmetry = match raw.get("geometry", "symmetry").unwrap_or("axisymmetric") {
        "axisymmetric" => Symmetry::Axisymmetric,
        "planar" => Symmetry::Planar,
        other => {
            violations.push(format!(
                "[geometry] symmetry: '{other}' is not 'axisymmetric' or 'planar'"
            ));
            Symmetry::Axisymmetric
        }
    };
    let k = get_f64(&raw, "geometry", "k", 2.0, &mut violations);
    let profile = match raw.get("geometry", "profile").unwrap_or("cylinder") {
        "cylinder" => ProfileKind::Cylinder,
        "flat_beyond_k" => ProfileKind::FlatBeyondK {
            amplitude: get_f64(&raw, "geometry", "wall_amplitude", 0.2, &mut violations),
            center: get_f64(&raw, "geometry", "wall_center", 0.0, &mut violations),
            width: get_f64(&raw, "geometry", "wall_width", 2.0, &mut violations),
        },
        "algebraic" => ProfileKind::Algebraic {
            a1: get_f64(&raw, "geometry", "a1", 2.0, &mut violations),
            amplitude: get_f64(&raw, "geometry", "amplitude", 0.2, &mut violations),
        },
        other => {
            violations.push(format!(
                "[geometry] profile: '{other}' is not one of cylinder, flat_beyond_k, algebraic"
            ));
            ProfileKind::Cylinder
        }
    };
    let obstacle = match raw.get("geometry", "obstacle").unwrap_or("none") {
        "none" => None,
        "bump" => Some(Obstacle {
            height: get_f64(&raw, "geometry", "bump_height", 0.3, &mut violations),
            l1: get_f64(&raw, "geometry", "bump_l1", -1.0, &mut violations),
            l2: get_f64(&raw, "geometry", "bump_l2", 1.0, &mut violations),
        }),
        other => {
            violations.push(format!(
                "[geometry] obstacle: '{other}' is not 'none' or 'bump'"
            ));
            None
        }
    };
    let geometry = GeometryConfig {
        profile,
        obstacle,
        k,
        half_length: get_f64(&raw, "geometry", "half_length", 10.0, &mut violations),
        transverse_cells: get_usize(&raw, "geometry", "transverse_cells", 8, &mut violations),
        axial_spacing: get_f64(&raw, "geometry", "axial_spacing", 0.5, &mut violations),
        symmetry,
    };

    // gas
    let gas = GasConfig {
        gamma: get_f64(&raw, "gas", "gamma", 1.4, &mut violations),
        epsilon: get_f64(&raw, "gas", "epsilon", 0.1, &mut violations),
        epsilon_list: get_list(&raw, "gas", "epsilon_list", &mut violations),
        theta: get_f64(&raw, "gas", "theta", 0.9, &mut violations),
        epsilon0: get_f64(&raw, "gas", "epsilon0", 0.5, &mut violations),
    };

    // force
    let force = match raw.get("force", "kind").unwrap_or("zero") {
        "zero" => ForceConfig::Zero,
        "radial_static" => ForceConfig::RadialStatic {
            amplitude: get_f64(&raw, "force", "amplitude", 0.1, &mut violations),
        },
        "decaying" => ForceConfig::Decaying {
            amplitude: get_f64(&raw, "force", "amplitude", 0.1, &mut violations),
            perturbation: get_f64(&raw, "force", "perturbation", 0.1, &mut violations),
            b1: get_f64(&raw, "force", "b1", 1.5, &mut violations),
            k: get_f64(&raw, "force", "k", 2.0, &mut violations),
        },
        "tabulated" => match raw.get("force", "table") {
            Some(p) => ForceConfig::Tabulated {
                table: PathBuf::from(p),
            },
            None => {
                violations.push("[force] tabulated kind needs 'table = <path>'".to_string());
                ForceConfig::Zero
            }
        },
        other => {
            violations.push(format!(
                "[force] kind: '{other}' is not one of zero, radial_static, decaying, tabulated"
            ));
            ForceConfig::Zero
        }
    };

    // flow
    let default_m0 = match symmetry {
        Symmetry::Axisymmetric => std::f64::consts::PI,
        Symmetry::Planar => 1.0,
    };
    let mass_flux = get_f64(&raw, "flow", "mass_flux", default_m0, &mut violations);

    // solver
    let solver = SolverConfig {
        linear_tol: get_f64(&raw, "solver", "linear_tol", 1e-12, &mut violations),
        picard_tol: get_f64(&raw, "solver", "picard_tol", 1e-11, &mut violations),
        max_picard: get_usize(&raw, "solver", "max_picard", 80, &mut violations),
        max_linear: get_usize(&raw, "solver", "max_linear", 200_000, &mut violations),
        damping: get_f64(&raw, "solver", "damping", 1.0, &mut violations),
        inlet_datum: get_f64(&raw, "solver", "inlet_datum", 0.0, &mut violations),
    };

    // study
    let mut kinds = Vec::new();
    for token in raw.get("study", "kind").unwrap_or("none").split_whitespace() {
        match token {
            "none" => {}
            "far_field" => kinds.push(StudyKind::FarField),
            "low_mach" => kinds.push(StudyKind::LowMach),
            "truncation" => kinds.push(StudyKind::Truncation),
            "uniqueness" => kinds.push(StudyKind::Uniqueness),
            other => violations.push(format!(
                "[study] kind: '{other}' is not one of none, far_field, low_mach, truncation, uniqueness"
            )),
        }
    }
    let model = match raw.get("study", "model").unwrap_or("algebraic") {
        "exponential" => crate::analysis::RateModel::Exponential,
        "algebraic" => crate::analysis::RateModel::Algebraic,
        other => {
            violations.push(format!(
                "[study] model: '{other}' is not 'exponential' or 'algebraic'"
            ));
            crate::analysis::RateModel::Algebraic
        }
    };
    let reference = match raw.get("study", "reference").unwrap_or("constant_q0") {
        "constant_q0" => ReferenceKind::ConstantQ0,
        "constant_qbar" => ReferenceKind::ConstantQbar,
        "cylinder" => ReferenceKind::CylinderSolve,
        other => {
            violations.push(format!(
                "[study] reference: '{other}' is not one of constant_q0, constant_qbar, cylinder"
            ));
            ReferenceKind::ConstantQ0
        }
    };
    let window_list = get_list(&raw, "study", "window", &mut violations);
    let window = if window_list.is_empty() {
        (-2.5, 2.5)
    } else if window_list.len() == 2 && window_list[0] < window_list[1] {
        (window_list[0], window_list[1])
    } else {
        violations.push("[study] window: expected 'z0 z1' with z0 < z1".to_string());
        (-2.5, 2.5)
    };
    let study = StudyConfig {
        kinds,
        model,
        reference,
        t_list: get_list(&raw, "study", "t_list", &mut violations),
        window,
        l_list: get_list(&raw, "study", "l_list", &mut violations),
        slope_tolerance: get_f64(&raw, "study", "slope_tolerance", 0.2, &mut violations),
        exponent_tolerance: get_f64(&raw, "study", "exponent_tolerance", 0.3, &mut violations),
    };

    // output
    let output = OutputConfig {
        directory: PathBuf::from(raw.get("output", "directory").unwrap_or("out")),
        fields: get_bool(&raw, "output", "fields", true, &mut violations),
    };

    let mut config = ScenarioConfig {
        geometry,
        gas,
        force,
        mass_flux,
        solver,
        study,
        output,
        echo: String::new(),
    };
    validate(&config, &mut violations);
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    config.echo = canonical_echo(&config);
    Ok(config)
}

fn validate(config: &ScenarioConfig, violations: &mut Vec<String>) {
    // geometry invariants, named after the violated bound
    match build_profile(
        config.geometry.profile,
        config.geometry.obstacle,
        config.geometry.k,
    ) {
        Err(e) => violations.push(format!("[geometry] {e}")),
        Ok(profile) => {
            if let Err(e) = build_mesh(
                &profile,
                config.geometry.half_length,
                config.geometry.transverse_cells,
                config.geometry.axial_spacing,
                config.geometry.symmetry,
            ) {
                violations.push(format!("[geometry] {e}"));
            }
        }
    }

    // gas invariants on the primary epsilon and every sweep entry
    if let Err(e) = GasModel::new(
        config.gas.gamma,
        config.gas.epsilon,
        config.gas.theta,
        config.gas.epsilon0,
    ) {
        violations.push(format!("[gas] {e}"));
    }
    for &eps in &config.gas.epsilon_list {
        if let Err(e) = GasModel::new(config.gas.gamma, eps, config.gas.theta, config.gas.epsilon0)
        {
            violations.push(format!("[gas] epsilon_list entry {eps}: {e}"));
        }
    }

    match &config.force {
        ForceConfig::Decaying { b1, .. } if !(*b1 > 0.0) => {
            violations.push(format!(
                "[force] ForceField requires the decay exponent b1 > 0, got {b1}"
            ));
        }
        ForceConfig::Tabulated { table } if !table.exists() => {
            violations.push(format!(
                "[force] tabulated potential file '{}' not found",
                table.display()
            ));
        }
        _ => {}
    }

    if !(config.mass_flux > 0.0) {
        violations.push(format!(
            "[flow] mass_flux must be positive, got {}",
            config.mass_flux
        ));
    }

    let s = &config.solver;
    if !(s.linear_tol > 0.0 && s.picard_tol > 0.0) {
        violations.push("[solver] tolerances must be positive".to_string());
    }
    if !(s.damping > 0.0 && s.damping <= 1.0) {
        violations.push(format!(
            "[solver] damping must lie in (0, 1], got {}",
            s.damping
        ));
    }
    if s.max_picard == 0 {
        violations.push("[solver] max_picard must be at least 1".to_string());
    }

    let study = &config.study;
    for kind in &study.kinds {
        match kind {
            StudyKind::LowMach => {
                let mut distinct = study_eps(config);
                distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
                distinct.dedup();
                if distinct.len() < 3 {
                    violations.push(format!(
                        "[study] low_mach needs at least 3 distinct epsilon_list entries, got {}",
                        distinct.len()
                    ));
                }
                check_window_in_domain(config, violations);
            }
            StudyKind::FarField => {
                if study.t_list.len() < 3 {
                    violations.push(format!(
                        "[study] far_field needs at least 3 t_list windows, got {}",
                        study.t_list.len()
                    ));
                }
                let onset = config.geometry.k + 1.0;
                for &t in &study.t_list {
                    if t < onset - 1e-9 {
                        violations.push(format!(
                            "[study] far_field window at T = {t} starts before the onset K + 1 = {onset}"
                        ));
                    }
                    if t + 1.0 > config.geometry.half_length + 1e-9 {
                        violations.push(format!(
                            "[study] far_field window [{t}, {t}+1] leaves the domain"
                        ));
                    }
                }
            }
            StudyKind::Truncation => {
                if study.l_list.len() < 3 {
                    violations.push(format!(
                        "[study] truncation needs at least 3 l_list lengths, got {}",
                        study.l_list.len()
                    ));
                } else {
                    let l_min = study.l_list[0];
                    if study.window.0 < -l_min / 4.0 || study.window.1 > l_min / 4.0 {
                        violations.push(format!(
                            "[study] truncation window [{}, {}] must stay within |z| <= L_min/4 = {}",
                            study.window.0,
                            study.window.1,
                            l_min / 4.0
                        ));
                    }
                    for pair in study.l_list.windows(2) {
                        if !(pair[1] > pair[0]) {
                            violations.push(
                                "[study] truncation l_list must be strictly increasing".to_string(),
                            );
                            break;
                        }
                    }
                }
                check_window_in_domain(config, violations);
            }
            StudyKind::Uniqueness => {
                if config.gas.epsilon <= 0.0 {
                    violations.push(
                        "[study] uniqueness probes the compressible solve and needs epsilon > 0"
                            .to_string(),
                    );
                }
            }
        }
    }
}

fn check_window_in_domain(config: &ScenarioConfig, violations: &mut Vec<String>) {
    let l = config.geometry.half_length;
    if config.study.window.0 < -l || config.study.window.1 > l {
        violations.push(format!(
            "[study] window [{}, {}] leaves the domain [-{l}, {l}]",
            config.study.window.0, config.study.window.1
        ));
    }
}

/// The epsilon values a low-mach sweep runs over.
pub fn study_eps(config: &ScenarioConfig) -> Vec<f64> {
    if config.gas.epsilon_list.is_empty() {
        vec![config.gas.epsilon]
    } else {
        config.gas.epsilon_list.clone()
    }
}

fn canonical_echo(config: &ScenarioConfig) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    writeln!(s, "[geometry]").unwrap();
    match config.geometry.profile {
        ProfileKind::Cylinder => writeln!(s, "profile = cylinder").unwrap(),
        ProfileKind::FlatBeyondK {
            amplitude,
            center,
            width,
        } => {
            writeln!(s, "profile = flat_beyond_k").unwrap();
            writeln!(s, "wall_amplitude = {amplitude:?}").unwrap();
            writeln!(s, "wall_center = {center:?}").unwrap();
            writeln!(s, "wall_width = {width:?}").unwrap();
        }
        ProfileKind::Algebraic { a1, amplitude } => {
            writeln!(s, "profile = algebraic").unwrap();
            writeln!(s, "a1 = {a1:?}").unwrap();
            writeln!(s, "amplitude = {amplitude:?}").unwrap();
        }
    }
    match &config.geometry.obstacle {
        None => writeln!(s, "obstacle = none").unwrap(),
        Some(b) => {
            writeln!(s, "obstacle = bump").unwrap();
            writeln!(s, "bump_height = {:?}", b.height).unwrap();
            writeln!(s, "bump_l1 = {:?}", b.l1).unwrap();
            writeln!(s, "bump_l2 = {:?}", b.l2).unwrap();
        }
    }
    writeln!(s, "k = {:?}", config.geometry.k).unwrap();
    writeln!(s, "half_length = {:?}", config.geometry.half_length).unwrap();
    writeln!(s, "transverse_cells = {}", config.geometry.transverse_cells).unwrap();
    writeln!(s, "axial_spacing = {:?}", config.geometry.axial_spacing).unwrap();
    writeln!(
        s,
        "symmetry = {}",
        match config.geometry.symmetry {
            Symmetry::Axisymmetric => "axisymmetric",
            Symmetry::Planar => "planar",
        }
    )
    .unwrap();
    writeln!(s, "[gas]").unwrap();
    writeln!(s, "gamma = {:?}", config.gas.gamma).unwrap();
    writeln!(s, "epsilon = {:?}", config.gas.epsilon).unwrap();
    if !config.gas.epsilon_list.is_empty() {
        let list: Vec<String> = config
            .gas
            .epsilon_list
            .iter()
            .map(|e| format!("{e:?}"))
            .collect();
        writeln!(s, "epsilon_list = {}", list.join(" ")).unwrap();
    }
    writeln!(s, "theta = {:?}", config.gas.theta).unwrap();
    writeln!(s, "epsilon0 = {:?}", config.gas.epsilon0).unwrap();
    writeln!(s, "[force]").unwrap();
    match &config.force {
        ForceConfig::Zero => writeln!(s, "kind = zero").unwrap(),
        ForceConfig::RadialStatic { amplitude } => {
            writeln!(s, "kind = radial_static").unwrap();
            writeln!(s, "amplitude = {amplitude:?}").unwrap();
        }
        ForceConfig::Decaying {
            amplitude,
            perturbation,
            b1,
            k,
        } => {
            writeln!(s, "kind = decaying").unwrap();
            writeln!(s, "amplitude = {amplitude:?}").unwrap();
            writeln!(s, "perturbation = {perturbation:?}").unwrap();
            writeln!(s, "b1 = {b1:?}").unwrap();
            writeln!(s, "k = {k:?}").unwrap();
        }
        ForceConfig::Tabulated { table } => {
            writeln!(s, "kind = tabulated").unwrap();
            writeln!(s, "table = {}", table.display()).unwrap();
        }
    }
    writeln!(s, "[flow]").unwrap();
    writeln!(s, "mass_flux = {:?}", config.mass_flux).unwrap();
    writeln!(s, "[solver]").unwrap();
    writeln!(s, "linear_tol = {:?}", config.solver.linear_tol).unwrap();
    writeln!(s, "picard_tol = {:?}", config.solver.picard_tol).unwrap();
    writeln!(s, "max_picard = {}", config.solver.max_picard).unwrap();
    writeln!(s, "max_linear = {}", config.solver.max_linear).unwrap();
    writeln!(s, "damping = {:?}", config.solver.damping).unwrap();
    writeln!(s, "inlet_datum = {:?}", config.solver.inlet_datum).unwrap();
    writeln!(s, "[study]").unwrap();
    let kinds: Vec<&str> = config
        .study
        .kinds
        .iter()
        .map(|k| match k {
            StudyKind::FarField => "far_field",
            StudyKind::LowMach => "low_mach",
            StudyKind::Truncation => "truncation",
            StudyKind::Uniqueness => "uniqueness",
        })
        .collect();
    writeln!(
        s,
        "kind = {}",
        if kinds.is_empty() {
            "none".to_string()
        } else {
            kinds.join(" ")
        }
    )
    .unwrap();
    writeln!(
        s,
        "model = {}",
        match config.study.model {
            crate::analysis::RateModel::Exponential => "exponential",
            crate::analysis::RateModel::Algebraic => "algebraic",
        }
    )
    .unwrap();
    writeln!(
        s,
        "reference = {}",
        match config.study.reference {
            ReferenceKind::ConstantQ0 => "constant_q0",
            ReferenceKind::ConstantQbar => "constant_qbar",
            ReferenceKind::CylinderSolve => "cylinder",
        }
    )
    .unwrap();
    if !config.study.t_list.is_empty() {
        let list: Vec<String> = config.study.t_list.iter().map(|t| format!("{t:?}")).collect();
        writeln!(s, "t_list = {}", list.join(" ")).unwrap();
    }
    writeln!(
        s,
        "window = {:?} {:?}",
        config.study.window.0, config.study.window.1
    )
    .unwrap();
    if !config.study.l_list.is_empty() {
        let list: Vec<String> = config.study.l_list.iter().map(|l| format!("{l:?}")).collect();
        writeln!(s, "l_list = {}", list.join(" ")).unwrap();
    }
    writeln!(s, "slope_tolerance = {:?}", config.study.slope_tolerance).unwrap();
    writeln!(
        s,
        "exponent_tolerance = {:?}",
        config.study.exponent_tolerance
    )
    .unwrap();
    writeln!(s, "[output]").unwrap();
    writeln!(s, "directory = {}", config.output.directory.display()).unwrap();
    writeln!(s, "fields = {}", config.output.fields).unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let config = parse_config("[geometry]\nprofile = cylinder\n").unwrap();
        assert_eq!(config.geometry.transverse_cells, 8);
        assert_eq!(config.gas.gamma, 1.4);
        assert_eq!(config.gas.epsilon, 0.1);
        assert!((config.mass_flux - std::f64::consts::PI).abs() < 1e-15);
        assert!(config.study.kinds.is_empty());
        assert!(!config.echo.is_empty());
    }

    #[test]
    fn invalid_a1_names_the_invariant() {
        let err = parse_config("[geometry]\nprofile = algebraic\na1 = -1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("a1 > 0"), "{msg}");
    }

    #[test]
    fn low_mach_needs_three_epsilons() {
        let err = parse_config(
            "[gas]\nepsilon_list = 0.1\n[study]\nkind = low_mach\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("3 distinct epsilon"), "{msg}");
    }

    #[test]
    fn all_violations_are_collected() {
        let err = parse_config(
            "[geometry]\nprofile = algebraic\na1 = -1.0\n[flow]\nmass_flux = -2.0\n[solver]\ndamping = 3.0\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("a1 > 0"), "{msg}");
        assert!(msg.contains("mass_flux"), "{msg}");
        assert!(msg.contains("damping"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse_config("[geometry]\nwhatever = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("whatever"), "{msg}");
    }

    #[test]
    fn echo_is_reparseable_and_stable() {
        let text = "[geometry]\nprofile = algebraic\na1 = 2\namplitude = 0.2\nk = 4\nhalf_length = 20\n[study]\nkind = far_field\nt_list = 6 8 10\n";
        let config = parse_config(text).unwrap();
        let reparsed = parse_config(&config.echo).unwrap();
        assert_eq!(config.echo, reparsed.echo);
    }
}
