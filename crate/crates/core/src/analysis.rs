//! Verification harness: windowed far-field decay rates, the
//! incompressible-limit sweep, domain-truncation stability and uniqueness
//! probes, plus the Bernoulli/pressure diagnostics.
//!
//! Decay is measured on unit windows `[T, T+1]` in both the windowed
//! maximum norm (primary, matching the pointwise statements being checked)
//! and the weighted L2 norm (reported alongside). Windows whose deviation
//! sits within 10x of the solver floor are flagged and excluded from fits.

use crate::error::{Error, Result};
use crate::fem::{ElementGeometry, GAUSS_2};
use crate::force::ForceField;
use crate::gas::GasModel;
use crate::geometry::MeridianMesh;
use crate::solvers::{
    solve_compressible, solve_incompressible, state_from_potential, uniform_state, FlowState,
    SolverConfig,
};
use crate::{lit, norm2, Scalar};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

/// Everything a study needs to launch solver runs.
#[derive(Clone)]
pub struct Scenario<T: Scalar> {
    pub mesh: Arc<MeridianMesh<T>>,
    pub gas: GasModel<T>,
    pub force: Arc<ForceField<T>>,
    pub m0: T,
    pub config: SolverConfig<T>,
}

/// Mass flux through the cross section nearest to `t`, computed with the
/// assembly quadrature (so interior stations reproduce the outlet value to
/// solver accuracy, and the outlet station reproduces it bitwise).
pub fn mass_flux<T: Scalar>(state: &FlowState<T>, t: T) -> Result<T> {
    let jc = state.mesh.nearest_column(t)?;
    state.flux_at_column(jc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    Exponential,
    Algebraic,
}

/// Comparison field for far-field deviations.
pub enum Reference<'a, T: Scalar> {
    /// The constant axial flow `(0, q)`.
    Constant(T),
    /// Another state on a column-compatible mesh (same transverse
    /// resolution and station spacing).
    State(&'a FlowState<T>),
}

#[derive(Debug, Clone, Copy)]
pub struct WindowSample<T> {
    pub t: T,
    pub d_l2: T,
    pub d_linf: T,
    /// False when the deviation sits within 10x of the solver floor and
    /// the window was excluded from the fit.
    pub used: bool,
}

#[derive(Debug, Clone)]
pub struct RateFit<T> {
    pub model: RateModel,
    /// Decay rate (exponential model) or decay exponent (algebraic model);
    /// positive for decaying data.
    pub rate: T,
    pub prefactor: T,
    pub r_squared: T,
    pub windows: Vec<WindowSample<T>>,
}

/// Least-squares fit of the decay model to `(T, D)` samples: `D = C e^{-rate T}`
/// or `D = C T^{-rate}`. Needs at least three samples with distinct
/// abscissae and positive D.
pub fn fit_rate<T: Scalar>(samples: &[(T, T)], model: RateModel) -> Result<(T, T, T)> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(t, d) in samples {
        if !(d > T::zero()) {
            return Err(Error::InsufficientData(format!(
                "rate fit needs positive deviations, got {d} at T = {t}"
            )));
        }
        let x = match model {
            RateModel::Exponential => t,
            RateModel::Algebraic => {
                if !(t > T::zero()) {
                    return Err(Error::InsufficientData(format!(
                        "algebraic fit needs positive abscissae, got {t}"
                    )));
                }
                t.ln()
            }
        };
        xs.push(x);
        ys.push(d.ln());
    }
    let (slope, intercept, r2, _hw) = line_fit(&xs, &ys)?;
    Ok((-slope, intercept.exp(), r2))
}

/// Ordinary least squares with slope, intercept, r^2 (clamped to [0,1])
/// and a two-sigma half-width on the slope.
pub fn line_fit<T: Scalar>(xs: &[T], ys: &[T]) -> Result<(T, T, T, T)> {
    let n = xs.len();
    let nt = lit::<T>(n as f64);
    let xm = xs.iter().copied().sum::<T>() / nt;
    let ym = ys.iter().copied().sum::<T>() / nt;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for k in 0..n {
        let dx = xs[k] - xm;
        let dy = ys[k] - ym;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if !(sxx > T::zero()) {
        return Err(Error::InsufficientData(
            "insufficient distinct abscissae for a slope fit".to_string(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let r2 = if syy > T::zero() {
        (sxy * sxy / (sxx * syy)).min(T::one()).max(T::zero())
    } else {
        T::one()
    };
    let half_width = if n > 2 {
        let ss_res = (syy - slope * sxy).max(T::zero());
        let se2 = ss_res / (lit::<T>((n - 2) as f64) * sxx);
        lit::<T>(2.0) * se2.sqrt()
    } else {
        T::zero()
    };
    Ok((slope, intercept, r2, half_width))
}

/// Windowed far-field deviation of `state` from `reference` on unit
/// windows starting at each entry of `t_list`, fitted to the requested
/// decay model in the windowed maximum norm.
pub fn far_field_rate<T: Scalar>(
    state: &FlowState<T>,
    reference: &Reference<'_, T>,
    t_list: &[T],
    model: RateModel,
) -> Result<RateFit<T>> {
    let mesh = &state.mesh;
    if t_list.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 windows, got {}",
            t_list.len()
        )));
    }
    for pair in t_list.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::Usage(
                "window starts must be strictly increasing".to_string(),
            ));
        }
    }
    let onset = mesh.profile.k + T::one();
    let eps_pos = lit::<T>(1e-9);
    for &t in t_list {
        if t + eps_pos < onset {
            return Err(Error::Usage(format!(
                "window at T = {t} starts before the far-field onset K + 1 = {onset}"
            )));
        }
        if t + T::one() > mesh.half_length + eps_pos {
            return Err(Error::Usage(format!(
                "window [{t}, {t}+1] leaves the domain (L = {})",
                mesh.half_length
            )));
        }
    }
    if let Reference::State(other) = reference {
        if !mesh.compatible_with(&other.mesh) {
            return Err(Error::Usage(
                "reference state lives on an incompatible mesh".to_string(),
            ));
        }
    }

    let floor = state.diagnostics.velocity_floor * lit::<T>(10.0);
    let mut windows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let (d_l2, d_linf) = window_deviation(state, reference, t, t + T::one())?;
        windows.push(WindowSample {
            t,
            d_l2,
            d_linf,
            used: d_linf > floor,
        });
    }
    let samples: Vec<(T, T)> = windows
        .iter()
        .filter(|w| w.used)
        .map(|w| (w.t, w.d_linf))
        .collect();
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} of {} windows rise above 10x the solver floor {floor:e}",
            samples.len(),
            windows.len()
        )));
    }
    let (rate, prefactor, r_squared) = fit_rate(&samples, model)?;
    Ok(RateFit {
        model,
        rate,
        prefactor,
        r_squared,
        windows,
    })
}

/// Velocity deviation from the reference on the axial window `[z0, z1)`:
/// `(weighted L2, maximum over cells)`.
pub fn window_deviation<T: Scalar>(
    state: &FlowState<T>,
    reference: &Reference<'_, T>,
    z0: T,
    z1: T,
) -> Result<(T, T)> {
    let mesh = &state.mesh;
    let mut linf = T::zero();
    let mut l2 = T::zero();
    let mut any = false;
    for jc in 0..mesh.n_z {
        let zc = mesh.column_center_z(jc);
        if zc < z0 || zc >= z1 {
            continue;
        }
        let ref_col = match reference {
            Reference::Constant(_) => usize::MAX,
            Reference::State(other) => column_in(&other.mesh, zc)?,
        };
        for ic in 0..mesh.n_s {
            let cell = mesh.cell_id(ic, jc);
            let (dr, dz) = match reference {
                Reference::Constant(q) => (state.u_r[cell], state.u_z[cell] - *q),
                Reference::State(other) => {
                    let rc = other.mesh.cell_id(ic, ref_col);
                    (
                        state.u_r[cell] - other.u_r[rc],
                        state.u_z[cell] - other.u_z[rc],
                    )
                }
            };
            let dev = norm2(dr, dz);
            linf = linf.max(dev);
            l2 = l2 + dev * dev * cell_weighted_volume(mesh, ic, jc);
            any = true;
        }
    }
    if !any {
        return Err(Error::Range(format!(
            "window [{z0}, {z1}) contains no cell centers"
        )));
    }
    Ok(((l2 * mesh.measure_factor()).sqrt(), linf))
}

fn column_in<T: Scalar>(mesh: &MeridianMesh<T>, zc: T) -> Result<usize> {
    let jc = mesh.nearest_column(zc)?;
    let found = mesh.column_center_z(jc);
    if (found - zc).abs() > lit::<T>(1e-9) {
        return Err(Error::Usage(format!(
            "station grids do not align: no column centered at z = {zc}"
        )));
    }
    Ok(jc)
}

fn cell_weighted_volume<T: Scalar>(mesh: &MeridianMesh<T>, ic: usize, jc: usize) -> T {
    let gp = lit::<T>(GAUSS_2);
    let mut acc = T::zero();
    for &xi in &[-gp, gp] {
        for &eta in &[-gp, gp] {
            let geom = ElementGeometry::at(mesh, ic, jc, xi, eta);
            acc = acc + mesh.weight(geom.r) * geom.det_j;
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct StudyRecord<T> {
    pub parameter: T,
    pub velocity_deviation: T,
    pub density_deviation: Option<T>,
    pub excluded: bool,
    pub note: String,
}

#[derive(Debug, Clone, Copy)]
pub struct SlopeFit<T> {
    pub slope: T,
    pub half_width: T,
    pub r_squared: T,
}

#[derive(Debug, Clone)]
pub struct StudyReport<T> {
    pub scenario: String,
    pub records: Vec<StudyRecord<T>>,
    pub velocity_slope: Option<SlopeFit<T>>,
    pub density_slope: Option<SlopeFit<T>>,
    pub expected_slope: Option<T>,
    pub tolerance: T,
    pub passed: bool,
}

/// Incompressible-limit sweep: solves the compressible problem for each
/// `epsilon`, measures the windowed maximum deviation of velocity from the
/// incompressible solution and of density from 1, and fits the log-log
/// slope in `epsilon` (the expected slope is 2).
pub fn low_mach_study<T: Scalar>(
    scenario: &Scenario<T>,
    eps_list: &[T],
    window: (T, T),
    tolerance: T,
    workers: usize,
) -> Result<StudyReport<T>> {
    let mut distinct = eps_list.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup_by(|a, b| a == b);
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "incompressible-limit sweep needs at least 3 distinct epsilon values, got {}",
            distinct.len()
        )));
    }
    check_window(&scenario.mesh, window)?;

    let base = solve_incompressible(&scenario.mesh, &scenario.force, scenario.m0, &scenario.config)?;
    let runs = parallel_map(eps_list.to_vec(), workers, |eps| -> Result<_> {
        let gas = scenario.gas.with_epsilon(eps)?;
        match solve_compressible(
            &scenario.mesh,
            &gas,
            &scenario.force,
            scenario.m0,
            &base,
            &scenario.config,
        ) {
            Ok(state) => Ok((eps, Some(state), String::new())),
            Err(Error::Subsonicity { cells }) => Ok((
                eps,
                None,
                format!("choked: truncation active on {cells} cells"),
            )),
            Err(Error::Choked { m0, limit }) => {
                Ok((eps, None, format!("choked: m0 {m0:e} above limit {limit:e}")))
            }
            Err(Error::Cavitation { argument }) => Ok((
                eps,
                None,
                format!("choked: cavitation (enthalpy argument {argument:e})"),
            )),
            Err(other) => Err(other),
        }
    });

    let mut records = Vec::new();
    for run in runs {
        let (eps, state, note) = run?;
        match state {
            Some(state) => {
                let (_, dvel) =
                    window_deviation(&state, &Reference::State(&base), window.0, window.1)?;
                let mut drho = T::zero();
                for jc in 0..scenario.mesh.n_z {
                    let zc = scenario.mesh.column_center_z(jc);
                    if zc < window.0 || zc >= window.1 {
                        continue;
                    }
                    for ic in 0..scenario.mesh.n_s {
                        let cell = scenario.mesh.cell_id(ic, jc);
                        drho = drho.max((state.density[cell] - T::one()).abs());
                    }
                }
                records.push(StudyRecord {
                    parameter: eps,
                    velocity_deviation: dvel,
                    density_deviation: Some(drho),
                    excluded: false,
                    note: String::new(),
                });
            }
            None => records.push(StudyRecord {
                parameter: eps,
                velocity_deviation: T::nan(),
                density_deviation: None,
                excluded: true,
                note,
            }),
        }
    }

    let included: Vec<&StudyRecord<T>> = records.iter().filter(|r| !r.excluded).collect();
    if included.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} epsilon values produced accepted subsonic runs",
            included.len()
        )));
    }
    let xs: Vec<T> = included.iter().map(|r| r.parameter.ln()).collect();
    let yv: Vec<T> = included
        .iter()
        .map(|r| r.velocity_deviation.ln())
        .collect();
    let yr: Vec<T> = included
        .iter()
        .map(|r| r.density_deviation.unwrap().ln())
        .collect();
    let (sv, _, r2v, hwv) = line_fit(&xs, &yv)?;
    let (sr, _, r2r, hwr) = line_fit(&xs, &yr)?;
    let expected = lit::<T>(2.0);
    let passed = (sv - expected).abs() <= tolerance && (sr - expected).abs() <= tolerance;
    Ok(StudyReport {
        scenario: "low-mach sweep".to_string(),
        records,
        velocity_slope: Some(SlopeFit {
            slope: sv,
            half_width: hwv,
            r_squared: r2v,
        }),
        density_slope: Some(SlopeFit {
            slope: sr,
            half_width: hwr,
            r_squared: r2r,
        }),
        expected_slope: Some(expected),
        tolerance,
        passed,
    })
}

/// Domain-truncation stability: re-solves the scenario on lengthened
/// domains and measures the interior disagreement with the longest run.
/// The deviations must decrease strictly in L; an exponential fit in L is
/// reported for reference.
pub fn truncation_study<T: Scalar>(
    scenario: &Scenario<T>,
    l_list: &[T],
    window: (T, T),
    workers: usize,
) -> Result<StudyReport<T>> {
    if l_list.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "truncation study needs at least 3 lengths, got {}",
            l_list.len()
        )));
    }
    for pair in l_list.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::Usage("lengths must be strictly increasing".to_string()));
        }
    }
    let l_min = l_list[0];
    let quarter = l_min / lit::<T>(4.0);
    if window.0 < -quarter || window.1 > quarter {
        return Err(Error::Usage(format!(
            "interior window [{}, {}] must stay within a quarter of the shortest domain (|z| <= {quarter})",
            window.0, window.1
        )));
    }

    let profile = scenario.mesh.profile.clone();
    let n_s = scenario.mesh.n_s;
    let dz = scenario.mesh.dz;
    let symmetry = scenario.mesh.symmetry;
    let states = parallel_map(l_list.to_vec(), workers, |l| -> Result<FlowState<T>> {
        let mesh = Arc::new(crate::geometry::build_mesh(&profile, l, n_s, dz, symmetry)?);
        let base = solve_incompressible(&mesh, &scenario.force, scenario.m0, &scenario.config)?;
        if scenario.gas.is_incompressible() {
            Ok(base)
        } else {
            solve_compressible(
                &mesh,
                &scenario.gas,
                &scenario.force,
                scenario.m0,
                &base,
                &scenario.config,
            )
        }
    });
    let mut solved = Vec::new();
    for s in states {
        solved.push(s?);
    }
    let longest = solved.last().unwrap();

    let mut records = Vec::new();
    let mut floor = T::zero();
    for state in &solved[..solved.len() - 1] {
        let (_, dev) = window_deviation(state, &Reference::State(longest), window.0, window.1)?;
        floor = floor.max(state.diagnostics.velocity_floor);
        records.push(StudyRecord {
            parameter: state.mesh.half_length,
            velocity_deviation: dev,
            density_deviation: None,
            excluded: false,
            note: String::new(),
        });
    }

    let mut decreasing = true;
    for pair in records.windows(2) {
        if !(pair[1].velocity_deviation < pair[0].velocity_deviation) {
            decreasing = false;
        }
    }
    let above_floor = records
        .iter()
        .all(|r| r.velocity_deviation > floor * lit::<T>(10.0));
    // exponential fit in L, reported for reference
    let xs: Vec<T> = records.iter().map(|r| r.parameter).collect();
    let ys: Vec<T> = records
        .iter()
        .map(|r| r.velocity_deviation.max(lit::<T>(1e-300)).ln())
        .collect();
    let slope = if records.len() >= 2 {
        line_fit(&xs, &ys).ok().map(|(s, _, r2, hw)| SlopeFit {
            slope: -s,
            half_width: hw,
            r_squared: r2,
        })
    } else {
        None
    };
    Ok(StudyReport {
        scenario: "truncation stability".to_string(),
        records,
        velocity_slope: slope,
        density_slope: None,
        expected_slope: None,
        tolerance: T::zero(),
        passed: decreasing && above_floor,
    })
}

/// Initial iterate for the uniqueness probe.
#[derive(Debug, Clone, Copy)]
pub enum ProbeInit<T> {
    /// The incompressible solution (the default initialization).
    Incompressible,
    /// The constant axial flow at the section-mean speed.
    UniformFlow,
    /// The incompressible solution with its potential scaled.
    ScaledPotential(T),
}

/// Runs the compressible solve from two initializations and returns the
/// maximum velocity disagreement over the whole mesh.
pub fn uniqueness_probe<T: Scalar>(
    scenario: &Scenario<T>,
    init_a: ProbeInit<T>,
    init_b: ProbeInit<T>,
) -> Result<T> {
    let build_init = |init: ProbeInit<T>| -> Result<FlowState<T>> {
        let incompressible =
            solve_incompressible(&scenario.mesh, &scenario.force, scenario.m0, &scenario.config)?;
        match init {
            ProbeInit::Incompressible => Ok(incompressible),
            ProbeInit::UniformFlow => {
                let area = scenario.mesh.section_area(scenario.mesh.half_length)?;
                uniform_state(
                    &scenario.mesh,
                    &scenario.gas.with_epsilon(T::zero())?,
                    &scenario.force,
                    scenario.m0 / area,
                    scenario.m0,
                    &scenario.config,
                )
            }
            ProbeInit::ScaledPotential(factor) => {
                let psi: Vec<T> = incompressible
                    .potential
                    .iter()
                    .map(|&p| (p - incompressible.inlet_datum) * factor)
                    .collect();
                state_from_potential(
                    &scenario.mesh,
                    &scenario.gas.with_epsilon(T::zero())?,
                    &scenario.force,
                    scenario.m0,
                    psi,
                    &scenario.config,
                )
            }
        }
    };
    let a = build_init(init_a)?;
    let b = build_init(init_b)?;
    let solve = |init: &FlowState<T>| {
        solve_compressible(
            &scenario.mesh,
            &scenario.gas,
            &scenario.force,
            scenario.m0,
            init,
            &scenario.config,
        )
    };
    let state_a = solve(&a)?;
    let state_b = solve(&b)?;
    let mut worst = T::zero();
    for cell in 0..scenario.mesh.cell_count() {
        worst = worst.max(norm2(
            state_a.u_r[cell] - state_b.u_r[cell],
            state_a.u_z[cell] - state_b.u_z[cell],
        ));
    }
    Ok(worst)
}

/// Per-cell pressure and the maximum Bernoulli residual.
///
/// Compressible states return the scaled pressure and the (definitionally
/// tiny) residual of the Bernoulli relation. Incompressible states return
/// `p = phi_f - |u|^2/2 + C`, gauged so the weighted average over the
/// inlet cell column vanishes.
pub fn bernoulli_and_pressure<T: Scalar>(state: &FlowState<T>) -> Result<(Vec<T>, T)> {
    if !state.gas.is_incompressible() {
        return Ok((state.pressure.clone(), state.max_bernoulli_residual()?));
    }
    let mesh = &state.mesh;
    let mut raw = Vec::with_capacity(mesh.cell_count());
    for cell in 0..mesh.cell_count() {
        let (r, z) = state.cell_center(cell);
        let phi_f = state.force.eval(r, z)?;
        let g = state.u_r[cell] * state.u_r[cell] + state.u_z[cell] * state.u_z[cell];
        raw.push(phi_f - g / lit::<T>(2.0));
    }
    // inlet gauge: weighted average over the first cell column
    let mut num = T::zero();
    let mut den = T::zero();
    for ic in 0..mesh.n_s {
        let vol = cell_weighted_volume(mesh, ic, 0);
        num = num + raw[mesh.cell_id(ic, 0)] * vol;
        den = den + vol;
    }
    let gauge = num / den;
    let pressure: Vec<T> = raw.iter().map(|&p| p - gauge).collect();
    // the residual of p + |u|^2/2 - phi_f + gauge is zero by construction
    Ok((pressure, T::zero()))
}

/// Indexed parallel map over owned items with a bounded worker count;
/// results are assembled in input order regardless of scheduling.
pub(crate) fn parallel_map<I: Send, O: Send>(
    items: Vec<I>,
    workers: usize,
    f: impl Fn(I) -> O + Sync,
) -> Vec<O> {
    let n = items.len();
    let workers = workers.max(1).min(n.max(1));
    if workers <= 1 || n <= 1 {
        return items.into_iter().map(f).collect();
    }
    let slots: Vec<Mutex<Option<I>>> = items.into_iter().map(|i| Mutex::new(Some(i))).collect();
    let results: Vec<Mutex<Option<O>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= n {
                    break;
                }
                let item = slots[k].lock().unwrap().take().unwrap();
                let out = f(item);
                *results[k].lock().unwrap() = Some(out);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().unwrap())
        .collect()
}

fn check_window<T: Scalar>(mesh: &MeridianMesh<T>, window: (T, T)) -> Result<()> {
    if !(window.0 < window.1) {
        return Err(Error::Usage(format!(
            "window [{}, {}] is empty",
            window.0, window.1
        )));
    }
    if window.0 < -mesh.half_length || window.1 > mesh.half_length {
        return Err(Error::Usage(format!(
            "window [{}, {}] leaves the domain",
            window.0, window.1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, build_profile, Obstacle, ProfileKind, Symmetry};

    fn bump_scenario(eps: f64) -> Scenario<f64> {
        let p = build_profile(
            ProfileKind::Cylinder,
            Some(Obstacle {
                height: 0.3,
                l1: -1.0,
                l2: 1.0,
            }),
            2.0,
        )
        .unwrap();
        Scenario {
            mesh: Arc::new(build_mesh(&p, 8.0, 8, 0.5, Symmetry::Axisymmetric).unwrap()),
            gas: GasModel::new(1.4, eps, 0.9, 0.5).unwrap(),
            force: Arc::new(ForceField::zero()),
            m0: std::f64::consts::PI,
            config: SolverConfig::default(),
        }
    }

    #[test]
    fn fit_recovers_exact_models() {
        let ts: [f64; 6] = [4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let exp_samples: Vec<(f64, f64)> =
            ts.iter().map(|&t| (t, (-0.5 * t).exp())).collect();
        let (rate, prefactor, r2) = fit_rate(&exp_samples, RateModel::Exponential).unwrap();
        assert!((rate - 0.5).abs() < 1e-9, "rate {rate}");
        assert!((prefactor - 1.0).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-12);

        let alg_samples: Vec<(f64, f64)> = ts.iter().map(|&t| (t, t.powf(-2.0))).collect();
        let (rate, prefactor, r2) = fit_rate(&alg_samples, RateModel::Algebraic).unwrap();
        assert!((rate - 2.0).abs() < 1e-9, "exponent {rate}");
        assert!((prefactor - 1.0).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_requires_enough_data() {
        let short = [(4.0, 0.1), (5.0, 0.05)];
        assert!(matches!(
            fit_rate(&short, RateModel::Exponential),
            Err(Error::InsufficientData(_))
        ));
        let flat = [(4.0, 0.1), (4.0, 0.05), (4.0, 0.01)];
        assert!(matches!(
            fit_rate(&flat, RateModel::Exponential),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn mass_flux_examples() {
        let scenario = bump_scenario(0.0);
        let state = solve_incompressible(
            &scenario.mesh,
            &scenario.force,
            scenario.m0,
            &scenario.config,
        )
        .unwrap();
        // ten interior stations agree with the outlet to 1e-6 relative
        let outlet = state.achieved_flux;
        for k in 0..10 {
            let t = -7.0 + 1.5 * k as f64;
            let f = mass_flux(&state, t).unwrap();
            assert!(((f - outlet) / outlet).abs() < 1e-6);
        }
        // the outlet station reproduces the achieved flux bitwise
        let at_outlet = mass_flux(&state, state.mesh.half_length).unwrap();
        assert_eq!(at_outlet, outlet);
        assert!(mass_flux(&state, 9.0).is_err());
    }

    #[test]
    fn far_field_rate_guards() {
        let scenario = bump_scenario(0.0);
        let state = solve_incompressible(
            &scenario.mesh,
            &scenario.force,
            scenario.m0,
            &scenario.config,
        )
        .unwrap();
        // too few windows
        assert!(matches!(
            far_field_rate(&state, &Reference::Constant(1.0), &[4.0, 5.0], RateModel::Exponential),
            Err(Error::InsufficientData(_))
        ));
        // window before the onset
        assert!(far_field_rate(
            &state,
            &Reference::Constant(1.0),
            &[1.5, 4.0, 5.0],
            RateModel::Exponential
        )
        .is_err());
        // window past the outlet
        assert!(far_field_rate(
            &state,
            &Reference::Constant(1.0),
            &[4.0, 5.0, 7.5],
            RateModel::Exponential
        )
        .is_err());
    }

    #[test]
    fn floor_suppression_flags_windows() {
        // uniform cylinder flow deviates from the reference only at the
        // solver floor; every window is suppressed and the fit refuses
        let p = build_profile(ProfileKind::Cylinder, None, 0.0).unwrap();
        let mesh = Arc::new(build_mesh(&p, 10.0, 6, 0.5, Symmetry::Axisymmetric).unwrap());
        let force = Arc::new(ForceField::zero());
        let state =
            solve_incompressible(&mesh, &force, std::f64::consts::PI, &SolverConfig::default())
                .unwrap();
        let err = far_field_rate(
            &state,
            &Reference::Constant(1.0),
            &[2.0, 3.0, 4.0, 5.0],
            RateModel::Exponential,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::InsufficientData(_)),
            "unexpected: {err}"
        );
    }

    #[test]
    fn duplicate_epsilons_are_rejected() {
        let scenario = bump_scenario(0.1);
        let err = low_mach_study(&scenario, &[0.1, 0.1, 0.1], (-2.0, 2.0), 0.2, 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn truncation_window_guard() {
        let scenario = bump_scenario(0.1);
        // window touches the quarter-domain bound for L_min = 10
        let err = truncation_study(&scenario, &[10.0, 20.0, 40.0], (-2.0, 9.0), 1).unwrap_err();
        assert!(matches!(err, Error::Usage(_)), "unexpected {err}");
    }

    #[test]
    fn truncation_on_exact_cylinder_sits_at_the_floor() {
        // the uniform solution is exact at every length, so the interior
        // differences are pure solver noise
        let p = build_profile(ProfileKind::Cylinder, None, 2.0).unwrap();
        let scenario = Scenario {
            mesh: Arc::new(build_mesh(&p, 10.0, 6, 0.5, Symmetry::Axisymmetric).unwrap()),
            gas: GasModel::new(1.4, 0.1, 0.9, 0.5).unwrap(),
            force: Arc::new(ForceField::zero()),
            m0: std::f64::consts::PI,
            config: SolverConfig::default(),
        };
        let report = truncation_study(&scenario, &[10.0, 20.0, 40.0], (-2.0, 2.0), 1).unwrap();
        for r in &report.records {
            assert!(
                r.velocity_deviation < 1e-9,
                "L={}: deviation {} above solver tolerance",
                r.parameter,
                r.velocity_deviation
            );
        }
    }

    #[test]
    fn identical_probe_inits_agree_bitwise() {
        let scenario = bump_scenario(0.1);
        let d = uniqueness_probe(
            &scenario,
            ProbeInit::Incompressible,
            ProbeInit::Incompressible,
        )
        .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn distinct_probe_inits_converge_together() {
        let scenario = bump_scenario(0.1);
        let d = uniqueness_probe(&scenario, ProbeInit::Incompressible, ProbeInit::UniformFlow)
            .unwrap();
        assert!(d < 1e-7, "probe deviation {d}");
        let d = uniqueness_probe(
            &scenario,
            ProbeInit::Incompressible,
            ProbeInit::ScaledPotential(1.5),
        )
        .unwrap();
        assert!(d < 1e-7, "probe deviation {d}");
    }

    #[test]
    fn pressure_gauge_and_wall_extremum() {
        // uniform flow: pressure identically zero in the inlet gauge
        let p = build_profile(ProfileKind::Cylinder, None, 0.0).unwrap();
        let mesh = Arc::new(build_mesh(&p, 8.0, 6, 0.5, Symmetry::Axisymmetric).unwrap());
        let force = Arc::new(ForceField::zero());
        let state =
            solve_incompressible(&mesh, &force, std::f64::consts::PI, &SolverConfig::default())
                .unwrap();
        let (pressure, residual) = bernoulli_and_pressure(&state).unwrap();
        assert_eq!(residual, 0.0);
        for p in &pressure {
            assert!(p.abs() < 1e-9, "pressure {p}");
        }

        // bump flow: along the outer wall the pressure minimum sits at the
        // speed maximum
        let scenario = bump_scenario(0.0);
        let state = solve_incompressible(
            &scenario.mesh,
            &scenario.force,
            scenario.m0,
            &scenario.config,
        )
        .unwrap();
        let (pressure, _) = bernoulli_and_pressure(&state).unwrap();
        let mesh = &scenario.mesh;
        let wall = mesh.n_s - 1;
        let mut max_speed = (0usize, 0.0f64);
        let mut min_pressure = (0usize, f64::INFINITY);
        for jc in 0..mesh.n_z {
            let cell = mesh.cell_id(wall, jc);
            let speed = state.u_r[cell].hypot(state.u_z[cell]);
            if speed > max_speed.1 {
                max_speed = (jc, speed);
            }
            if pressure[cell] < min_pressure.1 {
                min_pressure = (jc, pressure[cell]);
            }
        }
        assert_eq!(max_speed.0, min_pressure.0);
    }

    #[test]
    fn compressible_pressure_residual_is_tiny() {
        let scenario = bump_scenario(0.1);
        let base = solve_incompressible(
            &scenario.mesh,
            &scenario.force,
            scenario.m0,
            &scenario.config,
        )
        .unwrap();
        let state = solve_compressible(
            &scenario.mesh,
            &scenario.gas,
            &scenario.force,
            scenario.m0,
            &base,
            &scenario.config,
        )
        .unwrap();
        let (_, residual) = bernoulli_and_pressure(&state).unwrap();
        assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn parallel_map_preserves_order() {
        let out = parallel_map((0..100).collect::<Vec<_>>(), 7, |x| x * x);
        for (k, v) in out.iter().enumerate() {
            assert_eq!(*v, k * k);
        }
    }
}
