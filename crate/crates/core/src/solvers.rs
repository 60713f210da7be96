//! Finite-element solution of the truncated nozzle problems: the
//! incompressible potential flow, the compressible flow with the subsonic
//! coefficient truncation, and the uniform background states on the
//! reference cylinder.
//!
//! The discretization is bilinear quadrilaterals with 2x2 Gauss quadrature
//! and the symmetry weight in every integrand. The potential is fixed to
//! the inlet datum on the whole inlet section (which removes the additive
//! gauge); walls are natural; the outlet carries the velocity datum
//! `m0 / |Sigma_L|` whose natural term is weighted by the coefficient of
//! the current linearization. The compressible nonlinearity is resolved by
//! damped Picard iteration (coefficient freezing), starting from the
//! incompressible solution.

use crate::error::{Error, Result};
use crate::fem::{ElementGeometry, ReducedSystem, GAUSS_2};
use crate::force::ForceField;
use crate::gas::GasModel;
use crate::geometry::MeridianMesh;
use crate::{lit, norm2, Scalar};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Relative residual target of the inner conjugate-gradient solve.
    pub linear_tol: T,
    /// Relative update norm at which the Picard iteration stops.
    pub picard_tol: T,
    pub max_picard: usize,
    pub max_linear: usize,
    /// Relaxation factor in (0, 1]; halved on energy increase.
    pub damping: T,
    /// Dirichlet value of the potential on the inlet section.
    pub inlet_datum: T,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            linear_tol: lit::<T>(1e-12),
            picard_tol: lit::<T>(1e-11),
            max_picard: 80,
            max_linear: 200_000,
            damping: T::one(),
            inlet_datum: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolverDiagnostics<T> {
    pub linear_iterations: Vec<usize>,
    pub picard_updates: Vec<T>,
    /// Energy relative to the initial iterate, recorded per accepted step.
    pub energy_history: Vec<T>,
    /// Estimated noise level of the computed velocity field.
    pub velocity_floor: T,
    pub truncated_cells: usize,
    pub max_mach: T,
}

/// A converged flow field on a meridian mesh.
///
/// `potential` is nodal (inlet datum included); velocity, density, Mach and
/// pressure are cell-centered. Density is evaluated from the Bernoulli
/// closure at the cell state, so the Bernoulli residual is zero by
/// construction up to rounding.
#[derive(Debug, Clone)]
pub struct FlowState<T> {
    pub mesh: Arc<MeridianMesh<T>>,
    pub gas: GasModel<T>,
    pub force: Arc<ForceField<T>>,
    pub potential: Vec<T>,
    pub u_r: Vec<T>,
    pub u_z: Vec<T>,
    pub density: Vec<T>,
    pub mach: Vec<T>,
    pub pressure: Vec<T>,
    /// Requested mass flux `m0`.
    pub mass_flux_target: T,
    /// Discrete flux actually carried through the outlet column.
    pub achieved_flux: T,
    pub inlet_datum: T,
    pub diagnostics: SolverDiagnostics<T>,
}

impl<T: Scalar> FlowState<T> {
    /// Homogeneous part of the potential (datum removed), used to seed
    /// further solves.
    pub(crate) fn homogeneous_potential(&self) -> Vec<T> {
        let d = self.inlet_datum;
        self.potential.iter().map(|&p| p - d).collect()
    }

    /// Column-averaged mass flux through cell column `jc`, evaluated with
    /// the same quadrature as the assembly.
    pub fn flux_at_column(&self, jc: usize) -> Result<T> {
        let mesh = &self.mesh;
        let psi = self.homogeneous_potential();
        let gp = lit::<T>(GAUSS_2);
        let mut acc = T::zero();
        for ic in 0..mesh.n_s {
            let nodes = mesh.cell_nodes(ic, jc);
            let vals = [psi[nodes[0]], psi[nodes[1]], psi[nodes[2]], psi[nodes[3]]];
            for &xi in &[-gp, gp] {
                for &eta in &[-gp, gp] {
                    let geom = ElementGeometry::at(mesh, ic, jc, xi, eta);
                    let (gr, gz) = geom.gradient(vals);
                    let phi_f = self.force.eval(geom.r, geom.z)?;
                    let rho = self
                        .gas
                        .density_from_bernoulli(gr * gr + gz * gz, phi_f)?
                        .rho;
                    acc = acc + rho * gz * mesh.weight(geom.r) * geom.det_j;
                }
            }
        }
        let dz_col = mesh.node_z(jc + 1) - mesh.node_z(jc);
        Ok(acc * mesh.measure_factor() / dz_col)
    }

    /// Maximum over cells of the pointwise Bernoulli residual
    /// `| |u|^2/2 + h(rho) - h(1) - phi_f |`.
    pub fn max_bernoulli_residual(&self) -> Result<T> {
        let mut worst = T::zero();
        for (cell, (&ur, &uz)) in self.u_r.iter().zip(&self.u_z).enumerate() {
            let (r, z) = self.cell_center(cell);
            let phi_f = self.force.eval(r, z)?;
            let g = ur * ur + uz * uz;
            let h = self.gas.scaled_enthalpy_diff(self.density[cell])?;
            worst = worst.max((g / lit::<T>(2.0) + h - phi_f).abs());
        }
        Ok(worst)
    }

    pub fn cell_center(&self, cell: usize) -> (T, T) {
        let ic = cell % self.mesh.n_s;
        let jc = cell / self.mesh.n_s;
        let geom = ElementGeometry::at(&self.mesh, ic, jc, T::zero(), T::zero());
        (geom.r, geom.z)
    }

    pub fn max_speed(&self) -> T {
        self.u_r
            .iter()
            .zip(&self.u_z)
            .fold(T::zero(), |m, (&ur, &uz)| m.max(norm2(ur, uz)))
    }

    /// Guard used when two states must live on the same grid.
    pub fn check_same_mesh(&self, other: &FlowState<T>) -> Result<()> {
        if self.mesh.n_s != other.mesh.n_s
            || self.mesh.n_z != other.mesh.n_z
            || (self.mesh.half_length - other.mesh.half_length).abs() > lit::<T>(1e-12)
        {
            return Err(Error::Usage(
                "states live on different meshes".to_string(),
            ));
        }
        Ok(())
    }
}

/// Assembles the weighted diffusion system
/// `int coeff grad(u) . grad(v) w  =  int source v w + outlet term`
/// into `system`. The coefficient closure receives the element geometry at
/// the quadrature point and the gradient of `prev` there; the outlet
/// natural term is `coeff * outlet_value(r)` integrated over the outlet
/// edge with the same coefficient closure.
fn assemble_system<T: Scalar>(
    mesh: &MeridianMesh<T>,
    system: &mut ReducedSystem<T>,
    prev: &[T],
    coeff: &mut dyn FnMut(&ElementGeometry<T>, (T, T)) -> Result<T>,
    source: Option<&dyn Fn(T, T) -> T>,
    outlet_value: &dyn Fn(T) -> T,
) -> Result<()> {
    system.reset();
    let gp = lit::<T>(GAUSS_2);
    for jc in 0..mesh.n_z {
        for ic in 0..mesh.n_s {
            let nodes = mesh.cell_nodes(ic, jc);
            let vals = [prev[nodes[0]], prev[nodes[1]], prev[nodes[2]], prev[nodes[3]]];
            let mut local = [[T::zero(); 4]; 4];
            let mut local_rhs = [T::zero(); 4];
            for &xi in &[-gp, gp] {
                for &eta in &[-gp, gp] {
                    let geom = ElementGeometry::at(mesh, ic, jc, xi, eta);
                    let grad_prev = geom.gradient(vals);
                    let c = coeff(&geom, grad_prev)?;
                    let scale = c * mesh.weight(geom.r) * geom.det_j;
                    for a in 0..4 {
                        for b in 0..4 {
                            local[a][b] = local[a][b]
                                + scale
                                    * (geom.dn_dr[a] * geom.dn_dr[b]
                                        + geom.dn_dz[a] * geom.dn_dz[b]);
                        }
                    }
                    if let Some(f) = source {
                        let fv = f(geom.r, geom.z) * mesh.weight(geom.r) * geom.det_j;
                        for a in 0..4 {
                            local_rhs[a] = local_rhs[a] + fv * geom.shape[a];
                        }
                    }
                }
            }
            system.add_element(nodes, local);
            for a in 0..4 {
                if local_rhs[a] != T::zero() {
                    system.add_rhs(nodes[a], local_rhs[a]);
                }
            }
        }
    }

    // outlet natural term on the eta = +1 edges of the last column
    let jc = mesh.n_z - 1;
    for ic in 0..mesh.n_s {
        let nodes = mesh.cell_nodes(ic, jc);
        let vals = [prev[nodes[0]], prev[nodes[1]], prev[nodes[2]], prev[nodes[3]]];
        let r_in = mesh.node_r(ic, mesh.n_z);
        let r_out = mesh.node_r(ic + 1, mesh.n_z);
        let half_len = (r_out - r_in) / lit::<T>(2.0);
        for &xi in &[-gp, gp] {
            let geom = ElementGeometry::at(mesh, ic, jc, xi, T::one());
            let grad_prev = geom.gradient(vals);
            let c = coeff(&geom, grad_prev)?;
            let load = c * outlet_value(geom.r) * mesh.weight(geom.r) * half_len;
            // on the eta = +1 edge only the two upper corners carry shape
            system.add_rhs(nodes[3], load * geom.shape[3]);
            system.add_rhs(nodes[2], load * geom.shape[2]);
        }
    }
    Ok(())
}

/// Builds the full flow state from a homogeneous nodal potential.
fn build_state<T: Scalar>(
    mesh: &Arc<MeridianMesh<T>>,
    gas: GasModel<T>,
    force: &Arc<ForceField<T>>,
    m0: T,
    psi: Vec<T>,
    inlet_datum: T,
    mut diagnostics: SolverDiagnostics<T>,
) -> Result<FlowState<T>> {
    let n_cells = mesh.cell_count();
    let mut u_r = Vec::with_capacity(n_cells);
    let mut u_z = Vec::with_capacity(n_cells);
    let mut density = Vec::with_capacity(n_cells);
    let mut mach = Vec::with_capacity(n_cells);
    let mut pressure = Vec::with_capacity(n_cells);
    let mut truncated_cells = 0usize;
    let mut max_mach = T::zero();

    for jc in 0..mesh.n_z {
        for ic in 0..mesh.n_s {
            let nodes = mesh.cell_nodes(ic, jc);
            let vals = [psi[nodes[0]], psi[nodes[1]], psi[nodes[2]], psi[nodes[3]]];
            let geom = ElementGeometry::at(mesh, ic, jc, T::zero(), T::zero());
            let (gr, gz) = geom.gradient(vals);
            let phi_f = force.eval(geom.r, geom.z)?;
            let g = gr * gr + gz * gz;
            let eval = gas.density_from_bernoulli(g, phi_f)?;
            let m = gas.mach(g.sqrt(), eval.rho)?;
            let p = if gas.is_incompressible() {
                phi_f - g / lit::<T>(2.0)
            } else {
                gas.scaled_pressure(eval.rho)?
            };
            if !gas.is_incompressible() {
                let threshold = gas.truncation_threshold(gas.theta, phi_f)?;
                if g.sqrt() > threshold {
                    truncated_cells += 1;
                }
            }
            max_mach = max_mach.max(m);
            u_r.push(gr);
            u_z.push(gz);
            density.push(eval.rho);
            mach.push(m);
            pressure.push(p);
        }
    }
    diagnostics.truncated_cells = truncated_cells;
    diagnostics.max_mach = max_mach;

    let potential = psi.iter().map(|&v| v + inlet_datum).collect();
    let mut state = FlowState {
        mesh: Arc::clone(mesh),
        gas,
        force: Arc::clone(force),
        potential,
        u_r,
        u_z,
        density,
        mach,
        pressure,
        mass_flux_target: m0,
        achieved_flux: T::zero(),
        inlet_datum,
        diagnostics,
    };
    state.achieved_flux = state.flux_at_column(mesh.n_z - 1)?;
    Ok(state)
}

/// Solves the incompressible truncated problem: the weighted Laplace
/// equation with inlet Dirichlet datum, natural slip walls and the uniform
/// outlet velocity `m0 / |Sigma_L|`. The external force does not enter the
/// equation; it is carried into the state for pressure evaluation.
pub fn solve_incompressible<T: Scalar>(
    mesh: &Arc<MeridianMesh<T>>,
    force: &Arc<ForceField<T>>,
    m0: T,
    config: &SolverConfig<T>,
) -> Result<FlowState<T>> {
    if !(m0 > T::zero()) {
        return Err(Error::domain(format!("mass flux must be positive, got {m0}")));
    }
    let gas = GasModel::new(lit::<T>(1.4), T::zero(), lit::<T>(0.9), lit::<T>(0.5))?;
    let area = mesh.section_area(mesh.half_length)?;
    let datum = m0 / area;
    let mut system = ReducedSystem::new(mesh);
    let zero = vec![T::zero(); mesh.node_count()];
    assemble_system(
        mesh,
        &mut system,
        &zero,
        &mut |_, _| Ok(T::one()),
        None,
        &|_| datum,
    )?;
    let (psi, stats) = system.solve(None, config.linear_tol, config.max_linear)?;
    let mut diagnostics = SolverDiagnostics::default();
    diagnostics.linear_iterations.push(stats.iterations);
    let state = build_state(mesh, gas, force, m0, psi, config.inlet_datum, diagnostics)?;
    let floor = config.linear_tol * state.max_speed().max(T::one());
    let mut state = state;
    state.diagnostics.velocity_floor = floor;
    Ok(state)
}

/// Damped Picard (coefficient-freezing) solution of the compressible
/// truncated problem, started from `init` (normally the incompressible
/// solution, which realizes the expansion of the potential around it).
///
/// Each step solves the linear problem with the truncated density frozen at
/// the previous iterate, then relaxes toward the solution; a step that
/// raises the energy functional halves the relaxation and retries. At
/// convergence the truncation must be inactive on every cell, otherwise the
/// run is rejected as supersonic-contaminated.
pub fn solve_compressible<T: Scalar>(
    mesh: &Arc<MeridianMesh<T>>,
    gas: &GasModel<T>,
    force: &Arc<ForceField<T>>,
    m0: T,
    init: &FlowState<T>,
    config: &SolverConfig<T>,
) -> Result<FlowState<T>> {
    if !(m0 > T::zero()) {
        return Err(Error::domain(format!("mass flux must be positive, got {m0}")));
    }
    if init.mesh.n_s != mesh.n_s || init.mesh.n_z != mesh.n_z {
        return Err(Error::Usage(
            "initial state lives on a different mesh".to_string(),
        ));
    }
    let plateau = gas.truncation_plateau(force.bounds.potential)?;
    let area = mesh.section_area(mesh.half_length)?;
    let datum = m0 / area;

    let base = init.homogeneous_potential();
    let mut psi = base.clone();
    let mut system = ReducedSystem::new(mesh);
    let mut diagnostics = SolverDiagnostics::default();
    let mut energy_prev = T::infinity();
    let mut converged = false;

    for _iter in 0..config.max_picard {
        assemble_system(
            mesh,
            &mut system,
            &psi,
            &mut |geom, grad| {
                let phi_f = force.eval(geom.r, geom.z)?;
                let g = grad.0 * grad.0 + grad.1 * grad.1;
                Ok(gas.truncated_density(g, phi_f, plateau)?.rho)
            },
            None,
            &|_| datum,
        )?;
        let (solution, stats) = system.solve(Some(&psi), config.linear_tol, config.max_linear)?;
        diagnostics.linear_iterations.push(stats.iterations);

        // relaxation with energy control; once steps are modest the frozen
        // coefficients change by O(eps^2 * step) and the iteration is
        // contractive on its own, while the monitored energy can wiggle at
        // the scale of the outlet-coefficient lag, so the check only
        // polices the genuinely nonlinear regime
        let step_size = diff_l2(&solution, &psi) / l2(&solution).max(lit::<T>(1e-300));
        let guard_active = step_size > lit::<T>(1e-2);
        let mut omega = config.damping;
        let mut candidate;
        let mut energy;
        let mut attempts = 0usize;
        loop {
            candidate = psi
                .iter()
                .zip(&solution)
                .map(|(&old, &new)| old + omega * (new - old))
                .collect::<Vec<T>>();
            energy = relative_energy(mesh, gas, force, plateau, &candidate, &base)?;
            let slack = lit::<T>(1e-11) * (T::one() + energy_prev.abs());
            if !guard_active || energy <= energy_prev + slack || attempts >= 6 {
                break;
            }
            omega = omega / lit::<T>(2.0);
            attempts += 1;
        }
        energy_prev = energy;
        diagnostics.energy_history.push(energy);

        let norm_new = l2(&candidate).max(lit::<T>(1e-300));
        let update = diff_l2(&candidate, &psi) / norm_new;
        diagnostics.picard_updates.push(update);
        psi = candidate;
        if update < config.picard_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let history = diagnostics
            .picard_updates
            .iter()
            .map(|u| u.to_f64().unwrap_or(f64::NAN))
            .collect();
        return Err(Error::Convergence {
            stage: "picard iteration",
            detail: format!(
                "no convergence to {tol:e} within {max} iterations",
                tol = config.picard_tol,
                max = config.max_picard
            ),
            history,
        });
    }

    let state = build_state(
        mesh,
        *gas,
        force,
        m0,
        psi,
        config.inlet_datum,
        diagnostics,
    )?;
    let mut state = state;
    state.diagnostics.velocity_floor =
        config.picard_tol.max(config.linear_tol) * state.max_speed().max(T::one());
    if state.diagnostics.truncated_cells > 0 {
        return Err(Error::Subsonicity {
            cells: state.diagnostics.truncated_cells,
        });
    }
    Ok(state)
}

/// Energy of `psi` relative to `base`:
/// `eps^{-4} int [ G(|grad psi|^2) - G(|grad base|^2)
///                 - grad base . (grad psi - grad base) ] w`
/// (unscaled when `eps = 0`, where the bracket is `|grad(psi-base)|^2/2`).
fn relative_energy<T: Scalar>(
    mesh: &MeridianMesh<T>,
    gas: &GasModel<T>,
    force: &ForceField<T>,
    plateau: T,
    psi: &[T],
    base: &[T],
) -> Result<T> {
    let gp = lit::<T>(GAUSS_2);
    let mut acc = T::zero();
    for jc in 0..mesh.n_z {
        for ic in 0..mesh.n_s {
            let nodes = mesh.cell_nodes(ic, jc);
            let vals = [psi[nodes[0]], psi[nodes[1]], psi[nodes[2]], psi[nodes[3]]];
            let bvals = [base[nodes[0]], base[nodes[1]], base[nodes[2]], base[nodes[3]]];
            for &xi in &[-gp, gp] {
                for &eta in &[-gp, gp] {
                    let geom = ElementGeometry::at(mesh, ic, jc, xi, eta);
                    let (gr, gz) = geom.gradient(vals);
                    let (br, bz) = geom.gradient(bvals);
                    let phi_f = force.eval(geom.r, geom.z)?;
                    let g_new = gr * gr + gz * gz;
                    let g_base = br * br + bz * bz;
                    let bracket = gas.kinetic_potential(g_new, phi_f, plateau)?
                        - gas.kinetic_potential(g_base, phi_f, plateau)?
                        - (br * (gr - br) + bz * (gz - bz));
                    acc = acc + bracket * mesh.weight(geom.r) * geom.det_j;
                }
            }
        }
    }
    let eps = gas.epsilon;
    let scale = if gas.is_incompressible() {
        T::one()
    } else {
        (eps * eps * eps * eps).recip()
    };
    Ok(acc * mesh.measure_factor() * scale)
}

/// Energy of a state relative to a base state on the same mesh (see
/// [`relative_energy`]); zero when the states coincide, convex in the
/// gradient, so it is minimized at the converged solution.
pub fn discrete_energy<T: Scalar>(state: &FlowState<T>, base: &FlowState<T>) -> Result<T> {
    state.check_same_mesh(base)?;
    let plateau = state
        .gas
        .truncation_plateau(state.force.bounds.potential)?;
    relative_energy(
        &state.mesh,
        &state.gas,
        &state.force,
        plateau,
        &state.homogeneous_potential(),
        &base.homogeneous_potential(),
    )
}

/// Uniform background state on the reference cylinder: the speed `q_bar`
/// at which the section-integrated Bernoulli density carries exactly the
/// requested flux.
#[derive(Debug, Clone)]
pub struct UniformCylinderState<T> {
    pub q_bar: T,
    pub gas: GasModel<T>,
    pub force_amplitude_potential: ForceField<T>,
    pub m0: T,
    pub symmetry: crate::geometry::Symmetry,
}

impl<T: Scalar> UniformCylinderState<T> {
    pub fn density_at(&self, r: T) -> Result<T> {
        let phi = self.force_amplitude_potential.eval(r, T::zero())?;
        Ok(self
            .gas
            .density_from_bernoulli(self.q_bar * self.q_bar, phi)?
            .rho)
    }
}

/// Weighted radial integral over the unit section by 32-point composite
/// Gauss-Legendre.
fn section_integral<T: Scalar>(
    symmetry: crate::geometry::Symmetry,
    mut f: impl FnMut(T) -> Result<T>,
) -> Result<T> {
    const NODES: [f64; 8] = [
        0.09501250983763744,
        0.2816035507792589,
        0.45801677765722737,
        0.6178762444026438,
        0.755404408355003,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const WEIGHTS: [f64; 8] = [
        0.189450610455069,
        0.182603415044924,
        0.169156519395003,
        0.149595988816577,
        0.124628971255534,
        0.095158511682493,
        0.062253523938648,
        0.027152459411754,
    ];
    let mut acc = T::zero();
    for half in 0..2 {
        let a = lit::<T>(0.5 * half as f64);
        let b = a + lit::<T>(0.5);
        let mid = (a + b) / lit::<T>(2.0);
        let scale = (b - a) / lit::<T>(2.0);
        for k in 0..8 {
            let dx = lit::<T>(NODES[k]) * scale;
            let w = lit::<T>(WEIGHTS[k]) * scale;
            for &r in &[mid + dx, mid - dx] {
                acc = acc + w * f(r)? * symmetry.weight(r);
            }
        }
    }
    Ok(acc * symmetry.measure_factor::<T>())
}

/// Solves `flux(q_bar) = m0` on the subsonic branch for a z-independent
/// force; errors with the flux ceiling when the request is choked.
pub fn uniform_cylinder_state<T: Scalar>(
    gas: &GasModel<T>,
    radial_force: &ForceField<T>,
    m0: T,
    symmetry: crate::geometry::Symmetry,
) -> Result<UniformCylinderState<T>> {
    if !radial_force.is_radial() {
        return Err(Error::Usage(
            "uniform cylinder state needs a z-independent force".to_string(),
        ));
    }
    if !(m0 > T::zero()) {
        return Err(Error::domain(format!("mass flux must be positive, got {m0}")));
    }
    let phi_at = |r: T| radial_force.eval(r, T::zero());
    let area = section_integral(symmetry, |_| Ok(T::one()))?;

    if gas.is_incompressible() {
        return Ok(UniformCylinderState {
            q_bar: m0 / area,
            gas: *gas,
            force_amplitude_potential: radial_force.clone(),
            m0,
            symmetry,
        });
    }

    let flux = |q: T| -> Result<T> {
        section_integral(symmetry, |r| {
            Ok(gas.density_from_bernoulli(q * q, phi_at(r)?)?.rho * q)
        })
    };
    let flux_slope = |q: T| -> Result<T> {
        section_integral(symmetry, |r| {
            let d = gas.density_from_bernoulli(q * q, phi_at(r)?)?;
            Ok(d.momentum_coefficient(q * q))
        })
    };

    // subsonic ceiling: the smallest critical speed over the section
    let mut q_cap = T::infinity();
    let samples = 64;
    for k in 0..=samples {
        let r = lit::<T>(k as f64 / samples as f64);
        q_cap = q_cap.min(gas.critical_speed(T::one(), phi_at(r)?)?);
    }
    let q_max = q_cap * (T::one() - lit::<T>(1e-12));
    let limit = flux(q_max)?;
    if m0 >= limit {
        return Err(Error::Choked {
            m0: m0.to_f64().unwrap_or(f64::NAN),
            limit: limit.to_f64().unwrap_or(f64::NAN),
        });
    }

    // safeguarded Newton on the monotone subsonic branch
    let mut lo = T::zero();
    let mut hi = q_max;
    let mut q = m0 / area;
    for _ in 0..200 {
        let f = flux(q)? - m0;
        if f > T::zero() {
            hi = q;
        } else {
            lo = q;
        }
        let step = f / flux_slope(q)?;
        let mut next = q - step;
        if !(next > lo && next < hi) {
            next = (lo + hi) / lit::<T>(2.0);
        }
        let done = (next - q).abs() <= lit::<T>(1e-15) * q.max(T::one());
        q = next;
        if done {
            break;
        }
    }
    let residual = (flux(q)? - m0).abs();
    if residual > lit::<T>(1e-12) * m0 {
        return Err(Error::Convergence {
            stage: "uniform state solve",
            detail: format!("flux residual {residual:e} above 1e-12 * m0"),
            history: vec![residual.to_f64().unwrap_or(f64::NAN)],
        });
    }
    Ok(UniformCylinderState {
        q_bar: q,
        gas: *gas,
        force_amplitude_potential: radial_force.clone(),
        m0,
        symmetry,
    })
}

/// Builds a full state from a homogeneous nodal potential (derived fields
/// evaluated cell by cell). The potential is checked for length only; the
/// cell states must stay out of cavitation.
pub fn state_from_potential<T: Scalar>(
    mesh: &Arc<MeridianMesh<T>>,
    gas: &GasModel<T>,
    force: &Arc<ForceField<T>>,
    m0: T,
    psi: Vec<T>,
    config: &SolverConfig<T>,
) -> Result<FlowState<T>> {
    if psi.len() != mesh.node_count() {
        return Err(Error::Usage(format!(
            "potential has {} values, mesh has {} nodes",
            psi.len(),
            mesh.node_count()
        )));
    }
    build_state(
        mesh,
        *gas,
        force,
        m0,
        psi,
        config.inlet_datum,
        SolverDiagnostics::default(),
    )
}

/// Builds the constant-velocity state `u = (0, q)` on a mesh (exact on the
/// cylinder; elsewhere it is just a well-defined comparison field).
pub fn uniform_state<T: Scalar>(
    mesh: &Arc<MeridianMesh<T>>,
    gas: &GasModel<T>,
    force: &Arc<ForceField<T>>,
    q: T,
    m0: T,
    config: &SolverConfig<T>,
) -> Result<FlowState<T>> {
    let psi: Vec<T> = (0..mesh.node_count())
        .map(|node| {
            let j = node / (mesh.n_s + 1);
            q * (mesh.node_z(j) + mesh.half_length)
        })
        .collect();
    build_state(
        mesh,
        *gas,
        force,
        m0,
        psi,
        config.inlet_datum,
        SolverDiagnostics::default(),
    )
}

/// Reference solve on the perfect cylinder with the same resolution,
/// length and symmetry as `like`: the downstream benchmark the nozzle
/// solutions are compared against.
pub fn solve_cylinder_reference<T: Scalar>(
    gas: &GasModel<T>,
    force: &Arc<ForceField<T>>,
    m0: T,
    like: &MeridianMesh<T>,
    config: &SolverConfig<T>,
) -> Result<FlowState<T>> {
    let profile = crate::geometry::build_profile(
        crate::geometry::ProfileKind::Cylinder,
        None,
        T::zero(),
    )?;
    let mesh = Arc::new(crate::geometry::build_mesh(
        &profile,
        like.half_length,
        like.n_s,
        like.dz,
        like.symmetry,
    )?);
    let incompressible = solve_incompressible(&mesh, force, m0, config)?;
    if gas.is_incompressible() {
        return Ok(incompressible);
    }
    solve_compressible(&mesh, gas, force, m0, &incompressible, config)
}

/// Verification entry point: solves
/// `-div(coefficient w grad u) = w source` with homogeneous inlet Dirichlet
/// data, natural walls and the outlet velocity datum `outlet_velocity(r)`,
/// returning the nodal solution and cell-centered gradient. Used by the
/// manufactured-solution convergence checks.
pub fn solve_linear_problem<T: Scalar>(
    mesh: &Arc<MeridianMesh<T>>,
    coefficient: impl Fn(T, T) -> T,
    source: impl Fn(T, T) -> T,
    outlet_velocity: impl Fn(T) -> T,
    config: &SolverConfig<T>,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let mut system = ReducedSystem::new(mesh);
    let zero = vec![T::zero(); mesh.node_count()];
    assemble_system(
        mesh,
        &mut system,
        &zero,
        &mut |geom, _| Ok(coefficient(geom.r, geom.z)),
        Some(&source),
        &outlet_velocity,
    )?;
    let (psi, _) = system.solve(None, config.linear_tol, config.max_linear)?;
    let mut u_r = Vec::with_capacity(mesh.cell_count());
    let mut u_z = Vec::with_capacity(mesh.cell_count());
    for jc in 0..mesh.n_z {
        for ic in 0..mesh.n_s {
            let nodes = mesh.cell_nodes(ic, jc);
            let vals = [psi[nodes[0]], psi[nodes[1]], psi[nodes[2]], psi[nodes[3]]];
            let geom = ElementGeometry::at(mesh, ic, jc, T::zero(), T::zero());
            let (gr, gz) = geom.gradient(vals);
            u_r.push(gr);
            u_z.push(gz);
        }
    }
    Ok((psi, u_r, u_z))
}

fn l2<T: Scalar>(v: &[T]) -> T {
    let mut acc = T::zero();
    for &x in v {
        acc = acc + x * x;
    }
    acc.sqrt()
}

fn diff_l2<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for k in 0..a.len() {
        let d = a[k] - b[k];
        acc = acc + d * d;
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, build_profile, Obstacle, ProfileKind, Symmetry};

    fn cylinder_mesh(l: f64, n_s: usize, h_z: f64) -> Arc<MeridianMesh<f64>> {
        let p = build_profile(ProfileKind::Cylinder, None, 0.0).unwrap();
        Arc::new(build_mesh(&p, l, n_s, h_z, Symmetry::Axisymmetric).unwrap())
    }

    fn bump_mesh(l: f64, n_s: usize, h_z: f64) -> Arc<MeridianMesh<f64>> {
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
        Arc::new(build_mesh(&p, l, n_s, h_z, Symmetry::Axisymmetric).unwrap())
    }

    fn zero_force() -> Arc<ForceField<f64>> {
        Arc::new(ForceField::zero())
    }

    #[test]
    fn incompressible_cylinder_is_uniform() {
        let mesh = cylinder_mesh(10.0, 8, 0.5);
        let state = solve_incompressible(
            &mesh,
            &zero_force(),
            std::f64::consts::PI,
            &SolverConfig::default(),
        )
        .unwrap();
        for cell in 0..mesh.cell_count() {
            assert!(state.u_r[cell].abs() < 1e-10, "u_r = {}", state.u_r[cell]);
            assert!(
                (state.u_z[cell] - 1.0).abs() < 1e-10,
                "u_z = {}",
                state.u_z[cell]
            );
        }
        // station fluxes are exactly the target
        for jc in [0, 5, 10, 19] {
            let f = state.flux_at_column(jc).unwrap();
            assert!((f - std::f64::consts::PI).abs() < 1e-12, "flux {f}");
        }
    }

    #[test]
    fn incompressible_bump_conserves_flux() {
        let mesh = bump_mesh(10.0, 12, 0.25);
        let m0 = std::f64::consts::PI;
        let state =
            solve_incompressible(&mesh, &zero_force(), m0, &SolverConfig::default()).unwrap();
        let reference = state.achieved_flux;
        for k in 0..10 {
            let t = -9.0 + 2.0 * k as f64;
            let jc = mesh.nearest_column(t).unwrap();
            let f = state.flux_at_column(jc).unwrap();
            assert!(
                ((f - reference) / reference).abs() < 1e-8,
                "station {t}: flux {f} vs {reference}"
            );
        }
        // the obstacle accelerates the flow at the throat
        let jc = mesh.nearest_column(0.0).unwrap();
        let ic_top = mesh.n_s - 1;
        let cell = mesh.cell_id(ic_top, jc);
        assert!(state.u_z[cell] > 1.05);
    }

    #[test]
    fn compressible_cylinder_matches_uniform_oracle() {
        let mesh = cylinder_mesh(10.0, 8, 0.5);
        let gas = GasModel::new(1.4, 0.1, 0.9, 0.5).unwrap();
        let m0 = std::f64::consts::PI;
        let config = SolverConfig::default();
        let incompressible =
            solve_incompressible(&mesh, &zero_force(), m0, &config).unwrap();
        let state =
            solve_compressible(&mesh, &gas, &zero_force(), m0, &incompressible, &config).unwrap();

        // the outlet datum prescribes the velocity, so the uniform state
        // carries the achieved flux, not m0
        let oracle =
            uniform_cylinder_state(&gas, &ForceField::zero(), state.achieved_flux, Symmetry::Axisymmetric)
                .unwrap();
        for cell in 0..mesh.cell_count() {
            assert!(state.u_r[cell].abs() < 1e-8);
            assert!(
                (state.u_z[cell] - oracle.q_bar).abs() < 1e-8,
                "u_z {} vs q_bar {}",
                state.u_z[cell],
                oracle.q_bar
            );
        }
        // density of the uniform state at m_h equals rho(q0^2) with q0 = 1
        let rho_expected = gas.density_from_bernoulli(1.0, 0.0).unwrap().rho;
        for cell in 0..mesh.cell_count() {
            assert!((state.density[cell] - rho_expected).abs() < 1e-8);
        }
        assert!((state.achieved_flux - m0 * rho_expected).abs() < 1e-6);
        assert_eq!(state.diagnostics.truncated_cells, 0);
        assert!(state.diagnostics.max_mach < 0.1);
        assert!(state.max_bernoulli_residual().unwrap() < 1e-10);
    }

    #[test]
    fn zero_epsilon_reduces_to_incompressible() {
        let mesh = bump_mesh(8.0, 8, 0.5);
        let gas = GasModel::new(1.4, 0.0, 0.9, 0.5).unwrap();
        let m0 = std::f64::consts::PI;
        let config = SolverConfig::default();
        let incompressible =
            solve_incompressible(&mesh, &zero_force(), m0, &config).unwrap();
        let state =
            solve_compressible(&mesh, &gas, &zero_force(), m0, &incompressible, &config).unwrap();
        for cell in 0..mesh.cell_count() {
            assert!((state.u_z[cell] - incompressible.u_z[cell]).abs() < 1e-10);
            assert!((state.u_r[cell] - incompressible.u_r[cell]).abs() < 1e-10);
            assert_eq!(state.density[cell], 1.0);
        }
    }

    #[test]
    fn quadratic_low_mach_deviation() {
        // || u^eps - u_bar || scales like eps^2: ratio at eps vs eps/2 is ~4
        let mesh = bump_mesh(8.0, 8, 0.5);
        let m0 = std::f64::consts::PI;
        let config = SolverConfig::default();
        let force = zero_force();
        let incompressible = solve_incompressible(&mesh, &force, m0, &config).unwrap();
        let mut deviations = Vec::new();
        for eps in [0.1, 0.05] {
            let gas = GasModel::new(1.4, eps, 0.9, 0.5).unwrap();
            let state =
                solve_compressible(&mesh, &gas, &force, m0, &incompressible, &config).unwrap();
            let mut dev: f64 = 0.0;
            for cell in 0..mesh.cell_count() {
                let dr = state.u_r[cell] - incompressible.u_r[cell];
                let dz = state.u_z[cell] - incompressible.u_z[cell];
                dev = dev.max(dr.hypot(dz));
            }
            deviations.push(dev);
        }
        let ratio = deviations[0] / deviations[1];
        assert!(
            (ratio - 4.0).abs() < 1.0,
            "deviation ratio {ratio}, expected ~4"
        );
    }

    #[test]
    fn energy_is_zero_at_base_and_decreases() {
        let mesh = bump_mesh(8.0, 8, 0.5);
        let gas = GasModel::new(1.4, 0.1, 0.9, 0.5).unwrap();
        let m0 = std::f64::consts::PI;
        let config = SolverConfig::default();
        let force = zero_force();
        let incompressible = solve_incompressible(&mesh, &force, m0, &config).unwrap();
        let state =
            solve_compressible(&mesh, &gas, &force, m0, &incompressible, &config).unwrap();

        assert_eq!(discrete_energy(&state, &state).unwrap(), 0.0);

        // energy history non-increasing after the first accepted step
        let hist = &state.diagnostics.energy_history;
        assert!(hist.len() >= 2);
        for k in 1..hist.len() {
            // terminal wiggles at the scale of the outlet-coefficient lag
            // are tolerated; the decrease itself is orders larger
            let slack = 1e-8 * (1.0 + hist[k - 1].abs());
            assert!(
                hist[k] <= hist[k - 1] + slack,
                "energy rose at step {k}: {} -> {}",
                hist[k - 1],
                hist[k]
            );
        }
        // the converged state has lower energy than the base
        let j = discrete_energy(&state, &incompressible).unwrap();
        assert!(j < 0.0, "J = {j}");
    }

    #[test]
    fn cylinder_energy_matches_scalar_oracle() {
        let mesh = cylinder_mesh(6.0, 6, 0.5);
        let gas = GasModel::new(1.4, 0.1, 0.9, 0.5).unwrap();
        let m0 = std::f64::consts::PI;
        let config = SolverConfig::default();
        let force = zero_force();
        let incompressible = solve_incompressible(&mesh, &force, m0, &config).unwrap();
        let state =
            solve_compressible(&mesh, &gas, &force, m0, &incompressible, &config).unwrap();

        // both states are uniform, so the energy reduces to a scalar
        // bracket times the weighted volume; integrate the density
        // antiderivative by trapezoid as an independent route
        let q_new = state.u_z[0];
        let q_base = incompressible.u_z[0];
        let kinetic = |g: f64| {
            let n = 40_000;
            let h = g / n as f64;
            let mut sum = 0.0;
            for k in 0..=n {
                let a = k as f64 * h;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                sum += w * gas.density_from_bernoulli(a, 0.0).unwrap().rho;
            }
            0.5 * sum * h
        };
        let bracket =
            kinetic(q_new * q_new) - kinetic(q_base * q_base) - q_base * (q_new - q_base);
        let volume = std::f64::consts::PI * 12.0; // pi r^2 * 2L
        let expected = bracket * volume / gas.epsilon.powi(4);
        let j = discrete_energy(&state, &incompressible).unwrap();
        assert!(
            (j - expected).abs() <= 1e-8 * expected.abs().max(1.0),
            "J = {j}, oracle {expected}"
        );
    }

    #[test]
    fn uniform_cylinder_state_oracle_values() {
        // nearly incompressible: q_bar -> m0 / pi
        let gas = GasModel::new(1.4, 1e-8, 0.9, 0.5).unwrap();
        let u = uniform_cylinder_state(
            &gas,
            &ForceField::zero(),
            std::f64::consts::PI,
            Symmetry::Axisymmetric,
        )
        .unwrap();
        assert!((u.q_bar - 1.0).abs() < 1e-6);

        // eps = 0.1: bisection oracle on rho(q^2) q = 1
        let gas = GasModel::new(1.4, 0.1, 0.9, 0.5).unwrap();
        let u = uniform_cylinder_state(
            &gas,
            &ForceField::zero(),
            std::f64::consts::PI,
            Symmetry::Axisymmetric,
        )
        .unwrap();
        let (mut lo, mut hi) = (0.5, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f = gas.density_from_bernoulli(mid * mid, 0.0).unwrap().rho * mid;
            if f < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!(
            (u.q_bar - oracle).abs() < 1e-10,
            "q_bar {} vs bisection {}",
            u.q_bar,
            oracle
        );
        assert!((u.q_bar - 1.003604).abs() < 1e-5);

        // a positive radial potential raises the density, so the same flux
        // needs less speed
        let forced = uniform_cylinder_state(
            &gas,
            &ForceField::radial_static(0.1),
            std::f64::consts::PI,
            Symmetry::Axisymmetric,
        )
        .unwrap();
        assert!(forced.q_bar < u.q_bar);

        // choking
        let err = uniform_cylinder_state(
            &gas,
            &ForceField::zero(),
            40.0,
            Symmetry::Axisymmetric,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Choked { .. }), "{err}");
    }

    #[test]
    fn cylinder_reference_matches_uniform_state() {
        let mesh = cylinder_mesh(8.0, 8, 0.5);
        let gas = GasModel::new(1.4, 0.1, 0.9, 0.5).unwrap();
        let m0 = std::f64::consts::PI;
        let config = SolverConfig::default();
        let force: Arc<ForceField<f64>> = Arc::new(ForceField::radial_static(0.1));
        let state = solve_cylinder_reference(&gas, &force, m0, &mesh, &config).unwrap();
        let oracle =
            uniform_cylinder_state(&gas, &force, state.achieved_flux, Symmetry::Axisymmetric)
                .unwrap();
        for cell in 0..mesh.cell_count() {
            assert!(state.u_r[cell].abs() < 1e-8);
            assert!((state.u_z[cell] - oracle.q_bar).abs() < 1e-8);
        }

        // zero force at epsilon = 0: the reference is the uniform flow
        let gas0 = GasModel::new(1.4, 0.0, 0.9, 0.5).unwrap();
        let state0 =
            solve_cylinder_reference(&gas0, &zero_force(), m0, &mesh, &config).unwrap();
        for cell in 0..mesh.cell_count() {
            assert!((state0.u_z[cell] - 1.0).abs() < 1e-10);
        }

        // z-decaying force: flux still constant across sections
        let decaying: Arc<ForceField<f64>> =
            Arc::new(ForceField::decaying_perturbation(0.1, 0.3, 1.5, 2.0).unwrap());
        let state = solve_cylinder_reference(&gas, &decaying, m0, &mesh, &config).unwrap();
        let reference = state.achieved_flux;
        for k in 0..8 {
            let jc = mesh.nearest_column(-7.0 + 2.0 * k as f64).unwrap();
            let f = state.flux_at_column(jc).unwrap();
            assert!(
                ((f - reference) / reference).abs() < 1e-8,
                "column {jc}: flux {f} vs {reference}, rel {}",
                ((f - reference) / reference).abs()
            );
        }
        // and the field is genuinely nonuniform
        let mut spread: f64 = 0.0;
        for cell in 0..mesh.cell_count() {
            spread = spread.max((state.u_z[cell] - state.u_z[0]).abs());
        }
        assert!(spread > 1e-5);
    }

    #[test]
    fn gauge_shift_leaves_velocity_bitwise_unchanged() {
        let mesh = bump_mesh(8.0, 8, 0.5);
        let m0 = std::f64::consts::PI;
        let mut config = SolverConfig::default();
        let a = solve_incompressible(&mesh, &zero_force(), m0, &config).unwrap();
        config.inlet_datum = 3.5;
        let b = solve_incompressible(&mesh, &zero_force(), m0, &config).unwrap();
        assert_eq!(a.u_r, b.u_r);
        assert_eq!(a.u_z, b.u_z);
        for node in 0..mesh.node_count() {
            assert!((b.potential[node] - a.potential[node] - 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn mirror_symmetric_scenario_gives_symmetric_velocity() {
        let mesh = bump_mesh(10.0, 8, 0.5);
        let m0 = std::f64::consts::PI;
        let state =
            solve_incompressible(&mesh, &zero_force(), m0, &SolverConfig::default()).unwrap();
        let n_z = mesh.n_z;
        for jc in 0..n_z / 2 {
            let jm = n_z - 1 - jc;
            for ic in 0..mesh.n_s {
                let a = mesh.cell_id(ic, jc);
                let b = mesh.cell_id(ic, jm);
                assert!(
                    (state.u_z[a] - state.u_z[b]).abs() < 1e-8,
                    "u_z asymmetry at column {jc}"
                );
                assert!(
                    (state.u_r[a] + state.u_r[b]).abs() < 1e-8,
                    "u_r asymmetry at column {jc}"
                );
            }
        }
    }

    #[test]
    fn picard_iterations_shrink_with_epsilon() {
        let mesh = bump_mesh(8.0, 8, 0.5);
        let m0 = std::f64::consts::PI;
        let mut config = SolverConfig::default();
        config.picard_tol = 1e-10;
        let force = zero_force();
        let incompressible = solve_incompressible(&mesh, &force, m0, &config).unwrap();
        let mut iterations = Vec::new();
        for eps in [0.2, 0.1, 0.05] {
            let gas = GasModel::new(1.4, eps, 0.9, 0.5).unwrap();
            let state =
                solve_compressible(&mesh, &gas, &force, m0, &incompressible, &config).unwrap();
            iterations.push(state.diagnostics.picard_updates.len());
        }
        assert!(
            iterations[0] >= iterations[1] && iterations[1] >= iterations[2],
            "iterations {iterations:?}"
        );
    }

    #[test]
    fn truncation_active_is_rejected() {
        // a hard pinch at eps near eps0 pushes the throat past the
        // truncation threshold
        let p = build_profile(
            ProfileKind::Cylinder,
            Some(Obstacle {
                height: 0.75,
                l1: -1.0,
                l2: 1.0,
            }),
            2.0,
        )
        .unwrap();
        let mesh = Arc::new(build_mesh(&p, 8.0, 10, 0.25, Symmetry::Axisymmetric).unwrap());
        let gas = GasModel::new(1.4, 0.45, 0.5, 0.5).unwrap();
        let m0 = std::f64::consts::PI;
        let config = SolverConfig::default();
        let force = zero_force();
        let incompressible = solve_incompressible(&mesh, &force, m0, &config).unwrap();
        let err = solve_compressible(&mesh, &gas, &force, m0, &incompressible, &config).unwrap_err();
        assert!(
            matches!(err, Error::Subsonicity { .. }) || matches!(err, Error::Cavitation { .. }),
            "unexpected error {err}"
        );
    }

    #[test]
    fn picard_cap_reports_history() {
        let mesh = bump_mesh(8.0, 8, 0.5);
        let gas = GasModel::new(1.4, 0.2, 0.9, 0.5).unwrap();
        let m0 = std::f64::consts::PI;
        let mut config = SolverConfig::default();
        config.max_picard = 1;
        let force = zero_force();
        let incompressible = solve_incompressible(&mesh, &force, m0, &config).unwrap();
        let err = solve_compressible(&mesh, &gas, &force, m0, &incompressible, &config).unwrap_err();
        match err {
            Error::Convergence { history, .. } => assert_eq!(history.len(), 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn solver_stack_works_in_single_precision() {
        let p = build_profile::<f32>(ProfileKind::Cylinder, None, 0.0).unwrap();
        let mesh = Arc::new(build_mesh(&p, 6.0, 4, 0.5, Symmetry::Axisymmetric).unwrap());
        let force = Arc::new(ForceField::<f32>::zero());
        let mut config = SolverConfig::<f32>::default();
        config.linear_tol = 1e-6;
        config.picard_tol = 1e-5;
        let state =
            solve_incompressible(&mesh, &force, std::f32::consts::PI, &config).unwrap();
        for cell in 0..mesh.cell_count() {
            assert!((state.u_z[cell] - 1.0).abs() < 1e-4);
        }
        let gas = GasModel::<f32>::new(1.4, 0.1, 0.9, 0.5).unwrap();
        let comp = solve_compressible(&mesh, &gas, &force, std::f32::consts::PI, &state, &config)
            .unwrap();
        assert!(comp.diagnostics.max_mach < 0.2);
    }

    #[test]
    fn planar_cylinder_uniform_flow() {
        let p = build_profile(ProfileKind::Cylinder, None, 0.0).unwrap();
        let mesh = Arc::new(build_mesh(&p, 8.0, 6, 0.5, Symmetry::Planar).unwrap());
        let state =
            solve_incompressible(&mesh, &zero_force(), 1.0, &SolverConfig::default()).unwrap();
        for cell in 0..mesh.cell_count() {
            assert!((state.u_z[cell] - 1.0).abs() < 1e-10);
        }
        assert!((state.achieved_flux - 1.0).abs() < 1e-12);

        // compressible planar run stays uniform at the outlet datum
        let gas = GasModel::new(1.4, 0.1, 0.9, 0.5).unwrap();
        let comp =
            solve_compressible(&mesh, &gas, &zero_force(), 1.0, &state, &SolverConfig::default())
                .unwrap();
        let oracle =
            uniform_cylinder_state(&gas, &ForceField::zero(), comp.achieved_flux, Symmetry::Planar)
                .unwrap();
        for cell in 0..mesh.cell_count() {
            assert!((comp.u_z[cell] - oracle.q_bar).abs() < 1e-8);
        }
    }
}
