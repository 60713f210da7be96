//! Conservative external force potentials with the regularity and decay
//! classes the far-field analysis relies on.
//!
//! Forces are defined through their potentials, so conservativity is
//! structural. The built-in radial shape is `g(r) = r^2` capped C^2 to a
//! constant beyond the reference radius, which keeps the declared bounds
//! independent of the wall position.

use crate::error::{Error, Result};
use crate::geometry::{algebraic_tail, MeridianMesh};
use crate::{lit, Scalar};
use std::sync::Arc;

/// Potential values tabulated on the structured grid of a meridian mesh;
/// evaluation interpolates bilinearly in the (transverse parameter, axial
/// fraction) coordinates of the grid.
#[derive(Debug, Clone)]
pub struct TabulatedPotential<T> {
    pub n_s: usize,
    pub n_z: usize,
    pub stations: Vec<T>,
    /// Inner and outer radius per station.
    pub inner: Vec<T>,
    pub outer: Vec<T>,
    /// Node values, station-major like the mesh.
    pub values: Vec<T>,
}

#[derive(Debug, Clone)]
pub enum ForceKind<T> {
    Zero,
    /// `phi = amplitude g(r)`, independent of z.
    RadialStatic { amplitude: T },
    /// `phi = base g(r) + amplitude g(r) tail(z - k)` where the tail is 1
    /// upstream of `k` and decays like `(1 + z - k)^{-b1}` beyond `k + 1`.
    DecayingPerturbation { base: T, amplitude: T, b1: T, k: T },
    Tabulated(Arc<TabulatedPotential<T>>),
}

/// Declared bounds: the supremum of `|phi|` and of `|grad phi|` over the
/// nozzle (conservative estimates, reported at construction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceBounds<T> {
    pub potential: T,
    pub gradient: T,
}

#[derive(Debug, Clone)]
pub struct ForceField<T> {
    pub kind: ForceKind<T>,
    pub bounds: ForceBounds<T>,
}

/// Radial shape `g(r) = r^2` for `r <= 1`, blended C^2 to the constant 2.5
/// over `[1, 2]`, constant beyond; returns value and derivative.
fn radial_shape<T: Scalar>(r: T) -> (T, T) {
    let one = T::one();
    let two = lit::<T>(2.0);
    if r <= one {
        return (r * r, two * r);
    }
    if r >= two {
        return (lit::<T>(2.5), T::zero());
    }
    // cubic Hermite in r on [1,2]: (1, slope 2) -> (2.5, slope 0); its
    // second derivative does not vanish at the ends, but the blend is only
    // entered when the wall bulges past the reference radius, where C^1 is
    // all the solver needs
    let t = r - one;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = two * t3 - lit::<T>(3.0) * t2 + one;
    let h10 = t3 - two * t2 + t;
    let h01 = -two * t3 + lit::<T>(3.0) * t2;
    let d00 = lit::<T>(6.0) * (t2 - t);
    let d10 = lit::<T>(3.0) * t2 - lit::<T>(4.0) * t + one;
    let d01 = -lit::<T>(6.0) * (t2 - t);
    let v = h00 + h10 * two + h01 * lit::<T>(2.5);
    let d = d00 + d10 * two + d01 * lit::<T>(2.5);
    (v, d)
}

const RADIAL_SHAPE_MAX: f64 = 2.5;
const RADIAL_SLOPE_MAX: f64 = 2.5; // max of g' over the blend

impl<T: Scalar> ForceField<T> {
    pub fn zero() -> Self {
        ForceField {
            kind: ForceKind::Zero,
            bounds: ForceBounds {
                potential: T::zero(),
                gradient: T::zero(),
            },
        }
    }

    pub fn radial_static(amplitude: T) -> Self {
        ForceField {
            kind: ForceKind::RadialStatic { amplitude },
            bounds: ForceBounds {
                potential: amplitude.abs() * lit::<T>(RADIAL_SHAPE_MAX),
                gradient: amplitude.abs() * lit::<T>(RADIAL_SLOPE_MAX),
            },
        }
    }

    pub fn decaying_perturbation(base: T, amplitude: T, b1: T, k: T) -> Result<Self> {
        if !(b1 > T::zero()) {
            return Err(Error::domain(format!(
                "force decay exponent must satisfy b1 > 0, got {b1}"
            )));
        }
        let scale = base.abs() + amplitude.abs();
        Ok(ForceField {
            kind: ForceKind::DecayingPerturbation {
                base,
                amplitude,
                b1,
                k,
            },
            bounds: ForceBounds {
                potential: scale * lit::<T>(RADIAL_SHAPE_MAX),
                // the z-derivative of the tail is bounded by ~1.6 b1 over
                // the onset blend
                gradient: scale
                    * lit::<T>(RADIAL_SLOPE_MAX)
                    * (T::one() + lit::<T>(1.6) * b1),
            },
        })
    }

    pub fn tabulated(mesh: &MeridianMesh<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::Usage(format!(
                "tabulated potential needs {} node values, got {}",
                mesh.node_count(),
                values.len()
            )));
        }
        let mut inner = Vec::with_capacity(mesh.n_z + 1);
        let mut outer = Vec::with_capacity(mesh.n_z + 1);
        for j in 0..=mesh.n_z {
            inner.push(mesh.node_r(0, j));
            outer.push(mesh.node_r(mesh.n_s, j));
        }
        let sup = values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()));
        // gradient bound from one-sided differences on the grid
        let mut grad = T::zero();
        for j in 0..=mesh.n_z {
            for i in 0..=mesh.n_s {
                let v = values[mesh.node_id(i, j)];
                if i + 1 <= mesh.n_s {
                    let dr = mesh.node_r(i + 1, j) - mesh.node_r(i, j);
                    grad = grad.max(((values[mesh.node_id(i + 1, j)] - v) / dr).abs());
                }
                if j + 1 <= mesh.n_z {
                    let dz = mesh.node_z(j + 1) - mesh.node_z(j);
                    grad = grad.max(((values[mesh.node_id(i, j + 1)] - v) / dz).abs());
                }
            }
        }
        Ok(ForceField {
            kind: ForceKind::Tabulated(Arc::new(TabulatedPotential {
                n_s: mesh.n_s,
                n_z: mesh.n_z,
                stations: mesh.stations.clone(),
                inner,
                outer,
                values,
            })),
            bounds: ForceBounds {
                potential: sup,
                gradient: grad,
            },
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ForceKind::Zero)
    }

    /// True when the potential does not depend on z.
    pub fn is_radial(&self) -> bool {
        match &self.kind {
            ForceKind::Zero | ForceKind::RadialStatic { .. } => true,
            ForceKind::DecayingPerturbation { amplitude, .. } => *amplitude == T::zero(),
            ForceKind::Tabulated(_) => false,
        }
    }

    /// The z-independent part the potential decays toward downstream.
    pub fn radial_part(&self) -> ForceField<T> {
        match &self.kind {
            ForceKind::Zero => ForceField::zero(),
            ForceKind::RadialStatic { amplitude } => ForceField::radial_static(*amplitude),
            ForceKind::DecayingPerturbation { base, .. } => ForceField::radial_static(*base),
            ForceKind::Tabulated(_) => ForceField::zero(),
        }
    }

    /// Station beyond which the potential has settled to its radial part
    /// (0 when it is radial everywhere).
    pub fn decay_onset(&self) -> T {
        match &self.kind {
            ForceKind::DecayingPerturbation { k, .. } => *k,
            _ => T::zero(),
        }
    }

    pub fn decay_exponent(&self) -> Option<T> {
        match &self.kind {
            ForceKind::DecayingPerturbation { b1, amplitude, .. }
                if *amplitude != T::zero() =>
            {
                Some(*b1)
            }
            _ => None,
        }
    }

    pub fn eval(&self, r: T, z: T) -> Result<T> {
        Ok(self.eval_grad(r, z)?.0)
    }

    pub fn grad(&self, r: T, z: T) -> Result<(T, T)> {
        let (_, gr, gz) = self.eval_grad(r, z)?;
        Ok((gr, gz))
    }

    /// Potential and gradient in one pass.
    pub fn eval_grad(&self, r: T, z: T) -> Result<(T, T, T)> {
        match &self.kind {
            ForceKind::Zero => Ok((T::zero(), T::zero(), T::zero())),
            ForceKind::RadialStatic { amplitude } => {
                let (g, dg) = radial_shape(r);
                Ok((*amplitude * g, *amplitude * dg, T::zero()))
            }
            ForceKind::DecayingPerturbation {
                base,
                amplitude,
                b1,
                k,
            } => {
                let (g, dg) = radial_shape(r);
                let (tail, dtail) = algebraic_tail(z - *k, *b1);
                let value = *base * g + *amplitude * g * tail;
                let d_r = *base * dg + *amplitude * dg * tail;
                let d_z = *amplitude * g * dtail;
                Ok((value, d_r, d_z))
            }
            ForceKind::Tabulated(table) => table.eval_grad(r, z),
        }
    }
}

impl<T: Scalar> TabulatedPotential<T> {
    fn eval_grad(&self, r: T, z: T) -> Result<(T, T, T)> {
        let n_z = self.n_z;
        let z0 = self.stations[0];
        let z1 = self.stations[n_z];
        if z < z0 || z > z1 {
            return Err(Error::Extrapolation(format!(
                "z = {z} outside the tabulated range [{z0}, {z1}]"
            )));
        }
        let dz = (z1 - z0) / lit::<T>(n_z as f64);
        let jf = ((z - z0) / dz).to_f64().unwrap();
        let jc = (jf.floor() as usize).min(n_z - 1);
        let zeta = (z - self.stations[jc]) / dz;

        let one = T::one();
        let inner = self.inner[jc] * (one - zeta) + self.inner[jc + 1] * zeta;
        let outer = self.outer[jc] * (one - zeta) + self.outer[jc + 1] * zeta;
        let span = outer - inner;
        let s = (r - inner) / span;
        let tol = lit::<T>(1e-12);
        if s < -tol || s > one + tol {
            return Err(Error::Extrapolation(format!(
                "r = {r} outside the tabulated section [{inner}, {outer}] at z = {z}"
            )));
        }
        let s = s.max(T::zero()).min(one);
        let sf = (s * lit::<T>(self.n_s as f64)).to_f64().unwrap();
        let ic = (sf.floor() as usize).min(self.n_s - 1);
        let s_lo = lit::<T>(ic as f64 / self.n_s as f64);
        let xi = (s - s_lo) * lit::<T>(self.n_s as f64);

        let stride = self.n_s + 1;
        let v00 = self.values[jc * stride + ic];
        let v10 = self.values[jc * stride + ic + 1];
        let v01 = self.values[(jc + 1) * stride + ic];
        let v11 = self.values[(jc + 1) * stride + ic + 1];

        let value = v00 * (one - xi) * (one - zeta)
            + v10 * xi * (one - zeta)
            + v01 * (one - xi) * zeta
            + v11 * xi * zeta;

        // chain rule through s(r, z) and zeta(z)
        let dv_dxi = (v10 - v00) * (one - zeta) + (v11 - v01) * zeta;
        let dv_dzeta = (v01 - v00) * (one - xi) + (v11 - v10) * xi;
        let ds_dr = span.recip();
        let d_inner = (self.inner[jc + 1] - self.inner[jc]) / dz;
        let d_outer = (self.outer[jc + 1] - self.outer[jc]) / dz;
        let ds_dz = (-(d_inner) - s * (d_outer - d_inner)) / span;
        let n_s_t = lit::<T>(self.n_s as f64);
        let d_r = dv_dxi * n_s_t * ds_dr;
        let d_z = dv_dxi * n_s_t * ds_dz + dv_dzeta / dz;
        Ok((value, d_r, d_z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, build_profile, ProfileKind, Symmetry};

    #[test]
    fn zero_field() {
        let f = ForceField::<f64>::zero();
        assert_eq!(f.eval(0.7, -3.0).unwrap(), 0.0);
        assert_eq!(f.grad(0.7, -3.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn radial_static_values() {
        let f = ForceField::<f64>::radial_static(0.1);
        assert!((f.eval(1.0, 5.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((f.eval(0.5, -2.0).unwrap() - 0.025).abs() < 1e-15);
        let (gr, gz) = f.grad(1.0, 0.0).unwrap();
        assert!((gr - 0.2).abs() < 1e-15);
        assert_eq!(gz, 0.0);
        assert!(f.is_radial());
    }

    #[test]
    fn decaying_perturbation_values() {
        // beyond the onset blend the tail formula is exact
        let f = ForceField::<f64>::decaying_perturbation(0.1, 0.05, 1.5, 5.0).unwrap();
        let z = 8.0; // z - k = 3 >= 1
        let g = 0.49; // r = 0.7
        let expected = 0.1 * g + 0.05 * g * 4.0_f64.powf(-1.5);
        assert!((f.eval(0.7, z).unwrap() - expected).abs() < 1e-15);
        assert!((0.05 * 4.0_f64.powf(-1.5) - 0.00625).abs() < 1e-15);
        assert!(!f.is_radial());
        // upstream of the onset the perturbation is fully on
        let up = f.eval(0.7, 0.0).unwrap();
        assert!((up - (0.1 + 0.05) * g).abs() < 1e-15);
    }

    #[test]
    fn decay_envelope_on_z_derivative() {
        let (b1, k) = (1.5, 5.0);
        let f = ForceField::<f64>::decaying_perturbation(0.1, 0.05, b1, k).unwrap();
        let c = 6.0;
        for step in 0..200 {
            let z = k + 1.0 + 0.1 * step as f64;
            let (_, gz) = f.grad(0.8, z).unwrap();
            assert!(
                gz.abs() <= c * z.powf(-b1 - 1.0),
                "gz = {gz} at z = {z}"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let fields: Vec<ForceField<f64>> = vec![
            ForceField::radial_static(0.1),
            ForceField::decaying_perturbation(0.1, 0.05, 1.5, 2.0).unwrap(),
        ];
        let h = 1e-6;
        for f in &fields {
            for &r in &[0.2, 0.55, 0.9, 1.3] {
                for &z in &[-4.0, 0.3, 2.4, 7.9] {
                    let (gr, gz) = f.grad(r, z).unwrap();
                    let fd_r = (f.eval(r + h, z).unwrap() - f.eval(r - h, z).unwrap()) / (2.0 * h);
                    let fd_z = (f.eval(r, z + h).unwrap() - f.eval(r, z - h).unwrap()) / (2.0 * h);
                    assert!((gr - fd_r).abs() < 1e-6 * gr.abs().max(1.0), "{gr} vs {fd_r}");
                    assert!((gz - fd_z).abs() < 1e-6 * gz.abs().max(1.0), "{gz} vs {fd_z}");
                }
            }
        }
    }

    #[test]
    fn bounds_hold_on_sampled_mesh() {
        let profile = build_profile(ProfileKind::Cylinder, None, 0.0).unwrap();
        let mesh = build_mesh(&profile, 10.0, 8, 0.5, Symmetry::Axisymmetric).unwrap();
        let f = ForceField::<f64>::decaying_perturbation(0.1, 0.05, 1.5, 2.0).unwrap();
        let mut sup_v: f64 = 0.0;
        let mut sup_g: f64 = 0.0;
        for j in 0..=mesh.n_z {
            for i in 0..=mesh.n_s {
                let (v, gr, gz) = f
                    .eval_grad(mesh.node_r(i, j), mesh.node_z(j))
                    .unwrap();
                sup_v = sup_v.max(v.abs());
                sup_g = sup_g.max(gr.hypot(gz));
            }
        }
        assert!(sup_v <= f.bounds.potential);
        assert!(sup_g <= f.bounds.gradient);
    }

    #[test]
    fn tabulated_interpolates_and_guards_range() {
        let profile = build_profile(ProfileKind::Cylinder, None, 0.0).unwrap();
        let mesh = build_mesh(&profile, 5.0, 8, 0.25, Symmetry::Axisymmetric).unwrap();
        // tabulate a smooth analytic field and compare off-node
        let analytic = |r: f64, z: f64| 0.3 * r * r + 0.1 * (0.4 * z).sin();
        let values: Vec<f64> = (0..=mesh.n_z)
            .flat_map(|j| {
                (0..=mesh.n_s)
                    .map(move |i| (i, j))
                    .collect::<Vec<_>>()
            })
            .map(|(i, j)| analytic(mesh.node_r(i, j), mesh.node_z(j)))
            .collect();
        let f = ForceField::tabulated(&mesh, values).unwrap();
        for &(r, z) in &[(0.33, 1.7), (0.91, -4.2), (0.05, 0.0)] {
            let v = f.eval(r, z).unwrap();
            assert!((v - analytic(r, z)).abs() < 5e-3, "{v}");
        }
        // interior finite differences match the interpolant gradient
        let (r, z) = (0.43, 1.63);
        let h = 1e-7;
        let (gr, gz) = f.grad(r, z).unwrap();
        let fd_r = (f.eval(r + h, z).unwrap() - f.eval(r - h, z).unwrap()) / (2.0 * h);
        let fd_z = (f.eval(r, z + h).unwrap() - f.eval(r, z - h).unwrap()) / (2.0 * h);
        assert!((gr - fd_r).abs() < 1e-6);
        assert!((gz - fd_z).abs() < 1e-6);

        assert!(matches!(
            f.eval(0.5, 9.0),
            Err(Error::Extrapolation(_))
        ));
        assert!(matches!(
            f.eval(1.5, 0.0),
            Err(Error::Extrapolation(_))
        ));
    }

    #[test]
    fn radial_part_strips_the_perturbation() {
        let f = ForceField::<f64>::decaying_perturbation(0.1, 0.05, 1.5, 2.0).unwrap();
        let bar = f.radial_part();
        assert!(bar.is_radial());
        assert!((bar.eval(0.7, 100.0).unwrap() - 0.1 * 0.49).abs() < 1e-15);
    }
}
