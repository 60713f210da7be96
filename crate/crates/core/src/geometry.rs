//! Nozzle and obstacle profiles, truncated computational domains, and the
//! boundary-fitted structured mesh of the meridian plane.
//!
//! The mesh maps a unit transverse parameter `s` onto `[f2(z), f1(z)]` at
//! every axial station, which is the discrete counterpart of straightening
//! the nozzle onto a reference cylinder. Axisymmetric runs weight all
//! integrals by `w(r) = r` (times `2 pi` for physical measures); planar
//! runs model the half-channel `y in [f2, f1]` with weight 1, so areas and
//! fluxes are per unit depth of the half-channel.

use crate::error::{Error, Result};
use crate::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Axisymmetric,
    Planar,
}

impl Symmetry {
    /// Transverse weight in meridian-plane integrals.
    pub fn weight<T: Scalar>(&self, r: T) -> T {
        match self {
            Symmetry::Axisymmetric => r,
            Symmetry::Planar => T::one(),
        }
    }

    /// Azimuthal factor multiplying weighted meridian integrals to give
    /// physical measures.
    pub fn measure_factor<T: Scalar>(&self) -> T {
        match self {
            Symmetry::Axisymmetric => lit::<T>(2.0 * std::f64::consts::PI),
            Symmetry::Planar => T::one(),
        }
    }
}

/// Outer-wall shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind<T> {
    /// `f1 = 1` everywhere.
    Cylinder,
    /// `f1 = 1` for `z > K`, with an optional smooth wall constriction
    /// (depth `amplitude`, C^1 cosine-squared cap) centered upstream.
    FlatBeyondK { amplitude: T, center: T, width: T },
    /// `f1 = 1 + amplitude (1 + z - K)^{-a1}` for `z > K + 1`, constant
    /// `1 + amplitude` upstream of `K`, joined C^2 by a quintic blend on
    /// `[K, K+1]`.
    Algebraic { a1: T, amplitude: T },
}

/// Interior obstacle of revolution: `f2` is a cosine-squared bump supported
/// on `[l1, l2]`, vanishing C^1 at the band ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle<T> {
    pub height: T,
    pub l1: T,
    pub l2: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NozzleProfile<T> {
    pub kind: ProfileKind<T>,
    pub obstacle: Option<Obstacle<T>>,
    /// Far-field onset station: beyond `K` the wall is flat or follows its
    /// declared algebraic decay.
    pub k: T,
    /// Reported constant bounding the geometry: `1/C <= f1 <= C`,
    /// `1/C <= f1 - f2 <= C`, `0 <= f2 <= C`.
    pub bound_constant: T,
}

/// Smooth onset for algebraic tails: 1 for `s <= 0`, the exact tail
/// `(1 + s)^{-rate}` for `s >= 1`, and a C^2 quintic Hermite blend between.
/// Returns the value and its derivative in `s`.
pub(crate) fn algebraic_tail<T: Scalar>(s: T, rate: T) -> (T, T) {
    let one = T::one();
    if s <= T::zero() {
        return (one, T::zero());
    }
    let tail = |x: T| (one + x).powf(-rate);
    let tail_d = |x: T| -rate * (one + x).powf(-rate - one);
    if s >= one {
        return (tail(s), tail_d(s));
    }
    // quintic Hermite on [0,1]: value/slope/curvature (1, 0, 0) at 0 and
    // (tail(1), tail'(1), tail''(1)) at 1
    let v1 = tail(one);
    let d1 = tail_d(one);
    let c1 = rate * (rate + one) * lit::<T>(2.0).powf(-rate - lit::<T>(2.0));
    quintic_hermite(s, one, T::zero(), T::zero(), v1, d1, c1)
}

/// Quintic Hermite on [0,1] matching value, first and second derivative at
/// both ends; returns value and first derivative at `t`.
fn quintic_hermite<T: Scalar>(t: T, v0: T, d0: T, c0: T, v1: T, d1: T, c1: T) -> (T, T) {
    let one = T::one();
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = one - lit::<T>(10.0) * t3 + lit::<T>(15.0) * t4 - lit::<T>(6.0) * t5;
    let h1 = t - lit::<T>(6.0) * t3 + lit::<T>(8.0) * t4 - lit::<T>(3.0) * t5;
    let h2 = half * (t2 - lit::<T>(3.0) * t3 + lit::<T>(3.0) * t4 - t5);
    let h3 = half * (t3 - two * t4 + t5);
    let h4 = -lit::<T>(4.0) * t3 + lit::<T>(7.0) * t4 - lit::<T>(3.0) * t5;
    let h5 = lit::<T>(10.0) * t3 - lit::<T>(15.0) * t4 + lit::<T>(6.0) * t5;
    let dh0 = -lit::<T>(30.0) * t2 + lit::<T>(60.0) * t3 - lit::<T>(30.0) * t4;
    let dh1 = one - lit::<T>(18.0) * t2 + lit::<T>(32.0) * t3 - lit::<T>(15.0) * t4;
    let dh2 = half * (two * t - lit::<T>(9.0) * t2 + lit::<T>(12.0) * t3 - lit::<T>(5.0) * t4);
    let dh3 = half * (lit::<T>(3.0) * t2 - lit::<T>(8.0) * t3 + lit::<T>(5.0) * t4);
    let dh4 = -lit::<T>(12.0) * t2 + lit::<T>(28.0) * t3 - lit::<T>(15.0) * t4;
    let dh5 = lit::<T>(30.0) * t2 - lit::<T>(60.0) * t3 + lit::<T>(30.0) * t4;
    let value = h0 * v0 + h1 * d0 + h2 * c0 + h3 * c1 + h4 * d1 + h5 * v1;
    let deriv = dh0 * v0 + dh1 * d0 + dh2 * c0 + dh3 * c1 + dh4 * d1 + dh5 * v1;
    (value, deriv)
}

impl<T: Scalar> NozzleProfile<T> {
    /// Outer wall radius at station `z`.
    pub fn f1(&self, z: T) -> T {
        self.f1_with_derivative(z).0
    }

    /// Outer wall radius and its axial derivative.
    pub fn f1_with_derivative(&self, z: T) -> (T, T) {
        let one = T::one();
        match self.kind {
            ProfileKind::Cylinder => (one, T::zero()),
            ProfileKind::FlatBeyondK {
                amplitude,
                center,
                width,
            } => {
                let half_width = width / lit::<T>(2.0);
                let t = (z - center) / half_width;
                if t.abs() >= one {
                    (one, T::zero())
                } else {
                    // cosine-squared dip, C^1 at the edges
                    let half_pi = lit::<T>(std::f64::consts::FRAC_PI_2);
                    let c = (half_pi * t).cos();
                    let s = (half_pi * t).sin();
                    let value = one - amplitude * c * c;
                    let dv = amplitude * lit::<T>(2.0) * c * s * half_pi / half_width;
                    (value, dv)
                }
            }
            ProfileKind::Algebraic { a1, amplitude } => {
                let (v, d) = algebraic_tail(z - self.k, a1);
                (one + amplitude * v, amplitude * d)
            }
        }
    }

    /// Obstacle radius at station `z` (zero outside the band).
    pub fn f2(&self, z: T) -> T {
        self.f2_with_derivative(z).0
    }

    pub fn f2_with_derivative(&self, z: T) -> (T, T) {
        match &self.obstacle {
            None => (T::zero(), T::zero()),
            Some(b) => {
                if z <= b.l1 || z >= b.l2 {
                    (T::zero(), T::zero())
                } else {
                    let half_width = (b.l2 - b.l1) / lit::<T>(2.0);
                    let center = (b.l1 + b.l2) / lit::<T>(2.0);
                    let t = (z - center) / half_width;
                    let half_pi = lit::<T>(std::f64::consts::FRAC_PI_2);
                    let c = (half_pi * t).cos();
                    let s = (half_pi * t).sin();
                    let value = b.height * c * c;
                    let dv = -b.height * lit::<T>(2.0) * c * s * half_pi / half_width;
                    (value, dv)
                }
            }
        }
    }

    pub fn has_obstacle(&self) -> bool {
        self.obstacle.is_some()
    }

    /// Exact weighted section measure at station `z`: `pi (f1^2 - f2^2)`
    /// axisymmetric, `f1 - f2` planar.
    pub fn section_area(&self, z: T, symmetry: Symmetry) -> T {
        let f1 = self.f1(z);
        let f2 = self.f2(z);
        match symmetry {
            Symmetry::Axisymmetric => lit::<T>(std::f64::consts::PI) * (f1 * f1 - f2 * f2),
            Symmetry::Planar => f1 - f2,
        }
    }
}

/// Builds and validates a profile; every violated bound is named.
pub fn build_profile<T: Scalar>(
    kind: ProfileKind<T>,
    obstacle: Option<Obstacle<T>>,
    k: T,
) -> Result<NozzleProfile<T>> {
    let half = lit::<T>(0.5);
    match kind {
        ProfileKind::Cylinder => {}
        ProfileKind::FlatBeyondK {
            amplitude,
            center,
            width,
        } => {
            if !(amplitude >= T::zero() && amplitude <= half) {
                return Err(Error::Profile(format!(
                    "wall amplitude must satisfy 0 <= amplitude <= 1/2 so that f1 >= 1/2, got {amplitude}"
                )));
            }
            if !(width > T::zero()) {
                return Err(Error::Profile(format!(
                    "wall width must be positive, got {width}"
                )));
            }
            if center + width / lit::<T>(2.0) > k {
                return Err(Error::Profile(format!(
                    "wall feature must end upstream of the flat onset K={k} (f1 = 1 for z > K)"
                )));
            }
        }
        ProfileKind::Algebraic { a1, amplitude } => {
            if !(a1 > T::zero()) {
                return Err(Error::Profile(format!(
                    "algebraic decay exponent must satisfy a1 > 0, got {a1}"
                )));
            }
            if !(amplitude.abs() <= half) {
                return Err(Error::Profile(format!(
                    "algebraic amplitude must satisfy |amplitude| <= 1/2 so that f1 >= 1/2, got {amplitude}"
                )));
            }
        }
    }
    let mut profile = NozzleProfile {
        kind,
        obstacle,
        k,
        bound_constant: T::one(),
    };
    if let Some(b) = &profile.obstacle {
        if !(b.l1 < b.l2) {
            return Err(Error::Profile(format!(
                "obstacle band must satisfy l1 < l2, got [{}, {}]",
                b.l1, b.l2
            )));
        }
        if !(b.height > T::zero()) {
            return Err(Error::Profile(format!(
                "obstacle height must be positive, got {}",
                b.height
            )));
        }
        // keep the gap bound f1 - f2 >= 1/C with a minimum clearance of 0.2
        let clearance = lit::<T>(0.2);
        let n = 400;
        for i in 0..=n {
            let z = b.l1 + (b.l2 - b.l1) * lit::<T>(i as f64 / n as f64);
            let gap = profile.f1(z) - profile.f2(z);
            if gap < clearance {
                return Err(Error::Profile(format!(
                    "obstacle height {} violates the clearance bound f1 - f2 >= {clearance} at z = {z}",
                    b.height
                )));
            }
        }
    }
    profile.bound_constant = reported_bound(&profile);
    Ok(profile)
}

/// The constant C such that 1/C <= f1 <= C and f1 - f2 >= 1/C, sampled.
fn reported_bound<T: Scalar>(profile: &NozzleProfile<T>) -> T {
    let mut c = T::one();
    let span = lit::<T>(200.0);
    let n = 2000;
    for i in 0..=n {
        let z = -span + lit::<T>(2.0 * i as f64 / n as f64) * span;
        let f1 = profile.f1(z);
        let gap = f1 - profile.f2(z);
        c = c.max(f1).max(f1.recip()).max(gap.recip());
    }
    c
}

/// Boundary-fitted structured mesh of the truncated meridian domain.
///
/// Nodes are indexed `(i, j)` with `i = 0..=n_s` transverse and
/// `j = 0..=n_z` axial; node `(i, j)` sits at
/// `r = f2(z_j) + s_i (f1(z_j) - f2(z_j))`, `z_j = -L + j dz`.
/// The mesh is immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeridianMesh<T> {
    pub profile: NozzleProfile<T>,
    pub symmetry: Symmetry,
    pub half_length: T,
    pub n_s: usize,
    pub n_z: usize,
    pub dz: T,
    /// Axial stations, `n_z + 1` entries.
    pub stations: Vec<T>,
    /// Node radii, station-major: `r[j * (n_s + 1) + i]`.
    pub radii: Vec<T>,
}

/// Which part of the boundary a node belongs to, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Inlet,
    Outlet,
    OuterWall,
    ObstacleWall,
    Axis,
    Interior,
}

impl<T: Scalar> MeridianMesh<T> {
    pub fn node_count(&self) -> usize {
        (self.n_s + 1) * (self.n_z + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.n_s * self.n_z
    }

    #[inline]
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.n_s + 1) + i
    }

    #[inline]
    pub fn node_r(&self, i: usize, j: usize) -> T {
        self.radii[self.node_id(i, j)]
    }

    #[inline]
    pub fn node_z(&self, j: usize) -> T {
        self.stations[j]
    }

    /// Corner node ids of cell `(ic, jc)` counterclockwise from the
    /// low-r, low-z corner.
    #[inline]
    pub fn cell_nodes(&self, ic: usize, jc: usize) -> [usize; 4] {
        [
            self.node_id(ic, jc),
            self.node_id(ic + 1, jc),
            self.node_id(ic + 1, jc + 1),
            self.node_id(ic, jc + 1),
        ]
    }

    #[inline]
    pub fn cell_id(&self, ic: usize, jc: usize) -> usize {
        jc * self.n_s + ic
    }

    /// Axial coordinate of the center of cell column `jc`.
    pub fn column_center_z(&self, jc: usize) -> T {
        (self.stations[jc] + self.stations[jc + 1]) / lit::<T>(2.0)
    }

    /// Boundary classification of node `(i, j)`. Inlet/outlet take
    /// precedence at corners so the Dirichlet set is unambiguous.
    pub fn boundary_tag(&self, i: usize, j: usize) -> BoundaryTag {
        if j == 0 {
            return BoundaryTag::Inlet;
        }
        if j == self.n_z {
            return BoundaryTag::Outlet;
        }
        if i == self.n_s {
            return BoundaryTag::OuterWall;
        }
        if i == 0 {
            let z = self.node_z(j);
            if self.profile.f2(z) > T::zero() {
                return BoundaryTag::ObstacleWall;
            }
            // axis of revolution, or the symmetry line in planar mode
            return BoundaryTag::Axis;
        }
        BoundaryTag::Interior
    }

    /// Snaps an axial coordinate to the nearest station index.
    pub fn nearest_station(&self, t: T) -> Result<usize> {
        if t < -self.half_length || t > self.half_length {
            return Err(Error::Range(format!(
                "station {t} outside the domain [-{L}, {L}]",
                L = self.half_length
            )));
        }
        let rel = ((t + self.half_length) / self.dz).to_f64().unwrap();
        let j = rel.round().max(0.0) as usize;
        Ok(j.min(self.n_z))
    }

    /// Snaps an axial coordinate to the nearest cell-column index.
    pub fn nearest_column(&self, t: T) -> Result<usize> {
        if t < -self.half_length || t > self.half_length {
            return Err(Error::Range(format!(
                "station {t} outside the domain [-{L}, {L}]",
                L = self.half_length
            )));
        }
        let rel = ((t + self.half_length) / self.dz).to_f64().unwrap() - 0.5;
        let j = rel.round().max(0.0) as usize;
        Ok(j.min(self.n_z - 1))
    }

    /// Exact weighted section measure at the station nearest to `t`
    /// (computed from the profile, not the mesh).
    pub fn section_area(&self, t: T) -> Result<T> {
        let j = self.nearest_station(t)?;
        Ok(self.profile.section_area(self.stations[j], self.symmetry))
    }

    pub fn weight(&self, r: T) -> T {
        self.symmetry.weight(r)
    }

    pub fn measure_factor(&self) -> T {
        self.symmetry.measure_factor::<T>()
    }

    /// True if the two meshes share transverse resolution, symmetry and
    /// axial spacing, so states can be compared column-by-column.
    pub fn compatible_with(&self, other: &MeridianMesh<T>) -> bool {
        self.n_s == other.n_s
            && self.symmetry == other.symmetry
            && (self.dz - other.dz).abs() < lit::<T>(1e-12)
    }
}

/// Builds the structured mesh over `[-L, L]`; `h_z` is the target axial
/// spacing (rounded so stations land exactly on `±L`).
pub fn build_mesh<T: Scalar>(
    profile: &NozzleProfile<T>,
    half_length: T,
    n_s: usize,
    h_z: T,
    symmetry: Symmetry,
) -> Result<MeridianMesh<T>> {
    if n_s < 4 {
        return Err(Error::Mesh(format!(
            "at least 4 transverse cells required, got {n_s}"
        )));
    }
    if !(h_z > T::zero()) {
        return Err(Error::Mesh(format!(
            "axial spacing must be positive, got {h_z}"
        )));
    }
    if let Some(b) = &profile.obstacle {
        let margin = lit::<T>(2.0);
        if half_length < b.l1.abs().max(b.l2.abs()) + margin {
            return Err(Error::Mesh(format!(
                "half-length {half_length} must exceed the obstacle extent by at least {margin}"
            )));
        }
    }
    let two_l = lit::<T>(2.0) * half_length;
    let n_z = (two_l / h_z).to_f64().unwrap().round().max(1.0) as usize;
    let dz = two_l / lit::<T>(n_z as f64);

    let mut stations = Vec::with_capacity(n_z + 1);
    for j in 0..=n_z {
        stations.push(-half_length + dz * lit::<T>(j as f64));
    }
    let mut radii = Vec::with_capacity((n_s + 1) * (n_z + 1));
    for &z in &stations {
        let inner = profile.f2(z);
        let outer = profile.f1(z);
        if !(outer > inner) {
            return Err(Error::Mesh(format!(
                "profile pinched shut at z = {z}: f1 = {outer}, f2 = {inner}"
            )));
        }
        for i in 0..=n_s {
            let s = lit::<T>(i as f64 / n_s as f64);
            radii.push(inner + s * (outer - inner));
        }
    }
    let mesh = MeridianMesh {
        profile: profile.clone(),
        symmetry,
        half_length,
        n_s,
        n_z,
        dz,
        stations,
        radii,
    };

    // positivity of the isoparametric Jacobian at every quadrature point
    let gp = lit::<T>(1.0 / f64::sqrt(3.0));
    for jc in 0..n_z {
        for ic in 0..n_s {
            for &xi in &[-gp, gp] {
                for &eta in &[-gp, gp] {
                    let geom = crate::fem::ElementGeometry::at(&mesh, ic, jc, xi, eta);
                    if !(geom.det_j > T::zero()) {
                        return Err(Error::Mesh(format!(
                            "non-positive Jacobian {s} in cell ({ic}, {jc})",
                            s = geom.det_j
                        )));
                    }
                }
            }
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cylinder() -> NozzleProfile<f64> {
        build_profile(ProfileKind::Cylinder, None, 0.0).unwrap()
    }

    #[test]
    fn cylinder_profile_is_trivial() {
        let p = cylinder();
        for z in [-50.0, 0.0, 13.7] {
            assert_eq!(p.f1(z), 1.0);
            assert_eq!(p.f2(z), 0.0);
        }
    }

    #[test]
    fn algebraic_profile_matches_tail_formula() {
        let p: NozzleProfile<f64> = build_profile(
            ProfileKind::Algebraic {
                a1: 2.0,
                amplitude: 0.2,
            },
            None,
            5.0,
        )
        .unwrap();
        // beyond the blend region the tail is exact
        let expected = 0.2 / 36.0;
        assert!((p.f1(10.0) - 1.0 - expected).abs() < 1e-15);
        assert!((p.f1(10.0) - 1.0 - 0.00556).abs() < 1e-5);
        // constant upstream
        assert_eq!(p.f1(0.0), 1.2);
        assert_eq!(p.f1(5.0), 1.2);
    }

    #[test]
    fn algebraic_profile_decay_envelope() {
        let (a1, amp, k) = (2.0, 0.2, 5.0);
        let p = build_profile(ProfileKind::Algebraic { a1, amplitude: amp }, None, k).unwrap();
        // |z^m d^m(f1-1)| <= C z^{-a1} for z > K+1, m = 0,1,2 with second
        // differences standing in for the second derivative
        let c = 150.0; // envelope constant; near K+1 the shifted tail needs (z/(1+z-K))^(a1+2) of headroom
        let h = 1e-4;
        for step in 0..200 {
            let z = k + 1.0 + 0.2 * step as f64;
            let envelope = c * z.powf(-a1);
            let v = p.f1(z) - 1.0;
            let d = p.f1_with_derivative(z).1;
            let dd = (p.f1(z + h) - 2.0 * p.f1(z) + p.f1(z - h)) / (h * h);
            assert!(v.abs() <= envelope, "value {v} exceeds envelope at z={z}");
            assert!((z * d).abs() <= envelope, "slope {d} exceeds envelope at z={z}");
            assert!(
                (z * z * dd).abs() <= envelope,
                "curvature {dd} exceeds envelope at z={z}"
            );
        }
    }

    #[test]
    fn blend_region_is_smooth() {
        let p: NozzleProfile<f64> = build_profile(
            ProfileKind::Algebraic {
                a1: 2.0,
                amplitude: 0.2,
            },
            None,
            5.0,
        )
        .unwrap();
        // C^2 across both blend ends, checked by second differences
        let h = 1e-5;
        for z in [5.0, 6.0] {
            let dd_left = (p.f1(z - h) - 2.0 * p.f1(z - 2.0 * h) + p.f1(z - 3.0 * h)) / (h * h);
            let dd_right = (p.f1(z + 3.0 * h) - 2.0 * p.f1(z + 2.0 * h) + p.f1(z + h)) / (h * h);
            assert!(
                (dd_left - dd_right).abs() < 1e-3,
                "second derivative jumps at z={z}: {dd_left} vs {dd_right}"
            );
        }
        // analytic derivative matches finite differences through the blend
        for step in 0..50 {
            let z = 4.9 + 0.005 * step as f64;
            let d = p.f1_with_derivative(z).1;
            let fd = (p.f1(z + h) - p.f1(z - h)) / (2.0 * h);
            assert!((d - fd).abs() < 1e-8, "z={z}: {d} vs {fd}");
        }
    }

    #[test]
    fn obstacle_bump_shape() {
        let p: NozzleProfile<f64> = build_profile(
            ProfileKind::Cylinder,
            Some(Obstacle {
                height: 0.3,
                l1: -1.0,
                l2: 1.0,
            }),
            0.0,
        )
        .unwrap();
        assert_eq!(p.f2(-1.0), 0.0);
        assert_eq!(p.f2(1.0), 0.0);
        assert!((p.f2(0.0) - 0.3).abs() < 1e-15);
        for step in 0..=100 {
            let z = -1.0 + 0.02 * step as f64;
            assert!(p.f1(z) - p.f2(z) >= 0.7 - 1e-12);
            assert!(p.f2(z) <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_name_the_bound() {
        let err = build_profile(
            ProfileKind::Algebraic {
                a1: -1.0,
                amplitude: 0.2,
            },
            None,
            5.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("a1 > 0"), "{err}");

        let err = build_profile(
            ProfileKind::Algebraic {
                a1: 2.0,
                amplitude: 0.9,
            },
            None,
            5.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("f1 >= 1/2"), "{err}");

        let err = build_profile(
            ProfileKind::Cylinder,
            Some(Obstacle {
                height: 0.95,
                l1: -1.0,
                l2: 1.0,
            }),
            0.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("clearance"), "{err}");
    }

    #[test]
    fn mesh_dimensions_and_jacobians() {
        let mesh = build_mesh(&cylinder(), 10.0, 4, 0.5, Symmetry::Axisymmetric).unwrap();
        assert_eq!(mesh.n_s, 4);
        assert_eq!(mesh.n_z, 40);
        assert_eq!(mesh.node_count(), 5 * 41);
        // affine cells: all Jacobians equal
        let gp = 1.0 / 3.0_f64.sqrt();
        let first = crate::fem::ElementGeometry::at(&mesh, 0, 0, -gp, -gp).det_j;
        assert!(first > 0.0);
        for jc in 0..mesh.n_z {
            for ic in 0..mesh.n_s {
                let g = crate::fem::ElementGeometry::at(&mesh, ic, jc, gp, -gp);
                assert!((g.det_j - first).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn boundary_fitted_mesh_positive_jacobians() {
        let p = build_profile(
            ProfileKind::Algebraic {
                a1: 2.0,
                amplitude: 0.2,
            },
            Some(Obstacle {
                height: 0.3,
                l1: -1.0,
                l2: 1.0,
            }),
            4.0,
        )
        .unwrap();
        // build_mesh verifies positivity at every quadrature point
        let mesh = build_mesh(&p, 20.0, 8, 0.25, Symmetry::Axisymmetric).unwrap();
        assert_eq!(mesh.cell_count(), 8 * 160);

        // cells in the obstacle band are annular
        let j_mid = mesh.nearest_station(0.0).unwrap();
        assert!(mesh.node_r(0, j_mid) > 0.29);
        // outside the band the inner boundary is the axis
        let j_out = mesh.nearest_station(5.0).unwrap();
        assert_eq!(mesh.node_r(0, j_out), 0.0);
    }

    #[test]
    fn every_station_is_a_full_transverse_section() {
        let p: NozzleProfile<f64> = build_profile(
            ProfileKind::FlatBeyondK {
                amplitude: 0.2,
                center: 0.0,
                width: 2.0,
            },
            None,
            2.0,
        )
        .unwrap();
        let mesh = build_mesh(&p, 10.0, 6, 0.5, Symmetry::Axisymmetric).unwrap();
        for j in 0..=mesh.n_z {
            let z = mesh.node_z(j);
            for i in 0..mesh.n_s {
                assert!(mesh.node_r(i + 1, j) > mesh.node_r(i, j));
            }
            assert!((mesh.node_r(mesh.n_s, j) - mesh.profile.f1(z)).abs() < 1e-15);
            assert!((mesh.node_r(0, j) - mesh.profile.f2(z)).abs() < 1e-15);
        }
    }

    #[test]
    fn section_areas() {
        let mesh = build_mesh(&cylinder(), 10.0, 4, 0.5, Symmetry::Axisymmetric).unwrap();
        for t in [-10.0, -3.25, 0.0, 7.5, 10.0] {
            assert!((mesh.section_area(t).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        }
        let planar = build_mesh(&cylinder(), 10.0, 4, 0.5, Symmetry::Planar).unwrap();
        assert_eq!(planar.section_area(0.0).unwrap(), 1.0);

        let bump = build_profile(
            ProfileKind::Cylinder,
            Some(Obstacle {
                height: 0.3,
                l1: -1.0,
                l2: 1.0,
            }),
            0.0,
        )
        .unwrap();
        let bump_mesh = build_mesh(&bump, 10.0, 8, 0.25, Symmetry::Axisymmetric).unwrap();
        let expected = std::f64::consts::PI * (1.0 - 0.09);
        assert!((bump_mesh.section_area(0.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 2.8588).abs() < 1e-4);

        assert!(mesh.section_area(10.5).is_err());
    }

    #[test]
    fn section_areas_are_resolution_independent() {
        let p: NozzleProfile<f64> = build_profile(
            ProfileKind::Algebraic {
                a1: 2.0,
                amplitude: 0.2,
            },
            None,
            4.0,
        )
        .unwrap();
        let coarse = build_mesh(&p, 10.0, 4, 0.5, Symmetry::Axisymmetric).unwrap();
        let fine = build_mesh(&p, 10.0, 8, 0.25, Symmetry::Axisymmetric).unwrap();
        for t in [-8.0, 0.0, 5.5, 9.0] {
            let a = coarse.section_area(t).unwrap();
            let b = fine.section_area(t).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mesh_preconditions() {
        assert!(build_mesh(&cylinder(), 10.0, 2, 0.5, Symmetry::Axisymmetric).is_err());
        assert!(build_mesh(&cylinder(), 10.0, 4, -0.5, Symmetry::Axisymmetric).is_err());
        let bump = build_profile(
            ProfileKind::Cylinder,
            Some(Obstacle {
                height: 0.3,
                l1: -1.0,
                l2: 1.0,
            }),
            0.0,
        )
        .unwrap();
        assert!(build_mesh(&bump, 2.5, 4, 0.5, Symmetry::Axisymmetric).is_err());
    }

    #[test]
    fn boundary_tags_are_complete_and_disjoint() {
        let bump = build_profile(
            ProfileKind::Cylinder,
            Some(Obstacle {
                height: 0.3,
                l1: -1.0,
                l2: 1.0,
            }),
            0.0,
        )
        .unwrap();
        let mesh = build_mesh(&bump, 10.0, 6, 0.5, Symmetry::Axisymmetric).unwrap();
        let mut counts = std::collections::HashMap::new();
        for j in 0..=mesh.n_z {
            for i in 0..=mesh.n_s {
                *counts
                    .entry(format!("{:?}", mesh.boundary_tag(i, j)))
                    .or_insert(0usize) += 1;
            }
        }
        assert_eq!(counts["Inlet"], mesh.n_s + 1);
        assert_eq!(counts["Outlet"], mesh.n_s + 1);
        assert_eq!(counts["OuterWall"], mesh.n_z - 1);
        assert!(counts["ObstacleWall"] > 0);
        assert!(counts["Axis"] > 0);
        let total: usize = counts.values().sum();
        assert_eq!(total, mesh.node_count());
    }
}
