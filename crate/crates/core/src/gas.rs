//! Algebraic gas relations for the polytropic pressure law `p~ = rho^gamma`,
//! scaled by the compressibility parameter `epsilon`, together with the
//! subsonic coefficient truncation that keeps the potential operator
//! uniformly elliptic.
//!
//! Everything here is a pure function of value inputs; the relations are
//! closed-form and ship with their analytic derivatives.

use crate::error::{Error, Result};
use crate::{lit, Scalar};

/// Polytropic gas closure with compressibility scaling and truncation knobs.
///
/// `gamma` is the adiabatic exponent, `epsilon` the compressibility
/// parameter (`epsilon = 0` is the incompressible limit), `theta` the Mach
/// threshold below which the density closure is left untouched, and
/// `epsilon0` the reference parameter the truncation thresholds are frozen
/// at (so the truncated coefficients do not move as `epsilon` varies in a
/// sweep).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel<T> {
    pub gamma: T,
    pub epsilon: T,
    pub theta: T,
    pub epsilon0: T,
}

/// Density together with its analytic sensitivities.
///
/// `drho_dg` is the derivative with respect to the squared speed,
/// `drho_dphi` with respect to the force potential. `truncated` marks
/// whether the evaluation left the plain Bernoulli branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEval<T> {
    pub rho: T,
    pub drho_dg: T,
    pub drho_dphi: T,
    pub truncated: bool,
}

impl<T: Scalar> DensityEval<T> {
    /// Coefficient `rho + 2 G drho/dG` of the linearized operator; positive
    /// exactly where the (possibly truncated) closure is elliptic.
    pub fn momentum_coefficient(&self, g: T) -> T {
        self.rho + (lit::<T>(2.0)) * self.drho_dg * g
    }
}

impl<T: Scalar> GasModel<T> {
    pub fn new(gamma: T, epsilon: T, theta: T, epsilon0: T) -> Result<Self> {
        let one = T::one();
        if !(gamma > one) {
            return Err(Error::domain(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(theta > T::zero() && theta < one) {
            return Err(Error::domain(format!("theta must lie in (0,1), got {theta}")));
        }
        if !(epsilon0 > T::zero() && epsilon0 < one) {
            return Err(Error::domain(format!(
                "epsilon0 must lie in (0,1), got {epsilon0}"
            )));
        }
        if !(epsilon >= T::zero() && epsilon <= epsilon0) {
            return Err(Error::domain(format!(
                "epsilon must lie in [0, epsilon0={epsilon0}], got {epsilon}"
            )));
        }
        Ok(GasModel {
            gamma,
            epsilon,
            theta,
            epsilon0,
        })
    }

    /// Same gas with a different compressibility parameter (used by sweeps).
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        GasModel::new(self.gamma, epsilon, self.theta, self.epsilon0)
    }

    pub fn is_incompressible(&self) -> bool {
        self.epsilon == T::zero()
    }

    /// Unscaled pressure `p~(rho) = rho^gamma`.
    pub fn pressure(&self, rho: T) -> Result<T> {
        if !(rho > T::zero()) {
            return Err(Error::domain(format!("nonpositive density {rho}")));
        }
        Ok(rho.powf(self.gamma))
    }

    /// Scaled pressure `(p~(rho) - p~(1)) / epsilon^2`; undefined at `epsilon = 0`.
    pub fn scaled_pressure(&self, rho: T) -> Result<T> {
        if self.is_incompressible() {
            return Err(Error::domain(
                "scaled pressure is undefined at epsilon = 0".to_string(),
            ));
        }
        let p = self.pressure(rho)?;
        Ok((p - T::one()) / (self.epsilon * self.epsilon))
    }

    /// Enthalpy `h~(rho) = gamma rho^(gamma-1) / (gamma-1)`.
    ///
    /// The additive normalization is chosen so the formula is closed-form;
    /// only differences of `h~` are physically meaningful.
    pub fn enthalpy(&self, rho: T) -> Result<T> {
        if !(rho > T::zero()) {
            return Err(Error::domain(format!("nonpositive density {rho}")));
        }
        let gm1 = self.gamma - T::one();
        Ok(self.gamma * rho.powf(gm1) / gm1)
    }

    /// Inverse of [`enthalpy`](Self::enthalpy): `rho = ((gamma-1) h / gamma)^(1/(gamma-1))`.
    pub fn enthalpy_inverse(&self, h: T) -> Result<T> {
        if !(h > T::zero()) {
            return Err(Error::Cavitation {
                argument: h.to_f64().unwrap_or(f64::NAN),
            });
        }
        let gm1 = self.gamma - T::one();
        Ok((gm1 * h / self.gamma).powf(gm1.recip()))
    }

    /// Derivative of the inverse enthalpy at the point where it takes the
    /// value `rho`: `1 / h~'(rho) = rho^(2-gamma) / gamma`.
    fn enthalpy_inverse_slope(&self, rho: T) -> T {
        rho.powf(lit::<T>(2.0) - self.gamma) / self.gamma
    }

    /// Scaled enthalpy difference `(h~(rho) - h~(1)) / epsilon^2`, the form
    /// in which the enthalpy enters the Bernoulli relation. Computed as a
    /// difference first so the `1/epsilon^2` scaling does not amplify
    /// rounding of the large common term.
    pub fn scaled_enthalpy_diff(&self, rho: T) -> Result<T> {
        if !(rho > T::zero()) {
            return Err(Error::domain(format!("nonpositive density {rho}")));
        }
        if self.is_incompressible() {
            return Ok(T::zero());
        }
        let gm1 = self.gamma - T::one();
        let diff = self.gamma * (rho.powf(gm1) - T::one()) / gm1;
        Ok(diff / (self.epsilon * self.epsilon))
    }

    /// Density from the Bernoulli relation,
    /// `rho = h~^{-1}( epsilon^2 (2 phi - G)/2 + h~(1) )`,
    /// with its analytic derivatives in `G` (squared speed) and `phi`.
    pub fn density_from_bernoulli(&self, g: T, phi: T) -> Result<DensityEval<T>> {
        if self.is_incompressible() {
            return Ok(DensityEval {
                rho: T::one(),
                drho_dg: T::zero(),
                drho_dphi: T::zero(),
                truncated: false,
            });
        }
        let eps2 = self.epsilon * self.epsilon;
        let two = lit::<T>(2.0);
        let arg = eps2 * (two * phi - g) / two + self.enthalpy(T::one())?;
        let rho = self.enthalpy_inverse(arg)?;
        let slope = self.enthalpy_inverse_slope(rho);
        Ok(DensityEval {
            rho,
            drho_dg: -eps2 * slope / two,
            drho_dphi: eps2 * slope,
            truncated: false,
        })
    }

    /// Sound speed `sqrt(p~'(rho)) / epsilon`; infinite in the
    /// incompressible limit.
    pub fn sound_speed(&self, rho: T) -> Result<T> {
        if !(rho > T::zero()) {
            return Err(Error::domain(format!("nonpositive density {rho}")));
        }
        if self.is_incompressible() {
            return Ok(T::infinity());
        }
        let gm1 = self.gamma - T::one();
        Ok((self.gamma * rho.powf(gm1)).sqrt() / self.epsilon)
    }

    /// Mach number `epsilon |u| / sqrt(p~'(rho))`.
    pub fn mach(&self, speed: T, rho: T) -> Result<T> {
        if !(rho > T::zero()) {
            return Err(Error::domain(format!("nonpositive density {rho}")));
        }
        if !(speed >= T::zero()) {
            return Err(Error::domain(format!("negative speed {speed}")));
        }
        let gm1 = self.gamma - T::one();
        Ok(self.epsilon * speed / (self.gamma * rho.powf(gm1)).sqrt())
    }

    /// `mu^2 = (gamma-1) theta^2 / (2 + (gamma-1) theta^2)`.
    fn mu_squared(&self, theta: T) -> T {
        let gm1 = self.gamma - T::one();
        gm1 * theta * theta / (lit::<T>(2.0) + gm1 * theta * theta)
    }

    /// Threshold speed `q_theta = mu sqrt(2 (phi + h~(1)/epsilon^2))`: the
    /// flow at potential `phi` has Mach below `theta` exactly when its speed
    /// is below this value. `theta = 1` gives the critical (sonic) speed.
    /// Returns `+inf` at `epsilon = 0` (no sonic barrier).
    pub fn critical_speed(&self, theta: T, phi: T) -> Result<T> {
        if !(theta > T::zero() && theta <= T::one()) {
            return Err(Error::domain(format!(
                "Mach threshold must lie in (0,1], got {theta}"
            )));
        }
        if self.is_incompressible() {
            return Ok(T::infinity());
        }
        self.threshold_speed_at(theta, phi, self.epsilon)
    }

    fn threshold_speed_at(&self, theta: T, phi: T, epsilon: T) -> Result<T> {
        let h1 = self.enthalpy(T::one())? / (epsilon * epsilon);
        let arg = phi + h1;
        if !(arg > T::zero()) {
            return Err(Error::domain(format!(
                "phi + h(1) must be positive, got {arg}"
            )));
        }
        Ok((self.mu_squared(theta) * lit::<T>(2.0) * arg).sqrt())
    }

    /// Truncation threshold evaluated at the reference parameter: the
    /// infimum of `q_theta^epsilon` over `epsilon in (0, epsilon0]` is
    /// attained at `epsilon0` since the threshold decreases in `epsilon`.
    pub fn truncation_threshold(&self, theta: T, phi: T) -> Result<T> {
        self.threshold_speed_at(theta, phi, self.epsilon0)
    }

    fn theta_mid(&self) -> T {
        (self.theta + T::one()) / lit::<T>(2.0)
    }

    /// Plateau value of the truncated kinetic term: the supremum over the
    /// domain of `q_mid(phi)^2 - 2 phi`, which for `|phi| <= phi_bound` is
    /// attained at `phi = -phi_bound`.
    pub fn truncation_plateau(&self, phi_bound: T) -> Result<T> {
        let b = phi_bound.abs();
        let q_hi = self.truncation_threshold(self.theta_mid(), -b)?;
        Ok(q_hi * q_hi + lit::<T>(2.0) * b)
    }

    /// Truncated density `rho^ = h~^{-1}(h~(1) - epsilon^2 q^(G,phi)/2)`.
    ///
    /// Below the `theta` threshold this is bitwise the Bernoulli density;
    /// above the `(theta+1)/2` threshold the kinetic term is frozen at
    /// `plateau` (see [`truncation_plateau`](Self::truncation_plateau));
    /// in between, a monotone C^1 blend of the kinetic term joins the two
    /// branches, matching the slope `2 q` of the plain branch at the lower
    /// knot and slope zero at the upper knot. Defined for every `G >= 0`.
    ///
    /// The blend keeps its slope within a trapezoidal profile rather than
    /// using a single cubic: the cubic's interior slope overshoot (up to
    /// 4/3 of the secant) loses ellipticity of the induced coefficient
    /// `rho^ + 2 G rho^_G` near `theta = 0.9` when `epsilon = epsilon0`.
    pub fn truncated_density(&self, g: T, phi: T, plateau: T) -> Result<DensityEval<T>> {
        if !(g >= T::zero()) {
            return Err(Error::domain(format!("negative squared speed {g}")));
        }
        if self.is_incompressible() {
            return Ok(DensityEval {
                rho: T::one(),
                drho_dg: T::zero(),
                drho_dphi: T::zero(),
                truncated: false,
            });
        }
        let q = g.sqrt();
        let q_lo = self.truncation_threshold(self.theta, phi)?;
        if q <= q_lo {
            return self.density_from_bernoulli(g, phi);
        }
        let two = lit::<T>(2.0);
        let eps2 = self.epsilon * self.epsilon;
        let h1 = self.enthalpy(T::one())?;
        let q_hi = self.truncation_threshold(self.theta_mid(), phi)?;
        if q >= q_hi {
            let rho = self.enthalpy_inverse(h1 - eps2 * plateau / two)?;
            return Ok(DensityEval {
                rho,
                drho_dg: T::zero(),
                drho_dphi: T::zero(),
                truncated: true,
            });
        }

        let (value, dvalue_dq, dvalue_dphi) = self.blend_kinetic(q, phi, plateau, q_lo, q_hi);
        let dq_dg = (two * q).recip();
        let arg = h1 - eps2 * value / two;
        let rho = self.enthalpy_inverse(arg)?;
        let slope = self.enthalpy_inverse_slope(rho);
        Ok(DensityEval {
            rho,
            drho_dg: -eps2 * slope / two * dvalue_dq * dq_dg,
            drho_dphi: -eps2 * slope / two * dvalue_dphi,
            truncated: true,
        })
    }

    /// Blend of the kinetic term between the knots, with derivatives in `q`
    /// and `phi` (the knots move with `phi` through `q' = mu^2 / q`).
    ///
    /// The slope runs linearly from `2 q_lo` up to a plateau value `p` over
    /// the first 15% of the interval, stays at `p` through 85%, and falls
    /// linearly to zero; `p` is fixed by the value constraint at the upper
    /// knot. The kinetic term itself is the piecewise-quadratic integral of
    /// that profile.
    fn blend_kinetic(&self, q: T, phi: T, plateau: T, q_lo: T, q_hi: T) -> (T, T, T) {
        let two = lit::<T>(2.0);
        let fa = lit::<T>(0.15);
        let fb = lit::<T>(0.85);
        // integral of the normalized slope profile: fa/2 from the ramp-up,
        // (fb - fa) flat, (1 - fb)/2 from the ramp-down applied to p, plus
        // fa/2 applied to the entry slope
        let p_denom = lit::<T>(0.5) + (fb - fa) / two;

        let width = q_hi - q_lo;
        let t = (q - q_lo) / width;
        let v_lo = q_lo * q_lo - two * phi;
        let m = two * q_lo;
        let s = (plateau - v_lo) / width;
        let p = (s - fa * m / two) / p_denom;

        let mu_lo2 = self.mu_squared(self.theta);
        let mu_hi2 = self.mu_squared(self.theta_mid());
        let q_lo_phi = mu_lo2 / q_lo;
        let q_hi_phi = mu_hi2 / q_hi;
        let width_phi = q_hi_phi - q_lo_phi;
        let t_phi = (-q_lo_phi - t * width_phi) / width;
        let v_lo_phi = two * q_lo * q_lo_phi - two;
        let m_phi = two * q_lo_phi;
        let s_phi = (-v_lo_phi - s * width_phi) / width;
        let p_phi = (s_phi - fa * m_phi / two) / p_denom;

        if t < fa {
            // slope m + (p - m) t / fa
            let ramp = m * t + (p - m) * t * t / (two * fa);
            let value = v_lo + width * ramp;
            let dvalue_dq = m + (p - m) * t / fa;
            let ramp_phi = m_phi * t
                + m * t_phi
                + ((p_phi - m_phi) * t * t + (p - m) * two * t * t_phi) / (two * fa);
            (value, dvalue_dq, v_lo_phi + width_phi * ramp + width * ramp_phi)
        } else if t <= fb {
            let head = fa * (m + p) / two;
            let value = v_lo + width * (head + p * (t - fa));
            let head_phi = fa * (m_phi + p_phi) / two;
            let dvalue_dphi = v_lo_phi
                + width_phi * (head + p * (t - fa))
                + width * (head_phi + p_phi * (t - fa) + p * t_phi);
            (value, p, dvalue_dphi)
        } else {
            let head = fa * (m + p) / two + p * (fb - fa);
            let u = t - fb;
            let tail = p * (u - u * u / (two * (T::one() - fb)));
            let value = v_lo + width * (head + tail);
            let dvalue_dq = p * (T::one() - u / (T::one() - fb));
            let head_phi = fa * (m_phi + p_phi) / two + p_phi * (fb - fa);
            let tail_phi = p_phi * (u - u * u / (two * (T::one() - fb)))
                + p * (t_phi - u * t_phi / (T::one() - fb));
            let dvalue_dphi = v_lo_phi + width_phi * (head + tail) + width * (head_phi + tail_phi);
            (value, dvalue_dq, dvalue_dphi)
        }
    }

    /// Antiderivative `G^(G, phi) = (1/2) int_0^G rho^(a, phi) da` of the
    /// truncated density, the integrand of the compressible energy.
    ///
    /// On the Bernoulli branch `int rho da = (2/eps^2)(rho(0)^gamma -
    /// rho(G)^gamma)` in closed form; the blend segment is integrated by
    /// fixed Gauss-Legendre quadrature and the plateau segment is linear.
    pub fn kinetic_potential(&self, g: T, phi: T, plateau: T) -> Result<T> {
        if !(g >= T::zero()) {
            return Err(Error::domain(format!("negative squared speed {g}")));
        }
        if self.is_incompressible() {
            return Ok(g / lit::<T>(2.0));
        }
        let two = lit::<T>(2.0);
        let eps2 = self.epsilon * self.epsilon;
        let q_lo = self.truncation_threshold(self.theta, phi)?;
        let g_lo = q_lo * q_lo;

        let rho_gamma = |a: T| -> Result<T> {
            Ok(self.density_from_bernoulli(a, phi)?.rho.powf(self.gamma))
        };

        if g <= g_lo {
            let val = two / eps2 * (rho_gamma(T::zero())? - rho_gamma(g)?);
            return Ok(val / two);
        }
        let mut integral = two / eps2 * (rho_gamma(T::zero())? - rho_gamma(g_lo)?);

        let q_hi = self.truncation_threshold(self.theta_mid(), phi)?;
        let g_hi = q_hi * q_hi;
        let g_mid_end = g.min(g_hi);
        integral = integral + gauss_legendre_16(g_lo, g_mid_end, |a| {
            self.truncated_density(a, phi, plateau).map(|d| d.rho)
        })?;
        if g > g_hi {
            let rho_plateau = self.truncated_density(g, phi, plateau)?.rho;
            integral = integral + rho_plateau * (g - g_hi);
        }
        Ok(integral / two)
    }
}

/// 16-point Gauss-Legendre quadrature on [a, b].
fn gauss_legendre_16<T: Scalar>(a: T, b: T, mut f: impl FnMut(T) -> Result<T>) -> Result<T> {
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
    let half = (b - a) / lit::<T>(2.0);
    let mid = (b + a) / lit::<T>(2.0);
    let mut sum = T::zero();
    for k in 0..8 {
        let x = lit::<T>(NODES[k]) * half;
        let w = lit::<T>(WEIGHTS[k]);
        sum = sum + w * (f(mid + x)? + f(mid - x)?);
    }
    Ok(sum * half)
}
