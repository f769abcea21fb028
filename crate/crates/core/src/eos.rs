//! Barotropic pressure law `p(rho) = a * rho^gamma` and the potentials built on it.
//!
//! The internal energy is normalized with `e(1) = 0`, which makes
//! `rho * e(rho)` coincide with the pressure potential
//! `P(rho) = rho * int_1^rho p(s) / s^2 ds`. The same potential therefore
//! feeds both the kappa-entropy and the relative entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the fluid plus the admissible-density floor.
///
/// Viscosities are `mu(rho) = mu * rho` and `lambda(rho) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub mu: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub a: f64,
    pub rho_floor: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            kappa: 0.5,
            gamma: 2.0,
            a: 1.0,
            rho_floor: 1e-8,
        }
    }
}

impl FluidParams {
    pub fn new(mu: f64, kappa: f64, gamma: f64, a: f64, rho_floor: f64) -> Result<Self> {
        let params = Self {
            mu,
            kappa,
            gamma,
            a,
            rho_floor,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks the parameter ranges; returns every violation in one message.
    pub fn validate(&self) -> Result<()> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(violations.join("; ")))
        }
    }

    /// Human-readable list of range violations, keyed by field name.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            out.push(format!("mu = {} must be > 0", self.mu));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            out.push(format!(
                "kappa = {} must lie in the open interval (0, 1)",
                self.kappa
            ));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            out.push(format!("gamma = {} must be > 1", self.gamma));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            out.push(format!("a = {} must be > 0", self.a));
        }
        if !(self.rho_floor > 0.0 && self.rho_floor.is_finite()) {
            out.push(format!("rho_floor = {} must be > 0", self.rho_floor));
        }
        out
    }

    /// Dynamic shear viscosity `mu(rho) = mu * rho`.
    #[inline]
    pub fn mu_of_rho(&self, rho: f64) -> f64 {
        self.mu * rho
    }

    /// Bulk viscosity; identically zero for this model.
    #[inline]
    pub fn lambda_of_rho(&self, _rho: f64) -> f64 {
        0.0
    }

    /// `sqrt(kappa (1 - kappa))`, the coupling between `v` and `w`.
    #[inline]
    pub fn coupling(&self) -> f64 {
        (self.kappa * (1.0 - self.kappa)).sqrt()
    }

    /// `sqrt(kappa / (1 - kappa))`, used to recover `u` from `(v, w)`.
    #[inline]
    pub fn recovery_factor(&self) -> f64 {
        (self.kappa / (1.0 - self.kappa)).sqrt()
    }

    #[inline]
    pub(crate) fn check_density(&self, rho: f64) -> Result<()> {
        if rho >= self.rho_floor {
            Ok(())
        } else {
            Err(Error::Vacuum {
                rho,
                floor: self.rho_floor,
            })
        }
    }

    /// `rho^gamma`, with an exact integer-power path for integral exponents.
    #[inline]
    pub(crate) fn pow_gamma(&self, rho: f64) -> f64 {
        pow(rho, self.gamma)
    }

    #[inline]
    pub(crate) fn pressure_unchecked(&self, rho: f64) -> f64 {
        self.a * self.pow_gamma(rho)
    }

    /// `p'(rho) = a gamma rho^(gamma - 1)`.
    #[inline]
    pub(crate) fn dpressure_unchecked(&self, rho: f64) -> f64 {
        self.a * self.gamma * pow(rho, self.gamma - 1.0)
    }
}

#[inline]
fn pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e == 3.0 {
        x * x * x
    } else if e.fract() == 0.0 && e.abs() <= 16.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

pub fn pressure(rho: f64, params: &FluidParams) -> Result<f64> {
    params.check_density(rho)?;
    Ok(params.pressure_unchecked(rho))
}

/// Derivative `p'(rho)`.
pub fn pressure_derivative(rho: f64, params: &FluidParams) -> Result<f64> {
    params.check_density(rho)?;
    Ok(params.dpressure_unchecked(rho))
}

/// Sound speed `sqrt(p'(rho))`.
pub fn sound_speed(rho: f64, params: &FluidParams) -> Result<f64> {
    Ok(pressure_derivative(rho, params)?.sqrt())
}

/// `P(rho) = a rho (rho^(gamma-1) - 1) / (gamma - 1)`.
pub fn pressure_potential(rho: f64, params: &FluidParams) -> Result<f64> {
    params.check_density(rho)?;
    Ok(potential_unchecked(rho, params))
}

#[inline]
pub(crate) fn potential_unchecked(rho: f64, params: &FluidParams) -> f64 {
    let g1 = params.gamma - 1.0;
    params.a * rho * (pow(rho, g1) - 1.0) / g1
}

/// `P'(r) = a gamma r^(gamma-1) / (gamma - 1) - a / (gamma - 1)`.
pub fn pressure_potential_derivative(r: f64, params: &FluidParams) -> Result<f64> {
    params.check_density(r)?;
    Ok(potential_derivative_unchecked(r, params))
}

#[inline]
fn potential_derivative_unchecked(r: f64, params: &FluidParams) -> f64 {
    let g1 = params.gamma - 1.0;
    params.a * params.gamma * pow(r, g1) / g1 - params.a / g1
}

/// Specific internal energy with `e(1) = 0`.
pub fn internal_energy(rho: f64, params: &FluidParams) -> Result<f64> {
    params.check_density(rho)?;
    let g1 = params.gamma - 1.0;
    Ok(params.a * (pow(rho, g1) - 1.0) / g1)
}

/// Bregman gap of the pressure potential: `P(rho) - P(r) - P'(r)(rho - r)`.
pub fn convexity_gap(rho: f64, r: f64, params: &FluidParams) -> Result<f64> {
    params.check_density(rho)?;
    params.check_density(r)?;
    Ok(convexity_gap_unchecked(rho, r, params))
}

#[inline]
pub(crate) fn convexity_gap_unchecked(rho: f64, r: f64, params: &FluidParams) -> f64 {
    potential_unchecked(rho, params)
        - potential_unchecked(r, params)
        - potential_derivative_unchecked(r, params) * (rho - r)
}

/// Bregman gap of the pressure itself: `p(rho) - p(r) - p'(r)(rho - r)`.
pub fn pressure_gap(rho: f64, r: f64, params: &FluidParams) -> Result<f64> {
    params.check_density(rho)?;
    params.check_density(r)?;
    Ok(params.pressure_unchecked(rho)
        - params.pressure_unchecked(r)
        - params.dpressure_unchecked(r) * (rho - r))
}

/// Sampled bounds `(c1, c2)` with `c1 <= pressure_gap / convexity_gap <= c2`
/// for reference densities in `[r_min, r_max]` and
/// `rho in [r_min / 2, 2 r_max]`, excluding the removable point `rho = r`.
pub fn pressure_gap_ratio_bounds(
    r_min: f64,
    r_max: f64,
    samples: usize,
    params: &FluidParams,
) -> Result<(f64, f64)> {
    if !(r_min > 0.0 && r_max >= r_min) || samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "ratio band [{r_min}, {r_max}] with {samples} samples"
        )));
    }
    let lo = 0.5 * r_min;
    let hi = 2.0 * r_max;
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    for ir in 0..samples {
        let r = r_min + (r_max - r_min) * ir as f64 / (samples - 1) as f64;
        for is in 0..samples {
            let rho = lo + (hi - lo) * is as f64 / (samples - 1) as f64;
            if (rho - r).abs() < 1e-6 * r {
                continue;
            }
            let ratio = pressure_gap(rho, r, params)? / convexity_gap(rho, r, params)?;
            c1 = c1.min(ratio);
            c2 = c2.max(ratio);
        }
    }
    Ok((c1, c2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, gamma: f64) -> FluidParams {
        FluidParams {
            a,
            gamma,
            ..FluidParams::default()
        }
    }

    /// Adaptive Simpson quadrature, independent of the closed forms above.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                left + right + delta / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn quadrature_potential(rho: f64, p: &FluidParams) -> f64 {
        let integrand = |s: f64| p.a * s.powf(p.gamma) / (s * s);
        rho * simpson(&integrand, 1.0, rho, 1e-14)
    }

    #[test]
    fn unit_density_pressure_is_a() {
        for (a, g) in [(1.0, 2.0), (3.5, 1.4), (0.2, 3.0)] {
            assert_eq!(pressure(1.0, &params(a, g)).unwrap(), a);
        }
    }

    #[test]
    fn non_integer_exponent_matches_root_oracle() {
        // 2^1.4 = 2 * 2^(2/5) = 2 * fifth root of 4
        let p = pressure(2.0, &params(1.0, 1.4)).unwrap();
        let oracle = 2.0 * 4f64.powf(0.2);
        assert!((p - (1.4 * 2f64.ln()).exp()).abs() < 1e-14);
        assert!((p - oracle).abs() < 1e-14);
    }

    #[test]
    fn floor_breach_is_an_error() {
        let p = FluidParams::default();
        assert!(matches!(pressure(1e-9, &p), Err(Error::Vacuum { .. })));
        assert!(matches!(
            convexity_gap(1.0, 0.0, &p),
            Err(Error::Vacuum { .. })
        ));
    }

    #[test]
    fn potential_values_against_quadrature() {
        let p = params(1.0, 2.0);
        assert_eq!(pressure_potential(1.0, &p).unwrap(), 0.0);
        let q2 = quadrature_potential(2.0, &p);
        assert!((q2 - 2.0).abs() < 1e-10);
        assert!((pressure_potential(2.0, &p).unwrap() - 2.0).abs() < 1e-14);
        let qh = quadrature_potential(0.5, &p);
        assert!((qh + 0.25).abs() < 1e-10);
        assert!((pressure_potential(0.5, &p).unwrap() + 0.25).abs() < 1e-14);
        assert!((convexity_gap(0.5, 1.0, &p).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn internal_energy_is_potential_per_mass() {
        let p = params(1.0, 2.0);
        assert_eq!(internal_energy(1.0, &p).unwrap(), 0.0);
        assert!((internal_energy(2.0, &p).unwrap() - 1.0).abs() < 1e-14);
        for g in [1.4, 2.0, 3.0] {
            let p = params(1.3, g);
            for k in 0..50 {
                let rho = 0.1 + 9.9 * k as f64 / 49.0;
                let lhs = rho * internal_energy(rho, &p).unwrap();
                let rhs = pressure_potential(rho, &p).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn convexity_gap_closed_form_cases() {
        let p = params(1.0, 2.0);
        assert_eq!(convexity_gap(1.7, 1.7, &p).unwrap(), 0.0);
        assert!((convexity_gap(2.0, 1.0, &p).unwrap() - 1.0).abs() < 1e-14);
        // quadrature route for P(2) - P(1) - P'(1)
        let dp1 =
            (quadrature_potential(1.0 + 1e-5, &p) - quadrature_potential(1.0 - 1e-5, &p)) / 2e-5;
        let gap = quadrature_potential(2.0, &p) - quadrature_potential(1.0, &p) - dp1;
        assert!((gap - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_law_gaps_are_squares() {
        let p = params(1.0, 2.0);
        for (rho, r) in [(0.3, 1.1), (2.5, 0.7), (1.0, 4.0)] {
            let d2: f64 = (rho - r) * (rho - r);
            assert!((pressure_gap(rho, r, &p).unwrap() - d2).abs() < 1e-13 * d2.max(1.0));
            assert!((convexity_gap(rho, r, &p).unwrap() - d2).abs() < 1e-13 * d2.max(1.0));
        }
    }

    #[test]
    fn second_derivative_of_potential_is_dp_over_rho() {
        let p = params(1.0, 1.4);
        for s in [0.3, 1.0, 2.7] {
            let mut errs = Vec::new();
            for h in [1e-2, 5e-3] {
                let d2 = (potential_derivative_unchecked(s + h, &p)
                    - potential_derivative_unchecked(s - h, &p))
                    / (2.0 * h);
                errs.push((d2 - p.dpressure_unchecked(s) / s).abs());
            }
            let order = (errs[0] / errs[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "order {order}");
        }
    }

    #[test]
    fn gap_ratio_is_bounded_and_positive() {
        let p = params(1.0, 1.4);
        let (c1, c2) = pressure_gap_ratio_bounds(0.8, 1.2, 81, &p).unwrap();
        assert!(c1 > 0.0 && c2.is_finite() && c1 <= c2);
        let p2 = params(1.0, 2.0);
        let (d1, d2) = pressure_gap_ratio_bounds(0.8, 1.2, 41, &p2).unwrap();
        assert!((d1 - 1.0).abs() < 1e-9 && (d2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FluidParams::new(1.0, 1.0, 2.0, 1.0, 1e-8).is_err());
        assert!(FluidParams::new(1.0, 0.5, 1.0, 1.0, 1e-8).is_err());
        assert!(FluidParams::new(0.0, 0.5, 2.0, 1.0, 1e-8).is_err());
        assert!(FluidParams::new(1.0, 0.5, 2.0, 1.0, 1e-8).is_ok());
        assert_eq!(FluidParams::default().lambda_of_rho(3.0), 0.0);
    }
}
