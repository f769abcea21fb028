//! Flux building blocks shared by the 1D and 3D steppers.
//!
//! Both solvers assemble their fluxes through these helpers so that a 3D
//! state constant across the section reproduces the 1D arithmetic exactly.

#[inline(always)]
pub(crate) fn avg(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

/// Normal momentum flux at a cell center:
/// `avg(F) avg(u) + p - 2 mu rho du/dx`.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
pub(crate) fn normal_flux(
    f_lo: f64,
    f_hi: f64,
    u_lo: f64,
    u_hi: f64,
    p: f64,
    two_mu: f64,
    rho: f64,
    inv_dx: f64,
) -> f64 {
    avg(f_lo, f_hi) * avg(u_lo, u_hi) + p - two_mu * rho * ((u_hi - u_lo) * inv_dx)
}

/// Explicit update of a cell quantity.
#[inline(always)]
pub(crate) fn advance(q: f64, h: f64, rate: f64) -> f64 {
    q + h * rate
}

/// Explicit update of a face velocity through its momentum.
#[inline(always)]
pub(crate) fn advance_velocity(
    rho_lo: f64,
    rho_hi: f64,
    u: f64,
    h: f64,
    rate: f64,
    new_lo: f64,
    new_hi: f64,
) -> f64 {
    (avg(rho_lo, rho_hi) * u + h * rate) / avg(new_lo, new_hi)
}
