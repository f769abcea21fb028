//! Periodic 1D reduced system, stepped in primitive `(rho, u)` or augmented
//! `(rho, v, w)` form with an explicit midpoint (two-stage) scheme.
//!
//! Density sits at cell centers, velocities on faces, and every update is in
//! conservative flux form, so mass and momentum change only by telescoping
//! sums. Convective fluxes are centered; the smooth, viscosity-dominated
//! regime does not need upwinding.

use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::eos::FluidParams;
use crate::error::{Error, Result};
use crate::fields::{augment_1d, primitive_1d, AugmentedState1D, Grid1D, State1D};
use crate::stencil::{advance, advance_velocity, avg, normal_flux};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    #[default]
    Primitive,
    Augmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scheme1DConfig {
    pub cfl_advective: f64,
    pub cfl_viscous: f64,
    pub end_time: f64,
    /// Number of equal output intervals over `[0, end_time]`; `0` emits
    /// only the initial and final states.
    pub snapshots: usize,
    pub formulation: Formulation,
}

impl Default for Scheme1DConfig {
    fn default() -> Self {
        Self {
            cfl_advective: 0.4,
            cfl_viscous: 0.25,
            end_time: 0.25,
            snapshots: 100,
            formulation: Formulation::Primitive,
        }
    }
}

impl Scheme1DConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("cfl_advective", self.cfl_advective),
            ("cfl_viscous", self.cfl_viscous),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                out.push(format!("{name} = {v} must lie in (0, 1]"));
            }
        }
        if !(self.end_time > 0.0 && self.end_time.is_finite()) {
            out.push(format!("end_time = {} must be > 0", self.end_time));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }

    /// Output times `t_1 < ... < t_N = end_time`.
    pub fn output_times(&self) -> Vec<f64> {
        let n = self.snapshots.max(1);
        (1..=n)
            .map(|j| {
                if j == n {
                    self.end_time
                } else {
                    self.end_time * j as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Time-step source terms, used by manufactured-solution runs.
///
/// `out[0]` receives the mass source at cell centers, `out[1]` the momentum
/// (or `v`-momentum) source at faces and, for augmented runs, `out[2]` the
/// `w`-momentum source at faces.
pub trait Source1D {
    fn fill(&self, t: f64, grid: &Grid1D, out: &mut [Vec<f64>; 3]);
}

fn stable_dt(
    grid: &Grid1D,
    rho: &[f64],
    u: &[f64],
    params: &FluidParams,
    cfl_adv: f64,
    cfl_visc: f64,
) -> Result<f64> {
    let mut max_rho = f64::NEG_INFINITY;
    let mut max_speed: f64 = 0.0;
    for (&r, &v) in rho.iter().zip(u) {
        params.check_density(r)?;
        max_rho = max_rho.max(r);
        max_speed = max_speed.max(v.abs() + params.dpressure_unchecked(r).sqrt());
    }
    let dy = grid.dy();
    let dt_adv = cfl_adv * dy / max_speed;
    let dt_visc = cfl_visc * dy * dy / (2.0 * params.mu * max_rho);
    Ok(dt_adv.min(dt_visc))
}

/// Largest stable step:
/// `min(cfl_adv dy / max(|u| + c), cfl_visc dy^2 / (2 mu max rho))`.
pub fn cfl_dt(state: &State1D, params: &FluidParams, scheme: &Scheme1DConfig) -> Result<f64> {
    stable_dt(
        &state.grid,
        &state.rho,
        &state.u,
        params,
        scheme.cfl_advective,
        scheme.cfl_viscous,
    )
}

/// [`cfl_dt`] evaluated on the recovered velocity of an augmented state.
pub fn cfl_dt_augmented(
    state: &AugmentedState1D,
    params: &FluidParams,
    scheme: &Scheme1DConfig,
) -> Result<f64> {
    let u = crate::fields::recover_u(&state.v, &state.w, params)?;
    stable_dt(
        &state.grid,
        &state.rho,
        &u,
        params,
        scheme.cfl_advective,
        scheme.cfl_viscous,
    )
}

fn check_dt(dt: f64, limit: f64) -> Result<()> {
    if dt > 0.0 && dt <= limit * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(Error::Cfl { dt, limit })
    }
}

/// Time derivatives `(d rho/dt, d(rho_face u)/dt)` of the primitive system.
pub(crate) fn primitive_rates(
    rho: &[f64],
    u: &[f64],
    params: &FluidParams,
    inv: f64,
    drho: &mut [f64],
    dmom: &mut [f64],
) {
    let n = rho.len();
    let two_mu = 2.0 * params.mu;
    let flux: Vec<f64> = (0..n)
        .map(|i| avg(rho[(i + n - 1) % n], rho[i]) * u[i])
        .collect();
    let mut normal = vec![0.0; n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let p = params.pressure_unchecked(rho[i]);
        normal[i] = normal_flux(flux[i], flux[ip], u[i], u[ip], p, two_mu, rho[i], inv);
    }
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        drho[i] = -((flux[ip] - flux[i]) * inv);
        dmom[i] = -((normal[i] - normal[im]) * inv);
    }
}

fn add_sources(rates: [&mut [f64]; 3], src: &[Vec<f64>; 3]) {
    for (r, s) in rates.into_iter().zip(src) {
        if s.len() == r.len() {
            for (a, b) in r.iter_mut().zip(s) {
                *a += b;
            }
        }
    }
}

/// One midpoint step of the primitive system.
pub fn step_primitive(
    state: &State1D,
    dt: f64,
    params: &FluidParams,
    scheme: &Scheme1DConfig,
) -> Result<State1D> {
    step_primitive_forced(state, dt, params, scheme, None)
}

pub fn step_primitive_forced(
    state: &State1D,
    dt: f64,
    params: &FluidParams,
    scheme: &Scheme1DConfig,
    source: Option<&dyn Source1D>,
) -> Result<State1D> {
    state.check_admissible(params)?;
    check_dt(dt, cfl_dt(state, params, scheme)?)?;
    step_primitive_unchecked(state, dt, params, source)
}

/// Midpoint step without the CFL gate; used when the step size is imposed
/// by a companion 3D run whose own limit is stricter.
pub(crate) fn step_primitive_unchecked(
    state: &State1D,
    dt: f64,
    params: &FluidParams,
    source: Option<&dyn Source1D>,
) -> Result<State1D> {
    let grid = state.grid;
    let n = grid.n();
    let inv = grid.inv_dy();
    let mut drho = vec![0.0; n];
    let mut dmom = vec![0.0; n];
    let mut src = [vec![0.0; n], vec![0.0; n], Vec::new()];

    let stage = |rho: &[f64],
                 u: &[f64],
                 t: f64,
                 drho: &mut [f64],
                 dmom: &mut [f64],
                 src: &mut [Vec<f64>; 3]| {
        primitive_rates(rho, u, params, inv, drho, dmom);
        if let Some(s) = source {
            s.fill(t, &grid, src);
            add_sources([drho, dmom, &mut []], src);
        }
    };
    let update = |h: f64, drho: &[f64], dmom: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let rho_new: Vec<f64> = (0..n).map(|i| advance(state.rho[i], h, drho[i])).collect();
        let u_new = (0..n)
            .map(|i| {
                let im = (i + n - 1) % n;
                advance_velocity(
                    state.rho[im],
                    state.rho[i],
                    state.u[i],
                    h,
                    dmom[i],
                    rho_new[im],
                    rho_new[i],
                )
            })
            .collect();
        (rho_new, u_new)
    };

    stage(
        &state.rho, &state.u, state.t, &mut drho, &mut dmom, &mut src,
    );
    let (rho_h, u_h) = update(0.5 * dt, &drho, &dmom);
    params.check_density(rho_h.iter().copied().fold(f64::INFINITY, f64::min))?;
    stage(
        &rho_h,
        &u_h,
        state.t + 0.5 * dt,
        &mut drho,
        &mut dmom,
        &mut src,
    );
    let (rho, u) = update(dt, &drho, &dmom);
    let next = State1D {
        grid,
        rho,
        u,
        t: state.t + dt,
    };
    next.check_admissible(params)?;
    Ok(next)
}

/// Time derivatives of `(rho, rho_face v, rho_face w)` for the augmented system.
pub(crate) fn augmented_rates(
    rho: &[f64],
    v: &[f64],
    w: &[f64],
    params: &FluidParams,
    inv: f64,
    rates: [&mut [f64]; 3],
) {
    let n = rho.len();
    let s = params.recovery_factor();
    let c = params.coupling();
    let a_vv = 2.0 * params.mu * (1.0 - params.kappa);
    let a_vw = 2.0 * params.mu * c;
    let a_ww = 2.0 * params.kappa * params.mu;
    let flux: Vec<f64> = (0..n)
        .map(|i| avg(rho[(i + n - 1) % n], rho[i]) * (v[i] - s * w[i]))
        .collect();
    let mut sv = vec![0.0; n];
    let mut sw = vec![0.0; n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let fa = avg(flux[i], flux[ip]);
        let dv = (v[ip] - v[i]) * inv;
        let dw = (w[ip] - w[i]) * inv;
        let p = params.pressure_unchecked(rho[i]);
        sv[i] = fa * avg(v[i], v[ip]) + p - (a_vv * rho[i] * dv - a_vw * rho[i] * dw);
        sw[i] = fa * avg(w[i], w[ip]) - (a_ww * rho[i] * dw - a_vw * rho[i] * dv);
    }
    let [drho, dmv, dmw] = rates;
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        drho[i] = -((flux[ip] - flux[i]) * inv);
        dmv[i] = -((sv[i] - sv[im]) * inv);
        dmw[i] = -((sw[i] - sw[im]) * inv);
    }
}

/// One midpoint step of the augmented system.
pub fn step_augmented(
    state: &AugmentedState1D,
    dt: f64,
    params: &FluidParams,
    scheme: &Scheme1DConfig,
) -> Result<AugmentedState1D> {
    step_augmented_forced(state, dt, params, scheme, None)
}

pub fn step_augmented_forced(
    state: &AugmentedState1D,
    dt: f64,
    params: &FluidParams,
    scheme: &Scheme1DConfig,
    source: Option<&dyn Source1D>,
) -> Result<AugmentedState1D> {
    state.check_admissible(params)?;
    check_dt(dt, cfl_dt_augmented(state, params, scheme)?)?;
    let grid = state.grid;
    let n = grid.n();
    let inv = grid.inv_dy();
    let mut r = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut src = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];

    let stage = |rho: &[f64],
                 v: &[f64],
                 w: &[f64],
                 t: f64,
                 r: &mut [Vec<f64>; 3],
                 src: &mut [Vec<f64>; 3]| {
        let [a, b, c] = r;
        augmented_rates(rho, v, w, params, inv, [a, b, c]);
        if let Some(s) = source {
            s.fill(t, &grid, src);
            let [a, b, c] = r;
            add_sources([a, b, c], src);
        }
    };
    let update = |h: f64, r: &[Vec<f64>; 3]| -> AugmentedState1D {
        let rho_new: Vec<f64> = (0..n).map(|i| advance(state.rho[i], h, r[0][i])).collect();
        let face = |q: &[f64], rate: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let im = (i + n - 1) % n;
                    advance_velocity(
                        state.rho[im],
                        state.rho[i],
                        q[i],
                        h,
                        rate[i],
                        rho_new[im],
                        rho_new[i],
                    )
                })
                .collect()
        };
        AugmentedState1D {
            grid,
            v: face(&state.v, &r[1]),
            w: face(&state.w, &r[2]),
            rho: rho_new,
            t: state.t + h,
        }
    };

    stage(&state.rho, &state.v, &state.w, state.t, &mut r, &mut src);
    let half = update(0.5 * dt, &r);
    half.check_admissible(params)?;
    stage(&half.rho, &half.v, &half.w, half.t, &mut r, &mut src);
    let next = update(dt, &r);
    next.check_admissible(params)?;
    Ok(next)
}

/// One row of the per-step scalar log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow1D {
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub kappa_entropy: f64,
    /// `max |d^2 log rho / dy^2|`, monitored rather than assumed bounded.
    pub max_d2_log_rho: f64,
}

impl StepRow1D {
    pub const HEADER: [&'static str; 5] = ["t", "mass", "momentum", "E_kappa", "max_d2_log_rho"];

    pub fn record(state: &State1D, params: &FluidParams) -> Result<Self> {
        let k = entropy::kappa_entropy_1d(state, params)?;
        Ok(Self {
            t: state.t,
            mass: state.mass(),
            momentum: state.momentum(),
            kappa_entropy: k.energy,
            max_d2_log_rho: max_d2_log_rho(state),
        })
    }
}

pub fn max_d2_log_rho(state: &State1D) -> f64 {
    let n = state.grid.n();
    let inv = state.grid.inv_dy();
    let l: Vec<f64> = state.rho.iter().map(|r| r.ln()).collect();
    (0..n)
        .map(|i| ((l[(i + 1) % n] - 2.0 * l[i] + l[(i + n - 1) % n]) * inv * inv).abs())
        .fold(0.0, f64::max)
}

/// Result of [`run1d`]: states at the output times plus per-step scalars.
#[derive(Debug, Clone)]
pub struct Trajectory1D {
    /// Primitive states at `t = 0` and at every output time.
    pub snapshots: Vec<State1D>,
    /// Augmented states at the same times, for augmented runs.
    pub augmented: Vec<AugmentedState1D>,
    pub rows: Vec<StepRow1D>,
    pub steps: usize,
}

/// Steps from `init` to `scheme.end_time`, landing exactly on every output time.
pub fn run1d(
    init: &State1D,
    scheme: &Scheme1DConfig,
    params: &FluidParams,
) -> Result<Trajectory1D> {
    run1d_forced(init, scheme, params, None)
}

pub fn run1d_forced(
    init: &State1D,
    scheme: &Scheme1DConfig,
    params: &FluidParams,
    source: Option<&dyn Source1D>,
) -> Result<Trajectory1D> {
    scheme.validate()?;
    params.validate()?;
    init.check_admissible(params)?;
    let t0 = init.t;
    let targets: Vec<f64> = scheme.output_times().into_iter().map(|t| t0 + t).collect();
    let mut traj = Trajectory1D {
        snapshots: vec![init.clone()],
        augmented: Vec::new(),
        rows: vec![StepRow1D::record(init, params)?],
        steps: 0,
    };
    match scheme.formulation {
        Formulation::Primitive => {
            let mut s = init.clone();
            for &target in &targets {
                while s.t < target {
                    let dt = next_dt(cfl_dt(&s, params, scheme)?, target - s.t);
                    s = step_primitive_forced(&s, dt, params, scheme, source)?;
                    if target - s.t <= 1e-12 * target.abs().max(1.0) {
                        s.t = target;
                    }
                    traj.steps += 1;
                    traj.rows.push(StepRow1D::record(&s, params)?);
                }
                traj.snapshots.push(s.clone());
            }
        }
        Formulation::Augmented => {
            let mut a = augment_1d(init, params)?;
            traj.augmented.push(a.clone());
            for &target in &targets {
                while a.t < target {
                    let dt = next_dt(cfl_dt_augmented(&a, params, scheme)?, target - a.t);
                    a = step_augmented_forced(&a, dt, params, scheme, source)?;
                    if target - a.t <= 1e-12 * target.abs().max(1.0) {
                        a.t = target;
                    }
                    traj.steps += 1;
                    let prim = primitive_1d(&a, params)?;
                    let mut row = StepRow1D::record(&prim, params)?;
                    row.kappa_entropy = entropy::kappa_entropy_augmented_1d(&a, params)?;
                    traj.rows.push(row);
                }
                traj.snapshots.push(primitive_1d(&a, params)?);
                traj.augmented.push(a.clone());
            }
        }
    }
    Ok(traj)
}

/// Step size that reaches `remaining` without leaving a sliver step behind.
pub(crate) fn next_dt(limit: f64, remaining: f64) -> f64 {
    if remaining <= limit {
        remaining
    } else if remaining < 2.0 * limit {
        0.5 * remaining
    } else {
        limit
    }
}
