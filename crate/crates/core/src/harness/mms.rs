//! Manufactured-solution convergence studies.
//!
//! Each problem picks smooth exact fields, derives the forcing that makes
//! them solve the continuous equations by forward-mode differentiation, runs
//! the forced solver at several dyadic resolutions and fits the observed
//! order of the error.

use serde::{Deserialize, Serialize};

use super::dual::{derivative, partial, Dual, Scalar};
use crate::eos::FluidParams;
use crate::error::{Error, Result};
use crate::fields::{recover_u, AugmentedState1D, Grid1D, Grid3D, Stagger, State1D, State3D};
use crate::solver1d::{
    cfl_dt, cfl_dt_augmented, next_dt, step_augmented_forced, step_primitive_forced, Formulation,
    Scheme1DConfig, Source1D,
};
use crate::solver3d::{Scheme3DConfig, Source3D, Stepper3D};

use std::f64::consts::PI;

/// Errors below this on every field count as an exact reproduction.
pub const EXACT_TOL: f64 = 1e-12;
/// Observed orders below this are failures.
pub const MIN_ORDER: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOrder {
    pub name: String,
    /// Discrete L2 errors, one per resolution.
    pub errors: Vec<f64>,
    /// `log2(e_k / e_{k+1})` for successive resolutions.
    pub successive: Vec<f64>,
    /// Least-squares slope of `-log e` against `log n`.
    pub fitted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderVerdict {
    Pass,
    Exact,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub label: String,
    pub resolutions: Vec<usize>,
    pub fields: Vec<FieldOrder>,
    pub verdict: OrderVerdict,
}

impl OrderReport {
    pub fn from_errors(label: &str, resolutions: &[usize], fields: Vec<(&str, Vec<f64>)>) -> Self {
        let logn: Vec<f64> = resolutions.iter().map(|&n| (n as f64).ln()).collect();
        let fields: Vec<FieldOrder> = fields
            .into_iter()
            .map(|(name, errors)| {
                let successive = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
                let loge: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
                FieldOrder {
                    name: name.to_string(),
                    successive,
                    fitted: -slope(&logn, &loge),
                    errors,
                }
            })
            .collect();
        let exact = fields
            .iter()
            .all(|f| f.errors.iter().all(|&e| e < EXACT_TOL));
        let verdict = if exact {
            OrderVerdict::Exact
        } else if fields.iter().all(|f| f.fitted >= MIN_ORDER) {
            OrderVerdict::Pass
        } else {
            OrderVerdict::Fail
        };
        Self {
            label: label.to_string(),
            resolutions: resolutions.to_vec(),
            fields,
            verdict,
        }
    }

    pub fn min_order(&self) -> f64 {
        self.fields
            .iter()
            .map(|f| f.fitted)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_order(&self) -> f64 {
        self.fields
            .iter()
            .map(|f| f.fitted)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every fitted order lies in `[lo, hi]`.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.fields.iter().all(|f| f.fitted >= lo && f.fitted <= hi)
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .fields
            .iter()
            .map(|f| format!("{} {:.3}", f.name, f.fitted))
            .collect();
        format!("{} [{:?}]: {}", self.label, self.verdict, parts.join(", "))
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn check_dyadic(resolutions: &[usize]) -> Result<()> {
    if resolutions.len() < 3 {
        return Err(Error::InvalidParameter(
            "a convergence study needs at least three resolutions".into(),
        ));
    }
    if resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidParameter(format!(
            "resolutions {resolutions:?} must each double the previous one"
        )));
    }
    Ok(())
}

/// Time-dependent periodic 1D solution
/// `rho = 1 + 0.2 sin 2 pi (y - t)`, `u = 0.1 sin 2 pi y`, plus an
/// independent `w = 0.05 cos 2 pi (y - t)` for the augmented form.
#[derive(Debug, Clone, Copy)]
pub struct Wave1D {
    pub params: FluidParams,
}

impl Wave1D {
    pub fn rho<S: Scalar>(&self, y: S, t: S) -> S {
        S::cst(1.0) + S::cst(0.2) * (S::cst(2.0 * PI) * (y - t)).sin()
    }

    pub fn u<S: Scalar>(&self, y: S, _t: S) -> S {
        S::cst(0.1) * (S::cst(2.0 * PI) * y).sin()
    }

    pub fn w<S: Scalar>(&self, y: S, t: S) -> S {
        S::cst(0.05) * (S::cst(2.0 * PI) * (y - t)).cos()
    }

    pub fn v<S: Scalar>(&self, y: S, t: S) -> S {
        self.u(y, t) + S::cst(self.params.recovery_factor()) * self.w(y, t)
    }

    fn pressure<S: Scalar>(&self, r: S) -> S {
        S::cst(self.params.a) * r.powf(self.params.gamma)
    }

    fn dt<F>(&self, f: F, y: f64, t: f64) -> f64
    where
        F: Fn(Dual<f64>, Dual<f64>) -> Dual<f64>,
    {
        derivative(|tt| f(Dual::lift(y), tt), t)
    }

    fn dy<F>(&self, f: F, y: f64, t: f64) -> f64
    where
        F: Fn(Dual<f64>, Dual<f64>) -> Dual<f64>,
    {
        derivative(|yy| f(yy, Dual::lift(t)), y)
    }

    /// `d/dy` of a field at fixed `t`, generic so it can sit inside a flux.
    fn grad<S: Scalar>(&self, f: impl Fn(Dual<S>, Dual<S>) -> Dual<S>, y: S, t: S) -> S {
        derivative(|z| f(z, Dual::lift(t)), y)
    }

    pub fn mass_source(&self, y: f64, t: f64) -> f64 {
        self.dt(|y, t| self.rho(y, t), y, t) + self.dy(|y, t| self.rho(y, t) * self.u(y, t), y, t)
    }

    fn momentum_flux<S: Scalar>(&self, y: S, t: S) -> S {
        let (r, u) = (self.rho(y, t), self.u(y, t));
        let uy = self.grad(|y, t| self.u(y, t), y, t);
        r * u * u + self.pressure(r) - S::cst(2.0 * self.params.mu) * r * uy
    }

    pub fn momentum_source(&self, y: f64, t: f64) -> f64 {
        self.dt(|y, t| self.rho(y, t) * self.u(y, t), y, t)
            + self.dy(|y, t| self.momentum_flux(y, t), y, t)
    }

    fn coefficients(&self) -> (f64, f64, f64) {
        let p = &self.params;
        (
            2.0 * p.mu * (1.0 - p.kappa),
            2.0 * p.mu * p.coupling(),
            2.0 * p.kappa * p.mu,
        )
    }

    fn v_flux<S: Scalar>(&self, y: S, t: S) -> S {
        let (a_vv, a_vw, _) = self.coefficients();
        let (r, u, v) = (self.rho(y, t), self.u(y, t), self.v(y, t));
        let vy = self.grad(|y, t| self.v(y, t), y, t);
        let wy = self.grad(|y, t| self.w(y, t), y, t);
        r * v * u + self.pressure(r) - S::cst(a_vv) * r * vy + S::cst(a_vw) * r * wy
    }

    fn w_flux<S: Scalar>(&self, y: S, t: S) -> S {
        let (_, a_vw, a_ww) = self.coefficients();
        let (r, u, w) = (self.rho(y, t), self.u(y, t), self.w(y, t));
        let vy = self.grad(|y, t| self.v(y, t), y, t);
        let wy = self.grad(|y, t| self.w(y, t), y, t);
        r * w * u - S::cst(a_ww) * r * wy + S::cst(a_vw) * r * vy
    }

    pub fn v_source(&self, y: f64, t: f64) -> f64 {
        self.dt(|y, t| self.rho(y, t) * self.v(y, t), y, t)
            + self.dy(|y, t| self.v_flux(y, t), y, t)
    }

    pub fn w_source(&self, y: f64, t: f64) -> f64 {
        self.dt(|y, t| self.rho(y, t) * self.w(y, t), y, t)
            + self.dy(|y, t| self.w_flux(y, t), y, t)
    }
}

struct Wave1DSource {
    wave: Wave1D,
    formulation: Formulation,
}

impl Source1D for Wave1DSource {
    fn fill(&self, t: f64, grid: &Grid1D, out: &mut [Vec<f64>; 3]) {
        let n = grid.n();
        for (i, s) in out[0].iter_mut().enumerate().take(n) {
            *s = self.wave.mass_source(grid.cell_center(i), t);
        }
        for i in 0..n {
            let y = grid.face(i);
            match self.formulation {
                Formulation::Primitive => out[1][i] = self.wave.momentum_source(y, t),
                Formulation::Augmented => {
                    out[1][i] = self.wave.v_source(y, t);
                    out[2][i] = self.wave.w_source(y, t);
                }
            }
        }
    }
}

fn l2_1d(dy: f64, a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
    (a.iter()
        .enumerate()
        .map(|(i, x)| (x - b(i)).powi(2))
        .sum::<f64>()
        * dy)
        .sqrt()
}

/// 1D study on [`Wave1D`] up to `end_time`.
pub fn mms_1d(
    formulation: Formulation,
    resolutions: &[usize],
    end_time: f64,
    params: &FluidParams,
) -> Result<OrderReport> {
    check_dyadic(resolutions)?;
    let wave = Wave1D { params: *params };
    let source = Wave1DSource { wave, formulation };
    let scheme = Scheme1DConfig {
        end_time,
        formulation,
        ..Default::default()
    };
    let mut errs = [Vec::new(), Vec::new(), Vec::new()];
    for &n in resolutions {
        let grid = Grid1D::new(n)?;
        let exact_rho = |i: usize, t: f64| wave.rho(grid.cell_center(i), t);
        match formulation {
            Formulation::Primitive => {
                let mut s = State1D::from_fn(grid, |y| wave.rho(y, 0.0), |y| wave.u(y, 0.0));
                while s.t < end_time {
                    let dt = next_dt(cfl_dt(&s, params, &scheme)?, end_time - s.t);
                    s = step_primitive_forced(&s, dt, params, &scheme, Some(&source))?;
                }
                let t = s.t;
                errs[0].push(l2_1d(grid.dy(), &s.rho, |i| exact_rho(i, t)));
                errs[1].push(l2_1d(grid.dy(), &s.u, |i| wave.u(grid.face(i), t)));
            }
            Formulation::Augmented => {
                let face = |f: &dyn Fn(f64) -> f64| (0..n).map(|i| f(grid.face(i))).collect();
                let mut s = AugmentedState1D {
                    grid,
                    rho: (0..n).map(|i| exact_rho(i, 0.0)).collect(),
                    v: face(&|y| wave.v(y, 0.0)),
                    w: face(&|y| wave.w(y, 0.0)),
                    t: 0.0,
                };
                while s.t < end_time {
                    let dt = next_dt(cfl_dt_augmented(&s, params, &scheme)?, end_time - s.t);
                    s = step_augmented_forced(&s, dt, params, &scheme, Some(&source))?;
                }
                let t = s.t;
                let u = recover_u(&s.v, &s.w, params)?;
                errs[0].push(l2_1d(grid.dy(), &s.rho, |i| exact_rho(i, t)));
                errs[1].push(l2_1d(grid.dy(), &u, |i| wave.u(grid.face(i), t)));
                errs[2].push(l2_1d(grid.dy(), &s.w, |i| wave.w(grid.face(i), t)));
            }
        }
    }
    let [er, eu, ew] = errs;
    let mut fields = vec![("rho", er), ("u", eu)];
    let label = match formulation {
        Formulation::Primitive => "1d-primitive",
        Formulation::Augmented => {
            fields.push(("w", ew));
            "1d-augmented"
        }
    };
    Ok(OrderReport::from_errors(label, resolutions, fields))
}

/// Steady, genuinely three-dimensional solution compatible with full-slip
/// walls at `x1, x2 in {0, eps}` and periodic in `x3`.
#[derive(Debug, Clone, Copy)]
pub struct Steady3D {
    pub eps: f64,
    pub params: FluidParams,
}

impl Steady3D {
    /// Component `0` is the density, `1..=3` the velocity components.
    pub fn field<S: Scalar>(&self, c: usize, x: [S; 3]) -> S {
        let k = S::cst(PI / self.eps);
        let z = S::cst(2.0 * PI) * x[2];
        let (c1, s1) = ((k * x[0]).cos(), (k * x[0]).sin());
        let (c2, s2) = ((k * x[1]).cos(), (k * x[1]).sin());
        match c {
            0 => S::cst(1.0) + S::cst(0.1) * z.sin() + S::cst(0.05) * c1 * c2 * z.cos(),
            1 => S::cst(0.05) * s1 * c2 * z.cos(),
            2 => S::cst(-0.03) * c1 * s2 * z.sin(),
            _ => S::cst(0.1) * z.cos() + S::cst(0.02) * c1 * c2 * z.sin(),
        }
    }

    /// Flux of `a`-momentum through direction `b`:
    /// `rho u_a u_b + p delta_ab - mu rho (d_b u_a + d_a u_b)`.
    fn momentum_flux<S: Scalar>(&self, a: usize, b: usize, x: [S; 3]) -> S {
        let r = self.field(0, x);
        let (ua, ub) = (self.field(a + 1, x), self.field(b + 1, x));
        let dba = partial(|y| self.field(a + 1, y), x, b);
        let dab = partial(|y| self.field(b + 1, y), x, a);
        let mut f = r * ua * ub - S::cst(self.params.mu) * r * (dba + dab);
        if a == b {
            f = f + S::cst(self.params.a) * r.powf(self.params.gamma);
        }
        f
    }

    pub fn mass_source(&self, x: [f64; 3]) -> f64 {
        (0..3)
            .map(|b| partial(|y| self.field(0, y) * self.field(b + 1, y), x, b))
            .sum()
    }

    pub fn momentum_source(&self, a: usize, x: [f64; 3]) -> f64 {
        (0..3)
            .map(|b| partial(|y| self.momentum_flux(a, b, y), x, b))
            .sum()
    }

    pub fn state(&self, grid: Grid3D) -> State3D {
        State3D::from_fn(grid, |x| self.field(0, x), |c, x| self.field(c + 1, x))
    }
}

struct FrozenSource {
    forcing: [Vec<f64>; 4],
}

impl Source3D for FrozenSource {
    fn fill(&self, _t: f64, _grid: &Grid3D, out: &mut [Vec<f64>; 4]) {
        for (o, f) in out.iter_mut().zip(&self.forcing) {
            o.copy_from_slice(f);
        }
    }
}

fn sample(grid: &Grid3D, s: Stagger, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
    let mut out = grid.zeros();
    let [e1, e2, e3] = grid.extents(s);
    for k in 0..e3 as isize {
        for j in 0..e2 as isize {
            for i in 0..e1 as isize {
                out[grid.at(i, j, k)] = f(grid.position(s, i, j, k));
            }
        }
    }
    out
}

fn l2_3d(grid: &Grid3D, s: Stagger, a: &[f64], b: &[f64]) -> f64 {
    let [e1, e2, e3] = grid.extents(s);
    let mut sum = 0.0;
    for k in 0..e3 as isize {
        for j in 0..e2 as isize {
            for i in 0..e1 as isize {
                let o = grid.at(i, j, k);
                sum += (a[o] - b[o]).powi(2);
            }
        }
    }
    (sum * grid.cell_volume() / grid.volume()).sqrt()
}

fn advance_3d(
    state: &mut State3D,
    end_time: f64,
    params: &FluidParams,
    slabs: usize,
    source: &dyn Source3D,
) -> Result<()> {
    let scheme = Scheme3DConfig {
        end_time,
        slab_count: slabs,
        ..Default::default()
    };
    let mut stepper = Stepper3D::new(state.grid, slabs);
    while state.t < end_time {
        stepper.advance(state, end_time - state.t, params, &scheme, Some(source))?;
    }
    Ok(())
}

fn state_errors(grid: &Grid3D, s: &State3D, exact: &State3D) -> [f64; 4] {
    [
        l2_3d(grid, Stagger::Cell, &s.rho, &exact.rho),
        l2_3d(grid, Stagger::Face1, &s.u1, &exact.u1),
        l2_3d(grid, Stagger::Face2, &s.u2, &exact.u2),
        l2_3d(grid, Stagger::Face3, &s.u3, &exact.u3),
    ]
}

fn report_3d(
    label: &str,
    resolutions: &[usize],
    errs: Vec<[f64; 4]>,
    skip_cross: bool,
) -> OrderReport {
    let col = |c: usize| errs.iter().map(|e| e[c]).collect::<Vec<_>>();
    let mut fields = vec![("rho", col(0))];
    if !skip_cross {
        fields.push(("u1", col(1)));
        fields.push(("u2", col(2)));
    }
    fields.push(("u3", col(3)));
    OrderReport::from_errors(label, resolutions, fields)
}

/// 3D study on [`Steady3D`]; `resolutions` are `(n1, n3)` pairs, each
/// doubling the previous in both counts.
pub fn mms_3d(
    resolutions: &[(usize, usize)],
    eps: f64,
    end_time: f64,
    params: &FluidParams,
    slabs: usize,
) -> Result<OrderReport> {
    let n3s: Vec<usize> = resolutions.iter().map(|r| r.1).collect();
    check_dyadic(&n3s)?;
    check_dyadic(&resolutions.iter().map(|r| r.0).collect::<Vec<_>>())?;
    let sol = Steady3D {
        eps,
        params: *params,
    };
    let mut errs = Vec::new();
    for &(n1, n3) in resolutions {
        let grid = Grid3D::new(eps, n1, n3)?;
        let source = FrozenSource {
            forcing: [
                sample(&grid, Stagger::Cell, |x| sol.mass_source(x)),
                sample(&grid, Stagger::Face1, |x| sol.momentum_source(0, x)),
                sample(&grid, Stagger::Face2, |x| sol.momentum_source(1, x)),
                sample(&grid, Stagger::Face3, |x| sol.momentum_source(2, x)),
            ],
        };
        let exact = sol.state(grid);
        let mut s = exact.clone();
        advance_3d(&mut s, end_time, params, slabs, &source)?;
        errs.push(state_errors(&grid, &s, &exact));
    }
    Ok(report_3d("3d-steady", &n3s, errs, false))
}

struct ExtendedWaveSource {
    wave: Wave1D,
}

impl Source3D for ExtendedWaveSource {
    fn fill(&self, t: f64, grid: &Grid3D, out: &mut [Vec<f64>; 4]) {
        let sz = grid.sz();
        let axial = grid.axial();
        out[1].fill(0.0);
        out[2].fill(0.0);
        for k in 0..grid.n3() {
            let plane = grid.at(-1, -1, k as isize)..grid.at(-1, -1, k as isize) + sz;
            out[0][plane.clone()].fill(self.wave.mass_source(axial.cell_center(k), t));
            out[3][plane].fill(self.wave.momentum_source(axial.face(k), t));
        }
    }
}

/// [`Wave1D`] placed on the thin box, constant across the section, with
/// the forcing evaluated once per axial index.
pub fn mms_extended(
    n3s: &[usize],
    n1: usize,
    eps: f64,
    end_time: f64,
    params: &FluidParams,
) -> Result<OrderReport> {
    check_dyadic(n3s)?;
    let wave = Wave1D { params: *params };
    let source = ExtendedWaveSource { wave };
    let mut errs = Vec::new();
    for &n3 in n3s {
        let grid = Grid3D::new(eps, n1, n3)?;
        let at = |t: f64| {
            State3D::from_fn(
                grid,
                |x| wave.rho(x[2], t),
                |c, x| if c == 2 { wave.u(x[2], t) } else { 0.0 },
            )
        };
        let mut s = at(0.0);
        advance_3d(&mut s, end_time, params, 1, &source)?;
        errs.push(state_errors(&grid, &s, &at(s.t)));
    }
    Ok(report_3d("3d-extended", n3s, errs, true))
}

/// Uniform translation `rho = 1.3`, `u = (0, 0, 0.4)`, which every stepper
/// must reproduce to rounding; exercises the exact verdict.
pub fn mms_translation(n3s: &[usize], params: &FluidParams) -> Result<OrderReport> {
    check_dyadic(n3s)?;
    let mut errs = Vec::new();
    for &n3 in n3s {
        let grid = Grid3D::new(0.2, 2, n3)?;
        let exact = State3D::from_fn(grid, |_| 1.3, |c, _| if c == 2 { 0.4 } else { 0.0 });
        let mut s = exact.clone();
        let nothing = FrozenSource {
            forcing: [grid.zeros(), grid.zeros(), grid.zeros(), grid.zeros()],
        };
        advance_3d(&mut s, 0.01, params, 1, &nothing)?;
        errs.push(state_errors(&grid, &s, &exact));
    }
    Ok(report_3d("3d-translation", n3s, errs, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let r = OrderReport::from_errors("t", &[8, 16, 32], vec![("a", vec![1.0, 0.25, 0.0625])]);
        assert!((r.fields[0].fitted - 2.0).abs() < 1e-12);
        assert_eq!(r.fields[0].successive, vec![2.0, 2.0]);
        assert_eq!(r.verdict, OrderVerdict::Pass);
        let bad = OrderReport::from_errors("t", &[8, 16, 32], vec![("a", vec![1.0, 0.7, 0.5])]);
        assert_eq!(bad.verdict, OrderVerdict::Fail);
    }

    #[test]
    fn rejects_non_dyadic_resolutions() {
        let p = FluidParams::default();
        assert!(mms_1d(Formulation::Primitive, &[16, 32], 0.01, &p).is_err());
        assert!(mms_1d(Formulation::Primitive, &[16, 24, 48], 0.01, &p).is_err());
    }

    #[test]
    fn forcing_matches_finite_differences() {
        // the dual-number forcing against a centered-difference oracle
        let w = Wave1D {
            params: FluidParams::default(),
        };
        let (y, t, h) = (0.31, 0.02, 1e-4);
        let m = |y: f64, t: f64| w.rho(y, t) * w.u(y, t);
        let rho_t = (w.rho(y, t + h) - w.rho(y, t - h)) / (2.0 * h);
        let flux_y = (m(y + h, t) - m(y - h, t)) / (2.0 * h);
        assert!((w.mass_source(y, t) - (rho_t + flux_y)).abs() < 1e-6);

        let s = Steady3D {
            eps: 0.25,
            params: FluidParams::default(),
        };
        let x = [0.07, 0.11, 0.4];
        let div: f64 = (0..3)
            .map(|b| {
                let mut xp = x;
                let mut xm = x;
                xp[b] += h;
                xm[b] -= h;
                let f = |x: [f64; 3]| s.field(0, x) * s.field(b + 1, x);
                (f(xp) - f(xm)) / (2.0 * h)
            })
            .sum();
        assert!((s.mass_source(x) - div).abs() < 1e-6);
    }

    #[test]
    fn manufactured_fields_satisfy_the_wall_conditions() {
        let s = Steady3D {
            eps: 0.25,
            params: FluidParams::default(),
        };
        for &x2 in &[0.03, 0.1, 0.2] {
            for &wall in &[0.0, 0.25] {
                let x = [wall, x2, 0.3];
                assert!(s.field(1, x).abs() < 1e-15);
                // tangential components have no wall-normal derivative
                for c in [0, 2, 3] {
                    assert!(partial(|y| s.field(c, y), x, 0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn translation_is_exact() {
        let r = mms_translation(&[16, 32, 64], &FluidParams::default()).unwrap();
        assert_eq!(r.verdict, OrderVerdict::Exact);
    }
}
