//! Primitive 3D stepping on the thin box with full-slip side walls and a
//! periodic axis.
//!
//! Each stage runs three sweeps over `x3`-planes: mass fluxes on faces, then
//! momentum fluxes on cell centers and edges, then the conservative update.
//! A sweep writes only its own planes, so planes can be split into slabs and
//! processed in parallel without changing a single bit of the result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eos::FluidParams;
use crate::error::{Error, Result};
use crate::fields::LANES;
use crate::fields::{Grid3D, Stagger, State3D};
use crate::solver1d::next_dt;
use crate::stencil::{advance, advance_velocity, avg, normal_flux};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scheme3DConfig {
    pub cfl_advective: f64,
    pub cfl_viscous: f64,
    pub end_time: f64,
    /// Number of equal output intervals over `[0, end_time]`.
    pub snapshots: usize,
    /// Number of contiguous `x3`-slabs processed in parallel; `1` is serial.
    pub slab_count: usize,
}

impl Default for Scheme3DConfig {
    fn default() -> Self {
        Self {
            cfl_advective: 0.4,
            cfl_viscous: 0.25,
            end_time: 0.25,
            snapshots: 100,
            slab_count: 1,
        }
    }
}

impl Scheme3DConfig {
    pub fn violations(&self, n3: Option<usize>) -> Vec<String> {
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
        if self.slab_count < 1 {
            out.push("slab_count must be >= 1".into());
        }
        if let Some(n3) = n3 {
            if self.slab_count > n3 {
                out.push(format!(
                    "slab_count = {} exceeds n3 = {n3}",
                    self.slab_count
                ));
            }
        }
        out
    }

    pub fn validate(&self, grid: &Grid3D) -> Result<()> {
        let v = self.violations(Some(grid.n3()));
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }

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

/// Fills ghost layers: wall-normal faces zeroed, everything else mirrored
/// evenly across walls, periodic wrap in `x3`.
pub fn apply_bc(state: &mut State3D) {
    state.fill_ghosts();
}

/// Largest stable step on the thin box.
///
/// Each cell pairs its sound speed with its lower faces, as in 1D. The
/// advective bound uses the smallest active spacing; the viscous bound
/// sums `1 / dx_d^2` over the active directions, which is what an explicit
/// three-dimensional diffusion step actually needs. A direction with a
/// single cell carries no gradients and is inactive, so a one-cell
/// cross-section reproduces the 1D limit exactly.
pub fn cfl_dt3(state: &State3D, params: &FluidParams, scheme: &Scheme3DConfig) -> Result<f64> {
    WaveBounds::of(state, params).dt(&state.grid, params, scheme)
}

/// The extremes of a state that fix its stable step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveBounds {
    pub min_rho: f64,
    pub max_rho: f64,
    /// `max(|u1|, |u2|, |u3|) + c` over cells, with lower-face velocities.
    pub max_speed: f64,
    /// Every interior value of the four fields is finite.
    pub finite: bool,
}

impl WaveBounds {
    const EMPTY: Self = Self {
        min_rho: f64::INFINITY,
        max_rho: f64::NEG_INFINITY,
        max_speed: 0.0,
        finite: true,
    };

    pub fn of(state: &State3D, params: &FluidParams) -> Self {
        let g = &state.grid;
        let (n, p) = (g.n1(), g.sz());
        let fields = [&state.rho[..], &state.u1[..], &state.u2[..], &state.u3[..]];
        (0..g.n3())
            .map(|k| {
                let o = (k + 1) * p;
                let [r, a, b, c] = fields.map(|f| &f[o..o + p]);
                plane_bounds(n, params, r, a, b, c)
            })
            .fold(Self::EMPTY, Self::merge)
    }

    fn merge(self, o: Self) -> Self {
        Self {
            min_rho: if o.min_rho < self.min_rho {
                o.min_rho
            } else {
                self.min_rho
            },
            max_rho: if o.max_rho > self.max_rho {
                o.max_rho
            } else {
                self.max_rho
            },
            max_speed: if o.max_speed > self.max_speed {
                o.max_speed
            } else {
                self.max_speed
            },
            finite: self.finite && o.finite,
        }
    }

    /// Rejects non-finite data and densities below the floor.
    pub fn check(&self, params: &FluidParams) -> Result<()> {
        if !self.finite {
            return Err(Error::NonFinite { field: "state" });
        }
        params.check_density(self.min_rho)
    }

    /// [`cfl_dt3`] of the state these bounds describe.
    pub fn dt(&self, grid: &Grid3D, params: &FluidParams, scheme: &Scheme3DConfig) -> Result<f64> {
        self.check(params)?;
        let (dx1, dx3) = (grid.dx1(), grid.dx3());
        let cross_active = grid.n1() > 1;
        let dx_min = if cross_active { dx1.min(dx3) } else { dx3 };
        let mut inv_sq = 1.0 / (dx3 * dx3);
        if cross_active {
            inv_sq += 2.0 / (dx1 * dx1);
        }
        let dt_adv = scheme.cfl_advective * dx_min / self.max_speed;
        let dt_visc = scheme.cfl_viscous / (2.0 * params.mu * self.max_rho * inv_sq);
        Ok(dt_adv.min(dt_visc))
    }
}

/// Calls `f(lane, rho, u1, u2, u3)` for every interior cell of a plane,
/// with `lane` cycling through `0..LANES`.
#[inline(always)]
fn for_interior(n: usize, fields: [&[f64]; 4], mut f: impl FnMut(usize, f64, f64, f64, f64)) {
    let sy = n + 3;
    let tail = n - n % LANES;
    for j in 1..=n {
        let o = j * sy + 1;
        let [r, a, b, c] = fields.map(|x| &x[o..o + n]);
        let chunks = r
            .chunks_exact(LANES)
            .zip(a.chunks_exact(LANES))
            .zip(b.chunks_exact(LANES))
            .zip(c.chunks_exact(LANES));
        for (((r, a), b), c) in chunks {
            for l in 0..LANES {
                f(l, r[l], a[l], b[l], c[l]);
            }
        }
        for t in tail..n {
            f(t - tail, r[t], a[t], b[t], c[t]);
        }
    }
}

/// Smallest density of one plane's interior cells and whether its values
/// are finite; the other fields of the result are left empty.
#[inline(always)]
#[allow(clippy::eq_op)]
fn plane_floor(n: usize, rho: &[f64], u1: &[f64], u2: &[f64], u3: &[f64]) -> WaveBounds {
    let mut lo = [f64::INFINITY; LANES];
    // x - x is 0 for finite x and NaN otherwise
    let mut nan = [0.0f64; LANES];
    for_interior(n, [rho, u1, u2, u3], |l, x, a, b, c| {
        lo[l] = if x < lo[l] { x } else { lo[l] };
        nan[l] += ((x - x) + (a - a)) + ((b - b) + (c - c));
    });
    WaveBounds {
        min_rho: lo
            .iter()
            .fold(f64::INFINITY, |m, &x| if x < m { x } else { m }),
        finite: nan.iter().sum::<f64>() == 0.0,
        ..WaveBounds::EMPTY
    }
}

/// Bounds of one plane's interior cells.
#[inline(always)]
fn plane_bounds(
    n: usize,
    params: &FluidParams,
    rho: &[f64],
    u1: &[f64],
    u2: &[f64],
    u3: &[f64],
) -> WaveBounds {
    let ag = params.a * params.gamma;
    if params.gamma == 2.0 {
        plane_bounds_with(n, rho, u1, u2, u3, |r| ag * r)
    } else {
        plane_bounds_with(n, rho, u1, u2, u3, |r| params.dpressure_unchecked(r))
    }
}

#[inline(always)]
#[allow(clippy::eq_op)]
fn plane_bounds_with(
    n: usize,
    rho: &[f64],
    u1: &[f64],
    u2: &[f64],
    u3: &[f64],
    dp: impl Fn(f64) -> f64,
) -> WaveBounds {
    let mut lo = [f64::INFINITY; LANES];
    let mut hi = [f64::NEG_INFINITY; LANES];
    let mut fast = [0.0f64; LANES];
    let mut nan = [0.0f64; LANES];
    for_interior(n, [rho, u1, u2, u3], |l, x, a, b, c| {
        let (aa, ba, ca) = (a.abs(), b.abs(), c.abs());
        let ab = if aa > ba { aa } else { ba };
        let s = if ab > ca { ab } else { ca } + dp(x).sqrt();
        lo[l] = if x < lo[l] { x } else { lo[l] };
        hi[l] = if x > hi[l] { x } else { hi[l] };
        fast[l] = if s > fast[l] { s } else { fast[l] };
        nan[l] += ((x - x) + (a - a)) + ((b - b) + (c - c));
    });
    let fold = |v: &[f64; LANES], init: f64, pick: fn(f64, f64) -> bool| {
        v.iter().fold(init, |m, &x| if pick(x, m) { x } else { m })
    };
    WaveBounds {
        min_rho: fold(&lo, f64::INFINITY, |x, m| x < m),
        max_rho: fold(&hi, f64::NEG_INFINITY, |x, m| x > m),
        max_speed: fold(&fast, 0.0, |x, m| x > m),
        finite: nan.iter().sum::<f64>() == 0.0,
    }
}

/// Forcing for manufactured-solution runs, on the padded layout:
/// `out[0]` mass at cells, `out[1..=3]` momentum components at their faces.
pub trait Source3D: Sync {
    fn fill(&self, t: f64, grid: &Grid3D, out: &mut [Vec<f64>; 4]);
}

// per-plane block offsets of the flux and stress scratch arrays
const F1: usize = 0;
const F2: usize = 1;
const F3: usize = 2;
const R1: usize = 3;
const R2: usize = 4;
const N_FLUX: usize = 5;
const S11: usize = 0;
const S22: usize = 1;
const S33: usize = 2;
const X12_1: usize = 3;
const X12_2: usize = 4;
const X13_1: usize = 5;
const X13_3: usize = 6;
const X23_2: usize = 7;
const X23_3: usize = 8;
const N_STRESS: usize = 9;

/// Planes of fluxes kept while sweeping a slab: a stage needs mass fluxes
/// of planes `k - 1..=k + 1` for the momentum fluxes of plane `k`, and
/// those of `k - 1..=k + 1` for its update.
const RING: usize = 4;

#[derive(Debug, Clone)]
struct Ring {
    flux: Vec<f64>,
    stress: Vec<f64>,
    drho: Vec<f64>,
}

impl Ring {
    fn new(p: usize) -> Self {
        Self {
            flux: vec![0.0; RING * N_FLUX * p],
            stress: vec![0.0; RING * N_STRESS * p],
            drho: vec![0.0; RING * p],
        }
    }
}

#[inline]
fn slot(k: isize) -> usize {
    k.rem_euclid(RING as isize) as usize
}

#[inline]
fn block(data: &[f64], i: usize, len: usize) -> &[f64] {
    &data[i * len..(i + 1) * len]
}

#[inline]
fn block_mut(data: &mut [f64], i: usize, len: usize) -> &mut [f64] {
    &mut data[i * len..(i + 1) * len]
}

/// Reusable scratch space for [`step3d`].
#[derive(Debug, Clone)]
pub struct Stepper3D {
    grid: Grid3D,
    slabs: usize,
    rings: Vec<Ring>,
    forcing: Option<[Vec<f64>; 4]>,
    zeros: Vec<f64>,
    masks: [Vec<bool>; 2],
    stage: Option<State3D>,
    spare: Option<State3D>,
}

impl Stepper3D {
    pub fn new(grid: Grid3D, slab_count: usize) -> Self {
        let slabs = slab_count.clamp(1, grid.n3());
        Self {
            grid,
            slabs,
            rings: (0..slabs).map(|_| Ring::new(grid.sz())).collect(),
            forcing: None,
            zeros: vec![0.0; grid.sz()],
            masks: inner_masks(&grid),
            stage: None,
            spare: None,
        }
    }

    fn check_grid(&self, state: &State3D) -> Result<()> {
        if state.grid != self.grid {
            return Err(Error::GridMismatch(
                "stepper built for a different grid".into(),
            ));
        }
        Ok(())
    }

    /// One midpoint step in place. Refuses steps above [`cfl_dt3`].
    /// Returns the bounds of the new state.
    pub fn step(
        &mut self,
        state: &mut State3D,
        dt: f64,
        params: &FluidParams,
        scheme: &Scheme3DConfig,
        source: Option<&dyn Source3D>,
    ) -> Result<WaveBounds> {
        self.check_grid(state)?;
        state.check_admissible(params)?;
        let bounds = WaveBounds::of(state, params);
        self.step_within(state, dt, &bounds, params, scheme, source)
    }

    /// As [`Self::step`] with the bounds of `state` supplied, usually the
    /// ones returned by the previous step.
    pub fn step_within(
        &mut self,
        state: &mut State3D,
        dt: f64,
        bounds: &WaveBounds,
        params: &FluidParams,
        scheme: &Scheme3DConfig,
        source: Option<&dyn Source3D>,
    ) -> Result<WaveBounds> {
        self.check_grid(state)?;
        let limit = bounds.dt(&self.grid, params, scheme)?;
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(Error::Cfl { dt, limit });
        }
        self.step_unchecked(state, dt, params, source)
    }

    /// One step of the largest admissible size not overshooting
    /// `state.t + remaining`. Returns the step taken.
    pub fn advance(
        &mut self,
        state: &mut State3D,
        remaining: f64,
        params: &FluidParams,
        scheme: &Scheme3DConfig,
        source: Option<&dyn Source3D>,
    ) -> Result<f64> {
        self.check_grid(state)?;
        state.check_finite()?;
        let dt = next_dt(cfl_dt3(state, params, scheme)?, remaining);
        self.step_unchecked(state, dt, params, source)?;
        Ok(dt)
    }

    fn step_unchecked(
        &mut self,
        state: &mut State3D,
        dt: f64,
        params: &FluidParams,
        source: Option<&dyn Source3D>,
    ) -> Result<WaveBounds> {
        let grid = self.grid;
        let mut stage = self
            .stage
            .take()
            .unwrap_or_else(|| State3D::uniform(grid, 1.0));
        let mut next = self
            .spare
            .take()
            .unwrap_or_else(|| State3D::uniform(grid, 1.0));
        let half = self.stage_update(
            state,
            state,
            state.t,
            0.5 * dt,
            params,
            source,
            &mut stage,
            false,
        );
        let result = half.check(params).and_then(|_| {
            let full = self.stage_update(
                state,
                &stage,
                state.t + 0.5 * dt,
                dt,
                params,
                source,
                &mut next,
                true,
            );
            full.check(params).map(|_| full)
        });
        if result.is_ok() {
            std::mem::swap(state, &mut next);
        }
        self.stage = Some(stage);
        self.spare = Some(next);
        result
    }

    /// `out = base + h * rates(eval)`, with ghosts refilled plane by plane. Returns the
    /// bounds of `out`; without `speeds` only its density floor and
    /// finiteness.
    #[allow(clippy::too_many_arguments)]
    fn stage_update(
        &mut self,
        base: &State3D,
        eval: &State3D,
        t: f64,
        h: f64,
        params: &FluidParams,
        source: Option<&dyn Source3D>,
        out: &mut State3D,
        speeds: bool,
    ) -> WaveBounds {
        let g = self.grid;
        let p = g.sz();
        match source {
            Some(s) => {
                let f = self
                    .forcing
                    .get_or_insert_with(|| [g.zeros(), g.zeros(), g.zeros(), g.zeros()]);
                s.fill(t, &g, f);
            }
            None => self.forcing = None,
        }
        let kern = Kernel::new(&g, params, eval, &self.masks);
        let upd = Update {
            kern: &kern,
            base,
            forcing: self.forcing.as_ref(),
            zeros: &self.zeros,
            h,
            speeds,
        };
        let per = g.n3().div_ceil(self.slabs) * p;
        let interior = p..p + g.n3() * p;
        let [rho, u1, u2, u3] = [&mut out.rho, &mut out.u1, &mut out.u2, &mut out.u3]
            .map(|f| f[interior.clone()].chunks_mut(per));
        let jobs = rho.zip(u1).zip(u2).zip(u3).zip(self.rings.iter_mut());
        let bounds = if self.slabs == 1 {
            jobs.enumerate()
                .map(|(s, ((((r, a), b), c), ring))| upd.slab(ring, s * per / p, [r, a, b, c]))
                .fold(WaveBounds::EMPTY, WaveBounds::merge)
        } else {
            jobs.enumerate()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|(s, ((((r, a), b), c), ring))| upd.slab(ring, s * per / p, [r, a, b, c]))
                .reduce(|| WaveBounds::EMPTY, WaveBounds::merge)
        };
        out.t = base.t + h;
        for f in [&mut out.rho, &mut out.u1, &mut out.u2, &mut out.u3] {
            g.wrap_x3(f);
        }
        bounds
    }
}

/// Read-only view of one stage's input plus the constants of the stencil.
struct Kernel<'a> {
    grid: Grid3D,
    n: usize,
    n3: usize,
    p: usize,
    inv1: f64,
    inv3: f64,
    two_mu: f64,
    params: &'a FluidParams,
    rho: &'a [f64],
    u1: &'a [f64],
    u2: &'a [f64],
    u3: &'a [f64],
    col_inner: &'a [bool],
    row_inner: &'a [bool],
}

/// `len` values of `a` starting at padded offset `o`.
#[inline(always)]
fn seg(a: &[f64], o: usize, len: usize) -> &[f64] {
    &a[o..o + len]
}

#[inline(always)]
fn seg_mut(a: &mut [f64], o: usize, len: usize) -> &mut [f64] {
    &mut a[o..o + len]
}

impl<'a> Kernel<'a> {
    fn new(g: &Grid3D, params: &'a FluidParams, s: &'a State3D, masks: &'a [Vec<bool>; 2]) -> Self {
        Self {
            grid: *g,
            n: g.n1(),
            n3: g.n3(),
            p: g.sz(),
            inv1: g.inv_dx1(),
            inv3: g.inv_dx3(),
            two_mu: 2.0 * params.mu,
            params,
            rho: &s.rho,
            u1: &s.u1,
            u2: &s.u2,
            u3: &s.u3,
            col_inner: &masks[0],
            row_inner: &masks[1],
        }
    }

    /// In-plane span from shifted `(i0, j0)` through `(i1, j1)` inclusive.
    #[inline]
    fn span(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> (usize, usize) {
        let sy = self.n + 3;
        let q0 = i0 + j0 * sy;
        (q0, i1 + j1 * sy + 1 - q0)
    }

    /// Face densities `R_d = avg(rho)` and mass fluxes `F_d = R_d u_d` on
    /// plane `k`.
    #[inline(always)]
    fn mass_fluxes(&self, k: usize, fl: &mut [f64]) {
        let (n, p) = (self.n, self.p);
        let sy = n + 3;
        let base = (k + 1) * p;
        let (rho, u1, u2, u3) = (self.rho, self.u1, self.u2, self.u3);
        let mut blocks = fl.chunks_exact_mut(p);
        let mut next = || blocks.next().expect("flux block");
        let (f1, f2, f3, r1, r2) = (next(), next(), next(), next(), next());

        let (q, m) = (1, p - 1);
        let (lo, hi, u) = (
            seg(rho, base + q - 1, m),
            seg(rho, base + q, m),
            seg(u1, base + q, m),
        );
        let (rf, f) = (seg_mut(r1, q, m), seg_mut(f1, q, m));
        for t in 0..m {
            rf[t] = avg(lo[t], hi[t]);
            f[t] = rf[t] * u[t];
        }

        let (q, m) = (sy, p - sy);
        let o = base + q;
        let (lo2, lo3, hi) = (seg(rho, o - sy, m), seg(rho, o - p, m), seg(rho, o, m));
        let (v2, v3) = (seg(u2, o, m), seg(u3, o, m));
        let (rf, g2, g3) = (seg_mut(r2, q, m), seg_mut(f2, q, m), seg_mut(f3, q, m));
        for t in 0..m {
            rf[t] = avg(lo2[t], hi[t]);
            g2[t] = rf[t] * v2[t];
            g3[t] = avg(lo3[t], hi[t]) * v3[t];
        }
    }

    /// Cell-centered normal fluxes and mass rate of plane `k`, given the
    /// mass fluxes of planes `k` and `k + 1`.
    #[inline(always)]
    fn cell_terms(&self, k: usize, fl: &[f64], fl_up: &[f64], st: &mut [f64], dr: &mut [f64]) {
        let a = self.params.a;
        if self.params.gamma == 2.0 {
            self.cell_terms_with(k, fl, fl_up, st, dr, |r| a * (r * r));
        } else {
            self.cell_terms_with(k, fl, fl_up, st, dr, |r| self.params.pressure_unchecked(r));
        }
    }

    #[inline(always)]
    fn cell_terms_with(
        &self,
        k: usize,
        fl: &[f64],
        fl_up: &[f64],
        st: &mut [f64],
        dr: &mut [f64],
        pressure: impl Fn(f64) -> f64,
    ) {
        let (n, p) = (self.n, self.p);
        let sy = n + 3;
        let (inv1, inv3, two_mu) = (self.inv1, self.inv3, self.two_mu);
        let (f1, f2, f3) = (block(fl, F1, p), block(fl, F2, p), block(fl, F3, p));
        let f3_up = block(fl_up, F3, p);
        let (s11, rest) = st[S11 * p..].split_at_mut(p);
        let (s22, rest) = rest.split_at_mut(p);
        let s33 = &mut rest[..p];

        let (q, m) = self.span(1, 1, n, n);
        let o = (k + 1) * p + q;
        let r = seg(self.rho, o, m);
        let (u1, u1r) = (seg(self.u1, o, m), seg(self.u1, o + 1, m));
        let (u2, u2u) = (seg(self.u2, o, m), seg(self.u2, o + sy, m));
        let (u3, u3u) = (seg(self.u3, o, m), seg(self.u3, o + p, m));
        let (a, ar) = (seg(f1, q, m), seg(f1, q + 1, m));
        let (b, bu) = (seg(f2, q, m), seg(f2, q + sy, m));
        let (c, cu) = (seg(f3, q, m), seg(f3_up, q, m));
        let (s1, s2, s3) = (seg_mut(s11, q, m), seg_mut(s22, q, m), seg_mut(s33, q, m));
        let d = seg_mut(dr, q, m);
        for t in 0..m {
            let rt = r[t];
            let pr = pressure(rt);
            s1[t] = normal_flux(a[t], ar[t], u1[t], u1r[t], pr, two_mu, rt, inv1);
            s2[t] = normal_flux(b[t], bu[t], u2[t], u2u[t], pr, two_mu, rt, inv1);
            s3[t] = normal_flux(c[t], cu[t], u3[t], u3u[t], pr, two_mu, rt, inv3);
            d[t] = -(((cu[t] - c[t]) * inv3 + (ar[t] - a[t]) * inv1) + (bu[t] - b[t]) * inv1);
        }
    }

    /// Edge fluxes of plane `k` from the mass fluxes of planes `k - 1` and
    /// `k`; x3-edges sit on its lower face. Convective parts vanish on wall
    /// edges.
    #[inline(always)]
    fn edge_terms(&self, k: usize, fl: &[f64], fl_dn: &[f64], st: &mut [f64]) {
        let (n, p) = (self.n, self.p);
        let sy = n + 3;
        let (inv1, inv3, two_mu) = (self.inv1, self.inv3, self.two_mu);
        let base = (k + 1) * p;
        let (b, bd) = (|c| block(fl, c, p), |c| block(fl_dn, c, p));
        let (f1, f2, f3, r1, r2) = (b(F1), b(F2), b(F3), b(R1), b(R2));
        let (f1_dn, f2_dn, r1_dn, r2_dn) = (bd(F1), bd(F2), bd(R1), bd(R2));

        let mut blocks = st[X12_1 * p..].chunks_exact_mut(p);
        let mut next = || blocks.next().expect("stress block");
        let (x12_1, x12_2, x13_1, x13_3, x23_2, x23_3) =
            (next(), next(), next(), next(), next(), next());

        // x1-x2 edges, all of them including the walls
        let (q, m) = self.span(1, 1, n + 1, n + 1);
        let o = base + q;
        let (ci, ri) = (seg_b(self.col_inner, q, m), seg_b(self.row_inner, q, m));
        let (re_lo, re_hi) = (seg(r1, q - sy, m), seg(r1, q, m));
        let (u1, u1m) = (seg(self.u1, o, m), seg(self.u1, o - sy, m));
        let (u2, u2w) = (seg(self.u2, o, m), seg(self.u2, o - 1, m));
        let (a, am) = (seg(f1, q, m), seg(f1, q - sy, m));
        let (b, bw) = (seg(f2, q, m), seg(f2, q - 1, m));
        let (x1, x2) = (seg_mut(x12_1, q, m), seg_mut(x12_2, q, m));
        for t in 0..m {
            let re = avg(re_lo[t], re_hi[t]);
            let d = 0.5 * ((u1[t] - u1m[t]) * inv1 + (u2[t] - u2w[t]) * inv1);
            let tau = two_mu * re * d;
            let c1 = avg(bw[t], b[t]) * avg(u1m[t], u1[t]);
            let c2 = avg(am[t], a[t]) * avg(u2w[t], u2[t]);
            x1[t] = if ci[t] { c1 } else { 0.0 } - tau;
            x2[t] = if ri[t] { c2 } else { 0.0 } - tau;
        }

        // x1-x3 edges
        let (q, m) = self.span(1, 1, n + 1, n);
        let o = base + q;
        let ci = seg_b(self.col_inner, q, m);
        let (re_lo, re_hi) = (seg(r1_dn, q, m), seg(r1, q, m));
        let (u1, u1l) = (seg(self.u1, o, m), seg(self.u1, o - p, m));
        let (u3, u3w) = (seg(self.u3, o, m), seg(self.u3, o - 1, m));
        let (a, ad) = (seg(f1, q, m), seg(f1_dn, q, m));
        let (c, cw) = (seg(f3, q, m), seg(f3, q - 1, m));
        let (x1, x3) = (seg_mut(x13_1, q, m), seg_mut(x13_3, q, m));
        for t in 0..m {
            let re = avg(re_lo[t], re_hi[t]);
            let d = 0.5 * ((u1[t] - u1l[t]) * inv3 + (u3[t] - u3w[t]) * inv1);
            let tau = two_mu * re * d;
            let c1 = avg(cw[t], c[t]) * avg(u1l[t], u1[t]);
            x1[t] = if ci[t] { c1 } else { 0.0 } - tau;
            x3[t] = avg(ad[t], a[t]) * avg(u3w[t], u3[t]) - tau;
        }

        // x2-x3 edges
        let (q, m) = self.span(1, 1, n, n + 1);
        let o = base + q;
        let ri = seg_b(self.row_inner, q, m);
        let (re_lo, re_hi) = (seg(r2_dn, q, m), seg(r2, q, m));
        let (u2, u2l) = (seg(self.u2, o, m), seg(self.u2, o - p, m));
        let (u3, u3m) = (seg(self.u3, o, m), seg(self.u3, o - sy, m));
        let (b, bd) = (seg(f2, q, m), seg(f2_dn, q, m));
        let (c, cm) = (seg(f3, q, m), seg(f3, q - sy, m));
        let (x2, x3) = (seg_mut(x23_2, q, m), seg_mut(x23_3, q, m));
        for t in 0..m {
            let re = avg(re_lo[t], re_hi[t]);
            let d = 0.5 * ((u2[t] - u2l[t]) * inv3 + (u3[t] - u3m[t]) * inv1);
            let tau = two_mu * re * d;
            let c2 = avg(cm[t], c[t]) * avg(u2l[t], u2[t]);
            x2[t] = if ri[t] { c2 } else { 0.0 } - tau;
            x3[t] = avg(bd[t], b[t]) * avg(u3m[t], u3[t]) - tau;
        }
    }
}

#[inline(always)]
fn seg_b(a: &[bool], o: usize, len: usize) -> &[bool] {
    &a[o..o + len]
}

/// Masks over the plane layout: `[col_inner, row_inner]`, true where the
/// shifted column (row) index lies in `2..=n`.
fn inner_masks(g: &Grid3D) -> [Vec<bool>; 2] {
    let (n, sy) = (g.n1(), g.sy());
    let inner = |x: usize| (2..=n).contains(&x);
    [
        (0..g.sz()).map(|q| inner(q % sy)).collect(),
        (0..g.sz()).map(|q| inner(q / sy)).collect(),
    ]
}

struct Update<'a> {
    kern: &'a Kernel<'a>,
    base: &'a State3D,
    forcing: Option<&'a [Vec<f64>; 4]>,
    /// Stands in for forcing when there is no source.
    zeros: &'a [f64],
    h: f64,
    /// Whether the new planes need full [`WaveBounds`].
    speeds: bool,
}

impl Update<'_> {
    /// Mass fluxes of plane `k`, periodic in `k`.
    #[inline(always)]
    fn fluxes(&self, ring: &mut Ring, k: isize) {
        let len = N_FLUX * self.kern.p;
        let w = k.rem_euclid(self.kern.n3 as isize) as usize;
        self.kern
            .mass_fluxes(w, block_mut(&mut ring.flux, slot(k), len));
    }

    /// Momentum fluxes and mass rate of plane `k`.
    #[inline(always)]
    fn momentum(&self, ring: &mut Ring, k: isize) {
        let p = self.kern.p;
        let len = N_FLUX * p;
        let w = k.rem_euclid(self.kern.n3 as isize) as usize;
        let Ring { flux, stress, drho } = ring;
        let fl = block(flux, slot(k), len);
        let st = block_mut(stress, slot(k), N_STRESS * p);
        let dr = block_mut(drho, slot(k), p);
        self.kern
            .cell_terms(w, fl, block(flux, slot(k + 1), len), st, dr);
        self.kern
            .edge_terms(w, fl, block(flux, slot(k - 1), len), st);
        if let Some(f) = self.forcing {
            let o = (w + 1) * p;
            for (d, s) in dr.iter_mut().zip(&f[0][o..o + p]) {
                *d += s;
            }
        }
    }

    /// Sweeps the planes of one slab starting at `k0`; `outs` holds their
    /// new values. Planes next to the slab are recomputed rather than
    /// shared, so every slab layout gives the same bits.
    fn slab(&self, ring: &mut Ring, k0: usize, outs: [&mut [f64]; 4]) -> WaveBounds {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature is present. No fused multiply-add is
            // enabled, so the wider vectors round exactly as the baseline.
            return unsafe { self.slab_avx2(ring, k0, outs) };
        }
        self.slab_baseline(ring, k0, outs)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    fn slab_avx2(&self, ring: &mut Ring, k0: usize, outs: [&mut [f64]; 4]) -> WaveBounds {
        self.slab_baseline(ring, k0, outs)
    }

    #[inline(always)]
    fn slab_baseline(&self, ring: &mut Ring, k0: usize, outs: [&mut [f64]; 4]) -> WaveBounds {
        let p = self.kern.p;
        let (k0, k1) = (k0 as isize, (k0 + outs[0].len() / p) as isize);
        for k in k0 - 2..k0 + 2 {
            self.fluxes(ring, k);
        }
        for k in k0 - 1..k0 + 1 {
            self.momentum(ring, k);
        }
        let [rho, u1, u2, u3] = outs;
        let mut bounds = WaveBounds::EMPTY;
        for k in k0..k1 {
            self.fluxes(ring, k + 2);
            self.momentum(ring, k + 1);
            let i = (k - k0) as usize;
            let [r, a, b, c] =
                [&mut *rho, &mut *u1, &mut *u2, &mut *u3].map(|f| block_mut(f, i, p));
            if self.forcing.is_some() {
                self.plane::<true>(ring, k, r, a, b, c);
            } else {
                self.plane::<false>(ring, k, r, a, b, c);
            }
            let n = self.kern.n;
            bounds = bounds.merge(if self.speeds {
                plane_bounds(n, self.kern.params, r, a, b, c)
            } else {
                plane_floor(n, r, a, b, c)
            });
            let g = &self.kern.grid;
            g.fill_wall_ghosts(Stagger::Cell, r);
            g.fill_wall_ghosts(Stagger::Face1, a);
            g.fill_wall_ghosts(Stagger::Face2, b);
            g.fill_wall_ghosts(Stagger::Face3, c);
        }
        bounds
    }

    /// New plane `k`. Spans run through the ghost columns between rows;
    /// those entries are overwritten by the wall rules or the ghost fill.
    #[inline(always)]
    fn plane<const FORCED: bool>(
        &self,
        ring: &Ring,
        k: isize,
        rho: &mut [f64],
        u1: &mut [f64],
        u2: &mut [f64],
        u3: &mut [f64],
    ) {
        let kern = self.kern;
        let (n, p) = (kern.n, kern.p);
        let sy = n + 3;
        let (inv1, inv3, h) = (kern.inv1, kern.inv3, self.h);
        let b = self.base;
        let base = (k.rem_euclid(kern.n3 as isize) as usize + 1) * p;
        let st = |k: isize, c: usize| block(block(&ring.stress, slot(k), N_STRESS * p), c, p);
        let (km, kp) = (k - 1, k + 1);
        let dr = block(&ring.drho, slot(k), p);
        let dr_dn = block(&ring.drho, slot(km), p);
        let src = |c: usize, o: usize, len: usize| match self.forcing {
            Some(f) => seg(&f[c], o, len),
            None => &self.zeros[..len],
        };

        let (q, m) = kern.span(1, 1, n, n);
        let o = base + q;
        let (r0, d, out) = (seg(&b.rho, o, m), seg(dr, q, m), seg_mut(rho, q, m));
        for t in 0..m {
            out[t] = advance(r0[t], h, d[t]);
        }
        let rho = &*rho;

        let (s11, x12_1, x13_1, x13_1_up) = (st(k, S11), st(k, X12_1), st(k, X13_1), st(kp, X13_1));
        let (q, m) = kern.span(2, 1, n, n);
        let o = base + q;
        let (s, sw) = (seg(s11, q, m), seg(s11, q - 1, m));
        let (x, xu) = (seg(x12_1, q, m), seg(x12_1, q + sy, m));
        let (z, zu) = (seg(x13_1, q, m), seg(x13_1_up, q, m));
        let (r0, r0w, u0) = (seg(&b.rho, o, m), seg(&b.rho, o - 1, m), seg(&b.u1, o, m));
        let (nr, nrw, f) = (seg(rho, q, m), seg(rho, q - 1, m), src(1, o, m));
        let out = seg_mut(u1, q, m);
        for t in 0..m {
            let dm = -(((s[t] - sw[t]) * inv1 + (xu[t] - x[t]) * inv1) + (zu[t] - z[t]) * inv3);
            let dm = if FORCED { dm + f[t] } else { dm };
            out[t] = advance_velocity(r0w[t], r0[t], u0[t], h, dm, nrw[t], nr[t]);
        }
        for j in 1..=n {
            u1[j * sy + 1] = 0.0;
            u1[j * sy + n + 1] = 0.0;
        }

        let (s22, x12_2, x23_2, x23_2_up) = (st(k, S22), st(k, X12_2), st(k, X23_2), st(kp, X23_2));
        if n > 1 {
            let (q, m) = kern.span(1, 2, n, n);
            let o = base + q;
            let (x, xe) = (seg(x12_2, q, m), seg(x12_2, q + 1, m));
            let (s, sm) = (seg(s22, q, m), seg(s22, q - sy, m));
            let (z, zu) = (seg(x23_2, q, m), seg(x23_2_up, q, m));
            let (r0, r0m, u0) = (seg(&b.rho, o, m), seg(&b.rho, o - sy, m), seg(&b.u2, o, m));
            let (nr, nrm, f) = (seg(rho, q, m), seg(rho, q - sy, m), src(2, o, m));
            let out = seg_mut(u2, q, m);
            for t in 0..m {
                let dm = -(((xe[t] - x[t]) * inv1 + (s[t] - sm[t]) * inv1) + (zu[t] - z[t]) * inv3);
                let dm = if FORCED { dm + f[t] } else { dm };
                out[t] = advance_velocity(r0m[t], r0[t], u0[t], h, dm, nrm[t], nr[t]);
            }
        }
        for i in 1..=n {
            u2[sy + i] = 0.0;
            u2[(n + 1) * sy + i] = 0.0;
        }

        let (s33, s33_dn, x13_3, x23_3) = (st(k, S33), st(km, S33), st(k, X13_3), st(k, X23_3));
        let (q, m) = kern.span(1, 1, n, n);
        let o = base + q;
        let (s, sd) = (seg(s33, q, m), seg(s33_dn, q, m));
        let (x, xe) = (seg(x13_3, q, m), seg(x13_3, q + 1, m));
        let (y, yu) = (seg(x23_3, q, m), seg(x23_3, q + sy, m));
        let (r0, r0l, u0) = (seg(&b.rho, o, m), seg(&b.rho, o - p, m), seg(&b.u3, o, m));
        let (nr, ddn, f) = (seg(rho, q, m), seg(dr_dn, q, m), src(3, o, m));
        let out = seg_mut(u3, q, m);
        for t in 0..m {
            let dm = -(((s[t] - sd[t]) * inv3 + (xe[t] - x[t]) * inv1) + (yu[t] - y[t]) * inv1);
            let dm = if FORCED { dm + f[t] } else { dm };
            let nr_dn = advance(r0l[t], h, ddn[t]);
            out[t] = advance_velocity(r0l[t], r0[t], u0[t], h, dm, nr_dn, nr[t]);
        }
    }
}

/// One midpoint step. Allocates scratch space; loops should hold a
/// [`Stepper3D`] instead.
pub fn step3d(
    state: &State3D,
    dt: f64,
    params: &FluidParams,
    scheme: &Scheme3DConfig,
) -> Result<State3D> {
    let mut next = state.clone();
    Stepper3D::new(state.grid, scheme.slab_count).step(&mut next, dt, params, scheme, None)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{extend_primitive, Grid1D, State1D};
    use crate::solver1d::{self, Scheme1DConfig};
    use std::f64::consts::PI;

    fn wavy(grid: Grid3D) -> State3D {
        let e = grid.eps();
        State3D::from_fn(
            grid,
            |x| {
                1.0 + 0.1 * (2.0 * PI * x[2]).sin()
                    + 0.05 * (PI * x[0] / e).cos() * (PI * x[1] / e).cos()
            },
            |c, x| match c {
                0 => 0.05 * (PI * x[0] / e).sin() * (PI * x[1] / e).cos() * (2.0 * PI * x[2]).cos(),
                1 => -0.03 * (PI * x[0] / e).cos() * (PI * x[1] / e).sin(),
                _ => 0.1 * (2.0 * PI * x[2]).cos() + 0.02 * (PI * x[0] / e).cos(),
            },
        )
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let p = FluidParams::default();
        let sc = Scheme3DConfig::default();
        let s = State3D::uniform(Grid3D::new(0.2, 4, 16).unwrap(), 1.0);
        let dt = cfl_dt3(&s, &p, &sc).unwrap();
        let next = step3d(&s, dt, &p, &sc).unwrap();
        assert_eq!(next.rho, s.rho);
        assert_eq!(next.u1, s.u1);
        assert_eq!(next.u3, s.u3);
    }

    #[test]
    fn extended_data_tracks_the_axial_solver_bitwise() {
        let p = FluidParams::default();
        let sc = Scheme3DConfig::default();
        let g1 = Grid1D::new(32).unwrap();
        let mut s1 = State1D::from_fn(
            g1,
            |y| 1.0 + 0.2 * (2.0 * PI * y).sin(),
            |y| 0.1 * (2.0 * PI * y).cos(),
        );
        let grid = Grid3D::new(0.3, 4, 32).unwrap();
        let mut s3 = extend_primitive(&s1, &grid).unwrap();
        let mut stepper = Stepper3D::new(grid, 1);
        for _ in 0..40 {
            let dt = cfl_dt3(&s3, &p, &sc).unwrap();
            stepper.step(&mut s3, dt, &p, &sc, None).unwrap();
            s1 = solver1d::step_primitive_unchecked(&s1, dt, &p, None).unwrap();
        }
        assert_eq!(s3.cross_section_variance(), 0.0);
        for (i, j) in [(0, 0), (3, 1), (2, 3)] {
            let (rho, u3) = s3.axial_profile(i, j);
            assert_eq!(rho, s1.rho);
            assert_eq!(u3, s1.u);
        }
        assert_eq!(s3.wall_normal_velocity(), 0.0);
    }

    #[test]
    fn conserves_mass_and_axial_momentum() {
        let p = FluidParams::default();
        let sc = Scheme3DConfig::default();
        let grid = Grid3D::new(0.25, 6, 16).unwrap();
        let mut s = wavy(grid);
        let (m0, q0) = (s.mass(), s.momentum3());
        let mut stepper = Stepper3D::new(grid, 1);
        for _ in 0..30 {
            let dt = cfl_dt3(&s, &p, &sc).unwrap();
            let before = s.mass();
            stepper.step(&mut s, dt, &p, &sc, None).unwrap();
            assert!(((s.mass() - before) / m0).abs() < 1e-12);
        }
        assert!(
            ((s.momentum3() - q0) / m0).abs() < 1e-12,
            "{} {}",
            s.momentum3(),
            q0
        );
        assert_eq!(s.wall_normal_velocity(), 0.0);
    }

    #[test]
    fn slab_decomposition_does_not_change_results() {
        let p = FluidParams::default();
        let sc = Scheme3DConfig::default();
        let grid = Grid3D::new(0.25, 4, 16).unwrap();
        let init = wavy(grid);
        let mut runs = Vec::new();
        for slabs in [1, 3, 16] {
            let mut s = init.clone();
            let mut stepper = Stepper3D::new(grid, slabs);
            for _ in 0..10 {
                let dt = cfl_dt3(&s, &p, &sc).unwrap();
                stepper.step(&mut s, dt, &p, &sc, None).unwrap();
            }
            runs.push(s);
        }
        assert_eq!(runs[0], runs[1]);
        assert_eq!(runs[0], runs[2]);
    }

    #[test]
    fn cfl_limits() {
        let p = FluidParams::default();
        let sc = Scheme3DConfig::default();
        let g = Grid3D::new(0.2, 8, 32).unwrap();
        let half = Grid3D::new(0.1, 8, 32).unwrap();
        let s = State3D::uniform(g, 1.0);
        let dt = cfl_dt3(&s, &p, &sc).unwrap();
        let (dx1, dx3) = (g.dx1(), g.dx3());
        let visc = 0.25 / (2.0 * (2.0 / (dx1 * dx1) + 1.0 / (dx3 * dx3)));
        assert!((dt - visc.min(0.4 * dx1 / 2f64.sqrt())).abs() < 1e-18);
        let dt_half = cfl_dt3(&State3D::uniform(half, 1.0), &p, &sc).unwrap();
        assert!(dt_half < 0.31 * dt);

        // one-cell cross-section on extended data reproduces the 1D limit
        let s1 = State1D::from_fn(
            Grid1D::new(32).unwrap(),
            |y| 1.5 + (2.0 * PI * y).sin() * 0.3,
            |y| y.cos(),
        );
        let s3 = extend_primitive(&s1, &Grid3D::new(0.5, 1, 32).unwrap()).unwrap();
        let dt1 = solver1d::cfl_dt(&s1, &p, &Scheme1DConfig::default()).unwrap();
        assert_eq!(cfl_dt3(&s3, &p, &sc).unwrap(), dt1);

        let mut bad = s.clone();
        assert!(matches!(
            step3d(&bad, 3.0 * dt, &p, &sc),
            Err(Error::Cfl { .. })
        ));
        bad.rho[g.at(2, 2, 2)] = 0.0;
        assert!(matches!(cfl_dt3(&bad, &p, &sc), Err(Error::Vacuum { .. })));
    }

    #[test]
    fn boundary_fill_examples() {
        let grid = Grid3D::new(0.3, 4, 8).unwrap();
        let mut s = wavy(grid);
        s.u1[grid.at(0, 1, 1)] = 3.0;
        apply_bc(&mut s);
        assert_eq!(s.u1[grid.at(0, 1, 1)], 0.0);
        for k in 0..8 {
            for t in 0..4 {
                assert_eq!(s.u2[grid.at(-1, t, k)], s.u2[grid.at(0, t, k)]);
                assert_eq!(s.u3[grid.at(4, t, k)], s.u3[grid.at(3, t, k)]);
            }
        }
        for j in 0..4 {
            for i in 0..4 {
                assert_eq!(s.rho[grid.at(i, j, -1)], s.rho[grid.at(i, j, 7)]);
                assert_eq!(s.rho[grid.at(i, j, 8)], s.rho[grid.at(i, j, 0)]);
            }
        }
    }
}
