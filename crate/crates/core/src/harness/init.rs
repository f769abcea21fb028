//! Initial data: axial base profiles and seeded perturbations of their
//! extension to the thin box.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eos::FluidParams;
use crate::error::{Error, Result};
use crate::fields::{Grid1D, Grid3D, Snapshot, State1D, State3D};

use super::config::{InitSection, Profile};

/// Axial modes in each random profile.
const MODES: usize = 3;

/// Base 1D state on `grid` described by the `init` section.
pub fn base_profile(init: &InitSection, grid: Grid1D) -> Result<State1D> {
    match init.profile {
        Profile::Uniform => Ok(State1D::uniform(grid, 1.0, 0.0)),
        Profile::Wave => {
            let m = init.mode as f64;
            let (ra, ua) = (init.rho_amplitude, init.u_amplitude);
            Ok(State1D::from_fn(
                grid,
                |y| 1.0 + ra * (2.0 * PI * m * y).sin(),
                |y| ua * (2.0 * PI * m * y).cos(),
            ))
        }
        Profile::Snapshot => {
            let path = init
                .snapshot
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("init.snapshot is not set".into()))?;
            let s = Snapshot::read(path)?.to_state1d()?;
            if s.grid.n() != grid.n() {
                return Err(Error::GridMismatch(format!(
                    "snapshot {} has {} cells, grid.n3 = {}",
                    path.display(),
                    s.grid.n(),
                    grid.n()
                )));
            }
            Ok(s)
        }
    }
}

/// Random periodic profile `sum_m a_m cos 2 pi m y + b_m sin 2 pi m y`,
/// scaled to unit maximum.
#[derive(Debug, Clone, PartialEq)]
struct AxialMode {
    cos: [f64; MODES],
    sin: [f64; MODES],
    scale: f64,
}

impl AxialMode {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut m = Self {
            cos: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)),
            sin: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)),
            scale: 1.0,
        };
        let peak = (0..1024)
            .map(|i| m.eval(i as f64 / 1024.0).abs())
            .fold(0.0, f64::max);
        m.scale = 1.0 / peak;
        m
    }

    fn eval(&self, y: f64) -> f64 {
        let mut s = 0.0;
        for j in 0..MODES {
            let a = 2.0 * PI * (j + 1) as f64 * y;
            s += self.cos[j] * a.cos() + self.sin[j] * a.sin();
        }
        self.scale * s
    }
}

/// Seeded perturbation shapes.
///
/// The density factor `chi(x3)` is axial; the velocity shapes are
/// cross-sectional modes compatible with full slip:
/// `psi1 = sin(k pi x1/e) cos(l pi x2/e) g1(x3)`,
/// `psi2 = cos(l pi x1/e) sin(k pi x2/e) g2(x3)`,
/// `psi3 = cos(k pi x1/e) cos(l pi x2/e) g3(x3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    chi: AxialMode,
    g: [AxialMode; 3],
    k: f64,
    l: f64,
}

impl Perturbation {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chi = AxialMode::draw(&mut rng);
        let g = std::array::from_fn(|_| AxialMode::draw(&mut rng));
        let k = rng.gen_range(1..=2) as f64;
        let l = rng.gen_range(1..=2) as f64;
        Self { chi, g, k, l }
    }

    pub fn chi(&self, x3: f64) -> f64 {
        self.chi.eval(x3)
    }

    pub fn psi(&self, c: usize, x: [f64; 3], eps: f64) -> f64 {
        let (a, b) = (PI * x[0] / eps, PI * x[1] / eps);
        let (k, l) = (self.k, self.l);
        match c {
            0 => (k * a).sin() * (l * b).cos() * self.g[0].eval(x[2]),
            1 => (l * a).cos() * (k * b).sin() * self.g[1].eval(x[2]),
            _ => (k * a).cos() * (l * b).cos() * self.g[2].eval(x[2]),
        }
    }
}

/// Extension of `base` to the thin box with density `rho(x3) (1 + delta chi)`
/// and velocity `(delta psi1, delta psi2, u(x3) + delta psi3)`.
///
/// `delta = 0` reproduces the exact extension bit for bit.
pub fn well_prepared_init(
    grid: Grid3D,
    base: &State1D,
    delta: f64,
    seed: u64,
    params: &FluidParams,
) -> Result<State3D> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must be >= 0"
        )));
    }
    if base.grid.n() != grid.n3() {
        return Err(Error::GridMismatch(format!(
            "base profile has {} cells, the axis has {}",
            base.grid.n(),
            grid.n3()
        )));
    }
    let p = Perturbation::new(seed);
    let eps = grid.eps();
    let mut s = State3D::from_fn(grid, |_| 1.0, |c, x| delta * p.psi(c, x, eps));
    let n = grid.n1() as isize;
    for k in 0..grid.n3() {
        let x3 = grid.axial().cell_center(k);
        let r = base.rho[k] * (1.0 + delta * p.chi(x3));
        for j in 0..n {
            for i in 0..n {
                let o = grid.at(i, j, k as isize);
                s.rho[o] = r;
                s.u3[o] += base.u[k];
            }
        }
    }
    s.t = base.t;
    s.fill_ghosts();
    let min = s.min_rho();
    if min < params.rho_floor {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} drives the initial density to {min:e}, below rho_floor"
        )));
    }
    Ok(s)
}
