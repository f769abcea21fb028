use crate::eos::FluidParams;
use crate::error::{Error, Result};

use super::grid::{Grid1D, Grid3D, Stagger, LANES};

/// 1D primitive state: cell densities and face velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct State1D {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
}

impl State1D {
    pub fn new(grid: Grid1D, rho: Vec<f64>, u: Vec<f64>, t: f64) -> Result<Self> {
        if rho.len() != grid.n() || u.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "1D state arrays ({}, {}) do not match n = {}",
                rho.len(),
                u.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, rho, u, t })
    }

    /// Samples density at cell centers and velocity at faces.
    pub fn from_fn(grid: Grid1D, rho: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> Self {
        let n = grid.n();
        Self {
            grid,
            rho: (0..n).map(|i| rho(grid.cell_center(i))).collect(),
            u: (0..n).map(|i| u(grid.face(i))).collect(),
            t: 0.0,
        }
    }

    pub fn uniform(grid: Grid1D, rho: f64, u: f64) -> Self {
        Self::from_fn(grid, |_| rho, |_| u)
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.grid.dy()
    }

    /// Total momentum `sum rho_face u dy`.
    pub fn momentum(&self) -> f64 {
        let n = self.grid.n();
        let mut m = 0.0;
        for i in 0..n {
            let rf = 0.5 * (self.rho[(i + n - 1) % n] + self.rho[i]);
            m += rf * self.u[i];
        }
        m * self.grid.dy()
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_admissible(&self, params: &FluidParams) -> Result<()> {
        check_finite(&self.rho, "rho")?;
        check_finite(&self.u, "u")?;
        params.check_density(self.min_rho())
    }
}

/// 1D state in augmented variables `(rho, v, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState1D {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

impl AugmentedState1D {
    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.grid.dy()
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_admissible(&self, params: &FluidParams) -> Result<()> {
        check_finite(&self.rho, "rho")?;
        check_finite(&self.v, "v")?;
        check_finite(&self.w, "w")?;
        params.check_density(self.min_rho())
    }
}

/// 3D primitive state on the staggered thin-box layout.
///
/// All arrays use the padded layout of [`Grid3D`]; `u1` lives on
/// [`Stagger::Face1`], `u2` on [`Stagger::Face2`], `u3` on [`Stagger::Face3`].
#[derive(Debug, Clone, PartialEq)]
pub struct State3D {
    pub grid: Grid3D,
    pub rho: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u3: Vec<f64>,
    pub t: f64,
}

impl State3D {
    pub fn uniform(grid: Grid3D, rho: f64) -> Self {
        let mut s = Self {
            grid,
            rho: vec![rho; grid.padded_len()],
            u1: grid.zeros(),
            u2: grid.zeros(),
            u3: grid.zeros(),
            t: 0.0,
        };
        s.fill_ghosts();
        s
    }

    /// Samples analytic fields at their staggered locations, then fills ghosts.
    pub fn from_fn(
        grid: Grid3D,
        rho: impl Fn([f64; 3]) -> f64,
        u: impl Fn(usize, [f64; 3]) -> f64,
    ) -> Self {
        let sample = |s: Stagger, f: &dyn Fn([f64; 3]) -> f64| {
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
        };
        let mut s = Self {
            grid,
            rho: sample(Stagger::Cell, &rho),
            u1: sample(Stagger::Face1, &|x| u(0, x)),
            u2: sample(Stagger::Face2, &|x| u(1, x)),
            u3: sample(Stagger::Face3, &|x| u(2, x)),
            t: 0.0,
        };
        s.fill_ghosts();
        s
    }

    pub fn velocity(&self, c: usize) -> &[f64] {
        match c {
            0 => &self.u1,
            1 => &self.u2,
            _ => &self.u3,
        }
    }

    /// Wall faces zeroed, evenly mirrored tangential data, periodic `x3`.
    pub fn fill_ghosts(&mut self) {
        let g = self.grid;
        g.fill_ghosts(Stagger::Cell, &mut self.rho);
        g.fill_ghosts(Stagger::Face1, &mut self.u1);
        g.fill_ghosts(Stagger::Face2, &mut self.u2);
        g.fill_ghosts(Stagger::Face3, &mut self.u3);
    }

    /// Largest wall-normal velocity magnitude on the wall faces.
    pub fn wall_normal_velocity(&self) -> f64 {
        let g = &self.grid;
        let n = g.n1() as isize;
        let mut m: f64 = 0.0;
        for k in 0..g.n3() as isize {
            for t in 0..n {
                m = m
                    .max(self.u1[g.at(0, t, k)].abs())
                    .max(self.u1[g.at(n, t, k)].abs())
                    .max(self.u2[g.at(t, 0, k)].abs())
                    .max(self.u2[g.at(t, n, k)].abs());
            }
        }
        m
    }

    /// Rejects data whose wall-normal velocity is not exactly zero.
    pub fn check_wall_compatible(&self) -> Result<()> {
        let m = self.wall_normal_velocity();
        if m == 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "initial data violates impermeability: |u.n| = {m:e} on a wall"
            )))
        }
    }

    /// Sum over interior cells of `f(offset)`, accumulated plane by plane in
    /// increasing `x3` order.
    pub(crate) fn sum_cells(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for k in 0..g.n3() as isize {
            let mut plane = 0.0;
            for j in 0..g.n2() as isize {
                let base = g.at(0, j, k);
                for i in 0..g.n1() {
                    plane += f(base + i);
                }
            }
            total += plane;
        }
        total
    }

    pub fn mass(&self) -> f64 {
        let rho = &self.rho;
        self.sum_cells(|o| rho[o]) * self.grid.cell_volume()
    }

    /// Total `x3`-momentum `sum rho_face u3 dV`.
    pub fn momentum3(&self) -> f64 {
        let sz = self.grid.sz();
        let (rho, u3) = (&self.rho, &self.u3);
        self.sum_cells(|o| 0.5 * (rho[o - sz] + rho[o]) * u3[o]) * self.grid.cell_volume()
    }

    pub fn min_rho(&self) -> f64 {
        self.rho_extrema().0
    }

    pub fn max_rho(&self) -> f64 {
        self.rho_extrema().1
    }

    /// `(min, max)` of the interior density.
    pub fn rho_extrema(&self) -> (f64, f64) {
        let mut lo = [f64::INFINITY; LANES];
        let mut hi = [f64::NEG_INFINITY; LANES];
        self.grid.for_cell_lanes(|o, live| {
            let r = &self.rho[o..o + LANES];
            for l in 0..LANES {
                let x = r[l];
                lo[l] = if live[l] && x < lo[l] { x } else { lo[l] };
                hi[l] = if live[l] && x > hi[l] { x } else { hi[l] };
            }
        });
        (
            lo.iter()
                .fold(f64::INFINITY, |m, &x| if x < m { x } else { m }),
            hi.iter()
                .fold(f64::NEG_INFINITY, |m, &x| if x > m { x } else { m }),
        )
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite(&self.rho, "rho")?;
        check_finite(&self.u1, "u1")?;
        check_finite(&self.u2, "u2")?;
        check_finite(&self.u3, "u3")
    }

    pub fn check_admissible(&self, params: &FluidParams) -> Result<()> {
        self.check_finite()?;
        params.check_density(self.min_rho())
    }

    /// Largest cross-sectional variance over all fields and `x3` positions.
    ///
    /// Measures how far the state is from being a function of `x3` alone.
    pub fn cross_section_variance(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for (s, data) in [
            (Stagger::Cell, &self.rho),
            (Stagger::Face1, &self.u1),
            (Stagger::Face2, &self.u2),
            (Stagger::Face3, &self.u3),
        ] {
            let [e1, e2, e3] = g.extents(s);
            let count = (e1 * e2) as f64;
            for k in 0..e3 as isize {
                // shifted by the first sample so identical planes give exactly 0
                let x0 = data[g.at(0, 0, k)];
                let (mut s1, mut s2) = (0.0, 0.0);
                for j in 0..e2 as isize {
                    for i in 0..e1 as isize {
                        let d = data[g.at(i, j, k)] - x0;
                        s1 += d;
                        s2 += d * d;
                    }
                }
                let mean = s1 / count;
                worst = worst.max((s2 / count - mean * mean).max(0.0));
            }
        }
        worst
    }

    /// Axial profile `(rho, u3)` read from the cross-section cell `(i, j)`.
    pub fn axial_profile(&self, i: isize, j: isize) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let n3 = g.n3() as isize;
        let rho = (0..n3).map(|k| self.rho[g.at(i, j, k)]).collect();
        let u3 = (0..n3).map(|k| self.u3[g.at(i, j, k)]).collect();
        (rho, u3)
    }
}

/// 1D augmented data placed on the 3D grid: `r(x) = rho(x3)`,
/// `V = (0, 0, v(x3))`, `W = (0, 0, w(x3))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub grid: Grid3D,
    pub r: Vec<f64>,
    pub v3: Vec<f64>,
    pub w3: Vec<f64>,
    pub t: f64,
}

#[allow(clippy::eq_op)]
pub(crate) fn check_finite(data: &[f64], field: &'static str) -> Result<()> {
    // x - x is 0 for finite x and NaN otherwise; lane sums vectorize
    let mut lanes = [0.0f64; 8];
    let chunks = data.chunks_exact(8);
    let tail: f64 = chunks.remainder().iter().map(|&x| x - x).sum();
    for c in chunks {
        for (l, &x) in lanes.iter_mut().zip(c) {
            *l += x - x;
        }
    }
    if lanes.iter().sum::<f64>() + tail == 0.0 {
        Ok(())
    } else {
        Err(Error::NonFinite { field })
    }
}
