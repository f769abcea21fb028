use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block width of the vectorized interior reductions.
pub(crate) const LANES: usize = 8;

/// Periodic uniform grid on `(0, 1)`.
///
/// Cell `i` is centered at `(i + 1/2) dy`; velocity face `i` sits at `i dy`,
/// the left face of cell `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 8;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_CELLS {
            return Err(Error::InvalidParameter(format!(
                "1D grid needs at least {} cells, got {n}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub(crate) fn inv_dy(&self) -> f64 {
        self.n as f64
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dy()
    }

    pub fn face(&self, i: usize) -> f64 {
        i as f64 * self.dy()
    }
}

/// Location of a 3D field on the staggered arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stagger {
    /// Cell centers (density, pressure, log-density).
    Cell,
    /// Faces normal to `x1`; walls at `i = 0` and `i = n1`.
    Face1,
    /// Faces normal to `x2`; walls at `j = 0` and `j = n2`.
    Face2,
    /// Faces normal to `x3`; periodic, face `k` is the lower face of cell `k`.
    Face3,
}

impl Stagger {
    pub fn name(&self) -> &'static str {
        match self {
            Stagger::Cell => "cell",
            Stagger::Face1 => "face1",
            Stagger::Face2 => "face2",
            Stagger::Face3 => "face3",
        }
    }
}

/// Thin box `(0, eps)^2 x (0, 1)`: wall-bounded in `x1`, `x2`, periodic in `x3`.
///
/// All staggered fields share one padded layout with a single ghost layer,
/// so neighbour offsets are identical across fields. Along `x1` and `x2`
/// the layout holds indices `-1..=n+1`; along `x3` it holds `-1..=n3`.
/// The `x3` index is slowest, so a run of `x3`-planes is one contiguous
/// block of memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3D {
    eps: f64,
    n1: usize,
    n3: usize,
}

impl Grid3D {
    pub fn new(eps: f64, n1: usize, n3: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be > 0")));
        }
        if n1 < 1 {
            return Err(Error::InvalidParameter("n1 must be >= 1".into()));
        }
        if n3 < Grid1D::MIN_CELLS {
            return Err(Error::InvalidParameter(format!(
                "n3 = {n3} must be >= {}",
                Grid1D::MIN_CELLS
            )));
        }
        Ok(Self { eps, n1, n3 })
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }
    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }
    #[inline]
    pub fn n2(&self) -> usize {
        self.n1
    }
    #[inline]
    pub fn n3(&self) -> usize {
        self.n3
    }
    #[inline]
    pub fn dx1(&self) -> f64 {
        self.eps / self.n1 as f64
    }
    #[inline]
    pub fn dx2(&self) -> f64 {
        self.dx1()
    }
    #[inline]
    pub fn dx3(&self) -> f64 {
        1.0 / self.n3 as f64
    }
    #[inline]
    pub(crate) fn inv_dx1(&self) -> f64 {
        self.n1 as f64 / self.eps
    }
    #[inline]
    pub(crate) fn inv_dx3(&self) -> f64 {
        self.n3 as f64
    }

    /// `|Omega_eps| = eps^2`.
    #[inline]
    pub fn volume(&self) -> f64 {
        self.eps * self.eps
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx1() * self.dx2() * self.dx3()
    }

    /// The axial grid shared with the 1D reduced problem.
    pub fn axial(&self) -> Grid1D {
        Grid1D { n: self.n3 }
    }

    #[inline]
    pub fn sx(&self) -> usize {
        1
    }
    #[inline]
    pub fn sy(&self) -> usize {
        self.n1 + 3
    }
    #[inline]
    pub fn sz(&self) -> usize {
        (self.n1 + 3) * (self.n1 + 3)
    }
    /// Number of slots in one padded field.
    #[inline]
    pub fn padded_len(&self) -> usize {
        self.sz() * (self.n3 + 2)
    }

    /// Flat offset of logical index `(i, j, k)`; each index may be `-1`.
    #[inline]
    pub fn at(&self, i: isize, j: isize, k: isize) -> usize {
        ((i + 1) as usize) + ((j + 1) as usize) * self.sy() + ((k + 1) as usize) * self.sz()
    }

    /// Interior extents `[n1', n2', n3']` of a field with the given stagger.
    pub fn extents(&self, s: Stagger) -> [usize; 3] {
        match s {
            Stagger::Cell | Stagger::Face3 => [self.n1, self.n1, self.n3],
            Stagger::Face1 => [self.n1 + 1, self.n1, self.n3],
            Stagger::Face2 => [self.n1, self.n1 + 1, self.n3],
        }
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.padded_len()]
    }

    /// Physical coordinates of logical index `(i, j, k)` for a stagger.
    pub fn position(&self, s: Stagger, i: isize, j: isize, k: isize) -> [f64; 3] {
        let (dx, dz) = (self.dx1(), self.dx3());
        let c = |n: isize, h: f64| (n as f64 + 0.5) * h;
        let f = |n: isize, h: f64| n as f64 * h;
        match s {
            Stagger::Cell => [c(i, dx), c(j, dx), c(k, dz)],
            Stagger::Face1 => [f(i, dx), c(j, dx), c(k, dz)],
            Stagger::Face2 => [c(i, dx), f(j, dx), c(k, dz)],
            Stagger::Face3 => [c(i, dx), c(j, dx), f(k, dz)],
        }
    }

    /// Copies the interior of a padded field into a dense row-major array
    /// (index `i + n1' * (j + n2' * k)`).
    pub fn pack(&self, s: Stagger, padded: &[f64]) -> Vec<f64> {
        let [e1, e2, e3] = self.extents(s);
        let mut out = Vec::with_capacity(e1 * e2 * e3);
        for k in 0..e3 as isize {
            for j in 0..e2 as isize {
                let base = self.at(0, j, k);
                out.extend_from_slice(&padded[base..base + e1]);
            }
        }
        out
    }

    /// Inverse of [`Grid3D::pack`]; ghost slots are left zero.
    pub fn unpack(&self, s: Stagger, dense: &[f64]) -> Result<Vec<f64>> {
        let [e1, e2, e3] = self.extents(s);
        if dense.len() != e1 * e2 * e3 {
            return Err(Error::GridMismatch(format!(
                "{} field has {} values, expected {}",
                s.name(),
                dense.len(),
                e1 * e2 * e3
            )));
        }
        let mut out = self.zeros();
        for k in 0..e3 {
            for j in 0..e2 {
                let base = self.at(0, j as isize, k as isize);
                let src = (k * e2 + j) * e1;
                out[base..base + e1].copy_from_slice(&dense[src..src + e1]);
            }
        }
        Ok(out)
    }

    /// Interior-cell mask over one padded plane.
    pub(crate) fn cell_mask(&self) -> Vec<bool> {
        let (n, sy) = (self.n1, self.sy());
        (0..self.sz())
            .map(|q| (1..=n).contains(&(q % sy)) && (1..=n).contains(&(q / sy)))
            .collect()
    }

    /// Calls `f(offset, live)` on blocks of [`LANES`] consecutive padded
    /// offsets, plane by plane, with `live` marking interior cells. The last
    /// block of a plane may overlap the previous one, so `f` must tolerate
    /// seeing a cell twice.
    pub(crate) fn for_cell_lanes(&self, mut f: impl FnMut(usize, &[bool; LANES])) {
        let p = self.sz();
        let mask = self.cell_mask();
        let blocks: Vec<(usize, [bool; LANES])> = (0..p.div_ceil(LANES))
            .map(|b| {
                let q = (b * LANES).min(p - LANES);
                let live: [bool; LANES] = mask[q..q + LANES].try_into().expect("lane block");
                (q, live)
            })
            .filter(|(_, live)| live.iter().any(|&x| x))
            .collect();
        for k in 0..self.n3 {
            let base = (k + 1) * p;
            for (q, live) in &blocks {
                f(base + q, live);
            }
        }
    }

    /// Fills the ghost layer of a padded field.
    ///
    /// Walls: normal faces are zeroed and mirrored oddly; every other
    /// quantity is mirrored evenly so its wall-normal difference vanishes.
    /// The `x3` ghost planes wrap periodically and are filled last, so they
    /// carry the already-filled wall ghosts of the source plane.
    pub fn fill_ghosts(&self, s: Stagger, data: &mut [f64]) {
        let sz = self.sz();
        for plane in data.chunks_exact_mut(sz) {
            self.fill_wall_ghosts(s, plane);
        }
        self.wrap_x3(data);
    }

    /// Wall ghosts of a single `x3`-plane of `sz` values.
    #[inline]
    pub(crate) fn fill_wall_ghosts(&self, s: Stagger, plane: &mut [f64]) {
        let (n, sy) = (self.n1, self.sy());
        // x1 direction; r[i + 1] is logical index i
        for r in plane.chunks_exact_mut(sy) {
            if s == Stagger::Face1 {
                r[1] = 0.0;
                r[n + 1] = 0.0;
                r[0] = -r[2];
                r[n + 2] = -r[n];
            } else {
                r[0] = r[1];
                r[n + 1] = r[n];
                // unused padding column
                r[n + 2] = r[n + 1];
            }
        }
        // x2 direction; row j + 1 is logical row j
        let row = |j: usize| j * sy..(j + 1) * sy;
        if s == Stagger::Face2 {
            plane[row(1)].fill(0.0);
            plane[row(n + 1)].fill(0.0);
            for t in 0..sy {
                plane[t] = -plane[2 * sy + t];
                plane[(n + 2) * sy + t] = -plane[n * sy + t];
            }
        } else {
            plane.copy_within(row(1), 0);
            plane.copy_within(row(n), (n + 1) * sy);
        }
    }

    /// Periodic `x3` ghost planes.
    pub(crate) fn wrap_x3(&self, data: &mut [f64]) {
        let (sz, n3) = (self.sz(), self.n3);
        data.copy_within(n3 * sz..(n3 + 1) * sz, 0);
        data.copy_within(sz..2 * sz, (n3 + 1) * sz);
    }
}
