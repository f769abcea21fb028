//! Discrete operators and the velocity transforms between `u` and `(v, w)`.
//!
//! Gradients of cell data are compact differences placed on faces, so the
//! augmented `w` is exactly the discrete gradient of the cell field
//! `2 sqrt(kappa (1 - kappa)) mu log(rho)`.

use crate::eos::FluidParams;
use crate::error::{Error, Result};

use super::grid::{Grid1D, Grid3D, Stagger};
use super::state::{AugmentedState1D, ExtendedState, State1D, State3D};

/// Face gradient of periodic cell data: `(q[i] - q[i-1]) / dy` at face `i`.
pub fn face_gradient_1d(grid: &Grid1D, q: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let inv = grid.inv_dy();
    (0..n).map(|i| (q[i] - q[(i + n - 1) % n]) * inv).collect()
}

/// Cell divergence of periodic face data: `(f[i+1] - f[i]) / dy` at cell `i`.
pub fn cell_divergence_1d(grid: &Grid1D, f: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let inv = grid.inv_dy();
    (0..n).map(|i| (f[(i + 1) % n] - f[i]) * inv).collect()
}

fn log_density(rho: &[f64], params: &FluidParams) -> Result<Vec<f64>> {
    rho.iter()
        .map(|&r| {
            params.check_density(r)?;
            Ok(r.ln())
        })
        .collect()
}

/// `(v, w)` from `(rho, u)` in 1D.
pub fn augment_1d(state: &State1D, params: &FluidParams) -> Result<AugmentedState1D> {
    let g = face_gradient_1d(&state.grid, &log_density(&state.rho, params)?);
    let cw = 2.0 * params.coupling() * params.mu;
    let cv = 2.0 * params.kappa * params.mu;
    Ok(AugmentedState1D {
        grid: state.grid,
        rho: state.rho.clone(),
        v: state.u.iter().zip(&g).map(|(u, g)| u + cv * g).collect(),
        w: g.iter().map(|g| cw * g).collect(),
        t: state.t,
    })
}

/// `u = v - sqrt(kappa / (1 - kappa)) w`, componentwise.
pub fn recover_u(v: &[f64], w: &[f64], params: &FluidParams) -> Result<Vec<f64>> {
    if v.len() != w.len() {
        return Err(Error::GridMismatch(format!(
            "v has {} entries, w has {}",
            v.len(),
            w.len()
        )));
    }
    let s = params.recovery_factor();
    Ok(v.iter().zip(w).map(|(v, w)| v - s * w).collect())
}

/// Back to primitive variables.
pub fn primitive_1d(aug: &AugmentedState1D, params: &FluidParams) -> Result<State1D> {
    Ok(State1D {
        grid: aug.grid,
        rho: aug.rho.clone(),
        u: recover_u(&aug.v, &aug.w, params)?,
        t: aug.t,
    })
}

/// Augmented velocities of a 3D state, one padded face array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedFields3 {
    pub v: [Vec<f64>; 3],
    pub w: [Vec<f64>; 3],
}

/// Face gradients of a padded cell field whose ghosts are filled.
pub fn face_gradient_3d(grid: &Grid3D, q: &[f64]) -> [Vec<f64>; 3] {
    let (sy, sz) = (grid.sy(), grid.sz());
    let steps = [
        (1, grid.inv_dx1()),
        (sy, grid.inv_dx1()),
        (sz, grid.inv_dx3()),
    ];
    let stag = [Stagger::Face1, Stagger::Face2, Stagger::Face3];
    let mut out = [grid.zeros(), grid.zeros(), grid.zeros()];
    for (d, out) in out.iter_mut().enumerate() {
        let (step, inv) = steps[d];
        let [e1, e2, e3] = grid.extents(stag[d]);
        for k in 0..e3 as isize {
            for j in 0..e2 as isize {
                let base = grid.at(0, j, k);
                for o in base..base + e1 {
                    out[o] = (q[o] - q[o - step]) * inv;
                }
            }
        }
        grid.fill_ghosts(stag[d], out);
    }
    out
}

/// `log(rho)` on the padded cell layout with ghosts filled.
pub(crate) fn log_density_3d(state: &State3D, params: &FluidParams) -> Result<Vec<f64>> {
    let g = &state.grid;
    params.check_density(state.min_rho())?;
    let mut q = g.zeros();
    for k in 0..g.n3() as isize {
        for j in 0..g.n2() as isize {
            let base = g.at(0, j, k);
            for o in base..base + g.n1() {
                q[o] = state.rho[o].ln();
            }
        }
    }
    g.fill_ghosts(Stagger::Cell, &mut q);
    Ok(q)
}

/// `(v, w)` of a 3D state. Wall faces carry `w = 0` and `v = 0`.
pub fn augment_3d(state: &State3D, params: &FluidParams) -> Result<AugmentedFields3> {
    let grid = &state.grid;
    let grad = face_gradient_3d(grid, &log_density_3d(state, params)?);
    let cw = 2.0 * params.coupling() * params.mu;
    let cv = 2.0 * params.kappa * params.mu;
    let mut v = [grid.zeros(), grid.zeros(), grid.zeros()];
    let mut w = [grid.zeros(), grid.zeros(), grid.zeros()];
    for d in 0..3 {
        let u = state.velocity(d);
        for o in 0..grid.padded_len() {
            v[d][o] = u[o] + cv * grad[d][o];
            w[d][o] = cw * grad[d][o];
        }
    }
    Ok(AugmentedFields3 { v, w })
}

/// Componentwise [`recover_u`] for 3D augmented fields.
pub fn recover_u_3d(fields: &AugmentedFields3, params: &FluidParams) -> Result<[Vec<f64>; 3]> {
    Ok([
        recover_u(&fields.v[0], &fields.w[0], params)?,
        recover_u(&fields.v[1], &fields.w[1], params)?,
        recover_u(&fields.v[2], &fields.w[2], params)?,
    ])
}

/// Symmetric and antisymmetric parts of the velocity gradient at cell centers.
///
/// Entries are indexed `[component][direction]`, i.e. `grad[a][b] = d u_a / d x_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainSpin {
    pub d: Vec<[[f64; 3]; 3]>,
    pub a: Vec<[[f64; 3]; 3]>,
}

fn split_gradient(grad: [[f64; 3]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let mut d = [[0.0; 3]; 3];
    let mut a = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            d[r][c] = 0.5 * (grad[r][c] + grad[c][r]);
            a[r][c] = 0.5 * (grad[r][c] - grad[c][r]);
        }
    }
    (d, a)
}

/// 1D profile viewed as `u = (0, 0, u(y))`: only `D33 = du/dy` survives.
pub fn strain_and_spin_1d(state: &State1D) -> StrainSpin {
    let du = cell_divergence_1d(&state.grid, &state.u);
    let mut d = Vec::with_capacity(du.len());
    let mut a = Vec::with_capacity(du.len());
    for g in du {
        let mut grad = [[0.0; 3]; 3];
        grad[2][2] = g;
        let (dd, aa) = split_gradient(grad);
        d.push(dd);
        a.push(aa);
    }
    StrainSpin { d, a }
}

/// Cell-centered strain and spin of a 3D velocity field.
///
/// Diagonal entries are compact differences across the cell; off-diagonal
/// derivatives are formed on cell edges and averaged over the four edges
/// around the cell center. Ghost layers must already be filled.
pub fn strain_and_spin_3d(grid: &Grid3D, u: [&[f64]; 3]) -> StrainSpin {
    let strides = [1usize, grid.sy(), grid.sz()];
    let inv = [grid.inv_dx1(), grid.inv_dx1(), grid.inv_dx3()];
    let n_cells = grid.n1() * grid.n2() * grid.n3();
    let mut d = Vec::with_capacity(n_cells);
    let mut a = Vec::with_capacity(n_cells);
    for k in 0..grid.n3() as isize {
        for j in 0..grid.n2() as isize {
            for i in 0..grid.n1() as isize {
                let o = grid.at(i, j, k);
                let mut grad = [[0.0; 3]; 3];
                for c in 0..3 {
                    let sc = strides[c];
                    grad[c][c] = (u[c][o + sc] - u[c][o]) * inv[c];
                    for b in 0..3 {
                        if b == c {
                            continue;
                        }
                        let sb = strides[b];
                        // edges at lower/upper b-face and lower/upper c-face
                        let edge = |e: usize| (u[c][e] - u[c][e - sb]) * inv[b];
                        grad[c][b] =
                            0.25 * (edge(o) + edge(o + sb) + edge(o + sc) + edge(o + sb + sc));
                    }
                }
                let (dd, aa) = split_gradient(grad);
                d.push(dd);
                a.push(aa);
            }
        }
    }
    StrainSpin { d, a }
}

/// Places augmented 1D data on the thin box, constant in `(x1, x2)`.
pub fn extend_1d(aug: &AugmentedState1D, grid: &Grid3D) -> Result<ExtendedState> {
    if aug.grid.n() != grid.n3() {
        return Err(Error::GridMismatch(format!(
            "1D grid has {} cells but the 3D axis has {}",
            aug.grid.n(),
            grid.n3()
        )));
    }
    let mut r = grid.zeros();
    let mut v3 = grid.zeros();
    let mut w3 = grid.zeros();
    for k in 0..grid.n3() {
        let plane_start = grid.at(-1, -1, k as isize);
        let plane = plane_start..plane_start + grid.sz();
        r[plane.clone()].fill(aug.rho[k]);
        v3[plane.clone()].fill(aug.v[k]);
        w3[plane].fill(aug.w[k]);
    }
    grid.fill_ghosts(Stagger::Cell, &mut r);
    grid.fill_ghosts(Stagger::Face3, &mut v3);
    grid.fill_ghosts(Stagger::Face3, &mut w3);
    Ok(ExtendedState {
        grid: *grid,
        r,
        v3,
        w3,
        t: aug.t,
    })
}

/// Places a primitive 1D state on the thin box: `rho(x3)`, `u = (0, 0, u(x3))`.
pub fn extend_primitive(state: &State1D, grid: &Grid3D) -> Result<State3D> {
    if state.grid.n() != grid.n3() {
        return Err(Error::GridMismatch(format!(
            "1D grid has {} cells but the 3D axis has {}",
            state.grid.n(),
            grid.n3()
        )));
    }
    let mut s = State3D::uniform(*grid, 1.0);
    for k in 0..grid.n3() {
        let start = grid.at(-1, -1, k as isize);
        s.rho[start..start + grid.sz()].fill(state.rho[k]);
        s.u3[start..start + grid.sz()].fill(state.u[k]);
    }
    s.t = state.t;
    s.fill_ghosts();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> FluidParams {
        FluidParams::default()
    }

    #[test]
    fn constant_density_leaves_velocity_untouched() {
        let g = Grid1D::new(16).unwrap();
        let s = State1D::from_fn(g, |_| 1.3, |y| (2.0 * PI * y).sin());
        let aug = augment_1d(&s, &params()).unwrap();
        assert!(aug.w.iter().all(|&w| w == 0.0));
        assert_eq!(aug.v, s.u);
    }

    #[test]
    fn w_converges_to_analytic_log_gradient() {
        // rho = exp(sin 2 pi y), mu = 1, kappa = 1/2: w -> 2 pi cos(2 pi y)
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let g = Grid1D::new(n).unwrap();
            let s = State1D::from_fn(g, |y| (2.0 * PI * y).sin().exp(), |_| 0.0);
            let aug = augment_1d(&s, &params()).unwrap();
            let err = (0..n)
                .map(|i| (aug.w[i] - 2.0 * PI * (2.0 * PI * g.face(i)).cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "order {order}");
        }
    }

    #[test]
    fn recover_identities() {
        let p = params();
        let v = vec![1.0, -2.0, 0.5];
        assert_eq!(recover_u(&v, &[0.0; 3], &p).unwrap(), v);
        let w = vec![0.25, 1.0, -3.0];
        let u = recover_u(&v, &w, &p).unwrap();
        for i in 0..3 {
            assert!((u[i] - (v[i] - w[i])).abs() < 1e-15);
        }
        assert!(recover_u(&v, &w[..2], &p).is_err());
    }

    #[test]
    fn one_dimensional_profile_has_no_spin() {
        let g = Grid1D::new(32).unwrap();
        let s = State1D::from_fn(g, |_| 1.0, |y| (2.0 * PI * y).sin());
        let ss = strain_and_spin_1d(&s);
        assert!(ss.a.iter().all(|a| a.iter().flatten().all(|&x| x == 0.0)));
        let f0 = ss.d[0][2][2];
        // centered difference of a sine is exact up to the sinc factor
        let h = g.dy();
        let exact = (2.0 * PI * g.cell_center(0)).cos() * 2.0 * (PI * h).sin() / h;
        assert!((f0 - exact).abs() < 1e-12);
    }

    #[test]
    fn rigid_rotation_is_pure_spin() {
        let g = Grid3D::new(1.0, 8, 8).unwrap();
        // raw linear data, ghosts by hand so the wall rules do not interfere
        let lin = |st: Stagger, c: usize| {
            let mut out = g.zeros();
            for k in -1..=8 {
                for j in -1..=9 {
                    for i in -1..=9 {
                        let x = g.position(st, i, j, k);
                        out[g.at(i, j, k)] = match c {
                            0 => -x[1],
                            1 => x[0],
                            _ => 0.0,
                        };
                    }
                }
            }
            out
        };
        let (u1, u2, u3) = (
            lin(Stagger::Face1, 0),
            lin(Stagger::Face2, 1),
            lin(Stagger::Face3, 2),
        );
        let ss = strain_and_spin_3d(&g, [&u1, &u2, &u3]);
        for (d, a) in ss.d.iter().zip(&ss.a) {
            let dn: f64 = d.iter().flatten().map(|x| x * x).sum();
            let an: f64 = a.iter().flatten().map(|x| x * x).sum();
            assert!(dn < 1e-24);
            assert!((an - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_has_no_strain() {
        let g = Grid3D::new(0.5, 4, 8).unwrap();
        let s = State3D::from_fn(g, |_| 1.0, |c, _| if c == 2 { 0.7 } else { 0.0 });
        let ss = strain_and_spin_3d(&g, [&s.u1, &s.u2, &s.u3]);
        for (d, a) in ss.d.iter().zip(&ss.a) {
            assert!(d
                .iter()
                .flatten()
                .chain(a.iter().flatten())
                .all(|&x| x == 0.0));
        }
    }

    #[test]
    fn extension_is_constant_across_section() {
        let g1 = Grid1D::new(16).unwrap();
        let s = State1D::from_fn(
            g1,
            |y| 1.0 + 0.2 * (2.0 * PI * y).sin(),
            |y| (2.0 * PI * y).cos(),
        );
        let aug = augment_1d(&s, &params()).unwrap();
        let g3 = Grid3D::new(0.1, 4, 16).unwrap();
        let ext = extend_1d(&aug, &g3).unwrap();
        for k in 0..16 {
            for j in 0..4 {
                for i in 0..4 {
                    assert_eq!(
                        ext.r[g3.at(i, j, k)].to_bits(),
                        aug.rho[k as usize].to_bits()
                    );
                    assert_eq!(
                        ext.v3[g3.at(i, j, k)].to_bits(),
                        aug.v[k as usize].to_bits()
                    );
                    assert_eq!(
                        ext.w3[g3.at(i, j, k)].to_bits(),
                        aug.w[k as usize].to_bits()
                    );
                }
            }
        }
        let bad = Grid3D::new(0.1, 4, 32).unwrap();
        assert!(matches!(extend_1d(&aug, &bad), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn gradient_divergence_duality_periodic() {
        let g = Grid1D::new(24).unwrap();
        let q: Vec<f64> = (0..24).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let f: Vec<f64> = (0..24).map(|i| ((i * 5 % 13) as f64).cos()).collect();
        let gq = face_gradient_1d(&g, &q);
        let df = cell_divergence_1d(&g, &f);
        let lhs: f64 = gq.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>()
            + q.iter().zip(&df).map(|(a, b)| a * b).sum::<f64>();
        assert!(lhs.abs() * g.dy() < 1e-12);
    }

    #[test]
    fn quadratic_periodic_direction_is_exact() {
        // second differences of a quadratic in x3 reproduce the constant curvature
        let g = Grid3D::new(0.5, 4, 16).unwrap();
        let q = |z: f64| 3.0 * z * z - z + 0.5;
        let mut rho = g.zeros();
        for k in -1..=16 {
            for j in -1..=5 {
                for i in -1..=5 {
                    let x = g.position(Stagger::Cell, i, j, k);
                    rho[g.at(i, j, k)] = q(x[2]);
                }
            }
        }
        let grad = face_gradient_3d(&g, &rho);
        for k in 1..15 {
            let o = g.at(1, 1, k);
            let z = g.position(Stagger::Face3, 1, 1, k)[2];
            assert!((grad[2][o] - (6.0 * z - 1.0)).abs() < 1e-12);
            let lap = (grad[2][o + g.sz()] - grad[2][o]) * g.inv_dx3();
            assert!((lap - 6.0).abs() < 1e-9);
        }
    }
}
