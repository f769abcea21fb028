//! Energy-type functionals: the kappa-entropy with its dissipation rates, the
//! relative entropy between a 3D state and extended 1D data, and the
//! convergence metrics built from them.
//!
//! All integrals use the midpoint rule on the native staggered locations:
//! densities at cells, velocity-type quantities at faces with the face
//! density taken as the mean of the two neighbouring cells.

use serde::{Deserialize, Serialize};

use crate::eos::{self, FluidParams};
use crate::error::{Error, Result};
use crate::fields::{
    augment_1d, augment_3d, cell_divergence_1d, face_gradient_1d, strain_and_spin_3d,
    AugmentedState1D, ExtendedState, State1D, State3D,
};

/// Instantaneous dissipation rates of the kappa-entropy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DissipationRates {
    /// `2 kappa mu int rho |A(u)|^2`
    pub spin: f64,
    /// `2 kappa mu int p'(rho) / rho |grad rho|^2`
    pub density_gradient: f64,
    /// `2 (1 - kappa) mu int rho |D(u)|^2`
    pub strain: f64,
    /// `2 (1 - kappa) int (mu'(rho) rho - mu(rho)) |div u|^2`, zero for linear viscosity.
    pub divergence: f64,
}

impl DissipationRates {
    pub fn total(&self) -> f64 {
        self.spin + self.density_gradient + self.strain + self.divergence
    }

    fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            spin: f(self.spin, other.spin),
            density_gradient: f(self.density_gradient, other.density_gradient),
            strain: f(self.strain, other.strain),
            divergence: f(self.divergence, other.divergence),
        }
    }
}

/// Kappa-entropy and its dissipation rates at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaEntropy {
    pub energy: f64,
    pub rates: DissipationRates,
}

/// `(mu'(rho) rho - mu(rho))` for `mu(rho) = mu rho`; kept as a function so
/// the divergence term is evaluated rather than assumed.
fn divergence_weight(rho: f64, params: &FluidParams) -> f64 {
    params.mu * rho - params.mu_of_rho(rho)
}

/// Kappa-entropy of a periodic 1D state, viewed as `u = (0, 0, u(y))`.
pub fn kappa_entropy_1d(state: &State1D, params: &FluidParams) -> Result<KappaEntropy> {
    let aug = augment_1d(state, params)?;
    let energy = kappa_entropy_augmented_1d(&aug, params)?;
    let n = state.grid.n();
    let dy = state.grid.dy();
    let rho = &state.rho;
    let drho = face_gradient_1d(&state.grid, rho);
    let du = cell_divergence_1d(&state.grid, &state.u);
    let mut dens = 0.0;
    let mut strain = 0.0;
    let mut div = 0.0;
    for i in 0..n {
        let rf = 0.5 * (rho[(i + n - 1) % n] + rho[i]);
        dens += params.dpressure_unchecked(rf) / rf * drho[i] * drho[i];
        strain += rho[i] * du[i] * du[i];
        div += divergence_weight(rho[i], params) * du[i] * du[i];
    }
    let (mu, kappa) = (params.mu, params.kappa);
    Ok(KappaEntropy {
        energy,
        rates: DissipationRates {
            // a single velocity component varying in its own direction has no spin
            spin: 0.0,
            density_gradient: 2.0 * kappa * mu * dens * dy,
            strain: 2.0 * (1.0 - kappa) * mu * strain * dy,
            divergence: 2.0 * (1.0 - kappa) * div * dy,
        },
    })
}

/// `int rho (|v|^2 + |w|^2) / 2 + rho e(rho)` from augmented 1D data.
pub fn kappa_entropy_augmented_1d(aug: &AugmentedState1D, params: &FluidParams) -> Result<f64> {
    aug.check_admissible(params)?;
    let n = aug.grid.n();
    let rho = &aug.rho;
    let mut kinetic = 0.0;
    let mut internal = 0.0;
    for i in 0..n {
        let rf = 0.5 * (rho[(i + n - 1) % n] + rho[i]);
        kinetic += rf * (aug.v[i] * aug.v[i] + aug.w[i] * aug.w[i]);
        internal += eos::potential_unchecked(rho[i], params);
    }
    Ok((0.5 * kinetic + internal) * aug.grid.dy())
}

/// Kappa-entropy of a 3D state with the four dissipation rates.
pub fn kappa_entropy_3d(state: &State3D, params: &FluidParams) -> Result<KappaEntropy> {
    let g = &state.grid;
    let aug = augment_3d(state, params)?;
    let ss = strain_and_spin_3d(g, [&state.u1, &state.u2, &state.u3]);
    let strides = [1, g.sy(), g.sz()];
    let inv = [1.0 / g.dx1(), 1.0 / g.dx2(), 1.0 / g.dx3()];
    let rho = &state.rho;
    let (mut kin, mut pot, mut spin, mut dens, mut strain, mut div) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut cell = 0;
    for k in 0..g.n3() as isize {
        // per-plane partial sums keep the reduction order fixed
        let mut plane = [0.0; 6];
        for j in 0..g.n2() as isize {
            for i in 0..g.n1() as isize {
                let o = g.at(i, j, k);
                let r = rho[o];
                for d in 0..3 {
                    let lo = o - strides[d];
                    let rf = 0.5 * (rho[lo] + r);
                    let (v, w) = (aug.v[d][o], aug.w[d][o]);
                    plane[0] += rf * (v * v + w * w);
                    let gr = (r - rho[lo]) * inv[d];
                    plane[3] += params.dpressure_unchecked(rf) / rf * gr * gr;
                }
                plane[1] += eos::potential_unchecked(r, params);
                let (dd, aa) = (&ss.d[cell], &ss.a[cell]);
                let frob = |m: &[[f64; 3]; 3]| m.iter().flatten().map(|x| x * x).sum::<f64>();
                plane[2] += r * frob(aa);
                plane[4] += r * frob(dd);
                let tr = dd[0][0] + dd[1][1] + dd[2][2];
                plane[5] += divergence_weight(r, params) * tr * tr;
                cell += 1;
            }
        }
        kin += plane[0];
        pot += plane[1];
        spin += plane[2];
        dens += plane[3];
        strain += plane[4];
        div += plane[5];
    }
    let dv = g.cell_volume();
    let (mu, kappa) = (params.mu, params.kappa);
    Ok(KappaEntropy {
        energy: (0.5 * kin + pot) * dv,
        rates: DissipationRates {
            spin: 2.0 * kappa * mu * spin * dv,
            density_gradient: 2.0 * kappa * mu * dens * dv,
            strain: 2.0 * (1.0 - kappa) * mu * strain * dv,
            divergence: 2.0 * (1.0 - kappa) * div * dv,
        },
    })
}

/// The two parts of the relative entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeEntropy {
    /// `1/2 int rho (|w - W|^2 + |v - V|^2)`
    pub kinetic_gap: f64,
    /// `int P(rho) - P(r) - P'(r) (rho - r)`
    pub density_gap: f64,
    /// `int |rho - r|^min(2, gamma)`
    pub density_power: f64,
}

impl RelativeEntropy {
    pub fn total(&self) -> f64 {
        self.kinetic_gap + self.density_gap
    }
}

fn check_same_grid(state: &State3D, ext: &ExtendedState) -> Result<()> {
    if state.grid == ext.grid {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "state grid {:?} differs from extension grid {:?}",
            state.grid, ext.grid
        )))
    }
}

/// Relative entropy of a 3D state with respect to extended 1D data.
pub fn relative_entropy(
    state: &State3D,
    ext: &ExtendedState,
    params: &FluidParams,
) -> Result<RelativeEntropy> {
    check_same_grid(state, ext)?;
    params.check_density(ext.r.iter().copied().fold(f64::INFINITY, f64::min))?;
    let g = &state.grid;
    let aug = augment_3d(state, params)?;
    let (sy, sz) = (g.sy(), g.sz());
    let rho = &state.rho;
    let exponent = params.gamma.min(2.0);
    let (mut kin, mut gap, mut pw) = (0.0, 0.0, 0.0);
    for k in 0..g.n3() as isize {
        let mut plane = [0.0; 3];
        for j in 0..g.n2() as isize {
            let base = g.at(0, j, k);
            for o in base..base + g.n1() {
                let r = rho[o];
                let cross = |d: usize, lo: usize| {
                    let rf = 0.5 * (rho[lo] + r);
                    rf * (aug.v[d][o] * aug.v[d][o] + aug.w[d][o] * aug.w[d][o])
                };
                let rf3 = 0.5 * (rho[o - sz] + r);
                let (dv, dw) = (aug.v[2][o] - ext.v3[o], aug.w[2][o] - ext.w3[o]);
                plane[0] += cross(0, o - 1) + cross(1, o - sy) + rf3 * (dv * dv + dw * dw);
                plane[1] += eos::convexity_gap_unchecked(r, ext.r[o], params);
                plane[2] += (r - ext.r[o]).abs().powf(exponent);
            }
        }
        kin += plane[0];
        gap += plane[1];
        pw += plane[2];
    }
    let dv = g.cell_volume();
    Ok(RelativeEntropy {
        kinetic_gap: 0.5 * kin * dv,
        density_gap: gap * dv,
        density_power: pw * dv,
    })
}

/// `(metric_density, metric_velocity)`: `|Omega_eps|^-1 int |rho - r|^min(2,gamma)`
/// and `|Omega_eps|^-1 int rho (|w - W|^2 + |v - V|^2)`.
pub fn theorem_metrics(
    state: &State3D,
    ext: &ExtendedState,
    params: &FluidParams,
) -> Result<(f64, f64)> {
    let re = relative_entropy(state, ext, params)?;
    let vol = state.grid.volume();
    Ok((re.density_power / vol, 2.0 * re.kinetic_gap / vol))
}

/// All diagnostics of a 3D state against its 1D reference at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub t: f64,
    pub rel_entropy: f64,
    pub rel_entropy_norm: f64,
    pub kinetic_gap: f64,
    pub density_gap: f64,
    pub metric_density: f64,
    pub metric_velocity: f64,
    pub kappa_entropy: f64,
    pub kappa_entropy_norm: f64,
    pub dissipation: DissipationRates,
    pub min_rho: f64,
}

impl EntropyReport {
    /// Column order of `timeseries.csv`.
    pub const HEADER: [&'static str; 13] = [
        "t",
        "E",
        "E_norm",
        "kinetic_gap",
        "density_gap",
        "metric_density",
        "metric_velocity",
        "E_kappa",
        "rate_spin",
        "rate_density_gradient",
        "rate_strain",
        "rate_divergence",
        "min_rho",
    ];

    pub fn evaluate(state: &State3D, ext: &ExtendedState, params: &FluidParams) -> Result<Self> {
        let re = relative_entropy(state, ext, params)?;
        let ke = kappa_entropy_3d(state, params)?;
        let vol = state.grid.volume();
        Ok(Self {
            t: state.t,
            rel_entropy: re.total(),
            rel_entropy_norm: re.total() / vol,
            kinetic_gap: re.kinetic_gap,
            density_gap: re.density_gap,
            metric_density: re.density_power / vol,
            metric_velocity: 2.0 * re.kinetic_gap / vol,
            kappa_entropy: ke.energy,
            kappa_entropy_norm: ke.energy / vol,
            dissipation: ke.rates,
            min_rho: state.min_rho(),
        })
    }

    pub fn row(&self) -> [f64; 13] {
        let d = &self.dissipation;
        [
            self.t,
            self.rel_entropy,
            self.rel_entropy_norm,
            self.kinetic_gap,
            self.density_gap,
            self.metric_density,
            self.metric_velocity,
            self.kappa_entropy,
            d.spin,
            d.density_gradient,
            d.strain,
            d.divergence,
            self.min_rho,
        ]
    }
}

/// Outcome of [`gronwall_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum GronwallRatio {
    Ratio(f64),
    /// The initial value vanishes, so the ratio is undefined; the caller
    /// should track the absolute values instead.
    ExactlyPrepared,
}

impl GronwallRatio {
    pub fn value(&self) -> Option<f64> {
        match self {
            GronwallRatio::Ratio(r) => Some(*r),
            GronwallRatio::ExactlyPrepared => None,
        }
    }
}

/// Initial values at or below this count as exactly prepared.
pub const EXACT_PREPARATION_TOL: f64 = 1e-14;

/// `sup_t E(t) / E(0)` over a sampled series.
pub fn gronwall_ratio(series: &[f64]) -> GronwallRatio {
    match series.first() {
        Some(&e0) if e0 > EXACT_PREPARATION_TOL => {
            let sup = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            GronwallRatio::Ratio(sup / e0)
        }
        _ => GronwallRatio::ExactlyPrepared,
    }
}

/// Time integrals of the dissipation rates by the trapezoid rule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DissipationIntegrals {
    last: Option<(f64, DissipationRates)>,
    pub integral: DissipationRates,
}

impl DissipationIntegrals {
    pub fn record(&mut self, t: f64, rates: DissipationRates) {
        if let Some((t0, r0)) = self.last {
            let h = 0.5 * (t - t0);
            let step = r0.combine(&rates, |a, b| h * (a + b));
            self.integral = self.integral.combine(&step, |a, b| a + b);
        }
        self.last = Some((t, rates));
    }
}

/// Running suprema over a trajectory of reports, the discrete stand-in for
/// the essential supremum in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Suprema {
    pub rel_entropy_norm: f64,
    pub metric_density: f64,
    pub metric_velocity: f64,
}

impl Suprema {
    pub fn of(reports: &[EntropyReport]) -> Self {
        let sup = |f: fn(&EntropyReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
        Self {
            rel_entropy_norm: sup(|r| r.rel_entropy_norm),
            metric_density: sup(|r| r.metric_density),
            metric_velocity: sup(|r| r.metric_velocity),
        }
    }
}
