//! Acceptance gate: one PASS/FAIL line per criterion at pinned tolerances
//! and wall-clock limits. Exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thinflow::entropy::{kappa_entropy_1d, kappa_entropy_3d};
use thinflow::eos::{convexity_gap, internal_energy, pressure_potential};
use thinflow::fields::{
    augment_1d, augment_3d, extend_primitive, recover_u, recover_u_3d, Snapshot, Stagger,
};
use thinflow::harness::config::{parse_config, InitSection};
use thinflow::harness::init::base_profile;
use thinflow::harness::mms::{mms_1d, mms_3d};
use thinflow::harness::output::read_table;
use thinflow::harness::{run3d, sweep};
use thinflow::solver1d::{self, cfl_dt, step_primitive, Formulation, Scheme1DConfig};
use thinflow::solver3d::{Scheme3DConfig, Stepper3D};
use thinflow::{FluidParams, Grid1D, Grid3D, State1D, State3D};

struct Outcome {
    pass: bool,
    detail: String,
}

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    // 5-point rule on equal panels
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for q in 0..5 {
            s += W[q] * f(c + 0.5 * h * X[q]);
        }
    }
    0.5 * h * s
}

fn criterion_1() -> Outcome {
    let mut worst_identity: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for gamma in [1.4, 2.0, 3.0] {
        let p = FluidParams {
            gamma,
            ..Default::default()
        };
        for i in 0..100 {
            let rho = 0.05 * (400.0f64).powf(i as f64 / 99.0);
            let big = pressure_potential(rho, &p).unwrap();
            let scale = big.abs().max(1.0);
            let re = rho * internal_energy(rho, &p).unwrap();
            worst_identity = worst_identity.max((re - big).abs() / scale);
            let integral = gauss_legendre(|s| p.a * s.powf(gamma) / (s * s), 1.0, rho, 200);
            worst_quad = worst_quad.max((rho * integral - big).abs() / scale);
        }
        for _ in 0..10_000 {
            let rho = rng.gen_range(0.1..3.0);
            let r = rng.gen_range(0.1..3.0);
            min_gap = min_gap.min(convexity_gap(rho, r, &p).unwrap());
        }
    }
    Outcome {
        pass: worst_identity <= 1e-10 && worst_quad <= 1e-10 && min_gap >= -1e-14,
        detail: format!(
            "rho e = P err {worst_identity:.2e}, quadrature err {worst_quad:.2e} (tol 1e-10); min convexity gap {min_gap:.2e} (tol -1e-14)"
        ),
    }
}

fn random_profile(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let c: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    move |y| {
        c.iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let k = 2.0 * PI * (m + 1) as f64 * y;
                a * k.cos() + b * k.sin()
            })
            .sum::<f64>()
            / 4.0
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for kappa in [0.2, 0.5, 0.8] {
        let p = FluidParams {
            kappa,
            ..Default::default()
        };
        for n in [32, 64, 128, 256] {
            let (fr, fu) = (random_profile(&mut rng), random_profile(&mut rng));
            let s = State1D::from_fn(Grid1D::new(n).unwrap(), |y| 1.0 + 0.5 * fr(y), fu);
            let aug = augment_1d(&s, &p).unwrap();
            let u = recover_u(&aug.v, &aug.w, &p).unwrap();
            for (a, b) in u.iter().zip(&s.u) {
                worst = worst.max((a - b).abs());
            }
        }
        let grid = Grid3D::new(0.2, 8, 32).unwrap();
        let (fr, fu) = (random_profile(&mut rng), random_profile(&mut rng));
        let e = grid.eps();
        let s = State3D::from_fn(
            grid,
            |x| 1.0 + 0.4 * fr(x[2]) + 0.1 * (PI * x[0] / e).cos() * (PI * x[1] / e).cos(),
            |c, x| match c {
                0 => (PI * x[0] / e).sin() * fu(x[2]),
                1 => (PI * x[1] / e).sin() * fu(x[2] + 0.3),
                _ => fu(x[2]) * (PI * x[0] / e).cos(),
            },
        );
        let u = recover_u_3d(&augment_3d(&s, &p).unwrap(), &p).unwrap();
        for (c, st) in [Stagger::Face1, Stagger::Face2, Stagger::Face3]
            .iter()
            .enumerate()
        {
            let got = grid.pack(*st, &u[c]);
            let want = grid.pack(*st, s.velocity(c));
            for (a, b) in got.iter().zip(&want) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Outcome {
        pass: worst <= 1e-13,
        detail: format!("max |recover_u(augment(u)) - u| = {worst:.2e} (tol 1e-13)"),
    }
}

fn criterion_3() -> Outcome {
    let p = FluidParams::default();
    let reports = [
        mms_1d(Formulation::Primitive, &[64, 128, 256], 0.1, &p).unwrap(),
        mms_1d(Formulation::Augmented, &[64, 128, 256], 0.1, &p).unwrap(),
        mms_3d(&[(4, 32), (8, 64), (16, 128)], 0.25, 0.01, &p, 1).unwrap(),
    ];
    let pass = reports.iter().all(|r| r.within(1.7, 2.3));
    let detail = reports
        .iter()
        .map(|r| r.summary())
        .collect::<Vec<_>>()
        .join("; ");
    Outcome {
        pass,
        detail: format!("orders within 2.0 +- 0.3: {detail}"),
    }
}

fn criterion_4() -> Outcome {
    let p = FluidParams::default();
    let mut disc = Vec::new();
    for n in [64, 128, 256] {
        let init = base_profile(&InitSection::default(), Grid1D::new(n).unwrap()).unwrap();
        let run = |formulation| {
            let scheme = Scheme1DConfig {
                end_time: 0.1,
                snapshots: 1,
                formulation,
                ..Default::default()
            };
            solver1d::run1d(&init, &scheme, &p).unwrap()
        };
        // the primitive run mapped through the transform against the
        // augmented run, in (rho, v, w)
        let prim = run(Formulation::Primitive).snapshots.pop().unwrap();
        let a = augment_1d(&prim, &p).unwrap();
        let b = run(Formulation::Augmented).augmented.pop().unwrap();
        let dy = a.grid.dy();
        let sq: f64 = (0..n)
            .map(|i| {
                (a.rho[i] - b.rho[i]).powi(2)
                    + (a.v[i] - b.v[i]).powi(2)
                    + (a.w[i] - b.w[i]).powi(2)
            })
            .sum();
        disc.push((sq * dy).sqrt());
    }
    let orders: Vec<f64> = disc.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Outcome {
        pass: orders.iter().all(|&o| o >= 1.5),
        detail: format!(
            "L2 discrepancy {:?}, orders {orders:.3?} (min 1.5)",
            disc.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()
        ),
    }
}

fn criterion_5() -> Outcome {
    let p = FluidParams::default();
    // 1D
    let init = base_profile(&InitSection::default(), Grid1D::new(128).unwrap()).unwrap();
    let scheme = Scheme1DConfig::default();
    let mut s = init.clone();
    let k0 = kappa_entropy_1d(&s, &p).unwrap();
    let tol1 = 1e-8 * (1.0 + k0.energy);
    let (mut prev, mut worst1, mut div1, mut spin1) =
        (k0.energy, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    while s.t < 0.25 {
        let dt = cfl_dt(&s, &p, &scheme).unwrap().min(0.25 - s.t);
        s = step_primitive(&s, dt, &p, &scheme).unwrap();
        let k = kappa_entropy_1d(&s, &p).unwrap();
        worst1 = worst1.max(k.energy - prev);
        div1 = div1.max(k.rates.divergence.abs());
        spin1 = spin1.max(k.rates.spin.abs());
        prev = k.energy;
    }
    // 3D, genuinely three-dimensional smooth data
    let grid = Grid3D::new(0.25, 8, 32).unwrap();
    let e = grid.eps();
    let mut s3 = State3D::from_fn(
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
    );
    let sc = Scheme3DConfig::default();
    let mut stepper = Stepper3D::new(grid, 1);
    let k0 = kappa_entropy_3d(&s3, &p).unwrap();
    let tol3 = 1e-8 * (1.0 + k0.energy);
    let (mut prev, mut worst3, mut div3) =
        (k0.energy, f64::NEG_INFINITY, k0.rates.divergence.abs());
    let mut steps3 = 0;
    while s3.t < 0.02 {
        let rem = 0.02 - s3.t;
        stepper.advance(&mut s3, rem, &p, &sc, None).unwrap();
        let k = kappa_entropy_3d(&s3, &p).unwrap();
        worst3 = worst3.max(k.energy - prev);
        div3 = div3.max(k.rates.divergence.abs());
        prev = k.energy;
        steps3 += 1;
    }
    // spin of extended 1D data computed, not assumed
    let ext = extend_primitive(&s, &Grid3D::new(0.25, 4, 128).unwrap()).unwrap();
    let spin_ext = kappa_entropy_3d(&ext, &p).unwrap().rates.spin;
    Outcome {
        pass: worst1 <= tol1
            && worst3 <= tol3
            && div1 == 0.0
            && div3 == 0.0
            && spin1 == 0.0
            && spin_ext == 0.0,
        detail: format!(
            "max step increase 1D {worst1:.2e} (tol {tol1:.2e}), 3D {worst3:.2e} over {steps3} steps (tol {tol3:.2e}); divergence term {div1:e}/{div3:e}; 1D A-term {spin1:e}, extended {spin_ext:e}"
        ),
    }
}

fn criterion_6() -> Outcome {
    let p = FluidParams::default();
    let grid = Grid3D::new(1.0, 16, 128).unwrap();
    let mut s1 = base_profile(&InitSection::default(), grid.axial()).unwrap();
    let mut s3 = extend_primitive(&s1, &grid).unwrap();
    let sc = Scheme3DConfig::default();
    let sc1 = Scheme1DConfig::default();
    let mut stepper = Stepper3D::new(grid, 1);
    let mut var: f64 = 0.0;
    while s3.t < 0.25 {
        let rem = 0.25 - s3.t;
        let dt = stepper.advance(&mut s3, rem, &p, &sc, None).unwrap();
        s1 = step_primitive(&s1, dt, &p, &sc1).unwrap();
        var = var.max(s3.cross_section_variance());
    }
    let mut linf: f64 = 0.0;
    let n = grid.n1() as isize;
    for j in 0..n {
        for i in 0..n {
            let (r, u) = s3.axial_profile(i, j);
            for k in 0..grid.n3() {
                linf = linf
                    .max((r[k] - s1.rho[k]).abs())
                    .max((u[k] - s1.u[k]).abs());
            }
        }
    }
    Outcome {
        pass: var < 1e-12 && linf <= 1e-10,
        detail: format!(
            "eps = 1, 16x16x128, T = 0.25: max cross-section variance {var:.2e} (tol 1e-12), L-inf vs 1D {linf:.2e} (tol 1e-10)"
        ),
    }
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        "",
        &[
            "grid.eps_list=[0.4, 0.2, 0.1]".into(),
            "grid.n1=16".into(),
            "grid.n3=128".into(),
            "init.delta_factor=1.0".into(),
            "fluid.gamma=2.0".into(),
            "fluid.kappa=0.5".into(),
            "scheme.end_time=0.25".into(),
            "output.step_log=false".into(),
            "output.snapshot_stride=0".into(),
        ],
    )
    .unwrap();
    let res = sweep(&cfg, Some(dir.path())).unwrap();
    let rows: Vec<String> = res
        .records
        .iter()
        .map(|r| {
            format!(
                "eps {} supE {:.3e} md {:.3e} mv {:.3e} G {:.3}",
                r.eps,
                r.sup_e_norm.unwrap_or(f64::NAN),
                r.sup_metric_density.unwrap_or(f64::NAN),
                r.sup_metric_velocity.unwrap_or(f64::NAN),
                r.gronwall_ratio.unwrap_or(f64::NAN)
            )
        })
        .collect();
    let verdicts: Vec<String> = res
        .verdicts
        .iter()
        .map(|v| format!("{}={}", v.name, if v.pass { "ok" } else { "FAIL" }))
        .collect();
    Outcome {
        pass: res.passed() && res.verdicts.len() == 4,
        detail: format!("{}; {}", rows.join(", "), verdicts.join(" ")),
    }
}

fn criterion_8() -> Outcome {
    let base = [
        "grid.eps=0.4".to_string(),
        "grid.n1=8".into(),
        "grid.n3=64".into(),
        "scheme.end_time=0.01".into(),
        "scheme.snapshots=10".into(),
        "output.snapshot_stride=5".into(),
    ];
    let run = |slabs: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut ov = base.to_vec();
        ov.push(format!("scheme.slab_count={slabs}"));
        let cfg = parse_config("", &ov).unwrap();
        run3d(&cfg, Some(dir.path())).unwrap();
        let bytes = std::fs::read(dir.path().join("timeseries.csv")).unwrap();
        let table = read_table(&dir.path().join("timeseries.csv")).unwrap();
        let last = Snapshot::read(&dir.path().join("snapshots/3d_0010.dat")).unwrap();
        (bytes, table, last)
    };
    let (a, ta, sa) = run(1);
    let (b, _, sb) = run(1);
    let identical = a == b && sa == sb;
    let mut worst: f64 = 0.0;
    for slabs in [2, 4, 7] {
        let (_, t, s) = run(slabs);
        for (ra, rb) in ta.rows.iter().zip(&t.rows) {
            for (x, y) in ra.iter().skip(1).zip(rb.iter().skip(1)) {
                worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1e-300));
            }
        }
        for (fa, fb) in sa.data.iter().zip(&s.data) {
            for (x, y) in fa.iter().zip(fb) {
                worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1e-300));
            }
        }
    }
    Outcome {
        pass: identical && worst <= 1e-12,
        detail: format!(
            "serial repeat byte-identical: {identical}; slab runs (2, 4, 7) max relative deviation {worst:.2e} (tol 1e-12)"
        ),
    }
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 8] = [
        (1, "EOS identities", 1.0, criterion_1),
        (2, "transform round trip", 1.0, criterion_2),
        (3, "MMS orders", 180.0, criterion_3),
        (4, "formulation equivalence", 60.0, criterion_4),
        (5, "kappa-entropy dissipation", 120.0, criterion_5),
        (6, "invariant manifold", 120.0, criterion_6),
        (7, "dimension-reduction sweep", 600.0, criterion_7),
        (8, "determinism", 120.0, criterion_8),
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        let pass = out.pass && secs < limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{}] {name}: {} | {secs:.1} s (limit {limit} s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
