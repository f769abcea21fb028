//! Single runs: 1D, and 3D with its lockstep 1D reference.
//!
//! A run directory holds `config.json`, `timeseries.csv` (3D) or `steps.csv`,
//! `report.json` and `snapshots/*.dat`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::entropy::{gronwall_ratio, EntropyReport, GronwallRatio, Suprema};
use crate::eos::FluidParams;
use crate::error::{Error, Result};
use crate::fields::{augment_1d, extend_1d, Grid1D, Grid3D, Snapshot, State1D, State3D};
use crate::solver1d::{self, cfl_dt, next_dt, step_primitive, Formulation, StepRow1D};
use crate::solver3d::{Stepper3D, WaveBounds};

use super::config::RunConfig;
use super::init::{base_profile, well_prepared_init};
use super::output::{read_json, read_table, write_json, write_table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative tolerance when re-deriving recorded rows from snapshots.
pub const REDERIVE_TOL: f64 = 1e-12;

/// Per-step scalars of a 3D run.
pub const STEP_HEADER_3D: [&str; 6] = ["t", "dt", "mass", "momentum3", "min_rho", "max_rho"];

/// Summary written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// `"1d"` or `"3d"`.
    pub kind: String,
    pub config_digest: String,
    pub version: String,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub steps: usize,
    pub wall_clock_s: f64,
    pub end_time: f64,
    pub initial_e_norm: Option<f64>,
    pub sup: Option<Suprema>,
    pub gronwall: Option<GronwallRatio>,
    /// Largest per-step increase of the 1D kappa-entropy.
    pub max_kappa_entropy_increase: Option<f64>,
    pub mass_drift: f64,
}

/// In-memory result of [`run3d`].
#[derive(Debug, Clone)]
pub struct Run3D {
    pub summary: RunSummary,
    pub reports: Vec<EntropyReport>,
    pub last: State3D,
    pub reference: State1D,
}

fn snapshot_due(j: usize, last: usize, stride: usize) -> bool {
    j == 0 || j == last || j.is_multiple_of(stride)
}

fn snapshot_path(dir: &Path, tag: &str, j: usize) -> PathBuf {
    dir.join("snapshots").join(format!("{tag}_{j:04}.dat"))
}

/// Diagnostics of `s3` against the reference `s1`.
pub fn evaluate(s3: &State3D, s1: &State1D, params: &FluidParams) -> Result<EntropyReport> {
    let ext = extend_1d(&augment_1d(s1, params)?, &s3.grid)?;
    EntropyReport::evaluate(s3, &ext, params)
}

fn summarize_reports(reports: &[EntropyReport]) -> (f64, Suprema, GronwallRatio) {
    let series: Vec<f64> = reports.iter().map(|r| r.rel_entropy_norm).collect();
    (
        series.first().copied().unwrap_or(0.0),
        Suprema::of(reports),
        gronwall_ratio(&series),
    )
}

/// 3D run on `grid.eps` from well-prepared data, with the 1D reference
/// advanced on the same axial grid and the same step sequence.
pub fn run3d(cfg: &RunConfig, dir: Option<&Path>) -> Result<Run3D> {
    let started = Instant::now();
    let params = cfg.fluid_params();
    params.validate()?;
    let grid = Grid3D::new(cfg.grid.eps, cfg.grid.n1, cfg.grid.n3)?;
    let scheme3 = cfg.scheme3d();
    scheme3.validate(&grid)?;
    let mut scheme1 = cfg.scheme1d();
    scheme1.formulation = Formulation::Primitive;
    let delta = cfg.delta(grid.eps());
    let digest = cfg.digest();

    let mut s1 = base_profile(&cfg.init, grid.axial())?;
    s1.check_admissible(&params)?;
    let mut s3 = well_prepared_init(grid, &s1, delta, cfg.init.seed, &params)?;
    s3.check_admissible(&params)?;
    let mass0 = s3.mass();

    if let Some(d) = dir {
        std::fs::create_dir_all(d.join("snapshots"))?;
        write_json(&d.join("config.json"), cfg)?;
    }
    let targets: Vec<f64> = scheme3.output_times().iter().map(|t| s3.t + t).collect();
    let last = targets.len();
    let write_snaps = |j: usize, s3: &State3D, s1: &State1D| -> Result<()> {
        if let Some(d) = dir {
            if snapshot_due(j, last, cfg.output.snapshot_stride) {
                Snapshot::from_state3d(s3, &digest).write(&snapshot_path(d, "3d", j))?;
                Snapshot::from_state1d(s1, &digest).write(&snapshot_path(d, "ref", j))?;
            }
        }
        Ok(())
    };

    let mut reports = vec![evaluate(&s3, &s1, &params)?];
    write_snaps(0, &s3, &s1)?;
    let log_steps = cfg.output.step_log && dir.is_some();
    let mut steps = Vec::new();
    let mut stepper = Stepper3D::new(grid, scheme3.slab_count);
    let mut count = 0;
    let mut bounds = WaveBounds::of(&s3, &params);
    for (j, &target) in targets.iter().enumerate() {
        while s3.t < target {
            let limit = bounds
                .dt(&grid, &params, &scheme3)?
                .min(cfl_dt(&s1, &params, &scheme1)?);
            let dt = next_dt(limit, target - s3.t);
            bounds = stepper.step_within(&mut s3, dt, &bounds, &params, &scheme3, None)?;
            s1 = step_primitive(&s1, dt, &params, &scheme1)?;
            if target - s3.t <= 1e-12 * target.abs().max(1.0) {
                s3.t = target;
                s1.t = target;
            }
            count += 1;
            if log_steps {
                let (lo, hi) = s3.rho_extrema();
                steps.push([s3.t, dt, s3.mass(), s3.momentum3(), lo, hi]);
            }
        }
        reports.push(evaluate(&s3, &s1, &params)?);
        write_snaps(j + 1, &s3, &s1)?;
    }

    let (e0, sup, gronwall) = summarize_reports(&reports);
    let summary = RunSummary {
        kind: "3d".into(),
        config_digest: digest.clone(),
        version: VERSION.into(),
        eps: Some(grid.eps()),
        delta: Some(delta),
        steps: count,
        wall_clock_s: started.elapsed().as_secs_f64(),
        end_time: s3.t,
        initial_e_norm: Some(e0),
        sup: Some(sup),
        gronwall: Some(gronwall),
        max_kappa_entropy_increase: None,
        mass_drift: (s3.mass() - mass0).abs(),
    };
    if let Some(d) = dir {
        let rows: Vec<[f64; 13]> = reports.iter().map(EntropyReport::row).collect();
        write_table(
            &d.join("timeseries.csv"),
            &digest,
            &EntropyReport::HEADER,
            &rows,
        )?;
        if log_steps {
            write_table(&d.join("steps.csv"), &digest, &STEP_HEADER_3D, &steps)?;
        }
        write_json(&d.join("report.json"), &summary)?;
    }
    Ok(Run3D {
        summary,
        reports,
        last: s3,
        reference: s1,
    })
}

/// 1D run of the configured formulation.
pub fn run1d(cfg: &RunConfig, dir: Option<&Path>) -> Result<(RunSummary, solver1d::Trajectory1D)> {
    let started = Instant::now();
    let params = cfg.fluid_params();
    let scheme = cfg.scheme1d();
    let digest = cfg.digest();
    let init = base_profile(&cfg.init, Grid1D::new(cfg.grid.n3)?)?;
    let traj = solver1d::run1d(&init, &scheme, &params)?;
    let rows = &traj.rows;
    let increase = rows
        .windows(2)
        .map(|w| w[1].kappa_entropy - w[0].kappa_entropy)
        .fold(f64::NEG_INFINITY, f64::max);
    let last = traj.snapshots.last().expect("initial snapshot");
    let summary = RunSummary {
        kind: "1d".into(),
        config_digest: digest.clone(),
        version: VERSION.into(),
        eps: None,
        delta: None,
        steps: traj.steps,
        wall_clock_s: started.elapsed().as_secs_f64(),
        end_time: last.t,
        initial_e_norm: None,
        sup: None,
        gronwall: None,
        max_kappa_entropy_increase: Some(increase),
        mass_drift: (last.mass() - init.mass()).abs(),
    };
    if let Some(d) = dir {
        std::fs::create_dir_all(d.join("snapshots"))?;
        write_json(&d.join("config.json"), cfg)?;
        if cfg.output.step_log {
            let table: Vec<[f64; 5]> = rows
                .iter()
                .map(|r| [r.t, r.mass, r.momentum, r.kappa_entropy, r.max_d2_log_rho])
                .collect();
            write_table(&d.join("steps.csv"), &digest, &StepRow1D::HEADER, &table)?;
        }
        let n = traj.snapshots.len() - 1;
        for (j, s) in traj.snapshots.iter().enumerate() {
            if snapshot_due(j, n, cfg.output.snapshot_stride) {
                Snapshot::from_state1d(s, &digest).write(&snapshot_path(d, "1d", j))?;
            }
        }
        write_json(&d.join("report.json"), &summary)?;
    }
    Ok((summary, traj))
}

/// What [`verify_run`] checked.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub rows_checked: usize,
    pub max_rel_diff: f64,
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b || (a.is_nan() && b.is_nan()) {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }
}

fn snapshot_indices(dir: &Path, tag: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let snaps = dir.join("snapshots");
    if !snaps.exists() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(snaps)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(j) = name
            .strip_prefix(&format!("{tag}_"))
            .and_then(|r| r.strip_suffix(".dat"))
            .and_then(|r| r.parse().ok())
        {
            out.push(j);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Re-derives the recorded rows of a run directory from its snapshots and
/// checks digests and the summary against the recorded data.
pub fn verify_run(dir: &Path) -> Result<VerifyOutcome> {
    let cfg: RunConfig = read_json(&dir.join("config.json"))?;
    let summary: RunSummary = read_json(&dir.join("report.json"))?;
    let digest = cfg.digest();
    let fail = |m: String| Error::Verification(format!("{}: {m}", dir.display()));
    if summary.config_digest != digest {
        return Err(fail("report.json digest does not match config.json".into()));
    }
    let params = cfg.fluid_params();
    let mut outcome = VerifyOutcome {
        rows_checked: 0,
        max_rel_diff: 0.0,
    };
    let mut check = |rec: &[f64], fresh: &[f64], what: &str| -> Result<()> {
        let d = rec
            .iter()
            .zip(fresh)
            .map(|(a, b)| rel_diff(*a, *b))
            .fold(0.0, f64::max);
        outcome.rows_checked += 1;
        outcome.max_rel_diff = outcome.max_rel_diff.max(d);
        if d > REDERIVE_TOL {
            return Err(fail(format!("{what} differs from its snapshot by {d:e}")));
        }
        Ok(())
    };
    let read_snap = |tag: &str, j: usize| -> Result<Snapshot> {
        let s = Snapshot::read(&snapshot_path(dir, tag, j))?;
        if s.header.digest != digest {
            return Err(fail(format!(
                "snapshot {tag}_{j:04} carries another digest"
            )));
        }
        Ok(s)
    };
    match summary.kind.as_str() {
        "3d" => {
            let table = read_table(&dir.join("timeseries.csv"))?;
            if table.digest != digest {
                return Err(fail("timeseries.csv digest does not match".into()));
            }
            for j in snapshot_indices(dir, "3d")? {
                let s3 = read_snap("3d", j)?.to_state3d()?;
                let s1 = read_snap("ref", j)?.to_state1d()?;
                let row = table
                    .rows
                    .get(j)
                    .ok_or_else(|| Error::Verification(format!("no timeseries row {j}")))?;
                let fresh = evaluate(&s3, &s1, &params)?.row();
                check(row, &fresh, &format!("timeseries row {j}"))?;
            }
            let reports: Vec<EntropyReport> =
                table.rows.iter().map(|r| report_from_row(r)).collect();
            let (e0, sup, gronwall) = summarize_reports(&reports);
            let recorded = summary
                .sup
                .ok_or_else(|| Error::Verification("missing sup".into()))?;
            check(
                &[
                    summary.initial_e_norm.unwrap_or(f64::NAN),
                    recorded.rel_entropy_norm,
                    recorded.metric_density,
                    recorded.metric_velocity,
                    summary.gronwall.and_then(|g| g.value()).unwrap_or(f64::NAN),
                ],
                &[
                    e0,
                    sup.rel_entropy_norm,
                    sup.metric_density,
                    sup.metric_velocity,
                    gronwall.value().unwrap_or(f64::NAN),
                ],
                "report.json summary",
            )?;
        }
        "1d" => {
            if cfg.output.step_log {
                let table = read_table(&dir.join("steps.csv"))?;
                for j in snapshot_indices(dir, "1d")? {
                    let s = read_snap("1d", j)?.to_state1d()?;
                    let Some(row) = table.rows.iter().find(|r| r[0] == s.t) else {
                        return Err(fail(format!("no steps.csv row at t = {}", s.t)));
                    };
                    let r = StepRow1D::record(&s, &params)?;
                    check(
                        row,
                        &[r.t, r.mass, r.momentum, r.kappa_entropy, r.max_d2_log_rho],
                        &format!("steps row at t = {}", s.t),
                    )?;
                }
            }
        }
        other => return Err(fail(format!("unknown run kind `{other}`"))),
    }
    Ok(outcome)
}

/// Rebuilds the summary-relevant fields of a report from a timeseries row.
fn report_from_row(r: &[f64]) -> EntropyReport {
    EntropyReport {
        t: r[0],
        rel_entropy: r[1],
        rel_entropy_norm: r[2],
        kinetic_gap: r[3],
        density_gap: r[4],
        metric_density: r[5],
        metric_velocity: r[6],
        kappa_entropy: r[7],
        kappa_entropy_norm: f64::NAN,
        dissipation: crate::entropy::DissipationRates {
            spin: r[8],
            density_gradient: r[9],
            strain: r[10],
            divergence: r[11],
        },
        min_rho: r[12],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    fn small(extra: &[&str]) -> RunConfig {
        let mut ov: Vec<String> = [
            "grid.n3=16",
            "grid.n1=2",
            "grid.eps=0.4",
            "scheme.end_time=0.002",
            "scheme.snapshots=4",
            "output.snapshot_stride=2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        ov.extend(extra.iter().map(|s| s.to_string()));
        parse_config("", &ov).unwrap()
    }

    #[test]
    fn run3d_directory_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(&[]);
        let run = run3d(&cfg, Some(dir.path())).unwrap();
        assert_eq!(run.reports.len(), 5);
        assert!(run.summary.initial_e_norm.unwrap() > 0.0);
        let out = verify_run(dir.path()).unwrap();
        assert_eq!(out.rows_checked, 4);
        assert_eq!(out.max_rel_diff, 0.0);
        let again = tempfile::tempdir().unwrap();
        run3d(&cfg, Some(again.path())).unwrap();
        for f in ["timeseries.csv", "steps.csv"] {
            assert_eq!(
                std::fs::read(dir.path().join(f)).unwrap(),
                std::fs::read(again.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn tampered_rows_are_caught() {
        let dir = tempfile::tempdir().unwrap();
        run3d(&small(&[]), Some(dir.path())).unwrap();
        let path = dir.path().join("timeseries.csv");
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut cells: Vec<String> = lines[4].split(',').map(str::to_string).collect();
        let v: f64 = cells[1].parse().unwrap();
        cells[1] = (v * 1.001).to_string();
        lines[4] = cells.join(",");
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        assert!(matches!(
            verify_run(dir.path()),
            Err(Error::Verification(_))
        ));
    }

    #[test]
    fn exactly_prepared_run_stays_on_the_extension() {
        let run = run3d(&small(&["init.delta_factor=0"]), None).unwrap();
        assert_eq!(run.summary.gronwall, Some(GronwallRatio::ExactlyPrepared));
        assert!(run.reports.iter().all(|r| r.rel_entropy_norm.abs() < 1e-14));
    }

    #[test]
    fn run1d_directory_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let (summary, traj) = run1d(&small(&[]), Some(dir.path())).unwrap();
        assert_eq!(summary.steps, traj.steps);
        assert!(summary.max_kappa_entropy_increase.unwrap() <= 0.0);
        let out = verify_run(dir.path()).unwrap();
        assert_eq!(out.rows_checked, 3);
    }
}
