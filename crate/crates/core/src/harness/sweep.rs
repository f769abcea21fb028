//! The eps-sweep: one 3D run per thickness with `delta = delta_factor * eps`,
//! then verdicts computed from the recorded rows only.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::RunConfig;
use super::output::{read_records, write_json, write_records};
use super::run::{run3d, VERSION};

/// Every Gronwall ratio must stay below this.
pub const GRONWALL_CAP: f64 = 10.0;
/// The ratio at the thinnest box may exceed the one at the thickest by at
/// most this factor.
pub const GRONWALL_GROWTH: f64 = 1.25;
/// Bound on sup E_norm when every member starts exactly on the extension.
pub const EXACT_BUDGET: f64 = 1e-12;

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub delta: f64,
    pub initial_e_norm: Option<f64>,
    pub sup_e_norm: Option<f64>,
    /// Empty when the member started exactly prepared.
    pub gronwall_ratio: Option<f64>,
    pub sup_metric_density: Option<f64>,
    pub sup_metric_velocity: Option<f64>,
    pub wall_clock_s: f64,
    pub steps: usize,
    pub config_digest: String,
    /// `ok`, or `failed: <reason>`.
    pub status: String,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub version: String,
    pub config_digest: String,
    pub records: Vec<SweepRecord>,
    pub verdicts: Vec<Verdict>,
    /// Least-squares slope of `log sup E_norm` against `log eps`; recorded,
    /// not asserted.
    pub empirical_slope: Option<f64>,
    pub complete: bool,
}

impl SweepResult {
    pub fn passed(&self) -> bool {
        self.complete && self.verdicts.iter().all(|v| v.pass)
    }
}

fn strictly_decreasing(name: &str, values: &[f64]) -> Verdict {
    let pass = values.windows(2).all(|w| w[1] < w[0]);
    Verdict {
        name: name.into(),
        pass,
        detail: format!("{values:?}"),
    }
}

/// Verdicts from recorded rows. A single row yields none.
pub fn verdicts(records: &[SweepRecord]) -> Vec<Verdict> {
    if records.len() < 2 {
        return Vec::new();
    }
    if let Some(bad) = records.iter().find(|r| !r.ok()) {
        return vec![Verdict {
            name: "complete".into(),
            pass: false,
            detail: format!("eps = {}: {}", bad.eps, bad.status),
        }];
    }
    let col = |f: fn(&SweepRecord) -> Option<f64>| -> Vec<f64> {
        records.iter().map(|r| f(r).unwrap_or(f64::NAN)).collect()
    };
    let sup_e = col(|r| r.sup_e_norm);
    if records.iter().all(|r| r.gronwall_ratio.is_none()) {
        let worst = sup_e.iter().copied().fold(0.0, f64::max);
        return vec![Verdict {
            name: "exact_manifold".into(),
            pass: worst <= EXACT_BUDGET,
            detail: format!("max sup E_norm {worst:e} <= {EXACT_BUDGET:e}"),
        }];
    }
    let mut out = vec![
        strictly_decreasing("sup_e_norm_decreasing", &sup_e),
        strictly_decreasing("metric_density_decreasing", &col(|r| r.sup_metric_density)),
        strictly_decreasing(
            "metric_velocity_decreasing",
            &col(|r| r.sup_metric_velocity),
        ),
    ];
    let ratios = col(|r| r.gronwall_ratio);
    let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
    let capped = ratios.iter().all(|&g| g <= GRONWALL_CAP);
    let flat = last <= GRONWALL_GROWTH * first;
    out.push(Verdict {
        name: "gronwall_bounded".into(),
        pass: capped && flat,
        detail: format!(
            "ratios {ratios:?}; cap {GRONWALL_CAP}, thinnest/thickest {:.4} <= {GRONWALL_GROWTH}",
            last / first
        ),
    });
    out
}

/// Least-squares slope of `log y` on `log eps` over finite positive values.
pub fn empirical_slope(records: &[SweepRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.eps.ln(), r.sup_e_norm.filter(|&e| e > 0.0)?.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

fn member_dir(dir: &Path, eps: f64) -> std::path::PathBuf {
    dir.join(format!("eps_{eps}"))
}

/// Runs every member in order of decreasing `eps`. A failing member stops
/// the sweep; the rows so far are kept and the result is marked incomplete.
pub fn sweep(cfg: &RunConfig, dir: Option<&Path>) -> Result<SweepResult> {
    let list = &cfg.grid.eps_list;
    if list.is_empty() || list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "eps_list = {list:?} must be non-empty and strictly decreasing"
        )));
    }
    let mut records = Vec::new();
    let mut complete = true;
    for &eps in list {
        let member = cfg.with_eps(eps);
        let sub = dir.map(|d| member_dir(d, eps));
        let record = match run3d(&member, sub.as_deref()) {
            Ok(run) => {
                let s = &run.summary;
                let sup = s.sup.expect("3d summary has suprema");
                SweepRecord {
                    eps,
                    delta: member.delta(eps),
                    initial_e_norm: s.initial_e_norm,
                    sup_e_norm: Some(sup.rel_entropy_norm),
                    gronwall_ratio: s.gronwall.and_then(|g| g.value()),
                    sup_metric_density: Some(sup.metric_density),
                    sup_metric_velocity: Some(sup.metric_velocity),
                    wall_clock_s: s.wall_clock_s,
                    steps: s.steps,
                    config_digest: s.config_digest.clone(),
                    status: "ok".into(),
                }
            }
            Err(e) => {
                complete = false;
                SweepRecord {
                    eps,
                    delta: member.delta(eps),
                    initial_e_norm: None,
                    sup_e_norm: None,
                    gronwall_ratio: None,
                    sup_metric_density: None,
                    sup_metric_velocity: None,
                    wall_clock_s: 0.0,
                    steps: 0,
                    config_digest: member.digest(),
                    status: format!("failed: {e}"),
                }
            }
        };
        records.push(record);
        if !complete {
            break;
        }
    }
    let result = SweepResult {
        version: VERSION.into(),
        config_digest: cfg.digest(),
        verdicts: verdicts(&records),
        empirical_slope: empirical_slope(&records),
        records,
        complete,
    };
    if let Some(d) = dir {
        write_json(&d.join("config.json"), cfg)?;
        write_records(&d.join("sweep.csv"), &result.config_digest, &result.records)?;
        write_json(&d.join("sweep.json"), &result)?;
    }
    Ok(result)
}

/// Recomputes verdicts and slope from `sweep.csv` alone.
pub fn reverdict(dir: &Path) -> Result<SweepResult> {
    let (digest, records): (String, Vec<SweepRecord>) = read_records(&dir.join("sweep.csv"))?;
    let complete = records.iter().all(SweepRecord::ok);
    Ok(SweepResult {
        version: VERSION.into(),
        config_digest: digest,
        verdicts: verdicts(&records),
        empirical_slope: empirical_slope(&records),
        records,
        complete,
    })
}

/// Re-derives every member directory and checks that the stored verdicts
/// follow from `sweep.csv`.
pub fn verify_sweep(dir: &Path) -> Result<usize> {
    let stored: SweepResult = super::output::read_json(&dir.join("sweep.json"))?;
    let fresh = reverdict(dir)?;
    if fresh.verdicts != stored.verdicts || fresh.records.len() != stored.records.len() {
        return Err(Error::Verification(
            "sweep.json verdicts do not follow from sweep.csv".into(),
        ));
    }
    let mut rows = 0;
    for r in stored.records.iter().filter(|r| r.ok()) {
        rows += super::run::verify_run(&member_dir(dir, r.eps))?.rows_checked;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    fn record(eps: f64, sup: f64, g: Option<f64>) -> SweepRecord {
        SweepRecord {
            eps,
            delta: eps,
            initial_e_norm: Some(sup),
            sup_e_norm: Some(sup),
            gronwall_ratio: g,
            sup_metric_density: Some(sup),
            sup_metric_velocity: Some(sup),
            wall_clock_s: 0.0,
            steps: 1,
            config_digest: "d".into(),
            status: "ok".into(),
        }
    }

    #[test]
    fn verdicts_follow_the_rows() {
        let good = [record(0.4, 3.0, Some(1.0)), record(0.2, 2.0, Some(1.1))];
        assert!(verdicts(&good).iter().all(|v| v.pass));
        let flat = [record(0.4, 3.0, Some(1.0)), record(0.2, 3.0, Some(1.0))];
        assert!(!verdicts(&flat)[0].pass);
        let growing = [record(0.4, 3.0, Some(1.0)), record(0.2, 2.0, Some(2.0))];
        assert!(!verdicts(&growing)[3].pass);
        assert!(verdicts(&good[..1]).is_empty());
        let exact = [record(0.4, 0.0, None), record(0.2, 0.0, None)];
        let v = verdicts(&exact);
        assert_eq!(v.len(), 1);
        assert!(v[0].pass);
    }

    #[test]
    fn slope_of_a_power_law() {
        let rows = [
            record(0.4, 0.4f64.powi(2), None),
            record(0.2, 0.2f64.powi(2), None),
            record(0.1, 0.1f64.powi(2), None),
        ];
        assert!((empirical_slope(&rows).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_sweep_round_trips_through_its_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "",
            &[
                "grid.n3=16".into(),
                "grid.n1=2".into(),
                "grid.eps_list=[0.4, 0.2]".into(),
                "scheme.end_time=0.001".into(),
                "scheme.snapshots=2".into(),
                "output.step_log=false".into(),
            ],
        )
        .unwrap();
        let res = sweep(&cfg, Some(dir.path())).unwrap();
        assert!(res.complete);
        assert_eq!(res.records.len(), 2);
        assert_eq!(res.verdicts.len(), 4);
        let again = reverdict(dir.path()).unwrap();
        assert_eq!(again.verdicts, res.verdicts);
        assert_eq!(again.records, res.records);
        assert_eq!(verify_sweep(dir.path()).unwrap(), 6);
    }

    #[test]
    fn failing_member_is_marked() {
        let cfg = parse_config(
            "",
            &[
                "grid.n3=16".into(),
                "grid.n1=2".into(),
                "grid.eps_list=[0.4, 0.2]".into(),
                "init.delta_factor=100".into(),
            ],
        )
        .unwrap();
        let res = sweep(&cfg, None).unwrap();
        assert!(!res.complete && !res.passed());
        assert_eq!(res.records.len(), 1);
        assert!(res.records[0].status.starts_with("failed"));
    }
}
