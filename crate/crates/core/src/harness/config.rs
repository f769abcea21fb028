//! Run configuration: a TOML file with sections `fluid`, `grid`, `scheme`,
//! `init` and `output`, plus `section.key=value` overrides.
//!
//! Every key is optional; missing keys take the defaults below. Unknown
//! sections or keys are errors. Precedence is override > file > default.
//!
//! ```toml
//! [fluid]
//! mu = 1.0            # mu(rho) = mu * rho
//! kappa = 0.5         # open interval (0, 1)
//! gamma = 2.0         # > 1
//! a = 1.0
//! rho_floor = 1e-8
//!
//! [grid]
//! n3 = 128            # axial cells, shared by the 1D reference
//! n1 = 16             # cross-section cells per direction
//! eps = 0.1
//! eps_list = [0.4, 0.2, 0.1]   # sweep only, strictly decreasing
//!
//! [scheme]
//! cfl_advective = 0.4
//! cfl_viscous = 0.25
//! end_time = 0.25
//! snapshots = 100     # equal output intervals
//! formulation = "primitive"    # 1D only: primitive | augmented
//! slab_count = 1
//!
//! [init]
//! profile = "wave"    # wave | uniform | snapshot
//! rho_amplitude = 0.2
//! u_amplitude = 0.1
//! mode = 1
//! delta_factor = 1.0  # perturbation size delta = delta_factor * eps
//! seed = 7
//! snapshot = "path/to/1d.dat"  # profile = "snapshot" only
//!
//! [output]
//! dir = "out"
//! snapshot_stride = 10   # write every n-th output time; 0 = first and last
//! step_log = true        # per-step scalars in steps.csv
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eos::FluidParams;
use crate::error::{ConfigIssue, Error, Result};
use crate::fields::Grid1D;
use crate::solver1d::{Formulation, Scheme1DConfig};
use crate::solver3d::Scheme3DConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidSection {
    pub mu: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub a: f64,
    pub rho_floor: f64,
}

impl Default for FluidSection {
    fn default() -> Self {
        let p = FluidParams::default();
        Self {
            mu: p.mu,
            kappa: p.kappa,
            gamma: p.gamma,
            a: p.a,
            rho_floor: p.rho_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n3: usize,
    pub n1: usize,
    pub eps: f64,
    pub eps_list: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n3: 128,
            n1: 16,
            eps: 0.1,
            eps_list: vec![0.4, 0.2, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub cfl_advective: f64,
    pub cfl_viscous: f64,
    pub end_time: f64,
    pub snapshots: usize,
    pub formulation: Formulation,
    pub slab_count: usize,
}

impl Default for SchemeSection {
    fn default() -> Self {
        let s = Scheme3DConfig::default();
        Self {
            cfl_advective: s.cfl_advective,
            cfl_viscous: s.cfl_viscous,
            end_time: s.end_time,
            snapshots: s.snapshots,
            formulation: Formulation::Primitive,
            slab_count: s.slab_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Wave,
    Uniform,
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSection {
    pub profile: Profile,
    pub rho_amplitude: f64,
    pub u_amplitude: f64,
    pub mode: usize,
    pub delta_factor: f64,
    pub seed: u64,
    pub snapshot: Option<PathBuf>,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            profile: Profile::Wave,
            rho_amplitude: 0.2,
            u_amplitude: 0.1,
            mode: 1,
            delta_factor: 1.0,
            seed: 7,
            snapshot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub snapshot_stride: usize,
    pub step_log: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_stride: 10,
            step_log: true,
        }
    }
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fluid: FluidSection,
    pub grid: GridSection,
    pub scheme: SchemeSection,
    pub init: InitSection,
    pub output: OutputSection,
}

const SCHEMA: [(&str, &[&str]); 5] = [
    ("fluid", &["mu", "kappa", "gamma", "a", "rho_floor"]),
    ("grid", &["n3", "n1", "eps", "eps_list"]),
    (
        "scheme",
        &[
            "cfl_advective",
            "cfl_viscous",
            "end_time",
            "snapshots",
            "formulation",
            "slab_count",
        ],
    ),
    (
        "init",
        &[
            "profile",
            "rho_amplitude",
            "u_amplitude",
            "mode",
            "delta_factor",
            "seed",
            "snapshot",
        ],
    ),
    ("output", &["dir", "snapshot_stride", "step_log"]),
];

impl RunConfig {
    pub fn fluid_params(&self) -> FluidParams {
        let f = &self.fluid;
        FluidParams {
            mu: f.mu,
            kappa: f.kappa,
            gamma: f.gamma,
            a: f.a,
            rho_floor: f.rho_floor,
        }
    }

    pub fn scheme1d(&self) -> Scheme1DConfig {
        let s = &self.scheme;
        Scheme1DConfig {
            cfl_advective: s.cfl_advective,
            cfl_viscous: s.cfl_viscous,
            end_time: s.end_time,
            snapshots: s.snapshots,
            formulation: s.formulation,
        }
    }

    pub fn scheme3d(&self) -> Scheme3DConfig {
        let s = &self.scheme;
        Scheme3DConfig {
            cfl_advective: s.cfl_advective,
            cfl_viscous: s.cfl_viscous,
            end_time: s.end_time,
            snapshots: s.snapshots,
            slab_count: s.slab_count,
        }
    }

    /// Perturbation size for a given `eps`.
    pub fn delta(&self, eps: f64) -> f64 {
        self.init.delta_factor * eps
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Copy with `grid.eps` replaced, as used by sweep members.
    pub fn with_eps(&self, eps: f64) -> Self {
        let mut c = self.clone();
        c.grid.eps = eps;
        c
    }

    /// Range and cross-field violations as `(section, key, message)`.
    pub fn violations(&self) -> Vec<(&'static str, String, String)> {
        let mut out = Vec::new();
        let mut push = |section: &'static str, msgs: Vec<String>| {
            for m in msgs {
                let key = m.split_whitespace().next().unwrap_or("").to_string();
                out.push((section, key, m));
            }
        };
        push("fluid", self.fluid_params().violations());
        push("scheme", self.scheme3d().violations(Some(self.grid.n3)));

        let g = &self.grid;
        let mut grid = Vec::new();
        if g.n3 < Grid1D::MIN_CELLS {
            grid.push(format!("n3 = {} must be >= {}", g.n3, Grid1D::MIN_CELLS));
        }
        if g.n1 < 1 {
            grid.push("n1 = 0 must be >= 1".to_string());
        }
        if !(g.eps > 0.0 && g.eps.is_finite()) {
            grid.push(format!("eps = {} must be > 0", g.eps));
        }
        if g.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            grid.push("eps_list entries must be > 0".to_string());
        }
        if g.eps_list.is_empty() {
            grid.push("eps_list must not be empty".to_string());
        }
        if g.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            grid.push(format!(
                "eps_list = {:?} must be strictly decreasing",
                g.eps_list
            ));
        }
        push("grid", grid);

        let i = &self.init;
        let mut init = Vec::new();
        if !(i.rho_amplitude >= 0.0 && i.rho_amplitude < 1.0) {
            init.push(format!(
                "rho_amplitude = {} must lie in [0, 1)",
                i.rho_amplitude
            ));
        }
        if !i.u_amplitude.is_finite() {
            init.push(format!("u_amplitude = {} must be finite", i.u_amplitude));
        }
        if i.mode < 1 {
            init.push("mode = 0 must be >= 1".to_string());
        }
        if !(i.delta_factor >= 0.0 && i.delta_factor.is_finite()) {
            init.push(format!("delta_factor = {} must be >= 0", i.delta_factor));
        }
        if i.profile == Profile::Snapshot && i.snapshot.is_none() {
            init.push("snapshot must be set when profile = \"snapshot\"".to_string());
        }
        push("init", init);
        out
    }
}

/// Parses and validates configuration text with `section.key=value`
/// overrides applied on top.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![ConfigIssue {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        }])
    })?;
    let mut issues = Vec::new();
    for ov in overrides {
        if let Err(message) = apply_override(&mut table, ov) {
            issues.push(ConfigIssue {
                line: None,
                message,
            });
        }
    }
    issues.extend(unknown_keys(&table, text));
    if !issues.is_empty() {
        return Err(Error::Config(issues));
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| {
            Error::Config(vec![ConfigIssue {
                line: None,
                message: e.message().trim().to_string(),
            }])
        })?;
    let issues: Vec<ConfigIssue> = cfg
        .violations()
        .into_iter()
        .map(|(section, key, message)| ConfigIssue {
            line: key_line(text, section, &key),
            message: format!("[{section}] {message}"),
        })
        .collect();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(issues))
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> std::result::Result<(), String> {
    let (path, raw) = ov
        .split_once('=')
        .ok_or_else(|| format!("override `{ov}` is not of the form section.key=value"))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| format!("override key `{}` must be section.key", path.trim()))?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(format!("`{section}` is not a section")),
    }
}

fn unknown_keys(table: &toml::Table, text: &str) -> Vec<ConfigIssue> {
    let mut out = Vec::new();
    for (section, value) in table {
        let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| s == section) else {
            out.push(ConfigIssue {
                line: section_line(text, section),
                message: format!("unknown section [{section}]"),
            });
            continue;
        };
        let toml::Value::Table(t) = value else {
            out.push(ConfigIssue {
                line: None,
                message: format!("`{section}` must be a section"),
            });
            continue;
        };
        for key in t.keys() {
            if !keys.contains(&key.as_str()) {
                out.push(ConfigIssue {
                    line: key_line(text, section, key),
                    message: format!("unknown key `{key}` in [{section}]"),
                });
            }
        }
    }
    out
}

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].matches('\n').count() + 1
}

fn section_line(text: &str, section: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim();
            l.starts_with('[') && l.trim_matches(|c| c == '[' || c == ']').trim() == section
        })
        .map(|i| i + 1)
}

/// Line of `key = ...` inside `[section]`, if written in the file.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            current = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        } else if current == section {
            if let Some((k, _)) = l.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues(r: Result<RunConfig>) -> Vec<ConfigIssue> {
        match r {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.fluid_params(), FluidParams::default());
        assert_eq!(c.scheme.end_time, 0.25);
        assert_eq!(c.digest().len(), 64);
    }

    #[test]
    fn kappa_one_is_rejected_with_its_line() {
        let text = "[fluid]\nmu = 1.0\nkappa = 1.0\n";
        let v = issues(parse_config(text, &[]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].line, Some(3));
        assert!(v[0].message.contains("open interval (0, 1)"), "{}", v[0]);
    }

    #[test]
    fn gamma_one_is_rejected() {
        let v = issues(parse_config("[fluid]\ngamma = 1\n", &[]));
        assert!(v[0].message.contains("gamma"));
        assert_eq!(v[0].line, Some(2));
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        let text = "[grid]\nn3 = 64\nnn1 = 4\n\n[extra]\nx = 1\n";
        let v = issues(parse_config(text, &[]));
        assert_eq!(v.len(), 2);
        assert!(v
            .iter()
            .any(|i| i.line == Some(3) && i.message.contains("nn1")));
        assert!(v
            .iter()
            .any(|i| i.line == Some(5) && i.message.contains("extra")));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let v = issues(parse_config("[fluid]\nmu = \n", &[]));
        assert_eq!(v[0].line, Some(2));
    }

    #[test]
    fn overrides_beat_the_file() {
        let text = "[fluid]\nkappa = 0.3\n[output]\ndir = \"a\"\n";
        let c = parse_config(
            text,
            &[
                "fluid.kappa=0.25".into(),
                "output.dir=b/c".into(),
                "grid.eps_list=[0.2, 0.1]".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.fluid.kappa, 0.25);
        assert_eq!(c.output.dir, PathBuf::from("b/c"));
        assert_eq!(c.grid.eps_list, vec![0.2, 0.1]);
        assert!(parse_config("", &["fluid.kappa".into()]).is_err());
    }

    #[test]
    fn eps_list_must_decrease() {
        let v = issues(parse_config("[grid]\neps_list = [0.1, 0.2]\n", &[]));
        assert_eq!(v[0].line, Some(2));
    }

    #[test]
    fn digest_tracks_content() {
        let a = RunConfig::default();
        assert_eq!(a.digest(), RunConfig::default().digest());
        assert_ne!(a.digest(), a.with_eps(0.2).digest());
    }
}
