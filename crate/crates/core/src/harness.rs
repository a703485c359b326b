//! Seeded experiment runner behind the `charvar` binary.
//!
//! A run is a pure function of its [`ExperimentConfig`]: the same config gives
//! the same report, byte for byte, apart from `elapsed_ms`. Nothing is seeded
//! from the clock or the OS.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::conjugacy::{constrained_conjugacy, gl_conjugacy, GlOptions, Target, Verdict};
use crate::matgroups::GroupKind;
use crate::outt::{character_collision_demo, collision_control, freeness_check, outt_catalog};
use crate::reps::Representation;
use crate::trace_algebra::{separation_trial, verify_generation_sl2, SeparationMode};

pub const MAX_RANK: usize = 3;
pub const MAX_LENGTH: usize = 10;
pub const MAX_TRIALS: usize = 10_000;

pub const TOOL: &str = "charvar";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    FrickeCheck,
    Separation,
    OuttCatalog,
    Collision,
    Freeness,
    Conjugacy,
    Fingerprint,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::FrickeCheck => "fricke-check",
            Subcommand::Separation => "separation",
            Subcommand::OuttCatalog => "outt-catalog",
            Subcommand::Collision => "collision",
            Subcommand::Freeness => "freeness",
            Subcommand::Conjugacy => "conjugacy",
            Subcommand::Fingerprint => "fingerprint",
        }
    }

    /// The statement each subcommand checks at desk scale.
    pub fn statement(self) -> &'static str {
        match self {
            Subcommand::FrickeCheck => "SL(2) trace functions of F2 are integer polynomials in tr a, tr b and tr ab",
            Subcommand::Separation => "trace fingerprints separate conjugacy classes of generic representations",
            Subcommand::OuttCatalog => {
                "trace-preserving outer automorphism groups of the standard SL, adjoint SL, \
                 orthogonal and symplectic realizations"
            }
            Subcommand::Collision => {
                "traces do not separate SO(2m) orbits: a representation and its flip share a character"
            }
            Subcommand::Freeness => "trace-preserving outer automorphisms act freely on irreducible characters",
            Subcommand::Conjugacy => "conjugacy of representation tuples decided through intertwiner spaces",
            Subcommand::Fingerprint => "character of a representation on canonical cyclic word classes",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Raw options as given on the command line; unset fields take
/// per-subcommand defaults in [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub group: Option<GroupKind>,
    pub rank: Option<usize>,
    pub length: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub inputs: Vec<PathBuf>,
    pub flip: bool,
}

impl ExperimentConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        ExperimentConfig {
            subcommand,
            group: None,
            rank: None,
            length: None,
            trials: None,
            seed: None,
            tol: None,
            out: None,
            format: Format::Json,
            inputs: Vec::new(),
            flip: false,
        }
    }
}

/// Config after defaults and bounds checks; echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub subcommand: Subcommand,
    pub group: Option<GroupKind>,
    pub rank: Option<usize>,
    pub length: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub format: Format,
    pub inputs: Vec<String>,
    pub flip: bool,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Run(String),
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Config(msg.into()))
}

fn bounded(name: &str, value: usize, lo: usize, hi: usize) -> Result<usize, HarnessError> {
    if value < lo || value > hi {
        return config_err(format!("--{name} {value} outside {lo}..={hi}"));
    }
    Ok(value)
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<ResolvedConfig, HarnessError> {
        use Subcommand::*;
        let sc = self.subcommand;
        let (group, rank, length, trials, tol, needs_seed) = match sc {
            FrickeCheck => (None, None, Some(8), Some(100), Some(1e-8), true),
            Separation => (Some(GroupKind::SL(2)), Some(2), Some(4), Some(200), None, true),
            OuttCatalog => (None, None, None, None, None, true),
            Collision => (Some(GroupKind::SO(2)), Some(2), None, None, None, true),
            Freeness => (Some(GroupKind::SO(4)), Some(2), None, Some(50), None, true),
            Conjugacy => (None, None, None, None, None, true),
            Fingerprint => (None, None, Some(6), None, None, false),
        };
        let pick = |given: Option<usize>, default: Option<usize>, name: &str| -> Result<Option<usize>, HarnessError> {
            match (given, default) {
                (Some(_), None) => config_err(format!("--{name} does not apply to {sc}")),
                (g, d) => Ok(g.or(d)),
            }
        };
        let rank = pick(self.rank, rank, "rank")?;
        let length = pick(self.length, length, "length")?;
        let trials = pick(self.trials, trials, "trials")?;
        if let Some(r) = rank {
            bounded("rank", r, 1, MAX_RANK)?;
        }
        if let Some(l) = length {
            bounded("length", l, 1, MAX_LENGTH)?;
        }
        if let Some(t) = trials {
            bounded("trials", t, 1, MAX_TRIALS)?;
        }
        let tol = match (self.tol, tol) {
            (Some(_), None) => return config_err(format!("--tol does not apply to {sc}")),
            (Some(t), Some(_)) if !(t.is_finite() && t >= 0.0) => {
                return config_err(format!("--tol must be finite and nonnegative, got {t}"))
            }
            (t, d) => t.or(d),
        };
        let group = match (sc, self.group) {
            (FrickeCheck | OuttCatalog | Fingerprint, Some(_)) => {
                return config_err(format!("--group does not apply to {sc}"))
            }
            (Conjugacy, g) => g,
            (_, g) => g.or(group),
        };
        if needs_seed && self.seed.is_none() {
            return config_err(format!("{sc} needs --seed (no implicit seeding)"));
        }
        if self.flip && sc != Separation {
            return config_err("--flip only applies to separation");
        }
        if self.format == Format::Csv && sc != Fingerprint {
            return config_err("CSV output is only available for fingerprint");
        }
        let want_inputs = match sc {
            Conjugacy => 2,
            Fingerprint => 1,
            _ => 0,
        };
        if self.inputs.len() != want_inputs {
            return config_err(format!("{sc} takes {want_inputs} --input file(s), got {}", self.inputs.len()));
        }
        match (sc, group) {
            (Collision | Freeness, Some(g)) if !matches!(g, GroupKind::SO(_) | GroupKind::SL(_)) => {
                return config_err(format!("{sc} needs an so(2m) group (or sl(n) as a collision control), got {g}"))
            }
            (Freeness, Some(g)) if !matches!(g, GroupKind::SO(n) if n % 2 == 0 && n >= 4) => {
                return config_err(format!("freeness needs so(2m) with m >= 2, got {g}"))
            }
            (Collision, Some(GroupKind::SO(n))) if n % 2 == 1 => {
                return config_err(format!("collision needs an even orthogonal group, got so{n}"))
            }
            (Separation, Some(g)) if self.flip && !g.is_even_orthogonal() => {
                return config_err(format!("--flip needs an even orthogonal group, got {g}"))
            }
            _ => {}
        }
        Ok(ResolvedConfig {
            subcommand: sc,
            group,
            rank,
            length,
            trials,
            seed: self.seed,
            tol,
            format: self.format,
            inputs: self.inputs.iter().map(|p| p.display().to_string()).collect(),
            flip: self.flip,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: Subcommand,
    pub statement: &'static str,
    pub config: ResolvedConfig,
    pub verdict: ReportVerdict,
    pub records: Value,
    /// Wall time of the run; the only field that varies between reruns.
    pub elapsed_ms: u64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn passed(&self) -> bool {
        self.verdict == ReportVerdict::Pass
    }
}

/// A finished run: the report, and the CSV body when CSV was requested.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub csv: Option<String>,
}

impl Outcome {
    /// What the CLI writes: CSV when requested, otherwise the JSON report.
    pub fn render(&self) -> String {
        self.csv.clone().unwrap_or_else(|| self.report.to_json())
    }
}

fn run_err(e: impl fmt::Display) -> HarnessError {
    HarnessError::Run(e.to_string())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn load(path: &str) -> Result<Representation, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.into(), message: e.to_string() })?;
    Representation::from_json(&text).map_err(|e| HarnessError::Config(format!("{path}: {e}")))
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let start = Instant::now();
    let cfg = config.resolve()?;
    let seed = cfg.seed.unwrap_or(0);
    let mut csv = None;
    let (pass, records) = match cfg.subcommand {
        Subcommand::FrickeCheck => {
            let r = verify_generation_sl2(cfg.length.unwrap(), cfg.trials.unwrap(), seed, cfg.tol.unwrap())
                .map_err(run_err)?;
            (r.passed, to_value(&r))
        }
        Subcommand::Separation => {
            let mode = if cfg.flip { SeparationMode::Flip } else { SeparationMode::InGroup };
            let r = separation_trial(
                cfg.group.unwrap(),
                cfg.rank.unwrap(),
                cfg.length.unwrap(),
                cfg.trials.unwrap(),
                seed,
                mode,
            )
            .map_err(run_err)?;
            let pass = match mode {
                SeparationMode::InGroup => r.confusions == 0,
                SeparationMode::Flip => {
                    r.flip_collisions == r.flip_pairs
                        && r.confusion.diff_predicted_same == r.flip_collisions
                        && r.confusion.same_predicted_diff == 0
                }
            };
            (pass, to_value(&r))
        }
        Subcommand::OuttCatalog => {
            let r = outt_catalog(seed).map_err(run_err)?;
            (r.iter().all(|e| e.matches), to_value(&r))
        }
        Subcommand::Collision => {
            let (group, rank) = (cfg.group.unwrap(), cfg.rank.unwrap());
            let r = match group {
                GroupKind::SO(n) => character_collision_demo(n / 2, rank, seed),
                g => collision_control(g, rank, seed),
            }
            .map_err(run_err)?;
            (r.valid, to_value(&r))
        }
        Subcommand::Freeness => {
            let GroupKind::SO(n) = cfg.group.unwrap() else { unreachable!("checked in resolve") };
            let r = freeness_check(n / 2, cfg.rank.unwrap(), cfg.trials.unwrap(), seed).map_err(run_err)?;
            (r.passed, to_value(&r))
        }
        Subcommand::Conjugacy => {
            let a = load(&cfg.inputs[0])?;
            let b = load(&cfg.inputs[1])?;
            let cert = match cfg.group {
                Some(kind) => constrained_conjugacy(&a, &b, Target::Group(kind), seed),
                None => gl_conjugacy(&a, &b, GlOptions { sl_normalize: false, seed }),
            }
            .map_err(|e| HarnessError::Config(e.to_string()))?;
            (cert.verdict == Verdict::Conjugate, to_value(&cert))
        }
        Subcommand::Fingerprint => {
            let rep = load(&cfg.inputs[0])?;
            let fp = rep.fingerprint(cfg.length.unwrap()).map_err(run_err)?;
            if cfg.format == Format::Csv {
                csv = Some(fp.to_csv());
            }
            (true, to_value(&fp))
        }
    };
    let report = Report {
        tool: TOOL,
        version: VERSION,
        subcommand: cfg.subcommand,
        statement: cfg.subcommand.statement(),
        config: cfg,
        verdict: if pass { ReportVerdict::Pass } else { ReportVerdict::Fail },
        records,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };
    Ok(Outcome { report, csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sc: Subcommand) -> ExperimentConfig {
        ExperimentConfig { seed: Some(1), ..ExperimentConfig::new(sc) }
    }

    #[test]
    fn defaults_resolve() {
        let r = cfg(Subcommand::FrickeCheck).resolve().unwrap();
        assert_eq!((r.length, r.trials, r.tol), (Some(8), Some(100), Some(1e-8)));
        let r = cfg(Subcommand::Collision).resolve().unwrap();
        assert_eq!(r.group, Some(GroupKind::SO(2)));
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            ExperimentConfig { rank: Some(4), ..cfg(Subcommand::Separation) },
            ExperimentConfig { length: Some(11), ..cfg(Subcommand::FrickeCheck) },
            ExperimentConfig { trials: Some(10_001), ..cfg(Subcommand::Freeness) },
            ExperimentConfig { seed: None, ..cfg(Subcommand::OuttCatalog) },
            ExperimentConfig { tol: Some(-1.0), ..cfg(Subcommand::FrickeCheck) },
            ExperimentConfig { format: Format::Csv, ..cfg(Subcommand::Separation) },
            ExperimentConfig { group: Some(GroupKind::SO(3)), ..cfg(Subcommand::Collision) },
            ExperimentConfig { group: Some(GroupKind::SO(2)), ..cfg(Subcommand::Freeness) },
            ExperimentConfig { flip: true, ..cfg(Subcommand::Separation) },
            ExperimentConfig { rank: Some(2), ..cfg(Subcommand::OuttCatalog) },
            cfg(Subcommand::Conjugacy),
        ];
        for c in bad {
            assert!(matches!(c.resolve(), Err(HarnessError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn reports_embed_statement_and_version() {
        let c = ExperimentConfig { length: Some(3), trials: Some(2), ..cfg(Subcommand::FrickeCheck) };
        let out = run(&c).unwrap();
        assert!(out.report.passed());
        let v: Value = serde_json::from_str(&out.report.to_json()).unwrap();
        assert_eq!(v["tool"], TOOL);
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["statement"], Subcommand::FrickeCheck.statement());
        assert_eq!(v["config"]["length"], 3);
    }
}
