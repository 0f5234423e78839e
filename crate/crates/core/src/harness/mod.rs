//! Run configuration, the analysis pipeline, and the verification report.
//!
//! The pipeline discretizes `F_Θ`, builds the exact and ε-inflated graphs
//! for the system and its time reversal, extracts and labels the sets,
//! infers the flag types, and runs the requested checks.

pub mod checks;
pub mod report;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, BilinearSystem, SystemSpec};
use crate::error::{Error, Result, StageExt};
use crate::flag::{self, CellComplex, FiberMap, FlagPoint, FlagSignature, TOL_FRAME};
use crate::setfinder::{self, CellGraph, LabeledSet};
use crate::weyl::ThetaSet;
pub use report::{CheckResult, SetSummary, Status, VerificationReport};

/// Random flags at which the accessibility rank is tested.
const ACCESSIBILITY_POINTS: usize = 16;

fn default_resolution() -> usize {
    360
}
fn default_samples() -> usize {
    4
}
fn default_level() -> usize {
    1
}
fn default_tau() -> f64 {
    0.5
}
fn default_epsilon_factor() -> f64 {
    1.5
}
fn default_checks() -> Vec<String> {
    checks::REGISTERED.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub system: SystemSpec,
    #[serde(default)]
    pub theta: ThetaSet,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_samples")]
    pub samples_per_cell: usize,
    /// Grid steps per side of each control axis.
    #[serde(default = "default_level")]
    pub control_level: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Absolute chain jump size; defaults to `epsilon_factor · radius`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_epsilon_factor")]
    pub epsilon_factor: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    /// Cell complex file, read if present and written otherwise.
    #[serde(default)]
    pub complex_cache: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(system: SystemSpec) -> Self {
        Self {
            system,
            theta: ThetaSet::empty(),
            resolution: default_resolution(),
            samples_per_cell: default_samples(),
            control_level: default_level(),
            tau: default_tau(),
            epsilon: None,
            epsilon_factor: default_epsilon_factor(),
            seed: 0,
            checks: default_checks(),
            complex_cache: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.theta.validate(self.system.n)?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must be positive")))
            }
        };
        positive("tau", self.tau)?;
        positive("epsilon_factor", self.epsilon_factor)?;
        if let Some(eps) = self.epsilon {
            positive("epsilon", eps)?;
        }
        for (name, v) in [
            ("resolution", self.resolution),
            ("samples_per_cell", self.samples_per_cell),
            ("control_level", self.control_level),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if let Some(bad) = self.checks.iter().find(|c| !checks::REGISTERED.contains(&c.as_str())) {
            return Err(Error::Config(format!("unknown check {bad:?}; known: {}", checks::REGISTERED.join(", "))));
        }
        Ok(())
    }

    fn wants(&self, check: &str) -> bool {
        self.checks.iter().any(|c| c == check)
    }
}

/// Everything the pipeline computed, for callers that need more than the report.
#[derive(Debug)]
pub struct Analysis {
    pub report: VerificationReport,
    pub complex: CellComplex,
    pub forward: CellGraph,
    pub control_sets: Vec<LabeledSet>,
    pub chain_sets: Vec<LabeledSet>,
}

fn load_or_build_complex(config: &RunConfig, signature: &FlagSignature, anchors: &[FlagPoint]) -> Result<CellComplex> {
    let build = || flag::discretize_anchored(signature, config.resolution, config.seed, anchors);
    let Some(path) = &config.complex_cache else {
        return build();
    };
    if path.exists() {
        let complex = CellComplex::load_json(path)?;
        let anchored = anchors.iter().all(|a| {
            complex
                .locate(a)
                .map(|c| flag::distance(a, complex.center(c)).unwrap_or(f64::INFINITY) <= TOL_FRAME)
                .unwrap_or(false)
        });
        if complex.signature() == signature
            && complex.resolution() == config.resolution
            && complex.seed() == config.seed
            && anchored
        {
            return Ok(complex);
        }
        return Err(Error::Config(format!("{} holds a complex for different parameters", path.display())));
    }
    let complex = build()?;
    complex.save_json(path)?;
    Ok(complex)
}

fn timed(f: impl FnOnce() -> Result<CheckResult>) -> Result<CheckResult> {
    let start = Instant::now();
    let mut r = f()?;
    r.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(r)
}

/// Runs the whole pipeline. Stage failures come back as [`Error::Stage`].
pub fn analyze(config: &RunConfig) -> Result<Analysis> {
    let start = Instant::now();
    config.validate().stage("config")?;
    let sys = BilinearSystem::from_spec(&config.system).stage("system")?;
    let n = sys.n();
    let theta = &config.theta;
    let signature = FlagSignature::from_theta(n, theta).stage("config")?;

    let samples = dynamics::control_samples(sys.range(), config.control_level).stage("controls")?;
    let controls: Vec<Vec<f64>> = samples.iter().map(|s| s.u.clone()).collect();
    let cores = setfinder::core_points(&sys, theta, &samples).stage("cores")?;
    if cores.is_empty() {
        return Err(Error::Label("no interior control gives a split regular drift".into()).in_stage("cores"));
    }
    let anchors: Vec<FlagPoint> = cores.iter().map(|c| c.point.clone()).collect();
    let complex = load_or_build_complex(config, &signature, &anchors).stage("discretize")?;
    let epsilon = config.epsilon.unwrap_or(config.epsilon_factor * complex.radius());
    if epsilon <= 0.0 {
        return Err(Error::Config("epsilon is zero; the complex has zero radius".into()).in_stage("config"));
    }
    let accessibility = dynamics::accessibility_rank(&sys, &signature, ACCESSIBILITY_POINTS, config.seed);

    let images = setfinder::flow_images(&sys, &complex, config.tau, &controls, config.samples_per_cell, config.seed)
        .stage("graph")?;
    let forward = setfinder::graph_from_images(&complex, &images, 0.0).stage("graph")?;
    let inflated = setfinder::graph_from_images(&complex, &images, epsilon).stage("graph")?;
    let doubled = setfinder::graph_from_images(&complex, &images, 2.0 * epsilon).stage("graph")?;
    drop(images);

    let raw_controls = setfinder::control_sets(&forward).stage("sets")?;
    let raw_chains = setfinder::chain_control_sets(&inflated).stage("sets")?;
    let raw_doubled = setfinder::chain_control_sets(&doubled).stage("sets")?;
    let control_sets = setfinder::label_sets(&raw_controls, &cores, &complex).stage("label")?;
    let chain_sets = setfinder::label_sets(&raw_chains, &cores, &complex).stage("label")?;

    let mut flag_type_errors = Vec::new();
    let mut infer = |sets: &[LabeledSet], what: &str| match setfinder::semigroup_flag_type(sets, n, theta) {
        Ok(t) => Some(t),
        Err(e) => {
            flag_type_errors.push(format!("{what}: {e}"));
            None
        }
    };
    let theta_s = infer(&control_sets, "control sets");
    let theta_phi = infer(&chain_sets, "chain sets");

    let needs_backward = config.wants(checks::CONDENSATION) || config.wants(checks::CORE_INTERSECTION);
    let backward = if needs_backward {
        let bsys = dynamics::backward_system(&sys);
        let bimages =
            setfinder::flow_images(&bsys, &complex, config.tau, &controls, config.samples_per_cell, config.seed)
                .stage("backward graph")?;
        let bgraph = setfinder::graph_from_images(&complex, &bimages, 0.0).stage("backward graph")?;
        let bsets = setfinder::label_sets(&setfinder::control_sets(&bgraph).stage("backward sets")?, &cores, &complex)
            .stage("backward label")?;
        Some((bgraph, bsets))
    } else {
        None
    };

    let band = 2.0 * complex.radius();
    let checks_enabled = accessibility.passed;
    let mut results = Vec::new();
    for name in checks::REGISTERED.iter().filter(|c| config.wants(c)) {
        let name = *name;
        if name != checks::ACCESSIBILITY && !checks_enabled {
            results.push(CheckResult::skip(name, "accessibility rank condition failed"));
            continue;
        }
        let result = timed(|| match name {
            checks::ACCESSIBILITY => Ok(CheckResult::from_bool(
                name,
                accessibility.passed,
                format!(
                    "Lie algebra of dimension {}, minimal rank {} on a manifold of dimension {}",
                    accessibility.algebra_dimension, accessibility.min_rank, accessibility.manifold_dimension
                ),
            )
            .measure("min_rank", accessibility.min_rank)
            .tolerance("min_rank", accessibility.manifold_dimension as f64)),
            checks::CONTAINMENT => {
                Ok(checks::check_containment(&control_sets, &chain_sets)
                    .measure("raw_chain_components", raw_chains.len()))
            }
            checks::COUNTS => {
                Ok(checks::check_counts(n, theta, theta_s.as_ref(), theta_phi.as_ref(), &control_sets, &chain_sets)?
                    .measure("raw_control_components", raw_controls.len())
                    .measure("raw_chain_components", raw_chains.len()))
            }
            checks::CLOSURE => Ok(checks::check_closure(
                &control_sets,
                &chain_sets,
                &complex,
                epsilon,
                theta_s.as_ref(),
                theta_phi.as_ref(),
            )),
            checks::MONOTONICITY => Ok(checks::check_monotonicity(&raw_chains, &raw_doubled, epsilon, 2.0 * epsilon)),
            checks::CONDENSATION => {
                let (bgraph, bsets) = backward.as_ref().expect("backward graph was built");
                checks::check_condensation(n, theta, &forward, &control_sets, bgraph, bsets)
            }
            checks::CORE_INTERSECTION => {
                let (bgraph, bsets) = backward.as_ref().expect("backward graph was built");
                Ok(checks::check_core_intersection(&complex, &forward, &control_sets, bgraph, bsets, band))
            }
            checks::EXHAUSTION => {
                if !theta.is_empty() || n > 3 {
                    return Ok(CheckResult::skip(
                        name,
                        "exhaustion formulas are checked on the maximal flag for n ≤ 3",
                    ));
                }
                let mut fibers = BTreeMap::new();
                for i in 1..n {
                    let sig_i = FlagSignature::from_theta(n, &ThetaSet::new(n, [i])?)?;
                    let complex_i = flag::discretize(&sig_i, config.resolution, config.seed)?;
                    fibers.insert(i, FiberMap::new(&complex, &complex_i, i)?);
                }
                checks::check_exhaustion(&forward, &control_sets, &chain_sets, &complex, &fibers, band)
            }
            other => unreachable!("unregistered check {other}"),
        })
        .stage("checks")?;
        results.push(result);
    }

    let passed = results.iter().all(|r| r.status != Status::Fail);
    let report = VerificationReport {
        n,
        theta: theta.clone(),
        cells: complex.len(),
        radius: complex.radius(),
        tau: config.tau,
        epsilon,
        controls,
        complex_file: config.complex_cache.as_ref().map(|p| p.display().to_string()),
        accessibility,
        core_points: cores.len(),
        control_sets: control_sets.iter().map(SetSummary::from).collect(),
        chain_sets: chain_sets.iter().map(SetSummary::from).collect(),
        raw_control_components: raw_controls.len(),
        raw_chain_components: raw_chains.len(),
        theta_s,
        theta_phi,
        flag_type_errors,
        checks: results,
        passed,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(Analysis { report, complex, forward, control_sets, chain_sets })
}

pub fn run(config: &RunConfig) -> Result<VerificationReport> {
    Ok(analyze(config)?.report)
}

/// One row per cell: id, frame entries (row-major), and the indices of the
/// labeled control and chain sets containing it (empty if none).
pub fn cells_csv(analysis: &Analysis) -> String {
    let complex = &analysis.complex;
    let nn = complex.n() * complex.n();
    let mut out = String::from("cell");
    for k in 0..nn {
        let _ = write!(out, ",x{k}");
    }
    out.push_str(",control_set,chain_set\n");
    let owner = |sets: &[LabeledSet], c: usize| {
        sets.iter().position(|s| s.cells.contains(&c)).map(|i| i.to_string()).unwrap_or_default()
    };
    for c in 0..complex.len() {
        let _ = write!(out, "{c}");
        for v in complex.center(c).to_row_major() {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{},{}", owner(&analysis.control_sets, c), owner(&analysis.chain_sets, c));
    }
    out
}

/// Exit status for a finished run: 0 if nothing failed, 1 otherwise.
pub fn exit_code(report: &VerificationReport) -> i32 {
    if report.passed {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SL2: &str =
        r#"{"n": 2, "A": [[1, 0], [0, -1]], "B": [[[0, -1], [1, 0]]], "range": {"lo": [-0.3], "hi": [0.3]}"#;

    fn config(extra: &str) -> String {
        format!("{SL2}{extra}}}")
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = RunConfig::from_json(&config("")).unwrap();
        assert_eq!(c.resolution, 360);
        assert_eq!(c.checks.len(), checks::REGISTERED.len());
        assert!(c.epsilon.is_none());
        assert!(RunConfig::from_json(&config(r#", "tau": 0"#)).is_err());
        assert!(RunConfig::from_json(&config(r#", "checks": ["nonsense"]"#)).is_err());
        assert!(RunConfig::from_json(&config(r#", "theta": [2]"#)).is_err());
        let missing = RunConfig::from_json(r#"{"n": 2, "B": [], "range": {"lo": [-1], "hi": [1]}}"#).unwrap_err();
        assert!(missing.to_string().contains("`A`"), "{missing}");
    }

    #[test]
    fn small_run_passes_and_is_deterministic() {
        let c = RunConfig::from_json(&config(r#", "resolution": 120"#)).unwrap();
        let a = run(&c).unwrap();
        assert!(a.passed, "{}", a.to_json());
        assert_eq!(a.checks.len(), checks::REGISTERED.len());
        let b = run(&c).unwrap();
        assert_eq!(a.without_timing().to_json(), b.without_timing().to_json());
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let rot = r#"{"n": 2, "A": [[0, -1], [1, 0]], "B": [[[0, -1], [1, 0]]], "range": {"lo": [-0.1], "hi": [0.1]}}"#;
        let err = run(&RunConfig::from_json(rot).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "cores", .. }), "{err}");
    }
}
