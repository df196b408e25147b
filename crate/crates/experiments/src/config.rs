//! Experiment configuration: parsing, validation and per-kind defaults.
//!
//! A config file holds a JSON array of experiment objects, an object `{"experiments": [...]}`,
//! or a single experiment object. Unknown keys are rejected, and so are keys that the chosen
//! experiment kind does not read.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use dvolab_core::ensembles::LawDescriptor;
use dvolab_core::selection::rho_k;
use dvolab_core::{BodyDescriptor, ConvexBody, ScalarLaw};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GaussianDvoretzky,
    TheoremA,
    Cotype,
    B1Intersection,
    TwoStage,
    Jl,
    BernsteinTails,
    Rearrangement,
    Lprt,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::GaussianDvoretzky,
        ExperimentKind::TheoremA,
        ExperimentKind::Cotype,
        ExperimentKind::B1Intersection,
        ExperimentKind::TwoStage,
        ExperimentKind::Jl,
        ExperimentKind::BernsteinTails,
        ExperimentKind::Rearrangement,
        ExperimentKind::Lprt,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GaussianDvoretzky => "gaussian_dvoretzky",
            ExperimentKind::TheoremA => "theorem_a",
            ExperimentKind::Cotype => "cotype",
            ExperimentKind::B1Intersection => "b1_intersection",
            ExperimentKind::TwoStage => "two_stage",
            ExperimentKind::Jl => "jl",
            ExperimentKind::BernsteinTails => "bernstein_tails",
            ExperimentKind::Rearrangement => "rearrangement",
            ExperimentKind::Lprt => "lprt",
        }
    }

    /// Keys this kind reads, besides `id`, `kind`, `trials`, `master_seed` and `cotype_note`.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            ExperimentKind::GaussianDvoretzky => &["body", "law", "n", "N", "eps", "c", "mc_samples", "threshold"],
            ExperimentKind::TheoremA => &[
                "body", "law", "n", "k", "N", "c", "c3", "alpha", "u", "delta", "mc_samples", "threshold", "budget",
                "restarts", "iterations",
            ],
            ExperimentKind::Cotype => &["body", "law", "n", "N", "u", "delta", "mc_samples", "threshold", "restarts"],
            ExperimentKind::B1Intersection => {
                &["law", "cells", "c", "c3", "mc_samples", "budget", "restarts", "iterations", "threshold"]
            }
            ExperimentKind::TwoStage => &[
                "body", "law", "n", "m", "M", "N", "c", "c3", "mc_samples", "threshold", "budget", "restarts",
                "iterations", "pipeline_trials", "lemma_constant",
            ],
            ExperimentKind::Jl => &["law", "n", "N", "points", "threshold"],
            ExperimentKind::BernsteinTails => &["law", "u_grid", "n_grid", "mc_samples", "threshold"],
            ExperimentKind::Rearrangement => {
                &["body", "law", "n", "N", "eps", "vertices", "n_grid", "mc_samples", "restarts", "threshold"]
            }
            ExperimentKind::Lprt => &["law", "cells", "c", "restarts", "iterations", "threshold"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A law given as a bare name or as `{"law": name}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Name(ScalarLaw),
    Object(LawDescriptor),
}

impl LawSpec {
    pub fn law(&self) -> ScalarLaw {
        match self {
            LawSpec::Name(l) => *l,
            LawSpec::Object(d) => d.law,
        }
    }
}

/// One experiment. After [`parse_config`] every field the kind reads is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodyDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LawSpec>,
    /// Ambient dimension of the body.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Sample size (rows of Γ).
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub big_n: Option<usize>,
    /// Second-stage sample size.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub big_m: Option<usize>,
    /// Cube dimension of the second-stage lemma.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Proportionality constant for the sample size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Proportionality constant for the extracted index set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cotype_note: Option<String>,
    /// Frequency a verdict must reach.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// `(n, k)` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma_constant: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            id: None,
            kind,
            body: None,
            law: None,
            n: None,
            big_n: None,
            big_m: None,
            m: None,
            k: None,
            eps: None,
            rho: None,
            u: None,
            delta: None,
            alpha: None,
            c: None,
            c3: None,
            trials: None,
            mc_samples: None,
            master_seed: 0,
            cotype_note: None,
            threshold: None,
            points: None,
            cells: None,
            u_grid: None,
            n_grid: None,
            vertices: None,
            budget: None,
            restarts: None,
            iterations: None,
            pipeline_trials: None,
            lemma_constant: None,
        }
    }

    pub fn id(&self) -> &str {
        self.id.as_deref().unwrap_or(self.kind.name())
    }

    pub fn law(&self) -> ScalarLaw {
        self.law.map_or(ScalarLaw::Gaussian, |l| l.law())
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(1)
    }

    /// Keys present in this config (serialized names).
    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut push = |present: bool, name: &'static str| {
            if present {
                keys.push(name);
            }
        };
        push(self.body.is_some(), "body");
        push(self.law.is_some(), "law");
        push(self.n.is_some(), "n");
        push(self.big_n.is_some(), "N");
        push(self.big_m.is_some(), "M");
        push(self.m.is_some(), "m");
        push(self.k.is_some(), "k");
        push(self.eps.is_some(), "eps");
        push(self.rho.is_some(), "rho");
        push(self.u.is_some(), "u");
        push(self.delta.is_some(), "delta");
        push(self.alpha.is_some(), "alpha");
        push(self.c.is_some(), "c");
        push(self.c3.is_some(), "c3");
        push(self.mc_samples.is_some(), "mc_samples");
        push(self.threshold.is_some(), "threshold");
        push(self.points.is_some(), "points");
        push(self.cells.is_some(), "cells");
        push(self.u_grid.is_some(), "u_grid");
        push(self.n_grid.is_some(), "n_grid");
        push(self.vertices.is_some(), "vertices");
        push(self.budget.is_some(), "budget");
        push(self.restarts.is_some(), "restarts");
        push(self.iterations.is_some(), "iterations");
        push(self.pipeline_trials.is_some(), "pipeline_trials");
        push(self.lemma_constant.is_some(), "lemma_constant");
        keys
    }

    /// Fills in kind-specific defaults.
    pub fn with_defaults(mut self) -> Self {
        fn set<T>(slot: &mut Option<T>, value: T) {
            if slot.is_none() {
                *slot = Some(value);
            }
        }
        match self.kind {
            ExperimentKind::GaussianDvoretzky => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Gaussian));
                let n = self.n.unwrap_or(400);
                set(&mut self.body, BodyDescriptor::L2 { dim: n, radius: 1.0 });
                set(&mut self.eps, 0.25);
                set(&mut self.c, 1.0);
                set(&mut self.trials, 50);
                set(&mut self.mc_samples, 10_000);
                set(&mut self.threshold, 0.9);
            }
            ExperimentKind::TheoremA => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Gaussian));
                let n = self.n.unwrap_or(256);
                let k = self.k.unwrap_or(16);
                if self.body.is_none() {
                    self.n = Some(n);
                    self.k = Some(k);
                    self.body = Some(BodyDescriptor::IntersectionL1L2 { dim: n, rho: rho_k(n, k) });
                }
                set(&mut self.c, 2.0);
                set(&mut self.c3, 0.5);
                set(&mut self.alpha, 0.05);
                set(&mut self.u, 5.0);
                set(&mut self.delta, 0.1);
                set(&mut self.trials, 20);
                set(&mut self.mc_samples, 1000);
                set(&mut self.threshold, 0.9);
                set(&mut self.budget, 1);
                set(&mut self.restarts, 8);
                set(&mut self.iterations, 100);
            }
            ExperimentKind::Cotype => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Rademacher));
                let n = self.n.unwrap_or(64);
                set(&mut self.body, BodyDescriptor::Cube { dim: n, radius: 1.0 });
                set(&mut self.big_n, 32);
                set(&mut self.u, 5.0);
                set(&mut self.delta, 0.1);
                set(&mut self.trials, 40);
                set(&mut self.mc_samples, 2000);
                set(&mut self.threshold, 0.95);
                set(&mut self.restarts, 64);
                set(&mut self.cotype_note, "T = cube, T° = B1^n: l1 norms have cotype 2".to_string());
            }
            ExperimentKind::B1Intersection => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Gaussian));
                set(&mut self.cells, vec![(128, 8), (256, 16), (512, 32)]);
                set(&mut self.c, 1.5);
                set(&mut self.c3, 0.5);
                set(&mut self.trials, 3);
                set(&mut self.mc_samples, 1000);
                set(&mut self.budget, 1);
                set(&mut self.restarts, 8);
                set(&mut self.iterations, 100);
                set(&mut self.threshold, 0.9);
            }
            ExperimentKind::TwoStage => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Rademacher));
                let n = self.n.unwrap_or(256);
                set(&mut self.body, BodyDescriptor::Cube { dim: n, radius: 1.0 });
                set(&mut self.m, 64);
                set(&mut self.big_m, 16);
                set(&mut self.c, 1.0);
                set(&mut self.c3, 0.5);
                set(&mut self.trials, 30);
                set(&mut self.pipeline_trials, 3);
                set(&mut self.mc_samples, 1000);
                set(&mut self.threshold, 0.9);
                set(&mut self.budget, 1);
                set(&mut self.restarts, 8);
                set(&mut self.iterations, 100);
                set(&mut self.lemma_constant, 0.3);
            }
            ExperimentKind::Jl => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Rademacher));
                set(&mut self.n, 100);
                set(&mut self.big_n, 200);
                set(&mut self.points, 50);
                set(&mut self.trials, 100);
                set(&mut self.threshold, 0.95);
            }
            ExperimentKind::BernsteinTails => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Gaussian));
                set(&mut self.u_grid, vec![0.0625, 0.125, 0.25, 0.5, 1.0, 2.0]);
                set(&mut self.n_grid, vec![50, 200, 800]);
                set(&mut self.trials, 10_000);
                set(&mut self.mc_samples, 100_000);
                set(&mut self.threshold, 0.01);
            }
            ExperimentKind::Rearrangement => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Gaussian));
                if self.body.is_none() {
                    set(&mut self.n, 20);
                    set(&mut self.vertices, 100);
                }
                set(&mut self.big_n, 64);
                set(&mut self.eps, 0.25);
                set(&mut self.trials, 20);
                set(&mut self.mc_samples, 2000);
                set(&mut self.restarts, 64);
                set(&mut self.threshold, 2.0);
            }
            ExperimentKind::Lprt => {
                set(&mut self.law, LawSpec::Name(ScalarLaw::Rademacher));
                set(&mut self.cells, vec![(256, 16)]);
                set(&mut self.c, 0.5);
                set(&mut self.trials, 20);
                set(&mut self.restarts, 32);
                set(&mut self.iterations, 200);
                set(&mut self.threshold, 0.9);
            }
        }
        self
    }

    /// Checks ranges and cross-field constraints. `base_dir` resolves matrix paths in the body.
    pub fn validate(&self, base_dir: &Path) -> Result<(), (Option<&'static str>, String)> {
        let allowed = self.kind.keys();
        for key in self.present_keys() {
            if !allowed.contains(&key) {
                return Err((Some(key), format!("not used by experiment kind `{}`", self.kind)));
            }
        }
        if let Some(id) = &self.id {
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') {
                return Err((Some("id"), format!("`{id}` must be nonempty and use only [A-Za-z0-9_.-]")));
            }
        }
        if self.trials == Some(0) {
            return Err((Some("trials"), "must be at least 1".into()));
        }
        let positive_ints = [
            ("n", self.n),
            ("N", self.big_n),
            ("M", self.big_m),
            ("m", self.m),
            ("k", self.k),
            ("mc_samples", self.mc_samples),
            ("points", self.points),
            ("vertices", self.vertices),
            ("budget", self.budget),
            ("restarts", self.restarts),
            ("iterations", self.iterations),
        ];
        for (name, value) in positive_ints {
            if value == Some(0) {
                return Err((Some(name), "must be positive".into()));
            }
        }
        let positive_reals =
            [("rho", self.rho), ("u", self.u), ("delta", self.delta), ("c", self.c), ("c3", self.c3), ("lemma_constant", self.lemma_constant)];
        for (name, value) in positive_reals {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err((Some(name), format!("must be a positive finite number, got {v}")));
                }
            }
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps < 0.5) {
                return Err((Some("eps"), format!("must lie in (0, 1/2), got {eps}")));
            }
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err((Some("alpha"), format!("must lie in (0, 1), got {alpha}")));
            }
        }
        if let Some(t) = self.threshold {
            if !(t.is_finite() && t > 0.0) {
                return Err((Some("threshold"), format!("must be a positive finite number, got {t}")));
            }
            let is_frequency = !matches!(self.kind, ExperimentKind::Rearrangement);
            if is_frequency && t > 1.0 {
                return Err((Some("threshold"), format!("is a frequency or probability and must be ≤ 1, got {t}")));
            }
        }
        if self.mc_samples == Some(1) {
            return Err((Some("mc_samples"), "needs at least 2 samples for a standard error".into()));
        }
        if let Some(cells) = &self.cells {
            if cells.is_empty() {
                return Err((Some("cells"), "needs at least one (n, k) pair".into()));
            }
            if let Some((n, k)) = cells.iter().find(|(n, k)| *k == 0 || k > n) {
                return Err((Some("cells"), format!("cell ({n}, {k}) needs 1 ≤ k ≤ n")));
            }
        }
        if let Some(grid) = &self.u_grid {
            if grid.is_empty() || grid.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
                return Err((Some("u_grid"), "needs nonnegative finite values".into()));
            }
        }
        if let Some(grid) = &self.n_grid {
            if grid.is_empty() || grid.contains(&0) {
                return Err((Some("n_grid"), "needs positive sizes".into()));
            }
        }
        if self.kind == ExperimentKind::Jl && self.points.is_some_and(|p| p < 2) {
            return Err((Some("points"), "needs at least two points".into()));
        }
        if let Some(body) = &self.body {
            let built = body.build(base_dir).map_err(|e| (Some("body"), e.to_string()))?;
            if let Some(n) = self.n {
                if n != built.dim() {
                    return Err((Some("n"), format!("is {n} but the body has dimension {}", built.dim())));
                }
            }
            self.check_body(&built)?;
        }
        if self.kind == ExperimentKind::GaussianDvoretzky && self.law() != ScalarLaw::Gaussian {
            return Err((Some("law"), "the gaussian Dvoretzky experiment samples gaussian matrices only".into()));
        }
        Ok(())
    }

    fn check_body(&self, body: &ConvexBody) -> Result<(), (Option<&'static str>, String)> {
        use dvolab_core::BodyKind;
        match self.kind {
            ExperimentKind::GaussianDvoretzky => match body.kind() {
                BodyKind::EuclideanBall { .. } | BodyKind::Ellipsoid { .. } => Ok(()),
                _ => Err((Some("body"), "needs an l2 ball or an ellipsoid so that certificates are exact".into())),
            },
            ExperimentKind::Rearrangement => match body.kind() {
                BodyKind::SymmetricPolytope { .. } | BodyKind::EuclideanBall { .. } => Ok(()),
                _ => Err((Some("body"), "needs a polytope or an l2 ball".into())),
            },
            _ => Ok(()),
        }
    }
}

/// A config problem located in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Position of the experiment in the list.
    pub index: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{}:", p.display())?;
        }
        if let Some(l) = self.line {
            write!(f, "{l}:")?;
            if let Some(c) = self.column {
                write!(f, "{c}:")?;
            }
        }
        if self.path.is_some() || self.line.is_some() {
            f.write_str(" ")?;
        }
        match (self.index, &self.field) {
            (Some(i), Some(field)) => write!(f, "experiments[{i}].{field}: ")?,
            (Some(i), None) => write!(f, "experiments[{i}]: ")?,
            (None, Some(field)) => write!(f, "{field}: ")?,
            (None, None) => {}
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |p| before[p + 1..].chars().count()) + 1;
    (line, col)
}

fn offset_in(text: &str, part: &str) -> usize {
    part.as_ptr() as usize - text.as_ptr() as usize
}

fn json_error(text: &str, base: usize, e: &serde_json::Error, index: Option<usize>) -> ConfigError {
    let (line, column) = if e.line() == 0 {
        line_col(text, base)
    } else {
        let (base_line, base_col) = line_col(text, base);
        if e.line() == 1 {
            (base_line, base_col + e.column() - 1)
        } else {
            (base_line + e.line() - 1, e.column())
        }
    };
    let message = e.to_string();
    // serde_json appends " at line L column C" relative to the fragment; drop it.
    let message = match message.rfind(" at line ") {
        Some(p) => message[..p].to_string(),
        None => message,
    };
    let field = message
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next())
        .map(str::to_string);
    ConfigError { path: None, line: Some(line), column: Some(column), index, field, message }
}

/// Location of `"key"` inside an experiment object, for semantic errors.
fn key_position(text: &str, object: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    let base = offset_in(text, object);
    match object.find(&needle) {
        Some(p) => line_col(text, base + p),
        None => line_col(text, base),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Wrapped<'a> {
    #[serde(borrow)]
    experiments: Vec<&'a RawValue>,
}

/// Parses and validates a config text. Relative paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let trimmed = text.trim_start();
    let start = text.len() - trimmed.len();
    let items: Vec<&RawValue> = if trimmed.starts_with('[') {
        serde_json::from_str(text).map_err(|e| json_error(text, 0, &e, None))?
    } else if trimmed.starts_with('{') {
        let probe: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| json_error(text, 0, &e, None))?;
        if probe.contains_key("experiments") {
            let wrapped: Wrapped = serde_json::from_str(text).map_err(|e| json_error(text, 0, &e, None))?;
            wrapped.experiments
        } else {
            vec![serde_json::from_str(text).map_err(|e| json_error(text, 0, &e, None))?]
        }
    } else if trimmed.is_empty() {
        return Err(ConfigError {
            path: None,
            line: Some(1),
            column: Some(1),
            index: None,
            field: None,
            message: "empty config".into(),
        });
    } else {
        let (line, column) = line_col(text, start);
        return Err(ConfigError {
            path: None,
            line: Some(line),
            column: Some(column),
            index: None,
            field: None,
            message: "expected a JSON array or object of experiments".into(),
        });
    };
    let mut configs = Vec::with_capacity(items.len());
    let mut seen = HashSet::new();
    for (index, raw) in items.iter().enumerate() {
        let base = offset_in(text, raw.get());
        let cfg: ExperimentConfig =
            serde_json::from_str(raw.get()).map_err(|e| json_error(text, base, &e, Some(index)))?;
        let locate = |field: Option<&str>, message: String| {
            let (line, column) = key_position(text, raw.get(), field.unwrap_or("kind"));
            ConfigError {
                path: None,
                line: Some(line),
                column: Some(column),
                index: Some(index),
                field: field.map(str::to_string),
                message,
            }
        };
        cfg.validate(base_dir).map_err(|(field, message)| locate(field, message))?;
        let cfg = cfg.with_defaults();
        cfg.validate(base_dir).map_err(|(field, message)| locate(field, format!("after defaults: {message}")))?;
        if !seen.insert(cfg.id().to_string()) {
            return Err(locate(Some("id"), format!("duplicate experiment id `{}`", cfg.id())));
        }
        configs.push(cfg);
    }
    Ok(configs)
}

/// Reads and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: Some(path.to_path_buf()),
        line: None,
        column: None,
        index: None,
        field: None,
        message: e.to_string(),
    })?;
    let base_dir = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base_dir).map_err(|e| ConfigError { path: Some(path.to_path_buf()), ..e })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<ExperimentConfig>, ConfigError> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn minimal_jl_config_is_fully_defaulted() {
        let cfgs = parse(r#"{"kind": "jl", "n": 100, "N": 200, "trials": 10, "master_seed": 1}"#).unwrap();
        assert_eq!(cfgs.len(), 1);
        let c = &cfgs[0];
        assert_eq!(c.id(), "jl");
        assert_eq!((c.n, c.big_n, c.trials, c.master_seed), (Some(100), Some(200), Some(10), 1));
        assert_eq!(c.points, Some(50));
        assert_eq!(c.law(), ScalarLaw::Rademacher);
        assert_eq!(c.threshold, Some(0.95));
    }

    #[test]
    fn three_top_level_shapes() {
        let one = r#"{"kind": "jl"}"#;
        let list = r#"[{"kind": "jl"}, {"kind": "cotype"}]"#;
        let wrapped = r#"{"experiments": [{"kind": "jl", "id": "a"}, {"kind": "jl", "id": "b"}]}"#;
        assert_eq!(parse(one).unwrap().len(), 1);
        assert_eq!(parse(list).unwrap().len(), 2);
        let w = parse(wrapped).unwrap();
        assert_eq!(w.iter().map(|c| c.id()).collect::<Vec<_>>(), ["a", "b"]);
        assert!(parse("[]").unwrap().is_empty());
    }

    #[test]
    fn eps_out_of_range_is_rejected_with_location() {
        let text = "[\n  {\"kind\": \"jl\"},\n  {\"kind\": \"gaussian_dvoretzky\",\n   \"eps\": 0.7}\n]";
        let e = parse(text).unwrap_err();
        assert_eq!(e.index, Some(1));
        assert_eq!(e.field.as_deref(), Some("eps"));
        assert_eq!(e.line, Some(4));
        assert!(e.to_string().contains("(0, 1/2)"), "{e}");
        let e = parse(r#"{"kind": "gaussian_dvoretzky", "eps": 0.999}"#).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("eps"));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let e = parse(r#"[{"kind": "jl"}, {"kind": "jl"}]"#).unwrap_err();
        assert!(e.message.contains("duplicate"), "{e}");
        assert_eq!(e.index, Some(1));
        assert!(parse(r#"[{"kind": "jl"}, {"kind": "jl", "id": "jl2"}]"#).is_ok());
    }

    #[test]
    fn unknown_and_foreign_keys_are_rejected() {
        let text = "{\n \"kind\": \"jl\",\n \"bogus\": 3\n}";
        let e = parse(text).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("bogus"));
        assert_eq!(e.line, Some(3));
        let e = parse(r#"{"kind": "jl", "cells": [[8, 2]]}"#).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("cells"));
        assert!(e.message.contains("not used"));
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let e = parse("[\n {\"kind\": \"jl\",}\n]").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.column.is_some());
        let e = parse("[{\"kind\": \"nope\"}]").unwrap_err();
        assert!(e.message.contains("unknown variant"), "{e}");
    }

    #[test]
    fn law_as_string_or_object() {
        let a = parse(r#"{"kind": "jl", "law": "gaussian"}"#).unwrap();
        let b = parse(r#"{"kind": "jl", "law": {"law": "gaussian"}}"#).unwrap();
        assert_eq!(a[0].law(), ScalarLaw::Gaussian);
        assert_eq!(b[0].law(), ScalarLaw::Gaussian);
        assert!(parse(r#"{"kind": "jl", "law": "cauchy"}"#).is_err());
    }

    #[test]
    fn body_checks() {
        let e = parse(r#"{"kind": "gaussian_dvoretzky", "body": {"kind": "cube", "dim": 4}}"#).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("body"));
        let e = parse(r#"{"kind": "gaussian_dvoretzky", "n": 5, "body": {"kind": "l2", "dim": 4}}"#).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("n"));
        let ok = parse(r#"{"kind": "gaussian_dvoretzky", "body": {"kind": "ellipsoid", "semi_axes": [1, 2]}}"#);
        assert!(ok.is_ok());
        let e = parse(r#"{"kind": "gaussian_dvoretzky", "law": "rademacher"}"#).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("law"));
    }

    #[test]
    fn defaults_round_trip_through_json() {
        for kind in ExperimentKind::ALL {
            let cfg = ExperimentConfig::new(kind).with_defaults();
            let text = serde_json::to_string(&cfg).unwrap();
            let back = parse(&text).unwrap();
            assert_eq!(back[0], cfg, "{kind}");
        }
    }

    #[test]
    fn range_checks() {
        assert!(parse(r#"{"kind": "jl", "trials": 0}"#).is_err());
        assert!(parse(r#"{"kind": "jl", "points": 1}"#).is_err());
        assert!(parse(r#"{"kind": "lprt", "cells": [[4, 5]]}"#).is_err());
        assert!(parse(r#"{"kind": "jl", "threshold": 1.5}"#).is_err());
        assert!(parse(r#"{"kind": "theorem_a", "alpha": 1.0}"#).is_err());
        assert!(parse(r#"{"kind": "jl", "id": "bad id"}"#).is_err());
    }
}
