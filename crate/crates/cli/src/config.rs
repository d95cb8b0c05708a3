//! Run configuration: TOML schema, flag overrides, validation and
//! instantiation of the space and potential.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ruelle::potential::{ising, renewal, xy};
use ruelle::space::gauss_legendre_space;
use ruelle::{Potential, SymbolSpace, TailRule};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default)]
    pub scan: ScanConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    Uniform { size: usize },
    Finite { weights: Vec<f64> },
    GaussLegendre { size: usize, interval: [f64; 2] },
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig::Uniform { size: 2 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "builtin", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialKind {
    Constant {
        value: f64,
    },
    Ising {
        #[serde(rename = "J")]
        j: f64,
        #[serde(default)]
        h: f64,
    },
    Xy {
        #[serde(rename = "J")]
        j: f64,
    },
    Renewal {
        /// Explicit `s_1..s_K`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        payoff: Option<Vec<f64>>,
        /// Generate `s_1..s_K` from the tail rule instead.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<usize>,
        /// Overrides the leading generated terms.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        head: Vec<f64>,
        tail: TailRule,
        /// Truncation depth, at most K; defaults to K.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<usize>,
    },
    Table {
        table_file: PathBuf,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct PotentialConfig {
    #[serde(flatten)]
    pub kind: PotentialKind,
    #[serde(default = "one")]
    pub beta: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            kind: PotentialKind::Constant { value: 0.0 },
            beta: 1.0,
        }
    }
}

/// Contents of a `table_file`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub depth: usize,
    pub table: Vec<f64>,
    #[serde(default)]
    pub var_bound: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// Kernel depth `d`; defaults to `max(k − 1, 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_entropy_n")]
    pub entropy_n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_invariance_tol")]
    pub invariance_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder_cap: Option<usize>,
    /// Writes the transfer kernel in COO text form (spectral command).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export_kernel: Option<PathBuf>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            depth: None,
            n_max: default_n_max(),
            entropy_n: default_entropy_n(),
            tol: default_tol(),
            max_iters: default_max_iters(),
            invariance_tol: default_invariance_tol(),
            seed: 0,
            threads: None,
            cylinder_cap: None,
            export_kernel: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default)]
    pub beta_min: f64,
    #[serde(default = "default_beta_max")]
    pub beta_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_kink_ratio")]
    pub kink_ratio: f64,
    #[serde(default = "default_floor")]
    pub absolute_floor: f64,
    #[serde(default = "yes")]
    pub parallel: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            beta_min: 0.0,
            beta_max: default_beta_max(),
            points: default_points(),
            kink_ratio: default_kink_ratio(),
            absolute_floor: default_floor(),
            parallel: true,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_n_max() -> usize {
    200
}
fn default_entropy_n() -> usize {
    6
}
fn default_tol() -> f64 {
    1e-12
}
fn default_max_iters() -> usize {
    100_000
}
fn default_invariance_tol() -> f64 {
    1e-10
}
fn default_beta_max() -> f64 {
    5.0
}
fn default_points() -> usize {
    51
}
fn default_kink_ratio() -> f64 {
    5.0
}
fn default_floor() -> f64 {
    1e-7
}

/// Flag values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub depth: Option<usize>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
}

/// A parsed config together with its source, kept for error anchoring.
pub struct Loaded {
    pub config: RunConfig,
    source: Option<(PathBuf, String)>,
}

impl Loaded {
    pub fn read(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Loaded {
                config: RunConfig::default(),
                source: None,
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| {
            let at = e
                .span()
                .map(|s| {
                    let (line, col) = line_col(&text, s.start);
                    format!(":{line}:{col}")
                })
                .unwrap_or_default();
            CliError::Config(format!(
                "{}{at}: {}",
                path.display(),
                e.message().trim_end()
            ))
        })?;
        let mut loaded = Loaded {
            config,
            source: Some((path.to_path_buf(), text)),
        };
        loaded.resolve_paths();
        Ok(loaded)
    }

    /// Relative paths in the file are taken relative to the file.
    fn resolve_paths(&mut self) {
        let Some(dir) = self
            .source
            .as_ref()
            .and_then(|(p, _)| p.parent())
            .map(Path::to_path_buf)
        else {
            return;
        };
        if let PotentialKind::Table { table_file } = &mut self.config.potential.kind {
            if table_file.is_relative() {
                *table_file = dir.join(&*table_file);
            }
        }
        if let Some(p) = &mut self.config.run.export_kernel {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        let run = &mut self.config.run;
        if let Some(s) = o.seed {
            run.seed = s;
        }
        if o.depth.is_some() {
            run.depth = o.depth;
        }
        if let Some(t) = o.tol {
            run.tol = t;
        }
        if o.threads.is_some() {
            run.threads = o.threads;
        }
    }

    /// `path:line: message`, anchored at the first line assigning `key`
    /// inside `[section]` when the key came from the file.
    fn error(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
        let anchor = self
            .source
            .as_ref()
            .map(|(path, text)| match find_key(text, section, key) {
                Some(line) => format!("{}:{line}: ", path.display()),
                None => format!("{}: ", path.display()),
            })
            .unwrap_or_default();
        CliError::Config(format!("{anchor}{section}.{key}: {msg}"))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let r = &c.run;
        if !(r.tol > 0.0 && r.tol.is_finite()) {
            return Err(self.error("run", "tol", format!("must be positive, got {}", r.tol)));
        }
        if !(r.invariance_tol > 0.0 && r.invariance_tol.is_finite()) {
            return Err(self.error("run", "invariance_tol", "must be positive"));
        }
        if r.max_iters == 0 {
            return Err(self.error("run", "max_iters", "must be positive"));
        }
        if r.n_max == 0 {
            return Err(self.error("run", "n_max", "must be positive"));
        }
        if r.entropy_n == 0 {
            return Err(self.error("run", "entropy_n", "must be positive"));
        }
        if r.threads == Some(0) {
            return Err(self.error("run", "threads", "must be positive"));
        }
        if !c.potential.beta.is_finite() {
            return Err(self.error("potential", "beta", "must be finite"));
        }
        let s = &c.scan;
        if s.points < 2 {
            return Err(self.error("scan", "points", "need at least two grid points"));
        }
        if !(s.beta_min.is_finite() && s.beta_max.is_finite() && s.beta_min < s.beta_max) {
            return Err(self.error("scan", "beta_max", "need finite beta_min < beta_max"));
        }
        if s.kink_ratio.is_nan() || s.kink_ratio <= 0.0 {
            return Err(self.error("scan", "kink_ratio", "must be positive"));
        }
        if s.absolute_floor.is_nan() || s.absolute_floor < 0.0 {
            return Err(self.error("scan", "absolute_floor", "must be non-negative"));
        }
        if let PotentialKind::Table { table_file } = &c.potential.kind {
            if !table_file.is_file() {
                return Err(self.error(
                    "potential",
                    "table_file",
                    format!("{} does not exist", table_file.display()),
                ));
            }
        }
        Ok(())
    }

    pub fn space(&self) -> Result<Arc<SymbolSpace<f64>>, CliError> {
        let built = match &self.config.space {
            SpaceConfig::Uniform { size } => SymbolSpace::uniform(*size),
            SpaceConfig::Finite { weights } => SymbolSpace::finite(weights.clone()),
            SpaceConfig::GaussLegendre { size, interval } => {
                gauss_legendre_space(*size, interval[0], interval[1])
            }
        };
        let key = match &self.config.space {
            SpaceConfig::Finite { .. } => "weights",
            _ => "size",
        };
        built.map(Arc::new).map_err(|e| self.error("space", key, e))
    }

    /// The configured potential multiplied by `beta`.
    pub fn potential(&self, space: Arc<SymbolSpace<f64>>) -> Result<Potential<f64>, CliError> {
        let p = &self.config.potential;
        let built = match &p.kind {
            PotentialKind::Constant { value } => Potential::constant(space, *value),
            PotentialKind::Ising { j, h } => ising(space, *j, *h),
            PotentialKind::Xy { j } => xy(space, *j),
            PotentialKind::Renewal {
                payoff,
                length,
                head,
                tail,
                truncation,
            } => {
                let mut seq = match (payoff, length) {
                    (Some(s), None) => s.clone(),
                    (None, Some(k)) => tail.payoff(*k).ok_or_else(|| {
                        self.error(
                            "potential",
                            "length",
                            "this tail rule cannot generate a payoff",
                        )
                    })?,
                    _ => {
                        return Err(self.error(
                            "potential",
                            "payoff",
                            "give exactly one of `payoff` and `length`",
                        ))
                    }
                };
                if head.len() > seq.len() {
                    return Err(self.error("potential", "head", "longer than the payoff sequence"));
                }
                seq[..head.len()].copy_from_slice(head);
                let k = truncation.unwrap_or(seq.len());
                renewal(space, &seq, *tail).and_then(|g| g.truncate(k))
            }
            PotentialKind::Table { table_file } => {
                let text = std::fs::read_to_string(table_file)
                    .map_err(|e| self.error("potential", "table_file", e))?;
                let t: TableFile = serde_json::from_str(&text).map_err(|e| {
                    self.error(
                        "potential",
                        "table_file",
                        format!("{}: {e}", table_file.display()),
                    )
                })?;
                Potential::new(space, t.depth, t.table, t.var_bound)
            }
        };
        match built {
            Ok(f) => Ok(if p.beta == 1.0 { f } else { f.scale(p.beta) }),
            Err(e) if e.is_resource() => Err(CliError::Core(e)),
            Err(e) => Err(self.error("potential", "builtin", e)),
        }
    }

    /// Kernel depth, checked against the cylinder cap.
    pub fn depth(&self, f: &Potential<f64>) -> Result<usize, CliError> {
        let required = f.depth().saturating_sub(1).max(1);
        let d = self.config.run.depth.unwrap_or(required);
        if d < required {
            return Err(self.error(
                "run",
                "depth",
                format!(
                    "depth-{} potential needs kernel depth ≥ {required}, got {d}",
                    f.depth()
                ),
            ));
        }
        f.space().cylinder_count(d + 1).map_err(CliError::Core)?;
        Ok(d)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, col)
}

fn find_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}
