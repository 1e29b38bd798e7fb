use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spme_core::analysis::{BarenblattCheck, DominationCheck, LadderConfig, WeakFormRefinement};
use spme_core::extinction::{log_spaced, Convention, McConfig};
use spme_core::{Grid1D, Profile, SolverConfig};

use crate::error::CliError;

/// Resolved run configuration. Every section has defaults, so an empty
/// document is valid; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub solver: SolverSection,
    pub grid: GridSection,
    pub profile: Profile,
    pub output: OutputSection,
    pub mc: McSection,
    pub ladder: LadderSection,
    pub contraction: ContractionSection,
    pub convergence: ConvergenceSection,
    pub barenblatt: BarenblattCheck,
    pub weakform: WeakFormRefinement,
    pub domination: DominationCheck,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            solver: SolverSection::default(),
            grid: GridSection::default(),
            profile: Profile::Bump {
                center: 0.0,
                half_width: 0.5,
                height: 1.0,
            },
            output: OutputSection::default(),
            mc: McSection::default(),
            ladder: LadderSection::default(),
            contraction: ContractionSection::default(),
            convergence: ConvergenceSection::default(),
            barenblatt: BarenblattCheck::default(),
            weakform: WeakFormRefinement::default(),
            domination: DominationCheck::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub m: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub max_dt: Option<f64>,
    pub extinction_tol: Option<f64>,
    pub max_steps: usize,
    /// Brownian sampling step; `None` means a quarter of the smallest `epsilon`.
    pub path_dt: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let base = SolverConfig::new(2.0, 1.0, 0.01, Grid1D { a: -1.0, b: 1.0, n: 128 }, 1.0);
        Self {
            m: base.m,
            nu: base.nu,
            epsilon: base.epsilon,
            t_end: base.t_end,
            cfl: base.cfl,
            max_dt: None,
            extinction_tol: None,
            max_steps: base.max_steps,
            path_dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { a: -1.0, b: 1.0, n: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub snapshot_stride: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
            snapshot_stride: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n_paths: usize,
    pub horizon_min: f64,
    pub horizon_max: f64,
    pub horizon_points: usize,
    pub convention: Convention,
    pub m_bar: Option<f64>,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n_paths: 200,
            horizon_min: 0.1,
            horizon_max: 20.0,
            horizon_points: 12,
            convention: Convention::Heuristic,
            m_bar: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSection {
    pub levels: Vec<f64>,
    pub n_paths: usize,
}

impl Default for LadderSection {
    fn default() -> Self {
        Self {
            levels: vec![0.08, 0.04, 0.02, 0.01],
            n_paths: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionSection {
    pub kappa: f64,
    /// `None` means the middle half of the grid interval.
    pub k: Option<(f64, f64)>,
}

impl Default for ContractionSection {
    fn default() -> Self {
        Self { kappa: 0.2, k: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub tau: f64,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self { tau: 0.05 }
    }
}

impl RunConfig {
    pub fn grid(&self) -> Grid1D {
        Grid1D {
            a: self.grid.a,
            b: self.grid.b,
            n: self.grid.n,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            cfl: s.cfl,
            extinction_tol: s.extinction_tol,
            max_steps: s.max_steps,
            max_dt: s.max_dt,
            ..SolverConfig::new(s.m, s.nu, s.epsilon, self.grid(), s.t_end)
        }
    }

    pub fn path_dt(&self, smallest_epsilon: f64) -> f64 {
        self.solver.path_dt.unwrap_or(smallest_epsilon / 4.0)
    }

    pub fn mc_config(&self) -> Result<McConfig, CliError> {
        let mc = &self.mc;
        Ok(McConfig {
            solver: self.solver_config(),
            profile: self.profile.clone(),
            n_paths: mc.n_paths,
            horizons: log_spaced(mc.horizon_min, mc.horizon_max, mc.horizon_points)?,
            master_seed: self.seed,
            convention: mc.convention,
            snapshot_stride: self.output.snapshot_stride,
            path_dt: self.solver.path_dt,
            m_bar: mc.m_bar,
        })
    }

    pub fn ladder_config(&self) -> LadderConfig {
        LadderConfig {
            solver: self.solver_config(),
            profile: self.profile.clone(),
            ladder: self.ladder.levels.clone(),
            n_paths: self.ladder.n_paths,
            master_seed: self.seed,
            snapshot_stride: self.output.snapshot_stride,
            path_dt: self.solver.path_dt,
        }
    }

    pub fn contraction_interval(&self) -> (f64, f64) {
        self.contraction.k.unwrap_or_else(|| {
            let (a, b) = (self.grid.a, self.grid.b);
            let quarter = 0.25 * (b - a);
            (a + quarter, b - quarter)
        })
    }
}

/// Reads `path` (TOML, or JSON when the extension is `.json`). A run manifest
/// is accepted too; its embedded configuration is used.
pub fn load_document(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::to_value(table).map_err(|e| CliError::Config(e.to_string()))?
    };
    match value {
        Value::Object(mut map) if map.contains_key("manifest_version") => map
            .remove("config")
            .ok_or_else(|| CliError::Config(format!("manifest {} has no config", path.display()))),
        Value::Object(_) => Ok(value),
        _ => Err(CliError::Config(format!("{}: top level must be a table", path.display()))),
    }
}

/// Applies `a.b.c=value`; the value is read as a TOML literal, falling back to
/// a bare string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("override `{assignment}` has an empty key segment")));
    }
    let value = parse_literal(raw.trim());
    let mut node = doc;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let map = match node {
            Value::Object(map) => map,
            _ => return Err(CliError::Config(format!("override `{key}`: `{part}` is inside a non-table value"))),
        };
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn parse_literal(raw: &str) -> Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t
            .remove("v")
            .and_then(|v| serde_json::to_value(v).ok())
            .unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Fills section defaults underneath the document, then deserializes with the
/// key path of the first offending field in the message.
pub fn resolve(doc: Value) -> Result<RunConfig, CliError> {
    let mut merged = serde_json::to_value(RunConfig::default()).map_err(|e| CliError::Config(e.to_string()))?;
    merge(&mut merged, doc);
    serde_path_to_error::deserialize(merged)
        .map_err(|e| CliError::Config(format!("invalid config at `{}`: {}", e.path(), e.inner())))
}

/// Recursive merge of tables; a table in `over` replaces a non-table in `base`.
/// The tagged `profile` section is replaced as a whole when its kind changes.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let kind_changes = matches!(
                    (b.get(&k), &v),
                    (Some(Value::Object(old)), Value::Object(new))
                        if new.get("kind").is_some_and(|n| Some(n) != old.get("kind"))
                );
                match b.get_mut(&k) {
                    Some(slot) if !kind_changes => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut doc = match path {
        Some(p) => load_document(p)?,
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    resolve(doc)
}
