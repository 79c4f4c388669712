use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lattice::Dims;
use crate::pathfinding::Strategy;

/// Configuration shared by all subcommands, loadable from TOML.
///
/// Every field has a default, so a file only needs the keys it changes.
/// Command-line flags are applied on top of the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Trials per point estimate.
    pub trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Shrink lattices to 200 layers and trials to 200.
    pub quick: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    pub percolate: PercolateConfig,
    pub pathfind: PathfindConfig,
    pub contour: ContourConfig,
    pub heuristic: HeuristicConfig,
    pub sweep: SweepConfig,
}

pub const QUICK_LENGTH: u32 = 200;
pub const QUICK_TRIALS: u64 = 200;

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            trials: 1000,
            workers: None,
            quick: false,
            out: None,
            json: None,
            percolate: PercolateConfig::default(),
            pathfind: PathfindConfig::default(),
            contour: ContourConfig::default(),
            heuristic: HeuristicConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PercolateMode {
    /// Spanning probability along the long axis.
    Span,
    /// Smallest side length reaching the target.
    Lmin,
    /// Mean fraction of nodes in the largest cluster.
    Largest,
    NewmanZiff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PercolateConfig {
    pub mode: PercolateMode,
    pub dims: Dims,
    pub p: Grid,
    /// Target probability for the side length search.
    pub target: f64,
    /// Largest side length the search tries.
    pub cap: u32,
}

impl Default for PercolateConfig {
    fn default() -> Self {
        PercolateConfig {
            mode: PercolateMode::Span,
            dims: Dims::elongated(1000, 5),
            p: Grid(vec![0.5]),
            target: 0.95,
            cap: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathfindConfig {
    pub dims: Dims,
    pub p: Grid,
    pub window: WindowGrid,
    pub strategies: Vec<Strategy>,
}

impl Default for PathfindConfig {
    fn default() -> Self {
        PathfindConfig {
            dims: Dims::elongated(1000, 7),
            p: Grid(vec![0.45]),
            window: WindowGrid(vec![10]),
            strategies: vec![Strategy::RandomNode],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourMethod {
    /// Pathfinding success rate.
    Direct,
    /// The unique end-to-end component heuristic.
    UniqueComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourConfig {
    pub method: ContourMethod,
    pub sides: Vec<u32>,
    pub window: WindowGrid,
    pub length: u32,
    pub strategy: Strategy,
    pub target: f64,
    /// Bisection stops once the bracket is this narrow.
    pub tolerance: f64,
    pub trials_per_probe: u64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            method: ContourMethod::Direct,
            sides: vec![2, 3, 4, 5, 10, 15],
            window: WindowGrid((2..=15).collect()),
            length: 1000,
            strategy: Strategy::RandomNode,
            target: 0.95,
            tolerance: 0.005,
            trials_per_probe: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicChoice {
    StackedBlock,
    UniqueComponent,
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicConfig {
    pub kinds: Vec<HeuristicChoice>,
    pub sides: Vec<u32>,
    pub window: WindowGrid,
    pub p: Grid,
    pub length: u32,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            kinds: vec![HeuristicChoice::StackedBlock],
            sides: vec![10],
            window: WindowGrid(vec![15]),
            p: Grid(vec![0.4]),
            length: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Lattices to sweep; consecutive pairs also get a crossing row.
    pub dims: Vec<Dims>,
    pub p: Grid,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            dims: vec![Dims::cube(16), Dims::cube(24)],
            p: Grid::parse("0.2:0.3:0.005").expect("valid literal"),
        }
    }
}

/// Sequence of probabilities, written `a:b:step`, `a,b,c` or a single value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridInput", into = "Vec<f64>")]
pub struct Grid(pub Vec<f64>);

/// Sequence of window lengths, written `a:b[:step]`, `a,b,c` or a single value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WindowInput", into = "Vec<u32>")]
pub struct WindowGrid(pub Vec<u32>);

#[derive(Deserialize)]
#[serde(untagged)]
enum GridInput {
    Text(String),
    Value(f64),
    Values(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WindowInput {
    Text(String),
    Value(u32),
    Values(Vec<u32>),
}

/// Snaps range points to 10 decimals so `0.3:0.6:0.1` yields `0.6`, not `0.6000000000000001`.
fn snap(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("range `{s}` must look like start:stop:step"));
            }
            let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
            let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || b < a {
                return Err(format!("range `{s}` needs start <= stop and a positive step"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| snap(a + step * i as f64)).collect()
        } else {
            s.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
                .collect::<Result<Vec<_>, _>>()?
        };
        Grid::new(values)
    }

    pub fn new(values: Vec<f64>) -> Result<Self, String> {
        if values.is_empty() {
            return Err("empty probability grid".into());
        }
        if let Some(bad) = values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(format!("probability {bad} is outside [0, 1]"));
        }
        Ok(Grid(values))
    }
}

impl WindowGrid {
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("`{t}`: {e}"));
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let (a, b, step) = match parts.as_slice() {
                [a, b] => (num(a)?, num(b)?, 1),
                [a, b, c] => (num(a)?, num(b)?, num(c)?),
                _ => return Err(format!("range `{s}` must look like start:stop[:step]")),
            };
            if step == 0 || b < a {
                return Err(format!("range `{s}` needs start <= stop and a positive step"));
            }
            (a..=b).step_by(step as usize).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        WindowGrid::new(values)
    }

    pub fn new(values: Vec<u32>) -> Result<Self, String> {
        if values.is_empty() {
            return Err("empty window grid".into());
        }
        if values.contains(&0) || values.contains(&1) {
            return Err("window lengths must be at least 2".into());
        }
        Ok(WindowGrid(values))
    }
}

impl TryFrom<GridInput> for Grid {
    type Error = String;

    fn try_from(v: GridInput) -> Result<Self, String> {
        match v {
            GridInput::Text(s) => Grid::parse(&s),
            GridInput::Value(x) => Grid::new(vec![x]),
            GridInput::Values(xs) => Grid::new(xs),
        }
    }
}

impl TryFrom<WindowInput> for WindowGrid {
    type Error = String;

    fn try_from(v: WindowInput) -> Result<Self, String> {
        match v {
            WindowInput::Text(s) => WindowGrid::parse(&s),
            WindowInput::Value(x) => WindowGrid::new(vec![x]),
            WindowInput::Values(xs) => WindowGrid::new(xs),
        }
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

impl From<WindowGrid> for Vec<u32> {
    fn from(g: WindowGrid) -> Self {
        g.0
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Grid::parse(s)
    }
}

impl FromStr for WindowGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        WindowGrid::parse(s)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid {field}: {message}")]
    Field { field: &'static str, message: String },
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Config::from_toml(&text).map_err(|message| ConfigError::Parse {
            path: path.to_owned(),
            message,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Length and trial count after the quick preset is applied.
    pub fn effective_length(&self, length: u32) -> u32 {
        if self.quick {
            length.min(QUICK_LENGTH)
        } else {
            length
        }
    }

    pub fn effective_trials(&self, trials: u64) -> u64 {
        if self.quick {
            trials.min(QUICK_TRIALS)
        } else {
            trials
        }
    }

    /// Checks the fields that the type system does not.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |field, message: String| Err(ConfigError::Field { field, message });
        if self.trials == 0 {
            return field("trials", "must be positive".into());
        }
        if self.workers == Some(0) {
            return field("workers", "must be positive".into());
        }
        if !(self.percolate.target > 0.0 && self.percolate.target < 1.0) {
            return field("percolate.target", format!("{} is outside (0, 1)", self.percolate.target));
        }
        if self.percolate.cap == 0 {
            return field("percolate.cap", "must be positive".into());
        }
        if self.pathfind.strategies.is_empty() {
            return field("pathfind.strategies", "at least one strategy is required".into());
        }
        let c = &self.contour;
        if !(c.target > 0.0 && c.target < 1.0) {
            return field("contour.target", format!("{} is outside (0, 1)", c.target));
        }
        if !(c.tolerance > 0.0) {
            return field("contour.tolerance", "must be positive".into());
        }
        if c.trials_per_probe == 0 {
            return field("contour.trials_per_probe", "must be positive".into());
        }
        if c.sides.is_empty() || c.sides.contains(&0) {
            return field("contour.sides", "side lengths must be positive".into());
        }
        let h = &self.heuristic;
        if h.kinds.is_empty() {
            return field("heuristic.kinds", "at least one kind is required".into());
        }
        if h.sides.is_empty() || h.sides.contains(&0) {
            return field("heuristic.sides", "side lengths must be positive".into());
        }
        if self.sweep.dims.is_empty() {
            return field("sweep.dims", "at least one lattice is required".into());
        }
        Ok(())
    }
}
