//! Scenario configs: one JSON document per run.

use std::fmt;
use std::path::{Path, PathBuf};

use pullvexlab::harmonic::DescentOptions;
use pullvexlab::probes::{BrownianOptions, OYMode, OYOptions, RecurrenceOptions, TomographyCase};
use pullvexlab::regions::{FieldGrid, RegionSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalog::{ChartSpec, FamilySpec, FunctionSpec, MapSpec, MeshMetric, MeshSpec, SampleSpec};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Classify,
    Pullvex,
    Solve,
    Minimal,
    Tomography,
    Calabi,
    Wedge,
    Trap,
    Oy,
    Brownian,
    Recurrence,
    Halfspace,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Spread of `⟨a, u⟩` still read as one level (halfspace).
    pub tol_plane: f64,
    /// Relative tension allowed for maps taken as harmonic.
    pub harmonic_tol: f64,
    /// Subharmonicity slack as a fraction of the certified constant.
    pub subharmonic_fraction: f64,
    /// Growth from first to last family member read as unbounded.
    pub growth_factor: f64,
    /// Boundary shell for trap membership.
    pub membership_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_plane: 1e-8,
            harmonic_tol: 1e-8,
            subharmonic_fraction: 0.05,
            growth_factor: 1.5,
            membership_eps: 1e-9,
        }
    }
}

fn default_ks() -> Vec<usize> {
    vec![2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyInputs {
    /// Shorthand for `beta` functions.
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub functions: Vec<FunctionSpec>,
    pub points: Vec<Vec<f64>>,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PullvexInputs {
    pub function: FunctionSpec,
    pub map: MapSpec,
    pub domain: ChartSpec,
    pub target: ChartSpec,
    pub samples: SampleSpec,
    #[serde(default)]
    pub declared_c: Option<f64>,
}

fn euclidean_plane() -> ChartSpec {
    ChartSpec::Euclidean { dim: 2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveInputs {
    pub mesh: MeshSpec,
    /// Evaluated on the boundary vertices.
    pub boundary: MapSpec,
    #[serde(default = "euclidean_plane")]
    pub domain: ChartSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimalInputs {
    pub mesh: MeshSpec,
    pub boundary: MapSpec,
    #[serde(default)]
    pub descent: DescentOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyMesh {
    pub mesh: MeshSpec,
    #[serde(default)]
    pub metric: MeshMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyInputs {
    pub case: TomographyCase,
    pub map: MapSpec,
    pub domain: ChartSpec,
    pub target: ChartSpec,
    pub projection: MapSpec,
    pub base: ChartSpec,
    pub eta: FunctionSpec,
    pub samples: SampleSpec,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub mesh: Option<TomographyMesh>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalabiInputs {
    pub family: FamilySpec,
    pub parameters: Vec<f64>,
    pub projection: MapSpec,
}

fn default_spacing() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedgeInputs {
    pub region: RegionSpec,
    pub points: Vec<Vec<f64>>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_field_eps() -> f64 {
    0.2
}

fn default_trap_samples() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapInputs {
    pub region: RegionSpec,
    /// Width of the bump transition of the localized field.
    #[serde(default = "default_field_eps")]
    pub field_eps: f64,
    /// Points of the trap sampled for the mean-convexity constant.
    #[serde(default = "default_trap_samples")]
    pub samples: usize,
    #[serde(default)]
    pub membership_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub field_grid: Option<FieldGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OyMesh {
    pub mesh: MeshSpec,
    pub map: MapSpec,
    #[serde(default)]
    pub metric: MeshMetric,
    #[serde(default)]
    pub interior_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OyInputs {
    pub function: FunctionSpec,
    pub k_max: usize,
    pub mode: OYMode,
    /// Search chart; defaults to Euclidean space of the function's dimension.
    #[serde(default)]
    pub chart: Option<ChartSpec>,
    /// Search over the vertices of `function ∘ map` on a mesh instead.
    #[serde(default)]
    pub mesh: Option<OyMesh>,
    /// `seed` is replaced by the scenario seed.
    #[serde(default)]
    pub options: OYOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianInputs {
    pub chart: ChartSpec,
    pub start: Vec<f64>,
    /// `seed` is replaced by the scenario seed.
    #[serde(default)]
    pub options: BrownianOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceInputs {
    pub dim: usize,
    pub start_radius: f64,
    pub outer_radius: f64,
    /// `seed` is replaced by the scenario seed.
    #[serde(default)]
    pub options: RecurrenceOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceInputs {
    pub map: MapSpec,
    /// Exhausting family of domains, smallest first.
    pub family: Vec<MeshSpec>,
    #[serde(default = "flat_metric")]
    pub metric: MeshMetric,
    pub halfspaces: Vec<HalfspaceSpec>,
}

fn flat_metric() -> MeshMetric {
    MeshMetric::Flat
}

/// Parsed, command-specific inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Inputs {
    Classify(ClassifyInputs),
    Pullvex(PullvexInputs),
    Solve(SolveInputs),
    Minimal(MinimalInputs),
    Tomography(TomographyInputs),
    Calabi(CalabiInputs),
    Wedge(WedgeInputs),
    Trap(TrapInputs),
    Oy(OyInputs),
    Brownian(BrownianInputs),
    Recurrence(RecurrenceInputs),
    Halfspace(HalfspaceInputs),
}

fn parse<T: DeserializeOwned>(value: Value) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::ConfigInvalid(format!("inputs: {e}")))
}

impl Inputs {
    fn parse(command: Command, value: Value, seed: u64) -> Result<Self, CliError> {
        Ok(match command {
            Command::Classify => Inputs::Classify(parse(value)?),
            Command::Pullvex => Inputs::Pullvex(parse(value)?),
            Command::Solve => Inputs::Solve(parse(value)?),
            Command::Minimal => Inputs::Minimal(parse(value)?),
            Command::Tomography => Inputs::Tomography(parse(value)?),
            Command::Calabi => Inputs::Calabi(parse(value)?),
            Command::Wedge => Inputs::Wedge(parse(value)?),
            Command::Trap => Inputs::Trap(parse(value)?),
            Command::Oy => {
                let mut inputs: OyInputs = parse(value)?;
                inputs.options.seed = seed;
                Inputs::Oy(inputs)
            }
            Command::Brownian => {
                let mut inputs: BrownianInputs = parse(value)?;
                inputs.options.seed = seed;
                Inputs::Brownian(inputs)
            }
            Command::Recurrence => {
                let mut inputs: RecurrenceInputs = parse(value)?;
                inputs.options.seed = seed;
                Inputs::Recurrence(inputs)
            }
            Command::Halfspace => Inputs::Halfspace(parse(value)?),
        })
    }
}

const KEYS: [&str; 5] = ["command", "inputs", "seed", "output_dir", "tolerances"];

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub command: Command,
    pub inputs: Inputs,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub tolerances: Tolerances,
    /// Directory that relative mesh paths are resolved against.
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    /// Reads a config file. `command` must agree with the file's `command`
    /// key when both are present; `seed` and `out` override the file.
    pub fn load(path: &Path, command: Command, seed: Option<u64>, out: Option<&Path>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, Some(command), seed, out, &base_dir)
            .map_err(|e| match e {
                CliError::ConfigInvalid(msg) => CliError::ConfigInvalid(format!("{}: {msg}", path.display())),
                other => other,
            })
    }

    pub fn from_json(
        text: &str,
        command: Option<Command>,
        seed: Option<u64>,
        out: Option<&Path>,
        base_dir: &Path,
    ) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        let Value::Object(mut map) = value else {
            return Err(CliError::ConfigInvalid("config must be a JSON object".into()));
        };
        if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::ConfigInvalid(format!("unknown key `{key}`")));
        }
        let file_command: Option<Command> = map
            .remove("command")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| CliError::ConfigInvalid(format!("command: {e}")))?;
        let command = match (command, file_command) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::ConfigInvalid(format!("config is for `{b}`, but `{a}` was requested")))
            }
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err(CliError::ConfigInvalid("no command given".into())),
        };
        let file_seed: Option<u64> = map
            .remove("seed")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| CliError::ConfigInvalid(format!("seed: {e}")))?;
        let seed = seed.or(file_seed).unwrap_or(0);
        let file_out: Option<PathBuf> = map
            .remove("output_dir")
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| CliError::ConfigInvalid(format!("output_dir: {e}")))?;
        let output_dir = out.map(Path::to_path_buf).or(file_out).unwrap_or_else(|| PathBuf::from(format!("out/{command}")));
        let tolerances = match map.remove("tolerances") {
            Some(v) => serde_json::from_value(v).map_err(|e| CliError::ConfigInvalid(format!("tolerances: {e}")))?,
            None => Tolerances::default(),
        };
        let inputs = map.remove("inputs").ok_or_else(|| CliError::ConfigInvalid("missing key `inputs`".into()))?;
        let inputs = Inputs::parse(command, inputs, seed)?;
        Ok(Self { command, inputs, seed, output_dir, tolerances, base_dir: base_dir.to_path_buf() })
    }

    /// The config with every default filled in, as written next to the
    /// outputs.
    pub fn resolved(&self) -> Value {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "tolerances": self.tolerances,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<ScenarioConfig, CliError> {
        ScenarioConfig::from_json(text, None, None, None, Path::new("."))
    }

    #[test]
    fn unknown_top_level_key_is_named() {
        let err = load(r#"{"command":"recurrence","inputs":{},"sede":3}"#).unwrap_err();
        assert!(err.to_string().contains("`sede`"), "{err}");
    }

    #[test]
    fn unknown_input_and_tolerance_keys_are_named() {
        let text = r#"{"command":"recurrence","inputs":{"dim":3,"start_radius":2,"outer_radius":50,"paths":10}}"#;
        assert!(load(text).unwrap_err().to_string().contains("`paths`"));
        let text = r#"{"command":"recurrence","inputs":{"dim":3,"start_radius":2,"outer_radius":50},"tolerances":{"tol":1}}"#;
        assert!(load(text).unwrap_err().to_string().contains("`tol`"));
    }

    #[test]
    fn defaults_are_materialized_and_seed_is_threaded() {
        let text = r#"{"command":"recurrence","inputs":{"dim":3,"start_radius":2,"outer_radius":50},"seed":9}"#;
        let config = load(text).unwrap();
        let resolved = config.resolved();
        assert_eq!(resolved["inputs"]["options"]["n_paths"], 100_000);
        assert_eq!(resolved["inputs"]["options"]["seed"], 9);
        assert_eq!(resolved["tolerances"]["growth_factor"], 1.5);
        assert_eq!(resolved["output_dir"], "out/recurrence");
        let again = ScenarioConfig::from_json(&resolved.to_string(), None, None, None, Path::new(".")).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn command_line_overrides_and_conflicts() {
        let text = r#"{"command":"recurrence","inputs":{"dim":2,"start_radius":2,"outer_radius":5},"seed":1}"#;
        let config = ScenarioConfig::from_json(text, Some(Command::Recurrence), Some(4), Some(Path::new("x")), Path::new(".")).unwrap();
        assert_eq!((config.seed, config.output_dir.as_path()), (4, Path::new("x")));
        let err = ScenarioConfig::from_json(text, Some(Command::Oy), None, None, Path::new(".")).unwrap_err();
        assert!(matches!(err, CliError::ConfigInvalid(_)));
    }
}
