//! Per-command experiment configs. Fields other than a probe's operator and
//! targets have defaults, so a config file lists what it changes; unknown
//! fields are rejected.

use std::ops::Range;
use std::path::Path;

use grassdyn::construction::{AdmissibleSource, ConstructionParams, ControlSpec, IndexScheme, DEFAULT_CLOSURE_CAP};
use grassdyn::dynamics::GraphDensityConfig;
use grassdyn::functionals::{SUMMABILITY_CAP, SUMMABILITY_TAIL_THRESHOLD};
use grassdyn::operators::OperatorConfig;
use grassdyn::Field;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::CliError;

/// Parses `text` as `T`, reporting the failing field path and position.
pub fn parse_config<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!(
            "{origin}:{}:{}: at `{}`: {}",
            inner.line(),
            inner.column(),
            if path.is_empty() { "." } else { &path },
            inner
        ))
    })
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

fn default_two_b(dim: usize) -> OperatorConfig {
    OperatorConfig {
        variant: "scaled".into(),
        params: json!({ "c": 2.0, "inner": { "variant": "backward_shift", "dim": dim } }),
        dim: None,
    }
}

/// How a probed subspace or vector is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSpec {
    /// `span{e_i : i ∈ indices}`.
    Coordinate { dim: usize, indices: Vec<usize> },
    /// Span of the listed real vectors.
    Vectors { vectors: Vec<Vec<f64>> },
    /// Span of `n` seeded Gaussian vectors on `support`.
    Random { dim: usize, n: usize, support: Range<usize> },
    /// The line through `Σ_j c^{-k_j} F^{k_j} t_j`, `k_j = j · spacing`, over the
    /// probe's own target lines `t_j`; only for `n = 1` targets.
    FittedSeed { dim: usize, c: f64, spacing: usize },
}

impl SubspaceSpec {
    pub fn dim(&self) -> usize {
        match self {
            SubspaceSpec::Coordinate { dim, .. } | SubspaceSpec::Random { dim, .. } | SubspaceSpec::FittedSeed { dim, .. } => *dim,
            SubspaceSpec::Vectors { vectors } => vectors.first().map_or(0, Vec::len),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SubspaceSpec::Coordinate { indices, .. } => indices.len(),
            SubspaceSpec::Vectors { vectors } => vectors.len(),
            SubspaceSpec::Random { n, .. } => *n,
            SubspaceSpec::FittedSeed { .. } => 1,
        }
    }
}

/// What a density run is meant to show.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Pass iff the hit fraction reaches `min_hit_fraction`.
    #[default]
    Density,
    /// Pass iff no target is hit.
    NegativeControl,
}

fn default_min_hit_fraction() -> f64 {
    0.9
}

/// `diag(λ) ⊕ B` with the graph subspace built from the sampled targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphProbe {
    pub experiment: GraphDensityConfig,
    pub min_hit_fraction: f64,
}

impl Default for GraphProbe {
    fn default() -> Self {
        Self { experiment: GraphDensityConfig::default(), min_hit_fraction: default_min_hit_fraction() }
    }
}

/// Orbit of a given subspace against sampled target `n`-planes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceProbe {
    pub operator: OperatorConfig,
    pub subspace: SubspaceSpec,
    pub targets: usize,
    pub support: Range<usize>,
    pub horizon: usize,
    pub threshold: f64,
    #[serde(default)]
    pub field: Field,
    #[serde(default)]
    pub role: Role,
    #[serde(default = "default_min_hit_fraction")]
    pub min_hit_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Projective orbit of a vector against sampled target lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectiveProbe {
    pub operator: OperatorConfig,
    pub x: Vec<f64>,
    pub targets: usize,
    pub support: Range<usize>,
    pub horizon: usize,
    pub threshold: f64,
    #[serde(default)]
    pub role: Role,
    #[serde(default = "default_min_hit_fraction")]
    pub min_hit_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitDensityConfig {
    Graph(GraphProbe),
    Subspace(SubspaceProbe),
    Projective(ProjectiveProbe),
}

impl Default for OrbitDensityConfig {
    fn default() -> Self {
        OrbitDensityConfig::Graph(GraphProbe::default())
    }
}

impl OrbitDensityConfig {
    pub fn seed(&self) -> u64 {
        match self {
            OrbitDensityConfig::Graph(g) => g.experiment.seed,
            OrbitDensityConfig::Subspace(s) => s.seed,
            OrbitDensityConfig::Projective(p) => p.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            OrbitDensityConfig::Graph(g) => g.experiment.seed = seed,
            OrbitDensityConfig::Subspace(s) => s.seed = seed,
            OrbitDensityConfig::Projective(p) => p.seed = seed,
        }
    }
}

fn default_precision() -> usize {
    ConstructionParams::new(2, IndexScheme::Pow5, AdmissibleSource::Triangular).precision
}

fn instance(
    p: u32,
    scheme: IndexScheme,
    control: &ControlSpec,
    source: &AdmissibleSource,
    precision: usize,
) -> ConstructionParams {
    let mut params = ConstructionParams::new(p, scheme, source.clone()).with_precision(precision);
    params.control = control.clone();
    params
}

/// Construction parameters shared by the exact-layer commands; written out
/// per config so diagnostics keep their field paths.
macro_rules! instance_config {
    ($(#[$doc:meta])* $name:ident { $($(#[$fdoc:meta])* $field:ident: $ty:ty = $default:expr),* $(,)? }) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            pub p: u32,
            pub scheme: IndexScheme,
            pub control: ControlSpec,
            pub source: AdmissibleSource,
            pub precision: usize,
            $($(#[$fdoc])* pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                Self {
                    p: 2,
                    scheme: IndexScheme::Pow5,
                    control: ControlSpec::default(),
                    source: AdmissibleSource::Triangular,
                    precision: default_precision(),
                    $($field: $default,)*
                }
            }
        }

        impl $name {
            pub fn params(&self) -> ConstructionParams {
                instance(self.p, self.scheme, &self.control, &self.source, self.precision)
            }
        }
    };
}

instance_config!(VerifyConstructionConfig {
    max_n: u64 = 5,
    closure_cap: u64 = DEFAULT_CLOSURE_CAP,
});

instance_config!(PhiTableConfig {
    delta: u64 = 0,
    max_i: u64 = 200,
});

instance_config!(SummabilityConfig {
    /// Defaults to every `δ < 2p`.
    deltas: Option<Vec<u64>> = None,
    /// Increasing radii; the tail is the growth between the last two.
    radii: Vec<u64> = vec![0, 200, 400, 600, 800],
    tail_threshold: f64 = SUMMABILITY_TAIL_THRESHOLD,
    /// Also run the full criterion report for `h = 2..=p`.
    criterion: bool = false,
});

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaimCheckConfig {
    pub max_p: u32,
}

impl Default for ClaimCheckConfig {
    fn default() -> Self {
        Self { max_p: 16 }
    }
}

impl SummabilityConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.radii.len() < 2 || !self.radii.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config("radii must be at least two increasing values".into()));
        }
        if self.radii.last().is_some_and(|&r| r > SUMMABILITY_CAP) {
            return Err(CliError::Config(format!("radii beyond the cap {SUMMABILITY_CAP}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityBlockCase {
    pub n: usize,
    pub k_sub: usize,
    pub s: OperatorConfig,
    pub horizon: usize,
}

impl Default for IdentityBlockCase {
    fn default() -> Self {
        Self { n: 2, k_sub: 1, s: default_two_b(8), horizon: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScShiftCase {
    pub lambda: f64,
    pub support: Range<usize>,
    pub samples: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for ScShiftCase {
    fn default() -> Self {
        Self { lambda: 0.5, support: 0..8, samples: 5, horizon: 60, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum WitnessConfig {
    IdentityBlock(IdentityBlockCase),
    ScShift(ScShiftCase),
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig::IdentityBlock(IdentityBlockCase::default())
    }
}

/// Expected outcome of a circle scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleExpectation {
    None,
    Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumCirclesConfig {
    pub operator: OperatorConfig,
    /// Grid points on `[0, 1.25 · max radius]`, on top of the boundary radii.
    pub grid: usize,
    pub expect: Option<CircleExpectation>,
}

fn default_grid() -> usize {
    400
}

impl Default for SpectrumCirclesConfig {
    fn default() -> Self {
        Self {
            operator: OperatorConfig {
                variant: "adjoint_multiplication".into(),
                params: json!({ "a": 1.0 }),
                dim: Some(16),
            },
            grid: default_grid(),
            expect: None,
        }
    }
}
