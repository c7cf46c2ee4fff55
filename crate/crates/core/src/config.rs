//! TOML run configuration: ambient, families, checks and knobs.
//!
//! The annotated schema lives in `docs/config-schema.toml`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ambient::{Fiber, WarpedAmbient};
use crate::error::{Error, Result};
use crate::hypersurface::{FourierMode, SurfaceFamily};
use crate::verify::{ConvergenceCheck, Tolerances};

pub const DEFAULT_RESOLUTION: usize = 64;
pub const MIN_RESOLUTION: usize = 8;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberKind {
    FlatTorus,
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub n: usize,
    pub fiber: FiberKind,
    /// Torus periods; all `1.0` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub potential_scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub wavenumbers: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Slice {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        s: f64,
    },
    TorusGraph {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default)]
        base: f64,
        modes: Vec<ModeSpec>,
    },
    GeodesicSphere {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default = "one")]
        z0: f64,
        /// Horizontal centre; the origin when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
        rho: f64,
    },
}

impl FamilySpec {
    pub fn name(&self) -> Option<&str> {
        match self {
            FamilySpec::Slice { name, .. }
            | FamilySpec::TorusGraph { name, .. }
            | FamilySpec::GeodesicSphere { name, .. } => name.as_deref(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FamilySpec::Slice { .. } => "slice",
            FamilySpec::TorusGraph { .. } => "torus-graph",
            FamilySpec::GeodesicSphere { .. } => "geodesic-sphere",
        }
    }

    pub fn to_family(&self, n: usize) -> SurfaceFamily {
        match self {
            FamilySpec::Slice { s, .. } => SurfaceFamily::Slice { s: *s },
            FamilySpec::TorusGraph { base, modes, .. } => SurfaceFamily::TorusGraph {
                base: *base,
                modes: modes
                    .iter()
                    .map(|m| FourierMode {
                        wavenumbers: m.wavenumbers.clone(),
                        cos: m.cos,
                        sin: m.sin,
                    })
                    .collect(),
            },
            FamilySpec::GeodesicSphere { z0, x0, rho, .. } => SurfaceFamily::GeodesicSphere {
                z0: *z0,
                x0: x0.clone().unwrap_or_else(|| vec![0.0; n]),
                rho: *rho,
            },
        }
    }
}

/// One entry of the `checks` list, written as a string such as `"minkowski:1"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CheckSpec {
    Hk,
    Minkowski(usize),
    Garding,
    H2Integral,
    Alexandrov,
    AmbientSelftest,
    Convergence(ConvergenceCheck),
}

impl CheckSpec {
    /// Checks that run once per configuration rather than once per family.
    pub fn is_global(self) -> bool {
        self == CheckSpec::AmbientSelftest
    }
}

impl fmt::Display for CheckSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckSpec::Hk => f.write_str("hk"),
            CheckSpec::Minkowski(k) => write!(f, "minkowski:{k}"),
            CheckSpec::Garding => f.write_str("garding"),
            CheckSpec::H2Integral => f.write_str("lemma52"),
            CheckSpec::Alexandrov => f.write_str("alexandrov"),
            CheckSpec::AmbientSelftest => f.write_str("ambient-selftest"),
            CheckSpec::Convergence(ConvergenceCheck::Hk) => f.write_str("convergence:hk"),
            CheckSpec::Convergence(ConvergenceCheck::Minkowski(k)) => {
                write!(f, "convergence:minkowski:{k}")
            }
        }
    }
}

impl FromStr for CheckSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse_k = |k: &str| {
            k.parse::<usize>()
                .map_err(|_| format!("`{k}` is not a Minkowski order"))
        };
        match s.split_once(':') {
            None => match s {
                "hk" => Ok(CheckSpec::Hk),
                "garding" => Ok(CheckSpec::Garding),
                "lemma52" => Ok(CheckSpec::H2Integral),
                "alexandrov" => Ok(CheckSpec::Alexandrov),
                "ambient-selftest" => Ok(CheckSpec::AmbientSelftest),
                "minkowski" => Err("`minkowski` needs an order, e.g. `minkowski:1`".into()),
                _ => Err(format!("unknown check `{s}`")),
            },
            Some(("minkowski", k)) => Ok(CheckSpec::Minkowski(parse_k(k)?)),
            Some(("convergence", "hk")) => Ok(CheckSpec::Convergence(ConvergenceCheck::Hk)),
            Some(("convergence", rest)) => match rest.split_once(':') {
                Some(("minkowski", k)) => Ok(CheckSpec::Convergence(ConvergenceCheck::Minkowski(
                    parse_k(k)?,
                ))),
                _ => Err(format!(
                    "unknown convergence target `{rest}` (expected `hk` or `minkowski:k`)"
                )),
            },
            _ => Err(format!("unknown check `{s}`")),
        }
    }
}

impl TryFrom<String> for CheckSpec {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<CheckSpec> for String {
    fn from(c: CheckSpec) -> String {
        c.to_string()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(format!("unknown format `{s}` (expected json or csv)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Report file; standard output when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ambient: AmbientSpec,
    pub families: Vec<FamilySpec>,
    pub checks: Vec<CheckSpec>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_convergence_resolutions")]
    pub convergence_resolutions: Vec<usize>,
    #[serde(default = "default_selftest_samples")]
    pub selftest_samples: usize,
    /// Enables Minkowski identities of order `k ≥ 2`.
    #[serde(default)]
    pub allow_constant_curvature: bool,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_convergence_resolutions() -> Vec<usize> {
    vec![8, 16, 32, 64]
}

fn default_selftest_samples() -> usize {
    1000
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and validates a TOML configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::new(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        config_error(path, inner.message().trim().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration is always representable as TOML")
    }

    pub fn ambient(&self) -> Result<WarpedAmbient> {
        let a = &self.ambient;
        let fiber = match a.fiber {
            FiberKind::FlatTorus => Fiber::FlatTorus {
                periods: a.periods.clone().unwrap_or_else(|| vec![1.0; a.n]),
            },
            FiberKind::Euclidean => Fiber::Euclidean,
        };
        WarpedAmbient::new(a.n, fiber, a.potential_scale)
    }

    /// Families in declaration order with their report labels.
    pub fn families(&self) -> Vec<(String, SurfaceFamily)> {
        self.families
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let label = f
                    .name()
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("{}-{i}", f.kind()));
                (label, f.to_family(self.ambient.n))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.ambient;
        match (a.fiber, &a.periods) {
            (FiberKind::Euclidean, Some(_)) => {
                return Err(config_error(
                    "ambient.periods",
                    "periods are only allowed with ambient.fiber = \"flat-torus\"",
                ))
            }
            (FiberKind::FlatTorus, Some(p)) if p.len() != a.n => {
                return Err(config_error(
                    "ambient.periods",
                    format!(
                        "expected {} periods to match ambient.n, got {}",
                        a.n,
                        p.len()
                    ),
                ))
            }
            _ => {}
        }
        let amb = self
            .ambient()
            .map_err(|e| config_error("ambient", e.to_string()))?;
        if self.resolution < MIN_RESOLUTION {
            return Err(config_error(
                "resolution",
                format!("must be at least {MIN_RESOLUTION}, got {}", self.resolution),
            ));
        }
        if self.families.is_empty() {
            return Err(config_error("families", "at least one family is required"));
        }
        if self.checks.is_empty() {
            return Err(config_error("checks", "at least one check is required"));
        }
        for (i, spec) in self.families.iter().enumerate() {
            let needs_torus = !matches!(spec, FamilySpec::GeodesicSphere { .. });
            let has_torus = a.fiber == FiberKind::FlatTorus;
            if needs_torus != has_torus {
                let wanted = if needs_torus {
                    "flat-torus"
                } else {
                    "euclidean"
                };
                return Err(config_error(
                    format!("families[{i}].kind"),
                    format!(
                        "`{}` requires ambient.fiber = \"{wanted}\", but ambient.fiber = \"{}\"",
                        spec.kind(),
                        if has_torus { "flat-torus" } else { "euclidean" }
                    ),
                ));
            }
            spec.to_family(a.n)
                .validate(&amb)
                .map_err(|e| config_error(format!("families[{i}]"), e.to_string()))?;
        }
        let mut labels: Vec<String> = self.families().into_iter().map(|(l, _)| l).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(config_error(
                "families",
                format!("duplicate family name `{}`", w[0]),
            ));
        }
        let convergence = self
            .checks
            .iter()
            .any(|c| matches!(c, CheckSpec::Convergence(_)));
        if convergence {
            if self.convergence_resolutions.len() < 3 {
                return Err(config_error(
                    "convergence_resolutions",
                    "a convergence study needs at least three resolutions",
                ));
            }
            if let Some(r) = self
                .convergence_resolutions
                .iter()
                .find(|r| **r < MIN_RESOLUTION)
            {
                return Err(config_error(
                    "convergence_resolutions",
                    format!("resolution {r} is below {MIN_RESOLUTION}"),
                ));
            }
        }
        for (i, c) in self.checks.iter().enumerate() {
            let k = match c {
                CheckSpec::Minkowski(k)
                | CheckSpec::Convergence(ConvergenceCheck::Minkowski(k)) => *k,
                _ => continue,
            };
            if k + 1 > a.n {
                return Err(config_error(
                    format!("checks[{i}]"),
                    format!("minkowski:{k} needs H_{} but ambient.n = {}", k + 1, a.n),
                ));
            }
            if k >= 2 && !self.allow_constant_curvature {
                return Err(config_error(
                    format!("checks[{i}]"),
                    format!("minkowski:{k} requires allow_constant_curvature = true"),
                ));
            }
        }
        if i64::try_from(self.seed).is_err() {
            return Err(config_error("seed", "must fit in a signed 64-bit integer"));
        }
        if self.selftest_samples == 0 {
            return Err(config_error("selftest_samples", "must be positive"));
        }
        for (key, v) in tolerance_entries(&self.tolerances) {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_error(
                    format!("tolerances.{key}"),
                    "must be positive",
                ));
            }
        }
        Ok(())
    }
}

fn tolerance_entries(t: &Tolerances) -> [(&'static str, f64); 9] {
    [
        ("identity", t.identity),
        ("hk_equality", t.hk_equality),
        ("linkage", t.linkage),
        ("umbilic", t.umbilic),
        ("garding", t.garding),
        ("h2_integral", t.h2_integral),
        ("h2_constancy", t.h2_constancy),
        ("scalar_spread", t.scalar_spread),
        ("convergence_floor", t.convergence_floor),
    ]
}
