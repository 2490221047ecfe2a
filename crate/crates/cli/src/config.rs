use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use multibeta::beta::Selector;
use multibeta::funcmodel::{FunctionField, GridField};
use multibeta::geometry::{AxisBox, DyadicCube, ParabolicBox, ParabolicDyadic};
use multibeta::parabolic::ParabolicSelector;
use multibeta::quadrature::QuadratureSpec;
use multibeta::reconstruct::ReconstructParams;
use multibeta::verify::SuiteConfig;

/// Configuration problem, reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl ConfigError {
    fn at(line: Option<usize>, msg: impl Into<String>) -> Self {
        Self { line, msg: msg.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.msg),
            None => write!(f, "config: {}", self.msg),
        }
    }
}

/// Exponent written as a number or as `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(Exponent(p)),
            Raw::Str(s) if s == "inf" => Ok(Exponent(f64::INFINITY)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("exponent must be a number or \"inf\", got {s:?}"))),
        }
    }
}

/// The field to analyse: at most one of a grid file, a named catalog entry,
/// or an explicit catalog field. Only `verify` runs without one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FunctionField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: Vec<f64>,
    pub sides: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicBoxSpec {
    pub space_min: Vec<f64>,
    pub side: f64,
    pub t0: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IgBetaSpec {
    /// Slice dimension.
    pub m: Option<usize>,
    pub p: Exponent,
    pub q: f64,
}

impl Default for IgBetaSpec {
    fn default() -> Self {
        Self { m: None, p: Exponent(2.0), q: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSpec {
    pub base: Option<Vec<f64>>,
    pub radii: Vec<f64>,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { base: None, radii: (3..=9).map(|k| 2f64.powi(-k)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub function: FunctionSpec,
    /// Box for `igbeta` and `reconstruct`; defaults to `[0, 1]^n`.
    pub region: Option<BoxSpec>,
    /// Dyadic root for `analyze` and `carleson`.
    pub root: Option<DyadicCube>,
    /// Parabolic box for `parabolic` tables when no dyadic root is wanted.
    pub parabolic_box: Option<ParabolicBoxSpec>,
    /// Dyadic parabolic root for `parabolic`.
    pub parabolic_root: Option<ParabolicDyadic>,
    pub depth: usize,
    /// Depth of the per-box `parabolic` coefficient table.
    pub table_depth: usize,
    pub dilation: f64,
    pub exponents: Vec<Exponent>,
    pub selectors: Vec<Selector>,
    pub parabolic_selectors: Vec<ParabolicSelector>,
    /// Gradient bound for restricted coefficients.
    pub bound: Option<f64>,
    pub quadrature: QuadratureSpec,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub igbeta: IgBetaSpec,
    pub reconstruct: ReconstructParams,
    pub probe: ProbeSpec,
    pub verify: SuiteConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            function: FunctionSpec::default(),
            region: None,
            root: None,
            parabolic_box: None,
            parabolic_root: None,
            depth: 4,
            table_depth: 2,
            dilation: 3.0,
            exponents: vec![Exponent(1.0), Exponent(2.0), Exponent(f64::INFINITY)],
            selectors: vec![Selector::Beta2],
            parabolic_selectors: vec![ParabolicSelector::Beta2, ParabolicSelector::Affinity, ParabolicSelector::Osc],
            bound: None,
            quadrature: QuadratureSpec::default(),
            seed: 7,
            out: None,
            igbeta: IgBetaSpec::default(),
            reconstruct: ReconstructParams::default(),
            probe: ProbeSpec::default(),
            verify: SuiteConfig::default(),
        }
    }
}

/// Line of the first occurrence of `"key"` in the config text.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

/// A parsed and validated configuration together with the resolved field.
pub struct Loaded {
    pub config: RunConfig,
    field: Option<FunctionField>,
    pub dim: usize,
    /// Resolved grid file, whose bytes enter the manifest hash.
    pub grid_path: Option<PathBuf>,
}

impl Loaded {
    pub fn field(&self) -> Result<&FunctionField, ConfigError> {
        self.field.as_ref().ok_or_else(|| ConfigError::at(None, "this subcommand needs a \"function\""))
    }

    pub fn region(&self) -> AxisBox {
        match &self.config.region {
            Some(b) => AxisBox::new(b.min.clone(), b.sides.clone()).expect("validated"),
            None => AxisBox::cube(vec![0.0; self.dim], 1.0).expect("unit cube"),
        }
    }

    pub fn root(&self) -> DyadicCube {
        self.config.root.clone().unwrap_or_else(|| DyadicCube::unit(self.dim))
    }

    pub fn parabolic_root(&self) -> ParabolicDyadic {
        self.config.parabolic_root.clone().unwrap_or_else(|| ParabolicDyadic::unit(self.dim))
    }

    pub fn parabolic_box(&self) -> Option<ParabolicBox> {
        self.config
            .parabolic_box
            .as_ref()
            .map(|b| ParabolicBox::general(b.space_min.clone(), b.side, b.t0, b.duration).expect("validated"))
    }

    /// The configuration as applied, serialized canonically.
    pub fn canonical(&self) -> String {
        serde_json::to_string(&self.config).expect("serializable config")
    }
}

fn resolve_field(spec: &FunctionSpec, text: &str, base: &Path) -> Result<Option<FunctionField>, ConfigError> {
    let line = key_line(text, "function");
    let given = [spec.grid.is_some(), spec.catalog.is_some(), spec.field.is_some()].iter().filter(|b| **b).count();
    if given == 0 && spec.dim.is_none() {
        return Ok(None);
    }
    if given != 1 {
        return Err(ConfigError::at(line, "function needs exactly one of \"grid\", \"catalog\" or \"field\""));
    }
    if let Some(path) = &spec.grid {
        let path = if path.is_absolute() { path.clone() } else { base.join(path) };
        if !path.exists() {
            return Err(ConfigError::at(
                key_line(text, "grid"),
                format!("grid file {} does not exist", path.display()),
            ));
        }
        let grid = GridField::from_csv_path(&path)
            .map_err(|e| ConfigError::at(key_line(text, "grid"), format!("grid file {}: {e}", path.display())))?;
        return Ok(Some(FunctionField::Grid(grid)));
    }
    if let Some(name) = &spec.catalog {
        let dim = spec.dim.ok_or_else(|| ConfigError::at(key_line(text, "catalog"), "catalog entries need \"dim\""))?;
        if dim == 0 {
            return Err(ConfigError::at(key_line(text, "dim"), "dim must be at least 1"));
        }
        let mut entries = FunctionField::catalog(dim);
        if dim >= 2 {
            entries.extend(FunctionField::parabolic_catalog(dim));
        }
        let names: Vec<&str> = entries.iter().map(|(n, _)| *n).collect();
        return entries.iter().find(|(n, _)| n == name).map(|(_, f)| Some(f.clone())).ok_or_else(|| {
            ConfigError::at(
                key_line(text, "catalog"),
                format!("unknown catalog entry {name:?} (known: {})", names.join(", ")),
            )
        });
    }
    let field = spec.field.clone().expect("counted above");
    field.validate().map_err(|e| ConfigError::at(key_line(text, "field"), e.to_string()))?;
    Ok(Some(field))
}

/// Parses, applies the seed override and validates.
pub fn load(text: &str, base: &Path, seed: Option<u64>) -> Result<Loaded, ConfigError> {
    let mut config: RunConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::at(Some(e.line()), e.to_string()))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let field = resolve_field(&config.function, text, base)?;
    let dim = field.as_ref().map_or(0, |f| f.dim());
    if let Some(d) = config.function.dim {
        if d != dim {
            return Err(ConfigError::at(
                key_line(text, "dim"),
                format!("dim {d} does not match the field dimension {dim}"),
            ));
        }
    }
    if let Some(b) = &config.region {
        if b.min.len() != dim {
            return Err(ConfigError::at(
                key_line(text, "region"),
                format!("region has dimension {}, field has {dim}", b.min.len()),
            ));
        }
        AxisBox::new(b.min.clone(), b.sides.clone())
            .map_err(|e| ConfigError::at(key_line(text, "region"), e.to_string()))?;
    }
    if let Some(r) = &config.root {
        if r.dim() != dim {
            return Err(ConfigError::at(
                key_line(text, "root"),
                format!("root has dimension {}, field has {dim}", r.dim()),
            ));
        }
    }
    if let Some(b) = &config.parabolic_box {
        if b.space_min.len() + 1 != dim {
            return Err(ConfigError::at(
                key_line(text, "parabolic_box"),
                "parabolic box must have n - 1 space coordinates",
            ));
        }
        ParabolicBox::general(b.space_min.clone(), b.side, b.t0, b.duration)
            .map_err(|e| ConfigError::at(key_line(text, "parabolic_box"), e.to_string()))?;
    }
    if let Some(r) = &config.parabolic_root {
        if r.space_index.len() + 1 != dim {
            return Err(ConfigError::at(
                key_line(text, "parabolic_root"),
                "parabolic root must have n - 1 space indices",
            ));
        }
    }
    if !(config.dilation >= 1.0) || !config.dilation.is_finite() {
        return Err(ConfigError::at(key_line(text, "dilation"), "dilation must be a finite number >= 1"));
    }
    if config.exponents.iter().any(|p| !(p.0 >= 1.0)) {
        return Err(ConfigError::at(key_line(text, "exponents"), "exponents must be >= 1"));
    }
    if config.bound.is_some_and(|l| !(l > 0.0)) {
        return Err(ConfigError::at(key_line(text, "bound"), "bound must be positive"));
    }
    config.quadrature.validate().map_err(|e| ConfigError::at(key_line(text, "quadrature"), e.to_string()))?;
    config.quadrature.seed = config.seed;
    config.reconstruct.seed = config.seed;
    config.verify.seed = config.seed;
    let grid_path = config.function.grid.as_ref().map(|p| if p.is_absolute() { p.clone() } else { base.join(p) });
    Ok(Loaded { config, field, dim, grid_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_grid_names_path() {
        let text = "{\n  \"function\": {\"grid\": \"nowhere.csv\"}\n}";
        let err = load(text, Path::new("/tmp"), None).err().unwrap();
        assert_eq!(err.line, Some(2));
        assert!(err.msg.contains("/tmp/nowhere.csv"));
    }

    #[test]
    fn unknown_keys_report_line() {
        let text = "{\n  \"function\": {\"catalog\": \"cone\", \"dim\": 2},\n  \"detph\": 3\n}";
        let err = load(text, Path::new("."), None).err().unwrap();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn exponents_accept_inf() {
        let text = r#"{"function": {"catalog": "affine", "dim": 1}, "exponents": [1, "inf"]}"#;
        let l = load(text, Path::new("."), Some(3)).unwrap();
        assert_eq!(l.config.exponents, vec![Exponent(1.0), Exponent(f64::INFINITY)]);
        assert_eq!(l.config.quadrature.seed, 3);
    }
}
