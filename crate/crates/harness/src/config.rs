//! Flat `key = value` experiment configuration.
//!
//! Lines are `namespace.key = value`; `#` starts a comment. Reals may be
//! written as fractions (`1/8`), vectors as comma-separated components and
//! lists of vectors with `;` between entries. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thinpore_core::geometry::{build_unit_cell, inverse_epsilon, ObstacleShape, UnitCell};
use thinpore_core::stokes::{FaceTable, ObstacleFace, SurfaceForcing, DEFAULT_DELTA};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("bad value for `{key}`: {reason}")]
    Value { key: String, reason: String },
}

const KEYS: &[&str] = &[
    "experiment.kind",
    "experiment.seed",
    "experiment.workers",
    "geometry.shape",
    "geometry.size",
    "geometry.cases",
    "numerics.h",
    "numerics.layers",
    "numerics.cell_layers",
    "numerics.subdivisions",
    "numerics.delta",
    "numerics.tolerance",
    "physics.mu",
    "physics.alpha",
    "physics.gamma",
    "physics.f",
    "physics.f_scaling",
    "physics.g",
    "physics.g.xlo",
    "physics.g.xhi",
    "physics.g.ylo",
    "physics.g.yhi",
    "domain.epsilon",
    "unfold.p",
    "unfold.fields",
    "unfold.subdivisions",
    "unfold.layers",
    "darcy.grad_p",
    "darcy.grid",
    "darcy.range",
    "darcy.permeability",
    "darcy.permeability_file",
    "output.dir",
    "output.vtk",
];

/// Keys that do not change any computed number and are left out of the hash.
const UNHASHED: &[&str] = &["experiment.workers", "output.dir", "output.vtk"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Cell,
    Fine,
    Scaling,
    UnfoldCheck,
    Darcy,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Cell => "cell",
            ExperimentKind::Fine => "fine",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::UnfoldCheck => "unfold-check",
            ExperimentKind::Darcy => "darcy",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "cell" => ExperimentKind::Cell,
            "fine" => ExperimentKind::Fine,
            "scaling" => ExperimentKind::Scaling,
            "unfold-check" => ExperimentKind::UnfoldCheck,
            "darcy" => ExperimentKind::Darcy,
            _ => return Err(format!("unknown experiment kind `{s}`")),
        })
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Surface data `g'`: constant or one value per wall orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceSpec {
    Constant([f64; 2]),
    Table(FaceTable),
}

impl SurfaceSpec {
    pub fn forcing(&self) -> SurfaceForcing {
        match *self {
            SurfaceSpec::Constant([0.0, 0.0]) => SurfaceForcing::Zero,
            SurfaceSpec::Constant(g) => SurfaceForcing::Constant(g),
            SurfaceSpec::Table(t) => SurfaceForcing::Table(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub workers: usize,
    /// Obstacles of the study; a single entry except for `cell`.
    pub cases: Vec<ObstacleShape>,
    /// Cell-mesh spacings.
    pub h: Vec<f64>,
    /// Vertical layers of the fine problem.
    pub layers: usize,
    /// Vertical layers of the cell problem; `None` means `1/h`.
    pub cell_layers: Option<usize>,
    /// Horizontal elements per lattice cell of the fine problem.
    pub subdivisions: usize,
    pub delta: f64,
    /// Largest accepted relative solver residual.
    pub tolerance: f64,
    pub mu: f64,
    pub alpha: f64,
    pub gamma: Vec<f64>,
    pub f_prime: [f64; 2],
    pub scale_forcing: bool,
    pub g: SurfaceSpec,
    pub epsilon: Vec<f64>,
    pub exponents: Vec<f64>,
    pub fields: usize,
    pub unfold_subdivisions: usize,
    pub unfold_layers: usize,
    pub grad_p: Vec<[f64; 2]>,
    pub permeability: Option<[[f64; 2]; 2]>,
    pub permeability_file: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub vtk: bool,
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(parse_entries(text)?)
    }

    pub fn load(path: &Path, kind: ExperimentKind) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Value {
            key: "--config".into(),
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::parse_for(&text, kind)
    }

    /// Parses `text` for a given experiment; `experiment.kind` may be left out
    /// but must agree when present.
    pub fn parse_for(text: &str, kind: ExperimentKind) -> Result<Self, ConfigError> {
        let mut entries = parse_entries(text)?;
        let given = entries
            .entry("experiment.kind".to_string())
            .or_insert_with(|| kind.name().to_string());
        if given.as_str() != kind.name() {
            return Err(value_error(
                "experiment.kind",
                format!("config is for `{given}`, not `{kind}`"),
            ));
        }
        Self::from_entries(entries)
    }

    /// Re-parses with `key = value` replaced or added.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let mut entries = self.entries.clone();
        entries.insert(key.to_string(), value.to_string());
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        for key in entries.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        let get = |k: &str| entries.get(k).map(String::as_str);
        let kind = match get("experiment.kind") {
            Some(s) => s.parse().map_err(|r| value_error("experiment.kind", r))?,
            None => return Err(ConfigError::Missing("experiment.kind")),
        };
        let cases = parse_cases(&entries)?;
        let h = match get("numerics.h") {
            Some(s) => list(s, "numerics.h")?,
            None => vec![1.0 / 16.0],
        };
        let gamma = match get("physics.gamma") {
            Some(s) => list(s, "physics.gamma")?,
            None => vec![0.0],
        };
        let epsilon = match get("domain.epsilon") {
            Some(s) => list(s, "domain.epsilon")?,
            None => vec![0.25],
        };
        for &e in &epsilon {
            inverse_epsilon(e).map_err(|err| value_error("domain.epsilon", err.to_string()))?;
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(value_error("physics.gamma", "must be finite"));
        }
        let g_keys = ["physics.g.xlo", "physics.g.xhi", "physics.g.ylo", "physics.g.yhi"];
        let g = if g_keys.iter().any(|k| entries.contains_key(*k)) {
            if entries.contains_key("physics.g") {
                return Err(value_error("physics.g", "give either a constant or a face table"));
            }
            let mut table = FaceTable::default();
            for key in g_keys {
                if let Some(s) = get(key) {
                    let face = ObstacleFace::parse(&key["physics.g.".len()..]).expect("known face");
                    table.set(face, vec2(s, key)?);
                }
            }
            SurfaceSpec::Table(table)
        } else {
            SurfaceSpec::Constant(opt(get("physics.g"), "physics.g", vec2)?.unwrap_or([0.0; 2]))
        };
        let grad_p = match get("darcy.grad_p") {
            Some(s) => s
                .split(';')
                .map(|v| vec2(v, "darcy.grad_p"))
                .collect::<Result<_, _>>()?,
            None => {
                let n = opt(get("darcy.grid"), "darcy.grid", count)?.unwrap_or(5);
                let r = opt(get("darcy.range"), "darcy.range", real)?.unwrap_or(1.0);
                grid(n, r)
            }
        };
        let permeability = opt(get("darcy.permeability"), "darcy.permeability", |s, k| {
            let v = list(s, k)?;
            if v.len() != 4 {
                return Err(value_error(k, "expected a11, a12, a21, a22"));
            }
            Ok([[v[0], v[1]], [v[2], v[3]]])
        })?;
        let config = ExperimentConfig {
            kind,
            seed: opt(get("experiment.seed"), "experiment.seed", |s, k| {
                s.parse::<u64>().map_err(|e| value_error(k, e.to_string()))
            })?
            .unwrap_or(42),
            workers: opt(get("experiment.workers"), "experiment.workers", count)?.unwrap_or(1),
            cases,
            h,
            layers: opt(get("numerics.layers"), "numerics.layers", count)?.unwrap_or(8),
            cell_layers: opt(get("numerics.cell_layers"), "numerics.cell_layers", count)?,
            subdivisions: opt(get("numerics.subdivisions"), "numerics.subdivisions", count)?
                .unwrap_or(4),
            delta: opt(get("numerics.delta"), "numerics.delta", real)?.unwrap_or(DEFAULT_DELTA),
            tolerance: opt(get("numerics.tolerance"), "numerics.tolerance", real)?.unwrap_or(1e-8),
            mu: opt(get("physics.mu"), "physics.mu", real)?.unwrap_or(1.0),
            alpha: opt(get("physics.alpha"), "physics.alpha", real)?.unwrap_or(1.0),
            gamma,
            f_prime: opt(get("physics.f"), "physics.f", vec2)?.unwrap_or([0.0; 2]),
            scale_forcing: opt(get("physics.f_scaling"), "physics.f_scaling", boolean)?
                .unwrap_or(true),
            g,
            epsilon,
            exponents: match get("unfold.p") {
                Some(s) => list(s, "unfold.p")?,
                None => vec![1.0, 2.0],
            },
            fields: opt(get("unfold.fields"), "unfold.fields", count)?.unwrap_or(10),
            unfold_subdivisions: opt(get("unfold.subdivisions"), "unfold.subdivisions", count)?
                .unwrap_or(4),
            unfold_layers: opt(get("unfold.layers"), "unfold.layers", count)?.unwrap_or(4),
            grad_p,
            permeability,
            permeability_file: get("darcy.permeability_file").map(PathBuf::from),
            output_dir: PathBuf::from(get("output.dir").unwrap_or("out")),
            vtk: opt(get("output.vtk"), "output.vtk", boolean)?.unwrap_or(false),
            entries: entries.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("numerics.delta", self.delta),
            ("numerics.tolerance", self.tolerance),
            ("physics.mu", self.mu),
            ("physics.alpha", self.alpha),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(value_error(key, format!("{v} is not positive")));
            }
        }
        if self.h.iter().any(|h| !(h.is_finite() && *h > 0.0 && *h <= 0.5)) {
            return Err(value_error("numerics.h", "spacings must lie in (0, 1/2]"));
        }
        if self.exponents.iter().any(|p| !(p.is_finite() && *p >= 1.0)) {
            return Err(value_error("unfold.p", "exponents must be >= 1"));
        }
        if self.kind != ExperimentKind::Cell && self.cases.len() != 1 {
            return Err(value_error("geometry.cases", "only the cell study takes several obstacles"));
        }
        if self.kind == ExperimentKind::Fine && (self.epsilon.len() != 1 || self.gamma.len() != 1) {
            return Err(value_error("domain.epsilon", "a fine solve takes one epsilon and one gamma"));
        }
        if self.kind == ExperimentKind::Scaling && self.epsilon.len() < 3 {
            return Err(value_error("domain.epsilon", "the scaling study needs at least 3 entries"));
        }
        if self.kind == ExperimentKind::Darcy && self.gamma.len() != 1 {
            return Err(value_error("physics.gamma", "the Darcy table takes one gamma"));
        }
        Ok(())
    }

    /// First obstacle case as a unit cell.
    pub fn unit_cell(&self) -> UnitCell {
        build_unit_cell(self.cases[0]).expect("validated when parsed")
    }

    /// Vertical layers of a cell mesh with spacing `h`.
    pub fn cell_layers_for(&self, h: f64) -> usize {
        self.cell_layers.unwrap_or_else(|| (1.0 / h).round().max(1.0) as usize)
    }

    /// Canonical `key = value` lines, sorted.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .filter(|(k, _)| !UNHASHED.contains(&k.as_str()))
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of [`ExperimentConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            });
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            });
        }
        if entries.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(ConfigError::DuplicateKey(key));
        }
    }
    Ok(entries)
}

fn parse_cases(entries: &BTreeMap<String, String>) -> Result<Vec<ObstacleShape>, ConfigError> {
    let shape = entries.get("geometry.shape");
    let size = entries.get("geometry.size");
    let cases = match entries.get("geometry.cases") {
        Some(list) => {
            if shape.is_some() || size.is_some() {
                return Err(value_error(
                    "geometry.cases",
                    "give either geometry.cases or geometry.shape/size",
                ));
            }
            list.split(',')
                .map(|c| {
                    let (s, z) = c.split_once(':').unwrap_or((c, ""));
                    shape_of(s.trim(), (!z.trim().is_empty()).then(|| z.trim()), "geometry.cases")
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        None => {
            let s = shape.map(String::as_str).unwrap_or("none");
            vec![shape_of(s, size.map(String::as_str), "geometry.shape")?]
        }
    };
    for c in &cases {
        build_unit_cell(*c).map_err(|e| value_error("geometry", e.to_string()))?;
    }
    Ok(cases)
}

fn shape_of(name: &str, size: Option<&str>, key: &str) -> Result<ObstacleShape, ConfigError> {
    let size = size.map(|s| real(s, key)).transpose()?;
    match (name, size) {
        ("none", None) => Ok(ObstacleShape::None),
        ("none", Some(_)) => Err(value_error(key, "the empty obstacle takes no size")),
        ("square", Some(s)) => Ok(ObstacleShape::square(s)),
        ("disk", Some(r)) => Ok(ObstacleShape::disk(r)),
        ("square" | "disk", None) => Err(value_error(key, format!("{name} needs a size"))),
        _ => Err(value_error(key, format!("unknown shape `{name}`"))),
    }
}

fn value_error(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn opt<T>(
    v: Option<&str>,
    key: &str,
    f: impl Fn(&str, &str) -> Result<T, ConfigError>,
) -> Result<Option<T>, ConfigError> {
    v.map(|s| f(s, key)).transpose()
}

/// A real number, optionally as `a/b`.
pub fn real(s: &str, key: &str) -> Result<f64, ConfigError> {
    let s = s.trim();
    let bad = |e: String| value_error(key, format!("`{s}`: {e}"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            let b: f64 = b.trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            a / b
        }
        None => s.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad("not finite".into()))
    }
}

fn list(s: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
    let v: Vec<f64> = s.split(',').map(|x| real(x, key)).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(value_error(key, "empty list"));
    }
    Ok(v)
}

fn vec2(s: &str, key: &str) -> Result<[f64; 2], ConfigError> {
    match list(s, key)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(value_error(key, format!("`{}` is not a 2-vector", s.trim()))),
    }
}

fn count(s: &str, key: &str) -> Result<usize, ConfigError> {
    match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(value_error(key, format!("`{s}` is not a positive integer"))),
    }
}

fn boolean(s: &str, key: &str) -> Result<bool, ConfigError> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(value_error(key, format!("`{s}` is not a boolean"))),
    }
}

/// `n x n` samples of `[-r, r]^2`, row by row.
fn grid(n: usize, r: f64) -> Vec<[f64; 2]> {
    let at = |i: usize| {
        if n == 1 {
            0.0
        } else {
            -r + 2.0 * r * i as f64 / (n - 1) as f64
        }
    };
    (0..n)
        .flat_map(|j| (0..n).map(move |i| [at(i), at(j)]))
        .collect()
}
