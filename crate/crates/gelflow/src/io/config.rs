use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::ConfigError;
use crate::mesh::{self, BoundaryTag, Mesh, TAG_BOTTOM, TAG_LEFT, TAG_RIGHT, TAG_TOP};
use crate::params::{derive_params, BoundaryLoad, DerivedParams, InitialData, MaterialParams};
use crate::scheme::Algorithm;
use crate::verify::Coupling;

use super::expr::expression_initial;

/// A run description as read from JSON. Unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default)]
    pub material: MaterialSpec,
    pub load: LoadSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub algorithm: AlgorithmSpec,
    #[serde(default = "default_theta")]
    pub theta_threshold: f64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_magnification")]
    pub magnification: f64,
    /// Only read by the `convergence` command.
    #[serde(default)]
    pub study: Option<StudySpec>,
}

fn default_theta() -> f64 {
    0.1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_stride() -> usize {
    1
}

fn default_magnification() -> f64 {
    500.0
}

fn unit_lower() -> [f64; 2] {
    [0.0, 0.0]
}

fn unit_upper() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Rect {
        nx: usize,
        ny: usize,
        #[serde(default = "unit_lower")]
        lower: [f64; 2],
        #[serde(default = "unit_upper")]
        upper: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        n_r: usize,
        n_theta: usize,
    },
    /// Relative paths are resolved against the config file's directory.
    MeshFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub k: f64,
    pub g: f64,
    pub phi: f64,
    pub xi: f64,
}

impl Default for MaterialSpec {
    fn default() -> Self {
        let m = MaterialParams::PNIPA;
        MaterialSpec {
            k: m.k,
            g: m.g,
            phi: m.phi,
            xi: m.xi,
        }
    }
}

impl From<MaterialSpec> for MaterialParams {
    fn from(m: MaterialSpec) -> Self {
        MaterialParams {
            k: m.k,
            g: m.g,
            phi: m.phi,
            xi: m.xi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSpec {
    /// `magnitude` times the clockwise unit tangent.
    Tangential { magnitude: f64 },
    /// Constant vector per boundary tag; keys are tag numbers or
    /// `left`/`right`/`bottom`/`top`. Missing tags get zero.
    PerTag { values: BTreeMap<String, [f64; 2]> },
    /// Manufactured solution with its traction and source terms.
    Mms {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

fn default_amplitude() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Zero,
    /// `amplitude sin(x + y) (1, 1)`.
    DiagonalSine { amplitude: f64 },
    /// `c/2 (x - center)`, with constant divergence `c`.
    UniformDilation { c: f64, center: [f64; 2] },
    /// Components as expressions in `x` and `y`.
    Expression { u_x: String, u_y: String },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::DiagonalSine { amplitude: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmSpec {
    #[default]
    Alg1,
    Alg2,
}

impl From<AlgorithmSpec> for Algorithm {
    fn from(a: AlgorithmSpec) -> Self {
        match a {
            AlgorithmSpec::Alg1 => Algorithm::Alg1,
            AlgorithmSpec::Alg2 => Algorithm::Alg2,
        }
    }
}

/// Convergence study settings. The coarsest mesh is the config's `rect`
/// domain, which must be the unit square with `nx == ny`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub levels: usize,
    pub coupling: CouplingSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSpec {
    DtH2,
    DtH,
    FixedMesh,
}

impl From<CouplingSpec> for Coupling {
    fn from(c: CouplingSpec) -> Self {
        match c {
            CouplingSpec::DtH2 => Coupling::DtH2,
            CouplingSpec::DtH => Coupling::DtH,
            CouplingSpec::FixedMesh => Coupling::FixedMesh,
        }
    }
}

/// Parses and validates a config. `base_dir` resolves relative mesh paths.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::invalid(path, e.into_inner().to_string())
    })?;
    if let DomainSpec::MeshFile { path } = &mut cfg.domain {
        if path.is_relative() {
            *path = base_dir.join(&*path);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(path, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("dt", self.dt)?;
        positive("t_final", self.t_final)?;
        positive("theta_threshold", self.theta_threshold)?;
        if !self.magnification.is_finite() {
            return Err(ConfigError::invalid("magnification", "must be finite"));
        }
        if self.stride == 0 {
            return Err(ConfigError::invalid("stride", "must be at least 1"));
        }
        self.params()?;
        match &self.domain {
            DomainSpec::MeshFile { path } if !path.is_file() => {
                return Err(ConfigError::invalid(
                    "domain.path",
                    format!("mesh file {} does not exist", path.display()),
                ));
            }
            _ => {}
        }
        match &self.load {
            LoadSpec::PerTag { values } => {
                for key in values.keys() {
                    parse_tag(key)?;
                }
            }
            LoadSpec::Mms { amplitude } => positive("load.amplitude", *amplitude)?,
            LoadSpec::Tangential { .. } => {}
        }
        self.initial_data()?;
        if let Some(s) = &self.study {
            if s.levels < 3 {
                return Err(ConfigError::invalid("study.levels", "a study needs at least 3 levels"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<DerivedParams, ConfigError> {
        derive_params(&self.material.into(), 2).map_err(|e| ConfigError::invalid("material", e.to_string()))
    }

    pub fn initial_data(&self) -> Result<InitialData, ConfigError> {
        Ok(match &self.initial {
            InitialSpec::Zero => InitialData::zero(),
            InitialSpec::DiagonalSine { amplitude } => InitialData::diagonal_sine(*amplitude),
            InitialSpec::UniformDilation { c, center } => InitialData::uniform_dilation(*c, *center),
            InitialSpec::Expression { u_x, u_y } => expression_initial(u_x, u_y)?,
        })
    }

    /// The boundary load of a physical run; `None` for the manufactured one.
    pub fn boundary_load(&self) -> Result<Option<BoundaryLoad>, ConfigError> {
        Ok(match &self.load {
            LoadSpec::Tangential { magnitude } => Some(BoundaryLoad::tangential(*magnitude)),
            LoadSpec::PerTag { values } => {
                let mut map = BTreeMap::new();
                for (k, v) in values {
                    map.insert(parse_tag(k)?, *v);
                }
                Some(BoundaryLoad::per_tag(map))
            }
            LoadSpec::Mms { .. } => None,
        })
    }

    pub fn build_mesh(&self) -> Result<Mesh, crate::RunError> {
        Ok(match &self.domain {
            DomainSpec::Rect { nx, ny, lower, upper } => mesh::gen_rect_mesh(*nx, *ny, *lower, *upper)?,
            DomainSpec::Ellipse { a, b, n_r, n_theta } => mesh::gen_ellipse_mesh(*a, *b, *n_r, *n_theta)?,
            DomainSpec::MeshFile { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| crate::RunError::io(path, e))?;
                mesh::read_mesh(&text)?
            }
        })
    }
}

fn parse_tag(key: &str) -> Result<BoundaryTag, ConfigError> {
    match key {
        "left" => Ok(TAG_LEFT),
        "right" => Ok(TAG_RIGHT),
        "bottom" => Ok(TAG_BOTTOM),
        "top" => Ok(TAG_TOP),
        other => other.parse().map_err(|_| {
            ConfigError::invalid(
                format!("load.values.{other}"),
                "expected a tag number or one of left, right, bottom, top",
            )
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEST1: &str = r#"{
        "domain": {"type": "rect", "nx": 35, "ny": 35},
        "load": {"type": "tangential", "magnitude": 0.1},
        "dt": 0.01, "t_final": 0.1
    }"#;

    fn parse(s: &str) -> Result<RunConfig, ConfigError> {
        parse_config(s, Path::new("."))
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse(TEST1).unwrap();
        assert_eq!(c.material, MaterialSpec::default());
        assert_eq!(c.algorithm, AlgorithmSpec::Alg1);
        assert_eq!(c.initial, InitialSpec::DiagonalSine { amplitude: 1e-4 });
        assert_eq!(c.stride, 1);
        assert_eq!(c.magnification, 500.0);
        assert_eq!(
            c.domain,
            DomainSpec::Rect { nx: 35, ny: 35, lower: [0.0, 0.0], upper: [1.0, 1.0] }
        );
    }

    #[test]
    fn zero_dt_rejected() {
        let err = parse(&TEST1.replace("0.01", "0")).unwrap_err();
        assert!(err.to_string().starts_with("dt:"), "{err}");
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let err = parse(&TEST1.replace("\"magnitude\"", "\"magnitud\"")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("load") && msg.contains("magnitud"), "{msg}");
        let err = parse(&TEST1.replace("\"dt\"", "\"extra\": 1, \"dt\"")).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn bad_material_rejected() {
        let s = TEST1.replace("\"dt\"", r#""material": {"k": 1, "g": 1, "phi": 1.5, "xi": 1}, "dt""#);
        let err = parse(&s).unwrap_err();
        assert!(err.to_string().starts_with("material:"), "{err}");
    }

    #[test]
    fn per_tag_keys() {
        let s = TEST1.replace(
            r#"{"type": "tangential", "magnitude": 0.1}"#,
            r#"{"type": "per_tag", "values": {"left": [0.5, 0], "2": [-0.5, 0]}}"#,
        );
        let c = parse(&s).unwrap();
        let f = c.boundary_load().unwrap().unwrap();
        assert_eq!(f.eval([0.0, 0.5], [-1.0, 0.0], TAG_LEFT, 0.0), [0.5, 0.0]);
        assert_eq!(f.eval([1.0, 0.5], [1.0, 0.0], TAG_RIGHT, 0.0), [-0.5, 0.0]);
        assert_eq!(f.eval([0.5, 1.0], [0.0, 1.0], TAG_TOP, 0.0), [0.0, 0.0]);
        let bad = s.replace("\"left\"", "\"port\"");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn missing_mesh_file() {
        let s = TEST1.replace(
            r#"{"type": "rect", "nx": 35, "ny": 35}"#,
            r#"{"type": "mesh_file", "path": "no/such.mesh"}"#,
        );
        let err = parse(&s).unwrap_err();
        assert!(err.to_string().contains("does not exist"), "{err}");
    }

    #[test]
    fn short_study_rejected() {
        let s = TEST1.replace("\"dt\"", r#""study": {"levels": 2, "coupling": "dt_h2"}, "dt""#);
        assert!(parse(&s).is_err());
    }
}
