use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::surface::rotational::ProfileSeed;
use crate::surface::Domain;

/// One experiment: a surface, a mesh resolution and the analyses to run on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Sectional curvature of the ambient space form.
    pub c: f64,
    pub geometry: GeometrySpec,
    pub resolution: usize,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Totally umbilical cap of sphere radius `r` meeting `∂B_R` at angle `theta`
    /// (free boundary when omitted).
    CapInBall {
        #[serde(rename = "R")]
        big_r: f64,
        r: f64,
        #[serde(default)]
        theta: Option<f64>,
    },
    /// Rotational `H₂` annulus. With `s_range` the profile is integrated from
    /// `seed` as is; without it a free-boundary profile in the slab
    /// `0 ≤ x₃ ≤ height` is shot for.
    RotationalSlab {
        #[serde(rename = "H2")]
        h2: f64,
        #[serde(default)]
        seed: Option<ProfileSeed>,
        #[serde(default)]
        s_range: Option<[f64; 2]>,
        #[serde(default = "unit")]
        height: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Lower hemisphere resting on the plane `x₃ = 0`.
    HemisphereSlab {
        radius: f64,
    },
    /// Polynomial graph read from a JSON file with `terms` and `domain`.
    Custom {
        path: PathBuf,
    },
}

impl GeometrySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GeometrySpec::CapInBall { .. } => "cap-in-ball",
            GeometrySpec::RotationalSlab { .. } => "rotational-slab",
            GeometrySpec::Ellipsoid { .. } => "ellipsoid",
            GeometrySpec::HemisphereSlab { .. } => "hemisphere-slab",
            GeometrySpec::Custom { .. } => "custom",
        }
    }
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Jets,
    Assemble,
    Spectrum,
    Stability,
    VariationAudit,
    Topology,
    TheoremCheck,
}

/// Limits for the asserted checks; a run exits with status 1 when one fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub identities: f64,
    pub gauss_relation: f64,
    pub lemma_residuals: f64,
    pub first_variation: f64,
    pub volume_derivative: f64,
    pub second_variation: f64,
    pub principal_direction: f64,
    pub rotation_function: f64,
    pub gauss_bonnet: f64,
    /// Eigenpairs to report from each spectrum.
    pub eigenvalues: usize,
    /// Lattice size of the umbilic search.
    pub umbilic_grid: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identities: 1e-9,
            gauss_relation: 1e-8,
            lemma_residuals: 1e-5,
            first_variation: 1e-3,
            volume_derivative: 1e-4,
            second_variation: 1e-2,
            principal_direction: 1e-8,
            rotation_function: 1e-8,
            gauss_bonnet: 1e-2,
            eigenvalues: 6,
            umbilic_grid: 60,
        }
    }
}

/// Contents of a custom patch file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomPatch {
    /// `[i, j, a]` for the term `a uⁱ vʲ` of the height function.
    pub terms: Vec<(u32, u32, f64)>,
    pub domain: Domain,
    #[serde(default)]
    pub label: Option<String>,
}

impl Scenario {
    pub fn from_json(text: &str) -> std::result::Result<Scenario, String> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if s.analyses.is_empty() {
            return Err("analyses: the list must not be empty".into());
        }
        if s.resolution == 0 {
            return Err("resolution: must be positive".into());
        }
        match &s.geometry {
            GeometrySpec::CapInBall { .. } => {}
            GeometrySpec::RotationalSlab { seed: None, s_range: Some(_), .. } => {
                return Err("seed: required when s_range is given".into());
            }
            g if s.c != 0.0 => {
                return Err(format!("c: geometry `{}` lives in Euclidean space and requires c = 0", g.kind()));
            }
            _ => {}
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> std::result::Result<Scenario, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut s = Scenario::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        // custom patch files are relative to the scenario file
        if let GeometrySpec::Custom { path: p } = &mut s.geometry {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(s)
    }
}

/// Scenarios shipped with the binary.
pub const BUILTIN: &[(&str, &str)] = &[
    ("unit-cap", include_str!("../../scenarios/unit-cap.json")),
    ("cap-r2", include_str!("../../scenarios/cap-r2.json")),
    ("hyperbolic-cap", include_str!("../../scenarios/hyperbolic-cap.json")),
    ("spherical-cap", include_str!("../../scenarios/spherical-cap.json")),
    ("capillary-cap", include_str!("../../scenarios/capillary-cap.json")),
    ("ellipsoid", include_str!("../../scenarios/ellipsoid.json")),
    ("hemisphere-slab", include_str!("../../scenarios/hemisphere-slab.json")),
    ("rotational-annulus", include_str!("../../scenarios/rotational-annulus.json")),
    ("slab-shooting", include_str!("../../scenarios/slab-shooting.json")),
];

pub fn builtin(name: &str) -> Option<Scenario> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::from_json(text).expect("bundled scenario parses"))
}
