//! Scenario runner behind the `curvatura` binary.

pub mod scenario;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::discretize::{assemble, mesh_patch, AssembledOperators, AssemblyConfig, SupportGeometry, SurfaceMesh};
use crate::error::Error;
use crate::jet::Jet;
use crate::spaceform::{SlabGeometry, SpaceForm};
use crate::stability::{solve_spectrum, stability_verdict, Spectrum, StabilityVerdict};
use crate::surface::catalog::{cap_in_ball, capillary_cap, ellipsoid, graph, hemisphere, PolynomialGraph};
use crate::surface::rotational::{rotational_h2_profile, shoot_free_boundary, ShootingReport};
use crate::surface::{verify_newton_identities, ParametricPatch};
use crate::topology::{
    balanced_cutoff, boundary_principal_direction_check, default_zero_tolerance, gauss_bonnet_audit, genus_inequality,
    nodal_graph, pivot_axis, rotation_test_function, test_function_pde_residual, theorem2_hypothesis_check,
    umbilic_locus, write_json, BalancedCutoff, GaussBonnetAudit, GenusInequality, HypothesisCheck, NodalGraph,
    PdeResidual, RotationKind, UmbilicReport,
};
use crate::variations::{
    functional_trace, h2_derivative_audit, second_variation_audit, volume_derivative_audit, H2DerivativeAudit,
    SecondVariationAudit, VariationSpec, VolumeAudit,
};

pub use scenario::{builtin, Analysis, CustomPatch, GeometrySpec, Scenario, Tolerances, BUILTIN};

/// Bumped whenever a field of [`Report`] changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Iteration cap of the slab shooting.
const SHOOTING_ITERATIONS: usize = 60;

/// Why a run stopped; maps onto the process exit status.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid configuration.
    Config(String),
    /// The library refused the geometry or a computation on it.
    Library(Error),
    /// A report or side file could not be written.
    Output(io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Output(_) => 2,
            Failure::Library(e) => library_exit_code(e),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Library(e) => match library_exit_code(e) {
                4 => write!(f, "solver error: {e}"),
                _ => write!(f, "geometry error: {e}"),
            },
            Failure::Output(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Output(io),
            e => Failure::Library(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Output(e)
    }
}

/// 4 for numerical breakdowns, 3 for everything the geometry rules out.
pub fn library_exit_code(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. }
        | Error::ShootingFailed(_)
        | Error::OdeFailure(_)
        | Error::NotPositiveDefinite { .. } => 4,
        Error::Io(_) => 2,
        _ => 3,
    }
}

/// Resolves a command-line argument to a scenario: a bundled name or a file.
pub fn load_scenario(arg: &str) -> Result<Scenario, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(s) = builtin(arg) {
            return Ok(s);
        }
    }
    Scenario::load(path).map_err(Failure::Config)
}

/// The surface of a scenario, split into meshable patches.
pub struct Geometry {
    pub sf: SpaceForm,
    pub patches: Vec<ParametricPatch>,
    pub support: SupportGeometry,
    pub theta: f64,
    pub ball_radius: Option<f64>,
    /// Euler characteristic of the assembled surface.
    pub euler_characteristic: i64,
    /// Killing field whose normal component vanishes on the surface.
    pub symmetry: Option<Symmetry>,
    pub shooting: Option<ShootingReport>,
}

#[derive(Clone, Copy, Debug)]
pub enum Symmetry {
    /// Rotation about the axis through the ball center and the surface's pole.
    Pivot,
    Vertical,
}

pub fn build_geometry(s: &Scenario) -> Result<Geometry, Failure> {
    let sf = SpaceForm::new(s.c);
    let flat = |patches, support, chi, symmetry| Geometry {
        sf,
        patches,
        support,
        theta: std::f64::consts::FRAC_PI_2,
        ball_radius: None,
        euler_characteristic: chi,
        symmetry,
        shooting: None,
    };
    Ok(match &s.geometry {
        GeometrySpec::CapInBall { big_r, r, theta } => {
            let ball = sf.ball_geometry(*big_r)?;
            let patch = match theta {
                Some(t) => capillary_cap(sf, *big_r, *r, *t)?,
                None => cap_in_ball(sf, *big_r, *r)?,
            };
            Geometry {
                sf,
                patches: vec![patch],
                support: SupportGeometry::Ball(ball),
                theta: theta.unwrap_or(std::f64::consts::FRAC_PI_2),
                ball_radius: Some(*big_r),
                euler_characteristic: 1,
                symmetry: Some(Symmetry::Pivot),
                shooting: None,
            }
        }
        GeometrySpec::HemisphereSlab { radius } => {
            let slab = SlabGeometry { lower: -2.0 * radius, upper: 0.0 };
            flat(vec![hemisphere(*radius)?], SupportGeometry::Slab(slab), 1, Some(Symmetry::Vertical))
        }
        GeometrySpec::RotationalSlab { h2, seed, s_range, height } => match (s_range, seed) {
            (Some(range), Some(seed)) => {
                let (patch, _) = rotational_h2_profile(sf, *h2, *seed, *range)?;
                flat(vec![patch], SupportGeometry::None, 0, Some(Symmetry::Vertical))
            }
            _ => {
                let shot = shoot_free_boundary(*h2, *height, SHOOTING_ITERATIONS)?;
                let seed = crate::surface::rotational::ProfileSeed { radius: shot.radius, angle: 0.0 };
                let (patch, _) = rotational_h2_profile(sf, *h2, seed, [0.0, shot.height])?;
                let slab = SlabGeometry { lower: 0.0, upper: *height };
                let mut g = flat(vec![patch], SupportGeometry::Slab(slab), 0, Some(Symmetry::Vertical));
                g.shooting = Some(shot);
                g
            }
        },
        GeometrySpec::Ellipsoid { a, b, c } => flat(ellipsoid(*a, *b, *c)?.to_vec(), SupportGeometry::None, 2, None),
        GeometrySpec::Custom { path } => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let custom: CustomPatch =
                serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let label = custom.label.as_deref().unwrap_or("custom");
            let patch = graph(PolynomialGraph { terms: custom.terms }, custom.domain, label);
            flat(vec![patch], SupportGeometry::None, 1, None)
        }
    })
}

/// One asserted comparison; the run passes iff every check does.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, limit: f64) -> Check {
        Check { name: name.into(), value, limit, passed: value < limit }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Check {
        Check { name: name.into(), value, limit, passed: value >= limit }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchSummary {
    pub label: String,
    pub vertices: usize,
    pub triangles: usize,
    pub euler_characteristic: i64,
    pub boundary_components: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometrySummary {
    pub patches: Vec<PatchSummary>,
    pub support: SupportGeometry,
    pub theta: f64,
    pub euler_characteristic: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shooting: Option<ShootingReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JetsSection {
    pub samples: usize,
    /// Largest of `|tr P₁ − 2H₁|`, `|tr P₁A − 2H₂|`, `|tr P₁A² − 2H₁H₂|`.
    pub newton_identities: f64,
    /// Largest `|K − H₂ − c|`.
    pub gauss_relation: f64,
    /// Largest coordinate residuals of the `L₁φ` and `L₁η` formulas.
    pub position_residual: f64,
    pub normal_residual: f64,
    pub h2_range: [f64; 2],
    pub min_newton_eigenvalue: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssemblySection {
    pub dimension: usize,
    pub area: f64,
    pub boundary_length: f64,
    pub mesh_size: f64,
    pub p1_definite: bool,
    pub min_newton_eigenvalue: f64,
    pub conormal_principal_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl From<&Spectrum> for SpectrumSummary {
    fn from(s: &Spectrum) -> Self {
        SpectrumSummary { eigenvalues: s.eigenvalues.clone(), residuals: s.residuals.clone(), iterations: s.iterations }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSection {
    pub full: SpectrumSummary,
    pub constrained: SpectrumSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationCase {
    /// `g` in the scaled parameters. The first-variation and volume audits
    /// use `f = g + 1/2`; the second variation uses the mean-zero part of `f`.
    pub support_function: String,
    pub first_variation: H2DerivativeAudit,
    pub volume: VolumeAudit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_variation: Option<SecondVariationAudit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationSection {
    pub step: f64,
    pub cases: Vec<VariationCase>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum UmbilicOutcome {
    Isolated(UmbilicReport),
    Degenerate { u: f64, v: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct TestFunctionSection {
    pub axis: [f64; 3],
    pub pde_residual: PdeResidual,
    pub nodal_domains: usize,
    pub branch_points: usize,
    pub boundary_sign_changes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balanced_cutoff: Option<BalancedCutoff>,
    pub gauss_bonnet_partition: GaussBonnetAudit,
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologySection {
    pub umbilics: UmbilicOutcome,
    pub boundary_principal_check: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry_function_max: Option<f64>,
    pub gauss_bonnet: Vec<GaussBonnetAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunctionSection>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremSection {
    pub hypotheses: HypothesisCheck,
    pub genus_inequality: GenusInequality,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub c: f64,
    pub resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub geometry: GeometrySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jets: Option<JetsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assembly: Option<AssemblySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variation_audit: Option<VariationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_check: Option<TheoremSection>,
    /// Side files written next to `report.json`.
    pub files: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Options of `run`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the scenario's output directory.
    pub out: Option<PathBuf>,
    pub timestamp: bool,
}

struct Context<'a> {
    s: &'a Scenario,
    g: Geometry,
    meshes: Vec<SurfaceMesh>,
    ops: Option<AssembledOperators>,
    out: PathBuf,
    files: Vec<String>,
    checks: Vec<Check>,
}

impl Context<'_> {
    fn single(&self, what: &str) -> Result<&SurfaceMesh, Failure> {
        match self.meshes.as_slice() {
            [m] => Ok(m),
            _ => Err(Error::Unsupported(format!("{what} needs a single-patch surface")).into()),
        }
    }

    fn config(&self) -> AssemblyConfig {
        let mut cfg = AssemblyConfig::free_boundary(self.g.support);
        cfg.theta = self.g.theta;
        cfg
    }

    fn operators(&mut self) -> Result<&AssembledOperators, Failure> {
        if self.ops.is_none() {
            let mesh = self.single("assembly")?;
            self.ops = Some(assemble(mesh, self.g.sf, &self.config())?);
        }
        Ok(self.ops.as_ref().unwrap())
    }

    fn side_file(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(self.out.join(name))?);
        write(&mut w)?;
        w.flush()?;
        self.files.push(name.into());
        Ok(())
    }
}

/// Runs a scenario, writing `report.json` and side files into the output
/// directory. The report is returned even when checks fail.
pub fn run(s: &Scenario, opts: &RunOptions) -> Result<Report, Failure> {
    let out = opts.out.clone().or_else(|| s.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(&s.name));
    let g = build_geometry(s)?;
    let meshes = g.patches.iter().map(|p| mesh_patch(p, s.resolution)).collect::<crate::Result<Vec<_>>>()?;
    fs::create_dir_all(&out)?;
    let mut cx = Context { s, g, meshes, ops: None, out, files: Vec::new(), checks: Vec::new() };
    {
        let meshes = std::mem::take(&mut cx.meshes);
        cx.side_file("mesh.off", |w| write_off_all(&meshes, w))?;
        cx.meshes = meshes;
    }

    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        scenario: s.name.clone(),
        c: s.c,
        resolution: s.resolution,
        timestamp: opts.timestamp.then(unix_time),
        geometry: GeometrySummary {
            patches: cx
                .meshes
                .iter()
                .map(|m| PatchSummary {
                    label: m.patch.label().into(),
                    vertices: m.vertex_count(),
                    triangles: m.triangles.len(),
                    euler_characteristic: m.euler_characteristic(),
                    boundary_components: m.boundary_component_count(),
                })
                .collect(),
            support: cx.g.support,
            theta: cx.g.theta,
            euler_characteristic: cx.g.euler_characteristic,
            shooting: cx.g.shooting.clone(),
        },
        jets: None,
        assembly: None,
        spectrum: None,
        stability: None,
        variation_audit: None,
        topology: None,
        theorem_check: None,
        files: Vec::new(),
        checks: Vec::new(),
        passed: false,
    };

    for a in &s.analyses {
        match a {
            Analysis::Jets => report.jets = Some(jets(&mut cx)?),
            Analysis::Assemble => report.assembly = Some(assembly(&mut cx)?),
            Analysis::Spectrum => report.spectrum = Some(spectrum(&mut cx)?),
            Analysis::Stability => report.stability = Some(stability(&mut cx)?),
            Analysis::VariationAudit => report.variation_audit = Some(variation_audit(&mut cx)?),
            Analysis::Topology => report.topology = Some(topology(&mut cx)?),
            Analysis::TheoremCheck => report.theorem_check = Some(theorem_check(&mut cx)?),
        }
    }

    report.files = std::mem::take(&mut cx.files);
    report.files.push("report.json".into());
    report.passed = cx.checks.iter().all(|c| c.passed);
    report.checks = cx.checks;
    let mut w = BufWriter::new(File::create(cx.out.join("report.json"))?);
    write_json(&report, &mut w)?;
    w.flush()?;
    Ok(report)
}

fn unix_time() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// One OFF file for all patches; vertex indices of later patches are offset.
pub fn write_off_all(meshes: &[SurfaceMesh], mut w: impl Write) -> io::Result<()> {
    if let [m] = meshes {
        return m.write_off(w);
    }
    let nv: usize = meshes.iter().map(|m| m.vertex_count()).sum();
    let nt: usize = meshes.iter().map(|m| m.triangles.len()).sum();
    writeln!(w, "OFF")?;
    writeln!(w, "{nv} {nt} 0")?;
    for m in meshes {
        let dim = m.patch.space_form().model_dim();
        for x in &m.positions {
            let coords: Vec<String> = (0..dim).map(|k| format!("{:.17e}", x[k])).collect();
            writeln!(w, "{}", coords.join(" "))?;
        }
    }
    let mut offset = 0;
    for m in meshes {
        for t in &m.triangles {
            writeln!(w, "3 {} {} {}", t[0] + offset, t[1] + offset, t[2] + offset)?;
        }
        offset += m.vertex_count();
    }
    Ok(())
}

fn jets(cx: &mut Context) -> Result<JetsSection, Failure> {
    let c = cx.s.c;
    let mut sec = JetsSection {
        samples: 0,
        newton_identities: 0.0,
        gauss_relation: 0.0,
        position_residual: 0.0,
        normal_residual: 0.0,
        h2_range: [f64::INFINITY, f64::NEG_INFINITY],
        min_newton_eigenvalue: f64::INFINITY,
    };
    for patch in &cx.g.patches {
        for p in patch.sample_points(12) {
            let gj = patch.geometry_jets(p[0], p[1])?;
            let j = gj.surface_jet();
            let ids = verify_newton_identities(&j);
            let [r1, r2] = gj.newton_residuals();
            sec.samples += 1;
            sec.newton_identities = ids.iter().fold(sec.newton_identities, |m, v| m.max(*v));
            sec.gauss_relation = sec.gauss_relation.max((gj.intrinsic_curvature() - j.h2 - c).abs());
            sec.position_residual = sec.position_residual.max(r1);
            sec.normal_residual = sec.normal_residual.max(r2);
            sec.h2_range = [sec.h2_range[0].min(j.h2), sec.h2_range[1].max(j.h2)];
            sec.min_newton_eigenvalue = sec.min_newton_eigenvalue.min(j.newton_min_eigenvalue());
        }
    }
    let t = &cx.s.tolerances;
    cx.checks.push(Check::below("newton_identities", sec.newton_identities, t.identities));
    cx.checks.push(Check::below("gauss_relation", sec.gauss_relation, t.gauss_relation));
    let lemma = sec.position_residual.max(sec.normal_residual);
    cx.checks.push(Check::below("position_normal_residuals", lemma, t.lemma_residuals));
    Ok(sec)
}

fn assembly(cx: &mut Context) -> Result<AssemblySection, Failure> {
    let length = AssembledOperators::boundary_length(cx.single("assembly")?);
    let ops = cx.operators()?;
    Ok(AssemblySection {
        dimension: ops.dim(),
        area: ops.area(),
        boundary_length: length,
        mesh_size: ops.mesh_size,
        p1_definite: ops.p1_definite,
        min_newton_eigenvalue: ops.min_newton_eigenvalue,
        conormal_principal_defect: ops.conormal_principal_defect,
    })
}

fn spectrum(cx: &mut Context) -> Result<SpectrumSection, Failure> {
    let k = cx.s.tolerances.eigenvalues.max(1);
    let ops = cx.operators()?;
    let full = solve_spectrum(ops, k.min(ops.dim()), false)?;
    let constrained = solve_spectrum(ops, k.min(ops.dim() - 1), true)?;
    cx.side_file("spectrum_full.csv", |w| full.write_csv(w))?;
    cx.side_file("spectrum_constrained.csv", |w| constrained.write_csv(w))?;
    Ok(SpectrumSection { full: (&full).into(), constrained: (&constrained).into() })
}

fn stability(cx: &mut Context) -> Result<StabilityVerdict, Failure> {
    let verdict = stability_verdict(cx.operators()?, None)?;
    // umbilical caps in a ball are 1-stable; other verdicts are only reported
    if matches!(cx.s.geometry, GeometrySpec::CapInBall { theta: None, .. }) {
        cx.checks.push(Check::at_least("cap_stable", verdict.lambda_min_constrained, -verdict.tolerance));
    }
    Ok(verdict)
}

type Support = fn(Jet, Jet) -> Jet;

fn variation_audit(cx: &mut Context) -> Result<VariationSection, Failure> {
    const STEP: f64 = 1e-4;
    let mesh = cx.single("the variation audit")?.clone();
    let patch = mesh.patch.clone();
    let s = 1.0 / patch.domain().scale();
    let cases: [(&str, Support); 3] = [
        ("u^2 - v^2", |u, v| u * u - v * v),
        ("uv + 0.3(u^2 - v^2)", |u, v| u * v + (u * u - v * v) * 0.3),
        ("u^2 + v^2", |u, v| u * u + v * v),
    ];
    // second variations need an admissible family: ball or slab in ℝ³ with free boundary
    let second = cx.s.c == 0.0
        && cx.g.theta == std::f64::consts::FRAC_PI_2
        && matches!(cx.g.support, SupportGeometry::Ball(_) | SupportGeometry::Slab(_));
    let pts: Vec<[f64; 2]> = patch.sample_points(5).into_iter().filter(|p| !patch.domain().on_boundary(*p)).collect();
    let mut out = Vec::new();
    for (i, (name, f)) in cases.into_iter().enumerate() {
        // V′(0) is compared before the mean is removed, where ∫ f dμ is not zero
        let raw = VariationSpec::normal(patch.clone(), move |u, v| f(u * s, v * s) + 0.5);
        let first = h2_derivative_audit(&raw, &pts, STEP)?;
        let volume = volume_derivative_audit(&raw, STEP)?;
        let var = raw.mean_zero()?;
        let second_variation = if second {
            let ops = cx.operators()?;
            let a = second_variation_audit(&var, &mesh, ops, 1e-3)?;
            if i == 0 {
                let cfg = ops.config;
                let family = var.clone().admissible(&cfg)?;
                let trace = functional_trace(&family, &cfg, &[-2e-3, -1e-3, 1e-3, 2e-3])?;
                cx.side_file("functional_trace.csv", |w| trace.write_csv(w))?;
            }
            Some(a)
        } else {
            None
        };
        out.push(VariationCase { support_function: name.into(), first_variation: first, volume, second_variation });
    }
    let t = cx.s.tolerances.clone();
    let worst = |g: &dyn Fn(&VariationCase) -> f64| out.iter().map(g).fold(0.0f64, f64::max);
    cx.checks.push(Check::below(
        "first_variation",
        worst(&|c| c.first_variation.max_relative_error),
        t.first_variation,
    ));
    cx.checks.push(Check::below("volume_derivative", worst(&|c| c.volume.relative_error), t.volume_derivative));
    if second {
        let e = worst(&|c| c.second_variation.map_or(0.0, |a| a.relative_error));
        cx.checks.push(Check::below("second_variation", e, t.second_variation));
    }
    Ok(VariationSection { step: STEP, cases: out })
}

fn topology(cx: &mut Context) -> Result<TopologySection, Failure> {
    let t = cx.s.tolerances.clone();
    let mut reports = Vec::new();
    let mut degenerate = None;
    for patch in &cx.g.patches {
        match umbilic_locus(patch, t.umbilic_grid, 0.3) {
            Ok(r) => reports.push(r),
            Err(Error::DegenerateLocus { u, v }) => {
                degenerate = Some(UmbilicOutcome::Degenerate { u, v });
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let umbilics = degenerate
        .unwrap_or_else(|| UmbilicOutcome::Isolated(UmbilicReport::merge(&reports, cx.g.euler_characteristic)));
    // index sums only equal χ on closed surfaces, here glued from several patches
    if cx.g.patches.len() > 1 {
        if let UmbilicOutcome::Isolated(r) = &umbilics {
            let gap = (r.sum_of_indices - r.euler_characteristic as f64).abs();
            cx.checks.push(Check::below("poincare_hopf", if r.totally_umbilical { 0.0 } else { gap }, 0.25));
        }
    }

    let principal = cx.meshes.iter().map(boundary_principal_direction_check).fold(0.0, f64::max);
    if !matches!(cx.g.support, SupportGeometry::None) || cx.g.symmetry.is_some() {
        cx.checks.push(Check::below("boundary_principal_check", principal, t.principal_direction));
    }

    let mut symmetry_function_max = None;
    if let (Some(sym), [mesh]) = (cx.g.symmetry, cx.meshes.as_slice()) {
        let kind = match sym {
            Symmetry::Pivot => RotationKind::Ball { axis: pivot_axis(mesh) },
            Symmetry::Vertical => RotationKind::Slab { center: [0.0, 0.0] },
        };
        let f = rotation_test_function(mesh, cx.g.sf, kind)?;
        let m = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        cx.checks.push(Check::below("symmetry_function", m, t.rotation_function));
        symmetry_function_max = Some(m);
    }

    let mut gauss_bonnet = Vec::new();
    for mesh in &cx.meshes {
        let a = gauss_bonnet_audit(mesh, None)?;
        cx.checks.push(Check::below("gauss_bonnet", a.global_residual.abs(), t.gauss_bonnet));
        gauss_bonnet.push(a);
    }

    let test_function = match cx.g.symmetry {
        Some(Symmetry::Pivot) => Some(tilted_test_function(cx)?),
        _ => None,
    };
    Ok(TopologySection {
        umbilics,
        boundary_principal_check: principal,
        symmetry_function_max,
        gauss_bonnet,
        test_function,
    })
}

/// The rotation function about an axis off the symmetry axis: a Jacobi field
/// with two nodal domains, the object of the rigidity argument.
fn tilted_test_function(cx: &mut Context) -> Result<TestFunctionSection, Failure> {
    let mesh = cx.single("the test function")?.clone();
    let p = pivot_axis(&mesh);
    let q = [0.37f64.cos(), 0.37f64.sin(), 0.0];
    let axis = [p[0] * 0.4 + q[0], p[1] * 0.4 + q[1], p[2] * 0.4 + q[2]];
    let f = rotation_test_function(&mesh, cx.g.sf, RotationKind::Ball { axis })?;
    let ops = cx.operators()?;
    let pde_residual = test_function_pde_residual(&mesh, ops, &f)?;
    let graph: NodalGraph = nodal_graph(&mesh, &f, default_zero_tolerance(&mesh))?;
    let cut = if graph.domain_count() >= 2 { Some(balanced_cutoff(ops, &graph, &f, [0, 1])?) } else { None };
    let partition = gauss_bonnet_audit(&mesh, Some((&graph, &f)))?;
    cx.checks.push(Check::below(
        "gauss_bonnet_partition",
        partition.global_residual.abs(),
        cx.s.tolerances.gauss_bonnet,
    ));
    cx.side_file("nodal_graph.json", |w| write_json(&graph, w))?;
    cx.side_file("nodal_polylines.csv", |w| graph.write_polylines_csv(w))?;
    Ok(TestFunctionSection {
        axis,
        pde_residual,
        nodal_domains: graph.domain_count(),
        branch_points: graph.branch_points.len(),
        boundary_sign_changes: graph.boundary_sign_changes.clone(),
        balanced_cutoff: cut,
        gauss_bonnet_partition: partition,
    })
}

fn theorem_check(cx: &mut Context) -> Result<TheoremSection, Failure> {
    let Some(radius) = cx.g.ball_radius else {
        return Err(Error::Unsupported("theorem-check needs a ball scenario".into()).into());
    };
    let mesh = cx.single("theorem-check")?;
    Ok(TheoremSection {
        hypotheses: theorem2_hypothesis_check(mesh, cx.g.sf, radius),
        genus_inequality: genus_inequality(mesh, cx.g.sf, radius),
    })
}

/// Meshes the scenario's surface and writes it as OFF.
pub fn export_mesh(s: &Scenario, path: &Path) -> Result<(), Failure> {
    let g = build_geometry(s)?;
    let meshes = g.patches.iter().map(|p| mesh_patch(p, s.resolution)).collect::<crate::Result<Vec<_>>>()?;
    let mut w = BufWriter::new(File::create(path)?);
    write_off_all(&meshes, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
