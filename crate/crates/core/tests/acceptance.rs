//! Acceptance criteria, one line each. Runs without the test harness so the
//! lines appear in ordinary `cargo test` output.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curvatura::discretize::{assemble, mesh_patch, AssembledOperators, AssemblyConfig, SupportGeometry, SurfaceMesh};
use curvatura::jet::Jet;
use curvatura::spaceform::{cn, sn, SpaceForm};
use curvatura::stability::stability_verdict;
use curvatura::surface::catalog::{bumpy_sphere, cap_in_ball, capillary_cap, ellipsoid, flat_disk, hemisphere, lifted};
use curvatura::surface::rotational::{rotational_h2_profile, ProfileSeed};
use curvatura::surface::{verify_newton_identities, Domain, ParametricPatch};
use curvatura::topology::{
    balanced_cutoff, boundary_principal_direction_check, default_zero_tolerance, gauss_bonnet_audit, nodal_graph,
    pivot_axis, rotation_test_function, test_function_pde_residual, umbilic_locus, RotationKind, UmbilicReport,
};
use curvatura::variations::{h2_derivative_audit, second_variation_audit, volume_derivative_audit, VariationSpec};

type Outcome = Result<(bool, String), String>;

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("Newton identities", newton_identities),
        ("Gauss relation", gauss_relation),
        ("position and normal under L1", position_and_normal),
        ("first variation of H2", first_variation),
        ("volume derivative", volume_derivative),
        ("second variation", second_variation),
        ("stability of umbilical caps", cap_stability),
        ("test-function PDE", test_function_pde),
        ("rigidity signal", rigidity_signal),
        ("Poincare-Hopf on the ellipsoid", poincare_hopf),
        ("Gauss-Bonnet audits", gauss_bonnet),
        ("boundary principal direction", principal_direction),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!("{} {:>2} {name}: {detail} [{secs:.1} s]", if ok { "PASS" } else { "FAIL" }, k + 1);
        failed += usize::from(!ok);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ball_setup(c: f64, r: f64, res: usize) -> Result<(SurfaceMesh, AssembledOperators), String> {
    let sf = SpaceForm::new(c);
    let mesh = mesh_patch(&cap_in_ball(sf, 1.0, r).map_err(err)?, res).map_err(err)?;
    let cfg = AssemblyConfig::free_boundary(SupportGeometry::Ball(sf.ball_geometry(1.0).map_err(err)?));
    let ops = assemble(&mesh, sf, &cfg).map_err(err)?;
    Ok((mesh, ops))
}

/// Rotation about an axis off the cap's symmetry axis.
fn tilted(mesh: &SurfaceMesh) -> RotationKind {
    let p = pivot_axis(mesh);
    let q = [0.37f64.cos(), 0.37f64.sin(), 0.0];
    RotationKind::Ball { axis: [p[0] * 0.4 + q[0], p[1] * 0.4 + q[1], p[2] * 0.4 + q[2]] }
}

fn upper_ellipsoid() -> Result<ParametricPatch, String> {
    let [upper, _] = ellipsoid(1.0, 0.8, 0.6).map_err(err)?;
    Ok(upper)
}

/// Sphere and ellipsoid patches in the model of curvature `c`; the ellipsoid
/// is small enough to sit inside every model chart.
fn model_patches(c: f64) -> Result<Vec<ParametricPatch>, String> {
    let sf = SpaceForm::new(c);
    let [small, _] = ellipsoid(0.4, 0.3, 0.2).map_err(err)?;
    let mut out = vec![lifted(sf, &small), cap_in_ball(sf, 1.0, 0.8).map_err(err)?];
    if c == 0.0 {
        out.push(upper_ellipsoid()?);
    }
    Ok(out)
}

fn random_points(patch: &ParametricPatch, n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let (lo, hi) = match *patch.domain() {
        Domain::Disk { center, radius } | Domain::Annulus { center, outer: radius, .. } => {
            ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
        }
        Domain::Rectangle { u, v } => ([u[0], v[0]], [u[1], v[1]]),
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
        if patch.domain().contains(p) {
            out.push(p);
        }
    }
    out
}

fn newton_identities() -> Outcome {
    let start = Instant::now();
    let sf = SpaceForm::euclidean();
    let (rot, _) = rotational_h2_profile(sf, 1.0, ProfileSeed { radius: 0.8, angle: 0.2 }, [-0.3, 0.3]).map_err(err)?;
    let patches = [cap_in_ball(sf, 1.0, 1.0).map_err(err)?, upper_ellipsoid()?, rot];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut count) = (0.0f64, 0);
    for (k, patch) in patches.iter().enumerate() {
        let n = if k == 2 { 334 } else { 333 };
        for p in random_points(patch, n, &mut rng) {
            let j = patch.evaluate_jet(p).map_err(err)?;
            worst = verify_newton_identities(&j).iter().fold(worst, |m, v| m.max(*v));
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst < 1e-9 && secs < 1.0, format!("{count} jets, max residual {worst:.1e} < 1e-9, {secs:.2} s < 1 s")))
}

fn gauss_relation() -> Outcome {
    let mut worst = 0.0f64;
    for c in [-1.0, 0.0, 1.0] {
        for patch in model_patches(c)? {
            for q in patch.sample_points(9) {
                let gj = patch.geometry_jets(q[0], q[1]).map_err(err)?;
                worst = worst.max((gj.intrinsic_curvature() - gj.h2_jet().value() - c).abs());
            }
        }
    }
    Ok((worst < 1e-8, format!("max |K - H2 - c| = {worst:.1e} < 1e-8 for c in {{-1, 0, 1}}")))
}

fn position_and_normal() -> Outcome {
    let start = Instant::now();
    let mut worst = [0.0f64; 2];
    for c in [-1.0, 0.0, 1.0] {
        for patch in model_patches(c)? {
            for q in patch.sample_points(9) {
                let r = patch.geometry_jets(q[0], q[1]).map_err(err)?.newton_residuals();
                worst = [worst[0].max(r[0]), worst[1].max(r[1])];
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst[0] < 1e-5 && worst[1] < 1e-5 && secs < 10.0;
    Ok((ok, format!("max residuals {:.1e}, {:.1e} < 1e-5 on sphere and ellipsoid, c = 0, +-1", worst[0], worst[1])))
}

fn first_variation() -> Outcome {
    let supports: [fn(Jet, Jet) -> Jet; 5] = [
        |u, v| (u * 2.0).sin() + v,
        |u, v| (-(u * u) - v * v).exp(),
        |u, v| u * v * v + 0.3,
        |u, v| 1.0 + u * 0.5 - v * v,
        |u, v| u.cos() * (v + 2.0),
    ];
    let mut worst = 0.0f64;
    for patch in [cap_in_ball(SpaceForm::euclidean(), 1.0, 1.0).map_err(err)?, upper_ellipsoid()?] {
        let r = patch.domain().scale();
        let pts = [[0.1 * r, 0.2 * r], [-0.3 * r, 0.4 * r], [0.5 * r, -0.1 * r]];
        for f in supports {
            let a = h2_derivative_audit(&VariationSpec::normal(patch.clone(), f), &pts, 1e-4).map_err(err)?;
            worst = worst.max(a.max_relative_error);
        }
    }
    // concentric spheres: H2(t) = (cn/sn)²(r − t), so H2′(0) = 2 (cn/sn) / sn²
    let mut closed = 0.0f64;
    for c in [-1.0, 0.0, 1.0] {
        let r = 0.8;
        let var = VariationSpec::constant(cap_in_ball(SpaceForm::new(c), 1.0, r).map_err(err)?, 1.0);
        let a = h2_derivative_audit(&var, &[[0.05, 0.02]], 1e-4).map_err(err)?;
        let exact = 2.0 * cn(c, r) / sn(c, r).powi(3);
        closed = closed.max((a.samples[0].finite_difference - exact).abs() / exact);
    }
    Ok((
        worst < 1e-3 && closed < 1e-6,
        format!("max relative error {worst:.1e} < 1e-3 (10 cases), concentric spheres {closed:.1e} < 1e-6"),
    ))
}

fn volume_derivative() -> Outcome {
    let cap = cap_in_ball(SpaceForm::euclidean(), 1.0, 1.0).map_err(err)?;
    let cases = [
        VariationSpec::constant(cap.clone(), 1.0),
        VariationSpec::normal(cap, |u, v| 1.0 + u * 0.5 - v * v),
        VariationSpec::normal(upper_ellipsoid()?, |u, v| (u * v).exp()),
        VariationSpec::normal(cap_in_ball(SpaceForm::new(-1.0), 1.0, 0.8).map_err(err)?, |u, _| u.cos()),
        VariationSpec::normal(cap_in_ball(SpaceForm::new(1.0), 1.0, 0.6).map_err(err)?, |u, v| 2.0 + u * v),
    ];
    let mut worst = 0.0f64;
    for var in &cases {
        worst = worst.max(volume_derivative_audit(var, 1e-4).map_err(err)?.relative_error);
    }
    Ok((worst < 1e-4, format!("max relative error {worst:.1e} < 1e-4 over 5 variations")))
}

fn second_variation() -> Outcome {
    let (mesh, ops) = ball_setup(0.0, 1.0, 32)?;
    let cap = mesh.patch.clone();
    let s = 1.0 / cap.domain().scale();
    let vars = [
        VariationSpec::normal(cap.clone(), move |u, v| (u * u - v * v) * (s * s)),
        VariationSpec::normal(cap.clone(), move |u, v| (u * v + (u * u - v * v) * 0.3) * (s * s)),
        VariationSpec::normal(cap, move |u, v| (u * u + v * v) * (s * s)).mean_zero().map_err(err)?,
    ];
    let mut worst = 0.0f64;
    for var in &vars {
        worst = worst.max(second_variation_audit(var, &mesh, &ops, 1e-3).map_err(err)?.relative_error);
    }
    Ok((worst < 1e-2, format!("max relative error {worst:.1e} < 1e-2 on 3 mean-zero functions")))
}

fn cap_stability() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, r) in [(0.0, 1.0), (0.0, 2.0), (-1.0, 0.8)] {
        let coarse = stability_verdict(&ball_setup(c, r, 32)?.1, None).map_err(err)?;
        let start = Instant::now();
        let fine = stability_verdict(&ball_setup(c, r, 64)?.1, None).map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        let lam = fine.lambda_min_constrained;
        let case_ok = lam >= -fine.tolerance && lam.abs() < coarse.lambda_min_constrained.abs() && secs < 60.0;
        ok &= case_ok;
        parts.push(format!(
            "({c},1,{r}): {lam:.2e} >= -{:.1e}, |{:.2e}| at 32, {secs:.1} s",
            fine.tolerance, coarse.lambda_min_constrained
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn test_function_pde() -> Outcome {
    let sf = SpaceForm::euclidean();
    let mut prev: Option<f64> = None;
    let mut ratios = Vec::new();
    let mut boundary = f64::NAN;
    let mut ok = true;
    for res in [16, 32, 64, 128] {
        let (mesh, ops) = ball_setup(0.0, 1.0, res)?;
        let f = rotation_test_function(&mesh, sf, tilted(&mesh)).map_err(err)?;
        let r = test_function_pde_residual(&mesh, &ops, &f).map_err(err)?;
        if let Some(p) = prev {
            let q = r.interior / p;
            ok &= q <= 0.6;
            ratios.push(format!("{q:.2}"));
        }
        prev = Some(r.interior);
        boundary = r.boundary;
    }
    ok &= boundary < 1e-3;
    Ok((
        ok,
        format!("interior ratios per doubling [{}] <= 0.6, boundary {boundary:.1e} < 1e-3 at 128", ratios.join(", ")),
    ))
}

fn rigidity_signal() -> Outcome {
    let mut sym = 0.0f64;
    let max_abs = |f: &[f64]| f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for c in [-1.0, 0.0, 1.0] {
        let sf = SpaceForm::new(c);
        let mesh = mesh_patch(&cap_in_ball(sf, 1.0, 0.8).map_err(err)?, 16).map_err(err)?;
        let f = rotation_test_function(&mesh, sf, RotationKind::Ball { axis: pivot_axis(&mesh) }).map_err(err)?;
        sym = sym.max(max_abs(&f));
    }
    let sf = SpaceForm::euclidean();
    let (rot, _) = rotational_h2_profile(sf, 1.0, ProfileSeed { radius: 0.8, angle: 0.2 }, [-0.3, 0.3]).map_err(err)?;
    for patch in [rot, hemisphere(1.0).map_err(err)?] {
        let mesh = mesh_patch(&patch, 16).map_err(err)?;
        let f = rotation_test_function(&mesh, sf, RotationKind::Slab { center: [0.0, 0.0] }).map_err(err)?;
        sym = sym.max(max_abs(&f));
    }

    let mut values = Vec::new();
    for res in [32, 64, 128] {
        let (mesh, ops) = ball_setup(0.0, 1.0, res)?;
        let f = rotation_test_function(&mesh, sf, tilted(&mesh)).map_err(err)?;
        let g = nodal_graph(&mesh, &f, default_zero_tolerance(&mesh)).map_err(err)?;
        values.push(balanced_cutoff(&ops, &g, &f, [0, 1]).map_err(err)?.index_form);
    }
    let decreasing = values.windows(2).all(|w| w[1].abs() < w[0].abs());
    let last = values[values.len() - 1];
    let listed: Vec<String> = values.iter().map(|v| format!("{v:.1e}")).collect();
    Ok((
        sym < 1e-8 && decreasing && last.abs() < 1e-2,
        format!("symmetric ||f|| = {sym:.1e} < 1e-8; I(f~,f~) at 32/64/128 = [{}], last < 1e-2", listed.join(", ")),
    ))
}

fn poincare_hopf() -> Outcome {
    let start = Instant::now();
    let halves = ellipsoid(2.0, 1.5, 1.0).map_err(err)?;
    let reports = halves.iter().map(|p| umbilic_locus(p, 60, 0.3)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let r = UmbilicReport::merge(&reports, 2);
    let secs = start.elapsed().as_secs_f64();
    let ok = r.umbilics.len() == 4
        && r.umbilics.iter().all(|u| u.index == 0.5)
        && r.max_snap_distance < 0.1
        && r.sum_of_indices == 2.0
        && secs < 30.0;
    Ok((
        ok,
        format!(
            "{} umbilics, indices {:?}, max snap distance {:.1e}, sum {} = chi 2",
            r.umbilics.len(),
            r.umbilics.iter().map(|u| u.index).collect::<Vec<_>>(),
            r.max_snap_distance,
            r.sum_of_indices
        ),
    ))
}

fn gauss_bonnet() -> Outcome {
    let disk = gauss_bonnet_audit(&mesh_patch(&flat_disk(1.0), 32).map_err(err)?, None).map_err(err)?;
    let cap_mesh = mesh_patch(&cap_in_ball(SpaceForm::euclidean(), 1.0, 1.0).map_err(err)?, 32).map_err(err)?;
    let cap = gauss_bonnet_audit(&cap_mesh, None).map_err(err)?;
    let single = [disk.regions[0].residual, disk.smooth_residual, cap.regions[0].residual, cap.smooth_residual]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    let (mesh, _) = ball_setup(0.0, 1.0, 32)?;
    let f = rotation_test_function(&mesh, SpaceForm::euclidean(), tilted(&mesh)).map_err(err)?;
    let g = nodal_graph(&mesh, &f, default_zero_tolerance(&mesh)).map_err(err)?;
    let split = gauss_bonnet_audit(&mesh, Some((&g, &f))).map_err(err)?;
    let corners: usize = split.regions.iter().map(|r| r.external_angles.len()).sum();
    let parted = split.regions.iter().fold(split.global_residual.abs(), |m, r| m.max(r.residual.abs()));
    let ok = single < 1e-3 && parted < 1e-2 && split.regions.len() == 2 && corners == 4;
    Ok((
        ok,
        format!(
            "single-region {single:.1e} < 1e-3; bisected cap {} regions, {corners} corners, {parted:.1e} < 1e-2",
            split.regions.len()
        ),
    ))
}

fn principal_direction() -> Outcome {
    let mut caps = 0.0f64;
    for c in [-1.0, 0.0, 1.0] {
        let sf = SpaceForm::new(c);
        for patch in [cap_in_ball(sf, 1.0, 0.8).map_err(err)?, capillary_cap(sf, 1.0, 0.7, PI / 3.0).map_err(err)?] {
            caps = caps.max(boundary_principal_direction_check(&mesh_patch(&patch, 16).map_err(err)?));
        }
    }
    let bumpy =
        boundary_principal_direction_check(&mesh_patch(&bumpy_sphere(0.2, 0.8).map_err(err)?, 16).map_err(err)?);
    Ok((caps < 1e-8 && bumpy > 1e-2, format!("caps {caps:.1e} < 1e-8, bumpy sphere control {bumpy:.1e} > 1e-2")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let run = |name: &str, out: &Path, threads: Option<&str>| -> Result<Vec<u8>, String> {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_curvatura"));
        cmd.args(["run", name, "--out", out.to_str().unwrap(), "--no-timestamp"]);
        if let Some(t) = threads {
            cmd.env("CURVATURA_THREADS", t);
        }
        let status = cmd.output().map_err(err)?.status;
        if status.code() != Some(0) {
            return Err(format!("{name} exited with {status}"));
        }
        std::fs::read(out.join("report.json")).map_err(err)
    };
    let mut same = 0;
    let names: Vec<&str> = curvatura::cli::BUILTIN.iter().map(|(n, _)| *n).filter(|n| *n != "slab-shooting").collect();
    for name in &names {
        let a = run(name, &dir.path().join(format!("{name}-a")), None)?;
        let b = run(name, &dir.path().join(format!("{name}-b")), Some("1"))?;
        same += usize::from(a == b);
    }
    Ok((
        same == names.len(),
        format!("{same} of {} scenarios byte-identical across runs and thread counts", names.len()),
    ))
}
