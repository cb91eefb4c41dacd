use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::discretize::{assemble, mesh_patch, AssembledOperators, AssemblyConfig, SupportGeometry, TensorChoice};
use crate::error::Error;
use crate::spaceform::SpaceForm;
use crate::stability::solve_spectrum;
use crate::surface::catalog::{bumpy_sphere, cap_in_ball, capillary_cap, ellipsoid, flat_disk, monkey_saddle};
use crate::surface::rotational::{rotational_h2_profile, ProfileSeed};

fn ball_setup(c: f64, r: f64, res: usize) -> (SurfaceMesh, AssembledOperators) {
    let sf = SpaceForm::new(c);
    let mesh = mesh_patch(&cap_in_ball(sf, 1.0, r).unwrap(), res).unwrap();
    let cfg = AssemblyConfig::free_boundary(SupportGeometry::Ball(sf.ball_geometry(1.0).unwrap()));
    let ops = assemble(&mesh, sf, &cfg).unwrap();
    (mesh, ops)
}

/// An axis off the cap's symmetry axis, at an azimuth that avoids mesh lines.
fn tilted(mesh: &SurfaceMesh) -> RotationKind {
    let p = pivot_axis(mesh);
    let q = [0.37f64.cos(), 0.37f64.sin(), 0.0];
    RotationKind::Ball { axis: [p[0] * 0.4 + q[0], p[1] * 0.4 + q[1], p[2] * 0.4 + q[2]] }
}

#[test]
fn sphere_is_totally_umbilical() {
    let cap = cap_in_ball(SpaceForm::euclidean(), 1.0, 1.0).unwrap();
    let r = umbilic_locus(&cap, 20, 0.2).unwrap();
    assert!(r.totally_umbilical && r.umbilics.is_empty());
}

#[test]
fn ellipsoid_umbilics_sum_to_two() {
    let (a, b, c): (f64, f64, f64) = (2.0, 1.5, 1.0);
    let patches = ellipsoid(a, b, c).unwrap();
    let reports: Vec<UmbilicReport> = patches.iter().map(|p| umbilic_locus(p, 60, 0.3).unwrap()).collect();
    let all = UmbilicReport::merge(&reports, 2);
    assert_eq!(all.umbilics.len(), 4, "{all:?}");
    assert!(all.umbilics.iter().all(|u| u.index == 0.5));
    assert!(all.max_snap_distance < 0.1);
    assert!(all.satisfies_poincare_hopf());
    // closed form: (±x, 0, ±z) with x² = a²(a²−b²)/(a²−c²), z² = c²(b²−c²)/(a²−c²)
    let x = a * ((a * a - b * b) / (a * a - c * c)).sqrt();
    for (report, patch) in reports.iter().zip(&patches) {
        assert_eq!(report.umbilics.len(), 2);
        for u in &report.umbilics {
            let pos = patch.position(u.point[0], u.point[1]);
            assert!((pos[0].abs() - x).abs() < 1e-8 && pos[1].abs() < 1e-8, "{pos:?}");
        }
    }
    let mut json = Vec::new();
    write_json(&all, &mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["sum_of_indices"], 2.0);
}

#[test]
fn monkey_saddle_has_a_negative_half_umbilic() {
    let r = umbilic_locus(&monkey_saddle(), 40, 0.3).unwrap();
    assert_eq!(r.umbilics.len(), 1, "{r:?}");
    let u = &r.umbilics[0];
    assert!(u.point[0].hypot(u.point[1]) < 1e-8);
    assert_eq!(u.index, -0.5);
    assert!(u.snap_distance < 1e-6);
}

#[test]
fn conormal_is_principal_on_capillary_caps() {
    let sf = SpaceForm::euclidean();
    for patch in [cap_in_ball(sf, 1.0, 1.0).unwrap(), capillary_cap(sf, 1.0, 0.7, PI / 3.0).unwrap()] {
        let mesh = mesh_patch(&patch, 12).unwrap();
        assert!(boundary_principal_direction_check(&mesh) < 1e-8);
    }
    let bumpy = mesh_patch(&bumpy_sphere(0.2, 0.8).unwrap(), 12).unwrap();
    assert!(boundary_principal_direction_check(&bumpy) > 1e-2);
}

#[test]
fn rotation_functions_vanish_on_rotational_surfaces() {
    for c in [0.0, 1.0, -1.0] {
        let (mesh, _) = ball_setup(c, 0.8, 10);
        let kind = RotationKind::Ball { axis: pivot_axis(&mesh) };
        let f = rotation_test_function(&mesh, SpaceForm::new(c), kind).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-10), "c = {c}");
        let g = rotation_test_function(&mesh, SpaceForm::new(c), tilted(&mesh)).unwrap();
        assert!(g.iter().any(|v| v.abs() > 1e-2));
    }
    let sf = SpaceForm::euclidean();
    let (patch, _) = rotational_h2_profile(sf, 1.0, ProfileSeed { radius: 0.8, angle: 0.2 }, [-0.3, 0.3]).unwrap();
    let mesh = mesh_patch(&patch, 12).unwrap();
    let f = rotation_test_function(&mesh, sf, RotationKind::Slab { center: [0.0, 0.0] }).unwrap();
    assert!(f.iter().all(|v| v.abs() < 1e-10));
    let off = rotation_test_function(&mesh, sf, RotationKind::Slab { center: [0.1, 0.0] }).unwrap();
    assert!(off.iter().any(|v| v.abs() > 1e-3));

    let (h3, _) = ball_setup(-1.0, 0.8, 4);
    let err = rotation_test_function(&h3, SpaceForm::new(-1.0), RotationKind::Slab { center: [0.0, 0.0] });
    assert!(matches!(err, Err(Error::InvalidArgument(_))));
}

#[test]
fn killing_jacobi_fields_solve_the_index_form_equation() {
    // the Killing field of a rotation fixing the ball preserves H₂, so
    // L₁f + 2H₁(H₂ + c)f = 0; the variant 2(H₁H₂ + c) agrees only when H₁ = 1
    for (c, r) in [(0.0, 1.0), (1.0, 0.6), (-1.0, 0.8), (-1.0, 2.0)] {
        let sf = SpaceForm::new(c);
        let patch = cap_in_ball(sf, 1.0, r).unwrap();
        let mesh = mesh_patch(&patch, 4).unwrap();
        let kind = tilted(&mesh);
        let s = patch.domain().scale();
        let h1 = mesh.jets[0].h1;
        for p in [[0.1 * s, 0.2 * s], [-0.5 * s, 0.3 * s]] {
            let [index, alternative] = strong_pde_residual(&patch, kind, p).unwrap();
            assert!(index.abs() < 1e-9, "c={c}: {index}");
            if c != 0.0 && (h1 - 1.0).abs() > 1e-2 {
                assert!(alternative.abs() > 1e-4, "c={c}: {alternative}");
            } else if c == 0.0 {
                assert_eq!(index, alternative);
            }
        }
        // the wedge forms agree with the Killing field up to sign
        let j = &mesh.jets[mesh.vertex_count() / 2];
        let wedge = rotation_value(sf, kind, &j.position, &j.normal);
        let RotationKind::Ball { axis } = kind else { unreachable!() };
        let n = axis[0].hypot(axis[1]).hypot(axis[2]);
        let x = [j.position[0], j.position[1], j.position[2]];
        let y = [
            (axis[1] * x[2] - axis[2] * x[1]) / n,
            (axis[2] * x[0] - axis[0] * x[2]) / n,
            (axis[0] * x[1] - axis[1] * x[0]) / n,
        ];
        let killing = y[0] * j.normal[0] + y[1] * j.normal[1] + y[2] * j.normal[2];
        assert!((wedge.abs() - killing.abs()).abs() < 1e-12);
    }
}

#[test]
fn discrete_test_function_residuals() {
    let (mesh, ops) = ball_setup(0.0, 1.0, 8);
    let zero = test_function_pde_residual(&mesh, &ops, &vec![0.0; ops.dim()]).unwrap();
    assert_eq!((zero.interior, zero.interior_alternative, zero.boundary), (0.0, 0.0, 0.0));

    let mut prev = f64::INFINITY;
    for res in [8, 16, 32] {
        let (mesh, ops) = ball_setup(0.0, 1.0, res);
        let f = rotation_test_function(&mesh, SpaceForm::euclidean(), tilted(&mesh)).unwrap();
        let r = test_function_pde_residual(&mesh, &ops, &f).unwrap();
        assert!(r.interior < 0.6 * prev, "res {res}: {r:?} after {prev}");
        assert_eq!(r.interior, r.interior_alternative);
        prev = r.interior;
        if res == 32 {
            assert!(r.interior < 1e-2 && r.boundary < 1e-2, "{r:?}");
        }
    }
    let (mesh, ops) = ball_setup(0.0, 1.0, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise: Vec<f64> = (0..ops.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let bad = test_function_pde_residual(&mesh, &ops, &noise).unwrap();
    assert!(bad.interior > 0.1 && bad.boundary > 1.0, "{bad:?}");
}

#[test]
fn hyperbolic_residuals_separate_the_two_potentials() {
    let (mesh, ops) = ball_setup(-1.0, 0.8, 24);
    let f = rotation_test_function(&mesh, SpaceForm::new(-1.0), tilted(&mesh)).unwrap();
    let r = test_function_pde_residual(&mesh, &ops, &f).unwrap();
    assert!(r.interior < 1e-2 && r.boundary < 1e-2, "{r:?}");
    assert!(r.interior_alternative > 10.0 * r.interior, "{r:?}");
}

#[test]
fn disk_neumann_mode_has_two_nodal_domains() {
    let sf = SpaceForm::euclidean();
    let mesh = mesh_patch(&flat_disk(1.0), 16).unwrap();
    let mut cfg = AssemblyConfig::free_boundary(SupportGeometry::None);
    cfg.tensor = TensorChoice::Identity;
    cfg.potential_scale = 0.0;
    let ops = assemble(&mesh, sf, &cfg).unwrap();
    let mode = solve_spectrum(&ops, 1, true).unwrap();
    let f = &mode.eigenfunctions[0];
    let g = nodal_graph(&mesh, f, 1e-9).unwrap();
    assert_eq!(g.domain_count(), 2);
    assert_eq!(g.boundary_sign_changes, vec![2]);
    assert_eq!(g.polylines.len(), 1);
    assert!(!g.polylines[0].closed && g.branch_points.is_empty() && g.interior_endpoints.is_empty());
    // the nodal line is a diameter: its ends are antipodal on the unit circle
    let pts = &g.polylines[0].points;
    let (a, b) = (pts[0].param, pts[pts.len() - 1].param);
    assert!((a[0] + b[0]).hypot(a[1] + b[1]) < 0.1, "{a:?} {b:?}");
    let mut csv = Vec::new();
    g.write_polylines_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("polyline,u,v,"));
}

#[test]
fn nodal_domains_of_a_quadrupole() {
    let mesh = mesh_patch(&cap_in_ball(SpaceForm::euclidean(), 1.0, 1.0).unwrap(), 16).unwrap();
    // x² − y² restricted to the cap; shifted off the mesh symmetry lines
    let f: Vec<f64> = mesh
        .positions
        .iter()
        .map(|p| {
            let (s, c) = 0.3f64.sin_cos();
            let (x, y) = (c * p[0] + s * p[1], -s * p[0] + c * p[1]);
            x * x - y * y
        })
        .collect();
    let g = nodal_graph(&mesh, &f, default_zero_tolerance(&mesh)).unwrap();
    assert_eq!(g.domain_count(), 4);
    assert_eq!(g.boundary_sign_changes, vec![4]);
    assert_eq!(g.branch_points.len(), 1);
    assert_eq!(g.branch_points[0].branches, 4);

    let positive = vec![1.0; mesh.vertex_count()];
    let g = nodal_graph(&mesh, &positive, 1e-9).unwrap();
    assert!(g.domain_count() == 1 && g.polylines.is_empty());
    let zero = vec![1e-12; mesh.vertex_count()];
    assert!(matches!(nodal_graph(&mesh, &zero, 1e-9), Err(Error::IdenticallyZero { .. })));
}

#[test]
fn balanced_cutoff_of_the_tilted_jacobi_field() {
    let mut last = f64::INFINITY;
    for res in [16, 32] {
        let (mesh, ops) = ball_setup(0.0, 1.0, res);
        let f = rotation_test_function(&mesh, SpaceForm::euclidean(), tilted(&mesh)).unwrap();
        let g = nodal_graph(&mesh, &f, default_zero_tolerance(&mesh)).unwrap();
        assert_eq!(g.domain_count(), 2);
        let cut = balanced_cutoff(&ops, &g, &f, [0, 1]).unwrap();
        assert!((cut.alpha - 1.0).abs() < 1e-2, "{}", cut.alpha);
        assert!(cut.integral.abs() <= 1e-10 * cut.absolute_integral);
        assert!(cut.index_form.abs() < last);
        last = cut.index_form.abs();
        for v in 0..mesh.vertex_count() {
            if g.vertex_domain[v].is_none() {
                assert_eq!(cut.values[v], 0.0);
            }
        }
        assert!(balanced_cutoff(&ops, &g, &f, [1, 1]).is_err());
    }
    assert!(last < 1e-2, "{last}");
}

#[test]
fn gauss_bonnet_single_regions() {
    let disk = mesh_patch(&flat_disk(1.0), 32).unwrap();
    let a = gauss_bonnet_audit(&disk, None).unwrap();
    assert!(a.regions[0].residual.abs() < 1e-10 && a.smooth_residual.abs() < 1e-3, "{a:?}");
    assert!(a.total_curvature.abs() < 1e-14);

    let cap = mesh_patch(&cap_in_ball(SpaceForm::euclidean(), 1.0, 1.0).unwrap(), 32).unwrap();
    let a = gauss_bonnet_audit(&cap, None).unwrap();
    let r = &a.regions[0];
    assert_eq!((r.euler_characteristic, r.boundary_loops), (1, 1));
    assert!(r.external_angles.is_empty());
    assert!(r.residual.abs() < 1e-3 && a.smooth_residual.abs() < 1e-3, "{a:?}");
    assert!(a.global_residual.abs() < 1e-3);
    // exact total curvature of the cap with half-angle π/4
    assert!((a.total_curvature - 2.0 * PI * (1.0 - 0.5f64.sqrt())).abs() < 1e-3);
}

#[test]
fn gauss_bonnet_on_a_bisected_cap() {
    let (mesh, _) = ball_setup(0.0, 1.0, 32);
    let f = rotation_test_function(&mesh, SpaceForm::euclidean(), tilted(&mesh)).unwrap();
    let g = nodal_graph(&mesh, &f, default_zero_tolerance(&mesh)).unwrap();
    let a = gauss_bonnet_audit(&mesh, Some((&g, &f))).unwrap();
    assert_eq!(a.regions.len(), 2);
    for r in &a.regions {
        assert_eq!(r.euler_characteristic, 1);
        assert_eq!(r.external_angles.len(), 2, "{r:?}");
        for t in &r.external_angles {
            assert!((t - FRAC_PI_2).abs() < 0.05, "{t}");
        }
        assert!(r.residual.abs() < 1e-2, "{r:?}");
    }
    assert!(a.global_residual.abs() < 1e-2, "{a:?}");
}

#[test]
fn rigidity_hypotheses() {
    let (mesh, _) = ball_setup(0.0, 1.0, 8);
    assert!(theorem2_hypothesis_check(&mesh, SpaceForm::euclidean(), 1.0).passes);
    let gi = genus_inequality(&mesh, SpaceForm::euclidean(), 1.0);
    assert!(gi.holds && (gi.boundary_length - 2.0 * PI * 0.5f64.sqrt()).abs() < 1e-2);

    let sf = SpaceForm::new(-1.0);
    let (mesh, _) = ball_setup(-1.0, 0.8, 16);
    let h = theorem2_hypothesis_check(&mesh, sf, 1.0);
    let threshold = 1f64.cosh() / 1f64.sinh();
    assert!((h.threshold.unwrap() - threshold).abs() < 1e-12);
    assert_eq!(h.passes, h.ratio.unwrap() > threshold);
    // a cap that shrinks toward the boundary sphere has A/ℓ → 0
    let (thin, _) = ball_setup(-1.0, 0.05, 16);
    let t = theorem2_hypothesis_check(&thin, sf, 1.0);
    assert!(t.ratio.unwrap() < 0.05 && !t.passes);

    let (sphere_cap, _) = ball_setup(1.0, 0.6, 8);
    let s = theorem2_hypothesis_check(&sphere_cap, SpaceForm::new(1.0), 1.0);
    assert!(s.passes && s.max_distance.unwrap() <= 1.0 + 1e-9);
}
