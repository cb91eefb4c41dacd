//! Cross-checks of the surface geometry against closed forms.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use super::catalog::*;
use super::*;
use crate::spaceform::{cn, sn};

/// Gaussian and mean curvature of the ellipsoid `Σ xᵢ²/aᵢ² = 1` at `x`.
fn ellipsoid_curvatures(axes: [f64; 3], x: &Ambient) -> (f64, f64) {
    let [a, b, c] = axes;
    let q: f64 = (0..3).map(|i| x[i] * x[i] / axes[i].powi(4)).sum();
    let k = 1.0 / ((a * b * c).powi(2) * q * q);
    let r2 = x.xyz().norm_squared();
    let h = (a * a + b * b + c * c - r2).abs() / (2.0 * (a * b * c).powi(2) * q.powf(1.5));
    (k, h)
}

#[test]
fn ellipsoid_curvatures_match_closed_form() {
    let axes = [2.0, 1.5, 1.0];
    for patch in ellipsoid(axes[0], axes[1], axes[2]).unwrap() {
        for p in patch.sample_points(9) {
            let j = patch.evaluate_jet(p).unwrap();
            let (k, h) = ellipsoid_curvatures(axes, &j.position);
            assert!((j.h2 - k).abs() < 1e-10 * k.max(1.0));
            assert!((j.h1 - h).abs() < 1e-10);
            assert!(j.kappa1 >= j.kappa2);
            let [a, b, c] = verify_newton_identities(&j);
            assert!(a < 1e-12 && b < 1e-12 && c < 1e-12);
            // η is unit and normal
            assert!((j.normal.norm() - 1.0).abs() < 1e-12);
            assert!(j.normal.dot(&j.tangent_u).abs() < 1e-12);
        }
    }
}

#[test]
fn newton_tensor_eigenvalues() {
    let [up, _] = ellipsoid(2.0, 1.5, 1.0).unwrap();
    let j = up.evaluate_jet([0.3, -0.2]).unwrap();
    let eig = j.newton.symmetric_eigenvalues();
    let (mut lo, mut hi) = (eig[0].min(eig[1]), eig[0].max(eig[1]));
    let expected = [2.0 * j.h1 - j.kappa1, 2.0 * j.h1 - j.kappa2];
    assert!((lo - expected[0]).abs() < 1e-10);
    assert!((hi - expected[1]).abs() < 1e-10);
    std::mem::swap(&mut lo, &mut hi);
    // self-adjointness of the shape operator
    let ga = j.metric * j.shape;
    assert!((ga - ga.transpose()).norm() < 1e-10);
}

#[test]
fn round_sphere_and_plane() {
    let sf = SpaceForm::euclidean();
    let sphere = sphere_cap(sf, 0.0, 2.0, 2.0, "sphere").unwrap();
    let j = sphere.evaluate_jet([0.1, 0.2]).unwrap();
    assert!((j.kappa1 - 0.5).abs() < 1e-12 && (j.kappa2 - 0.5).abs() < 1e-12);
    assert!((j.newton - nalgebra::Matrix2::identity() * 0.5).norm() < 1e-12);
    let plane = flat_disk(1.0);
    let j = plane.evaluate_jet([0.3, 0.1]).unwrap();
    assert_eq!(j.h2, 0.0);
    assert_eq!(j.newton.norm(), 0.0);
}

#[test]
fn gauss_equation_in_all_models() {
    let [up, _] = ellipsoid(0.4, 0.3, 0.2).unwrap();
    for &c in &[-1.0, 0.0, 1.0] {
        let sf = SpaceForm::new(c);
        let p = lifted(sf, &up);
        let cap = cap_in_ball(sf, 1.0, 0.8).unwrap();
        for patch in [&p, &cap] {
            for q in patch.sample_points(7) {
                let gj = patch.geometry_jets(q[0], q[1]).unwrap();
                let k = gj.intrinsic_curvature();
                let h2 = gj.h2_jet().value();
                assert!((k - h2 - c).abs() < 1e-8, "c={c} {}: {k} vs {}", patch.label(), h2 + c);
            }
        }
    }
}

#[test]
fn newton_operator_identities_hold() {
    let [up, _] = ellipsoid(0.4, 0.3, 0.2).unwrap();
    for &c in &[-1.0, 0.0, 1.0] {
        let sf = SpaceForm::new(c);
        for patch in [lifted(sf, &up), cap_in_ball(sf, 1.0, 0.8).unwrap()] {
            for q in patch.sample_points(7) {
                let r = patch.geometry_jets(q[0], q[1]).unwrap().newton_residuals();
                assert!(r[0] < 1e-9 && r[1] < 1e-9, "c={c} {}: {r:?}", patch.label());
            }
        }
    }
}

#[test]
fn orientation_is_chosen_and_idempotent() {
    let sf = SpaceForm::euclidean();
    let sphere = sphere_cap(sf, 0.0, 1.0, 1.0, "s").unwrap();
    let outward = sphere.clone().flipped();
    let j = outward.evaluate_jet([0.0, 0.0]).unwrap();
    assert!((j.kappa1 + 1.0).abs() < 1e-12);
    let fixed = orient_for_positivity(&outward).unwrap();
    assert_eq!(fixed.orientation(), sphere.orientation());
    assert_eq!(orient_for_positivity(&fixed).unwrap().orientation(), fixed.orientation());
    let saddle = graph(PolynomialGraph { terms: vec![(2, 0, 1.0), (0, 2, -1.0)] }, Domain::disk(1.0), "saddle");
    assert!(matches!(orient_for_positivity(&saddle), Err(Error::NoPositiveOrientation { .. })));
}

#[test]
fn boundary_geodesic_curvature() {
    let disk = flat_disk(2.0);
    let b = disk.evaluate_boundary_jet([0.0, 2.0]).unwrap();
    assert!((b.geodesic_curvature - 0.5).abs() < 1e-12);
    assert!((b.conormal - Ambient::new(0.0, 1.0, 0.0, 0.0)).norm() < 1e-12);

    let hemi = hemisphere(1.0).unwrap();
    let b = hemi.evaluate_boundary_jet([1.0, 0.0]).unwrap();
    assert!(b.geodesic_curvature.abs() < 1e-12);

    for &(c, big_r, r) in &[(0.0, 1.0, 1.0), (-1.0, 1.0, 0.8), (1.0, 1.0, 0.5)] {
        let sf = SpaceForm::new(c);
        let cap = cap_in_ball(sf, big_r, r).unwrap();
        let Domain::Disk { radius, .. } = *cap.domain() else { unreachable!() };
        for k in 0..8 {
            let t = k as f64 * PI / 4.0;
            let b = cap.evaluate_boundary_jet([radius * t.cos(), radius * t.sin()]).unwrap();
            let expected = cn(c, big_r) / sn(c, big_r);
            assert!((b.geodesic_curvature - expected).abs() < 1e-8);
            assert!(b.ii_nu_t.abs() < 1e-10);
            // free boundary: ν is the outward normal of the ball
            let bar_eta = sf.sphere_outward_normal(&sf.origin(), &b.position);
            assert!((b.conormal - bar_eta).norm() < 1e-8);
            assert!((sf.distance_from_origin(&b.position) - big_r).abs() < 1e-10);
        }
    }
}

#[test]
fn capillary_cap_has_the_requested_angle() {
    for &c in &[-1.0, 0.0, 1.0] {
        let sf = SpaceForm::new(c);
        let theta = 1.1;
        let cap = capillary_cap(sf, 1.0, 0.7, theta).unwrap();
        let Domain::Disk { radius, .. } = *cap.domain() else { unreachable!() };
        let b = cap.evaluate_boundary_jet([0.0, radius]).unwrap();
        let bar_eta = sf.sphere_outward_normal(&sf.origin(), &b.position);
        let angle = sf.inner(&b.conormal, &bar_eta).atan2(sf.inner(&b.normal, &bar_eta));
        assert!((angle - theta).abs() < 1e-10, "c={c}: {angle}");
        assert!(b.ii_nu_t.abs() < 1e-10);
    }
}

#[test]
fn finite_difference_fallback_matches_analytic_jets() {
    let sf = SpaceForm::euclidean();
    let exact = sphere_cap(sf, 0.0, 1.0, FRAC_PI_2, "exact").unwrap();
    let e2 = exact.clone();
    let fd = FiniteDifferenceMap::new(move |u, v| e2.position(u, v), 1.0);
    let approx = ParametricPatch::new(sf, *exact.domain(), Arc::new(fd), "fd").with_orientation(exact.orientation());
    for p in exact.sample_points(5) {
        let a = exact.evaluate_jet(p).unwrap();
        let b = approx.evaluate_jet(p).unwrap();
        assert!((a.h2 - b.h2).abs() < 1e-7, "{} {}", a.h2, b.h2);
        assert!((a.h1 - b.h1).abs() < 1e-7);
    }
}

#[test]
fn rotational_surface_has_constant_h2() {
    let (patch, _) = rotational::rotational_h2_profile(
        SpaceForm::euclidean(),
        1.0,
        rotational::ProfileSeed { radius: 0.8, angle: 0.0 },
        [-1.2, 1.2],
    )
    .unwrap();
    for p in patch.sample_points(11) {
        let gj = patch.geometry_jets(p[0], p[1]).unwrap();
        let j = gj.surface_jet();
        assert!((j.kappa1 * j.kappa2 - 1.0).abs() < 1e-6);
        assert!(j.umbilicity_defect > 1e-3 || (p[0].hypot(p[1]) - 2.2).abs() < 0.2);
        let r = gj.newton_residuals();
        assert!(r[0] < 1e-6 && r[1] < 1e-5, "{r:?}");
    }
}

#[test]
fn bumpy_boundary_is_not_principal() {
    let patch = bumpy_sphere(0.3, 0.6).unwrap();
    let worst = (0..32)
        .map(|k| {
            let t = k as f64 * PI / 16.0;
            patch.evaluate_boundary_jet([0.6 * t.cos(), 0.6 * t.sin()]).unwrap().ii_nu_t.abs()
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-2, "{worst}");
}
