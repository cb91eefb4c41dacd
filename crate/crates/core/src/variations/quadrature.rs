//! Tensor-product rules on parameter domains and their boundaries.
//!
//! Disks and annuli use Gauss–Legendre in the radius and the trapezoid rule in
//! the angle, which is spectrally accurate for periodic integrands.

use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::surface::Domain;

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
    let half = 0.5 * (b - a);
    rule.as_node_weight_pairs().iter().map(|&(x, w)| (a + half * (x + 1.0), half * w)).collect()
}

/// Nodes and weights for `∫_D g du dv`.
pub fn domain_rule(domain: &Domain, n: usize) -> Vec<([f64; 2], f64)> {
    let polar = |center: [f64; 2], r0: f64, r1: f64| {
        let m = 2 * n;
        let mut out = Vec::with_capacity(n * m);
        for (r, wr) in gauss_legendre(n, r0, r1) {
            for k in 0..m {
                let a = TAU * k as f64 / m as f64;
                out.push(([center[0] + r * a.cos(), center[1] + r * a.sin()], wr * r * TAU / m as f64));
            }
        }
        out
    };
    match *domain {
        Domain::Disk { center, radius } => polar(center, 0.0, radius),
        Domain::Annulus { center, inner, outer } => polar(center, inner, outer),
        Domain::Rectangle { u, v } => {
            let gu = gauss_legendre(n, u[0], u[1]);
            let gv = gauss_legendre(n, v[0], v[1]);
            gu.iter().flat_map(|&(x, wx)| gv.iter().map(move |&(y, wy)| ([x, y], wx * wy))).collect()
        }
    }
}

/// Boundary nodes with weights in the parameter of [`Domain::boundary_at`]'s
/// velocity, so that `ds = |dφ(velocity)| · weight`.
pub fn boundary_rule(domain: &Domain, n: usize) -> Vec<([f64; 2], f64)> {
    let circle = |center: [f64; 2], r: f64| {
        let m = 4 * n;
        (0..m).map(move |k| {
            let a = TAU * (k as f64 + 0.5) / m as f64;
            ([center[0] + r * a.cos(), center[1] + r * a.sin()], TAU / m as f64)
        })
    };
    match *domain {
        Domain::Disk { center, radius } => circle(center, radius).collect(),
        Domain::Annulus { center, inner, outer } => circle(center, outer).chain(circle(center, inner)).collect(),
        Domain::Rectangle { u, v } => {
            let mut out = Vec::new();
            for (x, w) in gauss_legendre(n, u[0], u[1]) {
                out.push(([x, v[0]], w));
                out.push(([x, v[1]], w));
            }
            for (y, w) in gauss_legendre(n, v[0], v[1]) {
                out.push(([u[0], y], w));
                out.push(([u[1], y], w));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_known_values() {
        let gl = gauss_legendre(5, 0.0, 2.0);
        let s: f64 = gl.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-10);

        let disk = domain_rule(&Domain::disk(2.0), 12);
        let area: f64 = disk.iter().map(|p| p.1).sum();
        assert!((area - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let m: f64 = disk.iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((m - std::f64::consts::PI * 4.0).abs() < 1e-12);

        let ann = Domain::Annulus { center: [0.0, 0.0], inner: 1.0, outer: 2.0 };
        let a: f64 = domain_rule(&ann, 8).iter().map(|p| p.1).sum();
        assert!((a - 3.0 * std::f64::consts::PI).abs() < 1e-12);
        let len: f64 = boundary_rule(&ann, 8).iter().map(|p| p.1).sum();
        assert!((len - 2.0 * TAU).abs() < 1e-12);

        let rect = Domain::Rectangle { u: [0.0, 2.0], v: [-1.0, 1.0] };
        let r: f64 = domain_rule(&rect, 4).iter().map(|(p, w)| w * p[0] * p[1] * p[1]).sum();
        assert!((r - 4.0 / 3.0).abs() < 1e-12);
        let perim: f64 = boundary_rule(&rect, 4).iter().map(|p| p.1).sum();
        assert!((perim - 8.0).abs() < 1e-12);
    }
}
