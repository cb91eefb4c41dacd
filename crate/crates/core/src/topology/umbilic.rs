use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::surface::{Domain, ParametricPatch};

/// Newton stops once the traceless part is this small relative to the curvature scale.
const NEWTON_TOLERANCE: f64 = 1e-11;
/// A circuit whose defect dips below this (relative) is touching another umbilic.
const ISOLATION_FLOOR: f64 = 1e-6;
const CIRCUIT_STEPS: usize = 96;

#[derive(Clone, Debug, Serialize)]
pub struct Umbilic {
    pub point: [f64; 2],
    /// Index snapped to a multiple of 1/2.
    pub index: f64,
    /// Winding of the doubled line-field angle over `4π`, before snapping.
    pub raw_index: f64,
    pub snap_distance: f64,
    /// `κ₁ − κ₂` at `point`.
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UmbilicReport {
    pub patches: Vec<String>,
    pub umbilics: Vec<Umbilic>,
    /// Of the surface the report is meant to cover.
    pub euler_characteristic: i64,
    pub sum_of_indices: f64,
    pub totally_umbilical: bool,
    pub max_snap_distance: f64,
}

impl UmbilicReport {
    /// Pools reports from patches that tile one surface of Euler characteristic `chi`.
    pub fn merge(reports: &[UmbilicReport], chi: i64) -> UmbilicReport {
        let umbilics: Vec<Umbilic> = reports.iter().flat_map(|r| r.umbilics.iter().cloned()).collect();
        UmbilicReport {
            patches: reports.iter().flat_map(|r| r.patches.iter().cloned()).collect(),
            sum_of_indices: umbilics.iter().map(|u| u.index).sum(),
            max_snap_distance: umbilics.iter().fold(0.0, |m, u| m.max(u.snap_distance)),
            totally_umbilical: reports.iter().all(|r| r.totally_umbilical),
            umbilics,
            euler_characteristic: chi,
        }
    }

    /// Whether the pooled indices add up to the Euler characteristic.
    pub fn satisfies_poincare_hopf(&self) -> bool {
        (self.sum_of_indices - self.euler_characteristic as f64).abs() < 1e-12
    }
}

fn domain_euler_characteristic(d: &Domain) -> i64 {
    match d {
        Domain::Annulus { .. } => 0,
        _ => 1,
    }
}

/// `(h, b)` with the shape operator in the orthonormal frame equal to
/// `H₁ I + [[h, b], [b, −h]]`, and the curvature size `|κ₁| + |κ₂|`.
fn traceless(patch: &ParametricPatch, p: [f64; 2]) -> Result<([f64; 2], f64)> {
    let j = patch.evaluate_jet(p)?;
    let a = j.shape_orthonormal;
    Ok(([0.5 * (a[(0, 0)] - a[(1, 1)]), a[(0, 1)]], j.kappa1.abs() + j.kappa2.abs()))
}

/// Isolated umbilics of a patch, found as minima of `κ₁ − κ₂` on a
/// `grid × grid` lattice, refined by Newton on the traceless shape operator,
/// and indexed by the winding of the principal line field.
///
/// `threshold` is relative to the largest `(|κ₁| + |κ₂|)/2` seen on the grid;
/// only lattice minima below it are refined.
pub fn umbilic_locus(patch: &ParametricPatch, grid: usize, threshold: f64) -> Result<UmbilicReport> {
    if grid < 4 || !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("umbilic search with grid {grid} and threshold {threshold}")));
    }
    let domain = *patch.domain();
    let (lo, hi) = bounding_box(&domain);
    let step = [(hi[0] - lo[0]) / grid as f64, (hi[1] - lo[1]) / grid as f64];
    let spacing = step[0].max(step[1]);
    let margin = 1.5 * spacing;
    let inside = |p: [f64; 2]| interior_distance(&domain, p) > margin;

    let mut values = vec![vec![f64::NAN; grid + 1]; grid + 1];
    let mut scale: f64 = 0.0;
    let mut max_defect: f64 = 0.0;
    for (i, row) in values.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            let p = [lo[0] + i as f64 * step[0], lo[1] + k as f64 * step[1]];
            if !domain.contains(p) || domain.on_boundary(p) {
                continue;
            }
            let ([h, b], size) = traceless(patch, p)?;
            scale = scale.max(0.5 * size);
            let d = 2.0 * h.hypot(b);
            max_defect = max_defect.max(d);
            if inside(p) {
                *cell = d;
            }
        }
    }
    let mut report = UmbilicReport {
        patches: vec![patch.label().to_string()],
        umbilics: Vec::new(),
        euler_characteristic: domain_euler_characteristic(&domain),
        sum_of_indices: 0.0,
        totally_umbilical: false,
        max_snap_distance: 0.0,
    };
    if max_defect <= 1e-9 * scale.max(1e-300) || scale == 0.0 {
        report.totally_umbilical = true;
        return Ok(report);
    }

    let mut found: Vec<Umbilic> = Vec::new();
    for i in 1..grid {
        for k in 1..grid {
            let d = values[i][k];
            if !(d < threshold * scale) {
                continue;
            }
            let neighbours = (-1i64..=1).flat_map(|a| (-1i64..=1).map(move |b| (a, b)));
            let is_min = neighbours.filter(|&(a, b)| (a, b) != (0, 0)).all(|(a, b)| {
                let n = values[(i as i64 + a) as usize][(k as i64 + b) as usize];
                n.is_nan() || d <= n
            });
            if !is_min {
                continue;
            }
            let start = [lo[0] + i as f64 * step[0], lo[1] + k as f64 * step[1]];
            let Some(point) = newton(patch, start, scale, spacing)? else {
                // a lattice minimum with no zero nearby: either a near miss or a curve of umbilics
                let ([h, b], _) = traceless(patch, start)?;
                if 2.0 * h.hypot(b) < ISOLATION_FLOOR * scale {
                    return Err(Error::DegenerateLocus { u: start[0], v: start[1] });
                }
                continue;
            };
            if !inside(point) || found.iter().any(|u| dist(u.point, point) < spacing) {
                continue;
            }
            let raw = winding_index(patch, point, 0.35 * spacing, scale)?;
            let snapped = (2.0 * raw).round() / 2.0;
            let ([h, b], _) = traceless(patch, point)?;
            found.push(Umbilic {
                point,
                index: snapped,
                raw_index: raw,
                snap_distance: (raw - snapped).abs(),
                defect: 2.0 * h.hypot(b),
            });
        }
    }
    found.sort_by(|a, b| a.point[0].total_cmp(&b.point[0]).then(a.point[1].total_cmp(&b.point[1])));
    report.sum_of_indices = found.iter().map(|u| u.index).sum();
    report.max_snap_distance = found.iter().fold(0.0, |m, u| m.max(u.snap_distance));
    report.umbilics = found;
    Ok(report)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn bounding_box(d: &Domain) -> ([f64; 2], [f64; 2]) {
    match *d {
        Domain::Disk { center, radius } | Domain::Annulus { center, outer: radius, .. } => {
            ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
        }
        Domain::Rectangle { u, v } => ([u[0], v[0]], [u[1], v[1]]),
    }
}

/// Distance from `p` to the boundary of the domain (negative outside).
fn interior_distance(d: &Domain, p: [f64; 2]) -> f64 {
    match *d {
        Domain::Disk { center, radius } => radius - dist(center, p),
        Domain::Annulus { center, inner, outer } => {
            let r = dist(center, p);
            (outer - r).min(r - inner)
        }
        Domain::Rectangle { u, v } => (p[0] - u[0]).min(u[1] - p[0]).min(p[1] - v[0]).min(v[1] - p[1]),
    }
}

/// Newton on `(h, b) = 0` with a central-difference Jacobian, confined to a
/// few lattice cells around the start.
fn newton(patch: &ParametricPatch, start: [f64; 2], scale: f64, spacing: f64) -> Result<Option<[f64; 2]>> {
    let mut p = start;
    let fd = 1e-6 * spacing;
    for _ in 0..40 {
        let (f, _) = traceless(patch, p)?;
        if f[0].hypot(f[1]) < NEWTON_TOLERANCE * scale {
            return Ok(Some(p));
        }
        let mut jac = [[0.0; 2]; 2];
        for axis in 0..2 {
            let mut a = p;
            let mut b = p;
            a[axis] += fd;
            b[axis] -= fd;
            let (fa, _) = traceless(patch, a)?;
            let (fb, _) = traceless(patch, b)?;
            for r in 0..2 {
                jac[r][axis] = (fa[r] - fb[r]) / (2.0 * fd);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-14 * scale * scale / (spacing * spacing) {
            return Ok(None);
        }
        let dx = [(jac[1][1] * f[0] - jac[0][1] * f[1]) / det, (jac[0][0] * f[1] - jac[1][0] * f[0]) / det];
        p = [p[0] - dx[0], p[1] - dx[1]];
        if dist(p, start) > 3.0 * spacing || interior_distance(patch.domain(), p) < spacing {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Winding of the doubled principal angle `atan2(b, h)` around a circle,
/// divided by `4π`. Steps are halved wherever the angle jumps by more than π/4.
fn winding_index(patch: &ParametricPatch, center: [f64; 2], radius: f64, scale: f64) -> Result<f64> {
    let at = |s: f64| -> Result<f64> {
        let p = [center[0] + radius * s.cos(), center[1] + radius * s.sin()];
        let ([h, b], _) = traceless(patch, p)?;
        if 2.0 * h.hypot(b) < ISOLATION_FLOOR * scale {
            return Err(Error::DegenerateLocus { u: p[0], v: p[1] });
        }
        Ok(b.atan2(h))
    };
    let mut total = 0.0;
    let mut s0 = 0.0;
    let mut a0 = at(0.0)?;
    let base = TAU / CIRCUIT_STEPS as f64;
    while s0 < TAU - 1e-15 {
        let mut ds = base.min(TAU - s0);
        loop {
            let a1 = at(s0 + ds)?;
            let mut delta = a1 - a0;
            delta -= TAU * (delta / TAU).round();
            if delta.abs() <= PI / 4.0 || ds < base * 1e-6 {
                total += delta;
                s0 += ds;
                a0 = a1;
                break;
            }
            ds *= 0.5;
        }
    }
    Ok(total / (2.0 * TAU))
}
