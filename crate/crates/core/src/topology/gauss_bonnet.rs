use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use super::nodal::{crossing_weight, NodalGraph, NodalSite};
use crate::discretize::SurfaceMesh;
use crate::error::{Error, Result};
use crate::spaceform::{cn, sn, SpaceForm};

/// Turning above this at a single polygon node marks a corner.
const CORNER_TURN: f64 = 0.3;

#[derive(Clone, Debug, Serialize)]
pub struct RegionAudit {
    /// Nodal domain id, `None` for the whole surface.
    pub domain: Option<usize>,
    pub euler_characteristic: i64,
    pub boundary_loops: usize,
    /// `∫ K dμ` over the region.
    pub curvature_integral: f64,
    /// `∮ κ_g ds` along the smooth parts of the region boundary.
    pub geodesic_curvature_integral: f64,
    /// Turning at each corner of the region boundary.
    pub external_angles: Vec<f64>,
    /// `∫K + ∮κ_g + Σθ − 2πχ`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussBonnetAudit {
    pub regions: Vec<RegionAudit>,
    /// `∫_Σ K dμ` over the whole mesh.
    pub total_curvature: f64,
    /// `Σᵢ (2πχᵢ − ∮κ_g − Σθ) − ∫_Σ K`.
    pub global_residual: f64,
    /// `∮ κ_g` on `∂Σ` from the boundary jets, trapezoid rule on chords.
    pub smooth_boundary_curvature: f64,
    /// `∫K + ∮κ_g − 2πχ(Σ)` with the jet value above.
    pub smooth_residual: f64,
}

/// Gauss–Bonnet on the whole mesh, or on each nodal domain of `partition`
/// when given together with the function it was computed from.
///
/// Regions are clipped against the piecewise-linear zero set, so their
/// boundaries are polygons in parameter space. Their geodesic curvature is the
/// turning at the nodes, measured in the induced metric, plus the curvature of
/// each straight parameter segment from the Christoffel symbols.
pub fn gauss_bonnet_audit(mesh: &SurfaceMesh, partition: Option<(&NodalGraph, &[f64])>) -> Result<GaussBonnetAudit> {
    let n = mesh.vertex_count();
    let c = mesh.patch.space_form().curvature();
    let density: Vec<f64> = mesh.jets.iter().map(|j| (j.h2 + c) * j.area_element).collect();
    let total_curvature: f64 = mesh
        .triangles
        .iter()
        .map(|t| param_area(t.map(|v| mesh.params[v])) * (density[t[0]] + density[t[1]] + density[t[2]]) / 3.0)
        .sum();
    let edge_length = mesh.edges().iter().map(|&(a, b)| dist(mesh.params[a], mesh.params[b])).fold(0.0f64, f64::max);

    let mut smooth_boundary_curvature = 0.0;
    for e in &mesh.boundary_edges {
        let k = |v: usize| mesh.boundary_jets[v].as_ref().map_or(0.0, |b| b.geodesic_curvature);
        smooth_boundary_curvature += 0.5 * mesh.chord(e[0], e[1]) * (k(e[0]) + k(e[1]));
    }
    let chi = mesh.euler_characteristic();
    let smooth_residual = total_curvature + smooth_boundary_curvature - TAU * chi as f64;

    let ones = vec![1.0; n];
    let regions: Vec<(Option<usize>, Vec<bool>, &[f64])> = match partition {
        None => vec![(None, vec![true; n], &ones[..])],
        Some((graph, f)) => {
            if f.len() != n || graph.vertex_domain.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.len() });
            }
            graph
                .domains
                .iter()
                .map(|d| (Some(d.id), graph.vertex_domain.iter().map(|&x| x == Some(d.id)).collect(), f))
                .collect()
        }
    };

    let mut audits = Vec::new();
    for (domain, inside, f) in regions {
        audits.push(region_audit(mesh, &density, edge_length, domain, &inside, f)?);
    }
    let global_residual = audits
        .iter()
        .map(|r| {
            TAU * r.euler_characteristic as f64 - r.geodesic_curvature_integral - r.external_angles.iter().sum::<f64>()
        })
        .sum::<f64>()
        - total_curvature;
    Ok(GaussBonnetAudit {
        regions: audits,
        total_curvature,
        global_residual,
        smooth_boundary_curvature,
        smooth_residual,
    })
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn param_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0])).abs()
}

fn region_audit(
    mesh: &SurfaceMesh,
    density: &[f64],
    edge_length: f64,
    domain: Option<usize>,
    inside: &[bool],
    f: &[f64],
) -> Result<RegionAudit> {
    let site_param = |s: NodalSite| -> ([f64; 2], f64) {
        match s {
            NodalSite::Vertex(v) => (mesh.params[v], density[v]),
            NodalSite::Edge(a, b) => {
                let w = crossing_weight(f[a], f[b]);
                let (pa, pb) = (mesh.params[a], mesh.params[b]);
                ([pa[0] + w * (pb[0] - pa[0]), pa[1] + w * (pb[1] - pa[1])], density[a] + w * (density[b] - density[a]))
            }
        }
    };

    // clip each triangle to the region; keep the directed boundary edges
    let mut curvature_integral = 0.0;
    let mut directed: BTreeMap<(NodalSite, NodalSite), i32> = BTreeMap::new();
    for t in &mesh.triangles {
        if !t.iter().any(|&v| inside[v]) {
            continue;
        }
        let mut poly = Vec::with_capacity(4);
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if inside[a] {
                poly.push(NodalSite::Vertex(a));
            }
            if inside[a] != inside[b] {
                poly.push(NodalSite::Edge(a.min(b), a.max(b)));
            }
        }
        let pts: Vec<([f64; 2], f64)> = poly.iter().map(|&s| site_param(s)).collect();
        for k in 1..pts.len().saturating_sub(1) {
            let tri = [pts[0].0, pts[k].0, pts[k + 1].0];
            curvature_integral += param_area(tri) * (pts[0].1 + pts[k].1 + pts[k + 1].1) / 3.0;
        }
        for k in 0..poly.len() {
            let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
            if let Some(count) = directed.get_mut(&(b, a)) {
                *count -= 1;
                if *count == 0 {
                    directed.remove(&(b, a));
                }
            } else {
                *directed.entry((a, b)).or_default() += 1;
            }
        }
    }

    let mut next: BTreeMap<NodalSite, NodalSite> = BTreeMap::new();
    for &(a, b) in directed.keys() {
        if next.insert(a, b).is_some() {
            return Err(Error::InvalidArgument("region boundary is not a union of simple loops".into()));
        }
    }
    let mut loops: Vec<Vec<[f64; 2]>> = Vec::new();
    while let Some((&start, _)) = next.iter().next() {
        let mut lp = Vec::new();
        let mut cur = start;
        while let Some(nx) = next.remove(&cur) {
            lp.push(site_param(cur).0);
            cur = nx;
        }
        if cur != start {
            return Err(Error::InvalidArgument("region boundary does not close up".into()));
        }
        // drop nodes that coincide with their predecessor
        let mut clean: Vec<[f64; 2]> = Vec::with_capacity(lp.len());
        for p in lp {
            if clean.last().is_none_or(|q| dist(*q, p) > 1e-9 * edge_length) {
                clean.push(p);
            }
        }
        while clean.len() > 1 && dist(clean[0], *clean.last().unwrap()) <= 1e-9 * edge_length {
            clean.pop();
        }
        if clean.len() >= 3 {
            loops.push(clean);
        }
    }

    let mut geodesic = 0.0;
    let mut external_angles = Vec::new();
    for lp in &loops {
        let (k, corners) = loop_curvature(mesh, lp, edge_length)?;
        geodesic += k;
        external_angles.extend(corners);
    }
    let chi = 2 - loops.len() as i64;
    let residual = curvature_integral + geodesic + external_angles.iter().sum::<f64>() - TAU * chi as f64;
    Ok(RegionAudit {
        domain,
        euler_characteristic: chi,
        boundary_loops: loops.len(),
        curvature_integral,
        geodesic_curvature_integral: geodesic,
        external_angles,
        residual,
    })
}

/// `ω(x, y)` and `⟨x, y⟩` for coordinate vectors at a parameter point.
fn metric_pair(mesh: &SurfaceMesh, p: [f64; 2], x: [f64; 2], y: [f64; 2]) -> Result<(f64, f64)> {
    let j = mesh.patch.evaluate_jet(p)?;
    let g = j.metric;
    let inner = x[0] * (g[(0, 0)] * y[0] + g[(0, 1)] * y[1]) + x[1] * (g[(1, 0)] * y[0] + g[(1, 1)] * y[1]);
    Ok((j.area_element * (x[0] * y[1] - x[1] * y[0]), inner))
}

/// Geodesic curvature integral of a closed parameter polygon (region on the
/// left) and the turning at its corners.
fn loop_curvature(mesh: &SurfaceMesh, lp: &[[f64; 2]], edge_length: f64) -> Result<(f64, Vec<f64>)> {
    let m = lp.len();
    let sub = |a: [f64; 2], b: [f64; 2]| [b[0] - a[0], b[1] - a[1]];
    let mut turning = Vec::with_capacity(m);
    let mut segments = 0.0;
    for k in 0..m {
        let (prev, here, next) = (lp[(k + m - 1) % m], lp[k], lp[(k + 1) % m]);
        let (w, d) = metric_pair(mesh, here, sub(prev, here), sub(here, next))?;
        turning.push(w.atan2(d));

        // a straight parameter segment has covariant acceleration Γ(d, d);
        // midpoint rule, or the ends when the chord leaves a curved domain
        let dir = sub(here, next);
        let mid = [0.5 * (here[0] + next[0]), 0.5 * (here[1] + next[1])];
        let nodes: &[([f64; 2], f64)] =
            if mesh.patch.domain().contains(mid) { &[(mid, 1.0)] } else { &[(here, 0.5), (next, 0.5)] };
        let mut ends = 0.0;
        for &(p, weight) in nodes {
            let gamma = mesh.patch.geometry_jets(p[0], p[1])?.christoffel();
            let mut acc = [0.0; 2];
            for (kk, a) in acc.iter_mut().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        *a += gamma[kk][i][j] * dir[i] * dir[j];
                    }
                }
            }
            let (w, _) = metric_pair(mesh, p, dir, acc)?;
            let (_, dd) = metric_pair(mesh, p, dir, dir)?;
            ends += weight * w / dd;
        }
        segments += ends;
    }

    // gather corners, merging nodes within half an edge of a sharp turn
    let mut consumed = vec![false; m];
    let mut corners = Vec::new();
    let mut order: Vec<usize> = (0..m).filter(|&k| turning[k].abs() > CORNER_TURN).collect();
    order.sort_by(|&a, &b| turning[b].abs().total_cmp(&turning[a].abs()));
    for k in order {
        if consumed[k] {
            continue;
        }
        consumed[k] = true;
        let mut angle = turning[k];
        for step in [1usize, m - 1] {
            let mut j = k;
            let mut walked = 0.0;
            loop {
                let nj = (j + step) % m;
                walked += dist(lp[j], lp[nj]);
                if consumed[nj] || walked > 0.5 * edge_length {
                    break;
                }
                consumed[nj] = true;
                angle += turning[nj];
                j = nj;
            }
        }
        corners.push(angle);
    }
    let smooth: f64 = (0..m).filter(|&k| !consumed[k]).map(|k| turning[k]).sum();
    debug_assert!(corners.iter().all(|a| a.abs() <= PI + 1e-9));
    Ok((smooth + segments, corners))
}

/// `2πχ > cA + (cn/sn)(R) ℓ`, the inequality that forces genus zero.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GenusInequality {
    pub two_pi_chi: f64,
    pub area: f64,
    pub boundary_length: f64,
    pub lower_bound: f64,
    pub holds: bool,
}

fn area_and_length(mesh: &SurfaceMesh) -> (f64, f64) {
    let area = mesh
        .triangles
        .iter()
        .map(|t| {
            let d = t.map(|v| mesh.jets[v].area_element);
            param_area(t.map(|v| mesh.params[v])) * (d[0] + d[1] + d[2]) / 3.0
        })
        .sum();
    let length = mesh.boundary_edges.iter().map(|e| mesh.chord(e[0], e[1])).sum();
    (area, length)
}

pub fn genus_inequality(mesh: &SurfaceMesh, sf: SpaceForm, ball_radius: f64) -> GenusInequality {
    let c = sf.curvature();
    let (area, boundary_length) = area_and_length(mesh);
    let two_pi_chi = TAU * mesh.euler_characteristic() as f64;
    let lower_bound = c * area + cn(c, ball_radius) / sn(c, ball_radius) * boundary_length;
    GenusInequality { two_pi_chi, area, boundary_length, lower_bound, holds: two_pi_chi > lower_bound }
}

/// Hypotheses of the rigidity theorem for a free-boundary surface in `B_R`:
/// none for `c = 0`, containment in a hemisphere for `c > 0`, and
/// `A/ℓ > −cn(R)/(c sn(R))` for `c < 0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HypothesisCheck {
    pub curvature: f64,
    pub ball_radius: f64,
    pub area: f64,
    pub boundary_length: f64,
    /// `A/ℓ`, reported for `c < 0`.
    pub ratio: Option<f64>,
    pub threshold: Option<f64>,
    /// Largest distance from the ball center, reported for `c > 0`.
    pub max_distance: Option<f64>,
    pub distance_limit: Option<f64>,
    pub passes: bool,
}

pub fn theorem2_hypothesis_check(mesh: &SurfaceMesh, sf: SpaceForm, ball_radius: f64) -> HypothesisCheck {
    let c = sf.curvature();
    let (area, boundary_length) = area_and_length(mesh);
    let mut out = HypothesisCheck {
        curvature: c,
        ball_radius,
        area,
        boundary_length,
        ratio: None,
        threshold: None,
        max_distance: None,
        distance_limit: None,
        passes: true,
    };
    if c > 0.0 {
        let far = mesh.positions.iter().map(|x| sf.distance_from_origin(x)).fold(0.0f64, f64::max);
        let limit = FRAC_PI_2 / c.sqrt();
        out.max_distance = Some(far);
        out.distance_limit = Some(limit);
        out.passes = far <= limit;
    } else if c < 0.0 {
        let ratio = area / boundary_length;
        let threshold = -cn(c, ball_radius) / (c * sn(c, ball_radius));
        out.ratio = Some(ratio);
        out.threshold = Some(threshold);
        out.passes = ratio > threshold;
    }
    out
}
