use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spaceform::Ambient;
use crate::surface::{BoundaryJet, Domain, ParametricPatch, SurfaceJet};

/// Triangulated parametric patch with geometry sampled at the vertices.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub patch: ParametricPatch,
    pub resolution: usize,
    pub params: Vec<[f64; 2]>,
    pub positions: Vec<Ambient>,
    /// Counterclockwise in the parameter plane.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges with the surface on their left.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Component label of each boundary edge.
    pub boundary_labels: Vec<usize>,
    pub jets: Vec<SurfaceJet>,
    pub boundary_jets: Vec<Option<BoundaryJet>>,
}

impl SurfaceMesh {
    pub fn vertex_count(&self) -> usize {
        self.params.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_jets[v].is_some()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.is_boundary(v)).collect()
    }

    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut e = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                e.insert((a.min(b), a.max(b)));
            }
        }
        e
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    pub fn boundary_component_count(&self) -> usize {
        self.boundary_labels.iter().collect::<BTreeSet<_>>().len()
    }

    /// Model-metric distance between two vertices (chord length).
    pub fn chord(&self, a: usize, b: usize) -> f64 {
        let sf = self.patch.space_form();
        let d = self.positions[a] - self.positions[b];
        sf.norm(&d)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges().iter().map(|&(a, b)| self.chord(a, b)).fold(0.0, f64::max)
    }

    /// Area of a triangle measured with the ambient chord lengths.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (x, y, z) = (self.chord(a, b), self.chord(b, c), self.chord(c, a));
        let s = 0.5 * (x + y + z);
        (s * (s - x) * (s - y) * (s - z)).max(0.0).sqrt()
    }

    /// Boundary loops as ordered vertex cycles, one per component.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let next: BTreeMap<usize, usize> = self.boundary_edges.iter().map(|e| (e[0], e[1])).collect();
        let mut seen = BTreeSet::new();
        let mut loops = Vec::new();
        for e in &self.boundary_edges {
            if seen.contains(&e[0]) {
                continue;
            }
            let mut cycle = vec![e[0]];
            seen.insert(e[0]);
            let mut cur = e[1];
            while cur != e[0] {
                cycle.push(cur);
                seen.insert(cur);
                cur = next[&cur];
            }
            loops.push(cycle);
        }
        loops
    }

    /// ASCII OFF export with three or four coordinates per vertex.
    pub fn write_off(&self, mut w: impl Write) -> std::io::Result<()> {
        let dim = self.patch.space_form().model_dim();
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.vertex_count(), self.triangles.len())?;
        for x in &self.positions {
            let coords: Vec<String> = (0..dim).map(|k| format!("{:.17e}", x[k])).collect();
            writeln!(w, "{}", coords.join(" "))?;
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Triangulates the patch domain and samples jets at every vertex.
///
/// Disks use concentric rings with `6k` vertices on ring `k`, so doubling
/// the resolution quadruples the triangle count. Vertices are numbered ring by
/// ring, which keeps the assembled matrices narrowly banded.
pub fn mesh_patch(patch: &ParametricPatch, resolution: usize) -> Result<SurfaceMesh> {
    if resolution < 4 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} is below 4")));
    }
    let (params, triangles) = match *patch.domain() {
        Domain::Disk { center, radius } => disk_mesh(center, radius, resolution),
        Domain::Annulus { center, inner, outer } => annulus_mesh(center, inner, outer, resolution),
        Domain::Rectangle { u, v } => rectangle_mesh(u, v, resolution),
    };
    let boundary_edges = boundary_edges(&triangles);
    let boundary_labels = label_components(&boundary_edges);
    let mut on_boundary = vec![false; params.len()];
    for e in &boundary_edges {
        on_boundary[e[0]] = true;
        on_boundary[e[1]] = true;
    }
    let jets: Vec<SurfaceJet> = params.par_iter().map(|p| patch.evaluate_jet(*p)).collect::<Result<Vec<_>>>()?;
    let boundary_jets = params
        .par_iter()
        .zip(on_boundary.par_iter())
        .map(|(p, &b)| if b { patch.evaluate_boundary_jet(*p).map(Some) } else { Ok(None) })
        .collect::<Result<Vec<_>>>()?;
    let positions = jets.iter().map(|j| j.position).collect();
    Ok(SurfaceMesh {
        patch: patch.clone(),
        resolution,
        params,
        positions,
        triangles,
        boundary_edges,
        boundary_labels,
        jets,
        boundary_jets,
    })
}

type Tri = (Vec<[f64; 2]>, Vec<[usize; 3]>);

/// Connects two concentric vertex rings (given as index ranges with angles) by
/// advancing along whichever ring has the smaller next angle.
fn zip_rings(inner: &[(usize, f64)], outer: &[(usize, f64)], tris: &mut Vec<[usize; 3]>) {
    let (ni, no) = (inner.len(), outer.len());
    let (mut i, mut o) = (0, 0);
    let angle = |ring: &[(usize, f64)], k: usize| ring[k % ring.len()].1 + TAU * (k / ring.len()) as f64;
    while i < ni || o < no {
        let advance_outer = if i == ni {
            true
        } else if o == no {
            false
        } else {
            angle(outer, o + 1) <= angle(inner, i + 1)
        };
        let a = inner[i % ni].0;
        let b = outer[o % no].0;
        if advance_outer {
            let c = outer[(o + 1) % no].0;
            tris.push([a, b, c]);
            o += 1;
        } else {
            let c = inner[(i + 1) % ni].0;
            tris.push([a, b, c]);
            i += 1;
        }
    }
}

fn fix_winding(params: &[[f64; 2]], tris: &mut [[usize; 3]]) {
    for t in tris.iter_mut() {
        let [a, b, c] = t.map(|k| params[k]);
        let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if cross < 0.0 {
            t.swap(1, 2);
        }
    }
}

fn disk_mesh(center: [f64; 2], radius: f64, n: usize) -> Tri {
    let mut params = vec![center];
    let mut rings: Vec<Vec<(usize, f64)>> = vec![vec![(0, 0.0)]];
    for k in 1..=n {
        let count = 6 * k;
        let r = if k == n { radius } else { radius * k as f64 / n as f64 };
        let mut ring = Vec::with_capacity(count);
        for j in 0..count {
            let a = TAU * j as f64 / count as f64;
            ring.push((params.len(), a));
            params.push([center[0] + r * a.cos(), center[1] + r * a.sin()]);
        }
        rings.push(ring);
    }
    let mut tris = Vec::new();
    for r in rings[1].iter().enumerate() {
        let next = rings[1][(r.0 + 1) % 6].0;
        tris.push([0, r.1 .0, next]);
    }
    for k in 1..n {
        zip_rings(&rings[k], &rings[k + 1], &mut tris);
    }
    fix_winding(&params, &mut tris);
    (params, tris)
}

fn annulus_mesh(center: [f64; 2], inner: f64, outer: f64, n: usize) -> Tri {
    let width = outer - inner;
    let count = ((TAU * 0.5 * (inner + outer) / (width / n as f64)).round() as usize).clamp(12, 12 * n);
    let mut params = Vec::new();
    let mut rings = Vec::new();
    for k in 0..=n {
        let r = if k == n { outer } else { inner + width * k as f64 / n as f64 };
        let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
        let mut ring = Vec::with_capacity(count);
        for j in 0..count {
            let a = TAU * (j as f64 + shift) / count as f64;
            ring.push((params.len(), a));
            params.push([center[0] + r * a.cos(), center[1] + r * a.sin()]);
        }
        rings.push(ring);
    }
    let mut tris = Vec::new();
    for k in 0..n {
        zip_rings(&rings[k], &rings[k + 1], &mut tris);
    }
    fix_winding(&params, &mut tris);
    (params, tris)
}

fn rectangle_mesh(u: [f64; 2], v: [f64; 2], n: usize) -> Tri {
    let mut params = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let a = if i == n { u[1] } else { u[0] + (u[1] - u[0]) * i as f64 / n as f64 };
            let b = if j == n { v[1] } else { v[0] + (v[1] - v[0]) * j as f64 / n as f64 };
            params.push([a, b]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut tris = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    (params, tris)
}

/// Directed edges used by exactly one triangle.
fn boundary_edges(tris: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut count: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let e = count.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
            e.0 += 1;
        }
    }
    count.into_values().filter(|(c, _)| *c == 1).map(|(_, e)| e).collect()
}

/// Connected components of the boundary edge graph, numbered by first appearance.
fn label_components(edges: &[[usize; 2]]) -> Vec<usize> {
    let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
    fn find(p: &mut BTreeMap<usize, usize>, x: usize) -> usize {
        let mut r = x;
        while p[&r] != r {
            r = p[&r];
        }
        let mut y = x;
        while p[&y] != r {
            let n = p[&y];
            p.insert(y, r);
            y = n;
        }
        r
    }
    for e in edges {
        for &v in e {
            parent.entry(v).or_insert(v);
        }
        let (a, b) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
        if a != b {
            parent.insert(a.max(b), a.min(b));
        }
    }
    let mut ids = BTreeMap::new();
    edges
        .iter()
        .map(|e| {
            let r = find(&mut parent, e[0]);
            let next = ids.len();
            *ids.entry(r).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaceform::SpaceForm;
    use crate::surface::catalog::{cap_in_ball, flat_disk};
    use crate::surface::rotational::{rotational_h2_profile, ProfileSeed};

    #[test]
    fn disk_topology_and_counts() {
        let m = mesh_patch(&flat_disk(1.0), 8).unwrap();
        assert_eq!(m.vertex_count(), 1 + 3 * 8 * 9);
        assert_eq!(m.triangles.len(), 6 * 64);
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_component_count(), 1);
        assert_eq!(m.boundary_edges.len(), 48);
        // counterclockwise in the parameter plane
        for t in &m.triangles {
            let [a, b, c] = t.map(|k| m.params[k]);
            assert!((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) > 0.0);
        }
    }

    #[test]
    fn annulus_topology() {
        let (p, _) =
            rotational_h2_profile(SpaceForm::euclidean(), 1.0, ProfileSeed { radius: 0.8, angle: 0.0 }, [-1.0, 1.0])
                .unwrap();
        let m = mesh_patch(&p, 6).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_component_count(), 2);
        assert_eq!(m.boundary_loops().len(), 2);
    }

    #[test]
    fn refinement_statistics() {
        let cap = cap_in_ball(SpaceForm::euclidean(), 1.0, 1.0).unwrap();
        let a = mesh_patch(&cap, 8).unwrap();
        let b = mesh_patch(&cap, 16).unwrap();
        assert_eq!(b.triangles.len(), 4 * a.triangles.len());
        let ratio = b.max_edge_length() / a.max_edge_length();
        assert!((ratio - 0.5).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn boundary_vertices_lie_on_the_domain_boundary() {
        let cap = cap_in_ball(SpaceForm::new(-1.0), 1.0, 0.8).unwrap();
        let m = mesh_patch(&cap, 6).unwrap();
        for v in m.boundary_vertices() {
            let d = cap.space_form().distance_from_origin(&m.positions[v]);
            assert!((d - 1.0).abs() < 1e-10);
        }
        assert!(matches!(mesh_patch(&cap, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn off_export() {
        let m = mesh_patch(&flat_disk(1.0), 4).unwrap();
        let mut out = Vec::new();
        m.write_off(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("OFF"));
        assert_eq!(lines.next(), Some("61 96 0"));
        assert!(s.lines().last().unwrap().starts_with("3 "));
    }
}
