use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use serde::Serialize;

use crate::discretize::{AssembledOperators, SurfaceMesh};
use crate::error::{Error, Result};
use crate::stability::adjacency;

/// `f ≡ 0` is declared below this fraction of the surface's extent.
pub const ZERO_FRACTION: f64 = 1e-6;

/// Default zero tolerance: [`ZERO_FRACTION`] times the largest ambient
/// coordinate on the mesh, the natural size of `⟨φ ∧ a, η⟩`.
pub fn default_zero_tolerance(mesh: &SurfaceMesh) -> f64 {
    let extent = mesh.positions.iter().fold(0.0f64, |m, p| m.max(p.amax()));
    ZERO_FRACTION * extent.max(1.0)
}

/// Location of a nodal-set point: a mesh vertex where `f` vanishes, or the
/// linear zero on an edge `(a, b)` with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodalSite {
    Vertex(usize),
    Edge(usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct NodalPoint {
    pub site: NodalSite,
    pub param: [f64; 2],
    pub position: [f64; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct Polyline {
    pub points: Vec<NodalPoint>,
    pub closed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodalDomain {
    pub id: usize,
    pub sign: i8,
    pub vertices: Vec<usize>,
}

/// A mesh vertex whose link sees `branches ≥ 3` arcs of the nodal set.
#[derive(Clone, Debug, Serialize)]
pub struct BranchPoint {
    pub vertex: usize,
    pub param: [f64; 2],
    pub branches: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodalGraph {
    pub zero_tolerance: f64,
    pub domains: Vec<NodalDomain>,
    pub polylines: Vec<Polyline>,
    /// Graph vertices: branch points and polyline ends away from the boundary.
    pub branch_points: Vec<BranchPoint>,
    pub interior_endpoints: Vec<NodalPoint>,
    /// Sign changes of `f` along each boundary loop.
    pub boundary_sign_changes: Vec<usize>,
    /// Domain id of each vertex, `None` on the zero set.
    #[serde(skip)]
    pub vertex_domain: Vec<Option<usize>>,
}

impl NodalGraph {
    pub fn domain_count(&self) -> usize {
        self.domains.len()
    }

    /// Columns `polyline,u,v,x1,x2,x3,x4`.
    pub fn write_polylines_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "polyline,u,v,x1,x2,x3,x4")?;
        for (k, line) in self.polylines.iter().enumerate() {
            for p in &line.points {
                let x = p.position;
                writeln!(
                    w,
                    "{k},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    p.param[0], p.param[1], x[0], x[1], x[2], x[3]
                )?;
            }
        }
        Ok(())
    }
}

pub(crate) fn signs(f: &[f64], tol: f64) -> Vec<i8> {
    f.iter()
        .map(|&v| {
            if v > tol {
                1
            } else if v < -tol {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Zero of the linear interpolant on the edge `a → b`, as a weight on `b`.
pub(crate) fn crossing_weight(fa: f64, fb: f64) -> f64 {
    (fa / (fa - fb)).clamp(0.0, 1.0)
}

fn site_point(mesh: &SurfaceMesh, f: &[f64], site: NodalSite) -> NodalPoint {
    match site {
        NodalSite::Vertex(v) => {
            let x = mesh.positions[v];
            NodalPoint { site, param: mesh.params[v], position: [x[0], x[1], x[2], x[3]] }
        }
        NodalSite::Edge(a, b) => {
            let s = crossing_weight(f[a], f[b]);
            let (pa, pb) = (mesh.params[a], mesh.params[b]);
            let x = mesh.positions[a] * (1.0 - s) + mesh.positions[b] * s;
            NodalPoint {
                site,
                param: [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])],
                position: [x[0], x[1], x[2], x[3]],
            }
        }
    }
}

/// Nodal set of the piecewise-linear interpolant of `f`.
///
/// Values within `zero_tol` of zero count as zero. Domains are the connected
/// components of same-sign vertices; polylines join the zeros found on the
/// edges of each triangle.
pub fn nodal_graph(mesh: &SurfaceMesh, f: &[f64], zero_tol: f64) -> Result<NodalGraph> {
    let n = mesh.vertex_count();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    if f.iter().all(|v| v.abs() <= zero_tol) {
        return Err(Error::IdenticallyZero { tolerance: zero_tol });
    }
    let sign = signs(f, zero_tol);
    let adj = adjacency(mesh);

    let mut vertex_domain = vec![None; n];
    let mut domains = Vec::new();
    for start in 0..n {
        if sign[start] == 0 || vertex_domain[start].is_some() {
            continue;
        }
        let id = domains.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        vertex_domain[start] = Some(id);
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in &adj[v] {
                if sign[w] == sign[start] && vertex_domain[w].is_none() {
                    vertex_domain[w] = Some(id);
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        domains.push(NodalDomain { id, sign: sign[start], vertices: members });
    }

    // segments of the nodal set, one per triangle with two zero sites
    let mut segments: BTreeSet<(NodalSite, NodalSite)> = BTreeSet::new();
    for t in &mesh.triangles {
        let mut sites = Vec::new();
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if sign[a] == 0 {
                sites.push(NodalSite::Vertex(a));
            }
            if sign[a] * sign[b] < 0 {
                sites.push(NodalSite::Edge(a.min(b), a.max(b)));
            }
        }
        if sites.len() == 2 {
            let (s0, s1) = (sites[0].min(sites[1]), sites[0].max(sites[1]));
            segments.insert((s0, s1));
        }
    }
    let mut links: BTreeMap<NodalSite, Vec<NodalSite>> = BTreeMap::new();
    for &(a, b) in &segments {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    }
    let on_boundary = |s: NodalSite| match s {
        NodalSite::Vertex(v) => mesh.is_boundary(v),
        NodalSite::Edge(a, b) => mesh.is_boundary(a) && mesh.is_boundary(b) && is_boundary_edge(mesh, a, b),
    };

    let mut used: BTreeSet<(NodalSite, NodalSite)> = BTreeSet::new();
    let mut polylines = Vec::new();
    let key = |a: NodalSite, b: NodalSite| (a.min(b), a.max(b));
    let walk = |start: NodalSite, used: &mut BTreeSet<(NodalSite, NodalSite)>| -> Option<Polyline> {
        let mut chain = vec![start];
        let mut cur = start;
        loop {
            let next = links[&cur].iter().copied().find(|&nb| !used.contains(&key(cur, nb)));
            let Some(nb) = next else { break };
            used.insert(key(cur, nb));
            chain.push(nb);
            cur = nb;
            if links[&cur].len() != 2 {
                break;
            }
        }
        if chain.len() < 2 {
            return None;
        }
        let closed = chain.len() > 2 && chain.first() == chain.last();
        if closed {
            chain.pop();
        }
        Some(Polyline { points: chain.into_iter().map(|s| site_point(mesh, f, s)).collect(), closed })
    };
    // open chains start at ends and junctions, then the remaining cycles
    let starts: Vec<NodalSite> = links.iter().filter(|(_, l)| l.len() != 2).map(|(s, _)| *s).collect();
    for s in starts {
        while links[&s].iter().any(|&nb| !used.contains(&key(s, nb))) {
            if let Some(p) = walk(s, &mut used) {
                polylines.push(p);
            }
        }
    }
    let sites: Vec<NodalSite> = links.keys().copied().collect();
    for s in sites {
        if links[&s].iter().any(|&nb| !used.contains(&key(s, nb))) {
            if let Some(p) = walk(s, &mut used) {
                polylines.push(p);
            }
        }
    }
    let interior_endpoints: Vec<NodalPoint> =
        links.iter().filter(|(s, l)| l.len() == 1 && !on_boundary(**s)).map(|(s, _)| site_point(mesh, f, *s)).collect();

    let branch_points = branch_points(mesh, &adj, &sign, f);
    let boundary_sign_changes = mesh
        .boundary_loops()
        .iter()
        .map(|lp| {
            let s: Vec<i8> = lp.iter().map(|&v| sign[v]).filter(|&s| s != 0).collect();
            (0..s.len()).filter(|&i| s[i] != s[(i + 1) % s.len()]).count()
        })
        .collect();

    Ok(NodalGraph {
        zero_tolerance: zero_tol,
        domains,
        polylines,
        branch_points,
        interior_endpoints,
        boundary_sign_changes,
        vertex_domain,
    })
}

fn is_boundary_edge(mesh: &SurfaceMesh, a: usize, b: usize) -> bool {
    mesh.boundary_edges.iter().any(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
}

/// Interior vertices whose link changes sign at least four times, merged when
/// adjacent. Zero vertices are skipped when reading signs around the link.
fn branch_points(mesh: &SurfaceMesh, adj: &[Vec<usize>], sign: &[i8], f: &[f64]) -> Vec<BranchPoint> {
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for v in 0..mesh.vertex_count() {
        if mesh.is_boundary(v) {
            continue;
        }
        let link = ordered_link(mesh, adj, v);
        let s: Vec<i8> = link.iter().map(|&w| sign[w]).filter(|&s| s != 0).collect();
        if s.is_empty() {
            continue;
        }
        let changes = (0..s.len()).filter(|&i| s[i] != s[(i + 1) % s.len()]).count();
        if changes >= 4 {
            candidates.push((v, changes));
        }
    }
    // keep the candidate with the smallest |f| in each adjacent cluster
    let mut taken = vec![false; candidates.len()];
    let mut out = Vec::new();
    for i in 0..candidates.len() {
        if taken[i] {
            continue;
        }
        let mut cluster = vec![i];
        taken[i] = true;
        let mut k = 0;
        while k < cluster.len() {
            let v = candidates[cluster[k]].0;
            for j in 0..candidates.len() {
                if !taken[j] && adj[v].contains(&candidates[j].0) {
                    taken[j] = true;
                    cluster.push(j);
                }
            }
            k += 1;
        }
        let best =
            *cluster.iter().min_by(|&&a, &&b| f[candidates[a].0].abs().total_cmp(&f[candidates[b].0].abs())).unwrap();
        let (v, branches) = candidates[best];
        out.push(BranchPoint { vertex: v, param: mesh.params[v], branches });
    }
    out
}

/// One-ring of an interior vertex in cyclic order.
fn ordered_link(mesh: &SurfaceMesh, adj: &[Vec<usize>], v: usize) -> Vec<usize> {
    let c = mesh.params[v];
    let mut ring = adj[v].clone();
    ring.sort_by(|&a, &b| {
        let ang = |w: usize| (mesh.params[w][1] - c[1]).atan2(mesh.params[w][0] - c[0]);
        ang(a).total_cmp(&ang(b))
    });
    ring
}

#[derive(Clone, Debug, Serialize)]
pub struct BalancedCutoff {
    pub alpha: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
    /// `∫ f̃ dμ`.
    pub integral: f64,
    /// `∫ |f̃| dμ`.
    pub absolute_integral: f64,
    /// `I₁,θ(f̃, f̃)`.
    pub index_form: f64,
    /// `I₁,θ(f̃, f̃) / ∫ f̃²`.
    pub rayleigh_quotient: f64,
}

/// `f̃ = f` on the first domain, `αf` on the second and zero elsewhere, with
/// `α` chosen so that `∫ f̃ = 0`.
pub fn balanced_cutoff(
    ops: &AssembledOperators,
    graph: &NodalGraph,
    f: &[f64],
    domains: [usize; 2],
) -> Result<BalancedCutoff> {
    let n = ops.dim();
    if f.len() != n || graph.vertex_domain.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    if domains[0] == domains[1] || domains.iter().any(|&d| d >= graph.domains.len()) {
        return Err(Error::InvalidArgument(format!("need two distinct nodal domains, got {domains:?}")));
    }
    let restrict =
        |d: usize| -> Vec<f64> { (0..n).map(|v| if graph.vertex_domain[v] == Some(d) { f[v] } else { 0.0 }).collect() };
    let g1 = restrict(domains[0]);
    let g2 = restrict(domains[1]);
    let (i1, i2) = (ops.integral(&g1), ops.integral(&g2));
    let abs2 = ops.integral(&g2.iter().map(|x| x.abs()).collect::<Vec<_>>());
    if !(i2.abs() > 1e-12 * abs2) {
        return Err(Error::InvalidArgument(format!("nodal domain {} has vanishing integral", domains[1])));
    }
    let alpha = -i1 / i2;
    let values: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + alpha * b).collect();
    let abs: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    let index_form = ops.index_form(&values, &values)?;
    let l2 = ops.mass.bilinear(&values, &values);
    Ok(BalancedCutoff {
        alpha,
        integral: ops.integral(&values),
        absolute_integral: ops.integral(&abs),
        index_form,
        rayleigh_quotient: if l2 > 0.0 { index_form / l2 } else { 0.0 },
        values,
    })
}
