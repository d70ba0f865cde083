//! Triangulated surfaces: reference topology, icosphere generation and
//! per-time geometry snapshots.
//!
//! Local edge `e` of triangle `[v0, v1, v2]` runs from `v[e]` to `v[(e + 1) % 3]`
//! and is opposite to `v[(e + 2) % 3]`. Global edges are identified by their
//! sorted vertex pair and numbered in ascending order of that pair; this order
//! is the canonical summation order used by the solver.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::motion::MotionMap;
use crate::num::{Real, Vec3};

/// Largest icosphere subdivision level accepted by [`build_icosphere`].
pub const MAX_ICOSPHERE_LEVEL: u32 = 8;

/// Relative area threshold below which a moved triangle counts as collapsed.
pub const COLLAPSE_RELATIVE_AREA: f64 = 1e-14;

/// Reference to one side of an edge: triangle index and local edge index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfEdge {
    pub triangle: usize,
    pub local: u8,
}

/// A global (undirected) edge of the reference mesh.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshEdge {
    /// Sorted global vertex pair.
    pub vertices: [usize; 2],
    /// The side that traverses the edge from the smaller to the larger vertex
    /// index, or the first incident side when no such side exists.
    pub owner: HalfEdge,
    /// The opposite side, present when exactly two triangles share the edge.
    pub twin: Option<HalfEdge>,
    pub incident_count: usize,
}

/// A failed manifold invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ManifoldViolation {
    BoundaryEdge { vertices: [usize; 2] },
    NonManifoldEdge { vertices: [usize; 2], count: usize },
    OrientationMismatch { vertices: [usize; 2], triangles: [usize; 2] },
    AdjacencyNotInvolution { triangle: usize, local: u8 },
}

impl fmt::Display for ManifoldViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldViolation::BoundaryEdge { vertices: [a, b] } => {
                write!(f, "edge ({a}, {b}) with 1 incident triangle")
            }
            ManifoldViolation::NonManifoldEdge { vertices: [a, b], count } => {
                write!(f, "edge ({a}, {b}) with {count} incident triangles")
            }
            ManifoldViolation::OrientationMismatch {
                vertices: [a, b],
                triangles: [s, t],
            } => write!(
                f,
                "orientation violation: triangles {s} and {t} traverse edge ({a}, {b}) in the same direction"
            ),
            ManifoldViolation::AdjacencyNotInvolution { triangle, local } => write!(
                f,
                "adjacency of triangle {triangle}, local edge {local} does not round-trip"
            ),
        }
    }
}

/// Outcome of [`check_manifold`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifoldReport {
    pub first_violation: Option<ManifoldViolation>,
}

impl ManifoldReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

impl fmt::Display for ManifoldReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.first_violation {
            None => write!(f, "pass"),
            Some(v) => write!(f, "fail: {v}"),
        }
    }
}

/// Immutable triangulation of the initial surface.
#[derive(Clone, Debug)]
pub struct ReferenceMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<MeshEdge>,
    cell_edges: Vec<[usize; 3]>,
    adjacency: Vec<[Option<HalfEdge>; 3]>,
    defects: Vec<ManifoldViolation>,
}

impl<T: Real> ReferenceMesh<T> {
    /// Builds the mesh and its edge adjacency. Manifold defects do not fail
    /// construction; they are reported by [`check_manifold`].
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for (j, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {j} references vertex {v} of {}",
                    vertices.len()
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!(
                    "triangle {j} repeats a vertex: {tri:?}"
                )));
            }
        }

        // (min, max, forward?, side)
        let mut sides: Vec<(usize, usize, bool, HalfEdge)> = triangles
            .iter()
            .enumerate()
            .flat_map(|(j, tri)| {
                (0..3u8).map(move |e| {
                    let a = tri[e as usize];
                    let b = tri[(e as usize + 1) % 3];
                    let side = HalfEdge { triangle: j, local: e };
                    (a.min(b), a.max(b), a < b, side)
                })
            })
            .collect();
        sides.sort_unstable_by_key(|&(a, b, _, s)| (a, b, s));

        let mut edges = Vec::new();
        let mut cell_edges = vec![[usize::MAX; 3]; triangles.len()];
        let mut adjacency = vec![[None; 3]; triangles.len()];
        let mut defects = Vec::new();

        for group in sides.chunk_by(|x, y| (x.0, x.1) == (y.0, y.1)) {
            let key = [group[0].0, group[0].1];
            let id = edges.len();
            for &(_, _, _, s) in group {
                cell_edges[s.triangle][s.local as usize] = id;
            }
            let owner = group
                .iter()
                .find(|g| g.2)
                .map(|g| g.3)
                .unwrap_or(group[0].3);
            let mut twin = None;
            match group.len() {
                1 => defects.push(ManifoldViolation::BoundaryEdge { vertices: key }),
                2 => {
                    let (s, t) = (group[0], group[1]);
                    if s.2 == t.2 {
                        defects.push(ManifoldViolation::OrientationMismatch {
                            vertices: key,
                            triangles: [s.3.triangle, t.3.triangle],
                        });
                    }
                    adjacency[s.3.triangle][s.3.local as usize] = Some(t.3);
                    adjacency[t.3.triangle][t.3.local as usize] = Some(s.3);
                    twin = Some(if owner == s.3 { t.3 } else { s.3 });
                }
                n => defects.push(ManifoldViolation::NonManifoldEdge {
                    vertices: key,
                    count: n,
                }),
            }
            edges.push(MeshEdge {
                vertices: key,
                owner,
                twin,
                incident_count: group.len(),
            });
        }

        Ok(ReferenceMesh {
            vertices,
            triangles,
            edges,
            cell_edges,
            adjacency,
            defects,
        })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Global edges in canonical (ascending vertex pair) order.
    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    /// Global edge index of local edge `e` of triangle `j`.
    pub fn cell_edges(&self) -> &[[usize; 3]] {
        &self.cell_edges
    }

    /// Neighbor across local edge `e` of triangle `j`, with the neighbor's
    /// matching local edge; `None` on boundary or non-manifold edges.
    pub fn neighbor(&self, triangle: usize, local: usize) -> Option<HalfEdge> {
        self.adjacency[triangle][local]
    }

    /// True when every edge has exactly two consistently oriented sides.
    pub fn is_closed(&self) -> bool {
        self.defects.is_empty()
    }

    /// Returns a copy with vertex positions replaced; topology is shared.
    pub fn with_vertices(&self, vertices: Vec<Vec3<T>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(ReferenceMesh {
            vertices,
            ..self.clone()
        })
    }
}

/// Verifies the closed oriented 2-manifold invariants.
pub fn check_manifold<T: Real>(mesh: &ReferenceMesh<T>) -> ManifoldReport {
    if let Some(v) = mesh.defects.first() {
        return ManifoldReport {
            first_violation: Some(v.clone()),
        };
    }
    for j in 0..mesh.num_triangles() {
        for e in 0..3 {
            let ok = match mesh.neighbor(j, e) {
                Some(n) => {
                    mesh.neighbor(n.triangle, n.local as usize)
                        == Some(HalfEdge {
                            triangle: j,
                            local: e as u8,
                        })
                }
                None => false,
            };
            if !ok {
                return ManifoldReport {
                    first_violation: Some(ManifoldViolation::AdjacencyNotInvolution {
                        triangle: j,
                        local: e as u8,
                    }),
                };
            }
        }
    }
    ManifoldReport {
        first_violation: None,
    }
}

/// Icosahedral subdivision of the unit sphere with `20 * 4^level` triangles,
/// outward oriented.
pub fn build_icosphere<T: Real>(level: u32) -> Result<ReferenceMesh<T>> {
    if level > MAX_ICOSPHERE_LEVEL {
        return Err(Error::Config(format!(
            "mesh.level {level} exceeds maximum {MAX_ICOSPHERE_LEVEL}"
        )));
    }
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let base: [[f64; 3]; 12] = [
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    // unit vectors are built in f64 and rounded once
    let mut points: Vec<[f64; 3]> = base.iter().map(|p| unit_f64(*p)).collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3 / 2);
        let mut midpoint = |a: usize, b: usize, points: &mut Vec<[f64; 3]>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (points[a], points[b]);
                points.push(unit_f64([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                points.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut points);
            let bc = midpoint(b, c, &mut points);
            let ca = midpoint(c, a, &mut points);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }

    let vertices = points.into_iter().map(Vec3::from_f64).collect();
    ReferenceMesh::new(vertices, triangles)
}

fn unit_f64(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Area of the flat triangle `(p0, p1, p2)`.
pub fn cell_measure<T: Real>(p0: Vec3<T>, p1: Vec3<T>, p2: Vec3<T>) -> Result<T> {
    let area = raw_area(p0, p1, p2);
    if !(area >= T::tiny_area()) {
        return Err(Error::DegenerateCell(format!(
            "triangle {:?}, {:?}, {:?} has area {area:e}",
            p0.to_f64(),
            p1.to_f64(),
            p2.to_f64()
        )));
    }
    Ok(area)
}

#[inline]
fn raw_area<T: Real>(p0: Vec3<T>, p1: Vec3<T>, p2: Vec3<T>) -> T {
    (p1 - p0).cross(p2 - p0).norm() * T::lit(0.5)
}

/// Length, outward conormal and midpoint of one triangle edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeGeometry<T> {
    pub length: T,
    pub conormal: Vec3<T>,
    pub midpoint: Vec3<T>,
}

/// Geometry of edge `p_a -> p_b` of the flat triangle with opposite vertex
/// `p_opp`. The conormal lies in the triangle plane, is orthogonal to the edge
/// and points away from `p_opp`.
pub fn edge_geometry<T: Real>(p_a: Vec3<T>, p_b: Vec3<T>, p_opp: Vec3<T>) -> Result<EdgeGeometry<T>> {
    let d = p_b - p_a;
    let length = d.norm();
    let w = p_opp - p_a;
    let degenerate = || {
        Error::DegenerateCell(format!(
            "edge {:?} -> {:?} with opposite vertex {:?}",
            p_a.to_f64(),
            p_b.to_f64(),
            p_opp.to_f64()
        ))
    };
    if !(length > T::zero()) || !length.is_finite() {
        return Err(degenerate());
    }
    let inward = w - d * (w.dot(d) / (length * length));
    let mut conormal = (-inward).normalized().ok_or_else(degenerate)?;
    // one Gram-Schmidt refinement keeps the edge-orthogonality at round-off
    let du = d / length;
    conormal = (conormal - du * conormal.dot(du))
        .normalized()
        .ok_or_else(degenerate)?;
    if inward.norm() <= length * T::epsilon() {
        return Err(degenerate());
    }
    Ok(EdgeGeometry {
        length,
        conormal,
        midpoint: p_a.midpoint(p_b),
    })
}

/// Moved geometry of a [`ReferenceMesh`] at one time level.
#[derive(Clone, Debug)]
pub struct MeshSnapshot<T> {
    mesh: Arc<ReferenceMesh<T>>,
    pub time: T,
    pub vertices: Vec<Vec3<T>>,
    pub cell_measure: Vec<T>,
    pub barycenter: Vec<Vec3<T>>,
    pub edge_length: Vec<[T; 3]>,
    pub edge_conormal: Vec<[Vec3<T>; 3]>,
    pub edge_midpoint: Vec<[Vec3<T>; 3]>,
    /// Per global edge: unit conormal shared by both sides, oriented out of
    /// the owner triangle. It bisects the two flat-triangle conormals so the
    /// neighbor sees exactly the negated vector.
    pub shared_conormal: Vec<Vec3<T>>,
}

impl<T: Real> MeshSnapshot<T> {
    /// Geometry of `mesh` with its vertices moved to `vertices`.
    pub fn from_vertices(mesh: &Arc<ReferenceMesh<T>>, vertices: Vec<Vec3<T>>, time: T) -> Result<Self> {
        let tris = mesh.triangles();
        if vertices.len() != mesh.num_vertices() {
            return Err(Error::InvalidMesh(format!(
                "expected {} vertices, got {}",
                mesh.num_vertices(),
                vertices.len()
            )));
        }
        let areas: Vec<T> = tris
            .par_iter()
            .map(|&[a, b, c]| raw_area(vertices[a], vertices[b], vertices[c]))
            .collect();
        let total: T = areas.iter().copied().sum();
        let mean = total / T::from_usize(areas.len()).unwrap();
        let threshold = (mean * T::lit(COLLAPSE_RELATIVE_AREA)).max(T::tiny_area());
        if let Some((j, &area)) = areas
            .iter()
            .enumerate()
            .find(|(_, &a)| !(a >= threshold) || !a.is_finite())
        {
            return Err(Error::GeometryCollapse {
                triangle: j,
                time: time.as_f64(),
                area: area.as_f64(),
                mean_area: mean.as_f64(),
            });
        }

        let per_cell: Vec<[EdgeGeometry<T>; 3]> = tris
            .par_iter()
            .map(|tri| {
                let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
                let mut out = [EdgeGeometry {
                    length: T::zero(),
                    conormal: Vec3::zero(),
                    midpoint: Vec3::zero(),
                }; 3];
                for (e, slot) in out.iter_mut().enumerate() {
                    *slot = edge_geometry(p[e], p[(e + 1) % 3], p[(e + 2) % 3])?;
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;

        let third = T::one() / T::lit(3.0);
        let barycenter = tris
            .iter()
            .map(|&[a, b, c]| (vertices[a] + vertices[b] + vertices[c]) * third)
            .collect();
        let edge_length = per_cell.iter().map(|g| [g[0].length, g[1].length, g[2].length]).collect();
        let edge_conormal: Vec<[Vec3<T>; 3]> = per_cell
            .iter()
            .map(|g| [g[0].conormal, g[1].conormal, g[2].conormal])
            .collect();
        let edge_midpoint = per_cell
            .iter()
            .map(|g| [g[0].midpoint, g[1].midpoint, g[2].midpoint])
            .collect();
        let shared_conormal = mesh
            .edges()
            .par_iter()
            .map(|edge| {
                let own = edge_conormal[edge.owner.triangle][edge.owner.local as usize];
                match edge.twin {
                    Some(t) => (own - edge_conormal[t.triangle][t.local as usize])
                        .normalized()
                        .unwrap_or(own),
                    None => own,
                }
            })
            .collect();

        Ok(MeshSnapshot {
            mesh: Arc::clone(mesh),
            time,
            vertices,
            cell_measure: areas,
            barycenter,
            edge_length,
            edge_conormal,
            edge_midpoint,
            shared_conormal,
        })
    }

    pub fn mesh(&self) -> &Arc<ReferenceMesh<T>> {
        &self.mesh
    }

    pub fn num_cells(&self) -> usize {
        self.cell_measure.len()
    }

    pub fn total_area(&self) -> T {
        self.cell_measure.iter().copied().sum()
    }
}

/// Moves every reference vertex with `motion` and recomputes the geometry.
pub fn snapshot<T: Real>(mesh: &Arc<ReferenceMesh<T>>, motion: &MotionMap<T>, t: T) -> Result<MeshSnapshot<T>> {
    let vertices = mesh
        .vertices()
        .par_iter()
        .map(|&x0| motion.evaluate(x0, t))
        .collect::<Result<Vec<_>>>()?;
    MeshSnapshot::from_vertices(mesh, vertices, t)
}

/// Average over triangles of the longest edge length.
pub fn mean_diameter<T: Real>(snapshot: &MeshSnapshot<T>) -> T {
    let sum: T = snapshot
        .edge_length
        .iter()
        .map(|l| l[0].max(l[1]).max(l[2]))
        .sum();
    sum / T::from_usize(snapshot.edge_length.len()).unwrap()
}
