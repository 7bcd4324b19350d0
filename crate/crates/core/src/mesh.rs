//! Structured triangulations of axis-aligned rectangles and interface matching.

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(invalid(format!("degenerate rectangle [{x0},{x1}]x[{y0},{y1}]")));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Label carried by every boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interface,
    Wall,
    Inflow,
    Outflow,
    Bottom,
    Side,
}

/// Tags for the four sides of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideTags {
    pub bottom: BoundaryTag,
    pub right: BoundaryTag,
    pub top: BoundaryTag,
    pub left: BoundaryTag,
}

impl SideTags {
    /// Free-flow region sitting on top of the interface.
    pub fn free_flow() -> Self {
        Self {
            bottom: BoundaryTag::Interface,
            right: BoundaryTag::Outflow,
            top: BoundaryTag::Wall,
            left: BoundaryTag::Inflow,
        }
    }

    /// Porous region sitting below the interface.
    pub fn porous() -> Self {
        Self {
            bottom: BoundaryTag::Bottom,
            right: BoundaryTag::Side,
            top: BoundaryTag::Interface,
            left: BoundaryTag::Side,
        }
    }

    pub fn uniform(tag: BoundaryTag) -> Self {
        Self { bottom: tag, right: tag, top: tag, left: tag }
    }
}

/// Edge with endpoints stored as `(low index, high index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// One or two incident triangles; the second slot is `None` on the boundary.
    pub triangles: [Option<usize>; 2],
    pub tag: Option<BoundaryTag>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// `triangle_edges[t][k]` is the edge opposite local vertex `k`.
    pub triangle_edges: Vec<[usize; 3]>,
    pub h: f64,
}

/// Structured mesh: each cell is split along its lower-left to upper-right diagonal.
pub fn build_rect_mesh(rect: Rect, nx: usize, ny: usize, tags: SideTags) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(invalid(format!("mesh needs nx, ny >= 1 (got {nx}, {ny})")));
    }
    let dx = rect.width() / nx as f64;
    let dy = rect.height() / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny { rect.y1 } else { rect.y0 + j as f64 * dy };
        for i in 0..=nx {
            let x = if i == nx { rect.x1 } else { rect.x0 + i as f64 * dx };
            vertices.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut edges: Vec<Edge> = Vec::new();
    let mut triangle_edges = vec![[0usize; 3]; triangles.len()];
    let mut lookup = std::collections::HashMap::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            let key = (a.min(b), a.max(b));
            let e = *lookup.entry(key).or_insert_with(|| {
                edges.push(Edge { vertices: [key.0, key.1], triangles: [None, None], tag: None });
                edges.len() - 1
            });
            let slot = &mut edges[e].triangles;
            if slot[0].is_none() {
                slot[0] = Some(t);
            } else {
                slot[1] = Some(t);
            }
            triangle_edges[t][k] = e;
        }
    }

    for edge in edges.iter_mut().filter(|e| e.is_boundary()) {
        let [a, b] = edge.vertices;
        let (pa, pb) = (vertices[a], vertices[b]);
        edge.tag = Some(if pa[1] == rect.y0 && pb[1] == rect.y0 {
            tags.bottom
        } else if pa[1] == rect.y1 && pb[1] == rect.y1 {
            tags.top
        } else if pa[0] == rect.x0 && pb[0] == rect.x0 {
            tags.left
        } else {
            tags.right
        });
    }

    Ok(Mesh { rect, nx, ny, vertices, triangles, edges, triangle_edges, h: dx.max(dy) })
}

impl Mesh {
    /// Cells of size at most `h` in both directions.
    pub fn with_max_size(rect: Rect, h: f64, tags: SideTags) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("mesh size must be positive"));
        }
        let n = |len: f64| ((len / h) - 1e-9).ceil().max(1.0) as usize;
        build_rect_mesh(rect, n(rect.width()), n(rect.height()), tags)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area (positive for counter-clockwise triangles).
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_points(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    /// Ratio of the longest to the shortest edge.
    pub fn edge_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for e in 0..self.edges.len() {
            let l = self.edge_length(e);
            lo = lo.min(l);
            hi = hi.max(l);
        }
        hi / lo
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.tag == Some(tag)).map(|(i, _)| i)
    }

    /// Map a barycentric point of triangle `t` to physical coordinates.
    pub fn map_point(&self, t: usize, bary: &[f64; 3]) -> Point {
        let p = self.triangle_points(t);
        [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ]
    }

    /// Constant gradients of the three barycentric coordinates of triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.triangle_points(t);
        let two_a = 2.0 * self.triangle_area(t);
        [
            [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
            [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
            [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
        ]
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// One matched pair of interface edges.
#[derive(Debug, Clone)]
pub struct InterfacePair {
    pub stokes_edge: usize,
    pub darcy_edge: usize,
    /// Endpoints in increasing tangential order.
    pub points: [Point; 2],
    /// Stokes vertex ids at `points[0]`, `points[1]`.
    pub stokes_vertices: [usize; 2],
    /// Darcy vertex ids at `points[0]`, `points[1]`.
    pub darcy_vertices: [usize; 2],
    pub stokes_triangle: usize,
    pub darcy_triangle: usize,
    /// Unit normal pointing from the free-flow region into the porous region.
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct InterfacePairing {
    pub pairs: Vec<InterfacePair>,
    pub length: f64,
}

impl InterfacePairing {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

const MATCH_TOL: f64 = 1e-12;

/// Match every interface edge of the free-flow mesh with the coincident porous edge.
pub fn pair_interface(mesh_s: &Mesh, mesh_d: &Mesh) -> Result<InterfacePairing> {
    let s_edges: Vec<usize> = mesh_s.edges_with_tag(BoundaryTag::Interface).collect();
    let d_edges: Vec<usize> = mesh_d.edges_with_tag(BoundaryTag::Interface).collect();
    if s_edges.is_empty() {
        return Err(Error::NonMatchingInterface("free-flow mesh has no interface edges".into()));
    }
    if s_edges.len() != d_edges.len() {
        return Err(Error::NonMatchingInterface(format!(
            "{} free-flow edges vs {} porous edges",
            s_edges.len(),
            d_edges.len()
        )));
    }

    let mut pairs = Vec::with_capacity(s_edges.len());
    let mut used = vec![false; d_edges.len()];
    for &se in &s_edges {
        let [a, b] = mesh_s.edges[se].vertices;
        let (pa, pb) = (mesh_s.vertices[a], mesh_s.vertices[b]);
        let found = d_edges.iter().enumerate().find_map(|(slot, &de)| {
            if used[slot] {
                return None;
            }
            let [c, d] = mesh_d.edges[de].vertices;
            let (pc, pd) = (mesh_d.vertices[c], mesh_d.vertices[d]);
            if dist(pa, pc) <= MATCH_TOL && dist(pb, pd) <= MATCH_TOL {
                Some((slot, de, [c, d]))
            } else if dist(pa, pd) <= MATCH_TOL && dist(pb, pc) <= MATCH_TOL {
                Some((slot, de, [d, c]))
            } else {
                None
            }
        });
        let Some((slot, de, dv)) = found else {
            return Err(Error::NonMatchingInterface(format!(
                "no porous edge coincides with ({:.6},{:.6})-({:.6},{:.6})",
                pa[0], pa[1], pb[0], pb[1]
            )));
        };
        used[slot] = true;

        let ts = mesh_s.edges[se].triangles[0].expect("boundary edge has a triangle");
        let td = mesh_d.edges[de].triangles[0].expect("boundary edge has a triangle");
        let length = dist(pa, pb);
        let tan = [(pb[0] - pa[0]) / length, (pb[1] - pa[1]) / length];
        let mut normal = [tan[1], -tan[0]];
        // orient outward from the free-flow triangle
        let opp = mesh_s.triangles[ts].iter().copied().find(|&v| v != a && v != b).unwrap();
        let po = mesh_s.vertices[opp];
        if (po[0] - pa[0]) * normal[0] + (po[1] - pa[1]) * normal[1] > 0.0 {
            normal = [-normal[0], -normal[1]];
        }
        // tangent is the normal rotated counter-clockwise
        let tangent = [-normal[1], normal[0]];
        let (mut sv, mut dvv, mut pts) = ([a, b], dv, [pa, pb]);
        if (pb[0] - pa[0]) * tangent[0] + (pb[1] - pa[1]) * tangent[1] < 0.0 {
            sv.swap(0, 1);
            dvv.swap(0, 1);
            pts.swap(0, 1);
        }
        pairs.push(InterfacePair {
            stokes_edge: se,
            darcy_edge: de,
            points: pts,
            stokes_vertices: sv,
            darcy_vertices: dvv,
            stokes_triangle: ts,
            darcy_triangle: td,
            normal,
            tangent,
            length,
        });
    }
    pairs.sort_by(|p, q| {
        let key = |x: &InterfacePair| x.points[0][0] * x.tangent[0] + x.points[0][1] * x.tangent[1];
        key(p).total_cmp(&key(q))
    });
    let length = pairs.iter().map(|p| p.length).sum();
    Ok(InterfacePairing { pairs, length })
}
