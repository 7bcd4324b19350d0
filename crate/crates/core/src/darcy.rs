//! BDM1-P0 mixed elements for the Robin Darcy subproblem.
//!
//! Each edge carries two velocity dofs, the normal flux `u . n_e` at its lower- and
//! higher-indexed vertex, where `n_e` is the edge tangent (low to high) rotated
//! clockwise. Head dofs are one per triangle and follow the velocity dofs.

use std::sync::Arc;

use crate::bc::{BoundaryConditions, Constraints, ReducedOperator};
use crate::conductivity::{ScalarField, Sym2, VectorField};
use crate::error::{invalid, Error, Result};
use crate::interface::TraceFunction;
use crate::mesh::{InterfacePairing, Mesh, Point};
use crate::quadrature::{gauss3_unit, TriangleRule};
use crate::sparse::{SparseMatrix, SymbolicFactorization, TripletBuilder};

/// The six local basis functions of one triangle, `psi_i = lambda_{vert[i]} * w[i]`.
#[derive(Debug, Clone)]
struct Element {
    dofs: [usize; 6],
    vert: [usize; 6],
    w: [[f64; 2]; 6],
    div: [f64; 6],
    area: f64,
}

impl Element {
    #[inline]
    fn values(&self, l: &[f64; 3]) -> [[f64; 2]; 6] {
        let mut v = [[0.0; 2]; 6];
        for i in 0..6 {
            let s = l[self.vert[i]];
            v[i] = [s * self.w[i][0], s * self.w[i][1]];
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct DarcySpace {
    pub mesh: Arc<Mesh>,
    elements: Vec<Element>,
    essential: Vec<bool>,
    /// Exterior edges with prescribed head and their outward sign `n_e . n_out`.
    head_edges: Vec<(usize, f64)>,
    interface_dofs: Vec<usize>,
    rule: TriangleRule,
}

pub(crate) fn edge_normal(mesh: &Mesh, e: usize) -> [f64; 2] {
    let [a, b] = mesh.edges[e].vertices;
    let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
    let l = mesh.edge_length(e);
    [(pb[1] - pa[1]) / l, -(pb[0] - pa[0]) / l]
}

/// Sign of `n_e` relative to the outward normal of boundary edge `e`.
fn outward_sign(mesh: &Mesh, e: usize) -> f64 {
    let t = mesh.edges[e].triangles[0].expect("edge has a triangle");
    let k = mesh.triangle_edges[t].iter().position(|&x| x == e).expect("edge belongs to triangle");
    let opp = mesh.vertices[mesh.triangles[t][k]];
    let on = mesh.vertices[mesh.edges[e].vertices[0]];
    let n = edge_normal(mesh, e);
    if n[0] * (on[0] - opp[0]) + n[1] * (on[1] - opp[1]) > 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn build_darcy_space(mesh: Arc<Mesh>, bc: &BoundaryConditions) -> DarcySpace {
    let n_vel = 2 * mesh.n_edges();
    let mut essential = vec![false; n_vel + mesh.n_triangles()];
    let mut head_edges = Vec::new();
    let mut interface_dofs = Vec::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        let Some(tag) = edge.tag else { continue };
        if tag == crate::mesh::BoundaryTag::Interface {
            interface_dofs.extend([2 * e, 2 * e + 1]);
        } else if bc.is_darcy_flux(tag) {
            essential[2 * e] = true;
            essential[2 * e + 1] = true;
        } else {
            head_edges.push((e, outward_sign(&mesh, e)));
        }
    }
    let elements = (0..mesh.n_triangles()).map(|t| build_element(&mesh, t)).collect();
    DarcySpace { mesh, elements, essential, head_edges, interface_dofs, rule: TriangleRule::degree2() }
}

fn build_element(mesh: &Mesh, t: usize) -> Element {
    let tri = mesh.triangles[t];
    let g = mesh.barycentric_gradients(t);
    let mut el = Element { dofs: [0; 6], vert: [0; 6], w: [[0.0; 2]; 6], div: [0.0; 6], area: mesh.triangle_area(t) };
    for k in 0..3 {
        let e = mesh.triangle_edges[t][k];
        let n = edge_normal(mesh, e);
        for (s, &gv) in mesh.edges[e].vertices.iter().enumerate() {
            let lv = tri.iter().position(|&v| v == gv).expect("edge vertex in triangle");
            // the other edge through lv runs towards local vertex k
            let (p, q) = (mesh.vertices[tri[lv]], mesh.vertices[tri[k]]);
            let te = [q[0] - p[0], q[1] - p[1]];
            let s_n = te[0] * n[0] + te[1] * n[1];
            let w = [te[0] / s_n, te[1] / s_n];
            let i = 2 * k + s;
            el.dofs[i] = 2 * e + s;
            el.vert[i] = lv;
            el.w[i] = w;
            el.div[i] = g[lv][0] * w[0] + g[lv][1] * w[1];
        }
    }
    el
}

impl DarcySpace {
    pub fn n_velocity(&self) -> usize {
        2 * self.mesh.n_edges()
    }

    pub fn n_head(&self) -> usize {
        self.mesh.n_triangles()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_velocity() + self.n_head()
    }

    pub fn head_dof(&self, t: usize) -> usize {
        self.n_velocity() + t
    }

    pub fn is_essential(&self, dof: usize) -> bool {
        self.essential[dof]
    }

    pub fn interface_dofs(&self) -> &[usize] {
        &self.interface_dofs
    }

    pub fn constraints(&self) -> Constraints {
        Constraints::new(self.essential.clone())
    }

    /// Dof of edge `e` at `vertex`.
    pub fn edge_dof(&self, e: usize, vertex: usize) -> usize {
        if self.mesh.edges[e].vertices[0] == vertex {
            2 * e
        } else {
            2 * e + 1
        }
    }

    /// Physical quadrature points of the volume rule, element-major.
    pub fn quadrature_points(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.n_head() * self.rule.len());
        for t in 0..self.n_head() {
            for l in &self.rule.points {
                pts.push(self.mesh.map_point(t, l));
            }
        }
        pts
    }

    pub fn n_quadrature_points(&self) -> usize {
        self.n_head() * self.rule.len()
    }

    /// Full-length vector with `u_b . n_e` at essential flux dofs.
    pub fn flux_values(&self, u_b: &VectorField) -> Vec<f64> {
        self.nodal_fluxes(u_b, true)
    }

    /// Nodal flux interpolant of `u` on every edge; heads are zero.
    pub fn flux_values_all(&self, u: &VectorField) -> Vec<f64> {
        self.nodal_fluxes(u, false)
    }

    fn nodal_fluxes(&self, u_b: &VectorField, essential_only: bool) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs()];
        for (e, edge) in self.mesh.edges.iter().enumerate() {
            if essential_only && !self.essential[2 * e] {
                continue;
            }
            let n = edge_normal(&self.mesh, e);
            for s in 0..2 {
                let u = u_b(self.mesh.vertices[edge.vertices[s]]);
                x[2 * e + s] = u[0] * n[0] + u[1] * n[1];
            }
        }
        x
    }

    pub fn velocity_at(&self, x: &[f64], t: usize, bary: &[f64; 3]) -> [f64; 2] {
        let el = &self.elements[t];
        let v = el.values(bary);
        let mut u = [0.0; 2];
        for i in 0..6 {
            u[0] += x[el.dofs[i]] * v[i][0];
            u[1] += x[el.dofs[i]] * v[i][1];
        }
        u
    }

    pub fn divergence(&self, x: &[f64], t: usize) -> f64 {
        let el = &self.elements[t];
        (0..6).map(|i| x[el.dofs[i]] * el.div[i]).sum()
    }

    pub fn head(&self, x: &[f64], t: usize) -> f64 {
        x[self.head_dof(t)]
    }

    pub fn head_mean(&self, x: &[f64]) -> f64 {
        let (mut s, mut a) = (0.0, 0.0);
        for (t, el) in self.elements.iter().enumerate() {
            s += el.area * x[self.head_dof(t)];
            a += el.area;
        }
        s / a
    }

    pub fn shift_head(&self, x: &mut [f64], c: f64) {
        for t in 0..self.n_head() {
            x[self.n_velocity() + t] += c;
        }
    }

    /// `(u . n_D, u . tau)` at the endpoints of every interface pair.
    pub fn traces(&self, x: &[f64], pairing: &InterfacePairing) -> (TraceFunction, TraceFunction) {
        let mut normal = TraceFunction::zeros(pairing.len());
        let mut tangential = TraceFunction::zeros(pairing.len());
        for (k, p) in pairing.pairs.iter().enumerate() {
            let t = p.darcy_triangle;
            let tri = self.mesh.triangles[t];
            for e in 0..2 {
                let v = p.darcy_vertices[e];
                let mut bary = [0.0; 3];
                bary[tri.iter().position(|&w| w == v).expect("pair vertex in Darcy triangle")] = 1.0;
                let u = self.velocity_at(x, t, &bary);
                normal.values[k][e] = -(u[0] * p.normal[0] + u[1] * p.normal[1]);
                tangential.values[k][e] = u[0] * p.tangent[0] + u[1] * p.tangent[1];
            }
        }
        (normal, tangential)
    }

    /// Global dofs and values of the local basis of triangle `t` at `bary`.
    pub(crate) fn local_basis(&self, t: usize, bary: &[f64; 3]) -> ([usize; 6], [[f64; 2]; 6]) {
        let el = &self.elements[t];
        (el.dofs, el.values(bary))
    }

    /// Plain L2 velocity mass matrix.
    pub fn velocity_mass(&self) -> SparseMatrix {
        let n = self.n_velocity();
        let mut b = TripletBuilder::with_capacity(n, n, 36 * self.n_head());
        for el in &self.elements {
            let mut m = [[0.0; 6]; 6];
            for (l, w) in self.rule.points.iter().zip(&self.rule.weights) {
                let v = el.values(l);
                for i in 0..6 {
                    for j in 0..6 {
                        m[i][j] += w * el.area * (v[i][0] * v[j][0] + v[i][1] * v[j][1]);
                    }
                }
            }
            for i in 0..6 {
                for j in 0..6 {
                    b.push(el.dofs[i], el.dofs[j], m[i][j]);
                }
            }
        }
        b.build().expect("valid mass matrix")
    }

    /// Source terms: `k_min g (f, div v)` on velocity rows and `-g (f, psi)` on head rows.
    pub fn source_load(&self, f: &ScalarField, g: f64, k_min: f64) -> Vec<f64> {
        let rule = TriangleRule::degree6();
        let mut r = vec![0.0; self.n_dofs()];
        for (t, el) in self.elements.iter().enumerate() {
            let int_f: f64 =
                el.area * rule.points.iter().zip(&rule.weights).map(|(l, w)| w * f(self.mesh.map_point(t, l))).sum::<f64>();
            if int_f == 0.0 {
                continue;
            }
            for i in 0..6 {
                r[el.dofs[i]] += k_min * g * int_f * el.div[i];
            }
            r[self.head_dof(t)] -= g * int_f;
        }
        r
    }

    /// `-g <phi_b, v . n>` on the head boundary, added to `r`.
    pub fn add_head_load(&self, phi_b: &ScalarField, g: f64, r: &mut [f64]) {
        for &(e, sign) in &self.head_edges {
            let [a, b] = self.mesh.edges[e].vertices;
            let (pa, pb) = (self.mesh.vertices[a], self.mesh.vertices[b]);
            let l = self.mesh.edge_length(e);
            let mut m = [0.0; 2];
            for (s, w) in gauss3_unit() {
                let phi = phi_b([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
                m[0] += w * l * phi * (1.0 - s);
                m[1] += w * l * phi * s;
            }
            r[2 * e] -= g * sign * m[0];
            r[2 * e + 1] -= g * sign * m[1];
        }
    }

    /// `<g_n, v . n_D>` on the interface, added to `r`.
    pub fn add_interface_load(&self, pairing: &InterfacePairing, g_n: &TraceFunction, r: &mut [f64]) {
        for (k, p) in pairing.pairs.iter().enumerate() {
            let n = edge_normal(&self.mesh, p.darcy_edge);
            let sign = -(n[0] * p.normal[0] + n[1] * p.normal[1]);
            let m = g_n.moments(k, p.length);
            for e in 0..2 {
                r[self.edge_dof(p.darcy_edge, p.darcy_vertices[e])] += sign * m[e];
            }
        }
    }

    /// `g ((K_j^{-1} - Kbar) u, v) + g (k_j - kbar) (div u, div v)` subtracted from `r`.
    /// `kinv` holds `(K_j^{-1}, Kbar)` at the volume quadrature points.
    pub fn add_lag(&self, u: &[f64], kinv: Option<(&[Sym2], &[Sym2])>, dk: f64, g: f64, r: &mut [f64]) {
        let nq = self.rule.len();
        for (t, el) in self.elements.iter().enumerate() {
            let mut c = [0.0; 6];
            for i in 0..6 {
                c[i] = u[el.dofs[i]];
            }
            if c.iter().all(|&v| v == 0.0) {
                continue;
            }
            if let Some((kj, kbar)) = kinv {
                for (q, (l, w)) in self.rule.points.iter().zip(&self.rule.weights).enumerate() {
                    let d = kj[t * nq + q].sub(&kbar[t * nq + q]);
                    if d.0 == [0.0; 3] {
                        continue;
                    }
                    let v = el.values(l);
                    let mut uq = [0.0; 2];
                    for i in 0..6 {
                        uq[0] += c[i] * v[i][0];
                        uq[1] += c[i] * v[i][1];
                    }
                    let du = d.apply(uq);
                    for i in 0..6 {
                        r[el.dofs[i]] -= g * w * el.area * (du[0] * v[i][0] + du[1] * v[i][1]);
                    }
                }
            }
            if dk != 0.0 {
                let div: f64 = (0..6).map(|i| c[i] * el.div[i]).sum();
                for i in 0..6 {
                    r[el.dofs[i]] -= g * dk * el.area * div * el.div[i];
                }
            }
        }
    }
}

/// Saddle-point matrix of the Robin subproblem; `kinv` holds `K^{-1}` at the volume
/// quadrature points (see [`DarcySpace::quadrature_points`]).
pub fn assemble_darcy_matrix(
    space: &DarcySpace,
    g: f64,
    kinv: &[Sym2],
    k_min: f64,
    delta_d: f64,
    pairing: &InterfacePairing,
) -> Result<SparseMatrix> {
    if !(g > 0.0) {
        return Err(invalid("gravity must be positive"));
    }
    if !(delta_d > 0.0) {
        return Err(invalid("Darcy Robin parameter must be positive"));
    }
    if !(k_min > 0.0) {
        return Err(invalid("k_min must be positive"));
    }
    if kinv.len() != space.n_quadrature_points() {
        return Err(Error::DimensionMismatch { expected: space.n_quadrature_points(), found: kinv.len() });
    }
    let mut b = assemble_volume(space, g, kinv, k_min)?;
    for p in &pairing.pairs {
        let d = [space.edge_dof(p.darcy_edge, p.darcy_vertices[0]), space.edge_dof(p.darcy_edge, p.darcy_vertices[1])];
        let m = [[2.0, 1.0], [1.0, 2.0]];
        for a in 0..2 {
            for c in 0..2 {
                b.push(d[a], d[c], delta_d * p.length / 6.0 * m[a][c]);
            }
        }
    }
    b.build()
}

/// Mass, grad-div and coupling blocks without interface terms.
pub(crate) fn assemble_volume(space: &DarcySpace, g: f64, kinv: &[Sym2], k_min: f64) -> Result<TripletBuilder> {
    let nq = space.rule.len();
    let n = space.n_dofs();
    let mut b = TripletBuilder::with_capacity(n, n, 48 * space.n_head());
    for (t, el) in space.elements.iter().enumerate() {
        let mut m = [[0.0; 6]; 6];
        for (q, (l, w)) in space.rule.points.iter().zip(&space.rule.weights).enumerate() {
            let k = &kinv[t * nq + q];
            if !k.is_spd() {
                let p = space.mesh.map_point(t, l);
                return Err(Error::NotSpd { x: p[0], y: p[1] });
            }
            let v = el.values(l);
            for i in 0..6 {
                let kv = k.apply(v[i]);
                for j in 0..6 {
                    m[j][i] += g * w * el.area * (kv[0] * v[j][0] + kv[1] * v[j][1]);
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                b.push(el.dofs[i], el.dofs[j], m[i][j] + g * k_min * el.area * el.div[i] * el.div[j]);
            }
            let bd = -g * el.area * el.div[i];
            b.push(space.head_dof(t), el.dofs[i], bd);
            b.push(el.dofs[i], space.head_dof(t), bd);
        }
    }
    Ok(b)
}

#[derive(Debug, Clone)]
pub struct DarcyOperator {
    pub reduced: ReducedOperator,
    pub g: f64,
    pub delta_d: f64,
    pub k_min: f64,
    /// `K^{-1}` the matrix was built from, at the volume quadrature points.
    pub kinv: Vec<Sym2>,
}

pub fn assemble_darcy_operator(
    space: &DarcySpace,
    g: f64,
    kinv: Vec<Sym2>,
    k_min: f64,
    delta_d: f64,
    pairing: &InterfacePairing,
    symbolic: Option<&SymbolicFactorization>,
) -> Result<DarcyOperator> {
    let matrix = assemble_darcy_matrix(space, g, &kinv, k_min, delta_d, pairing)?;
    let reduced = ReducedOperator::new(matrix, space.constraints(), symbolic)?;
    Ok(DarcyOperator { reduced, g, delta_d, k_min, kinv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, pair_interface, BoundaryTag, Rect, SideTags};
    use crate::sparse::norm2;

    fn setup(nx: usize, ny: usize) -> (DarcySpace, InterfacePairing) {
        let ms = build_rect_mesh(Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(), nx, ny, SideTags::free_flow()).unwrap();
        let md = build_rect_mesh(Rect::new(0.0, 1.0, -1.0, 0.0).unwrap(), nx, ny, SideTags::porous()).unwrap();
        let p = pair_interface(&ms, &md).unwrap();
        (build_darcy_space(Arc::new(md), &BoundaryConditions::enclosed()), p)
    }

    fn iso(space: &DarcySpace, k: f64) -> Vec<Sym2> {
        vec![Sym2::iso(k); space.n_quadrature_points()]
    }

    #[test]
    fn counts_and_masks() {
        let (s, _) = setup(1, 1);
        assert_eq!(s.n_velocity(), 10);
        assert_eq!(s.n_head(), 2);
        for (e, edge) in s.mesh.edges.iter().enumerate() {
            let want = matches!(edge.tag, Some(t) if t != BoundaryTag::Interface);
            assert_eq!(s.is_essential(2 * e), want);
            assert_eq!(s.is_essential(2 * e + 1), want);
        }
        assert_eq!(s.interface_dofs().len(), 2);
        assert!(s.interface_dofs().iter().all(|&d| !s.is_essential(d)));
    }

    #[test]
    fn basis_normal_traces_are_nodal() {
        let (s, _) = setup(3, 2);
        let m = &s.mesh;
        for (t, el) in s.elements.iter().enumerate() {
            let tri = m.triangles[t];
            for k in 0..3 {
                let e = m.triangle_edges[t][k];
                let n = edge_normal(m, e);
                for i in 0..6 {
                    for &v in &m.edges[e].vertices {
                        let mut bary = [0.0; 3];
                        bary[tri.iter().position(|&w| w == v).unwrap()] = 1.0;
                        let val = el.values(&bary)[i];
                        let flux = val[0] * n[0] + val[1] * n[1];
                        let want = if el.dofs[i] == s.edge_dof(e, v) { 1.0 } else { 0.0 };
                        assert!((flux - want).abs() < 1e-12, "t {t} i {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn divergence_matches_boundary_flux() {
        // div psi * area = int_boundary psi . n_out, per element
        let (s, _) = setup(2, 3);
        let m = &s.mesh;
        for (t, el) in s.elements.iter().enumerate() {
            let tri = m.triangles[t];
            let c = m.triangle_points(t);
            let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
            for i in 0..6 {
                let mut flux = 0.0;
                for k in 0..3 {
                    let e = m.triangle_edges[t][k];
                    let n = edge_normal(m, e);
                    let p0 = m.vertices[m.edges[e].vertices[0]];
                    let sign = if n[0] * (p0[0] - centroid[0]) + n[1] * (p0[1] - centroid[1]) > 0.0 { 1.0 } else { -1.0 };
                    for &v in &m.edges[e].vertices {
                        let mut bary = [0.0; 3];
                        bary[tri.iter().position(|&w| w == v).unwrap()] = 1.0;
                        let val = el.values(&bary)[i];
                        flux += sign * 0.5 * m.edge_length(e) * (val[0] * n[0] + val[1] * n[1]);
                    }
                }
                assert!((flux - el.div[i] * el.area).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reproduces_linear_fields() {
        // interpolating u = (1 + 2x - y, 3 - x + 0.5y) through nodal fluxes is exact
        let (s, _) = setup(3, 3);
        let u = |p: Point| [1.0 + 2.0 * p[0] - p[1], 3.0 - p[0] + 0.5 * p[1]];
        let mut x = vec![0.0; s.n_dofs()];
        for (e, edge) in s.mesh.edges.iter().enumerate() {
            let n = edge_normal(&s.mesh, e);
            for k in 0..2 {
                let v = u(s.mesh.vertices[edge.vertices[k]]);
                x[2 * e + k] = v[0] * n[0] + v[1] * n[1];
            }
        }
        for t in 0..s.n_head() {
            let b = [0.2, 0.5, 0.3];
            let got = s.velocity_at(&x, t, &b);
            let want = u(s.mesh.map_point(t, &b));
            assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
            assert!((s.divergence(&x, t) - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_validation_and_symmetry() {
        let (s, p) = setup(3, 3);
        let k = iso(&s, 1.0);
        let a = assemble_darcy_matrix(&s, 1.0, &k, 1.0, 2.0, &p).unwrap();
        assert!(a.max_asymmetry() <= 1e-12);
        assert!(assemble_darcy_matrix(&s, 0.0, &k, 1.0, 2.0, &p).is_err());
        assert!(assemble_darcy_matrix(&s, 1.0, &k, 1.0, 0.0, &p).is_err());
        let mut bad = k.clone();
        bad[4] = Sym2::diag(1.0, -1.0);
        assert!(matches!(assemble_darcy_matrix(&s, 1.0, &bad, 1.0, 2.0, &p), Err(Error::NotSpd { .. })));
    }

    #[test]
    fn robin_edge_block() {
        let (s, p) = setup(1, 1);
        let k = iso(&s, 1.0);
        let with = assemble_darcy_matrix(&s, 1.0, &k, 1.0, 3.0, &p).unwrap();
        let without = assemble_darcy_matrix(&s, 1.0, &k, 1.0, 1e-300, &p).unwrap();
        let d = s.interface_dofs();
        let want = [[2.0, 1.0], [1.0, 2.0]];
        for a in 0..2 {
            for c in 0..2 {
                let diff = with.get(d[a], d[c]) - without.get(d[a], d[c]);
                assert!((diff - 3.0 / 6.0 * want[a][c]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn div_div_block_matches_elementwise_divergence() {
        let (s, p) = setup(2, 2);
        let kinv = iso(&s, 1.0);
        let a1 = assemble_darcy_matrix(&s, 1.0, &kinv, 1.0, 1.0, &p).unwrap();
        let a2 = assemble_darcy_matrix(&s, 1.0, &kinv, 2.0, 1.0, &p).unwrap();
        let u: Vec<f64> = (0..s.n_dofs()).map(|i| if i < s.n_velocity() { (i as f64 * 0.37).sin() } else { 0.0 }).collect();
        let d: Vec<f64> = a2.mul_vec(&u).unwrap().iter().zip(a1.mul_vec(&u).unwrap()).map(|(a, b)| a - b).collect();
        let quad: f64 = u.iter().zip(&d).map(|(a, b)| a * b).sum();
        let want: f64 = (0..s.n_head()).map(|t| s.elements[t].area * s.divergence(&u, t).powi(2)).sum();
        assert!((quad - want).abs() < 1e-12 * (1.0 + want));
    }

    #[test]
    fn source_load_on_constant() {
        let (s, _) = setup(1, 1);
        let f: ScalarField = Arc::new(|_| 1.0);
        let r = s.source_load(&f, 1.0, 0.5);
        for t in 0..2 {
            let a = s.elements[t].area;
            assert!((r[s.head_dof(t)] + a).abs() < 1e-14);
        }
        let zero: ScalarField = Arc::new(|_| 0.0);
        assert!(s.source_load(&zero, 1.0, 0.5).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solution_satisfies_mass_balance() {
        let (s, p) = setup(4, 4);
        let op = assemble_darcy_operator(&s, 1.0, iso(&s, 0.7), 0.7, 2.0, &p, None).unwrap();
        let mut r = vec![0.0; s.n_dofs()];
        s.add_interface_load(&p, &TraceFunction::constant(p.len(), 0.3), &mut r);
        let u_b: VectorField = Arc::new(|p| [p[1], -p[0]]);
        let fixed = s.flux_values(&u_b);
        let xf = op.reduced.factor.solve(&op.reduced.lifted_rhs(&r, &fixed)).unwrap();
        let x = op.reduced.constraints.expand(&xf, &fixed);
        for t in 0..s.n_head() {
            assert!(s.divergence(&x, t).abs() <= 1e-9);
        }
        let ax = op.reduced.matrix.mul_vec(&x).unwrap();
        let res: Vec<f64> = op.reduced.constraints.free_dofs().iter().map(|&i| ax[i] - r[i]).collect();
        assert!(norm2(&res) <= 1e-10);
    }

    #[test]
    fn lag_vanishes_for_zero_deviation() {
        let (s, _) = setup(2, 2);
        let u: Vec<f64> = (0..s.n_dofs()).map(|i| i as f64).collect();
        let mut r = vec![0.0; s.n_dofs()];
        let k = iso(&s, 0.3);
        s.add_lag(&u, Some((&k, &k)), 0.0, 1.0, &mut r);
        assert!(r.iter().all(|&v| v == 0.0));
        s.add_lag(&u, None, 0.5, 1.0, &mut r);
        assert!(r.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn lag_equals_matrix_difference() {
        let (s, p) = setup(3, 2);
        let k1 = iso(&s, 1.0);
        let k2: Vec<Sym2> = s.quadrature_points().iter().map(|q| Sym2::diag(2.0 + q[1], 1.5)).collect();
        let a1 = assemble_darcy_matrix(&s, 1.3, &k1, 0.4, 1.0, &p).unwrap();
        let a2 = assemble_darcy_matrix(&s, 1.3, &k2, 0.9, 1.0, &p).unwrap();
        let u: Vec<f64> = (0..s.n_dofs()).map(|i| if i < s.n_velocity() { ((i * 5 % 7) as f64 - 3.0) / 2.0 } else { 0.0 }).collect();
        let mut r = vec![0.0; s.n_dofs()];
        s.add_lag(&u, Some((&k2, &k1)), 0.5, 1.3, &mut r);
        let y2 = a2.mul_vec(&u).unwrap();
        let y1 = a1.mul_vec(&u).unwrap();
        for i in 0..s.n_velocity() {
            assert!((r[i] + (y2[i] - y1[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn head_load_sign() {
        // on the bottom edge the outward normal is (0,-1)
        let md = build_rect_mesh(Rect::new(0.0, 1.0, -1.0, 0.0).unwrap(), 1, 1, SideTags::porous()).unwrap();
        let s = build_darcy_space(Arc::new(md), &BoundaryConditions::channel());
        let phi: ScalarField = Arc::new(|_| 2.0);
        let mut r = vec![0.0; s.n_dofs()];
        s.add_head_load(&phi, 1.0, &mut r);
        let e = s.mesh.edges_with_tag(BoundaryTag::Bottom).next().unwrap();
        let n = edge_normal(&s.mesh, e);
        // the load equals -g phi * (l/2) * (n_e . n_out) per endpoint
        let sign = -n[1];
        assert!((r[2 * e] + 2.0 * 0.5 * sign).abs() < 1e-14);
        assert!((r[2 * e + 1] + 2.0 * 0.5 * sign).abs() < 1e-14);
    }
}
