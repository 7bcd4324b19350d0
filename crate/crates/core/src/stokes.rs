//! MINI element (P1 plus cubic bubble / P1) for the Robin Stokes subproblem.
//!
//! Dof layout: velocity component `c` occupies `[c * n_u, (c + 1) * n_u)` with vertex
//! dofs first and one bubble per triangle after them (`n_u = n_v + n_t`); pressure
//! dofs follow at `2 * n_u + v`.

use std::sync::Arc;

use crate::bc::{BoundaryConditions, Constraints, ReducedOperator};
use crate::conductivity::VectorField;
use crate::error::{invalid, Result};
use crate::interface::TraceFunction;
use crate::mesh::{InterfacePairing, Mesh};
use crate::quadrature::TriangleRule;
use crate::sparse::{SparseMatrix, SymbolicFactorization, TripletBuilder};

#[derive(Debug, Clone)]
pub struct StokesSpace {
    pub mesh: Arc<Mesh>,
    n_v: usize,
    n_t: usize,
    essential: Vec<bool>,
    interface_vertices: Vec<usize>,
}

pub fn build_stokes_space(mesh: Arc<Mesh>, bc: &BoundaryConditions) -> StokesSpace {
    let (n_v, n_t) = (mesh.n_vertices(), mesh.n_triangles());
    let n_u = n_v + n_t;
    let mut essential = vec![false; 2 * n_u + n_v];
    let mut on_interface = vec![false; n_v];
    for e in &mesh.edges {
        let Some(tag) = e.tag else { continue };
        for &v in &e.vertices {
            if bc.is_stokes_dirichlet(tag) {
                essential[v] = true;
                essential[n_u + v] = true;
            } else if tag == crate::mesh::BoundaryTag::Interface {
                on_interface[v] = true;
            }
        }
    }
    let interface_vertices = (0..n_v).filter(|&v| on_interface[v]).collect();
    StokesSpace { mesh, n_v, n_t, essential, interface_vertices }
}

/// Values and gradients of the four scalar basis functions at a barycentric point.
#[inline]
fn mini_basis(l: &[f64; 3], g: &[[f64; 2]; 3]) -> ([f64; 4], [[f64; 2]; 4]) {
    let b = 27.0 * l[0] * l[1] * l[2];
    let gb = [
        27.0 * (l[1] * l[2] * g[0][0] + l[0] * l[2] * g[1][0] + l[0] * l[1] * g[2][0]),
        27.0 * (l[1] * l[2] * g[0][1] + l[0] * l[2] * g[1][1] + l[0] * l[1] * g[2][1]),
    ];
    ([l[0], l[1], l[2], b], [g[0], g[1], g[2], gb])
}

impl StokesSpace {
    pub fn n_u(&self) -> usize {
        self.n_v + self.n_t
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_u()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_v
    }

    pub fn n_dofs(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    pub fn velocity_dof(&self, comp: usize, vertex: usize) -> usize {
        comp * self.n_u() + vertex
    }

    pub fn bubble_dof(&self, comp: usize, tri: usize) -> usize {
        comp * self.n_u() + self.n_v + tri
    }

    pub fn pressure_dof(&self, vertex: usize) -> usize {
        self.n_velocity() + vertex
    }

    pub fn is_bubble(&self, dof: usize) -> bool {
        dof < self.n_velocity() && dof % self.n_u() >= self.n_v
    }

    pub fn is_essential(&self, dof: usize) -> bool {
        self.essential[dof]
    }

    pub fn interface_vertices(&self) -> &[usize] {
        &self.interface_vertices
    }

    pub fn constraints(&self) -> Constraints {
        Constraints::new(self.essential.clone())
    }

    /// Local scalar dofs of triangle `t` (three vertices, then the bubble) for component `c`.
    fn local_dofs(&self, t: usize, c: usize) -> [usize; 4] {
        let [a, b, d] = self.mesh.triangles[t];
        let off = c * self.n_u();
        [off + a, off + b, off + d, off + self.n_v + t]
    }

    /// Full-length vector carrying `u_b` at essential vertex dofs and zero elsewhere.
    pub fn dirichlet_values(&self, u_b: &VectorField) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs()];
        for v in 0..self.n_v {
            if self.essential[v] {
                let u = u_b(self.mesh.vertices[v]);
                x[v] = u[0];
                x[self.n_u() + v] = u[1];
            }
        }
        x
    }

    /// Velocity and gradient `grad[c][d] = d u_c / d x_d` inside triangle `t`.
    pub fn velocity_at(&self, x: &[f64], t: usize, bary: &[f64; 3]) -> ([f64; 2], [[f64; 2]; 2]) {
        let g = self.mesh.barycentric_gradients(t);
        let (phi, grad) = mini_basis(bary, &g);
        let mut u = [0.0; 2];
        let mut du = [[0.0; 2]; 2];
        for c in 0..2 {
            for (k, dof) in self.local_dofs(t, c).into_iter().enumerate() {
                u[c] += x[dof] * phi[k];
                du[c][0] += x[dof] * grad[k][0];
                du[c][1] += x[dof] * grad[k][1];
            }
        }
        (u, du)
    }

    pub fn pressure_at(&self, x: &[f64], t: usize, bary: &[f64; 3]) -> f64 {
        let tri = self.mesh.triangles[t];
        (0..3).map(|k| x[self.pressure_dof(tri[k])] * bary[k]).sum()
    }

    /// `(u . n_S, u . tau)` at the endpoints of every interface pair.
    pub fn traces(&self, x: &[f64], pairing: &InterfacePairing) -> (TraceFunction, TraceFunction) {
        let mut normal = TraceFunction::zeros(pairing.len());
        let mut tangential = TraceFunction::zeros(pairing.len());
        for (k, p) in pairing.pairs.iter().enumerate() {
            for e in 0..2 {
                let v = p.stokes_vertices[e];
                let u = [x[v], x[self.n_u() + v]];
                normal.values[k][e] = u[0] * p.normal[0] + u[1] * p.normal[1];
                tangential.values[k][e] = u[0] * p.tangent[0] + u[1] * p.tangent[1];
            }
        }
        (normal, tangential)
    }

    /// Mean of the pressure over the domain.
    pub fn pressure_mean(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut area = 0.0;
        for t in 0..self.n_t {
            let a = self.mesh.triangle_area(t);
            let tri = self.mesh.triangles[t];
            total += a * (0..3).map(|k| x[self.pressure_dof(tri[k])]).sum::<f64>() / 3.0;
            area += a;
        }
        total / area
    }

    /// Integrals of the pressure basis functions, as a row over all dofs.
    pub fn pressure_mass_row(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_dofs()];
        for t in 0..self.n_t {
            let a = self.mesh.triangle_area(t) / 3.0;
            for &v in &self.mesh.triangles[t] {
                c[self.pressure_dof(v)] += a;
            }
        }
        c
    }

    /// Add `c` to every pressure dof.
    pub fn shift_pressure(&self, x: &mut [f64], c: f64) {
        for v in 0..self.n_v {
            x[self.pressure_dof(v)] += c;
        }
    }

    /// Velocity mass matrix (both components, bubbles included).
    pub fn velocity_mass(&self) -> SparseMatrix {
        let rule = TriangleRule::degree6();
        let mut b = TripletBuilder::with_capacity(self.n_velocity(), self.n_velocity(), 32 * self.n_t);
        for t in 0..self.n_t {
            let area = self.mesh.triangle_area(t);
            let g = self.mesh.barycentric_gradients(t);
            let mut m = [[0.0; 4]; 4];
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let (phi, _) = mini_basis(l, &g);
                for i in 0..4 {
                    for j in 0..4 {
                        m[i][j] += w * area * phi[i] * phi[j];
                    }
                }
            }
            for c in 0..2 {
                let d = self.local_dofs(t, c);
                for i in 0..4 {
                    for j in 0..4 {
                        b.push(d[i], d[j], m[i][j]);
                    }
                }
            }
        }
        b.build().expect("valid mass matrix")
    }

    /// `(f, v)` over all dofs; pressure rows are zero.
    pub fn load(&self, f: &VectorField) -> Vec<f64> {
        let rule = TriangleRule::degree6();
        let mut r = vec![0.0; self.n_dofs()];
        for t in 0..self.n_t {
            let area = self.mesh.triangle_area(t);
            let g = self.mesh.barycentric_gradients(t);
            let d = [self.local_dofs(t, 0), self.local_dofs(t, 1)];
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let fx = f(self.mesh.map_point(t, l));
                if fx == [0.0, 0.0] {
                    continue;
                }
                let (phi, _) = mini_basis(l, &g);
                for c in 0..2 {
                    for k in 0..4 {
                        r[d[c][k]] += w * area * fx[c] * phi[k];
                    }
                }
            }
        }
        r
    }

    /// Add `<g_n, v . n> + <g_t, v . tau>` on the interface to `r`.
    pub fn add_interface_load(&self, pairing: &InterfacePairing, g_n: &TraceFunction, g_t: &TraceFunction, r: &mut [f64]) {
        for (k, p) in pairing.pairs.iter().enumerate() {
            let mn = g_n.moments(k, p.length);
            let mt = g_t.moments(k, p.length);
            for e in 0..2 {
                let v = p.stokes_vertices[e];
                for c in 0..2 {
                    r[self.velocity_dof(c, v)] += mn[e] * p.normal[c] + mt[e] * p.tangent[c];
                }
            }
        }
    }
}

/// Saddle-point matrix of the Robin subproblem over all dofs (essential rows included).
pub fn assemble_stokes_matrix(
    space: &StokesSpace,
    nu: f64,
    delta_s: f64,
    xi: f64,
    pairing: &InterfacePairing,
) -> Result<SparseMatrix> {
    if !(nu > 0.0) {
        return Err(invalid("viscosity must be positive"));
    }
    if !(delta_s > 0.0) {
        return Err(invalid("Stokes Robin parameter must be positive"));
    }
    if !(xi >= 0.0) {
        return Err(invalid("Beavers-Joseph coefficient must be non-negative"));
    }
    let mut b = assemble_volume(space, nu);
    add_interface_block(space, pairing, delta_s, xi, &mut b);
    b.build()
}

/// Viscous and divergence blocks.
pub(crate) fn assemble_volume(space: &StokesSpace, nu: f64) -> TripletBuilder {
    let n = space.n_dofs();
    let mesh = &space.mesh;
    let rule = TriangleRule::degree4();
    let mut b = TripletBuilder::with_capacity(n, n, 112 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.triangle_area(t);
        let g = mesh.barycentric_gradients(t);
        let mut a = [[[[0.0; 4]; 4]; 2]; 2];
        let mut div = [[[0.0; 4]; 2]; 3];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let wa = w * area;
            let (_, gr) = mini_basis(l, &g);
            for c in 0..2 {
                for d in 0..2 {
                    for k in 0..4 {
                        for m in 0..4 {
                            let lap = if c == d { gr[k][0] * gr[m][0] + gr[k][1] * gr[m][1] } else { 0.0 };
                            a[c][d][k][m] += wa * nu * (lap + gr[k][d] * gr[m][c]);
                        }
                    }
                }
            }
            for i in 0..3 {
                for d in 0..2 {
                    for m in 0..4 {
                        div[i][d][m] += wa * l[i] * gr[m][d];
                    }
                }
            }
        }
        let dofs = [space.local_dofs(t, 0), space.local_dofs(t, 1)];
        for c in 0..2 {
            for d in 0..2 {
                for k in 0..4 {
                    for m in 0..4 {
                        // trial (c, k), test (d, m)
                        b.push(dofs[d][m], dofs[c][k], a[c][d][k][m]);
                    }
                }
            }
        }
        let tri = mesh.triangles[t];
        for i in 0..3 {
            let pd = space.pressure_dof(tri[i]);
            for d in 0..2 {
                for m in 0..4 {
                    b.push(pd, dofs[d][m], -div[i][d][m]);
                    b.push(dofs[d][m], pd, -div[i][d][m]);
                }
            }
        }
    }
    b
}

pub(crate) fn add_interface_block(space: &StokesSpace, pairing: &InterfacePairing, delta_s: f64, xi: f64, b: &mut TripletBuilder) {
    for p in &pairing.pairs {
        let m = [[p.length / 3.0, p.length / 6.0], [p.length / 6.0, p.length / 3.0]];
        for ea in 0..2 {
            for eb in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        let w = delta_s * p.normal[c] * p.normal[d] + xi * p.tangent[c] * p.tangent[d];
                        // zeros are kept so the pattern does not depend on the coefficients
                        b.push(
                            space.velocity_dof(d, p.stokes_vertices[eb]),
                            space.velocity_dof(c, p.stokes_vertices[ea]),
                            m[ea][eb] * w,
                        );
                    }
                }
            }
        }
    }
}

/// Append `row` as a last row and column, with a zero corner.
pub fn border(matrix: &SparseMatrix, row: &[f64]) -> Result<SparseMatrix> {
    let n = matrix.n_rows();
    let mut b = TripletBuilder::with_capacity(n + 1, n + 1, matrix.nnz() + 2 * row.len());
    for (i, j, v) in matrix.iter() {
        b.push(i, j, v);
    }
    for (i, &c) in row.iter().enumerate().filter(|(_, &c)| c != 0.0) {
        b.push(i, n, c);
        b.push(n, i, c);
    }
    b.build()
}

/// Factorized Robin Stokes operator on the free dofs.
#[derive(Debug, Clone)]
pub struct StokesOperator {
    pub reduced: ReducedOperator,
    pub nu: f64,
    pub delta_s: f64,
    pub xi: f64,
}

pub fn assemble_stokes_operator(
    space: &StokesSpace,
    nu: f64,
    delta_s: f64,
    xi: f64,
    pairing: &InterfacePairing,
    symbolic: Option<&SymbolicFactorization>,
) -> Result<StokesOperator> {
    let matrix = assemble_stokes_matrix(space, nu, delta_s, xi, pairing)?;
    let reduced = ReducedOperator::new(matrix, space.constraints(), symbolic)?;
    Ok(StokesOperator { reduced, nu, delta_s, xi })
}
