//! Error norms against exact fields and observed convergence orders.

use crate::conductivity::{ScalarField, VectorField};
use crate::darcy::DarcySpace;
use crate::error::{invalid, Error, Result};
use crate::mesh::Point;
use crate::quadrature::TriangleRule;
use crate::stokes::StokesSpace;

/// Absolute error and the norm of the exact field it is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorm {
    pub error: f64,
    pub exact: f64,
}

impl ErrorNorm {
    /// `error / exact`, or `None` when the exact field vanishes.
    pub fn relative(&self) -> Option<f64> {
        (self.exact > 0.0).then(|| self.error / self.exact)
    }

    /// Relative error, falling back to the absolute error for a zero exact field.
    pub fn reported(&self) -> (f64, bool) {
        match self.relative() {
            Some(r) => (r, false),
            None => (self.error, true),
        }
    }
}

pub type GradientField = std::sync::Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

/// Exact free-flow fields.
#[derive(Clone)]
pub struct StokesExact {
    pub u: VectorField,
    pub grad_u: GradientField,
    pub p: ScalarField,
}

/// Exact porous-medium fields.
#[derive(Clone)]
pub struct DarcyExact {
    pub u: VectorField,
    pub div_u: ScalarField,
    pub phi: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StokesErrors {
    pub u_l2: ErrorNorm,
    pub u_h1: ErrorNorm,
    pub p_l2: ErrorNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DarcyErrors {
    pub u_l2: ErrorNorm,
    pub u_hdiv: ErrorNorm,
    pub phi_l2: ErrorNorm,
}

/// L2 and full H1 velocity errors and the L2 pressure error.
pub fn stokes_errors(space: &StokesSpace, x: &[f64], exact: &StokesExact) -> StokesErrors {
    let rule = TriangleRule::degree6();
    let mesh = &space.mesh;
    let mut acc = [0.0f64; 6];
    for t in 0..mesh.n_triangles() {
        let area = mesh.triangle_area(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let q = mesh.map_point(t, l);
            let wa = w * area;
            let (u, du) = space.velocity_at(x, t, l);
            let (ue, due) = ((exact.u)(q), (exact.grad_u)(q));
            let pe = (exact.p)(q);
            let ph = space.pressure_at(x, t, l);
            for c in 0..2 {
                acc[0] += wa * (u[c] - ue[c]).powi(2);
                acc[1] += wa * ue[c].powi(2);
                for d in 0..2 {
                    acc[2] += wa * (du[c][d] - due[c][d]).powi(2);
                    acc[3] += wa * due[c][d].powi(2);
                }
            }
            acc[4] += wa * (ph - pe).powi(2);
            acc[5] += wa * pe.powi(2);
        }
    }
    StokesErrors {
        u_l2: ErrorNorm { error: acc[0].sqrt(), exact: acc[1].sqrt() },
        u_h1: ErrorNorm { error: (acc[0] + acc[2]).sqrt(), exact: (acc[1] + acc[3]).sqrt() },
        p_l2: ErrorNorm { error: acc[4].sqrt(), exact: acc[5].sqrt() },
    }
}

/// L2 and H(div) velocity errors and the L2 head error.
pub fn darcy_errors(space: &DarcySpace, x: &[f64], exact: &DarcyExact) -> DarcyErrors {
    let rule = TriangleRule::degree6();
    let mesh = &space.mesh;
    let mut acc = [0.0f64; 6];
    for t in 0..mesh.n_triangles() {
        let area = mesh.triangle_area(t);
        let div = space.divergence(x, t);
        let head = space.head(x, t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let q = mesh.map_point(t, l);
            let wa = w * area;
            let u = space.velocity_at(x, t, l);
            let ue = (exact.u)(q);
            let de = (exact.div_u)(q);
            let pe = (exact.phi)(q);
            acc[0] += wa * ((u[0] - ue[0]).powi(2) + (u[1] - ue[1]).powi(2));
            acc[1] += wa * (ue[0].powi(2) + ue[1].powi(2));
            acc[2] += wa * (div - de).powi(2);
            acc[3] += wa * de.powi(2);
            acc[4] += wa * (head - pe).powi(2);
            acc[5] += wa * pe.powi(2);
        }
    }
    DarcyErrors {
        u_l2: ErrorNorm { error: acc[0].sqrt(), exact: acc[1].sqrt() },
        u_hdiv: ErrorNorm { error: (acc[0] + acc[2]).sqrt(), exact: (acc[1] + acc[3]).sqrt() },
        phi_l2: ErrorNorm { error: acc[4].sqrt(), exact: acc[5].sqrt() },
    }
}

/// L2 norm of the difference of two discrete Stokes velocities.
pub fn stokes_velocity_l2_diff(space: &StokesSpace, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let zero = StokesExact {
        u: crate::conductivity::zero_vector(),
        grad_u: std::sync::Arc::new(|_| [[0.0; 2]; 2]),
        p: crate::conductivity::zero_scalar(),
    };
    stokes_errors(space, &d, &zero).u_l2.error
}

/// L2 norm of the difference of two discrete Darcy velocities.
pub fn darcy_velocity_l2_diff(space: &DarcySpace, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let zero = DarcyExact {
        u: crate::conductivity::zero_vector(),
        div_u: crate::conductivity::zero_scalar(),
        phi: crate::conductivity::zero_scalar(),
    };
    darcy_errors(space, &d, &zero).u_l2.error
}

/// Nodal interpolant: vertex values, zero bubbles, vertex pressures.
pub fn interpolate_stokes(space: &StokesSpace, u: &VectorField, p: &ScalarField) -> Vec<f64> {
    let mut x = vec![0.0; space.n_dofs()];
    for (v, &pt) in space.mesh.vertices.iter().enumerate() {
        let val = u(pt);
        x[space.velocity_dof(0, v)] = val[0];
        x[space.velocity_dof(1, v)] = val[1];
        x[space.pressure_dof(v)] = p(pt);
    }
    x
}

/// Nodal flux interpolant with centroid heads.
pub fn interpolate_darcy(space: &DarcySpace, u: &VectorField, phi: &ScalarField) -> Vec<f64> {
    let mut x = space.flux_values_all(u);
    for t in 0..space.n_head() {
        x[space.head_dof(t)] = phi(space.mesh.map_point(t, &[1.0 / 3.0; 3]));
    }
    x
}

/// `order_k = log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
pub fn convergence_order(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() {
        return Err(Error::DimensionMismatch { expected: hs.len(), found: errors.len() });
    }
    if errors.len() < 2 {
        return Err(invalid("need at least two levels"));
    }
    if errors.iter().any(|&e| !(e > 0.0)) || hs.iter().any(|&h| !(h > 0.0)) {
        return Err(invalid("errors and mesh sizes must be positive"));
    }
    Ok(errors.windows(2).zip(hs.windows(2)).map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect())
}
