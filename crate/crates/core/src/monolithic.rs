//! The coupled Stokes-Darcy system written directly, with the interface normal
//! stress as a multiplier. It serves as an oracle for converged iterates.
//!
//! Unknowns are laid out as `[u_S, p_S | u_D, phi_D | lambda]`, where `lambda` has the
//! two endpoint values of every interface pair. When the exterior data leave a joint
//! pressure constant free, a last unknown `mu` enforces zero-mean Stokes pressure.
//! Its column also absorbs the small flux incompatibility of interpolated boundary data.

use crate::bc::{Constraints, ReducedOperator};
use crate::darcy::{self, edge_normal};
use crate::ensemble::{Discretization, EnsembleContext, SolveReport};
use crate::error::{Error, Result};
use crate::sparse::{norm2, SparseMatrix, TripletBuilder};
use crate::stokes;

#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub constraints: Constraints,
    /// Essential values, zero at free dofs.
    pub fixed_values: Vec<f64>,
    pub n_stokes: usize,
    pub n_darcy: usize,
    /// Pressure-mean functional over the Stokes dofs, present with the mean multiplier.
    pub mean_row: Option<Vec<f64>>,
}

impl CoupledSystem {
    pub fn n_dofs(&self) -> usize {
        self.matrix.n_rows()
    }

    /// Concatenate subdomain vectors and the multiplier.
    pub fn stack(&self, stokes: &[f64], darcy: &[f64], lambda: &crate::interface::TraceFunction) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_dofs());
        x.extend_from_slice(stokes);
        x.extend_from_slice(darcy);
        x.extend(lambda.values.iter().flatten());
        if let Some(c) = &self.mean_row {
            x.push(0.0);
            // least-squares multiplier for the given iterate
            if let Ok(ax) = self.matrix.mul_vec(&x) {
                let (num, den) = c.iter().enumerate().fold((0.0, 0.0), |(n, d), (i, &ci)| (n + ci * (ax[i] - self.rhs[i]), d + ci * ci));
                if den > 0.0 {
                    *x.last_mut().expect("multiplier slot") = -num / den;
                }
            }
        }
        x
    }

    /// `|A x - b|_2 / |b - A x_fixed|_2` over free rows; the plain residual norm when
    /// the lifted right-hand side vanishes.
    pub fn relative_residual(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_dofs() {
            return Err(Error::DimensionMismatch { expected: self.n_dofs(), found: x.len() });
        }
        let ax = self.matrix.mul_vec(x)?;
        let a0 = self.matrix.mul_vec(&self.fixed_values)?;
        let free = self.constraints.free_dofs();
        let r: Vec<f64> = free.iter().map(|&i| ax[i] - self.rhs[i]).collect();
        let b: Vec<f64> = free.iter().map(|&i| self.rhs[i] - a0[i]).collect();
        let (rn, bn) = (norm2(&r), norm2(&b));
        Ok(if bn > 0.0 { rn / bn } else { rn })
    }

    /// Direct sparse solve of the coupled system.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let op = ReducedOperator::new(self.matrix.clone(), self.constraints.clone(), None)?;
        let xf = op.factor.solve(&op.lifted_rhs(&self.rhs, &self.fixed_values))?;
        let c = &self.constraints;
        Ok(c.expand(&xf, &self.fixed_values))
    }
}

fn push_all(dst: &mut TripletBuilder, m: &SparseMatrix, off: usize) {
    for (i, j, v) in m.iter() {
        dst.push(off + i, off + j, v);
    }
}

/// Coupled system of sample `j` of `ctx`, with its own coefficients throughout.
pub fn assemble_coupled(ctx: &EnsembleContext, disc: &Discretization, j: usize) -> Result<CoupledSystem> {
    let sample = ctx.samples.get(j).ok_or(Error::MissingSample(j))?;
    let d = &ctx.derived[j];
    let (st, da, pairing) = (&disc.stokes, &disc.darcy, &disc.pairing);
    let g = ctx.physics.g;
    let (ns, nd, nl) = (st.n_dofs(), da.n_dofs(), 2 * pairing.len());
    let n = ns + nd + nl + usize::from(disc.pressure_nullspace);

    let mut sb = stokes::assemble_volume(st, ctx.physics.nu);
    stokes::add_interface_block(st, pairing, 0.0, d.xi, &mut sb);
    let a_s = sb.build()?;
    let a_d = darcy::assemble_volume(da, g, &d.kinv, d.k_min)?.build()?;

    let mut b = TripletBuilder::with_capacity(n, n, a_s.nnz() + a_d.nnz() + 40 * pairing.len());
    push_all(&mut b, &a_s, 0);
    push_all(&mut b, &a_d, ns);

    let mut rhs = vec![0.0; n];
    rhs[..ns].copy_from_slice(&st.load(&sample.f_s));
    let mut r_d = da.source_load(&sample.f_d, g, d.k_min);
    da.add_head_load(&sample.head_boundary, g, &mut r_d);
    rhs[ns..ns + nd].copy_from_slice(&r_d);

    let gz = g * ctx.physics.z;
    for (k, p) in pairing.pairs.iter().enumerate() {
        let m = [[p.length / 3.0, p.length / 6.0], [p.length / 6.0, p.length / 3.0]];
        let n_e = edge_normal(&da.mesh, p.darcy_edge);
        let sign = -(n_e[0] * p.normal[0] + n_e[1] * p.normal[1]);
        let tri = da.mesh.triangles[p.darcy_triangle];
        // tangential Darcy velocity at both endpoints, per local dof
        let tau_d: Vec<([usize; 6], [f64; 6])> = (0..2)
            .map(|e| {
                let mut bary = [0.0; 3];
                bary[tri.iter().position(|&w| w == p.darcy_vertices[e]).expect("pair vertex in Darcy triangle")] = 1.0;
                let (dofs, vals) = da.local_basis(p.darcy_triangle, &bary);
                (dofs, vals.map(|v| v[0] * p.tangent[0] + v[1] * p.tangent[1]))
            })
            .collect();
        for a in 0..2 {
            let dd = ns + da.edge_dof(p.darcy_edge, p.darcy_vertices[a]);
            for e in 0..2 {
                let l = ns + nd + 2 * k + e;
                for c in 0..2 {
                    let sd = st.velocity_dof(c, p.stokes_vertices[a]);
                    b.push(sd, l, m[a][e] * p.normal[c]);
                    b.push(l, sd, m[a][e] * p.normal[c]);
                }
                b.push(dd, l, sign * m[a][e]);
                b.push(l, dd, sign * m[a][e]);
                rhs[dd] -= sign * m[a][e] * gz;
            }
            for c in 0..2 {
                let sd = st.velocity_dof(c, p.stokes_vertices[a]);
                for (e, (dofs, tv)) in tau_d.iter().enumerate() {
                    for i in 0..6 {
                        b.push(sd, ns + dofs[i], -d.xi * p.tangent[c] * m[a][e] * tv[i]);
                    }
                }
            }
        }
    }
    let mean_row = disc.pressure_nullspace.then(|| {
        let c = st.pressure_mass_row();
        for (i, &ci) in c.iter().enumerate().filter(|(_, &ci)| ci != 0.0) {
            b.push(i, n - 1, ci);
            b.push(n - 1, i, ci);
        }
        c
    });
    let matrix = b.build()?;

    let (cs, cd) = (st.constraints(), da.constraints());
    let mut fixed = vec![false; n];
    for i in 0..ns {
        fixed[i] = cs.is_fixed(i);
    }
    for i in 0..nd {
        fixed[ns + i] = cd.is_fixed(i);
    }
    let mut fixed_values = vec![0.0; n];
    fixed_values[..ns].copy_from_slice(&st.dirichlet_values(&sample.stokes_boundary));
    fixed_values[ns..ns + nd].copy_from_slice(&da.flux_values(&sample.darcy_boundary));
    Ok(CoupledSystem { matrix, rhs, constraints: Constraints::new(fixed), fixed_values, n_stokes: ns, n_darcy: nd, mean_row })
}

/// Relative coupled residual of every sample's final iterate.
pub fn check_converged_residual(report: &SolveReport, ctx: &EnsembleContext, disc: &Discretization) -> Result<Vec<f64>> {
    if report.samples.len() != ctx.n_samples() {
        return Err(Error::DimensionMismatch { expected: ctx.n_samples(), found: report.samples.len() });
    }
    report
        .samples
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let sys = assemble_coupled(ctx, disc, j)?;
            sys.relative_residual(&sys.stack(&s.stokes, &s.darcy, &s.normal_stress))
        })
        .collect()
}
