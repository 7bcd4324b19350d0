//! Boundary-condition classification and elimination of essential dofs.

use crate::error::Result;
use crate::mesh::{BoundaryTag, Mesh};
use crate::sparse::{factorize_with, Factorization, SparseMatrix, SymbolicFactorization};

/// Which exterior edges carry essential data in each subdomain.
///
/// Free-flow edges outside `stokes_dirichlet` are traction-free; porous edges outside
/// `darcy_flux` carry a prescribed head (natural condition). The interface is never
/// constrained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryConditions {
    pub stokes_dirichlet: Vec<BoundaryTag>,
    pub darcy_flux: Vec<BoundaryTag>,
}

impl BoundaryConditions {
    /// Velocity prescribed on the whole free-flow exterior, normal flux on the whole porous exterior.
    pub fn enclosed() -> Self {
        Self {
            stokes_dirichlet: vec![BoundaryTag::Wall, BoundaryTag::Inflow, BoundaryTag::Outflow],
            darcy_flux: vec![BoundaryTag::Side, BoundaryTag::Bottom],
        }
    }

    /// Inflow and walls prescribed, outflow traction-free, impermeable sides, head at the bottom.
    pub fn channel() -> Self {
        Self {
            stokes_dirichlet: vec![BoundaryTag::Wall, BoundaryTag::Inflow],
            darcy_flux: vec![BoundaryTag::Side],
        }
    }

    pub fn is_stokes_dirichlet(&self, tag: BoundaryTag) -> bool {
        tag != BoundaryTag::Interface && self.stokes_dirichlet.contains(&tag)
    }

    pub fn is_darcy_flux(&self, tag: BoundaryTag) -> bool {
        tag != BoundaryTag::Interface && self.darcy_flux.contains(&tag)
    }

    pub fn is_darcy_head(&self, tag: BoundaryTag) -> bool {
        tag != BoundaryTag::Interface && !self.darcy_flux.contains(&tag)
    }

    /// True when the coupled problem determines pressure and head only up to a joint constant.
    pub fn has_pressure_nullspace(&self, mesh_s: &Mesh, mesh_d: &Mesh) -> bool {
        let stokes_closed = mesh_s
            .edges
            .iter()
            .filter_map(|e| e.tag)
            .all(|t| t == BoundaryTag::Interface || self.is_stokes_dirichlet(t));
        let darcy_closed = mesh_d
            .edges
            .iter()
            .filter_map(|e| e.tag)
            .all(|t| t == BoundaryTag::Interface || self.is_darcy_flux(t));
        stokes_closed && darcy_closed
    }
}

/// Split of the dofs of a system into free and essential ones.
#[derive(Debug, Clone)]
pub struct Constraints {
    fixed: Vec<bool>,
    free_index: Vec<Option<usize>>,
    fixed_index: Vec<Option<usize>>,
    free: Vec<usize>,
    fixed_list: Vec<usize>,
}

impl Constraints {
    pub fn new(fixed: Vec<bool>) -> Self {
        let mut free_index = vec![None; fixed.len()];
        let mut fixed_index = vec![None; fixed.len()];
        let (mut free, mut fixed_list) = (Vec::new(), Vec::new());
        for (i, &f) in fixed.iter().enumerate() {
            if f {
                fixed_index[i] = Some(fixed_list.len());
                fixed_list.push(i);
            } else {
                free_index[i] = Some(free.len());
                free.push(i);
            }
        }
        Self { fixed, free_index, fixed_index, free, fixed_list }
    }

    pub fn n_dofs(&self) -> usize {
        self.fixed.len()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed[i]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn fixed_dofs(&self) -> &[usize] {
        &self.fixed_list
    }

    pub fn free_index(&self, i: usize) -> Option<usize> {
        self.free_index[i]
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Embed free values; essential entries are copied from `fixed_values`.
    pub fn expand(&self, free: &[f64], fixed_values: &[f64]) -> Vec<f64> {
        let mut x = fixed_values.to_vec();
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = free[k];
        }
        x
    }
}

/// Matrix restricted to free dofs, its factorization, and the coupling to essential dofs.
#[derive(Debug, Clone)]
pub struct ReducedOperator {
    pub constraints: Constraints,
    pub matrix: SparseMatrix,
    pub k_ff: SparseMatrix,
    pub k_fd: SparseMatrix,
    pub factor: Factorization,
}

impl ReducedOperator {
    /// Restrict `matrix`; reuses `symbolic` when given, otherwise analyzes the pattern.
    pub fn new(matrix: SparseMatrix, constraints: Constraints, symbolic: Option<&SymbolicFactorization>) -> Result<Self> {
        let k_ff = matrix.select(&constraints.free_index, constraints.n_free(), &constraints.free_index, constraints.n_free());
        let k_fd = matrix.select(
            &constraints.free_index,
            constraints.n_free(),
            &constraints.fixed_index,
            constraints.fixed_list.len(),
        );
        let factor = match symbolic {
            Some(s) => factorize_with(s, &k_ff)?,
            None => factorize_with(&SymbolicFactorization::analyze(&k_ff)?, &k_ff)?,
        };
        Ok(Self { constraints, matrix, k_ff, k_fd, factor })
    }

    pub fn analyze(&self) -> Result<SymbolicFactorization> {
        SymbolicFactorization::analyze(&self.k_ff)
    }

    /// Free-dof right-hand side `b_f - K_fD x_D`.
    pub fn lifted_rhs(&self, full_rhs: &[f64], fixed_values: &[f64]) -> Vec<f64> {
        let mut b = self.constraints.restrict(full_rhs);
        let xd: Vec<f64> = self.constraints.fixed_list.iter().map(|&i| fixed_values[i]).collect();
        if xd.iter().any(|&v| v != 0.0) {
            self.k_fd.mul_vec_acc(-1.0, &xd, &mut b);
        }
        b
    }
}
