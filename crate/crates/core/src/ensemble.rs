//! Ensemble Robin-Robin domain decomposition: one pair of factorized subdomain
//! operators built from ensemble means serves every sample; per-sample deviations
//! enter the right-hand sides through lagged terms.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bc::BoundaryConditions;
use crate::conductivity::{zero_scalar, zero_vector, Conductivity, ScalarField, Sym2, VectorField};
use crate::darcy::{assemble_darcy_matrix, build_darcy_space, DarcyOperator, DarcySpace};
use crate::error::{invalid, Error, Result};
use crate::interface::{init_state, stopping_norm, InterfaceTraces, RobinTraceState, TraceFunction, UpdateParams};
use crate::mesh::{pair_interface, InterfacePairing, Mesh};
use crate::sparse::{factorization_count, SparseMatrix, SymbolicFactorization};
use crate::stokes::{assemble_stokes_matrix, border, build_stokes_space, StokesOperator, StokesSpace};
use crate::bc::{Constraints, ReducedOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub nu: f64,
    pub g: f64,
    pub z: f64,
    pub alpha: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { nu: 1.0, g: 1.0, z: 0.0, alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinParams {
    pub delta_s: f64,
    pub delta_d: f64,
}

/// When the sweep ends: once every sample is below the tolerance in the same sweep,
/// or sample by sample, freezing each one at its first crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    #[default]
    AllSamples,
    PerSample,
}

/// Coefficients and data of one realization.
#[derive(Clone)]
pub struct SampleParams {
    pub conductivity: Conductivity,
    pub f_s: VectorField,
    pub f_d: ScalarField,
    /// Velocity imposed on the essential free-flow boundary.
    pub stokes_boundary: VectorField,
    /// Velocity whose normal component is imposed on the essential porous boundary.
    pub darcy_boundary: VectorField,
    /// Head on the natural porous boundary.
    pub head_boundary: ScalarField,
}

impl fmt::Debug for SampleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleParams").field("conductivity", &self.conductivity).finish_non_exhaustive()
    }
}

impl SampleParams {
    /// No forcing and homogeneous boundary data.
    pub fn homogeneous(conductivity: Conductivity) -> Self {
        Self {
            conductivity,
            f_s: zero_vector(),
            f_d: zero_scalar(),
            stokes_boundary: zero_vector(),
            darcy_boundary: zero_vector(),
            head_boundary: zero_scalar(),
        }
    }
}

/// Meshes, spaces and mass matrices shared by every run on one geometry.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh_s: Arc<Mesh>,
    pub mesh_d: Arc<Mesh>,
    pub pairing: InterfacePairing,
    pub bc: BoundaryConditions,
    pub stokes: StokesSpace,
    pub darcy: DarcySpace,
    pub mass_s: SparseMatrix,
    pub mass_d: SparseMatrix,
    pub pressure_nullspace: bool,
}

impl Discretization {
    pub fn new(mesh_s: Mesh, mesh_d: Mesh, bc: BoundaryConditions) -> Result<Self> {
        let pairing = pair_interface(&mesh_s, &mesh_d)?;
        let pressure_nullspace = bc.has_pressure_nullspace(&mesh_s, &mesh_d);
        let (mesh_s, mesh_d) = (Arc::new(mesh_s), Arc::new(mesh_d));
        let stokes = build_stokes_space(mesh_s.clone(), &bc);
        let darcy = build_darcy_space(mesh_d.clone(), &bc);
        let mass_s = stokes.velocity_mass();
        let mass_d = darcy.velocity_mass();
        Ok(Self { mesh_s, mesh_d, pairing, bc, stokes, darcy, mass_s, mass_d, pressure_nullspace })
    }

    pub fn h(&self) -> f64 {
        self.mesh_s.h.max(self.mesh_d.h)
    }
}

/// Quantities derived from one sample's conductivity.
#[derive(Debug, Clone)]
pub struct SampleDerived {
    /// Beavers-Joseph coefficient `alpha / sqrt(tau . K tau)`, averaged over the interface.
    pub xi: f64,
    /// Extreme eigenvalues of `K^{-1}` over the porous quadrature points.
    pub k_min: f64,
    pub k_max: f64,
    /// `K^{-1}` at the porous quadrature points.
    pub kinv: Arc<Vec<Sym2>>,
}

#[derive(Debug, Clone)]
pub struct EnsembleContext {
    pub samples: Vec<SampleParams>,
    pub derived: Vec<SampleDerived>,
    pub xi_bar: f64,
    pub k_min_bar: f64,
    pub k_max_bar: f64,
    pub kbar: Arc<Vec<Sym2>>,
    pub physics: Physics,
    pub robin: RobinParams,
    pub tol: f64,
    pub max_iters: usize,
    pub stop: StopRule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleDiagnostics {
    pub e_xi: f64,
    pub e_k: f64,
    pub small_perturbation_ok: bool,
}

fn derive_sample(s: &SampleParams, physics: &Physics, disc: &Discretization, qps: &[crate::mesh::Point]) -> Result<SampleDerived> {
    let kinv = qps.iter().map(|&p| s.conductivity.inverse(p)).collect::<Result<Vec<_>>>()?;
    let (mut k_min, mut k_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in &kinv {
        let (lo, hi) = k.eigenvalues();
        k_min = k_min.min(lo);
        k_max = k_max.max(hi);
    }
    let mut xi = 0.0;
    for p in &disc.pairing.pairs {
        let mid = [0.5 * (p.points[0][0] + p.points[1][0]), 0.5 * (p.points[0][1] + p.points[1][1])];
        let k = s.conductivity.tensor(mid);
        let q = k.quad(p.tangent, p.tangent);
        if !(q > 0.0) {
            return Err(Error::NotSpd { x: mid[0], y: mid[1] });
        }
        xi += p.length * physics.alpha / q.sqrt();
    }
    xi /= disc.pairing.length;
    Ok(SampleDerived { xi, k_min, k_max, kinv: Arc::new(kinv) })
}

impl EnsembleContext {
    /// Assemble a context from already derived samples; means are taken in sample order.
    pub fn from_parts(
        samples: Vec<SampleParams>,
        derived: Vec<SampleDerived>,
        physics: Physics,
        robin: RobinParams,
        tol: f64,
        max_iters: usize,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if !(robin.delta_s > 0.0) || !(robin.delta_d > 0.0) {
            return Err(invalid("Robin parameters must be positive"));
        }
        if !(tol > 0.0) || max_iters == 0 {
            return Err(invalid("tolerance and iteration cap must be positive"));
        }
        let j = derived.len() as f64;
        let xi_bar = derived.iter().map(|d| d.xi).sum::<f64>() / j;
        let k_min_bar = derived.iter().map(|d| d.k_min).sum::<f64>() / j;
        let k_max_bar = derived.iter().map(|d| d.k_max).sum::<f64>() / j;
        let nq = derived[0].kinv.len();
        let mut kbar = vec![Sym2::ZERO; nq];
        for d in &derived {
            for (m, k) in kbar.iter_mut().zip(d.kinv.iter()) {
                *m = m.add(k);
            }
        }
        for m in kbar.iter_mut() {
            *m = Sym2([m.0[0] / j, m.0[1] / j, m.0[2] / j]);
        }
        Ok(Self {
            samples,
            derived,
            xi_bar,
            k_min_bar,
            k_max_bar,
            kbar: Arc::new(kbar),
            physics,
            robin,
            tol,
            max_iters,
            stop: StopRule::default(),
        })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    /// Context holding sample `j` alone, so its means are the sample's own values.
    pub fn single(&self, j: usize) -> Result<Self> {
        let s = self.samples.get(j).ok_or(Error::MissingSample(j))?.clone();
        let ctx = Self::from_parts(vec![s], vec![self.derived[j].clone()], self.physics, self.robin, self.tol, self.max_iters)?;
        Ok(ctx.with_stop(self.stop))
    }

    pub fn diagnostics(&self) -> EnsembleDiagnostics {
        let mut e_xi: f64 = 0.0;
        let mut e_k: f64 = 0.0;
        for d in &self.derived {
            e_xi = e_xi.max((d.xi - self.xi_bar).abs());
            let mut dev: f64 = (d.k_min - self.k_min_bar).abs();
            for (k, m) in d.kinv.iter().zip(self.kbar.iter()) {
                dev = dev.max(k.sub(m).max_abs_eigenvalue());
            }
            e_k = e_k.max(dev);
        }
        EnsembleDiagnostics { e_xi, e_k, small_perturbation_ok: self.xi_bar > e_xi && self.k_min_bar > e_k }
    }

    fn update_params(&self, j: usize) -> UpdateParams {
        UpdateParams {
            delta_s: self.robin.delta_s,
            delta_d: self.robin.delta_d,
            g: self.physics.g,
            z: self.physics.z,
            xi: self.derived[j].xi,
        }
    }
}

pub fn make_context(
    samples: Vec<SampleParams>,
    physics: Physics,
    robin: RobinParams,
    tol: f64,
    max_iters: usize,
    disc: &Discretization,
) -> Result<(EnsembleContext, EnsembleDiagnostics)> {
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(physics.nu > 0.0) || !(physics.g > 0.0) || !(physics.alpha >= 0.0) {
        return Err(invalid("physical parameters out of range"));
    }
    let qps = disc.darcy.quadrature_points();
    let derived = samples.par_iter().map(|s| derive_sample(s, &physics, disc, &qps)).collect::<Result<Vec<_>>>()?;
    let ctx = EnsembleContext::from_parts(samples, derived, physics, robin, tol, max_iters)?;
    let diag = ctx.diagnostics();
    if !diag.small_perturbation_ok {
        log::warn!(
            "ensemble violates the small-perturbation conditions (xi_bar {:.3e} vs {:.3e}, k_min_bar {:.3e} vs {:.3e})",
            ctx.xi_bar,
            diag.e_xi,
            ctx.k_min_bar,
            diag.e_k
        );
    }
    Ok((ctx, diag))
}

/// Growth of the stopping norm, relative to the first sweep, at which a sample is
/// declared divergent and frozen.
pub const DIVERGENCE_GROWTH: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub assemble: Duration,
    pub factor: Duration,
    pub solve: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.assemble + self.factor + self.solve
    }

    fn add(&mut self, o: &Timings) {
        self.assemble += o.assemble;
        self.factor += o.factor;
        self.solve += o.solve;
    }
}

#[derive(Debug, Clone)]
pub struct SampleReport {
    /// Sweep at which the stopping norm first fell below the tolerance (the cap otherwise).
    pub iterations: usize,
    pub sweeps: usize,
    pub final_norm: f64,
    pub converged: bool,
    /// The stopping norm grew past `DIVERGENCE_GROWTH` times its first value.
    pub diverged: bool,
    pub norm_history: Vec<f64>,
    /// Full Stokes dof vector (velocity, then pressure).
    pub stokes: Vec<f64>,
    /// Full Darcy dof vector (fluxes, then heads).
    pub darcy: Vec<f64>,
    /// `-n_S . T n_S` on the interface as seen by the last free-flow solve.
    pub normal_stress: TraceFunction,
}

impl SampleReport {
    pub fn stokes_velocity<'a>(&'a self, disc: &Discretization) -> &'a [f64] {
        &self.stokes[..disc.stokes.n_velocity()]
    }

    pub fn stokes_pressure<'a>(&'a self, disc: &Discretization) -> &'a [f64] {
        &self.stokes[disc.stokes.n_velocity()..]
    }

    pub fn darcy_velocity<'a>(&'a self, disc: &Discretization) -> &'a [f64] {
        &self.darcy[..disc.darcy.n_velocity()]
    }

    pub fn darcy_head<'a>(&'a self, disc: &Discretization) -> &'a [f64] {
        &self.darcy[disc.darcy.n_velocity()..]
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub samples: Vec<SampleReport>,
    pub timings: Timings,
    pub factorizations: usize,
    pub sweeps: usize,
}

impl SolveReport {
    pub fn all_converged(&self) -> bool {
        self.samples.iter().all(|s| s.converged)
    }
}

struct Operators {
    stokes: StokesOperator,
    darcy: DarcyOperator,
}

fn build_operators(
    ctx: &EnsembleContext,
    disc: &Discretization,
    symbolic: Option<&(SymbolicFactorization, SymbolicFactorization)>,
    timings: &mut Timings,
) -> Result<Operators> {
    let t0 = Instant::now();
    let ms = assemble_stokes_matrix(&disc.stokes, ctx.physics.nu, ctx.robin.delta_s, ctx.xi_bar, &disc.pairing)?;
    let md = assemble_darcy_matrix(&disc.darcy, ctx.physics.g, &ctx.kbar, ctx.k_min_bar, ctx.robin.delta_d, &disc.pairing)?;
    let t1 = Instant::now();
    timings.assemble += t1 - t0;
    // the Stokes pressure carries the zero-mean multiplier; the head constant follows
    // from the interface conditions
    let (ms, cs) = if disc.pressure_nullspace {
        with_mean_multiplier(&ms, &disc.stokes.constraints(), &disc.stokes.pressure_mass_row())?
    } else {
        (ms, disc.stokes.constraints())
    };
    let rs = ReducedOperator::new(ms, cs, symbolic.map(|s| &s.0))?;
    let rd = ReducedOperator::new(md, disc.darcy.constraints(), symbolic.map(|s| &s.1))?;
    timings.factor += t1.elapsed();
    Ok(Operators {
        stokes: StokesOperator { reduced: rs, nu: ctx.physics.nu, delta_s: ctx.robin.delta_s, xi: ctx.xi_bar },
        darcy: DarcyOperator {
            reduced: rd,
            g: ctx.physics.g,
            delta_d: ctx.robin.delta_d,
            k_min: ctx.k_min_bar,
            kinv: ctx.kbar.as_ref().clone(),
        },
    })
}

/// Border `m` with a zero-mean multiplier on `row`, as one extra free dof.
fn with_mean_multiplier(m: &SparseMatrix, c: &Constraints, row: &[f64]) -> Result<(SparseMatrix, Constraints)> {
    let fixed = (0..c.n_dofs()).map(|i| c.is_fixed(i)).chain([false]).collect();
    Ok((border(m, row)?, Constraints::new(fixed)))
}

/// Per-sample buffers that persist across sweeps.
struct Slot {
    base_s: Vec<f64>,
    base_d: Vec<f64>,
    fixed_s: Vec<f64>,
    fixed_d: Vec<f64>,
    x_s: Vec<f64>,
    x_d: Vec<f64>,
    /// Robin data the latest solve used.
    used_g_s: TraceFunction,
    used_g_d: TraceFunction,
    norms: Vec<f64>,
    first_below: Option<usize>,
    diverged: bool,
    active: bool,
}

fn init_slot(ctx: &EnsembleContext, disc: &Discretization, ops: &Operators, j: usize) -> Slot {
    let s = &ctx.samples[j];
    let (st, da) = (&disc.stokes, &disc.darcy);
    let n_s = ops.stokes.reduced.constraints.n_dofs();
    let mut fixed_s = st.dirichlet_values(&s.stokes_boundary);
    fixed_s.resize(n_s, 0.0);
    let n_d = ops.darcy.reduced.constraints.n_dofs();
    let mut fixed_d = da.flux_values(&s.darcy_boundary);
    fixed_d.resize(n_d, 0.0);
    let mut load_s = st.load(&s.f_s);
    load_s.resize(n_s, 0.0);
    let base_s = ops.stokes.reduced.lifted_rhs(&load_s, &fixed_s);
    let mut rd = da.source_load(&s.f_d, ctx.physics.g, ctx.derived[j].k_min);
    da.add_head_load(&s.head_boundary, ctx.physics.g, &mut rd);
    rd.resize(n_d, 0.0);
    let base_d = ops.darcy.reduced.lifted_rhs(&rd, &fixed_d);
    let n = disc.pairing.len();
    Slot {
        base_s,
        base_d,
        x_s: vec![0.0; st.n_dofs()],
        x_d: vec![0.0; da.n_dofs()],
        fixed_s,
        fixed_d,
        used_g_s: TraceFunction::zeros(n),
        used_g_d: TraceFunction::zeros(n),
        norms: Vec::new(),
        first_below: None,
        diverged: false,
        active: true,
    }
}

/// Free-dof right-hand sides of both subproblems for sample `j` at the current state.
fn sample_rhs(ctx: &EnsembleContext, disc: &Discretization, ops: &Operators, state: &RobinTraceState, slot: &Slot, j: usize) -> (Vec<f64>, Vec<f64>) {
    let st = &state.samples[j];
    let p = &disc.pairing;
    let d = &ctx.derived[j];

    let mut r = vec![0.0; ops.stokes.reduced.constraints.n_dofs()];
    let g_n = st.g_s.scaled(-1.0);
    let g_t = st.g_s_tau.affine(-1.0, &st.traces.stokes_tangential, ctx.xi_bar - d.xi, 0.0);
    disc.stokes.add_interface_load(p, &g_n, &g_t, &mut r);
    let mut b_s = slot.base_s.clone();
    for (b, &i) in b_s.iter_mut().zip(ops.stokes.reduced.constraints.free_dofs()) {
        *b += r[i];
    }

    let mut r = vec![0.0; ops.darcy.reduced.constraints.n_dofs()];
    disc.darcy.add_interface_load(p, &st.g_d.scaled(-1.0), &mut r);
    let same_k = Arc::ptr_eq(&d.kinv, &ctx.kbar) || d.kinv.as_slice() == ctx.kbar.as_slice();
    let kinv = (!same_k).then(|| (d.kinv.as_slice(), ctx.kbar.as_slice()));
    let dk = d.k_min - ctx.k_min_bar;
    if kinv.is_some() || dk != 0.0 {
        disc.darcy.add_lag(&st.u_d, kinv, dk, ctx.physics.g, &mut r);
    }
    let mut b_d = slot.base_d.clone();
    for (b, &i) in b_d.iter_mut().zip(ops.darcy.reduced.constraints.free_dofs()) {
        *b += r[i];
    }
    (b_s, b_d)
}

fn iterate(ctx: &EnsembleContext, disc: &Discretization, ops: &Operators, timings: &mut Timings) -> Result<(Vec<Slot>, RobinTraceState, usize)> {
    let n_samples = ctx.n_samples();
    let mut state = init_state(n_samples, &disc.pairing, disc.darcy.n_dofs());
    let mut slots: Vec<Slot> = (0..n_samples).into_par_iter().map(|j| init_slot(ctx, disc, ops, j)).collect();
    let mut sweeps = 0;
    let start = Instant::now();
    for n in 1..=ctx.max_iters {
        sweeps = n;
        let active: Vec<usize> = (0..n_samples).filter(|&j| slots[j].active).collect();
        if active.is_empty() {
            break;
        }
        let rhs: Vec<(Vec<f64>, Vec<f64>)> =
            active.par_iter().map(|&j| sample_rhs(ctx, disc, ops, &state, &slots[j], j)).collect();
        let (rhs_s, rhs_d): (Vec<_>, Vec<_>) = rhs.into_iter().unzip();
        let sol_s = ops.stokes.reduced.factor.solve_many(&rhs_s)?;
        let sol_d = ops.darcy.reduced.factor.solve_many(&rhs_d)?;

        let mut by_sample: Vec<Option<(Vec<f64>, Vec<f64>)>> = (0..n_samples).map(|_| None).collect();
        for ((j, s), d) in active.iter().zip(sol_s).zip(sol_d) {
            by_sample[*j] = Some((s, d));
        }
        slots
            .par_iter_mut()
            .zip(state.samples.par_iter_mut())
            .zip(by_sample.into_par_iter())
            .enumerate()
            .for_each(|(j, ((slot, st), sol))| {
                let Some((fs, fd)) = sol else { return };
                let mut x_s = ops.stokes.reduced.constraints.expand(&fs, &slot.fixed_s);
                x_s.truncate(disc.stokes.n_dofs());
                let mut x_d = ops.darcy.reduced.constraints.expand(&fd, &slot.fixed_d);
                x_d.truncate(disc.darcy.n_dofs());
                let norm = stopping_norm(&disc.mass_s, &disc.mass_d, &slot.x_s, &x_s, &slot.x_d, &x_d);
                let (sn, stau) = disc.stokes.traces(&x_s, &disc.pairing);
                let (dn, dtau) = disc.darcy.traces(&x_d, &disc.pairing);
                let traces =
                    InterfaceTraces { stokes_normal: sn, stokes_tangential: stau, darcy_normal: dn, darcy_tangential: dtau };
                slot.used_g_s = st.g_s.clone();
                slot.used_g_d = st.g_d.clone();
                st.update(traces, x_d.clone(), &ctx.update_params(j));
                slot.x_s = x_s;
                slot.x_d = x_d;
                slot.norms.push(norm);
                if norm <= ctx.tol && slot.first_below.is_none() {
                    slot.first_below = Some(n);
                }
                if !norm.is_finite() || norm > DIVERGENCE_GROWTH * slot.norms[0].max(ctx.tol) {
                    slot.diverged = true;
                    slot.active = false;
                }
            });
        let done = match ctx.stop {
            StopRule::AllSamples => slots.iter().all(|s| s.diverged || s.norms.last().is_some_and(|&v| v <= ctx.tol)),
            StopRule::PerSample => {
                for s in slots.iter_mut() {
                    if s.first_below.is_some() {
                        s.active = false;
                    }
                }
                slots.iter().all(|s| !s.active)
            }
        };
        log::debug!("sweep {n}: max norm {:.3e}", slots.iter().filter_map(|s| s.norms.last()).fold(0.0f64, |a, &b| a.max(b)));
        if done {
            break;
        }
    }
    timings.solve += start.elapsed();
    Ok((slots, state, sweeps))
}

fn finish(ctx: &EnsembleContext, disc: &Discretization, slots: Vec<Slot>, sweeps: usize) -> Vec<SampleReport> {
    slots
        .into_iter()
        .map(|s| {
            let (sn, _) = disc.stokes.traces(&s.x_s, &disc.pairing);
            let normal_stress = s.used_g_s.affine(1.0, &sn, ctx.robin.delta_s, 0.0);
            let final_norm = s.norms.last().copied().unwrap_or(f64::INFINITY);
            SampleReport {
                iterations: s.first_below.unwrap_or(sweeps),
                sweeps: s.norms.len(),
                final_norm,
                converged: final_norm <= ctx.tol,
                diverged: s.diverged,
                norm_history: s.norms,
                stokes: s.x_s,
                darcy: s.x_d,
                normal_stress,
            }
        })
        .collect()
}

fn run_with(
    ctx: &EnsembleContext,
    disc: &Discretization,
    symbolic: Option<&(SymbolicFactorization, SymbolicFactorization)>,
) -> Result<(SolveReport, Operators)> {
    let before = factorization_count();
    let mut timings = Timings::default();
    let ops = build_operators(ctx, disc, symbolic, &mut timings)?;
    let (slots, _state, sweeps) = iterate(ctx, disc, &ops, &mut timings)?;
    let samples = finish(ctx, disc, slots, sweeps);
    let factorizations = factorization_count() - before;
    Ok((SolveReport { samples, timings, factorizations, sweeps }, ops))
}

/// All samples share one factorized Stokes and one factorized Darcy operator.
pub fn run_ensemble_ddm(ctx: &EnsembleContext, disc: &Discretization) -> Result<SolveReport> {
    Ok(run_with(ctx, disc, None)?.0)
}

/// Baseline: every sample runs the same iteration with operators built from its own
/// coefficients; the symbolic analysis is shared.
pub fn run_traditional_ddm(ctx: &EnsembleContext, disc: &Discretization) -> Result<SolveReport> {
    let mut samples = Vec::with_capacity(ctx.n_samples());
    let mut timings = Timings::default();
    let mut factorizations = 0;
    let mut sweeps = 0;
    let mut symbolic: Option<(SymbolicFactorization, SymbolicFactorization)> = None;
    for j in 0..ctx.n_samples() {
        let single = ctx.single(j)?;
        let (mut r, ops) = run_with(&single, disc, symbolic.as_ref())?;
        if symbolic.is_none() {
            let t = Instant::now();
            symbolic = Some((ops.stokes.reduced.analyze()?, ops.darcy.reduced.analyze()?));
            timings.factor += t.elapsed();
        }
        timings.add(&r.timings);
        factorizations += r.factorizations;
        sweeps = sweeps.max(r.sweeps);
        samples.append(&mut r.samples);
    }
    Ok(SolveReport { samples, timings, factorizations, sweeps })
}
