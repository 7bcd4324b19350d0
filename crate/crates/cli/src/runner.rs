//! Scenario runners. Each returns its rows in memory; writing them is left to
//! [`crate::output`].

use std::time::Instant;

use anyhow::Result;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use eddm_core::ensemble::{make_context, run_ensemble_ddm, run_traditional_ddm, Discretization, SolveReport, Timings};
use eddm_core::manufactured::Manufactured;
use eddm_core::norms::{convergence_order, darcy_velocity_l2_diff, stokes_velocity_l2_diff};
use eddm_core::random_field::mc_expectation;
use eddm_core::robin::{frequency_band, worst_case_rho};
use eddm_core::scenario::{
    channel_band, channel_discretization, channel_samples, channel_samples_range, manufactured_band,
    manufactured_discretization, manufactured_errors, manufactured_sample,
};
use eddm_core::{convergence_factor, optimized_delta_d, Physics, RobinParams, StopRule};

use crate::config::{RobinMode, ScenarioConfig};

/// One sample of one run, in the fixed CSV layout. Error columns hold relative
/// errors; `err_ps_l2` falls back to the absolute error when the exact pressure is
/// zero. Runs without an exact solution leave the error columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub scenario: String,
    pub h: f64,
    pub j: usize,
    pub iterations: usize,
    pub err_us_l2: Option<f64>,
    pub err_us_h1: Option<f64>,
    pub err_ps_l2: Option<f64>,
    pub err_phid_l2: Option<f64>,
    pub err_ud_l2: Option<f64>,
    pub err_ud_div: Option<f64>,
    pub t_assemble_ms: f64,
    pub t_factor_ms: f64,
    pub t_solve_ms: f64,
    pub converged: bool,
}

impl RunRow {
    fn bare(scenario: &str, h: f64, j: usize, iterations: usize, converged: bool, t: &Timings) -> Self {
        Self {
            scenario: scenario.to_string(),
            h,
            j,
            iterations,
            err_us_l2: None,
            err_us_h1: None,
            err_ps_l2: None,
            err_phid_l2: None,
            err_ud_l2: None,
            err_ud_div: None,
            t_assemble_ms: ms(t.assemble),
            t_factor_ms: ms(t.factor),
            t_solve_ms: ms(t.solve),
            converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub scenario: String,
    pub j: usize,
    pub quantity: String,
    pub h_coarse: f64,
    pub h_fine: f64,
    pub order: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceOutcome {
    pub rows: Vec<RunRow>,
    pub orders: Vec<OrderRow>,
    /// Exact pressure norm was zero, so `err_ps_l2` is absolute.
    pub pressure_absolute: bool,
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn h_of(n: u32) -> f64 {
    1.0 / n as f64
}

fn manufactured_set(cfg: &ScenarioConfig) -> Vec<Manufactured> {
    cfg.k11.iter().zip(&cfg.k22).map(|(&a, &b)| Manufactured::new(a, b, cfg.nu)).collect()
}

/// Manufactured ensemble over the `h_inv` grid; used by `converge` and `small-k`.
pub fn run_convergence(cfg: &ScenarioConfig) -> Result<ConvergenceOutcome> {
    let name = cfg.scenario.name();
    let ms = manufactured_set(cfg);
    let mut out = ConvergenceOutcome::default();
    let mut per_level: Vec<Vec<[f64; 4]>> = Vec::new();
    for &n in &cfg.h_inv {
        let h = h_of(n);
        let disc = manufactured_discretization(h)?;
        let robin = cfg.robin_params(manufactured_band(h)?)?;
        let samples = ms.iter().map(|&m| manufactured_sample(m)).collect();
        let (ctx, _) = make_context(samples, cfg.physics(), robin, cfg.tol, cfg.max_iters, &disc)?;
        let report = run_ensemble_ddm(&ctx.with_stop(cfg.stop_rule()), &disc)?;
        info!("{name} h=1/{n}: iterations {:?}", report.samples.iter().map(|s| s.iterations).collect::<Vec<_>>());
        let mut level = Vec::new();
        for (j, (s, &m)) in report.samples.iter().zip(&ms).enumerate() {
            let (se, de) = manufactured_errors(&disc, s, m);
            let (ps, abs) = se.p_l2.reported();
            out.pressure_absolute |= abs;
            let mut row = RunRow::bare(name, h, j, s.iterations, s.converged, &report.timings);
            row.err_us_l2 = Some(se.u_l2.reported().0);
            row.err_us_h1 = Some(se.u_h1.reported().0);
            row.err_ps_l2 = Some(ps);
            row.err_phid_l2 = Some(de.phi_l2.reported().0);
            row.err_ud_l2 = Some(de.u_l2.reported().0);
            row.err_ud_div = Some(de.u_hdiv.reported().0);
            level.push([se.u_l2.error, se.u_h1.error, de.u_l2.error, de.u_hdiv.error]);
            out.rows.push(row);
        }
        per_level.push(level);
    }
    if cfg.h_inv.len() >= 2 {
        let hs: Vec<f64> = cfg.h_inv.iter().map(|&n| h_of(n)).collect();
        for j in 0..ms.len() {
            for (q, quantity) in ["us_l2", "us_h1", "ud_l2", "ud_div"].iter().enumerate() {
                let errs: Vec<f64> = per_level.iter().map(|l| l[j][q]).collect();
                let Ok(orders) = convergence_order(&errs, &hs) else { continue };
                for (w, order) in orders.into_iter().enumerate() {
                    out.orders.push(OrderRow {
                        scenario: name.to_string(),
                        j,
                        quantity: quantity.to_string(),
                        h_coarse: hs[w],
                        h_fine: hs[w + 1],
                        order,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Channel with the conductivity scaled down and large Robin parameters.
pub fn run_small_k_channel(cfg: &ScenarioConfig) -> Result<Vec<RunRow>> {
    let physics = Physics { alpha: cfg.channel_alpha, ..cfg.physics() };
    let robin = RobinParams { delta_s: cfg.channel_delta_s, delta_d: cfg.channel_delta_d };
    let mut rows = Vec::new();
    for &n in &cfg.channel_h_inv {
        let h = h_of(n);
        let disc = channel_discretization(h)?;
        let samples = channel_samples(&cfg.field, cfg.channel_samples, cfg.seed, cfg.channel_scale)?;
        let (ctx, _) = make_context(samples, physics, robin, cfg.channel_tol, cfg.max_iters, &disc)?;
        let report = run_ensemble_ddm(&ctx.with_stop(StopRule::PerSample), &disc)?;
        let diverged = report.samples.iter().filter(|s| s.diverged).count();
        if diverged > 0 {
            warn!("small-K channel h=1/{n}: {diverged} of {} samples diverged", report.samples.len());
        }
        for (j, s) in report.samples.iter().enumerate() {
            rows.push(RunRow::bare("small_k_channel", h, j, s.iterations, s.converged, &report.timings));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McErrorRow {
    pub h: f64,
    pub samples: usize,
    pub err_us_l2: f64,
    pub err_ud_l2: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub h: f64,
    pub samples: usize,
    pub t_ensemble_ms: f64,
    pub t_traditional_ms: f64,
    pub ratio: f64,
    pub factorizations_ensemble: usize,
    pub factorizations_traditional: usize,
    /// Largest per-sample L2 velocity difference between the two variants.
    pub max_velocity_diff: f64,
}

/// Expected dof vectors of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub samples: usize,
    pub stokes: Vec<f64>,
    pub darcy: Vec<f64>,
    pub converged: bool,
}

/// Identity of a cached reference expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceKey {
    pub seed: u64,
    pub h_inv: u32,
    pub samples: usize,
    pub field: [f64; 3],
    pub field_terms: usize,
    pub scale: f64,
    pub physics: [f64; 4],
    pub robin: [f64; 2],
    pub tol: f64,
}

#[derive(Debug, Clone, Default)]
pub struct McOutcome {
    pub errors: Vec<McErrorRow>,
    pub timing: Vec<TimingRow>,
    /// Per-sample rows of the timed ensemble run.
    pub rows: Vec<RunRow>,
    /// Expectation of the largest ensemble, with its discretization size.
    pub expectation: Option<(u32, Expectation)>,
    pub reference_from_cache: bool,
}

fn channel_robin(cfg: &ScenarioConfig, h: f64) -> Result<RobinParams> {
    cfg.robin_params(channel_band(h)?)
}

fn expectation(report: &SolveReport) -> Result<Expectation> {
    let s: Vec<Vec<f64>> = report.samples.iter().map(|s| s.stokes.clone()).collect();
    let d: Vec<Vec<f64>> = report.samples.iter().map(|s| s.darcy.clone()).collect();
    Ok(Expectation {
        samples: report.samples.len(),
        stokes: mc_expectation(&s)?,
        darcy: mc_expectation(&d)?,
        converged: report.all_converged(),
    })
}

/// Reference expectation over `cfg.reference_samples` realizations, computed in
/// batches of `cfg.batch_size` ensembles.
pub fn reference_expectation(cfg: &ScenarioConfig, disc: &Discretization, n: u32) -> Result<Expectation> {
    let h = h_of(n);
    let robin = channel_robin(cfg, h)?;
    let total = cfg.reference_samples;
    let (mut sum_s, mut sum_d) = (vec![0.0; disc.stokes.n_dofs()], vec![0.0; disc.darcy.n_dofs()]);
    let mut converged = true;
    let mut start = 0;
    while start < total {
        let end = (start + cfg.batch_size).min(total);
        let samples = channel_samples_range(&cfg.field, start..end, cfg.reference_seed, cfg.conductivity_scale)?;
        let (ctx, _) = make_context(samples, cfg.physics(), robin, cfg.tol, cfg.max_iters, disc)?;
        let report = run_ensemble_ddm(&ctx.with_stop(cfg.stop_rule()), disc)?;
        converged &= report.all_converged();
        for s in &report.samples {
            sum_s.iter_mut().zip(&s.stokes).for_each(|(a, b)| *a += b);
            sum_d.iter_mut().zip(&s.darcy).for_each(|(a, b)| *a += b);
        }
        info!("reference h=1/{n}: {end}/{total} realizations");
        start = end;
    }
    let inv = 1.0 / total as f64;
    sum_s.iter_mut().for_each(|v| *v *= inv);
    sum_d.iter_mut().for_each(|v| *v *= inv);
    Ok(Expectation { samples: total, stokes: sum_s, darcy: sum_d, converged })
}

pub fn reference_key(cfg: &ScenarioConfig, n: u32) -> Result<ReferenceKey> {
    let robin = channel_robin(cfg, h_of(n))?;
    let p = cfg.physics();
    Ok(ReferenceKey {
        seed: cfg.reference_seed,
        h_inv: n,
        samples: cfg.reference_samples,
        field: [cfg.field.a0, cfg.field.sigma, cfg.field.corr_len],
        field_terms: cfg.field.n_f,
        scale: cfg.conductivity_scale,
        physics: [p.nu, p.g, p.z, p.alpha],
        robin: [robin.delta_s, robin.delta_d],
        tol: cfg.tol,
    })
}

/// Monte Carlo study on the channel. `reference` supplies a cached expectation for
/// a mesh or `None` to compute it; computed references go through `store`.
pub fn run_channel_mc(
    cfg: &ScenarioConfig,
    mut reference: impl FnMut(&ReferenceKey) -> Option<Expectation>,
    mut store: impl FnMut(&ReferenceKey, &Expectation) -> Result<()>,
) -> Result<McOutcome> {
    let mut out = McOutcome::default();
    for &n in &cfg.h_inv {
        let h = h_of(n);
        let disc = channel_discretization(h)?;
        let robin = channel_robin(cfg, h)?;
        info!("channel h=1/{n}: robin {robin:?}");

        let key = reference_key(cfg, n)?;
        let refx = match reference(&key) {
            Some(e) => {
                out.reference_from_cache = true;
                e
            }
            None => {
                let e = reference_expectation(cfg, &disc, n)?;
                store(&key, &e)?;
                e
            }
        };
        if !refx.converged {
            warn!("reference expectation at h=1/{n} includes unconverged samples");
        }

        let mut largest: Option<Expectation> = None;
        for &j in &cfg.mc_samples {
            let samples = channel_samples(&cfg.field, j, cfg.seed, cfg.conductivity_scale)?;
            let (ctx, _) = make_context(samples, cfg.physics(), robin, cfg.tol, cfg.max_iters, &disc)?;
            let report = run_ensemble_ddm(&ctx.with_stop(cfg.stop_rule()), &disc)?;
            let e = expectation(&report)?;
            let row = McErrorRow {
                h,
                samples: j,
                err_us_l2: stokes_velocity_l2_diff(&disc.stokes, &e.stokes, &refx.stokes),
                err_ud_l2: darcy_velocity_l2_diff(&disc.darcy, &e.darcy, &refx.darcy),
                converged: e.converged,
            };
            info!("channel h=1/{n} J={j}: errors {:.3e} {:.3e}", row.err_us_l2, row.err_ud_l2);
            out.errors.push(row);
            if largest.as_ref().map_or(true, |l| l.samples < j) {
                largest = Some(e);
            }
        }
        if let Some(e) = largest {
            out.expectation = Some((n, e));
        }

        let samples = channel_samples(&cfg.field, cfg.samples, cfg.seed, cfg.conductivity_scale)?;
        let (ctx, _) = make_context(samples, cfg.physics(), robin, cfg.tol, cfg.max_iters, &disc)?;
        let ctx = ctx.with_stop(cfg.stop_rule());
        let t = Instant::now();
        let ens = run_ensemble_ddm(&ctx, &disc)?;
        let t_ens = t.elapsed();
        for (j, s) in ens.samples.iter().enumerate() {
            out.rows.push(RunRow::bare(cfg.scenario.name(), h, j, s.iterations, s.converged, &ens.timings));
        }
        if cfg.compare_traditional {
            let t = Instant::now();
            let trad = run_traditional_ddm(&ctx, &disc)?;
            let t_trad = t.elapsed();
            let diff = ens
                .samples
                .iter()
                .zip(&trad.samples)
                .map(|(a, b)| {
                    stokes_velocity_l2_diff(&disc.stokes, &a.stokes, &b.stokes)
                        .max(darcy_velocity_l2_diff(&disc.darcy, &a.darcy, &b.darcy))
                })
                .fold(0.0, f64::max);
            out.timing.push(TimingRow {
                h,
                samples: cfg.samples,
                t_ensemble_ms: ms(t_ens),
                t_traditional_ms: ms(t_trad),
                ratio: t_trad.as_secs_f64() / t_ens.as_secs_f64(),
                factorizations_ensemble: ens.factorizations,
                factorizations_traditional: trad.factorizations,
                max_velocity_diff: diff,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    pub delta_s: f64,
    pub delta_d: f64,
    pub optimized: bool,
    pub j: usize,
    pub iterations: usize,
    pub final_norm: f64,
    pub converged: bool,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub h: f64,
    pub delta_s: f64,
    pub delta_d: f64,
    pub j: usize,
    pub iteration: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub history: Vec<HistoryRow>,
}

/// Manufactured ensemble for each Robin pair: explicit pairs first, then each listed
/// `delta_s` with its optimized `delta_d`.
pub fn run_robin_sweep(cfg: &ScenarioConfig) -> Result<SweepOutcome> {
    let ms = manufactured_set(cfg);
    let mut out = SweepOutcome::default();
    for &n in &cfg.h_inv {
        let h = h_of(n);
        let disc = manufactured_discretization(h)?;
        let band = manufactured_band(h)?;
        let mut pairs: Vec<(RobinParams, bool)> =
            cfg.sweep_pairs.iter().map(|p| (RobinParams { delta_s: p[0], delta_d: p[1] }, false)).collect();
        for &ds in &cfg.sweep_optimized_delta_s {
            pairs.push((RobinParams { delta_s: ds, delta_d: optimized_delta_d(ds, cfg.nu, band)? }, true));
        }
        for (robin, optimized) in pairs {
            let samples = ms.iter().map(|&m| manufactured_sample(m)).collect();
            let (ctx, _) = make_context(samples, cfg.physics(), robin, cfg.tol, cfg.max_iters, &disc)?;
            let report = run_ensemble_ddm(&ctx.with_stop(cfg.stop_rule()), &disc)?;
            for (j, s) in report.samples.iter().enumerate() {
                out.rows.push(SweepRow {
                    h,
                    delta_s: robin.delta_s,
                    delta_d: robin.delta_d,
                    optimized,
                    j,
                    iterations: s.iterations,
                    final_norm: s.final_norm,
                    converged: s.converged,
                    diverged: s.diverged,
                });
                out.history.extend(s.norm_history.iter().enumerate().map(|(i, &norm)| HistoryRow {
                    h,
                    delta_s: robin.delta_s,
                    delta_d: robin.delta_d,
                    j,
                    iteration: i + 1,
                    norm,
                }));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolRow {
    pub h: f64,
    pub delta_s: f64,
    pub delta_d: f64,
    pub rho_m_min: f64,
    pub rho_m_max: f64,
    /// Largest factor over the band grid.
    pub rho_max: f64,
    pub optimized: bool,
}

/// Convergence factor over a `(delta_s, delta_d)` grid, with the optimized `delta_d`
/// inserted in every `delta_s` row.
pub fn run_symbol_sweep(cfg: &ScenarioConfig) -> Result<Vec<SymbolRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.h_inv {
        let h = h_of(n);
        let band = frequency_band(cfg.interface_length, h)?;
        let grid = band.grid(cfg.band_points);
        for &ds in &cfg.symbol_delta_s {
            let opt = optimized_delta_d(ds, cfg.nu, band)?;
            let np = cfg.symbol_delta_d_points;
            let mut dds: Vec<(f64, bool)> = (0..np)
                .map(|i| {
                    let t = i as f64 / (np - 1) as f64;
                    (cfg.symbol_delta_d_min + t * (cfg.symbol_delta_d_max - cfg.symbol_delta_d_min), false)
                })
                .collect();
            dds.push((opt, true));
            dds.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (dd, optimized) in dds {
                let rho_max = grid.iter().map(|&m| convergence_factor(ds, dd, cfg.nu, m)).fold(0.0, f64::max);
                debug_assert!((rho_max - worst_case_rho(ds, dd, cfg.nu, band)).abs() < 1e-12);
                rows.push(SymbolRow {
                    h,
                    delta_s: ds,
                    delta_d: dd,
                    rho_m_min: convergence_factor(ds, dd, cfg.nu, band.m_min),
                    rho_m_max: convergence_factor(ds, dd, cfg.nu, band.m_max),
                    rho_max,
                    optimized,
                });
            }
        }
    }
    Ok(rows)
}

/// Whether every requested run converged; symbol sweeps always pass.
pub fn all_converged<'a>(rows: impl IntoIterator<Item = &'a RunRow>) -> bool {
    rows.into_iter().all(|r| r.converged)
}

pub fn robin_label(cfg: &ScenarioConfig) -> &'static str {
    match cfg.robin {
        RobinMode::Explicit => "explicit",
        RobinMode::Optimized => "optimized",
    }
}
