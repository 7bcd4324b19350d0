//! Experiment driver: scenario configuration, runners and CSV output for the
//! ensemble Stokes-Darcy solver.

pub mod config;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

use anyhow::Result;
use log::info;

pub use config::{ConfigFile, RobinMode, Scenario, ScenarioConfig, StopMode};
pub use output::{write_csv, ReferenceCache, RUN_COLUMNS};
pub use runner::{
    run_channel_mc, run_convergence, run_robin_sweep, run_small_k_channel, run_symbol_sweep, McOutcome, RunRow,
};

/// What a scenario run wrote and whether it met its convergence requirement.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub files: Vec<PathBuf>,
    /// Every requested run converged.
    pub converged: bool,
}

impl Summary {
    /// Exit status: success when converged or explicitly allowed not to.
    pub fn success(&self, cfg: &ScenarioConfig) -> bool {
        self.converged || cfg.allow_nonconvergence
    }
}

/// Run `cfg` and write its files under `out`.
pub fn execute(cfg: &ScenarioConfig, out: &Path) -> Result<Summary> {
    let name = cfg.scenario.name();
    let mut s = Summary { converged: true, ..Summary::default() };
    let mut emit = |file: &str, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let p = out.join(file);
        write(&p)?;
        info!("wrote {}", p.display());
        s.files.push(p);
        Ok(())
    };
    match cfg.scenario {
        Scenario::Manufactured | Scenario::SmallK => {
            let c = run_convergence(cfg)?;
            let mut rows = c.rows;
            if cfg.scenario == Scenario::SmallK && cfg.channel_check {
                rows.extend(run_small_k_channel(cfg)?);
            }
            let converged = runner::all_converged(&rows);
            emit(&format!("{name}.csv"), &|p| write_csv(p, &rows))?;
            emit(&format!("{name}_orders.csv"), &|p| write_csv(p, &c.orders))?;
            s.converged = converged;
        }
        Scenario::ChannelMc => {
            let cache = ReferenceCache::new(out.join("cache"));
            let mc = run_channel_mc(cfg, |k| cache.load(k), |k, e| cache.store(k, e))?;
            let converged = runner::all_converged(&mc.rows) && mc.errors.iter().all(|r| r.converged);
            emit(&format!("{name}.csv"), &|p| write_csv(p, &mc.rows))?;
            emit("mc_errors.csv", &|p| write_csv(p, &mc.errors))?;
            if !mc.timing.is_empty() {
                emit("mc_timing.csv", &|p| write_csv(p, &mc.timing))?;
            }
            if let Some((n, e)) = &mc.expectation {
                let disc = eddm_core::scenario::channel_discretization(1.0 / *n as f64)?;
                let files = output::write_expectation(out, &disc, e)?;
                s.files.extend(files);
            }
            s.converged = converged;
        }
        Scenario::RobinSweep => {
            let sw = run_robin_sweep(cfg)?;
            emit("robin_sweep.csv", &|p| write_csv(p, &sw.rows))?;
            emit("robin_sweep_history.csv", &|p| write_csv(p, &sw.history))?;
            s.converged = sw.rows.iter().all(|r| r.converged);
        }
        Scenario::SymbolSweep => {
            let rows = run_symbol_sweep(cfg)?;
            emit("symbol_sweep.csv", &|p| write_csv(p, &rows))?;
        }
    }
    Ok(s)
}
