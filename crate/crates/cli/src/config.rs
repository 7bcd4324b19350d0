//! Scenario configuration: a flat TOML table whose keys override per-scenario defaults.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use eddm_core::{Physics, RandomFieldSpec, RobinParams, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Manufactured,
    SmallK,
    ChannelMc,
    RobinSweep,
    SymbolSweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Self::Manufactured => "manufactured",
            Self::SmallK => "small_k",
            Self::ChannelMc => "channel_mc",
            Self::RobinSweep => "robin_sweep",
            Self::SymbolSweep => "symbol_sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobinMode {
    /// `delta_d` given explicitly.
    Explicit,
    /// `delta_d` optimized over the mesh frequency band for the given `delta_s`.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMode {
    All,
    PerSample,
}

/// Every key a config file may set. Unset keys keep the scenario default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<Scenario>,
    pub h_inv: Option<Vec<u32>>,
    pub nu: Option<f64>,
    pub g: Option<f64>,
    pub z: Option<f64>,
    pub alpha: Option<f64>,
    pub robin: Option<RobinMode>,
    pub delta_s: Option<f64>,
    pub delta_d: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub stop: Option<StopMode>,
    pub k11: Option<Vec<f64>>,
    pub k22: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub mc_samples: Option<Vec<usize>>,
    pub reference_samples: Option<usize>,
    pub reference_seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub field_a0: Option<f64>,
    pub field_sigma: Option<f64>,
    pub field_corr_len: Option<f64>,
    pub field_terms: Option<usize>,
    pub conductivity_scale: Option<f64>,
    pub compare_traditional: Option<bool>,
    pub channel_check: Option<bool>,
    pub channel_delta_s: Option<f64>,
    pub channel_delta_d: Option<f64>,
    pub channel_alpha: Option<f64>,
    pub channel_tol: Option<f64>,
    pub channel_scale: Option<f64>,
    pub channel_samples: Option<usize>,
    pub channel_h_inv: Option<Vec<u32>>,
    pub sweep_pairs: Option<Vec<[f64; 2]>>,
    pub sweep_optimized_delta_s: Option<Vec<f64>>,
    pub symbol_delta_s: Option<Vec<f64>>,
    pub symbol_delta_d_min: Option<f64>,
    pub symbol_delta_d_max: Option<f64>,
    pub symbol_delta_d_points: Option<usize>,
    pub band_points: Option<usize>,
    pub interface_length: Option<f64>,
    pub allow_nonconvergence: Option<bool>,
}

/// Fully resolved scenario settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Mesh sizes as `1/h`.
    pub h_inv: Vec<u32>,
    pub nu: f64,
    pub g: f64,
    pub z: f64,
    pub alpha: f64,
    pub robin: RobinMode,
    pub delta_s: f64,
    pub delta_d: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub stop: StopMode,
    /// Diagonal conductivities of the manufactured samples.
    pub k11: Vec<f64>,
    pub k22: Vec<f64>,
    pub seed: u64,
    /// Realizations in the timing comparison of the channel study.
    pub samples: usize,
    /// Ensemble sizes compared against the reference expectation.
    pub mc_samples: Vec<usize>,
    pub reference_samples: usize,
    /// Seed of the reference ensemble; `seed + 1` unless set.
    pub reference_seed: u64,
    /// Realizations per ensemble run when building the reference.
    pub batch_size: usize,
    pub field: RandomFieldSpec,
    pub conductivity_scale: f64,
    pub compare_traditional: bool,
    /// Also run the scaled channel with large Robin parameters (small-K scenario).
    pub channel_check: bool,
    pub channel_delta_s: f64,
    pub channel_delta_d: f64,
    pub channel_alpha: f64,
    pub channel_tol: f64,
    pub channel_scale: f64,
    pub channel_samples: usize,
    pub channel_h_inv: Vec<u32>,
    /// Explicit `(delta_s, delta_d)` pairs of the Robin sweep.
    pub sweep_pairs: Vec<[f64; 2]>,
    /// `delta_s` values swept with their optimized `delta_d`.
    pub sweep_optimized_delta_s: Vec<f64>,
    pub symbol_delta_s: Vec<f64>,
    pub symbol_delta_d_min: f64,
    pub symbol_delta_d_max: f64,
    pub symbol_delta_d_points: usize,
    pub band_points: usize,
    pub interface_length: f64,
    pub allow_nonconvergence: bool,
}

impl ScenarioConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let base = Self {
            scenario,
            h_inv: vec![16, 32, 64],
            nu: 1.0,
            g: 1.0,
            z: 0.0,
            alpha: 1.0,
            robin: RobinMode::Optimized,
            delta_s: 1.0,
            delta_d: None,
            tol: 1e-6,
            max_iters: 500,
            stop: StopMode::All,
            k11: vec![2.21, 4.11, 6.21],
            k22: vec![2.21, 4.11, 6.21],
            seed: 2024,
            samples: 40,
            mc_samples: vec![40, 60, 100, 160],
            reference_samples: 500,
            reference_seed: 2025,
            batch_size: 100,
            field: RandomFieldSpec::default(),
            conductivity_scale: 1.0,
            compare_traditional: true,
            channel_check: false,
            channel_delta_s: 1e6,
            channel_delta_d: 2e5,
            channel_alpha: 1e-6,
            channel_tol: 1e-12,
            channel_scale: 1e-6,
            channel_samples: 80,
            channel_h_inv: vec![8, 16, 32],
            sweep_pairs: vec![[1.0, 2.0], [0.1, 1.0], [0.5, 1.0]],
            sweep_optimized_delta_s: vec![1.0, 0.1, 0.01],
            symbol_delta_s: vec![1.0, 0.1, 0.01],
            symbol_delta_d_min: 0.5,
            symbol_delta_d_max: 10.0,
            symbol_delta_d_points: 20,
            band_points: 1000,
            interface_length: std::f64::consts::PI,
            allow_nonconvergence: false,
        };
        match scenario {
            Scenario::Manufactured => base,
            Scenario::SmallK => Self {
                h_inv: vec![8, 16, 32],
                robin: RobinMode::Explicit,
                delta_s: 100.0,
                delta_d: Some(50.0),
                tol: 1e-9,
                max_iters: 2000,
                k11: vec![1e-4, 2e-4, 3e-4],
                k22: vec![1e-4, 2e-4, 3e-4],
                channel_check: true,
                ..base
            },
            Scenario::ChannelMc => Self { h_inv: vec![32], stop: StopMode::PerSample, interface_length: 3.0, ..base },
            Scenario::RobinSweep => Self { h_inv: vec![32], ..base },
            Scenario::SymbolSweep => Self { h_inv: vec![32], ..base },
        }
    }

    /// Defaults of `scenario` overridden by `file`.
    pub fn resolve(scenario: Scenario, file: ConfigFile) -> Result<Self> {
        if let Some(s) = file.scenario {
            ensure!(s == scenario, "config is for scenario `{}`, not `{}`", s.name(), scenario.name());
        }
        let mut c = Self::defaults(scenario);
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = file.$f { c.$f = v; } )* };
        }
        set!(
            h_inv, nu, g, z, alpha, robin, delta_s, tol, max_iters, stop, k11, seed, samples, mc_samples,
            reference_samples, batch_size, conductivity_scale, compare_traditional, channel_check,
            channel_delta_s, channel_delta_d, channel_alpha, channel_tol, channel_scale, channel_samples, channel_h_inv,
            sweep_pairs, sweep_optimized_delta_s, symbol_delta_s, symbol_delta_d_min, symbol_delta_d_max,
            symbol_delta_d_points, band_points, interface_length, allow_nonconvergence
        );
        c.reference_seed = file.reference_seed.unwrap_or(c.seed.wrapping_add(1));
        c.k22 = file.k22.unwrap_or_else(|| c.k11.clone());
        if file.delta_d.is_some() {
            c.delta_d = file.delta_d;
            if file.robin.is_none() {
                c.robin = RobinMode::Explicit;
            }
        }
        if let Some(v) = file.field_a0 {
            c.field.a0 = v;
        }
        if let Some(v) = file.field_sigma {
            c.field.sigma = v;
        }
        if let Some(v) = file.field_corr_len {
            c.field.corr_len = v;
        }
        if let Some(v) = file.field_terms {
            c.field.n_f = v;
        }
        c.validate()?;
        Ok(c)
    }

    /// Defaults, then `path`, then a command-line seed.
    pub fn load(scenario: Scenario, path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut file: ConfigFile = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ConfigFile::default(),
        };
        if seed.is_some() {
            file.seed = seed;
        }
        Self::resolve(scenario, file)
    }

    /// Range checks, run before anything is allocated.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| -> Result<()> {
            ensure!(v > 0.0 && v.is_finite(), "`{name}` must be positive and finite, got {v}");
            Ok(())
        };
        ensure!(!self.h_inv.is_empty(), "`h_inv` must not be empty");
        ensure!(self.h_inv.iter().all(|&n| (2..=1024).contains(&n)), "`h_inv` entries must lie in 2..=1024");
        pos("nu", self.nu)?;
        pos("g", self.g)?;
        ensure!(self.z.is_finite(), "`z` must be finite");
        ensure!(self.alpha >= 0.0 && self.alpha.is_finite(), "`alpha` must be non-negative");
        pos("delta_s", self.delta_s)?;
        match (self.robin, self.delta_d) {
            (RobinMode::Explicit, None) => bail!("`robin = \"explicit\"` needs `delta_d`"),
            (RobinMode::Explicit, Some(d)) => pos("delta_d", d)?,
            (RobinMode::Optimized, Some(_)) => bail!("`delta_d` conflicts with `robin = \"optimized\"`"),
            (RobinMode::Optimized, None) => {}
        }
        pos("tol", self.tol)?;
        ensure!(self.max_iters >= 1, "`max_iters` must be at least 1");
        ensure!(!self.k11.is_empty(), "`k11` must not be empty");
        ensure!(self.k11.len() == self.k22.len(), "`k11` and `k22` must have equal length");
        for &k in self.k11.iter().chain(&self.k22) {
            pos("k11/k22", k)?;
        }
        ensure!(self.samples >= 1, "`samples` must be at least 1");
        ensure!(self.mc_samples.iter().all(|&j| j >= 1), "`mc_samples` entries must be at least 1");
        ensure!(self.reference_samples >= 1, "`reference_samples` must be at least 1");
        ensure!(self.batch_size >= 1, "`batch_size` must be at least 1");
        self.field.validate().map_err(anyhow::Error::from)?;
        ensure!(self.field.lower_bound() > 0.0, "random field can become non-positive (lower bound {})", self.field.lower_bound());
        pos("conductivity_scale", self.conductivity_scale)?;
        pos("channel_delta_s", self.channel_delta_s)?;
        pos("channel_delta_d", self.channel_delta_d)?;
        ensure!(self.channel_alpha >= 0.0, "`channel_alpha` must be non-negative");
        pos("channel_tol", self.channel_tol)?;
        pos("channel_scale", self.channel_scale)?;
        ensure!(self.channel_samples >= 1, "`channel_samples` must be at least 1");
        ensure!(self.channel_h_inv.iter().all(|&n| (2..=1024).contains(&n)), "`channel_h_inv` entries must lie in 2..=1024");
        for p in &self.sweep_pairs {
            pos("sweep_pairs", p[0])?;
            pos("sweep_pairs", p[1])?;
        }
        for &d in self.sweep_optimized_delta_s.iter().chain(&self.symbol_delta_s) {
            pos("delta_s list", d)?;
        }
        pos("symbol_delta_d_min", self.symbol_delta_d_min)?;
        ensure!(self.symbol_delta_d_max > self.symbol_delta_d_min, "`symbol_delta_d_max` must exceed the minimum");
        ensure!(self.symbol_delta_d_points >= 2 && self.band_points >= 2, "grids need at least two points");
        pos("interface_length", self.interface_length)?;
        Ok(())
    }

    pub fn physics(&self) -> Physics {
        Physics { nu: self.nu, g: self.g, z: self.z, alpha: self.alpha }
    }

    pub fn stop_rule(&self) -> StopRule {
        match self.stop {
            StopMode::All => StopRule::AllSamples,
            StopMode::PerSample => StopRule::PerSample,
        }
    }

    /// Robin pair at mesh size `h` for an interface carrying frequencies from `m_min`.
    pub fn robin_params(&self, band: eddm_core::FrequencyBand) -> Result<RobinParams> {
        Ok(match (self.robin, self.delta_d) {
            (RobinMode::Explicit, Some(d)) => RobinParams { delta_s: self.delta_s, delta_d: d },
            _ => RobinParams { delta_s: self.delta_s, delta_d: eddm_core::optimized_delta_d(self.delta_s, self.nu, band)? },
        })
    }
}
