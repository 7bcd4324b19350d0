//! Fourier convergence factor of the Robin-Robin iteration and the optimized
//! Darcy Robin parameter.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// `rho = |(2 nu |m| - delta_d) / (2 nu |m| + delta_s)|`.
pub fn convergence_factor(delta_s: f64, delta_d: f64, nu: f64, m: f64) -> f64 {
    let a = 2.0 * nu * m.abs();
    ((a - delta_d) / (a + delta_s)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub m_min: f64,
    pub m_max: f64,
}

impl FrequencyBand {
    pub fn new(m_min: f64, m_max: f64) -> Result<Self> {
        if !(m_min > 0.0 && m_min < m_max) {
            return Err(invalid(format!("frequency band needs 0 < m_min < m_max, got ({m_min}, {m_max})")));
        }
        Ok(Self { m_min, m_max })
    }

    /// `n` evenly spaced frequencies including both endpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        if n < 2 {
            return vec![self.m_min];
        }
        (0..n).map(|i| self.m_min + (self.m_max - self.m_min) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Frequencies resolved on an interface of length `l` by a mesh of size `h`: `(pi/l, pi/h)`.
pub fn frequency_band(l: f64, h: f64) -> Result<FrequencyBand> {
    if !(l > 0.0 && h > 0.0) || h >= l {
        return Err(invalid(format!("frequency band needs 0 < h < L, got L={l}, h={h}")));
    }
    FrequencyBand::new(PI / l, PI / h)
}

/// Darcy parameter equalizing the factor at both ends of the band.
pub fn optimized_delta_d(delta_s: f64, nu: f64, band: FrequencyBand) -> Result<f64> {
    if !(delta_s > 0.0 && nu > 0.0) {
        return Err(invalid("optimized delta_D needs delta_S > 0 and nu > 0"));
    }
    let (a, b) = (band.m_min, band.m_max);
    Ok((4.0 * nu * nu * a * b + nu * (a + b) * delta_s) / (nu * (a + b) + delta_s))
}

/// Supremum of the factor over the band. The factor vanishes at `delta_d / (2 nu)`
/// and is monotone on either side, so only the endpoints matter.
pub fn worst_case_rho(delta_s: f64, delta_d: f64, nu: f64, band: FrequencyBand) -> f64 {
    convergence_factor(delta_s, delta_d, nu, band.m_min).max(convergence_factor(delta_s, delta_d, nu, band.m_max))
}

/// Interface Fourier coefficients: Stokes normal velocity `a`, Darcy normal velocity `b`,
/// Darcy head `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolState {
    pub a: f64,
    pub b: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolParams {
    pub delta_s: f64,
    pub delta_d: f64,
    pub nu: f64,
    /// Ensemble-mean inverse conductivity.
    pub k_bar: f64,
    /// Inverse conductivity of the sample.
    pub k_inv: f64,
    pub m: f64,
}

impl SymbolParams {
    pub fn rho(&self) -> f64 {
        convergence_factor(self.delta_s, self.delta_d, self.nu, self.m)
    }

    fn lag(&self) -> f64 {
        (self.k_bar - self.k_inv) / (self.k_bar + self.delta_d * self.m.abs())
    }

    fn coupling(&self) -> f64 {
        let m = self.m.abs();
        (2.0 * self.nu * m - self.delta_d) * m / (self.k_bar + self.delta_d * m)
    }

    /// One sweep of the coefficient recursion.
    pub fn step(&self, s: &SymbolState) -> SymbolState {
        let m = self.m.abs();
        let two_nu_m = 2.0 * self.nu * m;
        let a = -(s.q - self.delta_s * s.b) / (two_nu_m + self.delta_s);
        let b = ((self.k_bar - self.k_inv) * s.b + m * (self.delta_d - two_nu_m) * s.a) / (self.k_bar + self.delta_d * m);
        let q = (self.delta_d - two_nu_m) * s.a - self.delta_d * b;
        SymbolState { a, b, q }
    }

    /// `B^n - c B^{n-1} + d A^{n-1}` for a pair of consecutive states.
    pub fn combined(&self, prev: &SymbolState, cur: &SymbolState) -> f64 {
        cur.b - self.lag() * prev.b + self.coupling() * prev.a
    }
}

/// Run `n_steps` sweeps from `init`; entry `n - 1` of the result is the combined
/// quantity `C^n`, `n = 1..=n_steps`.
pub fn symbol_iteration(params: &SymbolParams, n_steps: usize, init: SymbolState) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_steps);
    let mut prev = init;
    for _ in 0..n_steps {
        let cur = params.step(&prev);
        out.push(params.combined(&prev, &cur));
        prev = cur;
    }
    out
}

/// Observed ratio `|C^{2n+2}| / |C^{2n}|` at the last even pair of the sequence; `0` when
/// the quantity has already vanished.
pub fn symbol_ratio(combined: &[f64]) -> Option<f64> {
    let evens: Vec<f64> = combined.iter().skip(1).step_by(2).copied().collect();
    let (&last, &before) = (evens.last()?, evens.get(evens.len().checked_sub(2)?)?);
    if before == 0.0 {
        return Some(0.0);
    }
    Some(last.abs() / before.abs())
}

/// Observed per-sweep contraction of the state itself, `(|x^n| / |x^{n-2k}|)^{1/(2k)}`
/// over the final `2k` sweeps of an `n_steps` run.
pub fn observed_state_rate(params: &SymbolParams, n_steps: usize, window: usize, init: SymbolState) -> f64 {
    let norm = |s: &SymbolState| (s.a * s.a + s.b * s.b + s.q * s.q).sqrt();
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(init);
    for _ in 0..n_steps {
        let next = params.step(states.last().unwrap());
        states.push(next);
    }
    let w = (2 * window).min(n_steps);
    let (hi, lo) = (norm(&states[n_steps]), norm(&states[n_steps - w]));
    if lo == 0.0 {
        return 0.0;
    }
    (hi / lo).powf(1.0 / w as f64)
}
