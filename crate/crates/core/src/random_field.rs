//! Truncated Karhunen-Loeve conductivity field and Monte Carlo averaging.
//!
//! Realization `j` of a run seeded with `seed` is drawn from a ChaCha8 generator
//! keyed by `seed` on stream `j`, so ensembles of different sizes share prefixes.

use std::f64::consts::PI;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFieldSpec {
    pub a0: f64,
    pub sigma: f64,
    pub corr_len: f64,
    pub n_f: usize,
}

impl Default for RandomFieldSpec {
    fn default() -> Self {
        Self { a0: 1.0, sigma: 0.15, corr_len: 0.25, n_f: 3 }
    }
}

/// One realization of the random coefficients `Y_0, ..., Y_{2 n_f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub y: Vec<f64>,
}

pub const Y_BOUND: f64 = 1.732_050_807_568_877_2;

impl RandomFieldSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0) || !(self.sigma >= 0.0) || !(self.corr_len > 0.0) {
            return Err(invalid(format!("invalid random field spec {self:?}")));
        }
        Ok(())
    }

    /// `(lambda_0, [lambda_1, ..., lambda_{n_f}])`.
    pub fn kl_eigenvalues(&self) -> (f64, Vec<f64>) {
        let lc = self.corr_len;
        let l0 = (PI * lc).sqrt() / 2.0;
        let li = (1..=self.n_f)
            .map(|i| PI.sqrt() * lc * (-(i as f64 * PI * lc).powi(2) / 4.0).exp())
            .collect();
        (l0, li)
    }

    pub fn draw_len(&self) -> usize {
        2 * self.n_f + 1
    }

    /// `k(y)` for one realization.
    pub fn evaluate(&self, draw: &Draw, y: f64) -> f64 {
        let (l0, li) = self.kl_eigenvalues();
        let mut k = self.a0 + self.sigma * l0.sqrt() * draw.y[0];
        for (i, l) in li.iter().enumerate() {
            let w = (i + 1) as f64 * PI * y;
            k += self.sigma * l.sqrt() * (draw.y[i + 1] * w.cos() + draw.y[self.n_f + i + 1] * w.sin());
        }
        k
    }

    /// Lower bound of `k` over every admissible draw.
    pub fn lower_bound(&self) -> f64 {
        let (l0, li) = self.kl_eigenvalues();
        let amp: f64 = l0.sqrt() + std::f64::consts::SQRT_2 * li.iter().map(|l| l.sqrt()).sum::<f64>();
        self.a0 - self.sigma * Y_BOUND * amp
    }

    pub fn draw(&self, seed: u64, j: usize) -> Draw {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let u = Uniform::new_inclusive(-Y_BOUND, Y_BOUND);
        Draw { y: (0..self.draw_len()).map(|_| u.sample(&mut rng)).collect() }
    }
}

/// `count` independent draws; draw `j` depends only on `(seed, j)`.
pub fn draw_samples(spec: &RandomFieldSpec, count: usize, seed: u64) -> Result<Vec<Draw>> {
    if count == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok((0..count).map(|j| spec.draw(seed, j)).collect())
}

/// Componentwise mean in sample order.
pub fn mc_expectation(fields: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = fields.first().ok_or(Error::EmptyEnsemble)?;
    let n = first.len();
    let mut mean = vec![0.0; n];
    for f in fields {
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: f.len() });
        }
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    let inv = 1.0 / fields.len() as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    Ok(mean)
}
