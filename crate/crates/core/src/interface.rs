//! Robin data on the interface and the transmission updates between sweeps.

use crate::error::{Error, Result};
use crate::mesh::InterfacePairing;
use crate::sparse::SparseMatrix;

/// Piecewise-linear, edgewise-discontinuous function on the interface.
/// `values[k]` holds the values at the two endpoints of pair `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFunction {
    pub values: Vec<[f64; 2]>,
}

impl TraceFunction {
    pub fn zeros(n_pairs: usize) -> Self {
        Self { values: vec![[0.0; 2]; n_pairs] }
    }

    pub fn constant(n_pairs: usize, c: f64) -> Self {
        Self { values: vec![[c; 2]; n_pairs] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `self * a + other * b + c` endpointwise.
    pub fn affine(&self, a: f64, other: &TraceFunction, b: f64, c: f64) -> TraceFunction {
        TraceFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(p, q)| [a * p[0] + b * q[0] + c, a * p[1] + b * q[1] + c])
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> TraceFunction {
        TraceFunction { values: self.values.iter().map(|p| [s * p[0], s * p[1]]).collect() }
    }

    /// `(int_e f lambda_0, int_e f lambda_1)` on pair `k` of length `len`.
    #[inline]
    pub fn moments(&self, k: usize, len: f64) -> [f64; 2] {
        let [a, b] = self.values[k];
        [len / 6.0 * (2.0 * a + b), len / 6.0 * (a + 2.0 * b)]
    }

    /// `int_Gamma f`.
    pub fn integral(&self, pairing: &InterfacePairing) -> f64 {
        self.values.iter().zip(&pairing.pairs).map(|(v, p)| 0.5 * p.length * (v[0] + v[1])).sum()
    }

    /// `int_Gamma f g` (exact for piecewise linears).
    pub fn inner(&self, other: &TraceFunction, pairing: &InterfacePairing) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(&pairing.pairs)
            .map(|((a, b), p)| p.length / 6.0 * (2.0 * a[0] * b[0] + a[0] * b[1] + a[1] * b[0] + 2.0 * a[1] * b[1]))
            .sum()
    }
}

/// Normal and tangential interface traces of one pair of subdomain solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceTraces {
    /// `u_S . n_S`
    pub stokes_normal: TraceFunction,
    /// `u_S . tau`
    pub stokes_tangential: TraceFunction,
    /// `u_D . n_D`
    pub darcy_normal: TraceFunction,
    /// `u_D . tau`, taken from the porous-side element.
    pub darcy_tangential: TraceFunction,
}

impl InterfaceTraces {
    pub fn zeros(n_pairs: usize) -> Self {
        let z = TraceFunction::zeros(n_pairs);
        Self { stokes_normal: z.clone(), stokes_tangential: z.clone(), darcy_normal: z.clone(), darcy_tangential: z }
    }
}

/// Robin data and lagged fields of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleState {
    pub g_s: TraceFunction,
    pub g_s_tau: TraceFunction,
    pub g_d: TraceFunction,
    pub traces: InterfaceTraces,
    /// Full Darcy velocity dof vector of the previous sweep.
    pub u_d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobinTraceState {
    pub samples: Vec<SampleState>,
}

/// Constants entering the transmission updates of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateParams {
    pub delta_s: f64,
    pub delta_d: f64,
    pub g: f64,
    pub z: f64,
    pub xi: f64,
}

/// All Robin data and lagged fields zero.
pub fn init_state(n_samples: usize, pairing: &InterfacePairing, n_darcy_velocity: usize) -> RobinTraceState {
    let n = pairing.len();
    let zero = TraceFunction::zeros(n);
    RobinTraceState {
        samples: (0..n_samples)
            .map(|_| SampleState {
                g_s: zero.clone(),
                g_s_tau: zero.clone(),
                g_d: zero.clone(),
                traces: InterfaceTraces::zeros(n),
                u_d: vec![0.0; n_darcy_velocity],
            })
            .collect(),
    }
}

impl RobinTraceState {
    pub fn sample(&self, j: usize) -> Result<&SampleState> {
        self.samples.get(j).ok_or(Error::MissingSample(j))
    }

    /// Apply the transmission updates to sample `j`; all new data are built from the
    /// previous sweep's `g` values before anything is overwritten.
    pub fn update_robin(&mut self, j: usize, new: InterfaceTraces, u_d: Vec<f64>, p: &UpdateParams) -> Result<()> {
        self.samples.get_mut(j).ok_or(Error::MissingSample(j))?.update(new, u_d, p);
        Ok(())
    }
}

impl SampleState {
    /// Transmission update of this sample alone.
    pub fn update(&mut self, new: InterfaceTraces, u_d: Vec<f64>, p: &UpdateParams) {
        let sum = p.delta_s + p.delta_d;
        let g_d = self.g_s.affine(1.0, &new.stokes_normal, sum, p.g * p.z);
        let g_s = self.g_d.affine(1.0, &new.darcy_normal, sum, -p.g * p.z);
        let g_s_tau = new.darcy_tangential.scaled(-p.xi);
        self.g_d = g_d;
        self.g_s = g_s;
        self.g_s_tau = g_s_tau;
        self.traces = new;
        self.u_d = u_d;
    }
}

/// `sqrt(|du_S|^2_M_S + |du_D|^2_M_D)` for full velocity vectors of two sweeps.
pub fn stopping_norm(
    mass_s: &SparseMatrix,
    mass_d: &SparseMatrix,
    prev_s: &[f64],
    new_s: &[f64],
    prev_d: &[f64],
    new_d: &[f64],
) -> f64 {
    let sq = |m: &SparseMatrix, a: &[f64], b: &[f64]| {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let md = m.mul_vec(&d).expect("mass matrix matches velocity length");
        d.iter().zip(&md).map(|(x, y)| x * y).sum::<f64>().max(0.0)
    };
    (sq(mass_s, &prev_s[..mass_s.n_rows()], &new_s[..mass_s.n_rows()])
        + sq(mass_d, &prev_d[..mass_d.n_rows()], &new_d[..mass_d.n_rows()]))
    .sqrt()
}
