//! Standard experiment setups: the smooth manufactured problem on `[0, pi]` and the
//! water channel over a porous bed with a random conductivity.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bc::BoundaryConditions;
use crate::conductivity::{zero_scalar, zero_vector, Conductivity};
use crate::ensemble::{Discretization, RobinParams, SampleParams, SampleReport};
use crate::error::{invalid, Result};
use crate::manufactured::Manufactured;
use crate::mesh::{Mesh, Rect, SideTags};
use crate::norms::{darcy_errors, stokes_errors, DarcyErrors, DarcyExact, StokesErrors, StokesExact};
use crate::random_field::RandomFieldSpec;
use crate::robin::{frequency_band, optimized_delta_d, FrequencyBand};

/// `[0, pi] x [0, 1]` over `[0, pi] x [-1, 0]`, all exterior data essential.
pub fn manufactured_discretization(h: f64) -> Result<Discretization> {
    let ms = Mesh::with_max_size(Rect::new(0.0, PI, 0.0, 1.0)?, h, SideTags::free_flow())?;
    let md = Mesh::with_max_size(Rect::new(0.0, PI, -1.0, 0.0)?, h, SideTags::porous())?;
    Discretization::new(ms, md, BoundaryConditions::enclosed())
}

/// Forcing and exact boundary data for `K = diag(k11, k22)`.
pub fn manufactured_sample(m: Manufactured) -> SampleParams {
    SampleParams {
        conductivity: Conductivity::Diagonal { k11: m.k11, k22: m.k22 },
        f_s: Arc::new(move |p| m.f_s(p)),
        f_d: Arc::new(move |p| m.f_d(p)),
        stokes_boundary: Arc::new(move |p| m.u_s(p)),
        darcy_boundary: Arc::new(move |p| m.u_d(p)),
        head_boundary: Arc::new(move |p| m.phi_d(p)),
    }
}

pub fn manufactured_exact(m: Manufactured) -> (StokesExact, DarcyExact) {
    (
        StokesExact { u: Arc::new(move |p| m.u_s(p)), grad_u: Arc::new(move |p| m.grad_u_s(p)), p: Arc::new(move |p| m.p_s(p)) },
        DarcyExact { u: Arc::new(move |p| m.u_d(p)), div_u: Arc::new(move |p| m.div_u_d(p)), phi: Arc::new(move |p| m.phi_d(p)) },
    )
}

pub fn manufactured_errors(disc: &Discretization, s: &SampleReport, m: Manufactured) -> (StokesErrors, DarcyErrors) {
    let (se, de) = manufactured_exact(m);
    (stokes_errors(&disc.stokes, &s.stokes, &se), darcy_errors(&disc.darcy, &s.darcy, &de))
}

/// Band of the manufactured interface: `m_min = 1` for length `pi`.
pub fn manufactured_band(h: f64) -> Result<FrequencyBand> {
    frequency_band(PI, h)
}

/// `delta_S` given, `delta_D` optimized over `band`.
pub fn optimized_robin(delta_s: f64, nu: f64, band: FrequencyBand) -> Result<RobinParams> {
    Ok(RobinParams { delta_s, delta_d: optimized_delta_d(delta_s, nu, band)? })
}

pub const CHANNEL_LENGTH: f64 = 3.0;
pub const CHANNEL_DEPTH: f64 = 3.0;

/// Channel `[0, 3] x [0, 1]` over the porous bed `[0, 3] x [-3, 0]`.
pub fn channel_discretization(h: f64) -> Result<Discretization> {
    let ms = Mesh::with_max_size(Rect::new(0.0, CHANNEL_LENGTH, 0.0, 1.0)?, h, SideTags::free_flow())?;
    let md = Mesh::with_max_size(Rect::new(0.0, CHANNEL_LENGTH, -CHANNEL_DEPTH, 0.0)?, h, SideTags::porous())?;
    Discretization::new(ms, md, BoundaryConditions::channel())
}

/// Parabolic inflow at `x = 0`, no slip elsewhere.
pub fn channel_inflow() -> crate::conductivity::VectorField {
    Arc::new(|p| if p[0] <= 1e-12 { [4.0 * p[1] * (1.0 - p[1]), 0.0] } else { [0.0, 0.0] })
}

/// Realizations `0..count` of the random bed, conductivity multiplied by `scale`.
pub fn channel_samples(spec: &RandomFieldSpec, count: usize, seed: u64, scale: f64) -> Result<Vec<SampleParams>> {
    if count == 0 {
        return Err(crate::error::Error::EmptyEnsemble);
    }
    channel_samples_range(spec, 0..count, seed, scale)
}

/// Realizations with indices in `range`; draw `j` is the same whichever batch holds it.
pub fn channel_samples_range(
    spec: &RandomFieldSpec,
    range: std::ops::Range<usize>,
    seed: u64,
    scale: f64,
) -> Result<Vec<SampleParams>> {
    spec.validate()?;
    if !(scale > 0.0) {
        return Err(invalid("conductivity scale must be positive"));
    }
    Ok(range
        .map(|j| SampleParams {
            conductivity: Conductivity::Random { spec: *spec, draw: spec.draw(seed, j), scale },
            f_s: zero_vector(),
            f_d: zero_scalar(),
            stokes_boundary: channel_inflow(),
            darcy_boundary: zero_vector(),
            head_boundary: zero_scalar(),
        })
        .collect())
}

pub fn channel_band(h: f64) -> Result<FrequencyBand> {
    frequency_band(CHANNEL_LENGTH, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_band_gives_closed_form() {
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let r = optimized_robin(1.0, 1.0, manufactured_band(h).unwrap()).unwrap();
            assert!((r.delta_d - (5.0 * PI + h) / (PI + 2.0 * h)).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_geometry() {
        let d = channel_discretization(0.5).unwrap();
        assert!(!d.pressure_nullspace);
        assert!((d.pairing.length - 3.0).abs() < 1e-14);
        assert!(manufactured_discretization(0.5).unwrap().pressure_nullspace);
        let s = channel_samples(&RandomFieldSpec::default(), 3, 1, 1.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].stokes_boundary)([0.0, 0.5]), [1.0, 0.0]);
        assert_eq!((s[0].stokes_boundary)([1.0, 1.0]), [0.0, 0.0]);
        let tail = channel_samples_range(&RandomFieldSpec::default(), 2..3, 1, 1.0).unwrap();
        let p = [1.0, -1.3];
        assert_eq!(s[2].conductivity.tensor(p), tail[0].conductivity.tensor(p));
    }
}
