//! Fixtures shared by the benchmarks under `benches/`.

use eddm_core::random_field::RandomFieldSpec;
use eddm_core::scenario::{channel_band, channel_discretization, channel_samples, optimized_robin};
use eddm_core::{make_context, Discretization, EnsembleContext, Physics, StopRule};

/// Channel ensemble of `j` realizations at mesh size `1/n`, stopping per sample.
pub fn channel_case(n: u32, j: usize) -> (EnsembleContext, Discretization) {
    let h = 1.0 / n as f64;
    let disc = channel_discretization(h).expect("channel mesh");
    let robin = optimized_robin(1.0, 1.0, channel_band(h).expect("band")).expect("robin pair");
    let samples = channel_samples(&RandomFieldSpec::default(), j, 2024, 1.0).expect("draws");
    let (ctx, _) = make_context(samples, Physics::default(), robin, 1e-6, 500, &disc).expect("context");
    (ctx.with_stop(StopRule::PerSample), disc)
}
