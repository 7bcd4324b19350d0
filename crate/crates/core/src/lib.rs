//! Ensemble Robin-Robin domain decomposition for the Stokes-Darcy problem with a
//! random hydraulic conductivity.
//!
//! Free flow is discretized with MINI elements, the porous medium with BDM1-P0 mixed
//! elements, and the two meet across a straight interface with Beavers-Joseph
//! conditions. All realizations of an ensemble share one factorized operator per
//! subdomain; see [`ensemble`].

pub mod bc;
pub mod conductivity;
pub mod darcy;
pub mod ensemble;
pub mod error;
pub mod interface;
pub mod manufactured;
pub mod mesh;
pub mod monolithic;
pub mod norms;
pub mod quadrature;
pub mod random_field;
pub mod robin;
pub mod scenario;
pub mod sparse;
pub mod stokes;

pub use bc::BoundaryConditions;
pub use conductivity::{Conductivity, ScalarField, Sym2, VectorField};
pub use ensemble::{
    make_context, run_ensemble_ddm, run_traditional_ddm, Discretization, EnsembleContext, EnsembleDiagnostics, Physics,
    RobinParams, SampleParams, SampleReport, SolveReport, StopRule, Timings,
};
pub use error::{Error, Result};
pub use interface::{RobinTraceState, TraceFunction};
pub use mesh::{build_rect_mesh, pair_interface, BoundaryTag, InterfacePairing, Mesh, Point, Rect, SideTags};
pub use monolithic::check_converged_residual;
pub use random_field::{Draw, RandomFieldSpec};
pub use robin::{convergence_factor, optimized_delta_d, FrequencyBand};
