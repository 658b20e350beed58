//! Entanglement detection from measurement statistics via majorization.
//!
//! A POVM and a separability class give a state-independent bound vector
//! `ω` ([`bounds`]); every state in the class produces an outcome
//! distribution majorized by `ω`. The criteria in [`detect`] test a state's
//! distribution against such bounds directly, through Schur-concave
//! entropies, through doubly stochastic certificates, through f-divergence
//! circles around the uniform distribution, and through witness operators.

pub mod bounds;
pub mod catalog;
pub mod detect;
pub mod error;
pub mod expr;
pub mod io;
pub mod majorization;
pub mod measurements;
mod seed;
pub mod states;
pub mod tensor;

pub use bounds::{
    kseparable_bound, lattice_bound_123, product_uur_bound, sampled_bound, seesaw_bound, spectral_bound,
    BoundOptions, BoundResult, Method, PartitionSpec, SeparabilityClass,
};
pub use detect::{run_detection, Conclusion, Criterion, DetectionReport, Verdict};
pub use error::{Error, Result};
pub use majorization::{compare, construct_bistochastic, lattice_join, FDivergence, Relation, SchurMeasure};
pub use measurements::{measure, Povm, ProbabilityVector};
pub use states::{build_state, StateSpec};
pub use tensor::{DensityMatrix, HermitianOperator, HilbertSpec, PureState};
