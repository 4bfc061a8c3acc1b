//! Simulation and data-analysis toolkit for GHZ-state network
//! nonlocality experiments.
//!
//! The library covers the full pipeline of a triangular-network test of
//! genuine three-party nonlocality:
//!
//! - [`quantum`]: states, Born-rule outcome tables, white noise,
//!   fidelities;
//! - [`optics`]: the Jones-calculus model of the polarization
//!   modulators and the phase-to-basis map;
//! - [`inequality`]: the combined Bell/Same game score F, its N-party
//!   extension, and the visibility/fidelity thresholds;
//! - [`counts`]: raw coincidence tables, CSV input and output, F with
//!   bootstrap error bars (a reference dataset is bundled);
//! - [`witness`]: the GHZ fidelity witness from six measured terms;
//! - [`tomography`]: 27-setting state tomography with physical
//!   projection and Monte Carlo error bars;
//! - [`trials`]: an event-level simulator of the triggered-GHZ trial
//!   pipeline emitting counts tables;
//! - [`spacetime`]: locality-closure margins from station distances and
//!   delay chains (the deployed layout is bundled).

pub mod counts;
pub mod error;
pub mod inequality;
pub mod observable;
pub mod optics;
pub mod pauli;
pub mod quantum;
pub mod spacetime;
pub mod stats;
pub mod table;
pub mod tol;
pub mod tomography;
pub mod trials;
pub mod witness;

pub use error::{Error, Result};
pub use observable::{DichotomicObservable, MeasurementLayout};
pub use quantum::{
    expectation, fidelity_with_pure, ghz_state, mix_white_noise, outcome_probabilities,
    QuantumState,
};
pub use table::ProbabilityTable;
