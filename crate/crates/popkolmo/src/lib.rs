//! # popkolmo
//!
//! Spectral and graph analysis of Kolmogorov (transition) matrices for
//! multi-patch populations, plus a simulator for the age-structured
//! migration model u_t = -u_a - M(a)u + (1/ε)Cu.
//!
//! The library is organized along the pipeline:
//!
//! - [`kolmogorov`] — validated transition matrices and their
//!   column-stochastic propagators exp(tC);
//! - [`structure`] — the patch digraph, irreducibility, and the
//!   closed/transient block normal form;
//! - [`spectral`] — full spectrum, spectral bound with an eigenvector
//!   witness, the right Perron kernel basis and its zero pattern;
//! - [`sim`] — the age-structured stepper (exact transport, exponential
//!   mortality, stiff migration via the matrix exponential, renewal
//!   boundary);
//! - [`aggregate`] — the k-weighted averaged scalar model and deviation
//!   reports against the full run;
//! - [`report`], [`io`] — the combined analysis report and all file
//!   formats.

pub mod aggregate;
pub mod dense;
pub mod error;
pub mod io;
pub mod kolmogorov;
pub mod report;
pub mod sim;
pub mod spectral;
pub mod structure;

pub use aggregate::{averaged_rates, compare, simulate_aggregated, AveragedModel, CompareRow};
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use kolmogorov::{matrix_exponential, MatrixExponentialResult, TransitionMatrix};
pub use report::{analyze_matrix, AnalysisReport, TheoremChecks};
pub use sim::{
    patch_shares, renewal_boundary, simulate, AgeGrid, PopulationState, Sample, SimulationConfig,
    Stepper, Trajectory, VitalRates,
};
pub use spectral::{
    analyze, full_spectrum, right_perron_basis, spectral_bound_with_witness, verify_zero_pattern,
    SpectralReport,
};
pub use structure::{
    adjacency_graph, classify_states, is_irreducible, normal_form, Block, NormalForm, PatchGraph,
    StateKind,
};
