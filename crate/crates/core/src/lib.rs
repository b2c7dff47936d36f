//! Coarse-grained boson sampling as a one-way function.
//!
//! The crate builds exact desk-scale boson output distributions from matrix
//! permanents, coarse-grains them into bins, estimates the most probable bin
//! (MPB) from sampled data by bootstrap resampling, evaluates the one-way
//! function built on repeated MPB quests, and quantifies its resistance to
//! preimage and collision search.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`matrix`] — complex matrices, Haar-random unitaries, permanents.
//! * [`config`] — collision-free boson configurations, ranking, binning.
//! * [`dist`] — exact output distributions and their coarse-grained form.
//! * [`sampler`] — alias-method bin sampling and reproducible RNG streams.
//! * [`bootstrap`] — percentile bootstrap for the maximum bin probability.
//! * [`mpb`] — the adaptive MPB estimation algorithm with END/ABORT status.
//! * [`owf`] — the one-way function itself (seed schedule, MPB rounds,
//!   Fisher–Yates post-processing).
//! * [`security`] — collision census, exhaustive-search bounds, birthday
//!   attack simulation, cost models.

pub mod bootstrap;
pub mod config;
pub mod dist;
pub mod error;
pub mod matrix;
pub mod mpb;
pub mod owf;
pub mod sampler;
pub mod security;

pub use error::{Error, Result};

pub use bootstrap::{bootstrap_analyze, frequencies, percentile, BootstrapSummary};
pub use config::{bit_length, space_size, BinStrategy, BinningScheme, ConfigSpace, Configuration};
pub use dist::{
    coarse_grain, eps_close_fraction, exact_output_distribution, gap_census, CoarseDistribution,
    OutputDistribution, DEFAULT_ENUMERATION_CAP,
};
pub use matrix::{
    haar_random_unitary, permanent_naive, permanent_ryser, read_unitary, submatrix, write_unitary,
    ComplexMatrix, UnitaryMatrix, C64,
};
pub use mpb::{
    estimate_mpb, estimate_mpb_majority, recommended_budget, status_probabilities, Algo1Outcome,
    Algo1Params, Algo1Status, BinSource, RecordSource, SamplerSource, StatusCounts,
};
pub use owf::{
    fisher_yates_map, next_kappa, OwfEvaluator, OwfMode, OwfParams, OwfTrace, RoundTrace,
};
pub use sampler::{
    build_sampler, chernoff_sample_size, draw_bins, read_record, write_record, AliasSampler,
    RngStream, SampleRecord,
};
pub use security::{
    birthday_simulate, collision_census, cost_estimates, exhaustive_failure_prob, t_min,
    BirthdayReport, CollisionReport, CostEstimate,
};
