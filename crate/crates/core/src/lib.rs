//! Power-domain NOMA with a common QoS rate: allocation limits, the fixed
//! allocation that matches orthogonal access, SIC outage evaluation, a
//! reproducible Monte Carlo simulator and closed-form order-statistics
//! outage probabilities.

pub mod allocation;
pub mod analytic;
pub mod channel;
pub mod config;
pub mod error;
pub mod outage;
pub mod plot;
pub mod settings;
pub mod stats;
pub mod sweep;

pub use allocation::{
    decode_thresholds, feasibility_check, interference_tails, oma_threshold,
    qos_fixed_allocation, DecodeThresholds, FeasibilityStatus, FeasibilityVerdict,
    PowerAllocation,
};
pub use analytic::{gamma_cdf, ordered_outage_probability, OrderedGainModel};
pub use channel::{
    gain_distribution_sampler, sample_realization, ChannelRealization, GainSampler, RngSpec,
    SamplerKind,
};
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use outage::{
    estimate_outage, evaluate_trial, noma_capacity, oma_capacity, sic_capacity, OutageMatrix,
    OutageReport, Simulation, TrialEvaluator,
};
