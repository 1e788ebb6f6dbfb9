//! Completion-time-minimal transmission for an energy-harvesting transmitter.
//!
//! A transmitter accumulates energy E_s(t) and data B_s(t) along known-only-
//! causally cumulative curves and must deliver B0 bits as early as possible
//! through a concave rate function r(p). This crate provides:
//!
//! * the two online policies — an eager one that starts as soon as finite-time
//!   completion is possible, and one that waits for every bit to arrive —
//!   both driving the implicit power law (E_rem/p)·r(p) = B_rem forward,
//! * the offline (noncausal) optimum via bisection over a discretized concave
//!   throughput program, as the competitive-ratio benchmark,
//! * a property harness sweeping randomized scenarios against the theory's
//!   invariants (2-competitiveness, waiting-time ordering, dominance), and
//! * a plain-text scenario format plus CSV trajectory export.

pub mod curve;
pub mod error;
pub mod harness;
pub mod offline;
pub mod policy;
pub mod rate;
pub mod scn;

pub use curve::{CumulativeCurve, Piece, SampledCurve, Segment};
pub use error::{Error, Result};
pub use harness::{
    competitive_report, discretization_study, property_sweep, tight_instance, CompetitiveReport,
    ScenarioFamily, SweepSummary,
};
pub use offline::{
    brute_force_throughput, max_throughput_by, offline_completion_time,
    offline_completion_time_with, OfflineSolution,
};
pub use policy::{
    instantaneous_power, simulate_alg1, simulate_alg2, waiting_time_alg1, waiting_time_alg2,
    Phase, PolicyTrajectory, Scenario, WaitingTime,
};
pub use rate::{RateFunction, TabulatedRate};
pub use scn::{parse_scenario, serialize_scenario};
