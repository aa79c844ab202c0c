//! Extreme-value Monte Carlo: maxima, the expected-max fit, tightness,
//! barrier events on MBRW scale paths, and Gaussian bridge estimates.

mod barrier;
mod bridge;
mod fit;
mod maxima;

pub use barrier::{
    a_n, barrier_curve, barrier_events_in_bank, barrier_replicate_bank, count_barrier_events,
    lefttail_decay, pair_overlap, BarrierSpec, EventCounts, LeftTailRow, ReplicateEvents,
};
pub use bridge::{
    bridge_barrier_prob, bridge_decay, sample_bridge, BridgeBarrier, BridgeDecay, BridgeEstimate,
};
pub use fit::{fit_expected_max, fit_from_means, FitResult, BRW_C1, BRW_C2, GFF_C1, GFF_C2};
pub use maxima::{
    max_stats, sample_maxima, summarize_maxima, tightness_report, MaxStats, Restriction,
    TightnessReport, TightnessRow, MIN_RELIABLE_REPS,
};
