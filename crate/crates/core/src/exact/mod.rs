//! Deterministic quenched computations on a fixed environment.

pub mod bounds;
pub mod decay;
pub mod fk;
pub mod green;
pub mod hitting;
pub mod uniformization;

pub use bounds::{
    chebyshev_ub, slowdown_lower_bound, slowdown_upper_bound, upper_bound_terms, BoundBracket, ChebyshevBound,
    SlowdownQuery, UpperTerms, BRACKET_CSV_HEADER,
};
pub use decay::{decay_constants, homogeneous_mgf, mgf_pole, DecayConstants};
pub use fk::{fk_functional, fk_solve, fk_solve_monotone, Divergence, FKQuery, FkOutcome};
pub use green::{exit_times, green_column, green_interval, green_row, weights_c};
pub use hitting::{
    backtrack_probs, crossing_times, expected_hitting_time_right, hitting_prob_left, log_hitting_prob_left,
};
pub use uniformization::{
    exit_survival, leak_bound, oracle_window, right_leak_bound, transient_distribution, uniformization_slowdown,
    Transient,
};
