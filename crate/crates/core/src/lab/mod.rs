//! Perturbed problem pairs whose optimal test channels jump apart while
//! their rates stay together.
//!
//! Every construction is driven by a dyadic perturbation `x = 2^-i`, present
//! only when an [`EnumerationTable`] lists `n` at index `i` within the first
//! `m` entries. Both perturbed problems are solved, as is the unperturbed one
//! (the reference `P*`). The statistic
//!
//! ```text
//! max{ TV(P1, P*), TV(P*, P2) }
//! ```
//!
//! is at least `TV(P1, P2) / 2` by the triangle inequality. It clears the
//! construction's threshold exactly when `x > 0`, so thresholding it decides
//! whether `n` was listed.

mod binary;
mod branch;
mod erasure_pair;
mod general;
mod table;

pub use binary::{
    binary_balanced_source, binary_dmax_branch_test, binary_zero_support_branch_test,
};
pub use branch::{BranchPair, BranchProblem, SolverTag, Verdict};
pub use erasure_pair::{erasure_branch_test, perturbed_measures, ErasureSetup};
pub use general::{
    construct_balanced_general, find_active_pairs, general_branch_test, ActivePairs,
    BalancedSource, LevelMode,
};
pub use table::{dyadic, dyadic_cutoff, exact, to_f64, x_value, x_value_from, EnumerationTable};
