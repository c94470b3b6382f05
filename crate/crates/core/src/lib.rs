//! Equilibrium outcomes and optimal sales-based rebate programs for a
//! monopolist selling to a continuum of consumers whose valuations mix
//! quality uncertainty with idiosyncratic taste.
//!
//! A rebate here is a payment returned to every buyer after sales close, as a
//! function of realized sales volume; under threshold consumer behavior it is
//! equivalently a function `r(v)` of the realized quality. The crate solves
//! the consumer-side cutoff equilibrium, evaluates seller profit by two
//! independent routes, constructs the analytically characterized optimal
//! programs (spread-constrained step, rate-constrained saturated-linear, and
//! the relaxed-problem benchmark), computes upper bounds on the achievable
//! profit, searches over full-refund interval policies, and validates the
//! continuum formulas with a finite-agent Monte Carlo.

// reference constants keep every digit their generators emitted
#![allow(clippy::excessive_precision)]
// negated comparisons are NaN guards: `!(x > 0.0)` rejects NaN, `x <= 0.0` lets it through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod fmt;
pub mod gauss;
pub mod market;
pub mod schedule;
pub mod sim;
pub mod solvers;
pub mod sweep;

pub use equilibrium::{Equilibrium, ProfitDecomposition, RewardPremium};
pub use error::{Error, Result};
pub use market::{MarketParams, Posterior};
pub use schedule::{RateCertificate, RewardForm, RewardSchedule, SpreadCertificate};
pub use sim::{SimConfig, SimResult};
pub use solvers::{IntervalSearchConfig, ProfitBounds, SolverReport};
pub use sweep::{SweepOptions, SweepRow};
