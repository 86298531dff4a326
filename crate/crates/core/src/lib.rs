//! Incentive analysis for random assignment mechanisms.
//!
//! The crate measures how strategyproof a tabulated mechanism is: it checks
//! stochastic, lexicographic and r-discounted dominance of truthful
//! assignments, computes local and global degrees of partial
//! strategyproofness, and builds the four-object family that shows the
//! squared bound between them cannot be improved.

pub mod analysis;
pub mod assign;
pub mod counterexample;
pub mod dominance;
pub mod geometry;
pub mod interval;
pub mod poly;
pub mod prefs;
pub mod rational;
