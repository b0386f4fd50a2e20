//! A laboratory for quenched versus annealed central limit behaviour of
//! stationary processes.
//!
//! The centrepiece is an explicit process `f = g - Ug` whose coboundary `g`
//! is integrable but not square integrable: its partial sums are
//! asymptotically negligible in law, yet the conditional mean given the past
//! drifts by order `√n` along rare events. The crate provides
//!
//! * [`schedule`]: the block sequences `ℓ_k`, `M_k`, `N_k` with exact
//!   big-integer arithmetic and closed-form moments,
//! * [`innovations`]: a lazily sampled, counter-based innovation lattice with
//!   forced entries and quenched scenarios,
//! * [`counterexample`]: evaluation of `f`, `g`, partial sums, conditional
//!   means, exact variances and projections,
//! * [`families`]: reference processes (i.i.d., linear, martingale plus
//!   coboundary),
//! * [`harness`]: Monte Carlo estimation of quenched and annealed laws,
//!   Kolmogorov–Smirnov distances and martingale CLT diagnostics,
//! * [`cli`]: the `quenched` command-line front end.

pub mod cli;
pub mod counterexample;
pub mod error;
pub mod families;
pub mod harness;
pub mod innovations;
pub mod report;
pub mod schedule;
pub mod stream;

pub use error::{Error, Result};
