//! Monte Carlo simulation of emitter-absorber transactions.
//!
//! * [`wavefield`]: the four plane waves of a one-dimensional handshake and
//!   their cancellation outside the emission-absorption window.
//! * [`spacetime`]: vertices, Minkowski intervals and hierarchy ordering.
//! * [`engine`]: echoes, hierarchy-ordered stochastic selection and
//!   completed transactions with their conservation ledger.
//! * [`scenarios`]: single-photon bubble, entangled pair, CHSH and the
//!   contingent-absorber layout.
//! * [`stats`]: chi-square tests and power-law fits used for validation.
//! * [`config`] and [`cli`]: scenario files and the `tqm` command line.

pub mod cli;
pub mod config;
pub mod engine;
pub mod report;
pub mod rng;
pub mod scenarios;
pub mod spacetime;
pub mod stats;
pub mod wavefield;
