//! Solver for revenue-optimal sequential screening contracts.
//!
//! A seller prices usage of a service with decreasing-returns value `v * q^alpha`
//! and constant marginal cost `c`. The buyer first observes a private signal
//! `theta` about demand and contracts; the realized value `v` arrives later,
//! drawn from a conditional distribution `G(v | theta)`. This crate computes the
//! revenue-optimal direct mechanism for that environment and the two indirect
//! implementations used in practice — a menu of two-part tariffs and a menu of
//! committed-spend contracts — together with two extensions: a proportional
//! cost of upfront payments and an outside spot market.
//!
//! Everything is deterministic: fixed-order Gauss-Legendre quadrature,
//! bracketed root finding, and closed-form allocation rules. The [`verify`]
//! module re-derives the incentive and participation properties numerically so
//! that a solved model carries a machine-checkable report.
//!
//! Entry points:
//! - [`model::Model::example1`] builds the uniform reference environment.
//! - [`mechanism::DirectMechanism::solve`] computes the optimal mechanism.
//! - [`contracts::build_two_part_tariff`] / [`contracts::build_committed_spend`]
//!   produce the indirect implementations.
//! - [`frictions`] solves the upfront-cost and spot-market variants.
//! - [`verify`] produces the numerical verification report.

pub mod contracts;
pub mod diagnostics;
mod error;
pub mod export;
pub mod frictions;
pub mod mechanism;
pub mod model;
pub mod numerics;
pub mod verify;
pub mod virtual_value;

pub use contracts::{CommittedSpendContract, PriceSchedule, TwoPartTariff};
pub use diagnostics::{Diagnostic, Violation};
pub use error::{Error, Result};
pub use frictions::{CommitmentCostSolution, SpotMarketSolution};
pub use mechanism::{DirectMechanism, SolveOptions};
pub use model::{Environment, Model, MultiplicativeFamily, SignalDistribution, ValueFamily};
pub use numerics::{Grid, QuadratureRule, Tolerances};
pub use verify::{CheckResult, DeviationMatrix, VerificationReport};
pub use virtual_value::VirtualValueField;
