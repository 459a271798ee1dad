//! Pricing of variable annuities with a Guaranteed Minimum Withdrawal Benefit.
//!
//! The contract value under static or optimal (dynamic) withdrawals is found
//! by backward induction over the withdrawal dates. Between dates the
//! expectation is a Gauss-Hermite quadrature applied to a natural cubic
//! spline of the value function in log-wealth; at each date a jump condition
//! applies the withdrawal. [`feesolver`] finds the fee that makes the
//! contract worth its premium, and [`montecarlo`] provides an independent
//! forward-simulation price for the static strategy.

pub mod contract;
pub mod engine;
pub mod error;
pub mod feesolver;
pub mod montecarlo;
pub mod quadrature;
pub mod spline;

pub use contract::{cashflow, terminal_payoff, AccountState, GmwbContract, MarketModel};
pub use engine::{price, Mode, PricingConfig, Variant};
pub use error::{Error, Result};
pub use feesolver::{solve_fair_fee, FeeResult, FeeSolverConfig, RootMethod};
pub use montecarlo::{mc_static_price, McConfig, McEstimate};

/// Basis points per unit rate.
pub const BP: f64 = 1e4;
