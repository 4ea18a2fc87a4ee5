//! Equilibrium computation for a mixed economy of one conventional good
//! ("bread") and categories of mutually substitutable digital goods ("songs").
//!
//! All songs of a category share one price. Buyers pick a coarse bundle by
//! utility maximization and then fill each category by walking a personal
//! ranking of initial songs and producers. Producers best-respond to the
//! residual demand they face. The crate evaluates the resulting fixed-point
//! map, searches for fixed points, certifies candidate equilibria, and checks
//! the partial first and the transfer-based second welfare property.
//!
//! Numerics are generic over [`Scalar`] (`f32`, `f64`); the aliases at the
//! crate root fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certify;
pub mod demand;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod production;
pub mod scalar;
pub mod state_io;

pub use certify::{
    certify, certify_with_budgets, check_balance_identity, check_partial_pareto, check_transfer_equilibrium,
    BalanceReport, Certificate, ParetoVerdict, TransferVerdict,
};
pub use demand::{
    all_agents_demand, coarse_demand, detailed_allocation, excess_supply, market_totals, DetailedAllocation,
    MarketTotals,
};
pub use equilibrium::{
    f_map, fixed_point_residuals, price_update, solve, solve_with_transfers, MarketState, PriceRule, SolveConfig,
    SolveOutcome, SolveResult, UpdateOrder,
};
pub use error::{Error, Result};
pub use model::{
    compute_bounds, generate_instance, parse_instance, serialize_instance, Entity, GeneratorParams, GlobalBounds,
    MarketInstance, UtilityFamily, UtilitySpec,
};
pub use production::{best_response, earnings, sold_curve, Production, SoldCurve};
pub use scalar::Scalar;

pub type Instance = MarketInstance<f64>;
pub type State = MarketState<f64>;
pub type Allocation = DetailedAllocation<f64>;
pub type Output = Production<f64>;
pub type Cert = Certificate<f64>;
pub type Bounds = GlobalBounds<f64>;

pub type Instance32 = MarketInstance<f32>;
pub type State32 = MarketState<f32>;
