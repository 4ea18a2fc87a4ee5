//! The equilibrium-defining map on (prices, allocation, production) and a
//! damped fixed-point search built on it.

mod transfer;

pub use transfer::{bread_only_targets, solve_with_transfers, TransferResult, TransferRule, WealthTransfer};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certify::{certify, Certificate};
use crate::demand::{all_agents_demand, market_totals, DetailedAllocation, MarketTotals};
use crate::model::MarketInstance;
use crate::production::{all_earnings, best_response, Production};
use crate::scalar::{max_of, sum, Scalar};

/// A point of the map's domain plus the budgets the allocation was bought with.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState<T> {
    /// On the simplex: nonnegative, summing to 1. Bread first.
    pub prices: Vec<T>,
    pub x: DetailedAllocation<T>,
    pub y: Production<T>,
    pub budgets: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceRule {
    /// Uniform weight on every good attaining the largest bought/sold ratio.
    Argmax,
    /// `p_j ← p_j · ratio_j^η`, renormalized.
    Multiplicative,
}

/// Which allocation the production best response is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOrder {
    /// All components from the previous state.
    Jacobi,
    /// Production first, then demand is allocated against the new production.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub rule: PriceRule,
    /// Price step in `(0, 1]`.
    pub eta: f64,
    /// Weight of the best response when blending production, in `(0, 1]`.
    pub damping: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub certify_every: usize,
    /// Seeds the perturbation of the starting prices.
    pub seed: u64,
    pub order: UpdateOrder,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rule: PriceRule::Multiplicative,
            eta: 0.1,
            damping: 0.5,
            max_iters: 50_000,
            tol: 1e-6,
            certify_every: 1,
            seed: 0,
            order: UpdateOrder::Jacobi,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidParams(m.into()));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("production damping must lie in (0, 1]");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.certify_every == 0 {
            return bad("certify_every must be at least 1");
        }
        Ok(())
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub iter: usize,
    pub prices: Vec<T>,
    pub production_gap: T,
    pub demand_gap: T,
    pub clearing_gap: T,
    pub total_earnings: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveOutcome {
    /// A certified state was found after this many iterations.
    Converged { iterations: usize },
    /// The budget ran out; the returned state is the best one seen.
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub state: MarketState<T>,
    pub certificate: Certificate<T>,
    pub log: Vec<IterationRecord<T>>,
    pub outcome: SolveOutcome,
}

impl<T> SolveResult<T> {
    pub fn converged(&self) -> bool {
        matches!(self.outcome, SolveOutcome::Converged { .. })
    }
}

/// Uniform distribution over the goods whose ratio attains the maximum.
pub fn argmax_prices<T: Scalar>(ratios: &[T]) -> Vec<T> {
    let best = max_of(ratios.iter().copied());
    let slack = T::epsilon() * T::lit(8.0) * T::one().max(best.abs());
    let on_face: Vec<bool> = ratios.iter().map(|&r| r >= best - slack).collect();
    let count = T::from_count(on_face.iter().filter(|&&b| b).count());
    on_face
        .iter()
        .map(|&b| if b { T::one() / count } else { T::zero() })
        .collect()
}

/// New prices from bought/sold totals.
pub fn price_update<T: Scalar>(totals: &MarketTotals<T>, prev: &[T], rule: PriceRule, eta: T) -> Vec<T> {
    let ratios = totals.ratios();
    match rule {
        PriceRule::Argmax => {
            let target = argmax_prices(&ratios);
            prev.iter()
                .zip(&target)
                .map(|(&p, &t)| (T::one() - eta) * p + eta * t)
                .collect()
        }
        PriceRule::Multiplicative => {
            let raw: Vec<T> = prev.iter().zip(&ratios).map(|(&p, &r)| p * r.powf(eta)).collect();
            let total = sum(&raw);
            if total > T::zero() && total.is_finite() {
                raw.iter().map(|&v| v / total).collect()
            } else {
                prev.to_vec()
            }
        }
    }
}

/// One application of the map: demand and best responses against the given
/// state, prices from its bought/sold ratios, budgets from its earnings.
pub fn f_map<T: Scalar>(inst: &MarketInstance<T>, state: &MarketState<T>, rule: PriceRule) -> MarketState<T> {
    let earned = all_earnings(inst, &state.prices, &state.x, &state.y);
    let x = all_agents_demand(inst, &state.prices, &earned, &state.y);
    let y = Production {
        rows: (0..inst.n())
            .map(|i| best_response(inst, &state.prices, &state.x, &state.y, i))
            .collect(),
    };
    let totals = market_totals(&state.x, &state.y, inst);
    let prices = price_update(&totals, &state.prices, rule, T::one());
    MarketState {
        prices,
        x,
        y,
        budgets: earned,
    }
}

/// How far `state` is from being mapped onto itself.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResiduals<T> {
    /// `max_i |f_i(x'_i) − f_i(x_i)|`.
    pub utility_gap: T,
    /// `max_i |best-response earnings − earnings|`.
    pub earnings_gap: T,
    /// Largest shortfall of a positively priced good's ratio from the maximum ratio.
    pub ratio_gap: T,
    /// `|max ratio − 1|`.
    pub max_ratio_offset: T,
}

impl<T: Scalar> FixedPointResiduals<T> {
    pub fn max(&self) -> T {
        self.utility_gap
            .max(self.earnings_gap)
            .max(self.ratio_gap)
            .max(self.max_ratio_offset)
    }
}

pub fn fixed_point_residuals<T: Scalar>(inst: &MarketInstance<T>, state: &MarketState<T>) -> FixedPointResiduals<T> {
    let cap = inst.bounds().cap;
    let earned = all_earnings(inst, &state.prices, &state.x, &state.y);
    let next = all_agents_demand(inst, &state.prices, &earned, &state.y);
    let utility_gap = max_of((0..inst.n()).map(|i| {
        let u = &inst.agent(i).utility;
        (u.value(&next.coarse_bundle(i), cap) - u.value(&state.x.coarse_bundle(i), cap)).abs()
    }));
    let earnings_gap = max_of((0..inst.n()).map(|i| {
        let (_, best) = crate::production::best_response_earnings(inst, &state.prices, &state.x, &state.y, i);
        (best - earned[i]).abs()
    }));
    let ratios = market_totals(&state.x, &state.y, inst).ratios();
    let top = max_of(ratios.iter().copied());
    let ratio_gap = max_of(
        ratios
            .iter()
            .zip(&state.prices)
            .filter(|(_, &p)| p > T::zero())
            .map(|(&r, _)| top - r),
    )
    .max(T::zero());
    FixedPointResiduals {
        utility_gap,
        earnings_gap,
        ratio_gap,
        max_ratio_offset: (top - T::one()).abs(),
    }
}

/// Starting point: every agent bakes, prices are a seeded perturbation of the
/// uniform vector, and each agent buys its demand with what it then earns.
pub fn initial_state<T: Scalar>(inst: &MarketInstance<T>, seed: u64) -> MarketState<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = inst.g() + 1;
    let raw: Vec<f64> = (0..k).map(|_| 1.0 + 0.1 * rng.gen_range(-1.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let prices: Vec<T> = raw.iter().map(|&v| T::lit(v / total)).collect();
    let y = Production::all_bread(inst);
    let empty = DetailedAllocation::zeros(inst);
    let first = all_earnings(inst, &prices, &empty, &y);
    let x = all_agents_demand(inst, &prices, &first, &y);
    let budgets = all_earnings(inst, &prices, &x, &y);
    MarketState { prices, x, y, budgets }
}

/// One damped iteration of the search.
pub(crate) fn step<T: Scalar>(
    inst: &MarketInstance<T>,
    state: &MarketState<T>,
    config: &SolveConfig,
    budgets: &[T],
) -> MarketState<T> {
    let p = &state.prices;
    let theta = T::lit(config.damping);
    let best: Vec<Vec<T>> = (0..inst.n())
        .map(|i| best_response(inst, p, &state.x, &state.y, i))
        .collect();
    let y = Production {
        rows: state
            .y
            .rows
            .iter()
            .zip(&best)
            .map(|(old, new)| {
                old.iter()
                    .zip(new)
                    .map(|(&a, &b)| (T::one() - theta) * a + theta * b)
                    .collect()
            })
            .collect(),
    };
    let x = match config.order {
        UpdateOrder::Jacobi => all_agents_demand(inst, p, budgets, &state.y),
        UpdateOrder::GaussSeidel => all_agents_demand(inst, p, budgets, &y),
    };
    let totals = market_totals(&state.x, &state.y, inst);
    let prices = price_update(&totals, p, config.rule, T::lit(config.eta));
    MarketState {
        prices,
        x,
        y,
        budgets: budgets.to_vec(),
    }
}

pub(crate) fn record<T: Scalar>(iter: usize, state: &MarketState<T>, cert: &Certificate<T>, earned: &[T]) -> IterationRecord<T> {
    IterationRecord {
        iter,
        prices: state.prices.clone(),
        production_gap: cert.max_production_gap(),
        demand_gap: cert.max_demand_gap(),
        clearing_gap: cert.max_clearing_gap(),
        total_earnings: sum(earned),
    }
}

/// Damped fixed-point search. Certifies every `certify_every` iterations and
/// stops at the first certified state.
pub fn solve<T: Scalar>(inst: &MarketInstance<T>, config: &SolveConfig) -> crate::Result<SolveResult<T>> {
    config.validate()?;
    let tol = T::lit(config.tol);
    let mut state = initial_state(inst, config.seed);
    let mut log = Vec::new();
    let mut best: Option<(MarketState<T>, Certificate<T>)> = None;

    for iter in 0..=config.max_iters {
        let earned = all_earnings(inst, &state.prices, &state.x, &state.y);
        if iter % config.certify_every == 0 || iter == config.max_iters {
            let cert = certify(inst, &state, tol)?;
            log.push(record(iter, &state, &cert, &earned));
            log::trace!(
                "iter {iter}: residuals {:.3e} {:.3e} {:.3e}",
                cert.max_production_gap().to_f64_lossy(),
                cert.max_demand_gap().to_f64_lossy(),
                cert.max_clearing_gap().to_f64_lossy()
            );
            if cert.pass {
                log::info!("certified equilibrium after {iter} iterations");
                return Ok(SolveResult {
                    state,
                    certificate: cert,
                    log,
                    outcome: SolveOutcome::Converged { iterations: iter },
                });
            }
            if best
                .as_ref()
                .is_none_or(|(_, b)| cert.max_residual() < b.max_residual())
            {
                best = Some((state.clone(), cert));
            }
        }
        if iter == config.max_iters {
            break;
        }
        state = step(inst, &state, config, &earned);
    }
    let (state, certificate) = best.expect("at least one certificate");
    log::info!(
        "no certified state within {} iterations (best residual {:.3e})",
        config.max_iters,
        certificate.max_residual().to_f64_lossy()
    );
    Ok(SolveResult {
        state,
        certificate,
        log,
        outcome: SolveOutcome::MaxIters,
    })
}
