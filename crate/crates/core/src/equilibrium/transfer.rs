//! Equilibrium with a wealth transfer: budgets are a redistribution of total
//! earnings steered so that achieved utilities become a common multiple of
//! the targets.

use super::{initial_state, record, step, IterationRecord, MarketState, SolveConfig, SolveOutcome};
use crate::certify::{check_transfer_equilibrium, TransferVerdict};
use crate::error::{Error, Result};
use crate::model::MarketInstance;
use crate::production::all_earnings;
use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferRule {
    /// Damped step toward putting all earnings on the agents with the lowest
    /// `v_i / u_i`.
    Argmin,
    /// `w_i ← w_i · (mean ratio / ratio_i)^η`, rescaled to total earnings.
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WealthTransfer<T> {
    /// Spending budget per agent.
    pub budgets: Vec<T>,
    /// Total earnings the budgets redistribute.
    pub total_earnings: T,
    /// Mean of `v_i / u_i`.
    pub alpha: T,
    /// `v_i / u_i − α` per agent.
    pub deviations: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct TransferResult<T> {
    pub state: MarketState<T>,
    pub transfer: WealthTransfer<T>,
    pub verdict: TransferVerdict<T>,
    pub log: Vec<IterationRecord<T>>,
    pub outcome: SolveOutcome,
}

impl<T> TransferResult<T> {
    pub fn converged(&self) -> bool {
        matches!(self.outcome, SolveOutcome::Converged { .. })
    }
}

/// Utilities of a restriction to the conventional economy: every agent puts
/// all labor into bread and receives `shares[i]` of the total (its own output
/// when `shares` is `None`). No songs are allocated.
pub fn bread_only_targets<T: Scalar>(inst: &MarketInstance<T>, shares: Option<&[T]>) -> Vec<T> {
    let output: Vec<T> = inst.agents().iter().map(|a| a.labor / a.costs[0]).collect();
    let total = sum(&output);
    let cap = inst.bounds().cap;
    (0..inst.n())
        .map(|i| {
            let mut z = vec![T::zero(); inst.g() + 1];
            z[0] = shares.map_or(output[i], |s| s[i] * total);
            inst.agent(i).utility.value(&z, cap)
        })
        .collect()
}

fn transfer_rule(config: &SolveConfig) -> TransferRule {
    match config.rule {
        super::PriceRule::Argmax => TransferRule::Argmin,
        super::PriceRule::Multiplicative => TransferRule::Multiplicative,
    }
}

fn update_budgets<T: Scalar>(rule: TransferRule, w: &[T], ratios: &[T], gamma: T, eta: T) -> Vec<T> {
    let n = w.len();
    let mean = sum(ratios) / T::from_count(n);
    let next: Vec<T> = match rule {
        TransferRule::Argmin => {
            let low = ratios.iter().copied().fold(T::infinity(), T::min);
            let slack = T::epsilon() * T::lit(8.0) * T::one().max(low.abs());
            let hits: Vec<bool> = ratios.iter().map(|&r| r <= low + slack).collect();
            let count = T::from_count(hits.iter().filter(|&&h| h).count());
            let scale = if sum(w) > T::zero() { gamma / sum(w) } else { T::zero() };
            w.iter()
                .zip(&hits)
                .map(|(&wi, &h)| {
                    let target = if h { gamma / count } else { T::zero() };
                    (T::one() - eta) * wi * scale + eta * target
                })
                .collect()
        }
        TransferRule::Multiplicative => {
            let floor = T::lit(1e-12) * mean.max(T::min_positive_value());
            w.iter()
                .zip(ratios)
                .map(|(&wi, &r)| {
                    let base = wi.max(gamma * T::lit(1e-9));
                    base * (mean.max(floor) / r.max(floor)).powf(eta)
                })
                .collect()
        }
    };
    let total = sum(&next);
    if total > T::zero() {
        next.iter().map(|&v| v * gamma / total).collect()
    } else {
        vec![gamma / T::from_count(n); n]
    }
}

/// Searches for an equilibrium with wealth transfer whose utilities are a
/// common multiple `α` of `targets`.
pub fn solve_with_transfers<T: Scalar>(
    inst: &MarketInstance<T>,
    targets: &[T],
    config: &SolveConfig,
) -> Result<TransferResult<T>> {
    config.validate()?;
    if targets.len() != inst.n() {
        return Err(Error::Dimension(format!("{} targets for {} agents", targets.len(), inst.n())));
    }
    if let Some((agent, &value)) = targets.iter().enumerate().find(|(_, &u)| !(u > T::zero())) {
        return Err(Error::NonPositiveTarget {
            agent,
            value: value.to_f64_lossy(),
        });
    }
    let tol = T::lit(config.tol);
    let eta = T::lit(config.eta);
    let rule = transfer_rule(config);
    let cap = inst.bounds().cap;
    let mut state = initial_state(inst, config.seed);
    let mut log = Vec::new();
    let mut best: Option<(MarketState<T>, TransferVerdict<T>)> = None;
    let mut outcome = SolveOutcome::MaxIters;

    for iter in 0..=config.max_iters {
        let earned = all_earnings(inst, &state.prices, &state.x, &state.y);
        let gamma = sum(&earned);
        if iter % config.certify_every == 0 || iter == config.max_iters {
            let verdict = check_transfer_equilibrium(inst, &state, &state.budgets, targets, tol)?;
            log.push(record(iter, &state, &verdict.certificate, &earned));
            let done = verdict.certificate.pass && verdict.max_deviation <= tol && verdict.budget_gap <= tol;
            let score = verdict.certificate.max_residual().max(verdict.max_deviation).max(verdict.budget_gap);
            if best.as_ref().is_none_or(|(_, b)| {
                score < b.certificate.max_residual().max(b.max_deviation).max(b.budget_gap)
            }) || done
            {
                best = Some((state.clone(), verdict));
            }
            if done {
                outcome = SolveOutcome::Converged { iterations: iter };
                break;
            }
        }
        if iter == config.max_iters {
            break;
        }
        let ratios: Vec<T> = (0..inst.n())
            .map(|i| inst.agent(i).utility.value(&state.x.coarse_bundle(i), cap) / targets[i])
            .collect();
        let w = update_budgets(rule, &state.budgets, &ratios, gamma, eta);
        state = step(inst, &state, config, &w);
    }

    let (state, verdict) = best.expect("at least one verdict");
    let earned = all_earnings(inst, &state.prices, &state.x, &state.y);
    let transfer = WealthTransfer {
        budgets: state.budgets.clone(),
        total_earnings: sum(&earned),
        alpha: verdict.alpha,
        deviations: verdict
            .utilities
            .iter()
            .zip(targets)
            .map(|(&v, &u)| v / u - verdict.alpha)
            .collect(),
    };
    Ok(TransferResult {
        state,
        transfer,
        verdict,
        log,
        outcome,
    })
}
