//! Brute-force partial Pareto check.
//!
//! Digital production and every digital allocation stay fixed; only bread
//! output and the split of bread among agents change. All utility families
//! are nondecreasing in bread, so any split of a smaller bread total is
//! weakly dominated by a split of the largest total. The search therefore
//! fixes every agent at its maximum bread output given the labor its digital
//! production leaves, and enumerates grid splits of that total: agents
//! `0..n-1` take multiples of the grid step, the last agent the remainder.

use crate::equilibrium::MarketState;
use crate::error::{Error, Result};
use crate::model::MarketInstance;
use crate::scalar::{max_of, Scalar};

/// Hard cap on the number of splits examined.
pub const PARETO_GRID_LIMIT: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoWitness<T> {
    pub bread_production: Vec<T>,
    pub bread_allocation: Vec<T>,
    pub utilities: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoVerdict<T> {
    pub dominated: bool,
    pub witness: Option<ParetoWitness<T>>,
    /// Utilities in the state under test.
    pub utilities: Vec<T>,
    pub grid_step: T,
    /// Strict-improvement margin a witness has to beat.
    pub slack: T,
    pub points_examined: u128,
}

/// Grid-resolution slack with `δ = grid_step·(g+1)`.
///
/// Linear and piecewise-linear utilities use their global Lipschitz bound
/// times `δ`. Cobb-Douglas has no finite bound near zero, so it uses the
/// local modulus `f(z + δ·e_0) − f(z)` at the agent's bundle, which by
/// concavity bounds the gain from rounding its bread share up by `δ`.
pub fn pareto_slack<T: Scalar>(inst: &MarketInstance<T>, bundles: &[Vec<T>], grid_step: T) -> T {
    let cap = inst.bounds().cap;
    let delta = grid_step * T::from_count(inst.g() + 1);
    max_of(inst.agents().iter().zip(bundles).map(|(a, z)| {
        match a.utility.lipschitz_bound() {
            Some(lip) => lip * delta,
            None => {
                let mut up = z.clone();
                up[0] = up[0] + delta;
                a.utility.value(&up, cap) - a.utility.value(z, cap)
            }
        }
    }))
    .max(T::zero())
}

pub fn check_partial_pareto<T: Scalar>(
    inst: &MarketInstance<T>,
    state: &MarketState<T>,
    grid_step: T,
    tol: T,
) -> Result<ParetoVerdict<T>> {
    super::check_dimensions(inst, state)?;
    if !(grid_step > T::zero()) {
        return Err(Error::InvalidParams("grid step must be positive".into()));
    }
    let n = inst.n();
    let cap = inst.bounds().cap;
    let bundles: Vec<Vec<T>> = (0..n).map(|i| state.x.coarse_bundle(i)).collect();
    let utilities: Vec<T> = (0..n)
        .map(|i| inst.agent(i).utility.value(&bundles[i], cap))
        .collect();
    let slack = pareto_slack(inst, &bundles, grid_step);

    let bread_production: Vec<T> = (0..n)
        .map(|i| {
            let a = inst.agent(i);
            let digital_labor = (1..=inst.g()).fold(T::zero(), |acc, j| acc + a.costs[j] * state.y.rows[i][j]);
            (a.labor - digital_labor).pos() / a.costs[0]
        })
        .collect();
    let total = bread_production.iter().copied().fold(T::zero(), |a, b| a + b);
    let steps = (total / grid_step).floor().to_u64().unwrap_or(u64::MAX);

    // splits of `steps` units among n-1 agents, remainder to the last
    let points = binomial(steps as u128 + (n as u128 - 1), n as u128 - 1);
    if points > PARETO_GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: PARETO_GRID_LIMIT,
        });
    }

    let mut verdict = ParetoVerdict {
        dominated: false,
        witness: None,
        utilities: utilities.clone(),
        grid_step,
        slack,
        points_examined: 0,
    };
    let mut units = vec![0u64; n.saturating_sub(1)];
    let mut candidate = bundles.clone();
    loop {
        verdict.points_examined += 1;
        let mut given = T::zero();
        for (i, &k) in units.iter().enumerate() {
            candidate[i][0] = T::from_u64(k).expect("grid index") * grid_step;
            given = given + candidate[i][0];
        }
        candidate[n - 1][0] = (total - given).pos();

        let mut weak = true;
        let mut strict = false;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let v = inst.agent(i).utility.value(&candidate[i], cap);
            weak &= v >= utilities[i] - tol;
            strict |= v > utilities[i] + slack;
            values.push(v);
            if !weak {
                break;
            }
        }
        if weak && strict {
            verdict.dominated = true;
            verdict.witness = Some(ParetoWitness {
                bread_production: bread_production.clone(),
                bread_allocation: candidate.iter().map(|z| z[0]).collect(),
                utilities: values,
            });
            return Ok(verdict);
        }
        if !next_split(&mut units, steps) {
            return Ok(verdict);
        }
    }
}

/// Advances `units` to the next vector (lexicographic, last index fastest)
/// with sum at most `limit`.
fn next_split(units: &mut [u64], limit: u64) -> bool {
    let mut used: u64 = units.iter().sum();
    for pos in (0..units.len()).rev() {
        if used < limit {
            units[pos] += 1;
            return true;
        }
        used -= units[pos];
        units[pos] = 0;
    }
    false
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc.saturating_mul(n - t) / (t + 1);
    }
    acc
}
