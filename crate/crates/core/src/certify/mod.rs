//! Residual-based checks of equilibrium states and of the two welfare
//! properties.

mod pareto;

pub use pareto::{check_partial_pareto, pareto_slack, ParetoVerdict, ParetoWitness, PARETO_GRID_LIMIT};

use crate::demand::{coarse_demand, detailed_allocation, excess_supply, market_totals, DetailedAllocation};
use crate::equilibrium::MarketState;
use crate::error::{Error, Result};
use crate::model::MarketInstance;
use crate::production::{all_earnings, best_response_earnings, Production};
use crate::scalar::{dot, max_of, sum, Scalar};

/// Residuals of the three equilibrium conditions. Every entry is `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    pub tol: T,
    /// Condition 1, per agent: best-response earnings minus achieved earnings,
    /// plus any labor used beyond the budget.
    pub production_gap: Vec<T>,
    /// Condition 2, per agent: optimal coarse utility minus achieved utility,
    /// budget slack, and deviation of `x_i` from the walk of its orders.
    pub demand_gap: Vec<T>,
    /// Condition 3, bread: `|b(0) − s(0)|`.
    pub bread_imbalance: T,
    /// Condition 3, per category and slot: supply not taken in full by any
    /// single buyer. Only categories priced above `tol` are checked.
    pub unsold: Vec<Vec<T>>,
    /// Condition 3, per buyer and category: demand beyond total supply.
    pub over_demand: Vec<Vec<T>>,
    pub pass: bool,
}

impl<T: Scalar> Certificate<T> {
    pub fn max_production_gap(&self) -> T {
        max_of(self.production_gap.iter().copied()).max(T::zero())
    }

    pub fn max_demand_gap(&self) -> T {
        max_of(self.demand_gap.iter().copied()).max(T::zero())
    }

    pub fn max_clearing_gap(&self) -> T {
        let unsold = max_of(self.unsold.iter().flatten().copied());
        let over = max_of(self.over_demand.iter().flatten().copied());
        self.bread_imbalance.max(unsold).max(over).max(T::zero())
    }

    pub fn max_residual(&self) -> T {
        self.max_production_gap()
            .max(self.max_demand_gap())
            .max(self.max_clearing_gap())
    }
}

pub(crate) fn check_dimensions<T: Scalar>(inst: &MarketInstance<T>, state: &MarketState<T>) -> Result<()> {
    let (n, g) = (inst.n(), inst.g());
    let fail = |what: String| Err(Error::Dimension(what));
    if state.prices.len() != g + 1 {
        return fail(format!("{} prices for {} goods", state.prices.len(), g + 1));
    }
    if state.budgets.len() != n {
        return fail(format!("{} budgets for {n} agents", state.budgets.len()));
    }
    if state.y.rows.len() != n || state.y.rows.iter().any(|r| r.len() != g + 1) {
        return fail("production is not n × (g+1)".into());
    }
    let x = &state.x;
    if x.bread.len() != n || x.digital.len() != n || x.excess.len() != n {
        return fail("allocation does not cover every agent".into());
    }
    for i in 0..n {
        if x.excess[i].len() != g || x.digital[i].len() != g {
            return fail(format!("allocation of agent {i} does not cover every category"));
        }
        for c in 0..g {
            if x.digital[i][c].len() != inst.n_slots(c) {
                return fail(format!("allocation of agent {i} in category {} has wrong width", c + 1));
            }
        }
    }
    Ok(())
}

/// Checks the three equilibrium conditions with each agent's budget equal to
/// its earnings in `state`.
pub fn certify<T: Scalar>(inst: &MarketInstance<T>, state: &MarketState<T>, tol: T) -> Result<Certificate<T>> {
    certify_with_budgets(inst, state, None, tol)
}

/// As [`certify`], but condition 2 is checked against `budgets` when given
/// (equilibrium with a wealth transfer).
pub fn certify_with_budgets<T: Scalar>(
    inst: &MarketInstance<T>,
    state: &MarketState<T>,
    budgets: Option<&[T]>,
    tol: T,
) -> Result<Certificate<T>> {
    check_dimensions(inst, state)?;
    if let Some(b) = budgets {
        if b.len() != inst.n() {
            return Err(Error::Dimension(format!("{} budgets for {} agents", b.len(), inst.n())));
        }
    }
    let (n, g) = (inst.n(), inst.g());
    let p = &state.prices;
    let (x, y) = (&state.x, &state.y);
    let cap = inst.bounds().cap;
    let earned = all_earnings(inst, p, x, y);
    let budgets = budgets.unwrap_or(&earned);
    let supplies: Vec<Vec<T>> = (0..g).map(|c| inst.supplies(&y.rows, c)).collect();

    let production_gap = (0..n)
        .map(|i| {
            let (_, best) = best_response_earnings(inst, p, x, y, i);
            let overuse = y.labor_used(inst, i) - inst.agent(i).labor;
            let negative = y.rows[i].iter().fold(T::zero(), |a, &v| a + (-v).pos());
            (best - earned[i]).pos() + overuse.pos() + negative
        })
        .collect();

    let demand_gap = (0..n)
        .map(|i| {
            let u = &inst.agent(i).utility;
            let z = x.coarse_bundle(i);
            let best = coarse_demand(u, p, budgets[i], cap);
            let utility_gap = (u.value(&best, cap) - u.value(&z, cap)).pos();
            let spend = dot(&z, p);
            let slack = (spend - budgets[i]).pos() + (dot(&best, p) - spend).pos();
            let out_of_box = z.iter().fold(T::zero(), |a, &v| a + (v - cap).pos() + (-v).pos());
            let mut walk_gap = T::zero();
            for c in 0..g {
                let (taken, d) = detailed_allocation(inst.order(i, c), inst.n_songs(c), &supplies[c], z[c + 1]);
                walk_gap = walk_gap + (d - x.excess[i][c]).abs();
                for (a, b) in taken.iter().zip(&x.digital[i][c]) {
                    walk_gap = walk_gap + (*a - *b).abs();
                }
            }
            utility_gap + slack + out_of_box + walk_gap
        })
        .collect();

    let totals = market_totals(x, y, inst);
    let bread_imbalance = (totals.bought[0] - totals.sold[0]).abs();
    let unsold = (0..g)
        .map(|c| {
            let priced = p[c + 1] > tol;
            excess_supply(x, &supplies[c], c)
                .into_iter()
                .zip(&supplies[c])
                .map(|(l, &s)| if priced && s > T::zero() { l.pos() } else { T::zero() })
                .collect()
        })
        .collect();
    let over_demand = x
        .excess
        .iter()
        .map(|row| row.iter().map(|d| d.pos()).collect())
        .collect();

    let mut cert = Certificate {
        tol,
        production_gap,
        demand_gap,
        bread_imbalance,
        unsold,
        over_demand,
        pass: false,
    };
    cert.pass = cert.max_residual() <= tol;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceRow<T> {
    pub bought: T,
    pub sold: T,
    /// `Σ_i d_ij`.
    pub excess_demand: T,
    /// `Σ_k l_kj`.
    pub excess_supply: T,
    /// `|(b − s) − (Σd − Σl)|`.
    pub discrepancy: T,
    /// Some buyer has positive excess demand while some entity has positive excess supply.
    pub both_sides: bool,
}

/// Per-category check of `b(j) − s(j) = Σ_i d_ij − Σ_k l_kj` and of the
/// mutual exclusion of excess demand and excess supply.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport<T> {
    pub categories: Vec<BalanceRow<T>>,
    pub identity_holds: bool,
    pub mutual_exclusion: bool,
}

pub fn check_balance_identity<T: Scalar>(
    x: &DetailedAllocation<T>,
    y: &Production<T>,
    inst: &MarketInstance<T>,
) -> BalanceReport<T> {
    let totals = market_totals(x, y, inst);
    let mut identity_holds = true;
    let mut mutual_exclusion = true;
    let categories = (0..inst.g())
        .map(|c| {
            let l = excess_supply(x, &inst.supplies(&y.rows, c), c);
            let d: Vec<T> = x.excess.iter().map(|row| row[c]).collect();
            let (bought, sold) = (totals.bought[c + 1], totals.sold[c + 1]);
            let (sd, sl) = (sum(&d), sum(&l));
            let discrepancy = ((bought - sold) - (sd - sl)).abs();
            let scale = T::one() + bought + sold;
            if discrepancy > T::epsilon() * T::lit(64.0) * scale {
                identity_holds = false;
            }
            let both_sides = d.iter().any(|&v| v > T::zero()) && l.iter().any(|&v| v > T::zero());
            mutual_exclusion &= !both_sides;
            BalanceRow {
                bought,
                sold,
                excess_demand: sd,
                excess_supply: sl,
                discrepancy,
                both_sides,
            }
        })
        .collect();
    BalanceReport {
        categories,
        identity_holds,
        mutual_exclusion,
    }
}

/// Outcome of checking a state against a wealth transfer and target utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferVerdict<T> {
    /// Mean of `v_i / u_i`.
    pub alpha: T,
    /// Achieved coarse utilities `v_i`.
    pub utilities: Vec<T>,
    /// `max_i |v_i − α·u_i| / max(1, α·u_i)`.
    pub max_deviation: T,
    /// `|Σ w_i − total earnings|`; reported, the caller guarantees it is small.
    pub budget_gap: T,
    pub certificate: Certificate<T>,
    pub pass: bool,
}

pub fn check_transfer_equilibrium<T: Scalar>(
    inst: &MarketInstance<T>,
    state: &MarketState<T>,
    transfer: &[T],
    targets: &[T],
    tol: T,
) -> Result<TransferVerdict<T>> {
    if targets.len() != inst.n() {
        return Err(Error::Dimension(format!("{} targets for {} agents", targets.len(), inst.n())));
    }
    if let Some((agent, &value)) = targets.iter().enumerate().find(|(_, &u)| !(u > T::zero())) {
        return Err(Error::NonPositiveTarget {
            agent,
            value: value.to_f64_lossy(),
        });
    }
    let certificate = certify_with_budgets(inst, state, Some(transfer), tol)?;
    let cap = inst.bounds().cap;
    let utilities: Vec<T> = (0..inst.n())
        .map(|i| inst.agent(i).utility.value(&state.x.coarse_bundle(i), cap))
        .collect();
    let alpha = utilities
        .iter()
        .zip(targets)
        .fold(T::zero(), |a, (&v, &u)| a + v / u)
        / T::from_count(inst.n());
    let max_deviation = max_of(
        utilities
            .iter()
            .zip(targets)
            .map(|(&v, &u)| (v - alpha * u).abs() / T::one().max(alpha * u)),
    );
    let earned = sum(&all_earnings(inst, &state.prices, &state.x, &state.y));
    let budget_gap = (sum(transfer) - earned).abs();
    let pass = certificate.pass && max_deviation <= tol && alpha >= T::one() - tol;
    Ok(TransferVerdict {
        alpha,
        utilities,
        max_deviation,
        budget_gap,
        certificate,
        pass,
    })
}
