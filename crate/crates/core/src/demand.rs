//! Two-step demand: an optimal coarse bundle under a budget, then a detailed
//! allocation obtained by walking each total order. Also the excess-demand /
//! excess-supply accounting that makes bought and sold totals well defined
//! away from equilibrium.

use std::cmp::Ordering;

use crate::model::{Entity, MarketInstance, UtilitySpec};
use crate::production::Production;
use crate::scalar::{max_of, Scalar};

/// Per-agent coarse bundles `z_i = (z_i0, ..., z_ig)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseAllocation<T> {
    pub bundles: Vec<Vec<T>>,
}

/// Who bought what.
///
/// `digital[i][c][k]` is the amount buyer `i` took from entity slot `k` of
/// category `c` (good `c + 1`); slots are the category's initial songs followed
/// by the `n` producers (see [`Entity::slot`]). `excess[i][c]` is the part of
/// its coarse demand that no supply could cover.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailedAllocation<T> {
    pub bread: Vec<T>,
    pub digital: Vec<Vec<Vec<T>>>,
    pub excess: Vec<Vec<T>>,
}

impl<T: Scalar> DetailedAllocation<T> {
    pub fn zeros(inst: &MarketInstance<T>) -> Self {
        let n = inst.n();
        DetailedAllocation {
            bread: vec![T::zero(); n],
            digital: (0..n)
                .map(|_| (0..inst.g()).map(|c| vec![T::zero(); inst.n_slots(c)]).collect())
                .collect(),
            excess: vec![vec![T::zero(); inst.g()]; n],
        }
    }

    /// `Σ_k x_ick`: what buyer `i` actually received in category `c`.
    pub fn received(&self, i: usize, cat: usize) -> T {
        self.digital[i][cat].iter().copied().sum()
    }

    /// The coarse bundle this allocation realizes: bread plus, per category,
    /// received amount plus excess demand.
    pub fn coarse_bundle(&self, i: usize) -> Vec<T> {
        std::iter::once(self.bread[i])
            .chain((0..self.excess[i].len()).map(|c| self.received(i, c) + self.excess[i][c]))
            .collect()
    }

    pub fn coarse(&self) -> CoarseAllocation<T> {
        CoarseAllocation {
            bundles: (0..self.bread.len()).map(|i| self.coarse_bundle(i)).collect(),
        }
    }

    /// `max_i x_ick` for one slot.
    pub fn best_buyer_amount(&self, cat: usize, slot: usize) -> T {
        max_of(self.digital.iter().map(|rows| rows[cat][slot]))
    }

    /// Money buyer `i` spends at `prices` on its coarse bundle.
    pub fn spending(&self, i: usize, prices: &[T]) -> T {
        crate::scalar::dot(&self.coarse_bundle(i), prices)
    }
}

/// Bought `b(j)` and sold `s(j)` totals for every good, market-maker terms included.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketTotals<T> {
    pub bought: Vec<T>,
    pub sold: Vec<T>,
}

impl<T: Scalar> MarketTotals<T> {
    /// Ratios that drive the price update: `(b0+1)/(s0+1)` for bread and
    /// `b_j/s_j` for categories.
    pub fn ratios(&self) -> Vec<T> {
        self.bought
            .iter()
            .zip(&self.sold)
            .enumerate()
            .map(|(j, (&b, &s))| {
                if j == 0 {
                    (b + T::one()) / (s + T::one())
                } else {
                    b / s
                }
            })
            .collect()
    }
}

/// Utility-maximizing bundle over `{z : p·z ≤ budget, 0 ≤ z ≤ cap}`.
///
/// Positively valued goods with a zero price are filled to the cap for free.
/// Ties are broken toward the lowest good index.
pub fn coarse_demand<T: Scalar>(utility: &UtilitySpec<T>, prices: &[T], budget: T, cap: T) -> Vec<T> {
    let k = prices.len();
    debug_assert_eq!(utility.n_goods(), k);
    let mut z = vec![T::zero(); k];
    let free = |j: usize| prices[j] <= T::zero();
    let budget = budget.pos();

    match utility {
        UtilitySpec::Linear { coefficients } => {
            let mut paid = Vec::with_capacity(k);
            for j in 0..k {
                if coefficients[j] > T::zero() {
                    if free(j) {
                        z[j] = cap;
                    } else {
                        paid.push(j);
                    }
                }
            }
            sort_desc_by(&mut paid, |j| coefficients[j] / prices[j]);
            let mut left = budget;
            for j in paid {
                if left <= T::zero() {
                    break;
                }
                let afford = left / prices[j];
                if afford <= cap {
                    z[j] = afford;
                    left = T::zero();
                } else {
                    z[j] = cap;
                    left = left - cap * prices[j];
                }
            }
        }
        UtilitySpec::CobbDouglas { exponents } => {
            let mut active = Vec::with_capacity(k);
            for j in 0..k {
                if exponents[j] > T::zero() {
                    if free(j) {
                        z[j] = cap;
                    } else {
                        active.push(j);
                    }
                }
            }
            // Water-filling: proportional spending, capping goods that overshoot
            // and re-splitting what is left among the rest.
            let mut left = budget;
            loop {
                let weight: T = active.iter().map(|&j| exponents[j]).sum();
                let mut capped = Vec::new();
                for &j in &active {
                    z[j] = exponents[j] * left / (weight * prices[j]);
                    if z[j] > cap {
                        capped.push(j);
                    }
                }
                if capped.is_empty() {
                    break;
                }
                for &j in &capped {
                    z[j] = cap;
                    left = (left - cap * prices[j]).pos();
                }
                active.retain(|j| !capped.contains(j));
                if active.is_empty() {
                    break;
                }
            }
        }
        UtilitySpec::PwlConcave { goods } => {
            // (good, usable length, slope) for every segment below the cap.
            let mut pieces = Vec::new();
            for (j, segs) in goods.iter().enumerate() {
                let mut start = T::zero();
                for s in segs {
                    if start >= cap || s.slope <= T::zero() {
                        break;
                    }
                    let len = s.length.min(cap - start);
                    start = start + s.length;
                    if free(j) {
                        z[j] = z[j] + len;
                    } else {
                        pieces.push((j, len, s.slope));
                    }
                }
            }
            let idx: Vec<usize> = (0..pieces.len()).collect();
            let mut order = idx;
            sort_desc_by(&mut order, |q| pieces[q].2 / prices[pieces[q].0]);
            let mut left = budget;
            for q in order {
                if left <= T::zero() {
                    break;
                }
                let (j, len, _) = pieces[q];
                let afford = left / prices[j];
                if afford <= len {
                    z[j] = z[j] + afford;
                    left = T::zero();
                } else {
                    z[j] = z[j] + len;
                    left = left - len * prices[j];
                }
            }
            // segment lengths summed up to the cap can overshoot it by rounding
            for v in z.iter_mut() {
                *v = v.min(cap);
            }
        }
    }
    z
}

/// Stable descending sort by key; equal keys keep their index order.
fn sort_desc_by<T: Scalar>(items: &mut [usize], key: impl Fn(usize) -> T) {
    items.sort_by(|&a, &b| key(b).partial_cmp(&key(a)).unwrap_or(Ordering::Equal));
}

/// Walks `order` and takes `min(remaining, supply)` from each entity.
///
/// `supplies` is indexed by slot. Returns the per-slot amounts and the
/// excess demand left once the order is exhausted.
pub fn detailed_allocation<T: Scalar>(
    order: &[Entity],
    n_songs: usize,
    supplies: &[T],
    demand: T,
) -> (Vec<T>, T) {
    let mut taken = vec![T::zero(); supplies.len()];
    let mut left = demand.pos();
    for &e in order {
        if left <= T::zero() {
            break;
        }
        let slot = e.slot(n_songs);
        let amount = left.min(supplies[slot].pos());
        taken[slot] = amount;
        left = left - amount;
    }
    (taken, left.pos())
}

/// `l_kc = supply(k) − max_i x_ick` for every slot of category `cat`.
pub fn excess_supply<T: Scalar>(x: &DetailedAllocation<T>, supplies: &[T], cat: usize) -> Vec<T> {
    supplies
        .iter()
        .enumerate()
        .map(|(k, &s)| s - x.best_buyer_amount(cat, k).max(T::zero()))
        .collect()
}

pub fn market_totals<T: Scalar>(
    x: &DetailedAllocation<T>,
    y: &Production<T>,
    inst: &MarketInstance<T>,
) -> MarketTotals<T> {
    let n = inst.n();
    let mut bought = Vec::with_capacity(inst.g() + 1);
    let mut sold = Vec::with_capacity(inst.g() + 1);
    bought.push((0..n).map(|i| x.bread[i]).sum());
    sold.push((0..n).map(|i| y.rows[i][0]).sum());
    for c in 0..inst.g() {
        let supplies = inst.supplies(&y.rows, c);
        let mut b = T::zero();
        for i in 0..n {
            b = b + x.excess[i][c] + x.received(i, c);
        }
        let l = excess_supply(x, &supplies, c);
        let mut s = T::zero();
        for (k, &lk) in l.iter().enumerate() {
            let mut copies = T::zero();
            for rows in &x.digital {
                copies = copies + rows[c][k];
            }
            s = s + lk + copies;
        }
        bought.push(b);
        sold.push(s);
    }
    MarketTotals { bought, sold }
}

/// Optimal detailed allocation of every agent at `prices` with the given
/// budgets, against production `y`.
pub fn all_agents_demand<T: Scalar>(
    inst: &MarketInstance<T>,
    prices: &[T],
    budgets: &[T],
    y: &Production<T>,
) -> DetailedAllocation<T> {
    let cap = inst.bounds().cap;
    let supplies: Vec<Vec<T>> = (0..inst.g()).map(|c| inst.supplies(&y.rows, c)).collect();
    let mut x = DetailedAllocation::zeros(inst);
    for i in 0..inst.n() {
        let z = coarse_demand(&inst.agent(i).utility, prices, budgets[i], cap);
        x.bread[i] = z[0];
        for c in 0..inst.g() {
            let (taken, d) =
                detailed_allocation(inst.order(i, c), inst.n_songs(c), &supplies[c], z[c + 1]);
            x.digital[i][c] = taken;
            x.excess[i][c] = d;
        }
    }
    x
}
