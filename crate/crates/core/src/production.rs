//! Earnings and the production best response.
//!
//! A producer takes prices, every buyer's coarse demand and the other agents'
//! production as given. In each category its sales then follow a concave
//! piecewise-linear curve, so the best response is an exact greedy over curve
//! segments ranked by revenue per unit of labor, with bread as an unbounded
//! fall-back.

use std::cmp::Ordering;

use crate::demand::DetailedAllocation;
use crate::model::{Entity, MarketInstance};
use crate::scalar::Scalar;

/// `rows[i][j]`: amount of good `j` produced by agent `i` (bread at 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Production<T> {
    pub rows: Vec<Vec<T>>,
}

impl<T: Scalar> Production<T> {
    pub fn zeros(inst: &MarketInstance<T>) -> Self {
        Production {
            rows: vec![vec![T::zero(); inst.g() + 1]; inst.n()],
        }
    }

    /// Every agent puts all its labor into bread.
    pub fn all_bread(inst: &MarketInstance<T>) -> Self {
        let mut y = Self::zeros(inst);
        for (i, a) in inst.agents().iter().enumerate() {
            y.rows[i][0] = a.labor / a.costs[0];
        }
        y
    }

    pub fn labor_used(&self, inst: &MarketInstance<T>, i: usize) -> T {
        crate::scalar::dot(&self.rows[i], &inst.agent(i).costs)
    }
}

/// Money agent `i` collects: bread output at `p_0` plus every copy sold of the
/// songs it owns or produced. Copies are counted per buyer, self-purchases
/// included.
pub fn earnings<T: Scalar>(
    inst: &MarketInstance<T>,
    prices: &[T],
    x: &DetailedAllocation<T>,
    y: &Production<T>,
    i: usize,
) -> T {
    let mut total = prices[0] * y.rows[i][0];
    for c in 0..inst.g() {
        let mut copies = T::zero();
        for k in inst.owned_slots(i, c) {
            for buyer in &x.digital {
                copies = copies + buyer[c][k];
            }
        }
        total = total + prices[c + 1] * copies;
    }
    total
}

pub fn all_earnings<T: Scalar>(
    inst: &MarketInstance<T>,
    prices: &[T],
    x: &DetailedAllocation<T>,
    y: &Production<T>,
) -> Vec<T> {
    (0..inst.n()).map(|i| earnings(inst, prices, x, y, i)).collect()
}

/// Copies of a producer's output that would sell, as a function of the amount
/// produced: `sold(y) = Σ_buyers min(y, r_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoldCurve<T> {
    /// Positive buyer residuals, ascending.
    residuals: Vec<T>,
}

impl<T: Scalar> SoldCurve<T> {
    pub fn from_residuals(mut residuals: Vec<T>) -> Self {
        residuals.retain(|&r| r > T::zero());
        residuals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        SoldCurve { residuals }
    }

    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    pub fn value(&self, y: T) -> T {
        self.residuals
            .iter()
            .fold(T::zero(), |acc, &r| acc + y.pos().min(r))
    }

    /// Linear pieces `(length, slope)` from `y = 0` up to the largest residual.
    /// Slopes count the buyers still buying and strictly decrease.
    pub fn segments(&self) -> Vec<(T, usize)> {
        let m = self.residuals.len();
        let mut out = Vec::with_capacity(m);
        let mut prev = T::zero();
        for (t, &r) in self.residuals.iter().enumerate() {
            if r > prev {
                out.push((r - prev, m - t));
                prev = r;
            }
        }
        out
    }
}

/// Residual demand each buyer has left for agent `producer` in category
/// `cat`: the buyer's coarse demand minus all supply ranked strictly above the
/// producer in that buyer's order. `demand[b]` is buyer `b`'s coarse amount and
/// `supplies` is indexed by slot; the producer's own slot is not read.
pub fn sold_curve<T: Scalar>(
    inst: &MarketInstance<T>,
    demand: &[T],
    supplies: &[T],
    producer: usize,
    cat: usize,
) -> SoldCurve<T> {
    let n_songs = inst.n_songs(cat);
    let residuals = (0..inst.n())
        .map(|b| {
            let mut above = T::zero();
            for &e in inst.order(b, cat) {
                if e == Entity::Agent(producer) {
                    break;
                }
                above = above + supplies[e.slot(n_songs)];
            }
            (demand[b] - above).pos()
        })
        .collect();
    SoldCurve::from_residuals(residuals)
}

/// Sold curves of agent `i` in every category, from the coarse demand implied
/// by `x` and the current production of everyone else.
pub fn sold_curves<T: Scalar>(
    inst: &MarketInstance<T>,
    x: &DetailedAllocation<T>,
    y: &Production<T>,
    i: usize,
) -> Vec<SoldCurve<T>> {
    (0..inst.g())
        .map(|c| {
            let demand: Vec<T> = (0..inst.n()).map(|b| x.received(b, c) + x.excess[b][c]).collect();
            sold_curve(inst, &demand, &inst.supplies(&y.rows, c), i, c)
        })
        .collect()
}

/// Production revenue `p_0·y_0 + Σ_j p_j·sold_j(y_j)` of a candidate row.
pub fn production_revenue<T: Scalar>(prices: &[T], curves: &[SoldCurve<T>], row: &[T]) -> T {
    curves
        .iter()
        .enumerate()
        .fold(prices[0] * row[0], |acc, (c, curve)| {
            acc + prices[c + 1] * curve.value(row[c + 1])
        })
}

/// Revenue-maximizing production row for agent `i` under its labor budget.
/// Ties go to bread, then to the lowest category.
pub fn best_response<T: Scalar>(
    inst: &MarketInstance<T>,
    prices: &[T],
    x: &DetailedAllocation<T>,
    y: &Production<T>,
    i: usize,
) -> Vec<T> {
    let curves = sold_curves(inst, x, y, i);
    best_response_on_curves(inst, prices, &curves, i)
}

pub(crate) fn best_response_on_curves<T: Scalar>(
    inst: &MarketInstance<T>,
    prices: &[T],
    curves: &[SoldCurve<T>],
    i: usize,
) -> Vec<T> {
    let agent = inst.agent(i);
    let costs = &agent.costs;
    let bread_rate = prices[0] / costs[0];

    // (rate, category, length)
    let mut pieces: Vec<(T, usize, T)> = Vec::new();
    for (c, curve) in curves.iter().enumerate() {
        let per_copy = prices[c + 1] / costs[c + 1];
        for (len, slope) in curve.segments() {
            pieces.push((per_copy * T::from_count(slope), c, len));
        }
    }
    pieces.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    let mut row = vec![T::zero(); inst.g() + 1];
    let mut labor = agent.labor;
    for (rate, c, len) in pieces {
        if rate <= bread_rate || labor <= T::zero() {
            break;
        }
        let cost = costs[c + 1];
        let units = len.min(labor / cost);
        row[c + 1] = row[c + 1] + units;
        labor = if units < len { T::zero() } else { labor - units * cost };
    }
    row[0] = labor.pos() / costs[0];
    row
}

/// Earnings agent `i` would collect by switching to its best response:
/// optimal production revenue plus the (fixed) sales of its initial songs.
pub fn best_response_earnings<T: Scalar>(
    inst: &MarketInstance<T>,
    prices: &[T],
    x: &DetailedAllocation<T>,
    y: &Production<T>,
    i: usize,
) -> (Vec<T>, T) {
    let curves = sold_curves(inst, x, y, i);
    let row = best_response_on_curves(inst, prices, &curves, i);
    let revenue = production_revenue(prices, &curves, &row);
    (row, revenue + initial_song_revenue(inst, prices, x, i))
}

/// Revenue from copies sold of the initial songs agent `i` owns.
pub fn initial_song_revenue<T: Scalar>(
    inst: &MarketInstance<T>,
    prices: &[T],
    x: &DetailedAllocation<T>,
    i: usize,
) -> T {
    let mut total = T::zero();
    for (c, cat) in inst.categories().iter().enumerate() {
        for (k, song) in cat.songs.iter().enumerate() {
            if song.owner == i {
                let copies: T = x.digital.iter().map(|b| b[c][k]).sum();
                total = total + prices[c + 1] * copies;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_evaluation() {
        let curve = SoldCurve::from_residuals(vec![2.0, 1.0]);
        assert_eq!(curve.value(0.5), 1.0);
        assert_eq!(curve.value(1.5), 2.5);
        assert_eq!(curve.value(3.0), 3.0);
        assert_eq!(curve.segments(), vec![(1.0, 2), (1.0, 1)]);
        assert_eq!(curve.value(0.0), 0.0);
    }

    fn one_song_market(owner: usize, n: usize) -> MarketInstance<f64> {
        use crate::model::{Agent, Category, Song, UtilitySpec};
        let order: Vec<Entity> = std::iter::once(Entity::Song(0)).chain((0..n).map(Entity::Agent)).collect();
        let agents = (0..n)
            .map(|_| Agent {
                labor: 1.0,
                costs: vec![1.0, 1.0],
                utility: UtilitySpec::Linear { coefficients: vec![1.0, 1.0] },
                orders: vec![order.clone()],
            })
            .collect();
        let songs = vec![Song { id: "s".into(), owner }];
        MarketInstance::new(agents, vec![Category { songs }]).unwrap()
    }

    #[test]
    fn earnings_count_copies_per_buyer() {
        let inst = one_song_market(0, 2);
        let mut x = DetailedAllocation::zeros(&inst);
        x.digital[0][0][0] = 1.0;
        x.digital[1][0][0] = 1.0;
        let y = Production::zeros(&inst);
        assert_eq!(earnings(&inst, &[0.5, 0.5], &x, &y, 0), 1.0);
        assert_eq!(earnings(&inst, &[0.5, 0.5], &x, &y, 1), 0.0);
    }

    #[test]
    fn earnings_from_bread_and_self_purchase() {
        let inst = one_song_market(0, 1);
        let x = DetailedAllocation::zeros(&inst);
        let mut y = Production::zeros(&inst);
        y.rows[0][0] = 2.0;
        assert_eq!(earnings(&inst, &[0.25, 0.75], &x, &y, 0), 0.5);

        let mut x = DetailedAllocation::zeros(&inst);
        x.digital[0][0][0] = 1.0;
        let y = Production::zeros(&inst);
        assert!((earnings(&inst, &[0.7, 0.3], &x, &y, 0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bread_fallback_without_buyers() {
        let inst = one_song_market(0, 2);
        let x = DetailedAllocation::zeros(&inst);
        let y = Production::zeros(&inst);
        assert_eq!(best_response(&inst, &[0.5, 0.5], &x, &y, 1), vec![1.0, 0.0]);
    }

    #[test]
    fn equal_residuals_share_a_breakpoint() {
        let curve = SoldCurve::from_residuals(vec![1.0, 0.0, 1.0]);
        assert_eq!(curve.segments(), vec![(1.0, 2)]);
        assert_eq!(curve.value(4.0), 2.0);
    }
}
