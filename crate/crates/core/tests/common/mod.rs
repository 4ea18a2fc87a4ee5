//! Brute-force oracles and random fixtures shared by the integration suites.
//! Nothing here calls the demand or production algorithms under test.

#![allow(dead_code)]

use digimkt::model::{Agent, Category, Segment, Song};
use digimkt::{DetailedAllocation, Entity, Instance, MarketInstance, Production, UtilityFamily, UtilitySpec};
use rand::seq::SliceRandom;
use rand::Rng;

/// Largest utility over bundles whose first `k-1` coordinates lie on the grid
/// `{0, step, 2·step, ...}`; the last good takes whatever money remains.
pub fn grid_demand_utility(u: &UtilitySpec<f64>, prices: &[f64], budget: f64, cap: f64, step: f64) -> f64 {
    fn rec(u: &UtilitySpec<f64>, p: &[f64], left: f64, cap: f64, step: f64, z: &mut Vec<f64>, best: &mut f64) {
        let j = z.len();
        if j == p.len() - 1 {
            let last = if p[j] > 0.0 { (left / p[j]).min(cap) } else { cap };
            z.push(last.max(0.0));
            let v = u.value(z, cap);
            if v > *best {
                *best = v;
            }
            z.pop();
            return;
        }
        let mut k = 0u64;
        loop {
            let amount = k as f64 * step;
            if amount > cap + 1e-12 || amount * p[j] > left + 1e-12 {
                break;
            }
            z.push(amount);
            rec(u, p, left - amount * p[j], cap, step, z, best);
            z.pop();
            k += 1;
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(u, prices, budget, cap, step, &mut Vec::new(), &mut best);
    best
}

/// Copies of `producer`'s output sold when it supplies `amount` in `cat`,
/// found by walking every buyer's order with the coarse demand implied by `x`.
pub fn sold_by_walking(inst: &Instance, x: &DetailedAllocation<f64>, y: &Production<f64>, producer: usize, cat: usize, amount: f64) -> f64 {
    let mut sold = 0.0;
    for b in 0..inst.n() {
        let mut left: f64 = x.digital[b][cat].iter().sum::<f64>() + x.excess[b][cat];
        for &e in inst.order(b, cat) {
            let supply = match e {
                Entity::Song(_) => 1.0,
                Entity::Agent(a) if a == producer => amount,
                Entity::Agent(a) => y.rows[a][cat + 1],
            };
            let take = left.min(supply);
            if e == Entity::Agent(producer) {
                sold += take;
                break;
            }
            left -= take;
        }
    }
    sold
}

/// Production revenue of a row, evaluated by walking orders.
pub fn revenue_by_walking(inst: &Instance, prices: &[f64], x: &DetailedAllocation<f64>, y: &Production<f64>, i: usize, row: &[f64]) -> f64 {
    let mut total = prices[0] * row[0];
    for c in 0..inst.g() {
        total += prices[c + 1] * sold_by_walking(inst, x, y, i, c, row[c + 1]);
    }
    total
}

/// Best production revenue over labor splits on the grid `{0, step, ...}`,
/// bread taking the labor left over.
pub fn grid_best_revenue(inst: &Instance, prices: &[f64], x: &DetailedAllocation<f64>, y: &Production<f64>, i: usize, step: f64) -> f64 {
    let a = inst.agent(i);
    let g = inst.g();
    let mut best = f64::NEG_INFINITY;
    let mut labor = vec![0u64; g];
    let max_units = (a.labor / step + 1e-9).floor() as u64;
    loop {
        let used: u64 = labor.iter().sum();
        if used <= max_units {
            let mut row = vec![0.0; g + 1];
            for c in 0..g {
                row[c + 1] = labor[c] as f64 * step / a.costs[c + 1];
            }
            row[0] = (a.labor - used as f64 * step).max(0.0) / a.costs[0];
            best = best.max(revenue_by_walking(inst, prices, x, y, i, &row));
        }
        // odometer over labor units per category
        let mut pos = 0;
        loop {
            if pos == g {
                return best;
            }
            labor[pos] += 1;
            if labor[pos] <= max_units {
                break;
            }
            labor[pos] = 0;
            pos += 1;
        }
    }
}

/// Walks `order` filling `demand`; independent of the crate's allocator.
pub fn walk(order: &[Entity], n_songs: usize, supplies: &[f64], demand: f64) -> (Vec<f64>, f64) {
    let mut out = vec![0.0; supplies.len()];
    let mut left = demand;
    for &e in order {
        let k = e.slot(n_songs);
        let t = left.min(supplies[k]);
        out[k] = t;
        left -= t;
    }
    (out, left.max(0.0))
}

pub fn random_simplex<R: Rng>(rng: &mut R, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(floor..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

pub fn random_utility<R: Rng>(rng: &mut R, family: UtilityFamily, k: usize) -> UtilitySpec<f64> {
    match family {
        UtilityFamily::Linear => UtilitySpec::Linear {
            coefficients: (0..k).map(|_| rng.gen_range(0.0..2.0)).collect(),
        },
        UtilityFamily::CobbDouglas => UtilitySpec::CobbDouglas {
            exponents: random_simplex(rng, k, 0.05),
        },
        UtilityFamily::PwlConcave => UtilitySpec::PwlConcave {
            goods: (0..k)
                .map(|_| {
                    let mut slope = rng.gen_range(0.2..2.0);
                    (0..rng.gen_range(1..=3))
                        .map(|t| {
                            if t > 0 {
                                slope *= rng.gen_range(0.1..0.9);
                            }
                            Segment { length: rng.gen_range(0.1..1.5), slope }
                        })
                        .collect()
                })
                .collect(),
        },
    }
}

pub const FAMILIES: [UtilityFamily; 3] = [UtilityFamily::Linear, UtilityFamily::CobbDouglas, UtilityFamily::PwlConcave];

fn grid_value<R: Rng>(rng: &mut R, lo: f64, hi: f64, step: f64) -> f64 {
    let k = rng.gen_range((lo / step).round() as u64..=(hi / step).round() as u64);
    k as f64 * step
}

/// A random market with a random consistent (z, y, x) snapshot.
///
/// With `aligned`, labor budgets, demands and other agents' outputs are
/// multiples of 0.01 and category costs are 1 or 2, so every kink of a
/// producer's revenue lies on the 0.01 labor grid.
pub struct Snapshot {
    pub inst: Instance,
    pub prices: Vec<f64>,
    pub x: DetailedAllocation<f64>,
    pub y: Production<f64>,
}

pub fn random_market<R: Rng>(rng: &mut R, n: usize, g: usize, max_songs: usize, aligned: bool) -> Instance {
    let categories: Vec<Category> = (0..g)
        .map(|c| Category {
            songs: (0..rng.gen_range(1..=max_songs))
                .map(|k| Song { id: format!("c{c}k{k}"), owner: rng.gen_range(0..n) })
                .collect(),
        })
        .collect();
    let agents = (0..n)
        .map(|_| {
            let labor = if aligned { grid_value(rng, 0.5, 1.5, 0.01) } else { rng.gen_range(0.5..1.5) };
            let costs = (0..=g)
                .map(|j| {
                    if aligned && j > 0 {
                        [1.0, 2.0][rng.gen_range(0..2)]
                    } else {
                        rng.gen_range(0.5..2.0)
                    }
                })
                .collect();
            let orders = categories
                .iter()
                .map(|cat| {
                    let mut o: Vec<Entity> = (0..cat.songs.len()).map(Entity::Song).chain((0..n).map(Entity::Agent)).collect();
                    o.shuffle(rng);
                    o
                })
                .collect();
            Agent { labor, costs, utility: UtilitySpec::Linear { coefficients: vec![1.0; g + 1] }, orders }
        })
        .collect();
    MarketInstance::new(agents, categories).unwrap()
}

pub fn random_snapshot<R: Rng>(rng: &mut R, aligned: bool) -> Snapshot {
    let n = rng.gen_range(1..=3);
    let g = rng.gen_range(1..=2);
    let inst = random_market(rng, n, g, 2, aligned);
    let mut y = Production::zeros(&inst);
    for row in y.rows.iter_mut() {
        for v in row.iter_mut() {
            *v = if rng.gen_bool(0.3) { 0.0 } else if aligned { grid_value(rng, 0.0, 2.0, 0.01) } else { rng.gen_range(0.0..2.0) };
        }
    }
    let mut x = DetailedAllocation::zeros(&inst);
    for i in 0..n {
        x.bread[i] = rng.gen_range(0.0..2.0);
        for c in 0..g {
            let z = if aligned { grid_value(rng, 0.0, 4.0, 0.01) } else { rng.gen_range(0.0..4.0) };
            let (taken, d) = walk(inst.order(i, c), inst.n_songs(c), &inst.supplies(&y.rows, c), z);
            x.digital[i][c] = taken;
            x.excess[i][c] = d;
        }
    }
    let prices = random_simplex(rng, g + 1, 0.05);
    Snapshot { inst, prices, x, y }
}

pub fn instance(json: &str) -> Instance {
    digimkt::parse_instance(json).unwrap()
}

/// Detailed allocation obtained by walking each buyer's orders with coarse
/// bundle `z[i]` against production `y`.
pub fn allocate(inst: &Instance, z: &[Vec<f64>], y: &Production<f64>) -> DetailedAllocation<f64> {
    let mut x = DetailedAllocation::zeros(inst);
    for (i, zi) in z.iter().enumerate() {
        x.bread[i] = zi[0];
        for c in 0..inst.g() {
            let (taken, d) = walk(inst.order(i, c), inst.n_songs(c), &inst.supplies(&y.rows, c), zi[c + 1]);
            x.digital[i][c] = taken;
            x.excess[i][c] = d;
        }
    }
    x
}
