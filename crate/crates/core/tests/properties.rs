mod common;

use common::*;
use digimkt::model::{Category, Song};
use digimkt::production::{all_earnings, best_response_earnings, earnings, sold_curves};
use digimkt::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn family() -> impl Strategy<Value = UtilityFamily> {
    prop_oneof![
        Just(UtilityFamily::Linear),
        Just(UtilityFamily::CobbDouglas),
        Just(UtilityFamily::PwlConcave)
    ]
}

fn snapshot_state(snap: &Snapshot) -> State {
    let budgets = all_earnings(&snap.inst, &snap.prices, &snap.x, &snap.y);
    MarketState { prices: snap.prices.clone(), x: snap.x.clone(), y: snap.y.clone(), budgets }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn balance_identity_and_exclusion(seed: u64, aligned: bool) {
        let snap = random_snapshot(&mut ChaCha8Rng::seed_from_u64(seed), aligned);
        let rep = check_balance_identity(&snap.x, &snap.y, &snap.inst);
        prop_assert!(rep.identity_holds);
        prop_assert!(rep.mutual_exclusion);
        for row in &rep.categories {
            prop_assert!(((row.bought - row.sold) - (row.excess_demand - row.excess_supply)).abs() <= 1e-12);
            if row.bought == row.sold {
                prop_assert!(row.excess_demand <= 1e-12 && row.excess_supply <= 1e-12);
            }
        }
    }

    #[test]
    fn walks_fill_a_prefix(seed: u64, demand in 0.0f64..8.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snap = random_snapshot(&mut rng, false);
        let i = rng.gen_range(0..snap.inst.n());
        let order = snap.inst.order(i, 0);
        let n_songs = snap.inst.n_songs(0);
        let supplies = snap.inst.supplies(&snap.y.rows, 0);
        let (taken, d) = detailed_allocation(order, n_songs, &supplies, demand);
        let mut partial_seen = false;
        for &e in order {
            let k = e.slot(n_songs);
            prop_assert!(taken[k] >= 0.0 && taken[k] <= supplies[k]);
            if partial_seen {
                prop_assert_eq!(taken[k], 0.0);
            } else if taken[k] < supplies[k] {
                partial_seen = true;
            }
        }
        let total: f64 = taken.iter().sum();
        prop_assert!((total + d - demand).abs() <= 1e-12);
        if d > 0.0 {
            prop_assert!(!partial_seen);
        }
    }

    #[test]
    fn demand_is_homogeneous(seed: u64, fam in family(), k in 2usize..=4, shift in -2i32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_utility(&mut rng, fam, k);
        let prices = random_simplex(&mut rng, k, 0.01);
        let budget = rng.gen_range(0.0..3.0);
        let lambda = 2f64.powi(shift);
        let base = coarse_demand(&u, &prices, budget, 5.0);
        let scaled: Vec<f64> = prices.iter().map(|p| p * lambda).collect();
        let z = coarse_demand(&u, &scaled, budget * lambda, 5.0);
        for (a, b) in z.iter().zip(&base) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn demand_is_affordable_and_in_box(seed: u64, fam in family(), k in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_utility(&mut rng, fam, k);
        let prices = random_simplex(&mut rng, k, 0.01);
        let budget = rng.gen_range(0.0..3.0);
        let cap = rng.gen_range(0.5..5.0);
        let z = coarse_demand(&u, &prices, budget, cap);
        let spent: f64 = z.iter().zip(&prices).map(|(a, b)| a * b).sum();
        prop_assert!(spent <= budget * (1.0 + 1e-12) + 1e-15);
        prop_assert!(z.iter().all(|&v| (0.0..=cap).contains(&v)));
    }

    #[test]
    fn sold_curves_are_concave(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snap = random_snapshot(&mut rng, false);
        let i = rng.gen_range(0..snap.inst.n());
        for curve in sold_curves(&snap.inst, &snap.x, &snap.y, i) {
            prop_assert_eq!(curve.value(0.0), 0.0);
            let segs = curve.segments();
            prop_assert!(segs.windows(2).all(|w| w[0].1 >= w[1].1));
            prop_assert!(segs.iter().all(|&(len, slope)| len > 0.0 && slope <= snap.inst.n()));
            let pts: Vec<f64> = (0..40).map(|t| t as f64 * 0.1).collect();
            for w in pts.windows(3) {
                let (a, b, c) = (curve.value(w[0]), curve.value(w[1]), curve.value(w[2]));
                prop_assert!(b >= a && c >= b);
                prop_assert!(b - a >= c - b - 1e-12);
            }
        }
    }

    #[test]
    fn best_response_beats_bread_and_sells_everything(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snap = random_snapshot(&mut rng, false);
        let i = rng.gen_range(0..snap.inst.n());
        let (row, best) = best_response_earnings(&snap.inst, &snap.prices, &snap.x, &snap.y, i);
        let agent = snap.inst.agent(i);
        let used: f64 = row.iter().zip(&agent.costs).map(|(a, b)| a * b).sum();
        prop_assert!(used <= agent.labor + 1e-12);
        prop_assert!(row.iter().all(|&v| v >= 0.0));

        let mut bread = snap.y.clone();
        bread.rows[i] = vec![0.0; snap.inst.g() + 1];
        bread.rows[i][0] = agent.labor / agent.costs[0];
        // all-bread earnings: drop the copies of i's current output from the tally
        let inst = &snap.inst;
        let produced_sales: f64 = snap.x.digital.iter()
            .flat_map(|b| (0..inst.g()).map(move |c| (c, b[c][inst.n_songs(c) + i])))
            .map(|(c, v)| snap.prices[c + 1] * v)
            .sum();
        let fallback = earnings(&snap.inst, &snap.prices, &snap.x, &bread, i) - produced_sales;
        prop_assert!(best >= fallback - 1e-12);

        // positive bread price: no digital output beyond what some buyer takes
        let curves = sold_curves(&snap.inst, &snap.x, &snap.y, i);
        for (c, curve) in curves.iter().enumerate() {
            let reach = curve.residuals().last().copied().unwrap_or(0.0);
            prop_assert!(row[c + 1] <= reach + 1e-12);
        }
    }

    #[test]
    fn adding_a_song_never_lowers_bounds(seed: u64, n in 1usize..4, g in 1usize..3, s in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst: Instance = generate_instance(
            GeneratorParams { agents: n, categories: g, songs_per_category: s, family: UtilityFamily::Linear },
            seed,
        ).unwrap();
        let cat = rng.gen_range(0..g);
        let mut categories: Vec<Category> = inst.categories().to_vec();
        let new_index = categories[cat].songs.len();
        categories[cat].songs.push(Song { id: "extra".into(), owner: 0 });
        let mut agents = inst.agents().to_vec();
        for a in agents.iter_mut() {
            let at = rng.gen_range(0..=a.orders[cat].len());
            a.orders[cat].insert(at, Entity::Song(new_index));
        }
        let bigger = MarketInstance::new(agents, categories).unwrap();
        prop_assert!(bigger.bounds().supply_bound >= inst.bounds().supply_bound);
        prop_assert_eq!(bigger.bounds().cap, bigger.bounds().supply_bound * 1.1);
    }

    #[test]
    fn generated_instances_round_trip(seed: u64, fam in family(), n in 1usize..4, g in 1usize..3, s in 1usize..3) {
        let inst: Instance = generate_instance(
            GeneratorParams { agents: n, categories: g, songs_per_category: s, family: fam },
            seed,
        ).unwrap();
        for i in 0..n {
            for c in 0..g {
                let mut o = inst.order(i, c).to_vec();
                o.sort();
                let mut expect: Vec<Entity> = (0..s).map(Entity::Song).chain((0..n).map(Entity::Agent)).collect();
                expect.sort();
                prop_assert_eq!(o, expect);
            }
        }
        let text = serialize_instance(&inst);
        let back: Instance = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn certify_is_monotone_in_tol(seed: u64, scale in 0.25f64..4.0) {
        let snap = random_snapshot(&mut ChaCha8Rng::seed_from_u64(seed), false);
        let state = snapshot_state(&snap);
        let loose = certify(&snap.inst, &state, 1.0).unwrap();
        let tol = loose.max_residual().max(1e-9) * scale;
        let a = certify(&snap.inst, &state, tol).unwrap();
        let b = certify(&snap.inst, &state, tol * 1.5).unwrap();
        prop_assert!(!a.pass || b.pass);
        for v in a.production_gap.iter().chain(&a.demand_gap).chain(a.unsold.iter().flatten()).chain(a.over_demand.iter().flatten()) {
            prop_assert!(*v >= 0.0);
        }
        prop_assert!(a.bread_imbalance >= 0.0);
    }

    #[test]
    fn f_map_stays_in_domain(seed: u64, argmax: bool) {
        let snap = random_snapshot(&mut ChaCha8Rng::seed_from_u64(seed), false);
        let state = snapshot_state(&snap);
        let rule = if argmax { PriceRule::Argmax } else { PriceRule::Multiplicative };
        let next = f_map(&snap.inst, &state, rule);
        prop_assert!((next.prices.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(next.prices.iter().all(|&p| p >= 0.0));
        let cap = snap.inst.bounds().cap;
        for i in 0..snap.inst.n() {
            prop_assert!(next.x.coarse_bundle(i).iter().all(|&v| v >= 0.0 && v <= cap + 1e-12));
            prop_assert!(next.y.labor_used(&snap.inst, i) <= snap.inst.agent(i).labor + 1e-12);
        }
    }
}
