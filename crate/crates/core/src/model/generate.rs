//! Seeded random instances.
//!
//! Draw ranges: labor `U[0.5, 1.5]`; unit costs `U[0.5, 2]`; linear
//! coefficients `U[0.1, 1]`; Cobb-Douglas exponents `U[0.1, 1]` normalized to
//! sum 1; piecewise-linear utilities have 1-3 segments per good with lengths
//! `U[0.25, 1.5]`, a first slope `U[0.5, 2]` and each later slope the previous
//! one times `U[0.2, 0.8]`. Song owners are uniform and every total order is a
//! uniformly random permutation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Agent, Category, Entity, MarketInstance, Segment, Song, UtilityFamily, UtilitySpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorParams {
    pub agents: usize,
    pub categories: usize,
    pub songs_per_category: usize,
    pub family: UtilityFamily,
}

pub fn generate_instance<T: Scalar>(params: GeneratorParams, seed: u64) -> Result<MarketInstance<T>> {
    let GeneratorParams {
        agents: n,
        categories: g,
        songs_per_category: s,
        family,
    } = params;
    if n == 0 || g == 0 || s == 0 {
        return Err(Error::InvalidParams(format!(
            "agents, categories and songs per category must be at least 1 (got {n}, {g}, {s})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let categories: Vec<Category> = (0..g)
        .map(|c| Category {
            songs: (0..s)
                .map(|k| Song {
                    id: format!("c{}s{}", c + 1, k),
                    owner: rng.gen_range(0..n),
                })
                .collect(),
        })
        .collect();

    let mut agents = Vec::with_capacity(n);
    for _ in 0..n {
        let labor = T::lit(rng.gen_range(0.5..1.5));
        let costs = (0..=g).map(|_| T::lit(rng.gen_range(0.5..2.0))).collect();
        let utility = match family {
            UtilityFamily::Linear => UtilitySpec::Linear {
                coefficients: (0..=g).map(|_| T::lit(rng.gen_range(0.1..1.0))).collect(),
            },
            UtilityFamily::CobbDouglas => {
                let raw: Vec<f64> = (0..=g).map(|_| rng.gen_range(0.1..1.0)).collect();
                let total: f64 = raw.iter().sum();
                UtilitySpec::CobbDouglas {
                    exponents: raw.iter().map(|&a| T::lit(a / total)).collect(),
                }
            }
            UtilityFamily::PwlConcave => UtilitySpec::PwlConcave {
                goods: (0..=g)
                    .map(|_| {
                        let pieces = rng.gen_range(1..=3);
                        let mut slope: f64 = rng.gen_range(0.5..2.0);
                        (0..pieces)
                            .map(|k| {
                                if k > 0 {
                                    slope *= rng.gen_range(0.2..0.8);
                                }
                                Segment {
                                    length: T::lit(rng.gen_range(0.25..1.5)),
                                    slope: T::lit(slope),
                                }
                            })
                            .collect()
                    })
                    .collect(),
            },
        };
        let orders = (0..g)
            .map(|_| {
                let mut order: Vec<Entity> = (0..s)
                    .map(Entity::Song)
                    .chain((0..n).map(Entity::Agent))
                    .collect();
                order.shuffle(&mut rng);
                order
            })
            .collect();
        agents.push(Agent {
            labor,
            costs,
            utility,
            orders,
        });
    }
    MarketInstance::new(agents, categories)
}
