//! JSON instance format.
//!
//! ```json
//! { "agents": [ { "labor": 1.0, "costs": [1.0, 1.0],
//!                 "utility": {"family": "linear", "coefficients": [1.0, 1.0]},
//!                 "orders": { "1": ["song:a", "agent:0"] } } ],
//!   "categories": [ { "songs": [ {"id": "a", "owner": 0} ] } ] }
//! ```
//!
//! Order keys are the good index of the category (`1..=g`). Entity ids are
//! `song:<id>` or `agent:<index>`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Agent, Category, Entity, MarketInstance, Segment, Song, UtilitySpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub agents: Vec<AgentDocument>,
    pub categories: Vec<CategoryDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDocument {
    pub labor: f64,
    pub costs: Vec<f64>,
    pub utility: UtilityDocument,
    pub orders: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityDocument {
    Linear { coefficients: Vec<f64> },
    CobbDouglas { exponents: Vec<f64> },
    /// Per good, a list of `[length, slope]` pairs.
    PwlConcave { segments: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryDocument {
    pub songs: Vec<SongDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SongDocument {
    pub id: String,
    pub owner: usize,
}

/// Parses and validates an instance document.
pub fn parse_instance<T: Scalar>(text: &str) -> Result<MarketInstance<T>> {
    let doc: InstanceDocument = serde_json::from_str(text)?;
    doc.into_instance()
}

/// Pretty-printed JSON for an instance; `parse_instance` reads it back unchanged.
pub fn serialize_instance<T: Scalar>(inst: &MarketInstance<T>) -> String {
    serde_json::to_string_pretty(&InstanceDocument::from_instance(inst))
        .expect("instance document serializes")
        + "\n"
}

pub(crate) fn entity_id<T>(inst: &MarketInstance<T>, cat: usize, e: Entity) -> String {
    match e {
        Entity::Song(s) => format!("song:{}", inst.categories[cat].songs[s].id),
        Entity::Agent(a) => format!("agent:{a}"),
    }
}

/// Resolves a `song:<id>` / `agent:<index>` string within category `cat`.
pub(crate) fn parse_entity(categories: &[Category], cat: usize, s: &str) -> Option<Entity> {
    if let Some(id) = s.strip_prefix("song:") {
        categories[cat]
            .songs
            .iter()
            .position(|song| song.id == id)
            .map(Entity::Song)
    } else if let Some(idx) = s.strip_prefix("agent:") {
        idx.parse().ok().map(Entity::Agent)
    } else {
        None
    }
}

impl InstanceDocument {
    pub fn into_instance<T: Scalar>(self) -> Result<MarketInstance<T>> {
        let categories: Vec<Category> = self
            .categories
            .into_iter()
            .map(|c| Category {
                songs: c
                    .songs
                    .into_iter()
                    .map(|s| Song {
                        id: s.id,
                        owner: s.owner,
                    })
                    .collect(),
            })
            .collect();
        let g = categories.len();

        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, a) in self.agents.into_iter().enumerate() {
            let mut orders = Vec::with_capacity(g);
            for c in 0..g {
                let key = (c + 1).to_string();
                let path = format!("agents[{i}].orders.{key}");
                let ids = a.orders.get(&key).ok_or_else(|| {
                    Error::schema(&path, format!("missing order T_{i}{key}"))
                })?;
                let order = ids
                    .iter()
                    .map(|id| {
                        parse_entity(&categories, c, id).ok_or_else(|| {
                            Error::schema(&path, format!("order T_{i}{key} names unknown entity {id:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                orders.push(order);
            }
            if let Some(extra) = a
                .orders
                .keys()
                .find(|k| k.parse::<usize>().map_or(true, |j| j == 0 || j > g))
            {
                return Err(Error::schema(
                    format!("agents[{i}].orders.{extra}"),
                    "order key is not a digital category index",
                ));
            }
            let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
            let utility = match a.utility {
                UtilityDocument::Linear { coefficients } => UtilitySpec::Linear {
                    coefficients: lit(&coefficients),
                },
                UtilityDocument::CobbDouglas { exponents } => UtilitySpec::CobbDouglas {
                    exponents: lit(&exponents),
                },
                UtilityDocument::PwlConcave { segments } => UtilitySpec::PwlConcave {
                    goods: segments
                        .iter()
                        .map(|segs| {
                            segs.iter()
                                .map(|&[length, slope]| Segment {
                                    length: T::lit(length),
                                    slope: T::lit(slope),
                                })
                                .collect()
                        })
                        .collect(),
                },
            };
            agents.push(Agent {
                labor: T::lit(a.labor),
                costs: lit(&a.costs),
                utility,
                orders,
            });
        }
        MarketInstance::new(agents, categories)
    }

    pub fn from_instance<T: Scalar>(inst: &MarketInstance<T>) -> Self {
        let f = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
        let agents = inst
            .agents
            .iter()
            .map(|a| AgentDocument {
                labor: a.labor.to_f64_lossy(),
                costs: f(&a.costs),
                utility: match &a.utility {
                    UtilitySpec::Linear { coefficients } => UtilityDocument::Linear {
                        coefficients: f(coefficients),
                    },
                    UtilitySpec::CobbDouglas { exponents } => UtilityDocument::CobbDouglas {
                        exponents: f(exponents),
                    },
                    UtilitySpec::PwlConcave { goods } => UtilityDocument::PwlConcave {
                        segments: goods
                            .iter()
                            .map(|segs| {
                                segs.iter()
                                    .map(|s| [s.length.to_f64_lossy(), s.slope.to_f64_lossy()])
                                    .collect()
                            })
                            .collect(),
                    },
                },
                orders: a
                    .orders
                    .iter()
                    .enumerate()
                    .map(|(c, order)| {
                        (
                            (c + 1).to_string(),
                            order.iter().map(|&e| entity_id(inst, c, e)).collect(),
                        )
                    })
                    .collect(),
            })
            .collect();
        let categories = inst
            .categories
            .iter()
            .map(|c| CategoryDocument {
                songs: c
                    .songs
                    .iter()
                    .map(|s| SongDocument {
                        id: s.id.clone(),
                        owner: s.owner,
                    })
                    .collect(),
            })
            .collect();
        InstanceDocument { agents, categories }
    }
}
