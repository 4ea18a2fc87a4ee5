//! Economy data model: agents, digital categories, utilities, orders and
//! production technology.

mod generate;
mod schema;
mod utility;

pub use generate::{generate_instance, GeneratorParams};
pub(crate) use schema::{entity_id as schema_entity_id, parse_entity as schema_parse_entity};
pub use schema::{
    parse_instance, serialize_instance, AgentDocument, CategoryDocument, InstanceDocument,
    SongDocument, UtilityDocument,
};
pub use utility::{Segment, UtilityFamily, UtilitySpec};

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An initial song of a category. `id` is globally unique across categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Song {
    pub id: String,
    pub owner: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub songs: Vec<Song>,
}

/// Something a buyer can rank inside a category: one of its initial songs
/// (by position in the category's song list) or an agent acting as producer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Song(usize),
    Agent(usize),
}

impl Entity {
    /// Dense index used by allocation tables: songs first, then agents.
    #[inline]
    pub fn slot(self, n_songs: usize) -> usize {
        match self {
            Entity::Song(s) => s,
            Entity::Agent(a) => n_songs + a,
        }
    }

    #[inline]
    pub fn from_slot(slot: usize, n_songs: usize) -> Self {
        if slot < n_songs {
            Entity::Song(slot)
        } else {
            Entity::Agent(slot - n_songs)
        }
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Song(s) => write!(f, "song#{s}"),
            Entity::Agent(a) => write!(f, "agent:{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent<T> {
    /// Labor budget `L_i`.
    pub labor: T,
    /// Unit labor cost per good, bread first (`g + 1` entries).
    pub costs: Vec<T>,
    pub utility: UtilitySpec<T>,
    /// One total order per digital category.
    pub orders: Vec<Vec<Entity>>,
}

/// A validated market instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketInstance<T> {
    agents: Vec<Agent<T>>,
    categories: Vec<Category>,
}

/// Supply bound `M` and the satiation cap applied to every good.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalBounds<T> {
    pub supply_bound: T,
    pub cap: T,
}

/// Ratio between the satiation cap and the supply bound.
pub const CAP_FACTOR: f64 = 1.1;

impl<T: Scalar> MarketInstance<T> {
    pub fn new(agents: Vec<Agent<T>>, categories: Vec<Category>) -> Result<Self> {
        let inst = MarketInstance { agents, categories };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let n = self.agents.len();
        let g = self.categories.len();
        if n == 0 {
            return Err(Error::schema("agents", "at least one agent is required"));
        }
        if g == 0 {
            return Err(Error::schema(
                "categories",
                "at least one digital category is required",
            ));
        }

        let mut seen = std::collections::HashSet::new();
        for (c, cat) in self.categories.iter().enumerate() {
            if cat.songs.is_empty() {
                return Err(Error::schema(
                    format!("categories[{c}].songs"),
                    format!("category {} has empty initial song set", c + 1),
                ));
            }
            for (s, song) in cat.songs.iter().enumerate() {
                let path = format!("categories[{c}].songs[{s}]");
                if !seen.insert(song.id.as_str()) {
                    return Err(Error::schema(path, format!("duplicate song id {:?}", song.id)));
                }
                if song.owner >= n {
                    return Err(Error::schema(
                        path,
                        format!("owner {} is not a valid agent index", song.owner),
                    ));
                }
            }
        }

        for (i, agent) in self.agents.iter().enumerate() {
            let finite_pos = |v: T| v.is_finite() && v > T::zero();
            if !finite_pos(agent.labor) {
                return Err(Error::schema(
                    format!("agents[{i}].labor"),
                    "labor budget must be finite and positive",
                ));
            }
            if agent.costs.len() != g + 1 {
                return Err(Error::schema(
                    format!("agents[{i}].costs"),
                    format!("expected {} unit costs, found {}", g + 1, agent.costs.len()),
                ));
            }
            for (j, &c) in agent.costs.iter().enumerate() {
                if !finite_pos(c) {
                    return Err(Error::schema(
                        format!("agents[{i}].costs[{j}]"),
                        "unit labor cost must be finite and positive",
                    ));
                }
            }
            agent
                .utility
                .validate(g + 1)
                .map_err(|m| Error::schema(format!("agents[{i}].utility"), m))?;

            if agent.orders.len() != g {
                return Err(Error::schema(
                    format!("agents[{i}].orders"),
                    format!("expected {g} orders, found {}", agent.orders.len()),
                ));
            }
            for (c, order) in agent.orders.iter().enumerate() {
                let n_songs = self.categories[c].songs.len();
                let mut hit = vec![false; n_songs + n];
                let path = format!("agents[{i}].orders.{}", c + 1);
                let name = format!("T_{}{}", i, c + 1);
                for &e in order {
                    let in_range = match e {
                        Entity::Song(s) => s < n_songs,
                        Entity::Agent(a) => a < n,
                    };
                    if !in_range {
                        return Err(Error::schema(path, format!("order {name} names unknown {e}")));
                    }
                    let slot = e.slot(n_songs);
                    if hit[slot] {
                        return Err(Error::schema(path, format!("order {name} repeats {e}")));
                    }
                    hit[slot] = true;
                }
                if let Some(slot) = hit.iter().position(|h| !h) {
                    let missing = match Entity::from_slot(slot, n_songs) {
                        Entity::Song(s) => format!("song:{}", self.categories[c].songs[s].id),
                        Entity::Agent(a) => format!("agent:{a}"),
                    };
                    return Err(Error::schema(
                        path,
                        format!("order {name} is not a permutation: missing {missing}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of agents.
    #[inline]
    pub fn n(&self) -> usize {
        self.agents.len()
    }

    /// Number of digital categories; goods are `0..=g` with bread at 0.
    #[inline]
    pub fn g(&self) -> usize {
        self.categories.len()
    }

    pub fn agents(&self) -> &[Agent<T>] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &Agent<T> {
        &self.agents[i]
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    /// `|S_j|` for the category at position `cat` (good `cat + 1`).
    #[inline]
    pub fn n_songs(&self, cat: usize) -> usize {
        self.categories[cat].songs.len()
    }

    /// Number of entity slots in a category: initial songs plus producers.
    #[inline]
    pub fn n_slots(&self, cat: usize) -> usize {
        self.n_songs(cat) + self.n()
    }

    /// `T_ij` for buyer `i` in category `cat`.
    pub fn order(&self, i: usize, cat: usize) -> &[Entity] {
        &self.agents[i].orders[cat]
    }

    /// Slot indices (within `cat`) of entities whose sales pay agent `i`:
    /// the initial songs it owns and its own production.
    pub fn owned_slots(&self, i: usize, cat: usize) -> impl Iterator<Item = usize> + '_ {
        let songs = &self.categories[cat].songs;
        songs
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.owner == i)
            .map(|(k, _)| k)
            .chain(std::iter::once(songs.len() + i))
    }

    /// Entity supplies of a category under production `y` (n × (g+1)):
    /// 1 for every initial song, `y_k,cat+1` for producer `k`.
    pub fn supplies(&self, y: &[Vec<T>], cat: usize) -> Vec<T> {
        let mut out = vec![T::one(); self.n_songs(cat)];
        out.extend(y.iter().map(|row| row[cat + 1]));
        out
    }

    pub fn bounds(&self) -> GlobalBounds<T> {
        compute_bounds(self)
    }
}

/// `M = max(Σ_i L_i/c_i0, max_j (|S_j| + Σ_i L_i/c_ij))`, `cap = 1.1·M`.
pub fn compute_bounds<T: Scalar>(inst: &MarketInstance<T>) -> GlobalBounds<T> {
    let output = |j: usize| -> T {
        inst.agents
            .iter()
            .map(|a| a.labor / a.costs[j])
            .fold(T::zero(), |x, y| x + y)
    };
    let mut m = output(0);
    for c in 0..inst.g() {
        m = m.max(T::from_count(inst.n_songs(c)) + output(c + 1));
    }
    GlobalBounds {
        supply_bound: m,
        cap: T::lit(CAP_FACTOR) * m,
    }
}
