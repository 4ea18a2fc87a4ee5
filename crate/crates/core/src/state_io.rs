//! File formats for states, certificates, welfare verdicts and iteration logs.
//!
//! State JSON:
//! ```json
//! { "prices": [0.5, 0.5],
//!   "x": [[0, 0, "bread", 1.0], [0, 1, "song:a", 1.0], [0, 1, "agent:0", 2.5]],
//!   "d": [[0, 1, 0.0]],
//!   "y": [[1.0, 2.5]],
//!   "budgets": [2.0] }
//! ```
//! `x` lists only nonzero amounts; category 0 with entity `"bread"` carries
//! bread. `d` lists every (buyer, category) pair.

use serde::{Deserialize, Serialize};

use crate::certify::{Certificate, ParetoVerdict, TransferVerdict};
use crate::demand::DetailedAllocation;
use crate::equilibrium::{IterationRecord, MarketState, WealthTransfer};
use crate::error::{Error, Result};
use crate::model::MarketInstance;
use crate::production::Production;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDocument {
    pub prices: Vec<f64>,
    pub x: Vec<(usize, usize, String, f64)>,
    pub d: Vec<(usize, usize, f64)>,
    pub y: Vec<Vec<f64>>,
    pub budgets: Vec<f64>,
}

fn f<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

impl StateDocument {
    pub fn from_state<T: Scalar>(inst: &MarketInstance<T>, state: &MarketState<T>) -> Self {
        let mut x = Vec::new();
        let mut d = Vec::new();
        for i in 0..inst.n() {
            if state.x.bread[i] != T::zero() {
                x.push((i, 0, "bread".to_string(), state.x.bread[i].to_f64_lossy()));
            }
            for c in 0..inst.g() {
                for (k, &amount) in state.x.digital[i][c].iter().enumerate() {
                    if amount != T::zero() {
                        let e = crate::model::Entity::from_slot(k, inst.n_songs(c));
                        x.push((i, c + 1, crate::model::schema_entity_id(inst, c, e), amount.to_f64_lossy()));
                    }
                }
                d.push((i, c + 1, state.x.excess[i][c].to_f64_lossy()));
            }
        }
        StateDocument {
            prices: f(&state.prices),
            x,
            d,
            y: state.y.rows.iter().map(|r| f(r)).collect(),
            budgets: f(&state.budgets),
        }
    }

    pub fn into_state<T: Scalar>(self, inst: &MarketInstance<T>) -> Result<MarketState<T>> {
        let (n, g) = (inst.n(), inst.g());
        if self.prices.len() != g + 1 {
            return Err(Error::schema("prices", format!("expected {} prices", g + 1)));
        }
        if self.budgets.len() != n {
            return Err(Error::schema("budgets", format!("expected {n} budgets")));
        }
        if self.y.len() != n || self.y.iter().any(|r| r.len() != g + 1) {
            return Err(Error::schema("y", format!("expected {n} rows of {} amounts", g + 1)));
        }
        let mut x = DetailedAllocation::zeros(inst);
        for (row, (i, j, entity, amount)) in self.x.into_iter().enumerate() {
            let path = format!("x[{row}]");
            if i >= n || j > g {
                return Err(Error::schema(path, format!("buyer {i} / category {j} out of range")));
            }
            if j == 0 {
                if entity != "bread" {
                    return Err(Error::schema(path, "category 0 entries must name \"bread\""));
                }
                x.bread[i] = T::lit(amount);
            } else {
                let e = crate::model::schema_parse_entity(inst.categories(), j - 1, &entity)
                    .filter(|e| matches!(e, crate::model::Entity::Song(_)) || e.slot(0) < n)
                    .ok_or_else(|| Error::schema(&path, format!("unknown entity {entity:?}")))?;
                x.digital[i][j - 1][e.slot(inst.n_songs(j - 1))] = T::lit(amount);
            }
        }
        for (row, (i, j, amount)) in self.d.into_iter().enumerate() {
            if i >= n || j == 0 || j > g {
                return Err(Error::schema(format!("d[{row}]"), "buyer or category out of range"));
            }
            x.excess[i][j - 1] = T::lit(amount);
        }
        let lit = |v: &[f64]| v.iter().map(|&a| T::lit(a)).collect::<Vec<T>>();
        Ok(MarketState {
            prices: lit(&self.prices),
            x,
            y: Production {
                rows: self.y.iter().map(|r| lit(r)).collect(),
            },
            budgets: lit(&self.budgets),
        })
    }
}

/// One array element per line, each element on a single line.
fn rows<S: Serialize>(items: &[S]) -> String {
    let lines: Vec<String> = items
        .iter()
        .map(|v| format!("    {}", serde_json::to_string(v).expect("row serializes")))
        .collect();
    if lines.is_empty() {
        "[]".into()
    } else {
        format!("[\n{}\n  ]", lines.join(",\n"))
    }
}

pub fn write_state<T: Scalar>(inst: &MarketInstance<T>, state: &MarketState<T>) -> String {
    let doc = StateDocument::from_state(inst, state);
    format!(
        "{{\n  \"prices\": {},\n  \"x\": {},\n  \"d\": {},\n  \"y\": {},\n  \"budgets\": {}\n}}\n",
        serde_json::to_string(&doc.prices).expect("prices serialize"),
        rows(&doc.x),
        rows(&doc.d),
        rows(&doc.y),
        serde_json::to_string(&doc.budgets).expect("budgets serialize"),
    )
}

pub fn read_state<T: Scalar>(inst: &MarketInstance<T>, text: &str) -> Result<MarketState<T>> {
    let doc: StateDocument = serde_json::from_str(text)?;
    doc.into_state(inst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub tol: f64,
    pub pass: bool,
    pub max_production_gap: f64,
    pub max_demand_gap: f64,
    pub max_clearing_gap: f64,
    /// Condition 1 per agent.
    pub production_gap: Vec<f64>,
    /// Condition 2 per agent.
    pub demand_gap: Vec<f64>,
    pub bread_imbalance: f64,
    /// `[category, entity, gap]` for every slot.
    pub unsold: Vec<(usize, String, f64)>,
    /// `[buyer, category, d]`.
    pub over_demand: Vec<(usize, usize, f64)>,
}

impl CertificateDocument {
    pub fn from_certificate<T: Scalar>(inst: &MarketInstance<T>, cert: &Certificate<T>) -> Self {
        let mut unsold = Vec::new();
        for (c, row) in cert.unsold.iter().enumerate() {
            for (k, gap) in row.iter().enumerate() {
                let e = crate::model::Entity::from_slot(k, inst.n_songs(c));
                unsold.push((c + 1, crate::model::schema_entity_id(inst, c, e), gap.to_f64_lossy()));
            }
        }
        let mut over_demand = Vec::new();
        for (i, row) in cert.over_demand.iter().enumerate() {
            for (c, d) in row.iter().enumerate() {
                over_demand.push((i, c + 1, d.to_f64_lossy()));
            }
        }
        CertificateDocument {
            tol: cert.tol.to_f64_lossy(),
            pass: cert.pass,
            max_production_gap: cert.max_production_gap().to_f64_lossy(),
            max_demand_gap: cert.max_demand_gap().to_f64_lossy(),
            max_clearing_gap: cert.max_clearing_gap().to_f64_lossy(),
            production_gap: f(&cert.production_gap),
            demand_gap: f(&cert.demand_gap),
            bread_imbalance: cert.bread_imbalance.to_f64_lossy(),
            unsold,
            over_demand,
        }
    }
}

pub fn write_certificate<T: Scalar>(inst: &MarketInstance<T>, cert: &Certificate<T>) -> String {
    serde_json::to_string_pretty(&CertificateDocument::from_certificate(inst, cert)).expect("certificate serializes") + "\n"
}

/// Fixed-width table of the largest residual per condition.
pub fn certificate_summary<T: Scalar>(cert: &Certificate<T>) -> String {
    let tol = cert.tol.to_f64_lossy();
    let line = |name: &str, v: T| {
        let v = v.to_f64_lossy();
        format!("{name:<28} {v:>12.3e}  {}\n", if v <= tol { "ok" } else { "FAIL" })
    };
    let mut out = format!("{:<28} {:>12}  (tol {tol:.1e})\n", "condition", "max residual");
    out += &line("1 production optimal", cert.max_production_gap());
    out += &line("2 allocation optimal", cert.max_demand_gap());
    out += &line("3 bread clears", cert.bread_imbalance);
    out += &line(
        "3 full copies sold",
        crate::scalar::max_of(cert.unsold.iter().flatten().copied()).max(T::zero()),
    );
    out += &line(
        "3 no excess demand",
        crate::scalar::max_of(cert.over_demand.iter().flatten().copied()).max(T::zero()),
    );
    out += &format!("verdict: {}\n", if cert.pass { "PASS" } else { "FAIL" });
    out
}

pub fn iteration_csv<T: Scalar>(g: usize, log: &[IterationRecord<T>]) -> String {
    let mut out = String::from("iter");
    for j in 0..=g {
        out += &format!(",p_{j}");
    }
    out += ",res_cond1,res_cond2,res_cond3,total_earnings\n";
    for r in log {
        out += &r.iter.to_string();
        for p in &r.prices {
            out += &format!(",{}", p.to_f64_lossy());
        }
        out += &format!(
            ",{},{},{},{}\n",
            r.production_gap.to_f64_lossy(),
            r.demand_gap.to_f64_lossy(),
            r.clearing_gap.to_f64_lossy(),
            r.total_earnings.to_f64_lossy()
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoDocument {
    pub dominated: bool,
    pub grid_step: f64,
    pub slack: f64,
    pub points_examined: u128,
    pub utilities: Vec<f64>,
    pub witness: Option<WitnessDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDocument {
    pub bread_production: Vec<f64>,
    pub bread_allocation: Vec<f64>,
    pub utilities: Vec<f64>,
}

impl ParetoDocument {
    pub fn from_verdict<T: Scalar>(v: &ParetoVerdict<T>) -> Self {
        ParetoDocument {
            dominated: v.dominated,
            grid_step: v.grid_step.to_f64_lossy(),
            slack: v.slack.to_f64_lossy(),
            points_examined: v.points_examined,
            utilities: f(&v.utilities),
            witness: v.witness.as_ref().map(|w| WitnessDocument {
                bread_production: f(&w.bread_production),
                bread_allocation: f(&w.bread_allocation),
                utilities: f(&w.utilities),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsDocument {
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferDocument {
    pub budgets: Vec<f64>,
    pub total_earnings: f64,
    pub alpha: f64,
    pub deviations: Vec<f64>,
    pub utilities: Vec<f64>,
    pub max_deviation: f64,
    pub pass: bool,
}

impl TransferDocument {
    pub fn new<T: Scalar>(w: &WealthTransfer<T>, verdict: &TransferVerdict<T>) -> Self {
        TransferDocument {
            budgets: f(&w.budgets),
            total_earnings: w.total_earnings.to_f64_lossy(),
            alpha: w.alpha.to_f64_lossy(),
            deviations: f(&w.deviations),
            utilities: f(&verdict.utilities),
            max_deviation: verdict.max_deviation.to_f64_lossy(),
            pass: verdict.pass,
        }
    }
}
