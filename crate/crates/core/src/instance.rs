//! Instance files and the random instance generator.
//!
//! File format: `{"m": 3, "bidders": [{"kind": "xos", "clauses": [["1", "2.5", "0"]]},
//! {"kind": "budget_additive", "values": ["4", "4", "1"], "budget": "6"}]}`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, serde_decimal, Rational};
use crate::valuation::{BudgetAdditiveValuation, Valuation, XosValuation};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum BidderRecord {
    Xos {
        clauses: Vec<ClauseRecord>,
    },
    BudgetAdditive {
        #[serde(with = "serde_decimal::vec")]
        values: Vec<Rational>,
        #[serde(with = "serde_decimal")]
        budget: Rational,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct ClauseRecord(#[serde(with = "serde_decimal::vec")] Vec<Rational>);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    m: usize,
    bidders: Vec<BidderRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub m: usize,
    pub valuations: Vec<Valuation>,
}

impl Instance {
    pub fn new(m: usize, valuations: Vec<Valuation>) -> Result<Self> {
        if let Some((i, v)) = valuations.iter().enumerate().find(|(_, v)| v.item_count() != m) {
            return Err(Error::Shape(format!("bidder {i} values {} items, instance has {m}", v.item_count())));
        }
        Ok(Instance { m, valuations })
    }

    pub fn bidders(&self) -> usize {
        self.valuations.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: InstanceRecord = serde_json::from_str(text)?;
        let valuations = record
            .bidders
            .into_iter()
            .map(|b| match b {
                BidderRecord::Xos { clauses } => {
                    XosValuation::from_rows(clauses.into_iter().map(|c| c.0).collect()).map(Valuation::from)
                }
                BidderRecord::BudgetAdditive { values, budget } => {
                    BudgetAdditiveValuation::new(values, budget).map(Valuation::from)
                }
            })
            .collect::<Result<_>>()?;
        Instance::new(record.m, valuations)
    }

    pub fn to_json(&self) -> String {
        let bidders = self
            .valuations
            .iter()
            .map(|v| match v {
                Valuation::Xos(x) => BidderRecord::Xos {
                    clauses: x.clauses().iter().map(|c| ClauseRecord(c.item_values().to_vec())).collect(),
                },
                Valuation::BudgetAdditive(b) => {
                    BidderRecord::BudgetAdditive { values: b.item_values().to_vec(), budget: b.budget().clone() }
                }
            })
            .collect();
        serde_json::to_string_pretty(&InstanceRecord { m: self.m, bidders }).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json() + "\n")?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    XosRandom,
    Additive,
    BudgetAdditive,
}

/// Parameters of a random instance. Values are drawn log-uniformly from
/// `values` and rounded to two decimals, so prices spread across many bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub m: usize,
    pub family: Family,
    /// Inclusive range of clause counts for `xos-random`.
    #[serde(default = "default_clauses")]
    pub clauses: (usize, usize),
    #[serde(with = "decimal_pair")]
    pub values: (Rational, Rational),
    pub seed: u64,
}

fn default_clauses() -> (usize, usize) {
    (1, 3)
}

mod decimal_pair {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &(Rational, Rational), s: S) -> std::result::Result<S::Ok, S::Error> {
        (rational::format(&v.0), rational::format(&v.1)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<(Rational, Rational), D::Error> {
        let (a, b) = <(String, String)>::deserialize(d)?;
        let parse = |s: &str| rational::parse(s).map_err(serde::de::Error::custom);
        Ok((parse(&a)?, parse(&b)?))
    }
}

impl GeneratorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = &self.values;
        if lo <= &rational::zero() || lo > hi {
            return Err(Error::Config(format!(
                "value range [{}, {}] must satisfy 0 < lo <= hi",
                rational::format(lo),
                rational::format(hi)
            )));
        }
        if self.family == Family::XosRandom && (self.clauses.0 == 0 || self.clauses.0 > self.clauses.1) {
            return Err(Error::Config(format!("clause range {:?} must satisfy 1 <= lo <= hi", self.clauses)));
        }
        if self.m > crate::items::MAX_ITEMS {
            return Err(Error::Config(format!("m = {} exceeds {}", self.m, crate::items::MAX_ITEMS)));
        }
        Ok(())
    }
}

struct Draw {
    rng: ChaCha8Rng,
    lo: Rational,
    hi: Rational,
    ln_lo: f64,
    ln_hi: f64,
}

impl Draw {
    fn value(&mut self) -> Rational {
        if self.lo == self.hi {
            return self.lo.clone();
        }
        let x = self.rng.gen_range(self.ln_lo..=self.ln_hi).exp();
        rational::from_f64_rounded(x, 2).clamp(self.lo.clone(), self.hi.clone())
    }

    fn row(&mut self, m: usize) -> Vec<Rational> {
        (0..m).map(|_| self.value()).collect()
    }
}

/// Deterministic in `spec.seed`.
pub fn generate_instance(spec: &GeneratorSpec) -> Result<Instance> {
    spec.validate()?;
    let (lo, hi) = spec.values.clone();
    let mut draw = Draw {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        ln_lo: rational::to_f64(&lo).ln(),
        ln_hi: rational::to_f64(&hi).ln(),
        lo,
        hi,
    };
    let m = spec.m;
    let valuations = (0..spec.n)
        .map(|_| match spec.family {
            Family::Additive => XosValuation::additive(draw.row(m)).map(Valuation::from),
            Family::XosRandom => {
                let k = draw.rng.gen_range(spec.clauses.0..=spec.clauses.1);
                XosValuation::from_rows((0..k).map(|_| draw.row(m)).collect()).map(Valuation::from)
            }
            Family::BudgetAdditive => {
                let values = draw.row(m);
                let total: Rational = values.iter().sum();
                // Budget between the largest single value and the sum, so it binds sometimes.
                let top = values.iter().max().cloned().unwrap_or_else(rational::zero);
                let share = rational::from_f64_rounded(draw.rng.gen_range(0.0..=1.0), 2);
                let budget = &top + (total - &top) * share;
                BudgetAdditiveValuation::new(values, budget).map(Valuation::from)
            }
        })
        .collect::<Result<_>>()?;
    Instance::new(m, valuations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn spec(family: Family, values: (i64, i64)) -> GeneratorSpec {
        GeneratorSpec { n: 3, m: 4, family, clauses: (3, 3), values: (int(values.0), int(values.1)), seed: 7 }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"m": 3, "bidders": [
            {"kind": "xos", "clauses": [["1", "2.5", "0"], ["1/3", "0", "4"]]},
            {"kind": "budget_additive", "values": ["4", "4", "1"], "budget": "6"}]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.bidders(), 2);
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
        assert!(inst.to_json().contains("\"1/3\""));
    }

    #[test]
    fn json_errors() {
        assert!(matches!(Instance::from_json(r#"{"m": 2, "bidders": [{"kind": "xos", "clauses": [["1"]]}]}"#), Err(Error::Shape(_))));
        assert!(matches!(Instance::from_json(r#"{"m": 1, "bidders": [{"kind": "xos", "clauses": []}]}"#), Err(Error::Domain(_))));
        assert!(Instance::from_json(r#"{"m": 1, "bidders": [{"kind": "xos", "clauses": [[1.5]]}]}"#).is_err());
        assert!(Instance::from_json(r#"{"m": 1, "bidders": [{"kind": "unit", "values": ["1"]}]}"#).is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let s = GeneratorSpec { n: 2, m: 2, family: Family::Additive, clauses: (1, 1), values: (int(1), int(10)), seed: 7 };
        assert_eq!(generate_instance(&s).unwrap(), generate_instance(&s).unwrap());
        let other = GeneratorSpec { seed: 8, ..s.clone() };
        assert_ne!(generate_instance(&s).unwrap(), generate_instance(&other).unwrap());
    }

    #[test]
    fn degenerate_range_and_clause_counts() {
        let inst = generate_instance(&spec(Family::XosRandom, (5, 5))).unwrap();
        for v in &inst.valuations {
            let Valuation::Xos(x) = v else { panic!() };
            assert_eq!(x.clauses().len(), 3);
            assert!(x.clauses().iter().all(|c| c.item_values().iter().all(|e| e == &int(5))));
        }
        let inst = generate_instance(&spec(Family::BudgetAdditive, (1, 100))).unwrap();
        for v in &inst.valuations {
            let Valuation::BudgetAdditive(b) = v else { panic!() };
            assert!(b.item_values().iter().all(|e| e >= &int(1) && e <= &int(100)));
            assert!(b.budget() <= &b.item_values().iter().sum::<Rational>());
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(generate_instance(&spec(Family::Additive, (0, 5))), Err(Error::Config(_))));
        assert!(matches!(generate_instance(&spec(Family::Additive, (6, 5))), Err(Error::Config(_))));
        let mut s = spec(Family::XosRandom, (1, 5));
        s.clauses = (0, 2);
        assert!(matches!(generate_instance(&s), Err(Error::Config(_))));
    }

    #[test]
    fn spec_json() {
        let s = GeneratorSpec::from_json(r#"{"n": 4, "m": 5, "family": "xos-random", "clauses": [1, 4], "values": ["1", "100"], "seed": 3}"#)
            .unwrap();
        assert_eq!(s.family, Family::XosRandom);
        assert_eq!(s.values.1, int(100));
    }
}
