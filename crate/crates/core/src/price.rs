use std::ops::Index;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::rational::{self, Rational};

/// Per-item nonnegative prices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(#[serde(with = "rational::serde_decimal::vec")] Vec<Rational>);

impl PriceVector {
    pub fn new(prices: Vec<Rational>) -> Result<Self> {
        if let Some(j) = prices.iter().position(|p| p.is_negative()) {
            return Err(Error::Domain(format!("price of item {j} is negative")));
        }
        Ok(PriceVector(prices))
    }

    pub fn zeros(m: usize) -> Self {
        PriceVector(vec![Rational::zero(); m])
    }

    pub fn uniform(m: usize, price: Rational) -> Self {
        PriceVector(vec![price; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Rational> {
        self.0
    }

    /// `p(S) = Σ_{j∈S} p_j`.
    pub fn total(&self, set: ItemSet) -> Rational {
        set.iter().map(|j| &self.0[j]).sum()
    }

    /// Every coordinate scaled by `factor`.
    pub fn scaled(&self, factor: &Rational) -> Self {
        PriceVector(self.0.iter().map(|p| p * factor).collect())
    }

    pub fn halved(&self) -> Self {
        self.scaled(&rational::ratio(1, 2))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn check_len(&self, m: usize) -> Result<()> {
        if self.0.len() != m {
            return Err(Error::Shape(format!("price vector has length {}, expected {m}", self.0.len())));
        }
        Ok(())
    }
}

impl Index<usize> for PriceVector {
    type Output = Rational;

    fn index(&self, j: usize) -> &Rational {
        &self.0[j]
    }
}

impl FromIterator<Rational> for PriceVector {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        PriceVector(iter.into_iter().collect())
    }
}
