//! Geometric price bins, price trees and their odd/even modified variants.
//!
//! Levels are 1-based: the root is level 1 and the leaves are level `β+1`, so a
//! tree has `α^β` leaves. The retained bins are padded with dummy bins priced
//! at `ψ_max·γ^k` (k = 1, 2, ...) to fill the perfect `α`-ary shape; no real
//! price ever belongs to a dummy bin.

use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::price::PriceVector;
use crate::rational::{self, Rational};

/// Mechanism parameters: `α` auctions per iteration, `β` iterations,
/// accuracy `γ`, and the price range `[ψ_min, ψ_max]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Params {
    pub alpha: usize,
    pub beta: usize,
    #[serde(with = "rational::serde_decimal")]
    pub gamma: Rational,
    #[serde(with = "rational::serde_decimal")]
    pub psi_min: Rational,
    #[serde(with = "rational::serde_decimal")]
    pub psi_max: Rational,
}

impl Params {
    /// Validates `20αβ ≤ γ ≤ 30αβ`, `α^β ≥ t`, and `0 < ψ_min ≤ ψ_max`.
    pub fn new(alpha: usize, beta: usize, gamma: Rational, psi_min: Rational, psi_max: Rational) -> Result<Self> {
        check_range(&psi_min, &psi_max)?;
        if alpha < 2 || beta < 1 {
            return Err(Error::Domain(format!("need alpha >= 2 and beta >= 1, got ({alpha}, {beta})")));
        }
        let ab = rational::int((alpha * beta) as i64);
        if gamma < rational::int(20) * &ab || gamma > rational::int(30) * &ab {
            return Err(Error::Domain(format!("gamma {} outside [20αβ, 30αβ]", rational::format(&gamma))));
        }
        let params = Params { alpha, beta, gamma, psi_min, psi_max };
        let t = params.bin_count();
        if !capacity_at_least(alpha, beta, t) {
            return Err(Error::Domain(format!("alpha^beta = {alpha}^{beta} < t = {t}")));
        }
        Ok(params)
    }

    /// `Ψ = ψ_max / ψ_min`.
    pub fn psi_ratio(&self) -> Rational {
        &self.psi_max / &self.psi_min
    }

    /// `t = ⌈log_γ Ψ⌉`, at least 1.
    pub fn bin_count(&self) -> usize {
        bin_count(&self.psi_ratio(), &self.gamma)
    }

    pub fn leaf_capacity(&self) -> usize {
        self.alpha.pow(self.beta as u32)
    }
}

fn check_range(psi_min: &Rational, psi_max: &Rational) -> Result<()> {
    if !psi_min.is_positive() {
        return Err(Error::Domain("psi_min must be positive".into()));
    }
    if psi_min > psi_max {
        return Err(Error::Domain("psi_min exceeds psi_max".into()));
    }
    Ok(())
}

fn capacity_at_least(alpha: usize, beta: usize, t: usize) -> bool {
    alpha.checked_pow(beta as u32).is_none_or(|c| c >= t)
}

/// Smallest `t ≥ 1` with `γ^t ≥ Ψ`.
pub fn bin_count(psi_ratio: &Rational, gamma: &Rational) -> usize {
    let mut t = 1;
    let mut reach = gamma.clone();
    while &reach < psi_ratio {
        reach *= gamma;
        t += 1;
    }
    t
}

/// `α` fixed, `β` the smallest value with `α^β ≥ t` under `γ = 20αβ`.
pub fn solve_parameters(psi_min: Rational, psi_max: Rational, alpha: usize) -> Result<Params> {
    check_range(&psi_min, &psi_max)?;
    if alpha < 2 {
        return Err(Error::Domain(format!("alpha must be at least 2, got {alpha}")));
    }
    let ratio = &psi_max / &psi_min;
    for beta in 1..=64 {
        let gamma = rational::int((20 * alpha * beta) as i64);
        if capacity_at_least(alpha, beta, bin_count(&ratio, &gamma)) {
            return Params::new(alpha, beta, gamma, psi_min, psi_max);
        }
    }
    Err(Error::Domain("no beta <= 64 satisfies the parameter constraints".into()))
}

/// The partition of `[ψ_min, ψ_max]` into `t` geometric bins. Bin `i`
/// (1-based) is `[ψ_min·γ^{i−1}, ψ_min·γ^i)`; the last bin ends at `ψ_max`
/// inclusive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bins {
    psi_min: Rational,
    psi_max: Rational,
    gamma: Rational,
    t: usize,
}

impl Bins {
    pub fn new(psi_min: Rational, psi_max: Rational, gamma: Rational) -> Result<Self> {
        check_range(&psi_min, &psi_max)?;
        if gamma <= Rational::one() {
            return Err(Error::Domain("gamma must exceed 1".into()));
        }
        let t = bin_count(&(&psi_max / &psi_min), &gamma);
        Ok(Bins { psi_min, psi_max, gamma, t })
    }

    pub fn from_params(params: &Params) -> Self {
        Bins::new(params.psi_min.clone(), params.psi_max.clone(), params.gamma.clone()).expect("params are validated")
    }

    pub fn count(&self) -> usize {
        self.t
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn psi_min(&self) -> &Rational {
        &self.psi_min
    }

    pub fn psi_max(&self) -> &Rational {
        &self.psi_max
    }

    /// `price(B_i) = ψ_min·γ^{i−1}`, the smallest value in bin `i`.
    pub fn price(&self, i: usize) -> Rational {
        assert!((1..=self.t).contains(&i), "bin {i} out of 1..={}", self.t);
        &self.psi_min * num_traits::pow(self.gamma.clone(), i - 1)
    }

    /// Supremum of bin `i`: `ψ_min·γ^i`, or `ψ_max` for the last bin.
    pub fn upper(&self, i: usize) -> Rational {
        if i == self.t {
            self.psi_max.clone()
        } else {
            &self.psi_min * num_traits::pow(self.gamma.clone(), i)
        }
    }

    /// The bin holding `price`, if it lies in `[ψ_min, ψ_max]`.
    pub fn bin_of(&self, price: &Rational) -> Option<usize> {
        if price < &self.psi_min || price > &self.psi_max {
            return None;
        }
        let mut i = 1;
        let mut upper = &self.psi_min * &self.gamma;
        while price >= &upper && i < self.t {
            upper *= &self.gamma;
            i += 1;
        }
        Some(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn keeps(self, bin: usize) -> bool {
        match self {
            Parity::Odd => bin % 2 == 1,
            Parity::Even => bin.is_multiple_of(2),
        }
    }
}

/// A node, addressed by its 1-based level and its 0-based position in that level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId {
    pub level: usize,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Leaf {
    /// Real bin index, `None` for padding.
    bin: Option<usize>,
    price: Rational,
}

/// A perfect `α`-ary tree of depth `β` over a list of bins. Each node covers
/// a contiguous block of leaves; `price(z)` is the price of its first leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceTree {
    alpha: usize,
    beta: usize,
    bins: Bins,
    leaves: Vec<Leaf>,
    /// Leaf position of each real bin (index `bin − 1`), if retained.
    position: Vec<Option<usize>>,
}

impl PriceTree {
    /// The unmodified tree over all bins.
    pub fn full(bins: &Bins, alpha: usize, beta: usize) -> Result<Self> {
        PriceTree::over(bins, alpha, beta, |_| true)
    }

    fn over(bins: &Bins, alpha: usize, beta: usize, keep: impl Fn(usize) -> bool) -> Result<Self> {
        if alpha < 2 || beta < 1 {
            return Err(Error::Domain(format!("need alpha >= 2 and beta >= 1, got ({alpha}, {beta})")));
        }
        let capacity = alpha
            .checked_pow(beta as u32)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::Capability(format!("{alpha}^{beta} leaves is too many")))?;
        let retained: Vec<usize> = (1..=bins.count()).filter(|&i| keep(i)).collect();
        if retained.len() > capacity {
            return Err(Error::Domain(format!("{} bins do not fit in {capacity} leaves", retained.len())));
        }
        let mut position = vec![None; bins.count()];
        let mut leaves: Vec<Leaf> = retained
            .iter()
            .enumerate()
            .map(|(pos, &bin)| {
                position[bin - 1] = Some(pos);
                Leaf { bin: Some(bin), price: bins.price(bin) }
            })
            .collect();
        let mut dummy = bins.psi_max.clone();
        while leaves.len() < capacity {
            dummy *= &bins.gamma;
            leaves.push(Leaf { bin: None, price: dummy.clone() });
        }
        Ok(PriceTree { alpha, beta, bins: bins.clone(), leaves, position })
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn bins(&self) -> &Bins {
        &self.bins
    }

    /// `β + 1`.
    pub fn levels(&self) -> usize {
        self.beta + 1
    }

    pub fn root(&self) -> NodeId {
        NodeId { level: 1, index: 0 }
    }

    pub fn nodes_at(&self, level: usize) -> impl Iterator<Item = NodeId> {
        let count = self.alpha.pow(level as u32 - 1);
        (0..count).map(move |index| NodeId { level, index })
    }

    fn span(&self, level: usize) -> usize {
        self.alpha.pow((self.beta + 1 - level) as u32)
    }

    fn leaf_range(&self, node: NodeId) -> std::ops::Range<usize> {
        let span = self.span(node.level);
        node.index * span..(node.index + 1) * span
    }

    /// `price(z)`: the price of the smallest-indexed bin under `z`.
    pub fn price(&self, node: NodeId) -> &Rational {
        &self.leaves[self.leaf_range(node).start].price
    }

    /// Real bins under `node`, in increasing order.
    pub fn node_bins(&self, node: NodeId) -> Vec<usize> {
        self.leaves[self.leaf_range(node)].iter().filter_map(|l| l.bin).collect()
    }

    /// Prices of every leaf, padding included.
    pub fn leaf_prices(&self) -> Vec<Rational> {
        self.leaves.iter().map(|l| l.price.clone()).collect()
    }

    /// Retained real bins, in increasing order.
    pub fn retained_bins(&self) -> Vec<usize> {
        self.leaves.iter().filter_map(|l| l.bin).collect()
    }

    /// Children in order; leaves have none.
    pub fn children(&self, node: NodeId) -> Vec<NodeId> {
        if node.level > self.beta {
            return Vec::new();
        }
        (0..self.alpha).map(|k| NodeId { level: node.level + 1, index: node.index * self.alpha + k }).collect()
    }

    /// The level-`level` node `price` belongs to, if any.
    pub fn containing_node(&self, price: &Rational, level: usize) -> Option<NodeId> {
        let bin = self.bins.bin_of(price)?;
        let leaf = self.position[bin - 1]?;
        Some(NodeId { level, index: leaf / self.span(level) })
    }

    /// `price` lies in one of the real bins under `node`.
    pub fn belongs(&self, price: &Rational, node: NodeId) -> bool {
        self.containing_node(price, node.level) == Some(node)
    }

    /// `price = price(node)`.
    pub fn strongly_belongs(&self, price: &Rational, node: NodeId) -> bool {
        self.price(node) == price
    }

    /// The level-`level` node whose price equals `price`.
    pub fn strong_node(&self, price: &Rational, level: usize) -> Option<NodeId> {
        let span = self.span(level);
        let (mut lo, mut hi) = (0, self.alpha.pow(level as u32 - 1));
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.leaves[mid * span].price.cmp(price) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(NodeId { level, index: mid }),
            }
        }
        None
    }

    /// Every coordinate strongly belongs to some level-`level` node.
    pub fn is_level_vector(&self, p: &PriceVector, level: usize) -> bool {
        p.iter().all(|x| self.strong_node(x, level).is_some())
    }

    /// The level-1 vector: every item at the root price.
    pub fn root_vector(&self, m: usize) -> PriceVector {
        PriceVector::uniform(m, self.price(self.root()).clone())
    }

    /// The `α` canonical level-`(level+1)` vectors of a level-`level` vector:
    /// in the `k`-th, each coordinate moves to the price of the `k`-th child
    /// of the node it strongly belongs to.
    pub fn canonical_vectors(&self, p: &PriceVector, level: usize) -> Result<Vec<PriceVector>> {
        if level < 1 || level > self.beta {
            return Err(Error::Domain(format!("no canonical vectors below level {level} of a {}-level tree", self.levels())));
        }
        let nodes: Vec<NodeId> = p
            .iter()
            .enumerate()
            .map(|(j, x)| {
                self.strong_node(x, level).ok_or_else(|| {
                    Error::Invariant(format!(
                        "price {} of item {j} strongly belongs to no level-{level} node",
                        rational::format(x)
                    ))
                })
            })
            .collect::<Result<_>>()?;
        Ok((0..self.alpha)
            .map(|k| {
                nodes
                    .iter()
                    .map(|&z| self.price(NodeId { level: level + 1, index: z.index * self.alpha + k }).clone())
                    .collect()
            })
            .collect())
    }
}

/// A price tree over only the odd- or even-indexed bins. Distinct nodes on the
/// same level are separated by at least a factor `γ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModifiedPriceTree {
    parity: Parity,
    tree: PriceTree,
}

pub fn build_modified_tree(bins: &Bins, alpha: usize, beta: usize, parity: Parity) -> Result<ModifiedPriceTree> {
    Ok(ModifiedPriceTree { parity, tree: PriceTree::over(bins, alpha, beta, |i| parity.keeps(i))? })
}

impl ModifiedPriceTree {
    pub fn from_params(params: &Params, parity: Parity) -> Result<Self> {
        build_modified_tree(&Bins::from_params(params), params.alpha, params.beta, parity)
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn tree(&self) -> &PriceTree {
        &self.tree
    }
}

impl std::ops::Deref for ModifiedPriceTree {
    type Target = PriceTree;

    fn deref(&self) -> &PriceTree {
        &self.tree
    }
}
