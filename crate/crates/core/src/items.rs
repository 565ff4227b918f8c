use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported item count; bundles are 64-bit masks.
pub const MAX_ITEMS: usize = 64;

/// A bundle of items, stored as a bitmask over item indices `0..m`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemSet(u64);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ItemSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// All items `0..m`.
    pub fn full(m: usize) -> Self {
        assert!(m <= MAX_ITEMS, "at most {MAX_ITEMS} items are supported");
        if m == MAX_ITEMS {
            ItemSet(u64::MAX)
        } else {
            ItemSet((1u64 << m) - 1)
        }
    }

    pub fn single(item: usize) -> Self {
        ItemSet(1u64 << item)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        items.into_iter().fold(ItemSet::EMPTY, |s, j| s.with(j))
    }

    pub fn with(self, item: usize) -> Self {
        ItemSet(self.0 | (1u64 << item))
    }

    pub fn contains(self, item: usize) -> bool {
        item < MAX_ITEMS && self.0 >> item & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: ItemSet) -> Self {
        ItemSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ItemSet) -> Self {
        ItemSet(self.0 & other.0)
    }

    pub fn difference(self, other: ItemSet) -> Self {
        ItemSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: ItemSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Item indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(j)
        })
    }

    /// Every subset of `self`, starting with the empty set.
    pub fn subsets(self) -> impl Iterator<Item = ItemSet> {
        let full = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some((cur.wrapping_sub(full)) & full) };
            Some(ItemSet(cur))
        })
    }

    /// Checks every index is below `m`.
    pub fn check_within(self, m: usize) -> Result<()> {
        if m < MAX_ITEMS && self.0 >> m != 0 {
            return Err(Error::Shape(format!("bundle {self:?} references an item >= m={m}")));
        }
        Ok(())
    }

    /// Deterministic preference among equally good bundles: fewer items first,
    /// then the lexicographically smaller sorted index sequence.
    pub fn canonical_cmp(self, other: ItemSet) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            let diff = self.0 ^ other.0;
            if diff == 0 {
                std::cmp::Ordering::Equal
            } else if self.0 >> diff.trailing_zeros() & 1 == 1 {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        })
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        ItemSet::from_items(iter)
    }
}

impl Serialize for ItemSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ItemSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(d)?;
        if let Some(bad) = items.iter().find(|&&j| j >= MAX_ITEMS) {
            return Err(serde::de::Error::custom(format!("item index {bad} out of range")));
        }
        Ok(items.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerates_all() {
        let s = ItemSet::from_items([1, 3, 4]);
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert_eq!(subs[0], ItemSet::EMPTY);
        assert!(subs.iter().all(|t| t.is_subset(s)));
        assert_eq!(ItemSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn canonical_order_prefers_small_then_lexicographic() {
        use std::cmp::Ordering::*;
        let a = ItemSet::from_items([0]);
        let b = ItemSet::from_items([1, 2]);
        assert_eq!(a.canonical_cmp(b), Less);
        assert_eq!(ItemSet::from_items([0, 5]).canonical_cmp(ItemSet::from_items([1, 2])), Less);
        assert_eq!(ItemSet::from_items([1, 2]).canonical_cmp(ItemSet::from_items([1, 3])), Less);
        assert_eq!(b.canonical_cmp(b), Equal);
    }

    #[test]
    fn shape_check() {
        assert!(ItemSet::from_items([0, 2]).check_within(3).is_ok());
        assert!(ItemSet::from_items([3]).check_within(3).is_err());
        assert!(ItemSet::full(64).check_within(64).is_ok());
    }
}
