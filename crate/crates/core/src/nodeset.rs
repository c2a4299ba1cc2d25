use std::fmt;

use serde::{Deserialize, Serialize};

/// A small set of node indices (relays or receivers), stored as a bitmask.
///
/// Index `i` is displayed 1-based, so the set `{0, 2}` prints as `13`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeSet(pub u8);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn single(i: usize) -> Self {
        NodeSet(1 << i)
    }

    pub fn full(n: usize) -> Self {
        NodeSet(((1u16 << n) - 1) as u8)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        NodeSet(it.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: NodeSet) -> Self {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSet) -> Self {
        NodeSet(self.0 & other.0)
    }

    pub fn with(self, i: usize) -> Self {
        NodeSet(self.0 | 1 << i)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..8).filter(move |&i| self.contains(i))
    }

    /// Relabel members through `perm` (member `i` becomes `perm[i]`).
    pub fn permute(self, perm: &[usize]) -> Self {
        NodeSet::from_indices(self.iter().map(|i| perm[i]))
    }

    /// All nonempty subsets of `self`, in increasing bitmask order.
    pub fn nonempty_subsets(self) -> Vec<NodeSet> {
        (1..=self.0)
            .filter(|m| m & !self.0 == 0)
            .map(NodeSet)
            .collect()
    }

    /// Parse the 1-based digit form (`"13"`); `"-"` or `""` is the empty set.
    pub fn parse_digits(s: &str) -> Option<Self> {
        if s == "-" {
            return Some(NodeSet::EMPTY);
        }
        let mut set = NodeSet::EMPTY;
        for ch in s.chars() {
            let d = ch.to_digit(10)? as usize;
            if d == 0 || d > 8 || set.contains(d - 1) {
                return None;
            }
            set = set.with(d - 1);
        }
        Some(set)
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for i in self.iter() {
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}
