//! Small sets of subspace dimensions.

use std::fmt;

use serde::{Serialize, Serializer};

/// A set of dimensions in `0..=7`, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DimSet(u8);

impl DimSet {
    pub const EMPTY: DimSet = DimSet(0);

    /// `{1, 2, 3}`: everything a nonzero subset can span in a length-3 code.
    pub const RATE_THIRD: DimSet = DimSet(0b1110);

    pub fn from_dims(dims: &[usize]) -> DimSet {
        let mut s = DimSet::EMPTY;
        for &d in dims {
            s.insert(d);
        }
        s
    }

    pub fn only(d: usize) -> DimSet {
        DimSet::from_dims(&[d])
    }

    /// All dimensions in `lo..=hi`.
    pub fn range(lo: usize, hi: usize) -> DimSet {
        DimSet::from_dims(&(lo..=hi).collect::<Vec<_>>())
    }

    pub fn insert(&mut self, d: usize) {
        assert!(d < 8, "dimension {d} out of range");
        self.0 |= 1 << d;
    }

    pub fn contains(self, d: usize) -> bool {
        d < 8 && self.0 & (1 << d) != 0
    }

    pub fn intersect(self, other: DimSet) -> DimSet {
        DimSet(self.0 & other.0)
    }

    pub fn union(self, other: DimSet) -> DimSet {
        DimSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: DimSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn min(self) -> Option<usize> {
        self.iter().next()
    }

    pub fn max(self) -> Option<usize> {
        self.iter().last()
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..8).filter(move |&d| self.contains(d))
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Display for DimSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|d| d.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for DimSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for DimSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}
