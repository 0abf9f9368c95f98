//! Groupcast index coding problems.
//!
//! A problem has `n` scalar messages and an ordered list of receivers, each
//! with a demand set and a side-information set. Everything else in the crate
//! (interfering sets, conflicts, alignment structure, restricted problems) is
//! derived from this one value.
//!
//! Messages are 0-indexed inside the crate. All external I/O (instance files,
//! reports, `Display` impls) uses 1-based labels.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Errors raised while building or manipulating a [`Problem`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    /// The input does not follow the instance file schema.
    #[error("malformed instance: {0}")]
    Schema(String),
    /// The input parsed but violates a problem invariant.
    #[error("invalid instance: {0}")]
    Invariant(String),
    #[error("cannot restrict a problem to an empty message set")]
    EmptySubset,
}

/// An ordered set of (0-based) message indices.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageSet(BTreeSet<usize>);

impl MessageSet {
    pub fn new() -> Self {
        MessageSet(BTreeSet::new())
    }

    /// Builds a set from 1-based message labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        labels
            .iter()
            .map(|&l| {
                assert!(l >= 1, "message labels are 1-based");
                l - 1
            })
            .collect()
    }

    /// 1-based labels in ascending order.
    pub fn labels(&self) -> Vec<usize> {
        self.0.iter().map(|m| m + 1).collect()
    }

    pub fn insert(&mut self, m: usize) -> bool {
        self.0.insert(m)
    }

    pub fn remove(&mut self, m: usize) -> bool {
        self.0.remove(&m)
    }

    pub fn intersection(&self, other: &MessageSet) -> MessageSet {
        self.0.intersection(&other.0).copied().collect()
    }

    pub fn union(&self, other: &MessageSet) -> MessageSet {
        self.0.union(&other.0).copied().collect()
    }

    pub fn difference(&self, other: &MessageSet) -> MessageSet {
        self.0.difference(&other.0).copied().collect()
    }

    pub fn is_subset(&self, other: &MessageSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &MessageSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    /// Ordering used whenever the crate needs a deterministic walk over many
    /// sets: by size, then lexicographically.
    pub fn size_lex_key(&self) -> (usize, Vec<usize>) {
        (self.len(), self.0.iter().copied().collect())
    }

    /// Relabels every member through `map` (old index -> new index).
    pub fn map(&self, map: &[usize]) -> MessageSet {
        self.0.iter().map(|&m| map[m]).collect()
    }
}

impl Deref for MessageSet {
    type Target = BTreeSet<usize>;

    fn deref(&self) -> &BTreeSet<usize> {
        &self.0
    }
}

impl FromIterator<usize> for MessageSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        MessageSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a MessageSet {
    type Item = &'a usize;
    type IntoIter = std::collections::btree_set::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for MessageSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", m + 1)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for MessageSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for MessageSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(|m| m + 1))
    }
}

/// A receiver: what it demands and what it already holds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Receiver {
    pub demands: MessageSet,
    pub side_info: MessageSet,
}

/// A demand `k` at receiver `j` together with `Interf_k(j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConflictHyperedge {
    #[serde(serialize_with = "serialize_label")]
    pub receiver: usize,
    #[serde(serialize_with = "serialize_label")]
    pub demand: usize,
    pub interference: MessageSet,
}

pub(crate) fn serialize_label<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(*v as u64 + 1)
}

/// A validated groupcast index coding problem. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Problem {
    n: usize,
    receivers: Vec<Receiver>,
    field_hint: Option<u32>,
}

/// On-disk instance description (1-based labels).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    pub receivers: Vec<ReceiverSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSpec {
    pub demands: Vec<usize>,
    #[serde(default)]
    pub side_info: Vec<usize>,
}

pub(crate) fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Problem {
    /// Validates and builds a problem from 0-based receiver data.
    pub fn new(
        n: usize,
        receivers: Vec<Receiver>,
        field_hint: Option<u32>,
    ) -> Result<Problem, ModelError> {
        if n == 0 {
            return Err(ModelError::Invariant("a problem needs at least one message".into()));
        }
        for (j, r) in receivers.iter().enumerate() {
            if r.demands.is_empty() {
                return Err(ModelError::Invariant(format!("receiver {} has no demands", j + 1)));
            }
            if let Some(&m) = r.demands.iter().chain(r.side_info.iter()).find(|&&m| m >= n) {
                return Err(ModelError::Invariant(format!(
                    "receiver {} references message {} outside 1..{}",
                    j + 1,
                    m + 1,
                    n
                )));
            }
            if let Some(m) = r.demands.intersection(&r.side_info).first() {
                return Err(ModelError::Invariant(format!(
                    "receiver {} both demands and holds message {}",
                    j + 1,
                    m + 1
                )));
            }
        }
        if let Some(q) = field_hint {
            if !is_prime(q as u64) || q > i32::MAX as u32 {
                return Err(ModelError::Invariant(format!("field size {q} is not a prime below 2^31")));
            }
        }
        Ok(Problem { n, receivers, field_hint })
    }

    /// Builds a problem from a parsed instance file.
    pub fn from_instance(raw: &InstanceFile) -> Result<Problem, ModelError> {
        let mut receivers = Vec::with_capacity(raw.receivers.len());
        for (j, r) in raw.receivers.iter().enumerate() {
            let convert = |labels: &[usize], what: &str| -> Result<MessageSet, ModelError> {
                let mut set = MessageSet::new();
                for &l in labels {
                    if l == 0 || l > raw.n {
                        return Err(ModelError::Invariant(format!(
                            "receiver {} lists {} message {} outside 1..{}",
                            j + 1,
                            what,
                            l,
                            raw.n
                        )));
                    }
                    set.insert(l - 1);
                }
                Ok(set)
            };
            receivers.push(Receiver {
                demands: convert(&r.demands, "demanded")?,
                side_info: convert(&r.side_info, "side-information")?,
            });
        }
        Problem::new(raw.n, receivers, raw.field.as_ref().and_then(|f| f.q))
    }

    /// Parses and validates an instance from JSON text.
    pub fn from_json(text: &str) -> Result<Problem, ModelError> {
        let raw: InstanceFile =
            serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))?;
        Problem::from_instance(&raw)
    }

    pub fn to_instance(&self) -> InstanceFile {
        InstanceFile {
            n: self.n,
            field: self.field_hint.map(|q| FieldSpec { q: Some(q) }),
            receivers: self
                .receivers
                .iter()
                .map(|r| ReceiverSpec { demands: r.demands.labels(), side_info: r.side_info.labels() })
                .collect(),
        }
    }

    /// Canonical JSON: receivers in order, sets ascending.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_instance()).expect("instance serialization")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn receivers(&self) -> &[Receiver] {
        &self.receivers
    }

    pub fn field_hint(&self) -> Option<u32> {
        self.field_hint
    }

    pub fn with_field_hint(mut self, q: Option<u32>) -> Result<Problem, ModelError> {
        self.field_hint = q;
        Problem::new(self.n, self.receivers, self.field_hint)
    }

    pub fn all_messages(&self) -> MessageSet {
        (0..self.n).collect()
    }

    /// `Interf_k(j)`: messages other than `k` missing at receiver `j`, or the
    /// empty set when `j` does not demand `k`.
    pub fn interfering_set(&self, j: usize, k: usize) -> MessageSet {
        let r = &self.receivers[j];
        if !r.demands.contains(&k) {
            return MessageSet::new();
        }
        (0..self.n).filter(|&m| m != k && !r.side_info.contains(&m)).collect()
    }

    /// One hyperedge per (receiver, demand) pair, in receiver order.
    pub fn hyperedges(&self) -> Vec<ConflictHyperedge> {
        let mut out = Vec::new();
        for (j, r) in self.receivers.iter().enumerate() {
            for &k in r.demands.iter() {
                out.push(ConflictHyperedge { receiver: j, demand: k, interference: self.interfering_set(j, k) });
            }
        }
        out
    }

    /// Unordered conflicting pairs `(a, b)` with `a < b`.
    pub fn conflict_pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for h in self.hyperedges() {
            for &a in h.interference.iter() {
                out.insert((a.min(h.demand), a.max(h.demand)));
            }
        }
        out
    }

    /// A receiver/demand pair showing that `a` and `b` conflict, if they do.
    pub fn conflict_witness(&self, a: usize, b: usize) -> Option<(usize, usize, usize)> {
        for (j, r) in self.receivers.iter().enumerate() {
            for (k, other) in [(b, a), (a, b)] {
                if k != other && r.demands.contains(&k) && !r.side_info.contains(&other) {
                    return Some((j, k, other));
                }
            }
        }
        None
    }

    /// Messages demanded by at least one receiver.
    pub fn demanded(&self) -> MessageSet {
        self.receivers.iter().flat_map(|r| r.demands.iter().copied()).collect()
    }

    /// An equivalent problem in which every undemanded message is placed in
    /// every receiver's side information.
    ///
    /// An undemanded message can always be sent with the zero precoding
    /// vector, so both problems have exactly the same scalar-linear codes on
    /// the demanded messages. After this step every message that appears in
    /// any interfering set is demanded somewhere, so it needs a nonzero vector.
    pub fn absorb_undemanded(&self) -> Problem {
        let demanded = self.demanded();
        let idle: MessageSet = (0..self.n).filter(|m| !demanded.contains(m)).collect();
        if idle.is_empty() {
            return self.clone();
        }
        let receivers = self
            .receivers
            .iter()
            .map(|r| Receiver { demands: r.demands.clone(), side_info: r.side_info.union(&idle) })
            .collect();
        Problem { n: self.n, receivers, field_hint: self.field_hint }
    }

    /// The `subset`-restricted problem: messages reindexed in ascending order,
    /// only receivers demanding something in `subset`, demand and side
    /// information intersected with `subset`.
    ///
    /// Also returns the reindex map (new index -> original index).
    pub fn restrict(&self, subset: &MessageSet) -> Result<(Problem, Vec<usize>), ModelError> {
        if subset.is_empty() {
            return Err(ModelError::EmptySubset);
        }
        if let Some(&m) = subset.iter().find(|&&m| m >= self.n) {
            return Err(ModelError::Invariant(format!("message {} outside 1..{}", m + 1, self.n)));
        }
        let back: Vec<usize> = subset.iter().copied().collect();
        let mut forward = vec![usize::MAX; self.n];
        for (new, &old) in back.iter().enumerate() {
            forward[old] = new;
        }
        let project = |s: &MessageSet| -> MessageSet {
            s.iter().filter(|m| subset.contains(m)).map(|&m| forward[m]).collect()
        };
        let receivers = self
            .receivers
            .iter()
            .filter(|r| !r.demands.is_disjoint(subset))
            .map(|r| Receiver { demands: project(&r.demands), side_info: project(&r.side_info) })
            .collect();
        let p = Problem { n: back.len(), receivers, field_hint: self.field_hint };
        Ok((p, back))
    }

    /// Same problem with receivers permuted (used by invariance tests).
    pub fn permute_receivers(&self, order: &[usize]) -> Problem {
        let receivers = order.iter().map(|&j| self.receivers[j].clone()).collect();
        Problem { n: self.n, receivers, field_hint: self.field_hint }
    }

    /// Same problem with messages relabelled by `perm` (old -> new).
    pub fn relabel_messages(&self, perm: &[usize]) -> Problem {
        let receivers = self
            .receivers
            .iter()
            .map(|r| Receiver { demands: r.demands.map(perm), side_info: r.side_info.map(perm) })
            .collect();
        Problem { n: self.n, receivers, field_hint: self.field_hint }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn receiver(d: &[usize], s: &[usize]) -> Receiver {
        Receiver { demands: MessageSet::from_labels(d), side_info: MessageSet::from_labels(s) }
    }

    fn pairs(list: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        list.iter().map(|&(a, b)| (a - 1, b - 1)).collect()
    }

    #[test]
    fn minimal_instance_builds() {
        let p = Problem::from_json(r#"{"n":2,"receivers":[{"demands":[1],"side_info":[]},{"demands":[2],"side_info":[]}]}"#)
            .unwrap();
        assert_eq!(p.n(), 2);
        assert_eq!(p.receivers().len(), 2);
    }

    #[test]
    fn demand_in_side_info_is_rejected() {
        let err = Problem::from_json(r#"{"n":2,"receivers":[{"demands":[1],"side_info":[1]}]}"#).unwrap_err();
        assert!(matches!(err, ModelError::Invariant(_)));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(Problem::from_json("{\"n\":2}"), Err(ModelError::Schema(_))));
        assert!(matches!(Problem::from_json("not json"), Err(ModelError::Schema(_))));
        assert!(matches!(
            Problem::from_json(r#"{"n":2,"receivers":[],"extra":1}"#),
            Err(ModelError::Schema(_))
        ));
    }

    #[test]
    fn invariant_errors() {
        let out_of_range = r#"{"n":2,"receivers":[{"demands":[3],"side_info":[]}]}"#;
        assert!(matches!(Problem::from_json(out_of_range), Err(ModelError::Invariant(_))));
        let empty_demand = r#"{"n":2,"receivers":[{"demands":[],"side_info":[1]}]}"#;
        assert!(matches!(Problem::from_json(empty_demand), Err(ModelError::Invariant(_))));
        let bad_field = r#"{"n":2,"field":{"q":4},"receivers":[{"demands":[1]}]}"#;
        assert!(matches!(Problem::from_json(bad_field), Err(ModelError::Invariant(_))));
    }

    #[test]
    fn interfering_set_cases() {
        let p = Problem::new(3, vec![receiver(&[1], &[2])], None).unwrap();
        assert_eq!(p.interfering_set(0, 0), MessageSet::from_labels(&[3]));
        assert!(p.interfering_set(0, 1).is_empty());
        let full = Problem::new(3, vec![receiver(&[1], &[2, 3])], None).unwrap();
        assert!(full.interfering_set(0, 0).is_empty());
    }

    #[test]
    fn conflicts_of_pair_and_full_side_info() {
        let pair = Problem::new(2, vec![receiver(&[1], &[]), receiver(&[2], &[])], None).unwrap();
        assert_eq!(pair.conflict_pairs(), pairs(&[(1, 2)]));
        let quiet = Problem::new(3, vec![receiver(&[1], &[2, 3]), receiver(&[2], &[1, 3])], None).unwrap();
        assert!(quiet.conflict_pairs().is_empty());
    }

    #[test]
    fn restriction_cases() {
        let pair = Problem::new(2, vec![receiver(&[1], &[]), receiver(&[2], &[])], None).unwrap();
        let (r, back) = pair.restrict(&MessageSet::from_labels(&[1])).unwrap();
        assert_eq!(back, vec![0]);
        assert_eq!(r.n(), 1);
        assert_eq!(r.receivers(), &[receiver(&[1], &[])]);
        assert!(r.conflict_pairs().is_empty());

        let (same, back) = pair.restrict(&pair.all_messages()).unwrap();
        assert_eq!(same, pair);
        assert_eq!(back, vec![0, 1]);

        assert_eq!(pair.restrict(&MessageSet::new()), Err(ModelError::EmptySubset));
    }

    #[test]
    fn absorbing_undemanded_messages_removes_their_conflicts() {
        // message 3 is never demanded
        let p = Problem::new(3, vec![receiver(&[1], &[]), receiver(&[2], &[1])], None).unwrap();
        assert!(p.conflict_pairs().contains(&(0, 2)));
        let q = p.absorb_undemanded();
        assert_eq!(q.conflict_pairs(), pairs(&[(1, 2)]));
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let text = r#"{"n":3,"field":{"q":101},"receivers":[{"demands":[2,1],"side_info":[3]}]}"#;
        let p = Problem::from_json(text).unwrap();
        let again = Problem::from_json(&p.to_json()).unwrap();
        assert_eq!(p, again);
        assert!(p.to_json().contains("\"demands\": [\n        1,\n        2\n      ]"));
    }
}
