//! Builders for the reference instances and random instance generators.
//!
//! Interference patterns between "core" messages are realised with dummy
//! demand messages: a dummy `d` with a receiver demanding `{d}` and knowing
//! everything except `{d} ∪ T` makes `T` an interfering set that sits outside
//! the core. Side information is always computed against the final message
//! set, so adding messages later never changes an existing interfering set.
//!
//! Messages that would otherwise never be demanded get a trivial receiver
//! (demands `{m}`, knows everything else). It adds no interference and no
//! conflicts; it only stops `m` from being sent with the zero vector.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{MessageSet, Problem, Receiver};

#[derive(Clone, Debug)]
enum Spec {
    /// Demands `{demand}`; everything outside `{demand} ∪ interference` is known.
    Interference { demand: usize, interference: MessageSet },
    /// Explicit demand and side-information sets.
    Raw { demands: MessageSet, side_info: MessageSet },
}

/// Incremental instance builder working with 1-based labels.
#[derive(Clone, Debug, Default)]
pub struct InstanceBuilder {
    n: usize,
    specs: Vec<Spec>,
    field: Option<u32>,
}

impl InstanceBuilder {
    pub fn new(n: usize) -> Self {
        InstanceBuilder { n, specs: Vec::new(), field: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(mut self, q: u32) -> Self {
        self.field = Some(q);
        self
    }

    /// Allocates a fresh message label.
    pub fn fresh(&mut self) -> usize {
        self.n += 1;
        self.n
    }

    /// A receiver demanding `demand` whose interfering set is exactly `interference`.
    pub fn interfere_at(&mut self, demand: usize, interference: &[usize]) -> &mut Self {
        self.n = self.n.max(demand).max(interference.iter().copied().max().unwrap_or(0));
        self.specs.push(Spec::Interference {
            demand: demand - 1,
            interference: MessageSet::from_labels(interference),
        });
        self
    }

    /// A fresh dummy message at which `triple` interferes. Returns its label.
    pub fn interfere_at_dummy(&mut self, set: &[usize]) -> usize {
        let d = self.fresh();
        self.interfere_at(d, set);
        d
    }

    /// `a` and `b` conflict through a receiver demanding `a` with interference `{b}`.
    pub fn conflict(&mut self, a: usize, b: usize) -> &mut Self {
        self.interfere_at(a, &[b])
    }

    pub fn raw(&mut self, demands: &[usize], side_info: &[usize]) -> &mut Self {
        let top = demands.iter().chain(side_info).copied().max().unwrap_or(0);
        self.n = self.n.max(top);
        self.specs.push(Spec::Raw {
            demands: MessageSet::from_labels(demands),
            side_info: MessageSet::from_labels(side_info),
        });
        self
    }

    /// Adds a trivial receiver for every message nobody demands.
    pub fn demand_all_undemanded(&mut self) -> &mut Self {
        let demanded: MessageSet = self
            .specs
            .iter()
            .flat_map(|s| match s {
                Spec::Interference { demand, .. } => vec![*demand],
                Spec::Raw { demands, .. } => demands.iter().copied().collect(),
            })
            .collect();
        for m in 0..self.n {
            if !demanded.contains(&m) {
                self.interfere_at(m + 1, &[]);
            }
        }
        self
    }

    /// Realises a STIC on `roles[0..6]` (labels for roles 1..6).
    pub fn stic(&mut self, roles: [usize; 6]) -> &mut Self {
        let r = |i: usize| roles[i - 1];
        for t in [[1, 2, 3], [2, 4, 5], [3, 5, 6]] {
            self.interfere_at_dummy(&[r(t[0]), r(t[1]), r(t[2])]);
        }
        for (pair, at) in [([1, 2], 6), ([2, 4], 6), ([1, 3], 4), ([3, 6], 4), ([4, 5], 1), ([5, 6], 1)] {
            self.interfere_at(r(at), &[r(pair[0]), r(pair[1])]);
        }
        self
    }

    /// Realises a SPIC on `roles[0..5]` (labels for roles 1..5).
    pub fn spic(&mut self, roles: [usize; 5]) -> &mut Self {
        let r = |i: usize| roles[i - 1];
        for t in [[1, 2, 3], [1, 3, 4], [3, 4, 5], [2, 3, 5]] {
            self.interfere_at_dummy(&[r(t[0]), r(t[1]), r(t[2])]);
        }
        self.interfere_at(r(5), &[r(1), r(2)]);
        self.interfere_at(r(2), &[r(4), r(5)]);
        self.interfere_at(r(3), &[r(1)]);
        self
    }

    /// A triangle whose three members pairwise conflict and interfere
    /// together at a dummy.
    pub fn full_triangle(&mut self, a: usize, b: usize, c: usize) -> &mut Self {
        self.interfere_at_dummy(&[a, b, c]);
        self.conflict(a, b).conflict(b, c).conflict(c, a)
    }

    pub fn build(&self) -> Problem {
        let all: MessageSet = (0..self.n).collect();
        let receivers = self
            .specs
            .iter()
            .map(|s| match s {
                Spec::Interference { demand, interference } => {
                    let mut excluded = interference.clone();
                    excluded.insert(*demand);
                    Receiver { demands: [*demand].into_iter().collect(), side_info: all.difference(&excluded) }
                }
                Spec::Raw { demands, side_info } => {
                    Receiver { demands: demands.clone(), side_info: side_info.clone() }
                }
            })
            .collect();
        Problem::new(self.n, receivers, self.field).expect("fixture builder produced an invalid problem")
    }
}

/// Two messages, each demanded by a receiver that lacks the other.
pub fn p_pair() -> Problem {
    let mut b = InstanceBuilder::new(2);
    b.raw(&[1], &[]).raw(&[2], &[]);
    b.build()
}

/// Three messages, each demanded by a receiver with no side information.
pub fn p_tri() -> Problem {
    let mut b = InstanceBuilder::new(3);
    b.raw(&[1], &[]).raw(&[2], &[]).raw(&[3], &[]);
    b.build()
}

/// A single STIC on messages 1..6 (dummies 7, 8, 9).
pub fn p_stic() -> Problem {
    let mut b = InstanceBuilder::new(6);
    b.stic([1, 2, 3, 4, 5, 6]).demand_all_undemanded();
    b.build()
}

/// A single SPIC on messages 1..5 (dummies 6..9).
pub fn p_spic() -> Problem {
    let mut b = InstanceBuilder::new(5);
    b.spic([1, 2, 3, 4, 5]).demand_all_undemanded();
    b.build()
}

/// Role map of the second STIC in [`p_2stic`].
pub const STIC2_ROLES: [usize; 6] = [7, 4, 2, 8, 5, 9];

/// Two overlapping STICs on {1..6} and {7,4,2,8,5,9}; not rate-1/3 feasible.
pub fn p_2stic() -> Problem {
    let mut b = InstanceBuilder::new(9);
    b.stic([1, 2, 3, 4, 5, 6]).stic(STIC2_ROLES).demand_all_undemanded();
    b.build()
}

/// Role maps of the five chained SPICs in [`spic_chain`].
pub const SPIC_CHAIN_ROLES: [[usize; 5]; 5] =
    [[14, 1, 3, 15, 4], [2, 1, 3, 5, 4], [2, 6, 7, 5, 8], [9, 6, 10, 11, 8], [9, 12, 10, 11, 13]];

/// Five SPICs on messages 1..15 whose consecutive intersections are all
/// rate-1 infeasible.
pub fn spic_chain() -> Problem {
    let mut b = InstanceBuilder::new(15);
    for roles in SPIC_CHAIN_ROLES {
        b.spic(roles);
    }
    b.demand_all_undemanded();
    b.build()
}

/// Layout for [`fan_arrangement`]: each set is a fan of full triangles
/// around its own conflicting base pair; `shared` lists ports (with
/// multiplicity) common to two sets.
#[derive(Clone, Debug)]
pub struct FanLayout {
    pub sets: usize,
    /// `(i, j, count)`: sets `i` and `j` (0-based) share `count` port messages.
    pub shared: Vec<(usize, usize, usize)>,
    /// Private ports per set.
    pub private: Vec<usize>,
}

/// Builds the fan arrangement. Returns the builder so callers can decorate it,
/// along with the base pairs (labels) of each set.
pub fn fan_arrangement(layout: &FanLayout) -> (InstanceBuilder, Vec<(usize, usize)>) {
    let mut b = InstanceBuilder::new(0);
    let bases: Vec<(usize, usize)> = (0..layout.sets).map(|_| (b.fresh(), b.fresh())).collect();
    let mut ports: Vec<Vec<usize>> = vec![Vec::new(); layout.sets];
    for &(i, j, count) in &layout.shared {
        for _ in 0..count {
            let p = b.fresh();
            ports[i].push(p);
            ports[j].push(p);
        }
    }
    for (i, &count) in layout.private.iter().enumerate() {
        for _ in 0..count {
            let p = b.fresh();
            ports[i].push(p);
        }
    }
    for (i, &(x, y)) in bases.iter().enumerate() {
        b.conflict(x, y);
        for &p in &ports[i] {
            b.interfere_at_dummy(&[x, y, p]);
            b.conflict(p, x).conflict(p, y);
        }
    }
    (b, bases)
}

/// The six-set arrangement with intersection graph edges
/// 12, 13, 14, 15, 23, 25, 35 and an isolated sixth set.
pub fn six_set_layout() -> FanLayout {
    FanLayout {
        sets: 6,
        shared: vec![(0, 1, 1), (0, 2, 1), (0, 3, 1), (0, 4, 1), (1, 2, 1), (1, 4, 1), (2, 4, 1)],
        private: vec![0, 0, 0, 0, 0, 1],
    }
}

pub fn six_set_arrangement() -> Problem {
    let (mut b, _) = fan_arrangement(&six_set_layout());
    b.demand_all_undemanded();
    b.build()
}

/// Instances on which the contraction + intersection-graph construction is
/// expected to apply, with a short name each.
pub fn construction_suite() -> Vec<(&'static str, Problem)> {
    let mut out = vec![("pairwise-conflicting-triple", p_tri())];

    let mut fans = |name: &'static str, layout: FanLayout| {
        let (mut b, _) = fan_arrangement(&layout);
        b.demand_all_undemanded();
        out.push((name, b.build()));
    };
    fans("single-triangle", FanLayout { sets: 1, shared: vec![], private: vec![1] });
    fans("adjacent-triangles", FanLayout { sets: 1, shared: vec![], private: vec![3] });
    fans("single-edge", FanLayout { sets: 2, shared: vec![(0, 1, 1)], private: vec![1, 0] });
    fans("path", FanLayout { sets: 3, shared: vec![(0, 1, 1), (1, 2, 1)], private: vec![0, 1, 0] });
    fans("star", FanLayout { sets: 4, shared: vec![(0, 1, 1), (0, 2, 1), (0, 3, 1)], private: vec![0, 0, 1, 0] });
    fans("triangle-graph", FanLayout { sets: 3, shared: vec![(0, 1, 1), (1, 2, 1), (0, 2, 1)], private: vec![0; 3] });
    fans("six-sets", six_set_layout());
    let mut double = six_set_layout();
    double.shared[6].2 = 2;
    fans("six-sets-double-intersection", double);

    out.push(("split-port", split_port()));
    out.push(("collapsing-path", collapsing_path()));
    out.push(("merged-type2", merged_type2()));
    out.push(("pair-interference", pair_interference()));
    out
}

/// A full triangle whose third corner is split into two messages that
/// co-interfere but do not conflict; one contraction restores the triangle.
pub fn split_port() -> Problem {
    let mut b = InstanceBuilder::new(4);
    b.interfere_at_dummy(&[1, 2, 3, 4]);
    b.conflict(1, 2).conflict(3, 1).conflict(3, 2).conflict(4, 1).conflict(4, 2);
    b.demand_all_undemanded();
    b.build()
}

/// A chain of co-interfering, non-conflicting messages beside a fan; the
/// chain collapses to one vertex under maximal contraction.
pub fn collapsing_path() -> Problem {
    let (mut b, bases) = fan_arrangement(&FanLayout { sets: 1, shared: vec![], private: vec![2] });
    let (x, y, z) = (b.fresh(), b.fresh(), b.fresh());
    b.interfere_at_dummy(&[x, y]);
    b.interfere_at_dummy(&[y, z]);
    b.conflict(x, bases[0].0);
    b.demand_all_undemanded();
    b.build()
}

/// Two type-2 sets that share a conflicting pair and so form one extended set.
pub fn merged_type2() -> Problem {
    // x=1, y=2, z=3, a=4, c=5
    let mut b = InstanceBuilder::new(5);
    b.full_triangle(1, 4, 5).full_triangle(4, 5, 2).full_triangle(1, 2, 3);
    b.demand_all_undemanded();
    b.build()
}

/// A fan plus an outside message that must avoid the plane of a base pair.
pub fn pair_interference() -> Problem {
    let (mut b, bases) = fan_arrangement(&FanLayout { sets: 2, shared: vec![(0, 1, 1)], private: vec![1, 1] });
    let w = b.fresh();
    b.interfere_at(w, &[bases[0].0, bases[0].1]);
    b.demand_all_undemanded();
    b.build()
}

/// A canonical fixture by name (used by the CLI tests and the fixture files).
pub fn named() -> Vec<(&'static str, Problem)> {
    vec![
        ("p_pair", p_pair()),
        ("p_tri", p_tri()),
        ("p_stic", p_stic()),
        ("p_spic", p_spic()),
        ("p_2stic", p_2stic()),
        ("spic_chain", spic_chain()),
        ("six_set_arrangement", six_set_arrangement()),
    ]
}

/// A random problem: each receiver demands one or two messages and holds
/// each other message independently with probability `p_side`.
pub fn random_problem<R: Rng + ?Sized>(rng: &mut R, n: usize, receivers: usize, p_side: f64) -> Problem {
    let mut b = InstanceBuilder::new(n);
    for _ in 0..receivers {
        let mut labels: Vec<usize> = (1..=n).collect();
        labels.shuffle(rng);
        let nd = if n > 1 && rng.gen_bool(0.25) { 2 } else { 1 };
        let demands = &labels[..nd];
        let side: Vec<usize> = labels[nd..].iter().copied().filter(|_| rng.gen_bool(p_side)).collect();
        b.raw(demands, &side);
    }
    b.build()
}

/// Kinds of strictly two-dimensional gadget used by [`random_gadget_chain`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gadget {
    Triangle,
    Spic,
}

/// A chain of gadgets plus bookkeeping for tests.
#[derive(Clone, Debug)]
pub struct GadgetChain {
    pub problem: Problem,
    pub kinds: Vec<Gadget>,
    /// Core members of each gadget (0-based).
    pub cores: Vec<MessageSet>,
    /// Whether a receiver forcing a contradiction was added.
    pub spoiled: bool,
}

/// Joinable pairs of a gadget core: (pair, conflicting?).
fn joinable(kind: Gadget, core: &[usize]) -> Vec<((usize, usize), bool)> {
    match kind {
        Gadget::Triangle => vec![((core[0], core[1]), true), ((core[1], core[2]), true), ((core[0], core[2]), true)],
        Gadget::Spic => vec![
            ((core[0], core[2]), true),
            ((core[0], core[4]), true),
            ((core[1], core[4]), true),
            ((core[1], core[3]), true),
            ((core[0], core[3]), false),
        ],
    }
}

/// Random chain of 2..=4 gadgets where each new gadget shares with the
/// previous one a pair that is known to span two dimensions: either a
/// conflicting pair, or the non-conflicting diagonal of two SPICs.
///
/// With `spoil`, a receiver demanding one core member with a conflicting
/// pair of the same gadget as interference is added, which makes the
/// instance rate-1/3 infeasible.
pub fn random_gadget_chain<R: Rng + ?Sized>(rng: &mut R, len: usize, spoil: bool, allow_spic: bool) -> GadgetChain {
    let mut b = InstanceBuilder::new(0);
    let mut kinds = Vec::new();
    let mut cores: Vec<Vec<usize>> = Vec::new();
    for i in 0..len {
        let prev = cores.last().map(|c| (kinds[i - 1], c.clone()));
        let kind = if allow_spic && rng.gen_bool(0.5) { Gadget::Spic } else { Gadget::Triangle };
        // pick the shared pair, if any
        let shared = prev.and_then(|(pk, pc)| {
            let options: Vec<((usize, usize), bool)> = joinable(pk, &pc)
                .into_iter()
                .filter(|&(_, conflicting)| conflicting || kind == Gadget::Spic)
                .collect();
            options.choose(rng).copied()
        });
        let kind = match shared {
            Some((_, false)) => Gadget::Spic,
            _ => kind,
        };
        let size = if kind == Gadget::Triangle { 3 } else { 5 };
        let mut core: Vec<Option<usize>> = vec![None; size];
        if let Some(((u, v), conflicting)) = shared {
            let slots = match (kind, conflicting) {
                (Gadget::Triangle, _) => *[[0, 1], [1, 2], [0, 2]].choose(rng).unwrap(),
                (Gadget::Spic, true) => *[[0, 2], [0, 4], [1, 4], [1, 3]].choose(rng).unwrap(),
                (Gadget::Spic, false) => [0, 3],
            };
            let (u, v) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
            core[slots[0]] = Some(u);
            core[slots[1]] = Some(v);
        }
        let core: Vec<usize> = core.into_iter().map(|m| m.unwrap_or_else(|| b.fresh())).collect();
        match kind {
            Gadget::Triangle => {
                b.full_triangle(core[0], core[1], core[2]);
            }
            Gadget::Spic => {
                b.spic([core[0], core[1], core[2], core[3], core[4]]);
            }
        }
        kinds.push(kind);
        cores.push(core);
    }
    if spoil {
        // a receiver inside a SPIC adds conflicts that break the configuration,
        // so triangles are spoiled when there is one
        let triangles: Vec<usize> = (0..kinds.len()).filter(|&g| kinds[g] == Gadget::Triangle).collect();
        let g = match triangles.choose(rng) {
            Some(&g) => g,
            None => rng.gen_range(0..cores.len()),
        };
        let core = &cores[g];
        let (target, pair) = match kinds[g] {
            Gadget::Triangle => (core[0], [core[1], core[2]]),
            // roles 2 and 5 conflict; role 1 is in the same plane
            Gadget::Spic => (core[0], [core[1], core[4]]),
        };
        b.interfere_at(target, &pair);
    }
    b.demand_all_undemanded();
    GadgetChain {
        problem: b.build(),
        kinds,
        cores: cores.iter().map(|c| c.iter().map(|l| l - 1).collect()).collect(),
        spoiled: spoil,
    }
}

/// Small type-2 instances: chains of full triangles glued along conflicting
/// pairs, optionally with a receiver that puts a conflicting pair into one
/// restricted alignment set.
pub fn type2_suite() -> Vec<(String, Problem)> {
    let mut out = Vec::new();
    for triangles in 1..=3usize {
        for spoil in [false, true] {
            // strip: triangles (1,2,3), (2,3,4), (3,4,5)
            let mut b = InstanceBuilder::new(triangles + 2);
            for t in 0..triangles {
                b.full_triangle(t + 1, t + 2, t + 3);
            }
            if spoil {
                b.interfere_at(1, &[2, 3]);
            }
            b.demand_all_undemanded();
            out.push((format!("strip-{triangles}{}", if spoil { "-spoiled" } else { "" }), b.build()));
        }
    }
    for ports in 2..=3usize {
        for spoil in [false, true] {
            let mut b = InstanceBuilder::new(2 + ports);
            for p in 0..ports {
                b.full_triangle(1, 2, 3 + p);
            }
            if spoil {
                b.interfere_at(3, &[1, 2]);
            }
            b.demand_all_undemanded();
            out.push((format!("fan-{ports}{}", if spoil { "-spoiled" } else { "" }), b.build()));
        }
    }
    // a triangle with a single conflicting pair
    let mut b = InstanceBuilder::new(3);
    b.interfere_at_dummy(&[1, 2, 3]);
    b.conflict(1, 2);
    b.demand_all_undemanded();
    out.push(("half-conflicting-triangle".to_string(), b.build()));
    out
}
