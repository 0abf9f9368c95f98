//! Exhaustive search for scalar-linear codes over GF(2), GF(3) and GF(5).
//!
//! The search assigns one vector per message in a fixed order and prunes as
//! soon as a constraint is already violated: either a demanded vector lies in
//! the span of its (assigned) interference, or that span is the whole space
//! (the demand is nonzero, so it would land inside).
//!
//! By default codes are only enumerated up to a change of basis: the vector
//! placed at each step is either inside the span `e_1..e_d` of the standard
//! basis vectors introduced so far, or the next one `e_{d+1}`. Every code is
//! equivalent to such a code under an invertible linear map, and both
//! feasibility and the dimension of any message subset are unchanged by such
//! maps, so this loses nothing for either question. `Normalization::Off`
//! enumerates the full space instead; it exists for cross-checks.
//!
//! The linear algebra here is a separate small implementation over `u8`, so
//! oracle results do not depend on the `gf` module they are used to test.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::code::PrecodingAssignment;
use crate::dims::DimSet;
use crate::gf::{FVector, Field};
use crate::model::{MessageSet, Problem};

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search budget of {budget} nodes exhausted; result unknown")]
    BudgetExceeded { budget: u64 },
    #[error("the oracle supports GF(2), GF(3) and GF(5) only, not GF({0})")]
    UnsupportedField(u32),
    #[error("code length {0} outside 1..=4")]
    UnsupportedLength(usize),
    #[error("subset {0} is empty or mentions a message outside the problem")]
    BadSubset(MessageSet),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Enumerate one representative per change of basis.
    Basis,
    /// Enumerate every assignment.
    Off,
}

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub budget: u64,
    pub threads: usize,
    pub normalization: Normalization,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { budget: DEFAULT_BUDGET, threads: 1, normalization: Normalization::Basis }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsetDims {
    pub subset: MessageSet,
    pub dims: DimSet,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<PrecodingAssignment>,
    pub nodes_explored: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achievable_dims: Option<Vec<SubsetDims>>,
    /// Set when classification was requested but no code exists.
    pub vacuous: bool,
}

impl OracleResult {
    /// Achievable dimensions of `subset`, if it was classified.
    pub fn dims_of(&self, subset: &MessageSet) -> Option<DimSet> {
        self.achievable_dims.as_ref()?.iter().find(|s| &s.subset == subset).map(|s| s.dims)
    }
}

/// Echelon basis over GF(q), q ≤ 5, vectors of length ≤ 4.
#[derive(Clone, Copy)]
struct Echelon {
    rows: [[u8; 4]; 4],
    pivots: [u8; 4],
    rank: usize,
}

impl Echelon {
    fn new() -> Self {
        Echelon { rows: [[0; 4]; 4], pivots: [0; 4], rank: 0 }
    }

    fn reduce(&self, t: &Tables, v: [u8; 4]) -> [u8; 4] {
        let q = t.q as u16;
        let mut v = v;
        for r in 0..self.rank {
            let p = self.pivots[r] as usize;
            let f = v[p] as u16;
            if f != 0 {
                for c in 0..t.l {
                    v[c] = ((v[c] as u16 + (q - f) * self.rows[r][c] as u16) % q) as u8;
                }
            }
        }
        v
    }

    fn contains(&self, t: &Tables, v: [u8; 4]) -> bool {
        self.reduce(t, v).iter().all(|&x| x == 0)
    }

    fn add(&mut self, t: &Tables, v: [u8; 4]) {
        if self.rank == t.l {
            return;
        }
        let v = self.reduce(t, v);
        let Some(p) = (0..t.l).find(|&c| v[c] != 0) else { return };
        let inv = t.inv[v[p] as usize] as u16;
        let mut row = [0u8; 4];
        for c in 0..t.l {
            row[c] = ((v[c] as u16 * inv) % t.q as u16) as u8;
        }
        self.rows[self.rank] = row;
        self.pivots[self.rank] = p as u8;
        self.rank += 1;
    }
}

struct Tables {
    q: u8,
    l: usize,
    inv: [u8; 8],
    vectors: Vec<[u8; 4]>,
    /// `powers[d] = q^d`.
    powers: [usize; 5],
}

impl Tables {
    fn new(q: u8, l: usize) -> Self {
        let mut inv = [0u8; 8];
        for a in 1..q {
            inv[a as usize] = (1..q).find(|&b| (a as u16 * b as u16) % q as u16 == 1).unwrap();
        }
        let mut powers = [1usize; 5];
        for d in 1..5 {
            powers[d] = powers[d - 1] * q as usize;
        }
        let vectors = (0..powers[l])
            .map(|mut idx| {
                let mut v = [0u8; 4];
                for c in v.iter_mut().take(l) {
                    *c = (idx % q as usize) as u8;
                    idx /= q as usize;
                }
                v
            })
            .collect();
        Tables { q, l, inv, vectors, powers }
    }
}

struct Constraint {
    demand: usize,
    interference: Vec<usize>,
}

/// Everything fixed for one search.
struct Plan {
    t: Tables,
    /// Assignment order (messages) and its inverse.
    order: Vec<usize>,
    pos: Vec<usize>,
    demanded: Vec<bool>,
    constraints: Vec<Constraint>,
    /// Constraints to re-check after assigning each message.
    touching: Vec<Vec<usize>>,
    normalize: bool,
    /// Classification: subsets and the number of leading positions that
    /// cover all their members.
    subsets: Vec<MessageSet>,
    relevant: usize,
    budget: u64,
}

impl Plan {
    fn new(p: &Problem, l: usize, q: u8, subsets: &[MessageSet], config: &OracleConfig) -> Plan {
        let n = p.n();
        let mut seen = BTreeSet::new();
        let mut constraints = Vec::new();
        for h in p.hyperedges() {
            let key = (h.demand, h.interference.clone());
            if seen.insert(key) {
                constraints.push(Constraint { demand: h.demand, interference: h.interference.iter().copied().collect() });
            }
        }
        let demanded_set = p.demanded();
        let demanded: Vec<bool> = (0..n).map(|m| demanded_set.contains(&m)).collect();
        let mut involved: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (c, con) in constraints.iter().enumerate() {
            involved[con.demand].push(c);
            for &i in &con.interference {
                involved[i].push(c);
            }
        }
        let relevant_set: MessageSet = subsets.iter().fold(MessageSet::new(), |acc, s| acc.union(s));
        let order = greedy_order(n, &constraints, &involved, &relevant_set);
        let mut pos = vec![0; n];
        for (t, &m) in order.iter().enumerate() {
            pos[m] = t;
        }
        Plan {
            t: Tables::new(q, l),
            order,
            pos,
            demanded,
            constraints,
            touching: involved,
            normalize: config.normalization == Normalization::Basis,
            subsets: subsets.to_vec(),
            relevant: relevant_set.len(),
            budget: config.budget,
        }
    }

    /// Candidate vector indices at a position whose prefix spans `e_1..e_d`.
    fn candidates(&self, m: usize, d: usize) -> std::ops::Range<usize> {
        let lo = if self.demanded[m] { 1 } else { 0 };
        let hi = if self.normalize { (self.t.powers[d] + 1).min(self.t.powers[self.t.l]) } else { self.t.powers[self.t.l] };
        lo..hi
    }
}

/// Relevant messages first, then the rest; within each group repeatedly pick
/// the message sharing the most constraints with those already placed.
fn greedy_order(n: usize, constraints: &[Constraint], involved: &[Vec<usize>], relevant: &MessageSet) -> Vec<usize> {
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for group in [true, false] {
        loop {
            let best = (0..n)
                .filter(|&m| !placed[m] && relevant.contains(&m) == group)
                .max_by_key(|&m| {
                    let linked = involved[m]
                        .iter()
                        .filter(|&&c| {
                            let con = &constraints[c];
                            std::iter::once(con.demand).chain(con.interference.iter().copied()).any(|x| x != m && placed[x])
                        })
                        .count();
                    (linked, involved[m].len(), usize::MAX - m)
                });
            let Some(m) = best else { break };
            placed[m] = true;
            order.push(m);
        }
    }
    order
}

/// One worker's search state.
struct Worker<'a> {
    plan: &'a Plan,
    /// Vector index per position.
    assign: Vec<usize>,
    /// `dims[t]`: dimension of the span of positions `..t` (normalized mode).
    dims: Vec<usize>,
    nodes: u64,
    unflushed: u64,
    counter: &'a AtomicU64,
    abort: &'a AtomicBool,
    /// Classification results per subset.
    found: Vec<DimSet>,
    any_code: bool,
}

enum Flow {
    Continue,
    Stop,
}

impl<'a> Worker<'a> {
    fn new(plan: &'a Plan, counter: &'a AtomicU64, abort: &'a AtomicBool) -> Self {
        let n = plan.order.len();
        Worker {
            plan,
            assign: vec![0; n],
            dims: vec![0; n + 1],
            nodes: 0,
            unflushed: 0,
            counter,
            abort,
            found: vec![DimSet::EMPTY; plan.subsets.len()],
            any_code: false,
        }
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.unflushed += 1;
        if self.unflushed >= 1024 {
            let total = self.counter.fetch_add(self.unflushed, Ordering::Relaxed) + self.unflushed;
            self.unflushed = 0;
            if total > self.plan.budget {
                self.abort.store(true, Ordering::Relaxed);
            }
        }
        !self.abort.load(Ordering::Relaxed)
    }

    fn flush(&mut self) {
        let total = self.counter.fetch_add(self.unflushed, Ordering::Relaxed) + self.unflushed;
        self.unflushed = 0;
        if total > self.plan.budget {
            self.abort.store(true, Ordering::Relaxed);
        }
    }

    fn vector_at(&self, m: usize) -> [u8; 4] {
        self.plan.t.vectors[self.assign[self.plan.pos[m]]]
    }

    /// Whether constraints touching the message at position `t` still hold.
    fn consistent(&self, t: usize) -> bool {
        let plan = self.plan;
        let m = plan.order[t];
        for &c in &plan.touching[m] {
            let con = &plan.constraints[c];
            let mut span = Echelon::new();
            for &i in &con.interference {
                if plan.pos[i] <= t {
                    span.add(&plan.t, self.vector_at(i));
                }
            }
            if plan.pos[con.demand] <= t {
                if span.contains(&plan.t, self.vector_at(con.demand)) {
                    return false;
                }
            } else if span.rank == plan.t.l {
                return false;
            }
        }
        true
    }

    fn place(&mut self, t: usize, idx: usize) {
        self.assign[t] = idx;
        let d = self.dims[t];
        self.dims[t + 1] = if self.plan.normalize && d < self.plan.t.l && idx == self.plan.t.powers[d] { d + 1 } else { d };
        if !self.plan.normalize {
            self.dims[t + 1] = 0;
        }
    }

    /// Depth-first search for one completion from position `t`.
    fn find(&mut self, t: usize) -> Flow {
        if t == self.plan.order.len() {
            return Flow::Stop;
        }
        let m = self.plan.order[t];
        for idx in self.plan.candidates(m, self.dims[t]) {
            if !self.tick() {
                return Flow::Stop;
            }
            self.place(t, idx);
            if self.consistent(t) {
                if let Flow::Stop = self.find(t + 1) {
                    return Flow::Stop;
                }
            }
        }
        Flow::Continue
    }

    /// Enumerates assignments of the relevant prefix; for each, records the
    /// subset dimensions if some completion exists.
    fn classify(&mut self, t: usize) {
        if self.abort.load(Ordering::Relaxed) {
            return;
        }
        if t == self.plan.relevant {
            let dims: Vec<usize> = self.plan.subsets.iter().map(|s| self.rank_of(s)).collect();
            if self.any_code && dims.iter().zip(&self.found).all(|(&d, f)| f.contains(d)) {
                return;
            }
            let saved = self.assign.clone();
            let completed = matches!(self.find(t), Flow::Stop) && !self.abort.load(Ordering::Relaxed);
            self.assign = saved;
            if completed {
                self.any_code = true;
                for (f, d) in self.found.iter_mut().zip(dims) {
                    f.insert(d);
                }
            }
            return;
        }
        let m = self.plan.order[t];
        for idx in self.plan.candidates(m, self.dims[t]) {
            if !self.tick() {
                return;
            }
            self.place(t, idx);
            if self.consistent(t) {
                self.classify(t + 1);
            }
        }
    }

    fn rank_of(&self, s: &MessageSet) -> usize {
        let mut e = Echelon::new();
        for &m in s.iter() {
            e.add(&self.plan.t, self.vector_at(m));
        }
        e.rank
    }

    fn witness(&self, field: Field) -> PrecodingAssignment {
        let n = self.plan.order.len();
        let l = self.plan.t.l;
        let vectors = (0..n)
            .map(|m| {
                let v = self.vector_at(m);
                let coords: Vec<i64> = v[..l].iter().map(|&c| c as i64).collect();
                FVector::new(field, &coords).expect("oracle vectors are valid")
            })
            .collect();
        PrecodingAssignment::new(field, l, vectors).expect("oracle vectors have the code length")
    }
}

fn check_inputs(p: &Problem, l: usize, q: u32, subsets: &[MessageSet]) -> Result<Field, OracleError> {
    if ![2, 3, 5].contains(&q) {
        return Err(OracleError::UnsupportedField(q));
    }
    if !(1..=4).contains(&l) {
        return Err(OracleError::UnsupportedLength(l));
    }
    for s in subsets {
        if s.is_empty() || s.iter().any(|&m| m >= p.n()) {
            return Err(OracleError::BadSubset(s.clone()));
        }
    }
    Ok(Field::new(q as u64).expect("2, 3 and 5 are prime"))
}

/// Valid prefixes of length `depth` (in search order), for splitting work.
fn prefixes(plan: &Plan, depth: usize, counter: &AtomicU64, abort: &AtomicBool) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut w = Worker::new(plan, counter, abort);
    let mut out = Vec::new();
    fn rec(w: &mut Worker, t: usize, depth: usize, out: &mut Vec<(Vec<usize>, Vec<usize>)>) {
        if t == depth {
            out.push((w.assign[..depth].to_vec(), w.dims[..=depth].to_vec()));
            return;
        }
        let m = w.plan.order[t];
        for idx in w.plan.candidates(m, w.dims[t]) {
            if !w.tick() {
                return;
            }
            w.place(t, idx);
            if w.consistent(t) {
                rec(w, t + 1, depth, out);
            }
        }
    }
    rec(&mut w, 0, depth, &mut out);
    w.flush();
    out
}

fn split_depth(plan: &Plan, threads: usize, limit: usize, counter: &AtomicU64, abort: &AtomicBool) -> usize {
    let mut depth = 0;
    while depth < limit {
        depth += 1;
        if prefixes(plan, depth, counter, abort).len() >= 8 * threads {
            break;
        }
    }
    depth
}

fn run(
    p: &Problem,
    l: usize,
    q: u32,
    subsets: &[MessageSet],
    config: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    let field = check_inputs(p, l, q, subsets)?;
    let plan = Plan::new(p, l, q as u8, subsets, config);
    let counter = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let classifying = !subsets.is_empty();
    let n = plan.order.len();

    let (feasible, witness, found) = if config.threads <= 1 || n < 2 {
        let mut w = Worker::new(&plan, &counter, &abort);
        if classifying {
            w.classify(0);
            w.flush();
            (w.any_code, None, w.found)
        } else {
            let ok = matches!(w.find(0), Flow::Stop) && !abort.load(Ordering::Relaxed);
            w.flush();
            let witness = ok.then(|| w.witness(field));
            (ok, witness, Vec::new())
        }
    } else {
        let limit = if classifying { plan.relevant.max(1).min(n) } else { n };
        let depth = split_depth(&plan, config.threads, limit, &counter, &abort);
        let starts = prefixes(&plan, depth, &counter, &abort);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .expect("thread pool");
        pool.install(|| {
            let seed = |w: &mut Worker, (assign, dims): &(Vec<usize>, Vec<usize>)| {
                w.assign[..depth].copy_from_slice(assign);
                w.dims[..=depth].copy_from_slice(dims);
            };
            if classifying {
                let parts: Vec<(bool, Vec<DimSet>)> = starts
                    .par_iter()
                    .map(|s| {
                        let mut w = Worker::new(&plan, &counter, &abort);
                        seed(&mut w, s);
                        w.classify(depth);
                        w.flush();
                        (w.any_code, w.found)
                    })
                    .collect();
                let mut found = vec![DimSet::EMPTY; subsets.len()];
                let mut any = false;
                for (a, f) in parts {
                    any |= a;
                    for (acc, x) in found.iter_mut().zip(f) {
                        *acc = acc.union(x);
                    }
                }
                (any, None, found)
            } else {
                let hit = starts.par_iter().find_map_first(|s| {
                    let mut w = Worker::new(&plan, &counter, &abort);
                    seed(&mut w, s);
                    let ok = depth == n || matches!(w.find(depth), Flow::Stop);
                    w.flush();
                    (ok && !abort.load(Ordering::Relaxed)).then(|| w.witness(field))
                });
                (hit.is_some(), hit, Vec::new())
            }
        })
    };
    if abort.load(Ordering::Relaxed) {
        return Err(OracleError::BudgetExceeded { budget: config.budget });
    }
    let nodes_explored = counter.load(Ordering::Relaxed);
    let achievable_dims = classifying.then(|| {
        subsets
            .iter()
            .zip(found.iter().copied().chain(std::iter::repeat(DimSet::EMPTY)))
            .map(|(s, dims)| SubsetDims { subset: s.clone(), dims })
            .collect()
    });
    Ok(OracleResult { feasible, witness, nodes_explored, achievable_dims, vacuous: classifying && !feasible })
}

/// Whether a rate-1/L scalar-linear code exists over GF(q).
pub fn feasible_rate(p: &Problem, l: usize, q: u32, config: &OracleConfig) -> Result<OracleResult, OracleError> {
    run(p, l, q, &[], config)
}

/// For each subset, the set of dimensions its span takes over all valid
/// rate-1/L codes over GF(q).
pub fn classify_subset_dims(
    p: &Problem,
    subsets: &[MessageSet],
    l: usize,
    q: u32,
    config: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    if subsets.is_empty() {
        return feasible_rate(p, l, q, config).map(|r| OracleResult { achievable_dims: Some(Vec::new()), ..r });
    }
    run(p, l, q, subsets, config)
}

/// Smallest `L ≤ max_l` admitting a code over GF(q), or `None` if there is none.
pub fn minrank(p: &Problem, q: u32, max_l: usize, config: &OracleConfig) -> Result<Option<usize>, OracleError> {
    for l in 1..=max_l {
        if feasible_rate(p, l, q, config)?.feasible {
            return Ok(Some(l));
        }
    }
    Ok(None)
}
