//! Exact hyper-minrank by exhaustive search over valid sub-hypergraphs, plus
//! search-space and complexity-exponent calculators.
//!
//! The search space is the Cartesian product over receivers of:
//! odd subsets of the demand edges, all subsets of the cached edges and, per
//! uncached replicated message, even subsets of its holders.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::gf2::{BitMatrix, XorBasis};
use crate::hypergraph::{CompositeAdjacency, ReceiverChoice, SubChoice};
use crate::instance::Instance;

pub const DEFAULT_SEARCH_CAP: u32 = 34;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("search space is 2^{exponent} candidates, above the cap of 2^{cap}; raise the cap to proceed")]
    CapExceeded { exponent: u64, cap: u32 },
    #[error("single-sender minrank needs N = 1 and a sender storing every message")]
    NotSingleSender,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub parallelism: usize,
    pub prune: bool,
    pub search_cap: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { parallelism: 1, prune: true, search_cap: DEFAULT_SEARCH_CAP }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub hyperminrank: usize,
    pub witness: CompositeAdjacency,
    pub witness_choice: SubChoice,
    pub candidates_examined: BigUint,
    pub elapsed: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SlotKind {
    Demand,
    Cached,
    Coupled,
}

/// One factor of a receiver's choice space: subsets of the holders of
/// `message`, restricted by parity.
#[derive(Clone, Debug)]
struct Slot {
    kind: SlotKind,
    message: usize,
    holders: Vec<usize>,
    masks: Vec<u32>,
}

impl Slot {
    fn new(kind: SlotKind, message: usize, holders: Vec<usize>) -> Self {
        let all = 1u32 << holders.len();
        let masks = (0..all)
            .filter(|m| match kind {
                SlotKind::Demand => m.count_ones() % 2 == 1,
                SlotKind::Cached => true,
                SlotKind::Coupled => m.count_ones() % 2 == 0,
            })
            .collect();
        Self { kind, message, holders, masks }
    }

    fn senders(&self, digit: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.masks[digit];
        self.holders.iter().enumerate().filter(move |(i, _)| mask >> i & 1 == 1).map(|(_, &n)| n)
    }
}

#[derive(Clone, Debug)]
struct ReceiverSpace {
    slots: Vec<Slot>,
    exponent: u64,
}

impl ReceiverSpace {
    fn count(&self) -> u64 {
        self.slots.iter().map(|s| s.masks.len() as u64).product()
    }

    /// Mixed-radix digits of choice `c`, slot 0 most significant.
    fn digits(&self, mut c: u64, out: &mut [usize]) {
        for (i, s) in self.slots.iter().enumerate().rev() {
            let r = s.masks.len() as u64;
            out[i] = (c % r) as usize;
            c /= r;
        }
    }
}

/// The per-receiver choice spaces of an instance, in enumeration order.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    k: usize,
    n: usize,
    receivers: Vec<ReceiverSpace>,
}

impl SearchSpace {
    pub fn new(inst: &Instance) -> Self {
        let receivers = (0..inst.k())
            .map(|k| {
                let mut slots = vec![Slot::new(SlotKind::Demand, k, inst.availability(k))];
                for &j in inst.side_info(k) {
                    slots.push(Slot::new(SlotKind::Cached, j, inst.availability(j)));
                }
                for m in (0..inst.k()).filter(|&m| m != k && !inst.receiver_knows(k, m)) {
                    let holders = inst.availability(m);
                    if holders.len() >= 2 {
                        slots.push(Slot::new(SlotKind::Coupled, m, holders));
                    }
                }
                let exponent = slots.iter().map(|s| (s.masks.len() as u64).trailing_zeros() as u64).sum();
                ReceiverSpace { slots, exponent }
            })
            .collect();
        Self { k: inst.k(), n: inst.n(), receivers }
    }

    /// `log2` of the number of candidates; every factor is a power of two.
    pub fn exponent(&self) -> u64 {
        self.receivers.iter().map(|r| r.exponent).sum()
    }

    pub fn size(&self) -> BigUint {
        BigUint::from(1u8) << self.exponent()
    }

    pub fn choices(&self, k: usize) -> u64 {
        self.receivers[k].count()
    }

    pub fn receiver_choice(&self, k: usize, c: u64) -> ReceiverChoice {
        let rs = &self.receivers[k];
        let mut digits = vec![0; rs.slots.len()];
        rs.digits(c, &mut digits);
        let mut rc = ReceiverChoice::default();
        for (slot, &d) in rs.slots.iter().zip(&digits) {
            let senders: Vec<usize> = slot.senders(d).collect();
            match slot.kind {
                SlotKind::Demand => rc.demand = senders,
                SlotKind::Cached => rc.cached.extend(senders.into_iter().map(|n| (slot.message, n))),
                SlotKind::Coupled if !senders.is_empty() => rc.coupled.push((slot.message, senders)),
                SlotKind::Coupled => {}
            }
        }
        rc.cached.sort_unstable();
        rc
    }

    pub fn choice(&self, path: &[u64]) -> SubChoice {
        SubChoice { receivers: path.iter().enumerate().map(|(k, &c)| self.receiver_choice(k, c)).collect() }
    }

    /// Calls `f` on every SubChoice in enumeration order.
    pub fn for_each_choice(&self, mut f: impl FnMut(&SubChoice)) {
        if self.receivers.iter().any(|r| r.count() == 0) {
            return;
        }
        let mut path = vec![0u64; self.k];
        loop {
            f(&self.choice(&path));
            let mut i = self.k;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                path[i] += 1;
                if path[i] < self.choices(i) {
                    break;
                }
                path[i] = 0;
            }
        }
    }

    fn check_cap(&self, cap: u32) -> Result<(), SolverError> {
        let exponent = self.exponent();
        if exponent > cap as u64 || self.receivers.iter().any(|r| r.exponent >= 64) {
            return Err(SolverError::CapExceeded { exponent, cap });
        }
        Ok(())
    }
}

/// Depth-first search state of one worker.
struct Worker<'a> {
    space: &'a SearchSpace,
    words: usize,
    prune: bool,
    bases: Vec<XorBasis>,
    /// scratch rows per depth, `n * words` each
    rows: Vec<Vec<u64>>,
    digits: Vec<Vec<usize>>,
    path: Vec<u64>,
    best: Option<(usize, Vec<u64>)>,
    leaves: u128,
    partial: usize,
    done: bool,
}

impl<'a> Worker<'a> {
    fn new(space: &'a SearchSpace, prune: bool) -> Self {
        let words = space.k.div_ceil(64).max(1);
        Self {
            space,
            words,
            prune,
            bases: (0..space.n).map(|_| XorBasis::new(space.k)).collect(),
            rows: vec![vec![0; space.n * words]; space.k],
            digits: space.receivers.iter().map(|r| vec![0; r.slots.len()]).collect(),
            path: vec![0; space.k],
            best: None,
            leaves: 0,
            partial: 0,
            done: false,
        }
    }

    fn bound(&self) -> usize {
        self.best.as_ref().map_or(self.space.k + 1, |b| b.0)
    }

    /// Inserts receiver `depth`'s rows for choice `c`; returns the slots used.
    fn apply(&mut self, depth: usize, c: u64, undo: &mut Vec<(usize, usize)>) {
        let rs = &self.space.receivers[depth];
        rs.digits(c, &mut self.digits[depth]);
        let rows = &mut self.rows[depth];
        rows.fill(0);
        let w = self.words;
        for (slot, &d) in rs.slots.iter().zip(&self.digits[depth]) {
            let (word, bit) = (slot.message / 64, slot.message % 64);
            for n in slot.senders(d) {
                rows[n * w + word] ^= 1 << bit;
            }
        }
        for n in 0..self.space.n {
            let row = &rows[n * w..(n + 1) * w];
            if row.iter().any(|&x| x != 0) {
                if let Some(s) = self.bases[n].insert(row) {
                    undo.push((n, s));
                }
            }
        }
        self.partial += undo.len();
        self.path[depth] = c;
    }

    fn revert(&mut self, undo: &[(usize, usize)]) {
        for &(n, s) in undo {
            self.bases[n].remove_slot(s);
        }
        self.partial -= undo.len();
    }

    fn leaf(&mut self) {
        self.leaves += 1;
        if self.partial < self.bound() {
            self.best = Some((self.partial, self.path.clone()));
            // every fitting has rank at least one
            if self.prune && self.partial <= 1 {
                self.done = true;
            }
        }
    }

    fn descend(&mut self, depth: usize) {
        if depth == self.space.k {
            self.leaf();
            return;
        }
        let count = self.space.choices(depth);
        let mut undo = Vec::with_capacity(self.space.n);
        for c in 0..count {
            if self.done {
                return;
            }
            undo.clear();
            self.apply(depth, c, &mut undo);
            if depth + 1 == self.space.k {
                self.leaf();
            } else if !(self.prune && self.partial >= self.bound()) {
                self.descend(depth + 1);
            }
            self.revert(&undo);
        }
    }

    /// Searches the prefix indices `range` over the first `prefix` receivers.
    fn run_prefix(&mut self, prefix: usize, range: std::ops::Range<u64>) {
        let radices: Vec<u64> = (0..prefix).map(|k| self.space.choices(k)).collect();
        let mut undo: Vec<Vec<(usize, usize)>> = vec![Vec::new(); prefix];
        for idx in range {
            if self.done {
                return;
            }
            let mut rest = idx;
            let mut cs = vec![0u64; prefix];
            for k in (0..prefix).rev() {
                cs[k] = rest % radices[k];
                rest /= radices[k];
            }
            let mut applied = 0;
            let mut pruned = false;
            for k in 0..prefix {
                undo[k].clear();
                let mut u = std::mem::take(&mut undo[k]);
                self.apply(k, cs[k], &mut u);
                undo[k] = u;
                applied += 1;
                if k + 1 < self.space.k && self.prune && self.partial >= self.bound() {
                    pruned = true;
                    break;
                }
            }
            if !pruned {
                self.descend(prefix);
            }
            for k in (0..applied).rev() {
                let u = std::mem::take(&mut undo[k]);
                self.revert(&u);
                undo[k] = u;
            }
        }
    }
}

/// Best `(value, path)` found by one worker, and its leaf count.
type WorkerResult = (Option<(usize, Vec<u64>)>, u128);

/// Exact hyper-minrank with default options and the given parallelism.
pub fn hyperminrank(inst: &Instance, parallelism: usize) -> Result<SolveReport, SolverError> {
    solve(inst, &SolveOptions { parallelism, ..SolveOptions::default() })
}

pub fn solve(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport, SolverError> {
    let start = Instant::now();
    let space = SearchSpace::new(inst);
    space.check_cap(opts.search_cap)?;

    let workers = opts.parallelism.max(1);
    let (mut prefix, mut prefix_count) = (0usize, 1u64);
    if workers > 1 {
        while prefix < space.k && prefix_count < workers as u64 * 4 {
            prefix_count *= space.choices(prefix);
            prefix += 1;
        }
    }

    let results: Vec<WorkerResult> = if workers == 1 || prefix_count == 1 {
        let mut w = Worker::new(&space, opts.prune);
        w.descend(0);
        vec![(w.best, w.leaves)]
    } else {
        let chunks = workers.min(prefix_count as usize) as u64;
        let bounds: Vec<_> = (0..=chunks).map(|i| prefix_count * i / chunks).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = bounds
                .windows(2)
                .map(|b| {
                    let (lo, hi, space) = (b[0], b[1], &space);
                    s.spawn(move || {
                        let mut w = Worker::new(space, opts.prune);
                        w.run_prefix(prefix, lo..hi);
                        (w.best, w.leaves)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("solver worker panicked")).collect()
        })
    };

    let leaves: u128 = results.iter().map(|r| r.1).sum();
    let (value, path) = results
        .into_iter()
        .filter_map(|r| r.0)
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("every instance has at least one valid sub-hypergraph");
    let witness_choice = space.choice(&path);
    let witness = witness_choice.adjacency(inst).expect("enumerated choices are valid");
    debug_assert_eq!(witness.sum_rank(), value);
    Ok(SolveReport {
        hyperminrank: value,
        witness,
        witness_choice,
        candidates_examined: BigUint::from(leaves),
        elapsed: start.elapsed(),
    })
}

/// Search-space size as given by the closed-form exponent and as actually
/// enumerated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchSpaceSize {
    pub e1: u64,
    #[serde(serialize_with = "big_as_string")]
    pub formula_size: BigUint,
    pub enumerated_exponent: u64,
    #[serde(serialize_with = "big_as_string")]
    pub enumerated_size: BigUint,
}

fn big_as_string<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// `E1(k) = |R(k)| + sum_{m not in R(k)} (d_m - 1)`.
pub fn e1_per_receiver(inst: &Instance) -> Vec<u64> {
    let d = inst.derive_stats().degrees;
    (0..inst.k())
        .map(|k| {
            let outside: usize = (0..inst.k()).filter(|&m| !inst.receiver_knows(k, m)).map(|m| d[m] - 1).sum();
            (inst.side_info(k).len() + outside) as u64
        })
        .collect()
}

pub fn search_space_size(inst: &Instance) -> SearchSpaceSize {
    let e1 = e1_per_receiver(inst).iter().sum();
    let space = SearchSpace::new(inst);
    SearchSpaceSize {
        e1,
        formula_size: BigUint::from(1u8) << e1,
        enumerated_exponent: space.exponent(),
        enumerated_size: space.size(),
    }
}

/// Exact evaluation of `r0/K + delta <= (1+delta)^2 / (2N)` with
/// `delta = S/K - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplicationThreshold {
    /// `r0/K + delta` as `(numerator, denominator)`.
    pub lhs: (i128, i128),
    /// `(1+delta)^2 / (2N)` as `(numerator, denominator)`.
    pub rhs: (i128, i128),
    pub holds: bool,
}

impl ReplicationThreshold {
    pub fn evaluate(k: usize, n: usize, total_load: usize, r0: usize) -> Self {
        let (k, n, s, r0) = (k as i128, n as i128, total_load as i128, r0 as i128);
        let lhs = (r0 + s - k, k);
        let rhs = (s * s, 2 * n * k * k);
        // cross-multiplied by 2 N K^2
        let holds = 2 * n * k * (r0 + s - k) <= s * s;
        Self { lhs, rhs, holds }
    }

    pub fn lhs_f64(&self) -> f64 {
        self.lhs.0 as f64 / self.lhs.1 as f64
    }

    pub fn rhs_f64(&self) -> f64 {
        self.rhs.0 as f64 / self.rhs.1 as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexityProfile {
    pub search: SearchSpaceSize,
    pub e1: u64,
    pub e2: u64,
    pub e3: u64,
    pub e_embedded: Option<u64>,
    pub total_load: usize,
    pub threshold: ReplicationThreshold,
}

/// `E2(k) = sum_{m in R(k)} d_m + sum_{m in M_c, m not in R(k)} (d_m - 1)`,
/// evaluated from its per-sender form.
pub fn e2_per_receiver(inst: &Instance) -> Vec<u64> {
    let stats = inst.derive_stats();
    let replicated = |m: usize| stats.degrees[m] >= 2;
    (0..inst.k())
        .map(|k| {
            let mut sum = 0i64;
            for n in 0..inst.n() {
                for &m in inst.store(n) {
                    if inst.receiver_knows(k, m) || replicated(m) {
                        sum += 1;
                    }
                }
            }
            let outside_replicated = (0..inst.k()).filter(|&m| !inst.receiver_knows(k, m) && replicated(m)).count();
            (sum - outside_replicated as i64) as u64
        })
        .collect()
}

pub fn complexity_exponents(inst: &Instance) -> ComplexityProfile {
    let stats = inst.derive_stats();
    let search = search_space_size(inst);
    let e2 = e2_per_receiver(inst).iter().sum();
    let e3 = inst.stores().iter().map(|m| ((m.len() * m.len() + m.len()) / 2) as u64).sum();
    let e_embedded = inst.is_embedded().then(|| {
        let k = inst.k() as u64;
        stats.total_load as u64 + stats.degrees.iter().map(|&d| (d as u64 - 1) * (k - d as u64)).sum::<u64>()
    });
    let threshold = ReplicationThreshold::evaluate(inst.k(), inst.n(), stats.total_load, stats.max_side_info);
    ComplexityProfile { e1: search.e1, search, e2, e3, e_embedded, total_load: stats.total_load, threshold }
}

/// Classical minrank of a single-sender instance by brute force over all
/// matrices with unit diagonal and off-diagonal support inside `R(k)`.
pub fn minrank_single(inst: &Instance, search_cap: u32) -> Result<usize, SolverError> {
    let k = inst.k();
    if inst.n() != 1 || inst.store(0).len() != k {
        return Err(SolverError::NotSingleSender);
    }
    let free: Vec<(usize, usize)> = (0..k).flat_map(|r| inst.side_info(r).iter().map(move |&j| (r, j))).collect();
    if free.len() > search_cap as usize || free.len() >= 64 {
        return Err(SolverError::CapExceeded { exponent: free.len() as u64, cap: search_cap });
    }
    let mut best = k;
    for mask in 0u64..1 << free.len() {
        let mut m = BitMatrix::identity(k);
        for (i, &(r, j)) in free.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m.set(r, j, true);
            }
        }
        best = best.min(m.rank());
    }
    Ok(best)
}
