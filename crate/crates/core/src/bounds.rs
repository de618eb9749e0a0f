//! Clique-cover upper bound and complement-clique lower bound on the
//! hyper-minrank.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::codec::{code_from_fitting, verify_code, LinearCode, VerifyMode};
use crate::hypergraph::{CompositeAdjacency, EdgeClass, HyperEdge, SideInfoHypergraph};
use crate::instance::Instance;

/// Default node budget of the exact set-partition search.
pub const DEFAULT_NODE_CAP: u64 = 5_000_000;

/// A set of mutually caching receivers whose demands one sender stores.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ImplementableClique {
    pub receivers: Vec<usize>,
    pub sender: usize,
}

impl ImplementableClique {
    pub fn is_implementable(&self, inst: &Instance) -> bool {
        self.sender < inst.n()
            && !self.receivers.is_empty()
            && self.receivers.iter().all(|&k| k < inst.k() && inst.sender_has(self.sender, k))
            && self
                .receivers
                .iter()
                .all(|&k| self.receivers.iter().all(|&j| j == k || inst.receiver_knows(k, j)))
    }

    /// Hyperedges of the clique: a demand edge per receiver and cached edges
    /// between all members, all at the serving sender.
    pub fn edges(&self) -> Vec<HyperEdge> {
        let n = self.sender;
        let mut out = Vec::new();
        for &k in &self.receivers {
            for &j in &self.receivers {
                out.push(if j == k { HyperEdge::demand(k, n) } else { HyperEdge::cached(k, j, n) });
            }
        }
        out
    }
}

/// All implementable cliques, one per receiver set, served by the smallest
/// possible sender. Ordered by descending size, then receiver set.
pub fn enumerate_implementable_cliques(inst: &Instance) -> Vec<ImplementableClique> {
    let mut found: BTreeSet<(Vec<usize>, usize)> = BTreeSet::new();
    for n in 0..inst.n() {
        let store = inst.store(n);
        let mut current = Vec::new();
        extend_cliques(inst, store, 0, &mut current, &mut |set| {
            found.insert((set.to_vec(), n));
        });
    }
    let mut seen = BTreeSet::new();
    let mut out: Vec<ImplementableClique> = found
        .into_iter()
        .filter(|(r, _)| seen.insert(r.clone()))
        .map(|(receivers, sender)| ImplementableClique { receivers, sender })
        .collect();
    out.sort_by(|a, b| b.receivers.len().cmp(&a.receivers.len()).then_with(|| a.cmp(b)));
    out
}

fn extend_cliques(inst: &Instance, pool: &[usize], from: usize, current: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    for i in from..pool.len() {
        let k = pool[i];
        if current.iter().all(|&j| inst.receiver_knows(k, j) && inst.receiver_knows(j, k)) {
            current.push(k);
            f(current);
            extend_cliques(inst, pool, i + 1, current, f);
            current.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverMode {
    Exact,
    Greedy,
}

/// A partition of the receivers into implementable cliques.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CliqueCover {
    pub cliques: Vec<ImplementableClique>,
    /// The partition is provably minimum.
    pub exact: bool,
    /// An exact search was requested but hit its node cap.
    pub fell_back: bool,
    /// The induced code passed verification in both modes.
    pub certified: bool,
}

impl CliqueCover {
    pub fn m(&self) -> usize {
        self.cliques.len()
    }

    /// All-ones block on each clique at its serving sender.
    pub fn induced_fitting(&self, inst: &Instance) -> CompositeAdjacency {
        let mut a = CompositeAdjacency::zeros(inst.k(), inst.n());
        for c in &self.cliques {
            for &k in &c.receivers {
                for &j in &c.receivers {
                    a.set(k, j, c.sender, true);
                }
            }
        }
        a
    }

    pub fn induced_code(&self, inst: &Instance) -> LinearCode {
        code_from_fitting(&self.induced_fitting(inst), inst).expect("a clique partition induces a fitting")
    }

    pub fn receivers(&self) -> BTreeSet<usize> {
        self.cliques.iter().flat_map(|c| c.receivers.iter().copied()).collect()
    }
}

fn greedy_cover(k: usize, cliques: &[ImplementableClique]) -> Vec<ImplementableClique> {
    let mut covered = vec![false; k];
    let mut out = Vec::new();
    for c in cliques {
        if c.receivers.iter().all(|&r| !covered[r]) {
            c.receivers.iter().for_each(|&r| covered[r] = true);
            out.push(c.clone());
        }
    }
    debug_assert!(covered.iter().all(|&c| c));
    out
}

struct Partition<'a> {
    by_receiver: Vec<Vec<&'a ImplementableClique>>,
    largest: usize,
    covered: Vec<bool>,
    uncovered: usize,
    current: Vec<&'a ImplementableClique>,
    best: Vec<ImplementableClique>,
    nodes: u64,
    cap: u64,
}

impl Partition<'_> {
    /// Returns false when the node cap is hit.
    fn search(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.cap {
            return false;
        }
        let Some(r) = self.covered.iter().position(|&c| !c) else {
            if self.current.len() < self.best.len() {
                self.best = self.current.iter().map(|c| (*c).clone()).collect();
            }
            return true;
        };
        if self.current.len() + self.uncovered.div_ceil(self.largest) >= self.best.len() {
            return true;
        }
        for i in 0..self.by_receiver[r].len() {
            let c = self.by_receiver[r][i];
            if c.receivers.iter().any(|&j| self.covered[j]) {
                continue;
            }
            c.receivers.iter().for_each(|&j| self.covered[j] = true);
            self.uncovered -= c.receivers.len();
            self.current.push(c);
            let ok = self.search();
            self.current.pop();
            self.uncovered += c.receivers.len();
            c.receivers.iter().for_each(|&j| self.covered[j] = false);
            if !ok {
                return false;
            }
        }
        true
    }
}

pub fn clique_cover_upper(inst: &Instance, mode: CoverMode) -> CliqueCover {
    clique_cover_upper_with_cap(inst, mode, DEFAULT_NODE_CAP)
}

pub fn clique_cover_upper_with_cap(inst: &Instance, mode: CoverMode, node_cap: u64) -> CliqueCover {
    let cliques = enumerate_implementable_cliques(inst);
    let greedy = greedy_cover(inst.k(), &cliques);
    let (chosen, exact, fell_back) = match mode {
        CoverMode::Greedy => (greedy, false, false),
        CoverMode::Exact => {
            let mut by_receiver = vec![Vec::new(); inst.k()];
            for c in &cliques {
                by_receiver[c.receivers[0]].push(c);
            }
            let mut p = Partition {
                by_receiver,
                largest: cliques.first().map_or(1, |c| c.receivers.len()),
                covered: vec![false; inst.k()],
                uncovered: inst.k(),
                current: Vec::new(),
                best: greedy.clone(),
                nodes: 0,
                cap: node_cap,
            };
            if p.search() {
                let mut best = p.best;
                best.sort_by(|a, b| a.receivers.cmp(&b.receivers));
                (best, true, false)
            } else {
                (greedy, false, true)
            }
        }
    };
    let mut cover = CliqueCover { cliques: chosen, exact, fell_back, certified: false };
    let code = cover.induced_code(inst);
    cover.certified = verify_code(&code, inst, VerifyMode::Both).map(|v| v.valid).unwrap_or(false)
        && code.lengths().iter().sum::<usize>() == cover.m();
    cover
}

/// Lower-bound witness: a vertex set forming a clique in the complement at
/// `sender`, and at every other sender either a full clique or absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplementCliqueWitness {
    pub vertices: Vec<usize>,
    pub sender: usize,
    /// Senders at which the clique is fully present in the complement.
    pub full_at: Vec<usize>,
    /// Senders at which no vertex of the clique has a self-loop.
    pub loopless_at: Vec<usize>,
}

/// Per-sender directed graphs of the complement hypergraph.
pub struct ComplementGraphs {
    k: usize,
    /// `arcs[n][a][b]`: `(a, b)` is an arc (or self-loop when `a == b`) of graph `n`.
    arcs: Vec<Vec<Vec<bool>>>,
}

impl ComplementGraphs {
    pub fn build(inst: &Instance) -> Self {
        let comp = SideInfoHypergraph::build(inst).complement();
        let (k, n) = (inst.k(), inst.n());
        let mut arcs = vec![vec![vec![false; k]; k]; n];
        for e in comp.edges() {
            debug_assert_ne!(e.class(), EdgeClass::Coupled);
            arcs[e.sender][e.receiver][e.message] = true;
        }
        Self { k, arcs }
    }

    pub fn has_arc(&self, n: usize, a: usize, b: usize) -> bool {
        self.arcs[n][a][b]
    }

    fn full(&self, n: usize, v: &[usize]) -> bool {
        v.iter().all(|&a| v.iter().all(|&b| self.arcs[n][a][b]))
    }

    fn loopless(&self, n: usize, v: &[usize]) -> bool {
        v.iter().all(|&a| !self.arcs[n][a][a])
    }

    fn qualifies(&self, v: &[usize]) -> bool {
        (0..self.arcs.len()).all(|n| self.full(n, v) || self.loopless(n, v))
    }
}

/// Largest qualifying complement clique; its size lower-bounds the
/// hyper-minrank.
pub fn complement_clique_lower(inst: &Instance) -> (usize, Option<ComplementCliqueWitness>) {
    let g = ComplementGraphs::build(inst);
    let mut best: Option<(Vec<usize>, usize)> = None;
    for n0 in 0..inst.n() {
        let pool: Vec<usize> = (0..g.k).filter(|&k| g.has_arc(n0, k, k)).collect();
        let mut current = Vec::new();
        grow(&g, n0, &pool, 0, &mut current, &mut best);
    }
    match best {
        None => (0, None),
        Some((vertices, sender)) => {
            let full_at = (0..inst.n()).filter(|&n| g.full(n, &vertices)).collect();
            let loopless_at = (0..inst.n()).filter(|&n| g.loopless(n, &vertices)).collect();
            (vertices.len(), Some(ComplementCliqueWitness { vertices, sender, full_at, loopless_at }))
        }
    }
}

fn grow(
    g: &ComplementGraphs,
    n0: usize,
    pool: &[usize],
    from: usize,
    current: &mut Vec<usize>,
    best: &mut Option<(Vec<usize>, usize)>,
) {
    for i in from..pool.len() {
        current.push(pool[i]);
        // qualification is hereditary, so failing sets need no extension
        if g.full(n0, current) && g.qualifies(current) {
            if best.as_ref().is_none_or(|b| current.len() > b.0.len()) {
                *best = Some((current.clone(), n0));
            }
            grow(g, n0, pool, i + 1, current, best);
        }
        current.pop();
    }
}

pub fn receiver_projection<'a>(edges: impl IntoIterator<Item = &'a HyperEdge>) -> BTreeSet<usize> {
    edges.into_iter().map(|e| e.receiver).collect()
}

/// Hypergraphic clique with odd sender-side degrees.
///
/// The receiver projection must be a clique with self-loops on the vertices
/// it touches; the sender pairs of coupled edges must form a complete graph
/// of even order; and at each sender of such a pair, the receiver pairs
/// incident to it must again form a clique with self-loops.
pub fn is_valid_clique(hg: &SideInfoHypergraph, edges: &[HyperEdge]) -> bool {
    if edges.is_empty() || !edges.iter().all(|e| hg.contains(e)) {
        return false;
    }
    let is_clique = |pairs: &BTreeSet<(usize, usize)>| {
        let vertices: BTreeSet<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        vertices.iter().all(|&a| vertices.iter().all(|&b| pairs.contains(&(a, b))))
    };
    let receiver_pairs: BTreeSet<(usize, usize)> = edges.iter().map(|e| (e.receiver, e.message)).collect();
    if !is_clique(&receiver_pairs) {
        return false;
    }
    let sender_pairs: BTreeSet<(usize, usize)> =
        edges.iter().filter(|e| e.sender != e.partner).map(|e| (e.sender, e.partner)).collect();
    let senders: BTreeSet<usize> = sender_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let complete = senders.iter().all(|&a| senders.iter().all(|&b| a >= b || sender_pairs.contains(&(a, b))));
    if !complete || !senders.len().is_multiple_of(2) {
        return false;
    }
    senders.iter().all(|&n| {
        let pairs: BTreeSet<(usize, usize)> = edges
            .iter()
            .filter(|e| e.sender == n || e.partner == n)
            .map(|e| (e.receiver, e.message))
            .collect();
        is_clique(&pairs)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(k: usize, n: usize, s: &[&[usize]], r: &[&[usize]]) -> Instance {
        Instance::from_one_based(k, n, s, r).unwrap()
    }

    fn ex1() -> Instance {
        inst(3, 3, &[&[1, 2], &[2, 3], &[1, 3]], &[&[2], &[3], &[1]])
    }

    fn ex2() -> Instance {
        inst(6, 3, &[&[1, 2, 3], &[3, 4, 5], &[1, 5, 6]], &[&[2, 3], &[1, 3], &[4, 5], &[3, 5, 6], &[3, 4], &[2]])
    }

    fn clique(r: &[usize], n: usize) -> ImplementableClique {
        ImplementableClique { receivers: r.iter().map(|x| x - 1).collect(), sender: n - 1 }
    }

    #[test]
    fn enumeration_examples() {
        let cs = enumerate_implementable_cliques(&ex2());
        assert!(cs.contains(&clique(&[1, 2], 1)));
        assert!(cs.contains(&clique(&[3, 4, 5], 2)));
        let c1 = enumerate_implementable_cliques(&ex1());
        assert!(!c1.iter().any(|c| c.receivers == vec![0, 1]));
        assert!(c1.iter().all(|c| c.receivers.len() == 1));
        assert_eq!(c1.len(), 3);
        assert!(cs.iter().all(|c| c.is_implementable(&ex2())));
    }

    #[test]
    fn exact_cover_examples() {
        let c2 = clique_cover_upper(&ex2(), CoverMode::Exact);
        assert_eq!(c2.m(), 3);
        assert_eq!(c2.cliques, vec![clique(&[1, 2], 1), clique(&[3, 4, 5], 2), clique(&[6], 3)]);
        assert!(c2.exact && c2.certified);

        let c1 = clique_cover_upper(&ex1(), CoverMode::Exact);
        assert_eq!(c1.m(), 3);

        let mutual = inst(2, 1, &[&[1, 2]], &[&[2], &[1]]);
        assert_eq!(clique_cover_upper(&mutual, CoverMode::Exact).m(), 1);
    }

    #[test]
    fn greedy_dominates_exact() {
        for seed in 0..40 {
            let i = Instance::generate_random(6, 3, 0.5, 4, seed).unwrap();
            let e = clique_cover_upper(&i, CoverMode::Exact);
            let g = clique_cover_upper(&i, CoverMode::Greedy);
            assert!(g.m() >= e.m());
            assert!(e.certified && g.certified);
            assert_eq!(e.receivers().len(), 6);
        }
    }

    #[test]
    fn node_cap_falls_back_to_greedy() {
        let c = clique_cover_upper_with_cap(&ex2(), CoverMode::Exact, 1);
        assert!(c.fell_back && !c.exact);
        assert_eq!(c.m(), clique_cover_upper(&ex2(), CoverMode::Greedy).m());
    }

    #[test]
    fn lower_bound_examples() {
        let (v, w) = complement_clique_lower(&inst(2, 1, &[&[1, 2]], &[&[], &[]]));
        assert_eq!(v, 2);
        assert_eq!(w.unwrap().vertices, vec![0, 1]);
        let (v1, _) = complement_clique_lower(&ex1());
        assert!((1..=2).contains(&v1));
        let (v2, _) = complement_clique_lower(&ex2());
        assert!(v2 <= 3);
    }

    #[test]
    fn projection_examples() {
        let cover = clique_cover_upper(&ex2(), CoverMode::Exact);
        let union: Vec<HyperEdge> = cover.cliques.iter().flat_map(|c| c.edges()).collect();
        assert_eq!(receiver_projection(&union), (0..6).collect());
        assert!(receiver_projection(&[]).is_empty());
        assert_eq!(receiver_projection(&[HyperEdge::coupled(1, 4, 0, 2)]), BTreeSet::from([1]));
    }

    #[test]
    fn valid_clique_parity() {
        let i = inst(2, 3, &[&[1, 2], &[1, 2], &[1, 2]], &[&[], &[]]);
        let hg = SideInfoHypergraph::build(&i);
        let mut two = Vec::new();
        for n in [0, 1] {
            two.push(HyperEdge::demand(0, n));
            two.push(HyperEdge::demand(1, n));
        }
        two.push(HyperEdge::coupled(0, 1, 0, 1));
        two.push(HyperEdge::coupled(1, 0, 0, 1));
        assert!(is_valid_clique(&hg, &two));

        let mut three = two.clone();
        for (a, b) in [(0, 2), (1, 2)] {
            three.push(HyperEdge::coupled(0, 1, a, b));
            three.push(HyperEdge::coupled(1, 0, a, b));
        }
        three.push(HyperEdge::demand(0, 2));
        three.push(HyperEdge::demand(1, 2));
        assert!(!is_valid_clique(&hg, &three));

        let single = clique(&[1, 2], 1);
        let m = inst(2, 1, &[&[1, 2]], &[&[2], &[1]]);
        assert!(is_valid_clique(&SideInfoHypergraph::build(&m), &single.edges()));
    }
}
