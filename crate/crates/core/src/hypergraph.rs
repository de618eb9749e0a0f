//! The directed side-information hypergraph, composite adjacency matrices,
//! sub-hypergraph choices, fitting and the complement hypergraph.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::gf2::BitMatrix;
use crate::instance::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeClass {
    Demand,
    Cached,
    Coupled,
}

/// A 4-tuple hyperedge `(receiver, message, sender, partner)`, 0-based.
///
/// Coupled edges are stored with `sender < partner`; the sender pair is
/// unordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HyperEdge {
    pub receiver: usize,
    pub message: usize,
    pub sender: usize,
    pub partner: usize,
}

impl HyperEdge {
    pub fn demand(k: usize, n: usize) -> Self {
        Self { receiver: k, message: k, sender: n, partner: n }
    }

    pub fn cached(k: usize, message: usize, n: usize) -> Self {
        Self { receiver: k, message, sender: n, partner: n }
    }

    /// Canonicalises the sender pair.
    pub fn coupled(k: usize, message: usize, n: usize, n2: usize) -> Self {
        Self { receiver: k, message, sender: n.min(n2), partner: n.max(n2) }
    }

    pub fn class(&self) -> EdgeClass {
        if self.sender != self.partner {
            EdgeClass::Coupled
        } else if self.receiver == self.message {
            EdgeClass::Demand
        } else {
            EdgeClass::Cached
        }
    }

    pub fn canonical(self) -> Self {
        Self { sender: self.sender.min(self.partner), partner: self.sender.max(self.partner), ..self }
    }
}

impl fmt::Display for HyperEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.receiver + 1, self.message + 1, self.sender + 1, self.partner + 1)
    }
}

/// Side-information hypergraph of an instance, or a coupled-free complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideInfoHypergraph {
    instance: Instance,
    demand: BTreeSet<HyperEdge>,
    cached: BTreeSet<HyperEdge>,
    coupled: BTreeSet<HyperEdge>,
}

impl SideInfoHypergraph {
    pub fn build(inst: &Instance) -> Self {
        let mut demand = BTreeSet::new();
        let mut cached = BTreeSet::new();
        let mut coupled = BTreeSet::new();
        for k in 0..inst.k() {
            for n in 0..inst.n() {
                if inst.sender_has(n, k) {
                    demand.insert(HyperEdge::demand(k, n));
                }
                for &j in inst.side_info(k) {
                    if inst.sender_has(n, j) {
                        cached.insert(HyperEdge::cached(k, j, n));
                    }
                }
            }
            for m in (0..inst.k()).filter(|&m| m != k && !inst.receiver_knows(k, m)) {
                let holders = inst.availability(m);
                for (i, &a) in holders.iter().enumerate() {
                    for &b in &holders[i + 1..] {
                        coupled.insert(HyperEdge::coupled(k, m, a, b));
                    }
                }
            }
        }
        Self { instance: inst.clone(), demand, cached, coupled }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn demand_edges(&self) -> &BTreeSet<HyperEdge> {
        &self.demand
    }

    pub fn cached_edges(&self) -> &BTreeSet<HyperEdge> {
        &self.cached
    }

    pub fn coupled_edges(&self) -> &BTreeSet<HyperEdge> {
        &self.coupled
    }

    pub fn edge_count(&self) -> usize {
        self.demand.len() + self.cached.len() + self.coupled.len()
    }

    pub fn contains(&self, e: &HyperEdge) -> bool {
        let e = e.canonical();
        match e.class() {
            EdgeClass::Demand => self.demand.contains(&e),
            EdgeClass::Cached => self.cached.contains(&e),
            EdgeClass::Coupled => self.coupled.contains(&e),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = &HyperEdge> {
        self.demand.iter().chain(&self.cached).chain(&self.coupled)
    }

    /// Edges whose starting vertex is receiver `k`.
    pub fn edges_from(&self, k: usize) -> impl Iterator<Item = &HyperEdge> {
        self.edges().filter(move |e| e.receiver == k)
    }

    /// Senders `n` with some coupled edge `(k, message, n, .)`.
    pub fn coupled_senders(&self, k: usize, message: usize) -> Vec<usize> {
        let mut out: BTreeSet<usize> = BTreeSet::new();
        for e in self.coupled.iter().filter(|e| e.receiver == k && e.message == message) {
            out.insert(e.sender);
            out.insert(e.partner);
        }
        out.into_iter().collect()
    }

    /// Composite adjacency matrix of the whole hypergraph.
    ///
    /// Demand and cached edges set their entry; otherwise an entry is the
    /// parity of the coupled edges through that sender.
    pub fn adjacency(&self) -> CompositeAdjacency {
        let (k, n) = (self.instance.k(), self.instance.n());
        let mut a = CompositeAdjacency::zeros(k, n);
        for e in self.demand.iter().chain(&self.cached) {
            a.set(e.receiver, e.message, e.sender, true);
        }
        for e in &self.coupled {
            a.toggle(e.receiver, e.message, e.sender);
            a.toggle(e.receiver, e.message, e.partner);
        }
        a
    }

    /// Complement hypergraph: demand edges copied; for `k != k'` the edge
    /// `(k,k',n,n)` is present iff no edge of this hypergraph serves the pair
    /// `(k,k')` through sender `n`. Never contains coupled edges.
    pub fn complement(&self) -> SideInfoHypergraph {
        let inst = &self.instance;
        let mut cached = BTreeSet::new();
        for k in 0..inst.k() {
            for m in (0..inst.k()).filter(|&m| m != k) {
                let coupled = self.coupled_senders(k, m);
                for n in 0..inst.n() {
                    let served = self.cached.contains(&HyperEdge::cached(k, m, n)) || coupled.contains(&n);
                    if !served {
                        cached.insert(HyperEdge::cached(k, m, n));
                    }
                }
            }
        }
        SideInfoHypergraph { instance: inst.clone(), demand: self.demand.clone(), cached, coupled: BTreeSet::new() }
    }

    /// Valid sub-hypergraph test: `edges` lie in this hypergraph and every
    /// receiver appears in an odd number of its demand edges.
    pub fn is_valid_sub<'a>(&self, edges: impl IntoIterator<Item = &'a HyperEdge>) -> bool {
        let mut parity = vec![false; self.instance.k()];
        for e in edges {
            if !self.contains(e) {
                return false;
            }
            if e.class() == EdgeClass::Demand {
                parity[e.receiver] ^= true;
            }
        }
        parity.into_iter().all(|p| p)
    }

    /// Decides whether `a` fits this hypergraph; returns the witness choice.
    pub fn fits(&self, a: &CompositeAdjacency) -> Option<SubChoice> {
        let inst = &self.instance;
        let (kk, nn) = (inst.k(), inst.n());
        if a.k() != kk || a.n() != nn {
            return None;
        }
        let mut receivers = Vec::with_capacity(kk);
        for k in 0..kk {
            let mut rc = ReceiverChoice::default();
            let mut coupled: Vec<Vec<usize>> = vec![Vec::new(); kk];
            for n in 0..nn {
                for m in a.block(n).row(k).ones() {
                    if !inst.sender_has(n, m) {
                        return None;
                    }
                    if m == k {
                        rc.demand.push(n);
                    } else if inst.receiver_knows(k, m) {
                        rc.cached.push((m, n));
                    } else if inst.availability(m).len() >= 2 {
                        coupled[m].push(n);
                    } else {
                        return None;
                    }
                }
            }
            if rc.demand.len() % 2 != 1 {
                return None;
            }
            for (m, senders) in coupled.into_iter().enumerate() {
                if senders.len() % 2 != 0 {
                    return None;
                }
                if !senders.is_empty() {
                    rc.coupled.push((m, senders));
                }
            }
            rc.cached.sort_unstable();
            receivers.push(rc);
        }
        Some(SubChoice { receivers })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChoiceError {
    #[error("receiver {receiver}: {count} demand edges selected, an odd number is required")]
    DemandParity { receiver: usize, count: usize },
    #[error("receiver {receiver}, message {message}: {count} coupled senders selected, an even number is required")]
    CoupledParity { receiver: usize, message: usize, count: usize },
    #[error("receiver {receiver}: selected edge {edge} is not in the hypergraph")]
    NotInHypergraph { receiver: usize, edge: String },
    #[error("choice covers {found} receivers, instance has {expected}")]
    WrongReceiverCount { expected: usize, found: usize },
}

/// Selected sub-hypergraph edges of one receiver.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ReceiverChoice {
    /// Senders of the selected demand edges, ascending.
    pub demand: Vec<usize>,
    /// Selected cached edges as `(message, sender)`, ascending.
    pub cached: Vec<(usize, usize)>,
    /// Per uncached message, the even set of senders carrying a coupled 1.
    pub coupled: Vec<(usize, Vec<usize>)>,
}

/// A valid sub-hypergraph given as per-receiver edge selections. Coupled
/// edges are represented by their per-sender parity only.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SubChoice {
    pub receivers: Vec<ReceiverChoice>,
}

impl SubChoice {
    /// Checks the parity and membership contracts against `inst`.
    pub fn check(&self, inst: &Instance) -> Result<(), ChoiceError> {
        if self.receivers.len() != inst.k() {
            return Err(ChoiceError::WrongReceiverCount { expected: inst.k(), found: self.receivers.len() });
        }
        for (k, rc) in self.receivers.iter().enumerate() {
            if rc.demand.len() % 2 != 1 {
                return Err(ChoiceError::DemandParity { receiver: k + 1, count: rc.demand.len() });
            }
            for &n in &rc.demand {
                if n >= inst.n() || !inst.sender_has(n, k) {
                    return Err(ChoiceError::NotInHypergraph {
                        receiver: k + 1,
                        edge: HyperEdge::demand(k, n).to_string(),
                    });
                }
            }
            for &(m, n) in &rc.cached {
                if m >= inst.k() || n >= inst.n() || !inst.receiver_knows(k, m) || !inst.sender_has(n, m) {
                    return Err(ChoiceError::NotInHypergraph {
                        receiver: k + 1,
                        edge: HyperEdge::cached(k, m, n).to_string(),
                    });
                }
            }
            for (m, senders) in &rc.coupled {
                let m = *m;
                if senders.len() % 2 != 0 {
                    return Err(ChoiceError::CoupledParity { receiver: k + 1, message: m + 1, count: senders.len() });
                }
                let holders = inst.availability(m);
                let uncached = m < inst.k() && m != k && !inst.receiver_knows(k, m);
                for &n in senders {
                    if !uncached || holders.len() < 2 || !holders.contains(&n) {
                        return Err(ChoiceError::NotInHypergraph {
                            receiver: k + 1,
                            edge: format!("coupled ({},{},{},*)", k + 1, m + 1, n + 1),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Composite adjacency matrix of this choice.
    pub fn adjacency(&self, inst: &Instance) -> Result<CompositeAdjacency, ChoiceError> {
        self.check(inst)?;
        let mut a = CompositeAdjacency::zeros(inst.k(), inst.n());
        for (k, rc) in self.receivers.iter().enumerate() {
            for &n in &rc.demand {
                a.set(k, k, n, true);
            }
            for &(m, n) in &rc.cached {
                a.set(k, m, n, true);
            }
            for (m, senders) in &rc.coupled {
                for &n in senders {
                    a.set(k, *m, n, true);
                }
            }
        }
        Ok(a)
    }

    /// An explicit edge set realising this choice: each even coupled sender
    /// set is paired up in ascending order.
    pub fn edges(&self) -> Vec<HyperEdge> {
        let mut out = Vec::new();
        for (k, rc) in self.receivers.iter().enumerate() {
            out.extend(rc.demand.iter().map(|&n| HyperEdge::demand(k, n)));
            out.extend(rc.cached.iter().map(|&(m, n)| HyperEdge::cached(k, m, n)));
            for (m, senders) in &rc.coupled {
                for pair in senders.chunks(2) {
                    out.push(HyperEdge::coupled(k, *m, pair[0], pair[1]));
                }
            }
        }
        out
    }
}

/// The `K x KN` matrix `[A_1 ... A_N]`, stored as `N` blocks of `K x K`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CompositeAdjacency {
    k: usize,
    blocks: Vec<BitMatrix>,
}

impl CompositeAdjacency {
    pub fn zeros(k: usize, n: usize) -> Self {
        Self { k, blocks: vec![BitMatrix::zeros(k, k); n] }
    }

    pub fn from_blocks(blocks: Vec<BitMatrix>) -> Self {
        let k = blocks.first().map_or(0, BitMatrix::nrows);
        assert!(blocks.iter().all(|b| b.nrows() == k && b.ncols() == k), "blocks must be K x K");
        Self { k, blocks }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, n: usize) -> &BitMatrix {
        &self.blocks[n]
    }

    pub fn blocks(&self) -> &[BitMatrix] {
        &self.blocks
    }

    /// Entry at row `k`, column `(message, sender)`.
    pub fn get(&self, k: usize, message: usize, sender: usize) -> bool {
        self.blocks[sender].get(k, message)
    }

    pub fn set(&mut self, k: usize, message: usize, sender: usize, value: bool) {
        self.blocks[sender].set(k, message, value);
    }

    pub fn toggle(&mut self, k: usize, message: usize, sender: usize) {
        let v = self.get(k, message, sender);
        self.set(k, message, sender, !v);
    }

    pub fn sum_rank(&self) -> usize {
        self.blocks.iter().map(BitMatrix::rank).sum()
    }

    /// Every 1 lies in a column whose message the sender stores.
    pub fn respects_support(&self, inst: &Instance) -> bool {
        self.blocks.iter().enumerate().all(|(n, b)| b.rows().iter().all(|r| r.ones().all(|m| inst.sender_has(n, m))))
    }

    /// Row-major 0/1 rows of the full `K x KN` matrix.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.k)
            .map(|r| self.blocks.iter().flat_map(|b| b.row(r).to_bits()).collect())
            .collect()
    }
}

impl fmt::Debug for CompositeAdjacency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CompositeAdjacency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.k {
            write!(f, "{:>3} |", r + 1)?;
            for b in &self.blocks {
                for c in 0..self.k {
                    write!(f, " {}", b.get(r, c) as u8)?;
                }
                write!(f, " |")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
