//! Multi-sender index-coding instances: model, validation, file format and
//! random generators.
//!
//! Internally every index is 0-based. The JSON file format is 1-based:
//!
//! ```text
//! {"K": 3, "N": 3, "senders": [[1,2],[2,3],[1,3]], "receivers": [[2],[3],[1]]}
//! ```

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

/// A validated instance. Sets are sorted, duplicate-free and 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    k: usize,
    n: usize,
    sender_stores: Vec<Vec<usize>>,
    side_info: Vec<Vec<usize>>,
}

/// One reason an instance is rejected. Indices are reported 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ZeroReceivers,
    ZeroSenders,
    /// `field` holds `found` sets but `expected` were declared.
    CountMismatch { field: &'static str, expected: usize, found: usize },
    IndexOutOfRange { field: &'static str, set: usize, index: i64 },
    Duplicate { field: &'static str, set: usize, index: usize },
    /// Receiver `k` lists its own demand as side information.
    SelfKnowledge { receiver: usize },
    /// No sender stores message `m`.
    StoredNowhere { message: usize },
}

impl Violation {
    /// Whether this violation is an infeasibility of an otherwise well-formed
    /// instance rather than a malformed one.
    pub fn is_infeasibility(&self) -> bool {
        matches!(self, Violation::StoredNowhere { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroReceivers => write!(f, "K must be at least 1"),
            Violation::ZeroSenders => write!(f, "N must be at least 1"),
            Violation::CountMismatch { field, expected, found } => {
                write!(f, "`{field}` has {found} sets, expected {expected}")
            }
            Violation::IndexOutOfRange { field, set, index } => {
                write!(f, "`{field}` set {set} contains {index}, outside 1..=K")
            }
            Violation::Duplicate { field, set, index } => {
                write!(f, "`{field}` set {set} lists {index} more than once")
            }
            Violation::SelfKnowledge { receiver } => {
                write!(f, "receiver {receiver} has its own message in its side information")
            }
            Violation::StoredNowhere { message } => write!(f, "message {message} is stored at no sender"),
        }
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParameters(String),
    #[error("no feasible embedded instance found for K={k} after {attempts} draws")]
    EmbeddedInfeasible { k: usize, attempts: usize },
}

impl InstanceError {
    /// True when every reported violation is an infeasibility.
    pub fn is_infeasibility(&self) -> bool {
        match self {
            InstanceError::Invalid(v) => !v.is_empty() && v.iter().all(Violation::is_infeasibility),
            InstanceError::InfeasibleParameters(_) | InstanceError::EmbeddedInfeasible { .. } => true,
            InstanceError::Parse { .. } => false,
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Raw file contents, before validation. 1-based.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    #[serde(rename = "K")]
    pub k: i64,
    #[serde(rename = "N")]
    pub n: i64,
    pub senders: Vec<Vec<i64>>,
    pub receivers: Vec<Vec<i64>>,
}

impl RawInstance {
    /// Checks every model constraint and reports all violations at once.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.k < 1 {
            out.push(Violation::ZeroReceivers);
        }
        if self.n < 1 {
            out.push(Violation::ZeroSenders);
        }
        if self.senders.len() as i64 != self.n.max(0) {
            out.push(Violation::CountMismatch {
                field: "senders",
                expected: self.n.max(0) as usize,
                found: self.senders.len(),
            });
        }
        if self.receivers.len() as i64 != self.k.max(0) {
            out.push(Violation::CountMismatch {
                field: "receivers",
                expected: self.k.max(0) as usize,
                found: self.receivers.len(),
            });
        }
        let k = self.k.max(0);
        let check_sets = |field: &'static str, sets: &[Vec<i64>], out: &mut Vec<Violation>| {
            for (s, set) in sets.iter().enumerate() {
                let mut seen = std::collections::BTreeSet::new();
                for &idx in set {
                    if idx < 1 || idx > k {
                        out.push(Violation::IndexOutOfRange { field, set: s + 1, index: idx });
                    } else if !seen.insert(idx) {
                        out.push(Violation::Duplicate { field, set: s + 1, index: idx as usize });
                    }
                }
            }
        };
        check_sets("senders", &self.senders, &mut out);
        check_sets("receivers", &self.receivers, &mut out);
        for (r, set) in self.receivers.iter().enumerate() {
            if set.contains(&(r as i64 + 1)) {
                out.push(Violation::SelfKnowledge { receiver: r + 1 });
            }
        }
        if out.is_empty() {
            for m in 1..=k {
                if !self.senders.iter().any(|s| s.contains(&m)) {
                    out.push(Violation::StoredNowhere { message: m as usize });
                }
            }
        }
        out
    }

    pub fn into_instance(self) -> Result<Instance, InstanceError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(InstanceError::Invalid(violations));
        }
        let to_sets = |sets: Vec<Vec<i64>>| -> Vec<Vec<usize>> {
            sets.into_iter()
                .map(|s| {
                    let mut v: Vec<usize> = s.into_iter().map(|i| (i - 1) as usize).collect();
                    v.sort_unstable();
                    v
                })
                .collect()
        };
        Ok(Instance {
            k: self.k as usize,
            n: self.n as usize,
            sender_stores: to_sets(self.senders),
            side_info: to_sets(self.receivers),
        })
    }
}

impl Instance {
    /// Builds and validates an instance from 0-based sets.
    pub fn new(k: usize, n: usize, sender_stores: Vec<Vec<usize>>, side_info: Vec<Vec<usize>>) -> Result<Self, InstanceError> {
        let shift = |sets: Vec<Vec<usize>>| sets.into_iter().map(|s| s.into_iter().map(|i| i as i64 + 1).collect()).collect();
        RawInstance { k: k as i64, n: n as i64, senders: shift(sender_stores), receivers: shift(side_info) }.into_instance()
    }

    /// Builds an instance from 1-based sets, as written in instance files.
    pub fn from_one_based(k: usize, n: usize, senders: &[&[usize]], receivers: &[&[usize]]) -> Result<Self, InstanceError> {
        let conv = |sets: &[&[usize]]| sets.iter().map(|s| s.iter().map(|&i| i as i64).collect()).collect();
        RawInstance { k: k as i64, n: n as i64, senders: conv(senders), receivers: conv(receivers) }.into_instance()
    }

    /// Number of receivers (= messages).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of senders.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Messages stored at `sender` (sorted).
    pub fn store(&self, sender: usize) -> &[usize] {
        &self.sender_stores[sender]
    }

    pub fn stores(&self) -> &[Vec<usize>] {
        &self.sender_stores
    }

    /// Side information of `receiver` (sorted).
    pub fn side_info(&self, receiver: usize) -> &[usize] {
        &self.side_info[receiver]
    }

    pub fn side_infos(&self) -> &[Vec<usize>] {
        &self.side_info
    }

    pub fn sender_has(&self, sender: usize, message: usize) -> bool {
        self.sender_stores[sender].binary_search(&message).is_ok()
    }

    pub fn receiver_knows(&self, receiver: usize, message: usize) -> bool {
        self.side_info[receiver].binary_search(&message).is_ok()
    }

    /// Senders storing `message`, ascending.
    pub fn availability(&self, message: usize) -> Vec<usize> {
        (0..self.n).filter(|&s| self.sender_has(s, message)).collect()
    }

    /// Embedded index coding: `K == N` and every node stores its side information.
    pub fn is_embedded(&self) -> bool {
        self.k == self.n && self.sender_stores == self.side_info
    }

    /// A copy with `message` added to the side information of `receiver`.
    pub fn with_added_side_info(&self, receiver: usize, message: usize) -> Result<Instance, InstanceError> {
        let mut side = self.side_info.clone();
        if !side[receiver].contains(&message) {
            side[receiver].push(message);
        }
        Instance::new(self.k, self.n, self.sender_stores.clone(), side)
    }

    pub fn derive_stats(&self) -> DerivedStats {
        let availability: Vec<Vec<usize>> = (0..self.k).map(|m| self.availability(m)).collect();
        let degrees: Vec<usize> = availability.iter().map(Vec::len).collect();
        let replicated = (0..self.k).filter(|&m| degrees[m] >= 2).collect();
        let total_load: usize = self.sender_stores.iter().map(Vec::len).sum();
        assert_eq!(degrees.iter().sum::<usize>(), total_load, "double counting identity violated");
        let max_side_info = self.side_info.iter().map(Vec::len).max().unwrap_or(0);
        DerivedStats { availability, degrees, replicated, total_load, max_side_info, k: self.k }
    }

    pub fn parse(text: &str) -> Result<Instance, InstanceError> {
        let raw: RawInstance = serde_json::from_str(text)
            .map_err(|e| InstanceError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        raw.into_instance()
    }

    /// Canonical single-line JSON, 1-based, sets ascending.
    pub fn serialize(&self) -> String {
        let sets = |v: &[Vec<usize>]| {
            let inner: Vec<String> = v
                .iter()
                .map(|s| format!("[{}]", s.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")))
                .collect();
            format!("[{}]", inner.join(","))
        };
        format!(
            "{{\"K\": {}, \"N\": {}, \"senders\": {}, \"receivers\": {}}}",
            self.k,
            self.n,
            sets(&self.sender_stores),
            sets(&self.side_info)
        )
    }

    /// Random instance with `sum |M_n| <= floor((1+delta) K)` and `|R(k)| <= r0`.
    ///
    /// Each message is first placed at one uniformly chosen sender; the
    /// remaining load budget is spent on extra replicas. Side-information
    /// sizes are uniform on `0..=r0`.
    pub fn generate_random(k: usize, n: usize, delta: f64, r0: usize, seed: u64) -> Result<Instance, InstanceError> {
        if k == 0 || n == 0 {
            return Err(InstanceError::InfeasibleParameters("K and N must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(InstanceError::InfeasibleParameters(format!(
                "load budget (1+delta)K with delta={delta} cannot store all {k} messages within the allowed range 0 <= delta < 1"
            )));
        }
        if r0 >= k {
            return Err(InstanceError::InfeasibleParameters(format!("r0={r0} must be smaller than K={k}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = (((1.0 + delta) * k as f64) + 1e-9).floor() as usize;
        let mut stores = vec![Vec::new(); n];
        for m in 0..k {
            stores[rng.gen_range(0..n)].push(m);
        }
        let max_extra = budget.saturating_sub(k).min(k * n - k);
        let extra = if max_extra == 0 { 0 } else { rng.gen_range(0..=max_extra) };
        let mut free: Vec<(usize, usize)> =
            (0..n).flat_map(|s| (0..k).map(move |m| (s, m))).filter(|&(s, m)| !stores[s].contains(&m)).collect();
        free.shuffle(&mut rng);
        for &(s, m) in free.iter().take(extra) {
            stores[s].push(m);
        }
        let side = (0..k)
            .map(|r| {
                let size = rng.gen_range(0..=r0);
                let mut others: Vec<usize> = (0..k).filter(|&j| j != r).collect();
                others.shuffle(&mut rng);
                others.truncate(size);
                others
            })
            .collect();
        for s in &mut stores {
            s.sort_unstable();
        }
        Instance::new(k, n, stores, side)
    }

    /// Random embedded instance: `N = K`, `M_n = R(n)`, each off-diagonal
    /// membership drawn with probability 1/2, redrawn until every message is
    /// stored somewhere.
    pub fn generate_embedded(k: usize, seed: u64) -> Result<Instance, InstanceError> {
        const ATTEMPTS: usize = 1000;
        if k <= 1 {
            // R(1) is necessarily empty, so message 1 is stored nowhere.
            return Err(InstanceError::InfeasibleParameters(format!(
                "an embedded instance needs K >= 2, got K = {k}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..ATTEMPTS {
            let side: Vec<Vec<usize>> =
                (0..k).map(|r| (0..k).filter(|&j| j != r && rng.gen_bool(0.5)).collect()).collect();
            if let Ok(inst) = Instance::new(k, k, side.clone(), side) {
                return Ok(inst);
            }
        }
        Err(InstanceError::EmbeddedInfeasible { k, attempts: ATTEMPTS })
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Replication and load statistics of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedStats {
    /// `M(m)`: senders storing message `m`.
    pub availability: Vec<Vec<usize>>,
    /// `d_m = |M(m)|`.
    pub degrees: Vec<usize>,
    /// Messages stored at two or more senders.
    pub replicated: Vec<usize>,
    /// `S = sum_n |M_n|`.
    pub total_load: usize,
    /// `r0 = max_k |R(k)|`.
    pub max_side_info: usize,
    k: usize,
}

impl DerivedStats {
    /// Replication surplus `delta = S/K - 1` as a reduced-free pair `(S - K, K)`.
    pub fn delta_fraction(&self) -> (i64, i64) {
        (self.total_load as i64 - self.k as i64, self.k as i64)
    }

    pub fn delta(&self) -> f64 {
        let (num, den) = self.delta_fraction();
        num as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex1() -> Instance {
        Instance::from_one_based(3, 3, &[&[1, 2], &[2, 3], &[1, 3]], &[&[2], &[3], &[1]]).unwrap()
    }

    #[test]
    fn ex1_validates() {
        let inst = ex1();
        assert_eq!(inst.k(), 3);
        assert_eq!(inst.store(0), &[0, 1]);
    }

    #[test]
    fn stored_nowhere_is_reported() {
        let err = Instance::from_one_based(2, 1, &[&[1]], &[&[], &[1]]).unwrap_err();
        match err {
            InstanceError::Invalid(v) => assert_eq!(v, vec![Violation::StoredNowhere { message: 2 }]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn self_knowledge_is_rejected() {
        let err = Instance::from_one_based(2, 1, &[&[1, 2]], &[&[1], &[]]).unwrap_err();
        match err {
            InstanceError::Invalid(v) => assert!(v.contains(&Violation::SelfKnowledge { receiver: 1 })),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn derive_stats_examples() {
        let ex3 = Instance::from_one_based(3, 2, &[&[1, 2], &[2, 3]], &[&[2], &[1], &[2]]).unwrap();
        let st = ex3.derive_stats();
        assert_eq!(st.degrees, vec![1, 2, 1]);
        assert_eq!(st.replicated, vec![1]);
        assert_eq!(st.total_load, 4);

        let st = ex1().derive_stats();
        assert_eq!(st.degrees, vec![2, 2, 2]);
        assert_eq!(st.replicated, vec![0, 1, 2]);
        assert_eq!(st.total_load, 6);

        let single = Instance::from_one_based(4, 1, &[&[1, 2, 3, 4]], &[&[], &[], &[], &[]]).unwrap();
        let st = single.derive_stats();
        assert_eq!(st.degrees, vec![1; 4]);
        assert!(st.replicated.is_empty());
        assert_eq!(st.total_load, 4);
    }

    #[test]
    fn parse_ex1_file() {
        let text = r#"{"K": 3, "N": 3, "senders": [[1,2],[2,3],[1,3]], "receivers": [[2],[3],[1]]}"#;
        assert_eq!(Instance::parse(text).unwrap(), ex1());
        assert_eq!(ex1().serialize(), text);
    }

    #[test]
    fn parse_rejects_unknown_field() {
        let text = r#"{"K": 1, "N": 1, "sendres": [[1]], "receivers": [[]]}"#;
        assert!(matches!(Instance::parse(text), Err(InstanceError::Parse { .. })));
    }

    #[test]
    fn parse_reports_location() {
        let text = "{\"K\": 1,\n \"N\": x}";
        match Instance::parse(text) {
            Err(InstanceError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sender_index_zero_is_a_validation_error() {
        let text = r#"{"K": 1, "N": 1, "senders": [[0]], "receivers": [[]]}"#;
        match Instance::parse(text) {
            Err(InstanceError::Invalid(v)) => {
                assert!(v.iter().any(|x| matches!(x, Violation::IndexOutOfRange { index: 0, .. })))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicates_are_rejected() {
        let text = r#"{"K": 2, "N": 1, "senders": [[1,1,2]], "receivers": [[],[]]}"#;
        assert!(matches!(Instance::parse(text), Err(InstanceError::Invalid(_))));
    }

    #[test]
    fn unsorted_sets_are_canonicalised() {
        let text = r#"{"K": 2, "N": 1, "senders": [[2,1]], "receivers": [[],[]]}"#;
        assert_eq!(Instance::parse(text).unwrap().store(0), &[0, 1]);
    }

    #[test]
    fn generate_random_examples() {
        let inst = Instance::generate_random(4, 2, 0.0, 1, 7).unwrap();
        assert_eq!(inst.derive_stats().total_load, 4);
        assert!(inst.side_infos().iter().all(|r| r.len() <= 1));

        let forced = Instance::generate_random(1, 1, 0.0, 0, 0).unwrap();
        assert_eq!(forced, Instance::from_one_based(1, 1, &[&[1]], &[&[]]).unwrap());

        let inst = Instance::generate_random(2, 1, 0.9, 0, 1).unwrap();
        assert!(inst.derive_stats().total_load <= 3);
    }

    #[test]
    fn generate_random_rejects_bad_parameters() {
        assert!(Instance::generate_random(3, 2, -0.1, 0, 0).is_err());
        assert!(Instance::generate_random(3, 2, 1.0, 0, 0).is_err());
        assert!(Instance::generate_random(3, 2, 0.0, 3, 0).is_err());
        assert!(Instance::generate_random(0, 2, 0.0, 0, 0).is_err());
    }

    #[test]
    fn generate_embedded_examples() {
        for seed in 0..20 {
            let inst = Instance::generate_embedded(4, seed).unwrap();
            assert!(inst.is_embedded());
        }
        assert!(matches!(Instance::generate_embedded(1, 3), Err(InstanceError::InfeasibleParameters(_))));
    }

    #[test]
    fn generate_embedded_seed_pinned_three_cycle() {
        // seed found by scanning; pins the generator's draw order
        let inst = Instance::generate_embedded(3, EMBEDDED_CYCLE_SEED).unwrap();
        let expected = Instance::from_one_based(3, 3, &[&[2], &[3], &[1]], &[&[2], &[3], &[1]]).unwrap();
        assert_eq!(inst, expected);
    }

    const EMBEDDED_CYCLE_SEED: u64 = 47;

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..=6, 1usize..=4, 0.0f64..0.99, any::<u64>()).prop_flat_map(|(k, n, delta, seed)| {
            (0..k).prop_map(move |r0| Instance::generate_random(k, n, delta, r0, seed).unwrap())
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(inst in arb_instance()) {
            prop_assert_eq!(Instance::parse(&inst.serialize()).unwrap(), inst);
        }

        #[test]
        fn generated_instances_respect_budget(k in 1usize..=8, n in 1usize..=4, delta in 0.0f64..0.99, seed in any::<u64>(), r0s in any::<usize>()) {
            let r0 = r0s % k;
            let inst = Instance::generate_random(k, n, delta, r0, seed).unwrap();
            let st = inst.derive_stats();
            prop_assert!(st.total_load as f64 <= (1.0 + delta) * k as f64 + 1e-9);
            prop_assert!(st.max_side_info <= r0);
            prop_assert_eq!(st.degrees.iter().sum::<usize>(), st.total_load);
            prop_assert_eq!(Instance::generate_random(k, n, delta, r0, seed).unwrap(), inst);
        }
    }
}
