//! Linear multi-sender index codes: construction from a fitting, recovery of
//! a fitting from a code, decode plans and verification.
//!
//! Code files are JSON, one list of 0/1 vectors per sender:
//!
//! ```text
//! {"code": [[[1,1,0]],[[0,1,1]],[]]}
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{express_in_span, in_span_with_side_info, BitMatrix, BitVector};
use crate::hypergraph::{CompositeAdjacency, SideInfoHypergraph};
use crate::instance::Instance;

pub const SIMULATION_SEED: u64 = 0xC0DE;
pub const SIMULATION_SAMPLES: usize = 10_000;
pub const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid code file: {0}")]
    Parse(String),
    #[error("code has {found} senders, instance has {expected}")]
    SenderCount { expected: usize, found: usize },
    #[error("sender {sender}, vector {index}: length {found}, expected {expected}")]
    VectorLength { sender: usize, index: usize, expected: usize, found: usize },
    #[error("sender {sender}, vector {index}: entry {value} is not 0 or 1")]
    NotBinary { sender: usize, index: usize, value: u64 },
    #[error("sender {sender}, vector {index}: uses message {message}, which the sender does not store")]
    SupportViolation { sender: usize, index: usize, message: usize },
    #[error("matrix does not fit the side-information hypergraph")]
    NotFitting,
    #[error("receiver {receiver} cannot decode its demand")]
    Undecodable { receiver: usize },
}

/// Encoding vectors per sender. Every vector has length `K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearCode {
    k: usize,
    senders: Vec<Vec<BitVector>>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CodeFile {
    code: Vec<Vec<Vec<u64>>>,
}

impl LinearCode {
    pub fn new(k: usize, senders: Vec<Vec<BitVector>>) -> Self {
        assert!(senders.iter().flatten().all(|v| v.len() == k), "code vectors must have length K");
        Self { k, senders }
    }

    /// From 0/1 rows per sender.
    pub fn from_bits(senders: &[&[&[u8]]]) -> Self {
        let k = senders.iter().flat_map(|s| s.iter()).map(|v| v.len()).next().unwrap_or(0);
        Self::new(k, senders.iter().map(|s| s.iter().map(|v| BitVector::from_bits(v)).collect()).collect())
    }

    pub fn empty(k: usize, n: usize) -> Self {
        Self { k, senders: vec![Vec::new(); n] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.senders.len()
    }

    pub fn sender(&self, n: usize) -> &[BitVector] {
        &self.senders[n]
    }

    pub fn senders(&self) -> &[Vec<BitVector>] {
        &self.senders
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.senders.iter().map(Vec::len).collect()
    }

    /// All vectors in sender order, tagged `(sender, index)`.
    pub fn tagged_rows(&self) -> Vec<((usize, usize), &BitVector)> {
        self.senders.iter().enumerate().flat_map(|(n, s)| s.iter().enumerate().map(move |(i, v)| ((n, i), v))).collect()
    }

    pub fn check_support(&self, inst: &Instance) -> Result<(), CodecError> {
        if self.senders.len() != inst.n() {
            return Err(CodecError::SenderCount { expected: inst.n(), found: self.senders.len() });
        }
        for (n, rows) in self.senders.iter().enumerate() {
            for (i, v) in rows.iter().enumerate() {
                if v.len() != inst.k() {
                    return Err(CodecError::VectorLength { sender: n + 1, index: i + 1, expected: inst.k(), found: v.len() });
                }
                if let Some(m) = v.ones().find(|&m| !inst.sender_has(n, m)) {
                    return Err(CodecError::SupportViolation { sender: n + 1, index: i + 1, message: m + 1 });
                }
            }
        }
        Ok(())
    }

    /// Parses a code file and checks it against `inst`.
    pub fn parse(text: &str, inst: &Instance) -> Result<Self, CodecError> {
        let file: CodeFile = serde_json::from_str(text).map_err(|e| CodecError::Parse(e.to_string()))?;
        if file.code.len() != inst.n() {
            return Err(CodecError::SenderCount { expected: inst.n(), found: file.code.len() });
        }
        let mut senders = Vec::with_capacity(file.code.len());
        for (n, rows) in file.code.iter().enumerate() {
            let mut out = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                if row.len() != inst.k() {
                    return Err(CodecError::VectorLength { sender: n + 1, index: i + 1, expected: inst.k(), found: row.len() });
                }
                if let Some(&value) = row.iter().find(|&&b| b > 1) {
                    return Err(CodecError::NotBinary { sender: n + 1, index: i + 1, value });
                }
                out.push(BitVector::from_bits(&row.iter().map(|&b| b as u8).collect::<Vec<_>>()));
            }
            senders.push(out);
        }
        let code = Self { k: inst.k(), senders };
        code.check_support(inst)?;
        Ok(code)
    }

    pub fn to_json(&self) -> String {
        let code = self
            .senders
            .iter()
            .map(|s| s.iter().map(|v| v.to_bits().into_iter().map(u64::from).collect()).collect())
            .collect();
        serde_json::to_string(&CodeFile { code }).expect("code serialises")
    }

    /// Human-readable transmissions such as `x1+x2`.
    pub fn describe(&self) -> Vec<Vec<String>> {
        self.senders.iter().map(|s| s.iter().map(describe_vector).collect()).collect()
    }
}

pub fn describe_vector(v: &BitVector) -> String {
    let terms: Vec<String> = v.ones().map(|m| format!("x{}", m + 1)).collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

pub fn code_length(code: &LinearCode) -> usize {
    code.senders.iter().map(Vec::len).sum()
}

/// Per sender, the greedy spanning rows of its block become the code.
pub fn code_from_fitting(a: &CompositeAdjacency, inst: &Instance) -> Result<LinearCode, CodecError> {
    if SideInfoHypergraph::build(inst).fits(a).is_none() {
        return Err(CodecError::NotFitting);
    }
    let senders = a
        .blocks()
        .iter()
        .map(|b| b.spanning_rows().into_iter().map(|r| b.row(r).clone()).collect())
        .collect();
    Ok(LinearCode::new(inst.k(), senders))
}

/// How one receiver recovers its demand: XOR the listed transmissions, then
/// XOR out the listed side-information messages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecodePlan {
    pub receiver: usize,
    /// `(sender, index)` of each transmission used.
    pub transmissions: Vec<(usize, usize)>,
    /// Side-information messages subtracted, a subset of `R(k)`.
    pub side_info: Vec<usize>,
}

impl DecodePlan {
    /// Runs the plan on message vector `x`; returns the decoded bit.
    pub fn apply(&self, code: &LinearCode, x: &BitVector) -> bool {
        let mut bit = false;
        for &(n, i) in &self.transmissions {
            bit ^= code.sender(n)[i].dot(x);
        }
        for &j in &self.side_info {
            bit ^= x.get(j);
        }
        bit
    }
}

/// Decode plan of receiver `k` for the code built from fitting `a`.
pub fn decode_plan(a: &CompositeAdjacency, inst: &Instance, k: usize) -> Result<DecodePlan, CodecError> {
    let code = code_from_fitting(a, inst)?;
    let mut transmissions = Vec::new();
    let mut total = BitVector::zeros(inst.k());
    for n in 0..inst.n() {
        let row = a.block(n).row(k);
        let lambda = express_in_span(row, code.sender(n)).expect("fitting rows lie in the span of their spanning rows");
        transmissions.extend(lambda.ones().map(|i| (n, i)));
        total.xor_assign(row);
    }
    assert!(total.get(k), "fitting row {k} does not carry its demand");
    let side_info: Vec<usize> = total.ones().filter(|&j| j != k).collect();
    assert!(side_info.iter().all(|&j| inst.receiver_knows(k, j)), "fitting row {k} needs uncached messages");
    Ok(DecodePlan { receiver: k, transmissions, side_info })
}

/// Decode plan of receiver `k` for an arbitrary code, if it can decode.
pub fn decode_plan_for_code(code: &LinearCode, inst: &Instance, k: usize) -> Option<DecodePlan> {
    let tagged = code.tagged_rows();
    let mut basis: Vec<BitVector> = tagged.iter().map(|(_, v)| (*v).clone()).collect();
    basis.extend(inst.side_info(k).iter().map(|&j| BitVector::unit(inst.k(), j)));
    let lambda = express_in_span(&BitVector::unit(inst.k(), k), &basis)?;
    let rows = tagged.len();
    Some(DecodePlan {
        receiver: k,
        transmissions: lambda.ones().filter(|&i| i < rows).map(|i| tagged[i].0).collect(),
        side_info: lambda.ones().filter(|&i| i >= rows).map(|i| inst.side_info(k)[i - rows]).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    Algebraic,
    Simulate,
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub valid: bool,
    pub algebraic: Option<bool>,
    pub simulated: Option<bool>,
    /// Receivers (0-based) that fail in any mode that ran.
    pub undecodable: Vec<usize>,
}

fn algebraic_failures(code: &LinearCode, inst: &Instance) -> Vec<usize> {
    let rows: Vec<BitVector> = code.tagged_rows().into_iter().map(|(_, v)| v.clone()).collect();
    (0..inst.k())
        .filter(|&k| !in_span_with_side_info(&BitVector::unit(inst.k(), k), &rows, inst.side_info(k)))
        .collect()
}

fn simulated_failures(code: &LinearCode, inst: &Instance) -> Vec<usize> {
    let k = inst.k();
    let plans: Vec<Option<DecodePlan>> = (0..k).map(|r| decode_plan_for_code(code, inst, r)).collect();
    let mut failed: Vec<bool> = plans.iter().map(Option::is_none).collect();
    let mut check = |x: &BitVector| {
        for (r, plan) in plans.iter().enumerate() {
            if let Some(p) = plan {
                if p.apply(code, x) != x.get(r) {
                    failed[r] = true;
                }
            }
        }
    };
    if k <= EXHAUSTIVE_LIMIT {
        for mask in 0u64..1 << k {
            check(&BitVector::from_mask(k, mask));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SIMULATION_SEED);
        for _ in 0..SIMULATION_SAMPLES {
            let bits: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2)).collect();
            check(&BitVector::from_bits(&bits));
        }
    }
    failed.iter().enumerate().filter(|(_, &f)| f).map(|(r, _)| r).collect()
}

pub fn verify_code(code: &LinearCode, inst: &Instance, mode: VerifyMode) -> Result<Verdict, CodecError> {
    code.check_support(inst)?;
    let alg = matches!(mode, VerifyMode::Algebraic | VerifyMode::Both).then(|| algebraic_failures(code, inst));
    let sim = matches!(mode, VerifyMode::Simulate | VerifyMode::Both).then(|| simulated_failures(code, inst));
    let mut undecodable: Vec<usize> = alg.iter().chain(sim.iter()).flatten().copied().collect();
    undecodable.sort_unstable();
    undecodable.dedup();
    Ok(Verdict {
        valid: undecodable.is_empty(),
        algebraic: alg.map(|f| f.is_empty()),
        simulated: sim.map(|f| f.is_empty()),
        undecodable,
    })
}

/// Fitting induced by a decodable code.
///
/// For each receiver `k`, `e_k` is written as a combination of all code
/// vectors and the unit vectors of `R(k)`; row `k` of block `n` is the part
/// of that combination sent by sender `n`.
pub fn code_to_fitting(code: &LinearCode, inst: &Instance) -> Result<CompositeAdjacency, CodecError> {
    code.check_support(inst)?;
    let (kk, nn) = (inst.k(), inst.n());
    let tagged = code.tagged_rows();
    let mut blocks = vec![BitMatrix::zeros(kk, kk); nn];
    for k in 0..kk {
        let mut basis: Vec<BitVector> = tagged.iter().map(|(_, v)| (*v).clone()).collect();
        basis.extend(inst.side_info(k).iter().map(|&j| BitVector::unit(kk, j)));
        let lambda =
            express_in_span(&BitVector::unit(kk, k), &basis).ok_or(CodecError::Undecodable { receiver: k + 1 })?;
        let mut rows = vec![BitVector::zeros(kk); nn];
        for i in lambda.ones().filter(|&i| i < tagged.len()) {
            let ((n, _), v) = tagged[i];
            rows[n].xor_assign(v);
        }
        for (n, row) in rows.into_iter().enumerate() {
            for m in row.ones() {
                blocks[n].set(k, m, true);
            }
        }
    }
    Ok(CompositeAdjacency::from_blocks(blocks))
}

/// Smallest sender whose part of row `k` carries `x_k`.
pub fn serving_sender(a: &CompositeAdjacency, k: usize) -> Option<usize> {
    (0..a.n()).find(|&n| a.get(k, k, n))
}
