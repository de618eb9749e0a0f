//! Brute-force search for the shortest linear code, using only the span
//! criterion: receiver `k` decodes iff `e_k` lies in the span of all
//! transmitted vectors together with `{e_j : j in R(k)}`.
//!
//! This module carries its own bitmask elimination and shares no search
//! logic with the solver.

use num_bigint::BigUint;
use thiserror::Error;

use crate::codec::LinearCode;
use crate::gf2::BitVector;
use crate::instance::Instance;

pub const GUARD_MAX_K: usize = 6;
pub const GUARD_MAX_LOAD: usize = 10;
pub const GUARD_MAX_LENGTH: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("brute force beyond K <= {GUARD_MAX_K}, total load <= {GUARD_MAX_LOAD}, length <= {GUARD_MAX_LENGTH} needs to be forced")]
    BeyondGuard,
    #[error("maximum length {max_length} exceeds K = {k}")]
    LengthAboveK { max_length: usize, k: usize },
    #[error("the oracle works on at most 64 messages")]
    TooManyMessages,
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    /// `None` when no code of length at most the maximum decodes.
    pub optimal_length: Option<usize>,
    pub witness_code: Option<LinearCode>,
    pub configurations_checked: BigUint,
}

fn decodes(rows: &[u64], side: &[u64], k: usize) -> bool {
    let mut pivots = [0u64; 64];
    let mut insert = |mut v: u64| {
        while v != 0 {
            let p = 63 - v.leading_zeros() as usize;
            if pivots[p] == 0 {
                pivots[p] = v;
                return;
            }
            v ^= pivots[p];
        }
    };
    for &r in rows {
        insert(r);
    }
    let mut s = side[k];
    while s != 0 {
        insert(s & s.wrapping_neg());
        s &= s - 1;
    }
    let mut t = 1u64 << k;
    while t != 0 {
        let p = 63 - t.leading_zeros() as usize;
        if pivots[p] == 0 {
            return false;
        }
        t ^= pivots[p];
    }
    true
}

/// Advances `c` to the next strictly increasing tuple below `n`.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let r = c.len();
    for i in (0..r).rev() {
        if c[i] < n - r + i {
            c[i] += 1;
            for j in i + 1..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Advances `parts` to the next composition of the same total, respecting
/// per-part maxima, in lexicographic order.
fn next_composition(parts: &mut [usize], max: &[usize]) -> bool {
    let total: usize = parts.iter().sum();
    let n = parts.len();
    // find the rightmost position (before the last) that can grow while the
    // remainder still fits in the positions after it
    for i in (0..n.saturating_sub(1)).rev() {
        let prefix: usize = parts[..i].iter().sum();
        let grown = parts[i] + 1;
        if grown > max[i] || prefix + grown > total {
            continue;
        }
        let mut rest = total - prefix - grown;
        let capacity: usize = max[i + 1..].iter().sum();
        if rest > capacity {
            continue;
        }
        parts[i] = grown;
        // the lexicographically smallest tail fills from the right
        for j in (i + 1..n).rev() {
            let take = rest.min(max[j]);
            parts[j] = take;
            rest -= take;
        }
        return true;
    }
    false
}

fn first_composition(total: usize, max: &[usize]) -> Option<Vec<usize>> {
    let mut parts = vec![0; max.len()];
    let mut rest = total;
    for j in (0..max.len()).rev() {
        let take = rest.min(max[j]);
        parts[j] = take;
        rest -= take;
    }
    (rest == 0).then_some(parts)
}

pub fn optimal_linear_code_bruteforce(
    inst: &Instance,
    max_length: usize,
    force: bool,
) -> Result<OracleReport, OracleError> {
    let (k, n) = (inst.k(), inst.n());
    if k > 64 {
        return Err(OracleError::TooManyMessages);
    }
    if max_length > k {
        return Err(OracleError::LengthAboveK { max_length, k });
    }
    let load: usize = inst.stores().iter().map(Vec::len).sum();
    if !force && (k > GUARD_MAX_K || load > GUARD_MAX_LOAD || max_length > GUARD_MAX_LENGTH) {
        return Err(OracleError::BeyondGuard);
    }

    // nonzero vectors supported on each store, ascending as integers
    let candidates: Vec<Vec<u64>> = inst
        .stores()
        .iter()
        .map(|store| {
            let support: u64 = store.iter().map(|&m| 1u64 << m).sum();
            let mut out = Vec::new();
            let mut sub = support;
            while sub != 0 {
                out.push(sub);
                sub = (sub - 1) & support;
            }
            out.reverse();
            out
        })
        .collect();
    let side: Vec<u64> = (0..k).map(|r| inst.side_info(r).iter().map(|&j| 1u64 << j).sum()).collect();
    let max: Vec<usize> = candidates.iter().map(Vec::len).collect();

    let mut checked = BigUint::from(0u8);
    let mut rows = Vec::with_capacity(max_length);
    for length in 0..=max_length {
        let Some(mut parts) = first_composition(length, &max) else {
            continue;
        };
        loop {
            let mut combos: Vec<Vec<usize>> = parts.iter().map(|&p| (0..p).collect()).collect();
            'assign: loop {
                rows.clear();
                for (s, c) in combos.iter().enumerate() {
                    rows.extend(c.iter().map(|&i| candidates[s][i]));
                }
                checked += 1u8;
                if (0..k).all(|r| decodes(&rows, &side, r)) {
                    let senders = combos
                        .iter()
                        .enumerate()
                        .map(|(s, c)| c.iter().map(|&i| BitVector::from_mask(k, candidates[s][i])).collect())
                        .collect();
                    return Ok(OracleReport {
                        optimal_length: Some(length),
                        witness_code: Some(LinearCode::new(k, senders)),
                        configurations_checked: checked,
                    });
                }
                for s in (0..n).rev() {
                    if next_combination(&mut combos[s], max[s]) {
                        for t in s + 1..n {
                            combos[t] = (0..parts[t]).collect();
                        }
                        continue 'assign;
                    }
                }
                break;
            }
            if !next_composition(&mut parts, &max) {
                break;
            }
        }
    }
    Ok(OracleReport { optimal_length: None, witness_code: None, configurations_checked: checked })
}
