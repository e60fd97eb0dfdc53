//! Pattern arithmetic: 2-density, balance classification, the edge-count
//! appearance threshold, and valid edge orderings of complete patterns.

use super::CountingError;
use crate::model::PatternGraph;
use crate::rational::Rational;
use itertools::Itertools;
use num::bigint::{BigInt, BigUint};
use num::{One, Signed, ToPrimitive};

// ============================================================================
// 2-density and balance
// ============================================================================

/// `max (|E(H')| - 1) / (|V(H')| - 2)` over subgraphs on at least three
/// vertices. For a fixed vertex set the ratio is maximized by taking every
/// available edge, so enumerating induced subgraphs suffices.
pub fn two_density(h: &PatternGraph) -> Result<Rational, CountingError> {
    two_density_impl(h).map(|(m2, _)| m2)
}

fn induced_edge_count(h: &PatternGraph, mask: u32) -> usize {
    h.edges()
        .iter()
        .filter(|&&(x, y)| mask >> x & 1 == 1 && mask >> y & 1 == 1)
        .count()
}

/// Returns the maximum ratio and whether it is attained only by the full
/// vertex set.
fn two_density_impl(h: &PatternGraph) -> Result<(Rational, bool), CountingError> {
    let ell = h.ell();
    if ell < 3 {
        return Err(CountingError::TooFewVertices(ell));
    }
    if ell > 24 {
        return Err(CountingError::PatternTooLarge(ell));
    }
    let mut best: Option<Rational> = None;
    let mut best_only_full = true;
    let full: u32 = (1u32 << ell) - 1;
    for mask in 1u32..=full {
        let s = mask.count_ones() as usize;
        if s < 3 {
            continue;
        }
        let e = induced_edge_count(h, mask);
        let ratio = Rational::new(BigInt::from(e as i64 - 1), BigInt::from((s - 2) as i64));
        match &best {
            Some(b) if ratio < *b => {}
            Some(b) if ratio == *b => {
                if mask != full {
                    best_only_full = false;
                }
            }
            _ => {
                best = Some(ratio);
                best_only_full = mask == full;
            }
        }
    }
    Ok((best.expect("ell >= 3 yields at least the full set"), best_only_full))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BalanceClass {
    StrictlyBalanced,
    Balanced,
    Neither,
}

impl BalanceClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            BalanceClass::StrictlyBalanced => "strictly-balanced",
            BalanceClass::Balanced => "balanced",
            BalanceClass::Neither => "neither",
        }
    }
}

/// Balanced: the full graph attains the 2-density. Strictly balanced:
/// every proper subgraph has strictly smaller 2-density, which holds iff
/// the maximum ratio is attained by no proper induced vertex subset.
pub fn balance_class(h: &PatternGraph) -> Result<BalanceClass, CountingError> {
    let (m2, only_full) = two_density_impl(h)?;
    let full_ratio = Rational::new(
        BigInt::from(h.edge_count() as i64 - 1),
        BigInt::from((h.ell() - 2) as i64),
    );
    if only_full {
        Ok(BalanceClass::StrictlyBalanced)
    } else if full_ratio == m2 {
        Ok(BalanceClass::Balanced)
    } else {
        Ok(BalanceClass::Neither)
    }
}

// ============================================================================
// Edge threshold
// ============================================================================

/// `ceil(c * n^(2 - 1/m2(H)))`.
///
/// When `n^p` is a perfect `q`-th power for the exponent `p/q`, the power is
/// evaluated exactly in big integers (so e.g. powers of two round exactly);
/// otherwise the fractional power falls back to floating point before the
/// ceiling.
pub fn edge_threshold(
    h: &PatternGraph,
    n: u64,
    c: &Rational,
) -> Result<u64, CountingError> {
    let m2 = two_density(h)?;
    let exponent = Rational::from_integer(2.into()) - m2.recip();
    let p = exponent.numer().clone();
    let q = exponent.denom().clone();
    if p.is_positive() && n > 0 {
        if let (Some(p), Some(q)) = (p.to_u32(), q.to_u32()) {
            let pow = BigUint::from(n).pow(p);
            let root = pow.nth_root(q);
            if root.clone().pow(q) == pow {
                let exact = c * Rational::from_integer(BigInt::from(root));
                let t = exact.ceil().to_integer();
                if t.is_negative() {
                    return Ok(0);
                }
                return t.to_u64().ok_or(CountingError::ThresholdOverflow);
            }
        }
    }
    let base = (n as f64).powf(exponent.to_f64().unwrap_or(f64::NAN));
    let scaled = c.to_f64().unwrap_or(f64::NAN) * base;
    if !scaled.is_finite() {
        return Err(CountingError::ThresholdOverflow);
    }
    Ok(scaled.ceil().max(0.0) as u64)
}

// ============================================================================
// Valid edge orderings of complete patterns
// ============================================================================

/// An ordering of the edges of `K_ell` in which every edge incident to
/// vertex `k` appears only after all edges among vertices `0..k`. Position
/// blocks are fixed; only the order within each block varies, so there are
/// `prod_{k=1}^{ell-1} k!` such orderings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidSequence {
    ell: usize,
    edges: Vec<(usize, usize)>,
}

impl ValidSequence {
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// The permutation of `0..k` giving the order in which the edges from
    /// vertex `k` to the earlier vertices appear (`k` in `1..ell`).
    pub fn sigma(&self, k: usize) -> Vec<usize> {
        debug_assert!((1..self.ell).contains(&k));
        let start = k * (k - 1) / 2;
        self.edges[start..start + k]
            .iter()
            .map(|&(a, b)| if b == k { a } else { b })
            .collect()
    }

    /// Re-checks the block constraint from scratch.
    pub fn is_valid(&self) -> bool {
        let ell = self.ell;
        if self.edges.len() != ell * (ell - 1) / 2 {
            return false;
        }
        let mut seen: Vec<(usize, usize)> = self.edges.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.edges.len() {
            return false;
        }
        for k in 1..ell {
            let start = k * (k - 1) / 2;
            for &(a, b) in &self.edges[start..start + k] {
                let hi = a.max(b);
                let lo = a.min(b);
                if hi != k || lo >= k {
                    return false;
                }
            }
        }
        true
    }
}

/// Lazy enumeration of all valid sequences, blockwise-lexicographic.
pub struct ValidSequences {
    ell: usize,
    /// Per block (new vertex `k`), the `k!` permutations of `0..k`.
    blocks: Vec<Vec<Vec<usize>>>,
    cursor: Vec<usize>,
    done: bool,
}

impl Iterator for ValidSequences {
    type Item = ValidSequence;

    fn next(&mut self) -> Option<ValidSequence> {
        if self.done {
            return None;
        }
        let mut edges = Vec::with_capacity(self.ell * (self.ell.max(1) - 1) / 2);
        for (block, perms) in self.blocks.iter().enumerate() {
            let k = block + 1;
            for &lo in &perms[self.cursor[block]] {
                edges.push((lo, k));
            }
        }
        // Advance the odometer.
        let mut i = self.blocks.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.cursor[i] += 1;
            if self.cursor[i] < self.blocks[i].len() {
                break;
            }
            self.cursor[i] = 0;
        }
        Some(ValidSequence {
            ell: self.ell,
            edges,
        })
    }
}

/// All valid edge orderings of `K_ell`.
pub fn valid_sequences(ell: usize) -> ValidSequences {
    let blocks: Vec<Vec<Vec<usize>>> = (1..ell)
        .map(|k| (0..k).permutations(k).collect())
        .collect();
    let cursor = vec![0; blocks.len()];
    ValidSequences {
        ell,
        blocks,
        cursor,
        done: false,
    }
}

/// The canonical valid sequence: each block in increasing order.
pub fn one_valid_sequence(ell: usize) -> ValidSequence {
    let mut edges = Vec::with_capacity(ell * (ell.max(1) - 1) / 2);
    for k in 1..ell {
        for lo in 0..k {
            edges.push((lo, k));
        }
    }
    ValidSequence { ell, edges }
}

/// `prod_{k=1}^{ell-1} k!`.
pub fn valid_sequence_count(ell: usize) -> BigUint {
    let mut acc = BigUint::one();
    for k in 1..ell {
        for f in 1..=k as u64 {
            acc *= f;
        }
    }
    acc
}
