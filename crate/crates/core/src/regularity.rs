//! Regularity and lower-regularity verification with witness production.
//!
//! Two check families are exposed for every bipartite pair:
//!
//! * exact, exhaustive verdicts (`check_*_exact`), permitted only up to side
//!   size [`EXACT_SIDE_CAP`]; a `certified-regular` verdict from these is a
//!   proof over every qualifying subset pair, and a violation carries a
//!   re-checkable witness;
//! * a randomized falsifier ([`witness_search`]) for larger sides, which is
//!   sound (a returned witness really violates) but incomplete (it answers
//!   `no-witness-found` rather than certifying).
//!
//! All comparisons are exact: the allowed edge-count window of each subset
//! size pair is precomputed as integers from the rational inputs, and the
//! scan itself never touches floating point.

use crate::bitset::Bitset;
use crate::model::{ClassedGraph, ModelError, PairView};
use crate::rational::{ceil_nonneg_u64, floor_u64, rational_from_usize, Rational};
use crate::sampling::RngSpec;
use num::{BigInt, One, Signed};
use rand::Rng;
use thiserror::Error;

/// Exhaustive subset enumeration is allowed only for sides of at most this
/// many vertices.
pub const EXACT_SIDE_CAP: usize = 14;

#[derive(Debug, Error)]
pub enum RegularityError {
    #[error("pair side of size {size} exceeds the exact-check cap {cap}")]
    SideTooLargeForExact { size: usize, cap: usize },
    #[error("pair has an empty side")]
    EmptySide,
    #[error("subset is empty")]
    EmptySubset,
    #[error("subset length {got} does not match side size {expected}")]
    SubsetMismatch { got: usize, expected: usize },
    #[error("subset of size {size} is below the qualifying threshold {min}")]
    SubsetTooSmall { size: usize, min: usize },
    #[error("parameter order violated: require 0 < epsilon < alpha <= 1")]
    ParameterOrderViolation,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Subset pair certifying a violation, always in the pair's normalized
/// `(min class, max class)` orientation.
#[derive(Clone, Debug)]
pub struct Witness {
    pub side1: Bitset,
    pub side2: Bitset,
    pub subpair_density: Rational,
    pub reference_density: Rational,
}

#[derive(Clone, Debug)]
pub enum RegularityVerdict {
    CertifiedRegular { subsets_examined: u64 },
    WitnessViolation { witness: Witness, subsets_examined: u64 },
    NoWitnessFound { subsets_examined: u64 },
}

impl RegularityVerdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, RegularityVerdict::WitnessViolation { .. })
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, RegularityVerdict::CertifiedRegular { .. })
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            RegularityVerdict::CertifiedRegular { .. } => "certified-regular",
            RegularityVerdict::WitnessViolation { .. } => "witness-violation",
            RegularityVerdict::NoWitnessFound { .. } => "no-witness-found",
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            RegularityVerdict::WitnessViolation { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn subsets_examined(&self) -> u64 {
        match self {
            RegularityVerdict::CertifiedRegular { subsets_examined }
            | RegularityVerdict::WitnessViolation {
                subsets_examined, ..
            }
            | RegularityVerdict::NoWitnessFound { subsets_examined } => *subsets_examined,
        }
    }
}

/// Which inequality the falsifier attacks.
#[derive(Clone, Debug)]
pub enum RegularityGoal {
    /// `|d(S1, S2) - d| <= eps * d` with `d` the pair density.
    EpsRegular,
    /// `d(S1, S2) >= (1 - eps) * density` with an explicit target density.
    LowerRegular { density: Rational },
}

/// Strategy selector shared by the aux-graph checker and the CLI.
#[derive(Clone, Debug)]
pub enum CheckMode {
    Exact,
    Witness { budget: u32 },
}

// ============================================================================
// Density
// ============================================================================

/// `|E(sub1, sub2)| / (|sub1| * |sub2|)` as an exact rational.
pub fn density(
    g: &ClassedGraph,
    pair: (usize, usize),
    sub1: &Bitset,
    sub2: &Bitset,
) -> Result<Rational, RegularityError> {
    density_view(&g.pair_view(pair.0, pair.1)?, sub1, sub2)
}

pub fn density_view(
    view: &PairView<'_>,
    sub1: &Bitset,
    sub2: &Bitset,
) -> Result<Rational, RegularityError> {
    if sub1.nbits() != view.n1 {
        return Err(RegularityError::SubsetMismatch {
            got: sub1.nbits(),
            expected: view.n1,
        });
    }
    if sub2.nbits() != view.n2 {
        return Err(RegularityError::SubsetMismatch {
            got: sub2.nbits(),
            expected: view.n2,
        });
    }
    let s1 = sub1.count_ones();
    let s2 = sub2.count_ones();
    if s1 == 0 || s2 == 0 {
        return Err(RegularityError::EmptySubset);
    }
    let edges: usize = sub1
        .ones()
        .map(|v| view.rows[v].intersection_count(sub2))
        .sum();
    Ok(Rational::new(
        BigInt::from(edges),
        BigInt::from(s1 as u64 * s2 as u64),
    ))
}

// ============================================================================
// Exact checkers
// ============================================================================

/// Smallest qualifying subset size: least `s >= 1` with `s >= eps * n`.
/// The empty set is never a qualifying subset.
fn min_qualifying(eps: &Rational, n: usize) -> usize {
    let t = eps * rational_from_usize(n);
    (ceil_nonneg_u64(&t).max(1)) as usize
}

/// Allowed edge-count window for a subpair of sizes `(s1, s2)`:
/// `e` violates iff `e < lo` or `e > hi`. `hi = u64::MAX` encodes the
/// one-sided (lower-regular) case.
fn allowed_window(
    d_ref: &Rational,
    eps: &Rational,
    s1: usize,
    s2: usize,
    two_sided: bool,
) -> (u64, u64) {
    let cells = rational_from_usize(s1) * rational_from_usize(s2);
    let one = Rational::one();
    let lo = ceil_nonneg_u64(&((&one - eps) * d_ref * &cells));
    let hi = if two_sided {
        floor_u64(&((&one + eps) * d_ref * cells)).unwrap_or(0)
    } else {
        u64::MAX
    };
    (lo, hi)
}

enum ExactGoal<'a> {
    Eps,
    Lower(&'a Rational),
}

/// Exhaustive verdict for one pair.
///
/// One side (the smaller) is enumerated as a bitmask; for the other side it
/// suffices to test, per subset size, the extremal subsets formed by the
/// vertices of smallest and largest degree into the enumerated subset — any
/// other subset of the same size has an edge count between those extremes,
/// so a violation exists iff an extremal one violates. `subsets_examined`
/// counts the evaluated (subset, size, direction) candidates.
fn exact_scan(
    view: &PairView<'_>,
    eps: &Rational,
    goal: ExactGoal<'_>,
) -> Result<RegularityVerdict, RegularityError> {
    if view.n1 == 0 || view.n2 == 0 {
        return Err(RegularityError::EmptySide);
    }
    for side in [view.n1, view.n2] {
        if side > EXACT_SIDE_CAP {
            return Err(RegularityError::SideTooLargeForExact {
                size: side,
                cap: EXACT_SIDE_CAP,
            });
        }
    }
    let (two_sided, d_ref) = match goal {
        ExactGoal::Eps => (true, view.density()),
        ExactGoal::Lower(d) => (false, d.clone()),
    };

    // Enumerate the smaller side (ties: side 1).
    let enum_is_side1 = view.n1 <= view.n2;
    let (ne, no) = if enum_is_side1 {
        (view.n1, view.n2)
    } else {
        (view.n2, view.n1)
    };
    let smin_e = min_qualifying(eps, ne);
    let smin_o = min_qualifying(eps, no);
    let mut examined = 0u64;
    if smin_e > ne || smin_o > no {
        // No qualifying subsets at all: vacuously regular.
        return Ok(RegularityVerdict::CertifiedRegular {
            subsets_examined: examined,
        });
    }

    // Adjacency of each opposite-side vertex into the enumerated side as a
    // single word (the enumerated side has at most EXACT_SIDE_CAP bits).
    let adj: Vec<u64> = if enum_is_side1 {
        view.cols.iter().map(|b| b.word0()).collect()
    } else {
        view.rows.iter().map(|b| b.word0()).collect()
    };

    // Integer edge-count windows per (enumerated size, opposite size).
    let mut windows = vec![vec![(0u64, 0u64); no + 1]; ne + 1];
    for (se, row) in windows.iter_mut().enumerate().skip(smin_e) {
        for (so, slot) in row.iter_mut().enumerate().skip(smin_o) {
            *slot = allowed_window(&d_ref, eps, se, so, two_sided);
        }
    }

    let make_witness = |mask: u64, chosen: &[u32], edges: u64, se: usize, so: usize| {
        let sub_e = Bitset::from_indices(ne, (0..ne).filter(|&i| mask >> i & 1 == 1));
        let sub_o = Bitset::from_indices(no, chosen.iter().map(|&w| w as usize));
        let (side1, side2) = if enum_is_side1 {
            (sub_e, sub_o)
        } else {
            (sub_o, sub_e)
        };
        Witness {
            side1,
            side2,
            subpair_density: Rational::new(
                BigInt::from(edges),
                BigInt::from(se as u64 * so as u64),
            ),
            reference_density: d_ref.clone(),
        }
    };

    let mut order: Vec<u32> = (0..no as u32).collect();
    let mut prefix: Vec<u64> = vec![0; no + 1];
    for mask in 1u64..(1u64 << ne) {
        let se = mask.count_ones() as usize;
        if se < smin_e {
            continue;
        }
        // Degrees into the enumerated subset, ascending (ties by index).
        order.sort_unstable_by_key(|&w| ((adj[w as usize] & mask).count_ones(), w));
        for (i, &w) in order.iter().enumerate() {
            prefix[i + 1] = prefix[i] + (adj[w as usize] & mask).count_ones() as u64;
        }
        let total = prefix[no];
        for so in smin_o..=no {
            let (lo, hi) = windows[se][so];
            examined += 1;
            let min_e = prefix[so];
            if min_e < lo {
                let witness = make_witness(mask, &order[..so], min_e, se, so);
                return Ok(RegularityVerdict::WitnessViolation {
                    witness,
                    subsets_examined: examined,
                });
            }
            if two_sided {
                examined += 1;
                let max_e = total - prefix[no - so];
                if max_e > hi {
                    let witness = make_witness(mask, &order[no - so..], max_e, se, so);
                    return Ok(RegularityVerdict::WitnessViolation {
                        witness,
                        subsets_examined: examined,
                    });
                }
            }
        }
    }
    Ok(RegularityVerdict::CertifiedRegular {
        subsets_examined: examined,
    })
}

/// Exhaustive `(eps)`-regularity verdict for pair `(x, y)` of `g`.
pub fn check_eps_regular_exact(
    g: &ClassedGraph,
    pair: (usize, usize),
    eps: &Rational,
) -> Result<RegularityVerdict, RegularityError> {
    check_eps_regular_exact_view(&g.pair_view(pair.0, pair.1)?, eps)
}

pub fn check_eps_regular_exact_view(
    view: &PairView<'_>,
    eps: &Rational,
) -> Result<RegularityVerdict, RegularityError> {
    exact_scan(view, eps, ExactGoal::Eps)
}

/// Exhaustive `(eps, d)`-lower-regularity verdict.
pub fn check_lower_regular_exact(
    g: &ClassedGraph,
    pair: (usize, usize),
    eps: &Rational,
    d: &Rational,
) -> Result<RegularityVerdict, RegularityError> {
    check_lower_regular_exact_view(&g.pair_view(pair.0, pair.1)?, eps, d)
}

pub fn check_lower_regular_exact_view(
    view: &PairView<'_>,
    eps: &Rational,
    d: &Rational,
) -> Result<RegularityVerdict, RegularityError> {
    exact_scan(view, eps, ExactGoal::Lower(d))
}

// ============================================================================
// Randomized witness search
// ============================================================================

/// Randomized falsifier: greedy local search from random qualifying subsets,
/// restarted `budget` times. Sound but incomplete — never certifies.
///
/// Each restart draws subset sizes and members uniformly, then repeatedly
/// applies the best single-vertex swap (on either side, in either density
/// direction) that moves the subpair density further from the allowed
/// window; a violation found at any step is returned immediately.
pub fn witness_search(
    g: &ClassedGraph,
    pair: (usize, usize),
    eps: &Rational,
    goal: RegularityGoal,
    budget: u32,
    rng_spec: &RngSpec,
) -> Result<RegularityVerdict, RegularityError> {
    witness_search_view(&g.pair_view(pair.0, pair.1)?, eps, goal, budget, rng_spec)
}

pub fn witness_search_view(
    view: &PairView<'_>,
    eps: &Rational,
    goal: RegularityGoal,
    budget: u32,
    rng_spec: &RngSpec,
) -> Result<RegularityVerdict, RegularityError> {
    if view.n1 == 0 || view.n2 == 0 {
        return Err(RegularityError::EmptySide);
    }
    let (two_sided, d_ref) = match &goal {
        RegularityGoal::EpsRegular => (true, view.density()),
        RegularityGoal::LowerRegular { density } => (false, density.clone()),
    };
    let smin1 = min_qualifying(eps, view.n1);
    let smin2 = min_qualifying(eps, view.n2);
    let mut examined = 0u64;
    if smin1 > view.n1 || smin2 > view.n2 {
        return Ok(RegularityVerdict::NoWitnessFound {
            subsets_examined: examined,
        });
    }
    let mut rng = rng_spec.rng();

    for _ in 0..budget.max(1) {
        let s1 = rng.gen_range(smin1..=view.n1);
        let s2 = rng.gen_range(smin2..=view.n2);
        let mut state = SwapState::random(view, s1, s2, &mut rng);
        let (lo, hi) = allowed_window(&d_ref, eps, s1, s2, two_sided);
        let target = &d_ref * rational_from_usize(s1) * rational_from_usize(s2);
        loop {
            examined += 1;
            if state.edges < lo || (two_sided && state.edges > hi) {
                let witness = Witness {
                    side1: state.in1.clone(),
                    side2: state.in2.clone(),
                    subpair_density: Rational::new(
                        BigInt::from(state.edges),
                        BigInt::from(s1 as u64 * s2 as u64),
                    ),
                    reference_density: d_ref.clone(),
                };
                return Ok(RegularityVerdict::WitnessViolation {
                    witness,
                    subsets_examined: examined,
                });
            }
            let score = |edges: u64| -> Rational {
                let e = Rational::from_integer(BigInt::from(edges));
                if two_sided {
                    (e - &target).abs()
                } else {
                    &target - e
                }
            };
            let current = score(state.edges);
            let mut best: Option<(Rational, Swap)> = None;
            for cand in state.candidate_swaps(two_sided) {
                let s = score(cand.new_edges);
                if s > current && best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, cand));
                }
            }
            match best {
                Some((_, swap)) => state.apply(view, swap),
                None => break,
            }
        }
    }
    Ok(RegularityVerdict::NoWitnessFound {
        subsets_examined: examined,
    })
}

#[derive(Clone, Copy)]
struct Swap {
    side1: bool,
    out: usize,
    inn: usize,
    new_edges: u64,
}

struct SwapState {
    in1: Bitset,
    in2: Bitset,
    /// deg1[v] = |Γ(v) ∩ S2| for every v on side 1.
    deg1: Vec<u32>,
    /// deg2[w] = |Γ(w) ∩ S1| for every w on side 2.
    deg2: Vec<u32>,
    edges: u64,
}

impl SwapState {
    fn random(view: &PairView<'_>, s1: usize, s2: usize, rng: &mut impl Rng) -> Self {
        let pick = |n: usize, k: usize, rng: &mut dyn rand::RngCore| -> Bitset {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            for i in 0..k {
                let j = rng.gen_range(i..n);
                idx.swap(i, j);
            }
            Bitset::from_indices(n, idx[..k].iter().map(|&v| v as usize))
        };
        let in1 = pick(view.n1, s1, rng);
        let in2 = pick(view.n2, s2, rng);
        let deg1: Vec<u32> = (0..view.n1)
            .map(|v| view.rows[v].intersection_count(&in2) as u32)
            .collect();
        let deg2: Vec<u32> = (0..view.n2)
            .map(|w| view.cols[w].intersection_count(&in1) as u32)
            .collect();
        let edges = in1.ones().map(|v| deg1[v] as u64).sum();
        SwapState {
            in1,
            in2,
            deg1,
            deg2,
            edges,
        }
    }

    /// Best density-increasing and density-decreasing single swaps per side.
    fn candidate_swaps(&self, two_sided: bool) -> Vec<Swap> {
        let mut out = Vec::with_capacity(4);
        for side1 in [true, false] {
            let (members, deg) = if side1 {
                (&self.in1, &self.deg1)
            } else {
                (&self.in2, &self.deg2)
            };
            let n = members.nbits();
            if members.count_ones() == n {
                continue;
            }
            let mut min_in: Option<usize> = None;
            let mut max_in: Option<usize> = None;
            let mut min_out: Option<usize> = None;
            let mut max_out: Option<usize> = None;
            for v in 0..n {
                let slot = if members.get(v) {
                    (&mut min_in, &mut max_in)
                } else {
                    (&mut min_out, &mut max_out)
                };
                if slot.0.is_none_or(|m| deg[v] < deg[m]) {
                    *slot.0 = Some(v);
                }
                if slot.1.is_none_or(|m| deg[v] > deg[m]) {
                    *slot.1 = Some(v);
                }
            }
            // Density up: drop the weakest member, add the strongest outsider.
            if let (Some(o), Some(i)) = (min_in, max_out) {
                if two_sided {
                    out.push(Swap {
                        side1,
                        out: o,
                        inn: i,
                        new_edges: self.edges + deg[i] as u64 - deg[o] as u64,
                    });
                }
            }
            // Density down: drop the strongest member, add the weakest outsider.
            if let (Some(o), Some(i)) = (max_in, min_out) {
                out.push(Swap {
                    side1,
                    out: o,
                    inn: i,
                    new_edges: self.edges + deg[i] as u64 - deg[o] as u64,
                });
            }
        }
        out
    }

    fn apply(&mut self, view: &PairView<'_>, swap: Swap) {
        self.edges = swap.new_edges;
        if swap.side1 {
            self.in1.clear(swap.out);
            self.in1.set(swap.inn);
            for w in view.rows[swap.out].ones() {
                self.deg2[w] -= 1;
            }
            for w in view.rows[swap.inn].ones() {
                self.deg2[w] += 1;
            }
        } else {
            self.in2.clear(swap.out);
            self.in2.set(swap.inn);
            for v in view.cols[swap.out].ones() {
                self.deg1[v] -= 1;
            }
            for v in view.cols[swap.inn].ones() {
                self.deg1[v] += 1;
            }
        }
    }
}

// ============================================================================
// Degree deviations and inherited parameters
// ============================================================================

/// Counts side-1 vertices whose degree into `sub2` falls strictly below
/// `(1 - eps) d |sub2|` (first component) or strictly above
/// `(1 + eps) d |sub2|` (second component).
pub fn degree_deviation_report(
    g: &ClassedGraph,
    pair: (usize, usize),
    eps: &Rational,
    d: &Rational,
    sub2: &Bitset,
) -> Result<(usize, usize), RegularityError> {
    let view = g.pair_view(pair.0, pair.1)?;
    if view.n1 == 0 || view.n2 == 0 {
        return Err(RegularityError::EmptySide);
    }
    if sub2.nbits() != view.n2 {
        return Err(RegularityError::SubsetMismatch {
            got: sub2.nbits(),
            expected: view.n2,
        });
    }
    let s2 = sub2.count_ones();
    let min = min_qualifying(eps, view.n2);
    if s2 < min {
        return Err(RegularityError::SubsetTooSmall { size: s2, min });
    }
    let one = Rational::one();
    let size = rational_from_usize(s2);
    // deg < lo_val  <=>  deg < ceil(lo_val) for integer deg; similarly above.
    let lo = ceil_nonneg_u64(&((&one - eps) * d * &size));
    let hi = floor_u64(&((&one + eps) * d * size));
    let mut below = 0usize;
    let mut above = 0usize;
    for row in view.rows {
        let deg = row.intersection_count(sub2) as u64;
        if deg < lo {
            below += 1;
        }
        match hi {
            Some(h) if deg > h => above += 1,
            None => above += 1,
            _ => {}
        }
    }
    Ok((below, above))
}

/// Regularity parameter inherited by a sub-side of relative size `alpha`:
/// `max(eps / alpha, 2 eps / (1 - eps))`.
pub fn inherited_regularity_params(
    eps: &Rational,
    alpha: &Rational,
) -> Result<Rational, RegularityError> {
    let one = Rational::one();
    if !eps.is_positive() || eps >= alpha || *alpha > one {
        return Err(RegularityError::ParameterOrderViolation);
    }
    let a = eps / alpha;
    let b = (eps + eps) / (&one - eps);
    Ok(if a > b { a } else { b })
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PatternGraph;
    use crate::rational::rat;

    fn matching(n: usize) -> ClassedGraph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        ClassedGraph::bipartite(n, n, &edges).unwrap()
    }

    fn complete_pair(n1: usize, n2: usize) -> ClassedGraph {
        ClassedGraph::complete(PatternGraph::complete(2), vec![n1, n2]).unwrap()
    }

    #[test]
    fn complete_pair_is_regular_for_any_eps() {
        let g = complete_pair(3, 4);
        for eps in [rat(1, 10), rat(1, 3), rat(9, 10)] {
            let v = check_eps_regular_exact(&g, (0, 1), &eps).unwrap();
            assert!(v.is_certified(), "eps={eps}");
        }
        assert_eq!(g.pair_density(0, 1).unwrap(), rat(1, 1));
    }

    #[test]
    fn empty_pair_is_regular() {
        let g = ClassedGraph::bipartite(3, 3, &[]).unwrap();
        let v = check_eps_regular_exact(&g, (0, 1), &rat(1, 2)).unwrap();
        assert!(v.is_certified());
    }

    #[test]
    fn matching_violates_eps_half() {
        let g = matching(4);
        let v = check_eps_regular_exact(&g, (0, 1), &rat(1, 2)).unwrap();
        let w = v.witness().expect("violation expected");
        // The witness must really violate |d' - d| <= eps d.
        let d = g.pair_density(0, 1).unwrap();
        let dv = density(&g, (0, 1), &w.side1, &w.side2).unwrap();
        let diff = (&dv - &d).abs();
        assert!(diff > rat(1, 2) * &d);
        assert_eq!(w.reference_density, d);
        assert_eq!(w.subpair_density, dv);
    }

    #[test]
    fn matching_violates_lower_quarter() {
        let g = matching(4);
        let v = check_lower_regular_exact(&g, (0, 1), &rat(1, 4), &rat(1, 4)).unwrap();
        let w = v.witness().expect("violation expected");
        let dv = density(&g, (0, 1), &w.side1, &w.side2).unwrap();
        assert!(dv < (rat(3, 4)) * rat(1, 4));
    }

    #[test]
    fn eps_regular_implies_lower_regular_at_own_density() {
        let g = complete_pair(4, 4);
        let eps = rat(1, 3);
        assert!(check_eps_regular_exact(&g, (0, 1), &eps).unwrap().is_certified());
        let d = g.pair_density(0, 1).unwrap();
        assert!(check_lower_regular_exact(&g, (0, 1), &eps, &d)
            .unwrap()
            .is_certified());
    }

    #[test]
    fn empty_side_rejected() {
        let g = ClassedGraph::new(PatternGraph::complete(2), vec![0, 3], &[vec![]]).unwrap();
        assert!(matches!(
            check_eps_regular_exact(&g, (0, 1), &rat(1, 2)),
            Err(RegularityError::EmptySide)
        ));
    }

    #[test]
    fn oversized_side_rejected() {
        let g = ClassedGraph::bipartite(15, 3, &[]).unwrap();
        assert!(matches!(
            check_eps_regular_exact(&g, (0, 1), &rat(1, 2)),
            Err(RegularityError::SideTooLargeForExact { size: 15, .. })
        ));
    }

    #[test]
    fn witness_search_agrees_with_exact_on_matching() {
        let g = matching(4);
        let v = witness_search(
            &g,
            (0, 1),
            &rat(1, 2),
            RegularityGoal::EpsRegular,
            200,
            &RngSpec::new(1, 0),
        )
        .unwrap();
        let w = v.witness().expect("generous budget should find a witness");
        let d = g.pair_density(0, 1).unwrap();
        let dv = density(&g, (0, 1), &w.side1, &w.side2).unwrap();
        assert!((dv - &d).abs() > rat(1, 2) * d);
    }

    #[test]
    fn witness_search_on_complete_pair_finds_nothing() {
        let g = complete_pair(5, 5);
        let v = witness_search(
            &g,
            (0, 1),
            &rat(1, 3),
            RegularityGoal::EpsRegular,
            50,
            &RngSpec::new(7, 0),
        )
        .unwrap();
        assert!(matches!(v, RegularityVerdict::NoWitnessFound { .. }));
    }

    #[test]
    fn witness_search_budget_one_is_legal() {
        let g = matching(6);
        let v = witness_search(
            &g,
            (0, 1),
            &rat(1, 100),
            RegularityGoal::EpsRegular,
            1,
            &RngSpec::new(3, 0),
        )
        .unwrap();
        assert!(!v.is_certified());
    }

    #[test]
    fn degree_report_complete_pair() {
        let g = complete_pair(4, 4);
        let full = Bitset::full(4);
        let (below, above) =
            degree_deviation_report(&g, (0, 1), &rat(1, 4), &rat(1, 1), &full).unwrap();
        assert_eq!((below, above), (0, 0));
    }

    #[test]
    fn degree_report_matching_matches_direct_loop() {
        let g = matching(4);
        let full = Bitset::full(4);
        let (below, above) =
            degree_deviation_report(&g, (0, 1), &rat(1, 4), &rat(1, 4), &full).unwrap();
        // Every vertex has degree 1; window is [3/4, 5/4].
        assert_eq!((below, above), (0, 0));
        let (below, above) =
            degree_deviation_report(&g, (0, 1), &rat(1, 4), &rat(3, 4), &full).unwrap();
        // Window becomes [9/4, 15/4]; all degrees fall below.
        assert_eq!((below, above), (4, 0));
    }

    #[test]
    fn degree_report_subset_too_small() {
        let g = complete_pair(4, 4);
        let sub = Bitset::new(4);
        assert!(matches!(
            degree_deviation_report(&g, (0, 1), &rat(1, 2), &rat(1, 1), &sub),
            Err(RegularityError::SubsetTooSmall { .. })
        ));
    }

    #[test]
    fn inherited_params_formula() {
        assert_eq!(
            inherited_regularity_params(&rat(1, 10), &rat(1, 2)).unwrap(),
            rat(2, 9)
        );
        // alpha = 1: the 2eps/(1-eps) branch dominates.
        assert_eq!(
            inherited_regularity_params(&rat(1, 10), &rat(1, 1)).unwrap(),
            rat(2, 9)
        );
        assert!(matches!(
            inherited_regularity_params(&rat(1, 10), &rat(1, 20)),
            Err(RegularityError::ParameterOrderViolation)
        ));
    }

    /// On small pairs the falsifier must never contradict the exact
    /// checker: a certified pair yields no witness, and any witness it
    /// does return re-checks against the definition.
    #[test]
    fn witness_search_is_sound_against_exact() {
        use crate::sampling::sample_bipartite_exact_m;
        for seed in 0..60u64 {
            let spec = RngSpec::new(7000 + seed, 0);
            let m = (seed % 37) as usize;
            let edges = sample_bipartite_exact_m(6, 6, m, &mut spec.rng()).unwrap();
            let g = ClassedGraph::bipartite(6, 6, &edges).unwrap();
            for eps in [rat(1, 3), rat(1, 2)] {
                let exact = check_eps_regular_exact(&g, (0, 1), &eps).unwrap();
                let searched = witness_search(
                    &g,
                    (0, 1),
                    &eps,
                    RegularityGoal::EpsRegular,
                    30,
                    &spec.with_stream(9),
                )
                .unwrap();
                match &searched {
                    RegularityVerdict::WitnessViolation { witness, .. } => {
                        assert!(!exact.is_certified(), "false witness at seed {seed}");
                        let d = g.pair_density(0, 1).unwrap();
                        let dv = density(&g, (0, 1), &witness.side1, &witness.side2).unwrap();
                        assert!((dv - &d).abs() > &eps * d);
                    }
                    RegularityVerdict::NoWitnessFound { .. } => {}
                    RegularityVerdict::CertifiedRegular { .. } => {
                        panic!("falsifier may never certify")
                    }
                }
            }
        }
    }

    #[test]
    fn witness_search_finds_lower_violation_on_matching() {
        let g = matching(4);
        let v = witness_search(
            &g,
            (0, 1),
            &rat(1, 4),
            RegularityGoal::LowerRegular { density: rat(1, 4) },
            100,
            &RngSpec::new(5, 0),
        )
        .unwrap();
        let w = v.witness().expect("violation expected");
        let dv = density(&g, (0, 1), &w.side1, &w.side2).unwrap();
        assert!(dv < rat(3, 4) * rat(1, 4));
    }

    /// Large sub-sides of a certified pair inherit regularity at the
    /// max(eps/alpha, 2eps/(1-eps)) parameter with density within a
    /// (1 +- eps) window; enumerated exhaustively on small instances.
    #[test]
    fn inheritance_property_on_certified_pairs() {
        use crate::sampling::sample_bipartite_exact_m;
        let eps = rat(1, 4);
        let alpha = rat(1, 2);
        let eps_prime = inherited_regularity_params(&eps, &alpha).unwrap();
        let (n1, n2) = (6usize, 6usize);
        let mut found = 0;
        let mut seed = 0u64;
        while found < 5 {
            seed += 1;
            assert!(seed < 50_000, "generation stalled");
            let spec = RngSpec::new(seed, 0);
            let m = 36 - (seed % 2) as usize;
            let edges = sample_bipartite_exact_m(n1, n2, m, &mut spec.rng()).unwrap();
            let g = ClassedGraph::bipartite(n1, n2, &edges).unwrap();
            if !check_eps_regular_exact(&g, (0, 1), &eps).unwrap().is_certified() {
                continue;
            }
            found += 1;
            let d = g.pair_density(0, 1).unwrap();
            let view = g.pair_view(0, 1).unwrap();
            let min_size = 3; // alpha * n1
            for mask in 1u32..(1 << n1) {
                let s = mask.count_ones() as usize;
                if s < min_size {
                    continue;
                }
                let keep: Vec<usize> = (0..n1).filter(|&v| mask >> v & 1 == 1).collect();
                let mut edges = Vec::new();
                for (new_i, &old) in keep.iter().enumerate() {
                    for b in view.rows[old].ones() {
                        edges.push((new_i, b));
                    }
                }
                let sub = ClassedGraph::bipartite(s, n2, &edges).unwrap();
                assert!(
                    check_eps_regular_exact(&sub, (0, 1), &eps_prime)
                        .unwrap()
                        .is_certified(),
                    "sub-side {keep:?} fails at inherited eps"
                );
                let ds = sub.pair_density(0, 1).unwrap();
                let one = Rational::one();
                assert!(ds >= (&one - &eps) * &d && ds <= (&one + &eps) * &d);
            }
        }
    }

    #[test]
    fn certified_stays_certified_as_eps_grows() {
        // Near-complete pair: certified at a small eps, so it must remain
        // certified at any larger eps.
        let edges: Vec<(usize, usize)> = (0..5)
            .flat_map(|a| (0..5).map(move |b| (a, b)))
            .filter(|&(a, b)| !(a == 0 && b == 0))
            .collect();
        let g = ClassedGraph::bipartite(5, 5, &edges).unwrap();
        let mut certified_before = false;
        for eps in [rat(1, 3), rat(1, 2), rat(2, 3), rat(9, 10)] {
            let v = check_eps_regular_exact(&g, (0, 1), &eps).unwrap();
            if certified_before {
                assert!(v.is_certified(), "monotonicity broken at eps={eps}");
            }
            certified_before |= v.is_certified();
        }
        assert!(certified_before);
    }
}
