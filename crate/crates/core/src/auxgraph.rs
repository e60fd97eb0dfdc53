//! Path-aux graphs: the bipartite graph between an anchor class `X1` and
//! the product set `Y = X2 x X3` whose edges are the two-edge paths
//! `x2 - x1 - x3`. Its `X1`-degrees factor as neighborhood-size products,
//! and its edges against an `X2`-`X3` edge set count canonical triangles.

use crate::bitset::Bitset;
use crate::model::{ClassedGraph, ModelError, PairView};
use crate::rational::Rational;
use crate::regularity::{
    check_lower_regular_exact_view, witness_search_view, CheckMode, RegularityError,
    RegularityGoal, RegularityVerdict, EXACT_SIDE_CAP,
};
use crate::sampling::RngSpec;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AuxError {
    #[error("pattern has no edge between classes {a} and {b}")]
    MissingPatternEdge { a: usize, b: usize },
    #[error("edge set ranges over {got} product indices, expected {expected}")]
    IndexOutOfRange { got: usize, expected: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
}

/// Bipartite graph between `X1` (size `n1`) and `Y = X2 x X3` with the
/// fixed product encoding `y = x2 * n3 + x3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxGraph {
    n1: usize,
    n2: usize,
    n3: usize,
    rows: Vec<Bitset>,
    cols: Vec<Bitset>,
    edge_count: usize,
}

impl AuxGraph {
    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    #[inline]
    pub fn n3(&self) -> usize {
        self.n3
    }

    /// Size of the product side.
    #[inline]
    pub fn y_size(&self) -> usize {
        self.n2 * self.n3
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Product index of `(x2, x3)`.
    #[inline]
    pub fn y_index(&self, x2: usize, x3: usize) -> usize {
        debug_assert!(x2 < self.n2 && x3 < self.n3);
        x2 * self.n3 + x3
    }

    /// Inverse of [`AuxGraph::y_index`]; lets witnesses over `Y` be decoded
    /// into `(x2, x3)` pairs.
    #[inline]
    pub fn decode_y(&self, y: usize) -> (usize, usize) {
        debug_assert!(y < self.y_size());
        (y / self.n3, y % self.n3)
    }

    pub fn degree(&self, x1: usize) -> usize {
        self.rows[x1].count_ones()
    }

    /// The aux graph flattened into an ordinary bipartite pair
    /// `(X1, Y)` for the regularity machinery.
    pub fn pair_view(&self) -> PairView<'_> {
        PairView {
            n1: self.n1,
            n2: self.y_size(),
            rows: &self.rows,
            cols: &self.cols,
            edge_count: self.edge_count,
        }
    }
}

/// Builds the path-aux graph of `g` between the anchor class and the
/// product of the `left` and `right` classes: `(x1, (x2, x3))` is an aux
/// edge iff `x1 x2` and `x1 x3` are edges of the corresponding pairs.
pub fn build_path_aux(
    g: &ClassedGraph,
    anchor: usize,
    left: usize,
    right: usize,
) -> Result<AuxGraph, AuxError> {
    for &c in &[left, right] {
        if !g.pattern().contains_edge(anchor, c) {
            return Err(AuxError::MissingPatternEdge { a: anchor, b: c });
        }
    }
    let n1 = g.size(anchor)?;
    let n2 = g.size(left)?;
    let n3 = g.size(right)?;
    let y = n2 * n3;
    let mut rows = vec![Bitset::new(y); n1];
    let mut cols = vec![Bitset::new(n1); y];
    let mut edge_count = 0usize;
    for x1 in 0..n1 {
        let gl = g.neighbors(anchor, left, x1)?;
        let gr = g.neighbors(anchor, right, x1)?;
        for x2 in gl.ones() {
            for x3 in gr.ones() {
                let yi = x2 * n3 + x3;
                rows[x1].set(yi);
                cols[yi].set(x1);
            }
        }
        edge_count += gl.count_ones() * gr.count_ones();
    }
    Ok(AuxGraph {
        n1,
        n2,
        n3,
        rows,
        cols,
        edge_count,
    })
}

/// Lower-regularity of the flattened pair `(X1, Y)` at `(eps', d_target)`;
/// `d_target` is meant to be the product of the two source pair densities.
/// Exact mode requires `n1 <= 14` and `n2 * n3 <= 14`.
pub fn aux_lower_regularity(
    aux: &AuxGraph,
    eps_prime: &Rational,
    d_target: &Rational,
    mode: &CheckMode,
    rng_spec: &RngSpec,
) -> Result<RegularityVerdict, AuxError> {
    let view = aux.pair_view();
    match mode {
        CheckMode::Exact => {
            if view.n1 > EXACT_SIDE_CAP || view.n2 > EXACT_SIDE_CAP {
                return Err(RegularityError::SideTooLargeForExact {
                    size: view.n1.max(view.n2),
                    cap: EXACT_SIDE_CAP,
                }
                .into());
            }
            Ok(check_lower_regular_exact_view(&view, eps_prime, d_target)?)
        }
        CheckMode::Witness { budget } => Ok(witness_search_view(
            &view,
            eps_prime,
            RegularityGoal::LowerRegular {
                density: d_target.clone(),
            },
            *budget,
            rng_spec,
        )?),
    }
}

#[derive(Clone, Debug)]
pub struct TriangleCounts {
    /// `counts[x1] = |Γ_A(x1) ∩ edge_set_23|`.
    pub counts: Vec<u64>,
    pub total: u64,
}

/// Per-anchor-vertex counts of aux neighbors inside an `X2`-`X3` edge set
/// (given over product indices). The total equals the canonical triangle
/// count of the tripartite graph assembled from the two source pairs plus
/// that edge set.
pub fn triangles_through_aux(
    aux: &AuxGraph,
    edge_set_23: &Bitset,
) -> Result<TriangleCounts, AuxError> {
    if edge_set_23.nbits() != aux.y_size() {
        return Err(AuxError::IndexOutOfRange {
            got: edge_set_23.nbits(),
            expected: aux.y_size(),
        });
    }
    let counts: Vec<u64> = aux
        .rows
        .iter()
        .map(|r| r.intersection_count(edge_set_23) as u64)
        .collect();
    let total = counts.iter().sum();
    Ok(TriangleCounts { counts, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PatternGraph;
    use crate::rational::rat;
    use num::One;

    fn cherry_pattern() -> PatternGraph {
        // Classes 0, 1, 2 with edges (0,1) and (0,2) only.
        PatternGraph::new(3, &[(0, 1), (0, 2)]).unwrap()
    }

    #[test]
    fn complete_sources_give_complete_aux() {
        let g = ClassedGraph::complete(cherry_pattern(), vec![3, 2, 4]).unwrap();
        let aux = build_path_aux(&g, 0, 1, 2).unwrap();
        assert_eq!(aux.edge_count(), 3 * 2 * 4);
        for x1 in 0..3 {
            assert_eq!(aux.degree(x1), 8);
        }
    }

    #[test]
    fn definition_unrolled() {
        // x1 = 0 with left neighborhood {1} and right neighborhood {0, 2}.
        let g = ClassedGraph::new(
            cherry_pattern(),
            vec![1, 2, 3],
            &[vec![(0, 1)], vec![(0, 0), (0, 2)]],
        )
        .unwrap();
        let aux = build_path_aux(&g, 0, 1, 2).unwrap();
        assert_eq!(aux.edge_count(), 2);
        let expected = [aux.y_index(1, 0), aux.y_index(1, 2)];
        assert_eq!(aux.rows[0].indices(), expected.to_vec());
        assert_eq!(aux.decode_y(aux.y_index(1, 2)), (1, 2));
    }

    #[test]
    fn missing_pattern_edge_rejected() {
        let pattern = PatternGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let g = ClassedGraph::complete(pattern, vec![2, 2, 2]).unwrap();
        assert!(matches!(
            build_path_aux(&g, 0, 1, 2),
            Err(AuxError::MissingPatternEdge { a: 0, b: 2 })
        ));
    }

    #[test]
    fn degree_product_identity_random() {
        let spec = crate::sampling::RngSpec::new(31, 0);
        let g = crate::sampling::sample_blowup(&cherry_pattern(), &[4, 4, 4], &[9, 7], &spec)
            .unwrap();
        let aux = build_path_aux(&g, 0, 1, 2).unwrap();
        let mut brute = 0usize;
        for x1 in 0..4 {
            let dl = g.neighbors(0, 1, x1).unwrap().count_ones();
            let dr = g.neighbors(0, 2, x1).unwrap().count_ones();
            assert_eq!(aux.degree(x1), dl * dr);
            brute += dl * dr;
        }
        assert_eq!(aux.edge_count(), brute);
    }

    #[test]
    fn complete_aux_is_lower_regular() {
        let g = ClassedGraph::complete(cherry_pattern(), vec![3, 2, 2]).unwrap();
        let aux = build_path_aux(&g, 0, 1, 2).unwrap();
        let v = aux_lower_regularity(
            &aux,
            &rat(1, 2),
            &Rational::one(),
            &CheckMode::Exact,
            &RngSpec::new(0, 0),
        )
        .unwrap();
        assert!(v.is_certified());
    }

    #[test]
    fn exact_mode_respects_product_cap() {
        let g = ClassedGraph::complete(cherry_pattern(), vec![4, 8, 8]).unwrap();
        let aux = build_path_aux(&g, 0, 1, 2).unwrap();
        let err = aux_lower_regularity(
            &aux,
            &rat(1, 2),
            &Rational::one(),
            &CheckMode::Exact,
            &RngSpec::new(0, 0),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            AuxError::Regularity(RegularityError::SideTooLargeForExact { size: 64, .. })
        ));
    }

    #[test]
    fn exact_mode_matches_flattened_lower_check() {
        use crate::regularity::check_lower_regular_exact_view;
        for seed in 0..10u64 {
            let spec = crate::sampling::RngSpec::new(100 + seed, 0);
            let g =
                crate::sampling::sample_blowup(&cherry_pattern(), &[4, 3, 4], &[7, 9], &spec)
                    .unwrap();
            let aux = build_path_aux(&g, 0, 1, 2).unwrap();
            let target = rat(1, 4);
            let direct = check_lower_regular_exact_view(&aux.pair_view(), &rat(1, 2), &target)
                .unwrap();
            let via_mode = aux_lower_regularity(
                &aux,
                &rat(1, 2),
                &target,
                &CheckMode::Exact,
                &RngSpec::new(0, 0),
            )
            .unwrap();
            assert_eq!(direct.is_certified(), via_mode.is_certified());
            assert_eq!(direct.is_violation(), via_mode.is_violation());
        }
    }

    #[test]
    fn triangle_counts_trivial_cases() {
        let g = ClassedGraph::complete(cherry_pattern(), vec![3, 2, 2]).unwrap();
        let aux = build_path_aux(&g, 0, 1, 2).unwrap();
        let empty = Bitset::new(aux.y_size());
        let t = triangles_through_aux(&aux, &empty).unwrap();
        assert_eq!(t.total, 0);
        assert!(t.counts.iter().all(|&c| c == 0));
        let full = Bitset::full(aux.y_size());
        let t = triangles_through_aux(&aux, &full).unwrap();
        assert_eq!(t.total, (3 * 2 * 2) as u64);
        assert!(t.counts.iter().all(|&c| c == 4));
    }
}
