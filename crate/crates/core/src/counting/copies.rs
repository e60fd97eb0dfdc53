//! Canonical copy counting by bit-vector backtracking, per-vertex and
//! per-edge copy degrees, expected counts, and the bad-instance and
//! bad-family membership predicates.

use super::CountingError;
use crate::bitset::Bitset;
use crate::model::{ClassedGraph, DensityMatrix, ModelError, PatternGraph};
use crate::rational::{rational_from_usize, Rational};
use num::bigint::{BigInt, BigUint};
use num::{One, Zero};

/// Exact canonical copy count, optionally with one per-vertex or per-edge
/// breakdown attached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyCount {
    pub total: BigUint,
    pub per_vertex: Option<PerVertexBreakdown>,
    pub per_edge: Option<PerEdgeBreakdown>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerVertexBreakdown {
    pub class: usize,
    pub counts: Vec<BigUint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerEdgeBreakdown {
    pub pair: (usize, usize),
    pub edges: Vec<((usize, usize), BigUint)>,
}

// ============================================================================
// Backtracking core
// ============================================================================

/// One adjacency constraint on the vertex placed at a given search depth,
/// coming from an already-placed pattern neighbor.
struct Constraint {
    earlier_depth: usize,
    /// Classes of the earlier vertex and of the vertex being placed.
    from_class: usize,
    to_class: usize,
}

struct SearchPlan {
    /// Search order as pattern vertices; pinned vertices come first.
    order: Vec<usize>,
    constraints: Vec<Vec<Constraint>>,
    pins: Vec<Option<usize>>,
}

fn validate_pattern(
    g: &ClassedGraph,
    h: &PatternGraph,
    skip_edge: Option<(usize, usize)>,
) -> Result<(), CountingError> {
    if h.ell() != g.class_count() {
        return Err(CountingError::PatternMismatch(format!(
            "pattern has {} vertices, graph has {} classes",
            h.ell(),
            g.class_count()
        )));
    }
    for &(x, y) in h.edges() {
        if skip_edge.is_some_and(|(sx, sy)| (sx, sy) == (x, y) || (sy, sx) == (x, y)) {
            continue;
        }
        if !g.pattern().contains_edge(x, y) {
            return Err(CountingError::PatternMismatch(format!(
                "pattern edge ({x}, {y}) is not a pair of the graph"
            )));
        }
    }
    Ok(())
}

fn build_plan(
    g: &ClassedGraph,
    h: &PatternGraph,
    pins: &[(usize, usize)],
    skip_edge: Option<(usize, usize)>,
) -> Result<SearchPlan, CountingError> {
    validate_pattern(g, h, skip_edge)?;
    let ell = h.ell();
    let mut pin_of = vec![None; ell];
    for &(class, v) in pins {
        if class >= ell {
            return Err(ModelError::ClassOutOfRange {
                class,
                classes: ell,
            }
            .into());
        }
        let size = g.size(class)?;
        if v >= size {
            return Err(ModelError::IndexOutOfRange {
                class,
                vertex: v,
                size,
            }
            .into());
        }
        pin_of[class] = Some(v);
    }
    // Pinned vertices first (early pruning), then descending pattern degree.
    let mut order: Vec<usize> = (0..ell).collect();
    order.sort_by_key(|&v| {
        (
            if pin_of[v].is_some() { 0usize } else { 1 },
            usize::MAX - h.degree(v),
            v,
        )
    });
    let depth_of = {
        let mut d = vec![0usize; ell];
        for (depth, &v) in order.iter().enumerate() {
            d[v] = depth;
        }
        d
    };
    let mut constraints: Vec<Vec<Constraint>> = (0..ell).map(|_| Vec::new()).collect();
    for &(x, y) in h.edges() {
        if skip_edge.is_some_and(|(sx, sy)| (sx, sy) == (x, y) || (sy, sx) == (x, y)) {
            continue;
        }
        let (dx, dy) = (depth_of[x], depth_of[y]);
        let (early, late) = if dx < dy { (x, y) } else { (y, x) };
        constraints[depth_of[late]].push(Constraint {
            earlier_depth: depth_of[early],
            from_class: early,
            to_class: late,
        });
    }
    Ok(SearchPlan {
        order,
        constraints,
        pins: pin_of,
    })
}

fn count_with_plan(g: &ClassedGraph, plan: &SearchPlan) -> BigUint {
    let ell = plan.order.len();
    let mut scratch: Vec<Bitset> = plan
        .order
        .iter()
        .map(|&v| Bitset::new(g.sizes()[v]))
        .collect();
    let mut assigned = vec![0usize; ell];
    let mut total = BigUint::zero();
    fn recurse(
        g: &ClassedGraph,
        plan: &SearchPlan,
        depth: usize,
        assigned: &mut [usize],
        scratch: &mut [Bitset],
        total: &mut BigUint,
    ) {
        let pattern_vertex = plan.order[depth];
        let size = g.sizes()[pattern_vertex];
        // Candidate set: the pin or the full class, intersected with the
        // neighborhoods of all already-placed pattern neighbors.
        let cand = &mut scratch[depth];
        match plan.pins[pattern_vertex] {
            Some(v) => {
                let mut single = Bitset::new(size);
                single.set(v);
                cand.copy_from(&single);
            }
            None => cand.copy_from(&Bitset::full(size)),
        }
        for c in &plan.constraints[depth] {
            let placed = assigned[c.earlier_depth];
            let nb = g
                .neighbors(c.from_class, c.to_class, placed)
                .expect("validated pattern edge");
            cand.and_assign(nb);
        }
        if depth + 1 == plan.order.len() {
            *total += cand.count_ones() as u64;
            return;
        }
        let cand = cand.clone();
        for v in cand.ones() {
            assigned[depth] = v;
            recurse(g, plan, depth + 1, assigned, scratch, total);
        }
    }
    recurse(g, plan, 0, &mut assigned, &mut scratch, &mut total);
    total
}

fn count_pinned(
    g: &ClassedGraph,
    h: &PatternGraph,
    pins: &[(usize, usize)],
    skip_edge: Option<(usize, usize)>,
) -> Result<BigUint, CountingError> {
    let plan = build_plan(g, h, pins, skip_edge)?;
    Ok(count_with_plan(g, &plan))
}

// ============================================================================
// Public counting API
// ============================================================================

/// Number of canonical copies of `h` in `g`: tuples with one vertex per
/// class realizing every edge of `h`. Pattern vertices are searched in
/// descending `h`-degree order with incrementally intersected candidate
/// bit vectors.
pub fn count_canonical(g: &ClassedGraph, h: &PatternGraph) -> Result<CopyCount, CountingError> {
    Ok(CopyCount {
        total: count_pinned(g, h, &[], None)?,
        per_vertex: None,
        per_edge: None,
    })
}

/// Copies containing the given vertex.
pub fn deg_vertex(
    g: &ClassedGraph,
    h: &PatternGraph,
    class: usize,
    v: usize,
) -> Result<BigUint, CountingError> {
    count_pinned(g, h, &[(class, v)], None)
}

/// Copies containing the given present edge of pair `(x, y)`; the edge must
/// exist in `g` (see [`deg_edge_potential`] for the if-added variant).
pub fn deg_edge(
    g: &ClassedGraph,
    h: &PatternGraph,
    pair: (usize, usize),
    e: (usize, usize),
) -> Result<BigUint, CountingError> {
    let (x, y) = if pair.0 < pair.1 {
        pair
    } else {
        (pair.1, pair.0)
    };
    if !g.has_edge(x, y, e.0, e.1)? {
        return Err(CountingError::EdgeAbsent {
            x,
            y,
            a: e.0,
            b: e.1,
        });
    }
    count_pinned(g, h, &[(x, e.0), (y, e.1)], None)
}

/// Copies that the pair `(e.0, e.1)` would belong to if the edge were
/// present: the `h`-edge between classes `x` and `y` (if any) is treated as
/// satisfied by the hypothetical edge, so the pair `(x, y)` need not even
/// be a pattern pair of `g`.
pub fn deg_edge_potential(
    g: &ClassedGraph,
    h: &PatternGraph,
    pair: (usize, usize),
    e: (usize, usize),
) -> Result<BigUint, CountingError> {
    let (x, y) = if pair.0 < pair.1 {
        pair
    } else {
        (pair.1, pair.0)
    };
    count_pinned(g, h, &[(x, e.0), (y, e.1)], Some((x, y)))
}

/// Per-vertex copy degrees over one class; sums to the total count.
pub fn per_vertex_counts(
    g: &ClassedGraph,
    h: &PatternGraph,
    class: usize,
) -> Result<Vec<BigUint>, CountingError> {
    let n = g.size(class)?;
    (0..n).map(|v| deg_vertex(g, h, class, v)).collect()
}

/// Per-edge copy degrees over one pattern pair of `h`; sums to the total
/// count since every copy uses exactly one edge of that pair.
pub fn per_edge_counts(
    g: &ClassedGraph,
    h: &PatternGraph,
    pair: (usize, usize),
) -> Result<Vec<((usize, usize), BigUint)>, CountingError> {
    let (x, y) = if pair.0 < pair.1 {
        pair
    } else {
        (pair.1, pair.0)
    };
    if !h.contains_edge(x, y) {
        return Err(CountingError::PatternMismatch(format!(
            "pair ({x}, {y}) is not an edge of the counted pattern"
        )));
    }
    g.pair_edges(x, y)?
        .into_iter()
        .map(|e| deg_edge(g, h, (x, y), e).map(|c| (e, c)))
        .collect()
}

// ============================================================================
// Expected counts and badness
// ============================================================================

/// `prod_x n_x * prod_{(x,y) in E(H)} D_{x,y}` as an exact rational.
pub fn expected_count(
    h: &PatternGraph,
    sizes: &[usize],
    d: &DensityMatrix,
) -> Result<Rational, CountingError> {
    let mut acc = Rational::one();
    for &n in sizes {
        acc *= rational_from_usize(n);
    }
    for &(x, y) in h.edges() {
        acc *= d.get(x, y)?;
    }
    Ok(acc)
}

/// Uniform specialization `n^{|V(H)|} (m / n^2)^{|E(H)|}`.
pub fn expected_count_uniform(h: &PatternGraph, n: usize, m: usize) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..h.ell() {
        acc *= rational_from_usize(n);
    }
    let d = Rational::new(BigInt::from(m), BigInt::from((n as u64) * (n as u64)));
    for _ in 0..h.edge_count() {
        acc *= &d;
    }
    acc
}

/// Strict comparison `count < (1 - delta) * expected`.
pub fn is_bad_count(count: &BigUint, expected: &Rational, delta: &Rational) -> bool {
    let c = Rational::from_integer(BigInt::from(count.clone()));
    c < (Rational::one() - delta) * expected
}

/// Does `g` contain fewer than `(1 - delta)` times the expected number of
/// canonical copies of `h`? The expectation uses `g`'s empirical pair
/// densities, which reduces to the uniform formula in the equal-size,
/// equal-m setting.
pub fn is_bad_instance(
    g: &ClassedGraph,
    h: &PatternGraph,
    delta: &Rational,
) -> Result<bool, CountingError> {
    let count = count_canonical(g, h)?.total;
    let mut expected = Rational::one();
    for &n in g.sizes() {
        expected *= rational_from_usize(n);
    }
    for &(x, y) in h.edges() {
        expected *= g.pair_density(x, y)?;
    }
    Ok(is_bad_count(&count, &expected, delta))
}

/// Membership in the bad tripartite family: at least `delta * n1` vertices
/// of the first class lie in at most
/// `(1 - delta) * n2 * n3 * D12 * D13 * D23` canonical triangles.
pub fn bad_family_b3(
    g: &ClassedGraph,
    delta: &Rational,
    d: &DensityMatrix,
) -> Result<bool, CountingError> {
    let k3 = PatternGraph::complete(3);
    if g.class_count() != 3 || g.pattern() != &k3 {
        return Err(CountingError::PatternMismatch(
            "bad-family membership needs a tripartite triangle blow-up".into(),
        ));
    }
    let (n1, n2, n3) = (g.sizes()[0], g.sizes()[1], g.sizes()[2]);
    let threshold = (Rational::one() - delta)
        * rational_from_usize(n2)
        * rational_from_usize(n3)
        * d.get(0, 1)?
        * d.get(0, 2)?
        * d.get(1, 2)?;
    let low = per_vertex_counts(g, &k3, 0)?
        .into_iter()
        .filter(|c| Rational::from_integer(BigInt::from(c.clone())) <= threshold)
        .count();
    Ok(rational_from_usize(low) >= delta * rational_from_usize(n1))
}

// ============================================================================
// Tests
// ============================================================================
