//! Pattern graphs and blow-up instances.
//!
//! A blow-up instance ([`ClassedGraph`]) has one vertex class per pattern
//! vertex and a bipartite edge set for every pattern edge, stored as bit
//! vectors in both orientations. Classes are 0-based throughout the API;
//! the text format labels classes 1-based (see [`parse_graph_file`]).

use crate::bitset::Bitset;
use crate::rational::Rational;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("class index {class} out of range ({classes} classes)")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("vertex {vertex} out of range for class {class} of size {size}")]
    IndexOutOfRange {
        class: usize,
        vertex: usize,
        size: usize,
    },
    #[error("duplicate edge ({a}, {b}) in pair ({x}, {y})")]
    DuplicateEdge {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
    },
    #[error("pair ({x}, {y}) is not an edge of the pattern")]
    EdgeOnNonPatternPair { x: usize, y: usize },
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("restricted class {class} has no pattern edge to anchor class {anchor}")]
    AnchorNotAdjacent { class: usize, anchor: usize },
    #[error("class sets passed to a restriction must be disjoint and exclude the anchor")]
    OverlappingClassSets,
    #[error("density entry ({x}, {y}) must lie in (0, 1]")]
    DensityOutOfRange { x: usize, y: usize },
    #[error("missing density entry for pair ({x}, {y})")]
    MissingDensity { x: usize, y: usize },
}

// ============================================================================
// PatternGraph
// ============================================================================

/// The template graph `H` on vertices `0..ell`, edges stored sorted as
/// `(x, y)` with `x < y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternGraph {
    ell: usize,
    edges: Vec<(usize, usize)>,
}

impl PatternGraph {
    pub fn new(ell: usize, edges: &[(usize, usize)]) -> Result<Self, ModelError> {
        if ell == 0 {
            return Err(ModelError::InvalidPattern(
                "pattern needs at least one vertex".into(),
            ));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(ModelError::InvalidPattern(format!("loop at vertex {a}")));
            }
            let (x, y) = if a < b { (a, b) } else { (b, a) };
            if y >= ell {
                return Err(ModelError::ClassOutOfRange {
                    class: y,
                    classes: ell,
                });
            }
            norm.push((x, y));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::InvalidPattern("duplicate pattern edge".into()));
        }
        Ok(PatternGraph { ell, edges: norm })
    }

    /// `K_ell`.
    pub fn complete(ell: usize) -> Self {
        let edges: Vec<_> = (0..ell)
            .flat_map(|x| ((x + 1)..ell).map(move |y| (x, y)))
            .collect();
        PatternGraph { ell, edges }
    }

    /// `K_4` minus the `(0, 1)` pair.
    pub fn k4_minus_e() -> Self {
        PatternGraph::new(4, &[(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    /// Named selectors used by the CLI and experiment configs: `K2..K9`
    /// plus `K4e`.
    pub fn from_name(name: &str) -> Option<Self> {
        if name.eq_ignore_ascii_case("k4e") {
            return Some(Self::k4_minus_e());
        }
        let rest = name.strip_prefix('K').or_else(|| name.strip_prefix('k'))?;
        let ell: usize = rest.parse().ok()?;
        if (2..=9).contains(&ell) {
            Some(Self::complete(ell))
        } else {
            None
        }
    }

    #[inline]
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Position of `(x, y)` (any order) in the sorted edge list.
    pub fn edge_index(&self, x: usize, y: usize) -> Option<usize> {
        let key = if x < y { (x, y) } else { (y, x) };
        self.edges.binary_search(&key).ok()
    }

    pub fn contains_edge(&self, x: usize, y: usize) -> bool {
        self.edge_index(x, y).is_some()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(x, y)| x == v || y == v)
            .count()
    }

    /// Pattern induced on a subset of vertices; `keep` maps new index ->
    /// old index and must be strictly increasing.
    pub fn induced(&self, keep: &[usize]) -> Result<Self, ModelError> {
        let mut back = vec![usize::MAX; self.ell];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.ell {
                return Err(ModelError::ClassOutOfRange {
                    class: old,
                    classes: self.ell,
                });
            }
            back[old] = new;
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|&&(x, y)| back[x] != usize::MAX && back[y] != usize::MAX)
            .map(|&(x, y)| (back[x], back[y]))
            .collect();
        PatternGraph::new(keep.len(), &edges)
    }
}

// ============================================================================
// DensityMatrix
// ============================================================================

/// Symmetric matrix of exact pair densities in `(0, 1]`; diagonal unused.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    ell: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl DensityMatrix {
    pub fn uniform(ell: usize, d: &Rational) -> Result<Self, ModelError> {
        let mut m = DensityMatrix {
            ell,
            entries: BTreeMap::new(),
        };
        for x in 0..ell {
            for y in (x + 1)..ell {
                m.insert(x, y, d.clone())?;
            }
        }
        Ok(m)
    }

    pub fn from_pairs(
        ell: usize,
        pairs: &[((usize, usize), Rational)],
    ) -> Result<Self, ModelError> {
        let mut m = DensityMatrix {
            ell,
            entries: BTreeMap::new(),
        };
        for ((x, y), d) in pairs {
            m.insert(*x, *y, d.clone())?;
        }
        Ok(m)
    }

    fn insert(&mut self, x: usize, y: usize, d: Rational) -> Result<(), ModelError> {
        use num::{One, Signed};
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        if y >= self.ell || x == y {
            return Err(ModelError::ClassOutOfRange {
                class: y,
                classes: self.ell,
            });
        }
        if !d.is_positive() || d > Rational::one() {
            return Err(ModelError::DensityOutOfRange { x, y });
        }
        self.entries.insert((x, y), d);
        Ok(())
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn get(&self, x: usize, y: usize) -> Result<&Rational, ModelError> {
        let key = if x < y { (x, y) } else { (y, x) };
        self.entries
            .get(&key)
            .ok_or(ModelError::MissingDensity { x: key.0, y: key.1 })
    }
}

// ============================================================================
// ClassedGraph
// ============================================================================

/// Adjacency of one pattern edge `(x, y)` with `x < y`: `rows[v]` is the
/// neighborhood of `v in V_x` inside `V_y`, `cols[w]` the reverse.
#[derive(Clone, Debug, PartialEq, Eq)]
struct PairAdjacency {
    rows: Vec<Bitset>,
    cols: Vec<Bitset>,
    edge_count: usize,
}

/// A blow-up instance: vertex classes sized by `sizes` and one bipartite
/// graph per pattern edge. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassedGraph {
    pattern: PatternGraph,
    sizes: Vec<usize>,
    pairs: Vec<PairAdjacency>,
}

/// Borrowed view of one bipartite pair; the unit that regularity checkers
/// operate on (also produced by the aux-graph flattening).
#[derive(Clone, Copy)]
pub struct PairView<'a> {
    pub n1: usize,
    pub n2: usize,
    pub rows: &'a [Bitset],
    pub cols: &'a [Bitset],
    pub edge_count: usize,
}

impl<'a> PairView<'a> {
    /// `m / (n1 * n2)` as an exact rational; zero for degenerate sides.
    pub fn density(&self) -> Rational {
        if self.n1 == 0 || self.n2 == 0 {
            return Rational::from_integer(0.into());
        }
        Rational::new(
            self.edge_count.into(),
            (self.n1 as u64 * self.n2 as u64).into(),
        )
    }
}

impl ClassedGraph {
    /// Builds and validates an instance from per-pattern-edge index pairs.
    /// `edge_lists` is parallel to `pattern.edges()`.
    pub fn new(
        pattern: PatternGraph,
        sizes: Vec<usize>,
        edge_lists: &[Vec<(usize, usize)>],
    ) -> Result<Self, ModelError> {
        if sizes.len() != pattern.ell() {
            return Err(ModelError::InvalidPattern(format!(
                "{} sizes for {} classes",
                sizes.len(),
                pattern.ell()
            )));
        }
        if edge_lists.len() != pattern.edge_count() {
            return Err(ModelError::InvalidPattern(format!(
                "{} edge lists for {} pattern edges",
                edge_lists.len(),
                pattern.edge_count()
            )));
        }
        let mut pairs = Vec::with_capacity(edge_lists.len());
        for (idx, &(x, y)) in pattern.edges().iter().enumerate() {
            let (nx, ny) = (sizes[x], sizes[y]);
            let mut rows = vec![Bitset::new(ny); nx];
            let mut cols = vec![Bitset::new(nx); ny];
            for &(a, b) in &edge_lists[idx] {
                if a >= nx {
                    return Err(ModelError::IndexOutOfRange {
                        class: x,
                        vertex: a,
                        size: nx,
                    });
                }
                if b >= ny {
                    return Err(ModelError::IndexOutOfRange {
                        class: y,
                        vertex: b,
                        size: ny,
                    });
                }
                if rows[a].get(b) {
                    return Err(ModelError::DuplicateEdge { x, y, a, b });
                }
                rows[a].set(b);
                cols[b].set(a);
            }
            pairs.push(PairAdjacency {
                rows,
                cols,
                edge_count: edge_lists[idx].len(),
            });
        }
        Ok(ClassedGraph {
            pattern,
            sizes,
            pairs,
        })
    }

    /// Complete blow-up: every pattern pair fully connected.
    pub fn complete(pattern: PatternGraph, sizes: Vec<usize>) -> Result<Self, ModelError> {
        let lists: Vec<Vec<(usize, usize)>> = pattern
            .edges()
            .iter()
            .map(|&(x, y)| {
                (0..sizes[x])
                    .flat_map(|a| (0..sizes[y]).map(move |b| (a, b)))
                    .collect()
            })
            .collect();
        ClassedGraph::new(pattern, sizes, &lists)
    }

    /// Single bipartite pair as a `K_2` blow-up.
    pub fn bipartite(
        n1: usize,
        n2: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self, ModelError> {
        let lists = [edges.to_vec()];
        ClassedGraph::new(PatternGraph::complete(2), vec![n1, n2], &lists)
    }

    #[inline]
    pub fn pattern(&self) -> &PatternGraph {
        &self.pattern
    }

    #[inline]
    pub fn class_count(&self) -> usize {
        self.sizes.len()
    }

    #[inline]
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, class: usize) -> Result<usize, ModelError> {
        self.sizes
            .get(class)
            .copied()
            .ok_or(ModelError::ClassOutOfRange {
                class,
                classes: self.sizes.len(),
            })
    }

    fn pair(&self, x: usize, y: usize) -> Result<(usize, &PairAdjacency), ModelError> {
        let idx = self
            .pattern
            .edge_index(x, y)
            .ok_or(ModelError::EdgeOnNonPatternPair { x, y })?;
        Ok((idx, &self.pairs[idx]))
    }

    /// View of the pair `(x, y)`; sides follow the normalized `(min, max)`
    /// class order regardless of argument order.
    pub fn pair_view(&self, x: usize, y: usize) -> Result<PairView<'_>, ModelError> {
        let (idx, adj) = self.pair(x, y)?;
        let (lo, hi) = self.pattern.edges()[idx];
        Ok(PairView {
            n1: self.sizes[lo],
            n2: self.sizes[hi],
            rows: &adj.rows,
            cols: &adj.cols,
            edge_count: adj.edge_count,
        })
    }

    pub fn pair_edge_count(&self, x: usize, y: usize) -> Result<usize, ModelError> {
        Ok(self.pair(x, y)?.1.edge_count)
    }

    /// Edges of the pair in row-major order over the normalized orientation.
    pub fn pair_edges(&self, x: usize, y: usize) -> Result<Vec<(usize, usize)>, ModelError> {
        let (_, adj) = self.pair(x, y)?;
        let mut out = Vec::with_capacity(adj.edge_count);
        for (a, row) in adj.rows.iter().enumerate() {
            for b in row.ones() {
                out.push((a, b));
            }
        }
        Ok(out)
    }

    /// Is `(a, b)` an edge of pair `(x, y)`? `a` indexes the class
    /// `min(x, y)`, `b` the class `max(x, y)`.
    pub fn has_edge(&self, x: usize, y: usize, a: usize, b: usize) -> Result<bool, ModelError> {
        let (idx, adj) = self.pair(x, y)?;
        let (lo, hi) = self.pattern.edges()[idx];
        if a >= self.sizes[lo] {
            return Err(ModelError::IndexOutOfRange {
                class: lo,
                vertex: a,
                size: self.sizes[lo],
            });
        }
        if b >= self.sizes[hi] {
            return Err(ModelError::IndexOutOfRange {
                class: hi,
                vertex: b,
                size: self.sizes[hi],
            });
        }
        Ok(adj.rows[a].get(b))
    }

    /// Neighborhood of `v` (a vertex of class `from`) inside class `to`.
    pub fn neighbors(&self, from: usize, to: usize, v: usize) -> Result<&Bitset, ModelError> {
        let (idx, adj) = self.pair(from, to)?;
        let (lo, _) = self.pattern.edges()[idx];
        let side_size = self.sizes[from];
        if v >= side_size {
            return Err(ModelError::IndexOutOfRange {
                class: from,
                vertex: v,
                size: side_size,
            });
        }
        if from == lo {
            Ok(&adj.rows[v])
        } else {
            Ok(&adj.cols[v])
        }
    }

    pub fn total_edge_count(&self) -> usize {
        self.pairs.iter().map(|p| p.edge_count).sum()
    }

    /// Exact empirical density of the pair `(x, y)`.
    pub fn pair_density(&self, x: usize, y: usize) -> Result<Rational, ModelError> {
        Ok(self.pair_view(x, y)?.density())
    }
}

// ============================================================================
// Text format
// ============================================================================

const FORMAT_HELP: &str = "expected: classes / sizes / pattern lines, then one edges section per pattern edge, then end";

/// Parses the line-oriented graph format.
///
/// ```text
/// classes <ell>
/// sizes <n1> ... <nell>
/// pattern <x> <y>          # one per pattern edge, 1-based, x < y
/// edges <x> <y>            # section per pattern edge, any order
/// <a> <b>                  # 0-based vertex indices
/// end
/// ```
pub fn parse_graph_file(text: &str) -> Result<ClassedGraph, ModelError> {
    enum Section {
        Header,
        Pattern,
        Edges(usize),
        Done,
    }

    let syntax = |line: usize, message: &str| ModelError::Syntax {
        line,
        message: message.to_string(),
    };

    let mut ell: Option<usize> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut pattern_edges: Vec<(usize, usize)> = Vec::new();
    let mut sections: Vec<Option<Vec<(usize, usize)>>> = Vec::new();
    let mut state = Section::Header;

    let parse_class_label = |tok: &str, line: usize, ell: usize| -> Result<usize, ModelError> {
        let v: usize = tok
            .parse()
            .map_err(|_| syntax(line, &format!("bad class label {tok:?}")))?;
        if v == 0 || v > ell {
            return Err(syntax(
                line,
                &format!("class label {v} outside 1..={ell}"),
            ));
        }
        Ok(v - 1)
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "classes" => {
                if ell.is_some() {
                    return Err(syntax(line, "duplicate classes line"));
                }
                if toks.len() != 2 {
                    return Err(syntax(line, "classes expects one count"));
                }
                let n: usize = toks[1]
                    .parse()
                    .map_err(|_| syntax(line, "bad class count"))?;
                if n == 0 {
                    return Err(syntax(line, "class count must be >= 1"));
                }
                ell = Some(n);
            }
            "sizes" => {
                let ell = ell.ok_or_else(|| syntax(line, "sizes before classes"))?;
                if sizes.is_some() {
                    return Err(syntax(line, "duplicate sizes line"));
                }
                if toks.len() != ell + 1 {
                    return Err(syntax(line, &format!("expected {ell} sizes")));
                }
                let parsed: Result<Vec<usize>, _> = toks[1..].iter().map(|t| t.parse()).collect();
                sizes = Some(parsed.map_err(|_| syntax(line, "bad size value"))?);
            }
            "pattern" => {
                let ell = ell.ok_or_else(|| syntax(line, "pattern before classes"))?;
                if sizes.is_none() {
                    return Err(syntax(line, "pattern before sizes"));
                }
                if !matches!(state, Section::Header | Section::Pattern) {
                    return Err(syntax(line, "pattern line after an edges section"));
                }
                if toks.len() != 3 {
                    return Err(syntax(line, "pattern expects two class labels"));
                }
                let x = parse_class_label(toks[1], line, ell)?;
                let y = parse_class_label(toks[2], line, ell)?;
                if x >= y {
                    return Err(syntax(line, "pattern labels must satisfy x < y"));
                }
                if pattern_edges.contains(&(x, y)) {
                    return Err(syntax(line, "duplicate pattern edge"));
                }
                pattern_edges.push((x, y));
                sections.push(None);
                state = Section::Pattern;
            }
            "edges" => {
                let ell = ell.ok_or_else(|| syntax(line, "edges before classes"))?;
                if toks.len() != 3 {
                    return Err(syntax(line, "edges expects two class labels"));
                }
                let x = parse_class_label(toks[1], line, ell)?;
                let y = parse_class_label(toks[2], line, ell)?;
                let pos = pattern_edges
                    .iter()
                    .position(|&e| e == (x, y) || e == (y, x))
                    .ok_or_else(|| {
                        syntax(line, &format!("edges section for non-pattern pair {x},{y}"))
                    })?;
                if sections[pos].is_some() {
                    return Err(syntax(line, "duplicate edges section"));
                }
                sections[pos] = Some(Vec::new());
                state = Section::Edges(pos);
            }
            "end" => {
                state = Section::Done;
            }
            _ => match state {
                Section::Edges(pos) => {
                    if toks.len() != 2 {
                        return Err(syntax(line, "edge line expects two indices"));
                    }
                    let a: usize = toks[0]
                        .parse()
                        .map_err(|_| syntax(line, "bad vertex index"))?;
                    let b: usize = toks[1]
                        .parse()
                        .map_err(|_| syntax(line, "bad vertex index"))?;
                    sections[pos].as_mut().unwrap().push((a, b));
                }
                Section::Done => {
                    return Err(syntax(line, "content after end"));
                }
                _ => {
                    return Err(syntax(line, FORMAT_HELP));
                }
            },
        }
    }

    let ell = ell.ok_or_else(|| syntax(0, "missing classes line"))?;
    let sizes = sizes.ok_or_else(|| syntax(0, "missing sizes line"))?;
    // Normalize the pattern-file edge order to the sorted order used by
    // PatternGraph, carrying the sections along.
    let mut order: Vec<usize> = (0..pattern_edges.len()).collect();
    order.sort_by_key(|&i| pattern_edges[i]);
    let sorted_edges: Vec<(usize, usize)> = order.iter().map(|&i| pattern_edges[i]).collect();
    let mut edge_lists = Vec::with_capacity(order.len());
    for &i in &order {
        let (x, y) = pattern_edges[i];
        let list = sections[i]
            .take()
            .ok_or_else(|| syntax(0, &format!("missing edges section for pair {},{}", x + 1, y + 1)))?;
        edge_lists.push(list);
    }
    let pattern = PatternGraph::new(ell, &sorted_edges)?;
    ClassedGraph::new(pattern, sizes, &edge_lists)
}

/// Canonical serialization; `parse_graph_file(serialize_graph_file(g)) == g`.
pub fn serialize_graph_file(g: &ClassedGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "classes {}", g.class_count());
    let sizes: Vec<String> = g.sizes().iter().map(|n| n.to_string()).collect();
    let _ = writeln!(out, "sizes {}", sizes.join(" "));
    for &(x, y) in g.pattern().edges() {
        let _ = writeln!(out, "pattern {} {}", x + 1, y + 1);
    }
    for &(x, y) in g.pattern().edges() {
        let _ = writeln!(out, "edges {} {}", x + 1, y + 1);
        for (a, b) in g.pair_edges(x, y).expect("pattern edge") {
            let _ = writeln!(out, "{a} {b}");
        }
    }
    out.push_str("end\n");
    out
}

/// Parses a pattern-only file: `classes` plus `pattern` lines (1-based),
/// optionally terminated by `end`.
pub fn parse_pattern_file(text: &str) -> Result<PatternGraph, ModelError> {
    let syntax = |line: usize, message: &str| ModelError::Syntax {
        line,
        message: message.to_string(),
    };
    let mut ell: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "classes" => {
                if toks.len() != 2 {
                    return Err(syntax(line, "classes expects one count"));
                }
                ell = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| syntax(line, "bad class count"))?,
                );
            }
            "pattern" => {
                let ell = ell.ok_or_else(|| syntax(line, "pattern before classes"))?;
                if toks.len() != 3 {
                    return Err(syntax(line, "pattern expects two class labels"));
                }
                let parse = |tok: &str| -> Result<usize, ModelError> {
                    let v: usize = tok
                        .parse()
                        .map_err(|_| syntax(line, "bad class label"))?;
                    if v == 0 || v > ell {
                        return Err(syntax(line, "class label out of range"));
                    }
                    Ok(v - 1)
                };
                edges.push((parse(toks[1])?, parse(toks[2])?));
            }
            "end" => break,
            _ => return Err(syntax(line, "expected classes/pattern/end")),
        }
    }
    let ell = ell.ok_or_else(|| syntax(0, "missing classes line"))?;
    PatternGraph::new(ell, &edges)
}

// ============================================================================
// Neighborhood restriction
// ============================================================================

/// Result of [`neighborhood_restriction`]: the induced blow-up plus the
/// index maps needed to decode its vertices back into the source graph.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub graph: ClassedGraph,
    /// New class index -> original class index (increasing).
    pub kept_classes: Vec<usize>,
    /// New class index -> (new vertex index -> original vertex index).
    pub vertex_maps: Vec<Vec<usize>>,
}

/// Induces the blow-up on `kept_full` classes (taken whole) and
/// `kept_restricted` classes (intersected with the anchor vertex's
/// neighborhood). Kept classes are re-densified in increasing original
/// order; restricted classes may come out empty.
pub fn neighborhood_restriction(
    g: &ClassedGraph,
    anchor_class: usize,
    anchor_vertex: usize,
    kept_full: &[usize],
    kept_restricted: &[usize],
) -> Result<Restriction, ModelError> {
    let ell = g.class_count();
    if anchor_class >= ell {
        return Err(ModelError::ClassOutOfRange {
            class: anchor_class,
            classes: ell,
        });
    }
    let n_anchor = g.size(anchor_class)?;
    if anchor_vertex >= n_anchor {
        return Err(ModelError::IndexOutOfRange {
            class: anchor_class,
            vertex: anchor_vertex,
            size: n_anchor,
        });
    }
    let mut seen = vec![false; ell];
    seen[anchor_class] = true;
    for &c in kept_full.iter().chain(kept_restricted) {
        if c >= ell {
            return Err(ModelError::ClassOutOfRange {
                class: c,
                classes: ell,
            });
        }
        if seen[c] {
            return Err(ModelError::OverlappingClassSets);
        }
        seen[c] = true;
    }
    for &c in kept_restricted {
        if !g.pattern().contains_edge(anchor_class, c) {
            return Err(ModelError::AnchorNotAdjacent {
                class: c,
                anchor: anchor_class,
            });
        }
    }

    let mut kept_classes: Vec<usize> = kept_full.iter().chain(kept_restricted).copied().collect();
    kept_classes.sort_unstable();
    let restricted: Vec<bool> = kept_classes
        .iter()
        .map(|c| kept_restricted.contains(c))
        .collect();

    let vertex_maps: Vec<Vec<usize>> = kept_classes
        .iter()
        .zip(&restricted)
        .map(|(&c, &is_restricted)| {
            if is_restricted {
                g.neighbors(anchor_class, c, anchor_vertex)
                    .expect("checked pattern edge")
                    .indices()
            } else {
                (0..g.sizes()[c]).collect()
            }
        })
        .collect();

    let new_pattern = g.pattern().induced(&kept_classes)?;
    let new_sizes: Vec<usize> = vertex_maps.iter().map(|m| m.len()).collect();

    let mut edge_lists: Vec<Vec<(usize, usize)>> = Vec::with_capacity(new_pattern.edge_count());
    for &(nx, ny) in new_pattern.edges() {
        let (ox, oy) = (kept_classes[nx], kept_classes[ny]);
        let mut list = Vec::new();
        for (na, &oa) in vertex_maps[nx].iter().enumerate() {
            let row = g.neighbors(ox, oy, oa)?;
            for (nb, &ob) in vertex_maps[ny].iter().enumerate() {
                if row.get(ob) {
                    list.push((na, nb));
                }
            }
        }
        edge_lists.push(list);
    }
    let graph = ClassedGraph::new(new_pattern, new_sizes, &edge_lists)?;
    Ok(Restriction {
        graph,
        kept_classes,
        vertex_maps,
    })
}

// ============================================================================
// Tests
// ============================================================================
