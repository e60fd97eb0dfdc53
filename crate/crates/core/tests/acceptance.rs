//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Criteria 1-6 are oracle-equivalence and exact-value checks. Criteria 7-9
//! are statistical regressions whose expected fractions were pinned by a
//! reference run of the shipped configs and seeds (see `pinned` below);
//! runs are deterministic, so reruns must land within three standard errors
//! of the pinned values. Criterion 10 checks byte-level determinism of the
//! shipped experiment configs across reruns and worker counts.

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive};
use regcount::bitset::Bitset;
use regcount::counting::{
    balance_class, check_binomial_merging, check_binomial_splitting, check_scaled_binomial,
    count_canonical, deg_edge, deg_vertex, edge_threshold, two_density, valid_sequences,
    BalanceClass,
};
use regcount::experiments::{run_experiment, ExperimentConfig, FractionStat};
use regcount::model::{ClassedGraph, PatternGraph};
use regcount::rational::{rat, rational_from_usize, Rational};
use regcount::regularity::{
    check_eps_regular_exact, check_lower_regular_exact, degree_deviation_report, density,
};
use regcount::sampling::{sample_bipartite_exact_m, sample_blowup, RngSpec};
use std::path::{Path, PathBuf};

fn pass(criterion: u32, what: &str) {
    println!("PASS criterion {criterion}: {what}");
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

// ============================================================================
// Naive oracles (independent of the library's scan implementations)
// ============================================================================

/// Every subset as a mask; sizes compared exactly as rationals; densities
/// compared as exact rationals. A deliberate double loop with no pruning.
fn naive_eps_regular(g: &ClassedGraph, eps: &Rational) -> bool {
    let view = g.pair_view(0, 1).unwrap();
    let (n1, n2) = (view.n1, view.n2);
    let d = view.density();
    for mask1 in 1u32..(1 << n1) {
        let s1 = mask1.count_ones() as usize;
        if rational_from_usize(s1) < eps * rational_from_usize(n1) {
            continue;
        }
        for mask2 in 1u32..(1 << n2) {
            let s2 = mask2.count_ones() as usize;
            if rational_from_usize(s2) < eps * rational_from_usize(n2) {
                continue;
            }
            let mut edges = 0u64;
            for a in 0..n1 {
                for b in 0..n2 {
                    if mask1 >> a & 1 == 1
                        && mask2 >> b & 1 == 1
                        && g.has_edge(0, 1, a, b).unwrap()
                    {
                        edges += 1;
                    }
                }
            }
            let dv = Rational::new(BigInt::from(edges), BigInt::from((s1 * s2) as u64));
            if (&dv - &d).abs() > eps * &d {
                return false;
            }
        }
    }
    true
}

fn naive_lower_regular(g: &ClassedGraph, eps: &Rational, d: &Rational) -> bool {
    let view = g.pair_view(0, 1).unwrap();
    let (n1, n2) = (view.n1, view.n2);
    for mask1 in 1u32..(1 << n1) {
        let s1 = mask1.count_ones() as usize;
        if rational_from_usize(s1) < eps * rational_from_usize(n1) {
            continue;
        }
        for mask2 in 1u32..(1 << n2) {
            let s2 = mask2.count_ones() as usize;
            if rational_from_usize(s2) < eps * rational_from_usize(n2) {
                continue;
            }
            let mut edges = 0u64;
            for a in 0..n1 {
                for b in 0..n2 {
                    if mask1 >> a & 1 == 1
                        && mask2 >> b & 1 == 1
                        && g.has_edge(0, 1, a, b).unwrap()
                    {
                        edges += 1;
                    }
                }
            }
            let dv = Rational::new(BigInt::from(edges), BigInt::from((s1 * s2) as u64));
            if dv < (Rational::one() - eps) * d {
                return false;
            }
        }
    }
    true
}

/// Nested-loop canonical copy enumeration through the public edge accessor.
fn brute_force_count(g: &ClassedGraph, h: &PatternGraph) -> u64 {
    let sizes = g.sizes();
    let ell = sizes.len();
    if sizes.iter().any(|&s| s == 0) {
        return 0;
    }
    let mut tuple = vec![0usize; ell];
    let mut total = 0u64;
    loop {
        if h.edges()
            .iter()
            .all(|&(x, y)| g.has_edge(x, y, tuple[x], tuple[y]).unwrap())
        {
            total += 1;
        }
        let mut k = ell;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < sizes[k] {
                break;
            }
            tuple[k] = 0;
        }
    }
}

fn bipartite_from_mask(n1: usize, n2: usize, mask: u64) -> ClassedGraph {
    let mut edges = Vec::new();
    for a in 0..n1 {
        for b in 0..n2 {
            if mask >> (a * n2 + b) & 1 == 1 {
                edges.push((a, b));
            }
        }
    }
    ClassedGraph::bipartite(n1, n2, &edges).unwrap()
}

// ============================================================================
// Criterion 1: regularity oracle equivalence
// ============================================================================

#[test]
fn c01_regularity_oracle_equivalence() {
    let eps_values = [rat(1, 4), rat(1, 3), rat(1, 2)];
    let d_values = [rat(1, 4), rat(1, 2)];
    let mut checked = 0u64;

    let mut compare = |g: &ClassedGraph| {
        for eps in &eps_values {
            let mine = check_eps_regular_exact(g, (0, 1), eps).unwrap();
            let naive = naive_eps_regular(g, eps);
            assert_eq!(mine.is_certified(), naive, "eps={eps} graph mismatch");
            if let Some(w) = mine.witness() {
                // Witness soundness: it must violate when re-evaluated.
                let dv = density(g, (0, 1), &w.side1, &w.side2).unwrap();
                let d = g.pair_density(0, 1).unwrap();
                assert!((dv - &d).abs() > eps * d);
            }
            if mine.is_certified() {
                // One-sided implication: certified at eps means certified
                // lower-regular at the pair's own density.
                let d = g.pair_density(0, 1).unwrap();
                assert!(check_lower_regular_exact(g, (0, 1), eps, &d)
                    .unwrap()
                    .is_certified());
            }
            for d in &d_values {
                let mine = check_lower_regular_exact(g, (0, 1), eps, d).unwrap();
                let naive = naive_lower_regular(g, eps, d);
                assert_eq!(mine.is_certified(), naive, "lower eps={eps} d={d}");
                if let Some(w) = mine.witness() {
                    let dv = density(g, (0, 1), &w.side1, &w.side2).unwrap();
                    assert!(dv < (Rational::one() - eps) * d);
                }
                checked += 1;
            }
            checked += 1;
        }
    };

    // All 512 bipartite graphs on 3x3.
    for mask in 0u64..(1 << 9) {
        compare(&bipartite_from_mask(3, 3, mask));
    }
    // 2000 seeded-random graphs on 4x4.
    let mut rng = RngSpec::new(20_240_101, 0).rng();
    use rand::Rng;
    for _ in 0..2000 {
        let mask: u64 = rng.gen_range(0..(1u64 << 16));
        compare(&bipartite_from_mask(4, 4, mask));
    }
    assert_eq!(checked, (512 + 2000) * 9);
    pass(1, "exact checkers match the naive oracle on 2512 graphs");
}

// ============================================================================
// Criterion 2: counting oracle equivalence
// ============================================================================

#[test]
fn c02_counting_oracle_equivalence() {
    let mut instances = 0;
    for seed in 0..100u64 {
        for h in [PatternGraph::complete(3), PatternGraph::complete(4)] {
            let spec = RngSpec::new(1000 + seed, 0);
            let mut szrng = spec.with_stream(99).rng();
            use rand::Rng;
            let sizes: Vec<usize> = (0..h.ell()).map(|_| szrng.gen_range(2..=6)).collect();
            let m: Vec<usize> = h
                .edges()
                .iter()
                .map(|&(x, y)| szrng.gen_range(0..=sizes[x] * sizes[y]))
                .collect();
            let g = sample_blowup(&h, &sizes, &m, &spec).unwrap();
            let total = count_canonical(&g, &h).unwrap().total;
            assert_eq!(total, brute_force_count(&g, &h).into());

            // Spot-check degrees against pinned brute force.
            let v = (seed as usize) % sizes[0];
            let mut fixed = 0u64;
            {
                let mut tuple = vec![0usize; h.ell()];
                tuple[0] = v;
                loop {
                    if h.edges()
                        .iter()
                        .all(|&(x, y)| g.has_edge(x, y, tuple[x], tuple[y]).unwrap())
                    {
                        fixed += 1;
                    }
                    let mut k = h.ell();
                    let mut done = false;
                    loop {
                        if k == 1 {
                            done = true;
                            break;
                        }
                        k -= 1;
                        tuple[k] += 1;
                        if tuple[k] < sizes[k] {
                            break;
                        }
                        tuple[k] = 0;
                    }
                    if done {
                        break;
                    }
                }
            }
            assert_eq!(deg_vertex(&g, &h, 0, v).unwrap(), fixed.into());

            if let Some(&(a, b)) = g.pair_edges(0, 1).unwrap().first() {
                let mut through = 0u64;
                let mut tuple = vec![0usize; h.ell()];
                loop {
                    if tuple[0] == a
                        && tuple[1] == b
                        && h.edges()
                            .iter()
                            .all(|&(x, y)| g.has_edge(x, y, tuple[x], tuple[y]).unwrap())
                    {
                        through += 1;
                    }
                    let mut k = h.ell();
                    let mut done = false;
                    loop {
                        if k == 0 {
                            done = true;
                            break;
                        }
                        k -= 1;
                        tuple[k] += 1;
                        if tuple[k] < sizes[k] {
                            break;
                        }
                        tuple[k] = 0;
                    }
                    if done {
                        break;
                    }
                }
                assert_eq!(deg_edge(&g, &h, (0, 1), (a, b)).unwrap(), through.into());
            }
            instances += 1;
        }
    }
    assert_eq!(instances, 200);
    pass(2, "count/deg_vertex/deg_edge match brute force on 200 blow-ups");
}

// ============================================================================
// Criterion 3: aux identities
// ============================================================================

#[test]
fn c03_aux_identities() {
    use regcount::auxgraph::{build_path_aux, triangles_through_aux};
    let k3 = PatternGraph::complete(3);
    for seed in 0..500u64 {
        let spec = RngSpec::new(3000 + seed, 0);
        let mut szrng = spec.with_stream(99).rng();
        use rand::Rng;
        let sizes: Vec<usize> = (0..3).map(|_| szrng.gen_range(1..=8)).collect();
        let m: Vec<usize> = k3
            .edges()
            .iter()
            .map(|&(x, y)| szrng.gen_range(0..=sizes[x] * sizes[y]))
            .collect();
        let g = sample_blowup(&k3, &sizes, &m, &spec).unwrap();
        let aux = build_path_aux(&g, 0, 1, 2).unwrap();

        // Degree product and edge count identities.
        let mut sum = 0usize;
        for x1 in 0..sizes[0] {
            let dl = g.neighbors(0, 1, x1).unwrap().count_ones();
            let dr = g.neighbors(0, 2, x1).unwrap().count_ones();
            assert_eq!(aux.degree(x1), dl * dr);
            sum += dl * dr;
        }
        assert_eq!(aux.edge_count(), sum);

        // Triangle identity against the canonical count.
        let mut edge_set = Bitset::new(aux.y_size());
        for (b, c) in g.pair_edges(1, 2).unwrap() {
            edge_set.set(aux.y_index(b, c));
        }
        let triangles = triangles_through_aux(&aux, &edge_set).unwrap();
        let counted = count_canonical(&g, &k3).unwrap().total;
        assert_eq!(counted, triangles.total.into());
    }
    pass(3, "degree/edge/triangle identities on 500 tripartite instances");
}

// ============================================================================
// Criterion 4: pattern arithmetic
// ============================================================================

#[test]
fn c04_pattern_arithmetic() {
    assert_eq!(two_density(&PatternGraph::complete(3)).unwrap(), rat(2, 1));
    assert_eq!(two_density(&PatternGraph::complete(4)).unwrap(), rat(5, 2));
    assert_eq!(two_density(&PatternGraph::complete(5)).unwrap(), rat(3, 1));
    let c4 = PatternGraph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    assert_eq!(two_density(&c4).unwrap(), rat(3, 2));
    assert_eq!(two_density(&PatternGraph::k4_minus_e()).unwrap(), rat(2, 1));
    assert_eq!(
        balance_class(&PatternGraph::complete(3)).unwrap(),
        BalanceClass::StrictlyBalanced
    );
    assert_eq!(
        balance_class(&PatternGraph::complete(4)).unwrap(),
        BalanceClass::StrictlyBalanced
    );
    assert_eq!(
        edge_threshold(&PatternGraph::complete(4), 1024, &rat(1, 1)).unwrap(),
        65_536
    );
    assert_eq!(valid_sequences(2).count(), 1);
    assert_eq!(valid_sequences(3).count(), 2);
    assert_eq!(valid_sequences(4).count(), 12);
    pass(4, "2-density, balance, threshold, and ordering counts are exact");
}

// ============================================================================
// Criterion 5: degree proposition on certified pairs
// ============================================================================

#[test]
fn c05_degree_proposition() {
    let mut produced = 0usize;
    let mut graph_idx = 0u64;
    while produced < 200 {
        let eps = if produced % 2 == 0 { rat(1, 2) } else { rat(1, 4) };
        let (n1, n2, m) = if produced % 2 == 0 {
            // Dense random pairs screened at eps = 1/2.
            let n = 8 + (produced / 2) % 5; // 8..=12
            (n, n, (3 * n * n) / 4)
        } else {
            // Near-complete pairs for the tight eps = 1/4 screen.
            let n = 8 + (produced / 2) % 5;
            (n, n, n * n - (produced / 2) % 2)
        };
        // Rejection until certified at this eps.
        let pair = loop {
            let spec = RngSpec::new(50_000 + graph_idx, 0);
            graph_idx += 1;
            let edges = sample_bipartite_exact_m(n1, n2, m, &mut spec.rng()).unwrap();
            let g = ClassedGraph::bipartite(n1, n2, &edges).unwrap();
            if check_eps_regular_exact(&g, (0, 1), &eps).unwrap().is_certified() {
                break g;
            }
            assert!(graph_idx < 2_000_000, "generation stalled");
        };
        let d = pair.pair_density(0, 1).unwrap();
        let full = Bitset::full(n2);
        let (below, above) = degree_deviation_report(&pair, (0, 1), &eps, &d, &full).unwrap();
        let cap = (&eps * rational_from_usize(n1)).floor().to_integer();
        let cap = cap.to_usize().unwrap();
        assert!(below <= cap, "below={below} cap={cap} n1={n1} eps={eps}");
        assert!(above <= cap, "above={above} cap={cap} n1={n1} eps={eps}");
        produced += 1;
    }
    pass(5, "degree deviations within floor(eps*n1) on 200 certified pairs");
}

// ============================================================================
// Criterion 6: binomial inequalities
// ============================================================================

#[test]
fn c06_binomial_inequalities() {
    // (1): C(xa, b) <= C(a, b) x^b over x in {1/4, 1/2, 3/4, 1} with xa
    // integral, a <= 60, all b <= a.
    let xs = [rat(1, 4), rat(1, 2), rat(3, 4), rat(1, 1)];
    for a in 0..=60u64 {
        for x in &xs {
            let xa = x * Rational::from_integer(a.into());
            if !xa.is_integer() {
                continue;
            }
            for b in 0..=a {
                assert!(
                    check_scaled_binomial(a, b, x).unwrap(),
                    "inequality (1) fails at a={a} b={b} x={x}"
                );
            }
        }
    }
    // (2): C(a, b-c) C(a, c) <= 4^b C(a, b) for c <= b <= a <= 60.
    for a in 0..=60u64 {
        for b in 0..=a {
            for c in 0..=b {
                assert!(
                    check_binomial_splitting(a, b, c).unwrap(),
                    "inequality (2) fails at a={a} b={b} c={c}"
                );
            }
        }
    }
    // (3): C(a, b) C(c, d) <= C(a+c, b+d) for a, c <= 60.
    for a in 0..=60u64 {
        for b in 0..=a {
            for c in 0..=60u64 {
                for d in 0..=c {
                    assert!(
                        check_binomial_merging(a, b, c, d),
                        "inequality (3) fails at a={a} b={b} c={c} d={d}"
                    );
                }
            }
        }
    }
    pass(6, "binomial inequalities (1)-(3) hold on all checked tuples");
}

// ============================================================================
// Criteria 7-9: statistical regressions against pilot-pinned values
// ============================================================================

/// Pinned fractions from the reference run of the shipped configs. Each
/// entry is (cell_id, fraction name, numerator, denominator); tolerance is
/// three standard errors of the pinned estimate.
mod pinned {
    pub const COUNTING: &[(&str, &str, usize, usize)] = &[
        ("n24_m118", "bad", 0, 500),
        ("n24_m472", "bad", 0, 500),
    ];
    pub const AUX: &[(&str, &str, usize, usize)] = &[
        ("m2_24", "aux_failed", 400, 400),
        ("m2_32", "aux_failed", 400, 400),
        ("m2_44", "aux_failed", 381, 400),
        ("m2_48", "aux_failed", 0, 400),
    ];
    pub const HEREDITY: &[(&str, &str, usize, usize)] = &[
        ("q6", "passed", 25, 400),
        ("q9", "passed", 108, 400),
        ("q12", "passed", 400, 400),
    ];
    pub const EXTRACTION: &[(&str, &str, usize, usize)] = &[
        ("m36", "passed", 0, 400),
        ("m72", "passed", 15, 400),
        ("m108", "passed", 400, 400),
    ];
}

fn load_config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs_dir().join(name)).expect("shipped config loads")
}

fn run_to_temp(config: &ExperimentConfig) -> regcount::experiments::RunOutput {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(config, dir.path(), None).unwrap()
}

fn assert_pinned(
    out: &regcount::experiments::RunOutput,
    pins: &[(&str, &str, usize, usize)],
) -> Vec<f64> {
    let mut fractions = Vec::new();
    for &(cell_id, stat, num, den) in pins {
        let cell = out
            .summary
            .cells
            .iter()
            .find(|c| c.cell_id == cell_id)
            .unwrap_or_else(|| panic!("cell {cell_id} missing"));
        let f: &FractionStat = &cell.fractions[stat];
        assert_eq!(f.denominator, den, "cell {cell_id} denominator");
        let pinned_frac = num as f64 / den as f64;
        let se = (pinned_frac * (1.0 - pinned_frac) / den as f64).sqrt();
        let got = f.numerator as f64 / f.denominator as f64;
        assert!(
            (got - pinned_frac).abs() <= 3.0 * se + f64::EPSILON,
            "cell {cell_id} {stat}: got {}/{}, pinned {num}/{den}",
            f.numerator,
            f.denominator
        );
        fractions.push(got);
    }
    fractions
}

#[test]
fn c07_counting_regression() {
    let config = load_config("counting.json");
    assert_eq!(config.base_seed, 42);
    let out = run_to_temp(&config);
    let fracs = assert_pinned(&out, pinned::COUNTING);
    // Bad fraction at 4x the threshold never exceeds the threshold cell's.
    assert!(
        fracs[1] <= fracs[0],
        "bad fraction not monotone: {fracs:?}"
    );
    pass(7, "counting bad fractions match pins and are monotone in m");
}

#[test]
fn c08_aux_regression() {
    let config = load_config("aux_regularity.json");
    assert_eq!(config.base_seed, 7);
    let out = run_to_temp(&config);
    let fracs = assert_pinned(&out, pinned::AUX);
    assert!(
        fracs.windows(2).all(|w| w[1] <= w[0]),
        "aux failure fraction not nonincreasing: {fracs:?}"
    );
    pass(8, "aux failure fractions match pins and fall along the m2 grid");
}

#[test]
fn c09_heredity_and_extraction_regressions() {
    let heredity = load_config("heredity.json");
    assert_eq!(heredity.base_seed, 11);
    let out = run_to_temp(&heredity);
    let fracs = assert_pinned(&out, pinned::HEREDITY);
    assert!(
        fracs.windows(2).all(|w| w[1] >= w[0]),
        "heredity pass fraction not nondecreasing in q: {fracs:?}"
    );

    let extraction = load_config("extraction.json");
    assert_eq!(extraction.base_seed, 11);
    let out = run_to_temp(&extraction);
    let fracs = assert_pinned(&out, pinned::EXTRACTION);
    assert!(
        fracs.windows(2).all(|w| w[1] >= w[0]),
        "extraction pass rate not nondecreasing in m: {fracs:?}"
    );
    pass(9, "heredity and extraction regressions match pins, monotone");
}

// ============================================================================
// Criterion 10: byte-level determinism of the shipped configs
// ============================================================================

#[test]
fn c10_determinism_of_shipped_configs() {
    let names = [
        "counting.json",
        "aux_regularity.json",
        "heredity.json",
        "extraction.json",
        "neighborhood.json",
    ];
    for name in names {
        let config = load_config(name);
        let runs: Vec<(String, serde_json::Value)> = [Some(1), Some(4), Some(1)]
            .into_iter()
            .map(|workers| {
                let dir = tempfile::tempdir().unwrap();
                let out = run_experiment(&config, dir.path(), workers).unwrap();
                // Strip the wall-time column (last) from each CSV line and
                // the total wall time from the summary.
                let csv = std::fs::read_to_string(&out.paths.trials_csv).unwrap();
                let stripped: String = csv
                    .lines()
                    .map(|l| l.rsplit_once(',').unwrap().0)
                    .collect::<Vec<_>>()
                    .join("\n");
                let mut summary: serde_json::Value = serde_json::from_str(
                    &std::fs::read_to_string(&out.paths.summary_json).unwrap(),
                )
                .unwrap();
                summary.as_object_mut().unwrap().remove("total_wall_ms");
                (stripped, summary)
            })
            .collect();
        assert_eq!(runs[0].0, runs[1].0, "{name}: csv differs across workers");
        assert_eq!(runs[0].0, runs[2].0, "{name}: csv differs across reruns");
        assert_eq!(runs[0].1, runs[1].1, "{name}: summary differs");
        assert_eq!(runs[0].1, runs[2].1, "{name}: summary differs on rerun");
    }
    pass(10, "shipped configs byte-identical across reruns and workers");
}
