//! Declarative Monte-Carlo experiments with deterministic reports.
//!
//! Every experiment is a grid of cells, each run for a fixed number of
//! trials. Trial `t` of cell `c` has global index `g = c * trials + t` and
//! derives its seed as [`derive_trial_seed`]`(base_seed, g)`; the trial's
//! outcome is a pure function of that seed, so results are byte-identical
//! at any worker count and any single trial can be replayed in isolation
//! ([`replay_trial`]). Workers process global indices round-robin and the
//! aggregator merges in index order.

pub mod config;
pub mod report;

pub use config::{
    ExperimentConfig, ExperimentKind, G1Source, HeredityMode, MGrid, PatternSelector,
};
pub use report::{
    write_report, CellSummary, FractionStat, ReportPaths, Summary, TrialRecord, CSV_HEADER,
};

use crate::auxgraph::{aux_lower_regularity, build_path_aux};
use crate::counting::{
    bad_family_b3, count_canonical, edge_threshold, expected_count_uniform, is_bad_count,
    CountingError,
};
use crate::model::{
    neighborhood_restriction, parse_graph_file, ClassedGraph, DensityMatrix, ModelError,
    PairView, PatternGraph,
};
use crate::rational::{rat, rational_from_usize, Rational};
use crate::regularity::{
    check_eps_regular_exact_view, check_lower_regular_exact_view, witness_search_view, CheckMode,
    RegularityError, RegularityGoal, RegularityVerdict, EXACT_SIDE_CAP,
};
use crate::sampling::{
    derive_seed, sample_bipartite_exact_m, sample_blowup, sample_regular_blowup, AcceptanceMode,
    RngSpec, SamplingError, VerifyMode,
};
use crate::auxgraph::AuxError;
use num::{One, ToPrimitive};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("q = {q} exceeds the first class size {n1}")]
    QTooLarge { q: usize, n1: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Counting(#[from] CountingError),
    #[error(transparent)]
    Aux(#[from] AuxError),
}

/// Seed of global trial `index` under `base_seed`; part of the replay
/// contract recorded in every CSV row.
pub fn derive_trial_seed(base_seed: u64, index: u64) -> u64 {
    derive_seed(base_seed, index)
}

/// Reserved derivation tags for per-experiment fixed artifacts (the aux
/// experiment's left pair, heredity's source pair, ...), disjoint from the
/// global trial indices.
const ARTIFACT_TAG: u64 = u64::MAX;

// ============================================================================
// Prepared experiments
// ============================================================================

struct CountingPrep {
    pattern: PatternGraph,
    eps: Rational,
    delta: Rational,
    /// (n, m) per cell.
    cells: Vec<(usize, usize)>,
}

struct AuxPrep {
    sizes: [usize; 3],
    eps: Rational,
    eps_prime: Rational,
    g1_edges: Vec<(usize, usize)>,
    d1_emp: Rational,
    cells: Vec<usize>,
}

struct HeredityPrep {
    pair: ClassedGraph,
    mode: HeredityMode,
    eps: Rational,
    eps_prime: Rational,
    d_target: Rational,
    pair_density: Rational,
    cells: Vec<usize>,
}

struct NeighborhoodPrep {
    pattern: PatternGraph,
    eps: Rational,
    eps_prime: Rational,
    delta: Rational,
    d_target: Rational,
    cells: Vec<(usize, usize)>,
}

struct ExtractionPrep {
    pair: ClassedGraph,
    eps: Rational,
    c_lower: Rational,
    /// (m, skipped) per cell.
    cells: Vec<(usize, bool)>,
}

enum Prepared {
    Counting(CountingPrep),
    Aux(AuxPrep),
    Heredity(HeredityPrep),
    Neighborhood(NeighborhoodPrep),
    Extraction(ExtractionPrep),
}

impl Prepared {
    fn cell_ids(&self) -> Vec<String> {
        match self {
            Prepared::Counting(p) => p
                .cells
                .iter()
                .map(|(n, m)| format!("n{n}_m{m}"))
                .collect(),
            Prepared::Aux(p) => p.cells.iter().map(|m2| format!("m2_{m2}")).collect(),
            Prepared::Heredity(p) => p.cells.iter().map(|q| format!("q{q}")).collect(),
            Prepared::Neighborhood(p) => p
                .cells
                .iter()
                .map(|(n, m)| format!("n{n}_m{m}"))
                .collect(),
            Prepared::Extraction(p) => p.cells.iter().map(|(m, _)| format!("m{m}")).collect(),
        }
    }

    fn cell_skipped(&self, cell: usize) -> bool {
        match self {
            Prepared::Extraction(p) => p.cells[cell].1,
            _ => false,
        }
    }

    fn cell_count(&self) -> usize {
        match self {
            Prepared::Counting(p) => p.cells.len(),
            Prepared::Aux(p) => p.cells.len(),
            Prepared::Heredity(p) => p.cells.len(),
            Prepared::Neighborhood(p) => p.cells.len(),
            Prepared::Extraction(p) => p.cells.len(),
        }
    }
}

fn resolve_m_grid(
    grid: &MGrid,
    pattern: &PatternGraph,
    n: usize,
    c: &Rational,
) -> Result<Vec<usize>, ExperimentError> {
    match grid {
        MGrid::Absolute(values) => Ok(values.clone()),
        MGrid::ThresholdMultiples(mults) => {
            let t = edge_threshold(pattern, n as u64, c)?;
            mults
                .iter()
                .map(|mult| {
                    let m = crate::rational::ceil_nonneg_u64(
                        &(&mult.0 * Rational::from_integer(t.into())),
                    );
                    m.to_usize()
                        .ok_or_else(|| ExperimentError::InvalidConfig("m overflow".into()))
                })
                .collect()
        }
    }
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    config.validate()?;
    let threshold_c = config
        .threshold_c
        .as_ref()
        .map(|r| r.0.clone())
        .unwrap_or_else(Rational::one);
    match config.kind {
        ExperimentKind::Counting => {
            let pattern = config.pattern.as_ref().unwrap().resolve()?;
            let mut cells = Vec::new();
            for &n in &config.n_grid {
                for m in resolve_m_grid(
                    config.m_grid.as_ref().unwrap(),
                    &pattern,
                    n,
                    &threshold_c,
                )? {
                    if m > n * n {
                        return Err(ExperimentError::InvalidConfig(format!(
                            "m = {m} exceeds n^2 = {}",
                            n * n
                        )));
                    }
                    cells.push((n, m));
                }
            }
            Ok(Prepared::Counting(CountingPrep {
                pattern,
                eps: config.epsilon.as_ref().unwrap().0.clone(),
                delta: config.delta.as_ref().unwrap().0.clone(),
                cells,
            }))
        }
        ExperimentKind::AuxRegularity => {
            let sizes_vec = config.class_sizes.as_ref().unwrap();
            let sizes = [sizes_vec[0], sizes_vec[1], sizes_vec[2]];
            let eps = config.epsilon.as_ref().unwrap().0.clone();
            let d1 = config.d1.as_ref().unwrap().0.clone();
            let g1_edges = prepare_g1(config, &sizes, &eps, &d1)?;
            let d1_emp = Rational::new(
                (g1_edges.len() as u64).into(),
                ((sizes[0] * sizes[1]) as u64).into(),
            );
            Ok(Prepared::Aux(AuxPrep {
                sizes,
                eps,
                eps_prime: config.epsilon_prime.as_ref().unwrap().0.clone(),
                g1_edges,
                d1_emp,
                cells: config.m2_grid.clone(),
            }))
        }
        ExperimentKind::Heredity => {
            let sizes = config.class_sizes.as_ref().unwrap();
            let (n1, n2) = (sizes[0], sizes[1]);
            let m = config.pair_m.unwrap();
            let eps = config.epsilon.as_ref().unwrap().0.clone();
            let d_target = config.d_target.as_ref().unwrap().0.clone();
            let mode = config.heredity_mode.unwrap();
            let artifact = RngSpec::new(derive_seed(config.base_seed, ARTIFACT_TAG), 0);
            let pair = generate_screened_pair(
                n1,
                n2,
                m,
                &eps,
                match mode {
                    HeredityMode::Lower => Some(&d_target),
                    HeredityMode::Regular => None,
                },
                config.max_rejects,
                config.witness_budget,
                &artifact,
            )?;
            let pair_density = pair.pair_density(0, 1)?;
            Ok(Prepared::Heredity(HeredityPrep {
                pair,
                mode,
                eps,
                eps_prime: config.epsilon_prime.as_ref().unwrap().0.clone(),
                d_target,
                pair_density,
                cells: config.q_grid.clone(),
            }))
        }
        ExperimentKind::Neighborhood => {
            let pattern = config.pattern.as_ref().unwrap().resolve()?;
            let mut cells = Vec::new();
            for &n in &config.n_grid {
                for m in resolve_m_grid(
                    config.m_grid.as_ref().unwrap(),
                    &pattern,
                    n,
                    &threshold_c,
                )? {
                    if m > n * n {
                        return Err(ExperimentError::InvalidConfig(format!(
                            "m = {m} exceeds n^2 = {}",
                            n * n
                        )));
                    }
                    cells.push((n, m));
                }
            }
            Ok(Prepared::Neighborhood(NeighborhoodPrep {
                pattern,
                eps: config.epsilon.as_ref().unwrap().0.clone(),
                eps_prime: config.epsilon_prime.as_ref().unwrap().0.clone(),
                delta: config.delta.as_ref().unwrap().0.clone(),
                d_target: config.d_target.as_ref().unwrap().0.clone(),
                cells,
            }))
        }
        ExperimentKind::Extraction => {
            let sizes = config.class_sizes.as_ref().unwrap();
            let (n1, n2) = (sizes[0], sizes[1]);
            let eps = config.epsilon.as_ref().unwrap().0.clone();
            let c_lower = config
                .extraction_c
                .as_ref()
                .map(|r| r.0.clone())
                .unwrap_or_else(Rational::one);
            let pair = if config.source_complete == Some(true) {
                ClassedGraph::complete(PatternGraph::complete(2), vec![n1, n2])?
            } else {
                let artifact = RngSpec::new(derive_seed(config.base_seed, ARTIFACT_TAG), 0);
                generate_screened_pair(
                    n1,
                    n2,
                    config.pair_m.unwrap(),
                    &eps,
                    None,
                    config.max_rejects,
                    config.witness_budget,
                    &artifact,
                )?
            };
            let bound = &c_lower * (rational_from_usize(n1) + rational_from_usize(n2));
            let m_values = match config.m_grid.as_ref().unwrap() {
                MGrid::Absolute(v) => v.clone(),
                MGrid::ThresholdMultiples(_) => {
                    return Err(ExperimentError::InvalidConfig(
                        "extraction m_grid must be absolute".into(),
                    ))
                }
            };
            let edge_count = pair.pair_edge_count(0, 1)?;
            let cells = m_values
                .into_iter()
                .map(|m| {
                    let skipped =
                        rational_from_usize(m) < bound || m > edge_count;
                    (m, skipped)
                })
                .collect();
            Ok(Prepared::Extraction(ExtractionPrep {
                pair,
                eps,
                c_lower,
                cells,
            }))
        }
    }
}

/// Rejection-samples one bipartite pair until it passes an exact (or, above
/// the exact cap, falsifier-based) screen: eps-regularity, or
/// `(eps, d)`-lower-regularity when a target density is given.
fn generate_screened_pair(
    n1: usize,
    n2: usize,
    m: usize,
    eps: &Rational,
    lower_target: Option<&Rational>,
    max_rejects: usize,
    witness_budget: u32,
    spec: &RngSpec,
) -> Result<ClassedGraph, ExperimentError> {
    let exact_fits = n1 <= EXACT_SIDE_CAP && n2 <= EXACT_SIDE_CAP;
    for attempt in 0..max_rejects.max(1) {
        let attempt_spec = spec.child(attempt as u64);
        let edges = sample_bipartite_exact_m(n1, n2, m, &mut attempt_spec.rng())?;
        let g = ClassedGraph::bipartite(n1, n2, &edges)?;
        let view = g.pair_view(0, 1)?;
        let ok = match (exact_fits, lower_target) {
            (true, Some(d)) => check_lower_regular_exact_view(&view, eps, d)?.is_certified(),
            (true, None) => check_eps_regular_exact_view(&view, eps)?.is_certified(),
            (false, target) => {
                let goal = match target {
                    Some(d) => RegularityGoal::LowerRegular { density: d.clone() },
                    None => RegularityGoal::EpsRegular,
                };
                !witness_search_view(
                    &view,
                    eps,
                    goal,
                    witness_budget,
                    &attempt_spec.with_stream(1),
                )?
                .is_violation()
            }
        };
        if ok {
            return Ok(g);
        }
    }
    Err(SamplingError::RejectionExhausted {
        rejects: max_rejects.max(1),
    }
    .into())
}

fn prepare_g1(
    config: &ExperimentConfig,
    sizes: &[usize; 3],
    eps: &Rational,
    d1: &Rational,
) -> Result<Vec<(usize, usize)>, ExperimentError> {
    let (n1, n2) = (sizes[0], sizes[1]);
    match config.g1_source.as_ref().unwrap() {
        G1Source::Complete => Ok((0..n1)
            .flat_map(|a| (0..n2).map(move |b| (a, b)))
            .collect()),
        G1Source::SampledLowerRegular => {
            let m1 = round_to_edges(d1, n1, n2);
            let artifact = RngSpec::new(derive_seed(config.base_seed, ARTIFACT_TAG), 0);
            let pair = generate_screened_pair(
                n1,
                n2,
                m1,
                eps,
                Some(d1),
                config.max_rejects,
                config.witness_budget,
                &artifact,
            )?;
            Ok(pair.pair_edges(0, 1)?)
        }
        G1Source::File { file } => {
            let g = parse_graph_file(&std::fs::read_to_string(file)?)?;
            if g.class_count() != 2 || g.sizes() != [n1, n2] {
                return Err(ExperimentError::InvalidConfig(format!(
                    "g1 file must be a bipartite pair with sizes {n1} x {n2}"
                )));
            }
            Ok(g.pair_edges(0, 1)?)
        }
    }
}

/// `round(d * n1 * n2)`, half up.
fn round_to_edges(d: &Rational, n1: usize, n2: usize) -> usize {
    let v = d * rational_from_usize(n1) * rational_from_usize(n2) + rat(1, 2);
    crate::rational::floor_u64(&v).unwrap_or(0) as usize
}

// ============================================================================
// Screens shared by trial runners
// ============================================================================

struct ScreenOutcome {
    passed: bool,
    exact: bool,
    verdict: &'static str,
}

/// Exact check when the view fits the cap, falsifier otherwise; for
/// falsifier checks, `no-witness-found` passes (sound but incomplete).
fn screen_view(
    view: &PairView<'_>,
    eps: &Rational,
    lower_target: Option<&Rational>,
    witness_budget: u32,
    rng_spec: &RngSpec,
) -> Result<ScreenOutcome, ExperimentError> {
    let exact_fits = view.n1 <= EXACT_SIDE_CAP && view.n2 <= EXACT_SIDE_CAP;
    let verdict: RegularityVerdict = if exact_fits {
        match lower_target {
            Some(d) => check_lower_regular_exact_view(view, eps, d)?,
            None => check_eps_regular_exact_view(view, eps)?,
        }
    } else {
        let goal = match lower_target {
            Some(d) => RegularityGoal::LowerRegular { density: d.clone() },
            None => RegularityGoal::EpsRegular,
        };
        witness_search_view(view, eps, goal, witness_budget, rng_spec)?
    };
    Ok(ScreenOutcome {
        passed: !verdict.is_violation(),
        exact: exact_fits,
        verdict: verdict.kind_str(),
    })
}

// ============================================================================
// Per-kind trial runners
// ============================================================================

fn blank_record(
    kind: &'static str,
    cell_id: String,
    trial_index: usize,
    derived_seed: u64,
) -> TrialRecord {
    TrialRecord {
        experiment_kind: kind,
        cell_id,
        n: 0,
        m: 0,
        epsilon: None,
        epsilon_prime: None,
        delta: None,
        trial_index,
        derived_seed,
        accepted_regular: None,
        acceptance_mode: None,
        copy_count: None,
        expected_count: None,
        bad_flag: None,
        good_vertex_count: None,
        verdict_kind: None,
        retries: 0,
        wall_ms: 0,
    }
}

fn run_counting_trial(
    prep: &CountingPrep,
    config: &ExperimentConfig,
    cell: usize,
    rec: &mut TrialRecord,
) -> Result<(), ExperimentError> {
    let (n, m) = prep.cells[cell];
    rec.n = n;
    rec.m = m;
    rec.epsilon = Some(prep.eps.clone());
    rec.delta = Some(prep.delta.clone());
    let spec = RngSpec::new(rec.derived_seed, 0);
    let sizes = vec![n; prep.pattern.ell()];
    let npairs = prep.pattern.edge_count();
    let g = sample_blowup(&prep.pattern, &sizes, &vec![m; npairs], &spec)?;

    let mut accepted = true;
    let mut all_exact = true;
    let mut overall = "certified-regular";
    for (rank, &(x, y)) in prep.pattern.edges().iter().enumerate() {
        let view = g.pair_view(x, y)?;
        let outcome = screen_view(
            &view,
            &prep.eps,
            None,
            config.witness_budget,
            &spec.with_stream((npairs + rank) as u64),
        )?;
        all_exact &= outcome.exact;
        if !outcome.passed {
            accepted = false;
            overall = "witness-violation";
            break;
        }
    }
    if accepted {
        overall = if all_exact {
            "certified-regular"
        } else {
            "no-witness-found"
        };
    }
    rec.accepted_regular = Some(accepted);
    rec.acceptance_mode = Some(if all_exact {
        AcceptanceMode::Certified
    } else {
        AcceptanceMode::Heuristic
    });
    rec.verdict_kind = Some(overall);

    let count = count_canonical(&g, &prep.pattern)?.total;
    let expected = expected_count_uniform(&prep.pattern, n, m);
    rec.bad_flag = Some(is_bad_count(&count, &expected, &prep.delta));
    rec.copy_count = Some(count);
    rec.expected_count = Some(expected);
    Ok(())
}

fn run_aux_trial(
    prep: &AuxPrep,
    config: &ExperimentConfig,
    cell: usize,
    rec: &mut TrialRecord,
) -> Result<(), ExperimentError> {
    let [n1, n2, n3] = prep.sizes;
    let m2 = prep.cells[cell];
    rec.n = n1;
    rec.m = m2;
    rec.epsilon = Some(prep.eps.clone());
    rec.epsilon_prime = Some(prep.eps_prime.clone());
    let spec = RngSpec::new(rec.derived_seed, 0);
    let edges2 = sample_bipartite_exact_m(n1, n3, m2, &mut spec.with_stream(0).rng())?;
    let pattern = PatternGraph::new(3, &[(0, 1), (0, 2)]).expect("cherry pattern");
    let g = ClassedGraph::new(
        pattern,
        vec![n1, n2, n3],
        &[prep.g1_edges.clone(), edges2],
    )?;

    let d2 = Rational::new((m2 as u64).into(), ((n1 * n3) as u64).into());
    let screen = screen_view(
        &g.pair_view(0, 2)?,
        &prep.eps,
        Some(&d2),
        config.witness_budget,
        &spec.with_stream(1),
    )?;
    rec.accepted_regular = Some(screen.passed);
    rec.acceptance_mode = Some(if screen.exact {
        AcceptanceMode::Certified
    } else {
        AcceptanceMode::Heuristic
    });

    let aux = build_path_aux(&g, 0, 1, 2)?;
    let target = &prep.d1_emp * &d2;
    let exact_fits = n1 <= EXACT_SIDE_CAP && n2 * n3 <= EXACT_SIDE_CAP;
    let mode = if exact_fits {
        CheckMode::Exact
    } else {
        CheckMode::Witness {
            budget: config.witness_budget,
        }
    };
    let verdict = aux_lower_regularity(
        &aux,
        &prep.eps_prime,
        &target,
        &mode,
        &spec.with_stream(2),
    )?;
    rec.bad_flag = Some(verdict.is_violation());
    rec.verdict_kind = Some(verdict.kind_str());
    Ok(())
}

fn run_heredity_trial(
    prep: &HeredityPrep,
    config: &ExperimentConfig,
    cell: usize,
    rec: &mut TrialRecord,
) -> Result<(), ExperimentError> {
    let q = prep.cells[cell];
    let view = prep.pair.pair_view(0, 1)?;
    let (n1, n2) = (view.n1, view.n2);
    rec.n = n1;
    rec.m = view.edge_count;
    rec.epsilon = Some(prep.eps.clone());
    rec.epsilon_prime = Some(prep.eps_prime.clone());
    let spec = RngSpec::new(rec.derived_seed, 0);
    let mut rng = spec.with_stream(0).rng();
    let chosen = crate::sampling::sample_indices(n1, q, &mut rng);
    let mut edges = Vec::new();
    for (new_i, &old) in chosen.iter().enumerate() {
        for b in view.rows[old].ones() {
            edges.push((new_i, b));
        }
    }
    let qpair = ClassedGraph::bipartite(q, n2, &edges)?;
    let qview = qpair.pair_view(0, 1)?;

    let passed = match prep.mode {
        HeredityMode::Lower => {
            let outcome = screen_view(
                &qview,
                &prep.eps_prime,
                Some(&prep.d_target),
                config.witness_budget,
                &spec.with_stream(1),
            )?;
            rec.verdict_kind = Some(outcome.verdict);
            outcome.passed
        }
        HeredityMode::Regular => {
            let outcome = screen_view(
                &qview,
                &prep.eps_prime,
                None,
                config.witness_budget,
                &spec.with_stream(1),
            )?;
            rec.verdict_kind = Some(outcome.verdict);
            let one = Rational::one();
            let dq = qview.density();
            let in_window = dq >= (&one - &prep.eps) * &prep.pair_density
                && dq <= (&one + &prep.eps) * &prep.pair_density;
            outcome.passed && in_window
        }
    };
    rec.bad_flag = Some(!passed);
    Ok(())
}

fn run_neighborhood_trial(
    prep: &NeighborhoodPrep,
    config: &ExperimentConfig,
    cell: usize,
    rec: &mut TrialRecord,
) -> Result<(), ExperimentError> {
    let (n, m) = prep.cells[cell];
    rec.n = n;
    rec.m = m;
    rec.epsilon = Some(prep.eps.clone());
    rec.epsilon_prime = Some(prep.eps_prime.clone());
    rec.delta = Some(prep.delta.clone());
    let spec = RngSpec::new(rec.derived_seed, 0);
    let sizes = vec![n; 4];
    let m_per_pair = vec![m; prep.pattern.edge_count()];
    let sample = match sample_regular_blowup(
        &prep.pattern,
        &sizes,
        &m_per_pair,
        &prep.eps,
        &VerifyMode::Auto {
            witness_budget: config.witness_budget,
        },
        config.max_rejects,
        &spec,
    ) {
        Ok(s) => s,
        Err(SamplingError::RejectionExhausted { rejects }) => {
            rec.accepted_regular = Some(false);
            rec.retries = rejects;
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    rec.accepted_regular = Some(true);
    rec.acceptance_mode = Some(sample.acceptance);
    rec.retries = sample.rejects;
    let g = &sample.graph;

    let one = Rational::one();
    let size_floor = (&one - &prep.eps_prime) * rational_from_usize(m) / rational_from_usize(n);
    let d_matrix = DensityMatrix::uniform(3, &prep.d_target)?;
    let mut good = 0usize;
    for v1 in 0..n {
        let restriction = neighborhood_restriction(g, 0, v1, &[1], &[2, 3])?;
        let r = &restriction.graph;
        let rs = r.sizes();
        if rs.iter().any(|&s| s == 0) {
            continue;
        }
        if rational_from_usize(rs[1]) < size_floor || rational_from_usize(rs[2]) < size_floor {
            continue;
        }
        let mut all_pairs_ok = true;
        for (slot, &(x, y)) in r.pattern().edges().iter().enumerate() {
            let outcome = screen_view(
                &r.pair_view(x, y)?,
                &prep.eps_prime,
                Some(&prep.d_target),
                config.witness_budget,
                &spec.with_stream(8 + (v1 * 8 + slot) as u64),
            )?;
            if !outcome.passed {
                all_pairs_ok = false;
                break;
            }
        }
        if !all_pairs_ok {
            continue;
        }
        if bad_family_b3(r, &prep.delta, &d_matrix)? {
            continue;
        }
        good += 1;
    }
    rec.good_vertex_count = Some(good);
    let target = (&one - &prep.eps_prime) * rational_from_usize(n);
    rec.bad_flag = Some(rational_from_usize(good) < target);
    rec.verdict_kind = Some(if rec.bad_flag == Some(true) {
        "witness-violation"
    } else {
        "certified-regular"
    });
    Ok(())
}

fn run_extraction_trial(
    prep: &ExtractionPrep,
    _config: &ExperimentConfig,
    cell: usize,
    rec: &mut TrialRecord,
) -> Result<(), ExperimentError> {
    let (m, _) = prep.cells[cell];
    let view = prep.pair.pair_view(0, 1)?;
    rec.n = view.n1;
    rec.m = m;
    rec.epsilon = Some(prep.eps.clone());
    let spec = RngSpec::new(rec.derived_seed, 0);
    let out = crate::sampling::extract_m_subgraph(
        &prep.pair,
        (0, 1),
        m,
        &prep.eps,
        &prep.c_lower,
        false,
        1,
        &spec,
    )?;
    let sub = ClassedGraph::bipartite(view.n1, view.n2, &out.edges)?;
    let two_eps = &prep.eps + &prep.eps;
    let verdict = check_eps_regular_exact_view(&sub.pair_view(0, 1)?, &two_eps)?;
    rec.bad_flag = Some(verdict.is_violation());
    rec.verdict_kind = Some(verdict.kind_str());
    Ok(())
}

fn run_trial(
    prep: &Prepared,
    config: &ExperimentConfig,
    cell: usize,
    trial_in_cell: usize,
) -> Result<TrialRecord, ExperimentError> {
    let global = cell * config.trials + trial_in_cell;
    let derived_seed = derive_trial_seed(config.base_seed, global as u64);
    let cell_id = prep.cell_ids()[cell].clone();
    let kind = config.kind.as_str();
    let mut rec = blank_record(kind, cell_id, global, derived_seed);
    let start = Instant::now();
    match prep {
        Prepared::Counting(p) => run_counting_trial(p, config, cell, &mut rec)?,
        Prepared::Aux(p) => run_aux_trial(p, config, cell, &mut rec)?,
        Prepared::Heredity(p) => run_heredity_trial(p, config, cell, &mut rec)?,
        Prepared::Neighborhood(p) => run_neighborhood_trial(p, config, cell, &mut rec)?,
        Prepared::Extraction(p) => run_extraction_trial(p, config, cell, &mut rec)?,
    }
    rec.wall_ms = start.elapsed().as_millis() as u64;
    Ok(rec)
}

/// Re-runs one trial from scratch (artifacts included); used to confirm
/// that recorded flags are recomputable from the derived seed alone.
pub fn replay_trial(
    config: &ExperimentConfig,
    global_index: usize,
) -> Result<TrialRecord, ExperimentError> {
    let prep = prepare(config)?;
    let cell = global_index / config.trials;
    if cell >= prep.cell_count() {
        return Err(ExperimentError::InvalidConfig(format!(
            "global trial index {global_index} outside the grid"
        )));
    }
    if prep.cell_skipped(cell) {
        return Err(ExperimentError::InvalidConfig(format!(
            "cell {cell} is skipped; no trials to replay"
        )));
    }
    run_trial(&prep, config, cell, global_index % config.trials)
}

// ============================================================================
// Orchestration
// ============================================================================

pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
    pub paths: ReportPaths,
}

/// Runs every cell of the configured grid and writes `trials.csv` and
/// `summary.json` into `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    workers_override: Option<usize>,
) -> Result<RunOutput, ExperimentError> {
    let started = Instant::now();
    let prep = prepare(config)?;
    let workers = workers_override.unwrap_or(config.workers).max(1);

    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for cell in 0..prep.cell_count() {
        if prep.cell_skipped(cell) {
            continue;
        }
        for t in 0..config.trials {
            jobs.push((cell, t));
        }
    }

    let mut slots: Vec<Option<Result<TrialRecord, ExperimentError>>> =
        (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let prep = &prep;
        let jobs = &jobs;
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    for (pos, &(cell, t)) in jobs.iter().enumerate() {
                        if pos % workers == w {
                            out.push((pos, run_trial(prep, config, cell, t)));
                        }
                    }
                    out
                })
            })
            .collect();
        for h in handles {
            for (pos, rec) in h.join().expect("worker panicked") {
                slots[pos] = Some(rec);
            }
        }
    });
    let mut records = Vec::with_capacity(slots.len());
    for slot in slots {
        records.push(slot.expect("every job filled")?);
    }

    let summary = summarize(config, &prep, &records, started.elapsed().as_millis() as u64);
    let paths = write_report(&records, &summary, out_dir)?;
    Ok(RunOutput {
        records,
        summary,
        paths,
    })
}

fn summarize(
    config: &ExperimentConfig,
    prep: &Prepared,
    records: &[TrialRecord],
    total_wall_ms: u64,
) -> Summary {
    let ids = prep.cell_ids();
    let mut cells = Vec::with_capacity(ids.len());
    for (cell, id) in ids.iter().enumerate() {
        let skipped = prep.cell_skipped(cell);
        let rows: Vec<&TrialRecord> = records.iter().filter(|r| &r.cell_id == id).collect();
        let trials = rows.len();
        let mut fractions = BTreeMap::new();
        let count =
            |pred: fn(&TrialRecord) -> bool| rows.iter().filter(|r| pred(r)).count();
        let failure_name: &str = match config.kind {
            ExperimentKind::Counting => {
                let accepted = count(|r| r.accepted_regular == Some(true));
                let bad = count(|r| r.bad_flag == Some(true));
                let bad_acc =
                    count(|r| r.bad_flag == Some(true) && r.accepted_regular == Some(true));
                fractions.insert("accepted".into(), FractionStat::new(accepted, trials));
                fractions.insert("bad".into(), FractionStat::new(bad, trials));
                fractions.insert(
                    "bad_given_accepted".into(),
                    FractionStat::new(bad_acc, accepted),
                );
                "bad"
            }
            ExperimentKind::AuxRegularity => {
                let screen = count(|r| r.accepted_regular == Some(true));
                let failed = count(|r| r.bad_flag == Some(true));
                let failed_scr =
                    count(|r| r.bad_flag == Some(true) && r.accepted_regular == Some(true));
                fractions.insert("screen_passed".into(), FractionStat::new(screen, trials));
                fractions.insert("aux_failed".into(), FractionStat::new(failed, trials));
                fractions.insert(
                    "aux_failed_given_screen_pass".into(),
                    FractionStat::new(failed_scr, screen),
                );
                "aux_failed"
            }
            ExperimentKind::Heredity => {
                let passed = count(|r| r.bad_flag == Some(false));
                fractions.insert("passed".into(), FractionStat::new(passed, trials));
                fractions.insert(
                    "failed".into(),
                    FractionStat::new(trials - passed, trials),
                );
                "failed"
            }
            ExperimentKind::Neighborhood => {
                let sampled = count(|r| r.accepted_regular == Some(true));
                let met = count(|r| r.bad_flag == Some(false));
                fractions.insert("sample_ok".into(), FractionStat::new(sampled, trials));
                fractions.insert("target_met".into(), FractionStat::new(met, trials));
                fractions.insert(
                    "target_missed".into(),
                    FractionStat::new(trials - met, trials),
                );
                let good_total: usize =
                    rows.iter().filter_map(|r| r.good_vertex_count).sum();
                let n_total: usize = rows.iter().map(|r| r.n).sum();
                fractions.insert(
                    "good_vertex_fraction".into(),
                    FractionStat::new(good_total, n_total),
                );
                "target_missed"
            }
            ExperimentKind::Extraction => {
                let passed = count(|r| r.bad_flag == Some(false));
                fractions.insert("passed".into(), FractionStat::new(passed, trials));
                fractions.insert(
                    "failed".into(),
                    FractionStat::new(trials - passed, trials),
                );
                "failed"
            }
        };
        let within_beta = if skipped {
            None
        } else {
            config.beta.as_ref().map(|beta| {
                fractions
                    .get(failure_name)
                    .and_then(|f| f.fraction)
                    .map(|frac| {
                        // Compare against the rational bound in floats only
                        // for bookkeeping; verdicts never depend on this.
                        frac <= beta.0.to_f64().unwrap_or(0.0)
                    })
                    .unwrap_or(true)
            })
        };
        cells.push(CellSummary {
            cell_id: id.clone(),
            trials,
            skipped,
            fractions,
            within_beta,
        });
    }
    Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        cells,
        total_wall_ms,
    }
}
