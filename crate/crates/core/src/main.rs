//! Command-line front end: check, count, aux, sample, experiment.
//!
//! Exit codes: 0 success (including `certified-regular` / `no-witness-found`
//! verdicts), 10 regularity violation, 2 validation or usage error, 3 I/O
//! error. Verdict-affecting parameters are exact rationals ("1/2"); decimal
//! input is rejected. Class labels on the command line are 1-based, matching
//! the graph file format; vertex indices are 0-based.

use clap::{Args, Parser, Subcommand, ValueEnum};
use regcount::auxgraph::{aux_lower_regularity, build_path_aux};
use regcount::counting::{
    count_canonical, per_edge_counts, per_vertex_counts, CopyCount,
};
use regcount::experiments::{run_experiment, ExperimentConfig};
use regcount::model::{
    parse_graph_file, parse_pattern_file, serialize_graph_file, ClassedGraph, PatternGraph,
};
use regcount::rational::{parse_rational, Rational};
use regcount::regularity::{
    check_eps_regular_exact, check_lower_regular_exact, witness_search, CheckMode,
    RegularityGoal, RegularityVerdict, Witness,
};
use regcount::sampling::{sample_blowup, sample_regular_blowup, RngSpec, VerifyMode};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_VIOLATION: u8 = 10;

#[derive(Parser)]
#[command(
    name = "regcount",
    version,
    about = "Blow-up graph regularity checks, canonical counting, and seeded experiments"
)]
struct Cli {
    /// Emit one JSON object per result instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Witness,
}

#[derive(Subcommand)]
enum Command {
    /// Verify (eps)-regularity or (eps, d)-lower-regularity of one pair.
    Check(CheckArgs),
    /// Count canonical copies of a pattern.
    Count(CountArgs),
    /// Build the path-aux graph and optionally check its lower-regularity.
    Aux(AuxArgs),
    /// Sample a blow-up with exact per-pair edge counts.
    Sample(SampleArgs),
    /// Run a configured experiment grid and write reports.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Pair as 1-based class labels, e.g. "1,2".
    #[arg(long)]
    pair: String,
    /// Exact rational, e.g. "1/2".
    #[arg(long)]
    epsilon: String,
    /// Check the one-sided lower-regularity inequality instead.
    #[arg(long)]
    lower: bool,
    /// Target density for --lower, exact rational.
    #[arg(long)]
    density: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Falsifier restarts in witness mode.
    #[arg(long, default_value_t = 200)]
    budget: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    graph: PathBuf,
    /// K3 | K4 | K4e | a pattern file path.
    #[arg(long)]
    pattern: String,
    /// Also print per-vertex copy degrees for every class.
    #[arg(long)]
    per_vertex: bool,
    /// Also print per-edge copy degrees for every pattern edge.
    #[arg(long)]
    per_edge: bool,
}

#[derive(Args)]
struct AuxArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Anchor class, 1-based.
    #[arg(long)]
    anchor: usize,
    /// Left product class, 1-based.
    #[arg(long)]
    left: usize,
    /// Right product class, 1-based.
    #[arg(long)]
    right: usize,
    /// Run the lower-regularity check on the aux pair.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    epsilon_prime: Option<String>,
    /// Target density (typically the product of the two pair densities);
    /// defaults to that product.
    #[arg(long)]
    density: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[arg(long, default_value_t = 200)]
    budget: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SampleArgs {
    /// K3 | K4 | K4e | a pattern file path.
    #[arg(long)]
    pattern: String,
    /// Comma-separated class sizes, e.g. "8,8,8".
    #[arg(long)]
    sizes: String,
    /// Per-pair edge counts: one value broadcast to all pairs, or one per
    /// pattern edge in sorted pair order.
    #[arg(long)]
    m: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Rejection-sample until every pair passes this (eps)-regularity screen.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long, default_value_t = 1000)]
    max_rejects: usize,
    /// Falsifier restarts for pairs too large for exact screening.
    #[arg(long, default_value_t = 20)]
    budget: u32,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's worker count.
    #[arg(long)]
    workers: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe instead of panicking; the output is
    // meant to be piped into other tooling.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Check(args) => cmd_check(cli.json, args),
        Command::Count(args) => cmd_count(cli.json, args),
        Command::Aux(args) => cmd_aux(cli.json, args),
        Command::Sample(args) => cmd_sample(cli.json, args),
        Command::Experiment(args) => cmd_experiment(cli.json, args),
    }
}

// ============================================================================
// Shared helpers
// ============================================================================

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<ClassedGraph, Failure> {
    parse_graph_file(&read_file(path)?).map_err(|e| Failure::validation(e.to_string()))
}

fn rational_arg(name: &str, value: &str) -> Result<Rational, Failure> {
    parse_rational(value).map_err(|e| Failure::validation(format!("--{name}: {e}")))
}

fn class_label(name: &str, value: usize, classes: usize) -> Result<usize, Failure> {
    if value == 0 || value > classes {
        return Err(Failure::validation(format!(
            "--{name}: class label {value} outside 1..={classes}"
        )));
    }
    Ok(value - 1)
}

fn pattern_arg(selector: &str) -> Result<PatternGraph, Failure> {
    if let Some(p) = PatternGraph::from_name(selector) {
        return Ok(p);
    }
    let text = read_file(Path::new(selector))?;
    parse_pattern_file(&text).map_err(|e| Failure::validation(e.to_string()))
}

fn witness_json(w: &Witness) -> serde_json::Value {
    json!({
        "side1": w.side1.indices(),
        "side2": w.side2.indices(),
        "subpair_density": w.subpair_density.to_string(),
        "reference_density": w.reference_density.to_string(),
    })
}

fn print_verdict(json_mode: bool, verdict: &RegularityVerdict, extra: serde_json::Value) -> u8 {
    if json_mode {
        let mut obj = json!({
            "verdict": verdict.kind_str(),
            "subsets_examined": verdict.subsets_examined(),
        });
        if let Some(w) = verdict.witness() {
            obj["witness"] = witness_json(w);
        }
        if let Some(map) = extra.as_object() {
            for (k, v) in map {
                obj[k] = v.clone();
            }
        }
        println!("{obj}");
    } else {
        println!("verdict: {}", verdict.kind_str());
        if let Some(map) = extra.as_object() {
            for (k, v) in map {
                println!("{k}: {}", v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string()));
            }
        }
        if let Some(w) = verdict.witness() {
            println!(
                "witness: side1={:?} side2={:?} density={} reference={}",
                w.side1.indices(),
                w.side2.indices(),
                w.subpair_density,
                w.reference_density
            );
        }
        println!("subsets_examined: {}", verdict.subsets_examined());
    }
    if verdict.is_violation() {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

// ============================================================================
// Subcommands
// ============================================================================

fn cmd_check(json_mode: bool, args: &CheckArgs) -> Result<u8, Failure> {
    let g = load_graph(&args.graph)?;
    let (xs, ys) = args
        .pair
        .split_once(',')
        .ok_or_else(|| Failure::validation("--pair expects \"x,y\""))?;
    let parse_label = |s: &str| -> Result<usize, Failure> {
        let v: usize = s
            .trim()
            .parse()
            .map_err(|_| Failure::validation(format!("--pair: bad class label {s:?}")))?;
        class_label("pair", v, g.class_count())
    };
    let (mut x, mut y) = (parse_label(xs)?, parse_label(ys)?);
    if x > y {
        std::mem::swap(&mut x, &mut y);
    }
    let eps = rational_arg("epsilon", &args.epsilon)?;
    let density = match &args.density {
        Some(d) => Some(rational_arg("density", d)?),
        None => None,
    };
    if args.lower && density.is_none() {
        return Err(Failure::validation("--lower requires --density"));
    }

    let verdict = match (args.mode, args.lower) {
        (ModeArg::Exact, false) => check_eps_regular_exact(&g, (x, y), &eps),
        (ModeArg::Exact, true) => {
            check_lower_regular_exact(&g, (x, y), &eps, density.as_ref().unwrap())
        }
        (ModeArg::Witness, lower) => {
            let goal = if lower {
                RegularityGoal::LowerRegular {
                    density: density.clone().unwrap(),
                }
            } else {
                RegularityGoal::EpsRegular
            };
            witness_search(&g, (x, y), &eps, goal, args.budget, &RngSpec::new(args.seed, 0))
        }
    }
    .map_err(|e| Failure::validation(e.to_string()))?;

    let extra = json!({
        "pair": format!("{},{}", x + 1, y + 1),
        "pair_density": g.pair_density(x, y).map_err(|e| Failure::validation(e.to_string()))?.to_string(),
    });
    Ok(print_verdict(json_mode, &verdict, extra))
}

fn count_json(c: &CopyCount) -> serde_json::Value {
    json!({ "total": c.total.to_string() })
}

fn cmd_count(json_mode: bool, args: &CountArgs) -> Result<u8, Failure> {
    let g = load_graph(&args.graph)?;
    let h = pattern_arg(&args.pattern)?;
    let count = count_canonical(&g, &h).map_err(|e| Failure::validation(e.to_string()))?;

    let mut per_vertex = Vec::new();
    if args.per_vertex {
        for class in 0..g.class_count() {
            let counts =
                per_vertex_counts(&g, &h, class).map_err(|e| Failure::validation(e.to_string()))?;
            per_vertex.push((class, counts));
        }
    }
    let mut per_edge = Vec::new();
    if args.per_edge {
        for &(x, y) in h.edges() {
            let counts =
                per_edge_counts(&g, &h, (x, y)).map_err(|e| Failure::validation(e.to_string()))?;
            per_edge.push(((x, y), counts));
        }
    }

    if json_mode {
        let mut obj = count_json(&count);
        if args.per_vertex {
            obj["per_vertex"] = json!(per_vertex
                .iter()
                .map(|(class, counts)| (
                    (class + 1).to_string(),
                    counts.iter().map(|c| c.to_string()).collect::<Vec<_>>()
                ))
                .collect::<std::collections::BTreeMap<_, _>>());
        }
        if args.per_edge {
            obj["per_edge"] = json!(per_edge
                .iter()
                .map(|((x, y), counts)| (
                    format!("{},{}", x + 1, y + 1),
                    counts
                        .iter()
                        .map(|((a, b), c)| json!([a, b, c.to_string()]))
                        .collect::<Vec<_>>()
                ))
                .collect::<std::collections::BTreeMap<_, _>>());
        }
        println!("{obj}");
    } else {
        println!("{}", count.total);
        for (class, counts) in &per_vertex {
            let joined: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
            println!("per-vertex class {}: {}", class + 1, joined.join(" "));
        }
        for ((x, y), counts) in &per_edge {
            let joined: Vec<String> = counts
                .iter()
                .map(|((a, b), c)| format!("({a},{b})={c}"))
                .collect();
            println!("per-edge pair {},{}: {}", x + 1, y + 1, joined.join(" "));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_aux(json_mode: bool, args: &AuxArgs) -> Result<u8, Failure> {
    let g = load_graph(&args.graph)?;
    let anchor = class_label("anchor", args.anchor, g.class_count())?;
    let left = class_label("left", args.left, g.class_count())?;
    let right = class_label("right", args.right, g.class_count())?;
    let aux =
        build_path_aux(&g, anchor, left, right).map_err(|e| Failure::validation(e.to_string()))?;

    let stats = json!({
        "n1": aux.n1(),
        "y_size": aux.y_size(),
        "edge_count": aux.edge_count(),
    });
    if !args.check {
        if json_mode {
            println!("{stats}");
        } else {
            println!(
                "aux: n1={} y={} edges={}",
                aux.n1(),
                aux.y_size(),
                aux.edge_count()
            );
        }
        return Ok(EXIT_OK);
    }

    let eps_prime = rational_arg(
        "epsilon-prime",
        args.epsilon_prime
            .as_deref()
            .ok_or_else(|| Failure::validation("--check requires --epsilon-prime"))?,
    )?;
    let d_target = match &args.density {
        Some(d) => rational_arg("density", d)?,
        None => {
            let d1 = g
                .pair_density(anchor.min(left), anchor.max(left))
                .map_err(|e| Failure::validation(e.to_string()))?;
            let d2 = g
                .pair_density(anchor.min(right), anchor.max(right))
                .map_err(|e| Failure::validation(e.to_string()))?;
            d1 * d2
        }
    };
    let mode = match args.mode {
        ModeArg::Exact => CheckMode::Exact,
        ModeArg::Witness => CheckMode::Witness {
            budget: args.budget,
        },
    };
    let verdict = aux_lower_regularity(
        &aux,
        &eps_prime,
        &d_target,
        &mode,
        &RngSpec::new(args.seed, 0),
    )
    .map_err(|e| Failure::validation(e.to_string()))?;
    let extra = json!({
        "n1": aux.n1(),
        "y_size": aux.y_size(),
        "edge_count": aux.edge_count(),
        "d_target": d_target.to_string(),
    });
    Ok(print_verdict(json_mode, &verdict, extra))
}

fn cmd_sample(json_mode: bool, args: &SampleArgs) -> Result<u8, Failure> {
    let pattern = pattern_arg(&args.pattern)?;
    let sizes: Vec<usize> = args
        .sizes
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::validation("--sizes expects comma-separated integers"))?;
    if sizes.len() != pattern.ell() {
        return Err(Failure::validation(format!(
            "--sizes: got {} sizes for {} classes",
            sizes.len(),
            pattern.ell()
        )));
    }
    let m_values: Vec<usize> = args
        .m
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::validation("--m expects comma-separated integers"))?;
    let m_per_pair: Vec<usize> = if m_values.len() == 1 {
        vec![m_values[0]; pattern.edge_count()]
    } else if m_values.len() == pattern.edge_count() {
        m_values
    } else {
        return Err(Failure::validation(format!(
            "--m: got {} values for {} pattern edges",
            m_values.len(),
            pattern.edge_count()
        )));
    };

    let spec = RngSpec::new(args.seed, 0);
    let (graph, acceptance, rejects) = match &args.epsilon {
        None => {
            let g = sample_blowup(&pattern, &sizes, &m_per_pair, &spec)
                .map_err(|e| Failure::validation(e.to_string()))?;
            (g, None, 0)
        }
        Some(eps) => {
            let eps = rational_arg("epsilon", eps)?;
            let sample = sample_regular_blowup(
                &pattern,
                &sizes,
                &m_per_pair,
                &eps,
                &VerifyMode::Auto {
                    witness_budget: args.budget,
                },
                args.max_rejects,
                &spec,
            )
            .map_err(|e| Failure::validation(e.to_string()))?;
            (sample.graph, Some(sample.acceptance), sample.rejects)
        }
    };
    let text = serialize_graph_file(&graph);
    std::fs::write(&args.out, text)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", args.out.display())))?;
    if json_mode {
        let mut obj = json!({
            "out": args.out.display().to_string(),
            "total_edges": graph.total_edge_count(),
            "rejects": rejects,
        });
        if let Some(a) = acceptance {
            obj["acceptance_mode"] = json!(a.as_str());
        }
        println!("{obj}");
    } else {
        match acceptance {
            Some(a) => println!(
                "wrote {} ({} edges, acceptance {}, {} rejects)",
                args.out.display(),
                graph.total_edge_count(),
                a.as_str(),
                rejects
            ),
            None => println!(
                "wrote {} ({} edges)",
                args.out.display(),
                graph.total_edge_count()
            ),
        }
    }
    Ok(EXIT_OK)
}

fn cmd_experiment(json_mode: bool, args: &ExperimentArgs) -> Result<u8, Failure> {
    let config = ExperimentConfig::load(&args.config).map_err(|e| match e {
        regcount::experiments::ExperimentError::Io(io) => {
            Failure::io(format!("cannot read {}: {io}", args.config.display()))
        }
        other => Failure::validation(other.to_string()),
    })?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .ok_or_else(|| Failure::validation("no output directory: pass --out or set output"))?;
    let output = run_experiment(&config, &out_dir, args.workers).map_err(|e| match e {
        regcount::experiments::ExperimentError::Io(io) => Failure::io(io.to_string()),
        other => Failure::validation(other.to_string()),
    })?;
    if json_mode {
        println!(
            "{}",
            json!({
                "trials_csv": output.paths.trials_csv.display().to_string(),
                "summary_json": output.paths.summary_json.display().to_string(),
                "trials": output.records.len(),
                "cells": output.summary.cells.len(),
            })
        );
    } else {
        println!(
            "wrote {} and {}",
            output.paths.trials_csv.display(),
            output.paths.summary_json.display()
        );
        for cell in &output.summary.cells {
            let fracs: Vec<String> = cell
                .fractions
                .iter()
                .map(|(name, f)| {
                    format!(
                        "{name}={}",
                        f.fraction
                            .map(|v| format!("{v:.4}"))
                            .unwrap_or_else(|| "n/a".into())
                    )
                })
                .collect();
            println!(
                "cell {} ({} trials{}): {}",
                cell.cell_id,
                cell.trials,
                if cell.skipped { ", skipped" } else { "" },
                fracs.join(" ")
            );
        }
    }
    Ok(EXIT_OK)
}
