//! Command-line front end for the graph-weight workbench.
//!
//! Every subcommand prints a single JSON (or CSV) report to stdout and
//! optionally writes the same bytes to `--out`. Exit codes: 0 when all
//! requested checks pass, 1 when a check fails, 2 on usage or input errors.
//! Reports are byte-deterministic for a fixed invocation: Monte Carlo
//! streams are seeded per worker and reduced in a fixed order, and JSON maps
//! are emitted with sorted keys.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gwb_core::duflo::{exotic_correction, lie_to_mc, star_product, LieAlgebra, StarProduct};
use gwb_core::graph::{enumerate_graphs, DirectedGraph, VertexSet};
use gwb_core::homotopy::{
    stokes_check, verify_relation, KnownWeights, McWeights, StructureComponents,
};
use gwb_core::polyvector::{product, PolyVector, Space};
use gwb_core::rewriting::{
    check_confluence, critical_monomials, rewrite_trace, Presentation, Strategy,
};
use gwb_core::weights::{
    integrate_weight, known_weight, GaugeSlice, WeightCache, DEFAULT_WORKERS,
};

/// Environment variable naming the directory for the append-only weight
/// cache. When set, Monte Carlo weight estimates are stored in and replayed
/// from `$GWB_CACHE_DIR/weights.jsonl`.
const CACHE_ENV: &str = "GWB_CACHE_DIR";

const RELATIONS: [&str; 6] = [
    "lambda-jacobi",
    "lambda-higher-vanish",
    "nu-associativity",
    "mu-associativity",
    "v11-derivation",
    "u1-chain-map",
];

#[derive(Parser)]
#[command(
    name = "gwb",
    version,
    about = "Configuration-space graph weights, homotopy-algebra checks, \
             star products, and rewriting-system diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Directed-graph enumeration over plane and flag configuration spaces.
    Graphs {
        #[command(subcommand)]
        cmd: GraphsCmd,
    },
    /// Weight integrals of individual graphs and whole strata.
    Weight {
        #[command(subcommand)]
        cmd: WeightCmd,
    },
    /// Algebraic identities of the transferred structure maps.
    Relation {
        #[command(subcommand)]
        cmd: RelationCmd,
    },
    /// Star products and the exotic degree-(-1) trilinear correction.
    Duflo {
        #[command(subcommand)]
        cmd: DufloCmd,
    },
    /// Confluence analysis of quadratic operadic presentations.
    Koszul {
        #[command(subcommand)]
        cmd: KoszulCmd,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FlavorArg {
    /// Free vertices in the plane.
    #[value(name = "C")]
    C,
    /// Free vertices plus a collinear flag in the plane.
    #[value(name = "CF_C")]
    CfC,
    /// Free and collinear vertices plus boundary vertices in the half-plane.
    #[value(name = "CF_H")]
    CfH,
}

impl FlavorArg {
    fn as_str(self) -> &'static str {
        match self {
            FlavorArg::C => "C",
            FlavorArg::CfC => "CF_C",
            FlavorArg::CfH => "CF_H",
        }
    }
}

/// Shared vertex-set selector: free vertices are labelled 1..=free, then
/// collinear, then boundary labels continue the count.
#[derive(Args)]
struct VertexArgs {
    /// Configuration-space flavor.
    #[arg(long, value_enum)]
    flavor: FlavorArg,
    /// Number of free vertices.
    #[arg(long, default_value_t = 0)]
    vertices: usize,
    /// Number of collinear (flag) vertices.
    #[arg(long, default_value_t = 0)]
    collinear: usize,
    /// Number of boundary vertices (half-plane flavor only).
    #[arg(long, default_value_t = 0)]
    boundary: usize,
}

impl VertexArgs {
    fn build(&self) -> Result<VertexSet> {
        let mut next = 1u32;
        let mut take = |n: usize| {
            let v: Vec<u32> = (next..next + n as u32).collect();
            next += n as u32;
            v
        };
        let free = take(self.vertices);
        let collinear = take(self.collinear);
        let boundary = take(self.boundary);
        match self.flavor {
            FlavorArg::C => {
                if self.collinear != 0 || self.boundary != 0 {
                    bail!("flavor C has no collinear or boundary vertices");
                }
                Ok(VertexSet::plane(free))
            }
            FlavorArg::CfC => {
                if self.boundary != 0 {
                    bail!("flavor CF_C has no boundary vertices");
                }
                Ok(VertexSet::flag_plane(free, collinear))
            }
            FlavorArg::CfH => Ok(VertexSet::flag_half_plane(free, collinear, boundary)),
        }
    }
}

#[derive(Subcommand)]
enum GraphsCmd {
    /// List all admissible directed graphs in canonical form.
    Enumerate {
        #[command(flatten)]
        vertices: VertexArgs,
        /// Number of directed edges.
        #[arg(long)]
        edges: usize,
        /// Abort if the search would visit more than this many candidates.
        #[arg(long, default_value_t = 10_000_000)]
        bound: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum WeightCmd {
    /// Monte Carlo (or low-dimensional quadrature) weight of one graph.
    Compute {
        /// JSON file describing the graph.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Expected value, as a decimal or a rational like "1/24".
        #[arg(long)]
        expect: Option<String>,
        /// Absolute tolerance; the effective bound is
        /// max(tolerance, 3 * stderr).
        #[arg(long, default_value_t = 5e-3)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weights of every graph in a stratum: exact where tabulated,
    /// Monte Carlo otherwise.
    Table {
        #[command(flatten)]
        vertices: VertexArgs,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 10_000_000)]
        bound: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RelationCmd {
    /// Verify structure-map identities and, optionally, a Stokes identity.
    Check {
        /// Relation name, repeatable; "all" expands to every known relation.
        #[arg(long = "relation", default_values_t = [String::from("all")])]
        relations: Vec<String>,
        /// Coordinate dimension of the sample space.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Graph file for a boundary-stratum Stokes check.
        #[arg(long)]
        stokes: Option<PathBuf>,
        /// Weight source for the Stokes check.
        #[arg(long, value_enum, default_value_t = SourceArg::Known)]
        source: SourceArg,
        /// With the Monte Carlo source, integrate every factor weight
        /// numerically even when it is tabulated.
        #[arg(long)]
        no_table: bool,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Tolerance for the Stokes total.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    /// Exact tabulated weights only.
    Known,
    /// Monte Carlo, consulting the exact table first.
    Mc,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct AlgebraArgs {
    /// Built-in Lie algebra: abelian<N>, solvable2, heisenberg, or sl2.
    #[arg(long, conflicts_with = "algebra")]
    preset: Option<String>,
    /// JSON file with {"dim": n, "brackets": [{"i","j","k","coeff"}...]}.
    #[arg(long)]
    algebra: Option<PathBuf>,
}

impl AlgebraArgs {
    fn build(&self) -> Result<LieAlgebra> {
        if let Some(path) = &self.algebra {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(LieAlgebra::from_json(&text)?);
        }
        let name = self.preset.as_deref().unwrap_or("solvable2");
        match name {
            "solvable2" => Ok(LieAlgebra::solvable2()),
            "heisenberg" => Ok(LieAlgebra::heisenberg()),
            "sl2" => Ok(LieAlgebra::sl2()),
            _ => {
                if let Some(n) = name.strip_prefix("abelian") {
                    let dim: usize = n.parse().context("abelian preset needs a dimension")?;
                    return Ok(LieAlgebra::abelian(dim));
                }
                bail!("unknown Lie algebra preset: {name}");
            }
        }
    }

    fn label(&self) -> String {
        if let Some(path) = &self.algebra {
            path.display().to_string()
        } else {
            self.preset.clone().unwrap_or_else(|| "solvable2".into())
        }
    }
}

#[derive(Subcommand)]
enum DufloCmd {
    /// Build a star product and report its weighted graph terms.
    Star {
        #[command(flatten)]
        algebra: AlgebraArgs,
        /// Truncation order of the formal parameter (at most 2).
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also test associativity on all coordinate monomials up to
        /// --panel-degree.
        #[arg(long)]
        check_associativity: bool,
        #[arg(long, default_value_t = 3)]
        panel_degree: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the degree-(-1) trilinear correction on coordinate triples.
    Exotic {
        #[command(flatten)]
        algebra: AlgebraArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KoszulCmd {
    /// Reduce every critical monomial of a presentation both ways and
    /// compare normal forms.
    Check {
        /// Built-in presentation: ncg, ncg1, or assoc.
        #[arg(long, conflicts_with = "presentation")]
        preset: Option<String>,
        /// JSON file with a custom presentation.
        #[arg(long)]
        presentation: Option<PathBuf>,
        /// Rewrite-step budget per reduction.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Include full leftmost-innermost reduction traces.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok((report, pass)) => {
            println!("{report}");
            std::process::exit(if pass { 0 } else { 1 });
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

/// Runs one subcommand, returning the report text and whether every
/// requested check passed.
fn run(cmd: Cmd) -> Result<(String, bool)> {
    match cmd {
        Cmd::Graphs { cmd: GraphsCmd::Enumerate { vertices, edges, bound, out } } => {
            let vs = vertices.build()?;
            let graphs = enumerate_graphs(&vs, edges, None, bound)?;
            let report = json!({
                "schema": "gwb/graphs-enumerate/1",
                "flavor": vertices.flavor.as_str(),
                "free": vertices.vertices,
                "collinear": vertices.collinear,
                "boundary": vertices.boundary,
                "edges": edges,
                "count": graphs.len(),
                "graphs": graphs,
            })
            .to_string();
            finish(report, true, out)
        }

        Cmd::Weight { cmd } => run_weight(cmd),
        Cmd::Relation { cmd } => run_relation(cmd),
        Cmd::Duflo { cmd } => run_duflo(cmd),
        Cmd::Koszul { cmd } => run_koszul(cmd),
    }
}

fn run_weight(cmd: WeightCmd) -> Result<(String, bool)> {
    match cmd {
        WeightCmd::Compute { graph, samples, seed, expect, tolerance, out } => {
            let g = load_graph(&graph)?;
            let slice = GaugeSlice::for_graph(g.vertices())?;
            let (value, stderr) = match cache_from_env() {
                Some(cache) => cache.weight(&g, &slice, samples, seed)?,
                None => {
                    let est = integrate_weight(&g, &slice, samples, seed)?;
                    (est.value, est.stderr)
                }
            };
            let exact = known_weight(&g).map(|w| w.to_string());
            let mut pass = true;
            let mut status = serde_json::Value::Null;
            let mut expected = serde_json::Value::Null;
            if let Some(text) = &expect {
                let target = parse_rational(text)?;
                pass = (value - target).abs() <= tolerance.max(3.0 * stderr);
                status = json!(if pass { "pass" } else { "fail" });
                expected = json!(target);
            }
            let report = json!({
                "schema": "gwb/weight-compute/1",
                "graph": g,
                "value": value,
                "stderr": stderr,
                "exact": exact,
                "samples": samples,
                "seed": seed,
                "slice": slice.name(),
                "workers": DEFAULT_WORKERS,
                "expect": expected,
                "tolerance": tolerance,
                "status": status,
            })
            .to_string();
            finish(report, pass, out)
        }

        WeightCmd::Table { vertices, edges, bound, samples, seed, format, out } => {
            let vs = vertices.build()?;
            let graphs = enumerate_graphs(&vs, edges, None, bound)?;
            let cache = cache_from_env();
            let mut rows = Vec::new();
            for g in &graphs {
                let exact = known_weight(g);
                let (value, stderr) = match &exact {
                    Some(w) => (parse_rational(&w.to_string())?, 0.0),
                    None => {
                        let slice = GaugeSlice::for_graph(g.vertices())?;
                        match &cache {
                            Some(cache) => cache.weight(g, &slice, samples, seed)?,
                            None => {
                                let est = integrate_weight(g, &slice, samples, seed)?;
                                (est.value, est.stderr)
                            }
                        }
                    }
                };
                rows.push((g, exact.map(|w| w.to_string()), value, stderr));
            }
            let report = match format {
                Format::Json => json!({
                    "schema": "gwb/weight-table/1",
                    "flavor": vertices.flavor.as_str(),
                    "free": vertices.vertices,
                    "collinear": vertices.collinear,
                    "boundary": vertices.boundary,
                    "edges": edges,
                    "samples": samples,
                    "seed": seed,
                    "workers": DEFAULT_WORKERS,
                    "rows": rows
                        .iter()
                        .map(|(g, exact, value, stderr)| json!({
                            "graph": g,
                            "exact": exact,
                            "value": value,
                            "stderr": stderr,
                        }))
                        .collect::<Vec<_>>(),
                })
                .to_string(),
                Format::Csv => {
                    let mut text = String::from("graph,exact,value,stderr\n");
                    for (g, exact, value, stderr) in &rows {
                        text.push_str(&format!(
                            "\"{}\",{},{},{}\n",
                            g,
                            exact.as_deref().unwrap_or(""),
                            value,
                            stderr
                        ));
                    }
                    text.trim_end().to_string()
                }
            };
            finish(report, true, out)
        }
    }
}

fn run_relation(cmd: RelationCmd) -> Result<(String, bool)> {
    let RelationCmd::Check {
        relations, dim, stokes, source, no_table, samples, seed, tolerance, out,
    } = cmd;
    let names: Vec<String> = if relations.iter().any(|r| r == "all") {
        RELATIONS.iter().map(|s| s.to_string()).collect()
    } else {
        relations
    };
    let space = Space::new(dim);
    let components = StructureComponents::known(&space);
    let mut pass = true;
    let mut reports = Vec::new();
    for name in &names {
        let report = verify_relation(&components, name)?;
        pass &= report.passed();
        reports.push(serde_json::to_value(&report)?);
    }
    let stokes_value = match &stokes {
        Some(path) => {
            let g = load_graph(path)?;
            let report = match source {
                SourceArg::Known => stokes_check(&g, &mut KnownWeights, tolerance)?,
                SourceArg::Mc => {
                    let mut mc = McWeights::new(samples, seed);
                    mc.use_table = !no_table;
                    mc.cache = cache_from_env();
                    stokes_check(&g, &mut mc, tolerance)?
                }
            };
            pass &= report.pass;
            serde_json::from_str::<serde_json::Value>(&report.to_json())?
        }
        None => serde_json::Value::Null,
    };
    let report = json!({
        "schema": "gwb/relation-check/1",
        "dim": dim,
        "relations": reports,
        "stokes": stokes_value,
        "status": if pass { "pass" } else { "fail" },
    })
    .to_string();
    finish(report, pass, out)
}

fn run_duflo(cmd: DufloCmd) -> Result<(String, bool)> {
    match cmd {
        DufloCmd::Star {
            algebra, order, samples, seed, check_associativity, panel_degree, format, out,
        } => {
            let alg = algebra.build()?;
            let mut source = McWeights::new(samples, seed);
            source.cache = cache_from_env();
            let star = star_product(&alg, order, &mut source)?;
            let terms: serde_json::Value = serde_json::from_str(&star.term_table())?;
            let mut pass = true;
            let assoc = if check_associativity {
                let (value, ok) = associativity_panel(&star, alg.dim(), panel_degree)?;
                pass = ok;
                value
            } else {
                serde_json::Value::Null
            };
            let report = match format {
                Format::Json => json!({
                    "schema": "gwb/duflo-star/1",
                    "algebra": algebra.label(),
                    "dim": alg.dim(),
                    "order": order,
                    "samples": samples,
                    "seed": seed,
                    "workers": DEFAULT_WORKERS,
                    "terms": terms,
                    "associativity": assoc,
                })
                .to_string(),
                Format::Csv => {
                    let mut text = String::from("power,graph,weight,stderr\n");
                    for level in terms["levels"].as_array().into_iter().flatten() {
                        let power = &level["power"];
                        for t in level["terms"].as_array().into_iter().flatten() {
                            text.push_str(&format!(
                                "{},\"{}\",{},{}\n",
                                power,
                                serde_json::to_string(&t["graph"])?.replace('"', "\"\""),
                                t["weight"],
                                t["stderr"]
                            ));
                        }
                    }
                    text.trim_end().to_string()
                }
            };
            finish(report, pass, out)
        }

        DufloCmd::Exotic { algebra, out } => {
            let alg = algebra.build()?;
            let op = exotic_correction(&alg);
            let space = lie_to_mc(&alg).space().clone();
            let dim = alg.dim();
            let mut rows = Vec::new();
            let mut all_zero = true;
            for i in 0..dim {
                for j in 0..dim {
                    for k in 0..dim {
                        let args = [
                            PolyVector::x(&space, i)?,
                            PolyVector::x(&space, j)?,
                            PolyVector::x(&space, k)?,
                        ];
                        let value = op.apply(&args)?;
                        all_zero &= value.is_zero();
                        rows.push(json!({
                            "args": [i + 1, j + 1, k + 1],
                            "value": value.to_string(),
                        }));
                    }
                }
            }
            let report = json!({
                "schema": "gwb/duflo-exotic/1",
                "algebra": algebra.label(),
                "dim": dim,
                "vanishes": all_zero,
                "rows": rows,
            })
            .to_string();
            finish(report, true, out)
        }
    }
}

/// Tests the associator on all triples of coordinate monomials of total
/// degree 1..=max_degree. A level passes when the largest coefficient of the
/// defect stays below ten times its propagated error (plus a floor for the
/// exactly-weighted case).
fn associativity_panel(
    star: &StarProduct,
    dim: usize,
    max_degree: usize,
) -> Result<(serde_json::Value, bool)> {
    let panel = monomial_panel(star.space(), dim, max_degree)?;
    let levels = star.order + 1;
    let mut max_defect = vec![0.0f64; levels];
    let mut max_tolerance = vec![0.0f64; levels];
    let mut pass = true;
    for f in &panel {
        for g in &panel {
            for h in &panel {
                let defect = star.associativity_defect(f, g, h);
                for (k, level) in defect.levels.iter().enumerate() {
                    let bound = 10.0 * level.max_err() + 1e-9;
                    max_defect[k] = max_defect[k].max(level.max_abs());
                    max_tolerance[k] = max_tolerance[k].max(bound);
                    pass &= level.max_abs() <= bound;
                }
            }
        }
    }
    let value = json!({
        "panel": panel.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "triples": panel.len().pow(3),
        "max_defect": max_defect,
        "tolerance": max_tolerance,
        "status": if pass { "pass" } else { "fail" },
    });
    Ok((value, pass))
}

/// All monomials x_{i1}···x_{id} with 1 <= d <= max_degree and
/// nondecreasing indices, in lexicographic order.
fn monomial_panel(space: &Space, dim: usize, max_degree: usize) -> Result<Vec<PolyVector>> {
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn build(space: &Space, combo: &[usize]) -> Result<PolyVector> {
        let mut p = PolyVector::one(space);
        for &i in combo {
            p = product(&p, &PolyVector::x(space, i)?);
        }
        Ok(p)
    }
    fn rec(
        space: &Space,
        dim: usize,
        depth: usize,
        start: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<PolyVector>,
    ) -> Result<()> {
        if depth == 0 {
            out.push(build(space, stack)?);
            return Ok(());
        }
        for i in start..dim {
            stack.push(i);
            rec(space, dim, depth - 1, i, stack, out)?;
            stack.pop();
        }
        Ok(())
    }
    for degree in 1..=max_degree {
        rec(space, dim, degree, 0, &mut stack, &mut out)?;
    }
    Ok(out)
}

fn run_koszul(cmd: KoszulCmd) -> Result<(String, bool)> {
    let KoszulCmd::Check { preset, presentation, budget, trace, out } = cmd;
    let pres = if let Some(path) = &presentation {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let pres = Presentation::from_json(&text)?;
        pres.validate()?;
        pres
    } else {
        let name = preset.as_deref().unwrap_or("ncg");
        Presentation::builtin(name)
            .with_context(|| format!("unknown presentation preset: {name}"))?
    };
    let report = check_confluence(&pres, budget);
    let pass = report.confluent() && !report.indeterminate();
    let traces = if trace {
        let mut entries = Vec::new();
        for monomial in critical_monomials(&pres) {
            let states = rewrite_trace(&monomial, &pres, budget, Strategy::LeftmostInnermost)?;
            entries.push(json!({
                "monomial": pres.display_tree(&monomial),
                "states": states
                    .iter()
                    .map(|s| pres.display_poly(s))
                    .collect::<Vec<_>>(),
            }));
        }
        json!(entries)
    } else {
        serde_json::Value::Null
    };
    let text = json!({
        "schema": "gwb/koszul-check/1",
        "presentation": report.presentation,
        "budget": budget,
        "confluent": report.confluent(),
        "indeterminate": report.indeterminate(),
        "monomials": report.reports,
        "traces": traces,
    })
    .to_string();
    finish(text, pass, out)
}

fn finish(report: String, pass: bool, out: Option<PathBuf>) -> Result<(String, bool)> {
    if let Some(path) = out {
        fs::write(&path, format!("{report}\n"))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok((report, pass))
}

fn cache_from_env() -> Option<WeightCache> {
    std::env::var_os(CACHE_ENV)
        .map(|dir| WeightCache::open(PathBuf::from(dir).join("weights.jsonl")))
}

fn load_graph(path: &PathBuf) -> Result<DirectedGraph> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing graph {}", path.display()))
}

/// Parses "3/4"-style rationals or plain decimals.
fn parse_rational(text: &str) -> Result<f64> {
    if let Some((num, den)) = text.split_once('/') {
        let n: f64 = num.trim().parse().context("bad rational numerator")?;
        let d: f64 = den.trim().parse().context("bad rational denominator")?;
        if d == 0.0 {
            bail!("rational with zero denominator: {text}");
        }
        Ok(n / d)
    } else {
        Ok(text.trim().parse().context("bad number")?)
    }
}
