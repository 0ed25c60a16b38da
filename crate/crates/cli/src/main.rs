mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ohmgraph::graph::{chain_of_path, EdgeId, OneChain, Point, VertexId};
use ohmgraph::potentials::{cross_ratio, effective_resistance, energy_pairing_at_points, j_function, Potentials};
use ohmgraph::projections::{projection_matrices, solve_kirchhoff};
use ohmgraph::rayleigh::{contraction_sequence, Query};
use ohmgraph::spanning::{enumerate_spanning_trees_capped, DEFAULT_TREE_CAP};
use ohmgraph::verify::{verify_graph, verify_random, VerifyOptions};
use ohmgraph::{Error, Tolerance, WeightedGraph};
use serde_json::{json, Value};

use output::{round, Format, Output};

#[derive(Parser)]
#[command(name = "ohmgraph", version, about = "Resistive-network computations on metric graphs")]
struct Cli {
    /// Graph file (JSON).
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Pretty, global = true)]
    format: Format,
    /// Decimal digits in printed numbers.
    #[arg(long, default_value_t = 12, global = true)]
    precision: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph file; `--echo` prints it back in normal form.
    Validate {
        #[arg(long)]
        echo: bool,
    },
    /// Effective resistance between two points (`vertex` or `edge@offset`).
    Resistance { x: String, y: String },
    /// Potential at X for unit current in at Y, out at the grounded Q.
    Jfun { q: String, x: String, y: String },
    /// Cross ratio ξ(X, Y, Z, W).
    Cross { x: String, y: String, z: String, w: String },
    /// The edge-by-edge cross-ratio matrix.
    Xi,
    /// Cycle and cocycle projection matrices.
    Project,
    /// Currents, voltages and potentials for a source along a path.
    Kirchhoff(KirchhoffArgs),
    /// All spanning trees with weights and probabilities.
    Trees {
        #[arg(long, default_value_t = DEFAULT_TREE_CAP)]
        cap: usize,
    },
    /// Short-circuit edges and report query values before and after.
    Contract(ContractArgs),
    /// Energy pairing of two mass-zero measures.
    Energy {
        /// `POINT:MASS`, repeatable.
        #[arg(long = "mass", required = true)]
        mass: Vec<String>,
        /// Second measure; defaults to the first.
        #[arg(long = "mass2")]
        mass2: Vec<String>,
    },
    /// Run the invariant suites on the graph, or on seeded random graphs.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct KirchhoffArgs {
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    #[arg(long, default_value_t = 1.0)]
    amps: f64,
    /// Defaults to the first vertex.
    #[arg(long)]
    ground: Option<String>,
}

#[derive(Args)]
struct ContractArgs {
    #[arg(long)]
    edge: String,
    /// Further edges, contracted in order.
    #[arg(long)]
    then: Vec<String>,
    /// `r X Y`, `xi X Y Z W` or `j Z X Y`; repeatable.
    #[arg(long)]
    query: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Include the spanning-tree suites.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Random graphs to check when no graph file is given.
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, hide = true)]
    corrupt_xi: bool,
}

enum Failure {
    /// Bad input: exit 2.
    Input(String),
    /// The computation itself failed: exit 3.
    Compute(String),
    /// An invariant did not hold: exit 4.
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Compute(_) => 3,
            Failure::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Compute(m) | Failure::Verification(m) => m,
        }
    }
}

fn input(err: Error) -> Failure {
    Failure::Input(err.to_string())
}

/// Errors raised while computing, split by whether the input was at fault.
fn compute(err: Error) -> Failure {
    match err {
        Error::UnknownVertex(_)
        | Error::UnknownEdge(_)
        | Error::OffsetOutOfRange { .. }
        | Error::MassNotZero { .. }
        | Error::Parse(_) => Failure::Input(err.to_string()),
        other => Failure::Compute(other.to_string()),
    }
}

fn load(cli: &Cli) -> Result<(WeightedGraph, String), Failure> {
    let path = cli
        .graph
        .as_ref()
        .ok_or_else(|| Failure::Input("this command needs --graph FILE".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let graph = WeightedGraph::from_json(&text).map_err(input)?;
    Ok((graph, path.display().to_string()))
}

fn point(graph: &WeightedGraph, text: &str) -> Result<Point, Failure> {
    graph.parse_point(text).map_err(input)
}

fn vertex(graph: &WeightedGraph, text: &str) -> Result<VertexId, Failure> {
    graph.vertex(text).map_err(input)
}

fn edge(graph: &WeightedGraph, text: &str) -> Result<EdgeId, Failure> {
    graph.edge_by_label(text).map_err(input)
}

fn masses(graph: &WeightedGraph, specs: &[String]) -> Result<Vec<(Point, f64)>, Failure> {
    let items = specs
        .iter()
        .map(|spec| {
            let (p, a) = spec
                .rsplit_once(':')
                .ok_or_else(|| Failure::Input(format!("mass `{spec}` is not POINT:MASS")))?;
            let a: f64 = a.parse().map_err(|_| Failure::Input(format!("bad mass in `{spec}`")))?;
            Ok((point(graph, p)?, a))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let values: Vec<f64> = items.iter().map(|(_, a)| *a).collect();
    if !Tolerance::from_env().is_zero_sum(&values) {
        return Err(Failure::Input(format!("masses sum to {}, not zero", values.iter().sum::<f64>())));
    }
    Ok(items)
}

fn parse_query(graph: &WeightedGraph, text: &str) -> Result<Query, Failure> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let v = |i: usize| vertex(graph, words[i]);
    match (words.first().copied(), words.len()) {
        (Some("r"), 3) => Ok(Query::Resistance(v(1)?, v(2)?)),
        (Some("xi"), 5) => Ok(Query::CrossRatio(v(1)?, v(2)?, v(3)?, v(4)?)),
        (Some("j"), 4) => Ok(Query::J(v(1)?, v(2)?, v(3)?)),
        _ => Err(Failure::Input(format!("query `{text}` is not `r X Y`, `xi X Y Z W` or `j Z X Y`"))),
    }
}

fn edge_labels(graph: &WeightedGraph) -> Vec<String> {
    graph.edge_ids().map(|e| graph.edge_label(e).to_string()).collect()
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let digits = cli.precision;
    let (name, inputs, out) = match &cli.command {
        Command::Validate { echo } => {
            let (g, path) = load(cli)?;
            if *echo {
                return Ok(g.to_spec().to_json() + "\n");
            }
            let summary = json!({
                "vertices": g.vertex_count(),
                "edges": g.edge_count(),
                "cycle_rank": g.cycle_rank(),
            });
            let out = Output::table(
                &["vertices", "edges", "cycle_rank"],
                vec![vec![json!(g.vertex_count()), json!(g.edge_count()), json!(g.cycle_rank())]],
            )
            .with_result(summary);
            ("validate", json!({ "graph": path }), out)
        }
        Command::Resistance { x, y } => {
            let (g, path) = load(cli)?;
            let r = effective_resistance(&g, point(&g, x)?, point(&g, y)?).map_err(compute)?;
            ("resistance", json!({ "graph": path, "x": x, "y": y }), Output::scalar(r, digits))
        }
        Command::Jfun { q, x, y } => {
            let (g, path) = load(cli)?;
            let j = j_function(&g, point(&g, q)?, point(&g, x)?, point(&g, y)?).map_err(compute)?;
            ("jfun", json!({ "graph": path, "q": q, "x": x, "y": y }), Output::scalar(j, digits))
        }
        Command::Cross { x, y, z, w } => {
            let (g, path) = load(cli)?;
            let [px, py, pz, pw] = [x, y, z, w].map(|s| point(&g, s));
            let xi = cross_ratio(&g, px?, py?, pz?, pw?).map_err(compute)?;
            ("cross", json!({ "graph": path, "x": x, "y": y, "z": z, "w": w }), Output::scalar(xi, digits))
        }
        Command::Xi => {
            let (g, path) = load(cli)?;
            let xi = Potentials::new(&g).map_err(compute)?.xi_matrix(&g.default_orientation());
            ("xi", json!({ "graph": path }), Output::matrix("edge", &edge_labels(&g), &xi.matrix, digits))
        }
        Command::Project => {
            let (g, path) = load(cli)?;
            let pair = projection_matrices(&g, &g.default_orientation()).map_err(compute)?;
            let labels = edge_labels(&g);
            let out = Output::matrices(
                "edge",
                &[("cycle", &labels, &pair.cycle), ("cocycle", &labels, &pair.cocycle)],
                digits,
            );
            ("project", json!({ "graph": path }), out)
        }
        Command::Kirchhoff(args) => {
            let (g, path) = load(cli)?;
            let (from, to) = (vertex(&g, &args.from)?, vertex(&g, &args.to)?);
            let ground = match &args.ground {
                Some(q) => vertex(&g, q)?,
                None => VertexId(0),
            };
            let o = g.default_orientation();
            let source: OneChain = chain_of_path(&g, &o, &g.shortest_path(from, to))
                .map_err(compute)?
                .scaled(args.amps);
            let sol = solve_kirchhoff(&g, &o, &source, ground).map_err(compute)?;
            let mut rows = Vec::new();
            for e in g.edge_ids() {
                rows.push(vec![json!("current"), json!(g.edge_label(e)), json!(round(sol.internal_current.coeff(e), digits))]);
            }
            for e in g.edge_ids() {
                rows.push(vec![json!("voltage"), json!(g.edge_label(e)), json!(round(sol.edge_voltages[e.0], digits))]);
            }
            for v in g.vertex_ids() {
                rows.push(vec![json!("potential"), json!(g.vertex_label(v)), json!(round(sol.potential[v.0], digits))]);
            }
            let edges: Vec<Value> = g
                .edge_ids()
                .map(|e| {
                    json!({
                        "id": g.edge_label(e),
                        "current": round(sol.internal_current.coeff(e), digits),
                        "voltage": round(sol.edge_voltages[e.0], digits),
                    })
                })
                .collect();
            let vertices: Vec<Value> = g
                .vertex_ids()
                .map(|v| json!({ "id": g.vertex_label(v), "potential": round(sol.potential[v.0], digits) }))
                .collect();
            let out = Output::table(&["kind", "id", "value"], rows)
                .with_result(json!({ "ground": g.vertex_label(ground), "edges": edges, "vertices": vertices }));
            let inputs = json!({
                "graph": path,
                "from": args.from,
                "to": args.to,
                "amps": args.amps,
                "ground": g.vertex_label(ground),
            });
            ("kirchhoff", inputs, out)
        }
        Command::Trees { cap } => {
            let (g, path) = load(cli)?;
            let ensemble = enumerate_spanning_trees_capped(&g, *cap).map_err(compute)?;
            let tol = Tolerance::from_env();
            let mut rows = Vec::new();
            let mut trees = Vec::new();
            for t in &ensemble.trees {
                let p = ensemble.probability(t, &tol).map_err(compute)?;
                let labels: Vec<&str> = t.edges.iter().map(|&e| g.edge_label(e)).collect();
                let (w, cw, p) = (round(t.weight, digits), round(t.coweight, digits), round(p, digits));
                rows.push(vec![json!(labels.join(" ")), json!(w), json!(cw), json!(p)]);
                trees.push(json!({ "edges": labels, "weight": w, "coweight": cw, "probability": p }));
            }
            let out = Output::table(&["edges", "weight", "coweight", "probability"], rows).with_result(json!({
                "count": ensemble.len(),
                "total_weight": round(ensemble.total_weight, digits),
                "total_coweight": round(ensemble.total_coweight, digits),
                "trees": trees,
            }));
            ("trees", json!({ "graph": path, "cap": cap }), out)
        }
        Command::Contract(args) => {
            let (g, path) = load(cli)?;
            let mut edges = vec![edge(&g, &args.edge)?];
            for e in &args.then {
                edges.push(edge(&g, e)?);
            }
            let queries = args.query.iter().map(|q| parse_query(&g, q)).collect::<Result<Vec<_>, _>>()?;
            let run = contraction_sequence(&g, &edges, &queries).map_err(compute)?;
            let mut rows = Vec::new();
            let mut records = Vec::new();
            for (k, text) in args.query.iter().enumerate() {
                let values: Vec<f64> = run.answers.iter().map(|step| round(step[k], digits)).collect();
                let corrections: Vec<f64> = run.answers.windows(2).map(|w| round(w[0][k] - w[1][k], digits)).collect();
                let (before, after) = (values[0], *values.last().expect("base row"));
                rows.push(vec![json!(text), json!(before), json!(after), json!(round(before - after, digits))]);
                records.push(json!({
                    "query": text,
                    "before": before,
                    "after": after,
                    "steps": values,
                    "corrections": corrections,
                }));
            }
            let contracted: Vec<&str> = edges.iter().map(|&e| g.edge_label(e)).collect();
            let pivots: Vec<f64> = run.pivots.iter().map(|p| round(*p, digits)).collect();
            let out = Output::table(&["query", "before", "after", "correction"], rows)
                .with_result(json!({ "contracted": contracted, "pivots": pivots, "queries": records }));
            let inputs = json!({ "graph": path, "edges": contracted, "queries": args.query });
            ("contract", inputs, out)
        }
        Command::Energy { mass, mass2 } => {
            let (g, path) = load(cli)?;
            let nu1 = masses(&g, mass)?;
            let nu2 = if mass2.is_empty() { nu1.clone() } else { masses(&g, mass2)? };
            let e = energy_pairing_at_points(&g, &nu1, &nu2, &Tolerance::from_env()).map_err(compute)?;
            let second = if mass2.is_empty() { mass } else { mass2 };
            ("energy", json!({ "graph": path, "mass": mass, "mass2": second }), Output::scalar(e, digits))
        }
        Command::Verify(args) => {
            let options = VerifyOptions { oracle: args.oracle, corrupt_xi: args.corrupt_xi, ..VerifyOptions::default() };
            let (report, inputs) = match &cli.graph {
                Some(_) => {
                    let (g, path) = load(cli)?;
                    let report = verify_graph(&g, args.seed, &options).map_err(compute)?;
                    (report, json!({ "graph": path, "seed": args.seed, "oracle": args.oracle }))
                }
                None => {
                    let report = verify_random(args.seed, args.count, &options).map_err(compute)?;
                    (report, json!({ "seed": args.seed, "count": args.count, "oracle": args.oracle }))
                }
            };
            let rows = report
                .suites
                .iter()
                .map(|s| {
                    vec![
                        json!(s.name),
                        json!(if s.passed { "pass" } else { "fail" }),
                        json!(s.cases),
                        json!(format!("{:.3e}", s.worst_deviation)),
                    ]
                })
                .collect();
            let mut out = Output::table(&["suite", "status", "cases", "worst_deviation"], rows)
                .with_result(serde_json::to_value(&report).expect("report serializes"));
            out.pretty = format!("{} graph(s)\n{report}", report.graphs);
            let text = out.render(cli.format, "verify", inputs);
            return match report.first_failure() {
                None => Ok(text),
                Some(s) => {
                    print!("{text}");
                    Err(Failure::Verification(format!("verification failed: {}", s.name)))
                }
            };
        }
    };
    Ok(out.render(cli.format, name, inputs))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("ohmgraph: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
