use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use plrep::eqnn::{identity_dataset, loss_trace_csv, spectrum, train_toy, Dataset, Network};
use plrep::graphs::{emit_dot, emit_json, interaction_graph, predicted_graph_abs, predicted_graph_relu, product_graph, InteractionGraph};
use plrep::groups::{make_cyclic, natural_gset, orbits, product_gset, regular_gset, Group, GroupKind};
use plrep::plmaps::{apply_componentwise, PLScalar, DEFAULT_SEED};
use plrep::reps::fourier_basis;
use plrep::verify::{run_suite, Suite, VerifyOptions};

#[derive(Parser)]
#[command(name = "plrep", version, about = "Decompositions, interaction graphs and equivariant networks for finite abelian groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the simples and the change of basis of the regular representation.
    Decompose {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compute an interaction graph numerically.
    Graph {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        activation: ActivationArg,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Interaction graph predicted by the divisibility rules.
    Predict {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        activation: ActivationArg,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run a verification suite; exits 1 if any check fails.
    Verify {
        #[arg(long, value_parser = parse_suite, default_value = "all")]
        suite: Suite,
        #[arg(long = "n-max", default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..=256))]
        n_max: u64,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Orbits of the group on its points, or on pairs with --square.
    Orbits {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        square: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Train a small equivariant network on the regular representation.
    Eqnn {
        #[command(flatten)]
        group: GroupArg,
        #[command(flatten)]
        activation: ActivationArg,
        /// Number of layers.
        #[arg(long, default_value_t = 1)]
        layers: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        /// CSV dataset, inputs then targets per line; defaults to learning the identity.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: OutArg,
    },
    /// Energy of a vector on each simple.
    Spectrum {
        #[command(flatten)]
        group: GroupArg,
        /// Comma-separated vector on the group elements.
        #[arg(long, conflicts_with = "basis", required_unless_present = "basis", allow_hyphen_values = true)]
        vector: Option<String>,
        /// Pure signal: the k-th column of the change of basis.
        #[arg(long)]
        basis: Option<usize>,
        /// Activation applied componentwise before the analysis.
        #[arg(long, value_parser = parse_activation)]
        activation: Option<PLScalar>,
        #[arg(long, default_value_t = 1e-9)]
        threshold: f64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args)]
struct GroupArg {
    /// Group spec: c8, c3xc5 or perm:3:(123),(12).
    #[arg(long, value_parser = parse_group)]
    group: Group,
}

#[derive(Args)]
struct ActivationArg {
    /// relu, abs, identity, leaky:<a> or a JSON file path.
    #[arg(long, value_parser = parse_activation, default_value = "relu")]
    activation: PLScalar,
}

#[derive(Args)]
struct NumericArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = plrep::graphs::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args)]
struct OutArg {
    /// Write output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dot,
    Json,
    Csv,
}

fn parse_group(s: &str) -> Result<Group, String> {
    s.parse().map_err(|e: plrep::groups::GroupError| e.to_string())
}

fn parse_activation(s: &str) -> Result<PLScalar, String> {
    match s.parse::<PLScalar>() {
        Ok(pl) => Ok(pl),
        Err(parse_err) => {
            let path = std::path::Path::new(s);
            if !path.is_file() {
                return Err(parse_err.to_string());
            }
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            PLScalar::from_json(&text).map_err(|e| e.to_string())
        }
    }
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: plrep::verify::VerifyError| e.to_string())
}

/// Errors reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn emit(out: &OutArg, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn render_graph(g: &InteractionGraph, format: Format) -> Result<String> {
    match format {
        Format::Dot => Ok(emit_dot(g)),
        Format::Json => Ok(emit_json(g) + "\n"),
        Format::Csv => Err(usage("graphs support --format dot or json")),
    }
}

fn abelian(group: Group) -> Result<Arc<Group>> {
    if !group.is_abelian_kind() {
        return Err(usage(format!("{group} is not abelian; this command needs a product of cyclic groups")));
    }
    Ok(Arc::new(group))
}

fn predict(group: &Group, pl: &PLScalar) -> Result<InteractionGraph> {
    let rule = match pl.name().as_str() {
        "relu" => predicted_graph_relu,
        "abs" => predicted_graph_abs,
        other => return Err(usage(format!("no prediction rule for activation {other}; use relu or abs"))),
    };
    let factors = group.abelian_factors().map_err(|e| usage(e.to_string()))?;
    let mut graph: Option<InteractionGraph> = None;
    for &n in factors {
        let d = fourier_basis(&Arc::new(make_cyclic(n)?))?;
        let g = rule(&d)?;
        graph = Some(match graph {
            None => g,
            Some(acc) => product_graph(&acc, &g)?,
        });
    }
    Ok(graph.expect("at least one factor"))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Decompose { group, format, out } => {
            let d = fourier_basis(&abelian(group.group)?)?;
            let text = match format {
                Format::Csv => d.q().to_csv(),
                Format::Json => {
                    let simples: Vec<_> = d
                        .simples()
                        .iter()
                        .map(|s| json!({"label": s.label(), "dim": s.dim(), "ord": s.ord(), "ord_half": s.ord_half(), "kernel": s.kernel()}))
                        .collect();
                    let ranges: Vec<[usize; 2]> = d.block_ranges().iter().map(|r| [r.start, r.end]).collect();
                    let value = json!({"group": d.group().to_string(), "simples": simples, "q": d.q(), "dscale": d.dscale(), "block_ranges": ranges});
                    serde_json::to_string_pretty(&value)? + "\n"
                }
                Format::Dot => return Err(usage("decompose supports --format json or csv")),
            };
            emit(&out, &text)?;
        }
        Command::Graph { group, activation, format, numeric, out } => {
            let d = fourier_basis(&abelian(group.group)?)?;
            let g = interaction_graph(&d, &activation.activation, numeric.tol, numeric.seed)?;
            emit(&out, &render_graph(&g, format)?)?;
        }
        Command::Predict { group, activation, format, out } => {
            let g = predict(&group.group, &activation.activation)?;
            emit(&out, &render_graph(&g, format)?)?;
        }
        Command::Verify { suite, n_max, numeric, out } => {
            let opts = VerifyOptions { n_max: n_max as usize, tol: numeric.tol, seed: numeric.seed };
            let report = run_suite(suite, &opts)?;
            emit(&out, &(report.to_json() + "\n"))?;
            for c in report.failures() {
                eprintln!("FAIL {}: {}", c.suite, c.name);
            }
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Orbits { group, square, out } => {
            let g = Arc::new(group.group);
            let x = match g.kind() {
                GroupKind::Abelian { .. } => regular_gset(&g),
                GroupKind::Generated { .. } => natural_gset(&g)?,
            };
            let gs = if square { product_gset(&x, &x)? } else { x };
            emit(&out, &(orbits(&gs).to_json() + "\n"))?;
        }
        Command::Eqnn { group, activation, layers, steps, lr, data, seed, format, out } => {
            if layers == 0 {
                return Err(usage("--layers must be at least 1"));
            }
            let g = abelian(group.group)?;
            let x = regular_gset(&g);
            let mut net = Network::through(&vec![x.clone(); layers + 1], activation.activation)?;
            net.randomize(seed);
            let dataset = match data {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    Dataset::from_csv(&text, x.size())?
                }
                None => identity_dataset(x.size(), 4 * x.size(), seed),
            };
            let trace = train_toy(&mut net, &dataset, steps, lr)?;
            let text = match format {
                Format::Csv => loss_trace_csv(&trace),
                Format::Json => {
                    let weights: Vec<&[f64]> = net.layers().iter().map(|l| l.weights()).collect();
                    serde_json::to_string(&json!({"loss": trace, "weights": weights}))? + "\n"
                }
                Format::Dot => return Err(usage("eqnn supports --format csv or json")),
            };
            emit(&out, &text)?;
        }
        Command::Spectrum { group, vector, basis, activation, threshold, out } => {
            let d = fourier_basis(&abelian(group.group)?)?;
            let mut v = match (vector, basis) {
                (Some(text), _) => text
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad number {t:?} in --vector"))))
                    .collect::<Result<Vec<f64>>>()?,
                (None, Some(k)) => {
                    if k >= d.size() {
                        return Err(usage(format!("--basis must be below {}", d.size())));
                    }
                    d.q().column(k)
                }
                (None, None) => bail!("either --vector or --basis is required"),
            };
            if v.len() != d.size() {
                return Err(usage(format!("--vector needs {} entries, got {}", d.size(), v.len())));
            }
            if let Some(pl) = activation {
                v = apply_componentwise(&pl, &v);
            }
            emit(&out, &(spectrum(&d, &v, threshold)?.to_json() + "\n"))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
