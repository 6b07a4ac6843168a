//! Data-driven verification suites over the library's structural claims.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::eqnn::{
    act_on_vector, forward, frequency_flow_report, gradient_check, layer_apply, make_layer, mse, spectrum,
    identity_dataset, train_toy, EqnnError, Network,
};
use crate::graphs::{
    diff, interaction_graph, predicted_graph_abs, predicted_graph_relu, product_graph, reachability,
    schur_allowed, GraphError, InteractionGraph,
};
use crate::groups::{make_abelian, make_cyclic, regular_gset, Group, GroupError};
use crate::linalg::{max_abs_diff, Matrix};
use crate::plmaps::{abs_pl, apply_componentwise, equivariance_check, relu, spike_map, unit_tent, PLScalar, PlError};
use crate::reps::{conjugate_action, cyclic_simples, fourier_basis, rep_matrix, Decomposition, RepError};

const FIGURES: &str = include_str!("../fixtures/figures.json");
const CONVOLUTION: &str = include_str!("../fixtures/convolution.json");

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Pl(#[from] PlError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eqnn(#[from] EqnnError),
    #[error("unknown suite {0:?}; expected cyclic, products, eqnn or all")]
    UnknownSuite(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Cyclic,
    Products,
    Eqnn,
    All,
}

impl FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cyclic" => Ok(Suite::Cyclic),
            "products" => Ok(Suite::Products),
            "eqnn" => Ok(Suite::Eqnn),
            "all" => Ok(Suite::All),
            other => Err(VerifyError::UnknownSuite(other.into())),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub n_max: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { n_max: 64, tol: crate::graphs::DEFAULT_TOL, seed: crate::plmaps::DEFAULT_SEED }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A published figure disagrees while numeric and predicted graphs agree.
    Informational,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, ok: bool, detail: Value) -> Self {
        Check { suite, name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, detail }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        let summary = json!({
            "passed": self.passed(),
            "total": self.checks.len(),
            "failures": self.failures().count(),
            "informational": self.checks.iter().filter(|c| c.status == Status::Informational).count(),
            "checks": self.checks,
        });
        serde_json::to_string_pretty(&summary).expect("report serializes")
    }
}

/// An interaction graph as drawn in a published figure.
#[derive(Clone, Debug, Deserialize)]
pub struct Figure {
    pub group: String,
    pub activation: String,
    pub note: String,
    pub edges: Vec<(String, String)>,
}

impl Figure {
    pub fn edge_set(&self) -> BTreeSet<(String, String)> {
        self.edges.iter().cloned().collect()
    }
}

pub fn figures() -> Vec<Figure> {
    #[derive(Deserialize)]
    struct File {
        figures: Vec<Figure>,
    }
    serde_json::from_str::<File>(FIGURES).expect("embedded figures parse").figures
}

pub fn figure(group: &str, activation: &str) -> Option<Figure> {
    figures().into_iter().find(|f| f.group == group && f.activation == activation)
}

/// Periodic-image convolution example: offsets, weight, input, output grids.
#[derive(Clone, Debug, Deserialize)]
pub struct ConvolutionExample {
    pub offsets: Vec<(usize, usize)>,
    pub weight: f64,
    pub input: Vec<Vec<f64>>,
    pub output: Vec<Vec<f64>>,
    pub highlight: (usize, usize),
    pub zoom: Vec<Vec<f64>>,
}

pub fn convolution_example() -> ConvolutionExample {
    serde_json::from_str(CONVOLUTION).expect("embedded convolution example parses")
}

/// Applies the orbit-basis layer of `C_n × C_n` whose weights are `weight`
/// on the orbits of `(offset, 0)` to a row-major grid.
pub fn convolve_grid(grid: &[Vec<f64>], offsets: &[(usize, usize)], weight: f64) -> Result<Vec<Vec<f64>>, VerifyError> {
    let n = grid.len();
    let g = Arc::new(make_abelian(vec![n, n])?);
    let x = regular_gset(&g);
    let mut layer = make_layer(&x, &x)?;
    for &(r, c) in offsets {
        layer.set_pair_weight(g.encode(&[r, c]), 0, weight);
    }
    let flat: Vec<f64> = grid.iter().flatten().copied().collect();
    let out = layer_apply(&layer, &flat)?;
    Ok(out.chunks(n).map(<[f64]>::to_vec).collect())
}

fn cyclic_basis(n: usize) -> Result<Decomposition, VerifyError> {
    Ok(fourier_basis(&Arc::new(make_cyclic(n)?))?)
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport, VerifyError> {
    let mut report = VerifyReport::default();
    if matches!(suite, Suite::Cyclic | Suite::All) {
        report.checks.extend(cyclic_suite(opts)?);
    }
    if matches!(suite, Suite::Products | Suite::All) {
        report.checks.extend(products_suite(opts)?);
    }
    if matches!(suite, Suite::Eqnn | Suite::All) {
        report.checks.extend(eqnn_suite(opts)?);
    }
    Ok(report)
}

fn edge_list(edges: &[(String, String)]) -> Value {
    json!(edges.iter().map(|(a, b)| format!("{a}->{b}")).collect::<Vec<_>>())
}

fn sweep_one(n: usize, opts: &VerifyOptions) -> Result<Vec<Check>, VerifyError> {
    let d = cyclic_basis(n)?;
    let mut checks = vec![];
    let residual = d.inverse_residual();
    let mass = match conjugate_action(&d, 1 % n) {
        Ok(m) => d.off_block_mass(&m),
        Err(RepError::DecompositionFailure { mass }) => mass,
        Err(e) => return Err(e.into()),
    };
    checks.push(Check::new(
        "cyclic",
        format!("c{n} decomposition"),
        residual < 1e-9 && mass < 1e-9,
        json!({"inverse_residual": residual, "off_block_mass": mass}),
    ));
    let r = interaction_graph(&d, &relu(), opts.tol, opts.seed)?;
    let a = interaction_graph(&d, &abs_pl(), opts.tol, opts.seed)?;
    for (g, p) in [(&r, predicted_graph_relu(&d)?), (&a, predicted_graph_abs(&d)?)] {
        let delta = diff(g, &p);
        checks.push(Check::new(
            "cyclic",
            format!("c{n} {} numeric = predicted", g.activation),
            delta.is_empty(),
            if delta.is_empty() { Value::Null } else { json!({"numeric_only": edge_list(&delta.only_left), "predicted_only": edge_list(&delta.only_right)}) },
        ));
    }
    let bad: Vec<(String, String)> = r
        .edges
        .iter()
        .chain(&a.edges)
        .filter(|&&(i, j)| !schur_allowed(&d.simples()[i], &d.simples()[j]).map(|v| v.allowed).unwrap_or(false))
        .map(|&(i, j)| (r.vertices[i].label.clone(), r.vertices[j].label.clone()))
        .collect();
    checks.push(Check::new("cyclic", format!("c{n} edges pass kernel containment"), bad.is_empty(), if bad.is_empty() { Value::Null } else { edge_list(&bad) }));
    checks.push(Check::new("cyclic", format!("c{n} relu = abs + loops"), r.edges == a.with_loops(), Value::Null));
    Ok(checks)
}

/// Compares a figure to a numeric graph, falling back to the predicted graph
/// to decide whether a mismatch is informational.
fn figure_check(suite: &'static str, fig: &Figure, numeric: &InteractionGraph, predicted: Option<&InteractionGraph>) -> Check {
    let drawn = fig.edge_set();
    let computed = numeric.labeled_edges();
    let name = format!("figure {} {}", fig.group, fig.activation);
    if drawn == computed {
        return Check::new(suite, name, true, Value::Null);
    }
    let only_figure: Vec<_> = drawn.difference(&computed).cloned().collect();
    let only_numeric: Vec<_> = computed.difference(&drawn).cloned().collect();
    let theorem_agrees = predicted.is_some_and(|p| p.same_edges(numeric));
    let detail = json!({
        "note": fig.note,
        "figure_only": edge_list(&only_figure),
        "numeric_only": edge_list(&only_numeric),
        "numeric_matches_prediction": theorem_agrees,
    });
    Check { suite, name, status: if theorem_agrees { Status::Informational } else { Status::Fail }, detail }
}

fn cyclic_suite(opts: &VerifyOptions) -> Result<Vec<Check>, VerifyError> {
    let per_n: Vec<Vec<Check>> = (1..=opts.n_max).into_par_iter().map(|n| sweep_one(n, opts)).collect::<Result<_, _>>()?;
    let mut checks: Vec<Check> = per_n.into_iter().flatten().collect();
    for fig in figures().iter().filter(|f| !f.group.contains('x')) {
        let pl: PLScalar = fig.activation.parse()?;
        let group: Group = fig.group.parse()?;
        let d = fourier_basis(&Arc::new(group))?;
        let numeric = interaction_graph(&d, &pl, opts.tol, opts.seed)?;
        let predicted = if fig.activation == "relu" { predicted_graph_relu(&d)? } else { predicted_graph_abs(&d)? };
        checks.push(figure_check("cyclic", fig, &numeric, Some(&predicted)));
    }
    Ok(checks)
}

fn numeric_product(factors: [usize; 2], opts: &VerifyOptions) -> Result<(InteractionGraph, InteractionGraph, Decomposition), VerifyError> {
    let g = |n| -> Result<InteractionGraph, VerifyError> { Ok(interaction_graph(&cyclic_basis(n)?, &relu(), opts.tol, opts.seed)?) };
    let product = product_graph(&g(factors[0])?, &g(factors[1])?)?;
    let d = fourier_basis(&Arc::new(make_abelian(factors.to_vec())?))?;
    let direct = interaction_graph(&d, &relu(), opts.tol, opts.seed)?;
    Ok((product, direct, d))
}

fn products_suite(opts: &VerifyOptions) -> Result<Vec<Check>, VerifyError> {
    let mut checks = vec![];
    let (product, direct, d) = numeric_product([3, 5], opts)?;
    let fig = figure("c3xc5", "relu").expect("embedded product figure");
    checks.push(figure_check("products", &fig, &product, Some(&direct)));
    checks.push(Check::new("products", "c3xc5 product = direct numeric", product.same_edges(&direct), Value::Null));
    let dims: Vec<usize> = d.simples().iter().map(|s| s.dim()).collect();
    checks.push(Check::new("products", "c3xc5 simple dimensions", dims == [1, 2, 2, 2, 4, 4], json!(dims)));

    let (product, direct, d) = numeric_product([2, 2], opts)?;
    let delta = diff(&product, &direct);
    let forbidden = delta.only_left.iter().all(|(a, b)| {
        let (i, j) = (d.index_of(a).expect("label"), d.index_of(b).expect("label"));
        !schur_allowed(&d.simples()[i], &d.simples()[j]).map(|v| v.allowed).unwrap_or(true)
    });
    let status = if delta.is_empty() {
        Status::Pass
    } else if delta.only_right.is_empty() && forbidden {
        Status::Informational
    } else {
        Status::Fail
    };
    checks.push(Check {
        suite: "products",
        name: "c2xc2 product = direct numeric".into(),
        status,
        detail: if delta.is_empty() {
            Value::Null
        } else {
            json!({
                "product_only": edge_list(&delta.only_left),
                "numeric_only": edge_list(&delta.only_right),
                "product_only_violate_kernel_containment": forbidden,
            })
        },
    });
    Ok(checks)
}

fn eqnn_suite(opts: &VerifyOptions) -> Result<Vec<Check>, VerifyError> {
    let mut checks = vec![];

    let ex = convolution_example();
    let out = convolve_grid(&ex.input, &ex.offsets, ex.weight)?;
    let err = out.iter().flatten().zip(ex.output.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    checks.push(Check::new("eqnn", "periodic convolution grid", err < 1e-12, json!({"max_error": err, "highlight": out[ex.highlight.0][ex.highlight.1]})));

    let x = regular_gset(&Arc::new(make_cyclic(8)?));
    let mut net = Network::through(&[x.clone(), x.clone(), x.clone(), x.clone()], relu())?;
    net.randomize(opts.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut dev: f64 = 0.0;
    for _ in 0..100 {
        let g = rng.gen_range(0..8);
        let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let lhs = forward(&net, &act_on_vector(&x, g, &v))?;
        let rhs = act_on_vector(&x, g, &forward(&net, &v)?);
        dev = dev.max(max_abs_diff(&lhs, &rhs));
    }
    checks.push(Check::new("eqnn", "c8 three-layer equivariance", dev < 1e-10, json!({"max_deviation": dev})));

    let worst = gradient_sweep(&x, opts.seed, 10)?;
    checks.push(Check::new("eqnn", "backprop vs central differences", worst < 1e-5, json!({"max_relative_error": worst})));

    let final_mse = identity_learning(4, opts.seed)?;
    checks.push(Check::new("eqnn", "c4 identity learning", final_mse < 1e-6, json!({"mse": final_mse})));

    let d = cyclic_basis(16)?;
    let mut e = vec![0.0; 16];
    e[1] = 1.0;
    let report = spectrum(&d, &apply_componentwise(&relu(), &d.synthesize(&e)), 1e-9)?;
    let predicted = predicted_graph_relu(&d)?;
    let allowed: BTreeSet<&str> = (0..predicted.len()).filter(|&j| predicted.has_edge(1, j)).map(|j| predicted.vertices[j].label.as_str()).collect();
    let leaked: Vec<(&String, &f64)> = report.energies.iter().filter(|(l, &en)| !allowed.contains(l.as_str()) && en >= 1e-9).collect();
    let missing: Vec<&&str> = allowed.iter().filter(|l| report.energies[**l] < 1e-9).collect();
    checks.push(Check::new("eqnn", "c16 relu spectrum of frequency 1", leaked.is_empty() && missing.is_empty(), json!({"energies": report.energies})));

    let mut flow_ok = true;
    for n in 1..=opts.n_max.min(16) {
        let d = cyclic_basis(n)?;
        let g = interaction_graph(&d, &relu(), opts.tol, opts.seed)?;
        for k in 1..=4 {
            flow_ok &= frequency_flow_report(&d, &relu(), k, 1e-9, opts.seed)? == reachability(&g, k);
        }
    }
    checks.push(Check::new("eqnn", "frequency flow = graph reachability", flow_ok, Value::Null));

    checks.push(spike_check(opts.seed)?);
    Ok(checks)
}

/// Worst relative gradient error over `configs` seeded three-layer networks,
/// resampling inputs that land within `1e-6` of a kink.
pub fn gradient_sweep(x: &crate::groups::GSet, seed: u64, configs: usize) -> Result<f64, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for c in 0..configs {
        let mut net = Network::through(&[x.clone(), x.clone(), x.clone(), x.clone()], relu())?;
        net.randomize(seed.wrapping_add(c as u64 + 1));
        let (v, t) = loop {
            let v: Vec<f64> = (0..x.size()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let t: Vec<f64> = (0..x.size()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if net.kink_margin(&v)? > 1e-6 {
                break (v, t);
            }
        };
        worst = worst.max(gradient_check(&net, &v, &t, 1e-5)?);
    }
    Ok(worst)
}

/// Final MSE of one `C_n` layer trained to reproduce its input.
pub fn identity_learning(n: usize, seed: u64) -> Result<f64, VerifyError> {
    let x = regular_gset(&Arc::new(make_cyclic(n)?));
    let mut net = Network::through(&[x.clone(), x], relu())?;
    let data = identity_dataset(n, 4 * n, seed);
    train_toy(&mut net, &data, 2000, 0.5)?;
    Ok(mse(&net, &data)?)
}

fn spike_check(seed: u64) -> Result<Check, VerifyError> {
    let n = 6;
    let tent = spike_map(n, unit_tent())?;
    let rot = &cyclic_simples(n)?[1];
    let mats: Vec<Matrix> = (0..n).map(|g| rep_matrix(rot, g)).collect();
    let triv = vec![Matrix::identity(1); n];
    let dev = equivariance_check(|v| tent.eval_vec(v), &mats, &triv, 200, seed);
    let mid = std::f64::consts::PI / n as f64;
    let apex = tent.eval(&[mid.cos(), mid.sin()]);
    let ok = dev < 1e-10 && (apex - 1.0).abs() < 1e-12;
    Ok(Check::new("eqnn", "spike map equivariance and apex", ok, json!({"max_deviation": dev, "apex": apex})))
}
