//! Interaction graphs between simples, computed numerically or predicted
//! from divisibility rules, plus the kernel-containment predicate.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::Element;
use crate::linalg::norm_inf;
use crate::plmaps::{canonical_samples, source_image, source_seed, PLScalar, PlError};
use crate::reps::{Decomposition, SimpleRep};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{0} requires a cyclic group")]
    NotCyclic(&'static str),
    #[error("simples belong to different groups")]
    GroupMismatch,
    #[error("vertex {vertex} out of range for {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("cannot read frequencies from label {0:?}")]
    BadLabel(String),
    #[error("bad graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pl(#[from] PlError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub label: String,
    pub dim: usize,
    #[serde(default = "one")]
    pub multiplicity: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Numeric { activation: String, tolerance: f64, seed: u64 },
    Predicted { rule: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionGraph {
    pub group: String,
    pub activation: String,
    pub vertices: Vec<Vertex>,
    pub edges: BTreeSet<(usize, usize)>,
    pub provenance: Provenance,
}

fn vertices_of(d: &Decomposition) -> Vec<Vertex> {
    d.simples().iter().map(|s| Vertex { label: s.label().to_string(), dim: s.dim(), multiplicity: 1 }).collect()
}

/// Edge `i → j` whenever `p_j ∘ PL ∘ inc_i` is nonzero on the sample set.
pub fn interaction_graph(d: &Decomposition, pl: &PLScalar, tol: f64, seed: u64) -> Result<InteractionGraph, GraphError> {
    let rows: Vec<Vec<f64>> = (0..d.simples().len())
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>, PlError> {
            let mut peak = vec![0.0f64; d.simples().len()];
            for v in canonical_samples(&d.simples()[i], source_seed(seed, i)) {
                let image = source_image(d, pl, i, &v)?;
                for (j, r) in d.block_ranges().iter().enumerate() {
                    peak[j] = peak[j].max(norm_inf(&image[r.clone()]));
                }
            }
            Ok(peak)
        })
        .collect::<Result<_, _>>()?;
    let edges = rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(|(_, &p)| p >= tol).map(move |(j, _)| (i, j)))
        .collect();
    Ok(InteractionGraph {
        group: d.group().to_string(),
        activation: pl.name(),
        vertices: vertices_of(d),
        edges,
        provenance: Provenance::Numeric { activation: pl.name(), tolerance: tol, seed },
    })
}

fn predicted(d: &Decomposition, activation: &str, rule: &str, edge: impl Fn(&SimpleRep, &SimpleRep, bool) -> bool) -> Result<InteractionGraph, GraphError> {
    if !d.group().is_cyclic() {
        return Err(GraphError::NotCyclic("predicted graph"));
    }
    let s = d.simples();
    let edges = (0..s.len())
        .flat_map(|i| (0..s.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| edge(&s[i], &s[j], i == j))
        .collect();
    Ok(InteractionGraph {
        group: d.group().to_string(),
        activation: activation.into(),
        vertices: vertices_of(d),
        edges,
        provenance: Provenance::Predicted { rule: rule.into() },
    })
}

/// All loops, plus `L → K` whenever `ord(K)` divides `ord′(L)`.
pub fn predicted_graph_relu(d: &Decomposition) -> Result<InteractionGraph, GraphError> {
    predicted(d, "relu", "relu: loops, ord(K) | ord'(L)", |l, k, same| same || l.ord_half() % k.ord() == 0)
}

/// `L → K`, loops included, whenever `ord(K)` divides `ord′(L)`.
pub fn predicted_graph_abs(d: &Decomposition) -> Result<InteractionGraph, GraphError> {
    predicted(d, "abs", "abs: ord(K) | ord'(L)", |l, k, _| l.ord_half() % k.ord() == 0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SchurVerdict {
    pub source: String,
    pub target: String,
    pub allowed: bool,
    pub witness: Option<Element>,
}

/// Nonzero equivariant PL maps `src → dst` need `ker(src) ⊆ ker(dst)`.
pub fn schur_allowed(src: &SimpleRep, dst: &SimpleRep) -> Result<SchurVerdict, GraphError> {
    if !(Arc::ptr_eq(src.group(), dst.group()) || src.group() == dst.group()) {
        return Err(GraphError::GroupMismatch);
    }
    let witness = src.kernel().iter().copied().find(|g| dst.kernel().binary_search(g).is_err());
    Ok(SchurVerdict {
        source: src.label().into(),
        target: dst.label().into(),
        allowed: witness.is_none(),
        witness,
    })
}

impl InteractionGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.label == label)
    }

    pub fn labeled_edges(&self) -> BTreeSet<(String, String)> {
        self.edges.iter().map(|&(i, j)| (self.vertices[i].label.clone(), self.vertices[j].label.clone())).collect()
    }

    /// Same vertex labels and same labeled edges.
    pub fn same_edges(&self, other: &InteractionGraph) -> bool {
        let labels = |g: &InteractionGraph| g.vertices.iter().map(|v| v.label.clone()).collect::<BTreeSet<_>>();
        labels(self) == labels(other) && self.labeled_edges() == other.labeled_edges()
    }

    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let mut a = vec![vec![false; self.len()]; self.len()];
        for &(i, j) in &self.edges {
            a[i][j] = true;
        }
        a
    }

    pub fn with_loops(&self) -> BTreeSet<(usize, usize)> {
        let mut e = self.edges.clone();
        e.extend((0..self.len()).map(|i| (i, i)));
        e
    }
}

/// Labeled edges present in one graph only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EdgeDiff {
    pub only_left: Vec<(String, String)>,
    pub only_right: Vec<(String, String)>,
}

impl EdgeDiff {
    pub fn is_empty(&self) -> bool {
        self.only_left.is_empty() && self.only_right.is_empty()
    }
}

pub fn diff(left: &InteractionGraph, right: &InteractionGraph) -> EdgeDiff {
    let (l, r) = (left.labeled_edges(), right.labeled_edges());
    EdgeDiff { only_left: l.difference(&r).cloned().collect(), only_right: r.difference(&l).cloned().collect() }
}

/// Number of directed paths of length `k` ending at `vertex`.
pub fn path_count(g: &InteractionGraph, vertex: usize, k: usize) -> Result<u128, GraphError> {
    if vertex >= g.len() {
        return Err(GraphError::VertexOutOfRange { vertex, count: g.len() });
    }
    let mut ways = vec![0u128; g.len()];
    ways[vertex] = 1;
    for _ in 0..k {
        let mut next = vec![0u128; g.len()];
        for &(i, j) in &g.edges {
            next[i] = next[i].saturating_add(ways[j]);
        }
        ways = next;
    }
    Ok(ways.iter().fold(0u128, |a, &b| a.saturating_add(b)))
}

/// Vertices without outgoing, respectively incoming, non-loop edges.
pub fn sinks_and_sources(g: &InteractionGraph) -> (Vec<usize>, Vec<usize>) {
    let mut has_out = vec![false; g.len()];
    let mut has_in = vec![false; g.len()];
    for &(i, j) in g.edges.iter().filter(|(i, j)| i != j) {
        has_out[i] = true;
        has_in[j] = true;
    }
    let pick = |flags: Vec<bool>| flags.iter().enumerate().filter(|(_, &f)| !f).map(|(i, _)| i).collect();
    (pick(has_out), pick(has_in))
}

/// `R[i][j]`: a walk of exactly `k` edges leads from `i` to `j`.
pub fn reachability(g: &InteractionGraph, k: usize) -> Vec<Vec<bool>> {
    let n = g.len();
    let adj = g.adjacency();
    let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
    for _ in 0..k {
        r = (0..n).map(|i| (0..n).map(|j| (0..n).any(|m| r[i][m] && adj[m][j])).collect()).collect();
    }
    r
}

fn factor_count(group: &str) -> usize {
    group.split('x').count()
}

fn label_frequencies(label: &str, factors: usize) -> Result<Vec<String>, GraphError> {
    let bad = || GraphError::BadLabel(label.to_string());
    let suffix = label.strip_prefix("L_").ok_or_else(bad)?;
    let parts: Vec<String> = if factors == 1 {
        vec![suffix.to_string()]
    } else if suffix.contains(',') {
        suffix.split(',').map(str::to_string).collect()
    } else {
        suffix.chars().map(String::from).collect()
    };
    if parts.len() != factors || parts.iter().any(|p| p.parse::<usize>().is_err()) {
        return Err(bad());
    }
    Ok(parts)
}

fn join_label(parts: &[String]) -> String {
    if parts.len() == 1 || parts.iter().all(|p| p.len() == 1) {
        format!("L_{}", parts.concat())
    } else {
        format!("L_{}", parts.join(","))
    }
}

/// Edge `(A₁,A₂) → (B₁,B₂)` iff `A₁ → B₁` and `A₂ → B₂`, loops included.
pub fn product_graph(g1: &InteractionGraph, g2: &InteractionGraph) -> Result<InteractionGraph, GraphError> {
    let (f1, f2) = (factor_count(&g1.group), factor_count(&g2.group));
    let mut vertices = Vec::with_capacity(g1.len() * g2.len());
    for a in &g1.vertices {
        for b in &g2.vertices {
            let mut parts = label_frequencies(&a.label, f1)?;
            parts.extend(label_frequencies(&b.label, f2)?);
            vertices.push(Vertex { label: join_label(&parts), dim: a.dim * b.dim, multiplicity: a.multiplicity * b.multiplicity });
        }
    }
    let m = g2.len();
    let edges = g1
        .edges
        .iter()
        .flat_map(|&(a1, b1)| g2.edges.iter().map(move |&(a2, b2)| (a1 * m + a2, b1 * m + b2)))
        .collect();
    let activation = if g1.activation == g2.activation { g1.activation.clone() } else { format!("{}*{}", g1.activation, g2.activation) };
    Ok(InteractionGraph {
        group: format!("{}x{}", g1.group, g2.group),
        activation,
        vertices,
        edges,
        provenance: Provenance::Predicted { rule: "product".into() },
    })
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz DOT; loops drawn in red, cross edges in black.
pub fn emit_dot(g: &InteractionGraph) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&format!("{} {}", g.group, g.activation))).unwrap();
    for v in &g.vertices {
        writeln!(out, "  {} [label={}];", quote(&v.label), quote(&format!("{} (dim {})", v.label, v.dim))).unwrap();
    }
    for &(i, j) in &g.edges {
        let color = if i == j { "red" } else { "black" };
        writeln!(out, "  {} -> {} [color={color}];", quote(&g.vertices[i].label), quote(&g.vertices[j].label)).unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn emit_json(g: &InteractionGraph) -> String {
    serde_json::to_string(g).expect("graph serializes")
}

pub fn parse_json(text: &str) -> Result<InteractionGraph, GraphError> {
    let g: InteractionGraph = serde_json::from_str(text)?;
    if let Some(&(i, j)) = g.edges.iter().find(|&&(i, j)| i.max(j) >= g.len()) {
        return Err(GraphError::VertexOutOfRange { vertex: i.max(j), count: g.len() });
    }
    Ok(g)
}
