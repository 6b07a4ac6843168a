//! Equivariant networks with weights shared over orbits of `X × Y`.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{orbits, product_gset, Element, GSet, GroupError, OrbitPartition};
use crate::linalg::{format_g17, Matrix};
use crate::plmaps::{apply_componentwise, canonical_samples, source_seed, PLScalar, PlError};
use crate::reps::Decomposition;

#[derive(Debug, Error)]
pub enum EqnnError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Pl(#[from] PlError),
    #[error("vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("layer {0} output does not match layer {1} input")]
    Chain(usize, usize),
    #[error("network has no layers")]
    Empty,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("dataset line {line}: {reason}")]
    Dataset { line: usize, reason: String },
}

fn check_len(expected: usize, got: usize) -> Result<(), EqnnError> {
    if expected == got {
        Ok(())
    } else {
        Err(EqnnError::Length { expected, got })
    }
}

/// Linear map `ℝ[X] → ℝ[Y]` that is constant on orbits of `X × Y`.
#[derive(Clone, Debug)]
pub struct EquivariantLayer {
    input: GSet,
    output: GSet,
    orbit_basis: OrbitPartition,
    weights: Vec<f64>,
}

/// Layer with all weights zero.
pub fn make_layer(x: &GSet, y: &GSet) -> Result<EquivariantLayer, EqnnError> {
    let pairs = product_gset(x, y)?;
    let orbit_basis = orbits(&pairs);
    let weights = vec![0.0; orbit_basis.len()];
    Ok(EquivariantLayer { input: x.clone(), output: y.clone(), orbit_basis, weights })
}

impl EquivariantLayer {
    pub fn input(&self) -> &GSet {
        &self.input
    }

    pub fn output(&self) -> &GSet {
        &self.output
    }

    pub fn orbit_basis(&self) -> &OrbitPartition {
        &self.orbit_basis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn set_weights(&mut self, w: Vec<f64>) -> Result<(), EqnnError> {
        if w.len() != self.weights.len() {
            return Err(EqnnError::WeightCount { expected: self.weights.len(), got: w.len() });
        }
        self.weights = w;
        Ok(())
    }

    /// Orbit class of the pair `(x, y)`.
    pub fn class_of(&self, x: usize, y: usize) -> usize {
        self.orbit_basis.class_of(x * self.output.size() + y)
    }

    /// Sets the weight of the orbit containing `(x, y)`.
    pub fn set_pair_weight(&mut self, x: usize, y: usize, w: f64) {
        let c = self.class_of(x, y);
        self.weights[c] = w;
    }

    /// `W[y][x]` = weight of the class of `(x, y)`.
    pub fn matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.output.size(), self.input.size());
        for x in 0..self.input.size() {
            for y in 0..self.output.size() {
                m[(y, x)] = self.weights[self.class_of(x, y)];
            }
        }
        m
    }

    fn randomize(&mut self, rng: &mut impl Rng) {
        let scale = 1.0 / (self.input.size() as f64).sqrt();
        for w in &mut self.weights {
            *w = rng.gen_range(-scale..=scale);
        }
    }
}

/// `out(y) = Σ_x f(x)·β(x, y)`.
pub fn layer_apply(l: &EquivariantLayer, f: &[f64]) -> Result<Vec<f64>, EqnnError> {
    check_len(l.input.size(), f.len())?;
    let mut out = vec![0.0; l.output.size()];
    for (x, &fx) in f.iter().enumerate() {
        for (y, o) in out.iter_mut().enumerate() {
            *o += fx * l.weights[l.class_of(x, y)];
        }
    }
    Ok(out)
}

/// `(g·f)(x) = f(g⁻¹x)`.
pub fn act_on_vector(gs: &GSet, g: Element, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for (x, &fx) in f.iter().enumerate() {
        out[gs.act(g, x)] = fx;
    }
    out
}

/// `A_m f(A_{m−1} f(… f(A_1 v)))`.
#[derive(Clone, Debug)]
pub struct Network {
    layers: Vec<EquivariantLayer>,
    activation: PLScalar,
}

/// Intermediate values of a forward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    /// Input to each layer.
    pub inputs: Vec<Vec<f64>>,
    /// Output of each layer before activation.
    pub pre_activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.pre_activations.last().expect("nonempty network")
    }
}

/// Weight gradients per layer and the gradient with respect to the input.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl Network {
    pub fn new(layers: Vec<EquivariantLayer>, activation: PLScalar) -> Result<Self, EqnnError> {
        if layers.is_empty() {
            return Err(EqnnError::Empty);
        }
        for k in 1..layers.len() {
            let (a, b) = (layers[k - 1].output(), layers[k].input());
            if a.size() != b.size() || !a.same_group(b) {
                return Err(EqnnError::Chain(k - 1, k));
            }
        }
        Ok(Network { layers, activation })
    }

    /// Chain of zero-weight layers through the given G-sets.
    pub fn through(gsets: &[GSet], activation: PLScalar) -> Result<Self, EqnnError> {
        let layers = gsets.windows(2).map(|w| make_layer(&w[0], &w[1])).collect::<Result<_, _>>()?;
        Network::new(layers, activation)
    }

    pub fn randomize(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut self.layers {
            l.randomize(&mut rng);
        }
    }

    pub fn layers(&self) -> &[EquivariantLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [EquivariantLayer] {
        &mut self.layers
    }

    pub fn activation(&self) -> &PLScalar {
        &self.activation
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input.size()
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().expect("nonempty").output.size()
    }

    pub fn trace(&self, v: &[f64]) -> Result<Trace, EqnnError> {
        let mut inputs = vec![];
        let mut pre = vec![];
        let mut a = v.to_vec();
        for (k, l) in self.layers.iter().enumerate() {
            let z = layer_apply(l, &a)?;
            inputs.push(std::mem::take(&mut a));
            if k + 1 < self.layers.len() {
                a = apply_componentwise(&self.activation, &z);
            }
            pre.push(z);
        }
        Ok(Trace { inputs, pre_activations: pre })
    }

    /// Smallest `|z|` over hidden pre-activations.
    pub fn kink_margin(&self, v: &[f64]) -> Result<f64, EqnnError> {
        let t = self.trace(v)?;
        let hidden = &t.pre_activations[..t.pre_activations.len() - 1];
        Ok(hidden
            .iter()
            .flatten()
            .flat_map(|&z| self.activation.breakpoints().iter().map(move |b| (z - b).abs()))
            .fold(f64::INFINITY, f64::min))
    }
}

pub fn forward(net: &Network, v: &[f64]) -> Result<Vec<f64>, EqnnError> {
    Ok(net.trace(v)?.output().to_vec())
}

/// Reverse-mode gradients for the upstream gradient `∂L/∂out`.
pub fn backward(net: &Network, v: &[f64], upstream: &[f64]) -> Result<Gradients, EqnnError> {
    check_len(net.output_size(), upstream.len())?;
    let trace = net.trace(v)?;
    let mut delta = upstream.to_vec();
    let mut weights = vec![vec![]; net.layers.len()];
    for k in (0..net.layers.len()).rev() {
        let l = &net.layers[k];
        let a = &trace.inputs[k];
        let mut gw = vec![0.0; l.weight_dim()];
        let mut ga = vec![0.0; l.input.size()];
        for (x, &ax) in a.iter().enumerate() {
            for (y, &dy) in delta.iter().enumerate() {
                let c = l.class_of(x, y);
                gw[c] += ax * dy;
                ga[x] += l.weights[c] * dy;
            }
        }
        weights[k] = gw;
        if k > 0 {
            let z = &trace.pre_activations[k - 1];
            for (g, &zx) in ga.iter_mut().zip(z) {
                *g *= net.activation.derivative(zx);
            }
        }
        delta = ga;
    }
    Ok(Gradients { weights, input: delta })
}

/// Paired inputs and targets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// One sample per line: `input_dim` inputs followed by the targets.
    pub fn from_csv(text: &str, input_dim: usize) -> Result<Self, EqnnError> {
        let mut ds = Dataset::default();
        let mut width = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |reason: String| EqnnError::Dataset { line: i + 1, reason };
            let row: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("bad number {t:?}"))))
                .collect::<Result<_, _>>()?;
            if row.len() <= input_dim || *width.get_or_insert(row.len()) != row.len() {
                return Err(bad(format!("unexpected field count {}", row.len())));
            }
            ds.inputs.push(row[..input_dim].to_vec());
            ds.targets.push(row[input_dim..].to_vec());
        }
        Ok(ds)
    }

    pub fn to_csv(&self) -> String {
        self.inputs
            .iter()
            .zip(&self.targets)
            .map(|(x, t)| x.iter().chain(t).map(|&v| format_g17(v)).collect::<Vec<_>>().join(",") + "\n")
            .collect()
    }
}

/// `samples` seeded vectors in `[-1, 1]^n`, each its own target.
pub fn identity_dataset(n: usize, samples: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<f64>> = (0..samples).map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
    Dataset { targets: inputs.clone(), inputs }
}

/// Mean over samples and output coordinates of the squared error.
pub fn mse(net: &Network, data: &Dataset) -> Result<f64, EqnnError> {
    let mut total = 0.0;
    for (x, t) in data.inputs.iter().zip(&data.targets) {
        let out = forward(net, x)?;
        check_len(out.len(), t.len())?;
        total += out.iter().zip(t).map(|(o, t)| (o - t).powi(2)).sum::<f64>();
    }
    Ok(total / (data.len() * net.output_size()) as f64)
}

/// Full-batch gradient descent on the mean squared error. Returns the loss
/// before each step.
pub fn train_toy(net: &mut Network, data: &Dataset, steps: usize, lr: f64) -> Result<Vec<f64>, EqnnError> {
    let scale = 2.0 / (data.len() * net.output_size()) as f64;
    let mut trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut loss = 0.0;
        let mut grads: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.weight_dim()]).collect();
        for (x, t) in data.inputs.iter().zip(&data.targets) {
            let out = forward(net, x)?;
            check_len(out.len(), t.len())?;
            let err: Vec<f64> = out.iter().zip(t).map(|(o, t)| o - t).collect();
            loss += err.iter().map(|e| e * e).sum::<f64>();
            let up: Vec<f64> = err.iter().map(|e| scale * e).collect();
            for (acc, g) in grads.iter_mut().zip(backward(net, x, &up)?.weights) {
                acc.iter_mut().zip(g).for_each(|(a, g)| *a += g);
            }
        }
        trace.push(loss * scale / 2.0);
        for (l, g) in net.layers.iter_mut().zip(grads) {
            l.weights.iter_mut().zip(g).for_each(|(w, g)| *w -= lr * g);
        }
    }
    Ok(trace)
}

pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("step,mse\n");
    for (i, l) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", format_g17(*l)));
    }
    out
}

/// Largest relative gap between analytic weight gradients of
/// `½‖net(v) − t‖²` and central differences with step `h`.
pub fn gradient_check(net: &Network, v: &[f64], target: &[f64], h: f64) -> Result<f64, EqnnError> {
    let loss = |n: &Network| -> Result<f64, EqnnError> {
        Ok(0.5 * forward(n, v)?.iter().zip(target).map(|(o, t)| (o - t).powi(2)).sum::<f64>())
    };
    let out = forward(net, v)?;
    check_len(out.len(), target.len())?;
    let up: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
    let analytic = backward(net, v, &up)?.weights;
    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    for (k, layer) in analytic.iter().enumerate() {
        for (c, &a) in layer.iter().enumerate() {
            let w = probe.layers[k].weights[c];
            probe.layers[k].weights[c] = w + h;
            let plus = loss(&probe)?;
            probe.layers[k].weights[c] = w - h;
            let minus = loss(&probe)?;
            probe.layers[k].weights[c] = w;
            let fd = (plus - minus) / (2.0 * h);
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-8));
        }
    }
    Ok(worst)
}

/// Energy of a vector on each simple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub energies: IndexMap<String, f64>,
    pub threshold: f64,
}

impl SpectrumReport {
    /// Labels whose energy reaches the threshold.
    pub fn present(&self) -> Vec<&str> {
        self.energies.iter().filter(|(_, &e)| e >= self.threshold).map(|(l, _)| l.as_str()).collect()
    }

    pub fn total(&self) -> f64 {
        self.energies.values().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spectrum serializes")
    }
}

/// Energy per simple: `Σ c_i² / D_i` over the simple's block of `c = Q⁻¹v`,
/// so energies add up to `‖v‖²`.
pub fn spectrum(d: &Decomposition, v: &[f64], threshold: f64) -> Result<SpectrumReport, EqnnError> {
    check_len(d.size(), v.len())?;
    let c = d.coefficients(v);
    let energies = d
        .simples()
        .iter()
        .zip(d.block_ranges())
        .map(|(s, r)| (s.label().to_string(), r.clone().map(|i| c[i] * c[i] / d.dscale()[i]).sum()))
        .collect();
    Ok(SpectrumReport { energies, threshold })
}

/// `R[i][j]`: energy reaches simple `j` after `k` activations starting from
/// a pure signal on simple `i`.
///
/// Each step feeds every energized simple forward separately as a pure
/// signal, sampled at the same points as the interaction graph.
pub fn frequency_flow_report(d: &Decomposition, pl: &PLScalar, k: usize, threshold: f64, seed: u64) -> Result<Vec<Vec<bool>>, EqnnError> {
    let n = d.simples().len();
    let mut step = vec![vec![false; n]; n];
    for (i, s) in d.simples().iter().enumerate() {
        for v in canonical_samples(s, source_seed(seed, i)) {
            let mut c = vec![0.0; d.size()];
            c[d.block_ranges()[i].clone()].copy_from_slice(&v);
            let signal = apply_componentwise(pl, &d.synthesize(&c));
            let energies = spectrum(d, &signal, threshold)?;
            for (j, &e) in energies.energies.values().enumerate() {
                step[i][j] |= e >= threshold;
            }
        }
    }
    let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
    for _ in 0..k {
        reach = (0..n).map(|i| (0..n).map(|j| (0..n).any(|m| reach[i][m] && step[m][j])).collect()).collect();
    }
    Ok(reach)
}
