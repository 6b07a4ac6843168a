//! Piecewise-linear activations and the maps they induce between simples.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::UnionFind;
use crate::linalg::{Matrix, MatrixError};
use crate::reps::{fourier_basis, Decomposition, RepError, SimpleRep};

pub const DEFAULT_SEED: u64 = 0x5EED;
pub const RANDOM_SAMPLES: usize = 32;

#[derive(Debug, Error)]
pub enum PlError {
    #[error("breakpoints must be finite and strictly increasing")]
    BadBreakpoints,
    #[error("expected {expected} slopes for {breakpoints} breakpoints, got {got}")]
    SlopeCount { breakpoints: usize, expected: usize, got: usize },
    #[error("slopes and anchor must be finite")]
    NonFinite,
    #[error("unknown activation {0:?}; expected relu, abs, identity, leaky:<a> or a JSON file")]
    UnknownActivation(String),
    #[error("bad activation JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("{0} requires a cyclic group")]
    NotCyclic(&'static str),
    #[error("spike maps need n >= 3, got {0}")]
    SpikeOrder(usize),
    #[error("spike profile must vanish at both cone boundaries, got h(0)={0}, h(1)={1}")]
    SpikeBoundary(f64, f64),
    #[error("vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
}

/// A continuous piecewise-linear function `ℝ → ℝ`.
///
/// `anchor` is the value at the first breakpoint, or at 0 when there are none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPl")]
pub struct PLScalar {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    anchor: f64,
}

#[derive(Deserialize)]
struct RawPl {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    anchor: f64,
}

impl TryFrom<RawPl> for PLScalar {
    type Error = PlError;

    fn try_from(raw: RawPl) -> Result<Self, Self::Error> {
        custom_pl(raw.breakpoints, raw.slopes, raw.anchor)
    }
}

pub fn relu() -> PLScalar {
    PLScalar { breakpoints: vec![0.0], slopes: vec![0.0, 1.0], anchor: 0.0 }
}

pub fn abs_pl() -> PLScalar {
    PLScalar { breakpoints: vec![0.0], slopes: vec![-1.0, 1.0], anchor: 0.0 }
}

pub fn identity_pl() -> PLScalar {
    PLScalar { breakpoints: vec![], slopes: vec![1.0], anchor: 0.0 }
}

pub fn leaky(a: f64) -> Result<PLScalar, PlError> {
    custom_pl(vec![0.0], vec![a, 1.0], 0.0)
}

pub fn custom_pl(breakpoints: Vec<f64>, slopes: Vec<f64>, anchor: f64) -> Result<PLScalar, PlError> {
    if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PlError::BadBreakpoints);
    }
    if slopes.len() != breakpoints.len() + 1 {
        return Err(PlError::SlopeCount { breakpoints: breakpoints.len(), expected: breakpoints.len() + 1, got: slopes.len() });
    }
    if slopes.iter().any(|s| !s.is_finite()) || !anchor.is_finite() {
        return Err(PlError::NonFinite);
    }
    Ok(PLScalar { breakpoints, slopes, anchor })
}

impl PLScalar {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Index of the piece containing `x`; breakpoints belong to the right piece.
    fn piece(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return self.anchor + self.slopes[0] * x;
        }
        let i = self.piece(x);
        if i == 0 {
            return self.anchor + self.slopes[0] * (x - self.breakpoints[0]);
        }
        let mut y = self.anchor;
        for k in 1..i {
            y += self.slopes[k] * (self.breakpoints[k] - self.breakpoints[k - 1]);
        }
        y + self.slopes[i] * (x - self.breakpoints[i - 1])
    }

    /// Minimum-norm element of the Clarke subdifferential.
    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.piece(x);
        if i > 0 && self.breakpoints[i - 1] == x {
            let (l, r) = (self.slopes[i - 1], self.slopes[i]);
            if l.min(r) <= 0.0 && l.max(r) >= 0.0 {
                0.0
            } else if l.abs() < r.abs() {
                l
            } else {
                r
            }
        } else {
            self.slopes[i]
        }
    }

    /// Short name used in reports.
    pub fn name(&self) -> String {
        if *self == relu() {
            "relu".into()
        } else if *self == abs_pl() {
            "abs".into()
        } else if *self == identity_pl() {
            "identity".into()
        } else if self.breakpoints == [0.0] && self.anchor == 0.0 && self.slopes[1] == 1.0 {
            format!("leaky:{}", self.slopes[0])
        } else {
            "custom".into()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("PL scalar serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PlError> {
        Ok(serde_json::from_str(text)?)
    }
}

impl fmt::Display for PLScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses `relu`, `abs`, `identity` or `leaky:<a>`.
impl FromStr for PLScalar {
    type Err = PlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "relu" => Ok(relu()),
            "abs" => Ok(abs_pl()),
            "identity" => Ok(identity_pl()),
            other => {
                let a = other
                    .strip_prefix("leaky:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| PlError::UnknownActivation(other.to_string()))?;
                leaky(a)
            }
        }
    }
}

pub fn apply_componentwise(pl: &PLScalar, v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| pl.eval(x)).collect()
}

/// `Q⁻¹·PL(Q·c)`.
pub fn activation_in_fourier(d: &Decomposition, pl: &PLScalar, c: &[f64]) -> Result<Vec<f64>, PlError> {
    check_len(d.size(), c.len())?;
    Ok(d.coefficients(&apply_componentwise(pl, &d.synthesize(c))))
}

fn check_len(expected: usize, got: usize) -> Result<(), PlError> {
    if expected == got {
        Ok(())
    } else {
        Err(PlError::Length { expected, got })
    }
}

/// The block `f_i^j = p_j ∘ PL ∘ inc_i` of an activation.
#[derive(Clone, Debug)]
pub struct BlockMapQuery<'a> {
    decomposition: &'a Decomposition,
    activation: PLScalar,
    source: usize,
    target: usize,
}

impl<'a> BlockMapQuery<'a> {
    pub fn new(decomposition: &'a Decomposition, activation: PLScalar, source: usize, target: usize) -> Result<Self, PlError> {
        decomposition.simple(source)?;
        decomposition.simple(target)?;
        Ok(BlockMapQuery { decomposition, activation, source, target })
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn target(&self) -> usize {
        self.target
    }
}

/// Full coefficient vector of `PL(inc_i(v))`.
pub fn source_image(d: &Decomposition, pl: &PLScalar, i: usize, v: &[f64]) -> Result<Vec<f64>, PlError> {
    let range = d.block_ranges().get(i).cloned().ok_or(RepError::IndexOutOfRange { index: i, count: d.simples().len() })?;
    check_len(range.len(), v.len())?;
    let mut c = vec![0.0; d.size()];
    c[range].copy_from_slice(v);
    activation_in_fourier(d, pl, &c)
}

pub fn block_eval(q: &BlockMapQuery<'_>, v: &[f64]) -> Result<Vec<f64>, PlError> {
    let image = source_image(q.decomposition, &q.activation, q.source, v)?;
    Ok(image[q.decomposition.block_ranges()[q.target].clone()].to_vec())
}

/// Seed for the samples of source simple `i`.
pub fn source_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Uniform point of the unit ball scaled to unit norm.
pub fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = crate::linalg::norm2(&v);
        if norm <= 1.0 && norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Evaluation points for a source simple: the orbit representatives of its
/// hyperplane arrangement (cyclic groups only) followed by seeded random
/// unit vectors.
pub fn canonical_samples(s: &SimpleRep, seed: u64) -> Vec<Vec<f64>> {
    let mut out = vec![];
    if s.group().is_cyclic() {
        match (s.dim(), s.group().order() % 2) {
            (1, _) => out.push(vec![1.0]),
            (_, 0) => out.push(vec![0.0, 1.0]),
            _ => out.extend([vec![0.0, 1.0], vec![0.0, -1.0]]),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.extend((0..RANDOM_SAMPLES).map(|_| random_unit_vector(&mut rng, s.dim())));
    out
}

/// Chambers of the arrangement cut out by the coordinate hyperplanes on the
/// plane of `s`, and their orbits under the generator.
pub fn region_census(s: &SimpleRep) -> Result<(usize, usize), PlError> {
    if !s.group().is_cyclic() {
        return Err(PlError::NotCyclic("region census"));
    }
    let d = fourier_basis(s.group())?;
    let i = d.index_of(s.label()).expect("simple belongs to its group's decomposition");
    let forms = d.q().column_range(d.block_ranges()[i].clone());
    let chambers = chamber_points(&forms, s.dim());
    let pattern = |p: &[f64]| -> Vec<bool> { (0..forms.rows()).map(|r| dot(forms.row(r), p) > 0.0).collect() };
    let patterns: Vec<Vec<bool>> = chambers.iter().map(|p| pattern(p)).collect();
    let gen = &s.gen_matrices()[0];
    let mut sets = UnionFind::new(chambers.len());
    for (c, p) in chambers.iter().enumerate() {
        let moved = pattern(&gen.mul_vec(p)?);
        let target = patterns.iter().position(|q| *q == moved).expect("generator permutes chambers");
        sets.union(c, target);
    }
    Ok((chambers.len(), sets.count()))
}

/// One interior point per chamber of a central arrangement in dimension 1 or 2.
fn chamber_points(forms: &Matrix, dim: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    let mut angles: Vec<f64> = vec![];
    for r in 0..forms.rows() {
        let (a, b) = (forms[(r, 0)], forms[(r, 1)]);
        if a.hypot(b) < 1e-12 {
            continue;
        }
        let base = (-a).atan2(b);
        angles.push(base.rem_euclid(2.0 * PI));
        angles.push((base + PI).rem_euclid(2.0 * PI));
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if angles.len() > 1 && (2.0 * PI - angles[angles.len() - 1] + angles[0]) < 1e-9 {
        angles.pop();
    }
    (0..angles.len())
        .map(|k| {
            let lo = angles[k];
            let hi = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + 2.0 * PI };
            let mid = 0.5 * (lo + hi);
            vec![mid.cos(), mid.sin()]
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Equivariant PL map from the rotation plane of `L_1` to the trivial line,
/// supported as a triangular spike on each cone between consecutive rays at
/// angles `2πk/n`.
#[derive(Clone, Debug)]
pub struct SpikeMap {
    n: usize,
    profile: PLScalar,
}

/// `profile` is read along the chord from `(1,0)` (t = 0) to
/// `(cos 2π/n, sin 2π/n)` (t = 1).
pub fn spike_map(n: usize, profile: PLScalar) -> Result<SpikeMap, PlError> {
    if n < 3 {
        return Err(PlError::SpikeOrder(n));
    }
    let (h0, h1) = (profile.eval(0.0), profile.eval(1.0));
    if h0.abs() > 1e-12 || h1.abs() > 1e-12 {
        return Err(PlError::SpikeBoundary(h0, h1));
    }
    Ok(SpikeMap { n, profile })
}

/// Tent with apex 1 at the middle of the chord.
pub fn unit_tent() -> PLScalar {
    custom_pl(vec![0.0, 0.5, 1.0], vec![0.0, 2.0, -2.0, 0.0], 0.0).expect("valid tent")
}

impl SpikeMap {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let width = 2.0 * PI / self.n as f64;
        let r = v[0].hypot(v[1]);
        if r == 0.0 {
            return 0.0;
        }
        let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
        let sector = ((phi / width).floor() as usize).min(self.n - 1);
        let (s, c) = (-(sector as f64) * width).sin_cos();
        let (x, y) = (c * v[0] - s * v[1], s * v[0] + c * v[1]);
        // v = α·(1,0) + β·(cos w, sin w)
        let (sw, cw) = width.sin_cos();
        let beta = y / sw;
        let alpha = x - beta * cw;
        let total = alpha + beta;
        if total <= 0.0 {
            return 0.0;
        }
        (PI / self.n as f64).cos() * total * self.profile.eval(beta / total)
    }

    pub fn eval_vec(&self, v: &[f64]) -> Vec<f64> {
        vec![self.eval(v)]
    }
}

/// `max_g ‖f(ρ_in(g)v) − ρ_out(g)f(v)‖∞` over all listed group elements.
pub fn equivariance_deviation_at(f: impl Fn(&[f64]) -> Vec<f64>, rep_in: &[Matrix], rep_out: &[Matrix], v: &[f64]) -> f64 {
    let fv = f(v);
    rep_in
        .iter()
        .zip(rep_out)
        .map(|(a, b)| {
            let lhs = f(&a.mul_vec(v).expect("input dimension"));
            let rhs = b.mul_vec(&fv).expect("output dimension");
            crate::linalg::max_abs_diff(&lhs, &rhs)
        })
        .fold(0.0, f64::max)
}

/// Largest deviation from equivariance over `trials` seeded pairs of a
/// random element and a random vector in `[-1, 1]^d`.
pub fn equivariance_check(
    f: impl Fn(&[f64]) -> Vec<f64>,
    rep_in: &[Matrix],
    rep_out: &[Matrix],
    trials: usize,
    seed: u64,
) -> f64 {
    assert!(trials >= 1 && !rep_in.is_empty() && rep_in.len() == rep_out.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rep_in[0].cols();
    (0..trials)
        .map(|_| {
            let g = rng.gen_range(0..rep_in.len());
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let lhs = f(&rep_in[g].mul_vec(&v).expect("input dimension"));
            let rhs = rep_out[g].mul_vec(&f(&v)).expect("output dimension");
            crate::linalg::max_abs_diff(&lhs, &rhs)
        })
        .fold(0.0, f64::max)
}
