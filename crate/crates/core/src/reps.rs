//! Simple real representations of finite abelian groups and the real
//! Fourier change of basis of the regular representation.

use std::ops::Range;
use std::sync::Arc;

use thiserror::Error;

use crate::groups::{regular_gset, Element, GSet, Group, GroupError};
use crate::linalg::{Matrix, MatrixError};

/// Off-block tolerance for accepting a decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RepError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("simple index {index} out of range for {count} simples")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("conjugated action is not block diagonal: off-block mass {mass:e}")]
    DecompositionFailure { mass: f64 },
    #[error("element {0} is not in the group")]
    BadElement(Element),
}

/// A simple real representation of an abelian group.
#[derive(Clone, Debug)]
pub struct SimpleRep {
    group: Arc<Group>,
    label: String,
    frequencies: Vec<usize>,
    dim: usize,
    gen_matrices: Vec<Matrix>,
    ord: usize,
    kernel: Vec<Element>,
}

impl SimpleRep {
    fn build(group: Arc<Group>, frequencies: Vec<usize>, gen_matrices: Vec<Matrix>) -> Self {
        let dim = gen_matrices[0].rows();
        let label = frequency_label(&frequencies);
        let mut rep = SimpleRep { group, label, frequencies, dim, gen_matrices, ord: 0, kernel: vec![] };
        rep.kernel = rep.group.elements().filter(|&g| rep.matrix(g).is_identity(1e-9)).collect();
        let all_ones = rep.group.generators().into_iter().fold(rep.group.identity(), |acc, g| rep.group.mul(acc, g));
        rep.ord = rep.group.element_order_where(all_ones, |g| rep.kernel.binary_search(&g).is_ok());
        rep
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn frequencies(&self) -> &[usize] {
        &self.frequencies
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gen_matrices(&self) -> &[Matrix] {
        &self.gen_matrices
    }

    /// Order of the matrix representing the all-generators element.
    pub fn ord(&self) -> usize {
        self.ord
    }

    pub fn ord_half(&self) -> usize {
        if self.ord % 2 == 0 {
            self.ord / 2
        } else {
            self.ord
        }
    }

    pub fn kernel(&self) -> &[Element] {
        &self.kernel
    }

    pub fn is_trivial(&self) -> bool {
        self.frequencies.iter().all(|&k| k == 0)
    }

    /// `ρ(g)` as the product of generator powers.
    pub fn matrix(&self, g: Element) -> Matrix {
        let digits = self.group.decode(g);
        let mut m = Matrix::identity(self.dim);
        for (gen, &d) in self.gen_matrices.iter().zip(&digits) {
            for _ in 0..d {
                m = m.matmul(gen).expect("square generator matrices");
            }
        }
        m
    }
}

fn frequency_label(freqs: &[usize]) -> String {
    if freqs.len() == 1 || freqs.iter().all(|&k| k < 10) {
        let digits: String = freqs.iter().map(|k| k.to_string()).collect();
        format!("L_{digits}")
    } else {
        let parts: Vec<String> = freqs.iter().map(|k| k.to_string()).collect();
        format!("L_{}", parts.join(","))
    }
}

impl Group {
    fn element_order_where(&self, g: Element, is_kernel: impl Fn(Element) -> bool) -> usize {
        let mut x = g;
        let mut t = 1;
        while !is_kernel(x) {
            x = self.mul(x, g);
            t += 1;
        }
        t
    }
}

fn rotation(k: usize, n: usize) -> Matrix {
    let t = angle(k, n);
    let (s, c) = t.sin_cos();
    Matrix::from_rows(&[vec![c, -s], vec![s, c]]).expect("2x2")
}

/// `2π·(k mod n)/n`, reduced first to keep large products accurate.
fn angle(k: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * ((k % n) as f64) / n as f64
}

fn cyclic_dims(n: usize) -> Vec<usize> {
    let m = n / 2;
    (0..=m).map(|k| if k == 0 || (n % 2 == 0 && k == m) { 1 } else { 2 }).collect()
}

fn cyclic_generator(k: usize, n: usize) -> Matrix {
    if k == 0 {
        Matrix::identity(1)
    } else if 2 * k == n {
        Matrix::diagonal(&[-1.0])
    } else {
        rotation(k, n)
    }
}

/// Simples of `C_n` in order: trivial, rotations `L_k`, then sign for even `n`.
pub fn cyclic_simples(n: usize) -> Result<Vec<SimpleRep>, RepError> {
    let group = Arc::new(crate::groups::make_cyclic(n)?);
    Ok(simples_of(&group, &[n]))
}

fn simples_of(group: &Arc<Group>, factors: &[usize]) -> Vec<SimpleRep> {
    let per_factor: Vec<usize> = factors.iter().map(|&n| cyclic_dims(n).len()).collect();
    let total: usize = per_factor.iter().product();
    (0..total)
        .map(|idx| {
            let mut freqs = vec![0; factors.len()];
            let mut rest = idx;
            for (f, &count) in freqs.iter_mut().zip(&per_factor).rev() {
                *f = rest % count;
                rest /= count;
            }
            let dims: Vec<usize> = freqs.iter().zip(factors).map(|(&k, &n)| cyclic_dims(n)[k]).collect();
            let gens = (0..factors.len())
                .map(|i| {
                    dims.iter().enumerate().fold(Matrix::identity(1), |acc, (l, &d)| {
                        let factor = if l == i { cyclic_generator(freqs[i], factors[i]) } else { Matrix::identity(d) };
                        acc.kron(&factor)
                    })
                })
                .collect();
            SimpleRep::build(Arc::clone(group), freqs, gens)
        })
        .collect()
}

/// Simples of an abelian group as tensor products of the cyclic factors'
/// simples, in lexicographic order of frequency tuples.
pub fn abelian_simples(group: &Arc<Group>) -> Result<Vec<SimpleRep>, RepError> {
    let factors = group.abelian_factors()?.to_vec();
    Ok(simples_of(group, &factors))
}

/// `C_n` basis `(w_0, w_1, w_{-1}, …)` with rows indexed by `j = 1..n`.
fn cyclic_q(n: usize) -> (Matrix, Vec<f64>) {
    let mut q = Matrix::zeros(n, n);
    let mut dscale = Vec::with_capacity(n);
    let mut col = 0;
    for (k, dim) in cyclic_dims(n).into_iter().enumerate() {
        if dim == 1 {
            for r in 0..n {
                q[(r, col)] = if k == 0 || (r + 1) % 2 == 0 { 1.0 } else { -1.0 };
            }
            dscale.push(1.0 / n as f64);
            col += 1;
        } else {
            for r in 0..n {
                let (s, c) = angle((r + 1) * k, n).sin_cos();
                q[(r, col)] = -s;
                q[(r, col + 1)] = c;
            }
            dscale.extend([2.0 / n as f64; 2]);
            col += 2;
        }
    }
    (q, dscale)
}

/// Change of basis from the regular representation to its simples.
#[derive(Clone, Debug)]
pub struct Decomposition {
    group: Arc<Group>,
    regular: GSet,
    simples: Vec<SimpleRep>,
    q: Matrix,
    dscale: Vec<f64>,
    block_ranges: Vec<Range<usize>>,
    q_inv: Matrix,
}

/// Real Fourier basis of the regular representation of an abelian group.
///
/// For a product the basis is the Kronecker product of the factors' bases
/// with columns regrouped so each simple's block is contiguous.
pub fn fourier_basis(group: &Arc<Group>) -> Result<Decomposition, RepError> {
    let factors = group.abelian_factors()?.to_vec();
    let (mut q, mut dscale) = cyclic_q(factors[0]);
    let mut ranges = block_ranges(&cyclic_dims(factors[0]));
    for &n in &factors[1..] {
        let (qn, dn) = cyclic_q(n);
        let rn = block_ranges(&cyclic_dims(n));
        let kron = q.kron(&qn);
        let mut order = Vec::with_capacity(kron.cols());
        let mut new_ranges = Vec::with_capacity(ranges.len() * rn.len());
        for ra in &ranges {
            for rb in &rn {
                let start = order.len();
                for a in ra.clone() {
                    for b in rb.clone() {
                        order.push(a * qn.cols() + b);
                    }
                }
                new_ranges.push(start..order.len());
            }
        }
        q = kron.select_columns(&order);
        dscale = order.iter().map(|&c| dscale[c / qn.cols()] * dn[c % qn.cols()]).collect();
        ranges = new_ranges;
    }
    let simples = simples_of(group, &factors);
    let q_inv = q.transpose().scale_rows(&dscale);
    Ok(Decomposition {
        group: Arc::clone(group),
        regular: regular_gset(group),
        simples,
        q,
        dscale,
        block_ranges: ranges,
        q_inv,
    })
}

fn block_ranges(dims: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    dims.iter()
        .map(|&d| {
            start += d;
            start - d..start
        })
        .collect()
}

impl Decomposition {
    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn regular(&self) -> &GSet {
        &self.regular
    }

    pub fn simples(&self) -> &[SimpleRep] {
        &self.simples
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    /// `Q⁻¹ = D·Qᵀ`.
    pub fn q_inv(&self) -> &Matrix {
        &self.q_inv
    }

    pub fn dscale(&self) -> &[f64] {
        &self.dscale
    }

    pub fn block_ranges(&self) -> &[Range<usize>] {
        &self.block_ranges
    }

    pub fn size(&self) -> usize {
        self.q.rows()
    }

    pub fn simple(&self, i: usize) -> Result<&SimpleRep, RepError> {
        self.simples.get(i).ok_or(RepError::IndexOutOfRange { index: i, count: self.simples.len() })
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.simples.iter().position(|s| s.label() == label)
    }

    /// Largest entry of `Q·D·Qᵀ − I`, row-sum norm.
    pub fn inverse_residual(&self) -> f64 {
        let prod = self.q.matmul(&self.q_inv).expect("square");
        prod.sub(&Matrix::identity(self.size())).expect("same shape").norm_inf()
    }

    /// Largest absolute entry of `m` outside the diagonal blocks.
    pub fn off_block_mass(&self, m: &Matrix) -> f64 {
        let mut block_of = vec![0; self.size()];
        for (b, r) in self.block_ranges.iter().enumerate() {
            for i in r.clone() {
                block_of[i] = b;
            }
        }
        let mut mass: f64 = 0.0;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if block_of[i] != block_of[j] {
                    mass = mass.max(m[(i, j)].abs());
                }
            }
        }
        mass
    }

    /// Coefficients `Q⁻¹·v` of a vector on the group.
    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        self.q_inv.mul_vec(v).expect("vector length matches group order")
    }

    /// Synthesis `Q·c`.
    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        self.q.mul_vec(c).expect("coefficient length matches group order")
    }
}

/// Matrix of `g` on a G-set: `M[g·x][x] = 1`.
pub fn permutation_matrix(gs: &GSet, g: Element) -> Matrix {
    let mut m = Matrix::zeros(gs.size(), gs.size());
    for x in 0..gs.size() {
        m[(gs.act(g, x), x)] = 1.0;
    }
    m
}

/// `Q⁻¹·M(g)·Q`, rejected unless block diagonal.
pub fn conjugate_action(d: &Decomposition, g: Element) -> Result<Matrix, RepError> {
    if g >= d.group.order() {
        return Err(RepError::BadElement(g));
    }
    let m = permutation_matrix(&d.regular, g);
    let n = d.q_inv.matmul(&m)?.matmul(&d.q)?;
    let mass = d.off_block_mass(&n);
    if mass > DECOMPOSITION_TOL {
        return Err(RepError::DecompositionFailure { mass });
    }
    Ok(n)
}

/// Columns of `Q` spanning simple `i`.
pub fn inclusion(d: &Decomposition, i: usize) -> Result<Matrix, RepError> {
    d.simple(i)?;
    Ok(d.q.column_range(d.block_ranges[i].clone()))
}

/// Rows of `D·Qᵀ` for simple `i`.
pub fn projection(d: &Decomposition, i: usize) -> Result<Matrix, RepError> {
    d.simple(i)?;
    Ok(d.q_inv.row_range(d.block_ranges[i].clone()))
}

/// Elements acting trivially on `s`.
pub fn char_kernel(s: &SimpleRep) -> Vec<Element> {
    s.kernel().to_vec()
}

/// `ρ_s(g)`.
pub fn rep_matrix(s: &SimpleRep, g: Element) -> Matrix {
    s.matrix(g)
}
