//! Finite groups, G-sets and orbit partitions.
//!
//! Elements are canonical indices `0..order`. Abelian groups are products of
//! cyclic factors and an element's index is the mixed-radix encoding of its
//! factor tuple, first factor most significant. Permutation groups are given
//! by generators and enumerated by breadth-first closure.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Element = usize;

/// Hard cap on the number of elements enumerated for a permutation group.
pub const MAX_GENERATED_ORDER: usize = 100_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("cyclic factors must have positive order")]
    ZeroOrder,
    #[error("operation requires an abelian group, got {0}")]
    NotAbelian(String),
    #[error("invalid permutation on {degree} points: {reason}")]
    InvalidPermutation { degree: usize, reason: String },
    #[error("permutation group exceeds {MAX_GENERATED_ORDER} elements")]
    TooLarge,
    #[error("G-sets are over different groups")]
    GroupMismatch,
    #[error("bad group spec {spec:?}: {reason}")]
    BadSpec { spec: String, reason: String },
    #[error("Burnside check limited to |G|*|X| <= 10^6, got {0}")]
    BurnsideTooLarge(usize),
}

/// A permutation of `0..degree`, stored as its image list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Permutation((0..degree).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self, GroupError> {
        let degree = images.len();
        let mut seen = vec![false; degree];
        for &x in &images {
            if x >= degree || std::mem::replace(&mut seen[x], true) {
                return Err(GroupError::InvalidPermutation {
                    degree,
                    reason: format!("{images:?} is not a bijection"),
                });
            }
        }
        Ok(Permutation(images))
    }

    /// Builds a permutation from 0-based cycles.
    pub fn from_cycles(degree: usize, cycles: &[Vec<usize>]) -> Result<Self, GroupError> {
        let mut images: Vec<usize> = (0..degree).collect();
        let mut used = vec![false; degree];
        for cycle in cycles {
            for (i, &x) in cycle.iter().enumerate() {
                if x >= degree || std::mem::replace(&mut used[x], true) {
                    return Err(GroupError::InvalidPermutation {
                        degree,
                        reason: format!("point {} repeated or out of range", x + 1),
                    });
                }
                images[x] = cycle[(i + 1) % cycle.len()];
            }
        }
        Ok(Permutation(images))
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (x, &y) in self.0.iter().enumerate() {
            inv[y] = x;
        }
        Permutation(inv)
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// 1-based cycle notation, fixed points omitted.
    pub fn cycle_notation(&self) -> String {
        let mut seen = vec![false; self.degree()];
        let mut out = String::new();
        for start in 0..self.degree() {
            if seen[start] || self.0[start] == start {
                continue;
            }
            let mut cycle = vec![];
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push((x + 1).to_string());
                x = self.0[x];
            }
            out.push_str(&format!("({})", cycle.join(" ")));
        }
        if out.is_empty() {
            "()".into()
        } else {
            out
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    /// Product of cyclic groups of the given orders.
    Abelian { factors: Vec<usize> },
    /// Subgroup of `Sym(degree)` generated by `generators`.
    Generated { degree: usize, generators: Vec<Permutation> },
}

#[derive(Clone, Debug)]
struct Closure {
    elements: Vec<Permutation>,
    index: HashMap<Permutation, Element>,
    generators: Vec<Element>,
}

#[derive(Clone, Debug)]
pub struct Group {
    kind: GroupKind,
    order: usize,
    closure: Option<Closure>,
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Group {}

/// The cyclic group of order `n`.
pub fn make_cyclic(n: usize) -> Result<Group, GroupError> {
    make_abelian(vec![n])
}

/// Product of cyclic groups of the given orders.
pub fn make_abelian(factors: Vec<usize>) -> Result<Group, GroupError> {
    if factors.is_empty() || factors.contains(&0) {
        return Err(GroupError::ZeroOrder);
    }
    let order = factors.iter().product();
    Ok(Group { kind: GroupKind::Abelian { factors }, order, closure: None })
}

/// Direct product of two abelian groups.
pub fn make_product(g: &Group, h: &Group) -> Result<Group, GroupError> {
    let mut factors = g.abelian_factors()?.to_vec();
    factors.extend_from_slice(h.abelian_factors()?);
    make_abelian(factors)
}

/// Permutation group generated by `generators` on `degree` points.
pub fn make_generated(degree: usize, generators: Vec<Permutation>) -> Result<Group, GroupError> {
    if degree == 0 {
        return Err(GroupError::ZeroOrder);
    }
    if let Some(p) = generators.iter().find(|p| p.degree() != degree) {
        return Err(GroupError::InvalidPermutation {
            degree,
            reason: format!("generator acts on {} points", p.degree()),
        });
    }
    let id = Permutation::identity(degree);
    let mut elements = vec![id.clone()];
    let mut index = HashMap::from([(id, 0)]);
    let mut queue = VecDeque::from([0]);
    while let Some(e) = queue.pop_front() {
        for gen in &generators {
            let next = gen.compose(&elements[e]);
            if !index.contains_key(&next) {
                if elements.len() == MAX_GENERATED_ORDER {
                    return Err(GroupError::TooLarge);
                }
                index.insert(next.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(next);
            }
        }
    }
    let generator_elements = generators.iter().map(|g| index[g]).collect();
    let order = elements.len();
    Ok(Group {
        kind: GroupKind::Generated { degree, generators },
        order,
        closure: Some(Closure { elements, index, generators: generator_elements }),
    })
}

/// The symmetric group on `n` points, generated by an `n`-cycle and a transposition.
pub fn make_symmetric(n: usize) -> Result<Group, GroupError> {
    let mut gens = vec![];
    if n >= 2 {
        gens.push(Permutation::from_cycles(n, &[(0..n).collect()])?);
        gens.push(Permutation::from_cycles(n, &[vec![0, 1]])?);
    }
    make_generated(n, gens)
}

impl Group {
    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> Element {
        0
    }

    pub fn is_abelian_kind(&self) -> bool {
        matches!(self.kind, GroupKind::Abelian { .. })
    }

    pub fn is_cyclic(&self) -> bool {
        matches!(&self.kind, GroupKind::Abelian { factors } if factors.len() == 1)
    }

    pub fn abelian_factors(&self) -> Result<&[usize], GroupError> {
        match &self.kind {
            GroupKind::Abelian { factors } => Ok(factors),
            GroupKind::Generated { .. } => Err(GroupError::NotAbelian(self.to_string())),
        }
    }

    /// Factor tuple of an abelian element.
    pub fn decode(&self, g: Element) -> Vec<usize> {
        let factors = self.abelian_factors().expect("decode needs an abelian group");
        let mut digits = vec![0; factors.len()];
        let mut rest = g;
        for (d, &n) in digits.iter_mut().zip(factors).rev() {
            *d = rest % n;
            rest /= n;
        }
        digits
    }

    pub fn encode(&self, digits: &[usize]) -> Element {
        let factors = self.abelian_factors().expect("encode needs an abelian group");
        assert_eq!(digits.len(), factors.len());
        digits.iter().zip(factors).fold(0, |acc, (&d, &n)| acc * n + d % n)
    }

    pub fn mul(&self, a: Element, b: Element) -> Element {
        match &self.kind {
            GroupKind::Abelian { factors } => {
                let (x, y) = (self.decode(a), self.decode(b));
                let sum: Vec<usize> = x.iter().zip(&y).zip(factors).map(|((p, q), n)| (p + q) % n).collect();
                self.encode(&sum)
            }
            GroupKind::Generated { .. } => {
                let c = self.closure();
                c.index[&c.elements[a].compose(&c.elements[b])]
            }
        }
    }

    pub fn inv(&self, a: Element) -> Element {
        match &self.kind {
            GroupKind::Abelian { factors } => {
                let neg: Vec<usize> = self.decode(a).iter().zip(factors).map(|(d, n)| (n - d) % n).collect();
                self.encode(&neg)
            }
            GroupKind::Generated { .. } => {
                let c = self.closure();
                c.index[&c.elements[a].inverse()]
            }
        }
    }

    pub fn pow(&self, a: Element, k: usize) -> Element {
        (0..k).fold(self.identity(), |acc, _| self.mul(acc, a))
    }

    pub fn element_order(&self, a: Element) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity() {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// Generator elements: unit tuples for abelian groups, the given
    /// permutations otherwise.
    pub fn generators(&self) -> Vec<Element> {
        match &self.kind {
            GroupKind::Abelian { factors } => (0..factors.len())
                .map(|i| {
                    let mut digits = vec![0; factors.len()];
                    digits[i] = 1;
                    self.encode(&digits)
                })
                .collect(),
            GroupKind::Generated { .. } => self.closure().generators.clone(),
        }
    }

    pub fn elements(&self) -> std::ops::Range<Element> {
        0..self.order
    }

    /// The permutation of a generated-group element.
    pub fn permutation(&self, g: Element) -> Option<&Permutation> {
        self.closure.as_ref().map(|c| &c.elements[g])
    }

    fn closure(&self) -> &Closure {
        self.closure.as_ref().expect("generated groups carry their closure")
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GroupKind::Abelian { factors } => {
                let parts: Vec<String> = factors.iter().map(|n| format!("c{n}")).collect();
                write!(f, "{}", parts.join("x"))
            }
            GroupKind::Generated { degree, generators } => {
                let gens: Vec<String> = generators.iter().map(Permutation::cycle_notation).collect();
                write!(f, "perm:{degree}:{}", gens.join(","))
            }
        }
    }
}

/// Parses `c8`, `c3xc5` or `perm:3:(123),(12)`.
///
/// Points in cycle notation are 1-based. Inside a cycle they may be separated
/// by spaces or commas; a single run of digits is read one point per digit.
impl FromStr for Group {
    type Err = GroupError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| GroupError::BadSpec { spec: spec.to_string(), reason: reason.to_string() };
        let s = spec.trim();
        if let Some(rest) = s.strip_prefix("perm:") {
            let (degree, gens) = rest.split_once(':').unwrap_or((rest, ""));
            let degree: usize = degree.trim().parse().map_err(|_| bad("degree is not an integer"))?;
            let generators = split_generators(gens)
                .map_err(|e| bad(&e))?
                .into_iter()
                .map(|g| parse_cycles(&g, degree).map_err(|e| bad(&e)))
                .collect::<Result<Vec<_>, _>>()?;
            return make_generated(degree, generators);
        }
        let factors = s
            .split('x')
            .map(|part| {
                part.trim()
                    .strip_prefix('c')
                    .or_else(|| part.trim().strip_prefix('C'))
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| bad("expected factors like c3xc5"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        make_abelian(factors).map_err(|e| bad(&e.to_string()))
    }
}

fn split_generators(s: &str) -> Result<Vec<String>, String> {
    let mut out = vec![];
    let mut depth = 0usize;
    let mut current = String::new();
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth = depth.checked_sub(1).ok_or("unbalanced parentheses")?;
                current.push(ch);
            }
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut current));
            }
            _ => current.push(ch),
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    out.push(current);
    Ok(out.into_iter().map(|g| g.trim().to_string()).filter(|g| !g.is_empty()).collect())
}

fn parse_cycles(s: &str, degree: usize) -> Result<Permutation, String> {
    let mut cycles = vec![];
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body_end = rest.find(')').ok_or("missing ')'")?;
        let body = rest.strip_prefix('(').ok_or("expected '('")?;
        let body = &body[..body_end - 1];
        let tokens: Vec<&str> = body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let points: Vec<usize> = if tokens.len() == 1 && tokens[0].len() > 1 {
            tokens[0]
                .chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| format!("bad point {c:?}")))
                .collect::<Result<_, _>>()?
        } else {
            tokens.iter().map(|t| t.parse::<usize>().map_err(|_| format!("bad point {t:?}"))).collect::<Result<_, _>>()?
        };
        if points.iter().any(|&p| p == 0 || p > degree) {
            return Err(format!("points must lie in 1..={degree}"));
        }
        cycles.push(points.into_iter().map(|p| p - 1).collect());
        rest = rest[body_end + 1..].trim_start();
    }
    Permutation::from_cycles(degree, &cycles).map_err(|e| e.to_string())
}

#[derive(Clone, Debug)]
enum Action {
    /// Left translation of the group on itself.
    Regular,
    /// A permutation group on its points.
    Natural,
    /// Every element fixes every point.
    Trivial,
    /// Diagonal action on a product, point index `|Y| * x + y`.
    Product(Box<GSet>, Box<GSet>),
}

/// A finite left G-set.
#[derive(Clone, Debug)]
pub struct GSet {
    group: Arc<Group>,
    size: usize,
    action: Action,
}

/// G acting on itself by left translation.
pub fn regular_gset(group: &Arc<Group>) -> GSet {
    GSet { group: Arc::clone(group), size: group.order(), action: Action::Regular }
}

/// A permutation group acting on `0..degree`.
pub fn natural_gset(group: &Arc<Group>) -> Result<GSet, GroupError> {
    match group.kind() {
        GroupKind::Generated { degree, .. } => {
            Ok(GSet { group: Arc::clone(group), size: *degree, action: Action::Natural })
        }
        GroupKind::Abelian { .. } => Err(GroupError::BadSpec {
            spec: group.to_string(),
            reason: "natural action needs a permutation group".into(),
        }),
    }
}

/// `size` points, each fixed by the whole group.
pub fn trivial_gset(group: &Arc<Group>, size: usize) -> GSet {
    assert!(size > 0);
    GSet { group: Arc::clone(group), size, action: Action::Trivial }
}

/// Diagonal action on `X × Y`.
pub fn product_gset(x: &GSet, y: &GSet) -> Result<GSet, GroupError> {
    if !x.same_group(y) {
        return Err(GroupError::GroupMismatch);
    }
    Ok(GSet {
        group: Arc::clone(&x.group),
        size: x.size * y.size,
        action: Action::Product(Box::new(x.clone()), Box::new(y.clone())),
    })
}

impl GSet {
    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn same_group(&self, other: &GSet) -> bool {
        Arc::ptr_eq(&self.group, &other.group) || self.group == other.group
    }

    pub fn act(&self, g: Element, x: usize) -> usize {
        match &self.action {
            Action::Regular => self.group.mul(g, x),
            Action::Natural => self.group.permutation(g).expect("natural action").apply(x),
            Action::Trivial => x,
            Action::Product(a, b) => {
                let (i, j) = (x / b.size, x % b.size);
                a.act(g, i) * b.size + b.act(g, j)
            }
        }
    }

    /// The permutation of the points induced by `g`.
    pub fn permutation_of(&self, g: Element) -> Vec<usize> {
        (0..self.size).map(|x| self.act(g, x)).collect()
    }
}

/// Orbits of a G-set, ordered by smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitPartition {
    classes: Vec<Vec<usize>>,
    #[serde(skip)]
    class_of: Vec<usize>,
}

impl OrbitPartition {
    fn from_classes(mut classes: Vec<Vec<usize>>, size: usize) -> Self {
        for c in &mut classes {
            c.sort_unstable();
        }
        classes.sort_by_key(|c| c[0]);
        let mut class_of = vec![usize::MAX; size];
        for (i, c) in classes.iter().enumerate() {
            for &x in c {
                class_of[x] = i;
            }
        }
        OrbitPartition { classes, class_of }
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, x: usize) -> usize {
        self.class_of[x]
    }

    pub fn representative(&self, class: usize) -> usize {
        self.classes[class][0]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("orbit partition serializes")
    }
}

/// Disjoint-set forest whose roots are class minima.
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }

    pub fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

/// Orbit partition by union-find closure under the group generators.
pub fn orbits(gs: &GSet) -> OrbitPartition {
    let mut sets = UnionFind::new(gs.size());
    for g in gs.group().generators() {
        for x in 0..gs.size() {
            sets.union(x, gs.act(g, x));
        }
    }
    let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
    for x in 0..gs.size() {
        by_root.entry(sets.find(x)).or_default().push(x);
    }
    OrbitPartition::from_classes(by_root.into_values().collect(), gs.size())
}

/// Orbit count via Burnside: `(1/|G|) Σ_g |Fix(g)|`, in exact integers.
pub fn burnside_count(gs: &GSet) -> Result<usize, GroupError> {
    let work = gs.group().order() * gs.size();
    if work > 1_000_000 {
        return Err(GroupError::BurnsideTooLarge(work));
    }
    let fixed: usize = gs
        .group()
        .elements()
        .map(|g| (0..gs.size()).filter(|&x| gs.act(g, x) == x).count())
        .sum();
    assert_eq!(fixed % gs.group().order(), 0, "Burnside sum must be divisible by |G|");
    Ok(fixed / gs.group().order())
}
