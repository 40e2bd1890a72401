//! Khovanov complexes over `Z[s,t]`.
//!
//! Generators are enhanced states `(smoothing bits, label bits)`; the
//! differential walks every cube edge and applies the merge or split map of a
//! rank-two Frobenius algebra `X^2 = s X + t` to the circles it touches.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::Poly;
use crate::diagram::{
    resolve_bits, Diagram, DiagramError, EdgeId, EnhancedState, Label, ResolvedDiagram, Smoothing,
};

/// Basis element of the Frobenius algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Elem {
    One,
    X,
}

/// Sign and placement choices for the deformed multiplication and comultiplication.
///
/// `m(X,X) = s_sign*s*X + t_sign*t`, `Δ(1) = 1⊗X + X⊗1 - s_sign*s*1⊗1` (the last
/// term only when `split_s`), `Δ(X) = X⊗X + t_sign*t*1⊗1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Algebra {
    /// Circle label that denotes the unit.
    pub unit: Label,
    pub s_sign: i8,
    pub t_sign: i8,
    pub split_s: bool,
}

impl Algebra {
    /// Unit labelled `+`.
    pub fn plus_unit() -> Self {
        Algebra {
            unit: Label::Plus,
            s_sign: 1,
            t_sign: 1,
            split_s: true,
        }
    }

    /// Unit labelled `-`, the reading the local maps need.
    pub fn minus_unit() -> Self {
        Algebra {
            unit: Label::Minus,
            s_sign: 1,
            t_sign: 1,
            split_s: true,
        }
    }

    /// All sixteen variants in a fixed order.
    pub fn all() -> Vec<Algebra> {
        let mut out = Vec::new();
        for unit in [Label::Plus, Label::Minus] {
            for s_sign in [1, -1] {
                for t_sign in [1, -1] {
                    for split_s in [true, false] {
                        out.push(Algebra {
                            unit,
                            s_sign,
                            t_sign,
                            split_s,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn elem(&self, l: Label) -> Elem {
        if l == self.unit {
            Elem::One
        } else {
            Elem::X
        }
    }

    pub fn label(&self, e: Elem) -> Label {
        match e {
            Elem::One => self.unit,
            Elem::X => self.unit.flip(),
        }
    }

    fn s(&self) -> Poly {
        Poly::monomial(self.s_sign as i64, 1, 0)
    }

    fn t(&self) -> Poly {
        Poly::monomial(self.t_sign as i64, 0, 1)
    }

    pub fn mul_elem(&self, a: Elem, b: Elem) -> Vec<(Elem, Poly)> {
        match (a, b) {
            (Elem::One, y) | (y, Elem::One) => vec![(y, Poly::one())],
            (Elem::X, Elem::X) => vec![(Elem::X, self.s()), (Elem::One, self.t())],
        }
    }

    pub fn comul_elem(&self, a: Elem) -> Vec<((Elem, Elem), Poly)> {
        match a {
            Elem::One => {
                let mut v = vec![
                    ((Elem::One, Elem::X), Poly::one()),
                    ((Elem::X, Elem::One), Poly::one()),
                ];
                if self.split_s {
                    v.push(((Elem::One, Elem::One), -self.s()));
                }
                v
            }
            Elem::X => vec![
                ((Elem::X, Elem::X), Poly::one()),
                ((Elem::One, Elem::One), self.t()),
            ],
        }
    }

    /// Merge rule on labels.
    pub fn merge(&self, a: Label, b: Label) -> Vec<(Label, Poly)> {
        self.mul_elem(self.elem(a), self.elem(b))
            .into_iter()
            .map(|(e, p)| (self.label(e), p))
            .collect()
    }

    /// Split rule on labels.
    pub fn split(&self, a: Label) -> Vec<((Label, Label), Poly)> {
        self.comul_elem(self.elem(a))
            .into_iter()
            .map(|((x, y), p)| ((self.label(x), self.label(y)), p))
            .collect()
    }

    /// Quantum degree of a label at `s = t = 0`.
    pub fn q_degree(&self, l: Label) -> i32 {
        match self.elem(l) {
            Elem::One => 1,
            Elem::X => -1,
        }
    }
}

impl Default for Algebra {
    fn default() -> Self {
        Algebra::minus_unit()
    }
}

/// Sign attached to the cube edge that changes crossing `i` from 0 to 1.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub enum SignRule {
    /// `(-1)^(number of 1-smoothings before i)`.
    EarlierOnes,
    /// `(-1)^(number of 1-smoothings after i)`.
    #[default]
    LaterOnes,
}

impl SignRule {
    pub fn all() -> [SignRule; 2] {
        [SignRule::EarlierOnes, SignRule::LaterOnes]
    }

    pub fn sign(&self, smoothing: u32, i: usize) -> i64 {
        let mask = match self {
            SignRule::EarlierOnes => (1u32 << i) - 1,
            SignRule::LaterOnes => !((1u32 << (i + 1)) - 1),
        };
        if (smoothing & mask).count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// Enhanced state: bit `i` of `smoothing` is crossing `i`; bit `j` of `labels`
/// is set when circle `j` carries `-`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gen {
    pub smoothing: u32,
    pub labels: u32,
}

impl Gen {
    pub fn new(smoothing: u32, labels: u32) -> Self {
        Gen { smoothing, labels }
    }

    pub fn degree(&self) -> i32 {
        self.smoothing.count_ones() as i32
    }

    pub fn label(&self, circle: usize) -> Label {
        if (self.labels >> circle) & 1 == 1 {
            Label::Minus
        } else {
            Label::Plus
        }
    }

    pub fn with_label(self, circle: usize, l: Label) -> Gen {
        let labels = match l {
            Label::Plus => self.labels & !(1 << circle),
            Label::Minus => self.labels | (1 << circle),
        };
        Gen { labels, ..self }
    }
}

impl Ord for Gen {
    // lexicographic on the smoothing word, then on the label word
    fn cmp(&self, other: &Self) -> Ordering {
        (self.smoothing.reverse_bits(), self.labels.reverse_bits())
            .cmp(&(other.smoothing.reverse_bits(), other.labels.reverse_bits()))
    }
}

impl PartialOrd for Gen {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Finite formal combination of generators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain {
    terms: BTreeMap<Gen, Poly>,
}

impl Chain {
    pub fn zero() -> Self {
        Chain::default()
    }

    pub fn from_gen(g: Gen) -> Self {
        let mut c = Chain::zero();
        c.add_term(g, &Poly::one());
        c
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, g: &Gen) -> Poly {
        self.terms.get(g).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Gen, &Poly)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, g: Gen, p: &Poly) {
        if p.is_zero() {
            return;
        }
        let entry = self.terms.entry(g).or_default();
        *entry += p;
        if entry.is_zero() {
            self.terms.remove(&g);
        }
    }

    pub fn add_scaled(&mut self, other: &Chain, p: &Poly) {
        if p.is_zero() {
            return;
        }
        for (g, c) in &other.terms {
            self.add_term(*g, &(c * p));
        }
    }

    pub fn add_chain(&mut self, other: &Chain) {
        for (g, c) in &other.terms {
            self.add_term(*g, c);
        }
    }

    pub fn sub_chain(&mut self, other: &Chain) {
        for (g, c) in &other.terms {
            self.add_term(*g, &-c);
        }
    }

    pub fn scaled(&self, p: &Poly) -> Chain {
        let mut out = Chain::zero();
        out.add_scaled(self, p);
        out
    }

    pub fn neg(&self) -> Chain {
        self.scaled(&Poly::constant(-1))
    }

    pub fn minus(&self, other: &Chain) -> Chain {
        let mut out = self.clone();
        out.sub_chain(other);
        out
    }

    pub fn plus(&self, other: &Chain) -> Chain {
        let mut out = self.clone();
        out.add_chain(other);
        out
    }

    /// Substitute integers for `s` and `t` in every coefficient.
    pub fn specialize(&self, s0: i64, t0: i64) -> Chain {
        let mut out = Chain::zero();
        for (g, p) in &self.terms {
            out.add_term(*g, &p.specialize(s0, t0));
        }
        out
    }
}

impl FromIterator<(Gen, Poly)> for Chain {
    fn from_iter<I: IntoIterator<Item = (Gen, Poly)>>(iter: I) -> Self {
        let mut c = Chain::zero();
        for (g, p) in iter {
            c.add_term(g, &p);
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum EdgeKind {
    Merge { a: usize, b: usize, into: usize },
    Split { from: usize, a: usize, b: usize },
}

#[derive(Clone, Debug)]
struct CubeEdge {
    kind: EdgeKind,
    /// Circles untouched by the edge, `(old index, new index)`.
    passive: Vec<(usize, usize)>,
}

#[derive(Debug, thiserror::Error)]
pub enum ComplexError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("cube edge at crossing {crossing} from smoothing {smoothing:b} is neither a merge nor a split")]
    Degenerate { smoothing: u32, crossing: usize },
    #[error("state word {0:?} does not name a generator")]
    BadWord(String),
}

/// The Khovanov complex of a closed diagram.
#[derive(Clone, Debug)]
pub struct Complex {
    pub diagram: Diagram,
    pub algebra: Algebra,
    pub sign_rule: SignRule,
    res: Vec<ResolvedDiagram>,
    cube: Vec<Vec<Option<CubeEdge>>>,
}

fn cube_edge(
    d: &Diagram,
    old: &ResolvedDiagram,
    new: &ResolvedDiagram,
    s: u32,
    i: usize,
) -> Result<CubeEdge, ComplexError> {
    let ports = d.crossings[i].ports;
    let circ = |r: &ResolvedDiagram| {
        let mut v: Vec<usize> = ports
            .iter()
            .map(|&e| r.circle_of[e].expect("closed diagram"))
            .collect();
        v.sort();
        v.dedup();
        v
    };
    let before = circ(old);
    let after = circ(new);
    let kind = match (before.as_slice(), after.as_slice()) {
        ([a, b], [into]) => EdgeKind::Merge {
            a: *a,
            b: *b,
            into: *into,
        },
        ([from], [a, b]) => EdgeKind::Split {
            from: *from,
            a: *a,
            b: *b,
        },
        _ => {
            return Err(ComplexError::Degenerate {
                smoothing: s,
                crossing: i,
            })
        }
    };
    let passive = (0..old.n_circles())
        .filter(|j| !before.contains(j))
        .map(|j| (j, new.circle_of[old.circles[j][0]].expect("closed diagram")))
        .collect();
    Ok(CubeEdge { kind, passive })
}

pub fn build_complex(d: &Diagram) -> Result<Complex, ComplexError> {
    Complex::new(d, Algebra::default(), SignRule::default())
}

impl Complex {
    pub fn new(
        d: &Diagram,
        algebra: Algebra,
        sign_rule: SignRule,
    ) -> Result<Complex, ComplexError> {
        d.validate()?;
        if !d.is_closed() {
            return Err(DiagramError::NotClosed.into());
        }
        let n = d.crossings.len();
        let res: Vec<ResolvedDiagram> = (0..1u32 << n)
            .into_par_iter()
            .map(|s| resolve_bits(d, &Smoothing::from_bits(s, n).0))
            .collect();
        let cube: Result<Vec<Vec<Option<CubeEdge>>>, ComplexError> = (0..1u32 << n)
            .into_par_iter()
            .map(|s| {
                (0..n)
                    .map(|i| {
                        if s >> i & 1 == 1 {
                            Ok(None)
                        } else {
                            let t = s | 1 << i;
                            cube_edge(d, &res[s as usize], &res[t as usize], s, i).map(Some)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Complex {
            diagram: d.clone(),
            algebra,
            sign_rule,
            res,
            cube: cube?,
        })
    }

    pub fn n_crossings(&self) -> usize {
        self.diagram.crossings.len()
    }

    pub fn resolution(&self, smoothing: u32) -> &ResolvedDiagram {
        &self.res[smoothing as usize]
    }

    pub fn n_circles(&self, smoothing: u32) -> usize {
        self.res[smoothing as usize].n_circles()
    }

    /// All generators in canonical order.
    pub fn gens(&self) -> Vec<Gen> {
        let mut out: Vec<Gen> = (0..1u32 << self.n_crossings())
            .flat_map(|s| (0..1u32 << self.n_circles(s)).map(move |l| Gen::new(s, l)))
            .collect();
        out.sort();
        out
    }

    pub fn gens_in_degree(&self, h: i32) -> Vec<Gen> {
        self.gens()
            .into_iter()
            .filter(|g| g.degree() == h)
            .collect()
    }

    pub fn contains(&self, g: &Gen) -> bool {
        (g.smoothing as usize) < self.res.len() && g.labels >> self.n_circles(g.smoothing) == 0
    }

    /// Circle index of an edge in the given smoothing.
    pub fn circle_at(&self, smoothing: u32, edge: EdgeId) -> Option<usize> {
        self.res[smoothing as usize]
            .circle_of
            .get(edge)
            .copied()
            .flatten()
    }

    pub fn label_at(&self, g: &Gen, edge: EdgeId) -> Option<Label> {
        self.circle_at(g.smoothing, edge).map(|c| g.label(c))
    }

    pub fn make_gen(&self, smoothing: u32, labels: &[Label]) -> Gen {
        assert_eq!(labels.len(), self.n_circles(smoothing));
        labels
            .iter()
            .enumerate()
            .fold(Gen::new(smoothing, 0), |g, (j, &l)| g.with_label(j, l))
    }

    pub fn edge_sign(&self, smoothing: u32, i: usize) -> i64 {
        self.sign_rule.sign(smoothing, i)
    }

    /// Unsigned cube-edge map changing crossing `i` from 0 to 1.
    pub fn edge_map(&self, g: Gen, i: usize) -> Chain {
        let edge = self.cube[g.smoothing as usize][i]
            .as_ref()
            .expect("crossing is 0-smoothed");
        let t = g.smoothing | 1 << i;
        let base = edge
            .passive
            .iter()
            .fold(Gen::new(t, 0), |acc, &(o, n)| acc.with_label(n, g.label(o)));
        let mut out = Chain::zero();
        match edge.kind {
            EdgeKind::Merge { a, b, into } => {
                for (l, p) in self.algebra.merge(g.label(a), g.label(b)) {
                    out.add_term(base.with_label(into, l), &p);
                }
            }
            EdgeKind::Split { from, a, b } => {
                for ((x, y), p) in self.algebra.split(g.label(from)) {
                    out.add_term(base.with_label(a, x).with_label(b, y), &p);
                }
            }
        }
        out
    }

    pub fn d(&self, g: Gen) -> Chain {
        let mut out = Chain::zero();
        for i in 0..self.n_crossings() {
            if g.smoothing >> i & 1 == 0 {
                let sign = Poly::constant(self.edge_sign(g.smoothing, i));
                out.add_scaled(&self.edge_map(g, i), &sign);
            }
        }
        out
    }

    pub fn d_chain(&self, c: &Chain) -> Chain {
        let mut out = Chain::zero();
        for (g, p) in c.iter() {
            out.add_scaled(&self.d(*g), p);
        }
        out
    }

    pub fn state(&self, g: &Gen) -> EnhancedState {
        let n = self.n_crossings();
        EnhancedState {
            smoothing: Smoothing::from_bits(g.smoothing, n),
            labels: (0..self.n_circles(g.smoothing))
                .map(|j| g.label(j))
                .collect(),
        }
    }

    pub fn word(&self, g: &Gen) -> String {
        self.state(g).to_string()
    }

    /// Parse `smoothing:101|labels:+-`.
    pub fn parse_word(&self, w: &str) -> Result<Gen, ComplexError> {
        let bad = || ComplexError::BadWord(w.to_string());
        let (s, l) = w.split_once('|').ok_or_else(bad)?;
        let s = s.strip_prefix("smoothing:").ok_or_else(bad)?;
        let l = l.strip_prefix("labels:").ok_or_else(bad)?;
        if s.len() != self.n_crossings() {
            return Err(bad());
        }
        let mut smoothing = 0;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => smoothing |= 1 << i,
                _ => return Err(bad()),
            }
        }
        let labels: Option<Vec<Label>> = l.chars().map(Label::from_symbol).collect();
        let labels = labels.ok_or_else(bad)?;
        if labels.len() != self.n_circles(smoothing) {
            return Err(bad());
        }
        Ok(self.make_gen(smoothing, &labels))
    }

    /// Quantum degree before the writhe shift, meaningful at `s = t = 0`.
    pub fn q_raw(&self, g: &Gen) -> i32 {
        let k = self.n_circles(g.smoothing);
        (0..k)
            .map(|j| self.algebra.q_degree(g.label(j)))
            .sum::<i32>()
            + g.degree()
    }

    pub fn format_chain(&self, c: &Chain) -> String {
        if c.is_zero() {
            return "0".to_string();
        }
        let parts: Vec<String> = c
            .iter()
            .map(|(g, p)| format!("({p})*[{}]", self.word(g)))
            .collect();
        parts.join(" + ")
    }

    /// Bases per degree and sparse differentials as `(row, col, poly)`.
    pub fn export(&self) -> ComplexJson {
        let gens = self.gens();
        let mut basis: BTreeMap<i32, Vec<Gen>> = BTreeMap::new();
        for g in gens {
            basis.entry(g.degree()).or_default().push(g);
        }
        let index: BTreeMap<Gen, usize> = basis
            .values()
            .flat_map(|v| v.iter().enumerate().map(|(i, g)| (*g, i)))
            .collect();
        let mut differential = BTreeMap::new();
        for (&h, gs) in &basis {
            let mut entries = Vec::new();
            for (col, g) in gs.iter().enumerate() {
                for (tgt, p) in self.d(*g).iter() {
                    entries.push((index[tgt], col, p.clone()));
                }
            }
            entries.sort_by_key(|a| (a.0, a.1));
            differential.insert(h, entries);
        }
        ComplexJson {
            diagram: self.diagram.name.clone(),
            basis: basis
                .iter()
                .map(|(h, v)| (*h, v.iter().map(|g| self.word(g)).collect()))
                .collect(),
            differential,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexJson {
    pub diagram: String,
    pub basis: BTreeMap<i32, Vec<String>>,
    /// Matrix of `d` out of each degree: `(row in degree+1, column, entry)`.
    pub differential: BTreeMap<i32, Vec<(usize, usize, Poly)>>,
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C({}) with {} generators",
            self.diagram.name,
            self.gens().len()
        )
    }
}

/// How a subcomplex is described.
pub enum SubcomplexSpec<'a> {
    Full,
    Predicate(Box<dyn Fn(&Complex, Gen) -> bool + 'a>),
    Explicit(Vec<Chain>),
}

#[derive(Debug, thiserror::Error)]
pub enum SubcomplexError {
    #[error("basis vector {index} has no unit coefficient on a generator private to it")]
    NoUnitPivot { index: usize },
    #[error("basis vector {index} mixes homological degrees")]
    Inhomogeneous { index: usize },
    #[error("span is not closed under d: d(basis[{index}]) leaves remainder {remainder}")]
    NotClosed { index: usize, remainder: String },
}

/// A subcomplex spanned by chains, each with a private unit pivot generator.
#[derive(Clone, Debug)]
pub struct Subcomplex {
    pub name: String,
    pub basis: Vec<Chain>,
    pub degrees: Vec<i32>,
    pivots: Vec<(Gen, Poly)>,
    /// `d(basis[k]) = Σ coeff * basis[j]`.
    pub differential: Vec<Vec<(usize, Poly)>>,
}

fn unit_inverse(p: &Poly) -> Option<Poly> {
    let c = p.as_constant()?;
    if c.abs().is_one() {
        Some(Poly::from(c))
    } else {
        None
    }
}

impl Subcomplex {
    /// Coordinates of `v` in the basis, or the nonzero remainder.
    pub fn coordinates(&self, v: &Chain) -> Result<Vec<(usize, Poly)>, Chain> {
        let mut rest = v.clone();
        let mut coords = Vec::new();
        for (k, (g, inv)) in self.pivots.iter().enumerate() {
            let c = rest.coeff(g);
            if c.is_zero() {
                continue;
            }
            let coeff = &c * inv;
            rest.add_scaled(&self.basis[k], &-&coeff);
            coords.push((k, coeff));
        }
        if rest.is_zero() {
            Ok(coords)
        } else {
            Err(rest)
        }
    }

    pub fn contains(&self, v: &Chain) -> bool {
        self.coordinates(v).is_ok()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Inclusion of basis vector `k`.
    pub fn include(&self, k: usize) -> &Chain {
        &self.basis[k]
    }
}

pub fn subcomplex(
    c: &Complex,
    name: &str,
    spec: SubcomplexSpec<'_>,
) -> Result<Subcomplex, SubcomplexError> {
    let basis: Vec<Chain> = match spec {
        SubcomplexSpec::Full => c.gens().into_iter().map(Chain::from_gen).collect(),
        SubcomplexSpec::Predicate(f) => c
            .gens()
            .into_iter()
            .filter(|g| f(c, *g))
            .map(Chain::from_gen)
            .collect(),
        SubcomplexSpec::Explicit(v) => v,
    };
    let mut count: BTreeMap<Gen, usize> = BTreeMap::new();
    for b in &basis {
        for (g, _) in b.iter() {
            *count.entry(*g).or_default() += 1;
        }
    }
    let mut pivots = Vec::new();
    let mut degrees = Vec::new();
    for (k, b) in basis.iter().enumerate() {
        let mut degs = b.iter().map(|(g, _)| g.degree());
        let h = degs.next().unwrap_or(0);
        if degs.any(|x| x != h) {
            return Err(SubcomplexError::Inhomogeneous { index: k });
        }
        degrees.push(h);
        let pivot = b.iter().find_map(|(g, p)| {
            if count[g] == 1 {
                unit_inverse(p).map(|inv| (*g, inv))
            } else {
                None
            }
        });
        pivots.push(pivot.ok_or(SubcomplexError::NoUnitPivot { index: k })?);
    }
    let mut sub = Subcomplex {
        name: name.to_string(),
        basis,
        degrees,
        pivots,
        differential: Vec::new(),
    };
    let mut differential = Vec::new();
    for (k, b) in sub.basis.iter().enumerate() {
        match sub.coordinates(&c.d_chain(b)) {
            Ok(coords) => differential.push(coords),
            Err(rest) => {
                return Err(SubcomplexError::NotClosed {
                    index: k,
                    remainder: c.format_chain(&rest),
                })
            }
        }
    }
    sub.differential = differential;
    Ok(sub)
}

/// Determinant of a small square matrix over `Z[s,t]`, by unit-pivot
/// elimination followed by cofactor expansion of whatever is left.
pub fn determinant(mut m: Vec<Vec<Poly>>) -> Poly {
    let n = m.len();
    let mut sign = Poly::one();
    let mut active: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    loop {
        let found = active.iter().enumerate().find_map(|(ri, &r)| {
            cols.iter()
                .enumerate()
                .find_map(|(ci, &c)| unit_inverse(&m[r][c]).map(|inv| (ri, ci, inv)))
        });
        let Some((ri, ci, inv)) = found else { break };
        let r = active[ri];
        let c = cols[ci];
        // expanding along the pivot contributes ±entry; keep track of position parity
        let parity = (ri + ci) % 2;
        sign = &sign * &m[r][c];
        if parity == 1 {
            sign = -sign;
        }
        for &r2 in &active {
            if r2 == r || m[r2][c].is_zero() {
                continue;
            }
            let factor = &m[r2][c] * &inv;
            for &c2 in &cols {
                let sub = &factor * &m[r][c2];
                m[r2][c2] -= &sub;
            }
        }
        active.remove(ri);
        cols.remove(ci);
    }
    let rest: Vec<Vec<Poly>> = active
        .iter()
        .map(|&r| cols.iter().map(|&c| m[r][c].clone()).collect())
        .collect();
    &sign * &cofactor_det(&rest)
}

fn cofactor_det(m: &[Vec<Poly>]) -> Poly {
    match m.len() {
        0 => Poly::one(),
        1 => m[0][0].clone(),
        n => {
            let mut out = Poly::zero();
            for c in 0..n {
                if m[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, p)| p.clone())
                            .collect()
                    })
                    .collect();
                let term = &m[0][c] * &cofactor_det(&minor);
                if c % 2 == 0 {
                    out += &term;
                } else {
                    out -= &term;
                }
            }
            out
        }
    }
}

/// Whether the two bases together form a basis of the whole complex.
pub fn direct_sum_check(c: &Complex, a: &Subcomplex, b: &Subcomplex) -> bool {
    let gens = c.gens();
    let cols: Vec<&Chain> = a.basis.iter().chain(b.basis.iter()).collect();
    if cols.len() != gens.len() {
        return false;
    }
    let m: Vec<Vec<Poly>> = gens
        .iter()
        .map(|g| cols.iter().map(|v| v.coeff(g)).collect())
        .collect();
    let det = determinant(m);
    det.as_constant().is_some_and(|x| x.abs() == BigInt::one())
}

pub fn zero_subcomplex(name: &str) -> Subcomplex {
    Subcomplex {
        name: name.to_string(),
        basis: Vec::new(),
        degrees: Vec::new(),
        pivots: Vec::new(),
        differential: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{close, closures, kink, local_patterns, parse_pd, plain_arc};

    fn unknot() -> Diagram {
        close(&plain_arc(), &closures(2, 0).unwrap()[0]).unwrap()
    }

    #[test]
    fn unknot_has_two_generators_and_no_differential() {
        let c = build_complex(&unknot()).unwrap();
        let gens = c.gens();
        assert_eq!(gens.len(), 2);
        assert!(gens.iter().all(|g| c.d(*g).is_zero() && g.degree() == 0));
    }

    #[test]
    fn spec_merge_and_split_rules() {
        let a = Algebra::plus_unit();
        let (p, m) = (Label::Plus, Label::Minus);
        assert_eq!(a.merge(p, p), vec![(p, Poly::one())]);
        assert_eq!(a.merge(p, m), vec![(m, Poly::one())]);
        assert_eq!(a.merge(m, p), vec![(m, Poly::one())]);
        assert_eq!(a.merge(m, m), vec![(m, Poly::s()), (p, Poly::t())]);
        let at_zero: Vec<_> = a
            .merge(m, m)
            .into_iter()
            .filter(|(_, c)| !c.specialize(0, 0).is_zero())
            .collect();
        assert!(at_zero.is_empty());
        assert_eq!(
            a.split(p),
            vec![
                ((p, m), Poly::one()),
                ((m, p), Poly::one()),
                ((p, p), -Poly::s())
            ]
        );
        assert_eq!(a.split(m), vec![((m, m), Poly::one()), ((p, p), Poly::t())]);
    }

    fn expand(terms: Vec<(Vec<Elem>, Poly)>) -> BTreeMap<Vec<u8>, Poly> {
        let mut out: BTreeMap<Vec<u8>, Poly> = BTreeMap::new();
        for (k, p) in terms {
            let key = k.iter().map(|e| matches!(e, Elem::X) as u8).collect();
            *out.entry(key).or_default() += &p;
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    #[test]
    fn frobenius_relation_for_valid_variants() {
        for a in Algebra::all() {
            let mut ok = true;
            for x in [Elem::One, Elem::X] {
                for y in [Elem::One, Elem::X] {
                    // Δ(m(x,y)) against (m ⊗ id)(x ⊗ Δ(y))
                    let mut lhs = Vec::new();
                    for (z, p) in a.mul_elem(x, y) {
                        for ((u, v), q) in a.comul_elem(z) {
                            lhs.push((vec![u, v], &p * &q));
                        }
                    }
                    let mut rhs = Vec::new();
                    for ((u, v), p) in a.comul_elem(y) {
                        for (w, q) in a.mul_elem(x, u) {
                            rhs.push((vec![w, v], &p * &q));
                        }
                    }
                    ok &= expand(lhs) == expand(rhs);
                }
            }
            assert_eq!(ok, a.split_s, "{a:?}");
        }
    }

    #[test]
    fn d_squared_vanishes_on_patterns() {
        for d in local_patterns().values() {
            for extra in 0..=1 {
                for m in closures(d.boundary.len(), extra).unwrap() {
                    let c = build_complex(&close(d, &m).unwrap()).unwrap();
                    for g in c.gens() {
                        assert!(
                            c.d_chain(&c.d(g)).is_zero(),
                            "{} {}",
                            c.diagram.name,
                            c.word(&g)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn entries_are_single_cube_edge_terms() {
        let c = build_complex(&parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap()).unwrap();
        for g in c.gens() {
            for (_, p) in c.d(g).iter() {
                assert!(
                    p.len() == 1 && p.terms().all(|(m, k)| m.degree() <= 1 && k.abs().is_one()),
                    "{p}"
                );
            }
        }
    }

    #[test]
    fn q_grading_preserved_at_zero() {
        let c = build_complex(&parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap()).unwrap();
        for g in c.gens() {
            for (t, _) in c.d(g).specialize(0, 0).iter() {
                assert_eq!(c.q_raw(t), c.q_raw(&g));
            }
        }
    }

    #[test]
    fn words_round_trip_in_order() {
        let c = build_complex(&close(&kink(), &closures(2, 1).unwrap()[0]).unwrap()).unwrap();
        let gens = c.gens();
        let words: Vec<String> = gens.iter().map(|g| c.word(g)).collect();
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
        for g in gens {
            assert_eq!(c.parse_word(&c.word(&g)).unwrap(), g);
        }
    }

    #[test]
    fn full_and_zero_form_a_direct_sum() {
        let c = build_complex(&close(&kink(), &closures(2, 0).unwrap()[0]).unwrap()).unwrap();
        let full = subcomplex(&c, "full", SubcomplexSpec::Full).unwrap();
        assert_eq!(full.dim(), c.gens().len());
        assert!(direct_sum_check(&c, &full, &zero_subcomplex("0")));
        let top = subcomplex(
            &c,
            "top",
            SubcomplexSpec::Predicate(Box::new(|_, g| g.degree() == 1)),
        )
        .unwrap();
        assert!(!direct_sum_check(&c, &top, &top));
    }

    #[test]
    fn non_closed_span_is_rejected_with_witness() {
        let c = build_complex(&close(&kink(), &closures(2, 0).unwrap()[0]).unwrap()).unwrap();
        let bottom = subcomplex(
            &c,
            "bottom",
            SubcomplexSpec::Predicate(Box::new(|_, g| g.degree() == 0)),
        );
        assert!(matches!(bottom, Err(SubcomplexError::NotClosed { .. })));
    }

    #[test]
    fn determinant_of_small_matrices() {
        let p = |x: &str| x.parse::<Poly>().unwrap();
        let m = vec![vec![p("s"), p("1")], vec![p("t"), p("s")]];
        assert_eq!(determinant(m), p("s^2 - t"));
        let m = vec![
            vec![p("0"), p("1"), p("0")],
            vec![p("1"), p("0"), p("0")],
            vec![p("s"), p("t"), p("1")],
        ];
        assert_eq!(determinant(m), p("-1"));
    }
}
