//! Local maps between Khovanov complexes, written as rewrite tables on the
//! enhanced states of the fixed local tangles.
//!
//! A table never mentions circle indices. Circles are named by one of their
//! local edges (an anchor), so the same table acts on every closure of the
//! tangle. Circles of the output that no term assigns keep the label of the
//! input circle that contains their smallest edge.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coeffs::Poly;
use crate::complex::{Chain, Complex, Gen};
use crate::diagram::edges::*;
use crate::diagram::{Colour, EdgeId, Label, Markers};

/// Reading of `p:q` (a label built from two labels).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColonRule {
    First,
    Second,
    /// The label the anchor circle carries after the cube-edge transport.
    EdgeImage,
}

/// Reading of `r̃`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TildeRule {
    Same,
    Flip,
    Transported,
}

/// Reading of the coefficient `m(p:+)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MPlusRule {
    /// The product itself, expanded by the transport.
    Transported,
    Zero,
    One,
    S,
    T,
    PlusS,
    PlusT,
    MinusS,
    MinusT,
}

impl ColonRule {
    pub fn all() -> [ColonRule; 3] {
        [ColonRule::First, ColonRule::Second, ColonRule::EdgeImage]
    }
}

impl TildeRule {
    pub fn all() -> [TildeRule; 3] {
        [TildeRule::Same, TildeRule::Flip, TildeRule::Transported]
    }
}

impl MPlusRule {
    pub fn all() -> [MPlusRule; 9] {
        use MPlusRule::*;
        [Transported, Zero, One, S, T, PlusS, PlusT, MinusS, MinusT]
    }

    fn coefficient(self, p: Label) -> Poly {
        use MPlusRule::*;
        let when = |l: Label, q: Poly| if p == l { q } else { Poly::zero() };
        match self {
            Transported | One => Poly::one(),
            Zero => Poly::zero(),
            S => Poly::s(),
            T => Poly::t(),
            PlusS => when(Label::Plus, Poly::s()),
            PlusT => when(Label::Plus, Poly::t()),
            MinusS => when(Label::Minus, Poly::s()),
            MinusT => when(Label::Minus, Poly::t()),
        }
    }
}

/// One full reading of the under-specified notation of the tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Semantics {
    pub markers: Markers,
    pub colon: ColonRule,
    pub tilde: TildeRule,
    pub mplus: MPlusRule,
    /// Negate the second term of the first clause of the two-crossing retraction.
    pub rho2_sign: bool,
    /// Negate the second term of the first clause of the three-crossing retraction.
    pub rho3_sign: bool,
    /// Multiply the map onto the twisted one-crossing tangle by `(-1)^a`.
    pub twist: bool,
}

impl Default for Semantics {
    fn default() -> Self {
        Semantics {
            markers: Markers::default(),
            colon: ColonRule::EdgeImage,
            tilde: TildeRule::Transported,
            mplus: MPlusRule::Transported,
            rho2_sign: false,
            rho3_sign: false,
            twist: true,
        }
    }
}

/// A label on the output side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelExpr {
    Fixed(Label),
    Var(char),
    Colon(char, char),
    Tilde(char),
    MulPlus(char),
}

impl LabelExpr {
    fn uses_transport(&self, sem: &Semantics) -> bool {
        match self {
            LabelExpr::Colon(..) => sem.colon == ColonRule::EdgeImage,
            LabelExpr::Tilde(_) => sem.tilde == TildeRule::Transported,
            LabelExpr::MulPlus(_) => sem.mplus == MPlusRule::Transported,
            _ => false,
        }
    }
}

impl fmt::Display for LabelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelExpr::Fixed(l) => write!(f, "{}", l.symbol()),
            LabelExpr::Var(p) => write!(f, "{p}"),
            LabelExpr::Colon(p, q) => write!(f, "{p}:{q}"),
            LabelExpr::Tilde(r) => write!(f, "~{r}"),
            LabelExpr::MulPlus(p) => write!(f, "m({p}:+)"),
        }
    }
}

/// Optional sign factor of a term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignRef {
    Rho2,
    Rho3,
    /// `(-1)^(smoothing bit of the named source crossing)` when the twist is on.
    Twist(String),
}

/// Push a state through cube edges before reading off labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transport {
    /// Colours of the starting state; unnamed crossings keep the input's.
    pub start: Vec<(String, Colour)>,
    /// Labels of the starting state; other circles inherit from the input.
    pub labels: Vec<(EdgeId, LabelExpr)>,
    /// Crossings turned from blue to red, in order.
    pub flips: Vec<String>,
    /// Use the transport even when no descriptor asks for it.
    pub always: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Poly,
    pub sign: Option<SignRef>,
    /// Colours of the output; target crossings not listed copy the input's bit.
    pub target: Vec<(String, Colour)>,
    pub labels: Vec<(EdgeId, LabelExpr)>,
    pub transport: Option<Transport>,
    /// Variable whose `m(p:+)` reading multiplies the term.
    pub mplus: Option<char>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub when: Vec<(String, Colour)>,
    pub require: Vec<(EdgeId, Label)>,
    pub bind: Vec<(char, EdgeId)>,
    pub terms: Vec<Term>,
}

/// A map given by a table; inputs matching no clause go to zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalMap {
    pub name: String,
    pub source: String,
    pub target: String,
    pub degree: i32,
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("{map}: crossing {crossing} missing from {pattern}")]
    MissingCrossing {
        map: String,
        crossing: String,
        pattern: String,
    },
    #[error("{map}: edge {edge} is not on a circle")]
    OpenEdge { map: String, edge: EdgeId },
    #[error("{map}: two labels assigned to one circle")]
    Conflict { map: String },
    #[error("{map}: transport through {crossing} runs against the cube")]
    BadTransport { map: String, crossing: String },
    #[error("{map}: unbound variable {var}")]
    Unbound { map: String, var: char },
    #[error("{map}: {count} clauses match {gen}")]
    Overlap {
        map: String,
        count: usize,
        gen: String,
    },
    #[error("{map} expects complexes of {expected}, got {got}")]
    Mismatch {
        map: String,
        expected: String,
        got: String,
    },
}

fn pattern_of(name: &str) -> &str {
    name.split('[').next().unwrap_or(name)
}

/// Source and target complexes of one closure, plus the notation reading.
#[derive(Clone, Copy)]
pub struct MapContext<'a> {
    pub src: &'a Complex,
    pub tgt: &'a Complex,
    pub sem: &'a Semantics,
}

struct Eval<'a> {
    map: &'a LocalMap,
    ctx: MapContext<'a>,
}

impl<'a> Eval<'a> {
    fn bit_of(&self, c: &Complex, g: Gen, name: &str) -> Result<u8, MapError> {
        let i = self.crossing(c, name)?;
        Ok((g.smoothing >> i & 1) as u8)
    }

    fn crossing(&self, c: &Complex, name: &str) -> Result<usize, MapError> {
        c.diagram
            .crossing_index(name)
            .ok_or_else(|| MapError::MissingCrossing {
                map: self.map.name.clone(),
                crossing: name.to_string(),
                pattern: c.diagram.name.clone(),
            })
    }

    fn label(&self, c: &Complex, g: Gen, e: EdgeId) -> Result<Label, MapError> {
        c.label_at(&g, e).ok_or(MapError::OpenEdge {
            map: self.map.name.clone(),
            edge: e,
        })
    }

    fn matches(&self, clause: &Clause, g: Gen) -> Result<bool, MapError> {
        let m = &self.ctx.sem.markers;
        for (name, colour) in &clause.when {
            if self.bit_of(self.ctx.src, g, name)? != m.value(name, *colour) {
                return Ok(false);
            }
        }
        for &(e, l) in &clause.require {
            if self.label(self.ctx.src, g, e)? != l {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Smoothing of `c` with the given colours, other crossings copied from `g` in `from`.
    fn smoothing(
        &self,
        c: &Complex,
        colours: &[(String, Colour)],
        from: &Complex,
        g: Gen,
    ) -> Result<u32, MapError> {
        let m = &self.ctx.sem.markers;
        let mut bits = 0u32;
        for (i, x) in c.diagram.crossings.iter().enumerate() {
            let bit = match colours.iter().find(|(n, _)| *n == x.name) {
                Some((n, col)) => m.value(n, *col),
                None => self.bit_of(from, g, &x.name)?,
            };
            bits |= (bit as u32) << i;
        }
        Ok(bits)
    }

    fn eval_label(
        &self,
        e: &LabelExpr,
        anchor: EdgeId,
        vars: &BTreeMap<char, Label>,
        moved: Option<Gen>,
    ) -> Result<Label, MapError> {
        let var = |v: &char| {
            vars.get(v).copied().ok_or(MapError::Unbound {
                map: self.map.name.clone(),
                var: *v,
            })
        };
        let image = || match moved {
            Some(t) => self.label(self.ctx.src, t, anchor),
            None => Err(MapError::BadTransport {
                map: self.map.name.clone(),
                crossing: String::new(),
            }),
        };
        let sem = self.ctx.sem;
        match e {
            LabelExpr::Fixed(l) => Ok(*l),
            LabelExpr::Var(p) => var(p),
            LabelExpr::Colon(p, q) => match sem.colon {
                ColonRule::First => var(p),
                ColonRule::Second => var(q),
                ColonRule::EdgeImage => image(),
            },
            LabelExpr::Tilde(r) => match sem.tilde {
                TildeRule::Same => var(r),
                TildeRule::Flip => Ok(var(r)?.flip()),
                TildeRule::Transported => image(),
            },
            LabelExpr::MulPlus(p) => match sem.mplus {
                MPlusRule::Transported => image(),
                _ => var(p),
            },
        }
    }

    /// Build a state of `c` at `smoothing` from explicit labels and a state `base` of the source.
    fn assemble(
        &self,
        c: &Complex,
        smoothing: u32,
        labels: &[(EdgeId, LabelExpr)],
        vars: &BTreeMap<char, Label>,
        base: Gen,
        moved: Option<Gen>,
    ) -> Result<Gen, MapError> {
        let k = c.n_circles(smoothing);
        let mut assigned: Vec<Option<Label>> = vec![None; k];
        for (anchor, expr) in labels {
            let j = c.circle_at(smoothing, *anchor).ok_or(MapError::OpenEdge {
                map: self.map.name.clone(),
                edge: *anchor,
            })?;
            let l = self.eval_label(expr, *anchor, vars, moved)?;
            match assigned[j] {
                Some(old) if old != l => {
                    return Err(MapError::Conflict {
                        map: self.map.name.clone(),
                    })
                }
                _ => assigned[j] = Some(l),
            }
        }
        let mut out = Gen::new(smoothing, 0);
        for (j, a) in assigned.into_iter().enumerate() {
            let l = match a {
                Some(l) => l,
                None => self.label(self.ctx.src, base, c.resolution(smoothing).circles[j][0])?,
            };
            out = out.with_label(j, l);
        }
        Ok(out)
    }

    fn transport(
        &self,
        t: &Transport,
        g: Gen,
        vars: &BTreeMap<char, Label>,
    ) -> Result<Chain, MapError> {
        let src = self.ctx.src;
        let s = self.smoothing(src, &t.start, src, g)?;
        let start = self.assemble(src, s, &t.labels, vars, g, None)?;
        let mut chain = Chain::from_gen(start);
        for name in &t.flips {
            let i = self.crossing(src, name)?;
            let m = &self.ctx.sem.markers;
            if m.value(name, Colour::Blue) != 0 {
                return Err(MapError::BadTransport {
                    map: self.map.name.clone(),
                    crossing: name.clone(),
                });
            }
            let mut next = Chain::zero();
            for (h, p) in chain.iter() {
                if h.smoothing >> i & 1 == 1 {
                    return Err(MapError::BadTransport {
                        map: self.map.name.clone(),
                        crossing: name.clone(),
                    });
                }
                next.add_scaled(&src.edge_map(*h, i), p);
            }
            chain = next;
        }
        Ok(chain)
    }

    fn term(
        &self,
        term: &Term,
        g: Gen,
        vars: &BTreeMap<char, Label>,
        out: &mut Chain,
    ) -> Result<(), MapError> {
        let sem = self.ctx.sem;
        let mut coeff = term.coeff.clone();
        let negate = match &term.sign {
            None => false,
            Some(SignRef::Rho2) => sem.rho2_sign,
            Some(SignRef::Rho3) => sem.rho3_sign,
            Some(SignRef::Twist(name)) => sem.twist && self.bit_of(self.ctx.src, g, name)? == 1,
        };
        if negate {
            coeff = -coeff;
        }
        if let Some(p) = term.mplus {
            let l = vars.get(&p).copied().ok_or(MapError::Unbound {
                map: self.map.name.clone(),
                var: p,
            })?;
            coeff = &coeff * &sem.mplus.coefficient(l);
        }
        if coeff.is_zero() {
            return Ok(());
        }
        let tgt = self.ctx.tgt;
        let smoothing = self.smoothing(tgt, &term.target, self.ctx.src, g)?;
        let active = term
            .transport
            .as_ref()
            .filter(|t| t.always || term.labels.iter().any(|(_, e)| e.uses_transport(sem)));
        match active {
            None => out.add_term(
                self.assemble(tgt, smoothing, &term.labels, vars, g, None)?,
                &coeff,
            ),
            Some(t) => {
                for (h, p) in self.transport(t, g, vars)?.iter() {
                    let img = self.assemble(tgt, smoothing, &term.labels, vars, *h, Some(*h))?;
                    out.add_term(img, &(&coeff * p));
                }
            }
        }
        Ok(())
    }

    fn gen(&self, g: Gen) -> Result<Chain, MapError> {
        let mut hits = Vec::new();
        for clause in &self.map.clauses {
            if self.matches(clause, g)? {
                hits.push(clause);
            }
        }
        if hits.len() > 1 {
            return Err(MapError::Overlap {
                map: self.map.name.clone(),
                count: hits.len(),
                gen: self.ctx.src.word(&g),
            });
        }
        let mut out = Chain::zero();
        if let Some(clause) = hits.first() {
            let mut vars = BTreeMap::new();
            for &(v, e) in &clause.bind {
                vars.insert(v, self.label(self.ctx.src, g, e)?);
            }
            for term in &clause.terms {
                self.term(term, g, &vars, &mut out)?;
            }
        }
        Ok(out)
    }
}

impl LocalMap {
    fn check(&self, ctx: &MapContext<'_>) -> Result<(), MapError> {
        for (c, want) in [(ctx.src, &self.source), (ctx.tgt, &self.target)] {
            let got = pattern_of(&c.diagram.name);
            if got != want {
                return Err(MapError::Mismatch {
                    map: self.name.clone(),
                    expected: want.clone(),
                    got: got.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn apply_gen(&self, ctx: MapContext<'_>, g: Gen) -> Result<Chain, MapError> {
        self.check(&ctx)?;
        Eval { map: self, ctx }.gen(g)
    }

    pub fn apply(&self, ctx: MapContext<'_>, c: &Chain) -> Result<Chain, MapError> {
        self.check(&ctx)?;
        let ev = Eval { map: self, ctx };
        let mut out = Chain::zero();
        for (g, p) in c.iter() {
            out.add_scaled(&ev.gen(*g)?, p);
        }
        Ok(out)
    }

    /// Tabulate the action on every generator of the source.
    pub fn tabulate(&self, ctx: MapContext<'_>) -> Result<GeneratorMap, MapError> {
        self.check(&ctx)?;
        let ev = Eval { map: self, ctx };
        let mut action = BTreeMap::new();
        for g in ctx.src.gens() {
            action.insert(g, ev.gen(g)?);
        }
        Ok(GeneratorMap {
            name: self.name.clone(),
            source: ctx.src.diagram.name.clone(),
            target: ctx.tgt.diagram.name.clone(),
            degree: self.degree,
            action,
        })
    }

    /// Index of every coefficient in the table, as `(clause, term)`.
    pub fn coefficient_sites(&self) -> Vec<(usize, usize)> {
        self.clauses
            .iter()
            .enumerate()
            .flat_map(|(i, c)| (0..c.terms.len()).map(move |j| (i, j)))
            .collect()
    }
}

/// A map tabulated on the generators of a specific pair of complexes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorMap {
    pub name: String,
    pub source: String,
    pub target: String,
    pub degree: i32,
    pub action: BTreeMap<Gen, Chain>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComposeError {
    #[error("cannot compose {outer} after {inner}: {inner} lands in {got}, {outer} starts at {expected}")]
    Mismatch {
        outer: String,
        inner: String,
        expected: String,
        got: String,
    },
}

impl GeneratorMap {
    pub fn identity(c: &Complex) -> GeneratorMap {
        let action = c
            .gens()
            .into_iter()
            .map(|g| (g, Chain::from_gen(g)))
            .collect();
        GeneratorMap {
            name: "id".into(),
            source: c.diagram.name.clone(),
            target: c.diagram.name.clone(),
            degree: 0,
            action,
        }
    }

    pub fn image(&self, g: &Gen) -> Chain {
        self.action.get(g).cloned().unwrap_or_default()
    }

    pub fn apply(&self, c: &Chain) -> Chain {
        let mut out = Chain::zero();
        for (g, p) in c.iter() {
            if let Some(img) = self.action.get(g) {
                out.add_scaled(img, p);
            }
        }
        out
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &GeneratorMap) -> Result<GeneratorMap, ComposeError> {
        if inner.target != self.source {
            return Err(ComposeError::Mismatch {
                outer: self.name.clone(),
                inner: inner.name.clone(),
                expected: self.source.clone(),
                got: inner.target.clone(),
            });
        }
        let action = inner
            .action
            .iter()
            .map(|(g, c)| (*g, self.apply(c)))
            .collect();
        Ok(GeneratorMap {
            name: format!("{}∘{}", self.name, inner.name),
            source: inner.source.clone(),
            target: self.target.clone(),
            degree: self.degree + inner.degree,
            action,
        })
    }

    /// Coordinate lists per source degree, as state words.
    pub fn export(&self, src: &Complex, tgt: &Complex) -> MapJson {
        let mut entries: BTreeMap<i32, Vec<(String, String, Poly)>> = BTreeMap::new();
        for (g, img) in &self.action {
            let list = entries.entry(g.degree()).or_default();
            for (t, p) in img.iter() {
                list.push((tgt.word(t), src.word(g), p.clone()));
            }
        }
        MapJson {
            name: self.name.clone(),
            source: self.source.clone(),
            target: self.target.clone(),
            degree: self.degree,
            entries,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MapJson {
    pub name: String,
    pub source: String,
    pub target: String,
    pub degree: i32,
    /// `(row word, column word, entry)` per source degree.
    pub entries: BTreeMap<i32, Vec<(String, String, Poly)>>,
}

/// Colour word such as `"aR bB"`.
fn colours(w: &str) -> Vec<(String, Colour)> {
    w.split_whitespace()
        .map(|t| {
            let (name, c) = t.split_at(t.len() - 1);
            let col = match c {
                "B" => Colour::Blue,
                "R" => Colour::Red,
                _ => panic!("bad colour word {w}"),
            };
            (name.to_string(), col)
        })
        .collect()
}

fn clause(
    when: &str,
    require: &[(EdgeId, Label)],
    bind: &[(char, EdgeId)],
    terms: Vec<Term>,
) -> Clause {
    Clause {
        when: colours(when),
        require: require.to_vec(),
        bind: bind.to_vec(),
        terms,
    }
}

fn term(c: i64, target: &str, labels: Vec<(EdgeId, LabelExpr)>) -> Term {
    Term {
        coeff: Poly::constant(c),
        sign: None,
        target: colours(target),
        labels,
        transport: None,
        mplus: None,
    }
}

fn same(c: i64) -> Term {
    term(c, "", Vec::new())
}

fn moved(
    mut t: Term,
    start: &str,
    labels: Vec<(EdgeId, LabelExpr)>,
    flips: &str,
    always: bool,
) -> Term {
    t.transport = Some(Transport {
        start: colours(start),
        labels,
        flips: flips.split_whitespace().map(String::from).collect(),
        always,
    });
    t
}

fn signed(mut t: Term, s: SignRef) -> Term {
    t.sign = Some(s);
    t
}

fn map(name: &str, source: &str, target: &str, degree: i32, clauses: Vec<Clause>) -> LocalMap {
    LocalMap {
        name: name.into(),
        source: source.into(),
        target: target.into(),
        degree,
        clauses,
    }
}

use Label::{Minus as M, Plus as P};
use LabelExpr::{Colon, Fixed, MulPlus, Tilde, Var};

/// Every local map, keyed by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleBook {
    pub maps: BTreeMap<String, LocalMap>,
}

impl RuleBook {
    pub fn standard() -> RuleBook {
        let p_q = || vec![(A1, Var('p')), (A3, Var('q'))];
        // state of the three-strand region with both a and b blue, built from the p,q arcs
        let from_x = |t: Term, flips: &str| moved(t, "aB bB", p_q(), flips, true);

        let maps = vec![
            map(
                "pi3",
                "D3",
                "D2",
                0,
                vec![clause("cB", &[], &[], vec![same(1)])],
            ),
            map(
                "pi3prime",
                "D3",
                "D2",
                0,
                vec![clause("cB", &[], &[], vec![same(1)])],
            ),
            map(
                "pi2",
                "D2",
                "D1",
                0,
                vec![clause("aB", &[], &[], vec![same(1)])],
            ),
            map(
                "pi2tilde",
                "D2",
                "D1p",
                -1,
                vec![clause(
                    "bR",
                    &[],
                    &[],
                    vec![signed(same(1), SignRef::Twist("a".into()))],
                )],
            ),
            map(
                "h1",
                "R1_kink",
                "R1_kink",
                -1,
                vec![clause(
                    "aR",
                    &[(K_LOOP, P)],
                    &[('p', K_IN)],
                    vec![term(1, "aB", vec![(K_IN, Var('p'))])],
                )],
            ),
            map(
                "h1_d1",
                "D1",
                "D1",
                -1,
                vec![clause(
                    "bR",
                    &[(A2, P)],
                    &[('p', A3)],
                    vec![term(1, "bB", vec![(A3, Var('p'))])],
                )],
            ),
            map(
                "h1p",
                "D1p",
                "D1p",
                -1,
                vec![clause(
                    "aR",
                    &[],
                    &[('p', A1)],
                    vec![term(1, "aB", vec![(A1, Var('p')), (A2, Fixed(M))])],
                )],
            ),
            map(
                "h2",
                "D2",
                "D2",
                -1,
                vec![
                    clause(
                        "aR bR",
                        &[],
                        &[('p', A1), ('q', A3)],
                        vec![term(
                            -1,
                            "aB bR",
                            vec![(A2, Fixed(M)), (A1, Var('p')), (A3, Var('q'))],
                        )],
                    ),
                    clause(
                        "aB bR",
                        &[(A2, P)],
                        &[('p', A1), ('q', A3)],
                        vec![term(1, "aB bB", p_q())],
                    ),
                ],
            ),
            map(
                "h3",
                "D3",
                "D3",
                -1,
                vec![
                    clause(
                        "aR bR cB",
                        &[],
                        &[('p', A1), ('q', A3)],
                        vec![term(
                            -1,
                            "aB bR",
                            vec![(A2, Fixed(M)), (A1, Var('p')), (A3, Var('q'))],
                        )],
                    ),
                    clause(
                        "aB bR cB",
                        &[(A2, P)],
                        &[('p', A1), ('q', A3)],
                        vec![term(1, "aB bB", p_q())],
                    ),
                ],
            ),
            map(
                "rho1",
                "R1_kink",
                "R1_kink",
                0,
                vec![
                    clause("aR", &[(K_LOOP, M)], &[], vec![same(1)]),
                    clause(
                        "aR",
                        &[(K_LOOP, P)],
                        &[('p', K_IN)],
                        vec![
                            same(1),
                            moved(same(-1), "aB", vec![(K_IN, Var('p'))], "a", true),
                        ],
                    ),
                ],
            ),
            map(
                "rho1p",
                "D1p",
                "D1p",
                0,
                vec![clause(
                    "aB",
                    &[(A2, P)],
                    &[('p', A1)],
                    vec![same(1), {
                        let mut t = moved(
                            term(-1, "", vec![(A1, MulPlus('p')), (A2, Fixed(M))]),
                            "",
                            Vec::new(),
                            "a",
                            false,
                        );
                        t.mplus = Some('p');
                        t
                    }],
                )],
            ),
            map(
                "rho2",
                "D2",
                "D2",
                0,
                vec![
                    clause(
                        "aR bB",
                        &[],
                        &[('p', A1), ('q', C1)],
                        vec![
                            same(1),
                            signed(
                                moved(
                                    term(
                                        1,
                                        "aB bR",
                                        vec![
                                            (A2, Fixed(M)),
                                            (A1, Colon('p', 'q')),
                                            (A3, Colon('q', 'p')),
                                        ],
                                    ),
                                    "",
                                    Vec::new(),
                                    "b",
                                    false,
                                ),
                                SignRef::Rho2,
                            ),
                        ],
                    ),
                    clause(
                        "aB bR",
                        &[(A2, P)],
                        &[('p', A1), ('q', A3)],
                        vec![
                            from_x(term(-1, "aR bB", Vec::new()), "a"),
                            from_x(term(-1, "aB bR", vec![(A2, Fixed(M))]), "a b"),
                        ],
                    ),
                ],
            ),
            map(
                "rho3",
                "D3",
                "D3",
                0,
                vec![
                    clause(
                        "aR bB cB",
                        &[],
                        &[('q', C1), ('p', A3), ('r', B1)],
                        vec![
                            same(1),
                            signed(
                                moved(
                                    term(
                                        1,
                                        "aB bR",
                                        vec![
                                            (A2, Fixed(M)),
                                            (A1, Colon('p', 'q')),
                                            (A3, Colon('q', 'p')),
                                            (B1, Tilde('r')),
                                        ],
                                    ),
                                    "",
                                    Vec::new(),
                                    "b",
                                    false,
                                ),
                                SignRef::Rho3,
                            ),
                        ],
                    ),
                    clause("cR", &[], &[], vec![same(1)]),
                    clause(
                        "aB bR cB",
                        &[(A2, P)],
                        &[('p', A1), ('q', A3)],
                        vec![
                            from_x(term(-1, "aR bB", Vec::new()), "a"),
                            from_x(term(-1, "aB bR", vec![(A2, Fixed(M))]), "a b"),
                            from_x(term(-1, "aB bB cR", Vec::new()), "c"),
                        ],
                    ),
                    clause(
                        "aR bR cB",
                        &[],
                        &[('p', A1), ('q', A3), ('r', B1)],
                        vec![term(
                            1,
                            "aB bR cR",
                            vec![(A1, Var('p')), (A3, Var('q')), (B1, Var('r'))],
                        )],
                    ),
                ],
            ),
            map(
                "iso1",
                "R1_kink",
                "D_arc",
                0,
                vec![clause(
                    "aR",
                    &[(K_LOOP, M)],
                    &[('p', K_IN)],
                    vec![term(1, "", vec![(K_IN, Var('p'))])],
                )],
            ),
        ];
        RuleBook {
            maps: maps.into_iter().map(|m| (m.name.clone(), m)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> &LocalMap {
        &self.maps[name]
    }

    /// Every coefficient site as `(map, clause, term)`.
    pub fn coefficient_sites(&self) -> Vec<(String, usize, usize)> {
        self.maps
            .values()
            .flat_map(|m| {
                m.coefficient_sites()
                    .into_iter()
                    .map(move |(c, t)| (m.name.clone(), c, t))
            })
            .collect()
    }

    /// Copy with one coefficient shifted by `delta`.
    pub fn perturbed(&self, site: &(String, usize, usize), delta: i64) -> RuleBook {
        let mut out = self.clone();
        let t = &mut out.maps.get_mut(&site.0).expect("known map").clauses[site.1].terms[site.2];
        t.coeff = &t.coeff + &Poly::constant(delta);
        out
    }
}

impl Default for RuleBook {
    fn default() -> Self {
        RuleBook::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_complex;
    use crate::diagram::{close, closures, local_patterns, Closure};

    fn closed(name: &str, m: &Closure) -> Complex {
        build_complex(&close(&local_patterns()[name], m).unwrap()).unwrap()
    }

    fn first_closure() -> Closure {
        closures(6, 0).unwrap()[0].clone()
    }

    #[test]
    fn pi3_copies_blue_states_and_kills_red_ones() {
        let m = first_closure();
        let (d3, d2) = (closed("D3", &m), closed("D2", &m));
        let sem = Semantics::default();
        let book = RuleBook::standard();
        let ctx = MapContext {
            src: &d3,
            tgt: &d2,
            sem: &sem,
        };
        for g in d3.gens() {
            let img = book.get("pi3").apply_gen(ctx, g).unwrap();
            if g.smoothing >> 2 & 1 == 1 {
                assert!(img.is_zero());
            } else {
                assert_eq!(img.len(), 1);
                let (t, p) = img.iter().next().unwrap();
                assert!(p.is_one());
                assert_eq!(t.smoothing, g.smoothing);
                assert_eq!(d2.state(t).labels, d3.state(&g).labels);
            }
        }
    }

    #[test]
    fn pi3_is_linear() {
        let m = first_closure();
        let (d3, d2) = (closed("D3", &m), closed("D2", &m));
        let sem = Semantics::default();
        let ctx = MapContext {
            src: &d3,
            tgt: &d2,
            sem: &sem,
        };
        let pi = RuleBook::standard().get("pi3").clone();
        let gens = d3.gens();
        let mut c = Chain::from_gen(gens[0]);
        c.add_term(gens[1], &Poly::s());
        let mut want = pi.apply_gen(ctx, gens[0]).unwrap();
        want.add_scaled(&pi.apply_gen(ctx, gens[1]).unwrap(), &Poly::s());
        assert_eq!(pi.apply(ctx, &c).unwrap(), want);
        assert!(pi.apply(ctx, &Chain::zero()).unwrap().is_zero());
    }

    #[test]
    fn h1_moves_plus_loop_state_down() {
        let m = closures(2, 0).unwrap()[0].clone();
        let k = closed("R1_kink", &m);
        let sem = Semantics::default();
        let ctx = MapContext {
            src: &k,
            tgt: &k,
            sem: &sem,
        };
        let h1 = RuleBook::standard().get("h1").clone();
        for g in k.gens() {
            let img = h1.apply_gen(ctx, g).unwrap();
            let red_plus = g.smoothing == 1 && k.label_at(&g, K_LOOP) == Some(P);
            assert_eq!(img.is_zero(), !red_plus, "{}", k.word(&g));
            if red_plus {
                let (t, _) = img.iter().next().unwrap();
                assert_eq!(t.smoothing, 0);
                assert_eq!(k.label_at(t, K_IN), k.label_at(&g, K_IN));
            }
        }
    }

    #[test]
    fn clauses_never_overlap() {
        let book = RuleBook::standard();
        let sem = Semantics::default();
        for m in closures(6, 1).unwrap() {
            for map in book
                .maps
                .values()
                .filter(|m| m.source.starts_with('D') && m.source != "D_arc")
            {
                let (s, t) = (closed(&map.source, &m), closed(&map.target, &m));
                let tab = map.tabulate(MapContext {
                    src: &s,
                    tgt: &t,
                    sem: &sem,
                });
                assert!(tab.is_ok(), "{}: {:?}", map.name, tab.err());
                for (g, img) in tab.unwrap().action {
                    for (h, _) in img.iter() {
                        assert_eq!(h.degree(), g.degree() + map.degree, "{}", map.name);
                    }
                }
            }
        }
    }

    #[test]
    fn compose_with_identity_and_mismatch() {
        let m = first_closure();
        let (d3, d2, d1) = (closed("D3", &m), closed("D2", &m), closed("D1", &m));
        let sem = Semantics::default();
        let book = RuleBook::standard();
        let pi3 = book
            .get("pi3")
            .tabulate(MapContext {
                src: &d3,
                tgt: &d2,
                sem: &sem,
            })
            .unwrap();
        let pi2 = book
            .get("pi2")
            .tabulate(MapContext {
                src: &d2,
                tgt: &d1,
                sem: &sem,
            })
            .unwrap();
        assert_eq!(
            GeneratorMap::identity(&d2).compose(&pi3).unwrap().action,
            pi3.action
        );
        assert!(pi3.compose(&pi2).is_err());
        let both = pi2.compose(&pi3).unwrap();
        for g in d3.gens() {
            let direct = book
                .get("pi2")
                .apply(
                    MapContext {
                        src: &d2,
                        tgt: &d1,
                        sem: &sem,
                    },
                    &book
                        .get("pi3")
                        .apply_gen(
                            MapContext {
                                src: &d3,
                                tgt: &d2,
                                sem: &sem,
                            },
                            g,
                        )
                        .unwrap(),
                )
                .unwrap();
            assert_eq!(both.image(&g), direct);
        }
    }

    #[test]
    fn wrong_complex_is_rejected() {
        let m = first_closure();
        let d3 = closed("D3", &m);
        let sem = Semantics::default();
        let r = RuleBook::standard().get("pi2").apply_gen(
            MapContext {
                src: &d3,
                tgt: &d3,
                sem: &sem,
            },
            d3.gens()[0],
        );
        assert!(matches!(r, Err(MapError::Mismatch { .. })));
    }

    #[test]
    fn perturbation_changes_one_coefficient() {
        let book = RuleBook::standard();
        let sites = book.coefficient_sites();
        assert!(sites.len() > 20);
        let p = book.perturbed(&sites[0], 1);
        assert_ne!(p, book);
    }
}
