//! Identity engine: every equation between the local maps, checked on every
//! generator of every planar closure, plus the solver that picks a reading of
//! the under-specified table notation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::Poly;
use crate::complex::{
    direct_sum_check, subcomplex, Algebra, Chain, Complex, ComplexError, Elem, Gen, SignRule,
    Subcomplex, SubcomplexSpec,
};
use crate::diagram::edges::K_LOOP;
use crate::diagram::{
    close, closures, local_patterns_with, parse_pd, Closure, Colour, Label, Markers,
};
use crate::homology::subcomplex_homology;
use crate::moves::{
    ColonRule, LocalMap, MPlusRule, MapContext, MapError, RuleBook, Semantics, TildeRule,
};

/// Frobenius algebra and cube sign rule.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub struct Config {
    pub algebra: Algebra,
    pub sign_rule: SignRule,
}

impl Config {
    pub fn all() -> Vec<Config> {
        Algebra::all()
            .into_iter()
            .flat_map(|algebra| {
                SignRule::all()
                    .into_iter()
                    .map(move |sign_rule| Config { algebra, sign_rule })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticsCandidate {
    pub config: Config,
    pub semantics: Semantics,
}

impl fmt::Display for SemanticsCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.config.algebra;
        let s = &self.semantics;
        write!(
            f,
            "unit={} s={:+} t={:+} split_s={} signs={:?} markers={}{}{} colon={:?} tilde={:?} mplus={:?} rho2_sign={} rho3_sign={} twist={}",
            a.unit.symbol(),
            a.s_sign,
            a.t_sign,
            a.split_s,
            self.config.sign_rule,
            s.markers.a,
            s.markers.b,
            s.markers.c,
            s.colon,
            s.tilde,
            s.mplus,
            s.rho2_sign,
            s.rho3_sign,
            s.twist
        )
    }
}

/// All candidates, in lexicographic order.
pub fn candidate_space(configs: &[Config]) -> Vec<SemanticsCandidate> {
    let mut out = Vec::new();
    for &config in configs {
        for markers in Markers::all() {
            for colon in ColonRule::all() {
                for tilde in TildeRule::all() {
                    for mplus in MPlusRule::all() {
                        for bits in 0..8u8 {
                            let semantics = Semantics {
                                markers,
                                colon,
                                tilde,
                                mplus,
                                rho2_sign: bits & 4 != 0,
                                rho3_sign: bits & 2 != 0,
                                twist: bits & 1 != 0,
                            };
                            out.push(SemanticsCandidate { config, semantics });
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub generator: String,
    pub lhs: String,
    pub rhs: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub closure: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// The move a check belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    R1,
    R1p,
    R2,
    R3,
}

impl Move {
    pub fn all() -> [Move; 4] {
        [Move::R1, Move::R1p, Move::R2, Move::R3]
    }
}

/// Part of a candidate an identity can depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dep {
    Colon,
    Tilde,
    MPlus,
    Rho2,
    Rho3,
    Twist,
}

pub struct IdentitySpec {
    pub name: &'static str,
    pub moves: &'static [Move],
    deps: &'static [Dep],
}

impl IdentitySpec {
    fn project(&self, s: &Semantics) -> Semantics {
        let d = Semantics::default();
        let has = |x: Dep| self.deps.contains(&x);
        Semantics {
            markers: s.markers,
            colon: if has(Dep::Colon) { s.colon } else { d.colon },
            tilde: if has(Dep::Tilde) { s.tilde } else { d.tilde },
            mplus: if has(Dep::MPlus) { s.mplus } else { d.mplus },
            rho2_sign: if has(Dep::Rho2) {
                s.rho2_sign
            } else {
                d.rho2_sign
            },
            rho3_sign: if has(Dep::Rho3) {
                s.rho3_sign
            } else {
                d.rho3_sign
            },
            twist: if has(Dep::Twist) { s.twist } else { d.twist },
        }
    }

    fn stage(&self) -> usize {
        let signs = [Dep::Rho2, Dep::Rho3, Dep::Twist];
        if self.deps.iter().any(|d| signs.contains(d)) {
            2
        } else if self.deps.is_empty() {
            0
        } else {
            1
        }
    }
}

use Dep::*;
use Move::*;

const DESCR2: &[Dep] = &[Colon, Rho2];
const DESCR3: &[Dep] = &[Colon, Tilde, Rho3];

/// Every identity, in evaluation order.
pub const IDENTITIES: &[IdentitySpec] = &[
    IdentitySpec {
        name: "frobenius",
        moves: &[R1, R1p, R2, R3],
        deps: &[],
    },
    IdentitySpec {
        name: "d2.D3",
        moves: &[R3],
        deps: &[],
    },
    IdentitySpec {
        name: "d2.D3_r3",
        moves: &[R3],
        deps: &[],
    },
    IdentitySpec {
        name: "d2.D2",
        moves: &[R2],
        deps: &[],
    },
    IdentitySpec {
        name: "d2.D1",
        moves: &[R2],
        deps: &[],
    },
    IdentitySpec {
        name: "d2.D1p",
        moves: &[R1p],
        deps: &[],
    },
    IdentitySpec {
        name: "d2.R1_kink",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "d2.D_arc",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "d2.trefoil",
        moves: &[R1, R1p, R2, R3],
        deps: &[],
    },
    IdentitySpec {
        name: "chain.pi3",
        moves: &[R3],
        deps: &[],
    },
    IdentitySpec {
        name: "chain.pi2",
        moves: &[R2],
        deps: &[],
    },
    IdentitySpec {
        name: "surj.pi3",
        moves: &[R3],
        deps: &[],
    },
    IdentitySpec {
        name: "surj.pi2",
        moves: &[R2],
        deps: &[],
    },
    IdentitySpec {
        name: "chain.rho1",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "chain.iso1",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "homotopy.1",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "image.rho1_in_C",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "split.r1",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "split.contr_acyclic",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "iso1.bijective",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "transcript.first_begin",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "transcript.plus_case",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "transcript.last",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "theorem1.eq3",
        moves: &[R3],
        deps: &[],
    },
    IdentitySpec {
        name: "theorem1.eq4",
        moves: &[R2],
        deps: &[],
    },
    IdentitySpec {
        name: "projector.h1",
        moves: &[R1],
        deps: &[],
    },
    IdentitySpec {
        name: "projector.h1_d1",
        moves: &[R2],
        deps: &[],
    },
    IdentitySpec {
        name: "chain.rho1p",
        moves: &[R1p],
        deps: &[MPlus],
    },
    IdentitySpec {
        name: "homotopy.1p",
        moves: &[R1p],
        deps: &[MPlus],
    },
    IdentitySpec {
        name: "surj.pi2tilde",
        moves: &[R1p],
        deps: &[Twist],
    },
    IdentitySpec {
        name: "nonchain.pi2tilde",
        moves: &[R1p],
        deps: &[Twist],
    },
    IdentitySpec {
        name: "theorem3",
        moves: &[R1p],
        deps: &[Twist],
    },
    IdentitySpec {
        name: "chain.rho2",
        moves: &[R2],
        deps: DESCR2,
    },
    IdentitySpec {
        name: "homotopy.2",
        moves: &[R2],
        deps: DESCR2,
    },
    IdentitySpec {
        name: "subcomplex.C2prime",
        moves: &[R2],
        deps: DESCR2,
    },
    IdentitySpec {
        name: "image.rho2_in_C2prime",
        moves: &[R2],
        deps: DESCR2,
    },
    IdentitySpec {
        name: "chain.rho3",
        moves: &[R3],
        deps: DESCR3,
    },
    IdentitySpec {
        name: "homotopy.3",
        moves: &[R3],
        deps: DESCR3,
    },
    IdentitySpec {
        name: "subcomplex.C3prime",
        moves: &[R3],
        deps: DESCR3,
    },
    IdentitySpec {
        name: "image.rho3_in_C3prime",
        moves: &[R3],
        deps: DESCR3,
    },
    IdentitySpec {
        name: "chain.pi3prime",
        moves: &[R3],
        deps: DESCR3,
    },
    IdentitySpec {
        name: "theorem2",
        moves: &[R3],
        deps: &[Colon, Tilde, Rho2, Rho3],
    },
];

pub fn identity_spec(name: &str) -> Option<&'static IdentitySpec> {
    IDENTITIES.iter().find(|s| s.name == name)
}

/// Identities grouped by acceptance criterion.
pub fn criterion_identities(criterion: u8) -> Vec<&'static str> {
    let pick =
        |f: &dyn Fn(&str) -> bool| IDENTITIES.iter().map(|s| s.name).filter(|n| f(n)).collect();
    match criterion {
        1 => pick(&|n| n.starts_with("d2.")),
        2 => pick(&|n| {
            [
                "chain.pi3",
                "chain.pi2",
                "chain.pi3prime",
                "theorem1.eq3",
                "theorem1.eq4",
            ]
            .contains(&n)
        }),
        3 => pick(&|n| ["theorem2", "image.rho3_in_C3prime", "subcomplex.C3prime"].contains(&n)),
        4 => pick(&|n| ["theorem3", "nonchain.pi2tilde"].contains(&n)),
        5 => pick(&|n| n.starts_with("homotopy.") || n.starts_with("transcript.")),
        6 => pick(&|n| {
            [
                "split.r1",
                "split.contr_acyclic",
                "chain.iso1",
                "iso1.bijective",
            ]
            .contains(&n)
        }),
        _ => Vec::new(),
    }
}

/// Stored hand computations on the closed one-crossing kink.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcripts {
    pub closure: String,
    pub transcripts: Vec<Transcript>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub name: String,
    pub generator: String,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub expr: String,
    pub chain: Vec<StepTerm>,
}

/// A state with a coefficient, or the split of a label onto two circles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepTerm {
    State { state: String, coeff: Poly },
    Split { split: SplitTerm, coeff: Poly },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitTerm {
    pub smoothing: String,
    pub label: Label,
    pub circles: (usize, usize),
}

pub fn default_fixture_dir() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn load_transcripts(path: &std::path::Path) -> Result<Transcripts, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Complexes of every local pattern under one closure.
pub struct Slot {
    pub closure: Closure,
    pub complexes: BTreeMap<String, Complex>,
}

impl Slot {
    pub fn get(&self, pattern: &str) -> &Complex {
        &self.complexes[pattern]
    }

    pub fn id(&self) -> String {
        self.closure.to_string()
    }
}

const SIX_POINT: [&str; 5] = ["D3", "D3_r3", "D2", "D1", "D1p"];
const TWO_POINT: [&str; 2] = ["R1_kink", "D_arc"];

/// Which closures to build.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureSelection {
    pub extra: Vec<usize>,
    pub index: Option<usize>,
}

impl Default for ClosureSelection {
    fn default() -> Self {
        ClosureSelection {
            extra: vec![0, 1],
            index: None,
        }
    }
}

/// All complexes needed for one configuration and marker reading.
pub struct Workspace {
    pub config: Config,
    pub markers: Markers,
    pub six: Vec<Slot>,
    pub two: Vec<Slot>,
    pub trefoil: Complex,
}

pub const TREFOIL_PD: &str = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]";

impl Workspace {
    pub fn new(
        config: Config,
        markers: Markers,
        sel: &ClosureSelection,
    ) -> Result<Workspace, ComplexError> {
        let patterns = local_patterns_with(&markers);
        let build = |names: &[&str], size: usize| -> Result<Vec<Slot>, ComplexError> {
            let mut ms = Vec::new();
            for &e in &sel.extra {
                let list = closures(size, e)?;
                match sel.index {
                    Some(i) => ms.extend(list.into_iter().nth(i)),
                    None => ms.extend(list),
                }
            }
            ms.into_par_iter()
                .map(|m| {
                    let mut complexes = BTreeMap::new();
                    for &n in names {
                        let d = close(&patterns[n], &m)?;
                        complexes.insert(
                            n.to_string(),
                            Complex::new(&d, config.algebra, config.sign_rule)?,
                        );
                    }
                    Ok(Slot {
                        closure: m,
                        complexes,
                    })
                })
                .collect()
        };
        let trefoil = Complex::new(&parse_pd(TREFOIL_PD)?, config.algebra, config.sign_rule)?;
        Ok(Workspace {
            config,
            markers,
            six: build(&SIX_POINT, 6)?,
            two: build(&TWO_POINT, 2)?,
            trefoil,
        })
    }

    fn slots_for(&self, pattern: &str) -> &[Slot] {
        if TWO_POINT.contains(&pattern) {
            &self.two
        } else {
            &self.six
        }
    }
}

/// Evaluates identities for one candidate and rule book.
pub struct Engine<'a> {
    pub ws: &'a Workspace,
    pub sem: Semantics,
    pub book: &'a RuleBook,
    /// Compare after substituting these values for `s` and `t`.
    pub at: Option<(i64, i64)>,
    pub transcripts: Option<&'a Transcripts>,
}

fn fail(
    identity: &str,
    closure: &str,
    generator: String,
    lhs: String,
    rhs: String,
    note: Option<String>,
) -> IdentityReport {
    IdentityReport {
        identity: identity.into(),
        closure: closure.into(),
        status: Status::Fail,
        witness: Some(Witness {
            generator,
            lhs,
            rhs,
            note,
        }),
    }
}

fn pass(identity: &str, closure: &str) -> IdentityReport {
    IdentityReport {
        identity: identity.into(),
        closure: closure.into(),
        status: Status::Pass,
        witness: None,
    }
}

fn error_report(
    identity: &str,
    closure: &str,
    generator: String,
    e: impl fmt::Display,
) -> IdentityReport {
    fail(
        identity,
        closure,
        generator,
        String::new(),
        String::new(),
        Some(e.to_string()),
    )
}

type Pair = (Chain, Chain);

impl<'a> Engine<'a> {
    fn same(&self, a: &Chain, b: &Chain) -> bool {
        match self.at {
            None => a == b,
            Some((s, t)) => a.specialize(s, t) == b.specialize(s, t),
        }
    }

    fn apply(&self, name: &str, slot: &Slot, c: &Chain) -> Result<Chain, MapError> {
        let m = self.book.get(name);
        m.apply(
            MapContext {
                src: slot.get(&m.source),
                tgt: slot.get(&m.target),
                sem: &self.sem,
            },
            c,
        )
    }

    /// Compare two sides on every item; report the first mismatch.
    fn compare<I>(
        &self,
        id: &str,
        slot: &Slot,
        shown: &Complex,
        items: I,
        f: impl Fn(&Chain) -> Result<Pair, MapError>,
    ) -> IdentityReport
    where
        I: IntoIterator<Item = (String, Chain)>,
    {
        let cid = slot.id();
        for (name, c) in items {
            match f(&c) {
                Err(e) => return error_report(id, &cid, name, e),
                Ok((l, r)) => {
                    if !self.same(&l, &r) {
                        return fail(
                            id,
                            &cid,
                            name,
                            shown.format_chain(&l),
                            shown.format_chain(&r),
                            None,
                        );
                    }
                }
            }
        }
        pass(id, &cid)
    }

    fn gens_of(c: &Complex) -> Vec<(String, Chain)> {
        c.gens()
            .into_iter()
            .map(|g| (c.word(&g), Chain::from_gen(g)))
            .collect()
    }

    fn d2(&self, id: &str, c: &Complex, closure: &str) -> IdentityReport {
        for g in c.gens() {
            let dd = c.d_chain(&c.d(g));
            if !self.same(&dd, &Chain::zero()) {
                return fail(
                    id,
                    closure,
                    c.word(&g),
                    c.format_chain(&dd),
                    "0".into(),
                    None,
                );
            }
        }
        pass(id, closure)
    }

    fn chain_map(&self, id: &str, map: &str) -> Vec<IdentityReport> {
        let m = self.book.get(map);
        self.ws
            .slots_for(&m.source)
            .iter()
            .map(|slot| {
                let (src, tgt) = (slot.get(&m.source), slot.get(&m.target));
                self.compare(id, slot, tgt, Self::gens_of(src), |c| {
                    Ok((
                        tgt.d_chain(&self.apply(map, slot, c)?),
                        self.apply(map, slot, &src.d_chain(c))?,
                    ))
                })
            })
            .collect()
    }

    /// Chain-map check restricted to a spanning set.
    fn chain_map_on(&self, id: &str, map: &str, slot: &Slot, basis: &[Chain]) -> IdentityReport {
        let m = self.book.get(map);
        let (src, tgt) = (slot.get(&m.source), slot.get(&m.target));
        let items = basis.iter().map(|c| (src.format_chain(c), c.clone()));
        self.compare(id, slot, tgt, items, |c| {
            Ok((
                tgt.d_chain(&self.apply(map, slot, c)?),
                self.apply(map, slot, &src.d_chain(c))?,
            ))
        })
    }

    fn surjective(&self, id: &str, map: &str) -> Vec<IdentityReport> {
        let m = self.book.get(map);
        self.ws
            .slots_for(&m.source)
            .iter()
            .map(|slot| {
                let (src, tgt) = (slot.get(&m.source), slot.get(&m.target));
                let mut hit = BTreeSet::new();
                for g in src.gens() {
                    match self.apply(map, slot, &Chain::from_gen(g)) {
                        Err(e) => return error_report(id, &slot.id(), src.word(&g), e),
                        Ok(img) => {
                            if img.len() == 1 {
                                let (t, p) = img.iter().next().unwrap();
                                if p.as_constant()
                                    .is_some_and(|c| c == 1.into() || c == (-1).into())
                                {
                                    hit.insert(*t);
                                }
                            }
                        }
                    }
                }
                match tgt.gens().into_iter().find(|t| !hit.contains(t)) {
                    None => pass(id, &slot.id()),
                    Some(t) => fail(
                        id,
                        &slot.id(),
                        tgt.word(&t),
                        "no generator maps onto it".into(),
                        String::new(),
                        None,
                    ),
                }
            })
            .collect()
    }

    fn homotopy(&self, id: &str, h: &str, rho: &str) -> Vec<IdentityReport> {
        let pattern = self.book.get(h).source.clone();
        self.ws
            .slots_for(&pattern)
            .iter()
            .map(|slot| {
                let c = slot.get(&pattern);
                self.compare(id, slot, c, Self::gens_of(c), |g| {
                    let mut lhs = c.d_chain(&self.apply(h, slot, g)?);
                    lhs.add_chain(&self.apply(h, slot, &c.d_chain(g))?);
                    Ok((lhs, g.minus(&self.apply(rho, slot, g)?)))
                })
            })
            .collect()
    }

    /// `P = dh + hd` satisfies `P∘P = P`.
    fn projector(&self, id: &str, h: &str) -> Vec<IdentityReport> {
        let pattern = self.book.get(h).source.clone();
        self.ws
            .slots_for(&pattern)
            .iter()
            .map(|slot| {
                let c = slot.get(&pattern);
                let p = |x: &Chain| -> Result<Chain, MapError> {
                    Ok(c.d_chain(&self.apply(h, slot, x)?).plus(&self.apply(
                        h,
                        slot,
                        &c.d_chain(x),
                    )?))
                };
                self.compare(id, slot, c, Self::gens_of(c), |g| {
                    let once = p(g)?;
                    Ok((p(&once)?, once))
                })
            })
            .collect()
    }

    /// `outer ∘ inner = outer2 ∘ inner2` on every generator of the common source.
    fn commute(
        &self,
        id: &str,
        outer: &str,
        inner: &str,
        outer2: &str,
        inner2: &str,
    ) -> Vec<IdentityReport> {
        let src_pat = self.book.get(inner).source.clone();
        let tgt_pat = self.book.get(outer).target.clone();
        self.ws
            .slots_for(&src_pat)
            .iter()
            .map(|slot| {
                let src = slot.get(&src_pat);
                self.compare(id, slot, slot.get(&tgt_pat), Self::gens_of(src), |g| {
                    Ok((
                        self.apply(outer, slot, &self.apply(inner, slot, g)?)?,
                        self.apply(outer2, slot, &self.apply(inner2, slot, g)?)?,
                    ))
                })
            })
            .collect()
    }

    /// Images of the generators matching the first clause of a retraction.
    fn first_clause_images(&self, rho: &str, slot: &Slot) -> Result<Vec<Chain>, MapError> {
        let m = self.book.get(rho);
        let c = slot.get(&m.source);
        let first = LocalMap {
            clauses: vec![m.clauses[0].clone()],
            ..m.clone()
        };
        let ctx = MapContext {
            src: c,
            tgt: c,
            sem: &self.sem,
        };
        let mut out = Vec::new();
        for g in c.gens() {
            let img = first.apply_gen(ctx, g)?;
            if !img.is_zero() {
                out.push(img);
            }
        }
        Ok(out)
    }

    fn c_prime(&self, rho: &str, slot: &Slot) -> Result<Vec<Chain>, MapError> {
        let mut basis = self.first_clause_images(rho, slot)?;
        if rho == "rho3" {
            let c = slot.get("D3");
            let ci = c.diagram.crossing_index("c").expect("crossing c");
            let red = self.sem.markers.value("c", Colour::Red) as u32;
            basis.extend(
                c.gens()
                    .into_iter()
                    .filter(|g| g.smoothing >> ci & 1 == red)
                    .map(Chain::from_gen),
            );
        }
        Ok(basis)
    }

    fn kink_c(&self, slot: &Slot) -> Vec<Chain> {
        let k = slot.get("R1_kink");
        let red = self.sem.markers.value("a", Colour::Red) as u32;
        k.gens()
            .into_iter()
            .filter(|g| g.smoothing == red && k.label_at(g, K_LOOP) == Some(Label::Minus))
            .map(Chain::from_gen)
            .collect()
    }

    fn kink_contr(&self, slot: &Slot) -> Vec<Chain> {
        let k = slot.get("R1_kink");
        let blue = self.sem.markers.value("a", Colour::Blue) as u32;
        let mut out = Vec::new();
        for g in k.gens().into_iter().filter(|g| g.smoothing == blue) {
            out.push(Chain::from_gen(g));
            out.push(k.d(g));
        }
        out
    }

    fn subcomplex_reports(&self, id: &str, rho: &str, pattern: &str) -> Vec<IdentityReport> {
        self.ws
            .six
            .iter()
            .map(|slot| match self.c_prime(rho, slot) {
                Err(e) => error_report(id, &slot.id(), String::new(), e),
                Ok(basis) => {
                    match subcomplex(slot.get(pattern), id, SubcomplexSpec::Explicit(basis)) {
                        Ok(_) => pass(id, &slot.id()),
                        Err(e) => error_report(id, &slot.id(), String::new(), e),
                    }
                }
            })
            .collect()
    }

    fn image_reports(
        &self,
        id: &str,
        rho: &str,
        slots: &[Slot],
        basis: impl Fn(&Slot) -> Result<Vec<Chain>, MapError>,
    ) -> Vec<IdentityReport> {
        let pattern = self.book.get(rho).source.clone();
        slots
            .iter()
            .map(|slot| {
                let c = slot.get(&pattern);
                let sub = match basis(slot).map(|b| subcomplex(c, id, SubcomplexSpec::Explicit(b)))
                {
                    Err(e) => return error_report(id, &slot.id(), String::new(), e),
                    Ok(Err(e)) => return error_report(id, &slot.id(), String::new(), e),
                    Ok(Ok(s)) => s,
                };
                for g in c.gens() {
                    match self.apply(rho, slot, &Chain::from_gen(g)) {
                        Err(e) => return error_report(id, &slot.id(), c.word(&g), e),
                        Ok(img) => {
                            if let Err(rest) = sub.coordinates(&img) {
                                return fail(
                                    id,
                                    &slot.id(),
                                    c.word(&g),
                                    c.format_chain(&img),
                                    "outside the span".into(),
                                    Some(format!("remainder {}", c.format_chain(&rest))),
                                );
                            }
                        }
                    }
                }
                pass(id, &slot.id())
            })
            .collect()
    }

    fn nonchain(&self, id: &str) -> Vec<IdentityReport> {
        for r in self.chain_map(id, "pi2tilde") {
            if !r.passed() && r.witness.as_ref().is_some_and(|w| w.note.is_none()) {
                let w = r.witness.unwrap();
                let note = Some("d∘f differs from f∘d".to_string());
                return vec![IdentityReport {
                    identity: id.into(),
                    closure: r.closure,
                    status: Status::Pass,
                    witness: Some(Witness { note, ..w }),
                }];
            }
        }
        vec![fail(
            id,
            "all",
            String::new(),
            String::new(),
            String::new(),
            Some("commutes with d on every generator".into()),
        )]
    }

    fn split(&self, id: &str) -> Vec<IdentityReport> {
        self.ws
            .two
            .iter()
            .map(|slot| {
                let k = slot.get("R1_kink");
                let subs = (
                    subcomplex(k, "C", SubcomplexSpec::Explicit(self.kink_c(slot))),
                    subcomplex(
                        k,
                        "C_contr",
                        SubcomplexSpec::Explicit(self.kink_contr(slot)),
                    ),
                );
                let (c, contr): (Subcomplex, Subcomplex) = match subs {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => {
                        return error_report(id, &slot.id(), String::new(), e)
                    }
                };
                let ok = match id {
                    "split.r1" => direct_sum_check(k, &c, &contr),
                    _ => subcomplex_homology(&contr, 0, 0)
                        .map(|t| t.is_zero())
                        .unwrap_or(false),
                };
                if ok {
                    pass(id, &slot.id())
                } else {
                    fail(
                        id,
                        &slot.id(),
                        String::new(),
                        String::new(),
                        String::new(),
                        Some("decomposition check failed".into()),
                    )
                }
            })
            .collect()
    }

    fn iso_bijective(&self, id: &str) -> Vec<IdentityReport> {
        self.ws
            .two
            .iter()
            .map(|slot| {
                let arc = slot.get("D_arc");
                let k = slot.get("R1_kink");
                let mut hit = BTreeSet::new();
                for v in self.kink_c(slot) {
                    let img = match self.apply("iso1", slot, &v) {
                        Ok(i) => i,
                        Err(e) => return error_report(id, &slot.id(), k.format_chain(&v), e),
                    };
                    let unit = img.len() == 1
                        && img.iter().all(|(_, p)| {
                            p.as_constant()
                                .is_some_and(|c| c == 1.into() || c == (-1).into())
                        });
                    if !unit || !hit.insert(*img.iter().next().unwrap().0) {
                        return fail(
                            id,
                            &slot.id(),
                            k.format_chain(&v),
                            arc.format_chain(&img),
                            "a distinct generator".into(),
                            None,
                        );
                    }
                }
                match arc.gens().into_iter().find(|g| !hit.contains(g)) {
                    None => pass(id, &slot.id()),
                    Some(g) => fail(
                        id,
                        &slot.id(),
                        arc.word(&g),
                        "not hit".into(),
                        String::new(),
                        None,
                    ),
                }
            })
            .collect()
    }

    fn eval_expr(&self, expr: &str, slot: &Slot, g: &Chain) -> Result<Option<Chain>, MapError> {
        let k = slot.get("R1_kink");
        let h1 = |c: &Chain| self.apply("h1", slot, c);
        let rho = |c: &Chain| self.apply("rho1", slot, c);
        let compact: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
        Ok(Some(match compact.as_str() {
            "g" => g.clone(),
            "d(g)" => k.d_chain(g),
            "h1(g)" => h1(g)?,
            "rho1(g)" => rho(g)?,
            "h1(d(g))" => h1(&k.d_chain(g))?,
            "d(h1(g))" => k.d_chain(&h1(g)?),
            "h1(d(g))+d(h1(g))" | "d(h1(g))+h1(d(g))" => {
                h1(&k.d_chain(g))?.plus(&k.d_chain(&h1(g)?))
            }
            "g-rho1(g)" => g.minus(&rho(g)?),
            _ => return Ok(None),
        }))
    }

    fn step_chain(&self, k: &Complex, terms: &[StepTerm]) -> Result<Chain, String> {
        let mut out = Chain::zero();
        for t in terms {
            match t {
                StepTerm::State { state, coeff } => {
                    out.add_term(k.parse_word(state).map_err(|e| e.to_string())?, coeff)
                }
                StepTerm::Split { split, coeff } => {
                    if split.smoothing.len() != k.n_crossings() {
                        return Err(format!("bad smoothing {}", split.smoothing));
                    }
                    let smoothing = bits_of(&split.smoothing);
                    let a = &k.algebra;
                    for ((x, y), p) in a.comul_elem(a.elem(split.label)) {
                        let g = Gen::new(smoothing, 0)
                            .with_label(split.circles.0, a.label(x))
                            .with_label(split.circles.1, a.label(y));
                        let base = (0..k.n_circles(smoothing))
                            .filter(|j| *j != split.circles.0 && *j != split.circles.1)
                            .fold(g, |acc, j| acc.with_label(j, Label::Minus));
                        out.add_term(base, &(coeff * &p));
                    }
                }
            }
        }
        Ok(out)
    }

    fn transcript(&self, id: &str) -> Vec<IdentityReport> {
        let name = id.trim_start_matches("transcript.");
        let Some(tr) = self.transcripts else {
            return vec![fail(
                id,
                "-",
                String::new(),
                String::new(),
                String::new(),
                Some("transcript fixture not loaded".into()),
            )];
        };
        let Some(slot) = self.ws.two.iter().find(|s| s.id() == tr.closure) else {
            return vec![fail(
                id,
                &tr.closure,
                String::new(),
                String::new(),
                String::new(),
                Some("closure not built".into()),
            )];
        };
        let k = slot.get("R1_kink");
        let entries: Vec<&Transcript> = tr.transcripts.iter().filter(|t| t.name == name).collect();
        if entries.is_empty() {
            return vec![fail(
                id,
                &slot.id(),
                String::new(),
                String::new(),
                String::new(),
                Some("no transcript with this name".into()),
            )];
        }
        for t in entries {
            let g = match k.parse_word(&t.generator) {
                Ok(g) => Chain::from_gen(g),
                Err(e) => return vec![error_report(id, &slot.id(), t.generator.clone(), e)],
            };
            for step in &t.steps {
                let want = match self.step_chain(k, &step.chain) {
                    Ok(w) => w,
                    Err(e) => return vec![error_report(id, &slot.id(), t.generator.clone(), e)],
                };
                let got = match self.eval_expr(&step.expr, slot, &g) {
                    Ok(Some(c)) => c,
                    Ok(None) => {
                        return vec![error_report(
                            id,
                            &slot.id(),
                            t.generator.clone(),
                            format!("unknown expression {}", step.expr),
                        )]
                    }
                    Err(e) => return vec![error_report(id, &slot.id(), t.generator.clone(), e)],
                };
                if !self.same(&got, &want) {
                    return vec![fail(
                        id,
                        &slot.id(),
                        t.generator.clone(),
                        k.format_chain(&got),
                        k.format_chain(&want),
                        Some(step.expr.clone()),
                    )];
                }
            }
        }
        vec![pass(id, &slot.id())]
    }

    pub fn run(&self, name: &str) -> Vec<IdentityReport> {
        match name {
            "frobenius" => vec![frobenius_report(&self.ws.config.algebra)],
            "d2.trefoil" => vec![self.d2(name, &self.ws.trefoil, "-")],
            n if n.starts_with("d2.") => {
                let p = &n[3..];
                self.ws
                    .slots_for(p)
                    .iter()
                    .map(|s| self.d2(n, s.get(p), &s.id()))
                    .collect()
            }
            "chain.pi3" => self.chain_map(name, "pi3"),
            "chain.pi2" => self.chain_map(name, "pi2"),
            "chain.rho1" => self.chain_map(name, "rho1"),
            "chain.rho1p" => self.chain_map(name, "rho1p"),
            "chain.rho2" => self.chain_map(name, "rho2"),
            "chain.rho3" => self.chain_map(name, "rho3"),
            "chain.iso1" => self
                .ws
                .two
                .iter()
                .map(|s| self.chain_map_on(name, "iso1", s, &self.kink_c(s)))
                .collect(),
            "chain.pi3prime" => self
                .ws
                .six
                .iter()
                .map(|s| match self.c_prime("rho3", s) {
                    Ok(b) => self.chain_map_on(name, "pi3prime", s, &b),
                    Err(e) => error_report(name, &s.id(), String::new(), e),
                })
                .collect(),
            "surj.pi3" => self.surjective(name, "pi3"),
            "surj.pi2" => self.surjective(name, "pi2"),
            "surj.pi2tilde" => self.surjective(name, "pi2tilde"),
            "homotopy.1" => self.homotopy(name, "h1", "rho1"),
            "homotopy.1p" => self.homotopy(name, "h1p", "rho1p"),
            "homotopy.2" => self.homotopy(name, "h2", "rho2"),
            "homotopy.3" => self.homotopy(name, "h3", "rho3"),
            "subcomplex.C3prime" => self.subcomplex_reports(name, "rho3", "D3"),
            "subcomplex.C2prime" => self.subcomplex_reports(name, "rho2", "D2"),
            "image.rho3_in_C3prime" => {
                self.image_reports(name, "rho3", &self.ws.six, |s| self.c_prime("rho3", s))
            }
            "image.rho2_in_C2prime" => {
                self.image_reports(name, "rho2", &self.ws.six, |s| self.c_prime("rho2", s))
            }
            "image.rho1_in_C" => {
                self.image_reports(name, "rho1", &self.ws.two, |s| Ok(self.kink_c(s)))
            }
            "projector.h1" => self.projector(name, "h1"),
            "projector.h1_d1" => self.projector(name, "h1_d1"),
            "theorem1.eq3" => self.commute(name, "h2", "pi3", "pi3", "h3"),
            "theorem1.eq4" => self.commute(name, "h1_d1", "pi2", "pi2", "h2"),
            "theorem2" => self.commute(name, "rho2", "pi3", "pi3prime", "rho3"),
            "theorem3" => self.commute(name, "h1p", "pi2tilde", "pi2tilde", "h2"),
            "nonchain.pi2tilde" => self.nonchain(name),
            "split.r1" | "split.contr_acyclic" => self.split(name),
            "iso1.bijective" => self.iso_bijective(name),
            n if n.starts_with("transcript.") => self.transcript(n),
            _ => vec![fail(
                name,
                "-",
                String::new(),
                String::new(),
                String::new(),
                Some("unknown identity".into()),
            )],
        }
    }

    /// Run every identity tagged with one of `moves`, in table order.
    pub fn run_moves(&self, moves: &[Move]) -> Vec<IdentityReport> {
        let names: Vec<&str> = IDENTITIES
            .iter()
            .filter(|s| s.moves.iter().any(|m| moves.contains(m)))
            .map(|s| s.name)
            .collect();
        names
            .par_iter()
            .map(|n| self.run(n))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }
}

fn bits_of(word: &str) -> u32 {
    word.chars()
        .enumerate()
        .fold(0, |acc, (i, c)| if c == '1' { acc | 1 << i } else { acc })
}

fn frobenius_report(a: &Algebra) -> IdentityReport {
    let basis = [Elem::One, Elem::X];
    let collect = |terms: Vec<((Elem, Elem), Poly)>| {
        let mut m: BTreeMap<(u8, u8), Poly> = BTreeMap::new();
        for ((x, y), p) in terms {
            *m.entry((x as u8, y as u8)).or_default() += &p;
        }
        m.retain(|_, p| !p.is_zero());
        m
    };
    for x in basis {
        for y in basis {
            let lhs = collect(
                a.mul_elem(x, y)
                    .into_iter()
                    .flat_map(|(z, p)| {
                        a.comul_elem(z)
                            .into_iter()
                            .map(move |(uv, q)| (uv, &p * &q))
                    })
                    .collect(),
            );
            let rhs = collect(
                a.comul_elem(y)
                    .into_iter()
                    .flat_map(|((u, v), p)| {
                        a.mul_elem(x, u)
                            .into_iter()
                            .map(move |(w, q)| ((w, v), &p * &q))
                    })
                    .collect(),
            );
            if lhs != rhs {
                return fail(
                    "frobenius",
                    "-",
                    format!("{x:?}⊗{y:?}"),
                    format!("{lhs:?}"),
                    format!("{rhs:?}"),
                    Some("Δ∘m ≠ (m⊗id)∘(id⊗Δ)".into()),
                );
            }
        }
    }
    pass("frobenius", "-")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub failing_identities: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub identities: Vec<IdentityReport>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn new(suite: &str, identities: Vec<IdentityReport>) -> SuiteReport {
        let failed = identities.iter().filter(|r| !r.passed()).count();
        let failing: BTreeSet<String> = identities
            .iter()
            .filter(|r| !r.passed())
            .map(|r| r.identity.clone())
            .collect();
        SuiteReport {
            suite: suite.into(),
            summary: Summary {
                total: identities.len(),
                passed: identities.len() - failed,
                failed,
                failing_identities: failing.into_iter().collect(),
            },
            identities,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_table(&self) -> String {
        let w = self
            .identities
            .iter()
            .map(|r| r.identity.len())
            .max()
            .unwrap_or(8)
            .max(8);
        let cw = self
            .identities
            .iter()
            .map(|r| r.closure.len())
            .max()
            .unwrap_or(7)
            .max(7);
        let mut out = format!("{:<w$}  {:<cw$}  status\n", "identity", "closure");
        for r in &self.identities {
            let st = if r.passed() { "pass" } else { "FAIL" };
            out.push_str(&format!("{:<w$}  {:<cw$}  {st}", r.identity, r.closure));
            if let (Status::Fail, Some(wi)) = (r.status, &r.witness) {
                out.push_str(&format!("  at {}", wi.generator));
                if let Some(n) = &wi.note {
                    out.push_str(&format!(" ({n})"));
                }
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "{} of {} checks passed\n",
            self.summary.passed, self.summary.total
        ));
        out
    }
}

/// Evaluate one identity for one candidate over the default closures.
pub fn check_candidate(
    cand: &SemanticsCandidate,
    book: &RuleBook,
    transcripts: Option<&Transcripts>,
    at: Option<(i64, i64)>,
) -> Result<SuiteReport, ComplexError> {
    let ws = Workspace::new(
        cand.config,
        cand.semantics.markers,
        &ClosureSelection::default(),
    )?;
    let engine = Engine {
        ws: &ws,
        sem: cand.semantics,
        book,
        at,
        transcripts,
    };
    Ok(SuiteReport::new("all", engine.run_moves(&Move::all())))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    NoCandidate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub candidates_examined: usize,
    pub evaluated_at: Option<(i64, i64)>,
    /// Identities that no surviving candidate satisfies; skipped while filtering.
    pub universally_failing: Vec<String>,
    pub passing: Vec<SemanticsCandidate>,
    /// Candidates satisfying everything except the universally failing identities.
    pub nearest_misses: Vec<SemanticsCandidate>,
    pub frozen: Option<SemanticsCandidate>,
    /// Surviving candidate count after each identity.
    pub trace: Vec<(String, usize)>,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub configs: Vec<Config>,
    pub at: Option<(i64, i64)>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            configs: Config::all(),
            at: None,
        }
    }
}

/// Staged search over every candidate, memoized on the part of the candidate
/// each identity reads.
pub fn solve_label_semantics(
    book: &RuleBook,
    transcripts: Option<&Transcripts>,
    opts: &SolverOptions,
) -> Result<SolveResult, ComplexError> {
    let all = candidate_space(&opts.configs);
    let mut survivors = all.clone();
    let mut workspaces: HashMap<(Config, Markers), Arc<Workspace>> = HashMap::new();
    let mut order: Vec<&IdentitySpec> = IDENTITIES.iter().collect();
    order.sort_by_key(|s| s.stage());
    let mut universally_failing = Vec::new();
    let mut trace = Vec::new();
    for spec in order {
        let keys: BTreeSet<(Config, Semantics)> = survivors
            .iter()
            .map(|c| (c.config, spec.project(&c.semantics)))
            .collect();
        let missing: BTreeSet<(Config, Markers)> = keys
            .iter()
            .map(|(c, s)| (*c, s.markers))
            .filter(|k| !workspaces.contains_key(k))
            .collect();
        let built: Vec<((Config, Markers), Result<Workspace, ComplexError>)> = missing
            .into_par_iter()
            .map(|(c, m)| ((c, m), Workspace::new(c, m, &ClosureSelection::default())))
            .collect();
        for (k, w) in built {
            workspaces.insert(k, Arc::new(w?));
        }
        let verdicts: HashMap<(Config, Semantics), bool> = keys
            .into_par_iter()
            .map(|(c, s)| {
                let ws = &workspaces[&(c, s.markers)];
                let engine = Engine {
                    ws,
                    sem: s,
                    book,
                    at: opts.at,
                    transcripts,
                };
                ((c, s), engine.run(spec.name).iter().all(|r| r.passed()))
            })
            .collect();
        let next: Vec<SemanticsCandidate> = survivors
            .iter()
            .filter(|c| verdicts[&(c.config, spec.project(&c.semantics))])
            .copied()
            .collect();
        if next.is_empty() {
            universally_failing.push(spec.name.to_string());
            trace.push((spec.name.to_string(), survivors.len()));
        } else {
            survivors = next;
            trace.push((spec.name.to_string(), survivors.len()));
        }
    }
    let solved = universally_failing.is_empty();
    Ok(SolveResult {
        status: if solved {
            SolveStatus::Solved
        } else {
            SolveStatus::NoCandidate
        },
        candidates_examined: all.len(),
        evaluated_at: opts.at,
        universally_failing,
        passing: if solved {
            survivors.clone()
        } else {
            Vec::new()
        },
        nearest_misses: if solved {
            Vec::new()
        } else {
            survivors.clone()
        },
        frozen: survivors.first().copied(),
        trace,
    })
}

/// The stored solver outcome with the audit of the frozen candidate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticsFixture {
    pub status: SolveStatus,
    pub candidates_examined: usize,
    pub universally_failing: Vec<String>,
    pub passing_count: usize,
    pub nearest_miss_count: usize,
    pub frozen: SemanticsCandidate,
    pub alternatives: Vec<SemanticsCandidate>,
    pub trace: Vec<(String, usize)>,
    pub audit: SuiteReport,
}

impl SemanticsFixture {
    /// Freeze the first surviving candidate and audit it on every identity.
    pub fn build(
        r: &SolveResult,
        book: &RuleBook,
        transcripts: Option<&Transcripts>,
    ) -> Result<Option<SemanticsFixture>, ComplexError> {
        let Some(frozen) = r.frozen else {
            return Ok(None);
        };
        let audit = check_candidate(&frozen, book, transcripts, r.evaluated_at)?;
        let pool = if r.passing.is_empty() {
            &r.nearest_misses
        } else {
            &r.passing
        };
        Ok(Some(SemanticsFixture {
            status: r.status.clone(),
            candidates_examined: r.candidates_examined,
            universally_failing: r.universally_failing.clone(),
            passing_count: r.passing.len(),
            nearest_miss_count: r.nearest_misses.len(),
            frozen,
            alternatives: pool.clone(),
            trace: r.trace.clone(),
            audit,
        }))
    }

    pub fn load(path: &std::path::Path) -> Result<SemanticsFixture, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes") + "\n"
    }
}

/// Outcome of one single-coefficient perturbation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationOutcome {
    pub map: String,
    pub clause: usize,
    pub term: usize,
    pub delta: i64,
    /// Identities that passed before and fail after.
    pub caught_by: Vec<String>,
}

/// Perturb the chosen coefficients one at a time and record which identities notice.
pub fn mutation_run(
    cand: &SemanticsCandidate,
    book: &RuleBook,
    transcripts: Option<&Transcripts>,
    sites: &[(String, usize, usize)],
    delta: i64,
) -> Result<Vec<MutationOutcome>, ComplexError> {
    let ws = Workspace::new(
        cand.config,
        cand.semantics.markers,
        &ClosureSelection::default(),
    )?;
    let base = Engine {
        ws: &ws,
        sem: cand.semantics,
        book,
        at: None,
        transcripts,
    };
    let healthy: Vec<&str> = IDENTITIES
        .iter()
        .map(|s| s.name)
        .filter(|n| base.run(n).iter().all(|r| r.passed()))
        .collect();
    Ok(sites
        .par_iter()
        .map(|site| {
            let mutated = book.perturbed(site, delta);
            let engine = Engine {
                ws: &ws,
                sem: cand.semantics,
                book: &mutated,
                at: None,
                transcripts,
            };
            let caught_by = healthy
                .iter()
                .filter(|n| !engine.run(n).iter().all(|r| r.passed()))
                .map(|n| n.to_string())
                .collect();
            MutationOutcome {
                map: site.0.clone(),
                clause: site.1,
                term: site.2,
                delta,
                caught_by,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine_reports(name: &str) -> Vec<IdentityReport> {
        let ws = Workspace::new(
            Config::default(),
            Markers::default(),
            &ClosureSelection::default(),
        )
        .unwrap();
        let book = RuleBook::standard();
        let tr = load_transcripts(&default_fixture_dir().join("r1_transcripts.json")).ok();
        let e = Engine {
            ws: &ws,
            sem: Semantics::default(),
            book: &book,
            at: None,
            transcripts: tr.as_ref(),
        };
        e.run(name)
    }

    #[test]
    fn candidate_space_size() {
        let n = candidate_space(&[Config::default()]).len();
        assert_eq!(n, 5184);
        assert!(n < 1 << 14);
    }

    #[test]
    fn projection_ignores_unused_fields() {
        let spec = identity_spec("chain.pi3").unwrap();
        let s = Semantics {
            colon: ColonRule::First,
            rho3_sign: true,
            ..Semantics::default()
        };
        assert_eq!(spec.project(&s), Semantics::default());
    }

    #[test]
    fn pi3_is_a_chain_map_on_every_closure() {
        let r = engine_reports("chain.pi3");
        assert_eq!(r.len(), 10);
        assert!(r.iter().all(|x| x.passed()), "{r:?}");
    }

    #[test]
    fn pi2_tilde_has_a_witness() {
        let r = engine_reports("nonchain.pi2tilde");
        assert!(r[0].passed() && r[0].witness.is_some());
    }

    #[test]
    fn frobenius_rejects_s_on_merge_only() {
        let bad = Algebra {
            split_s: false,
            ..Algebra::default()
        };
        assert!(!frobenius_report(&bad).passed());
        assert!(frobenius_report(&Algebra::default()).passed());
    }

    #[test]
    fn identity_map_is_a_chain_map() {
        let ws = Workspace::new(
            Config::default(),
            Markers::default(),
            &ClosureSelection {
                extra: vec![0],
                index: Some(0),
            },
        )
        .unwrap();
        let c = ws.six[0].get("D3");
        for g in c.gens() {
            let x = Chain::from_gen(g);
            assert_eq!(c.d_chain(&x), c.d(g));
        }
    }
}
