//! Integer homology of Khovanov complexes at integer values of `s` and `t`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{Algebra, Complex, ComplexError, SignRule, Subcomplex};
use crate::diagram::{Diagram, DiagramError};

pub type IntMatrix = Vec<Vec<BigInt>>;

/// Invariant factors of a matrix: the nonzero diagonal of its Smith form,
/// each dividing the next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub factors: Vec<BigInt>,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn torsion(&self) -> Vec<BigInt> {
        self.factors
            .iter()
            .filter(|f| !f.is_one())
            .cloned()
            .collect()
    }
}

fn min_nonzero(m: &IntMatrix, from: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in m.iter().enumerate().skip(from) {
        for (j, x) in row.iter().enumerate().skip(from) {
            if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < m[bi][bj].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let mut m = m.clone();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut factors = Vec::new();
    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = min_nonzero(&m, t) else {
            break;
        };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if !m[i][t].is_zero() {
                    let q = m[i][t].div_floor(&m[t][t]);
                    for j in t..cols {
                        let sub = &q * &m[t][j];
                        m[i][j] -= sub;
                    }
                    dirty |= !m[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !m[t][j].is_zero() {
                    let q = m[t][j].div_floor(&m[t][t]);
                    for row in m.iter_mut().skip(t) {
                        let sub = &q * &row[t];
                        row[j] -= sub;
                    }
                    dirty |= !m[t][j].is_zero();
                }
            }
            if dirty {
                // a smaller remainder appeared in the pivot row or column
                let mut best = (t, t);
                for i in t..rows {
                    if !m[i][t].is_zero() && m[i][t].abs() < m[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t..cols {
                    if !m[t][j].is_zero() && m[t][j].abs() < m[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                m.swap(t, best.0);
                for row in m.iter_mut() {
                    row.swap(t, best.1);
                }
                continue;
            }
            let p = m[t][t].clone();
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !m[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => {
                    for j in t..cols {
                        let x = m[i][j].clone();
                        m[t][j] += x;
                    }
                }
                None => break,
            }
        }
        factors.push(m[t][t].abs());
    }
    SmithForm { factors }
}

/// One homology group `Z^rank ⊕ ⊕ Z/k`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl Group {
    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for k in &self.torsion {
            parts.push(format!("Z/{k}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join("+"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub h: i32,
    pub q: i32,
    pub rank: usize,
    pub torsion: Vec<u64>,
}

/// Nonzero homology groups by `(h, q)`. Without a quantum grading every
/// entry has `q = 0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TableJson", into = "TableJson")]
pub struct HomologyTable {
    pub q_graded: bool,
    pub groups: BTreeMap<(i32, i32), Group>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    q_graded: bool,
    entries: Vec<Entry>,
}

impl From<HomologyTable> for TableJson {
    fn from(t: HomologyTable) -> Self {
        let entries = t
            .groups
            .into_iter()
            .map(|((h, q), g)| Entry {
                h,
                q,
                rank: g.rank,
                torsion: g.torsion,
            })
            .collect();
        TableJson {
            q_graded: t.q_graded,
            entries,
        }
    }
}

impl From<TableJson> for HomologyTable {
    fn from(t: TableJson) -> Self {
        let groups = t
            .entries
            .into_iter()
            .map(|e| {
                (
                    (e.h, e.q),
                    Group {
                        rank: e.rank,
                        torsion: e.torsion,
                    },
                )
            })
            .collect();
        HomologyTable {
            q_graded: t.q_graded,
            groups,
        }
    }
}

impl HomologyTable {
    pub fn is_zero(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn get(&self, h: i32, q: i32) -> Group {
        self.groups.get(&(h, q)).cloned().unwrap_or_default()
    }

    pub fn total_rank(&self) -> usize {
        self.groups.values().map(|g| g.rank).sum()
    }

    /// Bidegrees where the two tables differ.
    pub fn diff(&self, other: &HomologyTable) -> Vec<String> {
        let keys: std::collections::BTreeSet<&(i32, i32)> =
            self.groups.keys().chain(other.groups.keys()).collect();
        keys.into_iter()
            .filter_map(|&(h, q)| {
                let (a, b) = (self.get(h, q), other.get(h, q));
                (a != b).then(|| format!("(h={h}, q={q}): {a} vs {b}"))
            })
            .collect()
    }

    /// Aligned grid with quantum degree down the side and homological degree across.
    pub fn to_text(&self) -> String {
        if self.groups.is_empty() {
            return "0\n".to_string();
        }
        let hs: Vec<i32> = {
            let (lo, hi) = (
                self.groups.keys().map(|k| k.0).min().unwrap(),
                self.groups.keys().map(|k| k.0).max().unwrap(),
            );
            (lo..=hi).collect()
        };
        let mut qs: Vec<i32> = self.groups.keys().map(|k| k.1).collect();
        qs.sort();
        qs.dedup();
        qs.reverse();
        let cell = |h: i32, q: i32| {
            let g = self.get(h, q);
            if g.is_zero() {
                ".".to_string()
            } else {
                g.to_string()
            }
        };
        let mut rows = vec![std::iter::once("q\\h".to_string())
            .chain(hs.iter().map(|h| h.to_string()))
            .collect::<Vec<_>>()];
        for &q in &qs {
            rows.push(
                std::iter::once(q.to_string())
                    .chain(hs.iter().map(|&h| cell(h, q)))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(1))
            .collect();
        let mut out = String::new();
        for r in rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for HomologyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HomologyError {
    #[error("d∘d does not vanish at s={s}, t={t}")]
    NotAComplex { s: i64, t: i64 },
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// A finitely generated graded complex over `Z`: cells keyed by `(h, q)` and
/// the sparse differential of each cell.
struct IntComplex {
    keys: Vec<(i32, i32)>,
    d: Vec<Vec<(usize, BigInt)>>,
}

impl IntComplex {
    fn homology(&self) -> Result<BTreeMap<(i32, i32), Group>, ()> {
        let mut by_key: BTreeMap<(i32, i32), Vec<usize>> = BTreeMap::new();
        for (i, k) in self.keys.iter().enumerate() {
            by_key.entry(*k).or_default().push(i);
        }
        let pos: Vec<usize> = {
            let mut p = vec![0; self.keys.len()];
            for cells in by_key.values() {
                for (j, &i) in cells.iter().enumerate() {
                    p[i] = j;
                }
            }
            p
        };
        for (i, row) in self.d.iter().enumerate() {
            let (h, q) = self.keys[i];
            if row.iter().any(|(t, _)| self.keys[*t] != (h + 1, q)) {
                return Err(());
            }
        }
        // matrix of d out of each bidegree, rows indexed by the target bidegree
        let keys: Vec<(i32, i32)> = by_key.keys().copied().collect();
        let forms: BTreeMap<(i32, i32), SmithForm> = keys
            .par_iter()
            .map(|&(h, q)| {
                let src = &by_key[&(h, q)];
                let n_rows = by_key.get(&(h + 1, q)).map_or(0, |v| v.len());
                let mut m = vec![vec![BigInt::zero(); src.len()]; n_rows];
                for (col, &i) in src.iter().enumerate() {
                    for (t, c) in &self.d[i] {
                        m[pos[*t]][col] += c;
                    }
                }
                ((h, q), smith_normal_form(&m))
            })
            .collect();
        let mut out = BTreeMap::new();
        for (&(h, q), cells) in &by_key {
            let out_rank = forms[&(h, q)].rank();
            let incoming = forms.get(&(h - 1, q));
            let in_rank = incoming.map_or(0, |f| f.rank());
            let g = Group {
                rank: cells.len() - out_rank - in_rank,
                torsion: incoming.map_or(Vec::new(), |f| {
                    f.torsion()
                        .iter()
                        .map(|k| u64::try_from(k).expect("torsion fits in u64"))
                        .collect()
                }),
            };
            if !g.is_zero() {
                out.insert((h, q), g);
            }
        }
        Ok(out)
    }
}

fn check_square(c: &IntComplex) -> bool {
    c.d.iter().all(|row| {
        let mut acc: BTreeMap<usize, BigInt> = BTreeMap::new();
        for (t, a) in row {
            for (u, b) in &c.d[*t] {
                *acc.entry(*u).or_default() += a * b;
            }
        }
        acc.values().all(|x| x.is_zero())
    })
}

/// Homology with gradings shifted by the writhe: `h = r - n_-`,
/// `q = Σ deg + r + n_+ - 2 n_-`. The quantum grading is only kept at `s = t = 0`.
pub fn homology(c: &Complex, s0: i64, t0: i64) -> Result<HomologyTable, HomologyError> {
    let (pos, neg) = c.diagram.writhe_counts()?;
    unshifted(c, s0, t0, pos as i32, neg as i32)
}

/// Homology in the raw cube grading.
pub fn unshifted_homology(c: &Complex, s0: i64, t0: i64) -> Result<HomologyTable, HomologyError> {
    unshifted(c, s0, t0, 0, 0)
}

fn unshifted(
    c: &Complex,
    s0: i64,
    t0: i64,
    pos: i32,
    neg: i32,
) -> Result<HomologyTable, HomologyError> {
    let graded = s0 == 0 && t0 == 0;
    let gens = c.gens();
    let index: BTreeMap<_, _> = gens.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    let keys = gens
        .iter()
        .map(|g| {
            (
                g.degree() - neg,
                if graded {
                    c.q_raw(g) + pos - 2 * neg
                } else {
                    0
                },
            )
        })
        .collect();
    let d = gens
        .par_iter()
        .map(|g| {
            c.d(*g)
                .iter()
                .map(|(t, p)| (index[t], p.eval_i64(s0, t0)))
                .filter(|(_, x)| !x.is_zero())
                .collect()
        })
        .collect();
    let ic = IntComplex { keys, d };
    if !check_square(&ic) {
        return Err(HomologyError::NotAComplex { s: s0, t: t0 });
    }
    let groups = ic
        .homology()
        .map_err(|_| HomologyError::NotAComplex { s: s0, t: t0 })?;
    Ok(HomologyTable {
        q_graded: graded,
        groups,
    })
}

/// Homology of a subcomplex in its basis, graded by homological degree only.
pub fn subcomplex_homology(
    sub: &Subcomplex,
    s0: i64,
    t0: i64,
) -> Result<HomologyTable, HomologyError> {
    let keys = sub.degrees.iter().map(|&h| (h, 0)).collect();
    let d = sub
        .differential
        .iter()
        .map(|row| {
            row.iter()
                .map(|(j, p)| (*j, p.eval_i64(s0, t0)))
                .filter(|(_, x)| !x.is_zero())
                .collect()
        })
        .collect();
    let ic = IntComplex { keys, d };
    if !check_square(&ic) {
        return Err(HomologyError::NotAComplex { s: s0, t: t0 });
    }
    let groups = ic
        .homology()
        .map_err(|_| HomologyError::NotAComplex { s: s0, t: t0 })?;
    Ok(HomologyTable {
        q_graded: false,
        groups,
    })
}

/// Khovanov homology of a closed diagram at `s = t = 0`.
pub fn khovanov_homology(d: &Diagram) -> Result<HomologyTable, HomologyError> {
    let c = Complex::new(d, Algebra::default(), SignRule::default())?;
    homology(&c, 0, 0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub equal: bool,
    pub left: HomologyTable,
    pub right: HomologyTable,
    pub diff: Vec<String>,
}

pub fn invariance_compare(a: &Diagram, b: &Diagram) -> Result<Comparison, HomologyError> {
    let left = khovanov_homology(a)?;
    let right = khovanov_homology(b)?;
    let diff = left.diff(&right);
    Ok(Comparison {
        equal: diff.is_empty(),
        left,
        right,
        diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{braid_closure, close, closures, kink, parse_pd, plain_arc};

    fn m(rows: &[&[i64]]) -> IntMatrix {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn snf_examples() {
        assert_eq!(
            smith_normal_form(&m(&[&[2, 0], &[0, 3]])).factors,
            big(&[1, 6])
        );
        assert_eq!(smith_normal_form(&m(&[&[0, 0], &[0, 0]])).rank(), 0);
        assert_eq!(
            smith_normal_form(&m(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]])).factors,
            big(&[2, 6, 12])
        );
        assert_eq!(smith_normal_form(&Vec::new()).rank(), 0);
    }

    #[test]
    fn unknot_has_two_generators() {
        let u = close(&plain_arc(), &closures(2, 0).unwrap()[0]).unwrap();
        let t = khovanov_homology(&u).unwrap();
        assert_eq!(t.groups.len(), 2);
        assert_eq!(t.get(0, 1).rank, 1);
        assert_eq!(t.get(0, -1).rank, 1);
    }

    #[test]
    fn twisted_unknot_matches_unknot() {
        let u = close(&plain_arc(), &closures(2, 0).unwrap()[0]).unwrap();
        let k = close(&kink(), &closures(2, 0).unwrap()[0]).unwrap();
        assert!(invariance_compare(&u, &k).unwrap().equal);
    }

    #[test]
    fn right_trefoil_table() {
        let t = khovanov_homology(&braid_closure(2, &[1, 1, 1]).unwrap()).unwrap();
        let want: BTreeMap<(i32, i32), Group> = [
            ((0, 1), 1, vec![]),
            ((0, 3), 1, vec![]),
            ((2, 5), 1, vec![]),
            ((3, 9), 1, vec![]),
            ((3, 7), 0, vec![2]),
        ]
        .into_iter()
        .map(|(k, r, tor)| {
            (
                k,
                Group {
                    rank: r,
                    torsion: tor,
                },
            )
        })
        .collect();
        assert_eq!(t.groups, want, "\n{t}");
    }

    #[test]
    fn trefoil_and_unknot_differ() {
        let u = close(&plain_arc(), &closures(2, 0).unwrap()[0]).unwrap();
        let t = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        let c = invariance_compare(&u, &t).unwrap();
        assert!(!c.equal && !c.diff.is_empty());
    }

    #[test]
    fn text_grid_and_json_round_trip() {
        let t = khovanov_homology(&braid_closure(2, &[1, 1, 1]).unwrap()).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("q\\h"));
        assert!(text.contains("Z/2"));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<HomologyTable>(&json).unwrap(), t);
    }
}
