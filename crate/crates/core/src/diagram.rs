//! Planar diagrams, smoothings and closures.
//!
//! A diagram is a set of crossings whose four ports reference edge ids, plus a
//! counterclockwise boundary and a list of glue pairs joining two edges end to
//! end. Every edge has exactly two ends (a crossing port, a boundary point or a
//! glue side) or none at all, in which case it is a free loop.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

pub type EdgeId = usize;

/// Which pair of opposite ports carries the over-strand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OverPair {
    /// Ports 1 and 3.
    Odd,
    /// Ports 0 and 2.
    Even,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub name: String,
    /// Edge ends in counterclockwise order.
    pub ports: [EdgeId; 4],
    pub over: OverPair,
}

impl Crossing {
    pub fn new(name: &str, ports: [EdgeId; 4], over: OverPair) -> Self {
        Crossing {
            name: name.to_string(),
            ports,
            over,
        }
    }

    /// The two port pairs joined by the given smoothing.
    ///
    /// Smoothing 0 is the A-smoothing: the over-strand, rotated
    /// counterclockwise, sweeps the regions it joins. With the over-strand on
    /// the odd ports that joins (0,1) and (2,3).
    pub fn smoothing_port_pairs(&self, bit: u8) -> [(usize, usize); 2] {
        let joins_01 = matches!((self.over, bit), (OverPair::Odd, 0) | (OverPair::Even, 1));
        if joins_01 {
            [(0, 1), (2, 3)]
        } else {
            [(1, 2), (3, 0)]
        }
    }

    pub fn smoothing_joins(&self, bit: u8) -> [(EdgeId, EdgeId); 2] {
        let [(a, b), (c, d)] = self.smoothing_port_pairs(bit);
        [
            (self.ports[a], self.ports[b]),
            (self.ports[c], self.ports[d]),
        ]
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("edge {edge} has {count} ends, expected 0 or 2")]
    EdgeValence { edge: EdgeId, count: usize },
    #[error("edge id {edge} out of range (diagram has {n_edges} edges)")]
    EdgeOutOfRange { edge: EdgeId, n_edges: usize },
    #[error("smoothing has {got} entries but the diagram has {expected} crossings")]
    PartialSmoothing { got: usize, expected: usize },
    #[error("smoothing value {value} at crossing {crossing} is not 0 or 1")]
    BadSmoothingValue { crossing: usize, value: u8 },
    #[error("boundary size {0} is odd")]
    OddBoundary(usize),
    #[error("matching is not a planar perfect matching of {size} boundary points: {reason}")]
    BadMatching { size: usize, reason: String },
    #[error("malformed PD code: {0}")]
    MalformedPd(String),
    #[error("too many crossings ({0}); at most 24 are supported")]
    TooManyCrossings(usize),
    #[error("diagram has a nonempty boundary")]
    NotClosed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagram {
    pub name: String,
    pub crossings: Vec<Crossing>,
    pub n_edges: usize,
    /// Counterclockwise boundary points, each naming the edge that ends there.
    pub boundary: Vec<EdgeId>,
    pub glue: Vec<(EdgeId, EdgeId)>,
    /// Port 0 of every crossing is the incoming under-strand (PD convention).
    #[serde(default)]
    pub oriented: bool,
}

/// One end of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Port { crossing: usize, port: usize },
    Boundary(usize),
    Glue { index: usize, side: usize },
}

impl Diagram {
    pub fn new(
        name: &str,
        crossings: Vec<Crossing>,
        n_edges: usize,
        boundary: Vec<EdgeId>,
        glue: Vec<(EdgeId, EdgeId)>,
    ) -> Result<Self, DiagramError> {
        let d = Diagram {
            name: name.to_string(),
            crossings,
            n_edges,
            boundary,
            glue,
            oriented: false,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn is_closed(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn crossing_index(&self, name: &str) -> Option<usize> {
        self.crossings.iter().position(|c| c.name == name)
    }

    /// Ends of every edge, in a fixed order.
    pub fn ends(&self) -> Vec<Vec<End>> {
        let mut ends = vec![Vec::new(); self.n_edges];
        for (ci, c) in self.crossings.iter().enumerate() {
            for (p, &e) in c.ports.iter().enumerate() {
                if e < self.n_edges {
                    ends[e].push(End::Port {
                        crossing: ci,
                        port: p,
                    });
                }
            }
        }
        for (i, &e) in self.boundary.iter().enumerate() {
            if e < self.n_edges {
                ends[e].push(End::Boundary(i));
            }
        }
        for (gi, &(a, b)) in self.glue.iter().enumerate() {
            for (side, e) in [a, b].into_iter().enumerate() {
                if e < self.n_edges {
                    ends[e].push(End::Glue { index: gi, side });
                }
            }
        }
        ends
    }

    pub fn validate(&self) -> Result<(), DiagramError> {
        if self.crossings.len() > 24 {
            return Err(DiagramError::TooManyCrossings(self.crossings.len()));
        }
        let all = self
            .crossings
            .iter()
            .flat_map(|c| c.ports.iter().copied())
            .chain(self.boundary.iter().copied())
            .chain(self.glue.iter().flat_map(|&(a, b)| [a, b]));
        for e in all {
            if e >= self.n_edges {
                return Err(DiagramError::EdgeOutOfRange {
                    edge: e,
                    n_edges: self.n_edges,
                });
            }
        }
        for (e, list) in self.ends().iter().enumerate() {
            if !list.is_empty() && list.len() != 2 {
                return Err(DiagramError::EdgeValence {
                    edge: e,
                    count: list.len(),
                });
            }
        }
        if !self.boundary.len().is_multiple_of(2) {
            return Err(DiagramError::OddBoundary(self.boundary.len()));
        }
        Ok(())
    }

    /// Boundary points whose edge runs into a crossing rather than straight
    /// to another boundary point.
    pub fn active_boundary_count(&self) -> usize {
        let all_zero = vec![0u8; self.crossings.len()];
        let res = resolve_bits(self, &all_zero);
        let mut passive = 0;
        for arc in &res.arcs {
            let crosses = arc
                .edges
                .iter()
                .any(|&e| self.crossings.iter().any(|c| c.ports.contains(&e)));
            if !crosses {
                passive += 2;
            }
        }
        self.boundary.len() - passive
    }

    /// Replace crossing `name` by the glue of one of its smoothings.
    pub fn smooth_out(&self, name: &str, bit: u8, new_name: &str) -> Diagram {
        let idx = self.crossing_index(name).expect("crossing exists");
        let joins = self.crossings[idx].smoothing_joins(bit);
        let mut d = self.clone();
        d.crossings.remove(idx);
        d.glue.extend(joins);
        d.name = new_name.to_string();
        d
    }

    /// Signs of all crossings after orienting every component.
    pub fn crossing_signs(&self) -> Result<Vec<i8>, DiagramError> {
        if !self.is_closed() {
            return Err(DiagramError::NotClosed);
        }
        let ends = self.ends();
        // entry[c][parity]: port where the strand through ports of that parity enters
        let mut entry: Vec<[Option<usize>; 2]> = vec![[None, None]; self.crossings.len()];
        let mut seen = vec![false; self.n_edges];
        for start in 0..self.n_edges {
            if seen[start] || ends[start].is_empty() {
                seen[start] = true;
                continue;
            }
            let mut walk: Vec<(usize, usize)> = Vec::new(); // (crossing, entry port)
            let mut edge = start;
            let mut came_in = 0usize;
            loop {
                seen[edge] = true;
                let out = ends[edge][1 - came_in];
                let (next, next_in) = match out {
                    End::Port { crossing, port } => {
                        walk.push((crossing, port));
                        let op = (port + 2) % 4;
                        let ne = self.crossings[crossing].ports[op];
                        let k = ends[ne]
                            .iter()
                            .position(|x| *x == End::Port { crossing, port: op })
                            .expect("port end present");
                        (ne, k)
                    }
                    End::Glue { index, side } => {
                        let (a, b) = self.glue[index];
                        let ne = if side == 0 { b } else { a };
                        let k = ends[ne]
                            .iter()
                            .position(|x| {
                                *x == End::Glue {
                                    index,
                                    side: 1 - side,
                                }
                            })
                            .expect("glue end present");
                        (ne, k)
                    }
                    End::Boundary(_) => unreachable!("closed diagram"),
                };
                edge = next;
                came_in = next_in;
                if edge == start && came_in == 0 {
                    break;
                }
            }
            let reverse = self.oriented && walk.iter().any(|&(_, p)| p == 2);
            for &(c, p) in &walk {
                let p = if reverse { (p + 2) % 4 } else { p };
                entry[c][p % 2] = Some(p);
            }
        }
        let mut signs = Vec::with_capacity(self.crossings.len());
        for (c, x) in self.crossings.iter().enumerate() {
            let (under_parity, over_parity) = match x.over {
                OverPair::Odd => (0, 1),
                OverPair::Even => (1, 0),
            };
            let u = entry[c][under_parity].expect("every strand traced");
            let o = entry[c][over_parity].expect("every strand traced");
            signs.push(if o == (u + 3) % 4 { 1 } else { -1 });
        }
        Ok(signs)
    }

    /// Count of (positive, negative) crossings.
    pub fn writhe_counts(&self) -> Result<(usize, usize), DiagramError> {
        let signs = self.crossing_signs()?;
        let pos = signs.iter().filter(|&&s| s > 0).count();
        Ok((pos, signs.len() - pos))
    }
}

/// A total smoothing: one bit per crossing, in crossing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Smoothing(pub Vec<u8>);

impl Smoothing {
    pub fn from_bits(bits: u32, n: usize) -> Self {
        Smoothing((0..n).map(|i| ((bits >> i) & 1) as u8).collect())
    }

    pub fn bits(&self) -> u32 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as u32) << i))
    }

    pub fn word(&self) -> String {
        self.0
            .iter()
            .map(|b| if *b == 0 { '0' } else { '1' })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    /// Boundary positions at the two ends.
    pub ends: (usize, usize),
    pub edges: Vec<EdgeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedDiagram {
    /// Closed components, each a sorted edge list, ordered by smallest edge.
    pub circles: Vec<Vec<EdgeId>>,
    pub arcs: Vec<Arc>,
    /// Circle index of every edge, `None` for edges on arcs.
    pub circle_of: Vec<Option<usize>>,
    pub smoothing: Smoothing,
}

impl ResolvedDiagram {
    pub fn n_circles(&self) -> usize {
        self.circles.len()
    }
}

pub fn resolve(d: &Diagram, s: &Smoothing) -> Result<ResolvedDiagram, DiagramError> {
    if s.0.len() != d.crossings.len() {
        return Err(DiagramError::PartialSmoothing {
            got: s.0.len(),
            expected: d.crossings.len(),
        });
    }
    if let Some((i, &v)) = s.0.iter().enumerate().find(|(_, &v)| v > 1) {
        return Err(DiagramError::BadSmoothingValue {
            crossing: i,
            value: v,
        });
    }
    Ok(resolve_bits(d, &s.0))
}

pub(crate) fn resolve_bits(d: &Diagram, bits: &[u8]) -> ResolvedDiagram {
    let mut uf = UnionFind::<usize>::new(d.n_edges);
    for (c, &b) in d.crossings.iter().zip(bits) {
        for (x, y) in c.smoothing_joins(b) {
            uf.union(x, y);
        }
    }
    for &(x, y) in &d.glue {
        uf.union(x, y);
    }
    let mut groups: BTreeMap<usize, Vec<EdgeId>> = BTreeMap::new();
    for e in 0..d.n_edges {
        groups.entry(uf.find(e)).or_default().push(e);
    }
    let mut boundary_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, &e) in d.boundary.iter().enumerate() {
        boundary_of.entry(uf.find(e)).or_default().push(pos);
    }
    let mut comps: Vec<Vec<EdgeId>> = groups.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    let mut circles = Vec::new();
    let mut arcs = Vec::new();
    let mut circle_of = vec![None; d.n_edges];
    for comp in comps {
        match boundary_of.get(&uf.find(comp[0])) {
            Some(pos) => {
                debug_assert_eq!(pos.len(), 2);
                arcs.push(Arc {
                    ends: (pos[0], pos[1]),
                    edges: comp,
                });
            }
            None => {
                for &e in &comp {
                    circle_of[e] = Some(circles.len());
                }
                circles.push(comp);
            }
        }
    }
    ResolvedDiagram {
        circles,
        arcs,
        circle_of,
        smoothing: Smoothing(bits.to_vec()),
    }
}

/// A planar matching of boundary points, plus free circles added outside.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Closure {
    pub pairs: Vec<(usize, usize)>,
    pub extra_circles: usize,
}

impl fmt::Display for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self.pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        write!(f, "[{}]+{}", pairs.join(","), self.extra_circles)
    }
}

fn matchings(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if points.is_empty() {
        return vec![Vec::new()];
    }
    let first = points[0];
    let mut out = Vec::new();
    for k in (1..points.len()).step_by(2) {
        let inside = &points[1..k];
        let outside = &points[k + 1..];
        for a in matchings(inside) {
            for b in matchings(outside) {
                let mut m = vec![(first, points[k])];
                m.extend(a.iter().copied());
                m.extend(b.iter().copied());
                m.sort();
                out.push(m);
            }
        }
    }
    out
}

/// All non-crossing perfect matchings of `boundary_size` points on a circle.
pub fn closures(boundary_size: usize, extra_circles: usize) -> Result<Vec<Closure>, DiagramError> {
    if !boundary_size.is_multiple_of(2) {
        return Err(DiagramError::OddBoundary(boundary_size));
    }
    let points: Vec<usize> = (0..boundary_size).collect();
    Ok(matchings(&points)
        .into_iter()
        .map(|pairs| Closure {
            pairs,
            extra_circles,
        })
        .collect())
}

fn check_matching(size: usize, pairs: &[(usize, usize)]) -> Result<(), DiagramError> {
    let bad = |reason: &str| DiagramError::BadMatching {
        size,
        reason: reason.to_string(),
    };
    let mut used = vec![false; size];
    for &(a, b) in pairs {
        if a >= size || b >= size || a == b {
            return Err(bad("point out of range"));
        }
        for p in [a, b] {
            if used[p] {
                return Err(bad("point used twice"));
            }
            used[p] = true;
        }
    }
    if used.iter().any(|u| !u) {
        return Err(bad("point left unmatched"));
    }
    let norm: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    for (i, &(a, b)) in norm.iter().enumerate() {
        for &(c, d) in &norm[i + 1..] {
            let c_in = a < c && c < b;
            let d_in = a < d && d < b;
            if c_in != d_in {
                return Err(bad("chords cross"));
            }
        }
    }
    Ok(())
}

/// Glue the boundary according to a planar matching and add free loops.
pub fn close(d: &Diagram, m: &Closure) -> Result<Diagram, DiagramError> {
    check_matching(d.boundary.len(), &m.pairs)?;
    let mut out = d.clone();
    for &(a, b) in &m.pairs {
        out.glue.push((d.boundary[a], d.boundary[b]));
    }
    out.boundary.clear();
    out.n_edges += m.extra_circles;
    out.name = format!("{}{}", d.name, m);
    out.validate()?;
    Ok(out)
}

/// Label carried by a closed circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Plus,
    Minus,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::Plus => Label::Minus,
            Label::Minus => Label::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Label::Plus => '+',
            Label::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Label> {
        match c {
            '+' => Some(Label::Plus),
            '-' => Some(Label::Minus),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EnhancedState {
    pub smoothing: Smoothing,
    pub labels: Vec<Label>,
}

impl fmt::Display for EnhancedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: String = self.labels.iter().map(|l| l.symbol()).collect();
        write!(f, "smoothing:{}|labels:{}", self.smoothing.word(), labels)
    }
}

/// Every enhanced state of a closed diagram, smoothing word first, then labels.
pub fn enumerate_enhanced_states(d: &Diagram) -> Result<Vec<EnhancedState>, DiagramError> {
    if !d.is_closed() {
        return Err(DiagramError::NotClosed);
    }
    let n = d.crossings.len();
    let mut smoothings: Vec<Smoothing> =
        (0..1u32 << n).map(|b| Smoothing::from_bits(b, n)).collect();
    smoothings.sort();
    let mut out = Vec::new();
    for s in smoothings {
        let k = resolve_bits(d, &s.0).n_circles();
        let mut labelings: Vec<Vec<Label>> = (0..1u32 << k)
            .map(|m| {
                (0..k)
                    .map(|j| {
                        if (m >> j) & 1 == 0 {
                            Label::Plus
                        } else {
                            Label::Minus
                        }
                    })
                    .collect()
            })
            .collect();
        labelings.sort();
        for labels in labelings {
            out.push(EnhancedState {
                smoothing: s.clone(),
                labels,
            });
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct PdJson {
    pd: Vec<Vec<i64>>,
    #[serde(default)]
    free_loops: usize,
}

fn diagram_from_pd(
    name: &str,
    tuples: &[Vec<i64>],
    free_loops: usize,
) -> Result<Diagram, DiagramError> {
    let mut labels: BTreeMap<i64, usize> = BTreeMap::new();
    for (i, t) in tuples.iter().enumerate() {
        if t.len() != 4 {
            return Err(DiagramError::MalformedPd(format!(
                "crossing {i} has {} entries, expected 4",
                t.len()
            )));
        }
        for &x in t {
            *labels.entry(x).or_default() += 1;
        }
    }
    for (&label, &count) in &labels {
        if count != 2 {
            return Err(DiagramError::MalformedPd(format!(
                "edge {label} is used {count} times, expected 2"
            )));
        }
    }
    let index: BTreeMap<i64, usize> = labels.keys().enumerate().map(|(i, &l)| (l, i)).collect();
    let crossings = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Crossing::new(
                &format!("x{i}"),
                [index[&t[0]], index[&t[1]], index[&t[2]], index[&t[3]]],
                OverPair::Odd,
            )
        })
        .collect();
    let mut d = Diagram::new(
        name,
        crossings,
        labels.len() + free_loops,
        Vec::new(),
        Vec::new(),
    )?;
    d.oriented = true;
    Ok(d)
}

/// Parse a PD code given as JSON `{"pd": [[..]], "free_loops": n}` or as text
/// `X[1,4,2,5] X[3,6,4,1] ...`.
pub fn parse_pd(text: &str) -> Result<Diagram, DiagramError> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let parsed: PdJson = serde_json::from_str(trimmed).map_err(|e| {
            DiagramError::MalformedPd(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        return diagram_from_pd("pd", &parsed.pd, parsed.free_loops);
    }
    let mut tuples = Vec::new();
    let mut rest = trimmed;
    while let Some(start) = rest.find(['[', '(']) {
        let head = rest[..start].trim().trim_start_matches(',').trim();
        if !head.is_empty() && head != "X" && !head.ends_with('X') {
            return Err(DiagramError::MalformedPd(format!(
                "unexpected token {head:?}"
            )));
        }
        let close_char = if rest.as_bytes()[start] == b'[' {
            ']'
        } else {
            ')'
        };
        let end = rest[start..]
            .find(close_char)
            .ok_or_else(|| DiagramError::MalformedPd("unclosed tuple".into()))?
            + start;
        let inner = &rest[start + 1..end];
        let nums: Result<Vec<i64>, _> = inner.split(',').map(|x| x.trim().parse::<i64>()).collect();
        tuples.push(nums.map_err(|_| DiagramError::MalformedPd(format!("bad tuple {inner:?}")))?);
        rest = &rest[end + 1..];
    }
    if !rest.trim().trim_matches(',').trim().is_empty() {
        return Err(DiagramError::MalformedPd(format!(
            "trailing text {:?}",
            rest.trim()
        )));
    }
    diagram_from_pd("pd", &tuples, 0)
}

/// Closure of a braid word on `strands` strands; generator `i` (1-based) is a
/// positive crossing between positions `i` and `i+1`, `-i` a negative one.
pub fn braid_closure(strands: usize, word: &[i32]) -> Result<Diagram, DiagramError> {
    let bad = |m: String| DiagramError::MalformedPd(m);
    if strands == 0 {
        return Err(bad("braid needs at least one strand".into()));
    }
    let mut next = strands;
    let mut current: Vec<EdgeId> = (0..strands).collect();
    let mut crossings = Vec::new();
    for (k, &g) in word.iter().enumerate() {
        let i = g.unsigned_abs() as usize;
        if i == 0 || i >= strands {
            return Err(bad(format!(
                "generator {g} out of range for {strands} strands"
            )));
        }
        let (l, r) = (i - 1, i);
        let (bl, br) = (current[l], current[r]);
        let (tl, tr) = (next, next + 1);
        next += 2;
        // ports listed counterclockwise from the incoming under-strand
        let ports = if g > 0 {
            [br, tr, tl, bl]
        } else {
            [bl, br, tr, tl]
        };
        crossings.push(Crossing::new(&format!("x{k}"), ports, OverPair::Odd));
        current[l] = tl;
        current[r] = tr;
    }
    let glue: Vec<(EdgeId, EdgeId)> = (0..strands).map(|k| (current[k], k)).collect();
    let mut d = Diagram::new(&format!("braid{word:?}"), crossings, next, Vec::new(), glue)?;
    d.oriented = true;
    Ok(d)
}

/// PD code of a closed diagram: glued edges share one label, labels start at 1.
pub fn to_pd(d: &Diagram) -> Result<(Vec<[usize; 4]>, usize), DiagramError> {
    if !d.is_closed() {
        return Err(DiagramError::NotClosed);
    }
    let mut uf = UnionFind::<usize>::new(d.n_edges);
    for &(a, b) in &d.glue {
        uf.union(a, b);
    }
    let mut label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut pd = Vec::new();
    for c in &d.crossings {
        let mut t = [0; 4];
        for (k, &e) in c.ports.iter().enumerate() {
            let root = uf.find(e);
            let n = label.len() + 1;
            t[k] = *label.entry(root).or_insert(n);
        }
        pd.push(t);
    }
    let mut loops = std::collections::BTreeSet::new();
    for e in 0..d.n_edges {
        let root = uf.find(e);
        if !label.contains_key(&root) {
            loops.insert(root);
        }
    }
    Ok((pd, loops.len()))
}

/// Which smoothing value the blue marker denotes at each of the crossings
/// a, b, c of the local patterns.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub struct Markers {
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

/// Marker colour drawn at a crossing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    Blue,
    Red,
}

impl Markers {
    pub fn all() -> Vec<Markers> {
        (0..8u8)
            .map(|m| Markers {
                a: m >> 2 & 1,
                b: m >> 1 & 1,
                c: m & 1,
            })
            .collect()
    }

    pub fn blue(&self, crossing: &str) -> u8 {
        match crossing {
            "a" => self.a,
            "b" => self.b,
            "c" => self.c,
            _ => 0,
        }
    }

    pub fn value(&self, crossing: &str, colour: Colour) -> u8 {
        match colour {
            Colour::Blue => self.blue(crossing),
            Colour::Red => 1 - self.blue(crossing),
        }
    }
}

// Edge ids shared by the three-crossing pattern and everything derived from it.
pub mod edges {
    use super::EdgeId;
    pub const A1: EdgeId = 0;
    pub const A2: EdgeId = 1;
    pub const A3: EdgeId = 2;
    pub const B1: EdgeId = 3;
    pub const B2: EdgeId = 4;
    pub const B3: EdgeId = 5;
    pub const C1: EdgeId = 6;
    pub const C2: EdgeId = 7;
    pub const C3: EdgeId = 8;
    /// One-crossing kink: the two boundary edges and the loop.
    pub const K_IN: EdgeId = 0;
    pub const K_LOOP: EdgeId = 1;
    pub const K_OUT: EdgeId = 2;
}

/// Counterclockwise boundary A0, C0, B1, A1, C1, B0 of the three-strand patterns.
const TRIANGLE_BOUNDARY: [EdgeId; 6] = [
    edges::A1,
    edges::C1,
    edges::B3,
    edges::A3,
    edges::C3,
    edges::B1,
];

/// Three strands A, B, C, with B over both and C over A; the small triangle
/// is bounded by A2, B2, C2.
pub fn triangle() -> Diagram {
    use edges::*;
    let crossings = vec![
        Crossing::new("a", [A2, C2, A1, C1], OverPair::Odd),
        Crossing::new("b", [A3, B2, A2, B3], OverPair::Odd),
        Crossing::new("c", [C3, B1, C2, B2], OverPair::Odd),
    ];
    Diagram::new("D3", crossings, 9, TRIANGLE_BOUNDARY.to_vec(), Vec::new()).expect("valid pattern")
}

/// The same strands after the third move: the triangle sits on the other side.
pub fn triangle_moved() -> Diagram {
    use edges::*;
    let crossings = vec![
        Crossing::new("a", [A3, C3, A2, C2], OverPair::Odd),
        Crossing::new("b", [A2, B1, A1, B2], OverPair::Odd),
        Crossing::new("c", [C2, B2, C1, B3], OverPair::Odd),
    ];
    Diagram::new(
        "D3_r3",
        crossings,
        9,
        TRIANGLE_BOUNDARY.to_vec(),
        Vec::new(),
    )
    .expect("valid pattern")
}

pub fn kink() -> Diagram {
    use edges::*;
    let crossings = vec![Crossing::new(
        "a",
        [K_LOOP, K_IN, K_OUT, K_LOOP],
        OverPair::Odd,
    )];
    Diagram::new("R1_kink", crossings, 3, vec![K_IN, K_OUT], Vec::new()).expect("valid pattern")
}

pub fn plain_arc() -> Diagram {
    use edges::*;
    Diagram::new(
        "D_arc",
        Vec::new(),
        3,
        vec![K_IN, K_OUT],
        vec![(K_IN, K_LOOP), (K_LOOP, K_OUT)],
    )
    .expect("valid pattern")
}

/// Every fixed local tangle, with the derived ones built from the marker
/// reading: D2 smooths c blue, D1 smooths a blue, D1p smooths b red.
pub fn local_patterns_with(m: &Markers) -> BTreeMap<String, Diagram> {
    let d3 = triangle();
    let d2 = d3.smooth_out("c", m.value("c", Colour::Blue), "D2");
    let d1 = d2.smooth_out("a", m.value("a", Colour::Blue), "D1");
    let d1p = d2.smooth_out("b", m.value("b", Colour::Red), "D1p");
    let mut out = BTreeMap::new();
    for d in [d3, triangle_moved(), d2, d1, d1p, kink(), plain_arc()] {
        out.insert(d.name.clone(), d);
    }
    out
}

pub fn local_patterns() -> BTreeMap<String, Diagram> {
    local_patterns_with(&Markers::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_counts(d: &Diagram) -> Vec<usize> {
        let n = d.crossings.len();
        (0..1u32 << n)
            .map(|b| resolve_bits(d, &Smoothing::from_bits(b, n).0).n_circles())
            .collect()
    }

    #[test]
    fn pattern_shapes() {
        let p = local_patterns();
        let names: Vec<&str> = p["D3"].crossings.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(p["D_arc"].crossings.len(), 0);
        assert_eq!(p["D2"].crossings.len(), 2);
        assert_eq!(p["D2"].active_boundary_count(), 4);
        assert_eq!(p["D2"].boundary.len(), 6);
        assert_eq!(p["D1"].crossings[0].name, "b");
        assert_eq!(p["D1p"].crossings[0].name, "a");
    }

    #[test]
    fn arc_resolves_to_one_arc() {
        let r = resolve(&plain_arc(), &Smoothing(vec![])).unwrap();
        assert_eq!((r.circles.len(), r.arcs.len()), (0, 1));
    }

    #[test]
    fn kink_has_small_circle_only_on_one_side() {
        let k = kink();
        let r0 = resolve(&k, &Smoothing(vec![0])).unwrap();
        let r1 = resolve(&k, &Smoothing(vec![1])).unwrap();
        assert_eq!((r0.circles.len(), r0.arcs.len()), (0, 1));
        assert_eq!((r1.circles.len(), r1.arcs.len()), (1, 1));
        assert_eq!(r1.circles[0], vec![edges::K_LOOP]);
    }

    #[test]
    fn triangle_small_circle_appears_for_b_alone() {
        use edges::*;
        let d = triangle();
        let r = resolve(&d, &Smoothing(vec![0, 1, 0])).unwrap();
        assert_eq!(r.circles, vec![vec![A2, B2, C2]]);
        let all0 = resolve(&d, &Smoothing(vec![0, 0, 0])).unwrap();
        let ends: Vec<(usize, usize)> = all0.arcs.iter().map(|a| a.ends).collect();
        // A0-C0, A1-B1, C1-B0 as boundary positions
        assert_eq!(ends, vec![(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn partial_smoothing_rejected() {
        assert!(matches!(
            resolve(&triangle(), &Smoothing(vec![0, 1])),
            Err(DiagramError::PartialSmoothing { .. })
        ));
    }

    #[test]
    fn catalan_counts() {
        let catalan = [1, 1, 2, 5, 14, 42];
        for n in 0..=5 {
            assert_eq!(closures(2 * n, 0).unwrap().len(), catalan[n]);
        }
        assert!(closures(3, 0).is_err());
    }

    #[test]
    fn crossing_matching_rejected() {
        assert!(matches!(
            check_matching(4, &[(0, 2), (1, 3)]),
            Err(DiagramError::BadMatching { .. })
        ));
        assert!(close(
            &triangle(),
            &Closure {
                pairs: vec![(0, 3), (1, 4), (2, 5)],
                extra_circles: 0
            }
        )
        .is_err());
    }

    #[test]
    fn closing_the_arc_gives_the_unknot() {
        let d = close(&plain_arc(), &closures(2, 0).unwrap()[0]).unwrap();
        assert!(d.is_closed());
        assert_eq!(d.crossings.len(), 0);
        assert_eq!(enumerate_enhanced_states(&d).unwrap().len(), 2);
        let k = close(&kink(), &closures(2, 0).unwrap()[0]).unwrap();
        assert_eq!(k.crossings.len(), 1);
    }

    #[test]
    fn flipping_one_crossing_changes_circle_count_by_one() {
        for d in local_patterns().values() {
            for extra in 0..=1 {
                for m in closures(d.boundary.len(), extra).unwrap() {
                    let c = close(d, &m).unwrap();
                    let counts = circle_counts(&c);
                    let n = c.crossings.len();
                    for s in 0..1u32 << n {
                        for i in 0..n {
                            let t = s ^ (1 << i);
                            let diff = counts[s as usize] as i64 - counts[t as usize] as i64;
                            assert_eq!(diff.abs(), 1, "{} {s:b} {i}", c.name);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn state_count_matches_circle_sum() {
        for d in local_patterns().values() {
            for m in closures(d.boundary.len(), 1).unwrap() {
                let c = close(d, &m).unwrap();
                let expected: usize = circle_counts(&c).iter().map(|k| 1usize << k).sum();
                assert_eq!(enumerate_enhanced_states(&c).unwrap().len(), expected);
            }
        }
    }

    #[test]
    fn pd_parsing() {
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        assert_eq!((d.crossings.len(), d.n_edges), (3, 6));
        let j = parse_pd(r#"{"pd": [[1,4,2,5],[3,6,4,1],[5,2,6,3]], "free_loops": 0}"#).unwrap();
        assert_eq!(j, d);
        let unknot = parse_pd(r#"{"pd": [], "free_loops": 1}"#).unwrap();
        assert_eq!(enumerate_enhanced_states(&unknot).unwrap().len(), 2);
        assert!(parse_pd("X[1,1,1,2] X[2,3,3,4]").is_err());
        assert!(parse_pd("X[1,2,3]").is_err());
        assert!(parse_pd("X[1,2,3,4]").is_err());
    }

    #[test]
    fn trefoil_signs_agree_across_inputs() {
        let pd = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        assert_eq!(pd.writhe_counts().unwrap(), (0, 3));
        let braid = braid_closure(2, &[1, 1, 1]).unwrap();
        assert_eq!(braid.writhe_counts().unwrap(), (3, 0));
        let back = braid_closure(2, &[-1, -1, -1]).unwrap();
        assert_eq!(back.writhe_counts().unwrap(), (0, 3));
    }

    #[test]
    fn braid_round_trips_through_pd() {
        let b = braid_closure(3, &[1, 2, 1, 1]).unwrap();
        let (pd, loops) = to_pd(&b).unwrap();
        assert_eq!(loops, 0);
        let text: Vec<String> = pd
            .iter()
            .map(|t| format!("X[{},{},{},{}]", t[0], t[1], t[2], t[3]))
            .collect();
        let back = parse_pd(&text.join(" ")).unwrap();
        assert_eq!(circle_counts(&back), circle_counts(&b));
        assert_eq!(back.writhe_counts().unwrap(), b.writhe_counts().unwrap());
    }
}
