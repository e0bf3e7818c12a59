//! Explicit partitions and dissections of Baire space, realization of finite
//! serial transitive Kripke models over it, and the finite witness suites for
//! the two incompactness constructions.
//!
//! Open sets here are unions of cylinders described by a [`SchemeRegion`].
//! Dissecting such a set at length `L` works cylinder by cylinder: inside a
//! constituent cylinder `[c]` put `p = max(|c|, L)`; a point whose symbols from
//! `p` on are all zero is a boundary point, otherwise its first nonzero symbol
//! after `p` sits at `p + r` and the point lies in ring `r`. Rings are dealt to
//! the parts round-robin (or by a pairing function for countably many parts),
//! so every part accumulates at every boundary point and nowhere else.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{classify, rewrite_eliminate, Formula, Fragment, RewriteRule};
use crate::kripke::{eval_kripke, frame_properties, Frame, KripkeModel, WorldSet};
use crate::region::{BasePoint, Distance, Region, Space, Sym, SymbolicModel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RealizeError {
    #[error("partition needs at least one part")]
    CountZero,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("bad epsilon `{0}`: expected a dyadic rational such as 1, 1/2 or 3/16")]
    BadEpsilon(String),
    #[error("frame is not serial")]
    NotSerial,
    #[error("frame is not transitive")]
    NotTransitive,
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("formula outside the universal/coderivative fragment: {0}")]
    Fragment(String),
    #[error("depth budget exceeded: modal depth {modal_depth} at level {level} needs a realization deeper than {depth}")]
    DepthExceeded { modal_depth: usize, level: usize, depth: usize },
    #[error("{0} is not a materialized boundary point")]
    NotBoundary(BasePoint),
    #[error("realizations live in Baire space, got a {0} point")]
    WrongSpace(Space),
}

/// A positive dyadic rational `num / 2^exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dyadic {
    pub num: u64,
    pub exp: u32,
}

impl Dyadic {
    pub fn new(num: u64, exp: u32) -> Result<Dyadic, RealizeError> {
        if num == 0 {
            return Err(RealizeError::NonPositiveEpsilon);
        }
        Ok(Dyadic { num, exp })
    }

    /// `1 / 2^k`.
    pub fn inverse_pow2(k: u32) -> Dyadic {
        Dyadic { num: 1, exp: k }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / 2f64.powi(self.exp as i32)
    }

    /// Smallest `n` with `2^-n < self`.
    pub fn min_exponent_below(self) -> usize {
        (0..).find(|&n| Distance::Pow2(n as u32).less_than_dyadic(self.num, self.exp)).expect("unbounded search")
    }
}

impl FromStr for Dyadic {
    type Err = RealizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RealizeError::BadEpsilon(s.to_string());
        let s = s.trim();
        if s.starts_with('-') || s == "0" || s.starts_with("0/") {
            return Err(RealizeError::NonPositiveEpsilon);
        }
        let (num, den) = match s.split_once('/') {
            None => (s, "1"),
            Some((n, d)) => (n.trim(), d.trim()),
        };
        let num: u64 = num.parse().map_err(|_| bad())?;
        let exp = match den.strip_prefix("2^") {
            Some(e) => e.parse().map_err(|_| bad())?,
            None => {
                let d: u64 = den.parse().map_err(|_| bad())?;
                if !d.is_power_of_two() {
                    return Err(bad());
                }
                d.trailing_zeros()
            }
        };
        Dyadic::new(num, exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

/// How rings are dealt to parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulus {
    /// Ring `r` goes to part `r mod k`.
    Finite(u64),
    /// Ring `r` goes to the first coordinate of the inverse Cantor pairing of
    /// `r`, so each of countably many parts gets infinitely many rings.
    Diagonal,
}

impl Modulus {
    pub fn part_of_ring(self, r: u64) -> u64 {
        match self {
            Modulus::Finite(k) => r % k,
            Modulus::Diagonal => unpair(r).0,
        }
    }

    /// Smallest ring `>= min` dealt to `part`.
    pub fn ring_for(self, part: u64, min: u64) -> u64 {
        match self {
            Modulus::Finite(k) => min + (part + k - min % k) % k,
            Modulus::Diagonal => (0..).map(|j| pair(part, j)).find(|&r| r >= min).expect("unbounded"),
        }
    }
}

fn pair(i: u64, j: u64) -> u64 {
    (i + j) * (i + j + 1) / 2 + j
}

fn unpair(r: u64) -> (u64, u64) {
    let mut w = (((8 * r + 1) as f64).sqrt() as u64).saturating_sub(1) / 2;
    while (w + 1) * (w + 2) / 2 <= r {
        w += 1;
    }
    while w * (w + 1) / 2 > r {
        w -= 1;
    }
    let j = r - w * (w + 1) / 2;
    (w - j, j)
}

/// Explicitly described subsets of Baire space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemeRegion {
    Cylinder(Vec<Sym>),
    /// `⋃_{j >= from} [stem · j]`.
    Tail { stem: Vec<Sym>, from: Sym },
    /// Boundary points of an open family dissected at length `len`.
    Boundary { family: Arc<SchemeRegion>, len: usize },
    /// Rings of an open family dissected at length `len` dealt to `part`.
    Slice { family: Arc<SchemeRegion>, len: usize, part: u64, modulus: Modulus },
    Union(Vec<SchemeRegion>),
}

impl SchemeRegion {
    /// The constituent cylinder containing `x`, for open kinds.
    pub fn constituent(&self, x: &BasePoint) -> Option<Vec<Sym>> {
        match self {
            SchemeRegion::Cylinder(s) => x.in_cylinder(s).then(|| s.clone()),
            SchemeRegion::Tail { stem, from } => {
                (x.in_cylinder(stem) && x.at(stem.len()) >= *from).then(|| x.take(stem.len() + 1))
            }
            SchemeRegion::Boundary { .. } => None,
            SchemeRegion::Slice { family, len, part, modulus } => {
                let c = family.constituent(x)?;
                let p = c.len().max(*len);
                let q = first_nonzero_from(x, p)?;
                (modulus.part_of_ring((q - p) as u64) == *part).then(|| x.take(q + 1))
            }
            SchemeRegion::Union(parts) => parts.iter().find_map(|r| r.constituent(x)),
        }
    }

    pub fn contains(&self, x: &BasePoint) -> bool {
        if x.space() != Space::Baire {
            return false;
        }
        match self {
            SchemeRegion::Boundary { family, len } => match family.constituent(x) {
                Some(c) => first_nonzero_from(x, c.len().max(*len)).is_none(),
                None => false,
            },
            SchemeRegion::Union(parts) => parts.iter().any(|r| r.contains(x)),
            _ => self.constituent(x).is_some(),
        }
    }

    /// Some constituent cylinder of an open kind.
    pub fn some_constituent(&self) -> Option<Vec<Sym>> {
        match self {
            SchemeRegion::Cylinder(s) => Some(s.clone()),
            SchemeRegion::Tail { stem, from } => {
                let mut w = stem.clone();
                w.push(*from);
                Some(w)
            }
            SchemeRegion::Boundary { .. } => None,
            SchemeRegion::Slice { family, len, part, modulus } => {
                let c = family.some_constituent()?;
                Some(ring_cylinder(&c, *len, modulus.ring_for(*part, 0)))
            }
            SchemeRegion::Union(parts) => parts.iter().find_map(SchemeRegion::some_constituent),
        }
    }

    /// Up to `count` distinct constituent cylinders of an open kind.
    pub fn constituents(&self, count: usize) -> Vec<Vec<Sym>> {
        match self {
            SchemeRegion::Cylinder(s) => vec![s.clone()],
            SchemeRegion::Tail { stem, from } => (0..count as u64)
                .map(|j| {
                    let mut w = stem.clone();
                    w.push(from + j);
                    w
                })
                .collect(),
            SchemeRegion::Boundary { .. } => Vec::new(),
            SchemeRegion::Slice { family, len, part, modulus } => {
                let mut out = Vec::new();
                for c in family.constituents(count) {
                    let mut r = modulus.ring_for(*part, 0);
                    for _ in 0..count {
                        out.push(ring_cylinder(&c, *len, r));
                        r = modulus.ring_for(*part, r + 1);
                    }
                }
                out.truncate(count.max(1));
                out
            }
            SchemeRegion::Union(parts) => parts.iter().flat_map(|r| r.constituents(count)).take(count).collect(),
        }
    }

    /// A point of the region.
    pub fn some_point(&self) -> Option<BasePoint> {
        match self {
            SchemeRegion::Boundary { family, .. } => {
                Some(BasePoint::zero_tail(Space::Baire, &family.some_constituent()?))
            }
            _ => Some(BasePoint::zero_tail(Space::Baire, &self.some_constituent()?)),
        }
    }

    pub fn describe(&self) -> String {
        let w = |s: &[Sym]| Space::Baire.format_word(s);
        match self {
            SchemeRegion::Cylinder(s) => format!("[{}]", w(s)),
            SchemeRegion::Tail { stem, from } => format!("tail([{}], >={from})", w(stem)),
            SchemeRegion::Boundary { family, len } => format!("boundary({}, len {len})", family.describe()),
            SchemeRegion::Slice { len, part, modulus, .. } => match modulus {
                Modulus::Finite(k) => format!("slice(len {len}, rings = {part} mod {k})"),
                Modulus::Diagonal => format!("slice(len {len}, rings of part {part} by pairing)"),
            },
            SchemeRegion::Union(parts) => parts.iter().map(SchemeRegion::describe).collect::<Vec<_>>().join(" ∪ "),
        }
    }
}

/// `c · 0^(max(|c|, len) - |c|) · 0^r · 1`: the ring-`r` cylinder next to `c·0^ω`.
fn ring_cylinder(c: &[Sym], len: usize, r: u64) -> Vec<Sym> {
    let p = c.len().max(len);
    let mut w = c.to_vec();
    w.resize(p + r as usize, 0);
    w.push(1);
    w
}

/// Index of the first nonzero symbol at or after `p`, if any.
fn first_nonzero_from(x: &BasePoint, p: usize) -> Option<usize> {
    let end = p.max(x.prefix().len()) + x.period().len();
    (p..end).find(|&i| x.at(i) != 0)
}

// ---------------------------------------------------------------------------
// Partitions and dissections

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartCount {
    Finite(u64),
    Countable,
}

impl FromStr for PartCount {
    type Err = RealizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "countable" | "omega" => Ok(PartCount::Countable),
            _ => s.parse::<u64>().map(PartCount::Finite).map_err(|_| RealizeError::CountZero),
        }
    }
}

/// A partition of Baire space into non-empty clopen pieces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub count: PartCount,
}

impl Partition {
    /// Piece `j`: `[j]` for all but a finite partition's last piece, which is
    /// the tail `⋃_{i >= k-1} [i]`.
    pub fn part(&self, j: u64) -> Option<SchemeRegion> {
        match self.count {
            PartCount::Countable => Some(SchemeRegion::Cylinder(vec![j])),
            PartCount::Finite(k) if j + 1 < k => Some(SchemeRegion::Cylinder(vec![j])),
            PartCount::Finite(k) if j + 1 == k => Some(SchemeRegion::Tail { stem: vec![], from: j }),
            PartCount::Finite(_) => None,
        }
    }

    /// Index of the piece containing `x`.
    pub fn index_of(&self, x: &BasePoint) -> u64 {
        match self.count {
            PartCount::Countable => x.at(0),
            PartCount::Finite(k) => x.at(0).min(k - 1),
        }
    }

    pub fn parts(&self) -> Option<Vec<SchemeRegion>> {
        match self.count {
            PartCount::Countable => None,
            PartCount::Finite(k) => Some((0..k).map(|j| self.part(j).expect("in range")).collect()),
        }
    }
}

pub fn partition_noncompact(count: PartCount) -> Result<Partition, RealizeError> {
    if count == PartCount::Finite(0) {
        return Err(RealizeError::CountZero);
    }
    Ok(Partition { count })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dissection {
    pub stem: Vec<Sym>,
    /// Boundary depth below the stem.
    pub depth: usize,
    pub modulus: Modulus,
    pub epsilon: Dyadic,
}

impl Dissection {
    pub fn len(&self) -> usize {
        self.stem.len() + self.depth
    }

    fn family(&self) -> Arc<SchemeRegion> {
        Arc::new(SchemeRegion::Cylinder(self.stem.clone()))
    }

    pub fn boundary(&self) -> SchemeRegion {
        SchemeRegion::Boundary { family: self.family(), len: self.len() }
    }

    pub fn part(&self, i: u64) -> Option<SchemeRegion> {
        if let Modulus::Finite(k) = self.modulus {
            if i >= k {
                return None;
            }
        }
        Some(SchemeRegion::Slice { family: self.family(), len: self.len(), part: i, modulus: self.modulus })
    }

    /// The nearest boundary point to `x` in `[stem]`.
    pub fn nearest_boundary_point(&self, x: &BasePoint) -> Option<BasePoint> {
        x.in_cylinder(&self.stem).then(|| BasePoint::zero_tail(Space::Baire, &x.take(self.len())))
    }

    /// A point of part `i` at distance exactly `2^-(len + r)` from the
    /// boundary point `b`, with `r >= min_ring`.
    pub fn approach(&self, b: &BasePoint, i: u64, min_ring: u64) -> BasePoint {
        let r = self.modulus.ring_for(i, min_ring);
        BasePoint::zero_tail(Space::Baire, &ring_cylinder(&b.take(self.len()), self.len(), r))
    }

    /// Check the dissection's guarantees on sample points.
    pub fn verify(&self, samples: &[BasePoint], parts_checked: u64) -> DissectionReport {
        let mut rep = DissectionReport::default();
        let boundary = self.boundary();
        let parts: Vec<SchemeRegion> = (0..parts_checked).filter_map(|i| self.part(i)).collect();
        let mut boundary_samples = Vec::new();
        for x in samples {
            let inside = x.in_cylinder(&self.stem);
            let hits = usize::from(boundary.contains(x)) + parts.iter().filter(|g| g.contains(x)).count();
            let expected = match (inside, self.modulus) {
                (false, _) => 0,
                (true, Modulus::Finite(_)) => 1,
                (true, Modulus::Diagonal) => {
                    let owner = self.owner(x);
                    usize::from(owner.is_none_or(|i| i < parts_checked))
                }
            };
            rep.partition_checked += 1;
            if hits != expected {
                rep.failures.push(format!("{x} lies in {hits} pieces, expected {expected}"));
            }
            if !inside {
                continue;
            }
            if boundary.contains(x) {
                boundary_samples.push(x.clone());
            }
            let b = self.nearest_boundary_point(x).expect("inside");
            rep.net_checked += 1;
            let d = x.distance(&b).expect("same space");
            if !boundary.contains(&b) || !d.less_than_dyadic(self.epsilon.num, self.epsilon.exp) {
                rep.failures.push(format!("{x} is at distance {d} from the boundary, not below {}", self.epsilon));
            }
            boundary_samples.push(b);
        }
        boundary_samples.sort();
        boundary_samples.dedup();
        // every part accumulates at every boundary point
        for b in &boundary_samples {
            for (i, g) in parts.iter().enumerate() {
                for min_ring in [0u64, 5, 17] {
                    let y = self.approach(b, i as u64, min_ring);
                    rep.closure_checked += 1;
                    let d = y.distance(b).expect("same space");
                    let far = Distance::Pow2((self.len() as u64 + min_ring) as u32);
                    if !g.contains(&y) || d > far {
                        rep.failures.push(format!("part {i} does not approach {b} through {y}"));
                    }
                }
            }
        }
        // boundary points are 2^-(len-1) apart, so the boundary has no limit points
        let gap = Distance::Pow2(self.len().saturating_sub(1) as u32);
        for (i, a) in boundary_samples.iter().enumerate() {
            for b in &boundary_samples[i + 1..] {
                rep.sparsity_checked += 1;
                if a.distance(b).expect("same space") < gap {
                    rep.failures.push(format!("boundary points {a} and {b} are closer than {gap}"));
                }
            }
        }
        rep
    }

    fn owner(&self, x: &BasePoint) -> Option<u64> {
        let q = first_nonzero_from(x, self.len())?;
        Some(self.modulus.part_of_ring((q - self.len()) as u64))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DissectionReport {
    pub partition_checked: usize,
    pub net_checked: usize,
    pub closure_checked: usize,
    pub sparsity_checked: usize,
    pub failures: Vec<String>,
}

impl DissectionReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Dissect `[stem]` into a sparse boundary and parts indexed by `indices`,
/// with every point of `[stem]` within `epsilon` of the boundary.
pub fn dissect_cylinder(stem: &[Sym], indices: PartCount, epsilon: Dyadic) -> Result<Dissection, RealizeError> {
    let modulus = match indices {
        PartCount::Finite(0) => return Err(RealizeError::CountZero),
        PartCount::Finite(k) => Modulus::Finite(k),
        PartCount::Countable => Modulus::Diagonal,
    };
    if epsilon.num == 0 {
        return Err(RealizeError::NonPositiveEpsilon);
    }
    let depth = epsilon.min_exponent_below().saturating_sub(stem.len());
    Ok(Dissection { stem: stem.to_vec(), depth, modulus, epsilon })
}

// ---------------------------------------------------------------------------
// Realization

#[derive(Debug, Clone)]
pub struct RealizedNode {
    pub level: usize,
    pub region: Arc<SchemeRegion>,
    pub label: usize,
    pub parent: Option<usize>,
    /// Children in the order of the sorted successors of the label; empty
    /// for undissected nodes at the last level.
    pub children: Vec<usize>,
}

impl RealizedNode {
    /// Boundary length used when the node is dissected: every point of the
    /// node is then within `1/2^(level+1)` of the boundary.
    pub fn boundary_len(&self) -> usize {
        self.level + 2
    }

    pub fn boundary(&self) -> SchemeRegion {
        SchemeRegion::Boundary { family: self.region.clone(), len: self.boundary_len() }
    }

    pub fn epsilon(&self) -> Dyadic {
        Dyadic::inverse_pow2(self.level as u32 + 1)
    }

    pub fn is_dissected(&self) -> bool {
        !self.children.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RealizedStructure {
    pub model: KripkeModel,
    pub root_world: usize,
    pub depth: usize,
    pub nodes: Vec<RealizedNode>,
    /// Level-0 node of each world.
    pub roots: Vec<usize>,
    partition: Partition,
}

pub fn realize_model(m: &KripkeModel, w0: &str, depth: usize) -> Result<RealizedStructure, RealizeError> {
    let fr = &m.frame;
    let props = frame_properties(fr);
    if !props.serial {
        return Err(RealizeError::NotSerial);
    }
    if !props.transitive {
        return Err(RealizeError::NotTransitive);
    }
    let root_world = fr.id(w0).map_err(|_| RealizeError::UnknownWorld(w0.to_string()))?;
    let partition = partition_noncompact(PartCount::Finite(fr.len() as u64))?;
    let mut nodes: Vec<RealizedNode> = (0..fr.len())
        .map(|w| RealizedNode {
            level: 0,
            region: Arc::new(partition.part(w as u64).expect("one part per world")),
            label: w,
            parent: None,
            children: Vec::new(),
        })
        .collect();
    let roots: Vec<usize> = (0..fr.len()).collect();
    let mut frontier = roots.clone();
    for level in 0..depth {
        let mut next = Vec::new();
        for id in frontier {
            let succ: Vec<usize> = fr.succ(nodes[id].label).iter().copied().collect();
            let modulus = Modulus::Finite(succ.len() as u64);
            let len = nodes[id].boundary_len();
            for (i, &w) in succ.iter().enumerate() {
                let region = SchemeRegion::Slice { family: nodes[id].region.clone(), len, part: i as u64, modulus };
                nodes.push(RealizedNode {
                    level: level + 1,
                    region: Arc::new(region),
                    label: w,
                    parent: Some(id),
                    children: Vec::new(),
                });
                let child = nodes.len() - 1;
                nodes[id].children.push(child);
                next.push(child);
            }
        }
        frontier = next;
    }
    Ok(RealizedStructure { model: m.clone(), root_world, depth, nodes, roots, partition })
}

impl RealizedStructure {
    /// The node whose region contains `x` and whose boundary contains `x`.
    pub fn locate(&self, x: &BasePoint) -> Result<usize, RealizeError> {
        if x.space() != Space::Baire {
            return Err(RealizeError::WrongSpace(x.space()));
        }
        let mut id = self.roots[self.partition.index_of(x) as usize];
        loop {
            let node = &self.nodes[id];
            if !node.is_dissected() {
                return Err(RealizeError::NotBoundary(x.clone()));
            }
            if node.boundary().contains(x) {
                return Ok(id);
            }
            id = *node
                .children
                .iter()
                .find(|&&c| self.nodes[c].region.contains(x))
                .ok_or_else(|| RealizeError::NotBoundary(x.clone()))?;
        }
    }

    /// A boundary point of a dissected node.
    pub fn boundary_point(&self, id: usize) -> Option<BasePoint> {
        let node = &self.nodes[id];
        node.is_dissected().then(|| BasePoint::zero_tail(Space::Baire, &node.region.some_constituent().expect("open")))
    }

    /// Up to `count` distinct boundary points of `id`, spread over several
    /// constituent cylinders.
    pub fn boundary_points(&self, id: usize, count: usize) -> Vec<BasePoint> {
        let node = &self.nodes[id];
        if !node.is_dissected() {
            return Vec::new();
        }
        let mut out = std::collections::BTreeSet::new();
        for c in node.region.constituents(count) {
            let p = c.len().max(node.boundary_len());
            for j in 0..count as u64 {
                let mut w = c.clone();
                w.resize(p, 0);
                if p > c.len() {
                    w[c.len()] = j;
                } else if j > 0 {
                    break;
                }
                out.insert(BasePoint::zero_tail(Space::Baire, &w));
            }
            if out.len() >= count {
                break;
            }
        }
        out.into_iter().take(count).collect()
    }

    pub fn nodes_at_level(&self, level: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].level == level)
    }

    /// The tree of nodes up to `max_level` under the strict-descendant
    /// relation, with the labelling as a map into world names.
    pub fn tree_frame(&self, max_level: usize) -> (Frame, BTreeMap<String, String>) {
        let keep: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.nodes[i].level <= max_level).collect();
        let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut edges = Vec::new();
        for &n in &keep {
            let mut stack: Vec<usize> = self.nodes[n].children.clone();
            while let Some(c) = stack.pop() {
                if let Some(&j) = pos.get(&c) {
                    edges.push((pos[&n], j));
                    stack.extend(self.nodes[c].children.iter().copied());
                }
            }
        }
        let frame = Frame::from_indices(keep.len(), edges);
        let labels = keep
            .iter()
            .enumerate()
            .map(|(i, &n)| (i.to_string(), self.model.frame.name(self.nodes[n].label).to_string()))
            .collect();
        (frame, labels)
    }

    pub fn to_json(&self) -> serde_json::Value {
        fn node_json(rs: &RealizedStructure, id: usize) -> serde_json::Value {
            let n = &rs.nodes[id];
            let mut v = serde_json::json!({
                "level": n.level,
                "region": n.region.describe(),
                "label": rs.model.frame.name(n.label),
            });
            if n.is_dissected() {
                v["boundary"] = serde_json::json!({
                    "len": n.boundary_len(),
                    "epsilon": n.epsilon().to_string(),
                    "example": rs.boundary_point(id).map(|p| p.to_string()),
                });
                v["children"] = n.children.iter().map(|&c| node_json(rs, c)).collect();
            }
            v
        }
        serde_json::json!({
            "root_world": self.model.frame.name(self.root_world),
            "depth": self.depth,
            "nodes": self.nodes.len(),
            "forest": self.roots.iter().map(|&r| node_json(self, r)).collect::<Vec<_>>(),
        })
    }
}

/// Truth of `f` at the boundary point `x`, computed from the scheme
/// topology: atoms by the label of the node whose boundary holds `x`,
/// `[d]` by visiting a boundary point of every child inside the punctured
/// neighbourhood of `x`, and `A` by visiting a boundary point of every
/// level-0 region. `[]` is first rewritten to `f & [d]f`.
pub fn eval_realized(rs: &RealizedStructure, f: &Formula, x: &BasePoint) -> Result<bool, RealizeError> {
    let f = rewrite_eliminate(f, RewriteRule::BoxToCoderiv);
    let (frag, md) = classify(&f);
    let allowed = Fragment { uses_coderiv: true, uses_univ: true, ..Fragment::default() };
    if !frag.within(allowed) {
        return Err(RealizeError::Fragment(f.render()));
    }
    let id = rs.locate(x)?;
    let level = rs.nodes[id].level;
    if md + level >= rs.depth {
        return Err(RealizeError::DepthExceeded { modal_depth: md, level, depth: rs.depth });
    }
    eval_at(rs, &f, id, x)
}

fn eval_at(rs: &RealizedStructure, f: &Formula, id: usize, x: &BasePoint) -> Result<bool, RealizeError> {
    let node = &rs.nodes[id];
    Ok(match f {
        Formula::Atom(p) => rs.model.valuation(p).contains(&node.label),
        Formula::Top => true,
        Formula::Neg(a) => !eval_at(rs, a, id, x)?,
        Formula::And(a, b) => eval_at(rs, a, id, x)? && eval_at(rs, b, id, x)?,
        Formula::Univ(a) => {
            for &r in &rs.roots {
                let y = rs.boundary_point(r).expect("roots are dissected");
                if !eval_at(rs, a, rs.locate(&y)?, &y)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::CoDeriv(a) => {
            let c = node.region.constituent(x).expect("x lies in its node");
            let len = node.boundary_len();
            let modulus = Modulus::Finite(node.children.len() as u64);
            for (i, &child) in node.children.iter().enumerate() {
                let y = BasePoint::zero_tail(
                    Space::Baire,
                    &ring_cylinder(&x.take(c.len().max(len)), len, modulus.ring_for(i as u64, 0)),
                );
                if rs.locate(&y)? != child {
                    return Err(RealizeError::NotBoundary(y));
                }
                if !eval_at(rs, a, child, &y)? {
                    return Ok(false);
                }
            }
            true
        }
        other => return Err(RealizeError::Fragment(other.render())),
    })
}

/// Worlds of the Kripke model where `f` holds; convenience for comparisons.
pub fn kripke_truth(rs: &RealizedStructure, f: &Formula) -> WorldSet {
    eval_kripke(&rs.model, f)
}

// ---------------------------------------------------------------------------
// Witness suites

fn p(i: usize) -> Formula {
    Formula::atom(format!("p{i}"))
}

/// The members of the tangle witness set over atoms `p0..pn, q`, and the
/// chain model `({0..n}, <=)` satisfying them at `0`.
pub fn witness_tangle(n: usize) -> (Vec<Formula>, KripkeModel) {
    let q = Formula::atom("q");
    let mut sigma = vec![
        Formula::not(Formula::tangle([q.clone(), Formula::not(q.clone())]).expect("non-empty")),
        p(0),
    ];
    for i in 0..n {
        sigma.push(Formula::univ(Formula::implies(p(i), Formula::dia(p(i + 1)))));
    }
    for i in 0..=n {
        let target = if i % 2 == 0 { q.clone() } else { Formula::not(q.clone()) };
        sigma.push(Formula::univ(Formula::implies(p(i), target)));
    }
    let mut h: BTreeMap<String, WorldSet> = (0..=n).map(|i| (format!("p{i}"), WorldSet::from([i]))).collect();
    h.insert("q".into(), (0..=n).filter(|i| i % 2 == 0).collect());
    let model = KripkeModel::new(Frame::chain(n), h).expect("valuation within frame");
    (sigma, model)
}

#[derive(Debug, Clone)]
pub struct DerivativeWitness {
    pub sigma: Vec<Formula>,
    pub model: SymbolicModel,
    /// `x_i = 1^i 0^ω`, the point assigned to `p_i`.
    pub points: Vec<BasePoint>,
}

/// The derivative witness set over atoms `p0..pn, q` with a Cantor model
/// sending `p_i` to a single point and `q` to all of them.
pub fn witness_derivative(n: usize) -> DerivativeWitness {
    let q = Formula::atom("q");
    let mut sigma: Vec<Formula> = (0..=n)
        .map(|i| {
            let fresh = Formula::conj((0..i).map(|j| Formula::not(p(j))));
            Formula::exists(Formula::and(Formula::and(q.clone(), p(i)), fresh))
        })
        .collect();
    sigma.push(Formula::univ(Formula::not(Formula::deriv(q.clone()))));
    let points: Vec<BasePoint> = (0..=n).map(|i| BasePoint::zero_tail(Space::Cantor, &vec![1; i])).collect();
    let mut h: BTreeMap<String, Region> =
        points.iter().enumerate().map(|(i, x)| (format!("p{i}"), Region::point(x.clone()))).collect();
    h.insert("q".into(), Region::points(Space::Cantor, points.iter().cloned()));
    let model = SymbolicModel::new(Space::Cantor, h).expect("cantor regions");
    DerivativeWitness { sigma, model, points }
}
