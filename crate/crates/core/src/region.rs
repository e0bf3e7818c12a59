//! Definable subsets of Baire space and Cantor space.
//!
//! A [`Region`] is a clopen set `K` (a finite Boolean combination of
//! cylinders) adjusted by finitely many eventually periodic points: points
//! added outside `K` and points removed from inside it. Both spaces are
//! zero-dimensional and have no isolated points, which makes every operator
//! exact on this class:
//!
//! * `<d>R = K` and `[d]R = K`,
//! * `cl R = K ∪ plus`,
//! * `int R = K \ minus`.
//!
//! `K` is kept as a decision trie over symbols. A Cantor branch lists the
//! child for `0` and keeps the child for `1` in `rest`; a Baire branch lists
//! finitely many children and one `rest` child shared by every other symbol.
//! Tries are normalised bottom-up, so two regions are equal as sets exactly
//! when they are equal as values.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;

pub type Sym = u64;

/// Largest admissible Baire symbol.
pub const MAX_BAIRE_SYMBOL: Sym = 1 << 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegionError {
    #[error("space mismatch: {0} vs {1}")]
    SpaceMismatch(Space, Space),
    #[error("bad symbol string `{0}` for {1} space")]
    BadSymbols(String, Space),
    #[error("empty period")]
    EmptyPeriod,
    #[error("distance to the empty set is undefined")]
    DistanceToEmpty,
    #[error("tangle iteration exceeded its budget of {0} steps")]
    BudgetExceeded(usize),
    #[error("unknown space `{0}`")]
    UnknownSpace(String),
    #[error("malformed region: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Cantor,
    Baire,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Cantor => "cantor",
            Space::Baire => "baire",
        })
    }
}

impl FromStr for Space {
    type Err = RegionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cantor" => Ok(Space::Cantor),
            "baire" => Ok(Space::Baire),
            other => Err(RegionError::UnknownSpace(other.to_string())),
        }
    }
}

impl Space {
    pub fn check_symbol(self, s: Sym) -> bool {
        match self {
            Space::Cantor => s <= 1,
            Space::Baire => s <= MAX_BAIRE_SYMBOL,
        }
    }

    /// Parse a finite string: `0110` for Cantor, `3.0.12` for Baire.
    pub fn parse_word(self, text: &str) -> Result<Vec<Sym>, RegionError> {
        let bad = || RegionError::BadSymbols(text.to_string(), self);
        let word: Vec<Sym> = match self {
            Space::Cantor => text
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(bad()),
                })
                .collect::<Result<_, _>>()?,
            Space::Baire if text.is_empty() => Vec::new(),
            Space::Baire => text.split('.').map(|t| t.parse::<Sym>().map_err(|_| bad())).collect::<Result<_, _>>()?,
        };
        if word.iter().all(|&s| self.check_symbol(s)) {
            Ok(word)
        } else {
            Err(bad())
        }
    }

    pub fn format_word(self, word: &[Sym]) -> String {
        match self {
            Space::Cantor => word.iter().map(|s| s.to_string()).collect(),
            Space::Baire => word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("."),
        }
    }
}

// ---------------------------------------------------------------------------
// Points

/// An eventually periodic sequence `prefix · period^ω` in canonical form:
/// the period is primitive and the prefix is as short as possible.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasePoint {
    space: Space,
    prefix: Vec<Sym>,
    period: Vec<Sym>,
}

impl BasePoint {
    pub fn new(space: Space, prefix: Vec<Sym>, period: Vec<Sym>) -> Result<BasePoint, RegionError> {
        if period.is_empty() {
            return Err(RegionError::EmptyPeriod);
        }
        if let Some(&s) = prefix.iter().chain(&period).find(|&&s| !space.check_symbol(s)) {
            return Err(RegionError::BadSymbols(s.to_string(), space));
        }
        let mut period = primitive_root(period);
        let mut prefix = prefix;
        while prefix.last().is_some() && prefix.last() == period.last() {
            prefix.pop();
            period.rotate_right(1);
        }
        Ok(BasePoint { space, prefix, period })
    }

    pub fn parse(space: Space, prefix: &str, period: &str) -> Result<BasePoint, RegionError> {
        BasePoint::new(space, space.parse_word(prefix)?, space.parse_word(period)?)
    }

    /// `stem · 0^ω`.
    pub fn zero_tail(space: Space, stem: &[Sym]) -> BasePoint {
        BasePoint::new(space, stem.to_vec(), vec![0]).expect("valid symbols")
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn prefix(&self) -> &[Sym] {
        &self.prefix
    }

    pub fn period(&self) -> &[Sym] {
        &self.period
    }

    pub fn at(&self, i: usize) -> Sym {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// The first `n` symbols.
    pub fn take(&self, n: usize) -> Vec<Sym> {
        (0..n).map(|i| self.at(i)).collect()
    }

    pub fn in_cylinder(&self, stem: &[Sym]) -> bool {
        stem.iter().enumerate().all(|(i, &s)| self.at(i) == s)
    }

    /// Length of the longest common prefix, `None` when the points are equal.
    pub fn lcp(&self, other: &BasePoint) -> Option<usize> {
        if self == other {
            return None;
        }
        let bound = self.prefix.len().max(other.prefix.len()) + lcm(self.period.len(), other.period.len());
        (0..=bound).find(|&i| self.at(i) != other.at(i))
    }

    pub fn distance(&self, other: &BasePoint) -> Result<Distance, RegionError> {
        if self.space != other.space {
            return Err(RegionError::SpaceMismatch(self.space, other.space));
        }
        Ok(match self.lcp(other) {
            None => Distance::Zero,
            Some(k) => Distance::Pow2(k as u32),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "prefix": self.space.format_word(&self.prefix),
            "period": self.space.format_word(&self.period),
        })
    }
}

impl fmt::Display for BasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.space.format_word(&self.prefix), self.space.format_word(&self.period))
    }
}

/// Parse `prefix(period)`, e.g. `0(1)` or `3.4(0)`.
pub fn parse_point(space: Space, text: &str) -> Result<BasePoint, RegionError> {
    let bad = || RegionError::BadSymbols(text.to_string(), space);
    let (prefix, rest) = text.split_once('(').ok_or_else(bad)?;
    let period = rest.strip_suffix(')').ok_or_else(bad)?;
    BasePoint::parse(space, prefix.trim_end_matches('.'), period)
}

fn primitive_root(w: Vec<Sym>) -> Vec<Sym> {
    let n = w.len();
    for d in 1..n {
        if n.is_multiple_of(d) && (d..n).all(|i| w[i] == w[i - d]) {
            return w[..d].to_vec();
        }
    }
    w
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// A distance value of the prefix metric: `0` or `2^-k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distance {
    Zero,
    Pow2(u32),
}

impl Distance {
    pub fn to_f64(self) -> f64 {
        match self {
            Distance::Zero => 0.0,
            Distance::Pow2(k) => 0.5f64.powi(k as i32),
        }
    }

    /// Strict comparison with the dyadic `num / 2^exp`.
    pub fn less_than_dyadic(self, num: u64, exp: u32) -> bool {
        match self {
            Distance::Zero => num > 0,
            // 2^-k < num/2^exp  iff  2^exp < num * 2^k
            Distance::Pow2(k) => (1u128 << exp) < (num as u128) << k.min(64),
        }
    }
}

impl Ord for Distance {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Distance::Zero, Distance::Zero) => Ordering::Equal,
            (Distance::Zero, _) => Ordering::Less,
            (_, Distance::Zero) => Ordering::Greater,
            (Distance::Pow2(a), Distance::Pow2(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Zero => f.write_str("0"),
            Distance::Pow2(0) => f.write_str("1"),
            Distance::Pow2(k) => write!(f, "1/2^{k}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Clopen tries

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Leaf(bool),
    Branch(Vec<(Sym, Node)>, Box<Node>),
}

impl Node {
    fn child(&self, s: Sym) -> &Node {
        match self {
            Node::Leaf(_) => self,
            Node::Branch(kids, rest) => match kids.binary_search_by_key(&s, |(k, _)| *k) {
                Ok(i) => &kids[i].1,
                Err(_) => rest,
            },
        }
    }

    fn branch(space: Space, mut kids: Vec<(Sym, Node)>, rest: Node) -> Node {
        match space {
            Space::Cantor => {
                let lookup = |kids: &[(Sym, Node)], s: Sym| kids.iter().find(|(k, _)| *k == s).map(|(_, c)| c.clone());
                let zero = lookup(&kids, 0).unwrap_or_else(|| rest.clone());
                let one = lookup(&kids, 1).unwrap_or(rest);
                if zero == one && matches!(zero, Node::Leaf(_)) {
                    zero
                } else {
                    Node::Branch(vec![(0, zero)], Box::new(one))
                }
            }
            Space::Baire => {
                kids.retain(|(_, c)| *c != rest);
                kids.sort_by_key(|(k, _)| *k);
                kids.dedup_by_key(|(k, _)| *k);
                if kids.is_empty() {
                    rest
                } else {
                    Node::Branch(kids, Box::new(rest))
                }
            }
        }
    }

    fn cylinder(space: Space, stem: &[Sym]) -> Node {
        stem.iter()
            .rev()
            .fold(Node::Leaf(true), |acc, &s| Node::branch(space, vec![(s, acc)], Node::Leaf(false)))
    }

    fn merge(space: Space, a: &Node, b: &Node, op: fn(bool, bool) -> bool) -> Node {
        match (a, b) {
            (Node::Leaf(x), Node::Leaf(y)) => Node::Leaf(op(*x, *y)),
            _ => {
                let syms: BTreeSet<Sym> = a.kid_symbols().chain(b.kid_symbols()).collect();
                let kids = syms.into_iter().map(|s| (s, Node::merge(space, a.child(s), b.child(s), op))).collect();
                let rest = Node::merge(space, a.rest(), b.rest(), op);
                Node::branch(space, kids, rest)
            }
        }
    }

    fn kid_symbols(&self) -> impl Iterator<Item = Sym> + '_ {
        let kids: &[(Sym, Node)] = match self {
            Node::Leaf(_) => &[],
            Node::Branch(kids, _) => kids,
        };
        kids.iter().map(|(k, _)| *k)
    }

    fn rest(&self) -> &Node {
        match self {
            Node::Leaf(_) => self,
            Node::Branch(_, rest) => rest,
        }
    }

    fn negate(&self) -> Node {
        match self {
            Node::Leaf(b) => Node::Leaf(!b),
            Node::Branch(kids, rest) => {
                Node::Branch(kids.iter().map(|(k, c)| (*k, c.negate())).collect(), Box::new(rest.negate()))
            }
        }
    }

    fn contains(&self, x: &BasePoint) -> bool {
        let mut node = self;
        let mut i = 0;
        loop {
            match node {
                Node::Leaf(b) => return *b,
                Node::Branch(..) => {
                    node = node.child(x.at(i));
                    i += 1;
                }
            }
        }
    }

    /// Length of the longest path to a leaf.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Branch(kids, rest) => 1 + kids.iter().map(|(_, c)| c.depth()).chain([rest.depth()]).max().unwrap_or(0),
        }
    }

    /// Number of symbols consumed along `x` before a leaf is reached.
    fn leaf_depth_along(&self, x: &BasePoint) -> (usize, bool) {
        let mut node = self;
        let mut i = 0;
        loop {
            match node {
                Node::Leaf(b) => return (i, *b),
                Node::Branch(..) => {
                    node = node.child(x.at(i));
                    i += 1;
                }
            }
        }
    }

    /// Some finite word all of whose extensions lie in the set.
    fn some_true_path(&self, space: Space) -> Option<Vec<Sym>> {
        match self {
            Node::Leaf(true) => Some(Vec::new()),
            Node::Leaf(false) => None,
            Node::Branch(kids, rest) => {
                let fresh = match space {
                    Space::Cantor => 1,
                    Space::Baire => kids.last().map_or(0, |(k, _)| k + 1),
                };
                kids.iter()
                    .map(|(k, c)| (*k, c))
                    .chain([(fresh, rest.as_ref())])
                    .find_map(|(k, c)| {
                        c.some_true_path(space).map(|mut p| {
                            p.insert(0, k);
                            p
                        })
                    })
            }
        }
    }

    /// Cells of the common refinement of several tries.
    fn refinement_cells(space: Space, nodes: &[&Node]) -> usize {
        if nodes.iter().all(|n| matches!(n, Node::Leaf(_))) {
            return 1;
        }
        let syms: BTreeSet<Sym> = match space {
            Space::Cantor => BTreeSet::from([0, 1]),
            Space::Baire => nodes.iter().flat_map(|n| n.kid_symbols()).collect(),
        };
        let mut total: usize = syms
            .iter()
            .map(|&s| Node::refinement_cells(space, &nodes.iter().map(|n| n.child(s)).collect::<Vec<_>>()))
            .sum();
        if space == Space::Baire {
            total += Node::refinement_cells(space, &nodes.iter().map(|n| n.rest()).collect::<Vec<_>>());
        }
        total
    }

    /// Decompose into cylinders and carved cylinders `[outer] \ ⋃[inner]`.
    fn decompose(&self, space: Space, path: &mut Vec<Sym>, cyl: &mut Vec<Vec<Sym>>, carved: &mut Vec<Vec<Vec<Sym>>>) {
        match self {
            Node::Leaf(false) => {}
            Node::Leaf(true) => cyl.push(path.clone()),
            Node::Branch(kids, rest) => {
                let explicit: Vec<(Sym, &Node)> = match space {
                    Space::Cantor => vec![(0, &kids[0].1), (1, rest.as_ref())],
                    Space::Baire => kids.iter().map(|(k, c)| (*k, c)).collect(),
                };
                if space == Space::Baire {
                    match rest.as_ref() {
                        Node::Leaf(true) => {
                            let mut entry = vec![path.clone()];
                            entry.extend(kids.iter().map(|(k, _)| {
                                let mut w = path.clone();
                                w.push(*k);
                                w
                            }));
                            carved.push(entry);
                        }
                        Node::Leaf(false) => {}
                        Node::Branch(..) => unreachable!("Baire rest subtrees are leaves"),
                    }
                }
                for (k, c) in explicit {
                    path.push(k);
                    c.decompose(space, path, cyl, carved);
                    path.pop();
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Regions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "class", content = "size")]
pub enum Cardinality {
    Empty,
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersect,
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopoOp {
    Int,
    Cl,
    Deriv,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Region {
    space: Space,
    clopen: Node,
    plus: BTreeSet<BasePoint>,
    minus: BTreeSet<BasePoint>,
}

impl Region {
    pub fn empty(space: Space) -> Region {
        Region { space, clopen: Node::Leaf(false), plus: BTreeSet::new(), minus: BTreeSet::new() }
    }

    pub fn full(space: Space) -> Region {
        Region { clopen: Node::Leaf(true), ..Region::empty(space) }
    }

    pub fn cylinder(space: Space, stem: &[Sym]) -> Region {
        Region { clopen: Node::cylinder(space, stem), ..Region::empty(space) }
    }

    pub fn points(space: Space, pts: impl IntoIterator<Item = BasePoint>) -> Region {
        let plus: BTreeSet<BasePoint> = pts.into_iter().collect();
        assert!(plus.iter().all(|p| p.space == space), "point space mismatch");
        Region { plus, ..Region::empty(space) }
    }

    pub fn point(p: BasePoint) -> Region {
        Region::points(p.space, [p])
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn clopen_trie(&self) -> &Node {
        &self.clopen
    }

    /// The clopen part `K` as a region.
    pub fn clopen_part(&self) -> Region {
        Region { clopen: self.clopen.clone(), ..Region::empty(self.space) }
    }

    pub fn plus_points(&self) -> &BTreeSet<BasePoint> {
        &self.plus
    }

    pub fn minus_points(&self) -> &BTreeSet<BasePoint> {
        &self.minus
    }

    pub fn is_clopen(&self) -> bool {
        self.plus.is_empty() && self.minus.is_empty()
    }

    pub fn contains(&self, x: &BasePoint) -> bool {
        x.space == self.space && (self.plus.contains(x) || (self.clopen.contains(x) && !self.minus.contains(x)))
    }

    pub fn is_empty(&self) -> bool {
        self.clopen == Node::Leaf(false) && self.plus.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.clopen == Node::Leaf(true) && self.minus.is_empty()
    }

    /// Deepest stem length in the clopen part.
    pub fn depth(&self) -> usize {
        self.clopen.depth()
    }

    fn check(&self, other: &Region) -> Result<(), RegionError> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(RegionError::SpaceMismatch(self.space, other.space))
        }
    }

    /// Rebuild from a clopen part and a membership function on candidate points.
    fn with_points(space: Space, clopen: Node, candidates: impl IntoIterator<Item = BasePoint>, member: impl Fn(&BasePoint) -> bool) -> Region {
        let mut plus = BTreeSet::new();
        let mut minus = BTreeSet::new();
        for p in candidates {
            match (member(&p), clopen.contains(&p)) {
                (true, false) => {
                    plus.insert(p);
                }
                (false, true) => {
                    minus.insert(p);
                }
                _ => {}
            }
        }
        Region { space, clopen, plus, minus }
    }

    fn exceptional(&self) -> impl Iterator<Item = &BasePoint> {
        self.plus.iter().chain(&self.minus)
    }

    pub fn combine(&self, other: &Region, op: BoolOp) -> Result<Region, RegionError> {
        self.check(other)?;
        let f: fn(bool, bool) -> bool = match op {
            BoolOp::Union => |a, b| a || b,
            BoolOp::Intersect => |a, b| a && b,
            BoolOp::Difference => |a, b| a && !b,
        };
        let clopen = Node::merge(self.space, &self.clopen, &other.clopen, f);
        let candidates: Vec<BasePoint> = self.exceptional().chain(other.exceptional()).cloned().collect();
        Ok(Region::with_points(self.space, clopen, candidates, |p| f(self.contains(p), other.contains(p))))
    }

    pub fn union(&self, other: &Region) -> Result<Region, RegionError> {
        self.combine(other, BoolOp::Union)
    }

    pub fn intersect(&self, other: &Region) -> Result<Region, RegionError> {
        self.combine(other, BoolOp::Intersect)
    }

    pub fn difference(&self, other: &Region) -> Result<Region, RegionError> {
        self.combine(other, BoolOp::Difference)
    }

    pub fn complement(&self) -> Region {
        Region {
            space: self.space,
            clopen: self.clopen.negate(),
            plus: self.minus.clone(),
            minus: self.plus.clone(),
        }
    }

    pub fn is_subset(&self, other: &Region) -> Result<bool, RegionError> {
        Ok(self.difference(other)?.is_empty())
    }

    /// Finite sets are closed, so removed points stay removed.
    pub fn interior(&self) -> Region {
        Region { plus: BTreeSet::new(), ..self.clone() }
    }

    pub fn closure(&self) -> Region {
        Region { minus: BTreeSet::new(), ..self.clone() }
    }

    /// Every point of a non-empty clopen set is a limit of it, and finite
    /// sets have no limit points.
    pub fn derivative(&self) -> Region {
        self.clopen_part()
    }

    pub fn coderivative(&self) -> Region {
        self.clopen_part()
    }

    pub fn topo_operator(&self, op: TopoOp) -> Region {
        match op {
            TopoOp::Int => self.interior(),
            TopoOp::Cl => self.closure(),
            TopoOp::Deriv => self.derivative(),
        }
    }

    pub fn cardinality(&self) -> Cardinality {
        if self.clopen != Node::Leaf(false) {
            Cardinality::Infinite
        } else if self.plus.is_empty() {
            Cardinality::Empty
        } else {
            Cardinality::Finite(self.plus.len())
        }
    }

    /// Infimum of distances from `x` to the members.
    pub fn distance(&self, x: &BasePoint) -> Result<Distance, RegionError> {
        if x.space != self.space {
            return Err(RegionError::SpaceMismatch(x.space, self.space));
        }
        if self.is_empty() {
            return Err(RegionError::DistanceToEmpty);
        }
        // K \ minus has closure K, so removed points are still at distance 0
        let (depth, inside) = self.clopen.leaf_depth_along(x);
        let to_clopen = match (inside, &self.clopen) {
            (true, _) => Some(Distance::Zero),
            (false, Node::Leaf(false)) => None,
            (false, _) => Some(Distance::Pow2(depth as u32 - 1)),
        };
        let to_points = self.plus.iter().map(|p| x.distance(p).expect("same space"));
        Ok(to_clopen.into_iter().chain(to_points).min().expect("region is non-empty"))
    }

    /// Up to `k` distinct members.
    pub fn members(&self, k: usize) -> Vec<BasePoint> {
        let mut out: Vec<BasePoint> = self.plus.iter().take(k).cloned().collect();
        if let Some(stem) = self.clopen.some_true_path(self.space) {
            let mut n = 0u64;
            while out.len() < k {
                // stem · 1^n · 0^ω are pairwise distinct and all lie in K
                let mut w = stem.clone();
                w.extend(std::iter::repeat_n(1, n as usize));
                let p = BasePoint::zero_tail(self.space, &w);
                if !self.minus.contains(&p) {
                    out.push(p);
                }
                n += 1;
            }
        }
        out
    }

    /// Iterate `S ↦ ⋂ cl(A ∩ S)` from the full space until it stabilises.
    ///
    /// The iterates are decreasing and stay inside the finite algebra whose
    /// atoms are the cells of the common refinement of the clopen parts plus
    /// the exceptional points, so the limit is reached within that many
    /// steps. It is also the greatest `S` over all subsets, not just the
    /// definable ones: if `T ⊆ F(T)` and `T ⊆ S_i` then
    /// `T ⊆ F(T) ⊆ F(S_i) = S_{i+1}` by monotonicity.
    pub fn tangle(space: Space, sets: &[Region]) -> Result<Region, RegionError> {
        for s in sets {
            if s.space != space {
                return Err(RegionError::SpaceMismatch(space, s.space));
            }
        }
        let tries: Vec<&Node> = sets.iter().map(|s| &s.clopen).collect();
        let points: BTreeSet<&BasePoint> = sets.iter().flat_map(|s| s.exceptional()).collect();
        let budget = Node::refinement_cells(space, &tries) + points.len() + 2;
        let mut s = Region::full(space);
        for _ in 0..budget {
            let mut next = Region::full(space);
            for a in sets {
                next = next.intersect(&a.intersect(&s)?.closure())?;
            }
            if next == s {
                return Ok(s);
            }
            s = next;
        }
        Err(RegionError::BudgetExceeded(budget))
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Region, RegionError> {
        let raw: RegionJson = serde_json::from_value(v.clone()).map_err(|e| RegionError::Json(e.to_string()))?;
        raw.into_region(None)
    }

    pub fn from_json(text: &str) -> Result<Region, RegionError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| RegionError::Json(e.to_string()))?;
        Region::from_json_value(&v)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (mut cyl, mut carved) = (Vec::new(), Vec::new());
        self.clopen.decompose(self.space, &mut Vec::new(), &mut cyl, &mut carved);
        let fmt = |w: &Vec<Sym>| self.space.format_word(w);
        serde_json::json!({
            "space": self.space,
            "cylinders": cyl.iter().map(fmt).collect::<Vec<_>>(),
            "carved": carved.iter().map(|e| e.iter().map(fmt).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "plus": self.plus.iter().map(BasePoint::to_json).collect::<Vec<_>>(),
            "minus": self.minus.iter().map(BasePoint::to_json).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointJson {
    prefix: String,
    period: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionJson {
    #[serde(default)]
    space: Option<Space>,
    #[serde(default)]
    cylinders: Vec<String>,
    #[serde(default)]
    carved: Vec<Vec<String>>,
    #[serde(default)]
    plus: Vec<PointJson>,
    #[serde(default)]
    minus: Vec<PointJson>,
}

impl RegionJson {
    fn into_region(self, default_space: Option<Space>) -> Result<Region, RegionError> {
        let space = match (self.space, default_space) {
            (Some(s), Some(d)) if s != d => return Err(RegionError::SpaceMismatch(s, d)),
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => return Err(RegionError::Json("missing `space`".into())),
        };
        let mut r = Region::empty(space);
        for c in &self.cylinders {
            r = r.union(&Region::cylinder(space, &space.parse_word(c)?))?;
        }
        for entry in &self.carved {
            let (outer, inners) = entry
                .split_first()
                .ok_or_else(|| RegionError::Json("carved entry needs an outer cylinder".into()))?;
            let mut piece = Region::cylinder(space, &space.parse_word(outer)?);
            for inner in inners {
                piece = piece.difference(&Region::cylinder(space, &space.parse_word(inner)?))?;
            }
            r = r.union(&piece)?;
        }
        let pt = |p: &PointJson| BasePoint::parse(space, &p.prefix, &p.period);
        let plus = self.plus.iter().map(pt).collect::<Result<Vec<_>, _>>()?;
        let minus = self.minus.iter().map(pt).collect::<Result<Vec<_>, _>>()?;
        r = r.union(&Region::points(space, plus))?;
        r = r.difference(&Region::points(space, minus))?;
        Ok(r)
    }
}

// ---------------------------------------------------------------------------
// Models

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicModel {
    space: Space,
    h: BTreeMap<String, Region>,
}

impl SymbolicModel {
    pub fn new(space: Space, h: BTreeMap<String, Region>) -> Result<SymbolicModel, RegionError> {
        for r in h.values() {
            if r.space != space {
                return Err(RegionError::SpaceMismatch(space, r.space));
            }
        }
        Ok(SymbolicModel { space, h })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn valuation(&self, p: &str) -> Region {
        self.h.get(p).cloned().unwrap_or_else(|| Region::empty(self.space))
    }

    pub fn valuations(&self) -> &BTreeMap<String, Region> {
        &self.h
    }

    /// `{"space": .., "valuation": {"p": <region>, ..}}`; regions may omit
    /// their own `space`.
    pub fn from_json(text: &str) -> Result<SymbolicModel, RegionError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct ModelJson {
            space: Space,
            #[serde(default)]
            valuation: BTreeMap<String, RegionJson>,
        }
        let raw: ModelJson = serde_json::from_str(text).map_err(|e| RegionError::Json(e.to_string()))?;
        let h = raw
            .valuation
            .into_iter()
            .map(|(p, r)| Ok((p, r.into_region(Some(raw.space))?)))
            .collect::<Result<_, RegionError>>()?;
        SymbolicModel::new(raw.space, h)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let val: serde_json::Map<String, serde_json::Value> =
            self.h.iter().map(|(p, r)| (p.clone(), r.to_json())).collect();
        serde_json::json!({ "space": self.space, "valuation": val })
    }
}

/// Truth set of `f` as an exact region.
pub fn eval_symbolic(m: &SymbolicModel, f: &Formula) -> Result<Region, RegionError> {
    let sp = m.space;
    let global = |b: bool| if b { Region::full(sp) } else { Region::empty(sp) };
    Ok(match f {
        Formula::Atom(p) => m.valuation(p),
        Formula::Top => Region::full(sp),
        Formula::Neg(a) => eval_symbolic(m, a)?.complement(),
        Formula::And(a, b) => eval_symbolic(m, a)?.intersect(&eval_symbolic(m, b)?)?,
        Formula::Box(a) => eval_symbolic(m, a)?.interior(),
        Formula::CoDeriv(a) => eval_symbolic(m, a)?.coderivative(),
        Formula::Univ(a) => global(eval_symbolic(m, a)?.is_full()),
        Formula::DiffBox(a) => {
            let missing = eval_symbolic(m, a)?.complement();
            match missing.cardinality() {
                Cardinality::Empty => Region::full(sp),
                Cardinality::Finite(1) => missing,
                _ => Region::empty(sp),
            }
        }
        Formula::Count(n, a) => global(match eval_symbolic(m, a)?.cardinality() {
            Cardinality::Empty => false,
            Cardinality::Finite(k) => k > *n as usize,
            Cardinality::Infinite => true,
        }),
        Formula::Tangle(ds) => {
            let sets = ds.iter().map(|d| eval_symbolic(m, d)).collect::<Result<Vec<_>, _>>()?;
            Region::tangle(sp, &sets)?
        }
    })
}
