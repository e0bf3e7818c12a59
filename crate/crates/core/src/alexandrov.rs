//! Finite topological spaces (at most 64 points) and their semantics.
//!
//! A finite topology is determined by the least open neighbourhood of each
//! point, so that is what a [`FiniteSpace`] stores; every operator is a
//! quantifier over those neighbourhoods.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::formula::Formula;
use crate::kripke::WorldName;

pub const MAX_POINTS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("too many points ({0}); at most {MAX_POINTS} are supported")]
    TooManyPoints(usize),
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("not a preorder: {0}")]
    NotPreorder(String),
    #[error("empty tangle list")]
    EmptyTangle,
    #[error("malformed space: {0}")]
    Json(String),
}

/// Subset of the points `0..64` as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointSet(pub u64);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn full(n: usize) -> PointSet {
        if n >= 64 {
            PointSet(u64::MAX)
        } else {
            PointSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> PointSet {
        PointSet(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn union(self, o: PointSet) -> PointSet {
        PointSet(self.0 | o.0)
    }

    pub fn inter(self, o: PointSet) -> PointSet {
        PointSet(self.0 & o.0)
    }

    pub fn minus(self, o: PointSet) -> PointSet {
        PointSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: PointSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }
}

impl FromIterator<usize> for PointSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = PointSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopoOp {
    Int,
    Cl,
    Deriv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    points: Vec<String>,
    /// Least open neighbourhood of each point.
    nbhd: Vec<PointSet>,
}

impl FiniteSpace {
    /// Alexandrov space of a preorder given as `(a, b)` pairs meaning `a <= b`;
    /// opens are the up-sets.
    pub fn from_preorder(points: Vec<String>, le: &[(String, String)]) -> Result<FiniteSpace, SpaceError> {
        let index = index_points(&points)?;
        let n = points.len();
        let mut up = vec![PointSet::EMPTY; n];
        for (a, b) in le {
            let (a, b) = (lookup(&index, a)?, lookup(&index, b)?);
            up[a].insert(b);
        }
        for (a, ups) in up.iter().enumerate() {
            if !ups.contains(a) {
                return Err(SpaceError::NotPreorder(format!("missing reflexive pair for `{}`", points[a])));
            }
            for b in ups.iter() {
                if !up[b].is_subset(*ups) {
                    return Err(SpaceError::NotPreorder(format!(
                        "`{}` <= `{}` but not transitively closed",
                        points[a], points[b]
                    )));
                }
            }
        }
        Ok(FiniteSpace { points, nbhd: up })
    }

    /// Topology generated by an arbitrary family of subsets.
    pub fn from_opens(points: Vec<String>, family: &[Vec<String>]) -> Result<FiniteSpace, SpaceError> {
        let index = index_points(&points)?;
        let sets = family
            .iter()
            .map(|o| o.iter().map(|p| lookup(&index, p)).collect::<Result<PointSet, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FiniteSpace::from_family(points, &sets))
    }

    /// Topology generated by a family of index sets.
    pub fn from_family(points: Vec<String>, family: &[PointSet]) -> FiniteSpace {
        let n = points.len();
        assert!(n <= MAX_POINTS, "at most {MAX_POINTS} points");
        let full = PointSet::full(n);
        let nbhd = (0..n)
            .map(|x| family.iter().filter(|o| o.contains(x)).fold(full, |acc, o| acc.inter(*o)))
            .collect();
        FiniteSpace { points, nbhd }
    }

    /// Points named `0..n` with topology generated by `family`.
    pub fn indexed(n: usize, family: &[PointSet]) -> FiniteSpace {
        FiniteSpace::from_family((0..n).map(|i| i.to_string()).collect(), family)
    }

    pub fn discrete(n: usize) -> FiniteSpace {
        let singletons: Vec<PointSet> = (0..n).map(PointSet::singleton).collect();
        FiniteSpace::indexed(n, &singletons)
    }

    /// Up-set topology of a preorder on `0..n` given by `le(a, b)`.
    pub fn from_le(n: usize, le: impl Fn(usize, usize) -> bool) -> FiniteSpace {
        let nbhd = (0..n).map(|a| (0..n).filter(|&b| le(a, b)).collect()).collect();
        FiniteSpace { points: (0..n).map(|i| i.to_string()).collect(), nbhd }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn full(&self) -> PointSet {
        PointSet::full(self.len())
    }

    pub fn nbhd(&self, x: usize) -> PointSet {
        self.nbhd[x]
    }

    pub fn index_of(&self, name: &str) -> Result<usize, SpaceError> {
        self.points.iter().position(|p| p == name).ok_or_else(|| SpaceError::UnknownPoint(name.into()))
    }

    pub fn is_open(&self, a: PointSet) -> bool {
        a.iter().all(|x| self.nbhd[x].is_subset(a))
    }

    pub fn is_closed(&self, a: PointSet) -> bool {
        self.is_open(self.full().minus(a))
    }

    /// All open sets, sorted.
    pub fn opens(&self) -> Vec<PointSet> {
        let mut acc = BTreeSet::from([PointSet::EMPTY]);
        for &nb in &self.nbhd {
            let more: Vec<PointSet> = acc.iter().map(|o| o.union(nb)).collect();
            acc.extend(more);
        }
        acc.into_iter().collect()
    }

    /// All clopen sets, sorted.
    pub fn clopens(&self) -> Vec<PointSet> {
        self.opens().into_iter().filter(|&o| self.is_closed(o)).collect()
    }

    /// True when the clopen sets form a base, i.e. every least neighbourhood is
    /// closed.
    pub fn clopens_form_base(&self) -> bool {
        self.nbhd.iter().all(|&nb| self.is_closed(nb))
    }

    pub fn interior(&self, a: PointSet) -> PointSet {
        (0..self.len()).filter(|&x| self.nbhd[x].is_subset(a)).collect()
    }

    pub fn closure(&self, a: PointSet) -> PointSet {
        (0..self.len()).filter(|&x| !self.nbhd[x].inter(a).is_empty()).collect()
    }

    /// Points every neighbourhood of which meets `a` away from the point.
    pub fn derivative(&self, a: PointSet) -> PointSet {
        (0..self.len())
            .filter(|&x| !self.nbhd[x].inter(a).minus(PointSet::singleton(x)).is_empty())
            .collect()
    }

    /// Points with a punctured neighbourhood inside `a`.
    pub fn coderivative(&self, a: PointSet) -> PointSet {
        (0..self.len())
            .filter(|&x| self.nbhd[x].minus(PointSet::singleton(x)).is_subset(a))
            .collect()
    }

    pub fn topo_operator(&self, a: PointSet, op: TopoOp) -> PointSet {
        match op {
            TopoOp::Int => self.interior(a),
            TopoOp::Cl => self.closure(a),
            TopoOp::Deriv => self.derivative(a),
        }
    }

    /// Largest `S` with `S ⊆ ⋂ cl(A ∩ S)` over the given sets.
    pub fn tangled_closure_fixpoint(&self, sets: &[PointSet]) -> Result<PointSet, SpaceError> {
        if sets.is_empty() {
            return Err(SpaceError::EmptyTangle);
        }
        let mut s = self.full();
        loop {
            let next = sets.iter().fold(self.full(), |acc, &a| acc.inter(self.closure(a.inter(s))));
            if next == s {
                return Ok(s);
            }
            s = next;
        }
    }

    pub fn from_json(text: &str) -> Result<FiniteSpace, SpaceError> {
        let raw: SpaceJson = serde_json::from_str(text).map_err(|e| SpaceError::Json(e.to_string()))?;
        raw.into_space()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let opens: Vec<Vec<&str>> =
            self.opens().into_iter().map(|o| o.iter().map(|i| self.points[i].as_str()).collect()).collect();
        serde_json::json!({ "points": self.points, "opens": opens })
    }

    pub fn set_names(&self, a: PointSet) -> Vec<&str> {
        a.iter().map(|i| self.points[i].as_str()).collect()
    }
}

fn index_points(points: &[String]) -> Result<BTreeMap<String, usize>, SpaceError> {
    if points.len() > MAX_POINTS {
        return Err(SpaceError::TooManyPoints(points.len()));
    }
    let mut index = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        if index.insert(p.clone(), i).is_some() {
            return Err(SpaceError::DuplicatePoint(p.clone()));
        }
    }
    Ok(index)
}

fn lookup(index: &BTreeMap<String, usize>, p: &str) -> Result<usize, SpaceError> {
    index.get(p).copied().ok_or_else(|| SpaceError::UnknownPoint(p.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceJson {
    #[serde(default)]
    points: Option<Vec<WorldName>>,
    #[serde(default)]
    opens: Option<Vec<Vec<WorldName>>>,
    #[serde(default)]
    preorder: Option<Vec<(WorldName, WorldName)>>,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<WorldName>>,
}

impl SpaceJson {
    fn into_space(self) -> Result<FiniteSpace, SpaceError> {
        Ok(self.into_parts()?.0)
    }

    fn into_parts(self) -> Result<(FiniteSpace, BTreeMap<String, Vec<String>>), SpaceError> {
        let names = |v: Vec<WorldName>| v.into_iter().map(WorldName::into_string).collect::<Vec<_>>();
        let valuation = self.valuation.into_iter().map(|(p, v)| (p, names(v))).collect();
        let space = match (self.opens, self.preorder) {
            (Some(opens), None) => {
                let points = names(self.points.ok_or_else(|| SpaceError::Json("`opens` needs `points`".into()))?);
                let family: Vec<Vec<String>> = opens.into_iter().map(names).collect();
                FiniteSpace::from_opens(points, &family)?
            }
            (None, Some(pairs)) => {
                let pairs: Vec<(String, String)> =
                    pairs.into_iter().map(|(a, b)| (a.into_string(), b.into_string())).collect();
                let points = match self.points {
                    Some(p) => names(p),
                    None => {
                        let mut seen = Vec::new();
                        for (a, b) in &pairs {
                            for x in [a, b] {
                                if !seen.contains(x) {
                                    seen.push(x.clone());
                                }
                            }
                        }
                        seen
                    }
                };
                FiniteSpace::from_preorder(points, &pairs)?
            }
            _ => return Err(SpaceError::Json("exactly one of `opens` or `preorder` is required".into())),
        };
        Ok((space, valuation))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteModel {
    pub space: FiniteSpace,
    h: BTreeMap<String, PointSet>,
}

impl FiniteModel {
    pub fn new(space: FiniteSpace, h: BTreeMap<String, PointSet>) -> Result<FiniteModel, SpaceError> {
        for s in h.values() {
            if !s.is_subset(space.full()) {
                return Err(SpaceError::UnknownPoint(format!("{s:?}")));
            }
        }
        Ok(FiniteModel { space, h })
    }

    pub fn valuation(&self, p: &str) -> PointSet {
        self.h.get(p).copied().unwrap_or_default()
    }

    pub fn valuations(&self) -> &BTreeMap<String, PointSet> {
        &self.h
    }

    pub fn from_json(text: &str) -> Result<FiniteModel, SpaceError> {
        let raw: SpaceJson = serde_json::from_str(text).map_err(|e| SpaceError::Json(e.to_string()))?;
        let (space, val) = raw.into_parts()?;
        let mut h = BTreeMap::new();
        for (p, pts) in val {
            let set = pts.iter().map(|x| space.index_of(x)).collect::<Result<PointSet, _>>()?;
            h.insert(p, set);
        }
        FiniteModel::new(space, h)
    }
}

/// Truth set of `f`.
pub fn eval_finite_topo(m: &FiniteModel, f: &Formula) -> PointSet {
    let sp = &m.space;
    let full = sp.full();
    let global = |b: bool| if b { full } else { PointSet::EMPTY };
    match f {
        Formula::Atom(p) => m.valuation(p),
        Formula::Top => full,
        Formula::Neg(a) => full.minus(eval_finite_topo(m, a)),
        Formula::And(a, b) => eval_finite_topo(m, a).inter(eval_finite_topo(m, b)),
        Formula::Box(a) => sp.interior(eval_finite_topo(m, a)),
        Formula::CoDeriv(a) => sp.coderivative(eval_finite_topo(m, a)),
        Formula::Univ(a) => global(eval_finite_topo(m, a) == full),
        Formula::DiffBox(a) => {
            let missing = full.minus(eval_finite_topo(m, a));
            match missing.len() {
                0 => full,
                1 => missing,
                _ => PointSet::EMPTY,
            }
        }
        Formula::Count(n, a) => global(eval_finite_topo(m, a).len() > *n as usize),
        Formula::Tangle(ds) => {
            let sets: Vec<PointSet> = ds.iter().map(|d| eval_finite_topo(m, d)).collect();
            sp.tangled_closure_fixpoint(&sets).expect("tangle sets are non-empty")
        }
    }
}
