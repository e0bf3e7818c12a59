//! Finite Kripke frames and models.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;

pub type WorldSet = BTreeSet<usize>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KripkeError {
    #[error("duplicate world `{0}`")]
    DuplicateWorld(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("map is not defined on world `{0}`")]
    PartialMap(String),
    #[error("malformed model: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    worlds: Vec<String>,
    index: HashMap<String, usize>,
    succ: Vec<WorldSet>,
}

impl Frame {
    pub fn new<S: AsRef<str>>(worlds: &[S], edges: &[(S, S)]) -> Result<Frame, KripkeError> {
        let mut frame = Frame::with_worlds(worlds.iter().map(|w| w.as_ref().to_string()))?;
        for (a, b) in edges {
            let (a, b) = (frame.id(a.as_ref())?, frame.id(b.as_ref())?);
            frame.succ[a].insert(b);
        }
        Ok(frame)
    }

    /// Frame over worlds with no edges yet.
    pub fn with_worlds(worlds: impl IntoIterator<Item = String>) -> Result<Frame, KripkeError> {
        let worlds: Vec<String> = worlds.into_iter().collect();
        let mut index = HashMap::new();
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(KripkeError::DuplicateWorld(w.clone()));
            }
        }
        let succ = vec![WorldSet::new(); worlds.len()];
        Ok(Frame { worlds, index, succ })
    }

    /// Frame on worlds `0..n` named by their index.
    pub fn from_indices(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Frame {
        let mut frame = Frame::with_worlds((0..n).map(|i| i.to_string())).expect("distinct names");
        for (a, b) in edges {
            frame.succ[a].insert(b);
        }
        frame
    }

    /// `({0..n}, <=)`.
    pub fn chain(n: usize) -> Frame {
        Frame::from_indices(n + 1, (0..=n).flat_map(|i| (i..=n).map(move |j| (i, j))))
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        self.succ[a].insert(b);
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn name(&self, w: usize) -> &str {
        &self.worlds[w]
    }

    pub fn id(&self, name: &str) -> Result<usize, KripkeError> {
        self.index.get(name).copied().ok_or_else(|| KripkeError::UnknownWorld(name.to_string()))
    }

    pub fn succ(&self, w: usize) -> &WorldSet {
        &self.succ[w]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ.iter().enumerate().flat_map(|(a, s)| s.iter().map(move |&b| (a, b)))
    }

    pub fn all(&self) -> WorldSet {
        (0..self.len()).collect()
    }

    /// Subframe generated by `root`: the root plus everything reachable.
    pub fn generated(&self, root: usize) -> WorldSet {
        let mut seen = WorldSet::from([root]);
        let mut stack = vec![root];
        while let Some(w) = stack.pop() {
            for &v in &self.succ[w] {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameProperties {
    pub serial: bool,
    pub transitive: bool,
    pub reflexive: bool,
}

pub fn frame_properties(fr: &Frame) -> FrameProperties {
    let n = fr.len();
    let serial = (0..n).all(|w| !fr.succ(w).is_empty());
    let reflexive = (0..n).all(|w| fr.succ(w).contains(&w));
    let transitive = (0..n).all(|a| fr.succ(a).iter().all(|&b| fr.succ(b).is_subset(fr.succ(a))));
    FrameProperties { serial, transitive, reflexive }
}

/// Worlds where `f(R(w)) = R'(f(w))` fails.
pub fn pmorphism_violations(
    src: &Frame,
    dst: &Frame,
    map: &BTreeMap<String, String>,
) -> Result<Vec<String>, KripkeError> {
    let f = resolve_map(src, dst, map)?;
    Ok((0..src.len())
        .filter(|&w| {
            let image: WorldSet = src.succ(w).iter().map(|&v| f[v]).collect();
            &image != dst.succ(f[w])
        })
        .map(|w| src.name(w).to_string())
        .collect())
}

pub fn check_pmorphism(src: &Frame, dst: &Frame, map: &BTreeMap<String, String>) -> Result<bool, KripkeError> {
    Ok(pmorphism_violations(src, dst, map)?.is_empty())
}

fn resolve_map(src: &Frame, dst: &Frame, map: &BTreeMap<String, String>) -> Result<Vec<usize>, KripkeError> {
    for k in map.keys() {
        src.id(k)?;
    }
    src.worlds()
        .iter()
        .map(|w| {
            let target = map.get(w).ok_or_else(|| KripkeError::PartialMap(w.clone()))?;
            dst.id(target)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    pub frame: Frame,
    h: BTreeMap<String, WorldSet>,
}

impl KripkeModel {
    pub fn new(frame: Frame, h: BTreeMap<String, WorldSet>) -> Result<KripkeModel, KripkeError> {
        for set in h.values() {
            if let Some(&w) = set.iter().find(|&&w| w >= frame.len()) {
                return Err(KripkeError::UnknownWorld(w.to_string()));
            }
        }
        Ok(KripkeModel { frame, h })
    }

    /// Truth set of an atom; atoms without a valuation are false everywhere.
    pub fn valuation(&self, atom: &str) -> WorldSet {
        self.h.get(atom).cloned().unwrap_or_default()
    }

    pub fn valuations(&self) -> &BTreeMap<String, WorldSet> {
        &self.h
    }

    pub fn from_json(text: &str) -> Result<KripkeModel, KripkeError> {
        let raw: KripkeJson = serde_json::from_str(text).map_err(|e| KripkeError::Json(e.to_string()))?;
        raw.into_model()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let f = &self.frame;
        let edges: Vec<[String; 2]> = f.edges().map(|(a, b)| [f.name(a).into(), f.name(b).into()]).collect();
        let valuation: BTreeMap<&String, Vec<&str>> =
            self.h.iter().map(|(p, s)| (p, s.iter().map(|&w| f.name(w)).collect())).collect();
        serde_json::json!({ "worlds": f.worlds(), "edges": edges, "valuation": valuation })
    }
}

/// World names may be written as JSON strings or numbers.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WorldName {
    Str(String),
    Num(i64),
}

impl WorldName {
    pub fn into_string(self) -> String {
        match self {
            WorldName::Str(s) => s,
            WorldName::Num(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KripkeJson {
    worlds: Vec<WorldName>,
    #[serde(default)]
    edges: Vec<(WorldName, WorldName)>,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<WorldName>>,
}

impl KripkeJson {
    fn into_model(self) -> Result<KripkeModel, KripkeError> {
        let mut frame = Frame::with_worlds(self.worlds.into_iter().map(WorldName::into_string))?;
        for (a, b) in self.edges {
            let (a, b) = (frame.id(&a.into_string())?, frame.id(&b.into_string())?);
            frame.add_edge(a, b);
        }
        let mut h = BTreeMap::new();
        for (p, ws) in self.valuation {
            let set = ws.into_iter().map(|w| frame.id(&w.into_string())).collect::<Result<_, _>>()?;
            h.insert(p, set);
        }
        KripkeModel::new(frame, h)
    }
}

/// `{w : M, w |= f}`.
pub fn eval_kripke(m: &KripkeModel, f: &Formula) -> WorldSet {
    let fr = &m.frame;
    let all = || fr.all();
    let global = |holds: bool| if holds { all() } else { WorldSet::new() };
    match f {
        Formula::Atom(p) => m.valuation(p),
        Formula::Top => all(),
        Formula::Neg(a) => {
            let s = eval_kripke(m, a);
            all().difference(&s).copied().collect()
        }
        Formula::And(a, b) => {
            let s = eval_kripke(m, a);
            let t = eval_kripke(m, b);
            s.intersection(&t).copied().collect()
        }
        Formula::Box(a) | Formula::CoDeriv(a) => {
            let s = eval_kripke(m, a);
            (0..fr.len()).filter(|&w| fr.succ(w).is_subset(&s)).collect()
        }
        Formula::Univ(a) => global(eval_kripke(m, a).len() == fr.len()),
        Formula::DiffBox(a) => {
            let s = eval_kripke(m, a);
            let missing: Vec<usize> = (0..fr.len()).filter(|w| !s.contains(w)).collect();
            match missing.as_slice() {
                [] => all(),
                [only] => WorldSet::from([*only]),
                _ => WorldSet::new(),
            }
        }
        Formula::Count(n, a) => global(eval_kripke(m, a).len() > *n as usize),
        Formula::Tangle(ds) => tangle_lasso(m, ds),
    }
}

/// Worlds from which some infinite path meets every member of `ds`
/// infinitely often.
pub fn tangle_lasso(m: &KripkeModel, ds: &[Formula]) -> WorldSet {
    let sets: Vec<WorldSet> = ds.iter().map(|d| eval_kripke(m, d)).collect();
    tangle_of_sets(&m.frame, &sets)
}

/// Set-level tangle: a world qualifies when it reaches a strongly connected
/// component that has an internal edge and meets every set.
pub fn tangle_of_sets(fr: &Frame, sets: &[WorldSet]) -> WorldSet {
    let comp = scc(fr);
    let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut cyclic = vec![false; ncomp];
    for (a, b) in fr.edges() {
        if comp[a] == comp[b] {
            cyclic[comp[a]] = true;
        }
    }
    let mut hits = vec![vec![false; sets.len()]; ncomp];
    for (i, s) in sets.iter().enumerate() {
        for &w in s {
            hits[comp[w]][i] = true;
        }
    }
    let good: Vec<bool> = (0..ncomp).map(|c| cyclic[c] && hits[c].iter().all(|&h| h)).collect();

    // backwards reachability from good components
    let mut pred = vec![Vec::new(); fr.len()];
    for (a, b) in fr.edges() {
        pred[b].push(a);
    }
    let mut out: WorldSet = (0..fr.len()).filter(|&w| good[comp[w]]).collect();
    let mut stack: Vec<usize> = out.iter().copied().collect();
    while let Some(w) = stack.pop() {
        for &v in &pred[w] {
            if out.insert(v) {
                stack.push(v);
            }
        }
    }
    out
}

/// Tarjan's algorithm; returns a component id per world.
fn scc(fr: &Frame) -> Vec<usize> {
    struct St<'a> {
        fr: &'a Frame,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next: usize,
        ncomp: usize,
    }
    fn visit(st: &mut St<'_>, v: usize) {
        st.index[v] = Some(st.next);
        st.low[v] = st.next;
        st.next += 1;
        st.stack.push(v);
        st.on[v] = true;
        let succ: Vec<usize> = st.fr.succ(v).iter().copied().collect();
        for w in succ {
            match st.index[w] {
                None => {
                    visit(st, w);
                    st.low[v] = st.low[v].min(st.low[w]);
                }
                Some(iw) if st.on[w] => st.low[v] = st.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(st.low[v]) == st.index[v] {
            loop {
                let w = st.stack.pop().expect("tarjan stack");
                st.on[w] = false;
                st.comp[w] = st.ncomp;
                if w == v {
                    break;
                }
            }
            st.ncomp += 1;
        }
    }
    let n = fr.len();
    let mut st = St {
        fr,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        comp: vec![0; n],
        next: 0,
        ncomp: 0,
    };
    for v in 0..n {
        if st.index[v].is_none() {
            visit(&mut st, v);
        }
    }
    st.comp
}
