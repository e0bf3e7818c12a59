//! Reference semantics written directly from the definitions, without the
//! library's evaluators.

use std::collections::{BTreeMap, VecDeque};

use topomodal::region::{BasePoint, Region, Space, Sym};
use topomodal::Formula;

pub fn full(n: usize) -> u64 {
    (1u64 << n) - 1
}

// ---------------------------------------------------------------------------
// Kripke frames

pub struct Frame {
    pub succ: Vec<Vec<usize>>,
}

impl Frame {
    pub fn from_mask(n: usize, rel: u64) -> Frame {
        Frame { succ: (0..n).map(|a| (0..n).filter(|&b| rel >> (a * n + b) & 1 == 1).collect()).collect() }
    }

    pub fn n(&self) -> usize {
        self.succ.len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n()).flat_map(|a| self.succ[a].iter().map(move |&b| (a, b))).collect()
    }

    fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut parent = vec![usize::MAX; self.n()];
        let mut queue = VecDeque::from([from]);
        parent[from] = from;
        while let Some(v) = queue.pop_front() {
            if v == to {
                let mut p = vec![v];
                let mut c = v;
                while c != from {
                    c = parent[c];
                    p.push(c);
                }
                p.reverse();
                return Some(p);
            }
            for &u in &self.succ[v] {
                if parent[u] == usize::MAX {
                    parent[u] = v;
                    queue.push_back(u);
                }
            }
        }
        None
    }

    /// A closed walk from `u` of length >= 1 meeting every set, found by
    /// search over (world, sets met so far).
    fn cycle(&self, u: usize, sets: &[u64]) -> Option<Vec<usize>> {
        let mark = |v: usize| (0..sets.len()).filter(|&i| sets[i] >> v & 1 == 1).fold(0usize, |m, i| m | 1 << i);
        let goal = (1usize << sets.len()) - 1;
        let width = 1usize << sets.len();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.n() * width];
        let mut queue = VecDeque::new();
        let start = mark(u);
        for &v in &self.succ[u] {
            let s = (v, start | mark(v));
            if parent[s.0 * width + s.1].is_none() {
                parent[s.0 * width + s.1] = Some((u, usize::MAX));
                queue.push_back(s);
            }
        }
        while let Some((v, m)) = queue.pop_front() {
            if v == u && m == goal {
                let mut walk = vec![v];
                let mut cur = (v, m);
                while let Some((pv, pm)) = parent[cur.0 * width + cur.1] {
                    walk.push(pv);
                    if pm == usize::MAX {
                        break;
                    }
                    cur = (pv, pm);
                }
                walk.reverse();
                return Some(walk);
            }
            for &w in &self.succ[v] {
                let s = (w, m | mark(w));
                if parent[s.0 * width + s.1].is_none() {
                    parent[s.0 * width + s.1] = Some((v, m));
                    queue.push_back(s);
                }
            }
        }
        None
    }

    /// An explicit lasso from `w`: a stem to `u` and a closed walk at `u`.
    pub fn lasso(&self, w: usize, sets: &[u64]) -> Option<(Vec<usize>, Vec<usize>)> {
        for u in 0..self.n() {
            if let Some(stem) = self.path(w, u) {
                if let Some(cyc) = self.cycle(u, sets) {
                    return Some((stem, cyc));
                }
            }
        }
        None
    }

    /// Check a lasso edge by edge.
    pub fn lasso_valid(&self, w: usize, stem: &[usize], cyc: &[usize], sets: &[u64]) -> bool {
        let walk_ok = |p: &[usize]| p.windows(2).all(|e| self.succ[e[0]].contains(&e[1]));
        let hit = sets.iter().all(|s| cyc.iter().any(|&v| s >> v & 1 == 1));
        stem.first() == Some(&w)
            && stem.last() == cyc.first()
            && cyc.len() >= 2
            && cyc.first() == cyc.last()
            && walk_ok(stem)
            && walk_ok(cyc)
            && hit
    }

    pub fn tangle(&self, sets: &[u64]) -> u64 {
        (0..self.n())
            .filter(|&w| match self.lasso(w, sets) {
                Some((stem, cyc)) => {
                    assert!(self.lasso_valid(w, &stem, &cyc, sets), "lasso search returned a broken lasso");
                    true
                }
                None => false,
            })
            .fold(0, |m, w| m | 1 << w)
    }

    /// Union of all `X` with every point of `X` reaching `s ∩ X` in one or
    /// more steps, for every `s`.
    pub fn tangle_postfix(&self, sets: &[u64]) -> u64 {
        let n = self.n();
        let mut plus = vec![0u64; n];
        for a in 0..n {
            for &b in &self.succ[a] {
                plus[a] |= 1 << b;
            }
        }
        for k in 0..n {
            for a in 0..n {
                if plus[a] >> k & 1 == 1 {
                    plus[a] |= plus[k];
                }
            }
        }
        (0..=full(n))
            .filter(|&x| (0..n).filter(|&a| x >> a & 1 == 1).all(|a| sets.iter().all(|s| plus[a] & s & x != 0)))
            .fold(0, |m, x| m | x)
    }

    pub fn serial(&self) -> bool {
        self.succ.iter().all(|s| !s.is_empty())
    }

    pub fn transitive(&self) -> bool {
        (0..self.n()).all(|a| self.succ[a].iter().all(|&b| self.succ[b].iter().all(|c| self.succ[a].contains(c))))
    }
}

/// Kripke truth with `[]` and `[d]` both read along the relation.
pub fn kripke(fr: &Frame, h: &BTreeMap<String, u64>, f: &Formula) -> u64 {
    let n = fr.n();
    let all = full(n);
    let ev = |g: &Formula| kripke(fr, h, g);
    let global = |b: bool| if b { all } else { 0 };
    match f {
        Formula::Atom(p) => h.get(p).copied().unwrap_or(0),
        Formula::Top => all,
        Formula::Neg(a) => all & !ev(a),
        Formula::And(a, b) => ev(a) & ev(b),
        Formula::Box(a) | Formula::CoDeriv(a) => {
            let s = ev(a);
            (0..n).filter(|&w| fr.succ[w].iter().all(|&v| s >> v & 1 == 1)).fold(0, |m, w| m | 1 << w)
        }
        Formula::Univ(a) => global(ev(a) == all),
        Formula::DiffBox(a) => {
            let s = ev(a);
            (0..n).filter(|&x| (0..n).all(|y| y == x || s >> y & 1 == 1)).fold(0, |m, x| m | 1 << x)
        }
        Formula::Count(k, a) => global(ev(a).count_ones() > u32::from(*k)),
        Formula::Tangle(ds) => {
            let sets: Vec<u64> = ds.iter().map(ev).collect();
            fr.tangle(&sets)
        }
    }
}

// ---------------------------------------------------------------------------
// Finite topologies as lists of open sets

pub struct Topo {
    pub n: usize,
    pub opens: Vec<u64>,
}

impl Topo {
    /// Up-sets of a preorder given as a matrix.
    pub fn from_le(n: usize, le: &[Vec<bool>]) -> Topo {
        let opens = (0..=full(n))
            .filter(|&u| (0..n).all(|x| u >> x & 1 == 0 || (0..n).all(|y| !le[x][y] || u >> y & 1 == 1)))
            .collect();
        Topo { n, opens }
    }

    /// Unions of blocks of a partition.
    pub fn from_blocks(n: usize, blocks: &[u64]) -> Topo {
        let opens = (0u64..1 << blocks.len())
            .map(|m| (0..blocks.len()).filter(|&i| m >> i & 1 == 1).fold(0, |a, i| a | blocks[i]))
            .collect();
        Topo { n, opens }
    }

    pub fn interior(&self, s: u64) -> u64 {
        self.opens.iter().filter(|&&o| o & !s == 0).fold(0, |a, &o| a | o)
    }

    pub fn closure(&self, s: u64) -> u64 {
        full(self.n) & !self.interior(full(self.n) & !s)
    }

    /// `x` is a limit of `s`: every open around `x` meets `s` off `x`.
    pub fn derivative(&self, s: u64) -> u64 {
        (0..self.n)
            .filter(|&x| self.opens.iter().filter(|&&o| o >> x & 1 == 1).all(|&o| o & s & !(1 << x) != 0))
            .fold(0, |a, x| a | 1 << x)
    }

    pub fn tangle(&self, sets: &[u64]) -> u64 {
        (0..=full(self.n))
            .filter(|&x| sets.iter().all(|&s| x & !self.closure(s & x) == 0))
            .fold(0, |a, x| a | x)
    }
}

pub fn topo(sp: &Topo, h: &BTreeMap<String, u64>, f: &Formula) -> u64 {
    let all = full(sp.n);
    let ev = |g: &Formula| topo(sp, h, g);
    let global = |b: bool| if b { all } else { 0 };
    match f {
        Formula::Atom(p) => h.get(p).copied().unwrap_or(0),
        Formula::Top => all,
        Formula::Neg(a) => all & !ev(a),
        Formula::And(a, b) => ev(a) & ev(b),
        Formula::Box(a) => sp.interior(ev(a)),
        Formula::CoDeriv(a) => all & !sp.derivative(all & !ev(a)),
        Formula::Univ(a) => global(ev(a) == all),
        Formula::DiffBox(a) => {
            let s = ev(a);
            (0..sp.n).filter(|&x| (0..sp.n).all(|y| y == x || s >> y & 1 == 1)).fold(0, |m, x| m | 1 << x)
        }
        Formula::Count(k, a) => global(ev(a).count_ones() > u32::from(*k)),
        Formula::Tangle(ds) => {
            let sets: Vec<u64> = ds.iter().map(ev).collect();
            sp.tangle(&sets)
        }
    }
}

// ---------------------------------------------------------------------------
// Regions by construction

#[derive(Debug, Clone)]
pub enum Shape {
    Cyl(Vec<Sym>),
    Pt(BasePoint),
    Union(Box<Shape>, Box<Shape>),
    Minus(Box<Shape>, Box<Shape>),
    Comp(Box<Shape>),
}

impl Shape {
    pub fn contains(&self, x: &BasePoint) -> bool {
        match self {
            Shape::Cyl(s) => s.iter().enumerate().all(|(i, &c)| x.at(i) == c),
            Shape::Pt(p) => p == x,
            Shape::Union(a, b) => a.contains(x) || b.contains(x),
            Shape::Minus(a, b) => a.contains(x) && !b.contains(x),
            Shape::Comp(a) => !a.contains(x),
        }
    }

    pub fn build(&self, space: Space) -> Region {
        match self {
            Shape::Cyl(s) => Region::cylinder(space, s),
            Shape::Pt(p) => Region::point(p.clone()),
            Shape::Union(a, b) => a.build(space).union(&b.build(space)).unwrap(),
            Shape::Minus(a, b) => a.build(space).difference(&b.build(space)).unwrap(),
            Shape::Comp(a) => a.build(space).complement(),
        }
    }
}

pub fn alphabet(space: Space) -> Sym {
    match space {
        Space::Cantor => 2,
        Space::Baire => 5,
    }
}

/// Points other than `x` agreeing with it on the first `n` symbols.
pub fn near(x: &BasePoint, n: usize) -> Vec<BasePoint> {
    let space = x.space();
    let mut out = Vec::new();
    for m in n..n + 12 {
        let mut stem = x.take(m);
        stem.push((x.at(m) + 1) % alphabet(space));
        for t in [vec![0], vec![1], vec![0, 1]] {
            out.push(BasePoint::new(space, stem.clone(), t).unwrap());
        }
    }
    out
}

/// Every cylinder around `x` of length up to 20 holds another member.
pub fn is_limit(s: &Shape, x: &BasePoint) -> bool {
    (0..=20).all(|n| near(x, n).iter().any(|y| s.contains(y)))
}

/// First index where two points differ, within a fixed window.
pub fn lcp(x: &BasePoint, y: &BasePoint) -> Option<usize> {
    (0..256).find(|&i| x.at(i) != y.at(i))
}

// ---------------------------------------------------------------------------
// Dissection pieces

pub fn first_nonzero(x: &BasePoint, from: usize) -> Option<usize> {
    (from..from + 128).find(|&i| x.at(i) != 0)
}

/// Part owning ring `r`: residue for `k` parts, first coordinate of the
/// inverse Cantor pairing otherwise.
pub fn ring_owner(k: Option<u64>, r: u64) -> u64 {
    match k {
        Some(k) => r % k,
        None => {
            let mut s = 0;
            loop {
                let base = s * (s + 1) / 2;
                if r < base + s + 1 {
                    return s - (r - base);
                }
                s += 1;
            }
        }
    }
}

/// `None` outside `[stem]`, `Some(None)` on the boundary, `Some(Some(i))`
/// in part `i`.
pub fn piece(stem: &[Sym], len: usize, k: Option<u64>, x: &BasePoint) -> Option<Option<u64>> {
    if x.take(stem.len()) != stem {
        return None;
    }
    Some(first_nonzero(x, len).map(|q| ring_owner(k, (q - len) as u64)))
}

// ---------------------------------------------------------------------------
// Finite and cofinite sets of Cantor points

/// `pts` itself, or its complement when `co` is set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Fin {
    pub pts: std::collections::BTreeSet<BasePoint>,
    pub co: bool,
}

impl Fin {
    fn none() -> Fin {
        Fin { pts: Default::default(), co: false }
    }

    fn all() -> Fin {
        Fin { pts: Default::default(), co: true }
    }

    fn not(self) -> Fin {
        Fin { pts: self.pts, co: !self.co }
    }

    fn and(self, o: Fin) -> Fin {
        match (self.co, o.co) {
            (false, false) => Fin { pts: self.pts.intersection(&o.pts).cloned().collect(), co: false },
            (false, true) => Fin { pts: self.pts.difference(&o.pts).cloned().collect(), co: false },
            (true, false) => Fin { pts: o.pts.difference(&self.pts).cloned().collect(), co: false },
            (true, true) => Fin { pts: self.pts.union(&o.pts).cloned().collect(), co: true },
        }
    }

    pub fn is_full(&self) -> bool {
        self.co && self.pts.is_empty()
    }

}

/// Truth sets over a perfect space where every atom denotes a finite set.
/// Finite sets have no limit points and cofinite ones are dense.
pub fn eval_fin(h: &BTreeMap<String, Fin>, f: &Formula) -> Option<Fin> {
    let ev = |g: &Formula| eval_fin(h, g);
    let global = |b: bool| if b { Fin::all() } else { Fin::none() };
    Some(match f {
        Formula::Atom(p) => h.get(p).cloned().unwrap_or_else(Fin::none),
        Formula::Top => Fin::all(),
        Formula::Neg(a) => ev(a)?.not(),
        Formula::And(a, b) => ev(a)?.and(ev(b)?),
        Formula::CoDeriv(a) => {
            // [d]S = ~<d>~S
            let comp = ev(a)?.not();
            global(comp.co).not()
        }
        Formula::Univ(a) => global(ev(a)?.is_full()),
        _ => return None,
    })
}
