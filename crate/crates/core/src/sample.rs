//! Random instances for property sweeps.
//!
//! Every generator takes the caller's RNG so sweeps are reproducible from a
//! seed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::alexandrov::{FiniteModel, FiniteSpace, PointSet};
use crate::formula::{Formula, Fragment};
use crate::kripke::{Frame, KripkeModel, WorldSet};
use crate::region::{BasePoint, Region, Space, SymbolicModel, Sym};

/// Random formulas over fixed atoms with tree height at most `depth`.
#[derive(Debug, Clone)]
pub struct FormulaGen {
    pub atoms: Vec<String>,
    pub depth: usize,
    /// Modal connectives that may appear.
    pub allowed: Fragment,
    /// Largest grade for `<c n>`.
    pub max_count: u16,
}

impl FormulaGen {
    pub fn new(atoms: &[&str], depth: usize, allowed: Fragment) -> FormulaGen {
        FormulaGen { atoms: atoms.iter().map(|a| a.to_string()).collect(), depth, allowed, max_count: 2 }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Formula {
        self.at(rng, self.depth)
    }

    fn leaf<R: Rng>(&self, rng: &mut R) -> Formula {
        match rng.gen_range(0..10) {
            0 => Formula::Top,
            1 => Formula::bot(),
            _ => Formula::atom(self.atoms.choose(rng).expect("at least one atom").clone()),
        }
    }

    fn at<R: Rng>(&self, rng: &mut R, depth: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.2) {
            return self.leaf(rng);
        }
        let a = self.allowed;
        let mut modal: Vec<u8> = Vec::new();
        for (on, tag) in [
            (a.uses_box, 0),
            (a.uses_coderiv, 1),
            (a.uses_univ, 2),
            (a.uses_diff, 3),
            (a.uses_count, 4),
            (a.uses_tangle, 5),
        ] {
            if on {
                modal.push(tag);
            }
        }
        let sub = |rng: &mut R| self.at(rng, depth - 1);
        let pick = rng.gen_range(0..4 + 2 * modal.len());
        match pick {
            0 => Formula::not(sub(rng)),
            1 => Formula::and(sub(rng), sub(rng)),
            2 => Formula::or(sub(rng), sub(rng)),
            3 => Formula::implies(sub(rng), sub(rng)),
            _ => {
                let g = sub(rng);
                let g = if rng.gen_bool(0.5) { g } else { Formula::not(g) };
                let f = match modal[(pick - 4) / 2] {
                    0 => Formula::boxed(g),
                    1 => Formula::coderiv(g),
                    2 => Formula::univ(g),
                    3 => Formula::diff_box(g),
                    4 => Formula::count(rng.gen_range(0..=self.max_count), g),
                    _ => {
                        let h = sub(rng);
                        Formula::tangle([g, h]).expect("non-empty")
                    }
                };
                if rng.gen_bool(0.5) {
                    f
                } else {
                    Formula::not(f)
                }
            }
        }
    }
}

pub fn random_subset<R: Rng>(rng: &mut R, n: usize) -> PointSet {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

pub fn random_world_set<R: Rng>(rng: &mut R, n: usize) -> WorldSet {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

fn closure(n: usize, mut rel: Vec<Vec<bool>>, reflexive: bool) -> Vec<Vec<bool>> {
    if reflexive {
        (0..n).for_each(|i| rel[i][i] = true);
    }
    for k in 0..n {
        for i in 0..n {
            if rel[i][k] {
                for j in 0..n {
                    if rel[k][j] {
                        rel[i][j] = true;
                    }
                }
            }
        }
    }
    rel
}

fn random_relation<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<Vec<bool>> {
    (0..n).map(|_| (0..n).map(|_| rng.gen_bool(p)).collect()).collect()
}

/// Any relation on `n` worlds.
pub fn random_frame<R: Rng>(rng: &mut R, n: usize) -> Frame {
    let p = rng.gen_range(0.1..0.6);
    let rel = random_relation(rng, n, p);
    Frame::from_indices(n, edges(&rel))
}

/// A serial transitive relation on `n` worlds.
pub fn random_kd4_frame<R: Rng>(rng: &mut R, n: usize) -> Frame {
    let p = rng.gen_range(0.1..0.5);
    let mut rel = random_relation(rng, n, p);
    for i in 0..n {
        if !rel[i].iter().any(|&b| b) {
            let j = rng.gen_range(0..n);
            rel[i][j] = true;
        }
    }
    Frame::from_indices(n, edges(&closure(n, rel, false)))
}

fn edges(rel: &[Vec<bool>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, row) in rel.iter().enumerate() {
        for (j, &b) in row.iter().enumerate() {
            if b {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn random_kripke_model<R: Rng>(rng: &mut R, frame: Frame, atoms: &[&str]) -> KripkeModel {
    let n = frame.len();
    let h = atoms.iter().map(|a| (a.to_string(), random_world_set(rng, n))).collect();
    KripkeModel::new(frame, h).expect("valuation inside the frame")
}

/// Alexandrov space of a random preorder.
pub fn random_preorder_space<R: Rng>(rng: &mut R, n: usize) -> FiniteSpace {
    let p = rng.gen_range(0.0..0.5);
    let rel = closure(n, random_relation(rng, n, p), true);
    FiniteSpace::from_le(n, |a, b| rel[a][b])
}

/// Space whose opens are the unions of blocks of a random partition; the
/// clopens of such a space form a base.
pub fn random_partition_space<R: Rng>(rng: &mut R, n: usize) -> FiniteSpace {
    let blocks = rng.gen_range(1..=n.max(1));
    let mut family = vec![PointSet::EMPTY; blocks];
    for x in 0..n {
        family[rng.gen_range(0..blocks)].insert(x);
    }
    family.retain(|b| !b.is_empty());
    FiniteSpace::indexed(n, &family)
}

pub fn random_finite_model<R: Rng>(rng: &mut R, space: FiniteSpace, atoms: &[&str]) -> FiniteModel {
    let n = space.len();
    let h = atoms.iter().map(|a| (a.to_string(), random_subset(rng, n))).collect();
    FiniteModel::new(space, h).expect("valuation inside the space")
}

fn random_symbol<R: Rng>(rng: &mut R, space: Space) -> Sym {
    match space {
        Space::Cantor => rng.gen_range(0..2),
        Space::Baire => rng.gen_range(0..4),
    }
}

pub fn random_word<R: Rng>(rng: &mut R, space: Space, len: usize) -> Vec<Sym> {
    (0..len).map(|_| random_symbol(rng, space)).collect()
}

/// An eventually periodic point with prefix at most `max_prefix` long.
pub fn random_point<R: Rng>(rng: &mut R, space: Space, max_prefix: usize) -> BasePoint {
    let len = rng.gen_range(0..=max_prefix);
    let prefix = random_word(rng, space, len);
    let plen = rng.gen_range(1..=3);
    let period = random_word(rng, space, plen);
    BasePoint::new(space, prefix, period).expect("symbols in range")
}

/// Union of a few cylinders of length at most `max_len`.
pub fn random_clopen<R: Rng>(rng: &mut R, space: Space, max_len: usize) -> Region {
    let mut r = Region::empty(space);
    for _ in 0..rng.gen_range(0..=3) {
        let len = rng.gen_range(0..=max_len);
        let c = Region::cylinder(space, &random_word(rng, space, len));
        r = r.union(&c).expect("same space");
    }
    if rng.gen_bool(0.3) {
        r.complement()
    } else {
        r
    }
}

/// A clopen set adjusted by up to two added and two removed points.
pub fn random_region<R: Rng>(rng: &mut R, space: Space, max_len: usize) -> Region {
    let mut r = random_clopen(rng, space, max_len);
    for _ in 0..rng.gen_range(0..=2) {
        r = r.union(&Region::point(random_point(rng, space, max_len + 1))).expect("same space");
    }
    for _ in 0..rng.gen_range(0..=2) {
        r = r.difference(&Region::point(random_point(rng, space, max_len + 1))).expect("same space");
    }
    r
}

/// Symbolic model with random valuations; clopen ones when `clopen` is set.
pub fn random_symbolic_model<R: Rng>(rng: &mut R, space: Space, atoms: &[&str], clopen: bool) -> SymbolicModel {
    let h: BTreeMap<String, Region> = atoms
        .iter()
        .map(|a| {
            let r = if clopen { random_clopen(rng, space, 3) } else { random_region(rng, space, 3) };
            (a.to_string(), r)
        })
        .collect();
    SymbolicModel::new(space, h).expect("valuation in the model's space")
}
