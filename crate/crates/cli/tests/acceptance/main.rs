//! Acceptance run: one PASS/FAIL line per criterion.

mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use oracle::{Fin, Frame as OFrame, Shape, Topo};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;
use topomodal::alexandrov::{eval_finite_topo, FiniteModel, FiniteSpace, PointSet};
use topomodal::foltrans::{
    check_goodness, eval_fol_finite, lift_to_lstructure, standard_translate, FolAssignment, GoodnessTarget, Value,
    TRANSLATABLE,
};
use topomodal::hilbert::{instantiate, Substitution, System, SystemId};
use topomodal::kripke::{tangle_lasso, Frame, KripkeModel, WorldSet};
use topomodal::realize::{dissect_cylinder, eval_realized, realize_model, Dyadic, PartCount};
use topomodal::region::{eval_symbolic, parse_point, BasePoint, Region, Space, Sym, SymbolicModel};
use topomodal::sample::FormulaGen;
use topomodal::{classify, parse, rewrite_eliminate, Formula, Fragment, RewriteRule};

// Pinned limits.
const MAX_DISCREPANCIES: usize = 0;
const C1_LIMIT: Duration = Duration::from_secs(1);
const C2_LIMIT: Duration = Duration::from_secs(5);
const C3_LIMIT: Duration = Duration::from_secs(30);
const C7_LIMIT: Duration = Duration::from_secs(120);

const C2_REGIONS: usize = 100;
const C3_RANDOM_FRAMES: usize = 500;
const C4_PAIRS_FINITE: usize = 200;
const C4_PAIRS_SYMBOLIC: usize = 150;
const C5_REGIONS: usize = 500;
const C5_SPACES_PER_SIZE: usize = 12;
const C6_DISSECTIONS: usize = 50;
const C6_SAMPLES: usize = 24;
const C7_VALUATIONS: usize = 20;
const C7_FORMULAS: usize = 10;
const C7_DEPTH: usize = 6;
const C7_MAX_LEVEL: usize = 2;
const C7_NODES_PER_LEVEL: usize = 6;
const C8_VALUATIONS: usize = 50;
const C8_FORMULAS: usize = 4;
const C9_INSTANCES: usize = 100;
const C9_MIN_FIXTURES: usize = 5;
const C10_VALUATIONS: usize = 20;
const C10_MAX_PSI: usize = 3;
const C10_SAMPLE_BOUND: usize = 64;

const UNIV_CODERIV: Fragment = Fragment {
    uses_box: false,
    uses_coderiv: true,
    uses_tangle: false,
    uses_univ: true,
    uses_diff: false,
    uses_count: false,
};

const BOX_ONLY: Fragment = Fragment {
    uses_box: true,
    uses_coderiv: false,
    uses_tangle: false,
    uses_univ: false,
    uses_diff: false,
    uses_count: false,
};

const EVERYTHING: Fragment = Fragment {
    uses_box: true,
    uses_coderiv: true,
    uses_tangle: true,
    uses_univ: true,
    uses_diff: true,
    uses_count: true,
};

type Check = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Check);

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_topomodal")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn bin_json(args: &[&str]) -> Result<(i32, Json), String> {
    let (code, out) = bin(args);
    serde_json::from_str(&out).map(|j| (code, j)).map_err(|e| format!("{args:?}: bad JSON ({e})"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[allow(clippy::absurd_extreme_comparisons)]
fn tally(bad: usize, what: &str, first: Option<String>) -> Result<(), String> {
    ensure(bad <= MAX_DISCREPANCIES, || format!("{bad} discrepancies in {what}; first: {}", first.unwrap_or_default()))
}

fn as_oframe(fr: &Frame) -> OFrame {
    OFrame { succ: (0..fr.len()).map(|w| fr.succ(w).iter().copied().collect()).collect() }
}

fn mask(s: &WorldSet) -> u64 {
    s.iter().fold(0, |m, &w| m | 1 << w)
}

fn worlds(n: usize, m: u64) -> WorldSet {
    (0..n).filter(|&w| m >> w & 1 == 1).collect()
}

fn kripke_masks(m: &KripkeModel) -> BTreeMap<String, u64> {
    m.valuations().iter().map(|(k, v)| (k.clone(), mask(v))).collect()
}

fn random_preorder(r: &mut impl Rng, n: usize) -> Vec<Vec<bool>> {
    let p = r.gen_range(0.0..0.6);
    let mut le: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| a == b || r.gen_bool(p)).collect()).collect();
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                if le[a][k] && le[k][b] {
                    le[a][b] = true;
                }
            }
        }
    }
    le
}

fn random_word(r: &mut impl Rng, space: Space, len: std::ops::RangeInclusive<usize>) -> Vec<Sym> {
    let len = r.gen_range(len);
    (0..len).map(|_| r.gen_range(0..oracle::alphabet(space))).collect()
}

fn random_point(r: &mut impl Rng, space: Space, max_prefix: usize) -> BasePoint {
    let len = r.gen_range(0..=max_prefix);
    let plen = r.gen_range(1..=3);
    BasePoint::new(space, random_word(r, space, len..=len), random_word(r, space, plen..=plen)).unwrap()
}

fn random_shape(r: &mut impl Rng, space: Space) -> Shape {
    let mut s = Shape::Cyl(random_word(r, space, 0..=3));
    for _ in 0..r.gen_range(0..=2) {
        let c = Shape::Cyl(random_word(r, space, 1..=4));
        s = if r.gen_bool(0.5) { Shape::Union(Box::new(s), Box::new(c)) } else { Shape::Minus(Box::new(s), Box::new(c)) };
    }
    if r.gen_bool(0.3) {
        s = Shape::Comp(Box::new(s));
    }
    for _ in 0..r.gen_range(0..=2) {
        let p = Shape::Pt(random_point(r, space, 5));
        s = if r.gen_bool(0.5) { Shape::Union(Box::new(s), Box::new(p)) } else { Shape::Minus(Box::new(s), Box::new(p)) };
    }
    s
}

fn same_region(a: &Region, b: &Region) -> bool {
    a.difference(b).unwrap().is_empty() && b.difference(a).unwrap().is_empty()
}

// ---------------------------------------------------------------------------

fn c1_tangle_witness() -> Check {
    for n in 0..=10usize {
        let ns = n.to_string();
        let (code, j) = bin_json(&["--json", "witness", "tangle", "--n", &ns])?;
        ensure(code == 0, || format!("n={n}: exit {code}"))?;
        let m = KripkeModel::from_json(&j["model"].to_string()).map_err(|e| e.to_string())?;
        let sigma: Vec<Formula> = j["sigma"]
            .as_array()
            .ok_or("sigma missing")?
            .iter()
            .map(|s| parse(s.as_str().unwrap_or_default()).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;

        // the expected set, built here from scratch
        let mut expected = vec!["~<t>{q, ~q}".to_string(), "p0".to_string()];
        expected.extend((0..n).map(|i| format!("A (p{i} -> <>p{})", i + 1)));
        expected.extend((0..=n).map(|i| format!("A (p{i} -> {}q)", if i % 2 == 0 { "" } else { "~" })));
        let expected: BTreeSet<Formula> = expected.iter().map(|s| parse(s).unwrap()).collect();
        let got: BTreeSet<Formula> = sigma.iter().cloned().collect();
        ensure(got == expected, || format!("n={n}: sigma differs from the reference set"))?;

        // chain 0 <= 1 <= ... <= n, q on the even worlds, p_i on world i
        let fr = &m.frame;
        ensure(fr.len() == n + 1, || format!("n={n}: {} worlds", fr.len()))?;
        let idx = |i: usize| fr.id(&i.to_string()).unwrap();
        for a in 0..=n {
            for b in 0..=n {
                ensure(fr.succ(idx(a)).contains(&idx(b)) == (a <= b), || format!("n={n}: edge {a}->{b}"))?;
            }
            ensure(m.valuation(&format!("p{a}")) == WorldSet::from([idx(a)]), || format!("n={n}: p{a}"))?;
        }
        ensure(m.valuation("q") == (0..=n).step_by(2).map(idx).collect(), || format!("n={n}: q is not the evens"))?;

        let of = as_oframe(fr);
        let h = kripke_masks(&m);
        for f in &sigma {
            ensure(oracle::kripke(&of, &h, f) >> idx(0) & 1 == 1, || format!("n={n}: {f} fails at 0"))?;
        }
        ensure(j["satisfied_at_0"] == Json::Bool(true), || format!("n={n}: binary reports unsatisfied"))?;
    }
    Ok("n = 0..10 satisfied at 0".into())
}

fn c2_derivative_witness() -> Check {
    for n in 0..=10usize {
        let ns = n.to_string();
        let (code, j) = bin_json(&["--json", "witness", "deriv", "--n", &ns])?;
        ensure(code == 0, || format!("n={n}: exit {code}"))?;
        let m = SymbolicModel::from_json(&j["model"].to_string()).map_err(|e| e.to_string())?;
        ensure(m.space() == Space::Cantor, || "not a Cantor model".into())?;
        let points: Vec<BasePoint> = j["points"]
            .as_array()
            .ok_or("points missing")?
            .iter()
            .map(|p| parse_point(Space::Cantor, p.as_str().unwrap_or_default()).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let distinct: BTreeSet<&BasePoint> = points.iter().collect();
        ensure(points.len() == n + 1 && distinct.len() == n + 1, || format!("n={n}: points not distinct"))?;

        // every atom must denote a finite set of points
        let mut h = BTreeMap::new();
        for (a, r) in m.valuations() {
            ensure(r.clopen_part().is_empty() && r.minus_points().is_empty(), || format!("n={n}: {a} is not finite"))?;
            h.insert(a.clone(), Fin { pts: r.plus_points().clone(), co: false });
        }
        ensure(h["q"].pts.len() == n + 1, || format!("n={n}: q has {} points", h["q"].pts.len()))?;

        let sigma: Vec<Formula> = j["sigma"]
            .as_array()
            .ok_or("sigma missing")?
            .iter()
            .map(|s| parse(s.as_str().unwrap_or_default()).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        ensure(sigma.len() == n + 2, || format!("n={n}: {} formulas", sigma.len()))?;
        ensure(sigma.last() == Some(&parse("A ~<d>q").unwrap()), || format!("n={n}: last member"))?;
        for f in &sigma {
            let t = oracle::eval_fin(&h, f).ok_or_else(|| format!("{f} outside the finite-set fragment"))?;
            ensure(t.is_full(), || format!("n={n}: {f} is not globally true"))?;
            ensure(eval_symbolic(&m, f).map_err(|e| e.to_string())?.is_full(), || format!("n={n}: library disagrees on {f}"))?;
        }
        ensure(j["satisfied"] == Json::Bool(true), || format!("n={n}: binary reports unsatisfied"))?;
    }

    // infinite definable regions accumulate somewhere
    let mut r = rng(2);
    let mut done = 0;
    while done < C2_REGIONS {
        let stem = random_word(&mut r, Space::Cantor, 0..=4);
        let mut s = Shape::Cyl(stem.clone());
        for _ in 0..r.gen_range(0..=2) {
            s = Shape::Union(Box::new(s), Box::new(Shape::Cyl(random_word(&mut r, Space::Cantor, 1..=4))));
        }
        for _ in 0..r.gen_range(0..=3) {
            let p = Shape::Pt(random_point(&mut r, Space::Cantor, 6));
            s = if r.gen_bool(0.5) { Shape::Minus(Box::new(s), Box::new(p)) } else { Shape::Union(Box::new(s), Box::new(p)) };
        }
        let reg = s.build(Space::Cantor);
        let d = reg.derivative();
        let x = d.members(1).into_iter().next().ok_or_else(|| format!("<d> of {s:?} is empty"))?;
        ensure(oracle::is_limit(&s, &x), || format!("{x} is not a limit point of {s:?}"))?;
        // a point of the stem cylinder is always a limit point
        let y = BasePoint::new(Space::Cantor, stem.clone(), random_word(&mut r, Space::Cantor, 2..=2).into_iter().chain([1]).collect()).unwrap();
        ensure(d.contains(&y), || format!("{y} missing from <d> of {s:?}"))?;
        done += 1;
    }
    Ok(format!("n = 0..10 globally true, {C2_REGIONS} infinite regions with limit points"))
}

fn literal_sets() -> Vec<Vec<Formula>> {
    let lits: Vec<Formula> = ["p", "~p", "q", "~q"].iter().map(|s| parse(s).unwrap()).collect();
    let mut out: Vec<Vec<Formula>> = lits.iter().map(|l| vec![l.clone()]).collect();
    for i in 0..lits.len() {
        for j in i + 1..lits.len() {
            out.push(vec![lits[i].clone(), lits[j].clone()]);
        }
    }
    out
}

fn tangle_case(n: usize, rel: u64, hp: u64, hq: u64, ds: &[Formula]) -> Option<String> {
    let of = OFrame::from_mask(n, rel);
    let fr = Frame::from_indices(n, of.edges());
    let h = BTreeMap::from([("p".to_string(), worlds(n, hp)), ("q".to_string(), worlds(n, hq))]);
    let m = KripkeModel::new(fr, h).unwrap();
    let hm = BTreeMap::from([("p".to_string(), hp), ("q".to_string(), hq)]);
    let sets: Vec<u64> = ds.iter().map(|d| oracle::kripke(&of, &hm, d)).collect();
    let want = of.tangle(&sets);
    let got = mask(&tangle_lasso(&m, ds));
    if got != want || want != of.tangle_postfix(&sets) {
        Some(format!("n={n} rel={rel:#x} p={hp:#b} q={hq:#b} {ds:?}: lasso {got:#b}, oracle {want:#b}"))
    } else {
        None
    }
}

fn c3_tangle_oracle() -> Check {
    let deltas = literal_sets();
    let mut bad = 0;
    let mut first = None;
    let mut cases = 0;
    for n in 1..=3usize {
        for rel in 0..1u64 << (n * n) {
            for hp in 0..1u64 << n {
                for hq in 0..1u64 << n {
                    for ds in &deltas {
                        cases += 1;
                        if let Some(e) = tangle_case(n, rel, hp, hq, ds) {
                            bad += 1;
                            first.get_or_insert(e);
                        }
                    }
                }
            }
        }
    }
    let mut r = rng(3);
    for _ in 0..C3_RANDOM_FRAMES {
        let n = r.gen_range(1..=5);
        let density = r.gen_range(0.1..0.6);
        let rel = (0..n * n).filter(|_| r.gen_bool(density)).fold(0u64, |m, i| m | 1 << i);
        let ds = deltas.choose(&mut r).unwrap();
        cases += 1;
        if let Some(e) = tangle_case(n, rel, r.gen_range(0..1 << n), r.gen_range(0..1 << n), ds) {
            bad += 1;
            first.get_or_insert(e);
        }
    }
    tally(bad, "tangle evaluation", first)?;
    Ok(format!("{cases} cases"))
}

fn c4_rewrite_soundness() -> Check {
    let mut r = rng(4);
    let gen = FormulaGen::new(&["p", "q"], 3, EVERYTHING);
    let mut bad = 0;
    let mut first = None;
    let mut record = |msg: String| {
        bad += 1;
        first.get_or_insert(msg);
    };
    for _ in 0..C4_PAIRS_FINITE {
        let n = r.gen_range(1..=6);
        let le = random_preorder(&mut r, n);
        let space = FiniteSpace::from_le(n, |a, b| le[a][b]);
        let h: BTreeMap<String, u64> = ["p", "q"].iter().map(|a| (a.to_string(), r.gen_range(0..1u64 << n))).collect();
        let m = FiniteModel::new(space, h.iter().map(|(k, &v)| (k.clone(), PointSet(v))).collect()).unwrap();
        let topo = Topo::from_le(n, &le);
        let f = gen.sample(&mut r);
        let want = oracle::topo(&topo, &h, &f);
        if eval_finite_topo(&m, &f).0 != want {
            record(format!("evaluator disagrees on {f}"));
        }
        for rule in RewriteRule::ALL {
            let g = rewrite_eliminate(&f, rule);
            if oracle::topo(&topo, &h, &g) != want || eval_finite_topo(&m, &g).0 != want {
                record(format!("{rule:?} changes {f} on a {n}-point space"));
            }
        }
    }
    for _ in 0..C4_PAIRS_SYMBOLIC {
        let space = if r.gen_bool(0.5) { Space::Cantor } else { Space::Baire };
        let h: BTreeMap<String, Region> =
            ["p", "q"].iter().map(|a| (a.to_string(), random_shape(&mut r, space).build(space))).collect();
        let m = SymbolicModel::new(space, h).unwrap();
        let f = gen.sample(&mut r);
        let want = eval_symbolic(&m, &f).map_err(|e| format!("{f}: {e}"))?;
        for rule in RewriteRule::ALL {
            let g = rewrite_eliminate(&f, rule);
            let got = eval_symbolic(&m, &g).map_err(|e| format!("{g}: {e}"))?;
            if !same_region(&got, &want) {
                record(format!("{rule:?} changes {f} on {space}"));
            }
        }
    }
    tally(bad, "rewrites", first)?;
    Ok(format!("{} pairs under {} rules", C4_PAIRS_FINITE + C4_PAIRS_SYMBOLIC, RewriteRule::ALL.len()))
}

fn c5_operator_laws() -> Check {
    let mut r = rng(5);
    let mut bad = 0;
    let mut first = None;
    let mut spaces = 0;
    for n in 1..=6usize {
        for _ in 0..C5_SPACES_PER_SIZE {
            let le = random_preorder(&mut r, n);
            let sp = FiniteSpace::from_le(n, |a, b| le[a][b]);
            let topo = Topo::from_le(n, &le);
            spaces += 1;
            let full = oracle::full(n);
            for s in 0..=full {
                let ps = PointSet(s);
                let (i, c, d) = (sp.interior(ps).0, sp.closure(ps).0, sp.derivative(ps).0);
                let laws = i == topo.interior(s)
                    && c == topo.closure(s)
                    && d == topo.derivative(s)
                    && c == s | d
                    && i == full & !sp.closure(PointSet(full & !s)).0;
                let mut pairs = laws;
                for t in 0..=full {
                    let pt = PointSet(t);
                    pairs &= sp.derivative(PointSet(s | t)).0 == d | sp.derivative(pt).0
                        && sp.interior(PointSet(s & t)).0 == i & sp.interior(pt).0;
                }
                if !pairs {
                    bad += 1;
                    first.get_or_insert(format!("{n} points, S = {s:#b}"));
                }
            }
        }
    }
    for k in 0..C5_REGIONS {
        let space = if k % 2 == 0 { Space::Cantor } else { Space::Baire };
        let (sa, sb) = (random_shape(&mut r, space), random_shape(&mut r, space));
        let (a, b) = (sa.build(space), sb.build(space));
        let probes: Vec<BasePoint> = (0..8).map(|_| random_point(&mut r, space, 6)).collect();
        let built = probes.iter().all(|x| a.contains(x) == sa.contains(x) && b.contains(x) == sb.contains(x));
        let d_add = same_region(&a.union(&b).unwrap().derivative(), &a.derivative().union(&b.derivative()).unwrap());
        let cl = same_region(&a.closure(), &a.union(&a.derivative()).unwrap());
        let int_mul = same_region(&a.intersect(&b).unwrap().interior(), &a.interior().intersect(&b.interior()).unwrap());
        let dual = same_region(&a.interior(), &a.complement().closure().complement());
        if !(built && d_add && cl && int_mul && dual) {
            bad += 1;
            first.get_or_insert(format!("{sa:?} / {sb:?}: built {built} add {d_add} cl {cl} int {int_mul} dual {dual}"));
        }
    }
    tally(bad, "operator laws", first)?;
    Ok(format!("{spaces} finite spaces exhaustively, {C5_REGIONS} region pairs"))
}

fn c6_dissection() -> Check {
    let mut r = rng(6);
    let eps_choices = [(1u64, 0u32), (1, 1), (1, 3)];
    let mut samples_total = 0;
    for _ in 0..C6_DISSECTIONS {
        let stem = random_word(&mut r, Space::Baire, 0..=3);
        let k = r.gen_range(1..=5u64);
        let (num, exp) = eps_choices[r.gen_range(0..3)];
        let eps = Dyadic::new(num, exp).unwrap();
        let d = dissect_cylinder(&stem, PartCount::Finite(k), eps).map_err(|e| e.to_string())?;
        let len = d.len();
        let eps_f = 0.5f64.powi(exp as i32) * num as f64;
        let boundary = d.boundary();
        let parts: Vec<_> = (0..k).map(|i| d.part(i).unwrap()).collect();
        let ctx = format!("stem {stem:?}, {k} parts, eps {num}/2^{exp}");

        let mut samples = Vec::new();
        while samples.len() < C6_SAMPLES {
            let mut prefix = stem.clone();
            for _ in 0..r.gen_range(0..=len - stem.len() + 4) {
                prefix.push(if r.gen_bool(0.5) { 0 } else { r.gen_range(1..5) });
            }
            let periods: [&[Sym]; 4] = [&[0], &[1], &[0, 1], &[0, 0, 2]];
            samples.push(BasePoint::new(Space::Baire, prefix, periods[r.gen_range(0..4)].to_vec()).unwrap());
        }
        samples_total += samples.len();
        for x in &samples {
            let want = oracle::piece(&stem, len, Some(k), x).expect("sample inside the stem");
            // partition exactness
            let hits: Vec<Option<u64>> = std::iter::once(None)
                .filter(|_| boundary.contains(x))
                .chain((0..k).filter(|&i| parts[i as usize].contains(x)).map(Some))
                .collect();
            ensure(hits == vec![want], || format!("{ctx}: {x} lies in {hits:?}, expected {want:?}"))?;
            // epsilon-net through the metric
            let b = d.nearest_boundary_point(x).ok_or_else(|| format!("{ctx}: no boundary point near {x}"))?;
            ensure(oracle::piece(&stem, len, Some(k), &b) == Some(None), || format!("{ctx}: {b} is not a boundary point"))?;
            let dist = x.distance(&b).map_err(|e| e.to_string())?;
            ensure(dist.to_f64() < eps_f, || format!("{ctx}: d({x}, {b}) = {dist}"))?;
            let own = oracle::lcp(x, &b).map_or(0.0, |i| 0.5f64.powi(i as i32));
            ensure(own < eps_f, || format!("{ctx}: own distance {own} from {x} to {b}"))?;
            // closure of each part adds exactly the boundary
            for (i, g) in parts.iter().enumerate() {
                for min_ring in [0u64, 3, 9, 20] {
                    let y = d.approach(&b, i as u64, min_ring);
                    let l = oracle::lcp(&y, &b).unwrap_or(usize::MAX);
                    let inside = g.contains(&y) && oracle::piece(&stem, len, Some(k), &y) == Some(Some(i as u64));
                    ensure(inside && l >= len + min_ring as usize, || format!("{ctx}: part {i} does not approach {b} via {y}"))?;
                }
            }
            if let Some(i) = want {
                // a part point has a neighbourhood inside its part
                let q = oracle::first_nonzero(x, len).unwrap();
                for y in oracle::near(x, q + 1) {
                    ensure(oracle::piece(&stem, len, Some(k), &y) == Some(Some(i)), || format!("{ctx}: {x} is a limit of other pieces"))?;
                }
            } else {
                // sparsity: no other boundary point within 2^-len
                for y in oracle::near(x, len) {
                    ensure(!boundary.contains(&y), || format!("{ctx}: boundary points {x} and {y} too close"))?;
                }
            }
        }
        ensure(d.verify(&samples, k).ok(), || format!("{ctx}: library self-check failed"))?;
    }
    Ok(format!("{C6_DISSECTIONS} dissections, {samples_total} samples"))
}

/// Serial transitive relations on `n` worlds, one per isomorphism class.
fn kd4_classes(n: usize) -> Vec<u64> {
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    for rel in 0..1u64 << (n * n) {
        let of = OFrame::from_mask(n, rel);
        if !of.serial() || !of.transitive() {
            continue;
        }
        let canon = perms
            .iter()
            .map(|p| {
                (0..n * n).filter(|&e| rel >> e & 1 == 1).fold(0u64, |m, e| m | 1 << (p[e / n] * n + p[e % n]))
            })
            .min()
            .unwrap();
        seen.insert(canon);
    }
    seen.into_iter().collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn c7_realized_truth() -> Check {
    let mut r = rng(7);
    let gen = FormulaGen::new(&["p", "q"], 3, UNIV_CODERIV);
    let mut bad = 0;
    let mut first = None;
    let mut frames = 0;
    let mut checks = 0;
    for n in 1..=4usize {
        for rel in kd4_classes(n) {
            frames += 1;
            let of = OFrame::from_mask(n, rel);
            for _ in 0..C7_VALUATIONS {
                let (hp, hq) = (r.gen_range(0..1u64 << n), r.gen_range(0..1u64 << n));
                let h = BTreeMap::from([("p".to_string(), worlds(n, hp)), ("q".to_string(), worlds(n, hq))]);
                let m = KripkeModel::new(Frame::from_indices(n, of.edges()), h).unwrap();
                let hm = BTreeMap::from([("p".to_string(), hp), ("q".to_string(), hq)]);
                let rs = realize_model(&m, "0", C7_DEPTH).map_err(|e| e.to_string())?;
                for _ in 0..C7_FORMULAS {
                    let f = gen.sample(&mut r);
                    ensure(classify(&f).1 <= 3, || format!("{f} is too deep"))?;
                    let truth = oracle::kripke(&of, &hm, &f);
                    for level in 0..=C7_MAX_LEVEL {
                        for id in rs.nodes_at_level(level).take(C7_NODES_PER_LEVEL.max(n)) {
                            for x in rs.boundary_points(id, 1) {
                                checks += 1;
                                let got = eval_realized(&rs, &f, &x).map_err(|e| format!("{f} at {x}: {e}"))?;
                                if got != (truth >> rs.nodes[id].label & 1 == 1) {
                                    bad += 1;
                                    first.get_or_insert(format!("{f} at {x} over rel {rel:#x}"));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    tally(bad, "realized truth", first)?;
    Ok(format!("{frames} frame classes, {checks} point checks"))
}

fn partitions(n: usize) -> Vec<Vec<u64>> {
    // restricted growth strings
    fn go(i: usize, n: usize, blocks: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if i == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b] |= 1 << i;
            go(i + 1, n, blocks, out);
            blocks[b] &= !(1 << i);
        }
        blocks.push(1 << i);
        go(i + 1, n, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

fn c8_bridge() -> Check {
    let mut r = rng(8);
    let mut gen = FormulaGen::new(&["p", "q"], 3, TRANSLATABLE);
    gen.max_count = 3;
    let mut bad = 0;
    let mut first = None;
    let mut spaces = 0;
    let mut checks = 0;
    for n in 1..=5usize {
        for blocks in partitions(n) {
            spaces += 1;
            let topo = Topo::from_blocks(n, &blocks);
            let family: Vec<PointSet> = blocks.iter().map(|&b| PointSet(b)).collect();
            for _ in 0..C8_VALUATIONS {
                let h: BTreeMap<String, u64> =
                    ["p", "q"].iter().map(|a| (a.to_string(), r.gen_range(0..1u64 << n))).collect();
                let m = FiniteModel::new(
                    FiniteSpace::indexed(n, &family),
                    h.iter().map(|(k, &v)| (k.clone(), PointSet(v))).collect(),
                )
                .unwrap();
                let lift = lift_to_lstructure(&m, 0).map_err(|e| e.to_string())?;
                ensure(lift.clopen_base, || format!("partition space {blocks:?} lifted without a clopen base"))?;
                for _ in 0..C8_FORMULAS {
                    let f = gen.sample(&mut r);
                    let want = oracle::topo(&topo, &h, &f);
                    let g = standard_translate(&f, "x").map_err(|e| e.to_string())?;
                    for a in 0..n {
                        checks += 1;
                        let asg = FolAssignment::from([("x".to_string(), Value::Point(a))]);
                        let got = eval_fol_finite(&lift.structure, &g, &asg).map_err(|e| e.to_string())?;
                        if got != (want >> a & 1 == 1) {
                            bad += 1;
                            first.get_or_insert(format!("{f} at point {a} of {blocks:?}"));
                        }
                    }
                }
            }
        }
    }
    tally(bad, "translation", first)?;
    Ok(format!("{spaces} spaces, {checks} point checks"))
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/proofs")
}

fn c9_soundness() -> Check {
    let mut r = rng(9);
    let mut instances = 0;
    for id in [SystemId::S4U, SystemId::KD4U, SystemId::S4DT1S] {
        let sys = System::get(id);
        let gen = FormulaGen::new(&["p", "q"], 2, sys.language);
        for schema in &sys.schemas {
            for _ in 0..C9_INSTANCES {
                let subst: Substitution = ["phi", "psi", "chi"].iter().map(|v| (v.to_string(), gen.sample(&mut r))).collect();
                let f = instantiate(&sys, schema.name, &subst).ok_or_else(|| format!("{id} {} not instantiable", schema.name))?;
                instances += 1;
                if id == SystemId::S4U {
                    let n = r.gen_range(1..=5);
                    let topo = Topo::from_le(n, &random_preorder(&mut r, n));
                    let h: BTreeMap<String, u64> =
                        ["p", "q"].iter().map(|a| (a.to_string(), r.gen_range(0..1u64 << n))).collect();
                    ensure(oracle::topo(&topo, &h, &f) == oracle::full(n), || format!("{id} {}: {f} fails", schema.name))?;
                } else {
                    let space = if r.gen_bool(0.5) { Space::Cantor } else { Space::Baire };
                    let h: BTreeMap<String, Region> =
                        ["p", "q"].iter().map(|a| (a.to_string(), random_shape(&mut r, space).build(space))).collect();
                    let m = SymbolicModel::new(space, h).unwrap();
                    let t = eval_symbolic(&m, &f).map_err(|e| e.to_string())?;
                    ensure(t.is_full(), || format!("{id} {} on {space}: {f} fails", schema.name))?;
                }
            }
        }
    }

    let mut proofs = 0;
    for id in SystemId::ALL {
        let dir = fixture_dir().join(id.to_string());
        let files: Vec<PathBuf> = fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
        ensure(files.len() >= C9_MIN_FIXTURES, || format!("{id}: only {} fixtures", files.len()))?;
        for path in files {
            let ps = path.display().to_string();
            let sys = id.to_string();
            let (code, j) = bin_json(&["--json", "check-proof", "--system", &sys, "--proof", &ps])?;
            ensure(code == 0 && j["verdict"] == "accepted", || format!("{ps}: {j}"))?;
            proofs += 1;
        }
    }

    let corrupted = fixture_dir().join("corrupted");
    let manifest: Json = serde_json::from_str(&fs::read_to_string(corrupted.join("manifest.json")).unwrap()).unwrap();
    let entries = manifest.as_array().ok_or("manifest is not a list")?;
    ensure(entries.len() >= 5, || "fewer than 5 corrupted proofs".into())?;
    for e in entries {
        let ps = corrupted.join(e["file"].as_str().unwrap()).display().to_string();
        let mut args = vec!["--json".to_string(), "check-proof".into(), "--system".into(), e["system"].as_str().unwrap().into()];
        args.extend(["--proof".to_string(), ps.clone()]);
        for p in e["premises"].as_array().unwrap() {
            args.extend(["--premise".to_string(), p.as_str().unwrap().to_string()]);
        }
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, j) = bin_json(&args)?;
        ensure(code == 1 && j["verdict"] == "rejected" && j["step"] == e["step"], || format!("{ps}: {j}"))?;
    }
    Ok(format!("{instances} axiom instances, {proofs} fixture proofs, {} corrupted rejected", entries.len()))
}

fn c10_goodness() -> Check {
    let mut r = rng(10);
    let gen = FormulaGen::new(&["p", "q"], 2, BOX_ONLY);
    let mut witnesses = 0;
    for _ in 0..C10_VALUATIONS {
        let h: BTreeMap<String, Region> = ["p", "q"]
            .iter()
            .map(|a| {
                let mut reg = Region::empty(Space::Cantor);
                for _ in 0..r.gen_range(1..=3) {
                    let c = Region::cylinder(Space::Cantor, &random_word(&mut r, Space::Cantor, 0..=3));
                    reg = reg.union(&c).unwrap();
                }
                (a.to_string(), if r.gen_bool(0.3) { reg.complement() } else { reg })
            })
            .collect();
        let m = SymbolicModel::new(Space::Cantor, h).unwrap();
        let psi_list: Vec<Vec<Formula>> =
            (0..r.gen_range(1..=3)).map(|_| (0..r.gen_range(1..=C10_MAX_PSI)).map(|_| gen.sample(&mut r)).collect()).collect();
        let report = check_goodness(GoodnessTarget::Cantor(&m), &psi_list, C10_SAMPLE_BOUND).map_err(|e| e.to_string())?;
        ensure(report.good(), || format!("not good: {:?}", report.clauses.iter().filter(|c| c.holds != Some(true)).collect::<Vec<_>>()))?;
        for w in &report.witnesses {
            ensure(w.verified, || format!("unverified witness for {:?}", w.psi))?;
            let b = Region::from_json_value(&w.b).map_err(|e| e.to_string())?;
            let cs: Vec<Region> = w.c.iter().map(Region::from_json_value).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
            ensure(cs.len() == w.psi.len(), || "one cover set per formula".into())?;
            let mut union = Region::empty(Space::Cantor);
            for (c, p) in cs.iter().zip(&w.psi) {
                let boxed = Formula::boxed(parse(p).map_err(|e| e.to_string())?);
                let t = eval_symbolic(&m, &boxed).map_err(|e| e.to_string())?;
                ensure(c.is_clopen() && c.is_subset(&t).unwrap() && c.is_subset(&b).unwrap(), || format!("cover set for {p} misplaced"))?;
                union = union.union(c).unwrap();
            }
            ensure(b.is_subset(&union).unwrap(), || format!("cover of {:?} leaves points out", w.psi))?;
            witnesses += 1;
        }
    }
    ensure(witnesses > 0, || "no cover witnesses were built".into())?;
    Ok(format!("{C10_VALUATIONS} valuations, {witnesses} cover witnesses checked"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 tangle witness", Some(C1_LIMIT), c1_tangle_witness),
        ("2 derivative witness", Some(C2_LIMIT), c2_derivative_witness),
        ("3 tangle oracle", Some(C3_LIMIT), c3_tangle_oracle),
        ("4 rewrite soundness", None, c4_rewrite_soundness),
        ("5 operator laws", None, c5_operator_laws),
        ("6 dissection", None, c6_dissection),
        ("7 realized truth", Some(C7_LIMIT), c7_realized_truth),
        ("8 first-order bridge", None, c8_bridge),
        ("9 soundness sweeps", None, c9_soundness),
        ("10 goodness", None, c10_goodness),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let t = Instant::now();
        let res = run();
        let took = t.elapsed();
        let res = match (res, limit) {
            (Ok(msg), Some(l)) if took > l => Err(format!("{msg}; took {took:.2?}, limit {l:?}")),
            (res, _) => res,
        };
        match res {
            Ok(msg) => println!("PASS  {name:<24} {took:>9.2?}  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name:<24} {took:>9.2?}  {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
