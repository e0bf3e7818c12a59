//! Command-line front end for the `topomodal` library.
//!
//! Exit status: 0 when the command succeeds and the checked property holds,
//! 1 when it is false, 2 on usage or input errors.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use topomodal::alexandrov::{eval_finite_topo, FiniteModel};
use topomodal::foltrans::{
    check_goodness, emit_tgood, lift_to_lstructure, standard_translate, GoodnessReport, GoodnessTarget, LStructure,
    PTerm,
};
use topomodal::hilbert::{check_entailment_certificate, check_proof, Proof, System, SystemId, Verdict};
use topomodal::kripke::{eval_kripke, KripkeModel};
use topomodal::realize::{
    dissect_cylinder, eval_realized, realize_model, witness_derivative, witness_tangle, Dyadic, PartCount,
};
use topomodal::region::{eval_symbolic, parse_point, BasePoint, Space, SymbolicModel};
use topomodal::{classify, rewrite_eliminate, Formula, RewriteRule};

type Res = Result<bool, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "topomodal", version, about = "Modal logic over Kripke frames and topological spaces")]
struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every randomized sample.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a formula and dump its syntax tree.
    Parse {
        #[arg(long)]
        formula: Formula,
        /// Apply an elimination rewrite first.
        #[arg(long)]
        rewrite: Vec<RewriteRule>,
    },
    /// Evaluate a formula on a Kripke model.
    EvalKripke {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: Formula,
        /// Report truth at this world; the exit status follows it.
        #[arg(long)]
        world: Option<String>,
    },
    /// Evaluate a formula on a finite topological model.
    EvalTopo {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: Formula,
        #[arg(long)]
        point: Option<String>,
    },
    /// Evaluate a formula on a symbolic model over Cantor or Baire space.
    EvalRegion {
        #[arg(long)]
        space: Option<Space>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: Formula,
        /// An eventually periodic point such as `0(1)`.
        #[arg(long)]
        point: Option<String>,
    },
    /// Realize a serial transitive Kripke model over Baire space.
    Realize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        world: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Compare each formula with Kripke truth on boundary points of the
        /// world's region.
        #[arg(long)]
        formula: Vec<Formula>,
    },
    /// Dissect a Baire cylinder into a sparse boundary and open parts.
    Dissect {
        /// Stem such as `3.0.1`; empty for the whole space.
        #[arg(long, default_value = "")]
        stem: String,
        /// Number of parts, or `countable`.
        #[arg(long)]
        parts: PartCount,
        #[arg(long)]
        epsilon: Dyadic,
        #[arg(long, default_value_t = 40)]
        samples: usize,
    },
    /// Print and certify one of the witness suites.
    Witness {
        kind: WitnessKind,
        #[arg(long)]
        n: usize,
    },
    /// Check a Hilbert-style proof.
    CheckProof {
        #[arg(long)]
        system: SystemId,
        #[arg(long)]
        proof: PathBuf,
        #[arg(long)]
        premise: Vec<Formula>,
        /// Check the proof as a certificate that the premises entail this.
        #[arg(long)]
        conclusion: Option<Formula>,
    },
    /// Standard translation into two-sorted first-order logic.
    Translate {
        #[arg(long)]
        formula: Formula,
        #[arg(long, default_value = "x")]
        var: String,
        /// Substitute the constant `k` for the free variable.
        #[arg(long)]
        at_k: bool,
    },
    /// Emit the goodness theory.
    EmitTgood {
        #[command(flatten)]
        psi: PsiArgs,
        /// Formulas asserted at `k`.
        #[arg(long)]
        sigma: Vec<Formula>,
    },
    /// Check the goodness clauses on a structure.
    CheckGoodness {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        psi: PsiArgs,
        /// Bound on sampled set elements for the Cantor structure.
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WitnessKind {
    Tangle,
    Deriv,
}

#[derive(Args)]
struct PsiArgs {
    /// One formula set per flag, members separated by `;`.
    #[arg(long)]
    psi: Vec<String>,
}

impl PsiArgs {
    fn sets(&self) -> Result<Vec<Vec<Formula>>, Box<dyn Error>> {
        let mut out = Vec::new();
        for text in &self.psi {
            let set = text
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<Vec<Formula>, _>>()?;
            out.push(set);
        }
        Ok(out)
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TargetArgs {
    /// Finite two-sorted structure as JSON tables.
    #[arg(long)]
    structure: Option<PathBuf>,
    /// Finite topological model, lifted with its clopen algebra.
    #[arg(long)]
    finite_model: Option<PathBuf>,
    /// Symbolic Cantor model; the set sort is the clopen algebra.
    #[arg(long)]
    cantor: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, Box<dyn Error>> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn emit(cli: &Cli, value: Value, text: impl FnOnce() -> String) {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
    } else {
        print!("{}", text());
    }
}

fn ast(f: &Formula) -> Value {
    let node = |op: &str, args: Vec<&Formula>| json!({ "op": op, "args": args.into_iter().map(ast).collect::<Vec<_>>() });
    match f {
        Formula::Atom(p) => json!({ "op": "atom", "name": p }),
        Formula::Top => json!({ "op": "top" }),
        Formula::Neg(a) => node("not", vec![a]),
        Formula::And(a, b) => node("and", vec![a, b]),
        Formula::Box(a) => node("box", vec![a]),
        Formula::CoDeriv(a) => node("coderiv", vec![a]),
        Formula::Univ(a) => node("univ", vec![a]),
        Formula::DiffBox(a) => node("diff", vec![a]),
        Formula::Count(n, a) => json!({ "op": "count", "n": n, "args": [ast(a)] }),
        Formula::Tangle(xs) => node("tangle", xs.iter().collect()),
    }
}

fn ast_text(f: &Formula, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    let (label, kids): (String, Vec<&Formula>) = match f {
        Formula::Atom(p) => (format!("atom {p}"), vec![]),
        Formula::Top => ("true".into(), vec![]),
        Formula::Neg(a) => ("not".into(), vec![a]),
        Formula::And(a, b) => ("and".into(), vec![a, b]),
        Formula::Box(a) => ("box".into(), vec![a]),
        Formula::CoDeriv(a) => ("coderiv".into(), vec![a]),
        Formula::Univ(a) => ("univ".into(), vec![a]),
        Formula::DiffBox(a) => ("diff".into(), vec![a]),
        Formula::Count(n, a) => (format!("count {n}"), vec![a]),
        Formula::Tangle(xs) => ("tangle".into(), xs.iter().collect()),
    };
    out.push_str(&format!("{pad}{label}\n"));
    for k in kids {
        ast_text(k, indent + 1, out);
    }
}

fn cmd_parse(cli: &Cli, formula: &Formula, rewrites: &[RewriteRule]) -> Res {
    let f = rewrites.iter().fold(formula.clone(), |f, &r| rewrite_eliminate(&f, r));
    let (frag, depth) = classify(&f);
    emit(cli, json!({ "formula": f.render(), "ast": ast(&f), "modal_depth": depth, "fragment": frag }), || {
        let mut s = format!("{}\nmodal depth {depth}\n", f.render());
        ast_text(&f, 0, &mut s);
        s
    });
    Ok(true)
}

fn cmd_eval_kripke(cli: &Cli, path: &Path, f: &Formula, world: Option<&str>) -> Res {
    let m = KripkeModel::from_json(&read(path)?)?;
    let truth = eval_kripke(&m, f);
    let names: Vec<&str> = truth.iter().map(|&w| m.frame.name(w)).collect();
    let holds = match world {
        Some(w) => Some(truth.contains(&m.frame.id(w)?)),
        None => None,
    };
    emit(cli, json!({ "formula": f.render(), "truth": names, "world": world, "holds": holds }), || {
        let mut s = format!("{} holds at {{{}}}\n", f.render(), names.join(", "));
        if let (Some(w), Some(h)) = (world, holds) {
            s.push_str(&format!("at {w}: {h}\n"));
        }
        s
    });
    Ok(holds.unwrap_or(true))
}

fn cmd_eval_topo(cli: &Cli, path: &Path, f: &Formula, point: Option<&str>) -> Res {
    let m = FiniteModel::from_json(&read(path)?)?;
    let truth = eval_finite_topo(&m, f);
    let names = m.space.set_names(truth);
    let holds = match point {
        Some(x) => Some(truth.contains(m.space.index_of(x)?)),
        None => None,
    };
    emit(cli, json!({ "formula": f.render(), "truth": names, "point": point, "holds": holds }), || {
        let mut s = format!("{} holds at {{{}}}\n", f.render(), names.join(", "));
        if let (Some(x), Some(h)) = (point, holds) {
            s.push_str(&format!("at {x}: {h}\n"));
        }
        s
    });
    Ok(holds.unwrap_or(true))
}

fn cmd_eval_region(cli: &Cli, space: Option<Space>, path: &Path, f: &Formula, point: Option<&str>) -> Res {
    let m = SymbolicModel::from_json(&read(path)?)?;
    if let Some(sp) = space {
        if sp != m.space() {
            return Err(format!("model is over {}, not {sp}", m.space()).into());
        }
    }
    let truth = eval_symbolic(&m, f)?;
    let x = point.map(|p| parse_point(m.space(), p)).transpose()?;
    let holds = x.as_ref().map(|x| truth.contains(x));
    let sample: Vec<String> = truth.members(3).iter().map(BasePoint::to_string).collect();
    let card = format!("{:?}", truth.cardinality()).to_lowercase();
    emit(
        cli,
        json!({ "formula": f.render(), "region": truth.to_json(), "cardinality": card, "sample": sample, "holds": holds }),
        || {
            let mut s = format!("{} holds on {}\n", f.render(), truth.to_json());
            s.push_str(&format!("cardinality: {card}\n"));
            if !sample.is_empty() {
                s.push_str(&format!("members: {}\n", sample.join(", ")));
            }
            if let (Some(x), Some(h)) = (&x, holds) {
                s.push_str(&format!("at {x}: {h}\n"));
            }
            s
        },
    );
    Ok(holds.unwrap_or(true))
}

fn cmd_realize(cli: &Cli, path: &Path, world: &str, depth: usize, formulas: &[Formula]) -> Res {
    let m = KripkeModel::from_json(&read(path)?)?;
    let rs = realize_model(&m, world, depth)?;
    let w = m.frame.id(world)?;
    let points = rs.boundary_points(rs.roots[w], 3);
    let mut checks = Vec::new();
    let mut ok = true;
    for f in formulas {
        let expected = eval_kripke(&m, f).contains(&w);
        for x in &points {
            let got = eval_realized(&rs, f, x)?;
            ok &= got == expected;
            checks.push(json!({ "formula": f.render(), "point": x.to_string(), "realized": got, "kripke": expected }));
        }
    }
    let mut dump = rs.to_json();
    dump["checks"] = Value::Array(checks.clone());
    emit(cli, dump.clone(), || {
        let mut s = format!("realized {} to depth {depth}: {} nodes\n", world, rs.nodes.len());
        s.push_str(&serde_json::to_string_pretty(&dump["forest"]).expect("serializable"));
        s.push('\n');
        for c in &checks {
            s.push_str(&format!("{} at {}: {} (kripke {})\n", c["formula"], c["point"], c["realized"], c["kripke"]));
        }
        s
    });
    Ok(ok)
}

/// Points of `[stem]` whose tails mix zeros with small symbols, so that
/// boundary points and every ring are hit.
fn dissection_samples(rng: &mut impl Rng, stem: &[u64], len: usize, count: usize) -> Vec<BasePoint> {
    let periods: [&[u64]; 4] = [&[0], &[1], &[0, 2], &[3, 0, 0]];
    let mut out = Vec::new();
    for i in 0..count {
        let mut w = stem.to_vec();
        let extra = rng.gen_range(0..=len.saturating_sub(stem.len()) + 6);
        w.extend((0..extra).map(|_| if rng.gen_bool(0.5) { 0 } else { rng.gen_range(1..6) }));
        let period = periods[i % periods.len()].to_vec();
        out.push(BasePoint::new(Space::Baire, w, period).expect("baire symbols"));
    }
    out
}

fn cmd_dissect(cli: &Cli, stem: &str, parts: PartCount, eps: Dyadic, samples: usize) -> Res {
    let stem = Space::Baire.parse_word(stem)?;
    let d = dissect_cylinder(&stem, parts, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let xs = dissection_samples(&mut rng, &stem, d.len(), samples);
    let shown = match parts {
        PartCount::Finite(k) => k,
        PartCount::Countable => 8,
    };
    let report = d.verify(&xs, shown);
    let descr: Vec<String> = (0..shown).filter_map(|i| d.part(i)).map(|g| g.describe()).collect();
    emit(
        cli,
        json!({
            "stem": Space::Baire.format_word(&stem),
            "depth": d.depth,
            "epsilon": eps.to_string(),
            "boundary": d.boundary().describe(),
            "parts": descr,
            "report": report,
        }),
        || {
            let mut s = format!("boundary: {} (depth {})\n", d.boundary().describe(), d.depth);
            for (i, g) in descr.iter().enumerate() {
                s.push_str(&format!("part {i}: {g}\n"));
            }
            s.push_str(&format!(
                "checked {} partition, {} net, {} closure, {} sparsity samples: {}\n",
                report.partition_checked,
                report.net_checked,
                report.closure_checked,
                report.sparsity_checked,
                if report.ok() { "ok" } else { "FAILED" }
            ));
            for f in &report.failures {
                s.push_str(&format!("  {f}\n"));
            }
            s
        },
    );
    Ok(report.ok())
}

fn cmd_witness(cli: &Cli, kind: WitnessKind, n: usize) -> Res {
    match kind {
        WitnessKind::Tangle => {
            let (sigma, m) = witness_tangle(n);
            let ok = sigma.iter().all(|f| eval_kripke(&m, f).contains(&0));
            let rendered: Vec<String> = sigma.iter().map(Formula::render).collect();
            emit(cli, json!({ "sigma": rendered, "model": m.to_json(), "satisfied_at_0": ok }), || {
                format!(
                    "sigma:\n{}\nmodel: {}\nsatisfied at 0: {ok}\n",
                    rendered.iter().map(|f| format!("  {f}")).collect::<Vec<_>>().join("\n"),
                    m.to_json()
                )
            });
            Ok(ok)
        }
        WitnessKind::Deriv => {
            let w = witness_derivative(n);
            let mut per = Vec::new();
            for f in &w.sigma {
                per.push((f.render(), eval_symbolic(&w.model, f)?.is_full()));
            }
            let ok = per.iter().all(|(_, b)| *b);
            let points: Vec<String> = w.points.iter().map(BasePoint::to_string).collect();
            emit(
                cli,
                json!({
                    "sigma": per.iter().map(|(f, _)| f).collect::<Vec<_>>(),
                    "model": w.model.to_json(),
                    "points": points,
                    "globally_true": per.iter().map(|(_, b)| b).collect::<Vec<_>>(),
                    "satisfied": ok,
                }),
                || {
                    let mut s = String::from("sigma:\n");
                    for (f, b) in &per {
                        s.push_str(&format!("  {f}    globally true: {b}\n"));
                    }
                    s.push_str(&format!("points: {}\nmodel: {}\nsatisfied everywhere: {ok}\n", points.join(", "), w.model.to_json()));
                    s
                },
            );
            Ok(ok)
        }
    }
}

fn cmd_check_proof(cli: &Cli, id: SystemId, path: &Path, premises: &[Formula], conclusion: Option<&Formula>) -> Res {
    let sys = System::get(id);
    let pf = Proof::from_json(&read(path)?)?;
    let v = match conclusion {
        Some(phi) => check_entailment_certificate(&sys, premises, phi, &pf),
        None => check_proof(&sys, premises, &pf),
    };
    emit(cli, serde_json::to_value(&v).expect("serializable"), || match &v {
        Verdict::Accepted { conclusion } => format!("accepted in {id}: {conclusion}\n"),
        Verdict::Rejected { step, reason } => format!("rejected in {id} at step {step}: {reason}\n"),
    });
    Ok(v.accepted())
}

fn cmd_translate(cli: &Cli, f: &Formula, var: &str, at_k: bool) -> Res {
    let mut g = standard_translate(f, var)?;
    if at_k {
        g = g.subst_point(var, &PTerm::K);
    }
    let free: Vec<String> = g.free_vars()?.into_keys().collect();
    emit(cli, json!({ "formula": f.render(), "translation": g.to_string(), "free": free }), || format!("{g}\n"));
    Ok(true)
}

fn cmd_emit_tgood(cli: &Cli, psi: &PsiArgs, sigma: &[Formula]) -> Res {
    let theory = emit_tgood(&psi.sets()?, sigma)?;
    let text = theory.render();
    let sentences: Vec<Value> = theory
        .sentences
        .iter()
        .map(|(c, f)| json!({ "clause": c.label(), "sentence": f.to_string() }))
        .collect();
    emit(cli, json!({ "sentences": sentences }), || text.clone());
    Ok(true)
}

fn report_text(r: &GoodnessReport) -> String {
    let mut s = String::new();
    for c in &r.clauses {
        let status = match c.holds {
            Some(true) => "holds",
            Some(false) => "fails",
            None => "undetermined",
        };
        s.push_str(&format!("{:<20} {status:<13} ({} checked) {}\n", c.clause.label(), c.checked, c.detail));
    }
    let verified = r.witnesses.iter().filter(|w| w.verified).count();
    s.push_str(&format!("cover witnesses: {verified}/{} verified\n", r.witnesses.len()));
    s.push_str(&format!("good: {}\n", r.good()));
    s
}

fn cmd_check_goodness(cli: &Cli, target: &TargetArgs, psi: &PsiArgs, samples: usize) -> Res {
    let psi = psi.sets()?;
    let report = if let Some(p) = &target.structure {
        let s = LStructure::from_json(&read(p)?)?;
        check_goodness(GoodnessTarget::Finite(&s), &psi, samples)?
    } else if let Some(p) = &target.finite_model {
        let lift = lift_to_lstructure(&FiniteModel::from_json(&read(p)?)?, 0)?;
        if !lift.clopen_base {
            eprintln!("note: clopens are not a base; using the field generated by the opens");
        }
        check_goodness(GoodnessTarget::Finite(&lift.structure), &psi, samples)?
    } else {
        let p = target.cantor.as_ref().expect("clap enforces one target");
        let m = SymbolicModel::from_json(&read(p)?)?;
        if m.space() != Space::Cantor {
            return Err("the goodness check needs a Cantor model".into());
        }
        check_goodness(GoodnessTarget::Cantor(&m), &psi, samples)?
    };
    emit(cli, serde_json::to_value(&report).expect("serializable"), || report_text(&report));
    Ok(report.good())
}

fn run(cli: &Cli) -> Res {
    match &cli.cmd {
        Cmd::Parse { formula, rewrite } => cmd_parse(cli, formula, rewrite),
        Cmd::EvalKripke { model, formula, world } => cmd_eval_kripke(cli, model, formula, world.as_deref()),
        Cmd::EvalTopo { model, formula, point } => cmd_eval_topo(cli, model, formula, point.as_deref()),
        Cmd::EvalRegion { space, model, formula, point } => {
            cmd_eval_region(cli, *space, model, formula, point.as_deref())
        }
        Cmd::Realize { model, world, depth, formula } => cmd_realize(cli, model, world, *depth, formula),
        Cmd::Dissect { stem, parts, epsilon, samples } => cmd_dissect(cli, stem, *parts, *epsilon, *samples),
        Cmd::Witness { kind, n } => cmd_witness(cli, *kind, *n),
        Cmd::CheckProof { system, proof, premise, conclusion } => {
            cmd_check_proof(cli, *system, proof, premise, conclusion.as_ref())
        }
        Cmd::Translate { formula, var, at_k } => cmd_translate(cli, formula, var, *at_k),
        Cmd::EmitTgood { psi, sigma } => cmd_emit_tgood(cli, psi, sigma),
        Cmd::CheckGoodness { target, psi, samples } => cmd_check_goodness(cli, target, psi, *samples),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
