//! Hilbert systems and a proof checker.
//!
//! Axiom schemas are ordinary formulas whose atoms `phi`, `psi`, `chi` are
//! metavariables. Propositional tautologies are recognised by truth tables
//! over maximal modal subformulas.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{classify, parse, Formula, FormulaError, Fragment};

/// Metavariables usable in schemas and substitution maps.
pub const METAVARS: [&str; 3] = ["phi", "psi", "chi"];

/// Truth tables are refused beyond this many propositional letters.
pub const MAX_TAUTOLOGY_LETTERS: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HilbertError {
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("malformed proof: {0}")]
    Json(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SystemId {
    S4,
    KD4,
    S4U,
    KD4U,
    S4DT1S,
    DT1,
}

impl SystemId {
    pub const ALL: [SystemId; 6] =
        [SystemId::S4, SystemId::KD4, SystemId::S4U, SystemId::KD4U, SystemId::S4DT1S, SystemId::DT1];
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for SystemId {
    type Err = HilbertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SystemId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| HilbertError::UnknownSystem(s.to_string()))
    }
}

/// Which modality a generalisation step introduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenMode {
    #[serde(rename = "A")]
    Univ,
    #[serde(rename = "box")]
    Box,
    #[serde(rename = "d")]
    CoDeriv,
    #[serde(rename = "diff")]
    Diff,
}

impl GenMode {
    fn apply(self, f: Formula) -> Formula {
        match self {
            GenMode::Univ => Formula::univ(f),
            GenMode::Box => Formula::boxed(f),
            GenMode::CoDeriv => Formula::coderiv(f),
            GenMode::Diff => Formula::diff_box(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    pub id: SystemId,
    pub schemas: Vec<Schema>,
    pub gen_modes: Vec<GenMode>,
    pub substitution: bool,
    /// Connectives allowed in step formulas.
    pub language: Fragment,
    /// `A f` abbreviates `f & [!=]f` and is expanded before matching.
    pub defined_univ: bool,
}

fn schemas(list: &[(&'static str, &str)]) -> Vec<Schema> {
    list.iter()
        .map(|(name, text)| Schema { name, formula: parse(text).expect("built-in schema parses") })
        .collect()
}

const K_BOX: (&str, &str) = ("K", "[](phi -> psi) -> ([]phi -> []psi)");
const T_BOX: (&str, &str) = ("T", "[]phi -> phi");
const FOUR_BOX: (&str, &str) = ("4", "[]phi -> [][]phi");
const K_D: (&str, &str) = ("Kd", "[d](phi -> psi) -> ([d]phi -> [d]psi)");
const D_D: (&str, &str) = ("D", "<d>true");
const FOUR_D: (&str, &str) = ("4d", "[d]phi -> [d][d]phi");
const K_A: (&str, &str) = ("KA", "A (phi -> psi) -> (A phi -> A psi)");
const U1: (&str, &str) = ("U1", "A phi -> phi");
const U2: (&str, &str) = ("U2", "phi -> A E phi");
const U3: (&str, &str) = ("U3", "A phi -> A A phi");
const K_DIFF: (&str, &str) = ("Kdiff", "[!=](phi -> psi) -> ([!=]phi -> [!=]psi)");

impl System {
    pub fn get(id: SystemId) -> System {
        let fr = |b: bool, d: bool, u: bool, diff: bool| Fragment {
            uses_box: b,
            uses_coderiv: d,
            uses_univ: u,
            uses_diff: diff,
            ..Fragment::default()
        };
        let (list, gen_modes, substitution, language, defined_univ) = match id {
            SystemId::S4 => (vec![K_BOX, T_BOX, FOUR_BOX], vec![GenMode::Box], false, fr(true, false, false, false), false),
            SystemId::KD4 => (vec![K_D, D_D, FOUR_D], vec![GenMode::CoDeriv], false, fr(false, true, false, false), false),
            SystemId::S4U => (
                vec![K_BOX, T_BOX, FOUR_BOX, K_A, U1, U2, U3, ("U4", "A phi -> []phi")],
                vec![GenMode::Univ],
                false,
                fr(true, false, true, false),
                false,
            ),
            SystemId::KD4U => (
                vec![K_D, D_D, FOUR_D, K_A, U1, U2, U3, ("U4", "A phi -> [d]phi")],
                vec![GenMode::Univ],
                false,
                fr(false, true, true, false),
                false,
            ),
            SystemId::S4DT1S => (
                vec![
                    K_BOX,
                    T_BOX,
                    FOUR_BOX,
                    K_DIFF,
                    ("DT1", "phi -> [!=]<!=>phi"),
                    ("DT2", "A phi -> []phi & [!=][!=]phi"),
                    ("DT3", "[!=]phi -> <>phi & [!=][]phi"),
                ],
                vec![GenMode::Box, GenMode::Diff, GenMode::Univ],
                true,
                fr(true, false, true, true),
                true,
            ),
            SystemId::DT1 => (
                vec![
                    K_D,
                    D_D,
                    FOUR_D,
                    K_DIFF,
                    ("Ddiff", "<!=>true"),
                    ("Wdiff", "A phi -> [!=][!=]phi"),
                    ("DU", "[!=]phi -> A [d]phi"),
                ],
                vec![GenMode::CoDeriv, GenMode::Diff, GenMode::Univ],
                false,
                fr(false, true, true, true),
                true,
            ),
        };
        System { id, schemas: schemas(&list), gen_modes, substitution, language, defined_univ }
    }

    pub fn schema(&self, name: &str) -> Option<&Schema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    /// Normal form used for comparisons inside this system.
    pub fn normalize(&self, f: &Formula) -> Formula {
        if self.defined_univ {
            expand_univ(f)
        } else {
            f.clone()
        }
    }

    pub fn in_language(&self, f: &Formula) -> bool {
        classify(f).0.within(self.language)
    }
}

/// Replace `A f` by `f & [!=]f` throughout.
pub fn expand_univ(f: &Formula) -> Formula {
    match f {
        Formula::Univ(a) => {
            let a = expand_univ(a);
            Formula::and(a.clone(), Formula::diff_box(a))
        }
        _ => f.map_children(expand_univ),
    }
}

// ---------------------------------------------------------------------------
// Matching

pub type Substitution = BTreeMap<String, Formula>;

/// Extend `binding` so that `schema` instantiates to `f`.
fn unify(schema: &Formula, f: &Formula, binding: &mut Substitution) -> bool {
    match (schema, f) {
        (Formula::Atom(v), _) if METAVARS.contains(&v.as_str()) => match binding.get(v) {
            Some(bound) => bound == f,
            None => {
                binding.insert(v.clone(), f.clone());
                true
            }
        },
        (Formula::Atom(a), Formula::Atom(b)) => a == b,
        (Formula::Top, Formula::Top) => true,
        (Formula::Neg(a), Formula::Neg(b))
        | (Formula::Box(a), Formula::Box(b))
        | (Formula::CoDeriv(a), Formula::CoDeriv(b))
        | (Formula::Univ(a), Formula::Univ(b))
        | (Formula::DiffBox(a), Formula::DiffBox(b)) => unify(a, b, binding),
        (Formula::Count(n, a), Formula::Count(m, b)) => n == m && unify(a, b, binding),
        (Formula::And(a1, a2), Formula::And(b1, b2)) => unify(a1, b1, binding) && unify(a2, b2, binding),
        (Formula::Tangle(xs), Formula::Tangle(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify(x, y, binding))
        }
        _ => false,
    }
}

/// A schema of `sys` (or `taut`) with a substitution producing `f`.
pub fn match_axiom(sys: &System, f: &Formula) -> Option<(String, Substitution)> {
    let target = sys.normalize(f);
    for s in &sys.schemas {
        let mut binding = Substitution::new();
        if unify(&sys.normalize(&s.formula), &target, &mut binding) {
            return Some((s.name.to_string(), binding));
        }
    }
    matches!(is_tautology(&target), Some(true)).then(|| ("taut".to_string(), Substitution::new()))
}

/// Instance of a named schema.
pub fn instantiate(sys: &System, name: &str, subst: &Substitution) -> Option<Formula> {
    sys.schema(name).map(|s| s.formula.substitute(subst))
}

/// Truth-table check treating maximal modal subformulas as letters; `None`
/// when there are too many letters.
pub fn is_tautology(f: &Formula) -> Option<bool> {
    let mut letters: Vec<Formula> = Vec::new();
    collect_letters(f, &mut letters);
    if letters.len() > MAX_TAUTOLOGY_LETTERS {
        return None;
    }
    let n = letters.len();
    Some((0u32..1 << n).all(|row| truth(f, &letters, row)))
}

fn collect_letters(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::Top => {}
        Formula::Neg(a) => collect_letters(a, out),
        Formula::And(a, b) => {
            collect_letters(a, out);
            collect_letters(b, out);
        }
        other => {
            if !out.contains(other) {
                out.push(other.clone());
            }
        }
    }
}

fn truth(f: &Formula, letters: &[Formula], row: u32) -> bool {
    match f {
        Formula::Top => true,
        Formula::Neg(a) => !truth(a, letters, row),
        Formula::And(a, b) => truth(a, letters, row) && truth(b, letters, row),
        other => {
            let i = letters.iter().position(|l| l == other).expect("letter collected");
            row >> i & 1 == 1
        }
    }
}

// ---------------------------------------------------------------------------
// Proofs

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Justification {
    Axiom {
        axiom: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subst: Option<BTreeMap<String, String>>,
    },
    ModusPonens {
        mp: [usize; 2],
    },
    Gen {
        gen: usize,
        mode: GenMode,
    },
    Premise {
        premise: usize,
    },
    SubstRule {
        #[serde(rename = "subst-rule")]
        from: usize,
        map: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub formula: String,
    pub by: Justification,
}

/// Steps numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Proof {
    pub steps: Vec<Step>,
}

impl Proof {
    pub fn from_json(text: &str) -> Result<Proof, HilbertError> {
        serde_json::from_str(text).map_err(|e| HilbertError::Json(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Accepted { conclusion: String },
    Rejected { step: usize, reason: String },
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        matches!(self, Verdict::Accepted { .. })
    }

    pub fn rejected_step(&self) -> Option<usize> {
        match self {
            Verdict::Rejected { step, .. } => Some(*step),
            Verdict::Accepted { .. } => None,
        }
    }
}

struct Checked {
    formula: Formula,
    normal: Formula,
    uses_premises: bool,
}

/// Check every step; the certified judgment is `premises ⊢ last step`.
pub fn check_proof(sys: &System, premises: &[Formula], pf: &Proof) -> Verdict {
    match check_steps(sys, premises, pf) {
        Ok(done) => match done.last() {
            Some(last) => Verdict::Accepted { conclusion: last.formula.render() },
            None => Verdict::Rejected { step: 0, reason: "empty proof".into() },
        },
        Err((step, reason)) => Verdict::Rejected { step, reason },
    }
}

fn check_steps(sys: &System, premises: &[Formula], pf: &Proof) -> Result<Vec<Checked>, (usize, String)> {
    let mut done: Vec<Checked> = Vec::new();
    for (i, step) in pf.steps.iter().enumerate() {
        let n = i + 1;
        let fail = |reason: String| (n, reason);
        let formula = parse(&step.formula).map_err(|e| fail(format!("malformed formula: {e}")))?;
        if !sys.in_language(&formula) {
            return Err(fail(format!("formula outside the language of {}", sys.id)));
        }
        let normal = sys.normalize(&formula);
        let earlier = |k: usize| -> Result<&Checked, (usize, String)> {
            if k == 0 || k >= n {
                Err(fail(format!("step {k} is not an earlier step")))
            } else {
                Ok(&done[k - 1])
            }
        };
        let uses_premises = match &step.by {
            Justification::Axiom { axiom, subst } => {
                check_axiom(sys, axiom, subst.as_ref(), &normal).map_err(fail)?;
                false
            }
            Justification::Premise { premise } => {
                let p = premise
                    .checked_sub(1)
                    .and_then(|k| premises.get(k))
                    .ok_or_else(|| fail(format!("no premise {premise}")))?;
                if sys.normalize(p) != normal {
                    return Err(fail(format!("premise {premise} is `{p}`, not this formula")));
                }
                true
            }
            Justification::ModusPonens { mp: [a, b] } => {
                let (x, y) = (earlier(*a)?, earlier(*b)?);
                let expected = |ant: &Formula| Formula::implies(ant.clone(), normal.clone());
                if y.normal != expected(&x.normal) && x.normal != expected(&y.normal) {
                    return Err(fail(format!("steps {a} and {b} do not give this formula by modus ponens")));
                }
                x.uses_premises || y.uses_premises
            }
            Justification::Gen { gen, mode } => {
                if !sys.gen_modes.contains(mode) {
                    return Err(fail(format!("{} has no generalisation rule for {mode:?}", sys.id)));
                }
                let src = earlier(*gen)?;
                if src.uses_premises {
                    return Err(fail(format!("generalisation of step {gen}, which depends on premises")));
                }
                if sys.normalize(&mode.apply(src.formula.clone())) != normal {
                    return Err(fail(format!("not the generalisation of step {gen}")));
                }
                false
            }
            Justification::SubstRule { from, map } => {
                if !sys.substitution {
                    return Err(fail(format!("{} has no substitution rule", sys.id)));
                }
                let src = earlier(*from)?;
                if src.uses_premises {
                    return Err(fail(format!("substitution into step {from}, which depends on premises")));
                }
                let map = parse_map(map).map_err(fail)?;
                if sys.normalize(&src.formula.substitute(&map)) != normal {
                    return Err(fail(format!("not a substitution instance of step {from}")));
                }
                false
            }
        };
        done.push(Checked { formula, normal, uses_premises });
    }
    Ok(done)
}

fn parse_map(map: &BTreeMap<String, String>) -> Result<Substitution, String> {
    map.iter()
        .map(|(k, v)| parse(v).map(|f| (k.clone(), f)).map_err(|e| format!("substitution for `{k}`: {e}")))
        .collect()
}

fn check_axiom(sys: &System, name: &str, subst: Option<&BTreeMap<String, String>>, normal: &Formula) -> Result<(), String> {
    if name == "taut" {
        return match is_tautology(normal) {
            Some(true) => Ok(()),
            Some(false) => Err("not a propositional tautology".into()),
            None => Err(format!("too many propositional letters (limit {MAX_TAUTOLOGY_LETTERS})")),
        };
    }
    let schema = sys.schema(name).ok_or_else(|| format!("unknown axiom `{name}` in {}", sys.id))?;
    let pattern = sys.normalize(&schema.formula);
    match subst {
        Some(map) => {
            let map = parse_map(map)?;
            if sys.normalize(&schema.formula.substitute(&map)) == *normal {
                Ok(())
            } else {
                Err(format!("not the stated instance of axiom `{name}`"))
            }
        }
        None => {
            if unify(&pattern, normal, &mut Substitution::new()) {
                Ok(())
            } else {
                Err(format!("not an instance of axiom `{name}`"))
            }
        }
    }
}

/// Accept when `pf` is premise-free and proves `(/\ S0) -> phi` for some
/// finite `S0 ⊆ sigma`, in any order and bracketing; `phi` alone counts as
/// the empty conjunction.
pub fn check_entailment_certificate(sys: &System, sigma: &[Formula], phi: &Formula, pf: &Proof) -> Verdict {
    let verdict = check_proof(sys, &[], pf);
    let Verdict::Accepted { conclusion } = &verdict else {
        return verdict;
    };
    let last = pf.steps.len();
    let concl = sys.normalize(&parse(conclusion).expect("rendered formulas parse"));
    let target = sys.normalize(phi);
    let members: Vec<Formula> = sigma.iter().map(|s| sys.normalize(s)).collect();
    let ok = concl == target
        || match &concl {
            Formula::Neg(inner) => match inner.as_ref() {
                Formula::And(ant, neg) => **neg == Formula::not(target.clone()) && conj_of_members(ant, &members),
                _ => false,
            },
            _ => false,
        };
    if ok {
        verdict
    } else {
        Verdict::Rejected {
            step: last,
            reason: format!("conclusion `{conclusion}` is not a conjunction of premises implying `{phi}`"),
        }
    }
}

fn conj_of_members(f: &Formula, members: &[Formula]) -> bool {
    members.contains(f)
        || *f == Formula::Top
        || matches!(f, Formula::And(a, b) if conj_of_members(a, members) && conj_of_members(b, members))
}
