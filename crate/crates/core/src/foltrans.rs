//! Two-sorted first-order view of topological models.
//!
//! Formulas of the interior/graded language translate into a signature with
//! a point sort and a set sort. Finite two-sorted structures are evaluated
//! directly; the Cantor clopen structure is handled through the region
//! engine.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alexandrov::{FiniteModel, PointSet};
use crate::formula::{classify, rewrite_eliminate, Formula, Fragment, RewriteRule};
use crate::region::{eval_symbolic, BasePoint, Region, RegionError, Space, SymbolicModel, Sym};

/// Set domains larger than this are refused; table checks are cubic.
pub const MAX_SET_ELEMENTS: usize = 256;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FolError {
    #[error("outside the translatable fragment: {0}")]
    Fragment(String),
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable `{0}` is not assigned")]
    Unassigned(String),
    #[error("variable `{0}` is used at the wrong sort")]
    SortMismatch(String),
    #[error("no point named `{0}`")]
    UnknownPoint(String),
    #[error("no set element named `{0}`")]
    UnknownSet(String),
    #[error("set operations are not a boolean algebra: {0}")]
    NotBooleanAlgebra(String),
    #[error("malformed structure: {0}")]
    Table(String),
    #[error("set domain would have {0} elements (limit {MAX_SET_ELEMENTS})")]
    TooLarge(usize),
    #[error("formula set {0} in the list is empty")]
    EmptyPsi(usize),
    #[error("forcing is defined at Cantor points only")]
    NotCantor,
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("bad JSON: {0}")]
    Json(String),
}

// ---------------------------------------------------------------------------
// Syntax

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sort {
    Point,
    Set,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PTerm {
    Var(String),
    /// The distinguished point constant.
    K,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum STerm {
    Var(String),
    Plus(Box<STerm>, Box<STerm>),
    Minus(Box<STerm>),
    Zero,
    One,
}

impl STerm {
    pub fn var(v: &str) -> STerm {
        STerm::Var(v.to_string())
    }

    pub fn plus(a: STerm, b: STerm) -> STerm {
        STerm::Plus(Box::new(a), Box::new(b))
    }

    pub fn minus(a: STerm) -> STerm {
        STerm::Minus(Box::new(a))
    }

    /// Left-nested sum; `0` when empty.
    pub fn sum(items: impl IntoIterator<Item = STerm>) -> STerm {
        items.into_iter().reduce(STerm::plus).unwrap_or(STerm::Zero)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Fol {
    True,
    False,
    /// `P_p(t)`.
    Pred(String, PTerm),
    In(PTerm, STerm),
    EqP(PTerm, PTerm),
    EqS(STerm, STerm),
    Not(Box<Fol>),
    And(Box<Fol>, Box<Fol>),
    Or(Box<Fol>, Box<Fol>),
    Implies(Box<Fol>, Box<Fol>),
    Iff(Box<Fol>, Box<Fol>),
    Forall(Sort, String, Box<Fol>),
    Exists(Sort, String, Box<Fol>),
}

fn pv(v: &str) -> PTerm {
    PTerm::Var(v.to_string())
}

impl Fol {
    pub fn not(a: Fol) -> Fol {
        Fol::Not(Box::new(a))
    }

    pub fn and(a: Fol, b: Fol) -> Fol {
        Fol::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Fol, b: Fol) -> Fol {
        Fol::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Fol, b: Fol) -> Fol {
        Fol::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Fol, b: Fol) -> Fol {
        Fol::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(sort: Sort, v: &str, body: Fol) -> Fol {
        Fol::Forall(sort, v.to_string(), Box::new(body))
    }

    pub fn exists(sort: Sort, v: &str, body: Fol) -> Fol {
        Fol::Exists(sort, v.to_string(), Box::new(body))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn conj(items: impl IntoIterator<Item = Fol>) -> Fol {
        items.into_iter().reduce(Fol::and).unwrap_or(Fol::True)
    }

    pub fn disj(items: impl IntoIterator<Item = Fol>) -> Fol {
        items.into_iter().reduce(Fol::or).unwrap_or(Fol::False)
    }

    /// `x in b` for variables.
    pub fn member(x: &str, b: &str) -> Fol {
        Fol::In(pv(x), STerm::var(b))
    }

    /// Free variables with their sorts.
    pub fn free_vars(&self) -> Result<BTreeMap<String, Sort>, FolError> {
        let mut out = BTreeMap::new();
        self.collect_free(&mut Vec::new(), &mut out)?;
        Ok(out)
    }

    fn collect_free(&self, bound: &mut Vec<(String, Sort)>, out: &mut BTreeMap<String, Sort>) -> Result<(), FolError> {
        fn note(v: &str, s: Sort, bound: &[(String, Sort)], out: &mut BTreeMap<String, Sort>) -> Result<(), FolError> {
            if let Some((_, bs)) = bound.iter().rev().find(|(b, _)| b == v) {
                return if *bs == s { Ok(()) } else { Err(FolError::SortMismatch(v.to_string())) };
            }
            match out.insert(v.to_string(), s) {
                Some(prev) if prev != s => Err(FolError::SortMismatch(v.to_string())),
                _ => Ok(()),
            }
        }
        fn pterm(t: &PTerm, bound: &[(String, Sort)], out: &mut BTreeMap<String, Sort>) -> Result<(), FolError> {
            match t {
                PTerm::Var(v) => note(v, Sort::Point, bound, out),
                PTerm::K => Ok(()),
            }
        }
        fn sterm(t: &STerm, bound: &[(String, Sort)], out: &mut BTreeMap<String, Sort>) -> Result<(), FolError> {
            match t {
                STerm::Var(v) => note(v, Sort::Set, bound, out),
                STerm::Plus(a, b) => {
                    sterm(a, bound, out)?;
                    sterm(b, bound, out)
                }
                STerm::Minus(a) => sterm(a, bound, out),
                STerm::Zero | STerm::One => Ok(()),
            }
        }
        match self {
            Fol::True | Fol::False => Ok(()),
            Fol::Pred(_, t) => pterm(t, bound, out),
            Fol::In(t, s) => {
                pterm(t, bound, out)?;
                sterm(s, bound, out)
            }
            Fol::EqP(a, b) => {
                pterm(a, bound, out)?;
                pterm(b, bound, out)
            }
            Fol::EqS(a, b) => {
                sterm(a, bound, out)?;
                sterm(b, bound, out)
            }
            Fol::Not(a) => a.collect_free(bound, out),
            Fol::And(a, b) | Fol::Or(a, b) | Fol::Implies(a, b) | Fol::Iff(a, b) => {
                a.collect_free(bound, out)?;
                b.collect_free(bound, out)
            }
            Fol::Forall(s, v, a) | Fol::Exists(s, v, a) => {
                bound.push((v.clone(), *s));
                let r = a.collect_free(bound, out);
                bound.pop();
                r
            }
        }
    }

    /// Replace free occurrences of the point variable `x` by `t`.
    pub fn subst_point(&self, x: &str, t: &PTerm) -> Fol {
        let sp = |p: &PTerm| match p {
            PTerm::Var(v) if v == x => t.clone(),
            other => other.clone(),
        };
        match self {
            Fol::True | Fol::False | Fol::EqS(..) => self.clone(),
            Fol::Pred(p, a) => Fol::Pred(p.clone(), sp(a)),
            Fol::In(a, s) => Fol::In(sp(a), s.clone()),
            Fol::EqP(a, b) => Fol::EqP(sp(a), sp(b)),
            Fol::Not(a) => Fol::not(a.subst_point(x, t)),
            Fol::And(a, b) => Fol::and(a.subst_point(x, t), b.subst_point(x, t)),
            Fol::Or(a, b) => Fol::or(a.subst_point(x, t), b.subst_point(x, t)),
            Fol::Implies(a, b) => Fol::implies(a.subst_point(x, t), b.subst_point(x, t)),
            Fol::Iff(a, b) => Fol::iff(a.subst_point(x, t), b.subst_point(x, t)),
            Fol::Forall(Sort::Point, v, _) | Fol::Exists(Sort::Point, v, _) if v == x => self.clone(),
            Fol::Forall(s, v, a) => Fol::forall(*s, v, a.subst_point(x, t)),
            Fol::Exists(s, v, a) => Fol::exists(*s, v, a.subst_point(x, t)),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Fol::Iff(..) => 1,
            Fol::Implies(..) => 2,
            Fol::Or(..) => 3,
            Fol::And(..) => 4,
            Fol::Not(_) | Fol::Forall(..) | Fol::Exists(..) => 5,
            _ => 6,
        }
    }

    fn write(&self, out: &mut String, min: u8) {
        let paren = self.prec() < min;
        if paren {
            out.push('(');
        }
        let bin = |out: &mut String, a: &Fol, op: &str, b: &Fol, la: u8, lb: u8| {
            a.write(out, la);
            out.push_str(op);
            b.write(out, lb);
        };
        match self {
            Fol::True => out.push_str("true"),
            Fol::False => out.push_str("false"),
            Fol::Pred(p, t) => out.push_str(&format!("P_{p}({t})")),
            Fol::In(t, s) => out.push_str(&format!("{t} in {s}")),
            Fol::EqP(a, b) => out.push_str(&format!("{a} = {b}")),
            Fol::EqS(a, b) => out.push_str(&format!("{a} = {b}")),
            Fol::Not(a) => {
                out.push('~');
                a.write(out, 5);
            }
            Fol::And(a, b) => bin(out, a, " & ", b, 4, 5),
            Fol::Or(a, b) => bin(out, a, " | ", b, 3, 4),
            Fol::Implies(a, b) => bin(out, a, " -> ", b, 3, 2),
            Fol::Iff(a, b) => bin(out, a, " <-> ", b, 1, 2),
            Fol::Forall(s, v, a) | Fol::Exists(s, v, a) => {
                let q = if matches!(self, Fol::Forall(..)) { 'A' } else { 'E' };
                let s = if *s == Sort::Point { 'p' } else { 's' };
                out.push_str(&format!("{q}{s}:{v} "));
                a.write(out, 5);
            }
        }
        if paren {
            out.push(')');
        }
    }
}

impl fmt::Display for PTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PTerm::Var(v) => f.write_str(v),
            PTerm::K => f.write_str("k"),
        }
    }
}

impl STerm {
    fn write(&self, out: &mut String, min: u8) {
        match self {
            STerm::Var(v) => out.push_str(v),
            STerm::Zero => out.push('0'),
            STerm::One => out.push('1'),
            STerm::Minus(a) => {
                out.push('-');
                a.write(out, 2);
            }
            STerm::Plus(a, b) => {
                if min > 1 {
                    out.push('(');
                }
                a.write(out, 1);
                out.push_str(" + ");
                b.write(out, 2);
                if min > 1 {
                    out.push(')');
                }
            }
        }
    }
}

impl fmt::Display for STerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, 0);
        f.write_str(&s)
    }
}

impl fmt::Display for Fol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, 0);
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Tilde,
    And,
    Or,
    Imp,
    Iff,
    Eq,
    Plus,
    Minus,
    Colon,
    Zero,
    One,
    Ident(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FolError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'~' => Tok::Tilde,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'=' => Tok::Eq,
            b'+' => Tok::Plus,
            b':' => Tok::Colon,
            b'0' => Tok::Zero,
            b'1' => Tok::One,
            b'-' if text[i..].starts_with("->") => {
                i += 1;
                Tok::Imp
            }
            b'-' => Tok::Minus,
            b'<' if text[i..].starts_with("<->") => {
                i += 2;
                Tok::Iff
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => return Err(FolError::Syntax { pos: i, msg: format!("unexpected `{}`", c as char) }),
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Raw {
    Id(String),
    K,
    Zero,
    One,
    Plus(Box<Raw>, Box<Raw>),
    Minus(Box<Raw>),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    scope: Vec<(String, Sort)>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == Some(t)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FolError> {
        let pos = self.toks.get(self.pos).map_or(self.end, |(p, _)| *p);
        Err(FolError::Syntax { pos, msg: msg.into() })
    }

    fn expect(&mut self, t: Tok) -> Result<(), FolError> {
        if self.at(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {t:?}"))
        }
    }

    fn iff(&mut self) -> Result<Fol, FolError> {
        let mut lhs = self.imp()?;
        while self.at(&Tok::Iff) {
            self.pos += 1;
            lhs = Fol::iff(lhs, self.imp()?);
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Fol, FolError> {
        let lhs = self.or()?;
        if self.at(&Tok::Imp) {
            self.pos += 1;
            return Ok(Fol::implies(lhs, self.imp()?));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Fol, FolError> {
        let mut lhs = self.and()?;
        while self.at(&Tok::Or) {
            self.pos += 1;
            lhs = Fol::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Fol, FolError> {
        let mut lhs = self.unary()?;
        while self.at(&Tok::And) {
            self.pos += 1;
            lhs = Fol::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn quantifier(&self) -> Option<(bool, Sort)> {
        let Some(Tok::Ident(q)) = self.peek() else { return None };
        if self.toks.get(self.pos + 1).map(|(_, t)| t) != Some(&Tok::Colon) {
            return None;
        }
        match q.as_str() {
            "Ap" => Some((true, Sort::Point)),
            "As" => Some((true, Sort::Set)),
            "Ep" => Some((false, Sort::Point)),
            "Es" => Some((false, Sort::Set)),
            _ => None,
        }
    }

    fn unary(&mut self) -> Result<Fol, FolError> {
        if self.at(&Tok::Tilde) {
            self.pos += 1;
            return Ok(Fol::not(self.unary()?));
        }
        if let Some((all, sort)) = self.quantifier() {
            self.pos += 2;
            let v = match self.peek() {
                Some(Tok::Ident(v)) if !is_keyword(v) => v.clone(),
                _ => return self.err("expected a variable"),
            };
            self.pos += 1;
            self.scope.push((v.clone(), sort));
            let body = self.unary();
            self.scope.pop();
            let body = body?;
            return Ok(if all { Fol::forall(sort, &v, body) } else { Fol::exists(sort, &v, body) });
        }
        match self.peek() {
            Some(Tok::Ident(w)) if w == "true" => {
                self.pos += 1;
                return Ok(Fol::True);
            }
            Some(Tok::Ident(w)) if w == "false" => {
                self.pos += 1;
                return Ok(Fol::False);
            }
            Some(Tok::Ident(w)) if w.starts_with("P_") && w.len() > 2 => {
                let p = w[2..].to_string();
                self.pos += 1;
                self.expect(Tok::LParen)?;
                let t = self.term()?;
                let t = self.as_point(t)?;
                self.expect(Tok::RParen)?;
                return Ok(Fol::Pred(p, t));
            }
            _ => {}
        }
        let save = self.pos;
        match self.relation() {
            Ok(f) => Ok(f),
            Err(e) => {
                self.pos = save;
                if self.at(&Tok::LParen) {
                    self.pos += 1;
                    let f = self.iff()?;
                    self.expect(Tok::RParen)?;
                    Ok(f)
                } else {
                    Err(e)
                }
            }
        }
    }

    fn relation(&mut self) -> Result<Fol, FolError> {
        let lhs = self.term()?;
        match self.peek() {
            Some(Tok::Ident(w)) if w == "in" => {
                self.pos += 1;
                let rhs = self.term()?;
                Ok(Fol::In(self.as_point(lhs)?, self.as_set(rhs)?))
            }
            Some(Tok::Eq) => {
                self.pos += 1;
                let rhs = self.term()?;
                let set = self.guess_sort(&lhs) == Some(Sort::Set) || self.guess_sort(&rhs) == Some(Sort::Set);
                if set {
                    Ok(Fol::EqS(self.as_set(lhs)?, self.as_set(rhs)?))
                } else {
                    Ok(Fol::EqP(self.as_point(lhs)?, self.as_point(rhs)?))
                }
            }
            _ => self.err("expected `in` or `=`"),
        }
    }

    fn term(&mut self) -> Result<Raw, FolError> {
        let mut lhs = self.term_unary()?;
        while self.at(&Tok::Plus) {
            self.pos += 1;
            lhs = Raw::Plus(Box::new(lhs), Box::new(self.term_unary()?));
        }
        Ok(lhs)
    }

    fn term_unary(&mut self) -> Result<Raw, FolError> {
        let t = match self.peek().cloned() {
            Some(Tok::Minus) => {
                self.pos += 1;
                return Ok(Raw::Minus(Box::new(self.term_unary()?)));
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                return Ok(t);
            }
            Some(Tok::Zero) => Raw::Zero,
            Some(Tok::One) => Raw::One,
            Some(Tok::Ident(w)) if w == "k" => Raw::K,
            Some(Tok::Ident(w)) if !is_keyword(&w) => Raw::Id(w),
            _ => return self.err("expected a term"),
        };
        self.pos += 1;
        Ok(t)
    }

    fn bound_sort(&self, v: &str) -> Option<Sort> {
        self.scope.iter().rev().find(|(b, _)| b == v).map(|(_, s)| *s)
    }

    fn guess_sort(&self, t: &Raw) -> Option<Sort> {
        match t {
            Raw::Id(v) => self.bound_sort(v),
            Raw::K => Some(Sort::Point),
            _ => Some(Sort::Set),
        }
    }

    fn as_point(&self, t: Raw) -> Result<PTerm, FolError> {
        match t {
            Raw::K => Ok(PTerm::K),
            Raw::Id(v) if self.bound_sort(&v) != Some(Sort::Set) => Ok(PTerm::Var(v)),
            Raw::Id(v) => Err(FolError::SortMismatch(v)),
            _ => self.err("expected a point term"),
        }
    }

    fn as_set(&self, t: Raw) -> Result<STerm, FolError> {
        Ok(match t {
            Raw::Id(v) if self.bound_sort(&v) != Some(Sort::Point) => STerm::Var(v),
            Raw::Id(v) => return Err(FolError::SortMismatch(v)),
            Raw::K => return Err(FolError::SortMismatch("k".into())),
            Raw::Zero => STerm::Zero,
            Raw::One => STerm::One,
            Raw::Plus(a, b) => STerm::plus(self.as_set(*a)?, self.as_set(*b)?),
            Raw::Minus(a) => STerm::minus(self.as_set(*a)?),
        })
    }
}

fn is_keyword(w: &str) -> bool {
    matches!(w, "in" | "true" | "false" | "k")
}

/// Parse one formula. Unbound identifiers are free variables; their sort is
/// read off their position, defaulting to point sort in `t = u`.
pub fn parse_fol(text: &str) -> Result<Fol, FolError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, end: text.len(), scope: Vec::new() };
    let f = p.iff()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    f.free_vars()?;
    Ok(f)
}

// ---------------------------------------------------------------------------
// Standard translation

struct Fresh {
    avoid: String,
    n: usize,
}

impl Fresh {
    fn next(&mut self, prefix: &str) -> String {
        loop {
            self.n += 1;
            let v = format!("{prefix}{}", self.n);
            if v != self.avoid {
                return v;
            }
        }
    }
}

/// Only boolean connectives, interior and counting survive translation.
pub const TRANSLATABLE: Fragment = Fragment {
    uses_box: true,
    uses_coderiv: false,
    uses_tangle: false,
    uses_univ: false,
    uses_diff: false,
    uses_count: true,
};

/// Translate `f` into a formula with at most `x` free. Universal and
/// difference modalities are first rewritten into counting.
pub fn standard_translate(f: &Formula, x: &str) -> Result<Fol, FolError> {
    let g = rewrite_eliminate(f, RewriteRule::DiffToUnivCount1);
    let g = rewrite_eliminate(&g, RewriteRule::UnivToCount);
    let (frag, _) = classify(&g);
    if !frag.within(TRANSLATABLE) {
        return Err(FolError::Fragment(format!("`{f}` uses [d] or a tangle")));
    }
    let mut fresh = Fresh { avoid: x.to_string(), n: 0 };
    Ok(translate(&g, x, &mut fresh))
}

fn translate(f: &Formula, x: &str, fresh: &mut Fresh) -> Fol {
    match f {
        Formula::Atom(p) => Fol::Pred(p.clone(), pv(x)),
        Formula::Top => Fol::True,
        Formula::Neg(a) => Fol::not(translate(a, x, fresh)),
        Formula::And(a, b) => Fol::and(translate(a, x, fresh), translate(b, x, fresh)),
        Formula::Box(a) => {
            let o = fresh.next("O");
            let y = fresh.next("y");
            let body = translate(a, &y, fresh);
            Fol::exists(
                Sort::Set,
                &o,
                Fol::and(Fol::member(x, &o), Fol::forall(Sort::Point, &y, Fol::implies(Fol::member(&y, &o), body))),
            )
        }
        Formula::Count(n, a) => {
            let vars: Vec<String> = (0..=*n).map(|_| fresh.next("y")).collect();
            let mut parts = Vec::new();
            for i in 0..vars.len() {
                for j in i + 1..vars.len() {
                    parts.push(Fol::not(Fol::EqP(pv(&vars[i]), pv(&vars[j]))));
                }
            }
            for v in &vars {
                parts.push(translate(a, v, fresh));
            }
            vars.iter().rev().fold(Fol::conj(parts), |acc, v| Fol::exists(Sort::Point, v, acc))
        }
        Formula::CoDeriv(_) | Formula::Univ(_) | Formula::DiffBox(_) | Formula::Tangle(_) => {
            unreachable!("fragment checked before translation")
        }
    }
}

// ---------------------------------------------------------------------------
// Finite two-sorted structures

/// A finite structure with a point domain and a set domain. The set
/// operations are tables over set indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LStructure {
    points: Vec<String>,
    sets: Vec<String>,
    member: Vec<PointSet>,
    plus: Vec<Vec<usize>>,
    minus: Vec<usize>,
    zero: usize,
    one: usize,
    preds: BTreeMap<String, PointSet>,
    k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LStructureJson {
    points: Vec<String>,
    sets: Vec<String>,
    member: BTreeMap<String, Vec<String>>,
    plus: Vec<Vec<usize>>,
    minus: Vec<usize>,
    zero: usize,
    one: usize,
    #[serde(default)]
    predicates: BTreeMap<String, Vec<String>>,
    k: String,
}

impl LStructure {
    /// Build and check the tables; the set operations must satisfy the
    /// boolean algebra axioms.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        points: Vec<String>,
        sets: Vec<String>,
        member: Vec<PointSet>,
        plus: Vec<Vec<usize>>,
        minus: Vec<usize>,
        zero: usize,
        one: usize,
        preds: BTreeMap<String, PointSet>,
        k: usize,
    ) -> Result<LStructure, FolError> {
        let (n, m) = (points.len(), sets.len());
        if n == 0 || n > 64 {
            return Err(FolError::Table(format!("{n} points (need 1..=64)")));
        }
        if m == 0 || m > MAX_SET_ELEMENTS {
            return Err(FolError::TooLarge(m));
        }
        let full = PointSet::full(n);
        let bad = member.len() != m
            || minus.len() != m
            || plus.len() != m
            || plus.iter().any(|r| r.len() != m || r.iter().any(|&i| i >= m))
            || minus.iter().any(|&i| i >= m)
            || zero >= m
            || one >= m
            || k >= n
            || member.iter().chain(preds.values()).any(|s| !s.is_subset(full));
        if bad {
            return Err(FolError::Table("table sizes do not match the domains".into()));
        }
        let s = LStructure { points, sets, member, plus, minus, zero, one, preds, k };
        s.check_boolean()?;
        Ok(s)
    }

    fn check_boolean(&self) -> Result<(), FolError> {
        let m = self.sets.len();
        let (p, n) = (&self.plus, &self.minus);
        let fail = |what: &str, xs: &[usize]| {
            let names: Vec<&str> = xs.iter().map(|&i| self.sets[i].as_str()).collect();
            Err(FolError::NotBooleanAlgebra(format!("{what} fails at {names:?}")))
        };
        for a in 0..m {
            if p[a][n[a]] != self.one {
                return fail("b + -b = 1", &[a]);
            }
            for b in 0..m {
                if p[a][b] != p[b][a] {
                    return fail("commutativity", &[a, b]);
                }
                if p[n[p[n[a]][b]]][n[p[n[a]][n[b]]]] != a {
                    return fail("Huntington's equation", &[a, b]);
                }
                for c in 0..m {
                    if p[a][p[b][c]] != p[p[a][b]][c] {
                        return fail("associativity", &[a, b, c]);
                    }
                }
            }
        }
        if n[self.one] != self.zero {
            return fail("0 = -1", &[self.zero]);
        }
        Ok(())
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn sets(&self) -> &[String] {
        &self.sets
    }

    /// The points of a set element.
    pub fn extent(&self, b: usize) -> PointSet {
        self.member[b]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn plus(&self, a: usize, b: usize) -> usize {
        self.plus[a][b]
    }

    pub fn minus(&self, a: usize) -> usize {
        self.minus[a]
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    pub fn one(&self) -> usize {
        self.one
    }

    pub fn predicate(&self, p: &str) -> PointSet {
        self.preds.get(p).copied().unwrap_or_default()
    }

    /// `a <= b` in the algebra.
    pub fn le(&self, a: usize, b: usize) -> bool {
        self.plus[a][b] == b
    }

    /// Some atom of the algebra, if any.
    pub fn atom(&self) -> Option<usize> {
        let m = self.sets.len();
        (0..m).find(|&a| a != self.zero && (0..m).all(|c| !self.le(c, a) || c == self.zero || c == a))
    }

    pub fn from_json(text: &str) -> Result<LStructure, FolError> {
        let raw: LStructureJson = serde_json::from_str(text).map_err(|e| FolError::Json(e.to_string()))?;
        let pidx = |name: &str| {
            raw.points.iter().position(|p| p == name).ok_or_else(|| FolError::UnknownPoint(name.to_string()))
        };
        let pset = |names: &[String]| -> Result<PointSet, FolError> {
            names.iter().map(|n| pidx(n)).collect::<Result<PointSet, _>>()
        };
        for name in raw.member.keys() {
            if !raw.sets.contains(name) {
                return Err(FolError::UnknownSet(name.clone()));
            }
        }
        let member = raw
            .sets
            .iter()
            .map(|s| raw.member.get(s).map_or(Ok(PointSet::EMPTY), |ps| pset(ps)))
            .collect::<Result<Vec<_>, _>>()?;
        let preds = raw
            .predicates
            .iter()
            .map(|(p, ps)| Ok((p.clone(), pset(ps)?)))
            .collect::<Result<BTreeMap<_, _>, FolError>>()?;
        let k = pidx(&raw.k)?;
        LStructure::new(raw.points, raw.sets, member, raw.plus, raw.minus, raw.zero, raw.one, preds, k)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names = |s: PointSet| s.iter().map(|i| self.points[i].clone()).collect::<Vec<_>>();
        let raw = LStructureJson {
            points: self.points.clone(),
            sets: self.sets.clone(),
            member: self.sets.iter().cloned().zip(self.member.iter().map(|&s| names(s))).collect(),
            plus: self.plus.clone(),
            minus: self.minus.clone(),
            zero: self.zero,
            one: self.one,
            predicates: self.preds.iter().map(|(p, &s)| (p.clone(), names(s))).collect(),
            k: self.points[self.k].clone(),
        };
        serde_json::to_value(raw).expect("structure serialises")
    }
}

/// Result of turning a finite model into a two-sorted structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lift {
    pub structure: LStructure,
    /// False when the clopens do not form a base and the set sort is the
    /// field generated by the open sets instead. In that case the set sort
    /// generates a finer topology and the translation reads `[]` over it.
    pub clopen_base: bool,
}

/// The structure whose set sort is the clopen algebra of the space, or the
/// field generated by the opens when clopens are not a base.
pub fn lift_to_lstructure(m: &FiniteModel, k_point: usize) -> Result<Lift, FolError> {
    let space = &m.space;
    let n = space.len();
    if k_point >= n {
        return Err(FolError::UnknownPoint(k_point.to_string()));
    }
    let clopen_base = space.clopens_form_base();
    // Atoms: points grouped by the clopens (resp. opens) that contain them.
    let atoms: Vec<PointSet> = if clopen_base {
        let mut seen = PointSet::EMPTY;
        let mut out = Vec::new();
        for x in 0..n {
            if !seen.contains(x) {
                let nb = space.nbhd(x);
                seen = seen.union(nb);
                out.push(nb);
            }
        }
        out
    } else {
        let mut groups: BTreeMap<u64, PointSet> = BTreeMap::new();
        for x in 0..n {
            groups.entry(space.nbhd(x).0).or_default().insert(x);
        }
        groups.into_values().collect()
    };
    if atoms.len() > MAX_SET_ELEMENTS.trailing_zeros() as usize {
        return Err(FolError::TooLarge(1usize.checked_shl(atoms.len() as u32).unwrap_or(usize::MAX)));
    }
    let mut elems: Vec<PointSet> = (0u32..1 << atoms.len())
        .map(|mask| atoms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| *a).fold(PointSet::EMPTY, PointSet::union))
        .collect();
    elems.sort();
    let idx: HashMap<PointSet, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let full = space.full();
    let plus = elems.iter().map(|&a| elems.iter().map(|&b| idx[&a.union(b)]).collect()).collect();
    let minus = elems.iter().map(|&a| idx[&full.minus(a)]).collect();
    let names = elems.iter().map(|&e| format!("{{{}}}", space.set_names(e).join(","))).collect();
    let structure = LStructure::new(
        space.points().to_vec(),
        names,
        elems.clone(),
        plus,
        minus,
        idx[&PointSet::EMPTY],
        idx[&full],
        m.valuations().clone(),
        k_point,
    )?;
    Ok(Lift { structure, clopen_base })
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Point(usize),
    Set(usize),
}

pub type FolAssignment = BTreeMap<String, Value>;

struct Eval<'a> {
    s: &'a LStructure,
    env: Vec<(&'a str, Value)>,
    free: HashMap<*const Fol, Vec<String>>,
    memo: HashMap<(*const Fol, Vec<Value>), bool>,
}

impl<'a> Eval<'a> {
    fn lookup(&self, v: &str) -> Result<Value, FolError> {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| *n == v)
            .map(|(_, x)| *x)
            .ok_or_else(|| FolError::Unassigned(v.to_string()))
    }

    fn point(&self, t: &PTerm) -> Result<usize, FolError> {
        match t {
            PTerm::K => Ok(self.s.k),
            PTerm::Var(v) => match self.lookup(v)? {
                Value::Point(i) => Ok(i),
                Value::Set(_) => Err(FolError::SortMismatch(v.clone())),
            },
        }
    }

    fn set(&self, t: &STerm) -> Result<usize, FolError> {
        Ok(match t {
            STerm::Zero => self.s.zero,
            STerm::One => self.s.one,
            STerm::Plus(a, b) => self.s.plus[self.set(a)?][self.set(b)?],
            STerm::Minus(a) => self.s.minus[self.set(a)?],
            STerm::Var(v) => match self.lookup(v)? {
                Value::Set(i) => i,
                Value::Point(_) => return Err(FolError::SortMismatch(v.clone())),
            },
        })
    }

    fn holds(&mut self, g: &'a Fol) -> Result<bool, FolError> {
        Ok(match g {
            Fol::True => true,
            Fol::False => false,
            Fol::Pred(p, t) => self.s.predicate(p).contains(self.point(t)?),
            Fol::In(t, b) => self.s.member[self.set(b)?].contains(self.point(t)?),
            Fol::EqP(a, b) => self.point(a)? == self.point(b)?,
            Fol::EqS(a, b) => self.set(a)? == self.set(b)?,
            Fol::Not(a) => !self.holds(a)?,
            Fol::And(a, b) => self.holds(a)? && self.holds(b)?,
            Fol::Or(a, b) => self.holds(a)? || self.holds(b)?,
            Fol::Implies(a, b) => !self.holds(a)? || self.holds(b)?,
            Fol::Iff(a, b) => self.holds(a)? == self.holds(b)?,
            Fol::Forall(sort, v, body) | Fol::Exists(sort, v, body) => {
                let key_ptr = g as *const Fol;
                if !self.free.contains_key(&key_ptr) {
                    let fv = g.free_vars()?.into_keys().collect();
                    self.free.insert(key_ptr, fv);
                }
                let vals = self.free[&key_ptr].iter().map(|v| self.lookup(v)).collect::<Result<Vec<_>, _>>()?;
                let key = (key_ptr, vals);
                if let Some(&r) = self.memo.get(&key) {
                    return Ok(r);
                }
                let all = matches!(g, Fol::Forall(..));
                let size = match sort {
                    Sort::Point => self.s.points.len(),
                    Sort::Set => self.s.sets.len(),
                };
                let mut result = all;
                for i in 0..size {
                    let val = if *sort == Sort::Point { Value::Point(i) } else { Value::Set(i) };
                    self.env.push((v.as_str(), val));
                    let r = self.holds(body);
                    self.env.pop();
                    if r? != all {
                        result = !all;
                        break;
                    }
                }
                self.memo.insert(key, result);
                result
            }
        })
    }
}

/// Tarskian truth of `g` in `s` under `asg`, which must cover the free
/// variables at their sorts.
pub fn eval_fol_finite(s: &LStructure, g: &Fol, asg: &FolAssignment) -> Result<bool, FolError> {
    for (v, sort) in g.free_vars()? {
        match (asg.get(&v), sort) {
            (None, _) => return Err(FolError::Unassigned(v)),
            (Some(Value::Point(i)), Sort::Point) if *i < s.points.len() => {}
            (Some(Value::Set(i)), Sort::Set) if *i < s.sets.len() => {}
            _ => return Err(FolError::SortMismatch(v)),
        }
    }
    let env = asg.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    Eval { s, env, free: HashMap::new(), memo: HashMap::new() }.holds(g)
}

/// Points of `s` at which the translation of `f` holds.
pub fn fol_truth_set(s: &LStructure, f: &Formula) -> Result<PointSet, FolError> {
    let g = standard_translate(f, "x")?;
    let mut ev = Eval { s, env: Vec::new(), free: HashMap::new(), memo: HashMap::new() };
    let mut out = PointSet::EMPTY;
    for a in 0..s.points.len() {
        ev.env = vec![("x", Value::Point(a))];
        if ev.holds(&g)? {
            out.insert(a);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The goodness theory

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// The set sort is an atomless boolean algebra.
    Boolean,
    /// `+` and `-` are union and complement on extents.
    Representation,
    /// Set elements with equal extents are equal.
    SetExtensionality,
    /// Distinct points are separated by a set element.
    PointSeparation,
    /// Covers by interiors refine to covers by set elements.
    Cover,
    /// Translations of supplied formulas at `k`.
    Sigma,
}

impl Clause {
    pub fn label(self) -> &'static str {
        match self {
            Clause::Boolean => "boolean",
            Clause::Representation => "representation",
            Clause::SetExtensionality => "set-extensionality",
            Clause::PointSeparation => "point-separation",
            Clause::Cover => "cover",
            Clause::Sigma => "sigma",
        }
    }

    fn from_label(s: &str) -> Option<Clause> {
        [
            Clause::Boolean,
            Clause::Representation,
            Clause::SetExtensionality,
            Clause::PointSeparation,
            Clause::Cover,
            Clause::Sigma,
        ]
        .into_iter()
        .find(|c| c.label() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub sentences: Vec<(Clause, Fol)>,
}

impl Theory {
    pub fn clause(&self, c: Clause) -> impl Iterator<Item = &Fol> {
        self.sentences.iter().filter(move |(k, _)| *k == c).map(|(_, f)| f)
    }

    /// One sentence per line, each group headed by a `# label` comment.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut current = None;
        for (c, f) in &self.sentences {
            if current != Some(*c) {
                out.push_str(&format!("# {}\n", c.label()));
                current = Some(*c);
            }
            out.push_str(&format!("{f}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Theory, FolError> {
        let mut current = Clause::Boolean;
        let mut sentences = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(label) = line.strip_prefix('#') {
                if let Some(c) = Clause::from_label(label.trim()) {
                    current = c;
                }
            } else if !line.is_empty() {
                sentences.push((current, parse_fol(line)?));
            }
        }
        Ok(Theory { sentences })
    }
}

fn var_eq(a: &str, b: &str) -> Fol {
    Fol::EqS(STerm::var(a), STerm::var(b))
}

fn all_sets(vs: &[&str], body: Fol) -> Fol {
    vs.iter().rev().fold(body, |acc, v| Fol::forall(Sort::Set, v, acc))
}

/// `b <= c`, written `b + c = c`.
pub fn le_term(b: STerm, c: STerm) -> Fol {
    Fol::EqS(STerm::plus(b, c.clone()), c)
}

/// `b ⊆ [[f]]`, written `Ap:x (x in b -> f^x)`.
pub fn within_truth_set(b: &str, f: &Formula) -> Result<Fol, FolError> {
    Ok(Fol::forall(Sort::Point, "x", Fol::implies(Fol::member("x", b), standard_translate(f, "x")?)))
}

fn boolean_sentences() -> Vec<Fol> {
    let (b, c, d) = (STerm::var("b"), STerm::var("c"), STerm::var("d"));
    let n = STerm::minus;
    vec![
        all_sets(&["b", "c"], Fol::EqS(STerm::plus(b.clone(), c.clone()), STerm::plus(c.clone(), b.clone()))),
        all_sets(
            &["b", "c", "d"],
            Fol::EqS(
                STerm::plus(b.clone(), STerm::plus(c.clone(), d.clone())),
                STerm::plus(STerm::plus(b.clone(), c.clone()), d),
            ),
        ),
        all_sets(
            &["b", "c"],
            Fol::EqS(
                STerm::plus(n(STerm::plus(n(b.clone()), c.clone())), n(STerm::plus(n(b.clone()), n(c.clone())))),
                b.clone(),
            ),
        ),
        all_sets(&["b"], Fol::EqS(STerm::plus(b.clone(), n(b.clone())), STerm::One)),
        Fol::EqS(STerm::Zero, n(STerm::One)),
        Fol::not(Fol::EqS(STerm::Zero, STerm::One)),
        all_sets(
            &["b"],
            Fol::implies(
                Fol::not(Fol::EqS(b.clone(), STerm::Zero)),
                Fol::exists(
                    Sort::Set,
                    "c",
                    Fol::conj([
                        Fol::not(Fol::EqS(c.clone(), STerm::Zero)),
                        le_term(c.clone(), b.clone()),
                        Fol::not(var_eq("c", "b")),
                    ]),
                ),
            ),
        ),
    ]
}

fn representation_sentence() -> Fol {
    let bc = STerm::plus(STerm::var("b"), STerm::var("c"));
    all_sets(
        &["b", "c"],
        Fol::forall(
            Sort::Point,
            "x",
            Fol::and(
                Fol::iff(Fol::In(pv("x"), bc), Fol::or(Fol::member("x", "b"), Fol::member("x", "c"))),
                Fol::iff(Fol::In(pv("x"), STerm::minus(STerm::var("b"))), Fol::not(Fol::member("x", "b"))),
            ),
        ),
    )
}

fn set_extensionality_sentence() -> Fol {
    all_sets(
        &["b", "c"],
        Fol::implies(
            Fol::forall(Sort::Point, "x", Fol::iff(Fol::member("x", "b"), Fol::member("x", "c"))),
            var_eq("b", "c"),
        ),
    )
}

fn point_separation_sentence() -> Fol {
    Fol::forall(
        Sort::Point,
        "x",
        Fol::forall(
            Sort::Point,
            "y",
            Fol::implies(
                Fol::forall(Sort::Set, "b", Fol::iff(Fol::member("x", "b"), Fol::member("y", "b"))),
                Fol::EqP(pv("x"), pv("y")),
            ),
        ),
    )
}

/// The cover sentence for one non-empty finite set of formulas.
pub fn cover_sentence(psi: &[Formula]) -> Result<Fol, FolError> {
    let boxes: Vec<Formula> = psi.iter().cloned().map(Formula::boxed).collect();
    let cs: Vec<String> = (1..=psi.len()).map(|i| format!("c{i}")).collect();
    let total = STerm::sum(cs.iter().map(|c| STerm::var(c)));
    let mut body = vec![le_term(STerm::var("b"), total)];
    for (c, bx) in cs.iter().zip(&boxes) {
        body.push(within_truth_set(c, bx)?);
    }
    let inner = cs.iter().rev().fold(Fol::conj(body), |acc, c| Fol::exists(Sort::Set, c, acc));
    let hyp = within_truth_set("b", &Formula::disj(boxes))?;
    Ok(Fol::forall(Sort::Set, "b", Fol::implies(hyp, inner)))
}

/// The goodness theory with one cover sentence per listed set, plus the
/// translations of `sigma` at `k`.
pub fn emit_tgood(psi_list: &[Vec<Formula>], sigma: &[Formula]) -> Result<Theory, FolError> {
    let mut sentences: Vec<(Clause, Fol)> = boolean_sentences().into_iter().map(|f| (Clause::Boolean, f)).collect();
    sentences.push((Clause::Representation, representation_sentence()));
    sentences.push((Clause::SetExtensionality, set_extensionality_sentence()));
    sentences.push((Clause::PointSeparation, point_separation_sentence()));
    for (i, psi) in psi_list.iter().enumerate() {
        if psi.is_empty() {
            return Err(FolError::EmptyPsi(i));
        }
        sentences.push((Clause::Cover, cover_sentence(psi)?));
    }
    for f in sigma {
        sentences.push((Clause::Sigma, standard_translate(f, "x")?.subst_point("x", &PTerm::K)));
    }
    Ok(Theory { sentences })
}

// ---------------------------------------------------------------------------
// Goodness checking

#[derive(Debug, Clone, Copy)]
pub enum GoodnessTarget<'a> {
    Finite(&'a LStructure),
    /// Full Cantor space with its clopen algebra and the model's valuation.
    Cantor(&'a SymbolicModel),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseCheck {
    pub clause: Clause,
    /// `None` when the check could not be carried out.
    pub holds: Option<bool>,
    pub checked: usize,
    pub detail: String,
}

/// Witnesses `c` for one cover instance; `b` and `c` are set names
/// (finite) or region JSON (Cantor).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverWitness {
    pub psi: Vec<String>,
    pub b: serde_json::Value,
    pub c: Vec<serde_json::Value>,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessReport {
    pub clauses: Vec<ClauseCheck>,
    pub witnesses: Vec<CoverWitness>,
}

impl GoodnessReport {
    pub fn good(&self) -> bool {
        self.clauses.iter().all(|c| c.holds == Some(true))
    }

    pub fn clause(&self, c: Clause) -> Option<&ClauseCheck> {
        self.clauses.iter().find(|k| k.clause == c)
    }
}

/// Check the goodness clauses. Finite structures are checked exhaustively;
/// the Cantor structure on a deterministic sample of at most `sample_bound`
/// clopens and a matching set of points.
pub fn check_goodness(
    target: GoodnessTarget<'_>,
    psi_list: &[Vec<Formula>],
    sample_bound: usize,
) -> Result<GoodnessReport, FolError> {
    if let Some(i) = psi_list.iter().position(|p| p.is_empty()) {
        return Err(FolError::EmptyPsi(i));
    }
    match target {
        GoodnessTarget::Finite(s) => goodness_finite(s, psi_list),
        GoodnessTarget::Cantor(m) => goodness_cantor(m, psi_list, sample_bound),
    }
}

fn check(clause: Clause, checked: usize, failure: Option<String>) -> ClauseCheck {
    ClauseCheck {
        clause,
        holds: Some(failure.is_none()),
        checked,
        detail: failure.unwrap_or_else(|| "ok".into()),
    }
}

fn goodness_finite(s: &LStructure, psi_list: &[Vec<Formula>]) -> Result<GoodnessReport, FolError> {
    let (n, m) = (s.points.len(), s.sets.len());
    let name = |b: usize| s.sets[b].clone();
    let mut clauses = Vec::new();

    let boolean = if s.zero == s.one {
        Some("0 = 1".to_string())
    } else {
        s.atom().map(|a| format!("{} is an atom", name(a)))
    };
    clauses.push(check(Clause::Boolean, m, boolean));

    let mut rep = None;
    'rep: for b in 0..m {
        for c in 0..m {
            let (eb, ec) = (s.member[b], s.member[c]);
            if s.member[s.plus[b][c]] != eb.union(ec) {
                rep = Some(format!("{} + {} is not the union", name(b), name(c)));
                break 'rep;
            }
        }
        if s.member[s.minus[b]] != PointSet::full(n).minus(s.member[b]) {
            rep = Some(format!("-{} is not the complement", name(b)));
            break;
        }
    }
    clauses.push(check(Clause::Representation, m * m, rep));

    let ext = (0..m)
        .flat_map(|b| (b + 1..m).map(move |c| (b, c)))
        .find(|&(b, c)| s.member[b] == s.member[c])
        .map(|(b, c)| format!("{} and {} have the same points", name(b), name(c)));
    clauses.push(check(Clause::SetExtensionality, m * (m.saturating_sub(1)) / 2, ext));

    let sep = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .find(|&(x, y)| s.member.iter().all(|e| e.contains(x) == e.contains(y)))
        .map(|(x, y)| format!("{} and {} are not separated", s.points[x], s.points[y]));
    clauses.push(check(Clause::PointSeparation, n * (n.saturating_sub(1)) / 2, sep));

    let mut witnesses = Vec::new();
    let mut cover_fail = None;
    let mut checked = 0;
    for psi in psi_list {
        let truth: Vec<PointSet> =
            psi.iter().map(|p| fol_truth_set(s, &Formula::boxed(p.clone()))).collect::<Result<_, _>>()?;
        let union = truth.iter().fold(PointSet::EMPTY, |a, &t| a.union(t));
        let inside: Vec<Vec<usize>> = truth.iter().map(|&t| (0..m).filter(|&c| s.member[c].is_subset(t)).collect()).collect();
        for b in (0..m).filter(|&b| s.member[b].is_subset(union)) {
            checked += 1;
            let found = cover_by_joins(s, b, &inside).or_else(|| cover_exhaustive(s, b, &inside));
            match found {
                Some(cs) => {
                    if witnesses.len() < 64 {
                        witnesses.push(CoverWitness {
                            psi: psi.iter().map(|p| p.render()).collect(),
                            b: name(b).into(),
                            c: cs.iter().map(|&c| name(c).into()).collect(),
                            verified: true,
                        });
                    }
                }
                None => {
                    cover_fail.get_or_insert_with(|| {
                        let ps: Vec<String> = psi.iter().map(|p| p.render()).collect();
                        format!("no cover of {} for {{{}}}", name(b), ps.join(", "))
                    });
                }
            }
        }
    }
    clauses.push(check(Clause::Cover, checked, cover_fail));
    Ok(GoodnessReport { clauses, witnesses })
}

fn cover_ok(s: &LStructure, b: usize, cs: &[usize]) -> bool {
    let total = cs.iter().copied().reduce(|a, c| s.plus[a][c]).unwrap_or(s.zero);
    s.le(b, total)
}

/// Joins of all candidates per formula; enough whenever `+` is union.
fn cover_by_joins(s: &LStructure, b: usize, inside: &[Vec<usize>]) -> Option<Vec<usize>> {
    let cs: Vec<usize> = inside.iter().map(|c| c.iter().copied().fold(s.zero, |a, x| s.plus[a][x])).collect();
    let sound = cs.iter().zip(inside).all(|(c, cand)| cand.contains(c));
    (sound && cover_ok(s, b, &cs)).then_some(cs)
}

fn cover_exhaustive(s: &LStructure, b: usize, inside: &[Vec<usize>]) -> Option<Vec<usize>> {
    let total: usize = inside.iter().map(|c| c.len().max(1)).product();
    if inside.iter().any(|c| c.is_empty()) || total > 1 << 20 {
        return None;
    }
    let mut idx = vec![0usize; inside.len()];
    loop {
        let cs: Vec<usize> = idx.iter().zip(inside).map(|(&i, c)| c[i]).collect();
        if cover_ok(s, b, &cs) {
            return Some(cs);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return None;
            }
            idx[k] += 1;
            if idx[k] < inside[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Deterministic clopen sample: all unions of cylinders of one length,
/// plus the clopen sets the model itself produces.
fn cantor_sample(m: &SymbolicModel, psi_list: &[Vec<Formula>], bound: usize) -> Result<(Vec<Region>, usize), FolError> {
    let mut level = 0;
    while level < 3 && 1usize << (1usize << (level + 1)) <= bound {
        level += 1;
    }
    let words: Vec<Vec<Sym>> = (0..1u64 << level).map(|w| (0..level).map(|i| w >> (level - 1 - i) & 1).collect()).collect();
    let mut out: BTreeSet<Region> = BTreeSet::new();
    for mask in 0u64..1 << words.len() {
        let mut r = Region::empty(Space::Cantor);
        for (i, w) in words.iter().enumerate() {
            if mask >> i & 1 == 1 {
                r = r.union(&Region::cylinder(Space::Cantor, w))?;
            }
        }
        out.insert(r);
    }
    let mut extra: Vec<Region> = m.valuations().values().cloned().collect();
    for psi in psi_list {
        for p in psi {
            extra.push(eval_symbolic(m, &Formula::boxed(p.clone()))?);
        }
    }
    for r in extra.into_iter().filter(Region::is_clopen) {
        out.insert(r.complement());
        out.insert(r);
    }
    let mut v: Vec<Region> = out.into_iter().collect();
    v.truncate(bound.max(2));
    Ok((v, level))
}

fn cantor_points(level: usize, samples: &[Region]) -> Vec<BasePoint> {
    let mut out: BTreeSet<BasePoint> = BTreeSet::new();
    for w in 0..1u64 << (level + 1) {
        let stem: Vec<Sym> = (0..=level).map(|i| w >> (level - i) & 1).collect();
        for period in [vec![0], vec![1], vec![0, 1]] {
            out.insert(BasePoint::new(Space::Cantor, stem.clone(), period).expect("binary symbols"));
        }
    }
    for r in samples.iter().take(8) {
        out.extend(r.members(2));
    }
    out.into_iter().collect()
}

fn goodness_cantor(m: &SymbolicModel, psi_list: &[Vec<Formula>], bound: usize) -> Result<GoodnessReport, FolError> {
    if m.space() != Space::Cantor {
        return Err(FolError::NotCantor);
    }
    let (sets, level) = cantor_sample(m, psi_list, bound)?;
    let points = cantor_points(level, &sets);
    let mut clauses = Vec::new();
    let show = |r: &Region| r.to_json().to_string();

    // boolean laws on the sample, and a proper non-empty part of every non-empty set
    let mut fail = None;
    let mut checked = 0;
    let few = &sets[..sets.len().min(12)];
    for a in few {
        for b in few {
            checked += 1;
            let lhs = a.complement().union(b)?.complement().union(&a.complement().union(&b.complement())?.complement())?;
            if a.union(b)? != b.union(a)? || lhs != *a {
                fail.get_or_insert_with(|| format!("boolean law fails at {} and {}", show(a), show(b)));
            }
            for c in few {
                if a.union(&b.union(c)?)? != a.union(b)?.union(c)? {
                    fail.get_or_insert_with(|| "associativity fails".to_string());
                }
            }
        }
    }
    for b in sets.iter().filter(|b| !b.is_empty()) {
        checked += 1;
        let x = &b.members(1)[0];
        let c = Region::cylinder(Space::Cantor, &x.take(b.depth() + 1));
        if c.is_empty() || c == *b || !c.is_subset(b)? {
            fail.get_or_insert_with(|| format!("no proper part found for {}", show(b)));
        }
    }
    clauses.push(check(Clause::Boolean, checked, fail));

    let mut fail = None;
    let mut checked = 0;
    for a in few {
        for b in few {
            let (u, na) = (a.union(b)?, a.complement());
            for x in &points {
                checked += 1;
                if u.contains(x) != (a.contains(x) || b.contains(x)) || na.contains(x) == a.contains(x) {
                    fail.get_or_insert_with(|| format!("membership of {x} is not boolean"));
                }
            }
        }
    }
    clauses.push(check(Clause::Representation, checked, fail));

    let mut fail = None;
    let mut checked = 0;
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            checked += 1;
            let diff = a.difference(b)?.union(&b.difference(a)?)?;
            let ok = diff.members(1).first().is_some_and(|x| a.contains(x) != b.contains(x));
            if !ok {
                fail.get_or_insert_with(|| format!("{} and {} are not told apart", show(a), show(b)));
            }
        }
    }
    clauses.push(check(Clause::SetExtensionality, checked, fail));

    let mut fail = None;
    let mut checked = 0;
    for (i, x) in points.iter().enumerate() {
        for y in &points[i + 1..] {
            checked += 1;
            let n = x.lcp(y).map_or(0, |n| n + 1);
            let c = Region::cylinder(Space::Cantor, &x.take(n));
            if !c.contains(x) || c.contains(y) {
                fail.get_or_insert_with(|| format!("{x} and {y} are not separated"));
            }
        }
    }
    clauses.push(check(Clause::PointSeparation, checked, fail));

    let mut witnesses = Vec::new();
    let mut fail = None;
    let mut undetermined = false;
    let mut checked = 0;
    for psi in psi_list {
        let truth: Vec<Region> =
            psi.iter().map(|p| eval_symbolic(m, &Formula::boxed(p.clone()))).collect::<Result<_, _>>()?;
        if !truth.iter().all(Region::is_clopen) {
            undetermined = true;
            continue;
        }
        let union = truth.iter().try_fold(Region::empty(Space::Cantor), |a, t| a.union(t))?;
        for b in &sets {
            if !b.is_subset(&union)? {
                continue;
            }
            checked += 1;
            let cs: Vec<Region> = truth.iter().map(|t| b.intersect(t)).collect::<Result<_, _>>()?;
            let cover = cs.iter().try_fold(Region::empty(Space::Cantor), |a, c| a.union(c))?;
            let mut verified = b.is_subset(&cover)? && cs.iter().all(Region::is_clopen);
            for (c, t) in cs.iter().zip(&truth) {
                verified &= c.is_subset(t)?;
            }
            if !verified {
                fail.get_or_insert_with(|| format!("cover of {} not verified", show(b)));
            }
            witnesses.push(CoverWitness {
                psi: psi.iter().map(|p| p.render()).collect(),
                b: b.to_json(),
                c: cs.iter().map(Region::to_json).collect(),
                verified,
            });
        }
    }
    let mut cover = check(Clause::Cover, checked, fail);
    if undetermined && cover.holds == Some(true) {
        cover.holds = None;
        cover.detail = "some interior truth set is not clopen; witnesses are only built for clopen ones".into();
    }
    clauses.push(cover);
    Ok(GoodnessReport { clauses, witnesses })
}

// ---------------------------------------------------------------------------
// Forcing at representable points

/// True when some cylinder around `mu` lies inside the truth set of `f`.
pub fn forces_box(model: &SymbolicModel, mu: &BasePoint, f: &Formula) -> Result<bool, FolError> {
    if model.space() != Space::Cantor || mu.space() != Space::Cantor {
        return Err(FolError::NotCantor);
    }
    let r = eval_symbolic(model, f)?;
    // Past the trie depth and past every exceptional point's split from mu,
    // the cylinder is either inside r or never will be.
    let exceptional = r.plus_points().iter().chain(r.minus_points());
    let bound = exceptional.filter_map(|p| mu.lcp(p)).map(|n| n + 1).fold(r.depth(), usize::max);
    for n in 0..=bound {
        if Region::cylinder(Space::Cantor, &mu.take(n)).is_subset(&r)? {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn forces_dia(model: &SymbolicModel, mu: &BasePoint, f: &Formula) -> Result<bool, FolError> {
    Ok(!forces_box(model, mu, &Formula::not(f.clone()))?)
}
