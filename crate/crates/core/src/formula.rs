//! Modal formulas over the full language: boolean connectives, interior `[]`,
//! coderivative `[d]`, universal `A`, difference `[!=]`, graded `<c n>` and
//! tangle `<t>{..}`.
//!
//! Derived connectives (`|`, `->`, `<->`, `<>`, `<d>`, `E`, `<!=>`, `false`,
//! `/\{..}`, `\/{..}`) exist only in the concrete syntax; the parser expands
//! them into the core tree.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest admissible grade in `<c n>`.
pub const MAX_COUNT: u32 = u16::MAX as u32;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(String),
    Top,
    Neg(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// Interior.
    Box(Box<Formula>),
    /// Coderivative `[d]`.
    CoDeriv(Box<Formula>),
    /// Universal modality.
    Univ(Box<Formula>),
    /// Difference modality `[!=]`.
    DiffBox(Box<Formula>),
    /// `<c n> f`: more than `n` points satisfy `f`.
    Count(u16, Box<Formula>),
    /// Tangle over a non-empty set, kept sorted and duplicate-free.
    Tangle(Vec<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("count bound exceeded at {line}:{col}: {value} > {max}", max = MAX_COUNT)]
    CountBound { line: usize, col: usize, value: u64 },
    #[error("empty tangle set at {line}:{col}")]
    EmptyTangle { line: usize, col: usize },
    #[error("empty tangle set")]
    EmptyTangleSet,
    #[error("unknown rewrite rule `{0}`")]
    UnknownRule(String),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    pub fn bot() -> Formula {
        Formula::not(Formula::Top)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Neg(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
    }

    pub fn boxed(f: Formula) -> Formula {
        Formula::Box(Box::new(f))
    }

    pub fn dia(f: Formula) -> Formula {
        Formula::not(Formula::boxed(Formula::not(f)))
    }

    pub fn coderiv(f: Formula) -> Formula {
        Formula::CoDeriv(Box::new(f))
    }

    /// `<d> f`, the derivative.
    pub fn deriv(f: Formula) -> Formula {
        Formula::not(Formula::coderiv(Formula::not(f)))
    }

    pub fn univ(f: Formula) -> Formula {
        Formula::Univ(Box::new(f))
    }

    pub fn exists(f: Formula) -> Formula {
        Formula::not(Formula::univ(Formula::not(f)))
    }

    pub fn diff_box(f: Formula) -> Formula {
        Formula::DiffBox(Box::new(f))
    }

    pub fn diff_dia(f: Formula) -> Formula {
        Formula::not(Formula::diff_box(Formula::not(f)))
    }

    pub fn count(n: u16, f: Formula) -> Formula {
        Formula::Count(n, Box::new(f))
    }

    /// Tangle over the given members; sorts and deduplicates.
    pub fn tangle(members: impl IntoIterator<Item = Formula>) -> Result<Formula, FormulaError> {
        let mut v: Vec<Formula> = members.into_iter().collect();
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(FormulaError::EmptyTangleSet);
        }
        Ok(Formula::Tangle(v))
    }

    /// Left-nested conjunction; `true` for an empty iterator.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::Top,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Left-nested disjunction; `false` for an empty iterator.
    pub fn disj(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::bot(),
            Some(first) => it.fold(first, Formula::or),
        }
    }

    /// Distinct atom names, sorted.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<String>) {
        match self {
            Formula::Atom(p) => out.push(p.clone()),
            Formula::Top => {}
            Formula::Neg(a)
            | Formula::Box(a)
            | Formula::CoDeriv(a)
            | Formula::Univ(a)
            | Formula::DiffBox(a)
            | Formula::Count(_, a) => a.collect_atoms(out),
            Formula::And(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Tangle(ds) => ds.iter().for_each(|d| d.collect_atoms(out)),
        }
    }

    /// Replace atoms by formulas; atoms not in the map are left alone.
    pub fn substitute(&self, map: &BTreeMap<String, Formula>) -> Formula {
        self.map_atoms(&|p| map.get(p).cloned())
    }

    fn map_atoms(&self, f: &dyn Fn(&str) -> Option<Formula>) -> Formula {
        match self {
            Formula::Atom(p) => f(p).unwrap_or_else(|| self.clone()),
            _ => self.map_children(|c| c.map_atoms(f)),
        }
    }

    /// Rebuild the node with `f` applied to every direct child.
    pub fn map_children(&self, mut f: impl FnMut(&Formula) -> Formula) -> Formula {
        match self {
            Formula::Atom(_) | Formula::Top => self.clone(),
            Formula::Neg(a) => Formula::not(f(a)),
            Formula::And(a, b) => Formula::and(f(a), f(b)),
            Formula::Box(a) => Formula::boxed(f(a)),
            Formula::CoDeriv(a) => Formula::coderiv(f(a)),
            Formula::Univ(a) => Formula::univ(f(a)),
            Formula::DiffBox(a) => Formula::diff_box(f(a)),
            Formula::Count(n, a) => Formula::count(*n, f(a)),
            Formula::Tangle(ds) => {
                Formula::tangle(ds.iter().map(f)).expect("mapping preserves non-emptiness")
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top => 1,
            Formula::Neg(a)
            | Formula::Box(a)
            | Formula::CoDeriv(a)
            | Formula::Univ(a)
            | Formula::DiffBox(a)
            | Formula::Count(_, a) => 1 + a.size(),
            Formula::And(a, b) => 1 + a.size() + b.size(),
            Formula::Tangle(ds) => 1 + ds.iter().map(Formula::size).sum::<usize>(),
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Printing

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f, IMP)
    }
}

// Binding levels, loosest first. Printing at level `min` parenthesizes
// anything looser.
const IMP: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const UNARY: u8 = 4;

/// Derived connectives recognised when printing. Each one parses back to
/// exactly the tree it was read from.
enum Sugar<'a> {
    Implies(&'a Formula, &'a Formula),
    Or(&'a Formula, &'a Formula),
    Diamond(&'static str, &'a Formula),
}

fn sugar(x: &Formula) -> Option<Sugar<'_>> {
    let Formula::Neg(inner) = x else { return None };
    match inner.as_ref() {
        Formula::And(a, b) => match (a.as_ref(), b.as_ref()) {
            (Formula::Neg(a), Formula::Neg(b)) => Some(Sugar::Or(a, b)),
            (_, Formula::Neg(b)) => Some(Sugar::Implies(a, b)),
            _ => None,
        },
        Formula::Box(a) => negated(a).map(|a| Sugar::Diamond("<>", a)),
        Formula::CoDeriv(a) => negated(a).map(|a| Sugar::Diamond("<d>", a)),
        Formula::Univ(a) => negated(a).map(|a| Sugar::Diamond("E ", a)),
        Formula::DiffBox(a) => negated(a).map(|a| Sugar::Diamond("<!=>", a)),
        _ => None,
    }
}

fn negated(x: &Formula) -> Option<&Formula> {
    match x {
        Formula::Neg(a) => Some(a),
        _ => None,
    }
}

fn level(x: &Formula) -> u8 {
    match (x, sugar(x)) {
        (_, Some(Sugar::Implies(..))) => IMP,
        (_, Some(Sugar::Or(..))) => OR,
        (Formula::And(..), _) => AND,
        _ => UNARY,
    }
}

fn write_formula(x: &Formula, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
    if level(x) < min {
        f.write_str("(")?;
        write_formula(x, f, IMP)?;
        return f.write_str(")");
    }
    let prefix = |f: &mut fmt::Formatter<'_>, op: &str, a: &Formula| {
        f.write_str(op)?;
        write_formula(a, f, UNARY)
    };
    match sugar(x) {
        // `->` groups to the right, `|` and `&` to the left
        Some(Sugar::Implies(a, b)) => {
            write_formula(a, f, OR)?;
            f.write_str(" -> ")?;
            return write_formula(b, f, IMP);
        }
        Some(Sugar::Or(a, b)) => {
            write_formula(a, f, OR)?;
            f.write_str(" | ")?;
            return write_formula(b, f, AND);
        }
        Some(Sugar::Diamond(op, a)) => return prefix(f, op, a),
        None => {}
    }
    match x {
        Formula::Atom(p) => f.write_str(p),
        Formula::Top => f.write_str("true"),
        Formula::And(a, b) => {
            write_formula(a, f, AND)?;
            f.write_str(" & ")?;
            write_formula(b, f, UNARY)
        }
        Formula::Neg(a) if **a == Formula::Top => f.write_str("false"),
        Formula::Neg(a) => prefix(f, "~", a),
        Formula::Box(a) => prefix(f, "[]", a),
        Formula::CoDeriv(a) => prefix(f, "[d]", a),
        Formula::Univ(a) => prefix(f, "A ", a),
        Formula::DiffBox(a) => prefix(f, "[!=]", a),
        Formula::Count(n, a) => prefix(f, &format!("<c {n}> "), a),
        Formula::Tangle(ds) => {
            f.write_str("<t>{")?;
            for (i, d) in ds.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_formula(d, f, IMP)?;
            }
            f.write_str("}")
        }
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Imp,
    Iff,
    BoxOp,
    Dia,
    CoDeriv,
    Deriv,
    Univ,
    Exists,
    DiffBox,
    DiffDia,
    Count(u16),
    Tangle,
    BigAnd,
    BigOr,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1, _src: src }
    }

    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.starts_with(s) {
            for _ in s.chars() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn err(&self, line: usize, col: usize, msg: impl Into<String>) -> FormulaError {
        FormulaError::Syntax { line, col, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(0), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, FormulaError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek(0) else {
                out.push(Spanned { tok: Tok::Eof, line, col });
                return Ok(out);
            };
            let tok = if c.is_ascii_lowercase() {
                let mut name = String::new();
                while let Some(c) = self.peek(0) {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                match name.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(name),
                }
            } else if self.eat("<->") {
                Tok::Iff
            } else if self.eat("->") {
                Tok::Imp
            } else if self.eat("<>") {
                Tok::Dia
            } else if self.eat("<d>") {
                Tok::Deriv
            } else if self.eat("<!=>") {
                Tok::DiffDia
            } else if self.eat("<t>") {
                Tok::Tangle
            } else if self.eat("<c") {
                self.skip_ws();
                let (nl, nc) = (self.line, self.col);
                let mut digits = String::new();
                while let Some(d) = self.peek(0).filter(char::is_ascii_digit) {
                    digits.push(d);
                    self.bump();
                }
                if digits.is_empty() {
                    return Err(self.err(nl, nc, "expected a natural number after `<c`"));
                }
                self.skip_ws();
                if !self.eat(">") {
                    return Err(self.err(self.line, self.col, "expected `>` closing `<c n>`"));
                }
                let value: u64 = digits.parse().unwrap_or(u64::MAX);
                if value > MAX_COUNT as u64 {
                    return Err(FormulaError::CountBound { line: nl, col: nc, value });
                }
                Tok::Count(value as u16)
            } else if self.eat("[]") {
                Tok::BoxOp
            } else if self.eat("[d]") {
                Tok::CoDeriv
            } else if self.eat("[!=]") {
                Tok::DiffBox
            } else if self.eat("/\\") {
                Tok::BigAnd
            } else if self.eat("\\/") {
                Tok::BigOr
            } else {
                self.bump();
                match c {
                    '~' => Tok::Not,
                    '&' => Tok::And,
                    '|' => Tok::Or,
                    'A' => Tok::Univ,
                    'E' => Tok::Exists,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    other => return Err(self.err(line, col, format!("unexpected character `{other}`"))),
                }
            };
            out.push(Spanned { tok, line, col });
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

/// Parse the ASCII concrete syntax, expanding abbreviations.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.formula()?;
    p.expect(&Tok::Eof, "end of input")?;
    Ok(f)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        &self.peek().tok == t
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<Spanned, FormulaError> {
        if self.at(t) {
            Ok(self.next())
        } else {
            let s = self.peek();
            Err(FormulaError::Syntax {
                line: s.line,
                col: s.col,
                msg: format!("expected {what}, found {}", describe(&s.tok)),
            })
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.imp()?;
        while self.at(&Tok::Iff) {
            self.next();
            let rhs = self.imp()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.or()?;
        if self.at(&Tok::Imp) {
            self.next();
            let rhs = self.imp()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.and()?;
        while self.at(&Tok::Or) {
            self.next();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        while self.at(&Tok::And) {
            self.next();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn braced_list(&mut self) -> Result<Vec<Formula>, FormulaError> {
        self.expect(&Tok::LBrace, "`{`")?;
        let mut items = Vec::new();
        if !self.at(&Tok::RBrace) {
            items.push(self.formula()?);
            while self.at(&Tok::Comma) {
                self.next();
                items.push(self.formula()?);
            }
        }
        self.expect(&Tok::RBrace, "`}`")?;
        Ok(items)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let t = self.next();
        Ok(match t.tok {
            Tok::Not => Formula::not(self.unary()?),
            Tok::BoxOp => Formula::boxed(self.unary()?),
            Tok::Dia => Formula::dia(self.unary()?),
            Tok::CoDeriv => Formula::coderiv(self.unary()?),
            Tok::Deriv => Formula::deriv(self.unary()?),
            Tok::Univ => Formula::univ(self.unary()?),
            Tok::Exists => Formula::exists(self.unary()?),
            Tok::DiffBox => Formula::diff_box(self.unary()?),
            Tok::DiffDia => Formula::diff_dia(self.unary()?),
            Tok::Count(n) => Formula::count(n, self.unary()?),
            Tok::Tangle => {
                let items = self.braced_list()?;
                if items.is_empty() {
                    return Err(FormulaError::EmptyTangle { line: t.line, col: t.col });
                }
                Formula::tangle(items)?
            }
            Tok::BigAnd => Formula::conj(self.braced_list()?),
            Tok::BigOr => Formula::disj(self.braced_list()?),
            Tok::True => Formula::Top,
            Tok::False => Formula::bot(),
            Tok::Ident(name) => Formula::Atom(name),
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(&Tok::RParen, "`)`")?;
                f
            }
            other => {
                return Err(FormulaError::Syntax {
                    line: t.line,
                    col: t.col,
                    msg: format!("expected a formula, found {}", describe(&other)),
                })
            }
        })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Eof => "end of input".into(),
        Tok::Count(n) => format!("`<c {n}>`"),
        other => format!("{other:?}"),
    }
}

// ---------------------------------------------------------------------------
// Fragments

/// Which primitive modal connectives occur in a formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Fragment {
    pub uses_box: bool,
    pub uses_coderiv: bool,
    pub uses_tangle: bool,
    pub uses_univ: bool,
    pub uses_diff: bool,
    pub uses_count: bool,
}

impl Fragment {
    pub fn union(self, o: Fragment) -> Fragment {
        Fragment {
            uses_box: self.uses_box || o.uses_box,
            uses_coderiv: self.uses_coderiv || o.uses_coderiv,
            uses_tangle: self.uses_tangle || o.uses_tangle,
            uses_univ: self.uses_univ || o.uses_univ,
            uses_diff: self.uses_diff || o.uses_diff,
            uses_count: self.uses_count || o.uses_count,
        }
    }

    /// True when every flag set here is also set in `allowed`.
    pub fn within(self, allowed: Fragment) -> bool {
        (!self.uses_box || allowed.uses_box)
            && (!self.uses_coderiv || allowed.uses_coderiv)
            && (!self.uses_tangle || allowed.uses_tangle)
            && (!self.uses_univ || allowed.uses_univ)
            && (!self.uses_diff || allowed.uses_diff)
            && (!self.uses_count || allowed.uses_count)
    }
}

/// Fragment flags and modal depth.
pub fn classify(f: &Formula) -> (Fragment, usize) {
    match f {
        Formula::Atom(_) | Formula::Top => (Fragment::default(), 0),
        Formula::Neg(a) => classify(a),
        Formula::And(a, b) => {
            let (fa, da) = classify(a);
            let (fb, db) = classify(b);
            (fa.union(fb), da.max(db))
        }
        Formula::Box(a) => bump(classify(a), |g| g.uses_box = true),
        Formula::CoDeriv(a) => bump(classify(a), |g| g.uses_coderiv = true),
        Formula::Univ(a) => bump(classify(a), |g| g.uses_univ = true),
        Formula::DiffBox(a) => bump(classify(a), |g| g.uses_diff = true),
        Formula::Count(_, a) => bump(classify(a), |g| g.uses_count = true),
        Formula::Tangle(ds) => {
            let (frag, depth) = ds
                .iter()
                .map(classify)
                .fold((Fragment::default(), 0), |(g, d), (g2, d2)| (g.union(g2), d.max(d2)));
            bump((frag, depth), |g| g.uses_tangle = true)
        }
    }
}

fn bump((mut g, d): (Fragment, usize), set: impl FnOnce(&mut Fragment)) -> (Fragment, usize) {
    set(&mut g);
    (g, d + 1)
}

pub fn modal_depth(f: &Formula) -> usize {
    classify(f).1
}

// ---------------------------------------------------------------------------
// Interdefinability rewrites

/// Elimination rewrites between topologically equivalent connectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RewriteRule {
    /// `[]f` to `f & [d]f`.
    BoxToCoderiv,
    /// `[]f` to `~<t>{~f}`.
    BoxToTangle,
    /// `A f` to `~<c 0>~f`.
    UnivToCount,
    /// `<!=>f` to `(~f -> E f) & (f -> <c 1> f)`.
    DiffToUnivCount1,
    /// `E f` to `f | <!=>f`.
    ExistsToDiff,
    /// `<c 1> f` to `E (f & <!=>f)`.
    Count1ToDiff,
}

impl RewriteRule {
    pub const ALL: [RewriteRule; 6] = [
        RewriteRule::BoxToCoderiv,
        RewriteRule::BoxToTangle,
        RewriteRule::UnivToCount,
        RewriteRule::DiffToUnivCount1,
        RewriteRule::ExistsToDiff,
        RewriteRule::Count1ToDiff,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RewriteRule::BoxToCoderiv => "box->coderiv",
            RewriteRule::BoxToTangle => "box->tangle",
            RewriteRule::UnivToCount => "univ->count",
            RewriteRule::DiffToUnivCount1 => "diff->univ+count1",
            RewriteRule::ExistsToDiff => "exists->diff",
            RewriteRule::Count1ToDiff => "count1->diff",
        }
    }
}

impl FromStr for RewriteRule {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RewriteRule::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| FormulaError::UnknownRule(s.to_string()))
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Replace every occurrence of the rule's source connective.
///
/// Dual forms (`~[!=]~f`, `~A~f`) are recognised so that the rewrite of a
/// diamond-shaped input is the textbook expansion rather than its double
/// negation.
pub fn rewrite_eliminate(f: &Formula, rule: RewriteRule) -> Formula {
    use RewriteRule::*;
    let rw = |g: &Formula| rewrite_eliminate(g, rule);
    match (rule, f) {
        (BoxToCoderiv, Formula::Box(a)) => {
            let a = rw(a);
            Formula::and(a.clone(), Formula::coderiv(a))
        }
        (BoxToTangle, Formula::Box(a)) => {
            let a = rw(a);
            Formula::not(Formula::Tangle(vec![Formula::not(a)]))
        }
        (UnivToCount, Formula::Univ(a)) => {
            Formula::not(Formula::count(0, Formula::not(rw(a))))
        }
        (DiffToUnivCount1, Formula::Neg(inner)) => match dual_inner(inner, DualKind::Diff) {
            Some(a) => diff_dia_expansion(rw(a)),
            None => Formula::not(rw(inner)),
        },
        (DiffToUnivCount1, Formula::DiffBox(a)) => {
            Formula::not(diff_dia_expansion(Formula::not(rw(a))))
        }
        (ExistsToDiff, Formula::Neg(inner)) => match dual_inner(inner, DualKind::Univ) {
            Some(a) => {
                let a = rw(a);
                Formula::or(a.clone(), Formula::diff_dia(a))
            }
            None => Formula::not(rw(inner)),
        },
        (ExistsToDiff, Formula::Univ(a)) => {
            let na = Formula::not(rw(a));
            Formula::not(Formula::or(na.clone(), Formula::diff_dia(na)))
        }
        (Count1ToDiff, Formula::Count(1, a)) => {
            let a = rw(a);
            Formula::exists(Formula::and(a.clone(), Formula::diff_dia(a)))
        }
        _ => f.map_children(rw),
    }
}

#[derive(Clone, Copy)]
enum DualKind {
    Diff,
    Univ,
}

/// For `inner` of the shape `[!=]~a` (or `A ~a`), return `a`.
fn dual_inner(inner: &Formula, kind: DualKind) -> Option<&Formula> {
    let body = match (kind, inner) {
        (DualKind::Diff, Formula::DiffBox(b)) | (DualKind::Univ, Formula::Univ(b)) => b,
        _ => return None,
    };
    match body.as_ref() {
        Formula::Neg(a) => Some(a),
        _ => None,
    }
}

/// `(~a -> E a) & (a -> <c 1> a)` in core connectives.
fn diff_dia_expansion(a: Formula) -> Formula {
    Formula::and(
        Formula::implies(Formula::not(a.clone()), Formula::exists(a.clone())),
        Formula::implies(a.clone(), Formula::count(1, a)),
    )
}
