//! Canonical Boolean conditions.
//!
//! A [`BoolExpr`] is a reduced, ordered binary decision diagram over named
//! variables. Variables are ordered lexicographically by name, so two
//! expressions that denote the same Boolean function have identical
//! structure and compare equal with `==`. Nodes are reference counted and
//! immutable, which makes values cheap to clone and safe to share between
//! threads.
//!
//! The text syntax accepted by [`parse_bool`] is `1`, `0`, identifiers,
//! `!e`, `e & e`, `e | e` and parentheses, with the usual precedence
//! (`!` binds tightest, then `&`, then `|`).

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::lexer::{tokenize, Cursor, ParseError, Tok};

/// Name of a Boolean variable such as `x`, `x1` or `r_done`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarName(Arc<str>);

impl VarName {
    /// Creates a variable name. Panics on an empty string, which is never a
    /// valid variable.
    pub fn new(name: impl AsRef<str>) -> Self {
        let name = name.as_ref();
        assert!(!name.is_empty(), "variable names must be nonempty");
        VarName(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for VarName {
    fn from(s: &str) -> Self {
        VarName::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoolError {
    #[error("variable `{0}` is not assigned")]
    UnknownVariable(VarName),
}

/// Syntax tree of a Boolean condition before canonicalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolSyntax {
    Const(bool),
    Var(VarName),
    Not(Box<BoolSyntax>),
    And(Box<BoolSyntax>, Box<BoolSyntax>),
    Or(Box<BoolSyntax>, Box<BoolSyntax>),
}

impl BoolSyntax {
    pub fn var(name: &str) -> Self {
        BoolSyntax::Var(VarName::new(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolSyntax) -> Self {
        BoolSyntax::Not(Box::new(e))
    }

    pub fn and(a: BoolSyntax, b: BoolSyntax) -> Self {
        BoolSyntax::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolSyntax, b: BoolSyntax) -> Self {
        BoolSyntax::Or(Box::new(a), Box::new(b))
    }
}

/// Canonicalizes a syntax tree.
pub fn mk(structure: &BoolSyntax) -> BoolExpr {
    match structure {
        BoolSyntax::Const(b) => BoolExpr::constant(*b),
        BoolSyntax::Var(v) => BoolExpr::var(v.clone()),
        BoolSyntax::Not(e) => mk(e).not(),
        BoolSyntax::And(a, b) => mk(a).and(&mk(b)),
        BoolSyntax::Or(a, b) => mk(a).or(&mk(b)),
    }
}

struct Node {
    kind: Kind,
    hash: u64,
    size: usize,
}

#[derive(PartialEq, Eq)]
enum Kind {
    Const(bool),
    Ite(VarName, BoolExpr, BoolExpr),
}

/// A canonical Boolean function over named variables.
#[derive(Clone)]
pub struct BoolExpr(Arc<Node>);

impl PartialEq for BoolExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.size == other.0.size
                && self.0.kind == other.0.kind)
    }
}

impl Eq for BoolExpr {}

impl Hash for BoolExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolExpr({self})")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
    Xor,
}

type Memo = HashMap<(usize, usize), BoolExpr>;

impl BoolExpr {
    pub fn constant(value: bool) -> Self {
        let mut h = DefaultHasher::new();
        value.hash(&mut h);
        BoolExpr(Arc::new(Node {
            kind: Kind::Const(value),
            hash: h.finish(),
            size: 1,
        }))
    }

    pub fn tt() -> Self {
        Self::constant(true)
    }

    pub fn ff() -> Self {
        Self::constant(false)
    }

    pub fn var(name: impl Into<VarName>) -> Self {
        Self::node(name.into(), Self::tt(), Self::ff())
    }

    /// Builds the reduced node `if var then hi else lo`. Callers guarantee
    /// that `var` precedes every variable of `hi` and `lo`.
    fn node(var: VarName, hi: BoolExpr, lo: BoolExpr) -> Self {
        if hi == lo {
            return hi;
        }
        let mut h = DefaultHasher::new();
        var.hash(&mut h);
        hi.0.hash.hash(&mut h);
        lo.0.hash.hash(&mut h);
        let size = 1 + hi.0.size + lo.0.size;
        BoolExpr(Arc::new(Node {
            kind: Kind::Ite(var, hi, lo),
            hash: h.finish(),
            size,
        }))
    }

    fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    fn top(&self) -> Option<&VarName> {
        match &self.0.kind {
            Kind::Const(_) => None,
            Kind::Ite(v, _, _) => Some(v),
        }
    }

    fn as_const(&self) -> Option<bool> {
        match self.0.kind {
            Kind::Const(b) => Some(b),
            Kind::Ite(..) => None,
        }
    }

    /// Cofactors with respect to `v`, which must not be below the top variable.
    fn cofactors(&self, v: &VarName) -> (BoolExpr, BoolExpr) {
        match &self.0.kind {
            Kind::Ite(w, hi, lo) if w == v => (hi.clone(), lo.clone()),
            _ => (self.clone(), self.clone()),
        }
    }

    pub fn is_false(&self) -> bool {
        self.as_const() == Some(false)
    }

    pub fn is_tautology(&self) -> bool {
        self.as_const() == Some(true)
    }

    pub fn is_satisfiable(&self) -> bool {
        !self.is_false()
    }

    pub fn equiv(&self, other: &BoolExpr) -> bool {
        self == other
    }

    pub fn not(&self) -> BoolExpr {
        fn go(e: &BoolExpr, memo: &mut HashMap<usize, BoolExpr>) -> BoolExpr {
            match &e.0.kind {
                Kind::Const(b) => BoolExpr::constant(!b),
                Kind::Ite(v, hi, lo) => {
                    if let Some(r) = memo.get(&e.key()) {
                        return r.clone();
                    }
                    let r = BoolExpr::node(v.clone(), go(hi, memo), go(lo, memo));
                    memo.insert(e.key(), r.clone());
                    r
                }
            }
        }
        go(self, &mut HashMap::new())
    }

    pub fn and(&self, other: &BoolExpr) -> BoolExpr {
        apply(Op::And, self, other, &mut Memo::new())
    }

    pub fn or(&self, other: &BoolExpr) -> BoolExpr {
        apply(Op::Or, self, other, &mut Memo::new())
    }

    pub fn xor(&self, other: &BoolExpr) -> BoolExpr {
        apply(Op::Xor, self, other, &mut Memo::new())
    }

    pub fn implies(&self, other: &BoolExpr) -> BoolExpr {
        self.not().or(other)
    }

    /// Conjunction of an arbitrary number of conditions (1 when empty).
    pub fn all<'a>(items: impl IntoIterator<Item = &'a BoolExpr>) -> BoolExpr {
        items.into_iter().fold(BoolExpr::tt(), |acc, e| acc.and(e))
    }

    /// Disjunction of an arbitrary number of conditions (0 when empty).
    pub fn any<'a>(items: impl IntoIterator<Item = &'a BoolExpr>) -> BoolExpr {
        items.into_iter().fold(BoolExpr::ff(), |acc, e| acc.or(e))
    }

    /// Substitutes a constant for a variable.
    pub fn restrict(&self, var: &VarName, value: bool) -> BoolExpr {
        fn go(
            e: &BoolExpr,
            var: &VarName,
            value: bool,
            memo: &mut HashMap<usize, BoolExpr>,
        ) -> BoolExpr {
            match &e.0.kind {
                Kind::Const(_) => e.clone(),
                Kind::Ite(v, hi, lo) => {
                    if v > var {
                        return e.clone();
                    }
                    if v == var {
                        return if value { hi.clone() } else { lo.clone() };
                    }
                    if let Some(r) = memo.get(&e.key()) {
                        return r.clone();
                    }
                    let r = BoolExpr::node(
                        v.clone(),
                        go(hi, var, value, memo),
                        go(lo, var, value, memo),
                    );
                    memo.insert(e.key(), r.clone());
                    r
                }
            }
        }
        go(self, var, value, &mut HashMap::new())
    }

    /// Existential quantification over one variable.
    pub fn exists(&self, var: &VarName) -> BoolExpr {
        self.restrict(var, true).or(&self.restrict(var, false))
    }

    /// The set of variables the function depends on.
    pub fn support(&self) -> BTreeSet<VarName> {
        fn go(e: &BoolExpr, out: &mut BTreeSet<VarName>, seen: &mut BTreeSet<usize>) {
            if let Kind::Ite(v, hi, lo) = &e.0.kind {
                if seen.insert(e.key()) {
                    out.insert(v.clone());
                    go(hi, out, seen);
                    go(lo, out, seen);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out, &mut BTreeSet::new());
        out
    }

    /// Evaluates under an assignment that must cover every variable of the
    /// support.
    pub fn eval(&self, a: &Assignment) -> Result<bool, BoolError> {
        for v in self.support() {
            if a.get(&v).is_none() {
                return Err(BoolError::UnknownVariable(v));
            }
        }
        let mut e = self;
        loop {
            match &e.0.kind {
                Kind::Const(b) => return Ok(*b),
                Kind::Ite(v, hi, lo) => e = if a.get(v) == Some(true) { hi } else { lo },
            }
        }
    }

    /// One satisfying assignment over the support, if any exists.
    pub fn any_sat(&self) -> Option<BTreeMap<VarName, bool>> {
        let mut out = BTreeMap::new();
        let mut e = self;
        if e.is_false() {
            return None;
        }
        while let Kind::Ite(v, hi, lo) = &e.0.kind {
            if lo.is_false() {
                out.insert(v.clone(), true);
                e = hi;
            } else {
                out.insert(v.clone(), false);
                e = lo;
            }
        }
        Some(out)
    }

    /// Number of nodes of the decision diagram (counting shared nodes once).
    pub fn node_count(&self) -> usize {
        fn go(e: &BoolExpr, seen: &mut BTreeSet<usize>) {
            if seen.insert(e.key()) {
                if let Kind::Ite(_, hi, lo) = &e.0.kind {
                    go(hi, seen);
                    go(lo, seen);
                }
            }
        }
        let mut seen = BTreeSet::new();
        go(self, &mut seen);
        seen.len()
    }

    /// Converts back to a syntax tree (an if-then-else expansion).
    pub fn to_syntax(&self) -> BoolSyntax {
        match &self.0.kind {
            Kind::Const(b) => BoolSyntax::Const(*b),
            Kind::Ite(v, hi, lo) => BoolSyntax::or(
                BoolSyntax::and(BoolSyntax::Var(v.clone()), hi.to_syntax()),
                BoolSyntax::and(BoolSyntax::not(BoolSyntax::Var(v.clone())), lo.to_syntax()),
            ),
        }
    }

    /// A short sum-of-products cover of the function. Each cube is a list of
    /// `(variable, polarity)` literals in variable order.
    pub fn cover(&self) -> Vec<Vec<(VarName, bool)>> {
        if self.is_false() {
            return Vec::new();
        }
        if self.is_tautology() {
            return vec![Vec::new()];
        }
        let vars: Vec<VarName> = self.support().into_iter().collect();
        let mut cubes = if vars.len() <= 10 {
            minimal_cover(self, &vars)
        } else {
            path_cover(self)
        };
        cubes.sort_by_key(|a| cube_key(a));
        cubes
    }
}

fn cube_key(c: &[(VarName, bool)]) -> Vec<(VarName, bool)> {
    // Positive literals sort before negative ones on the same variable.
    c.iter().map(|(v, p)| (v.clone(), !p)).collect()
}

fn apply(op: Op, a: &BoolExpr, b: &BoolExpr, memo: &mut Memo) -> BoolExpr {
    match (op, a.as_const(), b.as_const()) {
        (Op::And, Some(false), _) | (Op::And, _, Some(false)) => return BoolExpr::ff(),
        (Op::And, Some(true), _) => return b.clone(),
        (Op::And, _, Some(true)) => return a.clone(),
        (Op::Or, Some(true), _) | (Op::Or, _, Some(true)) => return BoolExpr::tt(),
        (Op::Or, Some(false), _) => return b.clone(),
        (Op::Or, _, Some(false)) => return a.clone(),
        (Op::Xor, Some(false), _) => return b.clone(),
        (Op::Xor, _, Some(false)) => return a.clone(),
        (Op::Xor, Some(true), _) => return b.not(),
        (Op::Xor, _, Some(true)) => return a.not(),
        _ => {}
    }
    if a == b {
        return match op {
            Op::And | Op::Or => a.clone(),
            Op::Xor => BoolExpr::ff(),
        };
    }
    let key = (a.key(), b.key());
    if let Some(r) = memo.get(&key) {
        return r.clone();
    }
    let v = match (a.top(), b.top()) {
        (Some(x), Some(y)) => x.min(y).clone(),
        (Some(x), None) | (None, Some(x)) => x.clone(),
        (None, None) => unreachable!("constant cases handled above"),
    };
    let (ah, al) = a.cofactors(&v);
    let (bh, bl) = b.cofactors(&v);
    let r = BoolExpr::node(v, apply(op, &ah, &bh, memo), apply(op, &al, &bl, memo));
    memo.insert(key, r.clone());
    r
}

/// Cubes read off the paths to the 1 terminal.
fn path_cover(e: &BoolExpr) -> Vec<Vec<(VarName, bool)>> {
    fn go(e: &BoolExpr, prefix: &mut Vec<(VarName, bool)>, out: &mut Vec<Vec<(VarName, bool)>>) {
        match &e.0.kind {
            Kind::Const(true) => out.push(prefix.clone()),
            Kind::Const(false) => {}
            Kind::Ite(v, hi, lo) => {
                prefix.push((v.clone(), true));
                go(hi, prefix, out);
                prefix.pop();
                prefix.push((v.clone(), false));
                go(lo, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(e, &mut Vec::new(), &mut out);
    out
}

/// Prime implicants plus a greedy cover (Quine-McCluskey) over at most ten
/// support variables.
fn minimal_cover(e: &BoolExpr, vars: &[VarName]) -> Vec<Vec<(VarName, bool)>> {
    let n = vars.len();
    let full = (1u32 << n) - 1;
    let mut minterms = Vec::new();
    for m in 0..(1u32 << n) {
        let mut a = Assignment::default();
        for (i, v) in vars.iter().enumerate() {
            a.set(v.clone(), m & (1 << i) != 0);
        }
        if e.eval(&a).expect("assignment covers the support") {
            minterms.push(m);
        }
    }
    // A cube is (care mask, value bits).
    let mut current: BTreeSet<(u32, u32)> = minterms.iter().map(|&m| (full, m)).collect();
    let mut primes: BTreeSet<(u32, u32)> = BTreeSet::new();
    while !current.is_empty() {
        let list: Vec<(u32, u32)> = current.iter().copied().collect();
        let mut merged = BTreeSet::new();
        let mut used = BTreeSet::new();
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                let (ma, va) = list[i];
                let (mb, vb) = list[j];
                if ma == mb {
                    let diff = va ^ vb;
                    if diff.count_ones() == 1 {
                        merged.insert((ma & !diff, va & !diff));
                        used.insert(list[i]);
                        used.insert(list[j]);
                    }
                }
            }
        }
        for c in &list {
            if !used.contains(c) {
                primes.insert(*c);
            }
        }
        current = merged;
    }
    let covers = |c: &(u32, u32), m: u32| m & c.0 == c.1;
    let mut uncovered: BTreeSet<u32> = minterms.iter().copied().collect();
    let primes: Vec<(u32, u32)> = primes.into_iter().collect();
    let mut chosen: Vec<(u32, u32)> = Vec::new();
    for &m in &minterms {
        let cands: Vec<_> = primes.iter().filter(|p| covers(p, m)).collect();
        if cands.len() == 1 && !chosen.contains(cands[0]) {
            chosen.push(*cands[0]);
        }
    }
    for c in &chosen {
        uncovered.retain(|&m| !covers(c, m));
    }
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .filter(|p| !chosen.contains(p))
            .max_by_key(|p| {
                let gain = uncovered.iter().filter(|&&m| covers(p, m)).count();
                (
                    gain,
                    std::cmp::Reverse(p.0.count_ones()),
                    std::cmp::Reverse(**p),
                )
            })
            .copied()
            .expect("primes cover every minterm");
        uncovered.retain(|&m| !covers(&best, m));
        chosen.push(best);
    }
    chosen
        .into_iter()
        .map(|(mask, val)| {
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| (vars[i].clone(), val & (1 << i) != 0))
                .collect()
        })
        .collect()
}

fn fmt_cube(c: &[(VarName, bool)]) -> String {
    if c.is_empty() {
        return "1".into();
    }
    c.iter()
        .map(|(v, p)| if *p { v.to_string() } else { format!("!{v}") })
        .collect::<Vec<_>>()
        .join(" & ")
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cubes = self.cover();
        if cubes.is_empty() {
            return f.write_str("0");
        }
        if cubes.len() > 1 {
            // Factor out literals shared by every cube: `(x1 | x2) & y`.
            let common: Vec<(VarName, bool)> = cubes[0]
                .iter()
                .filter(|l| cubes.iter().all(|c| c.contains(l)))
                .cloned()
                .collect();
            if !common.is_empty() {
                let rest: Vec<String> = cubes
                    .iter()
                    .map(|c| {
                        let r: Vec<_> = c.iter().filter(|l| !common.contains(l)).cloned().collect();
                        fmt_cube(&r)
                    })
                    .collect();
                return write!(f, "({}) & {}", rest.join(" | "), fmt_cube(&common));
            }
        }
        let parts: Vec<String> = cubes.iter().map(|c| fmt_cube(c)).collect();
        f.write_str(&parts.join(" | "))
    }
}

/// A total assignment of truth values to the variables of a universe.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    values: BTreeMap<VarName, bool>,
}

impl Assignment {
    /// The all-zero assignment over a universe.
    pub fn zero<'a>(universe: impl IntoIterator<Item = &'a VarName>) -> Self {
        Assignment {
            values: universe.into_iter().map(|v| (v.clone(), false)).collect(),
        }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, bool)>,
        S: Into<VarName>,
    {
        Assignment {
            values: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, v: &VarName) -> Option<bool> {
        self.values.get(v).copied()
    }

    pub fn set(&mut self, v: VarName, value: bool) {
        self.values.insert(v, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, bool)> {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    pub fn domain(&self) -> impl Iterator<Item = &VarName> {
        self.values.keys()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Every assignment over the given universe, in binary counting order.
    pub fn enumerate(universe: &[VarName]) -> impl Iterator<Item = Assignment> + '_ {
        (0u64..(1u64 << universe.len())).map(move |m| Assignment {
            values: universe
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), m & (1 << i) != 0))
                .collect(),
        })
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(k, v)| format!("{k}={}", u8::from(*v)))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses a condition written in the text syntax.
pub fn parse_bool(src: &str) -> Result<BoolExpr, ParseError> {
    let toks = tokenize(src)?;
    let mut cur = Cursor::new(&toks);
    let e = parse_bool_at(&mut cur)?;
    cur.expect_end()?;
    Ok(mk(&e))
}

/// Parses a condition from a token cursor, stopping at the first token that
/// cannot continue the expression.
pub fn parse_bool_at(cur: &mut Cursor<'_>) -> Result<BoolSyntax, ParseError> {
    let mut lhs = parse_and(cur)?;
    while cur.eat_punct("|") {
        lhs = BoolSyntax::or(lhs, parse_and(cur)?);
    }
    Ok(lhs)
}

fn parse_and(cur: &mut Cursor<'_>) -> Result<BoolSyntax, ParseError> {
    let mut lhs = parse_not(cur)?;
    while cur.eat_punct("&") {
        lhs = BoolSyntax::and(lhs, parse_not(cur)?);
    }
    Ok(lhs)
}

fn parse_not(cur: &mut Cursor<'_>) -> Result<BoolSyntax, ParseError> {
    if cur.eat_punct("!") {
        return Ok(BoolSyntax::not(parse_not(cur)?));
    }
    match cur.peek() {
        Some(Tok::Num(0)) => {
            cur.next();
            Ok(BoolSyntax::Const(false))
        }
        Some(Tok::Num(1)) => {
            cur.next();
            Ok(BoolSyntax::Const(true))
        }
        Some(Tok::Ident(name)) => {
            cur.next();
            Ok(BoolSyntax::Var(VarName::new(name)))
        }
        Some(Tok::Punct("(")) => {
            cur.next();
            let e = parse_bool_at(cur)?;
            cur.expect_punct(")")?;
            Ok(e)
        }
        _ => Err(cur.unexpected("a condition")),
    }
}
