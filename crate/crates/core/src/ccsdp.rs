//! A CCS dialect with fraction processes for dynamic reconfiguration.
//!
//! A fraction `[N / D]` placed in parallel with processes that together
//! behave like `D` (strong of-bisimulation) may replace them, in one
//! internal step, by `N`. Parallel composition is handled as a flattened,
//! sorted multiset of components, so reconfiguration may delete any
//! nonempty set of co-located positive components.
//!
//! State spaces of open recursive processes are often infinite here, since
//! components that have finished their part stay in parallel. Equivalence
//! checks therefore short-circuit on identical normal forms, then look for
//! a bounded distinguishing witness, and only then attempt a full
//! finite-state check, failing with [`CcsError::UnfoldBoundExceeded`] if the
//! state space is too large.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::lexer::{tokenize, Cursor, ParseError, Tok};

/// Default bound on explored states.
pub const DEFAULT_STATE_BOUND: usize = 20_000;

/// Nesting bound for of-bisimulation checks triggered by creation labels.
const MAX_MATCH_DEPTH: usize = 16;

/// Depth bound of the distinguishing-witness searches.
const WITNESS_DEPTH: usize = 10;

/// Node bound of the distinguishing-witness searches.
const WITNESS_NODES: usize = 4_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CcsError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown process constant `{0}`")]
    UnknownConstant(String),
    #[error("`{name}` expects {expected} arguments, found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("unguarded recursion through `{0}`")]
    UnguardedRecursion(String),
    #[error("more than {bound} states explored")]
    UnfoldBoundExceeded { bound: usize },
    #[error("fraction nesting too deep to decide")]
    DepthUnbounded,
}

/// A port or action name. Outputs carry `out = true` and print with a
/// leading `'`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    pub label: Arc<str>,
    pub out: bool,
}

impl Name {
    pub fn input(label: &str) -> Self {
        Name {
            label: label.into(),
            out: false,
        }
    }

    pub fn output(label: &str) -> Self {
        Name {
            label: label.into(),
            out: true,
        }
    }

    pub fn complement(&self) -> Self {
        Name {
            label: self.label.clone(),
            out: !self.out,
        }
    }

    /// Parses `Receipt_o1` or `'RejectIC_o1`.
    pub fn parse(s: &str) -> Self {
        match s.trim().strip_prefix('\'') {
            Some(rest) => Name::output(rest.trim()),
            None => Name::input(s.trim()),
        }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.out {
            f.write_str("'")?;
        }
        f.write_str(&self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prefix {
    Tau,
    Vis(Name),
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prefix::Tau => f.write_str("tau"),
            Prefix::Vis(n) => write!(f, "{n}"),
        }
    }
}

/// Process terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Proc {
    Nil,
    Sum(Arc<[(Prefix, Proc)]>),
    Par(Arc<[Proc]>),
    Frac(Arc<Proc>, Arc<Proc>),
    Const(Arc<str>, Arc<[Arc<str>]>),
}

impl Proc {
    pub fn prefix(p: Prefix, cont: Proc) -> Self {
        Proc::Sum(Arc::from(vec![(p, cont)]))
    }

    pub fn act(name: Name, cont: Proc) -> Self {
        Self::prefix(Prefix::Vis(name), cont)
    }

    pub fn tau(cont: Proc) -> Self {
        Self::prefix(Prefix::Tau, cont)
    }

    pub fn sum(summands: Vec<(Prefix, Proc)>) -> Self {
        if summands.is_empty() {
            Proc::Nil
        } else {
            Proc::Sum(Arc::from(summands))
        }
    }

    pub fn par(parts: Vec<Proc>) -> Self {
        match parts.len() {
            0 => Proc::Nil,
            1 => parts.into_iter().next().expect("one part"),
            _ => Proc::Par(Arc::from(parts)),
        }
    }

    pub fn frac(n: Proc, d: Proc) -> Self {
        Proc::Frac(Arc::new(n), Arc::new(d))
    }

    pub fn constant(name: &str) -> Self {
        Proc::Const(name.into(), Arc::from(Vec::new()))
    }

    /// Components of a flattened parallel composition.
    pub fn components(&self) -> &[Proc] {
        match self {
            Proc::Nil => &[],
            Proc::Par(ps) => ps,
            other => std::slice::from_ref(other),
        }
    }

    fn is_sum(&self) -> bool {
        matches!(self, Proc::Sum(_))
    }

    fn substitute(&self, map: &HashMap<Arc<str>, Arc<str>>) -> Proc {
        if map.is_empty() {
            return self.clone();
        }
        let sub = |s: &Arc<str>| map.get(s).cloned().unwrap_or_else(|| s.clone());
        match self {
            Proc::Nil => Proc::Nil,
            Proc::Sum(ss) => Proc::Sum(
                ss.iter()
                    .map(|(p, c)| {
                        let p = match p {
                            Prefix::Tau => Prefix::Tau,
                            Prefix::Vis(n) => Prefix::Vis(Name {
                                label: sub(&n.label),
                                out: n.out,
                            }),
                        };
                        (p, c.substitute(map))
                    })
                    .collect::<Vec<_>>()
                    .into(),
            ),
            Proc::Par(ps) => Proc::Par(
                ps.iter()
                    .map(|p| p.substitute(map))
                    .collect::<Vec<_>>()
                    .into(),
            ),
            Proc::Frac(n, d) => Proc::frac(n.substitute(map), d.substitute(map)),
            Proc::Const(c, args) => {
                Proc::Const(c.clone(), args.iter().map(sub).collect::<Vec<_>>().into())
            }
        }
    }
}

/// Precedence levels for printing.
fn prec(p: &Proc) -> u8 {
    match p {
        Proc::Par(_) => 0,
        Proc::Sum(ss) if ss.len() > 1 => 1,
        _ => 2,
    }
}

struct AtLeast<'a>(&'a Proc, u8);

impl fmt::Display for AtLeast<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if prec(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proc::Nil => f.write_str("0"),
            Proc::Sum(ss) => {
                for (i, (p, c)) in ss.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{p}.{}", AtLeast(c, 2))?;
                }
                Ok(())
            }
            Proc::Par(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{}", AtLeast(p, 1))?;
                }
                Ok(())
            }
            Proc::Frac(n, d) => write!(f, "[{n} / {d}]"),
            Proc::Const(c, args) => {
                f.write_str(c)?;
                if !args.is_empty() {
                    let a: Vec<&str> = args.iter().map(|s| &**s).collect();
                    write!(f, "<{}>", a.join(", "))?;
                }
                Ok(())
            }
        }
    }
}

/// A constant definition `Name(params) := body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub params: Vec<Arc<str>>,
    pub body: Proc,
}

/// Definitions and the finite index sets used by `sum` expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Env {
    pub defs: BTreeMap<Arc<str>, Def>,
    pub sets: BTreeMap<String, Vec<String>>,
}

impl Default for Env {
    fn default() -> Self {
        Env {
            defs: BTreeMap::new(),
            sets: BTreeMap::from([("O".to_string(), vec!["o1".to_string()])]),
        }
    }
}

impl Env {
    /// Parses a sequence of `Name(params) := body;` definitions and
    /// `set O = {o1, o2};` declarations.
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut env = Env::default();
        env.extend(src)?;
        Ok(env)
    }

    /// Adds the definitions of `src` to this environment.
    pub fn extend(&mut self, src: &str) -> Result<(), ParseError> {
        let toks = tokenize(src)?;
        let mut cur = Cursor::new(&toks);
        // First pass: names of all constants, so that bodies may refer to
        // constants defined later.
        let mut names: BTreeMap<String, usize> = self
            .defs
            .iter()
            .map(|(k, d)| (k.to_string(), d.params.len()))
            .collect();
        let start = cur.position();
        while !cur.at_end() {
            if cur.is_ident("set") {
                skip_statement(&mut cur);
                continue;
            }
            let name = cur.expect_ident()?;
            let mut arity = 0;
            if cur.eat_punct("(") {
                while !cur.eat_punct(")") {
                    cur.expect_ident()?;
                    arity += 1;
                    if !cur.is_punct(")") {
                        cur.expect_punct(",")?;
                    }
                }
            }
            if !cur.is_punct(":=") {
                return Err(cur.unexpected("`:=`"));
            }
            if names.insert(name.clone(), arity).is_some() && !self.defs.contains_key(name.as_str())
            {
                return Err(cur.error(format!("`{name}` is defined twice")));
            }
            skip_statement(&mut cur);
        }
        cur.reset(start);
        let mut seen = HashSet::new();
        while !cur.at_end() {
            if cur.eat_ident("set") {
                let set = cur.expect_ident()?;
                cur.expect_punct("=")?;
                cur.expect_punct("{")?;
                let mut items = Vec::new();
                while !cur.eat_punct("}") {
                    items.push(cur.expect_ident()?);
                    if !cur.is_punct("}") {
                        cur.expect_punct(",")?;
                    }
                }
                cur.expect_punct(";")?;
                if items.is_empty() {
                    return Err(cur.error(format!("index set `{set}` is empty")));
                }
                self.sets.insert(set, items);
                continue;
            }
            let name = cur.expect_ident()?;
            if !seen.insert(name.clone()) {
                return Err(cur.error(format!("`{name}` is defined twice")));
            }
            let mut params = Vec::new();
            if cur.eat_punct("(") {
                while !cur.eat_punct(")") {
                    params.push(Arc::<str>::from(cur.expect_ident()?));
                    if !cur.is_punct(")") {
                        cur.expect_punct(",")?;
                    }
                }
            }
            cur.expect_punct(":=")?;
            let parser = ProcParser {
                names: &names,
                sets: &self.sets,
            };
            let body = parser.par(&mut cur, &HashMap::new())?;
            cur.expect_punct(";")?;
            self.defs.insert(name.as_str().into(), Def { params, body });
        }
        Ok(())
    }

    /// Parses a process term over this environment.
    pub fn parse_proc(&self, src: &str) -> Result<Proc, ParseError> {
        let toks = tokenize(src)?;
        let mut cur = Cursor::new(&toks);
        let p = self.parse_proc_at(&mut cur)?;
        cur.expect_end()?;
        Ok(p)
    }

    pub fn parse_proc_at(&self, cur: &mut Cursor) -> Result<Proc, ParseError> {
        let names: BTreeMap<String, usize> = self
            .defs
            .iter()
            .map(|(k, d)| (k.to_string(), d.params.len()))
            .collect();
        ProcParser {
            names: &names,
            sets: &self.sets,
        }
        .par(cur, &HashMap::new())
    }
}

fn skip_statement(cur: &mut Cursor) {
    let mut depth = 0i32;
    while let Some(t) = cur.next() {
        match t {
            Tok::Punct("(" | "[" | "{") => depth += 1,
            Tok::Punct(")" | "]" | "}") => depth -= 1,
            Tok::Punct(";") if depth <= 0 => return,
            _ => {}
        }
    }
}

struct ProcParser<'e> {
    names: &'e BTreeMap<String, usize>,
    sets: &'e BTreeMap<String, Vec<String>>,
}

type Binding = HashMap<String, String>;

impl ProcParser<'_> {
    fn par(&self, cur: &mut Cursor, b: &Binding) -> Result<Proc, ParseError> {
        let mut parts = vec![self.sum(cur, b)?];
        while cur.eat_punct("|") {
            parts.push(self.sum(cur, b)?);
        }
        Ok(Proc::par(parts))
    }

    fn sum(&self, cur: &mut Cursor, b: &Binding) -> Result<Proc, ParseError> {
        let first = self.prefixed(cur, b)?;
        if !cur.is_punct("+") {
            return Ok(first);
        }
        let mut summands = Vec::new();
        self.add_summands(cur, first, &mut summands)?;
        while cur.eat_punct("+") {
            let next = self.prefixed(cur, b)?;
            self.add_summands(cur, next, &mut summands)?;
        }
        Ok(Proc::sum(summands))
    }

    fn add_summands(
        &self,
        cur: &Cursor,
        p: Proc,
        out: &mut Vec<(Prefix, Proc)>,
    ) -> Result<(), ParseError> {
        match p {
            Proc::Nil => Ok(()),
            Proc::Sum(ss) => {
                out.extend(ss.iter().cloned());
                Ok(())
            }
            other => Err(cur.error(format!("summand `{other}` is not guarded by a prefix"))),
        }
    }

    fn prefixed(&self, cur: &mut Cursor, b: &Binding) -> Result<Proc, ParseError> {
        match cur.peek() {
            Some(Tok::Num(0)) => {
                cur.next();
                Ok(Proc::Nil)
            }
            Some(Tok::Punct("(")) => {
                cur.next();
                let p = self.par(cur, b)?;
                cur.expect_punct(")")?;
                Ok(p)
            }
            Some(Tok::Punct("[")) => {
                cur.next();
                let n = self.par(cur, b)?;
                cur.expect_punct("/")?;
                let d = self.par(cur, b)?;
                cur.expect_punct("]")?;
                Ok(Proc::frac(n, d))
            }
            Some(Tok::Punct("'")) => {
                cur.next();
                let label = self.port(cur, b)?;
                self.continuation(
                    cur,
                    b,
                    Prefix::Vis(Name {
                        label: label.into(),
                        out: true,
                    }),
                )
            }
            Some(Tok::Ident(w))
                if w == "sum" && matches!(cur.peek_at(2), Some(Tok::Ident(k)) if k == "in") =>
            {
                cur.next();
                self.indexed_sum(cur, b)
            }
            Some(Tok::Ident(w)) if w == "tau" => {
                cur.next();
                self.continuation(cur, b, Prefix::Tau)
            }
            Some(Tok::Ident(w)) => {
                let followed_by_dot_or_index =
                    matches!(cur.peek_at(1), Some(Tok::Punct("." | "[")));
                if let (Some(&arity), false) =
                    (self.names.get(w.as_str()), followed_by_dot_or_index)
                {
                    let name = w.clone();
                    cur.next();
                    let args = self.args(cur, b)?;
                    if args.len() != arity {
                        return Err(cur.error(format!(
                            "`{name}` expects {arity} arguments, found {}",
                            args.len()
                        )));
                    }
                    return Ok(Proc::Const(name.as_str().into(), args.into()));
                }
                let label = self.port(cur, b)?;
                self.continuation(
                    cur,
                    b,
                    Prefix::Vis(Name {
                        label: label.into(),
                        out: false,
                    }),
                )
            }
            _ => Err(cur.unexpected("a process")),
        }
    }

    fn args(&self, cur: &mut Cursor, b: &Binding) -> Result<Vec<Arc<str>>, ParseError> {
        let close = if cur.eat_punct("<") {
            ">"
        } else if cur.eat_punct("(") {
            ")"
        } else {
            return Ok(Vec::new());
        };
        let mut args = Vec::new();
        while !cur.eat_punct(close) {
            args.push(Arc::from(self.port(cur, b)?));
            if !cur.is_punct(close) {
                cur.expect_punct(",")?;
            }
        }
        Ok(args)
    }

    /// `Base` or `Base[i, j]`, flattened to `Base_i_j` after resolving
    /// bound index variables.
    fn port(&self, cur: &mut Cursor, b: &Binding) -> Result<String, ParseError> {
        let mut label = cur.expect_ident()?;
        if cur.eat_punct("[") {
            loop {
                let idx = cur.expect_ident()?;
                label.push('_');
                label.push_str(b.get(&idx).map(String::as_str).unwrap_or(&idx));
                if cur.eat_punct("]") {
                    break;
                }
                cur.expect_punct(",")?;
            }
        }
        Ok(label)
    }

    fn continuation(&self, cur: &mut Cursor, b: &Binding, p: Prefix) -> Result<Proc, ParseError> {
        if cur.eat_punct(".") {
            Ok(Proc::prefix(p, self.prefixed(cur, b)?))
        } else {
            Ok(Proc::prefix(p, Proc::Nil))
        }
    }

    /// `sum o in O { body }`: one copy of the summands of `body` per index.
    fn indexed_sum(&self, cur: &mut Cursor, b: &Binding) -> Result<Proc, ParseError> {
        let var = cur.expect_ident()?;
        if !cur.eat_ident("in") {
            return Err(cur.unexpected("`in`"));
        }
        let set = cur.expect_ident()?;
        let items = self
            .sets
            .get(&set)
            .ok_or_else(|| cur.error(format!("unknown index set `{set}`")))?;
        cur.expect_punct("{")?;
        let start = cur.position();
        let mut summands = Vec::new();
        for item in items {
            cur.reset(start);
            let mut inner = b.clone();
            inner.insert(var.clone(), item.clone());
            let body = self.par(cur, &inner)?;
            self.add_summands(cur, body, &mut summands)?;
        }
        cur.expect_punct("}")?;
        Ok(Proc::sum(summands))
    }
}

/// Transition labels. Creation labels carry the normalized denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Tau,
    Vis(Name),
    Create(Proc),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("tau"),
            Label::Vis(n) => write!(f, "{n}"),
            Label::Create(d) => write!(f, "create({d})"),
        }
    }
}

/// A visible trace one side can perform weakly and the other cannot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// Visible labels both sides can perform.
    pub trace: Vec<Name>,
    /// The next label only one side can perform.
    pub label: Name,
    /// True when the left process is the one able to perform `label`.
    pub left_can: bool,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t: Vec<String> = self.trace.iter().map(|n| n.to_string()).collect();
        let (yes, no) = if self.left_can {
            ("left", "right")
        } else {
            ("right", "left")
        };
        write!(
            f,
            "after [{}] the {yes} side can weakly perform {} and the {no} side cannot",
            t.join(", "),
            self.label
        )
    }
}

/// Outcome of a weak bisimulation check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakResult {
    pub bisimilar: bool,
    pub witness: Option<Witness>,
}

type Moves = Rc<Vec<(Label, Proc)>>;

/// The analysis engine: definitions plus memo tables.
pub struct Ccs {
    pub env: Env,
    pub bound: usize,
    norm_cache: RefCell<HashMap<Proc, Proc>>,
    trans_cache: RefCell<HashMap<Proc, Moves>>,
    pos_cache: RefCell<HashMap<Proc, bool>>,
    of_cache: RefCell<HashMap<(Proc, Proc), bool>>,
    depth: Cell<usize>,
}

impl Ccs {
    pub fn new(env: Env) -> Self {
        Self::with_bound(env, DEFAULT_STATE_BOUND)
    }

    pub fn with_bound(env: Env, bound: usize) -> Self {
        Ccs {
            env,
            bound,
            norm_cache: RefCell::default(),
            trans_cache: RefCell::default(),
            pos_cache: RefCell::default(),
            of_cache: RefCell::default(),
            depth: Cell::new(0),
        }
    }

    pub fn parse(&self, src: &str) -> Result<Proc, CcsError> {
        Ok(self.env.parse_proc(src)?)
    }

    fn lookup(&self, name: &Arc<str>, args: &[Arc<str>]) -> Result<Proc, CcsError> {
        let def = self
            .env
            .defs
            .get(name)
            .ok_or_else(|| CcsError::UnknownConstant(name.to_string()))?;
        if def.params.len() != args.len() {
            return Err(CcsError::ArityMismatch {
                name: name.to_string(),
                expected: def.params.len(),
                found: args.len(),
            });
        }
        let map: HashMap<Arc<str>, Arc<str>> = def
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        Ok(def.body.substitute(&map))
    }

    /// Normal form: parallel compositions flattened and sorted with `0`
    /// removed, summands sorted, and constants unfolded unless their body is
    /// a summation.
    pub fn normalize(&self, p: &Proc) -> Result<Proc, CcsError> {
        if let Some(n) = self.norm_cache.borrow().get(p) {
            return Ok(n.clone());
        }
        let n = self.normalize_inner(p, &mut Vec::new())?;
        self.norm_cache.borrow_mut().insert(p.clone(), n.clone());
        Ok(n)
    }

    fn normalize_inner(&self, p: &Proc, unfolding: &mut Vec<Arc<str>>) -> Result<Proc, CcsError> {
        Ok(match p {
            Proc::Nil => Proc::Nil,
            Proc::Sum(ss) => {
                let mut v: Vec<(Prefix, Proc)> = ss.to_vec();
                v.sort();
                Proc::Sum(v.into())
            }
            Proc::Par(ps) => {
                let mut parts = Vec::new();
                for q in ps.iter() {
                    let nq = self.normalize_inner(q, unfolding)?;
                    parts.extend(nq.components().iter().cloned());
                }
                parts.sort();
                Proc::par(parts)
            }
            Proc::Frac(n, d) => Proc::frac(
                self.normalize_inner(n, unfolding)?,
                self.normalize_inner(d, unfolding)?,
            ),
            Proc::Const(name, args) => {
                let body = self.lookup(name, args)?;
                if body.is_sum() {
                    return Ok(p.clone());
                }
                if unfolding.contains(name) {
                    return Err(CcsError::UnguardedRecursion(name.to_string()));
                }
                unfolding.push(name.clone());
                let r = self.normalize_inner(&body, unfolding);
                unfolding.pop();
                r?
            }
        })
    }

    /// Membership in the least set of positive processes: prefixes, sums,
    /// parallel compositions with a positive part, fractions with a
    /// positive denominator, and constants with a positive body.
    pub fn is_positive(&self, p: &Proc) -> Result<bool, CcsError> {
        if let Some(b) = self.pos_cache.borrow().get(p) {
            return Ok(*b);
        }
        let b = self.positive_inner(p, &mut Vec::new())?;
        self.pos_cache.borrow_mut().insert(p.clone(), b);
        Ok(b)
    }

    fn positive_inner(&self, p: &Proc, visiting: &mut Vec<Arc<str>>) -> Result<bool, CcsError> {
        Ok(match p {
            Proc::Nil => false,
            Proc::Sum(ss) => !ss.is_empty(),
            Proc::Par(ps) => {
                for q in ps.iter() {
                    if self.positive_inner(q, visiting)? {
                        return Ok(true);
                    }
                }
                false
            }
            Proc::Frac(_, d) => self.positive_inner(d, visiting)?,
            Proc::Const(name, args) => {
                if visiting.contains(name) {
                    return Ok(false);
                }
                visiting.push(name.clone());
                let body = self.lookup(name, args)?;
                let r = self.positive_inner(&body, visiting);
                visiting.pop();
                r?
            }
        })
    }

    /// Moves of a single normalized component on its own, as the label and
    /// the components replacing it.
    fn own_moves(&self, c: &Proc) -> Result<Vec<(Label, Vec<Proc>)>, CcsError> {
        let summands = match c {
            Proc::Sum(ss) => ss.clone(),
            Proc::Const(name, args) => match self.lookup(name, args)? {
                Proc::Sum(ss) => ss,
                _ => return Err(CcsError::UnguardedRecursion(name.to_string())),
            },
            Proc::Frac(n, d) => {
                if self.is_positive(d)? {
                    return Ok(vec![(
                        Label::Create((**d).clone()),
                        n.components().to_vec(),
                    )]);
                }
                return Ok(Vec::new());
            }
            Proc::Nil | Proc::Par(_) => return Ok(Vec::new()),
        };
        let mut out = Vec::new();
        for (pre, cont) in summands.iter() {
            let label = match pre {
                Prefix::Tau => Label::Tau,
                Prefix::Vis(n) => Label::Vis(n.clone()),
            };
            out.push((label, self.normalize(cont)?.components().to_vec()));
        }
        Ok(out)
    }

    /// Every transition of `p` (normalized first). Deletion labels are not
    /// reported; deletions only happen as part of a reconfiguration step.
    pub fn transitions(&self, p: &Proc) -> Result<Moves, CcsError> {
        let p = self.normalize(p)?;
        if let Some(m) = self.trans_cache.borrow().get(&p) {
            return Ok(m.clone());
        }
        let comps = p.components();
        let own: Vec<Vec<(Label, Vec<Proc>)>> = comps
            .iter()
            .map(|c| self.own_moves(c))
            .collect::<Result<_, _>>()?;
        let rebuild = |skip: &[usize], add: &[&[Proc]]| -> Proc {
            let mut parts: Vec<Proc> = comps
                .iter()
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .map(|(_, c)| c.clone())
                .collect();
            for a in add {
                parts.extend(a.iter().cloned());
            }
            parts.sort();
            Proc::par(parts)
        };
        let mut out: Vec<(Label, Proc)> = Vec::new();
        for (i, moves) in own.iter().enumerate() {
            for (l, repl) in moves {
                out.push((l.clone(), rebuild(&[i], &[repl])));
            }
        }
        // Communication between complementary visible actions.
        for i in 0..comps.len() {
            for j in i + 1..comps.len() {
                for (li, ri) in &own[i] {
                    let Label::Vis(a) = li else { continue };
                    for (lj, rj) in &own[j] {
                        if matches!(lj, Label::Vis(b) if *b == a.complement()) {
                            out.push((Label::Tau, rebuild(&[i, j], &[ri, rj])));
                        }
                    }
                }
            }
        }
        // Reconfiguration: a fraction replaces a set of other components
        // that together match its denominator.
        for (i, c) in comps.iter().enumerate() {
            let Proc::Frac(n, d) = c else { continue };
            if !self.is_positive(d)? {
                continue;
            }
            for set in self.deletion_targets(comps, Some(i), d)? {
                let mut skip = set.clone();
                skip.push(i);
                out.push((Label::Tau, rebuild(&skip, &[n.components()])));
            }
        }
        out.sort();
        out.dedup();
        let m = Rc::new(out);
        self.trans_cache.borrow_mut().insert(p.clone(), m.clone());
        Ok(m)
    }

    /// Index sets `T` of components (excluding `exclude`) whose members are
    /// all positive and whose parallel composition is strongly of-bisimilar
    /// to `d`.
    pub fn deletion_targets(
        &self,
        comps: &[Proc],
        exclude: Option<usize>,
        d: &Proc,
    ) -> Result<Vec<Vec<usize>>, CcsError> {
        let d = self.normalize(d)?;
        let d_sig = self.signature(&d)?;
        let mut cands = Vec::new();
        for (j, c) in comps.iter().enumerate() {
            if Some(j) == exclude || !self.is_positive(c)? {
                continue;
            }
            let s = self.own_signature(c)?;
            if s.visible.is_subset(&d_sig.visible)
                && (!s.create || d_sig.create)
                && (!s.tau || d_sig.tau)
            {
                cands.push((j, s));
            }
        }
        let mut found = Vec::new();
        let mut chosen = Vec::new();
        self.search_targets(comps, &cands, 0, &mut chosen, &d, &d_sig, &mut found)?;
        Ok(found)
    }

    #[allow(clippy::too_many_arguments)]
    fn search_targets(
        &self,
        comps: &[Proc],
        cands: &[(usize, Signature)],
        k: usize,
        chosen: &mut Vec<usize>,
        d: &Proc,
        d_sig: &Signature,
        found: &mut Vec<Vec<usize>>,
    ) -> Result<(), CcsError> {
        // Prune when the chosen and remaining candidates cannot cover the
        // visible labels of the denominator.
        let mut cover: BTreeSet<&Name> = BTreeSet::new();
        for &(j, ref s) in cands.iter() {
            if chosen.contains(&j) || cands[k..].iter().any(|(x, _)| *x == j) {
                cover.extend(s.visible.iter());
            }
        }
        if !d_sig.visible.iter().all(|n| cover.contains(n)) {
            return Ok(());
        }
        if k == cands.len() {
            if chosen.is_empty() {
                return Ok(());
            }
            let t = Proc::par(chosen.iter().map(|&j| comps[j].clone()).collect());
            if self.strong_of_bisim(&t, d)? {
                found.push(chosen.clone());
            }
            return Ok(());
        }
        chosen.push(cands[k].0);
        self.search_targets(comps, cands, k + 1, chosen, d, d_sig, found)?;
        chosen.pop();
        self.search_targets(comps, cands, k + 1, chosen, d, d_sig, found)
    }

    fn own_signature(&self, c: &Proc) -> Result<Signature, CcsError> {
        let mut s = Signature::default();
        for (l, _) in self.own_moves(c)? {
            s.add(&l);
        }
        Ok(s)
    }

    fn signature(&self, p: &Proc) -> Result<Signature, CcsError> {
        let mut s = Signature::default();
        for (l, _) in self.transitions(p)?.iter() {
            s.add(l);
        }
        Ok(s)
    }

    /// Strong of-bisimulation: mutual matching of internal, visible and
    /// creation transitions, with creation labels compared by recursively
    /// matching their denominators.
    pub fn strong_of_bisim(&self, p: &Proc, q: &Proc) -> Result<bool, CcsError> {
        let (p, q) = (self.normalize(p)?, self.normalize(q)?);
        if p == q {
            return Ok(true);
        }
        let key = if p <= q {
            (p.clone(), q.clone())
        } else {
            (q.clone(), p.clone())
        };
        if let Some(b) = self.of_cache.borrow().get(&key) {
            return Ok(*b);
        }
        if self.depth.get() >= MAX_MATCH_DEPTH {
            return Err(CcsError::DepthUnbounded);
        }
        self.depth.set(self.depth.get() + 1);
        let r = self.strong_uncached(&p, &q);
        self.depth.set(self.depth.get() - 1);
        let r = r?;
        self.of_cache.borrow_mut().insert(key, r);
        Ok(r)
    }

    fn strong_uncached(&self, p: &Proc, q: &Proc) -> Result<bool, CcsError> {
        if self.signature(p)? != self.signature(q)? {
            return Ok(false);
        }
        if self.strong_distinguishable(p, q)? {
            return Ok(false);
        }
        let lts = self.explore(&[p.clone(), q.clone()], None, false)?;
        let blocks = self.refine(&lts)?;
        Ok(blocks[lts.index[p]] == blocks[lts.index[q]])
    }

    fn label_match(&self, a: &Label, b: &Label) -> Result<bool, CcsError> {
        match (a, b) {
            (Label::Create(x), Label::Create(y)) => self.strong_of_bisim(x, y),
            _ => Ok(a == b),
        }
    }

    /// Bounded search for a state of one side that no state of the other,
    /// reached by the same labels, can match on its immediate labels.
    fn strong_distinguishable(&self, p: &Proc, q: &Proc) -> Result<bool, CcsError> {
        let mut queue: VecDeque<(Proc, Vec<Proc>, usize)> = VecDeque::new();
        let mut seen: HashSet<(Proc, Vec<Proc>)> = HashSet::new();
        queue.push_back((p.clone(), vec![q.clone()], 0));
        queue.push_back((q.clone(), vec![p.clone()], 0));
        let mut nodes = 0;
        while let Some((s, others, depth)) = queue.pop_front() {
            if !seen.insert((s.clone(), others.clone())) {
                continue;
            }
            nodes += 1;
            if nodes > WITNESS_NODES {
                return Ok(false);
            }
            let sig = self.signature(&s)?;
            let mut any_same = false;
            for t in &others {
                if self.signature(t)? == sig {
                    any_same = true;
                    break;
                }
            }
            if !any_same {
                return Ok(true);
            }
            if depth >= WITNESS_DEPTH {
                continue;
            }
            for (l, s2) in self.transitions(&s)?.iter() {
                let mut next = BTreeSet::new();
                for t in &others {
                    for (lt, t2) in self.transitions(t)?.iter() {
                        if self.label_match(l, lt)? {
                            next.insert(t2.clone());
                        }
                    }
                }
                if next.is_empty() {
                    return Ok(true);
                }
                queue.push_back((s2.clone(), next.into_iter().collect(), depth + 1));
            }
        }
        Ok(false)
    }

    /// Explores every state reachable from `roots`. With `weak`, creation
    /// labels are dropped and visible labels outside `observe` are blocked.
    fn explore(
        &self,
        roots: &[Proc],
        observe: Option<&BTreeSet<Name>>,
        weak: bool,
    ) -> Result<Lts, CcsError> {
        let mut lts = Lts::default();
        let mut queue = VecDeque::new();
        for r in roots {
            if !lts.index.contains_key(r) {
                lts.index.insert(r.clone(), lts.states.len());
                lts.states.push(r.clone());
                queue.push_back(r.clone());
            }
        }
        while let Some(s) = queue.pop_front() {
            let mut edges = Vec::new();
            for (l, t) in self.transitions(&s)?.iter() {
                if weak {
                    match l {
                        Label::Create(_) => continue,
                        Label::Vis(n) if observe.is_some_and(|o| !o.contains(n)) => continue,
                        _ => {}
                    }
                }
                let id = match lts.index.get(t) {
                    Some(&id) => id,
                    None => {
                        if lts.states.len() >= self.bound {
                            return Err(CcsError::UnfoldBoundExceeded { bound: self.bound });
                        }
                        let id = lts.states.len();
                        lts.index.insert(t.clone(), id);
                        lts.states.push(t.clone());
                        queue.push_back(t.clone());
                        id
                    }
                };
                edges.push((l.clone(), id));
            }
            lts.edges.push(edges);
        }
        Ok(lts)
    }

    /// Partition refinement over the explored LTS. Creation labels are
    /// grouped into classes of of-bisimilar denominators first.
    fn refine(&self, lts: &Lts) -> Result<Vec<usize>, CcsError> {
        let mut reps: Vec<Proc> = Vec::new();
        let mut class_of: HashMap<Proc, usize> = HashMap::new();
        for edges in &lts.edges {
            for (l, _) in edges {
                if let Label::Create(d) = l {
                    if class_of.contains_key(d) {
                        continue;
                    }
                    let mut cls = None;
                    for (k, r) in reps.iter().enumerate() {
                        if self.strong_of_bisim(d, r)? {
                            cls = Some(k);
                            break;
                        }
                    }
                    let k = cls.unwrap_or_else(|| {
                        reps.push(d.clone());
                        reps.len() - 1
                    });
                    class_of.insert(d.clone(), k);
                }
            }
        }
        let keyed: Vec<Vec<(LabelKey, usize)>> = lts
            .edges
            .iter()
            .map(|es| {
                es.iter()
                    .map(|(l, t)| {
                        let k = match l {
                            Label::Tau => LabelKey::Tau,
                            Label::Vis(n) => LabelKey::Vis(n.clone()),
                            Label::Create(d) => LabelKey::Create(class_of[d]),
                        };
                        (k, *t)
                    })
                    .collect()
            })
            .collect();
        Ok(partition(&keyed))
    }

    /// Weak observational bisimulation over visible labels, with internal
    /// steps absorbed. With `observe`, only the listed visible labels are
    /// available, as if the processes ran in a context offering just those.
    pub fn weak_obs_bisim(
        &self,
        p: &Proc,
        q: &Proc,
        observe: Option<&BTreeSet<Name>>,
    ) -> Result<WeakResult, CcsError> {
        let (p, q) = (self.normalize(p)?, self.normalize(q)?);
        if p == q {
            return Ok(WeakResult {
                bisimilar: true,
                witness: None,
            });
        }
        if let Some(w) = self.weak_witness(&p, &q, observe)? {
            return Ok(WeakResult {
                bisimilar: false,
                witness: Some(w),
            });
        }
        let lts = self.explore(&[p.clone(), q.clone()], observe, true)?;
        let n = lts.states.len();
        // Saturate: s =tau=> t for t in the closure, s =a=> t through a.
        let closures: Vec<BTreeSet<usize>> = (0..n).map(|s| tau_closure_ids(&lts, s)).collect();
        let mut saturated: Vec<Vec<(LabelKey, usize)>> = vec![Vec::new(); n];
        for s in 0..n {
            let mut edges = BTreeSet::new();
            for &u in &closures[s] {
                edges.insert((LabelKey::Tau, u));
                for (l, v) in &lts.edges[u] {
                    if let Label::Vis(a) = l {
                        for &w in &closures[*v] {
                            edges.insert((LabelKey::Vis(a.clone()), w));
                        }
                    }
                }
            }
            saturated[s] = edges.into_iter().collect();
        }
        let blocks = partition(&saturated);
        Ok(WeakResult {
            bisimilar: blocks[lts.index[&p]] == blocks[lts.index[&q]],
            witness: None,
        })
    }

    fn weak_moves(
        &self,
        s: &Proc,
        observe: Option<&BTreeSet<Name>>,
    ) -> Result<Vec<(Option<Name>, Proc)>, CcsError> {
        Ok(self
            .transitions(s)?
            .iter()
            .filter_map(|(l, t)| match l {
                Label::Tau => Some((None, t.clone())),
                Label::Vis(n) if observe.is_none_or(|o| o.contains(n)) => {
                    Some((Some(n.clone()), t.clone()))
                }
                _ => None,
            })
            .collect())
    }

    /// States reachable from `set` by internal steps, or `None` when more
    /// than the bound.
    fn tau_closure(
        &self,
        set: BTreeSet<Proc>,
        observe: Option<&BTreeSet<Name>>,
    ) -> Result<Option<BTreeSet<Proc>>, CcsError> {
        let mut out = set.clone();
        let mut stack: Vec<Proc> = set.into_iter().collect();
        while let Some(s) = stack.pop() {
            for (l, t) in self.weak_moves(&s, observe)? {
                if l.is_none() && out.insert(t.clone()) {
                    if out.len() > self.bound {
                        return Ok(None);
                    }
                    stack.push(t);
                }
            }
        }
        Ok(Some(out))
    }

    /// Bounded breadth-first search for a visible trace that one side can
    /// extend by a label the other side cannot.
    pub fn weak_witness(
        &self,
        p: &Proc,
        q: &Proc,
        observe: Option<&BTreeSet<Name>>,
    ) -> Result<Option<Witness>, CcsError> {
        let (Some(l0), Some(r0)) = (
            self.tau_closure(BTreeSet::from([p.clone()]), observe)?,
            self.tau_closure(BTreeSet::from([q.clone()]), observe)?,
        ) else {
            return Ok(None);
        };
        let mut queue = VecDeque::from([(l0, r0, Vec::<Name>::new())]);
        let mut seen: HashSet<(BTreeSet<Proc>, BTreeSet<Proc>)> = HashSet::new();
        while let Some((ls, rs, trace)) = queue.pop_front() {
            if !seen.insert((ls.clone(), rs.clone())) {
                continue;
            }
            if seen.len() > WITNESS_NODES {
                return Ok(None);
            }
            let lnext = self.visible_successors(&ls, observe)?;
            let rnext = self.visible_successors(&rs, observe)?;
            for a in lnext.keys() {
                if !rnext.contains_key(a) {
                    return Ok(Some(Witness {
                        trace,
                        label: a.clone(),
                        left_can: true,
                    }));
                }
            }
            for a in rnext.keys() {
                if !lnext.contains_key(a) {
                    return Ok(Some(Witness {
                        trace,
                        label: a.clone(),
                        left_can: false,
                    }));
                }
            }
            if trace.len() >= WITNESS_DEPTH {
                continue;
            }
            for (a, lset) in lnext {
                let rset = rnext[&a].clone();
                let (Some(lc), Some(rc)) = (
                    self.tau_closure(lset, observe)?,
                    self.tau_closure(rset, observe)?,
                ) else {
                    return Ok(None);
                };
                let mut t = trace.clone();
                t.push(a);
                queue.push_back((lc, rc, t));
            }
        }
        Ok(None)
    }

    fn visible_successors(
        &self,
        set: &BTreeSet<Proc>,
        observe: Option<&BTreeSet<Name>>,
    ) -> Result<BTreeMap<Name, BTreeSet<Proc>>, CcsError> {
        let mut out: BTreeMap<Name, BTreeSet<Proc>> = BTreeMap::new();
        for s in set {
            for (l, t) in self.weak_moves(s, observe)? {
                if let Some(a) = l {
                    out.entry(a).or_default().insert(t);
                }
            }
        }
        Ok(out)
    }

    /// Whether no fraction can occur in `p` or in any constant it uses.
    pub fn fraction_free(&self, p: &Proc) -> Result<bool, CcsError> {
        fn go(c: &Ccs, p: &Proc, seen: &mut HashSet<Arc<str>>) -> Result<bool, CcsError> {
            Ok(match p {
                Proc::Nil => true,
                Proc::Frac(_, _) => false,
                Proc::Sum(ss) => {
                    for (_, q) in ss.iter() {
                        if !go(c, q, seen)? {
                            return Ok(false);
                        }
                    }
                    true
                }
                Proc::Par(ps) => {
                    for q in ps.iter() {
                        if !go(c, q, seen)? {
                            return Ok(false);
                        }
                    }
                    true
                }
                Proc::Const(n, args) => {
                    if !seen.insert(n.clone()) {
                        return Ok(true);
                    }
                    let body = c.lookup(n, args)?;
                    go(c, &body, seen)?
                }
            })
        }
        go(self, p, &mut HashSet::new())
    }

    /// Depth of fractional recursion of `p` alone: zero without creation
    /// transitions, else one more than the deepest denominator.
    pub fn fdrdepth(&self, p: &Proc) -> Result<usize, CcsError> {
        let mut best = None;
        for (l, _) in self.transitions(p)?.iter() {
            if let Label::Create(d) = l {
                let v = self.sfdrdepth(d)?;
                best = Some(best.map_or(v, |b: usize| b.max(v)));
            }
        }
        Ok(best.map_or(0, |b| b + 1))
    }

    /// Maximum [`Ccs::fdrdepth`] over `p` and all its successors.
    pub fn sfdrdepth(&self, p: &Proc) -> Result<usize, CcsError> {
        if self.fraction_free(p)? {
            return Ok(0);
        }
        if self.depth.get() >= MAX_MATCH_DEPTH {
            return Err(CcsError::DepthUnbounded);
        }
        self.depth.set(self.depth.get() + 1);
        let r = (|| {
            let lts = self
                .explore(&[self.normalize(p)?], None, false)
                .map_err(|_| CcsError::DepthUnbounded)?;
            let mut best = 0;
            for s in &lts.states {
                best = best.max(self.fdrdepth(s)?);
            }
            Ok(best)
        })();
        self.depth.set(self.depth.get() - 1);
        r
    }

    /// Length of the shortest run of internal steps from `p` to a state
    /// weakly bisimilar to `target`, searching at most `max_steps` steps.
    /// Undecided comparisons count as not bisimilar.
    pub fn tau_distance(
        &self,
        p: &Proc,
        target: &Proc,
        max_steps: usize,
        observe: Option<&BTreeSet<Name>>,
    ) -> Result<Option<(usize, Proc)>, CcsError> {
        let target = self.normalize(target)?;
        let mut frontier = vec![self.normalize(p)?];
        let mut seen: HashSet<Proc> = frontier.iter().cloned().collect();
        for k in 0..=max_steps {
            for s in &frontier {
                if *s == target {
                    return Ok(Some((k, s.clone())));
                }
            }
            for s in &frontier {
                if let Ok(r) = self.weak_obs_bisim(s, &target, observe) {
                    if r.bisimilar {
                        return Ok(Some((k, s.clone())));
                    }
                }
            }
            let mut next = Vec::new();
            for s in &frontier {
                for (l, t) in self.transitions(s)?.iter() {
                    if *l == Label::Tau && seen.insert(t.clone()) {
                        next.push(t.clone());
                    }
                }
            }
            frontier = next;
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Signature {
    visible: BTreeSet<Name>,
    tau: bool,
    create: bool,
}

impl Signature {
    fn add(&mut self, l: &Label) {
        match l {
            Label::Tau => self.tau = true,
            Label::Vis(n) => {
                self.visible.insert(n.clone());
            }
            Label::Create(_) => self.create = true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum LabelKey {
    Tau,
    Vis(Name),
    Create(usize),
}

#[derive(Debug, Default)]
struct Lts {
    states: Vec<Proc>,
    index: HashMap<Proc, usize>,
    edges: Vec<Vec<(Label, usize)>>,
}

fn tau_closure_ids(lts: &Lts, s: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::from([s]);
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for (l, v) in &lts.edges[u] {
            if *l == Label::Tau && out.insert(*v) {
                stack.push(*v);
            }
        }
    }
    out
}

/// Coarsest partition stable under the labelled edges.
fn partition(edges: &[Vec<(LabelKey, usize)>]) -> Vec<usize> {
    let n = edges.len();
    let mut block = vec![0usize; n];
    let mut count = 1;
    loop {
        let mut ids: HashMap<(usize, BTreeSet<(LabelKey, usize)>), usize> = HashMap::new();
        let mut next = vec![0usize; n];
        for s in 0..n {
            let sig: BTreeSet<(LabelKey, usize)> = edges[s]
                .iter()
                .map(|(l, t)| (l.clone(), block[*t]))
                .collect();
            let len = ids.len();
            next[s] = *ids.entry((block[s], sig)).or_insert(len);
        }
        let new_count = ids.len();
        block = next;
        if new_count == count {
            return block;
        }
        count = new_count;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(defs: &str) -> Ccs {
        Ccs::new(Env::parse(defs).unwrap())
    }

    #[test]
    fn parse_and_print_round_trip() {
        let c = engine("A := a.'b.A; B(x) := x.0;");
        for src in [
            "a.0 + 'b.0 | [c.0 / d.0]",
            "tau.(a.0 | b.0)",
            "A | B<q>",
            "0",
        ] {
            let p = c.parse(src).unwrap();
            assert_eq!(c.parse(&p.to_string()).unwrap(), p, "{src}");
        }
        assert!(c.parse("a.0 + A").is_err());
        assert!(c.parse("B").is_err());
    }

    #[test]
    fn indexed_sums_expand() {
        let c = engine("set O = {o1, o2}; R := sum o in O { Receipt[o].'Check[o] };");
        let body = &c.env.defs[&Arc::<str>::from("R")].body;
        assert_eq!(
            body.to_string(),
            "Receipt_o1.'Check_o1.0 + Receipt_o2.'Check_o2.0"
        );
    }

    #[test]
    fn nil_has_no_transitions() {
        let c = engine("");
        assert!(c.transitions(&Proc::Nil).unwrap().is_empty());
    }

    #[test]
    fn fraction_creates_its_numerator() {
        let c = engine("");
        let p = c.parse("[b.0 / a.0]").unwrap();
        let t = c.transitions(&p).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(
            t[0],
            (
                Label::Create(c.parse("a.0").unwrap()),
                c.parse("b.0").unwrap()
            )
        );
    }

    #[test]
    fn fraction_replaces_a_matching_component() {
        let c = engine("");
        let p = c.parse("a.0 | [b.0 / a.0]").unwrap();
        let taus: Vec<_> = c
            .transitions(&p)
            .unwrap()
            .iter()
            .filter(|(l, _)| *l == Label::Tau)
            .cloned()
            .collect();
        assert_eq!(taus, vec![(Label::Tau, c.parse("b.0").unwrap())]);
    }

    #[test]
    fn multi_component_deletion() {
        let c = engine("X := x.0; Y := y.0; Z := z.0;");
        let comps = c.normalize(&c.parse("X | Y | Z").unwrap()).unwrap();
        let d = c.parse("X | Z").unwrap();
        let sets = c.deletion_targets(comps.components(), None, &d).unwrap();
        assert_eq!(sets.len(), 1);
        let left: Vec<String> = comps
            .components()
            .iter()
            .enumerate()
            .filter(|(i, _)| !sets[0].contains(i))
            .map(|(_, p)| p.to_string())
            .collect();
        assert_eq!(left, vec!["Y"]);
    }

    #[test]
    fn positivity() {
        let c = engine("N := 0; P := a.0;");
        for (src, want) in [
            ("0", false),
            ("a.0", true),
            ("0 | 0", false),
            ("[0 / a.0]", true),
            ("[a.0 / 0]", false),
            ("N", false),
            ("P", true),
        ] {
            assert_eq!(
                c.is_positive(&c.parse(src).unwrap()).unwrap(),
                want,
                "{src}"
            );
        }
    }

    #[test]
    fn depths() {
        let c = engine("A := a.A;");
        assert_eq!(c.sfdrdepth(&c.parse("a.b.0 | A").unwrap()).unwrap(), 0);
        assert_eq!(c.sfdrdepth(&c.parse("[b.0 / a.0]").unwrap()).unwrap(), 1);
        // The numerator is created first and carries its own depth.
        assert_eq!(
            c.sfdrdepth(&c.parse("[[c.0 / b.0] / a.0]").unwrap())
                .unwrap(),
            1
        );
        assert_eq!(
            c.sfdrdepth(&c.parse("[a.0 / [c.0 / b.0]]").unwrap())
                .unwrap(),
            2
        );
    }

    #[test]
    fn strong_matching() {
        let c = engine("C := a.C;");
        let s = |x: &str, y: &str| {
            c.strong_of_bisim(&c.parse(x).unwrap(), &c.parse(y).unwrap())
                .unwrap()
        };
        assert!(s("a.0", "a.0 + a.0"));
        assert!(s("0 | C", "C"));
        assert!(s("C", "a.a.C"));
        assert!(!s("a.0", "a.a.0"));
        assert!(!s("a.(b.0 + c.0)", "a.b.0 + a.c.0"));
        assert!(s("[x.0 / a.0]", "[x.0 / a.0 + a.0]"));
        assert!(!s("[x.0 / a.0]", "[x.0 / b.0]"));
    }

    #[test]
    fn weak_absorbs_internal_steps() {
        let c = engine("");
        let w = |x: &str, y: &str| {
            c.weak_obs_bisim(&c.parse(x).unwrap(), &c.parse(y).unwrap(), None)
                .unwrap()
        };
        assert!(w("tau.a.0", "a.0").bisimilar);
        assert!(w("a.tau.b.0", "a.b.0").bisimilar);
        let r = w("a.0 + b.0", "a.0");
        assert!(!r.bisimilar);
        assert_eq!(r.witness.unwrap().label, Name::input("b"));
        // Same traces, different branching.
        let r = w("a.(b.0 + c.0)", "a.b.0 + a.c.0");
        assert!(!r.bisimilar);
        assert!(r.witness.is_none());
    }

    #[test]
    fn observe_filter_blocks_other_labels() {
        let c = engine("");
        let obs = BTreeSet::from([Name::input("a")]);
        let r = c
            .weak_obs_bisim(
                &c.parse("a.0 + b.0").unwrap(),
                &c.parse("a.0").unwrap(),
                Some(&obs),
            )
            .unwrap();
        assert!(r.bisimilar);
    }

    #[test]
    fn unguarded_recursion_is_reported() {
        let c = engine("A := B | a.0; B := A;");
        assert!(matches!(
            c.normalize(&c.parse("A").unwrap()),
            Err(CcsError::UnguardedRecursion(_))
        ));
    }

    #[test]
    fn bound_is_reported() {
        // Each step leaves a component behind, so the state space is infinite.
        let c = Ccs::with_bound(Env::parse("G := a.(b.0 | G);").unwrap(), 50);
        let r = c.strong_of_bisim(&c.parse("G").unwrap(), &c.parse("a.(b.0 | G)").unwrap());
        // Identical after one unfolding of the constant's summation: the
        // checker either proves it or reports the bound, never a wrong no.
        assert!(matches!(
            r,
            Ok(true) | Err(CcsError::UnfoldBoundExceeded { .. })
        ));
    }
}
