//! Conditional partial order graphs (CPOGs).
//!
//! A [`CpogExpr`] is built from the empty graph, single actions, parallel
//! composition `p + q`, sequential composition `p -> q` and conditioning
//! `[x] p`. [`canonicalize`] turns any expression into its
//! [`CanonicalForm`]: one condition per vertex and one per ordered pair of
//! vertices. Two expressions are equivalent when their vertex conditions
//! and their transitively closed arc conditions coincide.
//!
//! The text syntax, from loosest to tightest binding:
//!
//! ```text
//! p + q            parallel composition
//! a -yes-> p       a -> [a_ok] p   (also -no->, with the negated variable)
//! p -> q           sequential composition
//! [cond] p         conditioning
//! eps | a | (p)    atoms
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::boolean::{mk, parse_bool_at, BoolExpr, VarName};
use crate::lexer::{tokenize, Cursor, ParseError, Tok};

/// Name of an action (a CPOG vertex).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionName(Arc<str>);

impl ActionName {
    pub fn new(name: impl AsRef<str>) -> Self {
        let name = name.as_ref();
        assert!(!name.is_empty(), "action names must be nonempty");
        ActionName(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ActionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActionName {
    fn from(s: &str) -> Self {
        ActionName::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CpogError {
    #[error("no variable is controlled by action `{0}`")]
    NoControlledVariable(ActionName),
    #[error("variable `{0}` already has a controlling action")]
    DuplicateControl(VarName),
    #[error("unknown action `{0}`")]
    UnknownAction(ActionName),
}

/// A CPOG expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CpogExpr {
    Empty,
    Action(ActionName),
    Parallel(Box<CpogExpr>, Box<CpogExpr>),
    Sequence(Box<CpogExpr>, Box<CpogExpr>),
    Cond(BoolExpr, Box<CpogExpr>),
}

impl CpogExpr {
    pub fn action(name: impl AsRef<str>) -> Self {
        CpogExpr::Action(ActionName::new(name))
    }

    pub fn par(p: CpogExpr, q: CpogExpr) -> Self {
        CpogExpr::Parallel(Box::new(p), Box::new(q))
    }

    pub fn seq(p: CpogExpr, q: CpogExpr) -> Self {
        CpogExpr::Sequence(Box::new(p), Box::new(q))
    }

    pub fn cond(x: BoolExpr, p: CpogExpr) -> Self {
        CpogExpr::Cond(x, Box::new(p))
    }

    /// Parallel composition of a list (the empty graph when the list is empty).
    pub fn par_all(items: impl IntoIterator<Item = CpogExpr>) -> Self {
        items
            .into_iter()
            .reduce(CpogExpr::par)
            .unwrap_or(CpogExpr::Empty)
    }

    /// Sequential composition of a list (the empty graph when the list is empty).
    pub fn chain(items: impl IntoIterator<Item = CpogExpr>) -> Self {
        items
            .into_iter()
            .reduce(CpogExpr::seq)
            .unwrap_or(CpogExpr::Empty)
    }

    /// Every action mentioned in the expression, including those whose
    /// condition turns out to be false.
    pub fn actions(&self) -> BTreeSet<ActionName> {
        let mut out = BTreeSet::new();
        self.collect_actions(&mut out);
        out
    }

    fn collect_actions(&self, out: &mut BTreeSet<ActionName>) {
        match self {
            CpogExpr::Empty => {}
            CpogExpr::Action(a) => {
                out.insert(a.clone());
            }
            CpogExpr::Parallel(p, q) | CpogExpr::Sequence(p, q) => {
                p.collect_actions(out);
                q.collect_actions(out);
            }
            CpogExpr::Cond(_, p) => p.collect_actions(out),
        }
    }

    /// Every variable occurring in a guard.
    pub fn variables(&self) -> BTreeSet<VarName> {
        match self {
            CpogExpr::Empty | CpogExpr::Action(_) => BTreeSet::new(),
            CpogExpr::Parallel(p, q) | CpogExpr::Sequence(p, q) => {
                let mut s = p.variables();
                s.extend(q.variables());
                s
            }
            CpogExpr::Cond(x, p) => {
                let mut s = p.variables();
                s.extend(x.support());
                s
            }
        }
    }
}

impl fmt::Display for CpogExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Precedence levels: 0 for `+`, 1 for `->`, 2 for `[x]` and atoms.
        fn go(e: &CpogExpr, level: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                CpogExpr::Empty => f.write_str("eps"),
                CpogExpr::Action(a) => write!(f, "{a}"),
                CpogExpr::Parallel(p, q) => {
                    if level > 0 {
                        f.write_str("(")?;
                    }
                    go(p, 0, f)?;
                    f.write_str(" + ")?;
                    go(q, 0, f)?;
                    if level > 0 {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
                CpogExpr::Sequence(p, q) => {
                    if level > 1 {
                        f.write_str("(")?;
                    }
                    go(p, 1, f)?;
                    f.write_str(" -> ")?;
                    go(q, 2, f)?;
                    if level > 1 {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
                CpogExpr::Cond(x, p) => {
                    write!(f, "[{x}] ")?;
                    go(p, 2, f)
                }
            }
        }
        go(self, 0, f)
    }
}

/// How the controlling action of a variable determines its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControlKind {
    /// The variable records the outcome of a decision: executing the
    /// controlling action may set it to either value.
    Choice,
    /// The variable is a completion flag: executing the controlling action
    /// always sets it to 1.
    Flag,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Control {
    pub action: ActionName,
    pub kind: ControlKind,
}

/// Maps each controlled variable to the unique vertex that sets it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControlMap {
    map: BTreeMap<VarName, Control>,
}

impl ControlMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        var: VarName,
        action: ActionName,
        kind: ControlKind,
    ) -> Result<(), CpogError> {
        if self.map.contains_key(&var) {
            return Err(CpogError::DuplicateControl(var));
        }
        self.map.insert(var, Control { action, kind });
        Ok(())
    }

    pub fn get(&self, var: &VarName) -> Option<&Control> {
        self.map.get(var)
    }

    /// Variables controlled by `action`, in variable order.
    pub fn controlled_by<'a>(
        &'a self,
        action: &'a ActionName,
    ) -> impl Iterator<Item = (&'a VarName, ControlKind)> + 'a {
        self.map
            .iter()
            .filter(move |(_, c)| &c.action == action)
            .map(|(v, c)| (v, c.kind))
    }

    /// The decision variable of a branching action, used by `-yes->`/`-no->`.
    pub fn decision_var(&self, action: &ActionName) -> Option<&VarName> {
        self.map
            .iter()
            .find(|(_, c)| &c.action == action && c.kind == ControlKind::Choice)
            .map(|(v, _)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, &Control)> {
        self.map.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = &VarName> {
        self.map.keys()
    }
}

/// `a -> [x] p` where `x` is the decision variable of `a`.
pub fn yes_arrow(a: &ActionName, p: CpogExpr, ctrl: &ControlMap) -> Result<CpogExpr, CpogError> {
    let x = ctrl
        .decision_var(a)
        .ok_or_else(|| CpogError::NoControlledVariable(a.clone()))?;
    Ok(CpogExpr::seq(
        CpogExpr::Action(a.clone()),
        CpogExpr::cond(BoolExpr::var(x.clone()), p),
    ))
}

/// `a -> [!x] p` where `x` is the decision variable of `a`.
pub fn no_arrow(a: &ActionName, p: CpogExpr, ctrl: &ControlMap) -> Result<CpogExpr, CpogError> {
    let x = ctrl
        .decision_var(a)
        .ok_or_else(|| CpogError::NoControlledVariable(a.clone()))?;
    Ok(CpogExpr::seq(
        CpogExpr::Action(a.clone()),
        CpogExpr::cond(BoolExpr::var(x.clone()).not(), p),
    ))
}

/// Sequential composition of expressions that may share vertices. Shared
/// vertices acquire self-loop arcs, which the semantics reports as deadlocks.
pub fn compose_shared(p: CpogExpr, q: CpogExpr) -> CpogExpr {
    CpogExpr::seq(p, q)
}

/// Vertex and arc conditions of a CPOG.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CanonicalForm {
    pub vertices: BTreeMap<ActionName, BoolExpr>,
    pub arcs: BTreeMap<(ActionName, ActionName), BoolExpr>,
}

fn or_into<K: Ord>(map: &mut BTreeMap<K, BoolExpr>, key: K, cond: BoolExpr) {
    if cond.is_false() {
        return;
    }
    match map.get_mut(&key) {
        Some(c) => *c = c.or(&cond),
        None => {
            map.insert(key, cond);
        }
    }
}

/// Computes the canonical form by structural recursion.
pub fn canonicalize(e: &CpogExpr) -> CanonicalForm {
    match e {
        CpogExpr::Empty => CanonicalForm::default(),
        CpogExpr::Action(a) => {
            let mut cf = CanonicalForm::default();
            cf.vertices.insert(a.clone(), BoolExpr::tt());
            cf
        }
        CpogExpr::Parallel(p, q) => {
            let (mut cp, cq) = (canonicalize(p), canonicalize(q));
            for (a, f) in cq.vertices {
                or_into(&mut cp.vertices, a, f);
            }
            for (ab, f) in cq.arcs {
                or_into(&mut cp.arcs, ab, f);
            }
            cp
        }
        CpogExpr::Sequence(p, q) => {
            let (cp, cq) = (canonicalize(p), canonicalize(q));
            let mut out = cp.clone();
            for (a, f) in &cq.vertices {
                or_into(&mut out.vertices, a.clone(), f.clone());
            }
            for (ab, f) in &cq.arcs {
                or_into(&mut out.arcs, ab.clone(), f.clone());
            }
            for (a, fa) in &cp.vertices {
                for (b, fb) in &cq.vertices {
                    or_into(&mut out.arcs, (a.clone(), b.clone()), fa.and(fb));
                }
            }
            out
        }
        CpogExpr::Cond(x, p) => {
            let cp = canonicalize(p);
            let mut out = CanonicalForm::default();
            for (a, f) in cp.vertices {
                or_into(&mut out.vertices, a, f.and(x));
            }
            for (ab, f) in cp.arcs {
                or_into(&mut out.arcs, ab, f.and(x));
            }
            out
        }
    }
}

impl CanonicalForm {
    /// Vertex condition, 0 for absent vertices.
    pub fn vertex(&self, a: &ActionName) -> BoolExpr {
        self.vertices.get(a).cloned().unwrap_or_else(BoolExpr::ff)
    }

    /// Arc condition, 0 for absent arcs.
    pub fn arc(&self, a: &ActionName, b: &ActionName) -> BoolExpr {
        self.arcs
            .get(&(a.clone(), b.clone()))
            .cloned()
            .unwrap_or_else(BoolExpr::ff)
    }

    /// Variables occurring in any condition.
    pub fn variables(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        for f in self.vertices.values().chain(self.arcs.values()) {
            out.extend(f.support());
        }
        out
    }

    /// Checks the structural invariants of a canonical form: no vertex or
    /// arc condition is 0 and every arc implies both endpoint conditions.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (a, f) in &self.vertices {
            if f.is_false() {
                return Err(format!("vertex {a} has condition 0"));
            }
        }
        for ((a, b), f) in &self.arcs {
            if f.is_false() {
                return Err(format!("arc ({a},{b}) has condition 0"));
            }
            if !f
                .implies(&self.vertex(a).and(&self.vertex(b)))
                .is_tautology()
            {
                return Err(format!("arc ({a},{b}) is not implied by its endpoints"));
            }
        }
        Ok(())
    }

    fn index(&self) -> Vec<ActionName> {
        self.vertices.keys().cloned().collect()
    }

    fn matrix(&self) -> (Vec<ActionName>, Vec<Vec<BoolExpr>>) {
        let vs = self.index();
        let m = vs
            .iter()
            .map(|a| vs.iter().map(|b| self.arc(a, b)).collect())
            .collect();
        (vs, m)
    }

    fn rebuild_from_matrix(&self, vs: &[ActionName], m: Vec<Vec<BoolExpr>>) -> CanonicalForm {
        let mut arcs = BTreeMap::new();
        for (i, row) in m.into_iter().enumerate() {
            for (j, f) in row.into_iter().enumerate() {
                if !f.is_false() {
                    arcs.insert((vs[i].clone(), vs[j].clone()), f);
                }
            }
        }
        CanonicalForm {
            vertices: self.vertices.clone(),
            arcs,
        }
    }

    /// Adds every arc implied by a path, under the conjunction of the path's
    /// conditions.
    pub fn transitive_close(&self) -> CanonicalForm {
        let (vs, mut m) = self.matrix();
        let n = vs.len();
        for k in 0..n {
            for i in 0..n {
                if m[i][k].is_false() {
                    continue;
                }
                for j in 0..n {
                    if m[k][j].is_false() {
                        continue;
                    }
                    let via = m[i][k].and(&m[k][j]);
                    m[i][j] = m[i][j].or(&via);
                }
            }
        }
        self.rebuild_from_matrix(&vs, m)
    }

    /// Removes the part of every arc condition under which the arc is implied
    /// by a path through a third vertex. Under assignments that make the
    /// active graph cyclic no unique reduction exists; there the closed arcs
    /// are kept, so that the result is always equivalent to the input.
    pub fn transitive_reduce(&self) -> CanonicalForm {
        let closed = self.transitive_close();
        let (vs, c) = closed.matrix();
        let n = vs.len();
        let cyclic = BoolExpr::any((0..n).map(|i| &c[i][i]));
        let acyclic = cyclic.not();
        let mut r = vec![vec![BoolExpr::ff(); n]; n];
        for a in 0..n {
            for b in 0..n {
                if c[a][b].is_false() {
                    continue;
                }
                let implied = BoolExpr::any(
                    (0..n)
                        .filter(|&k| k != a && k != b)
                        .map(|k| c[a][k].and(&c[k][b]))
                        .collect::<Vec<_>>()
                        .iter(),
                );
                let removable = acyclic.and(&implied);
                r[a][b] = c[a][b].and(&removable.not());
            }
        }
        closed.rebuild_from_matrix(&vs, r)
    }

    /// Deterministic text listing: vertices, then arcs, sorted by name.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        out.push_str("vertices:\n");
        for (a, f) in &self.vertices {
            out.push_str(&format!("  [{f}] {a}\n"));
        }
        out.push_str("arcs:\n");
        for ((a, b), f) in &self.arcs {
            out.push_str(&format!("  [{f}] {a} -> {b}\n"));
        }
        out
    }
}

/// A condition on which two canonical forms disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Difference {
    Vertex {
        action: ActionName,
        left: BoolExpr,
        right: BoolExpr,
    },
    Arc {
        from: ActionName,
        to: ActionName,
        left: BoolExpr,
        right: BoolExpr,
    },
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Difference::Vertex {
                action,
                left,
                right,
            } => write!(f, "f_{action}: {left} vs {right}"),
            Difference::Arc {
                from,
                to,
                left,
                right,
            } => write!(f, "f_({from},{to}): {left} vs {right}"),
        }
    }
}

/// First vertex or closed-arc condition on which the two forms differ.
/// Actions that occur in only one of the forms are reported first.
pub fn first_difference(p: &CanonicalForm, q: &CanonicalForm) -> Option<Difference> {
    let names: BTreeSet<&ActionName> = p.vertices.keys().chain(q.vertices.keys()).collect();
    for a in &names {
        let (l, r) = (p.vertex(a), q.vertex(a));
        if l.is_false() != r.is_false() {
            return Some(Difference::Vertex {
                action: (*a).clone(),
                left: l,
                right: r,
            });
        }
    }
    for a in &names {
        let (l, r) = (p.vertex(a), q.vertex(a));
        if l != r {
            return Some(Difference::Vertex {
                action: (*a).clone(),
                left: l,
                right: r,
            });
        }
    }
    let (pc, qc) = (p.transitive_close(), q.transitive_close());
    let pairs: BTreeSet<&(ActionName, ActionName)> = pc.arcs.keys().chain(qc.arcs.keys()).collect();
    for (a, b) in pairs {
        let (l, r) = (pc.arc(a, b), qc.arc(a, b));
        if l != r {
            return Some(Difference::Arc {
                from: a.clone(),
                to: b.clone(),
                left: l,
                right: r,
            });
        }
    }
    None
}

/// Equivalence of two expressions: equal vertex conditions and equal
/// transitively closed arc conditions.
pub fn equivalent(p: &CpogExpr, q: &CpogExpr) -> bool {
    first_difference(&canonicalize(p), &canonicalize(q)).is_none()
}

/// Named expressions and the control map visible while parsing.
#[derive(Debug, Clone, Default)]
pub struct CpogScope {
    pub defs: BTreeMap<String, CpogExpr>,
    pub control: ControlMap,
    /// When set, `a -yes-> p` on an action without a decision variable
    /// registers the variable `a_ok` on the fly.
    pub auto_control: bool,
}

/// Parses a standalone expression, registering decision variables `a_ok`
/// for branching actions as needed.
pub fn parse_cpog(src: &str) -> Result<(CpogExpr, ControlMap), ParseError> {
    let toks = tokenize(src)?;
    let mut cur = Cursor::new(&toks);
    let mut scope = CpogScope {
        auto_control: true,
        ..CpogScope::default()
    };
    let e = parse_cpog_at(&mut cur, &mut scope)?;
    cur.expect_end()?;
    Ok((e, scope.control))
}

/// Parses an expression from a token cursor.
pub fn parse_cpog_at(cur: &mut Cursor<'_>, scope: &mut CpogScope) -> Result<CpogExpr, ParseError> {
    let mut lhs = parse_branch(cur, scope)?;
    while cur.eat_punct("+") {
        lhs = CpogExpr::par(lhs, parse_branch(cur, scope)?);
    }
    Ok(lhs)
}

fn parse_branch(cur: &mut Cursor<'_>, scope: &mut CpogScope) -> Result<CpogExpr, ParseError> {
    let start = cur.position();
    let lhs = parse_seq(cur, scope)?;
    let positive = if cur.is_punct("-yes->") {
        true
    } else if cur.is_punct("-no->") {
        false
    } else {
        return Ok(lhs);
    };
    // `a -yes-> p` needs a single action on the left; `x -> a -yes-> p`
    // reads as `x -> (a -yes-> p)`, so split off the last action.
    let (prefix, a) = match split_last_action(lhs) {
        Some(parts) => parts,
        None => {
            cur.reset(start);
            return Err(cur.error("the left side of -yes->/-no-> must end in an action"));
        }
    };
    cur.next();
    let rhs = parse_branch(cur, scope)?;
    if scope.control.decision_var(&a).is_none() {
        if scope.auto_control {
            let var = VarName::new(format!("{a}_ok"));
            scope
                .control
                .insert(var, a.clone(), ControlKind::Choice)
                .map_err(|e| cur.error(e.to_string()))?;
        } else {
            return Err(cur.error(format!("no decision variable is controlled by `{a}`")));
        }
    }
    let arm = if positive {
        yes_arrow(&a, rhs, &scope.control)
    } else {
        no_arrow(&a, rhs, &scope.control)
    };
    let arm = arm.map_err(|e| cur.error(e.to_string()))?;
    Ok(match prefix {
        Some(p) => CpogExpr::seq(p, arm),
        None => arm,
    })
}

fn split_last_action(e: CpogExpr) -> Option<(Option<CpogExpr>, ActionName)> {
    match e {
        CpogExpr::Action(a) => Some((None, a)),
        CpogExpr::Sequence(p, q) => match *q {
            CpogExpr::Action(a) => Some((Some(*p), a)),
            _ => None,
        },
        _ => None,
    }
}

fn parse_seq(cur: &mut Cursor<'_>, scope: &mut CpogScope) -> Result<CpogExpr, ParseError> {
    let mut lhs = parse_unary(cur, scope)?;
    while cur.eat_punct("->") {
        lhs = CpogExpr::seq(lhs, parse_unary(cur, scope)?);
    }
    Ok(lhs)
}

fn parse_unary(cur: &mut Cursor<'_>, scope: &mut CpogScope) -> Result<CpogExpr, ParseError> {
    if cur.eat_punct("[") {
        let x = parse_bool_at(cur)?;
        cur.expect_punct("]")?;
        let p = parse_unary(cur, scope)?;
        return Ok(CpogExpr::cond(mk(&x), p));
    }
    match cur.peek() {
        Some(Tok::Ident(name)) if name == "eps" => {
            cur.next();
            Ok(CpogExpr::Empty)
        }
        Some(Tok::Ident(name)) => {
            cur.next();
            Ok(scope
                .defs
                .get(name)
                .cloned()
                .unwrap_or_else(|| CpogExpr::action(name)))
        }
        Some(Tok::Punct("(")) => {
            cur.next();
            let e = parse_cpog_at(cur, scope)?;
            cur.expect_punct(")")?;
            Ok(e)
        }
        _ => Err(cur.unexpected("a CPOG expression")),
    }
}
