//! Labelled transition systems of CPOGs.
//!
//! A state is a pair of a history (the set of executed actions) and an
//! assignment of the variables. An action `w` can fire when it is not in
//! the history, its vertex condition holds and its preset (the vertices with
//! an active arc into `w`) has already fired. Firing `w` may change only the
//! variables it controls: a decision variable may take either value, a
//! completion flag becomes 1.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::boolean::{Assignment, BoolExpr, VarName};
use crate::cpog::{ActionName, CanonicalForm, ControlKind, ControlMap};

/// Default bound on the number of vertices accepted by [`reachable`].
pub const DEFAULT_VERTEX_BOUND: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtsError {
    #[error("unknown action `{0}`")]
    UnknownAction(ActionName),
    #[error("{vertices} vertices exceed the bound of {bound}")]
    StateBoundExceeded { vertices: usize, bound: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CpogState {
    pub history: BTreeSet<ActionName>,
    pub psi: Assignment,
}

impl fmt::Display for CpogState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h: Vec<&str> = self.history.iter().map(|a| a.as_str()).collect();
        write!(f, "({{{}}}, {})", h.join(","), self.psi)
    }
}

pub type Label = BTreeSet<ActionName>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpogLts {
    pub initial: CpogState,
    pub states: BTreeSet<CpogState>,
    pub transitions: BTreeSet<(CpogState, Label, CpogState)>,
    /// States with a vertex whose condition holds but which can never fire.
    pub deadlocks: BTreeSet<CpogState>,
}

fn cond_holds(f: &BoolExpr, psi: &Assignment) -> bool {
    // Conditions only mention variables of the universe, so evaluation
    // cannot fail for states produced by this module.
    f.eval(psi).unwrap_or(false)
}

/// Variable universe of a CPOG: the variables of its conditions plus the
/// controlled variables.
pub fn universe(cf: &CanonicalForm, ctrl: &ControlMap) -> Vec<VarName> {
    let mut vars = cf.variables();
    vars.extend(ctrl.variables().cloned());
    vars.into_iter().collect()
}

/// The initial state: empty history, all variables 0.
pub fn initial_state(cf: &CanonicalForm, ctrl: &ControlMap) -> CpogState {
    CpogState {
        history: BTreeSet::new(),
        psi: Assignment::zero(&universe(cf, ctrl)),
    }
}

/// Vertices with an active arc into `v`.
pub fn preset(
    v: &ActionName,
    psi: &Assignment,
    cf: &CanonicalForm,
) -> Result<BTreeSet<ActionName>, LtsError> {
    if !cf.vertices.contains_key(v) {
        return Err(LtsError::UnknownAction(v.clone()));
    }
    Ok(cf
        .vertices
        .iter()
        .filter(|(u, fu)| cond_holds(fu, psi) && cond_holds(&cf.arc(u, v), psi))
        .map(|(u, _)| u.clone())
        .collect())
}

fn enabled(s: &CpogState, w: &ActionName, cf: &CanonicalForm) -> bool {
    !s.history.contains(w)
        && cf.vertices.get(w).is_some_and(|f| cond_holds(f, &s.psi))
        && preset(w, &s.psi, cf)
            .map(|p| p.is_subset(&s.history))
            .unwrap_or(false)
}

/// Every assignment reachable from `psi` by the actions in `fired` setting
/// the variables they control.
fn outcomes(psi: &Assignment, fired: &BTreeSet<ActionName>, ctrl: &ControlMap) -> Vec<Assignment> {
    let mut out = vec![psi.clone()];
    for w in fired {
        for (v, kind) in ctrl.controlled_by(w) {
            let values: &[bool] = match kind {
                ControlKind::Choice => &[false, true],
                ControlKind::Flag => &[true],
            };
            out = out
                .into_iter()
                .flat_map(|a| {
                    values.iter().map(move |&b| {
                        let mut a = a.clone();
                        a.set(v.clone(), b);
                        a
                    })
                })
                .collect();
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Single-action steps from `s`.
pub fn step_single(
    s: &CpogState,
    cf: &CanonicalForm,
    ctrl: &ControlMap,
) -> BTreeSet<(ActionName, CpogState)> {
    let mut out = BTreeSet::new();
    for w in cf.vertices.keys() {
        if enabled(s, w, cf) {
            let fired: BTreeSet<ActionName> = [w.clone()].into();
            let mut history = s.history.clone();
            history.insert(w.clone());
            for psi in outcomes(&s.psi, &fired, ctrl) {
                out.insert((
                    w.clone(),
                    CpogState {
                        history: history.clone(),
                        psi,
                    },
                ));
            }
        }
    }
    out
}

/// Set step: all actions of `w` fire together. Returns every target state
/// (one per outcome of the controlled variables), or nothing when some
/// member of `w` is not enabled at `s`.
pub fn step_set(
    s: &CpogState,
    cf: &CanonicalForm,
    ctrl: &ControlMap,
    w: &Label,
) -> BTreeSet<CpogState> {
    if w.is_empty() || !w.iter().all(|a| enabled(s, a, cf)) {
        return BTreeSet::new();
    }
    let mut history = s.history.clone();
    history.extend(w.iter().cloned());
    outcomes(&s.psi, w, ctrl)
        .into_iter()
        .map(|psi| CpogState {
            history: history.clone(),
            psi,
        })
        .collect()
}

/// Explores every state reachable from the initial state. With
/// `true_concurrency` every nonempty set of simultaneously enabled actions
/// is a label; otherwise only singletons are.
pub fn reachable(
    cf: &CanonicalForm,
    ctrl: &ControlMap,
    true_concurrency: bool,
) -> Result<CpogLts, LtsError> {
    reachable_bounded(cf, ctrl, true_concurrency, DEFAULT_VERTEX_BOUND)
}

pub fn reachable_bounded(
    cf: &CanonicalForm,
    ctrl: &ControlMap,
    true_concurrency: bool,
    bound: usize,
) -> Result<CpogLts, LtsError> {
    if cf.vertices.len() > bound {
        return Err(LtsError::StateBoundExceeded {
            vertices: cf.vertices.len(),
            bound,
        });
    }
    let initial = initial_state(cf, ctrl);
    let mut states = BTreeSet::from([initial.clone()]);
    let mut transitions = BTreeSet::new();
    let mut deadlocks = BTreeSet::new();
    let mut queue = VecDeque::from([initial.clone()]);
    while let Some(s) = queue.pop_front() {
        let en: Vec<ActionName> = cf
            .vertices
            .keys()
            .filter(|w| enabled(&s, w, cf))
            .cloned()
            .collect();
        let mut labels: Vec<Label> = Vec::new();
        if true_concurrency {
            for mask in 1u64..(1u64 << en.len()) {
                labels.push(
                    (0..en.len())
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| en[i].clone())
                        .collect(),
                );
            }
        } else {
            labels.extend(en.iter().map(|w| BTreeSet::from([w.clone()])));
        }
        if labels.is_empty() {
            let pending = cf
                .vertices
                .iter()
                .any(|(v, f)| !s.history.contains(v) && cond_holds(f, &s.psi));
            if pending {
                deadlocks.insert(s.clone());
            }
        }
        for label in labels {
            for t in step_set(&s, cf, ctrl, &label) {
                if states.insert(t.clone()) {
                    queue.push_back(t.clone());
                }
                transitions.insert((s.clone(), label.clone(), t));
            }
        }
    }
    Ok(CpogLts {
        initial,
        states,
        transitions,
        deadlocks,
    })
}

fn fmt_label(l: &Label) -> String {
    let v: Vec<&str> = l.iter().map(|a| a.as_str()).collect();
    format!("{{{}}}", v.join(","))
}

impl CpogLts {
    /// Successors of a state.
    pub fn successors<'a>(
        &'a self,
        s: &'a CpogState,
    ) -> impl Iterator<Item = (&'a Label, &'a CpogState)> + 'a {
        self.transitions
            .iter()
            .filter(move |(a, _, _)| a == s)
            .map(|(_, l, t)| (l, t))
    }

    /// One transition per line, sorted.
    pub fn to_text(&self) -> String {
        let mut out = format!("initial {}\n", self.initial);
        for (s, l, t) in &self.transitions {
            out.push_str(&format!("{s} --{}--> {t}\n", fmt_label(l)));
        }
        for d in &self.deadlocks {
            out.push_str(&format!("deadlock {d}\n"));
        }
        out
    }

    /// Graphviz digraph.
    pub fn to_dot(&self) -> String {
        let ids: BTreeMap<&CpogState, usize> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let mut out = String::from("digraph lts {\n  rankdir=TB;\n");
        for (s, i) in &ids {
            let shape = if self.deadlocks.contains(s) {
                "box"
            } else {
                "ellipse"
            };
            out.push_str(&format!("  s{i} [label=\"{s}\", shape={shape}];\n"));
        }
        for (s, l, t) in &self.transitions {
            out.push_str(&format!(
                "  s{} -> s{} [label=\"{}\"];\n",
                ids[s],
                ids[t],
                fmt_label(l)
            ));
        }
        out.push_str("}\n");
        out
    }
}
