//! Workflow element trees, their traces, and a stepping interpreter with
//! externally controlled choices and guarded reconfiguration.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cpog::ActionName;
use crate::lexer::{tokenize, Cursor, ParseError};

/// Maximum number of traces materialized by the reconfiguration check.
pub const DEFAULT_TRACE_BOUND: usize = 10_000;

/// The actions whose outcome is decided externally.
pub const CHOICE_ACTIONS: [&str; 3] = ["InventoryCheck", "CreditCheck", "SupplierCheck"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Event {
    Action(ActionName),
    Terminate,
}

impl Event {
    pub fn action(name: &str) -> Self {
        Event::Action(ActionName::new(name))
    }

    pub fn as_action(&self) -> Option<&ActionName> {
        match self {
            Event::Action(a) => Some(a),
            Event::Terminate => None,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Action(a) => write!(f, "<{a}>"),
            Event::Terminate => f.write_str("<TERMINATE>"),
        }
    }
}

pub type Trace = Vec<Event>;

/// A workflow element. `End` is the termination leaf.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Workflow {
    End,
    Simple(ActionName, Box<Workflow>),
    Branch(ActionName, Box<Workflow>, Box<Workflow>),
    Par(ActionName, ActionName, Box<Workflow>),
}

impl Workflow {
    pub fn simple(a: &str, w: Workflow) -> Self {
        Workflow::Simple(ActionName::new(a), Box::new(w))
    }

    pub fn branch(a: &str, t: Workflow, f: Workflow) -> Self {
        Workflow::Branch(ActionName::new(a), Box::new(t), Box::new(f))
    }

    pub fn par(b1: &str, b2: &str, w: Workflow) -> Self {
        Workflow::Par(ActionName::new(b1), ActionName::new(b2), Box::new(w))
    }

    pub fn is_end(&self) -> bool {
        matches!(self, Workflow::End)
    }

    /// The first action(s) of a non-terminal workflow.
    pub fn first(&self) -> Result<BTreeSet<ActionName>, WfError> {
        match self {
            Workflow::End => Err(WfError::EmptyInput),
            Workflow::Simple(a, _) | Workflow::Branch(a, _, _) => Ok(BTreeSet::from([a.clone()])),
            Workflow::Par(b1, b2, _) => Ok(BTreeSet::from([b1.clone(), b2.clone()])),
        }
    }

    /// Upper bound on the number of traces, saturating.
    pub fn trace_count(&self) -> usize {
        match self {
            Workflow::End => 1,
            Workflow::Simple(_, e) => e.trace_count(),
            Workflow::Branch(_, t, f) => t.trace_count().saturating_add(f.trace_count()),
            Workflow::Par(_, _, e) => e.trace_count().saturating_mul(2),
        }
    }

    /// Whether every trace is free of repeated events.
    pub fn is_well_formed(&self) -> bool {
        tracesof(self)
            .iter()
            .all(|t| t.iter().collect::<HashSet<_>>().len() == t.len())
    }
}

impl fmt::Display for Workflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Workflow::End => f.write_str("end"),
            Workflow::Simple(a, e) => write!(f, "simple({a}, {e})"),
            Workflow::Branch(a, t, e) => write!(f, "branch({a}, {t}, {e})"),
            Workflow::Par(b1, b2, e) => write!(f, "par({b1}, {b2}, {e})"),
        }
    }
}

/// All traces of an element, in a fixed order without duplicates: branch
/// arms true before false, parallel pairs in written order first.
pub fn tracesof(w: &Workflow) -> Vec<Trace> {
    match w {
        Workflow::End => vec![vec![Event::Terminate]],
        Workflow::Simple(a, e) => prepend(&[a], &tracesof(e)),
        Workflow::Branch(a, t, f) => {
            let mut out = prepend(&[a], &tracesof(t));
            out.extend(prepend(&[a], &tracesof(f)));
            dedup(out)
        }
        Workflow::Par(b1, b2, e) => {
            let rest = tracesof(e);
            let mut out = prepend(&[b1, b2], &rest);
            out.extend(prepend(&[b2, b1], &rest));
            dedup(out)
        }
    }
}

/// [`tracesof`] with a guard on the number of traces.
pub fn tracesof_bounded(w: &Workflow, bound: usize) -> Result<Vec<Trace>, WfError> {
    let count = w.trace_count();
    if count > bound {
        return Err(WfError::TraceBoundExceeded { count, bound });
    }
    Ok(tracesof(w))
}

fn prepend(head: &[&ActionName], tails: &[Trace]) -> Vec<Trace> {
    tails
        .iter()
        .map(|t| {
            head.iter()
                .map(|a| Event::Action((*a).clone()))
                .chain(t.iter().cloned())
                .collect()
        })
        .collect()
}

fn dedup(traces: Vec<Trace>) -> Vec<Trace> {
    let mut seen = HashSet::new();
    traces
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

pub fn prefixof(a: &[Event], b: &[Event]) -> bool {
    b.starts_with(a)
}

/// The last action of a nonempty trace.
pub fn last(tr: &[Event]) -> Result<&Event, WfError> {
    tr.last().ok_or(WfError::EmptyInput)
}

/// The outcome of branching actions must carry over to the new workflow.
pub fn branch_check(tr: &[Event], w: &Workflow, w2: &Workflow) -> bool {
    let Some(Event::Action(l)) = tr.last() else {
        return true;
    };
    // A terminal workflow has no first actions, so no clause applies.
    let (Ok(f), Ok(f2)) = (w.first(), w2.first()) else {
        return true;
    };
    let set = |names: &[&str]| names.iter().map(ActionName::new).collect::<BTreeSet<_>>();
    let last_is = |n: &str| l.as_str() == n;
    (!(last_is("InventoryCheck") && f == set(&["Reject"]))
        || set(&["SupplierCheck"]).is_subset(&f2))
        && (!(last_is("InventoryCheck") && f == set(&["CreditCheck"]))
            || set(&["CreditCheck"]).is_subset(&f2))
        && (!(last_is("CreditCheck") && f == set(&["Reject"])) || set(&["Reject"]).is_subset(&f2))
        && (!(last_is("CreditCheck") && f == set(&["Shipping"]))
            || f2.is_subset(&set(&["Billing", "Shipping"])))
}

/// Outcomes of the externally decided actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choices(BTreeMap<ActionName, bool>);

impl Choices {
    /// Builds a choice map; the domain must be exactly [`CHOICE_ACTIONS`].
    pub fn new(map: BTreeMap<ActionName, bool>) -> Result<Self, WfError> {
        let domain: BTreeSet<&str> = map.keys().map(|a| a.as_str()).collect();
        if domain != CHOICE_ACTIONS.into_iter().collect() {
            return Err(WfError::InvalidChoices(format!(
                "choices must decide exactly {}",
                CHOICE_ACTIONS.join(", ")
            )));
        }
        Ok(Choices(map))
    }

    fn from_flags(ic: bool, sc: bool, cc: bool) -> Self {
        Choices(BTreeMap::from([
            (ActionName::new("InventoryCheck"), ic),
            (ActionName::new("SupplierCheck"), sc),
            (ActionName::new("CreditCheck"), cc),
        ]))
    }

    pub fn no_problems() -> Self {
        Self::from_flags(true, true, true)
    }

    pub fn no_stock() -> Self {
        Self::from_flags(false, false, false)
    }

    pub fn no_credit() -> Self {
        Self::from_flags(true, false, false)
    }

    pub fn external_stock() -> Self {
        Self::from_flags(false, true, true)
    }

    pub fn external_stock_no_credit() -> Self {
        Self::from_flags(false, true, false)
    }

    /// The five named combinations.
    pub fn presets() -> [(&'static str, Choices); 5] {
        [
            ("NoStock", Self::no_stock()),
            ("ExternalStock", Self::external_stock()),
            ("ExternalStockNoCredit", Self::external_stock_no_credit()),
            ("NoCredit", Self::no_credit()),
            ("NoProblems", Self::no_problems()),
        ]
    }

    pub fn preset(name: &str) -> Option<Self> {
        Self::presets()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, c)| c)
    }

    /// Parses a preset name or `A=true,B=false,...`.
    pub fn parse(src: &str) -> Result<Self, WfError> {
        let src = src.trim();
        if let Some(c) = Self::preset(src) {
            return Ok(c);
        }
        let mut map = BTreeMap::new();
        for part in src.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                WfError::InvalidChoices(format!("expected A=bool, found `{part}`"))
            })?;
            let v = match v.trim() {
                "true" | "1" => true,
                "false" | "0" => false,
                other => return Err(WfError::InvalidChoices(format!("not a Boolean: `{other}`"))),
            };
            map.insert(ActionName::new(k.trim()), v);
        }
        Self::new(map)
    }

    pub fn get(&self, a: &ActionName) -> Result<bool, WfError> {
        self.0
            .get(a)
            .copied()
            .ok_or_else(|| WfError::UnknownChoice(a.clone()))
    }
}

/// Decides which action of a parallel pair goes first.
#[derive(Debug, Clone)]
pub enum OrderPicker {
    /// Always the first written action.
    First,
    /// Always the second written action.
    Second,
    /// Pseudo-random from a seed.
    Seeded(Box<ChaCha8Rng>),
    /// Follows a script, then falls back to `First`.
    Script(Vec<bool>),
}

impl OrderPicker {
    pub fn seeded(seed: u64) -> Self {
        OrderPicker::Seeded(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn from_seed(seed: Option<u64>) -> Self {
        seed.map_or(OrderPicker::First, Self::seeded)
    }

    /// True when the first written action is chosen.
    pub fn pick_first(&mut self) -> bool {
        match self {
            OrderPicker::First => true,
            OrderPicker::Second => false,
            OrderPicker::Seeded(rng) => rng.gen_bool(0.5),
            OrderPicker::Script(s) => {
                if s.is_empty() {
                    true
                } else {
                    s.remove(0)
                }
            }
        }
    }
}

/// The rule justifying a transition of the interpreter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Init,
    Terminate,
    Reset,
    Simple,
    BranchT,
    BranchF,
    Par1,
    Par2,
    Reconfigure,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Init => "Init",
            Rule::Terminate => "Terminate",
            Rule::Reset => "Reset",
            Rule::Simple => "Simple",
            Rule::BranchT => "Branch-T",
            Rule::BranchF => "Branch-F",
            Rule::Par1 => "Par-1",
            Rule::Par2 => "Par-2",
            Rule::Reconfigure => "Reconfigure",
        })
    }
}

/// Why a reconfiguration request was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refusal {
    EmptyTarget,
    BranchOutcome,
    InvalidTraces,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WfError {
    #[error("workflow invariant violated: {0}")]
    InvariantViolation(String),
    #[error("step on a terminated workflow")]
    StepOnTerminated,
    #[error("no choice given for `{0}`")]
    UnknownChoice(ActionName),
    #[error("invalid choices: {0}")]
    InvalidChoices(String),
    #[error("empty input")]
    EmptyInput,
    #[error("reconfiguration refused: {}", refusal_text(.reason, .invalid.len()))]
    PreconditionFailed {
        reason: Refusal,
        invalid: Vec<Trace>,
    },
    #[error("workflow has up to {count} traces, more than the bound of {bound}")]
    TraceBoundExceeded { count: usize, bound: usize },
    #[error("execution terminated before `{0}` occurred")]
    PointNotReached(ActionName),
}

fn refusal_text(r: &Refusal, n: usize) -> String {
    match r {
        Refusal::EmptyTarget => "the new workflow is empty".into(),
        Refusal::BranchOutcome => "the new workflow ignores a branch outcome".into(),
        Refusal::InvalidTraces => format!("{n} potential traces are invalid"),
    }
}

/// Trace so far plus the remaining workflow.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InterpState {
    pub trace: Trace,
    pub workflow: Workflow,
}

/// One event of an annotated run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStep {
    pub event: Event,
    pub rule: Rule,
    /// Set on the first event after a reconfiguration.
    pub reconfigured: bool,
}

/// The interpreter, parameterized by the two reference configurations that
/// bound its legal traces.
#[derive(Debug, Clone)]
pub struct Interpreter {
    pub config1: Workflow,
    pub config2: Workflow,
    pub trace_bound: usize,
    legal: Vec<Trace>,
}

impl Interpreter {
    pub fn new(config1: Workflow, config2: Workflow) -> Self {
        let mut legal = tracesof(&config1);
        legal.extend(tracesof(&config2));
        Interpreter {
            config1,
            config2,
            trace_bound: DEFAULT_TRACE_BOUND,
            legal,
        }
    }

    /// The interpreter over the two case-study configurations.
    pub fn case_study() -> Self {
        Self::new(configuration1(), configuration2())
    }

    /// Every extension of the trace by the workflow is a prefix of a trace
    /// of one of the reference configurations.
    pub fn state_invariant(&self, s: &InterpState) -> bool {
        if s.workflow.is_end() {
            return true;
        }
        tracesof(&s.workflow).iter().all(|t| {
            let full: Trace = s.trace.iter().chain(t.iter()).cloned().collect();
            self.legal.iter().any(|x| prefixof(&full, x))
        })
    }

    pub fn init(&self, w: Workflow) -> Result<InterpState, WfError> {
        if !w.is_well_formed() {
            return Err(WfError::InvariantViolation(
                "a trace repeats an event".into(),
            ));
        }
        let s = InterpState {
            trace: Vec::new(),
            workflow: w,
        };
        if !self.state_invariant(&s) {
            return Err(WfError::InvariantViolation(
                "workflow leaves the reference configurations".into(),
            ));
        }
        Ok(s)
    }

    /// One interpreter step.
    pub fn step(
        &self,
        s: &InterpState,
        c: &Choices,
        picker: &mut OrderPicker,
    ) -> Result<(Event, Rule, InterpState), WfError> {
        let (a, rule, rest) = match &s.workflow {
            Workflow::End => return Err(WfError::StepOnTerminated),
            Workflow::Simple(a, e) => (a.clone(), Rule::Simple, (**e).clone()),
            Workflow::Branch(a, t, f) => {
                if c.get(a)? {
                    (a.clone(), Rule::BranchT, (**t).clone())
                } else {
                    (a.clone(), Rule::BranchF, (**f).clone())
                }
            }
            Workflow::Par(b1, b2, e) => {
                if picker.pick_first() {
                    (
                        b1.clone(),
                        Rule::Par1,
                        Workflow::Simple(b2.clone(), e.clone()),
                    )
                } else {
                    (
                        b2.clone(),
                        Rule::Par2,
                        Workflow::Simple(b1.clone(), e.clone()),
                    )
                }
            }
        };
        let ev = Event::Action(a);
        let mut trace = s.trace.clone();
        trace.push(ev.clone());
        Ok((
            ev,
            rule,
            InterpState {
                trace,
                workflow: rest,
            },
        ))
    }

    /// Steps until the workflow is exhausted, then appends TERMINATE.
    pub fn execute(
        &self,
        s: &InterpState,
        c: &Choices,
        picker: &mut OrderPicker,
    ) -> Result<InterpState, WfError> {
        let mut run = Vec::new();
        self.execute_annotated(s, c, picker, &mut run)
    }

    /// [`Interpreter::execute`], recording each event with its rule.
    pub fn execute_annotated(
        &self,
        s: &InterpState,
        c: &Choices,
        picker: &mut OrderPicker,
        run: &mut Vec<RunStep>,
    ) -> Result<InterpState, WfError> {
        let mut cur = s.clone();
        if cur.trace.contains(&Event::Terminate) {
            return Err(WfError::StepOnTerminated);
        }
        while !cur.workflow.is_end() {
            let (event, rule, next) = self.step(&cur, c, picker)?;
            run.push(RunStep {
                event,
                rule,
                reconfigured: false,
            });
            cur = next;
        }
        cur.trace.push(Event::Terminate);
        run.push(RunStep {
            event: Event::Terminate,
            rule: Rule::Terminate,
            reconfigured: false,
        });
        Ok(cur)
    }

    /// Traces that `s.trace` extended by `w2` would produce and that are not
    /// complete traces of `target`.
    pub fn invalid_traces(
        &self,
        s: &InterpState,
        w2: &Workflow,
        target: &Workflow,
    ) -> Result<Vec<Trace>, WfError> {
        let targets: HashSet<Trace> = tracesof_bounded(target, self.trace_bound)?
            .into_iter()
            .collect();
        Ok(tracesof_bounded(w2, self.trace_bound)?
            .into_iter()
            .map(|t| s.trace.iter().cloned().chain(t).collect::<Trace>())
            .filter(|t| !targets.contains(t))
            .collect())
    }

    /// Replaces the remaining workflow by `w2`, targeting configuration 2.
    pub fn reconfigure(&self, s: &InterpState, w2: Workflow) -> Result<InterpState, WfError> {
        self.reconfigure_to(s, w2, &self.config2)
    }

    /// Replaces the remaining workflow by `w2`, requiring every potential
    /// trace to be a trace of `target`.
    pub fn reconfigure_to(
        &self,
        s: &InterpState,
        w2: Workflow,
        target: &Workflow,
    ) -> Result<InterpState, WfError> {
        if w2.is_end() {
            return Err(WfError::PreconditionFailed {
                reason: Refusal::EmptyTarget,
                invalid: Vec::new(),
            });
        }
        let invalid = self.invalid_traces(s, &w2, target)?;
        if !invalid.is_empty() {
            return Err(WfError::PreconditionFailed {
                reason: Refusal::InvalidTraces,
                invalid,
            });
        }
        if !branch_check(&s.trace, &s.workflow, &w2) {
            return Err(WfError::PreconditionFailed {
                reason: Refusal::BranchOutcome,
                invalid: Vec::new(),
            });
        }
        Ok(InterpState {
            trace: s.trace.clone(),
            workflow: w2,
        })
    }

    /// Runs `config1` until `rp` occurs, then tries to reconfigure to `w2`
    /// and, when that is accepted, executes to completion.
    pub fn test_reconfig(
        &self,
        c: &Choices,
        rp: &ActionName,
        w2: Workflow,
        picker: &mut OrderPicker,
    ) -> Result<ReconfigReport, WfError> {
        self.test_reconfig_from(self.config1.clone(), c, rp, w2, picker)
    }

    /// [`Interpreter::test_reconfig`] starting from an arbitrary workflow.
    pub fn test_reconfig_from(
        &self,
        start: Workflow,
        c: &Choices,
        rp: &ActionName,
        w2: Workflow,
        picker: &mut OrderPicker,
    ) -> Result<ReconfigReport, WfError> {
        let mut run = Vec::new();
        let mut s = self.init(start)?;
        loop {
            if s.workflow.is_end() {
                return Err(WfError::PointNotReached(rp.clone()));
            }
            let (ev, rule, next) = self.step(&s, c, picker)?;
            run.push(RunStep {
                event: ev.clone(),
                rule,
                reconfigured: false,
            });
            s = next;
            if ev.as_action() == Some(rp) {
                break;
            }
        }
        let before = s.trace.clone();
        match self.reconfigure(&s, w2) {
            Ok(s2) => {
                let mut tail = Vec::new();
                let done = self.execute_annotated(&s2, c, picker, &mut tail)?;
                if let Some(first) = tail.first_mut() {
                    first.reconfigured = true;
                }
                run.extend(tail);
                Ok(ReconfigReport {
                    before,
                    outcome: Ok(done.trace),
                    run,
                })
            }
            Err(WfError::PreconditionFailed { reason, invalid }) => Ok(ReconfigReport {
                before,
                outcome: Err((reason, invalid)),
                run,
            }),
            Err(e) => Err(e),
        }
    }

    /// Every workflow reachable from `w` by stepping under any choices and
    /// any parallel order, `w` included, without the terminal leaf.
    pub fn residuals(w: &Workflow) -> Vec<Workflow> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut stack = vec![w.clone()];
        while let Some(cur) = stack.pop() {
            if cur.is_end() || !seen.insert(cur.clone()) {
                continue;
            }
            out.push(cur.clone());
            match cur {
                Workflow::End => {}
                Workflow::Simple(_, e) => stack.push(*e),
                Workflow::Branch(_, t, f) => {
                    stack.push(*f);
                    stack.push(*t);
                }
                Workflow::Par(b1, b2, e) => {
                    stack.push(Workflow::Simple(b1, e.clone()));
                    stack.push(Workflow::Simple(b2, e));
                }
            }
        }
        out
    }
}

/// Outcome of a scripted reconfiguration test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconfigReport {
    /// The trace when reconfiguration was requested.
    pub before: Trace,
    /// The final trace, or the refusal with its invalid potential traces.
    pub outcome: Result<Trace, (Refusal, Vec<Trace>)>,
    /// The annotated run up to the end (or up to the refusal).
    pub run: Vec<RunStep>,
}

impl ReconfigReport {
    pub fn accepted(&self) -> bool {
        self.outcome.is_ok()
    }

    /// Console rendering of the test.
    pub fn render(&self) -> String {
        let mut out = render_trace(&self.before, "", 1);
        out.push('\n');
        out.push_str("Reconfiguring Configuration1 to Configuration2...\n");
        match &self.outcome {
            Ok(t) => {
                out.push_str(&render_trace(t, "", 1));
                out.push('\n');
            }
            Err((Refusal::InvalidTraces, invalid)) => {
                out.push_str("These potential traces are not valid under Configuration2:\n");
                for t in invalid {
                    let shown: Trace = t
                        .iter()
                        .filter(|e| **e != Event::Terminate)
                        .cloned()
                        .collect();
                    out.push_str(&render_trace(&shown, "* ", 3));
                    out.push('\n');
                }
            }
            Err((Refusal::BranchOutcome, _)) => {
                out.push_str("The new workflow does not respect the outcome of the last branch.\n");
            }
            Err((Refusal::EmptyTarget, _)) => out.push_str("The new workflow is empty.\n"),
        }
        out
    }
}

/// Renders a trace as a bracketed list. The first line holds up to three
/// events and each continuation line up to four, indented by `cont` spaces.
pub fn render_trace(t: &[Event], lead: &str, cont: usize) -> String {
    let items: Vec<String> = t.iter().map(|e| e.to_string()).collect();
    let mut out = format!("{lead}[");
    let pad = " ".repeat(cont);
    let mut i = 0;
    let mut line = 0;
    while i < items.len() {
        let take = if line == 0 { 3 } else { 4 };
        let end = (i + take).min(items.len());
        if line > 0 {
            out.push_str(",\n");
            out.push_str(&pad);
        }
        out.push_str(&items[i..end].join(", "));
        i = end;
        line += 1;
    }
    out.push(']');
    out
}

/// Console rendering of a named test returning a trace.
pub fn render_test(name: &str, t: &[Event]) -> String {
    format!("Test`{name}() =\n{}\n", render_trace(t, "  ", 3))
}

/// The first case-study configuration.
pub fn configuration1() -> Workflow {
    use Workflow as W;
    W::simple(
        "OrderReceipt",
        W::branch(
            "InventoryCheck",
            W::branch(
                "CreditCheck",
                W::simple(
                    "Shipping",
                    W::simple(
                        "Billing",
                        W::simple("Archiving", W::simple("Confirmation", W::End)),
                    ),
                ),
                W::simple("Reject", W::End),
            ),
            W::simple("Reject", W::End),
        ),
    )
}

/// The second case-study configuration.
pub fn configuration2() -> Workflow {
    use Workflow as W;
    let credit = || {
        W::branch(
            "CreditCheck",
            W::par("Billing", "Shipping", W::simple("Archiving", W::End)),
            W::simple("Reject", W::End),
        )
    };
    W::simple(
        "OrderReceipt",
        W::branch(
            "InventoryCheck",
            credit(),
            W::branch("SupplierCheck", credit(), W::simple("Reject", W::End)),
        ),
    )
}

/// Parses a workflow: `simple(A, w)`, `branch(A, w, w)`, `par(A, A, w)`,
/// `end`, or the name of a workflow in `defs`.
pub fn parse_workflow(src: &str) -> Result<Workflow, ParseError> {
    let toks = tokenize(src)?;
    let mut cur = Cursor::new(&toks);
    let w = parse_workflow_at(&mut cur, &BTreeMap::new())?;
    cur.expect_end()?;
    Ok(w)
}

pub fn parse_workflow_at(
    cur: &mut Cursor,
    defs: &BTreeMap<String, Workflow>,
) -> Result<Workflow, ParseError> {
    let name = cur.expect_ident()?;
    match name.as_str() {
        "end" | "nil" => Ok(Workflow::End),
        "simple" => {
            cur.expect_punct("(")?;
            let a = cur.expect_ident()?;
            cur.expect_punct(",")?;
            let w = parse_workflow_at(cur, defs)?;
            cur.expect_punct(")")?;
            Ok(Workflow::Simple(ActionName::new(&a), Box::new(w)))
        }
        "branch" => {
            cur.expect_punct("(")?;
            let a = cur.expect_ident()?;
            cur.expect_punct(",")?;
            let t = parse_workflow_at(cur, defs)?;
            cur.expect_punct(",")?;
            let f = parse_workflow_at(cur, defs)?;
            cur.expect_punct(")")?;
            Ok(Workflow::Branch(
                ActionName::new(&a),
                Box::new(t),
                Box::new(f),
            ))
        }
        "par" => {
            cur.expect_punct("(")?;
            let b1 = cur.expect_ident()?;
            cur.expect_punct(",")?;
            let b2 = cur.expect_ident()?;
            cur.expect_punct(",")?;
            let w = parse_workflow_at(cur, defs)?;
            cur.expect_punct(")")?;
            Ok(Workflow::Par(
                ActionName::new(&b1),
                ActionName::new(&b2),
                Box::new(w),
            ))
        }
        other => defs
            .get(other)
            .cloned()
            .ok_or_else(|| cur.error(format!("unknown workflow `{other}`"))),
    }
}
