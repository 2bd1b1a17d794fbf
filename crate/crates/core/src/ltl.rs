//! Kripke structures of interpreter runs and LTL checking over them.
//!
//! A run becomes a chain `S0 S1 ... Sn` where `S0` is the initial state
//! (no action yet), each later state records one event with the rule that
//! produced it, and the final TERMINATE state loops on itself. Formulas are
//! evaluated on the infinite word starting at `S1`, the first action.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::lexer::{tokenize, Cursor, ParseError, Tok};
use crate::workflow::{
    configuration1, configuration2, Choices, Event, InterpState, Interpreter, OrderPicker, Rule,
    RunStep, Trace, Workflow,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("malformed run: {0}")]
    MalformedRun(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeState {
    pub action: Option<Event>,
    pub rule: Rule,
    pub reconfigure: bool,
}

/// A linear chain whose last state loops on itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeStructure {
    pub states: Vec<KripkeState>,
}

impl KripkeStructure {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Successor of state `i`.
    pub fn succ(&self, i: usize) -> usize {
        (i + 1).min(self.states.len() - 1)
    }

    /// The action trace the structure was built from.
    pub fn trace(&self) -> Trace {
        self.states
            .iter()
            .filter_map(|s| s.action.clone())
            .collect()
    }

    /// One line per state: index, event, rule, and the reconfiguration mark.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.states.iter().enumerate() {
            let ev = s.action.as_ref().map_or("-".to_string(), |e| e.to_string());
            let mark = if s.reconfigure { " rc" } else { "" };
            out.push_str(&format!("S{i} {ev} {}{mark}\n", s.rule));
        }
        out
    }
}

/// Builds the Kripke structure of an annotated run ending in TERMINATE.
pub fn trace_to_kripke(run: &[RunStep]) -> Result<KripkeStructure, LtlError> {
    match run.last() {
        Some(s) if s.event == Event::Terminate => {}
        _ => {
            return Err(LtlError::MalformedRun(
                "the run does not end with TERMINATE".into(),
            ))
        }
    }
    if run[..run.len() - 1]
        .iter()
        .any(|s| s.event == Event::Terminate)
    {
        return Err(LtlError::MalformedRun(
            "TERMINATE occurs before the end".into(),
        ));
    }
    let mut states = vec![KripkeState {
        action: None,
        rule: Rule::Init,
        reconfigure: false,
    }];
    states.extend(run.iter().map(|s| KripkeState {
        action: Some(s.event.clone()),
        rule: s.rule,
        reconfigure: s.reconfigured,
    }));
    Ok(KripkeStructure { states })
}

/// Atomic propositions over a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Or,
    Ict,
    Icf,
    Cct,
    Ccf,
    Sct,
    Scf,
    Rj,
    Tr,
    Sh,
    Bi,
    Ar,
    Cf,
    Rc,
}

const ATOMS: [(&str, Atom); 14] = [
    ("or", Atom::Or),
    ("ict", Atom::Ict),
    ("icf", Atom::Icf),
    ("cct", Atom::Cct),
    ("ccf", Atom::Ccf),
    ("sct", Atom::Sct),
    ("scf", Atom::Scf),
    ("rj", Atom::Rj),
    ("tr", Atom::Tr),
    ("sh", Atom::Sh),
    ("bi", Atom::Bi),
    ("ar", Atom::Ar),
    ("cf", Atom::Cf),
    ("rc", Atom::Rc),
];

impl Atom {
    pub fn all() -> impl Iterator<Item = Atom> {
        ATOMS.iter().map(|(_, a)| *a)
    }

    pub fn name(self) -> &'static str {
        ATOMS
            .iter()
            .find(|(_, a)| *a == self)
            .map(|(n, _)| *n)
            .unwrap_or("?")
    }

    pub fn holds(self, s: &KripkeState) -> bool {
        let is = |name: &str| matches!(&s.action, Some(Event::Action(a)) if a.as_str() == name);
        match self {
            Atom::Or => is("OrderReceipt"),
            Atom::Ict => is("InventoryCheck") && s.rule == Rule::BranchT,
            Atom::Icf => is("InventoryCheck") && s.rule == Rule::BranchF,
            Atom::Cct => is("CreditCheck") && s.rule == Rule::BranchT,
            Atom::Ccf => is("CreditCheck") && s.rule == Rule::BranchF,
            Atom::Sct => is("SupplierCheck") && s.rule == Rule::BranchT,
            Atom::Scf => is("SupplierCheck") && s.rule == Rule::BranchF,
            Atom::Rj => is("Reject"),
            Atom::Tr => s.action == Some(Event::Terminate),
            Atom::Sh => is("Shipping"),
            Atom::Bi => is("Billing"),
            Atom::Ar => is("Archiving"),
            Atom::Cf => is("Confirmation"),
            Atom::Rc => s.reconfigure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ltl {
    Atom(Atom),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Globally(Box<Ltl>),
}

impl Ltl {
    pub fn atom(a: Atom) -> Self {
        Ltl::Atom(a)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Ltl::Not(Box::new(self))
    }

    pub fn and(self, o: Ltl) -> Self {
        Ltl::And(Box::new(self), Box::new(o))
    }

    pub fn or(self, o: Ltl) -> Self {
        Ltl::Or(Box::new(self), Box::new(o))
    }

    pub fn until(self, o: Ltl) -> Self {
        Ltl::Until(Box::new(self), Box::new(o))
    }

    pub fn globally(self) -> Self {
        Ltl::Globally(Box::new(self))
    }

    /// Truth value at every state of `ks`.
    pub fn eval_all(&self, ks: &KripkeStructure) -> Vec<bool> {
        let n = ks.len();
        match self {
            Ltl::Atom(a) => ks.states.iter().map(|s| a.holds(s)).collect(),
            Ltl::Not(f) => f.eval_all(ks).into_iter().map(|b| !b).collect(),
            Ltl::And(a, b) => a
                .eval_all(ks)
                .into_iter()
                .zip(b.eval_all(ks))
                .map(|(x, y)| x && y)
                .collect(),
            Ltl::Or(a, b) => a
                .eval_all(ks)
                .into_iter()
                .zip(b.eval_all(ks))
                .map(|(x, y)| x || y)
                .collect(),
            Ltl::Until(a, b) => {
                let (va, vb) = (a.eval_all(ks), b.eval_all(ks));
                let mut out = vec![false; n];
                for i in (0..n).rev() {
                    out[i] = vb[i] || (i + 1 < n && va[i] && out[i + 1]);
                }
                out
            }
            Ltl::Globally(f) => {
                let v = f.eval_all(ks);
                let mut out = vec![false; n];
                for i in (0..n).rev() {
                    out[i] = v[i] && (i + 1 == n || out[i + 1]);
                }
                out
            }
        }
    }

    /// Truth value at state `i`.
    pub fn eval_at(&self, ks: &KripkeStructure, i: usize) -> bool {
        self.eval_all(ks).get(i).copied().unwrap_or(false)
    }
}

/// Satisfaction on the word starting at the first action state.
pub fn check(ks: &KripkeStructure, f: &Ltl) -> bool {
    f.eval_at(ks, 1.min(ks.len().saturating_sub(1)))
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ltl::Atom(a) => f.write_str(a.name()),
            Ltl::Not(x) => write!(f, "!{}", Paren(x)),
            Ltl::Globally(x) => write!(f, "G {}", Paren(x)),
            Ltl::And(a, b) => write!(f, "{} & {}", Paren(a), Paren(b)),
            Ltl::Or(a, b) => write!(f, "{} | {}", Paren(a), Paren(b)),
            Ltl::Until(a, b) => write!(f, "{} U {}", Paren(a), Paren(b)),
        }
    }
}

struct Paren<'a>(&'a Ltl);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Ltl::Atom(_) | Ltl::Not(_) | Ltl::Globally(_) => write!(f, "{}", self.0),
            other => write!(f, "({other})"),
        }
    }
}

fn a(x: Atom) -> Ltl {
    Ltl::Atom(x)
}

/// `x1 U (x2 U (... U G tr))`.
fn chain(steps: Vec<Ltl>) -> Ltl {
    steps
        .into_iter()
        .rev()
        .fold(a(Atom::Tr).globally(), |acc, s| s.until(acc))
}

fn any(fs: Vec<Ltl>) -> Ltl {
    fs.into_iter().reduce(Ltl::or).expect("nonempty")
}

/// Requirements on configuration 1, one disjunct per outcome.
pub fn cf1_parts() -> Vec<Ltl> {
    use Atom::*;
    vec![
        chain(vec![a(Or), a(Ict), a(Cct), a(Sh), a(Bi), a(Ar), a(Cf)]).and(a(Rj).not().globally()),
        chain(vec![a(Or), a(Icf), a(Rj)]).and(a(Cf).not().globally()),
        chain(vec![a(Or), a(Ict), a(Ccf), a(Rj)]).and(a(Cf).not().globally()),
    ]
}

/// Requirements on configuration 2, one disjunct per outcome.
pub fn cf2_parts() -> Vec<Ltl> {
    use Atom::*;
    let bs = || a(Bi).or(a(Sh));
    vec![
        chain(vec![a(Or), a(Ict), a(Cct), bs(), a(Ar)]).and(a(Rj).not().globally()),
        chain(vec![a(Or), a(Icf), a(Scf), a(Rj)]).and(a(Ar).not().globally()),
        chain(vec![a(Or), a(Icf), a(Sct), a(Ccf), a(Rj)]).and(a(Ar).not().globally()),
        chain(vec![a(Or), a(Icf), a(Sct), a(Cct), bs(), a(Ar)]).and(a(Rj).not().globally()),
        chain(vec![a(Or), a(Ict), a(Ccf), a(Rj)]).and(a(Ar).not().globally()),
    ]
}

pub fn cf1() -> Ltl {
    any(cf1_parts())
}

pub fn cf2() -> Ltl {
    any(cf2_parts())
}

/// Configuration 2 if possible, otherwise configuration 1.
pub fn rf() -> Ltl {
    cf2().or(cf2().not().and(cf1()))
}

/// Parses a formula: atoms, presets `CF1` `CF2` `RF`, `!`, `G`, `U`
/// (right associative), `&`, `|`, in increasing order of looseness.
pub fn parse_ltl(src: &str) -> Result<Ltl, ParseError> {
    let toks = tokenize(src)?;
    let mut cur = Cursor::new(&toks);
    let f = parse_or(&mut cur)?;
    cur.expect_end()?;
    Ok(f)
}

pub fn parse_ltl_at(cur: &mut Cursor) -> Result<Ltl, ParseError> {
    parse_or(cur)
}

fn parse_or(cur: &mut Cursor) -> Result<Ltl, ParseError> {
    let mut f = parse_and(cur)?;
    while cur.eat_punct("|") || cur.eat_punct("||") {
        f = f.or(parse_and(cur)?);
    }
    Ok(f)
}

fn parse_and(cur: &mut Cursor) -> Result<Ltl, ParseError> {
    let mut f = parse_until(cur)?;
    while cur.eat_punct("&") || cur.eat_punct("&&") {
        f = f.and(parse_until(cur)?);
    }
    Ok(f)
}

fn parse_until(cur: &mut Cursor) -> Result<Ltl, ParseError> {
    let f = parse_unary(cur)?;
    if cur.eat_ident("U") {
        return Ok(f.until(parse_until(cur)?));
    }
    Ok(f)
}

fn parse_unary(cur: &mut Cursor) -> Result<Ltl, ParseError> {
    if cur.eat_punct("!") {
        return Ok(parse_unary(cur)?.not());
    }
    if cur.eat_ident("G") {
        return Ok(parse_unary(cur)?.globally());
    }
    if cur.eat_punct("(") {
        let f = parse_or(cur)?;
        cur.expect_punct(")")?;
        return Ok(f);
    }
    match cur.peek() {
        Some(Tok::Ident(name)) => {
            let name = name.clone();
            let f = match name.as_str() {
                "CF1" => cf1(),
                "CF2" => cf2(),
                "RF" => rf(),
                other => match ATOMS.iter().find(|(n, _)| *n == other) {
                    Some((_, at)) => Ltl::Atom(*at),
                    None => return Err(cur.error(format!("unknown proposition `{other}`"))),
                },
            };
            cur.next();
            Ok(f)
        }
        _ => Err(cur.unexpected("a proposition")),
    }
}

/// Kripke structures of every complete run of `w` under the five choice
/// combinations and both orders of each parallel pair.
pub fn runs_of(interp: &Interpreter, w: &Workflow) -> Vec<KripkeStructure> {
    let mut out: Vec<KripkeStructure> = Vec::new();
    let s = InterpState {
        trace: Vec::new(),
        workflow: w.clone(),
    };
    for (_, c) in Choices::presets() {
        for picker in [OrderPicker::First, OrderPicker::Second] {
            let mut run = Vec::new();
            let mut p = picker.clone();
            if interp.execute_annotated(&s, &c, &mut p, &mut run).is_ok() {
                let ks = trace_to_kripke(&run).expect("complete run");
                if !out.contains(&ks) {
                    out.push(ks);
                }
            }
        }
    }
    out
}

/// The structure among the runs of `w` whose events are exactly `trace`.
pub fn structure_of_trace(
    interp: &Interpreter,
    w: &Workflow,
    trace: &[Event],
) -> Option<KripkeStructure> {
    runs_of(interp, w)
        .into_iter()
        .find(|ks| ks.trace() == trace)
}

/// Kripke structures of every run that starts in configuration 1 and is
/// reconfigured, once an order has been received, to any workflow reachable
/// in configuration 2 that the interpreter accepts.
pub fn reconfigured_runs(interp: &Interpreter) -> Vec<KripkeStructure> {
    let targets = Interpreter::residuals(&interp.config2);
    let mut out: Vec<KripkeStructure> = Vec::new();
    let mut seen: BTreeSet<Vec<(Option<Event>, Rule, bool)>> = BTreeSet::new();
    for (_, c) in Choices::presets() {
        let Ok(mut s) = interp.init(interp.config1.clone()) else {
            continue;
        };
        let mut prefix: Vec<RunStep> = Vec::new();
        while !s.workflow.is_end() {
            let Ok((event, rule, next)) = interp.step(&s, &c, &mut OrderPicker::First) else {
                break;
            };
            prefix.push(RunStep {
                event,
                rule,
                reconfigured: false,
            });
            s = next;
            for w2 in &targets {
                let Ok(s2) = interp.reconfigure(&s, w2.clone()) else {
                    continue;
                };
                for picker in [OrderPicker::First, OrderPicker::Second] {
                    let mut tail = Vec::new();
                    let mut p = picker.clone();
                    if interp
                        .execute_annotated(&s2, &c, &mut p, &mut tail)
                        .is_err()
                    {
                        continue;
                    }
                    tail[0].reconfigured = true;
                    let run: Vec<RunStep> = prefix.iter().cloned().chain(tail).collect();
                    let ks = trace_to_kripke(&run).expect("complete run");
                    let key = ks
                        .states
                        .iter()
                        .map(|st| (st.action.clone(), st.rule, st.reconfigure))
                        .collect();
                    if seen.insert(key) {
                        out.push(ks);
                    }
                }
            }
        }
    }
    out
}

/// The case-study interpreter's structures for configurations 1 and 2.
pub fn case_study_structures() -> (Vec<KripkeStructure>, Vec<KripkeStructure>) {
    let it = Interpreter::case_study();
    (
        runs_of(&it, &configuration1()),
        runs_of(&it, &configuration2()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks_of(trace: &[&str], rules: &[Rule]) -> KripkeStructure {
        let mut run: Vec<RunStep> = trace
            .iter()
            .zip(rules)
            .map(|(n, r)| RunStep {
                event: Event::action(n),
                rule: *r,
                reconfigured: false,
            })
            .collect();
        run.push(RunStep {
            event: Event::Terminate,
            rule: Rule::Terminate,
            reconfigured: false,
        });
        trace_to_kripke(&run).unwrap()
    }

    #[test]
    fn at12_has_five_states() {
        let ks = ks_of(
            &["OrderReceipt", "InventoryCheck", "Reject"],
            &[Rule::Simple, Rule::BranchF, Rule::Simple],
        );
        assert_eq!(ks.len(), 5);
        assert!(check(&ks, &cf1()));
        // An until-chain may be discharged early, so the supplier-check
        // disjunct of the configuration 2 requirements also accepts this run.
        assert!(check(&ks, &cf2_parts()[1]));
    }

    #[test]
    fn empty_run_is_malformed() {
        assert!(matches!(
            trace_to_kripke(&[]),
            Err(LtlError::MalformedRun(_))
        ));
    }

    #[test]
    fn configuration_structures_satisfy_their_requirements() {
        let (k1, k2) = case_study_structures();
        assert_eq!(k1.len(), 3);
        assert_eq!(k2.len(), 7);
        assert!(k1.iter().all(|k| check(k, &cf1())));
        assert!(k2.iter().all(|k| check(k, &cf2())));
    }

    #[test]
    fn cf2_fails_on_the_successful_configuration1_run() {
        let (k1, _) = case_study_structures();
        let at11 = k1.iter().find(|k| k.trace().len() == 8).unwrap();
        assert!(!check(at11, &cf2()));
        assert!(check(at11, &rf()));
    }

    #[test]
    fn reconfigured_runs_satisfy_rf() {
        let it = Interpreter::case_study();
        let runs = reconfigured_runs(&it);
        assert!(!runs.is_empty());
        assert!(runs.iter().all(|k| check(k, &rf())));
        // Reconfigured right after a failed inventory check: the next state
        // is the supplier check and carries the mark.
        assert!(runs.iter().any(|k| {
            k.states.iter().position(|s| s.reconfigure)
                == k.states.iter().position(|s| matches!(&s.action, Some(Event::Action(a)) if a.as_str() == "SupplierCheck"))
                && k.states.iter().any(|s| s.reconfigure)
        }));
    }

    #[test]
    fn cf1_first_disjunct_forbids_reject() {
        let first = &cf1_parts()[0];
        assert!(matches!(first, Ltl::And(_, g) if **g == a(Atom::Rj).not().globally()));
    }

    #[test]
    fn rf_false_when_both_fail() {
        let ks = ks_of(&["Shipping", "Reject"], &[Rule::Simple, Rule::Simple]);
        assert!(!check(&ks, &cf1()) && !check(&ks, &cf2()));
        assert!(!check(&ks, &rf()));
    }

    #[test]
    fn parser_round_trip() {
        for src in [
            "or U ict U G tr & G !rj",
            "!(or | rc) & G (sh | bi)",
            "CF1",
            "RF",
        ] {
            let f = parse_ltl(src).unwrap();
            assert_eq!(parse_ltl(&f.to_string()).unwrap(), f, "{src}");
        }
        assert_eq!(
            parse_ltl("or U ict U tr").unwrap(),
            a(Atom::Or).until(a(Atom::Ict).until(a(Atom::Tr)))
        );
        assert_eq!(parse_ltl("CF2").unwrap(), cf2());
        assert!(parse_ltl("1").is_err());
        assert!(parse_ltl("xyz").is_err());
    }
}
