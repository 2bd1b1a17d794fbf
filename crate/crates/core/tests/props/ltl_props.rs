use proptest::prelude::*;
use wfreconf::ltl::{cf1, check, trace_to_kripke, Atom, KripkeState, KripkeStructure, Ltl};
use wfreconf::workflow::{configuration1, Choices, Event, Interpreter, OrderPicker, Rule};

const ACTIONS: [&str; 8] = [
    "OrderReceipt",
    "InventoryCheck",
    "CreditCheck",
    "SupplierCheck",
    "Reject",
    "Shipping",
    "Billing",
    "Confirmation",
];

fn state() -> impl Strategy<Value = KripkeState> {
    (
        prop_oneof![3 => prop::sample::select(ACTIONS.to_vec()).prop_map(Event::action), 1 => Just(Event::Terminate)],
        prop::sample::select(vec![Rule::Simple, Rule::BranchT, Rule::BranchF, Rule::Par1, Rule::Par2]),
        any::<bool>(),
    )
        .prop_map(|(e, rule, reconfigure)| KripkeState { action: Some(e), rule, reconfigure })
}

fn structure() -> impl Strategy<Value = KripkeStructure> {
    prop::collection::vec(state(), 1..7).prop_map(|mut v| {
        v.insert(
            0,
            KripkeState {
                action: None,
                rule: Rule::Init,
                reconfigure: false,
            },
        );
        KripkeStructure { states: v }
    })
}

fn formula() -> impl Strategy<Value = Ltl> {
    let atoms: Vec<Atom> = Atom::all().collect();
    prop::sample::select(atoms)
        .prop_map(Ltl::atom)
        .prop_recursive(4, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Ltl::not),
                inner.clone().prop_map(Ltl::globally),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
                (inner.clone(), inner).prop_map(|(a, b)| a.until(b)),
            ]
        })
}

/// Satisfaction at position `i` of the infinite word that repeats the last
/// state forever. Beyond `len + 2` positions nothing new can be observed.
fn sat(f: &Ltl, ks: &KripkeStructure, i: usize) -> bool {
    let n = ks.len();
    let horizon = n + 2;
    let pos = |k: usize| k.min(n - 1);
    match f {
        Ltl::Atom(a) => a.holds(&ks.states[pos(i)]),
        Ltl::Not(g) => !sat(g, ks, i),
        Ltl::And(a, b) => sat(a, ks, i) && sat(b, ks, i),
        Ltl::Or(a, b) => sat(a, ks, i) || sat(b, ks, i),
        Ltl::Globally(g) => (i..i.max(horizon)).all(|k| sat(g, ks, k)),
        Ltl::Until(a, b) => {
            (i..i.max(horizon)).any(|k| sat(b, ks, k) && (i..k).all(|j| sat(a, ks, j)))
        }
    }
}

pub fn evaluator_matches_unrolling(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(ks in structure(), f in formula())| {
        let all = f.eval_all(&ks);
        for (i, v) in all.iter().enumerate() {
            prop_assert_eq!(*v, sat(&f, &ks, i), "position {} of {}", i, f);
        }
        prop_assert_eq!(check(&ks, &f), sat(&f, &ks, 1.min(ks.len() - 1)));
    });
}

pub fn globally_means_at_every_later_state(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(ks in structure(), f in formula())| {
        let g = f.clone().globally().eval_all(&ks);
        let v = f.eval_all(&ks);
        for i in 0..ks.len() {
            prop_assert_eq!(g[i], v[i..].iter().all(|b| *b));
        }
    });
}

pub fn configuration_one_runs_meet_its_requirements(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(seed in any::<u64>(), choice in 0usize..5)| {
        let it = Interpreter::case_study();
        let (_, c) = Choices::presets()[choice].clone();
        let s = it.init(configuration1()).unwrap();
        let mut run = Vec::new();
        it.execute_annotated(&s, &c, &mut OrderPicker::seeded(seed), &mut run).unwrap();
        prop_assert!(check(&trace_to_kripke(&run).unwrap(), &cf1()));
    });
}

pub type Property = (&'static str, fn(u32));

pub const PROPERTIES: &[Property] = &[
    ("evaluator_matches_unrolling", evaluator_matches_unrolling),
    (
        "globally_means_at_every_later_state",
        globally_means_at_every_later_state,
    ),
    (
        "configuration_one_runs_meet_its_requirements",
        configuration_one_runs_meet_its_requirements,
    ),
];
