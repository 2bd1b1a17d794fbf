use std::collections::BTreeSet;

use proptest::prelude::*;
use wfreconf::boolean::{mk, Assignment, BoolSyntax, VarName};
use wfreconf::cpog::{ActionName, CpogExpr};
use wfreconf::reconfig::{
    all_subsets, consistency, enumerate_consistent, make_safe, History, ReconfigAnalysis,
    ReconfigSpec,
};

const ACTIONS: [&str; 3] = ["a", "b", "c"];
const VARS: [&str; 2] = ["x", "y"];
const FLAG: &str = "f";

fn expr() -> impl Strategy<Value = CpogExpr> {
    let cond = prop_oneof![
        prop::sample::select(VARS.to_vec()).prop_map(BoolSyntax::var),
        prop::sample::select(VARS.to_vec()).prop_map(|v| BoolSyntax::not(BoolSyntax::var(v))),
    ]
    .prop_map(|s| mk(&s));
    let leaf = prop::sample::select(ACTIONS.to_vec()).prop_map(CpogExpr::action);
    leaf.prop_recursive(3, 8, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(p, q)| CpogExpr::par(p, q)),
            (inner.clone(), inner.clone()).prop_map(|(p, q)| CpogExpr::seq(p, q)),
            (cond.clone(), inner).prop_map(|(x, p)| CpogExpr::cond(x, p)),
        ]
    })
}

type Arcs = BTreeSet<(ActionName, ActionName)>;

fn graph(e: &CpogExpr, psi: &Assignment) -> (BTreeSet<ActionName>, Arcs) {
    match e {
        CpogExpr::Empty => Default::default(),
        CpogExpr::Action(a) => (BTreeSet::from([a.clone()]), BTreeSet::new()),
        CpogExpr::Parallel(p, q) | CpogExpr::Sequence(p, q) => {
            let (mut vp, mut ep) = graph(p, psi);
            let (vq, eq) = graph(q, psi);
            if matches!(e, CpogExpr::Sequence(..)) {
                ep.extend(
                    vp.iter()
                        .flat_map(|a| vq.iter().map(move |b| (a.clone(), b.clone()))),
                );
            }
            vp.extend(vq);
            ep.extend(eq);
            (vp, ep)
        }
        CpogExpr::Cond(x, p) => {
            if x.eval(psi).unwrap() {
                graph(p, psi)
            } else {
                Default::default()
            }
        }
    }
}

fn closure(arcs: &Arcs) -> Arcs {
    let mut c = arcs.clone();
    loop {
        let add: Vec<_> = c
            .iter()
            .flat_map(|(a, b)| {
                c.iter()
                    .filter(move |(b2, _)| b2 == b)
                    .map(move |(_, d)| (a.clone(), d.clone()))
            })
            .filter(|p| !c.contains(p))
            .collect();
        if add.is_empty() {
            return c;
        }
        c.extend(add);
    }
}

fn consistent_under(h: &History, spec: &CpogExpr, psi: &Assignment) -> bool {
    let (v, e) = graph(spec, psi);
    h.is_subset(&v)
        && closure(&e)
            .iter()
            .all(|(a, b)| !h.contains(b) || h.contains(a))
}

fn universe(with_flag: bool) -> Vec<VarName> {
    let mut u: Vec<VarName> = VARS.iter().map(VarName::new).collect();
    if with_flag {
        u.push(VarName::new(FLAG));
    }
    u
}

fn spec(p: CpogExpr, q: CpogExpr) -> ReconfigSpec {
    ReconfigSpec::new(ActionName::new("r"), VarName::new(FLAG), p, q)
}

fn safe_oracle(s: &ReconfigSpec, h: &History) -> bool {
    let mut hr = h.clone();
    hr.insert(s.r.clone());
    Assignment::enumerate(&universe(false)).any(|mut psi| {
        psi.set(s.flag.clone(), false);
        let before = consistent_under(h, &s.combined, &psi);
        psi.set(s.flag.clone(), true);
        before && consistent_under(&hr, &s.combined, &psi)
    })
}

fn before_oracle(s: &ReconfigSpec, h: &History) -> bool {
    Assignment::enumerate(&universe(false)).any(|mut psi| {
        psi.set(s.flag.clone(), false);
        consistent_under(h, &s.combined, &psi)
    })
}

fn alphabet() -> Vec<ActionName> {
    ACTIONS.iter().map(ActionName::new).collect()
}

pub fn consistency_condition_matches_the_oracle(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr())| {
        let mut alpha = alphabet();
        alpha.push(ActionName::new("z"));
        for h in all_subsets(&alpha) {
            let c = consistency(&h, &p);
            for psi in Assignment::enumerate(&universe(false)) {
                prop_assert_eq!(c.eval(&psi).unwrap(), consistent_under(&h, &p, &psi), "history {:?}", h);
            }
        }
    });
}

pub fn enumeration_matches_the_oracle(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr())| {
        let got: BTreeSet<History> = enumerate_consistent(&p).unwrap().into_iter().collect();
        let alpha: Vec<ActionName> = p.actions().into_iter().collect();
        let want: BTreeSet<History> = all_subsets(&alpha)
            .into_iter()
            .filter(|h| Assignment::enumerate(&universe(false)).any(|psi| consistent_under(h, &p, &psi)))
            .collect();
        prop_assert_eq!(got, want);
    });
}

pub fn safe_histories_match_the_oracle(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr(), q in expr())| {
        let s = spec(p, q);
        let an = ReconfigAnalysis::new(s.clone());
        let got: BTreeSet<History> = an.safe_histories().unwrap().into_iter().collect();
        let want: BTreeSet<History> = all_subsets(&an.alphabet()).into_iter().filter(|h| safe_oracle(&s, h)).collect();
        prop_assert_eq!(got, want);
    });
}

pub fn guideline_verdict_matches_the_oracle(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr(), q in expr(), mask in 0u8..8)| {
        let s = spec(p, q);
        let an = ReconfigAnalysis::new(s.clone());
        let forbidden: BTreeSet<ActionName> =
            alphabet().into_iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a).collect();
        let res = an.check_forbidden_guideline(&forbidden).unwrap();
        let violations: Vec<History> = all_subsets(&an.alphabet())
            .into_iter()
            .filter(|h| h.is_disjoint(&forbidden) && before_oracle(&s, h) && !safe_oracle(&s, h))
            .collect();
        prop_assert_eq!(res.pass, violations.is_empty());
        prop_assert_eq!(res.counterexample, violations.first().cloned());
    });
}

pub fn safe_specification_orders_forbidden_actions_after_r(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr(), q in expr(), mask in 1u8..8)| {
        let s = spec(p, q);
        let forbidden: BTreeSet<ActionName> =
            alphabet().into_iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a).collect();
        let safe = make_safe(&s, &forbidden);
        let mut alpha = alphabet();
        alpha.push(s.r.clone());
        for h in all_subsets(&alpha) {
            if h.is_disjoint(&forbidden) || h.contains(&s.r) {
                continue;
            }
            for psi in Assignment::enumerate(&universe(true)) {
                prop_assert!(!consistent_under(&h, &safe, &psi));
            }
        }
    });
}

pub type Property = (&'static str, fn(u32));

pub const PROPERTIES: &[Property] = &[
    (
        "consistency_condition_matches_the_oracle",
        consistency_condition_matches_the_oracle,
    ),
    (
        "enumeration_matches_the_oracle",
        enumeration_matches_the_oracle,
    ),
    (
        "safe_histories_match_the_oracle",
        safe_histories_match_the_oracle,
    ),
    (
        "guideline_verdict_matches_the_oracle",
        guideline_verdict_matches_the_oracle,
    ),
    (
        "safe_specification_orders_forbidden_actions_after_r",
        safe_specification_orders_forbidden_actions_after_r,
    ),
];
