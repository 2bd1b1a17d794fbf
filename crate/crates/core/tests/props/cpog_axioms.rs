use std::collections::BTreeSet;

use proptest::prelude::*;
use wfreconf::boolean::{mk, Assignment, BoolExpr, BoolSyntax, VarName};
use wfreconf::cpog::{canonicalize, equivalent, parse_cpog, ActionName, CpogExpr};

const ACTIONS: [&str; 4] = ["a", "b", "c", "d"];
const VARS: [&str; 3] = ["x", "y", "z"];

type Graph = (BTreeSet<ActionName>, BTreeSet<(ActionName, ActionName)>);

fn cond() -> impl Strategy<Value = BoolExpr> {
    let leaf = prop_oneof![
        1 => any::<bool>().prop_map(BoolSyntax::Const),
        4 => prop::sample::select(VARS.to_vec()).prop_map(BoolSyntax::var),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(BoolSyntax::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolSyntax::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| BoolSyntax::or(a, b)),
        ]
    })
    .prop_map(|s| mk(&s))
}

fn expr() -> impl Strategy<Value = CpogExpr> {
    let leaf = prop_oneof![
        1 => Just(CpogExpr::Empty),
        6 => prop::sample::select(ACTIONS.to_vec()).prop_map(CpogExpr::action),
    ];
    leaf.prop_recursive(4, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(p, q)| CpogExpr::par(p, q)),
            (inner.clone(), inner.clone()).prop_map(|(p, q)| CpogExpr::seq(p, q)),
            (cond(), inner).prop_map(|(x, p)| CpogExpr::cond(x, p)),
        ]
    })
}

fn assignments() -> Vec<Assignment> {
    let universe: Vec<VarName> = VARS.iter().map(VarName::new).collect();
    Assignment::enumerate(&universe).collect()
}

fn graph(e: &CpogExpr, psi: &Assignment) -> Graph {
    match e {
        CpogExpr::Empty => Default::default(),
        CpogExpr::Action(a) => (BTreeSet::from([a.clone()]), BTreeSet::new()),
        CpogExpr::Parallel(p, q) | CpogExpr::Sequence(p, q) => {
            let (mut vp, mut ep) = graph(p, psi);
            let (vq, eq) = graph(q, psi);
            if matches!(e, CpogExpr::Sequence(..)) {
                for a in &vp {
                    for b in &vq {
                        ep.insert((a.clone(), b.clone()));
                    }
                }
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

fn closure(arcs: &BTreeSet<(ActionName, ActionName)>) -> BTreeSet<(ActionName, ActionName)> {
    let mut c = arcs.clone();
    loop {
        let mut add = Vec::new();
        for (a, b) in &c {
            for (b2, d) in &c {
                if b == b2 && !c.contains(&(a.clone(), d.clone())) {
                    add.push((a.clone(), d.clone()));
                }
            }
        }
        if add.is_empty() {
            return c;
        }
        c.extend(add);
    }
}

fn same_family(p: &CpogExpr, q: &CpogExpr) -> bool {
    assignments().iter().all(|psi| {
        let (gp, gq) = (graph(p, psi), graph(q, psi));
        gp.0 == gq.0 && closure(&gp.1) == closure(&gq.1)
    })
}

fn law(lhs: CpogExpr, rhs: CpogExpr) -> Result<(), TestCaseError> {
    prop_assert!(same_family(&lhs, &rhs), "oracle rejects {lhs} = {rhs}");
    prop_assert!(equivalent(&lhs, &rhs), "engine rejects {lhs} = {rhs}");
    Ok(())
}

use CpogExpr as E;

pub fn overlay_laws(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr(), q in expr(), r in expr())| {
        law(E::par(p.clone(), q.clone()), E::par(q.clone(), p.clone()))?;
        law(E::par(E::par(p.clone(), q.clone()), r.clone()), E::par(p.clone(), E::par(q.clone(), r.clone())))?;
        law(E::par(p.clone(), E::Empty), p.clone())?;
        law(E::par(p.clone(), p.clone()), p)?;
    });
}

pub fn sequence_laws(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr(), q in expr(), r in expr())| {
        law(E::seq(E::seq(p.clone(), q.clone()), r.clone()), E::seq(p.clone(), E::seq(q.clone(), r.clone())))?;
        law(E::seq(p.clone(), E::Empty), p.clone())?;
        law(E::seq(E::Empty, p.clone()), p.clone())?;
        law(E::seq(p.clone(), E::par(q.clone(), r.clone())), E::par(E::seq(p.clone(), q.clone()), E::seq(p.clone(), r.clone())))?;
        law(E::seq(E::par(p.clone(), q.clone()), r.clone()), E::par(E::seq(p.clone(), r.clone()), E::seq(q.clone(), r.clone())))?;
        law(
            E::seq(E::seq(p.clone(), q.clone()), r.clone()),
            E::par(E::par(E::seq(p.clone(), q.clone()), E::seq(p.clone(), r.clone())), E::seq(q, r)),
        )?;
    });
}

pub fn closure_law(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr(), r in expr(), q in prop::sample::select(ACTIONS.to_vec()))| {
        // With a nonempty middle, the direct dependency is implied.
        let q = E::action(q);
        law(
            E::par(E::par(E::seq(p.clone(), q.clone()), E::seq(p.clone(), r.clone())), E::seq(q.clone(), r.clone())),
            E::par(E::seq(p, q.clone()), E::seq(q, r)),
        )?;
    });
}

pub fn condition_laws(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr(), q in expr(), x in cond(), y in cond())| {
        law(E::cond(BoolExpr::tt(), p.clone()), p.clone())?;
        law(E::cond(BoolExpr::ff(), p.clone()), E::Empty)?;
        law(E::cond(x.clone(), E::Empty), E::Empty)?;
        law(E::cond(x.clone(), E::par(p.clone(), q.clone())), E::par(E::cond(x.clone(), p.clone()), E::cond(x.clone(), q.clone())))?;
        law(E::cond(x.clone(), E::seq(p.clone(), q.clone())), E::seq(E::cond(x.clone(), p.clone()), E::cond(x.clone(), q.clone())))?;
        law(E::cond(x.clone(), E::cond(y.clone(), p.clone())), E::cond(x.and(&y), p.clone()))?;
        law(E::cond(x.or(&y), p.clone()), E::par(E::cond(x.clone(), p.clone()), E::cond(y, p.clone())))?;
        law(E::par(E::cond(x.clone(), p.clone()), E::cond(x.not(), p.clone())), p)?;
    });
}

pub fn equivalence_agrees_with_the_graph_families(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr(), q in expr())| {
        prop_assert_eq!(equivalent(&p, &q), same_family(&p, &q));
    });
}

pub fn canonical_form_denotes_the_family(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr())| {
        let cf = canonicalize(&p);
        prop_assert!(cf.check_invariants().is_ok());
        for psi in assignments() {
            let (v, e) = graph(&p, &psi);
            let got_v: BTreeSet<ActionName> =
                cf.vertices.iter().filter(|(_, f)| f.eval(&psi).unwrap()).map(|(a, _)| a.clone()).collect();
            prop_assert_eq!(&got_v, &v);
            let got_e: BTreeSet<(ActionName, ActionName)> =
                cf.arcs.iter().filter(|(_, f)| f.eval(&psi).unwrap()).map(|(k, _)| k.clone()).collect();
            prop_assert_eq!(closure(&got_e), closure(&e));
        }
    });
}

pub fn closure_and_reduction_preserve_meaning(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr())| {
        let cf = canonicalize(&p);
        let (closed, reduced) = (cf.transitive_close(), cf.transitive_reduce());
        for psi in assignments() {
            let at = |f: &wfreconf::cpog::CanonicalForm| -> BTreeSet<(ActionName, ActionName)> {
                f.arcs.iter().filter(|(_, c)| c.eval(&psi).unwrap()).map(|(k, _)| k.clone()).collect()
            };
            let want = closure(&at(&cf));
            prop_assert_eq!(at(&closed), want.clone());
            prop_assert_eq!(closure(&at(&reduced)), want);
            prop_assert!(at(&reduced).is_subset(&at(&closed)));
        }
    });
}

pub fn printing_round_trips(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(p in expr())| {
        let (q, _) = parse_cpog(&p.to_string()).unwrap();
        prop_assert!(equivalent(&p, &q));
    });
}

pub type Property = (&'static str, fn(u32));

pub const PROPERTIES: &[Property] = &[
    ("overlay_laws", overlay_laws),
    ("sequence_laws", sequence_laws),
    ("closure_law", closure_law),
    ("condition_laws", condition_laws),
    (
        "equivalence_agrees_with_the_graph_families",
        equivalence_agrees_with_the_graph_families,
    ),
    (
        "canonical_form_denotes_the_family",
        canonical_form_denotes_the_family,
    ),
    (
        "closure_and_reduction_preserve_meaning",
        closure_and_reduction_preserve_meaning,
    ),
    ("printing_round_trips", printing_round_trips),
];
