use proptest::prelude::*;
use wfreconf::boolean::{mk, parse_bool, Assignment, BoolExpr, BoolSyntax, VarName};

const VARS: usize = 8;

fn var(i: usize) -> VarName {
    VarName::new(format!("v{i}"))
}

fn syntax() -> impl Strategy<Value = BoolSyntax> {
    let leaf = prop_oneof![
        1 => any::<bool>().prop_map(BoolSyntax::Const),
        6 => (0..VARS).prop_map(|i| BoolSyntax::Var(var(i))),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(BoolSyntax::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolSyntax::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| BoolSyntax::or(a, b)),
        ]
    })
}

/// Direct evaluation of the syntax tree; bit `i` of `row` is `v{i}`.
fn oracle(s: &BoolSyntax, row: u32) -> bool {
    match s {
        BoolSyntax::Const(b) => *b,
        BoolSyntax::Var(v) => {
            let i: u32 = v.as_str()[1..].parse().unwrap();
            row & (1 << i) != 0
        }
        BoolSyntax::Not(e) => !oracle(e, row),
        BoolSyntax::And(a, b) => oracle(a, row) && oracle(b, row),
        BoolSyntax::Or(a, b) => oracle(a, row) || oracle(b, row),
    }
}

fn table(s: &BoolSyntax) -> Vec<bool> {
    (0..1u32 << VARS).map(|r| oracle(s, r)).collect()
}

fn assignment(row: u32) -> Assignment {
    Assignment::from_pairs((0..VARS).map(|i| (var(i), row & (1 << i) != 0)))
}

fn expr_table(e: &BoolExpr) -> Vec<bool> {
    (0..1u32 << VARS)
        .map(|r| e.eval(&assignment(r)).unwrap())
        .collect()
}

pub fn evaluation_matches_the_truth_table(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(s in syntax())| {
        prop_assert_eq!(expr_table(&mk(&s)), table(&s));
    });
}

pub fn equal_functions_have_equal_diagrams(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(a in syntax(), b in syntax())| {
        let (ea, eb) = (mk(&a), mk(&b));
        let same = table(&a) == table(&b);
        prop_assert_eq!(ea.equiv(&eb), same);
        prop_assert_eq!(ea == eb, same);
    });
}

pub fn classification(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(s in syntax())| {
        let t = table(&s);
        let e = mk(&s);
        prop_assert_eq!(e.is_false(), t.iter().all(|b| !b));
        prop_assert_eq!(e.is_tautology(), t.iter().all(|b| *b));
        prop_assert_eq!(e.is_satisfiable(), t.iter().any(|b| *b));
        if let Some(model) = e.any_sat() {
            let mut a = assignment(0);
            for (v, b) in model {
                a.set(v, b);
            }
            prop_assert!(e.eval(&a).unwrap());
        } else {
            prop_assert!(e.is_false());
        }
    });
}

pub fn connectives(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(a in syntax(), b in syntax())| {
        let (ta, tb) = (table(&a), table(&b));
        let (ea, eb) = (mk(&a), mk(&b));
        let zip = |f: fn(bool, bool) -> bool| -> Vec<bool> { ta.iter().zip(&tb).map(|(x, y)| f(*x, *y)).collect() };
        prop_assert_eq!(expr_table(&ea.and(&eb)), zip(|x, y| x && y));
        prop_assert_eq!(expr_table(&ea.or(&eb)), zip(|x, y| x || y));
        prop_assert_eq!(expr_table(&ea.xor(&eb)), zip(|x, y| x != y));
        prop_assert_eq!(expr_table(&ea.implies(&eb)), zip(|x, y| !x || y));
        prop_assert_eq!(expr_table(&ea.not()), ta.iter().map(|x| !x).collect::<Vec<_>>());
    });
}

pub fn restriction_and_quantification(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(s in syntax(), i in 0..VARS, value in any::<bool>())| {
        let t = table(&s);
        let e = mk(&s);
        let bit = 1u32 << i;
        let fixed = |r: u32, v: bool| if v { r | bit } else { r & !bit };
        let want: Vec<bool> = (0..1u32 << VARS).map(|r| t[fixed(r, value) as usize]).collect();
        prop_assert_eq!(expr_table(&e.restrict(&var(i), value)), want);
        let want: Vec<bool> = (0..1u32 << VARS).map(|r| t[fixed(r, false) as usize] || t[fixed(r, true) as usize]).collect();
        prop_assert_eq!(expr_table(&e.exists(&var(i))), want);
        prop_assert!(!e.restrict(&var(i), value).support().contains(&var(i)));
    });
}

pub fn printing_round_trips(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(s in syntax())| {
        let e = mk(&s);
        prop_assert_eq!(parse_bool(&e.to_string()).unwrap(), e);
    });
}

pub fn cover_denotes_the_function(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(s in syntax())| {
        let e = mk(&s);
        let cubes = e.cover();
        let want = table(&s);
        let got: Vec<bool> = (0..1u32 << VARS)
            .map(|r| {
                let a = assignment(r);
                cubes.iter().any(|cube| cube.iter().all(|(v, b)| a.get(v) == Some(*b)))
            })
            .collect();
        prop_assert_eq!(got, want);
    });
}

pub type Property = (&'static str, fn(u32));

pub const PROPERTIES: &[Property] = &[
    (
        "evaluation_matches_the_truth_table",
        evaluation_matches_the_truth_table,
    ),
    (
        "equal_functions_have_equal_diagrams",
        equal_functions_have_equal_diagrams,
    ),
    ("classification", classification),
    ("connectives", connectives),
    (
        "restriction_and_quantification",
        restriction_and_quantification,
    ),
    ("printing_round_trips", printing_round_trips),
    ("cover_denotes_the_function", cover_denotes_the_function),
];
