use std::collections::BTreeSet;

use proptest::prelude::*;
use wfreconf::ccsdp::{Ccs, Env, Label, Name, Prefix, Proc};

#[derive(Debug, Clone)]
pub enum Tree {
    Leaf(Proc),
    Par(Box<Tree>, Box<Tree>),
}

impl Tree {
    pub fn proc(&self) -> Proc {
        match self {
            Tree::Leaf(p) => p.clone(),
            Tree::Par(l, r) => Proc::par(vec![l.proc(), r.proc()]),
        }
    }

    fn of(p: &Proc) -> Tree {
        let comps = p.components();
        match comps.len() {
            0 => Tree::Leaf(Proc::Nil),
            _ => comps[1..]
                .iter()
                .fold(Tree::Leaf(comps[0].clone()), |t, c| {
                    Tree::Par(Box::new(t), Box::new(Tree::Leaf(c.clone())))
                }),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Lab {
    Tau,
    Vis(Name),
    Create(Proc),
    Delete(Proc),
}

fn par(l: &Tree, r: &Tree) -> Tree {
    Tree::Par(Box::new(l.clone()), Box::new(r.clone()))
}

pub fn literal(ccs: &Ccs, t: &Tree) -> Vec<(Lab, Tree)> {
    let mut out = Vec::new();
    let whole = t.proc();
    if ccs.is_positive(&whole).unwrap() {
        out.push((Lab::Delete(whole.clone()), Tree::Leaf(Proc::Nil)));
    }
    match t {
        Tree::Leaf(Proc::Sum(ss)) => {
            for (pre, cont) in ss.iter() {
                let l = match pre {
                    Prefix::Tau => Lab::Tau,
                    Prefix::Vis(n) => Lab::Vis(n.clone()),
                };
                out.push((l, Tree::of(cont)));
            }
        }
        Tree::Leaf(Proc::Frac(n, d)) => {
            if ccs.is_positive(d).unwrap() {
                out.push((Lab::Create((**d).clone()), Tree::of(n)));
            }
        }
        Tree::Leaf(_) => {}
        Tree::Par(p, q) => {
            let lp = literal(ccs, p);
            let lq = literal(ccs, q);
            for (l, p2) in &lp {
                out.push((l.clone(), par(p2, q)));
            }
            for (l, q2) in &lq {
                out.push((l.clone(), par(p, q2)));
            }
            for (a, p2) in &lp {
                for (b, q2) in &lq {
                    let react = match (a, b) {
                        (Lab::Vis(x), Lab::Vis(y)) => *y == x.complement(),
                        (Lab::Create(d), Lab::Delete(r)) | (Lab::Delete(r), Lab::Create(d)) => {
                            ccs.strong_of_bisim(d, r).unwrap()
                        }
                        _ => false,
                    };
                    if react {
                        out.push((Lab::Tau, par(p2, q2)));
                    }
                }
            }
            // A fraction on one side deletes processes on both sides.
            for (a, p1) in &lp {
                let Lab::Delete(r1) = a else { continue };
                for (b, q1) in &lq {
                    let Lab::Delete(r2) = b else { continue };
                    let both = Proc::par(vec![r1.clone(), r2.clone()]);
                    for (c, p2) in literal(ccs, p1) {
                        if matches!(&c, Lab::Create(r) if ccs.strong_of_bisim(r, &both).unwrap()) {
                            out.push((Lab::Tau, par(&p2, q1)));
                        }
                    }
                    for (c, q2) in literal(ccs, q1) {
                        if matches!(&c, Lab::Create(r) if ccs.strong_of_bisim(r, &both).unwrap()) {
                            out.push((Lab::Tau, par(p1, &q2)));
                        }
                    }
                }
            }
        }
    }
    // Consecutive deletions compose into one.
    let direct: Vec<(Proc, Tree)> = out
        .iter()
        .filter_map(|(l, t2)| match l {
            Lab::Delete(r) => Some((r.clone(), t2.clone())),
            _ => None,
        })
        .collect();
    for (r1, t1) in direct {
        for (l, t2) in literal(ccs, &t1) {
            if let Lab::Delete(r2) = l {
                out.push((Lab::Delete(Proc::par(vec![r1.clone(), r2])), t2));
            }
        }
    }
    out
}

fn visible_set(ccs: &Ccs, moves: impl Iterator<Item = (Label, Proc)>) -> BTreeSet<(Label, Proc)> {
    moves
        .map(|(l, p)| {
            let l = match l {
                Label::Create(d) => Label::Create(ccs.normalize(&d).unwrap()),
                other => other,
            };
            (l, ccs.normalize(&p).unwrap())
        })
        .collect()
}

fn name() -> impl Strategy<Value = Name> {
    (prop::sample::select(vec!["a", "b", "c"]), any::<bool>()).prop_map(|(l, out)| {
        if out {
            Name::output(l)
        } else {
            Name::input(l)
        }
    })
}

fn sequential() -> impl Strategy<Value = Proc> {
    let prefix = prop_oneof![4 => name().prop_map(Prefix::Vis), 1 => Just(Prefix::Tau)];
    let cont = prop_oneof![2 => Just(Proc::Nil), 1 => name().prop_map(|n| Proc::act(n, Proc::Nil))];
    prop::collection::vec((prefix, cont), 1..3).prop_map(Proc::sum)
}

fn fraction() -> impl Strategy<Value = Proc> {
    let numerator = prop_oneof![
        Just(Proc::Nil),
        sequential(),
        (sequential(), sequential()).prop_map(|(a, b)| Proc::par(vec![a, b])),
    ];
    let denominator = prop_oneof![
        sequential(),
        (sequential(), sequential()).prop_map(|(a, b)| Proc::par(vec![a, b]))
    ];
    (numerator, denominator).prop_map(|(n, d)| Proc::frac(n, d))
}

fn leaf() -> impl Strategy<Value = Proc> {
    prop_oneof![2 => sequential(), 1 => fraction()]
}

/// Leaves often repeat so that denominators find matching targets.
fn term() -> impl Strategy<Value = Tree> {
    (
        prop::collection::vec(leaf(), 1..4),
        prop::collection::vec(0usize..8, 4),
        prop::collection::vec(any::<u8>(), 3),
    )
        .prop_map(|(pool, picks, shape)| {
            let mut items: Vec<Tree> = picks
                .iter()
                .map(|i| Tree::Leaf(pool[i % pool.len()].clone()))
                .collect();
            let take = 1 + (shape[0] as usize % 4);
            items.truncate(take);
            let mut k = 0;
            while items.len() > 1 {
                let i = shape[k % shape.len()] as usize % (items.len() - 1);
                k += 1;
                let r = items.remove(i + 1);
                let l = items.remove(i);
                items.insert(i, Tree::Par(Box::new(l), Box::new(r)));
            }
            items.pop().expect("nonempty")
        })
}

fn targeted_term() -> impl Strategy<Value = Tree> {
    // A fraction whose denominator is built from leaves that are present.
    (
        prop::collection::vec(sequential(), 1..4),
        prop::collection::vec(0usize..4, 1..3),
        sequential(),
        any::<u8>(),
    )
        .prop_map(|(others, targets, n, shape)| {
            let d: Vec<Proc> = targets
                .iter()
                .map(|i| others[i % others.len()].clone())
                .collect();
            let frac = Proc::frac(n, Proc::par(d));
            let mut items: Vec<Tree> = others.into_iter().map(Tree::Leaf).collect();
            items.insert(shape as usize % (items.len() + 1), Tree::Leaf(frac));
            let mut s = shape as usize;
            while items.len() > 1 {
                let i = s % (items.len() - 1);
                s = s / 2 + 1;
                let r = items.remove(i + 1);
                let l = items.remove(i);
                items.insert(i, Tree::Par(Box::new(l), Box::new(r)));
            }
            items.pop().expect("nonempty")
        })
}

pub fn compare(t: &Tree) -> Result<(), TestCaseError> {
    let ccs = Ccs::new(Env::default());
    let lit = literal(&ccs, t).into_iter().filter_map(|(l, t2)| {
        let l = match l {
            Lab::Tau => Label::Tau,
            Lab::Vis(n) => Label::Vis(n),
            Lab::Create(d) => Label::Create(d),
            Lab::Delete(_) => return None,
        };
        Some((l, t2.proc()))
    });
    let want = visible_set(&ccs, lit);
    let got = visible_set(&ccs, ccs.transitions(&t.proc()).unwrap().iter().cloned());
    prop_assert_eq!(got, want, "term {}", t.proc());
    Ok(())
}

pub fn fused_steps_match_the_literal_rules(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(t in term())| {
        compare(&t)?;
    });
}

pub fn fused_steps_match_the_literal_rules_with_live_targets(cases: u32) {
    proptest!(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }, |(t in targeted_term())| {
        compare(&t)?;
    });
}

pub type Property = (&'static str, fn(u32));

pub const PROPERTIES: &[Property] = &[
    (
        "fused_steps_match_the_literal_rules",
        fused_steps_match_the_literal_rules,
    ),
    (
        "fused_steps_match_the_literal_rules_with_live_targets",
        fused_steps_match_the_literal_rules_with_live_targets,
    ),
];
