//! The decision-diagram engine against truth tables over up to 8 variables.

#[path = "props/boolean_props.rs"]
#[allow(dead_code)]
mod suite;

const CASES: u32 = 300;

#[test]
fn evaluation_matches_the_truth_table() {
    suite::evaluation_matches_the_truth_table(CASES);
}

#[test]
fn equal_functions_have_equal_diagrams() {
    suite::equal_functions_have_equal_diagrams(CASES);
}

#[test]
fn classification() {
    suite::classification(CASES);
}

#[test]
fn connectives() {
    suite::connectives(CASES);
}

#[test]
fn restriction_and_quantification() {
    suite::restriction_and_quantification(CASES);
}

#[test]
fn printing_round_trips() {
    suite::printing_round_trips(CASES);
}

#[test]
fn cover_denotes_the_function() {
    suite::cover_denotes_the_function(CASES);
}
