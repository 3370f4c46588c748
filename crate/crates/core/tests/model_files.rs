//! The shipped model files must parse to exactly the builder specs.

use davies_lab::model::{cluster_state, ising_chain, parse_ham};

#[test]
fn shipped_ising_matches_builder() {
    let text = include_str!("../../../docs/models/ising.ham");
    let parsed = parse_ham(text).unwrap();
    let built = ising_chain(1.0, 0.5);
    assert_eq!(parsed.range, built.range);
    assert_eq!(parsed.terms.len(), built.terms.len());
    for (a, b) in parsed.terms.iter().zip(&built.terms) {
        assert!(a.matrix.approx_eq(&b.matrix, 0.0), "term {} differs", a.label);
    }
    assert!(parsed.validate_commuting(5).unwrap().ok);
}

#[test]
fn shipped_cluster_matches_builder() {
    let text = include_str!("../../../docs/models/cluster.ham");
    let parsed = parse_ham(text).unwrap();
    let built = cluster_state();
    assert_eq!(parsed.range, built.range);
    assert!(parsed.terms[0].matrix.approx_eq(&built.terms[0].matrix, 0.0));
    assert!(parsed.validate_commuting(6).unwrap().ok);
}
