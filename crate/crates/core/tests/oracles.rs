mod common;

#[test]
fn metrics_match_brute_force() {
    let n = common::check_metric_oracles(1, 1000).unwrap();
    assert!(n > 20_000);
}

#[test]
fn best_split_matches_exhaustive_enumeration() {
    assert_eq!(common::check_split_oracle(2, 200).unwrap(), 800);
}

#[test]
fn endpoint_trees_match_reference_trees() {
    common::check_lambda_endpoints(3, 50).unwrap();
}

#[test]
fn node_loss_is_affine_in_lambda() {
    common::check_affine_lambda(4, 500).unwrap();
}

#[test]
fn permutation_oracle_sanity() {
    assert_eq!(common::permutations(4).len(), 24);
    assert_eq!(common::ranks(&[3.0, 1.0, 1.0]), vec![3.0, 1.5, 1.5]);
    assert_eq!(common::kendall_tau_b(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
    assert_eq!(common::spearman_loss(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), 1.0);
}
