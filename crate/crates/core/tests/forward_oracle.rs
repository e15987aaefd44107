mod common;

#[test]
fn forward_pass_is_bit_exact_against_scalar_loops() {
    common::oracles::forward_oracle(77, 10).unwrap();
}

#[test]
fn forward_oracle_holds_on_more_seeds() {
    for seed in 1..6 {
        common::oracles::forward_oracle(seed, 10).unwrap();
    }
}
