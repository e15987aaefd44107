mod common;

#[test]
fn backward_matches_finite_differences_on_20_random_nets() {
    let check = common::oracles::gradient_check(2024, 20);
    for line in &check.per_net {
        println!("{line}");
    }
    let frac = check.passed as f64 / check.total as f64;
    assert!(
        frac >= 0.95,
        "{}/{} coordinates agree",
        check.passed,
        check.total
    );
}
