#[path = "support/gradcheck.rs"]
mod gradcheck;

use gradcheck::{check, REL_TOL};

fn run(conv2_activation: bool) {
    let r = check(conv2_activation);
    println!(
        "conv2_activation={conv2_activation}: {} parameters ({} one-sided), worst relative error {:.2e} at {}",
        r.checked, r.one_sided, r.worst_relative_error, r.worst
    );
    assert!(r.worst_relative_error < REL_TOL, "{}", r.worst);
}

#[test]
fn gradients_match_finite_differences() {
    run(false);
}

#[test]
fn gradients_match_finite_differences_with_second_activation() {
    run(true);
}
