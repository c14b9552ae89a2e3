mod common;

use bnlu_core::diet::gradient_check;
use common::toy_model;

#[test]
fn analytic_gradients_match_central_differences() {
    let (model, batch) = toy_model();
    let report = gradient_check(&model, &batch, 20, 1e-4, 3).unwrap();
    let blocks: Vec<&str> = report.iter().map(|b| b.block.as_str()).collect();
    for expected in [
        "dense_projection",
        "encoder.final",
        "encoder.layer0",
        "encoder.layer1",
        "entity",
        "intent",
        "sparse_projection",
    ] {
        assert!(blocks.contains(&expected), "missing block {expected}");
    }
    for b in &report {
        println!("{:<20} samples={:<3} max_rel_err={:.2e}", b.block, b.samples, b.max_relative_error);
        assert!(b.samples >= 20, "{} sampled only {}", b.block, b.samples);
        assert!(b.max_relative_error < 1e-3, "{}: relative error {}", b.block, b.max_relative_error);
    }
}
