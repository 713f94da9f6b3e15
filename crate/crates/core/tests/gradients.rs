//! Hand-derived backward passes against central finite differences.

mod common;

use common::gradcheck::*;

const INSTANCES: usize = 100;

#[test]
fn elu_backward_matches_finite_differences() {
    let e = elu_sweep(INSTANCES, 11);
    assert!(e <= 1e-5, "{e}");
}

#[test]
fn dense_backward_matches_finite_differences() {
    let e = dense_sweep(INSTANCES, 12);
    assert!(e <= 1e-5, "{e}");
}

#[test]
fn bptt_matches_finite_differences() {
    let e = recurrent_sweep(INSTANCES, 13);
    assert!(e <= 1e-5, "{e}");
}

#[test]
fn conv2d_backward_matches_finite_differences() {
    let e = conv_sweep(INSTANCES, 14);
    assert!(e <= 1e-5, "{e}");
}

#[test]
fn residual_block_backward_matches_finite_differences() {
    let e = residual_sweep(INSTANCES, 15);
    assert!(e <= 1e-5, "{e}");
}

#[test]
fn ctc_gradient_matches_finite_differences() {
    let e = ctc_sweep(INSTANCES, 16);
    assert!(e <= 1e-5, "{e}");
}

#[test]
fn tiny_network_gradient_matches_finite_differences() {
    let (e, params) = network_sweep(INSTANCES, 17);
    assert!(params <= 500, "{params}");
    assert!(e <= 1e-4, "{e}");
}
