mod common;

use common::*;
use spectral_gnn::ModelKind;

#[test]
fn identity_kernel_reconstructs_source() {
    check_identity_reconstruction().unwrap();
}

#[test]
fn gradients_match_finite_differences() {
    for kind in ModelKind::ALL {
        for seed in 0..10 {
            let e = gradient_error(kind, seed);
            assert!(e <= 1e-4, "{kind} seed {seed}: {e:e}");
        }
    }
}

#[test]
fn sensing_form_matches_forward() {
    check_sensing_identity().unwrap();
}

#[test]
fn low_rank_kernel_and_propagated_linear_coincide() {
    check_equivalence_chain().unwrap();
}

#[test]
fn separable_blocks_are_learned_exactly() {
    check_sbm_separable().unwrap();
}
