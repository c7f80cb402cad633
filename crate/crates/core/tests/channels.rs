mod common;

use common::*;
use nalgebra::DMatrix;
use qudit_teleport::channels::{
    build_channel, local_product_unitary, random_global_unitary, ChannelSpec, GlobalUnitary,
};
use qudit_teleport::weyl::weyl_v;
use qudit_teleport::{BellLabel, C64};

/// Rank of `Υ` across the split (pair 1 | pair 2) of a two-qudit operator:
/// realign `Υ[(i1 i2), (j1 j2)]` into `R[(i1 j1), (i2 j2)]` and count
/// singular values above `tol`.
fn operator_schmidt_rank(u: &GlobalUnitary, tol: f64) -> usize {
    let d = u.d();
    let m = u.matrix();
    let r = DMatrix::<C64>::from_fn(d * d, d * d, |row, col| {
        let (i1, j1) = (row / d, row % d);
        let (i2, j2) = (col / d, col % d);
        m[(i1 * d + i2, j1 * d + j2)]
    });
    r.singular_values().iter().filter(|&&s| s > tol).count()
}

#[test]
fn haar_unitaries_are_genuinely_nonlocal() {
    for d in 2..=4 {
        for seed in 0..5 {
            let u = random_global_unitary(d, 2, seed).unwrap();
            assert_eq!(operator_schmidt_rank(&u, 1e-8), d * d, "d={d} seed={seed}");
        }
    }
}

#[test]
fn local_products_have_schmidt_rank_one() {
    for d in 2..=4 {
        let parts = [
            weyl_v(d, BellLabel::new(1, 0)).unwrap(),
            random_global_unitary(d, 1, 3).unwrap().operator().clone(),
        ];
        let u = local_product_unitary(&parts).unwrap();
        assert_eq!(operator_schmidt_rank(&u, 1e-8), 1);
    }
}

#[test]
fn haar_first_moment() {
    // E|U_ij|^2 = 1/N for every entry.
    let (d, n) = (3, 1);
    let trials = 4000;
    let mut mean = vec![0.0; 9];
    for seed in 0..trials {
        let u = random_global_unitary(d, n, seed).unwrap();
        for (acc, z) in mean.iter_mut().zip(u.matrix().data()) {
            *acc += z.norm_sqr() / trials as f64;
        }
    }
    // Var|U_ij|^2 = (N-1)/(N^2 (N+1)) = 1/18; 6 sigma of the mean is ~0.022.
    assert!(
        mean.iter().all(|m| (m - 1.0 / 3.0).abs() < 0.022),
        "{mean:?}"
    );
}

#[test]
fn ges_channel_matches_naive_construction() {
    let (d, n) = (3, 2);
    let upsilon = random_global_unitary(d, n, 5).unwrap();
    let omega = random_global_unitary(d, n, 6).unwrap();
    let offsets = vec![BellLabel::new(2, 1), BellLabel::new(0, 2)];
    let spec =
        ChannelSpec::ges2(d, n, upsilon.clone(), omega.clone()).with_offsets(offsets.clone());
    let got = build_channel(&spec).unwrap();

    let mut want = tensor(&bell(d, 2, 1), &bell(d, 0, 2));
    want = apply(&want, d, 4, &[0, 2], &to_dense(upsilon.matrix()));
    want = apply(&want, d, 4, &[1, 3], &to_dense(omega.matrix()));
    assert!(max_vec_diff(got.amps(), &want) < 1e-12);
}

#[test]
fn alice_side_weyl_equals_bob_side_weyl_with_negated_shift() {
    // V(k,l)_A |Φ00> ∝ V(k,-l)_B |Φ00>.
    for d in 2..=5 {
        let phi = bell(d, 0, 0);
        for label in BellLabel::all(d) {
            let a = apply(&phi, d, 2, &[0], &v_matrix(d, label.k, label.l));
            let b = bell(d, label.k, (d - label.l) % d);
            assert!(1.0 - overlap(&a, &b) < 1e-12, "d={d} {label:?}");
        }
    }
}
