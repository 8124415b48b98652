use nalgebra::DMatrix;
use proptest::prelude::*;

use nekrasov::classify::{
    self, classify, is_diag_dominant, is_z, nekrasov_profile, p_falsify_with, row_excess, spectral_radius_nonneg,
};
use nekrasov::generate::{generate, GeneratorSpec, TargetClass};
use nekrasov::transform::{decompose_plus, nekrasov_scaling, reconstructs_exactly, verify_decomposition};
use nekrasov::{Execution, Tensor};

/// Sparse tensors with dyadic entries `k/16`, so sums are exact.
fn tensor(orders: std::ops::RangeInclusive<usize>, dims: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Tensor> {
    (orders, dims).prop_flat_map(|(m, n)| {
        let len = n.pow(m as u32);
        prop::collection::vec(prop_oneof![2 => Just(0i32), 3 => -64i32..=64], len)
            .prop_map(move |k| Tensor::from_values(m, n, k.into_iter().map(|v| v as f64 / 16.0).collect()).unwrap())
    })
}

fn with_point(t: Tensor) -> impl Strategy<Value = (Tensor, Vec<f64>)> {
    let n = t.dim();
    (Just(t), prop::collection::vec(-2.0f64..2.0, n))
}

fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn apply_is_linear_in_the_tensor((a, x) in tensor(2..=4, 1..=4).prop_flat_map(with_point), seed in any::<u64>()) {
        let b = a.map(|v| if (v.to_bits() ^ seed) & 1 == 0 { -v } else { 0.5 * v });
        let sum = a.checked_add(&b).unwrap().apply(&x).unwrap();
        let ax = a.apply(&x).unwrap();
        let bx = b.apply(&x).unwrap();
        for i in 0..x.len() {
            prop_assert!(close(sum[i], ax[i] + bx[i], 1e-12, ax[i].abs() + bx[i].abs()));
        }
    }

    #[test]
    fn apply_is_homogeneous((t, x) in tensor(2..=5, 1..=3).prop_flat_map(with_point), c in -3.0f64..3.0) {
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let lhs = t.apply(&cx).unwrap();
        let rhs = t.apply(&x).unwrap();
        let f = c.powi(t.order() as i32 - 1);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!(close(*a, f * b, 1e-10, a.abs()));
        }
    }

    #[test]
    fn sequential_and_parallel_agree((t, x) in tensor(2..=4, 1..=5).prop_flat_map(with_point)) {
        prop_assert_eq!(t.apply_with(&x, Execution::Sequential).unwrap(), t.apply_with(&x, Execution::Parallel).unwrap());
        prop_assert_eq!(
            t.jacobian_with(&x, Execution::Sequential).unwrap(),
            t.jacobian_with(&x, Execution::Parallel).unwrap()
        );
        prop_assert_eq!(
            p_falsify_with(&t, 200, 3, Execution::Sequential),
            p_falsify_with(&t, 200, 3, Execution::Parallel)
        );
    }

    #[test]
    fn order_two_is_a_matrix((t, x) in tensor(2..=2, 1..=6).prop_flat_map(with_point)) {
        let n = t.dim();
        let m = DMatrix::from_row_slice(n, n, t.values());
        let y = &m * nalgebra::DVector::from_column_slice(&x);
        let got = t.apply(&x).unwrap();
        for i in 0..n {
            prop_assert!(close(got[i], y[i], 1e-12, y[i].abs()));
        }
        prop_assert_eq!(t.jacobian(&x).unwrap(), m);
    }

    #[test]
    fn scale_columns_composes(t in tensor(2..=4, 1..=4), seed in any::<u64>()) {
        let n = t.dim();
        let u: Vec<f64> = (0..n).map(|i| 0.5 + ((seed >> i) & 3) as f64 * 0.25).collect();
        let v: Vec<f64> = (0..n).map(|i| 0.25 + ((seed >> (i + 8)) & 7) as f64 * 0.125).collect();
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
        let twice = t.scale_columns(&u).unwrap().scale_columns(&v).unwrap();
        let once = t.scale_columns(&uv).unwrap();
        for (a, b) in twice.values().iter().zip(once.values()) {
            prop_assert!(close(*a, *b, 1e-14, b.abs()));
        }
    }

    #[test]
    fn comparison_is_idempotent_and_keeps_lambda(t in tensor(2..=4, 1..=4)) {
        let c = t.comparison();
        prop_assert_eq!(c.comparison(), c.clone());
        prop_assert!(is_z(&c));
        prop_assert_eq!(row_excess(&c), row_excess(&t));
        match (nekrasov_profile(&t), nekrasov_profile(&c)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.lambda, b.lambda),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn class_inclusions(t in tensor(2..=4, 1..=4)) {
        let r = classify(&t);
        if r.is_sdd {
            prop_assert!(r.is_dd);
            prop_assert!(r.is_nekrasov);
            let p = r.profile.as_ref().unwrap();
            for (l, e) in p.lambda.iter().zip(&r.row_excess) {
                prop_assert!(*l <= *e);
            }
        }
        if r.is_nekrasov_z {
            prop_assert!(r.is_z && r.is_nekrasov);
        }
        prop_assert_eq!(r.predicted_p, r.is_nekrasov_z && r.positive_diagonal && r.even_order);
    }

    #[test]
    fn classes_are_scale_invariant(t in tensor(2..=4, 1..=4), e in -4i32..4) {
        let c = 2f64.powi(e);
        let s = t.map(|v| c * v);
        let (a, b) = (classify(&t), classify(&s));
        prop_assert_eq!(
            (a.is_z, a.is_dd, a.is_sdd, a.is_nekrasov, a.predicted_p),
            (b.is_z, b.is_dd, b.is_sdd, b.is_nekrasov, b.predicted_p)
        );
        if let (Some(pa), Some(pb)) = (a.profile, b.profile) {
            for (x, y) in pa.lambda.iter().zip(&pb.lambda) {
                prop_assert!(close(c * x, *y, 1e-12, y.abs()));
            }
        }
    }

    #[test]
    fn decomposition_invariants(t in tensor(2..=4, 1..=4)) {
        let d = decompose_plus(&t);
        prop_assert!(reconstructs_exactly(&d, &t));
        prop_assert!(verify_decomposition(&d, &t).unwrap());
        prop_assert!(is_z(&d.b_plus));
        prop_assert!(d.c.values().iter().all(|v| *v >= 0.0));
        prop_assert!(d.r_plus.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn spectral_bracket_holds_rho(t in tensor(2..=2, 1..=5)) {
        let t = t.map(f64::abs);
        let n = t.dim();
        let e = spectral_radius_nonneg(&t, 1e-10, 20_000).unwrap();
        prop_assert!(e.lower <= e.upper);
        let rho = DMatrix::from_row_slice(n, n, t.values())
            .complex_eigenvalues()
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        let slack = 1e-7 * (1.0 + rho);
        prop_assert!(e.lower <= rho + slack && rho - slack <= e.upper, "{:?} vs {}", e, rho);
        if e.converged {
            prop_assert!((e.value - rho).abs() <= 1e-6 * (1.0 + rho));
        }
    }

    #[test]
    fn spectral_bracket_tightens_with_budget(t in tensor(3..=4, 1..=3)) {
        let t = t.map(f64::abs);
        let short = spectral_radius_nonneg(&t, 1e-14, 5).unwrap();
        let long = spectral_radius_nonneg(&t, 1e-14, 50).unwrap();
        prop_assert!(long.lower >= short.lower && long.upper <= short.upper);
    }
}

#[test]
fn scaling_theorem_on_generated_sdd_z() {
    for seed in 0..40 {
        let order = [2, 4][seed as usize % 2];
        let t = generate(&GeneratorSpec::new(order, 2 + seed as usize % 5, TargetClass::SddZ, seed)).unwrap();
        let w = nekrasov_scaling(&t).unwrap();
        let s = t.scale_columns(&w).unwrap();
        assert!(is_z(&s) && is_diag_dominant(&s, false), "seed {seed}");
        assert_eq!(classify::is_nonsingular_h(&t, 1e-9), classify::Verdict::Yes, "seed {seed}");
    }
}
