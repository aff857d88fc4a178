use mtaar_core::linalg::{lstsq_gamma, lu_solve, poly_eval, positive_root};
use mtaar_core::problems::gen_random_mtensor;
use mtaar_core::tensor::{read_tensor, write_tensor};
use mtaar_core::{DenseMatrix, DenseTensor, Part, Vector};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=5, 1usize..=5)
}

fn tensor_and_vector() -> impl Strategy<Value = (DenseTensor<f64>, Vec<f64>)> {
    shape().prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(-1.0f64..1.0, n.pow(m as u32)),
            prop::collection::vec(-2.0f64..2.0, n),
        )
            .prop_map(move |(data, x)| (DenseTensor::new(m, n, data).unwrap(), x))
    })
}

/// Brute-force `A x^{m-1}` straight from the index definition.
fn contract_by_definition(a: &DenseTensor<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.dim()];
    a.for_each_indexed(|idx, v| {
        out[idx[0]] += v * idx[1..].iter().map(|&j| x[j]).product::<f64>();
    });
    out
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn telescoping_identity(m in 2usize..=6, pairs in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..8)) {
        let y = Vector::from_fn(pairs.len(), |i| pairs[i].0);
        let z = Vector::from_fn(pairs.len(), |i| pairs[i].1);
        let e = (m - 1) as f64;
        let lhs = y.elementwise_pow(e).sub(&z.elementwise_pow(e));
        for i in 0..y.len() {
            let sum: f64 = (0..m - 1).map(|j| y[i].powi((m - 2 - j) as i32) * z[i].powi(j as i32)).sum();
            prop_assert!((lhs[i] - (y[i] - z[i]) * sum).abs() <= 1e-10);
        }
    }

    #[test]
    fn xm1_matches_index_definition((a, x) in tensor_and_vector()) {
        let got = a.apply_xm1(&x).unwrap();
        prop_assert!(max_abs_diff(&got, &contract_by_definition(&a, &x)) <= 1e-12);
    }

    #[test]
    fn xm2_times_x_is_xm1((a, x) in tensor_and_vector()) {
        let via_matrix = a.apply_xm2(&x).unwrap().mul_vec(&x);
        prop_assert!(max_abs_diff(&via_matrix, &a.apply_xm1(&x).unwrap()) <= 1e-12);
    }

    #[test]
    fn mode_product_chain_is_xm1((a, x) in tensor_and_vector()) {
        let mut t = a.clone();
        for k in (2..=a.order()).rev() {
            t = t.mode_product(k, &x).unwrap();
            prop_assert_eq!(t.order(), k - 1);
        }
        prop_assert!(max_abs_diff(t.as_slice(), &a.apply_xm1(&x).unwrap()) <= 1e-12);
    }

    #[test]
    fn identity_tensor_powers((m, n) in shape(), seed in prop::collection::vec(-3.0f64..3.0, 5)) {
        let x = &seed[..n];
        let got = DenseTensor::<f64>::identity(m, n).unwrap().apply_xm1(x).unwrap();
        for i in 0..n {
            prop_assert!((got[i] - x[i].powi(m as i32 - 1)).abs() <= 1e-12 * (1.0 + got[i].abs()));
        }
    }

    #[test]
    fn majorization_reads_constant_tails((a, _) in tensor_and_vector()) {
        let maj = a.majorization_matrix();
        let m = a.order();
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                let mut idx = vec![j; m];
                idx[0] = i;
                prop_assert_eq!(maj[(i, j)], a.get(&idx));
            }
        }
    }

    #[test]
    fn lower_half_contains_other_parts((a, _) in tensor_and_vector()) {
        let half = a.extract_part(Part::LowerHalf);
        for part in [Part::Diagonal, Part::LowerTriangular, Part::DiagonalFace] {
            let p = a.extract_part(part);
            for (k, &v) in p.as_slice().iter().enumerate() {
                prop_assert!(v == 0.0 || v == half.as_slice()[k]);
            }
        }
    }

    #[test]
    fn tensor_text_round_trip((a, _) in tensor_and_vector()) {
        let mut buf = Vec::new();
        write_tensor(&a, &mut buf).unwrap();
        let back: DenseTensor<f64> = read_tensor(buf.as_slice()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn elementwise_pow_round_trip(xs in prop::collection::vec(0.0f64..100.0, 1..10), m in 2usize..=6) {
        let x = Vector::from_fn(xs.len(), |i| xs[i]);
        let e = (m - 1) as f64;
        let back = x.elementwise_pow(e).elementwise_pow(1.0 / e);
        for i in 0..x.len() {
            prop_assert!((back[i] - x[i]).abs() <= 1e-12 * (1.0 + x[i]));
        }
    }

    #[test]
    fn positive_root_solves_mtensor_rows(
        lead in 0.1f64..10.0,
        lower in prop::collection::vec(-1.0f64..=0.0, 1..5),
        target in 0.0f64..10.0,
    ) {
        // Leading coefficient positive, the rest nonpositive: one positive
        // root for any target >= p(0).
        let mut coeffs = lower.clone();
        coeffs.push(lead);
        let t = positive_root(&coeffs, target, 1.0).unwrap();
        prop_assert!(t >= 0.0);
        let (p, _) = poly_eval(&coeffs, t);
        prop_assert!((p - target).abs() <= 1e-9 * (1.0 + target.abs()));
    }

    #[test]
    fn lu_residual_is_small(n in 1usize..8, data in prop::collection::vec(-1.0f64..1.0, 64), rhs in prop::collection::vec(-5.0f64..5.0, 8)) {
        let a = DenseMatrix::from_fn(n, n, |i, j| data[i * 8 + j] + if i == j { n as f64 + 1.0 } else { 0.0 });
        let x = lu_solve(&a, &rhs[..n]).unwrap();
        prop_assert!(max_abs_diff(&a.mul_vec(&x), &rhs[..n]) <= 1e-10);
    }

    #[test]
    fn lstsq_satisfies_normal_equations(cols in 1usize..5, data in prop::collection::vec(-1.0f64..1.0, 40), r in prop::collection::vec(-1.0f64..1.0, 10)) {
        let rows = 10;
        let hist = DenseMatrix::from_fn(rows, cols, |i, j| data[i * 4 + j]);
        let gamma = lstsq_gamma(&hist, &r, cols).unwrap();
        let fit = hist.mul_vec_leading(&gamma, cols);
        let resid = Vector::from_fn(rows, |i| fit[i] - r[i]);
        let normal = hist.tr_mul_vec_leading(&resid, cols);
        prop_assert!(normal.norm_inf() <= 1e-9);
    }

    #[test]
    fn random_generator_gives_certified_mtensors(m in 2usize..=4, n in 2usize..=6, eps in 0.01f64..1.0, seed in any::<u64>()) {
        let inst = gen_random_mtensor::<f64>(m, n, eps, seed).unwrap();
        prop_assert!(inst.a.is_z_tensor());
        prop_assert!(inst.a.verify_nonsingular_m_tensor(&vec![1.0; n]).unwrap());
        prop_assert!(inst.b.is_strictly_positive());
        let again = gen_random_mtensor::<f64>(m, n, eps, seed).unwrap();
        prop_assert_eq!(again.a, inst.a);
        prop_assert_eq!(again.b, inst.b);
    }
}
