use mtaar_core::problems::{
    appendix_example61, gen_gravity_default, gen_random_mtensor, gen_sine_symmetric, read_metadata, write_metadata,
};
use mtaar_core::{solve, Method, StoppingMode};

#[test]
fn sine_tensor_is_exactly_symmetric() {
    let inst = gen_sine_symmetric::<f64>(7).unwrap();
    let a = &inst.a;
    for i in 0..7 {
        for j in 0..7 {
            for k in 0..7 {
                let v = a.get(&[i, j, k]);
                assert_eq!(v, a.get(&[i, k, j]));
                assert_eq!(v, a.get(&[j, i, k]));
                assert_eq!(v, a.get(&[k, j, i]));
            }
        }
    }
    assert_eq!(a.symmetry_defect(), 0.0);
    assert!(inst.b.as_slice().iter().all(|&v| v == 1.0));
}

#[test]
fn gravity_tensor_pattern() {
    let inst = gen_gravity_default::<f64>(10).unwrap();
    let a = &inst.a;
    assert_eq!(a.order(), 4);
    assert_eq!(a.get(&[0, 0, 0, 0]), 1.0);
    assert_eq!(a.get(&[9, 9, 9, 9]), 1.0);
    assert_eq!(a.get(&[4, 4, 4, 4]), 2.0);
    assert!((a.get(&[4, 3, 4, 4]) + 1.0 / 3.0).abs() < 1e-15);
    assert!((a.get(&[4, 4, 5, 4]) + 1.0 / 3.0).abs() < 1e-15);
    assert!(a.is_z_tensor());
    // M(A) is diagonal, so all three preconditioners coincide.
    let maj = a.majorization_matrix();
    assert_eq!(maj, maj.diagonal_part());
}

#[test]
fn random_small_instance_sor_beats_jacobi() {
    let inst = gen_random_mtensor::<f64>(3, 10, 0.01, 1).unwrap();
    let run = |m| solve(&inst.a, &inst.b, &inst.config(m).with_tol(1e-12)).unwrap();
    let (j1, sor) = (run(Method::J1), run(Method::J1Sor));
    assert!(j1.converged && sor.converged);
    assert!(
        sor.iterations < j1.iterations,
        "sor {} vs j1 {}",
        sor.iterations,
        j1.iterations
    );
}

#[test]
fn random5_uses_absolute_stopping() {
    let inst = appendix_example61::<f64>(0).unwrap();
    assert_eq!(inst.stopping, StoppingMode::Absolute);
    assert_eq!(inst.tol, Some(1e-11));
    assert!(inst.b.as_slice().iter().all(|&v| v == 1.0));
    let r = solve(&inst.a, &inst.b, &inst.config(Method::Gs3)).unwrap();
    assert!(r.converged && (29..=37).contains(&r.iterations), "{}", r.iterations);
}

#[test]
fn metadata_sidecar_round_trip() {
    let inst = gen_gravity_default::<f64>(8).unwrap();
    let mut buf = Vec::new();
    write_metadata(&inst, &mut buf).unwrap();
    let back = read_metadata(inst.a.clone(), buf.as_slice()).unwrap();
    assert_eq!(back.label, inst.label);
    assert_eq!(back.b, inst.b);
    assert_eq!(back.probe, inst.probe);
    assert_eq!(back.params, inst.params);
}

/// Iteration counts on the (3,200) random instance stay inside the bands
/// allowed for a fresh random stream.
#[test]
fn random_200_baseline_iteration_bands() {
    let inst = gen_random_mtensor::<f64>(3, 200, 0.01, 0).unwrap();
    let bands = [
        (Method::J1, 900, 1250),
        (Method::J1Sor, 550, 850),
        (Method::J2, 840, 1260),
        (Method::Gs2, 426, 638),
        (Method::Fullm, 839, 1259),
    ];
    for (method, lo, hi) in bands {
        let r = solve(&inst.a, &inst.b, &inst.config(method)).unwrap();
        assert!(r.converged, "{method}");
        assert!(
            (lo..=hi).contains(&r.iterations),
            "{method}: {} not in [{lo}, {hi}]",
            r.iterations
        );
    }
}
