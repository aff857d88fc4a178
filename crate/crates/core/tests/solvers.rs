use mtaar_core::problems::{appendix_problem3, gen_random_mtensor, gen_sine_symmetric};
use mtaar_core::splitting::{solve_sorlike, SorPart};
use mtaar_core::taar::{tar_step, tr_step, StepKind, TaarState};
use mtaar_core::{
    build_preconditioner, flops_per_iteration, solve, DenseTensor, Error, FlopsModel, Method, PrecondKind,
    SolverConfig, StopReason, StoppingMode, Vector,
};

fn identity_problem() -> (DenseTensor<f64>, Vector<f64>) {
    (
        DenseTensor::identity(3, 2).unwrap(),
        Vector::from_f64_slice(&[4.0, 9.0]),
    )
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

#[test]
fn identity_tensor_one_step_methods() {
    let (a, b) = identity_problem();
    for method in [Method::J1, Method::Gs1, Method::J3, Method::Gs3, Method::Fullm] {
        let r = solve(&a, &b, &SolverConfig::new(method)).unwrap();
        assert!(r.converged, "{method}");
        assert_eq!(r.iterations, 1, "{method}");
        assert!(close(&r.solution, &[2.0, 3.0], 1e-14), "{method}: {:?}", r.solution);
    }
}

#[test]
fn exact_start_needs_no_iterations() {
    let (a, b) = identity_problem();
    for method in [Method::J1, Method::J2, Method::Gs2, Method::Newton, Method::Taar] {
        let cfg = SolverConfig::new(method).with_x0(Vector::from_f64_slice(&[2.0, 3.0]));
        let r = solve(&a, &b, &cfg).unwrap();
        assert_eq!(r.iterations, 0, "{method}");
        assert!(r.converged);
        assert_eq!(r.residual_history.len(), 1);
    }
}

#[test]
fn lower_triangular_tensor_solved_by_gs1_in_one_step() {
    let full = gen_random_mtensor::<f64>(3, 4, 0.2, 3).unwrap();
    let a = full.a.extract_part(mtaar_core::Part::LowerTriangular);
    let r = solve(&a, &full.b, &SolverConfig::new(Method::Gs1)).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 1);
}

#[test]
fn history_and_flops_ledger() {
    let inst = gen_random_mtensor::<f64>(3, 6, 0.1, 11).unwrap();
    for method in [
        Method::J1,
        Method::J1Sor,
        Method::J2,
        Method::Gs2,
        Method::Gs3,
        Method::Fullm,
        Method::Taar,
    ] {
        let r = solve(&inst.a, &inst.b, &inst.config(method)).unwrap();
        assert!(r.converged, "{method}");
        assert_eq!(r.residual_history.len(), r.iterations + 1);
        assert_eq!(r.cumulative_flops.len(), r.iterations + 1);
        let fpi = FlopsModel::new(3, 6).per_iteration(method, PrecondKind::Pf);
        for (k, &f) in r.cumulative_flops.iter().enumerate() {
            assert_eq!(f, k as u64 * fpi, "{method} at {k}");
        }
        assert_eq!(r.residual_history[0], 1.0);
        assert!(*r.residual_history.last().unwrap() <= 1e-8);
    }
}

#[test]
fn iteration_cap_reports_not_converged() {
    let inst = gen_random_mtensor::<f64>(3, 10, 0.01, 2).unwrap();
    let r = solve(&inst.a, &inst.b, &inst.config(Method::J1).with_max_iter(5)).unwrap();
    assert!(!r.converged);
    assert_eq!(r.stop_reason, StopReason::MaxIterations);
    assert_eq!(r.iterations, 5);
    assert_eq!(r.residual_history.len(), 6);
}

#[test]
fn j1_matches_j3_iterates() {
    let inst = gen_random_mtensor::<f64>(4, 5, 0.1, 5).unwrap();
    let run = |m| solve(&inst.a, &inst.b, &inst.config(m).recording_iterates()).unwrap();
    let (j1, j3) = (run(Method::J1), run(Method::J3));
    assert_eq!(j1.iterations, j3.iterations);
    for (x, y) in j1.iterates.unwrap().iter().zip(&j3.iterates.unwrap()) {
        assert!(close(x, y, 1e-12));
    }
}

#[test]
fn sor_with_zero_omega_is_jacobi() {
    let inst = gen_random_mtensor::<f64>(3, 5, 0.1, 8).unwrap();
    let mut cfg = inst.config(Method::J1Sor).recording_iterates();
    cfg.omega = Some(0.0);
    let sor = solve_sorlike(&inst.a, &inst.b, &cfg, SorPart::Diagonal).unwrap();
    let j1 = solve(&inst.a, &inst.b, &inst.config(Method::J1).recording_iterates()).unwrap();
    assert_eq!(sor.iterations, j1.iterations);
    assert_eq!(sor.iterates, j1.iterates);

    let gs1 = solve(&inst.a, &inst.b, &inst.config(Method::Gs1).recording_iterates()).unwrap();
    let gsor = solve_sorlike(&inst.a, &inst.b, &cfg, SorPart::Lower).unwrap();
    assert_eq!(gsor.iterates, gs1.iterates);
}

#[test]
fn sor_rejects_omega_outside_range() {
    let inst = gen_random_mtensor::<f64>(3, 4, 0.1, 8).unwrap();
    let mut cfg = inst.config(Method::J1Sor);
    cfg.omega = Some(1e6);
    assert!(matches!(solve(&inst.a, &inst.b, &cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn newton_rejects_nonsymmetric_tensor() {
    let inst = gen_random_mtensor::<f64>(3, 4, 0.1, 1).unwrap();
    let err = solve(&inst.a, &inst.b, &inst.config(Method::Newton)).unwrap_err();
    assert!(matches!(err, Error::NotSymmetric { .. }), "{err}");
}

#[test]
fn newton_converges_quadratically_on_sine() {
    let inst = gen_sine_symmetric::<f64>(50).unwrap();
    let r = solve(&inst.a, &inst.b, &inst.config(Method::Newton)).unwrap();
    assert!(r.converged && r.iterations <= 8, "{}", r.iterations);
    let h = &r.residual_history;
    let k = h.len() - 1;
    // Terminal contraction is superlinear.
    assert!(h[k] / h[k - 1] < 0.5 * h[k - 1] / h[k - 2]);
}

#[test]
fn nonregular_splitting_is_reported() {
    let mut a = DenseTensor::<f64>::identity(3, 2).unwrap();
    a.set(&[0, 1, 0], 0.25);
    let b = Vector::from_f64_slice(&[1.0, 1.0]);
    for method in [Method::J3, Method::Gs3] {
        let err = solve(&a, &b, &SolverConfig::new(method)).unwrap_err();
        assert!(matches!(err, Error::NonregularSplitting { .. }), "{method}: {err}");
    }
    // (0,1,1) is inside the FULLM pattern but outside the J3/GS3 ones.
    let mut c = DenseTensor::<f64>::identity(3, 2).unwrap();
    c.set(&[0, 1, 1], 0.25);
    assert!(matches!(
        solve(&c, &b, &SolverConfig::new(Method::J3)),
        Err(Error::NonregularSplitting { .. })
    ));
}

#[test]
fn invalid_inputs_are_rejected() {
    let (a, _) = identity_problem();
    let neg = Vector::from_f64_slice(&[-1.0, 1.0]);
    assert!(matches!(
        solve(&a, &neg, &SolverConfig::new(Method::J1)),
        Err(Error::InvalidProblem(_))
    ));
    let short = Vector::from_f64_slice(&[1.0]);
    assert!(matches!(
        solve(&a, &short, &SolverConfig::new(Method::Taar)),
        Err(Error::DimensionMismatch { .. })
    ));
    let b = Vector::from_f64_slice(&[1.0, 1.0]);
    let bad_x0 = SolverConfig::new(Method::J1).with_x0(Vector::from_f64_slice(&[0.0, 1.0]));
    assert!(matches!(solve(&a, &b, &bad_x0), Err(Error::InvalidProblem(_))));
    assert!(matches!(
        solve(&a, &b, &SolverConfig::new(Method::AarLinear)),
        Err(Error::InvalidProblem(_))
    ));
}

#[test]
fn small_symmetric_problem_j2_gs2() {
    let inst = appendix_problem3::<f64>();
    let j2 = solve(&inst.a, &inst.b, &inst.config(Method::J2)).unwrap();
    let gs2 = solve(&inst.a, &inst.b, &inst.config(Method::Gs2)).unwrap();
    assert!(j2.converged && (12..=16).contains(&j2.iterations), "{}", j2.iterations);
    assert!(
        gs2.converged && (8..=12).contains(&gs2.iterations),
        "{}",
        gs2.iterations
    );
    assert!(close(&j2.solution, &gs2.solution, 1e-6));
}

#[test]
fn absolute_stopping_uses_raw_norm() {
    let inst = gen_random_mtensor::<f64>(3, 5, 1.0, 4).unwrap();
    let cfg = inst
        .config(Method::Fullm)
        .with_stopping(StoppingMode::Absolute)
        .with_tol(1e-11);
    let r = solve(&inst.a, &inst.b, &cfg).unwrap();
    assert!(r.converged);
    assert!(r.final_residual <= 1e-11);
    assert_eq!(r.residual_history[0], r.initial_residual);
}

#[test]
fn all_solvers_agree_on_small_instance() {
    let inst = gen_random_mtensor::<f64>(3, 6, 0.3, 21).unwrap();
    let reference = solve(&inst.a, &inst.b, &inst.config(Method::Fullm).with_tol(1e-12))
        .unwrap()
        .solution;
    for method in [
        Method::J1,
        Method::Gs1,
        Method::J1Sor,
        Method::J2,
        Method::Gs2,
        Method::Gs3,
        Method::Tr,
        Method::Tar,
        Method::Taar,
    ] {
        let r = solve(&inst.a, &inst.b, &inst.config(method).with_tol(1e-12)).unwrap();
        assert!(r.converged, "{method}");
        assert!(r.solution.is_strictly_positive());
        assert!(close(&r.solution, &reference, 1e-6), "{method}");
    }
}

#[test]
fn taar_preconditioners_all_converge_fast() {
    let inst = gen_random_mtensor::<f64>(3, 30, 0.01, 0).unwrap();
    for kind in [PrecondKind::Pj, PrecondKind::Pgs, PrecondKind::Pf] {
        let r = solve(&inst.a, &inst.b, &inst.config(Method::Taar).with_precond(kind)).unwrap();
        assert!(r.converged && r.iterations <= 30, "{kind}: {}", r.iterations);
    }
    let j1 = solve(&inst.a, &inst.b, &inst.config(Method::J1)).unwrap();
    assert!(j1.iterations >= 100);
}

#[test]
fn tar_with_empty_window_equals_tr() {
    let inst = gen_random_mtensor::<f64>(3, 5, 0.1, 9).unwrap();
    let p = build_preconditioner(&inst.a, PrecondKind::Pf).unwrap();
    let mut s1 = TaarState::new(inst.x0.clone(), 3, 6);
    let mut s2 = s1.clone();
    assert_eq!(tr_step(&inst.a, &inst.b, &p, &mut s1).unwrap(), StepKind::Richardson);
    assert_eq!(
        tar_step(&inst.a, &inst.b, &p, &mut s2).unwrap(),
        StepKind::AndersonFallback
    );
    assert_eq!(s1.xm1, s2.xm1);
    assert_eq!(s1.k, 1);
}

#[test]
fn richardson_at_solution_is_degenerate() {
    let (a, b) = identity_problem();
    let p = build_preconditioner(&a, PrecondKind::Pj).unwrap();
    let mut s = TaarState::new(Vector::from_f64_slice(&[2.0, 3.0]), 3, 6);
    assert_eq!(tr_step(&a, &b, &p, &mut s).unwrap(), StepKind::Degenerate);
    assert_eq!(s.x.as_slice(), &[2.0, 3.0]);
}

#[test]
fn history_window_ring_buffer() {
    let mut w = mtaar_core::taar::HistoryWindow::<f64>::new(2, 3);
    assert_eq!((w.capacity(), w.filled()), (3, 0));
    for k in 2..=6 {
        let v = k as f64;
        w.record(k, &[v, v], &[-v, -v]);
    }
    assert_eq!(w.filled(), 3);
    // k = 5 wrote column 0, k = 6 column 1, k = 4 column 2.
    assert_eq!(w.x_history().row(0), &[5.0, 6.0, 4.0]);
    assert_eq!(w.r_history().row(1), &[-5.0, -6.0, -4.0]);
}

#[test]
fn preconditioner_kinds_use_majorization_parts() {
    let a = DenseTensor::from_fn(3, 3, |idx| (3 * idx[0] + idx[1] + 9 * idx[2] + 1) as f64).unwrap();
    let pgs = build_preconditioner(&a, PrecondKind::Pgs).unwrap();
    assert_eq!(pgs.matrix().row(1), &[4.0, 14.0, 0.0]);
    let pj = build_preconditioner(&a, PrecondKind::Pj).unwrap();
    assert_eq!(pj.matrix().row(2), &[0.0, 0.0, 27.0]);
    // The full majorization matrix of this tensor has rank 2.
    assert!(matches!(
        build_preconditioner(&a, PrecondKind::Pf),
        Err(Error::SingularMatrix)
    ));
    let shifted = DenseTensor::from_fn(3, 3, |idx| if idx == [1, 1, 1] { 15.0 } else { a.get(idx) }).unwrap();
    let pf = build_preconditioner(&shifted, PrecondKind::Pf).unwrap();
    assert_eq!(pf.matrix().row(1), &[4.0, 15.0, 24.0]);
    let c = [1.0, 2.0, 3.0];
    let y = pf.solve(&c).unwrap();
    assert!(close(&pf.matrix().mul_vec(&y), &c, 1e-12));
    let zero = DenseTensor::<f64>::zeros(3, 2).unwrap();
    assert!(matches!(
        build_preconditioner(&zero, PrecondKind::Pj),
        Err(Error::SingularPreconditioner(0))
    ));
}

#[test]
fn order_two_taar_is_linear_aar() {
    let inst = gen_random_mtensor::<f64>(2, 12, 0.05, 3).unwrap();
    let cfg = inst
        .config(Method::Taar)
        .with_precond(PrecondKind::Pj)
        .recording_iterates();
    let tensor = solve(&inst.a, &inst.b, &cfg).unwrap();
    let linear = solve(&inst.a, &inst.b, &inst.config(Method::AarLinear).recording_iterates()).unwrap();
    assert_eq!(tensor.iterations, linear.iterations);
    for (x, y) in tensor.iterates.unwrap().iter().zip(&linear.iterates.unwrap()) {
        assert!(close(x, y, 1e-10));
    }
}

#[test]
fn flops_hand_values() {
    assert_eq!(flops_per_iteration(Method::J1, 3, 2), 44);
    assert_eq!(flops_per_iteration(Method::Fullm, 3, 2), 52);
    assert_eq!(flops_per_iteration(Method::Tr, 3, 2), 20);
    assert_eq!(flops_per_iteration(Method::Gs2, 3, 2), 34);
    // A x^2 at (4,3) costs 3*81 - 9, the full solve 27.
    assert_eq!(flops_per_iteration(Method::Taar, 4, 3), 234 + 27);
    assert_eq!(
        FlopsModel::new(4, 3).per_iteration(Method::Taar, PrecondKind::Pgs),
        234 + 9
    );
}
