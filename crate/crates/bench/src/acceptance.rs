//! Acceptance checks. Each returns one [`Criterion`] with a pass flag and a
//! short explanation; `verify --suite acceptance` and the `acceptance` test
//! target both print them one per line.

use std::fmt;
use std::time::Instant;

use mtaar_core::problems::{
    appendix_example61, appendix_problem3, gen_gravity_default, gen_random_mtensor, gen_sine_symmetric,
    parabola_deviation, ProblemInstance,
};
use mtaar_core::tensor::DenseTensor;
use mtaar_core::{
    aar_linear_solve, flops_per_iteration, solve, taar_solve, DenseMatrix, FlopsModel, Method, PrecondKind,
    SolveReport, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bands::Bands;
use crate::suites::{DESK_GRID, GRID_EPSILON};

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {} {}: {}", self.id, self.title, self.detail)
    }
}

fn criterion(id: &'static str, title: &'static str, pass: bool, detail: String) -> Criterion {
    Criterion {
        id,
        title,
        pass,
        detail,
    }
}

fn run(inst: &ProblemInstance<f64>, method: Method, precond: PrecondKind) -> anyhow::Result<SolveReport<f64>> {
    Ok(solve(&inst.a, &inst.b, &inst.config(method).with_precond(precond))?)
}

fn iters(r: &SolveReport<f64>) -> String {
    if r.converged {
        r.iterations.to_string()
    } else {
        format!("{}(not converged)", r.iterations)
    }
}

/// Sine problems: TAAR-PF and Newton iteration ceilings plus the time budget.
pub fn sine_suite(bands: &Bands) -> anyhow::Result<Criterion> {
    let t4 = &bands.table4;
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &n) in t4.n.iter().enumerate() {
        let inst = gen_sine_symmetric(n)?;
        let taar = run(&inst, Method::Taar, PrecondKind::Pf)?;
        let newton = run(&inst, Method::Newton, PrecondKind::Pf)?;
        pass &= taar.converged && taar.iterations <= t4.taar_max_iter[i];
        pass &= newton.converged && newton.iterations <= t4.newton_max_iter[i];
        parts.push(format!(
            "n={n} taar={}/{} newton={}/{}",
            iters(&taar),
            t4.taar_max_iter[i],
            iters(&newton),
            t4.newton_max_iter[i]
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < t4.max_total_seconds;
    parts.push(format!("{secs:.2}s/{}s", t4.max_total_seconds));
    Ok(criterion("1", "sine suite", pass, parts.join(", ")))
}

/// Small symmetric order-4 problem solved by J2 and GS2.
pub fn small_symmetric(bands: &Bands) -> anyhow::Result<Criterion> {
    let inst = appendix_problem3();
    let j2 = run(&inst, Method::J2, PrecondKind::Pf)?;
    let gs2 = run(&inst, Method::Gs2, PrecondKind::Pf)?;
    let (wj, wg) = (bands.table5.j2, bands.table5.gs2);
    let pass = j2.converged && wj.contains(j2.iterations) && gs2.converged && wg.contains(gs2.iterations);
    let detail = format!("j2={} in {wj}, gs2={} in {wg}", iters(&j2), iters(&gs2));
    Ok(criterion("2", "symmetric 4x3 problem", pass, detail))
}

/// Random (3,5) instance with absolute stopping, GS3 and FULLM.
pub fn random5(bands: &Bands, seed: u64) -> anyhow::Result<Criterion> {
    let inst = appendix_example61(seed)?;
    let gs3 = run(&inst, Method::Gs3, PrecondKind::Pf)?;
    let fullm = run(&inst, Method::Fullm, PrecondKind::Pf)?;
    let (wg, wf) = (bands.table6.gs3, bands.table6.fullm);
    let pass = gs3.converged && wg.contains(gs3.iterations) && fullm.converged && wf.contains(fullm.iterations);
    let detail = format!(
        "seed={seed} gs3={} in {wg}, fullm={} in {wf}",
        iters(&gs3),
        iters(&fullm)
    );
    Ok(criterion("3", "random (3,5) absolute stopping", pass, detail))
}

/// TAAR-PF within the ceiling and every baseline at least `ratio` times slower.
pub fn acceleration(bands: &Bands, seed: u64) -> anyhow::Result<Criterion> {
    let t3 = &bands.table3;
    let baselines = [Method::J1, Method::J2, Method::Gs2, Method::Gs3, Method::Fullm];
    let mut pass = true;
    let mut parts = Vec::new();
    for (m, n) in DESK_GRID {
        let inst = gen_random_mtensor(m, n, GRID_EPSILON, seed)?;
        let taar = run(&inst, Method::Taar, PrecondKind::Pf)?;
        let ok_taar = taar.converged && taar.iterations <= t3.taar_max_iter;
        let floor = (t3.baseline_min_ratio * taar.iterations.max(1) as f64).ceil() as usize;
        let mut line = format!("({m},{n}) taar={}", iters(&taar));
        let mut ok = ok_taar;
        for meth in baselines {
            let r = run(&inst, meth, PrecondKind::Pf)?;
            ok &= ok_taar && r.converged && r.iterations >= floor;
            line += &format!(" {}={}", meth.name(), iters(&r));
        }
        pass &= ok;
        parts.push(format!("{line} [{}]", if ok { "ok" } else { "violated" }));
    }
    Ok(criterion(
        "4",
        "order-of-magnitude acceleration",
        pass,
        format!("seed={seed} {}", parts.join("; ")),
    ))
}

/// TAAR-PF converges with fewer model flops than every baseline on (3,100).
pub fn flops_dominance(bands: &Bands, seed: u64) -> anyhow::Result<Criterion> {
    let inst = gen_random_mtensor(3, 100, GRID_EPSILON, seed)?;
    let taar = run(&inst, Method::Taar, PrecondKind::Pf)?;
    let tf = *taar.cumulative_flops.last().unwrap();
    let mut pass = taar.converged;
    let mut parts = vec![format!("taar={tf}")];
    for name in &bands.fig1.baselines {
        let meth: Method = name.parse()?;
        let r = run(&inst, meth, PrecondKind::Pf)?;
        let f = *r.cumulative_flops.last().unwrap();
        pass &= r.converged && f > tf;
        parts.push(format!("{name}={f}"));
    }
    Ok(criterion("5", "flops dominance on (3,100)", pass, parts.join(" ")))
}

/// `y^[m-1] - z^[m-1] = (y - z) .* sum_j y^[m-2-j] .* z^[j]`.
pub fn telescoping(trials: usize, seed: u64) -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let m = rng.gen_range(2..=6usize);
        let n = rng.gen_range(1..=8usize);
        let y = Vector::from_fn(n, |_| rng.gen_range(-2.0..2.0));
        let z = Vector::from_fn(n, |_| rng.gen_range(-2.0..2.0));
        let e = (m - 1) as f64;
        let lhs = y.elementwise_pow(e).sub(&z.elementwise_pow(e));
        for i in 0..n {
            let sum: f64 = (0..m - 1)
                .map(|j| y[i].powi((m - 2 - j) as i32) * z[i].powi(j as i32))
                .sum();
            let rhs = (y[i] - z[i]) * sum;
            worst = worst.max((lhs[i] - rhs).abs() / lhs[i].abs().max(1.0));
        }
    }
    criterion(
        "6a",
        "telescoping identity",
        worst <= 1e-10,
        format!("{trials} triples, max error {worst:.2e} (<= 1e-10)"),
    )
}

fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// J1 and J3 produce the same iterates.
pub fn jacobi_identity(seed: u64) -> anyhow::Result<Criterion> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (k, (m, n)) in [(3, 6), (3, 10), (4, 5), (4, 8), (5, 4)].into_iter().enumerate() {
        let inst = gen_random_mtensor(m, n, 0.1, seed + k as u64)?;
        let run_it = |meth| -> anyhow::Result<SolveReport<f64>> {
            let cfg = inst.config(meth).with_max_iter(200).recording_iterates();
            Ok(solve(&inst.a, &inst.b, &cfg)?)
        };
        let (j1, j3) = (run_it(Method::J1)?, run_it(Method::J3)?);
        let (a, b) = (j1.iterates.unwrap(), j3.iterates.unwrap());
        anyhow::ensure!(a.len() == b.len(), "J1 and J3 ran different iteration counts");
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max(rel_inf(x, y));
            count += 1;
        }
    }
    Ok(criterion(
        "6b",
        "J1/J3 iterate identity",
        worst <= 1e-12,
        format!("{count} iterates, max difference {worst:.2e} (<= 1e-12)"),
    ))
}

/// Methods compared on the random small instances.
pub const AGREEMENT_METHODS: [(Method, PrecondKind); 13] = [
    (Method::J1, PrecondKind::Pf),
    (Method::Gs1, PrecondKind::Pf),
    (Method::J1Sor, PrecondKind::Pf),
    (Method::Gs1Sor, PrecondKind::Pf),
    (Method::J2, PrecondKind::Pf),
    (Method::Gs2, PrecondKind::Pf),
    (Method::J3, PrecondKind::Pf),
    (Method::Gs3, PrecondKind::Pf),
    (Method::Fullm, PrecondKind::Pf),
    (Method::Tr, PrecondKind::Pf),
    (Method::Taar, PrecondKind::Pj),
    (Method::Taar, PrecondKind::Pgs),
    (Method::Taar, PrecondKind::Pf),
];

fn cell_label(meth: Method, pk: PrecondKind) -> String {
    if meth.uses_preconditioner() {
        format!("{meth}-{pk}")
    } else {
        meth.to_string()
    }
}

/// Tolerance used for the agreement runs.
pub const AGREEMENT_TOL: f64 = 1e-12;

/// `||b - A x^{m-1}||` computed through repeated mode products rather than
/// the solver's contraction.
pub fn independent_residual(a: &DenseTensor<f64>, b: &[f64], x: &[f64]) -> anyhow::Result<f64> {
    let mut t = a.clone();
    for k in (2..=a.order()).rev() {
        t = t.mode_product(k, x)?;
    }
    Ok(t.as_slice()
        .iter()
        .zip(b)
        .map(|(v, bi)| (bi - v) * (bi - v))
        .sum::<f64>()
        .sqrt())
}

/// Results of the random cross-method runs, shared by two criteria.
pub struct AgreementRuns {
    pub instances: usize,
    pub worst_disagreement: f64,
    pub converged: usize,
    /// Runs that stopped without converging or hit a method breakdown.
    pub unconverged: Vec<String>,
    /// Instances where TAAR-PF failed or fewer than two methods converged.
    pub uncovered: Vec<String>,
    pub nonpositive: usize,
    pub uncertified: usize,
}

pub fn agreement_runs(count: usize, seed: u64) -> anyhow::Result<AgreementRuns> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = AgreementRuns {
        instances: count,
        worst_disagreement: 0.0,
        converged: 0,
        unconverged: Vec::new(),
        uncovered: Vec::new(),
        nonpositive: 0,
        uncertified: 0,
    };
    for i in 0..count {
        let m = rng.gen_range(2..=4usize);
        let n = rng.gen_range(2..=10usize);
        let eps = rng.gen_range(0.1..1.0);
        let inst = gen_random_mtensor(m, n, eps, rng.gen())?;
        let mut sols: Vec<Vector<f64>> = Vec::new();
        let mut taar_ok = false;
        for (meth, pk) in AGREEMENT_METHODS {
            let cfg = inst.config(meth).with_precond(pk).with_tol(AGREEMENT_TOL);
            let r = match solve(&inst.a, &inst.b, &cfg) {
                Ok(r) if r.converged => r,
                Ok(r) => {
                    out.unconverged
                        .push(format!("#{i}({m},{n}) {}: {:?}", cell_label(meth, pk), r.stop_reason));
                    continue;
                }
                Err(e) => {
                    out.unconverged
                        .push(format!("#{i}({m},{n}) {}: {e}", cell_label(meth, pk)));
                    continue;
                }
            };
            taar_ok |= meth == Method::Taar && pk == PrecondKind::Pf;
            out.converged += 1;
            if !r.solution.is_strictly_positive() {
                out.nonpositive += 1;
            }
            let res = independent_residual(&inst.a, &inst.b, &r.solution)?;
            if res > AGREEMENT_TOL * r.initial_residual * (1.0 + 1e-6) + 1e-300 {
                out.uncertified += 1;
            }
            sols.push(r.solution);
        }
        if !taar_ok || sols.len() < 2 {
            out.uncovered.push(format!("#{i}({m},{n})"));
        }
        for s in &sols[1.min(sols.len())..] {
            out.worst_disagreement = out.worst_disagreement.max(rel_inf(&sols[0], s));
        }
    }
    Ok(out)
}

pub fn cross_agreement(runs: &AgreementRuns) -> Criterion {
    let pass = runs.uncovered.is_empty() && runs.worst_disagreement <= 1e-6;
    let mut detail = format!(
        "{} instances x {} methods, {} converged, max pairwise difference {:.2e} (<= 1e-6)",
        runs.instances,
        AGREEMENT_METHODS.len(),
        runs.converged,
        runs.worst_disagreement
    );
    if !runs.unconverged.is_empty() {
        detail += &format!("; excluded: {}", runs.unconverged.join(", "));
    }
    if !runs.uncovered.is_empty() {
        detail += &format!("; too few converged methods on {}", runs.uncovered.join(" "));
    }
    criterion("6c", "cross-method agreement", pass, detail)
}

pub fn positivity_certified(runs: &AgreementRuns) -> Criterion {
    let pass = runs.converged > 0 && runs.nonpositive == 0 && runs.uncertified == 0;
    let detail = format!(
        "{} converged solutions, {} not strictly positive, {} failing residual recomputation",
        runs.converged, runs.nonpositive, runs.uncertified
    );
    criterion("6d", "positive residual-certified solutions", pass, detail)
}

/// `(A x^{m-2}) x` agrees with `A x^{m-1}`.
pub fn xm2_consistency(seed: u64) -> anyhow::Result<Criterion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.gen_range(2..=5usize);
        let n = rng.gen_range(1..=8usize);
        let a = DenseTensor::from_fn(m, n, |_| rng.gen_range(-1.0..1.0))?;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let via_matrix = a.apply_xm2(&x)?.mul_vec(&x);
        let direct = a.apply_xm1(&x)?;
        let scale = a.as_slice().iter().map(|v| v.abs()).sum::<f64>()
            * x.iter().fold(1.0f64, |s, v| s.max(v.abs())).powi(m as i32 - 1);
        for i in 0..n {
            worst = worst.max((via_matrix[i] - direct[i]).abs() / scale.max(1.0));
        }
    }
    Ok(criterion(
        "6e",
        "A x^{m-2} x = A x^{m-1}",
        worst <= 1e-12,
        format!("50 tensors, max scaled difference {worst:.2e} (<= 1e-12)"),
    ))
}

/// The 3x3x3 slice example and its majorization matrix.
pub fn majorization_example() -> anyhow::Result<Criterion> {
    let a = DenseTensor::from_fn(3, 3, |idx| (3 * idx[0] + idx[1] + 9 * idx[2] + 1) as f64)?;
    let want = DenseMatrix::from_rows(&[&[1.0, 11.0, 21.0], &[4.0, 14.0, 24.0], &[7.0, 17.0, 27.0]])?;
    let got = a.majorization_matrix();
    let pass = got == want;
    Ok(criterion(
        "6f",
        "majorization matrix example",
        pass,
        format!(
            "M(A) rows {:?}",
            (0..3).map(|i| got.row(i).to_vec()).collect::<Vec<_>>()
        ),
    ))
}

/// Order-2 TAAR reproduces linear AAR with the Jacobi preconditioner.
pub fn linear_reduction(seed: u64) -> anyhow::Result<Criterion> {
    let mut worst = 0.0f64;
    let mut mismatched = Vec::new();
    for (k, n) in [4usize, 8, 15, 30].into_iter().enumerate() {
        let inst = gen_random_mtensor(2, n, 0.05, seed + k as u64)?;
        let cfg = inst
            .config(Method::Taar)
            .with_precond(PrecondKind::Pj)
            .recording_iterates();
        let tensor_run = taar_solve(&inst.a, &inst.b, &cfg, PrecondKind::Pj)?;
        let mat = inst.a.apply_xm2(&vec![0.0; n])?;
        let linear_run = aar_linear_solve(&mat, &inst.b, &cfg)?;
        let (a, b) = (tensor_run.iterates.unwrap(), linear_run.iterates.unwrap());
        if a.len() != b.len() {
            mismatched.push(format!("n={n}: {} vs {} iterates", a.len(), b.len()));
        }
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max(rel_inf(x, y));
        }
    }
    let pass = mismatched.is_empty() && worst <= 1e-10;
    let mut detail = format!("max iterate difference {worst:.2e} (<= 1e-10)");
    if !mismatched.is_empty() {
        detail += &format!(", length mismatch: {}", mismatched.join(", "));
    }
    Ok(criterion("6g", "order-2 reduction to linear AAR", pass, detail))
}

/// Flop counts for (3,2) and (4,3) against hand-computed values.
pub fn flops_table() -> Criterion {
    // (3,2): A x^2 costs 3*8-2 = 22, A x costs 2*8-4 = 12, solve 8.
    // (4,3): A x^3 costs 4*81-3 = 321, A x^2 costs 3*81-9 = 234, solve 27.
    let expected: [(Method, usize, usize, u64); 10] = [
        (Method::J1, 3, 2, 44),
        (Method::Gs3, 3, 2, 44),
        (Method::Fullm, 3, 2, 52),
        (Method::J2, 3, 2, 34),
        (Method::Taar, 3, 2, 20),
        (Method::J1, 4, 3, 642),
        (Method::Gs1Sor, 4, 3, 642),
        (Method::Fullm, 4, 3, 669),
        (Method::Gs2, 4, 3, 555),
        (Method::Taar, 4, 3, 261),
    ];
    let bad: Vec<String> = expected
        .iter()
        .filter(|&&(meth, m, n, want)| flops_per_iteration(meth, m, n) != want)
        .map(|&(meth, m, n, want)| format!("{meth}({m},{n})={} want {want}", flops_per_iteration(meth, m, n)))
        .collect();
    let model = FlopsModel::new(4, 3);
    let pj_ok = model.per_iteration(Method::Taar, PrecondKind::Pj) == 237;
    let pass = bad.is_empty() && pj_ok;
    let detail = if pass {
        format!("{} values match", expected.len() + 1)
    } else {
        bad.join(", ")
    };
    criterion("6h", "per-iteration flop model", pass, detail)
}

/// Gravity problem: TAAR-PF converges and matches the boundary parabola.
pub fn gravity(bands: &Bands) -> anyhow::Result<Criterion> {
    let g = &bands.gravity;
    let inst = gen_gravity_default(g.n)?;
    let r = run(&inst, Method::Taar, PrecondKind::Pf)?;
    let dev = parabola_deviation(&inst, &r.solution, g.surface_gravity)?;
    let pass = r.converged && dev <= g.max_parabola_deviation;
    let detail = format!(
        "n={} taar={} final residual {:.2e}, parabola deviation {dev:.2e} (<= {}), nonpositive iterates: {}",
        g.n,
        iters(&r),
        r.final_stopping_value(),
        g.max_parabola_deviation,
        r.nonpositive_iterate_flag
    );
    Ok(criterion("7", "gravity boundary value problem", pass, detail))
}

/// Every criterion, in order.
pub fn run_all(seed: u64) -> anyhow::Result<Vec<Criterion>> {
    let bands = Bands::builtin();
    let runs = agreement_runs(20, seed)?;
    Ok(vec![
        sine_suite(&bands)?,
        small_symmetric(&bands)?,
        random5(&bands, seed)?,
        acceleration(&bands, seed)?,
        flops_dominance(&bands, seed)?,
        telescoping(1000, seed),
        jacobi_identity(seed)?,
        cross_agreement(&runs),
        positivity_certified(&runs),
        xm2_consistency(seed)?,
        majorization_example()?,
        linear_reduction(seed)?,
        flops_table(),
        gravity(&bands)?,
    ])
}
