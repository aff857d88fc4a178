//! Test problem generators and their metadata sidecar format.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::{SolverConfig, StoppingMode};
use crate::tensor::{DenseTensor, Vector};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0;
/// Gravitational constant and earth mass used by the gravity problem.
pub const GRAVITY_CONSTANT: f64 = 6.67e-11;
pub const EARTH_MASS: f64 = 5.98e24;
pub const EARTH_RADIUS: f64 = 6.37e6;
/// Surface gravity used for the reference parabola.
pub const SURFACE_GRAVITY: f64 = 9.8;

/// A fully specified system `A x^{m-1} = b` together with how to start and
/// stop the solver on it.
#[derive(Debug, Clone)]
pub struct ProblemInstance<T> {
    pub label: String,
    pub a: DenseTensor<T>,
    pub b: Vector<T>,
    pub x0: Vector<T>,
    /// Positive vector certifying the M-tensor property (for tensors that
    /// have it).
    pub probe: Vector<T>,
    pub stopping: StoppingMode,
    /// Tolerance to use instead of the solver default.
    pub tol: Option<T>,
    /// Generator parameters (seed, epsilon, shift, physical constants).
    pub params: BTreeMap<String, f64>,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn order(&self) -> usize {
        self.a.order()
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Solver configuration carrying this instance's start vector, probe and
    /// stopping rule.
    pub fn config(&self, method: crate::solver::Method) -> SolverConfig<T> {
        let mut cfg = SolverConfig::new(method)
            .with_x0(self.x0.clone())
            .with_probe(self.probe.clone())
            .with_stopping(self.stopping);
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        cfg
    }

    /// Start vector `c e` with `c = (||b||_inf / ||A e^{m-1}||_inf)^{1/(m-1)}`,
    /// which matches the magnitude of the solution.
    pub fn scaled_x0(&self) -> Result<Vector<T>> {
        let ae = self.a.apply_xm1(&Vector::ones(self.dim()))?;
        let ratio = self.b.norm_inf() / ae.norm_inf();
        let c = ratio.powf(T::one() / T::from_usize(self.order() - 1).unwrap());
        Ok(Vector::filled(self.dim(), c))
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

fn check_shape(m: usize, n: usize) -> Result<()> {
    if m < 2 || n < 1 {
        return Err(Error::InvalidDimension(format!(
            "need m >= 2 and n >= 1, got m = {m}, n = {n}"
        )));
    }
    DenseTensor::<f64>::zeros(m, n).map(|_| ())
}

/// `A = s I - B` with `B` uniform on `(0, 1)` and
/// `s = (1 + epsilon) max_i (B e^{m-1})_i`; `b` uniform on `(0, 1)`,
/// `x_0 = 0.1 e`. The stream comes from ChaCha8 seeded with `seed`, so the
/// instance is reproducible on every platform.
pub fn gen_random_mtensor<T: Scalar>(m: usize, n: usize, epsilon: f64, seed: u64) -> Result<ProblemInstance<T>> {
    check_shape(m, n)?;
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidProblem(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = n.pow(m as u32);
    let raw: Vec<f64> = (0..len).map(|_| rng.sample(Open01)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.sample(Open01)).collect();
    let tail = len / n;
    let max_row = (0..n)
        .map(|i| raw[i * tail..(i + 1) * tail].iter().sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let s = (1.0 + epsilon) * max_row;
    let diag = DenseTensor::<f64>::identity(m, n)?;
    let data = raw
        .iter()
        .zip(diag.as_slice())
        .map(|(&v, &d)| T::lit(s * d - v))
        .collect();
    let mut params = BTreeMap::new();
    params.insert("seed".into(), seed as f64);
    params.insert("epsilon".into(), epsilon);
    params.insert("shift".into(), s);
    Ok(ProblemInstance {
        label: format!("random(m={m},n={n},eps={epsilon},seed={seed})"),
        a: DenseTensor::new(m, n, data)?,
        b: Vector::from_f64_slice(&b),
        x0: Vector::filled(n, T::lit(0.1)),
        probe: Vector::ones(n),
        stopping: StoppingMode::Relative,
        tol: None,
        params,
    })
}

/// Symmetric order-3 tensor `A = n^2 I - B` with
/// `B_{ijk} = |sin(i + j + k)|` (indices from 1), `b = e`, `x_0 = 0.1 e`.
pub fn gen_sine_symmetric<T: Scalar>(n: usize) -> Result<ProblemInstance<T>> {
    check_shape(3, n)?;
    let table: Vec<f64> = (0..=3 * n).map(|s| (s as f64).sin().abs()).collect();
    let shift = (n * n) as f64;
    let a = DenseTensor::from_fn(3, n, |idx| {
        let s = idx[0] + idx[1] + idx[2] + 3;
        let v = -table[s];
        T::lit(if idx[0] == idx[1] && idx[1] == idx[2] {
            shift + v
        } else {
            v
        })
    })?;
    Ok(ProblemInstance {
        label: format!("sine(n={n})"),
        a,
        b: Vector::ones(n),
        x0: Vector::filled(n, T::lit(0.1)),
        probe: Vector::ones(n),
        stopping: StoppingMode::Relative,
        tol: None,
        params: BTreeMap::new(),
    })
}

/// Order-4 discretisation of `x''(t) = -G M / x(t)^2` on `n` equispaced
/// points of `[0, 1]` with `x(0) = c0`, `x(1) = c1`:
/// `x_i^2 (2 x_i - x_{i-1} - x_{i+1}) = G M / (n-1)^2` on interior rows and
/// `x_1^3 = c0^3`, `x_n^3 = c1^3` on the boundary.
pub fn gen_gravity_bvp<T: Scalar>(n: usize, c0: f64, c1: f64, g: f64, mass: f64) -> Result<ProblemInstance<T>> {
    if n < 3 {
        return Err(Error::InvalidDimension(format!(
            "gravity problem needs n >= 3, got {n}"
        )));
    }
    if !(c0 > 0.0 && c1 > 0.0 && g > 0.0 && mass > 0.0) {
        return Err(Error::InvalidProblem(
            "boundary values and constants must be positive".into(),
        ));
    }
    let mut a = DenseTensor::<T>::zeros(4, n)?;
    let third = T::lit(1.0 / 3.0);
    a.set(&[0, 0, 0, 0], T::one());
    a.set(&[n - 1, n - 1, n - 1, n - 1], T::one());
    for i in 1..n - 1 {
        a.set(&[i, i, i, i], T::lit(2.0));
        for j in [i - 1, i + 1] {
            a.set(&[i, j, i, i], -third);
            a.set(&[i, i, j, i], -third);
            a.set(&[i, i, i, j], -third);
        }
    }
    let h2 = ((n - 1) * (n - 1)) as f64;
    let b = Vector::from_fn(n, |i| {
        T::lit(if i == 0 {
            c0.powi(3)
        } else if i == n - 1 {
            c1.powi(3)
        } else {
            g * mass / h2
        })
    });
    // A concave profile makes every interior row of A x^3 positive.
    let probe = Vector::from_fn(n, |i| {
        let t = i as f64 / (n - 1) as f64;
        T::lit(1.0 + t * (1.0 - t))
    });
    let mut params = BTreeMap::new();
    params.insert("c0".into(), c0);
    params.insert("c1".into(), c1);
    params.insert("G".into(), g);
    params.insert("M".into(), mass);
    Ok(ProblemInstance {
        label: format!("gravity(n={n})"),
        a,
        b,
        x0: Vector::filled(n, T::lit(0.1)),
        probe,
        stopping: StoppingMode::Relative,
        tol: None,
        params,
    })
}

/// Gravity problem with earth constants and `c0 = c1 = 6.37e6`.
pub fn gen_gravity_default<T: Scalar>(n: usize) -> Result<ProblemInstance<T>> {
    gen_gravity_bvp(n, EARTH_RADIUS, EARTH_RADIUS, GRAVITY_CONSTANT, EARTH_MASS)
}

/// `max_i |x_i - p(t_i)| / c0` for the parabola
/// `p(t) = -(g/2) t^2 + alpha t + beta` through the boundary values.
pub fn parabola_deviation<T: Scalar>(instance: &ProblemInstance<T>, x: &[T], g: f64) -> Result<f64> {
    let c0 = instance
        .param("c0")
        .ok_or_else(|| Error::InvalidProblem("instance has no c0".into()))?;
    let c1 = instance
        .param("c1")
        .ok_or_else(|| Error::InvalidProblem("instance has no c1".into()))?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidDimension("need at least two points".into()));
    }
    let beta = c0;
    let alpha = c1 - c0 + g / 2.0;
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let p = -0.5 * g * t * t + alpha * t + beta;
            (x[i].to_f64_lossy() - p).abs() / c0
        })
        .fold(0.0, f64::max))
}

/// Entries `a_{ijkl}` (1-based, sorted) of the symmetric order-4,
/// dimension-3 test tensor; all permutations share the value.
const SMALL_SYMMETRIC_ENTRIES: [([usize; 4], f64); 14] = [
    ([1, 1, 1, 1], 20.4982),
    ([1, 1, 1, 2], -0.0582),
    ([1, 1, 1, 3], -1.1719),
    ([1, 1, 2, 2], 0.2236),
    ([1, 1, 2, 3], -0.0171),
    ([1, 1, 3, 3], 0.4597),
    ([1, 2, 2, 3], 0.1852),
    ([1, 2, 2, 2], 0.4880),
    ([1, 2, 3, 3], -0.4087),
    ([1, 3, 3, 3], 0.7639),
    ([2, 2, 2, 2], 10.0),
    ([2, 2, 2, 3], -0.6162),
    ([2, 2, 3, 3], 0.1519),
    ([3, 3, 3, 3], 2.6311),
];

/// Symmetric order-4, dimension-3 tensor with `b = (1, 2, 3)`, `x_0 = e`.
/// It has positive off-diagonal entries, so it is not a Z-tensor; only the
/// Newton-type methods J2 and GS2 apply.
pub fn appendix_problem3<T: Scalar>() -> ProblemInstance<T> {
    let a = DenseTensor::from_fn(4, 3, |idx| {
        let mut key = [idx[0] + 1, idx[1] + 1, idx[2] + 1, idx[3] + 1];
        key.sort_unstable();
        let v = SMALL_SYMMETRIC_ENTRIES
            .iter()
            .find(|(k, _)| *k == key)
            .map_or(0.0, |&(_, v)| v);
        T::lit(v)
    })
    .expect("fixed shape");
    ProblemInstance {
        label: "symmetric4x3".into(),
        a,
        b: Vector::from_f64_slice(&[1.0, 2.0, 3.0]),
        x0: Vector::ones(3),
        probe: Vector::ones(3),
        stopping: StoppingMode::Relative,
        tol: None,
        params: BTreeMap::new(),
    }
}

/// Random `(3, 5)` M-tensor with `epsilon = 1`, `b = x_0 = e` and an absolute
/// stopping tolerance of `1e-11`.
pub fn appendix_example61<T: Scalar>(seed: u64) -> Result<ProblemInstance<T>> {
    let mut inst = gen_random_mtensor::<T>(3, 5, 1.0, seed)?;
    inst.label = format!("random5(seed={seed})");
    inst.b = Vector::ones(5);
    inst.x0 = Vector::ones(5);
    inst.stopping = StoppingMode::Absolute;
    inst.tol = Some(T::lit(1e-11));
    Ok(inst)
}

fn join<T: Scalar>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Writes the `key=value` sidecar describing everything but the tensor.
pub fn write_metadata<T: Scalar, W: Write>(instance: &ProblemInstance<T>, mut w: W) -> Result<()> {
    writeln!(w, "label={}", instance.label)?;
    writeln!(w, "order={}", instance.order())?;
    writeln!(w, "dim={}", instance.dim())?;
    writeln!(w, "b={}", join(&instance.b))?;
    writeln!(w, "x0={}", join(&instance.x0))?;
    writeln!(w, "probe={}", join(&instance.probe))?;
    writeln!(w, "stopping={}", instance.stopping)?;
    if let Some(tol) = instance.tol {
        writeln!(w, "tol={tol}")?;
    }
    for (k, v) in &instance.params {
        writeln!(w, "param.{k}={v}")?;
    }
    Ok(())
}

fn parse_vec<T: Scalar>(s: &str, n: usize) -> Result<Vector<T>> {
    let v = s
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| Error::Parse(format!("bad number `{t}`"))))
        .collect::<Result<Vec<T>>>()?;
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    Ok(v.into())
}

/// Reads a sidecar written by [`write_metadata`] and attaches it to `a`.
pub fn read_metadata<T: Scalar, R: BufRead>(a: DenseTensor<T>, r: R) -> Result<ProblemInstance<T>> {
    let mut fields = BTreeMap::new();
    let mut params = BTreeMap::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{line}`")))?;
        if let Some(name) = k.strip_prefix("param.") {
            let val = v
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad parameter `{line}`")))?;
            params.insert(name.to_string(), val);
        } else {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let get = |k: &str| fields.get(k).ok_or_else(|| Error::Parse(format!("missing `{k}`")));
    let n = a.dim();
    for (key, expect) in [("order", a.order()), ("dim", n)] {
        let found: usize = get(key)?.parse().map_err(|_| Error::Parse(format!("bad `{key}`")))?;
        if found != expect {
            return Err(Error::DimensionMismatch {
                expected: expect,
                found,
            });
        }
    }
    let tol = match fields.get("tol") {
        Some(t) => Some(t.parse::<T>().map_err(|_| Error::Parse(format!("bad tol `{t}`")))?),
        None => None,
    };
    Ok(ProblemInstance {
        label: get("label")?.clone(),
        b: parse_vec(get("b")?, n)?,
        x0: parse_vec(get("x0")?, n)?,
        probe: parse_vec(get("probe")?, n)?,
        stopping: get("stopping")?.parse()?,
        tol,
        params,
        a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_tensor_is_m_tensor() {
        let p = gen_random_mtensor::<f64>(3, 6, 0.01, 7).unwrap();
        assert!(p.a.is_z_tensor());
        assert!(p.a.verify_nonsingular_m_tensor(&p.probe).unwrap());
        assert!(p.b.iter().all(|&v| v > 0.0 && v < 1.0));
        let again = gen_random_mtensor::<f64>(3, 6, 0.01, 7).unwrap();
        assert_eq!(p.a, again.a);
        assert_ne!(p.a, gen_random_mtensor::<f64>(3, 6, 0.01, 8).unwrap().a);
    }

    #[test]
    fn random_shift_matches_row_sums() {
        let p = gen_random_mtensor::<f64>(3, 4, 0.5, 1).unwrap();
        let s = p.param("shift").unwrap();
        // (s I - A) e^{m-1} = B e^{m-1}, whose largest entry is s / 1.5.
        let ae = p.a.apply_xm1(&[1.0; 4]).unwrap();
        let be_max = ae.iter().map(|&v| s - v).fold(f64::MIN, f64::max);
        assert!((be_max * 1.5 - s).abs() < 1e-12 * s);
    }

    #[test]
    fn sine_entries() {
        let p = gen_sine_symmetric::<f64>(3).unwrap();
        assert!((p.a.get(&[0, 1, 2]) + 6f64.sin().abs()).abs() < 1e-15);
        assert!((p.a.get(&[1, 1, 1]) - (9.0 - 6f64.sin().abs())).abs() < 1e-15);
        assert_eq!(p.a.symmetry_defect(), 0.0);
        assert!(p.a.verify_nonsingular_m_tensor(&p.probe).unwrap());
    }

    #[test]
    fn gravity_structure() {
        let p = gen_gravity_default::<f64>(20).unwrap();
        assert_eq!(p.a.get(&[0, 0, 0, 0]), 1.0);
        assert_eq!(p.a.get(&[19, 19, 19, 19]), 1.0);
        assert_eq!(p.a.get(&[5, 5, 5, 5]), 2.0);
        assert!((p.a.get(&[5, 4, 5, 5]) + 1.0 / 3.0).abs() < 1e-16);
        assert!((p.a.get(&[5, 5, 6, 5]) + 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(p.a.get(&[5, 4, 6, 5]), 0.0);
        assert!((p.b[0] - 6.37e6f64.powi(3)).abs() < 1.0);
        assert!((p.b[7] - 6.67e-11 * 5.98e24 / 361.0).abs() < 1e-3);
        assert!(p.a.verify_nonsingular_m_tensor(&p.probe).unwrap());
        // Interior rows of A e^3 vanish, so e alone is no certificate.
        let ae = p.a.apply_xm1(&[1.0; 20]).unwrap();
        assert!(ae[1..19].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn small_symmetric_tensor() {
        let p = appendix_problem3::<f64>();
        assert_eq!(p.a.get(&[0, 0, 0, 0]), 20.4982);
        assert_eq!(p.a.get(&[2, 1, 0, 1]), 0.1852);
        assert_eq!(p.a.get(&[2, 2, 1, 1]), 0.1519);
        assert_eq!(p.a.symmetry_defect(), 0.0);
        assert!(!p.a.is_z_tensor());
    }

    #[test]
    fn metadata_round_trip() {
        let p = appendix_example61::<f64>(3).unwrap();
        let mut buf = Vec::new();
        write_metadata(&p, &mut buf).unwrap();
        let back = read_metadata(p.a.clone(), buf.as_slice()).unwrap();
        assert_eq!(back.b, p.b);
        assert_eq!(back.x0, p.x0);
        assert_eq!(back.stopping, StoppingMode::Absolute);
        assert_eq!(back.tol, Some(1e-11));
        assert_eq!(back.params, p.params);
        assert_eq!(back.label, p.label);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(gen_random_mtensor::<f64>(1, 3, 0.1, 0).is_err());
        assert!(gen_random_mtensor::<f64>(3, 0, 0.1, 0).is_err());
        assert!(gen_random_mtensor::<f64>(3, 3, 0.0, 0).is_err());
        assert!(gen_gravity_default::<f64>(2).is_err());
    }
}
