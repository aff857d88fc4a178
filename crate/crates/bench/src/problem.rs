//! Problem selection shared by the `solve` command and the suites.

use std::fmt;
use std::str::FromStr;

use mtaar_core::problems::{
    appendix_example61, appendix_problem3, gen_gravity_default, gen_random_mtensor, gen_sine_symmetric,
    ProblemInstance, DEFAULT_SEED,
};

/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "MTAAR_SEED";

/// Seed from `MTAAR_SEED`, or the library default.
pub fn default_seed() -> anyhow::Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("{SEED_ENV} must be an unsigned integer, got `{v}`")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Random,
    Sine,
    Gravity,
    Appendix3,
    Appendix61,
}

impl FromStr for ProblemKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "random" => ProblemKind::Random,
            "sine" => ProblemKind::Sine,
            "gravity" => ProblemKind::Gravity,
            "appendix3" => ProblemKind::Appendix3,
            "appendix61" => ProblemKind::Appendix61,
            _ => anyhow::bail!("unknown problem `{s}`"),
        })
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Random => "random",
            ProblemKind::Sine => "sine",
            ProblemKind::Gravity => "gravity",
            ProblemKind::Appendix3 => "appendix3",
            ProblemKind::Appendix61 => "appendix61",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn build(&self) -> anyhow::Result<ProblemInstance<f64>> {
        Ok(match self.kind {
            ProblemKind::Random => gen_random_mtensor(self.m, self.n, self.epsilon, self.seed)?,
            ProblemKind::Sine => gen_sine_symmetric(self.n)?,
            ProblemKind::Gravity => gen_gravity_default(self.n)?,
            ProblemKind::Appendix3 => appendix_problem3(),
            ProblemKind::Appendix61 => appendix_example61(self.seed)?,
        })
    }
}
