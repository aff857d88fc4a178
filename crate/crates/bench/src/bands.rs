//! Acceptance bands loaded from the checked-in `data/bands.toml`.

use serde::Deserialize;

const BANDS_TOML: &str = include_str!("../data/bands.toml");

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
pub struct Window {
    pub center: usize,
    pub halfwidth: usize,
}

impl Window {
    pub fn contains(&self, v: usize) -> bool {
        v + self.halfwidth >= self.center && v <= self.center + self.halfwidth
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}±{}", self.center, self.halfwidth)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct Table2 {
    pub taar_max_iter: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Table3 {
    pub taar_max_iter: usize,
    pub baseline_min_ratio: f64,
    pub full_baseline_min_iter: usize,
    pub baselines: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Table4 {
    pub n: Vec<usize>,
    pub taar_max_iter: Vec<usize>,
    pub newton_max_iter: Vec<usize>,
    pub max_total_seconds: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Table5 {
    pub j2: Window,
    pub gs2: Window,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Table6 {
    pub gs3: Window,
    pub fullm: Window,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Fig1 {
    pub baselines: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Gravity {
    pub n: usize,
    pub surface_gravity: f64,
    pub max_parabola_deviation: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Bands {
    pub table2: Table2,
    pub table3: Table3,
    pub table4: Table4,
    pub table5: Table5,
    pub table6: Table6,
    pub fig1: Fig1,
    pub gravity: Gravity,
}

impl Bands {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let bands: Bands = toml::from_str(text)?;
        let t4 = &bands.table4;
        anyhow::ensure!(
            t4.n.len() == t4.taar_max_iter.len() && t4.n.len() == t4.newton_max_iter.len(),
            "table4 band lists must have equal length"
        );
        Ok(bands)
    }

    /// The bands shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BANDS_TOML).expect("bundled bands.toml is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses() {
        let b = Bands::builtin();
        assert_eq!(b.table4.n, vec![50, 100, 200, 300, 400]);
        assert_eq!(
            b.table5.j2,
            Window {
                center: 14,
                halfwidth: 2
            }
        );
        assert_eq!(b.gravity.max_parabola_deviation, 1e-2);
    }

    #[test]
    fn window_is_inclusive() {
        let w = Window {
            center: 10,
            halfwidth: 2,
        };
        assert!(w.contains(8) && w.contains(12) && w.contains(10));
        assert!(!w.contains(7) && !w.contains(13));
        let low = Window {
            center: 1,
            halfwidth: 3,
        };
        assert!(low.contains(0));
    }

    #[test]
    fn mismatched_lists_are_rejected() {
        let text = BANDS_TOML.replace("newton_max_iter = [8, 9, 10, 10, 11]", "newton_max_iter = [8]");
        assert!(Bands::parse(&text).is_err());
    }
}
