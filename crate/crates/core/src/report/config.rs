use crate::error::{Error, Result};
use crate::field::{ScalarField, TorusGrid};
use crate::solver::SolveOptions;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    VerifyIdentities,
    EstimateSweep,
    Selftest,
}

impl Mode {
    /// Modes that draw random samples and therefore need a seed.
    pub fn samples_randomly(self) -> bool {
        matches!(self, Mode::VerifyIdentities | Mode::Selftest)
    }
}

/// `amplitude · cos(2π k·x + phase)`, with `k` listed over the active axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveMode {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RhsSpec {
    pub modes: Vec<WaveMode>,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// Multipliers applied to the whole right-hand side.
    pub amplitudes: Vec<f64>,
    /// Grid sizes; empty means the configured grid and its doubling.
    pub grids: Vec<usize>,
    /// Exponents for the energy inequality.
    pub exponents: Vec<f64>,
    /// Allowed negative slack, relative to `max(|lhs|, |rhs|)`.
    pub slack_tol: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            amplitudes: vec![0.5, 1.0],
            grids: Vec::new(),
            exponents: vec![2.0, 3.0, 4.0],
            slack_tol: 1e-8,
        }
    }
}

fn default_n() -> usize {
    1
}
fn default_grid() -> usize {
    16
}
fn default_true() -> bool {
    true
}
fn default_samples() -> usize {
    200
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment. Every field except `mode` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Quaternionic dimension.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Points per active axis.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Active torus axes; `None` means `4a, 4a+1` for each block `a`.
    #[serde(default)]
    pub axes: Option<Vec<usize>>,
    #[serde(default)]
    pub f: RhsSpec,
    #[serde(default = "default_true")]
    pub calibrate_a: bool,
    #[serde(default)]
    pub tolerances: SolveOptions,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Random samples per sampled identity check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub sweep: SweepSpec,
}

/// Command-line values that replace fields of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub calibrate_a: Option<bool>,
}

/// Where a value came from, for diagnostics.
enum Origin<'a> {
    Source(&'a str),
    Flags,
}

impl Origin<'_> {
    /// `line L` of the first `"key":` occurrence after `skip` earlier ones.
    fn at(&self, key: &str, skip: usize, flag: &str) -> String {
        match self {
            Origin::Source(text) => {
                let needle = format!("\"{key}\"");
                let mut seen = 0;
                for (i, line) in text.lines().enumerate() {
                    let mut rest: &str = line;
                    while let Some(pos) = rest.find(&needle) {
                        if rest[pos + needle.len()..].trim_start().starts_with(':') {
                            if seen == skip {
                                return format!("line {}", i + 1);
                            }
                            seen += 1;
                        }
                        rest = &rest[pos + needle.len()..];
                    }
                }
                format!("key `{key}`")
            }
            Origin::Flags => format!("flag {flag}"),
        }
    }
}

impl ExperimentConfig {
    /// Config with all defaults for `mode`.
    pub fn new(mode: Mode) -> Self {
        ExperimentConfig {
            mode,
            n: default_n(),
            grid: default_grid(),
            axes: None,
            f: RhsSpec::default(),
            calibrate_a: true,
            tolerances: SolveOptions::default(),
            seed: None,
            samples: default_samples(),
            output: default_output(),
            sweep: SweepSpec::default(),
        }
    }

    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        // serde_json messages already end in "at line L column C"
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate_with(&Origin::Source(text))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies command-line values and revalidates, attributing errors to flags.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(n) = o.n {
            self.n = n;
        }
        if let Some(g) = o.grid {
            self.grid = g;
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(t) = o.tol {
            self.tolerances.tol = t;
        }
        if let Some(out) = &o.output {
            self.output = out.clone();
        }
        if let Some(c) = o.calibrate_a {
            self.calibrate_a = c;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(&Origin::Flags)
    }

    fn validate_with(&self, origin: &Origin<'_>) -> Result<()> {
        let fail = |key: &str, skip: usize, flag: &str, msg: String| {
            Err(Error::Config(format!("{}: {msg}", origin.at(key, skip, flag))))
        };
        if self.n == 0 || self.n > 2 {
            return fail("n", 0, "--n", format!("n = {} is not supported (use 1 or 2)", self.n));
        }
        if self.grid % 2 != 0 {
            return fail("grid", 0, "--grid", format!("grid N = {} must be even", self.grid));
        }
        if self.grid < 4 {
            return fail("grid", 0, "--grid", format!("grid N = {} must be at least 4", self.grid));
        }
        let axes = self.active_axes();
        if let Some(&bad) = axes.iter().find(|&&a| a >= 4 * self.n) {
            return fail("axes", 0, "--config", format!("axis {bad} is outside 0..{}", 4 * self.n));
        }
        for (i, m) in self.f.modes.iter().enumerate() {
            if m.k.len() != axes.len() {
                return fail(
                    "k",
                    i,
                    "--config",
                    format!("wave vector {:?} has {} entries, expected one per active axis ({})", m.k, m.k.len(), axes.len()),
                );
            }
            if let Some(&k) = m.k.iter().find(|&&k| 3 * k.abs() >= self.grid as i64) {
                return fail(
                    "k",
                    i,
                    "--grid",
                    format!("wave number {k} lies outside the dealiased band 3|k| < {}", self.grid),
                );
            }
            if !m.amplitude.is_finite() || !m.phase.is_finite() {
                return fail("amplitude", i, "--config", "mode amplitude and phase must be finite".into());
            }
        }
        if !self.f.constant.is_finite() {
            return fail("constant", 0, "--config", "constant must be finite".into());
        }
        if !(self.tolerances.tol > 0.0) {
            return fail("tol", 0, "--tol", format!("tolerance {} must be positive", self.tolerances.tol));
        }
        if self.mode.samples_randomly() && self.samples > 0 && self.seed.is_none() {
            return fail("seed", 0, "--seed", "a seed is required for sampled checks".into());
        }
        if self.mode == Mode::EstimateSweep {
            if self.sweep.amplitudes.is_empty() {
                return fail("amplitudes", 0, "--config", "sweep needs at least one amplitude".into());
            }
            if let Some(&g) = self.sweep.grids.iter().find(|&&g| g % 2 != 0 || g < 4) {
                return fail("grids", 0, "--config", format!("sweep grid {g} must be even and at least 4"));
            }
            if let Some(&p) = self.sweep.exponents.iter().find(|&&p| !(2.0..=64.0).contains(&p)) {
                return fail("exponents", 0, "--config", format!("exponent {p} is outside [2, 64]"));
            }
        }
        Ok(())
    }

    pub fn active_axes(&self) -> Vec<usize> {
        self.axes
            .clone()
            .unwrap_or_else(|| (0..self.n).flat_map(|a| [4 * a, 4 * a + 1]).collect())
    }

    pub fn torus_grid(&self, points: usize) -> Result<TorusGrid> {
        TorusGrid::new(self.n, &self.active_axes(), points)
    }

    /// Right-hand side on `grid`, scaled by `amplitude`.
    pub fn rhs_on(&self, grid: &TorusGrid, amplitude: f64) -> ScalarField {
        let axes = self.active_axes();
        let modes: Vec<(Vec<i64>, f64, f64)> = self
            .f
            .modes
            .iter()
            .map(|m| {
                let mut k = vec![0i64; 4 * self.n];
                for (&a, &v) in axes.iter().zip(&m.k) {
                    k[a] = v;
                }
                (k, amplitude * m.amplitude, m.phase)
            })
            .collect();
        ScalarField::from_modes(grid, &modes, amplitude * self.f.constant)
    }

    /// Canonical JSON used for hashing and echoing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "mode": "solve",
  "n": 1,
  "grid": 16,
  "f": { "modes": [ { "k": [1, 0], "amplitude": 0.1 } ] }
}"#;

    fn message(e: Error) -> String {
        match e {
            Error::Config(m) => m,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_config_is_valid() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.grid, 16);
        assert_eq!(c.active_axes(), vec![0, 1]);
        assert!(c.calibrate_a);
        assert_eq!(c.tolerances, SolveOptions::default());
        let f = c.rhs_on(&c.torus_grid(16).unwrap(), 1.0);
        assert!((f.max_abs() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn nyquist_mode_is_rejected_with_line() {
        let text = MINIMAL.replace("[1, 0]", "[8, 0]");
        let m = message(ExperimentConfig::from_json(&text).unwrap_err());
        assert!(m.starts_with("line 5:"), "{m}");
        assert!(m.contains("dealiased band"), "{m}");
    }

    #[test]
    fn odd_grid_is_rejected() {
        let text = MINIMAL.replace("\"grid\": 16", "\"grid\": 15");
        let m = message(ExperimentConfig::from_json(&text).unwrap_err());
        assert!(m.starts_with("line 4:"), "{m}");
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        let m = message(c.apply(&Overrides { grid: Some(9), ..Default::default() }).unwrap_err());
        assert!(m.starts_with("flag --grid:"), "{m}");
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let text = MINIMAL.replace("\"n\": 1", "\"n\": 1, \"colour\": 3");
        let m = message(ExperimentConfig::from_json(&text).unwrap_err());
        assert!(m.contains("colour") && m.contains("line 3"), "{m}");
        let nested = MINIMAL.replace("\"amplitude\": 0.1", "\"amplitude\": 0.1, \"freq\": 2");
        assert!(ExperimentConfig::from_json(&nested).is_err());
    }

    #[test]
    fn sampled_modes_need_a_seed() {
        let text = MINIMAL.replace("\"solve\"", "\"verify-identities\"");
        let m = message(ExperimentConfig::from_json(&text).unwrap_err());
        assert!(m.contains("seed"), "{m}");
        let with_seed = text.replace("\"n\": 1", "\"n\": 1, \"seed\": 5");
        assert!(ExperimentConfig::from_json(&with_seed).is_ok());
        let mut flags = ExperimentConfig::new(Mode::Selftest);
        let m = message(flags.validate().unwrap_err());
        assert!(m.starts_with("flag --seed"), "{m}");
        flags.apply(&Overrides { seed: Some(1), ..Default::default() }).unwrap();
    }

    #[test]
    fn wave_vector_length_must_match_axes() {
        let text = MINIMAL.replace("[1, 0]", "[1, 0, 0]");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }
}
