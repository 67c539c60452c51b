use super::config::{ExperimentConfig, Mode};
use crate::checks::{fiber_suite, field_suite, CheckResult, SuiteParams};
use crate::error::{Error, Result};
use crate::estimates::{EstimateRecord, EstimateReport, NormSummary};
use crate::estimates::{
    c0_bound_sweep, energy_inequality, lp_growth_table, refinement_change, LpTable, MoserParameters, SweepRow,
};
use crate::field::{write_snapshot, FormField, ScalarField, TorusGrid};
use crate::solver::{newton_solve, Problem, SolveError, SolveState, TraceEntry};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Version of the `report.json` layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub a: f64,
    pub residual_norm: f64,
    pub newton_iter: usize,
    pub min_positivity_margin: f64,
    pub phi_c0: f64,
    pub phi_l2: f64,
}

impl SolveSummary {
    fn of(state: &SolveState) -> Self {
        SolveSummary {
            a: state.a,
            residual_norm: state.residual_norm,
            newton_iter: state.newton_iter,
            min_positivity_margin: state.min_positivity_margin,
            phi_c0: state.phi.max_abs(),
            phi_l2: state.phi.l2_norm(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveFailure {
    pub kind: String,
    pub message: String,
    /// Last iterate reached before the failure, when there was one.
    pub last: Option<SolveSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// Everything a run produces except the field snapshots.
///
/// Timings are kept out of `report.json` so that reruns are byte-identical;
/// they go to `timings.json` instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    /// `sha256("blob <len>\0" + canonical config JSON)`, as git hashes file contents.
    /// The output directory is blanked first since it does not affect results.
    pub input_hash: String,
    pub checks: Vec<CheckResult>,
    pub trace: Vec<TraceEntry>,
    pub solve: Option<SolveSummary>,
    pub solve_error: Option<SolveFailure>,
    pub estimates: EstimateReport,
    pub lp_table: Option<LpTable>,
    pub sweep: Vec<SweepRow>,
    /// Relative `C⁰` change between the two finest sweep grids, per amplitude.
    pub refinement: Vec<(f64, Option<f64>)>,
    pub passed: bool,
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// A finished run: the report plus named fields to snapshot.
pub struct RunOutput {
    pub report: RunReport,
    pub snapshots: Vec<(String, FormField)>,
}

pub fn input_hash(config: &ExperimentConfig) -> String {
    let mut inputs = config.clone();
    inputs.output = PathBuf::new();
    let body = inputs.canonical_json();
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct Clock {
    timings: Vec<Timing>,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        Clock {
            timings: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(Timing {
            stage: stage.into(),
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

/// Executes the configured mode without touching the filesystem.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut clock = Clock::new();
    let grid = config.torus_grid(config.grid)?;
    let mut report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        input_hash: input_hash(config),
        checks: Vec::new(),
        trace: Vec::new(),
        solve: None,
        solve_error: None,
        estimates: EstimateReport {
            grid: describe_grid(&grid),
            input_hash: input_hash(config),
            ..Default::default()
        },
        lp_table: None,
        sweep: Vec::new(),
        refinement: Vec::new(),
        passed: false,
        timings: Vec::new(),
    };
    let mut snapshots = Vec::new();
    let params = SuiteParams::new(config.samples, config.seed.unwrap_or(0));
    match config.mode {
        Mode::Solve => {
            let f = config.rhs_on(&grid, 1.0);
            snapshots.push(("f".to_string(), FormField::scalar(&f)));
            let problem = Problem::new(grid.clone(), f, config.calibrate_a)?;
            let outcome = newton_solve(&problem, &ScalarField::zeros(&grid), &config.tolerances);
            clock.lap("solve");
            record_solve(config, &mut report, &outcome);
            if let Ok(state) = &outcome {
                snapshots.push(("phi".to_string(), FormField::scalar(&state.phi)));
            }
        }
        Mode::VerifyIdentities => {
            report.checks.extend(fiber_suite(config.n, &params)?);
            clock.lap("fiber identities");
            report.checks.extend(field_suite(&grid, &params)?);
            clock.lap("field identities");
        }
        Mode::Selftest => {
            report.checks.extend(fiber_suite(config.n, &params)?);
            report.checks.extend(field_suite(&grid, &params)?);
            clock.lap("identities");
            report.checks.push(manufactured_recovery(&grid, config)?);
            clock.lap("manufactured solve");
        }
        Mode::EstimateSweep => {
            run_sweep(config, &grid, &mut report, &mut clock)?;
        }
    }
    report.passed = report.checks.iter().all(|c| c.passed)
        && report.solve_error.is_none()
        && !report.estimates.any_flagged();
    report.timings = clock.timings;
    Ok(RunOutput { report, snapshots })
}

fn describe_grid(grid: &TorusGrid) -> String {
    format!("n={} N={} axes={:?}", grid.n(), grid.points(), grid.active_axes())
}

fn record_solve(config: &ExperimentConfig, report: &mut RunReport, outcome: &std::result::Result<SolveState, SolveError>) {
    let tol = config.tolerances.tol;
    let state = match outcome {
        Ok(s) => Some(s),
        Err(e) => {
            report.solve_error = Some(SolveFailure {
                kind: e.kind().into(),
                message: e.to_string(),
                last: e.state().map(SolveSummary::of),
            });
            e.state()
        }
    };
    let Some(state) = state else {
        return;
    };
    report.trace = state.trace.clone();
    report.solve = outcome.as_ref().ok().map(SolveSummary::of);
    report.checks.push(CheckResult::at_most(
        "solve_residual",
        "(Omega + d'd_J phi)^n = A e^f Omega^n",
        state.residual_norm,
        tol,
    ));
    let margin = state.trace.iter().map(|t| t.margin).fold(f64::INFINITY, f64::min);
    report.checks.push(CheckResult::positive(
        "iterates_stay_positive",
        "accepted iterates keep Omega + d'd_J phi strictly q-positive",
        margin,
    ));
    if config.calibrate_a {
        let defect = state.trace.iter().map(|t| t.calibration_defect).fold(0.0, f64::max);
        report.checks.push(CheckResult::at_most(
            "calibration",
            "integral of the equation holds at every iterate",
            defect,
            config.tolerances.necessary_condition_tol,
        ));
    }
}

/// Solves a manufactured problem whose exact potential is known and reports the relative `L²` error.
fn manufactured_recovery(grid: &TorusGrid, config: &ExperimentConfig) -> Result<CheckResult> {
    let axes = grid.active_axes().to_vec();
    let (a0, a1) = (axes[0], axes[axes.len() - 1]);
    let phi_star = ScalarField::from_fn(grid, |x| {
        let t = 2.0 * std::f64::consts::PI;
        0.02 * (t * x[a0]).cos() + 0.01 * (t * (x[a0] + x[a1])).sin()
    })
    .mean_zero();
    let problem = Problem::manufactured(grid.clone(), &phi_star)?;
    let err = match newton_solve(&problem, &ScalarField::zeros(grid), &config.tolerances) {
        Ok(s) => s.phi.mean_zero().sub(&phi_star).l2_norm() / phi_star.l2_norm(),
        Err(_) => f64::INFINITY,
    };
    Ok(CheckResult::at_most(
        &format!("manufactured_recovery[n={},N={}]", grid.n(), grid.points()),
        "solver recovers a known potential",
        err,
        1e-6,
    ))
}

fn run_sweep(config: &ExperimentConfig, grid: &TorusGrid, report: &mut RunReport, clock: &mut Clock) -> Result<()> {
    let spec = &config.sweep;
    let sizes = if spec.grids.is_empty() {
        vec![config.grid, 2 * config.grid]
    } else {
        spec.grids.clone()
    };
    let grids = sizes
        .iter()
        .map(|&s| config.torus_grid(s))
        .collect::<Result<Vec<_>>>()?;
    let rhs = |g: &TorusGrid, amp: f64| config.rhs_on(g, amp);
    report.sweep = c0_bound_sweep(&grids, &spec.amplitudes, &rhs, &config.tolerances);
    report.refinement = refinement_change(&report.sweep);
    clock.lap("sweep");
    for row in &report.sweep {
        if let Some(e) = &row.error {
            report.checks.push(CheckResult {
                name: format!("sweep_solve[amp={},N={}]", row.amplitude, row.points),
                anchor: e.clone(),
                max_error: f64::INFINITY,
                tolerance: config.tolerances.tol,
                passed: false,
            });
        }
    }
    if sizes.len() >= 2 {
        for &(amp, change) in &report.refinement {
            report.checks.push(CheckResult::at_most(
                &format!("c0_refinement[amp={amp}]"),
                "sup norm of the solution is stable under grid doubling",
                change.unwrap_or(f64::INFINITY),
                0.01,
            ));
        }
    }

    let params = MoserParameters::geometric(config.n);
    for &amp in &spec.amplitudes {
        let instance = format!("amp={amp},N={}", grid.points());
        let f = config.rhs_on(grid, amp);
        let f_c0 = f.max_abs();
        let problem = Problem::new(grid.clone(), f, true)?;
        let state = match newton_solve(&problem, &ScalarField::zeros(grid), &config.tolerances) {
            Ok(s) => s,
            Err(_) => continue,
        };
        for &p in &spec.exponents {
            let e = energy_inequality(&problem, &state.phi, state.a, p)?;
            let scale = e.lhs.abs().max(e.rhs.abs());
            report.estimates.records.push(EstimateRecord::new(
                &instance,
                "energy",
                Some(p),
                e.lhs,
                e.rhs,
                spec.slack_tol * scale,
            ));
        }
        let table = lp_growth_table(&state.phi, &params, config.n);
        report.estimates.norms.push(NormSummary {
            instance,
            phi_c0: table.c0,
            phi_lp: table.rows.clone(),
            f_c0,
        });
        report.lp_table = Some(table);
    }
    clock.lap("estimates");
    Ok(())
}

impl RunOutput {
    /// Writes `report.json`, `timings.json`, `estimates.csv`, `trace.csv` and one
    /// `.hktf` file per snapshot into `dir`, returning the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            written.push(path);
            Ok(())
        };
        put("report.json", self.report.to_json().as_bytes())?;
        put("timings.json", (serde_json::to_string_pretty(&self.report.timings)? + "\n").as_bytes())?;
        let mut csv = Vec::new();
        self.report.estimates.write_csv(&mut csv)?;
        put("estimates.csv", &csv)?;
        put("trace.csv", &trace_csv(&self.report.trace)?)?;
        for (name, field) in &self.snapshots {
            let mut bytes = Vec::new();
            write_snapshot(&mut bytes, field)?;
            put(&format!("{name}.hktf"), &bytes)?;
        }
        Ok(written)
    }
}

fn trace_csv(trace: &[TraceEntry]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if trace.is_empty() {
        w.write_record([
            "iter",
            "residual",
            "a",
            "margin",
            "step",
            "krylov_iterations",
            "calibration_defect",
            "unresolved",
        ])?;
    }
    for t in trace {
        w.serialize(t)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Runs `config` and writes its artifacts to the configured output directory.
pub fn execute(config: &ExperimentConfig) -> Result<RunReport> {
    let out = run(config)?;
    out.write(&config.output)?;
    Ok(out.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::config::{RhsSpec, WaveMode};

    fn solve_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(Mode::Solve);
        c.grid = 16;
        c.f = RhsSpec {
            modes: vec![WaveMode {
                k: vec![1, 2],
                amplitude: 0.2,
                phase: 0.3,
            }],
            constant: 0.0,
        };
        c
    }

    #[test]
    fn linear_solve_reports_small_residual() {
        let out = run(&solve_config()).unwrap();
        let r = &out.report;
        assert!(r.passed, "{:?}", r.checks);
        assert!(r.solve.as_ref().unwrap().residual_norm <= 1e-10);
        assert_eq!(out.snapshots.len(), 2);
        assert!(!r.trace.is_empty());
    }

    #[test]
    fn violated_condition_is_reported() {
        let mut c = solve_config();
        c.calibrate_a = false;
        c.f.constant = 0.1;
        let r = run(&c).unwrap().report;
        assert!(!r.passed);
        assert_eq!(r.exit_code(), 1);
        assert_eq!(r.solve_error.as_ref().unwrap().kind, "necessary_condition_violated");
    }

    #[test]
    fn hash_is_git_style() {
        let c = solve_config();
        let h = input_hash(&c);
        assert_eq!(h.len(), 64);
        let mut other = c.clone();
        other.seed = Some(1);
        assert_ne!(h, input_hash(&other));
        other.seed = None;
        other.output = "elsewhere".into();
        assert_eq!(h, input_hash(&other));
    }

    #[test]
    fn artifacts_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new(Mode::VerifyIdentities);
        c.grid = 8;
        c.samples = 5;
        c.seed = Some(3);
        let a = run(&c).unwrap();
        a.write(dir.path()).unwrap();
        for name in ["report.json", "timings.json", "estimates.csv", "trace.csv"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let b = run(&c).unwrap();
        assert_eq!(a.report.to_json(), b.report.to_json());
        let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.checks, a.report.checks);
        assert!(!text.contains("seconds"));
    }
}
