//! Empirical checks of the integral estimates behind the `C⁰` bound.

mod report;

pub use report::{EstimateRecord, EstimateReport, NormSummary, CSV_SCHEMA_VERSION};

use crate::error::{Error, Result};
use crate::field::{ScalarField, TorusCalculus, TorusGrid};
use crate::solver::{newton_solve, Problem, SolveOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exponents for the `Lᵖ` table and `κ = 2n/(2n−1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserParameters {
    pub kappa: f64,
    pub p_list: Vec<f64>,
}

/// Largest exponent used in `Lᵖ` quadrature.
pub const MAX_EXPONENT: f64 = 64.0;

impl MoserParameters {
    pub fn new(n: usize, mut p_list: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if p_list.iter().any(|&p| !(2.0..=MAX_EXPONENT).contains(&p)) {
            return Err(Error::Invalid(format!("exponents must lie in [2, {MAX_EXPONENT}]")));
        }
        p_list.sort_by(f64::total_cmp);
        Ok(MoserParameters {
            kappa: 2.0 * n as f64 / (2.0 * n as f64 - 1.0),
            p_list,
        })
    }

    /// `p_k = 2κᵏ` up to the exponent cap.
    pub fn geometric(n: usize) -> Self {
        let kappa = 2.0 * n as f64 / (2.0 * n as f64 - 1.0);
        let mut p_list = vec![2.0];
        while *p_list.last().expect("nonempty") * kappa <= MAX_EXPONENT {
            p_list.push(p_list.last().expect("nonempty") * kappa);
        }
        MoserParameters { kappa, p_list }
    }
}

/// `Ω₀ⁿ∧Θ̄` (in volume units) under which the energy inequality is evaluated: `16n²`.
pub fn energy_pairing(n: usize) -> f64 {
    16.0 * (n * n) as f64
}

/// `(1/16n)·p²/(p−1)`.
pub fn energy_prefactor(n: usize, p: f64) -> f64 {
    p * p / ((p - 1.0) * 16.0 * n as f64)
}

/// Both sides of `‖∇|φ|^{p/2}‖² ≤ (1/16n)(p²/(p−1)) ∫(1 − A e^f) φ|φ|^{p−2} Ω₀ⁿ∧Θ̄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheck {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Change in `lhs` when the regularization `δ` is multiplied by 10.
    pub delta_sensitivity: f64,
}

fn regularized_energy(phi: &ScalarField, p: f64, delta: f64) -> f64 {
    let grad = phi.grad_norm_sq();
    let d2 = delta * delta;
    phi.values
        .iter()
        .zip(&grad.values)
        .map(|(&v, &g)| {
            let s = v * v + d2;
            if s == 0.0 {
                0.0
            } else {
                (p / 2.0).powi(2) * s.powf(p / 2.0 - 2.0) * v * v * g
            }
        })
        .sum::<f64>()
        / phi.len() as f64
}

/// Evaluates the energy inequality at a solution `φ` with constant `a`, on the solver grid.
pub fn energy_inequality(problem: &Problem, phi: &ScalarField, a: f64, p: f64) -> Result<EnergyCheck> {
    energy_inequality_refined(problem, phi, a, p, 1)
}

/// As [`energy_inequality`], with `φ` and `f` interpolated onto a grid `refine` times finer
/// before quadrature.
pub fn energy_inequality_refined(
    problem: &Problem,
    phi: &ScalarField,
    a: f64,
    p: f64,
    refine: usize,
) -> Result<EnergyCheck> {
    if !(p >= 2.0) {
        return Err(Error::Invalid(format!("energy inequality needs p ≥ 2, got {p}")));
    }
    if refine == 0 {
        return Err(Error::Invalid("refinement factor must be positive".into()));
    }
    let n = problem.algebra().n();
    let (phi, f) = if refine == 1 {
        (phi.clone(), problem.rhs().clone())
    } else {
        (phi.upsample(refine)?, problem.rhs().upsample(refine)?)
    };
    let delta = 1e-8 * phi.max_abs();
    let lhs = regularized_energy(&phi, p, delta);
    let coarse = regularized_energy(&phi, p, 10.0 * delta);
    let integrand = phi.zip_with(&f, |v, f| (1.0 - a * f.exp()) * v * v.abs().powf(p - 2.0));
    let rhs = energy_prefactor(n, p) * integrand.mean() * energy_pairing(n);
    Ok(EnergyCheck {
        p,
        lhs,
        rhs,
        slack: rhs - lhs,
        delta_sensitivity: (coarse - lhs).abs(),
    })
}

/// Largest deviation in `|∇ψ|² = 4n ∂ψ∧∂_Jψ∧Ω₀^{n−1}/Ω₀ⁿ`, relative to `max |∇ψ|²`.
pub fn gradient_identity_check(calc: &TorusCalculus, psi: &ScalarField) -> Result<f64> {
    let (lhs, rhs) = calc.grad_norm_identity(psi)?;
    let scale = lhs.max_abs();
    if scale == 0.0 {
        return Ok(rhs.max_abs());
    }
    Ok(lhs.sub(&rhs).max_abs() / scale)
}

/// Smallest `C` with `‖ψ‖_{L²} ≤ C‖∇ψ‖_{L²}` for mean-zero `ψ`, from the exact spectrum.
pub fn poincare_constant(grid: &TorusGrid) -> f64 {
    let smallest = grid
        .mode_wavenumbers()
        .iter()
        .map(|k| k.iter().map(|v| v * v).sum::<f64>())
        .filter(|&k2| k2 > 0.0)
        .fold(f64::INFINITY, f64::min);
    1.0 / smallest.sqrt()
}

/// `‖ψ − mean ψ‖_{L²} / ‖∇ψ‖_{L²}`.
pub fn poincare_ratio(psi: &ScalarField) -> f64 {
    let grad = psi.grad_norm_sq().mean().sqrt();
    psi.mean_zero().l2_norm() / grad
}

/// `‖φ‖_{Lᵖ}` over the exponents, with the fitted `Q₁` of `‖φ‖_{Lᵖ} ≤ Q₁ p^{−2n/p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpTable {
    pub rows: Vec<(f64, f64)>,
    pub c0: f64,
    pub fitted_q1: f64,
    pub monotone: bool,
    /// `c0 − ‖φ‖_{L^{p_max}}`.
    pub limit_gap: f64,
}

pub fn lp_growth_table(phi: &ScalarField, params: &MoserParameters, n: usize) -> LpTable {
    let rows: Vec<(f64, f64)> = params.p_list.iter().map(|&p| (p, phi.lp_norm(p))).collect();
    let c0 = phi.max_abs();
    let fitted_q1 = rows
        .iter()
        .map(|&(p, v)| v * p.powf(2.0 * n as f64 / p))
        .fold(0.0, f64::max);
    let tol = 1e-12 * c0.max(1e-300);
    let monotone = rows.windows(2).all(|w| w[1].1 + tol >= w[0].1) && rows.iter().all(|r| r.1 <= c0 + tol);
    let limit_gap = c0 - rows.last().map_or(0.0, |r| r.1);
    LpTable {
        rows,
        c0,
        fitted_q1,
        monotone,
        limit_gap,
    }
}

/// One member of a `C⁰` sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub points: usize,
    pub f_c0: f64,
    pub phi_c0: Option<f64>,
    pub newton_iter: Option<usize>,
    pub error: Option<String>,
}

/// Right-hand side `amplitude · Σ a cos(2πk·x + θ)` on the given grid.
pub type RhsBuilder<'a> = dyn Fn(&TorusGrid, f64) -> ScalarField + Sync + 'a;

/// Solves every `(amplitude, grid)` pair concurrently; failures are recorded per row.
pub fn c0_bound_sweep(
    grids: &[TorusGrid],
    amplitudes: &[f64],
    rhs: &RhsBuilder<'_>,
    opts: &SolveOptions,
) -> Vec<SweepRow> {
    let jobs: Vec<(f64, &TorusGrid)> = amplitudes
        .iter()
        .flat_map(|&a| grids.iter().map(move |g| (a, g)))
        .collect();
    jobs.par_iter()
        .map(|&(amplitude, grid)| {
            let f = rhs(grid, amplitude);
            let f_c0 = f.max_abs();
            let outcome = Problem::new(grid.clone(), f, true)
                .map_err(|e| e.to_string())
                .and_then(|p| newton_solve(&p, &ScalarField::zeros(grid), opts).map_err(|e| e.to_string()));
            match outcome {
                Ok(s) => SweepRow {
                    amplitude,
                    points: grid.points(),
                    f_c0,
                    phi_c0: Some(s.phi.max_abs()),
                    newton_iter: Some(s.newton_iter),
                    error: None,
                },
                Err(e) => SweepRow {
                    amplitude,
                    points: grid.points(),
                    f_c0,
                    phi_c0: None,
                    newton_iter: None,
                    error: Some(e),
                },
            }
        })
        .collect()
}

/// Relative change of `‖φ‖_{C⁰}` between the two finest grids, per amplitude.
pub fn refinement_change(rows: &[SweepRow]) -> Vec<(f64, Option<f64>)> {
    let mut amps: Vec<f64> = rows.iter().map(|r| r.amplitude).collect();
    amps.sort_by(f64::total_cmp);
    amps.dedup();
    amps.into_iter()
        .map(|a| {
            let mut mine: Vec<&SweepRow> = rows.iter().filter(|r| r.amplitude == a).collect();
            mine.sort_by_key(|r| r.points);
            let change = match mine.as_slice() {
                [.., coarse, fine] => match (coarse.phi_c0, fine.phi_c0) {
                    (Some(c), Some(f)) if f > 0.0 => Some((c - f).abs() / f),
                    (Some(c), Some(f)) if c == 0.0 && f == 0.0 => Some(0.0),
                    _ => None,
                },
                _ => None,
            };
            (a, change)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng;
    use std::f64::consts::PI;

    #[test]
    fn moser_parameters() {
        let m = MoserParameters::new(2, vec![4.0, 2.0]).unwrap();
        assert!((m.kappa - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.p_list, vec![2.0, 4.0]);
        assert!(MoserParameters::new(1, vec![1.5]).is_err());
        let g = MoserParameters::geometric(1);
        assert_eq!(g.p_list, vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    }

    #[test]
    fn prefactor_at_p2_n1() {
        assert!((energy_prefactor(1, 2.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_data_gives_zero_sides() {
        let g = TorusGrid::standard(1, 8).unwrap();
        let p = Problem::new(g.clone(), ScalarField::zeros(&g), true).unwrap();
        let e = energy_inequality(&p, &ScalarField::zeros(&g), 1.0, 2.0).unwrap();
        assert_eq!((e.lhs, e.rhs), (0.0, 0.0));
        assert!(energy_inequality(&p, &ScalarField::zeros(&g), 1.0, 1.5).is_err());
    }

    #[test]
    fn energy_inequality_on_solved_instances() {
        let g = TorusGrid::standard(1, 16).unwrap();
        let f = ScalarField::from_fn(&g, |x| 0.3 * (2.0 * PI * x[0]).cos() + 0.1 * (2.0 * PI * (x[0] - x[1])).sin());
        let p = Problem::new(g.clone(), f, true).unwrap();
        let s = newton_solve(&p, &ScalarField::zeros(&g), &SolveOptions::default()).unwrap();
        // at n = 1 the inequality is an identity; even exponents integrate smooth data
        for exp in [2.0, 4.0] {
            let e = energy_inequality(&p, &s.phi, s.a, exp).unwrap();
            assert!(e.lhs > 0.0);
            assert!(e.slack.abs() <= 1e-8 * e.lhs, "p={exp}: {e:?}");
        }
        // |φ| has a kink on the zero set, so p = 3 carries an O(h²) quadrature error
        let coarse = energy_inequality(&p, &s.phi, s.a, 3.0).unwrap();
        let fine = energy_inequality_refined(&p, &s.phi, s.a, 3.0, 4).unwrap();
        assert!(fine.slack.abs() < coarse.slack.abs() / 8.0, "{coarse:?} {fine:?}");
    }

    #[test]
    fn poincare_constant_is_one_over_two_pi() {
        let g = TorusGrid::standard(1, 8).unwrap();
        assert!((poincare_constant(&g) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let mut r = rng(3);
        for _ in 0..10 {
            let u = ScalarField::random_band_limited(&g, &mut r, 3, 4);
            assert!(poincare_ratio(&u) <= poincare_constant(&g) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lp_table_is_monotone() {
        let g = TorusGrid::standard(1, 16).unwrap();
        let u = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin() * 0.3);
        let t = lp_growth_table(&u, &MoserParameters::geometric(1), 1);
        assert!(t.monotone);
        assert!(t.fitted_q1.is_finite() && t.fitted_q1 > 0.0);
        let z = lp_growth_table(&ScalarField::zeros(&g), &MoserParameters::geometric(1), 1);
        assert!(z.rows.iter().all(|r| r.1 == 0.0));
    }

    #[test]
    fn sweep_is_linear_at_n1() {
        let grids = [TorusGrid::standard(1, 8).unwrap(), TorusGrid::standard(1, 16).unwrap()];
        let rhs = |g: &TorusGrid, a: f64| ScalarField::from_fn(g, |x| a * (2.0 * PI * x[0]).cos());
        let rows = c0_bound_sweep(&grids, &[0.0, 0.01, 0.02], &rhs, &SolveOptions::default());
        let at = |a: f64| rows.iter().find(|r| r.amplitude == a && r.points == 16).unwrap().phi_c0.unwrap();
        assert_eq!(at(0.0), 0.0);
        assert!((at(0.02) / at(0.01) - 2.0).abs() < 0.02);
        assert!(refinement_change(&rows).iter().all(|(_, c)| c.unwrap() < 0.01));
    }
}
