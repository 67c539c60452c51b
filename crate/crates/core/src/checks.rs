//! Named numerical identity checks shared by the runner, the acceptance suite and the guide.
//!
//! Every check draws from its own seeded stream, so the result of one check does
//! not depend on which other checks ran before it.

use crate::error::Result;
use crate::estimates::{gradient_identity_check, poincare_constant};
use crate::fiber::{FiberAlgebra, FiberForm, Unit};
use crate::field::{read_snapshot, write_snapshot, FormField, ScalarField, TorusCalculus, TorusGrid};
use crate::quat_maps::{
    random_strong_positive_11, random_strong_positive_kk, volume_density, PositivityMode, QuatMaps,
};
use crate::sampling::{random_bidegree_form, random_form, rng, SampleRng};
use crate::solver::Problem;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Outcome of one identity check.
///
/// Upper-bound checks pass when `max_error ≤ tolerance`. Sign checks store the
/// negated margin in `max_error` with `tolerance = 0` and pass only when the
/// margin is strictly positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Short description of the identity being tested.
    pub anchor: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    pub fn at_most(name: &str, anchor: &str, max_error: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            max_error,
            tolerance,
            passed: max_error.is_finite() && max_error <= tolerance,
        }
    }

    pub fn positive(name: &str, anchor: &str, margin: f64) -> Self {
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            max_error: -margin,
            tolerance: 0.0,
            passed: margin.is_finite() && margin > 0.0,
        }
    }

    /// Passes when `value > threshold`; stored as `max_error = −value`, `tolerance = −threshold`.
    pub fn above(name: &str, anchor: &str, value: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            max_error: -value,
            tolerance: -threshold,
            passed: value.is_finite() && value > threshold,
        }
    }
}

/// Sample counts and seed for a suite run.
#[derive(Clone, Copy, Debug)]
pub struct SuiteParams {
    pub samples: usize,
    /// Test forms per positivity verdict.
    pub positivity_tests: usize,
    pub seed: u64,
}

impl SuiteParams {
    pub fn new(samples: usize, seed: u64) -> Self {
        SuiteParams {
            samples,
            positivity_tests: 512,
            seed,
        }
    }

    fn stream(&self, tag: u64) -> SampleRng {
        rng(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag))
    }
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Random pure bidegree `(p,q)` with `p + q ≤ max`.
fn random_bidegree(r: &mut SampleRng, max: usize) -> (usize, usize) {
    let total = r.random_range(0..=max);
    let p = r.random_range(0..=total);
    (p, total - p)
}

pub fn r_multiplicative(alg: &FiberAlgebra, params: &SuiteParams) -> Result<f64> {
    let mut r = params.stream(1);
    let top = 2 * alg.n();
    let mut worst: f64 = 0.0;
    for _ in 0..params.samples {
        let (p1, q1) = random_bidegree(&mut r, top);
        let (p2, q2) = random_bidegree(&mut r, top - p1 - q1);
        let x = random_bidegree_form(&mut r, alg.dim(), p1, q1);
        let y = random_bidegree_form(&mut r, alg.dim(), p2, q2);
        let lhs = alg.r_map(&x.wedge(&y))?;
        let rhs = alg.r_map(&x)?.wedge(&alg.r_map(&y)?);
        worst = worst.max(relative(lhs.distance(&rhs), x.norm() * y.norm()));
    }
    Ok(worst)
}

pub fn r_conjugation(alg: &FiberAlgebra, params: &SuiteParams) -> Result<f64> {
    let mut r = params.stream(2);
    let mut worst: f64 = 0.0;
    for _ in 0..params.samples {
        let (p, q) = random_bidegree(&mut r, 2 * alg.n());
        let l = random_bidegree_form(&mut r, alg.dim(), p, q);
        worst = worst.max(relative(alg.r_conjugation_residual(&l)?, l.norm()));
    }
    Ok(worst)
}

/// Worst violation of `(√−1)ᵖ R` mapping strongly positive `(p,p)`-forms into the
/// strongly q-positive cone: q-reality defect plus negative margin, both relative.
pub fn r_positivity_transport(maps: &QuatMaps, params: &SuiteParams) -> Result<f64> {
    let alg = maps.algebra();
    let mut r = params.stream(3);
    let mut worst: f64 = 0.0;
    for s in 0..params.samples {
        let p = 1 + s % alg.n();
        let eta = random_strong_positive_kk(alg, &mut r, p);
        let image = alg.r_map(&eta)?.scale(IM.powu(p as u32));
        let dev = alg.q_real_deviation(&image);
        worst = worst.max(dev);
        if dev > 1e-11 {
            continue;
        }
        let verdict = alg.check_positive_2p(&image, maps.theta(), PositivityMode::Weak, 16, &mut r)?;
        worst = worst.max(relative((-verdict.margin).max(0.0), image.norm()));
    }
    Ok(worst)
}

pub fn v_duality(maps: &QuatMaps, params: &SuiteParams) -> Result<f64> {
    let alg = maps.algebra();
    let n = alg.n();
    let theta_bar = maps.theta().form.conj();
    let mut r = params.stream(4);
    let mut worst: f64 = 0.0;
    for s in 0..params.samples {
        let p = s % (n + 1);
        let eta = random_bidegree_form(&mut r, alg.dim(), 2 * p, 0);
        let xi = random_bidegree_form(&mut r, alg.dim(), n - p, n - p);
        let lhs = maps.v_pairing(&eta)?.wedge(&xi).top_coeff();
        let rhs = eta.wedge(&alg.r_map(&xi)?).wedge(&theta_bar).top_coeff();
        worst = worst.max(relative((lhs - rhs).norm(), eta.norm() * xi.norm()));
    }
    Ok(worst)
}

pub fn v_conjugation(maps: &QuatMaps, params: &SuiteParams) -> Result<f64> {
    let alg = maps.algebra();
    let mut r = params.stream(5);
    let mut worst: f64 = 0.0;
    for s in 0..params.samples {
        let p = s % (alg.n() + 1);
        let eta = random_bidegree_form(&mut r, alg.dim(), 2 * p, 0);
        let lhs = maps.v_map(&alg.extend_j(&eta.conj()))?;
        let rhs = maps.v_map(&eta)?.conj();
        worst = worst.max(relative(lhs.distance(&rhs), eta.norm()));
    }
    Ok(worst)
}

/// Smallest normalized singular value of `V` over all even holomorphic degrees.
pub fn v_injectivity(maps: &QuatMaps) -> Result<f64> {
    let mut least = f64::INFINITY;
    for p in 0..=maps.algebra().n() {
        least = least.min(maps.v_injectivity(p)?);
    }
    Ok(least)
}

pub fn phi_reality(maps: &QuatMaps) -> Result<f64> {
    let phi = maps.phi()?.form;
    Ok(relative(phi.distance(&phi.conj()), phi.norm()))
}

/// `Φ` is a pure `(n,n)`-form of top weight.
pub fn phi_top_weight(maps: &QuatMaps) -> Result<f64> {
    let alg = maps.algebra();
    let n = alg.n();
    let phi = maps.phi()?.form;
    let off = phi.distance(&phi.bidegree_part(n, n));
    let low = alg.project_plus(&phi)?.distance(&phi);
    Ok(relative(off + low, phi.norm()))
}

/// Smallest pairing of `Φ` with sampled products of strongly positive `(1,1)`-forms.
pub fn phi_weak_positivity(maps: &QuatMaps, params: &SuiteParams) -> Result<f64> {
    let alg = maps.algebra();
    let phi = maps.phi()?.form;
    let mut r = params.stream(6);
    let (margin, _) = alg.weak_positivity_margin(&phi, params.positivity_tests, &mut r)?;
    Ok(margin / phi.norm())
}

/// Smallest volume density of `ω_I^{n−1}∧Φ∧κ` over sampled strongly positive `(1,1)`-forms `κ`.
pub fn phi_interior_margin(maps: &QuatMaps, params: &SuiteParams) -> Result<f64> {
    let alg = maps.algebra();
    let (wi, _, _) = alg.omega_forms();
    let base = wi.pow(alg.n() - 1).wedge(&maps.phi()?.form);
    let mut r = params.stream(7);
    let mut least = volume_density(alg, &base.wedge(&wi)) / wi.norm();
    for _ in 0..params.samples {
        let terms = r.random_range(1..=alg.dim());
        let kappa = random_strong_positive_11(alg, &mut r, terms);
        least = least.min(volume_density(alg, &base.wedge(&kappa)));
    }
    Ok(least)
}

/// Spectral `P₊` against `½(η − η(·J, ·J))` on random `(1,1)`-forms.
pub fn projection_closed_form(alg: &FiberAlgebra, params: &SuiteParams) -> Result<f64> {
    let mut r = params.stream(8);
    let mut worst: f64 = 0.0;
    for _ in 0..params.samples {
        let eta = random_bidegree_form(&mut r, alg.dim(), 1, 1);
        let spectral = alg.project_plus(&eta)?;
        let closed = alg.project_plus_11(&eta)?;
        worst = worst.max((&spectral - &closed).max_abs());
    }
    Ok(worst)
}

pub fn projection_fixes_metric_form(alg: &FiberAlgebra) -> Result<f64> {
    let (wi, _, _) = alg.omega_forms();
    Ok(relative(alg.project_plus(&wi)?.distance(&wi), wi.norm()))
}

/// Real symmetric matrix of `X ↦ η(X, X·I)` for a `(1,1)`-form.
fn hermitian_quadratic_form(alg: &FiberAlgebra, eta: &FiberForm) -> DMatrix<f64> {
    let dim = alg.dim();
    let mut q = DMatrix::zeros(dim, dim);
    let basis: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for a in 0..dim {
        for b in 0..dim {
            let yi = alg.structure().act_on_vector(Unit::I, &basis[b]);
            q[(a, b)] = alg.evaluate(eta, &[&basis[a], &yi]).re;
        }
    }
    (&q + q.transpose()) * 0.5
}

/// Falsification search for a nonzero SU(2)-invariant positive `(1,1)`-form.
///
/// Each sample is the invariant part `ξ` of a random strongly positive form. The
/// recorded error is `‖ξ‖` whenever `ξ` is positive semidefinite, so a pass means
/// every positive invariant sample vanished.
pub fn su2_invariant_positive_vanishes(alg: &FiberAlgebra, params: &SuiteParams) -> Result<f64> {
    let mut r = params.stream(9);
    let mut worst: f64 = 0.0;
    for _ in 0..params.samples {
        let terms = r.random_range(1..=alg.dim());
        let kappa = random_strong_positive_11(alg, &mut r, terms);
        let xi = alg.project_su2_invariant(&kappa)?;
        let eig = hermitian_quadratic_form(alg, &xi).symmetric_eigenvalues();
        let scale = xi.norm().max(f64::MIN_POSITIVE);
        if eig.min() >= -1e-12 * scale {
            worst = worst.max(xi.norm());
        }
    }
    Ok(worst)
}

/// All fiber-level checks for quaternionic dimension `n`.
pub fn fiber_suite(n: usize, params: &SuiteParams) -> Result<Vec<CheckResult>> {
    let alg = FiberAlgebra::shared(n)?;
    let maps = QuatMaps::standard(Arc::clone(&alg))?;
    let tag = |s: &str| format!("{s}[n={n}]");
    Ok(vec![
        CheckResult::at_most(&tag("r_multiplicative"), "R(a^b) = R(a)^R(b)", r_multiplicative(&alg, params)?, 1e-10),
        CheckResult::at_most(&tag("r_conjugation"), "R(conj l) = (-1)^p conj(J R(l))", r_conjugation(&alg, params)?, 1e-10),
        CheckResult::at_most(
            &tag("r_positivity_transport"),
            "i^p R maps strongly positive (p,p) to strongly q-positive (2p,0)",
            r_positivity_transport(&maps, params)?,
            1e-10,
        ),
        CheckResult::at_most(&tag("v_duality"), "V(eta)^xi = eta^R(xi)^conj(Theta)", v_duality(&maps, params)?, 1e-10),
        CheckResult::at_most(&tag("v_conjugation"), "V(J conj eta) = conj V(eta)", v_conjugation(&maps, params)?, 1e-10),
        CheckResult::above(&tag("v_injectivity"), "V has full column rank", v_injectivity(&maps)?, 1e-8),
        CheckResult::at_most(&tag("phi_real"), "Phi = conj Phi", phi_reality(&maps)?, 1e-10),
        CheckResult::at_most(&tag("phi_top_weight"), "Phi is a top-weight (n,n)-form", phi_top_weight(&maps)?, 1e-10),
        CheckResult::above(
            &tag("phi_weakly_positive"),
            "Phi pairs nonnegatively with strongly positive forms",
            phi_weak_positivity(&maps, params)?,
            -1e-10,
        ),
        CheckResult::positive(&tag("phi_interior"), "omega^(n-1)^Phi lies inside the positive cone", phi_interior_margin(&maps, params)?),
        CheckResult::at_most(
            &tag("projection_closed_form"),
            "P+ on (1,1) = (eta - eta(.J,.J))/2",
            projection_closed_form(&alg, params)?,
            1e-12,
        ),
        CheckResult::at_most(&tag("projection_metric_form"), "P+(omega_I) = omega_I", projection_fixes_metric_form(&alg)?, 1e-10),
        CheckResult::at_most(
            &tag("su2_invariant_positive_vanishes"),
            "SU(2)-invariant positive (1,1)-forms vanish",
            su2_invariant_positive_vanishes(&alg, params)?,
            1e-10,
        ),
    ])
}

fn random_field_form(calc: &TorusCalculus, r: &mut SampleRng, p: usize, q: usize) -> Result<FormField> {
    let alg = calc.algebra();
    let mut out = FormField::zero(calc.grid());
    for _ in 0..2 {
        let u = ScalarField::random_band_limited(calc.grid(), r, 2, 3);
        let form = random_bidegree_form(r, alg.dim(), p, q);
        out = out.add(&FormField::times_constant(&u, &form))?;
    }
    Ok(out)
}

fn field_gap(a: &FormField, b: &FormField) -> Result<f64> {
    Ok(relative(a.sub(b)?.max_abs(), a.max_abs().max(b.max_abs())))
}

/// `R∂ = ∂R` and `R∂̄ = ∂_J R` on random band-limited fields.
pub fn r_intertwining(calc: &TorusCalculus, params: &SuiteParams) -> Result<f64> {
    let n = calc.algebra().n();
    let mut r = params.stream(20);
    let mut worst: f64 = 0.0;
    for _ in 0..params.samples {
        let (p, q) = random_bidegree(&mut r, 2 * n - 1);
        let lambda = random_field_form(calc, &mut r, p, q)?;
        let r_lambda = calc.r_map(&lambda)?;
        worst = worst.max(field_gap(&calc.r_map(&calc.pd(&lambda)?)?, &calc.pd(&r_lambda)?)?);
        worst = worst.max(field_gap(&calc.r_map(&calc.dbar(&lambda)?)?, &calc.pd_j(&r_lambda)?)?);
    }
    Ok(worst)
}

/// `d² = 0`, `∂² = ∂̄² = 0` and `∂∂_J = −∂_J∂`.
pub fn differential_identities(calc: &TorusCalculus, params: &SuiteParams) -> Result<(f64, f64)> {
    let n = calc.algebra().n();
    let mut r = params.stream(21);
    let (mut square, mut anti): (f64, f64) = (0.0, 0.0);
    for _ in 0..params.samples {
        let k = r.random_range(0..=2 * n);
        let mut eta = FormField::zero(calc.grid());
        let u = ScalarField::random_band_limited(calc.grid(), &mut r, 2, 3);
        eta = eta.add(&FormField::times_constant(&u, &random_form(&mut r, calc.algebra().dim(), k)))?;
        let d_eta = calc.d(&eta)?;
        let scale = d_eta.max_abs().max(f64::MIN_POSITIVE) * 4.0 * PI;
        square = square.max(calc.d(&d_eta)?.max_abs() / scale);
        let pd_eta = calc.pd(&eta)?;
        square = square.max(calc.pd(&pd_eta)?.max_abs() / scale);
        square = square.max(calc.dbar(&calc.dbar(&eta)?)?.max_abs() / scale);

        let p = r.random_range(0..=2 * n - 2);
        let hol = random_field_form(calc, &mut r, p, 0)?;
        let a = calc.pd(&calc.pd_j(&hol)?)?;
        let b = calc.pd_j(&calc.pd(&hol)?)?;
        anti = anti.max(relative(a.add(&b)?.max_abs(), a.max_abs()));
    }
    Ok((square, anti))
}

/// Integral of `d` of a random `(4n−1)`-form field, relative to the integrand size.
pub fn stokes(calc: &TorusCalculus, params: &SuiteParams) -> Result<f64> {
    let dim = calc.algebra().dim();
    let mut r = params.stream(22);
    let mut worst: f64 = 0.0;
    for _ in 0..params.samples.min(20) {
        let u = ScalarField::random_band_limited(calc.grid(), &mut r, 2, 3);
        let eta = FormField::times_constant(&u, &random_form(&mut r, dim, dim - 1));
        let d_eta = calc.d(&eta)?;
        let total = calc.integrate(&d_eta)?;
        worst = worst.max(relative(total.norm(), d_eta.max_abs()));
    }
    Ok(worst)
}

pub fn gradient_identity(calc: &TorusCalculus, params: &SuiteParams) -> Result<f64> {
    let mut r = params.stream(23);
    let mut worst: f64 = 0.0;
    for _ in 0..params.samples.min(50) {
        let psi = ScalarField::random_band_limited(calc.grid(), &mut r, 2, 4);
        worst = worst.max(gradient_identity_check(calc, &psi)?);
    }
    Ok(worst)
}

/// Random potential of sup norm `amplitude`, strictly inside the positivity cone.
pub fn random_admissible_potential(problem: &Problem, r: &mut SampleRng, amplitude: f64) -> ScalarField {
    loop {
        let psi = ScalarField::random_band_limited(problem.grid(), r, 2, 3).mean_zero();
        let phi = psi.scale(amplitude / psi.max_abs());
        if problem.cone_margin(&phi) > 0.0 {
            return phi;
        }
    }
}

/// Agreement of the quaternionic, `P₊`-form and Hessian-form residuals.
pub fn formulation_agreement(problem: &Problem, params: &SuiteParams, trials: usize) -> Result<f64> {
    let mut r = params.stream(24);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let phi = random_admissible_potential(problem, &mut r, 0.01);
        let a = problem.calibrate_a(&phi)?;
        worst = worst.max(problem.first_reformulation_check(&phi, a)?);
        worst = worst.max(problem.hessian_form_check(&phi, a)?);
    }
    Ok(worst)
}

/// Ratio of central-difference errors of the log residual's linearization at `ε = 10⁻³` and `10⁻⁴`.
pub fn linearization_fd_ratio(problem: &Problem, params: &SuiteParams) -> Result<f64> {
    let mut r = params.stream(25);
    let phi = random_admissible_potential(problem, &mut r, 0.02);
    let psi = ScalarField::random_band_limited(problem.grid(), &mut r, 2, 3).mean_zero();
    let psi = psi.scale(1.0 / psi.max_abs());
    let a = problem.a_at(&phi)?;
    let exact = problem.log_linearized_operator(&psi, &phi)?;
    let fd_error = |eps: f64| -> Result<f64> {
        let plus = problem.log_residual(&phi.add(&psi.scale(eps)), a)?;
        let minus = problem.log_residual(&phi.sub(&psi.scale(eps)), a)?;
        let fd = plus.sub(&minus).scale(0.5 / eps);
        Ok(fd.sub(&exact).l2_norm())
    };
    Ok(fd_error(1e-3)? / fd_error(1e-4)?)
}

pub fn snapshot_round_trip(field: &FormField) -> Result<bool> {
    let mut first = Vec::new();
    write_snapshot(&mut first, field)?;
    let back = read_snapshot(&mut first.as_slice())?;
    let mut second = Vec::new();
    write_snapshot(&mut second, &back)?;
    Ok(first == second && back == *field)
}

/// Field-level checks on `grid`, including solver-facing consistency checks.
pub fn field_suite(grid: &TorusGrid, params: &SuiteParams) -> Result<Vec<CheckResult>> {
    let n = grid.n();
    let alg = FiberAlgebra::shared(n)?;
    let calc = TorusCalculus::new(Arc::clone(&alg), grid.clone())?;
    let problem = Problem::new(grid.clone(), ScalarField::zeros(grid), true)?;
    let tag = |s: &str| format!("{s}[n={n},N={}]", grid.points());
    let (square, anti) = differential_identities(&calc, params)?;
    let mut r = params.stream(26);
    let snap_field = random_field_form(&calc, &mut r, 1, 1)?;
    let snapshot_ok = snapshot_round_trip(&snap_field)?;
    let ratio = linearization_fd_ratio(&problem, params)?;
    let poincare = poincare_constant(grid);
    Ok(vec![
        CheckResult::at_most(&tag("r_intertwining"), "R d' = d' R and R d'' = d_J R", r_intertwining(&calc, params)?, 1e-10),
        CheckResult::at_most(&tag("d_squared"), "d^2 = 0 and its (1,0)/(0,1) parts", square, 1e-10),
        CheckResult::at_most(&tag("d_dj_anticommute"), "d' d_J = -d_J d'", anti, 1e-10),
        CheckResult::at_most(&tag("stokes"), "integral of an exact top form vanishes", stokes(&calc, params)?, 1e-10),
        CheckResult::at_most(
            &tag("gradient_identity"),
            "|grad psi|^2 density from d'psi ^ d_J psi ^ Omega^(n-1)",
            gradient_identity(&calc, params)?,
            1e-8,
        ),
        CheckResult::at_most(
            &tag("formulations_agree"),
            "quaternionic, P+ and Hessian residuals coincide",
            formulation_agreement(&problem, params, params.samples.min(20))?,
            1e-9,
        ),
        CheckResult::at_most(
            &tag("linearization_fd"),
            "central differences converge at second order",
            (ratio / 100.0 - 1.0).abs(),
            0.1,
        ),
        CheckResult::at_most(&tag("poincare_constant"), "mean-zero Poincare constant is 1/(2 pi)", (poincare * 2.0 * PI - 1.0).abs(), 1e-10),
        CheckResult::at_most(&tag("snapshot_round_trip"), "write-read-write is byte identical", if snapshot_ok { 0.0 } else { 1.0 }, 0.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_suite_passes_at_n1() {
        let checks = fiber_suite(1, &SuiteParams::new(30, 7)).unwrap();
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn field_suite_passes_at_n1() {
        let grid = TorusGrid::standard(1, 8).unwrap();
        let checks = field_suite(&grid, &SuiteParams::new(10, 7)).unwrap();
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn sign_checks_require_strict_margin() {
        assert!(!CheckResult::positive("x", "y", 0.0).passed);
        assert!(CheckResult::positive("x", "y", 1e-300).passed);
        assert!(!CheckResult::at_most("x", "y", f64::NAN, 1.0).passed);
        assert!(CheckResult::above("x", "y", 2.0, 1.0).passed);
    }

    #[test]
    fn streams_are_independent_of_order() {
        let p = SuiteParams::new(5, 3);
        let alg = FiberAlgebra::shared(1).unwrap();
        let a = r_conjugation(&alg, &p).unwrap();
        r_multiplicative(&alg, &p).unwrap();
        assert_eq!(a, r_conjugation(&alg, &p).unwrap());
    }
}
