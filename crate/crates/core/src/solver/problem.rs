use crate::error::{Error, Result};
use crate::fiber::{FiberAlgebra, FiberForm};
use crate::field::{FormField, HessianOperator, ScalarField, TorusCalculus, TorusGrid};
use crate::quat_maps::{PhiForm, QuatMaps, ThetaForm};
use num_complex::Complex64;
use std::sync::Arc;

/// Data of one quaternionic Monge-Ampère problem on a flat torus with the standard
/// constant HKT form `Ω₀`.
#[derive(Clone)]
pub struct Problem {
    calc: TorusCalculus,
    hessian: HessianOperator,
    theta: ThetaForm,
    phi: PhiForm,
    f: ScalarField,
    calibrate_a: bool,
    pairing: f64,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("Problem")
            .field("grid", self.calc.grid())
            .field("calibrate_a", &self.calibrate_a)
            .finish()
    }
}

impl Problem {
    /// Problem with `Θ = Ω₀ⁿ/n!`.
    pub fn new(grid: TorusGrid, f: ScalarField, calibrate_a: bool) -> Result<Self> {
        let alg = FiberAlgebra::shared(grid.n())?;
        let theta = ThetaForm::standard(&alg, 1.0)?;
        Problem::with_theta(grid, theta, f, calibrate_a)
    }

    pub fn with_theta(grid: TorusGrid, theta: ThetaForm, f: ScalarField, calibrate_a: bool) -> Result<Self> {
        if f.grid != grid {
            return Err(Error::GridMismatch);
        }
        if let Some(bad) = f.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite right-hand side value {bad}")));
        }
        let alg = FiberAlgebra::shared(grid.n())?;
        let omega0 = alg.omega0();
        if !alg.check_q_real(&omega0) {
            return Err(Error::NotQReal {
                deviation: alg.q_real_deviation(&omega0),
            });
        }
        let pairing = theta.volume_ratio(&alg);
        if pairing <= 0.0 {
            return Err(Error::SingularPairing);
        }
        let maps = QuatMaps::new(alg.clone(), theta.clone());
        let phi = maps.phi()?;
        let calc = TorusCalculus::new(alg, grid)?;
        let hessian = HessianOperator::new(&calc);
        Ok(Problem {
            calc,
            hessian,
            theta,
            phi,
            f,
            calibrate_a,
            pairing,
        })
    }

    /// Problem whose right-hand side is `log((Ω₀+∂∂_Jφ*)ⁿ/Ω₀ⁿ)`, so `φ*` solves it with `A = 1`.
    pub fn manufactured(grid: TorusGrid, phi_star: &ScalarField) -> Result<Self> {
        let zero = ScalarField::zeros(&grid);
        let probe = Problem::new(grid.clone(), zero, true)?;
        if probe.cone_margin(phi_star) <= 0.0 {
            return Err(Error::Invalid("manufactured potential leaves the positivity cone".into()));
        }
        let ratio = probe.ratio(phi_star)?;
        let f = ratio.map(f64::ln);
        Ok(Problem { f, ..probe })
    }

    pub fn with_rhs(&self, f: ScalarField) -> Result<Self> {
        if f.grid != *self.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Problem { f, ..self.clone() })
    }

    pub fn with_calibration(&self, calibrate_a: bool) -> Self {
        Problem {
            calibrate_a,
            ..self.clone()
        }
    }

    pub fn algebra(&self) -> &Arc<FiberAlgebra> {
        self.calc.algebra()
    }

    pub fn grid(&self) -> &TorusGrid {
        self.calc.grid()
    }

    pub fn calculus(&self) -> &TorusCalculus {
        &self.calc
    }

    pub fn hessian(&self) -> &HessianOperator {
        &self.hessian
    }

    pub fn theta(&self) -> &ThetaForm {
        &self.theta
    }

    pub fn phi_form(&self) -> &PhiForm {
        &self.phi
    }

    pub fn rhs(&self) -> &ScalarField {
        &self.f
    }

    pub fn calibrates_a(&self) -> bool {
        self.calibrate_a
    }

    /// `Ω₀ⁿ∧Θ̄` in units of the volume form.
    pub fn pairing(&self) -> f64 {
        self.pairing
    }

    fn n(&self) -> usize {
        self.algebra().n()
    }

    /// `(Ω₀+∂∂_Jφ)ⁿ/Ω₀ⁿ`.
    pub fn ratio(&self, phi: &ScalarField) -> Result<ScalarField> {
        ScalarField::from_complex(self.grid(), &self.hessian.ratio(phi))
    }

    /// Normalized smallest eigenvalue of the quadratic form of `Ω₀+∂∂_Jφ` over the grid.
    pub fn cone_margin(&self, phi: &ScalarField) -> f64 {
        self.hessian.cone_margin(phi)
    }

    /// `A` making the integrated residual vanish.
    pub fn calibrate_a(&self, phi: &ScalarField) -> Result<f64> {
        let num = self.ratio(phi)?.mean() * self.pairing;
        let den = self.f.map(f64::exp).mean() * self.pairing;
        if den <= 0.0 || !den.is_finite() {
            return Err(Error::Invalid(format!("calibration denominator {den} is not positive")));
        }
        Ok(num / den)
    }

    /// `A` used at `φ`: calibrated, or 1.
    pub fn a_at(&self, phi: &ScalarField) -> Result<f64> {
        if self.calibrate_a {
            self.calibrate_a(phi)
        } else {
            Ok(1.0)
        }
    }

    /// `∫(e^f − 1) Ω₀ⁿ∧Θ̄`.
    pub fn necessary_condition_value(&self) -> f64 {
        self.f.map(|v| v.exp() - 1.0).mean() * self.pairing
    }

    /// `(Ω₀+∂∂_Jφ)ⁿ/Ω₀ⁿ − A e^f`.
    pub fn residual_density(&self, phi: &ScalarField, a: f64) -> Result<ScalarField> {
        Ok(self.ratio(phi)?.zip_with(&self.f, |r, f| r - a * f.exp()))
    }

    /// `(Ω₀+∂∂_Jφ)ⁿ − A e^f Ω₀ⁿ` as a `(2n,0)`-field.
    pub fn residual_quat(&self, phi: &ScalarField, a: f64) -> Result<FormField> {
        let top = self.algebra().omega0().pow(self.n());
        Ok(FormField::times_constant(&self.residual_density(phi, a)?, &top))
    }

    /// `(ω_I − √−1∂∂̄φ)ⁿ∧Φ − A e^f ω_Iⁿ∧Φ` as a top-degree field.
    pub fn residual_hessian(&self, phi: &ScalarField, a: f64) -> Result<FormField> {
        self.residual_against(phi, a, &self.phi.form)
    }

    fn residual_against(&self, phi: &ScalarField, a: f64, test: &FiberForm) -> Result<FormField> {
        let alg = self.algebra();
        let omega_i = alg.omega_forms().0;
        let ddbar = self.calc.pd_dbar(phi)?.scale(Complex64::new(0.0, -1.0));
        let form = FormField::constant(self.grid(), &omega_i).add(&ddbar)?;
        let mut power = form.clone();
        for _ in 1..self.n() {
            power = self.calc.wedge(&power, &form)?;
        }
        let lhs = self.calc.wedge(&power, &FormField::constant(self.grid(), test))?;
        let rhs_form = omega_i.pow(self.n()).wedge(test);
        let rhs = FormField::times_constant(&self.f.map(|v| a * v.exp()), &rhs_form);
        lhs.sub(&rhs)
    }

    /// `residual_quat ∧ Θ̄`.
    pub fn residual_quat_paired(&self, phi: &ScalarField, a: f64) -> Result<FormField> {
        let bar = FormField::constant(self.grid(), &self.theta.form.conj());
        self.calc.wedge(&self.residual_quat(phi, a)?, &bar)
    }

    /// `P₊(ω_Iⁿ)` and the constant `c` with `P₊(ω_Iⁿ) = c·Φ`, plus the relative defect of that proportionality.
    pub fn projected_volume(&self) -> Result<(FiberForm, f64, f64)> {
        let alg = self.algebra();
        let p = alg.project_plus(&alg.omega_forms().0.pow(self.n()))?;
        let phi = &self.phi.form;
        let dot = |a: &FiberForm, b: &FiberForm| -> Complex64 { a.terms().map(|(m, v)| v * b.coeff(m).conj()).sum() };
        let c = dot(&p, phi) / dot(phi, phi);
        let defect = p.distance(&phi.scale(c)) / p.norm();
        Ok((p, c.re, defect))
    }

    /// Largest pointwise deviation between the `P₊(ω_Iⁿ)`-paired residual, rescaled
    /// by `1/c`, and `residual_quat∧Θ̄`, relative to `max |A e^f Ω₀ⁿ∧Θ̄|`.
    pub fn first_reformulation_check(&self, phi: &ScalarField, a: f64) -> Result<f64> {
        let (p, c, _) = self.projected_volume()?;
        let first = self.residual_against(phi, a, &p)?.scale(Complex64::new(1.0 / c, 0.0));
        let quat = self.residual_quat_paired(phi, a)?;
        Ok(first.sub(&quat)?.max_abs() / self.density_scale(a))
    }

    /// Largest pointwise deviation between `residual_hessian` and `residual_quat∧Θ̄`, relative
    /// to `max |A e^f Ω₀ⁿ∧Θ̄|`.
    pub fn hessian_form_check(&self, phi: &ScalarField, a: f64) -> Result<f64> {
        let hess = self.residual_hessian(phi, a)?;
        let quat = self.residual_quat_paired(phi, a)?;
        Ok(hess.sub(&quat)?.max_abs() / self.density_scale(a))
    }

    fn density_scale(&self, a: f64) -> f64 {
        let full = self.algebra().top_to_volume().abs();
        a * self.f.map(f64::exp).max_abs() * self.pairing / full
    }

    /// `d/dε ratio(φ+εψ)` from the cofactors at `φ`.
    pub fn linearized_operator(&self, psi: &ScalarField, phi: &ScalarField) -> Result<ScalarField> {
        if self.cone_margin(phi) <= 0.0 {
            return Err(Error::Invalid("linearization requested outside the positivity cone".into()));
        }
        let cof = self.hessian.cofactors(phi);
        ScalarField::from_complex(self.grid(), &self.hessian.linearized(&cof, psi))
    }

    /// `d/dε log ratio(φ+εψ)`.
    pub fn log_linearized_operator(&self, psi: &ScalarField, phi: &ScalarField) -> Result<ScalarField> {
        Ok(self.linearized_operator(psi, phi)?.zip_with(&self.ratio(phi)?, |l, r| l / r))
    }

    /// `log((Ω₀+∂∂_Jφ)ⁿ/Ω₀ⁿ) − f − log A`.
    pub fn log_residual(&self, phi: &ScalarField, a: f64) -> Result<ScalarField> {
        Ok(self.ratio(phi)?.zip_with(&self.f, |r, f| r.ln() - f - a.ln()))
    }

    /// Fourier multiplier of the linearization at `φ = 0`; real and nonpositive.
    pub fn flat_symbol(&self) -> Vec<f64> {
        self.hessian.flat_symbol().iter().map(|v| v.re).collect()
    }
}
