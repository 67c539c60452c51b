use super::form_field::FormField;
use super::grid::TorusGrid;
use super::scalar::ScalarField;
use crate::error::{Error, Result};
use crate::fiber::{wedge_sign, FiberAlgebra, FiberForm, Unit};
use crate::quat_maps::ThetaForm;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

const ODD: u32 = 0xAAAA_AAAA;

/// Spectral exterior calculus of forms on a torus grid, in the fiber frame.
#[derive(Clone)]
pub struct TorusCalculus {
    alg: Arc<FiberAlgebra>,
    grid: TorusGrid,
    /// `D_c` Fourier multipliers: `e_c`-component of `d` on a mode.
    symbols: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for TorusCalculus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusCalculus")
            .field("grid", &self.grid)
            .finish()
    }
}

#[derive(Clone, Copy)]
enum Part {
    All,
    Holomorphic,
    Antiholomorphic,
}

impl TorusCalculus {
    pub fn new(alg: Arc<FiberAlgebra>, grid: TorusGrid) -> Result<Self> {
        if alg.n() != grid.n() {
            return Err(Error::GridMismatch);
        }
        let t = alg.dx_in_frame();
        let k = grid.mode_wavenumbers();
        let symbols = (0..alg.dim())
            .map(|c| {
                k.iter()
                    .map(|kk| {
                        let mut acc = Complex64::default();
                        for (slot, &axis) in grid.active_axes().iter().enumerate() {
                            acc += t[(axis, c)] * Complex64::new(0.0, kk[slot]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(TorusCalculus { alg, grid, symbols })
    }

    pub fn algebra(&self) -> &Arc<FiberAlgebra> {
        &self.alg
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub(crate) fn symbol(&self, c: usize) -> &[Complex64] {
        &self.symbols[c]
    }

    fn check_grid(&self, eta: &FormField) -> Result<()> {
        if eta.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn differentiate(&self, eta: &FormField, part: Part) -> FormField {
        let dim = self.alg.dim();
        let pieces: Vec<(u32, f64, Vec<Complex64>)> = eta
            .terms
            .par_iter()
            .flat_map_iter(|(&mask, values)| {
                let mut spec = values.clone();
                self.grid.fft(&mut spec);
                let mut out = Vec::new();
                for c in 0..dim {
                    let bit = 1u32 << c;
                    let keep = match part {
                        Part::All => true,
                        Part::Holomorphic => c % 2 == 0,
                        Part::Antiholomorphic => c % 2 == 1,
                    };
                    if !keep || mask & bit != 0 || self.symbols[c].iter().all(|s| s.norm() == 0.0) {
                        continue;
                    }
                    let mut d: Vec<Complex64> = spec
                        .iter()
                        .zip(&self.symbols[c])
                        .map(|(a, b)| a * b)
                        .collect();
                    self.grid.ifft(&mut d);
                    out.push((mask | bit, wedge_sign(bit, mask), d));
                }
                out
            })
            .collect();
        let mut out = FormField::zero(&self.grid);
        for (m, s, v) in pieces {
            out.accumulate(m, Complex64::new(s, 0.0), &v);
        }
        out
    }

    /// Exterior derivative.
    pub fn d(&self, eta: &FormField) -> Result<FormField> {
        self.check_grid(eta)?;
        Ok(self.differentiate(eta, Part::All))
    }

    /// `∂`, the `(1,0)` part of `d`.
    pub fn pd(&self, eta: &FormField) -> Result<FormField> {
        self.check_grid(eta)?;
        Ok(self.differentiate(eta, Part::Holomorphic))
    }

    /// `∂̄`, the `(0,1)` part of `d`.
    pub fn dbar(&self, eta: &FormField) -> Result<FormField> {
        self.check_grid(eta)?;
        Ok(self.differentiate(eta, Part::Antiholomorphic))
    }

    /// Applies a constant linear fiber map pointwise, via its values on basis forms.
    pub fn apply_fiber_map(
        &self,
        eta: &FormField,
        map: impl Fn(&FiberForm) -> Result<FiberForm>,
    ) -> Result<FormField> {
        let mut out = FormField::zero(&eta.grid);
        for (&m, values) in &eta.terms {
            let image = map(&FiberForm::basis(self.alg.dim(), m))?;
            for (im, c) in image.terms() {
                out.accumulate(im, c, values);
            }
        }
        Ok(out)
    }

    /// `J` applied pointwise and factorwise.
    pub fn extend_j(&self, eta: &FormField) -> FormField {
        self.apply_fiber_map(eta, |f| Ok(self.alg.extend_j(f)))
            .expect("infallible")
    }

    /// `∂_J = J⁻¹ ∘ ∂̄ ∘ J` on `(p,0)`-forms.
    pub fn pd_j(&self, eta: &FormField) -> Result<FormField> {
        self.check_grid(eta)?;
        if let Some(&m) = eta.terms.keys().find(|&&m| m & ODD != 0) {
            return Err(Error::Bidegree {
                expected: (m.count_ones() as usize, 0),
                found: format!("{:?}", crate::fiber::mask_bidegree(m)),
            });
        }
        let jd = self.dbar(&self.extend_j(eta))?;
        self.apply_fiber_map(&jd, |f| Ok(self.alg.extend_j_inv(f)))
    }

    /// `P₊ ∘ d` for forms of degree `< 2n`.
    pub fn d_plus(&self, eta: &FormField) -> Result<FormField> {
        let half = 2 * self.alg.n();
        if let Some(&m) = eta.terms.keys().find(|&&m| m.count_ones() as usize >= half) {
            return Err(Error::AboveMiddleDegree {
                degree: m.count_ones() as usize,
                half: half - 1,
            });
        }
        let d = self.d(eta)?;
        self.apply_fiber_map(&d, |f| self.alg.project_plus(f))
    }

    /// `R` applied pointwise to a field whose components have degree `≤ 2n`.
    pub fn r_map(&self, eta: &FormField) -> Result<FormField> {
        self.apply_fiber_map(eta, |f| self.alg.r_map(f))
    }

    /// Pointwise wedge product, followed by the 2/3 filter if the grid asks for it.
    pub fn wedge(&self, a: &FormField, b: &FormField) -> Result<FormField> {
        self.check_grid(a)?;
        self.check_grid(b)?;
        let mut out = FormField::zero(&self.grid);
        for (&ma, va) in &a.terms {
            for (&mb, vb) in &b.terms {
                if ma & mb != 0 {
                    continue;
                }
                let prod: Vec<Complex64> = va.par_iter().zip(vb).map(|(x, y)| x * y).collect();
                out.accumulate(ma | mb, Complex64::new(wedge_sign(ma, mb), 0.0), &prod);
            }
        }
        if self.grid.dealias() {
            for v in out.terms.values_mut() {
                self.grid.filter(v);
            }
        }
        Ok(out)
    }

    /// `∫ η` for a top-degree field, against the oriented volume form of unit total mass.
    pub fn integrate(&self, top: &FormField) -> Result<Complex64> {
        self.check_grid(top)?;
        let full = (1u32 << self.alg.dim()) - 1;
        if top.terms.keys().any(|&m| m != full) {
            return Err(Error::NotTopDegree);
        }
        Ok(match top.terms.get(&full) {
            Some(v) => v.iter().sum::<Complex64>() / v.len() as f64 * self.alg.top_to_volume(),
            None => Complex64::default(),
        })
    }

    /// `∫ η ∧ Θ̄` for a `(2n,0)`-field.
    pub fn integrate_with_theta(&self, eta: &FormField, theta: &ThetaForm) -> Result<Complex64> {
        let hol = self.alg.holomorphic_top_mask();
        if eta.terms.keys().any(|&m| m != hol) {
            return Err(Error::NotTopDegree);
        }
        let bar = FormField::constant(&self.grid, &theta.form.conj());
        self.integrate(&self.wedge(eta, &bar)?)
    }

    /// Pointwise ratio of a `(2n,0)`-field to the constant `Ω₀ⁿ`.
    pub fn holomorphic_density(&self, eta: &FormField) -> Result<Vec<Complex64>> {
        let hol = self.alg.holomorphic_top_mask();
        if eta.terms.keys().any(|&m| m != hol) {
            return Err(Error::NotTopDegree);
        }
        let reference = self.alg.omega0().pow(self.alg.n()).coeff(hol);
        Ok(match eta.terms.get(&hol) {
            Some(v) => v.iter().map(|x| x / reference).collect(),
            None => vec![Complex64::default(); self.grid.len()],
        })
    }

    /// Both sides of `|∇ψ|² = 4n · ∂ψ∧∂_Jψ∧Ω₀^{n−1} / Ω₀ⁿ`.
    pub fn grad_norm_identity(&self, psi: &ScalarField) -> Result<(ScalarField, ScalarField)> {
        let n = self.alg.n();
        let u = FormField::scalar(psi);
        let a = self.pd(&u)?;
        let b = self.pd_j(&u)?;
        let rest = FormField::constant(&self.grid, &self.alg.omega0().pow(n - 1));
        let top = self.wedge(&self.wedge(&a, &b)?, &rest)?;
        let density: Vec<Complex64> = self
            .holomorphic_density(&top)?
            .into_iter()
            .map(|v| v * (4 * n) as f64)
            .collect();
        Ok((
            psi.grad_norm_sq(),
            ScalarField::from_complex(&self.grid, &density)?,
        ))
    }

    /// `∂∂_J u` computed by composing the first-order operators.
    pub fn pd_pdj(&self, u: &ScalarField) -> Result<FormField> {
        self.pd(&self.pd_j(&FormField::scalar(u))?)
    }

    /// `∂∂̄ u` computed by composing the first-order operators.
    pub fn pd_dbar(&self, u: &ScalarField) -> Result<FormField> {
        self.pd(&self.dbar(&FormField::scalar(u))?)
    }

    /// `L·η` with `L ∈ {I, J, K}` applied factorwise.
    pub fn extend(&self, unit: Unit, eta: &FormField) -> FormField {
        self.apply_fiber_map(eta, |f| Ok(self.alg.extend(unit, f)))
            .expect("infallible")
    }
}
