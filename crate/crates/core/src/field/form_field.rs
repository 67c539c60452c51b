use super::grid::TorusGrid;
use super::scalar::ScalarField;
use crate::error::{Error, Result};
use crate::fiber::{mask_bidegree, FiberForm};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Differential form on the torus: one coefficient array per frame multi-index.
///
/// Only nonzero components are stored; each array has `grid.len()` entries in
/// physical space.
#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    pub grid: TorusGrid,
    pub terms: BTreeMap<u32, Vec<Complex64>>,
}

impl FormField {
    pub fn zero(grid: &TorusGrid) -> Self {
        FormField {
            grid: grid.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// A constant form, repeated at every grid point.
    pub fn constant(grid: &TorusGrid, form: &FiberForm) -> Self {
        let mut out = FormField::zero(grid);
        for (m, v) in form.terms() {
            out.terms.insert(m, vec![v; grid.len()]);
        }
        out
    }

    /// The degree-0 form with the values of `u`.
    pub fn scalar(u: &ScalarField) -> Self {
        let mut out = FormField::zero(&u.grid);
        out.terms.insert(0, u.complex());
        out
    }

    /// `u · form` with a constant fiber form.
    pub fn times_constant(u: &ScalarField, form: &FiberForm) -> Self {
        let mut out = FormField::zero(&u.grid);
        for (m, c) in form.terms() {
            out.terms
                .insert(m, u.values.iter().map(|&v| c * v).collect());
        }
        out
    }

    pub fn component(&self, mask: u32) -> Option<&[Complex64]> {
        self.terms.get(&mask).map(|v| v.as_slice())
    }

    /// Adds `scale · values` to the component `mask`.
    pub fn accumulate(&mut self, mask: u32, scale: Complex64, values: &[Complex64]) {
        let len = self.grid.len();
        let slot = self
            .terms
            .entry(mask)
            .or_insert_with(|| vec![Complex64::default(); len]);
        for (s, v) in slot.iter_mut().zip(values) {
            *s += scale * v;
        }
    }

    /// Fiber form at one grid point.
    pub fn at(&self, dim: usize, point: usize) -> FiberForm {
        FiberForm::from_terms(dim, self.terms.iter().map(|(&m, v)| (m, v[point])))
    }

    pub fn degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|m| m.count_ones() as usize);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let mut it = self.terms.keys().map(|&m| mask_bidegree(m));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms
            .values()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            for x in v.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &FormField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for (&m, v) in &other.terms {
            out.accumulate(m, Complex64::new(1.0, 0.0), v);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FormField) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Drops components whose largest entry is at most `tol`.
    pub fn prune(mut self, tol: f64) -> Self {
        self.terms.retain(|_, v| v.iter().any(|x| x.norm() > tol));
        self
    }

    /// Componentwise conjugate.
    pub fn conj(&self) -> Self {
        let mut out = FormField::zero(&self.grid);
        for (&m, v) in &self.terms {
            let (cm, sign) = crate::fiber::conj_mask(m);
            out.accumulate(
                cm,
                Complex64::new(sign, 0.0),
                &v.iter().map(|x| x.conj()).collect::<Vec<_>>(),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_and_bidegree() {
        let g = TorusGrid::new(1, &[0], 4).unwrap();
        let f = FormField::constant(&g, &FiberForm::basis(4, 0b0101));
        assert_eq!(f.degree(), Some(2));
        assert_eq!(f.bidegree(), Some((2, 0)));
        let mixed = f
            .add(&FormField::constant(&g, &FiberForm::basis(4, 0b0011)))
            .unwrap();
        assert_eq!(mixed.degree(), Some(2));
        assert_eq!(mixed.bidegree(), None);
        assert_eq!(FormField::zero(&g).degree(), None);
    }

    #[test]
    fn grid_mismatch() {
        let g = TorusGrid::new(1, &[0], 4).unwrap();
        let h = TorusGrid::new(1, &[0], 8).unwrap();
        assert!(matches!(
            FormField::zero(&g).add(&FormField::zero(&h)),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn conj_matches_fiber_conj() {
        let g = TorusGrid::new(1, &[0], 4).unwrap();
        let form = FiberForm::from_terms(
            4,
            [
                (0b0011, Complex64::new(1.0, 2.0)),
                (0b0110, Complex64::new(0.0, 1.0)),
            ],
        );
        let f = FormField::constant(&g, &form).conj();
        assert!(f.at(4, 2).distance(&form.conj()) < 1e-15);
    }
}
