use super::calculus::TorusCalculus;
use super::form_field::FormField;
use super::scalar::ScalarField;
use crate::fiber::{wedge_sign, FiberForm, Unit};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Pfaffian of a skew-symmetric `m × m` row-major matrix, by skew Gaussian elimination.
pub fn pfaffian(a: &[Complex64], m: usize) -> Complex64 {
    if m % 2 == 1 {
        return Complex64::default();
    }
    if m == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut a = a.to_vec();
    let mut pf = Complex64::new(1.0, 0.0);
    for k in (0..m - 1).step_by(2) {
        let p = (k + 1..m)
            .max_by(|&i, &j| a[k * m + i].norm().total_cmp(&a[k * m + j].norm()))
            .expect("nonempty");
        if p != k + 1 {
            for j in 0..m {
                a.swap((k + 1) * m + j, p * m + j);
            }
            for i in 0..m {
                a.swap(i * m + k + 1, i * m + p);
            }
            pf = -pf;
        }
        let pivot = a[k * m + k + 1];
        if pivot.norm() == 0.0 {
            return Complex64::default();
        }
        pf *= pivot;
        for i in k + 2..m {
            let tau = a[k * m + i] / pivot;
            if tau.norm() == 0.0 {
                continue;
            }
            for j in 0..m {
                let v = a[(k + 1) * m + j];
                a[i * m + j] -= tau * v;
            }
            for j in 0..m {
                let v = a[j * m + k + 1];
                a[j * m + i] -= tau * v;
            }
        }
    }
    pf
}

/// Spectral `∂∂_J` on scalars, and the Pfaffian form of `(Ω₀ + ∂∂_Jφ)ⁿ`.
///
/// Holomorphic frame index `2i` is slot `i` of the `2n × 2n` skew matrix.
#[derive(Clone, Debug)]
pub struct HessianOperator {
    calc: TorusCalculus,
    pairs: Vec<(usize, usize)>,
    symbols: Vec<Vec<Complex64>>,
    base: Vec<Complex64>,
    base_pf: Complex64,
    cone_base: DMatrix<f64>,
    cone_parts: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

fn pair_mask(i: usize, j: usize) -> u32 {
    (1 << (2 * i)) | (1 << (2 * j))
}

impl HessianOperator {
    pub fn new(calc: &TorusCalculus) -> Self {
        let alg = calc.algebra();
        let m = 2 * alg.n();
        let dim = alg.dim();
        let len = calc.grid().len();
        let aj = alg.covector_action(Unit::J);
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .collect();
        let mut symbols = vec![vec![Complex64::default(); len]; pairs.len()];
        for a in (0..dim).step_by(2) {
            for c in (1..dim).step_by(2) {
                for d in (0..dim).step_by(2) {
                    let coef = -aj[(d, c)];
                    if a == d || coef.norm() == 0.0 {
                        continue;
                    }
                    let (lo, hi) = (a.min(d) / 2, a.max(d) / 2);
                    let slot = pairs.iter().position(|&p| p == (lo, hi)).expect("pair");
                    let s = coef * wedge_sign(1 << a, 1 << d);
                    let (da, dc) = (calc.symbol(a), calc.symbol(c));
                    for (f, out) in symbols[slot].iter_mut().enumerate() {
                        *out += s * da[f] * dc[f];
                    }
                }
            }
        }
        let omega0 = alg.omega0();
        let mut base = vec![Complex64::default(); m * m];
        for (&(i, j), _) in pairs.iter().zip(&symbols) {
            let v = omega0.coeff(pair_mask(i, j));
            base[i * m + j] = v;
            base[j * m + i] = -v;
        }
        let base_pf = pfaffian(&base, m);
        let cone_base = alg.q_quadratic_form(&omega0);
        let cone_parts = pairs
            .iter()
            .map(|&(i, j)| {
                let b = FiberForm::basis(dim, pair_mask(i, j));
                (
                    alg.q_quadratic_form(&b),
                    alg.q_quadratic_form(&b.scale(Complex64::new(0.0, 1.0))),
                )
            })
            .collect();
        HessianOperator {
            calc: calc.clone(),
            pairs,
            symbols,
            base,
            base_pf,
            cone_base,
            cone_parts,
        }
    }

    pub fn calculus(&self) -> &TorusCalculus {
        &self.calc
    }

    /// Index pairs `(i, j)`, `i < j`, of the stored components.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `Pf` of the constant part `Ω₀`.
    pub fn base_pfaffian(&self) -> Complex64 {
        self.base_pf
    }

    /// Components of `∂∂_J u` on `e_{2i}∧e_{2j}`, one array per pair.
    pub fn components(&self, u: &ScalarField) -> Vec<Vec<Complex64>> {
        let spec = u.spectrum();
        self.symbols
            .par_iter()
            .map(|sym| {
                let mut v: Vec<Complex64> = spec.iter().zip(sym).map(|(a, b)| a * b).collect();
                self.calc.grid().ifft(&mut v);
                v
            })
            .collect()
    }

    /// `∂∂_J u` as a form field.
    pub fn apply(&self, u: &ScalarField) -> FormField {
        let mut out = FormField::zero(self.calc.grid());
        for (&(i, j), v) in self.pairs.iter().zip(self.components(u)) {
            if v.iter().any(|x| x.norm() > 0.0) {
                out.terms.insert(pair_mask(i, j), v);
            }
        }
        out
    }

    fn matrix_at(&self, comps: &[Vec<Complex64>], point: usize) -> Vec<Complex64> {
        let m = 2 * self.calc.algebra().n();
        let mut a = self.base.clone();
        for (&(i, j), v) in self.pairs.iter().zip(comps) {
            a[i * m + j] += v[point];
            a[j * m + i] -= v[point];
        }
        a
    }

    /// `(Ω₀ + ∂∂_Jφ)ⁿ / Ω₀ⁿ` at every grid point.
    pub fn ratio(&self, phi: &ScalarField) -> Vec<Complex64> {
        let m = 2 * self.calc.algebra().n();
        let comps = self.components(phi);
        (0..phi.len())
            .into_par_iter()
            .map(|p| pfaffian(&self.matrix_at(&comps, p), m) / self.base_pf)
            .collect()
    }

    /// `∂Pf/∂m_ij` of `Ω₀ + ∂∂_Jφ`, divided by `Pf(Ω₀)`, one array per pair.
    pub fn cofactors(&self, phi: &ScalarField) -> Vec<Vec<Complex64>> {
        let m = 2 * self.calc.algebra().n();
        let comps = self.components(phi);
        let per_point: Vec<Vec<Complex64>> = (0..phi.len())
            .into_par_iter()
            .map(|p| {
                let a = self.matrix_at(&comps, p);
                self.pairs
                    .iter()
                    .map(|&(i, j)| {
                        let keep: Vec<usize> = (0..m).filter(|&r| r != i && r != j).collect();
                        let minor: Vec<Complex64> = keep
                            .iter()
                            .flat_map(|&r| keep.iter().map(move |&c| (r, c)))
                            .map(|(r, c)| a[r * m + c])
                            .collect();
                        let sign = if (i + j + 1) % 2 == 0 { 1.0 } else { -1.0 };
                        pfaffian(&minor, m - 2) * sign / self.base_pf
                    })
                    .collect()
            })
            .collect();
        (0..self.pairs.len())
            .map(|k| per_point.iter().map(|row| row[k]).collect())
            .collect()
    }

    /// Derivative of [`ratio`](Self::ratio) at the point whose cofactors are given, applied to `psi`.
    pub fn linearized(&self, cofactors: &[Vec<Complex64>], psi: &ScalarField) -> Vec<Complex64> {
        let comps = self.components(psi);
        let mut out = vec![Complex64::default(); psi.len()];
        for (c, h) in cofactors.iter().zip(&comps) {
            for ((o, a), b) in out.iter_mut().zip(c).zip(h) {
                *o += a * b;
            }
        }
        out
    }

    /// Fourier multiplier of the linearization at `φ = 0`.
    pub fn flat_symbol(&self) -> Vec<Complex64> {
        let zero = ScalarField::zeros(self.calc.grid());
        let cof = self.cofactors(&zero);
        let mut out = vec![Complex64::default(); self.calc.grid().len()];
        for (c, sym) in cof.iter().zip(&self.symbols) {
            for (o, s) in out.iter_mut().zip(sym) {
                *o += c[0] * s;
            }
        }
        out
    }

    /// Smallest eigenvalue over the grid of `X ↦ (Ω₀ + ∂∂_Jφ)(X, X·J)`,
    /// relative to the same quantity for `Ω₀`.
    pub fn cone_margin(&self, phi: &ScalarField) -> f64 {
        let comps = self.components(phi);
        let base_min = self.cone_base.clone().symmetric_eigen().eigenvalues.min();
        (0..phi.len())
            .into_par_iter()
            .map(|p| {
                let mut q = self.cone_base.clone();
                for ((re, im), v) in self.cone_parts.iter().zip(&comps) {
                    q += re * v[p].re + im * v[p].im;
                }
                q.symmetric_eigen().eigenvalues.min() / base_min
            })
            .reduce(|| f64::INFINITY, f64::min)
    }
}
