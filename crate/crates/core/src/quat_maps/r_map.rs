use crate::error::{Error, Result};
use crate::fiber::{FiberAlgebra, FiberForm, Unit};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const ODD: u32 = 0xAAAA_AAAA;

fn binomial(m: usize, q: usize) -> f64 {
    (0..q).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

impl FiberAlgebra {
    /// Holomorphic masks of degree `m`, in lexicographic order.
    pub fn holomorphic_block(&self, m: usize) -> Vec<u32> {
        self.block(m)
            .iter()
            .copied()
            .filter(|mask| mask & ODD == 0)
            .collect()
    }

    /// `Σ_q t^q Ψ_q(β)` where `Ψ_q(β)` is the `t^q` coefficient of
    /// `∧ᵢ(bᵢ + t·J bᵢ)` divided by `C(m, q)`, for `β = ∧ᵢ bᵢ` a holomorphic
    /// basis element. Entry `q` has bidegree `(m−q, q)` and top weight.
    pub fn spread(&self, mask: u32) -> Vec<FiberForm> {
        let m = mask.count_ones() as usize;
        let mut poly = vec![self.one()];
        for c in 0..self.dim() {
            if mask & (1 << c) == 0 {
                continue;
            }
            let b = self.frame_form(c);
            let jb = self
                .act_on_covector(Unit::J, &b)
                .expect("frame element has degree 1");
            let mut next = vec![self.zero(); poly.len() + 1];
            for (q, f) in poly.iter().enumerate() {
                next[q] += &f.wedge(&b);
                next[q + 1] += &f.wedge(&jb);
            }
            poly = next;
        }
        poly.iter()
            .enumerate()
            .map(|(q, f)| f.scale_re(1.0 / binomial(m, q)))
            .collect()
    }

    fn r_matrix(&self, m: usize) -> &DMatrix<Complex64> {
        self.r_cache[m].get_or_init(|| {
            let hol = self.holomorphic_block(m);
            let rows = self.block(m).len();
            let groups = m + 1;
            let mut psi = DMatrix::from_element(rows, groups * hol.len(), Complex64::default());
            for (j, &mask) in hol.iter().enumerate() {
                for (q, f) in self.spread(mask).iter().enumerate() {
                    for (mi, v) in f.terms() {
                        psi[(self.position(mi), q * hol.len() + j)] += v;
                    }
                }
            }
            let gram = psi.adjoint() * &psi;
            let pinv = gram.try_inverse().expect("spread map is injective") * psi.adjoint();
            let mut collapse =
                DMatrix::from_element(hol.len(), groups * hol.len(), Complex64::default());
            for q in 0..groups {
                for j in 0..hol.len() {
                    collapse[(j, q * hol.len() + j)] = Complex64::new(1.0, 0.0);
                }
            }
            let top = &self.weight_decompose(m).components[0].1;
            collapse * pinv * top
        })
    }

    /// `R: Λ^{p,q} → Λ^{p+q,0}`: top-weight projection followed by the
    /// identification of its `(p,q)` component with `Λ^{p+q,0}`.
    ///
    /// Identity on holomorphic forms, multiplicative, and zero on lower weights.
    pub fn r_map(&self, eta: &FiberForm) -> Result<FiberForm> {
        if eta.is_zero() {
            return Ok(self.zero());
        }
        let (p, q) = eta.bidegree().ok_or_else(|| Error::Bidegree {
            expected: (0, 0),
            found: eta.describe(),
        })?;
        let m = p + q;
        let half = 2 * self.n();
        if m > half {
            return Err(Error::AboveMiddleDegree { degree: m, half });
        }
        Ok(self.r_map_unchecked(eta, m))
    }

    /// Applies `R` degree by degree to a form with components of degree `≤ 2n`.
    pub(crate) fn r_map_unchecked(&self, eta: &FiberForm, m: usize) -> FiberForm {
        let v = self.block_vector(eta, m);
        let out: DVector<Complex64> = self.r_matrix(m) * v;
        FiberForm::from_terms(
            self.dim(),
            self.holomorphic_block(m)
                .into_iter()
                .zip(out.iter().copied()),
        )
    }

    /// `‖R(λ̄) − (−1)^p·conj(J R(λ))‖` for `λ` of bidegree `(p,q)`.
    pub fn r_conjugation_residual(&self, lambda: &FiberForm) -> Result<f64> {
        if lambda.is_zero() {
            return Ok(0.0);
        }
        let (p, _) = lambda.bidegree().ok_or_else(|| Error::Bidegree {
            expected: (0, 0),
            found: lambda.describe(),
        })?;
        let lhs = self.r_map(&lambda.conj())?;
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = self.extend_j(&self.r_map(lambda)?).conj().scale_re(sign);
        Ok(lhs.distance(&rhs))
    }
}
