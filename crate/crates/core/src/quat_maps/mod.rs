//! The maps `R` and `V`, the forms `Θ` and `Φ = V(1)`, and positivity cones.

mod nnls;
mod positivity;
mod r_map;

pub use positivity::{
    elementary_positive_11, elementary_q_positive, random_strong_positive_11,
    random_strong_positive_kk, random_strong_q_positive, volume_density, PositivityMode,
    PositivityStatus, PositivityVerdict, Witness,
};

use crate::error::{Error, Result};
use crate::fiber::{wedge_sign, FiberAlgebra, FiberForm};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::{Arc, OnceLock};

/// Constant q-real, q-positive `(2n,0)`-form.
#[derive(Clone, Debug)]
pub struct ThetaForm {
    pub form: FiberForm,
}

impl ThetaForm {
    /// `scale · Ω₀ⁿ / n!`.
    pub fn standard(alg: &FiberAlgebra, scale: f64) -> Result<Self> {
        let n = alg.n();
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        ThetaForm::new(alg, alg.omega0().pow(n).scale_re(scale / fact))
    }

    /// Validates bidegree, q-reality and positivity.
    pub fn new(alg: &FiberAlgebra, form: FiberForm) -> Result<Self> {
        let n = alg.n();
        if form.bidegree() != Some((2 * n, 0)) {
            return Err(Error::Bidegree {
                expected: (2 * n, 0),
                found: form.describe(),
            });
        }
        let deviation = alg.q_real_deviation(&form);
        if deviation > 1e-11 {
            return Err(Error::NotQReal { deviation });
        }
        if form.wedge(&form.conj()).top_coeff().norm() == 0.0
            || Self::orientation(alg, &form) <= 0.0
        {
            return Err(Error::SingularPairing);
        }
        Ok(ThetaForm { form })
    }

    fn orientation(alg: &FiberAlgebra, form: &FiberForm) -> f64 {
        let reference = alg.omega0().pow(alg.n());
        (form.coeff(alg.holomorphic_top_mask()) / reference.coeff(alg.holomorphic_top_mask())).re
    }

    /// `Ω₀ⁿ ∧ Θ̄` as a multiple of the oriented volume form.
    pub fn volume_ratio(&self, alg: &FiberAlgebra) -> f64 {
        volume_density(alg, &alg.omega0().pow(alg.n()).wedge(&self.form.conj()))
    }
}

/// The real, weakly positive `(n,n)`-form `V(1)`.
#[derive(Clone, Debug)]
pub struct PhiForm {
    pub form: FiberForm,
}

struct VTable {
    /// `(target mask, sign, R(e_test) ∧ Θ̄)` for each test basis element.
    rows: Vec<(u32, f64, FiberForm)>,
}

/// `R`, `V` and `Φ` attached to a fixed `Θ`.
pub struct QuatMaps {
    alg: Arc<FiberAlgebra>,
    theta: ThetaForm,
    tables: Vec<OnceLock<VTable>>,
    phi: OnceLock<PhiForm>,
}

impl QuatMaps {
    pub fn new(alg: Arc<FiberAlgebra>, theta: ThetaForm) -> Self {
        let tables = (0..=alg.n()).map(|_| OnceLock::new()).collect();
        QuatMaps {
            alg,
            theta,
            tables,
            phi: OnceLock::new(),
        }
    }

    /// Uses `Θ = Ω₀ⁿ/n!`.
    pub fn standard(alg: Arc<FiberAlgebra>) -> Result<Self> {
        let theta = ThetaForm::standard(&alg, 1.0)?;
        Ok(QuatMaps::new(alg, theta))
    }

    pub fn algebra(&self) -> &FiberAlgebra {
        &self.alg
    }

    pub fn theta(&self) -> &ThetaForm {
        &self.theta
    }

    fn table(&self, p: usize) -> &VTable {
        self.tables[p].get_or_init(|| {
            let a = &self.alg;
            let n = a.n();
            let full = (1u32 << a.dim()) - 1;
            let theta_bar = self.theta.form.conj();
            let rows = a
                .block(2 * (n - p))
                .iter()
                .copied()
                .filter(|&m| crate::fiber::mask_bidegree(m) == (n - p, n - p))
                .map(|test| {
                    let target = full ^ test;
                    let r = a.r_map_unchecked(&FiberForm::basis(a.dim(), test), 2 * (n - p));
                    (target, wedge_sign(target, test), r.wedge(&theta_bar))
                })
                .collect();
            VTable { rows }
        })
    }

    /// The `(n+p, n+p)`-form `W(η)` characterized by `W(η) ∧ ξ = η ∧ R(ξ) ∧ Θ̄`
    /// for every `(n−p, n−p)`-form `ξ`.
    ///
    /// This pairing satisfies `W(J η̄) = (−1)^{n−p} conj(W(η))`, so it is not real
    /// on q-real input when `n − p` is odd. [`v_map`](Self::v_map) fixes the phase.
    pub fn v_pairing(&self, eta: &FiberForm) -> Result<FiberForm> {
        let p = self.half_degree(eta)?;
        let mut out = self.alg.zero();
        if eta.is_zero() {
            return Ok(out);
        }
        for (target, sign, rhs) in &self.table(p).rows {
            let v = eta.wedge(rhs).top_coeff();
            if v != Complex64::default() {
                out.set(*target, v * *sign);
            }
        }
        Ok(out)
    }

    /// `V(η) = (√−1)^{n−p} W(η)`, i.e. `V(η) ∧ ξ = η ∧ (√−1)^{n−p} R(ξ) ∧ Θ̄`.
    ///
    /// Pairs `η` against the positivity-preserving map `(√−1)^k R` on `(k,k)`-forms,
    /// so `V(J η̄) = conj(V(η))` and weakly q-positive forms go to weakly positive ones.
    pub fn v_map(&self, eta: &FiberForm) -> Result<FiberForm> {
        let p = self.half_degree(eta)?;
        let phase = Complex64::new(0.0, 1.0).powu((self.alg.n() - p) as u32);
        Ok(self.v_pairing(eta)?.scale(phase))
    }

    fn half_degree(&self, eta: &FiberForm) -> Result<usize> {
        let n = self.alg.n();
        match eta.bidegree() {
            Some((a, 0)) if a % 2 == 0 && a <= 2 * n => Ok(a / 2),
            None if eta.is_zero() => Ok(0),
            _ => Err(Error::Bidegree {
                expected: (2, 0),
                found: eta.describe(),
            }),
        }
    }

    /// Matrix of `V` on the holomorphic basis of `Λ^{2p,0}`.
    pub fn v_matrix(&self, p: usize) -> Result<DMatrix<Complex64>> {
        let a = &self.alg;
        let n = a.n();
        if p > n {
            return Err(Error::AboveMiddleDegree {
                degree: 2 * p,
                half: 2 * n,
            });
        }
        let inputs = a.holomorphic_block(2 * p);
        let outputs: Vec<u32> = a
            .block(2 * (n + p))
            .iter()
            .copied()
            .filter(|&m| crate::fiber::mask_bidegree(m) == (n + p, n + p))
            .collect();
        let mut m = DMatrix::from_element(outputs.len(), inputs.len(), Complex64::default());
        for (j, &mask) in inputs.iter().enumerate() {
            let v = self.v_map(&FiberForm::basis(a.dim(), mask))?;
            for (i, &o) in outputs.iter().enumerate() {
                m[(i, j)] = v.coeff(o);
            }
        }
        Ok(m)
    }

    /// Smallest over largest singular value of [`v_matrix`](Self::v_matrix).
    pub fn v_injectivity(&self, p: usize) -> Result<f64> {
        let sv = self.v_matrix(p)?.singular_values();
        let max = sv.max();
        Ok(if max > 0.0 { sv.min() / max } else { 0.0 })
    }

    /// `Φ = V(1)`.
    pub fn phi(&self) -> Result<PhiForm> {
        if let Some(phi) = self.phi.get() {
            return Ok(phi.clone());
        }
        let form = self.v_map(&self.alg.one())?;
        Ok(self.phi.get_or_init(|| PhiForm { form }).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_bidegree_form, rng};

    fn maps(n: usize) -> QuatMaps {
        QuatMaps::standard(FiberAlgebra::shared(n).unwrap()).unwrap()
    }

    #[test]
    fn theta_is_valid_and_normalized() {
        for (n, ratio) in [(1, 4.0), (2, 32.0)] {
            let m = maps(n);
            let a = m.algebra();
            assert!(a.check_q_real(&m.theta().form));
            assert!((m.theta().volume_ratio(a) - ratio).abs() < 1e-10);
        }
        let a = FiberAlgebra::shared(1).unwrap();
        assert!(ThetaForm::standard(&a, -1.0).is_err());
        assert!(ThetaForm::new(&a, a.omega0().scale(Complex64::new(0.0, 1.0))).is_err());
    }

    #[test]
    fn duality_identity_on_random_pairs() {
        for n in [1, 2] {
            let m = maps(n);
            let a = m.algebra();
            let theta_bar = m.theta().form.conj();
            let mut r = rng(70 + n as u64);
            for p in 0..=n {
                for _ in 0..10 {
                    let eta = random_bidegree_form(&mut r, 4 * n, 2 * p, 0);
                    let xi = random_bidegree_form(&mut r, 4 * n, n - p, n - p);
                    let lhs = m.v_pairing(&eta).unwrap().wedge(&xi).top_coeff();
                    let rhs = eta
                        .wedge(&a.r_map(&xi).unwrap())
                        .wedge(&theta_bar)
                        .top_coeff();
                    assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + rhs.norm()));
                    let phase = Complex64::new(0.0, 1.0).powu((n - p) as u32);
                    let lhs = m.v_map(&eta).unwrap().wedge(&xi).top_coeff();
                    assert!((lhs - rhs * phase).norm() <= 1e-11 * (1.0 + rhs.norm()));
                }
            }
        }
    }

    #[test]
    fn real_structure_compatibility() {
        let m = maps(2);
        let a = m.algebra();
        let mut r = rng(73);
        for p in 0..=2 {
            let eta = random_bidegree_form(&mut r, 8, 2 * p, 0);
            let lhs = m.v_map(&a.extend_j(&eta.conj())).unwrap();
            let rhs = m.v_map(&eta).unwrap().conj();
            assert!(lhs.distance(&rhs) <= 1e-11 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn injective_in_every_degree() {
        for n in [1, 2] {
            let m = maps(n);
            for p in 0..=n {
                assert!(m.v_injectivity(p).unwrap() > 1e-8);
            }
        }
    }

    #[test]
    fn factorization_through_r() {
        let m = maps(2);
        let a = m.algebra();
        let mut r = rng(74);
        for _ in 0..5 {
            let eta = random_bidegree_form(&mut r, 8, 1, 1);
            let nu = random_bidegree_form(&mut r, 8, 1, 1);
            let lhs = m.v_pairing(&a.r_map(&eta.wedge(&nu)).unwrap()).unwrap();
            let rhs = m.v_pairing(&a.r_map(&eta).unwrap()).unwrap().wedge(&nu);
            assert!(lhs.distance(&rhs) <= 1e-11 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn phi_invariants() {
        for n in [1, 2] {
            let m = maps(n);
            let a = m.algebra();
            let phi = m.phi().unwrap().form;
            assert_eq!(phi.bidegree(), Some((n, n)));
            assert!(phi.distance(&phi.conj()) < 1e-12);
            assert!(a.project_plus(&phi).unwrap().distance(&phi) < 1e-11);
            let mut r = rng(75);
            let (margin, _) = a.weak_positivity_margin(&phi, 64, &mut r).unwrap();
            assert!(margin >= -1e-12, "n = {n}: {margin}");
            for _ in 0..10 {
                let xi = random_bidegree_form(&mut r, 4 * n, n, n);
                let low = &xi - &a.project_plus(&xi).unwrap();
                assert!(phi.wedge(&low).max_abs() < 1e-11);
            }
        }
    }

    #[test]
    fn literal_pairing_picks_up_a_sign_under_the_real_structure() {
        let m = maps(1);
        let a = m.algebra();
        let w = m.v_pairing(&a.one()).unwrap();
        assert!(w.distance(&w.conj().scale_re(-1.0)) < 1e-12);
        let (wi, _, _) = a.omega_forms();
        // W(1) ∧ ω_I = R(ω_I) ∧ Θ̄ = −√−1 Ω₀ ∧ Ω̄₀
        let density = w.wedge(&wi).top_coeff() * a.top_to_volume();
        assert!((density - Complex64::new(0.0, -4.0)).norm() < 1e-12);
    }

    #[test]
    fn positive_forms_map_to_weakly_positive_forms() {
        let m = maps(2);
        let a = m.algebra();
        let mut r = rng(77);
        for p in 0..=2 {
            for _ in 0..5 {
                let mut eta = a.one();
                for _ in 0..p {
                    eta = eta.wedge(&random_strong_q_positive(a, &mut r, 3));
                }
                let v = m.v_map(&eta).unwrap();
                assert!(v.distance(&v.conj()) <= 1e-12 * (1.0 + v.norm()));
                let (margin, _) = a.weak_positivity_margin(&v, 32, &mut r).unwrap();
                assert!(margin >= -1e-12, "p = {p}: {margin}");
            }
        }
    }

    #[test]
    fn rejects_odd_input() {
        let m = maps(1);
        let mut r = rng(76);
        let eta = random_bidegree_form(&mut r, 4, 1, 0);
        assert!(m.v_map(&eta).is_err());
    }
}
