use super::nnls::nnls;
use super::{PhiForm, ThetaForm};
use crate::error::{Error, Result};
use crate::fiber::{require_bidegree, FiberAlgebra, FiberForm, Unit};
use crate::sampling::{random_bidegree_form, random_unit_vector};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

const IM: Complex64 = Complex64::new(0.0, 1.0);
const Q_REAL_TOL: f64 = 1e-11;
const BOUNDARY_TOL: f64 = 1e-10;
const NNLS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityStatus {
    StronglyPositive,
    WeaklyPositiveOnly,
    Boundary,
    NotPositive,
}

#[derive(Clone, Debug)]
pub enum Witness {
    /// Tangent vector `X` with `η(X, X·J) < 0`.
    Vector(Vec<f64>),
    /// Test form whose pairing with the input is negative.
    Form(FiberForm),
}

#[derive(Clone, Debug)]
pub struct PositivityVerdict {
    pub status: PositivityStatus,
    pub witness: Option<Witness>,
    /// Smallest pairing value over all tested directions.
    pub margin: f64,
}

impl PositivityVerdict {
    pub fn is_positive(&self) -> bool {
        matches!(
            self.status,
            PositivityStatus::StronglyPositive | PositivityStatus::WeaklyPositiveOnly
        )
    }

    fn from_margin(
        margin: f64,
        scale: f64,
        pass: PositivityStatus,
        witness: Option<Witness>,
    ) -> Self {
        let tol = BOUNDARY_TOL * scale;
        let (status, witness) = if margin > tol {
            (pass, None)
        } else if margin >= -tol {
            (PositivityStatus::Boundary, None)
        } else {
            (PositivityStatus::NotPositive, witness)
        };
        PositivityVerdict {
            status,
            witness,
            margin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityMode {
    Strong,
    Weak,
}

/// `Jᾱ ∧ α`, a generator of the strongly q-positive `(2,0)`-forms.
pub fn elementary_q_positive(alg: &FiberAlgebra, alpha: &FiberForm) -> FiberForm {
    let j_bar = alg.act_on_covector(Unit::J, &alpha.conj()).expect("1-form");
    j_bar.wedge(alpha)
}

/// `−√−1 α ∧ ᾱ`, a generator of the strongly positive `(1,1)`-forms.
pub fn elementary_positive_11(alpha: &FiberForm) -> FiberForm {
    alpha.wedge(&alpha.conj()).scale(-IM)
}

fn normalized(f: FiberForm) -> FiberForm {
    let s = f.norm();
    if s > 0.0 {
        f.scale_re(1.0 / s)
    } else {
        f
    }
}

/// Unit-norm nonnegative combination of `terms` elementary q-positive `(2,0)`-forms.
pub fn random_strong_q_positive<R: Rng + ?Sized>(
    alg: &FiberAlgebra,
    rng: &mut R,
    terms: usize,
) -> FiberForm {
    let mut out = alg.zero();
    for _ in 0..terms.max(1) {
        let alpha = random_bidegree_form(rng, alg.dim(), 1, 0);
        out += &elementary_q_positive(alg, &alpha).scale_re(rng.random_range(0.0..1.0));
    }
    normalized(out)
}

/// Unit-norm nonnegative combination of `terms` elementary positive `(1,1)`-forms.
pub fn random_strong_positive_11<R: Rng + ?Sized>(
    alg: &FiberAlgebra,
    rng: &mut R,
    terms: usize,
) -> FiberForm {
    let mut out = alg.zero();
    for _ in 0..terms.max(1) {
        let alpha = random_bidegree_form(rng, alg.dim(), 1, 0);
        out += &elementary_positive_11(&alpha).scale_re(rng.random_range(0.0..1.0));
    }
    normalized(out)
}

/// Unit-norm wedge of `k` random strongly positive `(1,1)`-forms.
pub fn random_strong_positive_kk<R: Rng + ?Sized>(
    alg: &FiberAlgebra,
    rng: &mut R,
    k: usize,
) -> FiberForm {
    let mut out = alg.one();
    for _ in 0..k {
        let terms = rng.random_range(1..=alg.dim());
        out = out.wedge(&random_strong_positive_11(alg, rng, terms));
    }
    normalized(out)
}

/// Real coefficient of a top-degree form against the oriented volume form.
pub fn volume_density(alg: &FiberAlgebra, top: &FiberForm) -> f64 {
    (top.top_coeff() * alg.top_to_volume()).re
}

impl FiberAlgebra {
    /// `‖η − J(η̄)‖ / ‖η‖`, zero for `η = 0`.
    pub fn q_real_deviation(&self, eta: &FiberForm) -> f64 {
        let s = eta.norm();
        if s == 0.0 {
            return 0.0;
        }
        self.extend_j(&eta.conj()).distance(eta) / s
    }

    pub fn check_q_real(&self, eta: &FiberForm) -> bool {
        self.q_real_deviation(eta) <= Q_REAL_TOL
    }

    fn require_q_real(&self, eta: &FiberForm) -> Result<()> {
        let deviation = self.q_real_deviation(eta);
        if deviation > Q_REAL_TOL {
            return Err(Error::NotQReal { deviation });
        }
        Ok(())
    }

    /// Symmetric matrix of the real quadratic form `X ↦ η(X, X·J)` of a `(2,0)`-form.
    pub fn q_quadratic_form(&self, eta: &FiberForm) -> DMatrix<f64> {
        let d = self.dim();
        let mut coef = DMatrix::from_element(d, d, Complex64::default());
        for (m, v) in eta.terms() {
            let c = m.trailing_zeros() as usize;
            let e = 31 - m.leading_zeros() as usize;
            coef[(c, e)] += v;
            coef[(e, c)] -= v;
        }
        let mut frame = DMatrix::from_element(d, d, Complex64::default());
        for r in 0..d {
            let x: Vec<f64> = (0..d).map(|s| if s == r { 1.0 } else { 0.0 }).collect();
            for (c, v) in self.frame_values(&x).into_iter().enumerate() {
                frame[(c, r)] = v;
            }
        }
        let bilinear = frame.transpose() * coef * frame;
        let jt = self
            .structure()
            .j_mat
            .transpose()
            .map(|x| Complex64::new(x, 0.0));
        let q = (bilinear * jt).map(|z| z.re);
        (&q + q.transpose()) * 0.5
    }

    /// Exact test for a q-real `(2,0)`-form via the eigenvalues of `X ↦ η(X, X·J)`,
    /// cross-checked on `samples` random unit vectors.
    pub fn check_strong_q_positive<R: Rng + ?Sized>(
        &self,
        eta: &FiberForm,
        samples: usize,
        rng: &mut R,
    ) -> Result<PositivityVerdict> {
        require_bidegree(eta, 2, 0)?;
        self.require_q_real(eta)?;
        let q = self.q_quadratic_form(eta);
        let eig = q.clone().symmetric_eigen();
        let (imin, mut margin) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let mut witness: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
        for _ in 0..samples {
            let x = random_unit_vector(rng, self.dim());
            let xv = DVector::from_column_slice(&x);
            let v = xv.dot(&(&q * &xv));
            if v < margin {
                margin = v;
                witness = x;
            }
        }
        Ok(PositivityVerdict::from_margin(
            margin,
            eta.norm(),
            PositivityStatus::StronglyPositive,
            Some(Witness::Vector(witness)),
        ))
    }

    /// Positivity of a q-real `(2p,0)`-form relative to the orientation of `Θ`.
    ///
    /// Weak mode pairs with wedge products of strongly q-positive `(2,0)`-forms of
    /// complementary degree. Strong mode additionally searches for a nonnegative
    /// decomposition over sampled generators when the cones can differ.
    pub fn check_positive_2p<R: Rng + ?Sized>(
        &self,
        eta: &FiberForm,
        theta: &ThetaForm,
        mode: PositivityMode,
        samples: usize,
        rng: &mut R,
    ) -> Result<PositivityVerdict> {
        let n = self.n();
        let (a, b) = match eta.bidegree() {
            Some(bd) => bd,
            None if eta.is_zero() => {
                return Ok(PositivityVerdict::from_margin(
                    0.0,
                    0.0,
                    PositivityStatus::StronglyPositive,
                    None,
                ))
            }
            None => {
                return Err(Error::Bidegree {
                    expected: (2, 0),
                    found: eta.describe(),
                })
            }
        };
        if b != 0 || a % 2 != 0 || a == 0 || a > 2 * n {
            return Err(Error::Bidegree {
                expected: (2, 0),
                found: eta.describe(),
            });
        }
        self.require_q_real(eta)?;
        let p = a / 2;
        if p == 1 {
            return self.check_strong_q_positive(eta, samples, rng);
        }
        let theta_bar = theta.form.conj();
        let norm = theta.form.wedge(&theta_bar).top_coeff();
        let pairing = |xi: &FiberForm| (eta.wedge(xi).wedge(&theta_bar).top_coeff() / norm).re;
        let mut tests = vec![normalized(self.omega0().pow(n - p))];
        for _ in 0..samples {
            let mut xi = self.one();
            for _ in 0..n - p {
                let terms = rng.random_range(1..=2 * n);
                xi = xi.wedge(&random_strong_q_positive(self, rng, terms));
            }
            tests.push(normalized(xi));
        }
        let (margin, worst) = tests
            .into_iter()
            .map(|xi| (pairing(&xi), xi))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .expect("nonempty");
        let cones_agree = p + 1 >= n;
        let pass = if cones_agree {
            PositivityStatus::StronglyPositive
        } else {
            PositivityStatus::WeaklyPositiveOnly
        };
        let verdict =
            PositivityVerdict::from_margin(margin, eta.norm(), pass, Some(Witness::Form(worst)));
        if mode == PositivityMode::Weak || cones_agree || !verdict.is_positive() {
            return Ok(verdict);
        }
        if self.strong_decomposition_residual(eta, p, samples, rng) <= NNLS_TOL * eta.norm() {
            Ok(PositivityVerdict {
                status: PositivityStatus::StronglyPositive,
                ..verdict
            })
        } else {
            Ok(verdict)
        }
    }

    /// Residual of the best nonnegative combination of sampled products of `p`
    /// elementary q-positive `(2,0)`-forms approximating `eta`.
    fn strong_decomposition_residual<R: Rng + ?Sized>(
        &self,
        eta: &FiberForm,
        p: usize,
        samples: usize,
        rng: &mut R,
    ) -> f64 {
        let hol = self.holomorphic_block(2 * p);
        let mut generators = Vec::new();
        // products of coordinate-aligned generators
        let aligned: Vec<FiberForm> = (0..2 * self.n())
            .map(|c| elementary_q_positive(self, &self.frame_form(2 * c)))
            .collect();
        let mut stack = vec![(0usize, self.one(), 0usize)];
        while let Some((start, form, depth)) = stack.pop() {
            if depth == p {
                generators.push(form);
                continue;
            }
            for (i, g) in aligned.iter().enumerate().skip(start) {
                stack.push((i, form.wedge(g), depth + 1));
            }
        }
        for _ in 0..samples {
            let mut g = self.one();
            for _ in 0..p {
                let alpha = random_bidegree_form(rng, self.dim(), 1, 0);
                g = g.wedge(&elementary_q_positive(self, &alpha));
            }
            generators.push(normalized(g));
        }
        generators.retain(|g| !g.is_zero());
        let rows = 2 * hol.len();
        let mut a = DMatrix::zeros(rows, generators.len());
        for (j, g) in generators.iter().enumerate() {
            for (i, &m) in hol.iter().enumerate() {
                let v = g.coeff(m);
                a[(2 * i, j)] = v.re;
                a[(2 * i + 1, j)] = v.im;
            }
        }
        let b = DVector::from_iterator(
            rows,
            hol.iter().flat_map(|&m| [eta.coeff(m).re, eta.coeff(m).im]),
        );
        let x = nnls(&a, &b);
        (&a * x - b).norm()
    }

    /// Smallest volume density of `η ∧ τ` over `τ` = unit-norm products of
    /// strongly positive `(1,1)`-forms of complementary degree.
    pub fn weak_positivity_margin<R: Rng + ?Sized>(
        &self,
        eta: &FiberForm,
        samples: usize,
        rng: &mut R,
    ) -> Result<(f64, FiberForm)> {
        let k = match eta.bidegree() {
            Some((p, q)) if p == q => p,
            None if eta.is_zero() => return Ok((0.0, self.one())),
            _ => {
                return Err(Error::Bidegree {
                    expected: (self.n(), self.n()),
                    found: eta.describe(),
                })
            }
        };
        let rest = 2 * self.n() - k;
        let (wi, _, _) = self.omega_forms();
        let mut tests = vec![normalized(wi.pow(rest))];
        for _ in 0..samples {
            tests.push(random_strong_positive_kk(self, rng, rest));
        }
        Ok(tests
            .into_iter()
            .map(|t| (volume_density(self, &eta.wedge(&t)), t))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .expect("nonempty"))
    }

    /// Φ-positivity of a real `(1,1)`-form: `Φ∧ν∧η` is checked against
    /// sampled `ν` for which `Φ∧ν` is weakly positive. A strictly positive
    /// margin (interior of the cone) reports `StronglyPositive`.
    pub fn check_phi_positive<R: Rng + ?Sized>(
        &self,
        eta: &FiberForm,
        phi: &PhiForm,
        samples: usize,
        rng: &mut R,
    ) -> Result<PositivityVerdict> {
        require_bidegree(eta, 1, 1)?;
        let n = self.n();
        let (wi, _, _) = self.omega_forms();
        let mut tests = vec![normalized(wi.pow(n - 1))];
        for _ in 0..samples {
            tests.push(random_strong_positive_kk(self, rng, n - 1));
        }
        let (margin, worst) = tests
            .into_iter()
            .map(|nu| (volume_density(self, &phi.form.wedge(&nu).wedge(eta)), nu))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .expect("nonempty");
        Ok(PositivityVerdict::from_margin(
            margin,
            eta.norm().max(f64::MIN_POSITIVE),
            PositivityStatus::StronglyPositive,
            Some(Witness::Form(worst)),
        ))
    }
}
