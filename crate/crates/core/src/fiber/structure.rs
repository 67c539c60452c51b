use super::form::{lex_masks, wedge_sign, FiberForm};
use super::weights::WeightDecomposition;
use crate::error::{Error, Result};
use crate::quaternion::Quaternion;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

/// One of the three imaginary units acting on the tangent space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Unit {
    I,
    J,
    K,
}

impl Unit {
    pub const ALL: [Unit; 3] = [Unit::I, Unit::J, Unit::K];

    fn index(self) -> usize {
        match self {
            Unit::I => 0,
            Unit::J => 1,
            Unit::K => 2,
        }
    }

    pub fn quaternion(self) -> Quaternion {
        match self {
            Unit::I => Quaternion::I,
            Unit::J => Quaternion::J,
            Unit::K => Quaternion::K,
        }
    }
}

/// Constant hypercomplex structure on `ℝ^{4n}` together with a flat metric.
///
/// Tangent vectors are row vectors and the units act on the right:
/// `X·L` is `X * l_mat`. With this convention `i_mat * j_mat = k_mat`.
#[derive(Clone, Debug)]
pub struct HypercomplexStructure {
    pub n: usize,
    pub i_mat: DMatrix<f64>,
    pub j_mat: DMatrix<f64>,
    pub k_mat: DMatrix<f64>,
    pub metric: DMatrix<f64>,
}

impl HypercomplexStructure {
    /// Right multiplication by `i, j, k` on `ℍ^n`, with coordinates
    /// `q_a = x_{4a} + x_{4a+1} i + x_{4a+2} j + x_{4a+3} k` and the Euclidean metric.
    pub fn standard(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        let dim = 4 * n;
        let build = |unit: Quaternion| {
            let mut m = DMatrix::zeros(dim, dim);
            for a in 0..n {
                for t in 0..4 {
                    let mut basis = [0.0; 4];
                    basis[t] = 1.0;
                    let image = (Quaternion::from_array(basis) * unit).to_array();
                    for (s, v) in image.iter().enumerate() {
                        m[(4 * a + t, 4 * a + s)] = *v;
                    }
                }
            }
            m
        };
        Ok(HypercomplexStructure {
            n,
            i_mat: build(Quaternion::I),
            j_mat: build(Quaternion::J),
            k_mat: build(Quaternion::K),
            metric: DMatrix::identity(dim, dim),
        })
    }

    pub fn dim(&self) -> usize {
        4 * self.n
    }

    pub fn matrix(&self, unit: Unit) -> &DMatrix<f64> {
        match unit {
            Unit::I => &self.i_mat,
            Unit::J => &self.j_mat,
            Unit::K => &self.k_mat,
        }
    }

    /// `X·L` for a tangent vector given in coordinates.
    pub fn act_on_vector(&self, unit: Unit, x: &[f64]) -> Vec<f64> {
        let m = self.matrix(unit);
        (0..self.dim())
            .map(|s| (0..self.dim()).map(|r| x[r] * m[(r, s)]).sum())
            .collect()
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for r in 0..d {
            for s in 0..d {
                acc += x[r] * self.metric[(r, s)] * y[s];
            }
        }
        acc
    }

    /// Largest violation of the quaternion relations and of metric invariance.
    pub fn defect(&self) -> f64 {
        let d = self.dim();
        let id = DMatrix::<f64>::identity(d, d);
        let mut worst: f64 = 0.0;
        let mut upd = |m: DMatrix<f64>| worst = worst.max(m.abs().max());
        upd(&self.i_mat * &self.j_mat - &self.k_mat);
        upd(&self.j_mat * &self.i_mat + &self.k_mat);
        for u in Unit::ALL {
            let m = self.matrix(u);
            upd(m * m + &id);
            upd(m * &self.metric * m.transpose() - &self.metric);
        }
        upd(&self.metric - self.metric.transpose());
        worst
    }
}

/// Exterior algebra of one complexified cotangent fiber of a flat hypercomplex
/// space, in the frame
///
/// ```text
/// e_{4a}   = dz_{2a}    = dx_{4a}   + i dx_{4a+1}
/// e_{4a+1} = dz̄_{2a}
/// e_{4a+2} = dz_{2a+1}  = dx_{4a+2} − i dx_{4a+3}
/// e_{4a+3} = dz̄_{2a+1}
/// ```
///
/// Even frame positions span the `(1,0)`-forms of `I`. All structure-dependent
/// operations live here; linear maps on each degree are built on first use and
/// cached.
pub struct FiberAlgebra {
    structure: HypercomplexStructure,
    dim: usize,
    frame: DMatrix<Complex64>,
    frame_inv: DMatrix<Complex64>,
    act: [DMatrix<Complex64>; 3],
    blocks: Vec<Vec<u32>>,
    position: Vec<usize>,
    columns: [Vec<Vec<(usize, Complex64)>>; 3],
    ad_cache: [Vec<OnceLock<DMatrix<Complex64>>>; 3],
    pub(crate) weight_cache: Vec<OnceLock<WeightDecomposition>>,
    pub(crate) r_cache: Vec<OnceLock<DMatrix<Complex64>>>,
}

impl std::fmt::Debug for FiberAlgebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiberAlgebra")
            .field("n", &self.structure.n)
            .finish()
    }
}

impl FiberAlgebra {
    pub fn new(structure: HypercomplexStructure) -> Result<Self> {
        let n = structure.n;
        let dim = structure.dim();
        let mut frame = DMatrix::from_element(dim, dim, ZERO);
        for a in 0..n {
            let (r0, r1, r2, r3) = (4 * a, 4 * a + 1, 4 * a + 2, 4 * a + 3);
            frame[(r0, r0)] = ONE;
            frame[(r0, r1)] = IM;
            frame[(r1, r0)] = ONE;
            frame[(r1, r1)] = -IM;
            frame[(r2, r2)] = ONE;
            frame[(r2, r3)] = -IM;
            frame[(r3, r2)] = ONE;
            frame[(r3, r3)] = IM;
        }
        let frame_inv = frame
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Invalid("frame matrix is singular".into()))?;
        let st = frame.transpose();
        let st_inv = frame_inv.transpose();
        let act = Unit::ALL.map(|u| {
            let l = structure.matrix(u).map(|x| Complex64::new(x, 0.0));
            &st_inv * l * &st
        });
        let columns = act.clone().map(|m| {
            (0..dim)
                .map(|c| {
                    (0..dim)
                        .filter(|&d| m[(d, c)].norm() > 1e-15)
                        .map(|d| (d, m[(d, c)]))
                        .collect()
                })
                .collect()
        });
        let blocks: Vec<Vec<u32>> = (0..=dim).map(|k| lex_masks(dim, k)).collect();
        let mut position = vec![usize::MAX; 1 << dim];
        for block in &blocks {
            for (i, &m) in block.iter().enumerate() {
                position[m as usize] = i;
            }
        }
        Ok(FiberAlgebra {
            structure,
            dim,
            frame,
            frame_inv,
            act,
            blocks,
            position,
            columns,
            ad_cache: [lazy(dim), lazy(dim), lazy(dim)],
            weight_cache: lazy(dim),
            r_cache: lazy(dim),
        })
    }

    /// Process-wide shared algebra for the standard structure on `ℍ^n`.
    pub fn shared(n: usize) -> Result<Arc<FiberAlgebra>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FiberAlgebra>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("fiber algebra cache poisoned");
        if let Some(a) = guard.get(&n) {
            return Ok(a.clone());
        }
        let alg = Arc::new(FiberAlgebra::new(HypercomplexStructure::standard(n)?)?);
        guard.insert(n, alg.clone());
        Ok(alg)
    }

    pub fn n(&self) -> usize {
        self.structure.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure(&self) -> &HypercomplexStructure {
        &self.structure
    }

    /// Masks of degree `k` in lexicographic order.
    pub fn block(&self, k: usize) -> &[u32] {
        &self.blocks[k]
    }

    pub fn position(&self, mask: u32) -> usize {
        self.position[mask as usize]
    }

    pub fn zero(&self) -> FiberForm {
        FiberForm::zero(self.dim)
    }

    pub fn one(&self) -> FiberForm {
        FiberForm::one(self.dim)
    }

    /// Frame element `e_c` as a form.
    pub fn frame_form(&self, c: usize) -> FiberForm {
        FiberForm::basis(self.dim, 1 << c)
    }

    /// Coefficients `T[r][c]` with `dx_r = Σ_c T[r][c] e_c`.
    pub fn dx_in_frame(&self) -> &DMatrix<Complex64> {
        &self.frame_inv
    }

    /// `dx_r` as a fiber form.
    pub fn dx(&self, r: usize) -> FiberForm {
        FiberForm::from_terms(
            self.dim,
            (0..self.dim).map(|c| (1u32 << c, self.frame_inv[(r, c)])),
        )
    }

    /// Values `e_c(X)` of the frame covectors on a real tangent vector.
    pub fn frame_values(&self, x: &[f64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.frame[(c, r)] * x[r]).sum())
            .collect()
    }

    /// Evaluates a homogeneous form of degree `k` on `k` real tangent vectors.
    pub fn evaluate(&self, eta: &FiberForm, vectors: &[&[f64]]) -> Complex64 {
        let k = vectors.len();
        let vals: Vec<Vec<Complex64>> = vectors.iter().map(|v| self.frame_values(v)).collect();
        let mut acc = ZERO;
        for (m, coef) in eta.terms() {
            if m.count_ones() as usize != k {
                continue;
            }
            let idx: Vec<usize> = (0..self.dim).filter(|c| m & (1 << c) != 0).collect();
            let mut mat = DMatrix::from_element(k, k, ZERO);
            for (i, &c) in idx.iter().enumerate() {
                for (j, v) in vals.iter().enumerate() {
                    mat[(i, j)] = v[c];
                }
            }
            acc += coef * complex_det(mat);
        }
        acc
    }

    /// The 2-form `Σ_{r<s} W_{rs} dx_r ∧ dx_s` of an antisymmetric bilinear matrix.
    pub fn from_bilinear(&self, w: &DMatrix<f64>) -> FiberForm {
        let mut out = self.zero();
        for r in 0..self.dim {
            let dr = self.dx(r);
            for s in r + 1..self.dim {
                if w[(r, s)] != 0.0 {
                    out += &dr.wedge(&self.dx(s)).scale_re(w[(r, s)]);
                }
            }
        }
        out
    }

    /// Matrix of the left action `α ↦ α(·∘L)` on covectors, in frame coordinates.
    pub fn covector_action(&self, unit: Unit) -> &DMatrix<Complex64> {
        &self.act[unit.index()]
    }

    /// `β(X) = α(X·L)` for a 1-form `α`.
    pub fn act_on_covector(&self, unit: Unit, alpha: &FiberForm) -> Result<FiberForm> {
        require_degree(alpha, 1)?;
        Ok(self.apply_covector_matrix(self.covector_action(unit), alpha))
    }

    fn apply_covector_matrix(&self, m: &DMatrix<Complex64>, alpha: &FiberForm) -> FiberForm {
        let mut out = self.zero();
        for c in 0..self.dim {
            let a = alpha.coeff(1 << c);
            if a == ZERO {
                continue;
            }
            for d in 0..self.dim {
                out.add_to(1 << d, m[(d, c)] * a);
            }
        }
        out
    }

    fn column_form(&self, m: &DMatrix<Complex64>, c: usize) -> FiberForm {
        FiberForm::from_terms(self.dim, (0..self.dim).map(|d| (1u32 << d, m[(d, c)])))
    }

    /// Matrix of the derivation extension of a covector map on degree `k`.
    fn derivation_matrix(&self, m: &DMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
        let block = &self.blocks[k];
        let cols: Vec<FiberForm> = (0..self.dim).map(|c| self.column_form(m, c)).collect();
        let mut out = DMatrix::from_element(block.len(), block.len(), ZERO);
        for (j, &mask) in block.iter().enumerate() {
            let idx: Vec<usize> = (0..self.dim).filter(|c| mask & (1 << c) != 0).collect();
            for slot in 0..idx.len() {
                let mut img = self.one();
                for (i, &c) in idx.iter().enumerate() {
                    img = if i == slot {
                        img.wedge(&cols[c])
                    } else {
                        img.wedge(&self.frame_form(c))
                    };
                }
                for (mi, v) in img.terms() {
                    out[(self.position(mi), j)] += v;
                }
            }
        }
        out
    }

    pub(crate) fn ad_matrix(&self, unit: Unit, k: usize) -> &DMatrix<Complex64> {
        self.ad_cache[unit.index()][k]
            .get_or_init(|| self.derivation_matrix(self.covector_action(unit), k))
    }

    /// Coefficient vector of the degree-`k` part.
    pub fn block_vector(&self, eta: &FiberForm, k: usize) -> nalgebra::DVector<Complex64> {
        nalgebra::DVector::from_iterator(
            self.blocks[k].len(),
            self.blocks[k].iter().map(|&m| eta.coeff(m)),
        )
    }

    pub fn from_block_vector(&self, k: usize, v: &nalgebra::DVector<Complex64>) -> FiberForm {
        FiberForm::from_terms(
            self.dim,
            self.blocks[k].iter().zip(v.iter()).map(|(&m, &c)| (m, c)),
        )
    }

    /// Applies a per-degree linear map to every homogeneous component.
    pub(crate) fn apply_per_degree<'a>(
        &'a self,
        eta: &FiberForm,
        mut matrix: impl FnMut(usize) -> &'a DMatrix<Complex64>,
    ) -> FiberForm {
        let mut out = self.zero();
        for k in 0..=self.dim {
            let v = self.block_vector(eta, k);
            if v.iter().all(|c| *c == ZERO) {
                continue;
            }
            out += &self.from_block_vector(k, &(matrix(k) * v));
        }
        out
    }

    /// Multiplicative extension of the action of `L` to forms of every degree.
    pub fn extend(&self, unit: Unit, eta: &FiberForm) -> FiberForm {
        let cols = &self.columns[unit.index()];
        let mut out = self.zero();
        let mut partial: Vec<(u32, Complex64)> = Vec::new();
        let mut next: Vec<(u32, Complex64)> = Vec::new();
        for (mask, coef) in eta.terms() {
            partial.clear();
            partial.push((0, coef));
            for c in 0..self.dim {
                if mask & (1 << c) == 0 {
                    continue;
                }
                next.clear();
                for &(m, v) in &partial {
                    for &(d, a) in &cols[c] {
                        let bit = 1u32 << d;
                        if m & bit == 0 {
                            next.push((m | bit, v * a * wedge_sign(m, bit)));
                        }
                    }
                }
                std::mem::swap(&mut partial, &mut next);
            }
            for &(m, v) in &partial {
                out.add_to(m, v);
            }
        }
        out
    }

    /// `J` applied factor by factor; maps bidegree `(p,q)` to `(q,p)`.
    pub fn extend_j(&self, eta: &FiberForm) -> FiberForm {
        self.extend(Unit::J, eta)
    }

    /// Inverse of [`extend_j`](Self::extend_j): `(−1)^k J` on degree `k`.
    pub fn extend_j_inv(&self, eta: &FiberForm) -> FiberForm {
        let mut out = self.zero();
        for k in 0..=self.dim {
            let part = eta.degree_part(k);
            if part.is_zero() {
                continue;
            }
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            out += &self.extend_j(&part).scale_re(s);
        }
        out
    }

    /// Derivation extension of the Lie-algebra action of `L`.
    ///
    /// For `L = I` and a `(p,q)`-form this is multiplication by `i(p−q)`.
    pub fn ad(&self, unit: Unit, eta: &FiberForm) -> FiberForm {
        self.apply_per_degree(eta, |k| self.ad_matrix(unit, k))
    }

    /// `ω_L(A,B) = g(A, B·L)` for the three units.
    pub fn omega_forms(&self) -> (FiberForm, FiberForm, FiberForm) {
        let g = &self.structure.metric;
        let w = |u: Unit| {
            let bil = g * self.structure.matrix(u).transpose();
            self.from_bilinear(&bil)
        };
        (w(Unit::I), w(Unit::J), w(Unit::K))
    }

    /// Flat HKT form `Ω₀ = −ω_J + i ω_K`, a `(2,0)`-form.
    pub fn omega0(&self) -> FiberForm {
        let (_, wj, wk) = self.omega_forms();
        &wk.scale(IM) - &wj
    }

    /// Coefficient converting `e_0 ∧ ... ∧ e_{4n−1}` into the oriented volume
    /// form `ω_I^{2n}/(2n)!` of the flat metric: `e_top = (−4)^n vol`.
    pub fn top_to_volume(&self) -> f64 {
        (-4.0f64).powi(self.n() as i32)
    }

    /// Mask of `e_0 ∧ e_2 ∧ ... ∧ e_{4n−2}` (all holomorphic frame elements).
    pub fn holomorphic_top_mask(&self) -> u32 {
        (0..self.dim).step_by(2).fold(0u32, |m, c| m | (1 << c))
    }
}

fn lazy<T>(dim: usize) -> Vec<OnceLock<T>> {
    (0..=dim).map(|_| OnceLock::new()).collect()
}

/// Accepts zero or homogeneous forms of degree `k`.
pub(crate) fn require_degree(eta: &FiberForm, k: usize) -> Result<()> {
    match eta
        .terms()
        .map(|(m, _)| m.count_ones() as usize)
        .find(|&d| d != k)
    {
        Some(found) => Err(Error::Degree { expected: k, found }),
        None => Ok(()),
    }
}

fn complex_det(mut m: DMatrix<Complex64>) -> Complex64 {
    let k = m.nrows();
    if k == 0 {
        return ONE;
    }
    let mut det = ONE;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| m[(a, col)].norm().total_cmp(&m[(b, col)].norm()))
            .unwrap();
        if m[(pivot, col)].norm() == 0.0 {
            return ZERO;
        }
        if pivot != col {
            m.swap_rows(pivot, col);
            det = -det;
        }
        let p = m[(col, col)];
        det *= p;
        for r in col + 1..k {
            let f = m[(r, col)] / p;
            for c in col..k {
                let v = m[(col, c)];
                m[(r, c)] -= f * v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_bidegree_form, random_form, random_vector, rng};

    fn alg(n: usize) -> Arc<FiberAlgebra> {
        FiberAlgebra::shared(n).unwrap()
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(matches!(
            HypercomplexStructure::standard(0),
            Err(Error::ZeroDimension)
        ));
    }

    #[test]
    fn quaternion_relations_hold_entrywise() {
        let h = HypercomplexStructure::standard(1).unwrap();
        assert_eq!(&h.i_mat * &h.j_mat, h.k_mat);
        assert_eq!(h.defect(), 0.0);
        // orthogonality preserved under I
        let e0 = [1.0, 0.0, 0.0, 0.0];
        let e2 = [0.0, 0.0, 1.0, 0.0];
        let a = h.act_on_vector(Unit::I, &e0);
        let b = h.act_on_vector(Unit::I, &e2);
        assert_eq!(h.inner(&a, &b), 0.0);
        assert_eq!(h.inner(&e0, &e2), 0.0);
    }

    #[test]
    fn units_square_to_minus_one_with_unit_determinant() {
        let h = HypercomplexStructure::standard(2).unwrap();
        let id = DMatrix::<f64>::identity(8, 8);
        for u in Unit::ALL {
            let m = h.matrix(u);
            assert_eq!(m * m, -&id);
            assert!((m.clone().determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn holomorphic_frame_is_an_i_eigenvector() {
        let a = alg(2);
        for c in (0..8).step_by(2) {
            let dz = a.frame_form(c);
            let img = a.act_on_covector(Unit::I, &dz).unwrap();
            assert!(img.distance(&dz.scale(IM)) < 1e-14, "frame {c}");
            let dzb = a.frame_form(c + 1);
            let img = a.act_on_covector(Unit::I, &dzb).unwrap();
            assert!(img.distance(&dzb.scale(-IM)) < 1e-14);
        }
    }

    #[test]
    fn covector_action_definition_and_square() {
        let a = alg(1);
        let mut r = rng(1);
        let alpha = a.from_bilinear(&DMatrix::zeros(4, 4)); // zero 2-form, unused
        assert!(alpha.is_zero());
        // real covector: dx-combination with real coefficients
        let coef = random_vector(&mut r, 4);
        let mut real = a.zero();
        for (i, c) in coef.iter().enumerate() {
            real += &a.dx(i).scale_re(*c);
        }
        for u in Unit::ALL {
            let once = a.act_on_covector(u, &real).unwrap();
            let twice = a.act_on_covector(u, &once).unwrap();
            assert!((&twice + &real).norm() < 1e-14);
            let x = random_vector(&mut r, 4);
            let xl = a.structure().act_on_vector(u, &x);
            let lhs = a.evaluate(&once, &[&x]);
            let rhs = a.evaluate(&real, &[&xl]);
            assert!((lhs - rhs).norm() < 1e-13);
        }
        assert!(a
            .act_on_covector(Unit::I, &a.frame_form(0).wedge(&a.frame_form(1)))
            .is_err());
    }

    #[test]
    fn j_swaps_types() {
        let a = alg(2);
        for c in (1..8).step_by(2) {
            let img = a.act_on_covector(Unit::J, &a.frame_form(c)).unwrap();
            assert_eq!(img.bidegree(), Some((1, 0)));
        }
        let mut r = rng(2);
        let eta = random_bidegree_form(&mut r, 8, 2, 0);
        assert_eq!(a.extend_j(&eta).bidegree(), Some((0, 2)));
        let eta = random_bidegree_form(&mut r, 8, 2, 1);
        assert_eq!(a.extend_j(&eta).bidegree(), Some((1, 2)));
    }

    #[test]
    fn extend_j_is_multiplicative_and_squares_to_sign() {
        let a = alg(2);
        let mut r = rng(4);
        let x = random_form(&mut r, 8, 1);
        let y = random_form(&mut r, 8, 1);
        let lhs = a.extend_j(&x.wedge(&y));
        let rhs = a.extend_j(&x).wedge(&a.extend_j(&y));
        assert!(lhs.distance(&rhs) < 1e-13);
        for k in 0..=4 {
            let eta = random_form(&mut r, 8, k);
            let twice = a.extend_j(&a.extend_j(&eta));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!(twice.distance(&eta.scale_re(sign)) < 1e-12);
            assert!(a.extend_j_inv(&a.extend_j(&eta)).distance(&eta) < 1e-12);
        }
    }

    #[test]
    fn extend_j_anti_involution_with_conjugation() {
        let a = alg(2);
        let mut r = rng(6);
        for k in 1..=4 {
            let eta = random_form(&mut r, 8, k);
            let once = a.extend_j(&eta.conj()).conj();
            let twice = a.extend_j(&once.conj()).conj();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!(twice.distance(&eta.scale_re(sign)) < 1e-12);
        }
    }

    #[test]
    fn flat_hkt_fiber_is_q_real() {
        for n in [1, 2] {
            let a = alg(n);
            let om = a.omega0();
            assert!(a.extend_j(&om.conj()).distance(&om) < 1e-14);
        }
    }

    #[test]
    fn ad_i_measures_bidegree() {
        let a = alg(2);
        let mut r = rng(8);
        for (p, q) in [(1, 1), (2, 0), (0, 3), (3, 1)] {
            let eta = random_bidegree_form(&mut r, 8, p, q);
            let got = a.ad(Unit::I, &eta);
            let want = eta.scale(IM * (p as f64 - q as f64));
            assert!(got.distance(&want) < 1e-12, "({p},{q})");
        }
    }

    #[test]
    fn su2_bracket_relations() {
        let a = alg(2);
        let mut r = rng(9);
        for _ in 0..5 {
            let eta = random_form(&mut r, 8, 2);
            let ij = a.ad(Unit::I, &a.ad(Unit::J, &eta));
            let ji = a.ad(Unit::J, &a.ad(Unit::I, &eta));
            let k2 = a.ad(Unit::K, &eta).scale_re(2.0);
            assert!((&ij - &ji).distance(&k2) < 1e-11);
        }
    }

    #[test]
    fn ad_is_a_derivation() {
        let a = alg(2);
        let mut r = rng(10);
        for _ in 0..200 {
            let da = rand::Rng::random_range(&mut r, 0..4);
            let db = rand::Rng::random_range(&mut r, 0..(5 - da));
            let x = random_form(&mut r, 8, da);
            let y = random_form(&mut r, 8, db);
            for u in Unit::ALL {
                let lhs = a.ad(u, &x.wedge(&y));
                let rhs = &a.ad(u, &x).wedge(&y) + &x.wedge(&a.ad(u, &y));
                assert!(lhs.distance(&rhs) <= 1e-12 * (1.0 + lhs.norm()));
            }
        }
    }

    #[test]
    fn omega_forms_basic_properties() {
        let a = alg(1);
        let (wi, _, _) = a.omega_forms();
        let e0 = [1.0, 0.0, 0.0, 0.0];
        let e0i = a.structure().act_on_vector(Unit::I, &e0);
        // ω_I(X, X·I) = g(X, X·I·I) = −|X|²
        assert!((a.evaluate(&wi, &[&e0, &e0i]) + ONE).norm() < 1e-14);
        assert!((a.evaluate(&wi, &[&e0i, &e0]) - ONE).norm() < 1e-14);
        let mut r = rng(12);
        let x = random_vector(&mut r, 4);
        let y = random_vector(&mut r, 4);
        let lhs = a.evaluate(&wi, &[&x, &y]);
        let rhs = a.evaluate(&wi, &[&y, &x]);
        assert!((lhs + rhs).norm() < 1e-14);
        assert_eq!(wi.bidegree(), Some((1, 1)));
        for n in [1, 2] {
            let a = alg(n);
            assert_eq!(a.omega0().bidegree(), Some((2, 0)));
        }
        // Ω₀ = dz_0 ∧ dz_1 on ℍ¹
        assert!(a.omega0().distance(&FiberForm::basis(4, 0b0101)) < 1e-14);
    }

    #[test]
    fn volume_convention() {
        for n in [1, 2] {
            let a = alg(n);
            let (wi, _, _) = a.omega_forms();
            let m = 2 * n;
            let fact: f64 = (1..=m).map(|i| i as f64).product();
            let vol = wi.pow(m).scale_re(1.0 / fact);
            // vol = e_top / (−4)^n
            let want = 1.0 / a.top_to_volume();
            assert!((vol.top_coeff() - Complex64::new(want, 0.0)).norm() < 1e-13);
        }
    }
}
