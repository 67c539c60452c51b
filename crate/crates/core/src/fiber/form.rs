use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Sign of `e_a ∧ e_b` relative to `e_{a ∪ b}` for disjoint masks.
#[inline]
pub fn wedge_sign(a: u32, b: u32) -> f64 {
    debug_assert_eq!(a & b, 0);
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        rest &= rest - 1;
        // factors of `a` sitting above `bit` must move past it
        swaps += (a >> (bit + 1)).count_ones();
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Multi-indices of size `k` over `0..dim`, as bitmasks, in lexicographic order
/// of their increasing index tuples.
pub fn lex_masks(dim: usize, k: usize) -> Vec<u32> {
    fn rec(start: usize, dim: usize, left: usize, acc: u32, out: &mut Vec<u32>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..=dim - left {
            rec(i + 1, dim, left - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if k <= dim {
        rec(0, dim, k, 0, &mut out);
    }
    out
}

/// Holomorphic and antiholomorphic counts of a frame multi-index.
///
/// The frame is interleaved: even positions carry `dz_c`, odd positions `dz̄_c`.
#[inline]
pub fn mask_bidegree(mask: u32) -> (usize, usize) {
    const EVEN: u32 = 0x5555_5555;
    (
        (mask & EVEN).count_ones() as usize,
        (mask & !EVEN).count_ones() as usize,
    )
}

/// Complex-conjugate frame mask (`dz_c ↔ dz̄_c`) and the sign picked up when the
/// conjugated factors are put back in increasing order.
pub fn conj_mask(mask: u32) -> (u32, f64) {
    let mut idx = Vec::with_capacity(mask.count_ones() as usize);
    let mut rest = mask;
    while rest != 0 {
        let b = rest.trailing_zeros();
        rest &= rest - 1;
        idx.push(b ^ 1);
    }
    let mut inversions = 0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] > idx[j] {
                inversions += 1;
            }
        }
    }
    let out = idx.iter().fold(0u32, |m, &b| m | (1 << b));
    (out, if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

/// An element of the complexified exterior algebra of a single cotangent fiber,
/// stored densely over all `2^dim` frame multi-indices.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberForm {
    dim: usize,
    coeffs: Vec<Complex64>,
}

impl FiberForm {
    pub fn zero(dim: usize) -> Self {
        assert!(
            dim <= 16,
            "fiber dimension {dim} too large for the dense layout"
        );
        FiberForm {
            dim,
            coeffs: vec![Complex64::new(0.0, 0.0); 1 << dim],
        }
    }

    pub fn one(dim: usize) -> Self {
        Self::basis(dim, 0)
    }

    pub fn basis(dim: usize, mask: u32) -> Self {
        let mut f = Self::zero(dim);
        f.coeffs[mask as usize] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (u32, Complex64)>) -> Self {
        let mut f = Self::zero(dim);
        for (m, c) in terms {
            f.coeffs[m as usize] += c;
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, mask: u32) -> Complex64 {
        self.coeffs[mask as usize]
    }

    pub fn set(&mut self, mask: u32, value: Complex64) {
        self.coeffs[mask as usize] = value;
    }

    pub fn add_to(&mut self, mask: u32, value: Complex64) {
        self.coeffs[mask as usize] += value;
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Nonzero `(mask, coefficient)` pairs in increasing mask order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(m, c)| (m as u32, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms().next().is_none()
    }

    /// Degree if homogeneous; `None` for mixed or zero forms.
    pub fn degree(&self) -> Option<usize> {
        let mut deg = None;
        for (m, _) in self.terms() {
            let d = m.count_ones() as usize;
            match deg {
                None => deg = Some(d),
                Some(e) if e != d => return None,
                _ => {}
            }
        }
        deg
    }

    /// Bidegree if the form is pure; `None` for mixed or zero forms.
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let mut bd = None;
        for (m, _) in self.terms() {
            let b = mask_bidegree(m);
            match bd {
                None => bd = Some(b),
                Some(e) if e != b => return None,
                _ => {}
            }
        }
        bd
    }

    /// Human-readable description of the (bi)degree content, for diagnostics.
    pub fn describe(&self) -> String {
        let mut seen: Vec<(usize, usize)> = self.terms().map(|(m, _)| mask_bidegree(m)).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.is_empty() {
            "zero form".into()
        } else {
            format!("{seen:?}")
        }
    }

    pub fn degree_part(&self, k: usize) -> FiberForm {
        let mut out = Self::zero(self.dim);
        for (m, c) in self.terms() {
            if m.count_ones() as usize == k {
                out.coeffs[m as usize] = c;
            }
        }
        out
    }

    pub fn bidegree_part(&self, p: usize, q: usize) -> FiberForm {
        let mut out = Self::zero(self.dim);
        for (m, c) in self.terms() {
            if mask_bidegree(m) == (p, q) {
                out.coeffs[m as usize] = c;
            }
        }
        out
    }

    /// Exterior product.
    pub fn wedge(&self, other: &FiberForm) -> FiberForm {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zero(self.dim);
        let lhs: Vec<_> = self.terms().collect();
        let rhs: Vec<_> = other.terms().collect();
        for &(a, ca) in &lhs {
            for &(b, cb) in &rhs {
                if a & b == 0 {
                    out.coeffs[(a | b) as usize] += ca * cb * wedge_sign(a, b);
                }
            }
        }
        out
    }

    /// `self ∧ self ∧ ... ∧ self` (`k` factors); `pow(0)` is the unit.
    pub fn pow(&self, k: usize) -> FiberForm {
        let mut acc = Self::one(self.dim);
        for _ in 0..k {
            acc = acc.wedge(self);
        }
        acc
    }

    /// Complex conjugate, exchanging `dz_c` with `dz̄_c`.
    pub fn conj(&self) -> FiberForm {
        let mut out = Self::zero(self.dim);
        for (m, c) in self.terms() {
            let (cm, s) = conj_mask(m);
            out.coeffs[cm as usize] += c.conj() * s;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> FiberForm {
        FiberForm {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> FiberForm {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Coefficient of `e_0 ∧ e_1 ∧ ... ∧ e_{dim-1}`.
    pub fn top_coeff(&self) -> Complex64 {
        self.coeffs[(1usize << self.dim) - 1]
    }

    pub fn distance(&self, other: &FiberForm) -> f64 {
        (self - other).norm()
    }
}

impl Add for &FiberForm {
    type Output = FiberForm;
    fn add(self, o: &FiberForm) -> FiberForm {
        assert_eq!(self.dim, o.dim);
        FiberForm {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &FiberForm {
    type Output = FiberForm;
    fn sub(self, o: &FiberForm) -> FiberForm {
        assert_eq!(self.dim, o.dim);
        FiberForm {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Add for FiberForm {
    type Output = FiberForm;
    fn add(self, o: FiberForm) -> FiberForm {
        &self + &o
    }
}

impl Sub for FiberForm {
    type Output = FiberForm;
    fn sub(self, o: FiberForm) -> FiberForm {
        &self - &o
    }
}

impl AddAssign<&FiberForm> for FiberForm {
    fn add_assign(&mut self, o: &FiberForm) {
        assert_eq!(self.dim, o.dim);
        for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
            *a += b;
        }
    }
}

impl Neg for &FiberForm {
    type Output = FiberForm;
    fn neg(self) -> FiberForm {
        self.scale_re(-1.0)
    }
}

impl Mul<Complex64> for &FiberForm {
    type Output = FiberForm;
    fn mul(self, s: Complex64) -> FiberForm {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_form, rng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn lex_order_matches_tuple_order() {
        let masks = lex_masks(4, 2);
        let tuples: Vec<Vec<u32>> = masks
            .iter()
            .map(|m| (0..4).filter(|b| m & (1 << b) != 0).collect())
            .collect();
        assert_eq!(
            tuples,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(lex_masks(8, 4).len(), 70);
        assert_eq!(lex_masks(8, 0), vec![0]);
    }

    #[test]
    fn basic_signs() {
        let d = 4;
        let e = |i: u32| FiberForm::basis(d, 1 << i);
        assert_eq!(e(1).wedge(&e(0)).coeff(0b11), c(-1.0));
        assert_eq!(e(0).wedge(&e(1)).coeff(0b11), c(1.0));
        assert!(e(2).wedge(&e(2)).is_zero());
        let e120 = e(1).wedge(&e(2)).wedge(&e(0));
        assert_eq!(e120.coeff(0b111), c(1.0));
    }

    // Reference wedge: expand every basis product factor by factor.
    fn naive_wedge(a: &FiberForm, b: &FiberForm) -> FiberForm {
        let d = a.dim();
        let mut out = FiberForm::zero(d);
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                let mut idx: Vec<u32> = (0..d as u32).filter(|i| ma & (1 << i) != 0).collect();
                idx.extend((0..d as u32).filter(|i| mb & (1 << i) != 0));
                let mut sorted = idx.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() < idx.len() {
                    continue;
                }
                // bubble sort counting swaps
                let mut swaps = 0;
                for i in 0..idx.len() {
                    for j in 0..idx.len() - 1 - i {
                        if idx[j] > idx[j + 1] {
                            idx.swap(j, j + 1);
                            swaps += 1;
                        }
                    }
                }
                let mask = idx.iter().fold(0u32, |m, &i| m | (1 << i));
                let s = if swaps % 2 == 0 { 1.0 } else { -1.0 };
                out.add_to(mask, ca * cb * s);
            }
        }
        out
    }

    #[test]
    fn wedge_matches_naive_oracle() {
        let mut r = rng(11);
        for _ in 0..40 {
            let da = 1 + (rand::Rng::random_range(&mut r, 0..4));
            let db = rand::Rng::random_range(&mut r, 0..=(4 - da.min(4)));
            let a = random_form(&mut r, 8, da);
            let b = random_form(&mut r, 8, db);
            let fast = a.wedge(&b);
            let slow = naive_wedge(&a, &b);
            assert!(fast.distance(&slow) <= 1e-13 * (1.0 + slow.norm()));
        }
    }

    #[test]
    fn graded_commutativity_and_associativity() {
        let mut r = rng(5);
        for (da, db, dc) in [(1, 1, 2), (2, 3, 1), (1, 2, 2)] {
            let a = random_form(&mut r, 8, da);
            let b = random_form(&mut r, 8, db);
            let cc = random_form(&mut r, 8, dc);
            let ab = a.wedge(&b);
            let ba = b
                .wedge(&a)
                .scale_re(if (da * db) % 2 == 0 { 1.0 } else { -1.0 });
            assert!(ab.distance(&ba) < 1e-12);
            let l = ab.wedge(&cc);
            let rr = a.wedge(&b.wedge(&cc));
            assert!(l.distance(&rr) < 1e-11 * (1.0 + l.norm()));
        }
    }

    #[test]
    fn conjugation_is_an_involution_and_multiplicative() {
        let mut r = rng(3);
        let a = random_form(&mut r, 8, 2);
        let b = random_form(&mut r, 8, 3);
        assert!(a.conj().conj().distance(&a) < 1e-14);
        let lhs = a.wedge(&b).conj();
        let rhs = a.conj().wedge(&b.conj());
        assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn bidegree_bookkeeping() {
        // e0 = dz_0 (hol), e1 = dz̄_0, e2 = dz_1
        let f = FiberForm::basis(8, 0b0101);
        assert_eq!(f.bidegree(), Some((2, 0)));
        assert_eq!(f.conj().bidegree(), Some((0, 2)));
        let g = &f + &FiberForm::basis(8, 0b0011);
        assert_eq!(g.bidegree(), None);
        assert_eq!(g.degree(), Some(2));
    }
}
