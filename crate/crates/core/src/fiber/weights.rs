use super::form::FiberForm;
use super::structure::{FiberAlgebra, Unit};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Splitting of one degree of the exterior algebra into isotypic components
/// of the `SU(2)` action generated by `I, J, K`.
#[derive(Clone, Debug)]
pub struct WeightDecomposition {
    pub degree: usize,
    /// `(weight, projector)` pairs sorted by decreasing weight.
    pub components: Vec<(usize, DMatrix<Complex64>)>,
}

impl WeightDecomposition {
    pub fn weights(&self) -> Vec<usize> {
        self.components.iter().map(|(w, _)| *w).collect()
    }

    pub fn top_weight(&self) -> usize {
        self.components[0].0
    }

    pub fn projector(&self, weight: usize) -> Option<&DMatrix<Complex64>> {
        self.components
            .iter()
            .find(|(w, _)| *w == weight)
            .map(|(_, p)| p)
    }

    /// Complex dimension of the weight-`w` component.
    pub fn dimension(&self, weight: usize) -> usize {
        self.projector(weight)
            .map_or(0, |p| p.trace().re.round() as usize)
    }
}

impl FiberAlgebra {
    /// `−(ad_I² + ad_J² + ad_K²)` on degree `k`; weight `w` has eigenvalue `w(w+2)`.
    pub fn casimir(&self, k: usize) -> DMatrix<Complex64> {
        let mut c = DMatrix::from_element(
            self.block(k).len(),
            self.block(k).len(),
            Complex64::default(),
        );
        for u in Unit::ALL {
            let a = self.ad_matrix(u, k);
            c -= a * a;
        }
        c
    }

    /// Spectral decomposition of the Casimir on degree `k`, cached.
    pub fn weight_decompose(&self, k: usize) -> &WeightDecomposition {
        self.weight_cache[k].get_or_init(|| {
            let c = self.casimir(k);
            let herm = (&c + c.adjoint()).scale(0.5);
            let eig = herm.symmetric_eigen();
            let mut components: Vec<(usize, DMatrix<Complex64>)> = Vec::new();
            let size = c.nrows();
            for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
                let w = ((1.0 + lambda.max(0.0)).sqrt() - 1.0).round() as usize;
                let v = eig.eigenvectors.column(i);
                let rank_one = &v * v.adjoint();
                match components.iter_mut().find(|(x, _)| *x == w) {
                    Some((_, p)) => *p += rank_one,
                    None => {
                        let mut p = DMatrix::from_element(size, size, Complex64::default());
                        p += rank_one;
                        components.push((w, p));
                    }
                }
            }
            components.sort_by(|a, b| b.0.cmp(&a.0));
            WeightDecomposition {
                degree: k,
                components,
            }
        })
    }

    fn top_projector(&self, k: usize) -> &DMatrix<Complex64> {
        &self.weight_decompose(k).components[0].1
    }

    /// Projection onto the top-weight component in every degree `≤ 2n`.
    pub fn project_plus(&self, eta: &FiberForm) -> Result<FiberForm> {
        let half = 2 * self.n();
        if let Some((m, _)) = eta.terms().find(|(m, _)| m.count_ones() as usize > half) {
            return Err(Error::AboveMiddleDegree {
                degree: m.count_ones() as usize,
                half,
            });
        }
        // the projector commutes with ad_I, so bidegrees are kept exactly
        let mut out = self.zero();
        for (p, q) in bidegrees(eta) {
            let part = eta.bidegree_part(p, q);
            let img = self.apply_per_degree(&part, |k| self.top_projector(k));
            out += &img.bidegree_part(p, q);
        }
        Ok(out)
    }

    /// `½(η + η(·J, ·J))` for a `(1,1)`-form: its `SU(2)`-invariant part.
    pub fn project_su2_invariant(&self, eta: &FiberForm) -> Result<FiberForm> {
        require_bidegree(eta, 1, 1)?;
        Ok((eta + &self.extend_j(eta)).scale_re(0.5))
    }

    /// `½(η − η(·J, ·J))`: top-weight part of a `(1,1)`-form without spectral data.
    pub fn project_plus_11(&self, eta: &FiberForm) -> Result<FiberForm> {
        require_bidegree(eta, 1, 1)?;
        Ok((eta - &self.extend_j(eta)).scale_re(0.5))
    }
}

fn bidegrees(eta: &FiberForm) -> Vec<(usize, usize)> {
    let mut seen: Vec<(usize, usize)> = eta
        .terms()
        .map(|(m, _)| super::form::mask_bidegree(m))
        .collect();
    seen.sort_unstable();
    seen.dedup();
    seen
}

pub(crate) fn require_bidegree(eta: &FiberForm, p: usize, q: usize) -> Result<()> {
    match eta.bidegree() {
        None if eta.is_zero() => Ok(()),
        Some(b) if b == (p, q) => Ok(()),
        _ => Err(Error::Bidegree {
            expected: (p, q),
            found: eta.describe(),
        }),
    }
}
