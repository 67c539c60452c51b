use super::grid::TorusGrid;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Real function sampled on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

const REAL_DRIFT: f64 = 1e-10;

impl ScalarField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        ScalarField::constant(grid, 0.0)
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at grid points given in full `ℝ^{4n}` coordinates.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.point(i)))
            .collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    /// Keeps the real part, rejecting imaginary drift above `1e−10` relative.
    pub fn from_complex(grid: &TorusGrid, values: &[Complex64]) -> Result<Self> {
        let scale = values.iter().map(|v| v.re.abs()).fold(1.0, f64::max);
        let drift = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        if drift > REAL_DRIFT * scale {
            return Err(Error::Invalid(format!(
                "imaginary drift {drift:.3e} in a real field"
            )));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values: values.iter().map(|v| v.re).collect(),
        })
    }

    /// `Σ amplitude · cos(2π k·x + phase)` over the given modes, plus a constant.
    pub fn from_modes(grid: &TorusGrid, modes: &[(Vec<i64>, f64, f64)], constant: f64) -> Self {
        ScalarField::from_fn(grid, |x| {
            constant
                + modes
                    .iter()
                    .map(|(k, amp, phase)| {
                        let dot: f64 = k.iter().zip(x).map(|(ki, xi)| *ki as f64 * xi).sum();
                        amp * (2.0 * PI * dot + phase).cos()
                    })
                    .sum::<f64>()
        })
    }

    /// Random real trigonometric polynomial with modes `|k_r| ≤ kmax` on the
    /// active axes and mean zero, scaled to unit maximum.
    pub fn random_band_limited<R: Rng + ?Sized>(
        grid: &TorusGrid,
        rng: &mut R,
        kmax: i64,
        terms: usize,
    ) -> Self {
        let mut modes = Vec::with_capacity(terms);
        for _ in 0..terms {
            let mut k = vec![0i64; grid.dim()];
            while k.iter().all(|&v| v == 0) {
                for &a in grid.active_axes() {
                    k[a] = rng.random_range(-kmax..=kmax);
                }
            }
            modes.push((
                k,
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..2.0 * PI),
            ));
        }
        let mut f = ScalarField::from_modes(grid, &modes, 0.0);
        let m = f.max_abs();
        if m > 0.0 {
            f = f.scale(1.0 / m);
        }
        f
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn complex(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect()
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut c = self.complex();
        self.grid.fft(&mut c);
        c
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(mean |u|²)^{1/2}`: the `L²` norm for the unit-volume torus.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64).sqrt()
    }

    /// `(mean |u|^p)^{1/p}`, evaluated in log space.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .values
            .iter()
            .map(|v| (v.abs() / m).powf(p))
            .sum::<f64>()
            / self.len() as f64;
        m * (s.ln() / p).exp()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .par_iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Subtracts the mean.
    pub fn mean_zero(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Sum of squared first derivatives along the active axes.
    pub fn grad_norm_sq(&self) -> Self {
        let spec = self.spectrum();
        let k = self.grid.mode_wavenumbers();
        let mut total = vec![0.0; self.len()];
        for slot in 0..self.grid.active_axes().len() {
            let mut d: Vec<Complex64> = spec
                .iter()
                .zip(&k)
                .map(|(v, kk)| v * Complex64::new(0.0, kk[slot]))
                .collect();
            self.grid.ifft(&mut d);
            for (t, v) in total.iter_mut().zip(&d) {
                *t += v.re * v.re;
            }
        }
        ScalarField {
            grid: self.grid.clone(),
            values: total,
        }
    }

    /// Trigonometric interpolation onto a grid with `factor` times as many points per axis.
    ///
    /// A Nyquist coefficient is split evenly between `±N/2`, which keeps real data real.
    pub fn upsample(&self, factor: usize) -> Result<Self> {
        let coarse = &self.grid;
        let fine = TorusGrid::new(coarse.n(), coarse.active_axes(), coarse.points() * factor)?
            .with_dealias(coarse.dealias());
        let (n, m) = (coarse.points(), fine.points());
        let spec = self.spectrum();
        let mut out = vec![Complex64::default(); fine.len()];
        let gain = fine.len() as f64 / coarse.len() as f64;
        for (f, &v) in spec.iter().enumerate() {
            let mut targets: Vec<(usize, f64)> = vec![(0, gain)];
            for j in coarse.multi_index(f) {
                let k = coarse.wavenumber(j);
                let options: Vec<(usize, f64)> = if j == n / 2 {
                    vec![(n / 2, 0.5), (m - n / 2, 0.5)]
                } else {
                    vec![((k.rem_euclid(m as i64)) as usize, 1.0)]
                };
                targets = targets
                    .iter()
                    .flat_map(|&(idx, w)| options.iter().map(move |&(b, s)| (idx * m + b, w * s)))
                    .collect();
            }
            for (idx, w) in targets {
                out[idx] += v * w;
            }
        }
        fine.ifft(&mut out);
        Ok(ScalarField {
            values: out.iter().map(|c| c.re).collect(),
            grid: fine,
        })
    }

    /// Flat Laplacian `Σ ∂²/∂x_r²` computed spectrally.
    pub fn laplacian(&self) -> Self {
        let mut spec = self.spectrum();
        for (v, kk) in spec.iter_mut().zip(self.grid.mode_wavenumbers()) {
            *v *= -kk.iter().map(|x| x * x).sum::<f64>();
        }
        self.grid.ifft(&mut spec);
        ScalarField {
            grid: self.grid.clone(),
            values: spec.iter().map(|v| v.re).collect(),
        }
    }
}
