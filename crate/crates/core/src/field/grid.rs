use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Uniform periodic grid on the unit torus `ℝ^{4n}/ℤ^{4n}`.
///
/// Fields vary only along `active_axes`; values are stored C-contiguously over
/// those axes in increasing order.
#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    axes: Vec<usize>,
    points: usize,
    dealias: bool,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n", &self.n)
            .field("axes", &self.axes)
            .field("points", &self.points)
            .field("dealias", &self.dealias)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.axes == other.axes
            && self.points == other.points
            && self.dealias == other.dealias
    }
}

impl TorusGrid {
    pub fn new(n: usize, active_axes: &[usize], points: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if points < 4 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 4, got {points}"
            )));
        }
        let mut axes = active_axes.to_vec();
        axes.sort_unstable();
        axes.dedup();
        if axes.len() != active_axes.len() {
            return Err(Error::InvalidGrid("repeated active axis".into()));
        }
        if let Some(&a) = axes.iter().find(|&&a| a >= 4 * n) {
            return Err(Error::InvalidGrid(format!("axis {a} outside 0..{}", 4 * n)));
        }
        let mut planner = FftPlanner::new();
        Ok(TorusGrid {
            n,
            axes,
            points,
            dealias: false,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    /// Axes `4a, 4a+1` for every quaternionic coordinate `a`.
    pub fn standard(n: usize, points: usize) -> Result<Self> {
        let axes: Vec<usize> = (0..n).flat_map(|a| [4 * a, 4 * a + 1]).collect();
        TorusGrid::new(n, &axes, points)
    }

    /// Enables the 2/3-rule filter after pointwise products.
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        4 * self.n
    }

    pub fn active_axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.axes.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_mask(&self) -> u32 {
        self.axes.iter().fold(0, |m, &a| m | (1 << a))
    }

    /// Grid indices along each active axis for a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for slot in (0..self.axes.len()).rev() {
            idx[slot] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    /// Point in `ℝ^{4n}` for a flat index; inactive coordinates are zero.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (slot, j) in self.multi_index(flat).into_iter().enumerate() {
            x[self.axes[slot]] = j as f64 * self.spacing();
        }
        x
    }

    /// Signed integer wavenumber of FFT bin `j`; the Nyquist bin maps to `N/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.points / 2 {
            j as i64
        } else {
            j as i64 - self.points as i64
        }
    }

    /// Angular wavenumber used by derivatives; zero on the Nyquist bin.
    pub fn derivative_wavenumber(&self, j: usize) -> f64 {
        if j == self.points / 2 {
            0.0
        } else {
            2.0 * std::f64::consts::PI * self.wavenumber(j) as f64
        }
    }

    /// Derivative wavenumbers of every mode, indexed `[flat][slot]`.
    pub fn mode_wavenumbers(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|f| {
                self.multi_index(f)
                    .into_iter()
                    .map(|j| self.derivative_wavenumber(j))
                    .collect()
            })
            .collect()
    }

    /// Whether every component of the mode satisfies `|k| < N/3`.
    pub fn in_dealiased_band(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .into_iter()
            .all(|j| 3 * self.wavenumber(j).unsigned_abs() < self.points as u64)
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.points;
        let dims = self.axes.len();
        for slot in 0..dims {
            let stride = n.pow((dims - 1 - slot) as u32);
            let block = stride * n;
            data.par_chunks_mut(block).for_each(|chunk| {
                let mut line = vec![Complex64::default(); n];
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                for offset in 0..stride {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = chunk[offset + i * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        chunk[offset + i * stride] = *v;
                    }
                }
            });
        }
    }

    /// Unnormalized forward transform over the active axes.
    pub fn fft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/len` normalization.
    pub fn ifft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }

    /// Zeroes modes outside the 2/3 band.
    pub fn truncate_spectrum(&self, spectrum: &mut [Complex64]) {
        for (f, v) in spectrum.iter_mut().enumerate() {
            if !self.in_dealiased_band(f) {
                *v = Complex64::default();
            }
        }
    }

    /// Applies the 2/3 filter to physical values if dealiasing is on.
    pub fn filter(&self, values: &mut [Complex64]) {
        if !self.dealias {
            return;
        }
        self.fft(values);
        self.truncate_spectrum(values);
        self.ifft(values);
    }
}
