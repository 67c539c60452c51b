use nalgebra::{DMatrix, DVector};

/// Lawson-Hanson active-set solver for `min ‖Ax − b‖` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let cols = a.ncols();
    let mut x = DVector::zeros(cols);
    let mut passive = vec![false; cols];
    let tol = 1e-12 * a.amax().max(1.0) * b.amax().max(1.0);
    for _ in 0..3 * cols + 10 {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..cols)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
            let z_sub = least_squares(&a.select_columns(&idx), b);
            if z_sub.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z_sub[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z_sub[k] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z_sub[k]));
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z_sub[k] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-13)
        .expect("singular vectors requested")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_vector, rng};

    #[test]
    fn recovers_nonnegative_combination() {
        let mut r = rng(60);
        let a = DMatrix::from_fn(12, 6, |_, _| random_vector(&mut r, 1)[0]);
        let truth = DVector::from_vec(vec![0.5, 0.0, 1.5, 0.0, 0.25, 2.0]);
        let b = &a * &truth;
        let x = nnls(&a, &b);
        assert!((x - truth).amax() < 1e-10);
    }

    #[test]
    fn clamps_negative_directions() {
        let a = DMatrix::<f64>::identity(3, 3);
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let x = nnls(&a, &b);
        assert!((x - DVector::from_vec(vec![1.0, 0.0, 3.0])).amax() < 1e-12);
    }

    #[test]
    fn agrees_with_brute_force_on_small_problems() {
        let mut r = rng(61);
        for _ in 0..20 {
            let a = DMatrix::from_fn(4, 3, |_, _| random_vector(&mut r, 1)[0]);
            let b = DVector::from_vec(random_vector(&mut r, 4));
            let x = nnls(&a, &b);
            assert!(x.iter().all(|&v| v >= 0.0));
            // enumerate supports
            let mut best = f64::INFINITY;
            for mask in 0u32..8 {
                let idx: Vec<usize> = (0..3).filter(|j| mask & (1 << j) != 0).collect();
                let mut full = DVector::zeros(3);
                if !idx.is_empty() {
                    let z = least_squares(&a.select_columns(&idx), &b);
                    if z.iter().any(|&v| v < 0.0) {
                        continue;
                    }
                    for (k, &j) in idx.iter().enumerate() {
                        full[j] = z[k];
                    }
                }
                best = best.min((&a * full - &b).norm());
            }
            assert!((&a * &x - &b).norm() <= best + 1e-10);
        }
    }
}
