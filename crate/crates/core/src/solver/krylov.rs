//! Restarted GMRES with right preconditioning.

/// Outcome of a converged Krylov solve.
#[derive(Clone, Debug)]
pub struct KrylovSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0` to `‖b − A x‖ ≤ tol·‖b‖`.
///
/// Returns the best iterate and its relative residual as `Err` if `max_iter`
/// total iterations are used up first.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precondition: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<KrylovSolution, KrylovSolution> {
    let len = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; len];
    if bnorm == 0.0 {
        return Ok(KrylovSolution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            break;
        }
        let mut basis = vec![r.iter().map(|v| v / beta).collect::<Vec<f64>>()];
        let mut zs: Vec<Vec<f64>> = Vec::new();
        let mut h: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut steps = 0;
        for j in 0..restart {
            if total >= max_iter {
                break;
            }
            total += 1;
            let z = precondition(&basis[j]);
            let mut w = apply(&z);
            zs.push(z);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                col[i] = dot(&w, v);
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= col[i] * vk;
                }
            }
            col[j + 1] = norm(&w);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            let next_norm = col[j + 1];
            col[j] = denom;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[j]);
            g[j] *= c;
            h.push(col);
            steps = j + 1;
            rel = g[j + 1].abs() / bnorm;
            if rel <= tol || next_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next_norm).collect());
        }
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in i + 1..steps {
                s -= h[k][i] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            for (xk, zk) in x.iter_mut().zip(z) {
                *xk += yi * zk;
            }
        }
        if rel <= tol {
            break;
        }
    }
    let ax = apply(&x);
    let true_rel = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / bnorm;
    let sol = KrylovSolution {
        x,
        iterations: total,
        relative_residual: true_rel,
    };
    if true_rel <= tol.max(rel) * 10.0 && rel <= tol {
        Ok(sol)
    } else {
        Err(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn solves_a_nonsymmetric_system() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0 + i as f64 * 0.1
            } else {
                ((i * 7 + j * 3) % 11) as f64 * 0.02 - 0.1
            }
        });
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let apply = |x: &[f64]| (&a * DVector::from_column_slice(x)).as_slice().to_vec();
        let sol = gmres(apply, |v| v.to_vec(), &b, 1e-12, 10, 500).unwrap();
        let exact = a.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
        let err = (DVector::from_column_slice(&sol.x) - exact).amax();
        assert!(err < 1e-10, "{err}");
        assert!(sol.relative_residual <= 1e-11);
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let d: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..20).map(|i| i as f64 - 3.0).collect();
        let sol = gmres(
            |x| x.iter().zip(&d).map(|(x, d)| x * d).collect(),
            |v| v.iter().zip(&d).map(|(v, d)| v / d).collect(),
            &b,
            1e-14,
            30,
            30,
        )
        .unwrap();
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn stagnation_is_reported() {
        // singular system with b outside the range
        let b = vec![1.0, 1.0];
        let out = gmres(|x| vec![x[0], 0.0], |v| v.to_vec(), &b, 1e-12, 5, 20);
        assert!(out.is_err());
    }
}
