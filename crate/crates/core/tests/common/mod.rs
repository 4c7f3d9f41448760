//! Independent solvers used as oracles by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Neumaier-compensated sum of products a[i] * b[i].
fn dot_compensated(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let p = x * y;
        let t = sum + p;
        if sum.abs() >= p.abs() {
            comp += (sum - t) + p;
        } else {
            comp += (p - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Least-squares solution of `design * x = rhs` through the normal
/// equations, with compensated accumulation and partial-pivot Gaussian
/// elimination. Requires full column rank.
pub fn normal_equations_solve(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Vec<f64> {
    let n = design.ncols();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| design.column(j).iter().cloned().collect())
        .collect();
    let b: Vec<f64> = rhs.iter().cloned().collect();

    let mut ata = vec![vec![0.0; n]; n];
    let mut atb = vec![0.0; n];
    for i in 0..n {
        for j in i..n {
            let v = dot_compensated(&cols[i], &cols[j]);
            ata[i][j] = v;
            ata[j][i] = v;
        }
        atb[i] = dot_compensated(&cols[i], &b);
    }

    // Gaussian elimination with partial pivoting on the augmented system.
    let mut m = ata;
    let mut y = atb;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&a, &bq| m[a][k].abs().partial_cmp(&m[bq][k].abs()).unwrap())
            .unwrap();
        m.swap(k, pivot);
        y.swap(k, pivot);
        assert!(m[k][k] != 0.0, "normal equations are singular");
        for r in (k + 1)..n {
            let factor = m[r][k] / m[k][k];
            for c in k..n {
                m[r][c] -= factor * m[k][c];
            }
            y[r] -= factor * y[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = y[k];
        for c in (k + 1)..n {
            s -= m[k][c] * x[c];
        }
        x[k] = s / m[k][k];
    }
    x
}

/// Lawson-Hanson active-set non-negative least squares:
/// min ||design * x - rhs|| subject to x >= 0.
pub fn nnls(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Vec<f64> {
    let n = design.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12
        * design
            .iter()
            .cloned()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
        * rhs.norm().max(1.0);

    for _ in 0..(30 * n.max(1)) {
        let gradient = design.transpose() * (rhs - design * &x);
        let candidate = (0..n)
            .filter(|&i| !passive[i])
            .max_by(|&a, &b| gradient[a].partial_cmp(&gradient[b]).unwrap());
        let Some(j) = candidate else { break };
        if gradient[j] <= tol {
            break;
        }
        passive[j] = true;

        loop {
            let active: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub = design.select_columns(active.iter());
            let z_sub = sub
                .clone()
                .svd(true, true)
                .solve(rhs, 1e-14)
                .expect("oracle sub-solve failed");
            let mut z = DVector::zeros(n);
            for (k, &i) in active.iter().enumerate() {
                z[i] = z_sub[k];
            }
            if active.iter().all(|&i| z[i] > tol) {
                x = z;
                break;
            }
            // Step toward z until the first passive variable hits zero.
            let alpha = active
                .iter()
                .filter(|&&i| z[i] <= tol)
                .map(|&i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            for &i in &active {
                x[i] += alpha * (z[i] - x[i]);
            }
            for &i in &active {
                if x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    x.iter().cloned().collect()
}

#[cfg(test)]
mod sanity {
    use super::*;

    #[test]
    fn normal_equations_match_a_hand_solved_system() {
        // Overdetermined consistent system with known solution (2, -1).
        let design = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x_true = [2.0, -1.0];
        let rhs = DVector::from_column_slice(&[2.0, -1.0, 1.0]);
        let x = normal_equations_solve(&design, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nnls_clips_infeasible_directions() {
        // Unconstrained optimum is (2, -1); the constrained one zeroes the
        // second coordinate and refits the first: x = a1.b / a1.a1 = 3/2.
        let design = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let rhs = DVector::from_column_slice(&[2.0, -1.0, 1.0]);
        let x = nnls(&design, &rhs);
        assert!((x[0] - 1.5).abs() < 1e-10, "{x:?}");
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn nnls_recovers_a_nonnegative_truth_exactly() {
        let design = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 0.2, 0.1, 0.3, 1.0, 0.2, 0.1, 0.4, 1.0, 0.5, 0.3, 0.2],
        );
        let truth = DVector::from_column_slice(&[0.7, 0.0, 1.2]);
        let rhs = &design * &truth;
        let x = nnls(&design, &rhs);
        for (a, b) in x.iter().zip(truth.iter()) {
            assert!((a - b).abs() < 1e-10, "{x:?}");
        }
    }
}
