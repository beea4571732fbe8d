//! Cyclic Jacobi eigensolver, kept independent of the main solver so that
//! tests can cross-check it.

use nalgebra::{DMatrix, DVector};

use crate::error::{config_err, Result};
use crate::spectra::fix_sign;

/// Largest matrix accepted by [`oracle_eigen`].
pub const ORACLE_MAX_DIM: usize = 50;

const OFF_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back in descending order, eigenvectors as matching
/// columns with their largest-magnitude entry positive.
pub fn oracle_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let k = m.nrows();
    if k != m.ncols() {
        return config_err("oracle needs a square matrix");
    }
    if k == 0 || k > ORACLE_MAX_DIM {
        return config_err(format!("oracle handles 1..={ORACLE_MAX_DIM} rows, got {k}"));
    }
    let scale = m.amax().max(1.0);
    for i in 0..k {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return config_err("oracle needs a symmetric matrix");
            }
        }
    }

    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(k, k);
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= OFF_TOL * scale {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (arp, arq) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..k {
                    let (apr, aqr) = (a[(p, r)], a[(q, r)]);
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                for r in 0..k {
                    let (vrp, vrq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DMatrix::zeros(k, k);
    for (col, &i) in order.iter().enumerate() {
        let mut x: DVector<f64> = v.column(i).into_owned();
        fix_sign(&mut x);
        vectors.set_column(col, &x);
    }
    Ok((values, vectors))
}

fn off_norm(a: &DMatrix<f64>) -> f64 {
    let k = a.nrows();
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let (l, v) = oracle_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert_eq!(l, vec![3.0, 1.0]);
        assert_eq!(v, DMatrix::from_column_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (l, v) = oracle_eigen(&m).unwrap();
        assert!((l[0] - 3.0).abs() < 1e-14 && (l[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[(0, 0)] - h).abs() < 1e-14 && (v[(1, 0)] - h).abs() < 1e-14);
        // largest-magnitude entries tie, first one wins the sign
        assert!((v[(0, 1)].abs() - h).abs() < 1e-14);
        assert!((v[(0, 1)] + v[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(oracle_eigen(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).is_err());
        assert!(oracle_eigen(&DMatrix::zeros(51, 51)).is_err());
        assert!(oracle_eigen(&DMatrix::zeros(2, 3)).is_err());
    }
}
