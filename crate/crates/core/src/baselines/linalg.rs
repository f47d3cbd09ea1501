//! Small dense complex kernels: cyclic Jacobi eigendecomposition for Hermitian
//! matrices, an SVD built on it, and a Cholesky solver.

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::ComplexMatrix;

pub const MAX_DIM: usize = 16;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension error: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// Descending.
    pub values: Vec<f64>,
    /// Left vectors as columns (`rows × cols`); zero where the value is zero.
    pub u: ComplexMatrix,
    /// Right vectors as columns (`cols × cols`).
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (r, c) = (self.u.n_rows, self.v.n_rows);
        ComplexMatrix::from_fn(r, c, |i, j| {
            (0..self.values.len()).map(|k| self.u.get(i, k) * self.values[k] * self.v.get(j, k).conj()).sum()
        })
    }
}

fn hermitian_asymmetry(g: &ComplexMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..g.n_rows {
        for j in i..g.n_cols {
            worst = worst.max((g.get(i, j) - g.get(j, i).conj()).norm());
        }
    }
    worst
}

fn check_hermitian(g: &ComplexMatrix) -> Result<(), LinalgError> {
    if !g.is_square() || g.n_rows == 0 || g.n_rows > MAX_DIM {
        return Err(LinalgError::Dimension(format!("{}x{} (square, at most {MAX_DIM})", g.n_rows, g.n_cols)));
    }
    let asym = hermitian_asymmetry(g);
    if asym > 1e-10 * g.frobenius_norm().max(1.0) {
        return Err(LinalgError::NotHermitian(asym));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn hermitian_eig(g: &ComplexMatrix) -> Result<Eigen, LinalgError> {
    check_hermitian(g)?;
    let n = g.n_rows;
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|i| (0..n).map(|j| g.get(i, j)).collect()).collect();
    // symmetrize so rounding asymmetry does not leak into the rotations
    for i in 0..n {
        a[i][i] = Complex64::new(a[i][i].re, 0.0);
        for j in i + 1..n {
            let m = (a[i][j] + a[j][i].conj()) * 0.5;
            a[i][j] = m;
            a[j][i] = m.conj();
        }
    }
    let mut v: Vec<Vec<Complex64>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect()).collect();
    let scale = g.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].norm_sqr()).sum();
        if off.sqrt() <= 1e-15 * scale || scale == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                // D = diag(1, e^{-iφ}) makes the (p, q) entry real, then a real rotation zeroes it
                let ph = apq / r;
                let theta = (a[q][q].re - a[p][p].re) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -ph.conj() * s;
                let jqq = ph.conj() * c;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * jpp + y * jqp;
                    row[q] = x * jpq + y * jqq;
                }
                for k in 0..n {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = jpp.conj() * x + jqp.conj() * y;
                    a[q][k] = jpq.conj() * x + jqq.conj() * y;
                }
                a[p][q] = Complex64::new(0.0, 0.0);
                a[q][p] = Complex64::new(0.0, 0.0);
                a[p][p].im = 0.0;
                a[q][q].im = 0.0;
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * jpp + y * jqp;
                    row[q] = x * jpq + y * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].re.total_cmp(&a[i][i].re));
    Ok(Eigen {
        values: order.iter().map(|&k| a[k][k].re).collect(),
        vectors: ComplexMatrix::from_fn(n, n, |i, j| v[i][order[j]]),
    })
}

/// Singular values and vectors of a (possibly rectangular) matrix via the
/// eigendecomposition of `HᴴH`. Each singular value is recomputed as `‖H v‖`.
pub fn svd_small(h: &ComplexMatrix) -> Result<Svd, LinalgError> {
    if h.n_cols == 0 || h.n_cols > MAX_DIM || h.n_rows == 0 {
        return Err(LinalgError::Dimension(format!("{}x{}", h.n_rows, h.n_cols)));
    }
    let eig = hermitian_eig(&h.gram())?;
    let n = h.n_cols;
    let mut values = Vec::with_capacity(n);
    let mut u = ComplexMatrix::zeros(h.n_rows, n);
    for k in 0..n {
        let hv = h.mul_vec(&eig.vectors.column(k));
        let s = hv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if s > 0.0 {
            for (i, z) in hv.iter().enumerate() {
                u.set(i, k, z / s);
            }
        }
        values.push(s);
    }
    // ‖Hv‖ can reorder near-degenerate pairs; keep the vectors aligned with descending values
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    Ok(Svd {
        values: order.iter().map(|&k| values[k]).collect(),
        u: ComplexMatrix::from_fn(h.n_rows, n, |i, j| u.get(i, order[j])),
        v: ComplexMatrix::from_fn(n, n, |i, j| eig.vectors.get(i, order[j])),
    })
}

/// Solve `A x = b` for Hermitian positive definite `A` by Cholesky factorization.
pub fn solve_hpd(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    check_hermitian(a)?;
    let n = a.n_rows;
    if b.len() != n {
        return Err(LinalgError::Dimension(format!("{n}x{n} system, rhs of {}", b.len())));
    }
    // A = L Lᴴ
    let mut l = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        let d = a.get(j, j).re - (0..j).map(|k| l[j][k].norm_sqr()).sum::<f64>();
        if !(d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[j][j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let s: Complex64 = (0..j).map(|k| l[i][k] * l[j][k].conj()).sum();
            l[i][j] = (a.get(i, j) - s) / d;
        }
    }
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let s: Complex64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let s: Complex64 = (i + 1..n).map(|k| l[k][i].conj() * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<Complex64> =
            (0..rows * cols).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
    }

    #[test]
    fn identity_eigenvalues() {
        let e = hermitian_eig(&ComplexMatrix::identity(5)).unwrap();
        assert!(e.values.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn diag_singular_values() {
        let h = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Complex64::from_polar(2.0, 0.7),
            (1, 1) => Complex64::from_polar(1.0, -2.1),
            _ => Complex64::new(0.0, 0.0),
        });
        let s = svd_small(&h).unwrap();
        assert!((s.values[0] - 2.0).abs() < 1e-12 && (s.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_4x4_reconstruction() {
        let h = random(4, 4, 9);
        let s = svd_small(&h).unwrap();
        assert!(s.reconstruct().max_abs_diff(&h) <= 1e-9);
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigen_residual() {
        let g = random(6, 6, 3).gram();
        let e = hermitian_eig(&g).unwrap();
        for k in 0..6 {
            let v = e.vectors.column(k);
            let gv = g.mul_vec(&v);
            let r: f64 = gv.iter().zip(&v).map(|(a, b)| (a - b * e.values[k]).norm_sqr()).sum::<f64>().sqrt();
            assert!(r <= 1e-9 * g.frobenius_norm());
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut g = ComplexMatrix::identity(2);
        g.set(0, 1, Complex64::new(0.5, 0.0));
        assert!(matches!(hermitian_eig(&g), Err(LinalgError::NotHermitian(_))));
    }

    #[test]
    fn cholesky_solve() {
        let mut a = random(5, 5, 4).gram();
        a.add_assign(&ComplexMatrix::identity(5).scale(0.1));
        let b: Vec<Complex64> = (0..5).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let x = solve_hpd(&a, &b).unwrap();
        let r: f64 = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(r <= 1e-9 * nb);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = ComplexMatrix::identity(2);
        a.set(1, 1, Complex64::new(-1.0, 0.0));
        assert_eq!(solve_hpd(&a, &[Complex64::new(1.0, 0.0); 2]), Err(LinalgError::NotPositiveDefinite));
    }
}
