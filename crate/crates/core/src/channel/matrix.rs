use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ChannelError;
use crate::scenario::{ArrayConfig, Path};

/// Dense complex matrix stored as separate row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        ComplexMatrix { n_rows, n_cols, re: vec![0.0; n_rows * n_cols], im: vec![0.0; n_rows * n_cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.re[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.n_cols + j;
        Complex64::new(self.re[k], self.im[k])
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = i * self.n_cols + j;
        self.re[k] = v.re;
        self.im[k] = v.im;
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n_cols, self.n_rows, |i, j| self.get(j, i))
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.n_cols, self.n_rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n_cols, other.n_rows, "matmul shape mismatch");
        Self::from_fn(self.n_rows, other.n_cols, |i, j| {
            (0..self.n_cols).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n_cols, v.len(), "matvec shape mismatch");
        (0..self.n_rows).map(|i| (0..self.n_cols).map(|k| self.get(i, k) * v[k]).sum()).collect()
    }

    /// `Hᴴ H`, the Gram matrix whose quadratic form is `‖H w‖²`.
    pub fn gram(&self) -> Self {
        self.conj_transpose().matmul(self)
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        self.re.iter_mut().zip(&other.re).for_each(|(a, b)| *a += b);
        self.im.iter_mut().zip(&other.im).for_each(|(a, b)| *a += b);
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            re: self.re.iter().map(|x| x * s).collect(),
            im: self.im.iter().map(|x| x * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.re
            .iter()
            .zip(&other.re)
            .chain(self.im.iter().zip(&other.im))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }
}

/// ULA response toward (az, el): element n is `exp(j·2π·n·(d/λ)·u)` with
/// `u = sin(el)·cos(az − θ_orient)`.
pub fn steering_vector(az_rad: f64, el_rad: f64, array: &ArrayConfig) -> Vec<Complex64> {
    let u = el_rad.sin() * (az_rad - array.orientation_rad).cos();
    let k = std::f64::consts::TAU * array.spacing_over_wavelength * u;
    (0..array.n_elements).map(|n| Complex64::from_polar(1.0, k * n as f64)).collect()
}

/// Complex gain `10^(E/20)·e^{jφ}`.
pub fn path_gain(e_dbuv: f64, phase_rad: f64) -> Complex64 {
    Complex64::from_polar(10f64.powf(e_dbuv / 20.0), phase_rad)
}

/// Coherent superposition `Σ α_l a_rx a_txᴴ`; an empty path list gives zeros.
pub fn synthesize_channel(paths: &[Path], array: &ArrayConfig) -> ComplexMatrix {
    let n = array.n_elements;
    let mut h = ComplexMatrix::zeros(n, n);
    for p in paths {
        let alpha = path_gain(p.e_dbuv, p.phase_rad);
        let rx = steering_vector(p.arr_az_rad, p.arr_el_rad, array);
        let tx = steering_vector(p.dep_az_rad, p.dep_el_rad, array);
        for i in 0..n {
            let a = alpha * rx[i];
            for j in 0..n {
                let v = a * tx[j].conj();
                h.re[i * n + j] += v.re;
                h.im[i * n + j] += v.im;
            }
        }
    }
    h
}

/// Swap transmitter and receiver roles: plain transpose, no conjugation.
pub fn apply_reciprocity(h: &ComplexMatrix) -> Result<ComplexMatrix, ChannelError> {
    if !h.is_square() {
        return Err(ChannelError::NotSquare(h.n_rows, h.n_cols));
    }
    Ok(h.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    fn ula(orientation_rad: f64) -> ArrayConfig {
        ArrayConfig { n_elements: 4, spacing_over_wavelength: 0.5, orientation_rad }
    }

    #[test]
    fn broadside_is_all_ones() {
        for az in [0.0, 1.0, -2.5] {
            assert!(steering_vector(az, 0.0, &ula(0.3)).iter().all(|&v| close(v, Complex64::new(1.0, 0.0))));
        }
    }

    #[test]
    fn endfire_alternates() {
        let v = steering_vector(0.4, FRAC_PI_2, &ula(0.4));
        let want = [1.0, -1.0, 1.0, -1.0];
        for (a, b) in v.iter().zip(want) {
            assert!(close(*a, Complex64::new(b, 0.0)));
        }
    }

    #[test]
    fn sixty_degrees_off_axis() {
        let v = steering_vector(0.2 + FRAC_PI_3, FRAC_PI_2, &ula(0.2));
        let i = Complex64::i();
        let want = [Complex64::new(1.0, 0.0), i, -Complex64::new(1.0, 0.0), -i];
        for (a, b) in v.iter().zip(want) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn gains() {
        assert!(close(path_gain(0.0, 0.0), Complex64::new(1.0, 0.0)));
        assert!(close(path_gain(20.0, FRAC_PI_2), Complex64::new(0.0, 10.0)));
        assert!(close(path_gain(-20.0, PI), Complex64::new(-0.1, 0.0)));
    }

    #[test]
    fn single_broadside_path() {
        let p = Path { e_dbuv: 0.0, phase_rad: 0.0, dep_az_rad: 0.7, dep_el_rad: 0.0, arr_az_rad: 2.0, arr_el_rad: 0.0 };
        let h = synthesize_channel(&[p], &ula(0.0));
        assert!(h.re.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(h.im.iter().all(|&x| x.abs() < 1e-15));
        assert_eq!(synthesize_channel(&[], &ula(0.0)), ComplexMatrix::zeros(4, 4));
    }

    #[test]
    fn reciprocity() {
        assert_eq!(apply_reciprocity(&ComplexMatrix::identity(3)).unwrap(), ComplexMatrix::identity(3));
        let mut h = ComplexMatrix::zeros(2, 2);
        h.set(0, 1, Complex64::new(2.0, 3.0));
        let t = apply_reciprocity(&h).unwrap();
        assert_eq!(t.get(1, 0), Complex64::new(2.0, 3.0));
        assert_eq!(t.get(0, 1), Complex64::new(0.0, 0.0));
        assert!(apply_reciprocity(&ComplexMatrix::zeros(2, 3)).is_err());
    }
}
