//! Shared numeric types: complex matrices, matrix polynomials, block helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MopError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn scalar_mat(n: usize, v: C64) -> CMat {
    CMat::from_diagonal_element(n, n, v)
}

/// Builds a complex matrix from real rows.
pub fn real_mat(rows: &[&[f64]]) -> CMat {
    let r = rows.len();
    let c = if r == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
}

/// Frobenius norm.
pub fn fnorm(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn inverse(m: &CMat, what: &str) -> Result<CMat> {
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| MopError::Singular(what.to_string()))?;
    if inv.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(MopError::Singular(what.to_string()));
    }
    Ok(inv)
}

/// Assembles `[[a, b], [c, d]]` from four N×N blocks.
pub fn block2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let n = a.nrows();
    let mut m = CMat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

/// Splits a 2N×2N matrix into its four N×N blocks.
pub fn split2(m: &CMat) -> [CMat; 4] {
    let n = m.nrows() / 2;
    [
        m.view((0, 0), (n, n)).into_owned(),
        m.view((0, n), (n, n)).into_owned(),
        m.view((n, 0), (n, n)).into_owned(),
        m.view((n, n), (n, n)).into_owned(),
    ]
}

pub fn block_diag(a: &CMat, d: &CMat) -> CMat {
    let n = a.nrows();
    block2(a, &zeros(n), &zeros(n), d)
}

/// `J = [[0, I], [-I, 0]]`.
pub fn j_matrix(n: usize) -> CMat {
    block2(&zeros(n), &eye(n), &(-eye(n)), &zeros(n))
}

/// `diag(I, 0)`, the z-derivative of every transfer matrix.
pub fn upper_projector(n: usize) -> CMat {
    block_diag(&eye(n), &zeros(n))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

/// Left or right family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Polynomial with N×N complex coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial {
    dim: usize,
    coeffs: Vec<CMat>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<CMat>) -> Result<Self> {
        let dim = coeffs
            .first()
            .map(|c| c.nrows())
            .ok_or_else(|| MopError::Spec("matrix polynomial needs at least one coefficient".into()))?;
        if dim == 0 {
            return Err(MopError::Spec("matrix polynomial of size 0".into()));
        }
        if coeffs.iter().any(|c| c.nrows() != dim || c.ncols() != dim) {
            return Err(MopError::Spec("matrix polynomial coefficients differ in shape".into()));
        }
        let mut p = MatrixPolynomial { dim, coeffs };
        p.trim();
        Ok(p)
    }

    pub fn zero(dim: usize) -> Self {
        MatrixPolynomial { dim, coeffs: vec![zeros(dim)] }
    }

    pub fn constant(m: CMat) -> Self {
        MatrixPolynomial { dim: m.nrows(), coeffs: vec![m] }
    }

    /// `a + b z`.
    pub fn linear(a: CMat, b: CMat) -> Self {
        let mut p = MatrixPolynomial { dim: a.nrows(), coeffs: vec![a, b] };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.iter().all(|x| *x == C64::new(0.0, 0.0))) {
            self.coeffs.pop();
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    /// Coefficient of z^k, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> CMat {
        self.coeffs.get(k).cloned().unwrap_or_else(|| zeros(self.dim))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].iter().all(|x| x.norm() == 0.0)
    }

    pub fn eval(&self, z: C64) -> CMat {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return MatrixPolynomial::zero(self.dim);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * C64::new(k as f64, 0.0))
            .collect();
        let mut p = MatrixPolynomial { dim: self.dim, coeffs };
        p.trim();
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeff(k) + other.coeff(k)).collect();
        let mut p = MatrixPolynomial { dim: self.dim, coeffs };
        p.trim();
        p
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut p = MatrixPolynomial { dim: self.dim, coeffs: self.coeffs.iter().map(|c| c * s).collect() };
        p.trim();
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![zeros(self.dim); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let mut p = MatrixPolynomial { dim: self.dim, coeffs };
        p.trim();
        p
    }

    /// Left multiplication by a constant matrix.
    pub fn premul(&self, m: &CMat) -> Self {
        let mut p = MatrixPolynomial { dim: self.dim, coeffs: self.coeffs.iter().map(|c| m * c).collect() };
        p.trim();
        p
    }

    pub fn postmul(&self, m: &CMat) -> Self {
        let mut p = MatrixPolynomial { dim: self.dim, coeffs: self.coeffs.iter().map(|c| c * m).collect() };
        p.trim();
        p
    }
}

/// Scalar polynomial with complex coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarPoly(pub Vec<C64>);

impl ScalarPoly {
    pub fn from_real(c: &[f64]) -> Self {
        let mut v: Vec<C64> = c.iter().map(|&x| C64::new(x, 0.0)).collect();
        while v.len() > 1 && v.last().is_some_and(|x| x.norm() == 0.0) {
            v.pop();
        }
        if v.is_empty() {
            v.push(C64::new(0.0, 0.0));
        }
        ScalarPoly(v)
    }

    pub fn one() -> Self {
        ScalarPoly::from_real(&[1.0])
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.0.get(k).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() == 1 {
            return ScalarPoly(vec![C64::new(0.0, 0.0)]);
        }
        ScalarPoly(self.0.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    /// Roots of a polynomial of degree at most 2.
    pub fn roots(&self) -> Vec<C64> {
        match self.degree() {
            0 => vec![],
            1 => vec![-self.0[0] / self.0[1]],
            _ => {
                let (a, b, cc) = (self.0[2], self.0[1], self.0[0]);
                let disc = (b * b - a * cc * 4.0).sqrt();
                vec![(-b + disc) / (a * 2.0), (-b - disc) / (a * 2.0)]
            }
        }
    }

    pub fn same_as(&self, other: &[f64]) -> bool {
        let o = ScalarPoly::from_real(other);
        self.0.len() == o.0.len() && self.0.iter().zip(&o.0).all(|(a, b)| (a - b).norm() < 1e-14)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_eval_and_derivative() {
        let p = MatrixPolynomial::new(vec![eye(2), real_mat(&[&[0.0, 1.0], &[0.0, 0.0]]), eye(2) * c64(2.0, 0.0)]).unwrap();
        let z = c64(0.5, -1.0);
        let direct = eye(2) + real_mat(&[&[0.0, 1.0], &[0.0, 0.0]]) * z + eye(2) * (z * z * 2.0);
        assert!(fnorm(&(p.eval(z) - direct)) < 1e-15);
        let dp = p.derivative();
        let ddirect = real_mat(&[&[0.0, 1.0], &[0.0, 0.0]]) + eye(2) * (z * 4.0);
        assert!(fnorm(&(dp.eval(z) - ddirect)) < 1e-15);
    }

    #[test]
    fn product_degree_adds() {
        let a = MatrixPolynomial::linear(eye(2), eye(2));
        let b = MatrixPolynomial::linear(-eye(2), eye(2));
        let p = a.mul(&b);
        assert_eq!(p.degree(), 2);
        let z = c64(1.3, 0.2);
        assert!(fnorm(&(p.eval(z) - eye(2) * (z * z - 1.0))) < 1e-14);
    }

    #[test]
    fn block_roundtrip() {
        let a = real_mat(&[&[1.0]]);
        let m = block2(&a, &(a.clone() * c64(2.0, 0.0)), &(a.clone() * c64(3.0, 0.0)), &(a.clone() * c64(4.0, 0.0)));
        let [p, q, r, s] = split2(&m);
        assert_eq!(p[(0, 0)].re, 1.0);
        assert_eq!(q[(0, 0)].re, 2.0);
        assert_eq!(r[(0, 0)].re, 3.0);
        assert_eq!(s[(0, 0)].re, 4.0);
    }

    #[test]
    fn quadratic_roots() {
        let p = ScalarPoly::from_real(&[0.0, 1.0, -1.0]);
        let mut r: Vec<f64> = p.roots().iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((r[0] - 0.0).abs() < 1e-15 && (r[1] - 1.0).abs() < 1e-15);
    }
}
