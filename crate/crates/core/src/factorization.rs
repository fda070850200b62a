//! Block Gauss–Borel factorization of the moment matrix and the
//! recurrence coefficients it encodes.

use crate::error::{MopError, Result};
use crate::moments::{assemble_moment_matrix, MomentData, Normalization};
use crate::types::{fnorm, inverse, zeros, CMat, MatrixPolynomial, Side};

#[derive(Clone, Debug)]
pub struct RecurrenceData {
    pub dim: usize,
    pub n_max: usize,
    pub normalization: Normalization,
    /// `C_0 ..= C_{n_max}`.
    pub c: Vec<CMat>,
    pub c_inv: Vec<CMat>,
    /// `beta_0 ..= beta_{n_max - 1}`.
    pub beta_l: Vec<CMat>,
    pub beta_r: Vec<CMat>,
    /// `gamma_0 ..= gamma_{n_max}` with `gamma_0 = 0`.
    pub gamma_l: Vec<CMat>,
    pub gamma_r: Vec<CMat>,
    /// Monic polynomials, `P_n = I z^n + p^1_n z^{n-1} + p^2_n z^{n-2} + ...`.
    pub polys_l: Vec<MatrixPolynomial>,
    pub polys_r: Vec<MatrixPolynomial>,
    /// `|| P^L U P^R - diag(C_n^{-1}) ||_F / || U ||_F`.
    pub residual: f64,
}

impl RecurrenceData {
    /// Coefficient `p^k_n` of `z^{n-k}` (zero when `k > n`).
    pub fn p(&self, side: Side, k: usize, n: usize) -> CMat {
        if k > n {
            return zeros(self.dim);
        }
        let poly = match side {
            Side::Left => &self.polys_l[n],
            Side::Right => &self.polys_r[n],
        };
        poly.coeff(n - k)
    }

    pub fn p1(&self, side: Side, n: usize) -> CMat {
        self.p(side, 1, n)
    }

    pub fn poly(&self, side: Side, n: usize) -> &MatrixPolynomial {
        match side {
            Side::Left => &self.polys_l[n],
            Side::Right => &self.polys_r[n],
        }
    }

    pub fn beta(&self, side: Side, n: usize) -> &CMat {
        match side {
            Side::Left => &self.beta_l[n],
            Side::Right => &self.beta_r[n],
        }
    }

    pub fn gamma(&self, side: Side, n: usize) -> &CMat {
        match side {
            Side::Left => &self.gamma_l[n],
            Side::Right => &self.gamma_r[n],
        }
    }

    /// `C_n` with the convention `C_{-1} = I`.
    pub fn c_at(&self, n: isize) -> CMat {
        if n < 0 {
            CMat::identity(self.dim, self.dim)
        } else {
            self.c[n as usize].clone()
        }
    }
}

/// Block Gauss–Borel factorization by sequential Schur elimination on the
/// rows (left) and columns (right) of the moment matrix, without pivoting.
pub fn gauss_borel(md: &MomentData, n_max: usize) -> Result<RecurrenceData> {
    if n_max > md.n_max {
        return Err(MopError::Range(format!("factorization to n = {n_max} needs moments up to n_max = {n_max}, have {}", md.n_max)));
    }
    for r in md.regularity.iter().take(n_max + 1) {
        if !r.regular {
            return Err(MopError::Regularity {
                n: r.n,
                detail: format!("block pivot below threshold (det |U_n| = {:e}, margin {:e})", r.det_modulus, r.pivot_margin),
            });
        }
    }
    let d = md.dim;
    let nb = n_max + 1;
    let u = assemble_moment_matrix(md, n_max)?;
    let size = nb * d;

    // Row sweep: [U | I] -> [D U~ | P^L].
    let mut a = u.clone();
    let mut pl = CMat::identity(size, size);
    let mut pivots: Vec<CMat> = Vec::with_capacity(nb);
    for k in 0..nb {
        let s = a.view((k * d, k * d), (d, d)).into_owned();
        let sinv = inverse(&s, "block pivot").map_err(|_| MopError::Regularity { n: k, detail: "singular block pivot".into() })?;
        for i in k + 1..nb {
            let f = a.view((i * d, k * d), (d, d)).into_owned() * &sinv;
            let row_a = a.view((k * d, 0), (d, size)).into_owned();
            let row_p = pl.view((k * d, 0), (d, size)).into_owned();
            let mut ra = a.view_mut((i * d, 0), (d, size));
            ra -= &f * row_a;
            let mut rp = pl.view_mut((i * d, 0), (d, size));
            rp -= &f * row_p;
        }
        pivots.push(s);
    }

    // Column sweep: [U ; I] -> [U~' D ; P^R].
    let mut b = u.clone();
    let mut pr = CMat::identity(size, size);
    for k in 0..nb {
        let s = b.view((k * d, k * d), (d, d)).into_owned();
        let sinv = inverse(&s, "block pivot").map_err(|_| MopError::Regularity { n: k, detail: "singular block pivot".into() })?;
        for j in k + 1..nb {
            let g = &sinv * b.view((k * d, j * d), (d, d)).into_owned();
            let col_b = b.view((0, k * d), (size, d)).into_owned();
            let col_p = pr.view((0, k * d), (size, d)).into_owned();
            let mut cb = b.view_mut((0, j * d), (size, d));
            cb -= col_b * &g;
            let mut cp = pr.view_mut((0, j * d), (size, d));
            cp -= col_p * &g;
        }
    }

    let mut diag = CMat::zeros(size, size);
    for (k, s) in pivots.iter().enumerate() {
        diag.view_mut((k * d, k * d), (d, d)).copy_from(s);
    }
    let residual = fnorm(&(&pl * &u * &pr - &diag)) / fnorm(&u).max(f64::MIN_POSITIVE);

    let polys_l: Vec<MatrixPolynomial> = (0..nb)
        .map(|n| MatrixPolynomial::new((0..=n).map(|j| pl.view((n * d, j * d), (d, d)).into_owned()).collect()))
        .collect::<Result<_>>()?;
    let polys_r: Vec<MatrixPolynomial> = (0..nb)
        .map(|n| MatrixPolynomial::new((0..=n).map(|j| pr.view((j * d, n * d), (d, d)).into_owned()).collect()))
        .collect::<Result<_>>()?;

    let c_inv = pivots;
    let c: Vec<CMat> = c_inv.iter().map(|s| inverse(s, "C_n")).collect::<Result<_>>()?;
    let p1 = |n: usize| if n == 0 { zeros(d) } else { polys_l[n].coeff(n - 1) };
    let beta_l: Vec<CMat> = (0..n_max).map(|n| p1(n) - p1(n + 1)).collect();
    let beta_r: Vec<CMat> = (0..n_max).map(|n| &c[n] * &beta_l[n] * &c_inv[n]).collect();
    let mut gamma_l = vec![zeros(d)];
    let mut gamma_r = vec![zeros(d)];
    for n in 1..nb {
        gamma_l.push(&c_inv[n] * &c[n - 1]);
        gamma_r.push(&c[n - 1] * &c_inv[n]);
    }
    Ok(RecurrenceData {
        dim: d,
        n_max,
        normalization: md.normalization,
        c,
        c_inv,
        beta_l,
        beta_r,
        gamma_l,
        gamma_r,
        polys_l,
        polys_r,
        residual,
    })
}

/// Monic `P_n^L`, `P_n^R` and `C_n` from a direct solve of the
/// orthogonality conditions against `x^0 .. x^{n-1}`.
pub fn polynomials_via_linear_solve(md: &MomentData, n: usize) -> Result<(MatrixPolynomial, MatrixPolynomial, CMat)> {
    let d = md.dim;
    if 2 * n >= md.moments.len() {
        return Err(MopError::Range(format!("linear solve at n = {n} needs {} moments", 2 * n + 1)));
    }
    if n == 0 {
        let c = inverse(&md.moments[0], "omega_0").map_err(|_| MopError::Regularity { n: 0, detail: "omega_0 is singular".into() })?;
        let one = MatrixPolynomial::constant(CMat::identity(d, d));
        return Ok((one.clone(), one, c));
    }
    let u = assemble_moment_matrix(md, n - 1)?;
    let nd = n * d;
    // left: A U = -[omega_n .. omega_{2n-1}]  <=>  U^T A^T = -r^T
    let mut r = CMat::zeros(d, nd);
    let mut col = CMat::zeros(nd, d);
    for j in 0..n {
        r.view_mut((0, j * d), (d, d)).copy_from(&md.moments[n + j]);
        col.view_mut((j * d, 0), (d, d)).copy_from(&md.moments[n + j]);
    }
    let solve = |m: &CMat, rhs: &CMat| -> Result<CMat> {
        let lu = m.clone().full_piv_lu();
        let mut x = lu.solve(rhs).ok_or_else(|| MopError::Regularity { n, detail: "singular moment matrix".into() })?;
        // one step of iterative refinement
        let res = rhs - m * &x;
        if let Some(dx) = lu.solve(&res) {
            x += dx;
        }
        Ok(x)
    };
    let at = solve(&u.transpose(), &(-r.transpose()))?;
    let a = at.transpose();
    let b = solve(&u, &(-col))?;
    let mut cl: Vec<CMat> = (0..n).map(|j| a.view((0, j * d), (d, d)).into_owned()).collect();
    cl.push(CMat::identity(d, d));
    let mut cr: Vec<CMat> = (0..n).map(|j| b.view((j * d, 0), (d, d)).into_owned()).collect();
    cr.push(CMat::identity(d, d));
    let mut cinv = md.moments[2 * n].clone();
    for (j, aj) in cl.iter().take(n).enumerate() {
        cinv += aj * &md.moments[j + n];
    }
    let c = inverse(&cinv, "C_n^{-1}").map_err(|_| MopError::Regularity { n, detail: "singular C_n^{-1}".into() })?;
    Ok((MatrixPolynomial::new(cl)?, MatrixPolynomial::new(cr)?, c))
}

/// `|| int P_n^L omega P_m^R - delta_{nm} C_n^{-1} ||`, exactly through
/// the moments.
pub fn biorthogonality_residual(md: &MomentData, rec: &RecurrenceData, n: usize, m: usize) -> Result<f64> {
    if n > rec.n_max || m > rec.n_max || n + m >= md.moments.len() {
        return Err(MopError::Range(format!("biorthogonality at ({n}, {m}) is outside the computed range")));
    }
    let pl = &rec.polys_l[n];
    let pr = &rec.polys_r[m];
    let mut acc = zeros(md.dim);
    for i in 0..=n {
        let li = pl.coeff(i);
        for j in 0..=m {
            acc += &li * &md.moments[i + j] * pr.coeff(j);
        }
    }
    if n == m {
        acc -= &rec.c_inv[n];
    }
    Ok(fnorm(&acc))
}

/// Scale for biorthogonality residuals: the same sum with absolute values.
pub fn biorthogonality_scale(md: &MomentData, rec: &RecurrenceData, n: usize, m: usize) -> f64 {
    let pl = &rec.polys_l[n];
    let pr = &rec.polys_r[m];
    let mut s = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            s += fnorm(&pl.coeff(i)) * fnorm(&md.moments[i + j]) * fnorm(&pr.coeff(j));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;
    use crate::moments::{compute_moments, QuadratureConfig};
    use crate::types::{c64, eye, real_mat};
    use proptest::prelude::*;

    fn rec_for(name: &str, n: usize) -> (MomentData, RecurrenceData) {
        let md = compute_moments(&builtin(name).unwrap(), n + 1, &QuadratureConfig::default()).unwrap();
        let rec = gauss_borel(&md, n).unwrap();
        (md, rec)
    }

    #[test]
    fn hermite_coefficients() {
        let (_, rec) = rec_for("hermite-scalar", 11);
        for n in 0..=10 {
            assert!(rec.beta_l[n].norm() < 1e-12);
        }
        for n in 1..=11 {
            assert!((rec.gamma_l[n][(0, 0)].re - n as f64 / 2.0).abs() < 1e-9, "n={n}");
        }
        assert!(rec.residual < 1e-13);
    }

    #[test]
    fn laguerre_coefficients() {
        let a = 0.7;
        let (_, rec) = rec_for("laguerre-scalar(0.7)", 7);
        for n in 0..7 {
            assert!((rec.beta_l[n][(0, 0)].re - (2.0 * n as f64 + a + 1.0)).abs() < 1e-8);
        }
        for n in 1..=7 {
            let nf = n as f64;
            assert!((rec.gamma_l[n][(0, 0)].re - nf * (nf + a)).abs() < 1e-7 * nf * nf);
        }
    }

    #[test]
    fn chebyshev_first_polynomial() {
        let (md, rec) = rec_for("berezanskii-chebyshev", 4);
        let p1 = rec.polys_l[1].eval(c64(0.3, 0.0));
        let expect = real_mat(&[&[0.3, -0.5], &[-0.5, 0.3]]);
        assert!(fnorm(&(p1 - expect)) < 1e-13);
        let (l, r, c) = polynomials_via_linear_solve(&md, 3).unwrap();
        for k in 0..=3 {
            assert!(fnorm(&(l.coeff(k) - rec.polys_l[3].coeff(k))) < 1e-12);
            assert!(fnorm(&(r.coeff(k) - rec.polys_r[3].coeff(k))) < 1e-12);
        }
        assert!(fnorm(&(c - &rec.c[3])) < 1e-10 * fnorm(&rec.c[3]));
        for n in 0..=4 {
            for m in 0..=4 {
                assert!(biorthogonality_residual(&md, &rec, n, m).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn right_coefficients_from_right_polynomials() {
        let (_, rec) = rec_for("hermite-two-sided(0.5)", 5);
        for n in 0..5 {
            let from_r = rec.p1(Side::Right, n) - rec.p1(Side::Right, n + 1);
            assert!(fnorm(&(from_r - &rec.beta_r[n])) < 1e-10 * fnorm(&rec.beta_r[n]).max(1.0));
        }
    }

    #[test]
    fn c0_inverse_is_omega0() {
        let (md, rec) = rec_for("berezanskii-laguerre(0.5,1.5)", 3);
        assert!(fnorm(&(&rec.c_inv[0] - &md.moments[0])) == 0.0);
        let (_, _, c0) = polynomials_via_linear_solve(&md, 0).unwrap();
        assert!(fnorm(&(c0 * &md.moments[0] - eye(2))) < 1e-14);
    }

    #[test]
    fn non_regular_weight_rejected() {
        let md = MomentData::from_moments(vec![zeros(1); 5], Normalization::PlainDx).unwrap();
        assert!(matches!(gauss_borel(&md, 1), Err(MopError::Regularity { n: 0, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        // Scalar weight times a random positive definite constant matrix:
        // the recurrence decouples into the scalar one.
        #[test]
        fn block_scalar_decoupling(a in 0.2f64..2.0, b in -0.9f64..0.9, cc in 0.2f64..2.0) {
            let h = rec_for("hermite-scalar", 6).1;
            let k = real_mat(&[&[a, b * (a * cc).sqrt()], &[b * (a * cc).sqrt(), cc]]);
            let md0 = compute_moments(&builtin("hermite-scalar").unwrap(), 7, &QuadratureConfig::default()).unwrap();
            let moments: Vec<CMat> = md0.moments.iter().map(|m| &k * m[(0, 0)]).collect();
            let md = MomentData::from_moments(moments, Normalization::PlainDx).unwrap();
            let rec = gauss_borel(&md, 6).unwrap();
            for n in 1..=6 {
                let g = h.gamma_l[n][(0, 0)];
                prop_assert!(fnorm(&(&rec.gamma_l[n] - eye(2) * g)) < 1e-9);
            }
            for n in 0..6 {
                prop_assert!(fnorm(&rec.beta_l[n]) < 1e-9);
                let conj = &rec.c[n] * &rec.beta_l[n] * &rec.c_inv[n];
                prop_assert!(fnorm(&(conj - &rec.beta_r[n])) < 1e-10);
            }
        }
    }
}
