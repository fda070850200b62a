//! Second-order differential relations for `Y_n` and their scalar and
//! Berezanskii reductions.

use serde::Serialize;

use crate::error::{MopError, Result};
use crate::evaluation::{eval_p_derivative, y_from_cauchy};
use crate::pipeline::Pipeline;
use crate::structure::{structure_matrix_semi, StructureMatrixClosedForm};
use crate::types::{block_diag, c64, fnorm, j_matrix, CMat, MatrixPolynomial, Side, C64};
use crate::weights::{mix, mixing_matrix, mixing_matrix_inverse, ScalarFamily, WeightSpec};

/// `N(F) = F' + F^2 / phi`.
pub fn n_operator(f: &CMat, df: &CMat, phi: C64) -> CMat {
    df + f * f / phi
}

fn h_poly(spec: &WeightSpec, side: Side) -> MatrixPolynomial {
    let d = spec.dim;
    let z = MatrixPolynomial::zero(d);
    let (a, b) = match side {
        Side::Left => (spec.h_l.clone(), spec.h_r.scale(c64(-1.0, 0.0))),
        Side::Right => (spec.h_r.clone(), spec.h_l.scale(c64(-1.0, 0.0))),
    };
    let deg = a.degree().max(b.degree());
    let coeffs = (0..=deg).map(|k| block_diag(&a.coeff(k), &b.coeff(k))).collect();
    MatrixPolynomial::new(coeffs).unwrap_or(z)
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondOrderReport {
    pub n: usize,
    pub left: f64,
    pub right: f64,
    /// Relative gap between the kernel `Y''` and a difference of kernel `Y'`.
    pub derivative_check: f64,
    pub method: &'static str,
}

/// Residuals of
/// `phi Y'' + Y' (2H + phi') + Y N(H) - N(Mt) Y` (left) and
/// `phi Y^R'' + (2H^R + phi') Y^R' + N(H^R) Y^R - Y^R N(Mt^R)` (right),
/// `Mt = phi M_n`, for every `n <= n_max`.
pub fn second_order_residual(p: &Pipeline, n_max: usize, z: C64) -> Result<Vec<SecondOrderReport>> {
    p.check_n(n_max, 1)?;
    let spec = &p.spec;
    if spec.phi_zero_distance(z) < 1e-8 {
        return Err(MopError::Evaluation(format!("phi vanishes at {z}")));
    }
    let cv = p.cauchy_values(z, 2)?;
    let phi = spec.phi.eval(z);
    let dphi = spec.phi.derivative().eval(z);
    let d2 = 2 * p.dim();
    let id = CMat::identity(d2, d2);
    let hl = h_poly(spec, Side::Left);
    let hr = h_poly(spec, Side::Right);
    let (h, dh) = (hl.eval(z), hl.derivative().eval(z));
    let (g, dg) = (hr.eval(z), hr.derivative().eval(z));
    let cf = StructureMatrixClosedForm::for_spec(spec).ok();
    // step for the derivative of the numeric structure matrix and the check
    let step = (p.support_distance(z).min(spec.phi_zero_distance(z)) / 8.0).min(0.01 * z.norm().max(1.0));
    let j = j_matrix(p.dim());
    let to_right = |m: &CMat| -(&j * m * (-&j));
    let mut out = Vec::new();
    let mut checked = None;
    for n in 0..=n_max {
        let (mt, dmt, method) = match &cf {
            Some(cf) => {
                let poly = cf.polynomial(p, n)?;
                (poly.eval(z), poly.derivative().eval(z), "closed-form")
            }
            None => {
                let m = structure_matrix_semi(p, &cv, Side::Left, n)?;
                let at = |w: C64| -> Result<CMat> { structure_matrix_semi(p, &p.cauchy_values(w, 1)?, Side::Left, n) };
                let hc = c64(step, 0.0);
                let dm = (at(z - hc * 2.0)? - at(z - hc)? * c64(8.0, 0.0) + at(z + hc)? * c64(8.0, 0.0) - at(z + hc * 2.0)?) / (hc * 12.0);
                (m, dm, "numeric")
            }
        };
        let y = y_from_cauchy(p, &cv, Side::Left, n, 0);
        let dy = y_from_cauchy(p, &cv, Side::Left, n, 1);
        let ddy = y_from_cauchy(p, &cv, Side::Left, n, 2);
        let nm = n_operator(&mt, &dmt, phi);
        let lhs = &ddy * phi + &dy * (&h * c64(2.0, 0.0) + &id * dphi) + &y * n_operator(&h, &dh, phi);
        let rhs = &nm * &y;
        let left = fnorm(&(&lhs - &rhs)) / fnorm(&lhs).max(fnorm(&rhs)).max(1.0);

        let yr = y_from_cauchy(p, &cv, Side::Right, n, 0);
        let dyr = y_from_cauchy(p, &cv, Side::Right, n, 1);
        let ddyr = y_from_cauchy(p, &cv, Side::Right, n, 2);
        let (mr, dmr) = (to_right(&mt), to_right(&dmt));
        let lhs_r = &ddyr * phi + (&g * c64(2.0, 0.0) + &id * dphi) * &dyr + n_operator(&g, &dg, phi) * &yr;
        let rhs_r = &yr * n_operator(&mr, &dmr, phi);
        let right = fnorm(&(&lhs_r - &rhs_r)) / fnorm(&lhs_r).max(fnorm(&rhs_r)).max(1.0);

        // one difference check per call, at the top degree
        let derivative_check = if n == n_max {
            let hc = c64(step, 0.0);
            let dyp = y_from_cauchy(p, &p.cauchy_values(z + hc, 1)?, Side::Left, n, 1);
            let dym = y_from_cauchy(p, &p.cauchy_values(z - hc, 1)?, Side::Left, n, 1);
            let fd = (dyp - dym) / (hc * 2.0);
            let g = fnorm(&(&fd - &ddy)) / fnorm(&ddy).max(1.0);
            checked = Some(g);
            g
        } else {
            checked.unwrap_or(0.0)
        };
        out.push(SecondOrderReport { n, left, right, derivative_check, method });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalFamily {
    Hermite,
    Laguerre { alpha: f64 },
    /// Weight `x^alpha (1-x)^beta` on `(0, 1)`.
    Jacobi { alpha: f64, beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OdeKind {
    P,
    Q,
}

impl ClassicalFamily {
    /// `(sigma, tau, lambda_n)` of `sigma y'' + tau y' + lambda y = 0`.
    pub fn coefficients(&self, n: usize) -> ([f64; 3], [f64; 2], f64) {
        let nf = n as f64;
        match *self {
            ClassicalFamily::Hermite => ([1.0, 0.0, 0.0], [0.0, -2.0], 2.0 * nf),
            ClassicalFamily::Laguerre { alpha } => ([0.0, 1.0, 0.0], [alpha + 1.0, -1.0], nf),
            ClassicalFamily::Jacobi { alpha, beta } => {
                ([0.0, 1.0, -1.0], [1.0 + alpha, -(alpha + beta + 2.0)], nf * (nf + alpha + beta + 1.0))
            }
        }
    }

    /// Coefficients for the given kind; the second-kind equation is
    /// `sigma q'' + (2 sigma' - tau) q' + (lambda + sigma'' - tau') q = 0`.
    pub fn ode(&self, kind: OdeKind, n: usize) -> ([f64; 3], [f64; 2], f64) {
        let (s, t, l) = self.coefficients(n);
        match kind {
            OdeKind::P => (s, t, l),
            OdeKind::Q => (s, [2.0 * s[1] - t[0], 4.0 * s[2] - t[1]], l + 2.0 * s[2] - t[1]),
        }
    }

    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        if spec.dim != 1 || !spec.hr_is_zero() {
            return Err(MopError::Ingredient("classical equations need a scalar one-sided weight".into()));
        }
        let h = |k: usize| spec.h_l.coeff(k)[(0, 0)].re;
        if spec.phi.same_as(&[1.0]) && h(0) == 0.0 && h(1) == -2.0 && spec.h_l.degree() == 1 {
            Ok(ClassicalFamily::Hermite)
        } else if spec.phi.same_as(&[0.0, 1.0]) && h(1) == -1.0 && spec.h_l.degree() == 1 {
            Ok(ClassicalFamily::Laguerre { alpha: h(0) })
        } else if spec.phi.same_as(&[0.0, 1.0, -1.0]) && spec.h_l.degree() <= 1 {
            let alpha = h(0);
            Ok(ClassicalFamily::Jacobi { alpha, beta: -h(1) - alpha })
        } else {
            Err(MopError::Ingredient(format!("`{}` is not a classical scalar weight", spec.name)))
        }
    }

    /// Monic polynomial coefficients from the explicit sum formulas,
    /// lowest degree first.
    pub fn monic_oracle(&self, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n + 1];
        match *self {
            ClassicalFamily::Hermite => {
                // H_n / 2^n = sum_m (-1)^m n! / (m! (n-2m)! 4^m) x^{n-2m}
                let mut t = 1.0;
                for m in 0..=n / 2 {
                    c[n - 2 * m] = t;
                    let k = (n - 2 * m) as f64;
                    t *= -k * (k - 1.0) / (4.0 * (m as f64 + 1.0));
                }
            }
            ClassicalFamily::Laguerre { alpha } => {
                // (-1)^n n! L_n^alpha, coefficient of x^k is
                // (-1)^{n-k} n!/k! * binom(n + alpha, n - k)
                for k in 0..=n {
                    // (k+1+alpha)...(n+alpha) * n! / (k! (n-k)!)
                    let v: f64 = (k + 1..=n).map(|i| i as f64 + alpha).product();
                    let mut binom = 1.0;
                    for i in 0..(n - k) {
                        binom *= (n - i) as f64 / (i + 1) as f64;
                    }
                    c[k] = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 } * v * binom;
                }
            }
            ClassicalFamily::Jacobi { alpha, beta } => {
                // 2F1(-n, n+alpha+beta+1; alpha+1; x), normalized to be monic
                let mut t = 1.0;
                for k in 0..=n {
                    c[k] = t;
                    let kf = k as f64;
                    t *= (kf - n as f64) * (n as f64 + alpha + beta + 1.0 + kf) / ((alpha + 1.0 + kf) * (kf + 1.0));
                }
                let lead = c[n];
                for v in &mut c {
                    *v /= lead;
                }
            }
        }
        c
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalReport {
    pub n: usize,
    pub kind: OdeKind,
    pub residual: f64,
    /// Largest coefficient gap between pipeline and oracle polynomial.
    pub oracle_gap: f64,
}

/// Residual of the classical scalar equation for `P_n` or `Q_n` at `z`,
/// with `Q` derivatives from differentiated Cauchy kernels.
pub fn classical_ode_residual(p: &Pipeline, family: ClassicalFamily, kind: OdeKind, n: usize, z: C64) -> Result<ClassicalReport> {
    p.check_n(n, 0)?;
    if p.dim() != 1 {
        return Err(MopError::Ingredient("classical equations are scalar".into()));
    }
    let (s, t, l) = family.ode(kind, n);
    let sigma = c64(s[0], 0.0) + z * s[1] + z * z * s[2];
    let tau = c64(t[0], 0.0) + z * t[1];
    let vals: Vec<C64> = match kind {
        OdeKind::P => (0..3).map(|o| eval_p_derivative(&p.rec, Side::Left, n as isize, o, z)[(0, 0)]).collect(),
        OdeKind::Q => {
            let cv = p.cauchy_values(z, 2)?;
            (0..3).map(|o| cv.q(Side::Left, o, n as isize)[(0, 0)]).collect()
        }
    };
    let terms = [sigma * vals[2], tau * vals[1], vals[0] * l];
    let scale = terms.iter().map(|x| x.norm()).fold(1e-300, f64::max);
    let residual = (terms[0] + terms[1] + terms[2]).norm() / scale.max(if kind == OdeKind::P { 1.0 } else { 1e-300 });
    let oracle = family.monic_oracle(n);
    let coeffs = p.rec.poly(Side::Left, n).coeffs();
    let oracle_gap = oracle
        .iter()
        .enumerate()
        .map(|(k, v)| (coeffs[k][(0, 0)] - v).norm() / v.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(ClassicalReport { n, kind, residual, oracle_gap })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BerezanskiiCase {
    Laguerre { alpha: f64, beta: f64 },
    Jacobi { alpha: f64, beta: f64 },
}

impl BerezanskiiCase {
    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        match spec.berezanskii {
            Some(b) => match (b.w1, b.w2) {
                (ScalarFamily::Laguerre { alpha }, ScalarFamily::Laguerre { alpha: beta }) => Ok(BerezanskiiCase::Laguerre { alpha, beta }),
                (ScalarFamily::Jacobi { a, b }, ScalarFamily::Jacobi { a: b2, b: a2 }) if a == a2 && b == b2 => {
                    Ok(BerezanskiiCase::Jacobi { alpha: a, beta: b })
                }
                _ => Err(MopError::Ingredient("Berezanskii equations cover Laguerre and swapped-Jacobi pairs".into())),
            },
            None => Err(MopError::Ingredient(format!("`{}` is not a Berezanskii weight", spec.name))),
        }
    }

    fn families(&self) -> (ClassicalFamily, ClassicalFamily) {
        match *self {
            BerezanskiiCase::Laguerre { alpha, beta } => (ClassicalFamily::Laguerre { alpha }, ClassicalFamily::Laguerre { alpha: beta }),
            BerezanskiiCase::Jacobi { alpha, beta } => {
                (ClassicalFamily::Jacobi { alpha, beta }, ClassicalFamily::Jacobi { alpha: beta, beta: alpha })
            }
        }
    }
}

/// Forms of the matrix equations that are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeVariant {
    /// Leading coefficient `z` and the displayed `Psi` matrices.
    Printed,
    /// Printed `Psi`, leading coefficient `phi`.
    PhiForm,
    /// `phi` with `Psi` rebuilt from the two scalar equations.
    Corrected,
    /// Laguerre `P` equation with the sign of the `Psi_1` term flipped.
    SignFlipped,
}

/// `(leading, Psi, constant, sign)` for `lead y'' + sign y' Psi + c y = 0`.
fn matrix_ode(case: BerezanskiiCase, kind: OdeKind, variant: OdeVariant, n: usize, z: C64) -> (C64, CMat, f64, f64) {
    let nf = n as f64;
    let half = |a: C64, b: C64| mix(a, b);
    match case {
        BerezanskiiCase::Laguerre { alpha, beta } => {
            let lead = z;
            match kind {
                OdeKind::P => {
                    // Psi_1 = 1/2 [[-a-b+2(z-1), b-a], [b-a, -a-b+2(z-1)]]
                    let psi = half(z - 1.0 - alpha, z - 1.0 - beta);
                    let sign = if variant == OdeVariant::SignFlipped { 1.0 } else { -1.0 };
                    (lead, psi, nf, sign)
                }
                OdeKind::Q => (lead, half(z + 1.0 - alpha, z + 1.0 - beta), nf + 1.0, 1.0),
            }
        }
        BerezanskiiCase::Jacobi { alpha, beta } => {
            let lead = if variant == OdeVariant::Printed { z } else { z * (1.0 - z) };
            match kind {
                OdeKind::P => {
                    let psi = if variant == OdeVariant::Corrected {
                        let s = alpha + beta + 2.0;
                        half(1.0 + alpha - z * s, 1.0 + beta - z * s)
                    } else {
                        half(z - 1.0 - alpha, z - 1.0 - beta)
                    };
                    (lead, psi, nf * (alpha + beta + nf + 1.0), 1.0)
                }
                OdeKind::Q => {
                    let s = alpha + beta - 2.0;
                    (lead, half(1.0 - alpha + z * s, 1.0 - beta + z * s), (nf + 1.0) * (alpha + beta + nf), 1.0)
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BerezanskiiReport {
    pub n: usize,
    pub kind: OdeKind,
    pub variant: OdeVariant,
    pub residual: f64,
}

/// Residual of the Berezanskii matrix equation for `P_n` or `Q_n`.
pub fn berezanskii_ode_residual(p: &Pipeline, kind: OdeKind, variant: OdeVariant, n: usize, z: C64) -> Result<BerezanskiiReport> {
    p.check_n(n, 0)?;
    let case = BerezanskiiCase::from_spec(&p.spec)?;
    let (lead, psi, c, sign) = matrix_ode(case, kind, variant, n, z);
    let v: Vec<CMat> = match kind {
        OdeKind::P => (0..3).map(|o| eval_p_derivative(&p.rec, Side::Left, n as isize, o, z)).collect(),
        OdeKind::Q => {
            let cv = p.cauchy_values(z, 2)?;
            (0..3).map(|o| cv.q(Side::Left, o, n as isize)).collect()
        }
    };
    let terms = [&v[2] * lead, &v[1] * &psi * c64(sign, 0.0), &v[0] * c64(c, 0.0)];
    let scale = terms.iter().map(fnorm).fold(1e-300, f64::max);
    let residual = fnorm(&(&terms[0] + &terms[1] + &terms[2])) / scale;
    Ok(BerezanskiiReport { n, kind, variant, residual })
}

/// All variants that apply to the weight's case, both kinds.
pub fn berezanskii_ode_report(p: &Pipeline, n: usize, z: C64) -> Result<Vec<BerezanskiiReport>> {
    let case = BerezanskiiCase::from_spec(&p.spec)?;
    let variants: &[(OdeKind, OdeVariant)] = match case {
        BerezanskiiCase::Laguerre { .. } => {
            &[(OdeKind::P, OdeVariant::Printed), (OdeKind::P, OdeVariant::SignFlipped), (OdeKind::Q, OdeVariant::Printed)]
        }
        BerezanskiiCase::Jacobi { .. } => &[
            (OdeKind::P, OdeVariant::Printed),
            (OdeKind::P, OdeVariant::PhiForm),
            (OdeKind::P, OdeVariant::Corrected),
            (OdeKind::Q, OdeVariant::Printed),
            (OdeKind::Q, OdeVariant::PhiForm),
        ],
    };
    variants.iter().map(|&(k, v)| berezanskii_ode_residual(p, k, v, n, z)).collect()
}

/// Conjugating `P_n` by the mixing matrix must give `diag(p^1_n, p^2_n)`
/// with each entry solving its scalar equation. Returns the largest of
/// the off-diagonal size and the two scalar residuals, all relative.
pub fn berezanskii_conjugation_residual(p: &Pipeline, n: usize, z: C64) -> Result<f64> {
    p.check_n(n, 0)?;
    let case = BerezanskiiCase::from_spec(&p.spec)?;
    let (f1, f2) = case.families();
    let (a, ai) = (mixing_matrix(), mixing_matrix_inverse());
    let d: Vec<CMat> = (0..3).map(|o| &ai * eval_p_derivative(&p.rec, Side::Left, n as isize, o, z) * &a).collect();
    let scale = fnorm(&d[0]).max(1.0);
    let off = (d[0][(0, 1)].norm() + d[0][(1, 0)].norm()) / scale;
    let scalar = |fam: ClassicalFamily, i: usize| -> f64 {
        let (s, t, l) = fam.coefficients(n);
        let sigma = c64(s[0], 0.0) + z * s[1] + z * z * s[2];
        let tau = c64(t[0], 0.0) + z * t[1];
        let terms = [sigma * d[2][(i, i)], tau * d[1][(i, i)], d[0][(i, i)] * l];
        let sc = terms.iter().map(|x| x.norm()).fold(1.0, f64::max);
        (terms[0] + terms[1] + terms[2]).norm() / sc
    };
    Ok(off.max(scalar(f1, 0)).max(scalar(f2, 1)))
}

/// Monic `U_n / 2^n`, zero for `n < 0`.
fn monic_u(n: isize, x: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let (mut a, mut b) = (1.0, x);
    if n == 0 {
        return a;
    }
    for _ in 1..n {
        (a, b) = (b, x * b - a / 4.0);
    }
    b
}

/// Closed form `2^{-n} [[U_n, -U_{n-1}], [-U_{n-1}, U_n]]` of the
/// Chebyshev Berezanskii polynomials.
pub fn chebyshev_block(n: usize, x: f64) -> CMat {
    let u = monic_u(n as isize, x);
    let v = monic_u(n as isize - 1, x) / 2.0;
    crate::types::real_mat(&[&[u, -v], &[-v, u]])
}

/// Largest entrywise gap between pipeline `P_n(x)` and [`chebyshev_block`]
/// over the points and `n <= n_max`.
pub fn chebyshev_block_gap(p: &Pipeline, n_max: usize, points: &[f64]) -> Result<f64> {
    p.check_n(n_max, 0)?;
    let mut gap: f64 = 0.0;
    for n in 0..=n_max {
        for &x in points {
            let v = eval_p_derivative(&p.rec, Side::Left, n as isize, 0, c64(x, 0.0));
            let d = v - chebyshev_block(n, x);
            gap = d.iter().map(|e| e.norm()).fold(gap, f64::max);
        }
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;

    fn pipe(name: &str, n: usize) -> Pipeline {
        Pipeline::with_defaults(builtin(name).unwrap(), n).unwrap()
    }

    #[test]
    fn chebyshev_closed_form() {
        let p = pipe("berezanskii-chebyshev", 8);
        let pts: Vec<f64> = (0..20).map(|i| -0.95 + 0.1 * i as f64).collect();
        assert!(chebyshev_block_gap(&p, 8, &pts).unwrap() < 1e-8);
        assert!(BerezanskiiCase::from_spec(&p.spec).is_err());
    }

    #[test]
    fn monic_oracles() {
        assert_eq!(ClassicalFamily::Hermite.monic_oracle(3), vec![0.0, -1.5, 0.0, 1.0]);
        assert_eq!(ClassicalFamily::Laguerre { alpha: 0.0 }.monic_oracle(2), vec![2.0, -4.0, 1.0]);
        let leg = ClassicalFamily::Jacobi { alpha: 0.0, beta: 0.0 }.monic_oracle(2);
        for (a, b) in leg.iter().zip([1.0 / 6.0, -1.0, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hermite_equations() {
        let p = pipe("hermite-scalar", 6);
        for n in 0..=6 {
            for kind in [OdeKind::P, OdeKind::Q] {
                let r = classical_ode_residual(&p, ClassicalFamily::Hermite, kind, n, c64(0.7, 0.6)).unwrap();
                assert!(r.residual < 1e-9 && r.oracle_gap < 1e-9, "{r:?}");
            }
        }
        let exact = classical_ode_residual(&p, ClassicalFamily::Hermite, OdeKind::P, 3, c64(0.7, 0.0)).unwrap();
        assert!(exact.residual < 1e-13);
    }

    #[test]
    fn laguerre_and_jacobi_equations() {
        for (name, fam, z) in [
            ("laguerre-scalar(0)", ClassicalFamily::Laguerre { alpha: 0.0 }, c64(1.3, 0.5)),
            ("laguerre-scalar(0.7)", ClassicalFamily::Laguerre { alpha: 0.7 }, c64(1.3, 0.5)),
            ("jacobi-scalar(0,0)", ClassicalFamily::Jacobi { alpha: 0.0, beta: 0.0 }, c64(0.4, 0.3)),
            ("jacobi-scalar(0.5,1.5)", ClassicalFamily::Jacobi { alpha: 0.5, beta: 1.5 }, c64(0.4, 0.3)),
        ] {
            let p = pipe(name, 6);
            assert_eq!(ClassicalFamily::from_spec(&p.spec).unwrap(), fam);
            for n in 0..=6 {
                for kind in [OdeKind::P, OdeKind::Q] {
                    let r = classical_ode_residual(&p, fam, kind, n, z).unwrap();
                    assert!(r.residual < 1e-9 && r.oracle_gap < 1e-8, "{name} {r:?}");
                }
            }
        }
    }

    #[test]
    fn second_order_relations() {
        for (name, z) in [("hermite-scalar", c64(0.5, 0.8)), ("hermite-nilpotent", c64(0.5, 0.8)), ("berezanskii-jacobi(0,1)", c64(0.3, 0.5))] {
            let p = pipe(name, 4);
            for r in second_order_residual(&p, 4, z).unwrap() {
                assert!(r.left < 1e-8 && r.right < 1e-8 && r.derivative_check < 1e-3, "{name} {r:?}");
            }
        }
        let p = pipe("berezanskii-chebyshev", 2);
        for r in second_order_residual(&p, 2, c64(0.2, 0.7)).unwrap() {
            assert!(r.left < 1e-6 && r.right < 1e-6 && r.method == "numeric", "{r:?}");
        }
    }

    #[test]
    fn berezanskii_variants() {
        let p = pipe("berezanskii-laguerre(0,1)", 3);
        let rep = berezanskii_ode_report(&p, 2, c64(1.1, 0.4)).unwrap();
        assert!(rep[0].residual < 1e-9 && rep[1].residual > 1e-3 && rep[2].residual < 1e-9, "{rep:?}");
        assert!(berezanskii_conjugation_residual(&p, 3, c64(1.1, 0.4)).unwrap() < 1e-9);
        let p = pipe("berezanskii-jacobi(0,1)", 3);
        let rep = berezanskii_ode_report(&p, 2, c64(0.3, 0.4)).unwrap();
        let get = |k, v| rep.iter().find(|r| r.kind == k && r.variant == v).unwrap().residual;
        assert!(get(OdeKind::P, OdeVariant::Printed) > 1e-3);
        assert!(get(OdeKind::P, OdeVariant::Corrected) < 1e-9);
        assert!(get(OdeKind::Q, OdeVariant::PhiForm) < 1e-9);
        assert!(get(OdeKind::Q, OdeVariant::Printed) > 1e-3);
        assert!(berezanskii_conjugation_residual(&p, 3, c64(0.3, 0.4)).unwrap() < 1e-9);
    }

    #[test]
    fn equal_parameters_decouple() {
        let p = pipe("berezanskii-laguerre(0.5,0.5)", 3);
        let m = berezanskii_ode_residual(&p, OdeKind::P, OdeVariant::Printed, 3, c64(0.9, 0.2)).unwrap().residual;
        assert!(m < 1e-10);
        let q = pipe("laguerre-scalar(0.5)", 3);
        let s = classical_ode_residual(&q, ClassicalFamily::Laguerre { alpha: 0.5 }, OdeKind::P, 3, c64(0.9, 0.2)).unwrap();
        assert!((m - s.residual).abs() < 1e-10);
    }
}
