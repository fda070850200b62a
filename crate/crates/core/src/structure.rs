//! Constant-jump matrices `Z_n`, structure matrices `M_n` and the
//! identities tying them to the recurrence.

use serde::Serialize;

use crate::error::{MopError, Result};
use crate::evaluation::{boundary_values, eval_p, interior_point, q_coefficients, transfer_matrices, weight_on_support, y_from_cauchy};
use crate::pipeline::{CauchyValues, Pipeline};
use crate::quad::extrapolate_to_zero;
use crate::types::{block2, block_diag, c64, comm, eye, fnorm, inverse, j_matrix, split2, upper_projector, zeros, CMat, MatrixPolynomial, Side, C64};
use crate::weights::{factor_weight, SupportKind, WeightClass, WeightSpec};

/// `Z^L_n = Y^L_n diag(omegaL, omegaR^{-1})` or
/// `Z^R_n = diag(omegaR, omegaL^{-1}) Y^R_n` from Cauchy data at `cv.z`.
pub fn z_from_cauchy(p: &Pipeline, cv: &CauchyValues, factors: &(CMat, CMat), side: Side, n: usize) -> Result<CMat> {
    let (wl, wr) = factors;
    let y = y_from_cauchy(p, cv, side, n, 0);
    Ok(match side {
        Side::Left => y * block_diag(wl, &inverse(wr, "right weight factor")?),
        Side::Right => block_diag(wr, &inverse(wl, "left weight factor")?) * y,
    })
}

pub fn assemble_z(p: &Pipeline, side: Side, n: usize, z: C64) -> Result<CMat> {
    p.check_n(n, 0)?;
    let cv = p.cauchy_values(z, 0)?;
    let f = factor_weight(&p.spec, z)?;
    z_from_cauchy(p, &cv, &f, side, n)
}

/// `||Z^R_n - J (Z^L_n)^{-1} J^{-1}||`, relative.
pub fn z_conjugation_residual(p: &Pipeline, n: usize, z: C64) -> Result<f64> {
    p.check_n(n, 0)?;
    let cv = p.cauchy_values(z, 0)?;
    let f = factor_weight(&p.spec, z)?;
    let zl = z_from_cauchy(p, &cv, &f, Side::Left, n)?;
    let zr = z_from_cauchy(p, &cv, &f, Side::Right, n)?;
    let j = j_matrix(p.dim());
    let rhs = &j * inverse(&zl, "Z_n")? * (-&j);
    Ok(fnorm(&(&zr - &rhs)) / fnorm(&zr).max(1.0))
}

/// Transfer identities `Z^L_{n+1} = T^L_n Z^L_n` and `Z^R_{n+1} = Z^R_n T^R_n`,
/// with the matching `Y_n` residuals for comparison.
#[derive(Clone, Debug, Serialize)]
pub struct TransferResidual {
    pub z_left: f64,
    pub z_right: f64,
    pub y_left: f64,
    pub y_right: f64,
}

pub fn transfer_identity_residual(p: &Pipeline, n: usize, z: C64) -> Result<TransferResidual> {
    p.check_n(n, 1)?;
    let cv = p.cauchy_values(z, 0)?;
    let f = factor_weight(&p.spec, z)?;
    let (tl, tr) = transfer_matrices(&p.rec, n, z);
    let rel = |a: &CMat, b: &CMat| fnorm(&(a - b)) / fnorm(a).max(1.0);
    let zl = z_from_cauchy(p, &cv, &f, Side::Left, n)?;
    let zl1 = z_from_cauchy(p, &cv, &f, Side::Left, n + 1)?;
    let zr = z_from_cauchy(p, &cv, &f, Side::Right, n)?;
    let zr1 = z_from_cauchy(p, &cv, &f, Side::Right, n + 1)?;
    let yl = y_from_cauchy(p, &cv, Side::Left, n, 0);
    let yl1 = y_from_cauchy(p, &cv, Side::Left, n + 1, 0);
    let yr = y_from_cauchy(p, &cv, Side::Right, n, 0);
    let yr1 = y_from_cauchy(p, &cv, Side::Right, n + 1, 0);
    Ok(TransferResidual {
        z_left: rel(&zl1, &(&tl * &zl)),
        z_right: rel(&zr1, &(&zr * &tr)),
        y_left: rel(&yl1, &(&tl * &yl)),
        y_right: rel(&yr1, &(&yr * &tr)),
    })
}

/// `diag(h, -h')` as used in the semi-analytic structure matrices.
fn h_blocks(spec: &WeightSpec, z: C64, side: Side) -> CMat {
    let (hl, hr) = (spec.h_l.eval(z), spec.h_r.eval(z));
    match side {
        Side::Left => block_diag(&hl, &(-hr)),
        Side::Right => block_diag(&hr, &(-hl)),
    }
}

/// `phi M_n` from exact derivatives of `Y_n`:
/// left `(phi Y' + Y H) Y^{-1}`, right `Y^{-1} (phi Y' + H^R Y)`.
pub fn structure_matrix_semi(p: &Pipeline, cv: &CauchyValues, side: Side, n: usize) -> Result<CMat> {
    let z = cv.z;
    let phi = p.spec.phi.eval(z);
    let y = y_from_cauchy(p, cv, side, n, 0);
    let dy = y_from_cauchy(p, cv, side, n, 1);
    let h = h_blocks(&p.spec, z, side);
    let yi = inverse(&y, "Y_n")?;
    Ok(match side {
        Side::Left => (dy * phi + &y * h) * yi,
        Side::Right => yi * (dy * phi + h * &y),
    })
}

/// Structure matrices by finite differences of `Z_n`.
#[derive(Clone, Debug)]
pub struct NumericStructure {
    pub z: C64,
    pub step: f64,
    /// `M^L_n = Z' Z^{-1}` for `n = 0 ..= rec.n_max`.
    pub left: Vec<CMat>,
    /// `M^R_n = Z^{-1} Z'`.
    pub right: Vec<CMat>,
    /// Largest relative change between the two step sizes.
    pub step_gap: f64,
}

/// Five-point central differences of `Z_n` at steps `h` and `h/2`, combined
/// by Richardson extrapolation.
pub fn structure_matrices_numeric(p: &Pipeline, z: C64, step: Option<f64>) -> Result<NumericStructure> {
    let dist = p.support_distance(z).min(p.spec.phi_zero_distance(z));
    let h = step.unwrap_or_else(|| (0.02 * z.norm().max(1.0)).min(dist / 4.0));
    if !(h > 0.0) || h * 2.0 >= dist {
        return Err(MopError::Evaluation(format!("difference step {h:e} reaches the support or a zero of phi near {z}")));
    }
    let nz = p.rec.n_max;
    let sample = |w: C64| -> Result<(Vec<CMat>, Vec<CMat>)> {
        let cv = p.cauchy_values(w, 0)?;
        let f = factor_weight(&p.spec, w)?;
        let l = (0..=nz).map(|n| z_from_cauchy(p, &cv, &f, Side::Left, n)).collect::<Result<Vec<_>>>()?;
        let r = (0..=nz).map(|n| z_from_cauchy(p, &cv, &f, Side::Right, n)).collect::<Result<Vec<_>>>()?;
        Ok((l, r))
    };
    let centre = sample(z)?;
    let deriv = |hh: f64| -> Result<(Vec<CMat>, Vec<CMat>)> {
        let hc = c64(hh, 0.0);
        let s: Vec<_> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| sample(z + hc * *k)).collect::<Result<Vec<_>>>()?;
        let d = |pick: &dyn Fn(&(Vec<CMat>, Vec<CMat>)) -> &Vec<CMat>, n: usize| -> CMat {
            (&pick(&s[0])[n] - &pick(&s[1])[n] * c64(8.0, 0.0) + &pick(&s[2])[n] * c64(8.0, 0.0) - &pick(&s[3])[n]) / (hc * 12.0)
        };
        Ok(((0..=nz).map(|n| d(&|x| &x.0, n)).collect(), (0..=nz).map(|n| d(&|x| &x.1, n)).collect()))
    };
    let (dl1, dr1) = deriv(h)?;
    let (dl2, dr2) = deriv(h / 2.0)?;
    let mut gap = 0.0f64;
    let mut left = Vec::new();
    let mut right = Vec::new();
    for n in 0..=nz {
        let rl = (&dl2[n] * c64(16.0, 0.0) - &dl1[n]) / c64(15.0, 0.0);
        let rr = (&dr2[n] * c64(16.0, 0.0) - &dr1[n]) / c64(15.0, 0.0);
        gap = gap.max(fnorm(&(&dl2[n] - &dl1[n])) / fnorm(&rl).max(1e-300));
        gap = gap.max(fnorm(&(&dr2[n] - &dr1[n])) / fnorm(&rr).max(1e-300));
        left.push(rl * inverse(&centre.0[n], "Z_n")?);
        right.push(inverse(&centre.1[n], "Z_n")? * rr);
    }
    Ok(NumericStructure { z, step: h, left, right, step_gap: gap })
}

/// `||M^R_n + J M^L_n J^{-1}||`, relative.
pub fn mn_conjugation_residual(ml: &CMat, mr: &CMat) -> f64 {
    let j = j_matrix(ml.nrows() / 2);
    let rhs = -(&j * ml * (-&j));
    fnorm(&(mr - &rhs)) / fnorm(mr).max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedFormClass {
    HermiteLinear,
    LaguerreLinear,
    JacobiLinear,
    HermiteQuadratic,
    LaguerreQuadratic,
    JacobiQuadratic,
}

impl ClosedFormClass {
    pub fn name(&self) -> &'static str {
        match self {
            ClosedFormClass::HermiteLinear => "hermite-linear",
            ClosedFormClass::LaguerreLinear => "laguerre-linear",
            ClosedFormClass::JacobiLinear => "jacobi-linear",
            ClosedFormClass::HermiteQuadratic => "hermite-quadratic",
            ClosedFormClass::LaguerreQuadratic => "laguerre-quadratic",
            ClosedFormClass::JacobiQuadratic => "jacobi-quadratic",
        }
    }

    fn is_quadratic(&self) -> bool {
        matches!(self, ClosedFormClass::HermiteQuadratic | ClosedFormClass::LaguerreQuadratic | ClosedFormClass::JacobiQuadratic)
    }
}

/// Closed-form `phi M_n` for a Pearson weight with polynomial coefficients.
#[derive(Clone, Debug)]
pub struct StructureMatrixClosedForm {
    pub class: ClosedFormClass,
    /// `hL = h0 + h1 z + h2 z^2`.
    pub h_l: [CMat; 3],
    /// `hR = h0 + h1 z`.
    pub h_r: [CMat; 2],
    /// Readings of ambiguous symbols applied by this form.
    pub resolutions: Vec<&'static str>,
}

enum PhiKind {
    One,
    Z,
    ZOneMinusZ,
}

fn phi_kind(spec: &WeightSpec) -> Option<PhiKind> {
    if spec.phi.same_as(&[1.0]) {
        Some(PhiKind::One)
    } else if spec.phi.same_as(&[0.0, 1.0]) {
        Some(PhiKind::Z)
    } else if spec.phi.same_as(&[0.0, 1.0, -1.0]) {
        Some(PhiKind::ZOneMinusZ)
    } else {
        None
    }
}

impl StructureMatrixClosedForm {
    /// Picks the form matching the weight class (or, for Berezanskii and
    /// custom weights, `phi` and the degree of `hL`).
    pub fn for_spec(spec: &WeightSpec) -> Result<Self> {
        use ClosedFormClass::*;
        let quad_hl = spec.h_l.degree() >= 2;
        let class = match spec.class {
            WeightClass::Hermite => HermiteLinear,
            WeightClass::Laguerre => LaguerreLinear,
            WeightClass::Jacobi => JacobiLinear,
            WeightClass::QuadraticHermite => HermiteQuadratic,
            WeightClass::QuadraticLaguerre => LaguerreQuadratic,
            WeightClass::QuadraticJacobi => JacobiQuadratic,
            WeightClass::Berezanskii | WeightClass::Custom => match (phi_kind(spec), quad_hl) {
                (Some(PhiKind::One), false) => HermiteLinear,
                (Some(PhiKind::One), true) => HermiteQuadratic,
                (Some(PhiKind::Z), false) => LaguerreLinear,
                (Some(PhiKind::Z), true) => LaguerreQuadratic,
                (Some(PhiKind::ZOneMinusZ), false) => JacobiLinear,
                (Some(PhiKind::ZOneMinusZ), true) => JacobiQuadratic,
                (None, _) => return Err(MopError::Ingredient(format!("no closed-form structure matrix for phi = {:?}", spec.phi.0))),
            },
        };
        let phi_ok = match class {
            HermiteLinear | HermiteQuadratic => matches!(phi_kind(spec), Some(PhiKind::One)),
            LaguerreLinear | LaguerreQuadratic => matches!(phi_kind(spec), Some(PhiKind::Z)),
            JacobiLinear | JacobiQuadratic => matches!(phi_kind(spec), Some(PhiKind::ZOneMinusZ)),
        };
        if !phi_ok {
            return Err(MopError::Ingredient(format!("{} form needs the matching phi", class.name())));
        }
        if spec.h_l.degree() > if class.is_quadratic() { 2 } else { 1 } || spec.h_r.degree() > 1 {
            return Err(MopError::Ingredient(format!("{} form: Pearson coefficients of too high degree", class.name())));
        }
        if class.is_quadratic() && !spec.hr_is_zero() {
            return Err(MopError::Ingredient(format!("{} form needs hR = 0", class.name())));
        }
        let resolutions = match class {
            HermiteQuadratic => vec!["constant term: bracket symbols beta, gamma read as mu, nu"],
            LaguerreQuadratic | JacobiQuadratic => vec!["21 block: trailing C_L read as h2", "n = 0: q coefficients of Q_{-1} taken as zero"],
            _ => Vec::new(),
        };
        Ok(StructureMatrixClosedForm {
            class,
            h_l: [spec.h_l.coeff(0), spec.h_l.coeff(1), spec.h_l.coeff(2)],
            h_r: [spec.h_r.coeff(0), spec.h_r.coeff(1)],
            resolutions,
        })
    }

    /// `phi M_n` as a matrix polynomial in `z`.
    pub fn polynomial(&self, p: &Pipeline, n: usize) -> Result<MatrixPolynomial> {
        use ClosedFormClass::*;
        p.check_n(n, 1)?;
        let d = p.dim();
        let rec = &p.rec;
        let ni = n as isize;
        let nf = c64(n as f64, 0.0);
        let id = eye(d);
        let ci = &rec.c_inv[n];
        // at n = 0 the lower row of Y_0 is [0, I] and every C_{n-1} term
        // drops out, matching gamma_0 = 0 rather than the gauge C_{-1} = I
        let cm = if n == 0 { zeros(d) } else { rec.c_at(ni - 1) };
        let pl = rec.p1(Side::Left, n);
        let pr = rec.p1(Side::Right, n);
        let pl2 = rec.p(Side::Left, 2, n);
        let plm = if n == 0 { zeros(d) } else { rec.p1(Side::Left, n - 1) };
        let [h0, h1, h2] = self.h_l.clone();
        let [r0, r1] = self.h_r.clone();
        // blocks as coefficient lists, lowest degree first
        let (b11, b12, b21, b22): (Vec<CMat>, Vec<CMat>, Vec<CMat>, Vec<CMat>) = match self.class {
            HermiteLinear | LaguerreLinear | JacobiLinear => {
                let (al, bl, ar, br) = (&h1, &h0, &r1, &r0);
                let k11 = bl + comm(&pl, al);
                let k12 = ci * ar + al * ci;
                let k21 = -(&cm * al) - ar * &cm;
                let k22 = -br + comm(&pr, ar);
                match self.class {
                    HermiteLinear => (vec![k11, al.clone()], vec![k12], vec![k21], vec![k22, -ar]),
                    LaguerreLinear => (vec![k11 + &id * nf, al.clone()], vec![k12], vec![k21], vec![k22 - &id * nf, -ar]),
                    _ => {
                        let two = |m: f64| c64(m, 0.0);
                        (
                            vec![k11 + &pl + &id * nf, al - &id * nf],
                            vec![k12 - ci * two(2.0 * n as f64 + 1.0)],
                            vec![k21 + &cm * two(2.0 * n as f64 - 1.0)],
                            vec![k22 - &pr - &id * nf, &id * nf - ar],
                        )
                    }
                }
            }
            HermiteQuadratic => {
                let (lam, mu, nu) = (&h0, &h1, &h2);
                let g = ci * &cm;
                let m2_11 = lam - comm(mu, &pl) - comm(nu, &pl2) + nu * &pl * &pl - &pl * nu * &pl + nu * &g;
                let m2_12 = (mu - comm(nu, &pl) + nu * &rec.beta_l[n]) * ci;
                let m2_21 = -(&cm * (mu + &plm * nu - nu * &pl));
                let m2_22 = -(&cm * nu * ci);
                (vec![m2_11, mu - comm(nu, &pl), nu.clone()], vec![m2_12, nu * ci], vec![m2_21, -(&cm * nu)], vec![m2_22])
            }
            LaguerreQuadratic | JacobiQuadratic => {
                let (qm1, qm2) = if n == 0 {
                    (zeros(d), zeros(d))
                } else {
                    let q = q_coefficients(p, n - 1)?;
                    (q.q1_r, q.q2_r)
                };
                let qn1 = q_coefficients(p, n)?.q1_r;
                let mut c11 = vec![
                    &h0 + &h1 * &qm1 + &pl * &h1 + &h2 * &qm2 + &pl2 * &h2 + &pl * &h2 * &qm1 + &id * nf,
                    &h1 + &h2 * &qm1 + &pl * &h2,
                    h2.clone(),
                ];
                let mut c12 = vec![(&h1 + &h2 * &qn1 + &pl * &h2) * ci, &h2 * ci];
                let mut c21 = vec![-(&cm * (&h1 + &h2 * &qm1 + &plm * &h2)), -(&cm * &h2)];
                let mut c22 = vec![-(&cm * &h2 * ci) - &id * nf];
                if self.class == JacobiQuadratic {
                    c11[0] += &pl;
                    c11[1] -= &id * nf;
                    c12[0] -= ci * c64(2.0 * n as f64 + 1.0, 0.0);
                    c21[0] += &cm * c64(2.0 * n as f64 - 1.0, 0.0);
                    c22[0] -= &pr;
                    c22.push(&id * nf);
                }
                (c11, c12, c21, c22)
            }
        };
        let deg = [b11.len(), b12.len(), b21.len(), b22.len()].into_iter().max().unwrap_or(1);
        let get = |v: &Vec<CMat>, k: usize| v.get(k).cloned().unwrap_or_else(|| zeros(d));
        let coeffs = (0..deg).map(|k| block2(&get(&b11, k), &get(&b12, k), &get(&b21, k), &get(&b22, k))).collect();
        MatrixPolynomial::new(coeffs)
    }

    pub fn eval(&self, p: &Pipeline, n: usize, z: C64) -> Result<CMat> {
        Ok(self.polynomial(p, n)?.eval(z))
    }
}

/// Comparison of the structure-matrix evaluations at one point.
#[derive(Clone, Debug, Serialize)]
pub struct StructureComparison {
    pub n: usize,
    /// `||closed - phi M_numeric|| / ||closed||`.
    pub closed_vs_numeric: f64,
    /// `||closed - semi|| / ||closed||`.
    pub closed_vs_semi: f64,
    /// Conjugation `M^R = -J M^L J^{-1}` on the semi-analytic matrices.
    pub conjugation: f64,
    /// The same on the finite-difference matrices.
    pub conjugation_numeric: f64,
    pub step_gap: f64,
}

/// Compares closed form, semi-analytic and finite-difference structure
/// matrices for every `n <= n_max` at `z`.
pub fn compare_structure(p: &Pipeline, cf: &StructureMatrixClosedForm, n_max: usize, z: C64) -> Result<Vec<StructureComparison>> {
    p.check_n(n_max, 1)?;
    let num = structure_matrices_numeric(p, z, None)?;
    let cv = p.cauchy_values(z, 1)?;
    let phi = p.spec.phi.eval(z);
    (0..=n_max)
        .map(|n| {
            let closed = cf.eval(p, n, z)?;
            let semi = structure_matrix_semi(p, &cv, Side::Left, n)?;
            let semi_r = structure_matrix_semi(p, &cv, Side::Right, n)?;
            let scale = fnorm(&closed).max(1e-300);
            Ok(StructureComparison {
                n,
                closed_vs_numeric: fnorm(&(&closed - &num.left[n] * phi)) / scale,
                closed_vs_semi: fnorm(&(&closed - &semi)) / scale,
                conjugation: mn_conjugation_residual(&semi, &semi_r),
                conjugation_numeric: mn_conjugation_residual(&num.left[n], &num.right[n]),
                step_gap: num.step_gap,
            })
        })
        .collect()
}

/// Zero-curvature residuals `phi diag(I, 0) - (Mt_{n+1} T_n - T_n Mt_n)` and
/// `phi diag(I, 0) - (T^R_n Mt^R_{n+1} - Mt^R_n T^R_n)`, relative to the
/// size of the products. `mt(n)` supplies `phi M^L_n`.
pub fn zero_curvature_residual(p: &Pipeline, n: usize, z: C64, mt: &dyn Fn(usize) -> Result<CMat>) -> Result<[f64; 2]> {
    p.check_n(n, 1)?;
    let d = p.dim();
    let phi = p.spec.phi.eval(z);
    let (tl, tr) = transfer_matrices(&p.rec, n, z);
    let (m0, m1) = (mt(n)?, mt(n + 1)?);
    let j = j_matrix(d);
    let right = |m: &CMat| -(&j * m * (-&j));
    let (r0, r1) = (right(&m0), right(&m1));
    let target = upper_projector(d) * phi;
    let (a, b) = (&m1 * &tl, &tl * &m0);
    let (c, e) = (&tr * &r1, &r0 * &tr);
    let scale_l = fnorm(&a).max(fnorm(&b)).max(1.0);
    let scale_r = fnorm(&c).max(fnorm(&e)).max(1.0);
    Ok([fnorm(&(&target - (a - b))) / scale_l, fnorm(&(&target - (c - e))) / scale_r])
}

/// Boundary values of `Y_n` at `x` (left side) from the extrapolated `Q`.
fn y_boundary(p: &Pipeline, q: &[CMat], side: Side, n: usize, x: C64) -> Result<CMat> {
    let rec = &p.rec;
    let ni = n as isize;
    let cm = rec.c_at(ni - 1);
    let pn = eval_p(rec, side, n, x)?;
    let pm = if n == 0 { zeros(p.dim()) } else { eval_p(rec, side, n - 1, x)? };
    let qm = if n == 0 { -eye(p.dim()) } else { q[n - 1].clone() };
    Ok(match side {
        Side::Left => block2(&pn, &q[n], &(-&cm * &pm), &(-&cm * &qm)),
        Side::Right => block2(&pn, &(-&pm * &cm), &q[n], &(-&qm * &cm)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct JumpReport {
    pub n: usize,
    /// `||Y_+ - Y_- [[I, kappa omega], [0, I]]||` relative.
    pub left: f64,
    /// `||Y^R_+ - [[I, 0], [kappa omega, I]] Y^R_-||` relative.
    pub right: f64,
    /// `|det Y_+ - det Y_-|`.
    pub det_gap: f64,
    pub extrapolation_error: f64,
}

/// Jump condition of `Y_n` at an interior support point, all `n <= n_max`.
pub fn rh_jump_residual(p: &Pipeline, x: C64, n_max: usize) -> Result<Vec<JumpReport>> {
    p.check_n(n_max, 0)?;
    if !interior_point(p, x) {
        return Err(MopError::Boundary(format!("{x} is not interior to the support")));
    }
    let bv = boundary_values(p, x)?;
    if !bv.error.is_finite() {
        return Err(MopError::Boundary("ladder extrapolation produced non-finite values".into()));
    }
    let d = p.dim();
    let w = weight_on_support(p, x)? * p.kappa;
    let jl = block2(&eye(d), &w, &zeros(d), &eye(d));
    let jr = block2(&eye(d), &zeros(d), &w, &eye(d));
    (0..=n_max)
        .map(|n| {
            let yp = y_boundary(p, &bv.plus[0], Side::Left, n, x)?;
            let ym = y_boundary(p, &bv.minus[0], Side::Left, n, x)?;
            let rp = y_boundary(p, &bv.plus[1], Side::Right, n, x)?;
            let rm = y_boundary(p, &bv.minus[1], Side::Right, n, x)?;
            Ok(JumpReport {
                n,
                left: fnorm(&(&yp - &ym * &jl)) / fnorm(&yp).max(1.0),
                right: fnorm(&(&rp - &jr * &rm)) / fnorm(&rp).max(1.0),
                det_gap: (yp.determinant() - ym.determinant()).norm(),
                extrapolation_error: bv.error,
            })
        })
        .collect()
}

/// Jump matrix `Z_-^{-1} Z_+` of `Z^L_n` at `x`, with boundary values of
/// both `Y_n` and the weight factors extrapolated along the ladder.
pub fn z_jump_matrix(p: &Pipeline, n: usize, x: C64) -> Result<(CMat, f64)> {
    p.check_n(n, 0)?;
    if !interior_point(p, x) {
        return Err(MopError::Boundary(format!("{x} is not interior to the support")));
    }
    let ladder = p.cauchy.ladder.clone();
    let mut zp = Vec::new();
    let mut zm = Vec::new();
    for &e in &ladder {
        for (plus, out) in [(true, &mut zp), (false, &mut zm)] {
            let w = match p.spec.support.kind {
                SupportKind::Circle { center, radius } => {
                    let s = if plus { -1.0 } else { 1.0 };
                    center + (x - center) * (1.0 + s * e / radius)
                }
                _ => x + c64(0.0, if plus { e } else { -e }),
            };
            let cv = p.cauchy_values(w, 0)?;
            let f = factor_weight(&p.spec, w)?;
            out.push(z_from_cauchy(p, &cv, &f, Side::Left, n)?);
        }
    }
    let (zplus, e1) = extrapolate_to_zero(&ladder, &zp);
    let (zminus, e2) = extrapolate_to_zero(&ladder, &zm);
    Ok((inverse(&zminus, "Z_-")? * zplus, e1 + e2))
}

/// Size of `(z - a) Q_n(z)` as `z` approaches a finite support endpoint `a`
/// from off the support, at distances `0.1, 0.03, 0.01, 0.003`.
pub fn endpoint_growth_probe(p: &Pipeline, n: usize, endpoint: f64) -> Result<Vec<(f64, f64)>> {
    p.check_n(n, 0)?;
    let (lo, hi) = p.spec.support.ends();
    let dir = if Some(endpoint) == lo {
        C64::from_polar(1.0, 0.75 * std::f64::consts::PI)
    } else if Some(endpoint) == hi {
        C64::from_polar(1.0, 0.25 * std::f64::consts::PI)
    } else {
        return Err(MopError::Range(format!("{endpoint} is not a finite support endpoint")));
    };
    [0.1, 0.03, 0.01, 0.003]
        .iter()
        .map(|&delta| {
            let z = c64(endpoint, 0.0) + dir * delta;
            let cv = p.cauchy_values(z, 0)?;
            let q = cv.q(Side::Left, 0, n as isize);
            Ok((delta, fnorm(&q) * delta))
        })
        .collect()
}

/// Residuals of the four first-order relations
/// `phi P' + P hL = L11 P - L12 C_{n-1} P_{n-1}`,
/// `phi Q' - Q hR = L11 Q - L12 C_{n-1} Q_{n-1}`,
/// `phi P^R' + hR P^R = -P^R L22 - P^R_{n-1} C_{n-1} L12`,
/// `phi Q^R' - hL Q^R = -Q^R L22 - Q^R_{n-1} C_{n-1} L12`,
/// with `L = phi M^L_n` from `mt`.
pub fn first_order_from(p: &Pipeline, cv: &CauchyValues, n: usize, mt: &CMat) -> [f64; 4] {
    let z = cv.z;
    let rec = &p.rec;
    let phi = p.spec.phi.eval(z);
    let (hl, hr) = (p.spec.h_l.eval(z), p.spec.h_r.eval(z));
    let [l11, l12, _l21, l22] = split2(mt);
    let ni = n as isize;
    let cm = rec.c_at(ni - 1);
    let pv = |side: Side, k: isize, o: usize| crate::evaluation::eval_p_derivative(rec, side, k, o, z);
    let qv = |side: Side, k: isize, o: usize| cv.q(side, o, k);
    let rel = |lhs: CMat, rhs: CMat, terms: &[&CMat]| -> f64 {
        let s = terms.iter().map(|t| fnorm(t)).fold(fnorm(&lhs).max(fnorm(&rhs)), f64::max).max(1.0);
        fnorm(&(lhs - rhs)) / s
    };
    let (p0, p1, dp) = (pv(Side::Left, ni, 0), pv(Side::Left, ni - 1, 0), pv(Side::Left, ni, 1));
    let r1 = rel(&dp * phi + &p0 * &hl, &l11 * &p0 - &l12 * &cm * &p1, &[&p0]);
    let (q0, q1, dq) = (qv(Side::Left, ni, 0), qv(Side::Left, ni - 1, 0), qv(Side::Left, ni, 1));
    let r2 = rel(&dq * phi - &q0 * &hr, &l11 * &q0 - &l12 * &cm * &q1, &[&q0]);
    let (s0, s1, ds) = (pv(Side::Right, ni, 0), pv(Side::Right, ni - 1, 0), pv(Side::Right, ni, 1));
    let r3 = rel(&ds * phi + &hr * &s0, -(&s0 * &l22) - &s1 * &cm * &l12, &[&s0]);
    let (t0, t1, dt) = (qv(Side::Right, ni, 0), qv(Side::Right, ni - 1, 0), qv(Side::Right, ni, 1));
    let r4 = rel(&dt * phi - &hl * &t0, -(&t0 * &l22) - &t1 * &cm * &l12, &[&t0]);
    [r1, r2, r3, r4]
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstOrderReport {
    pub n: usize,
    pub residuals: [f64; 4],
    /// Largest entry mismatch in `R22 = -L11, R21 = L12, R12 = L21, R11 = -L22`,
    /// with `R` the right structure matrix computed independently.
    pub entry_correspondence: f64,
    pub method: &'static str,
}

/// First-order relations for every `n <= n_max` at `z`, with the closed
/// form when available and the semi-analytic matrix otherwise.
pub fn first_order_structure_residuals(p: &Pipeline, n_max: usize, z: C64) -> Result<Vec<FirstOrderReport>> {
    p.check_n(n_max, 1)?;
    let cv = p.cauchy_values(z, 1)?;
    let cf = StructureMatrixClosedForm::for_spec(&p.spec).ok();
    (0..=n_max)
        .map(|n| {
            let (mt, method) = match &cf {
                Some(cf) => (cf.eval(p, n, z)?, "closed-form"),
                None => (structure_matrix_semi(p, &cv, Side::Left, n)?, "numeric"),
            };
            let residuals = first_order_from(p, &cv, n, &mt);
            let r = structure_matrix_semi(p, &cv, Side::Right, n)?;
            let [l11, l12, l21, l22] = split2(&mt);
            let [r11, r12, r21, r22] = split2(&r);
            let s = fnorm(&mt).max(1.0);
            let corr = [fnorm(&(&r22 + &l11)), fnorm(&(&r21 - &l12)), fnorm(&(&r12 - &l21)), fnorm(&(&r11 + &l22))]
                .into_iter()
                .fold(0.0, f64::max)
                / s;
            Ok(FirstOrderReport { n, residuals, entry_correspondence: corr, method })
        })
        .collect()
}

/// Gap between the extrapolated two-sided boundary values of the
/// semi-analytic `phi M_n` at `x`; zero for entire structure matrices.
pub fn structure_jump(p: &Pipeline, n: usize, x: C64) -> Result<(f64, f64)> {
    p.check_n(n, 0)?;
    let ladder = p.cauchy.ladder.clone();
    let mut up = Vec::new();
    let mut down = Vec::new();
    for &e in &ladder {
        up.push(structure_matrix_semi(p, &p.cauchy_values(x + c64(0.0, e), 1)?, Side::Left, n)?);
        down.push(structure_matrix_semi(p, &p.cauchy_values(x - c64(0.0, e), 1)?, Side::Left, n)?);
    }
    let (a, ea) = extrapolate_to_zero(&ladder, &up);
    let (b, eb) = extrapolate_to_zero(&ladder, &down);
    Ok((fnorm(&(&a - &b)) / fnorm(&a).max(1.0), (ea + eb) / fnorm(&a).max(1.0)))
}
