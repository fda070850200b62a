//! Polynomials, second-kind functions, the Riemann–Hilbert matrices `Y_n`
//! and the Christoffel–Darboux family of identities.

use serde::Serialize;

use crate::error::{MopError, Result};
use crate::factorization::RecurrenceData;
use crate::pipeline::{CauchyValues, Pipeline};
use crate::quad::extrapolate_to_zero;
use crate::types::{block2, c64, eye, fnorm, inverse, j_matrix, zeros, CMat, Side, C64};
use crate::weights::SupportKind;

/// `P_n(z)` by the three-term recurrence from `P_{-1} = 0`, `P_0 = I`.
pub fn eval_p(rec: &RecurrenceData, side: Side, n: usize, z: C64) -> Result<CMat> {
    if n > rec.n_max {
        return Err(MopError::Range(format!("degree {n} beyond factored range {}", rec.n_max)));
    }
    let d = rec.dim;
    let mut prev = zeros(d);
    let mut cur = eye(d);
    for k in 0..n {
        let next = match side {
            Side::Left => &cur * z - &rec.beta_l[k] * &cur - &rec.gamma_l[k] * &prev,
            Side::Right => &cur * z - &cur * &rec.beta_r[k] - &prev * &rec.gamma_r[k],
        };
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `m`-th derivative of `P_n` from its coefficients; zero for `n = -1`.
pub fn eval_p_derivative(rec: &RecurrenceData, side: Side, n: isize, order: usize, z: C64) -> CMat {
    if n < 0 {
        return zeros(rec.dim);
    }
    let mut p = rec.poly(side, n as usize).clone();
    for _ in 0..order {
        p = p.derivative();
    }
    p.eval(z)
}

/// `-sum_k omega_k z^{-k-1}` over the given moments, with the size of the
/// last term as a remainder indicator.
pub fn moment_series(moments: &[CMat], z: C64) -> (CMat, f64) {
    let d = moments[0].nrows();
    let mut acc = zeros(d);
    let inv = c64(1.0, 0.0) / z;
    let mut zk = inv;
    let mut last = 0.0;
    for m in moments {
        let term = m * zk;
        last = fnorm(&term);
        acc -= term;
        zk *= inv;
    }
    (acc, last)
}

/// `S(z) = scale * int omega(t) / (t - z) dt`, which is `Q_0`.
pub fn stieltjes_transform(p: &Pipeline, z: C64) -> Result<CMat> {
    Ok(p.cauchy_values(z, 0)?.q(Side::Left, 0, 0))
}

/// `Q_{-1} ..= Q_{n}` by forward recurrence from `Q_{-1} = -I`, `Q_0 = S`.
/// Element `k + 1` holds `Q_k`.
pub fn q_by_recurrence(rec: &RecurrenceData, side: Side, n: usize, s: &CMat, z: C64) -> Vec<CMat> {
    let d = rec.dim;
    let mut out = vec![-eye(d), s.clone()];
    for k in 0..n {
        // the n = 0 step uses C_0^{-1} C_{-1} with C_{-1} = I
        let g = if k == 0 { rec.c_inv[0].clone() } else { rec.gamma(side, k).clone() };
        let (cur, prev) = (&out[k + 1], &out[k]);
        let next = match side {
            Side::Left => cur * z - &rec.beta_l[k] * cur - &g * prev,
            Side::Right => cur * z - cur * &rec.beta_r[k] - prev * &g,
        };
        out.push(next);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct QValue {
    #[serde(skip)]
    pub direct: CMat,
    #[serde(skip)]
    pub recurrence: CMat,
    /// `||direct - recurrence|| / max(1, ||direct||)`.
    pub gap: f64,
}

/// `Q_n(z)` by direct Cauchy integral and by forward recurrence.
pub fn eval_q(p: &Pipeline, side: Side, n: isize, z: C64) -> Result<QValue> {
    if n < 0 {
        let m = -eye(p.dim());
        return Ok(QValue { direct: m.clone(), recurrence: m, gap: 0.0 });
    }
    p.check_n(n as usize, 0)?;
    let cv = p.cauchy_values(z, 0)?;
    let direct = cv.q(side, 0, n);
    let rec = q_by_recurrence(&p.rec, side, n as usize, &cv.q(side, 0, 0), z);
    let recurrence = rec[n as usize + 1].clone();
    let gap = fnorm(&(&direct - &recurrence)) / fnorm(&direct).max(1.0);
    Ok(QValue { direct, recurrence, gap })
}

/// Residual of `z Q_n - Q_{n+1} - beta_n Q_n - gamma_n Q_{n-1}` with every
/// term from direct Cauchy integrals, relative to `||Q_n||`.
pub fn q_recurrence_residual(p: &Pipeline, side: Side, n: usize, z: C64) -> Result<f64> {
    p.check_n(n, 1)?;
    let cv = p.cauchy_values(z, 0)?;
    let rec = &p.rec;
    let q = |k: isize| cv.q(side, 0, k);
    let g = if n == 0 { rec.c_inv[0].clone() } else { rec.gamma(side, n).clone() };
    let (qn, qm, qp) = (q(n as isize), q(n as isize - 1), q(n as isize + 1));
    let r = match side {
        Side::Left => &qn * z - &qp - &rec.beta_l[n] * &qn - &g * &qm,
        Side::Right => &qn * z - &qp - &qn * &rec.beta_r[n] - &qm * &g,
    };
    Ok(fnorm(&r) / fnorm(&qn).max(f64::MIN_POSITIVE))
}

#[derive(Clone, Debug, Serialize)]
pub struct AssociatedValue {
    #[serde(skip)]
    pub from_q: CMat,
    #[serde(skip)]
    pub from_moments: CMat,
    pub gap: f64,
}

/// Left associated polynomial `P^{(1)}_{n-1}` straight from the moments:
/// `-sum_j a_j sum_{i<j} z^i omega_{j-1-i}` for `P_n = sum_j a_j z^j`.
pub fn associated_from_moments(p: &Pipeline, n: usize, z: C64) -> CMat {
    let d = p.dim();
    let poly = p.rec.poly(Side::Left, n);
    let mut acc = zeros(d);
    for (j, a) in poly.coeffs().iter().enumerate() {
        let mut zi = c64(1.0, 0.0);
        for i in 0..j {
            acc -= a * &p.md.moments[j - 1 - i] * zi;
            zi *= z;
        }
    }
    acc
}

/// `P^{(1)}_{n-1}(z) = P_n(z) S(z) - Q_n(z)`, checked against the moment form.
pub fn first_kind_associated(p: &Pipeline, n: usize, z: C64) -> Result<AssociatedValue> {
    if n == 0 {
        return Err(MopError::Range("associated polynomials start at n = 1".into()));
    }
    p.check_n(n, 0)?;
    let cv = p.cauchy_values(z, 0)?;
    let pn = eval_p(&p.rec, Side::Left, n, z)?;
    let from_q = &pn * cv.q(Side::Left, 0, 0) - cv.q(Side::Left, 0, n as isize);
    let from_moments = associated_from_moments(p, n, z);
    let gap = fnorm(&(&from_q - &from_moments)) / fnorm(&from_moments).max(1.0);
    Ok(AssociatedValue { from_q, from_moments, gap })
}

/// Left and right transfer matrices `T_n(z)`.
pub fn transfer_matrices(rec: &RecurrenceData, n: usize, z: C64) -> (CMat, CMat) {
    let d = rec.dim;
    let zi = eye(d) * z;
    let (c, ci) = (&rec.c[n], &rec.c_inv[n]);
    let tl = block2(&(&zi - &rec.beta_l[n]), ci, &(-c), &zeros(d));
    let tr = block2(&(&zi - &rec.beta_r[n]), &(-c), ci, &zeros(d));
    (tl, tr)
}

/// `order`-th z-derivative of `Y_n` assembled from Cauchy data at its point.
/// Left: `[[P_n, Q_n], [-C_{n-1} P_{n-1}, -C_{n-1} Q_{n-1}]]`;
/// right: `[[P^R_n, -P^R_{n-1} C_{n-1}], [Q^R_n, -Q^R_{n-1} C_{n-1}]]`.
pub fn y_from_cauchy(p: &Pipeline, cv: &CauchyValues, side: Side, n: usize, order: usize) -> CMat {
    let rec = &p.rec;
    let z = cv.z;
    let ni = n as isize;
    let cm = rec.c_at(ni - 1);
    let pn = eval_p_derivative(rec, side, ni, order, z);
    let pm = eval_p_derivative(rec, side, ni - 1, order, z);
    let qn = cv.q(side, order, ni);
    let qm = cv.q(side, order, ni - 1);
    match side {
        Side::Left => block2(&pn, &qn, &(-&cm * &pm), &(-&cm * &qm)),
        Side::Right => block2(&pn, &(-&pm * &cm), &qn, &(-&qm * &cm)),
    }
}

#[derive(Clone, Debug)]
pub struct RHFrame {
    pub n: usize,
    pub z: C64,
    pub yl: CMat,
    pub yr: CMat,
    pub tl: CMat,
    pub tr: CMat,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameChecks {
    pub det_left: f64,
    pub det_right: f64,
    /// `||Y_{n+1} - T_n Y_n||` relative to `||Y_{n+1}||` (and the right analogue).
    pub transfer_left: f64,
    pub transfer_right: f64,
}

fn assemble_frame(p: &Pipeline, cv: &CauchyValues, n: usize) -> RHFrame {
    let (tl, tr) = transfer_matrices(&p.rec, n, cv.z);
    RHFrame {
        n,
        z: cv.z,
        yl: y_from_cauchy(p, cv, Side::Left, n, 0),
        yr: y_from_cauchy(p, cv, Side::Right, n, 0),
        tl,
        tr,
    }
}

/// Both `Y_n` matrices and transfer matrices at `z`.
pub fn assemble_y(p: &Pipeline, n: usize, z: C64) -> Result<RHFrame> {
    p.check_n(n, 0)?;
    let cv = p.cauchy_values(z, 0)?;
    Ok(assemble_frame(p, &cv, n))
}

fn frame_checks_from(p: &Pipeline, cv: &CauchyValues, n: usize) -> FrameChecks {
    let f = assemble_frame(p, cv, n);
    let next_l = y_from_cauchy(p, cv, Side::Left, n + 1, 0);
    let next_r = y_from_cauchy(p, cv, Side::Right, n + 1, 0);
    let one = c64(1.0, 0.0);
    FrameChecks {
        det_left: (f.yl.determinant() - one).norm(),
        det_right: (f.yr.determinant() - one).norm(),
        transfer_left: fnorm(&(&next_l - &f.tl * &f.yl)) / fnorm(&next_l).max(1.0),
        transfer_right: fnorm(&(&next_r - &f.yr * &f.tr)) / fnorm(&next_r).max(1.0),
    }
}

/// Determinant and transfer checks for `Y_n` at `z`.
pub fn frame_checks(p: &Pipeline, n: usize, z: C64) -> Result<FrameChecks> {
    p.check_n(n, 1)?;
    let cv = p.cauchy_values(z, 0)?;
    Ok(frame_checks_from(p, &cv, n))
}

/// Frame checks for every `n <= n_max` from one Cauchy evaluation.
pub fn frame_checks_all(p: &Pipeline, n_max: usize, z: C64) -> Result<Vec<FrameChecks>> {
    p.check_n(n_max, 1)?;
    let cv = p.cauchy_values(z, 0)?;
    Ok((0..=n_max).map(|n| frame_checks_from(p, &cv, n)).collect())
}

fn inverse_residual_from(p: &Pipeline, cv: &CauchyValues, n: usize) -> Result<f64> {
    let yl = y_from_cauchy(p, cv, Side::Left, n, 0);
    let yr = y_from_cauchy(p, cv, Side::Right, n, 0);
    let j = j_matrix(p.dim());
    let jinv = -&j;
    let rhs = &j * &yr * &jinv;
    let lhs = inverse(&yl, "Y_n")?;
    Ok(fnorm(&(&lhs - &rhs)) / fnorm(&rhs).max(1.0))
}

/// `||(Y^L_n)^{-1} - J Y^R_n J^{-1}||`, relative to the right side.
pub fn inverse_relation_residual(p: &Pipeline, n: usize, z: C64) -> Result<f64> {
    p.check_n(n, 0)?;
    let cv = p.cauchy_values(z, 0)?;
    inverse_residual_from(p, &cv, n)
}

/// Inverse-relation residuals for every `n <= n_max` from one Cauchy evaluation.
pub fn inverse_relation_residuals_all(p: &Pipeline, n_max: usize, z: C64) -> Result<Vec<f64>> {
    p.check_n(n_max, 0)?;
    let cv = p.cauchy_values(z, 0)?;
    (0..=n_max).map(|n| inverse_residual_from(p, &cv, n)).collect()
}

/// Residuals of the four Christoffel–Darboux identities
/// `(z - t) sum_{k<=n} A^R_k(t) C_k B^L_k(z) = A^R_n(t) C_n B^L_{n+1}(z) - A^R_{n+1}(t) C_n B^L_n(z) + c`
/// in the order PP, QQ, QP, PQ, where `c` is `0`, `S(z) - S(t)`, `I`, `-I`.
/// At `z = t` the confluent forms are checked instead.
pub fn christoffel_darboux_residuals(p: &Pipeline, n: usize, z: C64, t: C64) -> Result<[f64; 4]> {
    p.check_n(n, 1)?;
    let cz = p.cauchy_values(z, 0)?;
    let ct = if z == t { cz.clone() } else { p.cauchy_values(t, 0)? };
    Ok(cd_from(p, &cz, &ct, n))
}

/// Christoffel–Darboux residuals for every `n <= n_max` from two Cauchy
/// evaluations.
pub fn christoffel_darboux_all(p: &Pipeline, n_max: usize, z: C64, t: C64) -> Result<Vec<[f64; 4]>> {
    p.check_n(n_max, 1)?;
    let cz = p.cauchy_values(z, 0)?;
    let ct = if z == t { cz.clone() } else { p.cauchy_values(t, 0)? };
    Ok((0..=n_max).map(|n| cd_from(p, &cz, &ct, n)).collect())
}

fn cd_from(p: &Pipeline, cz: &CauchyValues, ct: &CauchyValues, n: usize) -> [f64; 4] {
    let rec = &p.rec;
    let d = p.dim();
    let (z, t) = (cz.z, ct.z);
    let pl = |k: usize| eval_p_derivative(rec, Side::Left, k as isize, 0, z);
    let pr = |k: usize| eval_p_derivative(rec, Side::Right, k as isize, 0, t);
    let ql = |k: usize| cz.q(Side::Left, 0, k as isize);
    let qr = |k: usize| ct.q(Side::Right, 0, k as isize);
    let s_diff = cz.q(Side::Left, 0, 0) - ct.q(Side::Left, 0, 0);
    let inhom = [zeros(d), s_diff, eye(d), -eye(d)];
    let mut out = [0.0; 4];
    for (idx, c) in inhom.iter().enumerate() {
        let a = |k: usize| if idx == 0 || idx == 3 { pr(k) } else { qr(k) };
        let b = |k: usize| if idx == 0 || idx == 2 { pl(k) } else { ql(k) };
        let mut scale = 0.0f64;
        let mut sum = zeros(d);
        for k in 0..=n {
            let term = a(k) * &rec.c[k] * b(k);
            scale = scale.max(fnorm(&term) * (z - t).norm());
            sum += term;
        }
        let lhs = sum * (z - t);
        let t1 = a(n) * &rec.c[n] * b(n + 1);
        let t2 = a(n + 1) * &rec.c[n] * b(n);
        scale = scale.max(fnorm(&t1)).max(fnorm(&t2)).max(fnorm(c)).max(1.0);
        out[idx] = fnorm(&(lhs - (t1 - t2 + c))) / scale;
    }
    out
}

/// Point at distance `eps` on the `+` (left of the orientation) or `-`
/// side of the support through `x`.
fn offset_point(p: &Pipeline, x: C64, eps: f64, plus: bool) -> C64 {
    let sgn = if plus { 1.0 } else { -1.0 };
    match p.spec.support.kind {
        SupportKind::Circle { center, radius } => {
            let inward = if p.spec.support.orientation == crate::weights::Orientation::Positive { 1.0 } else { -1.0 };
            center + (x - center) * (1.0 - sgn * inward * eps / radius)
        }
        _ => x + c64(0.0, sgn * eps),
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryValues {
    pub x: C64,
    /// `plus[side][n]` extrapolated boundary values of `Q_n`.
    pub plus: [Vec<CMat>; 2],
    pub minus: [Vec<CMat>; 2],
    /// Largest extrapolation error estimate over `n` and side.
    pub error: f64,
}

/// Boundary values `Q_n(x)_{+-}` for every `n` by evaluating on the
/// epsilon ladder and extrapolating to `eps = 0`.
pub fn boundary_values(p: &Pipeline, x: C64) -> Result<BoundaryValues> {
    let ladder = &p.cauchy.ladder;
    let mut pl = Vec::new();
    let mut mi = Vec::new();
    for &e in ladder {
        pl.push(p.cauchy_values(offset_point(p, x, e, true), 0)?);
        mi.push(p.cauchy_values(offset_point(p, x, e, false), 0)?);
    }
    let nq = p.rec.n_max + 1;
    let mut error = 0.0f64;
    let mut extrap = |vals: &[CauchyValues], side: Side| -> Vec<CMat> {
        (0..nq)
            .map(|n| {
                let seq: Vec<CMat> = vals.iter().map(|cv| cv.q(side, 0, n as isize)).collect();
                let (v, err) = extrapolate_to_zero(ladder, &seq);
                error = error.max(err);
                v
            })
            .collect()
    };
    let plus = [extrap(&pl, Side::Left), extrap(&pl, Side::Right)];
    let minus = [extrap(&mi, Side::Left), extrap(&mi, Side::Right)];
    Ok(BoundaryValues { x, plus, minus, error })
}

/// Weight on the support at `x`.
pub fn weight_on_support(p: &Pipeline, x: C64) -> Result<CMat> {
    if p.spec.support.is_real() {
        let (lo, hi) = p.spec.support.ends();
        let dlo = lo.map_or(f64::INFINITY, |l| x.re - l);
        let dhi = hi.map_or(f64::INFINITY, |h| h - x.re);
        p.spec.eval_on_support(x.re, dlo, dhi)
    } else {
        crate::weights::evaluate_weight(&p.spec, x)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JumpResidual {
    pub n: usize,
    pub residual: f64,
    pub extrapolation_error: f64,
}

/// `||(Q_n)_+ - (Q_n)_- - kappa P_n omega||` (left) and the right analogue
/// `kappa omega P^R_n`, at a support point, for every `n <= n_max`.
pub fn plemelj_residuals(p: &Pipeline, x: C64, n_max: usize) -> Result<Vec<[JumpResidual; 2]>> {
    p.check_n(n_max, 0)?;
    if !interior_point(p, x) {
        return Err(MopError::Boundary(format!("{x} is not interior to the support")));
    }
    let bv = boundary_values(p, x)?;
    let w = weight_on_support(p, x)?;
    let mut out = Vec::new();
    for n in 0..=n_max {
        let pl = eval_p(&p.rec, Side::Left, n, x)?;
        let pr = eval_p(&p.rec, Side::Right, n, x)?;
        let jl = &bv.plus[0][n] - &bv.minus[0][n] - &pl * &w * p.kappa;
        let jr = &bv.plus[1][n] - &bv.minus[1][n] - &w * &pr * p.kappa;
        out.push([
            JumpResidual { n, residual: fnorm(&jl), extrapolation_error: bv.error },
            JumpResidual { n, residual: fnorm(&jr), extrapolation_error: bv.error },
        ]);
    }
    Ok(out)
}

pub fn interior_point(p: &Pipeline, x: C64) -> bool {
    match p.spec.support.kind {
        SupportKind::Circle { center, radius } => ((x - center).norm() - radius).abs() < 1e-12 * radius.max(1.0),
        _ => x.im == 0.0 && p.spec.support.contains_interior(x.re),
    }
}

/// Expansion coefficients of the second-kind functions at infinity,
/// `Q^L_n = -C_n^{-1} z^{-n-1} (I + q1_l / z + q2_l / z^2 + ...)` and
/// `Q^R_n = -(I + q1_r / z + q2_r / z^2 + ...) C_n^{-1} z^{-n-1}`.
#[derive(Clone, Debug)]
pub struct QCoefficients {
    pub n: usize,
    pub q1_l: CMat,
    pub q2_l: CMat,
    pub q1_r: CMat,
    pub q2_r: CMat,
}

/// `q` coefficients from the moments: `q1_l = C_n int P_n omega t^{n+1}`
/// and so on.
pub fn q_coefficients(p: &Pipeline, n: usize) -> Result<QCoefficients> {
    let md = &p.md;
    if 2 * n + 2 > 2 * md.n_max {
        return Err(MopError::Ingredient(format!("moments up to {} needed for q at n = {n}", 2 * n + 2)));
    }
    p.check_n(n, 0)?;
    let rec = &p.rec;
    let d = p.dim();
    let proj = |side: Side, shift: usize| -> CMat {
        let mut acc = zeros(d);
        for (j, a) in rec.poly(side, n).coeffs().iter().enumerate() {
            let m = &md.moments[j + n + shift];
            acc += match side {
                Side::Left => a * m,
                Side::Right => m * a,
            };
        }
        acc
    };
    let c = &rec.c[n];
    Ok(QCoefficients {
        n,
        q1_l: c * proj(Side::Left, 1),
        q2_l: c * proj(Side::Left, 2),
        q1_r: proj(Side::Right, 1) * c,
        q2_r: proj(Side::Right, 2) * c,
    })
}

/// Ring fit of the `q` coefficients: samples `z^{n+1} C_n Q_n(z)` on
/// `|z| = radius` and reads off the Laurent coefficients by a discrete
/// Fourier sum. Also returns the size of the `z^{-3}` term on the ring.
pub fn fit_q_coefficients(p: &Pipeline, n: usize, radius: f64, samples: usize) -> Result<(QCoefficients, f64)> {
    p.check_n(n, 0)?;
    let d = p.dim();
    let c = &p.rec.c[n];
    let mut sums_l = vec![zeros(d); 4];
    let mut sums_r = vec![zeros(d); 4];
    for j in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / samples as f64;
        let z = C64::from_polar(radius, theta);
        let cv = p.cauchy_values(z, 0)?;
        let zn = z.powi(n as i32 + 1);
        let fl = -(c * cv.q(Side::Left, 0, n as isize)) * zn;
        let fr = -(cv.q(Side::Right, 0, n as isize) * c) * zn;
        let mut zk = c64(1.0, 0.0);
        for k in 0..4 {
            sums_l[k] += &fl * zk;
            sums_r[k] += &fr * zk;
            zk *= z;
        }
    }
    let inv = 1.0 / samples as f64;
    let tail = (fnorm(&sums_l[3]) + fnorm(&sums_r[3])) * inv / radius.powi(3);
    Ok((
        QCoefficients {
            n,
            q1_l: &sums_l[1] * c64(inv, 0.0),
            q2_l: &sums_l[2] * c64(inv, 0.0),
            q1_r: &sums_r[1] * c64(inv, 0.0),
            q2_r: &sums_r[2] * c64(inv, 0.0),
        },
        tail,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;
    use crate::moments::{compute_moments, QuadratureConfig};

    fn hermite(n: usize) -> Pipeline {
        Pipeline::with_defaults(builtin("hermite-scalar").unwrap(), n).unwrap()
    }

    #[test]
    fn monic_hermite_value() {
        let p = hermite(4);
        let v = eval_p(&p.rec, Side::Left, 3, c64(1.0, 0.0)).unwrap();
        assert!((v[(0, 0)] - c64(-0.5, 0.0)).norm() < 1e-12);
        let d = eval_p_derivative(&p.rec, Side::Left, 3, 0, c64(1.0, 0.0));
        assert!((d[(0, 0)] - v[(0, 0)]).norm() < 1e-12);
    }

    #[test]
    fn chebyshev_block_value() {
        let p = Pipeline::with_defaults(builtin("berezanskii-chebyshev").unwrap(), 3).unwrap();
        let v = eval_p(&p.rec, Side::Left, 2, c64(0.5, 0.0)).unwrap();
        let want = crate::types::real_mat(&[&[0.0, -0.25], &[-0.25, 0.0]]);
        assert!(fnorm(&(v - want)) < 1e-10);
    }

    #[test]
    fn stieltjes_matches_moment_series() {
        let spec = builtin("hermite-scalar").unwrap();
        let p = hermite(3);
        let z = c64(1.0, 3.0);
        let s = stieltjes_transform(&p, z).unwrap();
        let md = compute_moments(&spec, 30, &QuadratureConfig::default()).unwrap();
        let (series, last) = moment_series(&md.moments, c64(0.0, 6.0));
        let s6 = stieltjes_transform(&p, c64(0.0, 6.0)).unwrap();
        assert!(last < 1e-12);
        assert!(fnorm(&(s6 - series)) < 1e-10);
        // asymptotics z S -> -omega_0
        let big = c64(0.0, 1e3);
        let sb = stieltjes_transform(&p, big).unwrap() * big;
        assert!((sb[(0, 0)] + p.md.moments[0][(0, 0)]).norm() < 1e-5);
        assert!(s[(0, 0)].im > 0.0);
    }

    #[test]
    fn q_asymptotics_and_recurrence() {
        let p = hermite(4);
        let z = c64(0.0, 1e3);
        for n in 0..=4usize {
            let q = eval_q(&p, Side::Left, n as isize, z).unwrap();
            let lead = &p.rec.c[n] * &q.direct * z.powi(n as i32 + 1);
            assert!((lead[(0, 0)] + 1.0).norm() < 1e-4, "n={n}");
        }
        let zz = c64(0.7, 0.4);
        for n in 0..4 {
            assert!(q_recurrence_residual(&p, Side::Left, n, zz).unwrap() < 1e-8);
            assert!(q_recurrence_residual(&p, Side::Right, n, zz).unwrap() < 1e-8);
        }
        assert!(eval_q(&p, Side::Left, 3, c64(1.0, 1.0)).unwrap().gap < 1e-8);
    }

    #[test]
    fn associated_polynomial_forms_agree() {
        let p = Pipeline::with_defaults(builtin("berezanskii-laguerre").unwrap(), 4).unwrap();
        for n in 1..=4 {
            let a = first_kind_associated(&p, n, c64(-1.0, 0.8)).unwrap();
            assert!(a.gap < 1e-9, "n={n} gap={}", a.gap);
        }
    }

    #[test]
    fn y_frame_identities() {
        let p = hermite(6);
        let z = c64(2.0, 1.0);
        for (n, c) in frame_checks_all(&p, 6, z).unwrap().iter().enumerate() {
            assert!(c.det_left < 1e-8 && c.det_right < 1e-8, "n={n} {c:?}");
            assert!(c.transfer_left < 1e-10 && c.transfer_right < 1e-10, "n={n} {c:?}");
        }
        for r in inverse_relation_residuals_all(&p, 6, z).unwrap() {
            assert!(r < 1e-8);
        }
        let y0 = assemble_y(&p, 0, z).unwrap();
        assert!((y0.yl.determinant() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn christoffel_darboux_general_and_confluent() {
        let p = Pipeline::with_defaults(builtin("berezanskii-chebyshev").unwrap(), 5).unwrap();
        for r in christoffel_darboux_all(&p, 5, c64(0.3, 0.9), c64(-1.4, -0.5)).unwrap() {
            assert!(r.iter().all(|x| *x < 1e-9), "{r:?}");
        }
        for r in christoffel_darboux_all(&p, 5, c64(0.3, 0.9), c64(0.3, 0.9)).unwrap() {
            assert!(r.iter().all(|x| *x < 1e-9), "{r:?}");
        }
    }

    #[test]
    fn plemelj_jump_on_the_line() {
        let p = hermite(4);
        for r in plemelj_residuals(&p, c64(0.3, 0.0), 4).unwrap() {
            assert!(r[0].residual < 1e-5 && r[1].residual < 1e-5, "{:?}", r[0]);
        }
        assert!(plemelj_residuals(&p, c64(0.3, 0.2), 2).is_err());
    }

    #[test]
    fn q_coefficients_identities() {
        let p = Pipeline::with_defaults(builtin("berezanskii-jacobi").unwrap(), 4).unwrap();
        for n in 0..4 {
            let q = q_coefficients(&p, n).unwrap();
            let q1 = q_coefficients(&p, n).unwrap();
            assert!(fnorm(&(&q.q1_r + p.rec.p1(Side::Left, n + 1))) < 1e-9);
            assert!(fnorm(&(&q1.q1_l + p.rec.p1(Side::Right, n + 1))) < 1e-9);
        }
        let (fit, tail) = fit_q_coefficients(&p, 2, 4.0, 32).unwrap();
        let exact = q_coefficients(&p, 2).unwrap();
        assert!(tail < 1e-1);
        assert!(fnorm(&(fit.q1_l - exact.q1_l)) < 1e-7);
        assert!(fnorm(&(fit.q2_r - exact.q2_r)) < 1e-7);
    }

    #[test]
    fn proximity_is_refused() {
        let p = hermite(2);
        assert!(matches!(stieltjes_transform(&p, c64(0.2, 1e-5)), Err(MopError::Proximity { .. })));
    }
}
