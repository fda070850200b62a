//! Quadrature primitives: Gauss rules by Golub–Welsch, tanh-sinh panels,
//! periodic trapezoid on circles, compensated sums, and extrapolation to zero.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{MopError, Result};
use crate::types::{fnorm, CMat, C64};

/// Nodes and weights of an m-point Gauss rule.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Builds the Gauss rule of the Jacobi matrix with diagonal `a`, off-diagonal
/// `b` (square roots of the recurrence coefficients) and total mass `mu0`.
///
/// Weights come from the Christoffel function rather than from eigenvector
/// components, which keeps the tiny tail weights accurate in relative terms.
pub fn golub_welsch(a: &[f64], b: &[f64], mu0: f64) -> GaussRule {
    let m = a.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = a[i];
        if i + 1 < m {
            t[(i, i + 1)] = b[i];
            t[(i + 1, i)] = b[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for x in nodes.iter_mut() {
        *x = newton_refine(*x, a, b);
    }
    let weights = nodes.iter().map(|&x| christoffel_weight(x, a, b, mu0)).collect();
    GaussRule { nodes, weights }
}

/// Polishes an eigenvalue as a root of the degree-m monic polynomial of
/// the recurrence, so small nodes keep full relative accuracy.
fn newton_refine(mut x: f64, a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    for _ in 0..3 {
        let (mut p_prev, mut p) = (0.0f64, 1.0f64);
        let (mut d_prev, mut d) = (0.0f64, 0.0f64);
        for k in 0..m {
            let b2 = if k == 0 { 0.0 } else { b[k - 1] * b[k - 1] };
            let p_next = (x - a[k]) * p - b2 * p_prev;
            let d_next = p + (x - a[k]) * d - b2 * d_prev;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
            let s = p.abs().max(d.abs());
            if s > 1e100 {
                p /= s;
                p_prev /= s;
                d /= s;
                d_prev /= s;
            }
        }
        if d == 0.0 || !d.is_finite() || !p.is_finite() {
            break;
        }
        let dx = p / d;
        x -= dx;
        if dx.abs() <= 1e-16 * x.abs() {
            break;
        }
    }
    x
}

fn christoffel_weight(x: f64, a: &[f64], b: &[f64], mu0: f64) -> f64 {
    let m = a.len();
    // Orthonormal recurrence with running rescale to avoid overflow far out.
    let mut log_scale = 0.0f64;
    let mut p_prev = 0.0f64;
    let mut p = 1.0 / mu0.sqrt();
    let mut sum = p * p;
    for k in 0..m - 1 {
        let prev_b = if k == 0 { 0.0 } else { b[k - 1] };
        let next = ((x - a[k]) * p - prev_b * p_prev) / b[k];
        p_prev = p;
        p = next;
        sum += p * p;
        if p.abs() > 1e100 {
            p *= 1e-100;
            p_prev *= 1e-100;
            sum *= 1e-200;
            log_scale += 200.0 * std::f64::consts::LN_10;
        }
    }
    (-(sum.ln() + log_scale)).exp()
}

/// Gauss rule for `exp(-s x^2)` on the real line.
pub fn gauss_hermite(m: usize, s: f64) -> GaussRule {
    let a = vec![0.0; m];
    let b: Vec<f64> = (1..m).map(|k| (k as f64 / (2.0 * s)).sqrt()).collect();
    let mut r = golub_welsch(&a, &b, (PI / s).sqrt());
    // exact symmetry about the origin
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let x = 0.5 * (r.nodes[j] - r.nodes[i]);
        let w = 0.5 * (r.weights[j] + r.weights[i]);
        r.nodes[i] = -x;
        r.nodes[j] = x;
        r.weights[i] = w;
        r.weights[j] = w;
    }
    if m % 2 == 1 {
        r.nodes[m / 2] = 0.0;
    }
    r
}

/// Gauss rule for `x^alpha exp(-x)` on the half line.
pub fn gauss_laguerre(m: usize, alpha: f64) -> GaussRule {
    let a: Vec<f64> = (0..m).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let b: Vec<f64> = (1..m).map(|k| (k as f64 * (k as f64 + alpha)).sqrt()).collect();
    golub_welsch(&a, &b, ln_gamma(alpha + 1.0).exp())
}

/// Gauss rule for `(x - lo)^pa (hi - x)^pb` on `(lo, hi)`.
pub fn gauss_jacobi(m: usize, pa: f64, pb: f64, lo: f64, hi: f64) -> GaussRule {
    // Standard form (1-t)^al (1+t)^be on [-1,1] with t = 2(x-lo)/(hi-lo) - 1.
    let (al, be) = (pb, pa);
    let s = al + be;
    let mut a = Vec::with_capacity(m);
    for k in 0..m {
        let kf = k as f64;
        let v = if k == 0 {
            (be - al) / (s + 2.0)
        } else {
            (be * be - al * al) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
        };
        a.push(v);
    }
    let mut b = Vec::with_capacity(m.saturating_sub(1));
    for k in 1..m {
        let kf = k as f64;
        let v = if k == 1 {
            4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + s).powi(2) * (3.0 + s))
        } else {
            4.0 * kf * (kf + al) * (kf + be) * (kf + s)
                / ((2.0 * kf + s).powi(2) * (2.0 * kf + s + 1.0) * (2.0 * kf + s - 1.0))
        };
        b.push(v.sqrt());
    }
    let ln_mu0 = (s + 1.0) * 2f64.ln() + ln_gamma(al + 1.0) + ln_gamma(be + 1.0) - ln_gamma(s + 2.0);
    let std = golub_welsch(&a, &b, ln_mu0.exp());
    let half = 0.5 * (hi - lo);
    let jac = half.powf(pa + pb + 1.0);
    GaussRule {
        nodes: std.nodes.iter().map(|t| lo + half * (t + 1.0)).collect(),
        weights: std.weights.iter().map(|w| w * jac).collect(),
    }
}

/// Compensated accumulator for a complex matrix.
#[derive(Clone, Debug)]
pub struct KahanMat {
    sum: CMat,
    comp: CMat,
}

impl KahanMat {
    pub fn new(rows: usize, cols: usize) -> Self {
        KahanMat { sum: CMat::zeros(rows, cols), comp: CMat::zeros(rows, cols) }
    }

    pub fn add_scaled(&mut self, x: &CMat, s: C64) {
        for ((sum, comp), v) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(x.iter()) {
            let y = v * s - *comp;
            let t = *sum + y;
            *comp = (t - *sum) - y;
            *sum = t;
        }
    }

    pub fn add(&mut self, x: &CMat) {
        self.add_scaled(x, C64::new(1.0, 0.0));
    }

    pub fn value(&self) -> CMat {
        self.sum.clone()
    }
}

/// A tanh-sinh node with its distances to both ends of the panel, computed
/// without cancellation.
#[derive(Clone, Copy, Debug)]
pub struct DeNode {
    pub x: f64,
    pub da: f64,
    pub db: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct DeConfig {
    pub tol: f64,
    pub min_level: usize,
    pub max_level: usize,
    pub t_max: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig { tol: 1e-14, min_level: 3, max_level: 10, t_max: 6.0 }
    }
}

/// Integrates a vector of matrix-valued functions over `[a, b]` by the
/// tanh-sinh rule, halving the step until successive levels agree.
/// Returns the integrals and the last level-to-level change.
pub fn tanh_sinh<F>(a: f64, b: f64, cfg: &DeConfig, mut f: F) -> Result<(Vec<CMat>, f64)>
where
    F: FnMut(DeNode) -> Vec<CMat>,
{
    let half = 0.5 * (b - a);
    let mut acc: Option<Vec<KahanMat>> = None;
    let mut prev: Option<Vec<CMat>> = None;
    let mut last_change = f64::INFINITY;
    let mut h = 1.0f64;
    for level in 0..=cfg.max_level {
        let jmax = (cfg.t_max / h).ceil() as i64;
        let mut j = -jmax;
        while j <= jmax {
            if level > 0 && j % 2 == 0 {
                j += 1;
                continue;
            }
            let t = j as f64 * h;
            j += 1;
            let s = FRAC_PI_2 * t.sinh();
            let cs = s.cosh();
            if !cs.is_finite() {
                continue;
            }
            let jac = FRAC_PI_2 * t.cosh() / (cs * cs);
            if jac == 0.0 {
                continue;
            }
            let da = half * 2.0 / (1.0 + (-2.0 * s).exp());
            let db = half * 2.0 / (1.0 + (2.0 * s).exp());
            if !(da > 0.0 && db > 0.0) {
                continue;
            }
            let x = if t < 0.0 { a + da } else { b - db };
            let vals = f(DeNode { x, da, db });
            let acc = acc.get_or_insert_with(|| vals.iter().map(|v| KahanMat::new(v.nrows(), v.ncols())).collect());
            let w = C64::new(half * jac, 0.0);
            for (k, v) in acc.iter_mut().zip(vals.iter()) {
                k.add_scaled(v, w);
            }
        }
        let est: Vec<CMat> = match &acc {
            Some(acc) => acc.iter().map(|k| k.value() * C64::new(h, 0.0)).collect(),
            None => return Ok((Vec::new(), 0.0)),
        };
        if let Some(p) = &prev {
            let change = est.iter().zip(p).map(|(x, y)| fnorm(&(x - y))).fold(0.0, f64::max);
            let scale = est.iter().map(fnorm).fold(0.0, f64::max);
            last_change = change;
            if level >= cfg.min_level && change <= cfg.tol * scale {
                return Ok((est, change));
            }
        }
        prev = Some(est);
        h *= 0.5;
    }
    let p = prev.unwrap_or_default();
    let scale = p.iter().map(fnorm).fold(0.0, f64::max);
    Err(MopError::Quadrature { what: format!("tanh-sinh on [{a}, {b}]"), last: scale, previous: last_change })
}

/// Periodic trapezoid rule over `theta` in `[0, 2 pi)`, doubling the node
/// count until successive estimates agree.
pub fn trapezoid_periodic<F>(start_nodes: usize, max_nodes: usize, tol: f64, mut f: F) -> Result<(Vec<CMat>, f64)>
where
    F: FnMut(f64) -> Vec<CMat>,
{
    let mut m = start_nodes.max(8);
    let mut prev: Option<Vec<CMat>> = None;
    loop {
        let mut acc: Option<Vec<KahanMat>> = None;
        let mut mass = 0.0f64;
        for k in 0..m {
            let theta = 2.0 * PI * k as f64 / m as f64;
            let vals = f(theta);
            mass += vals.iter().map(fnorm).fold(0.0, f64::max);
            let acc = acc.get_or_insert_with(|| vals.iter().map(|v| KahanMat::new(v.nrows(), v.ncols())).collect());
            for (a, v) in acc.iter_mut().zip(vals.iter()) {
                a.add(v);
            }
        }
        let w = C64::new(2.0 * PI / m as f64, 0.0);
        let est: Vec<CMat> = acc.unwrap_or_default().iter().map(|a| a.value() * w).collect();
        if let Some(p) = &prev {
            let change = est.iter().zip(p).map(|(x, y)| fnorm(&(x - y))).fold(0.0, f64::max);
            // Integrals that cancel to zero are judged against |f|.
            let scale = est.iter().map(fnorm).fold(mass * 2.0 * PI / m as f64, f64::max);
            if change <= tol * scale.max(1e-300) {
                return Ok((est, change));
            }
            if 2 * m > max_nodes {
                return Err(MopError::Quadrature { what: "periodic trapezoid".into(), last: scale, previous: change });
            }
        }
        prev = Some(est);
        m *= 2;
    }
}

/// Polynomial extrapolation to zero (Neville) of values sampled at the
/// abscissae `eps`. Returns the limit and the gap between the two highest
/// orders as an error estimate.
pub fn extrapolate_to_zero(eps: &[f64], vals: &[CMat]) -> (CMat, f64) {
    let m = vals.len();
    assert!(m >= 1 && eps.len() == m);
    // p[i] holds the interpolant through points i-j..=i evaluated at zero.
    let mut p: Vec<CMat> = vals.to_vec();
    let mut below = vals[m - 1].clone();
    for j in 1..m {
        below = p[m - 1].clone();
        for i in (j..m).rev() {
            let (xi, xl) = (eps[i], eps[i - j]);
            p[i] = (&p[i] * C64::new(-xl, 0.0) - &p[i - 1] * C64::new(-xi, 0.0)) / C64::new(xi - xl, 0.0);
        }
    }
    let err = if m >= 2 { fnorm(&(&p[m - 1] - &below)) } else { f64::INFINITY };
    (p[m - 1].clone(), err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn moment(rule: &GaussRule, k: i32) -> f64 {
        rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(k)).sum()
    }

    #[test]
    fn hermite_rule_moments() {
        let r = gauss_hermite(30, 1.0);
        for k in 0..40 {
            let exact = if k % 2 == 1 { 0.0 } else { gamma((k as f64 + 1.0) / 2.0) };
            let scale = gamma((k as f64 + 1.0) / 2.0);
            assert!((moment(&r, k) - exact).abs() <= 5e-13 * scale, "k={k}");
        }
    }

    #[test]
    fn laguerre_rule_moments() {
        let r = gauss_laguerre(25, 0.5);
        for k in 0..30 {
            let exact = gamma(k as f64 + 1.5);
            assert!((moment(&r, k) / exact - 1.0).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn jacobi_rule_moments() {
        // (x+1)^{1/2} (1-x)^{-1/2} on (-1, 1): mass pi.
        let r = gauss_jacobi(20, 0.5, -0.5, -1.0, 1.0);
        assert!((moment(&r, 0) - PI).abs() < 1e-13);
        assert!((moment(&r, 1) - PI / 2.0).abs() < 1e-13);
        // x^2 (1-x)^3 on (0,1): B(3+k, 4).
        let r = gauss_jacobi(12, 2.0, 3.0, 0.0, 1.0);
        for k in 0..10 {
            let exact = gamma(3.0 + k as f64) * gamma(4.0) / gamma(7.0 + k as f64);
            assert!((moment(&r, k) / exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // integral of (1-x)^{-1/2} over (0,1) is 2.
        let cfg = DeConfig::default();
        let (v, _) = tanh_sinh(0.0, 1.0, &cfg, |n| vec![CMat::from_element(1, 1, C64::new(n.db.powf(-0.5), 0.0))]).unwrap();
        assert!((v[0][(0, 0)].re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn tanh_sinh_near_pole() {
        // integral over (0,1) of 1/(x - i e) = log((1 - i e)/(-i e)).
        let e = 0.0125;
        let cfg = DeConfig::default();
        let (v, _) = tanh_sinh(0.0, 1.0, &cfg, |n| vec![CMat::from_element(1, 1, C64::new(1.0, 0.0) / C64::new(n.da, -e))]).unwrap();
        let exact = (C64::new(1.0, -e) / C64::new(0.0, -e)).ln();
        assert!((v[0][(0, 0)] - exact).norm() < 1e-12);
    }

    #[test]
    fn extrapolation_recovers_polynomial_limit() {
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let vals: Vec<CMat> = eps.iter().map(|e| CMat::from_element(1, 1, C64::new(3.0 + 2.0 * e - e * e + 0.5 * e * e * e, 0.0))).collect();
        let (lim, err) = extrapolate_to_zero(&eps, &vals);
        assert!((lim[(0, 0)].re - 3.0).abs() < 1e-12);
        // gap to the quadratic fit is the cubic term at the three smallest rungs
        assert!(err < 1e-4);
    }

    #[test]
    fn trapezoid_exact_on_circle() {
        // (1/2 pi) integral of e^{i theta} e^{e^{-i theta}} = 1.
        let (v, _) = trapezoid_periodic(16, 1 << 12, 1e-15, |t| {
            let z = C64::from_polar(1.0, t);
            vec![CMat::from_element(1, 1, z * (C64::new(1.0, 0.0) / z).exp() / (2.0 * PI))]
        })
        .unwrap();
        assert!((v[0][(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
