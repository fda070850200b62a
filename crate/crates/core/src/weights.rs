//! Weight matrices: supports, closed-form and Pearson-defined weights,
//! left/right factorization and the Berezanskii block construction.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::error::{MopError, Result};
use crate::types::{c64, eye, fnorm, inverse, real_mat, zeros, CMat, MatrixPolynomial, ScalarPoly, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportKind {
    RealLine,
    /// `(0, inf)`.
    HalfLine,
    Interval { a: f64, b: f64 },
    Circle { center: C64, radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportCurve {
    pub kind: SupportKind,
    pub orientation: Orientation,
    /// Fixed truncation radius for unbounded supports. `None` lets the
    /// quadrature pick one where the integrand has decayed below 1e-20.
    pub truncation: Option<f64>,
}

impl SupportCurve {
    pub fn real_line() -> Self {
        SupportCurve { kind: SupportKind::RealLine, orientation: Orientation::Positive, truncation: None }
    }

    pub fn half_line() -> Self {
        SupportCurve { kind: SupportKind::HalfLine, orientation: Orientation::Positive, truncation: None }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        SupportCurve { kind: SupportKind::Interval { a, b }, orientation: Orientation::Positive, truncation: None }
    }

    pub fn circle(center: C64, radius: f64, orientation: Orientation) -> Self {
        SupportCurve { kind: SupportKind::Circle { center, radius }, orientation, truncation: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SupportKind::Interval { a, b } if !(a < b) => Err(MopError::Spec(format!("interval support needs a < b, got ({a}, {b})"))),
            SupportKind::Circle { radius, .. } if !(radius > 0.0) => Err(MopError::Spec("circle support needs radius > 0".into())),
            _ => match self.truncation {
                Some(r) if !(r > 0.0) => Err(MopError::Spec("truncation radius must be positive".into())),
                _ => Ok(()),
            },
        }
    }

    pub fn is_real(&self) -> bool {
        !matches!(self.kind, SupportKind::Circle { .. })
    }

    /// Finite lower and upper ends of a real support (`None` when unbounded).
    pub fn ends(&self) -> (Option<f64>, Option<f64>) {
        match self.kind {
            SupportKind::RealLine => (None, None),
            SupportKind::HalfLine => (Some(0.0), None),
            SupportKind::Interval { a, b } => (Some(a), Some(b)),
            SupportKind::Circle { .. } => (None, None),
        }
    }

    /// Distance from `z` to the support curve.
    pub fn distance(&self, z: C64) -> f64 {
        match self.kind {
            SupportKind::Circle { center, radius } => ((z - center).norm() - radius).abs(),
            _ => {
                let (lo, hi) = self.ends();
                let x = z.re;
                let dx = match (lo, hi) {
                    (Some(l), _) if x < l => l - x,
                    (_, Some(h)) if x > h => x - h,
                    _ => 0.0,
                };
                (dx * dx + z.im * z.im).sqrt()
            }
        }
    }

    /// True when `x` lies strictly inside a real support.
    pub fn contains_interior(&self, x: f64) -> bool {
        let (lo, hi) = self.ends();
        self.is_real() && lo.is_none_or(|l| x > l) && hi.is_none_or(|h| x < h)
    }
}

/// `w^p` with the cut along the positive real axis, `arg w` in `[0, 2 pi)`.
fn pow_cut_positive(w: C64, p: f64) -> Result<C64> {
    if w.norm() == 0.0 {
        return power_at_zero(w, p);
    }
    let mut arg = w.im.atan2(w.re);
    if arg < 0.0 {
        arg += 2.0 * PI;
    }
    Ok((C64::new(w.norm().ln(), arg) * p).exp())
}

/// Principal `w^p`.
fn pow_principal(w: C64, p: f64) -> Result<C64> {
    if w.norm() == 0.0 {
        return power_at_zero(w, p);
    }
    Ok((w.ln() * p).exp())
}

fn power_at_zero(w: C64, p: f64) -> Result<C64> {
    if p > 0.0 {
        Ok(C64::new(0.0, 0.0))
    } else if p == 0.0 {
        Ok(C64::new(1.0, 0.0))
    } else {
        Err(MopError::EndpointSingularity(w))
    }
}

/// Scalar base factor of a closed-form weight term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseWeight {
    /// `exp(-s x^2)` on the real line.
    Gaussian { s: f64 },
    /// `x^alpha exp(-x)` on the half line.
    Laguerre { alpha: f64 },
    /// `(x - lo)^a (hi - x)^b` on `(lo, hi)`.
    Jacobi { a: f64, b: f64, lo: f64, hi: f64 },
    /// Constant 1; used on circles and bounded intervals.
    Unit,
}

impl BaseWeight {
    pub fn eval(&self, z: C64) -> Result<C64> {
        match *self {
            BaseWeight::Gaussian { s } => Ok((-z * z * s).exp()),
            BaseWeight::Laguerre { alpha } => Ok(pow_cut_positive(z, alpha)? * (-z).exp()),
            BaseWeight::Jacobi { a, b, lo, hi } => {
                Ok(pow_cut_positive(z - lo, a)? * pow_principal(c64(hi, 0.0) - z, b)?)
            }
            BaseWeight::Unit => Ok(C64::new(1.0, 0.0)),
        }
    }

    /// Value on the support at `x`, with `dlo = x - lo` and `dhi = hi - x`
    /// supplied accurately by the caller.
    pub fn eval_real(&self, x: f64, dlo: f64, dhi: f64) -> f64 {
        match *self {
            BaseWeight::Gaussian { s } => (-s * x * x).exp(),
            BaseWeight::Laguerre { alpha } => dlo.powf(alpha) * (-x).exp(),
            BaseWeight::Jacobi { a, b, .. } => dlo.powf(a) * dhi.powf(b),
            BaseWeight::Unit => 1.0,
        }
    }

    /// Nominal support of the base.
    pub fn support(&self) -> Option<SupportKind> {
        match *self {
            BaseWeight::Gaussian { .. } => Some(SupportKind::RealLine),
            BaseWeight::Laguerre { .. } => Some(SupportKind::HalfLine),
            BaseWeight::Jacobi { lo, hi, .. } => Some(SupportKind::Interval { a: lo, b: hi }),
            BaseWeight::Unit => None,
        }
    }
}

pub type AnalyticFn = Arc<dyn Fn(C64) -> CMat + Send + Sync>;

/// Matrix factor multiplying a base weight.
#[derive(Clone)]
pub enum Factor {
    Poly(MatrixPolynomial),
    Analytic(AnalyticFn),
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Poly(p) => write!(f, "Poly(degree {})", p.degree()),
            Factor::Analytic(_) => write!(f, "Analytic"),
        }
    }
}

impl Factor {
    pub fn eval(&self, z: C64) -> CMat {
        match self {
            Factor::Poly(p) => p.eval(z),
            Factor::Analytic(f) => f(z),
        }
    }

    pub fn poly_degree(&self) -> Option<usize> {
        match self {
            Factor::Poly(p) => Some(p.degree()),
            Factor::Analytic(_) => None,
        }
    }
}

/// One term `base(x) F(x)` of a closed-form weight.
#[derive(Clone, Debug)]
pub struct WeightTerm {
    pub base: BaseWeight,
    pub factor: Factor,
}

#[derive(Clone, Debug)]
pub enum WeightForm {
    /// Sum of base-times-factor terms.
    Closed(Vec<WeightTerm>),
    /// Defined only through the Pearson equation and the anchor value.
    Pearson(PearsonCache),
}

/// Weight values at grid points of a real support, continued from the
/// anchor once and reused as starting points for nearby evaluations.
#[derive(Clone, Default)]
pub struct PearsonCache(Arc<Mutex<BTreeMap<i64, CMat>>>);

impl fmt::Debug for PearsonCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PearsonCache")
    }
}

const CHECKPOINT_STEP: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightClass {
    Hermite,
    Laguerre,
    Jacobi,
    QuadraticHermite,
    QuadraticLaguerre,
    QuadraticJacobi,
    Berezanskii,
    Custom,
}

/// Value `omega(z0)` at an interior anchor point.
#[derive(Clone, Debug)]
pub struct Anchor {
    pub z0: C64,
    pub value: CMat,
}

/// Scalar weight families usable in a Berezanskii construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarFamily {
    /// `exp(-x^2)`.
    Gaussian,
    /// `x^alpha exp(-x)`.
    Laguerre { alpha: f64 },
    /// `x^a (1-x)^b` on `(0, 1)`.
    Jacobi { a: f64, b: f64 },
    /// `sqrt((1+x)/(1-x))` on `(-1, 1)`.
    ChebyshevPlus,
    /// `sqrt((1-x)/(1+x))` on `(-1, 1)`.
    ChebyshevMinus,
}

impl ScalarFamily {
    pub fn base(&self) -> BaseWeight {
        match *self {
            ScalarFamily::Gaussian => BaseWeight::Gaussian { s: 1.0 },
            ScalarFamily::Laguerre { alpha } => BaseWeight::Laguerre { alpha },
            ScalarFamily::Jacobi { a, b } => BaseWeight::Jacobi { a, b, lo: 0.0, hi: 1.0 },
            ScalarFamily::ChebyshevPlus => BaseWeight::Jacobi { a: 0.5, b: -0.5, lo: -1.0, hi: 1.0 },
            ScalarFamily::ChebyshevMinus => BaseWeight::Jacobi { a: -0.5, b: 0.5, lo: -1.0, hi: 1.0 },
        }
    }

    pub fn support(&self) -> SupportCurve {
        match *self {
            ScalarFamily::Gaussian => SupportCurve::real_line(),
            ScalarFamily::Laguerre { .. } => SupportCurve::half_line(),
            ScalarFamily::Jacobi { .. } => SupportCurve::interval(0.0, 1.0),
            ScalarFamily::ChebyshevPlus | ScalarFamily::ChebyshevMinus => SupportCurve::interval(-1.0, 1.0),
        }
    }

    /// Scalar Pearson pair `(phi, h)` with `phi w' = h w`.
    pub fn pearson(&self) -> (ScalarPoly, [f64; 2]) {
        match *self {
            ScalarFamily::Gaussian => (ScalarPoly::one(), [0.0, -2.0]),
            ScalarFamily::Laguerre { alpha } => (ScalarPoly::from_real(&[0.0, 1.0]), [alpha, -1.0]),
            ScalarFamily::Jacobi { a, b } => (ScalarPoly::from_real(&[0.0, 1.0, -1.0]), [a, -(a + b)]),
            ScalarFamily::ChebyshevPlus => (ScalarPoly::from_real(&[1.0, 0.0, -1.0]), [1.0, 0.0]),
            ScalarFamily::ChebyshevMinus => (ScalarPoly::from_real(&[1.0, 0.0, -1.0]), [-1.0, 0.0]),
        }
    }

    /// An interior point of the support.
    pub fn anchor(&self) -> f64 {
        match *self {
            ScalarFamily::Gaussian => 0.0,
            ScalarFamily::Laguerre { .. } => 1.0,
            ScalarFamily::Jacobi { .. } => 0.5,
            ScalarFamily::ChebyshevPlus | ScalarFamily::ChebyshevMinus => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerezanskiiSpec {
    pub w1: ScalarFamily,
    pub w2: ScalarFamily,
}

/// An N×N weight matrix with its Pearson data.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub name: String,
    pub dim: usize,
    pub support: SupportCurve,
    pub phi: ScalarPoly,
    pub h_l: MatrixPolynomial,
    pub h_r: MatrixPolynomial,
    pub class: WeightClass,
    pub anchor: Anchor,
    pub form: WeightForm,
    pub berezanskii: Option<BerezanskiiSpec>,
}

/// The mixing matrix `alpha = [[1, -1], [1, 1]]`.
pub fn mixing_matrix() -> CMat {
    real_mat(&[&[1.0, -1.0], &[1.0, 1.0]])
}

pub fn mixing_matrix_inverse() -> CMat {
    real_mat(&[&[0.5, 0.5], &[-0.5, 0.5]])
}

/// `alpha diag(a, b) alpha^{-1}`.
pub fn mix(a: C64, b: C64) -> CMat {
    let s = (a + b) * 0.5;
    let d = (a - b) * 0.5;
    CMat::from_row_slice(2, 2, &[s, d, d, s])
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        self.support.validate()?;
        if self.dim == 0 {
            return Err(MopError::Spec("N must be positive".into()));
        }
        if self.h_l.dim() != self.dim || self.h_r.dim() != self.dim {
            return Err(MopError::Spec("hL and hR must be N×N".into()));
        }
        if self.phi.degree() > 2 {
            return Err(MopError::Spec("phi must have degree at most 2".into()));
        }
        if self.h_l.degree() > 2 || self.h_r.degree() > 2 {
            return Err(MopError::Spec("hL and hR must have degree at most 2".into()));
        }
        let phi_ok = match self.class {
            WeightClass::Hermite | WeightClass::QuadraticHermite => self.phi.same_as(&[1.0]),
            WeightClass::Laguerre | WeightClass::QuadraticLaguerre => self.phi.same_as(&[0.0, 1.0]),
            WeightClass::Jacobi | WeightClass::QuadraticJacobi => self.phi.same_as(&[0.0, 1.0, -1.0]),
            WeightClass::Berezanskii | WeightClass::Custom => true,
        };
        if !phi_ok {
            return Err(MopError::Spec(format!("phi does not match the {:?} class", self.class)));
        }
        if matches!(self.class, WeightClass::Hermite | WeightClass::Laguerre | WeightClass::Jacobi)
            && (self.h_l.degree() > 1 || self.h_r.degree() > 1)
        {
            return Err(MopError::Spec("linear classes need hL, hR of degree at most 1".into()));
        }
        if self.anchor.value.nrows() != self.dim || self.anchor.value.ncols() != self.dim {
            return Err(MopError::Spec("anchor value must be N×N".into()));
        }
        let det = self.anchor.value.determinant();
        if !(det.norm() > 0.0) || !det.norm().is_finite() {
            return Err(MopError::Spec("anchor value must be nonsingular".into()));
        }
        if !self.support.is_real() && self.support.distance(self.anchor.z0) > 1e-12 {
            return Err(MopError::Spec("anchor must lie on the circle".into()));
        }
        if self.support.is_real() && (self.anchor.z0.im != 0.0 || !self.support.contains_interior(self.anchor.z0.re)) {
            return Err(MopError::Spec("anchor must be an interior point of the support".into()));
        }
        if let WeightForm::Closed(terms) = &self.form {
            if terms.is_empty() {
                return Err(MopError::Spec("closed-form weight needs at least one term".into()));
            }
            for t in terms {
                if let Some(kind) = t.base.support() {
                    if kind != self.support.kind {
                        return Err(MopError::Spec("base weight support differs from the spec support".into()));
                    }
                } else if matches!(self.support.kind, SupportKind::RealLine | SupportKind::HalfLine) {
                    return Err(MopError::Spec("a unit base needs a bounded support".into()));
                }
                if let Factor::Poly(p) = &t.factor {
                    if p.dim() != self.dim {
                        return Err(MopError::Spec("weight factor must be N×N".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn hr_is_zero(&self) -> bool {
        self.h_r.is_zero()
    }

    /// Value of the weight on a real support at `x`, with accurate distances
    /// to the finite ends (upper boundary value for branched weights).
    pub fn eval_on_support(&self, x: f64, dlo: f64, dhi: f64) -> Result<CMat> {
        match &self.form {
            WeightForm::Closed(terms) => {
                let mut acc = zeros(self.dim);
                for t in terms {
                    let b = t.base.eval_real(x, dlo, dhi);
                    if b != 0.0 {
                        acc += t.factor.eval(c64(x, 0.0)) * C64::new(b, 0.0);
                    }
                }
                Ok(acc)
            }
            WeightForm::Pearson(cache) => self.pearson_on_support(cache, x),
        }
    }

    fn checkpoint(&self, cache: &PearsonCache, k: i64, at: C64) -> Result<CMat> {
        if let Some(v) = cache.0.lock().ok().and_then(|m| m.get(&k).cloned()) {
            return Ok(v);
        }
        let v = self.solve_pearson(PearsonTarget::Full, at)?;
        if let Ok(mut m) = cache.0.lock() {
            m.insert(k, v.clone());
        }
        Ok(v)
    }

    fn pearson_step(&self, from: C64, y: &CMat, to: C64) -> Result<CMat> {
        let f = |t: C64, y: &CMat| (self.h_l.eval(t) * y + y * self.h_r.eval(t)) / self.phi.eval(t);
        integrate_linear_ode(&f, from, y, to, 1e-13)
    }

    /// Circle points start from the checkpoint just behind them in the
    /// counterclockwise sense from the anchor, so no chord crosses the cut.
    fn pearson_on_circle(&self, cache: &PearsonCache, center: C64, radius: f64, z: C64) -> Result<CMat> {
        const SLOTS: f64 = 64.0;
        let t0 = (self.anchor.z0 - center).arg();
        let dt = ((z - center).arg() - t0).rem_euclid(2.0 * PI);
        let k = (dt / (2.0 * PI) * SLOTS).floor() as i64;
        let g = center + C64::from_polar(radius, t0 + 2.0 * PI * k as f64 / SLOTS);
        let start = self.checkpoint(cache, k, g)?;
        self.pearson_step(g, &start, z)
    }

    fn pearson_on_support(&self, cache: &PearsonCache, x: f64) -> Result<CMat> {
        let mut k = (x / CHECKPOINT_STEP).round() as i64;
        let g = |k: i64| k as f64 * CHECKPOINT_STEP;
        if !self.support.contains_interior(g(k)) {
            k += if g(k) < x { 1 } else { -1 };
            if !self.support.contains_interior(g(k)) {
                return self.solve_pearson(PearsonTarget::Full, c64(x, 0.0));
            }
        }
        let start = self.checkpoint(cache, k, c64(g(k), 0.0))?;
        self.pearson_step(c64(g(k), 0.0), &start, c64(x, 0.0))
    }

    /// Distance to the nearest zero of phi, or infinity for constant phi.
    pub fn phi_zero_distance(&self, z: C64) -> f64 {
        self.phi.roots().iter().map(|r| (r - z).norm()).fold(f64::INFINITY, f64::min)
    }

    fn solve_pearson(&self, target: PearsonTarget, z: C64) -> Result<CMat> {
        if self.phi_zero_distance(z) < 1e-12 {
            return Err(MopError::EndpointSingularity(z));
        }
        let (y0, f): (CMat, Box<dyn Fn(C64, &CMat) -> CMat>) = match target {
            PearsonTarget::Full => (
                self.anchor.value.clone(),
                Box::new(move |t: C64, y: &CMat| (self.h_l.eval(t) * y + y * self.h_r.eval(t)) / self.phi.eval(t)),
            ),
            PearsonTarget::Left => (self.anchor.value.clone(), Box::new(move |t: C64, y: &CMat| self.h_l.eval(t) * y / self.phi.eval(t))),
            PearsonTarget::Right => (eye(self.dim), Box::new(move |t: C64, y: &CMat| y * self.h_r.eval(t) / self.phi.eval(t))),
        };
        let path = self.continuation_path(z);
        let mut y = y0;
        for w in path.windows(2) {
            self.check_segment(w[0], w[1])?;
            y = integrate_linear_ode(&*f, w[0], &y, w[1], 1e-13)?;
        }
        Ok(y)
    }

    /// Waypoints from the anchor to `z`. Points below a real support with
    /// finite left end are reached by going around that end through the
    /// upper half plane, so the continuation has its cut along the support.
    /// On a circle the path turns counterclockwise around the centre at
    /// the anchor's radius, so the cut is the ray through the anchor.
    fn continuation_path(&self, z: C64) -> Vec<C64> {
        let z0 = self.anchor.z0;
        if let SupportKind::Circle { center, .. } = self.support.kind {
            let r0 = (z0 - center).norm();
            if r0 > 0.0 {
                let t0 = (z0 - center).arg();
                let dt = ((z - center).arg() - t0).rem_euclid(2.0 * PI);
                let k = (dt / (PI / 8.0)).ceil().max(1.0) as usize;
                let mut path = vec![z0];
                path.extend((1..=k).map(|j| center + C64::from_polar(r0, t0 + dt * j as f64 / k as f64)));
                path.push(z);
                return path;
            }
        }
        match (self.support.kind, self.support.ends().0) {
            (SupportKind::HalfLine | SupportKind::Interval { .. }, Some(lo)) if z.im < 0.0 => {
                let d = (z0.re - lo).abs().max(1.0);
                vec![z0, z0 + c64(0.0, d), c64(lo - d, 0.0), z]
            }
            _ => vec![z0, z],
        }
    }

    fn check_segment(&self, a: C64, b: C64) -> Result<()> {
        for r in self.phi.roots() {
            let ab = b - a;
            let len2 = ab.norm_sqr();
            let t = if len2 == 0.0 { 0.0 } else { ((r - a) * ab.conj()).re / len2 };
            let closest = a + ab * t.clamp(0.0, 1.0);
            if (closest - r).norm() < 1e-10 * (1.0 + r.norm()) && (b - r).norm() > 1e-12 {
                return Err(MopError::Path(format!("segment from {a} to {b} passes through the branch point {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum PearsonTarget {
    Full,
    Left,
    Right,
}

/// Solves `y' = f(z, y)` along the straight segment from `z0` to `z1` by
/// classical RK4 with step doubling; each accepted step is Richardson
/// corrected.
pub fn integrate_linear_ode(f: &dyn Fn(C64, &CMat) -> CMat, z0: C64, y0: &CMat, z1: C64, tol: f64) -> Result<CMat> {
    let span = z1 - z0;
    if span.norm() == 0.0 {
        return Ok(y0.clone());
    }
    let rk4 = |s: f64, y: &CMat, ds: f64| -> CMat {
        let dz = span * ds;
        let z = z0 + span * s;
        let k1 = f(z, y) * dz;
        let k2 = f(z + dz * 0.5, &(y + &k1 * C64::new(0.5, 0.0))) * dz;
        let k3 = f(z + dz * 0.5, &(y + &k2 * C64::new(0.5, 0.0))) * dz;
        let k4 = f(z + dz, &(y + &k3)) * dz;
        y + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) / C64::new(6.0, 0.0)
    };
    let mut s = 0.0f64;
    let mut ds = 1.0f64 / 16.0;
    let mut y = y0.clone();
    let mut steps = 0usize;
    while s < 1.0 {
        if s + ds > 1.0 {
            ds = 1.0 - s;
        }
        let full = rk4(s, &y, ds);
        let mid = rk4(s, &y, ds / 2.0);
        let two = rk4(s + ds / 2.0, &mid, ds / 2.0);
        let diff = &two - &full;
        let err = fnorm(&diff) / 15.0;
        let scale = fnorm(&two).max(1e-300);
        steps += 1;
        if steps > 200_000 || !err.is_finite() {
            return Err(MopError::Path(format!("ODE integration from {z0} to {z1} did not converge")));
        }
        if err <= tol * scale || ds < 1e-12 {
            y = &two + diff / C64::new(15.0, 0.0);
            s += ds;
            let grow = if err == 0.0 { 2.0 } else { (0.9 * (tol * scale / err).powf(0.2)).clamp(0.2, 2.0) };
            ds *= grow;
        } else {
            ds *= (0.9 * (tol * scale / err).powf(0.2)).clamp(0.1, 0.5);
        }
    }
    Ok(y)
}

/// Evaluates the weight at a complex point. Closed forms use their
/// determinations (cuts along the support); Pearson weights are continued
/// from the anchor.
pub fn evaluate_weight(spec: &WeightSpec, z: C64) -> Result<CMat> {
    match &spec.form {
        WeightForm::Closed(terms) => {
            let mut acc = zeros(spec.dim);
            for t in terms {
                let b = t.base.eval(z)?;
                if b.norm() != 0.0 {
                    acc += t.factor.eval(z) * b;
                }
            }
            Ok(acc)
        }
        WeightForm::Pearson(cache) => match spec.support.kind {
            SupportKind::Circle { center, radius } if ((z - center).norm() - radius).abs() <= 1e-12 * radius => {
                spec.pearson_on_circle(cache, center, radius, z)
            }
            _ => spec.solve_pearson(PearsonTarget::Full, z),
        },
    }
}

/// Builds the 2×2 Berezanskii block weight `alpha diag(w1, w2) alpha^{-1}`.
pub fn berezanskii_weight(b: &BerezanskiiSpec) -> Result<WeightSpec> {
    let s1 = b.w1.support();
    let s2 = b.w2.support();
    if s1.kind != s2.kind {
        return Err(MopError::Spec("Berezanskii weights must share the same support".into()));
    }
    let (phi1, h1) = b.w1.pearson();
    let (phi2, h2) = b.w2.pearson();
    if phi1 != phi2 {
        return Err(MopError::Spec("Berezanskii weights must share the same Pearson polynomial".into()));
    }
    let e1 = mix(c64(1.0, 0.0), c64(0.0, 0.0));
    let e2 = mix(c64(0.0, 0.0), c64(1.0, 0.0));
    let terms = vec![
        WeightTerm { base: b.w1.base(), factor: Factor::Poly(MatrixPolynomial::constant(e1)) },
        WeightTerm { base: b.w2.base(), factor: Factor::Poly(MatrixPolynomial::constant(e2)) },
    ];
    let h_l = MatrixPolynomial::new(vec![mix(c64(h1[0], 0.0), c64(h2[0], 0.0)), mix(c64(h1[1], 0.0), c64(h2[1], 0.0))])?;
    let z0 = c64(b.w1.anchor(), 0.0);
    let form = WeightForm::Closed(terms);
    let mut spec = WeightSpec {
        name: "berezanskii".into(),
        dim: 2,
        support: s1,
        phi: phi1,
        h_l,
        h_r: MatrixPolynomial::zero(2),
        class: WeightClass::Berezanskii,
        anchor: Anchor { z0, value: eye(2) },
        form,
        berezanskii: Some(*b),
    };
    spec.anchor.value = evaluate_weight(&spec, z0)?;
    spec.validate()?;
    Ok(spec)
}

/// Factors `omega = omegaL omegaR` with `omegaR(z0) = I`.
pub fn factor_weight(spec: &WeightSpec, z: C64) -> Result<(CMat, CMat)> {
    if spec.hr_is_zero() {
        return Ok((evaluate_weight(spec, z)?, eye(spec.dim)));
    }
    let wr = spec.solve_pearson(PearsonTarget::Right, z)?;
    match spec.form {
        WeightForm::Closed(_) => {
            let w = evaluate_weight(spec, z)?;
            let wl = w * inverse(&wr, "right weight factor")?;
            Ok((wl, wr))
        }
        WeightForm::Pearson(_) => Ok((spec.solve_pearson(PearsonTarget::Left, z)?, wr)),
    }
}

/// `|| phi omega' - hL omega - omega hR ||` with a central difference of
/// step `step` (default 1e-5).
pub fn pearson_residual(spec: &WeightSpec, z: C64, step: Option<f64>) -> Result<f64> {
    let h = step.unwrap_or(1e-5);
    if h <= 0.0 || !h.is_finite() {
        return Err(MopError::Evaluation("finite-difference step must be positive".into()));
    }
    if spec.phi_zero_distance(z) < 4.0 * h {
        return Err(MopError::Evaluation(format!("difference step {h:e} reaches a zero of phi near {z}")));
    }
    let hc = c64(h, 0.0);
    let wp = evaluate_weight(spec, z + hc)?;
    let wm = evaluate_weight(spec, z - hc)?;
    let w = evaluate_weight(spec, z)?;
    let dw = (wp - wm) / (hc * 2.0);
    let r = dw * spec.phi.eval(z) - spec.h_l.eval(z) * &w - &w * spec.h_r.eval(z);
    Ok(fnorm(&r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_scalar() -> WeightSpec {
        WeightSpec {
            name: "g".into(),
            dim: 1,
            support: SupportCurve::real_line(),
            phi: ScalarPoly::one(),
            h_l: MatrixPolynomial::new(vec![zeros(1), real_mat(&[&[-2.0]])]).unwrap(),
            h_r: MatrixPolynomial::zero(1),
            class: WeightClass::Hermite,
            anchor: Anchor { z0: c64(0.0, 0.0), value: eye(1) },
            form: WeightForm::Closed(vec![WeightTerm {
                base: BaseWeight::Gaussian { s: 1.0 },
                factor: Factor::Poly(MatrixPolynomial::constant(eye(1))),
            }]),
            berezanskii: None,
        }
    }

    #[test]
    fn gaussian_pearson_residual_small() {
        let s = gaussian_scalar();
        assert!(pearson_residual(&s, c64(1.0, 0.0), Some(1e-5)).unwrap() < 1e-8);
    }

    #[test]
    fn pearson_ode_matches_closed_form() {
        let mut s = gaussian_scalar();
        s.form = WeightForm::Pearson(PearsonCache::default());
        let z = c64(1.0, 0.5);
        let w = evaluate_weight(&s, z).unwrap();
        assert!((w[(0, 0)] - (-z * z).exp()).norm() < 1e-11);
    }

    #[test]
    fn laguerre_cut_along_support() {
        let b = BaseWeight::Laguerre { alpha: 0.5 };
        let above = b.eval(c64(2.0, 1e-12)).unwrap();
        let below = b.eval(c64(2.0, -1e-12)).unwrap();
        let real = b.eval_real(2.0, 2.0, f64::INFINITY);
        assert!((above - C64::new(real, 0.0)).norm() < 1e-10);
        assert!((below + C64::new(real, 0.0)).norm() < 1e-10);
        // continuous across the negative axis
        let l = b.eval(c64(-1.0, 1e-12)).unwrap();
        let r = b.eval(c64(-1.0, -1e-12)).unwrap();
        assert!((l - r).norm() < 1e-10);
    }

    #[test]
    fn chebyshev_berezanskii_value() {
        let spec = berezanskii_weight(&BerezanskiiSpec { w1: ScalarFamily::ChebyshevPlus, w2: ScalarFamily::ChebyshevMinus }).unwrap();
        let w0 = evaluate_weight(&spec, c64(0.0, 0.0)).unwrap();
        assert!(fnorm(&(w0 - eye(2))) < 1e-15);
        let x = 0.3f64;
        let w = evaluate_weight(&spec, c64(x, 0.0)).unwrap();
        let r = 1.0 / (1.0 - x * x).sqrt();
        let expect = real_mat(&[&[r, x * r], &[x * r, r]]);
        assert!(fnorm(&(w - expect)) < 1e-14);
    }

    #[test]
    fn mismatched_berezanskii_supports_rejected() {
        let r = berezanskii_weight(&BerezanskiiSpec { w1: ScalarFamily::Gaussian, w2: ScalarFamily::Laguerre { alpha: 0.0 } });
        assert!(matches!(r, Err(MopError::Spec(_))));
    }

    #[test]
    fn lower_side_continuation_goes_around_the_end() {
        let s = WeightSpec {
            name: "lag".into(),
            dim: 1,
            support: SupportCurve::half_line(),
            phi: ScalarPoly::from_real(&[0.0, 1.0]),
            h_l: MatrixPolynomial::new(vec![real_mat(&[&[0.5]]), real_mat(&[&[-1.0]])]).unwrap(),
            h_r: MatrixPolynomial::zero(1),
            class: WeightClass::Laguerre,
            anchor: Anchor { z0: c64(1.0, 0.0), value: real_mat(&[&[(-1.0f64).exp()]]) },
            form: WeightForm::Pearson(PearsonCache::default()),
            berezanskii: None,
        };
        s.validate().unwrap();
        let base = BaseWeight::Laguerre { alpha: 0.5 };
        for z in [c64(2.0, 0.7), c64(2.0, -0.7), c64(-1.0, -0.3)] {
            let w = evaluate_weight(&s, z).unwrap();
            assert!((w[(0, 0)] - base.eval(z).unwrap()).norm() < 1e-10, "z = {z}");
        }
    }
}
