//! Matrix moments by quadrature, block Hankel assembly and regularity.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{MopError, Result};
use crate::quad::{gauss_hermite, gauss_jacobi, gauss_laguerre, tanh_sinh, trapezoid_periodic, DeConfig, GaussRule, KahanMat};
use crate::types::{c64, fnorm, zeros, CMat, C64};
use crate::weights::{evaluate_weight, BaseWeight, Factor, Orientation, SupportKind, WeightForm, WeightSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "plain-dx")]
    PlainDx,
    #[serde(rename = "paper-2pii")]
    TwoPiI,
}

impl Normalization {
    /// Constant multiplying `dx` in every integral.
    pub fn factor(&self) -> C64 {
        match self {
            Normalization::PlainDx => c64(1.0, 0.0),
            Normalization::TwoPiI => c64(0.0, -1.0 / (2.0 * PI)),
        }
    }

    /// `2 pi i` times the measure factor; the jump of a Cauchy transform
    /// of `f` across the support is `kappa f`.
    pub fn jump_factor(&self) -> C64 {
        self.factor() * c64(0.0, 2.0 * PI)
    }

    pub fn default_for(kind: &SupportKind) -> Self {
        match kind {
            SupportKind::Circle { .. } => Normalization::TwoPiI,
            _ => Normalization::PlainDx,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadRule {
    GaussLegendre,
    GaussHermite,
    GaussLaguerre,
    GaussJacobi,
    TrapezoidOnCircle,
    Adaptive,
}

#[derive(Clone, Debug)]
pub struct QuadratureConfig {
    /// `None` picks the rule matching each base weight.
    pub rule: Option<QuadRule>,
    pub nodes: usize,
    pub truncation_radius: Option<f64>,
    pub target_tol: f64,
    pub normalization: Option<Normalization>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rule: None, nodes: 64, truncation_radius: None, target_tol: 1e-13, normalization: None }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(MopError::Spec("quadrature needs at least 2 nodes".into()));
        }
        if !(self.target_tol > 0.0) {
            return Err(MopError::Spec("quadrature tolerance must be positive".into()));
        }
        if let Some(r) = self.truncation_radius {
            if !(r > 0.0) {
                return Err(MopError::Spec("truncation radius must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn normalization_for(&self, spec: &WeightSpec) -> Normalization {
        self.normalization.unwrap_or_else(|| Normalization::default_for(&spec.support.kind))
    }

    fn de_config(&self) -> DeConfig {
        DeConfig { tol: self.target_tol.max(1e-15), ..DeConfig::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityRecord {
    pub n: usize,
    pub det_modulus: f64,
    pub log10_det: f64,
    /// 2-norm condition number of the diagonally equilibrated moment matrix.
    pub condition_estimate: f64,
    /// Smallest `|det pivot|^{1/N}` over the threshold it had to clear.
    pub pivot_margin: f64,
    pub regular: bool,
}

#[derive(Clone, Debug)]
pub struct MomentData {
    pub dim: usize,
    pub normalization: Normalization,
    pub n_max: usize,
    /// `omega_0 ..= omega_{2 n_max}`.
    pub moments: Vec<CMat>,
    pub regularity: Vec<RegularityRecord>,
    /// `int |omega(z)| |z|^k |dz|` per moment when quadrature produced them.
    /// Pivot thresholds use these so that moments which cancel to rounding
    /// noise are not mistaken for a regular matrix.
    pub abs_scale: Vec<f64>,
    pub truncation_radius: Option<f64>,
    pub rule: QuadRule,
    pub nodes: usize,
    /// Largest relative change seen in the node-doubling check.
    pub doubling_gap: f64,
    /// First degree whose condition estimate exceeded the cap.
    pub capped_at: Option<usize>,
}

pub const CONDITION_CAP: f64 = 1e12;
pub const PIVOT_THRESHOLD: f64 = 1e-10;
/// Pivots below this fraction of the absolute-value scale are rounding noise.
pub const NOISE_THRESHOLD: f64 = 1e-12;

impl MomentData {
    /// Builds moment data from given moments (normalization as labelled).
    pub fn from_moments(moments: Vec<CMat>, normalization: Normalization) -> Result<Self> {
        Self::from_moments_scaled(moments, Vec::new(), normalization)
    }

    /// As [`MomentData::from_moments`], with absolute-value scales for the
    /// pivot test.
    pub fn from_moments_scaled(moments: Vec<CMat>, abs_scale: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if moments.is_empty() || moments.len().is_multiple_of(2) {
            return Err(MopError::Range("need an odd number 2 n_max + 1 of moments".into()));
        }
        let dim = moments[0].nrows();
        let n_max = (moments.len() - 1) / 2;
        let mut md = MomentData {
            dim,
            normalization,
            n_max,
            moments,
            regularity: Vec::new(),
            abs_scale,
            truncation_radius: None,
            rule: QuadRule::Adaptive,
            nodes: 0,
            doubling_gap: 0.0,
            capped_at: None,
        };
        md.regularity = regularity_records(&md, n_max)?;
        md.capped_at = md.regularity.iter().find(|r| r.condition_estimate > CONDITION_CAP).map(|r| r.n);
        Ok(md)
    }

    /// Largest n for which the moment matrix is regular and within the
    /// condition cap.
    pub fn usable_n_max(&self) -> Option<usize> {
        let mut last = None;
        for r in &self.regularity {
            if !r.regular || r.condition_estimate > CONDITION_CAP {
                break;
            }
            last = Some(r.n);
        }
        last
    }
}

/// A quadrature node on a real support with the weight already evaluated.
pub struct SupportNode<'a> {
    pub x: f64,
    pub dlo: f64,
    pub dhi: f64,
    pub weight: &'a CMat,
    panel: (f64, f64),
    da: f64,
    db: f64,
}

impl SupportNode<'_> {
    /// `x - c`, exact to rounding when `c` is a panel end.
    pub fn offset(&self, c: f64) -> f64 {
        if c == self.panel.0 {
            self.da
        } else if c == self.panel.1 {
            -self.db
        } else {
            self.x - c
        }
    }
}

/// Radius beyond which `|omega(x)| (1 + |x|)^degree` is below 1e-20 of its
/// peak, for supports with an infinite end.
pub fn truncation_radius(spec: &WeightSpec, quad: &QuadratureConfig, degree: usize) -> Result<Option<f64>> {
    let (lo, hi) = spec.support.ends();
    if !spec.support.is_real() || (lo.is_some() && hi.is_some()) {
        return Ok(None);
    }
    if let Some(r) = quad.truncation_radius.or(spec.support.truncation) {
        return Ok(Some(r));
    }
    let g = |x: f64| -> Result<f64> {
        let dlo = lo.map_or(f64::INFINITY, |l| x - l);
        let w = spec.eval_on_support(x, dlo, f64::INFINITY)?;
        Ok(fnorm(&w) * (1.0 + x.abs()).powi(degree as i32))
    };
    let mut peak = 0.0f64;
    let mut t = 0.25f64;
    while t < 1e4 {
        let mut v = g(t)?;
        if lo.is_none() {
            v = v.max(g(-t)?);
        }
        peak = peak.max(v);
        if t > 2.0 && v < 1e-20 * peak {
            return Ok(Some(t));
        }
        t += if t < 20.0 { 0.25 } else { t / 40.0 };
    }
    Err(MopError::Quadrature { what: "support truncation scan".into(), last: g(t)?, previous: peak })
}

/// Panel ends covering `[lo, hi]` with the given break points included.
fn panels(lo: f64, hi: f64, width: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut x = lo;
    loop {
        let w = width * (x.abs() / 8.0).max(1.0);
        x += w;
        if x >= hi - 1e-9 * w {
            break;
        }
        pts.push(x);
    }
    pts.push(hi);
    for &b in breaks {
        if b > lo && b < hi && !pts.contains(&b) {
            pts.push(b);
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // drop slivers next to break points
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        if let Some(&last) = out.last() {
            if p - last < 1e-3 && !breaks.contains(&last) && last != lo {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

/// Integrates `f(node)` over a real support (truncated if unbounded) with
/// tanh-sinh panels split at `breaks`. No measure factor is applied.
pub fn integrate_real_support<F>(spec: &WeightSpec, quad: &QuadratureConfig, breaks: &[f64], degree: usize, mut f: F) -> Result<Vec<CMat>>
where
    F: FnMut(&SupportNode) -> Vec<CMat>,
{
    if !spec.support.is_real() {
        return Err(MopError::Spec("real-support integration on a circle".into()));
    }
    let (lo, hi) = spec.support.ends();
    let r = truncation_radius(spec, quad, degree)?;
    let a = lo.unwrap_or_else(|| -r.unwrap());
    let b = hi.unwrap_or_else(|| r.unwrap());
    let width = match spec.support.kind {
        SupportKind::HalfLine => 4.0,
        SupportKind::RealLine => 2.0,
        _ => b - a,
    };
    let pts = panels(a, b, width, breaks);
    let cfg = quad.de_config();
    let mut total: Option<Vec<KahanMat>> = None;
    let mut failure: Option<MopError> = None;
    for w in pts.windows(2) {
        let (pa, pb) = (w[0], w[1]);
        let res = tanh_sinh(pa, pb, &cfg, |node| {
            let dlo = lo.map_or(f64::INFINITY, |l| if pa == l { node.da } else { (pa - l) + node.da });
            let dhi = hi.map_or(f64::INFINITY, |h| if pb == h { node.db } else { (h - pb) + node.db });
            match spec.eval_on_support(node.x, dlo, dhi) {
                Ok(weight) => f(&SupportNode { x: node.x, dlo, dhi, weight: &weight, panel: (pa, pb), da: node.da, db: node.db }),
                Err(e) => {
                    failure.get_or_insert(e);
                    Vec::new()
                }
            }
        });
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let (vals, _) = res?;
        let tot = total.get_or_insert_with(|| vals.iter().map(|v| KahanMat::new(v.nrows(), v.ncols())).collect());
        for (t, v) in tot.iter_mut().zip(vals.iter()) {
            t.add(v);
        }
    }
    Ok(total.unwrap_or_default().iter().map(|k| k.value()).collect())
}

/// Integrates `f(z, dz/dtheta, omega(z))` around a circle support by the
/// periodic trapezoid rule. No measure factor is applied.
pub fn integrate_circle<F>(spec: &WeightSpec, quad: &QuadratureConfig, mut f: F) -> Result<Vec<CMat>>
where
    F: FnMut(C64, C64, &CMat) -> Vec<CMat>,
{
    let (center, radius, orientation) = match spec.support.kind {
        SupportKind::Circle { center, radius } => (center, radius, spec.support.orientation),
        _ => return Err(MopError::Spec("circle integration on a real support".into())),
    };
    let sign = if orientation == Orientation::Positive { 1.0 } else { -1.0 };
    let mut failure: Option<MopError> = None;
    let res = trapezoid_periodic(quad.nodes.max(32), 1 << 16, quad.target_tol.max(1e-15), |theta| {
        let e = C64::from_polar(1.0, theta);
        let z = center + e * radius;
        let dz = c64(0.0, sign * radius) * e;
        match evaluate_weight(spec, z) {
            Ok(w) => f(z, dz, &w),
            Err(err) => {
                failure.get_or_insert(err);
                Vec::new()
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res?.0)
}

fn natural_rule(base: &BaseWeight) -> QuadRule {
    match base {
        BaseWeight::Gaussian { .. } => QuadRule::GaussHermite,
        BaseWeight::Laguerre { .. } => QuadRule::GaussLaguerre,
        BaseWeight::Jacobi { .. } => QuadRule::GaussJacobi,
        BaseWeight::Unit => QuadRule::GaussLegendre,
    }
}

fn base_rule(base: &BaseWeight, support: &SupportKind, m: usize) -> Result<GaussRule> {
    Ok(match *base {
        BaseWeight::Gaussian { s } => gauss_hermite(m, s),
        BaseWeight::Laguerre { alpha } => gauss_laguerre(m, alpha),
        BaseWeight::Jacobi { a, b, lo, hi } => gauss_jacobi(m, a, b, lo, hi),
        BaseWeight::Unit => match *support {
            SupportKind::Interval { a, b } => gauss_jacobi(m, 0.0, 0.0, a, b),
            _ => return Err(MopError::Spec("unit base weight needs a bounded interval".into())),
        },
    })
}

/// Moments `int x^k F(x) base(x) dx`, `k <= kmax`, and the matching
/// absolute-value integrals used as error scales.
fn gauss_term_moments(rule: &GaussRule, factor: &Factor, kmax: usize) -> (Vec<CMat>, Vec<f64>) {
    let dim = factor.eval(c64(0.0, 0.0)).nrows();
    let mut acc: Vec<KahanMat> = (0..=kmax).map(|_| KahanMat::new(dim, dim)).collect();
    let mut abs = vec![0.0f64; kmax + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let f = factor.eval(c64(x, 0.0));
        let fnm = fnorm(&f);
        let mut p = w;
        for k in 0..=kmax {
            acc[k].add_scaled(&f, c64(p, 0.0));
            abs[k] += p.abs() * fnm;
            p *= x;
        }
    }
    (acc.iter().map(|a| a.value()).collect(), abs)
}

/// Computes `omega_0 ..= omega_{2 n_max}` with a node-doubling accuracy check.
pub fn compute_moments(spec: &WeightSpec, n_max: usize, quad: &QuadratureConfig) -> Result<MomentData> {
    quad.validate()?;
    spec.validate()?;
    let kmax = 2 * n_max;
    let norm = quad.normalization_for(spec);
    let scale = norm.factor();
    let dim = spec.dim;

    let adaptive = |what: &str| -> Result<(Vec<CMat>, QuadRule, Option<f64>)> {
        if spec.support.is_real() {
            let degree = kmax;
            let r = truncation_radius(spec, quad, degree)?;
            let vals = integrate_real_support(spec, quad, &[], degree, |node| {
                let mut out = Vec::with_capacity(2 * kmax + 2);
                let wn = fnorm(node.weight);
                let mut p = 1.0f64;
                for _ in 0..=kmax {
                    out.push(node.weight * c64(p, 0.0));
                    p *= node.x;
                }
                // Even powers only: |x|^k has a kink at 0 that stalls the
                // panel rule. Odd k take the Cauchy-Schwarz bound from their neighbours.
                let mut p = 1.0f64;
                for _ in 0..=kmax / 2 + 1 {
                    out.push(CMat::from_element(1, 1, c64(wn * p, 0.0)));
                    p *= node.x * node.x;
                }
                out
            })
            .map_err(|e| relabel(e, what))?;
            Ok((vals, QuadRule::Adaptive, r))
        } else {
            let vals = integrate_circle(spec, quad, |z, dz, w| {
                let mut out = Vec::with_capacity(2 * kmax + 2);
                let wn = fnorm(w);
                let mut p = dz;
                for _ in 0..=kmax {
                    out.push(w * p);
                    p *= z;
                }
                let mut p = dz.norm();
                for _ in 0..=kmax {
                    out.push(CMat::from_element(1, 1, c64(wn * p, 0.0)));
                    p *= z.norm();
                }
                out
            })?;
            Ok((vals, QuadRule::TrapezoidOnCircle, None))
        }
    };

    let forced_adaptive = matches!(quad.rule, Some(QuadRule::Adaptive) | Some(QuadRule::TrapezoidOnCircle));
    let (raw, abs_raw, rule, nodes, gap, radius) = match (&spec.form, forced_adaptive || !spec.support.is_real()) {
        (WeightForm::Closed(terms), false) => {
            let mut total: Vec<CMat> = vec![zeros(dim); kmax + 1];
            let mut abs_total = vec![0.0f64; kmax + 1];
            let mut gap = 0.0f64;
            let mut used_nodes = 0usize;
            let mut rule_used = QuadRule::GaussLegendre;
            for term in terms {
                let natural = natural_rule(&term.base);
                if let Some(r) = quad.rule {
                    if r != natural {
                        return Err(MopError::Spec(format!("quadrature rule {r:?} does not fit a {natural:?} base weight")));
                    }
                }
                rule_used = natural;
                let mut m = match term.factor.poly_degree() {
                    Some(d) => quad.nodes.max((kmax + d) / 2 + 8),
                    None => quad.nodes,
                };
                let (mut cur, _) = gauss_term_moments(&base_rule(&term.base, &spec.support.kind, m)?, &term.factor, kmax);
                let mut cur_abs;
                loop {
                    let (next, abs) = gauss_term_moments(&base_rule(&term.base, &spec.support.kind, 2 * m)?, &term.factor, kmax);
                    let rel = cur
                        .iter()
                        .zip(&next)
                        .zip(&abs)
                        .map(|((a, b), s)| fnorm(&(a - b)) / s.max(1e-300))
                        .fold(0.0f64, f64::max);
                    m *= 2;
                    cur = next;
                    cur_abs = abs;
                    if rel <= quad.target_tol.max(1e-15) * 10.0 {
                        gap = gap.max(rel);
                        break;
                    }
                    if m >= 1024 {
                        let s = cur.iter().map(fnorm).fold(0.0, f64::max);
                        return Err(MopError::Quadrature { what: "moments (node doubling)".into(), last: s, previous: rel });
                    }
                }
                used_nodes = used_nodes.max(m);
                for (t, v) in total.iter_mut().zip(cur) {
                    *t += v;
                }
                for (t, v) in abs_total.iter_mut().zip(cur_abs) {
                    *t += v;
                }
            }
            (total, abs_total, rule_used, used_nodes, gap, None)
        }
        _ => {
            let (mut vals, rule, r) = adaptive("moments")?;
            let tail: Vec<f64> = vals.split_off(kmax + 1).iter().map(|m| m[(0, 0)].re).collect();
            let abs = if spec.support.is_real() {
                (0..=kmax).map(|k| if k % 2 == 0 { tail[k / 2] } else { (tail[k / 2] * tail[k / 2 + 1]).sqrt() }).collect()
            } else {
                tail
            };
            (vals, abs, rule, 0, 0.0, r)
        }
    };
    let moments: Vec<CMat> = raw.into_iter().map(|m| m * scale).collect();
    if moments.iter().any(|m| !crate::types::is_finite(m)) {
        return Err(MopError::Quadrature { what: "moments (non-finite value)".into(), last: f64::NAN, previous: f64::NAN });
    }
    let abs_scale = abs_raw.into_iter().map(|a| a * scale.norm()).collect();
    let mut md = MomentData::from_moments_scaled(moments, abs_scale, norm)?;
    md.rule = rule;
    md.nodes = nodes;
    md.doubling_gap = gap;
    md.truncation_radius = radius;
    Ok(md)
}

fn relabel(e: MopError, what: &str) -> MopError {
    match e {
        MopError::Quadrature { what: w, last, previous } => MopError::Quadrature { what: format!("{what}: {w}"), last, previous },
        other => other,
    }
}

/// The block Hankel matrix with block `(i, j)` equal to `omega_{i+j}`.
pub fn assemble_moment_matrix(md: &MomentData, n: usize) -> Result<CMat> {
    if 2 * n >= md.moments.len() {
        return Err(MopError::Range(format!("moment matrix of order {n} needs {} moments, have {}", 2 * n + 1, md.moments.len())));
    }
    let d = md.dim;
    let mut u = CMat::zeros((n + 1) * d, (n + 1) * d);
    for i in 0..=n {
        for j in 0..=n {
            u.view_mut((i * d, j * d), (d, d)).copy_from(&md.moments[i + j]);
        }
    }
    Ok(u)
}

/// Block pivots (Schur complements) of a block matrix eliminated without
/// pivoting. Stops early if a pivot cannot be inverted.
pub(crate) fn block_pivots(u: &CMat, d: usize) -> Vec<CMat> {
    let nb = u.nrows() / d;
    let mut a = u.clone();
    let mut piv = Vec::with_capacity(nb);
    for k in 0..nb {
        let p = a.view((k * d, k * d), (d, d)).into_owned();
        piv.push(p.clone());
        let inv = match p.try_inverse() {
            Some(i) if crate::types::is_finite(&i) => i,
            _ => break,
        };
        let rest = (nb - k - 1) * d;
        if rest == 0 {
            break;
        }
        let col = a.view(((k + 1) * d, k * d), (rest, d)).into_owned();
        let row = a.view((k * d, (k + 1) * d), (d, rest)).into_owned();
        let upd = col * inv * row;
        let mut sub = a.view_mut(((k + 1) * d, (k + 1) * d), (rest, rest));
        sub -= upd;
    }
    piv
}

fn equilibrated_condition(u: &CMat) -> f64 {
    let n = u.nrows();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = u[(i, i)].norm();
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                let r = u.row(i).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if r > 0.0 { 1.0 / r.sqrt() } else { 1.0 }
            }
        })
        .collect();
    let e = CMat::from_fn(n, n, |i, j| u[(i, j)] * (d[i] * d[j]));
    let sv = e.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 { max / min } else { f64::INFINITY }
}

fn regularity_records(md: &MomentData, n_max: usize) -> Result<Vec<RegularityRecord>> {
    let u = assemble_moment_matrix(md, n_max)?;
    let d = md.dim;
    let piv = block_pivots(&u, d);
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log_det = 0.0f64;
    let mut margin = f64::INFINITY;
    let mut regular = true;
    for n in 0..=n_max {
        let (pdet, threshold) = match piv.get(n) {
            Some(p) => {
                let det = p.determinant().norm();
                let rows = u.view((n * d, 0), (d, (n + 1) * d));
                let gm = (0..d)
                    .map(|i| rows.row(i).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().ln())
                    .sum::<f64>()
                    / d as f64;
                let floor = if md.abs_scale.len() > 2 * n {
                    (0..=n).map(|j| md.abs_scale[n + j].powi(2)).sum::<f64>().sqrt()
                } else {
                    0.0
                };
                (det, (PIVOT_THRESHOLD * gm.exp()).max(NOISE_THRESHOLD * floor))
            }
            None => (0.0, 0.0),
        };
        let root = pdet.powf(1.0 / d as f64);
        let m = if threshold > 0.0 { root / threshold } else if root > 0.0 { f64::INFINITY } else { 0.0 };
        margin = margin.min(m);
        regular = regular && root > threshold && pdet.is_finite();
        log_det += pdet.log10();
        let sub = u.view((0, 0), ((n + 1) * d, (n + 1) * d)).into_owned();
        out.push(RegularityRecord {
            n,
            det_modulus: 10f64.powf(log_det),
            log10_det: log_det,
            condition_estimate: equilibrated_condition(&sub),
            pivot_margin: margin,
            regular,
        });
    }
    Ok(out)
}

/// Regularity record for degree `n`: determinant of the moment matrix, its
/// equilibrated condition number and the per-pivot test.
pub fn regularity_check(md: &MomentData, n: usize) -> Result<RegularityRecord> {
    if n > md.n_max {
        return Err(MopError::Range(format!("regularity requested at n = {n} beyond n_max = {}", md.n_max)));
    }
    if let Some(r) = md.regularity.get(n) {
        return Ok(r.clone());
    }
    Ok(regularity_records(md, n)?.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;
    use crate::types::eye;
    use statrs::function::gamma::gamma;

    #[test]
    fn gaussian_moments() {
        let spec = builtin("hermite-scalar").unwrap();
        let md = compute_moments(&spec, 5, &QuadratureConfig::default()).unwrap();
        let sp = PI.sqrt();
        assert!((md.moments[0][(0, 0)].re - sp).abs() < 1e-14);
        assert!(md.moments[1][(0, 0)].norm() < 1e-15);
        assert!((md.moments[2][(0, 0)].re - sp / 2.0).abs() < 1e-14);
        let u = assemble_moment_matrix(&md, 1).unwrap();
        assert!((u[(0, 0)].re - sp).abs() < 1e-14 && u[(0, 1)].norm() < 1e-15 && (u[(1, 1)].re - sp / 2.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_factorials() {
        let spec = builtin("laguerre-scalar(0)").unwrap();
        let md = compute_moments(&spec, 6, &QuadratureConfig::default()).unwrap();
        for (k, m) in md.moments.iter().enumerate() {
            let exact = gamma(k as f64 + 1.0);
            assert!((m[(0, 0)].re - exact).abs() < 1e-13 * exact, "k={k}");
        }
    }

    #[test]
    fn adaptive_agrees_with_gauss() {
        let spec = builtin("laguerre-scalar(0.5)").unwrap();
        let q = QuadratureConfig { rule: Some(QuadRule::Adaptive), ..Default::default() };
        let a = compute_moments(&spec, 3, &q).unwrap();
        let g = compute_moments(&spec, 3, &QuadratureConfig::default()).unwrap();
        for (x, y) in a.moments.iter().zip(&g.moments) {
            assert!(fnorm(&(x - y)) < 1e-11 * fnorm(y));
        }
    }

    #[test]
    fn zero_weight_is_not_regular() {
        let md = MomentData::from_moments(vec![zeros(1); 5], Normalization::PlainDx).unwrap();
        assert!(!regularity_check(&md, 0).unwrap().regular);
    }

    #[test]
    fn hermite_and_chebyshev_regular() {
        let h = compute_moments(&builtin("hermite-scalar").unwrap(), 10, &QuadratureConfig::default()).unwrap();
        assert!(h.regularity.iter().all(|r| r.regular));
        let c = compute_moments(&builtin("berezanskii-chebyshev").unwrap(), 8, &QuadratureConfig::default()).unwrap();
        assert!(c.regularity.iter().all(|r| r.regular));
        assert_eq!(c.usable_n_max(), Some(8));
    }

    #[test]
    fn hermitian_moments() {
        let md = compute_moments(&builtin("berezanskii-laguerre(0.5,1.5)").unwrap(), 4, &QuadratureConfig::default()).unwrap();
        for m in &md.moments {
            assert!(fnorm(&(m - m.adjoint())) < 1e-13 * fnorm(m).max(1.0));
        }
    }

    #[test]
    fn circle_moments_of_exp_inverse() {
        use crate::types::ScalarPoly;
        use crate::weights::{Anchor, SupportCurve, WeightClass, WeightTerm};
        use crate::types::MatrixPolynomial;
        use std::sync::Arc;
        let f: crate::weights::AnalyticFn = Arc::new(|z: C64| CMat::from_element(1, 1, (C64::new(1.0, 0.0) / z).exp()));
        let spec = WeightSpec {
            name: "exp-inv".into(),
            dim: 1,
            support: SupportCurve::circle(c64(0.0, 0.0), 1.0, Orientation::Positive),
            phi: ScalarPoly::from_real(&[0.0, 0.0, 1.0]),
            h_l: MatrixPolynomial::constant(-eye(1)),
            h_r: MatrixPolynomial::zero(1),
            class: WeightClass::Custom,
            anchor: Anchor { z0: c64(1.0, 0.0), value: CMat::from_element(1, 1, c64(1f64.exp(), 0.0)) },
            form: WeightForm::Closed(vec![WeightTerm { base: BaseWeight::Unit, factor: Factor::Analytic(f) }]),
            berezanskii: None,
        };
        let md = compute_moments(&spec, 3, &QuadratureConfig::default()).unwrap();
        assert_eq!(md.normalization, Normalization::TwoPiI);
        for (k, m) in md.moments.iter().enumerate() {
            let exact = 1.0 / gamma(k as f64 + 2.0);
            assert!((m[(0, 0)] - c64(exact, 0.0)).norm() < 1e-14, "k={k}");
        }
    }

    fn circle_power(h: &str, phi: &str, value: f64) -> WeightSpec {
        let text = format!(
            r#"{{"name": "c", "class": "custom", "N": 1, "support": {{"kind": "circle", "center": [0, 0], "radius": 1}},
            "phi": {phi}, "hL": {h}, "anchor": {{"z0": [1, 0], "value": [[{value}]]}}}}"#
        );
        crate::specfile::parse_spec_json(&text).unwrap()
    }

    #[test]
    fn cancelling_circle_moments_are_not_regular() {
        // 1/z: only omega_0 survives, so U_1 is singular up to rounding.
        let md = compute_moments(&circle_power("[[[-1]]]", "[0, 1]", 1.0), 3, &QuadratureConfig::default()).unwrap();
        assert!(md.regularity[0].regular);
        assert!(!md.regularity[1].regular);
    }

    #[test]
    fn circle_continuation_around_the_centre() {
        // exp(1/z) has omega_k = 1/(k+1)! with the 1/(2 pi i) measure.
        let spec = circle_power("[[[-1]]]", "[0, 0, 1]", std::f64::consts::E);
        let md = compute_moments(&spec, 2, &QuadratureConfig::default()).unwrap();
        let mut f = 1.0;
        for (k, m) in md.moments.iter().enumerate() {
            f *= (k + 1) as f64;
            assert!((m[(0, 0)] - c64(1.0 / f, 0.0)).norm() < 1e-13, "k={k}");
        }
        let w = evaluate_weight(&spec, c64(-1.0, 0.0)).unwrap();
        assert!((w[(0, 0)].re - (-1.0f64).exp()).abs() < 1e-12);
    }
}
