//! One weight taken through moments and factorization, with the
//! Cauchy-integral engine every evaluation builds on.

use crate::error::{MopError, Result};
use crate::factorization::{gauss_borel, RecurrenceData};
use crate::moments::{compute_moments, integrate_circle, integrate_real_support, MomentData, QuadratureConfig, CONDITION_CAP};
use crate::types::{c64, eye, zeros, CMat, Side, C64};
use crate::weights::{SupportKind, WeightSpec};

/// Extra degrees factored beyond the requested range: the transfer step
/// needs `P_{n+1}` and the structure matrices need `p^1_{n+2}`.
pub const HEADROOM: usize = 2;

#[derive(Clone, Debug)]
pub struct CauchyConfig {
    /// Distances `eps` for the boundary values `f(x +- i eps)`.
    pub ladder: Vec<f64>,
    /// Points closer than this to the support are refused.
    pub min_distance: f64,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        CauchyConfig { ladder: vec![0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125], min_distance: 1e-3 }
    }
}

impl CauchyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < 3 {
            return Err(MopError::Spec("epsilon ladder needs at least 3 rungs".into()));
        }
        if self.ladder.iter().any(|e| !(*e > 0.0)) || self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(MopError::Spec("epsilon ladder must be positive and strictly decreasing".into()));
        }
        if self.ladder.last().copied().unwrap_or(0.0) <= self.min_distance {
            return Err(MopError::Spec("smallest ladder rung must exceed the proximity threshold".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Pipeline {
    pub spec: WeightSpec,
    pub quad: QuadratureConfig,
    pub cauchy: CauchyConfig,
    pub md: MomentData,
    pub rec: RecurrenceData,
    /// Degrees available to callers; `rec` reaches `n_max + HEADROOM`.
    pub n_max: usize,
    pub requested_n_max: usize,
    /// Measure factor (1 or `1/(2 pi i)`).
    pub scale: C64,
    /// Jump factor `2 pi i * scale` of every Cauchy transform.
    pub kappa: C64,
    pub notes: Vec<String>,
}

/// Cauchy integrals `scale * int P_n(t) omega(t) m! / (t - z)^{m+1} dt`
/// (left) and `omega P_n^R` (right) for every `n` and `m <= order`.
#[derive(Clone, Debug)]
pub struct CauchyValues {
    pub z: C64,
    /// `left[m][n]`.
    pub left: Vec<Vec<CMat>>,
    pub right: Vec<Vec<CMat>>,
}

impl CauchyValues {
    pub fn q(&self, side: Side, order: usize, n: isize) -> CMat {
        if n < 0 {
            let d = self.left[0][0].nrows();
            return if order == 0 { -eye(d) } else { zeros(d) };
        }
        match side {
            Side::Left => self.left[order][n as usize].clone(),
            Side::Right => self.right[order][n as usize].clone(),
        }
    }
}

impl Pipeline {
    pub fn new(spec: WeightSpec, n_max: usize, quad: QuadratureConfig, cauchy: CauchyConfig) -> Result<Self> {
        cauchy.validate()?;
        quad.validate()?;
        if n_max == 0 {
            return Err(MopError::Spec("n_max must be at least 1".into()));
        }
        let n_int = n_max + HEADROOM;
        let md = compute_moments(&spec, n_int + 1, &quad)?;
        let mut notes = Vec::new();
        let mut usable = n_int;
        for r in md.regularity.iter().take(n_int + 1) {
            if !r.regular {
                return Err(MopError::Regularity {
                    n: r.n,
                    detail: format!("|det U_n| = {:e}, pivot margin {:e}", r.det_modulus, r.pivot_margin),
                });
            }
            if r.condition_estimate > CONDITION_CAP {
                usable = r.n - 1;
                break;
            }
        }
        if usable < n_int {
            if usable < 1 + HEADROOM {
                return Err(MopError::Regularity {
                    n: usable + 1,
                    detail: format!("moment matrix condition estimate exceeds {CONDITION_CAP:e}"),
                });
            }
            notes.push(format!(
                "n_max capped from {n_max} to {}: condition estimate of U_{} exceeds {CONDITION_CAP:e}",
                usable - HEADROOM,
                usable + 1
            ));
        }
        let rec = gauss_borel(&md, usable)?;
        let norm = md.normalization;
        Ok(Pipeline {
            spec,
            quad,
            cauchy,
            md,
            rec,
            n_max: usable - HEADROOM,
            requested_n_max: n_max,
            scale: norm.factor(),
            kappa: norm.jump_factor(),
            notes,
        })
    }

    pub fn with_defaults(spec: WeightSpec, n_max: usize) -> Result<Self> {
        Pipeline::new(spec, n_max, QuadratureConfig::default(), CauchyConfig::default())
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Highest degree with polynomials available.
    pub fn n_poly(&self) -> usize {
        self.rec.n_max
    }

    pub fn check_n(&self, n: usize, extra: usize) -> Result<()> {
        if n + extra > self.rec.n_max {
            return Err(MopError::Range(format!("degree {n} (+{extra}) exceeds the factored range {}", self.rec.n_max)));
        }
        Ok(())
    }

    pub fn support_distance(&self, z: C64) -> f64 {
        self.spec.support.distance(z)
    }

    pub fn check_off_support(&self, z: C64) -> Result<()> {
        let d = self.support_distance(z);
        if d < self.cauchy.min_distance {
            return Err(MopError::Proximity { z, distance: d });
        }
        Ok(())
    }

    /// All `P_n(t)` for `n <= rec.n_max` by the three-term recurrence.
    pub fn p_all(&self, side: Side, t: C64) -> Vec<CMat> {
        let d = self.dim();
        let rec = &self.rec;
        let mut out = Vec::with_capacity(rec.n_max + 1);
        out.push(eye(d));
        if rec.n_max == 0 {
            return out;
        }
        let mut prev = zeros(d);
        for n in 0..rec.n_max {
            let cur = out[n].clone();
            let next = match side {
                Side::Left => &cur * t - &rec.beta_l[n] * &cur - &rec.gamma_l[n] * &prev,
                Side::Right => &cur * t - &cur * &rec.beta_r[n] - &prev * &rec.gamma_r[n],
            };
            out.push(next);
            prev = cur;
        }
        out
    }

    /// Largest `|t|` on the integration range.
    fn support_extent(&self) -> Result<f64> {
        Ok(match self.spec.support.kind {
            SupportKind::Circle { center, radius } => center.norm() + radius,
            _ => {
                let (lo, hi) = self.spec.support.ends();
                let r = crate::moments::truncation_radius(&self.spec, &self.quad, self.rec.n_max)?.unwrap_or(0.0);
                lo.map_or(r, f64::abs).max(hi.map_or(r, f64::abs))
            }
        })
    }

    /// Cauchy integrals of all `P_n omega` (left) and `omega P_n^R` (right)
    /// at `z`, kernel derivatives up to `order`.
    ///
    /// Far from the support the kernel is replaced by `(t/z)^n / (t - z)`,
    /// equal to `1/(t - z)` under the integral by orthogonality, which
    /// avoids cancelling the leading `n` terms of the expansion at infinity.
    pub fn cauchy_values(&self, z: C64, order: usize) -> Result<CauchyValues> {
        self.check_off_support(z)?;
        let far = z.norm() > 2.0 * self.support_extent()?;
        let nq = self.rec.n_max + 1;
        let per = 2 * nq;
        let fact: Vec<f64> = (0..=order)
            .scan(1.0, |acc, m| {
                if m > 0 {
                    *acc *= m as f64;
                }
                Some(*acc)
            })
            .collect();
        let kernel_block = |t: C64, pl: &[CMat], pr: &[CMat], w: &CMat, d: C64, jac: C64| -> Vec<CMat> {
            let mut out = Vec::with_capacity(per * (order + 1));
            let inv = C64::new(1.0, 0.0) / d;
            let mut k = inv * jac;
            let mut tn = Vec::with_capacity(nq);
            let mut acc = C64::new(1.0, 0.0);
            for _ in 0..nq {
                tn.push(if far { acc } else { C64::new(1.0, 0.0) });
                acc *= t;
            }
            let pw: Vec<CMat> = pl.iter().zip(&tn).map(|(p, s)| p * w * *s).collect();
            let wp: Vec<CMat> = pr.iter().zip(&tn).map(|(p, s)| w * p * *s).collect();
            for m in 0..=order {
                let km = k * fact[m];
                for v in &pw {
                    out.push(v * km);
                }
                for v in &wp {
                    out.push(v * km);
                }
                k *= inv;
            }
            out
        };
        let raw = if self.spec.support.is_real() {
            let (lo, hi) = self.spec.support.ends();
            let mut breaks = Vec::new();
            if lo.is_none_or(|l| z.re > l) && hi.is_none_or(|h| z.re < h) {
                breaks.push(z.re);
            }
            integrate_real_support(&self.spec, &self.quad, &breaks, self.rec.n_max, |node| {
                let t = c64(node.x, 0.0);
                let d = c64(node.offset(z.re), -z.im);
                let pl = self.p_all(Side::Left, t);
                let pr = self.p_all(Side::Right, t);
                kernel_block(t, &pl, &pr, node.weight, d, c64(1.0, 0.0))
            })?
        } else {
            integrate_circle(&self.spec, &self.quad, |t, dt, w| {
                let pl = self.p_all(Side::Left, t);
                let pr = self.p_all(Side::Right, t);
                kernel_block(t, &pl, &pr, w, t - z, dt)
            })?
        };
        let get = |m: usize, n: usize, right: bool| -> CMat { &raw[m * per + if right { nq } else { 0 } + n] * self.scale };
        let mut left = Vec::with_capacity(order + 1);
        let mut right = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let assemble = |n: usize, r: bool| -> CMat {
                if !far {
                    return get(m, n, r);
                }
                // Leibniz rule for z^{-n} g(z)
                let mut acc = get(m, n, r) * z.powi(-(n as i32));
                let mut binom = 1.0;
                let mut fall = C64::new(1.0, 0.0);
                for i in 1..=m {
                    binom = binom * (m + 1 - i) as f64 / i as f64;
                    fall *= -(n as f64) - (i as f64 - 1.0);
                    acc += get(m - i, n, r) * (fall * binom * z.powi(-(n as i32) - i as i32));
                }
                acc
            };
            left.push((0..nq).map(|n| assemble(n, false)).collect());
            right.push((0..nq).map(|n| assemble(n, true)).collect());
        }
        Ok(CauchyValues { z, left, right })
    }
}
