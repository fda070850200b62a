//! Non-Abelian discrete Painlevé lattices for the recurrence coefficients
//! of quadratic Pearson weights.
//!
//! Each equation is evaluated in two forms: as displayed in the usual
//! statement (`printed`) and as rederived from the zero-curvature relation
//! with this crate's conventions (`derived`). The derived form is the one
//! that reduces to the classical scalar recurrences.

use serde::Serialize;

use crate::error::{MopError, Result};
use crate::factorization::RecurrenceData;
use crate::pipeline::Pipeline;
use crate::quad::KahanMat;
use crate::types::{comm, eye, fnorm, inverse, zeros, CMat, Side};
use crate::weights::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeClass {
    HermiteQuadratic,
    LaguerreQuadratic,
    JacobiQuadratic,
}

impl LatticeClass {
    pub fn name(&self) -> &'static str {
        match self {
            LatticeClass::HermiteQuadratic => "hermite-quadratic",
            LatticeClass::LaguerreQuadratic => "laguerre-quadratic",
            LatticeClass::JacobiQuadratic => "jacobi-quadratic",
        }
    }

    /// Symbol choices made where the displayed equations are ambiguous.
    pub fn resolutions(&self) -> Vec<&'static str> {
        match self {
            LatticeClass::HermiteQuadratic => vec![
                "bracket symbols beta, gamma in the gamma-recursion and lattice read as mu, nu",
                "lattice sign of mu beta_n is +, [mu, Sigma_n] carries no (I + beta_n) factor",
                "[nu, Sigma_n] multiplies Sigma_n + beta_n",
                "sums over k < n are empty at n = 0",
            ],
            LatticeClass::LaguerreQuadratic => vec![
                "C_L in M21 read as h_2",
                "double sum read as sum over k < m < n of beta_m beta_k",
                "sign of [Sigma_n, h_1] is +",
                "first-equation commutator multiplies Sigma_n + beta_n",
                "second-equation sums are Sigma_{n-1} (left) and +Sigma_n (right)",
            ],
            LatticeClass::JacobiQuadratic => vec![
                "first equation rebuilt from p^1_L, p^2_L, p^1_R: the displayed Sigma terms carry the wrong sign",
                "second equation: sums as for the Laguerre system, last term [C_n^{-1} p^1_{R,n} C_n, beta_n]",
            ],
        }
    }
}

/// Pearson data and pipeline recurrence data for one lattice.
#[derive(Clone, Debug)]
pub struct PainleveInput<'a> {
    pub class: LatticeClass,
    /// `(lambda, mu, nu)` for Hermite, `(h_0, h_1, h_2)` otherwise.
    pub h: [CMat; 3],
    pub rec: &'a RecurrenceData,
    pub n_range: (usize, usize),
}

impl<'a> PainleveInput<'a> {
    pub fn new(class: LatticeClass, h: [CMat; 3], rec: &'a RecurrenceData, n_range: (usize, usize)) -> Result<Self> {
        let d = rec.dim;
        if h.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(MopError::Spec(format!("lattice coefficients must be {d}x{d}")));
        }
        if n_range.0 > n_range.1 || n_range.1 + 2 > rec.n_max {
            return Err(MopError::Range(format!(
                "lattice range {}..={} needs recurrence data through {}, have {}",
                n_range.0,
                n_range.1,
                n_range.1 + 2,
                rec.n_max
            )));
        }
        Ok(PainleveInput { class, h, rec, n_range })
    }

    pub fn class_of(spec: &WeightSpec) -> Result<LatticeClass> {
        if !spec.hr_is_zero() {
            return Err(MopError::Ingredient("lattices need a one-sided Pearson equation".into()));
        }
        if spec.phi.same_as(&[1.0]) {
            Ok(LatticeClass::HermiteQuadratic)
        } else if spec.phi.same_as(&[0.0, 1.0]) {
            Ok(LatticeClass::LaguerreQuadratic)
        } else if spec.phi.same_as(&[0.0, 1.0, -1.0]) {
            Ok(LatticeClass::JacobiQuadratic)
        } else {
            Err(MopError::Ingredient(format!("no lattice for phi of `{}`", spec.name)))
        }
    }

    /// Input over the pipeline's whole degree range.
    pub fn from_pipeline(p: &'a Pipeline) -> Result<Self> {
        let class = Self::class_of(&p.spec)?;
        let h = [p.spec.h_l.coeff(0), p.spec.h_l.coeff(1), p.spec.h_l.coeff(2)];
        PainleveInput::new(class, h, &p.rec, (0, p.n_max))
    }

    fn beta(&self, n: isize) -> CMat {
        if n < 0 {
            zeros(self.rec.dim)
        } else {
            self.rec.beta_l[n as usize].clone()
        }
    }

    fn gamma(&self, n: usize) -> CMat {
        self.rec.gamma_l[n].clone()
    }
}

/// Compensated partial sums up to degree `top`, accumulated in order:
/// `sigma[n] = sum_{k<n} beta_k`, `sg[n] = sum_{1<=m<n} gamma_m`,
/// `sbb[n] = sum_{k<m<n} beta_m beta_k`.
struct Sums {
    sigma: Vec<CMat>,
    sg: Vec<CMat>,
    sbb: Vec<CMat>,
}

impl Sums {
    fn new(inp: &PainleveInput, top: usize) -> Sums {
        let d = inp.rec.dim;
        let (mut s, mut g, mut b) = (KahanMat::new(d, d), KahanMat::new(d, d), KahanMat::new(d, d));
        let mut out = Sums { sigma: Vec::new(), sg: Vec::new(), sbb: Vec::new() };
        for n in 0..=top {
            out.sigma.push(s.value());
            out.sg.push(g.value());
            out.sbb.push(b.value());
            let beta = inp.beta(n as isize);
            b.add(&(&beta * s.value()));
            s.add(&beta);
            if n >= 1 {
                g.add(&inp.gamma(n));
            }
        }
        out
    }

    fn sigma(&self, n: isize) -> CMat {
        if n <= 0 {
            zeros(self.sigma[0].nrows())
        } else {
            self.sigma[n as usize].clone()
        }
    }
}

/// Size of a lattice expression relative to its largest term.
fn relative(terms: &[CMat]) -> f64 {
    let mut sum = zeros(terms[0].nrows());
    for t in terms {
        sum += t;
    }
    let scale = terms.iter().map(fnorm).fold(1.0, f64::max);
    fnorm(&sum) / scale
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaPrediction {
    pub n: usize,
    #[serde(skip)]
    pub predicted: CMat,
    /// `||predicted - gamma_{n+1}|| / max(1, ||gamma_{n+1}||)`.
    pub error: f64,
}

/// `gamma_{n+1} = -(n+1) (mu + [nu, Sigma_n] + nu (beta_n + beta_{n+1}))^{-1}`
/// for every `n` in range, compared with the pipeline values.
pub fn gamma_recursion_hermite(inp: &PainleveInput) -> Result<Vec<GammaPrediction>> {
    if inp.class != LatticeClass::HermiteQuadratic {
        return Err(MopError::Ingredient("the gamma recursion is for Hermite-class weights".into()));
    }
    let [_, mu, nu] = &inp.h;
    let sums = Sums::new(inp, inp.n_range.1 + 1);
    let mut out = Vec::new();
    for n in inp.n_range.0..=inp.n_range.1 {
        let s = sums.sigma(n as isize);
        let g = mu + comm(nu, &s) + nu * (inp.beta(n as isize) + inp.beta(n as isize + 1));
        let gi = inverse(&g, "bracket").map_err(|_| MopError::Degenerate { n })?;
        if !gi.iter().all(|v| v.is_finite()) || fnorm(&gi) * fnorm(&g) > 1e14 {
            return Err(MopError::Degenerate { n });
        }
        let predicted = gi * crate::types::c64(-((n + 1) as f64), 0.0);
        let actual = inp.gamma(n + 1);
        let error = fnorm(&(&predicted - &actual)) / fnorm(&actual).max(1.0);
        out.push(GammaPrediction { n, predicted, error });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeResidual {
    pub n: usize,
    /// One entry per equation of the system.
    pub printed: Vec<f64>,
    pub derived: Vec<f64>,
}

/// Hermite-class alt-dPI residual at `n`.
pub fn alt_dpi_residual(inp: &PainleveInput, n: usize) -> Result<LatticeResidual> {
    if inp.class != LatticeClass::HermiteQuadratic {
        return Err(MopError::Ingredient("alt-dPI is for Hermite-class weights".into()));
    }
    check(inp, n)?;
    let [lam, mu, nu] = &inp.h;
    let sums = Sums::new(inp, n + 1);
    let s = sums.sigma(n as isize);
    let b = inp.beta(n as isize);
    let id = eye(inp.rec.dim);
    let inner = &sums.sg[n] - &sums.sbb[n];
    let common = nu * (inp.gamma(n) + inp.gamma(n + 1) + &b * &b);
    let printed = relative(&[
        lam.clone(),
        common.clone(),
        -(mu * &b),
        comm(mu, &s) * (&id + &b),
        comm(nu, &inner),
        comm(nu, &s) * &s,
    ]);
    let derived = relative(&[lam.clone(), common, mu * &b, comm(mu, &s), comm(nu, &inner), comm(nu, &s) * (&s + &b)]);
    Ok(LatticeResidual { n, printed: vec![printed], derived: vec![derived] })
}

fn check(inp: &PainleveInput, n: usize) -> Result<()> {
    if n < inp.n_range.0 || n > inp.n_range.1 {
        return Err(MopError::Range(format!("degree {n} outside the lattice range")));
    }
    Ok(())
}

fn scalar(d: usize, v: f64) -> CMat {
    eye(d) * crate::types::c64(v, 0.0)
}

/// The two Laguerre-class equations at `n`.
pub fn dpiv_residuals_laguerre(inp: &PainleveInput, n: usize) -> Result<LatticeResidual> {
    if inp.class != LatticeClass::LaguerreQuadratic {
        return Err(MopError::Ingredient("this system is for Laguerre-class weights".into()));
    }
    check(inp, n)?;
    let d = inp.rec.dim;
    let [h0, h1, h2] = &inp.h;
    let sums = Sums::new(inp, n + 1);
    let (s, s_prev, s_next) = (sums.sigma(n as isize), sums.sigma(n as isize - 1), sums.sigma(n as isize + 1));
    let (b, bm, bp) = (inp.beta(n as isize), inp.beta(n as isize - 1), inp.beta(n as isize + 1));
    let (g, gp) = (inp.gamma(n), inp.gamma(n + 1));
    let head = [scalar(d, (2 * n + 1) as f64), h0.clone(), h2 * (&g + &gp), (h2 * &b + h1) * &b];
    let lhs2 = [b.clone(), -(&g * (h2 * (&b + &bm) + h1)), (h2 * (&b + &bp) + h1) * &gp];

    let mut p1: Vec<CMat> = head.to_vec();
    p1.extend([-(comm(&s, h2) * &s_next), comm(&(&s * &s - &sums.sg[n]), h2), comm(&s, h1)]);
    let mut d1: Vec<CMat> = head.to_vec();
    d1.extend([-(comm(&s, h2) * (&s + &b)), comm(&(&sums.sbb[n] - &sums.sg[n]), h2), -comm(&s, h1)]);

    let mut p2: Vec<CMat> = lhs2.to_vec();
    p2.extend([&g * comm(&s, h2), comm(&s, h2) * &gp]);
    let mut d2: Vec<CMat> = lhs2.to_vec();
    d2.extend([&g * comm(&s_prev, h2), -(comm(&s, h2) * &gp)]);
    Ok(LatticeResidual { n, printed: vec![relative(&p1), relative(&p2)], derived: vec![relative(&d1), relative(&d2)] })
}

/// The two Jacobi-class equations at `n`.
pub fn dpiv_residuals_jacobi(inp: &PainleveInput, n: usize) -> Result<LatticeResidual> {
    if inp.class != LatticeClass::JacobiQuadratic {
        return Err(MopError::Ingredient("this system is for Jacobi-class weights".into()));
    }
    check(inp, n)?;
    let d = inp.rec.dim;
    let rec = inp.rec;
    let [h0, h1, h2] = &inp.h;
    let sums = Sums::new(inp, n + 1);
    let (s, s_prev, s_next) = (sums.sigma(n as isize), sums.sigma(n as isize - 1), sums.sigma(n as isize + 1));
    let (b, bm, bp) = (inp.beta(n as isize), inp.beta(n as isize - 1), inp.beta(n as isize + 1));
    let (g, gp) = (inp.gamma(n), inp.gamma(n + 1));
    let (c, ci) = (&rec.c[n], &rec.c_inv[n]);
    let nf = n as f64;
    let head = [
        scalar(d, 2.0 * nf + 1.0),
        h0.clone(),
        h2 * (&g + &gp),
        (h2 * &b + h1 - scalar(d, 2.0 * nf + 1.0)) * &b,
    ];
    let lhs2 = [
        b.clone(),
        -(&b * &b),
        -(&g * (h2 * (&b + &bm) + h1 - scalar(d, 2.0 * nf - 1.0))),
        (h2 * (&b + &bp) + h1 - scalar(d, 2.0 * nf + 3.0)) * &gp,
    ];

    let mut p1: Vec<CMat> = head.to_vec();
    p1.extend([
        s.clone(),
        ci * &s_next * c,
        -(comm(&s, h2) * &s_next),
        comm(&(&s * &s - &sums.sg[n]), h2),
        comm(&s, h1),
    ]);
    let mut p2: Vec<CMat> = lhs2.to_vec();
    p2.extend([-(&g * comm(&s_prev, h2)), comm(&s, h2) * &gp, comm(&s, &s_next)]);

    let pn = rec.p1(Side::Left, n);
    let p2n = rec.p(Side::Left, 2, n);
    let x = ci * rec.p1(Side::Right, n) * c;
    let mut d1: Vec<CMat> = head.to_vec();
    d1.extend([
        comm(&pn, h1),
        comm(&p2n, h2),
        comm(h2, &pn) * &pn,
        comm(&pn, h2) * &b,
        pn.clone(),
        ci * rec.p1(Side::Right, n + 1) * c,
    ]);
    let mut d2: Vec<CMat> = lhs2.to_vec();
    d2.extend([&g * comm(&s_prev, h2), -(comm(&s, h2) * &gp), -comm(&x, &b)]);
    Ok(LatticeResidual { n, printed: vec![relative(&p1), relative(&p2)], derived: vec![relative(&d1), relative(&d2)] })
}

/// Residuals of the system matching the input class, every `n` in range.
pub fn lattice_residuals(inp: &PainleveInput) -> Result<Vec<LatticeResidual>> {
    (inp.n_range.0..=inp.n_range.1)
        .map(|n| match inp.class {
            LatticeClass::HermiteQuadratic => alt_dpi_residual(inp, n),
            LatticeClass::LaguerreQuadratic => dpiv_residuals_laguerre(inp, n),
            LatticeClass::JacobiQuadratic => dpiv_residuals_jacobi(inp, n),
        })
        .collect()
}

/// Known `(beta_n, gamma_n)` for the scalar classical weights, or `None`.
pub fn classical_coefficients(spec: &WeightSpec, n: usize) -> Option<(f64, f64)> {
    use crate::diffeq::ClassicalFamily;
    let fam = ClassicalFamily::from_spec(spec).ok()?;
    let nf = n as f64;
    Some(match fam {
        ClassicalFamily::Hermite => (0.0, nf / 2.0),
        ClassicalFamily::Laguerre { alpha } => (2.0 * nf + 1.0 + alpha, nf * (nf + alpha)),
        ClassicalFamily::Jacobi { alpha: a, beta: b } => {
            // x^a (1-x)^b on (0,1)
            let s = 2.0 * nf + a + b;
            let beta = if n == 0 { (a + 1.0) / (a + b + 2.0) } else { 0.5 * (1.0 + (a * a - b * b) / (s * (s + 2.0))) };
            let gamma = if n == 0 {
                0.0
            } else if n == 1 {
                (a + 1.0) * (b + 1.0) / ((a + b + 2.0).powi(2) * (a + b + 3.0))
            } else {
                nf * (nf + a) * (nf + b) * (nf + a + b) / (s * s * (s + 1.0) * (s - 1.0))
            };
            (beta, gamma)
        }
    })
}

/// Largest gap between pipeline `(beta_n, gamma_n)` and the classical
/// closed forms over `0..=n_max`, or `None` when the weight has none.
pub fn classical_gap(p: &Pipeline, n_max: usize) -> Option<f64> {
    let mut gap: f64 = 0.0;
    for n in 0..=n_max {
        let (b, g) = classical_coefficients(&p.spec, n)?;
        gap = gap.max((p.rec.beta_l[n][(0, 0)].re - b).abs()).max((p.rec.gamma_l[n][(0, 0)].re - g).abs());
        gap = gap.max(p.rec.beta_l[n][(0, 0)].im.abs()).max(p.rec.gamma_l[n][(0, 0)].im.abs());
    }
    Some(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;

    fn pipe(name: &str, n: usize) -> Pipeline {
        Pipeline::with_defaults(builtin(name).unwrap(), n).unwrap()
    }

    #[test]
    fn gaussian_reduction() {
        let p = pipe("hermite-scalar", 8);
        let inp = PainleveInput::from_pipeline(&p).unwrap();
        for g in gamma_recursion_hermite(&inp).unwrap() {
            assert!(g.error < 1e-10, "{g:?}");
            assert!((g.predicted[(0, 0)].re - (g.n + 1) as f64 / 2.0).abs() < 1e-10);
        }
        for r in lattice_residuals(&inp).unwrap() {
            assert!(r.derived[0] < 1e-10 && r.printed[0] < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn nilpotent_hermite() {
        let p = pipe("hermite-nilpotent", 4);
        let inp = PainleveInput::from_pipeline(&p).unwrap();
        for g in gamma_recursion_hermite(&inp).unwrap() {
            assert!(g.error < 1e-7, "{g:?}");
        }
        let half_lambda = &inp.h[0] * crate::types::c64(0.5, 0.0);
        for r in lattice_residuals(&inp).unwrap() {
            assert!(r.derived[0] < 1e-6, "{r:?}");
            assert!(r.printed[0] > 1e-3, "{r:?}");
            assert!(fnorm(&(&p.rec.beta_l[r.n] - &half_lambda)) < 1e-7);
        }
    }

    #[test]
    fn coupled_hermite_commutators() {
        let p = pipe("hermite-coupled", 4);
        let inp = PainleveInput::from_pipeline(&p).unwrap();
        for g in gamma_recursion_hermite(&inp).unwrap() {
            assert!(g.error < 1e-7, "{g:?}");
        }
        for r in lattice_residuals(&inp).unwrap() {
            assert!(r.derived[0] < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn singular_bracket_is_degenerate() {
        let p = pipe("hermite-scalar", 3);
        let inp = PainleveInput::new(LatticeClass::HermiteQuadratic, [zeros(1), zeros(1), zeros(1)], &p.rec, (0, 2)).unwrap();
        assert!(matches!(gamma_recursion_hermite(&inp), Err(MopError::Degenerate { n: 0 })));
    }

    #[test]
    fn scalar_laguerre_reduction() {
        for alpha in [0.0, 0.5, 1.5] {
            let p = pipe(&format!("laguerre-scalar({alpha})"), 6);
            assert!(classical_gap(&p, 6).unwrap() < 1e-9);
            let inp = PainleveInput::from_pipeline(&p).unwrap();
            for r in lattice_residuals(&inp).unwrap() {
                assert!(r.derived.iter().all(|v| *v < 1e-9), "{r:?}");
            }
        }
    }

    #[test]
    fn quadratic_laguerre() {
        let p = pipe("laguerre-quadratic-2x2", 4);
        let inp = PainleveInput::from_pipeline(&p).unwrap();
        for r in lattice_residuals(&inp).unwrap() {
            assert!(r.derived.iter().all(|v| *v < 1e-6), "{r:?}");
        }
    }

    #[test]
    fn scalar_jacobi_reduction() {
        for (a, b) in [(0.0, 0.0), (0.5, 1.5), (1.0, 1.0)] {
            let p = pipe(&format!("jacobi-scalar({a},{b})"), 5);
            assert!(classical_gap(&p, 5).unwrap() < 1e-9);
            let inp = PainleveInput::from_pipeline(&p).unwrap();
            for r in lattice_residuals(&inp).unwrap() {
                assert!(r.derived.iter().all(|v| *v < 1e-8), "{a} {b} {r:?}");
            }
        }
        let p = pipe("jacobi-scalar(0.7,0.7)", 5);
        for n in 0..=5 {
            assert!((p.rec.beta_l[n][(0, 0)].re - 0.5).abs() < 1e-8, "{n} {}", p.rec.beta_l[n]);
        }
    }

    #[test]
    fn quadratic_jacobi() {
        let p = pipe("jacobi-quadratic-2x2", 4);
        let inp = PainleveInput::from_pipeline(&p).unwrap();
        for r in lattice_residuals(&inp).unwrap() {
            assert!(r.derived.iter().all(|v| *v < 1e-6), "{r:?}");
        }
    }
}
