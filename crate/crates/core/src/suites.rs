//! Verification suites: each one runs a family of identity checks on a
//! pipeline and collects a [`SuiteReport`].

use std::f64::consts::PI;

use crate::diffeq::{
    berezanskii_conjugation_residual, berezanskii_ode_report, chebyshev_block, classical_ode_residual, second_order_residual,
    BerezanskiiCase, ClassicalFamily, OdeKind, OdeVariant,
};
use crate::error::{MopError, Result};
use crate::evaluation::{
    christoffel_darboux_all, eval_p, frame_checks_all, inverse_relation_residuals_all, plemelj_residuals, q_recurrence_residual,
};
use crate::factorization::{biorthogonality_residual, biorthogonality_scale, polynomials_via_linear_solve};
use crate::painleve::{classical_gap, gamma_recursion_hermite, lattice_residuals, LatticeClass, PainleveInput};
use crate::pipeline::Pipeline;
use crate::report::{Method, ResidualReport, SuiteReport};
use crate::structure::{
    compare_structure, first_order_structure_residuals, rh_jump_residual, structure_jump, structure_matrices_numeric,
    structure_matrix_semi, zero_curvature_residual, StructureMatrixClosedForm,
};
use crate::types::{c64, fnorm, CMat, Side, C64};
use crate::weights::{evaluate_weight, pearson_residual, SupportKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Moments,
    Recurrence,
    Biorthogonality,
    Rh,
    Structure,
    ZeroCurvature,
    FirstOrder,
    SecondOrder,
    Painleve,
    Berezanskii,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Moments,
        Suite::Recurrence,
        Suite::Biorthogonality,
        Suite::Rh,
        Suite::Structure,
        Suite::ZeroCurvature,
        Suite::FirstOrder,
        Suite::SecondOrder,
        Suite::Painleve,
        Suite::Berezanskii,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Moments => "moments",
            Suite::Recurrence => "recurrence",
            Suite::Biorthogonality => "biorthogonality",
            Suite::Rh => "rh",
            Suite::Structure => "structure",
            Suite::ZeroCurvature => "zero-curvature",
            Suite::FirstOrder => "first-order",
            Suite::SecondOrder => "second-order",
            Suite::Painleve => "painleve",
            Suite::Berezanskii => "berezanskii",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| MopError::Spec(format!("unknown suite `{s}`")))
    }

    /// Comma-separated list; `all` selects every suite.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        if s.trim() == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        let mut v = s.split(',').filter(|x| !x.trim().is_empty()).map(Suite::parse).collect::<Result<Vec<_>>>()?;
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(MopError::Spec("no suites selected".into()));
        }
        Ok(v)
    }
}

/// Default tolerances, with an optional override applied to every check.
#[derive(Clone, Copy, Debug, Default)]
pub struct Tolerances {
    pub all: Option<f64>,
}

impl Tolerances {
    fn get(&self, default: f64) -> f64 {
        self.all.unwrap_or(default)
    }
}

const OFFSETS: [(f64, f64); 10] = [
    (0.3, 0.8),
    (-0.5, 0.6),
    (0.1, -0.9),
    (0.7, 1.2),
    (-0.2, -0.5),
    (0.6, 0.45),
    (-0.8, 0.7),
    (0.4, -1.1),
    (0.0, 1.3),
    (-0.6, -0.6),
];

/// Fixed off-support points spread around the support, at least a fifth
/// of its width away from it.
pub fn sample_points(p: &Pipeline, count: usize) -> Vec<C64> {
    let kind = p.spec.support.kind;
    (0..count)
        .map(|k| {
            let (a, b) = OFFSETS[k % OFFSETS.len()];
            let (c, s) = match kind {
                SupportKind::RealLine => (0.0, 1.0),
                SupportKind::HalfLine => (1.5, 1.2),
                SupportKind::Interval { a, b } => ((a + b) / 2.0, (b - a) / 2.0),
                SupportKind::Circle { center, radius } => {
                    let rho = if k % 2 == 0 { 0.55 } else { 1.7 };
                    let th = 2.0 * PI * k as f64 / count as f64 + 0.3;
                    return center + C64::from_polar(radius * rho, th);
                }
            };
            c64(c + s * a, s * b)
        })
        .collect()
}

/// Three points strictly inside the support.
pub fn interior_points(p: &Pipeline) -> Vec<C64> {
    match p.spec.support.kind {
        SupportKind::RealLine => vec![c64(0.3, 0.0), c64(-0.6, 0.0), c64(1.1, 0.0)],
        SupportKind::HalfLine => vec![c64(0.5, 0.0), c64(1.3, 0.0), c64(2.4, 0.0)],
        SupportKind::Interval { a, b } => [0.3, 0.55, 0.8].iter().map(|t| c64(a + (b - a) * t, 0.0)).collect(),
        SupportKind::Circle { center, radius } => [0.4, 2.0, 4.1].iter().map(|t| center + C64::from_polar(radius, *t)).collect(),
    }
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    fnorm(&(a - b)) / fnorm(a).max(fnorm(b)).max(1.0)
}

/// Runs one suite. Checks that cannot be evaluated appear as failed rows;
/// a suite that does not apply to the weight is marked skipped.
pub fn run_suite(p: &Pipeline, suite: Suite, tol: &Tolerances) -> SuiteReport {
    let mut rep = SuiteReport::new(suite.name(), p);
    let out = match suite {
        Suite::Moments => moments(p, tol, &mut rep),
        Suite::Recurrence => recurrence(p, tol, &mut rep),
        Suite::Biorthogonality => biorthogonality(p, tol, &mut rep),
        Suite::Rh => rh(p, tol, &mut rep),
        Suite::Structure => structure(p, tol, &mut rep),
        Suite::ZeroCurvature => zero_curvature(p, tol, &mut rep),
        Suite::FirstOrder => first_order(p, tol, &mut rep),
        Suite::SecondOrder => second_order(p, tol, &mut rep),
        Suite::Painleve => painleve(p, tol, &mut rep),
        Suite::Berezanskii => berezanskii(p, tol, &mut rep),
    };
    match out {
        Ok(()) => {}
        Err(MopError::Ingredient(msg)) if rep.results.is_empty() => {
            rep.skipped = true;
            rep.notes.push(format!("skipped: {msg}"));
        }
        Err(e) => rep.push(ResidualReport::failed(suite.name(), None, &e)),
    }
    rep.finish()
}

fn moments(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    rep.push(
        ResidualReport::new("moment-node-doubling", None, None, p.md.doubling_gap, tol.get(1e-9), Method::Numeric)
            .note(format!("{:?} rule, {} nodes", p.md.rule, p.md.nodes)),
    );
    for z in sample_points(p, 3) {
        let w = evaluate_weight(&p.spec, z)?;
        let r = pearson_residual(&p.spec, z, Some(1e-4))? / fnorm(&w).max(1.0);
        rep.push(ResidualReport::new("pearson", None, Some(z), r, tol.get(1e-6), Method::Numeric));
    }
    for r in p.md.regularity.iter().filter(|r| r.n <= p.rec.n_max) {
        rep.push(
            ResidualReport::new("moment-condition", Some(r.n), None, r.condition_estimate, crate::moments::CONDITION_CAP, Method::Numeric)
                .note(format!("log10 |det U_n| = {:.3}", r.log10_det)),
        );
    }
    Ok(())
}

fn recurrence(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    rep.push(ResidualReport::new("gauss-borel-factorization", None, None, p.rec.residual, tol.get(1e-9), Method::Numeric));
    for n in 0..=p.n_max {
        let (pl, pr, c) = polynomials_via_linear_solve(&p.md, n)?;
        let mut gap = rel(&c, &p.rec.c[n]);
        for k in 0..=n {
            gap = gap.max(rel(&pl.coeff(k), &p.rec.polys_l[n].coeff(k))).max(rel(&pr.coeff(k), &p.rec.polys_r[n].coeff(k)));
        }
        rep.push(ResidualReport::new("linear-solve-oracle", Some(n), None, gap, tol.get(1e-8), Method::Both));
    }
    let z = sample_points(p, 1)[0];
    for side in [Side::Left, Side::Right] {
        let all = p.p_all(side, z);
        for n in 0..=p.n_max {
            let r = rel(&all[n], &eval_p(&p.rec, side, n, z)?);
            rep.push(ResidualReport::new(format!("three-term-recurrence-{}", side_tag(side)), Some(n), Some(z), r, tol.get(1e-10), Method::Numeric));
        }
        for n in 0..p.n_max {
            let r = q_recurrence_residual(p, side, n, z)?;
            rep.push(ResidualReport::new(format!("q-recurrence-{}", side_tag(side)), Some(n), Some(z), r, tol.get(1e-8), Method::Numeric));
        }
    }
    if let Some(gap) = classical_gap(p, p.n_max) {
        rep.push(ResidualReport::new("classical-coefficients", None, None, gap, tol.get(1e-8), Method::ClosedForm));
    }
    Ok(())
}

fn side_tag(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn biorthogonality(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    for n in 0..=p.n_max {
        for m in 0..=p.n_max {
            let r = biorthogonality_residual(&p.md, &p.rec, n, m)? / biorthogonality_scale(&p.md, &p.rec, n, m).max(1e-300);
            rep.push(ResidualReport::new("biorthogonality", Some(n), None, r, tol.get(1e-9), Method::Numeric).note(format!("m = {m}")));
        }
    }
    Ok(())
}

fn rh(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    let pts = sample_points(p, 10);
    let t8 = tol.get(1e-8);
    for &z in &pts {
        for (n, c) in frame_checks_all(p, p.n_max, z)?.iter().enumerate() {
            rep.push(ResidualReport::new("det-y-left", Some(n), Some(z), c.det_left, t8, Method::Numeric));
            rep.push(ResidualReport::new("det-y-right", Some(n), Some(z), c.det_right, t8, Method::Numeric));
            rep.push(ResidualReport::new("transfer-left", Some(n), Some(z), c.transfer_left, t8, Method::Numeric));
            rep.push(ResidualReport::new("transfer-right", Some(n), Some(z), c.transfer_right, t8, Method::Numeric));
        }
        for (n, r) in inverse_relation_residuals_all(p, p.n_max, z)?.into_iter().enumerate() {
            rep.push(ResidualReport::new("inverse-relation", Some(n), Some(z), r, t8, Method::Numeric));
        }
    }
    let names = ["christoffel-darboux-pp", "christoffel-darboux-qq", "christoffel-darboux-qp", "christoffel-darboux-pq"];
    for (z, t) in [(pts[0], pts[1]), (pts[2], pts[3]), (pts[4], pts[4])] {
        for (n, r) in christoffel_darboux_all(p, p.n_max, z, t)?.iter().enumerate() {
            for (k, name) in names.iter().enumerate() {
                let note = if z == t { "confluent".to_string() } else { format!("t = {} {:+}i", t.re, t.im) };
                rep.push(ResidualReport::new(*name, Some(n), Some(z), r[k], t8, Method::Numeric).note(note));
            }
        }
    }
    let jump_n = p.n_max.min(4);
    for x in interior_points(p) {
        for (n, r) in plemelj_residuals(p, x, jump_n)?.iter().enumerate() {
            for (k, side) in [Side::Left, Side::Right].iter().enumerate() {
                rep.push(
                    ResidualReport::new(format!("plemelj-{}", side_tag(*side)), Some(n), Some(x), r[k].residual, tol.get(1e-5), Method::Numeric)
                        .note(format!("extrapolation error {:.3e}", r[k].extrapolation_error)),
                );
            }
        }
    }
    let x = interior_points(p)[0];
    for j in rh_jump_residual(p, x, jump_n)? {
        let t = tol.get(1e-6);
        rep.push(ResidualReport::new("y-jump-left", Some(j.n), Some(x), j.left, t, Method::Numeric));
        rep.push(ResidualReport::new("y-jump-right", Some(j.n), Some(x), j.right, t, Method::Numeric));
        rep.push(ResidualReport::new("y-jump-det", Some(j.n), Some(x), j.det_gap, t, Method::Numeric));
    }
    rep.notes.push(format!("boundary-value checks run to n = {jump_n}"));
    Ok(())
}

fn structure(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    let pts = sample_points(p, 2);
    match StructureMatrixClosedForm::for_spec(&p.spec) {
        Ok(cf) => {
            rep.notes.push(format!("closed form: {}", cf.class.name()));
            rep.notes.extend(cf.resolutions.iter().map(|s| s.to_string()));
            for &z in &pts {
                for c in compare_structure(p, &cf, p.n_max, z)? {
                    rep.push(
                        ResidualReport::new("structure-closed-vs-numeric", Some(c.n), Some(z), c.closed_vs_numeric, tol.get(1e-6), Method::Both)
                            .note(format!("step gap {:.3e}", c.step_gap)),
                    );
                    rep.push(ResidualReport::new("structure-closed-vs-semi", Some(c.n), Some(z), c.closed_vs_semi, tol.get(1e-7), Method::Both));
                    rep.push(ResidualReport::new("structure-conjugation", Some(c.n), Some(z), c.conjugation, tol.get(1e-8), Method::Numeric));
                }
            }
        }
        Err(MopError::Ingredient(msg)) => {
            rep.notes.push(format!("no closed form ({msg}); semi-analytic against finite differences only"));
            for &z in &pts {
                let num = structure_matrices_numeric(p, z, None)?;
                let cv = p.cauchy_values(z, 1)?;
                let phi = p.spec.phi.eval(z);
                for n in 0..=p.n_max {
                    let semi = structure_matrix_semi(p, &cv, Side::Left, n)?;
                    let r = rel(&(&num.left[n] * phi), &semi);
                    rep.push(ResidualReport::new("structure-semi-vs-numeric", Some(n), Some(z), r, tol.get(1e-6), Method::Numeric));
                }
            }
        }
        Err(e) => return Err(e),
    }
    if p.spec.support.is_real() {
        let x = interior_points(p)[0];
        for n in 0..=p.n_max.min(3) {
            let (gap, err) = structure_jump(p, n, x)?;
            rep.push(
                ResidualReport::new("structure-no-jump", Some(n), Some(x), gap, tol.get(1e-6), Method::Numeric)
                    .note(format!("extrapolation error {err:.3e}")),
            );
        }
    }
    Ok(())
}

fn zero_curvature(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    let cf = match StructureMatrixClosedForm::for_spec(&p.spec) {
        Ok(cf) => Some(cf),
        Err(MopError::Ingredient(_)) => None,
        Err(e) => return Err(e),
    };
    for z in sample_points(p, 5) {
        let cv = if cf.is_none() { Some(p.cauchy_values(z, 1)?) } else { None };
        let mt = |k: usize| -> Result<CMat> {
            match (&cf, &cv) {
                (Some(cf), _) => cf.eval(p, k, z),
                (None, Some(cv)) => structure_matrix_semi(p, cv, Side::Left, k),
                _ => unreachable!(),
            }
        };
        let method = if cf.is_some() { Method::ClosedForm } else { Method::Numeric };
        for n in 0..=p.n_max {
            let r = zero_curvature_residual(p, n, z, &mt)?;
            rep.push(ResidualReport::new("zero-curvature-left", Some(n), Some(z), r[0], tol.get(1e-6), method));
            rep.push(ResidualReport::new("zero-curvature-right", Some(n), Some(z), r[1], tol.get(1e-6), method));
        }
    }
    Ok(())
}

fn first_order(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    let names = ["first-order-11", "first-order-12", "first-order-21", "first-order-22"];
    for z in sample_points(p, 2) {
        for r in first_order_structure_residuals(p, p.n_max, z)? {
            let method = if r.method == "closed-form" { Method::ClosedForm } else { Method::Numeric };
            for (k, name) in names.iter().enumerate() {
                rep.push(ResidualReport::new(*name, Some(r.n), Some(z), r.residuals[k], tol.get(1e-7), method));
            }
            rep.push(ResidualReport::new("first-order-entry-correspondence", Some(r.n), Some(z), r.entry_correspondence, tol.get(1e-7), method));
        }
    }
    Ok(())
}

fn second_order(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    let pts = sample_points(p, 2);
    for &z in &pts {
        for r in second_order_residual(p, p.n_max, z)? {
            let method = if r.method == "closed-form" { Method::ClosedForm } else { Method::Numeric };
            rep.push(ResidualReport::new("second-order-left", Some(r.n), Some(z), r.left, tol.get(1e-7), method));
            rep.push(ResidualReport::new("second-order-right", Some(r.n), Some(z), r.right, tol.get(1e-7), method));
            if r.n == p.n_max {
                rep.push(
                    ResidualReport::new("second-derivative-difference-check", Some(r.n), Some(z), r.derivative_check, 1e-3, Method::Numeric)
                        .informational(),
                );
            }
        }
    }
    if let Ok(fam) = ClassicalFamily::from_spec(&p.spec) {
        rep.notes.push(format!("classical family {fam:?}"));
        for &z in &pts {
            for n in 0..=p.n_max {
                for kind in [OdeKind::P, OdeKind::Q] {
                    let r = classical_ode_residual(p, fam, kind, n, z)?;
                    let name = if kind == OdeKind::P { "classical-ode-p" } else { "classical-ode-q" };
                    rep.push(ResidualReport::new(name, Some(n), Some(z), r.residual, tol.get(1e-9), Method::Both));
                    if kind == OdeKind::P && z == pts[0] {
                        rep.push(ResidualReport::new("classical-oracle-coefficients", Some(n), None, r.oracle_gap, tol.get(1e-8), Method::ClosedForm));
                    }
                }
            }
        }
    }
    Ok(())
}

fn painleve(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    let inp = PainleveInput::from_pipeline(p)?;
    rep.notes.push(format!("lattice class {}", inp.class.name()));
    rep.notes.extend(inp.class.resolutions().iter().map(|s| format!("resolution: {s}")));
    let t = tol.get(1e-6_f64.max(1e3 * p.rec.residual));
    if inp.class == LatticeClass::HermiteQuadratic {
        match gamma_recursion_hermite(&inp) {
            Ok(g) => {
                for g in g {
                    rep.push(ResidualReport::new("gamma-recursion", Some(g.n), None, g.error, tol.get(1e-7), Method::Both));
                }
            }
            Err(e @ MopError::Degenerate { n }) => rep.push(ResidualReport::failed("gamma-recursion", Some(n), &e)),
            Err(e) => return Err(e),
        }
    }
    let names: &[&str] = match inp.class {
        LatticeClass::HermiteQuadratic => &["alt-dpi"],
        LatticeClass::LaguerreQuadratic => &["laguerre-lattice-1", "laguerre-lattice-2"],
        LatticeClass::JacobiQuadratic => &["jacobi-lattice-1", "jacobi-lattice-2"],
    };
    let rows = lattice_residuals(&inp)?;
    let mut from_one: f64 = 0.0;
    for r in &rows {
        for (k, name) in names.iter().enumerate() {
            rep.push(ResidualReport::new(*name, Some(r.n), None, r.derived[k], t, Method::Both));
            rep.push(ResidualReport::new(format!("{name}-printed"), Some(r.n), None, r.printed[k], t, Method::Both).informational());
            if r.n >= 1 {
                from_one = from_one.max(r.derived[k]);
            }
        }
    }
    let from_zero = rows.iter().flat_map(|r| r.derived.iter().copied()).fold(0.0, f64::max);
    rep.notes.push(format!("largest lattice residual for n >= 0: {from_zero:.3e}; for n >= 1: {from_one:.3e}"));
    if let Some(gap) = classical_gap(p, p.n_max) {
        rep.push(ResidualReport::new("classical-coefficients", None, None, gap, tol.get(1e-9), Method::ClosedForm));
    }
    Ok(())
}

fn berezanskii(p: &Pipeline, tol: &Tolerances, rep: &mut SuiteReport) -> Result<()> {
    if p.spec.berezanskii.is_none() {
        return Err(MopError::Ingredient(format!("`{}` is not a Berezanskii weight", p.spec.name)));
    }
    let case = match BerezanskiiCase::from_spec(&p.spec) {
        Ok(c) => c,
        Err(MopError::Ingredient(_)) => {
            let pts: Vec<f64> = (0..20).map(|i| -0.95 + 0.1 * i as f64).collect();
            for n in 0..=p.n_max {
                let gap = chebyshev_block_gap_at(p, n, &pts)?;
                rep.push(ResidualReport::new("chebyshev-block-closed-form", Some(n), None, gap, tol.get(1e-8), Method::ClosedForm));
            }
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    rep.notes.push(format!("case {case:?}"));
    let gating = |k: OdeKind, v: OdeVariant| match case {
        BerezanskiiCase::Laguerre { .. } => v == OdeVariant::Printed,
        BerezanskiiCase::Jacobi { .. } => matches!((k, v), (OdeKind::P, OdeVariant::Corrected) | (OdeKind::Q, OdeVariant::PhiForm)),
    };
    for z in sample_points(p, 2) {
        for n in 0..=p.n_max {
            for r in berezanskii_ode_report(p, n, z)? {
                let kind = if r.kind == OdeKind::P { "p" } else { "q" };
                let variant = serde_json::to_value(r.variant).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let row = ResidualReport::new(format!("berezanskii-ode-{kind}-{variant}"), Some(n), Some(z), r.residual, tol.get(1e-8), Method::Both);
                rep.push(if gating(r.kind, r.variant) { row } else { row.informational() });
            }
            let c = berezanskii_conjugation_residual(p, n, z)?;
            rep.push(ResidualReport::new("berezanskii-conjugation", Some(n), Some(z), c, tol.get(1e-8), Method::Both));
        }
    }
    Ok(())
}

fn chebyshev_block_gap_at(p: &Pipeline, n: usize, pts: &[f64]) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for &x in pts {
        let d = eval_p(&p.rec, Side::Left, n, c64(x, 0.0))? - chebyshev_block(n, x);
        gap = d.iter().map(|e| e.norm()).fold(gap, f64::max);
    }
    Ok(gap)
}
