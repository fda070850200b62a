//! Acceptance criteria 1-10. Each test prints one line:
//! `criterion N PASS|FAIL worst=<residual> tol=<tol> time=<secs>`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mopkit::builtin::{builtin, BUILTINS};
use mopkit::diffeq::{chebyshev_block_gap, classical_ode_residual, ClassicalFamily, OdeKind};
use mopkit::evaluation::{christoffel_darboux_all, frame_checks_all, inverse_relation_residuals_all, plemelj_residuals};
use mopkit::factorization::{gauss_borel, polynomials_via_linear_solve};
use mopkit::moments::{compute_moments, QuadratureConfig};
use mopkit::painleve::{alt_dpi_residual, classical_gap, gamma_recursion_hermite, lattice_residuals, PainleveInput};
use mopkit::structure::{compare_structure, zero_curvature_residual, StructureMatrixClosedForm};
use mopkit::suites::{interior_points, sample_points};
use mopkit::types::fnorm;
use mopkit::{MatrixPolynomial, Pipeline, Side};

fn pipeline(name: &str, n_max: usize) -> Pipeline {
    Pipeline::with_defaults(builtin(name).unwrap(), n_max).unwrap()
}

/// Prints the criterion line and fails the test if any check missed or the
/// runtime budget was exceeded.
fn report(id: &str, checks: &[(f64, f64)], start: Instant, budget: f64) {
    let secs = start.elapsed().as_secs_f64();
    let ok = !checks.is_empty() && checks.iter().all(|(r, t)| r.is_finite() && r < t) && secs < budget;
    let ratio = |c: &(f64, f64)| if c.0.is_finite() { c.0 / c.1 } else { f64::INFINITY };
    let (worst, tol) = checks.iter().copied().max_by(|a, b| ratio(a).total_cmp(&ratio(b))).unwrap_or((f64::NAN, 0.0));
    println!(
        "criterion {id} {} worst={worst:.3e} tol={tol:.0e} checks={} time={secs:.2}s budget={budget}s",
        if ok { "PASS" } else { "FAIL" },
        checks.len()
    );
    assert!(ok, "criterion {id}: worst residual {worst:e} against {tol:e}");
}

fn max_coeff(p: &MatrixPolynomial) -> f64 {
    p.coeffs().iter().map(fnorm).fold(0.0, f64::max)
}

fn coeff_gap(a: &MatrixPolynomial, b: &MatrixPolynomial) -> f64 {
    let n = a.coeffs().len().max(b.coeffs().len());
    let d = (0..n).map(|k| fnorm(&(a.coeff(k) - b.coeff(k)))).fold(0.0, f64::max);
    d / max_coeff(b).max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_01_hermite_coefficients() {
    let t = Instant::now();
    let p = pipeline("hermite-scalar", 10);
    let mut checks = Vec::new();
    for n in 0..=10 {
        let b = p.rec.beta(Side::Left, n)[(0, 0)];
        let g = p.rec.gamma(Side::Left, n)[(0, 0)];
        checks.push((b.norm(), 1e-8));
        checks.push(((g - n as f64 / 2.0).norm(), 1e-8));
    }
    report("1", &checks, t, 5.0);
}

#[test]
fn criterion_02_chebyshev_block() {
    let t = Instant::now();
    let p = pipeline("berezanskii-chebyshev", 8);
    let pts: Vec<f64> = (0..20).map(|i| -0.95 + 0.1 * i as f64).collect();
    let gap = chebyshev_block_gap(&p, 8, &pts).unwrap();
    report("2", &[(gap, 1e-8)], t, 10.0);
}

#[test]
fn criterion_03_det_and_inverse() {
    let t = Instant::now();
    let mut checks = Vec::new();
    for name in ["hermite-scalar", "hermite-nilpotent"] {
        let p = pipeline(name, 6);
        for z in sample_points(&p, 10) {
            for c in frame_checks_all(&p, 6, z).unwrap() {
                checks.push((c.det_left, 1e-8));
                checks.push((c.det_right, 1e-8));
            }
            for r in inverse_relation_residuals_all(&p, 6, z).unwrap() {
                checks.push((r, 1e-8));
            }
        }
    }
    report("3", &checks, t, 30.0);
}

#[test]
fn criterion_04_christoffel_darboux() {
    let t = Instant::now();
    let mut checks = Vec::new();
    for name in ["hermite-scalar", "berezanskii-chebyshev"] {
        let p = pipeline(name, 6);
        let pts = sample_points(&p, 5);
        for (z, w) in [(pts[0], pts[1]), (pts[2], pts[3]), (pts[4], pts[4])] {
            for r in christoffel_darboux_all(&p, 6, z, w).unwrap() {
                checks.extend(r.iter().map(|x| (*x, 1e-8)));
            }
        }
    }
    report("4", &checks, t, 30.0);
}

#[test]
fn criterion_05_plemelj_jump() {
    let t = Instant::now();
    let mut checks = Vec::new();
    for name in ["hermite-scalar", "hermite-nilpotent"] {
        let p = pipeline(name, 4);
        for x in interior_points(&p).into_iter().take(3) {
            for r in plemelj_residuals(&p, x, 4).unwrap() {
                checks.extend(r.iter().map(|j| (j.residual, 1e-5)));
            }
        }
    }
    report("5", &checks, t, 30.0);
}

#[test]
fn criterion_06_structure_and_zero_curvature() {
    let t = Instant::now();
    let mut checks = Vec::new();
    for name in ["hermite-scalar", "hermite-nilpotent"] {
        let p = pipeline(name, 4);
        let cf = StructureMatrixClosedForm::for_spec(&p.spec).unwrap();
        for z in sample_points(&p, 2) {
            for c in compare_structure(&p, &cf, 4, z).unwrap() {
                checks.push((c.closed_vs_numeric, 1e-6));
            }
        }
        for z in sample_points(&p, 5) {
            let mt = |k: usize| cf.eval(&p, k, z);
            for n in 0..=4 {
                checks.extend(zero_curvature_residual(&p, n, z, &mt).unwrap().iter().map(|r| (*r, 1e-6)));
            }
        }
    }
    report("6", &checks, t, 60.0);
}

#[test]
fn criterion_07_second_order_equations() {
    let t = Instant::now();
    let mut checks = Vec::new();
    for (name, tol) in [("hermite-scalar", 1e-7), ("laguerre-scalar(0.5)", 1e-9), ("jacobi-scalar(0.5,1.5)", 1e-9)] {
        let p = pipeline(name, 6);
        let fam = ClassicalFamily::from_spec(&p.spec).unwrap();
        for z in sample_points(&p, 2) {
            for n in 0..=6 {
                for kind in [OdeKind::P, OdeKind::Q] {
                    checks.push((classical_ode_residual(&p, fam, kind, n, z).unwrap().residual, tol));
                }
            }
        }
    }
    report("7", &checks, t, 30.0);
}

#[test]
fn criterion_08_painleve_lattices() {
    let t = Instant::now();
    let mut checks = Vec::new();
    // (a) scalar Laguerre: pipeline data against the closed forms, and the lattice itself.
    let p = pipeline("laguerre-scalar(0.5)", 6);
    checks.push((classical_gap(&p, 6).unwrap(), 1e-9));
    for r in lattice_residuals(&PainleveInput::from_pipeline(&p).unwrap()).unwrap() {
        checks.extend(r.derived.iter().map(|x| (*x, 1e-6)));
    }
    // (b) nilpotent Hermite.
    let p = pipeline("hermite-nilpotent", 4);
    let inp = PainleveInput::from_pipeline(&p).unwrap();
    for n in 0..=4 {
        checks.extend(alt_dpi_residual(&inp, n).unwrap().derived.iter().map(|x| (*x, 1e-6)));
    }
    for g in gamma_recursion_hermite(&inp).unwrap() {
        checks.push((g.error, 1e-7));
    }
    // (c) scalar Jacobi.
    let p = pipeline("jacobi-scalar(0.5,1.5)", 5);
    for r in lattice_residuals(&PainleveInput::from_pipeline(&p).unwrap()).unwrap() {
        checks.extend(r.derived.iter().map(|x| (*x, 1e-6)));
    }
    report("8", &checks, t, 60.0);
}

#[test]
fn criterion_09_linear_solve_oracle() {
    let t = Instant::now();
    let mut checks = Vec::new();
    for (name, _) in BUILTINS {
        let md = compute_moments(&builtin(name).unwrap(), 6, &QuadratureConfig::default()).unwrap();
        let rec = gauss_borel(&md, 6).unwrap();
        for n in 0..=6 {
            let (pl, pr, c) = polynomials_via_linear_solve(&md, n).unwrap();
            let cgap: f64 = fnorm(&(&c - &rec.c[n])) / fnorm(&rec.c[n]);
            let gap = coeff_gap(&pl, rec.poly(Side::Left, n)).max(coeff_gap(&pr, rec.poly(Side::Right, n))).max(cgap);
            checks.push((gap, 1e-8));
        }
    }
    report("9", &checks, t, 30.0);
}

fn run_verify(out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_mopkit"))
        .args(["verify", "--spec", "builtin:hermite-nilpotent", "--nmax", "4", "--out"])
        .arg(out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n != "metadata.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("mopkit-acceptance-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

#[test]
fn criterion_10_determinism() {
    let t = Instant::now();
    let (a, b) = (scratch("a"), scratch("b"));
    run_verify(&a);
    run_verify(&b);
    let (fa, fb) = (artifacts(&a), artifacts(&b));
    let same = fa.len() > 1 && fa == fb;
    let _ = fs::remove_dir_all(&a);
    let _ = fs::remove_dir_all(&b);
    report("10", &[(if same { 0.0 } else { 1.0 }, 0.5)], t, f64::INFINITY);
}
