//! Identities checked across randomly drawn weight parameters.

use mopkit::builtin::builtin;
use mopkit::diffeq::{chebyshev_block_gap, classical_ode_residual, ClassicalFamily, OdeKind};
use mopkit::evaluation::{christoffel_darboux_residuals, frame_checks, inverse_relation_residual};
use mopkit::factorization::{biorthogonality_residual, biorthogonality_scale, polynomials_via_linear_solve};
use mopkit::painleve::{classical_gap, lattice_residuals, PainleveInput};
use mopkit::types::fnorm;
use mopkit::{c64, Pipeline, Side};
use proptest::prelude::*;

fn pipe(name: &str, n: usize) -> Pipeline {
    Pipeline::with_defaults(builtin(name).unwrap(), n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn laguerre_closed_forms(a in -0.6f64..3.0) {
        let p = pipe(&format!("laguerre-scalar({a})"), 5);
        prop_assert!(classical_gap(&p, 5).unwrap() < 1e-8 * (10.0 + a).powi(2));
        let fam = ClassicalFamily::from_spec(&p.spec).unwrap();
        for n in 0..=5 {
            prop_assert!(classical_ode_residual(&p, fam, OdeKind::P, n, c64(-1.0, 0.7)).unwrap().residual < 1e-9);
        }
    }

    #[test]
    fn jacobi_closed_forms(a in -0.6f64..2.5, b in -0.6f64..2.5) {
        let p = pipe(&format!("jacobi-scalar({a},{b})"), 5);
        prop_assert!(classical_gap(&p, 5).unwrap() < 1e-8);
        let inp = PainleveInput::from_pipeline(&p).unwrap();
        for r in lattice_residuals(&inp).unwrap() {
            prop_assert!(r.derived.iter().all(|x| *x < 1e-6), "n={} {:?}", r.n, r.derived);
        }
    }

    #[test]
    fn riemann_hilbert_frame(s in 0.1f64..1.5, re in -2.0f64..2.0, im in 0.3f64..2.0) {
        let p = pipe(&format!("hermite-two-sided({s})"), 4);
        let z = c64(re, im);
        for n in 0..=4 {
            let c = frame_checks(&p, n, z).unwrap();
            prop_assert!(c.det_left < 1e-8 && c.det_right < 1e-8);
            prop_assert!(inverse_relation_residual(&p, n, z).unwrap() < 1e-8);
            let cd = christoffel_darboux_residuals(&p, n, z, c64(-re, 1.5 * im)).unwrap();
            prop_assert!(cd.iter().all(|r| *r < 1e-8), "{cd:?}");
        }
    }

    #[test]
    fn biorthogonality_and_linear_solve(a in 0.0f64..2.0, b in 0.5f64..3.0) {
        let p = pipe(&format!("berezanskii-laguerre({a},{b})"), 5);
        for n in 0..=5 {
            for m in 0..=5 {
                let r = biorthogonality_residual(&p.md, &p.rec, n, m).unwrap() / biorthogonality_scale(&p.md, &p.rec, n, m);
                prop_assert!(r < 1e-9, "({n}, {m}) {r:e}");
            }
            let (pl, _, _) = polynomials_via_linear_solve(&p.md, n).unwrap();
            let scale = p.rec.poly(Side::Left, n).coeffs().iter().map(fnorm).fold(0.0, f64::max);
            for k in 0..=n {
                prop_assert!(fnorm(&(pl.coeff(k) - p.rec.poly(Side::Left, n).coeff(k))) < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn quadratic_laguerre_lattice(a in 0.1f64..2.0) {
        let p = pipe(&format!("laguerre-quadratic-2x2({a})"), 4);
        let inp = PainleveInput::from_pipeline(&p).unwrap();
        for r in lattice_residuals(&inp).unwrap() {
            prop_assert!(r.derived.iter().all(|x| *x < 1e-6), "n={} {:?}", r.n, r.derived);
        }
    }

    #[test]
    fn chebyshev_block_anywhere(x in -0.999f64..0.999) {
        let p = pipe("berezanskii-chebyshev", 6);
        prop_assert!(chebyshev_block_gap(&p, 6, &[x]).unwrap() < 1e-9);
    }
}
