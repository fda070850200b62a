//! Named built-in weights, addressed as `NAME` or `NAME(p1,p2)`.

use crate::error::{MopError, Result};
use crate::types::{c64, eye, real_mat, zeros, CMat, MatrixPolynomial, ScalarPoly};
use crate::weights::{
    berezanskii_weight, evaluate_weight, Anchor, BaseWeight, BerezanskiiSpec, Factor, ScalarFamily, SupportCurve, WeightClass,
    WeightForm, WeightSpec, WeightTerm,
};

/// Built-in names with their parameter counts and defaults.
pub const BUILTINS: &[(&str, &[f64])] = &[
    ("hermite-scalar", &[]),
    ("laguerre-scalar", &[0.0]),
    ("jacobi-scalar", &[0.0, 0.0]),
    ("berezanskii-chebyshev", &[]),
    ("berezanskii-laguerre", &[0.0, 1.0]),
    ("berezanskii-jacobi", &[0.0, 1.0]),
    ("hermite-nilpotent", &[]),
    ("laguerre-quadratic-2x2", &[0.5]),
    ("jacobi-quadratic-2x2", &[0.5]),
    ("hermite-two-sided", &[0.5]),
    ("hermite-coupled", &[]),
];

fn nilpotent() -> CMat {
    real_mat(&[&[0.0, 1.0], &[0.0, 0.0]])
}

fn poly(coeffs: Vec<CMat>) -> MatrixPolynomial {
    MatrixPolynomial::new(coeffs).expect("well-formed builtin polynomial")
}

fn finish(mut spec: WeightSpec) -> Result<WeightSpec> {
    spec.anchor.value = evaluate_weight(&spec, spec.anchor.z0)?;
    spec.validate()?;
    Ok(spec)
}

fn closed(
    name: String,
    dim: usize,
    support: SupportCurve,
    phi: &[f64],
    h_l: MatrixPolynomial,
    h_r: MatrixPolynomial,
    class: WeightClass,
    z0: f64,
    terms: Vec<WeightTerm>,
) -> Result<WeightSpec> {
    finish(WeightSpec {
        name,
        dim,
        support,
        phi: ScalarPoly::from_real(phi),
        h_l,
        h_r,
        class,
        anchor: Anchor { z0: c64(z0, 0.0), value: eye(dim) },
        form: WeightForm::Closed(terms),
        berezanskii: None,
    })
}

fn term(base: BaseWeight, factor: MatrixPolynomial) -> WeightTerm {
    WeightTerm { base, factor: Factor::Poly(factor) }
}

/// Splits `name(a,b)` into the name and its numeric parameters.
pub fn parse_builtin_name(s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s.to_string(), Vec::new())),
        Some(i) => {
            let inner = s[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| MopError::Spec(format!("unbalanced parentheses in `{s}`")))?;
            let params = inner
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse::<f64>().map_err(|_| MopError::Spec(format!("bad parameter `{p}` in `{s}`"))))
                .collect::<Result<Vec<_>>>()?;
            Ok((s[..i].trim().to_string(), params))
        }
    }
}

/// Looks up a built-in weight by `NAME` or `NAME(params)`.
pub fn builtin(s: &str) -> Result<WeightSpec> {
    let (name, given) = parse_builtin_name(s)?;
    let defaults = BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| *d)
        .ok_or_else(|| MopError::Spec(format!("unknown builtin `{name}`")))?;
    if given.len() > defaults.len() {
        return Err(MopError::Spec(format!("`{name}` takes {} parameter(s)", defaults.len())));
    }
    let p: Vec<f64> = defaults.iter().enumerate().map(|(i, d)| given.get(i).copied().unwrap_or(*d)).collect();
    if p.iter().any(|x| !x.is_finite()) {
        return Err(MopError::Spec("builtin parameters must be finite".into()));
    }
    let label = if p.is_empty() {
        name.clone()
    } else {
        format!("{name}({})", p.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","))
    };
    let r = |v: f64| real_mat(&[&[v]]);
    let spec = match name.as_str() {
        "hermite-scalar" => closed(
            label,
            1,
            SupportCurve::real_line(),
            &[1.0],
            poly(vec![zeros(1), r(-2.0)]),
            MatrixPolynomial::zero(1),
            WeightClass::Hermite,
            0.0,
            vec![term(BaseWeight::Gaussian { s: 1.0 }, MatrixPolynomial::constant(eye(1)))],
        )?,
        "laguerre-scalar" => {
            let a = p[0];
            if a <= -1.0 {
                return Err(MopError::Spec("laguerre parameter must exceed -1".into()));
            }
            closed(
                label,
                1,
                SupportCurve::half_line(),
                &[0.0, 1.0],
                poly(vec![r(a), r(-1.0)]),
                MatrixPolynomial::zero(1),
                WeightClass::Laguerre,
                1.0,
                vec![term(BaseWeight::Laguerre { alpha: a }, MatrixPolynomial::constant(eye(1)))],
            )?
        }
        "jacobi-scalar" => {
            let (a, b) = (p[0], p[1]);
            if a <= -1.0 || b <= -1.0 {
                return Err(MopError::Spec("jacobi parameters must exceed -1".into()));
            }
            closed(
                label,
                1,
                SupportCurve::interval(0.0, 1.0),
                &[0.0, 1.0, -1.0],
                poly(vec![r(a), r(-(a + b))]),
                MatrixPolynomial::zero(1),
                WeightClass::Jacobi,
                0.5,
                vec![term(BaseWeight::Jacobi { a, b, lo: 0.0, hi: 1.0 }, MatrixPolynomial::constant(eye(1)))],
            )?
        }
        "berezanskii-chebyshev" => {
            let mut s = berezanskii_weight(&BerezanskiiSpec { w1: ScalarFamily::ChebyshevPlus, w2: ScalarFamily::ChebyshevMinus })?;
            s.name = label;
            s
        }
        "berezanskii-laguerre" => {
            let (a, b) = (p[0], p[1]);
            if a <= -1.0 || b <= -1.0 {
                return Err(MopError::Spec("laguerre parameters must exceed -1".into()));
            }
            let mut s = berezanskii_weight(&BerezanskiiSpec {
                w1: ScalarFamily::Laguerre { alpha: a },
                w2: ScalarFamily::Laguerre { alpha: b },
            })?;
            s.name = label;
            s
        }
        "berezanskii-jacobi" => {
            let (a, b) = (p[0], p[1]);
            if a <= -1.0 || b <= -1.0 {
                return Err(MopError::Spec("jacobi parameters must exceed -1".into()));
            }
            let mut s = berezanskii_weight(&BerezanskiiSpec { w1: ScalarFamily::Jacobi { a, b }, w2: ScalarFamily::Jacobi { a: b, b: a } })?;
            s.name = label;
            s
        }
        "hermite-nilpotent" => closed(
            label,
            2,
            SupportCurve::real_line(),
            &[1.0],
            poly(vec![nilpotent(), eye(2) * c64(-2.0, 0.0)]),
            MatrixPolynomial::zero(2),
            WeightClass::QuadraticHermite,
            0.0,
            vec![term(BaseWeight::Gaussian { s: 1.0 }, MatrixPolynomial::linear(eye(2), nilpotent()))],
        )?,
        "laguerre-quadratic-2x2" => {
            let e = p[0];
            let f = poly(vec![
                real_mat(&[&[1.0, 0.0], &[0.0, 0.0]]),
                real_mat(&[&[0.0, 0.0], &[0.0, 1.0]]),
                zeros(2),
                real_mat(&[&[0.0, e / 3.0], &[0.0, 0.0]]),
            ]);
            closed(
                label,
                2,
                SupportCurve::half_line(),
                &[0.0, 1.0],
                poly(vec![real_mat(&[&[0.0, 0.0], &[0.0, 1.0]]), -eye(2), nilpotent() * c64(e, 0.0)]),
                MatrixPolynomial::zero(2),
                WeightClass::QuadraticLaguerre,
                1.0,
                vec![term(BaseWeight::Laguerre { alpha: 0.0 }, f)],
            )?
        }
        "jacobi-quadratic-2x2" => {
            let e = p[0];
            let f = poly(vec![
                real_mat(&[&[1.0, 0.0], &[0.0, 0.0]]),
                real_mat(&[&[0.0, 0.0], &[0.0, 1.0]]),
                real_mat(&[&[0.0, 0.0], &[0.0, -1.0]]),
                real_mat(&[&[0.0, e / 3.0], &[0.0, 0.0]]),
            ]);
            closed(
                label,
                2,
                SupportCurve::interval(0.0, 1.0),
                &[0.0, 1.0, -1.0],
                poly(vec![
                    real_mat(&[&[0.0, 0.0], &[0.0, 1.0]]),
                    real_mat(&[&[0.0, 0.0], &[0.0, -2.0]]),
                    nilpotent() * c64(e, 0.0),
                ]),
                MatrixPolynomial::zero(2),
                WeightClass::QuadraticJacobi,
                0.5,
                vec![term(BaseWeight::Jacobi { a: 0.0, b: 0.0, lo: 0.0, hi: 1.0 }, f)],
            )?
        }
        "hermite-two-sided" => {
            // e^{-z^2} (I + zN)(I + c z N^T)
            let c = p[0];
            let nt = nilpotent().transpose();
            let f = poly(vec![eye(2), nilpotent() + &nt * c64(c, 0.0), nilpotent() * &nt * c64(c, 0.0)]);
            closed(
                label,
                2,
                SupportCurve::real_line(),
                &[1.0],
                poly(vec![nilpotent(), -eye(2)]),
                poly(vec![nt * c64(c, 0.0), -eye(2)]),
                WeightClass::Hermite,
                0.0,
                vec![term(BaseWeight::Gaussian { s: 1.0 }, f)],
            )?
        }
        "hermite-coupled" => {
            // L diag(e^{-z^2}, e^{-2z^2}) L^T with L = [[1, 0], [1, 1]]
            let l = real_mat(&[&[1.0, 0.0], &[1.0, 1.0]]);
            let e1 = &l * real_mat(&[&[1.0, 0.0], &[0.0, 0.0]]) * l.transpose();
            let e2 = &l * real_mat(&[&[0.0, 0.0], &[0.0, 1.0]]) * l.transpose();
            let linv = real_mat(&[&[1.0, 0.0], &[-1.0, 1.0]]);
            let a = &l * real_mat(&[&[-2.0, 0.0], &[0.0, -4.0]]) * linv;
            closed(
                label,
                2,
                SupportCurve::real_line(),
                &[1.0],
                poly(vec![zeros(2), a]),
                MatrixPolynomial::zero(2),
                WeightClass::Hermite,
                0.0,
                vec![
                    term(BaseWeight::Gaussian { s: 1.0 }, MatrixPolynomial::constant(e1)),
                    term(BaseWeight::Gaussian { s: 2.0 }, MatrixPolynomial::constant(e2)),
                ],
            )?
        }
        _ => unreachable!(),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::fnorm;
    use crate::weights::{factor_weight, pearson_residual};

    #[test]
    fn every_builtin_satisfies_pearson() {
        let pts = [0.3, 0.45, 0.61, 0.77];
        for (name, _) in BUILTINS {
            let spec = builtin(name).unwrap();
            for &x in &pts {
                let z = c64(x, 0.2);
                let r = pearson_residual(&spec, z, Some(1e-5)).unwrap();
                let scale = fnorm(&evaluate_weight(&spec, z).unwrap()).max(1.0);
                assert!(r < 1e-7 * scale, "{name} at {z}: {r}");
            }
        }
    }

    #[test]
    fn nilpotent_closed_form_at_one() {
        let spec = builtin("hermite-nilpotent").unwrap();
        let w = evaluate_weight(&spec, c64(1.0, 0.0)).unwrap();
        let e = (-1.0f64).exp();
        let expect = real_mat(&[&[e, e], &[0.0, e]]);
        assert!(fnorm(&(w - expect)) < 1e-15);
    }

    #[test]
    fn parses_parameters() {
        let (n, p) = parse_builtin_name("berezanskii-laguerre(0.5, 2)").unwrap();
        assert_eq!(n, "berezanskii-laguerre");
        assert_eq!(p, vec![0.5, 2.0]);
        assert!(builtin("nope").is_err());
        assert!(builtin("laguerre-scalar(-2)").is_err());
    }

    #[test]
    fn two_sided_factorization() {
        let spec = builtin("hermite-two-sided(0.5)").unwrap();
        let z = c64(0.4, 0.3);
        let (wl, wr) = factor_weight(&spec, z).unwrap();
        let w = evaluate_weight(&spec, z).unwrap();
        assert!(fnorm(&(&wl * &wr - &w)) < 1e-12);
        // omegaR solves the right Pearson equation
        let h = c64(1e-5, 0.0);
        let (_, wrp) = factor_weight(&spec, z + h).unwrap();
        let (_, wrm) = factor_weight(&spec, z - h).unwrap();
        let d = (wrp - wrm) / (h * 2.0);
        assert!(fnorm(&(d - &wr * spec.h_r.eval(z))) < 1e-8);
    }
}
