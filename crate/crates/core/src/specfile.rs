//! Weight specs from JSON files, and the `builtin:` prefix.
//!
//! Complex numbers are `[re, im]` pairs (a bare number is real), matrices
//! are row-major nested arrays, and `hL`/`hR` are lists of coefficient
//! matrices, lowest degree first.

use serde_json::Value;
use std::path::Path;

use crate::builtin::builtin;
use crate::error::{MopError, Result};
use crate::types::{c64, CMat, MatrixPolynomial, ScalarPoly, C64};
use crate::weights::{
    berezanskii_weight, Anchor, BerezanskiiSpec, Orientation, ScalarFamily, SupportCurve, SupportKind, WeightClass, WeightForm,
    WeightSpec,
};

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(MopError::Spec(msg.into()))
}

fn complex(v: &Value) -> Result<C64> {
    match v {
        Value::Number(n) => Ok(c64(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(a) if a.len() == 2 => match (a[0].as_f64(), a[1].as_f64()) {
            (Some(re), Some(im)) => Ok(c64(re, im)),
            _ => err("complex number must be [re, im]"),
        },
        _ => err(format!("expected a complex number, got {v}")),
    }
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| MopError::Spec(format!("`{what}` must be a number")))
}

fn matrix(v: &Value, n: usize) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| MopError::Spec("matrix must be an array of rows".into()))?;
    if rows.len() != n {
        return err(format!("matrix has {} rows, expected {n}", rows.len()));
    }
    let mut m = CMat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let r = row.as_array().ok_or_else(|| MopError::Spec("matrix row must be an array".into()))?;
        if r.len() != n {
            return err(format!("matrix row has {} entries, expected {n}", r.len()));
        }
        for (j, x) in r.iter().enumerate() {
            m[(i, j)] = complex(x)?;
        }
    }
    Ok(m)
}

fn matrix_poly(v: Option<&Value>, n: usize) -> Result<MatrixPolynomial> {
    match v {
        None | Some(Value::Null) => Ok(MatrixPolynomial::zero(n)),
        Some(Value::Array(list)) if !list.is_empty() => {
            MatrixPolynomial::new(list.iter().map(|m| matrix(m, n)).collect::<Result<Vec<_>>>()?)
        }
        _ => err("hL/hR must be a nonempty list of coefficient matrices"),
    }
}

fn family(v: &Value) -> Result<ScalarFamily> {
    let name = v.get("family").and_then(Value::as_str).ok_or_else(|| MopError::Spec("berezanskii weight needs `family`".into()))?;
    let params: Vec<f64> = match v.get("params") {
        None => Vec::new(),
        Some(Value::Array(a)) => a.iter().map(|x| number(x, "params")).collect::<Result<_>>()?,
        Some(_) => return err("`params` must be an array"),
    };
    let get = |i: usize| params.get(i).copied().unwrap_or(0.0);
    let check = |x: f64| if x > -1.0 { Ok(x) } else { err("family parameters must exceed -1") };
    Ok(match name {
        "gaussian" => ScalarFamily::Gaussian,
        "laguerre" => ScalarFamily::Laguerre { alpha: check(get(0))? },
        "jacobi" => ScalarFamily::Jacobi { a: check(get(0))?, b: check(get(1))? },
        "chebyshev-plus" => ScalarFamily::ChebyshevPlus,
        "chebyshev-minus" => ScalarFamily::ChebyshevMinus,
        other => return err(format!("unknown scalar family `{other}`")),
    })
}

fn class(s: &str) -> Result<WeightClass> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| MopError::Spec(format!("unknown class `{s}`")))
}

fn support(v: &Value) -> Result<SupportCurve> {
    let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| MopError::Spec("support needs `kind`".into()))?;
    let orientation = match v.get("orientation").and_then(Value::as_str) {
        None | Some("positive") => Orientation::Positive,
        Some("negative") => Orientation::Negative,
        Some(o) => return err(format!("unknown orientation `{o}`")),
    };
    let kind = match kind {
        "real-line" => SupportKind::RealLine,
        "half-line" => SupportKind::HalfLine,
        "interval" => SupportKind::Interval {
            a: number(v.get("a").unwrap_or(&Value::Null), "a")?,
            b: number(v.get("b").unwrap_or(&Value::Null), "b")?,
        },
        "circle" => SupportKind::Circle {
            center: v.get("center").map(complex).transpose()?.unwrap_or(c64(0.0, 0.0)),
            radius: number(v.get("radius").unwrap_or(&Value::Null), "radius")?,
        },
        other => return err(format!("unknown support kind `{other}`")),
    };
    let truncation = v.get("R").map(|r| number(r, "R")).transpose()?;
    let s = SupportCurve { kind, orientation, truncation };
    s.validate()?;
    Ok(s)
}

/// Parses a weight spec document.
pub fn parse_spec_json(text: &str) -> Result<WeightSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| MopError::Spec(format!("invalid JSON: {e}")))?;
    if !v.is_object() {
        return err("spec must be a JSON object");
    }
    let name = v.get("name").and_then(Value::as_str).unwrap_or("custom").to_string();
    if let Some(b) = v.get("berezanskii") {
        let w1 = family(b.get("w1").ok_or_else(|| MopError::Spec("berezanskii needs w1".into()))?)?;
        let w2 = family(b.get("w2").ok_or_else(|| MopError::Spec("berezanskii needs w2".into()))?)?;
        if let Some(n) = v.get("N") {
            if n.as_u64() != Some(2) {
                return err("berezanskii weights are 2×2");
            }
        }
        let mut s = berezanskii_weight(&BerezanskiiSpec { w1, w2 })?;
        s.name = name;
        return Ok(s);
    }
    let n = v.get("N").and_then(Value::as_u64).ok_or_else(|| MopError::Spec("`N` must be a positive integer".into()))? as usize;
    if n == 0 || n > 64 {
        return err("`N` must be between 1 and 64");
    }
    let class = class(v.get("class").and_then(Value::as_str).unwrap_or("custom"))?;
    let support = support(v.get("support").ok_or_else(|| MopError::Spec("missing `support`".into()))?)?;
    let phi = match v.get("phi") {
        Some(Value::Array(a)) if !a.is_empty() && a.len() <= 3 => ScalarPoly(a.iter().map(complex).collect::<Result<Vec<_>>>()?),
        Some(_) => return err("`phi` must list 1 to 3 coefficients"),
        None => return err("missing `phi`"),
    };
    let phi = trim(phi);
    let h_l = matrix_poly(v.get("hL"), n)?;
    let h_r = matrix_poly(v.get("hR"), n)?;
    let anchor = v.get("anchor").ok_or_else(|| MopError::Spec("missing `anchor`".into()))?;
    let z0 = complex(anchor.get("z0").ok_or_else(|| MopError::Spec("anchor needs `z0`".into()))?)?;
    let value = matrix(anchor.get("value").ok_or_else(|| MopError::Spec("anchor needs `value`".into()))?, n)?;
    if phi.eval(z0).norm() == 0.0 {
        return err("anchor sits on a zero of phi");
    }
    let spec = WeightSpec {
        name,
        dim: n,
        support,
        phi,
        h_l,
        h_r,
        class,
        anchor: Anchor { z0, value },
        form: WeightForm::Pearson(Default::default()),
        berezanskii: None,
    };
    spec.validate()?;
    Ok(spec)
}

fn trim(mut p: ScalarPoly) -> ScalarPoly {
    while p.0.len() > 1 && p.0.last().is_some_and(|c| c.norm() == 0.0) {
        p.0.pop();
    }
    p
}

/// Resolves `builtin:NAME(params)` or reads a JSON spec file.
pub fn load_spec(arg: &str) -> Result<WeightSpec> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return builtin(name);
    }
    let text = std::fs::read_to_string(Path::new(arg)).map_err(|e| MopError::Spec(format!("cannot read `{arg}`: {e}")))?;
    parse_spec_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::evaluate_weight;

    #[test]
    fn pearson_file_spec() {
        let text = r#"{
            "class": "quadratic-hermite", "N": 2,
            "support": {"kind": "real-line"},
            "phi": [1],
            "hL": [[[0, 1], [0, 0]], [[-2, 0], [0, -2]]],
            "anchor": {"z0": [0, 0], "value": [[1, 0], [0, 1]]}
        }"#;
        let s = parse_spec_json(text).unwrap();
        let w = evaluate_weight(&s, c64(1.0, 0.0)).unwrap();
        let e = (-1.0f64).exp();
        assert!((w[(0, 0)].re - e).abs() < 1e-11 && (w[(0, 1)].re - e).abs() < 1e-11 && w[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn malformed_specs() {
        assert!(parse_spec_json("{").is_err());
        assert!(parse_spec_json(r#"{"N": 0}"#).is_err());
        assert!(parse_spec_json(r#"{"N": 1, "class": "hermite", "support": {"kind": "half-line"}, "phi": [0, 1],
            "hL": [[[0]]], "anchor": {"z0": [1, 0], "value": [[1]]}}"#)
            .is_err());
        assert!(load_spec("/nonexistent/spec.json").is_err());
    }

    #[test]
    fn berezanskii_file_spec() {
        let s = parse_spec_json(r#"{"berezanskii": {"w1": {"family": "chebyshev-plus"}, "w2": {"family": "chebyshev-minus"}}}"#).unwrap();
        assert_eq!(s.dim, 2);
        assert_eq!(s.class, WeightClass::Berezanskii);
    }
}
