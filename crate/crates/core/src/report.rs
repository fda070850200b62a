//! Residual reports and the JSON / CSV artifacts built from them.
//!
//! Floats are written as `{:.16e}` (17 significant digits) and object keys
//! are sorted, so identical runs give identical bytes.

use serde::Serialize;
use serde_json::Value;
use std::io::Write;

use crate::error::{MopError, Result};
use crate::pipeline::Pipeline;
use crate::types::{CMat, C64};

pub const SCHEMA: &str = "mopkit/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Numeric,
    ClosedForm,
    Both,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub identity: String,
    pub n: Option<usize>,
    pub z: Option<[f64; 2]>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub method: Method,
    /// Informational rows (displayed forms kept for comparison) do not
    /// decide the suite outcome.
    pub gating: bool,
    pub notes: String,
}

impl ResidualReport {
    pub fn new(identity: impl Into<String>, n: Option<usize>, z: Option<C64>, residual: f64, tolerance: f64, method: Method) -> Self {
        ResidualReport {
            identity: identity.into(),
            n,
            z: z.map(|z| [z.re, z.im]),
            residual,
            tolerance,
            pass: residual.is_finite() && residual < tolerance,
            method,
            gating: true,
            notes: String::new(),
        }
    }

    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes = s.into();
        self
    }

    /// A check that could not be evaluated.
    pub fn failed(identity: impl Into<String>, n: Option<usize>, err: &MopError) -> Self {
        ResidualReport::new(identity, n, None, f64::NAN, 0.0, Method::Numeric).note(err.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub schema: &'static str,
    pub suite: String,
    pub spec: String,
    pub n_max: usize,
    pub requested_n_max: usize,
    /// Pipeline notes, applied symbol resolutions and skip reasons.
    pub notes: Vec<String>,
    pub skipped: bool,
    pub pass: bool,
    pub results: Vec<ResidualReport>,
}

impl SuiteReport {
    pub fn new(suite: &str, p: &Pipeline) -> Self {
        SuiteReport {
            schema: SCHEMA,
            suite: suite.to_string(),
            spec: p.spec.name.clone(),
            n_max: p.n_max,
            requested_n_max: p.requested_n_max,
            notes: p.notes.clone(),
            skipped: false,
            pass: true,
            results: Vec::new(),
        }
    }

    pub fn push(&mut self, r: ResidualReport) {
        self.results.push(r);
    }

    pub fn finish(mut self) -> Self {
        self.pass = self.results.iter().filter(|r| r.gating).all(|r| r.pass);
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResidualReport> {
        self.results.iter().filter(|r| r.gating && !r.pass)
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        let mut out = String::new();
        write_value(&v, 0, &mut out);
        out.push('\n');
        out
    }
}

/// Full-precision float text used in every artifact.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => out.push_str(&u.to_string()),
            (None, Some(i)) => out.push_str(&i.to_string()),
            _ => out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(x, indent, out);
            }
            out.push(']');
        }
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn csv_err(e: csv::Error) -> MopError {
    MopError::Io(e.to_string())
}

fn matrix_rows(m: &CMat) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| (i, j, m[(i, j)])))
}

/// `k, i, j, re, im` for every moment `omega_k`.
pub fn write_moments_csv<W: Write>(p: &Pipeline, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["k", "i", "j", "re", "im"]).map_err(csv_err)?;
    for (k, m) in p.md.moments.iter().enumerate() {
        for (i, j, v) in matrix_rows(m) {
            wr.write_record([k.to_string(), i.to_string(), j.to_string(), fmt_f64(v.re), fmt_f64(v.im)]).map_err(csv_err)?;
        }
    }
    wr.flush().map_err(|e| MopError::Io(e.to_string()))
}

/// One row per `(side, n, i, j)` with `beta_n`, `gamma_n`, `C_n` and
/// `C_n^{-1}` entries, for `n <= n_max`.
pub fn write_recurrence_csv<W: Write>(p: &Pipeline, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "side", "n", "i", "j", "beta_re", "beta_im", "gamma_re", "gamma_im", "c_re", "c_im", "c_inv_re", "c_inv_im",
    ])
    .map_err(csv_err)?;
    let rec = &p.rec;
    for (side, beta, gamma) in [("L", &rec.beta_l, &rec.gamma_l), ("R", &rec.beta_r, &rec.gamma_r)] {
        for n in 0..=p.n_max {
            for (i, j, b) in matrix_rows(&beta[n]) {
                let g = gamma[n][(i, j)];
                let c = rec.c[n][(i, j)];
                let ci = rec.c_inv[n][(i, j)];
                let row = [
                    side.to_string(),
                    n.to_string(),
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(b.re),
                    fmt_f64(b.im),
                    fmt_f64(g.re),
                    fmt_f64(g.im),
                    fmt_f64(c.re),
                    fmt_f64(c.im),
                    fmt_f64(ci.re),
                    fmt_f64(ci.im),
                ];
                wr.write_record(row).map_err(csv_err)?;
            }
        }
    }
    wr.flush().map_err(|e| MopError::Io(e.to_string()))
}

/// Coefficient of `z^k` in `P_n`, one row per `(side, n, k, i, j)`.
pub fn write_coefficients_csv<W: Write>(p: &Pipeline, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["side", "n", "k", "i", "j", "re", "im"]).map_err(csv_err)?;
    for side in [crate::types::Side::Left, crate::types::Side::Right] {
        let tag = if side == crate::types::Side::Left { "L" } else { "R" };
        for n in 0..=p.n_max {
            for (k, c) in p.rec.poly(side, n).coeffs().iter().enumerate() {
                for (i, j, v) in matrix_rows(c) {
                    let row = [tag.to_string(), n.to_string(), k.to_string(), i.to_string(), j.to_string(), fmt_f64(v.re), fmt_f64(v.im)];
                    wr.write_record(row).map_err(csv_err)?;
                }
            }
        }
    }
    wr.flush().map_err(|e| MopError::Io(e.to_string()))
}

/// The pipeline's regularity records and quadrature facts as JSON.
pub fn pipeline_json(p: &Pipeline) -> String {
    let v = serde_json::json!({
        "schema": SCHEMA,
        "spec": p.spec.name,
        "dim": p.dim(),
        "n_max": p.n_max,
        "requested_n_max": p.requested_n_max,
        "notes": p.notes,
        "quadrature": {
            "rule": p.md.rule,
            "nodes": p.md.nodes,
            "doubling_gap": p.md.doubling_gap,
            "truncation_radius": p.md.truncation_radius,
        },
        "factorization_residual": p.rec.residual,
        "regularity": p.md.regularity,
    });
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::NAN), "null");
        let back: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn report_json_is_stable_and_parses() {
        let p = Pipeline::with_defaults(builtin("hermite-scalar").unwrap(), 2).unwrap();
        let mut s = SuiteReport::new("demo", &p);
        s.push(ResidualReport::new("x", Some(1), Some(C64::new(0.5, 1.0)), 1e-12, 1e-8, Method::Numeric));
        s.push(ResidualReport::new("y", None, None, 1.0, 1e-8, Method::Both).informational());
        let s = s.finish();
        assert!(s.pass);
        let a = s.to_json();
        assert_eq!(a, s.to_json());
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schema"], "mopkit/1");
        assert_eq!(v["results"][0]["z"][1].as_f64(), Some(1.0));
    }

    #[test]
    fn hermite_gamma_column() {
        let p = Pipeline::with_defaults(builtin("hermite-scalar").unwrap(), 8).unwrap();
        let mut buf = Vec::new();
        write_recurrence_csv(&p, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        for row in rd.records() {
            let row = row.unwrap();
            let n: f64 = row[1].parse().unwrap();
            let g: f64 = row[6].parse().unwrap();
            assert!((g - n / 2.0).abs() < 1e-8);
        }
    }
}
