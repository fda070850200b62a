use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use mopkit::moments::QuadratureConfig;
use mopkit::report::{self, SuiteReport};
use mopkit::specfile::load_spec;
use mopkit::suites::{run_suite, Suite, Tolerances};
use mopkit::{CauchyConfig, MopError, Pipeline};

#[derive(Parser)]
#[command(name = "mopkit", version, about = "Matrix orthogonal polynomials from Pearson weights, with identity checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Moments, recurrence coefficients and polynomial tables.
    Compute(Common),
    /// Run verification suites and write one report per suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Override every tolerance with this value.
        #[arg(long)]
        tol: Option<f64>,
        /// Comma-separated suites, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Args)]
struct Common {
    /// Spec file path or `builtin:NAME(params)`.
    #[arg(long)]
    spec: String,
    /// Highest polynomial degree.
    #[arg(long, default_value_t = 6)]
    nmax: usize,
    /// Starting Gauss node count.
    #[arg(long)]
    quad_nodes: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write JSON artifacts.
    #[arg(long)]
    json: bool,
    /// Write CSV artifacts.
    #[arg(long)]
    csv: bool,
}

impl Common {
    /// Neither flag means both.
    fn formats(&self) -> (bool, bool) {
        if !self.json && !self.csv {
            (true, true)
        } else {
            (self.json, self.csv)
        }
    }

    fn pipeline(&self) -> Result<Pipeline, MopError> {
        let spec = load_spec(&self.spec)?;
        let mut quad = QuadratureConfig::default();
        if let Some(m) = self.quad_nodes {
            quad.nodes = m;
        }
        Pipeline::new(spec, self.nmax, quad, CauchyConfig::default())
    }
}

fn exit_code(e: &MopError) -> u8 {
    match e {
        MopError::Spec(_) => 2,
        MopError::Regularity { .. } => 3,
        MopError::Quadrature { .. } => 4,
        _ => 1,
    }
}

fn write_all(out: &Path, files: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (name, body) in files {
        let path = out.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn metadata(command: &str, common: &Common, threads: usize) -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let v = serde_json::json!({
        "schema": report::SCHEMA,
        "command": command,
        "spec": common.spec,
        "nmax": common.nmax,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "unix_time": secs,
    });
    format!("{}\n", serde_json::to_string_pretty(&v).unwrap_or_default())
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> mopkit::Result<()>) -> mopkit::Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

fn compute(common: &Common, threads: usize) -> Result<u8> {
    let p = match common.pipeline() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit_code(&e));
        }
    };
    let (json, csv) = common.formats();
    let mut files = Vec::new();
    if csv {
        files.push(("moments.csv".into(), csv_string(|b| report::write_moments_csv(&p, b))?));
        files.push(("recurrence.csv".into(), csv_string(|b| report::write_recurrence_csv(&p, b))?));
        files.push(("coefficients.csv".into(), csv_string(|b| report::write_coefficients_csv(&p, b))?));
    }
    if json {
        files.push(("pipeline.json".into(), report::pipeline_json(&p)));
    }
    files.push(("metadata.json".into(), metadata("compute", common, threads)));
    write_all(&common.out, &files)?;
    for n in &p.notes {
        println!("note: {n}");
    }
    println!("{}: n_max {} written to {}", p.spec.name, p.n_max, common.out.display());
    Ok(0)
}

fn summary_csv(r: &SuiteReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["identity", "n", "z_re", "z_im", "residual", "tolerance", "pass", "gating", "method", "notes"]);
    for x in &r.results {
        let (zr, zi) = x.z.map_or((String::new(), String::new()), |z| (report::fmt_f64(z[0]), report::fmt_f64(z[1])));
        let method = serde_json::to_value(x.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = w.write_record([
            x.identity.clone(),
            x.n.map(|n| n.to_string()).unwrap_or_default(),
            zr,
            zi,
            report::fmt_f64(x.residual),
            report::fmt_f64(x.tolerance),
            x.pass.to_string(),
            x.gating.to_string(),
            method,
            x.notes.clone(),
        ]);
    }
    String::from_utf8_lossy(&w.into_inner().unwrap_or_default()).into_owned()
}

fn verify(common: &Common, tol: Option<f64>, suite: &str, threads: usize) -> Result<u8> {
    let suites = match Suite::parse_list(suite) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
    };
    if let Some(t) = tol {
        if !(t > 0.0) {
            eprintln!("error: --tol must be positive");
            return Ok(2);
        }
    }
    let p = match common.pipeline() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit_code(&e));
        }
    };
    let tols = Tolerances { all: tol };
    let reports: Vec<SuiteReport> = suites.par_iter().map(|s| run_suite(&p, *s, &tols)).collect();
    let (json, csv) = common.formats();
    let mut files = Vec::new();
    for r in &reports {
        if json {
            files.push((format!("{}.json", r.suite), r.to_json()));
        }
        if csv {
            files.push((format!("{}.csv", r.suite), summary_csv(r)));
        }
    }
    files.push(("metadata.json".into(), metadata("verify", common, threads)));
    write_all(&common.out, &files)?;
    let mut failed = 0;
    for r in &reports {
        let gating = r.results.iter().filter(|x| x.gating).count();
        let status = if r.skipped {
            "SKIP"
        } else if r.pass {
            "PASS"
        } else {
            "FAIL"
        };
        println!("{status} {:<16} {gating} checks", r.suite);
        for f in r.failures() {
            failed += 1;
            eprintln!(
                "  failed {} n={} residual={} tolerance={} {}",
                f.identity,
                f.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                report::fmt_f64(f.residual),
                report::fmt_f64(f.tolerance),
                f.notes
            );
        }
    }
    Ok(if failed > 0 { 5 } else { 0 })
}

fn threads() -> usize {
    std::env::var("MOPKIT_THREADS").ok().and_then(|s| s.parse().ok()).filter(|n| *n > 0).unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let n = threads();
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let used = rayon::current_num_threads();
    let res = match &cli.cmd {
        Cmd::Compute(c) => compute(c, used),
        Cmd::Verify { common, tol, suite } => verify(common, *tol, suite, used),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
