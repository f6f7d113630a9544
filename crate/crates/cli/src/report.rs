//! Report JSON fragments and the sweep CSV.

use std::fmt::Write as _;

use qsep::{Bracket, Exactness};
use serde_json::{json, Value};

pub const CSV_HEADER: &str = "command,state_id,n,K,y,eps,lower,upper,gap,status,seconds";

fn exactness_label(e: Exactness) -> &'static str {
    match e {
        Exactness::Exact => "exact",
        Exactness::PptExact => "ppt-exact",
        Exactness::Bracket => "bracket",
    }
}

/// `exact`, `ppt-exact` or `bracket`, with `-unconverged` appended when an
/// iterative method hit its limit.
pub fn status(b: &Bracket) -> String {
    let base = exactness_label(b.exactness);
    if b.converged {
        base.to_string()
    } else {
        format!("{base}-unconverged")
    }
}

pub fn bracket_json(b: &Bracket) -> Value {
    json!({
        "lower": b.lower,
        "upper": b.upper,
        "gap": b.width(),
        "relaxation": exactness_label(b.exactness),
        "converged": b.converged,
        "iterations": b.iterations,
        "seconds": b.runtime.as_secs_f64(),
        "lower_certificate": b.lower_certificate.summary(),
        "upper_certificate": b.upper_certificate.summary(),
    })
}

/// One CSV row; `None` cells print as `NA`.
#[derive(Clone, Debug)]
pub struct CsvRow {
    pub command: String,
    pub state_id: String,
    pub n: usize,
    pub k: Option<f64>,
    pub y: Option<f64>,
    pub eps: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub status: String,
    pub seconds: Option<f64>,
}

fn num(x: f64) -> String {
    // fixed precision keeps repeated runs byte-identical
    let s = format!("{x:.10}");
    if s == "-0.0000000000" {
        "0.0000000000".into()
    } else {
        s
    }
}

fn opt(x: Option<f64>, f: impl Fn(f64) -> String) -> String {
    x.map(f).unwrap_or_else(|| "NA".into())
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.command,
            r.state_id,
            r.n,
            opt(r.k, |k| format!("{k}")),
            opt(r.y, |y| format!("{y}")),
            opt(r.eps, |e| format!("{e}")),
            num(r.lower),
            num(r.upper),
            num(r.upper - r.lower),
            r.status,
            opt(r.seconds, |s| format!("{s:.3}")),
        );
    }
    out
}
