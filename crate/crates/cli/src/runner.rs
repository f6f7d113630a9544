//! Executes a validated [`JobSpec`].

use std::path::PathBuf;
use std::time::Instant;

use qsep::hypotest::{fsep_bounded_with, fsep_relaxed_with, fsep_with, sfne_eval_with, stein_functional_with};
use qsep::measures::{power_within_limit, regularized_estimate_with, MeasureKind};
use qsep::protocols::{
    build_distill_map, build_formation_map, find_mixing_state, reversibility_demo, verify_cptp, verify_sepp,
    Channel, CptpReport, ReversibilityOptions, SeppCertificate,
};
use qsep::states::max_entangled_vector;
use qsep::tensor_core::trace_norm;
use qsep::{Bracket, HermitianOp, MultiState, SolveOptions};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::job::{Command, JobSpec, Target};
use crate::report::{bracket_json, render_csv, status, CsvRow};
use crate::state_io::{load_state, state_id};

/// Report JSON and, for sweeps, the CSV text.
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
}

/// Loads the state, checks sizes, runs the job and assembles the report.
pub fn run(job: &JobSpec) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let rho = load_state(&job.state)?;
    let max_n = *job.n.iter().max().expect("validated non-empty");
    // size check up front so that an oversized power fails before any solve
    power_within_limit(&rho, max_n)?;

    let opts = SolveOptions::new(job.tol, job.seed);
    let (results, csv) = match job.command {
        Command::Measure => (measure(job, &rho, &opts)?, None),
        Command::Fsep => (fsep(job, &rho, &opts)?, None),
        Command::Stein => (stein(job, &rho, &opts)?, None),
        Command::Protocol => (protocol(job, &rho, &opts)?, None),
        Command::Sweep => {
            let rows = sweep(job, &rho, &opts)?;
            let results = rows.iter().map(row_json).collect();
            (Value::Array(results), Some(render_csv(&rows)))
        }
    };

    let report = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": job.command,
        "target": job.target,
        "inputs": {
            "state": job.state.display().to_string(),
            "dims": rho.profile().dims(),
            "K": job.k,
            "n": job.n,
            "y": job.y,
            "eps": job.eps,
        },
        "tol": job.tol,
        "seed": job.seed,
        "results": results,
        "wall_seconds": started.elapsed().as_secs_f64(),
    });
    Ok(Outcome { report, csv })
}

fn measure(job: &JobSpec, rho: &MultiState, opts: &SolveOptions) -> Result<Value, CliError> {
    let kind = job.target.measure_kind().expect("measure target");
    let max_n = *job.n.iter().max().expect("non-empty");
    let mut out = Vec::new();
    if max_n == 1 {
        let b = kind.evaluate(rho, opts)?;
        out.push(json!({ "n": 1, "measure": kind.name(), "total": bracket_json(&b), "per_copy": bracket_json(&b) }));
    } else {
        let trace = regularized_estimate_with(kind, rho, max_n, opts)?;
        for e in trace.entries.iter().filter(|e| job.n.contains(&e.n)) {
            out.push(json!({
                "n": e.n,
                "measure": kind.name(),
                "total": bracket_json(&e.total),
                "per_copy": bracket_json(&e.per_copy),
            }));
        }
    }
    Ok(Value::Array(out))
}

fn fsep_variant(target: &Target, rho_n: &MultiState, k: f64, opts: &SolveOptions) -> qsep::Result<Bracket> {
    match *target {
        Target::Fsep => fsep_with(rho_n, k, opts),
        Target::FsepRelaxed { eps } => fsep_relaxed_with(rho_n, k, eps, opts),
        Target::FsepBounded { eps } => fsep_bounded_with(rho_n, k, eps, opts),
        _ => unreachable!("fsep target"),
    }
}

fn fsep(job: &JobSpec, rho: &MultiState, opts: &SolveOptions) -> Result<Value, CliError> {
    let k = job.k.expect("validated");
    let mut out = Vec::new();
    for &n in &job.n {
        let rho_n = power_within_limit(rho, n)?;
        let b = fsep_variant(&job.target, &rho_n, k, opts)?;
        out.push(json!({ "n": n, "K": k, "bracket": bracket_json(&b) }));
    }
    Ok(Value::Array(out))
}

fn stein(job: &JobSpec, rho: &MultiState, opts: &SolveOptions) -> Result<Value, CliError> {
    let mut out = Vec::new();
    for &n in &job.n {
        for &y in &job.y {
            let cell = match job.target {
                Target::Sfne => {
                    let (b, rate) = sfne_eval_with(rho, n, y, opts)?;
                    json!({ "n": n, "y": y, "bracket": bracket_json(&b), "minimizing_b": rate })
                }
                _ => {
                    let b = stein_functional_with(rho, n, y, opts)?;
                    json!({ "n": n, "y": y, "bracket": bracket_json(&b) })
                }
            };
            out.push(cell);
        }
    }
    Ok(Value::Array(out))
}

fn cptp_json(r: &CptpReport) -> Value {
    json!({
        "min_choi_eigenvalue": r.min_choi_eigenvalue,
        "trace_preservation_error": r.trace_preservation_error,
        "passed": r.passed,
    })
}

fn sepp_json(c: &SeppCertificate) -> Value {
    json!({
        "epsilon": c.epsilon,
        "epsilon_lower": c.epsilon_lower,
        "method": c.method,
    })
}

fn protocol(job: &JobSpec, rho: &MultiState, opts: &SolveOptions) -> Result<Value, CliError> {
    match job.target {
        Target::Distill => {
            let k = job.k.expect("validated") as usize;
            let dims = rho.profile().dims();
            if dims.len() != 2 || dims[0] != dims[1] {
                return Err(CliError::Parse(format!(
                    "distill needs a d x d state, got dims {dims:?}"
                )));
            }
            let povm = HermitianOp::projector(&max_entangled_vector(dims[0]));
            let map = build_distill_map(&povm, rho.profile(), k)?;
            let out = map.apply(rho)?;
            let target = qsep::states::max_entangled(k)?;
            let sepp = verify_sepp(&map, opts)?;
            let cptp = verify_cptp(&Channel::from(map));
            Ok(json!({
                "K": k,
                "output_fidelity": out.op().inner(target.op()),
                "sepp": sepp_json(&sepp),
                "cptp": cptp_json(&cptp),
            }))
        }
        Target::Formation => {
            let k = job.k.expect("validated") as usize;
            let mix = find_mixing_state(rho, k, opts)?;
            let map = build_formation_map(rho, k, &mix.pi, &mix.mixture)?;
            let produced = map.apply(&qsep::states::max_entangled(k)?)?;
            let error = trace_norm(&produced.op().sub(rho.op()));
            let sepp = verify_sepp(&map, opts)?;
            let cptp = verify_cptp(&Channel::from(map));
            Ok(json!({
                "K": k,
                "robustness_upper": mix.robustness_upper,
                "mixture_certificate": mix.mixture.summary(),
                "output_trace_distance": error,
                "sepp": sepp_json(&sepp),
                "epsilon_limit": 1.0 / (k as f64 - 1.0),
                "cptp": cptp_json(&cptp),
            }))
        }
        Target::Reversibility => {
            let ropts = ReversibilityOptions {
                solve: opts.clone(),
                ..ReversibilityOptions::default()
            };
            let mut out = Vec::new();
            for &n in &job.n {
                let r = reversibility_demo(rho, n, &ropts)?;
                let table: Vec<Value> = r
                    .distill_table
                    .iter()
                    .map(|row| json!({ "y": row.y, "K": row.k, "fidelity": bracket_json(&row.fidelity) }))
                    .collect();
                out.push(json!({
                    "n": r.n,
                    "max_error": ropts.max_error,
                    "distill_table": table,
                    "distill_rate": bracket_json(&r.distill_rate),
                    "distill_epsilon": r.distill_epsilon,
                    "form_K": r.form_k,
                    "form_rate": bracket_json(&r.form_rate),
                    "form_epsilon": r.form_epsilon,
                    "form_error": r.form_error,
                    "er_per_copy": bracket_json(&r.er_per_copy),
                    "gap": bracket_json(&r.gap),
                }));
            }
            Ok(Value::Array(out))
        }
        _ => unreachable!("protocol target"),
    }
}

/// One grid cell of a sweep.
#[derive(Clone, Copy)]
struct Cell {
    n: usize,
    y: Option<f64>,
}

fn sweep(job: &JobSpec, rho: &MultiState, opts: &SolveOptions) -> Result<Vec<CsvRow>, CliError> {
    let kind: Option<MeasureKind> = job.target.measure_kind();
    let cells: Vec<Cell> = if kind.is_some() {
        job.n.iter().map(|&n| Cell { n, y: None }).collect()
    } else {
        job.n
            .iter()
            .flat_map(|&n| job.y.iter().map(move |&y| Cell { n, y: Some(y) }))
            .collect()
    };
    let id = state_id(&job.state);
    let label = job.target.label();

    // cells are independent and deterministic given the seed; results are
    // collected in grid order so the CSV does not depend on scheduling
    let evaluated: Vec<Result<CsvRow, CliError>> = cells
        .par_iter()
        .map(|cell| {
            let t = Instant::now();
            let (k, bracket) = match (&job.target, kind) {
                (_, Some(kind)) => {
                    let rho_n = power_within_limit(rho, cell.n)?;
                    let nf = cell.n as f64;
                    (None, kind.evaluate(&rho_n, opts)?.map_monotone(|v| v / nf))
                }
                (Target::Stein, None) => (None, stein_functional_with(rho, cell.n, cell.y.expect("rate"), opts)?),
                (Target::Sfne, None) => (None, sfne_eval_with(rho, cell.n, cell.y.expect("rate"), opts)?.0),
                (target, None) => {
                    let k = (cell.n as f64 * cell.y.expect("rate")).exp2();
                    let rho_n = power_within_limit(rho, cell.n)?;
                    (Some(k), fsep_variant(target, &rho_n, k, opts)?)
                }
            };
            let seconds = t.elapsed().as_secs_f64();
            Ok(CsvRow {
                command: label.clone(),
                state_id: id.clone(),
                n: cell.n,
                k,
                y: cell.y,
                eps: job.eps,
                lower: bracket.lower,
                upper: bracket.upper,
                status: status(&bracket),
                seconds: job.timing.then_some(seconds),
            })
        })
        .collect();
    evaluated.into_iter().collect()
}

fn row_json(r: &CsvRow) -> Value {
    json!({
        "n": r.n,
        "K": r.k,
        "y": r.y,
        "lower": r.lower,
        "upper": r.upper,
        "gap": r.upper - r.lower,
        "status": r.status,
    })
}

/// Where the sweep CSV goes: `--csv`, else the report path with a `.csv`
/// extension.
pub fn csv_path(job: &JobSpec) -> Option<PathBuf> {
    job.csv.clone().or_else(|| job.out.as_ref().map(|p| p.with_extension("csv")))
}
