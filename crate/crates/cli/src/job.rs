//! Command-line arguments and their validation into a [`JobSpec`].

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use qsep::hypotest::MAX_COPIES;
use qsep::measures::MeasureKind;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Entanglement measure bracket, optionally per copy over n copies.
    Measure,
    /// Best singlet fraction with target dimension K.
    Fsep,
    /// n-copy Stein functional at rate y.
    Stein,
    /// Distillation / formation maps and reversibility runs.
    Protocol,
    /// Grid over n and y with one CSV row per cell.
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "qsep", version, about = "Certified brackets for entanglement measures and non-entangling protocols")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// State JSON file.
    #[arg(long)]
    pub state: PathBuf,
    /// Measure, functional or protocol variant (see README).
    #[arg(long)]
    pub kind: Option<String>,
    /// Target dimension of the maximally entangled state.
    #[arg(long = "K", alias = "k")]
    pub k: Option<f64>,
    /// Number of copies: `3`, `1..3` or `1,2`.
    #[arg(long)]
    pub n: Option<String>,
    /// Rate: a scalar or an inclusive `start:step:end` grid.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep CSV path; defaults to the report path with a `.csv` extension.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Record per-cell wall time in the CSV (makes it run-dependent).
    #[arg(long)]
    pub timing: bool,
}

/// What a job evaluates.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Target {
    Measure { measure: &'static str, eps: Option<f64> },
    Fsep,
    FsepRelaxed { eps: f64 },
    FsepBounded { eps: f64 },
    Stein,
    Sfne,
    Distill,
    Formation,
    Reversibility,
}

impl Target {
    pub fn label(&self) -> String {
        match self {
            Target::Measure { measure, .. } => measure.to_string(),
            Target::Fsep => "fsep".into(),
            Target::FsepRelaxed { .. } => "fsep-relaxed".into(),
            Target::FsepBounded { .. } => "fsep-bounded".into(),
            Target::Stein => "stein".into(),
            Target::Sfne => "sfne".into(),
            Target::Distill => "distill".into(),
            Target::Formation => "formation".into(),
            Target::Reversibility => "reversibility".into(),
        }
    }

    pub fn measure_kind(&self) -> Option<MeasureKind> {
        match *self {
            Target::Measure { measure, eps } => Some(match measure {
                "er" => MeasureKind::RelEntropy,
                "rg" => MeasureKind::GlobalRobustness,
                "lrg" => MeasureKind::LogRobustness,
                "lrg-smoothed" => MeasureKind::SmoothedLogRobustness { eps: eps.unwrap_or(0.0) },
                "r" => MeasureKind::MixingRobustness,
                "lr" => MeasureKind::LogMixingRobustness,
                _ => return None,
            }),
            _ => None,
        }
    }
}

/// Validated job.
#[derive(Clone, Debug, serde::Serialize)]
pub struct JobSpec {
    pub command: Command,
    pub state: PathBuf,
    pub target: Target,
    pub k: Option<f64>,
    pub n: Vec<usize>,
    pub y: Vec<f64>,
    pub eps: Option<f64>,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub timing: bool,
}

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

/// Rounds grid values so that `0.1·3` prints as `0.3`.
fn tidy(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// `"1.5"` or inclusive `"start:step:end"`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| -> Result<f64, CliError> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_err(format!("`{t}` is not a finite number")))
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, step, b] => {
            let (a, step, b) = (num(a)?, num(step)?, num(b)?);
            if !(step > 0.0) || b < a {
                return Err(parse_err(format!("grid `{s}` needs step > 0 and end >= start")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 10_000 {
                return Err(parse_err(format!("grid `{s}` has {count} points")));
            }
            Ok((0..count).map(|i| tidy(a + i as f64 * step)).collect())
        }
        _ => Err(parse_err(format!("grid `{s}` must be a number or start:step:end"))),
    }
}

/// `"3"`, inclusive `"1..3"` or `"1,2"`.
pub fn parse_copies(s: &str) -> Result<Vec<usize>, CliError> {
    let one = |t: &str| -> Result<usize, CliError> {
        t.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| parse_err(format!("`{t}` is not a positive integer")))
    };
    let out = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (one(a)?, one(b.trim_start_matches('='))?);
        if b < a {
            return Err(parse_err(format!("empty copy range `{s}`")));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(one).collect::<Result<Vec<_>, _>>()?
    };
    Ok(out)
}

fn target_for(command: Command, kind: Option<&str>, eps: Option<f64>) -> Result<Target, CliError> {
    let measure = |name: &str| -> Result<Target, CliError> {
        let measure = match name {
            "er" => "er",
            "rg" => "rg",
            "lrg" => "lrg",
            "lrg-smoothed" => "lrg-smoothed",
            "r" => "r",
            "lr" => "lr",
            other => return Err(parse_err(format!("unknown measure kind `{other}`"))),
        };
        if measure == "lrg-smoothed" && eps.is_none() {
            return Err(parse_err("lrg-smoothed needs --eps"));
        }
        Ok(Target::Measure { measure, eps })
    };
    let fsep_variant = |name: &str| -> Result<Target, CliError> {
        match name {
            "fsep" | "plain" => Ok(Target::Fsep),
            "relaxed" | "fsep-relaxed" => Ok(Target::FsepRelaxed {
                eps: eps.ok_or_else(|| parse_err("relaxed fsep needs --eps"))?,
            }),
            "bounded" | "fsep-bounded" => Ok(Target::FsepBounded {
                eps: eps.ok_or_else(|| parse_err("bounded fsep needs --eps"))?,
            }),
            other => Err(parse_err(format!("unknown fsep kind `{other}`"))),
        }
    };
    match command {
        Command::Measure => measure(kind.unwrap_or("er")),
        Command::Fsep => fsep_variant(kind.unwrap_or("fsep")),
        Command::Stein => match kind.unwrap_or("stein") {
            "stein" => Ok(Target::Stein),
            "sfne" => Ok(Target::Sfne),
            other => Err(parse_err(format!("unknown stein kind `{other}`"))),
        },
        Command::Protocol => match kind {
            Some("distill") => Ok(Target::Distill),
            Some("formation") => Ok(Target::Formation),
            Some("reversibility") => Ok(Target::Reversibility),
            Some(other) => Err(parse_err(format!("unknown protocol kind `{other}`"))),
            None => Err(parse_err("protocol needs --kind distill|formation|reversibility")),
        },
        Command::Sweep => {
            let kind = kind.ok_or_else(|| parse_err("sweep needs --kind"))?;
            match kind {
                "stein" => Ok(Target::Stein),
                "sfne" => Ok(Target::Sfne),
                "fsep" | "fsep-relaxed" | "fsep-bounded" => fsep_variant(kind),
                other => measure(other),
            }
        }
    }
}

impl JobSpec {
    /// Checks every parameter against the operation's preconditions; no
    /// state is read here.
    pub fn from_args(args: Args) -> Result<Self, CliError> {
        if !(args.tol > 0.0 && args.tol < 1.0) {
            return Err(parse_err(format!("--tol {} must lie in (0, 1)", args.tol)));
        }
        if let Some(e) = args.eps {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(parse_err(format!("--eps {e} must be a finite number >= 0")));
            }
        }
        let target = target_for(args.command, args.kind.as_deref(), args.eps)?;
        let n = match &args.n {
            Some(s) => parse_copies(s)?,
            None => vec![1],
        };
        let y = match &args.y {
            Some(s) => parse_grid(s)?,
            None => Vec::new(),
        };
        if let Some(k) = args.k {
            if !(k >= 1.0 && k.is_finite()) {
                return Err(parse_err(format!("--K {k} must be a finite number >= 1")));
            }
        }
        let max_n = *n.iter().max().expect("non-empty");
        let needs_y = matches!(target, Target::Stein | Target::Sfne)
            || (args.command == Command::Sweep && matches!(target, Target::Fsep | Target::FsepRelaxed { .. } | Target::FsepBounded { .. }));
        if needs_y && y.is_empty() {
            return Err(parse_err("--y is required for this command"));
        }
        match target {
            Target::Stein | Target::Sfne if max_n > MAX_COPIES => {
                return Err(parse_err(format!("--n {max_n} exceeds the limit of {MAX_COPIES} copies")));
            }
            Target::Reversibility if max_n > 2 => {
                return Err(parse_err("reversibility runs take n <= 2"));
            }
            Target::Distill | Target::Formation => {
                if n != [1] {
                    return Err(parse_err("distill and formation maps act on a single copy; drop --n"));
                }
                let k = args.k.ok_or_else(|| parse_err("--K is required"))?;
                if k.fract() != 0.0 || k < 2.0 {
                    return Err(parse_err(format!("--K {k} must be an integer >= 2 for maps")));
                }
            }
            Target::Fsep | Target::FsepRelaxed { .. } | Target::FsepBounded { .. }
                if args.command == Command::Fsep && args.k.is_none() =>
            {
                return Err(parse_err("--K is required"));
            }
            _ => {}
        }
        if args.command == Command::Sweep && args.out.is_none() && args.csv.is_none() {
            return Err(parse_err("sweep needs --out or --csv"));
        }
        if args.command != Command::Sweep && args.csv.is_some() {
            return Err(parse_err("--csv only applies to sweep"));
        }
        Ok(Self {
            command: args.command,
            state: args.state,
            target,
            k: args.k,
            n,
            y,
            eps: args.eps,
            tol: args.tol,
            seed: args.seed,
            out: args.out,
            csv: args.csv,
            timing: args.timing,
        })
    }
}
