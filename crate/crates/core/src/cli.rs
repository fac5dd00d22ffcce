//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cmdata::enumerate_alphas;
use crate::fields::CmPairConfig;
use crate::gzoracle::{gz_compare, OracleError};
use crate::hecke::{report, IntersectionReport};

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_OK: i32 = 0;
/// Computation finished but a check failed (gz-check mismatch) or an
/// internal error surfaced.
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "shimura-cm", version, about = "Arithmetic intersection numbers of CM divisors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    #[arg(long, allow_negative_numbers = true)]
    pub d1: i64,
    #[arg(long, allow_negative_numbers = true)]
    pub d2: i64,
    /// Quaternion algebra discriminant.
    #[arg(long = "dB", default_value_t = 1, allow_negative_numbers = true)]
    pub db: i64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub m: i64,
    /// Emit a JSON envelope instead of text.
    #[arg(long)]
    pub json: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an input configuration.
    Validate(Common),
    /// List the trace-m elements alpha.
    Alphas(Common),
    /// Itemized degree terms over (alpha, theta).
    Degree {
        #[command(flatten)]
        common: Common,
        /// Keep only rows with this a.
        #[arg(long, allow_negative_numbers = true)]
        a: Option<i64>,
        /// Keep only rows with this theta index.
        #[arg(long)]
        theta: Option<usize>,
        /// Write rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Total intersection number.
    Intersect {
        #[command(flatten)]
        common: Common,
        /// Write the itemized rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare with the numerically computed J(d1, d2)^2 (dB = 1, m = 1).
    GzCheck {
        #[command(flatten)]
        common: Common,
        /// Starting precision in bits (default: automatic).
        #[arg(long)]
        prec_bits: Option<u32>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Alphas(_) => "alphas",
            Command::Degree { .. } => "degree",
            Command::Intersect { .. } => "intersect",
            Command::GzCheck { .. } => "gz-check",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Validate(c) | Command::Alphas(c) => c,
            Command::Degree { common, .. }
            | Command::Intersect { common, .. }
            | Command::GzCheck { common, .. } => common,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub inputs: Value,
    pub result: Option<Value>,
    /// JSON pointers of float-valued approximations inside `result`.
    pub approximate: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
}

struct Outcome {
    code: i32,
    result: Option<Value>,
    approximate: Vec<&'static str>,
    error: Option<Value>,
    text: String,
}

impl Outcome {
    fn ok(result: Value, text: String) -> Self {
        Self {
            code: EXIT_OK,
            result: Some(result),
            approximate: Vec::new(),
            error: None,
            text,
        }
    }

    fn fail(code: i32, kind: &str, message: String) -> Self {
        Self {
            code,
            result: None,
            approximate: Vec::new(),
            error: Some(json!({ "kind": kind, "message": message })),
            text: format!("error: {message}"),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn csv_rows(report: &IntersectionReport, path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["a", "theta", "diff", "L", "R", "p", "c_p"])?;
    for row in &report.rows {
        let a = row.a.to_string();
        let diff = row.diff.join(";");
        let length = row.length.clone().unwrap_or_default();
        let rho = row.rho.map(|r| r.to_string()).unwrap_or_default();
        let terms: Vec<(String, String)> = row
            .degree
            .terms()
            .map(|(p, c)| (p.to_string(), crate::degrees::rational_string(c)))
            .collect();
        if terms.is_empty() {
            w.write_record([&a, &row.theta, &diff, &length, &rho, "", "0"])?;
        }
        for (p, c) in terms {
            w.write_record([&a, &row.theta, &diff, &length, &rho, &p, &c])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn report_text(report: &IntersectionReport) -> String {
    let mut s = String::new();
    for r in &report.rows {
        s.push_str(&format!(
            "a={} theta={} diff=[{}] L={} R={} deg={}\n",
            r.a,
            if r.theta.is_empty() { "-" } else { &r.theta },
            r.diff.join(","),
            r.length.as_deref().unwrap_or("-"),
            r.rho.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
            r.degree
        ));
    }
    s.push_str(&format!("total: {}\n", report.total));
    s
}

fn execute(cmd: &Command) -> Outcome {
    let c = cmd.common();
    let config = match CmPairConfig::validate(c.d1, c.d2, c.db, c.m) {
        Ok(cfg) => cfg,
        Err(e) => return Outcome::fail(EXIT_VALIDATION, e.name(), e.to_string()),
    };
    match cmd {
        Command::Validate(_) => Outcome::ok(to_value(&config), format!("valid: {config}")),
        Command::Alphas(_) => {
            let alphas: Vec<Value> = enumerate_alphas(&config)
                .iter()
                .map(|a| {
                    let (x, y) = a.companion().coords();
                    json!({
                        "a": a.a(),
                        "companion": [x.to_string(), y.to_string()],
                        "companion_norm": a.companion_norm().to_string(),
                    })
                })
                .collect();
            let mut text = String::new();
            for a in enumerate_alphas(&config) {
                text.push_str(&format!("a={} e={} |N(e)|={}\n", a.a(), a.companion(), a.companion_norm()));
            }
            text.push_str(&format!("{} elements", alphas.len()));
            Outcome::ok(json!({ "count": alphas.len(), "alphas": alphas }), text)
        }
        Command::Degree { a, theta, csv, .. } => {
            let mut rep = match report(&config) {
                Ok(r) => r,
                Err(e) => return Outcome::fail(EXIT_FAILED, "Degree", e.to_string()),
            };
            rep.rows.retain(|r| a.is_none_or(|a| r.a == a) && theta.is_none_or(|t| r.theta_index == t));
            rep.total = rep.rows.iter().map(|r| r.degree.clone()).sum();
            rep.numeric_total = rep.total.log_value();
            if let Some(path) = csv {
                if let Err(e) = csv_rows(&rep, path) {
                    return Outcome::fail(EXIT_FAILED, "Io", e.to_string());
                }
            }
            let text = report_text(&rep);
            let mut out = Outcome::ok(to_value(&rep), text);
            out.approximate.push("/numeric_total");
            out
        }
        Command::Intersect { csv, .. } => {
            let rep = match report(&config) {
                Ok(r) => r,
                Err(e) => return Outcome::fail(EXIT_FAILED, "Degree", e.to_string()),
            };
            if let Some(path) = csv {
                if let Err(e) = csv_rows(&rep, path) {
                    return Outcome::fail(EXIT_FAILED, "Io", e.to_string());
                }
            }
            let text = format!("{}\n~ {:.12}", rep.total, rep.numeric_total);
            let mut out = Outcome::ok(
                json!({ "coeffs": to_value(&rep.total), "log_value": rep.numeric_total }),
                text,
            );
            out.approximate.push("/log_value");
            out
        }
        Command::GzCheck { prec_bits, .. } => match gz_compare(c.d1, c.d2, *prec_bits) {
            Ok(cmp) => {
                let mut text = format!(
                    "J^2 = {} ({} bits)\n",
                    cmp.oracle.value, cmp.oracle.precision
                );
                for row in &cmp.primes {
                    text.push_str(&format!(
                        "p={} oracle={} formula={} {}\n",
                        row.p,
                        row.oracle_exponent,
                        row.formula_coeff,
                        if row.equal { "=" } else { "!=" }
                    ));
                }
                text.push_str(if cmp.pass { "pass" } else { "FAIL" });
                let mut out = Outcome::ok(to_value(&cmp), text);
                if !cmp.pass {
                    out.code = EXIT_FAILED;
                }
                out.approximate.extend([
                    "/oracle/error_bound",
                    "/oracle/distance",
                    "/oracle/imag_ratio_log2",
                ]);
                out
            }
            Err(OracleError::PrecisionExhausted(p)) => Outcome::fail(
                EXIT_PRECISION,
                "PrecisionExhausted",
                OracleError::PrecisionExhausted(p).to_string(),
            ),
            Err(OracleError::Config(e)) => Outcome::fail(EXIT_VALIDATION, e.name(), e.to_string()),
            Err(e) => Outcome::fail(EXIT_FAILED, "Oracle", e.to_string()),
        },
    }
}

fn inputs(cmd: &Command) -> Value {
    let c = cmd.common();
    let mut v = json!({ "d1": c.d1, "d2": c.d2, "dB": c.db, "m": c.m });
    match cmd {
        Command::GzCheck { prec_bits: Some(p), .. } => {
            v["prec_bits"] = json!(p);
        }
        Command::Degree { a, theta, .. } => {
            if let Some(a) = a {
                v["a"] = json!(a);
            }
            if let Some(t) = theta {
                v["theta"] = json!(t);
            }
        }
        _ => {}
    }
    v
}

/// Run one invocation, writing to `out` / `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let cmd = &cli.command;
    let common = cmd.common();
    let outcome = match common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| execute(cmd)),
            Err(e) => Outcome::fail(EXIT_USAGE, "Threads", e.to_string()),
        },
        None => execute(cmd),
    };
    if common.json {
        let env = Envelope {
            schema_version: SCHEMA_VERSION,
            command: cmd.name(),
            inputs: inputs(cmd),
            result: outcome.result,
            approximate: outcome.approximate,
            error: outcome.error,
        };
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&env).expect("serializable"));
    } else if outcome.error.is_some() {
        let _ = writeln!(err, "{}", outcome.text);
    } else {
        let _ = writeln!(out, "{}", outcome.text);
    }
    outcome.code
}
