use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use wdro_core::ErrorKind;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// Bad input detected by the front end itself.
#[derive(Debug)]
pub struct Validation(pub String);

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

pub fn validation(msg: impl Into<String>) -> anyhow::Error {
    Validation(msg.into()).into()
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    exit_code: u8,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<wdro_core::Error>() {
            return match e.kind() {
                ErrorKind::Validation => (EXIT_VALIDATION, "validation"),
                ErrorKind::Numerical => (EXIT_NUMERICAL, "numerical"),
                ErrorKind::Io => (EXIT_IO, "io"),
            };
        }
        if cause.is::<Validation>() {
            return (EXIT_VALIDATION, "validation");
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() || cause.is::<serde_json::Error>() {
            return (EXIT_IO, "io");
        }
    }
    (EXIT_NUMERICAL, "numerical")
}

/// Exit status and the JSON object printed on stderr.
pub fn error_report(err: &anyhow::Error) -> (u8, String) {
    let (code, kind) = classify(err);
    let report = ErrorReport {
        error: ErrorBody {
            kind,
            exit_code: code,
            message: format!("{err:#}"),
        },
    };
    let body = serde_json::to_string(&report).unwrap_or_else(|_| format!("{{\"error\":{{\"exit_code\":{code}}}}}"));
    (code, body)
}

/// Seconds since the epoch; `SOURCE_DATE_EPOCH` overrides the clock.
pub fn now_unix() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub generated_at_unix: u64,
    pub config: C,
    pub notes: Vec<String>,
    pub result: R,
}

impl<'a, C: Serialize, R: Serialize> Report<'a, C, R> {
    pub fn new(command: &'a str, config: C, result: R) -> Self {
        Report {
            command,
            generated_at_unix: now_unix(),
            config,
            notes: Vec::new(),
            result,
        }
    }
}

pub fn resolve(out: Option<&Path>, out_dir: &Path, default_name: &str) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => out_dir.join(default_name),
    }
}

fn create_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    create_parent(path)?;
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).with_context(|| format!("writing {}", path.display()))?;
    writeln!(out)
        .and_then(|_| out.flush())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
