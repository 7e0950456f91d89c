use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

pub const SCHEMA: u32 = 1;

/// Everything needed to rerun a report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub args: Vec<String>,
    pub sequence: Option<Value>,
    pub point: Option<String>,
    pub horizon: Option<u64>,
    pub eps: Vec<String>,
    pub delta: Option<f64>,
    pub tol: Option<String>,
    pub format: Format,
    pub out: Option<String>,
    pub seedless: bool,
}

impl RunConfig {
    pub fn new(command: &'static str, format: Format, out: Option<&Path>) -> Self {
        RunConfig {
            command,
            args: std::env::args().skip(1).collect(),
            sequence: None,
            point: None,
            horizon: None,
            eps: Vec::new(),
            delta: None,
            tol: None,
            format,
            out: out.map(|p| p.display().to_string()),
            seedless: true,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: u32,
    library: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: &'a Value,
}

#[derive(Debug, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Table {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Process exit status besides hard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Inconclusive,
    CheckFailure,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Inconclusive => 3,
            Status::CheckFailure => 4,
        }
    }
}

pub struct Output {
    pub result: Value,
    pub table: Table,
    pub text: Option<String>,
    pub status: Status,
}

impl Output {
    pub fn new(result: impl Serialize, table: Table) -> Result<Self> {
        Ok(Output {
            result: serde_json::to_value(result)?,
            table,
            text: None,
            status: Status::Ok,
        })
    }

    pub fn with_text(mut self, text: String) -> Self {
        self.text = Some(text);
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

pub fn render(config: &RunConfig, output: &Output) -> Result<String> {
    match config.format {
        Format::Json => {
            let env = Envelope {
                schema: SCHEMA,
                library: "statchar",
                version: statchar::VERSION,
                config,
                result: &output.result,
            };
            Ok(serde_json::to_string_pretty(&env)? + "\n")
        }
        Format::Csv => {
            let mut buf = format!(
                "# statchar {} schema {SCHEMA} config {}\n",
                statchar::VERSION,
                serde_json::to_string(config)?
            )
            .into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(&output.table.headers)?;
                for row in &output.table.rows {
                    w.write_record(row)?;
                }
                w.flush()?;
            }
            Ok(String::from_utf8(buf)?)
        }
        Format::Text => match &output.text {
            Some(t) => Ok(t.clone()),
            None => bail!("text output is not available for {}; use --format json or csv", config.command),
        },
    }
}

pub fn write(config: &RunConfig, rendered: &str) -> Result<()> {
    match &config.out {
        Some(path) => fs::write(path, rendered).with_context(|| format!("writing {path}")),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(rendered.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}
