mod args;
mod report;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format, OutputArgs};
use report::RunConfig;

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("STATCHAR_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("STATCHAR_THREADS must be a number, got {v:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> anyhow::Result<u8> {
    init_threads()?;
    let (name, output, default): (&'static str, &OutputArgs, Format) = match &cli.command {
        Command::Seq(a) => ("seq", &a.output, Format::Text),
        Command::Expand(a) => ("expand", &a.output, Format::Json),
        Command::Norm(a) => ("norm", &a.output, Format::Json),
        Command::Verdict(a) => ("verdict", &a.output, if a.trace { Format::Csv } else { Format::Json }),
        Command::Density(a) => ("density", &a.output, Format::Json),
        Command::Hypothesis(a) => ("hypothesis", &a.output, Format::Json),
        Command::Reproduce(a) => ("reproduce", &a.output, Format::Json),
    };
    let mut cfg = RunConfig::new(name, output.format.unwrap_or(default), output.out.as_deref());
    let out = match &cli.command {
        Command::Seq(a) => run::seq(a, &mut cfg),
        Command::Expand(a) => run::expand(a, &mut cfg),
        Command::Norm(a) => run::norm_cmd(a, &mut cfg),
        Command::Verdict(a) => run::verdict(a, &mut cfg),
        Command::Density(a) => run::density(a, &mut cfg),
        Command::Hypothesis(a) => run::hypothesis(a, &mut cfg),
        Command::Reproduce(a) => run::reproduce_cmd(a, &mut cfg),
    }?;
    let rendered = report::render(&cfg, &out)?;
    report::write(&cfg, &rendered).map_err(|e| e.context(Io))?;
    Ok(out.status.code())
}

#[derive(Debug)]
struct Io;

impl std::fmt::Display for Io {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("output failed")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<Io>().is_some() { 1 } else { 2 })
        }
    }
}
