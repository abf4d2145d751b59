use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use strata_core::exec::{render, Format};
use strata_core::{rules, sql, Catalog, Error, PlannerKind, Session, SessionOptions};

mod split;

use split::Splitter;

/// Runs and explains SQL over the data sources in a model file.
#[derive(Debug, Parser)]
#[command(name = "strata", version)]
struct Args {
    /// Model file describing schemas, views and materializations.
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,

    /// SQL to run; several statements may be separated by `;`.
    #[arg(short = 'e', value_name = "SQL", conflicts_with = "file")]
    execute: Option<String>,

    /// Script of `;`-terminated statements.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,

    #[arg(long, default_value = "table", value_parser = parse_format)]
    format: Format,

    #[arg(long, default_value = "cost", value_parser = parse_planner)]
    planner: PlannerKind,

    /// Rule to leave out of planning (repeatable).
    #[arg(long = "disable-rule", value_name = "NAME")]
    disable_rule: Vec<String>,

    /// Print the planner trace (before EXPLAIN output, on stderr otherwise).
    #[arg(long)]
    trace: bool,

    #[arg(long)]
    no_materializations: bool,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn parse_planner(s: &str) -> Result<PlannerKind, String> {
    s.parse()
}

const EXIT_SQL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let args = Args::parse();
    let session = match open(&args) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let shell = Shell {
        session,
        format: args.format,
    };
    let status = if let Some(text) = &args.execute {
        shell.script(text)
    } else if let Some(path) = &args.file {
        match std::fs::read_to_string(path) {
            Ok(text) => shell.script(&text),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    } else {
        shell.repl()
    };
    match status {
        Ok(()) => ExitCode::SUCCESS,
        Err(()) => ExitCode::from(EXIT_SQL),
    }
}

fn open(args: &Args) -> Result<Session, String> {
    let catalog = match &args.model {
        Some(path) => strata_core::adapter::load_model_file(path).map_err(|e| e.to_string())?,
        None => Catalog::new("default"),
    };
    let known: Vec<String> = rules::standard_rules(&catalog)
        .iter()
        .map(|r| r.name().to_ascii_uppercase())
        .collect();
    if let Some(bad) = args
        .disable_rule
        .iter()
        .find(|r| !known.contains(&r.to_ascii_uppercase()))
    {
        return Err(format!("unknown rule '{bad}'"));
    }
    let options = SessionOptions {
        planner: args.planner,
        disabled_rules: args.disable_rule.clone(),
        trace: args.trace,
        materializations: !args.no_materializations,
        ..SessionOptions::default()
    };
    Ok(Session::with_options(catalog, options))
}

struct Shell {
    session: Session,
    format: Format,
}

impl Shell {
    /// Runs every statement in `text`, stopping at the first error.
    fn script(&self, text: &str) -> Result<(), ()> {
        let mut splitter = Splitter::new();
        let mut stmts = splitter.push(text);
        stmts.extend(splitter.finish());
        for stmt in stmts {
            self.statement(&stmt)?;
        }
        Ok(())
    }

    /// Line-based loop; errors are reported and the loop goes on.
    fn repl(&self) -> Result<(), ()> {
        let stdin = io::stdin();
        let interactive = stdin.is_terminal();
        let mut splitter = Splitter::new();
        let mut failed = false;
        let prompt = |more: bool| {
            if interactive {
                print!("{}", if more { "   ...> " } else { "strata> " });
                let _ = io::stdout().flush();
            }
        };
        prompt(false);
        for line in stdin.lock().lines() {
            let Ok(line) = line else { break };
            for stmt in splitter.push(&format!("{line}\n")) {
                failed |= self.statement(&stmt).is_err();
            }
            prompt(!splitter.is_empty());
        }
        if let Some(stmt) = splitter.finish() {
            failed |= self.statement(&stmt).is_err();
        }
        if interactive {
            println!();
        }
        // piped input keeps going after errors but still reports them
        if failed && !interactive {
            Err(())
        } else {
            Ok(())
        }
    }

    fn statement(&self, text: &str) -> Result<(), ()> {
        self.run(text).map_err(|e| report(text, &e))
    }

    fn run(&self, text: &str) -> Result<(), Error> {
        let stmt = sql::plan_statement(text, self.session.catalog())?;
        let prepared = self.session.optimize(&stmt.plan)?;
        let mut out = io::stdout().lock();
        if stmt.explain {
            if self.session.options().trace {
                for line in &prepared.trace {
                    let _ = writeln!(out, "{line}");
                }
            }
            let _ = write!(out, "{}", self.session.explain(&prepared.plan));
            return Ok(());
        }
        if self.session.options().trace {
            for line in &prepared.trace {
                eprintln!("{line}");
            }
        }
        let rows = self.session.execute(&prepared.plan)?;
        let _ = write!(out, "{}", render(self.format, prepared.logical.row_type(), &rows));
        Ok(())
    }
}

/// Prints `err`; SQL errors also show the offending line with a caret.
fn report(text: &str, err: &Error) {
    eprintln!("error: {err}");
    if let Error::Sql(e) = err {
        let pos = e.pos();
        if let Some(line) = text.lines().nth(pos.line.saturating_sub(1)) {
            eprintln!("  {line}");
            eprintln!("  {}^", " ".repeat(pos.col.saturating_sub(1)));
        }
    }
}
