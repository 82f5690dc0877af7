//! Command-line front end. [`run`] is the whole program; the binary only
//! forwards its arguments and exit code.
//!
//! Exit codes: 0 success, 1 validation or parse failure, 2 IO failure,
//! 3 step budget exhausted, 4 conflict policy refusal, 5 composition
//! conflict.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::coverage::{self, Metric};
use crate::format::{parse_model, write_model, SourceMap};
use crate::model::{Id, Net};
use crate::sim::{self, ConflictPolicy, EventLifetime, ExecutionTrace, Schedule, SimConfig, SimError};
use crate::store::{self, StoreError};
use crate::validate::{Subject, Violation};
use crate::{dot, fixtures, patterns, testgen};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_CONFLICT: i32 = 4;
pub const EXIT_COMPOSITION: i32 = 5;

/// Environment variable overriding the default step budget.
pub const STEP_BUDGET_VAR: &str = "EDPN_STEP_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "edpn", version, about = "Swim lane event-driven Petri net toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model and list every violation.
    Validate { model: String },
    /// Run a model against a sequence of input events.
    Simulate {
        model: String,
        /// Comma-separated input events, one per step.
        #[arg(long, value_delimiter = ',')]
        events: Vec<String>,
        #[arg(long, value_enum, default_value_t = Policy::Lexicographic)]
        policy: Policy,
        #[arg(long, value_enum, default_value_t = Lifetime::Step)]
        event_lifetime: Lifetime,
        /// Allow more than one token per place.
        #[arg(long)]
        unbounded: bool,
        /// Print a per-lane execution table instead of the trace.
        #[arg(long)]
        table: bool,
    },
    /// Compose two models or relational stores.
    Compose {
        first: String,
        second: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate test cases reaching a coverage metric.
    GenTests {
        model: String,
        #[arg(long, value_enum, default_value_t = Cover::Ct)]
        cover: Cover,
        #[arg(long, default_value_t = 4)]
        max_firings: usize,
        #[arg(long, value_enum, default_value_t = Layout::Text)]
        format: Layout,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure a test case file against a model.
    Coverage {
        model: String,
        tests: String,
        #[arg(long, value_enum, default_value_t = Layout::Text)]
        format: Layout,
    },
    /// Render a model as DOT, relational or model text.
    Export {
        model: String,
        #[arg(long, value_enum, default_value_t = ExportFormat::Dot)]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the embedded fixtures, or print one.
    Fixtures { name: Option<String> },
    /// List the communication patterns found in a model.
    Lint { model: String },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Lexicographic,
    ErrorOnConflict,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Lifetime {
    Step,
    Persistent,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cover {
    Ct,
    Cp,
    Cie,
    Coe,
    Ccontext,
}

impl From<Cover> for Metric {
    fn from(c: Cover) -> Metric {
        match c {
            Cover::Ct => Metric::Ct,
            Cover::Cp => Metric::Cp,
            Cover::Cie => Metric::Cie,
            Cover::Coe => Metric::Coe,
            Cover::Ccontext => Metric::Ccontext,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Layout {
    Text,
    Rows,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Relational,
    Model,
}

/// A failure with its exit code. Partial output may accompany it.
struct Failure {
    code: i32,
    message: String,
    output: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
        output: String::new(),
    }
}

type Outcome = Result<String, Failure>;

/// Input resolved to text, with a name for diagnostics.
struct Source {
    name: String,
    text: String,
}

fn read_source(input: &str) -> Result<Source, Failure> {
    if let Some(name) = input.strip_prefix("fixtures:") {
        let text = fixtures::source(name).map_err(|e| fail(EXIT_IO, e.to_string()))?;
        return Ok(Source {
            name: input.to_string(),
            text: text.to_string(),
        });
    }
    let text = std::fs::read_to_string(input).map_err(|e| fail(EXIT_IO, format!("{input}: {e}")))?;
    Ok(Source {
        name: input.to_string(),
        text,
    })
}

/// Parses either format. Returns the source map for model text.
fn parse_source(src: &Source) -> Result<(Net, Option<SourceMap>), Failure> {
    let invalid = |e: String| fail(EXIT_INVALID, format!("{}: {e}", src.name));
    if store::is_relational(&src.text) {
        let st = store::parse_store(&src.text).map_err(|e| invalid(e.to_string()))?;
        let net = store::from_relations(&st).map_err(|e| invalid(e.to_string()))?;
        Ok((net, None))
    } else {
        let parsed = parse_model(&src.text).map_err(|e| invalid(e.to_string()))?;
        Ok((parsed.net, Some(parsed.source)))
    }
}

fn locate(v: &Violation, map: Option<&SourceMap>) -> String {
    let line = map.and_then(|m| match &v.subject {
        Subject::Element(id) => m.elements.get(id).copied(),
        Subject::Arc(a) => m.line_of_arc(a),
    });
    match line {
        Some(n) => format!("line {n}: {v}"),
        None => v.to_string(),
    }
}

/// Loads a model and refuses it when it has error-severity violations.
fn load_valid(input: &str) -> Result<Net, Failure> {
    let src = read_source(input)?;
    let (net, map) = parse_source(&src)?;
    let errors = crate::validate::errors(&net);
    if !errors.is_empty() {
        let lines: Vec<String> = errors.iter().map(|v| locate(v, map.as_ref())).collect();
        return Err(fail(
            EXIT_INVALID,
            format!("{}: model is not well-formed\n{}", src.name, lines.join("\n")),
        ));
    }
    Ok(net)
}

fn load_store(input: &str) -> Result<store::RelationalStore, Failure> {
    let src = read_source(input)?;
    let invalid = |e: StoreError| fail(EXIT_INVALID, format!("{}: {e}", src.name));
    if store::is_relational(&src.text) {
        let st = store::parse_store(&src.text).map_err(invalid)?;
        store::from_relations(&st).map_err(invalid)?;
        Ok(st)
    } else {
        let net = load_valid(input)?;
        store::to_relations(&net).map_err(invalid)
    }
}

fn step_budget() -> Result<usize, Failure> {
    match std::env::var(STEP_BUDGET_VAR) {
        Ok(raw) => raw.trim().parse().map_err(|_| {
            fail(
                EXIT_INVALID,
                format!("{STEP_BUDGET_VAR} must be a non-negative integer, got {raw:?}"),
            )
        }),
        Err(_) => Ok(sim::DEFAULT_STEP_BUDGET),
    }
}

fn simulate(model: &str, events: &[String], config: SimConfig, table: bool) -> Outcome {
    let net = load_valid(model)?;
    let mut ids = Vec::with_capacity(events.len());
    for e in events.iter().map(|e| e.trim()).filter(|e| !e.is_empty()) {
        ids.push(Id::new(e).map_err(|err| fail(EXIT_INVALID, err.to_string()))?);
    }
    let show = |trace: &ExecutionTrace| {
        if table {
            testgen::render_execution_table(&net, trace)
        } else {
            trace.to_string()
        }
    };
    match sim::run(&net, &Schedule::sequential(ids), &config) {
        Ok(trace) => Ok(show(&trace)),
        Err(SimError::BudgetExceeded { budget, partial }) => Err(Failure {
            code: EXIT_BUDGET,
            message: format!("step budget of {budget} exhausted; partial trace follows"),
            output: show(&partial),
        }),
        Err(e @ SimError::Conflict { .. }) => Err(fail(EXIT_CONFLICT, e.to_string())),
        Err(e) => Err(fail(EXIT_INVALID, e.to_string())),
    }
}

fn write_out(text: String, out: &Option<PathBuf>) -> Outcome {
    match out {
        None => Ok(text),
        Some(path) => {
            std::fs::write(path, text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
    }
}

fn execute(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { model } => {
            let src = read_source(&model)?;
            let (net, map) = parse_source(&src)?;
            let violations = crate::validate(&net);
            let mut text: String = violations
                .iter()
                .map(|v| format!("{}\n", locate(v, map.as_ref())))
                .collect();
            let errors = violations.iter().filter(|v| !v.is_warning()).count();
            if errors > 0 {
                return Err(Failure {
                    code: EXIT_INVALID,
                    message: format!("{}: {errors} error(s)", src.name),
                    output: text,
                });
            }
            text.push_str(&format!(
                "ok: {} lanes, {} events, {} places, {} transitions, {} arcs\n",
                net.lanes().count(),
                net.events().count(),
                net.places().count(),
                net.transitions().count(),
                net.arcs().count()
            ));
            Ok(text)
        }
        Command::Simulate {
            model,
            events,
            policy,
            event_lifetime,
            unbounded,
            table,
        } => {
            let config = SimConfig {
                capacity: if unbounded {
                    sim::Capacity::Unbounded
                } else {
                    sim::Capacity::Safe
                },
                policy: match policy {
                    Policy::Lexicographic => ConflictPolicy::Lexicographic,
                    Policy::ErrorOnConflict => ConflictPolicy::ErrorOnConflict,
                },
                lifetime: match event_lifetime {
                    Lifetime::Step => EventLifetime::Step,
                    Lifetime::Persistent => EventLifetime::Persistent,
                },
                step_budget: step_budget()?,
                stop_after: None,
            };
            simulate(&model, &events, config, table)
        }
        Command::Compose { first, second, out } => {
            let (a, b) = (load_store(&first)?, load_store(&second)?);
            let composed = store::compose(&a, &b).map_err(|e| match e {
                StoreError::CompositionConflict { .. } => fail(EXIT_COMPOSITION, e.to_string()),
                e => fail(EXIT_INVALID, e.to_string()),
            })?;
            let text = store::write_store(&composed).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            write_out(text, &out)
        }
        Command::GenTests {
            model,
            cover,
            max_firings,
            format,
            out,
        } => {
            let net = load_valid(&model)?;
            let metric = Metric::from(cover);
            let generated = testgen::generate_for_coverage(&net, metric, net.initial_marking(), max_firings)
                .map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            let mut text = match format {
                Layout::Text => generated
                    .tests
                    .iter()
                    .map(|tc| testgen::render_test_case(&net, tc))
                    .collect::<Vec<_>>()
                    .join("\n"),
                Layout::Rows => testgen::write_test_cases(&generated.tests),
            };
            let report = &generated.report;
            let summary = format!(
                "{} coverage: {} ({:.1}%) with {} test case(s)",
                metric,
                report.fraction(),
                report.percentage(),
                generated.tests.len()
            );
            if format == Layout::Text {
                if !text.is_empty() {
                    text.push('\n');
                }
                text.push_str(&summary);
                text.push('\n');
            }
            let text = write_out(text, &out)?;
            let uncovered: Vec<String> = report.uncovered().map(ToString::to_string).collect();
            if !uncovered.is_empty() || generated.budget_exceeded {
                let mut message = format!("{summary}; uncovered: {}", uncovered.join(" "));
                if generated.budget_exceeded {
                    message.push_str("; exploration budget exhausted");
                }
                return Err(Failure {
                    code: EXIT_INVALID,
                    message,
                    output: text,
                });
            }
            Ok(text)
        }
        Command::Coverage { model, tests, format } => {
            let net = load_valid(&model)?;
            let src = read_source(&tests)?;
            let cases =
                testgen::parse_test_cases(&src.text).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", src.name)))?;
            let report = coverage::measure(&net, &cases).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
            Ok(match format {
                Layout::Text => report.render(),
                Layout::Rows => report.render_rows(),
            })
        }
        Command::Export { model, format, out } => {
            let net = load_valid(&model)?;
            let text = match format {
                ExportFormat::Dot => dot::to_dot(&net),
                ExportFormat::Model => write_model(&net),
                ExportFormat::Relational => store::to_relations(&net)
                    .and_then(|s| store::write_store(&s))
                    .map_err(|e| fail(EXIT_INVALID, e.to_string()))?,
            };
            write_out(text, &out)
        }
        Command::Fixtures { name: None } => Ok(fixtures::names().map(|n| format!("fixtures:{n}\n")).collect()),
        Command::Fixtures { name: Some(name) } => {
            let name = name.strip_prefix("fixtures:").unwrap_or(&name);
            fixtures::source(name)
                .map(str::to_string)
                .map_err(|e| fail(EXIT_IO, e.to_string()))
        }
        Command::Lint { model } => {
            let net = load_valid(&model)?;
            let found = patterns::recognize(&net);
            let mut text: String = found.iter().map(|p| format!("{p}\n")).collect();
            text.push_str(&format!("{} pattern instance(s)\n", found.len()));
            Ok(text)
        }
    }
}

/// Runs the program with `args` (including the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_INVALID
                }
            };
        }
    };
    match execute(cli) {
        Ok(text) => {
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_IO;
            }
            EXIT_OK
        }
        Err(f) => {
            let _ = out.write_all(f.output.as_bytes());
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
