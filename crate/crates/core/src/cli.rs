//! Command-line front end.
//!
//! Formula and sequent arguments are either literal text or the path of a file holding it
//! (`.frm`); skeletons and tests live in `.skel` files, derivations in `.deriv` files.
//!
//! Exit status: 0 on success or a valid verdict, 1 when a check fails or an interaction errs,
//! 2 on unreadable or unparsable input.

use std::fmt::Display;
use std::io::{BufRead, Write};
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::formula::{Formula, Symbol};
use crate::interaction::{
    explore_with, play_session, Answer, Environment, ExploreOptions, InteractionVerdict, Proponent, SessionOutcome,
    SessionRecord,
};
use crate::position::Position;
use crate::proof::{check_derivation, skeleton_of, CheckVerdict, Rule, DEFAULT_DEPTH};
use crate::syntax::{self, ParseError};
use crate::tree::RationalTree;

#[derive(Parser, Debug)]
#[command(
    name = "infinitary",
    version,
    about = "Rational infinitary formulas, derivations and tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Dot,
    Kv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a recursive equation `v<n> := <formula>`.
    Solve {
        equation: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the negation of a formula.
    Negate {
        formula: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Substitute a formula for a variable: FORMULA[REPLACEMENT/VAR].
    Subst {
        formula: String,
        replacement: String,
        /// Variable such as `v0`.
        var: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a derivation file.
    Check {
        file: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Print the rule skeleton of a derivation file.
    Skeleton {
        file: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a test against the negation of a sequent.
    Interact {
        test: String,
        sequent: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Maximum number of trace records printed.
        #[arg(long, default_value_t = 10_000)]
        trace_cap: usize,
        /// Rule played at indices the test file leaves without an edge.
        #[arg(long, default_value = "and(0)")]
        default_rule: String,
        /// Expand repeated states instead of stopping at them.
        #[arg(long)]
        no_memo: bool,
    },
    /// Play the Proponent interactively against the negation of a sequent.
    Repl {
        sequent: String,
        #[arg(long, default_value_t = 1_000)]
        max_moves: usize,
    },
    /// Print a formula, skeleton, test or derivation in another format.
    Export {
        object: String,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{source}")]
    Parse {
        origin: String,
        #[source]
        source: ParseError,
    },
    #[error("{0}")]
    Usage(String),
}

/// Text of an argument that may name a file.
fn text_arg(arg: &str) -> Result<(String, String), CliError> {
    if Path::new(arg).is_file() {
        Ok((arg.to_string(), read_file(arg)?))
    } else {
        Ok(("<argument>".to_string(), arg.to_string()))
    }
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

fn parsed<T>(origin: &str, r: Result<T, ParseError>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Parse {
        origin: origin.to_string(),
        source,
    })
}

fn formula_arg(arg: &str) -> Result<Formula, CliError> {
    let (origin, text) = text_arg(arg)?;
    parsed(&origin, syntax::parse_formula(&text))
}

fn graph_json<L: Display>(tree: &RationalTree<L>) -> serde_json::Value {
    let nodes: Vec<_> = tree
        .nodes()
        .map(|(id, n)| {
            json!({
                "id": id.index(),
                "label": n.label.to_string(),
                "children": n.children.iter().map(|&(i, c)| json!({"index": i, "node": c.index()})).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "root": tree.root().index(), "nodes": nodes })
}

fn render_graph<L: Display>(tree: &RationalTree<L>, text: String, format: Format) -> String {
    match format {
        Format::Text => text,
        Format::Dot => tree.to_dot("G"),
        Format::Kv => serde_json::to_string_pretty(&graph_json(tree)).expect("serializable"),
    }
}

fn render_formula(f: &Formula, format: Format) -> String {
    render_graph(f.tree(), syntax::print_formula(f), format)
}

fn render_skeleton(sk: &RationalTree<Rule>, format: Format) -> String {
    render_graph(sk, syntax::print_skeleton(sk), format)
}

/// Parses the command line and runs it; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run(cli, &mut input, &mut out, &mut err)
}

/// Runs `cli`, writing results to `out` and diagnostics to `err`.
pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli.command, input, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn io_err(source: std::io::Error) -> CliError {
    CliError::Io {
        path: "<output>".to_string(),
        source,
    }
}

fn dispatch(command: Command, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Solve { equation, format } => {
            let (origin, text) = text_arg(&equation)?;
            let e = parsed(&origin, syntax::parse_equation(&text))?;
            writeln!(out, "{}", render_formula(&e.solve(), format)).map_err(io_err)?;
            Ok(0)
        }
        Command::Negate { formula, format } => {
            let f = formula_arg(&formula)?;
            writeln!(out, "{}", render_formula(&f.negate(), format)).map_err(io_err)?;
            Ok(0)
        }
        Command::Subst {
            formula,
            replacement,
            var,
            format,
        } => {
            let f = formula_arg(&formula)?;
            let g = formula_arg(&replacement)?;
            let index = match parsed("<argument>", syntax::parse_formula(&var))?.root_symbol() {
                Symbol::Atom(a) if a.is_positive() => a.index,
                _ => return Err(CliError::Usage(format!("`{var}` is not a variable like `v0`"))),
            };
            writeln!(out, "{}", render_formula(&f.substitute(&g, index), format)).map_err(io_err)?;
            Ok(0)
        }
        Command::Check { file, depth } => {
            let d = parsed(&file, syntax::parse_derivation(&read_file(&file)?))?;
            let verdict = check_derivation(&d, depth);
            writeln!(out, "{verdict}").map_err(io_err)?;
            Ok(match verdict {
                CheckVerdict::Violation { .. } => 1,
                _ => 0,
            })
        }
        Command::Skeleton { file, format } => {
            let d = parsed(&file, syntax::parse_derivation(&read_file(&file)?))?;
            writeln!(out, "{}", render_skeleton(&skeleton_of(&d), format)).map_err(io_err)?;
            Ok(0)
        }
        Command::Interact {
            test,
            sequent,
            depth,
            format,
            trace_cap,
            default_rule,
            no_memo,
        } => {
            let fill = parsed("--default-rule", syntax::parse_rule(&default_rule))?;
            let (origin, text) = text_arg(&test)?;
            let t = parsed(&origin, syntax::parse_test_with(&text, fill))?;
            let (origin, text) = text_arg(&sequent)?;
            let s = parsed(&origin, syntax::parse_sequent(&text))?;
            let ex = explore_with(
                &t,
                &s.negate(),
                ExploreOptions {
                    depth,
                    memo: !no_memo,
                    trace_cap,
                },
            );
            match format {
                Format::Kv => {
                    let doc = json!({
                        "verdict": ex.verdict,
                        "truncated": ex.truncated,
                        "records": ex.records,
                    });
                    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable")).map_err(io_err)?;
                }
                Format::Text | Format::Dot => {
                    writeln!(out, "{}", ex.verdict).map_err(io_err)?;
                    if let InteractionVerdict::ErrorAt { trace, .. } = &ex.verdict {
                        for (p, c) in trace {
                            writeln!(out, "  path {p} {c}").map_err(io_err)?;
                        }
                    }
                    for r in &ex.records {
                        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".to_string());
                        writeln!(
                            out,
                            "{}\tstate={}\tenv={}\tclause={}\t{}",
                            r.position,
                            opt(r.state.map(|s| format!("t{s}"))),
                            opt(r.env_len.map(|n| n.to_string())),
                            opt(r.clause.map(|c| c.to_string())),
                            serde_json::to_value(r.status)
                                .expect("serializable")
                                .as_str()
                                .unwrap_or("")
                        )
                        .map_err(io_err)?;
                    }
                    if ex.truncated {
                        writeln!(out, "(trace truncated at {trace_cap} records)").map_err(io_err)?;
                    }
                }
            }
            Ok(i32::from(ex.verdict.is_error()))
        }
        Command::Repl { sequent, max_moves } => {
            let (origin, text) = text_arg(&sequent)?;
            let s = parsed(&origin, syntax::parse_sequent(&text))?;
            let mut human = Human { input, out };
            let session = play_session(&s.negate(), &mut human, max_moves);
            let Human { out, .. } = human;
            let code = match &session.outcome {
                SessionOutcome::ProponentWins => {
                    writeln!(out, "every branch is closed: Proponent wins").map_err(io_err)?;
                    0
                }
                SessionOutcome::OpponentWins { at } => {
                    writeln!(out, "error at {at}: Opponent wins").map_err(io_err)?;
                    1
                }
                SessionOutcome::Aborted => {
                    writeln!(out, "session aborted after {} moves", session.trace.len()).map_err(io_err)?;
                    0
                }
                SessionOutcome::Unfinished => {
                    writeln!(out, "move limit {max_moves} reached").map_err(io_err)?;
                    0
                }
            };
            Ok(code)
        }
        Command::Export { object, format } => {
            let (origin, text) = text_arg(&object)?;
            let rendered = if origin.ends_with(".deriv") {
                let d = parsed(&origin, syntax::parse_derivation(&text))?;
                match format {
                    Format::Text => syntax::print_derivation(&d).trim_end().to_string(),
                    Format::Dot => d.skeleton.to_dot("G"),
                    Format::Kv => serde_json::to_string_pretty(&json!({
                        "sequent": syntax::print_formula(&d.root_sequent.to_formula()),
                        "skeleton": graph_json(&d.skeleton),
                    }))
                    .expect("serializable"),
                }
            } else if origin.ends_with(".skel") {
                match syntax::parse_skeleton(&text) {
                    Ok(sk) => render_skeleton(&sk, format),
                    Err(_) => {
                        let t = parsed(&origin, syntax::parse_test(&text))?;
                        syntax::print_test(&t)
                    }
                }
            } else {
                render_formula(&parsed(&origin, syntax::parse_formula(&text))?, format)
            };
            writeln!(out, "{rendered}").map_err(io_err)?;
            Ok(0)
        }
    }
}

/// The Proponent played from a terminal.
struct Human<'a> {
    input: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
}

impl Human<'_> {
    fn read_rule(&mut self, position: &Position) -> Option<Rule> {
        loop {
            let _ = write!(self.out, "rule at {position}> ");
            let _ = self.out.flush();
            let mut line = String::new();
            match self.input.read_line(&mut line) {
                Ok(0) | Err(_) => return None,
                Ok(_) => {}
            }
            let line = line.trim();
            match line {
                "" => continue,
                "quit" | "abort" => return None,
                "help" => {
                    let _ = writeln!(
                        self.out,
                        "rules: ax(v<n>,k,l) | or(k,i) | and(k); `quit` ends the session"
                    );
                    continue;
                }
                _ => {}
            }
            match syntax::parse_rule(line) {
                Ok(rule) => return Some(rule),
                Err(e) => {
                    let _ = writeln!(self.out, "not a rule ({}), try again", e.message);
                }
            }
        }
    }
}

impl Proponent for Human<'_> {
    fn choose(&mut self, position: &Position, env: &Environment) -> Option<Rule> {
        let _ = writeln!(self.out, "position {position}, environment:");
        for (k, g) in env.conjuncts().iter().enumerate() {
            let _ = writeln!(self.out, "  [{k}] {g}");
        }
        self.read_rule(position)
    }

    fn observe(&mut self, record: &SessionRecord) {
        let msg = match &record.answer {
            Answer::Closed => "closed".to_string(),
            Answer::Premises { indices } => {
                let shown: Vec<String> = indices.iter().map(|i| record.position.child(*i).to_string()).collect();
                format!("continue at {}", shown.join(", "))
            }
            Answer::Error => format!("⇑ at {}", record.position.child(0)),
        };
        let _ = writeln!(self.out, "{} at {}: {msg}", record.question, record.position);
    }
}
