//! `mpst`: parse, type-check and model-check sessions and typing
//! environments.
//!
//! Exit codes: 0 success or property holds, 1 property fails / not a
//! subtype / type error, 2 usage or input error, 3 inconclusive.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mpst_core::envcheck::{check_env_property, explore_env, DEFAULT_BOUND};
use mpst_core::flgen::{gen_centralized, gen_decentralized};
use mpst_core::semantics::{simulate, Policy};
use mpst_core::sessioncheck::{check_session_property, cosimulate, explore_session, transfer_check, CoSimError, Implication};
use mpst_core::subtyping::subtype;
use mpst_core::syntax::{self, printer, Document};
use mpst_core::typing::check_session;
use mpst_core::verdict::{Outcome, Property, Verdict};
use serde_json::{json, Value};

const DEFAULT_MAX_STATES: usize = 1_000_000;

#[derive(Parser)]
#[command(name = "mpst", version, about = "Asynchronous multiparty session types with multi-participant choices")]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Limits {
    /// Per-participant queue length cap.
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: usize,
    /// State cap for exploration [default: $MPST_MAX_STATES or 1000000].
    #[arg(long)]
    max_states: Option<usize>,
}

impl Limits {
    fn max_states(&self) -> Result<usize, Failure> {
        if let Some(m) = self.max_states {
            return Ok(m);
        }
        match std::env::var("MPST_MAX_STATES") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("MPST_MAX_STATES is not a number: {s}"))),
            Err(_) => Ok(DEFAULT_MAX_STATES),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a session or environment file and print it back.
    Parse { file: PathBuf },
    /// Check a session against a typing environment.
    Typecheck {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        env: PathBuf,
    },
    /// Decide whether the type in the first file is a subtype of the second.
    Subtype { sub: PathBuf, sup: PathBuf },
    /// Check safety, deadlock-freedom or liveness of a typing environment.
    CheckEnv {
        file: PathBuf,
        /// Property to check; all three when omitted.
        #[arg(long)]
        property: Option<Property>,
        #[command(flatten)]
        limits: Limits,
    },
    /// Check safety, deadlock-freedom or liveness of a session.
    CheckSession {
        file: PathBuf,
        #[arg(long)]
        property: Option<Property>,
        #[command(flatten)]
        limits: Limits,
    },
    /// Explore a session and its environment side by side.
    Cosim {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        env: PathBuf,
        #[command(flatten)]
        limits: Limits,
    },
    /// Compare environment and session verdicts.
    Transfer {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        env: PathBuf,
        #[command(flatten)]
        limits: Limits,
    },
    /// Run a seeded random walk of a session.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PolicyArg::Fair)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Generate a federated-learning session and its environment.
    GenFl {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out_session: Option<PathBuf>,
        #[arg(long)]
        out_env: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Uniform,
    Fair,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Centralized,
    Decentralized,
}

/// Report and exit code of a command.
struct Report {
    code: u8,
    text: String,
    json: Value,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn read_session(path: &Path) -> Result<syntax::Session, Failure> {
    syntax::parse_session(&read(path)?).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))
}

fn read_env(path: &Path) -> Result<syntax::TypingEnv, Failure> {
    syntax::parse_env(&read(path)?).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))
}

fn read_type(path: &Path) -> Result<syntax::SessionType, Failure> {
    syntax::parse_type(&read(path)?).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))
}

fn outcome_code(outcomes: impl IntoIterator<Item = Outcome>) -> u8 {
    let mut code = 0;
    for o in outcomes {
        match o {
            Outcome::No => return 1,
            Outcome::Inconclusive => code = 3,
            Outcome::Yes => {}
        }
    }
    code
}

fn verdicts_report(verdicts: Vec<Verdict>) -> Report {
    let code = outcome_code(verdicts.iter().map(|v| v.result));
    let text = verdicts.iter().map(Verdict::render).collect::<Vec<_>>().join("\n");
    let json = if verdicts.len() == 1 {
        verdicts[0].to_json()
    } else {
        json!({ "v": 1, "verdicts": verdicts.iter().map(Verdict::to_json).collect::<Vec<_>>() })
    };
    Report { code, text, json }
}

fn properties(p: Option<Property>) -> Vec<Property> {
    p.map_or_else(|| Property::ALL.to_vec(), |p| vec![p])
}

fn cosim_error(e: CoSimError) -> Failure {
    match e {
        CoSimError::Untyped(_) => Failure { code: 1, message: e.to_string() },
        CoSimError::Semantics(_) => Failure::usage(e.to_string()),
    }
}

fn run(cli: Cli) -> Result<Report, Failure> {
    match cli.command {
        Command::Parse { file } => {
            let src = read(&file)?;
            let doc = syntax::parse_document(&src).map_err(|e| Failure::usage(format!("{}:{e}", file.display())))?;
            Ok(match doc {
                Document::Session(s) => {
                    let lints = syntax::lint_session(&s);
                    let mut text = printer::session(&s);
                    for l in &lints {
                        text.push_str(&format!("\nwarning: {l}"));
                    }
                    Report {
                        code: 0,
                        json: json!({
                            "v": 1,
                            "kind": "session",
                            "participants": s.participants().map(ToString::to_string).collect::<Vec<_>>(),
                            "text": printer::session(&s),
                            "warnings": lints,
                        }),
                        text,
                    }
                }
                Document::Env(g) => Report {
                    code: 0,
                    json: json!({
                        "v": 1,
                        "kind": "env",
                        "participants": g.participants().map(ToString::to_string).collect::<Vec<_>>(),
                        "text": printer::env(&g),
                    }),
                    text: printer::env(&g),
                },
            })
        }
        Command::Typecheck { session, env } => {
            let n = read_session(&session)?;
            let g = read_env(&env)?;
            Ok(match check_session(&n, &g) {
                Ok(()) => Report {
                    code: 0,
                    text: "ok".into(),
                    json: json!({ "v": 1, "ok": true, "domain": [], "participants": {} }),
                },
                Err(e) => Report {
                    code: 1,
                    text: e.to_string().trim_end().to_string(),
                    json: json!({ "v": 1, "ok": false, "domain": e.domain, "participants": e.participants }),
                },
            })
        }
        Command::Subtype { sub, sup } => {
            let a = read_type(&sub)?;
            let b = read_type(&sup)?;
            let holds = subtype(&a, &b).map_err(|e| Failure::usage(e.to_string()))?;
            Ok(Report {
                code: if holds { 0 } else { 1 },
                text: if holds { "subtype".into() } else { "not a subtype".into() },
                json: json!({ "v": 1, "subtype": holds, "sub": a.to_string(), "sup": b.to_string() }),
            })
        }
        Command::CheckEnv { file, property, limits } => {
            let g = read_env(&file)?;
            let graph = explore_env(&g, limits.bound, limits.max_states()?);
            Ok(verdicts_report(properties(property).into_iter().map(|p| check_env_property(&graph, p)).collect()))
        }
        Command::CheckSession { file, property, limits } => {
            let n = read_session(&file)?;
            let graph = explore_session(&n, limits.bound, limits.max_states()?).map_err(|e| Failure::usage(e.to_string()))?;
            Ok(verdicts_report(properties(property).into_iter().map(|p| check_session_property(&graph, p)).collect()))
        }
        Command::Cosim { session, env, limits } => {
            let n = read_session(&session)?;
            let g = read_env(&env)?;
            let r = cosimulate(&n, &g, limits.bound, limits.max_states()?).map_err(cosim_error)?;
            let code = if !r.ok() {
                1
            } else if !r.complete {
                3
            } else {
                0
            };
            let mut json = serde_json::to_value(&r).expect("report serializes");
            if let Value::Object(m) = &mut json {
                m.remove("records");
                m.insert("steps".into(), r.records.len().into());
                m.insert("v".into(), 1.into());
            }
            Ok(Report { code, text: r.render().trim_end().to_string(), json })
        }
        Command::Transfer { session, env, limits } => {
            let n = read_session(&session)?;
            let g = read_env(&env)?;
            let r = transfer_check(&n, &g, limits.bound, limits.max_states()?).map_err(cosim_error)?;
            let code = if r.violated() {
                1
            } else if r.rows.iter().any(|row| row.status == Implication::Untested) {
                3
            } else {
                0
            };
            let mut json = serde_json::to_value(&r).expect("report serializes");
            if let Value::Object(m) = &mut json {
                m.insert("v".into(), 1.into());
            }
            Ok(Report { code, text: r.render().trim_end().to_string(), json })
        }
        Command::Simulate { file, seed, policy, steps } => {
            let n = read_session(&file)?;
            let policy = match policy {
                PolicyArg::Uniform => Policy::Uniform,
                PolicyArg::Fair => Policy::Fair,
            };
            let t = simulate(&n, steps, seed, policy).map_err(|e| Failure::usage(e.to_string()))?;
            let end = serde_json::to_value(t.end).expect("serializes");
            let mut text = t.to_lines();
            text.push_str(&format!("end: {}", end.as_str().unwrap_or_default()));
            let json = json!({
                "v": 1,
                "seed": seed,
                "policy": policy,
                "steps": t.steps,
                "end": end,
            });
            Ok(Report { code: 0, text, json })
        }
        Command::GenFl { kind, n, out_session, out_env } => {
            let (s, g) = match kind {
                Kind::Centralized => gen_centralized(n),
                Kind::Decentralized => gen_decentralized(n),
            }
            .map_err(|e| Failure::usage(e.to_string()))?;
            let (st, gt) = (printer::session(&s), printer::env(&g));
            let mut text = String::new();
            for (out, body) in [(&out_session, &st), (&out_env, &gt)] {
                match out {
                    Some(path) => {
                        fs::write(path, format!("{body}\n")).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                        text.push_str(&format!("wrote {}\n", path.display()));
                    }
                    None => text.push_str(&format!("{body}\n\n")),
                }
            }
            let json = json!({ "v": 1, "n": n, "session": st, "env": gt });
            Ok(Report { code: 0, text: text.trim_end().to_string(), json })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(r) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&r.json).expect("json"));
            } else {
                println!("{}", r.text);
            }
            ExitCode::from(r.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
