//! `cardlab` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::evaluation::{self, EvaluationError, MatrixFormat};
use crate::fixtures::{self, FixtureKind, ScenarioFixture};
use crate::guessing::Dictionary;
use crate::proto::{AttackOutcome, ProtocolId};
use crate::runner;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_REJECTED: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

const EXIT_HELP: &str = "\
Exit status:
  0  success (mutual acceptance, attack goal reached, matrix matches fixture)
  2  configuration or usage error
  3  password not found in the dictionary
  4  a protocol party rejected (honest run or impersonation)
  5  evaluation failed: expected cell mismatch or missing evidence";

#[derive(Debug, Parser)]
#[command(name = "cardlab", version, about = "Smart-card password authentication protocol lab", after_help = EXIT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an honest session and print its transcript.
    Honest(RunArgs),
    /// Run a protocol's attack and print the report.
    Attack(AttackArgs),
    /// Run every scenario and print the verdict matrix.
    Evaluate(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: ProtocolId,
    /// Timestamp window in ticks (xu only).
    #[arg(long)]
    pub delta_t: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Candidate list, one password per line, or `builtin` for the bundled
    /// list. Required for every protocol except xu.
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
}

fn parse_protocol(s: &str) -> Result<ProtocolId, String> {
    s.parse()
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn new(code: i32, stdout: String, stderr: impl Into<String>) -> Self {
        CliOutput {
            code,
            stdout,
            stderr: stderr.into(),
        }
    }

    fn config(msg: impl std::fmt::Display) -> Self {
        CliOutput::new(EXIT_CONFIG, String::new(), format!("error: {msg}\n"))
    }
}

pub fn run<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput::new(code, String::new(), text)
            } else {
                CliOutput::new(code, text, "")
            };
        }
    };
    match cli.command {
        Command::Honest(a) => cmd_honest(&a),
        Command::Attack(a) => cmd_attack(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
    }
}

fn prepare(args: &RunArgs, kind: FixtureKind) -> Result<ScenarioFixture, CliOutput> {
    let mut fixture = fixtures::default_fixture(args.protocol, kind).map_err(CliOutput::config)?;
    if let Some(dt) = args.delta_t {
        if args.protocol != ProtocolId::Xu {
            return Err(CliOutput::config("--delta-t applies only to xu"));
        }
        fixture.options.xu.delta_t = dt;
    }
    Ok(fixture)
}

pub fn cmd_honest(args: &RunArgs) -> CliOutput {
    let fixture = match prepare(args, FixtureKind::Honest) {
        Ok(f) => f,
        Err(out) => return out,
    };
    let seed = args.common.seed;
    let report = match runner::run_honest(args.protocol, &fixture.participants, seed, &fixture.options) {
        Ok(r) => r,
        Err(e) => return CliOutput::config(e),
    };
    let keys_agree = report.user_key == report.server_key;
    let ok = report.accepted && keys_agree;
    let rejection = report
        .rejection
        .map(|r| r.to_string())
        .or_else(|| (!ok).then(|| if keys_agree { "not_accepted" } else { "key_mismatch" }.to_string()));
    let mut out = String::new();
    match args.common.format {
        Format::Text => {
            let _ = writeln!(out, "honest {} seed {}", args.protocol, seed);
            out.push_str(&report.transcript.render_text());
            match &rejection {
                None => out.push_str("result accepted\n"),
                Some(r) => {
                    let _ = writeln!(out, "result rejected {r}");
                }
            }
            if let Some(k) = report.user_key {
                let _ = writeln!(out, "session_key {}", k.to_hex());
            }
        }
        Format::Structured => {
            out.push_str(&report.transcript.render_structured());
            let summary = json!({
                "kind": "result",
                "command": "honest",
                "protocol": args.protocol,
                "seed": seed,
                "accepted": ok,
                "rejection": rejection,
                "session_key": report.user_key.map(|k| k.to_hex()),
            });
            let _ = writeln!(out, "{summary}");
        }
    }
    match rejection {
        None => CliOutput::new(EXIT_OK, out, ""),
        Some(r) => CliOutput::new(
            EXIT_REJECTED,
            out,
            format!("error: {} honest run rejected: {r}\n", args.protocol),
        ),
    }
}

pub fn cmd_attack(args: &AttackArgs) -> CliOutput {
    let protocol = args.run.protocol;
    let fixture = match prepare(&args.run, FixtureKind::Attack) {
        Ok(f) => f,
        Err(out) => return out,
    };
    let dictionary = if runner::needs_dictionary(protocol) {
        match &args.dictionary {
            None => return CliOutput::config(format!("the {protocol} attack needs --dictionary")),
            Some(p) if p.as_os_str() == "builtin" => Some(Dictionary::builtin_demo()),
            Some(p) => match Dictionary::load(p) {
                Ok(d) => Some(d),
                Err(e) => return CliOutput::config(e),
            },
        }
    } else {
        None
    };
    let seed = args.run.common.seed;
    let report = match runner::run_attack(
        protocol,
        &fixture.participants,
        dictionary.as_ref(),
        seed,
        &fixture.options,
    ) {
        Ok(r) => r,
        Err(e) => return CliOutput::config(e),
    };

    let (code, diagnostic) = match &report.outcome {
        AttackOutcome::Guess(g) if g.is_found() => (EXIT_OK, None),
        AttackOutcome::Guess(g) => (EXIT_NOT_FOUND, Some(format!("password not in dictionary ({g})"))),
        AttackOutcome::Impersonation(r) if r.accepted && r.sk.is_some() && r.sk == report.server_key => (EXIT_OK, None),
        AttackOutcome::Impersonation(r) => (
            EXIT_REJECTED,
            Some(format!(
                "impersonation failed: {}",
                r.rejection
                    .map(|x| x.to_string())
                    .unwrap_or_else(|| "key mismatch".into())
            )),
        ),
    };

    let mut out = String::new();
    match args.run.common.format {
        Format::Text => {
            let _ = writeln!(out, "attack {} seed {}", protocol, seed);
            out.push_str(&report.transcript.render_text());
            match &report.outcome {
                AttackOutcome::Guess(g) => {
                    let _ = writeln!(out, "outcome {g}");
                }
                AttackOutcome::Impersonation(r) => {
                    let _ = writeln!(
                        out,
                        "outcome impersonation accepted={} sk={} server_sk_match={}",
                        r.accepted,
                        r.sk.map(|k| k.to_hex()).unwrap_or_else(|| "none".into()),
                        r.sk.is_some() && r.sk == report.server_key
                    );
                }
            }
            let _ = writeln!(out, "online_messages {}", report.online_messages);
            if let Some(m) = report.masquerade_accepted {
                let _ = writeln!(out, "masquerade_accepted {m}");
            }
        }
        Format::Structured => {
            out.push_str(&report.transcript.render_structured());
            let outcome = match &report.outcome {
                AttackOutcome::Guess(g) => json!({
                    "type": if g.is_found() { "found_password" } else { "not_found" },
                    "password": g.password().map(|p| String::from_utf8_lossy(p).into_owned()),
                    "guesses_tried": g.guesses_tried(),
                    "login_requests_sent": g.login_requests_sent(),
                }),
                AttackOutcome::Impersonation(r) => json!({
                    "type": "impersonation",
                    "accepted": r.accepted,
                    "sk": r.sk.map(|k| k.to_hex()),
                    "server_sk_match": r.sk.is_some() && r.sk == report.server_key,
                    "rejection": r.rejection.map(|x| x.to_string()),
                }),
            };
            let summary = json!({
                "kind": "result",
                "command": "attack",
                "protocol": protocol,
                "seed": seed,
                "outcome": outcome,
                "online_messages": report.online_messages,
                "masquerade_accepted": report.masquerade_accepted,
            });
            let _ = writeln!(out, "{summary}");
        }
    }
    let stderr = diagnostic
        .map(|d| format!("error: {protocol} attack: {d}\n"))
        .unwrap_or_default();
    CliOutput::new(code, out, stderr)
}

pub fn cmd_evaluate(args: &CommonArgs) -> CliOutput {
    let matrix = match evaluation::run_attack_scenarios(args.seed) {
        Ok(m) => m,
        Err(EvaluationError::Fixture(e)) => return CliOutput::config(e),
        Err(e) => return CliOutput::new(EXIT_MISMATCH, String::new(), format!("error: {e}\n")),
    };
    let format = match args.format {
        Format::Text => MatrixFormat::Text,
        Format::Structured => MatrixFormat::Structured,
    };
    let rendered = match evaluation::render_matrix(&matrix, format) {
        Ok(s) => s,
        Err(e) => return CliOutput::new(EXIT_MISMATCH, String::new(), format!("error: {e}\n")),
    };
    match matrix.check_expected() {
        Ok(()) => CliOutput::new(EXIT_OK, rendered, ""),
        Err(e) => CliOutput::new(EXIT_MISMATCH, rendered, format!("error: {e}\n")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &str) -> CliOutput {
        run(std::iter::once("cardlab").chain(args.split_whitespace()))
    }

    #[test]
    fn evaluate_forbids_protocol() {
        assert_eq!(cli("evaluate --protocol juang").code, EXIT_CONFIG);
    }

    #[test]
    fn honest_requires_protocol() {
        assert_eq!(cli("honest").code, EXIT_CONFIG);
        assert_eq!(cli("honest --protocol rsa").code, EXIT_CONFIG);
    }

    #[test]
    fn delta_t_is_xu_only() {
        assert_eq!(cli("honest --protocol li --delta-t 3").code, EXIT_CONFIG);
    }

    #[test]
    fn guessing_attack_needs_dictionary() {
        let out = cli("attack --protocol kim");
        assert_eq!(out.code, EXIT_CONFIG);
        assert!(out.stderr.contains("--dictionary"));
        assert_eq!(cli("attack --protocol xu").code, EXIT_OK);
    }

    #[test]
    fn help_documents_exit_codes() {
        let out = cli("--help");
        assert_eq!(out.code, EXIT_OK);
        assert!(out.stdout.contains("Exit status"));
    }
}
