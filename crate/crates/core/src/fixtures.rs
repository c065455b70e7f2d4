//! Named scenario corpus and the expected verdict cells, embedded from
//! `fixtures/*.toml`.

use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::guessing::Dictionary;
use crate::proto::xu::XuOptions;
use crate::proto::{AttackOutcome, AttackReport, HonestReport, Participants, ProtocolId, Rejection, ScenarioError};
use crate::runner::{self, RunOptions};
use crate::simnet::{PartyId, Transcript};

const SCENARIOS_TOML: &str = include_str!("../fixtures/scenarios.toml");
const VERDICTS_TOML: &str = include_str!("../fixtures/verdicts.toml");

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("no fixture named '{0}'")]
    Unknown(String),
    #[error("fixture corpus is malformed: {0}")]
    Corpus(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("fixture '{name}' at seed {seed}: expected {expected}, observed {observed}")]
    Mismatch {
        name: String,
        seed: u64,
        expected: String,
        observed: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Honest,
    Attack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryRef {
    Builtin,
    /// The built-in list with the victim's password removed.
    BuiltinWithoutPassword,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedOutcome {
    Accept,
    Reject,
    FoundPassword,
    NotFound,
    ImpersonationAccepted,
}

impl fmt::Display for ExpectedOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpectedOutcome::Accept => "accept",
            ExpectedOutcome::Reject => "reject",
            ExpectedOutcome::FoundPassword => "found_password",
            ExpectedOutcome::NotFound => "not_found",
            ExpectedOutcome::ImpersonationAccepted => "impersonation_accepted",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub outcome: ExpectedOutcome,
    pub rejection: Option<String>,
    pub login_requests_sent: Option<usize>,
    pub online_messages: Option<usize>,
    pub masquerade_accepted: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
struct InsiderSpec {
    id: String,
    password: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixture {
    name: String,
    protocol: ProtocolId,
    kind: FixtureKind,
    #[serde(default = "default_user")]
    user: String,
    #[serde(default = "default_server")]
    server: String,
    #[serde(default = "default_attacker")]
    attacker: String,
    password: String,
    biometric: Option<String>,
    presented_biometric: Option<String>,
    insider: Option<InsiderSpec>,
    dictionary: Option<DictionaryRef>,
    seed: Option<u64>,
    delta_t: Option<u64>,
    delivery_delay: Option<u64>,
    expect: Expectation,
}

fn default_user() -> String {
    "C".into()
}

fn default_server() -> String {
    "S".into()
}

fn default_attacker() -> String {
    "E".into()
}

#[derive(Deserialize)]
struct Corpus {
    scenario: Vec<RawFixture>,
}

/// A fully specified scenario with its expected outcome.
#[derive(Clone, Debug)]
pub struct ScenarioFixture {
    pub name: String,
    pub protocol: ProtocolId,
    pub kind: FixtureKind,
    pub participants: Participants,
    pub dictionary: Option<DictionaryRef>,
    /// Pinned seed; `None` means the caller chooses.
    pub seed: Option<u64>,
    pub options: RunOptions,
    pub expect: Expectation,
}

impl ScenarioFixture {
    fn from_raw(raw: RawFixture) -> Result<Self, FixtureError> {
        let bad = |what: String| FixtureError::Corpus(format!("{}: {what}", raw.name));
        let mut participants = Participants::new(&raw.user, &raw.server, &raw.attacker, raw.password.as_bytes())
            .map_err(|e| bad(e.to_string()))?;
        if let Some(b) = &raw.biometric {
            participants.biometric = b.as_bytes().to_vec();
        }
        if let Some(ins) = &raw.insider {
            let id = PartyId::new(&ins.id).map_err(|e| bad(e.to_string()))?;
            participants.insider = Some((id, ins.password.as_bytes().to_vec()));
        }
        if let Some(r) = &raw.expect.rejection {
            r.parse::<Rejection>().map_err(bad)?;
        }
        if raw.kind == FixtureKind::Attack && runner::needs_dictionary(raw.protocol) && raw.dictionary.is_none() {
            return Err(bad("guessing attack without a dictionary".into()));
        }
        let mut xu = XuOptions::default();
        if let Some(d) = raw.delta_t {
            xu.delta_t = d;
        }
        if let Some(d) = raw.delivery_delay {
            xu.delivery_delay = d;
        }
        Ok(ScenarioFixture {
            name: raw.name,
            protocol: raw.protocol,
            kind: raw.kind,
            participants,
            dictionary: raw.dictionary,
            seed: raw.seed,
            options: RunOptions {
                xu,
                presented_biometric: raw.presented_biometric.map(String::into_bytes),
            },
            expect: raw.expect,
        })
    }

    pub fn resolve_dictionary(&self) -> Option<Dictionary> {
        self.dictionary.map(|d| match d {
            DictionaryRef::Builtin => Dictionary::builtin_demo(),
            DictionaryRef::BuiltinWithoutPassword => Dictionary::builtin_demo().without(&self.participants.password),
        })
    }

    /// Runs the fixture at its pinned seed, or `seed` when not pinned.
    pub fn run(&self, seed: u64) -> Result<FixtureRun, FixtureError> {
        let seed = self.seed.unwrap_or(seed);
        let observed = match self.kind {
            FixtureKind::Honest => {
                let report = runner::run_honest(self.protocol, &self.participants, seed, &self.options)?;
                Observation::from_honest(&report, &self.participants)
            }
            FixtureKind::Attack => {
                let dict = self.resolve_dictionary();
                let report = runner::run_attack(self.protocol, &self.participants, dict.as_ref(), seed, &self.options)?;
                Observation::from_attack(&report)
            }
        };
        Ok(FixtureRun { seed, observed })
    }

    /// Runs and compares against the expectation.
    pub fn replay(&self, seed: u64) -> Result<FixtureRun, FixtureError> {
        let run = self.run(seed)?;
        run.check(self)?;
        Ok(run)
    }
}

/// What a fixture run produced, in the terms expectations are written in.
#[derive(Clone, Debug)]
pub struct Observation {
    pub outcome: ExpectedOutcome,
    pub rejection: Option<Rejection>,
    pub login_requests_sent: usize,
    pub online_messages: usize,
    pub masquerade_accepted: Option<bool>,
    pub transcript: Transcript,
}

impl Observation {
    fn from_honest(report: &HonestReport, p: &Participants) -> Self {
        let registrations = report
            .protocol
            .registration_tag()
            .map(|tag| {
                report
                    .transcript
                    .envelopes()
                    .filter(|(e, _)| e.payload.first() == Some(&tag))
                    .count()
            })
            .unwrap_or(0);
        let keys_agree = report.user_key == report.server_key;
        Observation {
            outcome: if report.accepted && keys_agree {
                ExpectedOutcome::Accept
            } else {
                ExpectedOutcome::Reject
            },
            rejection: report.rejection,
            login_requests_sent: report.transcript.count_between(&p.user, &p.server) - registrations,
            online_messages: report.transcript.envelope_count() - registrations,
            masquerade_accepted: None,
            transcript: report.transcript.clone(),
        }
    }

    fn from_attack(report: &AttackReport) -> Self {
        let (outcome, login_requests_sent, rejection) = match &report.outcome {
            AttackOutcome::Guess(g) => (
                if g.is_found() {
                    ExpectedOutcome::FoundPassword
                } else {
                    ExpectedOutcome::NotFound
                },
                g.login_requests_sent(),
                None,
            ),
            AttackOutcome::Impersonation(r) => (
                if r.accepted && r.sk.is_some() && r.sk == report.server_key {
                    ExpectedOutcome::ImpersonationAccepted
                } else {
                    ExpectedOutcome::Reject
                },
                1,
                r.rejection,
            ),
        };
        Observation {
            outcome,
            rejection,
            login_requests_sent,
            online_messages: report.online_messages,
            masquerade_accepted: report.masquerade_accepted,
            transcript: report.transcript.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixtureRun {
    pub seed: u64,
    pub observed: Observation,
}

impl FixtureRun {
    pub fn check(&self, fixture: &ScenarioFixture) -> Result<(), FixtureError> {
        let o = &self.observed;
        let e = &fixture.expect;
        let mismatch = |expected: String, observed: String| FixtureError::Mismatch {
            name: fixture.name.clone(),
            seed: self.seed,
            expected,
            observed,
        };
        if o.outcome != e.outcome {
            let why = o.rejection.map(|r| format!(" ({r})")).unwrap_or_default();
            return Err(mismatch(e.outcome.to_string(), format!("{}{why}", o.outcome)));
        }
        if let Some(r) = &e.rejection {
            let got = o.rejection.map(|r| r.to_string()).unwrap_or_else(|| "none".into());
            if *r != got {
                return Err(mismatch(format!("rejection {r}"), format!("rejection {got}")));
            }
        }
        if let Some(n) = e.login_requests_sent {
            if n != o.login_requests_sent {
                return Err(mismatch(
                    format!("login_requests_sent {n}"),
                    format!("login_requests_sent {}", o.login_requests_sent),
                ));
            }
        }
        if let Some(n) = e.online_messages {
            if n != o.online_messages {
                return Err(mismatch(
                    format!("online_messages {n}"),
                    format!("online_messages {}", o.online_messages),
                ));
            }
        }
        if let Some(m) = e.masquerade_accepted {
            if Some(m) != o.masquerade_accepted {
                return Err(mismatch(
                    format!("masquerade_accepted {m}"),
                    format!("masquerade_accepted {:?}", o.masquerade_accepted),
                ));
            }
        }
        Ok(())
    }
}

/// Every fixture in corpus order.
pub fn all_fixtures() -> Result<Vec<ScenarioFixture>, FixtureError> {
    let corpus: Corpus = toml::from_str(SCENARIOS_TOML).map_err(|e| FixtureError::Corpus(e.to_string()))?;
    let mut seen = std::collections::BTreeSet::new();
    corpus
        .scenario
        .into_iter()
        .map(|raw| {
            if !seen.insert(raw.name.clone()) {
                return Err(FixtureError::Corpus(format!("duplicate fixture '{}'", raw.name)));
            }
            ScenarioFixture::from_raw(raw)
        })
        .collect()
}

pub fn load_fixture(name: &str) -> Result<ScenarioFixture, FixtureError> {
    all_fixtures()?
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| FixtureError::Unknown(name.to_string()))
}

/// The fixture `cmd_honest`/`cmd_attack` take their participants from.
pub fn default_fixture(protocol: ProtocolId, kind: FixtureKind) -> Result<ScenarioFixture, FixtureError> {
    let name = match (protocol, kind) {
        (p, FixtureKind::Honest) => format!("{p}_honest"),
        (ProtocolId::Li, FixtureKind::Attack) => "li_single_login_attack".into(),
        (ProtocolId::Xu, FixtureKind::Attack) => "xu_insider".into(),
        (p, FixtureKind::Attack) => format!("{p}_lost_card_attack"),
    };
    load_fixture(&name)
}

/// One expected verdict cell.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedCell {
    pub protocol: ProtocolId,
    pub requirement: String,
    pub status: String,
}

#[derive(Deserialize)]
struct VerdictFile {
    cell: Vec<ExpectedCell>,
}

pub fn expected_verdicts() -> Result<Vec<ExpectedCell>, FixtureError> {
    let file: VerdictFile = toml::from_str(VERDICTS_TOML).map_err(|e| FixtureError::Corpus(e.to_string()))?;
    Ok(file.cell)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses() {
        let all = all_fixtures().unwrap();
        assert!(all.len() >= 13);
        for p in ProtocolId::ALL {
            default_fixture(p, FixtureKind::Honest).unwrap();
            default_fixture(p, FixtureKind::Attack).unwrap();
        }
        assert_eq!(expected_verdicts().unwrap().len(), 6);
    }

    #[test]
    fn unknown_name_is_a_lookup_error() {
        assert!(matches!(load_fixture("nonexistent"), Err(FixtureError::Unknown(n)) if n == "nonexistent"));
    }

    #[test]
    fn fixture_passwords_are_in_the_builtin_dictionary() {
        let d = Dictionary::builtin_demo();
        for f in all_fixtures().unwrap() {
            assert!(d.contains(&f.participants.password), "{}", f.name);
        }
    }

    #[test]
    fn named_expectations() {
        let li = load_fixture("li_single_login_attack").unwrap();
        assert_eq!(li.expect.outcome, ExpectedOutcome::FoundPassword);
        assert_eq!(li.expect.login_requests_sent, Some(1));
        let xu = load_fixture("xu_insider").unwrap();
        assert_eq!(xu.expect.outcome, ExpectedOutcome::ImpersonationAccepted);
    }

    #[test]
    fn every_fixture_replays_at_seed_zero() {
        for f in all_fixtures().unwrap() {
            f.replay(0).unwrap_or_else(|e| panic!("{e}"));
        }
    }
}
