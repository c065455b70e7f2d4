//! Requirement taxonomy and the protocol × requirement verdict matrix, built
//! from executed scenarios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::hash;
use crate::fixtures::{self, FixtureError, FixtureKind};
use crate::proto::{AttackOutcome, AttackReport, HonestReport, ProtocolId};
use crate::runner;
use crate::simnet::Transcript;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Requirement {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
}

impl Requirement {
    pub const ALL: [Requirement; 10] = [
        Requirement::R1,
        Requirement::R2,
        Requirement::R3,
        Requirement::R4,
        Requirement::R5,
        Requirement::R6,
        Requirement::R7,
        Requirement::R8,
        Requirement::R9,
        Requirement::R10,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Requirement::R1 => "R1",
            Requirement::R2 => "R2",
            Requirement::R3 => "R3",
            Requirement::R4 => "R4",
            Requirement::R5 => "R5",
            Requirement::R6 => "R6",
            Requirement::R7 => "R7",
            Requirement::R8 => "R8",
            Requirement::R9 => "R9",
            Requirement::R10 => "R10",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Requirement::R1 => "It needs no password or verification table in the server.",
            Requirement::R2 => "The client can choose and change his password freely.",
            Requirement::R3 => {
                "The client needs not to reveal their password to the server even in the registration phase."
            }
            Requirement::R4 => "The password should not be transmitted in plaintext over the network.",
            Requirement::R5 => "It can resist insider (a legal user) attack.",
            Requirement::R6 => {
                "It can resist replay attack, password guessing attack, modification-verification-table attack, and stolen-verifier attack."
            }
            Requirement::R7 => "The length of a password should be appropriate for memorization.",
            Requirement::R8 => "It should be efficient and practical.",
            Requirement::R9 => "It should achieve mutual authentication.",
            Requirement::R10 => "It should resist offline password guessing attack even if the smart card is lost.",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Requirement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Requirement::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| format!("unknown requirement '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Violated,
    SatisfiedByDemonstration,
    NotEvaluated,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Violated => "violated",
            Status::SatisfiedByDemonstration => "satisfied_by_demonstration",
            Status::NotEvaluated => "not_evaluated",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Status::Violated, Status::SatisfiedByDemonstration, Status::NotEvaluated]
            .into_iter()
            .find(|st| st.label() == s)
            .ok_or_else(|| format!("unknown status '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    /// Dictionary attack recovered the registered password.
    FoundPassword,
    /// Login with the recovered password and the stolen card was accepted.
    MasqueradeAccepted,
    /// Insider accepted under another user's identity.
    ImpersonationResult,
    /// Password bytes appear in a registration envelope.
    PasswordInRegistration,
    /// No registration envelope contains the password bytes.
    RegistrationScanClean,
    /// Honest networked run ended with both sides accepting.
    MutualAuthentication,
    /// Card-local verify, change, verify round trip succeeded.
    PasswordChangeRoundTrip,
}

/// Result of an executed scenario backing a verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub kind: EvidenceKind,
    pub detail: String,
    /// Hex hash of the scenario's structured transcript.
    pub transcript: String,
}

impl Evidence {
    fn new(protocol: ProtocolId, kind: EvidenceKind, detail: impl Into<String>, transcript: &Transcript) -> Self {
        Evidence {
            kind,
            detail: detail.into(),
            transcript: transcript_ref(protocol, transcript),
        }
    }
}

/// Hex hash binding the protocol name to its structured transcript.
pub fn transcript_ref(protocol: ProtocolId, t: &Transcript) -> String {
    hash(&[protocol.name().as_bytes(), t.render_structured().as_bytes()]).to_hex()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub protocol: ProtocolId,
    pub requirement: Requirement,
    pub status: Status,
    pub evidence: Vec<Evidence>,
}

/// Complete 5 × 10 grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerdictMatrix {
    seed: u64,
    cells: Vec<Verdict>,
}

impl VerdictMatrix {
    fn blank(seed: u64) -> Self {
        let cells = ProtocolId::ALL
            .into_iter()
            .flat_map(|protocol| {
                Requirement::ALL.into_iter().map(move |requirement| Verdict {
                    protocol,
                    requirement,
                    status: Status::NotEvaluated,
                    evidence: Vec::new(),
                })
            })
            .collect();
        VerdictMatrix { seed, cells }
    }

    fn slot(protocol: ProtocolId, requirement: Requirement) -> usize {
        let row = ProtocolId::ALL
            .iter()
            .position(|p| *p == protocol)
            .expect("listed protocol");
        row * Requirement::ALL.len() + requirement.index()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, protocol: ProtocolId, requirement: Requirement) -> &Verdict {
        &self.cells[Self::slot(protocol, requirement)]
    }

    /// Protocol-major order.
    pub fn cells(&self) -> &[Verdict] {
        &self.cells
    }

    fn set(&mut self, protocol: ProtocolId, requirement: Requirement, status: Status, evidence: Vec<Evidence>) {
        let cell = &mut self.cells[Self::slot(protocol, requirement)];
        cell.status = status;
        cell.evidence = evidence;
    }

    /// Test hook: overwrite a cell without running anything.
    pub fn with_cell(
        mut self,
        protocol: ProtocolId,
        requirement: Requirement,
        status: Status,
        evidence: Vec<Evidence>,
    ) -> Self {
        self.set(protocol, requirement, status, evidence);
        self
    }

    /// Compares against the expected fixture cells; names the first mismatch.
    pub fn check_expected(&self) -> Result<(), EvaluationError> {
        for cell in fixtures::expected_verdicts()? {
            let requirement: Requirement = cell.requirement.parse().map_err(EvaluationError::Parse)?;
            let expected: Status = cell.status.parse().map_err(EvaluationError::Parse)?;
            let got = self.get(cell.protocol, requirement);
            if got.status != expected {
                return Err(EvaluationError::Mismatch {
                    protocol: cell.protocol,
                    requirement,
                    expected,
                    observed: got.status,
                });
            }
            if got.status == Status::Violated && got.evidence.is_empty() {
                return Err(EvaluationError::EmptyEvidence {
                    protocol: cell.protocol,
                    requirement,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("{protocol} {requirement} at seed {seed}: {message}")]
    Scenario {
        protocol: ProtocolId,
        requirement: Requirement,
        seed: u64,
        message: String,
    },
    #[error("{protocol} {requirement} is violated but carries no evidence")]
    EmptyEvidence {
        protocol: ProtocolId,
        requirement: Requirement,
    },
    #[error("{protocol} {requirement}: expected {expected}, observed {observed}")]
    Mismatch {
        protocol: ProtocolId,
        requirement: Requirement,
        expected: Status,
        observed: Status,
    },
    #[error("matrix parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
}

/// Envelope index and byte offset of the first registration payload that
/// contains `password` verbatim.
pub fn scan_registration(protocol: ProtocolId, transcript: &Transcript, password: &[u8]) -> Option<(usize, usize)> {
    let tag = protocol.registration_tag()?;
    transcript
        .envelopes()
        .enumerate()
        .filter(|(_, (e, _))| e.payload.first() == Some(&tag))
        .find_map(|(i, (e, _))| {
            e.payload
                .windows(password.len().max(1))
                .position(|w| w == password)
                .map(|off| (i, off))
        })
}

struct Runs {
    honest: HonestReport,
    attack: AttackReport,
}

fn execute(protocol: ProtocolId, seed: u64) -> Result<Runs, EvaluationError> {
    let fail = |requirement, message: String| EvaluationError::Scenario {
        protocol,
        requirement,
        seed,
        message,
    };
    let hf = fixtures::default_fixture(protocol, FixtureKind::Honest)?;
    let honest = runner::run_honest(protocol, &hf.participants, seed, &hf.options)
        .map_err(|e| fail(Requirement::R9, e.to_string()))?;
    let af = fixtures::default_fixture(protocol, FixtureKind::Attack)?;
    let dict = af.resolve_dictionary();
    let primary = if protocol == ProtocolId::Xu {
        Requirement::R5
    } else {
        Requirement::R10
    };
    let attack = runner::run_attack(protocol, &af.participants, dict.as_ref(), seed, &af.options)
        .map_err(|e| fail(primary, e.to_string()))?;
    Ok(Runs { honest, attack })
}

fn assess(protocol: ProtocolId, seed: u64, runs: &Runs, m: &mut VerdictMatrix) -> Result<(), EvaluationError> {
    let fail = |requirement, message: String| EvaluationError::Scenario {
        protocol,
        requirement,
        seed,
        message,
    };
    let Runs { honest, attack } = runs;

    if !honest.accepted || honest.user_key != honest.server_key {
        let why = honest
            .rejection
            .map(|r| r.to_string())
            .unwrap_or_else(|| "keys differ".into());
        let req = if protocol.has_network_flow() {
            Requirement::R9
        } else {
            Requirement::R2
        };
        return Err(fail(req, format!("honest run failed: {why}")));
    }
    if protocol.has_network_flow() {
        let detail = match honest.user_key {
            Some(k) => format!("both sides accepted; session key {}", k.to_hex()),
            None => "both sides accepted".into(),
        };
        m.set(
            protocol,
            Requirement::R9,
            Status::SatisfiedByDemonstration,
            vec![Evidence::new(
                protocol,
                EvidenceKind::MutualAuthentication,
                detail,
                &honest.transcript,
            )],
        );
    } else {
        m.set(
            protocol,
            Requirement::R2,
            Status::SatisfiedByDemonstration,
            vec![Evidence::new(
                protocol,
                EvidenceKind::PasswordChangeRoundTrip,
                "verify, change, verify with the new password accepted; old password refused",
                &honest.transcript,
            )],
        );
    }

    let hf = fixtures::default_fixture(protocol, FixtureKind::Honest)?;
    let password = &hf.participants.password;
    match (protocol, scan_registration(protocol, &honest.transcript, password)) {
        (ProtocolId::Xu, Some((i, off))) => m.set(
            protocol,
            Requirement::R3,
            Status::Violated,
            vec![Evidence::new(
                protocol,
                EvidenceKind::PasswordInRegistration,
                format!("password bytes at offset {off} of envelope {i}"),
                &honest.transcript,
            )],
        ),
        (ProtocolId::Xu, None) => {
            return Err(fail(
                Requirement::R3,
                "password not found in registration envelope".into(),
            ));
        }
        (ProtocolId::Juang, None) => m.set(
            protocol,
            Requirement::R3,
            Status::SatisfiedByDemonstration,
            vec![Evidence::new(
                protocol,
                EvidenceKind::RegistrationScanClean,
                "registration envelope does not contain the password bytes",
                &honest.transcript,
            )],
        ),
        (ProtocolId::Juang, Some(_)) => {
            return Err(fail(Requirement::R3, "password found in registration envelope".into()));
        }
        // Li submits the password at registration, but only R10 is claimed
        // against it; the scan result is kept as an observation.
        (ProtocolId::Li, found) => m.set(
            protocol,
            Requirement::R3,
            Status::NotEvaluated,
            vec![Evidence::new(
                protocol,
                if found.is_some() {
                    EvidenceKind::PasswordInRegistration
                } else {
                    EvidenceKind::RegistrationScanClean
                },
                match found {
                    Some((i, off)) => format!("password bytes at offset {off} of envelope {i}"),
                    None => "registration envelope does not contain the password bytes".into(),
                },
                &honest.transcript,
            )],
        ),
        _ => {}
    }

    match &attack.outcome {
        AttackOutcome::Guess(g) => {
            if !attack.succeeded() {
                return Err(fail(
                    Requirement::R10,
                    format!("attack did not recover the password: {g}"),
                ));
            }
            let mut evidence = vec![Evidence::new(
                protocol,
                EvidenceKind::FoundPassword,
                format!("{g} online_messages={}", attack.online_messages),
                &attack.transcript,
            )];
            match attack.masquerade_accepted {
                Some(true) => evidence.push(Evidence::new(
                    protocol,
                    EvidenceKind::MasqueradeAccepted,
                    "server accepted a login with the stolen card and recovered password",
                    &attack.transcript,
                )),
                Some(false) => {
                    return Err(fail(Requirement::R10, "masquerade login was rejected".into()));
                }
                None => {}
            }
            m.set(protocol, Requirement::R10, Status::Violated, evidence);
        }
        AttackOutcome::Impersonation(r) => {
            if !r.accepted || r.sk.is_none() || r.sk != attack.server_key {
                let why = r
                    .rejection
                    .map(|x| x.to_string())
                    .unwrap_or_else(|| "session keys differ".into());
                return Err(fail(Requirement::R5, format!("insider impersonation failed: {why}")));
            }
            m.set(
                protocol,
                Requirement::R5,
                Status::Violated,
                vec![Evidence::new(
                    protocol,
                    EvidenceKind::ImpersonationResult,
                    format!(
                        "accepted=true sk={} matches server",
                        r.sk.map(|k| k.to_hex()).unwrap_or_default()
                    ),
                    &attack.transcript,
                )],
            );
        }
    }
    Ok(())
}

/// Runs the honest flow, the attack and the registration scan for every
/// protocol and fills the grid. Cells nothing was executed for stay
/// `not_evaluated`.
pub fn run_attack_scenarios(seed: u64) -> Result<VerdictMatrix, EvaluationError> {
    let mut m = VerdictMatrix::blank(seed);
    for protocol in ProtocolId::ALL {
        let runs = execute(protocol, seed)?;
        assess(protocol, seed, &runs, &mut m)?;
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Text,
    Structured,
}

/// One structured record per cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    pub protocol: ProtocolId,
    pub requirement: Requirement,
    pub status: Status,
    pub evidence_kind: Option<EvidenceKind>,
    pub scenario_seed: u64,
    pub evidence: Vec<Evidence>,
}

fn refuse_bare_violations(m: &VerdictMatrix) -> Result<(), EvaluationError> {
    match m
        .cells
        .iter()
        .find(|c| c.status == Status::Violated && c.evidence.is_empty())
    {
        Some(c) => Err(EvaluationError::EmptyEvidence {
            protocol: c.protocol,
            requirement: c.requirement,
        }),
        None => Ok(()),
    }
}

pub fn render_matrix(m: &VerdictMatrix, format: MatrixFormat) -> Result<String, EvaluationError> {
    refuse_bare_violations(m)?;
    Ok(match format {
        MatrixFormat::Text => render_text(m),
        MatrixFormat::Structured => m
            .cells
            .iter()
            .map(|c| {
                let rec = CellRecord {
                    protocol: c.protocol,
                    requirement: c.requirement,
                    status: c.status,
                    evidence_kind: c.evidence.first().map(|e| e.kind),
                    scenario_seed: m.seed,
                    evidence: c.evidence.clone(),
                };
                serde_json::to_string(&rec).expect("cell records serialize") + "\n"
            })
            .collect(),
    })
}

fn short(status: Status) -> &'static str {
    match status {
        Status::Violated => "VIOLATED",
        Status::SatisfiedByDemonstration => "ok",
        Status::NotEvaluated => "-",
    }
}

fn render_text(m: &VerdictMatrix) -> String {
    let mut out = format!("verdict matrix (seed {})\n", m.seed);
    out.push_str(&format!("{:<8}", "proto"));
    for r in Requirement::ALL {
        out.push_str(&format!(" {:>8}", r.id()));
    }
    out.push('\n');
    for p in ProtocolId::ALL {
        out.push_str(&format!("{:<8}", p.name()));
        for r in Requirement::ALL {
            out.push_str(&format!(" {:>8}", short(m.get(p, r).status)));
        }
        out.push('\n');
    }
    out.push_str("\nevidence\n");
    for c in m.cells.iter().filter(|c| !c.evidence.is_empty()) {
        for e in &c.evidence {
            let kind = serde_json::to_value(e.kind).expect("kind serializes");
            out.push_str(&format!(
                "  {} {} {} {}: {} [transcript {}]\n",
                c.protocol,
                c.requirement,
                c.status,
                kind.as_str().unwrap_or_default(),
                e.detail,
                &e.transcript[..16]
            ));
        }
    }
    out
}

/// Inverse of the structured rendering.
pub fn parse_structured(text: &str) -> Result<VerdictMatrix, EvaluationError> {
    let mut seed = None;
    let mut m = VerdictMatrix::blank(0);
    let mut seen = vec![false; m.cells.len()];
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: CellRecord =
            serde_json::from_str(line).map_err(|e| EvaluationError::Parse(format!("line {}: {e}", n + 1)))?;
        if *seed.get_or_insert(rec.scenario_seed) != rec.scenario_seed {
            return Err(EvaluationError::Parse(format!("line {}: mixed seeds", n + 1)));
        }
        if rec.evidence_kind != rec.evidence.first().map(|e| e.kind) {
            return Err(EvaluationError::Parse(format!(
                "line {}: evidence_kind disagrees with evidence",
                n + 1
            )));
        }
        let slot = VerdictMatrix::slot(rec.protocol, rec.requirement);
        if std::mem::replace(&mut seen[slot], true) {
            return Err(EvaluationError::Parse(format!("line {}: duplicate cell", n + 1)));
        }
        m.set(rec.protocol, rec.requirement, rec.status, rec.evidence);
    }
    if seen.iter().any(|s| !s) {
        return Err(EvaluationError::Parse("incomplete grid".into()));
    }
    m.seed = seed.unwrap_or(0);
    refuse_bare_violations(&m)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_unique_requirements() {
        let ids: std::collections::BTreeSet<_> = Requirement::ALL.iter().map(|r| r.id()).collect();
        assert_eq!(ids.len(), 10);
        assert!(Requirement::R10
            .description()
            .ends_with("even if the smart card is lost."));
        assert_eq!("R7".parse::<Requirement>(), Ok(Requirement::R7));
        assert!("R11".parse::<Requirement>().is_err());
    }

    #[test]
    fn fixture_cells_at_seed_zero() {
        let m = run_attack_scenarios(0).unwrap();
        m.check_expected().unwrap();
        for c in m.cells() {
            if c.status == Status::Violated {
                assert!(!c.evidence.is_empty());
            }
        }
        assert_eq!(m.get(ProtocolId::Juang, Requirement::R10).evidence.len(), 2);
        assert_eq!(m.get(ProtocolId::Kim, Requirement::R7).status, Status::NotEvaluated);
        assert_eq!(m.get(ProtocolId::Li, Requirement::R3).status, Status::NotEvaluated);
        assert_eq!(
            m.get(ProtocolId::Juang, Requirement::R3).status,
            Status::SatisfiedByDemonstration
        );
    }

    #[test]
    fn structured_round_trip() {
        let m = run_attack_scenarios(3).unwrap();
        let text = render_matrix(&m, MatrixFormat::Structured).unwrap();
        assert_eq!(text.lines().count(), 50);
        assert_eq!(parse_structured(&text).unwrap(), m);
    }

    #[test]
    fn bare_violation_is_refused() {
        let m = VerdictMatrix::blank(0).with_cell(ProtocolId::Kim, Requirement::R4, Status::Violated, vec![]);
        for f in [MatrixFormat::Text, MatrixFormat::Structured] {
            assert!(matches!(
                render_matrix(&m, f),
                Err(EvaluationError::EmptyEvidence {
                    protocol: ProtocolId::Kim,
                    requirement: Requirement::R4
                })
            ));
        }
    }

    #[test]
    fn mismatch_names_the_cell() {
        let m =
            run_attack_scenarios(0)
                .unwrap()
                .with_cell(ProtocolId::Xu, Requirement::R5, Status::NotEvaluated, vec![]);
        let err = m.check_expected().unwrap_err();
        assert!(err.to_string().starts_with("xu R5"), "{err}");
    }

    #[test]
    fn parse_rejects_incomplete_grid() {
        let m = run_attack_scenarios(0).unwrap();
        let text = render_matrix(&m, MatrixFormat::Structured).unwrap();
        let partial: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(parse_structured(&partial).is_err());
    }
}
