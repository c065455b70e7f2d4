//! The five protocol models, their attacks, and the scenario drivers that run
//! them over [`crate::simnet`].

pub mod hsiang;
pub mod juang;
pub mod kim;
pub mod li;
pub mod xu;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{CryptoError, Digest};
use crate::guessing::{GuessOutcome, OracleError};
use crate::simnet::{NetError, PartyId, Transcript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolId {
    Juang,
    Hsiang,
    Kim,
    Xu,
    Li,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 5] = [
        ProtocolId::Juang,
        ProtocolId::Hsiang,
        ProtocolId::Kim,
        ProtocolId::Xu,
        ProtocolId::Li,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Juang => "juang",
            ProtocolId::Hsiang => "hsiang",
            ProtocolId::Kim => "kim",
            ProtocolId::Xu => "xu",
            ProtocolId::Li => "li",
        }
    }

    /// Wire tag of the registration request, for protocols that register
    /// over the network.
    pub fn registration_tag(self) -> Option<u8> {
        use crate::wire::WireMessage;
        match self {
            ProtocolId::Juang => Some(juang::JuangRegistration::TAG),
            ProtocolId::Xu => Some(xu::XuRegistration::TAG),
            ProtocolId::Li => Some(li::LiRegistration::TAG),
            ProtocolId::Hsiang | ProtocolId::Kim => None,
        }
    }

    /// Whether the model includes a networked login flow with a server.
    pub fn has_network_flow(self) -> bool {
        matches!(self, ProtocolId::Juang | ProtocolId::Xu | ProtocolId::Li)
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown protocol '{s}' (expected juang, hsiang, kim, xu or li)"))
    }
}

/// Why a protocol step refused to continue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Error)]
pub enum Rejection {
    #[error("unknown_id")]
    UnknownId,
    #[error("duplicate_id")]
    DuplicateId,
    #[error("stale_timestamp")]
    StaleTimestamp,
    #[error("bad_authenticator")]
    BadAuthenticator,
    #[error("biometric_mismatch")]
    BiometricMismatch,
    #[error("integrity")]
    Integrity,
    #[error("id_mismatch")]
    IdMismatch,
    #[error("malformed")]
    Malformed,
    #[error("wrong_phase")]
    WrongPhase,
    #[error("old_password_mismatch")]
    OldPasswordMismatch,
    #[error("input_too_long")]
    InputTooLong,
}

impl Rejection {
    pub const ALL: [Rejection; 11] = [
        Rejection::UnknownId,
        Rejection::DuplicateId,
        Rejection::StaleTimestamp,
        Rejection::BadAuthenticator,
        Rejection::BiometricMismatch,
        Rejection::Integrity,
        Rejection::IdMismatch,
        Rejection::Malformed,
        Rejection::WrongPhase,
        Rejection::OldPasswordMismatch,
        Rejection::InputTooLong,
    ];
}

impl FromStr for Rejection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rejection::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| format!("unknown rejection '{s}'"))
    }
}

impl From<CryptoError> for Rejection {
    fn from(e: CryptoError) -> Self {
        match e {
            CryptoError::Integrity => Rejection::Integrity,
            CryptoError::TooLong { .. } => Rejection::InputTooLong,
            CryptoError::Malformed(_) => Rejection::Malformed,
        }
    }
}

/// What a lost card gives away, per protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmartCardContents {
    Juang(juang::JuangCard),
    Hsiang(hsiang::HsiangCard),
    Kim(kim::KimCard),
    Xu(xu::XuCard),
    Li(li::LiCard),
}

impl SmartCardContents {
    pub fn protocol(&self) -> ProtocolId {
        match self {
            SmartCardContents::Juang(_) => ProtocolId::Juang,
            SmartCardContents::Hsiang(_) => ProtocolId::Hsiang,
            SmartCardContents::Kim(_) => ProtocolId::Kim,
            SmartCardContents::Xu(_) => ProtocolId::Xu,
            SmartCardContents::Li(_) => ProtocolId::Li,
        }
    }

    /// `name=hex` fields, one per stored value.
    pub fn display_fields(&self) -> Vec<(&'static str, String)> {
        match self {
            SmartCardContents::Juang(c) => vec![("b", c.b.to_hex()), ("b_i", hex::encode(c.b_i.to_bytes()))],
            SmartCardContents::Hsiang(c) => c.hex_fields().to_vec(),
            SmartCardContents::Kim(c) => c.hex_fields().to_vec(),
            SmartCardContents::Xu(c) => vec![("id_c", c.id.to_string()), ("b", hex::encode(c.b.to_bytes_be()))],
            SmartCardContents::Li(c) => vec![
                ("id_c", c.id.to_string()),
                ("f_c", c.f_c.to_hex()),
                ("e_c", c.e_c.to_hex()),
            ],
        }
    }
}

/// Who takes part in a scenario and with which credentials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Participants {
    pub user: PartyId,
    pub server: PartyId,
    pub attacker: PartyId,
    pub password: Vec<u8>,
    pub biometric: Vec<u8>,
    /// Insider identity and password, for Xu.
    pub insider: Option<(PartyId, Vec<u8>)>,
}

impl Participants {
    pub fn new(user: &str, server: &str, attacker: &str, password: &[u8]) -> Result<Self, NetError> {
        Ok(Participants {
            user: PartyId::new(user)?,
            server: PartyId::new(server)?,
            attacker: PartyId::new(attacker)?,
            password: password.to_vec(),
            biometric: b"fingerprint-template-C".to_vec(),
            insider: None,
        })
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario configuration: {0}")]
    Net(#[from] NetError),
    #[error("{0}")]
    Config(String),
}

impl From<CryptoError> for ScenarioError {
    fn from(e: CryptoError) -> Self {
        ScenarioError::Config(e.to_string())
    }
}

/// Outcome of an honest run.
#[derive(Clone, Debug)]
pub struct HonestReport {
    pub protocol: ProtocolId,
    /// Both sides accepted (or, for card-local models, every round-trip check passed).
    pub accepted: bool,
    pub rejection: Option<Rejection>,
    pub user_key: Option<Digest>,
    pub server_key: Option<Digest>,
    pub transcript: Transcript,
}

/// Outcome of the insider attack on Xu.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImpersonationResult {
    pub accepted: bool,
    pub sk: Option<Digest>,
    pub rejection: Option<Rejection>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttackOutcome {
    Guess(GuessOutcome),
    Impersonation(ImpersonationResult),
}

/// Outcome of an attack scenario.
#[derive(Clone, Debug)]
pub struct AttackReport {
    pub protocol: ProtocolId,
    pub outcome: AttackOutcome,
    /// Envelopes the attack put on the network (excluding registration and
    /// any post-recovery masquerade).
    pub online_messages: usize,
    /// Session key the server holds for the attacker's session, when one exists.
    pub server_key: Option<Digest>,
    /// Juang only: login with the recovered password and stolen card.
    pub masquerade_accepted: Option<bool>,
    pub victim_password: Vec<u8>,
    pub transcript: Transcript,
}

impl AttackReport {
    /// The attack reached its goal: the victim's password was recovered, or
    /// the insider was accepted under the target identity.
    pub fn succeeded(&self) -> bool {
        match &self.outcome {
            AttackOutcome::Guess(g) => g.password() == Some(self.victim_password.as_slice()),
            AttackOutcome::Impersonation(r) => r.accepted,
        }
    }
}

pub(crate) fn oracle_rejection(e: OracleError) -> Option<Rejection> {
    match e {
        OracleError::Rejected(r) => Some(r),
        _ => None,
    }
}
