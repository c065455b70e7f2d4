//! Protocol-agnostic entry points over the per-protocol scenario drivers.

use crate::guessing::Dictionary;
use crate::proto::xu::XuOptions;
use crate::proto::{hsiang, juang, kim, li, xu};
use crate::proto::{AttackReport, HonestReport, Participants, ProtocolId, ScenarioError};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub xu: XuOptions,
    /// Li only: biometric presented at login instead of the registered one.
    pub presented_biometric: Option<Vec<u8>>,
}

/// Protocols whose attack is a dictionary search.
pub fn needs_dictionary(protocol: ProtocolId) -> bool {
    protocol != ProtocolId::Xu
}

pub fn run_honest(
    protocol: ProtocolId,
    p: &Participants,
    seed: u64,
    opts: &RunOptions,
) -> Result<HonestReport, ScenarioError> {
    match protocol {
        ProtocolId::Juang => juang::run_honest(p, seed),
        ProtocolId::Hsiang => hsiang::run_honest(p, seed),
        ProtocolId::Kim => kim::run_honest(p, seed),
        ProtocolId::Xu => xu::run_honest(p, seed, opts.xu),
        ProtocolId::Li => match &opts.presented_biometric {
            Some(b) => li::run_honest_with(p, seed, b),
            None => li::run_honest(p, seed),
        },
    }
}

/// `dictionary` is required for every protocol except xu, which ignores it.
pub fn run_attack(
    protocol: ProtocolId,
    p: &Participants,
    dictionary: Option<&Dictionary>,
    seed: u64,
    opts: &RunOptions,
) -> Result<AttackReport, ScenarioError> {
    let dict = || dictionary.ok_or_else(|| ScenarioError::Config(format!("the {protocol} attack needs a dictionary")));
    match protocol {
        ProtocolId::Juang => juang::run_attack(p, dict()?, seed),
        ProtocolId::Hsiang => hsiang::run_attack(p, dict()?, seed),
        ProtocolId::Kim => kim::run_attack(p, dict()?, seed),
        ProtocolId::Xu => xu::run_attack(p, seed, opts.xu),
        ProtocolId::Li => li::run_attack(p, dict()?, seed),
    }
}
