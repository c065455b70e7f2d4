//! Card-local password check and password change of Kim–Chung, and the
//! lost-card guessing attack. `R ⊕ K1 = H(PW)`, so one hash per candidate
//! decides it.

use crate::crypto::{hash, pad_to_digest, xor, CryptoError, Digest};
use crate::guessing::{offline_search, Dictionary, GuessOutcome};
use crate::proto::{
    AttackOutcome, AttackReport, HonestReport, Participants, ProtocolId, Rejection, ScenarioError, SmartCardContents,
};
use crate::simnet::{PartyId, Scenario};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KimCard {
    pub r: Digest,
    pub k1: Digest,
    pub k2: Digest,
}

impl KimCard {
    pub fn hex_fields(&self) -> [(&'static str, String); 3] {
        [
            ("R", self.r.to_hex()),
            ("K1", self.k1.to_hex()),
            ("K2", self.k2.to_hex()),
        ]
    }
}

fn h(d: &Digest) -> Digest {
    hash(&[d.as_bytes()])
}

/// `H(PW ⊕ H(PW))`.
fn pw_term(pw: &Digest) -> Digest {
    h(&xor(pw, &h(pw)))
}

pub fn kim_card_init(id: &PartyId, x: &Digest, n: &Digest, pw: &[u8]) -> Result<KimCard, CryptoError> {
    let pw = pad_to_digest(pw)?;
    let id_x = xor(&id.padded(), x);
    let k1 = xor(&h(&id_x), n);
    Ok(KimCard {
        r: xor(&k1, &h(&pw)),
        k1,
        k2: xor(&h(&xor(&id_x, n)), &pw_term(&pw)),
    })
}

/// `R ⊕ H(PW) == K1`.
pub fn kim_verify_password(card: &KimCard, pw: &[u8]) -> bool {
    match pad_to_digest(pw) {
        Ok(pw) => xor(&card.r, &h(&pw)) == card.k1,
        Err(_) => false,
    }
}

/// Replaces `R` and `K2`; `K1` is unchanged.
pub fn kim_change_password(card: &KimCard, old: &[u8], new: &[u8]) -> Result<KimCard, Rejection> {
    let old = pad_to_digest(old)?;
    let new = pad_to_digest(new)?;
    let k1_star = xor(&card.r, &h(&old));
    if k1_star != card.k1 {
        return Err(Rejection::OldPasswordMismatch);
    }
    Ok(KimCard {
        r: xor(&k1_star, &h(&new)),
        k1: card.k1,
        k2: xor(&xor(&card.k2, &pw_term(&old)), &pw_term(&new)),
    })
}

pub fn attack_kim_offline_guess(stolen: &KimCard, dictionary: &Dictionary) -> GuessOutcome {
    offline_search(dictionary, 0, |candidate| kim_verify_password(stolen, candidate))
}

fn issue(p: &Participants, seed: u64) -> Result<(Scenario, KimCard), ScenarioError> {
    let mut scenario = Scenario::new(seed);
    scenario.add_party(&p.user)?;
    let x = Digest::random(scenario.rng());
    let n = Digest::random(scenario.rng());
    let card = kim_card_init(&p.user, &x, &n, &p.password)?;
    scenario.issue_card(&p.user, SmartCardContents::Kim(card.clone()))?;
    Ok((scenario, card))
}

pub fn run_honest(p: &Participants, seed: u64) -> Result<HonestReport, ScenarioError> {
    let (scenario, card) = issue(p, seed)?;
    let new_pw = super::hsiang::changed_password(&p.password);
    let (accepted, rejection) = if !kim_verify_password(&card, &p.password) {
        (false, Some(Rejection::BadAuthenticator))
    } else {
        match kim_change_password(&card, &p.password, &new_pw) {
            Ok(changed) => (
                kim_verify_password(&changed, &new_pw) && !kim_verify_password(&changed, &p.password),
                None,
            ),
            Err(r) => (false, Some(r)),
        }
    };
    Ok(HonestReport {
        protocol: ProtocolId::Kim,
        accepted,
        rejection,
        user_key: None,
        server_key: None,
        transcript: scenario.transcript().clone(),
    })
}

pub fn run_attack(p: &Participants, dictionary: &Dictionary, seed: u64) -> Result<AttackReport, ScenarioError> {
    let (mut scenario, _) = issue(p, seed)?;
    scenario.add_party(&p.attacker)?;
    let stolen = match scenario.extract_card(&p.user)? {
        SmartCardContents::Kim(c) => c,
        _ => return Err(ScenarioError::Config("victim holds no kim card".into())),
    };
    let outcome = attack_kim_offline_guess(&stolen, dictionary);
    Ok(AttackReport {
        protocol: ProtocolId::Kim,
        outcome: AttackOutcome::Guess(outcome),
        online_messages: scenario.transcript().envelope_count(),
        server_key: None,
        masquerade_accepted: None,
        victim_password: p.password.clone(),
        transcript: scenario.transcript().clone(),
    })
}
