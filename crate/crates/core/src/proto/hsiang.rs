//! Card-local password check and password change of Hsiang–Shih, and the
//! lost-card guessing attack. The card stores `R = P ⊕ H(b ⊕ PW)`, `b` and
//! `V = H(P ⊕ H(PW))`; `V` is a verifier for the password computable from
//! card contents alone.

use crate::crypto::{hash, pad_to_digest, xor, CryptoError, Digest};
use crate::guessing::{offline_search, Dictionary, GuessOutcome};
use crate::proto::{
    AttackOutcome, AttackReport, HonestReport, Participants, ProtocolId, Rejection, ScenarioError, SmartCardContents,
};
use crate::simnet::Scenario;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HsiangCard {
    pub r: Digest,
    pub b: Digest,
    pub v: Digest,
}

impl HsiangCard {
    pub fn hex_fields(&self) -> [(&'static str, String); 3] {
        [("R", self.r.to_hex()), ("b", self.b.to_hex()), ("V", self.v.to_hex())]
    }
}

/// Server-derived card secret `P`; only `R` encodes it on the card.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HsiangSecretP(pub Digest);

fn mask(b: &Digest, pw: &Digest) -> Digest {
    hash(&[xor(b, pw).as_bytes()])
}

fn verifier(p: &Digest, pw: &Digest) -> Digest {
    hash(&[xor(p, &hash(&[pw.as_bytes()])).as_bytes()])
}

pub fn hsiang_card_init(p: &HsiangSecretP, b: &Digest, pw: &[u8]) -> Result<HsiangCard, CryptoError> {
    let pw = pad_to_digest(pw)?;
    Ok(HsiangCard {
        r: xor(&p.0, &mask(b, &pw)),
        b: *b,
        v: verifier(&p.0, &pw),
    })
}

/// `P* = R ⊕ H(b ⊕ PW)`.
fn recover_p(card: &HsiangCard, pw: &Digest) -> Digest {
    xor(&card.r, &mask(&card.b, pw))
}

/// The card's check, `H(P* ⊕ H(PW)) == V`. The attack uses exactly this
/// predicate.
pub fn hsiang_verify_password(card: &HsiangCard, pw: &[u8]) -> bool {
    match pad_to_digest(pw) {
        Ok(pw) => verifier(&recover_p(card, &pw), &pw) == card.v,
        Err(_) => false,
    }
}

/// Replaces both `R` and `V`; `b` is unchanged.
pub fn hsiang_change_password(card: &HsiangCard, old: &[u8], new: &[u8]) -> Result<HsiangCard, Rejection> {
    let old = pad_to_digest(old)?;
    let new = pad_to_digest(new)?;
    let p = recover_p(card, &old);
    if verifier(&p, &old) != card.v {
        return Err(Rejection::OldPasswordMismatch);
    }
    Ok(HsiangCard {
        r: xor(&p, &mask(&card.b, &new)),
        b: card.b,
        v: verifier(&p, &new),
    })
}

/// Purely offline: no network access at all.
pub fn attack_hsiang_offline_guess(stolen: &HsiangCard, dictionary: &Dictionary) -> GuessOutcome {
    offline_search(dictionary, 0, |candidate| hsiang_verify_password(stolen, candidate))
}

/// Password the honest round trip changes to.
pub(crate) fn changed_password(pw: &[u8]) -> Vec<u8> {
    let mut new = pw.to_vec();
    if new.len() < crate::crypto::DIGEST_LEN {
        new.push(b'+');
    } else {
        new[0] ^= 0x20;
    }
    new
}

fn issue(p: &Participants, seed: u64) -> Result<(Scenario, HsiangCard), ScenarioError> {
    let mut scenario = Scenario::new(seed);
    scenario.add_party(&p.user)?;
    let secret = HsiangSecretP(Digest::random(scenario.rng()));
    let b = Digest::random(scenario.rng());
    let card = hsiang_card_init(&secret, &b, &p.password)?;
    scenario.issue_card(&p.user, SmartCardContents::Hsiang(card.clone()))?;
    Ok((scenario, card))
}

/// Verify, change, verify again.
pub fn run_honest(p: &Participants, seed: u64) -> Result<HonestReport, ScenarioError> {
    let (scenario, card) = issue(p, seed)?;
    let new_pw = changed_password(&p.password);
    let (accepted, rejection) = if !hsiang_verify_password(&card, &p.password) {
        (false, Some(Rejection::BadAuthenticator))
    } else {
        match hsiang_change_password(&card, &p.password, &new_pw) {
            Ok(changed) => (
                hsiang_verify_password(&changed, &new_pw) && !hsiang_verify_password(&changed, &p.password),
                None,
            ),
            Err(r) => (false, Some(r)),
        }
    };
    Ok(HonestReport {
        protocol: ProtocolId::Hsiang,
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
        SmartCardContents::Hsiang(c) => c,
        _ => return Err(ScenarioError::Config("victim holds no hsiang card".into())),
    };
    let outcome = attack_hsiang_offline_guess(&stolen, dictionary);
    Ok(AttackReport {
        protocol: ProtocolId::Hsiang,
        outcome: AttackOutcome::Guess(outcome),
        online_messages: scenario.transcript().envelope_count(),
        server_key: None,
        masquerade_accepted: None,
        victim_password: p.password.clone(),
        transcript: scenario.transcript().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn card(seed: u64, pw: &[u8]) -> (HsiangSecretP, HsiangCard) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let p = HsiangSecretP(Digest::random(&mut rng));
        let b = Digest::random(&mut rng);
        (p, hsiang_card_init(&p, &b, pw).unwrap())
    }

    #[test]
    fn init_and_verify() {
        let (p, c) = card(1, b"letmein123");
        assert!(hsiang_verify_password(&c, b"letmein123"));
        for wrong in [&b"letmein12"[..], b"Letmein123", b"x", b""] {
            assert!(!hsiang_verify_password(&c, wrong));
        }
        let pw = pad_to_digest(b"letmein123").unwrap();
        assert_eq!(xor(&c.r, &hash(&[xor(&c.b, &pw).as_bytes()])), p.0);
        let tampered = HsiangCard {
            v: c.v.flip_bit(3),
            ..c.clone()
        };
        assert!(!hsiang_verify_password(&tampered, b"letmein123"));
    }

    #[test]
    fn change_password_moves_verification() {
        let (p, c) = card(2, b"old");
        let changed = hsiang_change_password(&c, b"old", b"new").unwrap();
        assert!(hsiang_verify_password(&changed, b"new"));
        assert!(!hsiang_verify_password(&changed, b"old"));
        assert_eq!(changed.b, c.b);
        // P survives the change.
        let new = pad_to_digest(b"new").unwrap();
        assert_eq!(recover_p(&changed, &new), p.0);
        assert_eq!(
            hsiang_change_password(&c, b"wrong", b"new"),
            Err(Rejection::OldPasswordMismatch)
        );
    }

    #[test]
    fn attack_finds_password_or_reports_absence() {
        let (_, c) = card(3, b"abc");
        let d = Dictionary::parse("one\ntwo\nabc\nfour").unwrap();
        assert_eq!(
            attack_hsiang_offline_guess(&c, &d),
            GuessOutcome::Found {
                password: b"abc".to_vec(),
                guesses_tried: 3,
                login_requests_sent: 0
            }
        );
        assert!(!attack_hsiang_offline_guess(&c, &d.without(b"abc")).is_found());
    }
}
