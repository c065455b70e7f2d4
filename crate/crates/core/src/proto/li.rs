//! Biometrics-assisted XOR/hash mutual authentication (Li–Hwang) and the
//! single-login offline guessing attack.
//!
//! The server answers any `{ID_c, M_2}` for a registered `ID_c` with
//! `M_6 = H(M_2, M_2 ⊕ H(ID_c, x))`. With `e_c` from a lost card,
//! `H(ID_c, x) = e_c ⊕ H(PW, f_c)`, so one response is enough to test every
//! password candidate offline.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;

use crate::crypto::{hash, pad_to_digest, xor, CryptoError, Digest};
use crate::guessing::{offline_search, Dictionary, GuessOutcome, NetworkOracle, OracleError, ServerOracle};
use crate::proto::{
    oracle_rejection, AttackOutcome, AttackReport, HonestReport, Participants, ProtocolId, Rejection, ScenarioError,
    SmartCardContents,
};
use crate::simnet::{Envelope, PartyId, Scenario};
use crate::wire::{Reader, WireMessage, Writer};

#[derive(Clone, Debug)]
pub struct LiServerState {
    x: Digest,
    registered: BTreeSet<PartyId>,
}

impl LiServerState {
    pub fn is_registered(&self, id: &PartyId) -> bool {
        self.registered.contains(id)
    }

    pub fn secret(&self) -> &Digest {
        &self.x
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiCard {
    pub id: PartyId,
    pub f_c: Digest,
    pub e_c: Digest,
}

/// `{ID_c, PW_c, B_c}` as submitted at registration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiRegistration {
    pub id: PartyId,
    pub password: Vec<u8>,
    pub biometric: Vec<u8>,
}

impl WireMessage for LiRegistration {
    const TAG: u8 = 0x50;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG)
            .party(&self.id)
            .bytes(&self.password)
            .bytes(&self.biometric)
            .finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = LiRegistration {
            id: r.party()?,
            password: r.bytes()?.to_vec(),
            biometric: r.bytes()?.to_vec(),
        };
        r.finish()?;
        Ok(msg)
    }
}

/// `{ID_c, M_2}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiLoginMsg {
    pub id: PartyId,
    pub m2: Digest,
}

impl WireMessage for LiLoginMsg {
    const TAG: u8 = 0x51;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG).party(&self.id).digest(&self.m2).finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = LiLoginMsg {
            id: r.party()?,
            m2: r.digest()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

/// `{M_5, M_6}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiChallengeMsg {
    pub m5: Digest,
    pub m6: Digest,
}

impl WireMessage for LiChallengeMsg {
    const TAG: u8 = 0x52;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG).digest(&self.m5).digest(&self.m6).finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = LiChallengeMsg {
            m5: r.digest()?,
            m6: r.digest()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

/// `{M_8}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiResponseMsg {
    pub m8: Digest,
}

impl WireMessage for LiResponseMsg {
    const TAG: u8 = 0x53;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG).digest(&self.m8).finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = LiResponseMsg { m8: r.digest()? };
        r.finish()?;
        Ok(msg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UserPhase {
    SentLogin,
    Done,
}

#[derive(Clone, Debug)]
pub struct LiUserSession {
    pub r_c: Digest,
    pub m1: Digest,
    pub m2: Digest,
    pub phase: UserPhase,
    pub accepted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServerPhase {
    SentChallenge,
    Accepted,
    Rejected,
}

#[derive(Clone, Debug)]
pub struct LiServerSession {
    pub r_s: Digest,
    pub m4: Digest,
    pub m5: Digest,
    pub m2: Digest,
    pub phase: ServerPhase,
}

/// `H(ID_c, x)`.
pub fn identity_key(id: &PartyId, x: &Digest) -> Digest {
    hash(&[id.padded().as_bytes(), x.as_bytes()])
}

/// `H(PW, f_c)`.
pub fn password_mask(pw: &[u8], f_c: &Digest) -> Result<Digest, CryptoError> {
    Ok(hash(&[pad_to_digest(pw)?.as_bytes(), f_c.as_bytes()]))
}

pub fn li_setup<R: RngCore + ?Sized>(rng: &mut R) -> LiServerState {
    LiServerState {
        x: Digest::random(rng),
        registered: BTreeSet::new(),
    }
}

pub fn li_register(server: &mut LiServerState, id: &PartyId, pw: &[u8], biometric: &[u8]) -> Result<LiCard, Rejection> {
    if biometric.is_empty() {
        return Err(Rejection::Malformed);
    }
    if server.registered.contains(id) {
        return Err(Rejection::DuplicateId);
    }
    let f_c = hash(&[biometric]);
    let e_c = xor(&identity_key(id, &server.x), &password_mask(pw, &f_c)?);
    server.registered.insert(id.clone());
    Ok(LiCard {
        id: id.clone(),
        f_c,
        e_c,
    })
}

pub fn li_login_start<R: RngCore + ?Sized>(
    card: &LiCard,
    pw: &[u8],
    biometric: &[u8],
    rng: &mut R,
) -> Result<(LiLoginMsg, LiUserSession), Rejection> {
    if hash(&[biometric]) != card.f_c {
        return Err(Rejection::BiometricMismatch);
    }
    let r_c = Digest::random(rng);
    let m1 = xor(&card.e_c, &password_mask(pw, &card.f_c)?);
    let m2 = xor(&m1, &r_c);
    Ok((
        LiLoginMsg {
            id: card.id.clone(),
            m2,
        },
        LiUserSession {
            r_c,
            m1,
            m2,
            phase: UserPhase::SentLogin,
            accepted: false,
        },
    ))
}

pub fn li_server_respond<R: RngCore + ?Sized>(
    server: &LiServerState,
    msg: &LiLoginMsg,
    rng: &mut R,
) -> Result<(LiChallengeMsg, LiServerSession), Rejection> {
    if !server.registered.contains(&msg.id) {
        return Err(Rejection::UnknownId);
    }
    let r_s = Digest::random(rng);
    let m3 = identity_key(&msg.id, &server.x);
    let m4 = xor(&msg.m2, &m3);
    let m5 = xor(&m3, &r_s);
    let m6 = hash(&[msg.m2.as_bytes(), m4.as_bytes()]);
    Ok((
        LiChallengeMsg { m5, m6 },
        LiServerSession {
            r_s,
            m4,
            m5,
            m2: msg.m2,
            phase: ServerPhase::SentChallenge,
        },
    ))
}

pub fn li_user_finish(session: &mut LiUserSession, msg: &LiChallengeMsg) -> Result<LiResponseMsg, Rejection> {
    if session.phase != UserPhase::SentLogin {
        return Err(Rejection::WrongPhase);
    }
    if hash(&[session.m2.as_bytes(), session.r_c.as_bytes()]) != msg.m6 {
        return Err(Rejection::BadAuthenticator);
    }
    let m7 = xor(&msg.m5, &session.m1);
    session.phase = UserPhase::Done;
    session.accepted = true;
    Ok(LiResponseMsg {
        m8: hash(&[msg.m5.as_bytes(), m7.as_bytes()]),
    })
}

pub fn li_server_accept(session: &mut LiServerSession, msg: &LiResponseMsg) -> Result<(), Rejection> {
    if session.phase != ServerPhase::SentChallenge {
        return Err(Rejection::WrongPhase);
    }
    if hash(&[session.m5.as_bytes(), session.r_s.as_bytes()]) == msg.m8 {
        session.phase = ServerPhase::Accepted;
        Ok(())
    } else {
        session.phase = ServerPhase::Rejected;
        Err(Rejection::BadAuthenticator)
    }
}

/// One login request with a random `M_e`, then offline tests of
/// `H(M_e, M_e ⊕ e_c ⊕ H(PW', f_c)) == M_6`.
pub fn attack_li_offline_guess<R: RngCore + ?Sized>(
    stolen: &LiCard,
    dictionary: &Dictionary,
    oracle: &mut dyn ServerOracle,
    rng: &mut R,
) -> Result<GuessOutcome, OracleError> {
    let m_e = Digest::random(rng);
    let login = LiLoginMsg {
        id: stolen.id.clone(),
        m2: m_e,
    };
    let reply = oracle.submit(login.encode())?.ok_or(OracleError::NoResponse)?;
    let challenge = LiChallengeMsg::decode(&reply).map_err(|e| OracleError::Rejected(e.into()))?;
    // The attacker walks away here; the server session stays open.
    let known = xor(&m_e, &stolen.e_c);
    Ok(offline_search(dictionary, 1, |candidate| {
        password_mask(candidate, &stolen.f_c)
            .map(|mask| hash(&[m_e.as_bytes(), xor(&known, &mask).as_bytes()]) == challenge.m6)
            .unwrap_or(false)
    }))
}

#[derive(Debug)]
pub struct LiServer {
    pub state: LiServerState,
    sessions: BTreeMap<PartyId, LiServerSession>,
}

impl LiServer {
    pub fn new(state: LiServerState) -> Self {
        LiServer {
            state,
            sessions: BTreeMap::new(),
        }
    }

    pub fn session(&self, peer: &PartyId) -> Option<&LiServerSession> {
        self.sessions.get(peer)
    }

    pub fn handle<R: RngCore + ?Sized>(&mut self, env: &Envelope, rng: &mut R) -> Result<Option<Vec<u8>>, Rejection> {
        match env.payload.first() {
            Some(&LiLoginMsg::TAG) => {
                let msg = LiLoginMsg::decode(&env.payload)?;
                let (reply, session) = li_server_respond(&self.state, &msg, rng)?;
                self.sessions.insert(env.from.clone(), session);
                Ok(Some(reply.encode()))
            }
            Some(&LiResponseMsg::TAG) => {
                let msg = LiResponseMsg::decode(&env.payload)?;
                let session = self.sessions.get_mut(&env.from).ok_or(Rejection::WrongPhase)?;
                li_server_accept(session, &msg)?;
                Ok(None)
            }
            _ => Err(Rejection::Malformed),
        }
    }
}

/// Full client login through `oracle`.
pub fn li_client_login<R: RngCore + ?Sized>(
    card: &LiCard,
    pw: &[u8],
    biometric: &[u8],
    oracle: &mut dyn ServerOracle,
    rng: &mut R,
) -> Result<LiUserSession, OracleError> {
    let (login, mut session) = li_login_start(card, pw, biometric, rng).map_err(OracleError::Rejected)?;
    let reply = oracle.submit(login.encode())?.ok_or(OracleError::NoResponse)?;
    let challenge = LiChallengeMsg::decode(&reply).map_err(|e| OracleError::Rejected(e.into()))?;
    let response = li_user_finish(&mut session, &challenge).map_err(OracleError::Rejected)?;
    match oracle.submit(response.encode())? {
        None => Ok(session),
        Some(_) => Err(OracleError::Rejected(Rejection::Malformed)),
    }
}

fn setup_and_register(p: &Participants, seed: u64) -> Result<(Scenario, LiServer), ScenarioError> {
    let mut scenario = Scenario::new(seed);
    scenario.add_party(&p.user)?;
    scenario.add_party(&p.server)?;
    let mut server = LiServer::new(li_setup(scenario.rng()));
    let reg = LiRegistration {
        id: p.user.clone(),
        password: p.password.clone(),
        biometric: p.biometric.clone(),
    };
    scenario.send(&p.user, &p.server, reg.encode())?;
    let env = scenario.expect_envelope(&p.server)?;
    let reg = LiRegistration::decode(&env.payload)?;
    let card = li_register(&mut server.state, &reg.id, &reg.password, &reg.biometric)
        .map_err(|r| ScenarioError::Config(format!("registration rejected: {r}")))?;
    scenario.issue_card(&p.user, SmartCardContents::Li(card))?;
    Ok((scenario, server))
}

/// Honest login. `biometric` overrides the registered template, to model a
/// failed scan.
pub fn run_honest_with(p: &Participants, seed: u64, biometric: &[u8]) -> Result<HonestReport, ScenarioError> {
    let (mut scenario, mut server) = setup_and_register(p, seed)?;
    let card = match scenario.card(&p.user)? {
        SmartCardContents::Li(c) => c.clone(),
        _ => return Err(ScenarioError::Config("user holds no li card".into())),
    };
    let mut user_rng = scenario.fork_rng();
    let result = {
        let mut oracle = NetworkOracle::new(&mut scenario, p.user.clone(), p.server.clone(), |env, _, rng| {
            server.handle(env, rng)
        });
        li_client_login(&card, &p.password, biometric, &mut oracle, &mut user_rng)
    };
    let server_accepted = server
        .session(&p.user)
        .is_some_and(|s| s.phase == ServerPhase::Accepted);
    Ok(HonestReport {
        protocol: ProtocolId::Li,
        accepted: result.as_ref().is_ok_and(|s| s.accepted) && server_accepted,
        rejection: result.err().and_then(oracle_rejection),
        user_key: None,
        server_key: None,
        transcript: scenario.transcript().clone(),
    })
}

pub fn run_honest(p: &Participants, seed: u64) -> Result<HonestReport, ScenarioError> {
    run_honest_with(p, seed, &p.biometric.clone())
}

pub fn run_attack(p: &Participants, dictionary: &Dictionary, seed: u64) -> Result<AttackReport, ScenarioError> {
    let (mut scenario, mut server) = setup_and_register(p, seed)?;
    scenario.add_party(&p.attacker)?;
    let stolen = match scenario.extract_card(&p.user)? {
        SmartCardContents::Li(c) => c,
        _ => return Err(ScenarioError::Config("victim holds no li card".into())),
    };
    let before = scenario.transcript().envelope_count();
    let mut attacker_rng = scenario.fork_rng();
    let outcome = {
        let mut oracle = NetworkOracle::new(&mut scenario, p.attacker.clone(), p.server.clone(), |env, _, rng| {
            server.handle(env, rng)
        });
        attack_li_offline_guess(&stolen, dictionary, &mut oracle, &mut attacker_rng)
            .map_err(|e| ScenarioError::Config(format!("online phase failed: {e}")))?
    };
    let online_messages = scenario.transcript().envelope_count() - before;
    Ok(AttackReport {
        protocol: ProtocolId::Li,
        outcome: AttackOutcome::Guess(outcome),
        online_messages,
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

    const BIO: &[u8] = b"minutiae:12,44,87,91";

    fn world(seed: u64) -> (LiServerState, LiCard, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut server = li_setup(&mut rng);
        let card = li_register(&mut server, &PartyId::new("C").unwrap(), b"sunshine7", BIO).unwrap();
        (server, card, rng)
    }

    #[test]
    fn card_layout() {
        let (server, card, _) = world(1);
        assert_eq!(card.f_c, hash(&[BIO]));
        assert_eq!(
            xor(&card.e_c, &password_mask(b"sunshine7", &card.f_c).unwrap()),
            identity_key(&card.id, server.secret())
        );
        let mut s2 = server.clone();
        assert_eq!(li_register(&mut s2, &card.id, b"x", BIO), Err(Rejection::DuplicateId));
    }

    #[test]
    fn nonces_round_trip() {
        let (server, card, mut rng) = world(2);
        let (login, mut us) = li_login_start(&card, b"sunshine7", BIO, &mut rng).unwrap();
        let (challenge, mut ss) = li_server_respond(&server, &login, &mut rng).unwrap();
        assert_eq!(ss.m4, us.r_c);
        assert_eq!(challenge.m6, hash(&[login.m2.as_bytes(), us.r_c.as_bytes()]));
        assert_eq!(xor(&challenge.m5, &us.m1), ss.r_s);
        let response = li_user_finish(&mut us, &challenge).unwrap();
        li_server_accept(&mut ss, &response).unwrap();
        let (_, us2) = li_login_start(&card, b"sunshine7", BIO, &mut rng).unwrap();
        assert_ne!(us.r_c, us2.r_c);
    }

    #[test]
    fn rejections() {
        let (server, card, mut rng) = world(3);
        assert_eq!(
            li_login_start(&card, b"sunshine7", b"other finger", &mut rng).unwrap_err(),
            Rejection::BiometricMismatch
        );
        let stranger = LiLoginMsg {
            id: PartyId::new("Z").unwrap(),
            m2: Digest::ZERO,
        };
        assert_eq!(
            li_server_respond(&server, &stranger, &mut rng).unwrap_err(),
            Rejection::UnknownId
        );

        let (login, us) = li_login_start(&card, b"sunshine7", BIO, &mut rng).unwrap();
        let (challenge, ss) = li_server_respond(&server, &login, &mut rng).unwrap();
        let bad_m6 = LiChallengeMsg {
            m6: challenge.m6.flip_bit(2),
            ..challenge.clone()
        };
        assert_eq!(
            li_user_finish(&mut us.clone(), &bad_m6),
            Err(Rejection::BadAuthenticator)
        );

        // A tampered M_5 passes the user's check but yields an M_8 the server refuses.
        let bad_m5 = LiChallengeMsg {
            m5: challenge.m5.flip_bit(2),
            ..challenge.clone()
        };
        let response = li_user_finish(&mut us.clone(), &bad_m5).unwrap();
        assert_eq!(
            li_server_accept(&mut ss.clone(), &response),
            Err(Rejection::BadAuthenticator)
        );

        let good = li_user_finish(&mut us.clone(), &challenge).unwrap();
        let flipped = LiResponseMsg {
            m8: good.m8.flip_bit(0),
        };
        assert_eq!(
            li_server_accept(&mut ss.clone(), &flipped),
            Err(Rejection::BadAuthenticator)
        );

        // M_8 from this session replayed into a fresh one.
        let (login2, _) = li_login_start(&card, b"sunshine7", BIO, &mut rng).unwrap();
        let (_, mut ss2) = li_server_respond(&server, &login2, &mut rng).unwrap();
        assert_eq!(li_server_accept(&mut ss2, &good), Err(Rejection::BadAuthenticator));
    }

    #[test]
    fn server_answers_arbitrary_m2() {
        let (server, card, mut rng) = world(4);
        let m_e = Digest::random(&mut rng);
        let (challenge, ss) = li_server_respond(
            &server,
            &LiLoginMsg {
                id: card.id.clone(),
                m2: m_e,
            },
            &mut rng,
        )
        .unwrap();
        let m4 = xor(&xor(&m_e, &card.e_c), &password_mask(b"sunshine7", &card.f_c).unwrap());
        assert_eq!(m4, ss.m4);
        assert_eq!(hash(&[m_e.as_bytes(), m4.as_bytes()]), challenge.m6);
    }
}
