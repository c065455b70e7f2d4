//! Pairing-based password-authenticated key agreement with smart cards
//! (Juang–Nien), and the lost-card offline guessing attack against it.
//!
//! The card holds a random `b` and `b_i = E_x[H(PW, b), ID_i, H(H(PW, b), ID_i)]`.
//! A login sends `{aP, E_Ka[b_i]}` where `Ka = H(aP, P_s, Q, e(P_s, aQ))`, which
//! anyone holding the card can produce. The server's reply
//! `Auth_s = H(Ka, H(PW, b), r, sk)` then lets the card holder test password
//! candidates offline: everything but `H(PW, b)` is known.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;

use crate::crypto::{
    g1_base_mul, g1_scale, hash, map_to_point, pairing, sym_decrypt, sym_encrypt, CryptoError, Digest, G1Element,
    G2Element, Scalar, SealedBox, SymKey, DIGEST_LEN,
};
use crate::guessing::{offline_search, Dictionary, GuessOutcome, NetworkOracle, OracleError, ServerOracle};
use crate::proto::{
    oracle_rejection, AttackOutcome, AttackReport, HonestReport, Participants, ProtocolId, Rejection, ScenarioError,
    SmartCardContents,
};
use crate::simnet::{Envelope, PartyId, Scenario};
use crate::wire::{Reader, WireMessage, Writer};

/// Server long-term state. Holds no password material.
#[derive(Clone, Debug)]
pub struct JuangServerState {
    s: Scalar,
    x: SymKey,
    p_s: G1Element,
    id_s: PartyId,
    registered: BTreeSet<PartyId>,
}

impl JuangServerState {
    pub fn public_key(&self) -> &G1Element {
        &self.p_s
    }

    pub fn id(&self) -> &PartyId {
        &self.id_s
    }

    pub fn is_registered(&self, id: &PartyId) -> bool {
        self.registered.contains(id)
    }

    pub fn pairing_secret(&self) -> &Scalar {
        &self.s
    }

    pub fn sealing_key(&self) -> &SymKey {
        &self.x
    }

    /// Everything the server stores, serialized.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.s.to_bytes());
        out.extend_from_slice(self.x.as_bytes());
        out.extend_from_slice(&self.p_s.to_bytes());
        out.extend_from_slice(self.id_s.padded().as_bytes());
        for id in &self.registered {
            out.extend_from_slice(id.padded().as_bytes());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JuangCard {
    pub b: Digest,
    pub b_i: SealedBox,
}

/// `{ID_i, H(PW_i, b)}` sent at registration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JuangRegistration {
    pub id_i: PartyId,
    pub hpwb: Digest,
}

impl WireMessage for JuangRegistration {
    const TAG: u8 = 0x10;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG).party(&self.id_i).digest(&self.hpwb).finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = JuangRegistration {
            id_i: r.party()?,
            hpwb: r.digest()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

/// `{aP, α}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JuangLoginMsg {
    pub a_p: G1Element,
    pub alpha: SealedBox,
}

impl WireMessage for JuangLoginMsg {
    const TAG: u8 = 0x11;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG).g1(&self.a_p).sealed(&self.alpha).finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = JuangLoginMsg {
            a_p: r.g1()?,
            alpha: r.sealed()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

/// `{Auth_s, r}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JuangAuthSMsg {
    pub auth_s: Digest,
    pub r: Digest,
}

impl WireMessage for JuangAuthSMsg {
    const TAG: u8 = 0x12;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG).digest(&self.auth_s).digest(&self.r).finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = JuangAuthSMsg {
            auth_s: r.digest()?,
            r: r.digest()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

/// `{Auth_i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JuangAuthIMsg {
    pub auth_i: Digest,
}

impl WireMessage for JuangAuthIMsg {
    const TAG: u8 = 0x13;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG).digest(&self.auth_i).finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = JuangAuthIMsg { auth_i: r.digest()? };
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
pub struct JuangUserSession {
    pub a: Scalar,
    pub ka: Digest,
    pub id_i: PartyId,
    pub id_s: PartyId,
    pub phase: UserPhase,
    pub sk: Option<Digest>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServerPhase {
    SentAuth,
    Accepted,
    Rejected,
}

#[derive(Clone, Debug)]
pub struct JuangServerSession {
    pub ka: Digest,
    pub r: Digest,
    pub sk: Digest,
    pub hpwb: Digest,
    pub id_i: PartyId,
    pub phase: ServerPhase,
}

/// `H(PW, b)`.
pub fn password_digest(pw: &[u8], b: &Digest) -> Digest {
    hash(&[pw, b.as_bytes()])
}

/// `Ka = H(aP, P_s, Q, e)` for the pairing value `e` either side computes.
pub fn derive_ka(a_p: &G1Element, p_s: &G1Element, q: &G1Element, e: &G2Element) -> Digest {
    hash(&[&a_p.to_bytes(), &p_s.to_bytes(), &q.to_bytes(), &e.to_bytes()])
}

/// `sk = H(Ka, r, ID_i, ID_s)`.
pub fn session_key(ka: &Digest, r: &Digest, id_i: &PartyId, id_s: &PartyId) -> Digest {
    hash(&[ka.as_bytes(), r.as_bytes(), id_i.as_bytes(), id_s.as_bytes()])
}

/// `H(Ka, H(PW, b), r, sk)`; `Auth_i` uses `r + 1`.
pub fn authenticator(ka: &Digest, hpwb: &Digest, r: &Digest, sk: &Digest) -> Digest {
    hash(&[ka.as_bytes(), hpwb.as_bytes(), r.as_bytes(), sk.as_bytes()])
}

fn inner_tag(hpwb: &Digest, id_i: &PartyId) -> Digest {
    hash(&[hpwb.as_bytes(), id_i.as_bytes()])
}

pub fn juang_setup<R: RngCore + ?Sized>(id_s: PartyId, rng: &mut R) -> JuangServerState {
    let s = Scalar::random_nonzero(rng);
    let x = SymKey::random(rng);
    JuangServerState {
        p_s: g1_base_mul(&s),
        s,
        x,
        id_s,
        registered: BTreeSet::new(),
    }
}

pub fn juang_register<R: RngCore + ?Sized>(
    server: &mut JuangServerState,
    id_i: &PartyId,
    hpwb: &Digest,
    b: &Digest,
    rng: &mut R,
) -> Result<JuangCard, Rejection> {
    if server.registered.contains(id_i) {
        return Err(Rejection::DuplicateId);
    }
    let mut plaintext = Vec::with_capacity(3 * DIGEST_LEN);
    plaintext.extend_from_slice(hpwb.as_bytes());
    plaintext.extend_from_slice(id_i.padded().as_bytes());
    plaintext.extend_from_slice(inner_tag(hpwb, id_i).as_bytes());
    let b_i = sym_encrypt(&server.x, &plaintext, rng);
    server.registered.insert(id_i.clone());
    Ok(JuangCard { b: *b, b_i })
}

/// Opens `b_i` under `x` and checks the inner tag.
pub fn open_card_secret(x: &SymKey, b_i: &SealedBox) -> Result<(Digest, PartyId), Rejection> {
    let plain = sym_decrypt(x, b_i)?;
    if plain.len() != 3 * DIGEST_LEN {
        return Err(Rejection::Malformed);
    }
    let hpwb = Digest::from_slice(&plain[..DIGEST_LEN])?;
    let id_i = PartyId::from_padded(&Digest::from_slice(&plain[DIGEST_LEN..2 * DIGEST_LEN])?)
        .map_err(|_| Rejection::Malformed)?;
    let tag = Digest::from_slice(&plain[2 * DIGEST_LEN..])?;
    if tag != inner_tag(&hpwb, &id_i) {
        return Err(Rejection::Integrity);
    }
    Ok((hpwb, id_i))
}

/// Client side of the login. The password is not needed until
/// [`juang_user_finish`].
pub fn juang_login_start<R: RngCore + ?Sized>(
    card: &JuangCard,
    id_i: &PartyId,
    id_s: &PartyId,
    p_s: &G1Element,
    rng: &mut R,
) -> (JuangLoginMsg, JuangUserSession) {
    let a = Scalar::random_nonzero(rng);
    let q = map_to_point(id_s.as_bytes());
    let a_p = g1_base_mul(&a);
    let ka = derive_ka(&a_p, p_s, &q, &pairing(p_s, &g1_scale(&q, &a)));
    let alpha = sym_encrypt(&SymKey::from(ka), &card.b_i.to_bytes(), rng);
    (
        JuangLoginMsg { a_p, alpha },
        JuangUserSession {
            a,
            ka,
            id_i: id_i.clone(),
            id_s: id_s.clone(),
            phase: UserPhase::SentLogin,
            sk: None,
        },
    )
}

pub fn juang_server_respond<R: RngCore + ?Sized>(
    server: &JuangServerState,
    msg: &JuangLoginMsg,
    rng: &mut R,
) -> Result<(JuangAuthSMsg, JuangServerSession), Rejection> {
    let q = map_to_point(server.id_s.as_bytes());
    let ka = derive_ka(&msg.a_p, &server.p_s, &q, &pairing(&msg.a_p, &g1_scale(&q, &server.s)));
    let b_i = SealedBox::from_bytes(&sym_decrypt(&SymKey::from(ka), &msg.alpha)?)?;
    let (hpwb, id_i) = open_card_secret(&server.x, &b_i)?;
    if !server.registered.contains(&id_i) {
        return Err(Rejection::UnknownId);
    }
    let r = Digest::random(rng);
    let sk = session_key(&ka, &r, &id_i, &server.id_s);
    let auth_s = authenticator(&ka, &hpwb, &r, &sk);
    Ok((
        JuangAuthSMsg { auth_s, r },
        JuangServerSession {
            ka,
            r,
            sk,
            hpwb,
            id_i,
            phase: ServerPhase::SentAuth,
        },
    ))
}

pub fn juang_user_finish(
    session: &mut JuangUserSession,
    card: &JuangCard,
    pw: &[u8],
    msg: &JuangAuthSMsg,
) -> Result<(JuangAuthIMsg, Digest), Rejection> {
    if session.phase != UserPhase::SentLogin {
        return Err(Rejection::WrongPhase);
    }
    let hpwb = password_digest(pw, &card.b);
    let sk = session_key(&session.ka, &msg.r, &session.id_i, &session.id_s);
    if authenticator(&session.ka, &hpwb, &msg.r, &sk) != msg.auth_s {
        return Err(Rejection::BadAuthenticator);
    }
    let auth_i = authenticator(&session.ka, &hpwb, &msg.r.increment(), &sk);
    session.phase = UserPhase::Done;
    session.sk = Some(sk);
    Ok((JuangAuthIMsg { auth_i }, sk))
}

pub fn juang_server_accept(session: &mut JuangServerSession, msg: &JuangAuthIMsg) -> Result<(), Rejection> {
    if session.phase != ServerPhase::SentAuth {
        return Err(Rejection::WrongPhase);
    }
    let expected = authenticator(&session.ka, &session.hpwb, &session.r.increment(), &session.sk);
    if expected == msg.auth_i {
        session.phase = ServerPhase::Accepted;
        Ok(())
    } else {
        session.phase = ServerPhase::Rejected;
        Err(Rejection::BadAuthenticator)
    }
}

/// Server endpoint: long-term state plus one session per peer.
#[derive(Debug)]
pub struct JuangServer {
    pub state: JuangServerState,
    sessions: BTreeMap<PartyId, JuangServerSession>,
}

impl JuangServer {
    pub fn new(state: JuangServerState) -> Self {
        JuangServer {
            state,
            sessions: BTreeMap::new(),
        }
    }

    pub fn session(&self, peer: &PartyId) -> Option<&JuangServerSession> {
        self.sessions.get(peer)
    }

    pub fn handle<R: RngCore + ?Sized>(&mut self, env: &Envelope, rng: &mut R) -> Result<Option<Vec<u8>>, Rejection> {
        match env.payload.first() {
            Some(&JuangLoginMsg::TAG) => {
                let msg = JuangLoginMsg::decode(&env.payload)?;
                let (reply, session) = juang_server_respond(&self.state, &msg, rng)?;
                self.sessions.insert(env.from.clone(), session);
                Ok(Some(reply.encode()))
            }
            Some(&JuangAuthIMsg::TAG) => {
                let msg = JuangAuthIMsg::decode(&env.payload)?;
                let session = self.sessions.get_mut(&env.from).ok_or(Rejection::WrongPhase)?;
                juang_server_accept(session, &msg)?;
                Ok(None)
            }
            _ => Err(Rejection::Malformed),
        }
    }
}

/// Full client login through `oracle`: returns the agreed session key once the
/// server has consumed `Auth_i` without complaint.
pub fn juang_client_login<R: RngCore + ?Sized>(
    card: &JuangCard,
    pw: &[u8],
    id_i: &PartyId,
    id_s: &PartyId,
    p_s: &G1Element,
    oracle: &mut dyn ServerOracle,
    rng: &mut R,
) -> Result<Digest, OracleError> {
    let (login, mut session) = juang_login_start(card, id_i, id_s, p_s, rng);
    let reply = oracle.submit(login.encode())?.ok_or(OracleError::NoResponse)?;
    let auth_s = JuangAuthSMsg::decode(&reply).map_err(|e| OracleError::Rejected(e.into()))?;
    let (auth_i, sk) = juang_user_finish(&mut session, card, pw, &auth_s).map_err(OracleError::Rejected)?;
    match oracle.submit(auth_i.encode())? {
        None => Ok(sk),
        Some(_) => Err(OracleError::Rejected(Rejection::Malformed)),
    }
}

/// Lost-card attack: one login with the stolen `b_c`, then offline testing of
/// `H(Kc, H(PW', b), r, sk) == Auth_s`.
pub fn attack_juang_offline_guess<R: RngCore + ?Sized>(
    stolen: &JuangCard,
    id_c: &PartyId,
    id_s: &PartyId,
    p_s: &G1Element,
    dictionary: &Dictionary,
    oracle: &mut dyn ServerOracle,
    rng: &mut R,
) -> Result<GuessOutcome, OracleError> {
    let (login, session) = juang_login_start(stolen, id_c, id_s, p_s, rng);
    let reply = oracle.submit(login.encode())?.ok_or(OracleError::NoResponse)?;
    let auth_s = JuangAuthSMsg::decode(&reply).map_err(|e| OracleError::Rejected(e.into()))?;
    // Kc and sk do not depend on the candidate.
    let sk = session_key(&session.ka, &auth_s.r, id_c, id_s);
    Ok(offline_search(dictionary, 1, |candidate| {
        authenticator(&session.ka, &password_digest(candidate, &stolen.b), &auth_s.r, &sk) == auth_s.auth_s
    }))
}

struct Setup {
    scenario: Scenario,
    server: JuangServer,
}

fn setup_and_register(p: &Participants, seed: u64) -> Result<Setup, ScenarioError> {
    let mut scenario = Scenario::new(seed);
    scenario.add_party(&p.user)?;
    scenario.add_party(&p.server)?;
    let mut server = JuangServer::new(juang_setup(p.server.clone(), scenario.rng()));

    let b = Digest::random(scenario.rng());
    let registration = JuangRegistration {
        id_i: p.user.clone(),
        hpwb: password_digest(&p.password, &b),
    };
    scenario.send(&p.user, &p.server, registration.encode())?;
    let env = scenario.expect_envelope(&p.server)?;
    let reg = JuangRegistration::decode(&env.payload)?;
    let card = juang_register(&mut server.state, &reg.id_i, &reg.hpwb, &b, scenario.rng())
        .map_err(|r| ScenarioError::Config(format!("registration rejected: {r}")))?;
    scenario.issue_card(&p.user, SmartCardContents::Juang(card))?;
    Ok(Setup { scenario, server })
}

fn juang_card(scenario: &Scenario, owner: &PartyId) -> Result<JuangCard, ScenarioError> {
    match scenario.card(owner)? {
        SmartCardContents::Juang(c) => Ok(c.clone()),
        other => Err(ScenarioError::Config(format!(
            "expected a juang card, found {}",
            other.protocol()
        ))),
    }
}

pub fn run_honest(p: &Participants, seed: u64) -> Result<HonestReport, ScenarioError> {
    let Setup {
        mut scenario,
        mut server,
    } = setup_and_register(p, seed)?;
    let card = juang_card(&scenario, &p.user)?;
    let p_s = server.state.public_key().clone();
    let mut user_rng = scenario.fork_rng();
    let result = {
        let mut oracle = NetworkOracle::new(&mut scenario, p.user.clone(), p.server.clone(), |env, _, rng| {
            server.handle(env, rng)
        });
        juang_client_login(&card, &p.password, &p.user, &p.server, &p_s, &mut oracle, &mut user_rng)
    };
    let server_key = server
        .session(&p.user)
        .filter(|s| s.phase == ServerPhase::Accepted)
        .map(|s| s.sk);
    Ok(HonestReport {
        protocol: ProtocolId::Juang,
        accepted: result.is_ok() && server_key.is_some(),
        rejection: result.clone().err().and_then(oracle_rejection),
        user_key: result.ok(),
        server_key,
        transcript: scenario.transcript().clone(),
    })
}

pub fn run_attack(p: &Participants, dictionary: &Dictionary, seed: u64) -> Result<AttackReport, ScenarioError> {
    let Setup {
        mut scenario,
        mut server,
    } = setup_and_register(p, seed)?;
    scenario.add_party(&p.attacker)?;
    let stolen = match scenario.extract_card(&p.user)? {
        SmartCardContents::Juang(c) => c,
        _ => return Err(ScenarioError::Config("victim holds no juang card".into())),
    };
    let p_s = server.state.public_key().clone();
    let before = scenario.transcript().envelope_count();
    let mut attacker_rng = scenario.fork_rng();
    let outcome = {
        let mut oracle = NetworkOracle::new(&mut scenario, p.attacker.clone(), p.server.clone(), |env, _, rng| {
            server.handle(env, rng)
        });
        attack_juang_offline_guess(
            &stolen,
            &p.user,
            &p.server,
            &p_s,
            dictionary,
            &mut oracle,
            &mut attacker_rng,
        )
        .map_err(|e| ScenarioError::Config(format!("online phase failed: {e}")))?
    };
    let online_messages = scenario.transcript().envelope_count() - before;

    let mut masquerade_accepted = None;
    let mut server_key = None;
    if let Some(pw) = outcome.password() {
        let result = {
            let mut oracle = NetworkOracle::new(&mut scenario, p.attacker.clone(), p.server.clone(), |env, _, rng| {
                server.handle(env, rng)
            });
            juang_client_login(&stolen, pw, &p.user, &p.server, &p_s, &mut oracle, &mut attacker_rng)
        };
        masquerade_accepted = Some(result.is_ok());
        server_key = server
            .session(&p.attacker)
            .filter(|s| s.phase == ServerPhase::Accepted)
            .map(|s| s.sk);
    }
    Ok(AttackReport {
        protocol: ProtocolId::Juang,
        outcome: AttackOutcome::Guess(outcome),
        online_messages,
        server_key,
        masquerade_accepted,
        victim_password: p.password.clone(),
        transcript: scenario.transcript().clone(),
    })
}
