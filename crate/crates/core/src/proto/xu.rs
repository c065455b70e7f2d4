//! Timestamped challenge-response with smart cards (Xu–Zhu–Feng), its
//! cleartext-password registration, and the insider impersonation attack.
//!
//! The card stores `B = H(ID)^x + H(PW) mod p`. The server recomputes
//! `B_s = W^x` from the login's `W` alone, so any registered user who can form
//! `H(ID_u)^x` from their own card authenticates under any identity they
//! claim.
//!
//! The login strips `H(PW)` from `B` by subtraction mod `p`, the inverse of
//! registration's `+`. The insider works on base `H(ID_u)`, the only identity
//! it can raise to `x`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rand::RngCore;

use crate::crypto::{
    hash, mod_hash_exponent, mod_hash_to_group, mod_pow, modulus_p, CryptoError, Digest, ModGroupElement, Scalar,
};
use crate::guessing::{NetworkOracle, OracleError, ServerOracle};
use crate::proto::{
    AttackOutcome, AttackReport, HonestReport, ImpersonationResult, Participants, ProtocolId, Rejection, ScenarioError,
    SmartCardContents,
};
use crate::simnet::{ClockTime, Envelope, EventKind, PartyId, Scenario};
use crate::wire::{Reader, WireMessage, Writer};

/// Default acceptance window for timestamps, in ticks.
pub const DEFAULT_DELTA_T: u64 = 5;

#[derive(Clone, Debug)]
pub struct XuServerState {
    x: Scalar,
    delta_t: u64,
    registered: BTreeSet<PartyId>,
}

impl XuServerState {
    pub fn delta_t(&self) -> u64 {
        self.delta_t
    }

    pub fn secret(&self) -> &Scalar {
        &self.x
    }

    pub fn is_registered(&self, id: &PartyId) -> bool {
        self.registered.contains(id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XuCard {
    pub id: PartyId,
    pub b: BigUint,
}

/// `{ID_c, PW_c}`: the password travels in the clear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XuRegistration {
    pub id: PartyId,
    pub password: Vec<u8>,
}

impl WireMessage for XuRegistration {
    const TAG: u8 = 0x30;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG).party(&self.id).bytes(&self.password).finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = XuRegistration {
            id: r.party()?,
            password: r.bytes()?.to_vec(),
        };
        r.finish()?;
        Ok(msg)
    }
}

/// `{ID_c, C_l, W, T}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XuLoginMsg {
    pub id: PartyId,
    pub c_l: Digest,
    pub w: ModGroupElement,
    pub t: ClockTime,
}

impl WireMessage for XuLoginMsg {
    const TAG: u8 = 0x31;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG)
            .party(&self.id)
            .digest(&self.c_l)
            .modp(&self.w)
            .time(self.t)
            .finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = XuLoginMsg {
            id: r.party()?,
            c_l: r.digest()?,
            w: r.modp()?,
            t: r.time()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

/// `{ID_c, C_s, M, T_s}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XuServerMsg {
    pub id: PartyId,
    pub c_s: Digest,
    pub m: ModGroupElement,
    pub t_s: ClockTime,
}

impl WireMessage for XuServerMsg {
    const TAG: u8 = 0x32;

    fn encode(&self) -> Vec<u8> {
        Writer::new(Self::TAG)
            .party(&self.id)
            .digest(&self.c_s)
            .modp(&self.m)
            .time(self.t_s)
            .finish()
    }

    fn decode(payload: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(payload, Self::TAG)?;
        let msg = XuServerMsg {
            id: r.party()?,
            c_s: r.digest()?,
            m: r.modp()?,
            t_s: r.time()?,
        };
        r.finish()?;
        Ok(msg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XuRole {
    User,
    Server,
    Insider,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XuPhase {
    SentLogin,
    SentResponse,
    Done,
}

#[derive(Clone, Debug)]
pub struct XuSession {
    pub role: XuRole,
    /// `v` for the user, `m` for the server, `r` for the insider.
    pub exponent: Scalar,
    /// Identity the session is about (the claimed one, for the insider).
    pub id: PartyId,
    pub w: ModGroupElement,
    /// `B_c` on the client side, `B_s` on the server side.
    pub shared: ModGroupElement,
    pub sk: Option<Digest>,
    pub phase: XuPhase,
}

/// `H(PW)` read as a big-endian integer, reduced mod `p`.
pub fn password_integer(pw: &[u8]) -> BigUint {
    hash(&[pw]).to_integer() % modulus_p()
}

/// `(B − H(PW)) mod p`, which equals `H(ID)^x` for the right password.
pub fn strip_password(card: &XuCard, pw: &[u8]) -> BigUint {
    let p = modulus_p();
    (&card.b + p - password_integer(pw)) % p
}

fn residue(value: BigUint) -> ModGroupElement {
    // Zero only if the password term cancels B exactly.
    ModGroupElement::from_residue(value).unwrap_or_else(|_| ModGroupElement::one())
}

pub fn login_authenticator(t: ClockTime, b_c: &ModGroupElement, w: &ModGroupElement, id: &PartyId) -> Digest {
    hash(&[&t.ticks().to_be_bytes(), &b_c.to_bytes(), &w.to_bytes(), id.as_bytes()])
}

pub fn server_authenticator(m: &ModGroupElement, b_s: &ModGroupElement, t_s: ClockTime, id: &PartyId) -> Digest {
    hash(&[
        &m.to_bytes(),
        &b_s.to_bytes(),
        &t_s.ticks().to_be_bytes(),
        id.as_bytes(),
    ])
}

/// `H(ID, M, W, K)` with `K = M^v` (client) or `W^m` (server).
pub fn session_key(id: &PartyId, m: &ModGroupElement, w: &ModGroupElement, k: &ModGroupElement) -> Digest {
    hash(&[id.as_bytes(), &m.to_bytes(), &w.to_bytes(), &k.to_bytes()])
}

pub fn xu_setup<R: RngCore + ?Sized>(delta_t: u64, rng: &mut R) -> XuServerState {
    XuServerState {
        x: Scalar::random_nonzero(rng),
        delta_t,
        registered: BTreeSet::new(),
    }
}

pub fn xu_register(server: &mut XuServerState, id: &PartyId, pw: &[u8]) -> Result<XuCard, Rejection> {
    if server.registered.contains(id) {
        return Err(Rejection::DuplicateId);
    }
    let h_id_x = mod_pow(&mod_hash_to_group(id.as_bytes()), &server.x);
    let b = (h_id_x.value() + password_integer(pw)) % modulus_p();
    server.registered.insert(id.clone());
    Ok(XuCard { id: id.clone(), b })
}

pub fn xu_login<R: RngCore + ?Sized>(card: &XuCard, pw: &[u8], now: ClockTime, rng: &mut R) -> (XuLoginMsg, XuSession) {
    let v = Scalar::random_nonzero(rng);
    let b_c = mod_pow(&residue(strip_password(card, pw)), &v);
    let w = mod_pow(&mod_hash_to_group(card.id.as_bytes()), &v);
    let c_l = login_authenticator(now, &b_c, &w, &card.id);
    (
        XuLoginMsg {
            id: card.id.clone(),
            c_l,
            w: w.clone(),
            t: now,
        },
        XuSession {
            role: XuRole::User,
            exponent: v,
            id: card.id.clone(),
            w,
            shared: b_c,
            sk: None,
            phase: XuPhase::SentLogin,
        },
    )
}

pub fn xu_server_authenticate<R: RngCore + ?Sized>(
    server: &XuServerState,
    msg: &XuLoginMsg,
    now: ClockTime,
    rng: &mut R,
) -> Result<(XuServerMsg, XuSession), Rejection> {
    if !server.registered.contains(&msg.id) {
        return Err(Rejection::UnknownId);
    }
    if now.since(msg.t) >= server.delta_t {
        return Err(Rejection::StaleTimestamp);
    }
    let b_s = mod_pow(&msg.w, &server.x);
    if login_authenticator(msg.t, &b_s, &msg.w, &msg.id) != msg.c_l {
        return Err(Rejection::BadAuthenticator);
    }
    let m_exp = Scalar::random_nonzero(rng);
    let m = mod_pow(&mod_hash_to_group(msg.id.as_bytes()), &m_exp);
    let c_s = server_authenticator(&m, &b_s, now, &msg.id);
    let sk = session_key(&msg.id, &m, &msg.w, &mod_pow(&msg.w, &m_exp));
    Ok((
        XuServerMsg {
            id: msg.id.clone(),
            c_s,
            m,
            t_s: now,
        },
        XuSession {
            role: XuRole::Server,
            exponent: m_exp,
            id: msg.id.clone(),
            w: msg.w.clone(),
            shared: b_s,
            sk: Some(sk),
            phase: XuPhase::SentResponse,
        },
    ))
}

pub fn xu_user_finish(
    session: &mut XuSession,
    msg: &XuServerMsg,
    now: ClockTime,
    delta_t: u64,
) -> Result<Digest, Rejection> {
    if session.phase != XuPhase::SentLogin {
        return Err(Rejection::WrongPhase);
    }
    if msg.id != session.id {
        return Err(Rejection::IdMismatch);
    }
    if now.since(msg.t_s) >= delta_t {
        return Err(Rejection::StaleTimestamp);
    }
    if server_authenticator(&msg.m, &session.shared, msg.t_s, &msg.id) != msg.c_s {
        return Err(Rejection::BadAuthenticator);
    }
    let sk = session_key(&msg.id, &msg.m, &session.w, &mod_pow(&msg.m, &session.exponent));
    session.sk = Some(sk);
    session.phase = XuPhase::Done;
    Ok(sk)
}

/// Insider impersonation: a registered user `U` logs in as `target`.
///
/// `W = H(ID_u)^r` and `B_u = (B_u_card − H(PW_u))^r = H(ID_u)^{xr}`, so the
/// server's `W^x` matches and it authenticates `U` as `target`. The server then
/// keys the session with `W^m`. `U` only sees `M = H(target)^m`; it recovers
/// `W^m = M^{r·e_u/e_t}` using the public hash exponents `e` of
/// [`mod_hash_exponent`].
pub fn attack_xu_insider<R: RngCore + ?Sized>(
    own_card: &XuCard,
    own_pw: &[u8],
    target: &PartyId,
    oracle: &mut dyn ServerOracle,
    rng: &mut R,
) -> Result<ImpersonationResult, OracleError> {
    let r = Scalar::random_nonzero(rng);
    let d = residue(strip_password(own_card, own_pw));
    let w = mod_pow(&mod_hash_to_group(own_card.id.as_bytes()), &r);
    let b_u = mod_pow(&d, &r);
    let t_u = oracle.now();
    let login = XuLoginMsg {
        id: target.clone(),
        c_l: login_authenticator(t_u, &b_u, &w, target),
        w: w.clone(),
        t: t_u,
    };
    let reply = match oracle.submit(login.encode()) {
        Ok(Some(reply)) => reply,
        Ok(None) => return Err(OracleError::NoResponse),
        Err(OracleError::Rejected(rejection)) => {
            return Ok(ImpersonationResult {
                accepted: false,
                sk: None,
                rejection: Some(rejection),
            })
        }
        Err(e) => return Err(e),
    };
    let msg = XuServerMsg::decode(&reply).map_err(|e| OracleError::Rejected(e.into()))?;
    if msg.id != *target || server_authenticator(&msg.m, &b_u, msg.t_s, target) != msg.c_s {
        return Err(OracleError::Rejected(Rejection::BadAuthenticator));
    }
    let rebase = mod_hash_exponent(own_card.id.as_bytes()).mul(
        &mod_hash_exponent(target.as_bytes())
            .invert()
            .expect("hash exponents are nonzero"),
    );
    let k = mod_pow(&msg.m, &r.mul(&rebase));
    Ok(ImpersonationResult {
        accepted: true,
        sk: Some(session_key(target, &msg.m, &w, &k)),
        rejection: None,
    })
}

/// Server endpoint keeping the latest session per peer.
#[derive(Debug)]
pub struct XuServer {
    pub state: XuServerState,
    sessions: BTreeMap<PartyId, XuSession>,
}

impl XuServer {
    pub fn new(state: XuServerState) -> Self {
        XuServer {
            state,
            sessions: BTreeMap::new(),
        }
    }

    pub fn session(&self, peer: &PartyId) -> Option<&XuSession> {
        self.sessions.get(peer)
    }

    pub fn handle<R: RngCore + ?Sized>(
        &mut self,
        env: &Envelope,
        now: ClockTime,
        rng: &mut R,
    ) -> Result<Option<Vec<u8>>, Rejection> {
        let msg = XuLoginMsg::decode(&env.payload)?;
        let (reply, session) = xu_server_authenticate(&self.state, &msg, now, rng)?;
        self.sessions.insert(env.from.clone(), session);
        Ok(Some(reply.encode()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct XuOptions {
    pub delta_t: u64,
    /// Ticks the clock advances while each message is in transit.
    pub delivery_delay: u64,
}

impl Default for XuOptions {
    fn default() -> Self {
        XuOptions {
            delta_t: DEFAULT_DELTA_T,
            delivery_delay: 1,
        }
    }
}

fn register_over_network(
    scenario: &mut Scenario,
    server: &mut XuServer,
    user: &PartyId,
    server_id: &PartyId,
    pw: &[u8],
) -> Result<(), ScenarioError> {
    let reg = XuRegistration {
        id: user.clone(),
        password: pw.to_vec(),
    };
    scenario.send(user, server_id, reg.encode())?;
    let env = scenario.expect_envelope(server_id)?;
    let reg = XuRegistration::decode(&env.payload)?;
    let card = xu_register(&mut server.state, &reg.id, &reg.password)
        .map_err(|r| ScenarioError::Config(format!("registration rejected: {r}")))?;
    scenario.issue_card(user, SmartCardContents::Xu(card))?;
    Ok(())
}

fn xu_card(scenario: &Scenario, owner: &PartyId) -> Result<XuCard, ScenarioError> {
    match scenario.card(owner)? {
        SmartCardContents::Xu(c) => Ok(c.clone()),
        other => Err(ScenarioError::Config(format!(
            "expected a xu card, found {}",
            other.protocol()
        ))),
    }
}

pub fn run_honest(p: &Participants, seed: u64, opts: XuOptions) -> Result<HonestReport, ScenarioError> {
    let mut scenario = Scenario::new(seed);
    scenario.add_party(&p.user)?;
    scenario.add_party(&p.server)?;
    let mut server = XuServer::new(xu_setup(opts.delta_t, scenario.rng()));
    register_over_network(&mut scenario, &mut server, &p.user, &p.server, &p.password)?;
    let card = xu_card(&scenario, &p.user)?;

    let report = |scenario: &Scenario, rejection: Option<Rejection>, user_key, server_key| HonestReport {
        protocol: ProtocolId::Xu,
        accepted: rejection.is_none(),
        rejection,
        user_key,
        server_key,
        transcript: scenario.transcript().clone(),
    };

    let now = scenario.now();
    let (login, mut session) = xu_login(&card, &p.password, now, scenario.rng());
    scenario.send(&p.user, &p.server, login.encode())?;
    scenario.advance_clock(opts.delivery_delay);
    let env = scenario.expect_envelope(&p.server)?;
    let now = scenario.now();
    let reply = match server.handle(&env, now, &mut scenario.fork_rng()) {
        Ok(Some(reply)) => reply,
        Ok(None) => return Err(ScenarioError::Config("server sent no response".into())),
        Err(r) => {
            scenario.note(&p.server, EventKind::Rejected(r.to_string()));
            return Ok(report(&scenario, Some(r), None, None));
        }
    };
    let server_key = server.session(&p.user).and_then(|s| s.sk);
    scenario.send(&p.server, &p.user, reply)?;
    scenario.advance_clock(opts.delivery_delay);
    let env = scenario.expect_envelope(&p.user)?;
    let msg = XuServerMsg::decode(&env.payload)?;
    match xu_user_finish(&mut session, &msg, scenario.now(), opts.delta_t) {
        Ok(sk) => {
            scenario.note(&p.user, EventKind::Accepted);
            Ok(report(&scenario, None, Some(sk), server_key))
        }
        Err(r) => {
            scenario.note(&p.user, EventKind::Rejected(r.to_string()));
            Ok(report(&scenario, Some(r), None, server_key))
        }
    }
}

/// `p.attacker` is the insider; its password comes from `p.insider` when set.
pub fn run_attack(p: &Participants, seed: u64, opts: XuOptions) -> Result<AttackReport, ScenarioError> {
    let (insider, insider_pw) = p
        .insider
        .clone()
        .unwrap_or_else(|| (p.attacker.clone(), b"insider-password".to_vec()));
    let mut scenario = Scenario::new(seed);
    scenario.ensure_parties([&p.user, &p.server, &insider]);
    let mut server = XuServer::new(xu_setup(opts.delta_t, scenario.rng()));
    register_over_network(&mut scenario, &mut server, &p.user, &p.server, &p.password)?;
    register_over_network(&mut scenario, &mut server, &insider, &p.server, &insider_pw)?;
    let own_card = xu_card(&scenario, &insider)?;

    let before = scenario.transcript().envelope_count();
    let mut insider_rng = scenario.fork_rng();
    let result = {
        let mut oracle = NetworkOracle::new(&mut scenario, insider.clone(), p.server.clone(), |env, now, rng| {
            server.handle(env, now, rng)
        });
        attack_xu_insider(&own_card, &insider_pw, &p.user, &mut oracle, &mut insider_rng)
            .map_err(|e| ScenarioError::Config(format!("insider exchange failed: {e}")))?
    };
    let online_messages = scenario.transcript().envelope_count() - before;
    let server_key = server.session(&insider).and_then(|s| s.sk);
    Ok(AttackReport {
        protocol: ProtocolId::Xu,
        outcome: AttackOutcome::Impersonation(result),
        online_messages,
        server_key,
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

    fn id(s: &str) -> PartyId {
        PartyId::new(s).unwrap()
    }

    #[test]
    fn registration_hides_exactly_the_password_term() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut server = xu_setup(5, &mut rng);
        let card = xu_register(&mut server, &id("C"), b"falcon88").unwrap();
        let expected = mod_pow(&mod_hash_to_group(b"C"), server.secret());
        assert_eq!(&strip_password(&card, b"falcon88"), expected.value());
        assert_ne!(&strip_password(&card, b"falcon89"), expected.value());
        assert_eq!(xu_register(&mut server, &id("C"), b"x"), Err(Rejection::DuplicateId));
    }

    #[test]
    fn honest_keys_agree_and_logins_are_fresh() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut server = xu_setup(5, &mut rng);
        let card = xu_register(&mut server, &id("C"), b"pw").unwrap();
        let t0 = ClockTime::new(10);
        let (login, mut us) = xu_login(&card, b"pw", t0, &mut rng);
        let (login2, us2) = xu_login(&card, b"pw", t0, &mut rng);
        assert_ne!(us.exponent, us2.exponent);
        assert_ne!(login.w, login2.w);
        let (reply, ss) = xu_server_authenticate(&server, &login, ClockTime::new(11), &mut rng).unwrap();
        let sk = xu_user_finish(&mut us, &reply, ClockTime::new(12), 5).unwrap();
        assert_eq!(Some(sk), ss.sk);
        assert_eq!(mod_pow(&reply.m, &us.exponent), mod_pow(&login.w, &ss.exponent));
    }

    #[test]
    fn server_rejections_are_distinct() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut server = xu_setup(5, &mut rng);
        let card = xu_register(&mut server, &id("C"), b"pw").unwrap();
        let t0 = ClockTime::new(0);

        let (login, _) = xu_login(&card, b"pw", t0, &mut rng);
        assert_eq!(
            xu_server_authenticate(&server, &login, ClockTime::new(5), &mut rng).unwrap_err(),
            Rejection::StaleTimestamp
        );
        assert!(xu_server_authenticate(&server, &login, ClockTime::new(4), &mut rng).is_ok());

        let mut flipped = login.clone();
        flipped.c_l = flipped.c_l.flip_bit(7);
        assert_eq!(
            xu_server_authenticate(&server, &flipped, t0, &mut rng).unwrap_err(),
            Rejection::BadAuthenticator
        );

        let (wrong_pw, _) = xu_login(&card, b"PW", t0, &mut rng);
        assert_eq!(
            xu_server_authenticate(&server, &wrong_pw, t0, &mut rng).unwrap_err(),
            Rejection::BadAuthenticator
        );

        let stranger = XuCard {
            id: id("Z"),
            b: card.b.clone(),
        };
        let (unknown, _) = xu_login(&stranger, b"pw", t0, &mut rng);
        assert_eq!(
            xu_server_authenticate(&server, &unknown, t0, &mut rng).unwrap_err(),
            Rejection::UnknownId
        );
    }

    #[test]
    fn user_rejects_tampered_or_stale_reply() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut server = xu_setup(5, &mut rng);
        let card = xu_register(&mut server, &id("C"), b"pw").unwrap();
        let (login, us) = xu_login(&card, b"pw", ClockTime::new(0), &mut rng);
        let (reply, _) = xu_server_authenticate(&server, &login, ClockTime::new(1), &mut rng).unwrap();

        let mut tampered = reply.clone();
        tampered.c_s = tampered.c_s.flip_bit(0);
        assert_eq!(
            xu_user_finish(&mut us.clone(), &tampered, ClockTime::new(2), 5),
            Err(Rejection::BadAuthenticator)
        );
        assert_eq!(
            xu_user_finish(&mut us.clone(), &reply, ClockTime::new(6), 5),
            Err(Rejection::StaleTimestamp)
        );
        let mut other_id = reply.clone();
        other_id.id = id("D");
        assert_eq!(
            xu_user_finish(&mut us.clone(), &other_id, ClockTime::new(2), 5),
            Err(Rejection::IdMismatch)
        );
    }

    #[test]
    fn naive_insider_key_does_not_match_server() {
        // Deriving M^r directly, as if W had base H(ID_c), gives a different key.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut server = xu_setup(5, &mut rng);
        xu_register(&mut server, &id("C"), b"c-pw").unwrap();
        let own = xu_register(&mut server, &id("U"), b"u-pw").unwrap();
        let r = Scalar::random_nonzero(&mut rng);
        let w = mod_pow(&mod_hash_to_group(b"U"), &r);
        let b_u = mod_pow(&residue(strip_password(&own, b"u-pw")), &r);
        let login = XuLoginMsg {
            id: id("C"),
            c_l: login_authenticator(ClockTime::new(0), &b_u, &w, &id("C")),
            w: w.clone(),
            t: ClockTime::new(0),
        };
        let (reply, ss) = xu_server_authenticate(&server, &login, ClockTime::new(0), &mut rng).unwrap();
        let naive = session_key(&id("C"), &reply.m, &w, &mod_pow(&reply.m, &r));
        assert_ne!(Some(naive), ss.sk);
    }

    #[test]
    fn wire_round_trip() {
        let reg = XuRegistration {
            id: id("C"),
            password: b"falcon88".to_vec(),
        };
        let bytes = reg.encode();
        assert_eq!(XuRegistration::decode(&bytes).unwrap(), reg);
        assert!(bytes.windows(8).any(|w| w == b"falcon88"));
    }
}
