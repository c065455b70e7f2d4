//! Deterministic single-threaded network simulation.
//!
//! A [`Scenario`] owns the parties, a logical clock, a seeded RNG, the smart
//! cards issued to parties, and an append-only [`Transcript`]. Honest parties
//! exchange [`Envelope`]s through [`Scenario::send`] and pick them up from
//! their inbox; the adversary policy decides whether an envelope reaches the
//! recipient or is captured. The adversary itself is driven by ordinary code
//! calling [`Scenario::take_captured`], [`Scenario::inject`] and
//! [`Scenario::extract_card`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{pad_to_digest, Digest, DIGEST_LEN};
use crate::proto::SmartCardContents;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("invalid party id: {0}")]
    InvalidPartyId(&'static str),
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("party {0} is already registered")]
    DuplicateParty(PartyId),
    #[error("party {0} holds no smart card")]
    NoCard(PartyId),
    #[error("no envelope waiting for {0}")]
    EmptyInbox(PartyId),
}

/// Printable, whitespace-free identity of at most [`DIGEST_LEN`] bytes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartyId(Vec<u8>);

impl PartyId {
    pub fn new(name: impl AsRef<[u8]>) -> Result<Self, NetError> {
        let name = name.as_ref();
        if name.is_empty() {
            return Err(NetError::InvalidPartyId("empty"));
        }
        if name.len() > DIGEST_LEN {
            return Err(NetError::InvalidPartyId("longer than 32 bytes"));
        }
        if !name.iter().all(|b| b.is_ascii_graphic()) {
            return Err(NetError::InvalidPartyId("must be printable ASCII without spaces"));
        }
        Ok(PartyId(name.to_vec()))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// The identity right-padded with zeros to a digest.
    pub fn padded(&self) -> Digest {
        pad_to_digest(&self.0).expect("party ids never exceed the digest width")
    }

    pub fn from_padded(d: &Digest) -> Result<Self, NetError> {
        PartyId::new(crate::wire::unpad(d))
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Constructor guarantees printable ASCII.
        f.write_str(std::str::from_utf8(&self.0).unwrap_or("?"))
    }
}

impl fmt::Debug for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PartyId({self})")
    }
}

/// Logical time in ticks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime(u64);

impl ClockTime {
    pub const fn new(ticks: u64) -> Self {
        ClockTime(ticks)
    }

    pub fn ticks(self) -> u64 {
        self.0
    }

    /// Elapsed ticks since `earlier`, zero if `earlier` lies in the future.
    pub fn since(self, earlier: ClockTime) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub from: PartyId,
    pub to: PartyId,
    pub payload: Vec<u8>,
    pub sent_at: ClockTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    Delivered,
    Intercepted,
    Injected,
    Dropped,
}

impl Disposition {
    pub fn label(self) -> &'static str {
        match self {
            Disposition::Delivered => "delivered",
            Disposition::Intercepted => "intercepted",
            Disposition::Injected => "injected",
            Disposition::Dropped => "dropped",
        }
    }
}

/// Matches envelopes by sender and/or recipient; empty filter matches all.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartyFilter {
    pub from: Option<PartyId>,
    pub to: Option<PartyId>,
}

impl PartyFilter {
    pub fn any() -> Self {
        PartyFilter::default()
    }

    pub fn to(party: &PartyId) -> Self {
        PartyFilter {
            from: None,
            to: Some(party.clone()),
        }
    }

    pub fn from(party: &PartyId) -> Self {
        PartyFilter {
            from: Some(party.clone()),
            to: None,
        }
    }

    pub fn matches(&self, env: &Envelope) -> bool {
        self.from.as_ref().is_none_or(|f| *f == env.from) && self.to.as_ref().is_none_or(|t| *t == env.to)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum AdversaryPolicy {
    /// Deliver every envelope unmodified.
    #[default]
    Passthrough,
    /// Deliver every envelope and keep a copy for the adversary.
    Eavesdrop,
    /// Matching envelopes go to the adversary instead of the recipient.
    Intercept(PartyFilter),
    /// Matching envelopes are discarded.
    Drop(PartyFilter),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered,
    Intercepted,
    Dropped,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    CardIssued,
    CardExtracted,
    Accepted,
    Rejected(String),
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::CardIssued => f.write_str("card_issued"),
            EventKind::CardExtracted => f.write_str("card_extracted"),
            EventKind::Accepted => f.write_str("accepted"),
            EventKind::Rejected(reason) => write!(f, "rejected:{reason}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Message {
        envelope: Envelope,
        disposition: Disposition,
    },
    Event {
        at: ClockTime,
        party: PartyId,
        kind: EventKind,
    },
}

/// Line-delimited structured form of a [`Record`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLine {
    pub t: u64,
    pub kind: String,
    pub from: Option<String>,
    pub to: Option<String>,
    pub party: Option<String>,
    pub disposition: Option<Disposition>,
    pub event: Option<String>,
    pub payload: Option<String>,
}

/// Append-only log of everything that happened in a scenario.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<Record>,
}

impl Transcript {
    fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn envelopes(&self) -> impl Iterator<Item = (&Envelope, Disposition)> {
        self.records.iter().filter_map(|r| match r {
            Record::Message { envelope, disposition } => Some((envelope, *disposition)),
            Record::Event { .. } => None,
        })
    }

    pub fn envelope_count(&self) -> usize {
        self.envelopes().count()
    }

    pub fn events(&self) -> impl Iterator<Item = (&PartyId, &EventKind)> {
        self.records.iter().filter_map(|r| match r {
            Record::Event { party, kind, .. } => Some((party, kind)),
            Record::Message { .. } => None,
        })
    }

    /// Envelopes sent from `from` to `to`, any disposition.
    pub fn count_between(&self, from: &PartyId, to: &PartyId) -> usize {
        self.envelopes().filter(|(e, _)| e.from == *from && e.to == *to).count()
    }

    pub fn to_lines(&self) -> Vec<RecordLine> {
        self.records
            .iter()
            .map(|r| match r {
                Record::Message { envelope, disposition } => RecordLine {
                    t: envelope.sent_at.ticks(),
                    kind: "envelope".into(),
                    from: Some(envelope.from.to_string()),
                    to: Some(envelope.to.to_string()),
                    party: None,
                    disposition: Some(*disposition),
                    event: None,
                    payload: Some(hex::encode(&envelope.payload)),
                },
                Record::Event { at, party, kind } => RecordLine {
                    t: at.ticks(),
                    kind: "event".into(),
                    from: None,
                    to: None,
                    party: Some(party.to_string()),
                    disposition: None,
                    event: Some(kind.to_string()),
                    payload: None,
                },
            })
            .collect()
    }

    /// One record per line: `t=<ticks> <from>-><to> <disposition> <hex payload>`
    /// for envelopes and `t=<ticks> event <kind> party=<id>` for events.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            match r {
                Record::Message { envelope, disposition } => out.push_str(&format!(
                    "t={} {}->{} {} {}\n",
                    envelope.sent_at.ticks(),
                    envelope.from,
                    envelope.to,
                    disposition.label(),
                    hex::encode(&envelope.payload)
                )),
                Record::Event { at, party, kind } => {
                    out.push_str(&format!("t={} event {} party={}\n", at.ticks(), kind, party))
                }
            }
        }
        out
    }

    /// JSON object per line, see [`RecordLine`].
    pub fn render_structured(&self) -> String {
        self.to_lines()
            .iter()
            .map(|l| serde_json::to_string(l).expect("record lines serialize") + "\n")
            .collect()
    }
}

pub struct Scenario {
    seed: u64,
    rng: ChaCha20Rng,
    clock: ClockTime,
    parties: BTreeSet<PartyId>,
    inboxes: BTreeMap<PartyId, VecDeque<Envelope>>,
    captured: VecDeque<Envelope>,
    observed: Vec<Envelope>,
    cards: BTreeMap<PartyId, SmartCardContents>,
    policy: AdversaryPolicy,
    transcript: Transcript,
}

impl Scenario {
    pub fn new(seed: u64) -> Self {
        Scenario {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
            clock: ClockTime::default(),
            parties: BTreeSet::new(),
            inboxes: BTreeMap::new(),
            captured: VecDeque::new(),
            observed: Vec::new(),
            cards: BTreeMap::new(),
            policy: AdversaryPolicy::Passthrough,
            transcript: Transcript::default(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn add_party(&mut self, id: &PartyId) -> Result<(), NetError> {
        if !self.parties.insert(id.clone()) {
            return Err(NetError::DuplicateParty(id.clone()));
        }
        self.inboxes.insert(id.clone(), VecDeque::new());
        Ok(())
    }

    /// Registers every id, ignoring ones already present.
    pub fn ensure_parties<'a>(&mut self, ids: impl IntoIterator<Item = &'a PartyId>) {
        for id in ids {
            let _ = self.add_party(id);
        }
    }

    fn check_party(&self, id: &PartyId) -> Result<(), NetError> {
        if self.parties.contains(id) {
            Ok(())
        } else {
            Err(NetError::UnknownParty(id.clone()))
        }
    }

    pub fn set_policy(&mut self, policy: AdversaryPolicy) {
        self.policy = policy;
    }

    pub fn policy(&self) -> &AdversaryPolicy {
        &self.policy
    }

    pub fn now(&self) -> ClockTime {
        self.clock
    }

    pub fn advance_clock(&mut self, dt: u64) -> ClockTime {
        self.clock = ClockTime(self.clock.0 + dt);
        self.clock
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    /// A child RNG for a party that must act while the scenario is borrowed.
    pub fn fork_rng(&mut self) -> ChaCha20Rng {
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        ChaCha20Rng::from_seed(seed)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn send(&mut self, from: &PartyId, to: &PartyId, payload: Vec<u8>) -> Result<DeliveryOutcome, NetError> {
        self.check_party(from)?;
        self.check_party(to)?;
        let envelope = Envelope {
            from: from.clone(),
            to: to.clone(),
            payload,
            sent_at: self.clock,
        };
        let (disposition, outcome) = match &self.policy {
            AdversaryPolicy::Intercept(f) if f.matches(&envelope) => {
                (Disposition::Intercepted, DeliveryOutcome::Intercepted)
            }
            AdversaryPolicy::Drop(f) if f.matches(&envelope) => (Disposition::Dropped, DeliveryOutcome::Dropped),
            _ => (Disposition::Delivered, DeliveryOutcome::Delivered),
        };
        match outcome {
            DeliveryOutcome::Delivered => {
                if self.policy == AdversaryPolicy::Eavesdrop {
                    self.observed.push(envelope.clone());
                }
                self.inbox_mut(to).push_back(envelope.clone());
            }
            DeliveryOutcome::Intercepted => self.captured.push_back(envelope.clone()),
            DeliveryOutcome::Dropped => {}
        }
        self.transcript.push(Record::Message { envelope, disposition });
        Ok(outcome)
    }

    fn inbox_mut(&mut self, id: &PartyId) -> &mut VecDeque<Envelope> {
        self.inboxes.get_mut(id).expect("inbox exists for every party")
    }

    /// Next envelope delivered to `party`, if any.
    pub fn receive(&mut self, party: &PartyId) -> Option<Envelope> {
        self.inboxes.get_mut(party).and_then(VecDeque::pop_front)
    }

    pub fn expect_envelope(&mut self, party: &PartyId) -> Result<Envelope, NetError> {
        self.receive(party).ok_or_else(|| NetError::EmptyInbox(party.clone()))
    }

    pub fn pending(&self, party: &PartyId) -> usize {
        self.inboxes.get(party).map_or(0, VecDeque::len)
    }

    /// Oldest envelope captured by an intercept policy.
    pub fn take_captured(&mut self) -> Option<Envelope> {
        self.captured.pop_front()
    }

    /// Envelopes copied under the eavesdrop policy.
    pub fn observed(&self) -> &[Envelope] {
        &self.observed
    }

    /// Delivers an adversary-chosen envelope, stamped with the current time.
    pub fn inject(&mut self, mut envelope: Envelope) -> Result<(), NetError> {
        self.check_party(&envelope.from)?;
        self.check_party(&envelope.to)?;
        envelope.sent_at = self.clock;
        self.inbox_mut(&envelope.to).push_back(envelope.clone());
        self.transcript.push(Record::Message {
            envelope,
            disposition: Disposition::Injected,
        });
        Ok(())
    }

    pub fn note(&mut self, party: &PartyId, kind: EventKind) {
        self.transcript.push(Record::Event {
            at: self.clock,
            party: party.clone(),
            kind,
        });
    }

    pub fn issue_card(&mut self, owner: &PartyId, card: SmartCardContents) -> Result<(), NetError> {
        self.check_party(owner)?;
        self.cards.insert(owner.clone(), card);
        self.note(owner, EventKind::CardIssued);
        Ok(())
    }

    /// The card as held by its owner, for honest use.
    pub fn card(&self, owner: &PartyId) -> Result<&SmartCardContents, NetError> {
        self.cards.get(owner).ok_or_else(|| NetError::NoCard(owner.clone()))
    }

    /// Lost-card capability: copies the victim's card contents out to the
    /// adversary and logs the extraction.
    pub fn extract_card(&mut self, victim: &PartyId) -> Result<SmartCardContents, NetError> {
        let card = self
            .cards
            .get(victim)
            .cloned()
            .ok_or_else(|| NetError::NoCard(victim.clone()))?;
        self.note(victim, EventKind::CardExtracted);
        Ok(card)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn id(s: &str) -> PartyId {
        PartyId::new(s).unwrap()
    }

    fn two_party(seed: u64) -> (Scenario, PartyId, PartyId) {
        let mut sc = Scenario::new(seed);
        let (c, s) = (id("C"), id("S"));
        sc.add_party(&c).unwrap();
        sc.add_party(&s).unwrap();
        (sc, c, s)
    }

    fn nonce_script(seed: u64) -> String {
        let (mut sc, c, s) = two_party(seed);
        for _ in 0..3 {
            let nonce: [u8; 8] = sc.rng().gen();
            sc.send(&c, &s, nonce.to_vec()).unwrap();
            sc.advance_clock(1);
        }
        sc.transcript().render_text()
    }

    #[test]
    fn party_id_rules() {
        assert!(PartyId::new("").is_err());
        assert!(PartyId::new([b'a'; 33]).is_err());
        assert!(PartyId::new("has space").is_err());
        let c = id("C");
        assert_eq!(PartyId::from_padded(&c.padded()).unwrap(), c);
    }

    #[test]
    fn fresh_scenario() {
        let sc = Scenario::new(0);
        assert_eq!(sc.now(), ClockTime::new(0));
        assert_eq!(sc.transcript().records().len(), 0);
    }

    #[test]
    fn same_seed_same_transcript() {
        assert_eq!(nonce_script(7), nonce_script(7));
        assert_ne!(nonce_script(7), nonce_script(8));
    }

    #[test]
    fn passthrough_delivers() {
        let (mut sc, c, s) = two_party(0);
        assert_eq!(sc.send(&c, &s, vec![1]).unwrap(), DeliveryOutcome::Delivered);
        assert_eq!(sc.receive(&s).unwrap().payload, vec![1]);
        assert_eq!(sc.transcript().envelopes().next().unwrap().1, Disposition::Delivered);
    }

    #[test]
    fn intercept_then_inject() {
        let (mut sc, c, s) = two_party(0);
        sc.set_policy(AdversaryPolicy::Intercept(PartyFilter::any()));
        assert_eq!(sc.send(&c, &s, vec![9]).unwrap(), DeliveryOutcome::Intercepted);
        assert_eq!(sc.pending(&s), 0);
        let captured = sc.take_captured().unwrap();
        sc.set_policy(AdversaryPolicy::Passthrough);
        sc.advance_clock(2);
        sc.inject(captured).unwrap();
        let got = sc.receive(&s).unwrap();
        assert_eq!(got.payload, vec![9]);
        assert_eq!(got.sent_at, ClockTime::new(2));
        assert!(sc.receive(&s).is_none());
        let disp: Vec<_> = sc.transcript().envelopes().map(|(_, d)| d).collect();
        assert_eq!(disp, vec![Disposition::Intercepted, Disposition::Injected]);
    }

    #[test]
    fn drop_and_eavesdrop() {
        let (mut sc, c, s) = two_party(0);
        sc.set_policy(AdversaryPolicy::Drop(PartyFilter::from(&c)));
        assert_eq!(sc.send(&c, &s, vec![1]).unwrap(), DeliveryOutcome::Dropped);
        assert_eq!(sc.send(&s, &c, vec![2]).unwrap(), DeliveryOutcome::Delivered);
        sc.set_policy(AdversaryPolicy::Eavesdrop);
        sc.send(&c, &s, vec![3]).unwrap();
        assert_eq!(sc.observed().len(), 1);
        assert_eq!(sc.pending(&s), 1);
        assert_eq!(sc.transcript().envelope_count(), 3);
    }

    #[test]
    fn unknown_recipient_is_a_config_error() {
        let (mut sc, c, _) = two_party(0);
        assert_eq!(sc.send(&c, &id("X"), vec![]), Err(NetError::UnknownParty(id("X"))));
        assert_eq!(sc.transcript().envelope_count(), 0);
    }

    #[test]
    fn clock_advances() {
        let mut sc = Scenario::new(0);
        assert_eq!(sc.advance_clock(0), ClockTime::new(0));
        sc.advance_clock(3);
        assert_eq!(sc.advance_clock(4), ClockTime::new(7));
    }

    #[test]
    fn extract_without_card_fails() {
        let (mut sc, c, _) = two_party(0);
        assert_eq!(sc.extract_card(&c), Err(NetError::NoCard(c.clone())));
    }

    #[test]
    fn structured_lines_parse() {
        let (mut sc, c, s) = two_party(0);
        sc.send(&c, &s, vec![0xab]).unwrap();
        sc.note(&s, EventKind::Rejected("stale_timestamp".into()));
        let text = sc.transcript().render_structured();
        let lines: Vec<RecordLine> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines, sc.transcript().to_lines());
        assert_eq!(lines[0].payload.as_deref(), Some("ab"));
        assert_eq!(
            sc.transcript().render_text(),
            "t=0 C->S delivered ab\nt=0 event rejected:stale_timestamp party=S\n"
        );
    }
}
