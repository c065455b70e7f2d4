//! Dictionaries, the shared guessing loop, and the server oracle that online
//! attack phases talk to.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::crypto::DIGEST_LEN;
use crate::proto::Rejection;
use crate::simnet::{ClockTime, DeliveryOutcome, Envelope, EventKind, NetError, PartyId, Scenario};

const DEMO_DICTIONARY: &str = include_str!("../fixtures/dictionaries/demo.txt");

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("line {line}: candidate is {len} bytes, longer than {DIGEST_LEN}")]
    EntryTooLong { line: usize, len: usize },
    #[error("dictionary is not valid UTF-8")]
    NotUtf8,
    #[error("reading dictionary: {0}")]
    Io(#[from] std::io::Error),
}

/// Ordered candidate passwords. Order matters: `guesses_tried` counts from 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dictionary {
    entries: Vec<Vec<u8>>,
}

impl Dictionary {
    pub fn new(entries: Vec<Vec<u8>>) -> Result<Self, DictionaryError> {
        for (i, e) in entries.iter().enumerate() {
            if e.len() > DIGEST_LEN {
                return Err(DictionaryError::EntryTooLong {
                    line: i + 1,
                    len: e.len(),
                });
            }
        }
        Ok(Dictionary { entries })
    }

    /// One candidate per line; `\r\n` endings and blank lines are tolerated.
    pub fn parse(text: &str) -> Result<Self, DictionaryError> {
        let entries = text
            .lines()
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .filter(|l| !l.is_empty())
            .map(|l| l.as_bytes().to_vec())
            .collect();
        Dictionary::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DictionaryError> {
        let raw = std::fs::read(path)?;
        let text = String::from_utf8(raw).map_err(|_| DictionaryError::NotUtf8)?;
        Dictionary::parse(&text)
    }

    /// The 1000-entry dictionary that ships with the crate.
    pub fn builtin_demo() -> Self {
        Dictionary::parse(DEMO_DICTIONARY).expect("bundled dictionary is valid")
    }

    /// `size` distinct random printable candidates. When `planted` is given it
    /// occupies a uniformly random index, returned alongside.
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R, size: usize, planted: Option<&[u8]>) -> (Self, Option<usize>) {
        const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789!@#$";
        let mut seen: HashSet<Vec<u8>> = planted.iter().map(|p| p.to_vec()).collect();
        let fill = size - usize::from(planted.is_some() && size > 0);
        let mut entries = Vec::with_capacity(size);
        while entries.len() < fill {
            let len = rng.gen_range(6..=14);
            let cand: Vec<u8> = (0..len)
                .map(|_| *ALPHABET.choose(rng).expect("non-empty alphabet"))
                .collect();
            if seen.insert(cand.clone()) {
                entries.push(cand);
            }
        }
        let index = match planted {
            Some(p) if size > 0 => {
                let at = rng.gen_range(0..size);
                entries.insert(at, p.to_vec());
                Some(at)
            }
            _ => None,
        };
        (Dictionary { entries }, index)
    }

    pub fn entries(&self) -> &[Vec<u8>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, candidate: &[u8]) -> bool {
        self.entries.iter().any(|e| e == candidate)
    }

    pub fn without(&self, candidate: &[u8]) -> Dictionary {
        Dictionary {
            entries: self
                .entries
                .iter()
                .filter(|e| e.as_slice() != candidate)
                .cloned()
                .collect(),
        }
    }
}

/// Result of a dictionary attack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuessOutcome {
    Found {
        password: Vec<u8>,
        guesses_tried: usize,
        login_requests_sent: usize,
    },
    NotFound {
        guesses_tried: usize,
        login_requests_sent: usize,
    },
}

impl GuessOutcome {
    pub fn password(&self) -> Option<&[u8]> {
        match self {
            GuessOutcome::Found { password, .. } => Some(password),
            GuessOutcome::NotFound { .. } => None,
        }
    }

    pub fn guesses_tried(&self) -> usize {
        match self {
            GuessOutcome::Found { guesses_tried, .. } | GuessOutcome::NotFound { guesses_tried, .. } => *guesses_tried,
        }
    }

    pub fn login_requests_sent(&self) -> usize {
        match self {
            GuessOutcome::Found {
                login_requests_sent, ..
            }
            | GuessOutcome::NotFound {
                login_requests_sent, ..
            } => *login_requests_sent,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, GuessOutcome::Found { .. })
    }
}

impl fmt::Display for GuessOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuessOutcome::Found {
                password,
                guesses_tried,
                login_requests_sent,
            } => write!(
                f,
                "found password={} guesses_tried={} login_requests_sent={}",
                String::from_utf8_lossy(password),
                guesses_tried,
                login_requests_sent
            ),
            GuessOutcome::NotFound {
                guesses_tried,
                login_requests_sent,
            } => write!(
                f,
                "not_found guesses_tried={guesses_tried} login_requests_sent={login_requests_sent}"
            ),
        }
    }
}

/// Walks the dictionary in order and stops at the first candidate accepted by
/// `matches`.
pub fn offline_search(
    dictionary: &Dictionary,
    login_requests_sent: usize,
    mut matches: impl FnMut(&[u8]) -> bool,
) -> GuessOutcome {
    for (i, candidate) in dictionary.entries().iter().enumerate() {
        if matches(candidate) {
            return GuessOutcome::Found {
                password: candidate.clone(),
                guesses_tried: i + 1,
                login_requests_sent,
            };
        }
    }
    GuessOutcome::NotFound {
        guesses_tried: dictionary.len(),
        login_requests_sent,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("server rejected the request: {0}")]
    Rejected(Rejection),
    #[error("no response reached the client")]
    NoResponse,
    #[error(transparent)]
    Net(#[from] NetError),
}

/// The server as seen by an attacker: submit a payload, maybe get a reply.
/// `Ok(None)` means the server consumed the message without answering.
pub trait ServerOracle {
    fn submit(&mut self, request: Vec<u8>) -> Result<Option<Vec<u8>>, OracleError>;

    fn now(&self) -> ClockTime;
}

/// Server-side handler: receives the delivered envelope, the current time and
/// the scenario RNG.
pub type Handler<'h> = dyn FnMut(&Envelope, ClockTime, &mut ChaCha20Rng) -> Result<Option<Vec<u8>>, Rejection> + 'h;

/// [`ServerOracle`] that routes every exchange through a [`Scenario`], so the
/// attacker's traffic lands in the transcript.
pub struct NetworkOracle<'a, 'h> {
    scenario: &'a mut Scenario,
    client: PartyId,
    server: PartyId,
    handler: Box<Handler<'h>>,
}

impl<'a, 'h> NetworkOracle<'a, 'h> {
    pub fn new(
        scenario: &'a mut Scenario,
        client: PartyId,
        server: PartyId,
        handler: impl FnMut(&Envelope, ClockTime, &mut ChaCha20Rng) -> Result<Option<Vec<u8>>, Rejection> + 'h,
    ) -> Self {
        NetworkOracle {
            scenario,
            client,
            server,
            handler: Box::new(handler),
        }
    }
}

impl ServerOracle for NetworkOracle<'_, '_> {
    fn submit(&mut self, request: Vec<u8>) -> Result<Option<Vec<u8>>, OracleError> {
        if self.scenario.send(&self.client, &self.server, request)? != DeliveryOutcome::Delivered {
            return Err(OracleError::NoResponse);
        }
        let envelope = self.scenario.expect_envelope(&self.server)?;
        let now = self.scenario.now();
        match (self.handler)(&envelope, now, self.scenario.rng()) {
            Err(rejection) => {
                self.scenario
                    .note(&self.server, EventKind::Rejected(rejection.to_string()));
                Err(OracleError::Rejected(rejection))
            }
            Ok(None) => {
                self.scenario.note(&self.server, EventKind::Accepted);
                Ok(None)
            }
            Ok(Some(reply)) => {
                if self.scenario.send(&self.server, &self.client, reply)? != DeliveryOutcome::Delivered {
                    return Err(OracleError::NoResponse);
                }
                Ok(Some(self.scenario.expect_envelope(&self.client)?.payload))
            }
        }
    }

    fn now(&self) -> ClockTime {
        self.scenario.now()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn parse_dictionary_file_format() {
        let d = Dictionary::parse("alpha\r\nbeta\n\ngamma").unwrap();
        assert_eq!(d.entries(), &[b"alpha".to_vec(), b"beta".to_vec(), b"gamma".to_vec()]);
        assert_eq!(Dictionary::parse("x\n").unwrap().len(), 1);
        assert!(matches!(
            Dictionary::parse(&"z".repeat(33)),
            Err(DictionaryError::EntryTooLong { line: 1, len: 33 })
        ));
    }

    #[test]
    fn demo_dictionary_is_1000_distinct_entries() {
        let d = Dictionary::builtin_demo();
        assert_eq!(d.len(), 1000);
        let distinct: HashSet<_> = d.entries().iter().collect();
        assert_eq!(distinct.len(), 1000);
    }

    #[test]
    fn generated_dictionary_plants_password_once() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (d, idx) = Dictionary::generate(&mut rng, 1000, Some(b"hunter2"));
        assert_eq!(d.len(), 1000);
        let idx = idx.unwrap();
        assert_eq!(d.entries()[idx], b"hunter2");
        assert_eq!(d.entries().iter().filter(|e| *e == b"hunter2").count(), 1);
        let distinct: HashSet<_> = d.entries().iter().collect();
        assert_eq!(distinct.len(), 1000);
        let (plain, none) = Dictionary::generate(&mut rng, 10, None);
        assert_eq!((plain.len(), none), (10, None));
    }

    #[test]
    fn offline_search_counts_from_one() {
        let d = Dictionary::parse("a\nb\nc").unwrap();
        let found = offline_search(&d, 0, |c| c == b"b");
        assert_eq!(
            found,
            GuessOutcome::Found {
                password: b"b".to_vec(),
                guesses_tried: 2,
                login_requests_sent: 0
            }
        );
        let missing = offline_search(&d, 1, |_| false);
        assert_eq!(missing.guesses_tried(), 3);
        assert_eq!(missing.login_requests_sent(), 1);
        assert!(!missing.is_found());
    }
}
