//! Tagged fixed-field binary layout shared by every protocol message: one
//! message-type byte, then fixed-width fields in declaration order.

use crate::crypto::{CryptoError, Digest, G1Element, ModGroupElement, SealedBox, DIGEST_LEN};
use crate::simnet::{ClockTime, PartyId};

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(tag: u8) -> Self {
        Writer { buf: vec![tag] }
    }

    pub fn digest(mut self, d: &Digest) -> Self {
        self.buf.extend_from_slice(d.as_bytes());
        self
    }

    pub fn party(mut self, id: &PartyId) -> Self {
        self.buf.extend_from_slice(id.padded().as_bytes());
        self
    }

    pub fn g1(mut self, e: &G1Element) -> Self {
        self.buf.extend_from_slice(&e.to_bytes());
        self
    }

    pub fn modp(mut self, e: &ModGroupElement) -> Self {
        self.buf.extend_from_slice(&e.to_bytes());
        self
    }

    pub fn time(mut self, t: ClockTime) -> Self {
        self.buf.extend_from_slice(&t.ticks().to_be_bytes());
        self
    }

    /// u32 length prefix followed by the bytes.
    pub fn bytes(mut self, b: &[u8]) -> Self {
        self.buf.extend_from_slice(&(b.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(b);
        self
    }

    pub fn sealed(self, s: &SealedBox) -> Self {
        self.bytes(&s.to_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    rest: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(payload: &'a [u8], tag: u8) -> Result<Self, CryptoError> {
        match payload.split_first() {
            Some((&t, rest)) if t == tag => Ok(Reader { rest }),
            Some(_) => Err(CryptoError::Malformed("unexpected message tag")),
            None => Err(CryptoError::Malformed("empty payload")),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CryptoError> {
        if self.rest.len() < n {
            return Err(CryptoError::Malformed("truncated message"));
        }
        let (head, tail) = self.rest.split_at(n);
        self.rest = tail;
        Ok(head)
    }

    pub fn digest(&mut self) -> Result<Digest, CryptoError> {
        Digest::from_slice(self.take(DIGEST_LEN)?)
    }

    pub fn party(&mut self) -> Result<PartyId, CryptoError> {
        PartyId::from_padded(&self.digest()?).map_err(|_| CryptoError::Malformed("invalid party id"))
    }

    pub fn g1(&mut self) -> Result<G1Element, CryptoError> {
        G1Element::from_bytes(self.take(32)?)
    }

    pub fn modp(&mut self) -> Result<ModGroupElement, CryptoError> {
        ModGroupElement::from_bytes(self.take(32)?)
    }

    pub fn time(&mut self) -> Result<ClockTime, CryptoError> {
        let raw: [u8; 8] = self.take(8)?.try_into().unwrap();
        Ok(ClockTime::new(u64::from_be_bytes(raw)))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CryptoError> {
        let raw: [u8; 4] = self.take(4)?.try_into().unwrap();
        let len = u32::from_be_bytes(raw) as usize;
        self.take(len)
    }

    pub fn sealed(&mut self) -> Result<SealedBox, CryptoError> {
        SealedBox::from_bytes(self.bytes()?)
    }

    pub fn finish(self) -> Result<(), CryptoError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(CryptoError::Malformed("trailing bytes"))
        }
    }
}

/// A value with a wire encoding.
pub trait WireMessage: Sized {
    const TAG: u8;

    fn encode(&self) -> Vec<u8>;

    fn decode(payload: &[u8]) -> Result<Self, CryptoError>;
}

/// Strips zero padding from a password field.
pub(crate) fn unpad(d: &Digest) -> Vec<u8> {
    let bytes = d.as_bytes();
    let end = bytes.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    bytes[..end].to_vec()
}
