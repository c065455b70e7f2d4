//! Simulation-grade primitives shared by every protocol model.
//!
//! The hash is SHA-256 over a length-prefixed tuple encoding. The additive
//! group `G1` and its pairing target `G2` carry their discrete logarithms in
//! the clear, so bilinearity is exact and cheap. The multiplicative group is
//! the order-`q` subgroup of `Z_p^*` for a fixed safe prime `p = 2q + 1`.
//! None of this is meant to be hard to break: the attacks modelled in this
//! crate exploit protocol logic, not algebra.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, BitXor, Mul};
use std::sync::LazyLock;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::RngCore;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Width in bytes of every digest, key, padded identity and padded password.
pub const DIGEST_LEN: usize = 32;

/// Fixed-width big-endian encoding size of scalars and group elements.
pub const ELEMENT_LEN: usize = 32;

const MOD_P_HEX: &str = "c00000000000000000000000000000000000000000000000000000000000a0eb";
const ORDER_Q_HEX: &str = "6000000000000000000000000000000000000000000000000000000000005075";
const GENERATOR_G: u32 = 4;

static MOD_P: LazyLock<BigUint> =
    LazyLock::new(|| BigUint::parse_bytes(MOD_P_HEX.as_bytes(), 16).expect("valid constant"));
static ORDER_Q: LazyLock<BigUint> =
    LazyLock::new(|| BigUint::parse_bytes(ORDER_Q_HEX.as_bytes(), 16).expect("valid constant"));

/// The safe prime `p` defining the multiplicative group.
pub fn modulus_p() -> &'static BigUint {
    &MOD_P
}

/// The prime group order `q`, shared by `G1`, `G2` and the subgroup of `Z_p^*`.
pub fn order_q() -> &'static BigUint {
    &ORDER_Q
}

/// Generator of the order-`q` subgroup of `Z_p^*`.
pub fn generator_g() -> ModGroupElement {
    ModGroupElement {
        value: BigUint::from(GENERATOR_G),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("input of {len} bytes exceeds the {max}-byte limit")]
    TooLong { len: usize, max: usize },
    #[error("integrity check failed")]
    Integrity,
    #[error("malformed encoding: {0}")]
    Malformed(&'static str),
}

thread_local! {
    static HASH_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`hash`] evaluations made on the current thread.
pub fn hash_calls() -> u64 {
    HASH_CALLS.with(Cell::get)
}

pub fn reset_hash_calls() {
    HASH_CALLS.with(|c| c.set(0));
}

/// A fixed 32-byte value: hash outputs, XOR operands, nonces.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0; DIGEST_LEN]);

    pub const fn new(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| CryptoError::Malformed("digest must be 32 bytes"))?;
        Ok(Digest(arr))
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut out = [0u8; DIGEST_LEN];
        rng.fill_bytes(&mut out);
        Digest(out)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    /// Big-endian increment with wraparound.
    pub fn increment(&self) -> Digest {
        let mut out = self.0;
        for byte in out.iter_mut().rev() {
            let (v, carry) = byte.overflowing_add(1);
            *byte = v;
            if !carry {
                break;
            }
        }
        Digest(out)
    }

    /// Big-endian integer interpretation.
    pub fn to_integer(&self) -> BigUint {
        BigUint::from_bytes_be(&self.0)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::Malformed("invalid hex"))?;
        Digest::from_slice(&bytes)
    }

    pub fn flip_bit(&self, bit: usize) -> Digest {
        let mut out = self.0;
        out[(bit / 8) % DIGEST_LEN] ^= 1 << (bit % 8);
        Digest(out)
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl BitXor for Digest {
    type Output = Digest;

    fn bitxor(self, rhs: Digest) -> Digest {
        xor(&self, &rhs)
    }
}

/// Tuple hash: every part is framed with an 8-byte big-endian length before
/// digesting, so the encoding is injective on part lists.
pub fn hash(parts: &[&[u8]]) -> Digest {
    HASH_CALLS.with(|c| c.set(c.get() + 1));
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

pub fn xor(a: &Digest, b: &Digest) -> Digest {
    let mut out = [0u8; DIGEST_LEN];
    for (o, (x, y)) in out.iter_mut().zip(a.0.iter().zip(b.0.iter())) {
        *o = x ^ y;
    }
    Digest(out)
}

/// Right-pads `s` with zero bytes to [`DIGEST_LEN`].
pub fn pad_to_digest(s: &[u8]) -> Result<Digest, CryptoError> {
    if s.len() > DIGEST_LEN {
        return Err(CryptoError::TooLong {
            len: s.len(),
            max: DIGEST_LEN,
        });
    }
    let mut out = [0u8; DIGEST_LEN];
    out[..s.len()].copy_from_slice(s);
    Ok(Digest(out))
}

fn to_fixed_be(value: &BigUint) -> [u8; ELEMENT_LEN] {
    let raw = value.to_bytes_be();
    let mut out = [0u8; ELEMENT_LEN];
    out[ELEMENT_LEN - raw.len()..].copy_from_slice(&raw);
    out
}

/// Integer modulo `q`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn new(value: BigUint) -> Self {
        Scalar(value % order_q())
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar::new(BigUint::from(v))
    }

    pub fn zero() -> Self {
        Scalar(BigUint::zero())
    }

    pub fn one() -> Self {
        Scalar(BigUint::one())
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut rng = RngAdapter(rng);
        Scalar(rng.gen_biguint_below(order_q()))
    }

    pub fn random_nonzero<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Scalar::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    /// Reduces a digest, read big-endian, modulo `q`.
    pub fn from_digest(d: &Digest) -> Self {
        Scalar::new(d.to_integer())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        Scalar::new(&self.0 + &other.0)
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        Scalar::new(&self.0 * &other.0)
    }

    /// Multiplicative inverse modulo the prime `q`; `None` for zero.
    pub fn invert(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        let exp = order_q() - BigUint::from(2u32);
        Some(Scalar(self.0.modpow(&exp, order_q())))
    }

    pub fn to_bytes(&self) -> [u8; ELEMENT_LEN] {
        to_fixed_be(&self.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != ELEMENT_LEN {
            return Err(CryptoError::Malformed("scalar must be 32 bytes"));
        }
        let v = BigUint::from_bytes_be(bytes);
        if &v >= order_q() {
            return Err(CryptoError::Malformed("scalar out of range"));
        }
        Ok(Scalar(v))
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", hex::encode(self.to_bytes()))
    }
}

// num-bigint's RandBigInt needs a sized Rng; this lets callers pass `&mut dyn RngCore`.
struct RngAdapter<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// Element `k·P` of the additive group, stored as its coefficient `k`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct G1Element {
    exponent: Scalar,
}

impl G1Element {
    pub fn identity() -> Self {
        G1Element {
            exponent: Scalar::zero(),
        }
    }

    pub fn generator() -> Self {
        G1Element {
            exponent: Scalar::one(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.exponent.is_zero()
    }

    pub fn to_bytes(&self) -> [u8; ELEMENT_LEN] {
        self.exponent.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        Ok(G1Element {
            exponent: Scalar::from_bytes(bytes)?,
        })
    }
}

impl Add for &G1Element {
    type Output = G1Element;

    fn add(self, rhs: &G1Element) -> G1Element {
        G1Element {
            exponent: self.exponent.add(&rhs.exponent),
        }
    }
}

/// Element `e(P,P)^k` of the pairing target group, stored as `k`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct G2Element {
    exponent: Scalar,
}

impl G2Element {
    pub fn identity() -> Self {
        G2Element {
            exponent: Scalar::zero(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.exponent.is_zero()
    }

    pub fn to_bytes(&self) -> [u8; ELEMENT_LEN] {
        self.exponent.to_bytes()
    }
}

impl Mul for &G2Element {
    type Output = G2Element;

    fn mul(self, rhs: &G2Element) -> G2Element {
        G2Element {
            exponent: self.exponent.add(&rhs.exponent),
        }
    }
}

pub fn g1_base_mul(s: &Scalar) -> G1Element {
    G1Element { exponent: s.clone() }
}

pub fn g1_scale(x: &G1Element, s: &Scalar) -> G1Element {
    G1Element {
        exponent: x.exponent.mul(s),
    }
}

pub fn g2_pow(x: &G2Element, s: &Scalar) -> G2Element {
    G2Element {
        exponent: x.exponent.mul(s),
    }
}

/// Symmetric bilinear map `G1 × G1 → G2`.
pub fn pairing(x: &G1Element, y: &G1Element) -> G2Element {
    G2Element {
        exponent: x.exponent.mul(&y.exponent),
    }
}

fn hash_to_nonzero_scalar(label: &[u8], id: &[u8]) -> Scalar {
    let s = Scalar::from_digest(&hash(&[label, id]));
    if s.is_zero() {
        Scalar::one()
    } else {
        s
    }
}

/// Map-to-point hash into `G1`; never returns the identity.
pub fn map_to_point(id: &[u8]) -> G1Element {
    G1Element {
        exponent: hash_to_nonzero_scalar(b"map2point", id),
    }
}

/// The exponent `e` with `mod_hash_to_group(id) == g^e`. Public by
/// construction: anyone can evaluate it.
pub fn mod_hash_exponent(id: &[u8]) -> Scalar {
    hash_to_nonzero_scalar(b"mod2group", id)
}

/// Hash into the order-`q` subgroup of `Z_p^*`.
pub fn mod_hash_to_group(id: &[u8]) -> ModGroupElement {
    mod_pow(&generator_g(), &mod_hash_exponent(id))
}

/// Residue in `[1, p)`. Values derived from the generator lie in the order-`q`
/// subgroup; see [`ModGroupElement::in_subgroup`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModGroupElement {
    value: BigUint,
}

impl ModGroupElement {
    pub fn one() -> Self {
        ModGroupElement { value: BigUint::one() }
    }

    /// Accepts any residue in `[1, p)`.
    pub fn from_residue(value: BigUint) -> Result<Self, CryptoError> {
        if value.is_zero() || &value >= modulus_p() {
            return Err(CryptoError::Malformed("residue out of range"));
        }
        Ok(ModGroupElement { value })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn in_subgroup(&self) -> bool {
        self.value.modpow(order_q(), modulus_p()).is_one()
    }

    pub fn mul(&self, other: &ModGroupElement) -> ModGroupElement {
        ModGroupElement {
            value: (&self.value * &other.value) % modulus_p(),
        }
    }

    pub fn to_bytes(&self) -> [u8; ELEMENT_LEN] {
        to_fixed_be(&self.value)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != ELEMENT_LEN {
            return Err(CryptoError::Malformed("group element must be 32 bytes"));
        }
        ModGroupElement::from_residue(BigUint::from_bytes_be(bytes))
    }
}

impl fmt::Debug for ModGroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModGroupElement({})", hex::encode(self.to_bytes()))
    }
}

pub fn mod_pow(x: &ModGroupElement, s: &Scalar) -> ModGroupElement {
    ModGroupElement {
        value: x.value.modpow(s.value(), modulus_p()),
    }
}

/// Symmetric key for the sealing cipher.
#[derive(Clone, PartialEq, Eq)]
pub struct SymKey([u8; DIGEST_LEN]);

impl SymKey {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        SymKey(*Digest::random(rng).as_bytes())
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }
}

impl From<Digest> for SymKey {
    fn from(d: Digest) -> Self {
        SymKey(*d.as_bytes())
    }
}

impl fmt::Debug for SymKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymKey(..)")
    }
}

/// Output of [`sym_encrypt`]: nonce, ciphertext body and authentication tag.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SealedBox {
    pub nonce: Digest,
    pub body: Vec<u8>,
    pub tag: Digest,
}

impl SealedBox {
    /// `nonce || u32 body length || body || tag`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * DIGEST_LEN + 4 + self.body.len());
        out.extend_from_slice(self.nonce.as_bytes());
        out.extend_from_slice(&(self.body.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.body);
        out.extend_from_slice(self.tag.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        const MALFORMED: CryptoError = CryptoError::Malformed("truncated sealed box");
        if bytes.len() < 2 * DIGEST_LEN + 4 {
            return Err(MALFORMED);
        }
        let nonce = Digest::from_slice(&bytes[..DIGEST_LEN])?;
        let len_bytes: [u8; 4] = bytes[DIGEST_LEN..DIGEST_LEN + 4].try_into().unwrap();
        let len = u32::from_be_bytes(len_bytes) as usize;
        let rest = &bytes[DIGEST_LEN + 4..];
        if rest.len() != len + DIGEST_LEN {
            return Err(MALFORMED);
        }
        Ok(SealedBox {
            nonce,
            body: rest[..len].to_vec(),
            tag: Digest::from_slice(&rest[len..])?,
        })
    }
}

fn keystream_apply(key: &SymKey, nonce: &Digest, data: &[u8]) -> Vec<u8> {
    data.chunks(DIGEST_LEN)
        .enumerate()
        .flat_map(|(counter, chunk)| {
            let block = hash(&[
                b"keystream",
                key.as_bytes(),
                nonce.as_bytes(),
                &(counter as u64).to_be_bytes(),
            ]);
            chunk
                .iter()
                .zip(block.as_bytes().iter())
                .map(|(a, b)| a ^ b)
                .collect::<Vec<_>>()
        })
        .collect()
}

fn seal_tag(key: &SymKey, nonce: &Digest, body: &[u8]) -> Digest {
    hash(&[b"tag", key.as_bytes(), nonce.as_bytes(), body])
}

pub fn sym_encrypt<R: RngCore + ?Sized>(key: &SymKey, plaintext: &[u8], rng: &mut R) -> SealedBox {
    let nonce = Digest::random(rng);
    let body = keystream_apply(key, &nonce, plaintext);
    let tag = seal_tag(key, &nonce, &body);
    SealedBox { nonce, body, tag }
}

pub fn sym_decrypt(key: &SymKey, sealed: &SealedBox) -> Result<Vec<u8>, CryptoError> {
    if seal_tag(key, &sealed.nonce, &sealed.body) != sealed.tag {
        return Err(CryptoError::Integrity);
    }
    Ok(keystream_apply(key, &sealed.nonce, &sealed.body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn constants_form_a_safe_prime_subgroup() {
        let p = modulus_p();
        let q = order_q();
        assert_eq!(p, &(q * 2u32 + 1u32));
        assert_eq!(p.bits(), 256);
        assert!(generator_g().in_subgroup());
        assert_ne!(generator_g(), ModGroupElement::one());
    }

    #[test]
    fn hash_is_deterministic() {
        assert_eq!(hash(&[b"abc"]), hash(&[b"abc"]));
    }

    #[test]
    fn hash_frames_parts() {
        assert_ne!(hash(&[b"ab", b"c"]), hash(&[b"a", b"bc"]));
        assert_ne!(hash(&[b"abc"]), hash(&[b"abc", b""]));
    }

    #[test]
    fn hash_of_empty_part_is_pinned() {
        // SHA-256 over eight zero bytes (the length prefix of an empty part).
        assert_eq!(
            hash(&[b""]).to_hex(),
            "af5570f5a1810b7af78caf4bc70a660f0df51e42baf91d4de5b2328de0e83dfc"
        );
    }

    #[test]
    fn xor_laws() {
        let d = Digest::random(&mut rng(1));
        assert_eq!(xor(&d, &d), Digest::ZERO);
        assert_eq!(xor(&d, &Digest::ZERO), d);
        let e = Digest::random(&mut rng(2));
        assert_eq!(xor(&xor(&d, &e), &e), d);
    }

    #[test]
    fn pad_rules() {
        let full = [7u8; 32];
        assert_eq!(pad_to_digest(&full).unwrap().as_bytes(), &full);
        assert_eq!(pad_to_digest(b"").unwrap(), Digest::ZERO);
        let a = pad_to_digest(b"a").unwrap();
        assert_eq!(a.as_bytes()[0], 0x61);
        assert!(a.as_bytes()[1..].iter().all(|&b| b == 0));
        assert_eq!(
            pad_to_digest(&[0u8; 33]),
            Err(CryptoError::TooLong { len: 33, max: 32 })
        );
    }

    #[test]
    fn increment_wraps() {
        let mut bytes = [0u8; 32];
        bytes[31] = 0xff;
        let mut expect = [0u8; 32];
        expect[30] = 1;
        assert_eq!(Digest::new(bytes).increment(), Digest::new(expect));
        assert_eq!(Digest::new([0xff; 32]).increment(), Digest::ZERO);
    }

    #[test]
    fn g1_basics() {
        assert!(g1_base_mul(&Scalar::zero()).is_identity());
        assert_eq!(g1_base_mul(&Scalar::one()), G1Element::generator());
        let mut r = rng(3);
        for _ in 0..100 {
            let a = Scalar::random(&mut r);
            let b = Scalar::random(&mut r);
            assert_eq!(&g1_base_mul(&a) + &g1_base_mul(&b), g1_base_mul(&a.add(&b)));
            let x = g1_base_mul(&Scalar::random(&mut r));
            assert_eq!(g1_scale(&x, &Scalar::one()), x);
            assert_eq!(g1_scale(&G1Element::generator(), &a), g1_base_mul(&a));
            assert_eq!(g1_scale(&g1_scale(&x, &a), &b), g1_scale(&x, &a.mul(&b)));
        }
    }

    #[test]
    fn pairing_key_agreement_identity_small_instance() {
        let (a, s) = (Scalar::from_u64(3), Scalar::from_u64(5));
        let q = g1_base_mul(&Scalar::from_u64(7));
        let p_s = g1_base_mul(&s);
        let a_p = g1_base_mul(&a);
        let lhs = pairing(&p_s, &g1_scale(&q, &a));
        let rhs = pairing(&a_p, &g1_scale(&q, &s));
        assert_eq!(lhs, rhs);
        // e(P,P)^(3*5*7)
        assert_eq!(
            lhs,
            g2_pow(
                &pairing(&G1Element::generator(), &G1Element::generator()),
                &Scalar::from_u64(105)
            )
        );
    }

    #[test]
    fn pairing_identity_and_symmetry() {
        let mut r = rng(4);
        let y = g1_base_mul(&Scalar::random(&mut r));
        assert!(pairing(&G1Element::identity(), &y).is_identity());
        for _ in 0..100 {
            let x = g1_base_mul(&Scalar::random(&mut r));
            let y = g1_base_mul(&Scalar::random(&mut r));
            assert_eq!(pairing(&x, &y), pairing(&y, &x));
        }
    }

    #[test]
    fn map_to_point_behaviour() {
        assert_eq!(map_to_point(b"S"), map_to_point(b"S"));
        for id in [&b"S"[..], b"S2", b"C", b"E", b"U", b"server-1"] {
            assert!(!map_to_point(id).is_identity());
        }
        let ids: Vec<&[u8]> = vec![b"S", b"S2", b"C", b"E", b"U", b"server-1"];
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                assert_ne!(map_to_point(a), map_to_point(b));
            }
        }
    }

    #[test]
    fn mod_group_behaviour() {
        let h = mod_hash_to_group(b"C");
        assert_eq!(h, mod_hash_to_group(b"C"));
        assert!(h.in_subgroup());
        assert_eq!(mod_pow(&h, &Scalar::zero()), ModGroupElement::one());
        assert_eq!(mod_pow(&h, &Scalar::one()), h);
        let mut r = rng(5);
        let g = generator_g();
        for _ in 0..100 {
            let x = Scalar::random(&mut r);
            let v = Scalar::random(&mut r);
            assert_eq!(mod_pow(&mod_pow(&h, &x), &v), mod_pow(&h, &x.mul(&v)));
            assert_eq!(mod_pow(&mod_pow(&g, &x), &v), mod_pow(&g, &x.mul(&v)));
        }
    }

    #[test]
    fn mod_hash_exponent_matches_element() {
        for id in [&b"C"[..], b"U", b"alice"] {
            assert_eq!(mod_pow(&generator_g(), &mod_hash_exponent(id)), mod_hash_to_group(id));
        }
    }

    #[test]
    fn scalar_inverse() {
        let mut r = rng(6);
        for _ in 0..20 {
            let a = Scalar::random_nonzero(&mut r);
            assert_eq!(a.mul(&a.invert().unwrap()), Scalar::one());
        }
        assert!(Scalar::zero().invert().is_none());
    }

    #[test]
    fn cipher_round_trip_and_tamper() {
        let mut r = rng(7);
        let k = SymKey::random(&mut r);
        let m = b"a plaintext longer than one keystream block, to exercise the counter".to_vec();
        let sealed = sym_encrypt(&k, &m, &mut r);
        assert_eq!(sym_decrypt(&k, &sealed).unwrap(), m);
        assert_ne!(sealed.body, m);
        let other = SymKey::random(&mut r);
        assert_eq!(sym_decrypt(&other, &sealed), Err(CryptoError::Integrity));
        let again = sym_encrypt(&k, &m, &mut r);
        assert_ne!(sealed, again);
        assert_ne!(sealed.nonce, again.nonce);

        let mut body = sealed.clone();
        body.body[0] ^= 1;
        assert_eq!(sym_decrypt(&k, &body), Err(CryptoError::Integrity));
        let mut tag = sealed.clone();
        tag.tag = tag.tag.flip_bit(0);
        assert_eq!(sym_decrypt(&k, &tag), Err(CryptoError::Integrity));
        assert_eq!(SealedBox::from_bytes(&sealed.to_bytes()).unwrap(), sealed);
    }

    fn digest_strategy() -> impl Strategy<Value = Digest> {
        prop::array::uniform32(any::<u8>()).prop_map(Digest::new)
    }

    fn scalar_strategy() -> impl Strategy<Value = Scalar> {
        prop::array::uniform32(any::<u8>()).prop_map(|b| Scalar::new(BigUint::from_bytes_be(&b)))
    }

    proptest! {
        #[test]
        fn xor_group_laws(a in digest_strategy(), b in digest_strategy(), c in digest_strategy()) {
            prop_assert_eq!(xor(&xor(&a, &b), &c), xor(&a, &xor(&b, &c)));
            prop_assert_eq!(xor(&a, &b), xor(&b, &a));
            prop_assert_eq!(xor(&a, &Digest::ZERO), a);
            prop_assert_eq!(xor(&a, &a), Digest::ZERO);
        }

        #[test]
        fn hash_tuple_encoding_is_injective(
            s in prop::collection::vec(any::<u8>(), 0..12),
            cut_a in 0usize..12,
            cut_b in 0usize..12,
        ) {
            // Two splittings of the same concatenation collide only if they are identical.
            let a = cut_a.min(s.len());
            let b = cut_b.min(s.len());
            let left = hash(&[&s[..a], &s[a..]]);
            let right = hash(&[&s[..b], &s[b..]]);
            prop_assert_eq!(left == right, a == b);
            prop_assert_ne!(hash(&[&s[..]]), hash(&[&s[..a], &s[a..]]));
        }

        #[test]
        fn sealed_box_single_bit_mutation_fails(
            msg in prop::collection::vec(any::<u8>(), 1..80),
            seed in any::<u64>(),
            bit in any::<usize>(),
        ) {
            let mut r = rng(seed);
            let k = SymKey::random(&mut r);
            let sealed = sym_encrypt(&k, &msg, &mut r);
            prop_assert_eq!(sym_decrypt(&k, &sealed).unwrap(), msg.clone());
            let mut n = sealed.clone();
            n.nonce = n.nonce.flip_bit(bit);
            prop_assert_eq!(sym_decrypt(&k, &n), Err(CryptoError::Integrity));
            let mut t = sealed.clone();
            t.tag = t.tag.flip_bit(bit);
            prop_assert_eq!(sym_decrypt(&k, &t), Err(CryptoError::Integrity));
            let mut b = sealed.clone();
            let i = (bit / 8) % b.body.len();
            b.body[i] ^= 1 << (bit % 8);
            prop_assert_eq!(sym_decrypt(&k, &b), Err(CryptoError::Integrity));
        }

        #[test]
        fn pairing_is_bilinear(x in scalar_strategy(), y in scalar_strategy(), a in scalar_strategy(), b in scalar_strategy()) {
            let px = g1_base_mul(&x);
            let py = g1_base_mul(&y);
            prop_assert_eq!(
                pairing(&g1_scale(&px, &a), &g1_scale(&py, &b)),
                g2_pow(&pairing(&px, &py), &a.mul(&b))
            );
        }
    }
}
