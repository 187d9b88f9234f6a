//! Subscriber authentication: the narrow-pipe legacy SIM hash, its
//! hardened replacement, per-message tags and the triplet machinery.
//!
//! The legacy algorithm (`mini_comp128`) compresses each of eight
//! (key byte, key byte, challenge byte, challenge byte) quadruples
//! through two small substitution tables. The 32-bit quadruple reaches
//! the output only through the 14-bit `(t1, t2)` intermediate — the
//! narrow pipe that makes chosen-challenge collisions cheap and the SIM
//! clonable. The hardened replacement is a keyed hash with none of that
//! structure.

use rand::RngCore;
use thiserror::Error;

use crate::hmac::hmac_tagged;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuthError {
    #[error("IMSI must be exactly 15 decimal digits, got {0:?}")]
    BadImsi(String),
}

// ===== Identities and profiles =====

/// 15-digit subscriber identity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Imsi(String);

impl Imsi {
    pub fn new(s: &str) -> Result<Self, AuthError> {
        if s.len() == 15 && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(Imsi(s.to_owned()))
        } else {
            Err(AuthError::BadImsi(s.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Imsi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Debug for Imsi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Imsi({})", self.0)
    }
}

/// A provisioned SIM: identity plus root key.
///
/// `Debug` redacts the key — profiles end up inside world state that
/// tests like to dump, and no output of the lab may ever contain a Ki.
#[derive(Clone)]
pub struct SimProfile {
    pub imsi: Imsi,
    pub ki: [u8; 16],
}

impl SimProfile {
    pub fn new(imsi: Imsi, ki: [u8; 16]) -> Self {
        SimProfile { imsi, ki }
    }
}

impl std::fmt::Debug for SimProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SimProfile {{ imsi: {}, ki: <redacted> }}", self.imsi)
    }
}

// ===== Legacy SIM hash =====

/// Substitution tables used by the legacy hash.
#[derive(Clone)]
pub struct SboxPair {
    pub s0: [u8; 256],
    pub s1: [u8; 128],
}

#[inline]
fn xorshift64(mut s: u64) -> u64 {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    s
}

/// Fill both tables from the fixed xorshift64 stream. `s0` entries are
/// bits 32..=39 of successive states reduced mod 128, `s1` entries bits
/// 32..=38 reduced mod 64; the stream runs on from `s0` into `s1`.
pub fn gen_sboxes() -> SboxPair {
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut s0 = [0u8; 256];
    for e in s0.iter_mut() {
        state = xorshift64(state);
        *e = (((state >> 32) & 0xFF) % 128) as u8;
    }
    let mut s1 = [0u8; 128];
    for e in s1.iter_mut() {
        state = xorshift64(state);
        *e = (((state >> 32) & 0x7F) % 64) as u8;
    }
    SboxPair { s0, s1 }
}

/// The tables are fixed for the lab's lifetime; compute once.
pub fn sboxes() -> &'static SboxPair {
    use std::sync::OnceLock;
    static TABLES: OnceLock<SboxPair> = OnceLock::new();
    TABLES.get_or_init(gen_sboxes)
}

/// Compress one (key, key, challenge, challenge) byte quadruple to a
/// pair of 6-bit values.
///
/// Everything the quadruple contributes downstream flows through
/// `(t1, t2)` — at most 14 bits. Note also that the challenge bytes
/// enter as `a + 2c mod 256`: challenges `c` and `c + 128` are
/// indistinguishable, so the effective challenge space per quadruple is
/// 128 x 128.
pub fn pair_compress(a: u8, b: u8, c: u8, d: u8, t: &SboxPair) -> (u8, u8) {
    let t1 = t.s0[(a as usize + 2 * c as usize) % 256];
    let t2 = t.s0[(b as usize + 2 * d as usize) % 256];
    let u = t.s1[(t1 as usize + 2 * t2 as usize) % 128];
    let v = t.s1[(t2 as usize + 2 * t1 as usize) % 128];
    (u, v)
}

/// The 12-bit output contribution of one quadruple: first-pass word
/// XOR-folded with the second-pass word, which re-substitutes `(u, v)`
/// through `s1` offset by the round index.
pub(crate) fn fold_pair(u: u8, v: u8, round: usize, t: &SboxPair) -> u16 {
    let w1 = ((u as u16) << 6) | v as u16;
    let u2 = t.s1[(u as usize + round) % 128];
    let v2 = t.s1[(v as usize + round) % 128];
    let w2 = ((u2 as u16) << 6) | v2 as u16;
    w1 ^ w2
}

fn pack96(words: &[u16; 8]) -> [u8; 12] {
    let mut out = [0u8; 12];
    for i in 0..4 {
        let comb = ((words[2 * i] as u32) << 12) | words[2 * i + 1] as u32;
        out[3 * i] = (comb >> 16) as u8;
        out[3 * i + 1] = (comb >> 8) as u8;
        out[3 * i + 2] = comb as u8;
    }
    out
}

/// Legacy A3/A8: map (Ki, RAND) to the signed response and session key.
///
/// Quadruple `i` is `(Ki[i], Ki[i+8], RAND[i], RAND[i+8])`; the eight
/// folded 12-bit contributions concatenate to 96 bits, of which the
/// first 32 are SRES and the next 64 are Kc.
pub fn mini_comp128(ki: &[u8; 16], rand: &[u8; 16]) -> (u32, u64) {
    let t = sboxes();
    let mut words = [0u16; 8];
    for i in 0..8 {
        let (u, v) = pair_compress(ki[i], ki[i + 8], rand[i], rand[i + 8], t);
        words[i] = fold_pair(u, v, i, t);
    }
    let out = pack96(&words);
    let sres = u32::from_be_bytes([out[0], out[1], out[2], out[3]]);
    let kc = u64::from_be_bytes([
        out[4], out[5], out[6], out[7], out[8], out[9], out[10], out[11],
    ]);
    (sres, kc)
}

// ===== Hardened primitives =====

/// Hardened A3/A8: keyed hash of the challenge; 32-bit signed response
/// plus a 128-bit session key with no usable structure.
pub fn hardened_a3a8(ki: &[u8; 16], rand: &[u8; 16]) -> (u32, [u8; 16]) {
    let d = hmac_tagged(ki, "a3a8", &[rand]);
    let sres = u32::from_be_bytes([d[0], d[1], d[2], d[3]]);
    let mut kc = [0u8; 16];
    kc.copy_from_slice(&d[4..20]);
    (sres, kc)
}

/// Signing key for per-message tags, derived from Ki so both the SIM and
/// the authority core can compute it while an eavesdropper cannot.
pub fn mac_key(ki: &[u8; 16]) -> [u8; 16] {
    let d = hmac_tagged(ki, "mac-key", &[]);
    let mut k = [0u8; 16];
    k.copy_from_slice(&d[..16]);
    k
}

/// The network's own signed response: proves knowledge of Ki to the MS,
/// bound to this challenge and this network nonce.
pub fn network_sres(ki: &[u8; 16], rand: &[u8; 16], net_nonce: &[u8; 16]) -> u32 {
    let d = hmac_tagged(ki, "net-auth", &[rand, net_nonce]);
    u32::from_be_bytes([d[0], d[1], d[2], d[3]])
}

/// 64-bit message tag.
pub fn mac_tag(key: &[u8; 16], msg: &[u8]) -> u64 {
    let d = hmac_tagged(key, "msg", &[msg]);
    u64::from_be_bytes([d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7]])
}

pub fn mac_verify(key: &[u8; 16], msg: &[u8], tag: u64) -> bool {
    mac_tag(key, msg) == tag
}

/// Tag over a protocol message: covers who is talking to whom, the
/// session nonces, and the canonical message body, each length-framed
/// so no two field splits collide.
pub fn frame_mac(key: &[u8; 16], dir: &str, binding: &[u8], body: &str) -> u64 {
    let d = hmac_tagged(key, "frame", &[dir.as_bytes(), binding, body.as_bytes()]);
    u64::from_be_bytes([d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7]])
}

// ===== Triplets =====

/// Which A3/A8 the authority core runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthAlgo {
    MiniComp128,
    Hardened,
}

/// Session key, sized by the issuing algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SessionKey {
    Legacy(u64),
    Strong([u8; 16]),
}

impl SessionKey {
    pub fn to_bytes(self) -> Vec<u8> {
        match self {
            SessionKey::Legacy(k) => k.to_be_bytes().to_vec(),
            SessionKey::Strong(k) => k.to_vec(),
        }
    }
}

/// One (RAND, SRES, Kc) authentication vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthTriplet {
    pub rand: [u8; 16],
    pub sres: u32,
    pub kc: SessionKey,
}

/// Run A3/A8 for a given challenge under the chosen algorithm.
pub fn run_a3a8(algo: AuthAlgo, ki: &[u8; 16], rand: &[u8; 16]) -> (u32, SessionKey) {
    match algo {
        AuthAlgo::MiniComp128 => {
            let (sres, kc) = mini_comp128(ki, rand);
            (sres, SessionKey::Legacy(kc))
        }
        AuthAlgo::Hardened => {
            let (sres, kc) = hardened_a3a8(ki, rand);
            (sres, SessionKey::Strong(kc))
        }
    }
}

/// Draw a fresh challenge and compute the matching triplet.
pub fn gen_triplet(profile: &SimProfile, algo: AuthAlgo, rng: &mut impl RngCore) -> AuthTriplet {
    let mut rand = [0u8; 16];
    rng.fill_bytes(&mut rand);
    let (sres, kc) = run_a3a8(algo, &profile.ki, &rand);
    AuthTriplet { rand, sres, kc }
}
