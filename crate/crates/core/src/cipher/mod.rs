//! Air-interface stream ciphers.
//!
//! Three keystream generators share one frame format:
//!
//! * [`a51`] — the stop/go three-LFSR generator used by the legacy suite.
//! * [`a52`] — its deliberately weaker sibling with a fourth register
//!   steering the clocking.
//! * [`strong`] — a keyed-PRF generator standing in for a modern cipher;
//!   nothing in the lab depends on its internals, only on determinism.
//!
//! A [`KeystreamFrame`] is 228 bits: the first 114 mask downlink bursts,
//! the last 114 mask uplink bursts of the same frame number. Bit 0 of the
//! keystream is emitted first and XORs with bit 0 of the data.

pub mod a51;
pub mod a52;
pub mod strong;

pub use a51::{a51_frame, a51_init, a51_keystream, a51_prefix};
pub use a52::{a52_frame, a52_init, a52_keystream, a52_prefix};
pub use strong::strong_keystream;

use thiserror::Error;

/// Bits per frame (downlink half + uplink half).
pub const FRAME_BITS: usize = 228;
/// Bits per direction within one frame.
pub const HALF_BITS: usize = 114;
/// Frame numbers are 22-bit.
pub const MAX_FRAME: u32 = (1 << 22) - 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CipherError {
    #[error("frame number {0:#x} does not fit in 22 bits")]
    FrameOutOfRange(u32),
    #[error("bad LFSR spec: {0}")]
    BadSpec(String),
}

/// Cipher suites negotiable over the air.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CipherSuite {
    /// No ciphering; traffic goes out in clear.
    None,
    /// Legacy majority-clocked generator.
    A51,
    /// Export-grade sibling of A5_1.
    A52,
    /// Keyed-PRF generator for the hardened protocol.
    Strong,
}

impl CipherSuite {
    pub fn name(self) -> &'static str {
        match self {
            CipherSuite::None => "NONE",
            CipherSuite::A51 => "A5_1",
            CipherSuite::A52 => "A5_2",
            CipherSuite::Strong => "STRONG",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "NONE" => Some(CipherSuite::None),
            "A5_1" => Some(CipherSuite::A51),
            "A5_2" => Some(CipherSuite::A52),
            "STRONG" => Some(CipherSuite::Strong),
            _ => None,
        }
    }
}

impl std::fmt::Display for CipherSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One frame's worth of keystream, tagged with the frame number it was
/// generated for.
#[derive(Clone, PartialEq, Eq)]
pub struct KeystreamFrame {
    pub frame_number: u32,
    /// 228 bits, one per byte (0/1), bit 0 first.
    pub bits: [u8; FRAME_BITS],
}

impl KeystreamFrame {
    /// Keystream half masking network->MS bursts (bits 0..114).
    pub fn downlink(&self) -> &[u8] {
        &self.bits[..HALF_BITS]
    }

    /// Keystream half masking MS->network bursts (bits 114..228).
    pub fn uplink(&self) -> &[u8] {
        &self.bits[HALF_BITS..]
    }
}

impl std::fmt::Debug for KeystreamFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "KeystreamFrame {{ frame_number: {}, bits: {} }}",
            self.frame_number,
            crate::bits::render_bits(&self.bits)
        )
    }
}

/// A linear feedback shift register layout: bit 0 is the rightmost
/// position, feedback is the XOR of the tap bits and shifts in at bit 0,
/// output is taken from the register MSB (bit `length - 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfsrSpec {
    length: u32,
    taps: Vec<u32>,
    clock_bit: u32,
    tap_mask: u64,
}

impl LfsrSpec {
    pub fn new(length: u32, taps: &[u32], clock_bit: u32) -> Result<Self, CipherError> {
        if length == 0 || length > 64 {
            return Err(CipherError::BadSpec(format!(
                "register length {length} outside 1..=64"
            )));
        }
        if taps.is_empty() {
            return Err(CipherError::BadSpec("no feedback taps".into()));
        }
        let mut sorted = taps.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != taps.len() {
            return Err(CipherError::BadSpec("duplicate feedback tap".into()));
        }
        if let Some(&bad) = sorted.iter().find(|&&t| t >= length) {
            return Err(CipherError::BadSpec(format!(
                "tap {bad} outside register of length {length}"
            )));
        }
        if clock_bit >= length {
            return Err(CipherError::BadSpec(format!(
                "clock bit {clock_bit} outside register of length {length}"
            )));
        }
        let tap_mask = sorted.iter().fold(0u64, |m, &t| m | (1 << t));
        Ok(LfsrSpec { length, taps: sorted, clock_bit, tap_mask })
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    pub fn clock_bit(&self) -> u32 {
        self.clock_bit
    }

    pub fn mask(&self) -> u64 {
        if self.length == 64 { u64::MAX } else { (1u64 << self.length) - 1 }
    }
}

/// Advance a register by one step: returns the shifted register and the
/// bit that fell out of the MSB. The step is linear in the register, so
/// `clock(a ^ b) == clock(a) ^ clock(b)` holds bitwise.
pub fn lfsr_clock(reg: u64, spec: &LfsrSpec) -> (u64, u8) {
    let out = ((reg >> (spec.length - 1)) & 1) as u8;
    let feedback = ((reg & spec.tap_mask).count_ones() & 1) as u64;
    (((reg << 1) | feedback) & spec.mask(), out)
}

/// Majority vote of three bits.
#[inline]
pub fn majority(b1: u8, b2: u8, b3: u8) -> u8 {
    (b1 & b2) | (b1 & b3) | (b2 & b3)
}

/// XOR `data` (a 0/1 bit vector) against the leading bits of a keystream
/// frame. Encryption and decryption are the same operation.
///
/// Callers must keep `data` within one frame (≤ 228 bits); traffic code
/// working per-direction slices the relevant half and uses [`xor_with`].
pub fn xor_crypt(data: &[u8], ks: &KeystreamFrame) -> Vec<u8> {
    assert!(
        data.len() <= FRAME_BITS,
        "payload of {} bits exceeds one frame",
        data.len()
    );
    xor_with(data, &ks.bits)
}

/// XOR `data` against the leading bits of an arbitrary keystream slice
/// (e.g. one direction's half of a frame).
pub fn xor_with(data: &[u8], keystream: &[u8]) -> Vec<u8> {
    assert!(
        data.len() <= keystream.len(),
        "payload of {} bits exceeds {} keystream bits",
        data.len(),
        keystream.len()
    );
    data.iter().zip(keystream).map(|(d, k)| d ^ k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_rejects_out_of_range_taps() {
        let err = LfsrSpec::new(19, &[13, 19], 8).unwrap_err();
        assert!(matches!(err, CipherError::BadSpec(_)));
        assert!(LfsrSpec::new(19, &[13, 16, 17, 18], 19).is_err());
        assert!(LfsrSpec::new(0, &[0], 0).is_err());
        assert!(LfsrSpec::new(19, &[], 8).is_err());
        assert!(LfsrSpec::new(19, &[13, 13], 8).is_err());
    }

    #[test]
    fn clock_from_low_bit() {
        // Register 19 bits with the standard taps: from reg = 1 the MSB is
        // 0 and no tap is set, so the bit just shifts left.
        let spec = LfsrSpec::new(19, &[13, 16, 17, 18], 8).unwrap();
        let (reg, out) = lfsr_clock(1, &spec);
        assert_eq!((reg, out), (2, 0));
    }

    #[test]
    fn nineteen_clocks_from_all_ones() {
        // Frozen from an independent bit-by-bit simulation of the same
        // register layout: 0x7FFFF clocked 19 times ends at 0x1D.
        let spec = LfsrSpec::new(19, &[13, 16, 17, 18], 8).unwrap();
        let mut reg = 0x7FFFFu64;
        for _ in 0..19 {
            reg = lfsr_clock(reg, &spec).0;
        }
        assert_eq!(reg, 0x1D);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let spec = LfsrSpec::new(23, &[7, 20, 21, 22], 10).unwrap();
        assert_eq!(lfsr_clock(0, &spec), (0, 0));
    }

    #[test]
    fn majority_table() {
        assert_eq!(majority(0, 0, 0), 0);
        assert_eq!(majority(1, 0, 0), 0);
        assert_eq!(majority(1, 1, 0), 1);
        assert_eq!(majority(1, 1, 1), 1);
        assert_eq!(majority(0, 1, 1), 1);
    }

    #[test]
    #[should_panic(expected = "exceeds one frame")]
    fn oversized_payload_panics() {
        let ks = KeystreamFrame { frame_number: 0, bits: [0; FRAME_BITS] };
        let _ = xor_crypt(&vec![0u8; FRAME_BITS + 1], &ks);
    }
}
