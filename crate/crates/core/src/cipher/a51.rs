//! The legacy stop/go generator.
//!
//! Three LFSRs of 19, 22 and 23 bits with feedback taps {13,16,17,18},
//! {20,21} and {7,20,21,22}. Each step takes a majority vote of the
//! clocking bits (8, 10, 10); a register advances only when its clocking
//! bit agrees with the vote. Loading zeroizes the registers, clocks all
//! of them 64 times XORing one session-key bit into bit 0 per step (key
//! bit 0 first), does the same for the 22 frame-number bits, then runs
//! 100 majority-clocked mixing steps. Each output bit is produced by one
//! majority-clocked step followed by XORing the three register MSBs.
//!
//! With these parameters the construction is the published one, and the
//! tests pin its output to the publicly circulated known-good vector.

use super::{majority, CipherError, KeystreamFrame, FRAME_BITS, MAX_FRAME};

const R1_MASK: u32 = (1 << 19) - 1;
const R2_MASK: u32 = (1 << 22) - 1;
const R3_MASK: u32 = (1 << 23) - 1;
const R1_TAPS: u32 = (1 << 13) | (1 << 16) | (1 << 17) | (1 << 18);
const R2_TAPS: u32 = (1 << 20) | (1 << 21);
const R3_TAPS: u32 = (1 << 7) | (1 << 20) | (1 << 21) | (1 << 22);
const R1_CLOCK: u32 = 8;
const R2_CLOCK: u32 = 10;
const R3_CLOCK: u32 = 10;

/// Register state after key/frame load; ready to produce keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct A51State {
    r1: u32,
    r2: u32,
    r3: u32,
}

#[inline]
fn step_reg(reg: u32, mask: u32, taps: u32) -> u32 {
    let feedback = (reg & taps).count_ones() & 1;
    ((reg << 1) & mask) | feedback
}

impl A51State {
    #[inline]
    fn clock_all(&mut self) {
        self.r1 = step_reg(self.r1, R1_MASK, R1_TAPS);
        self.r2 = step_reg(self.r2, R2_MASK, R2_TAPS);
        self.r3 = step_reg(self.r3, R3_MASK, R3_TAPS);
    }

    #[inline]
    fn clock_majority(&mut self) {
        let b1 = ((self.r1 >> R1_CLOCK) & 1) as u8;
        let b2 = ((self.r2 >> R2_CLOCK) & 1) as u8;
        let b3 = ((self.r3 >> R3_CLOCK) & 1) as u8;
        let maj = majority(b1, b2, b3);
        if b1 == maj {
            self.r1 = step_reg(self.r1, R1_MASK, R1_TAPS);
        }
        if b2 == maj {
            self.r2 = step_reg(self.r2, R2_MASK, R2_TAPS);
        }
        if b3 == maj {
            self.r3 = step_reg(self.r3, R3_MASK, R3_TAPS);
        }
    }

    #[inline]
    fn output_bit(&self) -> u8 {
        (((self.r1 >> 18) ^ (self.r2 >> 21) ^ (self.r3 >> 22)) & 1) as u8
    }
}

/// Load a 64-bit session key and a 22-bit frame number. Key bit 0 (the
/// LSB of `kc`) is clocked in first; a `kc` built with
/// `u64::from_le_bytes` therefore consumes key bytes in transmission
/// order.
pub fn a51_init(kc: u64, frame: u32) -> Result<A51State, CipherError> {
    if frame > MAX_FRAME {
        return Err(CipherError::FrameOutOfRange(frame));
    }
    let mut st = A51State { r1: 0, r2: 0, r3: 0 };
    for i in 0..64 {
        st.clock_all();
        let bit = ((kc >> i) & 1) as u32;
        st.r1 ^= bit;
        st.r2 ^= bit;
        st.r3 ^= bit;
    }
    for i in 0..22 {
        st.clock_all();
        let bit = (frame >> i) & 1;
        st.r1 ^= bit;
        st.r2 ^= bit;
        st.r3 ^= bit;
    }
    for _ in 0..100 {
        st.clock_majority();
    }
    Ok(st)
}

/// Produce the 228-bit frame of keystream from a loaded state. Pure in
/// `(state, frame)`: the state is copied, the frame number only labels
/// the output.
pub fn a51_keystream(state: &A51State, frame: u32) -> KeystreamFrame {
    let mut st = *state;
    let mut bits = [0u8; FRAME_BITS];
    for b in bits.iter_mut() {
        st.clock_majority();
        *b = st.output_bit();
    }
    KeystreamFrame { frame_number: frame, bits }
}

/// Load and generate in one call.
pub fn a51_frame(kc: u64, frame: u32) -> Result<KeystreamFrame, CipherError> {
    Ok(a51_keystream(&a51_init(kc, frame)?, frame))
}

/// First `n` keystream bits (n ≤ 64) packed LSB-first into a word.
/// This is the hot path for the brute-force and table attacks, which
/// only ever need a short prefix.
pub fn a51_prefix(kc: u64, frame: u32, n: u32) -> Result<u64, CipherError> {
    assert!(n <= 64);
    let mut st = a51_init(kc, frame)?;
    let mut out = 0u64;
    for i in 0..n {
        st.clock_majority();
        out |= u64::from(st.output_bit()) << i;
    }
    Ok(out)
}
