//! The export-grade sibling generator.
//!
//! Same three data registers as the stop/go cipher, plus a fourth 17-bit
//! register (taps {11,16}) that does all the clock control: each step
//! takes the majority of R4 bits {3,7,10}, advances R1 when R4 bit 10
//! agrees with it, R2 for bit 3, R3 for bit 7, and always advances R4.
//! The output adds a quadratic term per register — the majority of three
//! masked state bits — XORed onto the usual three MSBs.
//!
//! Loading mirrors the sibling (64 key bits, 22 frame bits into all four
//! registers), then one bit per register is forced to 1 (R1[15], R2[16],
//! R3[18], R4[10]) so the all-zero load cannot park the generator in the
//! zero orbit, then 100 mixing steps run.
//!
//! The fourth register holds the only clocking state, which is the
//! structural reason this family falls to tiny table attacks.

use super::{majority, CipherError, KeystreamFrame, FRAME_BITS, MAX_FRAME};

const R1_MASK: u32 = (1 << 19) - 1;
const R2_MASK: u32 = (1 << 22) - 1;
const R3_MASK: u32 = (1 << 23) - 1;
const R4_MASK: u32 = (1 << 17) - 1;
const R1_TAPS: u32 = (1 << 13) | (1 << 16) | (1 << 17) | (1 << 18);
const R2_TAPS: u32 = (1 << 20) | (1 << 21);
const R3_TAPS: u32 = (1 << 7) | (1 << 20) | (1 << 21) | (1 << 22);
const R4_TAPS: u32 = (1 << 11) | (1 << 16);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct A52State {
    r1: u32,
    r2: u32,
    r3: u32,
    r4: u32,
}

#[inline]
fn step_reg(reg: u32, mask: u32, taps: u32) -> u32 {
    let feedback = (reg & taps).count_ones() & 1;
    ((reg << 1) & mask) | feedback
}

#[inline]
fn bit(reg: u32, pos: u32) -> u8 {
    ((reg >> pos) & 1) as u8
}

impl A52State {
    #[inline]
    fn clock_all(&mut self) {
        self.r1 = step_reg(self.r1, R1_MASK, R1_TAPS);
        self.r2 = step_reg(self.r2, R2_MASK, R2_TAPS);
        self.r3 = step_reg(self.r3, R3_MASK, R3_TAPS);
        self.r4 = step_reg(self.r4, R4_MASK, R4_TAPS);
    }

    #[inline]
    fn step(&mut self) {
        let maj = majority(bit(self.r4, 3), bit(self.r4, 7), bit(self.r4, 10));
        if bit(self.r4, 10) == maj {
            self.r1 = step_reg(self.r1, R1_MASK, R1_TAPS);
        }
        if bit(self.r4, 3) == maj {
            self.r2 = step_reg(self.r2, R2_MASK, R2_TAPS);
        }
        if bit(self.r4, 7) == maj {
            self.r3 = step_reg(self.r3, R3_MASK, R3_TAPS);
        }
        self.r4 = step_reg(self.r4, R4_MASK, R4_TAPS);
    }

    #[inline]
    fn output_bit(&self) -> u8 {
        let mut o = bit(self.r1, 18) ^ bit(self.r2, 21) ^ bit(self.r3, 22);
        o ^= majority(bit(self.r1, 12), bit(self.r1, 14), bit(self.r1, 15));
        o ^= majority(bit(self.r2, 9), bit(self.r2, 13), bit(self.r2, 16));
        o ^= majority(bit(self.r3, 13), bit(self.r3, 16), bit(self.r3, 18));
        o
    }
}

pub fn a52_init(kc: u64, frame: u32) -> Result<A52State, CipherError> {
    if frame > MAX_FRAME {
        return Err(CipherError::FrameOutOfRange(frame));
    }
    let mut st = A52State { r1: 0, r2: 0, r3: 0, r4: 0 };
    for i in 0..64 {
        st.clock_all();
        let b = ((kc >> i) & 1) as u32;
        st.r1 ^= b;
        st.r2 ^= b;
        st.r3 ^= b;
        st.r4 ^= b;
    }
    for i in 0..22 {
        st.clock_all();
        let b = (frame >> i) & 1;
        st.r1 ^= b;
        st.r2 ^= b;
        st.r3 ^= b;
        st.r4 ^= b;
    }
    st.r1 |= 1 << 15;
    st.r2 |= 1 << 16;
    st.r3 |= 1 << 18;
    st.r4 |= 1 << 10;
    for _ in 0..100 {
        st.step();
    }
    Ok(st)
}

pub fn a52_keystream(state: &A52State, frame: u32) -> KeystreamFrame {
    let mut st = *state;
    let mut bits = [0u8; FRAME_BITS];
    for b in bits.iter_mut() {
        st.step();
        *b = st.output_bit();
    }
    KeystreamFrame { frame_number: frame, bits }
}

pub fn a52_frame(kc: u64, frame: u32) -> Result<KeystreamFrame, CipherError> {
    Ok(a52_keystream(&a52_init(kc, frame)?, frame))
}

/// First `n` keystream bits (n ≤ 64) packed LSB-first into a word.
pub fn a52_prefix(kc: u64, frame: u32, n: u32) -> Result<u64, CipherError> {
    assert!(n <= 64);
    let mut st = a52_init(kc, frame)?;
    let mut out = 0u64;
    for i in 0..n {
        st.step();
        out |= u64::from(st.output_bit()) << i;
    }
    Ok(out)
}
