//! Keyed-PRF keystream generator for the hardened protocol.
//!
//! Stands in for a modern cipher: 128-bit session key and the 22-bit
//! frame number go through HMAC-SHA256, whose output is expanded to the
//! 228-bit frame. The rest of the lab treats it as a black box — only
//! determinism, output length and per-frame distinctness are relied on.

use super::{CipherError, KeystreamFrame, FRAME_BITS, MAX_FRAME};
use crate::hmac::hmac_tagged;

pub fn strong_keystream(key: &[u8; 16], frame: u32) -> Result<KeystreamFrame, CipherError> {
    if frame > MAX_FRAME {
        return Err(CipherError::FrameOutOfRange(frame));
    }
    let mut bits = [0u8; FRAME_BITS];
    let mut filled = 0;
    let mut block = 0u32;
    while filled < FRAME_BITS {
        let digest = hmac_tagged(
            key,
            "keystream",
            &[&frame.to_le_bytes(), &block.to_le_bytes()],
        );
        for byte in digest {
            for i in 0..8 {
                if filled == FRAME_BITS {
                    break;
                }
                bits[filled] = (byte >> i) & 1;
                filled += 1;
            }
        }
        block += 1;
    }
    Ok(KeystreamFrame { frame_number: frame, bits })
}
