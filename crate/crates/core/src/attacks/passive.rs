//! Known-plaintext keystream recovery.
//!
//! Much of the signalling a phone exchanges is predictable byte-for-
//! byte, so an eavesdropper who guesses the plaintext of a captured
//! ciphered frame holds that frame's keystream: stream ciphering is a
//! plain XOR. The recovered bits feed the table and brute-force
//! attacks; they are only valid for the direction half they came from.

use thiserror::Error;

use crate::bits::xor_bits;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KeystreamError {
    #[error("ciphertext is {ct} bits but plaintext guess is {pt} bits")]
    LengthMismatch { ct: usize, pt: usize },
}

/// XOR a captured ciphered bit string against its guessed plaintext,
/// yielding the keystream bits that enciphered it.
pub fn recover_keystream(ciphertext: &[u8], known_plaintext: &[u8]) -> Result<Vec<u8>, KeystreamError> {
    if ciphertext.len() != known_plaintext.len() {
        return Err(KeystreamError::LengthMismatch {
            ct: ciphertext.len(),
            pt: known_plaintext.len(),
        });
    }
    Ok(xor_bits(ciphertext, known_plaintext))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{a51_frame, HALF_BITS};

    #[test]
    fn zero_plaintext_returns_keystream_verbatim() {
        let ks = a51_frame(0x0123_4567_89AB_CDEF, 7).unwrap();
        let down = ks.downlink();
        let ct = down.to_vec(); // ct = pt XOR ks with pt = 0
        let recovered = recover_keystream(&ct, &vec![0u8; HALF_BITS]).unwrap();
        assert_eq!(recovered, down);
    }

    #[test]
    fn roundtrip_on_random_plaintext() {
        let ks = a51_frame(0xFEED_FACE_CAFE_BEEF, 42).unwrap();
        let half = ks.uplink();
        let pt: Vec<u8> = (0..HALF_BITS).map(|i| ((i * 7 + 3) % 2) as u8).collect();
        let ct = xor_bits(&pt, half);
        assert_eq!(recover_keystream(&ct, &pt).unwrap(), half);
    }

    #[test]
    fn recovered_half_does_not_decipher_the_other_direction() {
        let ks = a51_frame(1, 1).unwrap();
        let down = ks.downlink().to_vec();
        let up = ks.uplink().to_vec();
        let recovered = recover_keystream(&down, &vec![0u8; HALF_BITS]).unwrap();
        assert_eq!(recovered, down);
        assert_ne!(recovered, up, "direction halves must differ");
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let err = recover_keystream(&[0, 1, 0], &[0, 1]).unwrap_err();
        assert_eq!(err, KeystreamError::LengthMismatch { ct: 3, pt: 2 });
    }
}
