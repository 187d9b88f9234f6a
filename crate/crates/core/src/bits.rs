//! Bit-vector helpers shared by the ciphers, the simulator and the attacks.
//!
//! Everything in this crate uses one convention: a "bit vector" is a
//! `&[u8]` whose entries are 0 or 1, bit 0 first. When bits are packed
//! into bytes, bit `8*k + i` of the vector is bit `i` (the LSB side) of
//! byte `k`. Keystream bit 0 is emitted first and XORs with data bit 0.

/// Unpack bytes into bits, LSB of each byte first.
pub fn bits_from_bytes(bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for i in 0..8 {
            out.push((b >> i) & 1);
        }
    }
    out
}

/// Pack bits (0/1 values, bit 0 first) back into bytes, zero-padding the
/// final byte. Inverse of [`bits_from_bytes`] for whole-byte lengths.
pub fn bytes_from_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        debug_assert!(b <= 1, "bit vectors hold 0/1 values");
        out[i / 8] |= (b & 1) << (i % 8);
    }
    out
}

/// Pack up to 64 bits (bit 0 first) into a word: bit i lands at value bit i.
pub fn word_from_bits(bits: &[u8]) -> u64 {
    assert!(bits.len() <= 64);
    let mut v = 0u64;
    for (i, &b) in bits.iter().enumerate() {
        v |= u64::from(b & 1) << i;
    }
    v
}

/// Unpack the low `n` bits of a word into a bit vector, bit 0 first.
pub fn bits_from_word(v: u64, n: usize) -> Vec<u8> {
    assert!(n <= 64);
    (0..n).map(|i| ((v >> i) & 1) as u8).collect()
}

/// Render a bit vector as `<len>:<hex>` with the bits packed LSB-first.
/// Used by the trace format so payloads of any bit length stay one token.
pub fn render_bits(bits: &[u8]) -> String {
    format!("{}:{}", bits.len(), hex::encode(bytes_from_bits(bits)))
}

/// XOR two equal-length bit vectors.
pub fn xor_bits(a: &[u8], b: &[u8]) -> Vec<u8> {
    assert_eq!(a.len(), b.len(), "xor_bits needs equal lengths");
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}
