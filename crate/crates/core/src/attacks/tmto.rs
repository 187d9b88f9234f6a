//! Keystream inversion against the legacy ciphers: exhaustive search
//! and a precomputed time–memory trade-off table.
//!
//! Both attacks work on a reduced, enumerable keyspace (the low
//! `keyspace_bits` of the session key) and invert the map
//! `key -> first keystream bits of frame 0`. The table is a classic
//! multi-color chain construction: column `j` applies reduction
//! `r_j(p) = (p XOR (j mod colors)) AND mask`, so one observed prefix
//! can be walked forward from every column and matched against sorted
//! chain endpoints. A candidate survives only if it also reproduces the
//! observed prefix of frame 1, which makes false alarms vanishingly
//! rare at 40 observed bits against a 20-bit keyspace.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::cipher::{a51_prefix, a52_prefix, CipherSuite};

#[derive(Debug, Error)]
pub enum TmtoError {
    #[error("table I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a chain-table file (bad magic line)")]
    BadMagic,
    #[error("bad table header: {0}")]
    BadHeader(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
}

/// Chain-table shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TmtoParams {
    pub cipher: CipherSuite,
    pub keyspace_bits: u32,
    pub chain_length: u32,
    pub chain_count: u32,
    pub color_count: u32,
}

impl TmtoParams {
    pub fn new(cipher: CipherSuite, keyspace_bits: u32, chain_length: u32, chain_count: u32) -> Self {
        TmtoParams {
            cipher,
            keyspace_bits,
            chain_length,
            chain_count,
            color_count: chain_length.max(1),
        }
    }

    pub fn validate(&self) -> Result<(), TmtoError> {
        match self.cipher {
            CipherSuite::A51 | CipherSuite::A52 => {}
            s => {
                return Err(TmtoError::BadParams(format!(
                    "tables are built against the legacy stream ciphers, not {}",
                    s.name()
                )))
            }
        }
        if self.keyspace_bits == 0 || self.keyspace_bits > 28 {
            return Err(TmtoError::BadParams(format!(
                "keyspace of 2^{} is outside the demonstrable range",
                self.keyspace_bits
            )));
        }
        // chain_count == 0 is legal and yields an empty table.
        if self.chain_length == 0 || self.color_count == 0 {
            return Err(TmtoError::BadParams("chain length and color count must be positive".into()));
        }
        Ok(())
    }

    pub fn mask(&self) -> u32 {
        ((1u64 << self.keyspace_bits) - 1) as u32
    }

    pub fn cipher_name(&self) -> &'static str {
        match self.cipher {
            CipherSuite::A51 => "a51",
            CipherSuite::A52 => "a52",
            _ => unreachable!("validated"),
        }
    }
}

/// First `bits` keystream bits of the given frame, LSB-packed.
#[inline]
pub fn keystream_prefix(cipher: CipherSuite, kc: u64, frame: u32, bits: u32) -> u64 {
    match cipher {
        CipherSuite::A51 => a51_prefix(kc, frame, bits).expect("frame in range"),
        CipherSuite::A52 => a52_prefix(kc, frame, bits).expect("frame in range"),
        _ => panic!("no prefix for suite {}", cipher.name()),
    }
}

/// What a passive observer needs for a table lookup: the keystream
/// prefix of two consecutive frames (the second disambiguates false
/// alarms).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeystreamObservation {
    pub frame0_prefix: u32,
    pub frame1_prefix: u32,
}

impl KeystreamObservation {
    /// What an eavesdropper would compute from a known-plaintext
    /// capture of frames 0 and 1 under the given key.
    pub fn of_key(params: &TmtoParams, kc: u32) -> Self {
        KeystreamObservation {
            frame0_prefix: keystream_prefix(params.cipher, kc as u64, 0, params.keyspace_bits) as u32,
            frame1_prefix: keystream_prefix(params.cipher, kc as u64, 1, params.keyspace_bits) as u32,
        }
    }
}

#[inline]
fn reduce(params: &TmtoParams, column: u32, prefix: u32) -> u32 {
    (prefix ^ (column % params.color_count)) & params.mask()
}

#[inline]
fn step(params: &TmtoParams, column: u32, key: u32) -> u32 {
    let p = keystream_prefix(params.cipher, key as u64, 0, params.keyspace_bits) as u32;
    reduce(params, column, p)
}

/// Sorted-endpoint chain table.
pub struct RainbowTable {
    pub params: TmtoParams,
    /// (endpoint, startpoint), sorted by endpoint then startpoint.
    rows: Vec<(u32, u32)>,
    /// Fraction of the keyspace touched by some chain column, measured
    /// during the build (absent on tables loaded from disk).
    pub coverage: Option<f64>,
}

fn build_range(params: &TmtoParams, range: std::ops::Range<u32>) -> (Vec<(u32, u32)>, Vec<u64>) {
    let words = ((1usize << params.keyspace_bits) + 63) / 64;
    let mut touched = vec![0u64; words];
    let mut rows = Vec::with_capacity(range.len());
    for start in range {
        let mut x = start & params.mask();
        for j in 0..params.chain_length {
            touched[(x >> 6) as usize] |= 1 << (x & 63);
            x = step(params, j, x);
        }
        rows.push((x, start & params.mask()));
    }
    (rows, touched)
}

fn finish_build(params: TmtoParams, pieces: Vec<(Vec<(u32, u32)>, Vec<u64>)>) -> RainbowTable {
    let words = ((1usize << params.keyspace_bits) + 63) / 64;
    let mut rows = Vec::with_capacity(params.chain_count as usize);
    let mut touched = vec![0u64; words];
    for (r, t) in pieces {
        rows.extend(r);
        for (acc, w) in touched.iter_mut().zip(t) {
            *acc |= w;
        }
    }
    rows.sort_unstable();
    let covered: u64 = touched.iter().map(|w| w.count_ones() as u64).sum();
    let coverage = covered as f64 / (1u64 << params.keyspace_bits) as f64;
    RainbowTable { params, rows, coverage: Some(coverage) }
}

/// Sequential chain computation, always available.
pub fn build_sequential(params: TmtoParams) -> Result<RainbowTable, TmtoError> {
    params.validate()?;
    let piece = build_range(&params, 0..params.chain_count);
    Ok(finish_build(params, vec![piece]))
}

/// Build the table, fanning chain ranges across the thread pool when
/// the `parallel` feature is on.
pub fn build(params: TmtoParams) -> Result<RainbowTable, TmtoError> {
    #[cfg(feature = "parallel")]
    {
        params.validate()?;
        let shards = (rayon::current_num_threads() * 4).max(1) as u32;
        let per = params.chain_count.div_ceil(shards);
        let ranges: Vec<std::ops::Range<u32>> = (0..shards)
            .map(|s| {
                let lo = s * per;
                let hi = ((s + 1) * per).min(params.chain_count);
                lo..hi
            })
            .filter(|r| !r.is_empty())
            .collect();
        let pieces: Vec<_> = ranges
            .into_par_iter()
            .map(|r| build_range(&params, r))
            .collect();
        Ok(finish_build(params, pieces))
    }
    #[cfg(not(feature = "parallel"))]
    {
        build_sequential(params)
    }
}

impl RainbowTable {
    pub fn rows(&self) -> &[(u32, u32)] {
        &self.rows
    }

    /// All keys consistent with an observation: walk every column
    /// suffix, regenerate every endpoint match, keep candidates that
    /// reproduce both observed frame prefixes. Sorted, deduplicated.
    pub fn lookup(&self, obs: &KeystreamObservation) -> Vec<u32> {
        let p = &self.params;
        let t = p.chain_length;
        let mut out = Vec::new();
        for suffix_start in (0..t).rev() {
            // Assume the observed prefix was produced at column
            // `suffix_start`; walk to the endpoint.
            let mut z = reduce(p, suffix_start, obs.frame0_prefix);
            for j in suffix_start + 1..t {
                z = step(p, j, z);
            }
            // All chains ending at z are candidates.
            let lo = self.rows.partition_point(|r| r.0 < z);
            for &(e, start) in self.rows[lo..].iter().take_while(|r| r.0 == z) {
                debug_assert_eq!(e, z);
                let mut x = start;
                for j in 0..suffix_start {
                    x = step(p, j, x);
                }
                if keystream_prefix(p.cipher, x as u64, 0, p.keyspace_bits) as u32
                    == obs.frame0_prefix
                    && keystream_prefix(p.cipher, x as u64, 1, p.keyspace_bits) as u32
                        == obs.frame1_prefix
                {
                    out.push(x);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Convenience: the unique verified candidate, if any.
    pub fn lookup_one(&self, obs: &KeystreamObservation) -> Option<u32> {
        self.lookup(obs).into_iter().next()
    }

    /// Serialize: text header, then little-endian row pairs.
    pub fn save(&self, path: &Path) -> Result<(), TmtoError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "GSMLAB-RT v1")?;
        writeln!(
            f,
            "cipher={} keyspace_bits={} chain_length={} chain_count={} color_count={}",
            self.params.cipher_name(),
            self.params.keyspace_bits,
            self.params.chain_length,
            self.params.chain_count,
            self.params.color_count
        )?;
        for &(e, s) in &self.rows {
            f.write_all(&e.to_le_bytes())?;
            f.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RainbowTable, TmtoError> {
        let mut data = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut data)?;
        let magic = b"GSMLAB-RT v1\n";
        if !data.starts_with(magic) {
            return Err(TmtoError::BadMagic);
        }
        let rest = &data[magic.len()..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| TmtoError::BadHeader("missing parameter line".into()))?;
        let header = std::str::from_utf8(&rest[..nl])
            .map_err(|_| TmtoError::BadHeader("parameter line is not UTF-8".into()))?;
        let mut cipher = None;
        let mut vals = [None::<u32>; 4];
        for part in header.split_whitespace() {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| TmtoError::BadHeader(format!("bad field `{part}`")))?;
            match k {
                "cipher" => {
                    cipher = Some(match v {
                        "a51" => CipherSuite::A51,
                        "a52" => CipherSuite::A52,
                        _ => return Err(TmtoError::BadHeader(format!("unknown cipher `{v}`"))),
                    })
                }
                "keyspace_bits" | "chain_length" | "chain_count" | "color_count" => {
                    let idx = match k {
                        "keyspace_bits" => 0,
                        "chain_length" => 1,
                        "chain_count" => 2,
                        _ => 3,
                    };
                    vals[idx] = Some(
                        v.parse()
                            .map_err(|_| TmtoError::BadHeader(format!("bad integer for {k}")))?,
                    );
                }
                _ => return Err(TmtoError::BadHeader(format!("unknown field `{k}`"))),
            }
        }
        let (Some(cipher), [Some(kb), Some(cl), Some(cc), Some(colors)]) = (cipher, vals) else {
            return Err(TmtoError::BadHeader("missing fields".into()));
        };
        let params = TmtoParams {
            cipher,
            keyspace_bits: kb,
            chain_length: cl,
            chain_count: cc,
            color_count: colors,
        };
        params.validate()?;
        let body = &rest[nl + 1..];
        if body.len() != params.chain_count as usize * 8 {
            return Err(TmtoError::BadHeader(format!(
                "row section is {} bytes, expected {}",
                body.len(),
                params.chain_count as usize * 8
            )));
        }
        let mut rows = Vec::with_capacity(params.chain_count as usize);
        for ch in body.chunks_exact(8) {
            let e = u32::from_le_bytes([ch[0], ch[1], ch[2], ch[3]]);
            let s = u32::from_le_bytes([ch[4], ch[5], ch[6], ch[7]]);
            rows.push((e, s));
        }
        if !rows.windows(2).all(|w| w[0] <= w[1]) {
            return Err(TmtoError::BadHeader("rows are not sorted by endpoint".into()));
        }
        Ok(RainbowTable { params, rows, coverage: None })
    }
}

// ===== Exhaustive search =====

/// 40-bit fingerprint used by the brute-force path: the first 40
/// keystream bits of frame 0.
pub fn search_fingerprint(cipher: CipherSuite, kc: u64) -> u64 {
    keystream_prefix(cipher, kc, 0, 40)
}

fn search_range(
    cipher: CipherSuite,
    targets: &std::collections::HashMap<u64, Vec<usize>>,
    range: std::ops::Range<u64>,
    n_targets: usize,
) -> Vec<Vec<u32>> {
    let mut found = vec![Vec::new(); n_targets];
    for kc in range {
        let fp = search_fingerprint(cipher, kc);
        if let Some(ids) = targets.get(&fp) {
            for &i in ids {
                found[i].push(kc as u32);
            }
        }
    }
    found
}

/// Sweep the reduced keyspace once, matching every target fingerprint;
/// returns all matching keys per target. Sequential variant.
pub fn search_keyspace_sequential(
    cipher: CipherSuite,
    keyspace_bits: u32,
    fingerprints: &[u64],
) -> Vec<Vec<u32>> {
    let mut targets: std::collections::HashMap<u64, Vec<usize>> = std::collections::HashMap::new();
    for (i, &fp) in fingerprints.iter().enumerate() {
        targets.entry(fp).or_default().push(i);
    }
    search_range(cipher, &targets, 0..(1u64 << keyspace_bits), fingerprints.len())
}

/// Parallel keyspace sweep (falls back to sequential without the
/// `parallel` feature).
pub fn search_keyspace(
    cipher: CipherSuite,
    keyspace_bits: u32,
    fingerprints: &[u64],
) -> Vec<Vec<u32>> {
    #[cfg(feature = "parallel")]
    {
        let mut targets: std::collections::HashMap<u64, Vec<usize>> =
            std::collections::HashMap::new();
        for (i, &fp) in fingerprints.iter().enumerate() {
            targets.entry(fp).or_default().push(i);
        }
        let total = 1u64 << keyspace_bits;
        let shards = (rayon::current_num_threads() * 4).max(1) as u64;
        let per = total.div_ceil(shards);
        let pieces: Vec<Vec<Vec<u32>>> = (0..shards)
            .into_par_iter()
            .map(|s| {
                let lo = s * per;
                let hi = ((s + 1) * per).min(total);
                search_range(cipher, &targets, lo..hi, fingerprints.len())
            })
            .collect();
        let mut found = vec![Vec::new(); fingerprints.len()];
        for piece in pieces {
            for (acc, p) in found.iter_mut().zip(piece) {
                acc.extend(p);
            }
        }
        for f in &mut found {
            f.sort_unstable();
        }
        found
    }
    #[cfg(not(feature = "parallel"))]
    {
        search_keyspace_sequential(cipher, keyspace_bits, fingerprints)
    }
}
