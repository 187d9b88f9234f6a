//! Deterministic laboratory for GSM-class air-interface security.
//!
//! The crate models a mobile station, a serving network and the
//! authority core behind it, speaking a compact Um-style message set
//! over a tick-driven channel with an optional attacker in the middle.
//! Two protocol variants run over the same machinery:
//!
//! * `LEGACY` — one-sided authentication, a narrow-pipe SIM hash and the
//!   weak stream ciphers, with every classic consequence: IMSI catching,
//!   downgrade, cloning, table-based key recovery, SMS spoofing.
//! * `HARDENED` — mutual authentication with per-session nonces, strong
//!   primitives, per-message tags and replay caches, under which each of
//!   those attacks is expected to fail (channel flooding excepted).
//!
//! Everything is seeded and single-threaded at simulation level, so runs
//! are reproducible byte-for-byte. Data-parallel helpers (table builds,
//! key searches) use rayon when the `parallel` feature (default) is on
//! and fall back to sequential code otherwise.

pub mod attacks;
pub mod auth;
pub mod bits;
pub mod cipher;
pub mod hmac;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod sim;
