//! Scenario files: a flat `section.key = value` format describing one
//! reproducible lab run — the protocol variant, the network knobs, the
//! subscriber fleet and the attack list.
//!
//! ```text
//! # lines starting with # are comments
//! name = demo
//! variant = LEGACY
//! seed = 42
//!
//! network.suite = A5_1
//! network.kc_policy = XOR_RECYCLE:00ff00ff00ff00ff
//!
//! ms.alice.imsi = 001010000000001
//! ms.alice.ki = 000102030405060708090a0b0c0d0e0f
//! ms.alice.lat = 48.858370
//! ms.alice.lon = 2.294481
//!
//! attack.fake_bts.target = alice
//! attack.fake_bts.traffic = meet at dawn
//! ```
//!
//! Parsing is strict: unknown keys, duplicate keys, malformed values
//! and references to undeclared stations are all errors naming the
//! offending line. `render` produces the canonical form (fixed section
//! order, stations sorted by id, attacks in declaration order), and
//! `parse(render(s))` is the identity.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::attacks::{AttackSpec, OracleKind};
use crate::auth::Imsi;
use crate::cipher::CipherSuite;
use crate::sim::{KcPolicy, ProtocolVariant, WorldConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {why}")]
    BadValue { line: usize, key: String, why: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("line {line}: unknown target station `{target}`")]
    UnknownTarget { line: usize, target: String },
}

/// One provisioned subscriber handset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationDecl {
    pub id: String,
    pub imsi: Imsi,
    pub ki: [u8; 16],
    /// Ground-truth position, micro-degrees.
    pub lat: i64,
    pub lon: i64,
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub cfg: WorldConfig,
    /// Sorted by station id.
    pub stations: Vec<StationDecl>,
    /// In declaration order.
    pub attacks: Vec<AttackSpec>,
}

fn ident_ok(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool, ScenarioError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ScenarioError::BadValue {
            line,
            key: key.to_owned(),
            why: format!("expected true or false, got `{v}`"),
        }),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ScenarioError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ScenarioError::BadValue {
        line,
        key: key.to_owned(),
        why: format!("`{v}` is not a valid number ({e})"),
    })
}

fn parse_ki(line: usize, key: &str, v: &str) -> Result<[u8; 16], ScenarioError> {
    let bytes = hex::decode(v).map_err(|e| ScenarioError::BadValue {
        line,
        key: key.to_owned(),
        why: format!("expected 32 hex digits ({e})"),
    })?;
    bytes.try_into().map_err(|_| ScenarioError::BadValue {
        line,
        key: key.to_owned(),
        why: "expected exactly 16 bytes of key material".to_owned(),
    })
}

/// Parse a signed decimal with up to six fractional digits into
/// micro-degrees.
fn parse_micro(line: usize, key: &str, v: &str) -> Result<i64, ScenarioError> {
    let bad = |why: &str| ScenarioError::BadValue {
        line,
        key: key.to_owned(),
        why: why.to_owned(),
    };
    let (neg, rest) = match v.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, v),
    };
    let (int_part, frac_part) = match rest.split_once('.') {
        Some((i, f)) => (i, f),
        None => (rest, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad("expected a decimal number"));
    }
    if frac_part.len() > 6 || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad("fraction is limited to six digits"));
    }
    let whole: i64 = int_part.parse().map_err(|_| bad("integer part out of range"))?;
    let mut frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().unwrap() };
    frac *= 10i64.pow(6 - frac_part.len() as u32);
    let micro = whole
        .checked_mul(1_000_000)
        .and_then(|w| w.checked_add(frac))
        .ok_or_else(|| bad("coordinate out of range"))?;
    Ok(if neg { -micro } else { micro })
}

fn render_micro(micro: i64) -> String {
    let sign = if micro < 0 { "-" } else { "" };
    let a = micro.unsigned_abs();
    format!("{sign}{}.{:06}", a / 1_000_000, a % 1_000_000)
}

fn parse_kc_policy(line: usize, key: &str, v: &str) -> Result<KcPolicy, ScenarioError> {
    if v == "FRESH_EACH_SESSION" {
        return Ok(KcPolicy::Fresh);
    }
    if let Some(hexmask) = v.strip_prefix("XOR_RECYCLE:") {
        if hexmask.len() == 16 && hexmask.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Ok(KcPolicy::XorRecycle(u64::from_str_radix(hexmask, 16).unwrap()));
        }
        return Err(ScenarioError::BadValue {
            line,
            key: key.to_owned(),
            why: "XOR_RECYCLE mask must be 16 hex digits".to_owned(),
        });
    }
    Err(ScenarioError::BadValue {
        line,
        key: key.to_owned(),
        why: format!("expected FRESH_EACH_SESSION or XOR_RECYCLE:<16 hex>, got `{v}`"),
    })
}

fn render_kc_policy(p: KcPolicy) -> String {
    match p {
        KcPolicy::Fresh => "FRESH_EACH_SESSION".to_owned(),
        KcPolicy::XorRecycle(m) => format!("XOR_RECYCLE:{m:016x}"),
    }
}

/// A raw `key = value` occurrence.
struct Entry {
    line: usize,
    value: String,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        // Pass 1: syntactic split into (path, value) with duplicate
        // detection, preserving order.
        let mut entries: Vec<(String, Entry)> = Vec::new();
        let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let Some((k, v)) = t.split_once('=') else {
                return Err(ScenarioError::Syntax { line });
            };
            let key = k.trim().to_owned();
            let value = v.trim().to_owned();
            if key.is_empty() {
                return Err(ScenarioError::Syntax { line });
            }
            if !seen.insert(key.clone()) {
                return Err(ScenarioError::Duplicate { line, key });
            }
            entries.push((key, Entry { line, value }));
        }

        // Pass 2a: find the variant, which fixes every default.
        let variant = {
            let e = entries
                .iter()
                .find(|(k, _)| k == "variant")
                .ok_or_else(|| ScenarioError::Missing("variant".into()))?;
            ProtocolVariant::parse(&e.1.value).ok_or_else(|| ScenarioError::BadValue {
                line: e.1.line,
                key: "variant".into(),
                why: format!("expected LEGACY or HARDENED, got `{}`", e.1.value),
            })?
        };
        let mut cfg = match variant {
            ProtocolVariant::Legacy => WorldConfig::legacy(),
            ProtocolVariant::Hardened => WorldConfig::hardened(),
        };

        // Pass 2b: walk the entries, routing each to its section.
        let mut name: Option<String> = None;
        let mut seed: u64 = 0;
        // station id -> field -> entry
        let mut ms_fields: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        // attack kind -> (first line, param -> entry), in declaration order
        let mut attack_order: Vec<String> = Vec::new();
        let mut attack_fields: BTreeMap<String, (usize, BTreeMap<String, Entry>)> =
            BTreeMap::new();

        for (key, entry) in entries {
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["variant"] => {}
                ["name"] => {
                    if !ident_ok(&entry.value) {
                        return Err(ScenarioError::BadValue {
                            line: entry.line,
                            key,
                            why: "name must be lowercase letters, digits, `_` or `-`".into(),
                        });
                    }
                    name = Some(entry.value);
                }
                ["seed"] => seed = parse_num(entry.line, &key, &entry.value)?,
                ["network", nk] => match *nk {
                    "suite" => {
                        cfg.suite = CipherSuite::parse(&entry.value).ok_or_else(|| {
                            ScenarioError::BadValue {
                                line: entry.line,
                                key: key.clone(),
                                why: format!(
                                    "expected NONE, A5_1, A5_2 or STRONG, got `{}`",
                                    entry.value
                                ),
                            }
                        })?;
                    }
                    "rach_slots_per_tick" => {
                        let n: u32 = parse_num(entry.line, &key, &entry.value)?;
                        if n == 0 {
                            return Err(ScenarioError::BadValue {
                                line: entry.line,
                                key,
                                why: "at least one slot per tick is required".into(),
                            });
                        }
                        cfg.rach_slots_per_tick = n;
                    }
                    "kc_policy" => {
                        cfg.kc_policy = parse_kc_policy(entry.line, &key, &entry.value)?;
                    }
                    "triplet_reuse" => {
                        cfg.triplet_reuse = parse_bool(entry.line, &key, &entry.value)?;
                    }
                    "hardened_allow_a51" => {
                        cfg.hardened_allow_a51 = parse_bool(entry.line, &key, &entry.value)?;
                    }
                    _ => return Err(ScenarioError::UnknownKey { line: entry.line, key }),
                },
                ["ms", id, field] => {
                    if !ident_ok(id) {
                        return Err(ScenarioError::BadValue {
                            line: entry.line,
                            key: key.clone(),
                            why: "station id must be lowercase letters, digits, `_` or `-`"
                                .into(),
                        });
                    }
                    if !matches!(*field, "imsi" | "ki" | "lat" | "lon") {
                        return Err(ScenarioError::UnknownKey { line: entry.line, key });
                    }
                    ms_fields
                        .entry((*id).to_owned())
                        .or_default()
                        .insert((*field).to_owned(), entry);
                }
                ["attack", kind, param] => {
                    let kind = (*kind).to_owned();
                    if !attack_fields.contains_key(&kind) {
                        attack_order.push(kind.clone());
                        attack_fields.insert(kind.clone(), (entry.line, BTreeMap::new()));
                    }
                    attack_fields
                        .get_mut(&kind)
                        .unwrap()
                        .1
                        .insert((*param).to_owned(), entry);
                }
                _ => return Err(ScenarioError::UnknownKey { line: entry.line, key }),
            }
        }

        let name = name.ok_or_else(|| ScenarioError::Missing("name".into()))?;

        // Stations.
        let mut stations = Vec::new();
        for (id, fields) in &ms_fields {
            let imsi_entry = fields
                .get("imsi")
                .ok_or_else(|| ScenarioError::Missing(format!("ms.{id}.imsi")))?;
            let imsi = Imsi::new(&imsi_entry.value).map_err(|_| ScenarioError::BadValue {
                line: imsi_entry.line,
                key: format!("ms.{id}.imsi"),
                why: "expected exactly 15 decimal digits".into(),
            })?;
            let ki_entry = fields
                .get("ki")
                .ok_or_else(|| ScenarioError::Missing(format!("ms.{id}.ki")))?;
            let ki = parse_ki(ki_entry.line, &format!("ms.{id}.ki"), &ki_entry.value)?;
            let lat = match fields.get("lat") {
                Some(e) => parse_micro(e.line, &format!("ms.{id}.lat"), &e.value)?,
                None => 0,
            };
            let lon = match fields.get("lon") {
                Some(e) => parse_micro(e.line, &format!("ms.{id}.lon"), &e.value)?,
                None => 0,
            };
            stations.push(StationDecl { id: id.clone(), imsi, ki, lat, lon });
        }

        // Attacks, in declaration order.
        let station_ids: Vec<&str> = stations.iter().map(|s| s.id.as_str()).collect();
        let mut attacks = Vec::new();
        for kind in &attack_order {
            let (first_line, fields) = &attack_fields[kind];
            attacks.push(build_attack(kind, *first_line, fields, &station_ids)?);
        }

        Ok(Scenario { name, seed, cfg, stations, attacks })
    }

    /// Canonical text form; `parse` of the result reproduces `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut push = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        push(format!("name = {}", self.name));
        push(format!("variant = {}", self.cfg.variant.name()));
        push(format!("seed = {}", self.seed));
        push(String::new());
        push(format!("network.suite = {}", self.cfg.suite.name()));
        push(format!("network.rach_slots_per_tick = {}", self.cfg.rach_slots_per_tick));
        push(format!("network.kc_policy = {}", render_kc_policy(self.cfg.kc_policy)));
        push(format!("network.triplet_reuse = {}", self.cfg.triplet_reuse));
        push(format!("network.hardened_allow_a51 = {}", self.cfg.hardened_allow_a51));
        for s in &self.stations {
            push(String::new());
            push(format!("ms.{}.imsi = {}", s.id, s.imsi));
            push(format!("ms.{}.ki = {}", s.id, hex::encode(s.ki)));
            push(format!("ms.{}.lat = {}", s.id, render_micro(s.lat)));
            push(format!("ms.{}.lon = {}", s.id, render_micro(s.lon)));
        }
        for a in &self.attacks {
            push(String::new());
            for (param, value) in a.params() {
                push(format!("attack.{}.{param} = {value}", a.kind()));
            }
        }
        out
    }
}

fn build_attack(
    kind: &str,
    first_line: usize,
    fields: &BTreeMap<String, Entry>,
    stations: &[&str],
) -> Result<AttackSpec, ScenarioError> {
    let full = |param: &str| format!("attack.{kind}.{param}");
    let known = |names: &[&str]| -> Result<(), ScenarioError> {
        for (param, e) in fields {
            if !names.contains(&param.as_str()) {
                return Err(ScenarioError::UnknownKey { line: e.line, key: full(param) });
            }
        }
        Ok(())
    };
    let required = |param: &str| -> Result<&Entry, ScenarioError> {
        fields.get(param).ok_or_else(|| ScenarioError::Missing(full(param)))
    };
    let target = |param: &str| -> Result<String, ScenarioError> {
        let e = required(param)?;
        if stations.contains(&e.value.as_str()) {
            Ok(e.value.clone())
        } else {
            Err(ScenarioError::UnknownTarget { line: e.line, target: e.value.clone() })
        }
    };

    match kind {
        "fake_bts" => {
            known(&["target", "traffic"])?;
            Ok(AttackSpec::FakeBts {
                target: target("target")?,
                traffic: fields.get("traffic").map(|e| e.value.clone()),
            })
        }
        "mitm_downgrade" => {
            known(&["target", "downgrade_to", "traffic"])?;
            let e = required("downgrade_to")?;
            let suite = CipherSuite::parse(&e.value).ok_or_else(|| ScenarioError::BadValue {
                line: e.line,
                key: full("downgrade_to"),
                why: format!("expected NONE, A5_1, A5_2 or STRONG, got `{}`", e.value),
            })?;
            Ok(AttackSpec::MitmDowngrade {
                target: target("target")?,
                downgrade_to: suite,
                traffic: required("traffic")?.value.clone(),
            })
        }
        "rrlp_locate" => {
            known(&["target"])?;
            Ok(AttackSpec::RrlpLocate { target: target("target")? })
        }
        "sms_spoof" => {
            known(&["target", "originator", "text"])?;
            Ok(AttackSpec::SmsSpoof {
                target: target("target")?,
                originator: required("originator")?.value.clone(),
                text: required("text")?.value.clone(),
            })
        }
        "steal_vectors" => {
            known(&["target"])?;
            Ok(AttackSpec::StealVectors { target: target("target")? })
        }
        "predict_kc" => {
            known(&["target", "sessions"])?;
            let e = required("sessions")?;
            let sessions: u32 = parse_num(e.line, &full("sessions"), &e.value)?;
            if sessions < 3 {
                return Err(ScenarioError::BadValue {
                    line: e.line,
                    key: full("sessions"),
                    why: "at least 3 observation sessions are required".into(),
                });
            }
            Ok(AttackSpec::PredictKc { target: target("target")?, sessions })
        }
        "rach_flood" => {
            known(&["rate", "duration"])?;
            let r = required("rate")?;
            let d = required("duration")?;
            Ok(AttackSpec::RachFlood {
                rate: parse_num(r.line, &full("rate"), &r.value)?,
                duration: parse_num(d.line, &full("duration"), &d.value)?,
            })
        }
        "clone_sim" => {
            known(&["target", "budget", "oracle"])?;
            let b = required("budget")?;
            let o = required("oracle")?;
            let oracle = OracleKind::parse(&o.value).ok_or_else(|| ScenarioError::BadValue {
                line: o.line,
                key: full("oracle"),
                why: format!("expected direct or ota, got `{}`", o.value),
            })?;
            Ok(AttackSpec::CloneSim {
                target: target("target")?,
                budget: parse_num(b.line, &full("budget"), &b.value)?,
                oracle,
            })
        }
        "tmto" => {
            known(&["cipher", "chain_length", "chains"])?;
            let c = required("cipher")?;
            let cipher = CipherSuite::parse(&c.value).ok_or_else(|| ScenarioError::BadValue {
                line: c.line,
                key: full("cipher"),
                why: format!("expected NONE, A5_1, A5_2 or STRONG, got `{}`", c.value),
            })?;
            let l = required("chain_length")?;
            let n = required("chains")?;
            Ok(AttackSpec::Tmto {
                cipher,
                chain_length: parse_num(l.line, &full("chain_length"), &l.value)?,
                chains: parse_num(n.line, &full("chains"), &n.value)?,
            })
        }
        _ => Err(ScenarioError::UnknownKey {
            line: first_line,
            key: format!("attack.{kind}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = "\
# demo scenario
name = demo
variant = LEGACY
seed = 42

network.kc_policy = XOR_RECYCLE:00ff00ff00ff00ff
network.triplet_reuse = true

ms.alice.imsi = 001010000000001
ms.alice.ki = 000102030405060708090a0b0c0d0e0f
ms.alice.lat = 48.858370
ms.alice.lon = 2.294481

attack.fake_bts.target = alice
attack.fake_bts.traffic = meet at dawn
attack.sms_spoof.target = alice
attack.sms_spoof.originator = BANK-0800
attack.sms_spoof.text = your code is 1234
";

    #[test]
    fn parses_a_full_scenario() {
        let s = Scenario::parse(DEMO).unwrap();
        assert_eq!(s.name, "demo");
        assert_eq!(s.seed, 42);
        assert_eq!(s.cfg.variant, ProtocolVariant::Legacy);
        assert_eq!(s.cfg.suite, CipherSuite::A51, "legacy default applies");
        assert_eq!(s.cfg.kc_policy, KcPolicy::XorRecycle(0x00ff_00ff_00ff_00ff));
        assert!(s.cfg.triplet_reuse);
        assert_eq!(s.stations.len(), 1);
        assert_eq!(s.stations[0].lat, 48_858_370);
        assert_eq!(s.stations[0].lon, 2_294_481);
        assert_eq!(s.attacks.len(), 2);
        assert_eq!(s.attacks[0].kind(), "fake_bts");
        assert_eq!(s.attacks[1].kind(), "sms_spoof");
    }

    #[test]
    fn hardened_default_suite_is_strong() {
        let s = Scenario::parse("name = h\nvariant = HARDENED\nms.a.imsi = 001010000000001\nms.a.ki = 000102030405060708090a0b0c0d0e0f\n").unwrap();
        assert_eq!(s.cfg.suite, CipherSuite::Strong);
        assert_eq!(s.seed, 0, "seed defaults to zero");
    }

    #[test]
    fn render_parse_round_trip_is_identity() {
        let s = Scenario::parse(DEMO).unwrap();
        let text = s.render();
        let s2 = Scenario::parse(&text).unwrap();
        assert_eq!(s, s2);
        assert_eq!(text, s2.render());
    }

    #[test]
    fn error_cases_name_their_line() {
        // No equals sign.
        let e = Scenario::parse("name = x\nvariant = LEGACY\nbogus line\n").unwrap_err();
        assert_eq!(e, ScenarioError::Syntax { line: 3 });

        // Unknown network key.
        let e = Scenario::parse("name = x\nvariant = LEGACY\nnetwork.frequency = 900\n")
            .unwrap_err();
        assert!(matches!(e, ScenarioError::UnknownKey { line: 3, .. }), "{e}");

        // Unknown attack kind.
        let e = Scenario::parse("name = x\nvariant = LEGACY\nattack.teleport.target = a\n")
            .unwrap_err();
        assert!(matches!(e, ScenarioError::UnknownKey { line: 3, .. }), "{e}");

        // Duplicate key.
        let e = Scenario::parse("name = x\nname = y\nvariant = LEGACY\n").unwrap_err();
        assert_eq!(e, ScenarioError::Duplicate { line: 2, key: "name".into() });

        // Negative chain length.
        let e = Scenario::parse(
            "name = x\nvariant = LEGACY\nattack.tmto.cipher = A5_1\nattack.tmto.chain_length = -1\nattack.tmto.chains = 8\n",
        )
        .unwrap_err();
        assert!(
            matches!(e, ScenarioError::BadValue { line: 4, .. }),
            "negative sizes must name their line: {e}"
        );

        // Undeclared target.
        let e = Scenario::parse("name = x\nvariant = LEGACY\nattack.rrlp_locate.target = ghost\n")
            .unwrap_err();
        assert_eq!(e, ScenarioError::UnknownTarget { line: 3, target: "ghost".into() });

        // Too few prediction sessions.
        let e = Scenario::parse(
            "name = x\nvariant = LEGACY\nms.a.imsi = 001010000000001\nms.a.ki = 000102030405060708090a0b0c0d0e0f\nattack.predict_kc.target = a\nattack.predict_kc.sessions = 2\n",
        )
        .unwrap_err();
        assert!(matches!(e, ScenarioError::BadValue { line: 6, .. }), "{e}");

        // Missing variant.
        let e = Scenario::parse("name = x\n").unwrap_err();
        assert_eq!(e, ScenarioError::Missing("variant".into()));

        // Station without key material.
        let e = Scenario::parse("name = x\nvariant = LEGACY\nms.a.imsi = 001010000000001\n")
            .unwrap_err();
        assert_eq!(e, ScenarioError::Missing("ms.a.ki".into()));
    }

    #[test]
    fn coordinates_parse_as_fixed_point() {
        let line = |v: &str| format!("name = x\nvariant = LEGACY\nms.a.imsi = 001010000000001\nms.a.ki = 000102030405060708090a0b0c0d0e0f\nms.a.lat = {v}\n");
        let lat = |v: &str| Scenario::parse(&line(v)).map(|s| s.stations[0].lat);
        assert_eq!(lat("48.858370").unwrap(), 48_858_370);
        assert_eq!(lat("-2.5").unwrap(), -2_500_000);
        assert_eq!(lat("7").unwrap(), 7_000_000);
        assert_eq!(lat("0.000001").unwrap(), 1);
        assert!(lat("1.2345678").is_err(), "seven fraction digits");
        assert!(lat("north").is_err());
        assert_eq!(render_micro(-2_500_000), "-2.500000");
        assert_eq!(render_micro(48_858_370), "48.858370");
    }
}
