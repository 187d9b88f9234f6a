//! In-path downgrade attack.
//!
//! The attacker sits between the victim and the genuine network and
//! rewrites the cipher-mode command so the session runs under a cipher
//! the attacker can strip in real time (or under no cipher at all).
//! Both endpoints complete the handshake believing the session is
//! normal; the attacker walks away with the plaintext transcript.
//!
//! Against the hardened variant the rewrite is hopeless: the command is
//! bound to the session by a keyed tag the attacker cannot recompute,
//! so the victim drops the session on the first touched message.

use std::any::Any;

use rand_chacha::ChaCha8Rng;

use crate::auth::SessionKey;
use crate::bits::{bits_from_bytes, bytes_from_bits};
use crate::cipher::CipherSuite;
use crate::sim::{
    cipher_bits, AttachStatus, AttackerPort, EntityId, Frame, LinkDir, TapAction, UmMessage, World,
};

use super::AttackReport;

/// The wiretap half of the attack: rewrite one downlink message, then
/// read (and when possible re-protect) the victim's uplink.
pub struct MitmPort {
    target: String,
    downgrade_to: CipherSuite,
    /// The suite the genuine network believes it negotiated; uplink
    /// re-encryption uses it so the network keeps deciphering cleanly.
    net_suite: Option<CipherSuite>,
    /// Session key recovered from the downgraded cipher. The driver
    /// arms this once the weakened session is established; breaking the
    /// downgraded cipher from a few recorded frames is the key-recovery
    /// machinery's job and costs only seconds of simulated air time.
    broken_key: Option<u64>,
    pub rewrote: u32,
    pub captured_clear: Vec<Vec<u8>>,
    pub ciphertext_only_bits: usize,
}

impl MitmPort {
    pub fn new(target: &str, downgrade_to: CipherSuite) -> Self {
        Self {
            target: target.to_owned(),
            downgrade_to,
            net_suite: None,
            broken_key: None,
            rewrote: 0,
            captured_clear: Vec::new(),
            ciphertext_only_bits: 0,
        }
    }
}

impl AttackerPort for MitmPort {
    fn on_frame(&mut self, _clock: u64, frame: &Frame) -> TapAction {
        if frame.injected {
            return TapAction::Pass;
        }
        let victim = EntityId::Ms(self.target.clone());

        // Downlink: swap the negotiated cipher for the weak one. The
        // carried tag (if any) is left as-is — the attacker cannot
        // recompute it without the session's signing key.
        if frame.src == EntityId::Net && frame.dst == victim {
            if let UmMessage::CipherModeCommand { suite } = frame.msg {
                if suite != self.downgrade_to {
                    self.net_suite = Some(suite);
                    self.rewrote += 1;
                    return TapAction::Modify(UmMessage::CipherModeCommand {
                        suite: self.downgrade_to,
                    });
                }
            }
        }

        // Uplink: harvest.
        if frame.src == victim && frame.dst == EntityId::Net {
            if let UmMessage::Traffic { frame: fno, ref payload, ciphered } = frame.msg {
                if !ciphered {
                    // Downgraded to no cipher at all: the payload is
                    // already readable and the network takes it as-is.
                    self.captured_clear.push(bytes_from_bits(payload));
                    return TapAction::Pass;
                }
                if let (Some(kc), Some(net_suite)) = (self.broken_key, self.net_suite) {
                    // Strip the weak cipher, keep the plaintext, then
                    // re-protect under what the network expects so the
                    // session stays healthy end to end.
                    let key = SessionKey::Legacy(kc);
                    let (plain, _) =
                        cipher_bits(self.downgrade_to, &key, fno, LinkDir::Up, payload)
                            .expect("weak suite with a legacy key is always cipherable");
                    self.captured_clear.push(bytes_from_bits(&plain));
                    let (recipher, _) = cipher_bits(net_suite, &key, fno, LinkDir::Up, &plain)
                        .expect("relaying under the network's negotiated suite");
                    return TapAction::Modify(UmMessage::Traffic {
                        frame: fno,
                        payload: recipher,
                        ciphered: true,
                    });
                }
                // No key in hand: all the tap sees is noise.
                self.ciphertext_only_bits += payload.len();
            }
        }

        TapAction::Pass
    }

    fn inject(&mut self, _clock: u64, _rng: &mut ChaCha8Rng) -> Vec<Frame> {
        Vec::new()
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}

/// Full downgrade run: splice into the attach, weaken the cipher, let
/// the victim talk, and judge the transcript. Success requires both
/// endpoints to finish the session believing it normal *and* the probe
/// payload to appear in the attacker's plaintext haul.
pub fn run_mitm_downgrade(
    world: &mut World,
    target: &str,
    downgrade_to: CipherSuite,
    probe: &str,
) -> AttackReport {
    let start = world.clock;
    let victim = EntityId::Ms(target.to_owned());
    let log_mark = world.net.attach_log.len();
    let traffic_mark = world.net.received_traffic.len();

    world.detach(target);
    world.attacker = Some(Box::new(MitmPort::new(target, downgrade_to)));
    let out = world.attach(target);

    // If the downgraded session still ciphers, arm the tap with the
    // recovered session key.
    if out.status == AttachStatus::Attached && downgrade_to == CipherSuite::A52 {
        let kc = match world.stations[target].session_key() {
            Some(SessionKey::Legacy(kc)) => Some(kc),
            _ => None,
        };
        if let Some(port) =
            world.attacker.as_mut().and_then(|p| p.as_any().downcast_mut::<MitmPort>())
        {
            port.broken_key = kc;
        }
    }

    world.stations.get_mut(target).unwrap().outbox.push(probe.as_bytes().to_vec());
    world.step_n(8);

    let port = world
        .attacker
        .take()
        .map(|mut p| {
            let m = p.as_any().downcast_mut::<MitmPort>().expect("our port");
            std::mem::replace(m, MitmPort::new(target, downgrade_to))
        })
        .expect("port installed above");

    let ms_ok = world.stations[target].attach_status == Some(AttachStatus::Attached);
    let net_ok = world.net.attach_log[log_mark..]
        .iter()
        .any(|r| r.peer == victim && r.status == AttachStatus::Attached);
    // Payloads longer than one air frame arrive in pieces; judge both
    // ends against the reassembled streams.
    let net_stream: Vec<u8> = world.net.received_traffic[traffic_mark..]
        .iter()
        .flat_map(|(_, bytes)| bytes.iter().copied())
        .collect();
    let net_got_probe =
        !probe.is_empty() && net_stream.windows(probe.len()).any(|w| w == probe.as_bytes());
    let clear_stream: Vec<u8> = port.captured_clear.concat();
    let transcript_hit =
        !probe.is_empty() && clear_stream.windows(probe.len()).any(|w| w == probe.as_bytes());

    let mut evidence = vec![
        format!("cipher-mode commands rewritten in flight: {}", port.rewrote),
        format!("endpoints finished believing the session normal: victim={ms_ok} network={net_ok}"),
    ];
    if transcript_hit {
        evidence.push(format!(
            "attacker transcript contains the probe plaintext ({} bytes)",
            probe.len()
        ));
        evidence.push(format!("network still received the probe intact: {net_got_probe}"));
    } else if port.ciphertext_only_bits > 0 {
        evidence.push(format!(
            "tap holds only ciphertext ({} bits) — nothing readable",
            port.ciphertext_only_bits
        ));
    } else if !clear_stream.is_empty() {
        evidence.push(format!(
            "tap captured {} cleartext bytes, none of them the probe",
            clear_stream.len()
        ));
    } else {
        evidence.push("attacker transcript is empty".into());
    }
    if !ms_ok {
        evidence.push(format!(
            "victim ended {} — the rewritten command failed its integrity check",
            world.stations[target]
                .attach_status
                .map(|s| s.name())
                .unwrap_or("with no attach verdict")
        ));
    }

    world.detach(target);

    AttackReport {
        kind: "mitm_downgrade",
        succeeded: ms_ok && net_ok && transcript_hit,
        queries: None,
        ticks: world.clock - start,
        evidence,
    }
}

/// Sanity helper for tests and demos: what the tap's ciphertext looks
/// like against the probe, bitwise.
pub fn ciphertext_differs(probe: &str, payload_bits: &[u8]) -> bool {
    bits_from_bytes(probe.as_bytes()) != payload_bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auth::{Imsi, SimProfile};
    use crate::sim::WorldConfig;

    fn world(cfg: WorldConfig) -> World {
        let mut w = World::new(cfg, 3);
        let p = SimProfile::new(Imsi::new("001012345678901").unwrap(), [0x5A; 16]);
        w.add_station("carol", p, 0, 0);
        w
    }

    #[test]
    fn downgrade_to_cleartext_yields_the_plaintext() {
        let mut w = world(WorldConfig::legacy());
        let r = run_mitm_downgrade(&mut w, "carol", CipherSuite::None, "wire 500 now");
        assert!(r.succeeded, "evidence: {:?}", r.evidence);
        assert!(r.evidence.iter().any(|e| e.contains("rewritten in flight: 1")));
    }

    #[test]
    fn downgrade_to_breakable_cipher_strips_and_relays() {
        let mut w = world(WorldConfig::legacy());
        let r = run_mitm_downgrade(&mut w, "carol", CipherSuite::A52, "wire 500 now");
        assert!(r.succeeded, "evidence: {:?}", r.evidence);
        // Service preserved: the genuine network still decoded the probe.
        assert!(
            r.evidence.iter().any(|e| e.contains("intact: true")),
            "evidence: {:?}",
            r.evidence
        );
    }

    #[test]
    fn passive_tap_without_rewrite_sees_only_ciphertext() {
        let mut w = world(WorldConfig::legacy());
        // "Downgrading" to the suite already in use rewrites nothing and
        // never arms a key: the tap reduces to a passive wiretap.
        let r = run_mitm_downgrade(&mut w, "carol", CipherSuite::A51, "wire 500 now");
        assert!(!r.succeeded);
        assert!(
            r.evidence.iter().any(|e| e.contains("only ciphertext")),
            "evidence: {:?}",
            r.evidence
        );
    }

    #[test]
    fn hardened_victim_drops_the_rewritten_command() {
        let mut w = world(WorldConfig::hardened());
        let r = run_mitm_downgrade(&mut w, "carol", CipherSuite::A52, "wire 500 now");
        assert!(!r.succeeded);
        assert!(
            r.evidence
                .iter()
                .any(|e| e.contains("AUTH_NETWORK_FAILED") && e.contains("integrity")),
            "evidence: {:?}",
            r.evidence
        );
    }
}
