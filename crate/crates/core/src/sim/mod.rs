//! Discrete-time radio-interface simulator.
//!
//! A [`World`] holds subscriber handsets, the genuine network with its
//! authority core, optionally a rogue base station, and optionally an
//! attacker port that can observe, drop, rewrite, and inject frames.
//! Time advances in ticks; a frame sent during tick `t` is delivered at
//! tick `t + 1`. All randomness flows from one seeded generator, so a
//! run is a pure function of (configuration, seed) and traces are
//! byte-reproducible.

pub mod fake;
pub mod ms;
pub mod msg;
pub mod net;

use std::collections::VecDeque;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::auth::{frame_mac, SessionKey};
use crate::bits::xor_bits;
use crate::cipher::{
    a51_frame, a52_frame, strong_keystream, CipherError, CipherSuite, KeystreamFrame, HALF_BITS,
};

pub use fake::{FakeBts, FakeMode};
pub use ms::{MobileStation, MsPhase, SmsRecord};
pub use msg::{EntityId, Frame, Identity, IdentityKind, UmMessage};
pub use net::{AttachRecord, AuthVector, AuthorityCore, NetworkSide};

/// Which protocol generation the world runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolVariant {
    /// One-sided authentication, unauthenticated signalling, weak
    /// stream ciphers, silent cleartext fallback.
    Legacy,
    /// Mutual authentication with nonces, tagged signalling from the
    /// challenge onward, strong keystream, no cleartext fallback.
    Hardened,
}

impl ProtocolVariant {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolVariant::Legacy => "LEGACY",
            ProtocolVariant::Hardened => "HARDENED",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "LEGACY" => Some(ProtocolVariant::Legacy),
            "HARDENED" => Some(ProtocolVariant::Hardened),
            _ => None,
        }
    }
}

/// How the network derives the session key for repeat customers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KcPolicy {
    /// Run the key-agreement algorithm every session.
    Fresh,
    /// Systemic shortcut: after the first session, both sides derive
    /// the next key by XORing the previous one with a fixed mask.
    /// The hardened network refuses to implement this.
    XorRecycle(u64),
}

/// Terminal result of one attach procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttachStatus {
    Attached,
    /// Network rejected the subscriber's response.
    AuthMsFailed,
    /// Subscriber rejected the network: missing/bad proof, bad tag, or
    /// an unacceptable cipher command.
    AuthNetworkFailed,
    /// A nonce or challenge was seen before.
    ReplayRejected,
    /// No channel won (or procedure stalled) within the deadline.
    RachTimeout,
}

impl AttachStatus {
    pub fn name(self) -> &'static str {
        match self {
            AttachStatus::Attached => "ATTACHED",
            AttachStatus::AuthMsFailed => "AUTH_MS_FAILED",
            AttachStatus::AuthNetworkFailed => "AUTH_NETWORK_FAILED",
            AttachStatus::ReplayRejected => "REPLAY_REJECTED",
            AttachStatus::RachTimeout => "RACH_TIMEOUT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttachOutcome {
    pub status: AttachStatus,
    pub suite: Option<CipherSuite>,
    pub ticks: u64,
}

/// Static world parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldConfig {
    pub variant: ProtocolVariant,
    /// Cipher the network commands once authentication succeeds.
    pub suite: CipherSuite,
    pub rach_slots_per_tick: u32,
    pub kc_policy: KcPolicy,
    /// Legacy-only corner: reuse a cached auth vector instead of
    /// drawing a fresh one per session.
    pub triplet_reuse: bool,
    /// Hardened stations normally insist on the strong suite; this
    /// compatibility switch lets them accept the better legacy cipher.
    pub hardened_allow_a51: bool,
    /// Ticks a station keeps retrying random access before giving up.
    pub rach_timeout: u64,
    /// Orchestration cap on one attach procedure.
    pub attach_limit: u64,
    pub trace_enabled: bool,
}

impl WorldConfig {
    pub fn legacy() -> Self {
        WorldConfig {
            variant: ProtocolVariant::Legacy,
            suite: CipherSuite::A51,
            rach_slots_per_tick: 2,
            kc_policy: KcPolicy::Fresh,
            triplet_reuse: false,
            hardened_allow_a51: false,
            rach_timeout: 50,
            attach_limit: 120,
            trace_enabled: true,
        }
    }

    pub fn hardened() -> Self {
        WorldConfig {
            variant: ProtocolVariant::Hardened,
            suite: CipherSuite::Strong,
            ..WorldConfig::legacy()
        }
    }
}

/// What an attacker port decided about one in-flight frame.
pub enum TapAction {
    Pass,
    Drop,
    /// Deliver a different message in the envelope; the original tag
    /// (if any) stays attached, as a splicing attacker cannot recompute
    /// it.
    Modify(UmMessage),
}

/// An active attacker on the radio path. The port sees every delivered
/// frame (radio is a broadcast medium), may intervene on each, and may
/// put frames of its own on the air each tick.
pub trait AttackerPort: Send {
    fn on_frame(&mut self, clock: u64, frame: &Frame) -> TapAction;
    fn inject(&mut self, clock: u64, rng: &mut ChaCha8Rng) -> Vec<Frame>;
    /// Downcast hook so drivers can read harvested state back out.
    fn as_any(&mut self) -> &mut dyn std::any::Any;
}

// ===== Ciphering helpers =====

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDir {
    Down,
    Up,
}

/// Keystream for one frame under a given suite and session key.
pub fn suite_keystream(
    suite: CipherSuite,
    key: &SessionKey,
    frame: u32,
) -> Result<KeystreamFrame, CipherError> {
    match (suite, key) {
        (CipherSuite::A51, SessionKey::Legacy(kc)) => a51_frame(*kc, frame),
        (CipherSuite::A52, SessionKey::Legacy(kc)) => a52_frame(*kc, frame),
        (CipherSuite::Strong, SessionKey::Strong(k)) => strong_keystream(k, frame),
        (CipherSuite::None, _) => Err(CipherError::BadSpec(
            "no keystream exists for the null suite".into(),
        )),
        (s, _) => Err(CipherError::BadSpec(format!(
            "session key type does not match suite {}",
            s.name()
        ))),
    }
}

/// XOR a bit string against per-direction keystream starting at frame
/// `start_frame`, consuming as many frames as the length requires.
/// Returns the transformed bits and the number of frames consumed.
pub fn cipher_bits(
    suite: CipherSuite,
    key: &SessionKey,
    start_frame: u32,
    dir: LinkDir,
    data: &[u8],
) -> Result<(Vec<u8>, u32), CipherError> {
    let mut ks = Vec::with_capacity(data.len());
    let mut frame = start_frame;
    while ks.len() < data.len() {
        let kf = suite_keystream(suite, key, frame)?;
        let half = match dir {
            LinkDir::Down => kf.downlink(),
            LinkDir::Up => kf.uplink(),
        };
        let need = data.len() - ks.len();
        ks.extend_from_slice(&half[..need.min(HALF_BITS)]);
        frame += 1;
    }
    Ok((xor_bits(data, &ks), frame - start_frame))
}

/// Number of cipher frames a payload of `n_bits` occupies.
pub fn frames_for_bits(n_bits: usize) -> u32 {
    (n_bits.max(1)).div_ceil(HALF_BITS) as u32
}

/// Per-message authentication tag: binds direction, the session nonces,
/// and the canonical message body.
pub fn sign_frame(key: &[u8; 16], dir: &str, binding: &[u8], msg: &UmMessage) -> u64 {
    frame_mac(key, dir, binding, &msg.render())
}

pub fn verify_frame(key: &[u8; 16], binding: &[u8], frame: &Frame) -> bool {
    match frame.mac {
        Some(tag) => sign_frame(key, &frame.dir(), binding, &frame.msg) == tag,
        None => false,
    }
}

/// When a strong session key must drive a legacy cipher (compatibility
/// mode), both sides truncate it identically.
pub fn downgrade_key(suite: CipherSuite, key: SessionKey) -> SessionKey {
    match (suite, key) {
        (CipherSuite::A51 | CipherSuite::A52, SessionKey::Strong(k)) => SessionKey::Legacy(
            u64::from_be_bytes([k[0], k[1], k[2], k[3], k[4], k[5], k[6], k[7]]),
        ),
        _ => key,
    }
}

/// Session nonce concatenation used as tag binding material.
pub fn binding_of(
    rand: &[u8; 16],
    net_nonce: &[u8; 16],
    ms_nonce: Option<&[u8; 16]>,
) -> Vec<u8> {
    let mut b = Vec::with_capacity(48);
    b.extend_from_slice(rand);
    b.extend_from_slice(net_nonce);
    if let Some(n) = ms_nonce {
        b.extend_from_slice(n);
    }
    b
}

// ===== The world =====

pub struct World {
    pub clock: u64,
    pub cfg: WorldConfig,
    pub rng: ChaCha8Rng,
    channel: VecDeque<(u64, Frame)>,
    pub stations: std::collections::BTreeMap<String, MobileStation>,
    pub net: NetworkSide,
    pub core: AuthorityCore,
    pub fake: Option<FakeBts>,
    pub attacker: Option<Box<dyn AttackerPort>>,
    pub trace: Vec<String>,
}

impl World {
    pub fn new(cfg: WorldConfig, seed: u64) -> Self {
        use rand::SeedableRng;
        let algo = match cfg.variant {
            ProtocolVariant::Legacy => crate::auth::AuthAlgo::MiniComp128,
            ProtocolVariant::Hardened => crate::auth::AuthAlgo::Hardened,
        };
        World {
            clock: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            channel: VecDeque::new(),
            stations: std::collections::BTreeMap::new(),
            net: NetworkSide::new(cfg.variant),
            core: AuthorityCore::new(algo),
            fake: None,
            attacker: None,
            trace: Vec::new(),
            cfg,
        }
    }

    /// Provision a subscriber in both the handset fleet and the
    /// authority core.
    pub fn add_station(&mut self, id: &str, profile: crate::auth::SimProfile, lat: i64, lon: i64) {
        self.core.register(&profile);
        self.stations
            .insert(id.to_owned(), MobileStation::new(id, profile, lat, lon, self.cfg.variant));
    }

    /// Queue a frame for delivery next tick.
    pub fn send(&mut self, frame: Frame) {
        self.channel.push_back((self.clock + 1, frame));
    }

    fn trace_frame(&mut self, frame: &Frame, action: &str) {
        if self.cfg.trace_enabled {
            self.trace.push(format!(
                "tick={} dir={} msg={} attacker={}",
                self.clock,
                frame.dir(),
                frame.render_msg(),
                action
            ));
        }
    }

    /// Advance one tick: attacker injections, frame delivery through
    /// the attacker tap, random-access resolution, station timers.
    pub fn step(&mut self) {
        // Attacker transmissions enter the air now and are delivered
        // within this same tick.
        if let Some(att) = self.attacker.as_mut() {
            let mut frames = att.inject(self.clock, &mut self.rng);
            for f in frames.drain(..) {
                let mut f = f;
                f.injected = true;
                self.channel.push_back((self.clock, f));
            }
        }

        // Deliver everything due this tick, in queue order. Handlers
        // may enqueue responses, which land next tick.
        let mut due = Vec::new();
        let mut rest = VecDeque::new();
        while let Some((t, f)) = self.channel.pop_front() {
            if t <= self.clock {
                due.push(f);
            } else {
                rest.push_back((t, f));
            }
        }
        self.channel = rest;

        for mut frame in due {
            let mut action_tag = if frame.injected { "inject" } else { "pass" };
            if let Some(att) = self.attacker.as_mut() {
                if !frame.injected {
                    match att.on_frame(self.clock, &frame) {
                        TapAction::Pass => {}
                        TapAction::Drop => {
                            self.trace_frame(&frame, "drop");
                            continue;
                        }
                        TapAction::Modify(m) => {
                            frame.msg = m;
                            action_tag = "mod";
                        }
                    }
                } else {
                    // The port still observes its own transmissions.
                    let _ = att.on_frame(self.clock, &frame);
                }
            }
            self.trace_frame(&frame, action_tag);

            let responses: Vec<Frame> = match &frame.dst {
                EntityId::Ms(id) => match self.stations.get_mut(id) {
                    Some(ms) => ms.handle_frame(&frame, self.clock, &self.cfg, &mut self.rng),
                    None => Vec::new(),
                },
                EntityId::Net => self.net.handle_frame(
                    &frame,
                    self.clock,
                    &self.cfg,
                    &mut self.core,
                    &mut self.rng,
                ),
                EntityId::Fake => match self.fake.as_mut() {
                    Some(fb) => fb.handle_frame(&frame, self.clock, &mut self.rng),
                    None => Vec::new(),
                },
                // Frames to the attacker were already observed above.
                EntityId::Atk => Vec::new(),
            };
            for r in responses {
                self.send(r);
            }
        }

        // End-of-tick random access: contenders that arrived this tick
        // draw slots; unique winners get assignments next tick.
        let rach_out =
            self.net
                .resolve_rach(self.clock, &self.cfg, &mut self.rng);
        for r in rach_out {
            self.send(r);
        }

        // Rogue base station housekeeping (pending chosen challenges).
        if let Some(fb) = self.fake.as_mut() {
            let out = fb.maintenance(self.clock);
            for r in out {
                self.send(r);
            }
        }

        // Station timers: retries, backoff, deadlines.
        let ids: Vec<String> = self.stations.keys().cloned().collect();
        for id in ids {
            let out = {
                let ms = self.stations.get_mut(&id).unwrap();
                ms.maintenance(self.clock, &self.cfg, &mut self.rng)
            };
            for r in out {
                self.send(r);
            }
        }

        self.clock += 1;
    }

    pub fn step_n(&mut self, n: u64) {
        for _ in 0..n {
            self.step();
        }
    }

    /// Drive one full attach procedure for a station and report how it
    /// ended. Reads both sides: the handset's verdict wins, otherwise
    /// the network's log entry for this peer, otherwise a timeout.
    pub fn attach(&mut self, id: &str) -> AttachOutcome {
        let start = self.clock;
        let log_mark = self.net.attach_log.len();
        {
            let frames = {
                let ms = self.stations.get_mut(id).expect("unknown station id");
                ms.begin_attach(self.clock, &mut self.rng)
            };
            for f in frames {
                self.send(f);
            }
        }
        loop {
            self.step();
            let ms_done = self.stations[id].attach_status.is_some();
            let net_done = self.net.attach_log[log_mark..]
                .iter()
                .any(|r| r.peer == EntityId::Ms(id.to_owned()) && r.status != AttachStatus::Attached);
            if ms_done || net_done || self.clock - start > self.cfg.attach_limit {
                break;
            }
        }
        // Let trailing frames (identity reallocation, first traffic)
        // settle so callers see a quiescent world.
        self.step_n(4);

        let ms = &self.stations[id];
        let status = ms
            .attach_status
            .or_else(|| {
                self.net.attach_log[log_mark..]
                    .iter()
                    .find(|r| r.peer == EntityId::Ms(id.to_owned()))
                    .map(|r| r.status)
            })
            .unwrap_or(AttachStatus::RachTimeout);
        AttachOutcome {
            status,
            suite: ms.session_suite(),
            ticks: self.clock - start,
        }
    }

    /// Tear down a station's radio session on both sides.
    pub fn detach(&mut self, id: &str) {
        if let Some(ms) = self.stations.get_mut(id) {
            ms.reset_radio();
        }
        self.net.drop_session(&EntityId::Ms(id.to_owned()));
    }

    /// Ensure a station currently holds a live session with the real
    /// network (attacks use this to restore preconditions).
    pub fn ensure_attached(&mut self, id: &str) -> AttachOutcome {
        let ok = {
            let ms = &self.stations[id];
            ms.phase() == MsPhase::Attached && ms.camped_on == EntityId::Net
        };
        if ok {
            let ms = &self.stations[id];
            return AttachOutcome {
                status: AttachStatus::Attached,
                suite: ms.session_suite(),
                ticks: 0,
            };
        }
        self.detach(id);
        if let Some(ms) = self.stations.get_mut(id) {
            ms.camped_on = EntityId::Net;
        }
        self.attach(id)
    }

    /// Submit a short message at the network ingress. `authenticated`
    /// models whether the submitting party proved the claimed
    /// originator; the hardened network refuses unproven submissions.
    pub fn submit_sms(&mut self, target_id: &str, originator: &str, text: &[u8], authenticated: bool) {
        let imsi = self.stations[target_id].profile.imsi.clone();
        let frames = self
            .net
            .submit_sms(&imsi, originator, text, authenticated, &self.cfg);
        for f in frames {
            self.send(f);
        }
    }

    /// The genuine network queries a subscriber's position (tagged
    /// under the hardened protocol).
    pub fn request_location(&mut self, target_id: &str) {
        let imsi = self.stations[target_id].profile.imsi.clone();
        let frames = self.net.request_location(&imsi, &self.cfg);
        for f in frames {
            self.send(f);
        }
    }

    /// Point a station's camping at the rogue cell (or back). Models
    /// the rogue outpowering the genuine downlink.
    pub fn set_camping(&mut self, id: &str, on: EntityId) {
        if let Some(ms) = self.stations.get_mut(id) {
            ms.camped_on = on;
        }
    }

    /// Draw 16 fresh bytes from the world generator.
    pub fn draw_nonce(&mut self) -> [u8; 16] {
        let mut b = [0u8; 16];
        self.rng.fill_bytes(&mut b);
        b
    }
}
