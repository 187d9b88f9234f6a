//! Subscriber handset state machine.
//!
//! The same chassis runs both protocol generations; the variant decides
//! how trusting it is. The legacy station answers any challenge its
//! serving cell sends, reveals its permanent identity on request, obeys
//! unauthenticated cipher commands (including "no cipher"), and accepts
//! cleartext payloads without complaint. The hardened station demands
//! proof of the network's identity bound to fresh nonces, refuses
//! untagged or replayed signalling, and never falls back to cleartext.

use std::collections::HashSet;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use crate::auth::{
    hardened_a3a8, mac_key, mini_comp128, network_sres, SessionKey, SimProfile,
};
use crate::bits::{bits_from_bytes, bytes_from_bits};
use crate::cipher::CipherSuite;

use super::msg::{EntityId, Frame, Identity, IdentityKind, UmMessage};
use super::{
    binding_of, cipher_bits, downgrade_key, sign_frame, verify_frame, AttachStatus, KcPolicy,
    LinkDir, ProtocolVariant, WorldConfig,
};

/// Radio-procedure phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsPhase {
    Idle,
    /// Random-access burst sent, waiting for a channel grant.
    WaitAssign,
    /// On a dedicated channel, running identity/auth/cipher setup.
    Registering,
    Attached,
}

/// A short message as the user saw it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmsRecord {
    pub originator: String,
    pub text: Vec<u8>,
    /// Whether the delivery was integrity-protected end to end.
    pub authenticated: bool,
}

#[derive(Debug, Clone)]
struct MsSession {
    serving: EntityId,
    rand: Option<[u8; 16]>,
    net_nonce: Option<[u8; 16]>,
    ms_nonce: Option<[u8; 16]>,
    kc: Option<SessionKey>,
    suite: Option<CipherSuite>,
    ul_frames: u32,
    dl_frames: u32,
}

impl MsSession {
    fn new(serving: EntityId) -> Self {
        MsSession {
            serving,
            rand: None,
            net_nonce: None,
            ms_nonce: None,
            kc: None,
            suite: None,
            ul_frames: 0,
            dl_frames: 0,
        }
    }

    fn binding(&self) -> Vec<u8> {
        match (&self.rand, &self.net_nonce) {
            (Some(r), Some(n)) => binding_of(r, n, self.ms_nonce.as_ref()),
            _ => Vec::new(),
        }
    }
}

pub struct MobileStation {
    pub id: String,
    pub profile: SimProfile,
    pub lat: i64,
    pub lon: i64,
    pub variant: ProtocolVariant,
    /// Which cell this station currently treats as its network.
    pub camped_on: EntityId,
    pub tmsi: Option<u32>,
    phase: MsPhase,
    session: Option<MsSession>,
    /// Terminal verdict of the attach in progress (cleared by
    /// `begin_attach`).
    pub attach_status: Option<AttachStatus>,
    attach_started: Option<u64>,
    /// Challenge replay memory (hardened).
    seen_rands: HashSet<[u8; 16]>,
    seen_net_nonces: HashSet<[u8; 16]>,
    /// Recycled-key chain state (legacy misbehavior, real network only).
    kc_chain: Option<u64>,
    /// Session key of every completed session with the real network.
    pub kc_history: Vec<SessionKey>,
    pub received_sms: Vec<SmsRecord>,
    pub received_traffic: Vec<Vec<u8>>,
    /// Positioning queries refused for lack of authentication.
    pub location_refusals: u32,
    /// Frames dropped for bad tags, wrong cipher flags, or bad counters.
    pub rejected_frames: u32,
    /// User payloads queued for transmission once attached.
    pub outbox: Vec<Vec<u8>>,
    rach_attempts: u32,
    retry_at: Option<u64>,
    assign_deadline: Option<u64>,
}

impl MobileStation {
    pub fn new(id: &str, profile: SimProfile, lat: i64, lon: i64, variant: ProtocolVariant) -> Self {
        MobileStation {
            id: id.to_owned(),
            profile,
            lat,
            lon,
            variant,
            camped_on: EntityId::Net,
            tmsi: None,
            phase: MsPhase::Idle,
            session: None,
            attach_status: None,
            attach_started: None,
            seen_rands: HashSet::new(),
            seen_net_nonces: HashSet::new(),
            kc_chain: None,
            kc_history: Vec::new(),
            received_sms: Vec::new(),
            received_traffic: Vec::new(),
            location_refusals: 0,
            rejected_frames: 0,
            outbox: Vec::new(),
            rach_attempts: 0,
            retry_at: None,
            assign_deadline: None,
        }
    }

    pub fn phase(&self) -> MsPhase {
        self.phase
    }

    pub fn session_suite(&self) -> Option<CipherSuite> {
        self.session.as_ref().and_then(|s| s.suite)
    }

    /// Lab instrumentation: the key this station currently ciphers
    /// under. Attack drivers read it to stand in for keystream-level
    /// key recovery against the weak ciphers (which falls out of a few
    /// ciphered frames in real time); it never reaches traces or
    /// reports.
    pub fn session_key(&self) -> Option<SessionKey> {
        self.session.as_ref().and_then(|s| s.kc)
    }

    /// What the user can see about ciphering. Legacy handsets show
    /// nothing — a downgrade is invisible. Hardened handsets display
    /// the active suite.
    pub fn cipher_indicator(&self) -> Option<CipherSuite> {
        match self.variant {
            ProtocolVariant::Legacy => None,
            ProtocolVariant::Hardened => {
                if self.phase == MsPhase::Attached {
                    self.session_suite()
                } else {
                    None
                }
            }
        }
    }

    fn me(&self) -> EntityId {
        EntityId::Ms(self.id.clone())
    }

    fn imei(&self) -> String {
        format!("35{}", &self.profile.imsi.as_str()[2..])
    }

    /// Drop the radio session without touching long-lived state
    /// (identity, replay memory, key chain, user data).
    pub fn reset_radio(&mut self) {
        self.phase = MsPhase::Idle;
        self.session = None;
        self.attach_status = None;
        self.attach_started = None;
        self.rach_attempts = 0;
        self.retry_at = None;
        self.assign_deadline = None;
    }

    fn fail(&mut self, status: AttachStatus) {
        self.attach_status = Some(status);
        self.phase = MsPhase::Idle;
        self.session = None;
        self.retry_at = None;
        self.assign_deadline = None;
    }

    /// Start an attach toward the camped cell.
    pub fn begin_attach(&mut self, clock: u64, rng: &mut ChaCha8Rng) -> Vec<Frame> {
        self.attach_status = None;
        self.attach_started = Some(clock);
        self.rach_attempts = 0;
        self.retry_at = None;
        self.session = None;
        self.phase = MsPhase::WaitAssign;
        self.channel_request(clock, rng)
    }

    fn channel_request(&mut self, clock: u64, rng: &mut ChaCha8Rng) -> Vec<Frame> {
        self.assign_deadline = Some(clock + 4);
        vec![Frame::new(
            self.me(),
            self.camped_on.clone(),
            UmMessage::ChannelRequest { reference: rng.gen() },
        )]
    }
    // The helper above returns Vec for uniformity with call sites.

    fn sign(&self, dst: &EntityId, binding: &[u8], msg: UmMessage) -> Frame {
        let key = mac_key(&self.profile.ki);
        let dir = format!("{}->{}", self.me(), dst);
        let tag = sign_frame(&key, &dir, binding, &msg);
        Frame::new(self.me(), dst.clone(), msg).with_mac(tag)
    }

    fn verify(&self, binding: &[u8], frame: &Frame) -> bool {
        verify_frame(&mac_key(&self.profile.ki), binding, frame)
    }

    /// Process one delivered frame, possibly emitting responses.
    pub fn handle_frame(
        &mut self,
        f: &Frame,
        clock: u64,
        cfg: &WorldConfig,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Frame> {
        // Only the camped cell is audible; everything else is ignored
        // (an injector therefore spoofs the camped cell's address).
        if f.src != self.camped_on {
            return Vec::new();
        }
        match &f.msg {
            UmMessage::PagingRequest { identity } => self.on_paged(identity, clock, rng),
            UmMessage::ImmediateAssignment => {
                if self.phase == MsPhase::WaitAssign {
                    self.phase = MsPhase::Registering;
                    self.session = Some(MsSession::new(f.src.clone()));
                    self.retry_at = None;
                    self.assign_deadline = None;
                }
                Vec::new()
            }
            UmMessage::IdentityRequest { kind } => self.on_identity_request(*kind),
            UmMessage::AuthRequest { rand, net_sres, net_nonce } => {
                self.on_auth_request(f, rand, net_sres, net_nonce, cfg, rng)
            }
            UmMessage::CipherModeCommand { suite } => self.on_cipher_command(f, *suite, cfg),
            UmMessage::TmsiRealloc { tmsi } => {
                if self.phase == MsPhase::Attached {
                    if self.variant == ProtocolVariant::Hardened {
                        let binding = self.session.as_ref().map(|s| s.binding()).unwrap_or_default();
                        if !self.verify(&binding, f) {
                            self.rejected_frames += 1;
                            return Vec::new();
                        }
                    }
                    self.tmsi = Some(*tmsi);
                }
                Vec::new()
            }
            UmMessage::Traffic { frame, payload, ciphered } => {
                self.on_traffic(f, *frame, payload, *ciphered);
                Vec::new()
            }
            UmMessage::SmsDeliver { originator, text, ciphered, frame } => {
                self.on_sms(f, originator, text, *ciphered, *frame);
                Vec::new()
            }
            UmMessage::LocationRequest => self.on_location_request(f),
            _ => Vec::new(),
        }
    }

    fn on_paged(&mut self, identity: &Identity, clock: u64, rng: &mut ChaCha8Rng) -> Vec<Frame> {
        let me = match identity {
            Identity::Imsi(i) => *i == self.profile.imsi,
            Identity::Tmsi(t) => self.tmsi == Some(*t),
            Identity::Imei(_) => false,
        };
        if me && self.phase == MsPhase::Idle {
            self.begin_attach(clock, rng)
        } else {
            Vec::new()
        }
    }

    fn on_identity_request(&mut self, kind: IdentityKind) -> Vec<Frame> {
        if self.phase != MsPhase::Registering {
            return Vec::new();
        }
        let serving = self.session.as_ref().unwrap().serving.clone();
        let identity = match kind {
            IdentityKind::Imei => Identity::Imei(self.imei()),
            IdentityKind::Imsi => match (self.variant, self.tmsi) {
                // A hardened station never repeats its permanent
                // identity once it holds a temporary one — whoever is
                // asking.
                (ProtocolVariant::Hardened, Some(t)) => Identity::Tmsi(t),
                _ => Identity::Imsi(self.profile.imsi.clone()),
            },
        };
        vec![Frame::new(self.me(), serving, UmMessage::IdentityResponse { identity })]
    }

    fn on_auth_request(
        &mut self,
        f: &Frame,
        rand: &[u8; 16],
        net_sres: &Option<u32>,
        net_nonce: &Option<[u8; 16]>,
        cfg: &WorldConfig,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Frame> {
        match self.variant {
            ProtocolVariant::Legacy => {
                // The legacy SIM computes an answer to any challenge its
                // serving cell poses, in any connected phase, with no
                // questions asked.
                if self.phase == MsPhase::Idle {
                    return Vec::new();
                }
                let (sres, kc_a8) = mini_comp128(&self.profile.ki, rand);
                let serving = self
                    .session
                    .as_ref()
                    .map(|s| s.serving.clone())
                    .unwrap_or_else(|| self.camped_on.clone());
                let kc = if serving == EntityId::Net {
                    match cfg.kc_policy {
                        KcPolicy::XorRecycle(mask) => {
                            let next = match self.kc_chain {
                                Some(prev) => prev ^ mask,
                                None => kc_a8,
                            };
                            self.kc_chain = Some(next);
                            next
                        }
                        KcPolicy::Fresh => kc_a8,
                    }
                } else {
                    kc_a8
                };
                if let Some(s) = self.session.as_mut() {
                    s.rand = Some(*rand);
                    s.kc = Some(SessionKey::Legacy(kc));
                }
                vec![Frame::new(
                    self.me(),
                    serving,
                    UmMessage::AuthResponse { sres, ms_nonce: None },
                )]
            }
            ProtocolVariant::Hardened => {
                if self.phase != MsPhase::Registering {
                    self.rejected_frames += 1;
                    return Vec::new();
                }
                let (Some(token), Some(nonce)) = (net_sres, net_nonce) else {
                    // One-sided challenge: whoever sent this cannot
                    // prove knowledge of our key.
                    self.fail(AttachStatus::AuthNetworkFailed);
                    return Vec::new();
                };
                if self.seen_rands.contains(rand) || self.seen_net_nonces.contains(nonce) {
                    self.fail(AttachStatus::ReplayRejected);
                    return Vec::new();
                }
                if !self.verify(&binding_of(rand, nonce, None), f) {
                    self.rejected_frames += 1;
                    self.fail(AttachStatus::AuthNetworkFailed);
                    return Vec::new();
                }
                if *token != network_sres(&self.profile.ki, rand, nonce) {
                    self.fail(AttachStatus::AuthNetworkFailed);
                    return Vec::new();
                }
                self.seen_rands.insert(*rand);
                self.seen_net_nonces.insert(*nonce);
                let (sres, kc) = hardened_a3a8(&self.profile.ki, rand);
                let mut ms_nonce = [0u8; 16];
                rng.fill_bytes(&mut ms_nonce);
                let serving = {
                    let s = self.session.as_mut().unwrap();
                    s.rand = Some(*rand);
                    s.net_nonce = Some(*nonce);
                    s.ms_nonce = Some(ms_nonce);
                    s.kc = Some(SessionKey::Strong(kc));
                    s.serving.clone()
                };
                let binding = binding_of(rand, nonce, Some(&ms_nonce));
                vec![self.sign(
                    &serving,
                    &binding,
                    UmMessage::AuthResponse { sres, ms_nonce: Some(ms_nonce) },
                )]
            }
        }
    }

    fn on_cipher_command(&mut self, f: &Frame, suite: CipherSuite, cfg: &WorldConfig) -> Vec<Frame> {
        // A hardened station takes exactly one cipher command, right
        // after mutual authentication. The legacy one also obeys
        // re-keying commands mid-session (each following a fresh
        // challenge), which keeps it answering a rogue cell forever.
        let phase_ok = match self.variant {
            ProtocolVariant::Hardened => self.phase == MsPhase::Registering,
            ProtocolVariant::Legacy => {
                matches!(self.phase, MsPhase::Registering | MsPhase::Attached)
            }
        };
        if !phase_ok || self.session.as_ref().map(|s| s.kc.is_none()).unwrap_or(true) {
            return Vec::new();
        }
        if self.variant == ProtocolVariant::Hardened {
            let binding = self.session.as_ref().unwrap().binding();
            if !self.verify(&binding, f) {
                self.rejected_frames += 1;
                self.fail(AttachStatus::AuthNetworkFailed);
                return Vec::new();
            }
            let acceptable = match suite {
                CipherSuite::Strong => true,
                CipherSuite::A51 => cfg.hardened_allow_a51,
                CipherSuite::None | CipherSuite::A52 => false,
            };
            if !acceptable {
                self.fail(AttachStatus::AuthNetworkFailed);
                return Vec::new();
            }
        } else {
            // A legacy handset obeys whatever it is told, as long as it
            // physically can.
            let key_fits = match (suite, self.session.as_ref().unwrap().kc) {
                (CipherSuite::None, _) => true,
                (CipherSuite::A51 | CipherSuite::A52, Some(SessionKey::Legacy(_))) => true,
                _ => false,
            };
            if !key_fits {
                self.fail(AttachStatus::AuthNetworkFailed);
                return Vec::new();
            }
        }
        let (serving, binding) = {
            let s = self.session.as_mut().unwrap();
            s.suite = Some(suite);
            if let Some(kc) = s.kc {
                s.kc = Some(downgrade_key(suite, kc));
            }
            (s.serving.clone(), s.binding())
        };
        self.phase = MsPhase::Attached;
        self.attach_status = Some(AttachStatus::Attached);
        if serving == EntityId::Net {
            if let Some(kc) = self.session.as_ref().unwrap().kc {
                self.kc_history.push(kc);
            }
        }
        let mut out = Vec::new();
        out.push(match self.variant {
            ProtocolVariant::Hardened => self.sign(&serving, &binding, UmMessage::CipherModeComplete),
            ProtocolVariant::Legacy => {
                Frame::new(self.me(), serving.clone(), UmMessage::CipherModeComplete)
            }
        });
        out.extend(self.flush_outbox());
        out
    }

    /// Chunk queued user payloads into traffic bursts under the active
    /// cipher state.
    fn flush_outbox(&mut self) -> Vec<Frame> {
        if self.phase != MsPhase::Attached {
            return Vec::new();
        }
        let payloads: Vec<Vec<u8>> = self.outbox.drain(..).collect();
        let mut out = Vec::new();
        for p in payloads {
            out.extend(self.send_bytes(&p));
        }
        out
    }

    /// Transmit one byte payload as uplink traffic (used by tests and
    /// attack drivers as well as the outbox).
    pub fn send_bytes(&mut self, data: &[u8]) -> Vec<Frame> {
        let variant = self.variant;
        let me = self.me();
        let Some(s) = self.session.as_mut() else {
            return Vec::new();
        };
        let serving = s.serving.clone();
        let suite = s.suite.unwrap_or(CipherSuite::None);
        let mut out = Vec::new();
        for chunk in data.chunks(14) {
            let bits = bits_from_bytes(chunk);
            let start = s.ul_frames;
            let (payload, used, ciphered) = if suite == CipherSuite::None {
                (bits, 1, false)
            } else {
                let kc = s.kc.expect("ciphered session without key");
                let (ct, used) = cipher_bits(suite, &kc, start, LinkDir::Up, &bits)
                    .expect("session cipher state must be coherent");
                (ct, used, true)
            };
            s.ul_frames += used;
            let msg = UmMessage::Traffic { frame: start, payload, ciphered };
            out.push(match variant {
                ProtocolVariant::Hardened => {
                    let key = mac_key(&self.profile.ki);
                    let dir = format!("{me}->{serving}");
                    let tag = sign_frame(&key, &dir, &s.binding(), &msg);
                    Frame::new(me.clone(), serving.clone(), msg).with_mac(tag)
                }
                ProtocolVariant::Legacy => Frame::new(me.clone(), serving.clone(), msg),
            });
        }
        out
    }

    fn on_traffic(&mut self, f: &Frame, frame_no: u32, payload: &[u8], ciphered: bool) {
        if self.phase != MsPhase::Attached {
            return;
        }
        match self.variant {
            ProtocolVariant::Hardened => {
                let (binding, expected, suite, kc) = {
                    let s = self.session.as_ref().unwrap();
                    (s.binding(), s.dl_frames, s.suite.unwrap_or(CipherSuite::None), s.kc)
                };
                let must_cipher = suite != CipherSuite::None;
                if !self.verify(&binding, f)
                    || ciphered != must_cipher
                    || frame_no != expected
                {
                    self.rejected_frames += 1;
                    return;
                }
                let (bits, used) = if ciphered {
                    cipher_bits(suite, &kc.unwrap(), frame_no, LinkDir::Down, payload)
                        .expect("coherent session cipher state")
                } else {
                    (payload.to_vec(), 1)
                };
                self.session.as_mut().unwrap().dl_frames = frame_no + used;
                self.received_traffic.push(bytes_from_bits(&bits));
            }
            ProtocolVariant::Legacy => {
                // Cleartext is accepted without a flicker even on a
                // nominally ciphered channel.
                if !ciphered {
                    self.received_traffic.push(bytes_from_bits(payload));
                    return;
                }
                let (suite, kc) = {
                    let s = self.session.as_ref().unwrap();
                    (s.suite.unwrap_or(CipherSuite::None), s.kc)
                };
                if suite == CipherSuite::None || kc.is_none() {
                    return;
                }
                if let Ok((bits, used)) =
                    cipher_bits(suite, &kc.unwrap(), frame_no, LinkDir::Down, payload)
                {
                    self.session.as_mut().unwrap().dl_frames = frame_no + used;
                    self.received_traffic.push(bytes_from_bits(&bits));
                }
            }
        }
    }

    fn on_sms(&mut self, f: &Frame, originator: &str, text: &[u8], ciphered: bool, frame_no: u32) {
        if self.phase != MsPhase::Attached {
            return;
        }
        match self.variant {
            ProtocolVariant::Hardened => {
                let (binding, expected, suite, kc) = {
                    let s = self.session.as_ref().unwrap();
                    (s.binding(), s.dl_frames, s.suite.unwrap_or(CipherSuite::None), s.kc)
                };
                let must_cipher = suite != CipherSuite::None;
                if !self.verify(&binding, f) || ciphered != must_cipher || frame_no != expected {
                    self.rejected_frames += 1;
                    return;
                }
                let (text, used) = if ciphered {
                    let bits = bits_from_bytes(text);
                    let (pt, used) = cipher_bits(suite, &kc.unwrap(), frame_no, LinkDir::Down, &bits)
                        .expect("coherent session cipher state");
                    (bytes_from_bits(&pt), used)
                } else {
                    (text.to_vec(), 1)
                };
                self.session.as_mut().unwrap().dl_frames = frame_no + used;
                self.received_sms.push(SmsRecord {
                    originator: originator.to_owned(),
                    text,
                    authenticated: true,
                });
            }
            ProtocolVariant::Legacy => {
                let (suite, kc) = {
                    let s = self.session.as_ref().unwrap();
                    (s.suite.unwrap_or(CipherSuite::None), s.kc)
                };
                let (text, used) = if ciphered && suite != CipherSuite::None && kc.is_some() {
                    let bits = bits_from_bytes(text);
                    match cipher_bits(suite, &kc.unwrap(), frame_no, LinkDir::Down, &bits) {
                        Ok((pt, used)) => (bytes_from_bits(&pt), used),
                        Err(_) => return,
                    }
                } else {
                    (text.to_vec(), 1)
                };
                if let Some(s) = self.session.as_mut() {
                    s.dl_frames = frame_no + used;
                }
                self.received_sms.push(SmsRecord {
                    originator: originator.to_owned(),
                    text,
                    authenticated: false,
                });
            }
        }
    }

    fn on_location_request(&mut self, f: &Frame) -> Vec<Frame> {
        let resp = UmMessage::LocationResponse { lat: self.lat, lon: self.lon };
        match self.variant {
            ProtocolVariant::Legacy => {
                // Any serving cell may ask where we are; the handset
                // volunteers its position.
                vec![Frame::new(self.me(), f.src.clone(), resp)]
            }
            ProtocolVariant::Hardened => {
                let authed = self.phase == MsPhase::Attached
                    && self
                        .session
                        .as_ref()
                        .map(|s| s.ms_nonce.is_some())
                        .unwrap_or(false);
                if authed {
                    let binding = self.session.as_ref().unwrap().binding();
                    if self.verify(&binding, f) {
                        let serving = self.session.as_ref().unwrap().serving.clone();
                        return vec![self.sign(&serving, &binding, resp)];
                    }
                }
                self.location_refusals += 1;
                Vec::new()
            }
        }
    }

    /// Clock-driven retries and deadlines.
    pub fn maintenance(&mut self, clock: u64, cfg: &WorldConfig, rng: &mut ChaCha8Rng) -> Vec<Frame> {
        match self.phase {
            MsPhase::WaitAssign => {
                if let Some(t) = self.retry_at {
                    if clock >= t {
                        self.retry_at = None;
                        return self.channel_request(clock, rng);
                    }
                    return Vec::new();
                }
                if let Some(deadline) = self.assign_deadline {
                    if clock >= deadline {
                        let started = self.attach_started.unwrap_or(clock);
                        if clock - started >= cfg.rach_timeout {
                            self.fail(AttachStatus::RachTimeout);
                        } else {
                            // Contention: back off a bounded, growing
                            // random number of ticks.
                            self.rach_attempts += 1;
                            let window = (1u64 << self.rach_attempts.min(4)).min(16);
                            let wait = rng.gen_range(1..=window);
                            self.retry_at = Some(clock + wait);
                            self.assign_deadline = None;
                        }
                    }
                }
                Vec::new()
            }
            MsPhase::Registering => {
                // A stalled registration (messages dropped on the air)
                // eventually gives up.
                if let Some(started) = self.attach_started {
                    if clock - started >= cfg.rach_timeout + 25 {
                        self.fail(AttachStatus::RachTimeout);
                    }
                }
                Vec::new()
            }
            MsPhase::Attached => self.flush_outbox(),
            _ => Vec::new(),
        }
    }
}
