//! The genuine network: random-access arbitration, session state
//! machine, subscriber database, and delivery services.
//!
//! The authority core is the wireline back end holding root keys; it
//! never appears on the air interface. The network face asks it for
//! authentication vectors and (hardened) for its own proof token.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use crate::auth::{run_a3a8, AuthAlgo, Imsi, SessionKey, SimProfile, mac_key, network_sres};
use crate::bits::{bits_from_bytes, bytes_from_bits};
use crate::cipher::CipherSuite;

use super::msg::{EntityId, Frame, Identity, IdentityKind, UmMessage};
use super::{
    binding_of, cipher_bits, downgrade_key, sign_frame, verify_frame, AttachStatus, KcPolicy,
    LinkDir, ProtocolVariant, WorldConfig,
};

/// One issued authentication vector, plus the subscriber's tag key in
/// the hardened world.
#[derive(Clone)]
pub struct AuthVector {
    pub rand: [u8; 16],
    pub sres: u32,
    pub kc: SessionKey,
    pub mac_key: Option<[u8; 16]>,
}

/// Wireline key authority. Holds every subscriber's root key; answers
/// vector requests from the network face. Deliberately has no `Debug`:
/// nothing here may leak into traces or dumps.
pub struct AuthorityCore {
    algo: AuthAlgo,
    subscribers: BTreeMap<Imsi, [u8; 16]>,
}

impl AuthorityCore {
    pub fn new(algo: AuthAlgo) -> Self {
        AuthorityCore { algo, subscribers: BTreeMap::new() }
    }

    pub fn algo(&self) -> AuthAlgo {
        self.algo
    }

    pub fn register(&mut self, profile: &SimProfile) {
        self.subscribers.insert(profile.imsi.clone(), profile.ki);
    }

    pub fn knows(&self, imsi: &Imsi) -> bool {
        self.subscribers.contains_key(imsi)
    }

    /// Draw a fresh challenge and compute the subscriber's expected
    /// response and session key.
    pub fn vector(&self, imsi: &Imsi, rng: &mut ChaCha8Rng) -> Option<AuthVector> {
        let ki = self.subscribers.get(imsi)?;
        let mut rand = [0u8; 16];
        rng.fill_bytes(&mut rand);
        let (sres, kc) = run_a3a8(self.algo, ki, &rand);
        let mac_key = match self.algo {
            AuthAlgo::Hardened => Some(mac_key(ki)),
            AuthAlgo::MiniComp128 => None,
        };
        Some(AuthVector { rand, sres, kc, mac_key })
    }

    /// The network's own proof over (challenge, network nonce).
    pub fn net_token(&self, imsi: &Imsi, rand: &[u8; 16], nonce: &[u8; 16]) -> Option<u32> {
        self.subscribers.get(imsi).map(|ki| network_sres(ki, rand, nonce))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NetPhase {
    AwaitIdentity,
    AwaitAuth,
    AwaitComplete,
    Attached,
}

struct NetSession {
    peer: EntityId,
    imsi: Option<Imsi>,
    vector: Option<AuthVector>,
    net_nonce: Option<[u8; 16]>,
    ms_nonce: Option<[u8; 16]>,
    kc: Option<SessionKey>,
    suite: Option<CipherSuite>,
    state: NetPhase,
    ul_frames: u32,
    dl_frames: u32,
    asked_identity_again: bool,
}

impl NetSession {
    fn new(peer: EntityId) -> Self {
        NetSession {
            peer,
            imsi: None,
            vector: None,
            net_nonce: None,
            ms_nonce: None,
            kc: None,
            suite: None,
            state: NetPhase::AwaitIdentity,
            ul_frames: 0,
            dl_frames: 0,
            asked_identity_again: false,
        }
    }

    fn binding(&self) -> Vec<u8> {
        match (self.vector.as_ref(), self.net_nonce.as_ref()) {
            (Some(v), Some(n)) => binding_of(&v.rand, n, self.ms_nonce.as_ref()),
            _ => Vec::new(),
        }
    }
}

/// One line in the network's attach log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttachRecord {
    pub tick: u64,
    pub peer: EntityId,
    pub imsi: Option<Imsi>,
    pub suite: Option<CipherSuite>,
    pub status: AttachStatus,
}

pub struct NetworkSide {
    pub variant: ProtocolVariant,
    rach_backlog: Vec<(EntityId, u8)>,
    sessions: BTreeMap<EntityId, NetSession>,
    pub attach_log: Vec<AttachRecord>,
    tmsi_registry: BTreeMap<u32, Imsi>,
    /// Cached vectors for the legacy reuse shortcut.
    cached_vectors: BTreeMap<Imsi, AuthVector>,
    /// Recycled-key chain state (legacy misbehavior).
    kc_chain: BTreeMap<Imsi, u64>,
    /// Subscriber nonces already consumed (hardened replay defence).
    seen_ms_nonces: HashSet<(Imsi, [u8; 16])>,
    /// Deciphered uplink payloads, attributed to the authenticated
    /// subscriber of the carrying session.
    pub received_traffic: Vec<(Option<Imsi>, Vec<u8>)>,
    pub received_locations: Vec<(Imsi, i64, i64)>,
    /// Unauthenticated short-message submissions refused at ingress.
    pub sms_rejected: u32,
    /// Frames dropped for bad tags, flags, or counters.
    pub rejected_frames: u32,
}

impl NetworkSide {
    pub fn new(variant: ProtocolVariant) -> Self {
        NetworkSide {
            variant,
            rach_backlog: Vec::new(),
            sessions: BTreeMap::new(),
            attach_log: Vec::new(),
            tmsi_registry: BTreeMap::new(),
            cached_vectors: BTreeMap::new(),
            kc_chain: BTreeMap::new(),
            seen_ms_nonces: HashSet::new(),
            received_traffic: Vec::new(),
            received_locations: Vec::new(),
            sms_rejected: 0,
            rejected_frames: 0,
        }
    }

    pub fn drop_session(&mut self, peer: &EntityId) {
        self.sessions.remove(peer);
    }

    /// The session's authenticated subscriber, if it got that far.
    pub fn session_imsi(&self, peer: &EntityId) -> Option<Imsi> {
        self.sessions.get(peer).and_then(|s| s.imsi.clone())
    }

    pub fn tmsi_of(&self, imsi: &Imsi) -> Option<u32> {
        self.tmsi_registry
            .iter()
            .find(|(_, i)| *i == imsi)
            .map(|(t, _)| *t)
    }

    /// The node-compromise surface: everything this network element has
    /// stored for one subscriber. Vector theft reads exactly this; it
    /// holds data only when the legacy reuse shortcut populated it.
    pub fn vector_store(&self, imsi: &Imsi) -> Option<AuthVector> {
        self.cached_vectors.get(imsi).cloned()
    }

    fn log(&mut self, tick: u64, peer: EntityId, imsi: Option<Imsi>, suite: Option<CipherSuite>, status: AttachStatus) {
        self.attach_log.push(AttachRecord { tick, peer, imsi, suite, status });
    }

    fn fail_session(&mut self, peer: &EntityId, clock: u64, status: AttachStatus) {
        let imsi = self.sessions.get(peer).and_then(|s| s.imsi.clone());
        self.log(clock, peer.clone(), imsi, None, status);
        self.sessions.remove(peer);
    }

    pub fn handle_frame(
        &mut self,
        f: &Frame,
        clock: u64,
        cfg: &WorldConfig,
        core: &mut AuthorityCore,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Frame> {
        match &f.msg {
            UmMessage::ChannelRequest { reference } => {
                self.rach_backlog.push((f.src.clone(), *reference));
                Vec::new()
            }
            UmMessage::IdentityResponse { identity } => {
                self.on_identity(f, identity, clock, cfg, core, rng)
            }
            UmMessage::AuthResponse { sres, ms_nonce } => {
                self.on_auth_response(f, *sres, ms_nonce, clock, cfg)
            }
            UmMessage::CipherModeComplete => self.on_cipher_complete(f, clock, cfg, rng),
            UmMessage::Traffic { frame, payload, ciphered } => {
                self.on_traffic(f, *frame, payload, *ciphered);
                Vec::new()
            }
            UmMessage::LocationResponse { lat, lon } => {
                self.on_location_response(f, *lat, *lon);
                Vec::new()
            }
            _ => {
                self.rejected_frames += 1;
                Vec::new()
            }
        }
    }

    fn on_identity(
        &mut self,
        f: &Frame,
        identity: &Identity,
        clock: u64,
        cfg: &WorldConfig,
        core: &mut AuthorityCore,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Frame> {
        let Some(sess) = self.sessions.get_mut(&f.src) else {
            return Vec::new();
        };
        if sess.state != NetPhase::AwaitIdentity {
            return Vec::new();
        }
        let resolved: Option<Imsi> = match identity {
            Identity::Imsi(i) => Some(i.clone()),
            Identity::Tmsi(t) => self.tmsi_registry.get(t).cloned(),
            Identity::Imei(_) => None,
        };
        match resolved {
            None => {
                if sess.asked_identity_again {
                    self.fail_session(&f.src.clone(), clock, AttachStatus::AuthMsFailed);
                    Vec::new()
                } else {
                    sess.asked_identity_again = true;
                    vec![Frame::new(
                        EntityId::Net,
                        f.src.clone(),
                        UmMessage::IdentityRequest { kind: IdentityKind::Imsi },
                    )]
                }
            }
            Some(imsi) => self.start_auth(&f.src.clone(), imsi, clock, cfg, core, rng),
        }
    }

    fn start_auth(
        &mut self,
        peer: &EntityId,
        imsi: Imsi,
        clock: u64,
        cfg: &WorldConfig,
        core: &mut AuthorityCore,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Frame> {
        if !core.knows(&imsi) {
            self.fail_session(peer, clock, AttachStatus::AuthMsFailed);
            return Vec::new();
        }
        match self.variant {
            ProtocolVariant::Legacy => {
                // Vector reuse shortcut: serve the cached challenge
                // again instead of paying for a fresh one.
                let mut vector = if cfg.triplet_reuse {
                    match self.cached_vectors.get(&imsi) {
                        Some(v) => v.clone(),
                        None => {
                            let v = core.vector(&imsi, rng).unwrap();
                            self.cached_vectors.insert(imsi.clone(), v.clone());
                            v
                        }
                    }
                } else {
                    core.vector(&imsi, rng).unwrap()
                };
                // Recycled-key schedule: the chain replaces the fresh
                // session key after the first agreement.
                if let KcPolicy::XorRecycle(mask) = cfg.kc_policy {
                    let a8 = match vector.kc {
                        SessionKey::Legacy(k) => k,
                        SessionKey::Strong(_) => unreachable!("legacy algorithm issues 64-bit keys"),
                    };
                    let next = match self.kc_chain.get(&imsi) {
                        Some(prev) => prev ^ mask,
                        None => a8,
                    };
                    self.kc_chain.insert(imsi.clone(), next);
                    vector.kc = SessionKey::Legacy(next);
                }
                let sess = self.sessions.get_mut(peer).unwrap();
                sess.imsi = Some(imsi);
                sess.state = NetPhase::AwaitAuth;
                let rand = vector.rand;
                sess.vector = Some(vector);
                vec![Frame::new(
                    EntityId::Net,
                    peer.clone(),
                    UmMessage::AuthRequest { rand, net_sres: None, net_nonce: None },
                )]
            }
            ProtocolVariant::Hardened => {
                // Never reuse vectors, whatever the configuration says.
                let vector = core.vector(&imsi, rng).unwrap();
                let mut nonce = [0u8; 16];
                rng.fill_bytes(&mut nonce);
                let token = core.net_token(&imsi, &vector.rand, &nonce).unwrap();
                let key = vector.mac_key.expect("hardened vectors carry a tag key");
                let msg = UmMessage::AuthRequest {
                    rand: vector.rand,
                    net_sres: Some(token),
                    net_nonce: Some(nonce),
                };
                let dir = format!("{}->{}", EntityId::Net, peer);
                let tag = sign_frame(&key, &dir, &binding_of(&vector.rand, &nonce, None), &msg);
                let sess = self.sessions.get_mut(peer).unwrap();
                sess.imsi = Some(imsi);
                sess.state = NetPhase::AwaitAuth;
                sess.net_nonce = Some(nonce);
                sess.vector = Some(vector);
                vec![Frame::new(EntityId::Net, peer.clone(), msg).with_mac(tag)]
            }
        }
    }

    fn on_auth_response(
        &mut self,
        f: &Frame,
        sres: u32,
        ms_nonce: &Option<[u8; 16]>,
        clock: u64,
        cfg: &WorldConfig,
    ) -> Vec<Frame> {
        let Some(sess) = self.sessions.get(&f.src) else {
            return Vec::new();
        };
        if sess.state != NetPhase::AwaitAuth {
            return Vec::new();
        }
        let imsi = sess.imsi.clone().unwrap();
        let vector = sess.vector.clone().unwrap();
        match self.variant {
            ProtocolVariant::Hardened => {
                let Some(nonce) = *ms_nonce else {
                    self.fail_session(&f.src.clone(), clock, AttachStatus::AuthMsFailed);
                    return Vec::new();
                };
                if self.seen_ms_nonces.contains(&(imsi.clone(), nonce)) {
                    self.fail_session(&f.src.clone(), clock, AttachStatus::ReplayRejected);
                    return Vec::new();
                }
                let key = vector.mac_key.unwrap();
                let binding = binding_of(&vector.rand, &sess.net_nonce.unwrap(), Some(&nonce));
                if !verify_frame(&key, &binding, f) {
                    self.rejected_frames += 1;
                    self.fail_session(&f.src.clone(), clock, AttachStatus::AuthMsFailed);
                    return Vec::new();
                }
                if sres != vector.sres {
                    self.fail_session(&f.src.clone(), clock, AttachStatus::AuthMsFailed);
                    return Vec::new();
                }
                self.seen_ms_nonces.insert((imsi, nonce));
                let kc = downgrade_key(cfg.suite, vector.kc);
                let peer = f.src.clone();
                let sess = self.sessions.get_mut(&peer).unwrap();
                sess.ms_nonce = Some(nonce);
                sess.kc = Some(kc);
                sess.suite = Some(cfg.suite);
                sess.state = NetPhase::AwaitComplete;
                let msg = UmMessage::CipherModeCommand { suite: cfg.suite };
                let dir = format!("{}->{}", EntityId::Net, peer);
                let tag = sign_frame(&key, &dir, &sess.binding(), &msg);
                vec![Frame::new(EntityId::Net, peer, msg).with_mac(tag)]
            }
            ProtocolVariant::Legacy => {
                if sres != vector.sres {
                    self.fail_session(&f.src.clone(), clock, AttachStatus::AuthMsFailed);
                    return Vec::new();
                }
                let peer = f.src.clone();
                let sess = self.sessions.get_mut(&peer).unwrap();
                sess.kc = Some(vector.kc);
                sess.suite = Some(cfg.suite);
                sess.state = NetPhase::AwaitComplete;
                vec![Frame::new(
                    EntityId::Net,
                    peer,
                    UmMessage::CipherModeCommand { suite: cfg.suite },
                )]
            }
        }
    }

    fn on_cipher_complete(
        &mut self,
        f: &Frame,
        clock: u64,
        cfg: &WorldConfig,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Frame> {
        let Some(sess) = self.sessions.get(&f.src) else {
            return Vec::new();
        };
        if sess.state != NetPhase::AwaitComplete {
            return Vec::new();
        }
        if self.variant == ProtocolVariant::Hardened {
            let key = sess.vector.as_ref().unwrap().mac_key.unwrap();
            let binding = sess.binding();
            if !verify_frame(&key, &binding, f) {
                self.rejected_frames += 1;
                self.fail_session(&f.src.clone(), clock, AttachStatus::AuthMsFailed);
                return Vec::new();
            }
        }
        let peer = f.src.clone();
        let imsi = sess.imsi.clone().unwrap();
        // Fresh temporary identity each attach.
        let mut tmsi = rng.gen::<u32>();
        while self.tmsi_registry.contains_key(&tmsi) {
            tmsi = rng.gen::<u32>();
        }
        self.tmsi_registry.insert(tmsi, imsi.clone());
        let sess = self.sessions.get_mut(&peer).unwrap();
        sess.state = NetPhase::Attached;
        let suite = sess.suite;
        let msg = UmMessage::TmsiRealloc { tmsi };
        let out = match self.variant {
            ProtocolVariant::Hardened => {
                let key = sess.vector.as_ref().unwrap().mac_key.unwrap();
                let dir = format!("{}->{}", EntityId::Net, peer);
                let tag = sign_frame(&key, &dir, &sess.binding(), &msg);
                vec![Frame::new(EntityId::Net, peer.clone(), msg).with_mac(tag)]
            }
            ProtocolVariant::Legacy => vec![Frame::new(EntityId::Net, peer.clone(), msg)],
        };
        self.log(clock, peer, Some(imsi), suite.or(Some(cfg.suite)), AttachStatus::Attached);
        out
    }

    fn on_traffic(&mut self, f: &Frame, frame_no: u32, payload: &[u8], ciphered: bool) {
        let Some(sess) = self.sessions.get_mut(&f.src) else {
            return;
        };
        if sess.state != NetPhase::Attached {
            return;
        }
        let imsi = sess.imsi.clone();
        match self.variant {
            ProtocolVariant::Hardened => {
                let key = sess.vector.as_ref().unwrap().mac_key.unwrap();
                let suite = sess.suite.unwrap_or(CipherSuite::None);
                let must_cipher = suite != CipherSuite::None;
                if !verify_frame(&key, &sess.binding(), f)
                    || ciphered != must_cipher
                    || frame_no != sess.ul_frames
                {
                    self.rejected_frames += 1;
                    return;
                }
                let (bits, used) = if ciphered {
                    cipher_bits(suite, &sess.kc.unwrap(), frame_no, LinkDir::Up, payload)
                        .expect("coherent session cipher state")
                } else {
                    (payload.to_vec(), 1)
                };
                sess.ul_frames = frame_no + used;
                self.received_traffic.push((imsi, bytes_from_bits(&bits)));
            }
            ProtocolVariant::Legacy => {
                // Cleartext uplink is accepted without complaint even
                // when ciphering was commanded.
                if !ciphered {
                    self.received_traffic.push((imsi, bytes_from_bits(payload)));
                    return;
                }
                let suite = sess.suite.unwrap_or(CipherSuite::None);
                let Some(kc) = sess.kc else { return };
                if suite == CipherSuite::None {
                    return;
                }
                if let Ok((bits, used)) = cipher_bits(suite, &kc, frame_no, LinkDir::Up, payload) {
                    sess.ul_frames = frame_no + used;
                    self.received_traffic.push((imsi, bytes_from_bits(&bits)));
                }
            }
        }
    }

    fn on_location_response(&mut self, f: &Frame, lat: i64, lon: i64) {
        let Some(sess) = self.sessions.get(&f.src) else {
            return;
        };
        let Some(imsi) = sess.imsi.clone() else { return };
        if self.variant == ProtocolVariant::Hardened {
            let key = sess.vector.as_ref().unwrap().mac_key.unwrap();
            if !verify_frame(&key, &sess.binding(), f) {
                self.rejected_frames += 1;
                return;
            }
        }
        self.received_locations.push((imsi, lat, lon));
    }

    /// End-of-tick random access: every burst that arrived this tick
    /// draws one of the configured slots; a slot with exactly one
    /// occupant wins a channel, any collision destroys all claims in
    /// that slot.
    pub fn resolve_rach(
        &mut self,
        _clock: u64,
        cfg: &WorldConfig,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Frame> {
        if self.rach_backlog.is_empty() {
            return Vec::new();
        }
        let contenders: Vec<(EntityId, u8)> = std::mem::take(&mut self.rach_backlog);
        let slots = cfg.rach_slots_per_tick.max(1);
        let draws: Vec<u32> = contenders.iter().map(|_| rng.gen_range(0..slots)).collect();
        let mut per_slot = vec![0u32; slots as usize];
        for &s in &draws {
            per_slot[s as usize] += 1;
        }
        let mut out = Vec::new();
        for ((peer, _), slot) in contenders.into_iter().zip(draws) {
            if per_slot[slot as usize] == 1 {
                self.sessions.insert(peer.clone(), NetSession::new(peer.clone()));
                out.push(Frame::new(EntityId::Net, peer.clone(), UmMessage::ImmediateAssignment));
                out.push(Frame::new(
                    EntityId::Net,
                    peer,
                    UmMessage::IdentityRequest { kind: IdentityKind::Imsi },
                ));
            }
        }
        out
    }

    fn attached_peer(&self, imsi: &Imsi) -> Option<EntityId> {
        self.sessions
            .values()
            .find(|s| s.state == NetPhase::Attached && s.imsi.as_ref() == Some(imsi))
            .map(|s| s.peer.clone())
    }

    /// Short-message ingress. `authenticated` is whether the submitter
    /// proved the claimed originator identity; the hardened network
    /// refuses unproven submissions, the legacy one forwards verbatim.
    pub fn submit_sms(
        &mut self,
        imsi: &Imsi,
        originator: &str,
        text: &[u8],
        authenticated: bool,
        _cfg: &WorldConfig,
    ) -> Vec<Frame> {
        if self.variant == ProtocolVariant::Hardened && !authenticated {
            self.sms_rejected += 1;
            return Vec::new();
        }
        let Some(peer) = self.attached_peer(imsi) else {
            return Vec::new();
        };
        let sess = self.sessions.get_mut(&peer).unwrap();
        let suite = sess.suite.unwrap_or(CipherSuite::None);
        let start = sess.dl_frames;
        let (wire_text, used, ciphered) = if suite == CipherSuite::None {
            (text.to_vec(), 1, false)
        } else {
            let bits = bits_from_bytes(text);
            let (ct, used) = cipher_bits(suite, &sess.kc.unwrap(), start, LinkDir::Down, &bits)
                .expect("coherent session cipher state");
            (bytes_from_bits(&ct), used, true)
        };
        sess.dl_frames += used;
        let msg = UmMessage::SmsDeliver {
            originator: originator.to_owned(),
            text: wire_text,
            ciphered,
            frame: start,
        };
        match self.variant {
            ProtocolVariant::Hardened => {
                let key = sess.vector.as_ref().unwrap().mac_key.unwrap();
                let dir = format!("{}->{}", EntityId::Net, peer);
                let tag = sign_frame(&key, &dir, &sess.binding(), &msg);
                vec![Frame::new(EntityId::Net, peer, msg).with_mac(tag)]
            }
            ProtocolVariant::Legacy => vec![Frame::new(EntityId::Net, peer, msg)],
        }
    }

    /// Genuine positioning query toward an attached subscriber.
    pub fn request_location(&mut self, imsi: &Imsi, _cfg: &WorldConfig) -> Vec<Frame> {
        let Some(peer) = self.attached_peer(imsi) else {
            return Vec::new();
        };
        let sess = self.sessions.get(&peer).unwrap();
        let msg = UmMessage::LocationRequest;
        match self.variant {
            ProtocolVariant::Hardened => {
                let key = sess.vector.as_ref().unwrap().mac_key.unwrap();
                let dir = format!("{}->{}", EntityId::Net, peer);
                let tag = sign_frame(&key, &dir, &sess.binding(), &msg);
                vec![Frame::new(EntityId::Net, peer, msg).with_mac(tag)]
            }
            ProtocolVariant::Legacy => vec![Frame::new(EntityId::Net, peer, msg)],
        }
    }

    /// Downlink user traffic toward an attached subscriber.
    pub fn send_downlink(&mut self, imsi: &Imsi, data: &[u8], _cfg: &WorldConfig) -> Vec<Frame> {
        let Some(peer) = self.attached_peer(imsi) else {
            return Vec::new();
        };
        let sess = self.sessions.get_mut(&peer).unwrap();
        let suite = sess.suite.unwrap_or(CipherSuite::None);
        let mut out = Vec::new();
        for chunk in data.chunks(14) {
            let bits = bits_from_bytes(chunk);
            let start = sess.dl_frames;
            let (payload, used, ciphered) = if suite == CipherSuite::None {
                (bits, 1, false)
            } else {
                let (ct, used) = cipher_bits(suite, &sess.kc.unwrap(), start, LinkDir::Down, &bits)
                    .expect("coherent session cipher state");
                (ct, used, true)
            };
            sess.dl_frames += used;
            let msg = UmMessage::Traffic { frame: start, payload, ciphered };
            out.push(match self.variant {
                ProtocolVariant::Hardened => {
                    let key = sess.vector.as_ref().unwrap().mac_key.unwrap();
                    let dir = format!("{}->{}", EntityId::Net, peer);
                    let tag = sign_frame(&key, &dir, &sess.binding(), &msg);
                    Frame::new(EntityId::Net, peer.clone(), msg).with_mac(tag)
                }
                ProtocolVariant::Legacy => Frame::new(EntityId::Net, peer.clone(), msg),
            });
        }
        out
    }
}
