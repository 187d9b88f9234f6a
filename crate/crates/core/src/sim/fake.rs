//! Rogue base station.
//!
//! Broadcasts a stronger downlink than the genuine cell (modelled as
//! the victim's camping being switched here), pages the victim, asks
//! for its permanent identity, accepts any authentication response, and
//! commands the null cipher so whatever the victim transmits arrives in
//! the clear. A second mode turns the same machinery into a
//! chosen-challenge oracle against the victim's SIM.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use std::collections::VecDeque;

use crate::cipher::CipherSuite;

use super::msg::{EntityId, Frame, Identity, IdentityKind, UmMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FakeMode {
    /// Harvest identities and cleartext traffic.
    ImsiCatch,
    /// Feed attacker-chosen challenges to the victim's SIM and collect
    /// the signed responses.
    CloneOracle,
}

pub struct FakeBts {
    pub mode: FakeMode,
    /// Identities volunteered to us.
    pub caught: Vec<(EntityId, Identity)>,
    /// Cleartext payloads received after the null-cipher downgrade.
    pub captured_traffic: Vec<Vec<u8>>,
    /// (challenge, signed response) pairs the victim answered.
    pub sres_log: Vec<([u8; 16], u32)>,
    /// Positions volunteered to us.
    pub located: Vec<(EntityId, i64, i64)>,
    /// Challenges waiting to be sent (oracle mode).
    pub pending_auths: VecDeque<[u8; 16]>,
    last_rand: Option<[u8; 16]>,
    awaiting_sres: bool,
    /// Oracle mode: a weak-cipher command is in flight; the victim's
    /// acknowledgement (and the ciphering it implies) completes the
    /// query.
    awaiting_complete: bool,
    peer: Option<EntityId>,
    session_live: bool,
}

impl FakeBts {
    pub fn new(mode: FakeMode) -> Self {
        FakeBts {
            mode,
            caught: Vec::new(),
            captured_traffic: Vec::new(),
            sres_log: Vec::new(),
            located: Vec::new(),
            pending_auths: VecDeque::new(),
            last_rand: None,
            awaiting_sres: false,
            awaiting_complete: false,
            peer: None,
            session_live: false,
        }
    }

    /// Oracle mode: true once the last queued challenge has been
    /// answered and the follow-up cipher exchange finished.
    pub fn query_settled(&self) -> bool {
        !self.awaiting_sres && !self.awaiting_complete
    }

    /// Page a subscriber by whatever identity the attacker knows.
    pub fn page(&self, target: &str, identity: Identity) -> Frame {
        Frame::new(
            EntityId::Fake,
            EntityId::Ms(target.to_owned()),
            UmMessage::PagingRequest { identity },
        )
    }

    pub fn handle_frame(&mut self, f: &Frame, _clock: u64, rng: &mut ChaCha8Rng) -> Vec<Frame> {
        match &f.msg {
            UmMessage::ChannelRequest { .. } => {
                // No contention on a cell that exists to be won.
                self.peer = Some(f.src.clone());
                self.session_live = true;
                vec![
                    Frame::new(EntityId::Fake, f.src.clone(), UmMessage::ImmediateAssignment),
                    Frame::new(
                        EntityId::Fake,
                        f.src.clone(),
                        UmMessage::IdentityRequest { kind: IdentityKind::Imsi },
                    ),
                ]
            }
            UmMessage::IdentityResponse { identity } => {
                self.caught.push((f.src.clone(), identity.clone()));
                match self.mode {
                    FakeMode::ImsiCatch => {
                        let mut rand = [0u8; 16];
                        rng.fill_bytes(&mut rand);
                        self.last_rand = Some(rand);
                        self.awaiting_sres = true;
                        vec![Frame::new(
                            EntityId::Fake,
                            f.src.clone(),
                            UmMessage::AuthRequest { rand, net_sres: None, net_nonce: None },
                        )]
                    }
                    FakeMode::CloneOracle => self.next_challenge(),
                }
            }
            UmMessage::AuthResponse { sres, .. } => {
                if let Some(rand) = self.last_rand.take() {
                    self.sres_log.push((rand, *sres));
                }
                self.awaiting_sres = false;
                match self.mode {
                    FakeMode::ImsiCatch => {
                        // Whatever the response was, wave it through and
                        // switch ciphering off.
                        vec![Frame::new(
                            EntityId::Fake,
                            f.src.clone(),
                            UmMessage::CipherModeCommand { suite: CipherSuite::None },
                        )]
                    }
                    FakeMode::CloneOracle => {
                        // Command the breakable cipher so the session key
                        // derived from our challenge gets used on the air;
                        // the next challenge waits for the acknowledgement.
                        self.awaiting_complete = true;
                        vec![Frame::new(
                            EntityId::Fake,
                            f.src.clone(),
                            UmMessage::CipherModeCommand { suite: CipherSuite::A52 },
                        )]
                    }
                }
            }
            UmMessage::CipherModeComplete => {
                self.awaiting_complete = false;
                Vec::new()
            }
            UmMessage::Traffic { payload, ciphered, .. } => {
                if !ciphered {
                    self.captured_traffic.push(crate::bits::bytes_from_bits(payload));
                }
                Vec::new()
            }
            UmMessage::LocationResponse { lat, lon } => {
                self.located.push((f.src.clone(), *lat, *lon));
                Vec::new()
            }
            _ => Vec::new(),
        }
    }

    fn next_challenge(&mut self) -> Vec<Frame> {
        let (Some(peer), Some(rand)) = (self.peer.clone(), self.pending_auths.pop_front()) else {
            return Vec::new();
        };
        self.last_rand = Some(rand);
        self.awaiting_sres = true;
        vec![Frame::new(
            EntityId::Fake,
            peer,
            UmMessage::AuthRequest { rand, net_sres: None, net_nonce: None },
        )]
    }

    /// Called each tick: in oracle mode, keep the challenge pipeline
    /// moving when the driver queued more work.
    pub fn maintenance(&mut self, _clock: u64) -> Vec<Frame> {
        if self.mode == FakeMode::CloneOracle
            && self.session_live
            && self.query_settled()
            && !self.pending_auths.is_empty()
        {
            self.next_challenge()
        } else {
            Vec::new()
        }
    }
}
