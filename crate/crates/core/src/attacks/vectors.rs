//! Attacks on authentication material at rest and on session-key
//! hygiene: impersonation from stolen challenge/response vectors, and
//! next-key prediction when key derivation recycles state.

use std::any::Any;
use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::auth::Imsi;
use crate::sim::{
    AttachStatus, AttackerPort, AuthVector, EntityId, Frame, Identity, TapAction, UmMessage, World,
};

use super::AttackReport;

/// Read a subscriber's cached authentication vectors out of the serving
/// network's store — the node-compromise step. The store holds data
/// only when the network reuses vectors instead of drawing fresh ones;
/// a fresh-per-session network keeps nothing worth stealing.
pub fn steal_auth_vectors(world: &World, imsi: &Imsi) -> Vec<AuthVector> {
    world.net.vector_store(imsi).into_iter().collect()
}

/// Radio puppet that answers the attach dialogue under a victim's
/// identity, using stolen vectors to answer challenges.
struct ImpersonationPort {
    victim: Imsi,
    stolen: Vec<AuthVector>,
    outbox: VecDeque<Frame>,
    started: bool,
    pub challenges_matched: u32,
    pub challenges_missed: u32,
}

impl ImpersonationPort {
    fn new(victim: Imsi, stolen: Vec<AuthVector>) -> Self {
        Self {
            victim,
            stolen,
            outbox: VecDeque::new(),
            started: false,
            challenges_matched: 0,
            challenges_missed: 0,
        }
    }

    fn reply(&mut self, msg: UmMessage) {
        self.outbox.push_back(Frame::new(EntityId::Atk, EntityId::Net, msg));
    }
}

impl AttackerPort for ImpersonationPort {
    fn on_frame(&mut self, _clock: u64, frame: &Frame) -> TapAction {
        if frame.dst != EntityId::Atk {
            return TapAction::Pass;
        }
        match &frame.msg {
            UmMessage::IdentityRequest { .. } => {
                self.reply(UmMessage::IdentityResponse {
                    identity: Identity::Imsi(self.victim.clone()),
                });
            }
            UmMessage::AuthRequest { rand, .. } => {
                // Replay only works if the network asks a question we
                // already hold the answer to.
                match self.stolen.iter().find(|v| v.rand == *rand) {
                    Some(v) => {
                        self.challenges_matched += 1;
                        self.reply(UmMessage::AuthResponse { sres: v.sres, ms_nonce: None });
                    }
                    None => {
                        self.challenges_missed += 1;
                        self.reply(UmMessage::AuthResponse { sres: 0, ms_nonce: None });
                    }
                }
            }
            UmMessage::CipherModeCommand { .. } => {
                self.reply(UmMessage::CipherModeComplete);
            }
            _ => {}
        }
        TapAction::Pass
    }

    fn inject(&mut self, _clock: u64, rng: &mut ChaCha8Rng) -> Vec<Frame> {
        if !self.started {
            self.started = true;
            self.outbox.push_back(Frame::new(
                EntityId::Atk,
                EntityId::Net,
                UmMessage::ChannelRequest { reference: rng.gen() },
            ));
        }
        self.outbox.drain(..).collect()
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}

/// Steal whatever the network has cached for the victim, then attach to
/// the genuine network under the victim's identity using the loot.
/// Success means the network's own attach log shows the attacker's
/// radio ATTACHED under the victim's subscriber identity.
pub fn run_steal_vectors(world: &mut World, target: &str) -> AttackReport {
    let start = world.clock;
    let victim_imsi = world.stations[target].profile.imsi.clone();

    // The victim uses the network normally first; under a vector-reuse
    // policy this is what populates the store we are about to raid.
    world.ensure_attached(target);
    world.detach(target);

    let stolen = steal_auth_vectors(world, &victim_imsi);
    let stolen_count = stolen.len();

    let log_mark = world.net.attach_log.len();
    world.attacker = Some(Box::new(ImpersonationPort::new(victim_imsi.clone(), stolen)));

    let deadline = world.clock + 60;
    while world.clock < deadline {
        world.step();
        if world.net.attach_log[log_mark..].iter().any(|r| r.peer == EntityId::Atk) {
            world.step_n(2);
            break;
        }
    }

    let (matched, missed) = world
        .attacker
        .take()
        .and_then(|mut p| {
            p.as_any()
                .downcast_mut::<ImpersonationPort>()
                .map(|i| (i.challenges_matched, i.challenges_missed))
        })
        .unwrap_or((0, 0));

    let verdict = world.net.attach_log[log_mark..]
        .iter()
        .find(|r| r.peer == EntityId::Atk)
        .map(|r| (r.status, r.imsi.clone()));

    let mut evidence = vec![format!("vectors stolen from the network store: {stolen_count}")];
    evidence.push(format!(
        "challenges answered from loot: {matched}; challenges we held no answer for: {missed}"
    ));
    let succeeded = match &verdict {
        Some((status, imsi)) => {
            evidence.push(format!(
                "network attach log: peer=atk imsi={} status={}",
                imsi.as_ref().map(|i| i.as_str()).unwrap_or("-"),
                status.name()
            ));
            *status == AttachStatus::Attached && imsi.as_ref() == Some(&victim_imsi)
        }
        None => {
            evidence.push("network attach log shows no verdict for the attacker radio".into());
            false
        }
    };

    world.net.drop_session(&EntityId::Atk);

    AttackReport {
        kind: "steal_vectors",
        succeeded,
        queries: None,
        ticks: world.clock - start,
        evidence,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredictError {
    #[error("need at least two observed session keys, got {0}")]
    InsufficientData(usize),
    #[error("observed keys differ in width ({0} vs {1} bytes)")]
    WidthMismatch(usize, usize),
}

/// Predict the next session key from previously observed ones, assuming
/// the derivation chains keys by a fixed XOR step. Two observations fix
/// the step; the prediction is `last ^ (last ^ second_last)` applied
/// once more.
pub fn predict_next_kc(observed: &[Vec<u8>]) -> Result<Vec<u8>, PredictError> {
    if observed.len() < 2 {
        return Err(PredictError::InsufficientData(observed.len()));
    }
    let n = observed.len();
    let (a, b) = (&observed[n - 2], &observed[n - 1]);
    if a.len() != b.len() {
        return Err(PredictError::WidthMismatch(a.len(), b.len()));
    }
    let mask: Vec<u8> = a.iter().zip(b.iter()).map(|(x, y)| x ^ y).collect();
    Ok(b.iter().zip(mask.iter()).map(|(y, m)| y ^ m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auth::SimProfile;
    use crate::sim::{KcPolicy, WorldConfig};

    fn subscriber() -> SimProfile {
        SimProfile::new(Imsi::new("001015550000001").unwrap(), [0x33; 16])
    }

    #[test]
    fn stolen_vectors_let_the_attacker_attach_as_the_victim() {
        let mut cfg = WorldConfig::legacy();
        cfg.triplet_reuse = true;
        let mut w = World::new(cfg, 21);
        w.add_station("eve_target", subscriber(), 0, 0);
        let r = run_steal_vectors(&mut w, "eve_target");
        assert!(r.succeeded, "evidence: {:?}", r.evidence);
        assert!(r.evidence.iter().any(|e| e.contains("status=ATTACHED")));
        assert!(r.evidence.iter().any(|e| e.contains("from loot: 1")));
    }

    #[test]
    fn fresh_vector_policy_leaves_nothing_to_steal() {
        let mut w = World::new(WorldConfig::legacy(), 21);
        w.add_station("eve_target", subscriber(), 0, 0);
        let r = run_steal_vectors(&mut w, "eve_target");
        assert!(!r.succeeded, "evidence: {:?}", r.evidence);
        assert!(r.evidence.iter().any(|e| e.contains("stolen from the network store: 0")));
    }

    #[test]
    fn hardened_network_rejects_the_replayed_response() {
        let mut cfg = WorldConfig::hardened();
        cfg.triplet_reuse = true; // even with a (hypothetically) sloppy cache
        let mut w = World::new(cfg, 21);
        w.add_station("eve_target", subscriber(), 0, 0);
        let r = run_steal_vectors(&mut w, "eve_target");
        assert!(!r.succeeded, "evidence: {:?}", r.evidence);
    }

    #[test]
    fn predictor_needs_two_observations() {
        assert_eq!(predict_next_kc(&[]), Err(PredictError::InsufficientData(0)));
        assert_eq!(
            predict_next_kc(&[vec![1, 2, 3]]),
            Err(PredictError::InsufficientData(1))
        );
    }

    #[test]
    fn predictor_extends_an_xor_chain() {
        let k1 = vec![0x11, 0x22, 0x33];
        let mask = [0xA5, 0x5A, 0xFF];
        let k2: Vec<u8> = k1.iter().zip(mask).map(|(a, m)| a ^ m).collect();
        let k3: Vec<u8> = k2.iter().zip(mask).map(|(a, m)| a ^ m).collect();
        assert_eq!(predict_next_kc(&[k1, k2]).unwrap(), k3);
    }

    #[test]
    fn predictor_never_beats_fresh_keys() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut hits = 0u32;
        for _ in 0..10_000 {
            let keys: Vec<Vec<u8>> = (0..3).map(|_| (0..8).map(|_| rng.gen()).collect()).collect();
            if predict_next_kc(&keys[..2]).unwrap() == keys[2] {
                hits += 1;
            }
        }
        assert_eq!(hits, 0, "prediction must carry no power against fresh keys");
    }

    #[test]
    fn predict_works_under_recycled_derivation_policy() {
        let mut cfg = WorldConfig::legacy();
        cfg.kc_policy = KcPolicy::XorRecycle(0x00FF_00FF_00FF_00FF);
        let mut w = World::new(cfg, 9);
        w.add_station("frank", subscriber(), 0, 0);
        let r = super::super::execute(
            &mut w,
            &super::super::AttackSpec::PredictKc { target: "frank".into(), sessions: 3 },
        );
        assert!(r.succeeded, "evidence: {:?}", r.evidence);
    }
}
