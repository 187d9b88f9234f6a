//! Random-access flood: drown the shared access channel in bogus
//! channel requests and measure what happens to honest attach latency.
//!
//! This is the one attack in the suite that neither protocol variant
//! stops — the access channel runs before any authentication exists, on
//! either variant, so the flood degrades both equally. The report is
//! therefore judged on honesty (measured rates and latencies), not on a
//! legacy-vs-hardened split.

use std::any::Any;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::sim::{AttachStatus, AttackerPort, EntityId, Frame, TapAction, UmMessage, World};

/// Emits `rate` bogus channel requests per tick until the deadline.
pub struct FloodPort {
    pub rate: u32,
    pub until: u64,
    pub sent: u64,
}

impl AttackerPort for FloodPort {
    fn on_frame(&mut self, _clock: u64, _frame: &Frame) -> TapAction {
        TapAction::Pass
    }

    fn inject(&mut self, clock: u64, rng: &mut ChaCha8Rng) -> Vec<Frame> {
        if clock >= self.until {
            return Vec::new();
        }
        self.sent += self.rate as u64;
        (0..self.rate)
            .map(|_| {
                Frame::new(
                    EntityId::Atk,
                    EntityId::Net,
                    UmMessage::ChannelRequest { reference: rng.gen() },
                )
            })
            .collect()
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}

/// One honest attach attempt: final status plus how long it took.
pub type AttemptRecord = (AttachStatus, u64);

#[derive(Debug, Clone)]
pub struct FloodStats {
    pub during: Vec<AttemptRecord>,
    pub after: Vec<AttemptRecord>,
    pub flood_frames: u64,
}

impl FloodStats {
    pub fn success_rate(records: &[AttemptRecord]) -> f64 {
        if records.is_empty() {
            return 1.0;
        }
        let ok = records.iter().filter(|(s, _)| *s == AttachStatus::Attached).count();
        ok as f64 / records.len() as f64
    }

    pub fn mean_latency(records: &[AttemptRecord]) -> f64 {
        if records.is_empty() {
            return 0.0;
        }
        records.iter().map(|&(_, t)| t as f64).sum::<f64>() / records.len() as f64
    }
}

/// Run the flood at `rate` requests per tick for `duration` ticks while
/// one honest station keeps trying to attach, then let the air clear
/// and measure recovery.
pub fn run_rach_flood(world: &mut World, station: &str, rate: u32, duration: u64) -> FloodStats {
    world.detach(station);

    let flood_end = world.clock + duration;
    world.attacker = Some(Box::new(FloodPort { rate, until: flood_end, sent: 0 }));

    let mut during = Vec::new();
    // Only count attempts that can complete inside the flood window —
    // an attempt straddling the end would mix the two regimes.
    let slack = world.cfg.rach_timeout + 10;
    while world.clock + slack <= flood_end {
        let t0 = world.clock;
        let out = world.attach(station);
        during.push((out.status, world.clock - t0));
        world.detach(station);
    }
    while world.clock < flood_end {
        world.step();
    }

    let mut after = Vec::new();
    for _ in 0..3 {
        let t0 = world.clock;
        let out = world.attach(station);
        after.push((out.status, world.clock - t0));
        world.detach(station);
    }

    let flood_frames = world
        .attacker
        .take()
        .and_then(|mut p| p.as_any().downcast_mut::<FloodPort>().map(|f| f.sent))
        .unwrap_or(0);

    FloodStats { during, after, flood_frames }
}
