//! Chosen-challenge key recovery against the legacy SIM algorithm.
//!
//! The legacy compression keeps each (Ki[i], Ki[i+8]) byte pair in a
//! lane of its own: challenge bytes outside {i, i+8} never mix into
//! round i's output word. Within a lane the first mixing layer narrows
//! to 7-bit values, so two different challenge pairs frequently map to
//! the same lane word — a collision visible in the full output. Every
//! collision cuts the 2^16 candidate byte pairs down by the lane-word
//! equation; one or two collisions leave exactly one survivor. Repeat
//! for all 8 lanes, assemble Ki, and confirm against fresh challenges.
//!
//! The oracle abstraction covers both physical card access (the reader
//! returns response and session key directly) and the over-the-air
//! variant, where a rogue cell poses the challenges and the session key
//! falls out of the breakable cipher the victim is commanded onto.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::auth::{
    fold_pair, hardened_a3a8, mini_comp128, pair_compress, sboxes, AuthAlgo, SessionKey,
};
use crate::sim::{EntityId, FakeBts, FakeMode, Identity, World};

/// Answers attacker-chosen authentication challenges.
pub trait ChallengeOracle {
    /// Run the subscriber's key-agreement algorithm on `rand`, giving
    /// the 32-bit response and 64-bit session key — or `None` when the
    /// equipment refused to answer.
    fn query(&mut self, rand: &[u8; 16]) -> Option<(u32, u64)>;
    /// Challenges consumed so far (refusals included).
    fn queries(&self) -> u64;
}

/// Physical card access: the algorithm runs on demand, no radio.
pub struct DirectSimOracle {
    ki: [u8; 16],
    algo: AuthAlgo,
    count: u64,
}

impl DirectSimOracle {
    pub fn new(ki: [u8; 16], algo: AuthAlgo) -> Self {
        DirectSimOracle { ki, algo, count: 0 }
    }
}

impl ChallengeOracle for DirectSimOracle {
    fn query(&mut self, rand: &[u8; 16]) -> Option<(u32, u64)> {
        self.count += 1;
        Some(match self.algo {
            AuthAlgo::MiniComp128 => mini_comp128(&self.ki, rand),
            AuthAlgo::Hardened => {
                // Even handing the attacker the full output changes
                // nothing: the wide pipe never collides.
                let (sres, kc) = hardened_a3a8(&self.ki, rand);
                (sres, u64::from_be_bytes(kc[..8].try_into().unwrap()))
            }
        })
    }

    fn queries(&self) -> u64 {
        self.count
    }
}

/// Point a rogue cell in oracle mode at a victim station and lure it
/// onto a live session, so queued challenges start flowing. Returns the
/// ticks spent on the lure.
pub fn ota_clone_setup(world: &mut World, victim: &str) -> u64 {
    let start = world.clock;
    world.fake = Some(FakeBts::new(FakeMode::CloneOracle));
    world.detach(victim);
    world.set_camping(victim, EntityId::Fake);
    let imsi = world.stations[victim].profile.imsi.clone();
    let page = world.fake.as_ref().unwrap().page(victim, Identity::Imsi(imsi));
    world.send(page);
    // Page → channel request → assignment + identity exchange.
    world.step_n(6);
    world.clock - start
}

/// Over-the-air oracle: each query is a challenge the rogue cell poses
/// to the victim, followed by a command onto the breakable cipher. The
/// response comes off the air; the session key is recovered from the
/// ciphering that follows (modelled through the station's key register
/// — the real-time break of the weak cipher is granted, not computed).
pub struct OtaOracle<'w> {
    world: &'w mut World,
    victim: String,
    /// Ticks to wait for one query's exchange before declaring silence.
    patience: u64,
    count: u64,
}

impl<'w> OtaOracle<'w> {
    pub fn new(world: &'w mut World, victim: &str) -> Self {
        OtaOracle { world, victim: victim.to_owned(), patience: 16, count: 0 }
    }

    pub fn into_world(self) -> &'w mut World {
        self.world
    }
}

impl ChallengeOracle for OtaOracle<'_> {
    fn query(&mut self, rand: &[u8; 16]) -> Option<(u32, u64)> {
        self.count += 1;
        let fake = self.world.fake.as_mut()?;
        let before = fake.sres_log.len();
        fake.pending_auths.push_back(*rand);
        for _ in 0..self.patience {
            self.world.step();
            let fake = self.world.fake.as_ref()?;
            if fake.sres_log.len() > before && fake.query_settled() {
                let (r, sres) = fake.sres_log[before];
                if r != *rand {
                    return None;
                }
                let key = self.world.stations.get(&self.victim)?.session_key()?;
                let SessionKey::Legacy(kc) = key else {
                    return None;
                };
                return Some((sres, kc));
            }
        }
        None
    }

    fn queries(&self) -> u64 {
        self.count
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CloneError {
    #[error("challenge budget spent after {queries} queries, {pairs_done}/8 byte pairs recovered")]
    BudgetExhausted { pairs_done: usize, queries: u64 },
    #[error("oracle stopped answering after {queries} queries, {pairs_done}/8 byte pairs recovered")]
    OracleSilent { pairs_done: usize, queries: u64 },
    #[error("no usable collision structure for byte pair {pair} after {queries} queries")]
    Ambiguous { pair: usize, queries: u64 },
    #[error("assembled key failed fresh-challenge verification ({queries} queries)")]
    VerifyFailed { queries: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneOutcome {
    pub ki: [u8; 16],
    pub queries: u64,
}

const SILENCE_LIMIT: u32 = 8;

/// Recover the subscriber key behind `oracle` within `budget` chosen
/// challenges (verification challenges included).
pub fn clone_ki(
    oracle: &mut dyn ChallengeOracle,
    budget: u64,
    rng: &mut ChaCha8Rng,
) -> Result<CloneOutcome, CloneError> {
    let tables = sboxes();
    let mut recovered = [0u8; 16];
    let mut base = [0u8; 16];
    rng.fill(&mut base);
    let mut silent: u32 = 0;

    for i in 0..8usize {
        // Challenge bytes alias in pairs (c and c+128 feed the lane
        // identically), so 128×128 covers the whole effective space.
        let mut order: Vec<(u8, u8)> = (0..128u8)
            .flat_map(|c| (0..128u8).map(move |d| (c, d)))
            .collect();
        order.shuffle(rng);

        let mut seen: HashMap<(u32, u64), (u8, u8)> = HashMap::new();
        let mut pool: Option<Vec<(u16, u16)>> = None;
        let mut found: Option<(u8, u8)> = None;

        for (c, d) in order {
            if oracle.queries() >= budget {
                return Err(CloneError::BudgetExhausted {
                    pairs_done: i,
                    queries: oracle.queries(),
                });
            }
            let mut r = base;
            r[i] = c;
            r[i + 8] = d;
            let Some(out) = oracle.query(&r) else {
                silent += 1;
                if silent >= SILENCE_LIMIT {
                    return Err(CloneError::OracleSilent {
                        pairs_done: i,
                        queries: oracle.queries(),
                    });
                }
                continue;
            };
            silent = 0;
            let Some(&(c1, d1)) = seen.get(&out) else {
                seen.insert(out, (c, d));
                continue;
            };
            // Two challenge pairs produced identical output, so the
            // lane words agree; keep only key pairs satisfying that.
            let survivors: Vec<(u16, u16)> = match pool.take() {
                Some(p) => p,
                None => (0..256u16)
                    .flat_map(|a| (0..256u16).map(move |b| (a, b)))
                    .collect(),
            }
            .into_iter()
            .filter(|&(ka, kb)| {
                let (u1, v1) = pair_compress(ka as u8, kb as u8, c1, d1, tables);
                let (u2, v2) = pair_compress(ka as u8, kb as u8, c, d, tables);
                fold_pair(u1, v1, i, tables) == fold_pair(u2, v2, i, tables)
            })
            .collect();
            match survivors.len() {
                1 => {
                    found = Some((survivors[0].0 as u8, survivors[0].1 as u8));
                    break;
                }
                0 => {
                    return Err(CloneError::Ambiguous { pair: i, queries: oracle.queries() })
                }
                _ => pool = Some(survivors),
            }
        }

        let Some((ka, kb)) = found else {
            return Err(CloneError::Ambiguous { pair: i, queries: oracle.queries() });
        };
        recovered[i] = ka;
        recovered[i + 8] = kb;
    }

    // Confirm the assembly against challenges the search never used.
    for _ in 0..3 {
        if oracle.queries() >= budget {
            return Err(CloneError::BudgetExhausted { pairs_done: 8, queries: oracle.queries() });
        }
        let mut r = [0u8; 16];
        rng.fill(&mut r);
        match oracle.query(&r) {
            Some(out) if out == mini_comp128(&recovered, &r) => {}
            Some(_) => return Err(CloneError::VerifyFailed { queries: oracle.queries() }),
            None => {
                return Err(CloneError::OracleSilent { pairs_done: 8, queries: oracle.queries() })
            }
        }
    }

    Ok(CloneOutcome { ki: recovered, queries: oracle.queries() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auth::{Imsi, SimProfile};
    use crate::sim::{World, WorldConfig};
    use rand::SeedableRng;

    fn random_ki(seed: u64) -> [u8; 16] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ki = [0u8; 16];
        rng.fill(&mut ki);
        ki
    }

    #[test]
    fn direct_oracle_recovers_planted_key() {
        for seed in [11u64, 12, 13] {
            let ki = random_ki(seed);
            let mut oracle = DirectSimOracle::new(ki, AuthAlgo::MiniComp128);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let out = clone_ki(&mut oracle, 50_000, &mut rng).expect("clone must succeed");
            assert_eq!(out.ki, ki);
            assert!(out.queries <= 5_000, "collision search took {} queries", out.queries);
        }
    }

    #[test]
    fn zero_budget_fails_immediately() {
        let mut oracle = DirectSimOracle::new(random_ki(1), AuthAlgo::MiniComp128);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = clone_ki(&mut oracle, 0, &mut rng).unwrap_err();
        assert_eq!(err, CloneError::BudgetExhausted { pairs_done: 0, queries: 0 });
    }

    #[test]
    fn wide_pipe_algorithm_defeats_collision_search() {
        let mut oracle = DirectSimOracle::new(random_ki(2), AuthAlgo::Hardened);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let err = clone_ki(&mut oracle, 100_000, &mut rng).unwrap_err();
        // The first lane exhausts its whole effective challenge space
        // without a single repeated output.
        assert_eq!(err, CloneError::Ambiguous { pair: 0, queries: 16_384 });
    }

    #[test]
    fn over_the_air_oracle_clones_legacy_victim() {
        let mut w = World::new(WorldConfig::legacy(), 99);
        let ki = random_ki(3);
        let imsi = Imsi::new("001010000000077").unwrap();
        w.add_station("victim", SimProfile::new(imsi, ki), 0, 0);
        ota_clone_setup(&mut w, "victim");

        let mut oracle = OtaOracle::new(&mut w, "victim");
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let out = clone_ki(&mut oracle, 50_000, &mut rng).expect("ota clone must succeed");
        assert_eq!(out.ki, ki);

        // The lure and every challenge are on the air, not hidden.
        let auths = w.trace.iter().filter(|l| l.contains("msg=AuthRequest")).count();
        assert!(auths as u64 >= out.queries, "queries must be visible in the trace");
    }

    #[test]
    fn over_the_air_oracle_starves_against_hardened_victim() {
        let mut w = World::new(WorldConfig::hardened(), 99);
        w.add_station(
            "victim",
            SimProfile::new(Imsi::new("001010000000078").unwrap(), random_ki(4)),
            0,
            0,
        );
        ota_clone_setup(&mut w, "victim");

        let mut oracle = OtaOracle::new(&mut w, "victim");
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let err = clone_ki(&mut oracle, 100_000, &mut rng).unwrap_err();
        assert_eq!(
            err,
            CloneError::OracleSilent { pairs_done: 0, queries: SILENCE_LIMIT as u64 }
        );
        // The station refused rather than answered: one rejection for
        // the first one-sided challenge, silence afterwards.
        let ms = &w.stations["victim"];
        assert_eq!(ms.attach_status, Some(crate::sim::AttachStatus::AuthNetworkFailed));
    }
}
