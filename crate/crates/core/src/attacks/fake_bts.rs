//! Rogue-cell attacks: identity catching with cleartext capture, and
//! unauthenticated positioning.
//!
//! Both drivers follow the same lure: the rogue cell outpowers the
//! genuine downlink (modelled as a camping switch), the victim runs its
//! attach against it, and what happens next depends entirely on whether
//! the victim demands proof of the network's identity.

use crate::sim::{AttachStatus, EntityId, FakeBts, FakeMode, Frame, Identity, UmMessage, World};

use super::AttackReport;

/// Lure the victim onto a rogue cell, switch ciphering off, and read
/// its identity and whatever it transmits. Succeeds only with both the
/// completed attach and at least one captured cleartext payload.
pub fn run_fake_bts(world: &mut World, target: &str, probe: Option<&str>) -> AttackReport {
    let start = world.clock;
    let victim_imsi = world.stations[target].profile.imsi.clone();

    // The victim lives its normal life first (under the hardened
    // protocol this also equips it with a temporary identity).
    world.ensure_attached(target);

    if let Some(p) = probe {
        world.stations.get_mut(target).unwrap().outbox.push(p.as_bytes().to_vec());
    }
    world.fake = Some(FakeBts::new(FakeMode::ImsiCatch));
    world.detach(target);
    world.set_camping(target, EntityId::Fake);
    let out = world.attach(target);
    world.step_n(4);

    let fake = world.fake.take().unwrap();
    world.set_camping(target, EntityId::Net);
    world.detach(target);

    let imsi_caught = fake
        .caught
        .iter()
        .any(|(src, id)| *src == EntityId::Ms(target.to_owned())
            && matches!(id, Identity::Imsi(i) if *i == victim_imsi));
    let tmsi_caught = fake
        .caught
        .iter()
        .any(|(src, id)| *src == EntityId::Ms(target.to_owned()) && matches!(id, Identity::Tmsi(_)));
    // Long payloads cross the air split over several frames; judge the
    // capture against the reassembled stream, not frame by frame.
    let stream: Vec<u8> = fake.captured_traffic.concat();
    let payload_caught = match probe {
        Some(p) => !p.is_empty() && stream.windows(p.len()).any(|w| w == p.as_bytes()),
        None => false,
    };

    let mut evidence = vec![format!(
        "victim attach toward rogue cell ended {}",
        out.status.name()
    )];
    evidence.push(match (imsi_caught, tmsi_caught) {
        (true, _) => format!("permanent identity harvested: imsi:{victim_imsi}"),
        (false, true) => "only a temporary identity was volunteered; permanent identity stayed private".into(),
        (false, false) => "no identity harvested".into(),
    });
    evidence.push(match (probe, payload_caught) {
        (Some(p), true) => format!(
            "cleartext capture matches the victim's transmission ({} bytes)",
            p.len()
        ),
        (Some(_), false) => "victim transmitted nothing readable to the rogue cell".into(),
        (None, _) => "no probe traffic configured, so no payload evidence".into(),
    });
    if out.status != AttachStatus::Attached {
        evidence.push("victim refused the unproven challenge and dropped the cell".into());
    }

    AttackReport {
        kind: "fake_bts",
        succeeded: out.status == AttachStatus::Attached && payload_caught,
        queries: None,
        ticks: world.clock - start,
        evidence,
    }
}

/// Ask a victim for its position from a cell that never proved itself.
/// Succeeds only if the returned coordinates equal the subscriber's
/// configured ground truth.
pub fn run_rrlp_locate(world: &mut World, target: &str) -> AttackReport {
    let start = world.clock;
    let truth = {
        let ms = &world.stations[target];
        (ms.lat, ms.lon)
    };
    let refusals_before = world.stations[target].location_refusals;

    world.ensure_attached(target);
    world.fake = Some(FakeBts::new(FakeMode::ImsiCatch));
    world.detach(target);
    world.set_camping(target, EntityId::Fake);
    let out = world.attach(target);

    world.send(Frame::new(
        EntityId::Fake,
        EntityId::Ms(target.to_owned()),
        UmMessage::LocationRequest,
    ));
    world.step_n(3);

    let fake = world.fake.take().unwrap();
    world.set_camping(target, EntityId::Net);
    world.detach(target);

    let located = fake
        .located
        .iter()
        .find(|(src, _, _)| *src == EntityId::Ms(target.to_owned()))
        .map(|&(_, lat, lon)| (lat, lon));
    let refusals = world.stations[target].location_refusals - refusals_before;

    let mut evidence = vec![format!(
        "victim attach toward rogue cell ended {}",
        out.status.name()
    )];
    match located {
        Some((lat, lon)) => {
            evidence.push(format!(
                "position obtained: lat={lat} lon={lon} (micro-degrees)"
            ));
            evidence.push(format!(
                "matches subscriber ground truth: {}",
                (lat, lon) == truth
            ));
        }
        None => {
            evidence.push(format!(
                "no position answer; victim refused {refusals} unauthenticated quer{}",
                if refusals == 1 { "y" } else { "ies" }
            ));
        }
    }

    AttackReport {
        kind: "rrlp_locate",
        succeeded: located == Some(truth),
        queries: None,
        ticks: world.clock - start,
        evidence,
    }
}
