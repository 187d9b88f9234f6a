//! Scenario file format: canonical rendering is a fixpoint of parsing.
//! For any parseable text `t`, `parse(render(parse(t))) == parse(t)` —
//! line order, spacing, and comments may vary, the meaning may not.

use proptest::prelude::*;

use gsmlab_core::scenario::Scenario;

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,7}".prop_filter("distinct from keywords", |s| s != "network")
}

fn imsi_digits() -> impl Strategy<Value = String> {
    "[0-9]{15}"
}

fn ki_hex() -> impl Strategy<Value = String> {
    "[0-9a-f]{32}"
}

/// Decimal degrees with 1..=6 fractional digits, either sign.
fn coordinate() -> impl Strategy<Value = String> {
    (any::<bool>(), 0u32..180, "[0-9]{1,6}").prop_map(|(neg, whole, frac)| {
        format!("{}{whole}.{frac}", if neg { "-" } else { "" })
    })
}

#[derive(Debug, Clone)]
struct StationText {
    id: String,
    imsi: String,
    ki: String,
    lat: Option<String>,
    lon: Option<String>,
}

fn station() -> impl Strategy<Value = StationText> {
    (
        ident(),
        imsi_digits(),
        ki_hex(),
        proptest::option::of(coordinate()),
        proptest::option::of(coordinate()),
    )
        .prop_map(|(id, imsi, ki, lat, lon)| StationText { id, imsi, ki, lat, lon })
}

/// Assemble a scenario text with shuffled line order and scattered
/// comments/blank lines, always semantically valid.
fn scenario_text() -> impl Strategy<Value = String> {
    let base = (
        ident(),
        prop_oneof![Just("LEGACY"), Just("HARDENED")],
        proptest::option::of(any::<u64>()),
        proptest::collection::vec(station(), 1..3),
        any::<bool>(),
        any::<bool>(),
        proptest::option::of(0u64..=u64::MAX),
    );
    base.prop_flat_map(|(name, variant, seed, mut stations, with_flood, with_spoof, recycle)| {
        // Station ids must be unique.
        stations.dedup_by(|a, b| a.id == b.id);
        stations.sort_by(|a, b| a.id.cmp(&b.id));
        stations.dedup_by(|a, b| a.id == b.id);

        let mut lines = vec![
            format!("name = {name}"),
            format!("variant = {variant}"),
        ];
        if let Some(s) = seed {
            lines.push(format!("seed = {s}"));
        }
        if let Some(mask) = recycle {
            lines.push(format!("network.kc_policy = XOR_RECYCLE:{mask:016x}"));
        }
        for st in &stations {
            lines.push(format!("ms.{}.imsi = {}", st.id, st.imsi));
            lines.push(format!("ms.{}.ki = {}", st.id, st.ki));
            if let Some(lat) = &st.lat {
                lines.push(format!("ms.{}.lat = {lat}", st.id));
            }
            if let Some(lon) = &st.lon {
                lines.push(format!("ms.{}.lon = {lon}", st.id));
            }
        }
        if with_flood {
            lines.push("attack.rach_flood.rate = 12".into());
            lines.push("attack.rach_flood.duration = 40".into());
        }
        if with_spoof {
            let target = stations[0].id.clone();
            lines.push(format!("attack.sms_spoof.target = {target}"));
            lines.push("attack.sms_spoof.originator = TRUSTED".into());
            lines.push("attack.sms_spoof.text = click here # not a comment".into());
        }
        // Attack parameter lines keep their relative order (grouping by
        // attack is part of the grammar); everything else may shuffle.
        let fixed_from = lines.iter().position(|l| l.starts_with("attack.")).unwrap_or(lines.len());
        let tail = lines.split_off(fixed_from);
        Just(lines).prop_shuffle().prop_map(move |mut shuffled| {
            shuffled.extend(tail.iter().cloned());
            let mut text = String::from("# generated\n\n");
            for l in shuffled {
                text.push_str(&l);
                text.push('\n');
            }
            text
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn canonical_render_is_a_parse_fixpoint(text in scenario_text()) {
        let first = Scenario::parse(&text).expect("generated text is valid");
        let rendered = first.render();
        let second = Scenario::parse(&rendered).expect("canonical text is valid");
        prop_assert_eq!(&first, &second);
        // And rendering is idempotent from there on.
        prop_assert_eq!(rendered, second.render());
    }
}

/// The bundled scenarios are themselves fixpoints of their meaning.
#[test]
fn bundled_scenarios_roundtrip() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).expect("bundled scenario directory") {
        let path = entry.unwrap().path();
        if path.extension().map(|e| e != "scn").unwrap_or(true) {
            continue;
        }
        seen += 1;
        let text = std::fs::read_to_string(&path).unwrap();
        let first = Scenario::parse(&text)
            .unwrap_or_else(|e| panic!("{} does not parse: {e}", path.display()));
        let second = Scenario::parse(&first.render()).unwrap();
        assert_eq!(first, second, "{} is not meaning-stable", path.display());
        assert!(
            text.lines().any(|l| l.trim_start().starts_with("seed")),
            "{} must pin its seed explicitly",
            path.display()
        );
    }
    assert_eq!(seen, 7, "expected the seven bundled scenarios");
}
