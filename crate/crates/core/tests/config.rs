use std::path::Path;

use proptest::prelude::*;
use warpcurv::config::{parse_config, CheckSpec, FamilySpec, FiberKind, ModeSpec, RunConfig};

fn shipped(name: &str) -> String {
    std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../..")
            .join(name),
    )
    .unwrap()
}

#[test]
fn shipped_configs_round_trip() {
    for name in [
        "configs/demo.toml",
        "configs/hyperbolic.toml",
        "docs/config-schema.toml",
    ] {
        let cfg = parse_config(&shipped(name)).unwrap();
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg, "{name}");
    }
}

#[test]
fn demo_plan_is_five_families_by_six_checks() {
    let cfg = parse_config(&shipped("configs/demo.toml")).unwrap();
    assert_eq!(cfg.families.len(), 5);
    assert_eq!(cfg.checks.len(), 6);
}

fn family() -> impl Strategy<Value = FamilySpec> {
    let name = prop::option::of("[a-z]{1,6}");
    prop_oneof![
        (name.clone(), -3.0..3.0f64).prop_map(|(name, s)| FamilySpec::Slice { name, s }),
        (
            name,
            -3.0..3.0f64,
            prop::collection::vec(([-2i32..=2, -2i32..=2], -1.0..1.0f64, -1.0..1.0f64), 0..3)
        )
            .prop_map(|(name, base, modes)| FamilySpec::TorusGraph {
                name,
                base,
                modes: modes
                    .into_iter()
                    .map(|(k, cos, sin)| ModeSpec {
                        wavenumbers: k.to_vec(),
                        cos,
                        sin
                    })
                    .collect(),
            }),
    ]
}

proptest! {
    #[test]
    fn generated_configs_round_trip(
        families in prop::collection::vec(family(), 1..4),
        res in 8usize..200,
        seed in 0..=i64::MAX as u64,
        scale in 0.1..10.0f64,
        periods in prop::option::of(prop::collection::vec(0.1..5.0f64, 2)),
        checks in prop::collection::vec(prop_oneof![
            Just(CheckSpec::Hk),
            Just(CheckSpec::Minkowski(0)),
            Just(CheckSpec::Minkowski(1)),
            Just(CheckSpec::Garding),
            Just(CheckSpec::AmbientSelftest),
        ], 1..5),
        identity in 1e-14..1e-3f64,
    ) {
        // names must be unique, so label duplicates away
        let families: Vec<FamilySpec> = families
            .into_iter()
            .enumerate()
            .map(|(i, f)| match f {
                FamilySpec::Slice { name, s } => FamilySpec::Slice { name: name.map(|n| format!("{n}{i}")), s },
                FamilySpec::TorusGraph { name, base, modes } => {
                    FamilySpec::TorusGraph { name: name.map(|n| format!("{n}{i}")), base, modes }
                }
                other => other,
            })
            .collect();
        let mut text = format!(
            "resolution = {res}\nseed = {seed}\nchecks = {:?}\n[ambient]\nn = 2\nfiber = \"flat-torus\"\npotential_scale = {scale:?}\n",
            checks.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        );
        if let Some(p) = &periods {
            text += &format!("periods = [{:?}, {:?}]\n", p[0], p[1]);
        }
        text += &format!("[tolerances]\nidentity = {identity:?}\n");
        text += "[[families]]\nkind = \"slice\"\ns = 0.0\n";
        let mut base: RunConfig = parse_config(&text).unwrap();
        base.families = families;
        prop_assert_eq!(base.ambient.fiber, FiberKind::FlatTorus);
        base.validate().unwrap();
        let once = parse_config(&base.to_toml()).unwrap();
        prop_assert_eq!(&once, &base);
        prop_assert_eq!(parse_config(&once.to_toml()).unwrap(), once);
    }
}
