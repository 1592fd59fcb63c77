use wellposed::experiment::{run, run_to_dir, ExperimentConfig, ExperimentKind};
use wellposed::Error;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig::new(kind).with_seed(7).with_trials(3)
}

#[test]
fn same_seed_same_report() {
    for kind in [ExperimentKind::QuadrupleIdentities, ExperimentKind::ComposeDouble, ExperimentKind::Radius] {
        let a = run(&small(kind)).unwrap();
        let b = run(&small(kind)).unwrap();
        assert!(a.passed, "{kind:?}: {:?}", a.failures().collect::<Vec<_>>());
        assert_eq!(a.timeless_json().unwrap(), b.timeless_json().unwrap());
    }
}

#[test]
fn different_seed_changes_payload() {
    let a = run(&small(ExperimentKind::Radius)).unwrap();
    let b = run(&small(ExperimentKind::Radius).with_seed(8)).unwrap();
    assert_ne!(a.timeless_json().unwrap(), b.timeless_json().unwrap());
}

#[test]
fn config_round_trips_through_json() {
    let json = r#"{
        "kind": "k0-sweep",
        "seed": 4,
        "trials": 2,
        "dims": {"max_n": 4, "max_io": 2},
        "tolerances": {"breakdown_margin": 1.0}
    }"#;
    let cfg = ExperimentConfig::from_json(json).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.kind, ExperimentKind::K0Sweep);
    let rep = run(&cfg).unwrap();
    assert_eq!(rep.schema_version, 1);
    assert_eq!(rep.config.seed, 4);
    let doc: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
    assert_eq!(doc["kind"], "k0-sweep");
    assert!(doc["assertions"].as_array().unwrap().iter().all(|a| a["passed"].is_boolean()));
}

#[test]
fn bad_configs_are_usage_errors() {
    let cases = [
        r#"{"kind": "radius", "tolerances": {"no_such_check": 1.0}}"#,
        r#"{"kind": "radius", "tolerances": {"radius_identity": -1.0}}"#,
        r#"{"kind": "radius", "trials": 0}"#,
        r#"{"kind": "radius", "focus": "limits"}"#,
        r#"{"kind": "radius", "gains": [1.0]}"#,
        r#"{"kind": "beam-observability", "gains": [-1.0]}"#,
        r#"{"kind": "radius", "extra": 1}"#,
        r#"{"kind": "teleport"}"#,
        r#"{"kind": "radius""#,
    ];
    for c in cases {
        let err = ExperimentConfig::from_json(c).and_then(|cfg| cfg.validate().map(|_| cfg)).unwrap_err();
        assert!(matches!(err, Error::Usage(_)), "{c}: {err}");
    }
}

#[test]
fn unknown_tolerance_lists_known_names() {
    let msg = ExperimentConfig::from_json(r#"{"kind": "radius", "tolerances": {"nope": 1.0}}"#).unwrap_err().to_string();
    assert!(msg.contains("radius_identity"), "{msg}");
}

#[test]
fn tightened_tolerance_fails_honestly() {
    let mut cfg = small(ExperimentKind::Radius);
    cfg.tolerances.insert("preserved_sigma_ratio".into(), 10.0);
    let rep = run(&cfg).unwrap();
    assert!(!rep.passed);
    let failed: Vec<_> = rep.failures().map(|a| a.name.as_str()).collect();
    assert_eq!(failed, ["preserved_sigma_ratio"]);
}

#[test]
fn traces_are_written_next_to_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run_to_dir(&small(ExperimentKind::QuadrupleIdentities), dir.path()).unwrap();
    assert!(dir.path().join("report.json").is_file());
    for name in &rep.traces {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.lines().count() > 1, "{name} is empty");
    }
}
