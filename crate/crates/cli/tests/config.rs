use std::path::Path;

use multiplicity_cli::{parse_config, parse_config_str, ConfigError, PipelineOrder};
use multiplicity_core::filtering::FilterMode;
use multiplicity_core::{LossKind, Method};

const MINIMAL: &str = r#"
[[datasets]]
name = "toy"
path = "toy.csv"
target = "class"
"#;

#[test]
fn minimal_config_gets_defaults() {
    let c = parse_config_str(MINIMAL, Path::new("/base")).unwrap();
    assert_eq!(c.epsilon, 0.05);
    assert_eq!(c.target_ratio, 1.0);
    assert_eq!(c.pool_size, 50);
    assert_eq!(c.test_fraction, 0.25);
    assert_eq!(c.repeats, 1);
    assert_eq!(c.clusters, 3);
    assert_eq!(c.loss, LossKind::OneMinusAuc);
    assert_eq!(c.order, PipelineOrder::FilterFirst);
    assert_eq!(c.balancing, vec![Method::None]);
    assert_eq!(c.filtering, vec![FilterMode::None]);
    assert_eq!(c.datasets[0].path, Path::new("/base/toy.csv"));
    assert_eq!(c.output_dir, Path::new("/base/results"));
    assert_eq!(c.n_cells(), 1);
}

#[test]
fn misspelled_key_is_rejected_with_a_suggestion() {
    let text = format!("epsilonn = 0.1\n{MINIMAL}");
    match parse_config_str(&text, Path::new(".")) {
        Err(ConfigError::UnknownKey { key, suggestion }) => {
            assert_eq!(key, "epsilonn");
            assert_eq!(suggestion.as_deref(), Some("epsilon"));
        }
        other => panic!("expected UnknownKey, got {other:?}"),
    }
    let msg = parse_config_str(&text, Path::new(".")).unwrap_err().to_string();
    assert!(msg.contains("did you mean `epsilon`"), "{msg}");
}

#[test]
fn unknown_dataset_key_is_rejected() {
    let text = MINIMAL.replace("target =", "tagret =");
    match parse_config_str(&text, Path::new(".")) {
        Err(ConfigError::UnknownKey { key, suggestion }) => {
            assert_eq!(key, "datasets.tagret");
            assert_eq!(suggestion.as_deref(), Some("datasets.target"));
        }
        other => panic!("expected UnknownKey, got {other:?}"),
    }
}

#[test]
fn unrelated_key_has_no_suggestion() {
    let text = format!("zzzzzzzz = 1\n{MINIMAL}");
    assert!(matches!(
        parse_config_str(&text, Path::new(".")),
        Err(ConfigError::UnknownKey { suggestion: None, .. })
    ));
}

#[test]
fn missing_target_is_a_dataset_error() {
    let text = "[[datasets]]\nname = \"toy\"\npath = \"toy.csv\"\n";
    assert!(matches!(parse_config_str(text, Path::new(".")), Err(ConfigError::MissingDataset(_))));
}

#[test]
fn empty_dataset_list_is_rejected() {
    assert!(matches!(parse_config_str("epsilon = 0.1\n", Path::new(".")), Err(ConfigError::MissingDataset(_))));
}

#[test]
fn duplicate_dataset_names_are_rejected() {
    let text = format!("{MINIMAL}{MINIMAL}");
    assert!(matches!(parse_config_str(&text, Path::new(".")), Err(ConfigError::MissingDataset(_))));
}

#[test]
fn none_is_added_first_and_repeats_dropped() {
    let text = format!("balancing = [\"smote\", \"none\", \"smote\", \"adasyn\"]\nfiltering = [\"intersect\"]\n{MINIMAL}");
    let c = parse_config_str(&text, Path::new(".")).unwrap();
    assert_eq!(c.balancing, vec![Method::None, Method::Smote, Method::Adasyn]);
    assert_eq!(c.filtering, vec![FilterMode::None, FilterMode::Intersection]);
    assert_eq!(c.n_cells(), 6);
}

#[test]
fn bad_values_are_rejected() {
    for line in [
        "epsilon = -0.1",
        "repeats = 0",
        "pool_size = 1",
        "target_ratio = 0.5",
        "test_fraction = 1.0",
        "balancing = [\"smoat\"]",
        "filtering = [\"both\"]",
        "loss = \"hinge\"",
    ] {
        let text = format!("{line}\n{MINIMAL}");
        assert!(
            matches!(parse_config_str(&text, Path::new(".")), Err(ConfigError::Invalid(_))),
            "{line} should be rejected"
        );
    }
}

#[test]
fn wrong_type_is_a_parse_error() {
    let text = format!("epsilon = \"small\"\n{MINIMAL}");
    assert!(matches!(parse_config_str(&text, Path::new(".")), Err(ConfigError::Parse(_))));
    assert!(matches!(parse_config_str("[[datasets]\n", Path::new(".")), Err(ConfigError::Parse(_))));
}

#[test]
fn optional_keys_parse() {
    let text = format!(
        "order = \"balance_first\"\nloss = \"error\"\ninclude_reference = true\nworkers = 2\nk = 3\nalpha = 0.1\n{MINIMAL}"
    );
    let c = parse_config_str(&text, Path::new(".")).unwrap();
    assert_eq!(c.order, PipelineOrder::BalanceFirst);
    assert_eq!(c.loss, LossKind::ErrorRate);
    assert!(c.include_reference);
    assert_eq!((c.workers, c.k, c.alpha), (2, 3, 0.1));
}

#[test]
fn paths_resolve_against_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, MINIMAL).unwrap();
    let c = parse_config(&path).unwrap();
    assert_eq!(c.datasets[0].path, dir.path().join("toy.csv"));
    assert!(matches!(parse_config(&dir.path().join("absent.toml")), Err(ConfigError::Read { .. })));
}
