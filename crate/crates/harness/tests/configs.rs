use std::path::PathBuf;

use trajloc_harness::config::ScenarioConfig;
use trajloc_harness::experiments::{builtin, NAMES};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn committed_configs_match_builtins() {
    for name in NAMES {
        let path = configs_dir().join(format!("{name}.toml"));
        let cfg = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(cfg, builtin(name).unwrap(), "{name}");
    }
}

#[test]
fn documented_example_parses() {
    let cfg = ScenarioConfig::load(&configs_dir().join("example.toml")).unwrap();
    let s = cfg.setting(0.0).unwrap();
    assert_eq!(s.sources.len(), 2);
    assert_eq!(s.sources[1].phi, -10.0);
}
