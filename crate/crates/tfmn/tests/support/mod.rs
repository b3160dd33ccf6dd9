#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tfmn::Config;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_toml() -> PathBuf {
    fixtures().join("tfmn.toml")
}

/// The fixture config writing into `out`, plus any extra overrides.
pub fn fixture_config(out: &Path, extra: &[(&str, &str)]) -> Config {
    let mut env = vec![("TFMN_PATHS__OUTPUT".to_string(), out.display().to_string())];
    env.extend(extra.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    Config::load(&fixture_toml(), env).expect("fixture config loads")
}

/// Small grids so that runs that only check plumbing stay fast.
pub const SMALL_GRIDS: [(&str, &str); 6] = [
    ("TFMN_GRID__RFR__N_ESTIMATORS", "[5, 10]"),
    ("TFMN_GRID__RFR__MAX_DEPTH", "[2]"),
    ("TFMN_GRID__RFR__MAX_FEATURES", "[\"sqrt\"]"),
    ("TFMN_GRID__GBM__N_ESTIMATORS", "[5, 10]"),
    ("TFMN_GRID__GBM__MAX_DEPTH", "[2]"),
    ("TFMN_GRID__GBM__LEARNING_RATE", "[0.1]"),
];
