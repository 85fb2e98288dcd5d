use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use super::synthetic::catalog_path;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_msfload")
}

pub fn msfload(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

/// A small but complete run configuration over CSVs in `<dir>/data`.
pub fn config_text(extra: &str) -> String {
    let catalog = catalog_path("maine").canonicalize().unwrap();
    format!(
        r#"seed = 3
{extra}

[data]
catalog = "{}"
load = "data/load.csv"
weather = "data/weather.csv"
holidays = "data/holidays.csv"
tides = "data/tides.csv"

[selection]
k = 20

[models.svr]
max_iters = 200

[models.gbrt]
n_trees = 20

[models.mlp]
max_iters = 40

[[models.grid]]
kind = "gbrt"
param = "max_depth"
values = [2, 3]

[protocol]
rule = "holdout"
fraction = 0.2
iterations = 2

[scenario.group_sizes]
geographical = 3
astronomical = 3
social = 3

[rank]
features = ["temp_max_f", "clear_sky_ghi_lag50", "saturday"]

[synth]
n_days = 500
"#,
        catalog.display()
    )
}

/// Writes the configuration into `dir` and generates the synthetic CSVs it
/// refers to. Returns the configuration path.
pub fn workspace(dir: &Path, extra: &str) -> PathBuf {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config_text(extra)).unwrap();
    let data = dir.join("data");
    let out = msfload(&["synth", "--config", cfg.to_str().unwrap(), "--out", data.to_str().unwrap()]);
    assert!(out.status.success(), "synth failed: {}", String::from_utf8_lossy(&out.stderr));
    cfg
}

/// Every file in `dir` with its bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}
