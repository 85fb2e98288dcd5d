use std::path::PathBuf;

use msfload::astro::GeoLocation;
use msfload::features::{build_candidate_matrix, FeatureCatalog, RawData};
use msfload::synth::{generate, SynthConfig, SynthDataset};
use msfload::timeseries::FeatureMatrix;

pub fn catalog_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../catalogs").join(format!("{name}.toml"))
}

/// Synthetic dataset for `seed` and its full candidate matrix under the
/// shipped Maine catalog.
pub fn synthetic_matrix(seed: u64) -> (SynthDataset, FeatureMatrix) {
    let catalog = FeatureCatalog::from_path(&catalog_path("maine")).unwrap();
    let data = generate(&SynthConfig { seed, ..SynthConfig::default() }, &catalog.location).unwrap();
    let catalog = catalog.with_holidays(data.holiday_dates());
    let mut raw = RawData::new(data.weather.clone());
    raw.extend(data.tides.clone());
    let matrix = build_candidate_matrix(&catalog, &raw, &data.load).unwrap();
    (data, matrix)
}

pub fn maine() -> GeoLocation {
    FeatureCatalog::from_path(&catalog_path("maine")).unwrap().location
}
