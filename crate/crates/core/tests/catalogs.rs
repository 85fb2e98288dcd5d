use std::path::PathBuf;

use msfload::astro::GeoLocation;
use msfload::features::{build_candidate_matrix, FeatureCatalog, RawData};
use msfload::synth::{generate, SynthConfig};
use msfload::timeseries::FeatureAspect;

fn catalog_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../catalogs").join(format!("{name}.toml"))
}

#[test]
fn shipped_catalogs_declare_expected_counts() {
    for (name, g, a, s) in [("maine", 56, 15, 9), ("nsw", 62, 15, 9), ("texas", 56, 15, 9)] {
        let cat = FeatureCatalog::from_path(&catalog_path(name)).unwrap();
        cat.validate().unwrap();
        let counts = cat.declared_counts();
        assert_eq!(counts.get(&FeatureAspect::Geographical), Some(&g), "{name}");
        assert_eq!(counts.get(&FeatureAspect::Astronomical), Some(&a), "{name}");
        assert_eq!(counts.get(&FeatureAspect::Social), Some(&s), "{name}");
        assert_eq!(cat.load_lags, 7);
    }
}

#[test]
fn maine_catalog_builds_on_synthetic_data() {
    let cat = FeatureCatalog::from_path(&catalog_path("maine")).unwrap();
    let loc = GeoLocation::new(43.66, -70.26, 0.0, -5.0).unwrap();
    let data = generate(&SynthConfig { n_days: 500, ..SynthConfig::default() }, &loc).unwrap();
    let cat = cat.with_holidays(data.holiday_dates());
    let mut raw = RawData::new(data.weather.clone());
    raw.extend(data.tides.clone());
    let m = build_candidate_matrix(&cat, &raw, &data.load).unwrap();
    assert_eq!(m.p(), 87);
    let counts = m.aspect_counts();
    assert_eq!(counts[&FeatureAspect::Geographical], 56);
    assert_eq!(counts[&FeatureAspect::Astronomical], 15);
    assert_eq!(counts[&FeatureAspect::Social], 9);
    assert_eq!(counts[&FeatureAspect::HistoricalLoad], 7);
    // The 50-day lags consume the leading rows.
    assert!(m.n() >= 500 - 50 && m.n() < 500);
    assert!(m.x().iter().all(|v| v.is_finite()));
}
