mod common;

use common::solar::{twilight_errors, zenith_errors};

#[test]
fn zenith_within_half_degree_of_spa() {
    for (name, err) in zenith_errors() {
        assert!(err < 0.5, "{name}: zenith off by {err:.4}°");
    }
}

#[test]
fn civil_twilight_within_five_minutes_of_almanac() {
    for (name, err) in twilight_errors() {
        assert!(err < 5.0, "{name}: twilight duration off by {err:.2} min");
    }
}
