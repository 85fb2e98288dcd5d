//! Astronomical candidate features: solar zenith angle, civil twilight
//! duration, clear-sky irradiance, sunshine duration and moon phase.
//!
//! Solar geometry follows the NOAA solar-calculator formulation (a low-order
//! Meeus ephemeris in Julian centuries), good to a few hundredths of a degree
//! for 1950-2050. No refraction correction is applied.

use chrono::{NaiveDate, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Timestamp;

pub use crate::features::lag_series;

/// Sun altitude that defines civil dawn and dusk.
pub const CIVIL_TWILIGHT_ALTITUDE: f64 = -6.0;

/// Mean synodic month in days.
pub const SYNODIC_MONTH_DAYS: f64 = 29.530588;

/// 2000-01-06 18:14 UTC, a new moon.
pub const NEW_MOON_EPOCH_UNIX: i64 = 947_182_440;

/// Observed / clear-sky ratio above which a minute counts as sunshine.
pub const SUNSHINE_RATIO: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoLocation {
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default)]
    pub elevation: f64,
    #[serde(default)]
    pub utc_offset: f64,
}

impl GeoLocation {
    pub fn new(latitude: f64, longitude: f64, elevation: f64, utc_offset: f64) -> Result<Self> {
        let loc = Self {
            latitude,
            longitude,
            elevation,
            utc_offset,
        };
        loc.validate()?;
        Ok(loc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::Parameter(format!("latitude {} outside [-90, 90]", self.latitude)));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::Parameter(format!("longitude {} outside [-180, 180]", self.longitude)));
        }
        if !self.elevation.is_finite() || !(-14.0..=14.0).contains(&self.utc_offset) {
            return Err(Error::Parameter("elevation must be finite and utc_offset within ±14 h".into()));
        }
        Ok(())
    }

    /// Portland, Maine.
    pub fn portland_me() -> Self {
        Self {
            latitude: 43.66,
            longitude: -70.26,
            elevation: 0.0,
            utc_offset: -5.0,
        }
    }

    fn local_midnight_unix(&self, date: NaiveDate) -> f64 {
        let days = date.signed_duration_since(NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days();
        days as f64 * 86_400.0 - self.utc_offset * 3600.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolarPosition {
    /// Degrees from local vertical, in [0, 180].
    pub zenith: f64,
    /// Degrees clockwise from north, in [0, 360).
    pub azimuth: f64,
}

impl SolarPosition {
    pub fn altitude(&self) -> f64 {
        90.0 - self.zenith
    }
}

pub fn solar_position(loc: &GeoLocation, t: &Timestamp) -> SolarPosition {
    solar_position_unix(loc, t.unix() as f64)
}

/// Solar position at a (fractional) unix time.
pub fn solar_position_unix(loc: &GeoLocation, unix: f64) -> SolarPosition {
    // Julian centuries since J2000.0
    let jd = unix / 86_400.0 + 2_440_587.5;
    let t = (jd - 2_451_545.0) / 36_525.0;

    let mean_long = (280.46646 + t * (36_000.76983 + t * 0.0003032)).rem_euclid(360.0);
    let mean_anom = 357.52911 + t * (35_999.05029 - 0.0001537 * t);
    let ecc = 0.016708634 - t * (0.000042037 + 0.0000001267 * t);
    let m = mean_anom.to_radians();
    let center = m.sin() * (1.914602 - t * (0.004817 + 0.000014 * t))
        + (2.0 * m).sin() * (0.019993 - 0.000101 * t)
        + (3.0 * m).sin() * 0.000289;
    let true_long = mean_long + center;
    let omega = (125.04 - 1934.136 * t).to_radians();
    let app_long = (true_long - 0.00569 - 0.00478 * omega.sin()).to_radians();
    let mean_obliq = 23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0;
    let obliq = (mean_obliq + 0.00256 * omega.cos()).to_radians();
    let decl = (obliq.sin() * app_long.sin()).asin();

    let y = (obliq / 2.0).tan().powi(2);
    let l0 = mean_long.to_radians();
    let eqtime = 4.0
        * (y * (2.0 * l0).sin() - 2.0 * ecc * m.sin() + 4.0 * ecc * y * m.sin() * (2.0 * l0).cos()
            - 0.5 * y * y * (4.0 * l0).sin()
            - 1.25 * ecc * ecc * (2.0 * m).sin())
        .to_degrees();

    // true solar time in minutes, from the UTC clock
    let utc_minutes = (unix / 60.0).rem_euclid(1440.0);
    let tst = (utc_minutes + eqtime + 4.0 * loc.longitude).rem_euclid(1440.0);
    let ha = (tst / 4.0 - 180.0).to_radians();
    let lat = loc.latitude.to_radians();

    let cos_z = (lat.sin() * decl.sin() + lat.cos() * decl.cos() * ha.cos()).clamp(-1.0, 1.0);
    let zenith = cos_z.acos().to_degrees();
    let az = ha.sin().atan2(ha.cos() * lat.sin() - decl.tan() * lat.cos()).to_degrees() + 180.0;
    SolarPosition {
        zenith,
        azimuth: az.rem_euclid(360.0),
    }
}

fn altitude_at(loc: &GeoLocation, unix: f64) -> f64 {
    90.0 - solar_position_unix(loc, unix).zenith
}

/// Minutes of the local calendar day during which the sun's centre is above
/// `altitude` degrees. Crossings are located by bisection.
pub fn minutes_above(loc: &GeoLocation, date: NaiveDate, altitude: f64) -> f64 {
    const STEP: f64 = 600.0;
    let start = loc.local_midnight_unix(date);
    let f = |t: f64| altitude_at(loc, t) - altitude;
    let mut total = 0.0;
    let mut t0 = start;
    let mut f0 = f(t0);
    let mut rise = if f0 > 0.0 { Some(t0) } else { None };
    let steps = (86_400.0 / STEP) as usize;
    for k in 1..=steps {
        let t1 = start + k as f64 * STEP;
        let f1 = f(t1);
        if (f0 > 0.0) != (f1 > 0.0) {
            let (mut a, mut b) = (t0, t1);
            for _ in 0..40 {
                let m = 0.5 * (a + b);
                if (f(m) > 0.0) == (f0 > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            let cross = 0.5 * (a + b);
            if f1 > 0.0 {
                rise = Some(cross);
            } else if let Some(r) = rise.take() {
                total += cross - r;
            }
        }
        t0 = t1;
        f0 = f1;
    }
    if let Some(r) = rise {
        total += start + 86_400.0 - r;
    }
    total / 60.0
}

/// Civil dawn to civil dusk, in minutes. Days on which the sun never rises
/// above -6° give 0; days on which it never sets below -6° give 1440.
pub fn civil_twilight_duration(loc: &GeoLocation, date: NaiveDate) -> f64 {
    minutes_above(loc, date, CIVIL_TWILIGHT_ALTITUDE)
}

/// Sunrise to sunset (sun centre above the geometric horizon), in minutes.
pub fn daylight_duration(loc: &GeoLocation, date: NaiveDate) -> f64 {
    minutes_above(loc, date, 0.0)
}

/// Haurwitz clear-sky global horizontal irradiance for a zenith angle, W/m².
pub fn haurwitz_ghi(zenith_deg: f64) -> f64 {
    let cz = zenith_deg.to_radians().cos();
    if zenith_deg >= 90.0 || cz <= 0.0 {
        0.0
    } else {
        1098.0 * cz * (-0.057 / cz).exp()
    }
}

pub fn clear_sky_ghi(loc: &GeoLocation, t: &Timestamp) -> f64 {
    haurwitz_ghi(solar_position(loc, t).zenith)
}

/// Minutes with observed irradiance above [`SUNSHINE_RATIO`] of clear sky.
/// Both profiles share a regular grid of `step_minutes`. A missing observed
/// profile yields [`Error::Unavailable`] rather than zero.
pub fn sunshine_duration(observed: Option<&[f64]>, clear_sky: &[f64], step_minutes: f64) -> Result<f64> {
    let observed = observed.ok_or_else(|| Error::Unavailable("sunshine duration needs an observed GHI profile".into()))?;
    if observed.len() != clear_sky.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: clear_sky.len(),
        });
    }
    let count = observed
        .iter()
        .zip(clear_sky)
        .filter(|(&o, &c)| c > 0.0 && o > SUNSHINE_RATIO * c)
        .count();
    Ok(count as f64 * step_minutes)
}

/// Clear-sky GHI sampled at the midpoints of a `step_minutes` grid over the local day.
pub fn clear_sky_profile(loc: &GeoLocation, date: NaiveDate, step_minutes: f64) -> Vec<f64> {
    let start = loc.local_midnight_unix(date);
    let n = (1440.0 / step_minutes).round() as usize;
    (0..n)
        .map(|k| {
            let t = start + (k as f64 + 0.5) * step_minutes * 60.0;
            haurwitz_ghi(solar_position_unix(loc, t).zenith)
        })
        .collect()
}

/// 0 = new moon, 0.5 = full moon.
pub fn moon_phase(t: &Timestamp) -> f64 {
    moon_phase_unix(t.unix() as f64)
}

pub fn moon_phase_unix(unix: f64) -> f64 {
    let days = (unix - NEW_MOON_EPOCH_UNIX as f64) / 86_400.0;
    let phase = (days / SYNODIC_MONTH_DAYS).rem_euclid(1.0);
    if phase >= 1.0 {
        0.0
    } else {
        phase
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyAstroRecord {
    pub date: NaiveDate,
    /// Mean zenith over daylight minutes; the day's minimum zenith when the sun never rises.
    pub mean_daytime_sza: f64,
    pub civil_twilight_duration: f64,
    pub daylight_duration: f64,
    /// Daily integral of clear-sky GHI, Wh/m².
    pub clear_sky_ghi_daily: f64,
    /// Phase at local noon.
    pub moon_phase: f64,
}

/// Daily aggregates sampled every `step_minutes` (midpoint rule).
pub fn daily_astro(loc: &GeoLocation, date: NaiveDate, step_minutes: f64) -> DailyAstroRecord {
    let start = loc.local_midnight_unix(date);
    let n = (1440.0 / step_minutes).round() as usize;
    let dt_hours = step_minutes / 60.0;
    let mut ghi = 0.0;
    let mut sza_sum = 0.0;
    let mut sza_count = 0usize;
    let mut sza_min = f64::INFINITY;
    for k in 0..n {
        let t = start + (k as f64 + 0.5) * step_minutes * 60.0;
        let z = solar_position_unix(loc, t).zenith;
        sza_min = sza_min.min(z);
        if z < 90.0 {
            sza_sum += z;
            sza_count += 1;
        }
        ghi += haurwitz_ghi(z) * dt_hours;
    }
    DailyAstroRecord {
        date,
        mean_daytime_sza: if sza_count > 0 { sza_sum / sza_count as f64 } else { sza_min },
        civil_twilight_duration: civil_twilight_duration(loc, date),
        daylight_duration: daylight_duration(loc, date),
        clear_sky_ghi_daily: ghi,
        moon_phase: moon_phase_unix(start + 43_200.0),
    }
}

/// Fractional hour-of-day helper for sub-daily timestamps.
pub fn local_hour(t: &Timestamp) -> f64 {
    let l = t.0;
    l.hour() as f64 + l.minute() as f64 / 60.0 + l.second() as f64 / 3600.0
}
