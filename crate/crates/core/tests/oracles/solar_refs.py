"""Reference values for the solar-geometry tests.

Zenith: NREL SPA (pvlib.solarposition.spa_python), topocentric zenith
without refraction. Civil twilight duration: PyEphem, sun centre at -6 deg,
no refraction, first civil dawn after local midnight to the following dusk.

Run once; paste the printed tables into tests/solar_reference.rs.
"""
import datetime as dt

import ephem
import pandas as pd
import pvlib

ZENITH_CASES = [
    # name, lat, lon, utc iso
    ("portland_me_solstice", 43.66, -70.26, "2015-06-21T17:00:00Z"),
    ("portland_me_winter", 43.66, -70.26, "2015-12-21T17:00:00Z"),
    ("portland_me_morning", 43.66, -70.26, "2010-03-15T13:30:00Z"),
    ("portland_me_evening", 43.66, -70.26, "2003-09-30T21:45:00Z"),
    ("equator_equinox_noon", 0.0, 0.0, "2015-03-20T12:07:00Z"),
    ("equator_afternoon", 0.0, 0.0, "1990-07-04T15:00:00Z"),
    ("sydney_summer", -33.87, 151.21, "2009-12-15T02:00:00Z"),
    ("sydney_winter", -33.87, 151.21, "2009-06-15T03:30:00Z"),
    ("austin_summer", 30.27, -97.74, "2017-08-01T19:00:00Z"),
    ("austin_winter", 30.27, -97.74, "1998-01-15T16:00:00Z"),
    ("tromso_summer_midnight", 69.65, 18.96, "2020-06-21T23:00:00Z"),
    ("tromso_winter_noon", 69.65, 18.96, "2020-12-21T11:00:00Z"),
    ("north_pole_winter", 90.0, 0.0, "2001-12-21T12:00:00Z"),
    ("south_pole_summer", -90.0, 0.0, "2045-12-21T06:00:00Z"),
    ("quito_night", -0.18, -78.47, "1975-05-05T05:00:00Z"),
    ("beijing_spring", 39.90, 116.40, "2030-04-10T04:00:00Z"),
    ("cape_town_autumn", -33.92, 18.42, "1955-04-01T09:15:00Z"),
    ("reykjavik_spring", 64.15, -21.94, "2050-03-01T12:30:00Z"),
    ("honolulu_dawn", 21.31, -157.86, "1985-10-20T17:00:00Z"),
    ("buenos_aires_dusk", -34.60, -58.38, "2012-02-10T22:30:00Z"),
]

TWILIGHT_CASES = [
    # name, lat, lon, utc offset (h), local date
    ("equator_march_equinox", 0.0, 0.0, 0, "2015-03-20"),
    ("portland_me_summer", 43.66, -70.26, -5, "2015-06-21"),
    ("portland_me_winter", 43.66, -70.26, -5, "2015-12-21"),
    ("portland_me_spring", 43.66, -70.26, -5, "2014-04-15"),
    ("sydney_summer", -33.87, 151.21, 10, "2009-12-31"),
    ("sydney_winter", -33.87, 151.21, 10, "2009-06-21"),
    ("austin_autumn", 30.27, -97.74, -6, "2010-10-01"),
    ("oslo_spring", 59.91, 10.75, 1, "2021-03-10"),
    ("singapore_july", 1.35, 103.82, 8, "2018-07-01"),
    ("anchorage_feb", 61.22, -149.90, -9, "2016-02-01"),
]


def zenith(lat, lon, iso):
    t = pd.DatetimeIndex([pd.Timestamp(iso)])
    sp = pvlib.solarposition.spa_python(t, lat, lon, altitude=0, pressure=0, temperature=12)
    return float(sp["zenith"].iloc[0])


def ctd_minutes(lat, lon, offset_h, date):
    obs = ephem.Observer()
    obs.lat, obs.lon = str(lat), str(lon)
    obs.elevation = 0
    obs.pressure = 0
    obs.horizon = "-6"
    midnight = dt.datetime.fromisoformat(date) - dt.timedelta(hours=offset_h)
    obs.date = ephem.Date(midnight)
    sun = ephem.Sun()
    dawn = obs.next_rising(sun, use_center=True)
    obs.date = dawn
    dusk = obs.next_setting(sun, use_center=True)
    return (dusk - dawn) * 24 * 60


if __name__ == "__main__":
    print("// name, latitude, longitude, unix seconds, zenith deg")
    for name, lat, lon, iso in ZENITH_CASES:
        ts = int(pd.Timestamp(iso).timestamp())
        print(f'    ("{name}", {lat}, {lon}, {ts}, {zenith(lat, lon, iso):.4f}),')
    print("// name, latitude, longitude, utc offset hours, date, minutes")
    for name, lat, lon, off, date in TWILIGHT_CASES:
        y, m, d = date.split("-")
        print(f'    ("{name}", {lat}, {lon}, {off}, ({int(y)}, {int(m)}, {int(d)}), {ctd_minutes(lat, lon, off, date):.2f}),')
