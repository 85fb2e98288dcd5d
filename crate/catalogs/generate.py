"""Regenerate the shipped feature catalogs.

Run from the repository root: python3 catalogs/generate.py
"""

RAW_WEATHER = [
    "temp_max_f", "temp_min_f", "temp_mean_f", "dewpoint_f", "humidity_pct",
    "heat_index_f", "wind_speed_mph", "wind_gust_mph", "pressure_inhg",
    "cloud_cover_pct", "precip_in", "snow_in", "visibility_mi", "no2_ppb",
    "o3_ppb", "pm25_ugm3", "co_ppm", "so2_ppb", "hdd65_f", "cdd65_f",
]
# Columns too noisy or too sparse for a weekly mean to add anything.
NO_WEEKLY = {"co_ppm", "so2_ppb", "hdd65_f", "cdd65_f"}
SHORT = [
    "temp_max_f", "temp_min_f", "temp_mean_f", "dewpoint_f", "humidity_pct",
    "heat_index_f", "wind_speed_mph", "cloud_cover_pct", "pressure_inhg", "precip_in",
]
DAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]


def raw(name, aspect, column=None):
    return dict(name=name, aspect=aspect, source="raw", column=column or name)


def astro(name, kind=None):
    return dict(name=name, aspect="astronomical", source="astro", kind=kind or name)


def lag(base, steps, aspect):
    return dict(name=f"{base}_lag{steps}", aspect=aspect, source="lag", base=base, steps=steps)


def ma(base, window, aspect):
    return dict(name=f"{base}_ma{window}", aspect=aspect, source="moving_average", base=base, window=window)


def geographical(extra_ma3=(), extra_lag1=()):
    g = [raw(c, "geographical") for c in RAW_WEATHER]
    g += [ma(c, 7, "geographical") for c in RAW_WEATHER if c not in NO_WEEKLY]
    g += [ma(c, 3, "geographical") for c in SHORT + list(extra_ma3)]
    g += [lag(c, 1, "geographical") for c in SHORT + list(extra_lag1)]
    return g


def astronomical():
    a = [astro(k) for k in ["solar_zenith", "civil_twilight_duration", "daylight_duration",
                            "clear_sky_ghi", "moon_phase"]]
    a += [raw(c, "astronomical") for c in ["ghi_whm2", "sunshine_min", "high_tide_min", "low_tide_min"]]
    a += [lag("clear_sky_ghi", 50, "astronomical"), lag("clear_sky_ghi", 30, "astronomical"),
          lag("solar_zenith", 50, "astronomical"), lag("civil_twilight_duration", 50, "astronomical"),
          ma("clear_sky_ghi", 7, "astronomical"), ma("ghi_whm2", 7, "astronomical")]
    return a


def social():
    s = [dict(name=d, aspect="social", source="calendar", kind=d) for d in DAYS]
    s.append(dict(name="holiday", aspect="social", source="calendar", kind="holiday"))
    s.append(dict(name="day_of_year", aspect="social", source="calendar", kind="day_of_year"))
    return s


def value(v):
    if isinstance(v, str):
        return f'"{v}"'
    return str(v)


def render(name, comment, location, features):
    out = [f"# {line}" for line in comment] + [
        f'name = "{name}"',
        "load_lags = 7",
        "astro_step_minutes = 10",
        "",
        "[location]",
    ]
    out += [f"{k} = {value(v)}" for k, v in location.items()]
    for f in features:
        out += ["", "[[feature]]"] + [f"{k} = {value(v)}" for k, v in f.items()]
    return "\n".join(out) + "\n"


def main():
    catalogs = {
        "maine": (
            ["Daily load in Maine: 56 geographical, 15 astronomical and 9 social candidates."],
            dict(latitude=43.66, longitude=-70.26, elevation=0.0, utc_offset=-5.0),
            geographical() + astronomical() + social(),
        ),
        "nsw": (
            ["New South Wales: 62 geographical, 15 astronomical and 9 social candidates (86 total)."],
            dict(latitude=-33.87, longitude=151.21, elevation=0.0, utc_offset=10.0),
            geographical(extra_ma3=["wind_gust_mph", "visibility_mi", "o3_ppb", "no2_ppb"],
                         extra_lag1=["o3_ppb", "no2_ppb"]) + astronomical() + social(),
        ),
        "texas": (
            ["Texas: same candidate layout as Maine (56 / 15 / 9) at an Austin reference point."],
            dict(latitude=30.27, longitude=-97.74, elevation=0.0, utc_offset=-6.0),
            geographical() + astronomical() + social(),
        ),
    }
    for name, (comment, loc, feats) in catalogs.items():
        with open(f"catalogs/{name}.toml", "w") as fh:
            fh.write(render(name, comment, loc, feats))


if __name__ == "__main__":
    main()
