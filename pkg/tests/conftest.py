import math

import pytest

from leocov.tle import MU_EARTH, tle_checksum

# classic published ISS element set, checksums included
ISS_TLE = (
    "ISS (ZARYA)\n"
    "1 25544U 98067A   08264.51782528 -.00002182  00000-0 -11606-4 0  2927\n"
    "2 25544  51.6416 247.4627 0006703 130.5360 325.0288 15.72125391563537\n"
)

ACCEPTANCE_LINES = []


def with_checksum(body: str) -> str:
    assert len(body) == 68, len(body)
    return body + str(tle_checksum(body))


def tle_lines(cat, incl_deg, raan_deg, ecc, argp_deg, mean_anom_deg, mean_motion, year=24, day=100.5, rev=1):
    cat_field = f"{cat:05d}" if isinstance(cat, int) else cat
    l1 = with_checksum(f"1 {cat_field}U 24001A   {year:02d}{day:012.8f}  .00000000  00000-0  00000-0 0  999")
    ecc_field = f"{ecc:.7f}"[2:]
    l2 = with_checksum(
        f"2 {cat_field} {incl_deg:8.4f} {raan_deg:8.4f} {ecc_field} {argp_deg:8.4f} "
        f"{mean_anom_deg:8.4f} {mean_motion:11.8f}{rev:5d}"
    )
    return l1, l2


def mean_motion_for_altitude(alt_km, earth_km=6370.0):
    a = earth_km + alt_km
    return math.sqrt(MU_EARTH / a**3) * 86400.0 / (2 * math.pi)


def walker_shell_text(planes=72, per_plane=22, incl=53.0, alt_km=550.0, phasing=1, extra=()):
    """Walker-delta shell written as a 3-line TLE file, all at one epoch."""
    n = mean_motion_for_altitude(alt_km)
    out = []
    cat = 44000
    for p in range(planes):
        for s in range(per_plane):
            raan = 360.0 * p / planes
            m = (360.0 * s / per_plane + 360.0 * phasing * p / (planes * per_plane)) % 360.0
            l1, l2 = tle_lines(cat, incl, raan, 0.0001, 90.0, m, n)
            out += [f"STARLINK-{cat}", l1, l2]
            cat += 1
    for rec in extra:
        out += list(rec)
    return "\n".join(out) + "\n"


@pytest.fixture(scope="session")
def walker_text():
    # a higher and a lower shell that the 500-600 km band must drop
    high = tle_lines(49998, 70.0, 10.0, 0.0001, 0.0, 0.0, mean_motion_for_altitude(1100.0))
    low = tle_lines(49999, 97.6, 20.0, 0.0001, 0.0, 0.0, mean_motion_for_altitude(350.0))
    return walker_shell_text(extra=[("HIGH",) + high, ("LOW",) + low])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
