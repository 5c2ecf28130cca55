"""Two-line element sets: parsing, two-body placement at epoch, and constellation snapshots.

Only the geometry at each record's epoch is reconstructed (Kepler's equation on
the mean elements, no SGP4 perturbations). That is enough to place a shell of
satellites for a single coverage snapshot.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .exceptions import ConvergenceError, InvalidArgumentError, TleParseError
from .point_process import PointSet

MU_EARTH = 398600.4418  # km^3 / s^2
SECONDS_PER_DAY = 86400.0
LINE_LENGTH = 69

_ALPHA5 = "ABCDEFGHJKLMNPQRSTUVWXYZ"  # I and O are skipped


@dataclass(frozen=True)
class TleRecord:
    name: str
    catalog_number: int
    epoch: datetime
    inclination_rad: float
    raan_rad: float
    eccentricity: float
    arg_perigee_rad: float
    mean_anomaly_rad: float
    mean_motion_rev_per_day: float
    classification: str = "U"
    intl_designator: str = ""
    mean_motion_dot: float = 0.0
    mean_motion_ddot: float = 0.0
    bstar: float = 0.0
    element_number: int = 0
    rev_number: int = 0

    @property
    def epoch_year(self) -> int:
        return self.epoch.year

    @property
    def epoch_day(self) -> float:
        start = datetime(self.epoch.year, 1, 1, tzinfo=timezone.utc)
        return 1.0 + (self.epoch - start).total_seconds() / SECONDS_PER_DAY


@dataclass(frozen=True)
class EciState:
    position_km: np.ndarray
    geocentric_radius_km: float


def tle_checksum(line: str) -> int:
    """Mod-10 sum over the first 68 columns: digits count at face value, '-' as 1."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _catalog(field: str) -> int:
    field = field.strip()
    if field and field[0].isalpha():
        idx = _ALPHA5.find(field[0].upper())
        if idx < 0:
            raise ValueError(f"bad Alpha-5 catalog number {field!r}")
        return (idx + 10) * 10000 + int(field[1:])
    return int(field)


def _implied_decimal(field: str) -> float:
    """Decode ``±NNNNN±E`` as ``±0.NNNNN * 10**±E``."""
    field = field.strip()
    if not field:
        return 0.0
    sign = -1.0 if field[0] == "-" else 1.0
    body = field.lstrip("+-")
    mantissa, exponent = body[:-2], body[-2:]
    return sign * float("0." + mantissa) * 10.0 ** int(exponent)


def _epoch(two_digit_year: int, day_of_year: float) -> datetime:
    year = 2000 + two_digit_year if two_digit_year < 57 else 1900 + two_digit_year
    return datetime(year, 1, 1, tzinfo=timezone.utc) + timedelta(days=day_of_year - 1.0)


def _check_line(line: str, number: str, lineno: int):
    if len(line) != LINE_LENGTH:
        raise TleParseError(f"line {number} must have {LINE_LENGTH} columns, got {len(line)}", line=lineno)
    if line[0] != number or line[1] != " ":
        raise TleParseError(f"expected line number {number!r}", line=lineno)
    if not line[68].isdigit() or int(line[68]) != tle_checksum(line):
        raise TleParseError(
            f"checksum mismatch on line {number}: expected {tle_checksum(line)}, found {line[68]!r}", line=lineno
        )


def _parse_record(name: str, l1: str, l2: str, n1: int, n2: int) -> TleRecord:
    _check_line(l1, "1", n1)
    _check_line(l2, "2", n2)
    try:
        cat1, cat2 = _catalog(l1[2:7]), _catalog(l2[2:7])
    except ValueError as exc:
        raise TleParseError(f"malformed catalog number: {exc}", line=n1) from None
    if cat1 != cat2:
        raise TleParseError(f"catalog numbers differ between lines ({cat1} vs {cat2})", line=n2)
    lineno = n1
    try:
        epoch = _epoch(int(l1[18:20]), float(l1[20:32]))
        ndot = float(l1[33:43])
        nddot = _implied_decimal(l1[44:52])
        bstar = _implied_decimal(l1[53:61])
        elset = int(l1[64:68] or 0)
        lineno = n2
        incl = math.radians(float(l2[8:16]))
        raan = math.radians(float(l2[17:25]))
        ecc = float("0." + l2[26:33].strip())
        argp = math.radians(float(l2[34:42]))
        mean_anomaly = math.radians(float(l2[43:51]))
        mean_motion = float(l2[52:63])
        rev = int(l2[63:68].strip() or 0)
    except ValueError as exc:
        raise TleParseError(f"malformed field: {exc}", line=lineno) from None
    if not mean_motion > 0:
        raise TleParseError("mean motion must be positive", line=n2)
    return TleRecord(
        name=name or str(cat1),
        catalog_number=cat1,
        epoch=epoch,
        inclination_rad=incl,
        raan_rad=raan,
        eccentricity=ecc,
        arg_perigee_rad=argp,
        mean_anomaly_rad=mean_anomaly,
        mean_motion_rev_per_day=mean_motion,
        classification=l1[7],
        intl_designator=l1[9:17].strip(),
        mean_motion_dot=ndot,
        mean_motion_ddot=nddot,
        bstar=bstar,
        element_number=elset,
        rev_number=rev,
    )


def _is_data_line(line: str, number: str) -> bool:
    return line.startswith(number + " ") and len(line) >= 60


def parse_tle(text: str, strict: bool = True, errors: list | None = None) -> list[TleRecord]:
    """Parse 2-line or 3-line (named) element sets, in file order.

    In strict mode the first bad record raises :class:`TleParseError`. In
    lenient mode bad records are skipped and their errors appended to
    ``errors`` (or emitted as warnings when no list is given).
    """
    lines = [(i, raw.rstrip()) for i, raw in enumerate(text.splitlines(), start=1)]
    lines = [(i, ln) for i, ln in lines if ln.strip()]
    records = []
    name = ""
    k = 0
    while k < len(lines):
        lineno, line = lines[k]
        try:
            if _is_data_line(line, "1"):
                if k + 1 >= len(lines) or not _is_data_line(lines[k + 1][1], "2"):
                    k += 1
                    raise TleParseError("line 1 is not followed by a line 2", line=lineno)
                n2, l2 = lines[k + 1]
                k += 2
                records.append(_parse_record(name, line, l2, lineno, n2))
                name = ""
            elif _is_data_line(line, "2"):
                k += 1
                raise TleParseError("line 2 without a preceding line 1", line=lineno)
            else:
                name = line[2:].strip() if line.startswith("0 ") else line.strip()
                k += 1
        except TleParseError as exc:
            name = ""
            if strict:
                raise
            if errors is not None:
                errors.append(exc)
            else:
                warnings.warn(str(exc), stacklevel=2)
    return records


def kepler_solve(mean_anomaly_rad: float, eccentricity: float, tol: float = 1e-12, max_iter: int = 50) -> float:
    """Eccentric anomaly ``E`` with ``E - e*sin(E) = M``.

    Newton's method from ``E0 = M`` (or ``pi`` when ``e >= 0.8``), kept inside
    the bracket ``[M - e, M + e]`` by bisection whenever a step leaves it.
    Once the residual is below ``tol`` one more Newton step is taken if it helps.
    """
    e = float(eccentricity)
    if not 0.0 <= e <= 0.999:
        raise InvalidArgumentError(f"eccentricity must lie in [0, 0.999], got {e}")
    m_full = float(mean_anomaly_rad)
    turns = math.floor(m_full / (2 * math.pi))
    m = m_full - 2 * math.pi * turns
    if e == 0.0:
        return m_full
    lo, hi = m - e, m + e
    E = m if e < 0.8 else math.pi
    E = min(max(E, lo), hi)
    for _ in range(max_iter):
        f = E - e * math.sin(E) - m
        if abs(f) < tol:
            # one extra Newton step takes the residual from ~tol down to rounding level
            polished = E - f / (1.0 - e * math.cos(E))
            if abs(polished - e * math.sin(polished) - m) < abs(f):
                E = polished
            return E + 2 * math.pi * turns
        if f > 0:
            hi = E
        else:
            lo = E
        step = E - f / (1.0 - e * math.cos(E))
        E = step if lo < step < hi else 0.5 * (lo + hi)
    f = E - e * math.sin(E) - m
    if abs(f) < tol:
        return E + 2 * math.pi * turns
    raise ConvergenceError(f"Kepler iteration did not converge (M={m_full}, e={e}, residual={f})")


def semi_major_axis_km(mean_motion_rev_per_day: float) -> float:
    n = mean_motion_rev_per_day * 2.0 * math.pi / SECONDS_PER_DAY
    return (MU_EARTH / n**2) ** (1.0 / 3.0)


def _rot1(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot3(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def position_at_epoch(rec: TleRecord) -> EciState:
    """Inertial position at the record's epoch from the two-body conic."""
    a = semi_major_axis_km(rec.mean_motion_rev_per_day)
    e = rec.eccentricity
    E = kepler_solve(rec.mean_anomaly_rad, e)
    nu = 2.0 * math.atan2(math.sqrt(1 + e) * math.sin(E / 2), math.sqrt(1 - e) * math.cos(E / 2))
    r = a * (1.0 - e * math.cos(E))
    perifocal = np.array([r * math.cos(nu), r * math.sin(nu), 0.0])
    rot = _rot3(rec.raan_rad) @ _rot1(rec.inclination_rad) @ _rot3(rec.arg_perigee_rad)
    pos = rot @ perifocal
    return EciState(pos, float(np.linalg.norm(pos)))


def julian_date(t: datetime) -> float:
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    return 2440587.5 + t.timestamp() / SECONDS_PER_DAY


def gmst_rad(t: datetime) -> float:
    """Greenwich mean sidereal angle (IAU 1982 polynomial), UT1 taken equal to UTC."""
    T = (julian_date(t) - 2451545.0) / 36525.0
    seconds = 67310.54841 + (876600.0 * 3600.0 + 8640184.812866) * T + 0.093104 * T**2 - 6.2e-6 * T**3
    return math.radians((seconds % SECONDS_PER_DAY) / 240.0)


def eci_to_ecef(position_km, t: datetime) -> np.ndarray:
    return _rot3(-gmst_rad(t)) @ np.asarray(position_km, dtype=float)


def zenith_alignment(lat_rad: float, lon_rad: float) -> np.ndarray:
    """Rotation taking the Earth-fixed direction (lat, lon) onto +z."""
    ry = np.array(
        [
            [math.sin(lat_rad), 0.0, -math.cos(lat_rad)],
            [0.0, 1.0, 0.0],
            [math.cos(lat_rad), 0.0, math.sin(lat_rad)],
        ]
    )
    return ry @ _rot3(-lon_rad)


@dataclass(frozen=True)
class SatelliteMeta:
    name: str
    catalog_number: int
    epoch: str
    altitude_km: float


@dataclass(frozen=True)
class Snapshot:
    points: PointSet
    metadata: tuple[SatelliteMeta, ...]

    def sidecar_json(self) -> str:
        return json.dumps(
            {"radius_km": self.points.radius_km, "satellites": [asdict(m) for m in self.metadata]}, indent=2
        )


def build_snapshot(
    records,
    altitude_band_km=(500.0, 600.0),
    observer=(0.5 * math.pi, 0.0),
    epoch_policy: str = "per-record",
    shell_radius_km: float = 6920.0,
    earth_radius_km: float = 6370.0,
    timestamp: datetime | None = None,
) -> Snapshot:
    """Project the records inside an altitude band onto one shell, observer's zenith at +z.

    ``epoch_policy="per-record"`` rotates each inertial position into the
    Earth frame with the sidereal angle at its own epoch; ``"common"`` uses a
    single ``timestamp`` (default: the latest epoch) for every record while
    positions still come from each record's epoch.
    """
    lo, hi = altitude_band_km
    if not lo < hi:
        raise InvalidArgumentError(f"altitude band needs lo < hi, got {altitude_band_km}")
    if epoch_policy not in ("per-record", "common"):
        raise InvalidArgumentError(f"unknown epoch_policy {epoch_policy!r}")
    if not shell_radius_km > 0:
        raise InvalidArgumentError(f"shell_radius_km must be positive, got {shell_radius_km}")
    records = list(records)
    if not records:
        raise InvalidArgumentError("no TLE records given")
    if epoch_policy == "common" and timestamp is None:
        timestamp = max(r.epoch for r in records)
    align = zenith_alignment(*observer)
    pts, meta = [], []
    for rec in records:
        state = position_at_epoch(rec)
        altitude = state.geocentric_radius_km - earth_radius_km
        if not lo <= altitude <= hi:
            continue
        when = rec.epoch if epoch_policy == "per-record" else timestamp
        ecef = eci_to_ecef(state.position_km, when)
        pts.append(align @ (ecef / np.linalg.norm(ecef)))
        meta.append(SatelliteMeta(rec.name, rec.catalog_number, rec.epoch.isoformat(), altitude))
    ids = [str(m.catalog_number) for m in meta]
    if len(set(ids)) != len(ids):
        # duplicated catalog entries (e.g. concatenated files) keep their order but get unique ids
        ids = [f"{cid}#{k}" for k, cid in enumerate(ids)]
    arr = np.array(pts).reshape(-1, 3)
    if len(arr):
        arr /= np.linalg.norm(arr, axis=1, keepdims=True)
    return Snapshot(PointSet(shell_radius_km, arr, tuple(ids)), tuple(meta))


def snapshot_to_pointset(records, altitude_band_km, observer, epoch_policy="per-record", shell_radius_km=6920.0, **kwargs) -> PointSet:
    return build_snapshot(records, altitude_band_km, observer, epoch_policy, shell_radius_km, **kwargs).points
