"""Coverage curves: the common output of the analytic bounds and the simulator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InputFormatError, InvalidArgumentError

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def db_to_linear(theta_db):
    """Power ratio in dB to linear scale."""
    return 10.0 ** (np.asarray(theta_db, dtype=float) / 10.0)


def parse_db_grid(spec: str) -> np.ndarray:
    """Parse ``start:stop:step`` (inclusive of ``stop``) into a dB grid."""
    try:
        start, stop, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise InvalidArgumentError(f"theta grid must be 'start:stop:step', got {spec!r}") from None
    if step <= 0 or stop < start:
        raise InvalidArgumentError(f"theta grid needs step > 0 and stop >= start, got {spec!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


@dataclass(frozen=True, eq=False)
class CoverageCurve:
    """Coverage probability sampled on a strictly increasing dB grid, with optional confidence band."""

    theta_db: np.ndarray
    probability: np.ndarray
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None

    def __post_init__(self):
        th = np.array(self.theta_db, dtype=float).reshape(-1)
        p = np.array(self.probability, dtype=float).reshape(-1)
        if len(th) != len(p) or len(th) == 0:
            raise InvalidArgumentError("theta_db and probability must be non-empty and equally long")
        if np.any(np.diff(th) <= 0):
            raise InvalidArgumentError("theta_db must be strictly increasing")
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise InvalidArgumentError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "theta_db", th)
        object.__setattr__(self, "probability", p)
        if (self.ci_low is None) != (self.ci_high is None):
            raise InvalidArgumentError("ci_low and ci_high must be given together")
        if self.ci_low is not None:
            lo = np.array(self.ci_low, dtype=float).reshape(-1)
            hi = np.array(self.ci_high, dtype=float).reshape(-1)
            if len(lo) != len(p) or len(hi) != len(p):
                raise InvalidArgumentError("confidence bounds must match the grid length")
            if np.any(lo > p) or np.any(hi < p):
                raise InvalidArgumentError("need ci_low <= probability <= ci_high")
            object.__setattr__(self, "ci_low", lo)
            object.__setattr__(self, "ci_high", hi)

    def __len__(self):
        return len(self.theta_db)

    @property
    def has_ci(self) -> bool:
        return self.ci_low is not None

    @property
    def half_width(self) -> np.ndarray:
        if not self.has_ci:
            raise InvalidArgumentError("curve has no confidence band")
        return 0.5 * (self.ci_high - self.ci_low)

    def at(self, theta_db):
        """Linear interpolation of the probability inside the grid."""
        return np.interp(theta_db, self.theta_db, self.probability)


def write_curve(path, curve: CoverageCurve) -> None:
    """Write ``theta_db,coverage[,ci_low,ci_high]`` rows at 12 significant digits."""
    header = ["theta_db", "coverage"] + (["ci_low", "ci_high"] if curve.has_ci else [])
    cols = [curve.theta_db, curve.probability] + ([curve.ci_low, curve.ci_high] if curve.has_ci else [])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def read_curve(path) -> CoverageCurve:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputFormatError("empty curve file", line=0)
    header = [h.strip() for h in rows[0]]
    if header not in (["theta_db", "coverage"], ["theta_db", "coverage", "ci_low", "ci_high"]):
        raise InputFormatError(f"unexpected header {header}", line=0)
    values = []
    for lineno, row in enumerate(rows[1:], start=1):
        if not row:
            continue
        if len(row) != len(header):
            raise InputFormatError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        try:
            values.append([float(v) for v in row])
        except ValueError as exc:
            raise InputFormatError(str(exc), line=lineno) from None
    if not values:
        raise InputFormatError("curve file has no data rows", line=1)
    arr = np.array(values)
    try:
        if len(header) == 4:
            return CoverageCurve(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
        return CoverageCurve(arr[:, 0], arr[:, 1])
    except InvalidArgumentError as exc:
        raise InputFormatError(str(exc)) from None


def _shift_gap(reference, target, delta):
    shifted = target.theta_db - delta
    inside = (shifted >= reference.theta_db[0]) & (shifted <= reference.theta_db[-1])
    if not inside.any():
        return math.inf
    gap = np.abs(target.probability[inside] - reference.at(shifted[inside]))
    return float(gap.max())


def fit_db_shift(
    reference: CoverageCurve, target: CoverageCurve, lo: float = -10.0, hi: float = 10.0, tol: float = 1e-4
) -> tuple[float, float]:
    """Horizontal shift (dB) that best overlays ``reference`` on ``target`` in the max-norm.

    Minimises ``max |target(t) - reference(t - delta)|`` over target grid points
    whose shifted position falls inside the reference grid. A coarse scan picks
    the basin, golden-section narrows it to ``tol``, and the grid-alignment
    shifts inside the final bracket are tried last, since the piecewise-linear
    objective often bottoms out exactly there.
    """
    if len(reference) < 5 or len(target) < 5:
        raise InvalidArgumentError("both curves need at least 5 points")
    if target.theta_db[0] - hi > reference.theta_db[-1] or target.theta_db[-1] - lo < reference.theta_db[0]:
        raise InvalidArgumentError("curves do not overlap for any shift in range")

    def gap(d):
        return _shift_gap(reference, target, d)

    scan = np.linspace(lo, hi, int(round((hi - lo) / 0.05)) + 1)
    vals = np.array([gap(d) for d in scan])
    if not np.isfinite(vals).any():
        raise InvalidArgumentError("curves do not overlap for any shift in range")
    k = int(np.argmin(vals))
    a, b = scan[max(k - 1, 0)], scan[min(k + 1, len(scan) - 1)]
    c, d = b - _INV_GOLDEN * (b - a), a + _INV_GOLDEN * (b - a)
    fc, fd = gap(c), gap(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = gap(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = gap(d)
    candidates = [(vals[k], scan[k]), (fc, c), (fd, d)]
    aligned = (target.theta_db[:, None] - reference.theta_db[None, :]).ravel()
    for delta in aligned[(aligned >= a - tol) & (aligned <= b + tol)]:
        candidates.append((gap(delta), float(delta)))
    best_gap, best_delta = min(candidates)
    return float(best_delta), float(best_gap)
