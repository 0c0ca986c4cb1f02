"""Reference profiles (cavity centre-line data, sensor pressure series)."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

KINDS = ("ghia", "sensor")


class ProfileParseError(ValueError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = path, line


@dataclass(frozen=True)
class ReferenceProfile:
    """Samples ordered by strictly increasing abscissa.

    ``values`` is (M,) for a ghia profile and (M, n_sensors) for sensor
    series. ``columns`` holds the header names, abscissa first.
    """

    kind: str
    abscissa: np.ndarray
    values: np.ndarray
    columns: tuple = ()
    comments: tuple = ()

    def __len__(self):
        return len(self.abscissa)


def _parse(text, path, kind):
    comments, header, rows = [], None, []
    width = None
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        cells = next(csv.reader([line]))
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            if header is None and not rows:
                header = tuple(c.strip() for c in cells)
                width = len(header)
                continue
            raise ProfileParseError(path, lineno, f"non-numeric row {line!r}") from None
        if width is None:
            width = len(vals)
        if len(vals) != width:
            raise ProfileParseError(path, lineno, f"expected {width} columns, got {len(vals)}")
        if not np.all(np.isfinite(vals)):
            raise ProfileParseError(path, lineno, "non-finite value")
        if rows and vals[0] <= rows[-1][1][0]:
            raise ProfileParseError(path, lineno,
                                    f"abscissa {vals[0]!r} not strictly increasing")
        rows.append((lineno, vals))
    if not rows:
        raise ProfileParseError(path, 0, "no data rows")
    if kind == "ghia" and width != 2:
        raise ProfileParseError(path, rows[0][0], "ghia profile needs exactly 2 columns")
    if kind == "sensor" and width < 2:
        raise ProfileParseError(path, rows[0][0], "sensor series needs a time and >= 1 sensor column")
    data = np.array([v for _, v in rows])
    vals = data[:, 1] if kind == "ghia" else data[:, 1:]
    return ReferenceProfile(kind, data[:, 0].copy(), vals.copy(), header or (), tuple(comments))


def load_reference_profile(path, kind="ghia") -> ReferenceProfile:
    """Parse a comma-separated profile. Lines starting with '#' are comments
    and an optional non-numeric header row may precede the data."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    path = Path(path)
    return _parse(path.read_text(), str(path), kind)


def write_reference_profile(profile: ReferenceProfile, path):
    """Write with 17 significant digits, so reading back is lossless."""
    path = Path(path)
    vals = profile.values.reshape(len(profile), -1)
    cols = profile.columns or ("x",) + tuple(f"v{i}" for i in range(vals.shape[1]))
    with path.open("w", newline="") as f:
        for c in profile.comments:
            f.write(f"# {c}\n")
        f.write(",".join(cols) + "\n")
        for a, row in zip(profile.abscissa, vals):
            f.write(",".join(f"{v:.17g}" for v in (a, *row)) + "\n")
    return path


def ghia_profile(Re=100) -> ReferenceProfile:
    """Bundled centre-line reference for Re in {100, 1000}."""
    if Re not in (100, 1000):
        raise ValueError("bundled reference data exists for Re = 100 and 1000")
    res = resources.files("explicit_particles.experiments") / "data" / f"ghia_re{Re}.csv"
    return _parse(res.read_text(), str(res), "ghia")
