"""Exact sampling of inverted max-stable pairs by conditional inversion.

X is drawn as a unit exponential (X = 1/X_F with X_F unit Frechet by
inversion) and Y given X = x by solving Pr(Y > y | X = x) = U for a
second uniform U, i.e. inverting the max-stable conditional law of
Y_F = 1/Y given X_F = 1/x.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exponent import ExponentFamily, family_from_dict
from .ims import conditional_cdf_maxstable  # noqa: F401  (re-exported)
from .kernel import solve_conditional
from .numerics import ConvergenceError, RandomStream


class SamplingError(ConvergenceError):
    """Root bracketing failed for some draws; ``diagnostics`` lists them."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class SampleDataError(ValueError):
    """Malformed sample file."""


@dataclass
class SampleSet:
    pairs: np.ndarray
    family: ExponentFamily | None
    seed: int | None
    n: int
    stream_index: int = 0
    backend: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.pairs[:, 0]

    @property
    def y(self):
        return self.pairs[:, 1]

    def manifest(self) -> dict:
        fam = self.family.to_dict() if self.family is not None else None
        return {"family": fam["family_id"] if fam else None,
                "params": fam["params"] if fam else None,
                "n": int(self.n), "seed": self.seed, "stream_index": self.stream_index}

    def to_csv(self, path):
        write_pairs_csv(path, self.pairs)


def sample(fam: ExponentFamily, n: int, stream: RandomStream, backend=None) -> SampleSet:
    """Draw ``n`` pairs from the inverted max-stable law of ``fam``."""
    n = int(n)
    if n < 1:
        raise ValueError("sample size must be positive")
    u = stream.uniform((n, 2))
    x = -np.log(u[:, 0])
    y, failures, used = solve_conditional(fam, x, np.log(u[:, 1]), backend=backend)
    if failures:
        bad = np.flatnonzero(~np.isfinite(y))
        diag = {"indices": bad.tolist()[:20], "x": x[bad].tolist()[:20],
                "log_u": np.log(u[bad, 1]).tolist()[:20], "family": fam.to_dict()}
        raise SamplingError(f"{failures} draws could not be bracketed", diag)
    return SampleSet(np.column_stack([x, y]), fam, stream.seed, n,
                     stream.stream_index, used)


def replicate(fam: ExponentFamily, n: int, reps: int, base_seed: int, backend=None):
    """``reps`` independent samples on streams 0..reps-1 of ``base_seed``."""
    if int(reps) < 1:
        raise ValueError("reps must be at least 1")
    return [sample(fam, n, RandomStream(base_seed, i), backend=backend)
            for i in range(int(reps))]


# ---------------------------------------------------------------------------
# files

def format_float(v: float) -> str:
    return f"{v:.15g}"


def write_pairs_csv(path, pairs):
    pairs = np.asarray(pairs, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for xv, yv in pairs:
            fh.write(f"{format_float(xv)},{format_float(yv)}\n")


def read_pairs_csv(path) -> np.ndarray:
    """Read an ``x,y`` CSV into an (n, 2) array.

    Raises:
        SampleDataError: missing columns, non-numeric or non-positive values.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = [f.strip() for f in (reader.fieldnames or [])]
            if "x" not in fields or "y" not in fields:
                raise SampleDataError(f"{path}: expected columns x,y, got {fields}")
            reader.fieldnames = fields
            rows = [(float(r["x"]), float(r["y"])) for r in reader]
    except (OSError, UnicodeDecodeError) as exc:
        raise SampleDataError(f"cannot read {path}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SampleDataError):
            raise
        raise SampleDataError(f"{path}: non-numeric entry ({exc})") from exc
    if not rows:
        raise SampleDataError(f"{path}: no data rows")
    pairs = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(pairs)):
        raise SampleDataError(f"{path}: non-finite values")
    return pairs


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_sample(path) -> SampleSet:
    """Read a CSV and, if present, its manifest."""
    pairs = read_pairs_csv(path)
    man_path = Path(str(path) + ".manifest.json")
    fam, seed, index = None, None, 0
    if man_path.exists():
        man = json.loads(man_path.read_text(encoding="utf-8"))
        if man.get("family"):
            fam = family_from_dict({"family_id": man["family"], "params": man["params"]})
        seed, index = man.get("seed"), man.get("stream_index", 0)
    return SampleSet(pairs, fam, seed, len(pairs), index)


# ---------------------------------------------------------------------------
# goodness of fit

#: 1% critical value of A^2 for a fully specified continuous law
AD_CRITICAL_1PCT = 3.857


def anderson_darling_exponential(x) -> float:
    """Anderson-Darling A^2 of ``x`` against the unit exponential law."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    log_f = np.log(-np.expm1(-x))  # log F(x_i)
    log_s = -x[::-1]                # log{1 - F(x_{n+1-i})}
    i = np.arange(1, n + 1)
    return float(-n - np.sum((2 * i - 1) * (log_f + log_s)) / n)


def ks_exponential(x) -> float:
    """Kolmogorov-Smirnov distance of ``x`` to the unit exponential law."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    cdf = -np.expm1(-x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def empirical_joint_survivor(pairs, x, y):
    pairs = np.asarray(pairs, dtype=float)
    return float(np.mean((pairs[:, 0] > x) & (pairs[:, 1] > y)))


def mc_standard_error(p, n):
    return math.sqrt(p * (1 - p) / n)
