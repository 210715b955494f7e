"""Good/bad interval classification of a sampled time axis.

Theoretical mode labels a sample good when

    c_n * kappa_{n+1} / kappa_n >= (L kappa_n)^mu * Re^(-lambda_n).

Empirical mode replaces the unknowable ``c_n Re^(-lambda_n)`` by a level
measured from the run itself.  With ``alpha = 1 - mu`` a sample is good when

    kappa_{n+1} / kappa_n >= (L kappa_n)^mu * <(L kappa_n)^alpha> / <L kappa_n>

(averages over the analysed horizon).  If every sample were bad the
averaged ratio bound ``<(kappa_{n+1}/kappa_n)^(alpha/mu)> >=
(<kappa_n^alpha> / <kappa_n>^alpha)^(1/mu)`` would fail, so the empirical
threshold always leaves some good time, mirroring the role of the averaged
bound in the theory.

Reports are plain dicts.  IntervalSet JSON::

    {"n": int, "minDuration": float, "horizon": [t0, t1],
     "entries": [{"start": float, "end": float, "label": "good"|"bad"|"dangerous"}]}
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .diagnostics import columns, require, time_average
from .scaling_laws import ScalingReport, b_n, lambda_n

log = logging.getLogger(__name__)

GOOD, BAD, DANGEROUS = "good", "bad", "dangerous"
LABELS = (GOOD, BAD, DANGEROUS)


@dataclass(frozen=True)
class ClassifierConfig:
    mu: float
    Re: float
    mode: str = "theoretical"
    c_n: float = 1.0
    L: float = 1.0
    delta: float = 0.0
    allow_mu_outside: bool = False

    def __post_init__(self):
        if self.mode not in ("theoretical", "empirical"):
            raise ValueError(f"mode must be theoretical or empirical, got {self.mode!r}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if not 0.5 < self.mu < 0.6:
            if not self.allow_mu_outside:
                raise ValueError(f"mu={self.mu} outside (1/2, 3/5); pass allow_mu_outside=True to override")
            warnings.warn(f"mu={self.mu} outside the window (1/2, 3/5)", stacklevel=2)
        if not self.Re > 0:
            raise ValueError(f"Re must be positive, got {self.Re}")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if not self.c_n > 0:
            raise ValueError("c_n must be positive")


def kappa_series(samples, n: int) -> np.ndarray:
    """``kappa_n`` from the sample columns, falling back to the F columns."""
    cols = columns(samples)
    name = f"kappa_{n}"
    if name in cols:
        return cols[name]
    require(cols, [f"F{n}", "F0"])
    return (cols[f"F{n}"] / cols["F0"]) ** (1.0 / (2 * n))


def empirical_level(t, kappa_n, mu: float, L: float) -> float:
    """``<(L kappa_n)^alpha> / <L kappa_n>`` over the given horizon."""
    lk = L * np.asarray(kappa_n, dtype=float)
    return time_average(t, lk ** (1.0 - mu)) / time_average(t, lk)


def classify(samples, n: int, cfg: ClassifierConfig) -> np.ndarray:
    """Boolean array, True where the sample is good."""
    cols = columns(samples)
    if n < 1:
        raise ValueError("n must be >= 1")
    require(cols, ["t"])
    kn = kappa_series(cols, n)
    kn1 = kappa_series(cols, n + 1)
    lk = cfg.L * kn
    if cfg.mode == "theoretical":
        return cfg.c_n * (kn1 / kn) >= lk ** cfg.mu * cfg.Re ** (-lambda_n(n, cfg.delta))
    level = empirical_level(cols["t"], kn, cfg.mu, cfg.L)
    return kn1 / kn >= lk ** cfg.mu * level


@dataclass
class IntervalSet:
    n: int
    entries: list = field(default_factory=list)  # (start, end, label)
    minDuration: float = 0.0
    horizon: tuple | None = None

    def __post_init__(self):
        self.entries = [(float(a), float(b), str(lab)) for a, b, lab in self.entries]
        if self.horizon is None and self.entries:
            self.horizon = (self.entries[0][0], self.entries[-1][1])
        if self.horizon is not None:
            self.horizon = (float(self.horizon[0]), float(self.horizon[1]))
        self.validate()

    def validate(self) -> None:
        prev_end = -math.inf
        for a, b, lab in self.entries:
            if lab not in LABELS:
                raise ValueError(f"unknown label {lab!r}")
            if not b > a:
                raise ValueError(f"empty or reversed interval [{a}, {b}]")
            if a < prev_end:
                raise ValueError("entries overlap or are unsorted")
            prev_end = b

    def of(self, label: str) -> list[tuple[float, float]]:
        return [(a, b) for a, b, lab in self.entries if lab == label]

    @property
    def good(self) -> list[tuple[float, float]]:
        return self.of(GOOD)

    @property
    def bad(self) -> list[tuple[float, float]]:
        return self.of(BAD)

    @property
    def dangerous(self) -> list[tuple[float, float]]:
        return self.of(DANGEROUS)

    def measure(self, label: str) -> float:
        return math.fsum(b - a for a, b in self.of(label))

    def label_at(self, t: float) -> str | None:
        for a, b, lab in self.entries:
            if a <= t <= b:
                return lab
        return None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "minDuration": self.minDuration,
            "horizon": list(self.horizon) if self.horizon else None,
            "entries": [{"start": a, "end": b, "label": lab} for a, b, lab in self.entries],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "IntervalSet":
        entries = [(e["start"], e["end"], e["label"]) for e in d["entries"]]
        hz = d.get("horizon")
        return cls(int(d["n"]), entries, float(d.get("minDuration", 0.0)), tuple(hz) if hz else None)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "IntervalSet":
        return cls.from_dict(json.loads(text))


def _runs(labels: Sequence) -> list[list]:
    """[label, first_index, last_index] for maximal constant runs."""
    runs = []
    for i, lab in enumerate(labels):
        if runs and runs[-1][0] == lab:
            runs[-1][2] = i
        else:
            runs.append([lab, i, i])
    return runs


def extract_intervals(labels, times, minDuration: float = 0.0, n: int = 0) -> IntervalSet:
    """Maximal constant-label runs with boundaries at sample midpoints.

    ``labels`` are booleans (True = good) or label strings.  Runs shorter
    than ``minDuration`` are absorbed, shortest first, into a neighbour: the
    longer neighbour when the two differ, the pair when they agree.  Interior
    runs go before the two edge runs, whose widths are cut by the horizon.
    """
    t = np.asarray(times, dtype=float)
    labels = [(GOOD if x else BAD) if isinstance(x, (bool, np.bool_)) else str(x) for x in labels]
    if len(labels) != t.size:
        raise ValueError("labels and times differ in length")
    if t.size < 2:
        raise ValueError("need at least two samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    mids = 0.5 * (t[1:] + t[:-1])
    edges = np.concatenate([[t[0]], mids, [t[-1]]])  # run [i..j] spans edges[i]..edges[j+1]
    runs = _runs(labels)
    span = t[-1] - t[0]

    def dur(r):
        return edges[r[2] + 1] - edges[r[1]]

    while len(runs) > 1 and minDuration > 0:
        short = [k for k in range(len(runs)) if dur(runs[k]) < minDuration]
        if not short:
            break
        # widths rounded so that equal sample spacings tie and the leftmost wins
        i = min(short, key=lambda k: (k in (0, len(runs) - 1), round(dur(runs[k]) / span, 9), k))
        left = runs[i - 1] if i > 0 else None
        right = runs[i + 1] if i + 1 < len(runs) else None
        if left is not None and right is not None and left[0] == right[0]:
            runs[i - 1 : i + 2] = [[left[0], left[1], right[2]]]
        elif right is None or (left is not None and dur(left) >= dur(right)):
            runs[i - 1 : i + 1] = [[left[0], left[1], runs[i][2]]]
        else:
            runs[i : i + 2] = [[right[0], runs[i][1], right[2]]]
    entries = [(edges[r[1]], edges[r[2] + 1], r[0]) for r in runs]
    return IntervalSet(n, entries, float(minDuration), (t[0], t[-1]))


def classify_intervals(samples, n: int, cfg: ClassifierConfig, minDuration: float = 0.0) -> IntervalSet:
    cols = columns(samples)
    return extract_intervals(classify(cols, n, cfg), cols["t"], minDuration, n)


@dataclass(frozen=True)
class WidthStats:
    meanGood: float
    meanBad: float
    ratio: float
    predictedRatio: float
    nGood: int
    nBad: int

    @property
    def measured_over_predicted(self) -> float:
        return self.ratio / self.predictedRatio

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("meanGood", "meanBad", "ratio", "predictedRatio", "nGood", "nBad")}
        d["measuredOverPredicted"] = self.measured_over_predicted
        return {k: (v if not (isinstance(v, float) and math.isinf(v)) else "inf") for k, v in d.items()}


def width_stats(iset: IntervalSet, cfg: ClassifierConfig) -> WidthStats:
    good = [b - a for a, b in iset.good]
    bad = [b - a for a, b in iset.bad]
    mg = float(np.mean(good)) if good else 0.0
    mb = float(np.mean(bad)) if bad else 0.0
    ratio = mg / mb if bad else math.inf
    n = max(iset.n, 1)
    pred = cfg.c_n * cfg.Re ** (lambda_n(n, cfg.delta) * (1.0 / cfg.mu - 1.0))
    return WidthStats(mg, mb, ratio, pred, len(good), len(bad))


def _smooth(y: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return y
    kernel = np.ones(window) / window
    pad = window // 2
    yp = np.pad(y, (pad, window - 1 - pad), mode="edge")
    return np.convolve(yp, kernel, mode="valid")


def dangerous_subintervals(samples, n: int, bad_set: IntervalSet, smooth: int = 1) -> IntervalSet:
    """Parts of each bad interval where the finite-difference ``dF_n/dt >= 0``."""
    cols = columns(samples)
    require(cols, ["t", f"F{n}"])
    t, F = cols["t"], cols[f"F{n}"]
    out = []
    for a, b in bad_set.bad:
        idx = np.nonzero((t >= a) & (t <= b))[0]
        if idx.size < 3:
            warnings.warn(f"bad interval [{a:.6g}, {b:.6g}] has {idx.size} samples (< 3); skipped", stacklevel=2)
            continue
        ts = t[idx]
        dF = np.gradient(_smooth(F[idx], smooth), ts)
        labels = dF >= 0
        mids = 0.5 * (ts[1:] + ts[:-1])
        edges = np.concatenate([[a], mids, [b]])
        for lab, i, j in _runs(list(labels)):
            if lab:
                out.append((edges[i], edges[j + 1], DANGEROUS))
    return IntervalSet(n, out, bad_set.minDuration, bad_set.horizon)


def _intersect_two(xs, ys) -> list[tuple[float, float]]:
    out, i, j = [], 0, 0
    while i < len(xs) and j < len(ys):
        lo = max(xs[i][0], ys[j][0])
        hi = min(xs[i][1], ys[j][1])
        if hi > lo:
            out.append((lo, hi))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def intersect_bad(sets: Sequence[IntervalSet], rtol: float = 1e-9) -> IntervalSet:
    """Pointwise intersection of the bad entries; the complement is labelled good."""
    if not sets:
        raise ValueError("no interval sets")
    hz = sets[0].horizon
    for s in sets[1:]:
        if s.horizon is None or hz is None or not np.allclose(s.horizon, hz, rtol=rtol, atol=0.0):
            raise ValueError(f"mismatched horizons: {hz} vs {s.horizon}")
    bad = sets[0].bad
    for s in sets[1:]:
        bad = _intersect_two(bad, s.bad)
    entries, cur = [], hz[0]
    for a, b in bad:
        if a > cur:
            entries.append((cur, a, GOOD))
        entries.append((a, b, BAD))
        cur = b
    if hz[1] > cur:
        entries.append((cur, hz[1], GOOD))
    return IntervalSet(sets[-1].n, entries, max(s.minDuration for s in sets), hz)


def energy_lower_bound_monitor(samples, dangerous_set: IntervalSet, omega0: float, Re: float) -> dict:
    """Flag samples where ``H_0(t) < H_0(t0) exp(-omega0 Re (t - t0))`` on dangerous intervals.

    Diagnostic only.  ``H_0(t0)`` is linearly interpolated at the interval start.
    """
    cols = columns(samples)
    require(cols, ["t", "H0"])
    t, H0 = cols["t"], cols["H0"]
    rows, total, flagged = [], 0, 0
    for a, b in dangerous_set.dangerous:
        h_start = float(np.interp(a, t, H0))
        idx = np.nonzero((t > a) & (t <= b))[0]
        floor = h_start * np.exp(-omega0 * Re * (t[idx] - a))
        bad = H0[idx] < floor
        rows.append({"start": a, "end": b, "samples": int(idx.size), "flagged": int(bad.sum()),
                     "flaggedTimes": [float(x) for x in t[idx][bad]]})
        total += idx.size
        flagged += int(bad.sum())
    return {"intervals": rows, "samples": total, "flagged": flagged,
            "fraction": flagged / total if total else 0.0}


def table3_check(samples, dangerous_set: IntervalSet, scaling: ScalingReport, L: float, nu: float,
                 c_n: float = 1.0) -> dict:
    """Measured minima on each dangerous interval against the lower-bound forms.

    Rows (measured quantity: predicted lower bound, generic constants 1 except ``c_n``)::

        kappa_threshold  L kappa_n          : c_n^(1/mu) Re^(lambda_n/mu)
        kappa_sub        L kappa_n          : Re^(4 + b_n)
        F1               L^-3 F_1 / w0^2    : Re^(4 + b_n)
        kolmogorov       L eta^-1           : Re^((4 + b_n)/4)
        taylor           L kappa_1          : Re^(b_n / 2)
        umax             umax / (L w0)      : Re^(4 + b_n)
        gradmax          gradmax / w0       : Re^(4 + b_n)

    ``eta^-1 = (eps/nu^3)^(1/4)`` with the instantaneous ``eps = nu H_1 / L^3``.
    """
    n, mu, Re = scaling.n, scaling.mu, scaling.Re
    cols = columns(samples)
    w0 = nu / L ** 2
    bn = b_n(n, mu, lambda_n(n + 1, scaling.delta))
    lam = lambda_n(n, scaling.delta)
    kn = kappa_series(cols, n)
    eps = nu * cols["H1"] / L ** 3
    measured = {
        "kappa_threshold": L * kn,
        "kappa_sub": L * kn,
        "F1": cols["F1"] / L ** 3 / w0 ** 2,
        "kolmogorov": L * (eps / nu ** 3) ** 0.25,
        "taylor": L * cols["kappa_1"],
        "umax": cols["umax"] / (L * w0),
        "gradmax": cols["gradmax"] / w0,
    }
    predicted = {
        "kappa_threshold": c_n ** (1.0 / mu) * Re ** (lam / mu),
        "kappa_sub": Re ** (4 + bn),
        "F1": Re ** (4 + bn),
        "kolmogorov": Re ** ((4 + bn) / 4),
        "taylor": Re ** (bn / 2),
        "umax": Re ** (4 + bn),
        "gradmax": Re ** (4 + bn),
    }
    t = cols["t"]
    rows = []
    for a, b in dangerous_set.dangerous:
        idx = np.nonzero((t >= a) & (t <= b))[0]
        if idx.size == 0:
            continue
        entry = {"start": a, "end": b}
        for name, series in measured.items():
            m = float(np.min(series[idx]))
            entry[name] = {"measuredMin": m, "predicted": predicted[name], "ratio": m / predicted[name]}
        rows.append(entry)
    return {"n": n, "mu": mu, "Re": Re, "b_n": bn, "predicted": predicted, "intervals": rows}


def bad_sample_lower_bound(samples, n: int, cfg: ClassifierConfig) -> dict:
    """On theoretical-bad samples with ``kappa_{n+1} >= kappa_n``, ``L kappa_n > c_n^(1/mu) Re^(lambda_n/mu)``."""
    cols = columns(samples)
    good = classify(cols, n, cfg)
    kn = kappa_series(cols, n)
    kn1 = kappa_series(cols, n + 1)
    sel = (~good) & (kn1 >= kn)
    floor = cfg.c_n ** (1.0 / cfg.mu) * cfg.Re ** (lambda_n(n, cfg.delta) / cfg.mu)
    ok = cfg.L * kn[sel] > floor
    return {"badSamples": int(sel.sum()), "violations": int((~ok).sum()), "floor": floor}


__all__ = [
    "ClassifierConfig", "IntervalSet", "WidthStats", "classify", "classify_intervals",
    "extract_intervals", "width_stats", "dangerous_subintervals", "intersect_bad",
    "energy_lower_bound_monitor", "table3_check", "bad_sample_lower_bound", "empirical_level",
    "kappa_series",
]
