"""Spectral-moment diagnostics and long-time averages.

``F_n = H_n + tau^2 ||grad^n f||^2`` and ``kappa_{n,r} = (F_n / F_r)^(1/(2(n-r)))``.
Columns of the sample CSV, in order::

    t, H0..H{n+1}, F0..F{n+1}, kappa_1..kappa_{n}, kappa_{a}_{b} (1 <= b < a <= n),
    umax, gradmax, Y2..Y{n}, einput, ebal

where ``n = n_max``; ``kappa_a`` is ``kappa_{a,0}``, ``Y_a = F_a^(-1/(2a-1))`` and
``ebal`` is the largest per-step energy-balance residual since the previous
row (NaN on the first row).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dynamics import ForcingField, energy_input
from .spectral_core import SpectralField, h_norms, sup_norms


def tau(nu: float, ell: float, Gr: float, delta: float) -> float:
    """Characteristic time ``ell^2 / nu * Gr^-(delta + 1/2)``."""
    if not 0.0 < delta < 1.0 / 6.0:
        raise ValueError(f"delta must lie in (0, 1/6), got {delta}")
    if not Gr > 0:
        raise ValueError(f"Gr must be positive, got {Gr}")
    return ell ** 2 / nu * Gr ** (-(delta + 0.5))


def grashof(f_amplitude: float, ell: float, nu: float) -> float:
    return f_amplitude * ell ** 3 / nu ** 2


def f_values(u: SpectralField, forcing: ForcingField | None, tau_: float, n_max: int) -> np.ndarray:
    """``F_0 .. F_n_max``."""
    F = h_norms(u, n_max)
    if forcing is not None and tau_ != 0.0:
        F = F + np.array([tau_ ** 2 * forcing.grad_norm2(n) for n in range(n_max + 1)])
    return F


def f_n(u: SpectralField, forcing: ForcingField | None, tau_: float, n: int) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(f_values(u, forcing, tau_, n)[n])


def kappa_from_f(F: Sequence[float], n: int, r: int = 0) -> float:
    if not 0 <= r < n:
        raise ValueError(f"need 0 <= r < n, got n={n}, r={r}")
    return (F[n] / F[r]) ** (1.0 / (2 * (n - r)))


def kappa(u: SpectralField, forcing: ForcingField | None, tau_: float, n: int, r: int = 0) -> float:
    return kappa_from_f(f_values(u, forcing, tau_, n), n, r)


# --- samples ----------------------------------------------------------------

def column_names(n_max: int) -> list[str]:
    cols = ["t"]
    cols += [f"H{i}" for i in range(n_max + 2)]
    cols += [f"F{i}" for i in range(n_max + 2)]
    cols += [f"kappa_{n}" for n in range(1, n_max + 1)]
    cols += [f"kappa_{n}_{r}" for n in range(2, n_max + 1) for r in range(1, n)]
    cols += ["umax", "gradmax"]
    cols += [f"Y{n}" for n in range(2, n_max + 1)]
    cols += ["einput", "ebal"]
    return cols


@dataclass
class DiagSample:
    t: float
    H: np.ndarray
    F: np.ndarray
    kappa: dict  # (n, r) -> value, 0 <= r < n <= n_max
    umax: float
    gradmax: float
    Y: dict  # n -> F_n^(-1/(2n-1)), 2 <= n <= n_max
    einput: float
    ebal: float = math.nan

    @property
    def n_max(self) -> int:
        return len(self.H) - 2

    def row(self) -> list[float]:
        n_max = self.n_max
        out = [self.t, *self.H, *self.F]
        out += [self.kappa[(n, 0)] for n in range(1, n_max + 1)]
        out += [self.kappa[(n, r)] for n in range(2, n_max + 1) for r in range(1, n)]
        out += [self.umax, self.gradmax]
        out += [self.Y[n] for n in range(2, n_max + 1)]
        out += [self.einput, self.ebal]
        return [float(x) for x in out]


def make_sample(t: float, u: SpectralField, forcing: ForcingField | None, tau_: float,
                n_max: int = 4, ebal: float = math.nan) -> DiagSample:
    H = h_norms(u, n_max + 1)
    F = H.copy()
    if forcing is not None and tau_ != 0.0:
        F = F + np.array([tau_ ** 2 * forcing.grad_norm2(n) for n in range(n_max + 2)])
    kap = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        for n in range(1, n_max + 1):
            for r in range(n):
                kap[(n, r)] = float(np.float64(F[n] / F[r]) ** (1.0 / (2 * (n - r))))
        Y = {n: float(np.float64(F[n]) ** (-1.0 / (2 * n - 1))) for n in range(2, n_max + 1)}
    umax, gmax = sup_norms(u)
    ein = energy_input(u, forcing) if forcing is not None else 0.0
    return DiagSample(float(t), H, F, kap, umax, gmax, Y, ein, ebal)


def _fmt(x: float) -> str:
    return repr(float(x))


class SampleWriter:
    """Append DiagSample rows to a CSV; rows use ``repr`` so values round-trip."""

    def __init__(self, path, n_max: int, append: bool = False):
        self.n_max = n_max
        self._fh = open(path, "a" if append else "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        if not append:
            self._w.writerow(column_names(n_max))

    def write(self, sample: DiagSample) -> None:
        self._w.writerow([_fmt(x) for x in sample.row()])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_samples(path) -> dict[str, np.ndarray]:
    """Load a sample CSV as a mapping column name -> float array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty sample file")
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def columns(samples) -> dict[str, np.ndarray]:
    """Accept a column mapping or a sequence of DiagSample."""
    if isinstance(samples, Mapping):
        return {k: np.asarray(v, dtype=float) for k, v in samples.items()}
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    names = column_names(samples[0].n_max)
    data = np.array([s.row() for s in samples], dtype=float)
    return {name: data[:, i] for i, name in enumerate(names)}


def n_max_of(cols: Mapping[str, np.ndarray]) -> int:
    n = 0
    while f"kappa_{n + 1}" in cols:
        n += 1
    return n


def require(cols: Mapping[str, np.ndarray], names: Iterable[str]) -> None:
    missing = [c for c in names if c not in cols]
    if missing:
        raise KeyError(f"missing sample columns: {', '.join(missing)}")


# --- long-time averages -----------------------------------------------------

def trapezoid_weights(t: np.ndarray) -> np.ndarray:
    """Weights w with sum(w * y) = trapezoidal integral of y over t."""
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    if t.size < 2:
        return w
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def time_average(t, y) -> float:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size == 0:
        raise ValueError("empty horizon")
    if t.size == 1:
        return float(y[0])
    return float(np.sum(trapezoid_weights(t) * y) / (t[-1] - t[0]))


def burn_in_slice(t: np.ndarray, fraction: float) -> slice:
    """Samples with t >= t0 + fraction * (t_end - t0)."""
    t = np.asarray(t)
    if t.size == 0:
        return slice(0, 0)
    cut = t[0] + fraction * (t[-1] - t[0])
    return slice(int(np.searchsorted(t, cut, side="left")), t.size)


def average_integrands(cols: Mapping[str, np.ndarray], L: float, mu: float | None = None) -> dict[str, np.ndarray]:
    """Time series whose averages are tracked over a run."""
    n_max = n_max_of(cols)
    out = {
        "kappa1_sq": cols["kappa_1"] ** 2,
        "F1": cols["F1"],
        "umax": cols["umax"],
        "sqrt_gradmax": np.sqrt(cols["gradmax"]),
        "H0": cols["H0"],
        "H1": cols["H1"],
    }
    for n in range(1, n_max + 1):
        out[f"Lkappa_{n}"] = L * cols[f"kappa_{n}"]
        out[f"kappa_{n}"] = cols[f"kappa_{n}"]
        out[f"F{n}_root"] = cols[f"F{n}"] ** (1.0 / (2 * n - 1))
    if mu is not None:
        alpha = 1.0 - mu
        for n in range(1, n_max):
            ratio = cols[f"kappa_{n + 1}"] / cols[f"kappa_{n}"]
            out[f"ratio_{n}_pow"] = ratio ** (alpha / mu)
            out[f"kappa_{n}_alpha"] = cols[f"kappa_{n}"] ** alpha
    return out


@dataclass
class RunningAverages:
    """Cumulative trapezoidal integrals of named series.

    ``average(name, t_start, t_end)`` answers for any horizon bounded by
    stored sample times.  With ``L`` set, ``update_averages`` derives the
    tracked series from a DiagSample via ``average_integrands``.
    """

    L: float = 1.0
    mu: float | None = None
    times: list = field(default_factory=list)
    _values: dict = field(default_factory=dict)
    _cum: dict = field(default_factory=dict)

    def update(self, t: float, values: Mapping[str, float]) -> "RunningAverages":
        if self.times and not t > self.times[-1]:
            raise ValueError(f"time regression: {t} after {self.times[-1]}")
        if not self.times:
            for name in values:
                self._values[name] = []
                self._cum[name] = []
        for name in self._values:
            v = float(values[name])
            if self.times:
                prev = self._values[name][-1]
                total = self._cum[name][-1] + 0.5 * (t - self.times[-1]) * (prev + v)
            else:
                total = 0.0
            self._values[name].append(v)
            self._cum[name].append(total)
        self.times.append(float(t))
        return self

    @property
    def names(self) -> tuple:
        return tuple(self._values)

    def average(self, name: str, t_start: float | None = None, t_end: float | None = None) -> float:
        if not self.times:
            raise ValueError("empty horizon")
        t = np.asarray(self.times)
        i0 = 0 if t_start is None else int(np.searchsorted(t, t_start, side="left"))
        i1 = t.size - 1 if t_end is None else int(np.searchsorted(t, t_end, side="right")) - 1
        if i1 < i0:
            raise ValueError("empty horizon")
        if i1 == i0:
            return self._values[name][i0]
        cum = self._cum[name]
        return float((cum[i1] - cum[i0]) / (t[i1] - t[i0]))


def update_averages(avg: RunningAverages, sample: DiagSample) -> RunningAverages:
    values = {k: float(v[0]) for k, v in average_integrands(columns([sample]), avg.L, avg.mu).items()}
    return avg.update(sample.t, values)


def averages_from_columns(cols: Mapping[str, np.ndarray], L: float, mu: float | None = None,
                          burn_in: float = 0.2) -> dict[str, float]:
    sl = burn_in_slice(cols["t"], burn_in)
    t = cols["t"][sl]
    if t.size == 0:
        raise ValueError("empty horizon after burn-in")
    return {k: time_average(t, v[sl]) for k, v in average_integrands(cols, L, mu).items()}


def horizon_averages(cols: Mapping[str, np.ndarray], L: float, mu: float | None = None, burn_in: float = 0.2,
                     fractions=(0.25, 0.5, 0.75, 1.0)) -> list[dict]:
    """Averages from the end of burn-in up to several horizons.

    A finite run cannot show that the long-time limit has been reached; the
    drift across horizons is reported instead.
    """
    t = np.asarray(cols["t"], dtype=float)
    sl = burn_in_slice(t, burn_in)
    out = []
    for frac in fractions:
        t_end = t[0] + frac * (t[-1] - t[0])
        idx = np.arange(t.size)[sl]
        idx = idx[t[idx] <= t_end * (1 + 1e-12)]
        if idx.size == 0:
            continue
        avg = {k: time_average(t[idx], v[idx]) for k, v in average_integrands(cols, L, mu).items()}
        out.append({"tEnd": float(t[idx[-1]]), "samples": int(idx.size), "averages": avg})
    return out


@dataclass(frozen=True)
class BulkParameters:
    Gr: float
    Re: float
    U: float
    eps_av: float
    eta_k_inv: float
    taylor_inv: float


def bulk_parameters(samples, L: float, ell: float, nu: float, f_amplitude: float,
                    burn_in: float = 0.2) -> BulkParameters:
    cols = columns(samples)
    if cols["t"].size == 0:
        raise ValueError("empty horizon")
    sl = burn_in_slice(cols["t"], burn_in)
    t = cols["t"][sl]
    if t.size == 0:
        raise ValueError("empty horizon after burn-in")
    Gr = grashof(f_amplitude, ell, nu)
    U = math.sqrt(time_average(t, cols["H0"][sl]) / L ** 3)
    Re = U * ell / nu
    eps = nu * time_average(t, cols["H1"][sl]) / L ** 3
    eta_inv = (eps / nu ** 3) ** 0.25
    taylor = time_average(t, cols["kappa_1"][sl])
    return BulkParameters(Gr, Re, U, eps, eta_inv, taylor)


def holder_average_bound(kappa_n, kappa_np1, mu: float, times=None) -> tuple[float, float, float]:
    """Both sides of the averaged ratio bound.

    ``lhs = <(k_{n+1}/k_n)^(alpha/mu)>`` and
    ``rhs = (<k_n^alpha> / <k_n>^alpha)^(1/mu)`` with ``alpha = 1 - mu``.
    ``lhs >= rhs`` whenever ``k_{n+1} >= k_n`` pointwise.  Averages are
    trapezoidal over ``times`` when given, plain means otherwise.
    """
    a = np.asarray(kappa_n, dtype=float)
    b = np.asarray(kappa_np1, dtype=float)
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    if a.shape != b.shape or a.size == 0:
        raise ValueError("series must be nonempty and equally long")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("series must be strictly positive")
    if times is None:
        w = np.full(a.size, 1.0 / a.size)
    else:
        w = trapezoid_weights(times)
        w = w / w.sum()
    alpha = 1.0 - mu
    lhs = float(np.sum(w * (b / a) ** (alpha / mu)))
    rhs = float((np.sum(w * a ** alpha) / np.sum(w * a) ** alpha) ** (1.0 / mu))
    return lhs, rhs, lhs - rhs


def sobolev_constant_estimates(samples) -> dict:
    """Empirical constants in the sup-norm Sobolev bounds, per sample.

    ratios, for each 2 <= n <= n_max:
      ``umax / (kappa_{n,1}^(1/2) F_1^(1/2))``
      ``gradmax / (kappa_{n,1}^(3/2) F_1^(1/2))``
    and ``umax^2 / (kappa_{2,1} F_1)``.  Reported as max and median.
    """
    cols = columns(samples)
    n_max = n_max_of(cols)
    if n_max < 2:
        raise ValueError("need n_max >= 2")
    F1 = cols["F1"]
    series = {}
    for n in range(2, n_max + 1):
        k = cols[f"kappa_{n}_1"]
        series[f"umax_over_kappa{n}1"] = cols["umax"] / np.sqrt(k * F1)
        series[f"gradmax_over_kappa{n}1"] = cols["gradmax"] / (k ** 1.5 * np.sqrt(F1))
    series["umax2_over_kappa21_F1"] = cols["umax"] ** 2 / (cols["kappa_2_1"] * F1)
    return {name: {"max": float(np.max(v)), "median": float(np.median(v))} for name, v in series.items()}
