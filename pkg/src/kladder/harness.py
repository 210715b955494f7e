"""Run orchestration: configuration, simulation, analysis, verification.

Config is flat JSON.  Keys and defaults are the fields of ``SimConfig``;
``init`` selects the initial condition (``random``, ``shear`` or ``zero``).

Run directory layout::

    config.json          config snapshot plus "configHash"
    samples.csv          one DiagSample row per sampleEvery steps
    ckpt_XXXXXX.klad     velocity checkpoints, XXXXXX = step index
    intervals_n{n}.json  good/bad intervals        (analyze)
    dangerous_n{n}.json  dangerous sub-intervals   (analyze)
    intersect_p{p}.json  bad set for n = 1..p      (analyze)
    analysis.json        widths, monitors, scaling (analyze)
    verify.json          named invariant results   (verify)
    spectrum.csv         time-averaged shell spectrum (spectrum)
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import intervals as iv
from . import scaling_laws as sl
from .dynamics import ForcingField, SimState, energy_balance_residual, forcing_shell, make_forcing, step
from .spectral_core import (
    divergence_defect,
    hermitian_defect,
    make_grid,
    random_field,
    read_checkpoint,
    shear_mode,
    shell_spectrum,
    write_checkpoint,
    zeros,
)

log = logging.getLogger(__name__)

SAMPLES = "samples.csv"
CONFIG = "config.json"
_CKPT = re.compile(r"ckpt_(\d{6})\.klad$")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config:\n  " + "\n  ".join(self.problems))


@dataclass
class SimConfig:
    N: int = 32
    L: float = 2 * math.pi
    ell: float = 1.0
    nu: float = 0.01
    f_amplitude: float = 0.15
    dt: float = 0.02
    t_end: float = 1.0
    sampleEvery: int = 5
    seed: int = 0
    delta: float = 0.125
    mu: float = 0.55
    n_max: int = 4
    c_constants: dict = field(default_factory=dict)
    burnInFraction: float = 0.2
    minDuration: float = 0.0
    outputDir: str = "runs/default"
    init: str = "random"
    initEnergy: float = 0.5  # H_0 / L^3 for random init
    initSlope: float = -2.0
    initKmax: int = 4
    shearAmplitude: float = 1.0
    shearK: int = 1
    checkpointEvery: int = 10  # in samples; the final step is always checkpointed
    energyBalance: bool = True

    def problems(self) -> list[str]:
        out = []
        if not isinstance(self.N, int) or self.N < 8 or self.N % 2:
            out.append(f"N must be an even integer >= 8 (got {self.N!r})")
        if not self.L > 0:
            out.append(f"L must be positive (got {self.L})")
        if not self.ell > 0:
            out.append(f"ell must be positive (got {self.ell})")
        elif self.L > 0 and self.ell > self.L / (2 * math.pi) * (1 + 1e-12):
            out.append(f"ell must satisfy ell <= L/(2 pi) = {self.L / (2 * math.pi):.6g} (got {self.ell})")
        elif not out:
            try:
                s = forcing_shell(self.ell, make_grid(self.N, self.L))
                if s > self.N / 3:
                    out.append(f"forcing shell {s} above dealias cutoff N/3")
            except ValueError as e:
                out.append(str(e))
        if not self.nu > 0:
            out.append(f"nu must be positive (got {self.nu})")
        if self.f_amplitude < 0:
            out.append(f"f_amplitude must be >= 0 (got {self.f_amplitude})")
        if not self.dt > 0:
            out.append(f"dt must be positive (got {self.dt})")
        if self.t_end < 0:
            out.append(f"t_end must be >= 0 (got {self.t_end})")
        elif self.dt > 0 and abs(self.t_end / self.dt - round(self.t_end / self.dt)) > 1e-9 * max(1.0, self.t_end / self.dt):
            out.append(f"t_end must be a multiple of dt (got {self.t_end} / {self.dt})")
        if not isinstance(self.sampleEvery, int) or self.sampleEvery < 1:
            out.append(f"sampleEvery must be an integer >= 1 (got {self.sampleEvery!r})")
        if not isinstance(self.checkpointEvery, int) or self.checkpointEvery < 1:
            out.append(f"checkpointEvery must be an integer >= 1 (got {self.checkpointEvery!r})")
        if not 0.0 < self.delta < 1.0 / 6.0:
            out.append(f"delta must lie in (0, 1/6) (got {self.delta})")
        if not 0.0 < self.mu < 1.0:
            out.append(f"mu must lie in (0, 1) (got {self.mu})")
        if not isinstance(self.n_max, int) or self.n_max < 1:
            out.append(f"n_max must be an integer >= 1 (got {self.n_max!r})")
        if not 0.0 <= self.burnInFraction < 1.0:
            out.append(f"burnInFraction must lie in [0, 1) (got {self.burnInFraction})")
        if self.minDuration < 0:
            out.append(f"minDuration must be >= 0 (got {self.minDuration})")
        if self.init not in ("random", "shear", "zero"):
            out.append(f"init must be random, shear or zero (got {self.init!r})")
        for k, v in self.c_constants.items():
            if not str(k).isdigit() or not float(v) > 0:
                out.append(f"c_constants entries must map n -> positive value (got {k!r}: {v!r})")
        return out

    def validate(self) -> "SimConfig":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def c_n(self, n: int) -> float:
        return float(self.c_constants.get(str(n), 1.0))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known - {"configHash"})
        if unknown:
            raise ConfigError([f"unknown key {k!r}" for k in unknown])
        d = {k: v for k, v in d.items() if k in known}
        if "c_constants" in d:
            d["c_constants"] = {str(k): float(v) for k, v in d["c_constants"].items()}
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "SimConfig":
        return cls.from_json(Path(path).read_text())

    def hash(self, exclude=("outputDir",)) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in exclude}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def physics_hash(self) -> str:
        """Hash ignoring the horizon, so a run may be extended by resuming."""
        return self.hash(exclude=("outputDir", "t_end"))


@dataclass
class RunArtifact:
    config: SimConfig
    configHash: str
    run_dir: Path
    samples: Path
    checkpoints: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def run_dir_of(cfg: SimConfig, root=None) -> Path:
    p = Path(cfg.outputDir)
    return p if root is None or p.is_absolute() else Path(root) / p


def tau_of(cfg: SimConfig) -> float:
    if cfg.f_amplitude == 0:
        return 0.0
    return dg.tau(cfg.nu, cfg.ell, dg.grashof(cfg.f_amplitude, cfg.ell, cfg.nu), cfg.delta)


def build_forcing(cfg: SimConfig, grid) -> ForcingField:
    if cfg.f_amplitude == 0:
        return ForcingField(zeros(grid), forcing_shell(cfg.ell, grid), 0.0)
    return make_forcing(cfg.ell, cfg.f_amplitude, cfg.seed, grid)


def initial_field(cfg: SimConfig, grid):
    if cfg.init == "shear":
        return shear_mode(grid, cfg.shearAmplitude, cfg.shearK)
    if cfg.init == "zero":
        return zeros(grid)
    return random_field(grid, cfg.seed + 1, energy=cfg.initEnergy * cfg.L ** 3,
                        slope=cfg.initSlope, kmax=cfg.initKmax)


def checkpoints(run_dir) -> list[tuple[int, Path]]:
    out = []
    for p in Path(run_dir).glob("ckpt_*.klad"):
        m = _CKPT.search(p.name)
        if m:
            out.append((int(m.group(1)), p))
    return sorted(out)


def _ckpt_path(run_dir: Path, step_index: int) -> Path:
    return run_dir / f"ckpt_{step_index:06d}.klad"


def _truncate_samples(path: Path, n_keep: int) -> None:
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[: 1 + n_keep]))


def simulate(cfg: SimConfig, resume: bool = False, root=None, progress=None) -> RunArtifact:
    """Integrate to ``t_end`` writing samples and checkpoints.

    With ``resume`` the latest checkpoint of a run with the same physics
    hash is the starting point; output is byte-identical to an
    uninterrupted run.
    """
    cfg.validate()
    run_dir = run_dir_of(cfg, root)
    run_dir.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.N, cfg.L)
    forcing = build_forcing(cfg, grid)
    tau_ = tau_of(cfg)
    csv_path = run_dir / SAMPLES
    snapshot = dict(cfg.to_dict(), configHash=cfg.hash(), physicsHash=cfg.physics_hash())

    start = 0
    u = None
    if resume and (run_dir / CONFIG).exists():
        old = json.loads((run_dir / CONFIG).read_text())
        if old.get("physicsHash") != cfg.physics_hash():
            raise ConfigError([f"cannot resume: run in {run_dir} has a different configuration"])
        usable = [(s, p) for s, p in checkpoints(run_dir) if s <= cfg.n_steps and s % cfg.sampleEvery == 0]
        if usable and csv_path.exists():
            start, path = usable[-1]
            u = read_checkpoint(path)
            _truncate_samples(csv_path, start // cfg.sampleEvery + 1)
            log.info("resuming from step %d", start)
    if u is None:
        start = 0
        u = initial_field(cfg, grid)
        for _, p in checkpoints(run_dir):
            p.unlink()
    (run_dir / CONFIG).write_text(json.dumps(snapshot, indent=2, sort_keys=True))

    state = SimState(start * cfg.dt, u, start)
    ckpts = []
    writer = dg.SampleWriter(csv_path, cfg.n_max, append=start > 0)
    t0 = time.perf_counter()
    try:
        if start == 0:
            writer.write(dg.make_sample(0.0, state.u, forcing, tau_, cfg.n_max))
            write_checkpoint(_ckpt_path(run_dir, 0), state.u)
            ckpts.append(_ckpt_path(run_dir, 0))
        ebal = math.nan
        for k in range(start + 1, cfg.n_steps + 1):
            nxt = step(state, forcing, cfg.nu, cfg.dt)
            nxt = SimState(k * cfg.dt, nxt.u, k)
            if cfg.energyBalance:
                r = energy_balance_residual(state, nxt, forcing, cfg.nu, cfg.dt)
                ebal = r if math.isnan(ebal) else max(ebal, r)
            state = nxt
            if k % cfg.sampleEvery == 0 or k == cfg.n_steps:
                writer.write(dg.make_sample(state.t, state.u, forcing, tau_, cfg.n_max, ebal))
                ebal = math.nan
                if (k // cfg.sampleEvery) % cfg.checkpointEvery == 0 or k == cfg.n_steps:
                    write_checkpoint(_ckpt_path(run_dir, k), state.u)
                    ckpts.append(_ckpt_path(run_dir, k))
                if progress:
                    progress(k, cfg.n_steps, time.perf_counter() - t0)
    finally:
        writer.close()
    return RunArtifact(cfg, cfg.hash(), run_dir, csv_path, [p for _, p in checkpoints(run_dir)])


def load_run(run_dir) -> tuple[SimConfig, str, dict]:
    run_dir = Path(run_dir)
    if not (run_dir / SAMPLES).exists():
        raise FileNotFoundError(f"no {SAMPLES} in {run_dir}")
    raw = json.loads((run_dir / CONFIG).read_text())
    h = raw.pop("configHash", "")
    raw.pop("physicsHash", None)
    return SimConfig.from_dict(raw), h, dg.read_samples(run_dir / SAMPLES)


# --- analysis ---------------------------------------------------------------

@dataclass
class Analysis:
    Re: float
    bulk: dg.BulkParameters
    intervals: dict  # n -> IntervalSet
    dangerous: dict  # n -> IntervalSet
    intersections: dict  # p -> IntervalSet
    report: dict


def analyze_columns(cols: dict, cfg: SimConfig, ns, mu: float, mode: str = "theoretical",
                    minDuration: float | None = None, allow_mu_outside: bool = False) -> Analysis:
    """Two passes: whole-run Re first, then per-n classification."""
    ns = sorted(set(int(n) for n in ns))
    for n in ns:
        if n < 1:
            raise ValueError(f"n must be >= 1 (got {n})")
        dg.require(cols, [f"F{n}", f"F{n + 1}", "F0", "H0", "H1", "kappa_1", "umax", "gradmax"])
    minDuration = cfg.minDuration if minDuration is None else minDuration
    bulk = dg.bulk_parameters(cols, cfg.L, cfg.ell, cfg.nu, cfg.f_amplitude, cfg.burnInFraction)
    Re = bulk.Re
    omega0 = cfg.nu / cfg.L ** 2
    sets, dang, per_n = {}, {}, {}
    for n in ns:
        ccfg = iv.ClassifierConfig(mu=mu, Re=Re, mode=mode, c_n=cfg.c_n(n), L=cfg.L,
                                   delta=cfg.delta, allow_mu_outside=allow_mu_outside)
        iset = iv.classify_intervals(cols, n, ccfg, minDuration)
        dset = iv.dangerous_subintervals(cols, n, iset)
        params = sl.ScalingParams(n, mu, max(Re, 1.0 + 1e-12), cfg.L, cfg.nu, cfg.delta,
                                  {int(k): v for k, v in cfg.c_constants.items()})
        rep = sl.scaling_report(params)
        sets[n], dang[n] = iset, dset
        per_n[n] = {
            "widths": iv.width_stats(iset, ccfg).to_dict(),
            "goodFraction": iset.measure(iv.GOOD) / (iset.horizon[1] - iset.horizon[0]),
            "energyMonitor": iv.energy_lower_bound_monitor(cols, dset, omega0, Re),
            "table3": iv.table3_check(cols, dset, rep, cfg.L, cfg.nu, cfg.c_n(n)),
            "badSampleBound": iv.bad_sample_lower_bound(cols, n, ccfg) if mode == "theoretical" else None,
            "scaling": rep.to_dict(),
        }
    inter = {}
    if ns and ns[0] == 1:
        p = 1
        while p in sets:
            inter[p] = iv.intersect_bad([sets[k] for k in range(1, p + 1)])
            inter[p].n = p
            p += 1
    report = {
        "Re": Re,
        "bulk": dataclasses.asdict(bulk),
        "mu": mu,
        "mode": mode,
        "n": per_n,
        "intersections": {p: s.measure(iv.BAD) for p, s in inter.items()},
        "averagesByHorizon": dg.horizon_averages(cols, cfg.L, mu, cfg.burnInFraction),
    }
    return Analysis(Re, bulk, sets, dang, inter, report)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _dump(path: Path, obj: dict, config_hash: str) -> None:
    path.write_text(json.dumps(dict(obj, configHash=config_hash), indent=2, default=_json_default))


def analyze(run_dir, ns, mu: float | None = None, mode: str = "theoretical",
            minDuration: float | None = None, allow_mu_outside: bool = False) -> Analysis:
    run_dir = Path(run_dir)
    cfg, h, cols = load_run(run_dir)
    a = analyze_columns(cols, cfg, ns, cfg.mu if mu is None else mu, mode, minDuration, allow_mu_outside)
    for n, s in a.intervals.items():
        _dump(run_dir / f"intervals_n{n}.json", s.to_dict(), h)
        _dump(run_dir / f"dangerous_n{n}.json", a.dangerous[n].to_dict(), h)
    for p, s in a.intersections.items():
        _dump(run_dir / f"intersect_p{p}.json", s.to_dict(), h)
    _dump(run_dir / "analysis.json", a.report, h)
    return a


# --- verification -----------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    margin: float  # worst-case margin, >= 0 means satisfied
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.margin = float(self.margin)


REL_SLACK = 1e-10


def _kappa_nr(F: np.ndarray, n: int, r: int) -> np.ndarray:
    return (F[n] / F[r]) ** (1.0 / (2 * (n - r)))


def _rel_margin(small: np.ndarray, big: np.ndarray) -> float:
    """min over samples of (big - small)/|big|; >= -REL_SLACK passes."""
    return float(np.min((big - small) / np.abs(big)))


def check_kappa_ordering(F: np.ndarray) -> Check:
    top = F.shape[0] - 1
    m = min(_rel_margin(_kappa_nr(F, n, 0), _kappa_nr(F, n + 1, 0)) for n in range(1, top))
    return Check("kappa_ordering", m >= -REL_SLACK, m, f"kappa_n <= kappa_(n+1), n = 1..{top - 1}")


def check_kappa_nr_ordering(F: np.ndarray) -> Check:
    top = F.shape[0] - 1
    worst = math.inf
    for n in range(1, top + 1):
        for r in range(n):
            k = _kappa_nr(F, n, r)
            if n + 1 <= top:
                worst = min(worst, _rel_margin(k, _kappa_nr(F, n + 1, r)))
            if r + 1 < n:
                worst = min(worst, _rel_margin(k, _kappa_nr(F, n, r + 1)))
    return Check("kappa_nr_ordering", worst >= -REL_SLACK, worst, "kappa_(n,r) nondecreasing in n and r")


def check_log_convexity(F: np.ndarray) -> Check:
    top = F.shape[0] - 1
    m = min(_rel_margin(F[n] ** 2, F[n - 1] * F[n + 1]) for n in range(1, top))
    return Check("F_log_convexity", m >= -REL_SLACK, m, "F_n^2 <= F_(n-1) F_(n+1), includes F_1^2 <= F_0 F_2")


def check_interpolation(F: np.ndarray) -> Check:
    """``F_N^(p+q) <= F_(N-p)^q F_(N+q)^p`` in log form for every housed triple."""
    top = F.shape[0] - 1
    lf = np.log(F)
    worst, count = math.inf, 0
    for N in range(1, top):
        for p in range(1, N + 1):
            for q in range(1, top - N + 1):
                lhs = (p + q) * lf[N]
                rhs = q * lf[N - p] + p * lf[N + q]
                worst = min(worst, float(np.min((rhs - lhs) / np.maximum(np.abs(rhs), 1.0))))
                count += 1
    return Check("F_interpolation", worst >= -REL_SLACK, worst, f"{count} (N, p, q) triples")


def check_energy_balance(cols, tol: float) -> Check:
    e = cols.get("ebal")
    if e is None or np.all(np.isnan(e)):
        return Check("energy_balance", True, math.inf, "no residuals recorded")
    worst = float(np.nanmax(e))
    return Check("energy_balance", worst < tol, (tol - worst) / tol, f"max residual {worst:.3e} < {tol:g}")


def check_holder(cols, mu: float, ns) -> Check:
    worst, details = math.inf, []
    for n in ns:
        kn, kn1 = iv.kappa_series(cols, n), iv.kappa_series(cols, n + 1)
        lhs, rhs, margin = dg.holder_average_bound(kn, kn1, mu, cols["t"])
        worst = min(worst, margin / rhs)
        details.append(f"n={n}: {lhs:.6g} >= {rhs:.6g}")
    return Check("holder_average_bound", worst >= -REL_SLACK, worst, "; ".join(details))


def check_finite(cols) -> Check:
    bad = [k for k, v in cols.items() if k != "ebal" and not np.all(np.isfinite(v))]
    return Check("finite_samples", not bad, 0.0 if not bad else -1.0, ",".join(bad))


def check_time_monotone(cols) -> Check:
    d = np.diff(cols["t"])
    m = float(d.min()) if d.size else math.inf
    return Check("time_monotone", m > 0, m)


def _uncovered(pieces, cover) -> float:
    """Largest length of a piece not covered by the sorted interval list ``cover``."""
    worst = 0.0
    for x0, x1 in pieces:
        inside = sum(min(x1, b1) - max(x0, b0) for b0, b1 in cover if min(x1, b1) > max(x0, b0))
        worst = max(worst, (x1 - x0) - inside)
    return worst


def check_intervals(analyses, cols) -> list[Check]:
    """Interval invariants over one or more analyses (e.g. both classifier modes)."""
    t = cols["t"]
    span = (t[0], t[-1])
    cover = dang = nest = 0.0
    viol = 0
    p_top = 0
    for a in analyses:
        for s in a.intervals.values():
            covered = s.measure(iv.GOOD) + s.measure(iv.BAD)
            gaps = sum(e1[0] - e0[1] for e0, e1 in zip(s.entries, s.entries[1:]))
            cover = max(cover, abs(covered - (span[1] - span[0])), abs(gaps),
                        abs(s.entries[0][0] - span[0]), abs(s.entries[-1][1] - span[1]))
        for n, d in a.dangerous.items():
            dang = max(dang, _uncovered(d.dangerous, a.intervals[n].bad))
        ps = sorted(a.intersections)
        for p in ps[1:]:
            nest = max(nest, _uncovered(a.intersections[p].bad, a.intersections[p - 1].bad))
        for n, r in a.intervals.items():
            nest = max(nest, _uncovered(a.intersections.get(len(ps), iv.IntervalSet(0)).bad, r.bad)) if ps else nest
        p_top = max(p_top, ps[-1] if ps else 0)
        viol += sum(r["badSampleBound"]["violations"] for r in a.report["n"].values() if r["badSampleBound"])
    tol = 1e-12 * max(1.0, abs(span[1]))
    modes = ",".join(a.report["mode"] for a in analyses)
    return [
        Check("intervals_cover_horizon", cover <= tol, -cover, modes),
        Check("dangerous_within_bad", dang <= tol, -dang, modes),
        Check("intersection_nesting", nest <= tol, -nest, f"p = 1..{p_top}; {modes}"),
        Check("bad_sample_lower_bound", viol == 0, -viol, "theoretical-mode bad samples"),
    ]


def check_checkpoints(run_dir) -> list[Check]:
    div = herm = 0.0
    for _, p in checkpoints(run_dir):
        u = read_checkpoint(p)
        scale = max(float(np.abs(u.coeffs).max()), 1e-300)
        div = max(div, divergence_defect(u))
        herm = max(herm, hermitian_defect(u) / scale)
    return [Check("checkpoint_divergence_free", div < 1e-10, 1e-10 - div),
            Check("checkpoint_hermitian", herm < 1e-12, 1e-12 - herm)]


INVARIANTS = (
    "kappa_ordering", "kappa_nr_ordering", "F_log_convexity", "F_interpolation",
    "energy_balance", "holder_average_bound", "finite_samples", "time_monotone",
    "intervals_cover_horizon", "dangerous_within_bad", "intersection_nesting",
    "bad_sample_lower_bound", "checkpoint_divergence_free", "checkpoint_hermitian",
)


def verify_columns(cols, cfg: SimConfig, run_dir=None, ebal_tol: float = 1e-4) -> list[Check]:
    n_max = dg.n_max_of(cols)
    F = np.array([cols[f"F{i}"] for i in range(n_max + 2)])
    checks = [
        check_finite(cols),
        check_time_monotone(cols),
        check_kappa_ordering(F),
        check_kappa_nr_ordering(F),
        check_log_convexity(F),
        check_interpolation(F),
        check_energy_balance(cols, ebal_tol),
        check_holder(cols, cfg.mu, range(1, min(3, n_max) + 1)),
    ]
    if cols["t"].size >= 2:
        mu = cfg.mu if 0.5 < cfg.mu < 0.6 else 0.55
        ns = range(1, min(3, n_max) + 1)
        analyses = [analyze_columns(cols, cfg, ns, mu, mode) for mode in ("theoretical", "empirical")]
        checks += check_intervals(analyses, cols)
    if run_dir is not None:
        checks += check_checkpoints(run_dir)
    return checks


def verify(run_dir, ebal_tol: float = 1e-4) -> tuple[bool, list[Check]]:
    run_dir = Path(run_dir)
    cfg, h, cols = load_run(run_dir)
    checks = verify_columns(cols, cfg, run_dir, ebal_tol)
    ok = all(c.passed for c in checks)
    _dump(run_dir / "verify.json", {"passed": ok, "checks": [dataclasses.asdict(c) for c in checks]}, h)
    return ok, checks


# --- spectrum ---------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumFit:
    slope: float
    intercept: float
    residual: float
    shells: int


def fit_spectrum(k: np.ndarray, E: np.ndarray, kmin: float, kmax: float) -> SpectrumFit:
    """Least squares of log E on log k over ``kmin <= k <= kmax``."""
    sel = (k >= kmin * (1 - 1e-9)) & (k <= kmax * (1 + 1e-9)) & (E > 0) & (k > 0)
    if sel.sum() < 3:
        raise ValueError(f"need at least 3 populated shells in [{kmin}, {kmax}], got {int(sel.sum())}")
    x, y = np.log(k[sel]), np.log(E[sel])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    rms = math.sqrt(float(res[0]) / x.size) if res.size else 0.0
    return SpectrumFit(float(slope), float(intercept), rms, int(sel.sum()))


def average_spectrum(fields) -> tuple[np.ndarray, np.ndarray]:
    specs = [shell_spectrum(f) for f in fields]
    if not specs:
        raise ValueError("no checkpoints")
    size = min(s.shell_energy.size for s in specs)
    E = np.mean([s.shell_energy[:size] for s in specs], axis=0)
    return specs[0].shell_centers[:size], E


def spectrum(run_dir, kmin: float, kmax: float, burn_in: float | None = None) -> SpectrumFit:
    run_dir = Path(run_dir)
    cfg = SimConfig.from_dict({k: v for k, v in json.loads((run_dir / CONFIG).read_text()).items()
                               if k != "physicsHash"})
    ck = checkpoints(run_dir)
    if not ck:
        raise FileNotFoundError(f"no checkpoints in {run_dir}")
    frac = cfg.burnInFraction if burn_in is None else burn_in
    last = ck[-1][0]
    chosen = [p for s, p in ck if s >= frac * last] or [ck[-1][1]]
    k, E = average_spectrum(read_checkpoint(p) for p in chosen)
    fit = fit_spectrum(k, E, kmin, kmax)
    with open(run_dir / "spectrum.csv", "w") as fh:
        fh.write("k,E\n")
        for a, b in zip(k, E):
            fh.write(f"{a!r},{b!r}\n")
    return fit
