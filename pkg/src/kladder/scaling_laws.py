"""Closed-form exponents and width predictions.

Every generic multiplicative constant defaults to 1; only exponents carry
falsifiable content.  ``omega0 = nu / L**2`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


def _check_delta(delta: float) -> None:
    if not 0.0 <= delta < 1.0 / 6.0:
        raise ValueError(f"delta must lie in [0, 1/6), got {delta}")


def _check_mu(mu: float) -> None:
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")


def lambda_n(n: int, delta: float = 0.0) -> float:
    """Exponent of the long-time bound on ``<L kappa_n>``: ``3 - 5/(2n) + delta/n``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    _check_delta(delta)
    return 3.0 - 5.0 / (2 * n) + delta / n


def a_n(n: int, mu: float, delta: float = 0.0) -> float:
    if n < 2:
        raise ValueError(f"a_n needs n >= 2, got {n}")
    _check_mu(mu)
    return lambda_n(n + 1, delta) / mu * (2 * n - 2) / (2 * n - 1) - (10 * n - 1) / (2 * n - 1)


def a_n_split_form(n: int, mu: float, delta: float = 0.0) -> float:
    """Same exponent written as ``lam/mu (2n-2)/(2n-1) - 4/(2n-1) - 5``."""
    if n < 2:
        raise ValueError(f"a_n needs n >= 2, got {n}")
    _check_mu(mu)
    return lambda_n(n + 1, delta) / mu * (2 * n - 2) / (2 * n - 1) - 4.0 / (2 * n - 1) - 5.0


def b_n(n: int, mu: float, lam: float) -> float:
    """Dangerous sub-interval exponent ``lam/mu - 4``.

    ``lam`` is ``lambda_{n+1}`` or an intersection exponent ``Lambda_{n+1}^(p)``.
    """
    if not lam > 0:
        raise ValueError(f"exponent input must be positive, got {lam}")
    _check_mu(mu)
    return lam / mu - 4.0


def gamma_n(n: int, mu: float, delta: float = 0.0) -> float:
    """Good-interval ceiling exponent ``4n[lam_n (n+1) + 2] / (2 mu (n+1) - 1)``."""
    if not 2.0 * mu * (n + 1) > 1.0:
        raise ValueError(f"need mu > 1/(2(n+1)) = {1 / (2 * (n + 1)):.6g}, got mu={mu}")
    return 4 * n * (lambda_n(n, delta) * (n + 1) + 2) / (2 * mu * (n + 1) - 1)


@dataclass(frozen=True)
class MuWindow:
    lower: float
    upper: float
    asymptotic: tuple
    good_lower: float  # 1/(2(n+1))
    power_boundary: float  # a_n = 1 at this mu

    @property
    def nonempty(self) -> bool:
        return self.lower < self.upper

    @property
    def width_lower_exceeds_good_lower(self) -> bool:
        return self.power_boundary > self.good_lower


def mu_window(n: int, delta: float = 0.0) -> MuWindow:
    """Range of mu allowed by the good-interval and bad-width conditions at finite n."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    lam = lambda_n(n + 1, delta)
    good = 1.0 / (2 * (n + 1))
    power = lam * (n - 1) / (6 * n - 1)
    upper = lam * (2 * n - 2) / (10 * n - 1)
    return MuWindow(max(good, power), upper, (0.5, 0.6), good, power)


def xi(p: int, mu: float) -> tuple[list[float], float]:
    """Weights ``(1+mu)^(p-i)`` for i = 0..p and their closed-form sum."""
    if p < 0:
        raise ValueError("p must be >= 0")
    _check_mu(mu)
    terms = [(1.0 + mu) ** (p - i) for i in range(p + 1)]
    closed = ((1.0 + mu) ** (p + 1) - 1.0) / mu
    return terms, closed


def weighted_lambda_sum(n: int, p: int, mu: float, delta: float = 0.0) -> float:
    terms, _ = xi(p, mu)
    return math.fsum(lambda_n(n + i, delta) * w for i, w in enumerate(terms))


def capital_lambda(n: int, p: int, mu: float, delta: float = 0.0) -> float:
    """Lower-bound exponent on the p-fold intersection of bad sets.

    ``(lambda_{n+p+1} + mu * sum_i lambda_{n+i} (1+mu)^(p-i)) / (1+mu)^(p+1)``.
    """
    return (lambda_n(n + p + 1, delta) + mu * weighted_lambda_sum(n, p, mu, delta)) / (1.0 + mu) ** (p + 1)


def capital_lambda_prefactor(n: int, p: int, mu: float, c=None) -> float:
    """Constant multiplying ``Re^Lambda``; 1 when every c is 1."""
    if c is None:
        return 1.0
    const = lambda i: float(c.get(i, 1.0)) if hasattr(c, "get") else float(c[i])
    terms, _ = xi(p, mu)
    prod = math.prod(const(n + i) ** w for i, w in enumerate(terms))
    return (const(n + p + 1) * prod ** mu) ** (1.0 / (1.0 + mu) ** (p + 1))


def e_weight(dt: float, omega0: float, Re: float) -> float:
    """``(exp(omega0 Re dt) - 1) / (omega0 Re)``."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    x = omega0 * Re * dt
    if x < 1e-8:
        return dt * (1.0 + 0.5 * x + x * x / 6.0)
    return math.expm1(x) / (omega0 * Re)


def solve_width(beta: float, omega0: float, Re: float) -> tuple[float, float]:
    """Largest dt with ``e_weight(dt) <= Re^-beta / omega0``, and its leading order."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not Re > 1:
        raise ValueError("Re must exceed 1")
    exact = math.log1p(Re ** (1.0 - beta)) / (omega0 * Re)
    if beta >= 1.0:
        leading = Re ** (-beta) / omega0
    else:
        leading = (1.0 - beta) * math.log(Re) / (Re * omega0)
    return exact, leading


@dataclass(frozen=True)
class ScalingParams:
    n: int
    mu: float
    Re: float
    L: float
    nu: float
    delta: float = 0.0
    c: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_delta(self.delta)
        _check_mu(self.mu)
        if not self.nu > 0 or not self.L > 0:
            raise ValueError("nu and L must be positive")

    @property
    def omega0(self) -> float:
        return self.nu / self.L ** 2

    def c_n(self, n: int | None = None) -> float:
        return float(self.c.get(self.n if n is None else n, 1.0))


def predicted_widths(params: ScalingParams, lam_sub: float | None = None) -> tuple[float, float, str]:
    """(bad-interval width, dangerous sub-interval width, regime)."""
    n, mu, Re = params.n, params.mu, params.Re
    if n < 2:
        raise ValueError("width predictions need n >= 2")
    an = a_n(n, mu, params.delta)
    if an <= 0:
        w = mu_window(n, params.delta)
        raise ValueError(f"a_{n} = {an:.6g} <= 0: mu={mu} violates mu < {w.upper:.6g}")
    if an >= 1:
        bad, regime = Re ** (-an) / params.omega0, "power"
    else:
        bad, regime = math.log(Re) / Re / params.omega0, "log"
    lam = lambda_n(n + 1, params.delta) if lam_sub is None else lam_sub
    sub = Re ** (-b_n(n, mu, lam)) / params.omega0
    return bad, sub, regime


def predicted_ratio(n: int, mu: float, Re: float, delta: float = 0.0, c_n: float = 1.0) -> float:
    """Lower bound on mean good width over mean bad width."""
    return c_n * Re ** (lambda_n(n, delta) * (1.0 / mu - 1.0))


def fnmax_bound(n: int, mu: float, delta: float, Re: float, L: float, F0max: float) -> float:
    """Good-interval ceiling ``L^-2n Re^gamma_n F0max``; inf on overflow."""
    g = gamma_n(n, mu, delta)
    if F0max == 0:
        return 0.0
    try:
        return L ** (-2 * n) * Re ** g * F0max
    except OverflowError:
        return math.inf


def bad_floor(n: int, mu: float, delta: float, Re: float, L: float, F0min: float, c_n: float = 1.0) -> float:
    """Bad-interval floor ``c_n^(1/mu) L^-2n Re^(2n lam_n / mu) F0min``; inf on overflow."""
    e = 2 * n * lambda_n(n, delta) / mu
    if F0min == 0:
        return 0.0
    try:
        return c_n ** (1.0 / mu) * L ** (-2 * n) * Re ** e * F0min
    except OverflowError:
        return math.inf


def ceiling_floor_exponent(n: int, mu: float, delta: float = 0.0) -> float:
    """Re exponent of ceiling/floor: ``2n(lam_n + 4 mu) / (mu [2 mu (n+1) - 1])``."""
    lam = lambda_n(n, delta)
    return 2 * n * (lam + 4 * mu) / (mu * (2 * mu * (n + 1) - 1))


@dataclass
class ScalingReport:
    n: int
    mu: float
    delta: float
    Re: float
    values: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def put(self, name: str, value, note: str) -> None:
        self.values[name] = value
        self.provenance[name] = note

    def to_dict(self) -> dict:
        return asdict(self)


_CONST = "generic constants set to 1"


def scaling_report(params: ScalingParams, p_max: int = 3) -> ScalingReport:
    """Evaluate every exponent and prediction available for ``params``."""
    n, mu, d, Re = params.n, params.mu, params.delta, params.Re
    rep = ScalingReport(n, mu, d, Re)
    rep.put("lambda_n", lambda_n(n, d), "moment-bound exponent 3 - 5/(2n) + delta/n")
    rep.put("lambda_n+1", lambda_n(n + 1, d), "moment-bound exponent at n+1")
    rep.put("predictedRatio", predicted_ratio(n, mu, Re, d, params.c_n()),
            f"mean good/bad width lower bound c_n Re^(lambda_n (1/mu - 1)); {_CONST}")
    lam_p = {}
    for p in range(p_max + 1):
        lam_p[p] = capital_lambda(n, p, mu, d)
    rep.put("Lambda_p", lam_p, "intersection exponent (lambda_{n+p+1} + mu L_{n,p}) / (1+mu)^(p+1)")
    rep.put("xi_p", {p: xi(p, mu)[1] for p in range(p_max + 1)}, "((1+mu)^(p+1) - 1) / mu")
    if 2 * mu * (n + 1) > 1:
        rep.put("gamma_n", gamma_n(n, mu, d), "good-interval ceiling exponent 4n[lam_n(n+1)+2]/(2mu(n+1)-1)")
        rep.put("ceilingFloorExponent", ceiling_floor_exponent(n, mu, d),
                "Re exponent of ceiling/floor 2n(lam_n+4mu)/(mu[2mu(n+1)-1])")
    else:
        rep.put("gamma_n", None, "undefined: mu <= 1/(2(n+1))")
    if n >= 2:
        an = a_n(n, mu, d)
        bn = b_n(n, mu, lambda_n(n + 1, d))
        rep.put("a_n", an, "bad-width exponent lam_{n+1}/mu (2n-2)/(2n-1) - (10n-1)/(2n-1)")
        rep.put("b_n", bn, "sub-interval exponent lam_{n+1}/mu - 4")
        w = mu_window(n, d)
        rep.put("muWindow", {"lower": w.lower, "upper": w.upper, "asymptotic": list(w.asymptotic)},
                "finite-n mu range from good-interval and bad-width conditions; asymptotic (1/2, 3/5)")
        if an > 0:
            bad, sub, regime = predicted_widths(params)
            rep.put("predictedBadWidth", bad, f"omega0 dt_b <= Re^-a_n (a_n >= 1) or Re^-1 ln Re; regime {regime}; {_CONST}")
            rep.put("predictedSubWidth", sub, f"omega0 dt_+ <= Re^-b_n; {_CONST}")
        else:
            rep.put("predictedBadWidth", None, f"a_n = {an:.4g} <= 0: mu outside the bad-width window")
            rep.put("predictedSubWidth", Re ** (-bn) / params.omega0, f"omega0 dt_+ <= Re^-b_n; {_CONST}")
    return rep
