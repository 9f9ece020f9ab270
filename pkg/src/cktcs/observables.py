"""Closed-form averages, variances and uncertainty products.

Three independent routes to the same numbers are kept side by side:

* ``|z|^2, |w|^2`` forms (valid for any ``b``),
* explicit ``theta, mu`` forms (``Re b = 0``, underdamped or overdamped),
* ``(1 + g)`` product forms.

Tests compare them against each other; nothing here picks one silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import OscParams, Regime
from .dynamics import trajectory, variational

__all__ = [
    "MinimizationResult",
    "NoSolutionError",
    "ObservableSet",
    "PreconditionError",
    "UncertaintyReport",
    "UnsupportedRegimeError",
    "expectations_cs",
    "expectations_tcs",
    "g_from_wz",
    "g_function",
    "g_overdamped",
    "g_underdamped",
    "minimization_times",
    "solve_mu_for_time",
    "uncertainty_products",
    "variance_closed_theta_mu",
]


class PreconditionError(ValueError):
    pass


class UnsupportedRegimeError(ValueError):
    pass


class NoSolutionError(ValueError):
    pass


@dataclass(frozen=True)
class ObservableSet:
    t: float
    mean_x: float
    mean_p: float
    mean_x2: float
    mean_p2: float
    var_x: float
    var_p: float
    mean_E: float
    product: float


@dataclass(frozen=True)
class UncertaintyReport:
    t: float
    n: int
    regime: Regime
    theta: Optional[float]
    mu: Optional[float]
    g_value: Optional[float]
    product_tcs: float
    product_cs: float
    hbar: float = 1.0

    @property
    def route_gap(self) -> Optional[float]:
        """Relative gap between the ``|wz|^2`` and ``(1 + g)`` forms of the CS product."""
        if self.g_value is None:
            return None
        alt = 0.25 * self.hbar ** 2 * (1.0 + self.g_value)
        return abs(self.product_cs - alt) / abs(self.product_cs)


@dataclass(frozen=True)
class MinimizationResult:
    times: tuple
    status: str = "ok"

    def __iter__(self):
        return iter(self.times)

    def __len__(self):
        return len(self.times)


def _classical(params, t):
    x, p = trajectory(params, t)
    w, z, _ = variational(params, t)
    return x, p, w, z


def _energy(params, t, p, x):
    return math.exp(-2 * params.gamma * t) * p * p / (2 * params.m) + 0.5 * params.m * params.omega0 ** 2 * x * x


def _width_energy(params, t, w, z):
    return (math.exp(-2 * params.gamma * t) * abs(w) ** 2 / (2 * params.m)
            + 0.5 * params.m * params.omega0 ** 2 * abs(z) ** 2)


def expectations_tcs(params: OscParams, n: int, t: float) -> ObservableSet:
    """Averages in the number state ``|n>`` at time ``t``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    t = float(t)
    x, p, w, z = _classical(params, t)
    k = params.hbar / params.b.imag * (n + 0.5)
    var_x = k * abs(z) ** 2
    var_p = k * abs(w) ** 2
    mean_E = _energy(params, t, p, x) + k * _width_energy(params, t, w, z)
    return ObservableSet(t, x, p, x * x + var_x, p * p + var_p, var_x, var_p, mean_E, var_x * var_p)


def expectations_cs(params: OscParams, alpha, t: float) -> ObservableSet:
    """Averages in the coherent state ``|alpha>`` at time ``t``."""
    alpha = complex(alpha)
    t = float(t)
    x, p, w, z = _classical(params, t)
    pref = math.sqrt(params.hbar / (2 * params.b.imag))
    ac = alpha.conjugate()
    mean_x = (x - 1j * pref * (ac * z - alpha * z.conjugate())).real
    mean_p = (p - 1j * pref * (ac * w - alpha * w.conjugate())).real
    k = params.hbar / (2 * params.b.imag)
    var_x = k * abs(z) ** 2
    var_p = k * abs(w) ** 2
    mean_E = _energy(params, t, mean_p, mean_x) + k * _width_energy(params, t, w, z)
    return ObservableSet(t, mean_x, mean_p, mean_x ** 2 + var_x, mean_p ** 2 + var_p,
                         var_x, var_p, mean_E, var_x * var_p)


def _require_theta_mu(params):
    if params.b.real != 0:
        raise PreconditionError(
            "theta/mu forms assume Re b = 0 (uncertainty minimal at t = 0); "
            f"got Re b = {params.b.real!r}"
        )
    if params.regime is Regime.CRITICAL:
        raise UnsupportedRegimeError("theta/mu forms are undefined at critical damping (omega = 0)")


def variance_closed_theta_mu(params: OscParams, t, n: Optional[int] = None):
    """``(var_x, var_p)`` from the explicit ``theta, mu`` formulas.

    ``n`` selects the number state ``|n>``; ``n=None`` means a coherent state.
    """
    _require_theta_mu(params)
    th, mu, om = params.theta, params.mu, params.omega
    m, g, hbar = params.m, params.gamma, params.hbar
    t = np.asarray(t, dtype=float)
    level = 0.5 * hbar if n is None else hbar * (n + 0.5)
    if params.regime is Regime.UNDERDAMPED:
        s2 = np.sin(om * t) ** 2
        d = np.sin(2 * om * t)
        bx = 1 + s2 * (th ** 2 + mu ** 2 - 1) + th * d
        bp = 1 + s2 * (2 * th ** 2 + th ** 4 + 1 + mu ** 2 * th ** 2 - mu ** 2) / mu ** 2 - th * d
    else:
        s2 = np.sinh(om * t) ** 2
        d = np.sinh(2 * om * t)
        bx = 1 + s2 * (th ** 2 + mu ** 2 + 1) + th * d
        bp = 1 + s2 * (1 - 2 * th ** 2 + th ** 4 + mu ** 2 * th ** 2 + mu ** 2) / mu ** 2 - th * d
    var_x = level * np.exp(-g * t) / (mu * m * om) * bx
    var_p = level * np.exp(g * t) * mu * m * om * bp
    if np.ndim(t) == 0:
        return float(var_x), float(var_p)
    return var_x, var_p


def _brace_under(theta, mu, omega, t):
    wt = omega * t
    return (theta / mu * (theta ** 2 + mu ** 2 + 1) * np.sin(wt) ** 2
            + (theta ** 2 - mu ** 2 + 1) / (2 * mu) * np.sin(2 * wt))


def _brace_over(theta, mu, omega, t):
    wt = omega * t
    return (theta / mu * (theta ** 2 + mu ** 2 - 1) * np.sinh(wt) ** 2
            + (theta ** 2 - mu ** 2 - 1) / (2 * mu) * np.sinh(2 * wt))


def g_underdamped(theta, mu, omega, t):
    """Excess factor for ``omega_sq > 0``.  Accepts complex arguments."""
    return _brace_under(theta, mu, omega, t) ** 2


def g_overdamped(theta, mu, omega, t):
    """Excess factor for ``omega_sq < 0`` (``omega`` is ``|omega|``)."""
    return _brace_over(theta, mu, omega, t) ** 2


def g_function(theta, mu, omega, t, regime: Regime):
    """Uncertainty excess ``g(t)`` with ``product = minimum * (1 + g)``."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if regime is Regime.UNDERDAMPED:
        return g_underdamped(theta, mu, omega, t)
    if regime is Regime.OVERDAMPED:
        return g_overdamped(theta, mu, omega, t)
    raise UnsupportedRegimeError("g(t) is undefined at critical damping")


def g_from_wz(params: OscParams, t):
    """``g = (Re(z* w) / Im b)^2``, i.e. ``|wz|^2/(Im b)^2 - 1`` without the cancellation."""
    w, z, _ = variational(params, t)
    return (np.real(np.conj(z) * w) / params.b.imag) ** 2


def uncertainty_products(params: OscParams, n: int, t: float) -> UncertaintyReport:
    """Heisenberg products for ``|n>`` and for coherent states at time ``t``.

    ``g_value`` is filled in only when ``Re b = 0`` and the regime is not
    critical, which is where the explicit ``g`` formulas apply.
    """
    t = float(t)
    w, z, _ = variational(params, t)
    ratio = (abs(w * z) / params.b.imag) ** 2
    hbar2 = params.hbar ** 2
    g_value = None
    if params.b.real == 0 and params.regime is not Regime.CRITICAL:
        g_value = float(g_function(params.theta, params.mu, params.omega, t, params.regime))
    return UncertaintyReport(
        t=t, n=n, regime=params.regime, theta=params.theta, mu=params.mu, g_value=g_value,
        product_tcs=hbar2 * (n + 0.5) ** 2 * ratio,
        product_cs=0.25 * hbar2 * ratio,
        hbar=params.hbar,
    )


def minimization_times(theta, mu, omega, regime: Regime, k_max: int = 2) -> MinimizationResult:
    """Instants where ``g(t) = 0``.

    Underdamped: ``pi k / omega`` and ``arctan(...) / omega + pi k / omega`` for
    ``k = 0..k_max``, negative values dropped.  Overdamped: ``0`` and, when it
    exists and is positive, ``arctanh(...) / omega``.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if not omega > 0:
        raise UnsupportedRegimeError("need omega > 0")
    if regime is Regime.UNDERDAMPED:
        t1 = [math.pi * k / omega for k in range(k_max + 1)]
        if theta == 0 and mu == 1:
            return MinimizationResult(tuple(t1), "degenerate: theta = 0 and mu = 1 give g = 0 for all t")
        # den >= 0 for theta >= 0, so atan2 agrees with arctan(num/den) and
        # returns +-pi/2 when theta = 0
        num = mu ** 2 - theta ** 2 - 1
        den = theta * (mu ** 2 + theta ** 2 + 1)
        base = math.atan2(num, den) / omega
        t2 = [base + math.pi * k / omega for k in range(k_max + 1)]
        times = sorted(set(t1) | {t for t in t2 if t >= 0})
        status = "ok" if theta != 0 else "theta = 0: second family at odd multiples of pi/(2 omega)"
        return MinimizationResult(tuple(times), status)
    if regime is Regime.OVERDAMPED:
        den = theta * (mu ** 2 + theta ** 2 - 1)
        num = mu ** 2 - theta ** 2 + 1
        if den == 0:
            return MinimizationResult((0.0,), "no second zero: arctanh argument undefined")
        arg = num / den
        if not -1 < arg < 1:
            return MinimizationResult((0.0,), f"no second zero: arctanh argument {arg:.6g} outside (-1, 1)")
        t02 = math.atanh(arg) / omega
        if t02 <= 0:
            return MinimizationResult((0.0,), f"no second zero at t > 0 (t02 = {t02:.6g})")
        return MinimizationResult((0.0, t02))
    raise UnsupportedRegimeError("minimization instants are undefined at critical damping")


def solve_mu_for_time(theta, omega, t, regime: Regime) -> float:
    """``mu > 0`` for which ``g`` vanishes at time ``t``.

    Underdamped: ``mu^2 = (theta^2+1)(1 + theta tan wt)/(1 - theta tan wt)``,
    requiring ``|theta tan wt| < 1``.  Overdamped:
    ``mu^2 = (theta^2-1)(1 + theta tanh wt)/(1 - theta tanh wt)``, requiring
    ``|theta tanh wt| < 1`` for ``theta > 1`` and ``> 1`` for ``theta < 1``.

    Raises
    ------
    NoSolutionError
        When the relevant condition fails.
    """
    wt = omega * t
    if regime is Regime.UNDERDAMPED:
        c = math.cos(wt)
        q = math.inf if c == 0 else abs(theta * math.tan(wt))
        if not q < 1:
            raise NoSolutionError(
                f"underdamped solvability condition violated: |theta tan(omega t)| = {q:.6g} >= 1"
            )
        tau = math.tan(wt)
        return math.sqrt((theta ** 2 + 1) * (1 + theta * tau) / (1 - theta * tau))
    if regime is Regime.OVERDAMPED:
        tau = math.tanh(wt)
        q = abs(theta * tau)
        if theta > 1 and not q < 1:
            raise NoSolutionError(f"overdamped solvability condition violated: theta > 1 needs |theta tanh(omega t)| < 1, got {q:.6g}")
        if theta < 1 and not q > 1:
            raise NoSolutionError(f"overdamped solvability condition violated: theta < 1 needs |theta tanh(omega t)| > 1, got {q:.6g}")
        mu2 = (theta ** 2 - 1) * (1 + theta * tau) / (1 - theta * tau)
        if not mu2 > 0:
            raise NoSolutionError(f"overdamped solvability condition violated: no positive mu (mu^2 = {mu2:.6g})")
        return math.sqrt(mu2)
    raise UnsupportedRegimeError("mu cannot be solved for at critical damping")
