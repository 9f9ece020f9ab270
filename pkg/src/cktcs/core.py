"""Parameters, regime classification and regime-free trigonometric kernels.

The Caldirola-Kanai oscillator has three qualitatively different regimes
depending on the sign of ``omega_sq = omega0**2 - gamma**2 / 4``.  All of the
closed forms in this package are written in terms of two entire functions of
``omega_sq``::

    C(t) = cos(w t)        S(t) = sin(w t) / w          (omega_sq > 0)
    C(t) = cosh(|w| t)     S(t) = sinh(|w| t) / |w|     (omega_sq < 0)
    C(t) = 1               S(t) = t                     (omega_sq = 0)

so that one code path serves every regime.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "CRITICAL_TOL",
    "BranchError",
    "FocalPointError",
    "OscParams",
    "ParameterError",
    "Regime",
    "branch_continued_inv_sqrt",
    "classify_regime",
    "continued_log",
    "kernel_C",
    "kernel_S",
    "kernels",
    "make_params",
]

CRITICAL_TOL = 1e-12

# Taylor fallback below this value of |omega_sq| * t**2.
_SERIES_THRESHOLD = 1e-6
_SERIES_TERMS = 4


class ParameterError(ValueError):
    """Invalid physical or initial data."""


class FocalPointError(ArithmeticError):
    """z(t) vanished; the prefactor z**(-1/2) is singular there."""


class BranchError(ArithmeticError):
    """A sampled path is too coarse to follow the logarithm continuously."""


class Regime(enum.Enum):
    UNDERDAMPED = "underdamped"
    OVERDAMPED = "overdamped"
    CRITICAL = "critical"


@dataclass(frozen=True)
class OscParams:
    """Physical and initial data of a damped oscillator run.

    Use :func:`make_params` to build instances; it validates the fields.

    Attributes
    ----------
    m, gamma, omega0, hbar : float
        Mass, damping rate, undamped frequency and action quantum.
    b : complex
        Initial value of the momentum-like variation ``w(0)``; ``Im b > 0``.
    x0, p0 : float
        Initial position and canonical momentum.
    omega_sq : float
        ``omega0**2 - gamma**2 / 4`` (derived).
    omega : float
        ``sqrt(|omega_sq|)`` (derived).
    regime : Regime
        Regime at the default tolerance (derived).
    theta, mu : float or None
        ``gamma / (2|omega|)`` and ``Im b / (m |omega|)``; ``None`` in the
        critical regime.
    """

    m: float
    gamma: float
    omega0: float
    hbar: float
    b: complex
    x0: float
    p0: float
    omega_sq: float = field(init=False)
    omega: float = field(init=False)
    regime: Regime = field(init=False)
    theta: Optional[float] = field(init=False)
    mu: Optional[float] = field(init=False)

    def __post_init__(self):
        omega_sq = self.omega0 ** 2 - 0.25 * self.gamma ** 2
        omega = math.sqrt(abs(omega_sq))
        regime = _classify(omega_sq, self.omega0, CRITICAL_TOL)
        if regime is Regime.CRITICAL or omega == 0.0:
            theta = mu = None
        else:
            theta = self.gamma / (2.0 * omega)
            mu = self.b.imag / (self.m * omega)
        object.__setattr__(self, "omega_sq", omega_sq)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "regime", regime)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "mu", mu)

    @property
    def b_im(self) -> float:
        return self.b.imag

    def replace(self, **changes) -> "OscParams":
        fields = dict(m=self.m, gamma=self.gamma, omega0=self.omega0,
                      hbar=self.hbar, b=self.b, x0=self.x0, p0=self.p0)
        fields.update(changes)
        return make_params(**fields)

    def as_dict(self) -> dict:
        return dict(m=self.m, gamma=self.gamma, omega0=self.omega0,
                    hbar=self.hbar, b_re=self.b.real, b_im=self.b.imag,
                    x0=self.x0, p0=self.p0)


def make_params(m, gamma, omega0, hbar, b, x0, p0) -> OscParams:
    """Validate raw numbers and return an :class:`OscParams`.

    Raises
    ------
    ParameterError
        If any input is non-finite, ``m <= 0``, ``hbar <= 0``,
        ``gamma < 0`` or ``Im b <= 0``.
    """
    b = complex(b)
    reals = dict(m=m, gamma=gamma, omega0=omega0, hbar=hbar, x0=x0, p0=p0)
    for name, value in reals.items():
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ParameterError(f"{name} must be a real number, got {value!r}")
        if not math.isfinite(value):
            raise ParameterError(f"{name} must be finite, got {value!r}")
        reals[name] = value
    if not cmath.isfinite(b):
        raise ParameterError(f"b must be finite, got {b!r}")
    if reals["m"] <= 0:
        raise ParameterError(f"mass must be positive, got m={reals['m']!r}")
    if reals["hbar"] <= 0:
        raise ParameterError(f"hbar must be positive, got hbar={reals['hbar']!r}")
    if reals["gamma"] < 0:
        raise ParameterError(f"damping rate must be non-negative, got gamma={reals['gamma']!r}")
    if not b.imag > 0:
        raise ParameterError(f"Im b must be positive, got b={b!r}")
    return OscParams(b=b, **reals)


def _classify(omega_sq, omega0, tol):
    scale = tol * omega0 ** 2
    if omega_sq > scale:
        return Regime.UNDERDAMPED
    if omega_sq < -scale:
        return Regime.OVERDAMPED
    return Regime.CRITICAL


def classify_regime(params: OscParams, tol: float = CRITICAL_TOL) -> Regime:
    """Underdamped if ``omega_sq > tol*omega0**2``, overdamped if below
    ``-tol*omega0**2``, critical otherwise."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return _classify(params.omega_sq, params.omega0, tol)


def kernels(omega_sq, t):
    """Return ``(C, S)`` evaluated at ``t`` (scalar or array).

    ``C`` and ``S`` solve ``f'' = -omega_sq * f`` with ``C(0) = 1, C'(0) = 0``
    and ``S(0) = 0, S'(0) = 1``.  Near ``omega_sq * t**2 = 0`` a truncated
    power series is used, which keeps both continuous across the critical
    point.
    """
    t_arr = np.asarray(t, dtype=float)
    x = omega_sq * t_arr * t_arr
    small = np.abs(x) < _SERIES_THRESHOLD
    w = math.sqrt(abs(omega_sq))

    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        if omega_sq > 0:
            C = np.cos(w * t_arr)
            S = np.sin(w * t_arr) / w
        elif omega_sq < 0:
            C = np.cosh(w * t_arr)
            S = np.sinh(w * t_arr) / w
        else:
            C = np.ones_like(t_arr)
            S = t_arr.copy()

    if np.any(small):
        # sum_k (-x)^k / (2k)!  and  t * sum_k (-x)^k / (2k+1)!
        cs = np.zeros_like(x)
        ss = np.zeros_like(x)
        term_c = np.ones_like(x)
        term_s = np.ones_like(x)
        for k in range(_SERIES_TERMS):
            cs = cs + term_c
            ss = ss + term_s
            term_c = term_c * (-x) / ((2 * k + 1) * (2 * k + 2))
            term_s = term_s * (-x) / ((2 * k + 2) * (2 * k + 3))
        C = np.where(small, cs, C)
        S = np.where(small, ss * t_arr, S)

    if np.ndim(t) == 0:
        return float(C), float(S)
    return C, S


def kernel_C(omega_sq, t):
    return kernels(omega_sq, t)[0]


def kernel_S(omega_sq, t):
    return kernels(omega_sq, t)[1]


def continued_log(z_path):
    """Continuous logarithm along ``z_path`` starting from ``log z_path[0] = 0``.

    Returns an array of the same length.  Raises :class:`FocalPointError` if a
    sample is zero and :class:`BranchError` if consecutive samples differ in
    argument by ``pi/2`` or more.
    """
    z = np.asarray(z_path, dtype=complex).ravel()
    if z.size == 0:
        raise ValueError("empty path")
    if np.any(z == 0) or np.any(np.abs(z) < 1e-300):
        raise FocalPointError("path passes through z = 0 (focal point)")
    if abs(z[0] - 1.0) > 1e-12:
        raise ValueError(f"path must start at z = 1, got {z[0]!r}")
    if z.size == 1:
        return np.zeros(1, dtype=complex)
    steps = np.log(z[1:] / z[:-1])
    jump = np.abs(steps.imag)
    if np.any(jump >= 0.5 * math.pi):
        k = int(np.argmax(jump))
        raise BranchError(
            f"argument jump {jump[k]:.3f} >= pi/2 between samples {k} and {k + 1}; "
            "refine the path"
        )
    out = np.empty(z.size, dtype=complex)
    out[0] = np.log(z[0])
    out[1:] = out[0] + np.cumsum(steps)
    return out


def branch_continued_inv_sqrt(z_path) -> complex:
    """``z**(-1/2)`` at the last sample of ``z_path``, on the sheet reached by
    continuous continuation from ``z = 1``."""
    return complex(np.exp(-0.5 * continued_log(z_path)[-1]))
