"""Trajectory-coherent states as polynomial-times-Gaussian values.

Every state handled here has the form::

    psi(x, t) = P(u) * N * z(t)**(-1/2) * exp(i S(x, t) / hbar),   u = x - x(t)
    S(x, t)   = sigma(t) + p(t) u + w(t) / (2 z(t)) u**2

with a complex polynomial ``P``.  Ladder operators act on ``P`` exactly, and
inner products reduce to Gaussian moments, so the algebra of the number
states holds coefficient by coefficient rather than up to quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import special

from .core import OscParams
from .dynamics import PhaseState, phase_state

__all__ = [
    "MAX_DEGREE",
    "Grid",
    "PolyGaussian",
    "StateSpec",
    "TruncationError",
    "apply_lowering",
    "apply_raising",
    "build_state",
    "coherent_tail",
    "coherent_tcs",
    "default_grid",
    "evaluate",
    "evaluate_gradient",
    "evaluate_grid",
    "fock_tcs",
    "ground_tcs",
    "inner_product",
    "moments",
    "norm",
]

MAX_DEGREE = 64


class TruncationError(ValueError):
    """Truncated Fock expansion would exceed its tail tolerance."""


@dataclass(frozen=True)
class PolyGaussian:
    """``P(u)`` times the ground trajectory-coherent envelope at one instant.

    Attributes
    ----------
    params : OscParams
    phase_state : PhaseState
        Classical data at the state's time.
    coeffs : ndarray of complex
        Coefficients of ``P`` in ascending powers of ``u = x - x(t)``.
    tail : float
        Probability weight dropped by truncation (coherent states), else 0.
    """

    params: OscParams
    phase_state: PhaseState
    coeffs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def t(self) -> float:
        return self.phase_state.t

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else -1

    @property
    def norm_const(self) -> float:
        return (self.params.b.imag / (math.pi * self.params.hbar)) ** 0.25

    def with_coeffs(self, coeffs, tail=None) -> "PolyGaussian":
        return PolyGaussian(self.params, self.phase_state, coeffs,
                            self.tail if tail is None else tail)

    def _check_compatible(self, other):
        if not isinstance(other, PolyGaussian):
            return NotImplemented
        if other.params != self.params or other.phase_state != self.phase_state:
            raise ValueError("states belong to different parameters or times")
        return True

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return self.with_coeffs(npoly.polyadd(self.coeffs, other.coeffs), self.tail + other.tail)

    def __sub__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return self.with_coeffs(npoly.polysub(self.coeffs, other.coeffs), self.tail + other.tail)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self.with_coeffs(self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1


@dataclass(frozen=True)
class Grid:
    center: float
    half_width: float
    n_points: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if int(self.n_points) < 2:
            raise ValueError("n_points must be >= 2")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.center - self.half_width,
                           self.center + self.half_width, int(self.n_points))


@dataclass(frozen=True)
class StateSpec:
    """Which state to build: ``fock`` with ``n`` or ``coherent`` with ``alpha``."""

    kind: str = "fock"
    n: int = 0
    alpha: complex = 0j
    n_max: int = 40

    def __post_init__(self):
        if self.kind not in ("fock", "coherent"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.kind == "fock" and not 0 <= int(self.n) <= MAX_DEGREE:
            raise ValueError(f"fock level must be in [0, {MAX_DEGREE}]")

    @classmethod
    def parse(cls, text: str) -> "StateSpec":
        """Parse ``fock:N`` or ``coherent:RE,IM``."""
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind == "fock":
            return cls("fock", n=int(arg or 0))
        if kind == "coherent":
            parts = [float(s) for s in arg.split(",")] if arg else [0.0]
            if len(parts) == 1:
                parts.append(0.0)
            if len(parts) != 2:
                raise ValueError(f"coherent state needs RE,IM; got {arg!r}")
            return cls("coherent", alpha=complex(parts[0], parts[1]))
        raise ValueError(f"state must be fock:N or coherent:RE,IM, got {text!r}")

    def __str__(self):
        if self.kind == "fock":
            return f"fock:{self.n}"
        return f"coherent:{self.alpha.real!r},{self.alpha.imag!r}"


def _ladder_factor(params):
    return 1.0 / math.sqrt(2.0 * params.hbar * params.b.imag)


def _trim(c):
    c = np.asarray(c, dtype=complex)
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)


def ground_tcs(params: OscParams, t: float, phase: PhaseState = None) -> PolyGaussian:
    """The ground trajectory-coherent state ``|0>`` at time ``t``."""
    if phase is None:
        phase = phase_state(params, t)
    return PolyGaussian(params, phase, [1.0])


def apply_lowering(state: PolyGaussian) -> PolyGaussian:
    """Annihilation operator: ``P -> -i hbar c z P'``."""
    ps = state.phase_state
    c = _ladder_factor(state.params)
    d = npoly.polyder(state.coeffs) if state.coeffs.size > 1 else np.zeros(1)
    return state.with_coeffs(_trim(-1j * state.params.hbar * c * ps.z * d))


def apply_raising(state: PolyGaussian, conserved: bool = True) -> PolyGaussian:
    """Creation operator: ``P -> c (-i hbar z* P' + K / z * u P)``.

    ``K = z* w - w* z``, which equals ``2i Im b`` along the exact flow.  With
    ``conserved=True`` (default) that exact value is used; with ``False`` it is
    recomputed from the phase state, so an inconsistent ``(w, z)`` pair shows
    up as a broken commutator.  The recomputed value carries a rounding error
    of order ``eps |w| |z|``, which is large for overdamped runs at late times.
    """
    ps = state.phase_state
    if state.degree + 1 > MAX_DEGREE:
        raise ValueError(f"polynomial degree capped at {MAX_DEGREE}")
    c = _ladder_factor(state.params)
    if conserved:
        k = 2j * state.params.b.imag
    else:
        k = ps.z.conjugate() * ps.w - ps.w.conjugate() * ps.z
    d = npoly.polyder(state.coeffs) if state.coeffs.size > 1 else np.zeros(1)
    up = np.concatenate([[0.0], state.coeffs])
    new = npoly.polyadd(-1j * state.params.hbar * ps.z.conjugate() * d, (k / ps.z) * up)
    return state.with_coeffs(_trim(c * new))


def fock_tcs(params: OscParams, n: int, t: float, phase: PhaseState = None) -> PolyGaussian:
    """Number state ``|n> = (n!)**(-1/2) (a+)**n |0>``, ``0 <= n <= 64``."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > MAX_DEGREE:
        raise ValueError(f"n={n} exceeds the degree cap {MAX_DEGREE}")
    state = ground_tcs(params, t, phase)
    for k in range(n):
        state = apply_raising(state) * (1.0 / math.sqrt(k + 1))
    return state


def coherent_tail(alpha, n_max: int) -> float:
    """``exp(-|alpha|^2) * sum_{n > n_max} |alpha|^(2n) / n!``."""
    lam = abs(alpha) ** 2
    if lam == 0:
        return 0.0
    return float(special.gammainc(n_max + 1, lam))


def coherent_tcs(params: OscParams, alpha, t: float, n_max: int = 40,
                 tail_tol: float = 1e-12, phase: PhaseState = None) -> PolyGaussian:
    """Coherent state ``|alpha>`` as a Fock sum truncated at ``n_max``.

    The dropped probability weight is stored in ``state.tail``.

    Raises
    ------
    TruncationError
        If the tail exceeds ``tail_tol``; the message names the smallest
        sufficient ``n_max``.
    """
    alpha = complex(alpha)
    n_max = int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    tail = coherent_tail(alpha, n_max)
    if tail > tail_tol:
        need = n_max
        while coherent_tail(alpha, need) > tail_tol and need < MAX_DEGREE:
            need += 1
        hint = (f"use n_max >= {need}" if coherent_tail(alpha, need) <= tail_tol
                else f"not reachable below the degree cap {MAX_DEGREE}")
        raise TruncationError(
            f"truncation tail {tail:.3e} exceeds {tail_tol:.1e} for |alpha|={abs(alpha):.4g}; {hint}"
        )
    base = ground_tcs(params, t, phase)
    term = base
    total = np.array(base.coeffs)
    for n in range(1, n_max + 1):
        # alpha^n / n! (a+)^n |0>
        term = apply_raising(term) * (alpha / n)
        total = npoly.polyadd(total, term.coeffs)
    pref = math.exp(-0.5 * abs(alpha) ** 2)
    return base.with_coeffs(_trim(pref * total), tail=tail)


def build_state(params: OscParams, spec: StateSpec, t: float, phase: PhaseState = None) -> PolyGaussian:
    if spec.kind == "fock":
        return fock_tcs(params, spec.n, t, phase)
    return coherent_tcs(params, spec.alpha, t, spec.n_max, phase=phase)


def _curvature(state):
    """``w / z`` with its imaginary part taken from the conserved skew product.

    ``Im(w/z) = Im(w z*) / |z|^2`` and ``Im(w z*) = Im b`` along the flow.  Direct
    division loses every digit of the imaginary part once ``|Re(w z*)|`` is
    ~1e16 times larger (overdamped, late times).
    """
    ps = state.phase_state
    z2 = abs(ps.z) ** 2
    return complex((ps.w * ps.z.conjugate()).real / z2, state.params.b.imag / z2)


def _envelope_exponent(state, u):
    ps = state.phase_state
    hbar = state.params.hbar
    s = ps.sigma + ps.p * u + 0.5 * _curvature(state) * u * u
    return -0.5 * ps.logz + 1j * s / hbar


def evaluate(state: PolyGaussian, x):
    """Amplitude ``psi(x, t)``; ``x`` scalar or array."""
    x_arr = np.asarray(x, dtype=float)
    u = x_arr - state.phase_state.x
    amp = npoly.polyval(u, state.coeffs) * state.norm_const * np.exp(_envelope_exponent(state, u))
    if np.ndim(x) == 0:
        return complex(amp)
    return amp


def evaluate_gradient(state: PolyGaussian, x):
    """Exact ``d psi / dx`` from the polynomial and the phase."""
    x_arr = np.asarray(x, dtype=float)
    ps = state.phase_state
    u = x_arr - ps.x
    c = state.coeffs
    dP = npoly.polyval(u, npoly.polyder(c)) if c.size > 1 else 0.0
    P = npoly.polyval(u, c)
    dS = ps.p + _curvature(state) * u
    out = (dP + 1j * dS / state.params.hbar * P) * state.norm_const * np.exp(_envelope_exponent(state, u))
    if np.ndim(x) == 0:
        return complex(out)
    return out


def evaluate_grid(state: PolyGaussian, grid: Grid) -> np.ndarray:
    return evaluate(state, grid.points)


def _gaussian_weight(state):
    """``kappa`` of ``|envelope|^2 = N^2 |z|^-1 exp(-kappa u^2)`` and the prefactor."""
    ps = state.phase_state
    kappa = _curvature(state).imag / state.params.hbar
    if not kappa > 0:
        raise ValueError("state is not square integrable (Im w/z <= 0)")
    pref = state.norm_const ** 2 * math.exp(-ps.logz.real)
    return kappa, pref


def _moment_sum(q, kappa):
    """``int q(u) exp(-kappa u^2) du`` for coefficients ``q`` in powers of u."""
    q = np.asarray(q, dtype=complex)
    scale = kappa ** -0.5
    total = 0j
    m = math.sqrt(math.pi)  # int s^(2k) exp(-s^2) ds, k = 0
    for k in range(0, (q.size + 1) // 2):
        total += q[2 * k] * scale ** (2 * k) * m
        m *= k + 0.5
    return total * scale


def _scaled(c, kappa):
    return np.asarray(c, dtype=complex) * kappa ** (-0.5 * np.arange(len(c)))


def inner_product(state_a: PolyGaussian, state_b: PolyGaussian) -> complex:
    """``<a|b> = int conj(psi_a) psi_b dx`` in closed form.

    Both states must share parameters and phase state (same time).
    """
    if state_a.params != state_b.params or state_a.phase_state != state_b.phase_state:
        raise ValueError("inner product needs states with the same parameters and time")
    kappa, pref = _gaussian_weight(state_a)
    # work in s = u * sqrt(kappa) so that the weight is exp(-s^2)
    qa = _scaled(state_a.coeffs, kappa)
    qb = _scaled(state_b.coeffs, kappa)
    q = npoly.polymul(np.conj(qa), qb)
    return complex(pref * _moment_sum(q, 1.0) * kappa ** -0.5)


def norm(state: PolyGaussian) -> float:
    return math.sqrt(max(inner_product(state, state).real, 0.0))


def moments(state: PolyGaussian):
    """Closed-form ``<x>`` and ``<(x - <x>)^2>`` of a normalised state."""
    u = np.array([0.0, 1.0])
    shifted = state.with_coeffs(npoly.polymul(u, state.coeffs))
    nrm = inner_product(state, state).real
    mean_u = inner_product(state, shifted).real / nrm
    mean_u2 = inner_product(shifted, shifted).real / nrm
    return state.phase_state.x + mean_u, max(mean_u2 - mean_u ** 2, 0.0)


def default_grid(state: PolyGaussian, width: float = 12.0, n_points: int = 4096) -> Grid:
    """Uniform grid centred on ``<x>`` spanning ``width`` standard deviations."""
    mean, var = moments(state)
    return Grid(mean, width * math.sqrt(var), n_points)
