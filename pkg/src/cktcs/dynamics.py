"""Classical trajectory, system in variations and action of the damped oscillator.

Hamiltonian::

    H(x, p, t) = exp(-gamma t) p**2 / (2m) + exp(gamma t) m omega0**2 x**2 / 2

The trajectory ``(x, p)`` and the variations ``(z, w)`` obey the same linear
equations, so both are written with the kernels ``C, S`` from :mod:`cktcs.core`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .core import BranchError, FocalPointError, OscParams, Regime, continued_log, kernels

__all__ = [
    "DivergenceError",
    "PhaseState",
    "QuadratureError",
    "action",
    "hamiltonian",
    "integrate_oracle",
    "integrate_oracle_path",
    "lagrangian",
    "mechanical_energy",
    "phase_state",
    "phase_states",
    "trajectory",
    "trig_forms",
    "variational",
]

ACTION_ATOL = 1e-12
ACTION_RTOL = 1e-13
_QUAD_LIMIT = 400


class DivergenceError(ArithmeticError):
    """The ODE oracle produced a non-finite state."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature of the action did not reach its tolerance."""


@dataclass(frozen=True)
class PhaseState:
    """Classical snapshot at time ``t``.

    ``logz`` is the logarithm of ``z`` continued from ``logz(0) = 0`` along
    the path, so ``exp(-logz/2)`` is the correct branch of ``z**(-1/2)``.
    """

    t: float
    x: float
    p: float
    w: complex
    z: complex
    sigma: float
    logz: complex

    @property
    def skew(self) -> complex:
        """``z w* - z* w``; equals ``-2i Im b`` along the exact flow."""
        return self.z * self.w.conjugate() - self.z.conjugate() * self.w

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.p, self.w.real, self.w.imag,
                         self.z.real, self.z.imag, self.sigma, self.logz.imag])


class Trajectory(NamedTuple):
    x: np.ndarray
    p: np.ndarray


def trajectory(params: OscParams, t):
    """Closed-form ``(x(t), p(t))``; ``t`` may be scalar or array."""
    g = params.gamma
    m = params.m
    C, S = kernels(params.omega_sq, t)
    t_arr = np.asarray(t, dtype=float)
    decay = np.exp(-0.5 * g * t_arr)
    grow = np.exp(0.5 * g * t_arr)
    x = decay * (params.x0 * C + (params.p0 / m + 0.5 * g * params.x0) * S)
    p = grow * (params.p0 * C - (0.5 * g * params.p0 + m * params.omega0 ** 2 * params.x0) * S)
    if np.ndim(t) == 0:
        return float(x), float(p)
    return Trajectory(x, p)


def _wz(params, t):
    g = params.gamma
    m = params.m
    b = params.b
    C, S = kernels(params.omega_sq, t)
    t_arr = np.asarray(t, dtype=float)
    w = np.exp(0.5 * g * t_arr) * (b * C - (0.5 * b * g + m * params.omega0 ** 2) * S)
    z = np.exp(-0.5 * g * t_arr) * (C + (b / m + 0.5 * g) * S)
    return w, z


def _path_step(params):
    rate = max(params.omega, params.gamma, params.omega0, abs(params.b) / params.m)
    return (2.0 * math.pi / rate) / 16.0


def _logz_on(params, times):
    """Continued log z at each of ``times`` (1-d array, any order/sign)."""
    times = np.asarray(times, dtype=float)
    out = np.zeros(times.shape, dtype=complex)
    h = _path_step(params)
    for sign in (1.0, -1.0):
        mask = sign * times > 0
        if not np.any(mask):
            continue
        targets = sign * times[mask]
        t_end = float(targets.max())
        for _ in range(30):
            n = max(int(math.ceil(t_end / h)), 1)
            dense = np.linspace(0.0, t_end, n + 1)
            path_t = np.union1d(dense, targets)
            _, z = _wz(params, sign * path_t)
            try:
                logs = continued_log(z)
            except BranchError:
                h *= 0.5
                continue
            steps = np.abs(np.diff(logs.imag))
            if steps.size and steps.max() > 0.25 * math.pi:
                h *= 0.5
                continue
            break
        else:
            raise BranchError("could not resolve the argument of z(t); path refinement failed")
        out[mask] = logs[np.searchsorted(path_t, targets)]
    return out


def variational(params: OscParams, t):
    """Closed-form ``(w(t), z(t), log z(t))`` with ``w(0) = b``, ``z(0) = 1``.

    Raises :class:`FocalPointError` if ``|z(t)| < 1e-14``.
    """
    w, z = _wz(params, t)
    if np.any(np.abs(z) < 1e-14):
        raise FocalPointError(f"z(t) vanished (|z| < 1e-14) for t={t!r}")
    logz = _logz_on(params, np.atleast_1d(np.asarray(t, dtype=float)))
    if np.ndim(t) == 0:
        return complex(w), complex(z), complex(logz[0])
    return w, z, logz


def hamiltonian(params: OscParams, x, p, t):
    g = params.gamma
    return (np.exp(-g * np.asarray(t)) * np.square(p) / (2 * params.m)
            + 0.5 * np.exp(g * np.asarray(t)) * params.m * params.omega0 ** 2 * np.square(x))


def lagrangian(params: OscParams, x, xdot, t):
    g = params.gamma
    return np.exp(g * np.asarray(t)) * (0.5 * params.m * np.square(xdot)
                                        - 0.5 * params.m * params.omega0 ** 2 * np.square(x))


def mechanical_energy(params: OscParams, x, p, t):
    g = params.gamma
    return (np.exp(-2 * g * np.asarray(t)) * np.square(p) / (2 * params.m)
            + 0.5 * params.m * params.omega0 ** 2 * np.square(x))


def _action_rate(params, tau):
    x, p = trajectory(params, tau)
    # xdot * p - H, with xdot = exp(-gamma t) p / m
    return (math.exp(-params.gamma * tau) * p * p / (2 * params.m)
            - 0.5 * math.exp(params.gamma * tau) * params.m * params.omega0 ** 2 * x * x)


def _quad_segment(params, a, b):
    if a == b:
        return 0.0
    value, err, info = integrate.quad(
        lambda s: _action_rate(params, s), a, b,
        epsabs=ACTION_ATOL, epsrel=ACTION_RTOL, limit=_QUAD_LIMIT, full_output=1,
    )[:3]
    tol = max(ACTION_ATOL, 1e3 * ACTION_RTOL * abs(value))
    if not math.isfinite(value) or err > tol:
        raise QuadratureError(
            f"action quadrature on [{a}, {b}] reached only {err:.3e} (wanted {tol:.3e})"
        )
    return value


def action(params: OscParams, t):
    """Classical action ``sigma(t) = int_0^t (xdot p - H) dtau``.

    Evaluated by adaptive quadrature of the closed-form integrand.  For an
    array of times the integral is accumulated segment by segment.
    """
    if np.ndim(t) == 0:
        return _quad_segment(params, 0.0, float(t))
    times = np.asarray(t, dtype=float)
    out = np.empty(times.shape)
    flat = times.ravel()
    order = np.argsort(flat, kind="stable")
    res = np.empty(flat.size)
    for sign in (1.0, -1.0):
        idx = [i for i in order if sign * flat[i] > 0]
        if sign < 0:
            idx = idx[::-1]
        acc, prev = 0.0, 0.0
        for i in idx:
            acc += _quad_segment(params, prev, flat[i])
            prev = flat[i]
            res[i] = acc
    res[flat == 0] = 0.0
    out[...] = res.reshape(times.shape)
    return out


def phase_state(params: OscParams, t: float) -> PhaseState:
    t = float(t)
    x, p = trajectory(params, t)
    w, z, logz = variational(params, t)
    return PhaseState(t=t, x=x, p=p, w=w, z=z, sigma=action(params, t), logz=logz)


def phase_states(params: OscParams, times) -> list:
    """PhaseState at each time; shares one continuation path and one
    cumulative action integral."""
    times = np.asarray(times, dtype=float)
    x, p = trajectory(params, times)
    w, z, logz = variational(params, times)
    sigma = action(params, times)
    return [PhaseState(float(ti), float(xi), float(pi), complex(wi), complex(zi),
                       float(si), complex(li))
            for ti, xi, pi, wi, zi, si, li in zip(times, x, p, w, z, sigma, logz)]


def trig_forms(params: OscParams, t):
    """``x, p, w, z`` written with explicit ``cos``/``sin`` of ``omega t``.

    Only defined for the underdamped regime; used as a cross-check of the
    kernel forms (including the ``gamma**2 + 4 omega**2 = 4 omega0**2``
    simplification in ``p`` and ``w``).
    """
    if params.regime is not Regime.UNDERDAMPED:
        raise ValueError("explicit trigonometric forms need omega_sq > 0")
    m, g, b = params.m, params.gamma, params.b
    om = params.omega
    x0, p0 = params.x0, params.p0
    t = np.asarray(t, dtype=float)
    c, s = np.cos(om * t), np.sin(om * t)
    ed, eg = np.exp(-0.5 * g * t), np.exp(0.5 * g * t)
    x = ed / (2 * m * om) * (2 * p0 * s + m * (2 * om * c + g * s) * x0)
    p = -eg / (4 * om) * ((2 * g * s - 4 * om * c) * p0 + m * (g ** 2 + 4 * om ** 2) * x0 * s)
    w = -eg / (4 * om) * ((2 * b * g + m * (g ** 2 + 4 * om ** 2)) * s - 4 * b * om * c)
    z = ed * (c + (2 * b + m * g) * s / (2 * m * om))
    return x, p, w, z


def _rhs(params, t, x, p, w, z):
    eg = math.exp(params.gamma * t)
    ed = 1.0 / eg
    k = params.m * params.omega0 ** 2
    inv_m = 1.0 / params.m
    return (ed * p * inv_m,
            -eg * k * x,
            -eg * k * z,
            ed * w * inv_m,
            0.5 * ed * p * p * inv_m - 0.5 * eg * k * x * x)


def integrate_oracle(params: OscParams, t_final: float, n_steps: int) -> PhaseState:
    """Fixed-step classical RK4 for the trajectory, the variations and the
    action, integrated from ``t = 0`` to ``t_final``.

    Independent of the closed forms: only the Hamiltonian enters.  The log of
    ``z`` is continued step by step.
    """
    return integrate_oracle_path(params, t_final, n_steps, record_every=int(n_steps))[-1]


def integrate_oracle_path(params: OscParams, t_final: float, n_steps: int,
                          record_every: int = 1) -> list:
    """As :func:`integrate_oracle`, returning the state at ``t = 0`` and
    after every ``record_every`` steps (the final step is always kept)."""
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    t_final = float(t_final)
    x, p, w, z, s = params.x0, params.p0, complex(params.b), 1 + 0j, 0.0
    logz = 0j
    out = [PhaseState(0.0, x, p, w, z, s, logz)]
    if t_final == 0.0:
        return out
    h = t_final / n_steps
    t = 0.0
    for i in range(n_steps):
        k1 = _rhs(params, t, x, p, w, z)
        k2 = _rhs(params, t + 0.5 * h, x + 0.5 * h * k1[0], p + 0.5 * h * k1[1],
                  w + 0.5 * h * k1[2], z + 0.5 * h * k1[3])
        k3 = _rhs(params, t + 0.5 * h, x + 0.5 * h * k2[0], p + 0.5 * h * k2[1],
                  w + 0.5 * h * k2[2], z + 0.5 * h * k2[3])
        k4 = _rhs(params, t + h, x + h * k3[0], p + h * k3[1],
                  w + h * k3[2], z + h * k3[3])
        z_old = z
        x += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        p += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        w += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        z += h / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        s += h / 6 * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4])
        t = (i + 1) * h
        if z == 0:
            raise FocalPointError(f"oracle hit z = 0 at t={t}")
        step = complex(np.log(z / z_old))
        if abs(step.imag) >= 0.5 * math.pi:
            raise BranchError(f"oracle step too coarse to follow arg z at t={t}")
        logz += step
        if not (math.isfinite(x) and math.isfinite(p) and math.isfinite(s)
                and math.isfinite(abs(w)) and math.isfinite(abs(z))):
            raise DivergenceError(f"non-finite oracle state at t={t}")
        if (i + 1) % record_every == 0 or i == n_steps - 1:
            out.append(PhaseState(t_final if i == n_steps - 1 else t, x, p, w, z, s, logz))
    return out
