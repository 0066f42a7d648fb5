"""Exact transmitted wave for the released cutoff reflecting wave.

``psi = psi_q + psi_r`` on ``x >= L`` where ``psi_q`` carries the stationary
transmission amplitude and ``psi_r`` sums the resonance poles together with
their third-quadrant mirrors ``-conj(k_n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barrier import transmission_amplitudes
from .params import BarrierSpec, ParameterError, derive_scales
from .resonances import ResonantMode, axis_modes_for, modes_for
from .specfun import moshinsky_m

DEFAULT_TOL = 1e-10
DEFAULT_NPOLES = 60
BLOCK = 3


@dataclass(frozen=True)
class WaveParts:
    psi_q: complex | np.ndarray
    psi_r: complex | np.ndarray
    psi: complex | np.ndarray
    dens_q: float | np.ndarray
    dens_r: float | np.ndarray
    dens_total: float | np.ndarray
    interference: float | np.ndarray
    truncation_order: int | np.ndarray
    converged: bool | np.ndarray


@dataclass(frozen=True)
class TimeSeries:
    x0: float
    t: np.ndarray
    parts: WaveParts
    free_density: np.ndarray
    spec: BarrierSpec
    npoles: int
    tol: float
    normalized: bool
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name == "dens_free":
            return self.free_density
        if name in ("dens_total", "dens_q", "dens_r", "interference"):
            return getattr(self.parts, name)
        raise KeyError(name)


class ModeSet:
    """Pole data packed into arrays for vectorised pole sums.

    ``modes`` are fourth-quadrant poles, each summed together with its mirror
    ``-conj(k_n)``; ``axis`` holds poles on the negative imaginary axis, which
    are their own mirrors and enter once.
    """

    def __init__(self, spec: BarrierSpec, modes: list[ResonantMode],
                 axis: list[ResonantMode] = ()):
        self.spec = spec
        self.modes = list(modes)
        self.axis = list(axis)
        self.k = np.array([m.k for m in self.modes])
        self.c = np.array([m.u0 * m.uL for m in self.modes]) * np.exp(-1j * self.k * spec.L)
        self.k_axis = np.array([m.k for m in self.axis], dtype=complex)
        self.c_axis = np.array([m.u0 * m.uL for m in self.axis], dtype=complex) \
            * np.exp(-1j * self.k_axis * spec.L)

    def __len__(self):
        return len(self.modes)

    def truncated(self, n: int) -> "ModeSet":
        return ModeSet(self.spec, self.modes[:n], self.axis)

    def coefficients(self, k: float) -> tuple[np.ndarray, np.ndarray]:
        """(T_n, T_{-n}) for the fourth-quadrant poles and their mirrors."""
        Tn = 2j * k * self.c / (k * k - self.k * self.k)
        kk = -np.conj(self.k)
        Tm = 2j * k * np.conj(self.c) / (k * k - kk * kk)
        return Tn, Tm

    def axis_coefficients(self, k: float) -> np.ndarray:
        return 2j * k * self.c_axis / (k * k - self.k_axis * self.k_axis)

    @classmethod
    def build(cls, spec: BarrierSpec, npoles: int = DEFAULT_NPOLES) -> "ModeSet":
        return cls(spec, modes_for(spec, npoles), axis_modes_for(spec))


def _check_region(spec: BarrierSpec, x, t):
    if np.any(np.asarray(x) < spec.L):
        raise ParameterError("the transmitted solution is defined for x >= L")
    if np.any(np.asarray(t) <= 0):
        raise ParameterError("evolved quantities need t > 0 (t = 0 is the initial condition)")


def make_grid(tmin: float, tmax: float, n: int, kind: str = "auto") -> np.ndarray:
    """Time grid in fs.

    ``hybrid`` puts half the points on a log grid up to ``tmax/100`` and the
    rest uniformly above it; ``auto`` picks hybrid when the window spans more
    than two decades and linear otherwise.
    """
    if not (0 <= tmin < tmax) or n < 2:
        raise ParameterError("need 0 <= tmin < tmax and at least 2 points")
    if kind == "auto":
        kind = "hybrid" if tmin > 0 and tmax / tmin > 100 else "linear"
    if kind == "linear":
        return np.linspace(tmin, tmax, n)
    if tmin <= 0:
        raise ParameterError(f"a {kind} grid needs tmin > 0")
    if kind == "log":
        return np.geomspace(tmin, tmax, n)
    if kind == "hybrid":
        split = max(tmax / 100, tmin * 10)
        if split >= tmax:
            return np.geomspace(tmin, tmax, n)
        nlog = n // 2
        head = np.geomspace(tmin, split, nlog, endpoint=False)
        return np.concatenate([head, np.linspace(split, tmax, n - nlog)])
    raise ParameterError(f"unknown grid kind {kind!r}")


def psi_free(spec: BarrierSpec, x, t):
    """Free reflecting cutoff wave ``M(y_k) - M(y_{-k})``."""
    k = derive_scales(spec).k
    return moshinsky_m(spec, x, t, k) - moshinsky_m(spec, x, t, -k)


def psi_q(spec: BarrierSpec, x, t):
    """Quasi-monochromatic part ``T_k M(y_k) - T_{-k} M(y_{-k})``."""
    _check_region(spec, x, t)
    k = derive_scales(spec).k
    Tk = complex(transmission_amplitudes(spec, k)[0])
    return Tk * moshinsky_m(spec, x, t, k) - np.conj(Tk) * moshinsky_m(spec, x, t, -k)


def _pole_terms(spec: BarrierSpec, modes: ModeSet, x, t):
    """Per-pole contributions ``T_n M_n + T_{-n} M_{-n}``, shape (N, *xt).

    Axis poles, if any, are prepended: they have the smallest real part.
    """
    k = derive_scales(spec).k
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    Tn, Tm = modes.coefficients(k)
    shape = (len(modes),) + (1,) * x.ndim
    kn = modes.k.reshape(shape)
    Mn = moshinsky_m(spec, x[None], t[None], kn)
    Mm = moshinsky_m(spec, x[None], t[None], -np.conj(kn))
    terms = Tn.reshape(shape) * Mn + Tm.reshape(shape) * Mm
    if modes.axis:
        ashape = (len(modes.axis),) + (1,) * x.ndim
        Ma = moshinsky_m(spec, x[None], t[None], modes.k_axis.reshape(ashape))
        terms = np.concatenate([modes.axis_coefficients(k).reshape(ashape) * Ma, terms])
    return terms


def psi_r(spec: BarrierSpec, modes: ModeSet, x, t, tol: float = DEFAULT_TOL):
    """Resonant part ``-sum_n T_n M(y_{k_n})``.

    Returns ``(value, truncation_order, converged)``.  Terms are accumulated in
    pole order until a block of three consecutive terms adds less than
    ``tol * |partial sum|``; if that never happens every mode is used and
    ``converged`` is False.
    """
    _check_region(spec, x, t)
    terms = -_pole_terms(spec, modes, x, t)
    partial = np.cumsum(terms, axis=0)
    n = terms.shape[0]
    if n >= BLOCK:
        mags = np.abs(terms)
        block = mags[2:] + mags[1:-1] + mags[:-2]
        ok = block < tol * np.abs(partial[BLOCK - 1:])
        hit = np.any(ok, axis=0)
        first = np.argmax(ok, axis=0) + BLOCK - 1
    else:
        hit = np.zeros(terms.shape[1:], dtype=bool)
        first = np.zeros(terms.shape[1:], dtype=int)
    order = np.where(hit, first, n - 1)
    value = np.take_along_axis(partial, order[None], axis=0)[0]
    order = order + 1
    if value.ndim == 0:
        return complex(value), int(order), bool(hit)
    return value, order, hit


def evaluate(spec: BarrierSpec, modes: ModeSet, x, t, tol: float = DEFAULT_TOL,
             normalize: bool = True) -> WaveParts:
    """All parts of the wave and the density decomposition at (x, t).

    ``t = 0`` is the initial condition, which vanishes for x > 0.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr == 0) and not np.any(t_arr < 0):
        return _evaluate_with_zero(spec, modes, x, t_arr, tol, normalize)
    pq = psi_q(spec, x, t)
    pr, order, conv = psi_r(spec, modes, x, t, tol)
    psi = pq + pr
    dq = np.abs(pq) ** 2
    dr = np.abs(pr) ** 2
    inter = 2.0 * np.real(np.conj(pq) * pr)
    dt = np.abs(psi) ** 2
    if normalize:
        scale = 1.0 / transmission_magnitude2(spec)
        dq, dr, inter, dt = dq * scale, dr * scale, inter * scale, dt * scale
    return WaveParts(psi_q=pq, psi_r=pr, psi=psi, dens_q=dq, dens_r=dr, dens_total=dt,
                     interference=inter, truncation_order=order, converged=conv)


def _evaluate_with_zero(spec, modes, x, t, tol, normalize):
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), t)
    if np.any(x < spec.L):
        raise ParameterError("the transmitted solution is defined for x >= L")
    live = t > 0
    zc = np.zeros(t.shape, dtype=complex)
    zr = np.zeros(t.shape)
    fields = dict(psi_q=zc.copy(), psi_r=zc.copy(), psi=zc.copy(), dens_q=zr.copy(),
                  dens_r=zr.copy(), dens_total=zr.copy(), interference=zr.copy(),
                  truncation_order=np.zeros(t.shape, dtype=int),
                  converged=np.ones(t.shape, dtype=bool))
    if np.any(live):
        part = evaluate(spec, modes, x[live], t[live], tol, normalize)
        for name in fields:
            fields[name][live] = getattr(part, name)
    if t.ndim == 0:
        fields = {k: v[()] for k, v in fields.items()}
    return WaveParts(**fields)


def transmission_magnitude2(spec: BarrierSpec) -> float:
    k = derive_scales(spec).k
    return float(abs(complex(transmission_amplitudes(spec, k)[0])) ** 2)


def stationary_limit(spec: BarrierSpec, x, t):
    """Long-time wave ``T_k exp(ikx - iEt/hbar)``."""
    d = derive_scales(spec)
    Tk = complex(transmission_amplitudes(spec, d.k)[0])
    omega = 0.5 * spec.hbar_over_m * d.k * d.k
    return Tk * np.exp(1j * d.k * np.asarray(x) - 1j * omega * np.asarray(t))


def forerunner_density(spec: BarrierSpec, mode: ResonantMode, x0: float, t):
    """One-pole forerunner ``|T_1|^2 (hbar t/m) / (2 pi [(x0 - v_a t)^2 + (v_b t)^2])``.

    Only meaningful near the forerunner peak, where ``|arg y_{k_1}| < pi/2``.
    """
    d = derive_scales(spec)
    T1 = 2j * d.k * mode.u0 * mode.uL * np.exp(-1j * mode.k * spec.L) / (d.k**2 - mode.k**2)
    hom = spec.hbar_over_m
    t = np.asarray(t, dtype=float)
    a, b = mode.k.real, -mode.k.imag
    val = (hom * t) / (2 * math.pi * ((x0 - hom * a * t) ** 2 + (hom * b * t) ** 2))
    return abs(T1) ** 2 * val


def time_series(spec: BarrierSpec, modes: ModeSet, x0: float, t_grid, tol: float = DEFAULT_TOL,
                normalize: bool = True, chunk: int = 4096) -> TimeSeries:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ParameterError("time grid must be one-dimensional and strictly increasing")
    if t_grid[0] < 0:
        raise ParameterError("time grid must start at t >= 0")
    if x0 < spec.L:
        raise ParameterError("x0 must lie in the transmitted region x >= L")
    pieces = []
    for start in range(0, t_grid.size, chunk):
        tt = t_grid[start:start + chunk]
        try:
            pieces.append(evaluate(spec, modes, x0, tt, tol, normalize))
        except (ValueError, OverflowError) as exc:
            raise ParameterError(f"evaluation failed near t = {tt[0]:.6g} fs: {exc}") from exc
    parts = WaveParts(*(np.concatenate([getattr(p, f) for p in pieces])
                        for f in WaveParts.__dataclass_fields__))
    free = np.zeros_like(t_grid)
    live = t_grid > 0
    free[live] = np.abs(psi_free(spec, x0, t_grid[live])) ** 2
    return TimeSeries(x0=float(x0), t=t_grid, parts=parts, free_density=free, spec=spec,
                      npoles=len(modes), tol=tol, normalized=normalize)
