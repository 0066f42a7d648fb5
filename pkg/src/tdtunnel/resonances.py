"""Complex poles of the barrier transmission amplitude and their resonant states.

Poles are the zeros of ``F(k) = cos(qL) - i (k^2 + q^2)/(2kq) sin(qL)`` with
``q = sqrt(k^2 - k0^2)``.  ``F`` is even in ``q`` and hence single valued in k;
it equals ``D(k)/(4kq)`` for the usual denominator
``D(k) = (k+q)^2 e^{-iqL} - (k-q)^2 e^{iqL}``.  Numerically F is evaluated
as ``e^{-iqL} - i delta sin(qL)`` with ``delta = (k-q)^2/(2kq)``, which keeps
its digits for poles far above the barrier top.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .params import BarrierSpec, ParameterError, derive_scales


class PoleSearchError(RuntimeError):
    pass


class DegenerateModeError(ValueError):
    pass


@dataclass(frozen=True)
class ResonancePole:
    n: int
    k: complex
    E: complex  # hbar^2 k^2 / 2m = eps - i Gamma/2, eV

    @property
    def a(self) -> float:
        return self.k.real

    @property
    def b(self) -> float:
        return -self.k.imag

    @property
    def eps(self) -> float:
        return self.E.real

    @property
    def gamma(self) -> float:
        return -2.0 * self.E.imag


@dataclass(frozen=True)
class ResonantMode:
    pole: ResonancePole
    u0: complex
    uL: complex
    A: complex  # interior u(x) = A cos(qx) + B sin(qx)
    B: complex

    @property
    def k(self) -> complex:
        return self.pole.k

    def value(self, x):
        q = _q(self.k, self._k0sq)
        if self._cp is None:
            return self.A * np.cos(q * x) + self.B * np.sin(q * x)
        return self._cp * np.exp(1j * q * x) + self._cm * np.exp(-1j * q * x)

    def derivative(self, x):
        q = _q(self.k, self._k0sq)
        if self._cp is None:
            return q * (-self.A * np.sin(q * x) + self.B * np.cos(q * x))
        return 1j * q * (self._cp * np.exp(1j * q * x) - self._cm * np.exp(-1j * q * x))

    # set in resonant_mode(); kept off the constructor signature.  _cp and
    # _cm are the e^{+iqx}, e^{-iqx} coefficients, equal to (A -/+ iB)/2.
    _k0sq: float = 0.0
    _cp: complex | None = None
    _cm: complex | None = None


def _q(k, k0sq):
    return np.sqrt(np.asarray(k, dtype=complex) ** 2 - k0sq)


def _delta(k, q, k0sq):
    # (k^2 + q^2)/(2kq) - 1 = (k - q)^2/(2kq), with k - q = k0^2/(k + q)
    return k0sq * k0sq / (2 * k * q * (k + q) ** 2)


def pole_function(spec: BarrierSpec, k):
    """F(k) = D(k)/(4kq), vectorised over k.

    Evaluated as ``e^{-iqL} - i delta sin(qL)``; the textbook
    ``cos(qL) - i(1 + delta) sin(qL)`` loses all digits high above the barrier.
    """
    k = np.asarray(k, dtype=complex)
    k0sq = spec.V0 / spec.hbar2_over_2m
    q = _q(k, k0sq)
    L = spec.L
    return np.exp(-1j * q * L) - 1j * _delta(k, q, k0sq) * np.sin(q * L)


def pole_function_derivative(spec: BarrierSpec, k):
    k = np.asarray(k, dtype=complex)
    k0sq = spec.V0 / spec.hbar2_over_2m
    q = _q(k, k0sq)
    L = spec.L
    dq = k / q
    delta = _delta(k, q, k0sq)
    ddelta = -delta * (1 / k + dq / q + 2 * (1 + dq) / (k + q))
    return (-1j * L * np.exp(-1j * q * L) - 1j * delta * L * np.cos(q * L)) * dq \
        - 1j * ddelta * np.sin(q * L)


def denominator_D(spec: BarrierSpec, k):
    """``(k+q)^2 e^{-iqL} - (k-q)^2 e^{iqL}``."""
    k = np.asarray(k, dtype=complex)
    q = _q(k, spec.V0 / spec.hbar2_over_2m)
    L = spec.L
    return (k + q) ** 2 * np.exp(-1j * q * L) - (k - q) ** 2 * np.exp(1j * q * L)


def relative_residual(spec: BarrierSpec, k: complex) -> float:
    """|D(k)| / |D'(k) k|, equal to |F(k)| / |F'(k) k| at a zero."""
    return float(abs(pole_function(spec, k)) / abs(pole_function_derivative(spec, k) * k))


def seed(spec: BarrierSpec, n: int) -> complex:
    k0 = derive_scales(spec).k0
    return complex(math.sqrt((n * math.pi / spec.L) ** 2 + k0 * k0) - 0.05j * k0)


def refine_seed(spec: BarrierSpec, n: int, k: complex, sweeps: int = 60) -> complex:
    """Iterate ``q = n pi/L - (2i/L) Log((k+q)/k0)``, the pole condition
    written on the n-th branch, so Newton starts next to the n-th root."""
    k0sq = spec.V0 / spec.hbar2_over_2m
    k0 = math.sqrt(k0sq)
    L = spec.L
    for _ in range(sweeps):
        q = cmath.sqrt(k * k - k0sq)
        q_new = n * math.pi / L - 2j * cmath.log((k + q) / k0) / L
        k_new = cmath.sqrt(q_new * q_new + k0sq)
        if not cmath.isfinite(k_new):
            break
        done = abs(k_new - k) < 1e-12 * abs(k)
        k = k_new
        if done:
            break
    return k


def _newton(spec: BarrierSpec, n: int, k: complex, maxiter: int = 100,
            rtol: float = 1e-10) -> complex:
    for _ in range(maxiter):
        f = complex(pole_function(spec, k))
        fp = complex(pole_function_derivative(spec, k))
        if fp == 0 or not cmath.isfinite(f / fp):
            break
        step = f / fp
        k = k - step
        if k.imag > 0:
            raise PoleSearchError(f"pole {n} escaped to the upper half-plane ({k})")
        if abs(step) < 1e-14 * abs(k) or relative_residual(spec, k) < 1e-3 * rtol:
            return k
    if relative_residual(spec, k) < rtol:
        return k
    raise PoleSearchError(f"Newton iteration for pole {n} failed to converge")


def branch_index(spec: BarrierSpec, k: complex) -> complex:
    """``(qL + 2i Log((k+q)/k0))/pi``: the integer branch a pole lives on."""
    k0sq = spec.V0 / spec.hbar2_over_2m
    q = cmath.sqrt(k * k - k0sq)
    return (q * spec.L + 2j * cmath.log((k + q) / math.sqrt(k0sq))) / math.pi


def _on_axis(k: complex) -> bool:
    return abs(k.real) < 1e-9 * abs(k)


def find_poles(spec: BarrierSpec, N: int) -> list[ResonancePole]:
    """The N fourth-quadrant poles with smallest real part, sorted by Re k.

    Branch n of the pole condition is solved for n = 1, 2, ...; when the
    first branch has collapsed onto the negative imaginary axis (thin or low
    barriers) it is skipped here and reported by ``axis_poles``.
    """
    if N < 1:
        raise ParameterError("need at least one pole")
    hbar2_2m = spec.hbar2_over_2m
    ks: list[complex] = []
    n = 0
    while len(ks) < N:
        n += 1
        k = _newton(spec, n, refine_seed(spec, n, seed(spec, n)))
        if _on_axis(k):
            if n == 1:
                continue
            raise PoleSearchError(f"branch {n} collapsed onto the imaginary axis ({k})")
        if k.real < 0:
            k = -k.conjugate()
        if not k.imag < 0:
            raise PoleSearchError(f"pole {n} left the fourth quadrant ({k})")
        if abs(branch_index(spec, k) - n) > 1e-6:
            raise PoleSearchError(f"branch {n} converged to a root of another branch ({k})")
        if any(abs(k - other) < 1e-8 for other in ks):
            raise PoleSearchError(f"pole {n} duplicates an earlier root ({k})")
        ks.append(k)
    ks.sort(key=lambda z: z.real)
    return [ResonancePole(n=i + 1, k=k, E=hbar2_2m * k * k) for i, k in enumerate(ks)]


def _axis_function(spec: BarrierSpec, beta: float) -> float:
    # F(-i beta) is real on the negative imaginary axis
    return float(complex(pole_function(spec, -1j * beta)).real)


def axis_poles(spec: BarrierSpec, samples: int = 2000) -> list[ResonancePole]:
    """Poles on the negative imaginary axis, each its own mirror image.

    They appear in pairs once the first resonance and its mirror collide.
    """
    k0 = derive_scales(spec).k0
    beta_max = max(20.0 / spec.L, 3.0 * k0)
    betas = np.geomspace(1e-6 * k0, beta_max, samples)
    F = np.array([_axis_function(spec, b) for b in betas])
    found = []
    for i in np.nonzero(np.sign(F[1:]) != np.sign(F[:-1]))[0]:
        beta = brentq(lambda b: _axis_function(spec, b), betas[i], betas[i + 1], xtol=1e-15)
        found.append(complex(0.0, -beta))
    hbar2_2m = spec.hbar2_over_2m
    found.sort(key=lambda z: -z.imag)
    return [ResonancePole(n=0, k=k, E=hbar2_2m * k * k) for k in found]


def count_zeros(spec: BarrierSpec, re_max: float, im_min: float,
                re_min: float | None = None, samples: int = 4096) -> int:
    """Winding number of F around the rectangle [re_min, re_max] x [im_min, 0]."""
    if re_min is None:
        re_min = 1e-3 * derive_scales(spec).k0
    corners = [complex(re_min, 0.0), complex(re_min, im_min),
               complex(re_max, im_min), complex(re_max, 0.0)]
    total = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        n = samples
        while True:
            path = a + (b - a) * np.linspace(0.0, 1.0, n + 1)
            f = pole_function(spec, path)
            dphi = np.angle(f[1:] / f[:-1])
            if np.max(np.abs(dphi)) < 0.5 or n > 2**22:
                break
            n *= 4
        total += float(np.sum(dphi))
    return int(round(total / (2 * math.pi)))


def audit_box(spec: BarrierSpec, poles: list[ResonancePole]) -> tuple[float, float]:
    """(re_max, im_min) of a rectangle holding exactly the found poles."""
    k0 = derive_scales(spec).k0
    # stop half way to the next pole so the box edge never grazes it
    re_max = poles[-1].a + 0.5 * math.pi / spec.L
    depth = max(3 * k0, 1.5 * max(p.b for p in poles))
    return re_max, -depth


def resonant_mode(spec: BarrierSpec, pole: ResonancePole) -> ResonantMode:
    """Resonant state with outgoing conditions, normalised so that
    ``int_0^L u^2 dx + i (u(0)^2 + u(L)^2)/(2k) = 1``.

    Worked in the exponential basis ``u = P e^{iqx} + Q e^{-iqx}`` (before
    scaling), where ``P = (q - k)/(2q)`` is small and multiplies the only
    growing exponential; the cos/sin form cancels e^{2bL}-sized terms.
    """
    k0sq = spec.V0 / spec.hbar2_over_2m
    k = pole.k
    q = cmath.sqrt(k * k - k0sq)
    if abs(q) < 1e-8 * abs(k):
        raise DegenerateModeError(f"pole {pole.n} sits on the branch point q = 0")
    L = spec.L
    q_minus_k = -k0sq / (q + k)
    P = q_minus_k / (2 * q)
    Q = 1 - P
    E = cmath.exp(2j * q * L)
    Em = cmath.exp(-2j * q * L)
    # growing part of the integral and of the u(L)^2 boundary term combined
    norm = 1j * P * P * E * q_minus_k / (2 * k * q) \
        + 1j * P * P / (2 * q) \
        + 1j * Q * Q * (Em - 1) / (2 * q) \
        + 2 * P * Q * L \
        + 1j * (1 + 2 * P * Q + Q * Q * Em) / (2 * k)
    A = 1 / cmath.sqrt(norm)
    uL1 = P * cmath.exp(1j * q * L) + Q * cmath.exp(-1j * q * L)
    mode = ResonantMode(pole=pole, u0=A, uL=A * uL1, A=A, B=A * (-1j * k / q))
    object.__setattr__(mode, "_k0sq", k0sq)
    object.__setattr__(mode, "_cp", A * P)
    object.__setattr__(mode, "_cm", A * Q)
    return mode


def normalization_residual(spec: BarrierSpec, mode: ResonantMode) -> float:
    """|normalisation - 1| with the interior integral done by Gauss-Legendre."""
    x, wts = np.polynomial.legendre.leggauss(200)
    x = 0.5 * spec.L * (x + 1)
    wts = 0.5 * spec.L * wts
    u = mode.value(x)
    val = np.sum(wts * u * u) + 1j * (mode.u0**2 + mode.uL**2) / (2 * mode.k)
    return float(abs(val - 1))


def modes_for(spec: BarrierSpec, N: int) -> list[ResonantMode]:
    """Resonant modes of the N lowest fourth-quadrant poles."""
    return [resonant_mode(spec, p) for p in find_poles(spec, N)]


def axis_modes_for(spec: BarrierSpec) -> list[ResonantMode]:
    return [resonant_mode(spec, p) for p in axis_poles(spec)]


def coefficient_Tn(k: float, mode: ResonantMode, L: float) -> complex:
    """``T_n = 2ik u_n(0) u_n(L) exp(-i k_n L) / (k^2 - k_n^2)``."""
    kn = mode.k
    return 2j * k * mode.u0 * mode.uL * cmath.exp(-1j * kn * L) / (k * k - kn * kn)


def residue_by_contour(spec: BarrierSpec, kn: complex, radius: float | None = None,
                       points: int = 64) -> complex:
    """Residue of T(k) at kn from trapezoidal quadrature on a small circle."""
    from .barrier import transmission_amplitudes

    if radius is None:
        radius = 1e-3 * abs(kn)
    theta = 2 * math.pi * np.arange(points) / points
    kc = kn + radius * np.exp(1j * theta)
    T, _ = transmission_amplitudes(spec, kc)
    # (1/2 pi i) int T dk with dk = i r e^{i theta} d theta
    return complex(np.mean(T * radius * np.exp(1j * theta)))
