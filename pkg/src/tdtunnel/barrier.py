"""Stationary scattering off the rectangular barrier and the phase-based times."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, newton

from .params import BarrierSpec, ParameterError, derive_scales


class NoTransitionError(ValueError):
    """alpha is at or below the critical opacity: the delay never changes sign."""


class UnwrapError(ValueError):
    """Phase grid too coarse to unwrap unambiguously."""


@dataclass(frozen=True)
class TransmissionData:
    T: complex
    R: complex
    magnitude2: float
    phase: float
    underflow: bool = False


@dataclass(frozen=True)
class DelayReport:
    t_phi: float
    t_phi_dimensionless: float
    tau_H: float
    hartman_asymptote: float
    t0_free: float
    alpha: float
    alpha_c: float
    sign_class: str


def _q_of(spec: BarrierSpec, k):
    k0sq = spec.V0 / spec.hbar2_over_2m
    return np.sqrt(np.asarray(k, dtype=complex) ** 2 - k0sq)


def transmission_amplitudes(spec: BarrierSpec, k, q=None):
    """Transmission and reflection amplitudes (T, R) on a scalar or array of k.

    Uses ``T = 4kq e^{-ikL} / [(k+q)^2 e^{-iqL} - (k-q)^2 e^{iqL}]`` with the
    interior wavenumber ``q = sqrt(k^2 - k0^2)``; both amplitudes are even in q.
    """
    k = np.asarray(k, dtype=complex)
    if np.any(k == 0):
        raise ParameterError("transmission is undefined at k = 0")
    if q is None:
        q = _q_of(spec, k)
    L = spec.L
    # Divide numerator and denominator by e^{-iqL} to keep the largest
    # exponential bounded for decaying (Im q > 0 branch chosen below) modes.
    q = np.where(q.imag < 0, -q, q)
    e = np.exp(2j * q * L)  # |e| <= 1
    den = (k + q) ** 2 - (k - q) ** 2 * e
    T = 4 * k * q * np.exp(1j * q * L) * np.exp(-1j * k * L) / den
    R = (k * k - q * q) * (1 - e) / den
    # Near the barrier top q -> 0 and the form above cancels; use
    # S = sin(qL)/q, which is smooth there.
    near = np.abs(q * L) < 1.0
    if np.any(near):
        qn, kn = q[near] if q.ndim else q, k[near] if k.ndim else k
        S = L * np.sinc(qn * L / np.pi)
        k0sq = kn * kn - qn * qn
        den2 = 4 * kn * np.cos(qn * L) - 2j * (kn * kn + qn * qn) * S
        Tn = 4 * kn * np.exp(-1j * kn * L) / den2
        Rn = -2j * k0sq * S / den2
        if q.ndim:
            T, R = T.copy(), R.copy()
            T[near], R[near] = Tn, Rn
        else:
            T, R = Tn, Rn
    return T, R


def transmission(spec: BarrierSpec, k) -> TransmissionData:
    """TransmissionData at a single real or complex wavenumber."""
    k = complex(k)
    if k == 0:
        raise ParameterError("transmission is undefined at k = 0")
    T, R = transmission_amplitudes(spec, k)
    T, R = complex(T), complex(R)
    mag2 = abs(T) ** 2
    return TransmissionData(T=T, R=R, magnitude2=mag2, phase=math.atan2(T.imag, T.real),
                            underflow=mag2 == 0.0)


def transmission_tunneling(spec: BarrierSpec, k: float) -> complex:
    """Real-kappa form ``e^{-ikL} / [cosh kL + (i/2)(kappa/k - k/kappa) sinh kL]``."""
    k0sq = spec.V0 / spec.hbar2_over_2m
    if not 0 < k * k < k0sq:
        raise ParameterError("real-kappa form requires 0 < k < k0")
    kappa = math.sqrt(k0sq - k * k)
    kl = kappa * spec.L
    den = math.cosh(kl) + 0.5j * (kappa / k - k / kappa) * math.sinh(kl)
    return complex(np.exp(-1j * k * spec.L) / den)


def phase_unwrapped(spec: BarrierSpec, k_grid) -> np.ndarray:
    """Continuous phase of T on a monotone positive k grid."""
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(k_grid <= 0) or np.any(np.diff(k_grid) <= 0):
        raise ParameterError("k grid must be positive and strictly increasing")
    T, _ = transmission_amplitudes(spec, k_grid)
    raw = np.angle(T)
    jumps = np.diff(raw)
    # A genuine step is indistinguishable from a wrap once it approaches pi.
    wrapped = (jumps + np.pi) % (2 * np.pi) - np.pi
    if np.any(np.abs(wrapped) > 0.9 * np.pi):
        raise UnwrapError("adjacent phase difference too close to pi; refine the k grid")
    return np.concatenate([[raw[0]], raw[0] + np.cumsum(wrapped)])


def _require_tunneling(spec: BarrierSpec):
    if not spec.E < spec.V0:
        raise ParameterError("delay-time formulas require E < V0")


def delay_time(spec: BarrierSpec) -> float:
    """Phase delay ``t_phi = (d phi/dk)/v_k`` in closed form (fs)."""
    _require_tunneling(spec)
    d = derive_scales(spec)
    k, kap, k0, L = d.k, d.kappa, d.k0, spec.L
    m_over_hbar = 1.0 / spec.hbar_over_m
    kl = kap * L
    # sinh(2x)/sinh(x)^2 blows up in double for x > ~355; divide through.
    if kl < 300:
        num = k0**4 * math.sinh(2 * kl) - 2 * kl * k * k * (k * k - kap * kap)
        den = 4 * k * k * kap * kap + k0**4 * math.sinh(kl) ** 2
        ratio = num / den
    else:
        ratio = 2.0  # sinh(2x)/sinh(x)^2 -> 2 with the other terms negligible
    return m_over_hbar / (k * kap) * ratio - m_over_hbar * L / k


def delay_time_dimensionless(alpha: float, u: float) -> float:
    """``t_phi / t0`` with ``t0 = mL/(hbar k0)`` written in opacity and u = V0/E."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    if not u > 1:
        raise ParameterError("u = V0/E must exceed 1")
    g = 2 * alpha * math.sqrt(1 - 1 / u)
    r = g * g / (alpha * alpha)
    num = 4 / g * math.sinh(g) - math.cosh(g) + r - 3
    den = (r - r * r / 4 + math.sinh(g / 2) ** 2) * math.sqrt(4 - r)
    return num / den


def _transition_residual(g: float, alpha: float) -> float:
    return 4 / g * math.sinh(g) - math.cosh(g) - (3 - g * g / (alpha * alpha))


def _critical_lhs(a: float) -> float:
    return math.cosh(2 * a) - 2 / a * math.sinh(2 * a)


def critical_opacity() -> float:
    """Root of ``cosh 2a - (2/a) sinh 2a = 1`` away from the a -> 0 degeneracy."""
    f = lambda a: _critical_lhs(a) - 1.0
    a = brentq(f, 0.5, 6.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return float(newton(f, a, fprime=lambda a: 2 * math.sinh(2 * a)
                        + 2 / a**2 * math.sinh(2 * a) - 4 / a * math.cosh(2 * a), tol=1e-15))


def critical_residual(alpha: float) -> float:
    return _critical_lhs(alpha) - 1.0


ALPHA_C = critical_opacity()


def transition_u(alpha: float) -> float:
    """The u = V0/E at which the delay changes sign for a given opacity."""
    if not alpha > ALPHA_C:
        raise NoTransitionError(f"no sign change for alpha = {alpha} <= alpha_c = {ALPHA_C:.6f}")
    f = lambda g: _transition_residual(g, alpha)
    hi = 2 * alpha
    lo = 1e-3 * alpha
    # f(g) -> 1 - 0 as g -> 0 (positive) and f(2 alpha) < 0 above alpha_c.
    g = brentq(f, lo, hi * (1 - 1e-15), xtol=1e-15)
    try:
        g = newton(f, g, tol=1e-15, maxiter=20)
    except RuntimeError:
        pass
    return 1.0 / (1.0 - (g / (2 * alpha)) ** 2)


def classify_sign(t_phi: float, tol: float = 1e-9) -> str:
    if t_phi > tol:
        return "positive-delay"
    if t_phi < -tol:
        return "negative-delay"
    return "transition"


def hartman_time(spec: BarrierSpec) -> tuple[float, float]:
    """(tau_H, opaque-barrier asymptote 2m/(hbar k kappa)) in fs."""
    d = derive_scales(spec)
    t_phi = delay_time(spec)
    return t_phi + d.t0_free, 2.0 / (spec.hbar_over_m * d.k * d.kappa)


def delay_report(spec: BarrierSpec) -> DelayReport:
    d = derive_scales(spec)
    t_phi = delay_time(spec)
    tau_H, asym = hartman_time(spec)
    return DelayReport(
        t_phi=t_phi,
        t_phi_dimensionless=t_phi / d.t0_barrier,
        tau_H=tau_H,
        hartman_asymptote=asym,
        t0_free=d.t0_free,
        alpha=d.alpha,
        alpha_c=ALPHA_C,
        sign_class=classify_sign(t_phi),
    )
