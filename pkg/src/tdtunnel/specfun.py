"""Faddeeva function w(z) = exp(-z^2) erfc(-iz) and the Moshinsky function.

The upper half-plane is covered by three regions:

* ``|z| < TAYLOR_RADIUS``: power series in ``iz``;
* ``|z| > CF_RADIUS``: Laplace continued fraction;
* otherwise: trapezoidal quadrature of ``(i/pi) int exp(-t^2)/(z-t) dt`` with
  the pole correction of Matta and Reichel.  Two node lattices offset by h/2
  are carried and the one farther from ``Re z`` is used, which keeps the pole
  correction from cancelling against a nearby node.

The lower half-plane uses ``w(z) = 2 exp(-z^2) - w(-z)``.
"""

from __future__ import annotations

import math

import numpy as np

from .params import BarrierSpec

TAYLOR_RADIUS = 0.5
CF_RADIUS = 12.0

_SQRT_PI = math.sqrt(math.pi)
_LOG_MAX = math.log(np.finfo(float).max) - 1.0

# Trapezoid step and node count; truncation error ~ exp(-(pi/h)^2) ~ 1e-17.
_H = 0.5
_NODES = 15
_t_int = _H * np.arange(1, _NODES + 1)
_t_half = _H * (np.arange(_NODES) + 0.5)
_wt_int = np.exp(-_t_int**2)
_wt_half = np.exp(-_t_half**2)

_TAYLOR_TERMS = 34
_taylor_coef = np.array([1.0 / math.gamma(n / 2 + 1) for n in range(_TAYLOR_TERMS)])

_CF_DEPTH = 40


class FaddeevaOverflowError(OverflowError):
    """|w(z)| exceeds the double range (deep in the lower half-plane)."""


def _taylor(z):
    iz = 1j * z
    acc = np.full(z.shape, _taylor_coef[-1], dtype=complex)
    for c in _taylor_coef[-2::-1]:
        acc = acc * iz + c
    return acc


def _continued_fraction(z):
    # w(z) = (i/sqrt(pi)) / (z - (1/2)/(z - 1/(z - (3/2)/(z - ...))))
    acc = z.copy()
    for n in range(_CF_DEPTH, 0, -1):
        acc = z - (0.5 * n) / acc
    return 1j / (_SQRT_PI * acc)


def _trapezoid(z):
    x = z.real
    y = z.imag
    frac = np.abs(x / _H - np.round(x / _H))
    half = frac < 0.25
    z2 = z * z
    out = np.empty(z.shape, dtype=complex)

    zi = z[~half]
    if zi.size:
        s = 1.0 / zi + np.sum(
            _wt_int[:, None] * (2.0 * zi) / (z2[~half] - _t_int[:, None] ** 2), axis=0
        )
        out[~half] = (1j * _H / math.pi) * s
    zh = z[half]
    if zh.size:
        s = np.sum(
            _wt_half[:, None] * (2.0 * zh) / (z2[half] - _t_half[:, None] ** 2), axis=0
        )
        out[half] = (1j * _H / math.pi) * s

    # Pole correction, negligible once Im z > pi/h.
    near = y < math.pi / _H
    if np.any(near):
        zn = z[near]
        sign = np.where(half[near], -1.0, 1.0)
        e = np.exp(-2j * math.pi * zn / _H)
        out[near] += 2.0 * np.exp(-zn * zn) / (1.0 - sign * e)
    return out


def _w_upper(z):
    """w on the closed upper half-plane."""
    r = np.abs(z)
    out = np.empty(z.shape, dtype=complex)
    small = r < TAYLOR_RADIUS
    large = r > CF_RADIUS
    mid = ~(small | large)
    if np.any(small):
        out[small] = _taylor(z[small])
    if np.any(large):
        out[large] = _continued_fraction(z[large])
    if np.any(mid):
        out[mid] = _trapezoid(z[mid])
    return out


def _neg_z_squared(z):
    x, y = z.real, z.imag
    return (y - x) * (y + x) - 2j * x * y


def faddeeva_w(z):
    """Faddeeva function ``w(z) = exp(-z^2) erfc(-iz)`` for scalar or array z.

    Raises ``ValueError`` for non-finite input and ``FaddeevaOverflowError``
    when the exact value is not representable as a double.
    """
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError("faddeeva_w requires finite arguments")

    out = np.empty(arr.shape, dtype=complex)
    lower = arr.imag < 0
    small = np.abs(arr) < TAYLOR_RADIUS
    direct = ~lower | small
    if np.any(direct):
        zd = arr[direct]
        sm = np.abs(zd) < TAYLOR_RADIUS
        wd = np.empty(zd.shape, dtype=complex)
        if np.any(sm):
            wd[sm] = _taylor(zd[sm])
        if np.any(~sm):
            wd[~sm] = _w_upper(zd[~sm])
        out[direct] = wd
    refl = ~direct
    if np.any(refl):
        zr = arr[refl]
        expo = _neg_z_squared(zr)
        if np.any(expo.real > _LOG_MAX):
            raise FaddeevaOverflowError("w(z) overflows for Im z << 0")
        out[refl] = 2.0 * np.exp(expo) - _w_upper(-zr)
    return complex(out[0]) if scalar else out


def moshinsky_m(spec: BarrierSpec, x, t, s):
    """Moshinsky function ``M(y_s) = 1/2 exp(i m x^2 / 2 hbar t) w(i y_s)``.

    ``x`` (nm) and ``t`` (fs, strictly positive) broadcast against each other,
    ``s`` is a real or complex wavenumber in nm^-1 and may broadcast as well.
    The exponential carried by the reflection identity never overflows here:
    whenever ``i y_s`` falls in the lower half-plane its real part is negative.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("moshinsky_m requires t > 0; use the initial condition at t = 0")
    hom = spec.hbar_over_m
    c = np.sqrt(1.0 / (2.0 * hom * t))
    y = np.exp(-0.25j * math.pi) * c * (x - hom * s * t)
    phase = np.exp(0.5j * x * x / (hom * t))
    w = faddeeva_w(1j * y)
    return 0.5 * phase * w


def y_argument(spec: BarrierSpec, x, t, s):
    """The Moshinsky argument ``y_s`` for given position, time and wavenumber."""
    hom = spec.hbar_over_m
    t = np.asarray(t, dtype=float)
    return np.exp(-0.25j * math.pi) * np.sqrt(1.0 / (2.0 * hom * t)) * (x - hom * s * t)
