"""Peak bookkeeping and the observables measured on transmitted time series.

Peaks are located on the sampled grid with ``scipy.signal.find_peaks`` and
refined by a parabola through the three bracketing samples.  Observables that
need more than grid accuracy (``t_p``, the main-front times used for
``delta_t``) are polished further by a bounded scalar search on the exact
density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks as _sp_find_peaks
from scipy.signal import peak_widths

from .barrier import ALPHA_C, delay_time, hartman_time
from .dynamics import DEFAULT_NPOLES, DEFAULT_TOL, ModeSet, TimeSeries, evaluate, psi_free, time_series
from .params import BarrierSpec, ParameterError, derive_scales

# Minimal prominence (normalised density) for a "prominent" peak in a figure
# series; Fresnel ripples behind the front stay below it at x0 = 50 nm.
PROMINENCE_FLOOR = 0.2

# First maximum of the knife-edge (Fresnel) pattern, in units of sqrt(pi hbar t/m).
FRESNEL_FIRST_MAX = 1.2172


class SchemaError(KeyError):
    """Requested column does not exist on the series."""


class MeasurementError(RuntimeError):
    """A peak needed for an observable is missing from its window."""


@dataclass(frozen=True)
class PeakRecord:
    t_peak: float
    value: float
    prominence: float
    width: float
    refined: bool


@dataclass(frozen=True)
class PeakAbsence:
    """Returned instead of a PeakRecord when no peak qualifies."""

    reason: str
    alpha: float
    alpha_c: float = ALPHA_C


@dataclass(frozen=True)
class DeltaReport:
    x0: float
    delta_t: float
    delta_H: float
    t_phi: float
    tau_H: float
    t_front: float = math.nan
    t_front_free: float = math.nan
    npoles: int = 0
    history: tuple = ()

    @classmethod
    def build(cls, spec: BarrierSpec, x0: float, delta_t: float, **extra) -> "DeltaReport":
        d = derive_scales(spec)
        t_phi = delay_time(spec) if spec.tunneling else math.nan
        tau_H = hartman_time(spec)[0] if spec.tunneling else math.nan
        return cls(x0=x0, delta_t=delta_t, delta_H=delta_t + d.t0_free, t_phi=t_phi,
                   tau_H=tau_H, **extra)


@dataclass(frozen=True)
class ForerunnerThresholds:
    """Existence thresholds, relative to the main-front peak value.

    ``shoulder`` is the minimal fractional dip of d(density)/dt before the
    classical arrival; a dip of 1 means the slope reaches zero, i.e. a peak.
    """

    present: float = 0.05
    absent: float = 0.005
    shoulder: float = 0.5


@dataclass(frozen=True)
class ForerunnerReport:
    classification: str
    alpha: float
    alpha_c: float
    predicted: str
    forerunner: Optional[PeakRecord]
    main_front: Optional[PeakRecord]
    relative_prominence: float
    shoulder_depth: float
    x0: float

    def __str__(self):
        return self.classification


# ---------------------------------------------------------------------------
# peaks on sampled data

def _parabola_vertex(t3, y3):
    (t0, t1, t2), (y0, y1, y2) = t3, y3
    d01, d12 = (y1 - y0) / (t1 - t0), (y2 - y1) / (t2 - t1)
    curv = (d12 - d01) / (t2 - t0)
    if not curv < 0:
        return t1, y1
    # y = y1 + s (t - t1) + curv (t - t1)^2 with s the slope at t1
    s = d01 + curv * (t1 - t0)
    tv = t1 - s / (2 * curv)
    tv = min(max(tv, t0), t2)
    return tv, y1 + s * (tv - t1) + curv * (tv - t1) ** 2


def peaks_in(t, y, prominence_floor: float = 0.0) -> list[PeakRecord]:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size == 0:
        raise ParameterError("empty series")
    if prominence_floor < 0:
        raise ParameterError("prominence_floor must be >= 0")
    if t.size < 3:
        return []
    idx, props = _sp_find_peaks(y, prominence=prominence_floor)
    if idx.size == 0:
        return []
    widths = peak_widths(y, idx, rel_height=0.5, prominence_data=(
        props["prominences"], props["left_bases"], props["right_bases"]))
    grid = np.arange(t.size)
    out = []
    for j, i in enumerate(idx):
        tv, yv = _parabola_vertex(t[i - 1:i + 2], y[i - 1:i + 2])
        lo, hi = np.interp([widths[2][j], widths[3][j]], grid, t)
        out.append(PeakRecord(t_peak=float(tv), value=float(yv),
                              prominence=float(props["prominences"][j]),
                              width=float(hi - lo), refined=True))
    return sorted(out, key=lambda p: p.t_peak)


def find_peaks(series: TimeSeries, column: str = "dens_total",
               prominence_floor: float = 0.0) -> list[PeakRecord]:
    """Local maxima of one column with prominence >= floor, ordered by time."""
    try:
        y = series.column(column)
    except KeyError:
        raise SchemaError(f"no column {column!r} on this series") from None
    return peaks_in(series.t, y, prominence_floor)


def polish_peak(f: Callable[[float], float], peak: PeakRecord, t_lo: float, t_hi: float,
                xtol: float = 1e-9) -> PeakRecord:
    """Bounded Brent search for the maximum of ``f`` on [t_lo, t_hi]."""
    res = minimize_scalar(lambda s: -f(s), bounds=(t_lo, t_hi), method="bounded",
                          options={"xatol": xtol * max(1.0, abs(peak.t_peak))})
    # the parabola's value can overshoot the true maximum slightly, so it is
    # not a valid acceptance bar; the bracket endpoints are
    if not res.success or -res.fun < max(f(t_lo), f(t_hi)):
        return peak
    return PeakRecord(t_peak=float(res.x), value=float(-res.fun), prominence=peak.prominence,
                      width=peak.width, refined=True)


def _bracket(t, tp):
    i = int(np.clip(np.searchsorted(t, tp), 1, t.size - 1))
    return t[max(i - 2, 0)], t[min(i + 1, t.size - 1)]


# ---------------------------------------------------------------------------
# front geometry

def arrival_time(spec: BarrierSpec, x0: float) -> float:
    """Classical arrival ``x0 / v_k``."""
    return x0 / derive_scales(spec).v_k


def free_front_time(spec: BarrierSpec, x0: float) -> float:
    """Expected first Fresnel maximum of the free cutoff wave at x0.

    Solves ``v t - x0 = c sqrt(t)`` with ``c = 1.2172 sqrt(pi hbar/m)``.
    """
    v = derive_scales(spec).v_k
    c = FRESNEL_FIRST_MAX * math.sqrt(math.pi * spec.hbar_over_m)
    s = (c + math.sqrt(c * c + 4 * v * x0)) / (2 * v)
    return s * s


def front_window(spec: BarrierSpec, x0: float) -> tuple[float, float]:
    """From the classical arrival to two Fresnel widths past the expected front."""
    v = derive_scales(spec).v_k
    tf = free_front_time(spec, x0)
    w = math.sqrt(math.pi * spec.hbar_over_m * tf) / v
    return arrival_time(spec, x0), tf + 2 * w


def _first_front(t, y) -> Optional[PeakRecord]:
    # Analytic data: any interior maximum above round-off is physical.
    peaks = peaks_in(t, y, 0.0)
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    for p in peaks:
        if p.prominence > 1e-9 * max(scale, 1e-300):
            return p
    return None


def main_front(series: TimeSeries, column: str = "dens_total",
               window: Optional[tuple[float, float]] = None) -> Optional[PeakRecord]:
    """First maximum of ``column`` inside the front window.

    The window opens at the classical arrival time, so the faster forerunner is
    excluded and the Fresnel ripples that follow the front are never chosen.
    """
    lo, hi = window or front_window(series.spec, series.x0)
    sel = (series.t >= lo) & (series.t <= hi)
    if np.count_nonzero(sel) < 3:
        return None
    return _first_front(series.t[sel], series.column(column)[sel])


# ---------------------------------------------------------------------------
# observables

def _series_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def time_domain_resonance(spec: BarrierSpec, tol: float = DEFAULT_TOL,
                          npoles: int = DEFAULT_NPOLES, n_grid: int = 1200,
                          modes: Optional[ModeSet] = None,
                          relative_floor: float = 0.05) -> PeakRecord | PeakAbsence:
    """First prominent peak of the normalised density at the barrier exit.

    Only maxima before the classical transit ``L / v_k`` count; later maxima
    belong to the main front.  ``relative_floor`` is the minimal prominence as
    a fraction of the peak value.
    """
    d = derive_scales(spec)
    modes = modes or ModeSet.build(spec, npoles)
    t_c = arrival_time(spec, spec.L)
    t = _series_grid(min(0.05, 1e-3 * t_c), t_c, n_grid)
    series = time_series(spec, modes, spec.L, t, tol)
    y = series.parts.dens_total
    for p in peaks_in(t, y, 0.0):
        if p.prominence >= relative_floor * p.value:
            lo, hi = _bracket(t, p.t_peak)
            f = lambda s: float(evaluate(spec, modes, spec.L, s, tol).dens_total)
            return polish_peak(f, p, lo, hi)
    return PeakAbsence(reason=f"no maximum of dens_total before t = {t_c:.4g} fs at x0 = L",
                       alpha=d.alpha)


def _measure_delta(spec: BarrierSpec, modes: ModeSet, x0: float, window, tol: float,
                   n_grid: int) -> tuple[float, float, float]:
    lo, hi = window
    t = _series_grid(lo, hi, n_grid)
    series = time_series(spec, modes, x0, t, tol)
    pk = _first_front(t, series.parts.dens_total)
    pf = _first_front(t, series.free_density)
    if pk is None or pf is None:
        which = "dens_total" if pk is None else "dens_free"
        raise MeasurementError(f"no main-front maximum of {which} in [{lo:.6g}, {hi:.6g}] fs")
    f = lambda s: float(evaluate(spec, modes, x0, s, tol, normalize=False).dens_total)
    g = lambda s: float(abs(psi_free(spec, x0, s)) ** 2)
    pk = polish_peak(f, pk, *_bracket(t, pk.t_peak))
    pf = polish_peak(g, pf, *_bracket(t, pf.t_peak))
    return pk.t_peak - pf.t_peak, pk.t_peak, pf.t_peak


def delta_t(spec: BarrierSpec, modes: Optional[ModeSet] = None, x0: float = 1e5,
            window: Optional[tuple[float, float]] = None, tol: float = DEFAULT_TOL,
            n_grid: int = 400, npoles: int = DEFAULT_NPOLES, max_npoles: int = 4096,
            converge: float = 0.01) -> DeltaReport:
    """Shift of the main-front maximum relative to the free wave.

    With ``modes`` given the measurement uses them as is.  Otherwise the pole
    count is doubled from ``npoles`` until two successive estimates agree within
    ``converge`` fs (opaque barriers need thousands of poles).
    """
    if x0 < spec.L:
        raise ParameterError("x0 must lie in the transmitted region x >= L")
    window = window or front_window(spec, x0)
    if modes is not None:
        dt, tk, tf = _measure_delta(spec, modes, x0, window, tol, n_grid)
        return DeltaReport.build(spec, x0, dt, t_front=tk, t_front_free=tf, npoles=len(modes))
    history = []
    n = npoles
    while True:
        ms = ModeSet.build(spec, n)
        dt, tk, tf = _measure_delta(spec, ms, x0, window, tol, n_grid)
        history.append((n, dt))
        if len(history) > 1 and abs(dt - history[-2][1]) < converge:
            break
        if 2 * n > max_npoles:
            break
        n *= 2
    return DeltaReport.build(spec, x0, dt, t_front=tk, t_front_free=tf, npoles=n,
                             history=tuple(history))


def _shoulder_depth(t, y, t_end) -> float:
    """Fractional dip of the slope after its first maximum, up to ``t_end``."""
    sel = t < t_end
    if np.count_nonzero(sel) < 5:
        return 0.0
    g = np.gradient(y[sel], t[sel])
    idx, _ = _sp_find_peaks(g)
    if idx.size == 0:
        return 0.0
    i = idx[0]
    gmax = g[i]
    if not gmax > 0:
        return 0.0
    return float((gmax - g[i:].min()) / gmax)


def forerunner_exists(spec: BarrierSpec, x0: float = 50.0, tol: float = DEFAULT_TOL,
                      npoles: int = DEFAULT_NPOLES, n_grid: int = 1500,
                      thresholds: ForerunnerThresholds = ForerunnerThresholds(),
                      modes: Optional[ModeSet] = None) -> ForerunnerReport:
    """Classify the forerunner at x0 as present, marginal or absent.

    A maximum before the main front with prominence >= ``present`` (relative
    to the main-front value) is present; one between ``absent`` and ``present``
    is marginal.  Without any such maximum, a shoulder (slope dip >=
    ``thresholds.shoulder`` before the classical arrival) is also marginal.
    """
    if x0 < spec.L:
        raise ParameterError("x0 must lie in the transmitted region x >= L")
    d = derive_scales(spec)
    modes = modes or ModeSet.build(spec, npoles)
    _, hi = front_window(spec, x0)
    t = _series_grid(1e-3 * arrival_time(spec, x0), hi, n_grid)
    series = time_series(spec, modes, x0, t, tol)
    y = series.parts.dens_total
    front = main_front(series)
    predicted = "present" if d.alpha > ALPHA_C else "absent"
    t_end = front.t_peak if front else hi
    ref = front.value if front else float(np.max(y))
    early = [p for p in peaks_in(t, y, 0.0) if p.t_peak < min(t_end, arrival_time(spec, x0))]
    best = max(early, key=lambda p: p.prominence, default=None)
    rel = best.prominence / ref if best else 0.0
    depth = _shoulder_depth(t, y, arrival_time(spec, x0))
    if rel >= thresholds.present:
        cls = "present"
    elif rel >= thresholds.absent or depth >= thresholds.shoulder:
        cls = "marginal"
    else:
        cls = "absent"
    return ForerunnerReport(classification=cls, alpha=d.alpha, alpha_c=ALPHA_C,
                            predicted=predicted, forerunner=best, main_front=front,
                            relative_prominence=rel, shoulder_depth=depth, x0=x0)


# ---------------------------------------------------------------------------
# scans

AXES = ("L", "V0", "E", "x0")
OBSERVABLES = ("t_phi", "tau_H", "delta_t", "delta_H", "t_p", "classification")


@dataclass
class ScanRow:
    index: int
    value: float
    status: str
    result: dict = field(default_factory=dict)
    error: str = ""


def _observe(spec: BarrierSpec, observable: str, x0: float, options: dict) -> dict:
    if observable == "t_phi":
        return {"t_phi": delay_time(spec)}
    if observable == "tau_H":
        tau, asym = hartman_time(spec)
        return {"tau_H": tau, "hartman_asymptote": asym}
    if observable in ("delta_t", "delta_H"):
        rep = delta_t(spec, x0=x0, **options)
        return {"delta_t": rep.delta_t, "delta_H": rep.delta_H, "t_phi": rep.t_phi,
                "tau_H": rep.tau_H, "npoles": rep.npoles}
    if observable == "t_p":
        rec = time_domain_resonance(spec, **options)
        if isinstance(rec, PeakAbsence):
            return {"t_p": math.nan, "absent": True}
        return {"t_p": rec.t_peak, "value": rec.value, "absent": False}
    if observable == "classification":
        rep = forerunner_exists(spec, x0, **options)
        return {"classification": rep.classification, "alpha": rep.alpha,
                "predicted": rep.predicted, "relative_prominence": rep.relative_prominence,
                "shoulder_depth": rep.shoulder_depth}
    raise ParameterError(f"unknown observable {observable!r}")


def scan(spec_template: BarrierSpec, axis: str, grid, observable: str,
         x0: Optional[float] = None, **options) -> list[ScanRow]:
    """Evaluate one observable along one parameter axis.

    ``x0`` defaults to ``L`` for t_p, 50 nm for classification and 1e5 nm for
    delta_t/delta_H.  Failures are recorded in the row and the scan goes on.
    """
    if axis not in AXES:
        raise ParameterError(f"axis must be one of {AXES}")
    if observable not in OBSERVABLES:
        raise ParameterError(f"observable must be one of {OBSERVABLES}")
    if axis == "x0" and observable in ("t_phi", "tau_H", "t_p"):
        raise ParameterError(f"{observable} does not depend on x0")
    rows = []
    for i, value in enumerate(np.asarray(grid, dtype=float)):
        try:
            if axis == "x0":
                spec, xx = spec_template, float(value)
            else:
                spec = spec_template.replace(**{axis: float(value)})
                xx = x0
            if xx is None:
                xx = 50.0 if observable == "classification" else 1e5
            result = _observe(spec, observable, xx, options)
            rows.append(ScanRow(i, float(value), "ok", result))
        except Exception as exc:  # recorded per row by contract
            rows.append(ScanRow(i, float(value), "error", {}, f"{type(exc).__name__}: {exc}"))
    return rows
