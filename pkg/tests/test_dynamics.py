import numpy as np
import pytest
from hypothesis import given, strategies as st

from tdtunnel.analysis import find_peaks, front_window, main_front
from tdtunnel.dynamics import (ModeSet, evaluate, forerunner_density, make_grid, psi_free,
                               psi_q, psi_r, stationary_limit, time_series,
                               transmission_magnitude2)
from tdtunnel.params import BarrierSpec, ParameterError, derive_scales

# Crank-Nicolson propagation of the cutoff wave (scripts/crank_nicolson_check.py,
# dx = 0.01 nm, dt = 0.004 fs, absorbing edges), normalised |psi|^2 at x0 = L.
CN_X0_L = {3.0: 1.89387, 5.0: 3.02116, 8.0: 2.05961, 12.0: 0.37747, 16.0: 0.69911, 20.0: 0.74080}
# same run at x0 = 50 nm, around the forerunner peak
CN_X0_50 = {26.0: 0.32387, 35.0: 0.57204, 38.0: 0.59205, 44.0: 0.39835}


def test_matches_crank_nicolson(spec, modes60):
    for t, ref in CN_X0_L.items():
        assert float(evaluate(spec, modes60, spec.L, t).dens_total) == pytest.approx(ref, abs=0.02)
    for t, ref in CN_X0_50.items():
        assert float(evaluate(spec, modes60, 50.0, t).dens_total) == pytest.approx(ref, abs=0.015)


def test_vanishing_barrier_is_free():
    spec = BarrierSpec(V0=1e-16)  # T - 1 is O(V0)
    rng = np.random.default_rng(7)
    x = rng.uniform(spec.L, 200, 20)
    t = rng.uniform(0.1, 500, 20)
    assert np.max(np.abs(psi_q(spec, x, t) - psi_free(spec, x, t))) < 1e-12


@given(st.floats(5.0, 500.0), st.floats(0.01, 5e3))
def test_decomposition_identity(x, t):
    spec = BarrierSpec()
    modes = _shared_modes()
    p = evaluate(spec, modes, x, t, normalize=False)
    assert p.psi == p.psi_q + p.psi_r
    assert abs(p.dens_total - (p.dens_q + p.dens_r + p.interference)) < 1e-12


_cache = {}


def _shared_modes():
    if "m" not in _cache:
        _cache["m"] = ModeSet.build(BarrierSpec(), 60)
    return _cache["m"]


def test_decomposition_at_spec_point(spec, modes60):
    p = evaluate(spec, modes60, 50.0, 20.0)
    assert abs(p.dens_total - (p.dens_q + p.dens_r + p.interference)) < 1e-12


def test_initial_condition(spec, modes60):
    x = spec.L + np.arange(0, 21, 1.0)
    p = evaluate(spec, modes60, x, 1e-4)
    assert np.max(p.dens_total) < 1e-4
    z = evaluate(spec, modes60, x, 0.0)
    assert np.all(z.dens_total == 0)


@pytest.mark.parametrize("x0", [50.0, 1000.0])
def test_long_time_limit(spec, modes60, x0):
    p = evaluate(spec, modes60, x0, 1e6)
    assert float(p.dens_total) == pytest.approx(1.0, abs=1e-3)
    assert abs(p.psi_q - stationary_limit(spec, x0, 1e6)) < 5e-3 * np.sqrt(transmission_magnitude2(spec))
    later = evaluate(spec, modes60, x0, 1e8)
    assert float(later.dens_r) < 0.1 * float(p.dens_r) < 1e-5


def test_free_long_time(spec):
    assert abs(psi_free(spec, 50.0, 1e6)) ** 2 == pytest.approx(1.0, abs=2e-2)
    assert abs(psi_free(spec, 50.0, 1e9)) ** 2 == pytest.approx(1.0, abs=1e-3)
    assert abs(psi_free(spec, 50.0, 1e-6)) ** 2 < 1e-10


def test_free_diffraction_in_time(spec):
    # oscillations about the limit after the classical front
    x0 = 1000.0
    t = np.linspace(0.5, 5, 2000) * x0 / derive_scales(spec).v_k
    y = np.abs(psi_free(spec, x0, t)) ** 2
    assert y.max() > 1.3
    assert np.count_nonzero(np.diff(np.sign(np.diff(y)))) >= 4


def test_time_domain_resonance_is_resonant(spec, modes60):
    p = evaluate(spec, modes60, spec.L, 5.4)
    assert p.dens_r > p.dens_q


def test_truncation_convergence_60_to_120(spec, modes60):
    t = np.linspace(1, 1500, 300)
    m120 = ModeSet.build(spec, 120)
    a = np.abs(psi_r(spec, modes60, 50.0, t)[0]) ** 2
    b = np.abs(psi_r(spec, m120, 50.0, t)[0]) ** 2
    assert np.max(np.abs(a - b)) < 1e-8


def test_block_rule_reports_nonconvergence(spec, modes60):
    value, order, converged = psi_r(spec, modes60, 50.0, 30.0, tol=1e-10)
    assert order == len(modes60) and not converged
    value, order, converged = psi_r(spec, modes60, 50.0, 30.0, tol=1e-1)
    assert converged and order < len(modes60)


@pytest.mark.xfail(strict=True, reason="one pole pair gives 0.374 against 0.434 for the full "
                   "sum (14%); higher poles add constructively at the peak")
def test_one_term_dominance(spec, modes60):
    t = np.linspace(5, 80, 1500)
    full = find_peaks(time_series(spec, modes60, 50.0, t), "dens_r")[0].value
    one = find_peaks(time_series(spec, modes60.truncated(1), 50.0, t), "dens_r")[0].value
    assert one == pytest.approx(full, rel=0.10)


def test_one_term_is_leading(spec, modes60):
    t = np.linspace(5, 80, 1500)
    full = find_peaks(time_series(spec, modes60, 50.0, t), "dens_r")[0].value
    one = find_peaks(time_series(spec, modes60.truncated(1), 50.0, t), "dens_r")[0].value
    assert one == pytest.approx(full, rel=0.2)


@pytest.mark.xfail(strict=True, reason="near the would-be forerunner time |dens_r + I| is "
                   "0.2-0.3 dens_q; the 0.1 bound only holds for t > ~100 fs")
def test_thin_barrier_cancellation_bound():
    spec = BarrierSpec(L=2.0)
    modes = ModeSet.build(spec, 60)
    tr = 50.0 / (spec.hbar_over_m * modes.k[0].real)
    p = evaluate(spec, modes, 50.0, np.array([0.8, 1.0, 1.2]) * tr)
    assert np.all(np.abs(p.dens_r + p.interference) < 0.1 * p.dens_q)


def test_thin_barrier_resonant_bump_cancelled():
    spec = BarrierSpec(L=2.0)
    modes = ModeSet.build(spec, 60)
    t = np.linspace(2, 300, 1500)
    s = time_series(spec, modes, 50.0, t)
    assert find_peaks(s, "dens_r", 1e-4)  # the resonant part still has its bump
    assert not [p for p in find_peaks(s, "dens_total") if p.t_peak < 200]
    late = t > 150
    assert np.all(np.abs(s.parts.dens_r + s.parts.interference)[late] < 0.1 * s.parts.dens_q[late])


def test_forerunner_fades_far_away(spec, modes60):
    t = np.linspace(20, 8000, 4000)
    s = time_series(spec, modes60, 1000.0, t)
    front = main_front(s)
    early = [p for p in find_peaks(s, "dens_total") if p.t_peak < front.t_peak]
    assert early and max(p.value for p in early) < 0.05 * front.value


def test_resonant_overwhelms_opaque():
    spec = BarrierSpec(L=15.0)
    modes = ModeSet.build(spec, 240)
    lo, hi = front_window(spec, 1e5)
    t = np.geomspace(1e3, hi, 600)
    p = evaluate(spec, modes, 1e5, t)
    assert p.dens_r.max() > 100 * p.dens_q.max()


def test_forerunner_formula_kinematics(spec, modes60):
    m1 = modes60.modes[0]
    vr = spec.hbar_over_m * m1.k.real
    peaks = []
    for x0 in (2000.0, 4000.0):
        t = np.linspace(0.5, 1.5, 20001) * x0 / vr
        f = forerunner_density(spec, m1, x0, t)
        assert t[f.argmax()] == pytest.approx(x0 / vr, rel=0.05)
        peaks.append(f.max())
    assert peaks[1] / peaks[0] == pytest.approx(0.5, rel=0.02)


def test_time_series_contract(spec, modes60):
    s = time_series(spec, modes60, 10.0, make_grid(0.0, 10.0, 11))
    assert s.parts.dens_total[0] == 0 and s.free_density[0] == 0
    with pytest.raises(KeyError):
        s.column("nope")
    with pytest.raises(ParameterError):
        time_series(spec, modes60, 10.0, np.array([1.0, 1.0]))
    with pytest.raises(ParameterError):
        time_series(spec, modes60, 1.0, np.array([1.0, 2.0]))
    with pytest.raises(ParameterError):
        evaluate(spec, modes60, 50.0, -1.0)


def test_make_grid():
    g = make_grid(1e-4, 1e3, 100)
    assert np.all(np.diff(g) > 0) and g[0] == 1e-4 and g[-1] == 1e3
    assert np.allclose(make_grid(0, 1, 5), [0, 0.25, 0.5, 0.75, 1])
    assert make_grid(1, 1e4, 7, "log")[3] == pytest.approx(100.0)
    with pytest.raises(ParameterError):
        make_grid(0.0, 1.0, 10, "log")


def test_axis_modes_needed_for_thin_barrier():
    spec = BarrierSpec(L=0.5)
    full = ModeSet.build(spec, 60)
    assert len(full.axis) == 2
    x = spec.L + np.arange(0, 21, 2.0)
    assert np.max(evaluate(spec, full, x, 1e-4).dens_total) < 1e-4
    assert float(evaluate(spec, full, 50.0, 1e6).dens_total) == pytest.approx(1.0, abs=1e-3)
