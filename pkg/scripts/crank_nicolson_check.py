"""Propagate the cutoff reflecting wave through the barrier by Crank-Nicolson
and compare |psi(x0, t)|^2 with the exact pole-expansion solution.

    python scripts/crank_nicolson_check.py --x0 5 --tmax 30
"""

import argparse
import time

import numpy as np
from scipy.linalg import solve_banded

from tdtunnel.dynamics import ModeSet, evaluate
from tdtunnel.params import BarrierSpec, CONSTANTS, derive_scales


def propagate(spec, x0s, times, dx=0.01, dt=0.004, left=-400.0, right=400.0, absorb=100.0):
    d = derive_scales(spec)
    hbar = CONSTANTS.hbar
    x = np.arange(left, right + dx / 2, dx)
    V = np.where((x >= 0) & (x <= spec.L), spec.V0, 0.0).astype(complex)
    # absorbing layers at both ends; the left one sits behind a smooth taper
    W = np.zeros_like(x)
    r = x > right - absorb
    W[r] = 0.05 * ((x[r] - (right - absorb)) / absorb) ** 2
    l = x < left + absorb
    W[l] = 0.05 * (((left + absorb) - x[l]) / absorb) ** 2
    V = V - 1j * W
    psi = np.where(x <= 0, np.exp(1j * d.k * x) - np.exp(-1j * d.k * x), 0)
    taper = 0.5 * (1 + np.tanh((x - (left + absorb + 60)) / 20))
    psi = psi * taper
    c = spec.hbar2_over_2m / dx**2
    # H = -c (psi_{j+1} - 2 psi_j + psi_{j-1}) + V psi ; (1 + i dt H/2hbar) psi' = (1 - i dt H/2hbar) psi
    a = 1j * dt / (2 * hbar)
    diag = 1 + a * (2 * c + V)
    off = -a * c * np.ones(x.size - 1)
    ab = np.zeros((3, x.size), dtype=complex)
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    idx = [int(round((x0 - left) / dx)) for x0 in x0s]
    out = np.zeros((len(times), len(x0s)))
    t = 0.0
    j = 0
    while j < len(times):
        rhs = (1 - a * (2 * c + V)) * psi
        rhs[1:] += a * c * psi[:-1]
        rhs[:-1] += a * c * psi[1:]
        psi = solve_banded((1, 1), ab, rhs)
        t += dt
        while j < len(times) and t >= times[j] - 1e-9:
            out[j] = np.abs(psi[idx]) ** 2
            j += 1
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--x0", type=float, nargs="+", default=[5.0, 20.0])
    p.add_argument("--tmax", type=float, default=30.0)
    p.add_argument("--dx", type=float, default=0.01)
    p.add_argument("--dt", type=float, default=0.004)
    args = p.parse_args()
    spec = BarrierSpec()
    times = np.arange(1.0, args.tmax + 1e-9, 1.0)
    start = time.time()
    num = propagate(spec, args.x0, times, dx=args.dx, dt=args.dt)
    modes = ModeSet.build(spec, 120)
    Tk2 = evaluate(spec, modes, spec.L, 1.0, normalize=False).dens_total / \
        evaluate(spec, modes, spec.L, 1.0).dens_total
    print(f"# CN run {time.time() - start:.1f} s; columns: t, then (numeric, exact) per x0, normalised")
    for i, t in enumerate(times):
        row = [f"{t:6.1f}"]
        for j, x0 in enumerate(args.x0):
            ex = float(evaluate(spec, modes, x0, t).dens_total)
            row.append(f"{num[i, j] / Tk2:10.5f} {ex:10.5f}")
        print("  ".join(row))


if __name__ == "__main__":
    main()
