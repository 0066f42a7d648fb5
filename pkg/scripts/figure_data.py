"""Regenerate the data behind every published curve as flat CSV files.

    python scripts/figure_data.py --out data/            # everything
    python scripts/figure_data.py --out data/ --only exit two_structures

Each product is one CSV with '#' provenance lines.  Times are in fs, densities
are normalised by |T_k|^2 unless the column name says otherwise.
"""

import argparse
import math
import os
import time

import numpy as np

from tdtunnel import __version__
from tdtunnel.analysis import front_window, scan
from tdtunnel.cli import fmt
from tdtunnel.dynamics import (ModeSet, forerunner_density, make_grid, time_series,
                               transmission_magnitude2)
from tdtunnel.params import BarrierSpec, derive_scales

BASE = BarrierSpec()
WIDTHS = np.arange(0.5, 18.0 + 1e-9, 0.5)


def write(path, columns, rows, meta):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# tdtunnel {__version__} figure data\n")
        for key, value in meta.items():
            fh.write(f"# {key} = {value}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _series_rows(s):
    p = s.parts
    return zip(s.t, p.dens_total, p.dens_q, p.dens_r, p.interference, s.free_density)


SERIES_COLUMNS = ("t_fs", "dens_total", "dens_q", "dens_r", "interference", "dens_free")


def _series_product(path, spec, x0, t, note):
    s = time_series(spec, ModeSet.build(spec, 60), x0, t)
    write(path, SERIES_COLUMNS, _series_rows(s),
          {"V0": spec.V0, "L": spec.L, "E": spec.E, "x0": x0, "npoles": 60, "note": note})


def exit_density(path):
    _series_product(path, BASE, BASE.L, make_grid(0.05, 60.0, 1200, "linear"),
                    "density at the barrier exit")


def two_structures(path):
    _series_product(path, BASE, 50.0, np.linspace(1.0, 1500.0, 1500),
                    "forerunner and main front at 50 nm")


def far_front(path):
    _series_product(path, BASE, 1000.0, np.linspace(1.0, 6000.0, 3000),
                    "single dominant front at 1000 nm")


def forerunner_formula(path):
    modes = ModeSet.build(BASE, 60)
    t = np.linspace(10.0, 120.0, 1101)
    s = time_series(BASE, modes, 50.0, t)
    f = forerunner_density(BASE, modes.modes[0], 50.0, t) / transmission_magnitude2(BASE)
    write(path, ("t_fs", "dens_total", "dens_r", "dens_formula"),
          zip(t, s.parts.dens_total, s.parts.dens_r, f),
          {"x0": 50.0, "note": "one-pole forerunner formula against the full solution"})


def opaque(path):
    spec = BASE.replace(L=15.0)
    lo, hi = front_window(spec, 1e5)
    t = np.linspace(0.05 * lo, hi, 4000)
    _series_product(path, spec, 1e5, t, "opaque barrier, resonant part dominates")


def _sweep(path, specs, label):
    t = np.linspace(1.0, 150.0, 1500)
    cols, data = ["t_fs"], [t]
    for spec in specs:
        s = time_series(spec, ModeSet.build(spec, 60), 50.0, t)
        tag = f"{label}{getattr(spec, label):g}"
        cols += [f"dens_total_{tag}", f"dens_q_{tag}", f"dens_r_{tag}", f"interference_{tag}"]
        data += [s.parts.dens_total, s.parts.dens_q, s.parts.dens_r, s.parts.interference]
    write(path, cols, zip(*data), {"x0": 50.0, "note": f"forerunner as {label} varies"})


def width_sweep(path):
    _sweep(path, [BASE.replace(L=L) for L in (5.0, 4.5, 3.0, 2.0)], "L")


def height_sweep(path):
    _sweep(path, [BASE.replace(V0=V) for V in (0.3, 0.2, 0.1)], "V0")


def time_advance(path):
    lo, hi = front_window(BASE, 1000.0)
    _series_product(path, BASE, 1000.0, np.linspace(0.8 * lo, hi + 0.5 * (hi - lo), 2000),
                    "front against the free front at 1000 nm")


def _scan_rows(rows, keys):
    for r in rows:
        yield [r.value, r.status] + [r.result.get(k, math.nan) for k in keys] + [r.error]


def delay_scan(path):
    keys = ("delta_t", "t_phi", "npoles")
    rows = scan(BASE, "L", WIDTHS, "delta_t", x0=1e5)
    alpha = [derive_scales(BASE.replace(L=L)).alpha for L in WIDTHS]
    out = [[a] + r for a, r in zip(alpha, _scan_rows(rows, keys))]
    write(path, ("alpha", "L", "status") + keys + ("error",), out, {"x0": 1e5})


def hartman(path):
    keys = ("delta_H", "tau_H")
    far = list(_scan_rows(scan(BASE, "L", WIDTHS, "delta_H", x0=1e5), keys))
    cols = ["L", "status_far", "delta_H_far", "tau_H", "error_far", "status_exit", "delta_H_exit",
            "error_exit"]
    out = []
    for L, row in zip(WIDTHS, far):
        near = scan(BASE.replace(L=L), "x0", [L], "delta_H")[0]
        out.append(row + [near.status, near.result.get("delta_H", math.nan), near.error])
    write(path, cols, out, {"note": "delta_H at 1e5 nm and at the barrier exit against tau_H"})


PRODUCTS = {
    "exit": exit_density,
    "two_structures": two_structures,
    "far_front": far_front,
    "forerunner_formula": forerunner_formula,
    "opaque": opaque,
    "width_sweep": width_sweep,
    "height_sweep": height_sweep,
    "time_advance": time_advance,
    "delay_scan": delay_scan,
    "hartman": hartman,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data")
    ap.add_argument("--only", nargs="*", choices=sorted(PRODUCTS))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for i, name in enumerate(PRODUCTS, 1):
        if args.only and name not in args.only:
            continue
        t0 = time.perf_counter()
        path = os.path.join(args.out, f"{i:02d}_{name}.csv")
        PRODUCTS[name](path)
        print(f"{path}  ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
