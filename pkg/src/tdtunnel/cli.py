"""Command-line front end.

    tdtunnel evolve --x0 5 --tmin 0.05 --tmax 60 --nt 1200 --out exit.csv
    tdtunnel poles --npoles 30
    tdtunnel delay --L 0.5
    tdtunnel scan --axis L --values 0.5:18:0.5 --observable delta_t
    tdtunnel critical-opacity -v
    tdtunnel selftest

Settings are resolved as command-line flags > ``--config`` file (plain
``key = value`` lines, ``#`` comments) > built-in defaults.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional, TextIO

import numpy as np

from . import __version__
from .analysis import (AXES, OBSERVABLES, MeasurementError, PeakAbsence, delta_t,
                       forerunner_exists, scan, time_domain_resonance)
from .barrier import (ALPHA_C, _critical_lhs, classify_sign, critical_opacity,
                      critical_residual, delay_report, delay_time_dimensionless,
                      transmission_amplitudes)
from .dynamics import DEFAULT_NPOLES, DEFAULT_TOL, ModeSet, evaluate, make_grid, time_series
from .params import BarrierSpec, ParameterError, derive_scales
from .resonances import PoleSearchError, axis_modes_for, modes_for
from .specfun import faddeeva_w

SCHEMA = 1
CSV_COLUMNS = ("t_fs", "dens_total", "dens_q", "dens_r", "interference", "dens_free", "converged")


@dataclass
class RunConfig:
    V0: float = 0.3
    L: float = 5.0
    E: float = 0.01
    mass_ratio: float = 0.067
    x0: Optional[float] = None  # defaults to L
    tmin: float = 0.05
    tmax: float = 60.0
    nt: int = 1200
    grid: str = "linear"
    npoles: int = DEFAULT_NPOLES
    tol: float = DEFAULT_TOL
    normalize: bool = True
    format: str = "csv"
    out: Optional[str] = None

    def spec(self) -> BarrierSpec:
        return BarrierSpec(V0=self.V0, L=self.L, mass_ratio=self.mass_ratio, E=self.E)

    @property
    def position(self) -> float:
        return self.L if self.x0 is None else self.x0


_CASTS = {f.name: f.type for f in fields(RunConfig)}


def _cast(key: str, raw: str):
    kind = _CASTS[key]
    if "bool" in kind:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ParameterError(f"{key}: expected a boolean, got {raw!r}")
    if "int" in kind:
        return int(raw)
    if "float" in kind:
        return float(raw)
    return raw.strip()


def read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CASTS:
                raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _cast(key, value)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for name in _CASTS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = RunConfig(**values)
    if cfg.grid not in ("linear", "log", "hybrid"):
        raise ParameterError("grid must be linear, log or hybrid")
    if cfg.format not in ("csv", "json"):
        raise ParameterError("format must be csv or json")
    cfg.spec()  # validates the barrier
    return cfg


# ---------------------------------------------------------------------------
# output helpers

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _header(cfg: RunConfig, command: str, deterministic: bool, extra: dict = ()) -> list[str]:
    lines = [f"# tdtunnel {__version__} {command}", f"# schema = {SCHEMA}"]
    if not deterministic:
        lines.append(f"# generated = {_dt.datetime.now(_dt.timezone.utc).isoformat()}")
    for key, value in asdict(cfg).items():
        if key == "out":
            continue  # where the file went is not part of the run
        if key == "x0":
            value = cfg.position
        lines.append(f"# {key} = {value}")
    for key, value in dict(extra).items():
        lines.append(f"# {key} = {value}")
    return lines


def _open_out(cfg: RunConfig) -> TextIO:
    return open(cfg.out, "w", newline="\n") if cfg.out else sys.stdout


def _emit_json(cfg: RunConfig, payload: dict, command: str, deterministic: bool):
    doc = {"schema": SCHEMA, "command": command, "config": asdict(cfg)}
    doc["config"]["x0"] = cfg.position
    del doc["config"]["out"]
    if not deterministic:
        doc["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    doc.update(payload)
    fh = _open_out(cfg)
    try:
        json.dump(doc, fh, indent=2, sort_keys=False, allow_nan=True)
        fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


# ---------------------------------------------------------------------------
# subcommands

def cmd_evolve(cfg: RunConfig, deterministic: bool = False) -> int:
    spec = cfg.spec()
    x0 = cfg.position
    if x0 < spec.L:
        raise ParameterError("x0 must satisfy x0 >= L")
    t = make_grid(cfg.tmin, cfg.tmax, cfg.nt, cfg.grid)
    modes = ModeSet.build(spec, cfg.npoles)
    series = time_series(spec, modes, x0, t, cfg.tol, cfg.normalize)
    cols = [series.t] + [series.column(c) for c in CSV_COLUMNS[1:-1]] + [series.parts.converged]
    if cfg.format == "json":
        rows = [dict(zip(CSV_COLUMNS, (float(r[0]), *map(float, r[1:-1]), bool(r[-1]))))
                for r in zip(*cols)]
        _emit_json(cfg, {"npoles": len(modes), "rows": rows}, "evolve", deterministic)
        return 0
    fh = _open_out(cfg)
    try:
        for line in _header(cfg, "evolve", deterministic, {"npoles_used": len(modes)}):
            fh.write(line + "\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in zip(*cols):
            fh.write(",".join(fmt(v) for v in r) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def pole_records(spec: BarrierSpec, N: int) -> tuple[list[dict], list[dict]]:
    def record(mode):
        p = mode.pole
        return {"n": p.n, "re_k": p.k.real, "im_k": p.k.imag, "eps_eV": p.eps,
                "gamma_eV": p.gamma, "re_u0": mode.u0.real, "im_u0": mode.u0.imag,
                "re_uL": mode.uL.real, "im_uL": mode.uL.imag}
    return [record(m) for m in modes_for(spec, N)], [record(m) for m in axis_modes_for(spec)]


def cmd_poles(cfg: RunConfig, deterministic: bool = False) -> int:
    poles, axis = pole_records(cfg.spec(), cfg.npoles)
    _emit_json(cfg, {"poles": poles, "axis_poles": axis}, "poles", deterministic)
    return 0


def cmd_delay(cfg: RunConfig, alpha: Optional[float] = None, u: Optional[float] = None,
              deterministic: bool = False) -> int:
    if alpha is not None or u is not None:
        if alpha is None or u is None:
            raise ParameterError("direct mode needs both --alpha and --u")
        ratio = delay_time_dimensionless(alpha, u)
        payload = {"mode": "dimensionless", "alpha": alpha, "u": u,
                   "t_phi_over_t0": ratio, "alpha_c": ALPHA_C,
                   "above_critical": alpha > ALPHA_C, "sign_class": classify_sign(ratio, 1e-6)}
    else:
        rep = delay_report(cfg.spec())
        payload = {"mode": "dimensional", **asdict(rep), "above_critical": rep.alpha > ALPHA_C}
    _emit_json(cfg, payload, "delay", deterministic)
    return 0


def parse_values(text: str) -> np.ndarray:
    """``a,b,c`` list or ``start:stop:step`` range (stop included)."""
    if ":" in text:
        start, stop, step = (float(s) for s in text.split(":"))
        if step <= 0 or stop < start:
            raise ParameterError("range needs start <= stop and step > 0")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)
    return np.array([float(s) for s in text.split(",") if s.strip()])


def cmd_scan(cfg: RunConfig, axis: str, values: np.ndarray, observable: str,
             deterministic: bool = False) -> int:
    options = {}
    if observable in ("t_p", "classification"):
        options = {"npoles": cfg.npoles, "tol": cfg.tol}
    rows = scan(cfg.spec(), axis, values, observable, x0=cfg.x0, **options)
    keys = []
    for r in rows:
        keys += [k for k in r.result if k not in keys]
    failed = any(r.status != "ok" for r in rows)
    if cfg.format == "json":
        _emit_json(cfg, {"axis": axis, "observable": observable,
                         "rows": [asdict(r) for r in rows]}, "scan", deterministic)
        return 1 if failed else 0
    fh = _open_out(cfg)
    try:
        for line in _header(cfg, "scan", deterministic, {"axis": axis, "observable": observable}):
            fh.write(line + "\n")
        fh.write(",".join(["index", axis, "status"] + keys + ["error"]) + "\n")
        for r in rows:
            cells = [fmt(r.index), fmt(r.value), r.status]
            cells += [fmt(r.result[k]) if k in r.result else "" for k in keys]
            cells.append('"' + r.error.replace('"', "'") + '"' if r.error else "")
            fh.write(",".join(cells) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 1 if failed else 0


def cmd_critical_opacity(verbose: bool = False, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    a = critical_opacity()
    out.write(f"alpha_c = {a:.16g}\n")
    out.write(f"residual = {critical_residual(a):.3e}\n")
    if verbose:
        out.write(f"bracket = [0.5, 6.0], lhs-1 = [{_critical_lhs(0.5) - 1:.6g}, "
                  f"{_critical_lhs(6.0) - 1:.6g}]\n")
    return 0


def cmd_point(cfg: RunConfig, what: str, deterministic: bool = False) -> int:
    """Single-point analyses: t_p, forerunner classification, delta_t."""
    spec = cfg.spec()
    if what == "tp":
        rec = time_domain_resonance(spec, cfg.tol, npoles=cfg.npoles)
        payload = {"absent": True, **asdict(rec)} if isinstance(rec, PeakAbsence) \
            else {"absent": False, **asdict(rec)}
    elif what == "forerunner":
        x0 = 50.0 if cfg.x0 is None else cfg.x0
        rep = forerunner_exists(spec, x0, cfg.tol, npoles=cfg.npoles)
        payload = asdict(rep)
    else:
        x0 = 1e5 if cfg.x0 is None else cfg.x0
        payload = asdict(delta_t(spec, x0=x0, tol=cfg.tol, npoles=cfg.npoles))
    _emit_json(cfg, payload, what, deterministic)
    return 0


def selftest(out: TextIO | None = None) -> int:
    """Quick numerical health checks; returns the number of failures."""
    out = out or sys.stdout
    from scipy.special import wofz

    checks = []
    rng = np.random.default_rng(12345)
    z = rng.uniform(-10, 10, 400) + 1j * rng.uniform(-10, 10, 400)
    z = z[np.abs(z) <= 10]
    z = z[np.abs(np.imag(z * z)) < 700]
    ref = wofz(z)
    rel = np.max(np.abs(faddeeva_w(z) - ref) / np.abs(ref))
    checks.append(("faddeeva grid vs scipy.special.wofz", rel, 1e-11))

    spec = BarrierSpec()
    k0 = derive_scales(spec).k0
    k = np.linspace(0.01, 3.0, 300) * k0
    T, R = transmission_amplitudes(spec, k)
    checks.append(("unitarity |T|^2 + |R|^2 = 1", np.max(np.abs(abs(T) ** 2 + abs(R) ** 2 - 1)), 1e-12))

    modes = ModeSet.build(spec, DEFAULT_NPOLES)
    parts = evaluate(spec, modes, np.array([5.0, 20.0, 50.0]), np.array([1.0, 20.0, 300.0]))
    ident = np.max(np.abs(parts.dens_total - parts.dens_q - parts.dens_r - parts.interference))
    checks.append(("density decomposition identity", ident, 1e-12))

    xs = spec.L + np.arange(0, 21, 1.0)
    ic = np.max(evaluate(spec, modes, xs, 1e-4).dens_total)
    checks.append(("initial condition at t = 1e-4 fs", ic, 1e-4))

    fails = 0
    for name, value, limit in checks:
        ok = bool(value < limit)
        fails += not ok
        out.write(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} (limit {limit:.0e})\n")
    return fails


# ---------------------------------------------------------------------------
# argument parsing

def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("barrier and numerics")
    g.add_argument("--V0", type=float, help="barrier height, eV (default 0.3)")
    g.add_argument("--L", type=float, help="barrier width, nm (default 5)")
    g.add_argument("--E", type=float, help="incidence energy, eV (default 0.01)")
    g.add_argument("--mass-ratio", dest="mass_ratio", type=float, help="m*/m_e (default 0.067)")
    g.add_argument("--x0", type=float, help="observation point, nm")
    g.add_argument("--tmin", type=float)
    g.add_argument("--tmax", type=float)
    g.add_argument("--nt", type=int)
    g.add_argument("--grid", choices=["linear", "log", "hybrid"])
    g.add_argument("--npoles", type=int)
    g.add_argument("--tol", type=float)
    norm = g.add_mutually_exclusive_group()
    norm.add_argument("--normalize", dest="normalize", action="store_const", const=True)
    norm.add_argument("--raw", dest="normalize", action="store_const", const=False)
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--out", metavar="PATH")
    g.add_argument("--config", metavar="FILE", help="key = value defaults file")
    g.add_argument("--deterministic", action="store_true",
                   help="omit the timestamp so repeated runs are byte-identical")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdtunnel", description="Transient tunneling of a cutoff plane wave.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("evolve", help="time series of the transmitted density"))
    _common(sub.add_parser("poles", help="resonance poles and boundary amplitudes (JSON)"))
    d = sub.add_parser("delay", help="phase delay and Hartman time (JSON)")
    _common(d)
    d.add_argument("--alpha", type=float, help="opacity, dimensionless direct mode")
    d.add_argument("--u", type=float, help="V0/E, dimensionless direct mode")
    s = sub.add_parser("scan", help="observable along one parameter axis")
    _common(s)
    s.add_argument("--axis", choices=AXES, required=True)
    s.add_argument("--values", required=True, help="a,b,c or start:stop:step")
    s.add_argument("--observable", choices=OBSERVABLES, required=True)
    c = sub.add_parser("critical-opacity", help="solve for alpha_c")
    c.add_argument("-v", "--verbose", action="store_true")
    for name, text in (("tp", "time-domain resonance peak at x0 = L"),
                       ("forerunner", "forerunner classification (default x0 = 50 nm)"),
                       ("deltat", "main-front shift (default x0 = 1e5 nm)")):
        _common(sub.add_parser(name, help=text))
    sub.add_parser("selftest", help="numerical health checks")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "critical-opacity":
            return cmd_critical_opacity(args.verbose)
        if args.command == "selftest":
            return 1 if selftest() else 0
        cfg = resolve_config(args)
        det = args.deterministic
        if args.command == "evolve":
            return cmd_evolve(cfg, det)
        if args.command == "poles":
            return cmd_poles(cfg, det)
        if args.command == "delay":
            return cmd_delay(cfg, args.alpha, args.u, det)
        if args.command == "scan":
            return cmd_scan(cfg, args.axis, parse_values(args.values), args.observable, det)
        return cmd_point(cfg, args.command, det)
    except (ParameterError, MeasurementError, PoleSearchError, OSError) as exc:
        print(f"tdtunnel: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
