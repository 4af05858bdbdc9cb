"""Command-line interface.

Usage::

    qdres COMMAND [--config FILE] [key=value ...]

Commands: ``solve``, ``scan``, ``threshold``, ``trajectory``, ``oracle`` and
``convergence``.  Settings come from a flat ``key = value`` file (``#``
comments) and are overridden by ``key=value`` arguments.  Results are
printed and, when ``output`` is set, written as ``<output>.tsv`` (delimited
table with a ``#`` metadata block) and ``<output>.json`` (records).

Exit status: 0 success, 1 configuration error, 2 numerical failure.
The worker count for independent series is read from ``QDRES_WORKERS``.
"""

from __future__ import annotations

import argparse
import cmath
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import hamiltonian as ham
from .basis import BasisSpec
from .hamiltonian import ModelParams

log = logging.getLogger("qdres")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

SCAN_COLUMNS = ("beta", "l_perp", "re_eps", "gamma", "re_L", "im_L", "L_r", "label",
                "M", "re_omega", "im_omega")

INTERPRETATION = ("complex entropy: real part read as the physical value, imaginary "
                  "part as its uncertainty")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text):
    return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _int_list(text):
    return [int(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _omega(text):
    t = str(text).strip().lower()
    if t in ("auto", "variational", "trace"):
        return "variational" if t == "auto" else t
    return complex(t.replace(" ", ""))


# key -> (parser, default)
_SCHEMA = {
    "v0": (float, 5.0),
    "beta": (float, 3.0),
    "beta_min": (float, 0.25),
    "beta_max": (float, 8.0),
    "beta_points": (int, 40),
    "beta_spacing": (str, "log"),
    "l_perp": (_float_list, [0.2]),
    "sector": (str, ham.SYMMETRIC),
    "interacting": (_bool, True),
    "m_size": (int, 20),
    "omega": (_omega, "variational"),
    "resonance_arg": (float, -0.3),
    "tol_bound": (float, 1e-6),
    "angle_tol": (float, 0.1),
    "stability_tol": (float, 1e-4),
    "particles": (int, 2),
    "traj_modulus": (float, 0.0),
    "traj_arg_min": (float, -0.6),
    "traj_arg_max": (float, -0.05),
    "traj_points": (int, 12),
    "target": (complex, 0j),
    "m_list": (_int_list, [8, 12, 16, 20]),
    "grid_x_max": (float, 8.0),
    "grid_points": (int, 96),
    "n_states": (int, 6),
    "output": (str, ""),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError as exc:
            raise AttributeError(key) from exc

    def params(self, **override) -> ModelParams:
        kw = dict(v0=self.v0, beta=self.beta, l_perp=self.l_perp[0], sector=self.sector,
                  interacting=self.interacting)
        kw.update(override)
        return ModelParams(**kw)

    def betas(self) -> list[float]:
        if self.beta_spacing == "log":
            b = np.geomspace(self.beta_min, self.beta_max, self.beta_points)
        else:
            b = np.linspace(self.beta_min, self.beta_max, self.beta_points)
        return [float(x) for x in b]

    def classifier(self):
        from .solver import ClassifierConfig

        return ClassifierConfig(self.tol_bound, self.angle_tol, self.stability_tol)

    def metadata(self) -> dict:
        out = {}
        for k in sorted(self.values):
            v = self.values[k]
            if isinstance(v, complex):
                v = [v.real, v.imag]
            out[k] = v
        return out


def parse_config_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = line.split("=", 1)
        raw[k.strip()] = v.strip()
    return raw


def build_config(raw: dict) -> RunConfig:
    values = {k: d for k, (_, d) in _SCHEMA.items()}
    for k, v in raw.items():
        if k not in _SCHEMA:
            raise ConfigError(f"unknown setting {k!r}")
        try:
            values[k] = _SCHEMA[k][0](v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from exc
    _validate(values)
    return RunConfig(values)


def _validate(v):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    for k in ("v0", "beta", "beta_min", "beta_max", "grid_x_max"):
        need(v[k] > 0 and math.isfinite(v[k]), f"{k} must be positive")
    need(v["beta_min"] < v["beta_max"], "beta_min must be below beta_max")
    need(v["beta_points"] >= 1, "beta_points must be >= 1")
    need(v["beta_spacing"] in ("log", "linear"), "beta_spacing must be log or linear")
    need(len(v["l_perp"]) >= 1 and all(x > 0 for x in v["l_perp"]), "l_perp must be positive")
    need(v["sector"] in (ham.SYMMETRIC, ham.ANTISYMMETRIC), "sector must be symmetric or antisymmetric")
    need(1 <= v["m_size"] <= 80, "m_size must lie in [1, 80]")
    need(v["particles"] in (1, 2), "particles must be 1 or 2")
    need(-1.2 < v["resonance_arg"] <= 0, "resonance_arg must lie in (-1.2, 0]")
    need(v["traj_points"] >= 2, "traj_points must be >= 2")
    need(v["traj_arg_min"] < v["traj_arg_max"], "traj_arg_min must be below traj_arg_max")
    need(v["grid_points"] >= 64, "grid_points must be >= 64")
    need(v["n_states"] >= 1, "n_states must be >= 1")
    need(all(m >= 1 for m in v["m_list"]) and v["m_list"] == sorted(v["m_list"]),
         "m_list must be increasing positive integers")
    for k in ("tol_bound", "angle_tol", "stability_tol"):
        need(v[k] > 0, f"{k} must be positive")
    om = v["omega"]
    if isinstance(om, complex):
        need(om.real > 0 and abs(cmath.phase(om)) < math.pi / 2, "omega needs Re > 0")


def workers() -> int:
    env = os.environ.get("QDRES_WORKERS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"QDRES_WORKERS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("QDRES_WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12e}"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(x.real), _jsonable(x.imag)]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) else float(fmt(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_outputs(prefix: str, kind: str, columns, rows, meta: dict, records) -> None:
    """``<prefix>.tsv`` with a ``#`` metadata block and ``<prefix>.json``."""
    if not prefix:
        return
    lines = [f"# qdres {kind}", f"# version: {__version__}"]
    for k in sorted(meta):
        lines.append(f"# {k}: {json.dumps(_jsonable(meta[k]), sort_keys=True)}")
    lines.append("\t".join(columns))
    for r in rows:
        lines.append("\t".join(fmt(v) for v in r))
    with open(prefix + ".tsv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(prefix + ".json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable({"kind": kind, "version": __version__, "metadata": meta,
                             "columns": list(columns), "records": records}),
                  fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_table(path: str):
    """``(metadata, columns, rows)`` from a table written by this module."""
    meta, cols, rows = {}, None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# ") and ": " in line:
                k, v = line[2:].split(": ", 1)
                meta[k] = json.loads(v) if k != "version" else v
            elif line.startswith("#"):
                continue
            elif cols is None:
                cols = line.split("\t")
            else:
                rows.append(line.split("\t"))
    return meta, cols, rows


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _scan_row_values(r):
    return (r.beta, r.l_perp, r.epsilon0.real, r.gamma, r.linear_c.real, r.linear_c.imag,
            r.linear_r, r.label if r.error is None else "failed", r.m_used,
            r.omega_used.real, r.omega_used.imag)


def cmd_solve(cfg: RunConfig, out=sys.stdout) -> int:
    from .model import solve_point, check_quasi1d_validity

    params = cfg.params()
    check_quasi1d_validity(params)
    res = solve_point(params, cfg.m_size, cfg.omega, None, cfg.resonance_arg,
                      classifier=cfg.classifier())
    g, ent = res.ground, res.entropy
    print(f"omega      = {res.omega.real:.10f} {res.omega.imag:+.10f}i", file=out)
    print(f"E1         = {res.e1:.10f}", file=out)
    print(f"epsilon0   = {g.epsilon.real:.10f} {g.epsilon.imag:+.10f}i", file=out)
    print(f"gamma      = {g.gamma:.6e}", file=out)
    print(f"label      = {g.label}", file=out)
    if ent is not None:
        print(f"L (complex)= {ent.linear_c.real:.10f} {ent.linear_c.imag:+.10f}i", file=out)
        print(f"L (real)   = {ent.linear_r:.10f}", file=out)
        print(f"S (vN)     = {ent.von_neumann:.10f}", file=out)
        for q, v in sorted(ent.renyi.items()):
            print(f"S^({q})     = {v:.10f}", file=out)
    meta = cfg.metadata()
    meta.update(omega_used=res.omega, e1=res.e1, interpretation=INTERPRETATION)
    cols = ("index", "re_eps", "im_eps", "norm_ratio")
    states = sorted(res.pairs, key=lambda p: p.epsilon.real)[:cfg.n_states]
    rows = [(i, p.epsilon.real, p.epsilon.imag, p.norm_ratio) for i, p in enumerate(states)]
    rec = {"ground": {"epsilon": g.epsilon, "gamma": g.gamma, "label": g.label,
                      "norm_ratio": g.norm_ratio, "flags": sorted(g.flags)},
           "entropy": None if ent is None else {
               "linear_c": ent.linear_c, "linear_r": ent.linear_r,
               "von_neumann": ent.von_neumann, "renyi": ent.renyi},
           "states": [{"epsilon": p.epsilon, "norm_ratio": p.norm_ratio} for p in states]}
    write_outputs(cfg.output, "solve", cols, rows, meta, rec)
    return EXIT_OK if ent is not None else EXIT_NUMERICAL


def _scan_series(cfg, l_perp):
    from .model import scan_beta

    return scan_beta(cfg.params(l_perp=l_perp), cfg.betas(), cfg.m_size, cfg.omega,
                     cfg.resonance_arg, cfg.classifier())


def cmd_scan(cfg: RunConfig, out=sys.stdout) -> int:
    n = min(workers(), len(cfg.l_perp))
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            series = list(pool.map(lambda lp: _scan_series(cfg, lp), cfg.l_perp))
    else:
        series = [_scan_series(cfg, lp) for lp in cfg.l_perp]
    rows = [r for s in series for r in s]
    table = [_scan_row_values(r) for r in rows]
    print("\t".join(SCAN_COLUMNS), file=out)
    for t in table:
        print("\t".join(fmt(v) for v in t), file=out)
    meta = cfg.metadata()
    meta["interpretation"] = INTERPRETATION
    records = [dict(zip(SCAN_COLUMNS, t), error=r.error) for t, r in zip(table, rows)]
    write_outputs(cfg.output, "scan", SCAN_COLUMNS, table, meta, records)
    return EXIT_NUMERICAL if any(r.failed for r in rows) else EXIT_OK


def cmd_threshold(cfg: RunConfig, out=sys.stdout) -> int:
    from .model import find_threshold

    beta_th = find_threshold(cfg.params(), cfg.beta_min, cfg.beta_max, cfg.m_size)
    print(f"beta_th = {beta_th:.6f}", file=out)
    meta = cfg.metadata()
    write_outputs(cfg.output, "threshold", ("beta_th",), [(beta_th,)], meta,
                  {"beta_th": beta_th})
    return EXIT_OK


def cmd_trajectory(cfg: RunConfig, out=sys.stdout) -> int:
    from .model import variational_omega
    from .solver import alpha_trajectory

    params = cfg.params()
    modulus = cfg.traj_modulus
    if modulus <= 0:
        modulus, _ = variational_omega(params, cfg.m_size, cfg.particles)
    args = np.linspace(cfg.traj_arg_max, cfg.traj_arg_min, cfg.traj_points)
    path = [modulus * cmath.exp(1j * a) for a in args]
    target = cfg.target
    if target == 0:
        from .model import threshold_energy

        target = threshold_energy(params)[0] if cfg.particles == 1 else -2.0 * cfg.v0
    traj = alpha_trajectory(params, cfg.m_size, path, target, particles=cfg.particles)
    speed, est = traj.stagnation()
    cols = ("re_omega", "im_omega", "re_eps", "im_eps", "overlap")
    rows = [(w.real, w.imag, e.real, e.imag, o)
            for w, e, o in zip(traj.omegas, traj.epsilons, traj.overlaps)]
    print("\t".join(cols), file=out)
    for r in rows:
        print("\t".join(fmt(v) for v in r), file=out)
    print(f"# stagnation |d eps/d omega| = {speed:.3e} at eps = {est.real:.8f} "
          f"{est.imag:+.8f}i; spread = {traj.spread():.3e}", file=out)
    meta = cfg.metadata()
    meta.update(stagnation_speed=speed, stagnation_eps=est, spread=traj.spread(),
                ambiguous_steps=[i for i, _ in traj.ambiguous])
    write_outputs(cfg.output, "trajectory", cols, rows, meta,
                  [dict(zip(cols, r)) for r in rows])
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, out=sys.stdout) -> int:
    from .entanglement import analyse_state
    from .model import threshold_energy, variational_omega
    from .oracle import GridSpec, grid_linear_entropy, grid_one_particle
    from .solver import eig_general

    params = cfg.params()
    e1, _ = threshold_energy(params)
    g1 = grid_one_particle(params, GridSpec(cfg.grid_x_max, 2000), k=2)
    rows = [("E1", e1, float(g1[0].real), abs(e1 - g1[0]))]
    om, _ = variational_omega(params, cfg.m_size, 2)
    spec = BasisSpec(om, cfg.m_size)
    pairs = eig_general(ham.assemble_two_particle(spec, params, check=False))
    e2 = pairs[0].epsilon.real
    if e2 < e1:
        ge, gl = grid_linear_entropy(params, GridSpec(cfg.grid_x_max, cfg.grid_points))
        lr = analyse_state(pairs[0], spec, params.sector).linear_r
        rows.append(("E2", e2, ge, abs(e2 - ge)))
        rows.append(("L_r", lr, gl, abs(lr - gl)))
    else:
        print("# two-particle ground state above threshold: grid comparison skipped", file=out)
    cols = ("quantity", "basis", "grid", "delta")
    print("\t".join(cols), file=out)
    for r in rows:
        print("\t".join(fmt(v) for v in r), file=out)
    meta = cfg.metadata()
    meta["omega_used"] = om
    write_outputs(cfg.output, "oracle", cols, rows, meta, [dict(zip(cols, r)) for r in rows])
    return EXIT_OK


def cmd_convergence(cfg: RunConfig, out=sys.stdout) -> int:
    from .solver import convergence_study

    # a fixed frequency; "variational" re-optimises per size, "trace" likewise
    omega = None if cfg.omega == "variational" else cfg.omega
    rows_d = convergence_study(cfg.params(), cfg.m_list, omega=omega)
    cols = ("M", "re_eps", "im_eps", "L_r", "delta_eps", "delta_L_r")
    rows = [(r["m"], r["epsilon"].real, r["epsilon"].imag, r["linear_r"], r["delta_eps"],
             r["delta_linear_r"]) for r in rows_d]
    print("\t".join(cols), file=out)
    for r in rows:
        print("\t".join(fmt(v) for v in r), file=out)
    meta = cfg.metadata()
    meta["omega_used"] = [r["omega"] for r in rows_d]
    write_outputs(cfg.output, "convergence", cols, rows, meta, [dict(zip(cols, r)) for r in rows])
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "scan": cmd_scan,
    "threshold": cmd_threshold,
    "trajectory": cmd_trajectory,
    "oracle": cmd_oracle,
    "convergence": cmd_convergence,
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdres", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("overrides", nargs="*", metavar="key=value")
    ap.add_argument("--config", "-c", help="flat key = value settings file")
    ap.add_argument("--verbose", "-v", action="store_true")
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    ap = make_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = {}
        if ns.config:
            try:
                with open(ns.config, encoding="utf-8") as fh:
                    raw.update(parse_config_text(fh.read()))
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
        for item in ns.overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            k, v = item.split("=", 1)
            raw[k.strip()] = v.strip()
        cfg = build_config(raw)
        workers()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[ns.command](cfg, out)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # precondition violations detected inside the numerics (e.g. bracket)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
