"""Command line front end: ``chiral-einstein {compute,verify,model}``.

Exit status is 0 when every check passes, 1 when some check fails and 2 for
usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import sympy as sp

from .report import Check, Report
from .symcalc import DslError, to_dsl

WHAT = ("curvature", "metric", "torsion", "einstein", "sign", "q-matrix")
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    pass


def _dsl(e) -> str:
    return to_dsl(sp.sympify(e))


def _form_dsl(f) -> list[str]:
    return [_dsl(c) for c in f.comps]


def _definite_field(A, n: int, seed: int):
    from .definite import DefiniteField, NotDefiniteError

    pts = A.chart.sample(n, seed)
    for p in pts:
        try:
            field = DefiniteField(A, p)
        except NotDefiniteError:
            raise CliError(f"connection is not definite at sample point {np.round(p, 6).tolist()}") from None
    return DefiniteField(A, pts[0]), pts


def cmd_compute(scene, target: str, what: str, seed: int = 0, tol: float | None = None) -> Report:
    from . import definite, torsionlin
    from .riemann4 import Metric, ricci, scalar_curvature
    from .so3conn import So3Connection, curvature

    try:
        obj = scene.get(target)
    except KeyError:
        raise CliError(f"no such target {target!r}" + (f"; defined: {', '.join(scene.names)}" if scene.names
                                                        else "")) from None
    rep = Report(f"compute:{what}", seed, tol, metadata={"target": target})
    native = 1e-7
    t = native if tol is None else tol
    if isinstance(obj, Metric):
        if what != "curvature":
            raise CliError(f"'{what}' needs a connection; {target!r} is a metric")
        Ric = ricci(obj)
        rep.metadata["ricci"] = [[_dsl(Ric[i, j]) for j in range(4)] for i in range(4)]
        rep.metadata["scalar"] = _dsl(scalar_curvature(obj, Ric))
        return rep
    if not isinstance(obj, So3Connection):
        raise CliError(f"{target!r} is a section; compute needs a metric or a connection")
    A = obj
    if what == "curvature":
        F = curvature(A)
        rep.metadata["F"] = [_form_dsl(f) for f in F.comps]
        return rep
    if what == "q-matrix":
        from .forms import Form

        Q = definite.q_matrix(curvature(A), Form(4, [sp.Integer(1)]))
        rep.metadata["Q"] = [[_dsl(Q[i, j]) for j in range(3)] for i in range(3)]
        rep.metadata["verdict"] = definite.is_definite(curvature(A), A.chart, seed=seed)
        return rep
    field, pts = _definite_field(A, 8, seed)
    if what == "sign":
        rep.metadata["sign"] = field.sign
        rep.metadata["orientation"] = field.orientation
        return rep
    if what == "metric":
        try:
            data = definite.metric_from_connection(A, pts[0])
            rep.metadata["g_A"] = [[_dsl(data.g_A.matrix[i, j]) for j in range(4)] for i in range(4)]
            rep.metadata["method"] = "symbolic"
        except definite.SymbolicUnavailable:
            gf = field.metric_field()
            rep.metadata["g_A_samples"] = [{"point": p.tolist(), "g": np.asarray(gf(p)).tolist()} for p in pts[:3]]
            rep.metadata["method"] = "numeric"
        return rep
    if what == "torsion":
        res = torsionlin.torsion_residual(field, pts)
        rep.checks.append(Check("torsion", "d_A Sigma_A = 0", res, t, native, {"samples": len(pts)}))
        return rep
    if what == "einstein":
        try:
            er = torsionlin.einstein_check(A, n=8, seed=seed)
        except torsionlin.TorsionError as e:
            raise CliError(str(e)) from None
        meta = {"sign": er.sign, "scalar_curvature": er.scalar_curvature, "rm_plus_eigs": list(er.rm_plus_eigs),
                "method": er.method, "samples": er.n_samples}
        rep.checks.append(Check("einstein.ricci", "Ric(g_A) = 3 s g_A", er.ricci_residual, t, native, meta))
        rep.checks.append(Check("einstein.scalar", "R = 12 s", abs(er.scalar_curvature - er.scalar_target),
                                t, native, {}))
        rep.checks.append(Check("einstein.rm-plus-sign", "s Rm+ positive definite",
                                0.0 if er.rm_plus_definite else 1.0, 0.0, 0.0, {}))
        return rep
    raise CliError(f"unknown quantity {what!r}")


def cmd_verify(suite: str, tol: float | None = None, seed: int = 0, grid: int | None = None) -> Report:
    from .suites import DEFAULT_GRID, UnknownSuiteError, run_suite

    try:
        return run_suite(suite, seed=seed, tol=tol, grid_n=grid or DEFAULT_GRID)
    except UnknownSuiteError as e:
        raise CliError(str(e)) from None


def cmd_model(config: dict | None = None, seed: int | None = None, grid: int | None = None) -> Report:
    from .h4model.grid import ConfigError, GridConfig, coercivity_probe, r_bound_check

    cfg_d = dict(config or {})
    if seed is not None:
        cfg_d["seed"] = seed
    if grid is not None:
        cfg_d.setdefault("n_y", grid)
        cfg_d.setdefault("n_rho", 2 * grid)
    try:
        cfg = GridConfig.from_dict(cfg_d)
    except ConfigError as e:
        raise CliError(f"config error: {e}") from None
    co = coercivity_probe(cfg)
    rb_cfg = GridConfig(**{**cfg.to_dict(), "n_rho": max(8, cfg.n_rho // 2), "n_y": max(4, cfg.n_y // 2), "levels": 1})
    rb = r_bound_check(cfg.samples, cfg.seed, rb_cfg)
    rep = Report("model", cfg.seed, None, metadata={"coercivity": co.to_dict()})
    rep.checks.append(Check("coercivity.positive-stable", "d*d + 4 + R bounded below under refinement",
                            0.0 if co.positive and co.stabilized else 1.0, 0.0, 0.0,
                            {"sigmas": co.sigmas, "variation": co.variation}))
    rep.checks.append(Check("coercivity.control-near-kernel", "expected-negative control d*d - 4",
                            co.control_ratio, 0.05, 0.05, {"control_sigmas": [s for *_, s in co.control_levels]}))
    rep.checks.append(Check("r-bound", "|Ru|^2 <= 1/2 |du|^2", max(0.0, rb.worst_ratio - rb.bound), 0.0, 0.0,
                            {"worst_ratio": rb.worst_ratio, "mean_ratio": rb.mean_ratio,
                             "samples": rb.n_samples, "skipped": rb.n_skipped, "h": rb.h}))
    return rep


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chiral-einstein", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="override every native tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid", type=int, default=None, help="grid size N (y-points; rho uses 2N)")
    common.add_argument("--format", choices=("json", "text"), default="text")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("compute", parents=[common], help="derived objects of a scene target")
    c.add_argument("scene")
    c.add_argument("target")
    c.add_argument("--what", choices=WHAT, default="einstein")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", default="all")
    m = sub.add_parser("model", parents=[common], help="grid experiments for the model operator")
    m.add_argument("--config", default=None, help="JSON grid configuration")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "compute":
            from .scene import load_scene

            try:
                scene = load_scene(args.scene)
            except OSError as e:
                raise CliError(f"cannot read scene: {e}") from None
            rep = cmd_compute(scene, args.target, args.what, args.seed, args.tol)
        elif args.command == "verify":
            rep = cmd_verify(args.suite, args.tol, args.seed, args.grid)
        else:
            cfg = None
            if args.config:
                try:
                    with open(args.config) as fh:
                        cfg = json.load(fh)
                except (OSError, json.JSONDecodeError) as e:
                    raise CliError(f"config error: {e}") from None
                if not isinstance(cfg, dict):
                    raise CliError("config error: config must be a JSON object")
            rep = cmd_model(cfg, args.seed if args.seed else None, args.grid)
    except (CliError, DslError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(rep.render(args.format))
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
