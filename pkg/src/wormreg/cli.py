"""Command-line runner.

Exit codes: 0 success, 1 invariant failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, canonical_json, load_config
from .estimates import (
    EstimateReport,
    bound_5_1_constant,
    bound_5_2_sweep,
    lemma2_random,
    prop2_constant,
)
from .geometry import pseudoconvexity_scan
from .mellin import MellinGrid, mellin_forward, mellin_inverse, plancherel_defect
from .operators import GridSpec
from .shooting import EdgeError, ShootingError, exceptional_sobolev, locate_zeros

log = logging.getLogger("wormreg")

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class InvariantFailure(RuntimeError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _envelope(cfg: RunConfig, verb: str, args, payload: dict) -> dict:
    return {
        "verb": verb,
        "version": __version__,
        "config_sha256": cfg.digest(),
        "config": cfg.raw,
        "seed": args.seed,
        **payload,
    }


def _run_tasks(tasks, jobs: int):
    """Run ``(fn, kwargs)`` tasks; output order is the task order for any ``jobs``."""
    if jobs <= 1:
        return [fn(**kw) for fn, kw in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futs = [ex.submit(fn, **kw) for fn, kw in tasks]
        return [f.result() for f in futs]


# ----------------------------------------------------------------------------
# verbs


def cmd_geometry_check(cfg: RunConfig, args, out: Path) -> int:
    sc = cfg.section("scan")
    rep = pseudoconvexity_scan(cfg.worm, int(sc["nx"]), int(sc["nt"]), float(args.tol or sc["tol"]))
    X, T = np.meshgrid(rep.x, rep.t, indexing="ij")
    write_csv(out / "geometry.csv", ["x", "t", "mu", "nu"],
              zip(X.ravel(), T.ravel(), rep.mu.ravel(), np.zeros(rep.mu.size)))
    summary = rep.summary()
    summary["violations_list"] = [list(v) for v in rep.violations[:50]]
    write_json(out / "geometry.json", _envelope(cfg, "geometry-check", args, {"summary": summary}))
    print(json.dumps(rep.summary(), sort_keys=True))
    if not rep.ok:
        raise InvariantFailure(f"{len(rep.violations)} pseudoconvexity violations, min mu {rep.mu_min:.3e}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, args, out: Path) -> int:
    tol = float(args.tol or cfg.section("shooting")["tol"])
    box = tuple(args.box)
    cert = locate_zeros(box, cfg.ode, tol)
    write_json(out / "certificate.json", _envelope(cfg, "spectrum", args, {"certificate": cert.as_dict()}))
    write_csv(out / "zeros.csv", ["re_zeta", "im_zeta", "residual", "multiplicity"],
              [(z["re"], z["im"], z["residual"], z["multiplicity"]) for z in cert.zeros])
    print(json.dumps({"winding": cert.winding, "zeros": len(cert.zeros), "flags": cert.flags}, sort_keys=True))
    if cert.zero_count != cert.winding:
        raise InvariantFailure("located zeros do not account for the winding number")
    return EXIT_OK


def cmd_exceptional(cfg: RunConfig, args, out: Path) -> int:
    tol = float(args.tol or cfg.section("shooting")["tol"])
    res = exceptional_sobolev(args.s_min, args.s_max, args.gamma_max, cfg.ode, tol)
    write_csv(out / "exceptional.csv", ["s", "re_zeta", "im_zeta", "residual"],
              [(r["s"], r["re_zeta"], r["im_zeta"], r["residual"]) for r in res.rows])
    write_json(out / "exceptional.json", _envelope(cfg, "exceptional", args, {
        "strip": res.strip, "rows": res.rows, "certificate": res.certificate.as_dict()}))
    print(json.dumps({"S": res.values}, sort_keys=True))
    return EXIT_OK


def _estimate_tasks(which: str, cfg: RunConfig, args):
    e = cfg.section("estimates")
    c = cfg.ode
    seed = args.seed
    tasks = []
    if which == "lemma2":
        per = 100
        for i in range(10):
            tasks.append((lemma2_random, {"trials": per, "seed": seed * 1000 + i}))
    elif which in ("bound52", "bound51"):
        s = args.s if args.s is not None else 1.0
        gammas = np.linspace(-args.gamma_max, args.gamma_max, args.n_gamma)
        for i, g in enumerate(gammas):
            if which == "bound52":
                tasks.append((bound_5_2_sweep, {"c": c, "s": s, "gammas": [float(g)], "seed": seed * 100003 + i}))
            else:
                tasks.append((bound_5_1_constant, {"c": c, "s": s, "gamma_grid": [float(g)], "seed": seed * 100003 + i}))
    elif which == "prop2":
        g = GridSpec(nx=int(e["nx"]), nt=int(e["nt"]), r=c.r, delta=float(e["delta"]))
        s_lo = args.s_min if args.s_min is not None else float(e["s_min"])
        s_hi = args.s_max if args.s_max is not None else float(e["s_max"])
        for s in np.linspace(s_lo, s_hi, int(args.n_s or e["n_s"])):
            tasks.append((prop2_constant, {"s": float(s), "c": c, "g": g, "trials": int(e["trials"]),
                                           "seed": seed, "max_evals": int(e["max_evals"])}))
    else:
        raise ConfigError(f"unknown estimate: {which}")
    return tasks


def cmd_estimates(cfg: RunConfig, args, out: Path) -> int:
    tasks = _estimate_tasks(args.which, cfg, args)
    parts = _run_tasks(tasks, args.jobs)
    rep: EstimateReport = parts[0]
    for p in parts[1:]:
        rep = rep.merge(p)
    rep.seed = args.seed
    with open(out / f"{args.which}.ndjson", "w", encoding="utf-8") as fh:
        for line in rep.ndjson_lines():
            fh.write(line + "\n")
    key = {"lemma2": "eps", "bound52": "gamma", "bound51": "gamma", "prop2": "s"}[args.which]
    write_csv(out / f"{args.which}.csv", [key, "ratio"],
              [(r.get(key), r.get("ratio") if r.get("ratio") is not None else "N/A") for r in rep.records])
    write_json(out / f"{args.which}.json", _envelope(cfg, "estimates", args, {"report": rep.to_dict()}))
    print(json.dumps({"inequality": rep.inequality, "best_ratio": rep.best_ratio}, sort_keys=True))
    if args.which == "lemma2" and rep.best_ratio is not None and rep.best_ratio > 1.0 + 1e-3:
        raise InvariantFailure(f"lemma2 constant exceeded: {rep.best_ratio:.6f}")
    return EXIT_OK


def cmd_mellin_selftest(cfg: RunConfig, args, out: Path) -> int:
    from scipy.special import gamma as Gamma

    m = cfg.section("mellin")
    grid = MellinGrid.for_span(float(m["y_min"]), float(m["y_max"]), int(m["n_t"]))
    f = grid.t * np.exp(-grid.t)
    F = mellin_forward(f, grid)
    oracle = Gamma(1 - 1j * F.gamma)
    gamma_err = float(np.max(np.abs(F.values - oracle)))
    back = mellin_inverse(F)
    rt_err = float(np.max(np.abs(back - f)))
    pl = plancherel_defect(f, grid)
    write_csv(out / "mellin.csv", ["gamma", "re", "im"], F.to_rows())
    checks = {"gamma_oracle": gamma_err, "round_trip": rt_err, **{f"plancherel_{k}": v for k, v in pl.items()}}
    tol = float(args.tol or 1e-8)
    write_json(out / "mellin.json", _envelope(cfg, "mellin-selftest", args, {"checks": checks, "tol": tol}))
    print(json.dumps(checks, sort_keys=True))
    bad = [k for k, v in checks.items() if not v <= tol]
    if bad:
        raise InvariantFailure(f"Mellin self-test failed: {', '.join(bad)}")
    return EXIT_OK


VERBS = {
    "geometry-check": cmd_geometry_check,
    "spectrum": cmd_spectrum,
    "exceptional": cmd_exceptional,
    "estimates": cmd_estimates,
    "mellin-selftest": cmd_mellin_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON config (default: $WORMREG_CONFIG, else built-in)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-path override, e.g. worm.phi.M=0.3")
    common.add_argument("--out", default="wormreg_out", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="wormreg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("geometry-check", parents=[common], help="Levi form sign scan over the chart")
    sp_ = sub.add_parser("spectrum", parents=[common], help="certified zeros of the shooting function in a box")
    sp_.add_argument("--box", type=float, nargs=4, required=True, metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
    ex = sub.add_parser("exceptional", parents=[common], help="exceptional Sobolev exponents")
    ex.add_argument("--s-min", type=float, default=0.0)
    ex.add_argument("--s-max", type=float, default=6.0)
    ex.add_argument("--gamma-max", type=float, default=1.0)
    es = sub.add_parser("estimates", parents=[common], help="empirical constants of the estimate ladder")
    es.add_argument("--which", choices=["lemma2", "bound52", "bound51", "prop2"], required=True)
    es.add_argument("--s", type=float, default=None, help="line Re zeta for bound52/bound51")
    es.add_argument("--gamma-max", type=float, default=40.0)
    es.add_argument("--n-gamma", type=int, default=41)
    es.add_argument("--s-min", type=float, default=None)
    es.add_argument("--s-max", type=float, default=None)
    es.add_argument("--n-s", type=int, default=None)
    sub.add_parser("mellin-selftest", parents=[common], help="Mellin transform oracle checks")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.overrides)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(canonical_json(cfg.raw) + "\n", encoding="utf-8")
    try:
        return VERBS[args.verb](cfg, args, out)
    except InvariantFailure as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # argument ranges rejected by the library
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ShootingError, EdgeError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
