"""Command-line interface: ``steercert {bounds,curve,verify,plan}``.

Exit codes: 0 success, 1 a verification failed, 2 invalid input.

Options can also come from a ``key = value`` file passed with ``--config``;
flags given on the command line take precedence over the file.
"""

import argparse
import io
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import certify_analytic as ca
from . import certify_sdp as sdp
from . import qmat, sampling, sos
from .model import (Family, InvalidParameters, SteeringInequality, ideal_bob_settings, lhs_bound,
                    quantum_bound, target_state, target_theta)

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

DEFAULTS = {
    "family": "three-trusted",
    "alpha": 0.0,
    "beta": 1.0,
    "grid_min": None,
    "grid_max": None,
    "grid_points": 31,
    "tol": sdp.SOLVER_TOL,
    "seed": 0,
    "output": None,
    "workers": None,
    "eps": 0.01,
    "delta": 0.01,
    "figure": "fig2",
    "draws": 100,
    "inject_error": None,
}
_TYPES = {"alpha": float, "beta": float, "grid_min": float, "grid_max": float, "grid_points": int,
          "tol": float, "seed": int, "workers": int, "eps": float, "delta": float, "draws": int}


class UsageError(ValueError):
    pass


def read_config(path: str) -> Dict[str, object]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _TYPES.get(key, str)(value)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--family", help=f"one of {[f.value for f in Family]} (default three-trusted)")
    common.add_argument("--alpha", type=float, help="marginal weight alpha (default 0)")
    common.add_argument("--beta", type=float, help="correlator weight beta (default 1)")
    common.add_argument("--grid-min", type=float, help="first observed value (default LHS bound)")
    common.add_argument("--grid-max", type=float, help="last observed value (default quantum bound)")
    common.add_argument("--grid-points", type=int, help="grid size (default 31)")
    common.add_argument("--tol", type=float, help="SDP solver tolerance (default 1e-6)")
    common.add_argument("--seed", type=int, help="random seed for randomized checks (default 0)")
    common.add_argument("--output", help="write CSV/report here instead of stdout")
    common.add_argument("--workers", type=int, help="worker processes (default: number of CPUs)")

    p = argparse.ArgumentParser(prog="steercert", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("bounds", parents=[common], help="LHS and quantum bounds, target angle")
    c = sub.add_parser("curve", parents=[common], help="figure data as CSV")
    c.add_argument("--figure", choices=("fig2", "fig3", "fig5"), help="which curve (default fig2)")
    v = sub.add_parser("verify", parents=[common], help="SOS identities, relations, certificates")
    v.add_argument("--draws", type=int, help="random draws per SOS identity (default 100)")
    v.add_argument("--inject-error", help="perturb the first weight of this SOS id (negative control)")
    pl = sub.add_parser("plan", parents=[common], help="sample-size plan")
    pl.add_argument("--eps", type=float, help="target infidelity (default 0.01)")
    pl.add_argument("--delta", type=float, help="significance level (default 0.01)")
    return p


def resolve(args: argparse.Namespace) -> Dict[str, object]:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def _inequality(cfg) -> SteeringInequality:
    fam = Family.parse(str(cfg["family"]))
    beta = 1.0 if fam is Family.TILTED_ANALOG else cfg["beta"]
    return SteeringInequality(fam, cfg["alpha"], beta)


def _grid(cfg, lo, hi) -> np.ndarray:
    a = lo if cfg["grid_min"] is None else cfg["grid_min"]
    b = hi if cfg["grid_max"] is None else cfg["grid_max"]
    n = int(cfg["grid_points"])
    if n < 2 or not a < b:
        raise UsageError("need grid_points >= 2 and grid_min < grid_max")
    return np.linspace(a, b, n)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _csv(header, rows) -> str:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_bounds(cfg) -> (int, str):
    ineq = _inequality(cfg)
    out = io.StringIO()
    out.write(f"family        {ineq.family.value}\n")
    out.write(f"alpha         {ineq.alpha!r}\n")
    out.write(f"beta          {ineq.beta!r}\n")
    out.write(f"lhs_bound     {lhs_bound(ineq)!r}\n")
    out.write(f"quantum_bound {quantum_bound(ineq)!r}\n")
    out.write(f"theta         {target_theta(ineq)!r}\n")
    return EXIT_OK, out.getvalue()


def _fig2(cfg):
    alpha = cfg["alpha"]
    ineq = SteeringInequality(Family.TILTED_ANALOG, alpha)
    grid = _grid(cfg, lhs_bound(ineq), quantum_bound(ineq))
    rows = ca.comparison_table(alpha, grid)
    return EXIT_OK, _csv(("observed", "F_DD", "F_1SDI", "F_DI"), rows)


def _fig3(cfg):
    two = SteeringInequality(Family.TWO_TRUSTED, 0.0, 1.0)
    three = SteeringInequality(Family.THREE_TRUSTED, 0.0, 1.0)
    s2 = sampling.default_slope(two)
    s3 = sampling.default_slope(three)
    lo = 0.5 if cfg["grid_min"] is None else cfg["grid_min"]
    hi = 1.0 if cfg["grid_max"] is None else cfg["grid_max"]
    rows = []
    for p in np.linspace(lo, hi, int(cfg["grid_points"])):
        f2 = s2 * (2 * p - 1) * quantum_bound(two) + 1 - s2 * quantum_bound(two)
        f3 = s3 * (2 * p - 1) * quantum_bound(three) + 1 - s3 * quantum_bound(three)
        rows.append((float(p), float(np.clip(f2, 0, 1)), float(np.clip(f3, 0, 1))))
    return EXIT_OK, _csv(("p", "F_two_setting", "F_three_setting"), rows)


def _fig5(cfg):
    ineq = _inequality(cfg)
    if ineq.family is Family.TILTED_ANALOG:
        raise UsageError("fig5 needs a two- or three-setting family")
    grid = _grid(cfg, lhs_bound(ineq), quantum_bound(ineq))
    workers = cfg["workers"] or os.cpu_count() or 1
    rows = sdp.sweep_curve(ineq, target_theta(ineq), grid, cfg["tol"], workers=min(workers, len(grid)))
    solved = sum(1 for r in rows if r[2] == sdp.SdpStatus.OPTIMAL.value)
    code = EXIT_OK if solved >= 0.9 * len(rows) else EXIT_FAIL
    return code, _csv(("observed", "f_min", "status", "dual_gap"), rows)


def cmd_curve(cfg):
    return {"fig2": _fig2, "fig3": _fig3, "fig5": _fig5}[cfg["figure"]](cfg)


def _verify_families():
    return [
        SteeringInequality(Family.TILTED_ANALOG, 0.5),
        SteeringInequality(Family.TWO_TRUSTED, 0.5, 1.5),
        SteeringInequality(Family.TWO_UNTRUSTED, 0.5, 1.5),
        SteeringInequality(Family.THREE_TRUSTED, 0.5, 1.5),
        SteeringInequality(Family.THREE_UNTRUSTED, 0.5, 2.5),
    ]


def verify_report(seed: int = 0, draws: int = 100, inject: Optional[str] = None) -> (bool, str):
    """Run every numerical check; returns (all passed, report text)."""
    if inject is not None and inject not in sos.SOS_IDS:
        raise UsageError(f"unknown SOS id {inject!r}")
    out = io.StringIO()
    failures: List[str] = []

    text, checks = sos.verify_report(draws=draws, seed=seed, inject=inject)
    out.write(text)
    failures += [c.sos_id for c in checks if not c.passed]

    out.write("\nSelf-testing relations at maximal violation:\n")
    for ineq in _verify_families():
        bob = ideal_bob_settings(ineq)
        psi = target_state(target_theta(ineq))
        rel = sos.relation_residuals(ineq, psi, bob)
        _, fid, _ = sos.swap_isometry_output(psi, ineq, bob)
        meas = sos.measurement_selftest_residual(ineq, psi, bob)
        worst = max(max(rel.values()), abs(1 - fid), max(meas.values()))
        ok = worst < sos.RESIDUAL_TOL
        if not ok:
            failures.append(f"relations[{ineq.family.value}]")
        out.write(f"  {ineq.family.value:<16} {'PASS' if ok else 'FAIL'}  worst {worst:.3e}\n")

    out.write("\nExtraction-channel certificates:\n")
    for alpha in (0.0, 0.5, 1.0, 1.5):
        cert = ca.certify_tilted_analog(alpha, strict=False)
        failures += [] if cert.valid else [f"tilted[alpha={alpha:g}]"]
        out.write(f"  tilted alpha={alpha:<4g}  {'PASS' if cert.valid else 'FAIL'}  "
                  f"s={cert.s:.6f} tau={cert.tau:.6f} worst margin {cert.worst_margin:.3e}\n")
    cert = ca.certify_chsh_steering(strict=False)
    failures += [] if cert.valid else ["chsh"]
    out.write(f"  chsh-steering       {'PASS' if cert.valid else 'FAIL'}  s={cert.s:.6f} "
              f"worst margin {cert.worst_margin:.3e}\n")
    cert = ca.certify_three_setting(grid=24, strict=False)
    g1, g2 = cert.extra["g1_margin"], cert.extra["g2_margin"]
    for name, m in (("G1", g1), ("G2", g2)):
        ok = m >= -ca.MARGIN_TOL
        failures += [] if ok else [f"three-setting {name}"]
        out.write(f"  three-setting {name}    {'PASS' if ok else 'FAIL'}  s={cert.s:.6f} margin {m:.3e}\n")

    out.write("\nMoment-matrix pattern on 50 random strategies:\n")
    rng = np.random.default_rng(seed)
    worst_eig, worst_pat = 0.0, 0.0
    for n_set in (2, 3):
        pattern = sdp.build_gamma_pattern(n_set)
        for _ in range(25):
            d = int(rng.integers(2, 5))
            rho = qmat.random_density(2 * d, rng)
            proj = [(np.eye(d) + qmat.random_dichotomic(d, rng)) / 2 for _ in range(n_set)]
            g = sdp.gamma_from_strategy(pattern, rho, proj)
            worst_eig = min(worst_eig, qmat.min_eigenvalue(g))
            worst_pat = max(worst_pat, sdp.pattern_violation(pattern, g))
    ok = worst_eig >= -1e-10 and worst_pat < 1e-10
    failures += [] if ok else ["gamma-pattern"]
    out.write(f"  {'PASS' if ok else 'FAIL'}  min eigenvalue {worst_eig:.3e}, pattern deviation {worst_pat:.3e}\n")

    out.write("\n")
    if failures:
        out.write("FAILED: " + ", ".join(failures) + "\n")
    else:
        out.write("ALL CHECKS PASSED\n")
    return not failures, out.getvalue()


def cmd_verify(cfg):
    ok, text = verify_report(int(cfg["seed"]), int(cfg["draws"]), cfg["inject_error"])
    return (EXIT_OK if ok else EXIT_FAIL), text


def cmd_plan(cfg):
    ineq = _inequality(cfg)
    plan = sampling.sample_count(ineq, cfg["eps"], cfg["delta"])
    out = io.StringIO()
    out.write(f"family     {ineq.family.value}\n")
    out.write(f"regime     {plan.regime.value}")
    out.write(" (order-of-magnitude)\n" if plan.regime is sampling.Regime.QUADRATIC else "\n")
    out.write(f"c          {plan.c!r}\n")
    out.write(f"N          {plan.n_required}\n")
    return EXIT_OK, out.getvalue()


COMMANDS = {"bounds": cmd_bounds, "curve": cmd_curve, "verify": cmd_verify, "plan": cmd_plan}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        code, text = COMMANDS[cfg["command"]](cfg)
    except (InvalidParameters, sampling.InfeasiblePlan, UsageError, ValueError, OSError) as exc:
        print(f"steercert: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if cfg["output"]:
        with open(cfg["output"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
