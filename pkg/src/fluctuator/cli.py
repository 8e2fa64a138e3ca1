"""Batch front door: model ingestion, pipeline orchestration, report emission.

Subcommands
    oracle        exact/float DP tables (tau tails, deltas) as CSV
    expand tau0   nu_1..nu_3 coefficients + per-n error table
    expand local  U_j(x) ladder for the conditioned local probabilities
    expand taux   V_j(x) ladder (+ optional polyharmonic certification)
    verify        identity suite: spitzer, duality, leftcont, ladders

Exit codes: 0 all checks pass, 1 check failure, 2 configuration error,
3 resource cap exceeded.  Outputs are deterministic for a fixed config and
seed: JSON keys are sorted, floats printed via repr, CSV decimals at 17
significant digits, no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import basis, conditioned, oracle, polyharmonic, tau0
from .oracle import ResourceCapExceeded, TailNotDecayed
from .walk import LatticeLaw, LawError, law_from_json, lazy_walk, skewed_walk

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3

_BUILTIN_MODELS = {"lazy": lazy_walk, "skewed": skewed_walk}


class ConfigError(Exception):
    pass


def _threads_from_env() -> int:
    raw = os.environ.get("FLUCTUATOR_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FLUCTUATOR_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError("FLUCTUATOR_THREADS must be >= 1")
    return n


def _load_model(spec: str) -> LatticeLaw:
    if spec in _BUILTIN_MODELS:
        return _BUILTIN_MODELS[spec]()
    if not Path(spec).exists():
        raise ConfigError(f"model file not found: {spec}")
    return law_from_json(spec)


def _num(value: float, provenance: str, error: float | None = None) -> dict:
    """Annotated numeric for JSON output."""
    out = {"value": float(value), "provenance": provenance}
    if error is not None:
        out["error_estimate"] = float(error)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_oracle(args) -> int:
    law = _load_model(args.model)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x = args.x
    tail = oracle.tau_tail(law, x, args.horizon, mode=args.mode)
    path = out_dir / f"oracle_tau{x}.csv"
    if args.mode == "rational":
        rows = [(n, _fmt(float(v)), str(v)) for n, v in enumerate(tail)]
        _write_csv(path, ["n", "value", "rational"], rows)
    else:
        rows = [(n, _fmt(v)) for n, v in enumerate(tail)]
        _write_csv(path, ["n", "value"], rows)
    print(f"wrote {path}")
    return EXIT_PASS


def _cmd_expand_tau0(args) -> int:
    law = _load_model(args.model)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    coeffs = tau0.tau0_coeffs(law, N=args.horizon)
    cross = tau0.tau0_coeffs_halfpow(coeffs.psi)
    src = coeffs.theta_source
    doc = {
        "model": args.model,
        "horizon": args.horizon,
        "nu": {
            f"nu_{ell}": _num(
                coeffs.nu[ell - 1], "dp+" + src, abs(coeffs.nu[ell - 1] - cross[ell - 1])
            )
            for ell in (1, 2, 3)
        },
        "psi": {
            "psi0": _num(coeffs.psi.psi0, "dp"),
            "psi1": _num(coeffs.psi.psi1, "dp"),
            "psi2": _num(coeffs.psi.psi2, "dp"),
            "theta1": _num(coeffs.psi.theta1, src),
            "theta2": _num(coeffs.psi.theta2, src),
        },
        "diagnostics": {"remainder_decay_exponent": coeffs.psi.tail_decay_exponent},
    }
    _write_json(out_dir / "coeffs.json", doc)

    truth = oracle.tau_tail(law, 0, args.horizon, mode="float")
    approx = {t: tau0.evaluate_tau0(coeffs, args.horizon, t) for t in range(1, args.terms + 1)}
    header = ["n", "dp"] + [f"approx_{t}" for t in approx] + [f"err_{t}" for t in approx]
    rows = []
    for n in range(1, args.horizon + 1):
        row = [n, _fmt(truth[n])]
        row += [_fmt(approx[t][n]) for t in approx]
        row += [_fmt(abs(truth[n] - approx[t][n])) for t in approx]
        rows.append(row)
    _write_csv(out_dir / "errors.csv", header, rows)
    print(f"wrote {out_dir / 'coeffs.json'} and {out_dir / 'errors.csv'}")
    return EXIT_PASS


def _cmd_expand_local(args) -> int:
    law = _load_model(args.model)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ws = conditioned.make_workspace(law, x_max=args.x_max, N=args.horizon)
    ladder = conditioned.q_ladder(ws, L=2 * args.terms - 1, strict=False)
    doc = {
        "model": args.model,
        "horizon": args.horizon,
        "U": {
            f"U_{j}": {
                str(x): _num(ladder.U(j)[x], "dp") for x in range(1, args.x_max + 1)
            }
            for j in range(1, args.terms + 1)
        },
        "V": {str(x): _num(ladder.V[x], "dp") for x in range(args.x_max + 1)},
    }
    _write_json(out_dir / "local_coeffs.json", doc)

    n_grid = np.unique(np.geomspace(32, args.horizon, 60).astype(int))
    rows = []
    for x in range(1, args.x_max + 1):
        res = conditioned.u_expansion_eval(ws, ladder, x, n_grid, J=args.terms)
        for n, t, a, e in zip(n_grid, res["truth"], res["approx"], res["error"]):
            rows.append([int(n), x, _fmt(t), _fmt(a), _fmt(e)])
    _write_csv(out_dir / "local_errors.csv", ["n", "x", "dp", "approx", "err"], rows)
    print(f"wrote {out_dir / 'local_coeffs.json'} and {out_dir / 'local_errors.csv'}")
    return EXIT_PASS


def _cmd_expand_taux(args) -> int:
    law = _load_model(args.model)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    J = max(args.terms, 1)
    guard = J * max(law.support) + 2  # operator headroom for the defect checks
    ladder = polyharmonic.v_ladder(law, x_max=args.x_max + guard, J=J, N=args.horizon)
    doc = {
        "model": args.model,
        "horizon": args.horizon,
        "nu": {f"nu_{j}": _num(ladder.nu[j - 1], ladder.source) for j in range(1, J + 1)},
        "V": {
            f"V_{j}": {str(x): _num(ladder[j][x], "dp") for x in range(args.x_max + 1)}
            for j in range(1, J + 1)
        },
    }
    if max(law.support) == 1:
        lc = polyharmonic.v_leftcont(law, args.x_max, J)
        doc["V_leftcont"] = {
            f"V_{j}": {str(x): _num(lc[j][x], "analytic") for x in range(args.x_max + 1)}
            for j in range(1, J + 1)
        }
    failures = []
    if args.check_polyharmonic:
        window = (1, args.x_max)
        d1 = polyharmonic.polyharm_defect(law, ladder[1], 1, window)
        checks = {"harmonic_defect_V1": _num(d1, "dp")}
        if d1 > 1e-6:
            failures.append(f"(P-I)V_1 defect {d1:.3e} > 1e-6")
        if J >= 2:
            sign, resid = polyharmonic.v2_identity_residual(law, ladder, window)
            d2 = polyharmonic.polyharm_defect(law, ladder[2], 2, window)
            scale = float(np.max(np.abs(ladder[2][window[0] : window[1] + 1])))
            checks["v2_identity_sign"] = sign
            checks["v2_identity_residual"] = _num(resid, "dp")
            checks["biharmonic_defect_V2_rel"] = _num(d2 / scale, "dp")
            if resid > 1e-2:
                failures.append(f"(P-I)V_2 = c V_1 residual {resid:.3e} > 1e-2")
            if d2 / scale > 1e-2:
                failures.append(f"(P-I)^2 V_2 relative defect {d2 / scale:.3e} > 1e-2")
        doc["polyharmonic_checks"] = checks
    _write_json(out_dir / "taux_coeffs.json", doc)
    print(f"wrote {out_dir / 'taux_coeffs.json'}")
    for msg in failures:
        print(f"FAIL: {msg}")
    return EXIT_CHECK_FAILED if failures else EXIT_PASS


def _cmd_verify(args) -> int:
    law = _load_model(args.model)
    N = args.horizon
    results: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append((name, bool(ok), detail))

    sp = oracle.spitzer_check(law, min(N, 512), mode="rational")
    check("spitzer(rational)", sp == 0, f"max gap {sp}")
    spf = oracle.spitzer_check(law, N, mode="float")
    check("spitzer(float)", spf < 1e-12, f"max gap {spf:.3e}")
    for x in range(1, 4):
        d = oracle.duality_check(law, x, min(N, 256))
        check(f"duality(x={x})", d == 0, f"max gap {d}")
    if max(law.support) == 1:
        lc = oracle.leftcont_check(law, 3, min(N, 256))
        check("leftcont", lc == 0, f"max gap {lc}")

    # tau0 decay ladder
    try:
        coeffs = tau0.tau0_coeffs(law, N=N)
        truth = oracle.tau_tail(law, 0, N, mode="float")
        ns = np.arange(max(N // 16, 64), N + 1)
        for t in (1, 2, 3):
            err = np.abs(truth[ns] - tau0.evaluate_tau0(coeffs, N, t)[ns])
            if (err / truth[ns]).max() <= 1e-9:  # expansion terminates
                check(f"tau0 ladder terms={t}", True, "terminates (float noise)")
                continue
            nz = err > 1e-15
            slope = float(-np.polyfit(np.log(ns[nz]), np.log(err[nz]), 1)[0])
            check(
                f"tau0 ladder terms={t}",
                slope >= t + 0.25,
                f"decay exponent {slope:.3f}",
            )
    except TailNotDecayed as exc:
        check("tau0 ladder", False, str(exc))

    if args.check_polyharmonic:
        x_max = args.x_max
        guard = 2 * max(law.support) + 2
        ladder = polyharmonic.v_ladder(law, x_max=x_max + guard, J=2, N=N)
        d1 = polyharmonic.polyharm_defect(law, ladder[1], 1, (1, x_max))
        check("polyharmonic V1", d1 <= 1e-6, f"defect {d1:.3e}")
        _, resid = polyharmonic.v2_identity_residual(law, ladder, (1, x_max))
        check("polyharmonic V2 identity", resid <= 1e-2, f"residual {resid:.3e}")

    width = max(len(name) for name, _, _ in results)
    ok_all = True
    for name, ok, detail in results:
        ok_all &= ok
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    return EXIT_PASS if ok_all else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(p: argparse.ArgumentParser, horizon: int) -> None:
    p.add_argument("--model", required=True, help="model JSON path or builtin (lazy, skewed)")
    p.add_argument("--horizon", type=int, default=horizon, help="DP horizon N")
    p.add_argument("--mode", choices=("rational", "float"), default="float")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fluctuator", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="exact DP tables")
    _add_common(p, 2048)
    p.add_argument("--x", type=int, default=0, help="start level for tau_x")
    p.set_defaults(func=_cmd_oracle)

    pe = sub.add_parser("expand", help="asymptotic coefficient pipelines")
    esub = pe.add_subparsers(dest="target", required=True)

    p = esub.add_parser("tau0", help="nu_1..nu_3 for P(tau_0 > n)")
    _add_common(p, 8192)
    p.add_argument("--terms", type=int, default=3, choices=(1, 2, 3))
    p.set_defaults(func=_cmd_expand_tau0)

    p = esub.add_parser("local", help="U_j(x) for conditioned local probabilities")
    _add_common(p, 8192)
    p.add_argument("--terms", type=int, default=2, choices=(1, 2))
    p.add_argument("--x-max", type=int, default=20)
    p.set_defaults(func=_cmd_expand_local)

    p = esub.add_parser("taux", help="V_j(x) for P(tau_x > n)")
    _add_common(p, 8192)
    p.add_argument("--terms", type=int, default=2, choices=(1, 2))
    p.add_argument("--x-max", type=int, default=30)
    p.add_argument("--check-polyharmonic", action="store_true")
    p.set_defaults(func=_cmd_expand_taux)

    p = sub.add_parser("verify", help="identity suite")
    _add_common(p, 2048)
    p.add_argument("--x-max", type=int, default=15)
    p.add_argument("--check-polyharmonic", action="store_true")
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_PASS
    try:
        _threads_from_env()
        if args.horizon < 64:
            raise ConfigError("horizon must be >= 64")
        np.random.seed(args.seed % (1 << 32))  # only MC paths consume entropy
        return args.func(args)
    except (ConfigError, LawError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapExceeded as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
