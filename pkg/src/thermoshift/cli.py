"""Command-line front end.

Exit codes: 0 success, 1 a verify check failed, 2 configuration or domain
error, 3 resource budget exceeded, 4 numerical failure.  Numbers are printed
with 12 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from thermoshift import config
from thermoshift.edit_metric import check_free_concatenation, check_w_specification, empirical_mistake_function
from thermoshift.errors import (
    ConfigError,
    ConstructionError,
    DomainError,
    InfeasibleError,
    NotFoundError,
    NumericError,
    ResourceError,
)
from thermoshift.measures import Potential, integrate, markov_entropy
from thermoshift.moran import generate_point, make_schedule, track_convergence
from thermoshift.pressure import (
    POWER_TOL,
    PressureEstimate,
    bowen_dimension,
    counting_pressure,
    entropy,
    transfer_pressure,
)
from thermoshift.shift_spaces import SFT, inner_sft_approximation, word_str
from thermoshift.variational import alpha_grid, dimension_spectrum, spectrum_domain, spectrum_legendre
from thermoshift.verify import run_checks

SIG = 12


def num(x):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.{SIG}g}")


def _emit(args, rows: list[dict], summary: dict | None = None) -> None:
    if args.format == "json":
        payload = dict(summary or {})
        if rows:
            payload["rows"] = rows
        print(json.dumps(payload, sort_keys=True, indent=2))
        return
    if rows:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())
    elif summary:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for k in sorted(summary):
            w.writerow([k, summary[k]])
        sys.stdout.write(buf.getvalue())


def _potential(path, p: int, default: float | None = 0.0) -> Potential:
    if path is None:
        if default is None:
            raise ConfigError("a potential file is required")
        return Potential.constant(default, p)
    phi = config.load_potential(path)
    if phi.p != p:
        raise ConfigError(f"potential alphabet {phi.p} does not match the shift alphabet {p}")
    return phi


def _estimate(e: PressureEstimate) -> dict:
    out = {"lower": num(e.lower), "upper": num(e.upper), "method": e.method, "n": e.n}
    if e.oracle is not None:
        out["oracle"] = num(e.oracle)
    return out


# -- commands ---------------------------------------------------------------------


def cmd_entropy(args) -> int:
    X, _ = config.load_shift(args.shift)
    h = entropy(X, n=args.n or 18, m=args.depth or 10, budget=args.budget)
    if isinstance(h, PressureEstimate):
        _emit(args, [], _estimate(h))
    else:
        _emit(args, [], {"value": num(h), "method": "transfer"})
    return 0


def cmd_pressure(args) -> int:
    X, _ = config.load_shift(args.shift)
    phi = _potential(args.potential, X.p)
    if isinstance(X, SFT):
        _emit(args, [], {"value": num(transfer_pressure(X, phi)), "method": "transfer"})
        return 0
    n = args.n or 16
    upper = counting_pressure(X, phi, n, args.budget).upper
    lower = transfer_pressure(inner_sft_approximation(X, args.depth or 10), phi) - POWER_TOL
    _emit(args, [], {"lower": num(min(lower, upper)), "upper": num(upper), "method": "counting+inner-sft", "n": n})
    return 0


def _alphas(args, X, phi, psi) -> list[float]:
    if args.alpha is not None:
        return [args.alpha]
    if args.alpha_grid:
        parts = args.alpha_grid.split(":")
        if len(parts) != 3:
            raise ConfigError("--alpha-grid expects lo:hi:count")
        lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(a) for a in np.linspace(lo, hi, k)]
    Y = X if isinstance(X, SFT) else inner_sft_approximation(X, args.depth or 10)
    return [float(a) for a in alpha_grid(Y, phi, psi)]


def cmd_spectrum(args) -> int:
    X, _ = config.load_shift(args.shift)
    phi = _potential(args.potential, X.p)
    psi = _potential(args.psi, X.p, default=None)
    dom = spectrum_domain(X, psi)
    rows = []
    for a in _alphas(args, X, phi, psi):
        pt = spectrum_legendre(X, phi, psi, a)
        rows.append(
            {
                "alpha": num(a),
                "value": num(pt.value),
                "q": num(pt.q),
                "witness_entropy": None if pt.witness is None else num(markov_entropy(pt.witness)),
                "witness_level": None if pt.witness is None else num(integrate(psi, pt.witness)),
                "boundary": pt.boundary,
            }
        )
    _emit(args, rows, {"alpha_min": num(dom.lower), "alpha_max": num(dom.upper)})
    return 0


def cmd_dimension(args) -> int:
    X, _ = config.load_shift(args.shift)
    phi = _potential(args.potential, X.p, default=None)
    psi = _potential(args.psi, X.p, default=None)
    rows = [{"alpha": num(a), "dimension": num(dimension_spectrum(X, phi, psi, a))} for a in _alphas(args, X, phi, psi)]
    _emit(args, rows)
    return 0


def cmd_bowen(args) -> int:
    X, _ = config.load_shift(args.shift)
    phi = _potential(args.potential, X.p, default=None)
    if not isinstance(X, SFT):
        raise DomainError("the Bowen dimension is computed for SFT configurations")
    _emit(args, [], {"dimension": num(bowen_dimension(X, phi))})
    return 0


def _rle(word) -> str:
    out = []
    i = 0
    while i < len(word):
        j = i
        while j < len(word) and word[j] == word[i]:
            j += 1
        out.append(f"{word[i]}x{j - i}" if j - i > 1 else str(word[i]))
        i = j
    return " ".join(out)


def cmd_moran(args) -> int:
    X, F = config.load_shift(args.shift)
    if args.itinerary is None:
        raise ConfigError("moran-generate needs --itinerary")
    it = config.load_itinerary(X, args.itinerary)
    ok, bad = check_free_concatenation(F, 6)
    if not ok:
        raise ConfigError(f"the good set is not closed under concatenation: {word_str(bad[0])} + {word_str(bad[1])}")
    g = empirical_mistake_function(X, F, 18)
    theta = 0.2 if args.theta is None else args.theta
    sched = make_schedule(it, g, theta, args.length or 10_000)
    pt = generate_point(X, it, sched, F, args.seed)
    rep = track_convergence(pt.prefix, it, sched, args.depth or 4, pt)
    rows = [
        {"j": s.j, "stage": s.stage + 1, "n_j": s.n, "l_j": s.length, "t_j": s.t, "D_j": num(d)}
        for s, (_, d, _) in zip(pt.segments, rep.log)
    ]
    if args.prefix_out:
        with open(args.prefix_out, "w") as fh:
            fh.write(_rle(pt.prefix.word) + "\n")
    summary = {
        "length": len(pt.prefix),
        "seed": args.seed,
        "theta": theta,
        "stages": [{"target": s.target + 1, "n": s.n, "N": s.N, "eps": s.eps, "pool": s.pool} for s in sched.stages],
        "final_distance": num(rep.final()),
        "late_minima": [num(v) for v in rep.summary],
        "counting_rate": num(pt.counting_rate),
        "tail": num(rep.tail),
    }
    if args.format == "json":
        summary["prefix_rle"] = _rle(pt.prefix.word)
    _emit(args, rows, summary)
    return 0


def cmd_edit(args) -> int:
    X, G = config.load_shift(args.shift)
    n_max = args.n or 8
    g = empirical_mistake_function(X, G, n_max)
    rows = [{"n": n, "g": v, "g_over_n": num(r)} for n, v, r in g.table()]
    spec = check_w_specification(G, args.depth or 2, min(n_max, 6))
    free, counter = check_free_concatenation(G, min(n_max, 6))
    summary = {
        "w_specification": {"holds": spec.holds, "max_gap": spec.max_gap, "first_failure": None if spec.first_failure is None else [word_str(w) for w in spec.first_failure]},
        "free_concatenation": {"holds": free, "counterexample": None if counter is None else [word_str(w) for w in counter]},
    }
    _emit(args, rows, summary)
    return 0


def cmd_verify(args) -> int:
    results = run_checks(args.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


COMMANDS = {
    "entropy": cmd_entropy,
    "pressure": cmd_pressure,
    "spectrum": cmd_spectrum,
    "dimension": cmd_dimension,
    "bowen": cmd_bowen,
    "moran-generate": cmd_moran,
    "edit-analyze": cmd_edit,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermoshift", description="Entropy, pressure and multifractal spectra of symbolic systems.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--shift", help="shift definition (JSON)")
    ap.add_argument("--potential", help="potential phi (text table)")
    ap.add_argument("--psi", help="observable psi (text table)")
    ap.add_argument("--itinerary", help="itinerary of target measures (JSON)")
    grid = ap.add_mutually_exclusive_group()
    grid.add_argument("--alpha", type=float)
    grid.add_argument("--alpha-grid", help="lo:hi:count")
    ap.add_argument("--n", type=int, help="word length for counting bounds / table range")
    ap.add_argument("--depth", type=int, help="approximation level, gap bound, or diagnostic depth")
    ap.add_argument("--theta", type=float)
    ap.add_argument("--length", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=("csv", "json"), default="json")
    ap.add_argument("--budget", type=int)
    ap.add_argument("--prefix-out", help="write the generated prefix (run-length encoded) here")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command not in ("verify",) and args.shift is None:
        print("error: --shift is required", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, DomainError, InfeasibleError, NotFoundError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
