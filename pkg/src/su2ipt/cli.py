"""Command-line interface.

Every command echoes its resolved configuration, prints exact rationals as
p/q, and supports --json for machine output. Exit codes encode verdicts:
0 for success or feasible, 1 for infeasible or not-perfect results, 2 for
usage errors. With --no-meta the JSON output is byte-identical across runs
of the same argv.
"""

import argparse
import json
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, bridge, certify, master, repart, su2, tensors
from .errors import ParseError, Su2IptError

__all__ = ["main", "run", "parse_spin_list"]


def parse_spin_list(text):
    """Parse a comma-separated spin list like "1/2,1,3/2" into twice-ints."""
    if not text:
        raise ParseError("empty spin list (position 1)")
    out = []
    for pos, token in enumerate(text.split(","), start=1):
        try:
            out.append(su2.parse_spin(token.strip()))
        except Su2IptError as e:
            raise ParseError(
                f"bad spin {token.strip()!r} at position {pos}: {e}"
            ) from None
    return tuple(out)


def _fmt(x):
    """Exact rationals as p/q; floats trimmed; complex as a+bi."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator > 1 else str(x.numerator)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, complex):
        return f"{x.real:.12g}{x.imag:+.12g}i"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _emit(args, config, result, text_lines, exit_code):
    if args.json:
        doc = {"config": config, "result": result}
        if not args.no_meta:
            doc["meta"] = {
                "tool": f"su2ipt {__version__}",
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            }
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        print("config:", " ".join(f"{k}={v}" for k, v in sorted(config.items())))
        for line in text_lines:
            print(line)
    return exit_code


def _cmd_theta(args):
    path = parse_spin_list(args.path)
    config = {"command": "theta", "path": args.path, "path2": args.path2}
    if args.path2 is not None:
        path2 = parse_spin_list(args.path2)
        value = bridge.theta(path, path2)
    else:
        value = bridge.theta_single(path)
    result = {"theta": _fmt(value)}
    return _emit(args, config, result, [_fmt(value)], 0)


def _cmd_basis(args):
    valence = args.valence
    n1 = args.split if args.split is not None else valence // 2
    config = {"command": "basis", "valence": valence, "split": n1}
    labels = bridge.bridge_basis(valence, n1)
    rows = [
        {"label": m.text(), "bridge": su2.format_spin(m.bridge),
         "theta": _fmt(bridge.theta_label(m))}
        for m in labels
    ]
    lines = [f"{len(labels)} bridge labels for valence {valence}, split {n1}"]
    lines += [f"  {r['label']}   theta = {r['theta']}" for r in rows]
    return _emit(args, config, {"labels": rows}, lines, 0)


def _cmd_master(args):
    valence = args.valence
    n1 = args.split if args.split is not None else valence // 2
    config = {"command": "master", "valence": valence, "split": n1}
    sys_ = master.build_master_system(valence, n1).normalized()
    result = sys_.to_json_dict()
    lines = [f"master system for valence {valence}, split {n1}:"]
    lines += ["  " + eq.text() for eq in sys_.equations]
    if valence == 4 and n1 == 2:
        fam = master.solve_qubit_valence4()
    elif valence == 6 and n1 == 3:
        fam = master.solve_qubit_valence6()
    else:
        fam = None
    if fam is not None:
        result["family"] = fam.to_json_dict()
        lines.append("solution family:")
        for m, form in fam.bound_forms.items():
            lines.append(f"  c[{m.text()}] = {form}")
        lines.append(f"  domain: {fam.domain}")
    return _emit(args, config, result, lines, 0)


def _cmd_repart(args):
    valence = args.valence
    word = args.word
    config = {
        "command": "repart", "valence": valence, "word": word,
        "convention": args.convention,
    }
    if args.convention == "swap":
        perm = repart.word_permutation(valence, word.split())
        mat = repart.numeric_repart_matrix(valence, perm)
        mat = repart.RepartitionMatrix(
            valence, tuple(word.split()), mat.labels, mat.matrix,
            repart.PLAIN,
        )
    else:
        mat = repart.compose(repart.parse_word(valence, word))
    result = mat.to_json_dict()
    result["involution"] = mat.is_involution()
    lines = [f"word {mat.word_text()} on valence {valence}"
             f" ({mat.sign_convention}):"]
    for m, row in zip(mat.labels, mat.matrix):
        lines.append(
            f"  {m.text():28s} " + "  ".join(f"{_fmt(x):>6s}" for x in row)
        )
    lines.append(f"involution: {mat.is_involution()}")
    return _emit(args, config, result, lines, 0)


def _cmd_nogo(args):
    valence = args.valence
    config = {
        "command": "nogo", "valence": valence,
        "restarts": args.restarts, "seed": args.seed,
    }
    trace = repart.algorithm1_run(
        valence, restarts=args.restarts, seed=args.seed
    )
    lines = []
    if not trace.exact:
        lines.append("== numerical evidence only ==")
    for i, step in enumerate(trace.steps, start=1):
        lines.append(f"step {i} [{step.word}]: {step.constraint}")
        for k, v in sorted(step.checks.items()):
            lines.append(f"    {k} = {_fmt(v)}")
    for c in trace.certificate:
        lines.append(f"certificate: {c}")
    lines.append(("feasible: " if trace.feasible else "infeasible: ")
                 + trace.summary.split(": ", 1)[-1])
    return _emit(args, config, trace.to_json_dict(), lines,
                 0 if trace.feasible else 1)


def _cmd_certify(args):
    config = {
        "command": "certify", "file": args.file,
        "tolerance": args.tolerance,
    }
    with open(args.file) as fh:
        t = tensors.from_json_dict(json.load(fh))
    report = certify.certify_perfect(t, tolerance=args.tolerance)
    lines = [
        f"legs: {', '.join(su2.format_spin(x) for x in t.legs)}",
        f"invariance defect: {_fmt(report.invariance)}",
    ]
    for p, lam, defect, _spec in report.per_bipartition:
        lines.append(
            f"  A={p.a}  lambda = {_fmt(lam)}  defect = {_fmt(defect)}"
        )
    lines.append(f"verdict: {report.verdict}")
    return _emit(args, config, report.to_json_dict(), lines,
                 0 if report.verdict == "perfect" else 1)


def _cmd_search(args):
    legs = parse_spin_list(args.path)
    config = {
        "command": "search", "path": args.path,
        "restarts": args.restarts, "seed": args.seed,
        "tolerance": args.tolerance,
    }
    result = certify.search_min_defect(
        legs, restarts=args.restarts, seed=args.seed
    )
    ok = result.best_defect < args.tolerance
    lines = [
        f"best summed defect over {result.restarts} restarts:"
        f" {_fmt(result.best_defect)}",
        "a perfect point was found" if ok else "no perfect point found",
    ]
    return _emit(args, config, result.to_json_dict(), lines, 0 if ok else 1)


def _cmd_layout(args):
    legs = parse_spin_list(args.path)
    config = {"command": "layout", "path": args.path}
    checks = {}
    if len(legs) % 2 == 0:
        checks["even_equal_spins"] = certify.layout_check_even(legs)
    else:
        checks["odd_spin_balance"] = certify.layout_check_odd(legs)
    if len(set(legs)) == 1:
        d = legs[0] + 1
        checks["scott_bound"] = certify.scott_bound(d, len(legs))
    verdict = "pass" if all(v == "pass" for v in checks.values()) else "fail"
    lines = [f"  {k}: {v}" for k, v in sorted(checks.items())]
    lines.append(f"layout verdict: {verdict}")
    result = {"checks": checks, "verdict": verdict}
    return _emit(args, config, result, lines, 0 if verdict == "pass" else 1)


def _cmd_walk(args):
    config = {"command": "walk"}
    report = certify.phase_walk_feasibility()
    lines = [
        f"x = arccos(7/9) = {_fmt(report.x)}",
        f"window around 0: [{_fmt(report.interval_a[0])},"
        f" {_fmt(report.interval_a[1])}]",
        f"window around pi: [{_fmt(report.interval_b[0])},"
        f" {_fmt(report.interval_b[1])}]",
        f"disjoint: {report.disjoint}",
        f"grid min joint residual: {_fmt(report.grid_min_residual)}"
        f" (grid {report.grid_points}^3 per walk)",
        "infeasible: the two relative-phase windows cannot both hold"
        if report.disjoint and report.grid_min_residual > 1e-3
        else "feasible window overlap found",
    ]
    return _emit(args, config, report.to_json_dict(), lines,
                 1 if report.disjoint else 0)


def _build_parser():
    p = argparse.ArgumentParser(
        prog="su2ipt",
        description="invariant perfect tensor toolkit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **flags):
        sp = sub.add_parser(name)
        if flags.get("valence"):
            sp.add_argument("--valence", type=int, required=True)
        if flags.get("split"):
            sp.add_argument("--split", type=int, default=None)
        if flags.get("path"):
            sp.add_argument("--path", required=flags["path"] == "req")
        if flags.get("path2"):
            sp.add_argument("--path2", default=None)
        if flags.get("word"):
            sp.add_argument("--word", default="P*")
        if flags.get("file"):
            sp.add_argument("--file", required=True)
        if flags.get("restarts"):
            sp.add_argument("--restarts", type=int, default=flags["restarts"])
        if flags.get("seed"):
            sp.add_argument("--seed", type=int, default=0)
        if flags.get("tolerance"):
            sp.add_argument("--tolerance", type=float, default=1e-10)
        if flags.get("convention"):
            sp.add_argument(
                "--convention", choices=("binor", "swap"), default="binor"
            )
        sp.add_argument("--json", action="store_true")
        sp.add_argument("--no-meta", dest="no_meta", action="store_true")
        sp.set_defaults(fn=fn)
        return sp

    add("theta", _cmd_theta, path="req", path2=True)
    add("basis", _cmd_basis, valence=True, split=True)
    add("master", _cmd_master, valence=True, split=True)
    add("repart", _cmd_repart, valence=True, word=True, convention=True)
    add("nogo", _cmd_nogo, valence=True, restarts=60, seed=True)
    add("certify", _cmd_certify, file=True, tolerance=True)
    add("search", _cmd_search, path="req", restarts=100, seed=True,
        tolerance=True)
    add("layout", _cmd_layout, path="req")
    add("walk", _cmd_walk)
    return p


def run(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except (Su2IptError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
