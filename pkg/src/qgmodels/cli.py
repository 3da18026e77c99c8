"""Command line front end.

Exit codes: 0 pass, 1 numeric failure, 2 usage or parse error. Reports are
JSON (stdout or ``--out``); a short table goes to stderr when it is a terminal.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

import numpy as np

from . import __version__
from .integration import (
    DEFAULT_MEMORY_CAP,
    EXACT_TOL,
    SE_FACTOR,
    MemoryCapError,
    cesaro,
    check_memory,
    character_moment,
    stationarity_defect,
    transfer_matrix,
)
from .magic import latin_enumerate, magic_from_json, magic_to_json, validate_biunitary, validate_magic
from .models import ExactBackend, build_model, parse_model_config
from .report import dumps

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _base_report(command: str, echo: dict) -> dict[str, Any]:
    return {
        "artifact_version": __version__,
        "command": command,
        "model_echo": echo,
        "word": None,
        "p": None,
        "backend": None,
        "M": None,
        "seed": None,
        "defect": None,
        "se": None,
        "verdict": None,
        "moments": [],
        "history": [],
    }


def _load(args) -> tuple[Any, dict]:
    if not args.model:
        raise UsageError("--model FILE is required")
    try:
        with open(args.model, encoding="utf-8") as fh:
            cfg = parse_model_config(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read model file: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if getattr(args, "samples", None) is not None:
        cfg["samples"] = str(args.samples)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = str(args.seed)
    try:
        model, echo = build_model(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    p_max = args.p_max if args.p_max is not None else int(cfg.get("p_max", 2))
    if p_max < 1:
        raise UsageError("--p-max must be >= 1")
    tol = args.tol if args.tol is not None else float(cfg.get("tol", EXACT_TOL))
    echo.update(p_max=p_max, tol=tol)
    args.p_max, args.tol = p_max, tol
    if "cesaro_k" in cfg and getattr(args, "cesaro_k", None) is None:
        args.cesaro_k = int(cfg["cesaro_k"])
    return model, echo


def _backend_fields(report: dict, model):
    report["backend"] = model.backend.kind
    if not isinstance(model.backend, ExactBackend):
        report["M"] = model.backend.samples
        report["seed"] = model.backend.seed


def cmd_stationarity(args) -> tuple[dict, int]:
    model, echo = _load(args)
    check_memory(model.N, args.p_max, DEFAULT_MEMORY_CAP)
    rep = stationarity_defect(model, args.p_max, tol=args.tol, threads=args.threads)
    report = _base_report("stationarity", echo)
    _backend_fields(report, model)
    report["word"] = [d.word for d in rep.depths]
    report["p"] = [d.p for d in rep.depths]
    report["defect"] = [d.defect for d in rep.depths]
    report["se"] = [d.se for d in rep.depths]
    report["verdict"] = rep.verdict
    report["passed"] = rep.passed
    return report, EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_moments(args) -> tuple[dict, int]:
    model, echo = _load(args)
    mode = "streaming" if args.streaming else "materialized"
    echo["mode"] = mode
    if mode == "materialized":
        check_memory(model.N, args.p_max, DEFAULT_MEMORY_CAP)
    moments = [character_moment(model, p, mode, threads=args.threads) for p in range(0, args.p_max + 1)]
    report = _base_report("moments", echo)
    _backend_fields(report, model)
    report["p"] = args.p_max
    report["moments"] = [{"p": m.p, "value": m.value, "se": m.se} for m in moments]
    ok = True
    if args.expect:
        expected = [float(x) for x in args.expect.split(",")]
        echo["expect"] = expected
        for m, e in zip(moments[1:], expected):
            bound = args.tol if m.se is None else SE_FACTOR * m.se
            ok &= abs(m.value - e) <= bound
        report["verdict"] = "moments match expected values" if ok else "moments differ from expected values"
    else:
        report["verdict"] = "computed"
    report["passed"] = ok
    return report, EXIT_PASS if ok else EXIT_FAIL


def cmd_cesaro(args) -> tuple[dict, int]:
    model, echo = _load(args)
    k = args.cesaro_k if args.cesaro_k is not None else 100
    p = args.word_length
    echo.update(cesaro_k=k, word_length=p)
    T = transfer_matrix(model, p, threads=args.threads)
    res = cesaro(T, k)
    report = _base_report("cesaro", echo)
    _backend_fields(report, model)
    report["word"] = T.word
    report["p"] = p
    report["history"] = list(res.history)
    report["cesaro_mean"] = complex(res.mean[0, 0])
    report["defect"] = float(np.abs(res.mean - T.values).max())
    report["verdict"] = "computed"
    report["passed"] = True
    return report, EXIT_PASS


def cmd_latin(args) -> tuple[dict, int]:
    try:
        squares = latin_enumerate(args.n, args.normalization)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = {
        "artifact_version": __version__,
        "command": "latin",
        "model_echo": {"N": args.n, "normalization": args.normalization},
        "count": len(squares),
        "squares": [[list(r) for r in L.entries] for L in squares] if args.list else [],
        "verdict": "computed",
        "passed": True,
    }
    return report, EXIT_PASS


def cmd_evaluate(args) -> tuple[dict, int]:
    model, echo = _load(args)
    point = model.sample_points(args.point + 1, seed=args.seed or 0)[args.point]
    u = model.evaluate(point)
    data = json.loads(magic_to_json(u))
    data["kind"] = model.kind
    return {"artifact_version": __version__, "command": "evaluate", "model_echo": echo, **data}, EXIT_PASS


def cmd_validate(args) -> tuple[dict, int]:
    if not args.input:
        raise UsageError("--input FILE is required")
    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
        data = json.loads(text)
        u = magic_from_json(text)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read evaluation: {exc}") from exc
    tol = args.tol if args.tol is not None else 1e-9
    kind = data.get("kind", "magic") if isinstance(data, dict) else "magic"
    report = {"artifact_version": __version__, "command": "validate", "model_echo": {"kind": kind, "tol": tol}}
    if kind == "magic":
        r = validate_magic(u, tol)
        report.update(projection_residual=r.projection_residual, row_residual=r.row_residual,
                      column_residual=r.column_residual)
    else:
        r = validate_biunitary(u, tol)
        report.update(unitary_residual=r.unitary_residual, transpose_residual=r.transpose_residual)
    report["verdict"] = "valid" if r.passed else "invalid"
    report["passed"] = r.passed
    return report, EXIT_PASS if r.passed else EXIT_FAIL


COMMANDS = {
    "stationarity": cmd_stationarity,
    "moments": cmd_moments,
    "cesaro": cmd_cesaro,
    "latin": cmd_latin,
    "evaluate": cmd_evaluate,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", metavar="FILE", help="model-spec file (key = value)")
    common.add_argument("--p-max", type=int, dest="p_max", help="largest word length")
    common.add_argument("--cesaro-k", type=int, dest="cesaro_k", help="Cesaro depth")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count M")
    common.add_argument("--seed", type=int, help="Monte Carlo seed")
    common.add_argument("--tol", type=float, help="tolerance for exact backends")
    common.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
    common.add_argument("--out", metavar="FILE", help="write the JSON report here instead of stdout")
    common.add_argument("--streaming", action="store_true", help="streaming character moments")

    parser = argparse.ArgumentParser(prog="qgmodels", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("stationarity", parents=[common], help="idempotence defect of T_p for p <= p_max")
    m = sub.add_parser("moments", parents=[common], help="character moments for p <= p_max")
    m.add_argument("--expect", help="comma-separated expected moments for p = 1, 2, ...")
    c = sub.add_parser("cesaro", parents=[common], help="Cesaro means of T_p")
    c.add_argument("--word-length", type=int, default=1, dest="word_length")
    lat = sub.add_parser("latin", parents=[common], help="enumerate Latin squares")
    lat.add_argument("--n", type=int, required=True)
    lat.add_argument("--normalization", choices=("all", "half", "full"), default="half")
    lat.add_argument("--list", action="store_true", help="include the squares themselves")
    ev = sub.add_parser("evaluate", parents=[common], help="serialize the model at one sample point")
    ev.add_argument("--point", type=int, default=0)
    va = sub.add_parser("validate", parents=[common], help="validate a serialized evaluation")
    va.add_argument("--input", metavar="FILE")
    return parser


def _table(report: dict) -> str:
    lines = [f"{report.get('command')}: {report.get('verdict')}"]
    if isinstance(report.get("p"), list):
        for p, w, d, s in zip(report["p"], report["word"], report["defect"], report["se"]):
            lines.append(f"  p={p:<3} word={w or '()':<8} defect={d:.3e}" + (f"  se={s:.3e}" if s is not None else ""))
    for m in report.get("moments") or []:
        lines.append(f"  p={m['p']:<3} moment={m['value']:.12g}" + (f"  se={m['se']:.3g}" if m["se"] is not None else ""))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qgmodels: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MemoryCapError as exc:
        print(f"qgmodels: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = dumps(report) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if sys.stderr.isatty():
        print(_table(report), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
