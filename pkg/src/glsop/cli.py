"""Command-line front end.

    glsop theta     --kernel '{"family":"hilbert","m":2}' --p 2,2
    glsop dm-scan   --kernel '{"family":"hardy","m":2}' --grid 1,1.5,2,3,4
    glsop gls-norm  --function '{"family":"trunc_power","alpha":0.2}' --psi '{"family":"power","m":1}'
    glsop beta      --kernel ... --psi psi1.json,psi2.json --norms 1,1 --p-grid 0.5:4:0.1
    glsop certify   --kernel ... --psi ... --functions ... --p-grid 0.6:1.9:0.1
    glsop tail      --function ... --psi ... --t-grid 3,10,100
    glsop verify    --kernel ... --functions ... --p 2,2
    glsop sharpness --kernel ... --p 2,2 --eps 0.1,0.03,0.01

Every subcommand takes ``--config run.json`` (checked against
docs/run_config.schema.json), the quadrature flags ``--rel-tol --abs-tol
--max-evals --seed``, ``--unchecked``, ``--format csv|json`` and
``--output``. Flags given on the command line override the config file.

Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 usage or
configuration error, 3 a numerical verdict was inconclusive. Errors are
also written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import gls, tail, verify
from .beta import beta_curve, certify_theorem
from .theta import UNKNOWN, ExponentVector, dm_scan, theta
from .expr import ExpressionError
from .kernel import KernelError, check_homogeneity, kernel_from_spec
from .quadrature import QuadratureConfig

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

COMMANDS = ("theta", "dm-scan", "gls-norm", "beta", "certify", "tail", "verify", "sharpness")


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# schema and argument parsing
# --------------------------------------------------------------------------

def load_schema() -> dict:
    text = resources.files("glsop").joinpath("run_config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else _fmt(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    return v


def parse_floats(text, what="value") -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"could not read {what} list {text!r}") from None


def parse_grid(text) -> list:
    """``a:b:step`` (both ends included) or a comma list."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid {text!r} must look like start:stop:step")
        try:
            a, b, h = (float(v) for v in parts)
        except ValueError:
            raise UsageError(f"could not read grid {text!r}") from None
        if not h > 0 or b < a:
            raise UsageError(f"grid {text!r} needs step > 0 and stop >= start")
        n = int(math.floor((b - a) / h + 1e-9))
        return [round(a + i * h, 12) for i in range(n + 1)]
    return parse_floats(text, "grid")


def _load_json(text: str):
    text = text.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"invalid JSON: {e}") from None
    path = Path(text)
    if not path.exists():
        raise UsageError(f"no such file: {text}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise UsageError(f"{text}: invalid JSON: {e}") from None


def spec_list(value, m: int, what: str) -> list:
    """A list of m spec dicts from inline JSON, a JSON list or comma-separated files.

    A single dict is repeated m times.
    """
    if value is None:
        return []
    if isinstance(value, dict):
        items = [value]
    elif isinstance(value, list):
        items = value
    else:
        text = str(value).strip()
        if text.startswith("{") or text.startswith("["):
            loaded = _load_json(text)
            items = loaded if isinstance(loaded, list) else [loaded]
        else:
            items = []
            for part in text.split(","):
                loaded = _load_json(part)
                items.extend(loaded if isinstance(loaded, list) else [loaded])
    if len(items) == 1:
        items = items * m
    if len(items) != m:
        raise UsageError(f"expected {m} {what} specs, got {len(items)}")
    for it in items:
        if not isinstance(it, dict):
            raise UsageError(f"each {what} spec must be a JSON object")
    return items


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--rel-tol", type=float)
    common.add_argument("--abs-tol", type=float)
    common.add_argument("--max-evals", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--unchecked", action="store_true", default=None,
                        help="skip the homogeneity gate for parsed kernels")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--output", help="output file (default stdout)")

    parser = _Parser(prog="glsop", description="Sharp constants, Grand Lebesgue norms and "
                     "multilinear inequality checks for homogeneous kernels.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, help_, *opts):
        sp = sub.add_parser(name, parents=[common], help=help_)
        for flag, kw in opts:
            sp.add_argument(flag, **kw)
        return sp

    kernel = ("--kernel", dict(help='kernel spec, e.g. \'{"family":"hilbert","m":2}\''))
    p_vec = ("--p", dict(help="exponents p_1..p_m, comma separated"))
    psi = ("--psi", dict(help="psi specs: inline JSON object/list or comma-separated files"))
    funcs = ("--functions", dict(help="test function specs, same forms as --psi"))
    func = ("--function", dict(help="one test function spec"))
    p_grid = ("--p-grid", dict(help="start:stop:step or comma list"))

    add("theta", "sharp constant at one exponent vector", kernel, p_vec)
    add("dm-scan", "membership of a grid of exponent vectors", kernel,
        ("--grid", dict(help="values per axis, comma list or JSON list of lists")))
    add("gls-norm", "Grand Lebesgue norm of a test function", func, ("--psi", psi[1]))
    add("beta", "composite generating function on a p-grid", kernel, psi,
        ("--norms", dict(help="GLS norms, comma separated (default all 1)")), p_grid)
    add("certify", "check ||M f||_p <= beta(p) on a p-grid", kernel, psi, funcs, p_grid)
    add("tail", "tail bound against the measured tail", func, ("--psi", psi[1]),
        ("--t-grid", dict(help="t values, start:stop:step or comma list")))
    add("verify", "check the multilinear inequality at one exponent vector", kernel, funcs, p_vec,
        ("--tol", dict(type=float, help="relative slack of the check (default 1e-9)")))
    add("sharpness", "near-extremal probe of the sharp constant", kernel, p_vec,
        ("--eps", dict(help="eps schedule, comma separated (default 0.1,0.03,0.01)")))
    return parser


# keys that map argparse destinations to config keys
_ARG_KEYS = {
    "rel_tol": "rel_tol", "abs_tol": "abs_tol", "max_evals": "max_evals", "seed": "seed",
    "unchecked": "unchecked", "format": "format", "output": "output", "kernel": "kernel",
    "p": "p", "grid": "grid", "psi": "psi", "functions": "functions", "function": "function",
    "norms": "norms", "p_grid": "p_grid", "t_grid": "t_grid", "eps": "eps", "tol": "tol",
}


def merge_config(args) -> dict:
    """Config file values overridden by command-line flags, validated by the schema."""
    conf: dict = {}
    if args.config:
        loaded = _load_json(args.config)
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        conf.update(loaded)
    if "command" in conf and conf["command"] != args.command:
        raise UsageError(f"config is for {conf['command']!r}, not {args.command!r}")
    for dest, key in _ARG_KEYS.items():
        v = getattr(args, dest, None)
        if v is None:
            continue
        if key in ("kernel", "function") and isinstance(v, str):
            v = _load_json(v)
        conf[key] = v
    conf["command"] = args.command
    try:
        jsonschema.validate(conf, load_schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(x) for x in e.absolute_path) or "config"
        raise UsageError(f"{where}: {e.message}") from None
    return conf


def quad_config(conf: dict) -> QuadratureConfig:
    kw = {k: conf[k] for k in ("rel_tol", "abs_tol", "max_evals", "seed") if k in conf}
    try:
        return QuadratureConfig(**kw)
    except ValueError as e:
        raise UsageError(str(e)) from None


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------

def _kernel(conf, cfg):
    if "kernel" not in conf:
        raise UsageError("--kernel is required")
    k = kernel_from_spec(conf["kernel"])
    if not k.verified and not conf.get("unchecked", False):
        rep = check_homogeneity(k, seed=cfg.seed)
        if not rep.passed:
            raise CheckFailed(f"kernel failed the homogeneity check (max relative defect "
                              f"{rep.max_violation:.3g}); use --unchecked to override")
        k = k.mark_verified()
    return k


def _exponents(conf, m):
    if "p" not in conf:
        raise UsageError("--p is required")
    p = parse_floats(conf["p"], "exponent")
    if len(p) < 2:
        raise UsageError("m ≥ 2 required")
    if len(p) != m:
        raise UsageError(f"kernel arity is {m} but {len(p)} exponents were given")
    try:
        return ExponentVector(tuple(p))
    except ValueError as e:
        raise UsageError(str(e)) from None


def _psis(conf, m):
    if "psi" not in conf:
        raise UsageError("--psi is required")
    return [gls.psi_from_spec(s) for s in spec_list(conf["psi"], m, "psi")]


def _functions(conf, m, default_indicator=False):
    if "functions" not in conf:
        if default_indicator:
            return [gls.indicator() for _ in range(m)]
        raise UsageError("--functions is required")
    return [gls.function_from_spec(s) for s in spec_list(conf["functions"], m, "function")]


def _function(conf):
    if "function" not in conf:
        raise UsageError("--function is required")
    spec = conf["function"]
    if isinstance(spec, str):
        spec = _load_json(spec)
    return gls.function_from_spec(spec)


# --------------------------------------------------------------------------
# subcommands: each returns (header, rows, summary, exit code)
# --------------------------------------------------------------------------

def cmd_theta(conf, cfg):
    k = _kernel(conf, cfg)
    ev = _exponents(conf, k.m)
    est = theta(k, ev, cfg, unchecked=True)
    header = [f"p{j + 1}" for j in range(k.m)] + ["theta", "abs_error", "membership", "verdict"]
    row = list(ev.p) + [est.theta, est.estimate.abs_error_estimate, est.membership,
                        est.estimate.verdict]
    code = EXIT_INCONCLUSIVE if est.membership == UNKNOWN else EXIT_OK
    return header, [row], {"note": est.note}, code


def cmd_dm_scan(conf, cfg):
    k = _kernel(conf, cfg)
    if "grid" not in conf:
        raise UsageError("--grid is required")
    g = conf["grid"]
    if isinstance(g, str) and g.strip().startswith("["):
        g = _load_json(g)
    grid = g if isinstance(g, list) and g and isinstance(g[0], list) else parse_grid(g)
    scan = dm_scan(k, grid, cfg, unchecked=True)
    header = [f"p{j + 1}" for j in range(k.m)] + ["theta", "membership", "verdict"]
    rows = [list(pt) + [r.theta, r.membership, r.estimate.verdict]
            for pt, r in zip(scan.points, scan.results)]
    summary = {"open_box": scan.open_box, "open_box_center": scan.open_box_center}
    code = EXIT_INCONCLUSIVE if UNKNOWN in scan.memberships else EXIT_OK
    return header, rows, summary, code


def cmd_gls_norm(conf, cfg):
    f = _function(conf)
    psi = _psis(conf, 1)[0]
    res = gls.gls_norm(f, psi, cfg)
    header = ["value", "argmax", "status", "n_norms"]
    code = EXIT_INCONCLUSIVE if res.status == "inconclusive" else EXIT_OK
    return header, [[res.value, res.argmax, res.status, res.n_norms]], {"note": res.note}, code


def cmd_beta(conf, cfg):
    k = _kernel(conf, cfg)
    psis = _psis(conf, k.m)
    norms = parse_floats(conf["norms"], "norm") if "norms" in conf else [1.0] * k.m
    if len(norms) != k.m:
        raise UsageError(f"expected {k.m} norms, got {len(norms)}")
    if "p_grid" not in conf:
        raise UsageError("--p-grid is required")
    curve = beta_curve(k, psis, norms, parse_grid(conf["p_grid"]), cfg, unchecked=True)
    header = ["p", "beta"] + [f"p{j + 1}*" for j in range(k.m)] + ["status"]
    rows = [[pt.p, pt.value] + list(pt.argmin or [None] * k.m) + [pt.status] for pt in curve.points]
    summary = {"finiteness_interval": curve.finiteness_interval, "contiguous": curve.contiguous,
               "norm_factors": curve.norm_factors}
    return header, rows, summary, EXIT_OK


def cmd_certify(conf, cfg):
    k = _kernel(conf, cfg)
    psis = _psis(conf, k.m)
    fs = _functions(conf, k.m)
    if "p_grid" not in conf:
        raise UsageError("--p-grid is required")
    rep = certify_theorem(k, fs, psis, parse_grid(conf["p_grid"]), cfg, unchecked=True)
    header = ["p", "lhs", "lhs_error", "beta"] + [f"p{j + 1}*" for j in range(k.m)] + ["status"]
    rows = [[pt.p, pt.lhs, pt.lhs_error, pt.beta] + list(pt.argmin or [None] * k.m) + [pt.status]
            for pt in rep.points]
    summary = {"status": rep.status, "norms": rep.norms, "n_checked": rep.n_checked}
    code = {verify.PASS: EXIT_OK, verify.FAIL: EXIT_FAIL}.get(rep.status, EXIT_INCONCLUSIVE)
    return header, rows, summary, code


def cmd_tail(conf, cfg):
    f = _function(conf)
    psi = _psis(conf, 1)[0]
    if "t_grid" not in conf:
        raise UsageError("--t-grid is required")
    try:
        rep = tail.tail_check(f, psi, parse_grid(conf["t_grid"]), cfg)
    except tail.UnsupportedTail as e:
        raise UsageError(str(e)) from None
    header = ["t", "bound", "measured", "passed"]
    summary = {"norm": rep.norm, "skipped_below_e": rep.skipped}
    return header, [list(r) for r in rep.rows], summary, EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(conf, cfg):
    k = _kernel(conf, cfg)
    ev = _exponents(conf, k.m)
    fs = _functions(conf, k.m, default_indicator=True)
    rep = verify.check_inequality(k, fs, ev, cfg, unchecked=True, tol=conf.get("tol", 1e-9))
    header = ([f"p{j + 1}" for j in range(k.m)]
              + ["resultant", "lhs", "lhs_error", "rhs", "rhs_error", "margin", "status"])
    row = list(ev.p) + [rep.resultant, rep.lhs, rep.lhs_error, rep.rhs, rep.rhs_error, rep.margin,
                        rep.status]
    code = {verify.PASS: EXIT_OK, verify.FAIL: EXIT_FAIL}.get(rep.status, EXIT_INCONCLUSIVE)
    return header, [row], {"theta": rep.theta, "note": rep.note}, code


def cmd_sharpness(conf, cfg):
    k = _kernel(conf, cfg)
    ev = _exponents(conf, k.m)
    eps = parse_floats(conf.get("eps", "0.1,0.03,0.01"), "eps")
    try:
        pr = verify.sharpness_probe(k, ev, eps, cfg, unchecked=True)
    except verify.SharpnessViolation as e:
        raise CheckFailed(str(e)) from None
    header = ["eps", "ratio", "ratio_error", "target"]
    rows = [[e, r, err, pr.target] for e, r, err in zip(pr.eps, pr.ratios, pr.ratio_errors)]
    summary = {"extrapolated_limit": pr.extrapolated_limit, "gamma": pr.gamma,
               "fit_note": pr.fit_note}
    return header, rows, summary, EXIT_OK


HANDLERS = {
    "theta": cmd_theta, "dm-scan": cmd_dm_scan, "gls-norm": cmd_gls_norm, "beta": cmd_beta,
    "certify": cmd_certify, "tail": cmd_tail, "verify": cmd_verify, "sharpness": cmd_sharpness,
}


def render(fmt: str, command: str, header, rows, summary) -> str:
    if fmt == "json":
        doc = {"command": command,
               "rows": [{h: _json_value(v) for h, v in zip(header, row)} for row in rows],
               "summary": _json_value(summary)}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _error(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code},
                                ensure_ascii=False) + "\n")
    return code


def run(argv=None) -> int:
    """Execute one subcommand; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        conf = merge_config(args)
        cfg = quad_config(conf)
        header, rows, summary, code = HANDLERS[args.command](conf, cfg)
        text = render(conf.get("format", "csv"), args.command, header, rows, summary)
        out = conf.get("output")
        if out:
            Path(out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return code
    except UsageError as e:
        return _error(EXIT_USAGE, "usage", str(e))
    except CheckFailed as e:
        return _error(EXIT_FAIL, "check failed", str(e))
    except (KernelError, ExpressionError, gls.SpecError) as e:
        return _error(EXIT_USAGE, type(e).__name__, str(e))
    except ValueError as e:
        # violated preconditions of the library calls
        return _error(EXIT_USAGE, "invalid input", str(e))


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
