"""Command-line front end.

Every verb writes one JSON report (schema below) to stdout or ``--out``.
Exit status: 0 success, 1 numerical or I/O failure (diagnostic JSON on
stderr), 2 usage error.

Report keys: ``schema_version``, ``command``, ``inputs_digest`` (SHA-256 of
the canonical command and input file contents), ``results``, ``tolerances``,
``wall_time_ms``.
"""

import argparse
from dataclasses import dataclass, field
import hashlib
import json
import sys
import time

import numpy as np

from . import _backend, grammian, kernels, pick, realization, sequences
from ._json import dumps, points_from_json, points_to_json, to_pairs
from .errors import CnpickError

SCHEMA_VERSION = 1
VERBS = ("kernel-eval", "gram", "pick-minnorm", "pair-minnorm", "cnp-check", "realize", "seq-gen", "experiment")
EXPERIMENTS = ("ex55", "essnormal")
FLAGS = ("kernel", "t", "d", "alpha", "trunc", "points", "problem", "rho", "tol", "seed",
         "out", "n", "kind", "bound", "ratio")


class UsageError(Exception):
    pass


@dataclass
class Command:
    verb: str
    input_path: str | None = None
    flags: dict = field(default_factory=dict)
    experiment: str | None = None
    argv: list = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _build_parser():
    p = _Parser(prog="cnpick", description="Complete Pick kernel toolkit.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS, help="experiment name (verb 'experiment')")
    p.add_argument("--kernel", choices=kernels.FAMILIES)
    p.add_argument("--t", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--trunc", type=int)
    p.add_argument("--points", help="JSON file of [re, im] points")
    p.add_argument("--problem", help="JSON Pick problem file")
    p.add_argument("--rho", type=float)
    p.add_argument("--tol", type=float, help="verb-specific tolerance, echoed in the report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--n", type=int)
    p.add_argument("--kind", choices=sequences.KINDS)
    p.add_argument("--bound", type=float)
    p.add_argument("--ratio", type=float, help="ratio for geometric sequences")
    return p


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def parse(argv):
    """Validate ``argv`` into a :class:`Command`; raises :class:`UsageError`."""
    ns = _build_parser().parse_args(list(argv))
    flags = {k: getattr(ns, k) for k in FLAGS if getattr(ns, k) is not None}
    verb = ns.verb
    if verb == "experiment" and ns.experiment is None:
        raise UsageError("experiment needs a name: " + ", ".join(EXPERIMENTS))
    if verb != "experiment" and ns.experiment is not None:
        raise UsageError(f"unexpected positional argument {ns.experiment!r}")
    need = {
        "kernel-eval": ("kernel", "points"),
        "gram": ("kernel", "points"),
        "pick-minnorm": ("problem",),
        "pair-minnorm": ("problem",),
        "cnp-check": ("kernel",),
        "realize": ("problem",),
        "seq-gen": ("kind", "n"),
        "experiment": (),
    }[verb]
    missing = [f"--{k}" for k in need if k not in flags]
    if missing:
        raise UsageError(f"{verb} requires {', '.join(missing)}")
    if "tol" in flags and not flags["tol"] > 0:
        raise UsageError("--tol must be positive")
    if "n" in flags and flags["n"] < 1:
        raise UsageError("--n must be positive")
    input_path = flags.get("problem") or flags.get("points")
    for key in ("problem", "points"):
        if key in flags:
            _read_json(flags[key])
    return Command(verb=verb, input_path=input_path, flags=flags, experiment=ns.experiment, argv=list(argv))


def _load(path):
    text = _read_json(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc.msg}") from exc


def _kernel_spec(flags, tail_tol=None):
    kw = {"family": flags["kernel"]}
    for key in ("t", "d", "alpha", "trunc"):
        if key in flags:
            kw[key] = flags[key]
    if tail_tol is not None:
        kw["tail_tol"] = tail_tol
    return kernels.KernelSpec(**kw)


def _points(flags, spec):
    data = _load(flags["points"])
    if isinstance(data, dict):
        data = data.get("points")
    return points_from_json(data, spec.dim)


def _problem(flags):
    p = pick.PickProblem.from_dict(_load(flags["problem"]))
    if "rho" in flags:
        p = pick.PickProblem(p.kspec, p.nodes, p.targets, p.lspec, flags["rho"])
    return p


def _run_kernel_eval(c):
    tol = c.flags.get("tol", kernels.DEFAULT_TAIL_TOL)
    spec = _kernel_spec(c.flags, tol)
    pts = _points(c.flags, spec)
    k = kernels.matrix(spec, pts)
    res = {
        "kernel": spec.to_dict(),
        "n": pts.shape[0],
        "matrix": to_pairs(k),
        "norm_sq": k.diagonal().real.tolist(),
        "dh": kernels.dh_matrix(spec, pts).tolist(),
    }
    if spec.is_cnp:
        res["b_gram"] = to_pairs(kernels.b_gram(spec, pts))
    return res, {"tail_tol": tol}


def _run_gram(c):
    tol = c.flags.get("tol", kernels.DEFAULT_TAIL_TOL)
    spec = _kernel_spec(c.flags, tol)
    pts = _points(c.flags, spec)
    report = grammian.gram_report(spec, pts, c.flags.get("bound"))
    res = {"kernel": spec.to_dict(), **report.to_dict()}
    if spec.dim == 1:
        res["strong_separation_h2"] = grammian.strong_separation_h2(pts)
    tols = {"tail_tol": tol, "hermitian_rtol": grammian.HERMITIAN_RTOL}
    if "bound" in c.flags:
        tols["bound"] = c.flags["bound"]
    return res, tols


def _run_minnorm(c, pair):
    p = _problem(c.flags)
    rtol = c.flags.get("tol", pick.BISECTION_RTOL)
    if pair:
        res = pick.pair_min_norm(p)
    else:
        res = pick.min_norm(p)
    bis = pick.min_norm_bisection(p if pair else pick.PickProblem(p.kspec, p.nodes, p.targets, None, p.rho), rtol)
    out = res.to_dict()
    out["rho_bisection"] = bis
    out["relative_gap"] = abs(bis - res.rho_min) / max(res.rho_min, 1e-300)
    out["n"] = p.n
    return out, {"bisection_rtol": rtol, "feasibility_rtol": pick.FEAS_RTOL, "cond_limit": pick.COND_LIMIT}


def _run_cnp_check(c):
    rtol = c.flags.get("tol", 1e-10)
    spec = _kernel_spec(c.flags)
    if "points" in c.flags:
        pts = _points(c.flags, spec)
    else:
        n = c.flags.get("n", 3)
        rng = np.random.default_rng(c.flags["seed"])
        pts = _random_points(rng, n, spec.dim, 0.9)
    pos, zero, neg = pick.signature(spec, pts, rtol)
    res = {
        "kernel": spec.to_dict(),
        "points": points_to_json(pts),
        "positive_count": pos,
        "zero_count": zero,
        "negative_count": neg,
        "one_positive_square": pos == 1,
        "flagged_cnp": spec.is_cnp,
    }
    return res, {"eigenvalue_rtol": rtol}


def _random_points(rng, n, dim, radius):
    g = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return radius * g * rng.random((n, 1)) ** (1.0 / (2 * dim))


def _run_realize(c):
    p = _problem(c.flags)
    rtol = c.flags.get("tol", realization.CONTRACTIVE_RTOL)
    rho_min = (pick.pair_min_norm(p) if p.lspec is not None else pick.min_norm(p)).rho_min
    rho = p.rho if p.rho is not None else rho_min
    r = realization.build_realization(p.kspec, p.nodes, p.targets, rho, lspec=p.lspec)
    node_err = realization.node_reproduction_error(r, p.targets)
    rng = np.random.default_rng(c.flags["seed"])
    grid = _random_points(rng, c.flags.get("n", 50), p.kspec.dim, 0.95)
    lo, hi, ok = realization.contractivity_certificate(r, p.kspec, grid, rtol)
    res = {
        "rho": rho,
        "rho_min": rho_min,
        "node_reproduction_error": node_err,
        "contractivity_min_eig": lo,
        "contractivity_max_eig": hi,
        "contractive": ok,
        "realization": r.to_dict(),
    }
    return res, {"contractive_rtol": rtol, "isometry_tol": realization.ISOMETRY_TOL,
                 "rank_tol": realization.BUILD_RANK_TOL}


def _run_seq_gen(c):
    kind = c.flags["kind"]
    kw = {"kind": kind, "n": c.flags["n"]}
    if "ratio" in c.flags:
        kw["ratio"] = c.flags["ratio"]
    if kind == "custom":
        if "points" not in c.flags:
            raise UsageError("custom sequences need --points")
        kw["points"] = tuple(map(tuple, _points(c.flags, kernels.KernelSpec("szego"))))
    s = sequences.SeqSpec(**kw)
    return {"seq": s.to_dict() if kind != "custom" else {"kind": kind, "n": s.n},
            "points": points_to_json(sequences.gen(s))}, {}


def _run_ex55(c):
    m_max = c.flags.get("n", 10)
    if m_max < 4:
        raise UsageError("experiment ex55 needs --n >= 4 (largest m)")
    tol = c.flags.get("tol", kernels.DEFAULT_TAIL_TOL)
    rows = sequences.example55_sections(range(4, m_max + 1))
    js = np.arange(1, m_max + 1)
    decay = sequences.example55_pair_decay(kernels.KernelSpec("szego"), js)
    wb = [r.wb_lambda_min for r in rows]
    res = {
        "rows": [r.to_dict() for r in rows],
        "pair_dh_szego": [{"j": int(j), "dh": float(d)} for j, d in zip(js, decay)],
        "wb_lambda_min_floor": min(wb),
        "szego_lambda_max_monotone": bool(all(a.szego_lambda_max <= b.szego_lambda_max for a, b in zip(rows, rows[1:]))),
    }
    return res, {"tail_tol": tol, "trunc_min": 400}


def _run_essnormal(c):
    spec = _kernel_spec(c.flags) if "kernel" in c.flags else kernels.KernelSpec("szego")
    n = c.flags.get("n", 10)
    delta = c.flags.get("bound", 0.2)
    js = np.arange(1, n + 1)
    zs = sequences.example55_z(js).astype(np.complex128)
    ws = sequences.example55_w(js)
    ex = sequences.essnormal_bound(spec, zs, ws)
    comp = sequences.companion_sequence(spec, zs, delta)
    cv = sequences.essnormal_bound(spec, zs, comp[:, 0])
    res = {
        "kernel": spec.to_dict(),
        "example55": [{"j": int(j), "value": float(v)} for j, v in zip(js, ex)],
        "companions": {"delta": delta, "points": points_to_json(comp), "values": cv.tolist()},
        "min_value": float(min(ex.min(), cv.min())),
    }
    return res, {"delta": delta}


def run(c):
    """Execute a command; returns the report dict (raises library errors)."""
    start = time.perf_counter()
    handlers = {
        "kernel-eval": _run_kernel_eval,
        "gram": _run_gram,
        "pick-minnorm": lambda cmd: _run_minnorm(cmd, pair=False),
        "pair-minnorm": lambda cmd: _run_minnorm(cmd, pair=True),
        "cnp-check": _run_cnp_check,
        "realize": _run_realize,
        "seq-gen": _run_seq_gen,
        "experiment": lambda cmd: (_run_ex55 if cmd.experiment == "ex55" else _run_essnormal)(cmd),
    }
    results, tolerances = handlers[c.verb](c)
    echo = {k: v for k, v in c.flags.items() if k != "out"}
    digest = hashlib.sha256()
    digest.update(json.dumps({"verb": c.verb, "experiment": c.experiment, "flags": echo}, sort_keys=True).encode())
    for key in ("problem", "points"):
        if key in c.flags:
            digest.update(_read_json(c.flags[key]).encode())
    return {
        "schema_version": SCHEMA_VERSION,
        "command": {"verb": c.verb, "experiment": c.experiment, "flags": echo},
        "inputs_digest": digest.hexdigest(),
        "backend": _backend.NAME,
        "results": results,
        "tolerances": tolerances,
        "wall_time_ms": (time.perf_counter() - start) * 1e3,
    }


def emit(report, dest=None):
    """Write the report as one UTF-8 JSON document with a trailing newline."""
    text = dumps(report) + "\n"
    if dest is None or dest == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fail(kind, message):
    sys.stderr.write(dumps({"error": kind, "message": message}, indent=None) + "\n")


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        cmd = parse(argv)
        report = run(cmd)
    except UsageError as exc:
        _fail("usage", str(exc))
        return 2
    except CnpickError as exc:
        _fail(type(exc).__name__, str(exc))
        return 1
    try:
        emit(report, cmd.flags.get("out"))
    except OSError as exc:
        _fail("io", str(exc))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
