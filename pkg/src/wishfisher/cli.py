"""
Command-line interface: ``wishfisher {density,fisher,vantrees,verify}``.

Exit codes: 0 success, 1 verification failure, 2 invalid input or a shape
below a required threshold, 3 I/O failure.  Every artifact written with
``--out`` records the resolved input configuration; passing that artifact
back through ``--config`` reproduces it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds, model, symspace
from .bounds import VanTreesProblem
from .mcverify import EstimatorSpec, McConfig, simulate_estimator, van_trees_joint_matrix
from .model import ModelParams
from .suite import FAST_SAMPLES, FULL_SAMPLES, run_verification_suite
from .wishart import ShapeDomainError, WishartParams

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3


class InputError(Exception):
    """Invalid flags or parameters; reported with exit code 2."""


class ArtifactIOError(Exception):
    """Unreadable or unwritable file; reported with exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# -- parsing helpers -------------------------------------------------------

def _read_json(path: str, flag: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ArtifactIOError(f"{flag}: cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{flag}: {path} is not valid JSON ({exc.msg})") from exc


def parse_matrix(value, n: int | None, flag: str) -> np.ndarray:
    """``"identity"``, a matrix object ``{"n", "rows"}``, a list of rows, or a path to either."""
    if isinstance(value, str) and value == "identity":
        if n is None:
            raise InputError(f"{flag} identity needs --n")
        return np.eye(n)
    obj = _read_json(value, flag) if isinstance(value, str) else value
    try:
        mat = symspace.matrix_from_json(obj) if isinstance(obj, dict) else symspace.matrix_from_json(
            {"n": len(obj), "rows": obj}
        )
    except (ValueError, TypeError) as exc:
        raise InputError(f"{flag}: {exc}") from exc
    if n is not None and mat.shape[0] != n:
        raise InputError(f"{flag} has order {mat.shape[0]} but --n is {n}")
    return mat


def parse_vector(value, flag: str) -> np.ndarray:
    """Comma-separated numbers, a JSON list, or a path to a JSON list."""
    if isinstance(value, (list, tuple)):
        items = value
    elif isinstance(value, (int, float)):
        items = [value]
    else:
        text = value.strip()
        try:
            items = [float(t) for t in text.split(",")]
        except ValueError:
            items = _read_json(text, flag)
    try:
        vec = np.asarray(items, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{flag}: expected numbers ({exc})") from exc
    if vec.ndim != 1 or not np.all(np.isfinite(vec)):
        raise InputError(f"{flag}: expected a finite vector")
    return vec


def _merge_config(args: argparse.Namespace, fields: tuple[str, ...]) -> dict:
    """Flag values, falling back to the ``--config`` file."""
    base = {}
    if args.config:
        obj = _read_json(args.config, "--config")
        if isinstance(obj, dict) and isinstance(obj.get("config"), dict):
            obj = obj["config"]
        if not isinstance(obj, dict):
            raise InputError("--config must hold a flat JSON object")
        unknown = set(obj) - set(fields) - {"command"}
        if unknown:
            raise InputError(f"--config has unknown keys: {', '.join(sorted(unknown))}")
        base = obj
    out = {}
    for name in fields:
        flag_value = getattr(args, name, None)
        out[name] = flag_value if flag_value is not None else base.get(name)
    return out


def _require(cfg: dict, *names: str) -> None:
    for name in names:
        if cfg.get(name) is None:
            raise InputError(f"--{name.replace('_', '-')} is required")


def _positive_int(cfg: dict, name: str) -> int:
    value = cfg[name]
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise InputError(f"--{name} must be a positive integer, got {value!r}")
    return int(value)


def _order(cfg: dict) -> int | None:
    return None if cfg.get("n") is None else _positive_int(cfg, "n")


def _float(cfg: dict, name: str) -> float:
    try:
        value = float(cfg[name])
    except (TypeError, ValueError) as exc:
        raise InputError(f"--{name} must be a number, got {cfg[name]!r}") from exc
    if not np.isfinite(value):
        raise InputError(f"--{name} must be finite")
    return value


def _model_params(cfg: dict, sigma_key: str = "sigma") -> ModelParams:
    _require(cfg, "p", sigma_key)
    sigma = parse_matrix(cfg[sigma_key], _order(cfg), f"--{sigma_key}")
    p = _float(cfg, "p")
    n = sigma.shape[0]
    if not p > (n - 1) / 2:
        raise InputError(f"p > (n-1)/2 = {(n - 1) / 2} required (got p = {p})")
    return ModelParams(p, sigma)


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ArtifactIOError(f"--out: cannot write {path}: {exc.strerror or exc}") from exc


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False)
    if out:
        _write(out, text + "\n")
    else:
        print(text)


def dense_csv(mat: np.ndarray, n: int) -> str:
    """Row-major CSV with a header naming the basis elements."""
    labels = symspace.basis_labels(n)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row"] + labels)
    for label, row in zip(labels, mat):
        writer.writerow([label] + [repr(float(v)) for v in row])
    return buf.getvalue()


def _jsonable_config(cfg: dict, command: str) -> dict:
    out = {"command": command}
    for k, v in cfg.items():
        out[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return out


# -- commands --------------------------------------------------------------

DENSITY_FIELDS = ("n", "p", "sigma", "x", "log")


def cmd_density(args) -> int:
    cfg = _merge_config(args, DENSITY_FIELDS)
    _require(cfg, "x")
    params = _model_params(cfg)
    x = parse_vector(cfg["x"], "--x")
    if x.size != params.n:
        raise InputError(f"--x has length {x.size} but the order is {params.n}")
    value = model.log_density(params, x)
    print(format(value if cfg.get("log") else float(np.exp(value)), ".15g"))
    return EXIT_OK


FISHER_FIELDS = ("n", "p", "sigma", "inverse", "dense", "out", "format")


def cmd_fisher(args) -> int:
    cfg = _merge_config(args, FISHER_FIELDS)
    params = _model_params(cfg)
    fmt = cfg.get("format") or "json"
    if fmt not in ("json", "csv"):
        raise InputError(f"--format must be json or csv, got {fmt!r}")
    op = model.fisher_inverse(params) if cfg.get("inverse") else model.fisher_information(params)
    dense = op.to_dense()
    if fmt == "csv":
        text = dense_csv(dense, params.n)
        if cfg.get("out"):
            _write(cfg["out"], text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    payload = {"config": _jsonable_config(cfg, "fisher"), "operator": op.to_json()}
    if cfg.get("dense"):
        payload["dense"] = dense.tolist()
    _emit(payload, cfg.get("out"))
    return EXIT_OK


VANTREES_FIELDS = ("n", "p", "p1", "sigma1", "k", "simulate", "samples", "batches", "seed", "out")


def _vantrees_problem(cfg: dict) -> VanTreesProblem:
    _require(cfg, "p", "p1", "sigma1")
    sigma1 = parse_matrix(cfg["sigma1"], _order(cfg), "--sigma1")
    n = sigma1.shape[0]
    p, p1 = _float(cfg, "p"), _float(cfg, "p1")
    k = 1 if cfg.get("k") is None else _positive_int(cfg, "k")
    if not p1 > (n + 3) / 2:
        raise InputError(f"p₁ > (n+3)/2 required (n = {n}: p1 > {(n + 3) / 2}, got p1 = {p1})")
    if not p > (n - 1) / 2:
        raise InputError(f"p > (n-1)/2 = {(n - 1) / 2} required (got p = {p})")
    return VanTreesProblem(p, WishartParams(p1, sigma1), k)


def cmd_vantrees(args) -> int:
    cfg = _merge_config(args, VANTREES_FIELDS)
    problem = _vantrees_problem(cfg)
    report = bounds.van_trees_bound(problem)
    payload = {"config": _jsonable_config(cfg, "vantrees")}
    checks = {}
    if cfg.get("simulate"):
        kind = cfg["simulate"]
        if kind == "constant":
            spec = EstimatorSpec.default_constant(problem)
        elif kind == "clipped":
            if not problem.model_p > (problem.n + 1) / 2:
                raise InputError(f"--simulate clipped needs p > (n+1)/2 = {(problem.n + 1) / 2}")
            spec = EstimatorSpec.default_clipped(problem)
        else:
            raise InputError(f"--simulate must be constant or clipped, got {kind!r}")
        samples = 100_000 if cfg.get("samples") is None else _positive_int(cfg, "samples")
        batches = 100 if cfg.get("batches") is None else _positive_int(cfg, "batches")
        seed = McConfig.seed if cfg.get("seed") is None else int(cfg["seed"])
        try:
            config = McConfig(seed, samples, batches)
        except ValueError as exc:
            raise InputError(f"--samples/--batches/--seed: {exc}") from exc
        c, diag = simulate_estimator(problem, spec, config, tag=1)
        joint = van_trees_joint_matrix(problem, spec, config, tag=2)
        checks = {"C_minus_bound": {"min_eig": diag["gap"], "se": diag["gap_se"], "passed": diag["passed"]}}
        checks["joint_matrix"] = {"min_eig": joint.min_eig, "se": joint.min_eig_se}
        payload["simulation"] = {
            "estimator": spec.describe(),
            "C": c.tolist(),
            "C_se": diag["se"].tolist(),
            "loewner_gap": diag["gap"],
            "loewner_gap_se": diag["gap_se"],
            "tolerance": diag["tolerance"],
            "passed": diag["passed"],
            "cross_block": joint.cross_block.tolist(),
            "cross_block_se": joint.block_se("cross").tolist(),
        }
    payload.update(report.to_json(checks))
    _emit(payload, cfg.get("out"))
    return EXIT_OK


VERIFY_FIELDS = ("scope", "seed", "samples", "batches", "out")


def cmd_verify(args) -> int:
    cfg = _merge_config(args, VERIFY_FIELDS)
    scope = cfg.get("scope") or "fast"
    if scope not in ("fast", "full"):
        raise InputError(f"scope must be fast or full, got {scope!r}")
    samples = (FULL_SAMPLES if scope == "full" else FAST_SAMPLES) if cfg.get("samples") is None else _positive_int(cfg, "samples")
    batches = 100 if cfg.get("batches") is None else _positive_int(cfg, "batches")
    seed = McConfig.seed if cfg.get("seed") is None else int(cfg["seed"])
    try:
        config = McConfig(seed, samples, batches)
    except ValueError as exc:
        raise InputError(f"--samples/--batches/--seed: {exc}") from exc
    results = run_verification_suite(scope, config)
    cfg.update(scope=scope, seed=seed, samples=samples, batches=batches)
    payload = {
        "config": _jsonable_config(cfg, "verify"),
        "passed": all(r.passed for r in results),
        "checks": [r.to_json() for r in results],
    }
    if cfg.get("out"):
        _emit(payload, cfg["out"])
    for r in results:
        print(f"{r.status.upper():4s}  {r.check_id:30s}  {r.measured:.4g} {r.comparison} {r.tolerance:.4g}")
    return EXIT_OK if payload["passed"] else EXIT_FAIL


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wishfisher", description="Wishart-randomized Gaussian model: densities, information and bounds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, sigma_flag="--sigma"):
        p.add_argument("--config", help="flat JSON object with the same keys as the flags")
        p.add_argument("--n", type=int, help="matrix order")
        p.add_argument("--p", type=float, help="model shape parameter")
        p.add_argument(sigma_flag, help='"identity" or a JSON matrix file')

    d = sub.add_parser("density", help="evaluate the marginal density")
    common(d)
    d.add_argument("--x", help="comma-separated vector or a JSON file")
    d.add_argument("--log", action="store_true", default=None, help="print the log-density")
    d.set_defaults(func=cmd_density)

    f = sub.add_parser("fisher", help="Fisher information or its inverse")
    common(f)
    f.add_argument("--inverse", action=argparse.BooleanOptionalAction, default=None)
    f.add_argument("--dense", action="store_true", default=None, help="include the dense matrix")
    f.add_argument("--format", choices=("json", "csv"), default=None)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fisher)

    v = sub.add_parser("vantrees", help="Van Trees bound, optionally with a simulated estimator")
    common(v, "--sigma1")
    v.add_argument("--p1", type=float, help="prior shape parameter")
    v.add_argument("--k", type=int, help="number of observations per parameter draw")
    v.add_argument("--simulate", choices=("constant", "clipped"))
    v.add_argument("--samples", type=int)
    v.add_argument("--batches", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--out")
    v.set_defaults(func=cmd_vantrees)

    r = sub.add_parser("verify", help="run the verification suite")
    r.add_argument("--config")
    scope = r.add_mutually_exclusive_group()
    scope.add_argument("--fast", dest="scope", action="store_const", const="fast")
    scope.add_argument("--full", dest="scope", action="store_const", const="full")
    r.add_argument("--seed", type=int)
    r.add_argument("--samples", type=int)
    r.add_argument("--batches", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"wishfisher: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ShapeDomainError, symspace.DimensionError, symspace.NotPositiveDefiniteError,
            symspace.SingularOperatorError) as exc:
        print(f"wishfisher: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArtifactIOError as exc:
        print(f"wishfisher: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"wishfisher: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
