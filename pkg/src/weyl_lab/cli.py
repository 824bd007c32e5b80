"""Command-line runner: build a pack, run suites, write a JSON report.

Exit status is 0 when every selected check passes, 1 when one fails and 2
for configuration or builder errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .geometry import GeometryError
from .structures import (
    RescaledProductSpec,
    StructurePack,
    TrigTerm,
    TripleProductSpec,
    build_flat_cone,
    build_rescaled_product,
    build_triple_product,
    random_component_metric,
    random_trig_function,
)
from .verify import ALGEBRA_SUITES, PACK_SUITES, RunResult, Tolerances, resolve_suites, run_algebra, run_suites

__all__ = ["BUILDERS", "ConfigError", "RunConfig", "build_pack", "main", "parse_terms", "report_schema", "run"]

BUILDERS = ("triple_product", "rescaled_product", "flat_cone", "random_involutions")

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "weyl-lab report",
    "type": "object",
    "required": ["run", "suites", "integrals"],
    "properties": {
        "run": {
            "type": "object",
            "required": ["seed", "builder", "params"],
            "properties": {
                "seed": {"type": "integer"},
                "builder": {"type": "string", "enum": list(BUILDERS)},
                "params": {"type": "object"},
                "timestamp": {"type": "string"},
            },
        },
        "suites": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "points", "max_abs", "max_rel", "tol", "pass"],
                "properties": {
                    "id": {"type": "string"},
                    "points": {"type": "integer", "minimum": 0},
                    "max_abs": {"type": ["number", "null"]},
                    "max_rel": {"type": ["number", "null"]},
                    "tol": {"type": "number", "minimum": 0},
                    "pass": {"type": "boolean"},
                    "status": {"type": "string", "enum": ["pass", "fail", "not_applicable"]},
                    "note": {"type": "string"},
                },
            },
        },
        "integrals": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "grids", "extrapolated"],
                "properties": {
                    "id": {"type": "string"},
                    "grids": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["nodes", "value"],
                            "properties": {"nodes": {"type": "integer"}, "value": {"type": ["number", "null"]}},
                        },
                    },
                    "extrapolated": {"type": ["number", "null"]},
                },
            },
        },
        "details": {"type": "object"},
    },
}


def report_schema() -> str:
    """JSON schema of the reports written by :func:`run`."""
    return json.dumps(SCHEMA, indent=2, sort_keys=True)


class ConfigError(ValueError):
    """Malformed configuration (exit status 2)."""


# -- function presets -----------------------------------------------------------

_TERM = re.compile(r"([+-]?)\s*(\d*\.?\d+(?:[eE][+-]?\d+)?)?\s*\*?\s*(sin|cos|mono)\(\s*([-\d,\s]*)\)")


def parse_terms(text: str, nvars: int, kinds=("sin", "cos")) -> tuple[TrigTerm, ...]:
    """Parse ``"0.3 sin(0,1) + 0.1 cos(1,0)"`` into trigonometric terms.

    ``sin(m)`` is ``sin(m . x)``, ``cos(m)`` is ``cos(m . x)`` and ``mono(p)``
    the monomial ``prod x_i^p_i`` (polynomial preset only).
    """
    text = text.strip()
    terms, pos = [], 0
    for match in _TERM.finditer(text):
        if text[pos : match.start()].strip():
            raise ConfigError(f"cannot parse function terms near {text[pos:match.start()]!r}")
        sign, amp, kind, wv = match.groups()
        if kind not in kinds:
            raise ConfigError(f"{kind}(...) terms are not allowed here; use {' or '.join(kinds)}")
        a = float(amp) if amp else 1.0
        a = -a if sign == "-" else a
        try:
            m = tuple(int(v) for v in wv.replace(" ", "").split(",") if v)
        except ValueError as exc:
            raise ConfigError(f"bad wavevector {wv!r}") from exc
        if len(m) != nvars:
            raise ConfigError(f"term {match.group(0).strip()!r} needs {nvars} entries")
        if kind == "mono" and any(p < 0 for p in m):
            raise ConfigError("monomial exponents must be nonnegative")
        terms.append(TrigTerm(a, m, math.pi / 2 if kind == "cos" else 0.0))
        pos = match.end()
    if text[pos:].strip() or (text and not terms):
        raise ConfigError(f"cannot parse function terms near {text[pos:]!r}")
    return tuple(terms)


# -- configuration ----------------------------------------------------------------


@dataclass
class RunConfig:
    builder: str = "triple_product"
    dims: tuple[int, ...] = (1, 1, 1)
    n: tuple[int, ...] = ()
    k: int = 1
    seed: int = 0
    suites: tuple[str, ...] = ("all",)
    tol_first_order: float = 1e-10
    tol_curvature: float = 1e-7
    grid: int = 64
    samples: int | None = None
    lambda2_samples: int = 1000
    preset: str = "trig"
    f: str | None = None
    u: str | None = None
    perturb: bool = True
    out: str | None = None
    csv: str | None = None

    def validate(self) -> "RunConfig":
        if self.builder not in BUILDERS:
            raise ConfigError(f"unknown builder {self.builder!r}; choose from {', '.join(BUILDERS)}")
        allowed = ALGEBRA_SUITES if self.builder == "random_involutions" else PACK_SUITES
        try:
            self.suites = tuple(resolve_suites(list(self.suites), allowed))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.tol_first_order <= 0 or self.tol_curvature <= 0:
            raise ConfigError("tolerances must be positive")
        if self.grid < 8:
            raise ConfigError("grid must be at least 8 nodes per axis")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("samples must be positive")
        return self


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)
    except ValueError as exc:
        raise ConfigError(f"expected a comma list of integers, got {text!r}") from exc


_KEYS = {
    "builder": str,
    "dims": _ints,
    "n": _ints,
    "k": int,
    "seed": int,
    "suite": lambda s: tuple(v.strip() for v in str(s).split(",") if v.strip()),
    "tol_first_order": float,
    "tol_curvature": float,
    "grid": int,
    "samples": int,
    "lambda2_samples": int,
    "preset": str,
    "f": str,
    "u": str,
    "perturb": lambda s: str(s).strip().lower() in ("1", "true", "yes", "on"),
    "out": str,
    "csv": str,
}


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys are allowed."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        out[key] = value
    return out


def make_config(values: dict) -> RunConfig:
    cfg = RunConfig()
    for key, raw in values.items():
        if raw is None:
            continue
        try:
            value = _KEYS[key](raw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        setattr(cfg, "suites" if key == "suite" else key, value)
    return cfg.validate()


# -- builders ---------------------------------------------------------------------


def build_pack(cfg: RunConfig) -> StructurePack:
    """Build the geometry named by the config; raises GeometryError on bad parameters."""
    if cfg.builder == "triple_product":
        dims = cfg.dims
        if len(dims) != 3:
            raise GeometryError("triple products need exactly three block dimensions d1,d2,d3")
        spec = TripleProductSpec.random(dims, cfg.seed, perturb=cfg.perturb)
        if cfg.f is not None:
            # validate the dims first so that bad dims win over bad terms
            spec = TripleProductSpec(dims, parse_terms(cfg.f, dims[0] + dims[1]), spec.metric_terms)
        return build_triple_product(spec)
    if cfg.builder == "rescaled_product":
        split = cfg.dims if len(cfg.dims) == 2 else (1, 2)
        n = sum(split)
        rng = np.random.default_rng(cfg.seed)
        if cfg.preset == "inverse_radius":
            return build_rescaled_product(RescaledProductSpec(split, preset="inverse_radius"))
        if cfg.u is not None:
            terms = parse_terms(cfg.u, n, ("mono",) if cfg.preset == "polynomial" else ("sin", "cos"))
        elif cfg.preset == "polynomial":
            terms = (TrigTerm(0.2, (1, 1) + (0,) * (n - 2)),)
        else:
            terms = random_trig_function(n, rng)
        metric = ((), ())
        if cfg.perturb and cfg.preset == "trig":
            metric = (random_component_metric(split[0], rng), random_component_metric(split[1], rng))
        return build_rescaled_product(RescaledProductSpec(split, terms, metric, preset=cfg.preset))
    if cfg.builder == "flat_cone":
        n = cfg.n[0] if cfg.n else 3
        return build_flat_cone(n, cfg.k, cfg.seed)
    raise ConfigError(f"builder {cfg.builder} does not produce a pack")


# -- running ------------------------------------------------------------------------


def _finite(x):
    return x if isinstance(x, float) and math.isfinite(x) else (None if isinstance(x, float) else x)


def _params(cfg: RunConfig, pack: StructurePack | None) -> dict:
    out = {"suites": list(cfg.suites), "tol_first_order": cfg.tol_first_order, "tol_curvature": cfg.tol_curvature}
    if pack is not None:
        out.update(name=pack.name, **{k: v for k, v in pack.params.items()})
        out["grid"] = cfg.grid
    else:
        out["n"] = list(cfg.n) or list(range(3, 9))
        out["lambda2_samples"] = cfg.lambda2_samples
    out["samples"] = cfg.samples
    if cfg.f is not None:
        out["f"] = cfg.f
    if cfg.u is not None:
        out["u"] = cfg.u
    return out


def execute(cfg: RunConfig) -> tuple[dict, RunResult]:
    """Run the configured suites and assemble the report document (no I/O)."""
    if cfg.builder == "random_involutions":
        n_values = cfg.n or tuple(range(3, 9))
        if any(not 3 <= n <= 8 for n in n_values):
            raise GeometryError("random involution pairs are sampled for 3 <= n <= 8")
        result = run_algebra(cfg.suites, n_values, cfg.lambda2_samples, cfg.samples or 100_000, cfg.seed)
        pack = None
    else:
        pack = build_pack(cfg)
        tols = Tolerances(cfg.tol_first_order, cfg.tol_curvature)
        result = run_suites(pack, cfg.suites, cfg.samples or 20, cfg.seed, tols, finest_grid=cfg.grid)
    doc = {
        "run": {
            "seed": cfg.seed,
            "builder": cfg.builder,
            "params": _params(cfg, pack),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
        "suites": [{k: _finite(v) for k, v in r.to_dict().items()} for r in result.reports],
        "integrals": [
            {
                "id": i.id,
                "grids": [{"nodes": g["nodes"], "value": _finite(g["value"])} for g in i.to_dict()["grids"]],
                "extrapolated": _finite(i.extrapolated),
            }
            for i in result.integrals
        ],
        "details": result.details,
    }
    return doc, result


def write_csv(path: str, result: RunResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "points", "max_abs", "max_rel", "tol", "pass", "status"])
        for r in result.reports:
            w.writerow([r.id, r.points, repr(r.max_abs), repr(r.max_rel), repr(r.tol), r.passed, r.status])


def run(cfg: RunConfig, stream=None, log=None) -> int:
    """Execute a validated config; returns the exit status."""
    stream = stream or sys.stdout
    log = log or sys.stderr
    try:
        doc, result = execute(cfg)
    except (GeometryError, ConfigError) as exc:
        print(f"error: {exc}", file=log)
        return 2
    for r in result.reports:
        print(r.line(), file=log)
    if "classification" in result.details:
        print(f"classification: criterion {result.details['classification']['verdict']}", file=log)
    text = json.dumps(doc, indent=2, sort_keys=False, allow_nan=False, ensure_ascii=False)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=stream)
    if cfg.csv:
        write_csv(cfg.csv, result)
    return 0 if result.passed else 1


# -- argument parsing -------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weyl-lab", description="Numerical checks of Weyl-structure identities.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="build a geometry and run identity suites")
    v.add_argument("--config", help="flat key = value config file; flags override it")
    v.add_argument("--builder", choices=BUILDERS)
    v.add_argument("--dims", help="d1,d2,d3 for triple_product or k,m for rescaled_product")
    v.add_argument("--n", help="dimension for flat_cone, comma list for random_involutions")
    v.add_argument("--k", help="rank of the Cartesian +1 block (flat_cone)")
    v.add_argument("--seed")
    v.add_argument("--suite", help='comma list of suites or "all"')
    v.add_argument("--tol-first-order")
    v.add_argument("--tol-curvature")
    v.add_argument("--grid", help="finest quadrature nodes per axis")
    v.add_argument("--samples", help="sample points (pack builders) or involution pairs")
    v.add_argument("--lambda2-samples")
    v.add_argument("--preset", help="rescaled_product: trig, inverse_radius or polynomial")
    v.add_argument("--f", help='triple_product conformal factor, e.g. "0.3 sin(0,1) + 0.1 cos(1,0)"')
    v.add_argument("--u", help="rescaled_product conformal factor, same syntax")
    v.add_argument("--no-perturb", action="store_true", help="use flat component metrics")
    v.add_argument("--out", help="JSON report path (default: stdout)")
    v.add_argument("--csv", help="CSV residual table path")
    sub.add_parser("schema", help="print the JSON schema of reports")
    sub.add_parser("suites", help="list suite names")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "schema":
        print(report_schema())
        return 0
    if args.command == "suites":
        print("pack suites:", ", ".join(PACK_SUITES))
        print("random_involutions suites:", ", ".join(ALGEBRA_SUITES))
        return 0
    try:
        values = read_config(args.config) if args.config else {}
        flags = {k: getattr(args, k) for k in _KEYS if k != "perturb" and getattr(args, k, None) is not None}
        if args.no_perturb:
            flags["perturb"] = "false"
        values.update(flags)
        cfg = make_config(values)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
