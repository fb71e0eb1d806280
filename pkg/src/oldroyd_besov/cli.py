"""Command-line entry point: ``oldroyd-besov <scenario> [options]``.

Every scenario writes its tables as CSV files (with a ``#`` header carrying
the resolved configuration, the seed and the energy constants) plus a JSON
summary, prints one ``PASS``/``FAIL`` line per check, and exits with status 1
when any check fails. Usage and input errors exit with status 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import scenarios
from .energy import derive_constants
from .errors import OldroydError
from .model import ModelParams
from .spectral import load_field

SCENARIOS = ("constants-audit", "lp-audit", "linear-decay", "prop31-audit",
             "small-data-global", "norms")
PARAM_KEYS = ("Re", "We", "omega", "alpha_slip", "gamma")


def format_value(x: Any) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[Sequence[Any]],
              header: dict) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key}: {json.dumps(_jsonable(value), sort_keys=True)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def write_result(result: scenarios.ScenarioResult, out: Path, seed: int,
                 constants: dict | None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    header = {"scenario": result.scenario, "seed": seed, "config": result.config}
    if constants is not None:
        header["constants"] = constants
    paths = []
    for table in result.tables:
        path = out / f"{result.scenario}_{table.name}.csv"
        write_csv(path, table.columns, table.rows, header)
        paths.append(path)
    path = out / f"{result.scenario}_checks.csv"
    write_csv(path, ["check", "pass", "detail"],
              [[c.name, int(bool(c.passed)), c.detail] for c in result.checks], header)
    paths.append(path)
    path = out / f"{result.scenario}_summary.json"
    summary = {"scenario": result.scenario, "seed": seed, "config": result.config,
               "constants": constants, "passed": bool(result.passed),
               "checks": [{"name": c.name, "passed": bool(c.passed), "detail": c.detail}
                          for c in result.checks],
               "summary": result.summary}
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    paths.append(path)
    return paths


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oldroyd-besov",
                                description="Compressible Oldroyd-B audits and experiments.")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--T", type=float, dest="T")
    p.add_argument("--h", type=float)
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--L", type=float, dest="L")
    p.add_argument("--d", type=int)
    p.add_argument("--delta", type=float, action="append",
                   help="initial amplitude X_0 (repeatable)")
    p.add_argument("--samples", type=int)
    p.add_argument("--stride", type=int)
    for key in PARAM_KEYS:
        p.add_argument(f"--{key}", type=float)
    p.add_argument("--field", type=Path, help="snapshot file for the norms scenario")
    p.add_argument("--norm", action="append", dest="norms",
                   help="norm spec: l2, linf, besov:s[:p[:r]], hybrid:s:t:q0 (repeatable)")
    return p


def load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise OldroydError(f"config {path}: invalid JSON at offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise OldroydError(f"config {path}: top level must be an object")
    return data


def resolve(args: argparse.Namespace, config: dict) -> dict:
    """Merge the config file and command-line flags into one flat dictionary.

    Nested sections ``params``, ``grid``, ``step``, ``recorder`` and a section
    named after the scenario are flattened; flags win over the file.
    """
    flat: dict[str, Any] = {}
    for section in ("params", "grid", "step", "recorder", args.scenario):
        sub = config.get(section)
        if isinstance(sub, dict):
            flat.update(sub)
    for key, value in config.items():
        if key not in ("params", "grid", "step", "recorder") and not isinstance(value, dict):
            flat[key] = value
    for key in ("seed", "T", "h", "N", "L", "d", "samples", "stride", *PARAM_KEYS):
        value = getattr(args, key)
        if value is not None:
            flat[key] = value
    if args.delta:
        flat["deltas"] = args.delta
    if args.field:
        flat["field"] = str(args.field)
    if args.norms:
        flat["norms"] = args.norms
    return flat


def _params(flat: dict) -> ModelParams:
    return ModelParams(**{k: float(flat[k]) for k in PARAM_KEYS if k in flat})


def _pick(flat: dict, names: Sequence[str]) -> dict:
    return {n: flat[n] for n in names if n in flat}


def run_scenario(name: str, flat: dict) -> scenarios.ScenarioResult:
    seed = int(flat.get("seed", 0))
    if name == "constants-audit":
        matrix = flat.get("matrix")
        res = scenarios.constants_audit(tuple(tuple(m) for m in matrix) if matrix
                                        else scenarios.PARAMETER_MATRIX)
        params = _params(flat)
        res.summary["selected"] = {"params": params.to_dict(),
                                   "constants": derive_constants(params).to_dict()}
        return res
    if name == "lp-audit":
        kw = _pick(flat, ("d", "N", "L", "samples", "commutator_samples", "N_fine"))
        return scenarios.lp_audit(seed=seed, **kw)
    if name == "linear-decay":
        kw = _pick(flat, ("d", "N", "T", "h", "stride", "data", "amplitude", "boxes"))
        if "L" in flat:
            kw["boxes"] = [float(flat["L"])]
        return scenarios.linear_decay(_params(flat), seed=seed, **kw)
    if name == "prop31-audit":
        kw = _pick(flat, ("d", "L", "T", "h", "stride", "v_recipe", "v_amplitude",
                          "source_field", "source_band", "source_amplitude", "data",
                          "amplitude", "resolutions"))
        if "N" in flat:
            kw["resolutions"] = [int(flat["N"])] + [int(n) for n in flat.get("compare", [])]
        return scenarios.prop31_audit(_params(flat), seed=seed, **kw)
    if name == "small-data-global":
        kw = _pick(flat, ("d", "N", "L", "deltas", "T", "h", "stride", "N_compare", "base_n"))
        return scenarios.small_data_global(_params(flat), seed=seed, **kw)
    if name == "norms":
        if "field" not in flat:
            raise OldroydError("the norms scenario needs --field")
        field_obj, header = load_field(flat["field"])
        specs = flat.get("norms") or ["l2"]
        table = scenarios.field_norms(field_obj, specs, header.get("id", "") or
                                      Path(flat["field"]).stem)
        res = scenarios.ScenarioResult("norms", {"field": flat["field"], "norms": specs,
                                                 "header": header})
        res.tables.append(table)
        return res
    raise OldroydError(f"unknown scenario {name!r}")


def _constants_for(name: str, flat: dict) -> dict | None:
    if name in ("lp-audit", "norms"):
        return None
    try:
        return derive_constants(_params(flat)).to_dict()
    except OldroydError:
        return None


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        flat = resolve(args, load_config(args.config))
        seed = int(flat.get("seed", 0))
        result = run_scenario(args.scenario, flat)
        constants = _constants_for(args.scenario, flat)
        paths = write_result(result, args.out, seed, constants)
    except (OldroydError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.scenario == "constants-audit":
        sel = result.summary["selected"]["constants"]
        print(f"q0={sel['q0']} q1={sel['q1']} M={format_value(sel['M'])} "
              f"M'={format_value(sel['M_prime'])} alpha={format_value(sel['alpha_comp'])} "
              f"beta={format_value(sel['beta_comp'])}")
    if args.scenario == "norms":
        for row in result.tables[0].rows:
            print(",".join(format_value(v) for v in row))
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    for path in paths:
        print(f"wrote {path}")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
