"""Command-line front end.

Subcommands: ``state``, ``sample``, ``spectrum``, ``fig2``, ``verify``.
Exit codes: 0 success, 1 verification failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import epr_state as es
from . import measurement as ms
from . import oscillator_model as om
from .verification import DEFAULT_SEED, FAULTS, coupled_mode_errors, run_checks

SCHEMA_VERSION = 1
FORMATS = ("csv", "json")
TOP_WEIGHTS = 10
STATE_TABLE_CAP = 12

# per-command fields with their coercions; anything else is rejected
_FLOAT_LIST = "float_list"
FIELD_TYPES: dict[str, dict[str, Any]] = {
    "state": {"f": _FLOAT_LIST, "trunc": int},
    "sample": {
        "f": _FLOAT_LIST,
        "g": float,
        "p": "weights",
        "r": int,
        "count": int,
        "seed": int,
        "hbar_omega": float,
    },
    "spectrum": {"r": int, "m": float, "m0": float, "M": float, "k": float, "chi": float},
    "fig2": {"xi_min": float, "xi_max": float, "points": int, "log": bool, "hbar_omega": float},
    "verify": {"tol": float, "fault": str, "seed": int},
}
DEFAULT_FORMAT = {"state": "json", "sample": "csv", "spectrum": "json", "fig2": "csv", "verify": "json"}
RESERVED = {"schema", "command", "out", "format"}


class InputError(ValueError):
    """Invalid user input; maps to exit code 2."""


def _coerce(name: str, kind, value):
    try:
        if kind == _FLOAT_LIST:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            out = [float(v) for v in value]
            if not out:
                raise ValueError
            return out
        if kind == "weights":
            if isinstance(value, str) and value.strip().lower() == "equal":
                return "equal"
            return _coerce(name, _FLOAT_LIST, value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError
            return value
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
            return out
        return kind(value)
    except (TypeError, ValueError):
        raise InputError(f"invalid value for {name!r}: {value!r}") from None


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    format: str | None = None
    out: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        if data.get("schema") != SCHEMA_VERSION:
            raise InputError(f"config needs \"schema\": {SCHEMA_VERSION}")
        command = data.get("command")
        if command not in FIELD_TYPES:
            raise InputError(f"unknown command {command!r}")
        types = FIELD_TYPES[command]
        unknown = sorted(set(data) - RESERVED - set(types))
        if unknown:
            raise InputError(f"unknown config fields for {command}: {', '.join(unknown)}")
        params = {k: _coerce(k, types[k], v) for k, v in data.items() if k in types and v is not None}
        fmt = data.get("format")
        if fmt is not None and fmt not in FORMATS:
            raise InputError(f"format must be one of {FORMATS}")
        return cls(command, params, fmt, data.get("out"))

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from None

    def to_dict(self, include_out: bool = True) -> dict[str, Any]:
        data: dict[str, Any] = {"schema": SCHEMA_VERSION, "command": self.command, **self.params}
        if self.format is not None:
            data["format"] = self.format
        if include_out and self.out is not None:
            data["out"] = self.out
        return data

    def to_json(self, include_out: bool = True) -> str:
        return json.dumps(self.to_dict(include_out), sort_keys=True, separators=(",", ":"))

    @property
    def output_format(self) -> str:
        return self.format or DEFAULT_FORMAT[self.command]


def num(x: float) -> str:
    """CSV number: 17 significant digits, round-trip exact."""
    return format(float(x), ".17g")


def _floats(a) -> Any:
    return np.asarray(a, dtype=float).tolist()


def _json_dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _require_json(config: RunConfig) -> None:
    if config.output_format != "json":
        raise InputError(f"{config.command} only writes json")


# -- commands ---------------------------------------------------------------


def _param_vector(values) -> es.ParamVector:
    try:
        return es.ParamVector(values)
    except es.AdmissibilityError as exc:
        f2 = math.fsum(v * v for v in values)
        raise InputError(f"inadmissible f (f^2 = {f2:.6g}): {exc}") from None


def cmd_state(config: RunConfig) -> str:
    _require_json(config)
    p = config.params
    if "f" not in p:
        raise InputError("state needs --f")
    f = _param_vector(p["f"])
    if f.f2 == 0.0:
        raise InputError("f^2 = 0: extreme eigenvector direction is undefined")
    form = es.build_matrix_A(f)
    analytic = es.analytic_spectrum(f)
    trunc = p.get("trunc", min(es.default_truncation(f), STATE_TABLE_CAP))
    if trunc < 0:
        raise InputError("trunc must be >= 0")
    table = sorted(
        ((es.schmidt_weight(f, idx), idx) for idx in es.multi_indices(f.r, trunc)),
        key=lambda t: (-t[0], t[1]),
    )
    report = {
        "config": config.to_dict(include_out=False),
        "r": f.r,
        "f2": f.f2,
        "matrix_A": _floats(form.a),
        "det_A": float(np.prod(form.spectrum.eigenvalues)),
        "eigenvalues_numeric": _floats(form.spectrum.eigenvalues),
        "analytic": {
            "lambda_max": analytic.lambda_max,
            "lambda_min": analytic.lambda_min,
            "product": analytic.lambda_max * analytic.lambda_min,
            "v_max": _floats(analytic.v_max),
            "v_min": _floats(analytic.v_min),
        },
        "covariance": _floats(es.covariance(form)),
        "weights": {
            "truncation": trunc,
            "captured_mass": math.fsum(w for w, _ in table),
            "top": [{"idx": list(idx), "weight": w} for w, idx in table[:TOP_WEIGHTS]],
        },
    }
    return _json_dump(report)


def _sample_state(p: dict[str, Any]) -> es.ParamVector:
    if "f" in p:
        f = _param_vector(p["f"])
        if "g" in p and abs(p["g"] - f.f2) > ms.G_MATCH_TOL:
            raise InputError(f"--g {p['g']} disagrees with f^2 = {f.f2}")
        return f
    if "g" not in p:
        raise InputError("sample needs --f or --g")
    g = p["g"]
    if not 0.0 <= g < 1.0:
        raise InputError(f"g must lie in [0, 1), got {g}")
    weights = p.get("p", "equal")
    if weights == "equal":
        if "r" not in p:
            raise InputError("--p equal needs --r")
        if p["r"] < 1:
            raise InputError("r must be >= 1")
        weights = [1.0 / p["r"]] * p["r"]
    elif "r" in p and p["r"] != len(weights):
        raise InputError("--r disagrees with the length of --p")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise InputError("--p must be non-negative and sum to 1")
    return _param_vector(np.sqrt(g * w / w.sum()))


def cmd_sample(config: RunConfig) -> str:
    p = config.params
    if "seed" not in p:
        raise InputError("sample needs an explicit --seed")
    count = p.get("count", 1000)
    if count < 1:
        raise InputError("count must be >= 1")
    f = _sample_state(p)
    params = ms.ThermalParams(f.f2, p.get("hbar_omega", 1.0))
    n_total, occ = ms.sample_arrays(f, params, count, p["seed"])

    mean = float(n_total.mean())
    planck = ms.planck_mean(params)
    sigma = math.sqrt(params.g) / (1.0 - params.g) / math.sqrt(count)
    z = 0.0 if sigma == 0.0 else (mean - planck) / sigma
    summary = {
        "count": count,
        "mean_n_total": mean,
        "planck_mean": planck,
        "sigma_of_mean": sigma,
        "z_score": z,
        "within_3sigma": abs(mean - planck) <= 3.0 * sigma,
        "mean_occupations": _floats(occ.mean(axis=0)),
    }
    if config.output_format == "json":
        return _json_dump(
            {
                "config": config.to_dict(include_out=False),
                "samples": [
                    {"sample_index": i, "n_total": int(n), "occupations": row.tolist()}
                    for i, (n, row) in enumerate(zip(n_total, occ))
                ],
                "summary": summary,
            }
        )
    buf = io.StringIO()
    buf.write(f"# config: {config.to_json(include_out=False)}\n")
    buf.write(",".join(["sample_index", "n_total"] + [f"n_{j}" for j in range(1, f.r + 1)]) + "\n")
    table = np.column_stack([np.arange(count), n_total, occ])
    np.savetxt(buf, table, fmt="%d", delimiter=",")
    buf.write(
        "# summary: "
        + ",".join(
            f"{k}={num(v) if isinstance(v, float) else json.dumps(v)}"
            for k, v in summary.items()
            if k != "mean_occupations"
        )
        + "\n"
    )
    return buf.getvalue()


def _system(p: dict[str, Any]) -> om.OscillatorSystem:
    if "r" not in p:
        raise InputError("spectrum needs --r")
    try:
        return om.OscillatorSystem(
            p["r"],
            p.get("m", 1.0),
            p.get("m0", 1.0),
            p.get("M", 1.0),
            p.get("k", 1.0),
            p.get("chi", 1.0),
        )
    except om.ModelError as exc:
        raise InputError(str(exc)) from None


def cmd_spectrum(config: RunConfig) -> str:
    _require_json(config)
    sys_ = _system(config.params)
    modes = om.normal_modes(sys_)
    coeffs = om.secular_coefficients(sys_)
    roots = om.coupled_lambdas(sys_)
    coupled = []
    for lam in roots:
        entry: dict[str, Any] = {"lambda": lam, "soft_mode": lam == 0.0}
        entry["ratio"] = None if lam == 0.0 else om.displacement_ratio(sys_, lam)
        coupled.append(entry)
    vacuum = _floats(om.vacuum_matrix(sys_, modes))
    report = {
        "config": config.to_dict(include_out=False),
        "lambdas": _floats(modes.lambdas),
        "soft_modes": [bool(s) for s in modes.soft],
        "unit_mode_count": modes.unit_count(),
        "modes": _floats(modes.modes.T),
        "modal_masses": _floats(modes.modal_masses),
        "modal_rigidities": _floats(modes.modal_rigidities),
        "secular": {"a": coeffs.a, "b": coeffs.b, "c": coeffs.c, "coupled": coupled},
        "vacuum_matrix": vacuum,
        "xi": sys_.xi,
        "residuals": coupled_mode_errors(sys_) if not modes.soft.any() else None,
    }
    return _json_dump(report)


def xi_grid(xi_min: float, xi_max: float, points: int, log: bool) -> np.ndarray:
    if not (xi_min > 0.0 and xi_max > 0.0):
        raise InputError("xi bounds must be positive")
    if xi_max < xi_min:
        raise InputError("xi-max must be >= xi-min")
    if points < 1:
        raise InputError("points must be >= 1")
    if points == 1:
        return np.array([xi_min])
    if log:
        return np.geomspace(xi_min, xi_max, points)
    return np.linspace(xi_min, xi_max, points)


def cmd_fig2(config: RunConfig) -> str:
    p = config.params
    hbar = p.get("hbar_omega", 1.0)
    if not hbar > 0.0:
        raise InputError("hbar_omega must be positive")
    grid = xi_grid(p.get("xi_min", 0.05), p.get("xi_max", 100.0), p.get("points", 50), p.get("log", False))
    rows = om.fig2_curve(grid, hbar)
    if config.output_format == "json":
        return _json_dump(
            {
                "config": config.to_dict(include_out=False),
                "hbar_omega": hbar,
                "rows": [row._asdict() for row in rows],
            }
        )
    lines = [
        f"# config: {config.to_json(include_out=False)}",
        f"# theta and mean_energy in units where hbar_omega = {num(hbar)}",
        "xi,theta,mean_energy",
    ]
    lines += [f"{num(r.xi)},{num(r.theta)},{num(r.mean_energy)}" for r in rows]
    return "\n".join(lines) + "\n"


def cmd_verify(config: RunConfig) -> tuple[str, int]:
    _require_json(config)
    p = config.params
    fault = p.get("fault")
    if fault is not None and fault not in FAULTS:
        raise InputError(f"unknown fault {fault!r}; expected one of {', '.join(FAULTS)}")
    tol = p.get("tol")
    if tol is not None and not tol >= 0.0:
        raise InputError("tol must be >= 0")
    results = run_checks(seed=p.get("seed", DEFAULT_SEED), tol=tol, fault=fault)
    failures = [r.name for r in results if not r.passed]
    report = {
        "config": config.to_dict(include_out=False),
        "passed": not failures,
        "failures": failures,
        "checks": [
            {"name": r.name, "error": r.error, "tolerance": r.tolerance, "status": "pass" if r.passed else "fail"}
            for r in results
        ],
    }
    return _json_dump(report), (1 if failures else 0)


COMMANDS = {
    "state": cmd_state,
    "sample": cmd_sample,
    "spectrum": cmd_spectrum,
    "fig2": cmd_fig2,
    "verify": cmd_verify,
}


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file (schema 1)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=FORMATS)

    parser = argparse.ArgumentParser(
        prog="thermo-entangle",
        description="Entangled oscillator states, their measurement statistics and the partition model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", parents=[common], help="matrix A, spectra, covariance, top weights")
    p.add_argument("--f", help="comma-separated parameters f_1..f_r")
    p.add_argument("--trunc", type=int, help="max total quantum number in the weight table")

    p = sub.add_parser("sample", parents=[common], help="seeded two-stage measurement draws")
    p.add_argument("--f", help="comma-separated parameters f_1..f_r")
    p.add_argument("--g", type=float, help="Boltzmann factor g = f^2")
    p.add_argument("--p", help="comma-separated sharing weights, or 'equal'")
    p.add_argument("--r", type=int, help="number of oscillators (with --p equal)")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("spectrum", parents=[common], help="normal modes of the partition model")
    p.add_argument("--r", type=int)
    for name in ("m", "m0", "M", "k", "chi"):
        p.add_argument(f"--{name}", type=float, dest=name)

    p = sub.add_parser("fig2", parents=[common], help="temperature and excitation energy vs xi")
    p.add_argument("--xi-min", type=float, dest="xi_min")
    p.add_argument("--xi-max", type=float, dest="xi_max")
    p.add_argument("--points", type=int)
    p.add_argument("--log", action="store_true", default=None, help="logarithmic grid")
    p.add_argument("--hbar-omega", type=float, dest="hbar_omega")

    p = sub.add_parser("verify", parents=[common], help="run every invariant check")
    p.add_argument("--tol", type=float, help="override every check tolerance")
    p.add_argument("--fault", choices=FAULTS, help="inject a fault (negative control)")
    p.add_argument("--seed", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data: dict[str, Any] = {"schema": SCHEMA_VERSION, "command": args.command}
    if args.config is not None:
        try:
            loaded = json.loads(args.config.read_text())
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config must be a JSON object")
        if loaded.get("command", args.command) != args.command:
            raise InputError(f"config is for {loaded['command']!r}, not {args.command!r}")
        data.update(loaded)
    for name in list(FIELD_TYPES[args.command]) + ["out", "format"]:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return RunConfig.from_dict(data)


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        result = COMMANDS[config.command](config)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text, code = result if isinstance(result, tuple) else (result, 0)
    _write(text, config.out)
    if code:
        failed = json.loads(text)["failures"]
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
