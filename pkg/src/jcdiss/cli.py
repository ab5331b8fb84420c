"""Batch front end: ``jcdiss simulate|validate|error-study <config.json>``.

Config keys: omega0, Omega, mu, nu, dim, margin, initial{qubit, cavity},
method, tMax, samples, rk4StepsPerSample, compareOracle, outputFormat,
outputPath, errorStudy. ``--set key=value`` overrides a key (values are read
as JSON when possible, ``initial.qubit=plus`` reaches into the nested object).
"""
from __future__ import annotations

import argparse
import copy
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fock import TruncationConfig
from .model import ModelParams
from .observables import DiagnosticsRow, diagnostics
from .oracle import ErrorFit, IntegrationPlan, expm_propagate, fit_error_order, rk4_master
from .propagators import zassenhaus_propagate
from .states import (
    BlockDensityMatrix,
    coherent_amplitudes,
    coherent_leakage,
    fock_density,
    product_state,
    qubit_state,
    thermal_density,
)

CSV_HEADER = "time,trace_re,trace_im,herm_defect,purity,pop_excited,pop_ground,mean_photons,leakage,fidelity,err_norm"
FIDELITY_NOTE = "# fidelity: overlap Re tr(rho sigma)/sqrt(tr(rho^2) tr(sigma^2)), not the Uhlmann fidelity"
METHODS = ("zassenhaus2", "zassenhaus3", "expm", "rk4")
KNOWN_KEYS = {
    "omega0", "Omega", "mu", "nu", "dim", "margin", "initial", "method", "tMax", "samples",
    "rk4StepsPerSample", "compareOracle", "outputFormat", "outputPath", "errorStudy",
}  # fmt: skip
REQUIRED_KEYS = ("omega0", "Omega", "mu", "nu", "dim", "initial", "method", "tMax", "samples")
DEFAULT_ERROR_STUDY = [0.025, 0.05, 0.1, 0.2, 0.4]

LEAKAGE_GUARD = 1e-6
TRACE_GUARD = 1e-6
COHERENT_LEAKAGE_WARN = 1e-6

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE, EXIT_GUARD = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitialStateSpec:
    qubit: str
    cavity: str

    def build(self, dim: int) -> BlockDensityMatrix:
        kind, _, arg = self.cavity.partition(":")
        q = qubit_state(self.qubit)
        if kind == "fock":
            return product_state(q, fock_density(int(arg), dim))
        if kind == "coherent":
            return product_state(q, coherent_amplitudes(complex(arg), dim))
        if kind == "thermal":
            return product_state(q, thermal_density(float(arg), dim))
        raise ConfigError(f"unknown cavity state {self.cavity!r}")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    initial: InitialStateSpec
    method: str
    t_max: float
    samples: int
    rk4_steps_per_sample: int | None = None
    compare_oracle: bool = False
    output_format: str = "csv"
    output_path: str = "-"
    error_study: list | None = None
    echo: dict = field(default_factory=dict)

    def times(self) -> list:
        if self.t_max == 0:
            return [0.0]
        return [self.t_max * k / self.samples for k in range(self.samples + 1)]


def _number(doc, key, kind=float):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return kind(v)


def _parse_cavity(cavity: str, dim: int) -> None:
    kind, sep, arg = cavity.partition(":")
    if not sep:
        raise ConfigError(f"cavity state must look like kind:value, got {cavity!r}")
    try:
        if kind == "fock":
            n = int(arg)
            if n < 0:
                raise ConfigError(f"Fock level must be >= 0, got {n}")
            if n >= dim:
                raise ConfigError(f"Fock level n={n} must be < dim={dim}")
        elif kind == "coherent":
            alpha = complex(arg)
            leak = coherent_leakage(alpha, dim)
            if leak > COHERENT_LEAKAGE_WARN:
                warnings.warn(
                    f"coherent state |alpha|^2={abs(alpha) ** 2:.3g} loses {leak:.3g} of its weight above dim={dim}",
                    UserWarning,
                    stacklevel=3,
                )
        elif kind == "thermal":
            if float(arg) < 0:
                raise ConfigError("thermal mean occupancy must be >= 0")
        else:
            raise ConfigError(f"unknown cavity state kind {kind!r} (fock, coherent, thermal)")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse cavity value {arg!r}: {exc}") from None


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    for key in doc:
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ConfigError(f"missing required key {key!r}")

    mu, nu = _number(doc, "mu"), _number(doc, "nu")
    if not mu > nu:
        raise ConfigError(f"requires mu > nu (got mu={mu}, nu={nu})")
    if nu < 0:
        raise ConfigError(f"requires nu >= 0 (got nu={nu})")
    dim = _number(doc, "dim", int)
    if dim < 2:
        raise ConfigError(f"dim must be >= 2, got {dim}")
    margin = _number(doc, "margin", int) if "margin" in doc else min(2, dim - 2)
    try:
        trunc = TruncationConfig(dim, margin)
        params = ModelParams(_number(doc, "omega0"), _number(doc, "Omega"), mu, nu, trunc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    init = doc["initial"]
    if not isinstance(init, dict) or set(init) != {"qubit", "cavity"}:
        raise ConfigError("initial must be an object with exactly the keys qubit and cavity")
    if init["qubit"] not in ("excited", "ground", "plus"):
        raise ConfigError(f"initial.qubit must be excited, ground or plus, got {init['qubit']!r}")
    _parse_cavity(str(init["cavity"]), dim)
    initial = InitialStateSpec(init["qubit"], str(init["cavity"]))

    method = doc["method"]
    if method not in METHODS:
        raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {method!r}")
    t_max = _number(doc, "tMax")
    if not (t_max >= 0 and math.isfinite(t_max)):
        raise ConfigError(f"tMax must be finite and >= 0, got {t_max}")
    samples = _number(doc, "samples", int)
    if samples < 1:
        raise ConfigError(f"samples must be >= 1, got {samples}")

    steps = doc.get("rk4StepsPerSample")
    if method == "rk4":
        if steps is None:
            raise ConfigError("rk4StepsPerSample is required when method is rk4")
        steps = _number(doc, "rk4StepsPerSample", int)
        if steps < 1:
            raise ConfigError(f"rk4StepsPerSample must be >= 1, got {steps}")

    compare = doc.get("compareOracle", False)
    if not isinstance(compare, bool):
        raise ConfigError("compareOracle must be true or false")
    fmt = doc.get("outputFormat", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"outputFormat must be csv or json, got {fmt!r}")
    out_path = doc.get("outputPath", "-")
    if not isinstance(out_path, str) or not out_path:
        raise ConfigError("outputPath must be a nonempty string")

    study = doc.get("errorStudy")
    if study is not None:
        if not isinstance(study, list) or len(study) < 4:
            raise ConfigError("errorStudy must be a list of at least 4 time values")
        study = [float(v) for v in study]
        if any(v <= 0 for v in study) or any(b <= a for a, b in zip(study, study[1:])):
            raise ConfigError("errorStudy values must be positive and strictly increasing")

    return RunConfig(
        params=params,
        initial=initial,
        method=method,
        t_max=t_max,
        samples=samples,
        rk4_steps_per_sample=steps if method == "rk4" else None,
        compare_oracle=compare,
        output_format=fmt,
        output_path=out_path,
        error_study=study,
        echo=copy.deepcopy(doc),
    )


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    return config_from_dict(doc)


def apply_overrides(doc: dict, overrides) -> dict:
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = doc
        *parents, leaf = key.split(".")
        for part in parents:
            target = target.setdefault(part, {})
        target[leaf] = value
    return doc


# ---------------------------------------------------------------------------


@dataclass
class SimulationResult:
    rows: list
    error_fit: ErrorFit | None = None
    guards: list = field(default_factory=list)


def _thread_count() -> int:
    raw = os.environ.get("SIM_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _single_shot(cfg: RunConfig, rho0: BlockDensityMatrix, t: float) -> BlockDensityMatrix:
    if cfg.method == "expm":
        return expm_propagate(cfg.params, rho0, t)
    return zassenhaus_propagate(cfg.params, t, rho0, order=3 if cfg.method == "zassenhaus3" else 2)


def simulate(cfg: RunConfig) -> SimulationResult:
    p = cfg.params
    rho0 = cfg.initial.build(p.dim)
    times = cfg.times()

    if cfg.method == "rk4":
        if cfg.t_max == 0:
            states = [rho0]
        else:
            plan = IntegrationPlan(cfg.t_max, cfg.samples * cfg.rk4_steps_per_sample, cfg.rk4_steps_per_sample)
            states = [s for _, s in rk4_master(p, rho0, plan)]
    else:
        with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
            states = list(pool.map(lambda t: _single_shot(cfg, rho0, t), times))

    oracles = [None] * len(times)
    if cfg.compare_oracle:
        with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
            oracles = list(pool.map(lambda t: expm_propagate(p, rho0, t), times))

    rows = [diagnostics(s, o, time=t) for t, s, o in zip(times, states, oracles)]
    result = SimulationResult(rows)

    for row in rows:
        if row.leakage > LEAKAGE_GUARD:
            result.guards.append(f"leakage {row.leakage:.3g} > {LEAKAGE_GUARD} at t={row.time}")
            break
    for row in rows:
        if abs(row.trace - 1) > TRACE_GUARD:
            result.guards.append(f"trace drift {abs(row.trace - 1):.3g} > {TRACE_GUARD} at t={row.time}")
            break

    if cfg.error_study:
        order = 3 if cfg.method == "zassenhaus3" else 2
        result.error_fit = fit_error_order(p, rho0, cfg.error_study, order=order)
    return result


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _fit_record(fit: ErrorFit, order: int) -> dict:
    return {
        "order": order,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "degenerate": fit.degenerate,
        "asymptotic": fit.asymptotic,
        "t_values": fit.t_values,
        "errors": fit.errors,
    }


def render(cfg: RunConfig, result: SimulationResult) -> str:
    order = 3 if cfg.method == "zassenhaus3" else 2
    if cfg.output_format == "json":
        doc = {"rows": [r.as_record() for r in result.rows]}
        if result.error_fit is not None:
            doc["error_fit"] = _fit_record(result.error_fit, order)
        doc["config_echo"] = cfg.echo
        if cfg.compare_oracle:
            doc["fidelity_definition"] = FIDELITY_NOTE.lstrip("# ")
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"

    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in result.rows:
        rec = r.as_record()
        buf.write(",".join(_fmt(rec[k]) for k in CSV_HEADER.split(",")) + "\n")
    if cfg.compare_oracle:
        buf.write(FIDELITY_NOTE + "\n")
    if result.error_fit is not None:
        buf.write("# error_fit " + json.dumps(_fit_record(result.error_fit, order)) + "\n")
    return buf.getvalue()


def run_simulation(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        result = simulate(cfg)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: propagation failed: {exc}", file=stderr)
        return EXIT_FAILURE
    text = render(cfg, result)
    if cfg.output_path == "-":
        stdout.write(text)
    else:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    for msg in result.guards:
        print(f"guard: {msg}", file=stderr)
    if result.error_fit is not None and not result.error_fit.asymptotic:
        for note in result.error_fit.notes:
            print(f"error study: {note}", file=stderr)
    return EXIT_GUARD if result.guards else EXIT_OK


def _load(path: str, overrides) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(apply_overrides(doc, overrides))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jcdiss", description="Damped Jaynes-Cummings simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "run a propagation and write diagnostics"),
        ("validate", "check a config file and exit"),
        ("error-study", "simulate with oracle comparison and a log-log error fit"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config")
        cmd.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.command == "error-study":
        overrides.insert(0, "compareOracle=true")
    try:
        cfg = _load(args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {cfg.method}, dim={cfg.params.dim}, {len(cfg.times())} sample(s)")
        return EXIT_OK
    if args.command == "error-study" and cfg.error_study is None:
        cfg = config_from_dict({**cfg.echo, "errorStudy": DEFAULT_ERROR_STUDY})
    return run_simulation(cfg)


if __name__ == "__main__":
    sys.exit(main())
