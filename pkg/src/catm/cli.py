"""Batch front end: ``catm run``, ``catm verify`` and ``catm compare``.

Exit codes: 0 success, 1 failed property check, 2 configuration error,
3 solver failure (partial outputs are written and flagged).
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .absorber import (AbsorberShape, AbsorberSpec, Gate, PotentialForm, TargetState, WINDOW_RAMP_FRACTION,
                       WINDOW_TAIL_FRACTION, analytic_interval_solution_corrected,
                       analytic_interval_solution_first, basis_matrix, inverse_basis_matrix, sized)
from .floquet import apply, build_operator, dense_assemble
from .hilbert import ChannelBasis, TimeGrid
from .models import Envelope, ModelSystem, PulseSpec, field_nodes, make_ladder, make_two_level
from .oracle import IntervalForm, integrate_interval_ode, integrate_tdse
from .propagate import PropagationError, PropagationResult, SolverParams, StepPlan, catm_multi_step

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
MASK_THRESHOLD = 1e-7
BOUNDARY_TOLERANCE = 1e-8
ORACLE_TOLERANCE = 1e-5
INVARIANCE_TOLERANCE = 2e-3


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


# ---------------------------------------------------------------- config

_SECTIONS = {
    "model": {"factory", "n_channels", "energy_spacing", "dipole", "n_bound", "gap", "energies",
              "dipole_matrix", "bound_flags"},
    "pulse": {"duration", "carrier_frequency", "intensity", "peak_amplitude", "envelope", "ramp_fraction",
              "phase"},
    "plan": {"n_steps", "boundaries", "n_points", "dt_fraction", "potential_form", "gate", "force"},
    "absorber": {"shape", "epsilon", "v0", "ramp_fraction", "tail_fraction"},
    "solver": {"tol", "max_iter", "dense_limit"},
    "output": {"directory", "prefix", "sample_stride", "reference"},
    "initial": {"channel", "amplitudes"},
}
_FACTORY_KEYS = {
    "ladder": {"n_channels", "energy_spacing", "dipole", "n_bound"},
    "two_level": {"gap", "dipole"},
    "explicit": {"energies", "dipole_matrix"},
}


@dataclass(frozen=True)
class OutputSpec:
    directory: Path
    prefix: str = ""
    sample_stride: int = 1
    reference: bool = True


@dataclass(frozen=True)
class RunConfig:
    """Everything needed for one propagation."""

    model: ModelSystem
    pulse: PulseSpec
    plan: StepPlan
    absorber: AbsorberSpec
    solver: SolverParams
    output: OutputSpec
    psi0: np.ndarray
    source: Path


def _floats(text: str) -> np.ndarray:
    return np.array([float(x) for x in text.replace(",", " ").split()])


def _get(section, key, conv, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"[{section.name}] missing required key '{key}'")
        return default
    try:
        return conv(section[key])
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"[{section.name}] {key}: {exc}") from exc


def _one_of(section, keys):
    present = [k for k in keys if k in section]
    if len(present) != 1:
        raise ConfigError(f"[{section.name}] needs exactly one of {', '.join(keys)}")
    return present[0]


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _model(sec) -> ModelSystem:
    factory = _get(sec, "factory", str.strip, required=True)
    if factory not in _FACTORY_KEYS:
        raise ConfigError(f"[model] unknown factory '{factory}'")
    allowed = {"factory"} | _FACTORY_KEYS[factory] | ({"bound_flags"} if factory == "explicit" else set())
    extra = set(sec) - allowed
    if extra:
        raise ConfigError(f"[model] keys not used by factory '{factory}': {', '.join(sorted(extra))}")
    try:
        if factory == "ladder":
            return make_ladder(_get(sec, "n_channels", int, required=True),
                               _get(sec, "energy_spacing", float, required=True),
                               _get(sec, "dipole", float, required=True), _get(sec, "n_bound", int, required=True))
        if factory == "two_level":
            return make_two_level(_get(sec, "gap", float, required=True), _get(sec, "dipole", float, required=True))
        energies = _get(sec, "energies", _floats, required=True)
        rows = [_floats(r) for r in _get(sec, "dipole_matrix", str, required=True).split(";") if r.strip()]
        flags = _get(sec, "bound_flags", lambda s: [_bool(x) for x in s.replace(",", " ").split()])
        return ModelSystem(ChannelBasis(energies, flags), np.array(rows), label="explicit")
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from exc


def _pulse(sec) -> PulseSpec:
    amp = _one_of(sec, ("intensity", "peak_amplitude"))
    env = _get(sec, "envelope", str.strip, "sin2")
    try:
        kw = dict(envelope=Envelope(env), ramp_fraction=_get(sec, "ramp_fraction", float, 0.25),
                  phase=_get(sec, "phase", float, 0.0))
        duration = _get(sec, "duration", float, required=True)
        wc = _get(sec, "carrier_frequency", float, required=True)
        if amp == "intensity":
            return PulseSpec.from_intensity(duration, wc, _get(sec, "intensity", float), **kw)
        return PulseSpec(duration, wc, _get(sec, "peak_amplitude", float), **kw)
    except ValueError as exc:
        raise ConfigError(f"[pulse] {exc}") from exc


def _plan(sec, pulse) -> StepPlan:
    which = _one_of(sec, ("n_steps", "boundaries"))
    try:
        kw = dict(dt_fraction=_get(sec, "dt_fraction", float, 1.0),
                  potential_form=PotentialForm(_get(sec, "potential_form", str.strip, "corrected")),
                  gate=Gate(_get(sec, "gate", str.strip, "heaviside")), force=_get(sec, "force", _bool, False))
        n_points = _get(sec, "n_points", int, required=True)
        if which == "n_steps":
            return StepPlan(field_nodes(pulse, _get(sec, "n_steps", int)), n_points, **kw)
        return StepPlan(_get(sec, "boundaries", _floats), n_points, **kw)
    except ValueError as exc:
        raise ConfigError(f"[plan] {exc}") from exc


def _absorber(sec) -> AbsorberSpec:
    which = _one_of(sec, ("epsilon", "v0"))
    try:
        shape = AbsorberShape(_get(sec, "shape", str.strip, "window"))
        window = shape is AbsorberShape.WINDOW
        return AbsorberSpec(shape, V0=_get(sec, "v0", float) if which == "v0" else None,
                            target_decay=_get(sec, "epsilon", float, 1e-12),
                            ramp_fraction=_get(sec, "ramp_fraction", float, WINDOW_RAMP_FRACTION if window else 0.1),
                            tail_fraction=_get(sec, "tail_fraction", float, WINDOW_TAIL_FRACTION if window else 0.0))
    except ValueError as exc:
        raise ConfigError(f"[absorber] {exc}") from exc


def load_config(path) -> RunConfig:
    """Parse a run configuration strictly.

    Raises:
        ConfigError: on unreadable files, unknown sections or keys, missing
            required keys and invalid values.
    """
    path = Path(path)
    parser = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=(";", "#"),
                                       default_section="__none__")
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    unknown = set(parser.sections()) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    for name in ("model", "pulse", "plan", "initial", "output"):
        if not parser.has_section(name):
            raise ConfigError(f"missing section [{name}]")
    for name in parser.sections():
        extra = set(parser[name]) - _SECTIONS[name]
        if extra:
            raise ConfigError(f"[{name}] unknown keys: {', '.join(sorted(extra))}")
    model = _model(parser["model"])
    pulse = _pulse(parser["pulse"])
    plan = _plan(parser["plan"], pulse)
    if not parser.has_section("absorber"):
        parser.read_dict({"absorber": {"epsilon": "1e-12"}})
    absorber = _absorber(parser["absorber"])
    if not parser.has_section("solver"):
        parser.add_section("solver")
    sol = parser["solver"]
    solver = SolverParams(_get(sol, "tol", float, 1e-10), _get(sol, "max_iter", int, 30),
                          _get(sol, "dense_limit", int, 1024))
    out = parser["output"]
    directory = Path(_get(out, "directory", str.strip, required=True))
    if not directory.is_absolute():
        directory = (path.parent / directory).resolve()
    output = OutputSpec(directory, _get(out, "prefix", str.strip, ""), _get(out, "sample_stride", int, 1),
                        _get(out, "reference", _bool, True))
    if output.sample_stride < 1:
        raise ConfigError("[output] sample_stride must be >= 1")
    ini = parser["initial"]
    which = _one_of(ini, ("channel", "amplitudes"))
    psi0 = np.zeros(model.n_channels, complex)
    if which == "channel":
        c = _get(ini, "channel", int)
        if not 0 <= c < model.n_channels:
            raise ConfigError("[initial] channel out of range")
        psi0[c] = 1.0
    else:
        a = _get(ini, "amplitudes", _floats)
        if a.size != model.n_channels or np.linalg.norm(a) == 0:
            raise ConfigError("[initial] amplitudes must be a nonzero vector with one entry per channel")
        psi0[:] = a / np.linalg.norm(a)
    return RunConfig(model, pulse, plan, absorber, solver, output, psi0, path)


# ---------------------------------------------------------------- output

def fmt(x) -> str:
    """17-significant-digit decimal, exact on round trip."""
    return format(float(x), ".17g")


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def populations_csv(result: PropagationResult) -> str:
    """All samples with header ``t,channel_0..channel_{n-1},p_diss,is_artificial``."""
    n = result.model.n_channels
    lines = [",".join(["t"] + [f"channel_{j}" for j in range(n)] + ["p_diss", "is_artificial"])]
    P, pd = result.populations, result.p_diss
    for i, t in enumerate(result.times):
        row = [fmt(t)] + [fmt(p) for p in P[:, i]] + [fmt(pd[i]), "1" if result.is_artificial[i] else "0"]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def read_populations_csv(path) -> dict:
    """Parse a populations CSV back into arrays."""
    rows = Path(path).read_text(encoding="utf-8").splitlines()
    header = rows[0].split(",")
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]]).reshape(-1, len(header))
    n = len(header) - 3
    return dict(times=data[:, 0], populations=data[:, 1:1 + n].T, p_diss=data[:, 1 + n],
                is_artificial=data[:, 2 + n].astype(bool))


def diagnostics_json(result: PropagationResult | None, complete: bool, error: str | None) -> str:
    records = []
    for i, d in enumerate(result.per_step if result is not None else ()):
        records.append({
            "step": i,
            "alpha_real": fmt(d.alpha.real), "alpha_imag": fmt(d.alpha.imag),
            "quasi_energy_real": fmt(d.quasi_energy.real), "quasi_energy_imag": fmt(d.quasi_energy.imag),
            "residual": fmt(d.residual_norm), "boundary_error": fmt(d.boundary_error),
            "seam_jump": fmt(d.seam_jump), "iterations": d.iterations, "wrong_state": d.wrong_state,
            "alpha_deviation": None if d.alpha_deviation is None else fmt(d.alpha_deviation),
        })
    doc = {"complete": complete, "error": error, "steps": records}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _trace(header, columns) -> str:
    lines = ["# " + " ".join(header)]
    for row in zip(*columns):
        lines.append(" ".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def relative_difference(P_a: np.ndarray, P_b: np.ndarray, threshold: float = MASK_THRESHOLD) -> np.ndarray:
    """|P_b - P_a| / P_a, NaN where P_a < threshold."""
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(P_b - P_a) / P_a
    return np.where(P_a >= threshold, rel, np.nan)


def _masked_max(rel: np.ndarray) -> float:
    return float(np.nanmax(rel)) if np.any(np.isfinite(rel)) else 0.0


def write_run_outputs(cfg: RunConfig, result: PropagationResult | None, complete: bool, error: str | None) -> list:
    out = cfg.output
    base = out.directory
    written = []

    def emit(name, text):
        p = base / f"{out.prefix}{name}"
        atomic_write(p, text)
        written.append(p)

    emit("diagnostics.json", diagnostics_json(result, complete, error))
    if result is None:
        return written
    emit("populations.csv", populations_csv(result))
    n = cfg.model.n_channels
    mask = ~result.is_artificial
    t = result.times[mask][::out.sample_stride]
    P = result.populations[:, mask][:, ::out.sample_stride]
    pd = result.p_diss[mask][::out.sample_stride]
    emit("population_traces.dat", _trace(["t"] + [f"channel_{j}" for j in range(n)] + ["p_diss"],
                                         [t, *P, pd]))
    if out.reference and complete:
        ref = integrate_tdse(cfg.model, cfg.pulse, cfg.psi0, (0.0, cfg.plan.boundaries[-1]), 1e-12, t_eval=t)
        rel = relative_difference(np.abs(ref.states) ** 2, P)
        emit("relative_difference_traces.dat", _trace(["t"] + [f"channel_{j}" for j in range(n)], [t, *rel]))
    return written


def propagate(cfg: RunConfig) -> PropagationResult:
    return catm_multi_step(cfg.model, cfg.pulse, cfg.psi0, cfg.plan, cfg.absorber, cfg.solver)


# ---------------------------------------------------------------- commands

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    try:
        result = propagate(cfg)
    except PropagationError as exc:
        write_run_outputs(cfg, exc.partial, False, str(exc))
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for p in write_run_outputs(cfg, result, True, None):
        print(p)
    return EXIT_OK


def _compare_table(res_a: PropagationResult, res_b: PropagationResult, times: np.ndarray) -> tuple[str, float]:
    P_a = np.abs(res_a.wavefunction_at(times)) ** 2
    P_b = np.abs(res_b.wavefunction_at(times)) ** 2
    rel = relative_difference(P_a, P_b)
    n = P_a.shape[0]
    lines = [",".join(["t"] + [f"channel_{j}" for j in range(n)])]
    for i, t in enumerate(times):
        lines.append(",".join([fmt(t)] + [fmt(x) for x in rel[:, i]]))
    return "\n".join(lines) + "\n", _masked_max(rel)


def _same_model(a: ModelSystem, b: ModelSystem) -> bool:
    return (a.n_channels == b.n_channels and np.array_equal(a.energies, b.energies)
            and np.array_equal(a.dipole, b.dipole) and np.array_equal(a.basis.bound_flags, b.basis.bound_flags))


def cmd_compare(args) -> int:
    cfg_a, cfg_b = load_config(args.config_a), load_config(args.config_b)
    if not _same_model(cfg_a.model, cfg_b.model) or cfg_a.pulse != cfg_b.pulse:
        raise ConfigError("configs describe different models or pulses")
    try:
        res_a, res_b = propagate(cfg_a), propagate(cfg_b)
    except PropagationError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    times = res_a.physical_times[::cfg_a.output.sample_stride]
    text, worst = _compare_table(res_a, res_b, times)
    path = Path(args.output) if args.output else cfg_a.output.directory / f"{cfg_a.output.prefix}compare.csv"
    atomic_write(path, text)
    print(path)
    print(f"max masked relative difference {worst:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------- verify

@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    seconds: float
    failures: list


def _check_basis(rng) -> Check:
    worst, failures = 0.0, []
    for i in range(200):
        n = int(rng.integers(2, 33))
        psi = rng.normal(size=n) + 1j * rng.normal(size=n)
        t = TargetState.from_vector(psi)
        err = float(np.max(np.abs(basis_matrix(t.psi0, t.anchor) @ inverse_basis_matrix(t.psi0, t.anchor)
                                  - np.eye(n))))
        worst = max(worst, err)
        if err >= 1e-13:
            failures.append({"instance": i, "psi0": [[z.real, z.imag] for z in t.psi0], "error": err})
    return Check("basis_transform", not failures, worst, 1e-13, 0.0, failures)


def _interval_instance(rng, n, V0dT):
    energies = np.sort(rng.uniform(-0.5, 0.5, n))
    dT = float(rng.uniform(20.0, 80.0))
    grid = TimeGrid(float(rng.uniform(10.0, 50.0)), dT, 64)
    target = TargetState.from_vector(rng.normal(size=n) + 1j * rng.normal(size=n))
    lam = rng.normal(size=n) + 1j * rng.normal(size=n)
    spec = AbsorberSpec(AbsorberShape.CONSTANT, V0=V0dT / dT)
    return energies, grid, target, lam, spec


def _check_interval(rng) -> Check:
    worst, failures = 0.0, []
    for i in range(10):
        n = int(rng.integers(2, 9))
        energies, grid, target, lam, spec = _interval_instance(rng, n, 27.6)
        E = complex(energies[target.anchor], float(rng.uniform(-0.1, 0.1)) * spec.V0)
        for form, analytic in ((IntervalForm.CORRECTED, analytic_interval_solution_corrected),
                               (IntervalForm.FIRST, analytic_interval_solution_first)):
            a = analytic(lam, spec, grid, energies, target.anchor, target, E, grid.T)
            o = integrate_interval_ode(form, lam, spec, grid, energies, target.anchor, target, E).states[:, -1]
            err = float(np.max(np.abs(a - o)))
            worst = max(worst, err)
            if err > 1e-8:
                failures.append({"instance": i, "form": form.value, "error": err})
    return Check("interval_solutions", not failures, worst, 1e-8, 0.0, failures)


def _check_operator(rng) -> Check:
    worst, failures = 0.0, []
    for i in range(5):
        n = int(rng.integers(1, 5))
        model = ModelSystem(ChannelBasis(np.sort(rng.uniform(0, 1, n))),
                            (lambda m: m + m.T)(rng.normal(size=(n, n)) * 0.1))
        grid = TimeGrid(float(rng.uniform(20, 60)), float(rng.uniform(20, 60)), 64)
        pulse = PulseSpec(grid.T0, float(rng.uniform(0.1, 0.5)), float(rng.uniform(0.01, 0.1)))
        target = TargetState.from_vector(rng.normal(size=n) + 1j * rng.normal(size=n))
        op = build_operator(model, pulse, grid, AbsorberSpec(AbsorberShape.CONSTANT), target)
        x = rng.normal(size=n * 64) + 1j * rng.normal(size=n * 64)
        err = float(np.max(np.abs(apply(op, x) - dense_assemble(op) @ x)))
        worst = max(worst, err)
        if err > 1e-11:
            failures.append({"instance": i, "error": err})
    return Check("operator_matvec", not failures, worst, 1e-11, 0.0, failures)


def _check_boundary(rng, cfg: RunConfig, form: PotentialForm, epsilon: float) -> Check:
    """Constant-absorber interval map on the configured channels.

    Passes when the mismatch ||lambda(T)/c - psi0|| is below the absolute
    boundary tolerance; the decay-law prediction is reported alongside.
    """
    energies = cfg.model.energies
    n = energies.size
    dT = cfg.plan.dt_fraction * float(np.max(np.diff(cfg.plan.boundaries)))
    grid = TimeGrid(1.0, dT, 64)
    spec = sized(AbsorberSpec(AbsorberShape.CONSTANT, target_decay=epsilon), grid)
    analytic = (analytic_interval_solution_first if form is PotentialForm.FIRST
                else analytic_interval_solution_corrected)
    worst, failures = 0.0, []
    for i in range(10):
        target = TargetState.from_vector(rng.normal(size=n) + 1j * rng.normal(size=n))
        l = target.anchor
        lam = rng.normal(size=n) + 1j * rng.normal(size=n)
        lam_T = analytic(lam, spec, grid, energies, l, target, complex(energies[l]), grid.T)
        tilde = lam_T * target.psi0[l] / lam_T[l]
        err = float(np.linalg.norm(tilde - target.psi0))
        predicted = float(np.exp(-spec.V0 * dT))
        worst = max(worst, err)
        if err > BOUNDARY_TOLERANCE:
            failures.append({"instance": i, "form": form.value, "epsilon": epsilon, "V0_dT": spec.V0 * dT,
                             "energies": energies.tolist(), "psi0": [[z.real, z.imag] for z in target.psi0],
                             "lambda_T0": [[z.real, z.imag] for z in lam], "mismatch": err,
                             "decay_law": predicted})
    return Check("boundary_condition", not failures, worst, BOUNDARY_TOLERANCE, 0.0, failures)


def _check_oracle(cfg: RunConfig) -> Check:
    res = propagate(cfg)
    ref = integrate_tdse(cfg.model, cfg.pulse, cfg.psi0, (0.0, cfg.plan.boundaries[-1]), 1e-12,
                         t_eval=res.physical_times)
    err = float(np.max(np.abs(res.physical_populations - np.abs(ref.states) ** 2)))
    failures = [] if err <= ORACLE_TOLERANCE else [{"config": str(cfg.source), "max_abs_error": err}]
    return Check("oracle_equivalence", not failures, err, ORACLE_TOLERANCE, 0.0, failures)


def _check_invariance(cfg: RunConfig) -> Check:
    total = cfg.plan.n_steps * cfg.plan.n_points
    runs = {}
    for ns in (1, 2, 4):
        plan = replace(cfg.plan, boundaries=field_nodes(cfg.pulse, ns), n_points=total // ns)
        runs[ns] = propagate(replace(cfg, plan=plan))
    times = np.linspace(0.0, cfg.pulse.duration, 301)
    P = {k: np.abs(r.wavefunction_at(times)) ** 2 for k, r in runs.items()}
    worst, failures = 0.0, []
    for a, b in ((1, 2), (1, 4), (2, 4)):
        rel = _masked_max(relative_difference(P[a], P[b]))
        worst = max(worst, rel)
        if rel >= INVARIANCE_TOLERANCE:
            failures.append({"pair": [a, b], "max_relative_difference": rel})
    return Check("step_count_invariance", not failures, worst, INVARIANCE_TOLERANCE, 0.0, failures)


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    form = PotentialForm(args.potential_form) if args.potential_form else cfg.plan.potential_form
    epsilon = args.epsilon if args.epsilon is not None else cfg.absorber.target_decay
    run_cfg = replace(cfg, absorber=replace(cfg.absorber, V0=None, target_decay=epsilon),
                      plan=replace(cfg.plan, potential_form=form))
    rng = np.random.default_rng(args.seed)
    jobs = [lambda: _check_basis(rng), lambda: _check_interval(rng), lambda: _check_operator(rng),
            lambda: _check_boundary(rng, cfg, form, epsilon), lambda: _check_oracle(run_cfg),
            lambda: _check_invariance(run_cfg)]
    checks = []
    for job in jobs:
        t0 = time.perf_counter()
        try:
            c = job()
        except PropagationError as exc:
            c = Check("propagation", False, float("nan"), 0.0, 0.0, [{"error": str(exc)}])
        c.seconds = time.perf_counter() - t0
        checks.append(c)
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: measured {c.measured:.3e} "
              f"(tolerance {c.tolerance:.1e}, {c.seconds:.1f} s)")
    report = {
        "config": str(cfg.source), "potential_form": form.value, "epsilon": epsilon, "seed": args.seed,
        "checks": [{"name": c.name, "passed": c.passed, "measured": c.measured, "tolerance": c.tolerance,
                    "failures": c.failures} for c in checks],
    }
    path = cfg.output.directory / f"{cfg.output.prefix}verify_report.json"
    atomic_write(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(path)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catm", description="Constrained adiabatic trajectory propagation.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="propagate and write populations, diagnostics and plot data")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("verify", help="run the property suite against a config")
    v.add_argument("config")
    v.add_argument("--potential-form", choices=[f.value for f in PotentialForm if f is not PotentialForm.DIAGONAL])
    v.add_argument("--epsilon", type=float)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    c = sub.add_parser("compare", help="relative population differences between two runs")
    c.add_argument("config_a")
    c.add_argument("config_b")
    c.add_argument("--output", help="CSV path (default: next to config_a's outputs)")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
