"""Experiment configuration (JSON) and SI <-> natural unit conversion.

Natural units: hbar = k_B = 1, energies in units of hbar*omega_q and times
in units of 1/omega_q, where omega_q = 2 pi * ``omega_q_hz``.

Schema (``null``/absent entries take the listed default)::

    {
      "system": {"omega_q_hz": 6.541e9,          # ordinary frequency, Hz
                 "Omega_R_hz": 1e6,              # or "rabi_ratio": Omega_R/omega_q
                 "psi_rad": 0.7853981633974483,  # default 0
                 "t_final": 2.0943951023931953,  # default 2 pi/3
                 "t_final_units": "natural"},    # or "seconds"
      "bath":   {"temperature_K": 0.14},         # or "beta_natural"
      "meter":  {"kernel": "box", "sigma": 2.0}, # sigma in units of hbar*omega_q
      "run":    {"n_trials": 100000, "master_seed": 0,
                 "sweep": {"axis": "beta_sigma", "grid": [0.5, 1.0]}},
                 # or {"axis": ..., "start": a, "stop": b, "num": n, "spacing": "linear"|"log"}
      "output": {"path": "out.csv", "format": "csv"}
    }
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DEFAULT_T_FINAL
from .errors import ParseError, ValidationError

# CODATA 2018 (exact SI definitions)
PLANCK = 6.62607015e-34  # J s
HBAR = PLANCK / (2.0 * math.pi)  # J s
BOLTZMANN = 1.380649e-23  # J / K

AXES = ("beta_sigma", "rabi_ratio")
KERNELS = ("box", "gaussian")


def beta_from_temperature(temperature_k: float, omega_q_hz: float) -> float:
    """hbar omega_q / (k_B T) with omega_q = 2 pi omega_q_hz."""
    return HBAR * 2.0 * math.pi * omega_q_hz / (BOLTZMANN * temperature_k)


def temperature_from_beta(beta: float, omega_q_hz: float) -> float:
    return HBAR * 2.0 * math.pi * omega_q_hz / (BOLTZMANN * beta)


def seconds_to_natural(t: float, omega_q_hz: float) -> float:
    return 2.0 * math.pi * omega_q_hz * t


def natural_to_seconds(tau: float, omega_q_hz: float) -> float:
    return tau / (2.0 * math.pi * omega_q_hz)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration, already converted to natural units."""

    beta: float
    rabi_ratio: float
    psi: float
    t_final: float
    kernel: str
    sigma: float
    n_trials: int
    master_seed: int
    sweep_axis: str | None
    sweep_grid: tuple
    output_path: str | None
    output_format: str
    raw: dict

    def with_overrides(self, seed=None, trials=None, out=None) -> ExperimentConfig:
        raw = copy.deepcopy(self.raw)
        run = raw.setdefault("run", {})
        if seed is not None:
            run["master_seed"] = seed
        if trials is not None:
            run["n_trials"] = trials
        if out is not None:
            raw.setdefault("output", {})["path"] = out
        return parse_config(raw)

    def digest(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _section(raw, name, required=True) -> dict:
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ValidationError(name, "missing section")
        return {}
    if not isinstance(sec, dict):
        raise ValidationError(name, "must be an object")
    return sec


def _number(sec, prefix, key, default=None, required=False, positive=False, nonneg=False) -> float | None:
    name = f"{prefix}.{key}"
    v = sec.get(key)
    if v is None:
        if required:
            raise ValidationError(name, "missing")
        return default
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(name, "must be a finite number")
    if positive and v <= 0:
        raise ValidationError(name, "must be positive")
    if nonneg and v < 0:
        raise ValidationError(name, "must be non-negative")
    return float(v)


def _integer(sec, prefix, key, default, minimum=None, maximum=None) -> int:
    name = f"{prefix}.{key}"
    v = sec.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(name, "must be an integer")
    if minimum is not None and v < minimum:
        raise ValidationError(name, f"must be at least {minimum}")
    if maximum is not None and v > maximum:
        raise ValidationError(name, f"must be at most {maximum}")
    return v


def _grid(sweep: dict) -> tuple:
    if "grid" in sweep:
        grid = sweep["grid"]
        if not isinstance(grid, list) or not grid:
            raise ValidationError("run.sweep.grid", "must be a non-empty list")
        for v in grid:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ValidationError("run.sweep.grid", "entries must be finite non-negative numbers")
        return tuple(float(v) for v in grid)
    start = _number(sweep, "run.sweep", "start", required=True, nonneg=True)
    stop = _number(sweep, "run.sweep", "stop", required=True, nonneg=True)
    num = _integer(sweep, "run.sweep", "num", None if "num" in sweep else 30, minimum=1)
    spacing = sweep.get("spacing", "linear")
    if spacing == "linear":
        return tuple(float(v) for v in np.linspace(start, stop, num))
    if spacing == "log":
        if start <= 0 or stop <= 0:
            raise ValidationError("run.sweep.start", "log spacing needs positive bounds")
        return tuple(float(v) for v in np.geomspace(start, stop, num))
    raise ValidationError("run.sweep.spacing", "must be 'linear' or 'log'")


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a decoded JSON document; errors name the offending field."""
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "config must be a JSON object")
    system = _section(raw, "system")
    bath = _section(raw, "bath")
    meter = _section(raw, "meter")
    run = _section(raw, "run", required=False)
    output = _section(raw, "output", required=False)

    omega_q_hz = _number(system, "system", "omega_q_hz", positive=True)

    def need_frequency(field):
        if omega_q_hz is None:
            raise ValidationError("system.omega_q_hz", f"required to convert {field}")
        return omega_q_hz

    if ("Omega_R_hz" in system) == ("rabi_ratio" in system):
        raise ValidationError("system.Omega_R_hz", "give exactly one of Omega_R_hz or rabi_ratio")
    if "rabi_ratio" in system:
        rabi_ratio = _number(system, "system", "rabi_ratio", required=True, nonneg=True)
    else:
        omega_r = _number(system, "system", "Omega_R_hz", required=True, nonneg=True)
        rabi_ratio = omega_r / need_frequency("system.Omega_R_hz")
    psi = _number(system, "system", "psi_rad", default=0.0)
    units = system.get("t_final_units", "natural")
    if units not in ("natural", "seconds"):
        raise ValidationError("system.t_final_units", "must be 'natural' or 'seconds'")
    t_final = _number(system, "system", "t_final", default=None, nonneg=True)
    if t_final is None:
        t_final = DEFAULT_T_FINAL
    elif units == "seconds":
        t_final = seconds_to_natural(t_final, need_frequency("system.t_final"))

    has_t = bath.get("temperature_K") is not None
    has_b = bath.get("beta_natural") is not None
    if has_t == has_b:
        raise ValidationError("bath", "give exactly one of temperature_K or beta_natural")
    if has_t:
        temperature = _number(bath, "bath", "temperature_K", required=True, positive=True)
        beta = beta_from_temperature(temperature, need_frequency("bath.temperature_K"))
    else:
        beta = _number(bath, "bath", "beta_natural", required=True, nonneg=True)

    kernel = meter.get("kernel", "box")
    if kernel not in KERNELS:
        raise ValidationError("meter.kernel", f"must be one of {KERNELS}")
    sigma = _number(meter, "meter", "sigma", required=True, positive=True)

    n_trials = _integer(run, "run", "n_trials", 100_000, minimum=100)
    seed = _integer(run, "run", "master_seed", 0, minimum=0, maximum=2**64 - 1)
    sweep = run.get("sweep")
    axis, grid = None, ()
    if sweep is not None:
        if not isinstance(sweep, dict):
            raise ValidationError("run.sweep", "must be an object")
        axis = sweep.get("axis")
        if axis not in AXES:
            raise ValidationError("run.sweep.axis", f"must be one of {AXES}")
        grid = _grid(sweep)

    path = output.get("path")
    if path is not None and not isinstance(path, str):
        raise ValidationError("output.path", "must be a string")
    fmt = output.get("format", "csv")
    if fmt != "csv":
        raise ValidationError("output.format", "only 'csv' is supported")

    return ExperimentConfig(
        beta=beta, rabi_ratio=rabi_ratio, psi=psi, t_final=t_final, kernel=kernel, sigma=sigma,
        n_trials=n_trials, master_seed=seed, sweep_axis=axis, sweep_grid=grid,
        output_path=path, output_format=fmt, raw=copy.deepcopy(raw),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"config file not found: {path}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


FIG1_CONFIG = {
    "system": {"omega_q_hz": 6.541e9, "Omega_R_hz": 1e6, "psi_rad": math.pi / 4,
               "t_final": DEFAULT_T_FINAL, "t_final_units": "natural"},
    "bath": {"temperature_K": 0.14},
    "meter": {"kernel": "box", "sigma": 1.0},
    "run": {"n_trials": 100_000, "master_seed": 20240601,
            "sweep": {"axis": "beta_sigma", "start": 0.2, "stop": 6.0, "num": 30, "spacing": "linear"}},
    "output": {"path": None, "format": "csv"},
}

FIG2_CONFIG = {
    "system": {"omega_q_hz": 6.541e9, "rabi_ratio": 1e-5, "psi_rad": 0.0,
               "t_final": DEFAULT_T_FINAL, "t_final_units": "natural"},
    "bath": {"temperature_K": 0.14},
    "meter": {"kernel": "box", "sigma": 2.0},
    "run": {"n_trials": 100_000, "master_seed": 20240601,
            "sweep": {"axis": "rabi_ratio", "start": 1e-5, "stop": 1e-1, "num": 9, "spacing": "log"}},
    "output": {"path": None, "format": "csv"},
}
