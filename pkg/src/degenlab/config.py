"""INI configuration: one section per module, every key optional.

``load_config`` resolves defaults and returns a :class:`RunConfig`;
``RunConfig.resolved()`` gives the flat ``section.key -> value`` echo written
to run manifests.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .field import DeGiorgiGeometry, ScalarField, box_field, sample
from .oracle import BarenblattSpec, barenblatt
from .params import ModelParams, ReactionSpec
from .solver import SolverConfig
from .walkers import JumpLaw

COMMANDS = ("solve", "walk", "certify", "validate", "sweep", "constants")

SCHEMA = {
    "run": {"command": "solve", "output_dir": "out", "seed": "0"},
    "params": {
        "alpha": "1", "beta": "0", "k1": "0", "k2": "1", "c1": "0", "theta": "1.6", "p": "2",
        "dim": "1", "epsilon_reg": "1e-2", "r0": "1", "r": "2.5", "c_cut": "4",
        "sobolev_cg": "1", "poincare_cp": "1",
    },
    "reaction": {"kind": "none", "coeff": "0", "power": "1", "s_exponent": "", "m0_bound": "1"},
    "grid": {"half_width": "5.5", "h": "0.004"},
    "initial": {"kind": "bump", "amplitude": "1", "radius": "1", "barenblatt_time": "1", "width": "0.1"},
    "solver": {
        "mode": "einstein", "t_end": "3", "snapshots": "200", "cfl_safety": "0.5", "drift": "",
        "u_floor": "0", "pme_m": "2", "upwind_drift": "false", "max_steps": "5000000", "backend": "auto",
    },
    "geometry": {"n_max": "8", "support_threshold": "1e-10"},
    "walkers": {
        "particles": "100000", "law": "gaussian", "tau_ref": "0.01", "tau_max": "", "refresh_every": "",
        "weighting": "gather", "absorption": "decay", "drift_shift": "", "hist_h": "",
    },
    "sweep": {"eps": "1e-2, 1e-3, 1e-4"},
}

INITIAL_KINDS = ("bump", "barenblatt", "gaussian", "point", "zero")


class ConfigError(ValueError):
    """Malformed configuration (unknown section/key, unparsable value)."""


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.replace(";", ",").split(","))


def _opt_float(text: str) -> Optional[float]:
    text = text.strip()
    return float(text) if text else None


@dataclass
class RunConfig:
    command: str
    params: ModelParams
    solver: SolverConfig
    law: JumpLaw
    geometry: DeGiorgiGeometry
    output_dir: Path
    seed: int
    raw: dict

    def get(self, section: str, key: str) -> str:
        return self.raw[section][key]

    def grid(self) -> ScalarField:
        g = self.raw["grid"]
        return box_field(float(g["half_width"]), float(g["h"]), self.params.dim)

    def initial_field(self) -> ScalarField:
        ini = self.raw["initial"]
        kind = ini["kind"]
        amp, rad = float(ini["amplitude"]), float(ini["radius"])
        grid = self.grid()
        if kind == "bump":
            # smooth compactly supported bump inside B_radius
            return sample(lambda x: amp * np.clip(1 - (x**2).sum(axis=0) / rad**2, 0, None) ** 2, grid)
        if kind == "barenblatt":
            spec = BarenblattSpec.from_constant(self.solver.pme_m, self.params.dim, amp)
            t0 = float(ini["barenblatt_time"])
            return sample(lambda x: barenblatt(x, t0, spec), grid)
        if kind == "gaussian":
            w = float(ini["width"])
            return sample(lambda x: amp * np.exp(-(x**2).sum(axis=0) / (2 * w**2)), grid)
        if kind == "point":
            vals = np.zeros(grid.shape)
            vals[tuple(s // 2 for s in grid.shape)] = amp / grid.h**grid.dim
            return grid.with_values(vals)
        return grid

    def snapshot_times(self, t_end: Optional[float] = None) -> tuple:
        t_end = self.solver.t_end if t_end is None else t_end
        k = int(self.raw["solver"]["snapshots"])
        return tuple(t_end * np.arange(1, k + 1) / k) if k > 0 else ()

    def resolved(self) -> dict:
        return {f"{s}.{k}": v for s, keys in self.raw.items() for k, v in keys.items()}


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Read an INI file (or just defaults) and build every typed config object.

    Raises :class:`ConfigError` for structural problems and ``ValueError`` for
    values that parse but violate a constructor invariant.
    """
    cp = configparser.ConfigParser(interpolation=None)
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = {s: dict(keys) for s, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
            raw[sec][key] = val.strip()
    for dotted, val in (overrides or {}).items():
        sec, _, key = dotted.partition(".")
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            raise ConfigError(f"unknown key {dotted}")
        raw[sec][key] = str(val)
    try:
        return _build(raw)
    except (TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        if "could not convert" in str(exc) or "invalid literal" in str(exc):
            raise ConfigError(str(exc)) from exc
        raise


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _build(raw: dict) -> RunConfig:
    run = raw["run"]
    command = run["command"]
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    if raw["initial"]["kind"] not in INITIAL_KINDS:
        raise ConfigError(f"unknown initial kind {raw['initial']['kind']!r}")
    p = raw["params"]
    rx = raw["reaction"]
    reaction = ReactionSpec(
        kind=rx["kind"], coeff=float(rx["coeff"]), power=float(rx["power"]),
        s_exponent=_opt_float(rx["s_exponent"]), m0_bound=float(rx["m0_bound"]),
    )
    params = ModelParams(
        alpha=float(p["alpha"]), beta=float(p["beta"]), k1=float(p["k1"]), k2=float(p["k2"]),
        c1=float(p["c1"]), theta=float(p["theta"]), p=float(p["p"]), dim=int(p["dim"]),
        epsilon_reg=float(p["epsilon_reg"]), r0=float(p["r0"]), r=float(p["r"]),
        c_cut=float(p["c_cut"]), sobolev_cg=float(p["sobolev_cg"]),
        poincare_cp=float(p["poincare_cp"]), reaction=reaction,
    )
    geom = DeGiorgiGeometry(params.r0, params.r, int(raw["geometry"]["n_max"]))
    s = raw["solver"]
    t_end = float(s["t_end"])
    k = int(s["snapshots"])
    solver = SolverConfig(
        params=params, t_end=t_end, mode=s["mode"], drift=_floats(s["drift"]),
        cfl_safety=float(s["cfl_safety"]),
        snapshot_times=tuple(t_end * np.arange(1, k + 1) / k) if k > 0 else (),
        u_floor=float(s["u_floor"]), pme_m=float(s["pme_m"]), upwind_drift=_bool(s["upwind_drift"]),
        max_steps=int(s["max_steps"]), backend=s["backend"],
    )
    w = raw["walkers"]
    law = JumpLaw(distribution=w["law"], k2=params.k2, tau_ref=float(w["tau_ref"]),
                  drift_shift=_floats(w["drift_shift"]))
    int(w["particles"])
    _floats(raw["sweep"]["eps"])
    return RunConfig(command, params, solver, law, geom, Path(run["output_dir"]), int(run["seed"]), raw)
