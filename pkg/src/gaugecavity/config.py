"""Line-based run configuration.

Format: UTF-8, one ``key = value`` per line, ``#`` starts a comment, keys are
dotted (``grid.n``, ``time.dt_ns``). Frequencies carry their unit in the key:
``model.omega_ghz = 5.7`` means omega/2pi = 5.7 GHz, ``model.omega_rad_ns``
is taken as-is. Values are stored as written (after type conversion) so that
serializing a parsed config and parsing it again is lossless.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .field import QuadratureGrid
from .gauge import LoopSpec
from .model import ModelKind, ModelSpec, ghz_to_rad_ns
from .oracle import FockConfig
from .propagator import PropagatorConfig

PRESET_DIR = Path(__file__).with_name("presets")

FREQUENCIES = ("omega", "splitting", "g", "kappa", "gamma", "E1", "E2", "E3")


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _complex_list(text):
    return tuple(complex(item.strip().replace(" ", "")) for item in text.split(","))


def _int_list(text):
    text = text.strip()
    if text.lower() == "all":
        return "all"
    return tuple(int(item) for item in text.split(","))


def _kind(text):
    return ModelKind(text.strip()).value


SCHEMA = {
    "model.kind": _kind,
    "grid.n": int,
    "grid.L1": float,
    "grid.L2": float,
    "init.x1": float,
    "init.p1": float,
    "init.x2": float,
    "init.p2": float,
    "init.atom": _complex_list,
    "time.dt_ns": float,
    "time.t_final_ns": float,
    "time.stride": int,
    "loss.enabled": _bool,
    "loss.lambda_excited_decay": _bool,
    "output.raw_populations": _bool,
    "surfaces.p_max": float,
    "surfaces.n": int,
    "wilson.center_p1": float,
    "wilson.center_p2": float,
    "wilson.radius": float,
    "wilson.n_segments": int,
    "wilson.bands": _int_list,
    "wilson.reverse": _bool,
    "oracle.n_max": int,
    "oracle.integrator": str,
    "oracle.dt_ns": float,
}
for _name in FREQUENCIES:
    SCHEMA[f"model.{_name}_ghz"] = float
    SCHEMA[f"model.{_name}_rad_ns"] = float

DEFAULTS = {
    "grid.n": 128,
    "grid.L1": 8.0,
    "grid.L2": 12.0,
    "init.x1": 0.0,
    "init.p1": 0.0,
    "init.x2": 0.0,
    "init.p2": 0.0,
    "time.dt_ns": 1e-4,
    "time.stride": 10,
    "loss.enabled": False,
    "loss.lambda_excited_decay": False,
    "output.raw_populations": False,
    "surfaces.p_max": 4.0,
    "surfaces.n": 41,
    "wilson.center_p1": 0.0,
    "wilson.center_p2": 0.0,
    "wilson.radius": 1.0,
    "wilson.n_segments": 512,
    "wilson.bands": "all",
    "wilson.reverse": False,
    "oracle.n_max": 40,
    "oracle.integrator": "DenseExp",
    "oracle.dt_ns": 1e-3,
}


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        parts = []
        for v in value:
            if isinstance(v, complex):
                parts.append(repr(v.real) if v.imag == 0 else repr(v).strip("()"))
            else:
                parts.append(str(v))
        return ", ".join(parts)
    return str(value)


@dataclass
class RunConfig:
    values: dict
    lines: dict = field(default_factory=dict, repr=False)
    source: str | None = None

    # --- parsing ----------------------------------------------------------

    @classmethod
    def parse(cls, text, source=None):
        values, lines = {}, {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number)
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}", number)
            if key in values:
                raise ConfigError(f"duplicate key {key!r}", number)
            try:
                values[key] = SCHEMA[key](value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}", number) from None
            lines[key] = number
        cfg = cls(values, lines, source)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        path = resolve_config_path(path)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.parse(text, source=str(path))

    def serialize(self):
        return "".join(f"{key} = {_format(self.values[key])}\n" for key in sorted(self.values))

    def sha256(self):
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()

    def get(self, key):
        if key in self.values:
            return self.values[key]
        return DEFAULTS.get(key)

    def _line(self, key):
        return self.lines.get(key)

    # --- typed views -------------------------------------------------------

    def frequency(self, name, default=0.0):
        ghz, rad = f"model.{name}_ghz", f"model.{name}_rad_ns"
        if ghz in self.values and rad in self.values:
            raise ConfigError(f"give either {ghz} or {rad}, not both", self._line(rad))
        if ghz in self.values:
            return ghz_to_rad_ns(self.values[ghz])
        if rad in self.values:
            return self.values[rad]
        return default

    def model_spec(self):
        if "model.kind" not in self.values:
            raise ConfigError("model.kind is required")
        kind = ModelKind(self.values["model.kind"])
        try:
            return ModelSpec(
                kind,
                omega=self.frequency("omega", float("nan")),
                coupling_g=self.frequency("g"),
                atom_splitting=self.frequency("splitting"),
                atomic_energies=tuple(self.frequency(e) for e in ("E1", "E2", "E3")),
                kappa=self.frequency("kappa"),
                gamma=self.frequency("gamma"),
            )
        except ValueError as exc:
            line = next((self._line(k) for k in self.values if k.startswith("model.")
                         and str(exc).split()[0] in k), None)
            raise ConfigError(str(exc), line) from None

    def grid(self, n_modes):
        extents = (self.get("grid.L1"), self.get("grid.L2"))[:n_modes]
        try:
            return QuadratureGrid(n_modes, self.get("grid.n"), extents)
        except ValueError as exc:
            raise ConfigError(str(exc), self._line("grid.n")) from None

    def centers(self, n_modes):
        pairs = [(self.get("init.x1"), self.get("init.p1")), (self.get("init.x2"), self.get("init.p2"))]
        return pairs[:n_modes]

    def atomic_amplitudes(self, dim):
        atom = self.get("init.atom")
        if atom is None:
            if dim == 2:
                return np.array([-1.0, 1.0]) / math.sqrt(2.0)
            return np.array([1.0, 0.0, 0.0], dtype=complex)
        return np.array(atom, dtype=complex)

    def propagator_config(self, raw_populations=None):
        if "time.t_final_ns" not in self.values:
            raise ConfigError("time.t_final_ns is required for evolve")
        raw = self.get("output.raw_populations") if raw_populations is None else raw_populations
        try:
            return PropagatorConfig(
                dt=self.get("time.dt_ns"),
                t_final=self.get("time.t_final_ns"),
                snapshot_stride=self.get("time.stride"),
                losses_enabled=self.get("loss.enabled"),
                renormalize_observables=not raw,
                lambda_excited_decay=self.get("loss.lambda_excited_decay"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc), self._line("time.dt_ns")) from None

    def loop_spec(self):
        bands = self.get("wilson.bands")
        try:
            return LoopSpec(
                center=(self.get("wilson.center_p1"), self.get("wilson.center_p2")),
                radius=self.get("wilson.radius"),
                n_segments=self.get("wilson.n_segments"),
                bands=None if bands == "all" else bands,
                reverse=self.get("wilson.reverse"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc), self._line("wilson.radius")) from None

    def fock_config(self):
        try:
            return FockConfig(self.get("oracle.n_max"), self.get("oracle.integrator"),
                              self.get("oracle.dt_ns"))
        except ValueError as exc:
            raise ConfigError(str(exc), self._line("oracle.n_max")) from None

    def validate(self):
        """Check physical values; typed views raise ConfigError with the line number."""
        if "model.kind" in self.values:
            spec = self.model_spec()
            if spec.n_modes == 1 and ("grid.L2" in self.values or "init.x2" in self.values
                                      or "init.p2" in self.values):
                key = next(k for k in ("grid.L2", "init.x2", "init.p2") if k in self.values)
                raise ConfigError(f"{key} does not apply to the single-mode Rabi model", self._line(key))
            atom = self.get("init.atom")
            if atom is not None and len(atom) != spec.internal_dim:
                raise ConfigError(f"init.atom needs {spec.internal_dim} amplitudes", self._line("init.atom"))
            if atom is not None and abs(sum(abs(c) ** 2 for c in atom) - 1.0) > 1e-9:
                raise ConfigError("init.atom must be normalized", self._line("init.atom"))
        for key in ("time.dt_ns", "time.t_final_ns", "surfaces.p_max", "wilson.radius"):
            if key in self.values and not self.values[key] > 0:
                raise ConfigError(f"{key} must be > 0", self._line(key))
        for key in ("time.stride", "surfaces.n"):
            if key in self.values and self.values[key] < 1:
                raise ConfigError(f"{key} must be >= 1", self._line(key))
        if "oracle.integrator" in self.values and self.values["oracle.integrator"] not in ("DenseExp", "RK4"):
            raise ConfigError("oracle.integrator must be DenseExp or RK4", self._line("oracle.integrator"))
        for name in FREQUENCIES:
            self.frequency(name)


def resolve_config_path(path):
    """Accept a file path or the name of a bundled preset (with or without .cfg)."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix == ".cfg" else p.name + ".cfg"
    candidate = PRESET_DIR / name
    if candidate.exists():
        return candidate
    return p


def preset_names():
    return sorted(p.stem for p in PRESET_DIR.glob("*.cfg"))
