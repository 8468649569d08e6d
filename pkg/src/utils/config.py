"""
Run configuration shared by the command line subcommands.

A config is a JSON object whose keys are the RunConfig fields. Paths (cover, fields,
mesh, out) are resolved relative to the config file; a mesh may also name one of the
built-in regression meshes. Command line flags override the scalars afterwards.

"""
import json
import os
from dataclasses import asdict, dataclass, fields as dataclass_fields
from typing import List, Optional

from .errors import ConfigError

BUILTIN_MESHES = ("tetrahedron", "octahedron", "torus", "rhombus")


@dataclass
class RunConfig:
    cover: Optional[str] = None
    fields: Optional[str] = None
    mesh: Optional[str] = None
    equilibrium: Optional[dict] = None
    x0: Optional[List[float]] = None
    c: Optional[List[float]] = None
    u0: Optional[List[float]] = None
    cell: int = 0
    order: int = 8
    tol: float = 1e-12
    t_end: float = 10.0
    seed: int = 0
    capture: float = 1e-3
    max_switches: int = 10_000
    k_max: int = 8
    rtol: float = 1e-10
    atol: float = 1e-12
    out: str = "run"

    @classmethod
    def from_dict(cls, payload, base_dir="."):
        '''Build a config from a parsed payload, resolving paths against base_dir'''
        if not isinstance(payload, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclass_fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        values = dict(payload)
        for key in ("cover", "fields", "mesh", "out"):
            value = values.get(key)
            if isinstance(value, str) and not (key == "mesh" and value in BUILTIN_MESHES):
                values[key] = os.path.normpath(os.path.join(base_dir, value))
        return cls(**values)

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as f:
            try:
                payload = json.load(f)
            except json.JSONDecodeError as err:
                raise ConfigError(f"{path}: {err}") from err
        return cls.from_dict(payload, os.path.dirname(os.path.abspath(path)))

    def override(self, **flags):
        '''Replace the scalars given on the command line (None means not given)'''
        for key, value in flags.items():
            if value is not None:
                setattr(self, key, value)
        return self

    def validate(self, required=()):
        '''Check tolerances, order, required keys and referenced files

        Args:
            required (tuple): config keys the calling command needs
        Returns:
            RunConfig: self
        '''
        for key in ("tol", "rtol", "atol", "t_end"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        if self.capture < 0:
            raise ConfigError(f"capture must be nonnegative, got {self.capture}")
        if self.order < 2:
            raise ConfigError(f"order must be at least 2, got {self.order}")
        for key in required:
            if getattr(self, key) is None:
                raise ConfigError(f"config needs '{key}'")
        for key in ("cover", "fields", "mesh"):
            path = getattr(self, key)
            if path is None or (key == "mesh" and path in BUILTIN_MESHES):
                continue
            if not os.path.exists(path):
                raise ConfigError(f"{key} file not found: {path}")
        return self

    def to_dict(self):
        return asdict(self)


def write_json(payload, path):
    '''Write indented JSON with a trailing newline, creating parent directories'''
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    return path
