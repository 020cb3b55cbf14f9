"""Scenario schemas. Units are part of every field name; unknown keys are rejected."""
import copy
import hashlib
import json
import re
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from .errors import ConfigError



class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e12`` and ``1.8e12`` as floats."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?$|^[-+]?\.(?:inf|Inf|INF)$|^\.(?:nan|NaN|NAN)$"),
    list("-+0123456789."),
)

KINDS = ("slab", "trap", "vacuum-lattice", "coupling", "budget", "spins", "sweep")


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LinAxis(_Model):
    start: float
    stop: float
    num: int = Field(ge=1)

    def values(self):
        return np.linspace(self.start, self.stop, self.num)


class LogAxis(_Model):
    start: float = Field(gt=0)
    stop: float = Field(gt=0)
    num: int = Field(ge=1)

    def values(self):
        return np.geomspace(self.start, self.stop, self.num)


class _SpeciesMixin(_Model):
    species: str = "Rb87-D2"
    eta: Optional[float] = Field(default=None, gt=0, le=1)


# ---------------------------------------------------------------- slab


class SlabScenario(_Model):
    kind: Literal["slab"] = "slab"
    n: float = Field(default=3.25, gt=1)
    lambda_nm: float = Field(default=780.0, gt=0)
    W_nm: List[float] = Field(default_factory=lambda: [150.0, 300.0, 1000.0, 10000.0])


# ---------------------------------------------------------------- traps


class SlabGeometryConf(_Model):
    n: float = Field(default=3.25, gt=1)
    W_nm: float = Field(default=150.0, gt=0)
    R_nm: float = Field(default=0.0, ge=0)


class CPConf(_Model):
    variant: Literal["analytic_plane", "analytic_hole", "ingested_grid", "none"] = "analytic_plane"
    grid_file: Optional[str] = None
    interpolation: Literal["linear", "cubic"] = "linear"

    @model_validator(mode="after")
    def _grid_needs_file(self):
        if self.variant == "ingested_grid" and not self.grid_file:
            raise ValueError("ingested_grid needs grid_file")
        return self


class SIConf(_Model):
    lambda_nm: float = Field(default=760.0, gt=0)
    Omega_2pi_Hz: float = Field(default=1.0e11, ge=0)
    z_t_nm: float = Field(default=65.0, gt=0)


class GMConf(_Model):
    lambda_nm: float = Field(default=790.0, gt=0)
    Omega_2pi_Hz: float = Field(default=1.0e10, ge=0)
    pattern: Literal["incoherent_xy_sum", "single_axis"] = "incoherent_xy_sum"
    branch: int = Field(default=0, ge=0)


class ScanConf(_Model):
    x_nm: LinAxis = LinAxis(start=-60.0, stop=60.0, num=25)
    y_nm: LinAxis = LinAxis(start=-60.0, stop=60.0, num=25)
    z_nm: LinAxis = LinAxis(start=30.0, stop=150.0, num=49)
    cut_points: int = Field(default=201, ge=3)


class TrapScenario(_SpeciesMixin):
    kind: Literal["trap"] = "trap"
    slab: SlabGeometryConf = SlabGeometryConf()
    cp: CPConf = CPConf()
    si: Optional[SIConf] = SIConf()
    gm: Optional[GMConf] = GMConf()
    scan: ScanConf = ScanConf()

    @model_validator(mode="after")
    def _three_d(self):
        for name in ("x_nm", "y_nm", "z_nm"):
            if getattr(self.scan, name).num < 3:
                raise ValueError(f"scan.{name} needs at least 3 samples")
        if self.cp.variant == "analytic_hole" and self.slab.R_nm <= 0:
            raise ValueError("analytic_hole needs slab.R_nm > 0")
        return self


class VacuumLatticeScenario(TrapScenario):
    kind: Literal["vacuum-lattice"] = "vacuum-lattice"
    cp: CPConf = CPConf(variant="ingested_grid", grid_file="cp_grid.txt")
    gm: Optional[GMConf] = None


# ---------------------------------------------------------------- couplings


class PatchConf(_Model):
    A_um2_per_s: float = 1.8e12
    L_m_um: float = Field(default=0.3, gt=0)
    d_nm: float = Field(default=316.0, gt=0)


class KernelConf(_Model):
    xi_over_d: float = Field(default=100.0, gt=0)
    r_over_d: LinAxis = LinAxis(start=1.0, stop=300.0, num=300)


class BZConf(_Model):
    band_file: Optional[str] = None
    synthetic_points: int = Field(default=129, ge=8)
    Delta_2pi_Hz: LogAxis = LogAxis(start=1.0e7, stop=1.0e8, num=6)
    r_over_d: List[float] = Field(default_factory=lambda: [1.0, 0.0])


class CouplingScenario(_SpeciesMixin):
    kind: Literal["coupling"] = "coupling"
    patch: PatchConf = PatchConf()
    A_sweep_um2_per_s: Optional[LogAxis] = LogAxis(start=1.0e11, stop=1.0e13, num=21)
    kernel: Optional[KernelConf] = KernelConf()
    bz: Optional[BZConf] = None


class BudgetScenario(_SpeciesMixin):
    kind: Literal["budget"] = "budget"
    patch: PatchConf = PatchConf()
    Q: float = Field(default=1.0e7, gt=0)
    Gamma_prime_over_Gamma_a: float = Field(default=0.4, ge=0)
    Delta_2pi_Hz: LogAxis = LogAxis(start=1.0e8, stop=1.0e12, num=81)
    optimize: bool = True


# ---------------------------------------------------------------- spins


class UniformCouplings(_Model):
    mode: Literal["uniform"] = "uniform"
    Jxy_2pi_Hz: float = 1.0e6
    Jz_2pi_Hz: float = 0.0
    gamma_xy_2pi_Hz: float = Field(default=0.0, ge=0)
    gamma_z_2pi_Hz: float = Field(default=0.0, ge=0)


class LambdaCouplings(_Model):
    mode: Literal["lambda"] = "lambda"
    Omega_1_2pi_Hz: float = 1.0e9
    Omega_2_2pi_Hz: float = 1.0e9
    Delta_1_2pi_Hz: float = 2.0e10
    Delta_z_2pi_Hz: float = -1.0e10
    Delta_xy_2pi_Hz: float = -1.0e10
    hyperfine_2pi_Hz: float = 6.834682610904e9
    patch: PatchConf = PatchConf()


class SpinsScenario(_SpeciesMixin):
    kind: Literal["spins"] = "spins"
    lattice: List[int] = Field(default_factory=lambda: [2, 1], min_length=2, max_length=2)
    couplings: Annotated[Union[UniformCouplings, LambdaCouplings], Field(discriminator="mode")] = UniformCouplings()
    initial: str = "g2,g1"
    t_final_s: float = Field(default=1.0e-6, gt=0)
    n_times: int = Field(default=101, ge=2)
    include_onsite: bool = True

    @model_validator(mode="after")
    def _sizes(self):
        n = self.lattice[0] * self.lattice[1]
        if not 1 <= n <= 10:
            raise ValueError("lattice must hold 1..10 sites")
        if len(self.initial.split(",")) != n:
            raise ValueError(f"initial state lists {len(self.initial.split(','))} sites, lattice has {n}")
        return self


SingleScenario = Annotated[
    Union[SlabScenario, TrapScenario, VacuumLatticeScenario, CouplingScenario, BudgetScenario, SpinsScenario],
    Field(discriminator="kind"),
]


class SweepScenario(_Model):
    kind: Literal["sweep"] = "sweep"
    base: SingleScenario
    axes: Dict[str, List[Union[float, int, str, bool]]] = Field(default_factory=dict)


Scenario = Annotated[
    Union[SlabScenario, TrapScenario, VacuumLatticeScenario, CouplingScenario, BudgetScenario,
          SpinsScenario, SweepScenario],
    Field(discriminator="kind"),
]
_ADAPTER = TypeAdapter(Scenario)


def _error_text(exc):
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        parts.append(f"{loc}: {err['msg']}" if loc else err["msg"])
    return "; ".join(parts)


def validate(data, kind=None):
    """Validate a raw mapping; ``kind`` fills in or cross-checks ``data['kind']``."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    data = dict(data)
    if kind is not None:
        if data.setdefault("kind", kind) != kind:
            raise ConfigError(f"config kind {data['kind']!r} does not match subcommand {kind!r}")
    try:
        return _ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise ConfigError(_error_text(exc)) from None


def load(path, kind=None):
    path = Path(path)
    try:
        raw = yaml.load(path.read_text(), Loader=_Loader)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from None
    return validate(raw if raw is not None else {}, kind)


def dump(config):
    """Canonical JSON-compatible mapping (round-trips through :func:`validate`)."""
    return config.model_dump(mode="json")


def canonical_json(config):
    return json.dumps(dump(config), sort_keys=True, separators=(",", ":"))


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def with_override(config, dotted, value):
    """Copy of ``config`` with the field at ``dotted`` (e.g. ``patch.Q``) replaced."""
    data = copy.deepcopy(dump(config))
    node = data
    keys = dotted.split(".")
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node or not isinstance(node[key], dict):
            raise ConfigError(f"sweep axis {dotted!r}: no section {key!r}")
        node = node[key]
    if keys[-1] not in node:
        raise ConfigError(f"sweep axis {dotted!r}: unknown field {keys[-1]!r}")
    node[keys[-1]] = value
    return validate(data)


def referenced_files(config):
    """Paths of data files the scenario reads (relative paths stay relative)."""
    if isinstance(config, SweepScenario):
        return referenced_files(config.base)
    out = []
    cp = getattr(config, "cp", None)
    if cp is not None and cp.variant == "ingested_grid":
        out.append(cp.grid_file)
    bz = getattr(config, "bz", None)
    if bz is not None and bz.band_file:
        out.append(bz.band_file)
    return out
