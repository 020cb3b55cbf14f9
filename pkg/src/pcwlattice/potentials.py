"""Analytic trapping-potential terms and the scene that sums them.

Sign convention: a detuning ``delta > 0`` is red (attractive FORT), so the
light shift is ``-hbar Omega^2 / delta`` times the local intensity pattern.
The 760 nm side illumination used for Rb D2 is blue, ``delta_SI < 0``, and
its intensity node at ``z_t`` is the trap minimum.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from .constants import C, H, HBAR
from .errors import DomainError, GridDataError, InfeasibleTrapError, RangeError, UndefinedContrastError

# Curvature balance V_SI''(z_t) + V_CP''(z_t) = 0 with the potentials as
# implemented here gives 3/8; see stability_intensity_bound.
STABILITY_PREFACTOR = 3.0 / 8.0


def _index_factor(n):
    return (n * n - 1.0) / (n * n + 1.0)


# ---------------------------------------------------------------- Casimir-Polder


def cp_plane(species, n, z):
    """Casimir-Polder energy (J) at height ``z`` above a half-space of index ``n``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("cp_plane: height must be > 0")
    v = -(1.0 / 16.0) * _index_factor(n) * HBAR * species.Gamma_a / (species.k_a * z) ** 3
    return v[()] if v.ndim == 0 else v


def cp_hole_factor(z, R):
    """Electrostatic on-axis reduction of the plane CP potential above a hole of radius ``R``."""
    z = np.asarray(z, dtype=float)
    R = np.asarray(R, dtype=float)
    if np.any(z <= 0) or np.any(R <= 0):
        raise DomainError("cp_hole_factor: z and R must be > 0")
    zz = z * z
    rr = R * R
    f = (
        0.5
        + np.arctan((zz - rr) / (2.0 * R * z)) / math.pi
        + 2.0 * z * R * (zz - rr) / (math.pi * (rr + zz) ** 2)
    )
    return f[()] if f.ndim == 0 else f


# ---------------------------------------------------------------- optical terms


@dataclass(frozen=True)
class SIBeamParams:
    """Counter-propagating side-illumination pair along z."""

    Omega_SI: float
    lambda_SI: float
    delta_SI: float
    phi: float = 0.0

    def __post_init__(self):
        if self.delta_SI == 0:
            raise DomainError("side illumination detuning must be nonzero")
        if self.Omega_SI < 0:
            raise DomainError("Omega_SI must be >= 0")

    @property
    def k_SI(self):
        return 2.0 * math.pi / self.lambda_SI

    @classmethod
    def from_wavelengths(cls, species, Omega_SI, lambda_SI, phi=0.0):
        """Detuning fixed by the wavelengths: ``delta = omega_a - omega_SI``."""
        delta = 2.0 * math.pi * C * (1.0 / species.lambda_a - 1.0 / lambda_SI)
        return cls(Omega_SI, lambda_SI, delta, phi)


def si_node_height(phi, k_SI, z_ref=0.0):
    """Height of the intensity node selected by the relative phase ``phi``.

    For fields ``E exp(ikz)`` and ``E exp(i phi) exp(-ikz)`` the intensity is
    ``cos^2(k z - phi/2)``; the node nearest above ``z_ref`` is returned.
    """
    period = math.pi / k_SI
    z0 = (0.5 * math.pi + 0.5 * phi) / k_SI
    return z_ref + (z0 % period)


def si_potential(params, z, z_t):
    """Side-illumination light shift ``-hbar Omega^2/delta sin^2(k (z - z_t))`` (J)."""
    z = np.asarray(z, dtype=float)
    v = -(HBAR * params.Omega_SI**2 / params.delta_SI) * np.sin(params.k_SI * (z - z_t)) ** 2
    return v[()] if v.ndim == 0 else v


def si_depth(params):
    """Peak-to-peak modulation ``hbar Omega^2 / |delta|`` of the SI potential (J)."""
    return HBAR * params.Omega_SI**2 / abs(params.delta_SI)


@dataclass(frozen=True)
class GMLatticeParams:
    """Guided-mode standing-wave FORT above the slab surface."""

    Omega_GM: float
    delta: float
    k_par: float
    beta_decay: float
    z_surface: float = 0.0
    pattern: str = "incoherent_xy_sum"

    def __post_init__(self):
        if self.delta == 0:
            raise DomainError("guided-mode detuning must be nonzero")
        if not self.beta_decay > 0:
            raise DomainError("beta_decay must be > 0")
        if self.pattern not in ("incoherent_xy_sum", "single_axis"):
            raise DomainError(f"unknown GM pattern {self.pattern!r}")

    @property
    def period(self):
        return math.pi / self.k_par


def gm_pattern(params, x, y):
    """In-plane intensity pattern normalised to a global maximum of 1."""
    cx = np.cos(params.k_par * np.asarray(x, dtype=float)) ** 2
    if params.pattern == "single_axis":
        return cx + 0.0 * np.asarray(y, dtype=float)
    cy = np.cos(params.k_par * np.asarray(y, dtype=float)) ** 2
    return 0.5 * (cx + cy)


def gm_potential(params, x, y, z):
    """Guided-mode light shift (J); decays as ``exp(-2 beta (z - z_surface))``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < params.z_surface):
        raise DomainError("gm_potential: point below the slab surface")
    v = (
        -(HBAR * params.Omega_GM**2 / params.delta)
        * np.exp(-2.0 * params.beta_decay * (z - params.z_surface))
        * gm_pattern(params, x, y)
    )
    return v[()] if np.ndim(v) == 0 else v


# ---------------------------------------------------------------- CP models


@dataclass(frozen=True)
class CPGrid:
    """Sampled CP landscape, values in J on a rectilinear (x, y, z) grid in m."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    values: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("x", "y", "z"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if axis.ndim != 1 or axis.size < 2 or np.any(np.diff(axis) <= 0):
                raise GridDataError(f"CP grid axis {name} must be strictly increasing with >= 2 points")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.x), len(self.y), len(self.z)):
            raise GridDataError(f"CP grid values shape {vals.shape} does not match axes")
        if not np.all(np.isfinite(vals)):
            raise GridDataError("CP grid values must be finite")

    def is_uniform(self):
        return all(
            np.allclose(np.diff(a), np.diff(a)[0], rtol=1e-9, atol=0.0)
            for a in (np.asarray(self.x), np.asarray(self.y), np.asarray(self.z))
        )

    def interpolator(self, method="linear"):
        """Callable on ``(..., 3)`` points; ``linear`` (trilinear) or ``cubic`` (uniform axes only)."""
        if method not in self._cache:
            if method == "linear":
                fn = RegularGridInterpolator(
                    (np.asarray(self.x), np.asarray(self.y), np.asarray(self.z)),
                    np.asarray(self.values, dtype=float),
                    method="linear",
                    bounds_error=True,
                )
            elif method == "cubic":
                fn = _CubicGrid(self)
            else:
                raise DomainError(f"unknown CP interpolation {method!r}")
            self._cache[method] = fn
        return self._cache[method]


class _CubicGrid:
    # C2 tricubic B-spline through the samples; smooth enough for
    # finite-difference Hessians, unlike the trilinear interpolant
    def __init__(self, grid):
        if not grid.is_uniform():
            raise DomainError("cubic CP interpolation needs uniform axes")
        self.origin = np.array([grid.x[0], grid.y[0], grid.z[0]], dtype=float)
        self.step = np.array([grid.x[1] - grid.x[0], grid.y[1] - grid.y[0], grid.z[1] - grid.z[0]], dtype=float)
        self.upper = np.array([len(grid.x), len(grid.y), len(grid.z)], dtype=float) - 1.0
        self.coeffs = ndimage.spline_filter(np.asarray(grid.values, dtype=float), order=3, mode="nearest")

    def __call__(self, pts):
        idx = (np.asarray(pts, dtype=float) - self.origin) / self.step
        if np.any(idx < -1e-9) or np.any(idx > self.upper + 1e-9):
            raise ValueError("one of the requested points is outside the grid")
        idx = np.clip(idx, 0.0, self.upper)
        return ndimage.map_coordinates(self.coeffs, idx.T, order=3, mode="nearest", prefilter=False)


@dataclass(frozen=True)
class CPModel:
    """``variant`` is ``analytic_plane``, ``analytic_hole`` or ``ingested_grid``.

    Analytic variants measure height from ``z_surface``. The hole variant
    applies the on-axis electrostatic factor everywhere, so it is only a
    fair estimate close to the hole axis.
    """

    variant: str
    n: float = 1.0
    R: Optional[float] = None
    grid: Optional[CPGrid] = None
    z_surface: float = 0.0
    interpolation: str = "linear"

    def __post_init__(self):
        if self.variant in ("analytic_plane", "analytic_hole"):
            if not self.n > 1.0:
                raise DomainError("analytic CP models need n > 1")
            if self.variant == "analytic_hole" and not (self.R and self.R > 0):
                raise DomainError("analytic_hole needs a positive hole radius R")
        elif self.variant == "ingested_grid":
            if self.grid is None:
                raise DomainError("ingested_grid CP model needs a grid")
            if self.interpolation not in ("linear", "cubic"):
                raise DomainError(f"unknown CP interpolation {self.interpolation!r}")
            if self.interpolation == "cubic" and not self.grid.is_uniform():
                raise DomainError("cubic CP interpolation needs uniform axes")
        else:
            raise DomainError(f"unknown CP variant {self.variant!r}")


def cp_potential(model, species, x, y, z):
    if model.variant == "ingested_grid":
        pts = np.stack(np.broadcast_arrays(
            np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(z, dtype=float)
        ), axis=-1)
        try:
            out = model.grid.interpolator(model.interpolation)(pts.reshape(-1, 3)).reshape(pts.shape[:-1])
        except ValueError as exc:
            raise RangeError(f"CP grid term: query outside the sampled volume ({exc})") from None
        return out[()] if out.ndim == 0 else out
    h = np.asarray(z, dtype=float) - model.z_surface
    v = cp_plane(species, model.n, h)
    if model.variant == "analytic_hole":
        v = v * cp_hole_factor(h, model.R)
    shape = np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(z))
    return np.broadcast_to(v, shape)[()] if shape else v


# ---------------------------------------------------------------- scene


@dataclass(frozen=True)
class PcwGeometry:
    n: float
    W: float
    d: float
    R: float = 0.0
    h: float = 0.0
    lattice: str = "square"


@dataclass(frozen=True)
class CPTerm:
    model: CPModel
    enabled: bool = True
    name: str = "cp"


@dataclass(frozen=True)
class SITerm:
    params: SIBeamParams
    z_t: float
    enabled: bool = True
    name: str = "si"


@dataclass(frozen=True)
class GMTerm:
    params: GMLatticeParams
    enabled: bool = True
    name: str = "gm"


@dataclass(frozen=True)
class TrapScene:
    species: object
    terms: tuple = ()
    geometry: Optional[PcwGeometry] = None

    def with_terms(self, *terms):
        return replace(self, terms=tuple(terms))

    def enabled_terms(self):
        return [t for t in self.terms if t.enabled]

    def __call__(self, x, y, z):
        return total_potential(self, x, y, z)


def term_potential(term, species, x, y, z):
    if isinstance(term, CPTerm):
        return cp_potential(term.model, species, x, y, z)
    if isinstance(term, SITerm):
        v = si_potential(term.params, z, term.z_t)
        shape = np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(z))
        return np.broadcast_to(v, shape)[()] if shape else v
    if isinstance(term, GMTerm):
        return gm_potential(term.params, x, y, z)
    if callable(term):
        return term(x, y, z)
    raise TypeError(f"unsupported potential term {term!r}")


def total_potential(scene, x, y, z):
    """Sum of the enabled terms of ``scene`` at ``(x, y, z)`` (J). Broadcasts."""
    shape = np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(z))
    total = np.zeros(shape)
    for term in scene.terms:
        if getattr(term, "enabled", True):
            try:
                total = total + term_potential(term, scene.species, x, y, z)
            except RangeError as exc:
                raise RangeError(f"term {getattr(term, 'name', term)!r}: {exc}") from None
    return total[()] if total.ndim == 0 else total


# ---------------------------------------------------------------- derived quantities


def stability_intensity_bound(species, n, z_t, delta_SI, k_SI, prefactor=STABILITY_PREFACTOR):
    """Smallest SI Rabi frequency (rad/s) giving positive vertical curvature at ``z_t``.

    ``Omega_min^2 = prefactor * (n^2-1)/(n^2+1) * |delta_SI| Gamma_a
    / ((k_a z_t)^3 (k_SI z_t)^2)``. The default prefactor 3/8 is the exact
    balance of ``V_SI''`` against ``V_CP''`` for :func:`si_potential` and
    :func:`cp_plane`.
    """
    if not (z_t > 0 and k_SI > 0):
        raise DomainError("stability_intensity_bound: z_t and k_SI must be > 0")
    if delta_SI == 0:
        raise DomainError("stability_intensity_bound: delta_SI must be nonzero")
    num = prefactor * _index_factor(n) * abs(delta_SI) * species.Gamma_a
    den = (species.k_a * z_t) ** 3 * (k_SI * z_t) ** 2
    return math.sqrt(num / den)


def contrast(field_plane):
    """``(max - min) / (max + min)`` of a sampled nonnegative intensity plane."""
    arr = np.asarray(field_plane, dtype=float)
    if arr.size == 0:
        raise DomainError("contrast: empty plane")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("contrast: samples must be finite and nonnegative")
    hi = float(arr.max())
    lo = float(arr.min())
    if hi + lo == 0.0:
        raise UndefinedContrastError("contrast of an all-zero plane is undefined")
    return (hi - lo) / (hi + lo)


def omega_conf(species, d, C_contrast, delta_lambda_inv):
    """Rabi frequency (rad/s) that restores ``2 omega_t = V_d`` at contrast ``C``."""
    if not d > 0:
        raise DomainError("omega_conf: d must be > 0")
    if C_contrast == 0:
        raise InfeasibleTrapError("zero contrast cannot confine atoms at any Rabi frequency")
    if not 0.0 < C_contrast <= 1.0:
        raise DomainError("omega_conf: contrast must lie in (0, 1]")
    return math.sqrt(2.0 * H * C * abs(delta_lambda_inv) / (species.mass * d * d * C_contrast))


def scattering_rate(V, delta, species):
    """Photon scattering rate (rad/s) of a FORT of depth ``V`` (J) at detuning ``delta``."""
    if delta == 0:
        raise DomainError("scattering_rate: detuning must be nonzero")
    return (np.asarray(V) / HBAR) * species.Gamma_a / abs(delta)


def nonlinear_phase(n2, intensity, thickness, wavelength):
    """Kerr phase ``2 pi n2 I W / lambda`` (rad), SI units throughout."""
    return 2.0 * math.pi * n2 * intensity * thickness / wavelength
