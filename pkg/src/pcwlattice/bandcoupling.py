"""Photon-mediated couplings near a two-dimensional band edge.

Frequencies are angular. The band curvature ``A`` multiplies ``k^2`` (k in
rad/m) and yields rad/s, so ``1.8e12 um^2/s`` is ``1.8 m^2/s`` here.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator
from scipy.optimize import minimize_scalar

from .constants import C
from .errors import DomainError, GridDataError, WrongRegimeError
from .special import hankel1_0, k0


class FitQualityWarning(UserWarning):
    """Band samples deviate from the parabolic model inside the fit window."""


class FractionalPhaseWarning(UserWarning):
    """Separation is not an integer multiple of the lattice constant."""


@dataclass(frozen=True)
class BandPatch:
    """Parabolic band edge ``omega(k) = omega_c + A |k - k_c|^2``."""

    omega_c: float
    A: float
    L_m: float
    d: float
    k_c: Optional[float] = None

    def __post_init__(self):
        if self.A == 0:
            raise DomainError("band curvature A must be nonzero")
        if not self.L_m > 0:
            raise DomainError("effective mode length must be > 0")
        if not self.d > 0:
            raise DomainError("lattice constant must be > 0")

    @property
    def k_edge(self):
        return math.pi / self.d if self.k_c is None else self.k_c


@dataclass(frozen=True)
class BandGrid:
    """Band samples on one zone quadrant around an X point.

    ``kx``, ``ky`` are measured from the X point (rad/m, ascending from 0);
    ``omega`` and ``L_m`` have shape ``(len(kx), len(ky))``.
    """

    kx: np.ndarray
    ky: np.ndarray
    omega: np.ndarray
    L_m: np.ndarray
    d: float
    r_a: str = ""

    def __post_init__(self):
        for name in ("kx", "ky"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if axis.ndim != 1 or axis.size < 4 or np.any(np.diff(axis) <= 0):
                raise GridDataError(f"band grid axis {name} must be strictly increasing with >= 4 points")
        shape = (len(self.kx), len(self.ky))
        om = np.asarray(self.omega, dtype=float)
        lm = np.asarray(self.L_m, dtype=float)
        if om.shape != shape or lm.shape != shape:
            raise GridDataError(f"band grid arrays must have shape {shape}")
        if not np.all(np.isfinite(om)):
            raise GridDataError("band frequencies must be finite")
        if not (np.all(np.isfinite(lm)) and np.all(lm > 0)):
            raise GridDataError("effective mode lengths must be finite and > 0")

    @classmethod
    def from_function(cls, omega_fn, L_m_fn, d, n=129, extent=None, r_a=""):
        """Sample ``omega_fn(kx, ky)`` and ``L_m_fn(kx, ky)`` on an ``n x n`` quadrant."""
        kmax = math.pi / d if extent is None else extent
        k = np.linspace(0.0, kmax, n)
        KX, KY = np.meshgrid(k, k, indexing="ij")
        lm = np.broadcast_to(np.asarray(L_m_fn(KX, KY), dtype=float), KX.shape).copy()
        return cls(k, k.copy(), np.asarray(omega_fn(KX, KY), dtype=float), lm, d, r_a)

    @classmethod
    def parabolic(cls, omega_c, A_x, L_m, d, A_y=None, n=129, r_a=""):
        """Synthetic (possibly anisotropic) parabolic band with constant ``L_m``."""
        A_y = A_x if A_y is None else A_y
        return cls.from_function(
            lambda kx, ky: omega_c + A_x * kx**2 + A_y * ky**2,
            lambda kx, ky: np.full(np.shape(kx), L_m),
            d, n=n, r_a=r_a,
        )


@dataclass(frozen=True)
class KernelParams:
    Gamma_2d: float
    xi: float
    Delta: float
    regime: str = field(init=False)

    def __post_init__(self):
        if not self.Gamma_2d > 0:
            raise DomainError("Gamma_2d must be > 0")
        if not self.xi > 0:
            raise DomainError("xi must be > 0")
        if self.Delta == 0:
            raise DomainError("Delta = 0 sits on the band edge")
        object.__setattr__(self, "regime", "bandgap" if self.Delta < 0 else "dispersive")


# ---------------------------------------------------------------- closed forms


def gamma_2d(species, patch):
    """Coupling scale ``Gamma_a c sigma / (4 pi A L_m)`` (rad/s)."""
    return species.Gamma_a * C * species.cross_section / (4.0 * math.pi * abs(patch.A) * patch.L_m)


def interaction_length(A, Delta):
    """``sqrt(|A / Delta|)`` (m)."""
    if Delta == 0:
        raise DomainError("interaction length diverges at Delta = 0")
    return math.sqrt(abs(A / Delta))


def kernel_params(species, patch, Delta):
    return KernelParams(gamma_2d(species, patch), interaction_length(patch.A, Delta), Delta)


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("separation must be > 0; use onsite_shift for r = 0")
    return r


def kernel_bandgap(params, r):
    """Coherent coupling ``Gamma_2d K0(r / xi)`` (rad/s), without the drive factor h."""
    if params.regime != "bandgap":
        raise WrongRegimeError("kernel_bandgap needs Delta < 0")
    r = _check_r(r)
    return params.Gamma_2d * k0(r / params.xi)


def kernel_dispersive(params, r):
    """Complex ``(pi/2) Gamma_2d H0^(1)(r / xi) = gamma/2 + i J`` (rad/s)."""
    if params.regime != "dispersive":
        raise WrongRegimeError("kernel_dispersive needs Delta > 0")
    r = _check_r(r)
    return 0.5 * math.pi * params.Gamma_2d * hankel1_0(r / params.xi)


def split_dispersive(value):
    """``(gamma, J)`` from a complex collective coupling ``gamma/2 + i J``."""
    value = np.asarray(value)
    return 2.0 * value.real, value.imag


def onsite_shift(params, k_cutoff):
    """Regularised self coupling ``Gamma_2d ln(1 + (k_cutoff xi)^2) / 2`` (bandgap)."""
    if params.regime != "bandgap":
        raise WrongRegimeError("onsite_shift is defined for the bandgap regime")
    return 0.5 * params.Gamma_2d * math.log1p((k_cutoff * params.xi) ** 2)


def onsite_dispersive(params, k_cutoff):
    """Self coupling ``gamma_ii/2 + i J_ii`` in the dispersive regime.

    The decay part is the ``r -> 0`` limit ``(pi/2) Gamma_2d``. The
    principal-value shift uses the same zone cutoff as :func:`onsite_shift`
    and carries the sign of ``(pi/2) Y0`` at short range.
    """
    if params.regime != "dispersive":
        raise WrongRegimeError("onsite_dispersive needs Delta > 0")
    q2 = (k_cutoff * params.xi) ** 2
    shift = -0.5 * params.Gamma_2d * math.log(abs(q2 - 1.0)) if q2 != 1.0 else 0.0
    return 0.5 * math.pi * params.Gamma_2d + 1j * shift


def xpoint_phase(k_c, r_ij, d=None, atol=1e-9):
    """``(cos(k_c r_x), cos(k_c r_y))`` for the two X points.

    With ``k_c = pi/d`` and lattice separations these are exact signs
    ``(-1)^n, (-1)^m``; non-lattice separations warn and return the cosines.
    """
    rx, ry = (float(c) for c in r_ij)
    out = []
    for comp in (rx, ry):
        t = k_c * comp / math.pi
        n = round(t)
        if abs(t - n) <= atol:
            out.append(1.0 if n % 2 == 0 else -1.0)
        else:
            warnings.warn(f"separation component {comp} is not a lattice multiple", FractionalPhaseWarning, stacklevel=2)
            out.append(math.cos(k_c * comp))
    return tuple(out)


# ---------------------------------------------------------------- mode length


def effective_mode_length(x, y, z, eps, E2, r_a, d):
    """``int eps|E|^2 d^3r / (d^2 eps(r_a)|E(r_a)|^2)`` on a rectilinear grid (m)."""
    axes = tuple(np.asarray(a, dtype=float) for a in (x, y, z))
    density = np.asarray(eps, dtype=float) * np.asarray(E2, dtype=float)
    shape = tuple(a.size for a in axes)
    if density.shape != shape:
        raise DomainError(f"field arrays must have shape {shape}")
    at_atom = float(RegularGridInterpolator(axes, density, method="linear")(np.asarray(r_a, dtype=float)[None, :])[0])
    if not at_atom > 0:
        raise DomainError("field density vanishes at the atom: mode length is infinite")
    total = trapezoid(trapezoid(trapezoid(density, axes[2], axis=2), axes[1], axis=1), axes[0], axis=0)
    return float(total / (d * d * at_atom))


# ---------------------------------------------------------------- curvature fits


@dataclass(frozen=True)
class CurvatureFit:
    A: float
    omega_c: float
    residual: float
    n_samples: int
    direction: str
    poor_fit: bool = False


def _line_fit(k, omega, direction, threshold):
    design = np.column_stack([np.ones_like(k), k * k])
    coef, *_ = np.linalg.lstsq(design, omega - omega[0], rcond=None)
    model = design @ coef
    span = max(float(np.ptp(omega)), 1e-300)
    resid = float(np.sqrt(np.mean((omega - omega[0] - model) ** 2)) / span)
    poor = resid > threshold
    if poor:
        warnings.warn(f"{direction} fit residual {resid:.3g} exceeds {threshold:g}", FitQualityWarning, stacklevel=3)
    return CurvatureFit(float(coef[1]), float(omega[0] + coef[0]), resid, int(k.size), direction, poor)


def fit_curvature(grid, direction="X-M", window=None, threshold=1e-3, species=None, r_ij=None, omega_a=None):
    """Band curvature (m^2 rad/s) from ``grid``.

    ``X-Gamma`` fits along ``kx`` at ``ky = 0``; ``X-M`` along ``ky`` at
    ``kx = 0``. ``window`` bounds ``|k|`` (default a quarter of the sampled
    extent). ``isotropic-fit`` instead returns the single ``A`` whose
    closed-form ``Gamma_2d K0(r / xi)`` best matches the zone quadrature at
    separation ``r_ij`` for every atomic frequency in ``omega_a``.
    """
    if direction in ("X-M", "X-Gamma", "X-Γ"):
        along_x = direction != "X-M"
        k = np.asarray(grid.kx if along_x else grid.ky, dtype=float)
        om = np.asarray(grid.omega[:, 0] if along_x else grid.omega[0, :], dtype=float)
        lim = 0.25 * k[-1] if window is None else window
        sel = k <= lim
        if sel.sum() < 5:
            raise DomainError(f"need >= 5 samples inside the {direction} window, have {int(sel.sum())}")
        return _line_fit(k[sel], om[sel], direction, threshold)
    if direction != "isotropic-fit":
        raise ValueError(f"unknown direction {direction!r}")
    if species is None or r_ij is None or omega_a is None:
        raise ValueError("isotropic-fit needs species, r_ij and omega_a")
    omegas = np.atleast_1d(np.asarray(omega_a, dtype=float))
    r = float(np.hypot(*r_ij))
    targets = np.array([bz_integrate_bandgap(grid, species, w, r_ij) for w in omegas])
    edge = float(np.min(grid.omega))
    L0 = float(grid.L_m[0, 0])

    def model(logA):
        A = math.exp(logA)
        patch = BandPatch(edge, A, L0, grid.d)
        vals = np.array([gamma_2d(species, patch) * k0(r / interaction_length(A, w - edge)) for w in omegas])
        return vals

    def cost(logA):
        return float(np.sum((model(logA) / targets - 1.0) ** 2))

    a_guess = fit_curvature(grid, "X-M", threshold=np.inf).A
    lo, hi = math.log(abs(a_guess) / 100.0), math.log(abs(a_guess) * 100.0)
    res = minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    resid = math.sqrt(res.fun / omegas.size)
    poor = resid > max(threshold, 1e-2)
    if poor:
        warnings.warn(f"isotropic fit residual {resid:.3g}", FitQualityWarning, stacklevel=2)
    return CurvatureFit(math.exp(res.x), edge, resid, int(omegas.size), direction, poor)


# ---------------------------------------------------------------- zone quadrature


def coupling_density(species, omega_k, L_m_k):
    """``|g_k|^2 L^2`` (rad^2 m^2 / s^2 ... per unit k-area), normalised to ``Gamma_2d``.

    ``Gamma_a c sigma omega(k) / (4 L_m(k) omega_a)`` reproduces the
    closed-form kernel ``Gamma_2d K0`` for an isotropic parabolic band.
    """
    return species.Gamma_a * C * species.cross_section * omega_k / (4.0 * L_m_k * species.omega_a)


def _simpson_nodes(breaks):
    breaks = np.unique(breaks)
    h = np.diff(breaks)
    mids = breaks[:-1] + 0.5 * h
    nodes = np.concatenate([breaks, mids])
    w = np.zeros(nodes.size)
    nb = breaks.size
    w[: nb - 1] += h / 6.0
    w[1:nb] += h / 6.0
    w[nb:] += 4.0 * h / 6.0
    order = np.argsort(nodes, kind="stable")
    return nodes[order], w[order]


def _axis_breaks(axis, scale, r_comp, refine):
    kmax = axis[-1]
    pieces = [axis]
    if refine:
        core = scale * np.linspace(0.0, 2.0, 17)
        graded = scale * 2.0 * 1.2 ** np.arange(1, 400)
        graded = graded[graded < kmax]
        pieces += [core[core < kmax], graded]
    breaks = np.unique(np.concatenate(pieces))
    limit = np.min(np.diff(axis))
    if r_comp > 0:
        limit = min(limit, 0.25 / r_comp)
    out = [breaks[:1]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = max(1, int(math.ceil((b - a) / limit - 1e-9)))
        out.append(np.linspace(a, b, m + 1)[1:])
    return np.concatenate(out)


@dataclass(frozen=True)
class QuadratureInfo:
    nodes_x: int
    nodes_y: int
    xi_x: float
    xi_y: float
    refined: bool


def bz_integrate_bandgap(grid, species, omega_a, r_ij, refine=True, full_output=False):
    """Coherent coupling ``J_ij`` (rad/s) from the sampled quadrant around an X point.

    ``8 * sum_quadrant d^2k/(2 pi)^2 |g|^2 L^2 / (omega(k) - omega_a)
    * cos(kx rx) cos(ky ry)``: two X points times four quadrants, with the
    cosine product being the reflection-symmetric form of ``cos(k.r)``.
    Composite Simpson over the stored samples, subdivided to resolve the
    ``1/xi`` peak at ``k = 0`` and the ``cos`` oscillation. The X-point
    phases are not included (see :func:`xpoint_phase`).
    """
    rx, ry = (abs(float(c)) for c in np.broadcast_to(np.asarray(r_ij, dtype=float), (2,)))
    kx = np.asarray(grid.kx, dtype=float)
    ky = np.asarray(grid.ky, dtype=float)
    omega = np.asarray(grid.omega, dtype=float)
    edge = float(omega.min())
    if not omega_a < edge:
        raise WrongRegimeError(
            "atomic frequency lies inside the band (pole in the integrand); use the dispersive kernel"
        )
    gap = edge - omega_a
    spl_w = RectBivariateSpline(kx, ky, omega - edge, kx=3, ky=3, s=0)
    spl_l = RectBivariateSpline(kx, ky, np.asarray(grid.L_m, dtype=float), kx=3, ky=3, s=0)

    # local curvature along each axis sets the peak width sqrt(gap / A)
    a_x = max(float(spl_w(kx[0], ky[0], dx=2)[0, 0]) / 2.0, 1e-300)
    a_y = max(float(spl_w(kx[0], ky[0], dy=2)[0, 0]) / 2.0, 1e-300)
    scale_x = math.sqrt(gap / a_x)
    scale_y = math.sqrt(gap / a_y)
    nx, wx = _simpson_nodes(_axis_breaks(kx, scale_x, rx, refine))
    ny, wy = _simpson_nodes(_axis_breaks(ky, scale_y, ry, refine))

    dw = spl_w(nx, ny)
    lm = spl_l(nx, ny)
    om = edge + dw
    f = coupling_density(species, om, lm) / (dw + gap)
    f *= np.cos(nx * rx)[:, None] * np.cos(ny * ry)[None, :]
    total = 8.0 * float(wx @ f @ wy) / (2.0 * math.pi) ** 2
    if full_output:
        return total, QuadratureInfo(nx.size, ny.size, 1.0 / scale_x, 1.0 / scale_y, refine)
    return total


def gamma_2d_sweep(species, A_values, L_m):
    """``Gamma_2d`` (rad/s) along a curvature axis at fixed mode length."""
    return np.array([
        species.Gamma_a * C * species.cross_section / (4.0 * math.pi * abs(A) * L_m)
        for A in np.atleast_1d(A_values)
    ])
