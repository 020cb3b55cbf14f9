"""Symmetric TE guided modes of a uniform dielectric slab.

Inside the slab the field is ``E_in cos(k_z z)``; outside it decays as
``E_out exp(-beta s)`` with ``s`` the distance from the slab surface. With
``u = k_z W / 2`` and ``R = k_0 W sqrt(n^2 - 1) / 2`` the two dispersion
conditions collapse to ``u tan u = sqrt(R^2 - u^2)``, which has exactly one
root in every interval ``[m pi, m pi + pi/2)`` with ``m pi < R``.
"""
import math
from dataclasses import dataclass

from .errors import DomainError

_BISECT_TOL = 1e-14


@dataclass(frozen=True)
class SlabGeometry:
    n: float
    W: float

    def __post_init__(self):
        if not self.n > 1.0:
            raise DomainError(f"slab index must exceed 1, got {self.n}")
        if not self.W > 0.0:
            raise DomainError(f"slab thickness must be positive, got {self.W}")


@dataclass(frozen=True)
class SlabMode:
    k_z: float
    beta: float
    k_par: float
    E_in: float
    E_out: float
    branch_index: int
    k_0: float
    W: float

    def profile(self, z):
        """Relative field amplitude at height ``z`` measured from the slab centre."""
        half = 0.5 * self.W
        if abs(z) <= half:
            return self.E_in * math.cos(self.k_z * z)
        return self.E_out * math.exp(-self.beta * (abs(z) - half))


def _mismatch(u, radius):
    # u tan u - sqrt(R^2 - u^2), multiplied through by cos u to stay finite
    return u * math.sin(u) - math.cos(u) * math.sqrt(max(radius * radius - u * u, 0.0))


def _bisect(lo, hi, radius):
    f_lo = _mismatch(lo, radius)
    while hi - lo > _BISECT_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = _mismatch(mid, radius)
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_te_modes(slab, lambda0):
    """All symmetric TE branches of ``slab`` at vacuum wavelength ``lambda0``.

    Modes are sorted by ``k_par`` descending, i.e. by increasing branch index.
    Field amplitudes are normalised to ``E_in = 1``.
    """
    if not lambda0 > 0:
        raise DomainError(f"lambda0 must be positive, got {lambda0}")
    k_0 = 2.0 * math.pi / lambda0
    v = k_0 * math.sqrt(slab.n**2 - 1.0)
    radius = 0.5 * v * slab.W
    modes = []
    m = 0
    while m * math.pi < radius:
        lo = m * math.pi
        hi = min(m * math.pi + 0.5 * math.pi, radius)
        u = _bisect(lo, hi, radius)
        k_z = 2.0 * u / slab.W
        beta = math.sqrt(max(v * v - k_z * k_z, 0.0))
        k_par = math.sqrt(k_0 * k_0 * slab.n**2 - k_z * k_z)
        e_out = math.cos(u)
        modes.append(SlabMode(k_z, beta, k_par, 1.0, e_out, m, k_0, slab.W))
        m += 1
    return modes


def min_lattice_constant(n, lambda0):
    """Shortest standing-wave period of a guided mode, ``lambda0 / (2 n)``."""
    if n < 1.0:
        raise DomainError(f"refractive index must be >= 1, got {n}")
    return lambda0 / (2.0 * n)


def standing_wave_period(mode):
    """Intensity period ``pi / k_par`` of counter-propagating copies of ``mode``."""
    return math.pi / mode.k_par


def dispersion_residuals(mode, n):
    """Relative residuals of the two transcendental conditions for ``mode``."""
    tan_res = abs(mode.beta - mode.k_z * math.tan(0.5 * mode.k_z * mode.W))
    circle = mode.k_0**2 * (n**2 - 1.0)
    return (
        tan_res / max(mode.beta, 1e-300),
        abs(mode.k_z**2 + mode.beta**2 - circle) / circle,
    )
