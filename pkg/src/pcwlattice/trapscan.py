"""Grid sampling of trap scenes, minimum search and harmonic characterisation."""
import hashlib
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._accel import njit, resolve_backend
from .constants import H
from .errors import DomainError, NotAMinimumError, RangeError

# Reference lattice depth (in recoils) for tunnelling-versus-spacing curves.
DEFAULT_DEPTH_RECOILS = 15.0


class OutOfValidityWarning(UserWarning):
    """Formula evaluated outside its asymptotic range of validity."""


@dataclass(frozen=True)
class PotentialField:
    """Energy samples (J) on a rectilinear grid; axes in m."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    values: np.ndarray
    scene_hash: str = ""

    @property
    def axes(self):
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class MinimumCandidate:
    position: tuple
    value: float
    index: tuple


@dataclass(frozen=True)
class TrapSite:
    position: tuple
    value: float
    depth_per_axis: tuple
    frequencies: tuple
    hessian: np.ndarray
    principal_axes: np.ndarray

    def report_row(self, species=None, d=None):
        row = {
            "x_nm": self.position[0] * 1e9,
            "y_nm": self.position[1] * 1e9,
            "z_nm": self.position[2] * 1e9,
            "Vd_x_over_h_Hz": self.depth_per_axis[0] / H,
            "Vd_y_over_h_Hz": self.depth_per_axis[1] / H,
            "Vd_z_over_h_Hz": self.depth_per_axis[2] / H,
            "nu_x_Hz": self.frequencies[0] / (2 * math.pi),
            "nu_y_Hz": self.frequencies[1] / (2 * math.pi),
            "nu_z_Hz": self.frequencies[2] / (2 * math.pi),
        }
        if species is not None and d is not None:
            lateral = min(self.depth_per_axis[0], self.depth_per_axis[1])
            row["s"] = depth_in_recoils(lateral, species, d)
        return row


# ---------------------------------------------------------------- sampling


def _scene_hash(scene):
    return hashlib.sha256(repr(scene).encode()).hexdigest()[:16]


def evaluate_grid(scene, x, y, z):
    """Sample ``scene(x, y, z)`` on the tensor grid of the three axes."""
    axes = [np.atleast_1d(np.asarray(a, dtype=float)) for a in (x, y, z)]
    for name, a in zip("xyz", axes):
        if a.size > 1 and np.any(np.diff(a) <= 0):
            raise DomainError(f"axis {name} must be strictly increasing")
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    values = np.asarray(scene(X, Y, Z), dtype=float)
    values = np.broadcast_to(values, X.shape).copy()
    return PotentialField(*axes, values, scene_hash=_scene_hash(scene))


# ---------------------------------------------------------------- minima


@njit
def _strict_minima_nb(v):
    nx, ny, nz = v.shape
    rx = 1 if nx > 1 else 0
    ry = 1 if ny > 1 else 0
    rz = 1 if nz > 1 else 0
    out = np.zeros(v.shape, dtype=np.bool_)
    for i in range(rx, nx - rx):
        for j in range(ry, ny - ry):
            for k in range(rz, nz - rz):
                c = v[i, j, k]
                ok = True
                for di in range(-rx, rx + 1):
                    for dj in range(-ry, ry + 1):
                        for dk in range(-rz, rz + 1):
                            if di == 0 and dj == 0 and dk == 0:
                                continue
                            if v[i + di, j + dj, k + dk] <= c:
                                ok = False
                                break
                        if not ok:
                            break
                    if not ok:
                        break
                out[i, j, k] = ok
    return out


def _strict_minima_np(v):
    shape = v.shape
    reach = [1 if n > 1 else 0 for n in shape]
    core = tuple(slice(r, n - r) for r, n in zip(reach, shape))
    centre = v[core]
    mask = np.ones(centre.shape, dtype=bool)
    for di in range(-reach[0], reach[0] + 1):
        for dj in range(-reach[1], reach[1] + 1):
            for dk in range(-reach[2], reach[2] + 1):
                if di == dj == dk == 0:
                    continue
                sl = tuple(
                    slice(r + o, n - r + o) for r, n, o in zip(reach, shape, (di, dj, dk))
                )
                mask &= v[sl] > centre
    out = np.zeros(shape, dtype=bool)
    out[core] = mask
    return out


def strict_local_minima(values, backend=None):
    """Boolean mask of strict minima over the 26-neighbourhood.

    Singleton axes carry no neighbours; boundary samples of the other axes
    are never reported.
    """
    v = np.ascontiguousarray(values, dtype=float)
    if v.ndim != 3:
        raise DomainError("expected a 3-D array of samples")
    for n in v.shape:
        if n == 2:
            raise DomainError("non-singleton axes need at least 3 samples")
    if resolve_backend(backend) == "numba":
        return _strict_minima_nb(v)
    return _strict_minima_np(v)


def _vertex_offset(xm, x0, xp, fm, f0, fp):
    # vertex of the parabola through three (possibly unevenly spaced) samples
    d1 = (f0 - fm) / (x0 - xm)
    d2 = (fp - f0) / (xp - x0)
    curv = (d2 - d1) / (xp - xm)
    if curv <= 0:
        return 0.0, 0.0
    slope0 = d1 + curv * (x0 - xm)
    shift = -slope0 / (2.0 * curv)
    half = 0.5 * min(x0 - xm, xp - x0)
    shift = max(-half, min(half, shift))
    return shift, slope0 * shift + curv * shift * shift


def find_minima(field, backend=None):
    """Strict local minima of ``field`` refined by per-axis parabolic interpolation.

    Sorted from deepest to shallowest; ties keep grid order.
    """
    mask = strict_local_minima(field.values, backend=backend)
    axes = field.axes
    out = []
    for idx in zip(*np.nonzero(mask)):
        pos = []
        value = float(field.values[idx])
        correction = 0.0
        for ax, a in enumerate(axes):
            i = idx[ax]
            if a.size == 1:
                pos.append(float(a[0]))
                continue
            lo = list(idx)
            hi = list(idx)
            lo[ax] -= 1
            hi[ax] += 1
            shift, dv = _vertex_offset(
                a[i - 1], a[i], a[i + 1],
                field.values[tuple(lo)], field.values[idx], field.values[tuple(hi)],
            )
            pos.append(float(a[i] + shift))
            correction += dv
        out.append(MinimumCandidate(tuple(pos), value + correction, tuple(int(i) for i in idx)))
    out.sort(key=lambda m: (m.value, m.index))
    return out


# ---------------------------------------------------------------- characterisation


def _hessian_fd(f, p, h):
    hess = np.empty((3, 3))
    f0 = f(*p)
    e = np.eye(3) * h
    for a in range(3):
        hess[a, a] = (f(*(p + e[a])) - 2.0 * f0 + f(*(p - e[a]))) / (h * h)
        for b in range(a + 1, 3):
            val = (
                f(*(p + e[a] + e[b])) - f(*(p + e[a] - e[b]))
                - f(*(p - e[a] + e[b])) + f(*(p - e[a] - e[b]))
            ) / (4.0 * h * h)
            hess[a, b] = hess[b, a] = val
    return hess


def hessian(scene, position, step):
    """Central-difference Hessian (J/m^2) with one Richardson extrapolation."""
    p = np.asarray(position, dtype=float)

    def f(x, y, z):
        return float(scene(x, y, z))

    coarse = _hessian_fd(f, p, step)
    fine = _hessian_fd(f, p, 0.5 * step)
    return (4.0 * fine - coarse) / 3.0


def _side_barrier(values):
    # highest point reached before the profile first turns downhill
    peak = values[0]
    for v in values[1:]:
        if v < peak:
            break
        peak = v
    return peak


def _line_profile(scene, p, direction, t):
    # scenes may be undefined past a surface or outside a sampled grid:
    # keep the profile up to the first point that cannot be evaluated
    pts = p[:, None] + direction[:, None] * t[None, :]
    try:
        return np.asarray(scene(pts[0], pts[1], pts[2]), dtype=float)
    except (DomainError, RangeError):
        pass
    out = []
    for k in range(t.size):
        try:
            out.append(float(scene(*pts[:, k])))
        except (DomainError, RangeError):
            break
    return np.asarray(out)


def characterize(scene, position, mass=None, spacing=1e-9, scan_range=None, n_scan=2001):
    """Harmonic frequencies and per-axis barrier depths of the minimum at ``position``.

    ``spacing`` is the local grid spacing: the finite-difference step is
    ``1e-3 * spacing``. Depths are barrier heights along each principal axis
    out to ``scan_range`` (default ``200 * spacing``) on either side; a side
    that runs into an undefined region (a surface, a grid edge) ends there.
    """
    if mass is None:
        mass = scene.species.mass
    p = np.asarray(position, dtype=float)
    hess = hessian(scene, p, 1e-3 * spacing)
    evals, evecs = np.linalg.eigh(hess)
    if np.any(evals <= 0):
        raise NotAMinimumError(f"Hessian eigenvalues {evals} at {tuple(p)} are not all positive")
    # order principal axes by their dominant Cartesian component
    order = []
    for cart in range(3):
        best = max((c for c in range(3) if c not in order), key=lambda c: abs(evecs[cart, c]))
        order.append(best)
    evals = evals[order]
    evecs = evecs[:, order]

    reach = 200.0 * spacing if scan_range is None else scan_range
    t = np.linspace(0.0, reach, n_scan)
    v0 = float(scene(*p))
    depths = []
    for a in range(3):
        sides = []
        for sign in (1.0, -1.0):
            line = _line_profile(scene, p, sign * evecs[:, a], t)
            sides.append(_side_barrier(line))
        depths.append(min(sides) - v0)
    freqs = tuple(float(math.sqrt(ev / mass)) for ev in evals)
    return TrapSite(tuple(float(c) for c in p), v0, tuple(depths), freqs, hess, evecs)


# ---------------------------------------------------------------- Hubbard scales


@dataclass(frozen=True)
class HubbardScales:
    E_R: float
    s: float
    J_tunnel: float
    nu_t: float


def recoil_energy(species, d):
    """Lattice recoil energy ``h^2 / (8 m d^2)`` (J)."""
    if not d > 0:
        raise DomainError("recoil_energy: d must be > 0")
    return H * H / (8.0 * species.mass * d * d)


def depth_in_recoils(V_d, species, d):
    if V_d < 0:
        raise DomainError("depth_in_recoils: depth must be >= 0")
    return V_d / recoil_energy(species, d)


def sinusoidal_trap_frequency(s, species, d):
    """Harmonic frequency (Hz) at the bottom of ``s E_R sin^2(pi x / d)``: ``2 sqrt(s) E_R / h``."""
    return 2.0 * math.sqrt(s) * recoil_energy(species, d) / H


def tunneling_estimate(s, species, d):
    """Deep-lattice tunnelling ``(4/sqrt(pi)) E_R s^(3/4) exp(-2 sqrt(s))`` (J).

    Below ``s = 1`` the asymptotic form is meaningless; the value is still
    returned but an :class:`OutOfValidityWarning` is emitted.
    """
    if s < 0:
        raise DomainError("tunneling_estimate: s must be >= 0")
    if s < 1:
        warnings.warn(f"tunneling estimate used at s={s} < 1", OutOfValidityWarning, stacklevel=2)
    e_r = recoil_energy(species, d)
    return 4.0 / math.sqrt(math.pi) * e_r * s**0.75 * math.exp(-2.0 * math.sqrt(s))


def hubbard_scales(species, d, V_d):
    s = depth_in_recoils(V_d, species, d)
    return HubbardScales(
        E_R=recoil_energy(species, d),
        s=s,
        J_tunnel=tunneling_estimate(s, species, d),
        nu_t=sinusoidal_trap_frequency(s, species, d),
    )


def tunneling_curve(species, d_values, s=DEFAULT_DEPTH_RECOILS):
    """Maximum tunnelling (J) versus lattice constant at fixed depth ``s``."""
    return np.array([tunneling_estimate(s, species, d) for d in np.atleast_1d(d_values)])
