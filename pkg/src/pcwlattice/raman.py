"""Lambda-scheme reduction to XXZ spin models and the coherence budget."""
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .bandcoupling import (
    BandGrid,
    BandPatch,
    bz_integrate_bandgap,
    gamma_2d,
    interaction_length,
    kernel_bandgap,
    kernel_dispersive,
    kernel_params,
    onsite_dispersive,
    onsite_shift,
    split_dispersive,
)
from .constants import TWO_PI
from .errors import AdiabaticityError, DomainError, ResonanceError
from .special import k0

ADIABATIC_WARN = 10.0
ADIABATIC_FAIL = 3.0


class AdiabaticityWarning(UserWarning):
    """Single-photon detuning is not much larger than the drive."""


class PerturbativeWarning(UserWarning):
    """Drive factor h is not small: second-order elimination is doubtful."""


class BoundaryOptimumWarning(UserWarning):
    """Maximum of the scanned quantity sits on the edge of the range."""


def _check_adiabatic(omega, delta, label):
    if omega == 0:
        return
    if delta == 0:
        raise ResonanceError(f"{label}: single-photon detuning vanishes")
    ratio = abs(delta) / abs(omega)
    if ratio < ADIABATIC_FAIL:
        raise AdiabaticityError(f"{label}: |Delta|/Omega = {ratio:.3g} < {ADIABATIC_FAIL:g}")
    if ratio < ADIABATIC_WARN:
        warnings.warn(f"{label}: |Delta|/Omega = {ratio:.3g} < {ADIABATIC_WARN:g}", AdiabaticityWarning, stacklevel=4)


@dataclass(frozen=True)
class LambdaScheme:
    """Two lasers driving ``g1 -> e`` and ``g2 -> e`` near a band edge ``omega_c``.

    All quantities in rad/s. ``Delta_1``/``Delta_2`` may be given for a
    consistency check; they are otherwise derived from levels and lasers.
    """

    Omega_1: float
    Omega_2: float
    omega_L1: float
    omega_L2: float
    omega_g1: float
    omega_g2: float
    omega_e: float
    omega_c: float
    Delta_1: Optional[float] = None
    Delta_2: Optional[float] = None

    def __post_init__(self):
        d1 = self.omega_e - (self.omega_g1 + self.omega_L1)
        d2 = self.omega_e - (self.omega_g2 + self.omega_L2)
        scale = abs(self.omega_e) * 1e-12 + 1e-6
        for given, derived, name in ((self.Delta_1, d1, "Delta_1"), (self.Delta_2, d2, "Delta_2")):
            if given is not None and abs(given - derived) > max(scale, 1e-9 * abs(derived)):
                raise DomainError(f"{name}={given} inconsistent with levels and lasers ({derived})")
        object.__setattr__(self, "Delta_1", d1)
        object.__setattr__(self, "Delta_2", d2)
        _check_adiabatic(self.Omega_1, d1, "laser 1")
        _check_adiabatic(self.Omega_2, d2, "laser 2")

    @classmethod
    def from_detunings(cls, Omega_1, Omega_2, Delta_1, Delta_z, Delta_xy, omega_c, omega_hf=0.0):
        """Scheme with ``omega_g1 = 0`` realising the requested detunings.

        ``Delta_2`` follows from ``Delta_xy - Delta_z = Delta_1 - Delta_2``.
        """
        omega_L1 = omega_c + Delta_z
        omega_e = omega_L1 + Delta_1
        delta_2 = Delta_1 - Delta_xy + Delta_z
        omega_L2 = omega_e - omega_hf - delta_2
        return cls(Omega_1, Omega_2, omega_L1, omega_L2, 0.0, omega_hf, omega_e, omega_c)


def stark_shifts(scheme):
    """Light shifts ``(-Omega_1^2 / 4 Delta_1, -Omega_2^2 / 4 Delta_2)``."""
    out = []
    for om, de in ((scheme.Omega_1, scheme.Delta_1), (scheme.Omega_2, scheme.Delta_2)):
        if de == 0:
            raise ResonanceError("single-photon detuning vanishes")
        out.append(-om * om / (4.0 * de))
    return tuple(out)


def raman_rabi(scheme):
    """Two-photon coupling ``-(Omega_1 Omega_2 / 4)(1/Delta_1 + 1/Delta_2)``."""
    if scheme.Delta_1 == 0 or scheme.Delta_2 == 0:
        raise ResonanceError("single-photon detuning vanishes")
    return -0.25 * scheme.Omega_1 * scheme.Omega_2 * (1.0 / scheme.Delta_1 + 1.0 / scheme.Delta_2)


@dataclass(frozen=True)
class EffectiveDetunings:
    Delta_xy: float
    Delta_z: float
    regime_xy: str
    regime_z: str


def _regime(delta):
    if delta < 0:
        return "bandgap"
    if delta > 0:
        return "dispersive"
    return "boundary"


def effective_detunings(scheme):
    """Band-edge referenced detunings of the two exchange channels."""
    d_xy = scheme.omega_g2 - scheme.omega_g1 + scheme.omega_L2 - scheme.omega_c
    d_z = scheme.omega_L1 - scheme.omega_c
    return EffectiveDetunings(d_xy, d_z, _regime(d_xy), _regime(d_z))


def h_factor(scheme, beta):
    """Drive factor ``(Omega_l / 2 Delta_beta)^2`` with ``l = 1`` for z, ``l = 2`` for xy."""
    det = effective_detunings(scheme)
    if beta == "z":
        omega, delta = scheme.Omega_1, det.Delta_z
    elif beta == "xy":
        omega, delta = scheme.Omega_2, det.Delta_xy
    else:
        raise ValueError(f"beta must be 'xy' or 'z', got {beta!r}")
    if delta == 0:
        raise ResonanceError(f"Delta_{beta} = 0: channel sits on the band edge")
    h = (omega / (2.0 * delta)) ** 2
    if h >= 1.0:
        warnings.warn(f"h_{beta} = {h:.3g} >= 1", PerturbativeWarning, stacklevel=2)
    return h


# ---------------------------------------------------------------- spin model


@dataclass(frozen=True)
class SpinModel:
    """XXZ couplings and collective dissipation for ``N`` sites (rad/s).

    ``Jz``/``Jxy`` diagonals hold on-site shifts; they enter the dynamics as
    local ``sigma^z`` energies, separately from the ordered-pair exchange.
    """

    sites: np.ndarray
    Jz: np.ndarray
    Jxy: np.ndarray
    gamma_z: np.ndarray
    gamma_xy: np.ndarray
    regime_z: str = "bandgap"
    regime_xy: str = "bandgap"
    h_z: float = field(default=1.0)
    h_xy: float = field(default=1.0)

    def __post_init__(self):
        n = len(self.sites)
        for name in ("Jz", "Jxy", "gamma_z", "gamma_xy"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (n, n):
                raise DomainError(f"{name} must be {n}x{n}")
            if not np.allclose(m, m.T, rtol=1e-12, atol=0.0):
                raise DomainError(f"{name} must be symmetric")
            object.__setattr__(self, name, m)
        for name, regime in (("gamma_z", self.regime_z), ("gamma_xy", self.regime_xy)):
            m = getattr(self, name)
            if regime == "bandgap" and np.any(m != 0):
                raise DomainError(f"{name} must vanish in the bandgap regime")
            if n and np.linalg.eigvalsh(m).min() < -1e-9 * max(np.abs(m).max(), 1e-300):
                raise DomainError(f"{name} is not positive semidefinite")

    @property
    def n_sites(self):
        return len(self.sites)

    @classmethod
    def uniform(cls, n, Jz=0.0, Jxy=0.0, gamma_z=0.0, gamma_xy=0.0):
        """All-to-all model with equal off-diagonal couplings; gammas fill every entry."""
        off = 1.0 - np.eye(n)
        full = np.ones((n, n))
        sites = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
        return cls(
            sites, Jz * off, Jxy * off, gamma_z * full, gamma_xy * full,
            "dispersive" if gamma_z else "bandgap", "dispersive" if gamma_xy else "bandgap",
        )


def _channel(species, coupling, delta, h, sites, photon):
    n = len(sites)
    J = np.zeros((n, n))
    G = np.zeros((n, n))
    if isinstance(coupling, BandGrid):
        if delta >= 0:
            raise DomainError("zone quadrature supports the bandgap regime only")
        cache = {}
        for i in range(n):
            for j in range(i, n):
                r = np.abs(sites[j] - sites[i])
                key = tuple(np.round(np.sort(r) / coupling.d, 9))
                if key not in cache:
                    cache[key] = bz_integrate_bandgap(coupling, species, photon, r)
                J[i, j] = J[j, i] = h * cache[key]
        return J, G
    params = kernel_params(species, coupling, delta)
    k_cut = math.pi / coupling.d
    if params.regime == "bandgap":
        J[np.diag_indices(n)] = h * onsite_shift(params, k_cut)
    else:
        g_ii, j_ii = split_dispersive(onsite_dispersive(params, k_cut))
        J[np.diag_indices(n)] = h * j_ii
        G[np.diag_indices(n)] = h * g_ii
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.hypot(*(sites[j] - sites[i])))
            if params.regime == "bandgap":
                J[i, j] = J[j, i] = h * float(kernel_bandgap(params, r))
            else:
                g, jj = split_dispersive(h * kernel_dispersive(params, r))
                J[i, j] = J[j, i] = float(jj)
                G[i, j] = G[j, i] = float(g)
    return J, G


def build_spin_model(scheme, species, coupling, sites):
    """Spin model for ``sites`` (``(N, 2)`` positions in m).

    ``coupling`` is a :class:`BandPatch` (closed-form kernels, either regime)
    or a :class:`BandGrid` (zone quadrature, bandgap only; the diagonal is
    the ``r = 0`` quadrature). X-point phase factors are not applied.
    """
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    if sites.shape[1] != 2:
        raise DomainError("sites must be an (N, 2) array of in-plane positions")
    det = effective_detunings(scheme)
    out = {}
    for beta, delta in (("z", det.Delta_z), ("xy", det.Delta_xy)):
        h = h_factor(scheme, beta)
        out[beta] = (h,) + _channel(species, coupling, delta, h, sites, scheme.omega_c + delta)
    return SpinModel(
        sites, out["z"][1], out["xy"][1], out["z"][2], out["xy"][2],
        det.regime_z, det.regime_xy, out["z"][0], out["xy"][0],
    )


# ---------------------------------------------------------------- budget


def kappa_from_q(omega_c, Q):
    """Photon loss rate ``omega_c / Q`` (rad/s)."""
    if not Q > 0:
        raise DomainError("quality factor must be > 0")
    return 0.0 if math.isinf(Q) else omega_c / Q


def kappa_eff(kappa, J, Delta, Gamma_prime):
    """``Gamma' + kappa J / |Delta|`` (rad/s)."""
    if Delta == 0:
        raise ResonanceError("kappa_eff: Delta = 0")
    return Gamma_prime + kappa * J / abs(Delta)


@dataclass(frozen=True)
class BudgetInputs:
    """Everything the cycle count needs besides the detuning.

    ``Gamma_prime`` defaults to ``0.4 Gamma_a`` of ``species``.
    """

    species: object
    patch: BandPatch
    Q: float
    Gamma_prime: Optional[float] = None
    alpha_abs: float = 0.0
    n2: float = 0.0

    @property
    def gamma_prime(self):
        return 0.4 * self.species.Gamma_a if self.Gamma_prime is None else self.Gamma_prime

    @property
    def kappa(self):
        return kappa_from_q(self.patch.omega_c, self.Q)

    def with_patch(self, **changes):
        fields = {k: getattr(self.patch, k) for k in ("omega_c", "A", "L_m", "d", "k_c")}
        fields.update(changes)
        return BudgetInputs(self.species, BandPatch(**fields), self.Q, self.Gamma_prime, self.alpha_abs, self.n2)


@dataclass(frozen=True)
class CoherenceBudget:
    Q: float
    kappa: float
    Gamma_prime: float
    Delta_beta: float
    J: float
    xi: float
    kappa_eff: float
    N_cycles: float
    diverges: bool = False
    alpha_abs: float = 0.0
    n2: float = 0.0


def nearest_neighbour_coupling(inputs, Delta):
    """``Gamma_2d K0(d / xi(Delta))`` without the drive factor (it cancels in the budget)."""
    xi = interaction_length(inputs.patch.A, Delta)
    return gamma_2d(inputs.species, inputs.patch) * k0(inputs.patch.d / xi), xi


def coherence_cycles(inputs, Delta):
    """Exchange cycles ``J / (kappa J / |Delta| + Gamma')`` at detuning ``Delta``."""
    J, xi = nearest_neighbour_coupling(inputs, Delta)
    kap = inputs.kappa
    k_eff = kappa_eff(kap, J, Delta, inputs.gamma_prime)
    if k_eff == 0:
        n_cyc, div = math.inf, True
    else:
        n_cyc, div = J / k_eff, False
    return CoherenceBudget(
        inputs.Q, kap, inputs.gamma_prime, Delta, J, xi, k_eff, n_cyc, div, inputs.alpha_abs, inputs.n2
    )


@dataclass(frozen=True)
class DetuningOptimum:
    Delta_star: float
    N_max: float
    budget: CoherenceBudget
    naive_balance: float
    stationary_Delta: float
    stationarity_residual: float
    on_boundary: bool
    scan_Delta: np.ndarray
    scan_N: np.ndarray
    d: float

    def report(self, species):
        b = self.budget
        return {
            "Q": b.Q,
            "kappa_2pi": b.kappa / TWO_PI,
            "Gamma_prime_over_Gamma_a": b.Gamma_prime / species.Gamma_a,
            "Delta_star_2pi": self.Delta_star / TWO_PI,
            "N_max": self.N_max,
            "J_over_Gamma_a": b.J / species.Gamma_a,
            "xi_over_d": b.xi / self.d,
        }


def optimize_detuning(inputs, Delta_range=(TWO_PI * 1e8, TWO_PI * 1e12), n_scan=241):
    """Detuning magnitude maximising the cycle count in the bandgap regime.

    A log-spaced scan locates the best sample (ties go to the smaller
    detuning), then a golden-section search on ``ln Delta`` refines it.
    Diagnostics: ``naive_balance = |Delta* - kappa J / Gamma'| / Delta*`` and
    the exact stationarity point ``kappa J^2 / (Gamma' L)`` with
    ``L = -dJ/d ln Delta``.
    """
    lo, hi = (abs(float(v)) for v in Delta_range)
    if not 0 < lo < hi:
        raise DomainError("Delta_range must be two distinct nonzero magnitudes")
    grid = np.geomspace(lo, hi, n_scan)
    values = np.array([coherence_cycles(inputs, D).N_cycles for D in grid])
    best = int(np.argmax(values))  # first maximum, i.e. the smallest detuning
    boundary = best in (0, n_scan - 1)
    if boundary:
        warnings.warn("cycle count is monotone over the scanned detuning range", BoundaryOptimumWarning, stacklevel=2)
        d_star = float(grid[best])
    else:
        logs = np.log(grid[best - 1:best + 2])
        res = minimize_scalar(
            lambda x: -coherence_cycles(inputs, math.exp(x)).N_cycles,
            bracket=tuple(logs), method="golden", tol=1e-10,
        )
        d_star = math.exp(res.x)
    budget = coherence_cycles(inputs, d_star)
    gp, kap, J = budget.Gamma_prime, budget.kappa, budget.J
    naive = abs(d_star - kap * J / gp) / d_star if gp > 0 else math.inf
    step = 1e-4
    slope = (nearest_neighbour_coupling(inputs, d_star * math.exp(step))[0]
             - nearest_neighbour_coupling(inputs, d_star * math.exp(-step))[0]) / (2.0 * step)
    stationary = kap * J * J / (gp * -slope) if gp > 0 and slope < 0 else math.inf
    return DetuningOptimum(
        d_star, budget.N_cycles, budget, naive, stationary,
        abs(d_star - stationary) / d_star, boundary, grid, values, inputs.patch.d,
    )


def propagation_loss(alpha, L):
    """Fraction of guided intensity absorbed over length ``L``: ``1 - exp(-alpha L)``."""
    if alpha < 0 or L < 0:
        raise DomainError("propagation_loss needs alpha >= 0 and L >= 0")
    return -math.expm1(-alpha * L)
